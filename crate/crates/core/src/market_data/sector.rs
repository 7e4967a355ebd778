use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the eleven GICS sectors.
///
/// Declaration order is the canonical universe order used for allocation
/// vectors and report columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Energy,
    Communications,
    RealEstate,
    Utilities,
    Materials,
    Financials,
    ConsumerStaples,
    ConsumerDiscretionary,
    Industrials,
    InformationTechnology,
    Healthcare,
}

/// The fixed eleven-sector universe.
#[derive(Debug, Clone, Copy, Default)]
pub struct SectorUniverse;

impl SectorUniverse {
    pub const SIZE: usize = 11;

    pub fn sectors(&self) -> &'static [Sector; 11] {
        &Sector::ALL
    }
}

impl Sector {
    pub const ALL: [Sector; 11] = [
        Sector::Energy,
        Sector::Communications,
        Sector::RealEstate,
        Sector::Utilities,
        Sector::Materials,
        Sector::Financials,
        Sector::ConsumerStaples,
        Sector::ConsumerDiscretionary,
        Sector::Industrials,
        Sector::InformationTechnology,
        Sector::Healthcare,
    ];

    /// Position in [`Sector::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::Energy => "Energy",
            Sector::Communications => "Communications",
            Sector::RealEstate => "Real Estate",
            Sector::Utilities => "Utilities",
            Sector::Materials => "Materials",
            Sector::Financials => "Financials",
            Sector::ConsumerStaples => "Consumer staples",
            Sector::ConsumerDiscretionary => "Consumer discretionary",
            Sector::Industrials => "Industrials",
            Sector::InformationTechnology => "Information technology",
            Sector::Healthcare => "Healthcare",
        }
    }

    /// Short ticker-friendly code, used by the synthetic market generator.
    pub fn code(self) -> &'static str {
        match self {
            Sector::Energy => "ENE",
            Sector::Communications => "COM",
            Sector::RealEstate => "REA",
            Sector::Utilities => "UTL",
            Sector::Materials => "MAT",
            Sector::Financials => "FIN",
            Sector::ConsumerStaples => "CST",
            Sector::ConsumerDiscretionary => "CDS",
            Sector::Industrials => "IND",
            Sector::InformationTechnology => "ITC",
            Sector::Healthcare => "HLT",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSector(pub String);

impl fmt::Display for UnknownSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown sector label {:?}", self.0)
    }
}

impl std::error::Error for UnknownSector {}

impl FromStr for Sector {
    type Err = UnknownSector;

    /// Case-insensitive; also accepts the current official GICS spellings
    /// ("Communication Services", "Health Care", ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        let sector = match key.as_str() {
            "energy" => Sector::Energy,
            "communications" | "communicationservices" | "telecommunicationservices" => {
                Sector::Communications
            }
            "realestate" => Sector::RealEstate,
            "utilities" => Sector::Utilities,
            "materials" => Sector::Materials,
            "financials" => Sector::Financials,
            "consumerstaples" => Sector::ConsumerStaples,
            "consumerdiscretionary" => Sector::ConsumerDiscretionary,
            "industrials" => Sector::Industrials,
            "informationtechnology" => Sector::InformationTechnology,
            "healthcare" => Sector::Healthcare,
            _ => return Err(UnknownSector(s.to_string())),
        };
        Ok(sector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Sector::ALL {
            assert_eq!(s.name().parse::<Sector>().unwrap(), s);
            assert_eq!(Sector::ALL[s.index()], s);
        }
    }

    #[test]
    fn aliases_and_rejects() {
        assert_eq!("Health Care".parse::<Sector>().unwrap(), Sector::Healthcare);
        assert_eq!(
            "communication services".parse::<Sector>().unwrap(),
            Sector::Communications
        );
        assert!("Tech".parse::<Sector>().is_err());
    }
}
