use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A named date range, inclusive at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrisisWindow {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl CrisisWindow {
    pub fn new(name: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let name = name.into();
        if start >= end {
            return Err(Error::Config(format!(
                "crisis window {name}: start {start} is not before end {end}"
            )));
        }
        Ok(Self { name, start, end })
    }
}

#[derive(Debug, Deserialize)]
struct CrisisFile {
    #[serde(rename = "crisis", default)]
    crises: Vec<RawWindow>,
}

// Dates may be TOML local dates or quoted ISO strings.
#[derive(Debug, Deserialize)]
struct RawWindow {
    name: String,
    start: toml::Value,
    end: toml::Value,
}

fn toml_date(name: &str, field: &str, value: &toml::Value) -> Result<NaiveDate> {
    let text = match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Datetime(dt) => dt.to_string(),
        other => {
            return Err(Error::Config(format!(
                "crisis {name}: {field} must be a date, got {other}"
            )))
        }
    };
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d").map_err(|e| {
        Error::Config(format!("crisis {name}: {field} {text:?} is not YYYY-MM-DD ({e})"))
    })
}

const DEFAULT_CRISES: &str = include_str!("../../data/crises.toml");

/// Parses a crisis config: a TOML document of `[[crisis]]` tables with
/// `name`, `start` and `end` (ISO dates).
pub fn parse_crises(text: &str) -> Result<Vec<CrisisWindow>> {
    let file: CrisisFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("crisis config: {e}")))?;
    if file.crises.is_empty() {
        return Err(Error::Config("crisis config defines no windows".into()));
    }
    let mut names = std::collections::HashSet::new();
    file.crises
        .into_iter()
        .map(|w| {
            if !names.insert(w.name.to_lowercase()) {
                return Err(Error::Config(format!("duplicate crisis name {}", w.name)));
            }
            let start = toml_date(&w.name, "start", &w.start)?;
            let end = toml_date(&w.name, "end", &w.end)?;
            CrisisWindow::new(w.name, start, end)
        })
        .collect()
}

pub fn load_crises(path: impl AsRef<std::path::Path>) -> Result<Vec<CrisisWindow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_crises(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// The four crisis periods plus the dot-com super-bubble and peak-COVID
/// sub-periods.
pub fn default_crises() -> Vec<CrisisWindow> {
    parse_crises(DEFAULT_CRISES).expect("bundled crisis config is valid")
}

/// Case-insensitive lookup by name.
pub fn find_crisis<'a>(crises: &'a [CrisisWindow], name: &str) -> Result<&'a CrisisWindow> {
    crises
        .iter()
        .find(|c| c.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let known: Vec<&str> = crises.iter().map(|c| c.name.as_str()).collect();
            Error::Config(format!("unknown crisis {name:?}; known: {}", known.join(", ")))
        })
}
