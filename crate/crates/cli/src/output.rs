use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::Failure;

pub const MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub command: Command,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let mut file = File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Hash of the command with output locations and thread count blanked, so it
/// identifies the analysis rather than where or how fast it ran.
pub fn config_hash(command: &Command) -> String {
    let mut c = command.clone();
    match &mut c {
        Command::Corrdist(a) => blank(&mut a.run),
        Command::Collectivity(a) => blank(&mut a.run),
        Command::Divpath(a) => blank(&mut a.run),
        Command::Align(a) => blank(&mut a.run),
        Command::Search(a) => blank(&mut a.run),
        Command::Matrix(a) => blank(&mut a.run),
        Command::Synth(a) => a.out.clear(),
        Command::Rerun(_) => {}
    }
    let json = serde_json::to_vec(&c).expect("commands serialise");
    hex(&Sha256::digest(json))
}

fn blank(run: &mut crate::args::RunArgs) {
    run.out = PathBuf::new();
    run.threads = 0;
}

/// Collects the files a command writes into one directory.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn register(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
        let path = self.register(name);
        let fail = |e: csv::Error| Failure::config(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        w.flush().map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let path = self.register(name);
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialise");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn digests(&self) -> Result<Vec<FileDigest>, Failure> {
        self.files
            .iter()
            .map(|f| Ok(FileDigest { path: f.clone(), sha256: sha256_file(&self.dir.join(f))? }))
            .collect()
    }
}

pub fn header(fields: &[&str]) -> Vec<String> {
    fields.iter().map(|s| s.to_string()).collect()
}

pub fn read_manifest(path: &Path) -> Result<Manifest, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: invalid manifest: {e}", path.display())))
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), Failure> {
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}
