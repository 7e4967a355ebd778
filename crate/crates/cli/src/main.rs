mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use crisisdyn::ErrorKind;

use args::{Cli, Command};
use output::{FileDigest, Manifest};

/// A failed run: exit code and one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn data(message: String) -> Self {
        Self { code: 3, message }
    }
}

impl From<crisisdyn::Error> for Failure {
    fn from(e: crisisdyn::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        };
        Self { code, message: e.to_string() }
    }
}

fn configure_threads(command: &Command) -> Result<(), Failure> {
    let threads = match command {
        Command::Corrdist(a) => a.run.threads,
        Command::Collectivity(a) => a.run.threads,
        Command::Divpath(a) => a.run.threads,
        Command::Align(a) => a.run.threads,
        Command::Search(a) => a.run.threads,
        Command::Matrix(a) => a.run.threads,
        Command::Synth(_) | Command::Rerun(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn seed_of(command: &Command) -> Option<u64> {
    match command {
        Command::Corrdist(a) => Some(a.run.seed),
        Command::Collectivity(a) => Some(a.run.seed),
        Command::Divpath(a) => Some(a.run.seed),
        Command::Align(a) => Some(a.run.seed),
        Command::Search(a) => Some(a.run.seed),
        Command::Matrix(a) => Some(a.run.seed),
        Command::Synth(_) | Command::Rerun(_) => None,
    }
}

/// Runs an analysis command and records its manifest.
fn execute(command: &Command) -> Result<Vec<FileDigest>, Failure> {
    configure_threads(command)?;
    let written = match command {
        Command::Corrdist(a) => commands::corrdist(a)?,
        Command::Collectivity(a) => commands::collectivity(a)?,
        Command::Divpath(a) => commands::divpath(a)?,
        Command::Align(a) => commands::align(a)?,
        Command::Search(a) => commands::search(a)?,
        Command::Matrix(a) => commands::matrix(a)?,
        Command::Synth(a) => commands::synth(a)?,
        Command::Rerun(_) => unreachable!("rerun is dispatched separately"),
    };
    let inputs = written
        .inputs
        .iter()
        .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: output::sha256_file(p)? }))
        .collect::<Result<Vec<_>, Failure>>()?;
    let manifest = Manifest {
        version: crisisdyn::VERSION.to_string(),
        subcommand: command.name().to_string(),
        seed: seed_of(command),
        config_hash: output::config_hash(command),
        command: command.clone(),
        inputs,
        outputs: written.outputs.clone(),
    };
    output::write_manifest(&written.dir, &manifest)?;
    Ok(written.outputs)
}

fn rerun(args: &args::RerunArgs) -> Result<(), Failure> {
    let manifest = output::read_manifest(&args.manifest)?;
    let mut command = manifest.command.clone();
    if let Some(dir) = &args.out {
        match &mut command {
            Command::Corrdist(a) => a.run.out = dir.clone(),
            Command::Collectivity(a) => a.run.out = dir.clone(),
            Command::Divpath(a) => a.run.out = dir.clone(),
            Command::Align(a) => a.run.out = dir.clone(),
            Command::Search(a) => a.run.out = dir.clone(),
            Command::Matrix(a) => a.run.out = dir.clone(),
            Command::Synth(a) => {
                for p in a.out.iter_mut() {
                    *p = dir.join(p.file_name().unwrap_or_default());
                }
            }
            Command::Rerun(_) => return Err(Failure::config(format!("{}: nested rerun", args.manifest.display()))),
        }
    }
    for input in &manifest.inputs {
        match output::sha256_file(std::path::Path::new(&input.path)) {
            Ok(h) if h == input.sha256 => {}
            Ok(_) => log::warn!("input {} changed since the manifest was written", input.path),
            Err(_) => {}
        }
    }
    let outputs = execute(&command)?;
    let recorded: Vec<&str> = manifest.outputs.iter().map(|d| d.sha256.as_str()).collect();
    let produced: Vec<&str> = outputs.iter().map(|d| d.sha256.as_str()).collect();
    if recorded != produced {
        let differing: Vec<&str> = manifest
            .outputs
            .iter()
            .zip(&outputs)
            .filter(|(a, b)| a.sha256 != b.sha256)
            .map(|(a, _)| a.path.as_str())
            .collect();
        return Err(Failure::data(format!(
            "{}: outputs differ from the manifest: {}",
            args.manifest.display(),
            differing.join(", ")
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let result = match &cli.command {
        Command::Rerun(a) => rerun(a),
        other => execute(other).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("crisisdyn {name}: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
