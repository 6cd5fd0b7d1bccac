use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use metacp::diag;
use metacp::pipeline::{self, ExportTarget, Failure, Stage};
use metacp::samples;

#[derive(Parser)]
#[command(name = "metacp", version, about = "Validate and export PSV protocol models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model; prints diagnostics in document order.
    Validate { file: PathBuf },
    /// Translate a model for a verifier or into a C++ program.
    Export {
        #[arg(long, short)]
        target: ExportTarget,
        /// Output file. Defaults to the input's base name with the target extension.
        #[arg(long, short)]
        out: Option<PathBuf>,
        file: PathBuf,
    },
    /// List the bundled models, or print one.
    Samples {
        #[arg(long)]
        emit: Option<String>,
    },
    /// Run the local service used by the editor.
    Serve {
        #[arg(long, env = "METACP_PORT", default_value_t = 8080)]
        port: u16,
    },
}

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn read(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("metacp: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })
}

fn report(f: &Failure) -> ExitCode {
    print!("{}", diag::render(&f.diagnostics));
    ExitCode::from(if f.stage == Stage::Malformed { EXIT_INPUT } else { EXIT_DIAGNOSTICS })
}

fn validate(file: &Path) -> ExitCode {
    let doc = match read(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    match pipeline::validate(&doc) {
        Ok(warnings) if warnings.is_empty() => ExitCode::SUCCESS,
        Ok(warnings) => {
            print!("{}", diag::render(&warnings));
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
        Err(f) => report(&f),
    }
}

fn default_output(file: &Path, target: ExportTarget) -> PathBuf {
    let stem = file.file_stem().map_or_else(|| "model".into(), |s| s.to_os_string());
    PathBuf::from(stem).with_extension(target.extension())
}

fn export(file: &Path, target: ExportTarget, out: Option<PathBuf>) -> ExitCode {
    let doc = match read(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let artifact = match pipeline::export(&doc, target) {
        Ok(a) => a,
        Err(f) => return report(&f),
    };
    let out = out.unwrap_or_else(|| default_output(file, target));
    if let Err(e) = std::fs::write(&out, artifact) {
        eprintln!("metacp: cannot write {}: {e}", out.display());
        return ExitCode::from(EXIT_INPUT);
    }
    ExitCode::SUCCESS
}

fn list_samples(emit: Option<String>) -> ExitCode {
    match emit {
        None => {
            for (name, _) in samples::ALL {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Some(name) => match samples::by_name(&name) {
            Some(doc) => {
                print!("{doc}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("metacp: no sample named `{name}`");
                ExitCode::from(EXIT_INPUT)
            }
        },
    }
}

#[tokio::main]
async fn serve(port: u16) -> anyhow::Result<()> {
    let listener =
        tokio::net::TcpListener::bind(("127.0.0.1", port)).await.with_context(|| format!("binding port {port}"))?;
    eprintln!("metacp: serving on http://{}", listener.local_addr()?);
    axum::serve(listener, metacp_cli::router()).await?;
    Ok(())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { file } => validate(&file),
        Command::Export { target, out, file } => export(&file, target, out),
        Command::Samples { emit } => list_samples(emit),
        Command::Serve { port } => match serve(port) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("metacp: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
