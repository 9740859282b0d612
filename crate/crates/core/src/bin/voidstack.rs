use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use voidstack::cloud::{read_cloud, write_cloud, CloudFormat};
use voidstack::pipeline::{align_clouds, export_table, run, serve, write_scene, PipelineConfig, PipelineError, ReportBundle};
use voidstack::registration::{apply_transform, CorrespondenceSet};
use voidstack::synthetic::SceneSpec;

#[derive(Parser)]
#[command(version, about = "Void detection in multi-epoch collapse-site point clouds")]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by --config.
    Run,
    /// Print the void table of a report as CSV.
    Export {
        /// Report directory or report.json; defaults to the config's output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a report directory over HTTP.
    Serve {
        /// Defaults to the config's output directory.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Generate a synthetic scene and a config that analyzes it.
    Gen {
        /// Scene spec (TOML); the built-in demonstration site otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the clouds, pipeline.toml and truth.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Register one cloud onto another and print the alignment report.
    Align {
        /// Cloud to move.
        #[arg(long)]
        source: PathBuf,
        /// Cloud that defines the frame.
        #[arg(long)]
        target: PathBuf,
        /// Tie points (`sx sy sz tx ty tz` per line) for the starting pose.
        #[arg(long)]
        ties: Option<PathBuf>,
        /// Write the registered source cloud here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
    let path = path.ok_or_else(|| PipelineError::Validation("--config is required".into()))?;
    PipelineConfig::load(path)
}

fn report_dir(explicit: Option<PathBuf>, config: Option<&Path>) -> Result<PathBuf, PipelineError> {
    match explicit {
        Some(p) if p.is_file() => Ok(p.parent().map(Path::to_path_buf).unwrap_or_default()),
        Some(p) => Ok(p),
        None => Ok(load_config(config)?.output_path()),
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::Run => {
            let config = load_config(config_path)?;
            let report = run(&config)?;
            println!(
                "{} voids, {} slices -> {}",
                report.voids.len(),
                report.slices.len(),
                config.output_path().display()
            );
        }
        Command::Export { report, out } => {
            let dir = report_dir(report, config_path)?;
            let path = dir.join("report.json");
            let text = std::fs::read_to_string(&path)
                .map_err(|e| PipelineError::Validation(format!("cannot read {}: {e}", path.display())))?;
            let csv = export_table(&ReportBundle::from_json(&text)?);
            match out {
                Some(p) => std::fs::write(&p, csv).map_err(|source| PipelineError::Io { path: p, source })?,
                None => print!("{csv}"),
            }
        }
        Command::Serve { report, bind } => {
            let dir = report_dir(report, config_path)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Runtime(e.to_string()))?;
            rt.block_on(serve::serve(dir, bind))?;
        }
        Command::Gen { spec, seed, out } => {
            let mut spec = match spec {
                Some(p) => SceneSpec::load(p)?,
                None => SceneSpec::collapse_site(),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            let (config, truth) = write_scene(&spec, &out)?;
            println!(
                "{} epochs, {} features -> {}",
                config.inputs.len(),
                truth.features.len(),
                out.join("pipeline.toml").display()
            );
        }
        Command::Align { source, target, ties, out } => {
            let registration = match config_path {
                Some(p) => PipelineConfig::load(p)?.registration,
                None => Default::default(),
            };
            let read = |p: &Path| read_cloud(p, None).map_err(|source| PipelineError::Cloud { path: p.into(), source });
            let (src, dst) = (read(&source)?, read(&target)?);
            let ties = match ties {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|source| PipelineError::Io { path: p.clone(), source })?;
                    Some(CorrespondenceSet::parse(&text).map_err(|source| PipelineError::Cloud { path: p, source })?)
                }
                None => None,
            };
            let label = source.display().to_string();
            let wrap = |e| PipelineError::Registration {
                label: label.clone(),
                source: e,
            };
            let report = align_clouds(&src, &dst, ties.as_ref(), &registration).map_err(wrap)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(p) = out {
                let moved = apply_transform(&src, &report.transform).map_err(wrap)?;
                let format = CloudFormat::from_extension(&p).unwrap_or(CloudFormat::PlyBinaryLe);
                let file = std::fs::File::create(&p).map_err(|source| PipelineError::Io { path: p.clone(), source })?;
                write_cloud(&moved, format, std::io::BufWriter::new(file))
                    .map_err(|source| PipelineError::Cloud { path: p, source })?;
            }
        }
    }
    Ok(())
}
