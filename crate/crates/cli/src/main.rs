use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use poise_cli::{exit_code, load_config, run_replay, server};
use poise_core::bench::run_bench;
use poise_core::{BenchProfile, Preset};

#[derive(Parser)]
#[command(
    name = "poise",
    version,
    about = "Confidence scoring from face and hand landmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a recorded .pose.ndjson session file.
    Replay {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write report lines here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score live sessions over WebSocket, one session per connection.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        listen: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Time the pipeline on a synthetic session.
    Bench {
        #[arg(long, default_value = "calm")]
        preset: Preset,
        /// Seconds of synthetic input.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Serve one live session and save its frames for later replay.
    Record {
        #[arg(long, default_value = "127.0.0.1:8765")]
        listen: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a synthetic session file.
    Synth {
        #[arg(long, default_value = "calm")]
        preset: Preset,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Replay { file, config, out } => {
            let cfg = load_config(config.as_deref())?;
            run_replay(&file, &cfg, out.as_deref())?;
        }
        Command::Serve { listen, config } => {
            let cfg = Arc::new(load_config(config.as_deref())?);
            runtime()?.block_on(async {
                let listener = server::bind(&listen).await?;
                eprintln!("listening on ws://{}", listener.local_addr()?);
                tokio::select! {
                    r = server::serve(listener, cfg) => r?,
                    _ = tokio::signal::ctrl_c() => {}
                }
                anyhow::Ok(())
            })?;
        }
        Command::Record {
            listen,
            out,
            config,
        } => {
            let cfg = Arc::new(load_config(config.as_deref())?);
            runtime()?.block_on(async {
                let listener = server::bind(&listen).await?;
                eprintln!(
                    "recording one session on ws://{} to {}",
                    listener.local_addr()?,
                    out.display()
                );
                server::record(listener, cfg, out).await
            })?;
        }
        Command::Bench {
            preset,
            duration,
            fps,
            seed,
            config,
            json,
        } => {
            let cfg = load_config(config.as_deref())?;
            let profile = BenchProfile {
                preset,
                duration_s: duration,
                fps,
                seed,
            };
            let report = run_bench(&profile, &cfg)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.table());
            }
        }
        Command::Synth {
            preset,
            duration,
            fps,
            seed,
            out,
        } => {
            let profile = BenchProfile {
                preset,
                duration_s: duration,
                fps,
                seed,
            };
            let file = std::fs::File::create(&out).map_err(|e| poise_core::Error::Io {
                path: out.clone(),
                source: e,
            })?;
            profile.write_session(std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

fn runtime() -> std::io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
}
