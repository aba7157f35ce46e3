use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use linewalk::cli::run;
use linewalk::config::ScenarioConfig;
use linewalk::scenario::all_presets;

/// Random walks on groups of line homeomorphisms: simulation and checks.
#[derive(Parser)]
#[command(name = "linewalk", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config and write artifacts.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Worker threads for the run; 0 uses the default pool.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Output root directory, overriding the config and environment.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config, printing its canonical hash.
    Validate {
        /// Path to the config file.
        config: PathBuf,
    },
    /// List the bundled preset systems.
    Presets,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.cmd {
        Cmd::Run {
            config,
            threads,
            out,
        } => {
            let cfg = match load_config(&config) {
                Ok(cfg) => cfg,
                Err(msg) => {
                    eprintln!("linewalk: {msg}");
                    return ExitCode::from(1);
                }
            };
            match run(&cfg, threads, out.as_deref()) {
                Ok(outcome) => {
                    println!("wrote {}", outcome.dir.display());
                    for name in &outcome.files {
                        println!("  {name}");
                    }
                    println!();
                    for (key, value) in &outcome.summary {
                        println!("{key} = {value}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("linewalk: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Cmd::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}", cfg.content_hash());
                println!("{}", cfg.pretty_json());
                ExitCode::SUCCESS
            }
            Err(msg) => {
                eprintln!("linewalk: {msg}");
                ExitCode::from(1)
            }
        },
        Cmd::Presets => {
            for preset in all_presets() {
                let system = preset.system();
                let k = system.recurrence_interval();
                println!("{}", preset.name());
                println!("  {}", preset.summary());
                print!("  generators:");
                for g in &system.generators {
                    print!(" {}", g.name);
                }
                println!();
                println!("  stopping region: [{}, {}]", k.a_f64(), k.b_f64());
            }
            ExitCode::SUCCESS
        }
    }
}

/// Read and fully validate a config file; any failure is a config error.
fn load_config(path: &PathBuf) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg = ScenarioConfig::from_json_str(&text).map_err(|e| e.to_string())?;
    cfg.build_system().map_err(|e| e.to_string())?;
    Ok(cfg)
}
