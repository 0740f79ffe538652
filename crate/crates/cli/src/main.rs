use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use avr_cli::*;
use avr_core::metrics::IgrVariant;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "avr",
    version,
    about = "Active visual reasoning simulator and evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Actions,
    InclAnswers,
}

impl From<Variant> for IgrVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Actions => IgrVariant::Actions,
            Variant::InclAnswers => IgrVariant::InclAnswers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes and questions into OUT/scenes with a manifest.
    Generate {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run agents over a suite and write logs plus a report.
    Run {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Directory written by `generate`; the suite flags are ignored when set.
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Agent name or comma separated list; `external` uses --endpoint.
        #[arg(long)]
        agent: Option<String>,
        /// tcp://host:port or stdio:<command>.
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value = "actions")]
        igr_variant: Variant,
    },
    /// Aggregate an episode log into report.csv and print the table.
    Report {
        log: PathBuf,
        /// Output directory or .csv path (default: next to the log).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "actions")]
        igr_variant: Variant,
    },
    /// Convert an episode log into step-level documents.
    Export {
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run logged episodes from their recorded responses.
    Replay {
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play one episode at the terminal.
    Play {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Index of the episode within the suite.
        #[arg(long, default_value_t = 0)]
        episode: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Generate { suite, out } => {
            let specs = cmd_generate(&suite.config()?, &out)?;
            println!("wrote {} episodes to {}", specs.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Run {
            suite,
            scenes,
            agent,
            endpoint,
            out,
            jobs,
            igr_variant,
        } => {
            let agents = match (agent, &endpoint) {
                (Some(a), _) => split_agents(&a),
                (None, Some(_)) => vec![EXTERNAL_AGENT.to_string()],
                (None, None) => {
                    return Err(CliError::Usage("--agent or --endpoint is required".into()))
                }
            };
            if agents.is_empty() {
                return Err(CliError::Usage("--agent is empty".into()));
            }
            for a in &agents {
                make_agent(a, endpoint.as_deref())?;
            }
            let (cfg, specs) = match scenes {
                Some(dir) => load_scenes(&dir)?,
                None => {
                    let cfg = suite.config()?;
                    let specs = cmd_generate(&cfg, &out)?;
                    (cfg, specs)
                }
            };
            let opts = RunOptions {
                agents,
                endpoint,
                jobs,
                igr_variant: igr_variant.into(),
            };
            let summary = cmd_run(&cfg, &specs, &opts, &out)?;
            print!("{}", summary.report.to_table());
            if summary.aborted > 0 {
                eprintln!("{} episode(s) aborted", summary.aborted);
            }
            Ok(summary.exit_code())
        }
        Command::Report {
            log,
            out,
            igr_variant,
        } => {
            let out = out.unwrap_or_else(|| log.parent().map(PathBuf::from).unwrap_or_default());
            let report = cmd_report(&log, igr_variant.into(), &out)?;
            print!("{}", report.to_table());
            Ok(EXIT_OK)
        }
        Command::Export { log, out } => {
            let n = cmd_export(&log, &out)?;
            println!("wrote {n} documents to {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Replay { log, out } => {
            let r = cmd_replay(&log, &out)?;
            if r.mismatched.is_empty() {
                println!("replayed {} episodes, logs identical", r.episodes);
                Ok(EXIT_OK)
            } else {
                eprintln!("replay diverged on episodes {:?}", r.mismatched);
                Ok(EXIT_INVARIANT)
            }
        }
        Command::Play {
            suite,
            episode,
            out,
        } => {
            let cfg = suite.config()?;
            cmd_play(
                &cfg,
                episode,
                Box::new(BufReader::new(io::stdin())),
                Box::new(io::stdout()),
                &out,
            )?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("avr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
