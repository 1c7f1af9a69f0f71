use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mirror_sim::config::{parse_entries, ConfigError, Protocol, RunConfig, MANDATORY};
use mirror_sim::metrics::{read_csv, write_csv, CsvRow, EventLog};
use mirror_sim::radio::max_range;
use mirror_sim::sim;
use mirror_sim::sweep::{aggregate, run_sweep, summary_csv, Axis, SweepSpec};

#[derive(Parser, Debug)]
#[command(name = "mirror-sim", version, about = "MANET simulator: DSR with a reputation and punishment layer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Debug)]
struct ConfigArgs {
    /// Configuration file (KEY VALUE lines). Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `KEY=VALUE` settings applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// One run; writes one CSV row.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Raw event log output.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Cross product of axis values, seeds and protocols.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Number of seeds, counting up from the configured SEED.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, value_delimiter = ',', default_value = "pdsr,mdsr")]
        protocols: Vec<Protocol>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the radio range for a configuration.
    Range {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Parse a configuration and print the effective values.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Mean and standard deviation per protocol and axis value.
    Aggregate {
        /// A CSV written by `run` or `sweep`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        axis: Axis,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn runtime<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{what}: {e}"))
}

/// `full` requires the mandatory scenario keys in the file. `--set` values
/// replace same-named file entries.
fn load(args: &ConfigArgs, full: bool) -> Result<RunConfig, Failure> {
    let (text, label) = match &args.config {
        Some(p) => (
            fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
            format!("{}: ", p.display()),
        ),
        None => (String::new(), String::new()),
    };
    let mut entries =
        parse_entries(&text).map_err(|e| Failure::Config(format!("{label}{e}")))?;
    if full && args.config.is_some() {
        for key in MANDATORY {
            if !entries.iter().any(|e| e.key == key) {
                return Err(Failure::Config(format!("{label}{}", ConfigError::Missing(key))));
            }
        }
    }
    for kv in &args.set {
        let bad = |e: ConfigError| Failure::Config(format!("--set {kv}: {e}"));
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        let mut extra = parse_entries(&format!("{} {}", k.trim(), v.trim())).map_err(bad)?;
        entries.retain(|e| extra.iter().all(|x| x.key != e.key));
        // Validate the override on its own so errors name it, not a line.
        RunConfig::from_entries(&extra).map_err(bad)?;
        entries.append(&mut extra);
    }
    RunConfig::from_entries(&entries).map_err(|e| Failure::Config(format!("{label}{e}")))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(runtime(&p.display().to_string()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run {
            cfg,
            protocol,
            seed,
            out,
            log,
        } => {
            let mut c = load(&cfg, true)?;
            if let Some(p) = protocol {
                c.protocol = p;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            let event_log = match &log {
                Some(p) => {
                    let f = File::create(p).map_err(runtime(&p.display().to_string()))?;
                    Some(EventLog::new(Box::new(BufWriter::new(f))))
                }
                None => None,
            };
            let result = sim::run(c, event_log).map_err(runtime("run"))?;
            log::info!(
                "pdr {:.4}, {} packets, {} in flight, {:.1?}",
                result.pdr,
                result.total_packets,
                result.in_flight,
                result.wall_time
            );
            let mut w = output(out.as_deref())?;
            write_csv(&mut w, &[result.to_row()]).map_err(runtime("csv"))?;
            w.flush().map_err(runtime("csv"))?;
        }
        Cmd::Sweep {
            cfg,
            axis,
            values,
            seeds,
            protocols,
            out,
        } => {
            let base = load(&cfg, true)?;
            let spec = SweepSpec {
                axis,
                values,
                seeds: (0..seeds).map(|k| base.seed.wrapping_add(k)).collect(),
                protocols,
            };
            let results = run_sweep(&base, &spec);
            let mut rows = Vec::new();
            let mut failed = 0;
            for (p, r) in results {
                match r {
                    Ok(r) => rows.push(r.to_row()),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{axis}={} seed={} {}: {e}", p.value, p.seed, p.protocol);
                    }
                }
            }
            let mut w = output(out.as_deref())?;
            write_csv(&mut w, &rows).map_err(runtime("csv"))?;
            w.flush().map_err(runtime("csv"))?;
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} sweep points failed")));
            }
        }
        Cmd::Range { cfg } => {
            let c = load(&cfg, false)?;
            println!("{:.3}", max_range(&c.radio));
        }
        Cmd::Validate { cfg } => {
            let c = load(&cfg, true)?;
            print!("{}", c.to_text());
        }
        Cmd::Aggregate { input, axis, out } => {
            let f = File::open(&input).map_err(runtime(&input.display().to_string()))?;
            let rows: Vec<CsvRow> = read_csv(f).map_err(runtime("csv"))?;
            let mut w = output(out.as_deref())?;
            w.write_all(summary_csv(axis, &aggregate(&rows, axis)).as_bytes())
                .and_then(|_| w.flush())
                .map_err(runtime("write"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
