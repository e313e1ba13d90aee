use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kwise_cli::{run, verify_suite, CliError, ExperimentConfig, Mutation, Overrides};
use kwise_core::dyadic_matrix::DyadicMatrix;
use kwise_core::streams::{InsertionStream, NetHierarchy, StreamKind};

#[derive(Parser)]
#[command(
    name = "kwise",
    version,
    about = "Experiments on k-wise independent walks and stream trackers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact invariant suite.
    Verify {
        /// Print a JSON summary instead of text lines.
        #[arg(long)]
        json: bool,
        /// Corrupt an internal table first; the suite should then fail.
        #[arg(long, value_enum)]
        mutate: Option<Mutation>,
    },
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        workers: Option<usize>,
        /// CSV destination; stdout when neither this nor the config names one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print the dense dyadic matrix as `i,j,value` CSV.
    DumpMatrix {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the ε-net hierarchy of a stream as `r,s,time,parent_s` CSV.
    DumpNet {
        /// Generator name, or a path to a stream file (one item per line).
        #[arg(long)]
        stream: String,
        /// Stream length for generated streams.
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Universe size; defaults to m for generated streams.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn verify(json: bool, mutate: Option<Mutation>) -> Result<bool, CliError> {
    let start = Instant::now();
    let checks = verify_suite(mutate);
    let pass = checks.iter().all(|a| a.pass);
    if json {
        let summary = serde_json::json!({
            "suite": "verify",
            "version": env!("CARGO_PKG_VERSION"),
            "mutation": mutate,
            "pass": pass,
            "wall_time_s": start.elapsed().as_secs_f64(),
            "checks": checks,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        for a in &checks {
            println!("{}", a.line());
        }
        let failed = checks.iter().filter(|a| !a.pass).count();
        println!("{} checks, {failed} failed", checks.len());
    }
    Ok(pass)
}

fn run_config(
    path: &Path,
    overrides: Overrides,
    workers: Option<usize>,
    json: bool,
) -> Result<bool, CliError> {
    let mut config = ExperimentConfig::load(path)?;
    config.apply(&overrides);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build()?;
    let start = Instant::now();
    let table = pool.install(|| run(&config))?;
    let wall = start.elapsed().as_secs_f64();
    let to_stdout = config.out.is_none();
    let mut w = sink(config.out.as_deref())?;
    table.write_csv(&mut w)?;
    w.flush()?;
    drop(w);
    if json {
        let summary = serde_json::to_string_pretty(&table.summary(wall))?;
        if to_stdout {
            eprintln!("{summary}");
        } else {
            println!("{summary}");
        }
    } else {
        for a in &table.assertions {
            eprintln!("{}", a.line());
        }
    }
    Ok(table.all_pass())
}

fn dump_net(
    stream: &str,
    m: usize,
    n: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let s = match stream.parse::<StreamKind>() {
        Ok(kind) => kind.generate(n.unwrap_or(m), m, seed)?,
        Err(_) if Path::new(stream).is_file() => {
            InsertionStream::read_from(BufReader::new(File::open(stream)?), n)?
        }
        Err(e) => {
            return Err(CliError::Usage(format!(
                "{e}; expected a generator name or a stream file"
            )))
        }
    };
    let mut w = sink(out)?;
    NetHierarchy::build(&s).write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { json, mutate } => verify(json, mutate),
        Command::Run {
            config,
            trials,
            seed,
            workers,
            out,
            json,
        } => run_config(&config, Overrides { trials, seed, out }, workers, json),
        Command::DumpMatrix { n, out } => {
            DyadicMatrix::new(n).map_err(CliError::from).and_then(|a| {
                let mut w = sink(out.as_deref())?;
                a.write_csv(&mut w)?;
                w.flush()?;
                Ok(true)
            })
        }
        Command::DumpNet {
            stream,
            m,
            n,
            seed,
            out,
        } => dump_net(&stream, m, n, seed, out.as_deref()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kwise: {e}");
            ExitCode::from(2)
        }
    }
}
