use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anc_sss::analysis::{sig6, theory_report};
use anc_sss::harness::{oracle_agreement, run_experiment, ExperimentOptions};
use anc_sss::scenario::parse_noise_spec;
use anc_sss::{Error, NoiseSource, RngStream, Scenario};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anc-sss", version, about = "Switched step-size FxNLMS noise control lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a scenario and write CSV/metadata output.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only write aggregate.csv and metadata.json.
        #[arg(long)]
        aggregate_only: bool,
    },
    /// Evaluate the closed-form convergence and steady-state expressions.
    Theory {
        #[arg(long = "L")]
        taps: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long = "sigma-e2", default_value_t = 1e-3)]
        sigma_e2: f64,
        #[arg(long = "sigma-f2", default_value_t = 1.0)]
        sigma_f2: f64,
    },
    /// Write noise samples, one per line.
    GenNoise {
        /// e.g. `kind=alpha_stable,alpha=1.4,gamma=0.1`
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare diagonal-trend step selection with the full-matrix recursion.
    Oracle {
        scenario: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::AllDiverged { .. } => 2,
        Error::Io(_) | Error::Ingest { .. } => 3,
        _ => 1,
    }
}

fn load(path: &Path, seed: Option<u64>, trials: Option<usize>) -> anc_sss::Result<Scenario> {
    let mut s = Scenario::from_file(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(t) = trials {
        s.trials = t;
    }
    s.validate()?;
    Ok(s)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "NA".into())
}

fn execute(cmd: Command) -> anc_sss::Result<()> {
    match cmd {
        Command::Run {
            scenario,
            seed,
            trials,
            out,
            aggregate_only,
        } => {
            let s = load(&scenario, seed, trials)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&s.name));
            let opts = ExperimentOptions {
                out_dir: Some(out.clone()),
                aggregate_only,
                ..Default::default()
            };
            let res = run_experiment(&s, &opts)?;
            let agg = &res.aggregate;
            println!("scenario        {}", s.name);
            println!("algorithm       {}", s.algorithm.label());
            println!("trials          {} ({} diverged)", s.trials, res.excluded());
            println!("final ANR (dB)  {}", fmt_opt(agg.final_mean_anr(1000)));
            match agg.first_reaching(-10.0) {
                Some(i) => println!("-10 dB reached  iteration {i}"),
                None => println!("-10 dB reached  never"),
            }
            println!("wall time (s)   {:.2}", res.wall_time.as_secs_f64());
            println!("output          {}", out.display());
        }
        Command::Theory {
            taps,
            mu,
            sigma_e2,
            sigma_f2,
        } => {
            println!("{}", theory_report(taps, mu, sigma_e2, sigma_f2)?);
        }
        Command::GenNoise {
            spec,
            n,
            seed,
            stream,
            out,
        } => {
            let spec = parse_noise_spec(&spec, std::env::current_dir().ok().as_deref())?;
            let samples = NoiseSource::new(&spec)?.generate(n, &mut RngStream::new(seed, stream))?;
            let mut w = BufWriter::new(fs::File::create(&out)?);
            for x in samples {
                writeln!(w, "{x:?}")?;
            }
            w.flush()?;
        }
        Command::Oracle { scenario, trials } => {
            let s = load(&scenario, None, trials)?;
            let report = oracle_agreement(&s)?;
            println!("scenario   {}", s.name);
            println!("ticks      {}", report.ticks);
            println!("agreement  {}", sig6(report.agreement_rate()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
