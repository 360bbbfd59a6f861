use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use backcom_mec::harness::output::write_csv;
use backcom_mec::harness::{
    emit_results, gap_draws, load_config, run_sweep, trial_seed, verify_instances,
    ExperimentConfig, GapRecord, SweepAxis,
};
use backcom_mec::model::draw_channel;
use backcom_mec::optimizer::{solve_schemes, Scheme, SolverConfig};
use backcom_mec::oracle::GridSpec;
use backcom_mec::Error;
use clap::{Args, Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "backcom-mec", version, about = "Computation-efficiency optimizer for reciprocal backscatter MEC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel draw and print the reports as JSON.
    Solve(Common),
    /// Monte Carlo sweep over the energy budget or the minimum bits.
    Sweep(Common),
    /// Cross-check the solvers against the independent oracles.
    Verify(Common),
    /// Closed-form reciprocal vs non-reciprocal bits over random draws.
    Gap(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel draws (sweep: per axis value).
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to one scheme (repeatable).
    #[arg(long = "scheme", value_name = "NAME")]
    schemes: Vec<Scheme>,
    #[arg(long, value_name = "energy|bits")]
    axis: Option<SweepAxis>,
}

enum Outcome {
    Ok,
    Infeasible,
    Failed,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(axis) = self.axis {
            cfg = cfg.with_axis(axis);
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if !self.schemes.is_empty() {
            cfg.schemes = self.schemes.clone();
        }
        // Parameter-level domain errors are configuration errors here.
        cfg.validate().map_err(|e| match e {
            Error::Domain(message) => Error::Config {
                path: "config".into(),
                message,
            },
            e => e,
        })?;
        Ok(cfg)
    }
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<PathBuf, Error> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn solve(args: &Common) -> Result<Outcome, Error> {
    let cfg = args.experiment()?;
    let seed = trial_seed(cfg.master_seed, 0);
    let ch = draw_channel(seed, &cfg.channel);
    let reports = solve_schemes(&cfg.sys, &ch, &cfg.schemes, &SolverConfig::default());
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    println!("{json}");
    if let Some(dir) = &args.out {
        let path = write_json(dir, "solve.json", &reports)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(if reports.iter().any(|r| r.feasible) {
        Outcome::Ok
    } else {
        Outcome::Infeasible
    })
}

fn sweep(args: &Common) -> Result<Outcome, Error> {
    let cfg = args.experiment()?;
    let result = run_sweep(&cfg, &SolverConfig::default());
    for row in &result.summary {
        let mean = row
            .mean_eta_bits_per_joule
            .map_or("-".to_string(), |m| format!("{m:.6e}"));
        println!(
            "{:<16} {}={:<10} mean_eta={:<14} infeasible={}/{}",
            row.scheme.name(),
            cfg.axis,
            row.value,
            mean,
            row.infeasible,
            row.trials
        );
    }
    for path in emit_results(&result, &cfg.output)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(if result.all_infeasible() {
        Outcome::Infeasible
    } else {
        Outcome::Ok
    })
}

fn verify(args: &Common) -> Result<Outcome, Error> {
    let mut cfg = args.experiment()?;
    if args.trials.is_none() {
        cfg.trials = 20;
    }
    let scheme = args.schemes.first().copied().unwrap_or(Scheme::Proposed);
    let grid = GridSpec::default();
    let rows = verify_instances(&cfg, &SolverConfig::default(), scheme, cfg.trials, Some(&grid));
    for r in &rows {
        println!(
            "trial {:>3} {} block_gap={:.2e} grad_err={:.2e} lp_excess={:.2e} ce={:.6e} grid={} residual={:.1e}",
            r.trial,
            if r.passed { "PASS" } else { "FAIL" },
            r.block_rel_gap,
            r.gradient_error,
            r.lp_excess,
            r.optimizer_ce,
            r.grid_ce.map_or("-".to_string(), |g| format!("{g:.6e}")),
            r.max_residual,
        );
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join("verify.csv");
        write_csv(&path, &rows)?;
        eprintln!("wrote {}", path.display());
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} of {} instances passed", rows.len() - failed, rows.len());
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::Failed })
}

fn gap(args: &Common) -> Result<Outcome, Error> {
    let mut cfg = args.experiment()?;
    if args.trials.is_none() {
        cfg.trials = 10_000;
    }
    let rows = gap_draws(&cfg, cfg.trials);
    let records: Vec<GapRecord> = rows.iter().map(GapRecord::from).collect();
    let count = |f: &dyn Fn(&GapRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let conditioned = count(&|r| r.condition_holds);
    let negative = count(&|r| r.condition_holds && r.gap_bits < 0.0);
    let mean = records.iter().map(|r| r.gap_bits).sum::<f64>() / records.len() as f64;
    println!("draws: {}", records.len());
    println!("mean gap: {mean:.3} bits");
    println!("sufficient condition holds: {conditioned}, negative gap among them: {negative}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join("gap.csv");
        write_csv(&path, &records)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(if negative == 0 { Outcome::Ok } else { Outcome::Failed })
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() { EXIT_CONFIG as i32 } else { 0 };
        let _ = e.print();
        std::process::exit(code);
    });
    let run = panic::catch_unwind(AssertUnwindSafe(|| match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Gap(a) => gap(a),
    }));
    match run {
        Ok(Ok(Outcome::Ok)) => ExitCode::SUCCESS,
        Ok(Ok(Outcome::Infeasible)) => {
            eprintln!("no feasible solution for any scheme or instance");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Ok(Ok(Outcome::Failed)) => {
            eprintln!("check failed");
            ExitCode::from(EXIT_INTERNAL)
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::Io { .. } | Error::Csv { .. } => {
                    ExitCode::from(EXIT_CONFIG)
                }
                _ => ExitCode::from(EXIT_INTERNAL),
            }
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
