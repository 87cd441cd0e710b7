use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slc_glmb::correlation::{fcd_heat_map, report, PROBE_POINTS};
use slc_glmb::lrfs::LabeledState;
use slc_glmb::sim::run::{self, comparison_csv, estimates_csv, scenario_csv, write_snapshots};
use slc_glmb::sim::{compare_filters, generate_scenario, oracle_checks, run_filter, FilterKind, Scenario, ScenarioConfig};
use slc_glmb::slc::slc_birth_density;
use slc_glmb::{Error, Result};

const COMPARE_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "slcglmb", version, about = "Labeled multi-target filtering with spatial label correlation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate truth and measurements.
    Simulate(Common),
    /// Simulate and run the filter(s).
    Track(Common),
    /// Cross-check closed forms against the brute-force oracle.
    Verify(Common),
    /// Factorial covariance tables of the first birth pair.
    Correlate(Common),
    /// Per-step equivalence of the SLC and classical recursions.
    Compare(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Glmb,
    Slc,
    Both,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "slc")]
    filter: Which,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write one JSON density snapshot per step.
    #[arg(long)]
    snapshots: bool,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Config { field: "--config".into(), message: "a scenario file is required".into() })?;
        let mut cfg = ScenarioConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.rng_seed = seed;
        }
        cfg.build()
    }

    fn kinds(&self) -> Vec<FilterKind> {
        match self.filter {
            Which::Glmb => vec![FilterKind::Glmb],
            Which::Slc => vec![FilterKind::Slc],
            Which::Both => vec![FilterKind::Glmb, FilterKind::Slc],
        }
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn simulate(args: &Common) -> Result<bool> {
    let s = args.scenario()?;
    let scans = generate_scenario(&s)?;
    write(&args.out, "scenario.csv", &scenario_csv(&scans, s.config.rng_seed))?;
    Ok(true)
}

fn track(args: &Common) -> Result<bool> {
    let s = args.scenario()?;
    let scans = generate_scenario(&s)?;
    let mut results = Vec::new();
    for kind in args.kinds() {
        let steps = run_filter(&s, &scans, kind)?;
        if args.snapshots {
            write_snapshots(&args.out.join("snapshots"), kind, &steps)?;
        }
        let mean_ospa = steps.iter().map(|r| r.ospa).sum::<f64>() / steps.len().max(1) as f64;
        println!("{}: {} steps, mean OSPA {mean_ospa:.4}", kind.name(), steps.len());
        results.push((kind, steps));
    }
    write(&args.out, "scenario.csv", &scenario_csv(&scans, s.config.rng_seed))?;
    write(&args.out, "estimates.csv", &estimates_csv(&results, s.config.state_dim, s.config.rng_seed))?;
    Ok(true)
}

fn verify(args: &Common) -> Result<bool> {
    let checks = oracle_checks(args.seed.unwrap_or(1))?;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {:.3e} (tolerance {:.0e})", c.name, c.value, c.tolerance);
    }
    write(&args.out, "verify.json", &serde_json::to_string_pretty(&checks)?)?;
    Ok(checks.iter().all(|c| c.passed))
}

fn correlate(args: &Common) -> Result<bool> {
    let s = args.scenario()?;
    let (_, birth) = s
        .births
        .iter()
        .find(|(_, b)| b.labels().len() >= 2)
        .ok_or_else(|| Error::Config { field: "births".into(), message: "no birth entry with two targets".into() })?;
    let pair: Vec<_> = birth.labels().iter().take(2).copied().collect();
    let density = slc_birth_density(birth).conditioned_on(&pair.iter().copied().collect())?;
    let cells = fcd_heat_map(&density, PROBE_POINTS)?;
    let mut csv = format!("# slcglmb fcd v{} seed={}\n", run::CSV_VERSION, s.config.rng_seed);
    let _ = writeln!(csv, "label1_k,label1_i,label2_k,label2_i,x1,x2,fcd");
    let (a, b) = (pair[0], pair[1]);
    for c in &cells {
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", a.birth_step, a.index, b.birth_step, b.index, c.x1, c.x2, c.fcd);
    }
    write(&args.out, "fcd.csv", &csv)?;
    let peak = cells.iter().max_by(|a, b| a.fcd.abs().total_cmp(&b.fcd.abs())).expect("non-empty grid");
    let mean = |l| density.marginal(&pair.iter().copied().collect(), l).expect("pair label").mean();
    let (mut k1, mut k2) = (mean(&pair[0]), mean(&pair[1]));
    k1[0] = peak.x1;
    k2[0] = peak.x2;
    let r = report(&density, LabeledState::new(k1, pair[0]), LabeledState::new(k2, pair[1]))?;
    println!("peak |f.c.d.| {:.4e}, independence gap {:.4e}", r.fcd_value.abs(), r.independence_gap);
    write(&args.out, "correlation.json", &serde_json::to_string_pretty(&r)?)?;
    Ok(true)
}

fn compare(args: &Common) -> Result<bool> {
    let s = args.scenario()?;
    let scans = generate_scenario(&s)?;
    let rows = compare_filters(&s, &scans)?;
    let worst = rows
        .iter()
        .flat_map(|c| [c.predicted.weight, c.predicted.spatial, c.updated.weight, c.updated.spatial])
        .fold(0.0, f64::max);
    let agree = worst <= COMPARE_TOLERANCE && rows.iter().all(|c| c.estimates_equal);
    println!("largest discrepancy {worst:.3e} over {} steps", rows.len());
    write(&args.out, "compare.csv", &comparison_csv(&rows, s.config.rng_seed))?;
    Ok(agree)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Track(a) => track(a),
        Command::Verify(a) => verify(a),
        Command::Correlate(a) => correlate(a),
        Command::Compare(a) => compare(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: numerical check failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(run::exit_code(&e) as u8)
        }
    }
}
