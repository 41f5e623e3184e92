//! Experiment front end: scenario subcommands over the run configuration,
//! with CSV/JSON/SVG artifacts written to the output directory.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 numerical
//! failure, 3 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sanc_core::config::RunConfig;
use sanc_core::harness::{run_plan, ExperimentResult, Scenario};
use sanc_core::report;
use sanc_core::Error;

mod validate;

/// Environment variable providing the default output directory.
const OUT_DIR_ENV: &str = "SANC_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "sanc",
    about = "Spatial active noise control experiments with exterior radiation suppression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptation of the selected algorithms at one frequency.
    Converge(RunArgs),
    /// Sweep of the radiation penalty weight at one frequency.
    LambdaSweep(RunArgs),
    /// Sweep over frequency with per-frequency calibration.
    FreqSweep(RunArgs),
    /// Primary source jumps to a second position mid-run.
    MovingSource(RunArgs),
    /// Build the configured operators and run their invariant checks.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and SANC_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Scene preset override.
    #[arg(long)]
    preset: Option<String>,
    /// Frequency override in Hz (single-frequency scenarios).
    #[arg(long)]
    freq: Option<f64>,
    /// Iteration count override.
    #[arg(long)]
    iters: Option<usize>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-channel SNR in dB ("inf" for noiseless).
    #[arg(long)]
    snr_db: Option<String>,
    /// Fixed radiation penalty weight (skips grid selection).
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated algorithms (nlms,penal,const).
    #[arg(long)]
    algorithms: Option<String>,
    /// Paper-scale sweep resolution (10 Hz steps, 50k iterations).
    #[arg(long)]
    paper_scale: bool,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (scenario, args) = match &cli.command {
        Command::Converge(a) => (Some("converge"), a),
        Command::LambdaSweep(a) => (Some("lambda-sweep"), a),
        Command::FreqSweep(a) => (Some("freq-sweep"), a),
        Command::MovingSource(a) => (Some("moving-source"), a),
        Command::Validate(a) => (None, a),
    };

    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut config, args, scenario)?;
    config.validate()?;

    let scene = config.build_scene()?;
    let plan = config.build_plan()?;

    if scenario.is_none() {
        return validate::run_checks(&scene, &plan);
    }

    let out_dir = resolve_out_dir(args, &config);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    report::write_atomic(
        &out_dir.join("resolved-config.toml"),
        config.to_toml().as_bytes(),
    )?;

    let result = run_plan(&scene, &plan)?;
    print_summary(&result);

    let files = report::emit(&result, &out_dir, &config.output.formats)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", out_dir.join("resolved-config.toml").display());
    Ok(())
}

fn resolve_out_dir(args: &RunArgs, config: &RunConfig) -> PathBuf {
    if let Some(dir) = &args.out_dir {
        return dir.clone();
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    Path::new(&config.output.dir).to_path_buf()
}

fn apply_overrides(
    config: &mut RunConfig,
    args: &RunArgs,
    scenario: Option<&str>,
) -> Result<(), Error> {
    if let Some(s) = scenario {
        config.plan.scenario = s.to_string();
    }
    if let Some(p) = &args.preset {
        config.scene.preset = p.clone();
    }
    if let Some(f) = args.freq {
        config.plan.frequencies = Some(vec![f]);
    }
    if let Some(n) = args.iters {
        config.plan.n_iters = Some(n);
    }
    if let Some(s) = args.seed {
        config.plan.master_seed = s;
    }
    if let Some(snr) = &args.snr_db {
        config.plan.snr_db = match snr.as_str() {
            "inf" | "INF" | "infinity" => f64::INFINITY,
            v => v
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse snr_db '{v}'")))?,
        };
    }
    if let Some(l) = args.lambda {
        config.algorithm.lambda_penal = Some(l);
    }
    if let Some(algs) = &args.algorithms {
        config.plan.algorithms = algs.split(',').map(|s| s.trim().to_string()).collect();
    }
    if args.paper_scale {
        config.plan.paper_scale = true;
    }
    if let Some(dir) = &args.out_dir {
        config.output.dir = dir.display().to_string();
    }
    Ok(())
}

fn print_summary(result: &ExperimentResult) {
    if let Some(lambda) = result.selected_lambda {
        println!("selected lambda: {lambda} kg/s");
    }
    match result.scenario {
        Scenario::FreqSweep => {
            for p in &result.frequency_points {
                let finals: Vec<String> = p
                    .finals
                    .iter()
                    .map(|(a, pred, jext)| format!("{a}: {pred:.2} dB / {jext:.3e} W"))
                    .collect();
                println!(
                    "{:7.1} Hz  C = {:.3e} W  lambda = {}  loading = {}  [{}]",
                    p.freq_hz,
                    p.budget_c,
                    p.selected_lambda,
                    p.loading_active,
                    finals.join(", ")
                );
            }
            for (freq, err) in &result.failures {
                println!("{freq:7.1} Hz  FAILED: {err}");
            }
        }
        _ => {
            for run in &result.runs {
                println!(
                    "{:6} @ {:.1} Hz  P_red = {:7.2} dB  J_ext = {:.4e} W  (budget C = {:.4e} W, Wiener = {:.4e} W)",
                    run.algorithm.name(),
                    run.freq_hz,
                    run.summary.final_p_red_db,
                    run.summary.final_j_ext_w,
                    run.budget_c,
                    run.j_ext_hat
                );
            }
        }
    }
}
