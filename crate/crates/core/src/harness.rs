//! Experiment scenarios: single-frequency convergence, penalty-weight sweep,
//! frequency sweep, and the moving primary source. Handles budget
//! calibration from the Wiener reference and the per-frequency selection of
//! the penalty weight.

use rayon::prelude::*;
use serde::Serialize;

use crate::acoustics::{primary_at_mics, FrequencyContext, Position, Scene};
use crate::adaptive::{
    run_adaptation, Algorithm, AlgorithmParams, IterationRecord, OperatorBundle, RunSettings,
    SourceSchedule,
};
use crate::kernel_interp::QuadratureSpec;
use crate::radiation::wiener_reference;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Convergence,
    LambdaSweep,
    FreqSweep,
    MovingSource,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Convergence => "converge",
            Scenario::LambdaSweep => "lambda-sweep",
            Scenario::FreqSweep => "freq-sweep",
            Scenario::MovingSource => "moving-source",
        }
    }
}

/// Fully resolved description of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    pub frequencies: Vec<f64>,
    pub n_iters: usize,
    pub algorithms: Vec<Algorithm>,
    pub lambda_grid: Vec<f64>,
    /// Radiation budget as a fraction of the Wiener radiated power.
    pub budget_fraction: f64,
    /// Penalty weight; `None` selects it from the grid per frequency.
    pub lambda_penal: Option<f64>,
    pub master_seed: u64,
    pub snr_db: Option<f64>,
    pub mu0: f64,
    pub beta: f64,
    pub alpha: f64,
    pub ridge: f64,
    pub quadrature: QuadratureSpec,
    pub eta: f64,
    pub cond_threshold: f64,
    /// Moving-source scenario: iteration of the switch and the second position.
    pub move_switch_at: usize,
    pub second_primary: Position,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            scenario: Scenario::Convergence,
            frequencies: vec![600.0],
            n_iters: 50_000,
            algorithms: vec![Algorithm::Nlms, Algorithm::Penal, Algorithm::Const],
            lambda_grid: vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            budget_fraction: 0.5,
            lambda_penal: None,
            master_seed: 1,
            snr_db: Some(40.0),
            mu0: 0.9,
            beta: 1e-8,
            alpha: 0.99,
            ridge: crate::kernel_interp::RIDGE_DEFAULT,
            quadrature: QuadratureSpec::default(),
            eta: crate::radiation::ETA_DEFAULT,
            cond_threshold: crate::radiation::COND_THRESHOLD_DEFAULT,
            move_switch_at: 25_000,
            second_primary: [-2.0, 0.2, 0.0],
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() {
            return Err(Error::Config("plan needs at least one frequency".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("plan needs at least one algorithm".into()));
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "budget fraction must lie in (0, 1], got {}",
                self.budget_fraction
            )));
        }
        if let Some(snr) = self.snr_db {
            if snr < 0.0 {
                return Err(Error::Config(format!(
                    "snr_db must be nonnegative or infinite, got {snr}"
                )));
            }
        }
        self.base_params(Algorithm::Nlms, 0.0, None).validate()
    }

    fn base_params(
        &self,
        algorithm: Algorithm,
        lambda_penal: f64,
        budget: Option<f64>,
    ) -> AlgorithmParams {
        AlgorithmParams {
            mu0: self.mu0,
            beta: self.beta,
            lambda_penal: if algorithm == Algorithm::Penal {
                lambda_penal
            } else {
                0.0
            },
            budget: if algorithm == Algorithm::Const {
                budget
            } else {
                None
            },
            alpha: self.alpha,
        }
    }

    fn settings(&self, seed: u64) -> RunSettings {
        RunSettings {
            n_iters: self.n_iters,
            noise_seed: seed,
            snr_db: self.snr_db,
        }
    }
}

/// Stable per-run seed: FNV-1a over the run key, mixed with the master seed.
pub fn derive_seed(master: u64, algorithm: &str, freq_hz: f64, lambda: f64, purpose: &str) -> u64 {
    let key = format!(
        "{algorithm}:{:.0}:{:.0}:{purpose}",
        freq_hz * 1000.0,
        lambda * 1e9
    );
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ master
}

/// Summary row; `final_*` are literally the last trace record.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunSummary {
    pub final_p_red_db: f64,
    pub final_j_ext_w: f64,
    pub final_j_int: f64,
    pub final_w_frob: f64,
    /// Mean radiated power over the last 1% of iterations (noise-smoothed).
    pub tail_j_ext_w: f64,
}

fn summarize(trace: &[IterationRecord]) -> Option<RunSummary> {
    let last = trace.last()?;
    let tail_len = (trace.len() / 100).max(1);
    let tail = &trace[trace.len() - tail_len..];
    let tail_j = tail.iter().map(|r| r.j_ext_w).sum::<f64>() / tail.len() as f64;
    Some(RunSummary {
        final_p_red_db: last.p_red_db,
        final_j_ext_w: last.j_ext_w,
        final_j_int: last.j_int,
        final_w_frob: last.w_frob,
        tail_j_ext_w: tail_j,
    })
}

/// One completed adaptation run with its calibration context.
#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub freq_hz: f64,
    pub seed: u64,
    pub lambda_penal: f64,
    pub j_ext_hat: f64,
    pub budget_c: f64,
    pub loading_active: bool,
    pub summary: RunSummary,
    pub max_budget_ratio: Option<f64>,
    #[serde(skip)]
    pub trace: Vec<IterationRecord>,
}

/// Converged penalty-sweep sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub final_j_ext_w: f64,
    pub tail_j_ext_w: f64,
    pub final_p_red_db: f64,
}

/// Per-frequency aggregate used by the frequency sweep.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyPoint {
    pub freq_hz: f64,
    pub j_ext_hat: f64,
    pub budget_c: f64,
    pub selected_lambda: f64,
    pub loading_active: bool,
    pub finals: Vec<(Algorithm, f64, f64)>, // (algorithm, final P_red dB, final J_ext W)
}

#[derive(Debug, Serialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub runs: Vec<RunResult>,
    pub lambda_curve: Vec<LambdaPoint>,
    pub selected_lambda: Option<f64>,
    pub frequency_points: Vec<FrequencyPoint>,
    /// Frequencies that failed, with the error text (sweep keeps going).
    pub failures: Vec<(f64, String)>,
    /// Operator sets constructed while executing the plan.
    pub operator_builds: usize,
}

/// Wiener calibration at the first primary position: radiated power of the
/// unconstrained optimum and the budget C as its configured fraction.
fn calibrate(bundle: &OperatorBundle, plan: &ExperimentPlan, primary: &Position) -> Result<(f64, f64)> {
    let d_clean = primary_at_mics(&bundle.scene, &bundle.ctx, primary)?;
    let (_, j_ext_hat) = wiener_reference(
        &bundle.g,
        &bundle.interp.a_int,
        &bundle.radiation,
        &d_clean,
    )?;
    Ok((j_ext_hat, plan.budget_fraction * j_ext_hat))
}

/// Runs the penalty controller over the grid and picks the weight whose
/// converged radiated power lands closest (in log ratio) to the budget.
/// Ties go to the smaller weight; if even the best candidate exceeds twice
/// the budget the grid cannot reach it and an error is raised.
fn select_lambda(
    bundle: &OperatorBundle,
    plan: &ExperimentPlan,
    budget: f64,
    schedule: &SourceSchedule,
    keep_traces: bool,
) -> Result<(f64, Vec<LambdaPoint>, Vec<RunResult>)> {
    let freq = bundle.ctx.frequency;
    let candidates: Vec<f64> = plan.lambda_grid.clone();
    let mut evaluated: Vec<(f64, LambdaPoint, Option<RunResult>)> = candidates
        .par_iter()
        .map(|&lambda| -> Result<_> {
            let seed = derive_seed(plan.master_seed, "penal", freq, lambda, "lambda-sweep");
            let params = plan.base_params(Algorithm::Penal, lambda, None);
            let out = run_adaptation(
                bundle,
                Algorithm::Penal,
                params,
                &plan.settings(seed),
                schedule,
            )?;
            let summary = summarize(&out.records).expect("non-empty trace");
            let point = LambdaPoint {
                lambda,
                final_j_ext_w: summary.final_j_ext_w,
                tail_j_ext_w: summary.tail_j_ext_w,
                final_p_red_db: summary.final_p_red_db,
            };
            let run = keep_traces.then(|| RunResult {
                algorithm: Algorithm::Penal,
                freq_hz: freq,
                seed,
                lambda_penal: lambda,
                j_ext_hat: budget / plan.budget_fraction,
                budget_c: budget,
                loading_active: bundle.radiation.is_loaded(),
                summary,
                max_budget_ratio: out.max_budget_ratio,
                trace: out.records,
            });
            Ok((lambda, point, run))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluated.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let selected = evaluated
        .iter()
        .map(|(lambda, point, _)| {
            let ratio = (point.tail_j_ext_w / budget).max(f64::MIN_POSITIVE);
            (*lambda, ratio.ln().abs())
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(std::cmp::Ordering::Greater))
        .map(|(lambda, _)| lambda)
        .ok_or_else(|| Error::Config("empty lambda grid".into()))?;
    let best_j = evaluated
        .iter()
        .find(|(l, _, _)| *l == selected)
        .map(|(_, p, _)| p.tail_j_ext_w)
        .unwrap();
    if best_j > 2.0 * budget {
        return Err(Error::NoFeasibleLambda {
            best: best_j,
            budget,
        });
    }
    let curve = evaluated.iter().map(|(_, p, _)| *p).collect();
    let runs = evaluated.into_iter().filter_map(|(_, _, r)| r).collect();
    Ok((selected, curve, runs))
}

fn run_algorithms(
    bundle: &OperatorBundle,
    plan: &ExperimentPlan,
    schedule: &SourceSchedule,
    lambda_penal: f64,
    j_ext_hat: f64,
    budget: f64,
    purpose: &str,
) -> Result<Vec<RunResult>> {
    plan.algorithms
        .par_iter()
        .map(|&algorithm| -> Result<RunResult> {
            let freq = bundle.ctx.frequency;
            let lambda = if algorithm == Algorithm::Penal {
                lambda_penal
            } else {
                0.0
            };
            let seed = derive_seed(plan.master_seed, algorithm.name(), freq, lambda, purpose);
            let params = plan.base_params(algorithm, lambda, Some(budget));
            let out = run_adaptation(bundle, algorithm, params, &plan.settings(seed), schedule)?;
            let summary = summarize(&out.records).ok_or_else(|| {
                Error::Config("run produced an empty trace (n_iters = 0)".into())
            })?;
            Ok(RunResult {
                algorithm,
                freq_hz: freq,
                seed,
                lambda_penal: lambda,
                j_ext_hat,
                budget_c: budget,
                loading_active: bundle.radiation.is_loaded(),
                summary,
                max_budget_ratio: out.max_budget_ratio,
                trace: out.records,
            })
        })
        .collect()
}

fn build_bundle(scene: &Scene, plan: &ExperimentPlan, freq: f64) -> Result<OperatorBundle> {
    let ctx = FrequencyContext::new(freq, scene)?;
    OperatorBundle::build(
        scene,
        &ctx,
        plan.ridge,
        &plan.quadrature,
        plan.eta,
        plan.cond_threshold,
    )
}

/// Shared single-frequency flow: calibrate, resolve the penalty weight,
/// run the selected algorithms.
fn single_frequency(
    scene: &Scene,
    plan: &ExperimentPlan,
    freq: f64,
    schedule_for_runs: &SourceSchedule,
) -> Result<(ExperimentResult, OperatorBundle)> {
    let bundle = build_bundle(scene, plan, freq)?;
    let first_primary = match schedule_for_runs {
        SourceSchedule::Fixed(p) => *p,
        SourceSchedule::StepChange { first, .. } => *first,
    };
    let (j_ext_hat, budget) = calibrate(&bundle, plan, &first_primary)?;
    let needs_penal = plan.algorithms.contains(&Algorithm::Penal);
    let (lambda, curve) = match (plan.lambda_penal, needs_penal) {
        (Some(l), _) => (l, Vec::new()),
        (None, false) => (0.0, Vec::new()),
        (None, true) => {
            // Selection always calibrates against the stationary first position.
            let sel_schedule = SourceSchedule::Fixed(first_primary);
            let (l, curve, _) = select_lambda(&bundle, plan, budget, &sel_schedule, false)?;
            (l, curve)
        }
    };
    let runs = run_algorithms(
        &bundle,
        plan,
        schedule_for_runs,
        lambda,
        j_ext_hat,
        budget,
        plan.scenario.name(),
    )?;
    Ok((
        ExperimentResult {
            scenario: plan.scenario,
            runs,
            lambda_curve: curve,
            selected_lambda: Some(lambda),
            frequency_points: Vec::new(),
            failures: Vec::new(),
            operator_builds: 1,
        },
        bundle,
    ))
}

/// Convergence scenario: all selected algorithms at one frequency with a
/// stationary primary source.
pub fn run_convergence(scene: &Scene, plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    if plan.frequencies.len() != 1 {
        return Err(Error::Config(
            "convergence scenario takes exactly one frequency".into(),
        ));
    }
    let schedule = SourceSchedule::Fixed(scene.primary_source);
    single_frequency(scene, plan, plan.frequencies[0], &schedule).map(|(r, _)| r)
}

/// Penalty-weight sweep at one frequency; the per-lambda traces are the
/// product, along with the selected weight.
pub fn run_lambda_sweep(scene: &Scene, plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    if plan.lambda_grid.is_empty() {
        return Err(Error::Config("lambda sweep needs a non-empty grid".into()));
    }
    let freq = plan.frequencies[0];
    let bundle = build_bundle(scene, plan, freq)?;
    let (j_ext_hat, budget) = calibrate(&bundle, plan, &scene.primary_source)?;
    let schedule = SourceSchedule::Fixed(scene.primary_source);
    let (selected, curve, mut runs) = select_lambda(&bundle, plan, budget, &schedule, true)?;
    for run in &mut runs {
        run.j_ext_hat = j_ext_hat;
    }
    Ok(ExperimentResult {
        scenario: Scenario::LambdaSweep,
        runs,
        lambda_curve: curve,
        selected_lambda: Some(selected),
        frequency_points: Vec::new(),
        failures: Vec::new(),
        operator_builds: 1,
    })
}

/// Frequency sweep: rebuilds operators, recalibrates, reselects the penalty
/// weight, and runs every algorithm at each frequency. Per-frequency
/// failures are recorded and the sweep continues.
pub fn run_freq_sweep(scene: &Scene, plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    if plan.frequencies.len() < 2 {
        return Err(Error::Config(
            "frequency sweep needs at least two frequencies".into(),
        ));
    }
    let outcomes: Vec<(f64, Result<(ExperimentResult, bool, f64, f64, f64)>)> = plan
        .frequencies
        .par_iter()
        .map(|&freq| {
            let sub = ExperimentPlan {
                scenario: Scenario::FreqSweep,
                frequencies: vec![freq],
                ..plan.clone()
            };
            let schedule = SourceSchedule::Fixed(scene.primary_source);
            let res = single_frequency(scene, &sub, freq, &schedule).map(|(r, bundle)| {
                let loading = bundle.radiation.is_loaded();
                let (j_hat, c, lambda) = r
                    .runs
                    .first()
                    .map(|run| (run.j_ext_hat, run.budget_c, r.selected_lambda.unwrap_or(0.0)))
                    .unwrap_or((0.0, 0.0, 0.0));
                (r, loading, j_hat, c, lambda)
            });
            (freq, res)
        })
        .collect();

    let mut runs = Vec::new();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut builds = 0usize;
    let mut ordered = outcomes;
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (freq, outcome) in ordered {
        match outcome {
            Ok((result, loading, j_hat, c, lambda)) => {
                builds += result.operator_builds;
                points.push(FrequencyPoint {
                    freq_hz: freq,
                    j_ext_hat: j_hat,
                    budget_c: c,
                    selected_lambda: lambda,
                    loading_active: loading,
                    finals: result
                        .runs
                        .iter()
                        .map(|r| (r.algorithm, r.summary.final_p_red_db, r.summary.final_j_ext_w))
                        .collect(),
                });
                runs.extend(result.runs);
            }
            Err(e) => failures.push((freq, e.to_string())),
        }
    }
    Ok(ExperimentResult {
        scenario: Scenario::FreqSweep,
        runs,
        lambda_curve: Vec::new(),
        selected_lambda: None,
        frequency_points: points,
        failures,
        operator_builds: builds,
    })
}

/// Moving-source scenario: the primary source jumps to a second position at
/// the configured iteration; budgets and the penalty weight are calibrated
/// from the first position only.
pub fn run_moving_source(scene: &Scene, plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let freq = plan.frequencies[0];
    if plan.move_switch_at >= plan.n_iters {
        return Err(Error::Config(format!(
            "move_switch_at {} must come before n_iters {}",
            plan.move_switch_at, plan.n_iters
        )));
    }
    let schedule = SourceSchedule::StepChange {
        first: scene.primary_source,
        second: plan.second_primary,
        switch_at: plan.move_switch_at,
    };
    single_frequency(scene, plan, freq, &schedule).map(|(r, _)| r)
}

/// Dispatch by scenario.
pub fn run_plan(scene: &Scene, plan: &ExperimentPlan) -> Result<ExperimentResult> {
    match plan.scenario {
        Scenario::Convergence => run_convergence(scene, plan),
        Scenario::LambdaSweep => run_lambda_sweep(scene, plan),
        Scenario::FreqSweep => run_freq_sweep(scene, plan),
        Scenario::MovingSource => run_moving_source(scene, plan),
    }
}
