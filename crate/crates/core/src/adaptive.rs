//! Frequency-domain adaptive controllers: baseline NLMS on the interior
//! energy, NLMS with an exterior-radiation penalty, and the proximal-gradient
//! NLMS with an inequality constraint on radiated power.
//!
//! All step-size operator norms are computed once per controller and cached;
//! they are iteration independent.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::acoustics::{
    primary_at_mics, transfer_matrix, FrequencyContext, Position, RegionalPower, Scene,
};
use crate::kernel_interp::{interior_energy_matrix, InterpolationOperator, QuadratureSpec};
use crate::linalg::{hermitian_solve, spectral_norm, ComplexMatrix, HermitianMatrix};
use crate::radiation::{exterior_power, RadiationOperator};
use crate::{Error, Result};

const SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Interior-energy NLMS without radiation suppression.
    Nlms,
    /// NLMS on interior energy plus a weighted radiation penalty.
    Penal,
    /// Proximal-gradient NLMS with the radiation budget as a hard constraint.
    Const,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Nlms => "nlms",
            Algorithm::Penal => "penal",
            Algorithm::Const => "const",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nlms" => Ok(Algorithm::Nlms),
            "penal" => Ok(Algorithm::Penal),
            "const" => Ok(Algorithm::Const),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected nlms, penal, or const)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Step-size and cost parameters shared by the three controllers.
#[derive(Debug, Clone, Copy)]
pub struct AlgorithmParams {
    /// Normalized step size, in (0, 2).
    pub mu0: f64,
    /// Denominator regularizer (the same value serves the baseline and the
    /// penalty/constraint step sizes).
    pub beta: f64,
    /// Radiation penalty weight in kg/s (penalty controller only).
    pub lambda_penal: f64,
    /// Radiation budget C in watts (constrained controller only).
    pub budget: Option<f64>,
    /// Forgetting factor for the reference autocorrelation estimate.
    pub alpha: f64,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            mu0: 0.9,
            beta: 1e-8,
            lambda_penal: 0.0,
            budget: None,
            alpha: 0.99,
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0 < 2.0) {
            return Err(Error::Config(format!(
                "mu0 must lie in (0, 2), got {}",
                self.mu0
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.lambda_penal < 0.0 {
            return Err(Error::Config(format!(
                "lambda_penal must be nonnegative, got {}",
                self.lambda_penal
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some(c) = self.budget {
            if !(c > 0.0) {
                return Err(Error::Config(format!("budget must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Tracks the inverse of the reference autocorrelation matrix.
///
/// With one reference channel the inverse is simply 1/|x|^2 each iteration.
/// For two or more channels the rank-one forgetting-factor recursion applies
/// (Sherman-Morrison form), seeded from a short sample-power warm-up so the
/// recursion starts from a positive-definite estimate.
#[derive(Debug, Clone)]
pub struct AutocorrInverse {
    lambda: ComplexMatrix,
    warmup_remaining: usize,
    power_accum: f64,
    warmup_total: usize,
}

impl AutocorrInverse {
    const WARMUP: usize = 10;

    pub fn new(dim: usize) -> Self {
        AutocorrInverse {
            lambda: ComplexMatrix::identity(dim),
            warmup_remaining: if dim >= 2 { Self::WARMUP } else { 0 },
            power_accum: 0.0,
            warmup_total: if dim >= 2 { Self::WARMUP } else { 0 },
        }
    }

    /// Starts the recursion from an explicit positive-definite inverse,
    /// skipping the warm-up. Used by oracle tests and resumable runs.
    pub fn from_initial(lambda: ComplexMatrix) -> Self {
        assert_eq!(lambda.rows(), lambda.cols());
        AutocorrInverse {
            lambda,
            warmup_remaining: 0,
            power_accum: 0.0,
            warmup_total: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.lambda
    }

    pub fn update(&mut self, x: &[C64], alpha: f64) {
        let r = self.dim();
        assert_eq!(x.len(), r);
        let norm_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if r == 1 {
            let v = if norm_sq > 0.0 { 1.0 / norm_sq } else { 0.0 };
            self.lambda[(0, 0)] = C64::new(v, 0.0);
            return;
        }
        if self.warmup_remaining > 0 {
            self.power_accum += norm_sq / r as f64;
            self.warmup_remaining -= 1;
            if self.warmup_remaining == 0 {
                let mean_power = self.power_accum / self.warmup_total as f64;
                let scale = if mean_power > 0.0 { 1.0 / mean_power } else { 1.0 };
                self.lambda = ComplexMatrix::identity(r).scale(C64::new(scale, 0.0));
            }
            return;
        }
        // Lambda <- (1/a) [ L - (Lx)(Lx)^H / (x^H L x + a/(1-a)) ]
        let lx = self.lambda.matvec(x);
        let xlx: f64 = x
            .iter()
            .zip(&lx)
            .map(|(xi, yi)| (xi.conj() * yi).re)
            .sum();
        let denom = xlx + alpha / (1.0 - alpha);
        let inv_alpha = 1.0 / alpha;
        for i in 0..r {
            for j in 0..r {
                let rank1 = lx[i] * lx[j].conj() / denom;
                self.lambda[(i, j)] = (self.lambda[(i, j)] - rank1) * inv_alpha;
            }
        }
    }
}

/// Adaptive state: the control filter, iteration counter, autocorrelation
/// inverse, and the most recent drive vector.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub w: ComplexMatrix,
    pub iteration: usize,
    pub autocorr: AutocorrInverse,
    pub last_y: Vec<C64>,
}

impl ControllerState {
    pub fn new(num_sources: usize, num_references: usize) -> Self {
        ControllerState {
            w: ComplexMatrix::zeros(num_sources, num_references),
            iteration: 0,
            autocorr: AutocorrInverse::new(num_references),
            last_y: vec![C64::new(0.0, 0.0); num_sources],
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    /// For the constrained controller: post-projection drive power over the
    /// budget, measured against the (possibly loaded) algorithm matrix.
    pub budget_ratio: Option<f64>,
}

/// One controller bound to a fixed set of operators, with its step-size
/// denominators precomputed.
pub struct Controller {
    algorithm: Algorithm,
    params: AlgorithmParams,
    /// G^H A_int (baseline/penalty) or A_ext^{-1} G^H A_int (constrained).
    grad: ComplexMatrix,
    /// A_ext used inside the penalty gradient (physical, never loaded).
    a_ext_penalty: Option<HermitianMatrix>,
    /// A_ext used by the constrained projection (loaded when safeguarded).
    a_ext_projection: Option<HermitianMatrix>,
    /// Cached spectral norm feeding the step size.
    step_norm: f64,
}

impl Controller {
    pub fn new(
        bundle: &OperatorBundle,
        algorithm: Algorithm,
        params: AlgorithmParams,
    ) -> Result<Self> {
        params.validate()?;
        let g = &bundle.g;
        let b_int = g.adjoint().mul(bundle.interp.a_int.as_matrix());
        match algorithm {
            Algorithm::Nlms => {
                let n = b_int.mul(g);
                Ok(Controller {
                    algorithm,
                    params,
                    grad: b_int,
                    a_ext_penalty: None,
                    a_ext_projection: None,
                    step_norm: spectral_norm(&n, SPECTRAL_TOL),
                })
            }
            Algorithm::Penal => {
                let a_ext = bundle.radiation.matrix().clone();
                let n = b_int
                    .mul(g)
                    .add(&a_ext.as_matrix().scale(C64::new(params.lambda_penal, 0.0)));
                Ok(Controller {
                    algorithm,
                    params,
                    grad: b_int,
                    a_ext_penalty: Some(a_ext),
                    a_ext_projection: None,
                    step_norm: spectral_norm(&n, SPECTRAL_TOL),
                })
            }
            Algorithm::Const => {
                if params.budget.is_none() {
                    return Err(Error::Config(
                        "constrained controller requires a radiation budget".into(),
                    ));
                }
                let a_loaded = bundle.radiation.algorithm_matrix();
                let b_const = hermitian_solve(&a_loaded, &b_int)?;
                let n = b_const.mul(g);
                Ok(Controller {
                    algorithm,
                    params,
                    grad: b_const,
                    a_ext_penalty: None,
                    a_ext_projection: Some(a_loaded),
                    step_norm: spectral_norm(&n, SPECTRAL_TOL),
                })
            }
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// Cached operator norm in the step-size denominator.
    pub fn step_norm(&self) -> f64 {
        self.step_norm
    }

    /// Applies one update with the observed error and reference signals.
    pub fn step(&self, state: &mut ControllerState, e: &[C64], x: &[C64]) -> Result<StepInfo> {
        let x_norm_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let mut info = StepInfo::default();
        match self.algorithm {
            Algorithm::Nlms | Algorithm::Penal => {
                let mu = self.params.mu0 / (self.step_norm * x_norm_sq + self.params.beta);
                let mut direction = self.grad.matvec(e);
                if let Some(a_ext) = &self.a_ext_penalty {
                    let y = state.w.matvec(x);
                    let ay = a_ext.as_matrix().matvec(&y);
                    for (d, a) in direction.iter_mut().zip(&ay) {
                        *d += a * self.params.lambda_penal;
                    }
                }
                for l in 0..state.w.rows() {
                    for r in 0..state.w.cols() {
                        state.w[(l, r)] -= direction[l] * x[r].conj() * mu;
                    }
                }
            }
            Algorithm::Const => {
                state.autocorr.update(x, self.params.alpha);
                let mu = self.params.mu0 / (self.step_norm + self.params.beta);
                let direction = self.grad.matvec(e);
                // Z = W - mu (B e) x^H Lambda
                let xh_lambda: Vec<C64> = (0..state.autocorr.dim())
                    .map(|j| {
                        (0..x.len())
                            .map(|i| x[i].conj() * state.autocorr.matrix()[(i, j)])
                            .sum()
                    })
                    .collect();
                let mut z = state.w.clone();
                for l in 0..z.rows() {
                    for r in 0..z.cols() {
                        z[(l, r)] -= direction[l] * xh_lambda[r] * mu;
                    }
                }
                let y_tilde = z.matvec(x);
                let a_proj = self.a_ext_projection.as_ref().expect("const has projection");
                let q = a_proj.quadratic_form(&y_tilde);
                let budget = self.params.budget.expect("validated at construction");
                let scale = if q > 0.0 {
                    (budget / q).sqrt().min(1.0)
                } else {
                    1.0
                };
                state.w = z.scale(C64::new(scale, 0.0));
                let post = a_proj.quadratic_form(&state.w.matvec(x));
                info.budget_ratio = Some(post / budget);
            }
        }
        state.iteration += 1;
        if !state.w.is_finite() {
            return Err(Error::NonFiniteFilter {
                iteration: state.iteration - 1,
            });
        }
        Ok(info)
    }
}

/// Everything an adaptation run needs at one frequency, built once and
/// shared across controllers.
pub struct OperatorBundle {
    pub scene: Scene,
    pub ctx: FrequencyContext,
    pub g: ComplexMatrix,
    pub interp: InterpolationOperator,
    pub radiation: RadiationOperator,
}

impl OperatorBundle {
    pub fn build(
        scene: &Scene,
        ctx: &FrequencyContext,
        ridge: f64,
        quad: &QuadratureSpec,
        eta: f64,
        cond_threshold: f64,
    ) -> Result<Self> {
        let g = transfer_matrix(scene, ctx)?;
        let interp = interior_energy_matrix(scene, ctx, ridge, quad)?;
        let radiation = RadiationOperator::build_with(
            &scene.secondary_sources,
            ctx,
            scene.dimension,
            eta,
            cond_threshold,
        )
        .maybe_load();
        Ok(OperatorBundle {
            scene: scene.clone(),
            ctx: *ctx,
            g,
            interp,
            radiation,
        })
    }
}

/// Primary-source position as a function of the iteration index.
#[derive(Debug, Clone)]
pub enum SourceSchedule {
    Fixed(Position),
    StepChange {
        first: Position,
        second: Position,
        switch_at: usize,
    },
}

impl SourceSchedule {
    pub fn segments(&self) -> Vec<(usize, Position)> {
        match self {
            SourceSchedule::Fixed(p) => vec![(0, *p)],
            SourceSchedule::StepChange {
                first,
                second,
                switch_at,
            } => vec![(0, *first), (*switch_at, *second)],
        }
    }

    pub fn segment_index(&self, iteration: usize) -> usize {
        match self {
            SourceSchedule::Fixed(_) => 0,
            SourceSchedule::StepChange { switch_at, .. } => usize::from(iteration >= *switch_at),
        }
    }
}

/// Protocol settings for one adaptation run.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub n_iters: usize,
    pub noise_seed: u64,
    /// Per-channel signal-to-noise ratio in dB; `None` disables noise.
    pub snr_db: Option<f64>,
}

/// One line of the adaptation trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub p_red_db: f64,
    pub j_ext_w: f64,
    pub j_int: f64,
    pub w_frob: f64,
}

/// Completed run: the full trace plus the final filter and the worst
/// post-projection budget ratio seen (constrained controller only).
pub struct RunOutput {
    pub records: Vec<IterationRecord>,
    pub final_w: ComplexMatrix,
    pub max_budget_ratio: Option<f64>,
}

/// Runs one adaptation: constant unit noise amplitude in the frequency
/// domain, per-channel measurement noise at the configured SNR, metrics
/// recorded each iteration before the filter update (so iteration 0 reports
/// the zero-filter state). Reported radiated power always uses the physical
/// (unloaded) operator; reduction uses noiseless field synthesis.
pub fn run_adaptation(
    bundle: &OperatorBundle,
    algorithm: Algorithm,
    params: AlgorithmParams,
    settings: &RunSettings,
    schedule: &SourceSchedule,
) -> Result<RunOutput> {
    let controller = Controller::new(bundle, algorithm, params)?;
    let scene = &bundle.scene;
    let l = scene.num_sources();
    let r = scene.reference_count;

    struct Segment {
        start: usize,
        d_clean: Vec<C64>,
        power: RegionalPower,
    }
    let mut segments = Vec::new();
    for (start, pos) in schedule.segments() {
        segments.push(Segment {
            start,
            d_clean: primary_at_mics(scene, &bundle.ctx, &pos)?,
            power: RegionalPower::build(scene, &bundle.ctx, &pos)?,
        });
    }
    segments.sort_by_key(|s| s.start);

    let mut rng = ChaCha12Rng::seed_from_u64(settings.noise_seed);
    let mut state = ControllerState::new(l, r);
    let mut records = Vec::with_capacity(settings.n_iters);
    let mut max_budget_ratio: Option<f64> = None;

    let s_amp = C64::new(1.0, 0.0);
    let x_clean = vec![C64::new(1.0, 0.0); r];
    let mut e_clean = vec![C64::new(0.0, 0.0); scene.num_mics()];

    for n in 0..settings.n_iters {
        let seg = &segments[schedule.segment_index(n)];
        let x = draw_noisy(&x_clean, settings.snr_db, &mut rng);
        let y = state.w.matvec(&x);
        let gy = bundle.g.matvec(&y);
        for ((ec, d), gyi) in e_clean.iter_mut().zip(&seg.d_clean).zip(&gy) {
            *ec = d + gyi;
        }
        let e = draw_noisy(&e_clean, settings.snr_db, &mut rng);

        records.push(IterationRecord {
            iter: n,
            p_red_db: seg.power.reduction_db(&y, s_amp),
            j_ext_w: exterior_power(&bundle.radiation, &y),
            j_int: bundle.interp.a_int.quadratic_form(&e_clean),
            w_frob: state.w.frobenius_norm(),
        });
        state.last_y = y;

        let info = controller.step(&mut state, &e, &x)?;
        if let Some(ratio) = info.budget_ratio {
            max_budget_ratio = Some(max_budget_ratio.map_or(ratio, |m: f64| m.max(ratio)));
        }
    }
    Ok(RunOutput {
        records,
        final_w: state.w,
        max_budget_ratio,
    })
}

/// Adds circularly-symmetric complex Gaussian noise per channel at the given
/// SNR relative to that channel's clean magnitude.
fn draw_noisy(clean: &[C64], snr_db: Option<f64>, rng: &mut ChaCha12Rng) -> Vec<C64> {
    match snr_db {
        None => clean.to_vec(),
        Some(snr) => {
            let gain = 10f64.powf(-snr / 20.0) / 2f64.sqrt();
            clean
                .iter()
                .map(|c| {
                    let sigma = c.norm() * gain;
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    c + C64::new(sigma * re, sigma * im)
                })
                .collect()
        }
    }
}
