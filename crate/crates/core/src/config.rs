//! Run configuration: TOML with [scene], [plan], [algorithm], and [output]
//! sections, strict about unknown keys, with every default resolvable so the
//! effective configuration can be echoed next to the results.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::acoustics::{disk_eval_grid, Dimension, Position, Scene, RING_OFFSET_DEFAULT};
use crate::adaptive::Algorithm;
use crate::harness::{ExperimentPlan, Scenario};
use crate::kernel_interp::QuadratureSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    /// "paper" selects the reference experiment geometry.
    #[serde(default = "default_preset")]
    pub preset: String,
    /// Outer-ring angular offset (fraction of half the angular step).
    #[serde(default = "default_ring_offset")]
    pub ring_offset: f64,
    /// Explicit geometry (overrides the preset when given).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_sources: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_mics: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_source: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_target_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sound_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub air_density: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            preset: default_preset(),
            ring_offset: default_ring_offset(),
            dimension: None,
            target_center: None,
            target_radius: None,
            secondary_sources: None,
            error_mics: None,
            primary_source: None,
            reference_count: None,
            eval_target_count: None,
            sound_speed: None,
            air_density: None,
        }
    }
}

fn default_preset() -> String {
    "paper".into()
}
fn default_ring_offset() -> f64 {
    RING_OFFSET_DEFAULT
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    /// Sweep shorthand used when `frequencies` is absent.
    #[serde(default = "default_freq_start")]
    pub freq_start: f64,
    #[serde(default = "default_freq_stop")]
    pub freq_stop: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_iters: Option<usize>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_budget_fraction")]
    pub budget_fraction: f64,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// Per-channel SNR in dB; `inf` disables measurement noise.
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    /// Paper-scale sweep (10 Hz steps, 50k iterations) instead of desk scale.
    #[serde(default)]
    pub paper_scale: bool,
    #[serde(default = "default_move_switch")]
    pub move_switch_at: usize,
    #[serde(default = "default_second_primary")]
    pub second_primary: [f64; 2],
}

impl Default for PlanConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty plan section is valid")
    }
}

fn default_scenario() -> String {
    "converge".into()
}
fn default_freq_start() -> f64 {
    100.0
}
fn default_freq_stop() -> f64 {
    1000.0
}
fn default_algorithms() -> Vec<String> {
    vec!["nlms".into(), "penal".into(), "const".into()]
}
fn default_lambda_grid() -> Vec<f64> {
    vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]
}
fn default_budget_fraction() -> f64 {
    0.5
}
fn default_master_seed() -> u64 {
    1
}
fn default_snr() -> f64 {
    40.0
}
fn default_move_switch() -> usize {
    25_000
}
fn default_second_primary() -> [f64; 2] {
    [-2.0, 0.2]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    #[serde(default = "default_mu0")]
    pub mu0: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Fixed penalty weight; omit to select from the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_penal: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ridge")]
    pub lambda_ridge: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_cond_threshold")]
    pub cond_threshold: f64,
    #[serde(default = "default_quad_density")]
    pub quad_density: u32,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty algorithm section is valid")
    }
}

fn default_mu0() -> f64 {
    0.9
}
fn default_beta() -> f64 {
    1e-8
}
fn default_alpha() -> f64 {
    0.99
}
fn default_ridge() -> f64 {
    crate::kernel_interp::RIDGE_DEFAULT
}
fn default_eta() -> f64 {
    crate::radiation::ETA_DEFAULT
}
fn default_cond_threshold() -> f64 {
    crate::radiation::COND_THRESHOLD_DEFAULT
}
fn default_quad_density() -> u32 {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    /// Logarithmic iteration axis in the per-iteration plots.
    #[serde(default)]
    pub log_iterations: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            formats: default_formats(),
            log_iterations: false,
        }
    }
}

fn default_out_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into(), "svg".into()]
}

impl RunConfig {
    /// Parses a TOML file; unknown keys are rejected with their path.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.build_scene()?;
        self.build_plan()?;
        for f in &self.output.formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg") {
                return Err(Error::Config(format!(
                    "unknown output format '{f}' (expected csv, json, or svg)"
                )));
            }
        }
        Ok(())
    }

    /// Scene resolved from the preset or the explicit geometry keys.
    pub fn build_scene(&self) -> Result<Scene> {
        let sc = &self.scene;
        if sc.secondary_sources.is_some() || sc.error_mics.is_some() {
            let to3 = |p: &[f64; 2]| -> Position { [p[0], p[1], 0.0] };
            let dim = match sc.dimension.unwrap_or(2) {
                2 => Dimension::Two,
                3 => Dimension::Three,
                other => {
                    return Err(Error::Config(format!(
                        "dimension must be 2 or 3, got {other}"
                    )))
                }
            };
            let center = to3(&sc.target_center.unwrap_or([0.0, 0.0]));
            let radius = sc.target_radius.unwrap_or(0.5);
            let (eval_points, eval_spacing) =
                disk_eval_grid(center, radius, sc.eval_target_count.unwrap_or(1240))?;
            let scene = Scene {
                dimension: dim,
                target_center: center,
                target_radius: radius,
                secondary_sources: sc
                    .secondary_sources
                    .as_ref()
                    .map(|v| v.iter().map(to3).collect())
                    .unwrap_or_default(),
                error_mics: sc
                    .error_mics
                    .as_ref()
                    .map(|v| v.iter().map(to3).collect())
                    .unwrap_or_default(),
                reference_count: sc.reference_count.unwrap_or(1),
                primary_source: to3(&sc.primary_source.unwrap_or([-3.0, 0.2])),
                eval_points,
                eval_spacing,
                sound_speed: sc.sound_speed.unwrap_or(340.0),
                air_density: sc.air_density.unwrap_or(1.3),
            };
            scene.validate()?;
            return Ok(scene);
        }
        match sc.preset.as_str() {
            "paper" => Ok(Scene::paper_with_offset(sc.ring_offset)),
            other => Err(Error::Config(format!(
                "unknown scene preset '{other}' (expected 'paper' or explicit geometry)"
            ))),
        }
    }

    /// Experiment plan with all defaults resolved.
    pub fn build_plan(&self) -> Result<ExperimentPlan> {
        let pc = &self.plan;
        let scenario = match pc.scenario.as_str() {
            "converge" => Scenario::Convergence,
            "lambda-sweep" => Scenario::LambdaSweep,
            "freq-sweep" => Scenario::FreqSweep,
            "moving-source" => Scenario::MovingSource,
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario '{other}' (expected converge, lambda-sweep, freq-sweep, or moving-source)"
                )))
            }
        };
        let frequencies = match (&pc.frequencies, scenario) {
            (Some(f), _) => f.clone(),
            (None, Scenario::FreqSweep) => {
                let step = pc
                    .freq_step
                    .unwrap_or(if pc.paper_scale { 10.0 } else { 100.0 });
                if !(step > 0.0) {
                    return Err(Error::Config("freq_step must be positive".into()));
                }
                let mut f = pc.freq_start;
                let mut out = Vec::new();
                while f <= pc.freq_stop + 1e-9 {
                    out.push(f);
                    f += step;
                }
                out
            }
            (None, _) => vec![600.0],
        };
        let n_iters = pc.n_iters.unwrap_or(match scenario {
            Scenario::FreqSweep if !pc.paper_scale => 10_000,
            _ => 50_000,
        });
        let algorithms: Vec<Algorithm> = pc
            .algorithms
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?;
        let snr_db = if pc.snr_db.is_infinite() {
            None
        } else {
            Some(pc.snr_db)
        };
        let ac = &self.algorithm;
        let plan = ExperimentPlan {
            scenario,
            frequencies,
            n_iters,
            algorithms,
            lambda_grid: pc.lambda_grid.clone(),
            budget_fraction: pc.budget_fraction,
            lambda_penal: ac.lambda_penal,
            master_seed: pc.master_seed,
            snr_db,
            mu0: ac.mu0,
            beta: ac.beta,
            alpha: ac.alpha,
            ridge: ac.lambda_ridge,
            quadrature: QuadratureSpec {
                density: ac.quad_density,
            },
            eta: ac.eta,
            cond_threshold: ac.cond_threshold,
            move_switch_at: pc.move_switch_at,
            second_primary: [pc.second_primary[0], pc.second_primary[1], 0.0],
        };
        plan.validate()?;
        Ok(plan)
    }
}
