//! Free-field propagation from point sources (2D and 3D), scene geometry,
//! and ground-truth field evaluation over the target region.
//!
//! Time convention: fields carry e^{-j omega t}, so outgoing waves are
//! H0^(1)(kr) in 2D and e^{+jkr}/(4 pi r) in 3D. With this choice the
//! radiated-power surface integral in `radiation` comes out positive with
//! the +j/(rho c k) intensity factor; the radiation oracle test pins the
//! convention end to end.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;
use crate::special::{bessel_j0, bessel_y0};
use crate::{Error, Result};

pub type Position = [f64; 3];

/// Angular offset of the outer ring relative to the inner one in the paper
/// preset, as a fraction of half the angular step. Near-aligned rings match
/// the reported low-frequency conditioning and penalty-weight behavior while
/// avoiding the exactly-degenerate drive modes of perfect alignment.
pub const RING_OFFSET_DEFAULT: f64 = 0.06;

pub fn distance(a: &Position, b: &Position) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

/// Geometry of one experiment: target region, arrays, primary source,
/// evaluation grid, and the physical constants.
#[derive(Debug, Clone)]
pub struct Scene {
    pub dimension: Dimension,
    pub target_center: Position,
    pub target_radius: f64,
    pub secondary_sources: Vec<Position>,
    pub error_mics: Vec<Position>,
    pub reference_count: usize,
    pub primary_source: Position,
    pub eval_points: Vec<Position>,
    pub eval_spacing: f64,
    pub sound_speed: f64,
    pub air_density: f64,
}

impl Scene {
    /// The 2D free-field experiment geometry: disk of radius 0.5 m at the
    /// origin, 12 secondary sources on circles of 0.9/1.1 m, 24 error mics
    /// on circles of 0.47/0.53 m, primary source at (-3.0, 0.2) m, one
    /// reference signal, 1240 evaluation points, c = 340 m/s, rho = 1.3 kg/m^3.
    pub fn paper() -> Scene {
        Self::paper_with_offset(RING_OFFSET_DEFAULT)
    }

    /// Same geometry with an explicit ring offset (fraction of half the
    /// angular step applied to the outer ring of each concentric pair).
    pub fn paper_with_offset(ring_offset: f64) -> Scene {
        let mut sources = ring_positions(6, 0.9, 0.0);
        sources.extend(ring_positions(
            6,
            1.1,
            ring_offset * std::f64::consts::PI / 6.0,
        ));
        let mut mics = ring_positions(12, 0.47, 0.0);
        mics.extend(ring_positions(
            12,
            0.53,
            ring_offset * std::f64::consts::PI / 12.0,
        ));
        let (eval_points, eval_spacing) =
            disk_eval_grid([0.0; 3], 0.5, 1240).expect("1240-point grid for radius 0.5");
        let scene = Scene {
            dimension: Dimension::Two,
            target_center: [0.0; 3],
            target_radius: 0.5,
            secondary_sources: sources,
            error_mics: mics,
            reference_count: 1,
            primary_source: [-3.0, 0.2, 0.0],
            eval_points,
            eval_spacing,
            sound_speed: 340.0,
            air_density: 1.3,
        };
        scene.validate().expect("paper scene is valid");
        scene
    }

    pub fn num_sources(&self) -> usize {
        self.secondary_sources.len()
    }

    pub fn num_mics(&self) -> usize {
        self.error_mics.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sound_speed <= 0.0 || self.air_density <= 0.0 {
            return Err(Error::InvalidScene(
                "sound speed and air density must be positive".into(),
            ));
        }
        if self.target_radius <= 0.0 {
            return Err(Error::InvalidScene("target radius must be positive".into()));
        }
        if self.secondary_sources.is_empty() || self.error_mics.is_empty() {
            return Err(Error::InvalidScene(
                "need at least one secondary source and one error microphone".into(),
            ));
        }
        if self.reference_count == 0 {
            return Err(Error::InvalidScene(
                "need at least one reference signal".into(),
            ));
        }
        let r = self.target_radius;
        // Mic rings straddle the region boundary (inner/outer pair), so the
        // sanity bound allows a margin beyond the nominal radius.
        for (i, m) in self.error_mics.iter().enumerate() {
            if distance(m, &self.target_center) > r * 1.5 {
                return Err(Error::InvalidScene(format!(
                    "error mic {i} lies too far outside the target region"
                )));
            }
        }
        for (i, s) in self.secondary_sources.iter().enumerate() {
            if distance(s, &self.target_center) <= r {
                return Err(Error::InvalidScene(format!(
                    "secondary source {i} is not outside the target region"
                )));
            }
        }
        if distance(&self.primary_source, &self.target_center) <= r {
            return Err(Error::InvalidScene(
                "primary source is not outside the target region".into(),
            ));
        }
        for (i, p) in self.eval_points.iter().enumerate() {
            if distance(p, &self.target_center) >= r {
                return Err(Error::InvalidScene(format!(
                    "evaluation point {i} is not inside the target region"
                )));
            }
        }
        if self.dimension == Dimension::Two {
            let flat = self
                .secondary_sources
                .iter()
                .chain(&self.error_mics)
                .chain(std::iter::once(&self.primary_source))
                .all(|p| p[2] == 0.0);
            if !flat {
                return Err(Error::InvalidScene(
                    "2D scene has positions with nonzero z".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `n` points at regular angular intervals on a circle in the z = 0 plane.
pub fn ring_positions(n: usize, radius: f64, angle_offset: f64) -> Vec<Position> {
    (0..n)
        .map(|i| {
            let th = angle_offset + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [radius * th.cos(), radius * th.sin(), 0.0]
        })
        .collect()
}

/// Cell-centered square grid with spacing chosen so that exactly
/// `target_count` points fall strictly inside the disk.
///
/// A lattice containing the origin has point counts congruent to 1 mod 4 and
/// can never reach 1240; the cell-centered family (counts divisible by 4)
/// can. The spacing is picked halfway between the two quarter-lattice radii
/// that bracket `target_count / 4` points, which makes the construction
/// deterministic and robust to round-off.
pub fn disk_eval_grid(
    center: Position,
    radius: f64,
    target_count: usize,
) -> Result<(Vec<Position>, f64)> {
    if target_count == 0 || target_count % 4 != 0 {
        return Err(Error::InvalidScene(format!(
            "eval grid target count must be a positive multiple of 4, got {target_count}"
        )));
    }
    let quarter = target_count / 4;
    // Squared norms of the first-quadrant lattice points (i+1/2, j+1/2).
    let span = (2.0 * (quarter as f64)).sqrt() as usize + 4;
    let mut norms = Vec::with_capacity(span * span);
    for i in 0..span {
        for j in 0..span {
            let x = i as f64 + 0.5;
            let y = j as f64 + 0.5;
            norms.push(x * x + y * y);
        }
    }
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let inner = norms[quarter - 1];
    let outer = norms[quarter];
    if !(outer > inner) {
        return Err(Error::InvalidScene(format!(
            "no square-lattice spacing yields exactly {target_count} points (tied lattice radii)"
        )));
    }
    let rho2 = 0.5 * (inner + outer);
    let spacing = radius / rho2.sqrt();
    let half = (radius / spacing) as i64 + 2;
    let mut points = Vec::with_capacity(target_count);
    for i in -half..half {
        for j in -half..half {
            let x = (i as f64 + 0.5) * spacing;
            let y = (j as f64 + 0.5) * spacing;
            if x * x + y * y < radius * radius {
                points.push([center[0] + x, center[1] + y, center[2]]);
            }
        }
    }
    debug_assert_eq!(points.len(), target_count);
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((points, spacing))
}

/// Midpoint quadrature nodes and weights over a disk (2D) or ball (3D).
/// Interior cells weigh `spacing^dim`; cells straddling the boundary are
/// weighted by their inside fraction, counted on a subcell grid, which
/// removes the lattice boundary jitter from integrals.
pub fn region_quadrature(
    dimension: Dimension,
    center: Position,
    radius: f64,
    spacing: f64,
) -> (Vec<Position>, Vec<f64>) {
    let h = spacing;
    let half = (radius / h) as i64 + 2;
    let r2 = radius * radius;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let ks: Vec<i64> = match dimension {
        Dimension::Two => vec![0],
        Dimension::Three => (-half..half).collect(),
    };
    for i in -half..half {
        for j in -half..half {
            for &k in &ks {
                let x = (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                let z = match dimension {
                    Dimension::Two => 0.0,
                    Dimension::Three => (k as f64 + 0.5) * h,
                };
                let near = near_far(x, h).0 + near_far(y, h).0 + near_far(z, h).0 * z_mask(dimension);
                let far = near_far(x, h).1 + near_far(y, h).1 + near_far(z, h).1 * z_mask(dimension);
                if near >= r2 {
                    continue;
                }
                let cell = match dimension {
                    Dimension::Two => h * h,
                    Dimension::Three => h * h * h,
                };
                let w = if far < r2 {
                    cell
                } else {
                    cell * inside_fraction(dimension, x, y, z, h, r2)
                };
                if w > 0.0 {
                    nodes.push([center[0] + x, center[1] + y, center[2] + z]);
                    weights.push(w);
                }
            }
        }
    }
    (nodes, weights)
}

fn z_mask(dimension: Dimension) -> f64 {
    match dimension {
        Dimension::Two => 0.0,
        Dimension::Three => 1.0,
    }
}

/// Squared distances of the nearest and farthest point of the interval
/// [c - h/2, c + h/2] from 0, returned as (near^2, far^2) contributions.
fn near_far(c: f64, h: f64) -> (f64, f64) {
    let lo = (c.abs() - 0.5 * h).max(0.0);
    let hi = c.abs() + 0.5 * h;
    (lo * lo, hi * hi)
}

fn inside_fraction(dimension: Dimension, x: f64, y: f64, z: f64, h: f64, r2: f64) -> f64 {
    match dimension {
        Dimension::Two => {
            const SUB: usize = 16;
            let mut cnt = 0usize;
            for a in 0..SUB {
                for b in 0..SUB {
                    let sx = x - 0.5 * h + (a as f64 + 0.5) * h / SUB as f64;
                    let sy = y - 0.5 * h + (b as f64 + 0.5) * h / SUB as f64;
                    if sx * sx + sy * sy < r2 {
                        cnt += 1;
                    }
                }
            }
            cnt as f64 / (SUB * SUB) as f64
        }
        Dimension::Three => {
            const SUB: usize = 8;
            let mut cnt = 0usize;
            for a in 0..SUB {
                for b in 0..SUB {
                    for c in 0..SUB {
                        let sx = x - 0.5 * h + (a as f64 + 0.5) * h / SUB as f64;
                        let sy = y - 0.5 * h + (b as f64 + 0.5) * h / SUB as f64;
                        let sz = z - 0.5 * h + (c as f64 + 0.5) * h / SUB as f64;
                        if sx * sx + sy * sy + sz * sz < r2 {
                            cnt += 1;
                        }
                    }
                }
            }
            cnt as f64 / (SUB * SUB * SUB) as f64
        }
    }
}

/// Physical constants and derived quantities for one monochromatic run.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyContext {
    pub frequency: f64,
    pub angular_frequency: f64,
    pub wavenumber: f64,
    pub sound_speed: f64,
    pub air_density: f64,
}

impl FrequencyContext {
    pub fn new(frequency: f64, scene: &Scene) -> Result<Self> {
        if !(frequency > 0.0) {
            return Err(Error::Domain(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        let omega = 2.0 * std::f64::consts::PI * frequency;
        Ok(FrequencyContext {
            frequency,
            angular_frequency: omega,
            wavenumber: omega / scene.sound_speed,
            sound_speed: scene.sound_speed,
            air_density: scene.air_density,
        })
    }
}

/// Free-field transfer function of a unit point source.
///
/// 2D: (j/4) H0^(1)(k d) = (-Y0 + j J0)(k d)/4; 3D: e^{+jkd}/(4 pi d).
pub fn green(
    r: &Position,
    r_src: &Position,
    ctx: &FrequencyContext,
    dimension: Dimension,
) -> Result<C64> {
    let d = distance(r, r_src);
    if d == 0.0 {
        return Err(Error::Domain(
            "green: coincident source and field point".into(),
        ));
    }
    let kd = ctx.wavenumber * d;
    match dimension {
        Dimension::Two => {
            let j0 = bessel_j0(kd);
            let y0 = bessel_y0(kd)?;
            Ok(C64::new(-0.25 * y0, 0.25 * j0))
        }
        Dimension::Three => {
            let amp = 1.0 / (4.0 * std::f64::consts::PI * d);
            Ok(C64::new(amp * kd.cos(), amp * kd.sin()))
        }
    }
}

/// M x L matrix of transfer functions from each secondary source to each
/// error microphone.
pub fn transfer_matrix(scene: &Scene, ctx: &FrequencyContext) -> Result<ComplexMatrix> {
    let m = scene.num_mics();
    let l = scene.num_sources();
    let mut g = ComplexMatrix::zeros(m, l);
    for (i, mic) in scene.error_mics.iter().enumerate() {
        for (j, src) in scene.secondary_sources.iter().enumerate() {
            g[(i, j)] = green(mic, src, ctx, scene.dimension)?;
        }
    }
    Ok(g)
}

/// Primary field at the error microphones for a unit-strength primary source.
pub fn primary_at_mics(scene: &Scene, ctx: &FrequencyContext, primary: &Position) -> Result<Vec<C64>> {
    scene
        .error_mics
        .iter()
        .map(|m| green(m, primary, ctx, scene.dimension))
        .collect()
}

/// Total pressure field over the evaluation grid for primary amplitude `s`
/// and secondary drive vector `y`.
pub fn evaluate_total_field(
    scene: &Scene,
    ctx: &FrequencyContext,
    y: &[C64],
    s: C64,
) -> Result<Vec<C64>> {
    if y.len() != scene.num_sources() {
        return Err(Error::DimensionMismatch(format!(
            "drive vector has {} entries for {} sources",
            y.len(),
            scene.num_sources()
        )));
    }
    let mut field = Vec::with_capacity(scene.eval_points.len());
    for p in &scene.eval_points {
        let mut u = s * green(p, &scene.primary_source, ctx, scene.dimension)?;
        for (yl, src) in y.iter().zip(&scene.secondary_sources) {
            u += yl * green(p, src, ctx, scene.dimension)?;
        }
        field.push(u);
    }
    Ok(field)
}

/// Regional noise power reduction in dB:
/// 10 log10( sum |u_total|^2 / sum |u_primary|^2 ).
/// Perfect cancellation returns negative infinity.
pub fn regional_power_reduction(u_total: &[C64], u_primary: &[C64]) -> Result<f64> {
    if u_total.len() != u_primary.len() {
        return Err(Error::DimensionMismatch(
            "field vectors of different length".into(),
        ));
    }
    let p_primary: f64 = u_primary.iter().map(|z| z.norm_sqr()).sum();
    if p_primary == 0.0 {
        return Err(Error::ZeroPrimaryField);
    }
    let p_total: f64 = u_total.iter().map(|z| z.norm_sqr()).sum();
    if p_total == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (p_total / p_primary).log10())
}

/// Precomputed quadratic form for the grid power of the total field,
/// sum_j |s g_p(r_j) + sum_l y_l g_l(r_j)|^2, so per-iteration reduction
/// metrics cost O(L^2) instead of O(L * #grid).
#[derive(Debug, Clone)]
pub struct RegionalPower {
    primary_power: f64,
    cross: Vec<C64>,
    source_gram: ComplexMatrix,
}

impl RegionalPower {
    pub fn build(scene: &Scene, ctx: &FrequencyContext, primary: &Position) -> Result<Self> {
        let n = scene.eval_points.len();
        let l = scene.num_sources();
        let mut e_p = Vec::with_capacity(n);
        for p in &scene.eval_points {
            e_p.push(green(p, primary, ctx, scene.dimension)?);
        }
        let mut e_s = ComplexMatrix::zeros(n, l);
        for (i, p) in scene.eval_points.iter().enumerate() {
            for (j, src) in scene.secondary_sources.iter().enumerate() {
                e_s[(i, j)] = green(p, src, ctx, scene.dimension)?;
            }
        }
        let primary_power = e_p.iter().map(|z| z.norm_sqr()).sum();
        let esh = e_s.adjoint();
        let cross = esh.matvec(&e_p);
        let source_gram = esh.mul(&e_s);
        Ok(RegionalPower {
            primary_power,
            cross,
            source_gram,
        })
    }

    /// Grid power of the total field for primary amplitude `s`, drive `y`.
    pub fn total_power(&self, y: &[C64], s: C64) -> f64 {
        let gy = self.source_gram.matvec(y);
        let quad: f64 = y.iter().zip(&gy).map(|(a, b)| (a.conj() * b).re).sum();
        let cross: f64 = self
            .cross
            .iter()
            .zip(y)
            .map(|(v, yl)| (s.conj() * v.conj() * yl).re)
            .sum();
        self.primary_power * s.norm_sqr() + 2.0 * cross + quad
    }

    /// Reduction in dB relative to the primary field alone.
    pub fn reduction_db(&self, y: &[C64], s: C64) -> f64 {
        let total = self.total_power(y, s).max(0.0);
        let primary = self.primary_power * s.norm_sqr();
        if total == 0.0 {
            f64::NEG_INFINITY
        } else {
            10.0 * (total / primary).log10()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scene_counts_and_constants() {
        let s = Scene::paper();
        assert_eq!(s.num_sources(), 12);
        assert_eq!(s.num_mics(), 24);
        assert_eq!(s.eval_points.len(), 1240);
        assert_eq!(s.reference_count, 1);
        assert_eq!(s.sound_speed, 340.0);
        assert_eq!(s.air_density, 1.3);
        assert_eq!(s.primary_source, [-3.0, 0.2, 0.0]);
    }

    #[test]
    fn paper_scene_eval_points_inside_disk() {
        let s = Scene::paper();
        assert!(s
            .eval_points
            .iter()
            .all(|p| distance(p, &s.target_center) < 0.5));
    }

    #[test]
    fn paper_scene_source_clearance() {
        let s = Scene::paper();
        let min_clearance = s
            .secondary_sources
            .iter()
            .map(|p| distance(p, &s.target_center) - s.target_radius)
            .fold(f64::INFINITY, f64::min);
        assert!((min_clearance - 0.4).abs() < 1e-12);
    }

    #[test]
    fn eval_grid_spacing_near_quarter_wave() {
        let (pts, h) = disk_eval_grid([0.0; 3], 0.5, 1240).unwrap();
        assert_eq!(pts.len(), 1240);
        assert!((h - 0.025).abs() < 5e-4, "spacing {h}");
        // grid area matches the disk to a fraction of a percent
        let area = pts.len() as f64 * h * h;
        assert!((area / (std::f64::consts::PI * 0.25) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn quadrature_reproduces_disk_area() {
        let (_, h) = disk_eval_grid([0.0; 3], 0.5, 1240).unwrap();
        let (_, w) = region_quadrature(Dimension::Two, [0.0; 3], 0.5, h / 4.0);
        let area: f64 = w.iter().sum();
        let exact = std::f64::consts::PI * 0.25;
        assert!(
            (area / exact - 1.0).abs() < 1e-3,
            "area {area} vs {exact}"
        );
    }

    #[test]
    fn quadrature_reproduces_ball_volume() {
        let (_, w) = region_quadrature(Dimension::Three, [0.0; 3], 0.5, 0.02);
        let vol: f64 = w.iter().sum();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((vol / exact - 1.0).abs() < 1e-3, "vol {vol} vs {exact}");
    }

    #[test]
    fn green_rejects_coincident_points() {
        let s = Scene::paper();
        let ctx = FrequencyContext::new(600.0, &s).unwrap();
        let p = [0.1, 0.2, 0.0];
        assert!(green(&p, &p, &ctx, Dimension::Two).is_err());
    }

    #[test]
    fn green_3d_unit_amplitude() {
        // |G| = 1/(4 pi d): at d = 1/(4 pi) the magnitude is 1.
        let s = Scene::paper();
        let ctx = FrequencyContext::new(1e-6, &s).unwrap();
        let d = 1.0 / (4.0 * std::f64::consts::PI);
        let g = green(&[d, 0.0, 0.0], &[0.0; 3], &ctx, Dimension::Three).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn green_2d_magnitude_identity() {
        let s = Scene::paper();
        let ctx = FrequencyContext::new(600.0, &s).unwrap();
        let r = [1.3, -0.4, 0.0];
        let g = green(&r, &[0.0; 3], &ctx, Dimension::Two).unwrap();
        let kd = ctx.wavenumber * distance(&r, &[0.0; 3]);
        let expect = 0.25 * (bessel_j0(kd).powi(2) + bessel_y0(kd).unwrap().powi(2)).sqrt();
        assert!((g.norm() - expect).abs() < 1e-12);
    }

    #[test]
    fn frequency_context_derived_quantities() {
        let s = Scene::paper();
        let ctx = FrequencyContext::new(600.0, &s).unwrap();
        assert!((ctx.angular_frequency - 2.0 * std::f64::consts::PI * 600.0).abs() < 1e-9);
        assert!((ctx.wavenumber - ctx.angular_frequency / 340.0).abs() < 1e-12);
        assert!(FrequencyContext::new(0.0, &s).is_err());
    }

    #[test]
    fn transfer_matrix_shape_and_permutation() {
        let mut s = Scene::paper();
        let ctx = FrequencyContext::new(600.0, &s).unwrap();
        let g = transfer_matrix(&s, &ctx).unwrap();
        assert_eq!((g.rows(), g.cols()), (24, 12));
        assert!(g.is_finite());
        s.secondary_sources.swap(2, 7);
        let g2 = transfer_matrix(&s, &ctx).unwrap();
        for i in 0..24 {
            assert_eq!(g[(i, 2)], g2[(i, 7)]);
            assert_eq!(g[(i, 7)], g2[(i, 2)]);
        }
    }

    #[test]
    fn total_field_superposition() {
        let scene = Scene::paper();
        let ctx = FrequencyContext::new(320.0, &scene).unwrap();
        let l = scene.num_sources();
        let zero = vec![C64::new(0.0, 0.0); l];
        let mut y1 = zero.clone();
        y1[0] = C64::new(1.0, -0.5);
        let mut y2 = zero.clone();
        y2[5] = C64::new(-0.3, 0.8);
        let s = C64::new(1.0, 0.0);
        let f0 = evaluate_total_field(&scene, &ctx, &zero, s).unwrap();
        let f1 = evaluate_total_field(&scene, &ctx, &y1, s).unwrap();
        let f2 = evaluate_total_field(&scene, &ctx, &y2, s).unwrap();
        let y12: Vec<C64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let f12 = evaluate_total_field(&scene, &ctx, &y12, s).unwrap();
        for j in 0..f0.len() {
            let lin = f1[j] + f2[j] - f0[j];
            assert!((f12[j] - lin).norm() < 1e-12);
        }
    }

    #[test]
    fn reduction_metric_values() {
        let u = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        assert_eq!(regional_power_reduction(&u, &u).unwrap(), 0.0);
        let tenth: Vec<C64> = u.iter().map(|z| z / 10f64.sqrt()).collect();
        assert!((regional_power_reduction(&tenth, &u).unwrap() + 10.0).abs() < 1e-12);
        let zero = vec![C64::new(0.0, 0.0); 2];
        assert_eq!(
            regional_power_reduction(&zero, &u).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(regional_power_reduction(&u, &zero).is_err());
    }

    #[test]
    fn regional_power_matches_direct_field_sum() {
        let scene = Scene::paper();
        let ctx = FrequencyContext::new(600.0, &scene).unwrap();
        let rp = RegionalPower::build(&scene, &ctx, &scene.primary_source).unwrap();
        let mut y = vec![C64::new(0.0, 0.0); scene.num_sources()];
        y[3] = C64::new(0.02, -0.01);
        y[9] = C64::new(-0.015, 0.03);
        let s = C64::new(1.0, 0.0);
        let field = evaluate_total_field(&scene, &ctx, &y, s).unwrap();
        let direct: f64 = field.iter().map(|z| z.norm_sqr()).sum();
        let fast = rp.total_power(&y, s);
        assert!(
            ((fast - direct) / direct).abs() < 1e-12,
            "fast {fast} vs direct {direct}"
        );
    }
}
