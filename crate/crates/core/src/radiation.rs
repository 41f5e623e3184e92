//! Exterior radiation power of the secondary-source array: the quadratic
//! operator built from point-source coupling, the condition-number loading
//! safeguard used by the constrained controller, and the Wiener reference
//! that calibrates radiation budgets.

use num_complex::Complex64 as C64;

use crate::acoustics::{distance, Dimension, FrequencyContext, Position};
use crate::linalg::{
    condition_number_l2, hermitian_solve, ComplexMatrix, HermitianMatrix,
};
use crate::special::{bessel_j0, sinc_j0};
use crate::{Error, Result};

/// Loading threshold on the l2 condition number; above it the constrained
/// update works with A_ext + eta I.
pub const COND_THRESHOLD_DEFAULT: f64 = 1e2;
/// Diagonal loading magnitude.
pub const ETA_DEFAULT: f64 = 1e-5;

/// Exterior-power operator. `a_ext` is always the physical (unloaded)
/// matrix; `loaded()` hands algorithms the safeguarded variant while
/// reported power always uses the physical one.
#[derive(Debug, Clone)]
pub struct RadiationOperator {
    a_ext: HermitianMatrix,
    loaded: bool,
    eta: f64,
    cond_threshold: f64,
    condition_number: f64,
}

impl RadiationOperator {
    /// Point-source exterior radiation matrix:
    /// entries J0(k d)/(8 rho c k) in 2D, spherical j0 variant in 3D.
    pub fn build(
        secondary_positions: &[Position],
        ctx: &FrequencyContext,
        dimension: Dimension,
    ) -> Self {
        Self::build_with(
            secondary_positions,
            ctx,
            dimension,
            ETA_DEFAULT,
            COND_THRESHOLD_DEFAULT,
        )
    }

    pub fn build_with(
        secondary_positions: &[Position],
        ctx: &FrequencyContext,
        dimension: Dimension,
        eta: f64,
        cond_threshold: f64,
    ) -> Self {
        let k = ctx.wavenumber;
        let scale = 1.0 / (8.0 * ctx.air_density * ctx.sound_speed * k);
        let a_ext = HermitianMatrix::from_fn(secondary_positions.len(), |i, j| {
            let kd = k * distance(&secondary_positions[i], &secondary_positions[j]);
            let coupling = match dimension {
                Dimension::Two => bessel_j0(kd),
                Dimension::Three => sinc_j0(kd),
            };
            C64::new(scale * coupling, 0.0)
        });
        let condition_number = condition_number_l2(&a_ext);
        RadiationOperator {
            a_ext,
            loaded: false,
            eta,
            cond_threshold,
            condition_number,
        }
    }

    /// Physical operator (never loaded); all reported powers use this.
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.a_ext
    }

    pub fn dim(&self) -> usize {
        self.a_ext.dim()
    }

    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Applies the conditioning safeguard: when cond(A_ext) exceeds the
    /// threshold, algorithms get A_ext + eta I. Reporting is unaffected.
    pub fn maybe_load(mut self) -> Self {
        self.loaded = self.condition_number > self.cond_threshold;
        self
    }

    /// Matrix the adaptive update should use (loaded when the safeguard is
    /// active, the physical one otherwise).
    pub fn algorithm_matrix(&self) -> HermitianMatrix {
        if self.loaded {
            self.a_ext.shifted(self.eta)
        } else {
            self.a_ext.clone()
        }
    }
}

/// Radiated power y^H A_ext y in watts, clamped at zero against round-off.
/// Uses the physical (unloaded) operator.
pub fn exterior_power(op: &RadiationOperator, y: &[C64]) -> f64 {
    op.a_ext.quadratic_form(y).max(0.0)
}

/// Unconstrained minimizer of the interior energy and its radiated power:
/// y = -(G^H A_int G)^{-1} G^H A_int d, the fixed point the baseline
/// adaptive controller converges to.
pub fn wiener_reference(
    g: &ComplexMatrix,
    a_int: &HermitianMatrix,
    radiation: &RadiationOperator,
    d_clean: &[C64],
) -> Result<(Vec<C64>, f64)> {
    let gh_a = g.adjoint().mul(a_int.as_matrix());
    let normal = HermitianMatrix::from_matrix(&gh_a.mul(g));
    let rhs = ComplexMatrix::col_vector(&gh_a.matvec(d_clean));
    let solved = match hermitian_solve(&normal, &rhs) {
        Ok(x) => x,
        Err(Error::NotPositiveDefinite { .. }) => {
            // trace-scaled fallback loading for a singular normal matrix
            let trace: f64 = (0..normal.dim()).map(|i| normal[(i, i)].re).sum();
            let shift = 1e-12 * trace / normal.dim() as f64;
            hermitian_solve(&normal.shifted(shift), &rhs)?
        }
        Err(e) => return Err(e),
    };
    let y_opt: Vec<C64> = solved.data().iter().map(|z| -z).collect();
    let j_ext_hat = exterior_power(radiation, &y_opt);
    Ok((y_opt, j_ext_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::Scene;

    fn ctx600() -> (Scene, FrequencyContext) {
        let s = Scene::paper();
        let c = FrequencyContext::new(600.0, &s).unwrap();
        (s, c)
    }

    #[test]
    fn single_source_diagonal_value() {
        let (scene, ctx) = ctx600();
        let op = RadiationOperator::build(&[[0.9, 0.0, 0.0]], &ctx, Dimension::Two);
        let expect = 1.0 / (8.0 * scene.air_density * scene.sound_speed * ctx.wavenumber);
        assert!((op.matrix()[(0, 0)].re - expect).abs() < 1e-18);
        let p = exterior_power(&op, &[C64::new(2.0, -1.0)]);
        assert!((p - 5.0 * expect).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_at_first_bessel_zero() {
        let (_, ctx) = ctx600();
        let d = 2.404_825_557_695_773 / ctx.wavenumber;
        let op = RadiationOperator::build(
            &[[0.9, 0.0, 0.0], [0.9 + d, 0.0, 0.0]],
            &ctx,
            Dimension::Two,
        );
        assert!(op.matrix()[(0, 1)].re.abs() < 1e-14);
    }

    #[test]
    fn paper_operator_is_psd() {
        let (scene, ctx) = ctx600();
        let op = RadiationOperator::build(&scene.secondary_sources, &ctx, scene.dimension);
        let eig = op.matrix().eigenvalues();
        assert!(eig[0] > -1e-10, "min eigenvalue {}", eig[0]);
    }

    #[test]
    fn loading_only_when_ill_conditioned() {
        let (scene, ctx) = ctx600();
        let op = RadiationOperator::build(&scene.secondary_sources, &ctx, scene.dimension)
            .maybe_load();
        assert!(!op.is_loaded(), "cond at 600 Hz is {}", op.condition_number());

        let ctx100 = FrequencyContext::new(100.0, &scene).unwrap();
        let op100 = RadiationOperator::build(&scene.secondary_sources, &ctx100, scene.dimension)
            .maybe_load();
        assert!(op100.is_loaded(), "cond at 100 Hz is {}", op100.condition_number());
        assert!(op100.condition_number() > 1e2);
    }

    #[test]
    fn loading_shifts_spectrum_by_eta() {
        let (scene, ctx) = ctx600();
        let ctx100 = FrequencyContext::new(100.0, &scene).unwrap();
        let op = RadiationOperator::build(&scene.secondary_sources, &ctx100, scene.dimension)
            .maybe_load();
        let before = op.matrix().eigenvalues();
        let after = op.algorithm_matrix().eigenvalues();
        for (b, a) in before.iter().zip(&after) {
            assert!((a - b - op.eta()).abs() < 1e-12 * before.last().unwrap().max(1.0));
        }
        let _ = ctx; // silence unused in this branch
    }

    #[test]
    fn wiener_zero_noise_gives_zero_drive() {
        let (scene, ctx) = ctx600();
        let g = crate::acoustics::transfer_matrix(&scene, &ctx).unwrap();
        let interp = crate::kernel_interp::interior_energy_matrix(
            &scene,
            &ctx,
            1e-3,
            &crate::kernel_interp::QuadratureSpec { density: 2 },
        )
        .unwrap();
        let rad = RadiationOperator::build(&scene.secondary_sources, &ctx, scene.dimension);
        let d = vec![C64::new(0.0, 0.0); scene.num_mics()];
        let (y, j) = wiener_reference(&g, &interp.a_int, &rad, &d).unwrap();
        assert!(y.iter().all(|z| z.norm() < 1e-14));
        assert_eq!(j, 0.0);
    }

    #[test]
    fn wiener_first_order_optimality() {
        let (scene, ctx) = ctx600();
        let g = crate::acoustics::transfer_matrix(&scene, &ctx).unwrap();
        let interp = crate::kernel_interp::interior_energy_matrix(
            &scene,
            &ctx,
            1e-3,
            &crate::kernel_interp::QuadratureSpec { density: 2 },
        )
        .unwrap();
        let rad = RadiationOperator::build(&scene.secondary_sources, &ctx, scene.dimension);
        let d = crate::acoustics::primary_at_mics(&scene, &ctx, &scene.primary_source).unwrap();
        let (y, j_hat) = wiener_reference(&g, &interp.a_int, &rad, &d).unwrap();
        assert!(j_hat > 0.0);
        // gradient G^H A_int (d + G y) should vanish at the optimum
        let e: Vec<C64> = d
            .iter()
            .zip(&g.matvec(&y))
            .map(|(a, b)| a + b)
            .collect();
        let grad = g.adjoint().mul(interp.a_int.as_matrix()).matvec(&e);
        let gnorm: f64 = grad.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ref_grad = g
            .adjoint()
            .mul(interp.a_int.as_matrix())
            .matvec(&d)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(gnorm <= 1e-9 * ref_grad, "gradient {gnorm:e} vs {ref_grad:e}");
    }
}
