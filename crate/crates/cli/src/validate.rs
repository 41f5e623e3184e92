//! The `validate` subcommand: builds the configured operators and runs the
//! oracle and invariant checks against them, printing one line per check.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use sanc_core::acoustics::{green, FrequencyContext, Position, Scene};
use sanc_core::adaptive::OperatorBundle;
use sanc_core::harness::ExperimentPlan;
use sanc_core::radiation::{exterior_power, wiener_reference};
use sanc_core::special::{bessel_j0, bessel_y0};
use sanc_core::Error;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{}  {name}: {detail}", if pass { "ok  " } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

pub fn run_checks(scene: &Scene, plan: &ExperimentPlan) -> Result<(), Error> {
    let mut report = Report { failed: 0 };
    let mut rng = ChaCha12Rng::seed_from_u64(9);

    // Bessel cross-check away from the operators: the Wronskian identity.
    let mut worst = 0.0f64;
    let h = 1e-5;
    let mut x = 0.5;
    while x <= 40.0 {
        let dj = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
        let dy = (bessel_y0(x + h)? - bessel_y0(x - h)?) / (2.0 * h);
        let w = dj * bessel_y0(x)? - bessel_j0(x) * dy;
        worst = worst.max((w + 2.0 / (std::f64::consts::PI * x)).abs());
        x += 0.83;
    }
    report.check(
        "bessel wronskian",
        worst <= 1e-7,
        format!("max deviation {worst:.2e}"),
    );

    for &freq in &plan.frequencies {
        let ctx = FrequencyContext::new(freq, scene)?;
        let bundle = OperatorBundle::build(
            scene,
            &ctx,
            plan.ridge,
            &plan.quadrature,
            plan.eta,
            plan.cond_threshold,
        )?;

        let gram_eig = bundle.interp.gram.eigenvalues();
        let unit_diag = (0..bundle.interp.gram.dim())
            .all(|i| (bundle.interp.gram[(i, i)].re - 1.0).abs() < 1e-12);
        report.check(
            &format!("{freq} Hz gram matrix"),
            gram_eig[0] >= -1e-10 && unit_diag,
            format!("min eigenvalue {:.2e}, unit diagonal {unit_diag}", gram_eig[0]),
        );

        let a_int_eig = bundle.interp.a_int.eigenvalues();
        report.check(
            &format!("{freq} Hz interior energy operator"),
            a_int_eig[0] >= -1e-10,
            format!("min eigenvalue {:.2e}", a_int_eig[0]),
        );

        let a_ext_eig = bundle.radiation.matrix().eigenvalues();
        report.check(
            &format!("{freq} Hz radiation operator"),
            a_ext_eig[0] >= -1e-10,
            format!(
                "min eigenvalue {:.2e}, cond {:.2e}, loading {}",
                a_ext_eig[0],
                bundle.radiation.condition_number(),
                bundle.radiation.is_loaded()
            ),
        );

        // Surface-integral oracle for the radiated power, reduced size.
        let mut worst_rel = 0.0f64;
        for _ in 0..5 {
            let y: Vec<C64> = (0..scene.num_sources())
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let form = exterior_power(&bundle.radiation, &y);
            let direct = surface_power(scene, &ctx, &y, 5.0, 1024)?;
            worst_rel = worst_rel.max((form - direct).abs() / form.abs().max(direct.abs()));
        }
        report.check(
            &format!("{freq} Hz radiated-power oracle"),
            worst_rel <= 0.01,
            format!("worst relative deviation {worst_rel:.2e}"),
        );

        let d = sanc_core::acoustics::primary_at_mics(scene, &ctx, &scene.primary_source)?;
        let (y_opt, j_hat) =
            wiener_reference(&bundle.g, &bundle.interp.a_int, &bundle.radiation, &d)?;
        let e: Vec<C64> = d
            .iter()
            .zip(&bundle.g.matvec(&y_opt))
            .map(|(a, b)| a + b)
            .collect();
        let grad = bundle
            .g
            .adjoint()
            .mul(bundle.interp.a_int.as_matrix())
            .matvec(&e);
        let gnorm: f64 = grad.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ref_norm: f64 = bundle
            .g
            .adjoint()
            .mul(bundle.interp.a_int.as_matrix())
            .matvec(&d)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        report.check(
            &format!("{freq} Hz wiener reference"),
            gnorm <= 1e-9 * ref_norm && j_hat >= 0.0,
            format!("optimality residual {:.2e}, radiated {j_hat:.3e} W", gnorm / ref_norm),
        );
    }

    if report.failed == 0 {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Error::Config(format!("{} checks failed", report.failed)))
    }
}

fn surface_power(
    scene: &Scene,
    ctx: &FrequencyContext,
    y: &[C64],
    radius: f64,
    nodes: usize,
) -> Result<f64, Error> {
    let fd = 1e-5;
    let field = |p: &Position| -> Result<C64, Error> {
        let mut u = C64::new(0.0, 0.0);
        for (yl, src) in y.iter().zip(&scene.secondary_sources) {
            u += yl * green(p, src, ctx, scene.dimension)?;
        }
        Ok(u)
    };
    let mut total = 0.0;
    for i in 0..nodes {
        let th = (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / nodes as f64;
        let n_hat = [th.cos(), th.sin(), 0.0];
        let p = [radius * n_hat[0], radius * n_hat[1], 0.0];
        let u = field(&p)?;
        let up = field(&[p[0] + fd * n_hat[0], p[1] + fd * n_hat[1], 0.0])?;
        let um = field(&[p[0] - fd * n_hat[0], p[1] - fd * n_hat[1], 0.0])?;
        let dn = (up - um) / (2.0 * fd);
        let factor = C64::new(0.0, 1.0) / (ctx.air_density * ctx.sound_speed * ctx.wavenumber);
        total += 0.5 * (u * factor * dn.conj()).re;
    }
    Ok(total * 2.0 * std::f64::consts::PI * radius / nodes as f64)
}
