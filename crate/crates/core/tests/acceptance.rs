//! Acceptance suite: each test exercises one gate criterion end to end at
//! its stated tolerance and prints a single pass/fail line.
//!
//! The runs here use the full default operators (quadrature density 4) and
//! the reference experiment geometry.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use sanc_core::acoustics::{green, FrequencyContext, Position, Scene};
use sanc_core::adaptive::{
    run_adaptation, Algorithm, AlgorithmParams, AutocorrInverse, OperatorBundle, RunSettings,
    SourceSchedule,
};
use sanc_core::harness::{
    run_convergence, run_freq_sweep, run_lambda_sweep, run_moving_source, ExperimentPlan,
    Scenario,
};
use sanc_core::kernel_interp::{interior_energy_matrix, QuadratureSpec};
use sanc_core::linalg::{hermitian_solve, ComplexMatrix, HermitianMatrix};
use sanc_core::radiation::{exterior_power, wiener_reference, RadiationOperator};

fn check(criterion: &str, pass: bool, detail: String) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn rand_vec(rng: &mut ChaCha12Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn exactly_hermitian(m: &HermitianMatrix) -> bool {
    let a = m.as_matrix();
    (0..m.dim()).all(|i| (0..m.dim()).all(|j| a[(i, j)] == a[(j, i)].conj()))
}

#[test]
fn criterion_01_operator_validity() {
    let scene = Scene::paper();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let mut worst_eig = f64::INFINITY;
    let mut worst_form = f64::INFINITY;
    for freq in [100.0, 320.0, 600.0, 1000.0] {
        let ctx = FrequencyContext::new(freq, &scene).unwrap();
        let interp =
            interior_energy_matrix(&scene, &ctx, 1e-3, &QuadratureSpec::default()).unwrap();
        let rad = RadiationOperator::build(&scene.secondary_sources, &ctx, scene.dimension);
        assert!(exactly_hermitian(&interp.a_int));
        assert!(exactly_hermitian(rad.matrix()));
        for op in [&interp.a_int, rad.matrix()] {
            let eig = op.eigenvalues();
            worst_eig = worst_eig.min(eig[0]);
            for _ in 0..100 {
                let v = rand_vec(&mut rng, op.dim());
                worst_form = worst_form.min(op.quadratic_form(&v));
            }
        }
    }
    check(
        "01 operator-validity",
        worst_eig >= -1e-10 && worst_form >= -1e-12,
        format!("min eigenvalue {worst_eig:.2e}, min quadratic form {worst_form:.2e}"),
    );
}

#[test]
fn criterion_02_radiation_oracle() {
    // Direct quadrature of the radiated-power surface integral over a 5 m
    // circle (2048 nodes) vs the quadratic form, 20 random drives at 600 Hz.
    let scene = Scene::paper();
    let ctx = FrequencyContext::new(600.0, &scene).unwrap();
    let op = RadiationOperator::build(&scene.secondary_sources, &ctx, scene.dimension);
    let mut rng = ChaCha12Rng::seed_from_u64(202);
    let fd = 1e-5;
    let nodes = 2048;
    let radius = 5.0;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let y = rand_vec(&mut rng, scene.num_sources());
        let field = |p: &Position| -> C64 {
            y.iter()
                .zip(&scene.secondary_sources)
                .map(|(yl, src)| yl * green(p, src, &ctx, scene.dimension).unwrap())
                .sum()
        };
        let mut direct = 0.0;
        for i in 0..nodes {
            let th = (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / nodes as f64;
            let n_hat = [th.cos(), th.sin(), 0.0];
            let p = [radius * n_hat[0], radius * n_hat[1], 0.0];
            let u = field(&p);
            let up = field(&[p[0] + fd * n_hat[0], p[1] + fd * n_hat[1], 0.0]);
            let um = field(&[p[0] - fd * n_hat[0], p[1] - fd * n_hat[1], 0.0]);
            let dn = (up - um) / (2.0 * fd);
            let factor =
                C64::new(0.0, 1.0) / (ctx.air_density * ctx.sound_speed * ctx.wavenumber);
            direct += 0.5 * (u * factor * dn.conj()).re;
        }
        direct *= 2.0 * std::f64::consts::PI * radius / nodes as f64;
        let form = exterior_power(&op, &y);
        worst = worst.max((form - direct).abs() / form.abs().max(direct.abs()));
    }
    check(
        "02 radiation-oracle",
        worst <= 0.01,
        format!("worst relative deviation {worst:.2e} over 20 drives"),
    );
}

#[test]
fn criterion_03_gradient_checks() {
    // Analytic gradients of the interior and penalized costs vs central
    // finite differences at 20 random filter points, relative 1e-6.
    let scene = Scene::paper();
    let ctx = FrequencyContext::new(600.0, &scene).unwrap();
    let bundle =
        OperatorBundle::build(&scene, &ctx, 1e-3, &QuadratureSpec::default(), 1e-5, 1e2).unwrap();
    let d = sanc_core::acoustics::primary_at_mics(&scene, &ctx, &scene.primary_source).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(303);
    let l = scene.num_sources();
    let lambda = 0.1;
    let b_int = bundle.g.adjoint().mul(bundle.interp.a_int.as_matrix());

    let cost = |w: &ComplexMatrix, x: &[C64], with_penalty: bool| -> f64 {
        let y = w.matvec(x);
        let gy = bundle.g.matvec(&y);
        let e: Vec<C64> = d.iter().zip(&gy).map(|(a, b)| a + b).collect();
        let mut j = bundle.interp.a_int.quadratic_form(&e);
        if with_penalty {
            j += lambda * bundle.radiation.matrix().quadratic_form(&y);
        }
        j
    };

    let mut worst = 0.0f64;
    for trial in 0..20 {
        let with_penalty = trial % 2 == 1;
        let w = ComplexMatrix::from_fn(l, 1, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.1
        });
        let x = vec![C64::new(1.0, 0.0)];
        let y = w.matvec(&x);
        let gy = bundle.g.matvec(&y);
        let e: Vec<C64> = d.iter().zip(&gy).map(|(a, b)| a + b).collect();
        let mut analytic = b_int.matvec(&e);
        if with_penalty {
            let ay = bundle.radiation.matrix().as_matrix().matvec(&y);
            for (g, a) in analytic.iter_mut().zip(&ay) {
                *g += a * lambda;
            }
        }
        let eps = 1e-6;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..l {
            for (dim, unit) in [(0, C64::new(eps, 0.0)), (1, C64::new(0.0, eps))] {
                let mut wp = w.clone();
                wp[(i, 0)] += unit;
                let mut wm = w.clone();
                wm[(i, 0)] -= unit;
                let fd = (cost(&wp, &x, with_penalty) - cost(&wm, &x, with_penalty))
                    / (2.0 * eps)
                    / 2.0;
                let reference = if dim == 0 {
                    analytic[i].re
                } else {
                    analytic[i].im
                };
                num += (fd - reference) * (fd - reference);
                den += reference * reference;
            }
        }
        worst = worst.max((num / den.max(1e-300)).sqrt());
    }
    check(
        "03 gradient-checks",
        worst <= 1e-6,
        format!("worst relative gradient error {worst:.2e} over 20 points"),
    );
}

#[test]
fn criterion_04_sherman_morrison_oracle() {
    let alpha = 0.99;
    let dim = 3;
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    let mut tracker = AutocorrInverse::from_initial(ComplexMatrix::identity(dim));
    let mut r_direct = ComplexMatrix::identity(dim);
    for _ in 0..200 {
        let x = rand_vec(&mut rng, dim);
        let outer = ComplexMatrix::from_fn(dim, dim, |i, j| x[i] * x[j].conj());
        r_direct = r_direct
            .scale(C64::new(alpha, 0.0))
            .add(&outer.scale(C64::new(1.0 - alpha, 0.0)));
        tracker.update(&x, alpha);
    }
    let inv = hermitian_solve(
        &HermitianMatrix::from_matrix(&r_direct),
        &ComplexMatrix::identity(dim),
    )
    .unwrap();
    let err = tracker.matrix().sub(&inv).frobenius_norm() / inv.frobenius_norm();
    check(
        "04 sherman-morrison",
        err <= 1e-8,
        format!("recursion vs direct inverse after 200 updates: {err:.2e}"),
    );
}

#[test]
fn criterion_05_reduction_consistency() {
    // Penalty controller at weight zero replays the baseline bit-for-bit
    // over 1000 iterations with a shared seed.
    let scene = Scene::paper();
    let ctx = FrequencyContext::new(600.0, &scene).unwrap();
    let bundle =
        OperatorBundle::build(&scene, &ctx, 1e-3, &QuadratureSpec::default(), 1e-5, 1e2).unwrap();
    let settings = RunSettings {
        n_iters: 1000,
        noise_seed: 505,
        snr_db: Some(40.0),
    };
    let schedule = SourceSchedule::Fixed(scene.primary_source);
    let base = run_adaptation(
        &bundle,
        Algorithm::Nlms,
        AlgorithmParams::default(),
        &settings,
        &schedule,
    )
    .unwrap();
    let penal = run_adaptation(
        &bundle,
        Algorithm::Penal,
        AlgorithmParams {
            lambda_penal: 0.0,
            ..Default::default()
        },
        &settings,
        &schedule,
    )
    .unwrap();
    let max_diff = base
        .final_w
        .data()
        .iter()
        .zip(penal.final_w.data())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    check(
        "05 reduction-consistency",
        max_diff <= 1e-14,
        format!("max filter element difference {max_diff:.2e} after 1000 iterations"),
    );
}

#[test]
fn criterion_06_wiener_consistency() {
    // Noiseless baseline at 600 Hz for 50k iterations converges to the
    // closed-form Wiener radiated power within 2%.
    let scene = Scene::paper();
    let ctx = FrequencyContext::new(600.0, &scene).unwrap();
    let bundle =
        OperatorBundle::build(&scene, &ctx, 1e-3, &QuadratureSpec::default(), 1e-5, 1e2).unwrap();
    let d = sanc_core::acoustics::primary_at_mics(&scene, &ctx, &scene.primary_source).unwrap();
    let (_, j_hat) =
        wiener_reference(&bundle.g, &bundle.interp.a_int, &bundle.radiation, &d).unwrap();
    let out = run_adaptation(
        &bundle,
        Algorithm::Nlms,
        AlgorithmParams::default(),
        &RunSettings {
            n_iters: 50_000,
            noise_seed: 0,
            snr_db: None,
        },
        &SourceSchedule::Fixed(scene.primary_source),
    )
    .unwrap();
    let j_final = out.records.last().unwrap().j_ext_w;
    let rel = (j_final - j_hat).abs() / j_hat;
    check(
        "06 wiener-consistency",
        rel <= 0.02,
        format!("final J_ext {j_final:.4e} W vs Wiener {j_hat:.4e} W (rel {rel:.2e})"),
    );
}

#[test]
fn criterion_07_08_half_radiation_and_feasibility() {
    // 600 Hz, 40 dB SNR, budget at half the Wiener radiated power, penalty
    // weight selected by the sweep: penalty and constrained finals land
    // within +/-15% of the budget and every reduction agrees within 3 dB.
    // The constrained run must also stay inside the budget at every single
    // iteration (criterion 8, measured against the algorithm's matrix).
    let scene = Scene::paper();
    let plan = ExperimentPlan::default();
    let result = run_convergence(&scene, &plan).unwrap();

    let selected = result.selected_lambda.unwrap();
    let by_alg = |a: Algorithm| result.runs.iter().find(|r| r.algorithm == a).unwrap();
    let nlms = by_alg(Algorithm::Nlms);
    let penal = by_alg(Algorithm::Penal);
    let cons = by_alg(Algorithm::Const);
    let c = nlms.budget_c;

    let penal_ratio = penal.summary.final_j_ext_w / c;
    let const_ratio = cons.summary.final_j_ext_w / c;
    let preds = [
        nlms.summary.final_p_red_db,
        penal.summary.final_p_red_db,
        cons.summary.final_p_red_db,
    ];
    let spread = preds.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b))
        - preds.iter().fold(f64::INFINITY, |a, b| a.min(*b));

    let pass_07 = (0.85..=1.15).contains(&penal_ratio)
        && (0.85..=1.15).contains(&const_ratio)
        && spread <= 3.0
        && (selected - 0.1).abs() < 1e-12;
    check(
        "07 half-radiation",
        pass_07,
        format!(
            "lambda {selected}, penal J/C {penal_ratio:.3}, const J/C {const_ratio:.3}, P_red spread {spread:.2} dB (P_red {preds:?})"
        ),
    );

    let ratio = cons.max_budget_ratio.unwrap();
    check(
        "08 constraint-feasibility",
        ratio <= 1.0 + 1e-9,
        format!("max per-iteration budget ratio {ratio:.12} over 50000 iterations"),
    );
}

#[test]
fn criterion_09_moving_source_tracking() {
    // Primary source jumps at iteration 25000: the constrained controller's
    // final radiated power stays at the budget while the baseline's moves by
    // more than 10% across the jump.
    let scene = Scene::paper();
    let plan = ExperimentPlan {
        scenario: Scenario::MovingSource,
        algorithms: vec![Algorithm::Nlms, Algorithm::Const],
        ..Default::default()
    };
    let result = run_moving_source(&scene, &plan).unwrap();
    let by_alg = |a: Algorithm| result.runs.iter().find(|r| r.algorithm == a).unwrap();
    let nlms = by_alg(Algorithm::Nlms);
    let cons = by_alg(Algorithm::Const);
    let c = cons.budget_c;

    let mean_j = |trace: &[sanc_core::adaptive::IterationRecord], lo: usize, hi: usize| -> f64 {
        let slice = &trace[lo..hi];
        slice.iter().map(|r| r.j_ext_w).sum::<f64>() / slice.len() as f64
    };
    let switch = plan.move_switch_at;
    let before = mean_j(&nlms.trace, switch - 200, switch);
    let after = mean_j(&nlms.trace, nlms.trace.len() - 200, nlms.trace.len());
    let change = (after - before).abs() / before;

    let const_final = cons.summary.final_j_ext_w;
    let pass = const_final <= c * 1.05 && change > 0.10;
    check(
        "09 moving-source",
        pass,
        format!(
            "const final J/C {:.3} (<= 1.05), nlms J change across move {:.1}% (> 10%)",
            const_final / c,
            change * 100.0
        ),
    );
}

#[test]
fn criterion_10_lambda_sweep_trend() {
    // Converged radiation non-increasing and converged reduction
    // non-decreasing across the weight grid, with 2% power slack.
    let scene = Scene::paper();
    let plan = ExperimentPlan {
        scenario: Scenario::LambdaSweep,
        ..Default::default()
    };
    let result = run_lambda_sweep(&scene, &plan).unwrap();
    let curve = &result.lambda_curve;
    assert_eq!(curve.len(), 7);
    let slack = 1.02f64;
    let db_slack = 10.0 * slack.log10();
    let mut ok = true;
    let mut detail = String::new();
    for pair in curve.windows(2) {
        if pair[1].tail_j_ext_w > pair[0].tail_j_ext_w * slack {
            ok = false;
            detail = format!(
                "J_ext rose from {:.3e} (lambda {}) to {:.3e} (lambda {})",
                pair[0].tail_j_ext_w, pair[0].lambda, pair[1].tail_j_ext_w, pair[1].lambda
            );
        }
        if pair[1].final_p_red_db < pair[0].final_p_red_db - db_slack {
            ok = false;
            detail = format!(
                "P_red improved from {:.2} dB (lambda {}) to {:.2} dB (lambda {})",
                pair[0].final_p_red_db, pair[0].lambda, pair[1].final_p_red_db, pair[1].lambda
            );
        }
    }
    if ok {
        detail = format!(
            "J_ext {:.3e} -> {:.3e} W, P_red {:.2} -> {:.2} dB across the grid",
            curve[0].tail_j_ext_w,
            curve[6].tail_j_ext_w,
            curve[0].final_p_red_db,
            curve[6].final_p_red_db
        );
    }
    check("10 lambda-sweep-trend", ok, detail);
}

#[test]
fn criterion_11_frequency_sweep_smoke() {
    // Desk-scale sweep: 100..1000 Hz in 100 Hz steps at 10k iterations.
    // Every summary finite, the constrained controller inside its budget at
    // every frequency (final value, statistical 5% allowance as in the
    // moving-source criterion), and the conditioning safeguard active at the
    // lowest frequency.
    let scene = Scene::paper();
    let plan = ExperimentPlan {
        scenario: Scenario::FreqSweep,
        frequencies: (1..=10).map(|i| 100.0 * i as f64).collect(),
        n_iters: 10_000,
        ..Default::default()
    };
    let result = run_freq_sweep(&scene, &plan).unwrap();
    let mut ok = result.failures.is_empty();
    let mut detail = format!("{} frequencies", result.frequency_points.len());
    if !ok {
        detail = format!("failures: {:?}", result.failures);
    }
    for run in &result.runs {
        let s = &run.summary;
        if !(s.final_p_red_db.is_finite()
            && s.final_j_ext_w.is_finite()
            && s.final_j_int.is_finite()
            && s.final_w_frob.is_finite())
        {
            ok = false;
            detail = format!("non-finite summary at {} Hz {}", run.freq_hz, run.algorithm);
        }
        if run.algorithm == Algorithm::Const && s.final_j_ext_w > run.budget_c * 1.05 {
            ok = false;
            detail = format!(
                "const exceeded budget at {} Hz: {:.3e} vs {:.3e}",
                run.freq_hz, s.final_j_ext_w, run.budget_c
            );
        }
    }
    let lowest = &result.frequency_points[0];
    if !lowest.loading_active {
        ok = false;
        detail = format!("no loading at {} Hz", lowest.freq_hz);
    }
    check("11 frequency-sweep", ok, detail);
}
