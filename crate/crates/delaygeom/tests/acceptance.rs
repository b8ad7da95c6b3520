//! Acceptance suite: every release criterion as one test, each printing a
//! pass/fail line (visible with --nocapture). Tolerances are pinned here,
//! not tuned at run time.

mod common;

use common::*;
use delaygeom::analytic::{
    char_fn, f1, f2_gilpelaez, f3_gilpelaez, local_delay, local_delay_from_f1,
    local_delay_integral, packet_loss, ExtendedReal,
};
use delaygeom::approx::{
    beta_shape, f1_riemann, f2_beta, f2_euler, f3_euler, EulerParams, F3Method,
};
use delaygeom::mcsim::{
    estimate_f1_grid, estimate_f2_grid, estimate_f3, estimate_local_delay, estimate_ploss,
    realization_records,
};
use delaygeom::model::{active_probability, critical_threshold, db_to_linear};
use delaygeom::special::{hyp2f1, interference_factor_real, quad_semi_infinite, Complex, QuadOptions};
use delaygeom::{CoverageCriterion, DelayQuery};

const MASTER_SEED: u64 = 20240817;

fn pass(criterion: u32, detail: &str) {
    println!("criterion {criterion}: PASS  ({detail})");
}

#[test]
fn criterion_1_local_delay_closed_form_quadrature_divergence_mc() {
    let params = unit_ratio_params();
    let q = query(params, sir(0.0)); // gamma = 1 linear
    let d = local_delay(&q).unwrap().finite().expect("finite below the critical threshold");
    assert!((d - 2.4095).abs() <= 1e-3, "closed form {d} vs 2.4095");

    let quad_path = local_delay_integral(&q).unwrap().finite().unwrap();
    assert!((quad_path - d).abs() <= 1e-8 * d, "integral path {quad_path} vs closed form {d}");

    let l = active_probability(params.lambda_bs, params.lambda_mt).unwrap();
    let gamma_star = critical_threshold(params.alpha, l).unwrap();
    assert!((gamma_star - 1.7091).abs() < 2e-4);
    for gamma in [gamma_star, gamma_star + 0.5, 5.0] {
        let q = query(params, CoverageCriterion::Sir { gamma });
        assert_eq!(local_delay(&q).unwrap(), ExtendedReal::Infinite, "gamma={gamma}");
        assert_eq!(local_delay_integral(&q).unwrap(), ExtendedReal::Infinite, "gamma={gamma}");
    }

    let cfg = sim_config(&params, 5000, MASTER_SEED);
    let mc = estimate_local_delay(&params, &sir(0.0), &cfg).unwrap();
    assert!(mc.stabilized, "running mean should stabilize below the threshold");
    assert!(
        (mc.estimate.value - d).abs() <= 0.05 * d,
        "MC {} vs {d} (5% budget)",
        mc.estimate.value
    );
    pass(1, &format!("D={d:.6}, quadrature match 1e-8, divergence flagged, MC={:.4}", mc.estimate.value));
}

#[test]
fn criterion_2_f1_exact_vs_mc_all_criteria() {
    let params = table_params();
    let taus: Vec<u32> = (1..=20).collect();
    let mut worst = 0.0f64;
    for gamma_db in [0.0, 5.0] {
        for (name, criterion) in [
            ("sir", sir(gamma_db)),
            ("sinr", sinr(gamma_db)),
            ("sir-asnr", sir_asnr(gamma_db)),
        ] {
            let q = query(params, criterion);
            let cfg = sim_config(&params, 5000, MASTER_SEED ^ 0x2f1);
            let mc = estimate_f1_grid(&taus, &params, &criterion, &cfg).unwrap();
            for (tau, est) in taus.iter().zip(&mc) {
                let a = f1(*tau, &q).unwrap();
                let diff = (a - est.value).abs();
                worst = worst.max(diff - est.half_width_95);
                assert!(
                    diff <= est.half_width_95,
                    "{name} gamma_db={gamma_db} tau={tau}: analytic {a:.6} vs MC {:.6} +- {:.6}",
                    est.value,
                    est.half_width_95
                );
            }
        }
    }
    pass(2, &format!("120 points within CI, worst margin {worst:.2e}"));
}

#[test]
fn criterion_3_packet_loss_and_asymptote() {
    let params = table_params();
    let cfg = sim_config(&params, 5000, MASTER_SEED ^ 0x91055);
    for criterion in [sir(0.0), sinr(0.0)] {
        let est = estimate_ploss(&params, &criterion, &cfg).unwrap();
        assert_eq!(est.value, 0.0, "loss-free criteria must estimate exactly zero");
    }
    let q = query(params, sir_asnr(0.0));
    let pe = packet_loss(&q);
    let est = estimate_ploss(&params, &sir_asnr(0.0), &cfg).unwrap();
    assert!(
        (est.value - pe).abs() <= est.half_width_95,
        "MC {} +- {} vs analytic {pe}",
        est.value,
        est.half_width_95
    );
    let bridged = f1_riemann(10_000, 10_000, &q, &F3Method::Euler(EulerParams::default())).unwrap();
    assert!((bridged - pe).abs() <= 1e-2, "F1(1e4) = {bridged} vs asymptote {pe}");
    assert!(bridged >= pe - 1e-3, "asymptote approached from above");
    pass(3, &format!("Pe={pe:.6}, MC={:.6}, F1(1e4)={bridged:.6}", est.value));
}

#[test]
fn criterion_4_cross_method_f2_f3_with_mc() {
    let params = saturated_params();
    let criterion = sir(0.0);
    let q = query(params, criterion);
    let ep = EulerParams::default();
    let cfg = sim_config(&params, 5000, MASTER_SEED ^ 0xf2f3);

    let ts = [1.5, 2.0, 5.0, 10.0];
    let mc_f2 = estimate_f2_grid(&ts, &params, &criterion, &cfg).unwrap();
    for (t, est) in ts.iter().zip(&mc_f2) {
        let euler = f2_euler(*t, &q, &ep).unwrap();
        let gp = f2_gilpelaez(*t, &q).unwrap();
        assert!((euler - gp).abs() <= 1e-4, "T={t}: euler {euler} vs gp {gp}");
        for (label, v) in [("euler", euler), ("gilpelaez", gp)] {
            assert!(
                (v - est.value).abs() <= est.half_width_95,
                "T={t} {label}: {v:.6} vs MC {:.6} +- {:.6}",
                est.value,
                est.half_width_95
            );
        }
    }
    for tau in [5u32, 10] {
        for i in 1..=9 {
            let x = i as f64 / 10.0;
            let euler = f3_euler(x, tau, &q, &ep).unwrap();
            let gp = f3_gilpelaez(x, tau, &q).unwrap();
            assert!((euler - gp).abs() <= 1e-4, "x={x} tau={tau}: euler {euler} vs gp {gp}");
            let est = estimate_f3(x, tau, &params, &criterion, &cfg).unwrap();
            for (label, v) in [("euler", euler), ("gilpelaez", gp)] {
                assert!(
                    (v - est.value).abs() <= est.half_width_95,
                    "x={x} tau={tau} {label}: {v:.6} vs MC {:.6} +- {:.6}",
                    est.value,
                    est.half_width_95
                );
            }
        }
    }
    pass(4, "Euler vs Gil-Pelaez <= 1e-4 on 22 points; both inside MC confidence");
}

#[test]
fn criterion_5_riemann_bridge_and_delay_series() {
    let q = query(unit_ratio_params(), sir(0.0));
    let method = F3Method::Euler(EulerParams::default());
    for tau in [5u32, 10, 20, 50] {
        let exact = f1(tau, &q).unwrap();
        let bridged = f1_riemann(tau, 4096, &q, &method).unwrap();
        assert!(
            (exact - bridged).abs() <= 1e-4,
            "tau={tau}: exact {exact:.8} vs bridge {bridged:.8}"
        );
    }
    let d = local_delay(&q).unwrap().finite().unwrap();
    let report = local_delay_from_f1(&q, 50).unwrap();
    let est = report.value.finite().expect("subcritical series");
    assert!(
        (est - d).abs() <= 0.02 * d,
        "series estimate {est:.6} vs closed form {d:.6} (partial {:.6} + tail {:.6})",
        report.partial_sum,
        report.tail_estimate
    );
    pass(5, &format!("bridge <= 1e-4 at tau in {{5,10,20,50}}; series estimate {est:.5} within 2% of {d:.5}"));
}

#[test]
fn criterion_6_beta_approximation_under_sinr() {
    let params = table_params();
    let criterion = sinr(0.0);
    let q = query(params, criterion);
    let shape = beta_shape(&q).unwrap();
    let cfg = sim_config(&params, 5000, MASTER_SEED ^ 0xbe7a);

    // Kolmogorov distance between the Beta curve and the empirical curve.
    let ts: Vec<f64> = (0..=76).map(|i| 1.0 + 0.25 * i as f64).collect();
    let mc = estimate_f2_grid(&ts, &params, &criterion, &cfg).unwrap();
    let mut ks = 0.0f64;
    for (t, est) in ts.iter().zip(&mc) {
        let b = f2_beta(*t, &shape).unwrap();
        ks = ks.max((b - est.value).abs());
    }
    assert!(ks <= 0.03, "Kolmogorov distance {ks}");

    // Matched moments against the sample mean and variance of the coverage.
    let pcovs: Vec<f64> = realization_records(&params, &criterion, &cfg)
        .unwrap()
        .iter()
        .map(|r| r.pcov)
        .collect();
    let n = pcovs.len() as f64;
    let mean = pcovs.iter().sum::<f64>() / n;
    let sd = (pcovs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(
        (shape.mu - mean).abs() <= 1.96 * sd / n.sqrt(),
        "mu {} vs sample mean {mean}",
        shape.mu
    );
    let y: Vec<f64> = pcovs.iter().map(|p| (p - mean) * (p - mean)).collect();
    let var = y.iter().sum::<f64>() / (n - 1.0);
    let sd_y = (y.iter().map(|v| (v - var) * (v - var)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(
        (shape.nu - var).abs() <= 1.96 * sd_y / n.sqrt(),
        "nu {} vs sample variance {var}",
        shape.nu
    );
    pass(6, &format!("Kolmogorov distance {ks:.4} <= 0.03; moments inside CI"));
}

#[test]
fn criterion_7_special_function_oracles() {
    // Closed-form identity at 20 thresholds spread over (0, 100].
    for i in 1..=20 {
        let g = 100.0 * (i as f64 / 20.0).powi(2);
        let v = hyp2f1(-0.5, Complex::new(1.0, 0.0), 0.5, -g).unwrap();
        let expect = 1.0 + g.sqrt() * g.sqrt().atan();
        assert!(
            (v.re - expect).abs() <= 1e-10 * expect.max(1.0) && v.im.abs() < 1e-12,
            "gamma={g}: {} vs {expect}",
            v.re
        );
    }

    // Interference factor against the independent distance-domain quadrature
    // 1 + L * 2 * int_1^inf (1 - (1 + g s^-a)^-k) s ds (unit serving radius).
    let l = 0.58505134901913371;
    let (alpha, g) = (4.0f64, 1.0f64);
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, ..QuadOptions::default() };
    for k in 1..=5u32 {
        let oracle = 1.0
            + l * 2.0
                * quad_semi_infinite(
                    |u| {
                        let s = 1.0 + u;
                        // 1 - (1+e)^-k without cancellation for tiny e.
                        -(-(k as f64) * (g * s.powf(-alpha)).ln_1p()).exp_m1() * s
                    },
                    &opts,
                )
                .unwrap();
        let direct = interference_factor_real(k as f64, alpha, g, l).unwrap();
        assert!(
            (direct - oracle).abs() <= 1e-8,
            "k={k}: factor {direct:.12} vs quadrature {oracle:.12}"
        );
    }

    // Conjugate symmetry for complex order.
    for t in [0.5, 7.0, 80.0, 2000.0] {
        let b = Complex::new(0.0, t);
        let v1 = hyp2f1(-0.5, b, 0.5, -2.5).unwrap();
        let v2 = hyp2f1(-0.5, b.conj(), 0.5, -2.5).unwrap();
        assert!(
            (v1.conj() - v2).norm() <= 1e-12 * v1.norm().max(1.0),
            "conjugate symmetry at t={t}"
        );
    }
    pass(7, "arctan identity 1e-10 x20, quadrature oracle 1e-8 x5, conjugate symmetry 1e-12");
}

#[test]
fn criterion_8_model_distribution_checks() {
    let params = table_params();
    let cfg = sim_config(&params, 5000, MASTER_SEED ^ 0xcdf);
    let mut r0s: Vec<f64> = realization_records(&params, &sir(0.0), &cfg)
        .unwrap()
        .iter()
        .map(|r| r.r0)
        .collect();
    r0s.sort_unstable_by(f64::total_cmp);
    let lam = params.lambda_bs;
    let mut ks = 0.0f64;
    for (i, &r) in r0s.iter().enumerate() {
        let cdf = 1.0 - (-lam * std::f64::consts::PI * r * r).exp();
        ks = ks
            .max((cdf - (i + 1) as f64 / r0s.len() as f64).abs())
            .max((cdf - i as f64 / r0s.len() as f64).abs());
    }
    assert!(ks < 0.02, "serving-distance Kolmogorov distance {ks}");

    let zero = Complex::new(0.0, 0.0);
    for criterion in [sir(0.0), sinr(0.0)] {
        let q = query(params, criterion);
        let phi0 = char_fn(zero, &q).unwrap();
        assert!((phi0 - Complex::new(1.0, 0.0)).norm() <= 1e-10, "phi(0) under {criterion:?}");
    }
    let q = query(params, sir_asnr(0.0));
    let phi0 = char_fn(zero, &q).unwrap();
    let expect = 1.0 - packet_loss(&q);
    assert!((phi0.re - expect).abs() <= 1e-10 && phi0.im.abs() <= 1e-12);
    pass(8, &format!("serving-distance KS {ks:.4} < 0.02; phi(0) checks to 1e-10"));
}

#[test]
fn criterion_9_monotone_trends() {
    let ep = EulerParams::default();
    let criteria: [(&str, fn(f64) -> CoverageCriterion); 3] =
        [("sir", sir), ("sinr", sinr), ("sir-asnr", sir_asnr)];
    // Denser stations and lower thresholds both improve every metric.
    for (name, make) in criteria {
        for gamma_db in [0.0, 5.0] {
            let sparse = query(table_params(), make(gamma_db));
            let mut dense_params = table_params();
            dense_params.lambda_bs *= 2.0;
            let dense = query(dense_params, make(gamma_db));
            assert!(
                f1(5, &dense).unwrap() < f1(5, &sparse).unwrap(),
                "{name} gamma_db={gamma_db}: F1 should improve with density"
            );
            assert!(
                f2_euler(2.0, &dense, &ep).unwrap() < f2_euler(2.0, &sparse, &ep).unwrap(),
                "{name} gamma_db={gamma_db}: F2 should improve with density"
            );
            assert!(
                f3_euler(0.5, 5, &dense, &ep).unwrap() < f3_euler(0.5, 5, &sparse, &ep).unwrap(),
                "{name} gamma_db={gamma_db}: F3 should improve with density"
            );
        }
        let low = query(table_params(), make(-3.0));
        let high = query(table_params(), make(3.0));
        assert!(f1(5, &low).unwrap() < f1(5, &high).unwrap(), "{name}: F1 vs threshold");
        assert!(
            f2_euler(2.0, &low, &ep).unwrap() < f2_euler(2.0, &high, &ep).unwrap(),
            "{name}: F2 vs threshold"
        );
        assert!(
            f3_euler(0.5, 5, &low, &ep).unwrap() < f3_euler(0.5, 5, &high, &ep).unwrap(),
            "{name}: F3 vs threshold"
        );
    }
    pass(9, "F1/F2/F3 decrease with denser stations and lower thresholds, all criteria");
}
