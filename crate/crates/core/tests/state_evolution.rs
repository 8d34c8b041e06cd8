use sgl_core::special::normal_pdf;
use sgl_core::state_evolution::*;
use sgl_core::{PriorSpec, Signal};

fn fig3_params() -> SEParams {
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.5, value: 1.0 }, 1.0).unwrap();
    SEParams::perfect(0.5, 0.25, prior).unwrap()
}

fn default_params() -> SEParams {
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.5, value: 1.0 }, 0.0).unwrap();
    SEParams::perfect(0.5, 0.25, prior).unwrap()
}

fn null_params(gamma: f64, noise_sd: f64) -> SEParams {
    let prior = PriorSpec::new(Signal::Zero, noise_sd).unwrap();
    SEParams::single_group(gamma, 0.5, prior).unwrap()
}

#[test]
fn t_func_matches_quadrature() {
    // Simpson's rule for E[max(Z − 1, 0)²] on [1, 41]
    let (a, b, m) = (1.0, 41.0, 400_000);
    let h = (b - a) / m as f64;
    let f = |z: f64| (z - 1.0) * (z - 1.0) * normal_pdf(z);
    let mut s = f(a) + f(b);
    for k in 1..m {
        let z = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 * f(z) } else { 2.0 * f(z) };
    }
    assert!((t_func(1.0) - s * h / 3.0).abs() < 1e-8);
}

#[test]
fn interval_matches_dense_scan() {
    let (gamma, delta) = (0.5, 0.2);
    let (lo, hi) = admissible_interval(gamma, delta).unwrap();
    let ok = |a: f64| {
        let d = (2.0 * t_func(gamma * a)).sqrt() - (1.0 - gamma) * a;
        delta >= d * d
    };
    let grid: Vec<f64> = (0..60_000).map(|k| k as f64 * 1e-4).collect();
    let first = grid.iter().copied().find(|a| ok(*a)).unwrap();
    let last = grid.iter().copied().filter(|a| ok(*a)).last().unwrap();
    assert!((first - lo).abs() <= 1e-4, "{first} vs {lo}");
    assert!((last - hi).abs() <= 1e-4, "{last} vs {hi}");
}

#[test]
fn lasso_interval_is_unbounded() {
    let (lo, hi) = admissible_interval(1.0, 0.3).unwrap();
    assert!(hi.is_infinite());
    assert!((2.0 * t_func(lo) - 0.3).abs() < 1e-10);
}

#[test]
fn map_of_null_problem() {
    assert_eq!(se_map(0.0, 1.0, &null_params(0.5, 0.0)).unwrap(), 0.0);
    // γ = 1: E η_soft(τZ, ατ)² = 2τ²T(α)
    let params = null_params(1.0, 0.3);
    let engine = SEEngine::new(&params).unwrap();
    for (tau_sq, alpha) in [(0.5, 1.0), (2.0, 0.5), (1.0, 2.0)] {
        let m = engine.map(tau_sq, alpha).unwrap();
        let exact = 0.09 + tau_sq / 0.5 * 2.0 * t_func(alpha);
        assert!((m.f.value - exact).abs() <= 3.0 * m.f.std_err, "{tau_sq} {alpha}: {} vs {exact}", m.f.value);
    }
}

#[test]
fn map_is_increasing_and_concave() {
    let params = fig3_params();
    let engine = SEEngine::new(&params).unwrap();
    for alpha in [0.8, 1.0, 1.4] {
        let grid: Vec<f64> = (1..=30).map(|k| 0.2 * k as f64).collect();
        let vals: Vec<_> = grid.iter().map(|t| engine.map(*t, alpha).unwrap().f).collect();
        for w in vals.windows(2) {
            assert!(w[1].value >= w[0].value - 3.0 * w[1].std_err.max(w[0].std_err));
        }
        for w in vals.windows(3) {
            let second = w[2].value - 2.0 * w[1].value + w[0].value;
            let pooled = (w.iter().map(|e| e.std_err * e.std_err).sum::<f64>() / 3.0).sqrt();
            assert!(second <= 3.0 * pooled, "alpha {alpha}: second difference {second}");
        }
    }
}

#[test]
fn fixed_point_is_monotone_and_stable() {
    let params = default_params();
    let engine = SEEngine::new(&params).unwrap();
    let (lo, hi) = engine.admissible_interval();
    for k in 1..=10 {
        let alpha = lo + (hi - lo) * k as f64 / 11.0;
        let fp = engine.fixed_point(alpha).unwrap();
        assert!(fp.converged, "alpha {alpha}");
        let s = &fp.tau_schedule;
        let up = s.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let down = s.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        assert!(up || down, "alpha {alpha}: schedule not monotone");
        if fp.tau_sq > 0.0 {
            let h = 1e-3 * fp.tau_sq;
            let slope = (engine.map(fp.tau_sq + h, alpha).unwrap().f.value
                - engine.map(fp.tau_sq - h, alpha).unwrap().f.value)
                / (2.0 * h);
            assert!(slope.abs() < 1.0, "alpha {alpha}: slope {slope}");
        }
    }
}

#[test]
fn null_problem_calibrates_to_zero() {
    let params = null_params(0.5, 0.0);
    assert_eq!(se_fixed_point(1.0, &params).unwrap().tau_sq, 0.0);
    assert_eq!(lambda_of_alpha(1.0, &params).unwrap(), 0.0);
    let (lo, _) = admissible_interval(0.5, 0.5).unwrap();
    let a = alpha_of_lambda(0.0, &params).unwrap();
    assert!(a >= lo && a < lo + 0.01);
}

#[test]
fn fig3_calibration_and_round_trip() {
    let engine = SEEngine::new(&fig3_params()).unwrap();
    let lam = engine.lambda_of_alpha(1.0).unwrap();
    assert!((lam - 0.32).abs() <= 0.05, "lambda(1) = {lam}");
    let alpha = engine.alpha_of_lambda(0.32).unwrap();
    assert!((alpha - 1.0).abs() <= 0.05, "alpha(0.32) = {alpha}");
    for a in [0.95, 1.0, 1.05, 1.1, 1.2] {
        let back = engine.alpha_of_lambda(engine.lambda_of_alpha(a).unwrap()).unwrap();
        assert!((back - a).abs() <= 1e-3, "{a} -> {back}");
    }
}

#[test]
fn lambda_is_nondecreasing_in_alpha() {
    let engine = SEEngine::new(&default_params()).unwrap();
    let (lo, hi) = engine.admissible_interval();
    let lams: Vec<f64> = (1..=12)
        .map(|k| engine.lambda_of_alpha(lo + (hi - lo) * k as f64 / 13.0).unwrap())
        .collect();
    for w in lams.windows(2) {
        assert!(w[1] >= w[0] - 1e-6, "{lams:?}");
    }
}

#[test]
fn out_of_range_lambda_names_the_limit() {
    let engine = SEEngine::new(&default_params()).unwrap();
    let lmax = engine.lambda_max().unwrap().unwrap();
    match engine.alpha_of_lambda(2.0 * lmax) {
        Err(sgl_core::Error::LambdaOutOfRange { lambda_max, .. }) => assert_eq!(lambda_max, lmax),
        other => panic!("expected LambdaOutOfRange, got {other:?}"),
    }
}

#[test]
fn tpp_closed_form_matches_monte_carlo() {
    let params = fig3_params();
    let engine = SEEngine::new(&params).unwrap();
    let n_signal = params.replicates() as f64 * params.mc_group_sizes()[0] as f64;
    for alpha in [0.8, 1.0, 1.2] {
        let o = engine.predict(alpha).unwrap();
        let se = (o.tpp_inf * (1.0 - o.tpp_inf) / n_signal).sqrt();
        assert!((o.tpp_inf - o.tpp_inf_mc).abs() <= 3.0 * se, "alpha {alpha}");
        assert!((o.fdp_inf - o.fdp_inf_mc).abs() <= 0.01, "alpha {alpha}");
        for v in [o.tpp_inf, o.fdp_inf, o.tpp_full, o.fdp_full] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!((o.predicted_mse - 0.25 * (o.tau_star * o.tau_star - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn huge_alpha_selects_nothing() {
    let params = null_params(1.0, 1.0);
    let o = predict_metrics(40.0, &params).unwrap();
    assert!(o.tpp_inf < 1e-12);
    assert!(o.fdp_full == 0.0);
    let with_signal = PriorSpec::new(Signal::PointMassMixture { eps: 0.2, value: 1.0 }, 1.0).unwrap();
    let o = predict_metrics(40.0, &SEParams::single_group(1.0, 0.5, with_signal).unwrap()).unwrap();
    assert!(o.tpp_inf < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let a = predict_metrics(1.0, &fig3_params()).unwrap();
    let b = predict_metrics(1.0, &fig3_params()).unwrap();
    assert_eq!(a, b);
    let c = predict_metrics(1.0, &fig3_params().with_seed(7)).unwrap();
    assert_ne!(a.tau_star, c.tau_star);
}
