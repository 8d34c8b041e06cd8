use proptest::prelude::*;
use sgl_core::analysis::{predict_path, sweep_path_with};
use sgl_core::*;

fn lasso_instance(p: usize, seed: u64) -> ProblemInstance {
    let design = DesignSpec::new(DesignKind::GaussianIid, p / 2, p).unwrap();
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.2, value: 2.0 }, 0.1).unwrap();
    let part = GroupPartition::single(p).unwrap();
    generate_instance(&design, &prior, &part, 1.0, 1.0, GroupMode::AsGiven, seed).unwrap()
}

#[test]
fn metrics_match_a_scripted_tally() {
    let b0: Vec<f64> = (0..50).map(|j| if j % 3 == 0 { (j as f64).sin() + 2.0 } else { 0.0 }).collect();
    let hat: Vec<f64> = (0..50).map(|j| if j % 4 == 0 { (j as f64).cos() } else { 0.0 }).collect();
    let m = empirical_metrics(&hat, &b0).unwrap();
    let (mut tp, mut fp, mut sig, mut sq) = (0, 0, 0, 0.0);
    for j in 0..50 {
        sq += (hat[j] - b0[j]) * (hat[j] - b0[j]);
        if b0[j] != 0.0 {
            sig += 1;
        }
        if hat[j] != 0.0 {
            if b0[j] != 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    assert_eq!(m.n_selected, tp + fp);
    assert_eq!(m.tpp, Some(tp as f64 / sig as f64));
    assert_eq!(m.fdp, fp as f64 / (tp + fp) as f64);
    assert!((m.mse - sq / 50.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn counts_are_consistent(pairs in proptest::collection::vec((-2i8..3, -2i8..3), 1..80)) {
        let hat: Vec<f64> = pairs.iter().map(|(a, _)| *a as f64).collect();
        let b0: Vec<f64> = pairs.iter().map(|(_, b)| *b as f64).collect();
        let m = empirical_metrics(&hat, &b0).unwrap();
        let support = b0.iter().filter(|v| **v != 0.0).count() as f64;
        let f = m.fdp * m.n_selected as f64;
        prop_assert!((f - f.round()).abs() < 1e-9);
        if let Some(t) = m.tpp {
            prop_assert!((t * support - (t * support).round()).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&t));
        } else {
            prop_assert_eq!(support, 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&m.fdp));
    }
}

#[test]
fn lasso_path_is_continuous_and_counts_agree() {
    let inst = lasso_instance(200, 3);
    let lambdas: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
    let none = vec![None; lambdas.len()];
    let cfg = SolverConfig { max_iters: 20_000, tol: 1e-12, ..Default::default() };
    let path = sweep_path_with(&inst, &lambdas, SolverKind::Fista, &cfg, &none, &NoClock).unwrap();
    let beta0 = &inst.truth.as_ref().unwrap().beta0;
    for row in &path.rows {
        let beta = solve(SolverKind::Fista, &inst.with_lambda(row.lambda).unwrap(), &cfg, &NoClock).unwrap().final_beta;
        assert_eq!(row.empirical.n_selected, beta.iter().filter(|v| v.abs() > 1e-10).count());
        assert_eq!(row.empirical, empirical_metrics(&beta, beta0).unwrap());
    }
    for w in path.rows.windows(2) {
        assert!((w[1].empirical.mse - w[0].empirical.mse).abs() < 0.2);
    }
    let violations = path
        .rows
        .windows(2)
        .filter(|w| w[1].empirical.n_selected > w[0].empirical.n_selected)
        .count();
    assert!(violations * 50 <= path.rows.len() * 2 + 50, "{violations} increases in n_selected");
}

#[test]
fn path_predictions_are_attached() {
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.5, value: 1.0 }, 0.0).unwrap();
    let params = SEParams::perfect(0.5, 0.25, prior).unwrap().with_mc(20_000, 2000).unwrap();
    let engine = SEEngine::new(&params).unwrap();
    let design = DesignSpec::new(DesignKind::GaussianIid, 100, 400).unwrap();
    let inst = generate_perfect_instance(&design, &prior, 1.0, 0.5, 1).unwrap();
    let lambdas = [0.2, 0.5, 1e6];
    let preds = predict_path(&lambdas, &engine).unwrap();
    assert!(preds[0].is_some() && preds[1].is_some());
    assert!(preds[2].is_none());
    let cfg = SolverConfig { max_iters: 5000, tol: 1e-10, ..Default::default() };
    let path = sweep_path_with(&inst, &lambdas, SolverKind::Amp, &cfg, &preds, &NoClock).unwrap();
    assert_eq!(path.rows.len(), 3);
    assert_eq!(path.rows[2].empirical.n_selected, 0);
    let o = path.rows[0].predicted.as_ref().unwrap();
    assert!((o.lambda - 0.2).abs() < 0.05);
}

#[test]
fn amp_solution_is_the_minimizer() {
    let design = DesignSpec::new(DesignKind::GaussianIid, 500, 1000).unwrap();
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.1, value: 5.0 }, 0.0).unwrap();
    let part = GroupPartition::contiguous(&[10; 100]).unwrap();
    let inst = generate_instance(&design, &prior, &part, 1.0, 0.5, GroupMode::AsGiven, 8).unwrap();
    let fista = solve(SolverKind::Fista, &inst, &SolverConfig { max_iters: 20_000, tol: 1e-13, ..Default::default() }, &NoClock).unwrap();
    let cfg = SolverConfig {
        max_iters: 200,
        tol: 1e-12,
        reference: Some(fista.final_beta.clone()),
        ..Default::default()
    };
    let amp = solve(SolverKind::Amp, &inst, &cfg, &NoClock).unwrap();
    let dist: Vec<f64> = amp.rows.iter().filter_map(|r| r.opt_mse).collect();
    assert!(*dist.last().unwrap() < 1e-3);
    // strictly decreasing until it reaches the calibration jitter floor
    for w in dist.windows(2).filter(|w| w[0] > 1e-5) {
        assert!(w[1] < w[0], "{dist:?}");
    }
}

#[test]
fn qq_of_null_problem_is_zero() {
    let prior = PriorSpec::new(Signal::Zero, 0.0).unwrap();
    let params = SEParams::single_group(0.5, 0.5, prior).unwrap().with_mc(10_000, 1000).unwrap();
    let o = predict_metrics(1.0, &params).unwrap();
    let rows = qq_compare(&[0.0; 200], &o, &params, 1).unwrap();
    assert_eq!(rows.len(), 99);
    assert!(rows.iter().all(|r| r.empirical_q == 0.0 && r.predicted_q == 0.0));
    assert!((rows[49].prob - 0.5).abs() < 1e-15);
}
