use sgl_core::linalg::Matrix;
use sgl_core::solvers::{solve_blockwise, solve_ista, stationary_lambda, RidgeSolver};
use sgl_core::*;

fn small_instance(n: usize, p: usize, sizes: &[usize], lambda: f64, gamma: f64, seed: u64) -> ProblemInstance {
    let design = DesignSpec::new(DesignKind::GaussianIid, n, p).unwrap();
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.3, value: 2.0 }, 0.1).unwrap();
    let part = GroupPartition::contiguous(sizes).unwrap();
    generate_instance(&design, &prior, &part, lambda, gamma, GroupMode::AsGiven, seed).unwrap()
}

fn long_ista(inst: &ProblemInstance) -> SolverTrace {
    let cfg = SolverConfig {
        max_iters: 50_000,
        tol: 1e-15,
        ..Default::default()
    };
    solve(SolverKind::Ista, inst, &cfg, &NoClock).unwrap()
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[test]
fn amp_fixed_points_match_long_ista() {
    let mut converged = 0;
    for seed in 0..12 {
        let inst = small_instance(6, 8, &[3, 3, 2], 0.4, 0.5, seed);
        let amp = solve(SolverKind::Amp, &inst, &SolverConfig { max_iters: 5000, tol: 1e-12, ..Default::default() }, &NoClock).unwrap();
        if !amp.converged {
            // at this size a target λ can fall in a gap of λ(θ) and AMP cycles
            continue;
        }
        converged += 1;
        let ista = long_ista(&inst);
        assert!(rel_gap(amp.final_cost(), ista.final_cost()) < 1e-6, "seed {seed}");
    }
    assert!(converged >= 6, "only {converged} of 12 AMP runs converged");
}

#[test]
fn empirical_tau_amp_minimizes_at_its_stationary_lambda() {
    for seed in 0..5 {
        let inst = small_instance(60, 120, &[10; 12], 1.0, 0.5, seed);
        let cfg = SolverConfig {
            max_iters: 3000,
            tol: 1e-12,
            threshold: ThresholdPolicy::EmpiricalTau { alpha: 2.0 },
            ..Default::default()
        };
        let amp = solve(SolverKind::Amp, &inst, &cfg, &NoClock).unwrap();
        assert!(amp.converged, "seed {seed}");
        let theta = *amp.thresholds.last().unwrap();
        let lambda = stationary_lambda(&inst, &amp.final_beta, amp.final_z.as_ref().unwrap(), theta).unwrap();
        assert!(lambda > 0.0);
        let at = inst.with_lambda(lambda).unwrap();
        assert!(at.subgradient_residual(&amp.final_beta, lambda).unwrap() < 1e-6);
        let fista = solve(SolverKind::Fista, &at, &SolverConfig { max_iters: 20_000, tol: 1e-13, ..Default::default() }, &NoClock).unwrap();
        assert!(rel_gap(at.cost(&amp.final_beta).unwrap(), fista.final_cost()) < 1e-8);
    }
}

#[test]
fn ista_reaches_stationarity_and_fista_agrees() {
    let inst = small_instance(6, 8, &[3, 3, 2], 0.4, 0.5, 3);
    let ista = long_ista(&inst);
    assert!(inst.subgradient_residual(&ista.final_beta, inst.lambda).unwrap() < 1e-6);
    let fista = solve(SolverKind::Fista, &inst, &SolverConfig { max_iters: 50_000, tol: 1e-15, ..Default::default() }, &NoClock).unwrap();
    assert!((fista.final_cost() - ista.final_cost()).abs() < 1e-8 * ista.final_cost());
    let bw = solve(SolverKind::Blockwise, &inst, &SolverConfig { max_iters: 50_000, tol: 1e-15, ..Default::default() }, &NoClock).unwrap();
    assert!(rel_gap(bw.final_cost(), fista.final_cost()) < 1e-4);
}

#[test]
fn ista_cost_never_increases() {
    for seed in 0..5 {
        let inst = small_instance(30, 60, &[5; 12], 0.5, 0.3, seed);
        let t = solve(SolverKind::Ista, &inst, &SolverConfig { max_iters: 300, ..Default::default() }, &NoClock).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[1].cost <= w[0].cost + 1e-12 * w[0].cost.abs().max(1.0));
        }
    }
}

#[test]
fn oversized_step_is_reported() {
    let inst = small_instance(30, 60, &[5; 12], 0.1, 0.3, 1);
    let cfg = SolverConfig {
        step_size: Some(50.0),
        ..Default::default()
    };
    match solve(SolverKind::Ista, &inst, &cfg, &NoClock) {
        Err(Error::StepTooLarge { suggested, .. }) => assert_eq!(suggested, 25.0),
        other => panic!("expected StepTooLarge, got {other:?}"),
    }
    assert!(matches!(solve(SolverKind::Fista, &inst, &cfg, &NoClock), Err(Error::StepTooLarge { .. })));
}

#[test]
fn one_ista_step_on_orthogonal_design_is_soft_threshold() {
    let x = Matrix::identity(4);
    let y = vec![3.0, -0.5, 1.2, -2.0];
    let part = GroupPartition::contiguous(&[2, 2]).unwrap();
    let inst = ProblemInstance::new(x, y.clone(), part, 1.0, 1.0).unwrap();
    let s = 0.8;
    let cfg = SolverConfig { max_iters: 1, step_size: Some(s), ..Default::default() };
    let t = solve_ista(&inst, &cfg, &NoClock).unwrap();
    for j in 0..4 {
        assert!((t.final_beta[j] - soft_threshold(s * y[j], s)).abs() < 1e-15);
    }
}

#[test]
fn single_block_sweep_is_one_ista_step() {
    let inst = small_instance(20, 10, &[10], 0.3, 0.4, 5);
    let cfg = SolverConfig { max_iters: 1, step_size: Some(0.2), ..Default::default() };
    let bw = solve_blockwise(&inst, &cfg, &NoClock).unwrap();
    let ista = solve_ista(&inst, &cfg, &NoClock).unwrap();
    assert!(bw.final_beta.iter().any(|v| *v != 0.0));
    for (a, b) in bw.final_beta.iter().zip(&ista.final_beta) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn huge_lambda_gives_zero() {
    let inst = small_instance(30, 60, &[5; 12], 1e9, 0.5, 2);
    for kind in SolverKind::ALL {
        let t = solve(kind, &inst, &SolverConfig::default(), &NoClock).unwrap();
        assert!(t.final_beta.iter().all(|v| *v == 0.0), "{kind}");
    }
    let amp = solve(SolverKind::Amp, &inst, &SolverConfig::default(), &NoClock).unwrap();
    let z = amp.final_z.unwrap();
    for (a, b) in z.iter().zip(&inst.response) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn ridge_closed_form_for_orthonormal_columns() {
    let x = Matrix::identity(5);
    let ridge = RidgeSolver::new(&x).unwrap();
    let b = [1.0, -2.0, 0.5, 4.0, 0.0];
    let out = ridge.solve(1.0, &b).unwrap();
    for j in 0..5 {
        assert!((out[j] - b[j] / 2.0).abs() < 1e-14);
    }
}

#[test]
fn vamp_matches_fista_on_gaussian_design() {
    let design = DesignSpec::new(DesignKind::GaussianIid, 100, 200).unwrap();
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.1, value: 5.0 }, 0.0).unwrap();
    let part = GroupPartition::contiguous(&[1; 200]).unwrap();
    let inst = generate_instance(&design, &prior, &part, 1.0, 0.5, GroupMode::AsGiven, 4).unwrap();
    let vamp = solve(SolverKind::Vamp, &inst, &SolverConfig { max_iters: 500, tol: 1e-10, ..Default::default() }, &NoClock).unwrap();
    let fista = solve(SolverKind::Fista, &inst, &SolverConfig { max_iters: 20_000, tol: 1e-13, ..Default::default() }, &NoClock).unwrap();
    assert!(vamp.converged);
    assert!(rel_gap(vamp.final_cost(), fista.final_cost()) < 1e-3);
}

#[test]
fn traces_are_deterministic_and_costs_consistent() {
    let inst = small_instance(30, 60, &[5; 12], 0.5, 0.5, 9);
    for kind in SolverKind::ALL {
        let cfg = SolverConfig { max_iters: 50, ..Default::default() };
        let a = solve(kind, &inst, &cfg, &NoClock).unwrap();
        let b = solve(kind, &inst, &cfg, &NoClock).unwrap();
        assert_eq!(a, b, "{kind}");
        let c = inst.cost(&a.final_beta).unwrap();
        assert!((c - a.final_cost()).abs() <= 1e-10 * c.max(1.0), "{kind}");
        assert_eq!(a.rows[0].iter, 0);
        assert!(a.rows[0].opt_mse.is_some());
    }
}
