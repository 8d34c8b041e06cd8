//! CSV and key=value writers. All CSVs carry a header row and use LF line
//! endings; missing values are empty fields.

use std::fmt::Write as _;

use sgl_core::{PathResult, QqRow, SEOutcome, SolverTrace};

use crate::bench::BenchRow;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub fn trace_csv(trace: &SolverTrace) -> String {
    let mut out = String::from("iter,cost,opt_mse,elapsed_ns\n");
    for r in &trace.rows {
        writeln!(out, "{},{},{},{}", r.iter, r.cost, opt(r.opt_mse), r.elapsed_ns).unwrap();
    }
    out
}

pub fn se_outcome_text(o: &SEOutcome) -> String {
    let mut out = String::new();
    let fields: [(&str, String); 14] = [
        ("alpha", o.alpha.to_string()),
        ("tau_star", o.tau_star.to_string()),
        ("lambda", o.lambda.to_string()),
        ("predicted_mse", o.predicted_mse.to_string()),
        ("tpp_inf", o.tpp_inf.to_string()),
        ("fdp_inf", o.fdp_inf.to_string()),
        ("tpp_inf_mc", o.tpp_inf_mc.to_string()),
        ("fdp_inf_mc", o.fdp_inf_mc.to_string()),
        ("tpp_full", o.tpp_full.to_string()),
        ("fdp_full", o.fdp_full.to_string()),
        ("mean_derivative", o.mean_derivative.to_string()),
        ("iterations", (o.tau_schedule.len() - 1).to_string()),
        ("converged", o.converged.to_string()),
        ("admissible", o.admissible.to_string()),
    ];
    for (k, v) in fields {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

pub fn tau_schedule_csv(schedule: &[f64]) -> String {
    let mut out = String::from("iter,tau\n");
    for (t, tau) in schedule.iter().enumerate() {
        writeln!(out, "{t},{tau}").unwrap();
    }
    out
}

pub fn path_csv(path: &PathResult) -> String {
    let mut out = String::from("lambda,empirical_mse,predicted_mse,tpp,tpp_inf,fdp,fdp_inf,n_selected\n");
    for r in &path.rows {
        let p = r.predicted.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.lambda,
            r.empirical.mse,
            opt(p.map(|o| o.predicted_mse)),
            opt(r.empirical.tpp),
            opt(p.map(|o| o.tpp_inf)),
            r.empirical.fdp,
            opt(p.map(|o| o.fdp_inf)),
            r.empirical.n_selected
        )
        .unwrap();
    }
    out
}

pub fn qq_csv(rows: &[QqRow]) -> String {
    let mut out = String::from("prob,empirical_q,predicted_q\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.prob, r.empirical_q, r.predicted_q).unwrap();
    }
    out
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("solver,target_mse,iters,wall_ns\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.solver, r.target_mse, opt(r.iters), opt(r.wall_ns.map(|w| w.round() as u64))).unwrap();
    }
    out
}
