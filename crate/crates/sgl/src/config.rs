//! Flat `key=value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sgl_core::{
    generate_instance, generate_perfect_instance, DesignKind, DesignSpec, GroupMode, GroupPartition, PriorSpec,
    ProblemInstance, SEParams, Signal, SolverConfig, SolverKind, StepRule, ThresholdPolicy,
};

use crate::error::{Error, Result};
use crate::format::{load_instance, read_membership};

/// Splits `key=value` lines, skipping blanks and `#` comments. Repeated
/// keys are an error.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if out.iter().any(|(key, _)| key == k) {
            return Err(Error::config(k, "given more than once"));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupModeKey {
    AsGiven,
    Perfect,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKey {
    FixedLambda,
    EmpiricalTau,
    SeDriven,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Load this bundle instead of generating an instance.
    pub instance: Option<PathBuf>,
    pub design: DesignKind,
    pub n: usize,
    pub p: usize,
    pub signal: Signal,
    pub sigma_w: f64,
    pub group_mode: GroupModeKey,
    /// 0 puts every predictor in one group.
    pub group_size: usize,
    pub groups_file: Option<PathBuf>,
    pub lambda: f64,
    pub gamma: f64,
    pub solver: SolverKind,
    pub max_iters: usize,
    pub tol: f64,
    pub threshold: ThresholdKey,
    pub alpha: f64,
    pub step_size: Option<f64>,
    pub step_rule: StepRule,
    pub damping: f64,
    pub stop_mse: Option<f64>,
    pub mc_samples: usize,
    pub p_mc: usize,
    pub se_seed: u64,
    /// Explicit path grid; when empty, `lambda_points` values evenly spaced
    /// on `[lambda_min, lambda_max]`.
    pub lambda_grid: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
    pub repetitions: usize,
    pub bench_solvers: Vec<SolverKind>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            instance: None,
            design: DesignKind::GaussianIid,
            n: 200,
            p: 400,
            signal: Signal::PointMassMixture { eps: 0.1, value: 5.0 },
            sigma_w: 0.0,
            group_mode: GroupModeKey::AsGiven,
            group_size: 0,
            groups_file: None,
            lambda: 1.0,
            gamma: 0.5,
            solver: SolverKind::Amp,
            max_iters: 1000,
            tol: 1e-8,
            threshold: ThresholdKey::FixedLambda,
            alpha: 1.0,
            step_size: None,
            step_rule: StepRule::Spectral,
            damping: 0.1,
            stop_mse: None,
            mc_samples: 100_000,
            p_mc: 2000,
            se_seed: 0,
            lambda_grid: Vec::new(),
            lambda_min: 0.1,
            lambda_max: 2.0,
            lambda_points: 10,
            repetitions: 1,
            bench_solvers: vec![SolverKind::Amp, SolverKind::Fista, SolverKind::Ista],
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn opt_num<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.is_empty() || v == "auto" || v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), T::to_string)
}

const KEYS: &[&str] = &[
    "seed", "output_dir", "instance", "design", "n", "p", "condition_number", "signal", "eps", "value", "sd",
    "sigma_w", "group_mode", "group_size", "groups_file", "lambda", "gamma", "solver", "max_iters", "tol",
    "threshold", "alpha", "step_size", "step_rule", "step_scale", "damping", "stop_mse", "mc_samples", "p_mc",
    "se_seed", "lambda_grid", "lambda_min", "lambda_max", "lambda_points", "repetitions", "bench_solvers",
];

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(&parse_key_values(text)?)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Applies overrides in order. Signal and design parameters are
    /// collected first so that, for example, `eps` may precede `signal`.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        let (mut eps, mut value, mut sd) = self.signal_parts();
        let mut cond = match self.design {
            DesignKind::RotInvariant { condition_number } => condition_number,
            _ => 10.0,
        };
        let mut step_scale = match self.step_rule {
            StepRule::FrobeniusGram { scale } => scale,
            StepRule::Spectral => 1.0,
        };
        let mut signal_kind = self.signal_kind().to_string();
        let mut design_kind = self.design_name().to_string();
        let mut rule = self.step_rule_name().to_string();
        for (k, v) in pairs {
            let (k, v) = (k.as_str(), v.as_str());
            match k {
                "seed" => self.seed = num(k, v)?,
                "output_dir" => self.output_dir = PathBuf::from(v),
                "instance" => self.instance = opt_path(v),
                "design" => design_kind = v.to_string(),
                "n" => self.n = num(k, v)?,
                "p" => self.p = num(k, v)?,
                "condition_number" => cond = num(k, v)?,
                "signal" => signal_kind = v.to_string(),
                "eps" => eps = num(k, v)?,
                "value" => value = num(k, v)?,
                "sd" => sd = num(k, v)?,
                "sigma_w" => self.sigma_w = num(k, v)?,
                "group_mode" => {
                    self.group_mode = match v {
                        "as_given" => GroupModeKey::AsGiven,
                        "perfect" => GroupModeKey::Perfect,
                        "mixed" => GroupModeKey::Mixed,
                        _ => return Err(Error::config(k, "expected as_given, perfect or mixed")),
                    }
                }
                "group_size" => self.group_size = num(k, v)?,
                "groups_file" => self.groups_file = opt_path(v),
                "lambda" => self.lambda = num(k, v)?,
                "gamma" => self.gamma = num(k, v)?,
                "solver" => self.solver = v.parse().map_err(|e: sgl_core::Error| Error::config(k, e.to_string()))?,
                "max_iters" => self.max_iters = num(k, v)?,
                "tol" => self.tol = num(k, v)?,
                "threshold" => {
                    self.threshold = match v {
                        "fixed_lambda" => ThresholdKey::FixedLambda,
                        "empirical_tau" => ThresholdKey::EmpiricalTau,
                        "se_driven" => ThresholdKey::SeDriven,
                        _ => return Err(Error::config(k, "expected fixed_lambda, empirical_tau or se_driven")),
                    }
                }
                "alpha" => self.alpha = num(k, v)?,
                "step_size" => self.step_size = opt_num(k, v)?,
                "step_rule" => rule = v.to_string(),
                "step_scale" => step_scale = num(k, v)?,
                "damping" => self.damping = num(k, v)?,
                "stop_mse" => self.stop_mse = opt_num(k, v)?,
                "mc_samples" => self.mc_samples = num(k, v)?,
                "p_mc" => self.p_mc = num(k, v)?,
                "se_seed" => self.se_seed = num(k, v)?,
                "lambda_grid" => self.lambda_grid = list(k, v)?,
                "lambda_min" => self.lambda_min = num(k, v)?,
                "lambda_max" => self.lambda_max = num(k, v)?,
                "lambda_points" => self.lambda_points = num(k, v)?,
                "repetitions" => self.repetitions = num(k, v)?,
                "bench_solvers" => {
                    self.bench_solvers = v
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|e: sgl_core::Error| Error::config(k, e.to_string())))
                        .collect::<Result<_>>()?
                }
                _ => return Err(Error::config(k, "unknown key")),
            }
        }
        self.signal = match signal_kind.as_str() {
            "point_mass" => Signal::PointMassMixture { eps, value },
            "bernoulli_gaussian" => Signal::BernoulliGaussian { eps, sd },
            "zero" => Signal::Zero,
            _ => return Err(Error::config("signal", "expected point_mass, bernoulli_gaussian or zero")),
        };
        self.design = match design_kind.as_str() {
            "gaussian" => DesignKind::GaussianIid,
            "bernoulli" => DesignKind::BernoulliPm1,
            "shifted_exponential" => DesignKind::ShiftedExponential,
            "rot_invariant" => DesignKind::RotInvariant { condition_number: cond },
            _ => {
                return Err(Error::config(
                    "design",
                    "expected gaussian, bernoulli, shifted_exponential or rot_invariant",
                ))
            }
        };
        self.step_rule = match rule.as_str() {
            "spectral" => StepRule::Spectral,
            "frobenius" => StepRule::FrobeniusGram { scale: step_scale },
            _ => return Err(Error::config("step_rule", "expected spectral or frobenius")),
        };
        self.validate()
    }

    /// Applies `key=value` strings given on the command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        let pairs = parse_key_values(&overrides.join("\n"))?;
        self.apply(&pairs)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::config("n", "dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be finite and nonnegative"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::config("damping", "must lie in [0, 1)"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be positive"));
        }
        if self.lambda_grid.is_empty() && (self.lambda_points == 0 || !(self.lambda_max > self.lambda_min)) {
            return Err(Error::config("lambda_points", "need lambda_points >= 1 and lambda_max > lambda_min"));
        }
        if self.group_size > self.p {
            return Err(Error::config("group_size", "exceeds p"));
        }
        PriorSpec::new(self.signal, self.sigma_w).map_err(|e| Error::config("signal", e.to_string()))?;
        Ok(())
    }

    fn signal_parts(&self) -> (f64, f64, f64) {
        match self.signal {
            Signal::PointMassMixture { eps, value } => (eps, value, 1.0),
            Signal::BernoulliGaussian { eps, sd } => (eps, 5.0, sd),
            Signal::Zero => (0.1, 5.0, 1.0),
        }
    }

    fn signal_kind(&self) -> &'static str {
        match self.signal {
            Signal::PointMassMixture { .. } => "point_mass",
            Signal::BernoulliGaussian { .. } => "bernoulli_gaussian",
            Signal::Zero => "zero",
        }
    }

    fn design_name(&self) -> &'static str {
        match self.design {
            DesignKind::GaussianIid => "gaussian",
            DesignKind::BernoulliPm1 => "bernoulli",
            DesignKind::ShiftedExponential => "shifted_exponential",
            DesignKind::RotInvariant { .. } => "rot_invariant",
        }
    }

    fn step_rule_name(&self) -> &'static str {
        match self.step_rule {
            StepRule::Spectral => "spectral",
            StepRule::FrobeniusGram { .. } => "frobenius",
        }
    }

    /// Every key with its resolved value, one per line, in a fixed order.
    pub fn to_text(&self) -> String {
        let (eps, value, sd) = self.signal_parts();
        let cond = match self.design {
            DesignKind::RotInvariant { condition_number } => condition_number,
            _ => 10.0,
        };
        let scale = match self.step_rule {
            StepRule::FrobeniusGram { scale } => scale,
            StepRule::Spectral => 1.0,
        };
        let mode = match self.group_mode {
            GroupModeKey::AsGiven => "as_given",
            GroupModeKey::Perfect => "perfect",
            GroupModeKey::Mixed => "mixed",
        };
        let thr = match self.threshold {
            ThresholdKey::FixedLambda => "fixed_lambda",
            ThresholdKey::EmpiricalTau => "empirical_tau",
            ThresholdKey::SeDriven => "se_driven",
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let values: Vec<String> = vec![
            self.seed.to_string(),
            self.output_dir.display().to_string(),
            path(&self.instance),
            self.design_name().into(),
            self.n.to_string(),
            self.p.to_string(),
            cond.to_string(),
            self.signal_kind().into(),
            eps.to_string(),
            value.to_string(),
            sd.to_string(),
            self.sigma_w.to_string(),
            mode.into(),
            self.group_size.to_string(),
            path(&self.groups_file),
            self.lambda.to_string(),
            self.gamma.to_string(),
            self.solver.to_string(),
            self.max_iters.to_string(),
            self.tol.to_string(),
            thr.into(),
            self.alpha.to_string(),
            opt_str(&self.step_size),
            self.step_rule_name().into(),
            scale.to_string(),
            self.damping.to_string(),
            opt_str(&self.stop_mse),
            self.mc_samples.to_string(),
            self.p_mc.to_string(),
            self.se_seed.to_string(),
            join(&self.lambda_grid),
            self.lambda_min.to_string(),
            self.lambda_max.to_string(),
            self.lambda_points.to_string(),
            self.repetitions.to_string(),
            join(&self.bench_solvers),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }

    pub fn prior(&self) -> Result<PriorSpec> {
        Ok(PriorSpec::new(self.signal, self.sigma_w)?)
    }

    pub fn design_spec(&self) -> Result<DesignSpec> {
        Ok(DesignSpec::new(self.design, self.n, self.p)?)
    }

    pub fn partition(&self) -> Result<GroupPartition> {
        if let Some(path) = &self.groups_file {
            let labels = read_membership(path)?;
            if labels.len() != self.p {
                return Err(Error::config("groups_file", format!("has {} labels, p is {}", labels.len(), self.p)));
            }
            return Ok(GroupPartition::from_membership(&labels)?);
        }
        if self.group_size == 0 {
            return Ok(GroupPartition::single(self.p)?);
        }
        let mut sizes = vec![self.group_size; self.p / self.group_size];
        if self.p % self.group_size != 0 {
            sizes.push(self.p % self.group_size);
        }
        Ok(GroupPartition::contiguous(&sizes)?)
    }

    /// The configured instance for repetition `rep` (seed `seed + rep`), or
    /// the bundle named by `instance`.
    pub fn build_instance(&self, rep: u64) -> Result<ProblemInstance> {
        if let Some(dir) = &self.instance {
            let (inst, _) = load_instance(dir)?;
            return Ok(inst.with_lambda(self.lambda)?);
        }
        let design = self.design_spec()?;
        let prior = self.prior()?;
        let seed = self.seed + rep;
        let inst = match self.group_mode {
            GroupModeKey::Perfect => generate_perfect_instance(&design, &prior, self.lambda, self.gamma, seed)?,
            GroupModeKey::Mixed => {
                generate_instance(&design, &prior, &GroupPartition::single(self.p)?, self.lambda, self.gamma, GroupMode::Mixed, seed)?
            }
            GroupModeKey::AsGiven => {
                generate_instance(&design, &prior, &self.partition()?, self.lambda, self.gamma, GroupMode::AsGiven, seed)?
            }
        };
        Ok(inst)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let threshold = match self.threshold {
            ThresholdKey::FixedLambda => ThresholdPolicy::FixedLambda,
            ThresholdKey::EmpiricalTau => ThresholdPolicy::EmpiricalTau { alpha: self.alpha },
            // the schedule is filled in from state evolution by the caller
            ThresholdKey::SeDriven => ThresholdPolicy::SeDriven {
                alpha: self.alpha,
                tau_schedule: Vec::new(),
            },
        };
        SolverConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            threshold,
            step_size: self.step_size,
            step_rule: self.step_rule,
            damping: self.damping,
            reference: None,
            stop_mse: self.stop_mse,
            init: None,
        }
    }

    /// State-evolution parameters matching the configured group layout.
    pub fn se_params(&self) -> Result<SEParams> {
        let prior = self.prior()?;
        let delta = self.n as f64 / self.p as f64;
        let params = match self.group_mode {
            GroupModeKey::Perfect => SEParams::perfect(self.gamma, delta, prior)?,
            GroupModeKey::Mixed => SEParams::single_group(self.gamma, delta, prior)?,
            GroupModeKey::AsGiven => {
                let part = self.partition()?;
                let ratios = part.sizes().iter().map(|&s| s as f64 / self.p as f64).collect();
                SEParams::new(self.gamma, delta, prior, ratios)?
            }
        };
        Ok(params.with_mc(self.mc_samples, self.p_mc)?.with_seed(self.se_seed))
    }

    pub fn lambdas(&self) -> Vec<f64> {
        if !self.lambda_grid.is_empty() {
            return self.lambda_grid.clone();
        }
        if self.lambda_points == 1 {
            return vec![self.lambda_min];
        }
        let step = (self.lambda_max - self.lambda_min) / (self.lambda_points - 1) as f64;
        (0..self.lambda_points).map(|k| self.lambda_min + step * k as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let cfg = ExperimentConfig::from_text("signal=bernoulli_gaussian\nsd=2\neps=0.3\ndesign=rot_invariant\ncondition_number=5\nstep_rule=frobenius\nstep_scale=0.5\nbench_solvers=amp,vamp\nlambda_grid=0.1,0.2\n").unwrap();
        assert_eq!(cfg.signal, Signal::BernoulliGaussian { eps: 0.3, sd: 2.0 });
        assert_eq!(cfg.design, DesignKind::RotInvariant { condition_number: 5.0 });
        assert_eq!(cfg.step_rule, StepRule::FrobeniusGram { scale: 0.5 });
        let again = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        match ExperimentConfig::from_text("lamda=1\n") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "lamda"),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_text("n=1\nn=2\n").is_err());
        assert!(ExperimentConfig::from_text("gamma=2\n").is_err());
        assert!(ExperimentConfig::from_text("no equals sign\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = ExperimentConfig::from_text("# fig 3\n\n  lambda = 0.32 \n").unwrap();
        assert_eq!(cfg.lambda, 0.32);
    }

    #[test]
    fn evenly_spaced_grid() {
        let cfg = ExperimentConfig::from_text("lambda_min=0.5\nlambda_max=1\nlambda_points=3\n").unwrap();
        assert_eq!(cfg.lambdas(), vec![0.5, 0.75, 1.0]);
    }

    #[test]
    fn partition_from_group_size() {
        let cfg = ExperimentConfig::from_text("p=10\nn=5\ngroup_size=4\n").unwrap();
        assert_eq!(cfg.partition().unwrap().sizes(), &[4, 4, 2]);
    }
}
