//! State evolution for SGL AMP: the scalar recursion
//!
//! ```text
//! τ²_{t+1} = F(τ²_t) = σ_w² + E‖η(Π + τ_t Z, ατ_t) − Π‖² / (δp)
//! ```
//!
//! its fixed point `τ*`, the calibration `λ = ατ*(1 − ⟨η'(Π + τ*Z, ατ*)⟩/δ)`,
//! and the asymptotic MSE/TPP/FDP predictions built on them.
//!
//! Expectations are Monte Carlo averages over a fixed set of draws (common
//! random numbers), so every function here is deterministic in `τ²` and `α`
//! for given parameters. The limit `p → ∞` is approximated by replicates of
//! a finite vector of length `p_mc`.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::model::{GroupPartition, PriorSpec, Signal};
use crate::prox::{apply, check_gamma, ProxInput};
use crate::random::{self, ids};
use crate::special::{normal_cdf, normal_pdf};

/// `T(z) = (1 + z²)Φ(−z) − zφ(z) = E[max(Z − z, 0)²]`.
pub fn t_func(z: f64) -> f64 {
    (1.0 + z * z) * normal_cdf(-z) - z * normal_pdf(z)
}

/// `√(2T(γα)) − (1−γ)α`; the admissible set is where its square is at most `δ`.
fn boundary(alpha: f64, gamma: f64) -> f64 {
    libm::sqrt(2.0 * t_func(gamma * alpha)) - (1.0 - gamma) * alpha
}

/// Solves `boundary(α) = target` for a strictly decreasing boundary.
fn invert_boundary(target: f64, gamma: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while boundary(hi, gamma) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if boundary(mid, gamma) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The admissible interval `{α >= 0 : δ >= (√(2T(γα)) − (1−γ)α)²}`.
///
/// The boundary function equals 1 at `α = 0` and is strictly decreasing, so
/// the set is an interval; its upper end is infinite when `γ = 1`.
pub fn admissible_interval(gamma: f64, delta: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "must be positive and finite"));
    }
    let root = libm::sqrt(delta);
    let lo = if root >= 1.0 { 0.0 } else { invert_boundary(root, gamma) };
    // for γ = 1 the boundary stays positive, so it never reaches −√δ
    let hi = if gamma >= 1.0 { f64::INFINITY } else { invert_boundary(-root, gamma) };
    Ok((lo, hi))
}

/// Inputs of the state-evolution machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct SEParams {
    pub gamma: f64,
    /// Limit of `n/p`.
    pub delta: f64,
    pub prior: PriorSpec,
    /// Relative group sizes `r_l`, summing to 1.
    pub group_ratios: Vec<f64>,
    /// Signal law per group; `None` uses `prior.signal` in every group.
    pub group_signals: Option<Vec<Signal>>,
    /// Total number of Monte Carlo coordinates per evaluation.
    pub mc_samples: usize,
    /// Length of one simulated vector.
    pub p_mc: usize,
    pub seed: u64,
}

impl SEParams {
    pub fn new(gamma: f64, delta: f64, prior: PriorSpec, group_ratios: Vec<f64>) -> Result<Self> {
        let out = Self {
            gamma,
            delta,
            prior,
            group_ratios,
            group_signals: None,
            mc_samples: 100_000,
            p_mc: 2000,
            seed: 0,
        };
        out.validate()?;
        Ok(out)
    }

    /// One group holding every coordinate ("mixed" group information).
    pub fn single_group(gamma: f64, delta: f64, prior: PriorSpec) -> Result<Self> {
        Self::new(gamma, delta, prior, vec![1.0])
    }

    /// Perfect group information: group 1 holds the signals (share `ε`,
    /// drawn from `Π | Π ≠ 0`) and group 2 the nulls.
    pub fn perfect(gamma: f64, delta: f64, prior: PriorSpec) -> Result<Self> {
        let eps = prior.signal.nonzero_prob();
        if eps <= 0.0 || eps >= 1.0 {
            return Self::single_group(gamma, delta, prior);
        }
        let mut out = Self::new(gamma, delta, prior, vec![eps, 1.0 - eps])?;
        out.group_signals = Some(vec![prior.signal.nonzero_part(), Signal::Zero]);
        Ok(out)
    }

    pub fn with_mc(mut self, mc_samples: usize, p_mc: usize) -> Result<Self> {
        self.mc_samples = mc_samples;
        self.p_mc = p_mc;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be positive and finite"));
        }
        self.prior.signal.validate()?;
        if self.group_ratios.is_empty() || self.group_ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("group_ratios", "must be a nonempty list of positive ratios"));
        }
        let total: f64 = self.group_ratios.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("group_ratios", "must sum to 1"));
        }
        if let Some(sig) = &self.group_signals {
            if sig.len() != self.group_ratios.len() {
                return Err(invalid("group_signals", "need one signal law per group"));
            }
            for s in sig {
                s.validate()?;
            }
        }
        if self.mc_samples == 0 || self.p_mc == 0 {
            return Err(invalid("mc_samples", "must be positive"));
        }
        if self.p_mc < self.group_ratios.len() {
            return Err(invalid("p_mc", "must be at least the number of groups"));
        }
        Ok(())
    }

    /// Group sizes at `p_mc`: `⌊r_l·p_mc⌋`, remainder to group 1.
    pub fn mc_group_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self
            .group_ratios
            .iter()
            .map(|r| ((r * self.p_mc as f64) as usize).max(1))
            .collect();
        let used: usize = sizes.iter().sum();
        if used <= self.p_mc {
            sizes[0] += self.p_mc - used;
        } else {
            // only possible when a tiny ratio was rounded up to 1
            let largest = (0..sizes.len()).max_by_key(|&l| sizes[l]).unwrap_or(0);
            sizes[largest] -= used - self.p_mc;
        }
        sizes
    }

    /// `E[Π²]` averaged over groups.
    pub fn signal_second_moment(&self) -> f64 {
        match &self.group_signals {
            None => self.prior.signal.second_moment(),
            Some(sig) => sig
                .iter()
                .zip(&self.group_ratios)
                .map(|(s, r)| r * s.second_moment())
                .sum(),
        }
    }

    pub fn replicates(&self) -> usize {
        self.mc_samples.div_ceil(self.p_mc).max(1)
    }
}

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// One evaluation of the state-evolution map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapValue {
    /// `F(τ²)`.
    pub f: Estimate,
    /// `⟨η'(Π + τZ, ατ)⟩`.
    pub mean_derivative: Estimate,
}

/// State-evolution fixed point for one `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub alpha: f64,
    pub tau_sq: f64,
    /// `τ_t` (not squared), starting from `τ₀`.
    pub tau_schedule: Vec<f64>,
    pub converged: bool,
    pub std_err: f64,
}

impl FixedPoint {
    pub fn tau_star(&self) -> f64 {
        libm::sqrt(self.tau_sq)
    }
}

/// Everything predicted for one `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SEOutcome {
    pub alpha: f64,
    pub tau_star: f64,
    pub lambda: f64,
    /// `δ(τ*² − σ_w²)`.
    pub predicted_mse: f64,
    /// `P(|Π* + τ*Z| > γατ*)` with `Π* ~ Π | Π ≠ 0`, closed form where available.
    pub tpp_inf: f64,
    /// `2(1−ε)Φ(−γα) / (2(1−ε)Φ(−γα) + ε·TPP∞)`.
    pub fdp_inf: f64,
    /// Monte Carlo counterparts of the two formulas above (soft-threshold event).
    pub tpp_inf_mc: f64,
    pub fdp_inf_mc: f64,
    /// Selection rates of the full proximal operator, group kills included.
    pub tpp_full: f64,
    pub fdp_full: f64,
    pub mean_derivative: f64,
    pub tau_schedule: Vec<f64>,
    pub converged: bool,
    /// Whether `α` lies inside the admissible interval.
    pub admissible: bool,
}

/// Precomputed draws of `(Π, Z)` shared by every evaluation.
#[derive(Debug, Clone)]
pub struct SEEngine {
    params: SEParams,
    partition: GroupPartition,
    signal: Vec<f64>,
    noise: Vec<f64>,
    replicates: usize,
    interval: (f64, f64),
}

impl SEEngine {
    pub fn new(params: &SEParams) -> Result<Self> {
        params.validate()?;
        let sizes = params.mc_group_sizes();
        let partition = GroupPartition::contiguous(&sizes)?;
        let reps = params.replicates();
        let p = params.p_mc;
        let mut signal = Vec::with_capacity(reps * p);
        let mut noise = Vec::with_capacity(reps * p);
        for r in 0..reps as u64 {
            // one substream per replicate
            let mut srng = random::stream(params.seed, ids::SE_SIGNAL + 256 * r);
            let mut zrng = random::stream(params.seed, ids::SE_NOISE + 256 * r);
            for (l, &size) in sizes.iter().enumerate() {
                let law = match &params.group_signals {
                    Some(sig) => sig[l],
                    None => params.prior.signal,
                };
                for _ in 0..size {
                    signal.push(law.sample(&mut srng));
                }
            }
            for _ in 0..p {
                noise.push(StandardNormal.sample(&mut zrng));
            }
        }
        let interval = admissible_interval(params.gamma, params.delta)?;
        Ok(Self {
            params: params.clone(),
            partition,
            signal,
            noise,
            replicates: reps,
            interval,
        })
    }

    pub fn params(&self) -> &SEParams {
        &self.params
    }

    pub fn admissible_interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Runs `f` on each replicate's `(Π, Π + τZ, η(Π + τZ, θ), η')`.
    fn for_each_replicate(&self, tau: f64, theta: f64, mut f: impl FnMut(&[f64], &[f64], &[f64], &[f64], f64)) {
        let p = self.params.p_mc;
        let mut point = vec![0.0; p];
        let mut out = vec![0.0; p];
        let mut deriv = vec![0.0; p];
        for r in 0..self.replicates {
            let pi = &self.signal[r * p..(r + 1) * p];
            let z = &self.noise[r * p..(r + 1) * p];
            for j in 0..p {
                point[j] = pi[j] + tau * z[j];
            }
            let input = ProxInput {
                point: &point,
                threshold: theta,
                gamma: self.params.gamma,
                partition: &self.partition,
            };
            let trace = apply(&input, &mut out, Some(&mut deriv));
            f(pi, &point, &out, &deriv, trace);
        }
    }

    /// `F(τ²)` and `⟨η'⟩` at threshold `ατ`.
    pub fn map(&self, tau_sq: f64, alpha: f64) -> Result<MapValue> {
        if !(tau_sq >= 0.0 && tau_sq.is_finite()) {
            return Err(invalid("tau_sq", "must be finite and nonnegative"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", "must be finite and nonnegative"));
        }
        let tau = libm::sqrt(tau_sq);
        let p = self.params.p_mc as f64;
        let delta = self.params.delta;
        let mut errs = Vec::with_capacity(self.replicates);
        let mut derivs = Vec::with_capacity(self.replicates);
        let mut coord_sq = 0.0;
        self.for_each_replicate(tau, alpha * tau, |pi, _, out, _, trace| {
            let mut s = 0.0;
            for (o, t) in out.iter().zip(pi) {
                let e = (o - t) * (o - t);
                s += e;
                coord_sq += e * e;
            }
            errs.push(s / (delta * p));
            derivs.push(trace / p);
        });
        let sigma_sq = self.params.prior.noise_var();
        let mut f = mean_and_err(&errs);
        if self.replicates == 1 {
            // fall back to treating coordinates as independent
            let n = p;
            let m = errs[0] * delta;
            let var = (coord_sq / n - m * m).max(0.0);
            f.std_err = libm::sqrt(var / n) / delta;
        }
        f.value += sigma_sq;
        Ok(MapValue {
            f,
            mean_derivative: mean_and_err(&derivs),
        })
    }

    /// Iterates `τ²_{t+1} = F(τ²_t)` from `τ₀² = σ_w² + E[Π²]/δ`.
    pub fn fixed_point(&self, alpha: f64) -> Result<FixedPoint> {
        let sigma_sq = self.params.prior.noise_var();
        let mut tau_sq = sigma_sq + self.params.signal_second_moment() / self.params.delta;
        let mut schedule = vec![libm::sqrt(tau_sq)];
        let mut converged = false;
        let mut std_err = 0.0;
        let mut last_step = 0.0f64;
        for _ in 0..1000 {
            let m = self.map(tau_sq, alpha)?;
            let next = m.f.value;
            std_err = m.f.std_err;
            if !next.is_finite() {
                return Err(Error::Degenerate("state evolution produced a non-finite value".into()));
            }
            let step = next - tau_sq;
            // with common random numbers the map is increasing, so the
            // iterates move monotonically; a reversal larger than the MC
            // noise means the estimate is too coarse
            if last_step != 0.0 && step * last_step < 0.0 && step.abs() > 3.0 * std_err.max(1e-12) {
                return Err(Error::Oscillation { alpha });
            }
            last_step = step;
            tau_sq = next;
            schedule.push(libm::sqrt(tau_sq));
            if step.abs() < 1e-9 * tau_sq.max(1.0) {
                converged = true;
                break;
            }
        }
        Ok(FixedPoint {
            alpha,
            tau_sq,
            tau_schedule: schedule,
            converged,
            std_err,
        })
    }

    /// `λ = ατ*(1 − ⟨η'(Π + τ*Z, ατ*)⟩/δ)`.
    pub fn lambda_of_alpha(&self, alpha: f64) -> Result<f64> {
        let fp = self.fixed_point(alpha)?;
        self.lambda_at(&fp)
    }

    fn lambda_at(&self, fp: &FixedPoint) -> Result<f64> {
        let m = self.map(fp.tau_sq, fp.alpha)?;
        Ok(fp.alpha * fp.tau_star() * (1.0 - m.mean_derivative.value / self.params.delta))
    }

    /// Bisection bracket: the admissible interval pulled in from its ends
    /// (the fixed-point iteration slows down at both edges).
    fn search_bracket(&self) -> (f64, f64) {
        let (lo, hi) = self.interval;
        if hi.is_finite() {
            let margin = 1e-3 * (hi - lo);
            (lo + margin, hi - margin)
        } else {
            (lo + 1e-3 * lo.max(1.0), f64::INFINITY)
        }
    }

    /// Largest penalty reachable inside the admissible interval; `None`
    /// when the interval is unbounded (`γ = 1`).
    pub fn lambda_max(&self) -> Result<Option<f64>> {
        let (_, hi) = self.search_bracket();
        if hi.is_finite() {
            Ok(Some(self.lambda_of_alpha(hi)?))
        } else {
            Ok(None)
        }
    }

    /// Inverts the calibration by bisection in `α` (tolerance 1e-4).
    pub fn alpha_of_lambda(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        let (mut lo, hi_edge) = self.search_bracket();
        let mut hi = if hi_edge.is_finite() {
            let lmax = self.lambda_of_alpha(hi_edge)?;
            if lambda == 0.0 && lmax <= 0.0 {
                // λ(α) ≡ 0 (τ* = 0 everywhere): any α works, report the edge
                return Ok(lo);
            }
            if lambda >= lmax {
                return Err(Error::LambdaOutOfRange { lambda, lambda_max: lmax });
            }
            hi_edge
        } else {
            // λ grows without bound in α when γ = 1
            let mut h = (2.0 * lo).max(1.0);
            let mut k = 0;
            while self.lambda_of_alpha(h)? <= lambda {
                h *= 2.0;
                k += 1;
                if k > 60 {
                    return Err(Error::LambdaOutOfRange { lambda, lambda_max: f64::INFINITY });
                }
            }
            h
        };
        // move the lower end toward α_min until it brackets the target
        let (amin, _) = self.interval;
        let mut margin = lo - amin;
        while self.lambda_of_alpha(lo)? >= lambda {
            margin *= 0.1;
            if margin < 1e-8 * amin.max(1.0) {
                return Ok(lo);
            }
            lo = amin + margin;
        }
        while hi - lo > 1e-4 {
            let mid = 0.5 * (lo + hi);
            if self.lambda_of_alpha(mid)? < lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Fixed point, calibration and the MSE/TPP/FDP predictions for `α`.
    pub fn predict(&self, alpha: f64) -> Result<SEOutcome> {
        let fp = self.fixed_point(alpha)?;
        let tau = fp.tau_star();
        let gamma = self.params.gamma;
        let delta = self.params.delta;
        let m = self.map(fp.tau_sq, alpha)?;
        let lambda = alpha * tau * (1.0 - m.mean_derivative.value / delta);
        let sigma_sq = self.params.prior.noise_var();
        let predicted_mse = (delta * (fp.tau_sq - sigma_sq)).max(0.0);

        let eps = self.params.prior.signal.nonzero_prob();
        let tpp_inf = closed_form_tpp(self.params.prior.signal.nonzero_part(), tau, gamma * alpha);
        let null_rate = 2.0 * (1.0 - eps) * normal_cdf(-gamma * alpha);
        let fdp_inf = fdp_ratio(null_rate, eps * tpp_inf);

        // Monte Carlo counterparts on the same draws
        let cut = gamma * alpha * tau;
        let (mut sig, mut sig_soft, mut sig_full) = (0usize, 0usize, 0usize);
        let (mut null_soft, mut null_full) = (0usize, 0usize);
        self.for_each_replicate(tau, alpha * tau, |pi, point, out, _, _| {
            for j in 0..pi.len() {
                let soft = libm::fabs(point[j]) > cut;
                let full = out[j] != 0.0;
                if pi[j] != 0.0 {
                    sig += 1;
                    sig_soft += soft as usize;
                    sig_full += full as usize;
                } else {
                    null_soft += soft as usize;
                    null_full += full as usize;
                }
            }
        });
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Ok(SEOutcome {
            alpha,
            tau_star: tau,
            lambda,
            predicted_mse,
            tpp_inf,
            fdp_inf,
            tpp_inf_mc: ratio(sig_soft, sig),
            fdp_inf_mc: ratio(null_soft, sig_soft + null_soft),
            tpp_full: ratio(sig_full, sig),
            fdp_full: ratio(null_full, sig_full + null_full),
            mean_derivative: m.mean_derivative.value,
            tau_schedule: fp.tau_schedule,
            converged: fp.converged,
            admissible: alpha >= self.interval.0 && alpha <= self.interval.1,
        })
    }
}

fn mean_and_err(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std_err = if xs.len() > 1 {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        libm::sqrt(var / n)
    } else {
        0.0
    };
    Estimate { value: mean, std_err }
}

/// `P(|Π* + τZ| > c·τ)` for the nonzero part `Π*` of the prior.
fn closed_form_tpp(nonzero: Signal, tau: f64, c: f64) -> f64 {
    match nonzero {
        Signal::PointMassMixture { value, .. } => {
            if tau == 0.0 {
                return if value != 0.0 { 1.0 } else { 0.0 };
            }
            normal_cdf((value - c * tau) / tau) + normal_cdf((-value - c * tau) / tau)
        }
        Signal::BernoulliGaussian { sd, .. } => {
            let s = libm::sqrt(sd * sd + tau * tau);
            if s == 0.0 {
                0.0
            } else {
                2.0 * normal_cdf(-c * tau / s)
            }
        }
        Signal::Zero => 0.0,
    }
}

/// False discoveries over all discoveries, with `0/0 = 0`. With no true
/// signals any discovery is false, which the ratio already gives.
fn fdp_ratio(false_rate: f64, true_rate: f64) -> f64 {
    let total = false_rate + true_rate;
    if total > 0.0 {
        false_rate / total
    } else {
        0.0
    }
}

pub fn se_map(tau_sq: f64, alpha: f64, params: &SEParams) -> Result<f64> {
    Ok(SEEngine::new(params)?.map(tau_sq, alpha)?.f.value)
}

pub fn se_fixed_point(alpha: f64, params: &SEParams) -> Result<FixedPoint> {
    SEEngine::new(params)?.fixed_point(alpha)
}

pub fn lambda_of_alpha(alpha: f64, params: &SEParams) -> Result<f64> {
    SEEngine::new(params)?.lambda_of_alpha(alpha)
}

pub fn alpha_of_lambda(lambda: f64, params: &SEParams) -> Result<f64> {
    SEEngine::new(params)?.alpha_of_lambda(lambda)
}

pub fn predict_metrics(alpha: f64, params: &SEParams) -> Result<SEOutcome> {
    SEEngine::new(params)?.predict(alpha)
}
