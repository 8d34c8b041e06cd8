use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;

/// Distribution family of the design matrix. Every family is scaled so that
/// entries have mean zero and variance `1/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignKind {
    GaussianIid,
    /// Entries `±1/√n` with equal probability.
    BernoulliPm1,
    /// Entries `(E − 1)/√n` with `E ~ Exp(1)`: density `√n·e^(−√n·x−1)` on `x ≥ −1/√n`.
    ShiftedExponential,
    /// `U·diag(s)·Vᵀ` with Haar `U`, `V` and geometrically spaced singular
    /// values spanning `condition_number`, scaled to `‖X‖_F² = p`.
    RotInvariant { condition_number: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub p: usize,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(invalid("n/p", "dimensions must be positive"));
        }
        if let DesignKind::RotInvariant { condition_number } = kind {
            if !(condition_number.is_finite() && condition_number >= 1.0) {
                return Err(invalid("condition_number", "must be finite and >= 1"));
            }
        }
        Ok(Self { kind, n, p })
    }

    /// `δ = n/p`.
    pub fn delta(&self) -> f64 {
        self.n as f64 / self.p as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        let (n, p) = (self.n, self.p);
        let scale = 1.0 / libm::sqrt(n as f64);
        match self.kind {
            DesignKind::GaussianIid => Matrix::from_fn(n, p, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                z * scale
            }),
            DesignKind::BernoulliPm1 => Matrix::from_fn(n, p, |_, _| {
                if rng.random::<bool>() {
                    scale
                } else {
                    -scale
                }
            }),
            DesignKind::ShiftedExponential => Matrix::from_fn(n, p, |_, _| {
                // inverse CDF of Exp(1); 1 - u lies in (0, 1]
                let u: f64 = rng.random();
                let e = -libm::log(1.0 - u);
                (e - 1.0) * scale
            }),
            DesignKind::RotInvariant { condition_number } => {
                rot_invariant(n, p, condition_number, rng)
            }
        }
    }
}

/// `r` columns of a Haar-distributed orthogonal matrix of order `m`.
fn haar_columns<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, r, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    // sign correction makes the distribution exactly Haar
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn rot_invariant<R: Rng + ?Sized>(n: usize, p: usize, kappa: f64, rng: &mut R) -> Matrix {
    let r = n.min(p);
    let u = haar_columns(n, r, rng);
    let v = haar_columns(p, r, rng);
    let mut s: Vec<f64> = (0..r)
        .map(|i| {
            let t = if r > 1 { i as f64 / (r - 1) as f64 } else { 0.0 };
            libm::pow(kappa, t)
        })
        .collect();
    let fro: f64 = s.iter().map(|x| x * x).sum();
    let c = libm::sqrt(p as f64 / fro);
    s.iter_mut().for_each(|x| *x *= c);
    Matrix::from_fn(n, p, |i, j| (0..r).map(|k| u[(i, k)] * s[k] * v[(j, k)]).sum())
}
