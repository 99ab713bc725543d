use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm, LinearOperator};

pub const POWER_ITERATIONS: usize = 40;
const START_SEED: u64 = 0x5eed_cafe;
/// Ratio between the upper and lower end of the smoothing interval.
const SMOOTHING_RANGE: f64 = 8.0;
const SAFETY: f64 = 1.1;

/// Estimate of the spectrum of `diag⁻¹ op` from a fixed number of power
/// iterations started from a seeded random vector. Returns
/// `(λ_max / 8, λ_max)`.
pub fn estimate_eigen_range(op: &dyn LinearOperator, diag: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|e| *e /= nx);
    let mut ax = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        op.apply(&x, &mut ax);
        let xdx: f64 = x.iter().zip(diag).map(|(a, d)| a * a * d).sum();
        lambda = dot(&x, &ax) / xdx;
        for i in 0..n {
            x[i] = ax[i] / diag[i];
        }
        let nx = norm(&x);
        if nx == 0.0 || !nx.is_finite() {
            break;
        }
        x.iter_mut().for_each(|e| *e /= nx);
    }
    (lambda / SMOOTHING_RANGE, lambda)
}

/// Chebyshev iteration preconditioned by a diagonal, always started from a
/// zero initial guess.
#[derive(Clone, Debug)]
pub struct Chebyshev {
    pub diag_inv: Vec<f64>,
    pub lmin: f64,
    pub lmax: f64,
    pub order: usize,
}

impl Chebyshev {
    pub fn new(diag: &[f64], lmin: f64, lmax: f64, order: usize) -> Chebyshev {
        Chebyshev { diag_inv: diag.iter().map(|d| 1.0 / d).collect(), lmin, lmax, order: order.max(1) }
    }

    /// Smoother on `[λ/8, 1.1 λ]` with `λ` from [`estimate_eigen_range`].
    pub fn with_estimate(op: &dyn LinearOperator, diag: &[f64], order: usize) -> Chebyshev {
        let (_, lmax) = estimate_eigen_range(op, diag);
        let lmax = if lmax > 0.0 && lmax.is_finite() { lmax } else { 1.0 };
        Chebyshev::new(diag, SAFETY * lmax / SMOOTHING_RANGE, SAFETY * lmax, order)
    }

    /// Bound `1 / T_k(θ/δ)` on the error reduction for spectral components
    /// inside the interval.
    pub fn convergence_bound(&self) -> f64 {
        let theta = 0.5 * (self.lmax + self.lmin);
        let delta = 0.5 * (self.lmax - self.lmin);
        1.0 / (self.order as f64 * (theta / delta).acosh()).cosh()
    }

    pub fn apply(&self, op: &dyn LinearOperator, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        let theta = 0.5 * (self.lmax + self.lmin);
        let delta = 0.5 * (self.lmax - self.lmin);
        let mut d: Vec<f64> = (0..n).map(|i| self.diag_inv[i] * b[i] / theta).collect();
        x.copy_from_slice(&d);
        if delta <= 1e-14 * theta.abs() || self.order == 1 {
            return;
        }
        let sigma = theta / delta;
        let mut rho_old = 1.0 / sigma;
        let mut r = vec![0.0; n];
        for _ in 1..self.order {
            op.apply(x, &mut r);
            let rho = 1.0 / (2.0 * sigma - rho_old);
            let (c1, c2) = (rho * rho_old, 2.0 * rho / delta);
            for i in 0..n {
                d[i] = c1 * d[i] + c2 * self.diag_inv[i] * (b[i] - r[i]);
                x[i] += d[i];
            }
            rho_old = rho;
        }
    }
}
