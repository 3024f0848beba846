//! Gaussian-process regression with a Matérn 5/2 kernel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyper {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

const LENGTH_SCALES: [f64; 7] = [0.05, 0.1, 0.2, 0.35, 0.5, 1.0, 2.0];
const SIGNAL_FACTORS: [f64; 4] = [0.25, 1.0, 4.0, 16.0];
const NOISE_FRACTIONS: [f64; 4] = [1e-6, 1e-4, 1e-2, 1e-1];

#[derive(Debug, Clone)]
pub struct GpState {
    pub hyper: GpHyper,
    points: Vec<Vec<f64>>,
    /// Prior mean: the mean of the observed objectives.
    pub mean: f64,
    /// Lower-triangular Cholesky factor of `K + σ²I`, row-major.
    chol: Vec<f64>,
    /// `(K + σ²I)⁻¹ (y − mean)`
    alpha: Vec<f64>,
    /// Log marginal likelihood of the centred observations.
    pub log_marginal_likelihood: f64,
}

fn matern52(a: &[f64], b: &[f64], h: &GpHyper) -> f64 {
    let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let s = libm::sqrt(5.0 * r2) / h.length_scale;
    h.signal_variance * (1.0 + s + s * s / 3.0) * libm::exp(-s)
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i * n + i] = libm::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
fn backward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

impl GpState {
    /// Fits with fixed kernel hyperparameters. Jitter is added to the
    /// diagonal, growing tenfold, until the Cholesky factorization succeeds.
    pub fn fit_with(points: &[Vec<f64>], y: &[f64], hyper: GpHyper) -> Result<Self> {
        let n = points.len();
        if n == 0 || n != y.len() {
            return Err(Error::Parameter(format!("GP fit with {n} points and {} objectives", y.len())));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Parameter("GP points differ in dimension".into()));
        }
        if !(hyper.noise_variance > 0.0 && hyper.signal_variance > 0.0 && hyper.length_scale > 0.0) {
            return Err(Error::Parameter(format!("invalid GP hyperparameters {hyper:?}")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite GP objective".into()));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = matern52(&points[i], &points[j], &hyper);
            }
            k[i * n + i] += hyper.noise_variance;
        }
        let mut jitter = 0.0;
        let chol = loop {
            let mut kj = k.clone();
            for i in 0..n {
                kj[i * n + i] += jitter;
            }
            if let Some(l) = cholesky(&kj, n) {
                break l;
            }
            jitter = if jitter == 0.0 { 1e-10 * hyper.signal_variance } else { jitter * 10.0 };
            if jitter > 1e-2 * hyper.signal_variance {
                return Err(Error::Numerical("GP kernel matrix is not positive definite".into()));
            }
        };
        let centred: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let mut alpha = centred.clone();
        forward_solve(&chol, n, &mut alpha);
        let quad: f64 = alpha.iter().map(|a| a * a).sum();
        backward_solve(&chol, n, &mut alpha);
        let log_det: f64 = (0..n).map(|i| libm::log(chol[i * n + i])).sum::<f64>() * 2.0;
        let lml = -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * libm::log(2.0 * core::f64::consts::PI);
        Ok(GpState { hyper, points: points.to_vec(), mean, chol, alpha, log_marginal_likelihood: lml })
    }

    /// Picks length-scale, signal variance and noise variance from a small
    /// grid by log marginal likelihood.
    pub fn fit(points: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = y.len().max(1) as f64;
        let m = y.iter().sum::<f64>() / n;
        let var = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).max(1e-6);
        let mut best: Option<GpState> = None;
        for &length_scale in &LENGTH_SCALES {
            for &f in &SIGNAL_FACTORS {
                for &noise in &NOISE_FRACTIONS {
                    let signal_variance = f * var;
                    let hyper = GpHyper { length_scale, signal_variance, noise_variance: noise * signal_variance };
                    let Ok(state) = GpState::fit_with(points, y, hyper) else { continue };
                    if best.as_ref().is_none_or(|b| state.log_marginal_likelihood > b.log_marginal_likelihood) {
                        best = Some(state);
                    }
                }
            }
        }
        best.ok_or_else(|| Error::Numerical("no GP hyperparameters gave a positive-definite kernel".into()))
    }

    /// Predictive mean and latent-function variance (clamped at zero).
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        let n = self.points.len();
        if x.len() != self.points[0].len() {
            return Err(Error::dim("GP query", (1, x.len()), (n, self.points[0].len())));
        }
        let mut k: Vec<f64> = self.points.iter().map(|p| matern52(p, x, &self.hyper)).collect();
        let mean = self.mean + k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        forward_solve(&self.chol, n, &mut k);
        let var = self.hyper.signal_variance - k.iter().map(|v| v * v).sum::<f64>();
        Ok((mean, var.max(0.0)))
    }
}
