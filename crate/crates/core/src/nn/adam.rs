use alloc::format;
use alloc::vec::Vec;

use super::{Matrix, Real};
use crate::{Error, Result};

/// Adam moment accumulators, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T = f32> {
    pub first_moment: Vec<Matrix<T>>,
    pub second_moment: Vec<Matrix<T>>,
    pub step: u64,
}

impl<T: Real> OptimizerState<T> {
    pub fn for_shapes<'p>(params: impl IntoIterator<Item = &'p Matrix<T>>) -> Self {
        let first_moment: Vec<Matrix<T>> =
            params.into_iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        OptimizerState { second_moment: first_moment.clone(), first_moment, step: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Result<Self> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::Parameter(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 })
    }

    /// One bias-corrected Adam update of every tensor in `params`.
    pub fn step<T: Real>(
        &self,
        params: &mut [&mut Matrix<T>],
        grads: &[Matrix<T>],
        state: &mut OptimizerState<T>,
    ) -> Result<()> {
        if params.len() != grads.len() || params.len() != state.first_moment.len() {
            return Err(Error::dim(
                "adam tensors",
                (params.len(), grads.len()),
                (state.first_moment.len(), state.second_moment.len()),
            ));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&state.first_moment) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::dim("adam parameter/gradient", p.shape(), g.shape()));
            }
        }
        state.step += 1;
        let t = state.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for (i, p) in params.iter_mut().enumerate() {
            let g = grads[i].as_slice();
            let m = state.first_moment[i].as_mut_slice();
            let v = state.second_moment[i].as_mut_slice();
            for (j, w) in p.as_mut_slice().iter_mut().enumerate() {
                let gj = g[j].widen();
                let mj = self.beta1 * m[j].widen() + (1.0 - self.beta1) * gj;
                let vj = self.beta2 * v[j].widen() + (1.0 - self.beta2) * gj * gj;
                m[j] = T::cast(mj);
                v[j] = T::cast(vj);
                let update = self.lr * (mj / c1) / (libm::sqrt(vj / c2) + self.eps);
                *w = T::cast(w.widen() - update);
            }
        }
        Ok(())
    }
}

/// Functional form of [`Adam::step`] with the standard constants.
pub fn adam_step<T: Real>(
    params: &mut [&mut Matrix<T>],
    grads: &[Matrix<T>],
    state: &mut OptimizerState<T>,
    lr: f64,
) -> Result<()> {
    Adam::new(lr)?.step(params, grads, state)
}
