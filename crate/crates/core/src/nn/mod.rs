//! Minimal dense neural-network substrate.
//!
//! Everything is generic over [`Real`] so the same code runs in `f32` for
//! training and in `f64` when gradients are checked against finite
//! differences. Reductions (dot products, softmax normalizers) always
//! accumulate in `f64`.

mod adam;
mod layers;
mod matrix;
mod ops;
mod tape;

pub use adam::{adam_step, Adam, OptimizerState};
pub use layers::{attention_param_count, mlp_param_count, AttentionParams, DenseLayerParams, Mlp};
pub use matrix::Matrix;
pub use ops::{
    cosine_similarity, dense_forward, dropout, multihead_attention, relu, softmax,
    weighted_cross_entropy, Cosine, LOG_EPS,
};
pub use tape::{Gradients, Tape, Var};

use core::fmt::Debug;
use num_traits::Float;

/// Scalar type of a network: `f32` in production, `f64` for gradient checks.
pub trait Real: Float + Default + Debug + Send + Sync + 'static {
    fn cast(x: f64) -> Self;
    fn widen(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn cast(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn cast(x: f64) -> Self {
        x
    }
    #[inline]
    fn widen(self) -> f64 {
        self
    }
}

/// Whether dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

impl Mode {
    pub fn is_training(self) -> bool {
        matches!(self, Mode::Train)
    }
}
