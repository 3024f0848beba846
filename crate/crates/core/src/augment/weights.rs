use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `w_c = N / (C · n_c)`, the "balanced" heuristic. Every count must be
/// positive.
pub fn balanced_class_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::Parameter(format!("balanced weights need positive counts, got {counts:?}")));
    }
    let total: usize = counts.iter().sum();
    let c = counts.len() as f64;
    Ok(counts.iter().map(|&n| total as f64 / (c * n as f64)).collect())
}
