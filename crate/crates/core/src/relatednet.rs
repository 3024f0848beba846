//! Stage 1: related vs unrelated from SIM embeddings.
//!
//! The classifier input is the SIM headline embedding followed by the `k`
//! body sentences most cosine-similar to it, in descending similarity order.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{PaddedBody, PairEmbeddings, SIM_DIM};
use crate::model::{register, Classifier, Forward};
use crate::nn::{cosine_similarity, mlp_param_count, Matrix, Mlp, Mode, Real, Tape};
use crate::{Error, Result};

/// Class index of "unrelated" in the RelatedNet output.
pub const UNRELATED: usize = 0;
/// Class index of "related" in the RelatedNet output.
pub const RELATED: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelatedNetConfig {
    pub k: usize,
    /// Width of the first three hidden layers.
    pub hidden_a: usize,
    /// Width of the last hidden layer.
    pub hidden_b: usize,
    pub dropout_p: f64,
    pub sim_dim: usize,
}

impl Default for RelatedNetConfig {
    fn default() -> Self {
        RelatedNetConfig { k: 4, hidden_a: 600, hidden_b: 600, dropout_p: 0.277, sim_dim: SIM_DIM }
    }
}

impl RelatedNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.hidden_a == 0 || self.hidden_b == 0 || self.sim_dim == 0 {
            return Err(Error::Parameter(format!("invalid RelatedNet config {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Parameter(format!("dropout {} outside [0, 1)", self.dropout_p)));
        }
        Ok(())
    }

    pub fn widths(&self) -> [usize; 6] {
        let (a, b) = (self.hidden_a, self.hidden_b);
        [(self.k + 1) * self.sim_dim, a, a, a, b, 2]
    }

    pub fn parameter_count(&self) -> usize {
        mlp_param_count(&self.widths())
    }
}

/// Body sentences ranked by similarity to a headline.
#[derive(Debug, Clone, PartialEq)]
pub struct TopK {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Indices of the `k` real body rows most similar to `head`, descending,
/// ties to the lower index. Bodies with fewer than `k` real rows repeat the
/// last selected index so the result always has length `k`. Zero-norm rows
/// rank after every other row.
pub fn top_k_similar(head: &[f32], body: &PaddedBody, k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if head.len() != body.dim() {
        return Err(Error::dim("headline vs body width", (1, head.len()), body.matrix().shape()));
    }
    let mut ranked: Vec<(usize, f64, bool)> = Vec::with_capacity(body.real_len());
    for (i, &real) in body.mask().iter().enumerate() {
        if real {
            let c = cosine_similarity(head, body.row(i))?;
            ranked.push((i, c.value, c.degenerate));
        }
    }
    if ranked.is_empty() {
        return Err(Error::Degenerate("body has no real sentences".into()));
    }
    ranked.sort_by(|a, b| a.2.cmp(&b.2).then(b.1.total_cmp(&a.1)).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    let (mut indices, mut scores): (Vec<usize>, Vec<f64>) = ranked.iter().map(|r| (r.0, r.1)).unzip();
    while indices.len() < k {
        indices.push(indices[indices.len() - 1]);
        scores.push(scores[scores.len() - 1]);
    }
    Ok(TopK { indices, scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelatedNet<T = f32> {
    pub config: RelatedNetConfig,
    pub mlp: Mlp<T>,
}

impl<T: Real> RelatedNet<T> {
    pub fn init<R: Rng + ?Sized>(config: RelatedNetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(RelatedNet { config, mlp: Mlp::init(&config.widths(), rng)? })
    }

    pub fn from_parts(config: RelatedNetConfig, mlp: Mlp<T>) -> Result<Self> {
        config.validate()?;
        mlp.validate()?;
        if mlp.widths() != config.widths() {
            return Err(Error::Parameter(format!(
                "MLP widths {:?} do not match config widths {:?}",
                mlp.widths(),
                config.widths()
            )));
        }
        Ok(RelatedNet { config, mlp })
    }

    fn input_matrix(&self, batch: &[PairEmbeddings<'_>]) -> Result<Matrix<T>> {
        let d = self.config.sim_dim;
        let width = (self.config.k + 1) * d;
        let mut data = Vec::with_capacity(batch.len() * width);
        for pair in batch {
            if pair.sim_head.len() != d {
                return Err(Error::dim("SIM headline", (1, pair.sim_head.len()), (1, d)));
            }
            let top = top_k_similar(pair.sim_head, pair.sim_body, self.config.k)?;
            data.extend(pair.sim_head.iter().map(|&v| T::cast(v as f64)));
            for &i in &top.indices {
                data.extend(pair.sim_body.row(i).iter().map(|&v| T::cast(v as f64)));
            }
        }
        Ok(Matrix::from_raw(batch.len(), width, data))
    }

    /// `P(related)` for every pair, dropout off.
    pub fn prob_related(&self, batch: &[PairEmbeddings<'_>]) -> Result<Vec<f64>> {
        let probs = self.predict_proba(batch)?;
        Ok((0..probs.rows()).map(|r| probs.get(r, RELATED).widen()).collect())
    }

    /// [`Self::prob_related`] over `chunk` pairs at a time.
    pub fn prob_related_chunked(&self, pairs: &[PairEmbeddings<'_>], chunk: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(pairs.len());
        for part in pairs.chunks(chunk.max(1)) {
            out.extend(self.prob_related(part)?);
        }
        Ok(out)
    }
}

impl<T: Real> Classifier<T> for RelatedNet<T> {
    fn num_classes(&self) -> usize {
        2
    }

    fn tensors(&self) -> Vec<&Matrix<T>> {
        self.mlp.tensors().collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        self.mlp.tensors_mut().collect()
    }

    fn forward<'t, R: Rng + ?Sized>(
        &'t self,
        tape: &mut Tape<'t, T>,
        batch: &[PairEmbeddings<'_>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        let params = register(tape, self.tensors());
        let input = tape.constant(self.input_matrix(batch)?);
        let logits = self.mlp.forward_tape(tape, &params, input, self.config.dropout_p, mode, rng)?;
        Ok(Forward { probs: tape.softmax_rows(logits), params })
    }
}

/// Decision threshold on the mean top-`k` similarity and the F1 of the
/// "related" class it achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBaseline {
    pub threshold: f64,
    pub f1: f64,
}

/// Mean cosine similarity between the headline and its `min(k, n)` most
/// similar body sentences.
pub fn mean_top_k_similarity(head: &[f32], body: &PaddedBody, k: usize) -> Result<f64> {
    let top = top_k_similar(head, body, k)?;
    let n = k.min(body.real_len());
    Ok(top.scores[..n].iter().sum::<f64>() / n as f64)
}

/// Training-free stage-1 baseline: scores every pair by its mean top-`k`
/// similarity and picks the threshold (predict related when `score ≥ t`)
/// that maximizes related-class F1.
pub fn threshold_baseline<'a>(
    pairs: impl IntoIterator<Item = (&'a [f32], &'a PaddedBody, bool)>,
    k: usize,
) -> Result<ThresholdBaseline> {
    let mut scores = Vec::new();
    let mut related = Vec::new();
    for (head, body, rel) in pairs {
        scores.push(mean_top_k_similarity(head, body, k)?);
        related.push(rel);
    }
    best_f1_threshold(&scores, &related)
}

/// Sweeps every observed score as a threshold. Ties in F1 keep the higher
/// threshold.
pub fn best_f1_threshold(scores: &[f64], related: &[bool]) -> Result<ThresholdBaseline> {
    if scores.is_empty() {
        return Err(Error::Parameter("threshold sweep over an empty dataset".into()));
    }
    if scores.len() != related.len() {
        return Err(Error::dim("scores vs labels", (scores.len(), 1), (related.len(), 1)));
    }
    let positives = related.iter().filter(|&&r| r).count();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = ThresholdBaseline { threshold: scores[order[0]], f1: -1.0 };
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if related[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let fn_ = positives - tp;
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        if f1 > best.f1 {
            best = ThresholdBaseline { threshold: t, f1 };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::pad_truncate_body;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn padded(rows: &[&[f32]]) -> PaddedBody {
        pad_truncate_body(&Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn default_parameter_count() {
        let c = RelatedNetConfig::default();
        assert_eq!(c.parameter_count(), 2_235_602);
        assert_eq!(c.parameter_count(), 1920 * 600 + 600 + 3 * (600 * 600 + 600) + 600 * 2 + 2);
    }

    #[test]
    fn top_k_with_repetition_and_ties() {
        let head = [1.0f32, 0.0];
        let body = padded(&[&[0.0, 1.0], &[1.0, 0.1], &[1.0, 1.0]]);
        let top = top_k_similar(&head, &body, 5).unwrap();
        assert_eq!(top.indices, vec![1, 2, 0, 0, 0]);
        let same = padded(&[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0], &[4.0, 0.0]]);
        assert_eq!(top_k_similar(&head, &same, 3).unwrap().indices, vec![0, 1, 2]);
    }

    #[test]
    fn zero_norm_rows_rank_last() {
        let head = [1.0f32, 0.0];
        let body = padded(&[&[0.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(top_k_similar(&head, &body, 2).unwrap().indices, vec![1, 0]);
    }

    #[test]
    fn threshold_sweep_cases() {
        let scores = [0.9, 0.9, 0.1, 0.1];
        let rel = [true, true, false, false];
        let b = best_f1_threshold(&scores, &rel).unwrap();
        assert_eq!(b.f1, 1.0);
        assert_eq!(b.threshold, 0.9);
        // Identical scores: the only threshold predicts everything related.
        let b = best_f1_threshold(&[0.4; 5], &[true, false, true, false, false]).unwrap();
        let (p, r) = (2.0 / 5.0, 1.0);
        assert!((b.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
        assert!(best_f1_threshold(&[], &[]).is_err());
    }

    #[test]
    fn forward_is_a_distribution_and_ignores_padding() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = RelatedNetConfig { k: 2, hidden_a: 6, hidden_b: 4, dropout_p: 0.2, sim_dim: 3 };
        let net = RelatedNet::<f64>::init(config, &mut rng).unwrap();
        let head = [0.2f32, -0.5, 0.9];
        let mut body = padded(&[&[0.1, 0.2, 0.3], &[-0.3, 0.2, 0.8], &[0.5, 0.5, -0.1]]);
        let pair = PairEmbeddings { sim_head: &head, nli_head: &head, sim_body: &body, nli_body: &body };
        let probs = net.predict_proba(&[pair]).unwrap();
        let p = probs.row(0);
        assert!(p[1] > 0.0 && p[1] < 1.0);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-6);
        let before = net.prob_related(&[pair]).unwrap();
        for i in 3..50 {
            body.padded_row_mut(i).unwrap().copy_from_slice(&[9.0, -7.0, 3.0]);
        }
        let pair = PairEmbeddings { sim_head: &head, nli_head: &head, sim_body: &body, nli_body: &body };
        assert_eq!(net.prob_related(&[pair]).unwrap(), before);
    }
}
