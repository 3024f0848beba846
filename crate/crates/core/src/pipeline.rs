//! The two-stage classifier and its evaluation metrics.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{PairEmbeddings, StanceLabel};
use crate::model::{AnyModel, ModelKind};
use crate::nn::Real;
use crate::relatednet::RelatedNet;
use crate::train::{argmax, predict_proba_chunked};
use crate::{Error, Result};

/// Default stage-1 decision threshold on `P(related)`.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

const CHUNK: usize = 256;

/// Final label from the stage-1 probability and the stage-2 distribution.
/// `P(related) ≥ threshold` counts as related.
pub fn bait_decide<T: Real>(p_related: f64, stage2: &[T], threshold: f64) -> StanceLabel {
    if p_related < threshold {
        StanceLabel::Unrelated
    } else {
        StanceLabel::RELATED[argmax(stage2)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaitModel<T = f32> {
    pub relatednet: RelatedNet<T>,
    /// A TopKNet or AgreemNet.
    pub stage2: AnyModel<T>,
    pub threshold: f64,
}

impl<T: Real> BaitModel<T> {
    pub fn new(relatednet: RelatedNet<T>, stage2: AnyModel<T>) -> Result<Self> {
        if stage2.kind() == ModelKind::RelatedNet {
            return Err(Error::Contract("the second stage must be a TopKNet or AgreemNet".into()));
        }
        Ok(BaitModel { relatednet, stage2, threshold: DEFAULT_THRESHOLD })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Parameter(format!("threshold {threshold} outside [0, 1]")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    /// Stage 2 runs only on the pairs stage 1 passes through.
    pub fn predict(&self, pairs: &[PairEmbeddings<'_>]) -> Result<Vec<StanceLabel>> {
        let p_related = self.relatednet.prob_related_chunked(pairs, CHUNK)?;
        let gated: Vec<usize> = (0..pairs.len()).filter(|&i| p_related[i] >= self.threshold).collect();
        let subset: Vec<PairEmbeddings<'_>> = gated.iter().map(|&i| pairs[i]).collect();
        let probs = predict_proba_chunked(&self.stage2, &subset, CHUNK)?;
        let mut out = alloc::vec![StanceLabel::Unrelated; pairs.len()];
        for (row, &i) in gated.iter().enumerate() {
            out[i] = bait_decide(p_related[i], probs.row(row), self.threshold);
        }
        Ok(out)
    }
}

fn check_lengths(pred: &[StanceLabel], gold: &[StanceLabel]) -> Result<()> {
    if gold.is_empty() {
        return Err(Error::Parameter("evaluation over zero samples".into()));
    }
    if pred.len() != gold.len() {
        return Err(Error::Contract(format!("{} predictions for {} gold labels", pred.len(), gold.len())));
    }
    Ok(())
}

/// Counts indexed `[gold][predicted]` in canonical class order.
pub fn confusion_matrix(pred: &[StanceLabel], gold: &[StanceLabel]) -> Result<[[usize; 4]; 4]> {
    check_lengths(pred, gold)?;
    let mut m = [[0usize; 4]; 4];
    for (p, g) in pred.iter().zip(gold) {
        m[g.index()][p.index()] += 1;
    }
    Ok(m)
}

/// Weighted challenge score as a percentage of the best attainable: 0.25
/// for getting relatedness right, 0.75 more for the exact related stance.
pub fn fnc_score(pred: &[StanceLabel], gold: &[StanceLabel]) -> Result<f64> {
    check_lengths(pred, gold)?;
    let (mut points, mut max) = (0.0, 0.0);
    for (p, g) in pred.iter().zip(gold) {
        max += if g.is_related() { 1.0 } else { 0.25 };
        if p.is_related() == g.is_related() {
            points += 0.25;
            if g.is_related() && p == g {
                points += 0.75;
            }
        }
    }
    Ok(100.0 * points / max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Recall per gold class; `None` when the class does not occur.
    pub per_class_accuracy: [Option<f64>; 4],
    pub overall_accuracy: f64,
    /// Percent of the maximum attainable score.
    pub fnc_score: f64,
    pub confusion_matrix: [[usize; 4]; 4],
}

pub fn evaluate(pred: &[StanceLabel], gold: &[StanceLabel]) -> Result<EvaluationReport> {
    let confusion_matrix = confusion_matrix(pred, gold)?;
    let mut per_class_accuracy = [None; 4];
    let mut correct = 0;
    for (c, row) in confusion_matrix.iter().enumerate() {
        let total: usize = row.iter().sum();
        correct += row[c];
        if total > 0 {
            per_class_accuracy[c] = Some(row[c] as f64 / total as f64);
        }
    }
    Ok(EvaluationReport {
        per_class_accuracy,
        overall_accuracy: correct as f64 / gold.len() as f64,
        fnc_score: fnc_score(pred, gold)?,
        confusion_matrix,
    })
}
