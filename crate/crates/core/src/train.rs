//! Minibatch Adam training with validation-based model selection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{PairEmbeddings, StanceLabel};
use crate::model::{Classifier, ModelKind};
use crate::nn::{Adam, Matrix, Mode, OptimizerState, Real, Tape};
use crate::relatednet::{RelatedNet, RELATED, UNRELATED};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
    /// Per-class loss weights; `None` is the plain mean cross-entropy.
    pub class_weights: Option<Vec<f64>>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { learning_rate: 1e-3, batch_size: 64, epochs: 20, patience: Some(5), class_weights: None }
    }
}

impl TrainingConfig {
    /// Tuned batch size and learning rate of each model.
    pub fn for_kind(kind: ModelKind) -> Self {
        let (batch_size, learning_rate) = match kind {
            ModelKind::RelatedNet => (32, 1e-4),
            ModelKind::TopKNet => (64, 1e-3),
            ModelKind::AgreemNet => (128, 1e-3),
        };
        TrainingConfig { batch_size, learning_rate, ..TrainingConfig::default() }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Parameter("batch size and epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if let Some(w) = &self.class_weights {
            if w.len() != num_classes || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Parameter(format!("class weights {w:?} for {num_classes} classes")));
            }
        }
        Ok(())
    }
}

/// A pair with its class index in the model's output space.
#[derive(Debug, Clone, Copy)]
pub struct LabeledPair<'a> {
    pub pair: PairEmbeddings<'a>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// Mean recall over the classes present in the validation split.
    pub val_uaca: f64,
    /// Recall per class; `None` when the class is absent from validation.
    pub val_recall: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct TrainReport<M> {
    /// Parameters from the epoch with the best validation score.
    pub model: M,
    pub best_epoch: usize,
    pub best_val_uaca: f64,
    pub epochs: Vec<EpochMetrics>,
}

/// Recall per class over `gold`, `None` for classes that never occur.
pub fn class_recall(pred: &[usize], gold: &[usize], num_classes: usize) -> Vec<Option<f64>> {
    let mut hits = vec![0usize; num_classes];
    let mut totals = vec![0usize; num_classes];
    for (&p, &g) in pred.iter().zip(gold) {
        totals[g] += 1;
        if p == g {
            hits[g] += 1;
        }
    }
    hits.iter().zip(&totals).map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64)).collect()
}

/// Unweighted average class accuracy: the mean of the present classes'
/// recalls.
pub fn unweighted_average_class_accuracy(pred: &[usize], gold: &[usize], num_classes: usize) -> Result<f64> {
    if pred.len() != gold.len() || gold.is_empty() {
        return Err(Error::Contract(format!("{} predictions for {} labels", pred.len(), gold.len())));
    }
    if let Some(&bad) = gold.iter().chain(pred).find(|&&c| c >= num_classes) {
        return Err(Error::Index { index: bad, len: num_classes });
    }
    let present: Vec<f64> = class_recall(pred, gold, num_classes).into_iter().flatten().collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Eval-mode probabilities computed `chunk` pairs at a time.
pub fn predict_proba_chunked<T: Real, M: Classifier<T>>(
    model: &M,
    pairs: &[PairEmbeddings<'_>],
    chunk: usize,
) -> Result<Matrix<T>> {
    let c = model.num_classes();
    let mut data = Vec::with_capacity(pairs.len() * c);
    for part in pairs.chunks(chunk.max(1)) {
        data.extend_from_slice(model.predict_proba(part)?.as_slice());
    }
    Ok(Matrix::from_raw(pairs.len(), c, data))
}

const EVAL_CHUNK: usize = 256;

fn evaluate_split<T: Real, M: Classifier<T>>(
    model: &M,
    data: &[LabeledPair<'_>],
    weights: &[f64],
) -> Result<(f64, Vec<usize>)> {
    let pairs: Vec<PairEmbeddings<'_>> = data.iter().map(|d| d.pair).collect();
    let probs = predict_proba_chunked(model, &pairs, EVAL_CHUNK)?;
    let mut loss = 0.0;
    let mut pred = Vec::with_capacity(data.len());
    for (r, d) in data.iter().enumerate() {
        loss += crate::nn::weighted_cross_entropy(probs.row(r), d.label, weights)?;
        pred.push(argmax(probs.row(r)));
    }
    Ok((loss / data.len() as f64, pred))
}

/// Trains `model` in place of a copy and returns the best-validation copy.
/// Shuffling and dropout draw from one generator seeded with `seed`.
pub fn fit<T: Real, M: Classifier<T>>(
    model: M,
    train: &[LabeledPair<'_>],
    val: &[LabeledPair<'_>],
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainReport<M>> {
    let c = model.num_classes();
    config.validate(c)?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Parameter(format!(
            "training needs nonempty splits (train {}, validation {})",
            train.len(),
            val.len()
        )));
    }
    if let Some(bad) = train.iter().chain(val).find(|d| d.label >= c) {
        return Err(Error::Index { index: bad.label, len: c });
    }
    let weights = config.class_weights.clone().unwrap_or_else(|| vec![1.0; c]);
    let adam = Adam::new(config.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = model;
    let mut state = OptimizerState::for_shapes(model.tensors());
    let gold: Vec<usize> = val.iter().map(|d| d.label).collect();

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, M)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<PairEmbeddings<'_>> = idx.iter().map(|&i| train[i].pair).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| train[i].label).collect();
            let grads = {
                let mut tape = Tape::new();
                let fwd = model.forward(&mut tape, &batch, Mode::Train, &mut rng)?;
                let loss = tape.weighted_nll(fwd.probs, &labels, &weights)?;
                let value = tape.value(loss).get(0, 0).widen();
                if !value.is_finite() {
                    return Err(Error::Numerical(format!("non-finite loss in epoch {epoch}")));
                }
                loss_sum += value * idx.len() as f64;
                let mut g = tape.backward(loss)?;
                let shapes: Vec<(usize, usize)> = model.tensors().iter().map(|t| t.shape()).collect();
                fwd.params.iter().zip(shapes).map(|(&v, s)| g.take_or_zero(v, s)).collect::<Vec<_>>()
            };
            adam.step(&mut model.tensors_mut(), &grads, &mut state)?;
        }

        let (val_loss, pred) = evaluate_split(&model, val, &weights)?;
        let val_recall = class_recall(&pred, &gold, c);
        let val_uaca = unweighted_average_class_accuracy(&pred, &gold, c)?;
        let correct = pred.iter().zip(&gold).filter(|(p, g)| p == g).count();
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_accuracy: correct as f64 / gold.len() as f64,
            val_uaca,
            val_recall,
        };
        log::info!(
            "epoch {epoch}: train loss {:.4}, val loss {:.4}, val uaca {:.4}",
            metrics.train_loss,
            metrics.val_loss,
            metrics.val_uaca
        );
        epochs.push(metrics);

        if best.as_ref().map_or(true, |b| val_uaca > b.1) {
            best = Some((epoch, val_uaca, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if config.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    let (best_epoch, best_val_uaca, model) = best.expect("at least one epoch ran");
    Ok(TrainReport { model, best_epoch, best_val_uaca, epochs })
}

/// A pair with its four-way gold stance.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub pair: PairEmbeddings<'a>,
    pub stance: StanceLabel,
}

/// Related (1) vs unrelated (0) targets for stage 1.
pub fn relatedness_targets<'a>(examples: &[Example<'a>]) -> Vec<LabeledPair<'a>> {
    examples
        .iter()
        .map(|e| LabeledPair { pair: e.pair, label: if e.stance.is_related() { RELATED } else { UNRELATED } })
        .collect()
}

/// AGR/DSG/DSC targets for stage 2; any UNR example is a contract error.
pub fn stance_targets<'a>(examples: &[Example<'a>]) -> Result<Vec<LabeledPair<'a>>> {
    examples
        .iter()
        .map(|e| match e.stance.stage2_index() {
            Some(label) => Ok(LabeledPair { pair: e.pair, label }),
            None => Err(Error::Contract("stage-2 training received an unrelated sample".into())),
        })
        .collect()
}

pub fn train_relatednet<T: Real>(
    model: RelatedNet<T>,
    train: &[Example<'_>],
    val: &[Example<'_>],
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainReport<RelatedNet<T>>> {
    fit(model, &relatedness_targets(train), &relatedness_targets(val), config, seed)
}

/// Trains a TopKNet or AgreemNet on related samples only.
pub fn train_stage2<T: Real, M: Classifier<T>>(
    model: M,
    train: &[Example<'_>],
    val: &[Example<'_>],
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainReport<M>> {
    if model.num_classes() != 3 {
        return Err(Error::Contract("stage-2 model must have three classes".into()));
    }
    fit(model, &stance_targets(train)?, &stance_targets(val)?, config, seed)
}
