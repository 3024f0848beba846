//! What the three classifiers share: the training-facing trait, the model
//! kind/config enums and closed-form parameter accounting.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::PairEmbeddings;
use crate::nn::{Matrix, Mode, Real, Tape, Var};
use crate::relatednet::{RelatedNet, RelatedNetConfig};
use crate::stage2::{AgreemNet, AgreemNetConfig, TopKNet, TopKNetConfig};
use crate::Result;

/// Output of a recorded forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `n × classes` softmax probabilities.
    pub probs: Var,
    /// Tape variables of [`Classifier::tensors`], in the same order.
    pub params: Vec<Var>,
}

/// A softmax classifier over pair embeddings.
pub trait Classifier<T: Real>: Clone {
    fn num_classes(&self) -> usize;

    /// Trainable tensors in declaration order.
    fn tensors(&self) -> Vec<&Matrix<T>>;

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>>;

    fn forward<'t, R: Rng + ?Sized>(
        &'t self,
        tape: &mut Tape<'t, T>,
        batch: &[PairEmbeddings<'_>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Inference-mode class probabilities, one row per pair.
    fn predict_proba(&self, batch: &[PairEmbeddings<'_>]) -> Result<Matrix<T>> {
        let mut tape = Tape::new();
        // Dropout is inactive in eval mode, so this generator is never drawn.
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let fwd = self.forward(&mut tape, batch, Mode::Eval, &mut rng)?;
        Ok(tape.value(fwd.probs).clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    RelatedNet,
    TopKNet,
    AgreemNet,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RelatedNet => "relatednet",
            ModelKind::TopKNet => "topknet",
            ModelKind::AgreemNet => "agreemnet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relatednet" => Some(ModelKind::RelatedNet),
            "topknet" => Some(ModelKind::TopKNet),
            "agreemnet" => Some(ModelKind::AgreemNet),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelConfig {
    RelatedNet(RelatedNetConfig),
    TopKNet(TopKNetConfig),
    AgreemNet(AgreemNetConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::RelatedNet => ModelConfig::RelatedNet(RelatedNetConfig::default()),
            ModelKind::TopKNet => ModelConfig::TopKNet(TopKNetConfig::default()),
            ModelKind::AgreemNet => ModelConfig::AgreemNet(AgreemNetConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::RelatedNet(_) => ModelKind::RelatedNet,
            ModelConfig::TopKNet(_) => ModelKind::TopKNet,
            ModelConfig::AgreemNet(_) => ModelKind::AgreemNet,
        }
    }

    pub fn dropout_p(&self) -> f64 {
        match self {
            ModelConfig::RelatedNet(c) => c.dropout_p,
            ModelConfig::TopKNet(c) => c.dropout_p,
            ModelConfig::AgreemNet(c) => c.dropout_p,
        }
    }

    /// Closed-form count of weights, biases and attention projections.
    pub fn parameter_count(&self) -> usize {
        match self {
            ModelConfig::RelatedNet(c) => c.parameter_count(),
            ModelConfig::TopKNet(c) => c.parameter_count(),
            ModelConfig::AgreemNet(c) => c.parameter_count(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::RelatedNet(c) => c.validate(),
            ModelConfig::TopKNet(c) => c.validate(),
            ModelConfig::AgreemNet(c) => c.validate(),
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AnyModel> {
        Ok(match self {
            ModelConfig::RelatedNet(c) => AnyModel::RelatedNet(RelatedNet::init(*c, rng)?),
            ModelConfig::TopKNet(c) => AnyModel::TopKNet(TopKNet::init(*c, rng)?),
            ModelConfig::AgreemNet(c) => AnyModel::AgreemNet(AgreemNet::init(*c, rng)?),
        })
    }
}

/// Any of the three classifiers.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<T = f32> {
    RelatedNet(RelatedNet<T>),
    TopKNet(TopKNet<T>),
    AgreemNet(AgreemNet<T>),
}

impl<T: Real> AnyModel<T> {
    pub fn config(&self) -> ModelConfig {
        match self {
            AnyModel::RelatedNet(m) => ModelConfig::RelatedNet(m.config),
            AnyModel::TopKNet(m) => ModelConfig::TopKNet(m.config),
            AnyModel::AgreemNet(m) => ModelConfig::AgreemNet(m.config),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.config().kind()
    }
}

impl<T: Real> Classifier<T> for AnyModel<T> {
    fn num_classes(&self) -> usize {
        match self {
            AnyModel::RelatedNet(m) => m.num_classes(),
            AnyModel::TopKNet(m) => m.num_classes(),
            AnyModel::AgreemNet(m) => m.num_classes(),
        }
    }

    fn tensors(&self) -> Vec<&Matrix<T>> {
        match self {
            AnyModel::RelatedNet(m) => m.tensors(),
            AnyModel::TopKNet(m) => m.tensors(),
            AnyModel::AgreemNet(m) => m.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        match self {
            AnyModel::RelatedNet(m) => m.tensors_mut(),
            AnyModel::TopKNet(m) => m.tensors_mut(),
            AnyModel::AgreemNet(m) => m.tensors_mut(),
        }
    }

    fn forward<'t, R: Rng + ?Sized>(
        &'t self,
        tape: &mut Tape<'t, T>,
        batch: &[PairEmbeddings<'_>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        match self {
            AnyModel::RelatedNet(m) => m.forward(tape, batch, mode, rng),
            AnyModel::TopKNet(m) => m.forward(tape, batch, mode, rng),
            AnyModel::AgreemNet(m) => m.forward(tape, batch, mode, rng),
        }
    }
}

/// Registers every tensor of a model on the tape, in order.
pub(crate) fn register<'t, T: Real>(tape: &mut Tape<'t, T>, tensors: Vec<&'t Matrix<T>>) -> Vec<Var> {
    tensors.into_iter().map(|t| tape.param(t)).collect()
}
