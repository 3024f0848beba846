//! Dataset schemas, embedding stores, body padding and headline-disjoint
//! splitting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

/// Maximum number of body sentences fed to the models.
pub const BODY_LEN_CAP: usize = 50;

/// Default SIM embedding width.
pub const SIM_DIM: usize = 384;

/// Default NLI embedding width.
pub const NLI_DIM: usize = 768;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceLabel {
    Agree,
    Disagree,
    Discuss,
    Unrelated,
}

impl StanceLabel {
    /// Canonical class order used by every report and matrix.
    pub const ALL: [StanceLabel; 4] =
        [StanceLabel::Agree, StanceLabel::Disagree, StanceLabel::Discuss, StanceLabel::Unrelated];

    /// Classes handled by the second stage, in its output order.
    pub const RELATED: [StanceLabel; 3] = [StanceLabel::Agree, StanceLabel::Disagree, StanceLabel::Discuss];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::Agree => "agree",
            StanceLabel::Disagree => "disagree",
            StanceLabel::Discuss => "discuss",
            StanceLabel::Unrelated => "unrelated",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            StanceLabel::Agree => "AGR",
            StanceLabel::Disagree => "DSG",
            StanceLabel::Discuss => "DSC",
            StanceLabel::Unrelated => "UNR",
        }
    }

    pub fn is_related(self) -> bool {
        self != StanceLabel::Unrelated
    }

    /// Index in the stage-2 output, `None` for unrelated.
    pub fn stage2_index(self) -> Option<usize> {
        self.is_related().then_some(self as usize)
    }

    /// Agree and disagree swap; the other labels have no flip.
    pub fn flipped(self) -> Option<Self> {
        match self {
            StanceLabel::Agree => Some(StanceLabel::Disagree),
            StanceLabel::Disagree => Some(StanceLabel::Agree),
            _ => None,
        }
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "agree" => Ok(StanceLabel::Agree),
            "disagree" => Ok(StanceLabel::Disagree),
            "discuss" => Ok(StanceLabel::Discuss),
            "unrelated" => Ok(StanceLabel::Unrelated),
            other => Err(Error::Parameter(format!("unknown stance {other:?}"))),
        }
    }
}

/// One labelled headline/body pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamplePair {
    pub headline_id: u32,
    pub body_id: u32,
    pub stance: StanceLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingSpace {
    Sim,
    Nli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TextUnit {
    Head,
    Body,
}

/// Sentence embeddings for one space and one text unit, keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    pub space: EmbeddingSpace,
    pub unit: TextUnit,
    dim: usize,
    records: BTreeMap<u32, Matrix<f32>>,
}

impl EmbeddingStore {
    pub fn new(space: EmbeddingSpace, unit: TextUnit, dim: usize) -> Self {
        EmbeddingStore { space, unit, dim, records: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, id: u32, matrix: Matrix<f32>) -> Result<()> {
        if matrix.cols() != self.dim {
            return Err(Error::dim("embedding record", matrix.shape(), (matrix.rows(), self.dim)));
        }
        if self.unit == TextUnit::Head && matrix.rows() != 1 {
            return Err(Error::Integrity(format!(
                "head record {id} has {} rows, expected 1",
                matrix.rows()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::Integrity(format!("record {id} holds a non-finite value")));
        }
        if self.records.contains_key(&id) {
            return Err(Error::Integrity(format!("duplicate record id {id}")));
        }
        self.records.insert(id, matrix);
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&Matrix<f32>> {
        self.records.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Matrix<f32>)> {
        self.records.iter().map(|(&id, m)| (id, m))
    }

    /// Confirms the store width matches a configured dimension.
    pub fn expect_dim(&self, expected: usize) -> Result<()> {
        if self.dim != expected {
            return Err(Error::dim("store width vs config", (0, self.dim), (0, expected)));
        }
        Ok(())
    }
}

/// A body embedding matrix padded or truncated to a fixed number of rows,
/// with a mask marking the real sentences (always a prefix).
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBody {
    matrix: Matrix<f32>,
    mask: Vec<bool>,
    real_len: usize,
}

impl PaddedBody {
    pub fn matrix(&self) -> &Matrix<f32> {
        &self.matrix
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of real (unmasked) sentences.
    pub fn real_len(&self) -> usize {
        self.real_len
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        self.matrix.row(i)
    }

    /// Mutable access to a padded row, for tests that check padded content
    /// never leaks into results.
    pub fn padded_row_mut(&mut self, i: usize) -> Option<&mut [f32]> {
        (!self.mask[i]).then(|| self.matrix.row_mut(i))
    }
}

/// Pads with zero rows (or truncates) to [`BODY_LEN_CAP`] sentences.
pub fn pad_truncate_body(body: &Matrix<f32>) -> Result<PaddedBody> {
    pad_truncate_body_to(body, BODY_LEN_CAP)
}

pub fn pad_truncate_body_to(body: &Matrix<f32>, cap: usize) -> Result<PaddedBody> {
    if body.rows() == 0 {
        return Err(Error::Degenerate("body has no sentences".into()));
    }
    if cap == 0 {
        return Err(Error::Parameter("body length cap must be positive".into()));
    }
    let real_len = body.rows().min(cap);
    let dim = body.cols();
    let mut data = vec![0.0f32; cap * dim];
    data[..real_len * dim].copy_from_slice(&body.as_slice()[..real_len * dim]);
    let mut mask = vec![false; cap];
    mask[..real_len].iter_mut().for_each(|m| *m = true);
    Ok(PaddedBody { matrix: Matrix::from_raw(cap, dim, data), mask, real_len })
}

/// The four embedding views of one headline/body pair.
#[derive(Debug, Clone, Copy)]
pub struct PairEmbeddings<'a> {
    pub sim_head: &'a [f32],
    pub nli_head: &'a [f32],
    pub sim_body: &'a PaddedBody,
    pub nli_body: &'a PaddedBody,
}

impl PairEmbeddings<'_> {
    /// Both body views must mark the same sentences as real.
    pub fn check_masks(&self) -> Result<()> {
        if self.sim_body.mask() != self.nli_body.mask() {
            return Err(Error::Integrity(format!(
                "SIM body has {} sentences but NLI body has {}",
                self.sim_body.real_len(),
                self.nli_body.real_len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<SamplePair>,
    pub validation: Vec<SamplePair>,
}

/// Moves a seeded-random `fraction` of the distinct headlines, with all their
/// samples, into the validation part. Sample order is preserved in both
/// parts.
pub fn headline_split(samples: &[SamplePair], fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!("split fraction {fraction} outside (0, 1)")));
    }
    let headlines: BTreeSet<u32> = samples.iter().map(|s| s.headline_id).collect();
    if headlines.len() < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 distinct headlines to split, found {}",
            headlines.len()
        )));
    }
    let mut ids: Vec<u32> = headlines.into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((ids.len() as f64 * fraction).round() as usize).clamp(1, ids.len() - 1);
    let held_out: BTreeSet<u32> = ids[..n_val].iter().copied().collect();
    let (validation, train) = samples.iter().partition(|s| held_out.contains(&s.headline_id));
    Ok(DatasetSplit { train, validation })
}

/// Per-class sample counts in [`StanceLabel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; 4],
}

impl ClassDistribution {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn count(&self, label: StanceLabel) -> usize {
        self.counts[label.index()]
    }

    pub fn proportions(&self) -> [f64; 4] {
        let total = self.total() as f64;
        self.counts.map(|c| c as f64 / total)
    }

    pub fn proportion(&self, label: StanceLabel) -> f64 {
        self.proportions()[label.index()]
    }
}

pub fn class_distribution(samples: &[SamplePair]) -> Result<ClassDistribution> {
    if samples.is_empty() {
        return Err(Error::Parameter("class distribution of an empty sample set".into()));
    }
    let mut counts = [0usize; 4];
    for s in samples {
        counts[s.stance.index()] += 1;
    }
    Ok(ClassDistribution { counts })
}
