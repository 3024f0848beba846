//! Joining samples with their embedding stores.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use bait_core::data::{
    pad_truncate_body_to, EmbeddingSpace, EmbeddingStore, PaddedBody, PairEmbeddings, SamplePair, TextUnit,
};
use bait_core::train::Example;

use crate::error::{BaitError, Result};
use crate::store::{load_embedding_store, write_embedding_store};

/// The four stores of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreSet {
    pub sim_head: EmbeddingStore,
    pub nli_head: EmbeddingStore,
    pub sim_body: EmbeddingStore,
    pub nli_body: EmbeddingStore,
}

impl StoreSet {
    /// File names inside a store directory, in field order.
    pub const FILES: [&'static str; 4] = ["sim_head.bin", "nli_head.bin", "sim_body.bin", "nli_body.bin"];
    /// Headline sidecar file name inside a store directory.
    pub const SIDECAR: &'static str = "headlines.txt";

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let expect = [
            (EmbeddingSpace::Sim, TextUnit::Head),
            (EmbeddingSpace::Nli, TextUnit::Head),
            (EmbeddingSpace::Sim, TextUnit::Body),
            (EmbeddingSpace::Nli, TextUnit::Body),
        ];
        let mut stores = Vec::with_capacity(4);
        for (file, (space, unit)) in Self::FILES.iter().zip(expect) {
            let path = dir.join(file);
            let s = load_embedding_store(&path)?;
            if (s.space, s.unit) != (space, unit) {
                return Err(BaitError::Integrity(format!(
                    "{}: holds {:?} {:?} embeddings, expected {space:?} {unit:?}",
                    path.display(),
                    s.space,
                    s.unit
                )));
            }
            stores.push(s);
        }
        let mut it = stores.into_iter();
        let set = StoreSet {
            sim_head: it.next().unwrap(),
            nli_head: it.next().unwrap(),
            sim_body: it.next().unwrap(),
            nli_body: it.next().unwrap(),
        };
        if set.sim_head.dim() != set.sim_body.dim() || set.nli_head.dim() != set.nli_body.dim() {
            return Err(BaitError::Integrity(format!(
                "{}: head and body stores of one space disagree in width",
                dir.display()
            )));
        }
        Ok(set)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (file, store) in Self::FILES.iter().zip([&self.sim_head, &self.nli_head, &self.sim_body, &self.nli_body]) {
            write_embedding_store(dir.join(file), store)?;
        }
        Ok(())
    }

    pub fn sim_dim(&self) -> usize {
        self.sim_head.dim()
    }

    pub fn nli_dim(&self) -> usize {
        self.nli_head.dim()
    }

    /// Checks the store widths against configured dimensions.
    pub fn check_dims(&self, sim_dim: usize, nli_dim: usize) -> Result<()> {
        if self.sim_dim() != sim_dim || self.nli_dim() != nli_dim {
            return Err(BaitError::Integrity(format!(
                "stores are SIM {} / NLI {} wide but the config says {sim_dim} / {nli_dim}",
                self.sim_dim(),
                self.nli_dim()
            )));
        }
        Ok(())
    }
}

/// Padded bodies for every body a set of pairs refers to.
#[derive(Debug)]
pub struct EmbeddedCorpus<'s> {
    stores: &'s StoreSet,
    bodies: BTreeMap<u32, (PaddedBody, PaddedBody)>,
    /// Bodies with no sentences; pairs using them cannot be embedded.
    pub empty_bodies: BTreeSet<u32>,
}

impl<'s> EmbeddedCorpus<'s> {
    /// Every referenced id must have a record in all relevant stores, with
    /// matching sentence counts across spaces. Zero-sentence bodies are
    /// recorded in `empty_bodies` rather than failing.
    pub fn build(stores: &'s StoreSet, pairs: impl IntoIterator<Item = (u32, u32)>, cap: usize) -> Result<Self> {
        let mut heads = BTreeSet::new();
        let mut body_ids = BTreeSet::new();
        for (h, b) in pairs {
            heads.insert(h);
            body_ids.insert(b);
        }
        for h in heads {
            if stores.sim_head.get(h).is_none() || stores.nli_head.get(h).is_none() {
                return Err(BaitError::Integrity(format!("headline {h} has no embedding")));
            }
        }
        let mut bodies = BTreeMap::new();
        let mut empty_bodies = BTreeSet::new();
        for b in body_ids {
            let (Some(sim), Some(nli)) = (stores.sim_body.get(b), stores.nli_body.get(b)) else {
                return Err(BaitError::Integrity(format!("body {b} has no embedding")));
            };
            if sim.rows() != nli.rows() {
                return Err(BaitError::Integrity(format!(
                    "body {b} has {} SIM sentences but {} NLI sentences",
                    sim.rows(),
                    nli.rows()
                )));
            }
            if sim.rows() == 0 {
                empty_bodies.insert(b);
                continue;
            }
            bodies.insert(b, (pad_truncate_body_to(sim, cap)?, pad_truncate_body_to(nli, cap)?));
        }
        Ok(EmbeddedCorpus { stores, bodies, empty_bodies })
    }

    /// Embeddings of a pair; `None` for zero-sentence bodies or ids the
    /// corpus was not built with.
    pub fn pair(&self, headline_id: u32, body_id: u32) -> Option<PairEmbeddings<'_>> {
        let (sim_body, nli_body) = self.bodies.get(&body_id)?;
        Some(PairEmbeddings {
            sim_head: self.stores.sim_head.get(headline_id)?.row(0),
            nli_head: self.stores.nli_head.get(headline_id)?.row(0),
            sim_body,
            nli_body,
        })
    }

    /// Samples whose bodies have sentences, with a warning for the rest.
    pub fn keep_embeddable(&self, samples: &[SamplePair]) -> Vec<SamplePair> {
        let (keep, drop): (Vec<_>, Vec<_>) = samples.iter().partition(|s| !self.empty_bodies.contains(&s.body_id));
        if !drop.is_empty() {
            log::warn!(
                "dropping {} samples whose bodies have no sentences (bodies {:?})",
                drop.len(),
                self.empty_bodies
            );
        }
        keep
    }

    pub fn examples(&self, samples: &[SamplePair]) -> Result<Vec<Example<'_>>> {
        samples
            .iter()
            .map(|s| {
                self.pair(s.headline_id, s.body_id)
                    .map(|pair| Example { pair, stance: s.stance })
                    .ok_or_else(|| BaitError::Integrity(format!("pair ({}, {}) is not embedded", s.headline_id, s.body_id)))
            })
            .collect()
    }
}
