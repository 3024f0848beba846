//! Label-flipping sample synthesis from negated headlines.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::conllu::ParsedHeadline;
use super::lm::LmScorer;
use super::negation::{negate_headline, NegationMethod};
use super::wordnet::WordNetIndex;
use crate::data::{SamplePair, StanceLabel};

/// Which labels are negated and flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipDirections {
    pub agree_to_disagree: bool,
    pub disagree_to_agree: bool,
}

impl Default for FlipDirections {
    fn default() -> Self {
        FlipDirections { agree_to_disagree: true, disagree_to_agree: false }
    }
}

impl FlipDirections {
    fn applies(&self, stance: StanceLabel) -> bool {
        match stance {
            StanceLabel::Agree => self.agree_to_disagree,
            StanceLabel::Disagree => self.disagree_to_agree,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisLogEntry {
    /// Id assigned to the negated headline.
    pub headline_id: u32,
    pub source_headline_id: u32,
    pub method: NegationMethod,
    pub original: String,
    pub negated: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Synthesis {
    pub samples: Vec<SamplePair>,
    /// One entry per negated headline, in headline id order.
    pub log: Vec<SynthesisLogEntry>,
    /// Headlines negated by each method, in [`NegationMethod::ALL`] order.
    pub method_counts: [usize; 3],
    /// Candidate headlines with no parse.
    pub missing_parses: Vec<u32>,
    /// Candidate headlines no method could negate.
    pub not_negated: Vec<u32>,
}

impl Synthesis {
    /// Text of every new headline by id.
    pub fn headlines(&self) -> impl Iterator<Item = (u32, &str)> {
        self.log.iter().map(|e| (e.headline_id, e.negated.as_str()))
    }
}

/// Negates the headline of every eligible sample and pairs it with the same
/// body under the flipped label. Each distinct source headline is negated
/// once and receives a new id counting up from `first_new_id`, in source id
/// order. Original samples are never modified.
pub fn synthesize_flipped_samples(
    samples: &[SamplePair],
    parses: &BTreeMap<u32, ParsedHeadline>,
    wn: &WordNetIndex,
    lm: &dyn LmScorer,
    directions: FlipDirections,
    first_new_id: u32,
) -> Synthesis {
    let mut out = Synthesis::default();
    let mut candidates: BTreeMap<u32, Vec<&SamplePair>> = BTreeMap::new();
    for s in samples.iter().filter(|s| directions.applies(s.stance)) {
        candidates.entry(s.headline_id).or_default().push(s);
    }
    let mut next_id = first_new_id;
    for (headline_id, group) in candidates {
        let Some(parsed) = parses.get(&headline_id) else {
            log::warn!("no parse for headline {headline_id}; skipping {} samples", group.len());
            out.missing_parses.push(headline_id);
            continue;
        };
        let Some(result) = negate_headline(parsed, wn, lm) else {
            out.not_negated.push(headline_id);
            continue;
        };
        let new_id = next_id;
        next_id += 1;
        out.method_counts[result.method as usize] += 1;
        for s in group {
            let stance = s.stance.flipped().expect("only agree/disagree are eligible");
            out.samples.push(SamplePair { headline_id: new_id, body_id: s.body_id, stance });
        }
        out.log.push(SynthesisLogEntry {
            headline_id: new_id,
            source_headline_id: headline_id,
            method: result.method,
            original: parsed.text.clone(),
            negated: result.text,
        });
    }
    out
}
