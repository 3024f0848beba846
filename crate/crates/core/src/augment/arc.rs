//! Mapping the ARC argument corpus onto the four-way stance schema.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{SamplePair, StanceLabel};
use crate::{Error, Result};

/// Which claim a post argues for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcSupport {
    Claim,
    Opposing,
    Neither,
}

impl core::str::FromStr for ArcSupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "claim" => Ok(ArcSupport::Claim),
            "opposing" => Ok(ArcSupport::Opposing),
            "neither" => Ok(ArcSupport::Neither),
            other => Err(Error::Parameter(format!("unknown ARC support value {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub topic: String,
    pub post: String,
    pub claim: String,
    pub opposing_claim: String,
    pub support: ArcSupport,
}

/// Fraction of adapted samples that are unrelated.
pub const UNRELATED_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArcAdaptation {
    /// Claim text per headline id.
    pub headlines: BTreeMap<u32, String>,
    /// Post text per body id.
    pub bodies: BTreeMap<u32, String>,
    pub samples: Vec<SamplePair>,
}

/// Each post becomes a body paired with its claim: agree when it supports
/// the claim, disagree when it supports the opposing claim, discuss
/// otherwise. Unrelated samples pair posts with claims of other topics,
/// drawn with a seeded generator until they make up three quarters of the
/// output. Ids start at the given bases so they can sit beside FNC-1 ids.
pub fn adapt_arc(records: &[ArcRecord], seed: u64, headline_base: u32, body_base: u32) -> Result<ArcAdaptation> {
    let mut out = ArcAdaptation::default();
    let mut claim_ids: BTreeMap<&str, u32> = BTreeMap::new();
    let mut claim_topic: Vec<(u32, &str)> = Vec::new();
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut post_topic: Vec<(u32, &str)> = Vec::new();

    for (i, r) in records.iter().enumerate() {
        if r.topic.trim().is_empty() || r.post.trim().is_empty() || r.claim.trim().is_empty() {
            return Err(Error::parse(i + 1, "ARC record is missing topic, post or claim"));
        }
        let next = headline_base + claim_ids.len() as u32;
        let headline_id = *claim_ids.entry(r.claim.as_str()).or_insert_with(|| {
            claim_topic.push((next, r.topic.as_str()));
            out.headlines.insert(next, r.claim.clone());
            next
        });
        let body_id = body_base + i as u32;
        out.bodies.insert(body_id, r.post.clone());
        post_topic.push((body_id, r.topic.as_str()));
        let stance = match r.support {
            ArcSupport::Claim => StanceLabel::Agree,
            ArcSupport::Opposing => StanceLabel::Disagree,
            ArcSupport::Neither => StanceLabel::Discuss,
        };
        pairs.insert((headline_id, body_id));
        out.samples.push(SamplePair { headline_id, body_id, stance });
    }

    let related = out.samples.len();
    let target = libm::round(related as f64 * UNRELATED_FRACTION / (1.0 - UNRELATED_FRACTION)) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = target.saturating_mul(50).max(1000);
    let mut made = 0;
    for _ in 0..max_attempts {
        if made == target || post_topic.is_empty() {
            break;
        }
        let (body_id, topic) = post_topic[rng.gen_range(0..post_topic.len())];
        let (headline_id, claim_topic_name) = claim_topic[rng.gen_range(0..claim_topic.len())];
        if claim_topic_name == topic || !pairs.insert((headline_id, body_id)) {
            continue;
        }
        out.samples.push(SamplePair { headline_id, body_id, stance: StanceLabel::Unrelated });
        made += 1;
    }
    if made < target {
        log::warn!("only {made} of {target} cross-topic unrelated pairs could be drawn");
    }
    Ok(out)
}
