//! Sentence scoring for choosing among antonym substitutions.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Log-probability of a whole sentence. Implementations must be
/// deterministic.
pub trait LmScorer {
    fn score(&self, sentence: &str) -> f64;
}

impl<F: Fn(&str) -> f64> LmScorer for F {
    fn score(&self, sentence: &str) -> f64 {
        self(sentence)
    }
}

const BOS: u32 = 0;
const EOS: u32 = 1;
const UNK: u32 = 2;

/// Word n-gram model with add-k smoothing over lowercase whitespace
/// tokens. Histories are padded with `<s>`, sentences end with `</s>`, and
/// unseen words map to `<unk>`.
#[derive(Debug, Clone)]
pub struct NgramLm {
    n: usize,
    k: f64,
    vocab: BTreeMap<String, u32>,
    ngrams: BTreeMap<Vec<u32>, u64>,
    histories: BTreeMap<Vec<u32>, u64>,
}

impl NgramLm {
    pub const DEFAULT_ORDER: usize = 3;
    pub const DEFAULT_K: f64 = 0.01;

    pub fn train<'a>(sentences: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        Self::with_params(sentences, Self::DEFAULT_ORDER, Self::DEFAULT_K)
    }

    pub fn with_params<'a>(sentences: impl IntoIterator<Item = &'a str>, n: usize, k: f64) -> Result<Self> {
        if n == 0 || !(k > 0.0) {
            return Err(Error::Parameter("n-gram order and smoothing constant must be positive".into()));
        }
        let mut lm = NgramLm { n, k, vocab: BTreeMap::new(), ngrams: BTreeMap::new(), histories: BTreeMap::new() };
        let corpus: Vec<&str> = sentences.into_iter().collect();
        if corpus.is_empty() {
            return Err(Error::Parameter("language model needs a nonempty corpus".into()));
        }
        for s in &corpus {
            for w in s.split_whitespace() {
                let next = lm.vocab.len() as u32 + 3;
                lm.vocab.entry(w.to_lowercase()).or_insert(next);
            }
        }
        for s in &corpus {
            let ids = lm.encode(s);
            for window in ids.windows(n) {
                *lm.ngrams.entry(window.to_vec()).or_default() += 1;
                *lm.histories.entry(window[..n - 1].to_vec()).or_default() += 1;
            }
        }
        Ok(lm)
    }

    /// Vocabulary size used in the smoothing denominator: training words
    /// plus `</s>` and `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len() + 2
    }

    fn encode(&self, sentence: &str) -> Vec<u32> {
        let mut ids = alloc::vec![BOS; self.n - 1];
        ids.extend(sentence.split_whitespace().map(|w| *self.vocab.get(&w.to_lowercase()).unwrap_or(&UNK)));
        ids.push(EOS);
        ids
    }

    /// `log P(w | history)` for an encoded n-gram.
    fn log_prob(&self, gram: &[u32]) -> f64 {
        let c = self.ngrams.get(gram).copied().unwrap_or(0) as f64;
        let h = self.histories.get(&gram[..self.n - 1]).copied().unwrap_or(0) as f64;
        libm::log((c + self.k) / (h + self.k * self.vocab_size() as f64))
    }
}

impl LmScorer for NgramLm {
    fn score(&self, sentence: &str) -> f64 {
        self.encode(sentence).windows(self.n).map(|g| self.log_prob(g)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefers_observed_order() {
        let lm = NgramLm::train(["a b"]).unwrap();
        assert!(lm.score("a b") > lm.score("b a"));
        assert!(lm.score("") <= 0.0);
        assert!(lm.score("a b c d e") < lm.score("a b"));
        assert!(NgramLm::train([]).is_err());
    }

    #[test]
    fn hand_computed_bigram() {
        // Bigram counts over "<s> x y </s>" and "<s> x z </s>", V = 3 + 2.
        let lm = NgramLm::with_params(["x y", "x z"], 2, 0.5).unwrap();
        let v = 5.0;
        let p = |c: f64, h: f64| libm::log((c + 0.5) / (h + 0.5 * v));
        let expected = p(2.0, 2.0) + p(1.0, 2.0) + p(1.0, 1.0);
        assert!((lm.score("x y") - expected).abs() < 1e-12);
        let unk = p(2.0, 2.0) + p(0.0, 2.0) + p(0.0, 0.0);
        assert!((lm.score("x q") - unk).abs() < 1e-12);
    }
}
