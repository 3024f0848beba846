//! Reader for dependency parses in CoNLL-U.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::negation::detokenize;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Index of the governing token, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedHeadline {
    pub headline_id: u32,
    pub tokens: Vec<DependencyToken>,
    pub text: String,
}

impl ParsedHeadline {
    /// Checks head indices and that exactly one token is the root.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Error::Integrity(format!("headline {} has no tokens", self.headline_id)));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i + 1 || t.head > n {
                return Err(Error::Integrity(format!(
                    "headline {}: token {} has head {} in a sentence of {n}",
                    self.headline_id, t.index, t.head
                )));
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        if roots != 1 {
            return Err(Error::Integrity(format!("headline {} has {roots} roots", self.headline_id)));
        }
        Ok(())
    }

    /// Position (0-based) of the root token.
    pub fn root(&self) -> usize {
        self.tokens.iter().position(|t| t.head == 0).unwrap_or(0)
    }

    /// 0-based positions of the tokens governed by the token at `pos`.
    pub fn children(&self, pos: usize) -> impl Iterator<Item = usize> + '_ {
        let id = pos + 1;
        self.tokens.iter().enumerate().filter(move |(_, t)| t.head == id).map(|(i, _)| i)
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }
}

struct Pending {
    id: Option<u32>,
    text: Option<String>,
    tokens: Vec<DependencyToken>,
    first_line: usize,
}

impl Pending {
    fn new() -> Self {
        Pending { id: None, text: None, tokens: Vec::new(), first_line: 0 }
    }

    fn finish(self, ordinal: usize) -> Result<ParsedHeadline> {
        let text = match self.text {
            Some(t) => t,
            None => detokenize(self.tokens.iter().map(|t| t.form.as_str())),
        };
        let parsed = ParsedHeadline { headline_id: self.id.unwrap_or(ordinal as u32), tokens: self.tokens, text };
        parsed.validate().map_err(|e| match e {
            Error::Integrity(m) => Error::Integrity(format!("{m} (sentence starting at line {})", self.first_line)),
            other => other,
        })?;
        Ok(parsed)
    }
}

/// Parses sentences separated by blank lines. `# headline_id = n` sets the
/// id (otherwise the sentence's 0-based ordinal is used) and `# text = …`
/// the original text. Multiword ranges (`3-4`) and empty nodes (`3.1`) are
/// skipped.
pub fn parse_conllu(input: &str) -> Result<Vec<ParsedHeadline>> {
    let mut out = Vec::new();
    let mut cur = Pending::new();
    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.tokens.is_empty() {
                out.push(core::mem::replace(&mut cur, Pending::new()).finish(out.len())?);
            } else {
                cur = Pending::new();
            }
            continue;
        }
        if cur.first_line == 0 {
            cur.first_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "headline_id" => {
                        let id = value.trim().parse().map_err(|_| {
                            Error::parse(line_no, format!("headline id {:?} is not an integer", value.trim()))
                        })?;
                        cur.id = Some(id);
                    }
                    "text" => cur.text = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(line_no, format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index = cols[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("token id {:?} is not an integer", cols[0])))?;
        let head = cols[6]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("head {:?} is not an integer", cols[6])))?;
        cur.tokens.push(DependencyToken {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !cur.tokens.is_empty() {
        out.push(cur.finish(out.len())?);
    }
    Ok(out)
}
