//! Headline negation over a dependency parse, tried in three steps:
//! drop an existing negation, insert "not" after the root's last
//! auxiliary, or swap the root verb for its best-scoring antonym.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::conllu::ParsedHeadline;
use super::inflect::{inflect, verb_form};
use super::lm::LmScorer;
use super::wordnet::WordNetIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegationMethod {
    RemoveNot,
    InsertNot,
    AntonymSwap,
}

impl NegationMethod {
    pub const ALL: [NegationMethod; 3] = [NegationMethod::RemoveNot, NegationMethod::InsertNot, NegationMethod::AntonymSwap];

    pub fn as_str(self) -> &'static str {
        match self {
            NegationMethod::RemoveNot => "remove_not",
            NegationMethod::InsertNot => "insert_not",
            NegationMethod::AntonymSwap => "antonym_swap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationResult {
    pub method: NegationMethod,
    pub text: String,
}

const CLITICS: &[&str] = &["n't", "'s", "'re", "'ve", "'ll", "'d", "'m", "’s", "n’t"];

fn attaches_left(tok: &str) -> bool {
    CLITICS.iter().any(|c| tok.eq_ignore_ascii_case(c))
        || (!tok.is_empty() && tok.chars().all(|c| matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '%' | ')' | ']' | '}' | '…')))
}

fn attaches_right(tok: &str) -> bool {
    matches!(tok, "(" | "[" | "{" | "$" | "#")
}

fn is_quote(tok: &str) -> bool {
    matches!(tok, "\"" | "'" | "“" | "”" | "‘" | "’" | "``" | "''")
}

/// Joins tokens with single spaces, attaching punctuation and clitics to the
/// previous token, opening brackets to the next, and straight quotes
/// alternately to the next (opening) and previous (closing) token.
pub fn detokenize<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    let mut glue_next = true;
    let mut quote_open = false;
    for tok in tokens {
        let mut glue = glue_next || attaches_left(tok);
        glue_next = attaches_right(tok);
        if is_quote(tok) {
            if quote_open {
                glue = true;
            } else {
                glue_next = true;
            }
            quote_open = !quote_open;
        }
        if !glue {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

fn is_negation_modifier(tok: &super::DependencyToken) -> bool {
    let form = tok.form.to_lowercase();
    let lemma = tok.lemma.to_lowercase();
    let is_not = matches!(form.as_str(), "not" | "n't" | "n’t");
    let rel = tok.deprel.split(':').next().unwrap_or("");
    is_not && (rel == "neg" || (rel == "advmod" && (lemma == "not" || lemma == "n't")))
}

/// Restores the full auxiliary when a contracted negation is removed.
fn expand_contracted(aux: &str) -> Option<&'static str> {
    match aux.to_lowercase().as_str() {
        "ca" => Some("can"),
        "wo" => Some("will"),
        "sha" => Some("shall"),
        _ => None,
    }
}

fn match_case(word: &str, like: &str) -> String {
    let mut chars = like.chars();
    match (chars.next(), word.chars().next()) {
        (Some(first), Some(w0)) if first.is_uppercase() => {
            if like.chars().count() > 1 && like.chars().all(|c| !c.is_lowercase()) {
                word.to_uppercase()
            } else {
                let mut s: String = w0.to_uppercase().collect();
                s.push_str(&word[w0.len_utf8()..]);
                s
            }
        }
        _ => word.to_string(),
    }
}

fn remove_not(parsed: &ParsedHeadline) -> Option<String> {
    let pos = parsed.tokens.iter().position(is_negation_modifier)?;
    let mut forms: Vec<String> = parsed.tokens.iter().map(|t| t.form.clone()).collect();
    let removed = forms.remove(pos);
    if pos > 0 && removed.to_lowercase() != "not" {
        if let Some(full) = expand_contracted(&forms[pos - 1]) {
            forms[pos - 1] = match_case(full, &forms[pos - 1]);
        }
    }
    if pos == 0 && !forms.is_empty() && removed.chars().next().is_some_and(char::is_uppercase) {
        forms[0] = match_case(&forms[0], "X");
    }
    if forms.is_empty() {
        return None;
    }
    Some(detokenize(forms.iter().map(String::as_str)))
}

fn is_aux_relation(deprel: &str) -> bool {
    matches!(deprel, "aux" | "aux:pass" | "auxpass")
}

fn insert_not(parsed: &ParsedHeadline) -> Option<String> {
    let root = parsed.root();
    if parsed.tokens[root].upos != "VERB" {
        return None;
    }
    let last_aux = parsed.children(root).filter(|&c| is_aux_relation(&parsed.tokens[c].deprel)).max()?;
    let mut forms: Vec<&str> = parsed.forms();
    forms.insert(last_aux + 1, "not");
    Some(detokenize(forms))
}

fn antonym_swap(parsed: &ParsedHeadline, wn: &WordNetIndex, lm: &dyn LmScorer) -> Option<String> {
    let root = parsed.root();
    let tok = &parsed.tokens[root];
    if tok.upos != "VERB" {
        return None;
    }
    let form = verb_form(&tok.lemma, &tok.form);
    let mut best: Option<(f64, String)> = None;
    for antonym in wn.antonyms(&tok.lemma) {
        let word = match_case(&inflect(&antonym, form), &tok.form);
        let mut forms = parsed.forms();
        forms[root] = &word;
        let candidate = detokenize(forms);
        let score = lm.score(&candidate);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, candidate));
        }
    }
    best.map(|(_, text)| text)
}

/// First applicable negation, or `None` when no step applies or the result
/// would equal the original text.
pub fn negate_headline(parsed: &ParsedHeadline, wn: &WordNetIndex, lm: &dyn LmScorer) -> Option<NegationResult> {
    if parsed.validate().is_err() {
        return None;
    }
    let original = detokenize(parsed.forms());
    let attempt = if let Some(t) = remove_not(parsed) {
        (NegationMethod::RemoveNot, t)
    } else if let Some(t) = insert_not(parsed) {
        (NegationMethod::InsertNot, t)
    } else {
        (NegationMethod::AntonymSwap, antonym_swap(parsed, wn, lm)?)
    };
    (attempt.1 != original).then_some(NegationResult { method: attempt.0, text: attempt.1 })
}
