//! Verb antonyms from the WordNet database files (`index.verb`,
//! `data.verb`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Synset {
    /// Member lemmas, lowercase, multiword joined by `_`.
    pub lemmas: Vec<String>,
    /// Lemmas of other synsets linked to a member by an antonym pointer.
    pub antonyms: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordNetIndex {
    pub lemma_synsets: BTreeMap<String, BTreeSet<u64>>,
    pub synsets: BTreeMap<u64, Synset>,
    /// Lemma-level antonym relation, closed under symmetry.
    antonyms: BTreeMap<String, BTreeSet<String>>,
}

struct Pointer {
    target: u64,
    source_word: usize,
    target_word: usize,
    line: usize,
}

fn is_license_line(line: &str) -> bool {
    line.starts_with(' ') || line.trim().is_empty()
}

fn parse_offset(s: &str, line: usize) -> Result<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(line, format!("malformed synset offset {s:?}")));
    }
    s.parse().map_err(|_| Error::parse(line, format!("malformed synset offset {s:?}")))
}

fn parse_count(s: Option<&str>, radix: u32, what: &str, line: usize) -> Result<usize> {
    let s = s.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    usize::from_str_radix(s, radix).map_err(|_| Error::parse(line, format!("malformed {what} {s:?}")))
}

impl WordNetIndex {
    /// Parses both files. Every antonym pointer to a verb synset and every
    /// offset listed in the index must exist in the data file.
    pub fn parse(index_verb: &str, data_verb: &str) -> Result<Self> {
        let mut wn = WordNetIndex::default();
        let mut pointers: Vec<(u64, Pointer)> = Vec::new();

        for (i, line) in data_verb.lines().enumerate() {
            let line_no = i + 1;
            if is_license_line(line) {
                continue;
            }
            let body = line.split(" | ").next().unwrap_or(line);
            let mut f = body.split_whitespace();
            let offset = parse_offset(f.next().unwrap_or(""), line_no)?;
            f.next(); // lex_filenum
            f.next(); // ss_type
            let w_cnt = parse_count(f.next(), 16, "word count", line_no)?;
            let mut lemmas = Vec::with_capacity(w_cnt);
            for _ in 0..w_cnt {
                let word = f.next().ok_or_else(|| Error::parse(line_no, format!("synset {offset:08}: truncated word list")))?;
                f.next(); // lex_id
                lemmas.push(word.to_lowercase());
            }
            let p_cnt = parse_count(f.next(), 10, "pointer count", line_no)?;
            for _ in 0..p_cnt {
                let (Some(symbol), Some(target), Some(pos), Some(st)) = (f.next(), f.next(), f.next(), f.next()) else {
                    return Err(Error::parse(line_no, format!("synset {offset:08}: truncated pointer list")));
                };
                if symbol != "!" || pos != "v" {
                    continue;
                }
                let target = parse_offset(target, line_no)?;
                if st.len() != 4 {
                    return Err(Error::parse(line_no, format!("synset {offset:08}: malformed source/target {st:?}")));
                }
                let source_word = parse_count(Some(&st[..2]), 16, "source word", line_no)?;
                let target_word = parse_count(Some(&st[2..]), 16, "target word", line_no)?;
                pointers.push((offset, Pointer { target, source_word, target_word, line: line_no }));
            }
            wn.synsets.insert(offset, Synset { lemmas, antonyms: BTreeSet::new() });
        }

        for (source, p) in pointers {
            let target = wn.synsets.get(&p.target).ok_or_else(|| {
                Error::parse(p.line, format!("antonym pointer from {source:08} to missing synset {:08}", p.target))
            })?;
            let pick = |lemmas: &[String], w: usize| -> Vec<String> {
                if w == 0 {
                    lemmas.to_vec()
                } else {
                    lemmas.get(w - 1).cloned().into_iter().collect()
                }
            };
            let targets = pick(&target.lemmas, p.target_word);
            let sources = pick(&wn.synsets[&source].lemmas, p.source_word);
            if targets.is_empty() || sources.is_empty() {
                return Err(Error::parse(p.line, format!("antonym pointer from {source:08} names a missing word")));
            }
            wn.synsets.get_mut(&source).expect("source synset").antonyms.extend(targets.iter().cloned());
            for s in &sources {
                for t in &targets {
                    wn.antonyms.entry(s.clone()).or_default().insert(t.clone());
                    wn.antonyms.entry(t.clone()).or_default().insert(s.clone());
                }
            }
        }

        for (i, line) in index_verb.lines().enumerate() {
            let line_no = i + 1;
            if is_license_line(line) {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 4 {
                return Err(Error::parse(line_no, "index line has fewer than four fields"));
            }
            let synset_cnt = parse_count(Some(f[2]), 10, "synset count", line_no)?;
            if f.len() < 4 + synset_cnt {
                return Err(Error::parse(line_no, format!("index entry {:?} lists too few offsets", f[0])));
            }
            let mut offsets = BTreeSet::new();
            for s in &f[f.len() - synset_cnt..] {
                let offset = parse_offset(s, line_no)?;
                if !wn.synsets.contains_key(&offset) {
                    return Err(Error::parse(line_no, format!("index entry {:?} points to missing synset {s}", f[0])));
                }
                offsets.insert(offset);
            }
            wn.lemma_synsets.insert(f[0].to_lowercase(), offsets);
        }
        Ok(wn)
    }

    /// Antonyms of a verb lemma, sorted; empty when the lemma is unknown.
    pub fn antonyms(&self, lemma: &str) -> BTreeSet<String> {
        let key = lemma.to_lowercase().replace(' ', "_");
        self.antonyms.get(&key).cloned().unwrap_or_default()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemma_synsets.contains_key(&lemma.to_lowercase().replace(' ', "_"))
    }

    /// Every lemma with at least one antonym.
    pub fn lemmas_with_antonyms(&self) -> impl Iterator<Item = &str> {
        self.antonyms.keys().map(String::as_str)
    }
}
