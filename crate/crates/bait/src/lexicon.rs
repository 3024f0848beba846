//! File loading for the negation resources: CoNLL-U parses, WordNet verb
//! files and the language-model training corpus.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bait_core::augment::{parse_conllu, NgramLm, ParsedHeadline, WordNetIndex};

use crate::error::{BaitError, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| BaitError::io(path, e))
}

fn input(path: &Path, source: bait_core::Error) -> BaitError {
    BaitError::Input { path: path.into(), source }
}

/// Parses keyed by headline id. Repeated ids are an integrity error.
pub fn load_parses(path: impl AsRef<Path>) -> Result<BTreeMap<u32, ParsedHeadline>> {
    let path = path.as_ref();
    let parsed = parse_conllu(&read(path)?).map_err(|e| input(path, e))?;
    let mut out = BTreeMap::new();
    for p in parsed {
        let id = p.headline_id;
        if out.insert(id, p).is_some() {
            return Err(BaitError::Integrity(format!("{}: headline id {id} parsed twice", path.display())));
        }
    }
    Ok(out)
}

/// Loads `index.verb` and `data.verb` from a WordNet `dict` directory.
pub fn load_wordnet(dir: impl AsRef<Path>) -> Result<WordNetIndex> {
    let dir = dir.as_ref();
    let index = read(&dir.join("index.verb"))?;
    let data_path = dir.join("data.verb");
    let data = read(&data_path)?;
    WordNetIndex::parse(&index, &data).map_err(|e| input(&data_path, e))
}

/// Trains the default trigram scorer on one sentence per line.
pub fn load_lm(path: impl AsRef<Path>) -> Result<NgramLm> {
    let path = path.as_ref();
    let text = read(path)?;
    NgramLm::train(text.lines().map(str::trim).filter(|l| !l.is_empty())).map_err(|e| input(path, e))
}
