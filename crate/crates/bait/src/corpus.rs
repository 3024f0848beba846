//! FNC-1 and ARC CSV files and the headline id sidecar.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use bait_core::augment::arc::{ArcRecord, ArcSupport};
use bait_core::data::{SamplePair, StanceLabel};
use unicode_normalization::UnicodeNormalization;

use crate::error::{BaitError, Result};

/// The identity of a headline: NFC-normalized and trimmed.
pub fn normalize_headline(text: &str) -> String {
    text.trim().nfc().collect()
}

/// Headline texts indexed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeadlineTable {
    texts: Vec<String>,
    ids: HashMap<String, u32>,
}

impl HeadlineTable {
    pub fn from_texts(texts: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut table = HeadlineTable::default();
        for t in texts {
            let key = normalize_headline(&t);
            if table.ids.contains_key(&key) {
                return Err(BaitError::Integrity(format!("headline {key:?} appears twice")));
            }
            table.intern(&t);
        }
        Ok(table)
    }

    /// Id of `text`, adding it if new.
    pub fn intern(&mut self, text: &str) -> u32 {
        let key = normalize_headline(text);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.texts.len() as u32;
        self.texts.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    pub fn id(&self, text: &str) -> Option<u32> {
        self.ids.get(&normalize_headline(text)).copied()
    }

    pub fn text(&self, id: u32) -> Option<&str> {
        self.texts.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }
}

/// A stances file: samples keyed by headline ids in order of first
/// appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stances {
    pub samples: Vec<SamplePair>,
    pub headlines: HeadlineTable,
}

impl Stances {
    /// Re-keys the samples by the ids of a sidecar table.
    pub fn resolve_against(&self, sidecar: &HeadlineTable) -> Result<Vec<SamplePair>> {
        self.samples
            .iter()
            .map(|s| {
                let text = self.headlines.text(s.headline_id).expect("local id");
                let headline_id = sidecar
                    .id(text)
                    .ok_or_else(|| BaitError::Integrity(format!("headline {text:?} is not in the sidecar")))?;
                Ok(SamplePair { headline_id, ..*s })
            })
            .collect()
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| BaitError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn csv_err(path: &Path, row: u64, message: impl Into<String>) -> BaitError {
    BaitError::Csv { path: path.into(), row, message: message.into() }
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim_start_matches('\u{feff}').trim() == name)
        .ok_or_else(|| csv_err(path, 1, format!("missing column {name:?}")))
}

/// Rows of a stances CSV; `Stance` is optional here.
struct RawStances {
    rows: Vec<(String, u32, Option<String>)>,
}

fn read_stance_rows(path: &Path, require_stance: bool) -> Result<RawStances> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    let h = column(&headers, path, "Headline")?;
    let b = column(&headers, path, "Body ID")?;
    let s = if require_stance {
        Some(column(&headers, path, "Stance")?)
    } else {
        column(&headers, path, "Stance").ok()
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, row, e.to_string()))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| csv_err(path, row, "short row"));
        let body = field(b)?.trim();
        let body_id = body.parse().map_err(|_| csv_err(path, row, format!("Body ID {body:?} is not an integer")))?;
        let stance = match s {
            Some(c) => Some(field(c)?.to_string()),
            None => None,
        };
        rows.push((field(h)?.to_string(), body_id, stance));
    }
    Ok(RawStances { rows })
}

/// Reads a `Headline,Body ID,Stance` file.
pub fn load_stances_csv(path: impl AsRef<Path>) -> Result<Stances> {
    let path = path.as_ref();
    let raw = read_stance_rows(path, true)?;
    let mut out = Stances::default();
    for (i, (headline, body_id, stance)) in raw.rows.into_iter().enumerate() {
        let stance_text = stance.expect("column required");
        let stance: StanceLabel = stance_text
            .trim()
            .parse()
            .map_err(|_| csv_err(path, i as u64 + 2, format!("unknown stance {stance_text:?}")))?;
        let headline_id = out.headlines.intern(&headline);
        out.samples.push(SamplePair { headline_id, body_id, stance });
    }
    Ok(out)
}

/// A stances-format file without labels, for prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnlabeledRow {
    pub headline: String,
    pub body_id: u32,
}

pub fn load_unlabeled_csv(path: impl AsRef<Path>) -> Result<Vec<UnlabeledRow>> {
    let raw = read_stance_rows(path.as_ref(), false)?;
    Ok(raw.rows.into_iter().map(|(headline, body_id, _)| UnlabeledRow { headline, body_id }).collect())
}

/// Reads a `Body ID,articleBody` file. Empty bodies are kept.
pub fn load_bodies_csv(path: impl AsRef<Path>) -> Result<BTreeMap<u32, String>> {
    let path = path.as_ref();
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    let b = column(&headers, path, "Body ID")?;
    let t = column(&headers, path, "articleBody")?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, row, e.to_string()))?;
        let id_text = rec.get(b).unwrap_or("").trim();
        let id: u32 = id_text.parse().map_err(|_| csv_err(path, row, format!("Body ID {id_text:?} is not an integer")))?;
        let text = rec.get(t).unwrap_or("").to_string();
        if text.trim().is_empty() {
            log::warn!("{}: body {id} is empty", path.display());
        }
        if out.insert(id, text).is_some() {
            return Err(BaitError::Integrity(format!("{}: duplicate Body ID {id}", path.display())));
        }
    }
    Ok(out)
}

/// Reads a `topic,post,claim,opposing_claim,support` file.
pub fn load_arc_csv(path: impl AsRef<Path>) -> Result<Vec<ArcRecord>> {
    let path = path.as_ref();
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    let topic = column(&headers, path, "topic")?;
    let post = column(&headers, path, "post")?;
    let claim = column(&headers, path, "claim")?;
    let opposing = column(&headers, path, "opposing_claim")?;
    let support = column(&headers, path, "support")?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, row, e.to_string()))?;
        let field = |c: usize, name: &str| -> Result<String> {
            match rec.get(c) {
                Some(v) if !v.trim().is_empty() => Ok(v.to_string()),
                _ => Err(csv_err(path, row, format!("missing {name}"))),
            }
        };
        let support_text = field(support, "support")?;
        let support: ArcSupport =
            support_text.parse().map_err(|_| csv_err(path, row, format!("unknown support {support_text:?}")))?;
        out.push(ArcRecord {
            topic: field(topic, "topic")?,
            post: field(post, "post")?,
            claim: field(claim, "claim")?,
            opposing_claim: field(opposing, "opposing_claim")?,
            support,
        });
    }
    Ok(out)
}

/// One headline per line; the zero-based line index is the id.
pub fn load_sidecar(path: impl AsRef<Path>) -> Result<HeadlineTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| BaitError::io(path, e))?;
    HeadlineTable::from_texts(text.lines().map(str::to_string))
}

pub fn write_sidecar(path: impl AsRef<Path>, table: &HeadlineTable) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for t in table.texts() {
        if t.contains('\n') {
            return Err(BaitError::Integrity(format!("headline {t:?} spans lines")));
        }
        out.push_str(t);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| BaitError::io(path, e))
}

/// Writes `Headline,Body ID,Stance` rows.
pub fn write_stances_csv<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a str, u32, Option<StanceLabel>)>,
) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| BaitError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| BaitError::io(path, std::io::Error::other(e));
    w.write_record(["Headline", "Body ID", "Stance"]).map_err(io)?;
    for (headline, body_id, stance) in rows {
        w.write_record([headline, &body_id.to_string(), stance.map_or("", |s| s.as_str())]).map_err(io)?;
    }
    w.flush().map_err(|e| BaitError::io(path, e))
}

pub fn write_bodies_csv<'a>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = (u32, &'a str)>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| BaitError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| BaitError::io(path, std::io::Error::other(e));
    w.write_record(["Body ID", "articleBody"]).map_err(io)?;
    for (id, text) in rows {
        w.write_record([&id.to_string(), text]).map_err(io)?;
    }
    w.flush().map_err(|e| BaitError::io(path, e))
}

/// Resolves `p` against `base` unless absolute.
pub fn resolve(base: &Path, p: impl AsRef<Path>) -> PathBuf {
    let p = p.as_ref();
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
