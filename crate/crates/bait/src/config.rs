//! Flat `key = value` run configuration.
//!
//! Relative paths resolve against the directory of the config file (or the
//! working directory for values given on the command line). Model
//! hyperparameters may be written plainly (`hidden_a = 60`), applying to
//! the selected model, or with a model prefix (`topknet.hidden_a = 60`),
//! applying only when that model is selected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bait_core::data::{BODY_LEN_CAP, NLI_DIM, SIM_DIM};
use bait_core::hpo::{apply_config, Config};
use bait_core::model::{ModelConfig, ModelKind};
use bait_core::train::TrainingConfig;

use crate::error::{BaitError, Result};

/// Keys carrying paths.
pub const PATH_KEYS: &[&str] = &[
    "stances",
    "bodies",
    "stores",
    "test_stances",
    "test_stores",
    "synthetic_stances",
    "arc",
    "arc_stances",
    "arc_stores",
    "parses",
    "wordnet",
    "lm_corpus",
    "relatednet",
    "stage2",
    "space",
    "input",
];

/// Non-path keys other than hyperparameters.
pub const SCALAR_KEYS: &[&str] = &[
    "model",
    "seed",
    "epochs",
    "patience",
    "weighted_loss",
    "validation_fraction",
    "body_cap",
    "sim_dim",
    "nli_dim",
    "threshold",
    "budget",
    "flip_disagree",
    "subsample",
];

/// Hyperparameters routed through [`apply_config`].
pub const HYPER_KEYS: &[&str] =
    &["learning_rate", "batch_size", "dropout", "hidden_a", "hidden_b", "k", "num_heads", "d_k", "d_v"];

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Directory each value's relative paths resolve against.
    bases: BTreeMap<String, PathBuf>,
}

fn known(key: &str) -> bool {
    let bare = match key.split_once('.') {
        Some((kind, rest)) if ModelKind::parse(kind).is_some() => rest,
        Some(_) => return false,
        None => key,
    };
    if bare != key {
        return HYPER_KEYS.contains(&bare);
    }
    PATH_KEYS.contains(&key) || SCALAR_KEYS.contains(&key) || HYPER_KEYS.contains(&key)
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BaitError::Config(format!("line {}: expected `key = value`, got {line:?}", i + 1)))?;
            cfg.set_with_base(k.trim(), v.trim(), base).map_err(|e| BaitError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| BaitError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Sets a value whose relative paths resolve against the working
    /// directory.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.set_with_base(key, &value.into(), Path::new(""))
    }

    fn set_with_base(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        if !known(key) {
            return Err(BaitError::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        self.bases.insert(key.to_string(), base.to_path_buf());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key)?;
        let p = Path::new(v);
        Some(if p.is_absolute() { p.to_path_buf() } else { self.bases[key].join(p) })
    }

    /// A path that must be present and exist.
    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        let p = self.path(key).ok_or_else(|| BaitError::Config(format!("`{key}` is not set")))?;
        if !p.exists() {
            return Err(BaitError::io(&p, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        Ok(p)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| BaitError::Config(format!("{key} = {v:?} is not valid"))))
            .transpose()
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(BaitError::Config(format!("{key} = {v:?} is not a boolean"))),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.parsed("seed")?.unwrap_or(DEFAULT_SEED))
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        let v = self.get("model").unwrap_or("topknet");
        ModelKind::parse(v).ok_or_else(|| BaitError::Config(format!("unknown model {v:?}")))
    }

    pub fn body_cap(&self) -> Result<usize> {
        let cap = self.usize("body_cap", BODY_LEN_CAP)?;
        if cap == 0 {
            return Err(BaitError::Config("body_cap must be positive".into()));
        }
        Ok(cap)
    }

    /// Hyperparameters that apply to `kind`, prefixed ones winning.
    pub fn hyperparameters(&self, kind: ModelKind) -> Result<Config> {
        let mut out = Config::new();
        for prefixed in [false, true] {
            for (k, v) in &self.values {
                let name = match k.split_once('.') {
                    Some((m, rest)) if prefixed && ModelKind::parse(m) == Some(kind) => rest,
                    None if !prefixed && HYPER_KEYS.contains(&k.as_str()) => k.as_str(),
                    _ => continue,
                };
                let x: f64 = v.parse().map_err(|_| BaitError::Config(format!("{k} = {v:?} is not a number")))?;
                out.insert(name.to_string(), x);
            }
        }
        Ok(out)
    }

    /// Model and training configs for `kind`: defaults, then store widths,
    /// then hyperparameters from this config.
    pub fn model_and_training(&self, kind: ModelKind) -> Result<(ModelConfig, TrainingConfig)> {
        let mut model = ModelConfig::default_for(kind);
        let sim = self.usize("sim_dim", SIM_DIM)?;
        let nli = self.usize("nli_dim", NLI_DIM)?;
        match &mut model {
            ModelConfig::RelatedNet(c) => c.sim_dim = sim,
            ModelConfig::TopKNet(c) => {
                c.sim_dim = sim;
                c.nli_dim = nli;
            }
            ModelConfig::AgreemNet(c) => {
                c.sim_dim = sim;
                c.nli_dim = nli;
            }
        }
        let mut training = TrainingConfig::for_kind(kind);
        training.epochs = self.usize("epochs", training.epochs)?;
        training.patience = match self.get("patience") {
            Some("none" | "off") => None,
            _ => match self.parsed::<usize>("patience")? {
                Some(0) => None,
                Some(p) => Some(p),
                None => training.patience,
            },
        };
        apply_config(&self.hyperparameters(kind)?, &mut model, &mut training)?;
        Ok((model, training))
    }

    /// The resolved configuration as written beside run outputs: every
    /// value with paths made absolute where possible, plus the seed.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut values = self.values.clone();
        values.entry("seed".into()).or_insert_with(|| DEFAULT_SEED.to_string());
        for (k, v) in &values {
            let shown = if PATH_KEYS.contains(&k.as_str()) {
                let p = self.path(k).unwrap_or_else(|| PathBuf::from(v));
                fs::canonicalize(&p).unwrap_or(p).display().to_string()
            } else {
                v.clone()
            };
            let _ = writeln!(out, "{k} = {shown}");
        }
        out
    }
}
