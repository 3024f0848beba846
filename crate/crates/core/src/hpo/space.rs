//! Search spaces and their unit-cube encoding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{ModelConfig, ModelKind};
use crate::train::TrainingConfig;
use crate::{Error, Result};

/// Named hyperparameter values. Integers and categorical choices are stored
/// as their numeric value.
pub type Config = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamKind {
    Real { low: f64, high: f64 },
    LogReal { low: f64, high: f64 },
    Int { low: i64, high: i64 },
    Choice(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn new(name: &str, kind: ParamKind) -> Result<Self> {
        let ok = match &kind {
            ParamKind::Real { low, high } => low.is_finite() && high.is_finite() && low < high,
            ParamKind::LogReal { low, high } => low.is_finite() && high.is_finite() && *low > 0.0 && low < high,
            ParamKind::Int { low, high } => low < high,
            ParamKind::Choice(c) => !c.is_empty() && c.iter().all(|v| v.is_finite()),
        };
        if !ok || name.is_empty() {
            return Err(Error::Parameter(format!("invalid search range for {name:?}: {kind:?}")));
        }
        Ok(ParamSpec { name: name.to_string(), kind })
    }

    fn width(&self) -> usize {
        match &self.kind {
            ParamKind::Choice(c) => c.len(),
            _ => 1,
        }
    }

    /// Value at position `u ∈ [0, 1]` along this parameter.
    pub fn at_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            ParamKind::Real { low, high } => low + u * (high - low),
            ParamKind::LogReal { low, high } => {
                libm::exp(libm::log(*low) + u * (libm::log(*high) - libm::log(*low))).clamp(*low, *high)
            }
            ParamKind::Int { low, high } => libm::round(*low as f64 + u * (high - low) as f64),
            ParamKind::Choice(c) => c[((u * c.len() as f64) as usize).min(c.len() - 1)],
        }
    }

    fn encode_into(&self, v: f64, out: &mut Vec<f64>) -> Result<()> {
        let bad = || Error::Parameter(format!("{} = {v} is outside its search range", self.name));
        match &self.kind {
            ParamKind::Real { low, high } => {
                if !(v >= *low && v <= *high) {
                    return Err(bad());
                }
                out.push((v - low) / (high - low));
            }
            ParamKind::LogReal { low, high } => {
                if !(v >= *low && v <= *high) {
                    return Err(bad());
                }
                let (l, h) = (libm::log(*low), libm::log(*high));
                out.push((libm::log(v) - l) / (h - l));
            }
            ParamKind::Int { low, high } => {
                if !(v >= *low as f64 && v <= *high as f64) || v.fract() != 0.0 {
                    return Err(bad());
                }
                out.push((v - *low as f64) / (high - low) as f64);
            }
            ParamKind::Choice(c) => {
                let i = c.iter().position(|x| *x == v).ok_or_else(bad)?;
                out.extend((0..c.len()).map(|j| if j == i { 1.0 } else { 0.0 }));
            }
        }
        Ok(())
    }

    fn decode(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ParamKind::Choice(c) => {
                let mut best = 0;
                for (i, v) in x.iter().enumerate() {
                    if *v > x[best] {
                        best = i;
                    }
                }
                c[best]
            }
            _ => self.at_unit(x[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Parameter("empty search space".into()));
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::Parameter(format!("parameter {:?} listed twice", p.name)));
            }
        }
        Ok(SearchSpace { params })
    }

    /// Length of the encoded vector (one-hot choices take one slot each).
    pub fn encoded_dim(&self) -> usize {
        self.params.iter().map(ParamSpec::width).sum()
    }

    pub fn encode(&self, config: &Config) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.encoded_dim());
        for p in &self.params {
            let v = config.get(&p.name).ok_or_else(|| Error::Parameter(format!("missing value for {}", p.name)))?;
            p.encode_into(*v, &mut out)?;
        }
        Ok(out)
    }

    pub fn decode(&self, x: &[f64]) -> Result<Config> {
        if x.len() != self.encoded_dim() {
            return Err(Error::dim("encoded point", (1, x.len()), (1, self.encoded_dim())));
        }
        let mut out = Config::new();
        let mut at = 0;
        for p in &self.params {
            out.insert(p.name.clone(), p.decode(&x[at..at + p.width()]));
            at += p.width();
        }
        Ok(out)
    }

    /// Config at one unit coordinate per parameter.
    pub fn at_unit(&self, u: &[f64]) -> Config {
        self.params.iter().zip(u).map(|(p, &x)| (p.name.clone(), p.at_unit(x))).collect()
    }

    /// Parses lines of the form `name = real 0 0.5`, `name = log 1e-5 1e-1`,
    /// `name = int 1 10` or `name = choice 32 64 128`. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, rest) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected `name = kind values`, got {line:?}")))?;
            let mut f = rest.split_whitespace();
            let kind = f.next().unwrap_or("");
            let nums: Vec<f64> = f
                .map(|s| s.parse().map_err(|_| Error::parse(i + 1, format!("{s:?} is not a number"))))
                .collect::<Result<_>>()?;
            let pair = |nums: &[f64]| -> Result<(f64, f64)> {
                match nums {
                    [a, b] => Ok((*a, *b)),
                    _ => Err(Error::parse(i + 1, format!("{kind} needs exactly two bounds"))),
                }
            };
            let kind = match kind {
                "real" => pair(&nums).map(|(low, high)| ParamKind::Real { low, high })?,
                "log" => pair(&nums).map(|(low, high)| ParamKind::LogReal { low, high })?,
                "int" => {
                    let (low, high) = pair(&nums)?;
                    if low.fract() != 0.0 || high.fract() != 0.0 {
                        return Err(Error::parse(i + 1, "integer bounds must be whole numbers"));
                    }
                    ParamKind::Int { low: low as i64, high: high as i64 }
                }
                "choice" => ParamKind::Choice(nums),
                other => return Err(Error::parse(i + 1, format!("unknown parameter kind {other:?}"))),
            };
            params.push(ParamSpec::new(name.trim(), kind).map_err(|e| Error::parse(i + 1, format!("{e}")))?);
        }
        SearchSpace::new(params)
    }
}

/// Default ranges for each model family; the tuned reference values lie
/// inside every range.
pub fn default_space(kind: ModelKind) -> SearchSpace {
    let spec = |n: &str, k: ParamKind| ParamSpec::new(n, k).expect("static range");
    let mut params = vec![
        spec("learning_rate", ParamKind::LogReal { low: 1e-5, high: 1e-1 }),
        spec("batch_size", ParamKind::Choice(vec![32.0, 64.0, 128.0, 256.0])),
        spec("dropout", ParamKind::Real { low: 0.0, high: 0.5 }),
    ];
    match kind {
        ModelKind::RelatedNet => {
            params.push(spec("hidden_a", ParamKind::Int { low: 50, high: 1000 }));
            params.push(spec("hidden_b", ParamKind::Int { low: 50, high: 1000 }));
            params.push(spec("k", ParamKind::Int { low: 1, high: 10 }));
        }
        ModelKind::TopKNet => {
            params.push(spec("hidden_a", ParamKind::Int { low: 10, high: 200 }));
            params.push(spec("hidden_b", ParamKind::Int { low: 10, high: 200 }));
            params.push(spec("k", ParamKind::Int { low: 1, high: 10 }));
        }
        ModelKind::AgreemNet => {
            params.push(spec("hidden_a", ParamKind::Int { low: 10, high: 200 }));
            params.push(spec("hidden_b", ParamKind::Int { low: 5, high: 100 }));
            params.push(spec("num_heads", ParamKind::Int { low: 1, high: 16 }));
        }
    }
    SearchSpace { params }
}

/// Writes tuned values into a model and training config. Unknown names are
/// an error, as are names the model kind does not have.
pub fn apply_config(config: &Config, model: &mut ModelConfig, training: &mut TrainingConfig) -> Result<()> {
    for (name, &v) in config {
        let count = || -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Parameter(format!("{name} = {v} must be a positive integer")))
            }
        };
        match (name.as_str(), &mut *model) {
            ("learning_rate", _) => training.learning_rate = v,
            ("batch_size", _) => training.batch_size = count()?,
            ("dropout", ModelConfig::RelatedNet(c)) => c.dropout_p = v,
            ("dropout", ModelConfig::TopKNet(c)) => c.dropout_p = v,
            ("dropout", ModelConfig::AgreemNet(c)) => c.dropout_p = v,
            ("hidden_a", ModelConfig::RelatedNet(c)) => c.hidden_a = count()?,
            ("hidden_a", ModelConfig::TopKNet(c)) => c.hidden_a = count()?,
            ("hidden_a", ModelConfig::AgreemNet(c)) => c.hidden_a = count()?,
            ("hidden_b", ModelConfig::RelatedNet(c)) => c.hidden_b = count()?,
            ("hidden_b", ModelConfig::TopKNet(c)) => c.hidden_b = count()?,
            ("hidden_b", ModelConfig::AgreemNet(c)) => c.hidden_b = count()?,
            ("k", ModelConfig::RelatedNet(c)) => c.k = count()?,
            ("k", ModelConfig::TopKNet(c)) => c.k = count()?,
            ("num_heads", ModelConfig::AgreemNet(c)) => c.num_heads = count()?,
            ("d_k", ModelConfig::AgreemNet(c)) => c.d_k = count()?,
            ("d_v", ModelConfig::AgreemNet(c)) => c.d_v = count()?,
            _ => return Err(Error::Parameter(format!("{name} is not a tunable parameter of {}", model.kind().as_str()))),
        }
    }
    model.validate()?;
    training.validate(if model.kind() == ModelKind::RelatedNet { 2 } else { 3 })
}
