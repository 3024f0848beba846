//! Model checkpoints in the store framing.
//!
//! The header is a store header with space byte 2 and the unit byte holding
//! the model kind (0 RelatedNet, 1 TopKNet, 2 AgreemNet); its dim field is 0
//! because records differ in width. Each record is
//! `u32 id | u16 rows | u32 cols | rows·cols × f32`. Record 0 is the config
//! as one row of binary32 values; records 1.. are the trainable tensors in
//! declaration order (attention projections before dense layers).

use std::fs;
use std::path::Path;

use bait_core::model::{AnyModel, Classifier, ModelConfig, ModelKind};
use bait_core::relatednet::RelatedNetConfig;
use bait_core::stage2::{AgreemNetConfig, TopKNetConfig};
use rand::rngs::mock::StepRng;

use crate::error::{BaitError, Result, StoreError};
use crate::store::{read_header, write_f32s, write_header, Cursor, Header, SPACE_PARAMS};

fn kind_byte(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::RelatedNet => 0,
        ModelKind::TopKNet => 1,
        ModelKind::AgreemNet => 2,
    }
}

/// f32 → f64 through the shortest decimal form, so 0.277 comes back as
/// 0.277 rather than 0.27700001.
fn widen(v: f32) -> f64 {
    v.to_string().parse().expect("f32 display is parseable")
}

fn config_values(config: &ModelConfig) -> Vec<f32> {
    match config {
        ModelConfig::RelatedNet(c) => {
            vec![c.k as f32, c.hidden_a as f32, c.hidden_b as f32, c.dropout_p as f32, c.sim_dim as f32]
        }
        ModelConfig::TopKNet(c) => vec![
            c.k as f32,
            c.hidden_a as f32,
            c.hidden_b as f32,
            c.dropout_p as f32,
            c.sim_dim as f32,
            c.nli_dim as f32,
        ],
        ModelConfig::AgreemNet(c) => vec![
            c.num_heads as f32,
            c.d_k as f32,
            c.d_v as f32,
            c.hidden_a as f32,
            c.hidden_b as f32,
            c.dropout_p as f32,
            c.sim_dim as f32,
            c.nli_dim as f32,
        ],
    }
}

fn config_from_values(kind: u8, v: &[f32]) -> Result<ModelConfig, StoreError> {
    let expected = match kind {
        0 => 5,
        1 => 6,
        2 => 8,
        b => return Err(StoreError::BadUnit(b)),
    };
    if v.len() != expected {
        return Err(StoreError::Dimension { id: Some(0), expected, found: v.len() });
    }
    let n = |x: f32| -> Result<usize, StoreError> {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(StoreError::Layout(format!("config field {x} is not a count")))
        }
    };
    Ok(match kind {
        0 => ModelConfig::RelatedNet(RelatedNetConfig {
            k: n(v[0])?,
            hidden_a: n(v[1])?,
            hidden_b: n(v[2])?,
            dropout_p: widen(v[3]),
            sim_dim: n(v[4])?,
        }),
        1 => ModelConfig::TopKNet(TopKNetConfig {
            k: n(v[0])?,
            hidden_a: n(v[1])?,
            hidden_b: n(v[2])?,
            dropout_p: widen(v[3]),
            sim_dim: n(v[4])?,
            nli_dim: n(v[5])?,
        }),
        _ => ModelConfig::AgreemNet(AgreemNetConfig {
            num_heads: n(v[0])?,
            d_k: n(v[1])?,
            d_v: n(v[2])?,
            hidden_a: n(v[3])?,
            hidden_b: n(v[4])?,
            dropout_p: widen(v[5]),
            sim_dim: n(v[6])?,
            nli_dim: n(v[7])?,
        }),
    })
}

fn write_record(out: &mut Vec<u8>, id: u32, rows: usize, cols: usize, values: &[f32]) -> Result<(), StoreError> {
    let rows16 = u16::try_from(rows).map_err(|_| StoreError::Layout(format!("tensor {id} has {rows} rows")))?;
    let cols32 = u32::try_from(cols).map_err(|_| StoreError::Layout(format!("tensor {id} has {cols} columns")))?;
    out.extend_from_slice(&id.to_le_bytes());
    out.extend_from_slice(&rows16.to_le_bytes());
    out.extend_from_slice(&cols32.to_le_bytes());
    write_f32s(out, values);
    Ok(())
}

pub fn encode_checkpoint(model: &AnyModel) -> Result<Vec<u8>, StoreError> {
    let tensors = model.tensors();
    let count = u32::try_from(tensors.len() + 1).map_err(|_| StoreError::Layout("too many tensors".into()))?;
    let mut out = Vec::new();
    write_header(&mut out, Header { space: SPACE_PARAMS, unit: kind_byte(model.kind()), dim: 0, count });
    let cfg = config_values(&model.config());
    write_record(&mut out, 0, 1, cfg.len(), &cfg)?;
    for (i, t) in tensors.iter().enumerate() {
        write_record(&mut out, i as u32 + 1, t.rows(), t.cols(), t.as_slice())?;
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<AnyModel, StoreError> {
    let mut c = Cursor::new(bytes);
    let h = read_header(&mut c)?;
    if h.space != SPACE_PARAMS {
        return Err(StoreError::BadSpace(h.space));
    }
    let mut record = |expect_id: u32| -> Result<(usize, usize, Vec<f32>), StoreError> {
        let id = c.u32()?;
        if id != expect_id {
            return Err(StoreError::Layout(format!("expected record {expect_id}, found {id}")));
        }
        let rows = c.u16()? as usize;
        let cols = c.u32()? as usize;
        let values = c.f32s(rows * cols)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite(id));
        }
        Ok((rows, cols, values))
    };
    let (_, _, cfg) = record(0)?;
    let config = config_from_values(h.unit, &cfg)?;
    config.validate().map_err(|e| StoreError::Layout(e.to_string()))?;
    // Every tensor is overwritten below, so the initializer's draws are irrelevant.
    let mut model = config.init(&mut StepRng::new(0, 1)).map_err(|e| StoreError::Layout(e.to_string()))?;
    let n_tensors = model.tensors().len();
    if h.count as usize != n_tensors + 1 {
        return Err(StoreError::Layout(format!(
            "{} records for a model with {n_tensors} tensors",
            h.count
        )));
    }
    for (i, t) in model.tensors_mut().into_iter().enumerate() {
        let (rows, cols, values) = record(i as u32 + 1)?;
        if (rows, cols) != t.shape() {
            return Err(StoreError::Layout(format!(
                "tensor {} is {rows}x{cols}, config implies {}x{}",
                i + 1,
                t.rows(),
                t.cols()
            )));
        }
        t.as_mut_slice().copy_from_slice(&values);
    }
    if c.remaining() > 0 {
        return Err(StoreError::Trailing(c.remaining()));
    }
    Ok(model)
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &AnyModel) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(model).map_err(|source| BaitError::Store { path: path.into(), source })?;
    fs::write(path, bytes).map_err(|e| BaitError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<AnyModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| BaitError::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|source| BaitError::Store { path: path.into(), source })
}
