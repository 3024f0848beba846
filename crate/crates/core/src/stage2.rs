//! Stage 2: agree / disagree / discuss over pairs already judged related.
//!
//! [`TopKNet`] concatenates NLI embeddings of the most SIM-similar body
//! sentences. [`AgreemNet`] attends over the whole body with the SIM
//! headline as query, SIM body rows as keys and NLI body rows as values.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{PairEmbeddings, NLI_DIM, SIM_DIM};
use crate::model::{register, Classifier, Forward};
use crate::nn::{attention_param_count, mlp_param_count, AttentionParams, Matrix, Mlp, Mode, Real, Tape};
use crate::relatednet::top_k_similar;
use crate::{Error, Result};

/// Parameter total of [`AgreemNetConfig::default`].
pub const AGREEMNET_DEFAULT_PARAMS: usize = 1_719_239;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKNetConfig {
    pub k: usize,
    /// Width of the first three hidden layers.
    pub hidden_a: usize,
    /// Width of the last hidden layer.
    pub hidden_b: usize,
    pub dropout_p: f64,
    pub sim_dim: usize,
    pub nli_dim: usize,
}

impl Default for TopKNetConfig {
    fn default() -> Self {
        TopKNetConfig { k: 3, hidden_a: 60, hidden_b: 60, dropout_p: 0.301, sim_dim: SIM_DIM, nli_dim: NLI_DIM }
    }
}

impl TopKNetConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [self.k, self.hidden_a, self.hidden_b, self.sim_dim, self.nli_dim];
        if counts.contains(&0) {
            return Err(Error::Parameter(format!("invalid TopKNet config {self:?}")));
        }
        check_dropout(self.dropout_p)
    }

    pub fn widths(&self) -> [usize; 6] {
        let (a, b) = (self.hidden_a, self.hidden_b);
        [(self.k + 1) * self.nli_dim, a, a, a, b, 3]
    }

    pub fn parameter_count(&self) -> usize {
        mlp_param_count(&self.widths())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreemNetConfig {
    pub num_heads: usize,
    pub d_k: usize,
    pub d_v: usize,
    /// Width of the first two hidden layers.
    pub hidden_a: usize,
    /// Width of the last hidden layer.
    pub hidden_b: usize,
    pub dropout_p: f64,
    pub sim_dim: usize,
    pub nli_dim: usize,
}

impl Default for AgreemNetConfig {
    fn default() -> Self {
        AgreemNetConfig {
            num_heads: 11,
            d_k: 64,
            d_v: 64,
            hidden_a: 60,
            hidden_b: 20,
            dropout_p: 0.105,
            sim_dim: SIM_DIM,
            nli_dim: NLI_DIM,
        }
    }
}

impl AgreemNetConfig {
    pub fn validate(&self) -> Result<()> {
        let counts =
            [self.num_heads, self.d_k, self.d_v, self.hidden_a, self.hidden_b, self.sim_dim, self.nli_dim];
        if counts.contains(&0) {
            return Err(Error::Parameter(format!("invalid AgreemNet config {self:?}")));
        }
        check_dropout(self.dropout_p)
    }

    /// `[attended body | NLI head | cosine]` into four dense layers.
    pub fn widths(&self) -> [usize; 5] {
        let a = self.hidden_a;
        [2 * self.nli_dim + 1, a, a, self.hidden_b, 3]
    }

    pub fn attention_parameter_count(&self) -> usize {
        let (s, n) = (self.sim_dim, self.nli_dim);
        attention_param_count(s, s, n, n, self.num_heads, self.d_k, self.d_v)
    }

    pub fn parameter_count(&self) -> usize {
        self.attention_parameter_count() + mlp_param_count(&self.widths())
    }
}

fn check_dropout(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("dropout {p} outside [0, 1)")));
    }
    Ok(())
}

/// Which stage-2 classifier to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage2Kind {
    TopKNet,
    AgreemNet,
}

/// Closed-form parameter total of the default config of `kind`.
pub fn stage2_param_count(kind: Stage2Kind) -> usize {
    match kind {
        Stage2Kind::TopKNet => TopKNetConfig::default().parameter_count(),
        Stage2Kind::AgreemNet => AgreemNetConfig::default().parameter_count(),
    }
}

fn widen_row<T: Real>(row: &[f32], out: &mut Vec<T>) {
    out.extend(row.iter().map(|&v| T::cast(v as f64)));
}

fn check_pair(pair: &PairEmbeddings<'_>, sim_dim: usize, nli_dim: usize) -> Result<()> {
    pair.check_masks()?;
    if pair.sim_head.len() != sim_dim || pair.sim_body.dim() != sim_dim {
        return Err(Error::dim("SIM views", (1, pair.sim_head.len()), (1, sim_dim)));
    }
    if pair.nli_head.len() != nli_dim || pair.nli_body.dim() != nli_dim {
        return Err(Error::dim("NLI views", (1, pair.nli_head.len()), (1, nli_dim)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKNet<T = f32> {
    pub config: TopKNetConfig,
    pub mlp: Mlp<T>,
}

impl<T: Real> TopKNet<T> {
    pub fn init<R: Rng + ?Sized>(config: TopKNetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(TopKNet { config, mlp: Mlp::init(&config.widths(), rng)? })
    }

    pub fn from_parts(config: TopKNetConfig, mlp: Mlp<T>) -> Result<Self> {
        config.validate()?;
        mlp.validate()?;
        if mlp.widths() != config.widths() {
            return Err(Error::Parameter(format!(
                "MLP widths {:?} do not match config widths {:?}",
                mlp.widths(),
                config.widths()
            )));
        }
        Ok(TopKNet { config, mlp })
    }

    /// Body sentence indices fed to the classifier for one pair.
    pub fn selected_sentences(&self, pair: &PairEmbeddings<'_>) -> Result<Vec<usize>> {
        Ok(top_k_similar(pair.sim_head, pair.sim_body, self.config.k)?.indices)
    }

    fn input_matrix(&self, batch: &[PairEmbeddings<'_>]) -> Result<Matrix<T>> {
        let c = &self.config;
        let width = (c.k + 1) * c.nli_dim;
        let mut data = Vec::with_capacity(batch.len() * width);
        for pair in batch {
            check_pair(pair, c.sim_dim, c.nli_dim)?;
            widen_row(pair.nli_head, &mut data);
            for i in self.selected_sentences(pair)? {
                widen_row(pair.nli_body.row(i), &mut data);
            }
        }
        Ok(Matrix::from_raw(batch.len(), width, data))
    }
}

impl<T: Real> Classifier<T> for TopKNet<T> {
    fn num_classes(&self) -> usize {
        3
    }

    fn tensors(&self) -> Vec<&Matrix<T>> {
        self.mlp.tensors().collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        self.mlp.tensors_mut().collect()
    }

    fn forward<'t, R: Rng + ?Sized>(
        &'t self,
        tape: &mut Tape<'t, T>,
        batch: &[PairEmbeddings<'_>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        let params = register(tape, self.tensors());
        let input = tape.constant(self.input_matrix(batch)?);
        let logits = self.mlp.forward_tape(tape, &params, input, self.config.dropout_p, mode, rng)?;
        Ok(Forward { probs: tape.softmax_rows(logits), params })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreemNet<T = f32> {
    pub config: AgreemNetConfig,
    pub attention: AttentionParams<T>,
    pub mlp: Mlp<T>,
}

/// Intermediate values of an AgreemNet forward pass, for inspection.
#[derive(Debug, Clone)]
pub struct AgreemTrace<T> {
    /// Attended NLI body per pair (`n × nli_dim`).
    pub attended: Matrix<T>,
    /// Attention weights laid out `[pair][head][key]` over the batch key
    /// length (the longest real body in the batch).
    pub weights: Vec<f64>,
    pub key_len: usize,
    pub probs: Matrix<T>,
}

impl<T: Real> AgreemNet<T> {
    pub fn init<R: Rng + ?Sized>(config: AgreemNetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (s, n) = (config.sim_dim, config.nli_dim);
        let attention = AttentionParams::init(s, s, n, n, config.num_heads, config.d_k, config.d_v, rng)?;
        Ok(AgreemNet { config, attention, mlp: Mlp::init(&config.widths(), rng)? })
    }

    pub fn from_parts(config: AgreemNetConfig, attention: AttentionParams<T>, mlp: Mlp<T>) -> Result<Self> {
        config.validate()?;
        attention.validate()?;
        mlp.validate()?;
        let (s, n) = (config.sim_dim, config.nli_dim);
        let a = &attention;
        let shapes_ok = a.num_heads == config.num_heads
            && a.d_k == config.d_k
            && a.d_v == config.d_v
            && a.query_proj.cols() == s
            && a.key_proj.cols() == s
            && a.value_proj.cols() == n
            && a.output_proj.rows() == n;
        if !shapes_ok || mlp.widths() != config.widths() {
            return Err(Error::Parameter("AgreemNet tensors do not match config".into()));
        }
        Ok(AgreemNet { config, attention, mlp })
    }

    fn record<'t, R: Rng + ?Sized>(
        &'t self,
        tape: &mut Tape<'t, T>,
        batch: &[PairEmbeddings<'_>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Forward, crate::nn::Var, crate::nn::Var, usize)> {
        let c = &self.config;
        if batch.is_empty() {
            return Err(Error::Parameter("empty batch".into()));
        }
        for pair in batch {
            check_pair(pair, c.sim_dim, c.nli_dim)?;
            if pair.sim_body.real_len() == 0 {
                return Err(Error::Degenerate("body is fully masked".into()));
            }
        }
        let len = batch.iter().map(|p| p.sim_body.real_len()).max().unwrap_or(0);
        let n = batch.len();
        let (mut q_in, mut nli_head) = (Vec::with_capacity(n * c.sim_dim), Vec::with_capacity(n * c.nli_dim));
        let mut k_in = Vec::with_capacity(n * len * c.sim_dim);
        let mut v_in = Vec::with_capacity(n * len * c.nli_dim);
        let mut mask = Vec::with_capacity(n * len);
        for pair in batch {
            widen_row(pair.sim_head, &mut q_in);
            widen_row(pair.nli_head, &mut nli_head);
            for i in 0..len {
                widen_row(pair.sim_body.row(i), &mut k_in);
                widen_row(pair.nli_body.row(i), &mut v_in);
                mask.push(pair.sim_body.mask()[i]);
            }
        }

        let params = register(tape, self.tensors());
        let q_in = tape.constant(Matrix::from_raw(n, c.sim_dim, q_in));
        let k_in = tape.constant(Matrix::from_raw(n * len, c.sim_dim, k_in));
        let v_in = tape.constant(Matrix::from_raw(n * len, c.nli_dim, v_in));
        let nli_head = tape.constant(Matrix::from_raw(n, c.nli_dim, nli_head));

        let q = tape.matmul_t(q_in, params[0])?;
        let k = tape.matmul_t(k_in, params[1])?;
        let v = tape.matmul_t(v_in, params[2])?;
        let heads = tape.attention(q, k, v, mask, c.num_heads, c.d_k, c.d_v)?;
        let attended = tape.matmul_t(heads, params[3])?;
        let cosine = tape.cosine_rows(nli_head, attended)?;
        let input = tape.concat_cols(&[attended, nli_head, cosine])?;
        let logits = self.mlp.forward_tape(tape, &params[4..], input, c.dropout_p, mode, rng)?;
        let probs = tape.softmax_rows(logits);
        Ok((Forward { probs, params }, heads, attended, len))
    }

    /// Eval-mode forward pass exposing the attended body and the weights.
    pub fn trace(&self, batch: &[PairEmbeddings<'_>]) -> Result<AgreemTrace<T>> {
        let mut tape = Tape::new();
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let (fwd, heads, attended, key_len) = self.record(&mut tape, batch, Mode::Eval, &mut rng)?;
        Ok(AgreemTrace {
            attended: tape.value(attended).clone(),
            weights: tape.attention_weights(heads).map(<[f64]>::to_vec).unwrap_or_default(),
            key_len,
            probs: tape.value(fwd.probs).clone(),
        })
    }
}

impl<T: Real> Classifier<T> for AgreemNet<T> {
    fn num_classes(&self) -> usize {
        3
    }

    fn tensors(&self) -> Vec<&Matrix<T>> {
        let mut t: Vec<&Matrix<T>> = self.attention.tensors().into_iter().collect();
        t.extend(self.mlp.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut t: Vec<&mut Matrix<T>> = self.attention.tensors_mut().into_iter().collect();
        t.extend(self.mlp.tensors_mut());
        t
    }

    fn forward<'t, R: Rng + ?Sized>(
        &'t self,
        tape: &mut Tape<'t, T>,
        batch: &[PairEmbeddings<'_>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        Ok(self.record(tape, batch, mode, rng)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pad_truncate_body, PaddedBody};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_counts() {
        assert_eq!(stage2_param_count(Stage2Kind::TopKNet), 195_543);
        assert_eq!(
            TopKNetConfig::default().parameter_count(),
            3072 * 60 + 60 + 3 * (60 * 60 + 60) + 60 * 3 + 3
        );
        // Three 704-row projections of 384/384/768 columns, one 768 × 704
        // output projection, then 1537 → 60 → 60 → 20 → 3.
        let attention = 704 * 384 * 2 + 704 * 768 + 768 * 704;
        let mlp = 1537 * 60 + 60 + 60 * 60 + 60 + 60 * 20 + 20 + 20 * 3 + 3;
        assert_eq!(attention + mlp, AGREEMNET_DEFAULT_PARAMS);
        assert_eq!(stage2_param_count(Stage2Kind::AgreemNet), AGREEMNET_DEFAULT_PARAMS);
    }

    fn body(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> PaddedBody {
        let data: Vec<f32> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        pad_truncate_body(&Matrix::from_vec(rows, dim, data).unwrap()).unwrap()
    }

    fn small_agreem() -> AgreemNetConfig {
        AgreemNetConfig { num_heads: 3, d_k: 4, d_v: 5, hidden_a: 6, hidden_b: 4, dropout_p: 0.1, sim_dim: 5, nli_dim: 7 }
    }

    #[test]
    fn single_sentence_attention_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = AgreemNet::<f64>::init(small_agreem(), &mut rng).unwrap();
        let (sb, nb) = (body(1, 5, &mut rng), body(1, 7, &mut rng));
        let (sh, nh) = ([0.3f32; 5], [0.1f32; 7]);
        let pair = PairEmbeddings { sim_head: &sh, nli_head: &nh, sim_body: &sb, nli_body: &nb };
        let tr = net.trace(&[pair]).unwrap();
        assert_eq!(tr.key_len, 1);
        assert_eq!(tr.weights, vec![1.0; 3]);
        let p = tr.probs.row(0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mask_mismatch_is_integrity_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = TopKNet::<f32>::init(
            TopKNetConfig { k: 2, hidden_a: 4, hidden_b: 4, dropout_p: 0.0, sim_dim: 5, nli_dim: 7 },
            &mut rng,
        )
        .unwrap();
        let (sb, nb) = (body(3, 5, &mut rng), body(4, 7, &mut rng));
        let (sh, nh) = ([0.3f32; 5], [0.1f32; 7]);
        let pair = PairEmbeddings { sim_head: &sh, nli_head: &nh, sim_body: &sb, nli_body: &nb };
        assert!(matches!(net.predict_proba(&[pair]), Err(Error::Integrity(_))));
    }

    #[test]
    fn batching_does_not_change_results() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = AgreemNet::<f64>::init(small_agreem(), &mut rng).unwrap();
        let bodies: Vec<(PaddedBody, PaddedBody)> =
            [2usize, 5, 1].iter().map(|&r| (body(r, 5, &mut rng), body(r, 7, &mut rng))).collect();
        let heads: Vec<([f32; 5], [f32; 7])> = (0..3)
            .map(|i| ([0.1 * i as f32 - 0.2; 5], [0.3 - 0.2 * i as f32; 7]))
            .collect();
        let pairs: Vec<PairEmbeddings<'_>> = bodies
            .iter()
            .zip(&heads)
            .map(|((s, n), (sh, nh))| PairEmbeddings { sim_head: sh, nli_head: nh, sim_body: s, nli_body: n })
            .collect();
        let joint = net.predict_proba(&pairs).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            let alone = net.predict_proba(core::slice::from_ref(p)).unwrap();
            for c in 0..3 {
                assert!((alone.get(0, c) - joint.get(i, c)).abs() < 1e-12);
            }
        }
    }
}
