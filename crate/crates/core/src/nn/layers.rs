use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::{Matrix, Mode, Real, Tape, Var};
use crate::{Error, Result};

/// Fully-connected layer `y = x·Wᵀ + b`; `weight` is `out × in`, `bias` is
/// `1 × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams<T = f32> {
    pub weight: Matrix<T>,
    pub bias: Matrix<T>,
}

impl<T: Real> DenseLayerParams<T> {
    /// Uniform `±1/√in` initialization for weight and bias.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt(input as f64);
        DenseLayerParams {
            weight: uniform(output, input, bound, rng),
            bias: uniform(1, output, bound, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bias.rows() != 1 || self.bias.cols() != self.weight.rows() {
            return Err(Error::dim("dense bias", self.bias.shape(), self.weight.shape()));
        }
        Ok(())
    }
}

fn uniform<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| T::cast(rng.gen_range(-bound..=bound))).collect();
    Matrix::from_raw(rows, cols, data)
}

/// Projections of multi-head attention. Head `h` reads columns
/// `h·d_k..(h+1)·d_k` of the projected queries/keys and `h·d_v..(h+1)·d_v`
/// of the projected values.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T = f32> {
    pub num_heads: usize,
    pub d_k: usize,
    pub d_v: usize,
    /// `H·d_k × q_dim`
    pub query_proj: Matrix<T>,
    /// `H·d_k × k_dim`
    pub key_proj: Matrix<T>,
    /// `H·d_v × v_dim`
    pub value_proj: Matrix<T>,
    /// `out_dim × H·d_v`
    pub output_proj: Matrix<T>,
}

impl<T: Real> AttentionParams<T> {
    /// Xavier-uniform projections.
    #[allow(clippy::too_many_arguments)]
    pub fn init<R: Rng + ?Sized>(
        q_dim: usize,
        k_dim: usize,
        v_dim: usize,
        out_dim: usize,
        num_heads: usize,
        d_k: usize,
        d_v: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if num_heads == 0 || d_k == 0 || d_v == 0 {
            return Err(Error::Parameter(format!(
                "attention needs heads, d_k, d_v >= 1 (got {num_heads}, {d_k}, {d_v})"
            )));
        }
        let xavier = |rows: usize, cols: usize, rng: &mut R| {
            uniform(rows, cols, libm::sqrt(6.0 / (rows + cols) as f64), rng)
        };
        Ok(AttentionParams {
            num_heads,
            d_k,
            d_v,
            query_proj: xavier(num_heads * d_k, q_dim, rng),
            key_proj: xavier(num_heads * d_k, k_dim, rng),
            value_proj: xavier(num_heads * d_v, v_dim, rng),
            output_proj: xavier(out_dim, num_heads * d_v, rng),
        })
    }

    /// Single head whose four projections are all the `dim × dim` identity.
    pub fn identity(dim: usize) -> Self {
        AttentionParams {
            num_heads: 1,
            d_k: dim,
            d_v: dim,
            query_proj: Matrix::identity(dim),
            key_proj: Matrix::identity(dim),
            value_proj: Matrix::identity(dim),
            output_proj: Matrix::identity(dim),
        }
    }

    pub fn param_count(&self) -> usize {
        self.query_proj.len() + self.key_proj.len() + self.value_proj.len() + self.output_proj.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, dk, dv) = (self.num_heads, self.d_k, self.d_v);
        if h == 0 || dk == 0 || dv == 0 {
            return Err(Error::Parameter(format!("attention dims heads={h} d_k={dk} d_v={dv}")));
        }
        if self.query_proj.rows() != h * dk || self.key_proj.rows() != h * dk {
            return Err(Error::dim("attention q/k projections", self.query_proj.shape(), self.key_proj.shape()));
        }
        if self.value_proj.rows() != h * dv || self.output_proj.cols() != h * dv {
            return Err(Error::dim("attention v/o projections", self.value_proj.shape(), self.output_proj.shape()));
        }
        Ok(())
    }

    pub(crate) fn tensors(&self) -> [&Matrix<T>; 4] {
        [&self.query_proj, &self.key_proj, &self.value_proj, &self.output_proj]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Matrix<T>; 4] {
        [&mut self.query_proj, &mut self.key_proj, &mut self.value_proj, &mut self.output_proj]
    }
}

/// Parameter count of attention projections without biases.
pub fn attention_param_count(
    q_dim: usize,
    k_dim: usize,
    v_dim: usize,
    out_dim: usize,
    num_heads: usize,
    d_k: usize,
    d_v: usize,
) -> usize {
    num_heads * d_k * (q_dim + k_dim) + num_heads * d_v * v_dim + out_dim * num_heads * d_v
}

/// Parameter count of a stack of dense layers with the given widths
/// (`widths[0]` is the input width).
pub fn mlp_param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Dense layers with ReLU and dropout after every hidden layer; the last
/// layer emits logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T = f32> {
    pub layers: Vec<DenseLayerParams<T>>,
}

impl<T: Real> Mlp<T> {
    pub fn init<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Parameter(format!("invalid MLP widths {widths:?}")));
        }
        let layers = widths.windows(2).map(|w| DenseLayerParams::init(w[0], w[1], rng)).collect();
        Ok(Mlp { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.layers.iter().map(|l| l.input_dim()).collect();
        if let Some(last) = self.layers.last() {
            w.push(last.output_dim());
        }
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayerParams::param_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::dim(
                    "consecutive MLP layers",
                    pair[0].weight.shape(),
                    pair[1].weight.shape(),
                ));
            }
        }
        self.layers.iter().try_for_each(DenseLayerParams::validate)
    }

    pub(crate) fn tensors(&self) -> impl Iterator<Item = &Matrix<T>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub(crate) fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Matrix<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    /// Records the forward pass. `params` holds the tape variables of
    /// [`Self::tensors`] in order.
    pub(crate) fn forward_tape<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape<'_, T>,
        params: &[Var],
        input: Var,
        dropout_p: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        debug_assert_eq!(params.len(), 2 * self.layers.len());
        let mut h = input;
        let last = self.layers.len() - 1;
        for (i, pair) in params.chunks_exact(2).enumerate() {
            h = tape.matmul_t(h, pair[0])?;
            h = tape.add_bias(h, pair[1])?;
            if i < last {
                h = tape.relu(h);
                h = tape.dropout(h, dropout_p, mode.is_training(), rng)?;
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mlp_count_matches_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mlp = Mlp::<f32>::init(&[7, 5, 5, 3], &mut rng).unwrap();
        assert_eq!(mlp.param_count(), mlp_param_count(&[7, 5, 5, 3]));
        assert_eq!(mlp.widths(), alloc::vec![7, 5, 5, 3]);
        mlp.validate().unwrap();
    }

    #[test]
    fn attention_count_matches_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = AttentionParams::<f32>::init(6, 6, 10, 10, 3, 4, 5, &mut rng).unwrap();
        assert_eq!(a.param_count(), attention_param_count(6, 6, 10, 10, 3, 4, 5));
        a.validate().unwrap();
        assert!(AttentionParams::<f32>::init(6, 6, 10, 10, 0, 4, 5, &mut rng).is_err());
    }
}
