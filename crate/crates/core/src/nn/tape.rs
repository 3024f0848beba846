//! Reverse-mode gradient tape over the handful of operations the three
//! stance models need.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::ops::{self, attend, attend_backward, dot, matmul_t, LOG_EPS};
use super::{Matrix, Real};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    MatMulT { x: Var, w: Var },
    AddBias { x: Var, b: Var },
    Relu { x: Var },
    Dropout { x: Var, scales: Vec<T> },
    Concat { parts: Vec<Var> },
    Softmax { x: Var },
    WeightedNll { probs: Var, labels: Vec<usize>, sample_weights: Vec<f64> },
    CosineRows { a: Var, b: Var },
    Attention { q: Var, k: Var, v: Var, mask: Vec<bool>, heads: usize, d_k: usize, d_v: usize, alpha: Vec<f64> },
}

struct Node<'a, T: Real> {
    value: Cow<'a, Matrix<T>>,
    op: Op<T>,
}

/// Records a forward computation so that [`Tape::backward`] can return exact
/// gradients of a scalar output with respect to every recorded value.
///
/// Parameters are borrowed for the lifetime of the tape; inputs are owned.
pub struct Tape<'a, T: Real> {
    nodes: Vec<Node<'a, T>>,
}

impl<T: Real> Default for Tape<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a, T: Real> Tape<'a, T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Cow<'a, Matrix<T>>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an owned input.
    pub fn constant(&mut self, value: Matrix<T>) -> Var {
        self.push(Cow::Owned(value), Op::Leaf)
    }

    /// Records a borrowed trainable tensor.
    pub fn param(&mut self, value: &'a Matrix<T>) -> Var {
        self.push(Cow::Borrowed(value), Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    /// Sign of every ReLU input (`true` where positive), in recording order.
    /// Finite-difference checks use it to discard steps that cross a kink.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::Relu { x } = node.op {
                out.extend(self.value(x).as_slice().iter().map(|v| *v > T::zero()));
            }
        }
        out
    }

    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        let y = matmul_t(self.value(x), self.value(w))?;
        Ok(self.push(Cow::Owned(y), Op::MatMulT { x, w }))
    }

    /// Adds a `1 × cols` bias to every row.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(Error::dim("bias broadcast", xv.shape(), bv.shape()));
        }
        let mut y = xv.clone();
        let bias = bv.as_slice();
        for r in 0..y.rows() {
            for (v, &bb) in y.row_mut(r).iter_mut().zip(bias) {
                *v = *v + bb;
            }
        }
        Ok(self.push(Cow::Owned(y), Op::AddBias { x, b }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let y = ops::relu(self.value(x));
        self.push(Cow::Owned(y), Op::Relu { x })
    }

    /// Inverted dropout; returns `x` itself when not training.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, training: bool, rng: &mut R) -> Result<Var> {
        ops::check_dropout_p(p)?;
        if !training || p == 0.0 {
            return Ok(x);
        }
        let xv = self.value(x);
        let scales = ops::dropout_scales::<T, R>(xv.len(), p, rng);
        let data = xv.as_slice().iter().zip(&scales).map(|(&v, &s)| v * s).collect();
        let y = Matrix::from_raw(xv.rows(), xv.cols(), data);
        Ok(self.push(Cow::Owned(y), Op::Dropout { x, scales }))
    }

    /// Column-wise concatenation of equally tall values.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.value(p).rows());
        let mut cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows() != rows {
                return Err(Error::dim("concat rows", v.shape(), (rows, cols)));
            }
            cols += v.cols();
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let y = Matrix::from_raw(rows, cols, data);
        Ok(self.push(Cow::Owned(y), Op::Concat { parts: parts.to_vec() }))
    }

    /// Row-wise softmax.
    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut y = Matrix::zeros(xv.rows(), xv.cols());
        for r in 0..xv.rows() {
            ops::softmax_into(xv.row(r), y.row_mut(r));
        }
        self.push(Cow::Owned(y), Op::Softmax { x })
    }

    /// Batch-mean weighted negative log-likelihood of row-wise probabilities:
    /// `(1/n) Σ_s −w[y_s]·ln(p[s, y_s] + ε)`. Produces a `1 × 1` value.
    pub fn weighted_nll(&mut self, probs: Var, labels: &[usize], class_weights: &[f64]) -> Result<Var> {
        let pv = self.value(probs);
        if labels.len() != pv.rows() || labels.is_empty() {
            return Err(Error::dim("labels per row", (labels.len(), 1), pv.shape()));
        }
        if class_weights.len() != pv.cols() {
            return Err(Error::dim("class weights", (class_weights.len(), 1), pv.shape()));
        }
        let mut total = 0.0;
        let mut sample_weights = Vec::with_capacity(labels.len());
        for (r, &y) in labels.iter().enumerate() {
            total += ops::weighted_cross_entropy(pv.row(r), y, class_weights)?;
            sample_weights.push(class_weights[y]);
        }
        let loss = Matrix::from_raw(1, 1, vec![T::cast(total / labels.len() as f64)]);
        Ok(self.push(
            Cow::Owned(loss),
            Op::WeightedNll { probs, labels: labels.to_vec(), sample_weights },
        ))
    }

    /// Row-wise cosine similarity (`n × 1`); zero-norm rows give 0 and pass
    /// no gradient.
    pub fn cosine_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::dim("row cosine", av.shape(), bv.shape()));
        }
        let mut data = Vec::with_capacity(av.rows());
        for r in 0..av.rows() {
            data.push(T::cast(ops::cosine_similarity(av.row(r), bv.row(r))?.value));
        }
        let y = Matrix::from_raw(av.rows(), 1, data);
        Ok(self.push(Cow::Owned(y), Op::CosineRows { a, b }))
    }

    /// Scaled dot-product attention over projected inputs; see
    /// [`super::multihead_attention`] for the single-query form.
    #[allow(clippy::too_many_arguments)]
    pub fn attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        mask: Vec<bool>,
        heads: usize,
        d_k: usize,
        d_v: usize,
    ) -> Result<Var> {
        let (out, alpha) = attend(self.value(q), self.value(k), self.value(v), &mask, heads, d_k, d_v)?;
        Ok(self.push(Cow::Owned(out), Op::Attention { q, k, v, mask, heads, d_k, d_v, alpha }))
    }

    /// Attention weights recorded by an [`Tape::attention`] node, laid out as
    /// `[sample][head][key]`.
    pub fn attention_weights(&self, v: Var) -> Option<&[f64]> {
        match &self.nodes[v.0].op {
            Op::Attention { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Exact reverse-mode gradients of the `1 × 1` value `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!("backward needs a scalar loss, got {shape:?}")));
        }
        let mut grads: Vec<Option<Matrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::from_raw(1, 1, vec![T::one()]));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                }
                Op::MatMulT { x, w } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    accumulate(&mut grads, *x, grad_matmul_input(&g, wv));
                    accumulate(&mut grads, *w, grad_matmul_weight(&g, xv));
                }
                Op::AddBias { x, b } => {
                    let mut gb = vec![0.0f64; g.cols()];
                    for r in 0..g.rows() {
                        for (acc, &v) in gb.iter_mut().zip(g.row(r)) {
                            *acc += v.widen();
                        }
                    }
                    let gb = Matrix::from_raw(1, g.cols(), gb.into_iter().map(T::cast).collect());
                    accumulate(&mut grads, *b, gb);
                    accumulate(&mut grads, *x, g);
                }
                Op::Relu { x } => {
                    let xv = self.value(*x);
                    let data = g
                        .as_slice()
                        .iter()
                        .zip(xv.as_slice())
                        .map(|(&gv, &v)| if v > T::zero() { gv } else { T::zero() })
                        .collect();
                    accumulate(&mut grads, *x, Matrix::from_raw(g.rows(), g.cols(), data));
                }
                Op::Dropout { x, scales } => {
                    let data = g.as_slice().iter().zip(scales).map(|(&gv, &s)| gv * s).collect();
                    accumulate(&mut grads, *x, Matrix::from_raw(g.rows(), g.cols(), data));
                }
                Op::Concat { parts } => {
                    let mut offset = 0;
                    for &p in parts {
                        let cols = self.value(p).cols();
                        let mut part = Matrix::zeros(g.rows(), cols);
                        for r in 0..g.rows() {
                            part.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        accumulate(&mut grads, p, part);
                    }
                }
                Op::Softmax { x } => {
                    let p = &node.value;
                    let mut gx = Matrix::zeros(p.rows(), p.cols());
                    for r in 0..p.rows() {
                        let inner = dot(g.row(r), p.row(r));
                        for ((o, &gv), &pv) in gx.row_mut(r).iter_mut().zip(g.row(r)).zip(p.row(r)) {
                            *o = T::cast(pv.widen() * (gv.widen() - inner));
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::WeightedNll { probs, labels, sample_weights } => {
                    let pv = self.value(*probs);
                    let upstream = g.get(0, 0).widen() / labels.len() as f64;
                    let mut gp = Matrix::zeros(pv.rows(), pv.cols());
                    for (r, (&y, &w)) in labels.iter().zip(sample_weights).enumerate() {
                        let d = -w / (pv.get(r, y).widen() + LOG_EPS);
                        gp.set(r, y, T::cast(upstream * d));
                    }
                    accumulate(&mut grads, *probs, gp);
                }
                Op::CosineRows { a, b } => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut ga = Matrix::zeros(av.rows(), av.cols());
                    let mut gb = Matrix::zeros(bv.rows(), bv.cols());
                    for r in 0..av.rows() {
                        let (ar, br) = (av.row(r), bv.row(r));
                        let (na2, nb2) = (dot(ar, ar), dot(br, br));
                        if na2 == 0.0 || nb2 == 0.0 {
                            continue;
                        }
                        let (na, nb) = (libm::sqrt(na2), libm::sqrt(nb2));
                        let c = dot(ar, br) / (na * nb);
                        let up = g.get(r, 0).widen();
                        for i in 0..ar.len() {
                            let (x, y) = (ar[i].widen(), br[i].widen());
                            ga.set(r, i, T::cast(up * (y / (na * nb) - c * x / na2)));
                            gb.set(r, i, T::cast(up * (x / (na * nb) - c * y / nb2)));
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Attention { q, k, v, mask, heads, d_k, d_v, alpha } => {
                    let (gq, gk, gv) = attend_backward(
                        self.value(*q),
                        self.value(*k),
                        self.value(*v),
                        mask,
                        alpha,
                        &g,
                        *heads,
                        *d_k,
                        *d_v,
                    );
                    accumulate(&mut grads, *q, gq);
                    accumulate(&mut grads, *k, gk);
                    accumulate(&mut grads, *v, gv);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Matrix<T>>], v: Var, g: Matrix<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// `dX = dY · W`.
fn grad_matmul_input<T: Real>(gy: &Matrix<T>, w: &Matrix<T>) -> Matrix<T> {
    let (n, out, inp) = (gy.rows(), w.rows(), w.cols());
    let mut gx = Vec::with_capacity(n * inp);
    let mut acc = vec![0.0f64; inp];
    for i in 0..n {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (o, &go) in gy.row(i).iter().enumerate().take(out) {
            let go = go.widen();
            if go == 0.0 {
                continue;
            }
            for (a, &wv) in acc.iter_mut().zip(w.row(o)) {
                *a += go * wv.widen();
            }
        }
        gx.extend(acc.iter().map(|&a| T::cast(a)));
    }
    Matrix::from_raw(n, inp, gx)
}

/// `dW = dYᵀ · X`.
fn grad_matmul_weight<T: Real>(gy: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    let (n, out, inp) = (gy.rows(), gy.cols(), x.cols());
    let mut gw = Vec::with_capacity(out * inp);
    let mut acc = vec![0.0f64; inp];
    for o in 0..out {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for i in 0..n {
            let go = gy.get(i, o).widen();
            if go == 0.0 {
                continue;
            }
            for (a, &xv) in acc.iter_mut().zip(x.row(i)) {
                *a += go * xv.widen();
            }
        }
        gw.extend(acc.iter().map(|&a| T::cast(a)));
    }
    Matrix::from_raw(out, inp, gw)
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of a leaf; `None` if the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Matrix<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of a leaf, zero-filled when the loss does not depend on it.
    pub fn take_or_zero(&mut self, v: Var, shape: (usize, usize)) -> Matrix<T> {
        self.grads
            .get_mut(v.0)
            .and_then(Option::take)
            .unwrap_or_else(|| Matrix::zeros(shape.0, shape.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_loss_gradient_is_input() {
        let x = Matrix::<f64>::from_rows(&[[0.5, -2.0, 3.0]]).unwrap();
        let w = Matrix::<f64>::from_rows(&[[1.0, 1.0, 1.0]]).unwrap();
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let wv = tape.param(&w);
        let loss = tape.matmul_t(xv, wv).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(wv).unwrap().as_slice(), x.as_slice());
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let x = Matrix::<f64>::from_rows(&[[1.0, 2.0]]).unwrap();
        let mut tape = Tape::new();
        let xv = tape.constant(x);
        let y = tape.relu(xv);
        assert!(matches!(tape.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn eval_dropout_is_same_node() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Matrix::from_rows(&[[1.0, 2.0]]).unwrap());
        assert_eq!(tape.dropout(x, 0.4, false, &mut rng).unwrap(), x);
    }
}
