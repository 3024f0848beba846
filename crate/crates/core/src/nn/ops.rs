//! Forward kernels shared by the eager API and the gradient tape.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{AttentionParams, DenseLayerParams, Matrix, Real};
use crate::{Error, Result};

/// Added inside the logarithm of the cross-entropy.
pub const LOG_EPS: f64 = 1e-12;

/// Dot product with `f64` accumulation over four interleaved partial sums.
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i].widen() * b[i].widen();
        acc[1] += a[i + 1].widen() * b[i + 1].widen();
        acc[2] += a[i + 2].widen() * b[i + 2].widen();
        acc[3] += a[i + 3].widen() * b[i + 3].widen();
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i].widen() * b[i].widen();
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `x · wᵀ` for `x: n × in`, `w: out × in`.
pub(crate) fn matmul_t<T: Real>(x: &Matrix<T>, w: &Matrix<T>) -> Result<Matrix<T>> {
    if x.cols() != w.cols() {
        return Err(Error::dim("x·Wᵀ", x.shape(), w.shape()));
    }
    let (n, out) = (x.rows(), w.rows());
    let mut data = Vec::with_capacity(n * out);
    for i in 0..n {
        let xr = x.row(i);
        for o in 0..out {
            data.push(T::cast(dot(xr, w.row(o))));
        }
    }
    Ok(Matrix::from_raw(n, out, data))
}

/// `y = x·Wᵀ + b`, bias broadcast over rows.
pub fn dense_forward<T: Real>(x: &Matrix<T>, layer: &DenseLayerParams<T>) -> Result<Matrix<T>> {
    let mut y = matmul_t(x, &layer.weight)?;
    let bias = layer.bias.as_slice();
    if bias.len() != y.cols() {
        return Err(Error::dim("dense bias", layer.bias.shape(), y.shape()));
    }
    for r in 0..y.rows() {
        for (v, &b) in y.row_mut(r).iter_mut().zip(bias) {
            *v = *v + b;
        }
    }
    Ok(y)
}

pub fn relu<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub(crate) fn check_dropout_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("dropout probability {p} outside [0, 1)")));
    }
    Ok(())
}

/// Inverted-dropout multipliers: `0` with probability `p`, else `1/(1-p)`.
pub(crate) fn dropout_scales<T: Real, R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<T> {
    let keep = T::cast(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
        .collect()
}

/// Inverted dropout. At inference this returns an exact copy of `x`.
pub fn dropout<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    p: f64,
    training: bool,
    rng: &mut R,
) -> Result<Matrix<T>> {
    check_dropout_p(p)?;
    if !training || p == 0.0 {
        return Ok(x.clone());
    }
    let scales = dropout_scales::<T, R>(x.len(), p, rng);
    let data = x.as_slice().iter().zip(&scales).map(|(&v, &s)| v * s).collect();
    Ok(Matrix::from_raw(x.rows(), x.cols(), data))
}

/// Max-subtracted softmax with an `f64` normalizer.
pub fn softmax<T: Real>(x: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    softmax_into(x, &mut out);
    out
}

pub(crate) fn softmax_into<T: Real>(x: &[T], out: &mut [T]) {
    let max = x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.widen()));
    let mut exps = Vec::with_capacity(x.len());
    let mut total = 0.0f64;
    for v in x {
        let e = libm::exp(v.widen() - max);
        total += e;
        exps.push(e);
    }
    for (o, e) in out.iter_mut().zip(exps) {
        *o = T::cast(e / total);
    }
}

/// `−w[label] · ln(p[label] + ε)`.
pub fn weighted_cross_entropy<T: Real>(probs: &[T], label: usize, weights: &[f64]) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::Index { index: label, len: probs.len() });
    }
    if weights.len() != probs.len() {
        return Err(Error::dim("class weights", (weights.len(), 1), (probs.len(), 1)));
    }
    if weights[label] < 0.0 {
        return Err(Error::Parameter(format!("negative class weight {}", weights[label])));
    }
    Ok(-weights[label] * libm::log(probs[label].widen() + LOG_EPS))
}

/// Cosine similarity; a zero-norm input yields `value = 0` with
/// `degenerate = true`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    pub degenerate: bool,
}

pub fn cosine_similarity<T: Real>(u: &[T], v: &[T]) -> Result<Cosine> {
    if u.len() != v.len() {
        return Err(Error::dim("cosine", (u.len(), 1), (v.len(), 1)));
    }
    let nu = dot(u, u);
    let nv = dot(v, v);
    if nu == 0.0 || nv == 0.0 {
        return Ok(Cosine { value: 0.0, degenerate: true });
    }
    let c = dot(u, v) / (libm::sqrt(nu) * libm::sqrt(nv));
    Ok(Cosine { value: c.clamp(-1.0, 1.0), degenerate: false })
}

/// Scaled dot-product attention over already-projected inputs.
///
/// `q` is `n × H·d_k`, `k` is `(n·L) × H·d_k`, `v` is `(n·L) × H·d_v` and
/// `mask` holds `n·L` flags (`true` = attend). Returns the concatenated head
/// outputs (`n × H·d_v`) and the softmax weights laid out as `[n][H][L]`.
pub(crate) fn attend<T: Real>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    mask: &[bool],
    heads: usize,
    d_k: usize,
    d_v: usize,
) -> Result<(Matrix<T>, Vec<f64>)> {
    let n = q.rows();
    if heads == 0 || d_k == 0 || d_v == 0 {
        return Err(Error::Parameter(format!("attention dims heads={heads} d_k={d_k} d_v={d_v}")));
    }
    if q.cols() != heads * d_k || k.cols() != heads * d_k {
        return Err(Error::dim("attention query/key width", q.shape(), k.shape()));
    }
    if v.cols() != heads * d_v || v.rows() != k.rows() {
        return Err(Error::dim("attention values", v.shape(), k.shape()));
    }
    if n == 0 || k.rows() % n != 0 || mask.len() != k.rows() {
        return Err(Error::dim("attention keys per query", (n, mask.len()), k.shape()));
    }
    let len = k.rows() / n;
    let scale = 1.0 / libm::sqrt(d_k as f64);
    let mut out = Matrix::zeros(n, heads * d_v);
    let mut alpha = vec![0.0f64; n * heads * len];
    let mut acc = vec![0.0f64; d_v];
    for s in 0..n {
        let m = &mask[s * len..(s + 1) * len];
        if !m.iter().any(|&b| b) {
            return Err(Error::Degenerate(format!("sample {s} has every key masked")));
        }
        for h in 0..heads {
            let qh = &q.row(s)[h * d_k..(h + 1) * d_k];
            let a = &mut alpha[(s * heads + h) * len..(s * heads + h + 1) * len];
            let mut max = f64::NEG_INFINITY;
            for i in 0..len {
                if m[i] {
                    let logit = dot(qh, &k.row(s * len + i)[h * d_k..(h + 1) * d_k]) * scale;
                    a[i] = logit;
                    max = max.max(logit);
                }
            }
            let mut total = 0.0;
            for i in 0..len {
                if m[i] {
                    a[i] = libm::exp(a[i] - max);
                    total += a[i];
                } else {
                    a[i] = 0.0;
                }
            }
            acc.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..len {
                if m[i] {
                    a[i] /= total;
                    let vi = &v.row(s * len + i)[h * d_v..(h + 1) * d_v];
                    for (x, &vv) in acc.iter_mut().zip(vi) {
                        *x += a[i] * vv.widen();
                    }
                }
            }
            for (o, &x) in out.row_mut(s)[h * d_v..(h + 1) * d_v].iter_mut().zip(&acc) {
                *o = T::cast(x);
            }
        }
    }
    Ok((out, alpha))
}

/// Gradients of [`attend`] with respect to `q`, `k` and `v`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn attend_backward<T: Real>(
    q: &Matrix<T>,
    k: &Matrix<T>,
    v: &Matrix<T>,
    mask: &[bool],
    alpha: &[f64],
    grad_out: &Matrix<T>,
    heads: usize,
    d_k: usize,
    d_v: usize,
) -> (Matrix<T>, Matrix<T>, Matrix<T>) {
    let n = q.rows();
    let len = k.rows() / n;
    let scale = 1.0 / libm::sqrt(d_k as f64);
    let mut gq = vec![0.0f64; q.len()];
    let mut gk = vec![0.0f64; k.len()];
    let mut gv = vec![0.0f64; v.len()];
    let mut d_alpha = vec![0.0f64; len];
    let (qc, kc, vc) = (q.cols(), k.cols(), v.cols());
    for s in 0..n {
        for h in 0..heads {
            let a = &alpha[(s * heads + h) * len..(s * heads + h + 1) * len];
            let go = &grad_out.row(s)[h * d_v..(h + 1) * d_v];
            let mut weighted = 0.0;
            for i in 0..len {
                d_alpha[i] = 0.0;
                if !mask[s * len + i] {
                    continue;
                }
                let row = s * len + i;
                let vi = &v.row(row)[h * d_v..(h + 1) * d_v];
                d_alpha[i] = dot(go, vi);
                weighted += a[i] * d_alpha[i];
                let gvi = &mut gv[row * vc + h * d_v..row * vc + (h + 1) * d_v];
                for (g, &o) in gvi.iter_mut().zip(go) {
                    *g += a[i] * o.widen();
                }
            }
            let qh = &q.row(s)[h * d_k..(h + 1) * d_k];
            for i in 0..len {
                if !mask[s * len + i] {
                    continue;
                }
                let row = s * len + i;
                let d_logit = a[i] * (d_alpha[i] - weighted) * scale;
                if d_logit == 0.0 {
                    continue;
                }
                let ki = &k.row(row)[h * d_k..(h + 1) * d_k];
                let gqs = &mut gq[s * qc + h * d_k..s * qc + (h + 1) * d_k];
                for (g, &kk) in gqs.iter_mut().zip(ki) {
                    *g += d_logit * kk.widen();
                }
                let gki = &mut gk[row * kc + h * d_k..row * kc + (h + 1) * d_k];
                for (g, &qq) in gki.iter_mut().zip(qh) {
                    *g += d_logit * qq.widen();
                }
            }
        }
    }
    let narrow = |g: Vec<f64>, like: &Matrix<T>| {
        Matrix::from_raw(like.rows(), like.cols(), g.into_iter().map(T::cast).collect())
    };
    (narrow(gq, q), narrow(gk, k), narrow(gv, v))
}

/// Multi-head scaled dot-product attention for a single query.
///
/// Returns the output-projected attended vector and, per head, the softmax
/// weights over the `L` keys (masked keys get exactly zero).
pub fn multihead_attention<T: Real>(
    query: &Matrix<T>,
    keys: &Matrix<T>,
    values: &Matrix<T>,
    key_mask: &[bool],
    params: &AttentionParams<T>,
) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    if query.rows() != 1 {
        return Err(Error::dim("attention query", query.shape(), (1, query.cols())));
    }
    if keys.rows() != values.rows() || keys.rows() != key_mask.len() {
        return Err(Error::dim("attention keys/values", keys.shape(), values.shape()));
    }
    let q = matmul_t(query, &params.query_proj)?;
    let k = matmul_t(keys, &params.key_proj)?;
    let v = matmul_t(values, &params.value_proj)?;
    let (heads, d_k, d_v) = (params.num_heads, params.d_k, params.d_v);
    let (attended, alpha) = attend(&q, &k, &v, key_mask, heads, d_k, d_v)?;
    let out = matmul_t(&attended, &params.output_proj)?;
    let len = keys.rows();
    let weights = (0..heads)
        .map(|h| alpha[h * len..(h + 1) * len].iter().map(|&a| T::cast(a)).collect())
        .collect();
    Ok((out.into_vec(), weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    fn layer(w: &[&[f64]], b: &[f64]) -> DenseLayerParams<f64> {
        DenseLayerParams { weight: m(w), bias: Matrix::row_vector(b.to_vec()) }
    }

    #[test]
    fn dense_identity_and_analytic() {
        let y = dense_forward(&m(&[&[1.0, 2.0]]), &layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 2.0]);
        let y = dense_forward(&m(&[&[1.0, 1.0]]), &layer(&[&[2.0, 3.0]], &[1.0])).unwrap();
        assert_eq!(y.as_slice(), &[6.0]);
    }

    #[test]
    fn dense_matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rand_m = |r: usize, c: usize, rng: &mut ChaCha8Rng| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
        };
        let x: Matrix<f64> = rand_m(4, 8, &mut rng);
        let l = DenseLayerParams { weight: rand_m(5, 8, &mut rng), bias: rand_m(1, 5, &mut rng) };
        let y = dense_forward(&x, &l).unwrap();
        for i in 0..4 {
            for o in 0..5 {
                let mut s = l.bias.get(0, o);
                for j in 0..8 {
                    s += x.get(i, j) * l.weight.get(o, j);
                }
                assert!((y.get(i, o) - s).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dense_shape_error_names_both_shapes() {
        let err = dense_forward(&m(&[&[1.0, 2.0, 3.0]]), &layer(&[&[1.0, 0.0]], &[0.0])).unwrap_err();
        assert_eq!(err, Error::dim("x·Wᵀ", (1, 3), (1, 2)));
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&m(&[&[-1.0, 0.0, 2.0]])).as_slice(), &[0.0, 0.0, 2.0]);
        assert!(relu(&m(&[&[-1.0, -3.0]])).as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(relu(&m(&[&[1.0, 3.0]])).as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn dropout_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = m(&[&[1.0, -2.0, 3.5]]);
        assert_eq!(dropout(&x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(dropout(&x, 0.7, false, &mut rng).unwrap(), x);
        assert!(dropout(&x, 1.0, true, &mut rng).is_err());
        assert!(dropout(&x, -0.1, true, &mut rng).is_err());
        let ones = Matrix::<f32>::from_vec(1, 100_000, vec![1.0; 100_000]).unwrap();
        let y = dropout(&ones, 0.5, true, &mut rng).unwrap();
        let mean = y.as_slice().iter().map(|&v| v as f64).sum::<f64>() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[0.0f64, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[libm::log(2.0), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
        let a = softmax(&[0.3f64, -1.2, 2.0]);
        let b = softmax(&[1000.3f64, 998.8, 1002.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn cross_entropy_cases() {
        let l = weighted_cross_entropy(&[1.0f64, 0.0], 0, &[1.0, 1.0]).unwrap();
        assert!(l.abs() < 1e-11);
        let third = 1.0 / 3.0;
        let l = weighted_cross_entropy(&[third; 3], 2, &[1.0; 3]).unwrap();
        assert!((l - libm::log(3.0)).abs() < 1e-9);
        let l2 = weighted_cross_entropy(&[third; 3], 2, &[1.0, 1.0, 2.0]).unwrap();
        assert!((l2 - 2.0 * l).abs() < 1e-12);
        assert_eq!(
            weighted_cross_entropy(&[0.5f64, 0.5], 2, &[1.0, 1.0]),
            Err(Error::Index { index: 2, len: 2 })
        );
    }

    #[test]
    fn cosine_cases() {
        let c = |u: &[f64], v: &[f64]| cosine_similarity(u, v).unwrap().value;
        assert_eq!(c(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((c(&[1.0, 2.0], &[2.0, 4.0]) - 1.0).abs() < 1e-12);
        assert!((c(&[1.0, 0.0], &[-1.0, 0.0]) + 1.0).abs() < 1e-12);
        let d = cosine_similarity(&[0.0f64, 0.0], &[1.0, 0.0]).unwrap();
        assert!(d.degenerate && d.value == 0.0);
        assert!(cosine_similarity(&[1.0f64], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn attention_rejects_fully_masked() {
        let p = AttentionParams::<f64>::identity(2);
        let q = m(&[&[1.0, 0.0]]);
        let k = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let err = multihead_attention(&q, &k, &k, &[false, false], &p).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn attention_equal_keys_average_values() {
        let p = AttentionParams::<f64>::identity(2);
        let q = m(&[&[0.3, -0.4]]);
        let k = m(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        let v = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 9.0]]);
        let (out, w) = multihead_attention(&q, &k, &v, &[true; 3], &p).unwrap();
        assert!((out[0] - 3.0).abs() < 1e-12 && (out[1] - 5.0).abs() < 1e-12);
        assert!(w[0].iter().all(|&a| (a - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn attention_sharp_limit_picks_matching_key() {
        let p = AttentionParams::<f64>::identity(2);
        let q = m(&[&[1.0, 0.0]]);
        let k = m(&[&[0.0, 1.0], &[50.0, 0.0], &[0.0, -1.0]]);
        let v = m(&[&[1.0, 1.0], &[7.0, -3.0], &[2.0, 5.0]]);
        let (out, _) = multihead_attention(&q, &k, &v, &[true; 3], &p).unwrap();
        assert!((out[0] - 7.0).abs() < 1e-3 && (out[1] + 3.0).abs() < 1e-3);
    }
}
