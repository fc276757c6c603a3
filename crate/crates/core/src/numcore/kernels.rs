//! Tape-free numeric kernels shared by the forward and backward passes.

use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::error::{Error, Result};

/// Dot product with eight independent accumulators.
///
/// The summation order is fixed, so results are reproducible bit for bit.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut s = [0.0f64; 8];
    let mut i = 0;
    while i + 8 <= n {
        let x: &[f64; 8] = a[i..i + 8].try_into().expect("eight lanes");
        let y: &[f64; 8] = b[i..i + 8].try_into().expect("eight lanes");
        for k in 0..8 {
            s[k] += x[k] * y[k];
        }
        i += 8;
    }
    let mut tail = 0.0;
    while i < n {
        tail += a[i] * b[i];
        i += 1;
    }
    (((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]))) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `W (rows x cols) · x`
pub fn matvec_into(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// `xᵀ W` for `W (rows x cols)`.
pub fn vecmat_into(x: &[f64], w: &[f64], cols: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (r, &xr) in x.iter().enumerate() {
        axpy(out, xr, &w[r * cols..(r + 1) * cols]);
    }
}

/// Standard matrix product of two rank-2 tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.shape()[1] != b.shape()[0] {
        return Err(Error::shape("matmul", a.shape(), b.shape()));
    }
    let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let mut out = vec![0.0; m * n];
    matmul_into(a.data(), b.data(), m, k, n, &mut out);
    Tensor::matrix(m, n, out)
}

pub(crate) fn matmul_into(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        row.iter_mut().for_each(|o| *o = 0.0);
        for p in 0..k {
            axpy(row, a[i * k + p], &b[p * n..(p + 1) * n]);
        }
    }
}

/// Softmax over the entries whose `masked` flag is false; masked entries are
/// exactly zero. The unmasked maximum is subtracted before exponentiating.
pub fn masked_softmax(v: &[f64], masked: &[bool]) -> Result<Vec<f64>> {
    if v.len() != masked.len() {
        return Err(Error::shape("masked_softmax", &[v.len()], &[masked.len()]));
    }
    let mut out = vec![0.0; v.len()];
    masked_softmax_into(v, masked, &mut out)?;
    Ok(out)
}

pub(crate) fn masked_softmax_into(v: &[f64], masked: &[bool], out: &mut [f64]) -> Result<()> {
    let max = v
        .iter()
        .zip(masked)
        .filter(|(_, &m)| !m)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Domain("softmax over a fully masked vector".into()));
    }
    let mut total = 0.0;
    for ((o, &x), &m) in out.iter_mut().zip(v).zip(masked) {
        *o = if m { 0.0 } else { libm::exp(x - max) };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

pub(crate) fn log_softmax_into(v: &[f64], out: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = v.iter().map(|&x| libm::exp(x - max)).sum();
    let lse = max + libm::log(total);
    for (o, &x) in out.iter_mut().zip(v) {
        *o = x - lse;
    }
}

/// Hidden and cell vectors of an LSTM.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

/// One step of a four-gate LSTM without peepholes.
///
/// `w` has shape `[4H, X + H]` with gate blocks ordered input, forget,
/// candidate, output; `b` has length `4H`.
pub fn lstm_cell(x: &[f64], prev: &LstmState, w: &Tensor, b: &Tensor) -> Result<LstmState> {
    let hdim = prev.h.len();
    check_lstm_shapes(x.len(), hdim, prev.c.len(), w.shape(), b.shape())?;
    let mut out = vec![0.0; 2 * hdim];
    let mut cache = vec![0.0; 5 * hdim];
    lstm_forward(x, &prev.h, &prev.c, w.data(), b.data(), &mut out, &mut cache);
    let c = out.split_off(hdim);
    Ok(LstmState { h: out, c })
}

pub(crate) fn check_lstm_shapes(
    xdim: usize,
    hdim: usize,
    cdim: usize,
    w: &[usize],
    b: &[usize],
) -> Result<()> {
    if cdim != hdim {
        return Err(Error::shape("lstm_cell", &[hdim], &[cdim]));
    }
    if w.len() != 2 || w[0] != 4 * hdim || w[1] != xdim + hdim {
        return Err(Error::shape("lstm_cell", w, &[4 * hdim, xdim + hdim]));
    }
    if b != [4 * hdim] {
        return Err(Error::shape("lstm_cell", b, &[4 * hdim]));
    }
    Ok(())
}

/// Writes `[h; c]` into `out` and the activations `[i, f, g, o, tanh(c)]`
/// into `cache`.
pub(crate) fn lstm_forward(
    x: &[f64],
    h: &[f64],
    c: &[f64],
    w: &[f64],
    b: &[f64],
    out: &mut [f64],
    cache: &mut [f64],
) {
    let hd = h.len();
    let xd = x.len();
    let cols = xd + hd;
    for r in 0..4 * hd {
        let row = &w[r * cols..(r + 1) * cols];
        let pre = dot(&row[..xd], x) + dot(&row[xd..], h) + b[r];
        cache[r] = if r / hd == 2 { libm::tanh(pre) } else { sigmoid(pre) };
    }
    for j in 0..hd {
        let (i, f, g, o) = (cache[j], cache[hd + j], cache[2 * hd + j], cache[3 * hd + j]);
        let cn = f * c[j] + i * g;
        let tc = libm::tanh(cn);
        cache[4 * hd + j] = tc;
        out[j] = o * tc;
        out[hd + j] = cn;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matmul_identity_and_inner_product() {
        let id = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = Tensor::matrix(2, 2, vec![2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(matmul(&id, &m).unwrap(), m);
        let a = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        let b = Tensor::matrix(2, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        match matmul(&a, &b) {
            Err(Error::Shape { left, right, .. }) => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![2, 3]);
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn masked_softmax_examples() {
        assert_eq!(masked_softmax(&[0.0, 0.0], &[false, false]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            masked_softmax(&[1.0, 1.0, 1.0], &[false, false, true]).unwrap(),
            vec![0.5, 0.5, 0.0]
        );
        let p = masked_softmax(&[core::f64::consts::LN_2, 0.0], &[false, false]).unwrap();
        assert!(close(p[0], 2.0 / 3.0, 1e-15) && close(p[1], 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn masked_softmax_rejects_fully_masked() {
        assert!(matches!(
            masked_softmax(&[1.0, 2.0], &[true, true]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn masked_softmax_is_stable_for_huge_logits() {
        let p = masked_softmax(&[1000.0, 999.0, -1e300], &[false, false, false]).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert!(close(p.iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn lstm_zero_weights() {
        let w = Tensor::zeros(&[4, 2]);
        let b = Tensor::zeros(&[4]);
        let s = lstm_cell(&[0.3], &LstmState { h: vec![0.0], c: vec![0.0] }, &w, &b).unwrap();
        assert_eq!(s.h, vec![0.0]);
        assert_eq!(s.c, vec![0.0]);
        // gates all sigmoid(0) = 0.5, candidate tanh(0) = 0: c = 0.5 * 2 = 1
        let s = lstm_cell(&[0.3], &LstmState { h: vec![0.0], c: vec![2.0] }, &w, &b).unwrap();
        assert_eq!(s.c, vec![1.0]);
        assert!(close(s.h[0], 0.380_797_077_977_882_3, 1e-12));
    }

    #[test]
    fn lstm_shape_mismatch() {
        let w = Tensor::zeros(&[4, 3]);
        let b = Tensor::zeros(&[4]);
        let prev = LstmState { h: vec![0.0], c: vec![0.0] };
        assert!(matches!(lstm_cell(&[1.0], &prev, &w, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!(close(dot(&a, &b), naive, 1e-12));
    }
}
