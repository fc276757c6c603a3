use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use super::kernels::{
    axpy, check_lstm_shapes, dot, log_softmax_into, lstm_forward, masked_softmax_into,
    matmul_into, matvec_into, sigmoid, vecmat_into,
};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatVec(Var, Var),
    VecMat(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    Tanh(Var),
    Sigmoid(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Stack(Vec<Var>),
    GatherRow(Var, usize),
    Softmax(Var),
    LogSoftmax(Var),
    Pick(Var, usize),
    Lstm {
        x: Var,
        h: Var,
        c: Var,
        w: Var,
        b: Var,
        cache: Vec<f64>,
    },
    Mean(Vec<Var>),
    Max(Vec<Var>, Vec<usize>),
}

#[derive(Debug)]
struct Node<'p> {
    shape: Vec<usize>,
    value: Cow<'p, [f64]>,
    op: Op,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

/// Reverse-mode differentiation tape.
///
/// Parameters are borrowed for the lifetime `'p`, so binding a model to a
/// fresh tape costs nothing. Nodes are stored in execution order, which is a
/// topological order of the computation.
#[derive(Debug)]
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
    grad_enabled: bool,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            grad_enabled: true,
        }
    }

    /// A tape that stores values only; nothing is differentiable.
    pub fn no_grad() -> Self {
        Tape {
            nodes: Vec::new(),
            grad_enabled: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a borrowed trainable tensor.
    pub fn param(&mut self, t: &'p Tensor) -> Var {
        let rg = self.grad_enabled;
        self.leaf(t.shape().to_vec(), Cow::Borrowed(t.data()), rg)
    }

    /// Registers an owned leaf, optionally differentiable.
    pub fn input(&mut self, t: Tensor, requires_grad: bool) -> Var {
        let rg = requires_grad && self.grad_enabled;
        let shape = t.shape().to_vec();
        self.leaf(shape, Cow::Owned(t.into_data()), rg)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.input(t, false)
    }

    pub fn constant_vec(&mut self, data: Vec<f64>) -> Var {
        self.constant(Tensor::vector(data))
    }

    fn leaf(&mut self, shape: Vec<usize>, value: Cow<'p, [f64]>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            shape,
            value,
            op: Op::Leaf,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, inputs: &[Var]) -> Var {
        let requires_grad =
            self.grad_enabled && inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            shape,
            value: Cow::Owned(value),
            op: if requires_grad { op } else { Op::Leaf },
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.to_vec()).expect("node shapes are validated")
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last `backward` target with respect to `v`; zero if
    /// `v` is not an ancestor of it.
    pub fn grad(&self, v: Var) -> Vec<f64> {
        let n = &self.nodes[v.0];
        n.grad.clone().unwrap_or_else(|| vec![0.0; n.value.len()])
    }

    // ---- primitives -------------------------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), m, k, n, &mut out);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), &[a, b]))
    }

    /// `W x` for a rank-2 `W` and a vector `x`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (sw, sx) = (self.shape(w), self.shape(x));
        if sw.len() != 2 || sx.len() != 1 || sw[1] != sx[0] {
            return Err(Error::shape("matvec", sw, sx));
        }
        let (m, n) = (sw[0], sw[1]);
        let mut out = vec![0.0; m];
        matvec_into(self.value(w), n, self.value(x), &mut out);
        Ok(self.push(vec![m], out, Op::MatVec(w, x), &[w, x]))
    }

    /// `xᵀ W` for a vector `x` and a rank-2 `W`.
    pub fn vecmat(&mut self, x: Var, w: Var) -> Result<Var> {
        let (sx, sw) = (self.shape(x), self.shape(w));
        if sw.len() != 2 || sx.len() != 1 || sw[0] != sx[0] {
            return Err(Error::shape("vecmat", sx, sw));
        }
        let n = sw[1];
        let mut out = vec![0.0; n];
        vecmat_into(self.value(x), self.value(w), n, &mut out);
        Ok(self.push(vec![n], out, Op::VecMat(x, w), &[x, w]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.zip(a, b, |x, y| x + y);
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, Op::Add(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.zip(a, b, |x, y| x * y);
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).iter().map(|x| x * s).collect();
        let shape = self.shape(a).to_vec();
        self.push(shape, out, Op::Scale(a, s), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(vec![1], vec![s], Op::Sum(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&x| libm::tanh(x)).collect();
        let shape = self.shape(a).to_vec();
        self.push(shape, out, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        let shape = self.shape(a).to_vec();
        self.push(shape, out, Op::Sigmoid(a), &[a])
    }

    /// Joins vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        for &p in parts {
            if self.shape(p).len() != 1 {
                return Err(Error::shape("concat", self.shape(p), &[]));
            }
            out.extend_from_slice(self.value(p));
        }
        if out.is_empty() {
            return Err(Error::shape("concat", &[], &[]));
        }
        Ok(self.push(vec![out.len()], out, Op::Concat(parts.to_vec()), parts))
    }

    /// Contiguous sub-vector `a[start..start + len]`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.value(a).len();
        if self.shape(a).len() != 1 || len == 0 || start + len > n {
            return Err(Error::shape("slice", self.shape(a), &[start, len]));
        }
        let out = self.value(a)[start..start + len].to_vec();
        Ok(self.push(vec![len], out, Op::Slice(a, start), &[a]))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = *rows.first().ok_or_else(|| Error::shape("stack", &[], &[]))?;
        let n = self.value(first).len();
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if self.shape(r) != [n] {
                return Err(Error::shape("stack", self.shape(first), self.shape(r)));
            }
            out.extend_from_slice(self.value(r));
        }
        Ok(self.push(vec![rows.len(), n], out, Op::Stack(rows.to_vec()), rows))
    }

    pub fn gather_row(&mut self, table: Var, row: usize) -> Result<Var> {
        let s = self.shape(table);
        if s.len() != 2 {
            return Err(Error::shape("gather_row", s, &[row]));
        }
        if row >= s[0] {
            return Err(Error::Lookup(alloc::format!(
                "row {row} out of range for table with {} rows",
                s[0]
            )));
        }
        let cols = s[1];
        let out = self.value(table)[row * cols..(row + 1) * cols].to_vec();
        Ok(self.push(vec![cols], out, Op::GatherRow(table, row), &[table]))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        self.masked_softmax(a, &vec![false; n])
    }

    /// Softmax restricted to entries whose `masked` flag is false.
    pub fn masked_softmax(&mut self, a: Var, masked: &[bool]) -> Result<Var> {
        if self.shape(a).len() != 1 {
            return Err(Error::shape("masked_softmax", self.shape(a), &[masked.len()]));
        }
        if self.value(a).len() != masked.len() {
            return Err(Error::shape("masked_softmax", self.shape(a), &[masked.len()]));
        }
        let mut out = vec![0.0; masked.len()];
        masked_softmax_into(self.value(a), masked, &mut out)?;
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, Op::Softmax(a), &[a]))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        if self.shape(a).len() != 1 {
            return Err(Error::shape("log_softmax", self.shape(a), &[]));
        }
        let mut out = vec![0.0; self.value(a).len()];
        log_softmax_into(self.value(a), &mut out);
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, Op::LogSoftmax(a), &[a]))
    }

    /// Scalar `a[idx]`.
    pub fn pick(&mut self, a: Var, idx: usize) -> Result<Var> {
        let n = self.value(a).len();
        if idx >= n {
            return Err(Error::Lookup(alloc::format!("index {idx} out of range for length {n}")));
        }
        let x = self.value(a)[idx];
        Ok(self.push(vec![1], vec![x], Op::Pick(a, idx), &[a]))
    }

    /// One LSTM step; returns `(h, c)`.
    pub fn lstm_cell(&mut self, x: Var, h: Var, c: Var, w: Var, b: Var) -> Result<(Var, Var)> {
        let (xd, hd) = (self.value(x).len(), self.value(h).len());
        check_lstm_shapes(xd, hd, self.value(c).len(), self.shape(w), self.shape(b))?;
        let mut out = vec![0.0; 2 * hd];
        let mut cache = vec![0.0; 5 * hd];
        lstm_forward(
            self.value(x),
            self.value(h),
            self.value(c),
            self.value(w),
            self.value(b),
            &mut out,
            &mut cache,
        );
        let both = self.push(
            vec![2 * hd],
            out,
            Op::Lstm {
                x,
                h,
                c,
                w,
                b,
                cache,
            },
            &[x, h, c, w, b],
        );
        Ok((self.slice(both, 0, hd)?, self.slice(both, hd, hd)?))
    }

    /// Coordinate-wise mean of equal-shape vectors, summed in the given order.
    pub fn mean(&mut self, parts: &[Var]) -> Result<Var> {
        let n = self.check_parts("mean", parts)?;
        let mut acc = vec![0.0; n];
        for &p in parts {
            for (a, x) in acc.iter_mut().zip(self.value(p)) {
                *a += x;
            }
        }
        let m = parts.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        Ok(self.push(vec![n], acc, Op::Mean(parts.to_vec()), parts))
    }

    /// Coordinate-wise maximum; ties go to the earliest part.
    pub fn max(&mut self, parts: &[Var]) -> Result<Var> {
        let n = self.check_parts("max", parts)?;
        let mut acc = self.value(parts[0]).to_vec();
        let mut arg = vec![0usize; n];
        for (k, &p) in parts.iter().enumerate().skip(1) {
            for (d, &x) in self.value(p).iter().enumerate() {
                if x > acc[d] {
                    acc[d] = x;
                    arg[d] = k;
                }
            }
        }
        Ok(self.push(vec![n], acc, Op::Max(parts.to_vec(), arg), parts))
    }

    fn check_parts(&self, op: &'static str, parts: &[Var]) -> Result<usize> {
        let first = *parts.first().ok_or_else(|| Error::shape(op, &[], &[]))?;
        let s = self.shape(first);
        if s.len() != 1 {
            return Err(Error::shape(op, s, &[]));
        }
        for &p in parts {
            if self.shape(p) != s {
                return Err(Error::shape(op, s, self.shape(p)));
            }
        }
        Ok(s[0])
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect()
    }

    // ---- reverse pass -----------------------------------------------------

    /// Populates gradients of `loss` with respect to every differentiable
    /// ancestor. Any previous gradients are discarded first, so repeated calls
    /// give identical results.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::Contract(alloc::format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            let op = core::mem::replace(&mut self.nodes[i].op, Op::Leaf);
            self.propagate(i, &op, &g);
            self.nodes[i].op = op;
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    /// Runs `f` on the gradient buffer of `v` (allocating it if needed) while
    /// giving read access to all node values.
    fn accum(&mut self, v: Var, f: impl FnOnce(&mut [f64], &[Node<'p>])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let n = self.nodes[v.0].value.len();
        let mut buf = self.nodes[v.0].grad.take().unwrap_or_else(|| vec![0.0; n]);
        f(&mut buf, &self.nodes);
        self.nodes[v.0].grad = Some(buf);
    }

    fn propagate(&mut self, out: usize, op: &Op, g: &[f64]) {
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (self.nodes[a.0].shape[0], self.nodes[a.0].shape[1]);
                let n = self.nodes[b.0].shape[1];
                let (a, b) = (*a, *b);
                self.accum(a, |ga, nodes| {
                    let bv = &nodes[b.0].value;
                    for i in 0..m {
                        for p in 0..k {
                            ga[i * k + p] += dot(&g[i * n..(i + 1) * n], &bv[p * n..(p + 1) * n]);
                        }
                    }
                });
                self.accum(b, |gb, nodes| {
                    let av = &nodes[a.0].value;
                    for i in 0..m {
                        for p in 0..k {
                            axpy(&mut gb[p * n..(p + 1) * n], av[i * k + p], &g[i * n..(i + 1) * n]);
                        }
                    }
                });
            }
            Op::MatVec(w, x) => {
                let n = self.nodes[w.0].shape[1];
                let (w, x) = (*w, *x);
                self.accum(w, |gw, nodes| {
                    let xv = &nodes[x.0].value;
                    for (r, &gr) in g.iter().enumerate() {
                        axpy(&mut gw[r * n..(r + 1) * n], gr, xv);
                    }
                });
                self.accum(x, |gx, nodes| {
                    let wv = &nodes[w.0].value;
                    for (r, &gr) in g.iter().enumerate() {
                        axpy(gx, gr, &wv[r * n..(r + 1) * n]);
                    }
                });
            }
            Op::VecMat(x, w) => {
                let n = self.nodes[w.0].shape[1];
                let (w, x) = (*w, *x);
                self.accum(x, |gx, nodes| {
                    let wv = &nodes[w.0].value;
                    for (r, gxr) in gx.iter_mut().enumerate() {
                        *gxr += dot(&wv[r * n..(r + 1) * n], g);
                    }
                });
                self.accum(w, |gw, nodes| {
                    let xv = &nodes[x.0].value;
                    for (r, &xr) in xv.iter().enumerate() {
                        axpy(&mut gw[r * n..(r + 1) * n], xr, g);
                    }
                });
            }
            Op::Add(a, b) => {
                self.accum(*a, |ga, _| axpy(ga, 1.0, g));
                self.accum(*b, |gb, _| axpy(gb, 1.0, g));
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                self.accum(a, |ga, nodes| {
                    for ((gi, &gv), &bv) in ga.iter_mut().zip(g).zip(nodes[b.0].value.iter()) {
                        *gi += gv * bv;
                    }
                });
                self.accum(b, |gb, nodes| {
                    for ((gi, &gv), &av) in gb.iter_mut().zip(g).zip(nodes[a.0].value.iter()) {
                        *gi += gv * av;
                    }
                });
            }
            Op::Scale(a, s) => self.accum(*a, |ga, _| axpy(ga, *s, g)),
            Op::Sum(a) => self.accum(*a, |ga, _| ga.iter_mut().for_each(|x| *x += g[0])),
            Op::Tanh(a) => self.accum(*a, |ga, nodes| {
                for ((gi, &gv), &y) in ga.iter_mut().zip(g).zip(nodes[out].value.iter()) {
                    *gi += gv * (1.0 - y * y);
                }
            }),
            Op::Sigmoid(a) => self.accum(*a, |ga, nodes| {
                for ((gi, &gv), &y) in ga.iter_mut().zip(g).zip(nodes[out].value.iter()) {
                    *gi += gv * y * (1.0 - y);
                }
            }),
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let n = self.nodes[p.0].value.len();
                    self.accum(p, |gp, _| axpy(gp, 1.0, &g[off..off + n]));
                    off += n;
                }
            }
            Op::Slice(a, start) => {
                let s = *start;
                self.accum(*a, |ga, _| axpy(&mut ga[s..s + g.len()], 1.0, g));
            }
            Op::Stack(rows) => {
                for (i, &r) in rows.iter().enumerate() {
                    let n = self.nodes[r.0].value.len();
                    self.accum(r, |gr, _| axpy(gr, 1.0, &g[i * n..(i + 1) * n]));
                }
            }
            Op::GatherRow(t, row) => {
                let n = g.len();
                let r = *row;
                self.accum(*t, |gt, _| axpy(&mut gt[r * n..(r + 1) * n], 1.0, g));
            }
            Op::Softmax(a) => self.accum(*a, |ga, nodes| {
                let y = &nodes[out].value;
                let inner = dot(y, g);
                for ((gi, &yi), &gv) in ga.iter_mut().zip(y.iter()).zip(g) {
                    *gi += yi * (gv - inner);
                }
            }),
            Op::LogSoftmax(a) => self.accum(*a, |ga, nodes| {
                let y = &nodes[out].value;
                let total: f64 = g.iter().sum();
                for ((gi, &yi), &gv) in ga.iter_mut().zip(y.iter()).zip(g) {
                    *gi += gv - libm::exp(yi) * total;
                }
            }),
            Op::Pick(a, idx) => {
                let i = *idx;
                self.accum(*a, |ga, _| ga[i] += g[0]);
            }
            Op::Lstm {
                x,
                h,
                c,
                w,
                b,
                cache,
            } => self.lstm_backward(*x, *h, *c, *w, *b, cache, g),
            Op::Mean(parts) => {
                let s = 1.0 / parts.len() as f64;
                for &p in parts {
                    self.accum(p, |gp, _| axpy(gp, s, g));
                }
            }
            Op::Max(parts, arg) => {
                for (k, &p) in parts.iter().enumerate() {
                    self.accum(p, |gp, _| {
                        for (d, gd) in gp.iter_mut().enumerate() {
                            if arg[d] == k {
                                *gd += g[d];
                            }
                        }
                    });
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn lstm_backward(&mut self, x: Var, h: Var, c: Var, w: Var, b: Var, cache: &[f64], g: &[f64]) {
        let hd = g.len() / 2;
        let xd = self.nodes[x.0].value.len();
        let cols = xd + hd;
        let (gh, gc) = g.split_at(hd);
        let cprev = &self.nodes[c.0].value;
        // gradients w.r.t. gate pre-activations, blocks [i, f, g, o]
        let mut dpre = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, gg, o, tc) = (
                cache[j],
                cache[hd + j],
                cache[2 * hd + j],
                cache[3 * hd + j],
                cache[4 * hd + j],
            );
            let dc = gc[j] + gh[j] * o * (1.0 - tc * tc);
            dpre[j] = dc * gg * i * (1.0 - i);
            dpre[hd + j] = dc * cprev[j] * f * (1.0 - f);
            dpre[2 * hd + j] = dc * i * (1.0 - gg * gg);
            dpre[3 * hd + j] = gh[j] * tc * o * (1.0 - o);
            dc_prev[j] = dc * f;
        }
        self.accum(c, |gcp, _| axpy(gcp, 1.0, &dc_prev));
        self.accum(b, |gb, _| axpy(gb, 1.0, &dpre));
        self.accum(w, |gw, nodes| {
            let (xv, hv) = (&nodes[x.0].value, &nodes[h.0].value);
            for (r, &d) in dpre.iter().enumerate() {
                if d != 0.0 {
                    let row = &mut gw[r * cols..(r + 1) * cols];
                    axpy(&mut row[..xd], d, xv);
                    axpy(&mut row[xd..], d, hv);
                }
            }
        });
        self.accum(x, |gx, nodes| {
            let wv = &nodes[w.0].value;
            for (r, &d) in dpre.iter().enumerate() {
                axpy(gx, d, &wv[r * cols..r * cols + xd]);
            }
        });
        self.accum(h, |ghp, nodes| {
            let wv = &nodes[w.0].value;
            for (r, &d) in dpre.iter().enumerate() {
                axpy(ghp, d, &wv[r * cols + xd..(r + 1) * cols]);
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares_gradient() {
        let mut t = Tape::new();
        let w = t.input(Tensor::vector(vec![1.0, 2.0, 3.0]), true);
        let sq = t.mul(w, w).unwrap();
        let loss = t.sum(sq);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(w), vec![2.0, 4.0, 6.0]);
        assert_eq!(t.grad(loss), vec![1.0]);
    }

    #[test]
    fn constant_loss_has_zero_grads() {
        let mut t = Tape::new();
        let w = t.input(Tensor::vector(vec![1.0, 2.0]), true);
        let k = t.constant_vec(vec![3.0, 4.0]);
        let loss = t.sum(k);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(w), vec![0.0, 0.0]);
    }

    #[test]
    fn off_path_tensors_get_zero_grad() {
        let mut t = Tape::new();
        let a = t.input(Tensor::vector(vec![1.0, 2.0]), true);
        let b = t.input(Tensor::vector(vec![5.0, 6.0]), true);
        let _unused = t.tanh(b);
        let loss = t.sum(a);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(a), vec![1.0, 1.0]);
        assert_eq!(t.grad(b), vec![0.0, 0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut t = Tape::new();
        let a = t.input(Tensor::vector(vec![1.0, 2.0]), true);
        let y = t.tanh(a);
        assert!(matches!(t.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn gradients_accumulate_over_reuse() {
        // f(w) = w·w used through two separate consumers: sum(w) + sum(w*w)
        let mut t = Tape::new();
        let w = t.input(Tensor::vector(vec![0.5, -1.5]), true);
        let s1 = t.sum(w);
        let sq = t.mul(w, w).unwrap();
        let s2 = t.sum(sq);
        let loss = t.add(s1, s2).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(w), vec![1.0 + 1.0, 1.0 - 3.0]);
    }

    #[test]
    fn repeated_backward_is_bit_identical() {
        let mut t = Tape::new();
        let w = t.input(Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]).unwrap(), true);
        let x = t.input(Tensor::vector(vec![1.0, -1.0, 2.0]), true);
        let y = t.matvec(w, x).unwrap();
        let p = t.softmax(y).unwrap();
        let l = t.log_softmax(p).unwrap();
        let loss = t.pick(l, 1).unwrap();
        t.backward(loss).unwrap();
        let (g1, gx1) = (t.grad(w), t.grad(x));
        t.backward(loss).unwrap();
        assert_eq!(g1, t.grad(w));
        assert_eq!(gx1, t.grad(x));
    }

    #[test]
    fn no_grad_tape_records_values_only() {
        let w = Tensor::vector(vec![1.0, 2.0]);
        let mut t = Tape::no_grad();
        let v = t.param(&w);
        let s = t.sum(v);
        assert_eq!(t.scalar(s), 3.0);
        assert!(!t.requires_grad(s));
        t.backward(s).unwrap();
        assert_eq!(t.grad(v), vec![0.0, 0.0]);
    }

    #[test]
    fn masked_entries_are_zero_and_receive_no_gradient() {
        let mut t = Tape::new();
        let v = t.input(Tensor::vector(vec![1.0, 1.0, 1.0]), true);
        let p = t.masked_softmax(v, &[false, false, true]).unwrap();
        assert_eq!(t.value(p), &[0.5, 0.5, 0.0]);
        let w = t.constant_vec(vec![1.0, 3.0, 7.0]);
        let prod = t.mul(p, w).unwrap();
        let loss = t.sum(prod);
        t.backward(loss).unwrap();
        assert_eq!(t.grad(v)[2], 0.0);
    }

    #[test]
    fn gather_row_out_of_range() {
        let mut t = Tape::new();
        let e = t.input(Tensor::zeros(&[3, 2]), true);
        assert!(matches!(t.gather_row(e, 3), Err(Error::Lookup(_))));
    }
}
