use crate::error::{Error, Result};
use crate::scalar::{gemm, Scalar};

use super::Tensor;

/// Probabilities are clamped to this floor before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Sum(Var),
    Mean(Var),
    Relu(Var),
    Reshape(Var),
    SliceRows {
        x: Var,
        offset: usize,
    },
    Dense {
        x: Var,
        w: Var,
        b: Option<Var>,
    },
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
        stride: usize,
        /// im2col buffer, `[batch][in_ch * k][out_len]`.
        cols: Vec<T>,
    },
    MaxPool1d {
        x: Var,
        argmax: Vec<usize>,
    },
    Softmax(Var),
    CrossEntropy {
        p: Var,
        labels: Vec<usize>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Define-by-run tape. Nodes may only reference earlier nodes, so the
/// recorded graph is acyclic by construction. Build a fresh tape per
/// forward pass and drop it after [`Tape::backward`].
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar with respect to the `requires_grad` leaves of a tape.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> Result<&Node<T>> {
        self.nodes
            .get(v.0)
            .ok_or_else(|| Error::input(format!("variable {} is not on this tape", v.0)))
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Constant input; no gradient is tracked.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Trainable leaf; [`Tape::backward`] reports its gradient.
    pub fn param(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (sa, sb) = (self.node(a)?.value.shape(), self.node(b)?.value.shape());
        if sa != sb {
            return Err(Error::dim(format!("{what}: shapes {sa:?} and {sb:?} differ")));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op<T>, f: impl Fn(T, T) -> T) -> Var {
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(va.shape().to_vec(), data).expect("shape preserved");
        let needs = self.needs(a) || self.needs(b);
        self.push(value, op, needs)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        Ok(self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        let va = &self.node(a)?.value;
        let data = va.data().iter().map(|&x| x * c).collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        let needs = self.needs(a);
        Ok(self.push(value, Op::Scale(a, c), needs))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.node(a)?.value.data().iter().copied().sum();
        let needs = self.needs(a);
        Ok(self.push(Tensor::scalar(s), Op::Sum(a), needs))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let va = &self.node(a)?.value;
        let n = T::from_f64(va.len() as f64);
        let s = va.data().iter().copied().sum::<T>() / n;
        let needs = self.needs(a);
        Ok(self.push(Tensor::scalar(s), Op::Mean(a), needs))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let va = &self.node(a)?.value;
        let data = va.data().iter().map(|&x| x.max(T::zero())).collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        let needs = self.needs(a);
        Ok(self.push(value, Op::Relu(a), needs))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.node(a)?.value.clone().reshape(shape.to_vec())?;
        let needs = self.needs(a);
        Ok(self.push(value, Op::Reshape(a), needs))
    }

    /// Rows `start..end` along the leading dimension.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let va = &self.node(a)?.value;
        let rows = va.shape()[0];
        if start >= end || end > rows {
            return Err(Error::dim(format!(
                "row slice {start}..{end} out of range for {rows} rows"
            )));
        }
        let width = va.len() / rows;
        let mut shape = va.shape().to_vec();
        shape[0] = end - start;
        let value = Tensor::new(shape, va.data()[start * width..end * width].to_vec())?;
        let needs = self.needs(a);
        Ok(self.push(
            value,
            Op::SliceRows {
                x: a,
                offset: start * width,
            },
            needs,
        ))
    }

    /// `y = x wᵀ + b` with `x: [batch, in]`, `w: [out, in]`, `b: [out]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xs, ws) = (self.node(x)?.value.shape(), self.node(w)?.value.shape());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] {
            return Err(Error::dim(format!(
                "dense: input {xs:?} incompatible with weights {ws:?}"
            )));
        }
        let (batch, inp, out) = (xs[0], xs[1], ws[0]);
        if let Some(b) = b {
            let bs = self.node(b)?.value.shape();
            if bs != [out] {
                return Err(Error::dim(format!("dense: bias {bs:?}, expected [{out}]")));
            }
        }
        let mut y = vec![T::zero(); batch * out];
        if let Some(b) = b {
            let bias = self.nodes[b.0].value.data();
            for row in y.chunks_exact_mut(out) {
                row.copy_from_slice(bias);
            }
        }
        gemm(
            self.nodes[x.0].value.data(),
            batch,
            inp,
            false,
            self.nodes[w.0].value.data(),
            out,
            inp,
            true,
            T::one(),
            T::one(),
            &mut y,
        );
        let needs = self.needs(x) || self.needs(w) || b.is_some_and(|b| self.needs(b));
        Ok(self.push(Tensor::new([batch, out], y)?, Op::Dense { x, w, b }, needs))
    }

    /// Valid (unpadded) 1-D convolution. `x: [batch, in_ch, len]`,
    /// `w: [filters, in_ch, k]`, `b: [filters]`; output
    /// `[batch, filters, (len - k) / stride + 1]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, stride: usize) -> Result<Var> {
        let xs = self.node(x)?.value.shape().to_vec();
        let ws = self.node(w)?.value.shape().to_vec();
        let bs = self.node(b)?.value.shape().to_vec();
        if xs.len() != 3 || ws.len() != 3 || xs[1] != ws[1] {
            return Err(Error::dim(format!(
                "conv1d: input {xs:?} incompatible with weights {ws:?}"
            )));
        }
        if stride == 0 {
            return Err(Error::dim("conv1d: stride must be at least 1"));
        }
        let (batch, in_ch, len) = (xs[0], xs[1], xs[2]);
        let (filters, k) = (ws[0], ws[2]);
        if bs != [filters] {
            return Err(Error::dim(format!("conv1d: bias {bs:?}, expected [{filters}]")));
        }
        if len < k {
            return Err(Error::dim(format!(
                "conv1d: input length {len} shorter than kernel {k}"
            )));
        }
        let out_len = (len - k) / stride + 1;
        let ck = in_ch * k;
        let xd = self.nodes[x.0].value.data();
        let mut cols = vec![T::zero(); batch * ck * out_len];
        let phase_len = len.div_ceil(stride);
        let mut phases = vec![T::zero(); stride * phase_len];
        for bi in 0..batch {
            let cb = &mut cols[bi * ck * out_len..(bi + 1) * ck * out_len];
            for c in 0..in_ch {
                let xc = &xd[(bi * in_ch + c) * len..(bi * in_ch + c + 1) * len];
                // phase j holds x[j], x[j + stride], ... so every im2col row
                // becomes one contiguous copy
                for j in 0..stride {
                    let ph = &mut phases[j * phase_len..(j + 1) * phase_len];
                    for (d, &v) in ph.iter_mut().zip(xc.iter().skip(j).step_by(stride)) {
                        *d = v;
                    }
                }
                for kk in 0..k {
                    let start = (kk % stride) * phase_len + kk / stride;
                    cb[(c * k + kk) * out_len..(c * k + kk + 1) * out_len]
                        .copy_from_slice(&phases[start..start + out_len]);
                }
            }
        }
        let wd = self.nodes[w.0].value.data();
        let bias = self.nodes[b.0].value.data();
        let mut y = vec![T::zero(); batch * filters * out_len];
        for bi in 0..batch {
            let yb = &mut y[bi * filters * out_len..(bi + 1) * filters * out_len];
            for (f, row) in yb.chunks_exact_mut(out_len).enumerate() {
                row.fill(bias[f]);
            }
            gemm(
                wd,
                filters,
                ck,
                false,
                &cols[bi * ck * out_len..(bi + 1) * ck * out_len],
                ck,
                out_len,
                false,
                T::one(),
                T::one(),
                yb,
            );
        }
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        let value = Tensor::new([batch, filters, out_len], y)?;
        Ok(self.push(
            value,
            Op::Conv1d {
                x,
                w,
                b,
                stride,
                cols,
            },
            needs,
        ))
    }

    /// Max over windows along the last axis of `[batch, ch, len]`.
    /// Gradient goes to the first maximal index of each window.
    pub fn maxpool1d(&mut self, x: Var, window: usize, stride: usize) -> Result<Var> {
        let xs = self.node(x)?.value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::dim(format!("maxpool1d: expected rank 3, got {xs:?}")));
        }
        if window == 0 || stride == 0 {
            return Err(Error::dim("maxpool1d: window and stride must be at least 1"));
        }
        let (batch, ch, len) = (xs[0], xs[1], xs[2]);
        if len < window {
            return Err(Error::dim(format!(
                "maxpool1d: input length {len} shorter than window {window}"
            )));
        }
        let out_len = (len - window) / stride + 1;
        let xd = self.nodes[x.0].value.data();
        let mut y = Vec::with_capacity(batch * ch * out_len);
        let mut argmax = Vec::with_capacity(batch * ch * out_len);
        for row in 0..batch * ch {
            let base = row * len;
            for o in 0..out_len {
                let start = base + o * stride;
                let mut best = start;
                for i in start + 1..start + window {
                    if xd[i] > xd[best] {
                        best = i;
                    }
                }
                y.push(xd[best]);
                argmax.push(best);
            }
        }
        let needs = self.needs(x);
        let value = Tensor::new([batch, ch, out_len], y)?;
        Ok(self.push(value, Op::MaxPool1d { x, argmax }, needs))
    }

    /// Row-wise softmax over the last axis, with max subtraction.
    pub fn softmax(&mut self, z: Var) -> Result<Var> {
        let vz = &self.node(z)?.value;
        let k = *vz.shape().last().expect("tensors have rank >= 1");
        let mut out = vz.data().to_vec();
        for row in out.chunks_exact_mut(k) {
            softmax_in_place(row);
        }
        let value = Tensor::new(vz.shape().to_vec(), out)?;
        let needs = self.needs(z);
        Ok(self.push(value, Op::Softmax(z), needs))
    }

    /// Mean categorical cross-entropy of probability rows `p: [batch, K]`.
    pub fn cross_entropy(&mut self, p: Var, labels: &[usize]) -> Result<Var> {
        let vp = &self.node(p)?.value;
        let ps = vp.shape();
        if ps.len() != 2 || ps[0] != labels.len() {
            return Err(Error::dim(format!(
                "cross_entropy: probabilities {ps:?} vs {} labels",
                labels.len()
            )));
        }
        let k = ps[1];
        let floor = T::from_f64(PROB_FLOOR);
        let mut total = T::zero();
        for (row, &y) in vp.data().chunks_exact(k).zip(labels) {
            if y >= k {
                return Err(Error::input(format!("label {y} out of range 0..{k}")));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > T::from_f64(1e-5) {
                return Err(Error::input(format!(
                    "probability row sums to {s}, expected 1"
                )));
            }
            total = total - row[y].min(T::one()).max(floor).ln();
        }
        let loss = total / T::from_f64(labels.len() as f64);
        let needs = self.needs(p);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                p,
                labels: labels.to_vec(),
            },
            needs,
        ))
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let shape = self.node(loss)?.value.shape();
        if shape != [1] {
            return Err(Error::dim(format!(
                "backward needs a scalar loss, got shape {shape:?}"
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<T>>], v: Var, f: impl FnOnce(&mut [T])) {
        if !self.needs(v) {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); self.nodes[v.0].value.len()]);
        f(slot);
    }

    fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |s| add_into(s, g));
                self.accumulate(grads, *b, |s| add_into(s, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |s| add_into(s, g));
                self.accumulate(grads, *b, |s| {
                    for (d, &x) in s.iter_mut().zip(g) {
                        *d = *d - x;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, |s| {
                    for ((d, &x), &y) in s.iter_mut().zip(g).zip(vb) {
                        *d = *d + x * y;
                    }
                });
                self.accumulate(grads, *b, |s| {
                    for ((d, &x), &y) in s.iter_mut().zip(g).zip(va) {
                        *d = *d + x * y;
                    }
                });
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, |s| {
                for (d, &x) in s.iter_mut().zip(g) {
                    *d = *d + x * *c;
                }
            }),
            Op::Sum(a) => self.accumulate(grads, *a, |s| {
                for d in s.iter_mut() {
                    *d = *d + g[0];
                }
            }),
            Op::Mean(a) => {
                let n = T::from_f64(self.value(*a).len() as f64);
                self.accumulate(grads, *a, |s| {
                    for d in s.iter_mut() {
                        *d = *d + g[0] / n;
                    }
                })
            }
            Op::Relu(a) => {
                let va = self.value(*a).data();
                self.accumulate(grads, *a, |s| {
                    for ((d, &x), &v) in s.iter_mut().zip(g).zip(va) {
                        if v > T::zero() {
                            *d = *d + x;
                        }
                    }
                })
            }
            Op::Reshape(a) => self.accumulate(grads, *a, |s| add_into(s, g)),
            Op::SliceRows { x, offset } => self.accumulate(grads, *x, |s| {
                add_into(&mut s[*offset..*offset + g.len()], g)
            }),
            Op::Dense { x, w, b } => {
                let xs = self.value(*x).shape();
                let (batch, inp) = (xs[0], xs[1]);
                let out = self.value(*w).shape()[0];
                let (xd, wd) = (self.value(*x).data(), self.value(*w).data());
                self.accumulate(grads, *x, |s| {
                    gemm(g, batch, out, false, wd, out, inp, false, T::one(), T::one(), s)
                });
                self.accumulate(grads, *w, |s| {
                    gemm(g, batch, out, true, xd, batch, inp, false, T::one(), T::one(), s)
                });
                if let Some(b) = b {
                    self.accumulate(grads, *b, |s| {
                        for row in g.chunks_exact(out) {
                            add_into(s, row);
                        }
                    });
                }
            }
            Op::Conv1d {
                x,
                w,
                b,
                stride,
                cols,
            } => {
                let xs = self.value(*x).shape();
                let (batch, in_ch, len) = (xs[0], xs[1], xs[2]);
                let ws = self.value(*w).shape();
                let (filters, k) = (ws[0], ws[2]);
                let ck = in_ch * k;
                let out_len = node.value.shape()[2];
                let wd = self.value(*w).data();
                self.accumulate(grads, *b, |s| {
                    for gb in g.chunks_exact(filters * out_len) {
                        for (d, row) in s.iter_mut().zip(gb.chunks_exact(out_len)) {
                            *d = *d + row.iter().copied().sum();
                        }
                    }
                });
                self.accumulate(grads, *w, |s| {
                    for bi in 0..batch {
                        gemm(
                            &g[bi * filters * out_len..(bi + 1) * filters * out_len],
                            filters,
                            out_len,
                            false,
                            &cols[bi * ck * out_len..(bi + 1) * ck * out_len],
                            ck,
                            out_len,
                            true,
                            T::one(),
                            T::one(),
                            s,
                        );
                    }
                });
                self.accumulate(grads, *x, |s| {
                    let mut dcols = vec![T::zero(); ck * out_len];
                    let phase_len = len.div_ceil(*stride);
                    let mut phases = vec![T::zero(); *stride * phase_len];
                    for bi in 0..batch {
                        gemm(
                            wd,
                            filters,
                            ck,
                            true,
                            &g[bi * filters * out_len..(bi + 1) * filters * out_len],
                            filters,
                            out_len,
                            false,
                            T::one(),
                            T::zero(),
                            &mut dcols,
                        );
                        for c in 0..in_ch {
                            phases.fill(T::zero());
                            for kk in 0..k {
                                let row = &dcols[(c * k + kk) * out_len..(c * k + kk + 1) * out_len];
                                let start = (kk % stride) * phase_len + kk / stride;
                                add_into(&mut phases[start..start + out_len], row);
                            }
                            let sc = &mut s[(bi * in_ch + c) * len..(bi * in_ch + c + 1) * len];
                            for j in 0..*stride {
                                let ph = &phases[j * phase_len..(j + 1) * phase_len];
                                for (d, &v) in sc.iter_mut().skip(j).step_by(*stride).zip(ph) {
                                    *d = *d + v;
                                }
                            }
                        }
                    }
                });
            }
            Op::MaxPool1d { x, argmax } => self.accumulate(grads, *x, |s| {
                for (&i, &v) in argmax.iter().zip(g) {
                    s[i] = s[i] + v;
                }
            }),
            Op::Softmax(z) => {
                let y = node.value.data();
                let k = *node.value.shape().last().expect("rank >= 1");
                self.accumulate(grads, *z, |s| {
                    for ((srow, yrow), grow) in s
                        .chunks_exact_mut(k)
                        .zip(y.chunks_exact(k))
                        .zip(g.chunks_exact(k))
                    {
                        let dot: T = yrow.iter().zip(grow).map(|(&a, &b)| a * b).sum();
                        for ((d, &yi), &gi) in srow.iter_mut().zip(yrow).zip(grow) {
                            *d = *d + yi * (gi - dot);
                        }
                    }
                })
            }
            Op::CrossEntropy { p, labels } => {
                let vp = self.value(*p).data();
                let k = self.value(*p).shape()[1];
                let n = T::from_f64(labels.len() as f64);
                let floor = T::from_f64(PROB_FLOOR);
                self.accumulate(grads, *p, |s| {
                    for (row, &y) in labels.iter().enumerate() {
                        let q = vp[row * k + y];
                        if q > floor && q <= T::one() {
                            s[row * k + y] = s[row * k + y] - g[0] / (n * q);
                        }
                    }
                })
            }
        }
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        total = total + *v;
    }
    for v in row.iter_mut() {
        *v = *v / total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape.to_vec(), data).unwrap()
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[3], &[0.3, -2.0, 7.0]));
        let loss = tape.sum(x).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn dot_self_gradient_is_twice_x() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2], &[2.0, -1.0]));
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum(sq).unwrap();
        assert_eq!(tape.value(loss).data(), &[5.0]);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &[4.0, -2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2], &[1.0, 2.0]));
        let y = tape.relu(x).unwrap();
        assert!(matches!(tape.backward(y), Err(Error::Dimension(_))));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2], &[1.0, 2.0]));
        let c = tape.constant(t(&[2], &[3.0, 4.0]));
        let p = tape.mul(x, c).unwrap();
        let loss = tape.sum(p).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &[3.0, 4.0]);
        assert!(g.get(c).is_none());
    }

    #[test]
    fn foreign_var_is_rejected() {
        let mut other = Tape::<f64>::new();
        for _ in 0..5 {
            other.constant(Tensor::scalar(1.0));
        }
        let stray = other.constant(Tensor::scalar(1.0));
        let mut tape = Tape::<f64>::new();
        assert!(tape.relu(stray).is_err());
    }

    #[test]
    fn maxpool_ties_route_to_first_index() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[1, 1, 4], &[2.0, 2.0, 1.0, 1.0]));
        let y = tape.maxpool1d(x, 2, 2).unwrap();
        let loss = tape.sum(y).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn cross_entropy_rejects_bad_label() {
        let mut tape = Tape::new();
        let p = tape.constant(t(&[1, 2], &[0.5, 0.5]));
        assert!(matches!(tape.cross_entropy(p, &[2]), Err(Error::Input(_))));
    }
}
