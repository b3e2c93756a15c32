//! Reverse-mode tape over single-sample tensors.
//!
//! Batches are expressed by building one subgraph per sample on the same tape
//! and joining them with [`Tape::stack`]; every reduction runs in a fixed
//! order, so a given graph always produces bit-identical values and
//! gradients.

use crate::error::{Error, Result};
use crate::kernels::{self, ConvGeom};
use crate::params::{Gradients, ParamId, ParamStore};
use crate::scalar::{axpy, dot, Scalar};
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    Conv2d {
        x: Var,
        w: Var,
        b: Var,
        geom: ConvGeom,
    },
    Linear {
        x: Var,
        w: Var,
        b: Var,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Scale(Var, T),
    Relu(Var),
    LeakyRelu(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    GlobalAvgPool(Var),
    Concat(Vec<Var>),
    Stack(Vec<Var>),
    Upsample2x(Var),
    Row {
        table: Var,
        index: usize,
    },
    Mean(Var),
    WeightedSum(Vec<(Var, T)>),
    /// Scalar computed outside the tape with a known gradient wrt `input`.
    Custom {
        input: Var,
        grad: Vec<T>,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    params: Vec<Option<Var>>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a one-element node.
    pub fn item(&self, v: Var) -> T {
        self.nodes[v.0].value.item()
    }

    /// Constant input; gradients never flow into it.
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Input, false)
    }

    /// Copies `v` as a constant, cutting the graph.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.input(value)
    }

    /// Leaf for a parameter. Repeated calls return the same node, so every
    /// use of a shared weight accumulates into one gradient.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(Some(v)) = self.params.get(id.0) {
            return *v;
        }
        let v = self.push(store.get(id).clone(), Op::Param(id), true);
        if self.params.len() <= id.0 {
            self.params.resize(id.0 + 1, None);
        }
        self.params[id.0] = Some(v);
        v
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(w).to_vec();
        if xs.len() != 3 || ws.len() != 4 || ws[1] != xs[0] || ws[2] != ws[3] {
            return Err(Error::Shape(format!(
                "conv2d input {xs:?} with kernel {ws:?}"
            )));
        }
        if self.shape(b) != [ws[0]] {
            return Err(Error::Shape(format!("conv2d bias {:?}", self.shape(b))));
        }
        if xs[1] + 2 * pad < ws[2] || xs[2] + 2 * pad < ws[2] || stride == 0 {
            return Err(Error::Shape(format!("conv2d input {xs:?} too small")));
        }
        let geom = ConvGeom {
            in_c: xs[0],
            in_h: xs[1],
            in_w: xs[2],
            out_c: ws[0],
            k: ws[2],
            stride,
            pad,
        };
        let out = kernels::conv2d_forward(
            &geom,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
        );
        let value = Tensor::from_vec(&[geom.out_c, geom.out_h(), geom.out_w()], out)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(value, Op::Conv2d { x, w, b, geom }, rg))
    }

    /// `w · x + b` for a vector `x`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        if xs.len() != 1 || ws.len() != 2 || ws[1] != xs[0] || self.shape(b) != [ws[0]] {
            return Err(Error::Shape(format!(
                "linear input {:?} weight {:?} bias {:?}",
                xs,
                ws,
                self.shape(b)
            )));
        }
        let (out_n, in_n) = (ws[0], ws[1]);
        let xv = self.value(x).data();
        let wv = self.value(w).data();
        let bv = self.value(b).data();
        let out: Vec<T> = (0..out_n)
            .map(|o| bv[o] + dot(&wv[o * in_n..(o + 1) * in_n], xv))
            .collect();
        let value = Tensor::from_vec(&[out_n], out)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(value, Op::Linear { x, w, b }, rg))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Tensor<T> {
        let av = self.value(a);
        let data = av
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::from_vec(av.shape(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let v = self.zip_with(a, b, |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let v = self.zip_with(a, b, |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let v = self.zip_with(a, b, |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| T::one() - x);
        let rg = self.rg(a);
        self.push(v, Op::OneMinus(a), rg)
    }

    pub fn scale(&mut self, a: Var, k: T) -> Var {
        let v = self.value(a).map(|x| x * k);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, k), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self
            .value(a)
            .map(|x| if x > T::zero() { x } else { T::zero() });
        let rg = self.rg(a);
        self.push(v, Op::Relu(a), rg)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: T) -> Var {
        let v = self
            .value(a)
            .map(|x| if x > T::zero() { x } else { x * slope });
        let rg = self.rg(a);
        self.push(v, Op::LeakyRelu(a, slope), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(T::tanh);
        let rg = self.rg(a);
        self.push(v, Op::Tanh(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| T::one() / (T::one() + (-x).exp()));
        let rg = self.rg(a);
        self.push(v, Op::Sigmoid(a), rg)
    }

    /// `[C, H, W] -> [C]`
    pub fn global_avg_pool(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 3 {
            return Err(Error::Shape(format!("global_avg_pool on {s:?}")));
        }
        let hw = s[1] * s[2];
        let inv = T::one() / T::lit(hw as f64);
        let data = self
            .value(a)
            .data()
            .chunks(hw)
            .map(|c| crate::scalar::sum(c) * inv)
            .collect();
        let v = Tensor::from_vec(&[s[0]], data)?;
        let rg = self.rg(a);
        Ok(self.push(v, Op::GlobalAvgPool(a), rg))
    }

    /// Concatenation along the leading axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("concat of nothing".into()))?;
        let tail = self.shape(*first)[1..].to_vec();
        let mut lead = 0;
        let mut data = Vec::new();
        for &p in parts {
            let s = self.shape(p);
            if s[1..] != tail[..] {
                return Err(Error::Shape(format!("concat {:?} with {:?}", s, tail)));
            }
            lead += s[0];
            data.extend_from_slice(self.value(p).data());
        }
        let mut shape = vec![lead];
        shape.extend_from_slice(&tail);
        let v = Tensor::from_vec(&shape, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(v, Op::Concat(parts.to_vec()), rg))
    }

    /// Stacks equally shaped nodes along a new leading axis.
    pub fn stack(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("stack of nothing".into()))?;
        let inner = self.shape(*first).to_vec();
        let mut data = Vec::new();
        for &p in parts {
            if self.shape(p) != inner.as_slice() {
                return Err(Error::Shape(format!(
                    "stack {:?} with {:?}",
                    self.shape(p),
                    inner
                )));
            }
            data.extend_from_slice(self.value(p).data());
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&inner);
        let v = Tensor::from_vec(&shape, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(v, Op::Stack(parts.to_vec()), rg))
    }

    pub fn upsample2x(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 3 {
            return Err(Error::Shape(format!("upsample2x on {s:?}")));
        }
        let data = kernels::upsample2x(s[0], s[1], s[2], self.value(a).data());
        let v = Tensor::from_vec(&[s[0], 2 * s[1], 2 * s[2]], data)?;
        let rg = self.rg(a);
        Ok(self.push(v, Op::Upsample2x(a), rg))
    }

    /// Row `index` of a `[rows, cols]` table (embedding lookup).
    pub fn row(&mut self, table: Var, index: usize) -> Result<Var> {
        let s = self.shape(table).to_vec();
        if s.len() != 2 || index >= s[0] {
            return Err(Error::Shape(format!("row {index} of {s:?}")));
        }
        let data = self.value(table).data()[index * s[1]..(index + 1) * s[1]].to_vec();
        let v = Tensor::from_vec(&[s[1]], data)?;
        let rg = self.rg(table);
        Ok(self.push(v, Op::Row { table, index }, rg))
    }

    /// Mean of all elements, as a one-element node.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len();
        let m = crate::scalar::sum(self.value(a).data()) / T::lit(n as f64);
        let rg = self.rg(a);
        self.push(Tensor::scalar(m), Op::Mean(a), rg)
    }

    /// `sum_i k_i * a_i` over one-element nodes.
    pub fn weighted_sum(&mut self, terms: &[(Var, T)]) -> Result<Var> {
        let mut acc = T::zero();
        for &(v, k) in terms {
            if self.value(v).len() != 1 {
                return Err(Error::Shape("weighted_sum needs scalar terms".into()));
            }
            acc = acc + k * self.item(v);
        }
        let rg = terms.iter().any(|&(v, _)| self.rg(v));
        Ok(self.push(Tensor::scalar(acc), Op::WeightedSum(terms.to_vec()), rg))
    }

    /// Attaches a scalar whose value and gradient wrt `input` were computed
    /// elsewhere (loss functions live outside the engine).
    pub fn custom_scalar(&mut self, input: Var, value: T, grad: Vec<T>) -> Result<Var> {
        if grad.len() != self.value(input).len() {
            return Err(Error::Shape(format!(
                "custom gradient of length {} for input of {} elements",
                grad.len(),
                self.value(input).len()
            )));
        }
        let rg = self.rg(input);
        Ok(self.push(Tensor::scalar(value), Op::Custom { input, grad }, rg))
    }

    /// Gradients of the one-element node `loss` with respect to every
    /// parameter reachable from it.
    pub fn backward(&self, loss: Var) -> Gradients<T> {
        let mut out = Gradients::new(self.params.len());
        if !self.rg(loss) {
            return out;
        }
        let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![T::one(); self.value(loss).len()]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => out.accumulate(*id, &g, node.value.shape()),
                Op::Conv2d { x, w, b, geom } => {
                    let mut dw = vec![T::zero(); self.value(*w).len()];
                    let mut db = vec![T::zero(); self.value(*b).len()];
                    let mut dx = self.rg(*x).then(|| vec![T::zero(); self.value(*x).len()]);
                    kernels::conv2d_backward(
                        geom,
                        self.value(*x).data(),
                        self.value(*w).data(),
                        &g,
                        &mut dw,
                        &mut db,
                        dx.as_deref_mut(),
                    );
                    self.acc_owned(&mut grads, *w, dw);
                    self.acc_owned(&mut grads, *b, db);
                    if let Some(dx) = dx {
                        self.acc_owned(&mut grads, *x, dx);
                    }
                }
                Op::Linear { x, w, b } => {
                    let xv = self.value(*x).data();
                    let wv = self.value(*w).data();
                    let in_n = xv.len();
                    if self.rg(*w) {
                        let mut dw = vec![T::zero(); wv.len()];
                        for (o, &go) in g.iter().enumerate() {
                            axpy(go, xv, &mut dw[o * in_n..(o + 1) * in_n]);
                        }
                        self.acc_owned(&mut grads, *w, dw);
                    }
                    self.acc(&mut grads, *b, |d| axpy(T::one(), &g, d));
                    self.acc(&mut grads, *x, |d| {
                        for (o, &go) in g.iter().enumerate() {
                            axpy(go, &wv[o * in_n..(o + 1) * in_n], d);
                        }
                    });
                }
                Op::Add(a, b) => {
                    self.acc(&mut grads, *a, |d| axpy(T::one(), &g, d));
                    self.acc(&mut grads, *b, |d| axpy(T::one(), &g, d));
                }
                Op::Sub(a, b) => {
                    self.acc(&mut grads, *a, |d| axpy(T::one(), &g, d));
                    self.acc(&mut grads, *b, |d| axpy(-T::one(), &g, d));
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    self.acc(&mut grads, *a, |d| {
                        for ((d, &gi), &bi) in d.iter_mut().zip(&g).zip(bv) {
                            *d = *d + gi * bi;
                        }
                    });
                    self.acc(&mut grads, *b, |d| {
                        for ((d, &gi), &ai) in d.iter_mut().zip(&g).zip(av) {
                            *d = *d + gi * ai;
                        }
                    });
                }
                Op::OneMinus(a) => self.acc(&mut grads, *a, |d| axpy(-T::one(), &g, d)),
                Op::Scale(a, k) => self.acc(&mut grads, *a, |d| axpy(*k, &g, d)),
                Op::Relu(a) => {
                    let av = self.value(*a).data();
                    self.acc(&mut grads, *a, |d| {
                        for ((d, &gi), &x) in d.iter_mut().zip(&g).zip(av) {
                            if x > T::zero() {
                                *d = *d + gi;
                            }
                        }
                    });
                }
                Op::LeakyRelu(a, slope) => {
                    let av = self.value(*a).data();
                    self.acc(&mut grads, *a, |d| {
                        for ((d, &gi), &x) in d.iter_mut().zip(&g).zip(av) {
                            *d = *d + if x > T::zero() { gi } else { gi * *slope };
                        }
                    });
                }
                Op::Tanh(a) => {
                    let yv = node.value.data();
                    self.acc(&mut grads, *a, |d| {
                        for ((d, &gi), &y) in d.iter_mut().zip(&g).zip(yv) {
                            *d = *d + gi * (T::one() - y * y);
                        }
                    });
                }
                Op::Sigmoid(a) => {
                    let yv = node.value.data();
                    self.acc(&mut grads, *a, |d| {
                        for ((d, &gi), &y) in d.iter_mut().zip(&g).zip(yv) {
                            *d = *d + gi * y * (T::one() - y);
                        }
                    });
                }
                Op::GlobalAvgPool(a) => {
                    let s = self.shape(*a);
                    let hw = s[1] * s[2];
                    let inv = T::one() / T::lit(hw as f64);
                    self.acc(&mut grads, *a, |d| {
                        for (c, chunk) in d.chunks_mut(hw).enumerate() {
                            let gc = g[c] * inv;
                            for v in chunk {
                                *v = *v + gc;
                            }
                        }
                    });
                }
                Op::Concat(parts) | Op::Stack(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        let slice = &g[off..off + n];
                        self.acc(&mut grads, p, |d| axpy(T::one(), slice, d));
                        off += n;
                    }
                }
                Op::Upsample2x(a) => {
                    let s = self.shape(*a).to_vec();
                    self.acc(&mut grads, *a, |d| {
                        kernels::upsample2x_backward(s[0], s[1], s[2], &g, d)
                    });
                }
                Op::Row { table, index } => {
                    let cols = g.len();
                    let idx = *index;
                    self.acc(&mut grads, *table, |d| {
                        axpy(T::one(), &g, &mut d[idx * cols..(idx + 1) * cols])
                    });
                }
                Op::Mean(a) => {
                    let n = self.value(*a).len();
                    let k = g[0] / T::lit(n as f64);
                    self.acc(&mut grads, *a, |d| {
                        for v in d {
                            *v = *v + k;
                        }
                    });
                }
                Op::WeightedSum(terms) => {
                    for &(v, k) in terms {
                        self.acc(&mut grads, v, |d| d[0] = d[0] + k * g[0]);
                    }
                }
                Op::Custom { input, grad } => {
                    self.acc(&mut grads, *input, |d| axpy(g[0], grad, d));
                }
            }
        }
        out
    }

    fn acc(&self, grads: &mut [Option<Vec<T>>], v: Var, f: impl FnOnce(&mut [T])) {
        if !self.rg(v) {
            return;
        }
        let n = self.value(v).len();
        let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); n]);
        f(slot);
    }

    fn acc_owned(&self, grads: &mut [Option<Vec<T>>], v: Var, g: Vec<T>) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => axpy(T::one(), &g, existing),
            slot @ None => *slot = Some(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Init;

    /// Central differences of `f` wrt every element of parameter `id`.
    fn numeric_grad(
        store: &mut ParamStore<f64>,
        id: ParamId,
        f: &dyn Fn(&ParamStore<f64>) -> f64,
    ) -> Vec<f64> {
        let h = 1e-6;
        (0..store.get(id).len())
            .map(|i| {
                let orig = store.get(id).data()[i];
                store.get_mut(id).data_mut()[i] = orig + h;
                let up = f(store);
                store.get_mut(id).data_mut()[i] = orig - h;
                let down = f(store);
                store.get_mut(id).data_mut()[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        for (x, y) in a.iter().zip(b) {
            let denom = x.abs().max(y.abs()).max(1e-7);
            assert!((x - y).abs() / denom < 1e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn every_op_backpropagates() {
        let mut store = ParamStore::<f64>::new(3);
        let w = store.alloc("w", &[3, 2, 3, 3], Init::HeUniform { fan_in: 18 });
        let b = store.alloc("b", &[3], Init::Uniform { bound: 0.3 });
        let lw = store.alloc("lw", &[4, 6], Init::HeUniform { fan_in: 6 });
        let lb = store.alloc("lb", &[4], Init::Uniform { bound: 0.3 });
        let emb = store.alloc("emb", &[5, 4], Init::Uniform { bound: 1.0 });
        let img: Vec<f64> = (0..2 * 4 * 4)
            .map(|i| ((i * 13) % 7) as f64 / 7.0 - 0.4)
            .collect();
        let img = Tensor::from_vec(&[2, 4, 4], img).unwrap();

        let build = |store: &ParamStore<f64>| -> (Tape<f64>, Var) {
            let mut t = Tape::new();
            let x = t.input(img.clone());
            let (wv, bv) = (t.param(store, w), t.param(store, b));
            let c = t.conv2d(x, wv, bv, 2, 1).unwrap();
            let c = t.leaky_relu(c, 0.1);
            let u = t.upsample2x(c).unwrap();
            let u = t.tanh(u);
            let c2 = t.conv2d(u, wv, bv, 2, 1);
            assert!(c2.is_err(), "channel mismatch must be rejected");
            let p = t.global_avg_pool(u).unwrap();
            let p2 = t.global_avg_pool(c).unwrap();
            let cat = t.concat(&[p, p2]).unwrap();
            let (lwv, lbv) = (t.param(store, lw), t.param(store, lb));
            let y = t.linear(cat, lwv, lbv).unwrap();
            let s = t.sigmoid(y);
            let e = t.param(store, emb);
            let r = t.row(e, 2).unwrap();
            let m = t.mul(s, r).unwrap();
            let om = t.one_minus(m);
            let d = t.sub(om, y).unwrap();
            let a = t.add(d, r).unwrap();
            let a = t.relu(a);
            let a = t.scale(a, 1.5);
            let st = t.stack(&[a, y]).unwrap();
            let mean = t.mean(st);
            let sq: f64 = t.value(y).data().iter().map(|v| v * v).sum();
            let grad: Vec<f64> = t.value(y).data().iter().map(|v| 2.0 * v).collect();
            let cu = t.custom_scalar(y, sq, grad).unwrap();
            let total = t.weighted_sum(&[(mean, 0.7), (cu, 0.2)]).unwrap();
            (t, total)
        };

        let (tape, loss) = build(&store);
        let grads = tape.backward(loss);
        let f = |s: &ParamStore<f64>| {
            let (t, l) = build(s);
            t.item(l)
        };
        for id in [w, b, lw, lb, emb] {
            let num = numeric_grad(&mut store, id, &f);
            let ana = grads.get(id).unwrap().data().to_vec();
            assert_close(&ana, &num);
        }
    }

    #[test]
    fn shared_parameter_accumulates() {
        let mut store = ParamStore::<f64>::new(0);
        let w = store.alloc("w", &[1, 1], Init::Uniform { bound: 1.0 });
        let b = store.alloc("b", &[1], Init::Zeros);
        let mut t = Tape::new();
        let x = t.input(Tensor::from_vec(&[1], vec![2.0]).unwrap());
        let (wv, bv) = (t.param(&store, w), t.param(&store, b));
        let y1 = t.linear(x, wv, bv).unwrap();
        let wv2 = t.param(&store, w);
        assert_eq!(wv, wv2);
        let y2 = t.linear(y1, wv2, bv).unwrap();
        let grads = t.backward(y2);
        // y2 = w*(w*2) => dy/dw = 4w
        let wval = store.get(w).data()[0];
        assert!((grads.get(w).unwrap().data()[0] - 4.0 * wval).abs() < 1e-12);
    }

    #[test]
    fn detached_branch_has_no_gradient() {
        let mut store = ParamStore::<f64>::new(0);
        let w = store.alloc("w", &[1, 1], Init::Uniform { bound: 1.0 });
        let b = store.alloc("b", &[1], Init::Zeros);
        let mut t = Tape::new();
        let x = t.input(Tensor::from_vec(&[1], vec![2.0]).unwrap());
        let (wv, bv) = (t.param(&store, w), t.param(&store, b));
        let y = t.linear(x, wv, bv).unwrap();
        let d = t.detach(y);
        let m = t.mean(d);
        let grads = t.backward(m);
        assert!(grads.get(w).is_none());
    }
}
