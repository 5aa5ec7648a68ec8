//! Minimal reverse-mode differentiation over small dense tensors.
//!
//! Expressions are built eagerly on a [`Tape`]: every operator call appends a
//! node, evaluates it immediately, and returns a [`Var`] handle. Because nodes
//! are appended in construction order, the node list is already a topological
//! order and [`Tape::backward`] is a single reverse sweep.
//!
//! A tape can be re-used across samples: rebind leaves with
//! [`Tape::set_leaf`] and call [`Tape::replay`] to recompute every cached
//! value without reallocating the graph. This is what the trainer does for
//! each sample in a batch.
//!
//! Conventions fixed here (and asserted by tests):
//! - all values are `f64`
//! - the LeakyReLU derivative at exactly 0 is the positive-branch value 1
//! - `abs` uses subgradient 1 at 0

use crate::{Error, Result};

/// Dense row-major tensor. Rank 0 (scalar), 1 (vector) and 2 (matrix) are the
/// only shapes the ops produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "tensor_new",
                lhs: shape,
                rhs: vec![values.len()],
            });
        }
        Ok(Tensor { shape, values })
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![], values: vec![v] }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Tensor { shape: vec![values.len()], values }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], values)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), values: vec![0.0; len] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scalar accessor; valid for any single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.values.len(), 1);
        self.values[0]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    /// matrix * vector
    Matvec(Var, Var),
    /// constant * tensor
    ScalarMul(f64, Var),
    Dot(Var, Var),
    LeakyRelu(Var, f64),
    Softplus(Var),
    /// softmax over a set of scalar scores; output is a vector of the same length
    SoftmaxSet(Vec<Var>),
    /// sum_k w[k] * items[k], w a vector node, items vector nodes of equal shape
    WeightedSum(Var, Vec<Var>),
    Sum(Var),
    Abs(Var),
    Square(Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
    adjoint: Tensor,
}

/// Computation tape. Confined to one thread for its lifetime; independent
/// tapes may run concurrently.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    // ln(1 + e^x), stable for large |x|
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Adjoint of `v` after the latest [`Tape::backward`] call.
    pub fn adjoint(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].adjoint
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn leaf_scalar(&mut self, v: f64) -> Var {
        self.leaf(Tensor::scalar(v))
    }

    /// Rebind a leaf's values in place. Shape must match the original binding.
    pub fn set_leaf(&mut self, v: Var, values: &[f64]) {
        let node = &mut self.nodes[v.0];
        debug_assert!(matches!(node.op, Op::Leaf));
        debug_assert_eq!(node.value.values.len(), values.len());
        node.value.values.copy_from_slice(values);
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        let adjoint = Tensor::zeros(value.shape());
        self.nodes.push(Node { op, value, adjoint });
        Var(self.nodes.len() - 1)
    }

    fn shape_of(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn require_same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape_of(a) != self.shape_of(b) {
            return Err(Error::ShapeMismatch {
                op,
                lhs: self.shape_of(a).to_vec(),
                rhs: self.shape_of(b).to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.require_same_shape("add", a, b)?;
        let value = self.eval(&Op::Add(a, b));
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.require_same_shape("sub", a, b)?;
        let value = self.eval(&Op::Sub(a, b));
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn matvec(&mut self, m: Var, v: Var) -> Result<Var> {
        let ms = self.shape_of(m);
        let vs = self.shape_of(v);
        if ms.len() != 2 || vs.len() != 1 || ms[1] != vs[0] {
            return Err(Error::ShapeMismatch {
                op: "matvec",
                lhs: ms.to_vec(),
                rhs: vs.to_vec(),
            });
        }
        let value = self.eval(&Op::Matvec(m, v));
        Ok(self.push(Op::Matvec(m, v), value))
    }

    pub fn scalar_mul(&mut self, c: f64, v: Var) -> Var {
        let value = self.eval(&Op::ScalarMul(c, v));
        self.push(Op::ScalarMul(c, v), value)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.require_same_shape("dot", a, b)?;
        let value = self.eval(&Op::Dot(a, b));
        Ok(self.push(Op::Dot(a, b), value))
    }

    pub fn leaky_relu(&mut self, v: Var, slope: f64) -> Var {
        let value = self.eval(&Op::LeakyRelu(v, slope));
        self.push(Op::LeakyRelu(v, slope), value)
    }

    pub fn softplus(&mut self, v: Var) -> Var {
        let value = self.eval(&Op::Softplus(v));
        self.push(Op::Softplus(v), value)
    }

    /// Softmax over a variable-length set of scalar scores.
    pub fn softmax_set(&mut self, scores: Vec<Var>) -> Result<Var> {
        if scores.is_empty() {
            return Err(Error::contract("softmax over empty score set"));
        }
        for &s in &scores {
            if !self.shape_of(s).is_empty() && self.nodes[s.0].value.len() != 1 {
                return Err(Error::ShapeMismatch {
                    op: "softmax_set",
                    lhs: self.shape_of(s).to_vec(),
                    rhs: vec![],
                });
            }
        }
        let value = self.eval(&Op::SoftmaxSet(scores.clone()));
        Ok(self.push(Op::SoftmaxSet(scores), value))
    }

    /// `sum_k weights[k] * items[k]`; `weights` is a vector node whose length
    /// matches the item count; items all share one shape.
    pub fn weighted_sum(&mut self, weights: Var, items: Vec<Var>) -> Result<Var> {
        let ws = self.shape_of(weights);
        if ws.len() != 1 || ws[0] != items.len() {
            return Err(Error::ShapeMismatch {
                op: "weighted_sum",
                lhs: ws.to_vec(),
                rhs: vec![items.len()],
            });
        }
        if items.is_empty() {
            return Err(Error::contract("weighted_sum over empty item set"));
        }
        for w in items.windows(2) {
            self.require_same_shape("weighted_sum", w[0], w[1])?;
        }
        let value = self.eval(&Op::WeightedSum(weights, items.clone()));
        Ok(self.push(Op::WeightedSum(weights, items), value))
    }

    pub fn sum(&mut self, v: Var) -> Var {
        let value = self.eval(&Op::Sum(v));
        self.push(Op::Sum(v), value)
    }

    pub fn abs(&mut self, v: Var) -> Var {
        let value = self.eval(&Op::Abs(v));
        self.push(Op::Abs(v), value)
    }

    pub fn square(&mut self, v: Var) -> Var {
        let value = self.eval(&Op::Square(v));
        self.push(Op::Square(v), value)
    }

    fn eval(&self, op: &Op) -> Tensor {
        let val = |v: Var| &self.nodes[v.0].value;
        match op {
            Op::Leaf => unreachable!("leaves are never re-evaluated"),
            Op::Add(a, b) => {
                let (a, b) = (val(*a), val(*b));
                let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
                Tensor { shape: a.shape.clone(), values }
            }
            Op::Sub(a, b) => {
                let (a, b) = (val(*a), val(*b));
                let values = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
                Tensor { shape: a.shape.clone(), values }
            }
            Op::Matvec(m, v) => {
                let (m, v) = (val(*m), val(*v));
                let (rows, cols) = (m.shape[0], m.shape[1]);
                let mut out = vec![0.0; rows];
                for r in 0..rows {
                    let row = &m.values[r * cols..(r + 1) * cols];
                    out[r] = row.iter().zip(&v.values).map(|(a, b)| a * b).sum();
                }
                Tensor::vector(out)
            }
            Op::ScalarMul(c, v) => {
                let v = val(*v);
                let values = v.values.iter().map(|x| c * x).collect();
                Tensor { shape: v.shape.clone(), values }
            }
            Op::Dot(a, b) => {
                let (a, b) = (val(*a), val(*b));
                let s = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
                Tensor::scalar(s)
            }
            Op::LeakyRelu(v, slope) => {
                let v = val(*v);
                let values = v
                    .values
                    .iter()
                    .map(|&x| if x >= 0.0 { x } else { slope * x })
                    .collect();
                Tensor { shape: v.shape.clone(), values }
            }
            Op::Softplus(v) => {
                let v = val(*v);
                let values = v.values.iter().map(|&x| softplus(x)).collect();
                Tensor { shape: v.shape.clone(), values }
            }
            Op::SoftmaxSet(scores) => {
                let raw: Vec<f64> = scores.iter().map(|&s| val(s).values[0]).collect();
                let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = raw.iter().map(|&x| (x - max).exp()).collect();
                let denom: f64 = exps.iter().sum();
                Tensor::vector(exps.into_iter().map(|e| e / denom).collect())
            }
            Op::WeightedSum(w, items) => {
                let weights = val(*w).values.clone();
                let mut out = Tensor::zeros(val(items[0]).shape());
                for (k, &item) in items.iter().enumerate() {
                    for (o, x) in out.values.iter_mut().zip(&val(item).values) {
                        *o += weights[k] * x;
                    }
                }
                out
            }
            Op::Sum(v) => Tensor::scalar(val(*v).values.iter().sum()),
            Op::Abs(v) => {
                let v = val(*v);
                let values = v.values.iter().map(|x| x.abs()).collect();
                Tensor { shape: v.shape.clone(), values }
            }
            Op::Square(v) => {
                let v = val(*v);
                let values = v.values.iter().map(|x| x * x).collect();
                Tensor { shape: v.shape.clone(), values }
            }
        }
    }

    /// Recompute every non-leaf value in construction order. Used after
    /// rebinding leaves with [`Tape::set_leaf`].
    pub fn replay(&mut self) {
        for i in 0..self.nodes.len() {
            if matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let op = self.nodes[i].op.clone();
            self.nodes[i].value = self.eval(&op);
        }
    }

    /// Forward value of `root`; errors if any value is non-finite.
    pub fn forward(&self, root: Var) -> Result<Tensor> {
        let v = self.value(root);
        if !v.is_finite() {
            return Err(Error::contract("non-finite value in forward evaluation"));
        }
        Ok(v.clone())
    }

    /// Reverse sweep seeding the adjoint of the scalar `root` with 1.
    /// Adjoints of every node (leaves included) are available through
    /// [`Tape::adjoint`] afterwards.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.nodes[root.0].value.len() != 1 {
            return Err(Error::contract("backward root must be scalar"));
        }
        for node in &mut self.nodes {
            node.adjoint.fill(0.0);
        }
        self.nodes[root.0].adjoint.values[0] = 1.0;

        for i in (0..self.nodes.len()).rev() {
            let g = self.nodes[i].adjoint.values.clone();
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    self.accumulate(a, &g);
                    self.accumulate(b, &g);
                }
                Op::Sub(a, b) => {
                    self.accumulate(a, &g);
                    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                    self.accumulate(b, &neg);
                }
                Op::Matvec(m, v) => {
                    let (rows, cols) = {
                        let s = self.nodes[m.0].value.shape();
                        (s[0], s[1])
                    };
                    let vvals = self.nodes[v.0].value.values.clone();
                    let mvals = self.nodes[m.0].value.values.clone();
                    // dM[r,c] += g[r] * v[c]
                    let mut dm = vec![0.0; rows * cols];
                    for r in 0..rows {
                        for c in 0..cols {
                            dm[r * cols + c] = g[r] * vvals[c];
                        }
                    }
                    self.accumulate(m, &dm);
                    // dv[c] += sum_r M[r,c] * g[r]
                    let mut dv = vec![0.0; cols];
                    for r in 0..rows {
                        for c in 0..cols {
                            dv[c] += mvals[r * cols + c] * g[r];
                        }
                    }
                    self.accumulate(v, &dv);
                }
                Op::ScalarMul(c, v) => {
                    let dv: Vec<f64> = g.iter().map(|x| c * x).collect();
                    self.accumulate(v, &dv);
                }
                Op::Dot(a, b) => {
                    let gs = g[0];
                    let av = self.nodes[a.0].value.values.clone();
                    let bv = self.nodes[b.0].value.values.clone();
                    let da: Vec<f64> = bv.iter().map(|x| gs * x).collect();
                    let db: Vec<f64> = av.iter().map(|x| gs * x).collect();
                    self.accumulate(a, &da);
                    self.accumulate(b, &db);
                }
                Op::LeakyRelu(v, slope) => {
                    // derivative at 0 is the positive-branch value 1
                    let xs = self.nodes[v.0].value.values.clone();
                    let dv: Vec<f64> = xs
                        .iter()
                        .zip(&g)
                        .map(|(&x, &gi)| if x >= 0.0 { gi } else { slope * gi })
                        .collect();
                    self.accumulate(v, &dv);
                }
                Op::Softplus(v) => {
                    let xs = self.nodes[v.0].value.values.clone();
                    let dv: Vec<f64> = xs.iter().zip(&g).map(|(&x, &gi)| sigmoid(x) * gi).collect();
                    self.accumulate(v, &dv);
                }
                Op::SoftmaxSet(scores) => {
                    let alpha = self.nodes[i].value.values.clone();
                    let dot: f64 = g.iter().zip(&alpha).map(|(gi, ai)| gi * ai).sum();
                    for (k, &s) in scores.iter().enumerate() {
                        let ds = alpha[k] * (g[k] - dot);
                        self.accumulate(s, &[ds]);
                    }
                }
                Op::WeightedSum(w, items) => {
                    let weights = self.nodes[w.0].value.values.clone();
                    let mut dw = vec![0.0; weights.len()];
                    for (k, &item) in items.iter().enumerate() {
                        let iv = self.nodes[item.0].value.values.clone();
                        dw[k] = g.iter().zip(&iv).map(|(gi, xi)| gi * xi).sum();
                        let di: Vec<f64> = g.iter().map(|gi| weights[k] * gi).collect();
                        self.accumulate(item, &di);
                    }
                    self.accumulate(w, &dw);
                }
                Op::Sum(v) => {
                    let n = self.nodes[v.0].value.len();
                    let dv = vec![g[0]; n];
                    self.accumulate(v, &dv);
                }
                Op::Abs(v) => {
                    // subgradient at 0 is 1 (sign(0) treated as positive)
                    let xs = self.nodes[v.0].value.values.clone();
                    let dv: Vec<f64> = xs
                        .iter()
                        .zip(&g)
                        .map(|(&x, &gi)| if x >= 0.0 { gi } else { -gi })
                        .collect();
                    self.accumulate(v, &dv);
                }
                Op::Square(v) => {
                    let xs = self.nodes[v.0].value.values.clone();
                    let dv: Vec<f64> = xs.iter().zip(&g).map(|(&x, &gi)| 2.0 * x * gi).collect();
                    self.accumulate(v, &dv);
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, grad: &[f64]) {
        let adj = &mut self.nodes[v.0].adjoint.values;
        for (a, g) in adj.iter_mut().zip(grad) {
            *a += g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec_once(m: Tensor, v: Tensor) -> Tensor {
        let mut t = Tape::new();
        let m = t.leaf(m);
        let v = t.leaf(v);
        let r = t.matvec(m, v).unwrap();
        t.forward(r).unwrap()
    }

    #[test]
    fn matvec_selects_component() {
        let out = matvec_once(
            Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap(),
            Tensor::vector(vec![1.0, 0.5]),
        );
        assert_eq!(out.values(), &[0.5]);
    }

    #[test]
    fn leaky_relu_negative_branch() {
        let mut t = Tape::new();
        let x = t.leaf_scalar(-1.0);
        let y = t.leaky_relu(x, 0.2);
        assert!((t.value(y).item() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn softplus_at_zero_is_ln2() {
        let mut t = Tape::new();
        let x = t.leaf_scalar(0.0);
        let y = t.softplus(x);
        assert!((t.value(y).item() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn softplus_derivative_at_zero() {
        let mut t = Tape::new();
        let x = t.leaf_scalar(0.0);
        let y = t.softplus(x);
        t.backward(y).unwrap();
        assert!((t.adjoint(x).item() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn leaky_relu_derivative_negative_branch() {
        let mut t = Tape::new();
        let x = t.leaf_scalar(-3.0);
        let y = t.leaky_relu(x, 0.2);
        t.backward(y).unwrap();
        assert!((t.adjoint(x).item() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn leaky_relu_derivative_at_zero_uses_positive_branch() {
        let mut t = Tape::new();
        let x = t.leaf_scalar(0.0);
        let y = t.leaky_relu(x, 0.2);
        t.backward(y).unwrap();
        assert_eq!(t.adjoint(x).item(), 1.0);
    }

    #[test]
    fn softmax_symmetry_and_singleton() {
        let mut t = Tape::new();
        let a = t.leaf_scalar(0.0);
        let b = t.leaf_scalar(0.0);
        let sm = t.softmax_set(vec![a, b]).unwrap();
        assert_eq!(t.value(sm).values(), &[0.5, 0.5]);

        let c = t.leaf_scalar(42.0);
        let sm1 = t.softmax_set(vec![c]).unwrap();
        assert_eq!(t.value(sm1).values(), &[1.0]);
    }

    #[test]
    fn softmax_analytic_values() {
        let mut t = Tape::new();
        let a = t.leaf_scalar(2f64.ln());
        let b = t.leaf_scalar(0.0);
        let sm = t.softmax_set(vec![a, b]).unwrap();
        let v = t.value(sm).values().to_vec();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_empty_set_is_contract_violation() {
        let mut t = Tape::new();
        assert!(matches!(t.softmax_set(vec![]), Err(Error::Contract(_))));
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let mut t = Tape::new();
        let v = t.leaf(Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(t.backward(v), Err(Error::Contract(_))));
    }

    #[test]
    fn shape_mismatch_is_structured() {
        let mut t = Tape::new();
        let a = t.leaf(Tensor::vector(vec![1.0, 2.0]));
        let b = t.leaf(Tensor::vector(vec![1.0]));
        assert!(matches!(t.add(a, b), Err(Error::ShapeMismatch { .. })));
    }

    /// Central finite differences over the leaves of a scalar expression.
    /// `tol` is a relative tolerance; rounding noise in the differences is
    /// about `eps * |f| / step`, so small gradients need a looser bound.
    fn finite_diff_check(
        build: impl Fn(&mut Tape, &[f64]) -> (Vec<Var>, Var),
        x0: &[f64],
        tol: f64,
    ) {
        let eval = |x: &[f64]| {
            let mut t = Tape::new();
            let (_, root) = build(&mut t, x);
            t.value(root).item()
        };
        let mut t = Tape::new();
        let (leaves, root) = build(&mut t, x0);
        t.backward(root).unwrap();
        let step = 1e-5;
        let mut flat_idx = 0;
        for (li, &leaf) in leaves.iter().enumerate() {
            let n = t.value(leaf).len();
            for k in 0..n {
                let mut xp = x0.to_vec();
                let mut xm = x0.to_vec();
                xp[flat_idx + k] += step;
                xm[flat_idx + k] -= step;
                let fd = (eval(&xp) - eval(&xm)) / (2.0 * step);
                let ad = t.adjoint(leaf).values()[k];
                let denom = fd.abs().max(ad.abs()).max(1e-8);
                assert!(
                    (fd - ad).abs() / denom < tol,
                    "leaf {li} comp {k}: ad={ad} fd={fd}"
                );
            }
            flat_idx += n;
        }
    }

    #[test]
    fn softmax_weighted_sum_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x0: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            finite_diff_check(
                |t, x| {
                    let s0 = t.leaf_scalar(x[0]);
                    let s1 = t.leaf_scalar(x[1]);
                    let i0 = t.leaf(Tensor::vector(vec![x[2], x[3]]));
                    let i1 = t.leaf(Tensor::vector(vec![x[4], x[5]]));
                    let sm = t.softmax_set(vec![s0, s1]).unwrap();
                    let ws = t.weighted_sum(sm, vec![i0, i1]).unwrap();
                    let root = t.sum(ws);
                    (vec![s0, s1, i0, i1], root)
                },
                &x0,
                1e-6,
            );
        }
    }

    #[test]
    fn every_op_matches_finite_differences_over_seeds() {
        use rand::{Rng, SeedableRng};
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x0: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
            finite_diff_check(
                |t, x| {
                    let m = t.leaf(Tensor::matrix(2, 2, x[0..4].to_vec()).unwrap());
                    let v = t.leaf(Tensor::vector(x[4..6].to_vec()));
                    let w = t.leaf(Tensor::vector(x[6..8].to_vec()));
                    let s0 = t.leaf_scalar(x[8]);
                    let s1 = t.leaf_scalar(x[9]);
                    let mv = t.matvec(m, v).unwrap();
                    let lr = t.leaky_relu(mv, 0.2);
                    let sp = t.softplus(lr);
                    let d = t.dot(sp, w).unwrap();
                    let sm = t.softmax_set(vec![s0, s1, d]).unwrap();
                    let added = t.add(v, w).unwrap();
                    let diff = t.sub(added, w).unwrap();
                    let sq = t.square(diff);
                    let ab = t.abs(sq);
                    let scaled = t.scalar_mul(0.7, ab);
                    let agg = t.weighted_sum(sm, vec![scaled, v, w]).unwrap();
                    let root = t.sum(agg);
                    (vec![m, v, w, s0, s1], root)
                },
                &x0,
                1e-4,
            );
        }
    }

    #[test]
    fn replay_after_rebinding_matches_fresh_tape() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1.0, -2.0]));
        let y = t.leaky_relu(x, 0.2);
        let root = t.sum(y);
        let first = t.value(root).item();
        t.set_leaf(x, &[-1.0, 3.0]);
        t.replay();
        let second = t.value(root).item();
        assert!((first - 0.6).abs() < 1e-15);
        assert!((second - 2.8).abs() < 1e-15);
    }

    #[test]
    fn forward_is_deterministic() {
        let run = || {
            let mut t = Tape::new();
            let x = t.leaf(Tensor::vector(vec![0.3, 0.7, -1.1]));
            let y = t.softplus(x);
            let s = t.sum(y);
            t.value(s).item()
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }
}
