//! Define-by-run computation record with a single reverse sweep.

use rand::Rng;

use crate::scalar::Scalar;

use super::params::{Gradients, ParamId, ParamSet};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    /// `m` is `(rows, cols)`, `x` has `cols` entries.
    MatVec {
        m: Var,
        x: Var,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Concat(Vec<Var>),
    /// Vector times a one-element node.
    Scale {
        x: Var,
        s: Var,
    },
    Dot(Var, Var),
    /// Quotient of two one-element nodes.
    Div(Var, Var),
    /// Elementwise product with a constant mask.
    Mask {
        x: Var,
        mask: Vec<T>,
    },
    Sum(Vec<Var>),
    /// `-(w·y·log σ(a) + (1-y)·log(1-σ(a)))` for a one-element logit.
    WeightedBce {
        logit: Var,
        target: T,
        pos_weight: T,
    },
}

struct Node<T> {
    op: Op<T>,
    /// Empty for parameter nodes, which read through to the [`ParamSet`].
    value: Vec<T>,
    rows: usize,
    cols: usize,
}

/// Records operations on dense values for reverse-mode differentiation.
/// Parameters are borrowed, not copied.
pub struct Tape<'p, T> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
    param_nodes: Vec<Option<Var>>,
}

fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamSet<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op<T>, value: Vec<T>, rows: usize, cols: usize) -> Var {
        self.nodes.push(Node {
            op,
            value,
            rows,
            cols,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[T] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.params.get(id).data(),
            _ => &node.value,
        }
    }

    /// Single element of a one-element node.
    pub fn scalar(&self, v: Var) -> T {
        let x = self.value(v);
        debug_assert_eq!(x.len(), 1);
        x[0]
    }

    pub fn size(&self, v: Var) -> usize {
        let n = &self.nodes[v.0];
        n.rows * n.cols
    }

    pub fn input(&mut self, value: Vec<T>) -> Var {
        let n = value.len();
        self.push(Op::Input, value, n, 1)
    }

    /// Node for a parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        let (rows, cols) = self.params.get(id).dims2();
        let v = self.push(Op::Param(id), Vec::new(), rows, cols);
        self.param_nodes[id.0] = Some(v);
        v
    }

    pub fn matvec(&mut self, m: Var, x: Var) -> Var {
        let (rows, cols) = (self.nodes[m.0].rows, self.nodes[m.0].cols);
        assert_eq!(
            cols,
            self.size(x),
            "matvec: {rows}x{cols} by {}",
            self.size(x)
        );
        let mv = self.value(m);
        let xv = self.value(x);
        let out = mv
            .chunks_exact(cols)
            .map(|row| {
                let mut acc = T::zero();
                for (&a, &b) in row.iter().zip(xv) {
                    acc += a * b;
                }
                acc
            })
            .collect();
        self.push(Op::MatVec { m, x }, out, rows, 1)
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op<T>, f: impl Fn(T, T) -> T) -> Var {
        assert_eq!(self.size(a), self.size(b), "elementwise size mismatch");
        let out: Vec<T> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let n = out.len();
        self.push(op, out, n, 1)
    }

    fn map(&mut self, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Var {
        let out: Vec<T> = self.value(a).iter().map(|&x| f(x)).collect();
        let n = out.len();
        self.push(op, out, n, 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.map(a, Op::OneMinus(a), |x| T::one() - x)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), |x| x.tanh())
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| x.max(T::zero()))
    }

    /// `W x + b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Var {
        let wx = self.matvec(w, x);
        self.add(wx, b)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::with_capacity(parts.iter().map(|&p| self.size(p)).sum());
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let n = out.len();
        self.push(Op::Concat(parts.to_vec()), out, n, 1)
    }

    pub fn scale(&mut self, x: Var, s: Var) -> Var {
        let k = self.scalar(s);
        self.map(x, Op::Scale { x, s }, |v| v * k)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.size(a), self.size(b), "dot size mismatch");
        let mut acc = T::zero();
        for (&x, &y) in self.value(a).iter().zip(self.value(b)) {
            acc += x * y;
        }
        self.push(Op::Dot(a, b), vec![acc], 1, 1)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let q = self.scalar(a) / self.scalar(b);
        self.push(Op::Div(a, b), vec![q], 1, 1)
    }

    pub fn mask(&mut self, x: Var, mask: Vec<T>) -> Var {
        assert_eq!(self.size(x), mask.len(), "mask size mismatch");
        let out: Vec<T> = self
            .value(x)
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let n = out.len();
        self.push(Op::Mask { x, mask }, out, n, 1)
    }

    /// Sum of equally sized nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "sum of nothing");
        let mut out = self.value(parts[0]).to_vec();
        for &p in &parts[1..] {
            assert_eq!(self.size(p), out.len(), "sum size mismatch");
            for (o, &x) in out.iter_mut().zip(self.value(p)) {
                *o += x;
            }
        }
        let n = out.len();
        self.push(Op::Sum(parts.to_vec()), out, n, 1)
    }

    /// Weighted binary cross-entropy of a logit against a 0/1 target,
    /// computed through a stable softplus.
    pub fn weighted_bce(&mut self, logit: Var, target: T, pos_weight: T) -> Var {
        let a = self.scalar(logit);
        let loss = pos_weight * target * softplus(-a) + (T::one() - target) * softplus(a);
        self.push(
            Op::WeightedBce {
                logit,
                target,
                pos_weight,
            },
            vec![loss],
            1,
            1,
        )
    }

    /// Reverse sweep from a one-element `root` with seed gradient 1.
    pub fn backward(&self, root: Var) -> Backward<T> {
        assert_eq!(self.size(root), 1, "backward needs a scalar root");
        let mut grads: Vec<Vec<T>> = self.nodes[..=root.0].iter().map(|_| Vec::new()).collect();
        grads[root.0] = vec![T::one()];
        let mut param_grads = Gradients::empty(self.params.len());

        for i in (0..=root.0).rev() {
            if grads[i].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut grads[i]);
            let node = &self.nodes[i];
            let out = &node.value;
            {
                let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
                    let slot = &mut grads[v.0];
                    if slot.is_empty() {
                        *slot = vec![T::zero(); self.size(v)];
                    }
                    f(slot);
                };
                match &node.op {
                    Op::Input => {}
                    Op::Param(id) => param_grads.add_into(*id, &g),
                    Op::MatVec { m, x } => {
                        let cols = self.nodes[m.0].cols;
                        let xv = self.value(*x);
                        let mv = self.value(*m);
                        acc(*m, &mut |dm| {
                            for (r, &gr) in g.iter().enumerate() {
                                if gr == T::zero() {
                                    continue;
                                }
                                for (d, &xc) in dm[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                                    *d += gr * xc;
                                }
                            }
                        });
                        acc(*x, &mut |dx| {
                            for (r, &gr) in g.iter().enumerate() {
                                if gr == T::zero() {
                                    continue;
                                }
                                for (d, &w) in dx.iter_mut().zip(&mv[r * cols..(r + 1) * cols]) {
                                    *d += gr * w;
                                }
                            }
                        });
                    }
                    Op::Add(a, b) => {
                        acc(*a, &mut |d| add_assign(d, &g));
                        acc(*b, &mut |d| add_assign(d, &g));
                    }
                    Op::Sub(a, b) => {
                        acc(*a, &mut |d| add_assign(d, &g));
                        acc(*b, &mut |d| {
                            for (d, &x) in d.iter_mut().zip(&g) {
                                *d -= x;
                            }
                        });
                    }
                    Op::Mul(a, b) => {
                        let (av, bv) = (self.value(*a), self.value(*b));
                        acc(*a, &mut |d| {
                            for ((d, &gi), &y) in d.iter_mut().zip(&g).zip(bv) {
                                *d += gi * y;
                            }
                        });
                        acc(*b, &mut |d| {
                            for ((d, &gi), &x) in d.iter_mut().zip(&g).zip(av) {
                                *d += gi * x;
                            }
                        });
                    }
                    Op::OneMinus(a) => acc(*a, &mut |d| {
                        for (d, &x) in d.iter_mut().zip(&g) {
                            *d -= x;
                        }
                    }),
                    Op::Tanh(a) => acc(*a, &mut |d| {
                        for ((d, &gi), &y) in d.iter_mut().zip(&g).zip(out) {
                            *d += gi * (T::one() - y * y);
                        }
                    }),
                    Op::Sigmoid(a) => acc(*a, &mut |d| {
                        for ((d, &gi), &y) in d.iter_mut().zip(&g).zip(out) {
                            *d += gi * y * (T::one() - y);
                        }
                    }),
                    Op::Relu(a) => acc(*a, &mut |d| {
                        for ((d, &gi), &y) in d.iter_mut().zip(&g).zip(out) {
                            if y > T::zero() {
                                *d += gi;
                            }
                        }
                    }),
                    Op::Concat(parts) => {
                        let mut offset = 0;
                        for &p in parts {
                            let n = self.size(p);
                            acc(p, &mut |d| add_assign(d, &g[offset..offset + n]));
                            offset += n;
                        }
                    }
                    Op::Scale { x, s } => {
                        let k = self.scalar(*s);
                        let xv = self.value(*x);
                        acc(*x, &mut |d| {
                            for (d, &gi) in d.iter_mut().zip(&g) {
                                *d += gi * k;
                            }
                        });
                        acc(*s, &mut |d| {
                            let mut total = T::zero();
                            for (&gi, &xi) in g.iter().zip(xv) {
                                total += gi * xi;
                            }
                            d[0] += total;
                        });
                    }
                    Op::Dot(a, b) => {
                        let (av, bv) = (self.value(*a), self.value(*b));
                        let g0 = g[0];
                        acc(*a, &mut |d| {
                            for (d, &y) in d.iter_mut().zip(bv) {
                                *d += g0 * y;
                            }
                        });
                        acc(*b, &mut |d| {
                            for (d, &x) in d.iter_mut().zip(av) {
                                *d += g0 * x;
                            }
                        });
                    }
                    Op::Div(a, b) => {
                        let (x, y) = (self.scalar(*a), self.scalar(*b));
                        let g0 = g[0];
                        acc(*a, &mut |d| d[0] += g0 / y);
                        acc(*b, &mut |d| d[0] -= g0 * x / (y * y));
                    }
                    Op::Mask { x, mask } => acc(*x, &mut |d| {
                        for ((d, &gi), &m) in d.iter_mut().zip(&g).zip(mask) {
                            *d += gi * m;
                        }
                    }),
                    Op::Sum(parts) => {
                        for &p in parts {
                            acc(p, &mut |d| add_assign(d, &g));
                        }
                    }
                    Op::WeightedBce {
                        logit,
                        target,
                        pos_weight,
                    } => {
                        let p = sigmoid(self.scalar(*logit));
                        let da = -*pos_weight * *target * (T::one() - p) + (T::one() - *target) * p;
                        let g0 = g[0];
                        acc(*logit, &mut |d| d[0] += g0 * da);
                    }
                }
            }
            grads[i] = g;
        }
        Backward {
            nodes: grads,
            params: param_grads,
        }
    }
}

fn add_assign<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Result of [`Tape::backward`].
pub struct Backward<T> {
    nodes: Vec<Vec<T>>,
    params: Gradients<T>,
}

impl<T: Scalar> Backward<T> {
    /// Gradient of the root with respect to `v`, if `v` influenced it.
    pub fn wrt(&self, v: Var) -> Option<&[T]> {
        self.nodes
            .get(v.0)
            .filter(|g| !g.is_empty())
            .map(Vec::as_slice)
    }

    pub fn params(&self) -> &Gradients<T> {
        &self.params
    }

    pub fn into_params(self) -> Gradients<T> {
        self.params
    }
}

/// Inverted dropout: in training mode zero each element with probability
/// `rate` and scale survivors by `1 / (1 - rate)`; otherwise identity.
pub fn dropout<T: Scalar>(
    tape: &mut Tape<'_, T>,
    x: Var,
    rate: f64,
    training: bool,
    rng: &mut impl Rng,
) -> Var {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if !training || rate == 0.0 {
        return x;
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let mask = (0..tape.size(x))
        .map(|_| {
            if rng.gen::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    tape.mask(x, mask)
}
