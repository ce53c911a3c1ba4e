use crate::error::{Error, Result};
use crate::tensor::{broadcast_shape, gemm_nn, gemm_nt, gemm_tn, inverse_axes, permute, Broadcast, Scalar, Tensor};

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(&self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `b` is a shared 2-D matrix when `shared_b`.
    MatMul {
        a: Var,
        b: Var,
        shared_b: bool,
    },
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Reshape(Var),
    Permute(Var, Vec<usize>),
    Softmax(Var),
    /// Cache holds the normalized input followed by per-row inverse std.
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
    },
    Gelu(Var),
    Mse(Var, Var),
    SumAll(Var),
    Concat(Var, Var),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op,
    needs_grad: bool,
    cache: Vec<T>,
}

/// Tape of tensor operations with reverse-mode differentiation.
///
/// Nodes only refer to earlier nodes, so the tape is acyclic and its reverse
/// order is a valid topological order.
#[derive(Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
    backward_done: bool,
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op, needs_grad: bool, cache: Vec<T>) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
            cache,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    /// Trainable input; receives a gradient.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true, Vec::new())
    }

    /// Input that is held fixed.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false, Vec::new())
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    /// Gradient of the last backward pass; zeros for nodes it did not reach.
    pub fn grad(&self, v: Var) -> Tensor<T> {
        let shape = self.nodes[v.0].value.shape.clone();
        match &self.grads[v.0] {
            Some(g) => Tensor { shape, data: g.clone() },
            None => Tensor::zeros(&shape),
        }
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
        self.backward_done = false;
    }

    fn needs(&self, vs: &[Var]) -> bool {
        vs.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    /// Batched product over the last two axes. `b` is either a 2-D matrix
    /// shared by every batch element or has the same batch axes as `a`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let bad = || Error::shape("matmul", format!("{sa:?} x {sb:?}"));
        if sa.len() < 2 || sb.len() < 2 {
            return Err(bad());
        }
        let (m, k) = (sa[sa.len() - 2], sa[sa.len() - 1]);
        let (kb, n) = (sb[sb.len() - 2], sb[sb.len() - 1]);
        let shared_b = sb.len() == 2;
        if k != kb || (!shared_b && sa[..sa.len() - 2] != sb[..sb.len() - 2]) {
            return Err(bad());
        }
        let batch: usize = sa[..sa.len() - 2].iter().product();
        let mut out = vec![T::zero(); batch * m * n];
        {
            let (av, bv) = (&self.value(a).data, &self.value(b).data);
            for i in 0..batch {
                let bs = if shared_b { 0 } else { i * k * n };
                gemm_nn(
                    m,
                    k,
                    n,
                    &av[i * m * k..(i + 1) * m * k],
                    &bv[bs..bs + k * n],
                    &mut out[i * m * n..(i + 1) * m * n],
                );
            }
        }
        let mut shape = sa[..sa.len() - 2].to_vec();
        shape.extend([m, n]);
        let needs = self.needs(&[a, b]);
        Ok(self.push(
            Tensor { shape, data: out },
            Op::MatMul { a, b, shared_b },
            needs,
            Vec::new(),
        ))
    }

    fn binary(&mut self, a: Var, b: Var, op: &'static str) -> Result<(Vec<usize>, Broadcast, Broadcast)> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let out = broadcast_shape(sa, sb).ok_or_else(|| Error::shape(op, format!("{sa:?} and {sb:?}")))?;
        let ba = Broadcast::new(sa, &out);
        let bb = Broadcast::new(sb, &out);
        Ok((out, ba, bb))
    }

    /// Elementwise sum with broadcasting.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (shape, ba, bb) = self.binary(a, b, "add")?;
        let total: usize = shape.iter().product();
        let (av, bv) = (&self.value(a).data, &self.value(b).data);
        let data = match (&ba, &bb) {
            (Broadcast::Same, Broadcast::Same) => av.iter().zip(bv).map(|(&x, &y)| x + y).collect(),
            (Broadcast::Same, Broadcast::Tile(n)) => av
                .chunks(*n)
                .flat_map(|row| row.iter().zip(bv.iter()).map(|(&x, &y)| x + y))
                .collect(),
            _ => (0..total).map(|o| av[ba.at(o)] + bv[bb.at(o)]).collect(),
        };
        let needs = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data }, Op::Add(a, b), needs, Vec::new()))
    }

    /// Elementwise product with broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (shape, ba, bb) = self.binary(a, b, "mul")?;
        let total: usize = shape.iter().product();
        let (av, bv) = (&self.value(a).data, &self.value(b).data);
        let data = (0..total).map(|o| av[ba.at(o)] * bv[bb.at(o)]).collect();
        let needs = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data }, Op::Mul(a, b), needs, Vec::new()))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let k = T::of(s);
        let v = self.value(a);
        let value = Tensor {
            shape: v.shape.clone(),
            data: v.data.iter().map(|&x| x * k).collect(),
        };
        let needs = self.needs(&[a]);
        self.push(value, Op::Scale(a, s), needs, Vec::new())
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(a);
        if shape.iter().product::<usize>() != v.len() {
            return Err(Error::shape("reshape", format!("{:?} -> {shape:?}", v.shape)));
        }
        let value = Tensor {
            shape: shape.to_vec(),
            data: v.data.clone(),
        };
        let needs = self.needs(&[a]);
        Ok(self.push(value, Op::Reshape(a), needs, Vec::new()))
    }

    /// Reorders axes: output axis `i` is input axis `axes[i]`.
    pub fn permute(&mut self, a: Var, axes: &[usize]) -> Result<Var> {
        let v = self.value(a);
        let mut seen = vec![false; v.rank()];
        let valid = axes.len() == v.rank()
            && axes
                .iter()
                .all(|&x| x < seen.len() && !std::mem::replace(&mut seen[x], true));
        if !valid {
            return Err(Error::shape("permute", format!("{:?} by {axes:?}", v.shape)));
        }
        let shape: Vec<usize> = axes.iter().map(|&x| v.shape[x]).collect();
        let data = permute(&v.data, &v.shape, axes);
        let needs = self.needs(&[a]);
        Ok(self.push(Tensor { shape, data }, Op::Permute(a, axes.to_vec()), needs, Vec::new()))
    }

    /// Swaps the last two axes.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let r = self.shape(a).len();
        if r < 2 {
            return Err(Error::shape("transpose", format!("{:?}", self.shape(a))));
        }
        let mut axes: Vec<usize> = (0..r).collect();
        axes.swap(r - 2, r - 1);
        self.permute(a, &axes)
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let d = *v.shape.last().ok_or_else(|| Error::shape("softmax", "rank 0"))?;
        let mut data = v.data.clone();
        if d > 0 {
            for row in data.chunks_mut(d) {
                let max = row.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
                let mut sum = T::zero();
                for x in row.iter_mut() {
                    *x = (*x - max).exp();
                    sum = sum + *x;
                }
                for x in row.iter_mut() {
                    *x = *x / sum;
                }
            }
        }
        let shape = v.shape.clone();
        let needs = self.needs(&[a]);
        Ok(self.push(Tensor { shape, data }, Op::Softmax(a), needs, Vec::new()))
    }

    /// Normalizes the last axis to zero mean and unit variance, then applies
    /// `gamma * x + beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let v = self.value(x);
        let d = *v.shape.last().ok_or_else(|| Error::shape("layer_norm", "rank 0"))?;
        if self.shape(gamma) != [d] || self.shape(beta) != [d] {
            return Err(Error::shape(
                "layer_norm",
                format!(
                    "{:?} with gamma {:?}, beta {:?}",
                    v.shape,
                    self.shape(gamma),
                    self.shape(beta)
                ),
            ));
        }
        let rows = v.len() / d.max(1);
        let mut xhat = vec![T::zero(); v.len()];
        let mut rstd = vec![T::zero(); rows];
        let dn = T::of(d as f64);
        for r in 0..rows {
            let row = &v.data[r * d..(r + 1) * d];
            let mean = row.iter().fold(T::zero(), |s, &x| s + x) / dn;
            let var = row.iter().fold(T::zero(), |s, &x| s + (x - mean) * (x - mean)) / dn;
            let inv = T::one() / (var + T::of(LN_EPS)).sqrt();
            rstd[r] = inv;
            for (o, &x) in xhat[r * d..(r + 1) * d].iter_mut().zip(row) {
                *o = (x - mean) * inv;
            }
        }
        let (g, b) = (&self.value(gamma).data, &self.value(beta).data);
        let data = xhat.iter().enumerate().map(|(i, &h)| g[i % d] * h + b[i % d]).collect();
        let shape = v.shape.clone();
        let needs = self.needs(&[x, gamma, beta]);
        xhat.extend(rstd);
        Ok(self.push(Tensor { shape, data }, Op::LayerNorm { x, gamma, beta }, needs, xhat))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let (c, k) = (T::of(GELU_C), T::of(GELU_A));
        let half = T::of(0.5);
        let data = v
            .data
            .iter()
            .map(|&x| half * x * (T::one() + (c * (x + k * x * x * x)).tanh()))
            .collect();
        let shape = v.shape.clone();
        let needs = self.needs(&[a]);
        self.push(Tensor { shape, data }, Op::Gelu(a), needs, Vec::new())
    }

    /// Mean of squared differences; a scalar.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::shape("mean_square_error", format!("{sa:?} vs {sb:?}")));
        }
        let (av, bv) = (&self.value(a).data, &self.value(b).data);
        let n = T::of(av.len().max(1) as f64);
        let sum = av.iter().zip(bv).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y));
        let needs = self.needs(&[a, b]);
        Ok(self.push(Tensor::scalar(sum / n), Op::Mse(a, b), needs, Vec::new()))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().fold(T::zero(), |s, &x| s + x);
        let needs = self.needs(&[a]);
        self.push(Tensor::scalar(s), Op::SumAll(a), needs, Vec::new())
    }

    /// Joins along the last axis; leading axes must agree.
    pub fn concat_last(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.is_empty() || sa.len() != sb.len() || sa[..sa.len() - 1] != sb[..sb.len() - 1] {
            return Err(Error::shape("concat", format!("{sa:?} and {sb:?}")));
        }
        let (da, db) = (sa[sa.len() - 1], sb[sb.len() - 1]);
        let (av, bv) = (&self.value(a).data, &self.value(b).data);
        let rows = av.len() / da.max(1);
        let mut data = Vec::with_capacity(av.len() + bv.len());
        for r in 0..rows {
            data.extend_from_slice(&av[r * da..(r + 1) * da]);
            data.extend_from_slice(&bv[r * db..(r + 1) * db]);
        }
        let mut shape = sa.clone();
        *shape.last_mut().unwrap() = da + db;
        let needs = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data }, Op::Concat(a, b), needs, Vec::new()))
    }

    fn accumulate(&mut self, v: Var, delta: Vec<T>) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        match &mut self.grads[v.0] {
            Some(g) => g.iter_mut().zip(delta).for_each(|(x, d)| *x = *x + d),
            slot @ None => *slot = Some(delta),
        }
    }

    /// Adds `g` (laid out like `out`) into the gradient of `src`, summing over
    /// broadcast axes.
    fn accumulate_reduced(&mut self, src: Var, out_shape: &[usize], g: &[T], scale_by: Option<(&[T], &Broadcast)>) {
        if !self.nodes[src.0].needs_grad {
            return;
        }
        let src_shape = self.shape(src).to_vec();
        let bc = Broadcast::new(&src_shape, out_shape);
        let mut acc = vec![T::zero(); self.value(src).len()];
        for (o, &go) in g.iter().enumerate() {
            let factor = match scale_by {
                Some((other, ob)) => other[ob.at(o)],
                None => T::one(),
            };
            acc[bc.at(o)] = acc[bc.at(o)] + go * factor;
        }
        self.accumulate(src, acc);
    }

    /// Reverse pass from a scalar `loss`. Running it twice without
    /// [`Graph::zero_grad`] is an error.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        if self.value(loss).len() != 1 {
            return Err(Error::NonScalarLoss(self.shape(loss).to_vec()));
        }
        self.backward_done = true;
        self.grads.iter_mut().for_each(|g| *g = None);
        if !self.nodes[loss.0].needs_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.backward_node(i, &g);
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn backward_node(&mut self, i: usize, g: &[T]) {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::MatMul { a, b, shared_b } => {
                let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
                let (m, k) = (sa[sa.len() - 2], sa[sa.len() - 1]);
                let n = sb[sb.len() - 1];
                let batch: usize = sa[..sa.len() - 2].iter().product();
                if self.nodes[a.0].needs_grad {
                    let bv = &self.value(b).data;
                    let mut ga = vec![T::zero(); batch * m * k];
                    for t in 0..batch {
                        let bs = if shared_b { 0 } else { t * k * n };
                        gemm_nt(
                            m,
                            n,
                            k,
                            &g[t * m * n..(t + 1) * m * n],
                            &bv[bs..bs + k * n],
                            &mut ga[t * m * k..(t + 1) * m * k],
                        );
                    }
                    self.accumulate(a, ga);
                }
                if self.nodes[b.0].needs_grad {
                    let av = &self.value(a).data;
                    let mut gb = vec![T::zero(); self.value(b).len()];
                    for t in 0..batch {
                        let bs = if shared_b { 0 } else { t * k * n };
                        gemm_tn(
                            k,
                            m,
                            n,
                            &av[t * m * k..(t + 1) * m * k],
                            &g[t * m * n..(t + 1) * m * n],
                            &mut gb[bs..bs + k * n],
                        );
                    }
                    self.accumulate(b, gb);
                }
            }
            Op::Add(a, b) => {
                let out = self.nodes[i].value.shape.clone();
                self.accumulate_reduced(a, &out, g, None);
                self.accumulate_reduced(b, &out, g, None);
            }
            Op::Mul(a, b) => {
                let out = self.nodes[i].value.shape.clone();
                let av = self.value(a).data.clone();
                let bv = self.value(b).data.clone();
                let ba = Broadcast::new(self.shape(a), &out);
                let bb = Broadcast::new(self.shape(b), &out);
                self.accumulate_reduced(a, &out, g, Some((&bv, &bb)));
                self.accumulate_reduced(b, &out, g, Some((&av, &ba)));
            }
            Op::Scale(a, s) => {
                let k = T::of(s);
                self.accumulate(a, g.iter().map(|&x| x * k).collect());
            }
            Op::Reshape(a) => self.accumulate(a, g.to_vec()),
            Op::Permute(a, axes) => {
                let out = self.nodes[i].value.shape.clone();
                let back = permute(g, &out, &inverse_axes(&axes));
                self.accumulate(a, back);
            }
            Op::Softmax(a) => {
                let y = &self.nodes[i].value;
                let d = *y.shape.last().unwrap();
                let mut ga = vec![T::zero(); y.len()];
                if d > 0 {
                    for ((gr, yr), out) in g.chunks(d).zip(y.data.chunks(d)).zip(ga.chunks_mut(d)) {
                        let dotp = gr.iter().zip(yr).fold(T::zero(), |s, (&x, &y)| s + x * y);
                        for ((o, &gx), &yx) in out.iter_mut().zip(gr).zip(yr) {
                            *o = yx * (gx - dotp);
                        }
                    }
                }
                self.accumulate(a, ga);
            }
            Op::LayerNorm { x, gamma, beta } => {
                let d = *self.shape(x).last().unwrap();
                let n = self.value(x).len();
                let rows = n / d.max(1);
                let cache = &self.nodes[i].cache;
                let (xhat, rstd) = cache.split_at(n);
                let gam = &self.value(gamma).data;
                let mut gx = vec![T::zero(); n];
                let mut gg = vec![T::zero(); d];
                let mut gbeta = vec![T::zero(); d];
                let dn = T::of(d as f64);
                for r in 0..rows {
                    let span = r * d..(r + 1) * d;
                    let (gr, hr) = (&g[span.clone()], &xhat[span.clone()]);
                    let mut sum_dh = T::zero();
                    let mut sum_dh_h = T::zero();
                    for j in 0..d {
                        let dh = gr[j] * gam[j];
                        sum_dh = sum_dh + dh;
                        sum_dh_h = sum_dh_h + dh * hr[j];
                        gg[j] = gg[j] + gr[j] * hr[j];
                        gbeta[j] = gbeta[j] + gr[j];
                    }
                    let inv = rstd[r] / dn;
                    for j in 0..d {
                        let dh = gr[j] * gam[j];
                        gx[r * d + j] = inv * (dn * dh - sum_dh - hr[j] * sum_dh_h);
                    }
                }
                self.accumulate(x, gx);
                self.accumulate(gamma, gg);
                self.accumulate(beta, gbeta);
            }
            Op::Gelu(a) => {
                let (c, k) = (T::of(GELU_C), T::of(GELU_A));
                let half = T::of(0.5);
                let three = T::of(3.0);
                let ga = self
                    .value(a)
                    .data
                    .iter()
                    .zip(g)
                    .map(|(&x, &gx)| {
                        let th = (c * (x + k * x * x * x)).tanh();
                        let dudx = c * (T::one() + three * k * x * x);
                        gx * (half * (T::one() + th) + half * x * (T::one() - th * th) * dudx)
                    })
                    .collect();
                self.accumulate(a, ga);
            }
            Op::Mse(a, b) => {
                let (av, bv) = (&self.value(a).data, &self.value(b).data);
                let k = g[0] * T::of(2.0) / T::of(av.len().max(1) as f64);
                let ga: Vec<T> = av.iter().zip(bv).map(|(&x, &y)| k * (x - y)).collect();
                let gb: Vec<T> = ga.iter().map(|&x| -x).collect();
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::SumAll(a) => {
                let n = self.value(a).len();
                self.accumulate(a, vec![g[0]; n]);
            }
            Op::Concat(a, b) => {
                let da = *self.shape(a).last().unwrap();
                let db = *self.shape(b).last().unwrap();
                let rows = g.len() / (da + db).max(1);
                let mut ga = Vec::with_capacity(rows * da);
                let mut gb = Vec::with_capacity(rows * db);
                for row in g.chunks(da + db) {
                    ga.extend_from_slice(&row[..da]);
                    gb.extend_from_slice(&row[da..]);
                }
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
        }
    }
}
