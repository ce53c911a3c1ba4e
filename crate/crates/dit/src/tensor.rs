use std::fmt::Debug;

use num_traits::Float;

use crate::error::{Error, Result};

/// Element type of the engine: `f32` for training, `f64` for gradient checks.
pub trait Scalar: Float + Default + Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("{shape:?} does not hold {} values", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(shape.to_vec(), data.iter().map(|&x| T::of(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| U::of(x.as_f64())).collect(),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|x| x.as_f64()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::shape("reshape", format!("{:?} -> {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Numpy-style broadcast of two shapes.
pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// How an operand of shape `src` is read while iterating over `out`.
pub(crate) enum Broadcast {
    Same,
    /// `src` equals a suffix of `out`; read index is `o % len`.
    Tile(usize),
    /// Per-output source offsets.
    General(Vec<usize>),
}

impl Broadcast {
    pub(crate) fn new(src: &[usize], out: &[usize]) -> Self {
        if src == out {
            return Broadcast::Same;
        }
        let src_len: usize = src.iter().product();
        let trimmed: Vec<usize> = {
            let lead = src.iter().take_while(|&&d| d == 1).count();
            src[lead..].to_vec()
        };
        if out.ends_with(&trimmed) {
            return Broadcast::Tile(src_len.max(1));
        }
        let rank = out.len();
        let src_strides = strides(src);
        let mut eff = vec![0usize; rank];
        for i in 0..src.len() {
            let o = i + rank - src.len();
            if src[i] != 1 {
                eff[o] = src_strides[i];
            }
        }
        let total: usize = out.iter().product();
        let mut offsets = Vec::with_capacity(total);
        let mut idx = vec![0usize; rank];
        let mut off = 0usize;
        for _ in 0..total {
            offsets.push(off);
            for d in (0..rank).rev() {
                idx[d] += 1;
                off += eff[d];
                if idx[d] < out[d] {
                    break;
                }
                off -= eff[d] * idx[d];
                idx[d] = 0;
            }
        }
        Broadcast::General(offsets)
    }

    #[inline]
    pub(crate) fn at(&self, o: usize) -> usize {
        match self {
            Broadcast::Same => o,
            Broadcast::Tile(n) => o % n,
            Broadcast::General(v) => v[o],
        }
    }
}

/// Copies `src` (shape `shape`) into axis order `axes`.
pub(crate) fn permute<T: Copy + Default>(src: &[T], shape: &[usize], axes: &[usize]) -> Vec<T> {
    let rank = shape.len();
    let mut out = vec![T::default(); src.len()];
    if rank == 0 || src.is_empty() {
        out.copy_from_slice(src);
        return out;
    }
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let step: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
    let inner = out_shape[rank - 1];
    let inner_step = step[rank - 1];
    let outer: usize = out_shape[..rank - 1].iter().product();
    let mut idx = vec![0usize; rank - 1];
    let mut base = 0usize;
    let mut o = 0usize;
    for _ in 0..outer {
        let mut s = base;
        for slot in &mut out[o..o + inner] {
            *slot = src[s];
            s += inner_step;
        }
        o += inner;
        for d in (0..rank - 1).rev() {
            idx[d] += 1;
            base += step[d];
            if idx[d] < out_shape[d] {
                break;
            }
            base -= step[d] * idx[d];
            idx[d] = 0;
        }
    }
    out
}

pub(crate) fn inverse_axes(axes: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; axes.len()];
    for (i, &a) in axes.iter().enumerate() {
        inv[a] = i;
    }
    inv
}

/// `c += a * b` with `a: m x k`, `b: k x n`.
pub(crate) fn gemm_nn<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        axpy_rows(crow, arow, b, n);
    }
}

/// `c += sum_p coef[p] * rows[p]`, four rows per pass over `c`.
#[inline]
fn axpy_rows<T: Scalar>(c: &mut [T], coef: &[T], rows: &[T], n: usize) {
    let k = coef.len();
    let mut p = 0;
    while p + 4 <= k {
        let (a0, a1, a2, a3) = (coef[p], coef[p + 1], coef[p + 2], coef[p + 3]);
        let r0 = &rows[p * n..(p + 1) * n];
        let r1 = &rows[(p + 1) * n..(p + 2) * n];
        let r2 = &rows[(p + 2) * n..(p + 3) * n];
        let r3 = &rows[(p + 3) * n..(p + 4) * n];
        for j in 0..n {
            c[j] = c[j] + ((a0 * r0[j] + a1 * r1[j]) + (a2 * r2[j] + a3 * r3[j]));
        }
        p += 4;
    }
    while p < k {
        let a0 = coef[p];
        let r0 = &rows[p * n..(p + 1) * n];
        for j in 0..n {
            c[j] = c[j] + a0 * r0[j];
        }
        p += 1;
    }
}

/// `c += a * b^T` with `a: m x k`, `b: n x k`.
pub(crate) fn gemm_nt<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            c[i * n + j] = c[i * n + j] + dot(arow, brow);
        }
    }
}

/// `c += a^T * b` with `a: k x m`, `b: k x n`.
pub(crate) fn gemm_tn<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    let mut p = 0;
    while p < k {
        let step = (k - p).min(4);
        for i in 0..m {
            let mut coef = [T::zero(); 4];
            for (q, slot) in coef.iter_mut().enumerate().take(step) {
                *slot = a[(p + q) * m + i];
            }
            axpy_rows(&mut c[i * n..(i + 1) * n], &coef[..step], &b[p * n..(p + step) * n], n);
        }
        p += step;
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (&x, &y) in ra.iter().zip(rb) {
        s = s + x * y;
    }
    s
}
