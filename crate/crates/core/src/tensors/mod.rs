//! Dense complex tensor core: reshaping, index permutation, pairwise
//! contraction, and the linear-algebra kernels (SVD, Hermitian
//! eigendecomposition, unitary completion) used by every other module.
//!
//! All storage is row-major `Complex64`. Operations are pure functions on
//! immutable inputs and safe to call from multiple threads.

mod linalg;

pub use linalg::{eigh, qr_unitary_completion, svd};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense multi-dimensional array of complex double-precision values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    /// Builds a tensor from a shape and row-major data.
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::Shape("tensor extents must be >= 1".into()));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                len,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Rank-0 tensor holding a single value.
    pub fn scalar(value: Complex64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![value],
        }
    }

    /// Square identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        t
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Tensor { shape, data }
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Row-major strides for the current shape.
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for ax in (0..self.shape.len().saturating_sub(1)).rev() {
            s[ax] = s[ax + 1] * self.shape[ax + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat]
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) {
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat] = value;
    }

    /// Reinterprets the data under a new shape of equal total length.
    pub fn reshape(&self, new_shape: Vec<usize>) -> Result<Tensor> {
        let len: usize = new_shape.iter().product();
        if new_shape.iter().any(|&e| e == 0) || len != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} ({} elements) into {:?}",
                self.shape,
                self.data.len(),
                new_shape
            )));
        }
        Ok(Tensor {
            shape: new_shape,
            data: self.data.clone(),
        })
    }

    /// Permutes the tensor axes; `perm[i]` names the input axis that becomes
    /// output axis `i`.
    pub fn permute(&self, perm: &[usize]) -> Result<Tensor> {
        if perm.len() != self.shape.len() {
            return Err(Error::Dimension(format!(
                "permutation of length {} applied to rank-{} tensor",
                perm.len(),
                self.shape.len()
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::Dimension(format!("invalid permutation {:?}", perm)));
            }
            seen[p] = true;
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let in_strides = self.strides();
        let mut out = Tensor::zeros(out_shape.clone());
        let mut idx = vec![0usize; out_shape.len()];
        for flat_out in 0..self.data.len() {
            let mut flat_in = 0usize;
            for (ax, &p) in perm.iter().enumerate() {
                flat_in += idx[ax] * in_strides[p];
            }
            out.data[flat_out] = self.data[flat_in];
            for ax in (0..out_shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < out_shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Ok(out)
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn adjoint(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!(
                "adjoint requires rank-2 input, got rank {}",
                self.rank()
            )));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Tensor::zeros(vec![c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j].conj();
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Plain matrix product of two rank-2 tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::Shape("matmul requires rank-2 inputs".into()));
    }
    let (m, k) = (a.shape[0], a.shape[1]);
    let (k2, n) = (b.shape[0], b.shape[1]);
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul inner extents {} vs {}",
            k, k2
        )));
    }
    let mut out = Tensor::zeros(vec![m, n]);
    for i in 0..m {
        for l in 0..k {
            let aval = a.data[i * k + l];
            if aval == Complex64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b.data[l * n..(l + 1) * n];
            let crow = &mut out.data[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += aval * brow[j];
            }
        }
    }
    Ok(out)
}

/// Pairwise tensor contraction over the given `(axis_of_a, axis_of_b)` pairs.
///
/// The result carries the free axes of `a` (in order) followed by the free
/// axes of `b`; values are the sum over all paired indices.
pub fn contract(a: &Tensor, b: &Tensor, axes: &[(usize, usize)]) -> Result<Tensor> {
    let mut a_contracted = vec![false; a.rank()];
    let mut b_contracted = vec![false; b.rank()];
    for &(ia, ib) in axes {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(Error::Dimension(format!(
                "contraction axes ({}, {}) out of range for ranks ({}, {})",
                ia,
                ib,
                a.rank(),
                b.rank()
            )));
        }
        if a_contracted[ia] || b_contracted[ib] {
            return Err(Error::Dimension("repeated contraction axis".into()));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::Dimension(format!(
                "contracted extents differ: a axis {} has {}, b axis {} has {}",
                ia, a.shape[ia], ib, b.shape[ib]
            )));
        }
        a_contracted[ia] = true;
        b_contracted[ib] = true;
    }

    let a_free: Vec<usize> = (0..a.rank()).filter(|&i| !a_contracted[i]).collect();
    let b_free: Vec<usize> = (0..b.rank()).filter(|&i| !b_contracted[i]).collect();

    // Permute a to [free..., paired...] and b to [paired..., free...], then
    // multiply as matrices.
    let mut a_perm = a_free.clone();
    a_perm.extend(axes.iter().map(|&(ia, _)| ia));
    let mut b_perm: Vec<usize> = axes.iter().map(|&(_, ib)| ib).collect();
    b_perm.extend(b_free.iter().copied());

    let a_p = a.permute(&a_perm)?;
    let b_p = b.permute(&b_perm)?;

    let m: usize = a_free.iter().map(|&i| a.shape[i]).product();
    let k: usize = axes.iter().map(|&(ia, _)| a.shape[ia]).product();
    let n: usize = b_free.iter().map(|&i| b.shape[i]).product();

    let a_mat = a_p.reshape(vec![m.max(1), k.max(1)])?;
    let b_mat = b_p.reshape(vec![k.max(1), n.max(1)])?;
    let prod = matmul(&a_mat, &b_mat)?;

    let mut out_shape: Vec<usize> = a_free.iter().map(|&i| a.shape[i]).collect();
    out_shape.extend(b_free.iter().map(|&i| b.shape[i]));
    Tensor::new(out_shape, prod.into_data())
}
