use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense three-way array stored with the first index fastest:
/// entry `(i, j, k)` lives at `i + I (j + J k)`, so every frontal slice
/// `X[:, :, k]` is contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let at = t.offset(i, j, k);
                    t.data[at] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidInput(format!(
                "{} values cannot fill a {}x{}x{} tensor",
                data.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let at = self.offset(i, j, k);
        self.data[at] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frontal slice `X[:, :, k]` as an `I × J` matrix.
    pub fn slice(&self, k: usize) -> DMatrix<f64> {
        let n = self.dims[0] * self.dims[1];
        DMatrix::from_column_slice(self.dims[0], self.dims[1], &self.data[k * n..(k + 1) * n])
    }

    /// Tensor built from the listed frontal slices, in order.
    pub fn select_slices(&self, ks: &[usize]) -> Self {
        let n = self.dims[0] * self.dims[1];
        let mut data = Vec::with_capacity(n * ks.len());
        for &k in ks {
            data.extend_from_slice(&self.data[k * n..(k + 1) * n]);
        }
        Self {
            dims: [self.dims[0], self.dims[1], ks.len()],
            data,
        }
    }
}

fn check_mode(mode: usize) -> Result<()> {
    if (1..=3).contains(&mode) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("mode must be 1, 2 or 3, got {mode}")))
    }
}

/// Row and column of `(i, j, k)` in the mode-`mode` unfolding. Column
/// orderings follow the convention under which an exact CP tensor satisfies
/// `X(1) = A (C ⊙ B)ᵀ`, `X(2) = B (C ⊙ A)ᵀ`, `X(3) = C (B ⊙ A)ᵀ`.
fn unfold_position(dims: [usize; 3], mode: usize, i: usize, j: usize, k: usize) -> (usize, usize) {
    match mode {
        1 => (i, j + dims[1] * k),
        2 => (j, i + dims[0] * k),
        _ => (k, i + dims[0] * j),
    }
}

fn unfold_shape(dims: [usize; 3], mode: usize) -> (usize, usize) {
    match mode {
        1 => (dims[0], dims[1] * dims[2]),
        2 => (dims[1], dims[0] * dims[2]),
        _ => (dims[2], dims[0] * dims[1]),
    }
}

/// Mode-`mode` matricization (modes are numbered 1 to 3).
pub fn unfold(x: &Tensor3, mode: usize) -> Result<DMatrix<f64>> {
    check_mode(mode)?;
    let dims = x.dims();
    let (r, c) = unfold_shape(dims, mode);
    let mut out = DMatrix::zeros(r, c);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                out[unfold_position(dims, mode, i, j, k)] = x.get(i, j, k);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`unfold`] for a tensor of shape `dims`.
pub fn refold(m: &DMatrix<f64>, mode: usize, dims: [usize; 3]) -> Result<Tensor3> {
    check_mode(mode)?;
    if m.shape() != unfold_shape(dims, mode) {
        return Err(Error::InvalidInput(format!(
            "a {}x{} matrix is not a mode-{mode} unfolding of {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(Tensor3::from_fn(dims, |i, j, k| m[unfold_position(dims, mode, i, j, k)]))
}

/// Column-wise Kronecker product: column `r` is `a_r ⊗ b_r`, with the row
/// index of `(a_i, b_j)` equal to `i·J + j`.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidInput(format!(
            "Khatri-Rao operands need equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let nb = b.nrows();
    Ok(DMatrix::from_fn(a.nrows() * nb, a.ncols(), |row, r| {
        a[(row / nb, r)] * b[(row % nb, r)]
    }))
}
