//! Dense small-matrix kernel: orthonormal frames, symmetric eigendecomposition
//! by cyclic Jacobi rotations, and best-fit linear subspaces.
//!
//! Everything here is sized for "desk scale" problems (ambient dimension up to
//! a couple of dozen), so matrices are plain row-major `Vec<f64>` buffers.

use std::fmt;

use thiserror::Error;

/// Orthogonality tolerance carried by every frame produced in this crate.
pub const FRAME_TOLERANCE: f64 = 1e-10;

/// Off-diagonal threshold for Jacobi convergence, relative to `‖A‖_F`.
pub const JACOBI_THRESHOLD: f64 = 1e-12;

/// Maximum number of full Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("entry count {len} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("rows are linearly dependent: pivot norm {norm:e} at row {row}")]
    RankDeficient { row: usize, norm: f64 },
    #[error("frame has {rows} rows but ambient dimension is only {dim}")]
    TooManyRows { rows: usize, dim: usize },
    #[error("frame rows are not orthonormal within {tolerance:e}")]
    NotOrthonormal { tolerance: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("requested rank {rank} exceeds dimension {dim}")]
    RankTooLarge { rank: usize, dim: usize },
}

/// Row-major dense matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows. `cols` is needed so
    /// that an empty row list still has a well-defined width.
    pub fn from_rows<R: AsRef<[f64]>>(cols: usize, rows: &[R]) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(LinalgError::ShapeMismatch {
                    rows: rows.len(),
                    cols,
                    len: data.len() + row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Stores `value`, which must be finite; non-finite values are rejected by
    /// a debug assertion since every caller computes from finite inputs.
    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(value.is_finite());
        self.data[i * self.cols + j] = value;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }

    /// Elementwise `self - other`. Panics on shape mismatch.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Selects the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.row_iter() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Sum of squared entries.
pub fn frobenius_sq(a: &Matrix) -> f64 {
    a.data.iter().map(|x| x * x).sum()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

/// A set of orthonormal row vectors in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    vectors: Matrix,
    ortho_tolerance: f64,
}

impl Frame {
    /// Wraps `vectors` after checking that its rows are orthonormal within
    /// `tolerance`.
    pub fn new(vectors: Matrix, tolerance: f64) -> Result<Self, LinalgError> {
        if vectors.rows() > vectors.cols() {
            return Err(LinalgError::TooManyRows { rows: vectors.rows(), dim: vectors.cols() });
        }
        for i in 0..vectors.rows() {
            if (norm_sq(vectors.row(i)) - 1.0).abs() > tolerance {
                return Err(LinalgError::NotOrthonormal { tolerance });
            }
            for j in 0..i {
                if dot(vectors.row(i), vectors.row(j)).abs() > tolerance {
                    return Err(LinalgError::NotOrthonormal { tolerance });
                }
            }
        }
        Ok(Self { vectors, ortho_tolerance: tolerance })
    }

    /// The first `q` standard basis vectors of `R^d`.
    pub fn standard(q: usize, d: usize) -> Self {
        assert!(q <= d);
        let mut vectors = Matrix::zeros(q, d);
        for i in 0..q {
            vectors.set(i, i, 1.0);
        }
        Self { vectors, ortho_tolerance: FRAME_TOLERANCE }
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn ortho_tolerance(&self) -> f64 {
        self.ortho_tolerance
    }

    /// `‖V xᵀ‖²`: squared norm of the projection of `x` onto the frame's span.
    pub fn project_norm_sq(&self, x: &[f64]) -> f64 {
        self.vectors.row_iter().map(|v| dot(v, x).powi(2)).sum()
    }

    /// Orthogonal projection of `x` onto the span of the frame.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for v in self.vectors.row_iter() {
            let c = dot(v, x);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        out
    }

    /// Squared distance from `x` to the span, computed from the explicit
    /// residual vector rather than `‖x‖² − ‖Vxᵀ‖²` to avoid cancellation.
    pub fn residual_sq(&self, x: &[f64]) -> f64 {
        let p = self.project(x);
        x.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum()
    }
}

/// Gram–Schmidt with one re-orthogonalization pass per row.
pub fn orthonormalize(raw: &Matrix, tol: f64) -> Result<Frame, LinalgError> {
    let (q, d) = (raw.rows(), raw.cols());
    if q > d {
        return Err(LinalgError::TooManyRows { rows: q, dim: d });
    }
    let mut out = Matrix::zeros(q, d);
    for i in 0..q {
        let mut v = raw.row(i).to_vec();
        let scale = norm_sq(&v).sqrt();
        for _pass in 0..2 {
            for j in 0..i {
                let u = out.row(j);
                let c = dot(u, &v);
                for (vk, uk) in v.iter_mut().zip(u) {
                    *vk -= c * uk;
                }
            }
        }
        let norm = norm_sq(&v).sqrt();
        if norm <= tol * scale.max(1.0) || norm == 0.0 {
            return Err(LinalgError::RankDeficient { row: i, norm });
        }
        for (o, vk) in out.row_mut(i).iter_mut().zip(&v) {
            *o = vk / norm;
        }
    }
    Frame::new(out, FRAME_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Pairs are returned in descending order of eigenvalue; ties keep the order
/// in which the sweep left them on the diagonal.
pub fn sym_eigen(a: &Matrix) -> Result<Vec<EigenPair>, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::NotSquare { rows: n, cols: a.cols() });
    }
    let norm = frobenius_sq(a).sqrt();
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-12 * norm {
                return Err(LinalgError::NotSymmetric);
            }
        }
    }

    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_THRESHOLD * norm;
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > threshold {
        return Err(LinalgError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }

    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|i| EigenPair { value: m.get(i, i), vector: (0..n).map(|r| v.get(r, i)).collect() })
        .collect();
    // stable: equal eigenvalues keep sweep order
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    Ok(pairs)
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m.get(i, j).powi(2);
            }
        }
    }
    s.sqrt()
}

/// Annihilates `m[p][q]` with a plane rotation and accumulates it into `v`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m.get(p, q);
    if apq == 0.0 {
        return;
    }
    let n = m.rows();
    let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let mkp = m.get(k, p);
        let mkq = m.get(k, q);
        m.set(k, p, c * mkp - s * mkq);
        m.set(k, q, s * mkp + c * mkq);
    }
    for k in 0..n {
        let mpk = m.get(p, k);
        let mqk = m.get(q, k);
        m.set(p, k, c * mpk - s * mqk);
        m.set(q, k, s * mpk + c * mqk);
    }
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// Uncentered scatter matrix `Σ mᵢᵀ mᵢ` of the rows of `points`.
pub fn scatter(points: &Matrix) -> Matrix {
    let d = points.cols();
    let mut s = Matrix::zeros(d, d);
    for row in points.row_iter() {
        for i in 0..d {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..d {
                s.data[i * d + j] += ri * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            s.data[i * d + j] = s.data[j * d + i];
        }
    }
    s
}

/// Sum of squared distances from the rows of `points` to the span of `basis`.
pub fn residual_sq(points: &Matrix, basis: &Frame) -> f64 {
    points.row_iter().map(|x| basis.residual_sq(x)).sum()
}

/// Best-fitting `r`-dimensional linear subspace (through the origin) and the
/// total squared distance of the points to it.
pub fn best_fit_subspace(points: &Matrix, r: usize) -> Result<(Frame, f64), LinalgError> {
    let d = points.cols();
    if r > d {
        return Err(LinalgError::RankTooLarge { rank: r, dim: d });
    }
    let pairs = sym_eigen(&scatter(points))?;
    let mut top = Matrix::zeros(r, d);
    for (i, pair) in pairs.iter().take(r).enumerate() {
        top.row_mut(i).copy_from_slice(&pair.vector);
    }
    let basis = orthonormalize(&top, 1e-8)?;
    let residual = residual_sq(points, &basis);
    Ok((basis, residual))
}
