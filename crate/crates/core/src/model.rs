//! Problem instances, the two frame representations of an `r`-dimensional
//! subspace, outlier selection and objective evaluation.
//!
//! A subspace `U ⊂ R^d` of dimension `r` is carried either by an orthonormal
//! basis of `U` itself ([`RepMode::Span`], `r` rows) or by an orthonormal basis
//! of its orthogonal complement ([`RepMode::Complement`], `d − r` rows). Both
//! give the squared distance of a point to `U` as a quadratic form in the
//! frame entries, which is what makes the cell decomposition possible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, best_fit_subspace, Frame, LinalgError, Matrix};

/// Distances closer than this are treated as ties when picking outliers.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("rank {rank} exceeds dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("outlier budget {k} exceeds row count {n}")]
    BudgetOutOfRange { k: usize, n: usize },
    #[error("vector of length {got} where dimension {expected} was expected")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad outlier index set: {0}")]
    BadIndex(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The triple `(M, r, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    data: Matrix,
    rank: usize,
    outliers: usize,
}

impl Instance {
    pub fn new(data: Matrix, rank: usize, outliers: usize) -> Result<Self, ModelError> {
        if rank > data.cols() {
            return Err(ModelError::RankOutOfRange { rank, dim: data.cols() });
        }
        if outliers > data.rows() {
            return Err(ModelError::BudgetOutOfRange { k: outliers, n: data.rows() });
        }
        Ok(Self { data, rank, outliers })
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn outliers(&self) -> usize {
        self.outliers
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn d(&self) -> usize {
        self.data.cols()
    }

    pub fn with_outliers(&self, outliers: usize) -> Result<Self, ModelError> {
        Self::new(self.data.clone(), self.rank, outliers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepMode {
    /// Frame rows span the subspace.
    Span,
    /// Frame rows span the orthogonal complement.
    Complement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceRep {
    frame: Frame,
    mode: RepMode,
}

impl SubspaceRep {
    pub fn new(frame: Frame, mode: RepMode) -> Self {
        Self { frame, mode }
    }

    /// Representation of the given rank-`r` subspace of an instance, checking
    /// the frame row count against the mode.
    pub fn for_rank(frame: Frame, mode: RepMode, r: usize) -> Result<Self, ModelError> {
        let rep = Self::new(frame, mode);
        if rep.subspace_dim() != r {
            return Err(ModelError::RankOutOfRange { rank: rep.subspace_dim(), dim: r });
        }
        Ok(rep)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mode(&self) -> RepMode {
        self.mode
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.dim()
    }

    /// Dimension of the represented subspace.
    pub fn subspace_dim(&self) -> usize {
        match self.mode {
            RepMode::Span => self.frame.len(),
            RepMode::Complement => self.frame.dim() - self.frame.len(),
        }
    }

    /// Squared Euclidean distance from `x` to the represented subspace.
    pub fn dist_sq(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.ambient_dim() {
            return Err(ModelError::DimensionMismatch { expected: self.ambient_dim(), got: x.len() });
        }
        Ok(self.dist_sq_unchecked(x))
    }

    pub(crate) fn dist_sq_unchecked(&self, x: &[f64]) -> f64 {
        match self.mode {
            RepMode::Complement => self.frame.project_norm_sq(x),
            // ‖x‖² − ‖Vxᵀ‖², clamped: rounding can push it slightly negative
            RepMode::Span => (linalg::norm_sq(x) - self.frame.project_norm_sq(x)).max(0.0),
        }
    }
}

/// A feasible `(L, S)` pair with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Sorted row indices treated as outliers.
    pub outlier_set: Vec<usize>,
    /// Orthonormal basis of the fitted subspace (`r` rows).
    pub basis: Frame,
    /// Low-rank part: projections of the kept rows, zero at outlier rows.
    pub low_rank: Matrix,
    /// Sparse part: original rows at outlier indices, zero elsewhere.
    pub sparse: Matrix,
    /// `‖M − L − S‖²_F`.
    pub cost: f64,
}

/// Indices of the `k` rows farthest from `rep`, sorted ascending. Rows whose
/// distances differ by at most [`TIE_TOLERANCE`] are ranked by lower index.
pub fn select_outliers(inst: &Instance, rep: &SubspaceRep) -> Vec<usize> {
    let dists: Vec<f64> = inst.data().row_iter().map(|m| rep.dist_sq_unchecked(m)).collect();
    select_farthest(&dists, inst.outliers())
}

pub(crate) fn select_farthest(dists: &[f64], k: usize) -> Vec<usize> {
    let mut taken = vec![false; dists.len()];
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for (i, &di) in dists.iter().enumerate() {
            if taken[i] {
                continue;
            }
            match best {
                Some(b) if di <= dists[b] + TIE_TOLERANCE => {}
                _ => best = Some(i),
            }
        }
        let b = best.expect("k <= n");
        taken[b] = true;
        picked.push(b);
    }
    picked.sort_unstable();
    picked
}

fn check_outlier_set(inst: &Instance, set: &[usize]) -> Result<Vec<usize>, ModelError> {
    if set.len() > inst.outliers() {
        return Err(ModelError::BadIndex(format!(
            "{} indices given but budget is {}",
            set.len(),
            inst.outliers()
        )));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if let Some(&bad) = sorted.iter().find(|&&i| i >= inst.n()) {
        return Err(ModelError::BadIndex(format!("index {bad} out of range for {} rows", inst.n())));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(ModelError::BadIndex("duplicate index".into()));
    }
    Ok(sorted)
}

/// Removes the rows in `outlier_set` and solves classical PCA on the rest.
pub fn evaluate_subset(inst: &Instance, outlier_set: &[usize]) -> Result<Solution, ModelError> {
    let outlier_set = check_outlier_set(inst, outlier_set)?;
    let (n, d, r) = (inst.n(), inst.d(), inst.rank());
    let kept = kept_rows(n, &outlier_set);

    let basis = if kept.is_empty() {
        Frame::standard(r, d)
    } else {
        best_fit_subspace(&inst.data().select_rows(&kept), r)?.0
    };

    let mut low_rank = Matrix::zeros(n, d);
    let mut sparse = Matrix::zeros(n, d);
    for &i in &kept {
        low_rank.row_mut(i).copy_from_slice(&basis.project(inst.data().row(i)));
    }
    for &i in &outlier_set {
        sparse.row_mut(i).copy_from_slice(inst.data().row(i));
    }
    let cost = kept.iter().map(|&i| basis.residual_sq(inst.data().row(i))).sum();
    Ok(Solution { outlier_set, basis, low_rank, sparse, cost })
}

/// Picks the outliers induced by `rep` and re-optimizes the subspace on the
/// remaining rows.
pub fn evaluate_from_frame(inst: &Instance, rep: &SubspaceRep) -> Result<Solution, ModelError> {
    if rep.ambient_dim() != inst.d() {
        return Err(ModelError::DimensionMismatch { expected: inst.d(), got: rep.ambient_dim() });
    }
    evaluate_subset(inst, &select_outliers(inst, rep))
}

/// Cost of the subset without assembling `L` and `S`; used in hot loops.
pub(crate) fn subset_cost(inst: &Instance, outlier_set: &[usize]) -> Result<f64, LinalgError> {
    let kept = kept_rows(inst.n(), outlier_set);
    if kept.is_empty() {
        return Ok(0.0);
    }
    let points = inst.data().select_rows(&kept);
    Ok(best_fit_subspace(&points, inst.rank())?.1)
}

pub(crate) fn kept_rows(n: usize, sorted_outliers: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted_outliers.len());
    let mut it = sorted_outliers.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}
