//! Cell-based reduction of PCA with outliers to classical PCA.
//!
//! Frames `V` with orthonormal rows form an algebraic set. For every pair of
//! rows `i < j` of `M` the comparison polynomial
//! `P_ij(V) = dist²(m_i, U_V) − dist²(m_j, U_V)` is a quartic on that set, and
//! on each cell of the arrangement cut out by the `P_ij` the order of the
//! distances, hence the set of the `k` farthest rows, is fixed. Taking one
//! frame from every cell, removing its `k` farthest rows and solving PCA on
//! the rest yields the optimum among the resulting candidates.
//!
//! Two cell sources are provided:
//!
//! * [`enumerate_cells_2d`]: exact for `d = 2`, `r = 1`, where the frame set is
//!   the unit circle and every `P_ij` vanishes at no more than four angles that
//!   are available in closed form.
//! * [`sample_cells_random`]: Haar-random frames for any `d`, which meet every
//!   full-dimensional cell with probability tending to one as the budget grows.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, orthonormalize, Frame, LinalgError, Matrix};
use crate::model::{
    evaluate_subset, select_outliers, subset_cost, Instance, ModelError, RepMode, Solution,
    SubspaceRep,
};

/// Default scale factor for classifying a comparison value as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrangementError {
    #[error("DimensionUnsupported: exact cell enumeration needs d = 2 and r = 1, got d = {d}, r = {r}")]
    DimensionUnsupported { d: usize, r: usize },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<LinalgError> for ArrangementError {
    fn from(e: LinalgError) -> Self {
        ArrangementError::Model(ModelError::Linalg(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMode {
    Exact2D,
    RandomSample,
}

/// Which frame representation random sampling draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepChoice {
    /// Whichever needs fewer frame rows; complement on a tie.
    Auto,
    Span,
    Complement,
}

impl RepChoice {
    pub fn resolve(self, d: usize, r: usize) -> RepMode {
        match self {
            RepChoice::Span => RepMode::Span,
            RepChoice::Complement => RepMode::Complement,
            RepChoice::Auto if d - r <= r => RepMode::Complement,
            RepChoice::Auto => RepMode::Span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: CellMode,
    pub sample_budget: usize,
    pub seed: u64,
    pub zero_tol: f64,
    pub rep_choice: RepChoice,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: CellMode::Exact2D,
            sample_budget: 1000,
            seed: 0,
            zero_tol: DEFAULT_ZERO_TOL,
            rep_choice: RepChoice::Auto,
        }
    }
}

impl SolverConfig {
    pub fn exact_2d() -> Self {
        Self::default()
    }

    pub fn random_sample(sample_budget: usize, seed: u64) -> Self {
        Self { mode: CellMode::RandomSample, sample_budget, seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), ArrangementError> {
        if self.sample_budget == 0 {
            return Err(ArrangementError::BadConfig("sample budget must be at least 1".into()));
        }
        if self.zero_tol.is_nan() || self.zero_tol <= 0.0 {
            return Err(ArrangementError::BadConfig("zero tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Open arc of the circle (full-dimensional cell).
    Arc,
    /// Single boundary angle where some comparison polynomial vanishes.
    Boundary,
    /// A randomly drawn frame; its cell is not otherwise identified.
    Sampled,
}

/// One cell of the arrangement, represented by a witness frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateCell {
    pub kind: CellKind,
    pub witness: SubspaceRep,
    pub outlier_set: Vec<usize>,
    /// Signs of `P_ij` at the witness for all `i < j`, in row-major pair order.
    pub sign_summary: Vec<i8>,
}

/// `dist²(m_i) − dist²(m_j)` written in the form native to the representation.
pub fn compare_poly(rep: &SubspaceRep, i: usize, j: usize, m: &Matrix) -> f64 {
    let (mi, mj) = (m.row(i), m.row(j));
    let frame = rep.frame();
    match rep.mode() {
        RepMode::Complement => frame.project_norm_sq(mi) - frame.project_norm_sq(mj),
        RepMode::Span => {
            (linalg::norm_sq(mi) - frame.project_norm_sq(mi))
                - (linalg::norm_sq(mj) - frame.project_norm_sq(mj))
        }
    }
}

/// Sign of a comparison value, with the zero band scaled by the point norms.
pub fn classify_sign(value: f64, mi: &[f64], mj: &[f64], zero_tol: f64) -> i8 {
    let band = zero_tol * (1.0 + linalg::norm_sq(mi) + linalg::norm_sq(mj));
    if value.abs() <= band {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    }
}

pub fn sign_summary(rep: &SubspaceRep, m: &Matrix, zero_tol: f64) -> Vec<i8> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(classify_sign(compare_poly(rep, i, j, m), m.row(i), m.row(j), zero_tol));
        }
    }
    out
}

/// Zero set of `θ ↦ (v·m_i)² − (v·m_j)²` on the unit circle, `v = (cos θ, sin θ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSet {
    /// Sorted angles in `[0, 2π)`.
    Finite(Vec<f64>),
    /// The polynomial vanishes identically (`m_i = ±m_j`).
    FullCircle,
}

/// Uses the factorization `(v·(m_i − m_j)) (v·(m_i + m_j)) = 0`: each nonzero
/// factor vanishes at the two unit vectors orthogonal to it.
pub fn equidist_angles_2d(mi: [f64; 2], mj: [f64; 2]) -> AngleSet {
    let diff = [mi[0] - mj[0], mi[1] - mj[1]];
    let sum = [mi[0] + mj[0], mi[1] + mj[1]];
    let scale = f64::EPSILON * (mi[0].hypot(mi[1]) + mj[0].hypot(mj[1]));
    let zero = |u: [f64; 2]| u[0].hypot(u[1]) <= scale;
    if zero(diff) || zero(sum) {
        return AngleSet::FullCircle;
    }
    let mut angles = Vec::with_capacity(4);
    for u in [diff, sum] {
        let base = u[1].atan2(u[0]) + FRAC_PI_2;
        for shift in [0.0, std::f64::consts::PI] {
            angles.push(wrap_angle(base + shift));
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    AngleSet::Finite(angles)
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself after rounding
    if t >= TAU {
        0.0
    } else {
        t
    }
}

fn circle_rep(theta: f64) -> SubspaceRep {
    let v = Matrix::from_rows(2, &[[theta.cos(), theta.sin()]]).expect("finite");
    let frame = Frame::new(v, linalg::FRAME_TOLERANCE).expect("unit vector");
    SubspaceRep::new(frame, RepMode::Complement)
}

/// Output of [`enumerate_cells_2d`].
#[derive(Debug, Clone, PartialEq)]
pub struct CircleArrangement {
    /// Distinct boundary angles, sorted, in `[0, 2π)`.
    pub boundary_angles: Vec<f64>,
    /// Arc cells first (in angle order), then boundary cells.
    pub cells: Vec<CandidateCell>,
}

impl CircleArrangement {
    pub fn arc_count(&self) -> usize {
        self.cells.iter().filter(|c| c.kind == CellKind::Arc).count()
    }

    pub fn boundary_count(&self) -> usize {
        self.cells.iter().filter(|c| c.kind == CellKind::Boundary).count()
    }
}

/// Exact cell decomposition of the unit circle of normals for `d = 2`, `r = 1`.
pub fn enumerate_cells_2d(inst: &Instance, zero_tol: f64) -> Result<CircleArrangement, ArrangementError> {
    if inst.d() != 2 || inst.rank() != 1 {
        return Err(ArrangementError::DimensionUnsupported { d: inst.d(), r: inst.rank() });
    }
    let m = inst.data();
    let n = m.rows();
    let mut angles = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let pi = [m.get(i, 0), m.get(i, 1)];
            let pj = [m.get(j, 0), m.get(j, 1)];
            if let AngleSet::Finite(a) = equidist_angles_2d(pi, pj) {
                angles.extend(a);
            }
        }
    }
    let boundary_angles = dedup_circular(angles, zero_tol);

    let make = |kind, theta: f64| {
        let witness = circle_rep(theta);
        CandidateCell {
            kind,
            outlier_set: select_outliers(inst, &witness),
            sign_summary: sign_summary(&witness, m, zero_tol),
            witness,
        }
    };

    let cells = if boundary_angles.is_empty() {
        vec![make(CellKind::Arc, 0.0)]
    } else {
        let count = boundary_angles.len();
        let arcs = (0..count).map(|t| {
            let start = boundary_angles[t];
            let end = if t + 1 < count { boundary_angles[t + 1] } else { boundary_angles[0] + TAU };
            make(CellKind::Arc, wrap_angle(0.5 * (start + end)))
        });
        let points = boundary_angles.iter().map(|&theta| make(CellKind::Boundary, theta));
        arcs.chain(points).collect()
    };
    Ok(CircleArrangement { boundary_angles, cells })
}

fn dedup_circular(mut angles: Vec<f64>, tol: f64) -> Vec<f64> {
    angles.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        match out.last() {
            Some(&last) if a - last <= tol => {}
            _ => out.push(a),
        }
    }
    if out.len() > 1 && out[0] + TAU - out[out.len() - 1] <= tol {
        out.pop();
    }
    out
}

/// Draws `sample_budget` Haar-random frames and keeps the first witness of
/// every distinct induced outlier set, in discovery order.
pub fn sample_cells_random(inst: &Instance, cfg: &SolverConfig) -> Result<Vec<CandidateCell>, ArrangementError> {
    cfg.validate()?;
    let (d, r) = (inst.d(), inst.rank());
    let mode = cfg.rep_choice.resolve(d, r);
    let rows = match mode {
        RepMode::Span => r,
        RepMode::Complement => d - r,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen = HashSet::new();
    let mut cells = Vec::new();
    for _ in 0..cfg.sample_budget {
        let witness = SubspaceRep::new(random_frame(&mut rng, rows, d), mode);
        let outlier_set = select_outliers(inst, &witness);
        if seen.insert(outlier_set.clone()) {
            cells.push(CandidateCell {
                kind: CellKind::Sampled,
                sign_summary: sign_summary(&witness, inst.data(), cfg.zero_tol),
                outlier_set,
                witness,
            });
        }
    }
    Ok(cells)
}

/// Orthonormalized Gaussian `q × d` matrix; redraws on the measure-zero event
/// of a rank-deficient draw.
pub fn random_frame(rng: &mut impl Rng, q: usize, d: usize) -> Frame {
    loop {
        let data: Vec<f64> = (0..q * d).map(|_| rng.sample(StandardNormal)).collect();
        let raw = Matrix::new(q, d, data).expect("finite gaussian draws");
        if let Ok(frame) = orthonormalize(&raw, 1e-10) {
            return frame;
        }
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub best: Solution,
    /// Number of cells (witnesses) produced by the cell source.
    pub candidates: usize,
    /// Number of distinct outlier sets among them, each solved once.
    pub distinct_subsets: usize,
    pub cells: Vec<CandidateCell>,
    /// PCA cost of every distinct outlier set.
    pub subset_costs: BTreeMap<Vec<usize>, f64>,
}

/// Collects witnesses from the configured cell source, solves one PCA
/// instance per distinct outlier set and returns the cheapest.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport, ArrangementError> {
    cfg.validate()?;
    let cells = match cfg.mode {
        CellMode::Exact2D => enumerate_cells_2d(inst, cfg.zero_tol)?.cells,
        CellMode::RandomSample => sample_cells_random(inst, cfg)?,
    };
    let subsets: Vec<Vec<usize>> = cells
        .iter()
        .map(|c| c.outlier_set.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let costs: Vec<f64> = subsets
        .par_iter()
        .map(|s| subset_cost(inst, s))
        .collect::<Result<_, _>>()?;

    // subsets are in lexicographic order, so the first minimum is the
    // lexicographically smallest among exact ties
    let winner = costs
        .iter()
        .enumerate()
        .fold(0, |b, (i, &c)| if c < costs[b] { i } else { b });
    let best = evaluate_subset(inst, &subsets[winner])?;
    Ok(SolveReport {
        best,
        candidates: cells.len(),
        distinct_subsets: subsets.len(),
        subset_costs: subsets.into_iter().zip(costs).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::brute_force;
    use std::f64::consts::PI;

    fn approx_set(got: &[f64], want: &[f64]) -> bool {
        got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12)
    }

    #[test]
    fn angles_for_unit_axes() {
        let AngleSet::Finite(a) = equidist_angles_2d([1.0, 0.0], [0.0, 1.0]) else { panic!() };
        assert!(approx_set(&a, &[PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0]), "{a:?}");
    }

    #[test]
    fn angles_identically_zero() {
        assert_eq!(equidist_angles_2d([1.0, 2.0], [1.0, 2.0]), AngleSet::FullCircle);
        assert_eq!(equidist_angles_2d([1.0, 2.0], [-1.0, -2.0]), AngleSet::FullCircle);
    }

    #[test]
    fn angles_figure2_are_equidistant() {
        let [m1, m2] = fixtures::FIGURE2_POINTS;
        let AngleSet::Finite(a) = equidist_angles_2d(m1, m2) else { panic!() };
        assert_eq!(a.len(), 4);
        for theta in a {
            let v = [theta.cos(), theta.sin()];
            let d1 = (v[0] * m1[0] + v[1] * m1[1]).abs();
            let d2 = (v[0] * m2[0] + v[1] * m2[1]).abs();
            assert!((d1 - d2).abs() <= 1e-10, "theta {theta}: {d1} vs {d2}");
        }
    }

    #[test]
    fn compare_poly_examples() {
        let inst = fixtures::figure2();
        let rep = circle_rep(FRAC_PI_2);
        assert!((compare_poly(&rep, 0, 1, inst.data()) - 9.0).abs() < 1e-12);
        let m = Matrix::from_rows(2, &[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert_eq!(compare_poly(&rep, 0, 1, &m), 0.0);
    }

    #[test]
    fn compare_poly_sign_agrees_across_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = 4;
            let full = random_frame(&mut rng, d, d);
            let rows = full.vectors().to_rows();
            let span = Frame::new(Matrix::from_rows(d, &rows[..1]).unwrap(), 1e-10).unwrap();
            let comp = Frame::new(Matrix::from_rows(d, &rows[1..]).unwrap(), 1e-10).unwrap();
            let span = SubspaceRep::new(span, RepMode::Span);
            let comp = SubspaceRep::new(comp, RepMode::Complement);
            let pts = random_frame(&mut rng, 2, d).vectors().clone();
            let scaled = Matrix::new(2, d, pts.as_slice().iter().map(|x| 3.0 * x).collect()).unwrap();
            let a = compare_poly(&span, 0, 1, &scaled);
            let b = compare_poly(&comp, 0, 1, &scaled);
            assert!((a - b).abs() < 1e-9);
            assert_eq!(
                classify_sign(a, scaled.row(0), scaled.row(1), 1e-10),
                classify_sign(b, scaled.row(0), scaled.row(1), 1e-10)
            );
        }
    }

    #[test]
    fn figure2_cells() {
        let arr = enumerate_cells_2d(&fixtures::figure2(), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(arr.arc_count(), 4);
        assert_eq!(arr.boundary_count(), 4);
        let distinct: HashSet<_> = arr.cells.iter().map(|c| c.outlier_set.clone()).collect();
        assert_eq!(distinct.len(), 2);
        for c in arr.cells.iter().filter(|c| c.kind == CellKind::Boundary) {
            assert_eq!(c.sign_summary, vec![0]);
        }
    }

    #[test]
    fn single_point_single_cell() {
        let inst = Instance::new(Matrix::from_rows(2, &[[1.0, 1.0]]).unwrap(), 1, 1).unwrap();
        let arr = enumerate_cells_2d(&inst, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(arr.cells.len(), 1);
        assert_eq!(arr.cells[0].outlier_set, vec![0]);
    }

    #[test]
    fn duplicate_rows_add_no_boundaries() {
        let m = Matrix::from_rows(2, &[[1.0, 2.0], [1.0, 2.0], [-1.0, -2.0]]).unwrap();
        let inst = Instance::new(m, 1, 1).unwrap();
        let arr = enumerate_cells_2d(&inst, DEFAULT_ZERO_TOL).unwrap();
        assert!(arr.boundary_angles.is_empty());
        assert_eq!(arr.cells[0].sign_summary, vec![0, 0, 0]);
    }

    #[test]
    fn exact_2d_rejects_other_shapes() {
        let inst = fixtures::figure1(2, 1);
        assert_eq!(
            enumerate_cells_2d(&inst, 1e-10).unwrap_err(),
            ArrangementError::DimensionUnsupported { d: 2, r: 2 }
        );
        let err = solve(&inst, &SolverConfig::exact_2d()).unwrap_err();
        assert!(matches!(err, ArrangementError::DimensionUnsupported { .. }));
    }

    #[test]
    fn arc_sign_constancy_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rows: Vec<[f64; 2]> =
            (0..6).map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)]).collect();
        let inst = Instance::new(Matrix::from_rows(2, &rows).unwrap(), 1, 2).unwrap();
        let arr = enumerate_cells_2d(&inst, DEFAULT_ZERO_TOL).unwrap();
        assert!(arr.boundary_angles.len() <= 4 * 15);
        let b = &arr.boundary_angles;
        for t in 0..b.len() {
            let start = b[t];
            let end = if t + 1 < b.len() { b[t + 1] } else { b[0] + TAU };
            let mid = &arr.cells[t];
            for frac in [1.0 / 3.0, 2.0 / 3.0] {
                let probe = circle_rep(start + frac * (end - start));
                assert_eq!(sign_summary(&probe, inst.data(), DEFAULT_ZERO_TOL), mid.sign_summary);
            }
        }
    }

    #[test]
    fn sampling_budget_one() {
        let cells = sample_cells_random(&fixtures::figure2(), &SolverConfig::random_sample(1, 4)).unwrap();
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn sampling_finds_both_figure2_subsets() {
        for seed in 0..5 {
            let cells =
                sample_cells_random(&fixtures::figure2(), &SolverConfig::random_sample(1000, seed)).unwrap();
            let distinct: HashSet<_> = cells.iter().map(|c| c.outlier_set.clone()).collect();
            assert_eq!(distinct.len(), 2);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let inst = fixtures::figure1(1, 2);
        let cfg = SolverConfig::random_sample(300, 17);
        assert_eq!(sample_cells_random(&inst, &cfg).unwrap(), sample_cells_random(&inst, &cfg).unwrap());
    }

    #[test]
    fn rep_choice_auto() {
        assert_eq!(RepChoice::Auto.resolve(4, 1), RepMode::Span);
        assert_eq!(RepChoice::Auto.resolve(4, 3), RepMode::Complement);
        assert_eq!(RepChoice::Auto.resolve(4, 2), RepMode::Complement);
        assert_eq!(RepChoice::Span.resolve(4, 3), RepMode::Span);
    }

    #[test]
    fn bad_config() {
        let mut cfg = SolverConfig::random_sample(0, 1);
        assert!(matches!(solve(&fixtures::figure2(), &cfg), Err(ArrangementError::BadConfig(_))));
        cfg.sample_budget = 1;
        cfg.zero_tol = 0.0;
        assert!(matches!(solve(&fixtures::figure2(), &cfg), Err(ArrangementError::BadConfig(_))));
    }

    #[test]
    fn solve_fixtures() {
        let inst = fixtures::figure1(1, 1);
        let rep = solve(&inst, &SolverConfig::exact_2d()).unwrap();
        let oracle = brute_force(&inst).unwrap();
        assert_eq!(rep.best.outlier_set, vec![fixtures::FIGURE1_OUTLIER]);
        assert!((rep.best.cost - oracle.cost).abs() <= 1e-9 * oracle.cost.max(1.0));

        let rep = solve(&fixtures::figure2(), &SolverConfig::exact_2d()).unwrap();
        assert!(rep.best.cost < 1e-24);
    }

    #[test]
    fn solve_k_zero() {
        let inst = fixtures::figure1(1, 0);
        for cfg in [SolverConfig::exact_2d(), SolverConfig::random_sample(50, 1)] {
            let rep = solve(&inst, &cfg).unwrap();
            assert_eq!(rep.distinct_subsets, 1);
            let (_, res) = linalg::best_fit_subspace(inst.data(), 1).unwrap();
            assert_eq!(rep.best.cost, res);
        }
    }
}
