//! Gap instances built from Multicolored Clique.
//!
//! A graph whose vertices are split into `r` color classes of `n` vertices
//! each becomes a `(r+1)m × 2r` matrix (`m` edges) with target rank `r` and
//! outlier budget `k = m − C(r,2)`. The top `rm` rows are `m` copies of
//! `(aI | aI)`; edge `e = v_i^s v_j^t` contributes the row with `c(a−i)`,
//! `c(a−j)` in columns `s`, `t` of the left half and `ca` in columns `s`, `t`
//! of the right half. With `a = 4(r+1)²mn²ω` and `c = 9a`, a multicolored
//! clique gives a solution of cost at most `D = rmn²`, and any solution of
//! cost at most `ωD` forces a clique.
//!
//! All generated entries are integers whenever `ω` is, and the generator
//! refuses parameters whose entries would not be exactly representable in an
//! `f64`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{frobenius_sq, orthonormalize, Frame, Matrix};
use crate::model::{Instance, Solution};
use crate::oracle::binomial;

/// Largest integer below which every `f64` integer is exact.
const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardnessError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("NegativeBudget: {m} edges but C(r,2) = {needed}")]
    NegativeBudget { m: usize, needed: usize },
    #[error("omega must be a finite value >= 1, got {0}")]
    BadOmega(f64),
    #[error("entries up to {0:e} are not exactly representable")]
    TooLarge(f64),
    #[error("invalid selection: {0}")]
    BadSelection(String),
    #[error("NotAClique: no edge between colors {s} and {t} of the selection")]
    NotAClique { s: usize, t: usize },
}

/// Edge `v_i^s v_j^t` with 1-based colors and indices, stored with `s < t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub s: usize,
    pub i: usize,
    pub t: usize,
    pub j: usize,
}

impl Edge {
    pub fn new(s: usize, i: usize, t: usize, j: usize) -> Self {
        if s <= t {
            Self { s, i, t, j }
        } else {
            Self { s: t, i: j, t: s, j: i }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueInstance {
    colors: usize,
    per_color: usize,
    edges: Vec<Edge>,
}

impl CliqueInstance {
    pub fn new(colors: usize, per_color: usize, edges: Vec<Edge>) -> Result<Self, HardnessError> {
        if colors < 4 {
            return Err(HardnessError::InvalidGraph(format!("need at least 4 colors, got {colors}")));
        }
        if per_color == 0 {
            return Err(HardnessError::InvalidGraph("color classes must be nonempty".into()));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            let e = Edge::new(e.s, e.i, e.t, e.j);
            if e.s == e.t {
                return Err(HardnessError::InvalidGraph(format!("edge {e:?} joins a color class to itself")));
            }
            if e.s == 0 || e.t > colors || e.i == 0 || e.i > per_color || e.j == 0 || e.j > per_color {
                return Err(HardnessError::InvalidGraph(format!("edge {e:?} out of range")));
            }
            if !seen.insert(e) {
                return Err(HardnessError::InvalidGraph(format!("duplicate edge {e:?}")));
            }
            normalized.push(e);
        }
        Ok(Self { colors, per_color, edges: normalized })
    }

    /// Every cross-color pair joined.
    pub fn complete_multipartite(colors: usize, per_color: usize) -> Result<Self, HardnessError> {
        let mut edges = Vec::new();
        for s in 1..=colors {
            for t in s + 1..=colors {
                for i in 1..=per_color {
                    for j in 1..=per_color {
                        edges.push(Edge::new(s, i, t, j));
                    }
                }
            }
        }
        Self::new(colors, per_color, edges)
    }

    /// Copy with the listed edges removed; unknown edges are an error.
    pub fn without_edges(&self, removed: &[Edge]) -> Result<Self, HardnessError> {
        let removed: HashSet<Edge> = removed.iter().map(|e| Edge::new(e.s, e.i, e.t, e.j)).collect();
        if let Some(e) = removed.iter().find(|e| !self.edges.contains(e)) {
            return Err(HardnessError::InvalidGraph(format!("cannot remove missing edge {e:?}")));
        }
        let edges = self.edges.iter().copied().filter(|e| !removed.contains(e)).collect();
        Self::new(self.colors, self.per_color, edges)
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn per_color(&self) -> usize {
        self.per_color
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, s: usize, i: usize, t: usize, j: usize) -> bool {
        self.edges.contains(&Edge::new(s, i, t, j))
    }

    /// Exhaustive search over the `n^r` color transversals; returns the first
    /// clique selection found (1-based indices, one per color).
    pub fn find_multicolored_clique(&self) -> Option<Vec<usize>> {
        let edges: HashSet<Edge> = self.edges.iter().copied().collect();
        let mut sel = vec![1; self.colors];
        loop {
            let ok = (0..self.colors).all(|s| {
                (s + 1..self.colors).all(|t| edges.contains(&Edge::new(s + 1, sel[s], t + 1, sel[t])))
            });
            if ok {
                return Some(sel);
            }
            // odometer increment
            let mut pos = self.colors;
            loop {
                if pos == 0 {
                    return None;
                }
                pos -= 1;
                if sel[pos] < self.per_color {
                    sel[pos] += 1;
                    break;
                }
                sel[pos] = 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRow {
    #[serde(flatten)]
    pub edge: Edge,
    /// Row of the generated matrix holding this edge.
    pub row: usize,
}

/// A generated gap instance with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstanceBundle {
    pub instance: Instance,
    pub graph: CliqueInstance,
    pub a: f64,
    pub c: f64,
    /// Yes-instance cost bound `D = rmn²`.
    pub d_bound: f64,
    /// `D' = ωD`.
    pub d_prime: f64,
    pub omega: f64,
    pub edge_rows: Vec<EdgeRow>,
}

impl HardInstanceBundle {
    /// Outlier budget `k = m − C(r,2)`.
    pub fn k(&self) -> usize {
        self.instance.outliers()
    }

    /// Row indices of the edge block.
    pub fn edge_row_indices(&self) -> Vec<usize> {
        self.edge_rows.iter().map(|e| e.row).collect()
    }
}

fn pairs(r: usize) -> usize {
    binomial(r, 2) as usize
}

pub fn build_matrix(g: &CliqueInstance, omega: f64) -> Result<HardInstanceBundle, HardnessError> {
    if !omega.is_finite() || omega < 1.0 {
        return Err(HardnessError::BadOmega(omega));
    }
    let (r, n, m) = (g.colors(), g.per_color(), g.edges().len());
    if m < pairs(r) {
        return Err(HardnessError::NegativeBudget { m, needed: pairs(r) });
    }
    let (rf, nf, mf) = (r as f64, n as f64, m as f64);
    let a = 4.0 * (rf + 1.0).powi(2) * mf * nf * nf * omega;
    let c = 9.0 * a;
    if c * a >= EXACT_LIMIT {
        return Err(HardnessError::TooLarge(c * a));
    }
    let d_bound = rf * mf * nf * nf;

    let cols = 2 * r;
    let mut data = Matrix::zeros((r + 1) * m, cols);
    for block in 0..m {
        for s in 0..r {
            let row = block * r + s;
            data.set(row, s, a);
            data.set(row, r + s, a);
        }
    }
    let mut edge_rows = Vec::with_capacity(m);
    for (e_idx, e) in g.edges().iter().enumerate() {
        let row = r * m + e_idx;
        data.set(row, e.s - 1, c * (a - e.i as f64));
        data.set(row, e.t - 1, c * (a - e.j as f64));
        data.set(row, r + e.s - 1, c * a);
        data.set(row, r + e.t - 1, c * a);
        edge_rows.push(EdgeRow { edge: *e, row });
    }
    let instance = Instance::new(data, r, m - pairs(r)).expect("shape is consistent by construction");
    Ok(HardInstanceBundle {
        instance,
        graph: g.clone(),
        a,
        c,
        d_bound,
        d_prime: omega * d_bound,
        omega,
        edge_rows,
    })
}

/// Explicit yes-instance solution built from a multicolored clique.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// 1-based vertex index chosen in each color.
    pub selection: Vec<usize>,
    pub low_rank: Matrix,
    pub sparse: Matrix,
    /// Rows of the edge block outside the clique, i.e. the support of `sparse`.
    pub outlier_set: Vec<usize>,
    /// Orthonormalized rows of `(B | A)`, spanning the rows of `low_rank`.
    pub basis: Frame,
    /// `m · Σ i_s²`.
    pub exact_cost: u64,
    pub cost: f64,
}

impl Certificate {
    pub fn to_solution(&self) -> Solution {
        Solution {
            outlier_set: self.outlier_set.clone(),
            basis: self.basis.clone(),
            low_rank: self.low_rank.clone(),
            sparse: self.sparse.clone(),
            cost: self.cost,
        }
    }

    /// Each retained edge row of `L` equals `c` times the sum of the two
    /// matching rows of `(B | A)`, compared exactly.
    pub fn satisfies_row_dependency(&self, bundle: &HardInstanceBundle) -> bool {
        let r = bundle.graph.colors();
        let generator = |s: usize| -> Vec<f64> {
            let mut row = vec![0.0; 2 * r];
            row[s] = bundle.a - self.selection[s] as f64;
            row[r + s] = bundle.a;
            row
        };
        bundle.edge_rows.iter().all(|er| {
            let row = self.low_rank.row(er.row);
            if self.outlier_set.binary_search(&er.row).is_ok() {
                return row.iter().all(|&x| x == 0.0);
            }
            let (gs, gt) = (generator(er.edge.s - 1), generator(er.edge.t - 1));
            row.iter().zip(gs.iter().zip(&gt)).all(|(&x, (p, q))| x == bundle.c * (p + q))
        })
    }
}

pub fn build_certificate(
    g: &CliqueInstance,
    selection: &[usize],
    omega: f64,
) -> Result<Certificate, HardnessError> {
    let (r, n) = (g.colors(), g.per_color());
    if selection.len() != r {
        return Err(HardnessError::BadSelection(format!("{} indices for {r} colors", selection.len())));
    }
    if let Some(&bad) = selection.iter().find(|&&i| i == 0 || i > n) {
        return Err(HardnessError::BadSelection(format!("index {bad} outside 1..={n}")));
    }
    for s in 1..=r {
        for t in s + 1..=r {
            if !g.has_edge(s, selection[s - 1], t, selection[t - 1]) {
                return Err(HardnessError::NotAClique { s, t });
            }
        }
    }
    let bundle = build_matrix(g, omega)?;
    let (a, m) = (bundle.a, g.edges().len());
    let data = bundle.instance.data();

    let mut low_rank = Matrix::zeros(data.rows(), data.cols());
    let mut sparse = Matrix::zeros(data.rows(), data.cols());
    for block in 0..m {
        for s in 0..r {
            let row = block * r + s;
            low_rank.set(row, s, a - selection[s] as f64);
            low_rank.set(row, r + s, a);
        }
    }
    let mut outlier_set = Vec::new();
    for er in &bundle.edge_rows {
        let e = er.edge;
        let in_clique = selection[e.s - 1] == e.i && selection[e.t - 1] == e.j;
        let target = if in_clique { &mut low_rank } else { &mut sparse };
        for (col, &x) in data.row(er.row).iter().enumerate() {
            target.set(er.row, col, x);
        }
        if !in_clique {
            outlier_set.push(er.row);
        }
    }

    let mut generators = Matrix::zeros(r, 2 * r);
    for s in 0..r {
        generators.set(s, s, a - selection[s] as f64);
        generators.set(s, r + s, a);
    }
    let basis = orthonormalize(&generators, 1e-12).expect("diagonal blocks are independent");

    let exact_cost = m as u64 * selection.iter().map(|&i| (i * i) as u64).sum::<u64>();
    let cost = frobenius_sq(&data.sub(&low_rank).sub(&sparse));
    debug_assert_eq!(cost, exact_cost as f64);
    Ok(Certificate { selection: selection.to_vec(), low_rank, sparse, outlier_set, basis, exact_cost, cost })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapDecision {
    Yes,
    No,
    Indeterminate,
}

/// Reads off the clique answer from an achieved cost: at most `ωD` certifies
/// a clique; above it, only an exact optimum rules one out.
pub fn check_gap(bundle: &HardInstanceBundle, achieved_cost: f64, exact_solver: bool) -> GapDecision {
    if achieved_cost <= bundle.d_prime {
        GapDecision::Yes
    } else if exact_solver {
        GapDecision::No
    } else {
        GapDecision::Indeterminate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::verify;

    fn k4() -> CliqueInstance {
        CliqueInstance::complete_multipartite(4, 1).unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(CliqueInstance::new(3, 1, vec![]).is_err());
        assert!(CliqueInstance::new(4, 2, vec![Edge::new(1, 1, 1, 2)]).is_err());
        assert!(CliqueInstance::new(4, 2, vec![Edge::new(1, 3, 2, 1)]).is_err());
        assert!(CliqueInstance::new(4, 2, vec![Edge::new(1, 1, 2, 1), Edge::new(2, 1, 1, 1)]).is_err());
        let g = CliqueInstance::new(4, 2, vec![Edge::new(3, 2, 1, 1)]).unwrap();
        assert_eq!(g.edges()[0], Edge { s: 1, i: 1, t: 3, j: 2 });
    }

    #[test]
    fn k4_parameters() {
        let b = build_matrix(&k4(), 1.0).unwrap();
        assert_eq!((b.instance.n(), b.instance.d()), (30, 8));
        assert_eq!(b.a, 600.0);
        assert_eq!(b.c, 5400.0);
        assert_eq!(b.k(), 0);
        assert_eq!(b.d_bound, 24.0);
        assert_eq!(b.d_prime, 24.0);
        assert_eq!(b.instance.rank(), 4);
    }

    #[test]
    fn top_blocks_are_scaled_identities() {
        let b = build_matrix(&k4(), 2.0).unwrap();
        let data = b.instance.data();
        for row in 0..4 * 6 {
            let s = row % 4;
            for col in 0..8 {
                let want = if col == s || col == 4 + s { b.a } else { 0.0 };
                assert_eq!(data.get(row, col), want);
            }
        }
    }

    #[test]
    fn edge_rows_layout() {
        let g = CliqueInstance::complete_multipartite(4, 2).unwrap();
        let b = build_matrix(&g, 1.0).unwrap();
        assert_eq!((b.instance.n(), b.instance.d(), b.k()), (120, 8, 18));
        let data = b.instance.data();
        for er in &b.edge_rows {
            let row = data.row(er.row);
            assert_eq!(row.iter().filter(|&&x| x != 0.0).count(), 4);
            assert_eq!(row[er.edge.s - 1], b.c * (b.a - er.edge.i as f64));
            assert_eq!(row[er.edge.t - 1], b.c * (b.a - er.edge.j as f64));
            assert_eq!(row[4 + er.edge.s - 1], b.c * b.a);
            assert_eq!(row[4 + er.edge.t - 1], b.c * b.a);
            assert!(row.iter().all(|x| x.abs() <= b.c * b.a));
        }
    }

    #[test]
    fn negative_budget_and_bad_omega() {
        let g = CliqueInstance::new(4, 1, vec![Edge::new(1, 1, 2, 1)]).unwrap();
        assert_eq!(build_matrix(&g, 1.0).unwrap_err(), HardnessError::NegativeBudget { m: 1, needed: 6 });
        assert!(matches!(build_matrix(&k4(), 0.5), Err(HardnessError::BadOmega(_))));
    }

    #[test]
    fn k4_certificate() {
        let cert = build_certificate(&k4(), &[1, 1, 1, 1], 1.0).unwrap();
        assert_eq!(cert.exact_cost, 24);
        assert_eq!(cert.cost, 24.0);
        assert!(cert.outlier_set.is_empty());
        let bundle = build_matrix(&k4(), 1.0).unwrap();
        assert!(cert.satisfies_row_dependency(&bundle));
        let rep = verify(&bundle.instance, &cert.to_solution(), 1e-9);
        assert!(rep.feasible, "{:?}", rep.failures);
    }

    #[test]
    fn multipartite_certificate() {
        let g = CliqueInstance::complete_multipartite(4, 2).unwrap();
        let cert = build_certificate(&g, &[1, 1, 1, 1], 1.0).unwrap();
        assert_eq!(cert.exact_cost, 96);
        assert_eq!(cert.outlier_set.len(), 18);
        let bundle = build_matrix(&g, 1.0).unwrap();
        assert!(cert.cost <= bundle.d_bound);
        assert!(cert.satisfies_row_dependency(&bundle));
        let rep = verify(&bundle.instance, &cert.to_solution(), 1e-9);
        assert!(rep.feasible, "{:?}", rep.failures);

        let cert = build_certificate(&g, &[2, 1, 2, 2], 1.0).unwrap();
        assert_eq!(cert.exact_cost, 24 * 13);
    }

    #[test]
    fn certificate_requires_clique() {
        let g = CliqueInstance::complete_multipartite(4, 2).unwrap();
        let g = g.without_edges(&[Edge::new(2, 1, 3, 1)]).unwrap();
        assert_eq!(
            build_certificate(&g, &[1, 1, 1, 1], 1.0).unwrap_err(),
            HardnessError::NotAClique { s: 2, t: 3 }
        );
        assert!(matches!(build_certificate(&g, &[1, 1, 1], 1.0), Err(HardnessError::BadSelection(_))));
        assert!(matches!(build_certificate(&g, &[1, 1, 1, 3], 1.0), Err(HardnessError::BadSelection(_))));
    }

    #[test]
    fn clique_search() {
        let g = CliqueInstance::complete_multipartite(4, 2).unwrap();
        assert_eq!(g.find_multicolored_clique(), Some(vec![1, 1, 1, 1]));
        let cut: Vec<Edge> = (1..=2).flat_map(|i| (1..=2).map(move |j| Edge::new(1, i, 2, j))).collect();
        assert_eq!(g.without_edges(&cut).unwrap().find_multicolored_clique(), None);
        assert!(g.without_edges(&[Edge::new(1, 1, 1, 2)]).is_err());
    }

    #[test]
    fn gap_decisions() {
        let b = build_matrix(&k4(), 1.0).unwrap();
        assert_eq!(check_gap(&b, 24.0, false), GapDecision::Yes);
        assert_eq!(check_gap(&b, 0.0, false), GapDecision::Yes);
        assert_eq!(check_gap(&b, 25.0, true), GapDecision::No);
        assert_eq!(check_gap(&b, 25.0, false), GapDecision::Indeterminate);
    }
}
