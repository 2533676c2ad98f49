//! Exhaustive reference solver and solution checker.
//!
//! [`BruteForce`] tries every size-`k` outlier subset in lexicographic order
//! and runs classical PCA on the rest. It is exponential on purpose: the other
//! solvers are measured against it, so it must stay easy to audit.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, frobenius_sq, LinalgError};
use crate::model::{evaluate_subset, subset_cost, Instance, ModelError, Solution};

/// Default limit on the number of subsets the oracle will enumerate.
pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;

/// Environment variable that overrides [`DEFAULT_ENUM_CAP`].
pub const ENUM_CAP_ENV: &str = "OPCA_ENUM_CAP";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("BudgetExceeded: {count} subsets to enumerate, cap is {cap}")]
    BudgetExceeded { count: u128, cap: u128 },
    #[error("invalid candidate pool: {0}")]
    BadPool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<LinalgError> for OracleError {
    fn from(e: LinalgError) -> Self {
        OracleError::Model(ModelError::Linalg(e))
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The `rank`-th `k`-subset of `{0, …, n−1}` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for pos in 0..k {
        let mut c = next;
        loop {
            let count = binomial(n - c - 1, k - pos - 1);
            if rank < count {
                break;
            }
            rank -= count;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}

/// Advances `combo` to the next `k`-subset of `{0, …, n−1}` in lexicographic
/// order. Returns false when `combo` was the last one.
pub fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive solver configuration.
#[derive(Debug, Clone)]
pub struct BruteForce {
    cap: u128,
    pool: Option<Vec<usize>>,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self { cap: DEFAULT_ENUM_CAP, pool: None }
    }
}

impl BruteForce {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads the cap from `OPCA_ENUM_CAP`, falling back to the default when
    /// the variable is unset or unparsable.
    pub fn from_env() -> Self {
        let cap = std::env::var(ENUM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .unwrap_or(DEFAULT_ENUM_CAP);
        Self::new().with_cap(cap)
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    /// Only consider outlier subsets drawn from `pool`. The result is then the
    /// best solution within that family, an upper bound on the true optimum.
    pub fn restricted_to(mut self, pool: Vec<usize>) -> Self {
        self.pool = Some(pool);
        self
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    pub fn run(&self, inst: &Instance) -> Result<Solution, OracleError> {
        let pool: Vec<usize> = match &self.pool {
            Some(p) => {
                let mut p = p.clone();
                p.sort_unstable();
                p.dedup();
                if p.iter().any(|&i| i >= inst.n()) {
                    return Err(OracleError::BadPool("index out of range".into()));
                }
                if p.len() < inst.outliers() {
                    return Err(OracleError::BadPool(format!(
                        "{} candidates for {} outliers",
                        p.len(),
                        inst.outliers()
                    )));
                }
                p
            }
            None => (0..inst.n()).collect(),
        };
        let (n, k) = (pool.len(), inst.outliers());
        let total = binomial(n, k);
        if total > self.cap {
            return Err(OracleError::BudgetExceeded { count: total, cap: self.cap });
        }

        let chunks = (rayon::current_num_threads() as u128 * 8).min(total).max(1);
        let step = total.div_ceil(chunks);
        let best = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * step;
                let hi = (lo + step).min(total);
                scan_range(inst, &pool, lo, hi)
            })
            .try_reduce_with(|a, b| Ok(pick_better(a, b)))
            .expect("at least one chunk")?;
        let (_, positions) = best.expect("at least one subset");
        let subset: Vec<usize> = positions.iter().map(|&p| pool[p]).collect();
        Ok(evaluate_subset(inst, &subset)?)
    }
}

type Best = Option<(f64, Vec<usize>)>;

fn scan_range(inst: &Instance, pool: &[usize], lo: u128, hi: u128) -> Result<Best, LinalgError> {
    if lo >= hi {
        return Ok(None);
    }
    let (n, k) = (pool.len(), inst.outliers());
    let mut combo = unrank_combination(n, k, lo);
    let mut subset = vec![0; k];
    let mut best: Best = None;
    for _ in lo..hi {
        for (s, &p) in subset.iter_mut().zip(&combo) {
            *s = pool[p];
        }
        let cost = subset_cost(inst, &subset)?;
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, combo.clone()));
        }
        if !next_combination(&mut combo, n) {
            break;
        }
    }
    Ok(best)
}

/// Minimum cost; exact ties go to the lexicographically smaller subset.
fn pick_better(a: Best, b: Best) -> Best {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Exhaustive solve with the default cap.
pub fn brute_force(inst: &Instance) -> Result<Solution, OracleError> {
    BruteForce::new().run(inst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub feasible: bool,
    pub recomputed_cost: f64,
    /// Human-readable description of every failed check.
    pub failures: Vec<String>,
}

/// Checks the invariants of `sol` against `inst`: shapes, the outlier budget,
/// that `S` is supported on the outlier set, that every row of `L` lies in the
/// span of the basis, and that the reported cost matches `‖M − L − S‖²_F`.
/// Tolerances are relative to the magnitude of the quantity being checked.
pub fn verify(inst: &Instance, sol: &Solution, tol: f64) -> VerifyReport {
    let mut failures = Vec::new();
    let (n, d) = (inst.n(), inst.d());
    let shapes_ok = [&sol.low_rank, &sol.sparse].iter().all(|m| m.rows() == n && m.cols() == d)
        && sol.basis.dim() == d;
    if !shapes_ok {
        failures.push(format!("shape: expected L, S of {n}x{d} and basis in R^{d}"));
        return VerifyReport { feasible: false, recomputed_cost: f64::NAN, failures };
    }

    if sol.basis.len() > inst.rank() {
        failures.push(format!("rank: basis has {} rows, rank bound is {}", sol.basis.len(), inst.rank()));
    }
    if sol.outlier_set.len() > inst.outliers() {
        failures.push(format!(
            "outliers: {} indices listed, budget is {}",
            sol.outlier_set.len(),
            inst.outliers()
        ));
    }
    let support: Vec<usize> =
        (0..n).filter(|&i| sol.sparse.row(i).iter().any(|&x| x != 0.0)).collect();
    if support.len() > inst.outliers() {
        failures.push(format!("sparse: {} nonzero rows, budget is {}", support.len(), inst.outliers()));
    }
    if let Some(i) = support.iter().find(|i| sol.outlier_set.binary_search(i).is_err()) {
        failures.push(format!("sparse: row {i} is nonzero but not in the outlier set"));
    }
    for i in 0..n {
        let row = sol.low_rank.row(i);
        let off = sol.basis.residual_sq(row).sqrt();
        if off > tol * linalg::norm_sq(row).sqrt().max(1.0) {
            failures.push(format!("low_rank: row {i} is {off:e} away from the basis span"));
            break;
        }
    }
    let recomputed_cost = frobenius_sq(&inst.data().sub(&sol.low_rank).sub(&sol.sparse));
    if (recomputed_cost - sol.cost).abs() > tol * recomputed_cost.abs().max(1.0) {
        failures.push(format!("cost: reported {} but recomputed {}", sol.cost, recomputed_cost));
    }
    VerifyReport { feasible: failures.is_empty(), recomputed_cost, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{Matrix, sym_eigen, scatter};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(24, 18), 134_596);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(10_000, 5_000), u128::MAX);
    }

    #[test]
    fn unrank_matches_iteration() {
        let (n, k) = (7, 3);
        let mut combo: Vec<usize> = (0..k).collect();
        let mut rank = 0;
        loop {
            assert_eq!(unrank_combination(n, k, rank), combo);
            rank += 1;
            if !next_combination(&mut combo, n) {
                break;
            }
        }
        assert_eq!(rank, binomial(n, k));
    }

    #[test]
    fn empty_combination_iterates_once() {
        let mut combo: Vec<usize> = vec![];
        assert_eq!(unrank_combination(4, 0, 0), combo);
        assert!(!next_combination(&mut combo, 4));
    }

    #[test]
    fn figure1_outlier() {
        let sol = brute_force(&fixtures::figure1(1, 1)).unwrap();
        assert_eq!(sol.outlier_set, vec![fixtures::FIGURE1_OUTLIER]);
    }

    #[test]
    fn all_outliers_cost_zero() {
        let sol = brute_force(&fixtures::figure1(1, 11)).unwrap();
        assert_eq!(sol.cost, 0.0);
        assert_eq!(sol.outlier_set.len(), 11);
    }

    /// Independent residual: the sum of the smallest `d − r` eigenvalues of
    /// the scatter matrix, accumulated from scratch.
    fn eigen_tail_residual(points: &[[f64; 3]], r: usize) -> f64 {
        let m = Matrix::from_rows(3, points).unwrap();
        let pairs = sym_eigen(&scatter(&m)).unwrap();
        pairs[r..].iter().map(|p| p.value).sum()
    }

    #[test]
    fn random_points_match_independent_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pts: Vec<[f64; 3]> =
            (0..8).map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]).collect();
        let mut best = f64::INFINITY;
        let mut count = 0;
        for a in 0..8 {
            for b in a + 1..8 {
                let kept: Vec<[f64; 3]> =
                    pts.iter().enumerate().filter(|(i, _)| *i != a && *i != b).map(|(_, p)| *p).collect();
                best = best.min(eigen_tail_residual(&kept, 1));
                count += 1;
            }
        }
        assert_eq!(count, 28);
        let inst = Instance::new(Matrix::from_rows(3, &pts).unwrap(), 1, 2).unwrap();
        let sol = brute_force(&inst).unwrap();
        assert!((sol.cost - best).abs() <= 1e-9 * best.max(1.0), "{} vs {best}", sol.cost);
    }

    #[test]
    fn budget_exceeded() {
        let inst = fixtures::figure1(1, 5);
        let err = BruteForce::new().with_cap(100).run(&inst).unwrap_err();
        assert_eq!(err, OracleError::BudgetExceeded { count: 462, cap: 100 });
    }

    #[test]
    fn restricted_pool() {
        let inst = fixtures::figure1(1, 1);
        let sol = BruteForce::new().restricted_to(vec![0, 1, 2]).run(&inst).unwrap();
        assert!(sol.outlier_set[0] <= 2);
        assert!(sol.cost >= brute_force(&inst).unwrap().cost);
        assert!(matches!(
            BruteForce::new().restricted_to(vec![]).run(&inst),
            Err(OracleError::BadPool(_))
        ));
    }

    #[test]
    fn verify_accepts_oracle_output() {
        let inst = fixtures::figure1(1, 2);
        let sol = brute_force(&inst).unwrap();
        let rep = verify(&inst, &sol, 1e-9);
        assert!(rep.feasible, "{:?}", rep.failures);
        assert!((rep.recomputed_cost - sol.cost).abs() <= 1e-9);
    }

    #[test]
    fn verify_rejects_too_many_sparse_rows() {
        let inst = fixtures::figure1(1, 1);
        let mut sol = brute_force(&inst).unwrap();
        for i in [0, 1] {
            for j in 0..2 {
                sol.sparse.set(i, j, inst.data().get(i, j));
                sol.low_rank.set(i, j, 0.0);
            }
        }
        sol.outlier_set = vec![0, 1, fixtures::FIGURE1_OUTLIER];
        let rep = verify(&inst, &sol, 1e-9);
        assert!(!rep.feasible);
        assert!(rep.failures.iter().any(|f| f.starts_with("sparse")));
    }

    #[test]
    fn verify_rejects_wrong_cost_and_off_span_rows() {
        let inst = fixtures::figure1(1, 1);
        let mut sol = brute_force(&inst).unwrap();
        sol.cost += 1.0;
        assert!(!verify(&inst, &sol, 1e-9).feasible);

        let mut sol = brute_force(&inst).unwrap();
        let v = sol.basis.vectors().row(0).to_vec();
        sol.low_rank.set(0, 0, sol.low_rank.get(0, 0) - v[1]);
        sol.low_rank.set(0, 1, sol.low_rank.get(0, 1) + v[0]);
        let rep = verify(&inst, &sol, 1e-9);
        assert!(rep.failures.iter().any(|f| f.starts_with("low_rank")));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 2]> = (0..9).map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let inst = Instance::new(Matrix::from_rows(2, &rows).unwrap(), 1, 3).unwrap();
        let par = brute_force(&inst).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let seq = pool.install(|| brute_force(&inst).unwrap());
        assert_eq!(par, seq);
    }
}
