//! File formats: instance CSV and JSON, graph edge lists, result records and
//! candidate-cell dumps.
//!
//! Reals are written with the shortest decimal representation that parses
//! back to the same `f64` (at most 17 significant digits), so every file
//! round-trips bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrangement::{CandidateCell, CellKind, SolveReport};
use crate::hardness::{CliqueInstance, Edge, EdgeRow, HardInstanceBundle};
use crate::linalg::{Frame, Matrix, FRAME_TOLERANCE};
use crate::model::{Instance, RepMode, Solution};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Parses comma-separated rows of reals. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_csv_matrix(text: &str) -> Result<Matrix, FormatError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                match f.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(FormatError::Parse { line: idx + 1, msg: format!("bad number {f:?}") }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(FormatError::Parse {
                    line: idx + 1,
                    msg: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Matrix::from_rows(cols, &rows).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn format_csv_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|x| format_real(*x)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn format_real(x: f64) -> String {
    serde_json::to_string(&x).expect("finite")
}

/// Parameters of a generated gap instance, stored in the instance header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessMeta {
    pub colors: usize,
    pub per_color: usize,
    pub edges: usize,
    pub a: f64,
    pub c: f64,
    pub k: usize,
    #[serde(rename = "D")]
    pub d_bound: f64,
    #[serde(rename = "D_prime")]
    pub d_prime: f64,
    pub omega: f64,
    pub edge_rows: Vec<EdgeRow>,
}

impl HardnessMeta {
    pub fn from_bundle(b: &HardInstanceBundle) -> Self {
        Self {
            colors: b.graph.colors(),
            per_color: b.graph.per_color(),
            edges: b.graph.edges().len(),
            a: b.a,
            c: b.c,
            k: b.k(),
            d_bound: b.d_bound,
            d_prime: b.d_prime,
            omega: b.omega,
            edge_rows: b.edge_rows.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardness: Option<HardnessMeta>,
}

/// JSON instance layout: `{d, r, k, rows, meta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub d: usize,
    pub r: usize,
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub meta: InstanceMeta,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, meta: InstanceMeta) -> Self {
        Self { d: inst.d(), r: inst.rank(), k: inst.outliers(), rows: inst.data().to_rows(), meta }
    }

    pub fn to_instance(&self) -> Result<Instance, FormatError> {
        if let Some((i, row)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.d) {
            return Err(FormatError::Invalid(format!("row {i} has {} entries, d = {}", row.len(), self.d)));
        }
        let data = Matrix::from_rows(self.d, &self.rows).map_err(|e| FormatError::Invalid(e.to_string()))?;
        Instance::new(data, self.r, self.k).map_err(|e| FormatError::Invalid(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Parses an edge list: header `r n`, then one `s i t j` line per edge.
pub fn parse_graph(text: &str) -> Result<CliqueInstance, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let ints = |line: usize, l: &str, want: usize| -> Result<Vec<usize>, FormatError> {
        let v = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError::Parse { line, msg: e.to_string() })?;
        if v.len() != want {
            return Err(FormatError::Parse { line, msg: format!("expected {want} integers, found {}", v.len()) });
        }
        Ok(v)
    };
    let (line, header) = lines.next().ok_or_else(|| FormatError::Invalid("empty graph file".into()))?;
    let h = ints(line, header, 2)?;
    let mut edges = Vec::new();
    for (line, l) in lines {
        let e = ints(line, l, 4)?;
        edges.push(Edge::new(e[0], e[1], e[2], e[3]));
    }
    CliqueInstance::new(h[0], h[1], edges).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn format_graph(g: &CliqueInstance) -> String {
    let mut out = format!("{} {}\n", g.colors(), g.per_color());
    for e in g.edges() {
        out.push_str(&format!("{} {} {} {}\n", e.s, e.i, e.t, e.j));
    }
    out
}

/// Serialized form of a [`Solution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub outlier_set: Vec<usize>,
    pub basis: Vec<Vec<f64>>,
    pub low_rank: Vec<Vec<f64>>,
    pub sparse: Vec<Vec<f64>>,
    pub cost: f64,
}

impl SolutionRecord {
    pub fn from_solution(sol: &Solution) -> Self {
        Self {
            outlier_set: sol.outlier_set.clone(),
            basis: sol.basis.vectors().to_rows(),
            low_rank: sol.low_rank.to_rows(),
            sparse: sol.sparse.to_rows(),
            cost: sol.cost,
        }
    }

    /// Rebuilds the solution for dimension `d`. The basis must be orthonormal
    /// within the crate-wide frame tolerance.
    pub fn to_solution(&self, d: usize) -> Result<Solution, FormatError> {
        let mat = |rows: &[Vec<f64>], what: &str| {
            if rows.iter().any(|r| r.len() != d) {
                return Err(FormatError::Invalid(format!("{what}: every row must have {d} entries")));
            }
            Matrix::from_rows(d, rows).map_err(|e| FormatError::Invalid(format!("{what}: {e}")))
        };
        let basis = Frame::new(mat(&self.basis, "basis")?, FRAME_TOLERANCE)
            .map_err(|e| FormatError::Invalid(format!("basis: {e}")))?;
        let mut outlier_set = self.outlier_set.clone();
        outlier_set.sort_unstable();
        Ok(Solution {
            outlier_set,
            basis,
            low_rank: mat(&self.low_rank, "low_rank")?,
            sparse: mat(&self.sparse, "sparse")?,
            cost: self.cost,
        })
    }
}

/// Output of `opca solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub mode: String,
    pub cost: f64,
    pub outlier_set: Vec<usize>,
    pub basis: Vec<Vec<f64>>,
    pub candidates: usize,
    pub distinct_subsets: usize,
    pub wall_time_ms: f64,
    pub solution: SolutionRecord,
}

impl ResultRecord {
    pub fn new(mode: &str, sol: &Solution, candidates: usize, distinct_subsets: usize, wall_time_ms: f64) -> Self {
        Self {
            mode: mode.to_string(),
            cost: sol.cost,
            outlier_set: sol.outlier_set.clone(),
            basis: sol.basis.vectors().to_rows(),
            candidates,
            distinct_subsets,
            wall_time_ms,
            solution: SolutionRecord::from_solution(sol),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Reads a solution either from a full result record or from a bare
/// solution object.
pub fn parse_solution(text: &str, d: usize) -> Result<Solution, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let inner = value.get("solution").cloned().unwrap_or(value);
    let rec: SolutionRecord = serde_json::from_value(inner)?;
    rec.to_solution(d)
}

/// One line of a candidate-cell dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDumpLine {
    pub kind: String,
    pub rep: RepMode,
    pub witness: Vec<Vec<f64>>,
    pub sign_summary: Vec<i8>,
    pub outlier_set: Vec<usize>,
    pub cost: f64,
}

impl CellDumpLine {
    pub fn new(cell: &CandidateCell, cost: f64) -> Self {
        let kind = match cell.kind {
            CellKind::Arc => "arc",
            CellKind::Boundary => "boundary",
            CellKind::Sampled => "sampled",
        };
        Self {
            kind: kind.to_string(),
            rep: cell.witness.mode(),
            witness: cell.witness.frame().vectors().to_rows(),
            sign_summary: cell.sign_summary.clone(),
            outlier_set: cell.outlier_set.clone(),
            cost,
        }
    }
}

/// JSON-lines dump of every cell in a solve report.
pub fn format_cell_dump(report: &SolveReport) -> String {
    let mut out = String::new();
    for cell in &report.cells {
        let cost = report.subset_costs[&cell.outlier_set];
        out.push_str(&serde_json::to_string(&CellDumpLine::new(cell, cost)).expect("serializable"));
        out.push('\n');
    }
    out
}
