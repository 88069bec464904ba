//! The generalized running intersection property.
//!
//! For a multipartition matrix `A^1 .. A^k` and each level `l` in `1..k`, the
//! GRIP asks three things of the pair `B_l = Cup(A^1..A^l)` and `A^{l+1}`:
//!
//! 1. the stacked pair is well-connected (consistent column-weight ratios),
//! 2. the pair satisfies the floret condition (connected row sets are equal
//!    or disjoint),
//! 3. the rows of `B_l Cap A^{l+1}` lie in the rowspan of `A^{1..l}`.
//!
//! This module implements the Cup and Cap operations, connection ratios, the
//! floret decomposition, the integer factorization of the column-count table
//! (`omega = x * y`), compressions, and the full [`GripReport`].

use num_integer::Integer;
use serde_json::{json, Value};

use crate::error::Error;
use crate::fraction::Fraction;
use crate::linalg::rowspan_contains;
use crate::matrix::{ColumnLabeling, MultipartitionMatrix, PartitionMatrix};

/// Two 0/1 rows are connected when their supports intersect.
pub fn connected(row_b: &[u8], row_c: &[u8]) -> bool {
    debug_assert_eq!(row_b.len(), row_c.len());
    row_b.iter().zip(row_c).any(|(&a, &b)| a == 1 && b == 1)
}

/// `Cup` of a list of partition blocks: the matrix with one row per distinct
/// stacked column, whose j-th column is the standard basis vector of the
/// class of column j. Classes are numbered in first-appearance order.
pub fn cup(blocks: &[PartitionMatrix]) -> Result<PartitionMatrix, Error> {
    let stacked = MultipartitionMatrix::from_partition_matrices(blocks.to_vec())?;
    Ok(cup_prefix(&stacked, stacked.k()))
}

/// `Cup` of the first `prefix_len` blocks of `mat`.
pub fn cup_prefix(mat: &MultipartitionMatrix, prefix_len: usize) -> PartitionMatrix {
    let labeling = mat
        .column_labeling(prefix_len)
        .expect("prefix length in range");
    cup_from_labeling(&labeling, mat.n_cols())
}

fn cup_from_labeling(labeling: &ColumnLabeling, cols: usize) -> PartitionMatrix {
    let mut rows = vec![vec![0u8; cols]; labeling.beta];
    for (j, &class) in labeling.labels.iter().enumerate() {
        rows[class][j] = 1;
    }
    PartitionMatrix::new_unchecked(rows, cols)
}

/// A verified floret decomposition of a pair (B, C): connectedness between a
/// B row and a C row holds exactly when they share a floret, and florets are
/// complete bipartite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FloretDecomposition {
    /// Floret id of each B row.
    pub floret_of_b_row: Vec<usize>,
    /// Floret id of each C row.
    pub floret_of_c_row: Vec<usize>,
    /// B rows of each floret, ascending.
    pub b_florets: Vec<Vec<usize>>,
    /// C rows of each floret, ascending.
    pub c_florets: Vec<Vec<usize>>,
}

impl FloretDecomposition {
    /// Number of florets.
    pub fn f(&self) -> usize {
        self.b_florets.len()
    }
}

/// Why a pair of matrices fails the floret condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FloretViolation {
    /// Two B rows whose connected C-row sets overlap without being equal.
    Overlap { row_a: usize, row_b: usize },
    /// A row with empty support cannot belong to any floret.
    EmptySupport { b_side: bool, row: usize },
}

/// Checks the floret condition for a pair of partition matrices with a
/// common column count. On success returns the decomposition; on failure the
/// first witness in row order.
pub fn floret_condition(
    b: &PartitionMatrix,
    c: &PartitionMatrix,
) -> Result<Result<FloretDecomposition, FloretViolation>, Error> {
    if b.n_cols() != c.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "floret condition on {} vs {} columns",
            b.n_cols(),
            c.n_cols()
        )));
    }
    for (u, row) in b.rows().iter().enumerate() {
        if row.iter().all(|&e| e == 0) {
            return Ok(Err(FloretViolation::EmptySupport {
                b_side: true,
                row: u,
            }));
        }
    }
    for (v, row) in c.rows().iter().enumerate() {
        if row.iter().all(|&e| e == 0) {
            return Ok(Err(FloretViolation::EmptySupport {
                b_side: false,
                row: v,
            }));
        }
    }
    // Neighbor sets: C rows connected to each B row.
    let neighbors: Vec<Vec<usize>> = b
        .rows()
        .iter()
        .map(|rb| {
            c.rows()
                .iter()
                .enumerate()
                .filter_map(|(v, rc)| connected(rb, rc).then_some(v))
                .collect()
        })
        .collect();
    for u in 0..b.n_rows() {
        for u2 in (u + 1)..b.n_rows() {
            if neighbors[u] != neighbors[u2]
                && neighbors[u].iter().any(|v| neighbors[u2].contains(v))
            {
                return Ok(Err(FloretViolation::Overlap {
                    row_a: u,
                    row_b: u2,
                }));
            }
        }
    }
    // Distinct neighbor sets are the C florets, in first appearance order.
    let mut c_florets: Vec<Vec<usize>> = Vec::new();
    let mut b_florets: Vec<Vec<usize>> = Vec::new();
    let mut floret_of_b_row = vec![usize::MAX; b.n_rows()];
    for (u, n) in neighbors.iter().enumerate() {
        if let Some(t) = c_florets.iter().position(|fl| fl == n) {
            floret_of_b_row[u] = t;
            b_florets[t].push(u);
        } else {
            floret_of_b_row[u] = c_florets.len();
            c_florets.push(n.clone());
            b_florets.push(vec![u]);
        }
    }
    let mut floret_of_c_row = vec![usize::MAX; c.n_rows()];
    for (t, fl) in c_florets.iter().enumerate() {
        for &v in fl {
            debug_assert_eq!(floret_of_c_row[v], usize::MAX, "C florets must be disjoint");
            floret_of_c_row[v] = t;
        }
    }
    debug_assert!(
        floret_of_c_row.iter().all(|&t| t != usize::MAX),
        "every C row with support is connected to some B row"
    );
    Ok(Ok(FloretDecomposition {
        floret_of_b_row,
        floret_of_c_row,
        b_florets,
        c_florets,
    }))
}

/// `Cap` of a pair satisfying the floret condition: the f x m matrix whose
/// j-th column marks the floret owning column j. Row t equals the sum of the
/// C rows in floret t.
pub fn cap(b: &PartitionMatrix, c: &PartitionMatrix, dec: &FloretDecomposition) -> PartitionMatrix {
    debug_assert_eq!(b.n_cols(), c.n_cols());
    let m = c.n_cols();
    let mut rows = vec![vec![0u8; m]; dec.f()];
    for j in 0..m {
        let v = c.row_selector(j);
        rows[dec.floret_of_c_row[v]][j] = 1;
    }
    PartitionMatrix::new_unchecked(rows, m)
}

/// The connection-ratio table of a multipartition matrix. `per_block[l][i]`
/// is `C^{l+1}_i` in 1-based notation: for the first block the index-set
/// size, for deeper blocks the common weight ratio `c^{l+1}_j / c^l_j` over
/// the row's index set. `None` marks rows where the ratio is inconsistent
/// (or vacuous for empty rows).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionRatios {
    pub per_block: Vec<Vec<Option<Fraction>>>,
}

impl ConnectionRatios {
    /// The ratio of block `l`, row `i` (0-based), when defined.
    pub fn get(&self, l: usize, i: usize) -> Option<&Fraction> {
        self.per_block[l][i].as_ref()
    }
}

/// First tuple violating well-connectedness, in lexicographic order
/// (block, row, column, column). 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WellConnectedWitness {
    pub block: usize,
    pub row: usize,
    pub col_a: usize,
    pub col_b: usize,
}

/// Computes the full ratio table along with every violating row's witness.
pub fn connection_ratio_table(
    mat: &MultipartitionMatrix,
) -> (ConnectionRatios, Vec<WellConnectedWitness>) {
    let mut witnesses = Vec::new();
    let mut per_block = Vec::with_capacity(mat.k());
    let weights: Vec<Vec<u64>> = (1..=mat.k())
        .map(|l| mat.column_weights(l).expect("in range"))
        .collect();
    for l in 0..mat.k() {
        let block = mat.block(l);
        let mut ratios = Vec::with_capacity(block.n_rows());
        for i in 0..block.n_rows() {
            let index_set = block.index_set(i);
            if l == 0 {
                // C^1_i = |I^1_i|, zero included for empty rows.
                ratios.push(Some(Fraction::from(index_set.len() as u64)));
                continue;
            }
            if index_set.is_empty() {
                // The ratio condition is vacuous; the value is undefined.
                ratios.push(None);
                continue;
            }
            let ratio_at =
                |j: usize| Fraction::from(weights[l][j]) / Fraction::from(weights[l - 1][j]);
            let first = index_set[0];
            let candidate = ratio_at(first);
            match index_set[1..].iter().find(|&&j| ratio_at(j) != candidate) {
                Some(&bad) => {
                    witnesses.push(WellConnectedWitness {
                        block: l,
                        row: i,
                        col_a: first,
                        col_b: bad,
                    });
                    ratios.push(None);
                }
                None => ratios.push(Some(candidate)),
            }
        }
        per_block.push(ratios);
    }
    (ConnectionRatios { per_block }, witnesses)
}

/// Well-connectedness of the whole matrix: every row of every block beyond
/// the first has a consistent weight ratio across its index set.
pub fn well_connected(
    mat: &MultipartitionMatrix,
) -> Result<ConnectionRatios, WellConnectedWitness> {
    let (ratios, witnesses) = connection_ratio_table(mat);
    match witnesses.into_iter().next() {
        Some(w) => Err(w),
        None => Ok(ratios),
    }
}

/// The column-count table of a (B, C) pair and its positive integer
/// factorization `omega_uv = x_u * y_v` on nonzero cells. Within each floret
/// the `y` values are primitive (gcd 1), which pins the factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaTable {
    /// `omega[u][v]` = number of columns whose B class is u and C row is v.
    pub omega: Vec<Vec<u64>>,
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    /// Y_u: sum of y over the C floret connected to B row u.
    pub y_floret_sum: Vec<u64>,
    /// X_v: sum of x over the B floret connected to C row v.
    pub x_floret_sum: Vec<u64>,
}

/// Counts columns per (B row, C row) class and factors the table per floret.
/// Fails with [`Error::RankOneViolation`] when the table does not factor,
/// which signals that the pair is not well-connected.
pub fn factor_omega(
    b: &PartitionMatrix,
    c: &PartitionMatrix,
    dec: &FloretDecomposition,
) -> Result<OmegaTable, Error> {
    let beta = b.n_rows();
    let gamma = c.n_rows();
    let mut omega = vec![vec![0u64; gamma]; beta];
    for j in 0..b.n_cols() {
        omega[b.row_selector(j)][c.row_selector(j)] += 1;
    }
    // Off-floret cells must be empty: a shared column connects its rows.
    for u in 0..beta {
        for v in 0..gamma {
            if dec.floret_of_b_row[u] != dec.floret_of_c_row[v] && omega[u][v] != 0 {
                return Err(Error::RankOneViolation {
                    floret: dec.floret_of_b_row[u],
                });
            }
        }
    }
    let mut x = vec![0u64; beta];
    let mut y = vec![0u64; gamma];
    for (t, (fb, fc)) in dec.b_florets.iter().zip(&dec.c_florets).enumerate() {
        let u0 = fb[0];
        let g = fc
            .iter()
            .map(|&v| omega[u0][v])
            .fold(0u64, |acc, w| acc.gcd(&w));
        if g == 0 {
            return Err(Error::RankOneViolation { floret: t });
        }
        for &v in fc {
            y[v] = omega[u0][v] / g;
        }
        let v0 = fc[0];
        for &u in fb {
            if !omega[u][v0].is_multiple_of(y[v0]) {
                return Err(Error::RankOneViolation { floret: t });
            }
            x[u] = omega[u][v0] / y[v0];
            if x[u] == 0 {
                return Err(Error::RankOneViolation { floret: t });
            }
        }
        for &u in fb {
            for &v in fc {
                if omega[u][v] != x[u] * y[v] {
                    return Err(Error::RankOneViolation { floret: t });
                }
            }
        }
    }
    let y_floret_sum = (0..beta)
        .map(|u| {
            dec.c_florets[dec.floret_of_b_row[u]]
                .iter()
                .map(|&v| y[v])
                .sum()
        })
        .collect();
    let x_floret_sum = (0..gamma)
        .map(|v| {
            dec.b_florets[dec.floret_of_c_row[v]]
                .iter()
                .map(|&u| x[u])
                .sum()
        })
        .collect();
    Ok(OmegaTable {
        omega,
        x,
        y,
        y_floret_sum,
        x_floret_sum,
    })
}

/// A compression of `mat`: the same distinct columns, with class `u` kept
/// `counts[u]` times, ordered by (class, copy index).
pub fn compression(
    mat: &MultipartitionMatrix,
    counts: &[u64],
) -> Result<MultipartitionMatrix, Error> {
    let labeling = mat.column_labeling(mat.k())?;
    if counts.len() != labeling.beta {
        return Err(Error::DimensionMismatch(format!(
            "{} counts for {} column classes",
            counts.len(),
            labeling.beta
        )));
    }
    let mut columns = Vec::new();
    for (u, &count) in counts.iter().enumerate() {
        let multiplicity = labeling.class_columns[u].len() as u64;
        if count == 0 || count > multiplicity {
            return Err(Error::CountExceedsMultiplicity {
                class: u,
                requested: count,
                multiplicity,
            });
        }
        for _ in 0..count {
            columns.push(labeling.representatives[u]);
        }
    }
    mat.select_columns(&columns)
}

/// Per-level outcome of the three GRIP conditions for the pair
/// `(B_level, A^{level+1})`, 1-based `level` in `1..k`.
#[derive(Clone, Debug)]
pub struct GripLevelReport {
    pub level: usize,
    pub well_connected: bool,
    pub well_connected_witness: Option<WellConnectedWitness>,
    pub floret_condition: bool,
    pub floret_witness: Option<FloretViolation>,
    pub rowspan: bool,
    /// Cap rows (0-based) outside the prefix rowspan.
    pub rowspan_failures: Vec<usize>,
    /// Exact certificate coefficients per cap row, when inside the rowspan.
    pub rowspan_certificates: Vec<Option<Vec<Fraction>>>,
    pub cup: PartitionMatrix,
    pub cap: Option<PartitionMatrix>,
    pub decomposition: Option<FloretDecomposition>,
    /// Ratios of the rows of block `level+1` (the C side).
    pub connection_ratios: Vec<Option<Fraction>>,
}

impl GripLevelReport {
    pub fn passed(&self) -> bool {
        self.well_connected && self.floret_condition && self.rowspan
    }
}

/// Full GRIP verdict with diagnostics for every level.
#[derive(Clone, Debug)]
pub struct GripReport {
    pub overall: bool,
    pub levels: Vec<GripLevelReport>,
    /// Full connection-ratio table of the matrix.
    pub ratios: ConnectionRatios,
    /// c_j over the full stack.
    pub column_weights: Vec<u64>,
    /// `prefix_weights[l][j]` = c^{l+1}_j (prefix of l+1 blocks).
    pub prefix_weights: Vec<Vec<u64>>,
}

/// Evaluates all three GRIP conditions at every level. Nothing
/// short-circuits; every level is reported for diagnostics.
pub fn grip_check(mat: &MultipartitionMatrix) -> GripReport {
    let (ratios, witnesses) = connection_ratio_table(mat);
    let prefix_weights: Vec<Vec<u64>> = (1..=mat.k())
        .map(|l| mat.column_weights(l).expect("in range"))
        .collect();
    let mut levels = Vec::new();
    for level in 1..mat.k() {
        let b = cup_prefix(mat, level);
        let c = mat.block(level);
        let wc_witness = witnesses.iter().find(|w| w.block == level).cloned();
        let floret = floret_condition(&b, c).expect("column counts match");
        let (floret_ok, floret_witness, decomposition) = match floret {
            Ok(dec) => (true, None, Some(dec)),
            Err(v) => (false, Some(v), None),
        };
        let (cap_matrix, rowspan_ok, rowspan_failures, rowspan_certificates) = match &decomposition
        {
            Some(dec) => {
                let cap_matrix = cap(&b, c, dec);
                let prefix = mat.stacked_fraction_matrix(level);
                let mut failures = Vec::new();
                let mut certs = Vec::new();
                for (t, row) in cap_matrix.rows().iter().enumerate() {
                    let v: Vec<Fraction> =
                        row.iter().map(|&e| Fraction::from_int(e as i64)).collect();
                    match rowspan_contains(&prefix, &v).expect("dimensions agree") {
                        Some(cert) => certs.push(Some(cert)),
                        None => {
                            failures.push(t);
                            certs.push(None);
                        }
                    }
                }
                (Some(cap_matrix), failures.is_empty(), failures, certs)
            }
            None => (None, false, Vec::new(), Vec::new()),
        };
        levels.push(GripLevelReport {
            level,
            well_connected: wc_witness.is_none(),
            well_connected_witness: wc_witness,
            floret_condition: floret_ok,
            floret_witness,
            rowspan: rowspan_ok,
            rowspan_failures,
            rowspan_certificates,
            cup: b,
            cap: cap_matrix,
            decomposition,
            connection_ratios: ratios.per_block[level].clone(),
        });
    }
    let overall = levels.iter().all(|l| l.passed());
    GripReport {
        overall,
        levels,
        ratios,
        column_weights: prefix_weights.last().expect("k >= 1").clone(),
        prefix_weights,
    }
}

/// Florets of every block of a GRIP matrix. Block 0 follows the single
/// root-floret convention: all of its rows form one floret, so the level-1
/// denominator in the MLE is the total data mass. Deeper blocks take their
/// florets from the (Cup prefix, next block) decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FloretsByLevel {
    /// `floret_of_row[l][i]` = floret id of row i of block l.
    pub floret_of_row: Vec<Vec<usize>>,
    /// `floret_rows[l][t]` = rows of block l in floret t, ascending.
    pub floret_rows: Vec<Vec<Vec<usize>>>,
}

/// Extracts the per-block florets from a grip report.
pub fn florets_by_level(
    mat: &MultipartitionMatrix,
    report: &GripReport,
) -> Result<FloretsByLevel, Error> {
    let mut floret_of_row = Vec::with_capacity(mat.k());
    let mut floret_rows = Vec::with_capacity(mat.k());
    floret_of_row.push(vec![0; mat.block(0).n_rows()]);
    floret_rows.push(vec![(0..mat.block(0).n_rows()).collect::<Vec<_>>()]);
    for level in 1..mat.k() {
        let entry = &report.levels[level - 1];
        match &entry.decomposition {
            Some(dec) => {
                floret_of_row.push(dec.floret_of_c_row.clone());
                floret_rows.push(dec.c_florets.clone());
            }
            None => return Err(Error::FloretsUndefined { level }),
        }
    }
    Ok(FloretsByLevel {
        floret_of_row,
        floret_rows,
    })
}

/// Everything the compressed-MLE and toric-fiber-product constructions need
/// about one level split of a GRIP matrix.
#[derive(Clone, Debug)]
pub struct LevelSplit {
    /// 1-based prefix length l; the split pairs `A^{1..l}` with `A^{l+1}`.
    pub level: usize,
    pub b: PartitionMatrix,
    pub labeling: ColumnLabeling,
    pub dec: FloretDecomposition,
    pub omega: OmegaTable,
    /// `uv_columns[u][v]` = columns of class (u, v) in column order; the s-th
    /// entry is the column indexed (u, v, s).
    pub uv_columns: Vec<Vec<Vec<usize>>>,
}

impl LevelSplit {
    /// The row of block `level` (the C side) selecting `column`.
    pub fn level_block_row(&self, column: usize) -> usize {
        let u = self.labeling.labels[column];
        (0..self.uv_columns[u].len())
            .find(|&v| self.uv_columns[u][v].contains(&column))
            .expect("every column belongs to a (u, v) class")
    }
}

/// Builds the level split at 1-based prefix length `level` (requires the
/// floret condition and well-connectedness at that level).
pub fn level_split(mat: &MultipartitionMatrix, level: usize) -> Result<LevelSplit, Error> {
    if level == 0 || level >= mat.k() {
        return Err(Error::IndexError(format!(
            "level {level} of 1..{}",
            mat.k() - 1
        )));
    }
    let labeling = mat.column_labeling(level)?;
    let b = cup_from_labeling(&labeling, mat.n_cols());
    let c = mat.block(level);
    let dec = match floret_condition(&b, c)? {
        Ok(dec) => dec,
        Err(_) => return Err(Error::FloretsUndefined { level }),
    };
    let omega = factor_omega(&b, c, &dec)?;
    let mut uv_columns = vec![vec![Vec::new(); c.n_rows()]; labeling.beta];
    for j in 0..mat.n_cols() {
        uv_columns[labeling.labels[j]][mat.selector(level, j)].push(j);
    }
    Ok(LevelSplit {
        level,
        b,
        labeling,
        dec,
        omega,
        uv_columns,
    })
}

fn fraction_str(f: &Option<Fraction>) -> Value {
    match f {
        Some(x) => Value::String(x.to_string()),
        None => Value::Null,
    }
}

impl GripReport {
    /// JSON form consumed by the command-line front end. Indices are
    /// 1-based; keys serialize alphabetically.
    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .map(|l| {
                let mut obj = serde_json::Map::new();
                obj.insert(
                    "connection_ratios".into(),
                    Value::Array(l.connection_ratios.iter().map(fraction_str).collect()),
                );
                if let Some(ce) = level_counterexample(l) {
                    obj.insert("counterexample".into(), ce);
                }
                if let Some(dec) = &l.decomposition {
                    obj.insert(
                        "florets".into(),
                        json!(dec
                            .c_florets
                            .iter()
                            .map(|fl| fl.iter().map(|v| v + 1).collect::<Vec<_>>())
                            .collect::<Vec<_>>()),
                    );
                }
                obj.insert("floret_condition".into(), Value::Bool(l.floret_condition));
                obj.insert("level".into(), json!(l.level));
                obj.insert("rowspan".into(), Value::Bool(l.rowspan));
                obj.insert("well_connected".into(), Value::Bool(l.well_connected));
                Value::Object(obj)
            })
            .collect();
        json!({
            "column_weights": self.column_weights,
            "level1_convention": "single-root-floret",
            "levels": levels,
            "overall": self.overall,
        })
    }
}

fn level_counterexample(l: &GripLevelReport) -> Option<Value> {
    if let Some(w) = &l.well_connected_witness {
        return Some(json!({
            "block": w.block + 1,
            "column_a": w.col_a + 1,
            "column_b": w.col_b + 1,
            "kind": "well_connected",
            "row": w.row + 1,
        }));
    }
    if let Some(v) = &l.floret_witness {
        return Some(match v {
            FloretViolation::Overlap { row_a, row_b } => json!({
                "kind": "floret_overlap",
                "row_a": row_a + 1,
                "row_b": row_b + 1,
            }),
            FloretViolation::EmptySupport { b_side, row } => json!({
                "kind": "empty_support",
                "row": row + 1,
                "side": if *b_side { "b" } else { "c" },
            }),
        });
    }
    if !l.rowspan {
        return Some(json!({
            "cap_rows": l.rowspan_failures.iter().map(|t| t + 1).collect::<Vec<_>>(),
            "kind": "rowspan",
        }));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::fixtures::*;

    #[test]
    fn connected_checks_support_intersection() {
        let m = grip14();
        assert!(connected(m.block(0).row(0), m.block(1).row(0)));
        assert!(!connected(&[1, 0], &[0, 1]));
        assert!(connected(&[0, 1], &[0, 1]));
    }

    #[test]
    fn cup_of_first_two_blocks_matches_display() {
        let m = grip14();
        let b = cup_prefix(&m, 2);
        assert_eq!(b.n_rows(), 4);
        let expect = [
            vec![1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1],
        ];
        for (row, want) in b.rows().iter().zip(&expect) {
            assert_eq!(row, want);
        }
        // Cup of a single identity block is the identity.
        let id = MultipartitionMatrix::new(vec![vec![vec![1, 0], vec![0, 1]]]).unwrap();
        assert_eq!(cup_prefix(&id, 1).rows(), id.block(0).rows());
        // Cup of two identical blocks equals the block.
        let twice = MultipartitionMatrix::new(vec![
            vec![vec![1, 1, 0], vec![0, 0, 1]],
            vec![vec![1, 1, 0], vec![0, 0, 1]],
        ])
        .unwrap();
        assert_eq!(cup_prefix(&twice, 2).rows(), twice.block(0).rows());
    }

    #[test]
    fn floret_decomposition_of_worked_example() {
        let m = grip14();
        let b = cup_prefix(&m, 2);
        let dec = floret_condition(&b, m.block(2)).unwrap().unwrap();
        assert_eq!(dec.c_florets, vec![vec![0, 1, 2], vec![3, 4]]);
        assert_eq!(dec.b_florets, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(dec.floret_of_b_row, vec![0, 1, 0, 1]);
        assert_eq!(dec.floret_of_c_row, vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn floret_condition_counterexample() {
        let b = PartitionMatrix::new(vec![vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        let c = PartitionMatrix::new(vec![vec![1, 0, 1], vec![0, 1, 0]]).unwrap();
        // C row 0 meets both B rows; C row 1 meets only B row 0, so the two
        // B rows have overlapping unequal neighbor sets.
        let result = floret_condition(&b, &c).unwrap();
        assert_eq!(result, Err(FloretViolation::Overlap { row_a: 0, row_b: 1 }));
    }

    #[test]
    fn floret_condition_all_ones_c_row() {
        let b = PartitionMatrix::new(vec![vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        let c = PartitionMatrix::new(vec![vec![1, 1, 1]]).unwrap();
        let dec = floret_condition(&b, &c).unwrap().unwrap();
        assert_eq!(dec.f(), 1);
        assert_eq!(dec.b_florets, vec![vec![0, 1]]);
        assert_eq!(dec.c_florets, vec![vec![0]]);
    }

    #[test]
    fn cap_of_worked_example_levels() {
        let m = grip14();
        // Level 1: B_1 = A^1, all rows of A^2 connect to all of A^1.
        let b1 = cup_prefix(&m, 1);
        let dec1 = floret_condition(&b1, m.block(1)).unwrap().unwrap();
        let cap1 = cap(&b1, m.block(1), &dec1);
        assert_eq!(cap1.rows(), &[vec![1u8; 14]]);
        // Level 2: the cap equals A^2.
        let b2 = cup_prefix(&m, 2);
        let dec2 = floret_condition(&b2, m.block(2)).unwrap().unwrap();
        let cap2 = cap(&b2, m.block(2), &dec2);
        assert_eq!(cap2.rows(), m.block(1).rows());
        // Row t of the cap is the sum of the C rows in floret t.
        for (t, fl) in dec2.c_florets.iter().enumerate() {
            let mut sum = vec![0u8; 14];
            for &v in fl {
                for (j, e) in m.block(2).row(v).iter().enumerate() {
                    sum[j] += e;
                }
            }
            assert_eq!(&sum, cap2.row(t));
        }
    }

    #[test]
    fn connection_ratios_match_worked_example() {
        let m = grip14();
        let ratios = well_connected(&m).unwrap();
        let f = |n: i64, d: i64| Some(Fraction::new(n, d));
        assert_eq!(ratios.per_block[0], vec![f(7, 1), f(7, 1)]);
        assert_eq!(ratios.per_block[1], vec![f(3, 7), f(4, 7)]);
        assert_eq!(
            ratios.per_block[2],
            vec![f(1, 3), f(1, 3), f(1, 3), f(1, 2), f(1, 2)]
        );
    }

    #[test]
    fn all_distinct_prefix_columns_give_unit_ratios() {
        // First block is an identity, so every prefix already has distinct
        // columns and all weights are 1.
        let m = MultipartitionMatrix::new(vec![
            vec![
                vec![1, 0, 0, 0],
                vec![0, 1, 0, 0],
                vec![0, 0, 1, 0],
                vec![0, 0, 0, 1],
            ],
            vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1]],
        ])
        .unwrap();
        let ratios = well_connected(&m).unwrap();
        for block in &ratios.per_block[1..] {
            for r in block {
                assert_eq!(r.as_ref().unwrap(), &Fraction::one());
            }
        }
    }

    #[test]
    fn duplicated_column_breaks_well_connectedness() {
        // The 2x2 independence matrix with its last column repeated: block 2
        // row 1 has I = {1, 3} (1-based) with weight ratios 1/2 vs 1/3.
        let m = independence_dup5();
        let err = well_connected(&m).unwrap_err();
        assert_eq!(
            err,
            WellConnectedWitness {
                block: 1,
                row: 0,
                col_a: 0,
                col_b: 2
            }
        );
    }

    #[test]
    fn product_of_ratios_equals_column_weight() {
        let m = grip14();
        let report = grip_check(&m);
        assert!(report.overall);
        for j in 0..m.n_cols() {
            let mut product = Fraction::one();
            for l in 0..m.k() {
                let i = m.selector(l, j);
                product *= report.ratios.get(l, i).unwrap();
            }
            assert_eq!(product, Fraction::from(report.column_weights[j]));
        }
    }

    #[test]
    fn omega_factorization_of_worked_example() {
        let m = grip14();
        let split = level_split(&m, 2).unwrap();
        // Floret 1 ({classes 1,3} x {rows 1,2,3}): all counts 1.
        // Floret 2 ({classes 2,4} x {rows 4,5}): all counts 2.
        assert_eq!(split.omega.omega[0], vec![1, 1, 1, 0, 0]);
        assert_eq!(split.omega.omega[1], vec![0, 0, 0, 2, 2]);
        assert_eq!(split.omega.omega[2], vec![1, 1, 1, 0, 0]);
        assert_eq!(split.omega.omega[3], vec![0, 0, 0, 2, 2]);
        assert_eq!(split.omega.x, vec![1, 2, 1, 2]);
        assert_eq!(split.omega.y, vec![1, 1, 1, 1, 1]);
        assert_eq!(split.omega.y_floret_sum, vec![3, 2, 3, 2]);
        assert_eq!(split.omega.x_floret_sum, vec![2, 2, 2, 4, 4]);
        // Primitivity of y per floret.
        for fc in &split.dec.c_florets {
            let g = fc
                .iter()
                .map(|&v| split.omega.y[v])
                .fold(0u64, |a, b| a.gcd(&b));
            assert_eq!(g, 1);
        }
    }

    #[test]
    fn omega_factors_single_column_florets() {
        // Single all-ones C row: rank one is automatic; primitivity forces
        // y = 1 and x carries the class multiplicities.
        let m = MultipartitionMatrix::new(vec![
            vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]],
            vec![vec![1, 1, 1, 1]],
        ])
        .unwrap();
        let split = level_split(&m, 1).unwrap();
        assert_eq!(split.omega.omega, vec![vec![2], vec![2]]);
        assert_eq!(split.omega.y, vec![1]);
        assert_eq!(split.omega.x, vec![2, 2]);
        for (u, &xu) in split.omega.x.iter().enumerate() {
            assert_eq!(split.omega.omega[u][0], xu * split.omega.y[0]);
        }
    }

    #[test]
    fn compression_counts() {
        let m = grip14();
        let prefix = m.prefix(2);
        let once = compression(&prefix, &[1, 1, 1, 1]).unwrap();
        assert_eq!(once.n_cols(), 4);
        let full = compression(&prefix, &[3, 4, 3, 4]).unwrap();
        assert_eq!(full.n_cols(), 14);
        // Full multiplicities give a column permutation of the original.
        let mut sorted_full: Vec<Vec<usize>> =
            (0..14).map(|j| full.column_key(j, 2).to_vec()).collect();
        let mut sorted_orig: Vec<Vec<usize>> =
            (0..14).map(|j| prefix.column_key(j, 2).to_vec()).collect();
        sorted_full.sort();
        sorted_orig.sort();
        assert_eq!(sorted_full, sorted_orig);
        assert!(matches!(
            compression(&prefix, &[4, 4, 3, 4]),
            Err(Error::CountExceedsMultiplicity {
                class: 0,
                requested: 4,
                multiplicity: 3
            })
        ));
    }

    #[test]
    fn grip_holds_for_worked_example() {
        let report = grip_check(&grip14());
        assert!(report.overall);
        for level in &report.levels {
            assert!(level.well_connected && level.floret_condition && level.rowspan);
            for cert in &level.rowspan_certificates {
                assert!(cert.is_some());
            }
        }
    }

    #[test]
    fn grip_holds_for_independence() {
        let report = grip_check(&independence2x2());
        assert!(report.overall);
    }

    #[test]
    fn grip_fails_for_data_dependent_representation() {
        let report = grip_check(&diffrep_a());
        assert!(!report.overall);
        let level = &report.levels[0];
        assert!(!level.well_connected);
        assert!(!level.floret_condition);
    }

    #[test]
    fn grip_fails_for_duplicated_column_variant() {
        let report = grip_check(&independence_dup5());
        assert!(!report.overall);
        assert!(!report.levels[0].well_connected);
    }

    /// The independence matrix extended with an xor-patterned third block:
    /// well-connected and staged, but the level-2 cap rows leave the prefix
    /// rowspan, so only condition (3) fails.
    fn xor_extension() -> MultipartitionMatrix {
        MultipartitionMatrix::new(vec![
            vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]],
            vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1]],
            vec![vec![1, 0, 0, 1], vec![0, 1, 1, 0]],
        ])
        .unwrap()
    }

    #[test]
    fn rowspan_condition_can_fail_alone() {
        let report = grip_check(&xor_extension());
        assert!(!report.overall);
        assert!(report.levels[0].passed());
        let level2 = &report.levels[1];
        assert!(level2.well_connected);
        assert!(level2.floret_condition);
        assert!(!level2.rowspan);
        assert_eq!(level2.rowspan_failures, vec![0, 1]);
        let json = report.to_json();
        assert_eq!(
            json["levels"][1]["counterexample"]["kind"],
            serde_json::json!("rowspan")
        );
    }

    #[test]
    fn single_block_matrix_is_trivially_grip() {
        let id = MultipartitionMatrix::new(vec![vec![vec![1, 0], vec![0, 1]]]).unwrap();
        let report = grip_check(&id);
        assert!(report.overall);
        assert!(report.levels.is_empty());
        let florets = florets_by_level(&id, &report).unwrap();
        assert_eq!(florets.floret_rows, vec![vec![vec![0, 1]]]);
    }

    #[test]
    fn florets_by_level_of_worked_example() {
        let m = grip14();
        let report = grip_check(&m);
        let florets = florets_by_level(&m, &report).unwrap();
        // Level 1: single root floret.
        assert_eq!(florets.floret_rows[0], vec![vec![0, 1]]);
        // Level 2: the cap is the all-ones row, one floret.
        assert_eq!(florets.floret_rows[1], vec![vec![0, 1]]);
        // Level 3: {r0, r1, r2} and {r3, r4}.
        assert_eq!(florets.floret_rows[2], vec![vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn florets_undefined_after_floret_failure() {
        let m = diffrep_a();
        let report = grip_check(&m);
        assert!(matches!(
            florets_by_level(&m, &report),
            Err(Error::FloretsUndefined { level: 1 })
        ));
    }

    #[test]
    fn grip_verdict_invariant_under_column_permutation() {
        let m = grip14();
        let report = grip_check(&m);
        let perm: Vec<usize> = vec![13, 5, 0, 7, 2, 9, 4, 11, 6, 1, 8, 3, 10, 12];
        let permuted = m.permute_columns(&perm).unwrap();
        let report_p = grip_check(&permuted);
        assert_eq!(report.overall, report_p.overall);
        // Multiset of connection ratios is preserved.
        for l in 0..m.k() {
            let mut a: Vec<String> = report.ratios.per_block[l]
                .iter()
                .map(|r| format!("{r:?}"))
                .collect();
            let mut b: Vec<String> = report_p.ratios.per_block[l]
                .iter()
                .map(|r| format!("{r:?}"))
                .collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
        let bad = independence_dup5();
        let perm5 = vec![4, 2, 0, 1, 3];
        assert_eq!(
            grip_check(&bad).overall,
            grip_check(&bad.permute_columns(&perm5).unwrap()).overall
        );
    }

    #[test]
    fn report_serializes_with_sorted_keys() {
        let report = grip_check(&grip14());
        let json = report.to_json();
        assert_eq!(json["overall"], serde_json::json!(true));
        let text = serde_json::to_string(&json).unwrap();
        assert!(text.starts_with("{\"column_weights\""));
        assert_eq!(
            json["levels"][1]["connection_ratios"][3],
            serde_json::json!("1/2")
        );
    }
}
