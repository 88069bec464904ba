//! Multipartition matrices: validation, index sets, column weights, the
//! monomial parametrization, and the text file format.
//!
//! A multipartition matrix stacks 0/1 blocks `A^1 .. A^k` over a common
//! column set; within each block every column sums to exactly 1. Because of
//! that invariant a column is determined by its selector tuple
//! `(S(1,j), .., S(k,j))` (the row of each block carrying its 1), which is
//! how column identity is decided throughout.

use std::collections::HashMap;
use std::fmt;

use crate::error::Error;
use crate::fraction::Fraction;
use crate::linalg::FractionMatrix;

/// A single 0/1 block whose columns each sum to 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartitionMatrix {
    rows: Vec<Vec<u8>>,
    cols: usize,
}

impl PartitionMatrix {
    /// Validates and builds a block. Entries must be 0/1, rows must share a
    /// length, and every column must sum to exactly 1.
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self, Error> {
        let report = validate_blocks(std::slice::from_ref(&rows));
        if let Some(v) = report.violations.first() {
            return Err(v.clone().into_error());
        }
        let cols = rows[0].len();
        Ok(PartitionMatrix { rows, cols })
    }

    pub(crate) fn new_unchecked(rows: Vec<Vec<u8>>, cols: usize) -> Self {
        PartitionMatrix { rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.rows[i][j]
    }

    /// Column indices where row `i` carries a 1.
    pub fn index_set(&self, i: usize) -> Vec<usize> {
        self.rows[i]
            .iter()
            .enumerate()
            .filter_map(|(j, &e)| (e == 1).then_some(j))
            .collect()
    }

    /// The unique row with a 1 in column `j`.
    pub fn row_selector(&self, j: usize) -> usize {
        self.rows
            .iter()
            .position(|r| r[j] == 1)
            .expect("column sums to 1, so a selecting row exists")
    }
}

/// A stack of partition blocks over a common column set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultipartitionMatrix {
    blocks: Vec<PartitionMatrix>,
    cols: usize,
    /// `selectors[j][l]` = the row of block l with a 1 in column j.
    selectors: Vec<Vec<usize>>,
}

/// One validation finding, with 0-based coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The input has no blocks or no columns.
    Empty,
    /// A non-0/1 entry.
    EntryNotBinary {
        block: usize,
        row: usize,
        column: usize,
    },
    /// A row whose length disagrees with the column count.
    RaggedRow {
        block: usize,
        row: usize,
        len: usize,
        expected: usize,
    },
    /// A column of a block whose entries do not sum to 1.
    ColumnSum {
        block: usize,
        column: usize,
        sum: u64,
    },
}

impl Violation {
    fn into_error(self) -> Error {
        match self {
            Violation::EntryNotBinary { block, row, column } => {
                Error::EntryNotBinary { block, row, column }
            }
            Violation::RaggedRow {
                block,
                row,
                len,
                expected,
            } => Error::DimensionMismatch(format!(
                "block {block}, row {row} has length {len}, expected {expected}"
            )),
            Violation::Empty => Error::Validation(1),
            Violation::ColumnSum { .. } => Error::Validation(1),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "matrix has no blocks or no columns"),
            Violation::EntryNotBinary { block, row, column } => write!(
                f,
                "block {}, row {}, column {}: entry is not 0/1",
                block + 1,
                row + 1,
                column + 1
            ),
            Violation::RaggedRow {
                block,
                row,
                len,
                expected,
            } => write!(
                f,
                "block {}, row {}: length {} differs from expected {}",
                block + 1,
                row + 1,
                len,
                expected
            ),
            Violation::ColumnSum { block, column, sum } => write!(
                f,
                "block {}, column {}: column sum is {} instead of 1",
                block + 1,
                column + 1,
                sum
            ),
        }
    }
}

/// Outcome of validating raw blocks against the multipartition invariants.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks arbitrary rectangular 0/1 input against the multipartition
/// invariants: all rows of equal length m >= 1, entries 0/1, and per-block
/// column sums exactly 1.
pub fn validate_blocks(blocks: &[Vec<Vec<u8>>]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let cols = blocks
        .iter()
        .flat_map(|b| b.first())
        .map(|r| r.len())
        .next()
        .unwrap_or(0);
    if blocks.is_empty() || cols == 0 || blocks.iter().any(|b| b.is_empty()) {
        report.violations.push(Violation::Empty);
        return report;
    }
    for (bi, block) in blocks.iter().enumerate() {
        for (ri, row) in block.iter().enumerate() {
            if row.len() != cols {
                report.violations.push(Violation::RaggedRow {
                    block: bi,
                    row: ri,
                    len: row.len(),
                    expected: cols,
                });
                continue;
            }
            for (ci, &e) in row.iter().enumerate() {
                if e > 1 {
                    report.violations.push(Violation::EntryNotBinary {
                        block: bi,
                        row: ri,
                        column: ci,
                    });
                }
            }
        }
    }
    if !report.ok() {
        return report;
    }
    for (bi, block) in blocks.iter().enumerate() {
        for ci in 0..cols {
            let sum: u64 = block.iter().map(|r| r[ci] as u64).sum();
            if sum != 1 {
                report.violations.push(Violation::ColumnSum {
                    block: bi,
                    column: ci,
                    sum,
                });
            }
        }
    }
    report
}

/// Column classes of a (prefix of a) multipartition matrix: `labels[j]` is
/// the 0-based class id of column j, assigned in first-appearance order.
/// Two columns share a class exactly when they are equal as 0/1 vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnLabeling {
    pub labels: Vec<usize>,
    pub beta: usize,
    /// First column of each class.
    pub representatives: Vec<usize>,
    /// All columns of each class, in column order.
    pub class_columns: Vec<Vec<usize>>,
}

impl MultipartitionMatrix {
    /// Validates raw blocks and builds the matrix.
    pub fn new(blocks: Vec<Vec<Vec<u8>>>) -> Result<Self, Error> {
        let report = validate_blocks(&blocks);
        if !report.ok() {
            return Err(Error::Validation(report.violations.len()));
        }
        let cols = blocks[0][0].len();
        let parts: Vec<PartitionMatrix> = blocks
            .into_iter()
            .map(|rows| PartitionMatrix::new_unchecked(rows, cols))
            .collect();
        Ok(Self::from_parts_unchecked(parts, cols))
    }

    /// Builds from already-validated partition blocks sharing a column count.
    pub fn from_partition_matrices(blocks: Vec<PartitionMatrix>) -> Result<Self, Error> {
        if blocks.is_empty() {
            return Err(Error::Validation(1));
        }
        let cols = blocks[0].n_cols();
        if let Some(bad) = blocks.iter().position(|b| b.n_cols() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "block {bad} has {} columns, expected {cols}",
                blocks[bad].n_cols()
            )));
        }
        Ok(Self::from_parts_unchecked(blocks, cols))
    }

    fn from_parts_unchecked(blocks: Vec<PartitionMatrix>, cols: usize) -> Self {
        let selectors = (0..cols)
            .map(|j| blocks.iter().map(|b| b.row_selector(j)).collect())
            .collect();
        MultipartitionMatrix {
            blocks,
            cols,
            selectors,
        }
    }

    /// Number of blocks k.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn blocks(&self) -> &[PartitionMatrix] {
        &self.blocks
    }

    pub fn block(&self, l: usize) -> &PartitionMatrix {
        &self.blocks[l]
    }

    /// Total row count across blocks.
    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.n_rows()).sum()
    }

    /// Global row index of row `i` of block `l` in the stacked matrix.
    pub fn global_row(&self, l: usize, i: usize) -> usize {
        self.blocks[..l].iter().map(|b| b.n_rows()).sum::<usize>() + i
    }

    fn check_block(&self, l: usize) -> Result<(), Error> {
        if l >= self.k() {
            return Err(Error::IndexError(format!("block {l} of {}", self.k())));
        }
        Ok(())
    }

    fn check_col(&self, j: usize) -> Result<(), Error> {
        if j >= self.cols {
            return Err(Error::IndexError(format!("column {j} of {}", self.cols)));
        }
        Ok(())
    }

    /// I^l_i: the columns where row `i` of block `l` carries a 1.
    pub fn index_set(&self, l: usize, i: usize) -> Result<Vec<usize>, Error> {
        self.check_block(l)?;
        if i >= self.blocks[l].n_rows() {
            return Err(Error::IndexError(format!(
                "row {i} of block {l} with {} rows",
                self.blocks[l].n_rows()
            )));
        }
        Ok(self.blocks[l].index_set(i))
    }

    /// S(l, j): the unique row of block `l` whose index set contains `j`.
    pub fn row_selector(&self, l: usize, j: usize) -> Result<usize, Error> {
        self.check_block(l)?;
        self.check_col(j)?;
        Ok(self.selectors[j][l])
    }

    /// Unchecked selector access (precomputed at construction).
    pub fn selector(&self, l: usize, j: usize) -> usize {
        self.selectors[j][l]
    }

    /// The selector tuple identifying column `j` within the first
    /// `prefix_len` blocks.
    pub fn column_key(&self, j: usize, prefix_len: usize) -> &[usize] {
        &self.selectors[j][..prefix_len]
    }

    /// c^l_j for l = `prefix_len`: how many columns of the first l blocks
    /// equal column j (including j itself).
    pub fn column_weights(&self, prefix_len: usize) -> Result<Vec<u64>, Error> {
        if prefix_len == 0 || prefix_len > self.k() {
            return Err(Error::IndexError(format!(
                "prefix length {prefix_len} of {}",
                self.k()
            )));
        }
        let mut counts: HashMap<&[usize], u64> = HashMap::new();
        for j in 0..self.cols {
            *counts.entry(self.column_key(j, prefix_len)).or_insert(0) += 1;
        }
        Ok((0..self.cols)
            .map(|j| counts[self.column_key(j, prefix_len)])
            .collect())
    }

    /// Column classes of the first `prefix_len` blocks, labelled in
    /// first-appearance order.
    pub fn column_labeling(&self, prefix_len: usize) -> Result<ColumnLabeling, Error> {
        if prefix_len == 0 || prefix_len > self.k() {
            return Err(Error::IndexError(format!(
                "prefix length {prefix_len} of {}",
                self.k()
            )));
        }
        let mut class_of: HashMap<&[usize], usize> = HashMap::new();
        let mut labels = Vec::with_capacity(self.cols);
        let mut representatives = Vec::new();
        let mut class_columns: Vec<Vec<usize>> = Vec::new();
        for j in 0..self.cols {
            let key = self.column_key(j, prefix_len);
            let next = class_of.len();
            let id = *class_of.entry(key).or_insert(next);
            if id == representatives.len() {
                representatives.push(j);
                class_columns.push(Vec::new());
            }
            labels.push(id);
            class_columns[id].push(j);
        }
        Ok(ColumnLabeling {
            labels,
            beta: representatives.len(),
            representatives,
            class_columns,
        })
    }

    /// The monomial parametrization: output j is the product over blocks of
    /// the parameter of the selecting row. `t` is indexed by global rows.
    pub fn monomial_map(&self, t: &[Fraction]) -> Result<Vec<Fraction>, Error> {
        if t.len() != self.total_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters but matrix has {} rows",
                t.len(),
                self.total_rows()
            )));
        }
        let offsets: Vec<usize> = (0..self.k()).map(|l| self.global_row(l, 0)).collect();
        Ok((0..self.cols)
            .map(|j| {
                let mut acc = Fraction::one();
                for l in 0..self.k() {
                    acc *= &t[offsets[l] + self.selectors[j][l]];
                }
                acc
            })
            .collect())
    }

    /// alpha^l_i . d
    pub fn row_dot(&self, l: usize, i: usize, d: &[Fraction]) -> Fraction {
        self.blocks[l]
            .row(i)
            .iter()
            .zip(d)
            .filter(|(&e, _)| e == 1)
            .map(|(_, x)| x.clone())
            .sum()
    }

    /// alpha^l_i . d in floating point.
    pub fn row_dot_f64(&self, l: usize, i: usize, d: &[f64]) -> f64 {
        self.blocks[l]
            .row(i)
            .iter()
            .zip(d)
            .filter(|(&e, _)| e == 1)
            .map(|(_, &x)| x)
            .sum()
    }

    /// The sub-matrix of the first `prefix_len` blocks.
    pub fn prefix(&self, prefix_len: usize) -> MultipartitionMatrix {
        assert!(prefix_len >= 1 && prefix_len <= self.k());
        let blocks: Vec<PartitionMatrix> = self.blocks[..prefix_len].to_vec();
        MultipartitionMatrix {
            blocks,
            cols: self.cols,
            selectors: self
                .selectors
                .iter()
                .map(|s| s[..prefix_len].to_vec())
                .collect(),
        }
    }

    /// Rows of the first `prefix_len` blocks stacked into one 0/1 matrix.
    pub fn stacked_rows(&self, prefix_len: usize) -> Vec<Vec<u8>> {
        self.blocks[..prefix_len]
            .iter()
            .flat_map(|b| b.rows().iter().cloned())
            .collect()
    }

    /// Exact-rational view of the stacked prefix.
    pub fn stacked_fraction_matrix(&self, prefix_len: usize) -> FractionMatrix {
        FractionMatrix::from_int_rows(&self.stacked_rows(prefix_len))
    }

    /// A new matrix keeping the given columns, in the given order. The block
    /// structure is preserved; the result is again a valid multipartition
    /// matrix for any nonempty selection.
    pub fn select_columns(&self, columns: &[usize]) -> Result<MultipartitionMatrix, Error> {
        if columns.is_empty() {
            return Err(Error::Validation(1));
        }
        for &j in columns {
            self.check_col(j)?;
        }
        let blocks: Vec<PartitionMatrix> = self
            .blocks
            .iter()
            .map(|b| {
                let rows: Vec<Vec<u8>> = b
                    .rows()
                    .iter()
                    .map(|r| columns.iter().map(|&j| r[j]).collect())
                    .collect();
                PartitionMatrix::new_unchecked(rows, columns.len())
            })
            .collect();
        let selectors = columns.iter().map(|&j| self.selectors[j].clone()).collect();
        Ok(MultipartitionMatrix {
            blocks,
            cols: columns.len(),
            selectors,
        })
    }

    /// The matrix with repeated columns removed (first appearance kept),
    /// together with the labeling that maps old columns onto the new ones.
    pub fn dedup(&self) -> (MultipartitionMatrix, ColumnLabeling) {
        let labeling = self.column_labeling(self.k()).expect("k >= 1");
        let dedup = self
            .select_columns(&labeling.representatives)
            .expect("representatives are valid columns");
        (dedup, labeling)
    }

    /// Column permutation (for invariance tests).
    pub fn permute_columns(&self, perm: &[usize]) -> Result<MultipartitionMatrix, Error> {
        if perm.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} for {} columns",
                perm.len(),
                self.cols
            )));
        }
        self.select_columns(perm)
    }
}

/// Parses the matrix text format: `#` comments, blank lines ignored, blocks
/// separated by a line containing exactly `---`, rows of space-separated
/// 0/1 tokens.
pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<Vec<u8>>>, Error> {
    let mut blocks: Vec<Vec<Vec<u8>>> = Vec::new();
    let mut current: Vec<Vec<u8>> = Vec::new();
    let mut expected_len: Option<usize> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "---" {
            if current.is_empty() {
                return Err(Error::Parse("empty block before '---'".into()));
            }
            blocks.push(std::mem::take(&mut current));
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            match tok {
                "0" => row.push(0),
                "1" => row.push(1),
                _ => {
                    return Err(Error::EntryNotBinary {
                        block: blocks.len(),
                        row: current.len(),
                        column: row.len(),
                    })
                }
            }
        }
        match expected_len {
            None => expected_len = Some(row.len()),
            Some(m) if row.len() != m => {
                return Err(Error::DimensionMismatch(format!(
                    "block {}, row {} has {} entries, expected {m}",
                    blocks.len(),
                    current.len(),
                    row.len()
                )))
            }
            _ => {}
        }
        current.push(row);
    }
    if current.is_empty() {
        if blocks.is_empty() {
            return Err(Error::Parse("no matrix rows found".into()));
        }
        return Err(Error::Parse("trailing '---' with no block after it".into()));
    }
    blocks.push(current);
    Ok(blocks)
}

/// Canonical text form: rows of space-separated 0/1, blocks separated by
/// `---`. `parse_matrix_text(format_matrix_text(m))` reproduces `m` exactly.
pub fn format_matrix_text(mat: &MultipartitionMatrix) -> String {
    let mut out = String::new();
    for (bi, block) in mat.blocks().iter().enumerate() {
        if bi > 0 {
            out.push_str("---\n");
        }
        for row in block.rows() {
            let line: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}
