//! Toric fiber products: the product parametrization of two graded factors,
//! Quad and Lift generator families, and the per-level verification that a
//! GRIP matrix's prefix ideal is the fiber product of its compressions.
//!
//! Ideal equality is decided through rowspan equality of parametrization
//! matrices: exact, and exactly the equivalence these 0/1 matrices
//! satisfy. Binomials are pairs of exponent multisets; soundness of every
//! emitted generator is a kernel-membership check.

use serde_json::{json, Value};

use crate::error::Error;
use crate::grip::{cap, compression, level_split, GripReport, LevelSplit};
use crate::linalg::{rowspan_equal, FractionMatrix};
use crate::matrix::{MultipartitionMatrix, PartitionMatrix};

/// Cap on the number of generators a single enumeration may emit.
pub const GENERATOR_BOUND: usize = 10_000;

/// A binomial as a pair of sorted exponent multisets over column indices
/// (of the product's z-variables, or of one factor's columns for inputs to
/// [`TfpProduct::lift`]).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binomial {
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
}

impl Binomial {
    pub fn new(mut lhs: Vec<usize>, mut rhs: Vec<usize>) -> Self {
        lhs.sort();
        rhs.sort();
        Binomial { lhs, rhs }
    }

    /// JSON form: sparse exponent maps keyed by the given column names.
    pub fn to_json(&self, name: &dyn Fn(usize) -> String) -> Value {
        let side = |cols: &[usize]| {
            let mut map = serde_json::Map::new();
            for &c in cols {
                let key = name(c);
                let e = map.entry(key).or_insert(json!(0));
                *e = json!(e.as_u64().unwrap_or(0) + 1);
            }
            Value::Object(map)
        };
        json!({ "lhs": side(&self.lhs), "rhs": side(&self.rhs) })
    }
}

/// Which factor of a product a binomial lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Two monomially parametrized factors glued along a common grading: the
/// columns of each factor are partitioned into grade groups, and the
/// product has one z-variable per grade-respecting pair of columns.
#[derive(Clone, Debug)]
pub struct TfpProduct {
    left_rows: Vec<Vec<u8>>,
    right_rows: Vec<Vec<u8>>,
    left_groups: Vec<Vec<usize>>,
    right_groups: Vec<Vec<usize>>,
    /// z-variables as (grade, left column, right column), in (grade, j, k)
    /// order.
    z_vars: Vec<(usize, usize, usize)>,
}

impl TfpProduct {
    /// Builds a product; the groups must partition each factor's columns
    /// and be nonempty in every grade.
    pub fn new(
        left_rows: Vec<Vec<u8>>,
        right_rows: Vec<Vec<u8>>,
        left_groups: Vec<Vec<usize>>,
        right_groups: Vec<Vec<usize>>,
    ) -> Result<Self, Error> {
        if left_groups.len() != right_groups.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} left grades vs {} right grades",
                left_groups.len(),
                right_groups.len()
            )));
        }
        let check = |rows: &[Vec<u8>], groups: &[Vec<usize>], side: &str| {
            let cols = rows.first().map_or(0, |r| r.len());
            let mut seen = vec![false; cols];
            for g in groups {
                if g.is_empty() {
                    return Err(Error::DimensionMismatch(format!(
                        "empty {side} grade group"
                    )));
                }
                for &c in g {
                    if c >= cols || seen[c] {
                        return Err(Error::DimensionMismatch(format!(
                            "{side} column {c} missing or repeated in grouping"
                        )));
                    }
                    seen[c] = true;
                }
            }
            if seen.iter().any(|&s| !s) {
                return Err(Error::DimensionMismatch(format!(
                    "{side} grouping does not cover all columns"
                )));
            }
            Ok(())
        };
        check(&left_rows, &left_groups, "left")?;
        check(&right_rows, &right_groups, "right")?;
        let mut z_vars = Vec::new();
        for (grade, (lg, rg)) in left_groups.iter().zip(&right_groups).enumerate() {
            for &j in lg {
                for &k in rg {
                    z_vars.push((grade, j, k));
                }
            }
        }
        Ok(TfpProduct {
            left_rows,
            right_rows,
            left_groups,
            right_groups,
            z_vars,
        })
    }

    pub fn n_grades(&self) -> usize {
        self.left_groups.len()
    }

    pub fn z_vars(&self) -> &[(usize, usize, usize)] {
        &self.z_vars
    }

    /// Index of z variable (grade, left column, right column).
    pub fn z_index(&self, grade: usize, left: usize, right: usize) -> Option<usize> {
        self.z_vars
            .iter()
            .position(|&(g, j, k)| (g, j, k) == (grade, left, right))
    }

    /// The stacked parametrization matrix: column z = (grade, j, k) is the
    /// left factor's column j stacked over the right factor's column k.
    pub fn parametrization_matrix(&self) -> Vec<Vec<u8>> {
        let mut rows = Vec::with_capacity(self.left_rows.len() + self.right_rows.len());
        for r in &self.left_rows {
            rows.push(self.z_vars.iter().map(|&(_, j, _)| r[j]).collect());
        }
        for r in &self.right_rows {
            rows.push(self.z_vars.iter().map(|&(_, _, k)| r[k]).collect());
        }
        rows
    }

    /// All 2x2 quad binomials within each grade:
    /// `z_{jk} z_{j'k'} - z_{jk'} z_{j'k}`. Each emitted quad vanishes on
    /// the parametrization by construction; output is capped at
    /// [`GENERATOR_BOUND`].
    pub fn quad_generators(&self) -> Vec<Binomial> {
        let mut out = Vec::new();
        for grade in 0..self.n_grades() {
            let lg = &self.left_groups[grade];
            let rg = &self.right_groups[grade];
            for a in 0..lg.len() {
                for b in (a + 1)..lg.len() {
                    for c in 0..rg.len() {
                        for d in (c + 1)..rg.len() {
                            if out.len() >= GENERATOR_BOUND {
                                return out;
                            }
                            let z = |j, k| self.z_index(grade, j, k).expect("grade pair");
                            out.push(Binomial::new(
                                vec![z(lg[a], rg[c]), z(lg[b], rg[d])],
                                vec![z(lg[a], rg[d]), z(lg[b], rg[c])],
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    fn grade_of(&self, side: Side, column: usize) -> Option<usize> {
        let groups = match side {
            Side::Left => &self.left_groups,
            Side::Right => &self.right_groups,
        };
        groups.iter().position(|g| g.contains(&column))
    }

    /// Lifts a multihomogeneous binomial of one factor to the product: the
    /// two monomials are matched factor-by-factor within each grade, and
    /// the other factor's index is enumerated over its grade group. Errors
    /// when the two sides have different grade degrees.
    pub fn lift(&self, side: Side, f: &Binomial) -> Result<Vec<Binomial>, Error> {
        let graded = |cols: &[usize]| -> Result<Vec<(usize, usize)>, Error> {
            cols.iter()
                .map(|&c| {
                    self.grade_of(side, c)
                        .map(|g| (g, c))
                        .ok_or_else(|| Error::IndexError(format!("factor column {c}")))
                })
                .collect()
        };
        let mut lhs = graded(&f.lhs)?;
        let mut rhs = graded(&f.rhs)?;
        lhs.sort();
        rhs.sort();
        if lhs.iter().map(|&(g, _)| g).ne(rhs.iter().map(|&(g, _)| g)) {
            return Err(Error::NotMultihomogeneous);
        }
        let degree = lhs.len();
        let other_groups = match side {
            Side::Left => &self.right_groups,
            Side::Right => &self.left_groups,
        };
        let choices: Vec<&Vec<usize>> = lhs.iter().map(|&(g, _)| &other_groups[g]).collect();
        let mut out = Vec::new();
        let mut picks = vec![0usize; degree];
        loop {
            if out.len() >= GENERATOR_BOUND {
                return Ok(out);
            }
            let mut mono_l = Vec::with_capacity(degree);
            let mut mono_r = Vec::with_capacity(degree);
            for alpha in 0..degree {
                let other = choices[alpha][picks[alpha]];
                let (g, cl) = lhs[alpha];
                let (_, cr) = rhs[alpha];
                let (zl, zr) = match side {
                    Side::Left => (
                        self.z_index(g, cl, other).expect("grade pair"),
                        self.z_index(g, cr, other).expect("grade pair"),
                    ),
                    Side::Right => (
                        self.z_index(g, other, cl).expect("grade pair"),
                        self.z_index(g, other, cr).expect("grade pair"),
                    ),
                };
                mono_l.push(zl);
                mono_r.push(zr);
            }
            out.push(Binomial::new(mono_l, mono_r));
            // Advance the mixed-radix choice vector.
            let mut alpha = 0;
            loop {
                if alpha == degree {
                    return Ok(out);
                }
                picks[alpha] += 1;
                if picks[alpha] < choices[alpha].len() {
                    break;
                }
                picks[alpha] = 0;
                alpha += 1;
            }
        }
    }
}

/// The integer kernel basis of a 0/1 matrix, rewritten as binomials over
/// its columns (positive part on the left).
pub fn kernel_binomials(rows: &[Vec<u8>]) -> Vec<Binomial> {
    use num_traits::{Signed, ToPrimitive, Zero};
    let m = FractionMatrix::from_int_rows(rows);
    crate::linalg::integer_kernel_basis(&m)
        .into_iter()
        .map(|b| {
            let mut lhs = Vec::new();
            let mut rhs = Vec::new();
            for (c, e) in b.iter().enumerate() {
                if e.is_zero() {
                    continue;
                }
                let times = e.abs().to_usize().expect("desk-scale exponent");
                for _ in 0..times {
                    if e.is_positive() {
                        lhs.push(c);
                    } else {
                        rhs.push(c);
                    }
                }
            }
            Binomial::new(lhs, rhs)
        })
        .collect()
}

/// Exact kernel membership of a binomial over a matrix's columns: the two
/// monomials' column sums must agree coordinatewise.
pub fn binomial_in_kernel(rows: &[Vec<u8>], binomial: &Binomial) -> bool {
    let n = rows.len();
    let mut diff = vec![0i64; n];
    for &c in &binomial.lhs {
        for (i, row) in rows.iter().enumerate() {
            diff[i] += row[c] as i64;
        }
    }
    for &c in &binomial.rhs {
        for (i, row) in rows.iter().enumerate() {
            diff[i] -= row[c] as i64;
        }
    }
    diff.iter().all(|&x| x == 0)
}

/// A level split of a GRIP matrix realized as a toric fiber product: the
/// compressed prefix and compressed next block glued along the cap grading.
#[derive(Clone, Debug)]
pub struct TfpInstance {
    /// 1-based prefix length l; the product rebuilds `A^{1..l+1}`.
    pub level: usize,
    pub split: LevelSplit,
    /// The compression of the prefix, with class u kept x_u times.
    pub prefix_compression: MultipartitionMatrix,
    /// The compression of block l+1: y_v copies of each basis vector, as
    /// rows over sum(y) columns.
    pub next_compression: PartitionMatrix,
    /// The grading matrix `Cup(prefix) Cap A^{l+1}`.
    pub grading: PartitionMatrix,
    pub product: TfpProduct,
    /// z-variable index -> column of the original matrix; a bijection.
    pub z_to_column: Vec<usize>,
}

fn require_grip_through(report: &GripReport, level: usize) -> Result<(), Error> {
    for entry in report.levels.iter().take(level) {
        if !entry.passed() {
            return Err(Error::GripRequired { level: entry.level });
        }
    }
    Ok(())
}

/// Builds the fiber-product instance at 1-based prefix length `level`
/// (GRIP is required through that level).
pub fn build_tfp_instance(
    mat: &MultipartitionMatrix,
    report: &GripReport,
    level: usize,
) -> Result<TfpInstance, Error> {
    if level == 0 || level >= mat.k() {
        return Err(Error::IndexError(format!(
            "level {level} of 1..{}",
            mat.k() - 1
        )));
    }
    require_grip_through(report, level)?;
    let split = level_split(mat, level)?;
    let prefix = mat.prefix(level);
    let prefix_compression = compression(&prefix, &split.omega.x)?;
    let gamma = mat.block(level).n_rows();
    let y_total: u64 = split.omega.y.iter().sum();
    let mut next_rows = vec![vec![0u8; y_total as usize]; gamma];
    let mut y_offsets = Vec::with_capacity(gamma);
    {
        let mut off = 0usize;
        for v in 0..gamma {
            y_offsets.push(off);
            for s in 0..split.omega.y[v] as usize {
                next_rows[v][off + s] = 1;
            }
            off += split.omega.y[v] as usize;
        }
    }
    let next_compression = PartitionMatrix::new(next_rows)?;
    let grading = cap(&split.b, mat.block(level), &split.dec);
    // Runtime check: the grading rows are linearly independent (each owns a
    // column, every column is a unit vector).
    for t in 0..grading.n_rows() {
        assert!(
            grading.row(t).contains(&1),
            "grading row {t} owns no column"
        );
    }
    // Grade groups: compressed prefix columns (u, s') with u in floret t;
    // compressed next columns (v, s'') with v in floret t.
    let beta = split.labeling.beta;
    let mut x_offsets = Vec::with_capacity(beta);
    {
        let mut off = 0usize;
        for u in 0..beta {
            x_offsets.push(off);
            off += split.omega.x[u] as usize;
        }
    }
    let f = split.dec.f();
    let mut left_groups = vec![Vec::new(); f];
    for u in 0..beta {
        let t = split.dec.floret_of_b_row[u];
        for s in 0..split.omega.x[u] as usize {
            left_groups[t].push(x_offsets[u] + s);
        }
    }
    let mut right_groups = vec![Vec::new(); f];
    for v in 0..gamma {
        let t = split.dec.floret_of_c_row[v];
        for s in 0..split.omega.y[v] as usize {
            right_groups[t].push(y_offsets[v] + s);
        }
    }
    let product = TfpProduct::new(
        prefix_compression.stacked_rows(level),
        next_compression.rows().to_vec(),
        left_groups,
        right_groups,
    )?;
    // The index bijection: z = (grade, (u, s'), (v, s'')) maps to the
    // (s' * y_v + s'')-th column of class (u, v).
    let mut z_to_column = Vec::with_capacity(product.z_vars().len());
    let mut hit = vec![false; mat.n_cols()];
    for &(_, left, right) in product.z_vars() {
        let u = x_offsets.partition_point(|&o| o <= left) - 1;
        let s_prime = (left - x_offsets[u]) as u64;
        let v = y_offsets.partition_point(|&o| o <= right) - 1;
        let s_second = (right - y_offsets[v]) as u64;
        let s = s_prime * split.omega.y[v] + s_second;
        let column = split.uv_columns[u][v][s as usize];
        assert!(!hit[column], "column {column} hit twice by the z bijection");
        hit[column] = true;
        z_to_column.push(column);
    }
    assert!(
        hit.iter().all(|&h| h),
        "every column must be hit by the z bijection"
    );
    Ok(TfpInstance {
        level,
        split,
        prefix_compression,
        next_compression,
        grading,
        product,
        z_to_column,
    })
}

impl TfpInstance {
    /// The product's parametrization matrix over z-variables.
    pub fn parametrization_matrix(&self) -> Vec<Vec<u8>> {
        self.product.parametrization_matrix()
    }

    /// The parametrization matrix with columns arranged in original column
    /// order via the z bijection.
    pub fn parametrization_matrix_in_column_order(&self) -> Vec<Vec<u8>> {
        let zm = self.product.parametrization_matrix();
        let m = self.z_to_column.len();
        let mut inverse = vec![0usize; m];
        for (z, &col) in self.z_to_column.iter().enumerate() {
            inverse[col] = z;
        }
        zm.iter()
            .map(|row| inverse.iter().map(|&z| row[z]).collect())
            .collect()
    }

    /// Human-readable z-variable name `u,v,s` (1-based class and row, 0-based
    /// copy), for generator dumps.
    pub fn z_name(&self, z: usize) -> String {
        let column = self.z_to_column[z];
        let u = self.split.labeling.labels[column];
        let v = self.split.level_block_row(column);
        let s = self.split.uv_columns[u][v]
            .iter()
            .position(|&c| c == column)
            .expect("column listed in its class");
        format!("{},{},{}", u + 1, v + 1, s)
    }
}

/// Verifies that the fiber product of the level's compressions reproduces
/// the prefix model: rowspan equality of the reordered parametrization
/// matrix with the stacked `A^{1..level+1}`.
pub fn verify_tfp_equality(
    mat: &MultipartitionMatrix,
    report: &GripReport,
    level: usize,
) -> Result<bool, Error> {
    let instance = build_tfp_instance(mat, report, level)?;
    let product = FractionMatrix::from_int_rows(&instance.parametrization_matrix_in_column_order());
    let target = mat.stacked_fraction_matrix(level + 1);
    rowspan_equal(&product, &target)
}

/// Quad generators of the instance, each checked against the integer
/// kernel of the parametrization matrix.
pub fn quad_generators(instance: &TfpInstance) -> Vec<Binomial> {
    let rows = instance.parametrization_matrix();
    let quads = instance.product.quad_generators();
    for q in &quads {
        assert!(
            binomial_in_kernel(&rows, q),
            "quad outside the parametrization kernel"
        );
    }
    quads
}

/// Lifts a factor binomial through the instance's product.
pub fn lift_binomial(
    instance: &TfpInstance,
    side: Side,
    f: &Binomial,
) -> Result<Vec<Binomial>, Error> {
    instance.product.lift(side, f)
}

/// JSON dump of a generator family using `u,v,s` variable names.
pub fn generators_to_json(instance: &TfpInstance, generators: &[Binomial]) -> Value {
    let name = |z: usize| instance.z_name(z);
    Value::Array(generators.iter().map(|b| b.to_json(&name)).collect())
}
