//! Exact rational linear algebra: elimination, rank, rowspan membership and
//! integer kernel bases.
//!
//! Pivoting is deterministic: the first nonzero entry in column order wins.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::fraction::Fraction;

/// A dense matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionMatrix {
    rows: Vec<Vec<Fraction>>,
    cols: usize,
}

impl FractionMatrix {
    /// Builds from rows, which must share a length.
    pub fn from_rows(rows: Vec<Vec<Fraction>>) -> Result<Self, Error> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has length {} but expected {cols}",
                rows[bad].len()
            )));
        }
        Ok(FractionMatrix { rows, cols })
    }

    /// Builds from 0/1 (or small integer) rows.
    pub fn from_int_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&e| Fraction::from_int(e as i64)).collect())
            .collect();
        FractionMatrix { rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[Vec<Fraction>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Fraction] {
        &self.rows[i]
    }

    /// Stacks `other` below `self`.
    pub fn stack(&self, other: &FractionMatrix) -> Result<FractionMatrix, Error> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} columns onto {}",
                other.cols, self.cols
            )));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(FractionMatrix {
            rows,
            cols: self.cols,
        })
    }

    /// Transpose.
    pub fn transpose(&self) -> FractionMatrix {
        let mut rows = vec![Vec::with_capacity(self.n_rows()); self.cols];
        for r in &self.rows {
            for (j, x) in r.iter().enumerate() {
                rows[j].push(x.clone());
            }
        }
        FractionMatrix {
            rows,
            cols: self.n_rows(),
        }
    }

    /// Matrix-vector product.
    pub fn mul_vector(&self, v: &[Fraction]) -> Result<Vec<Fraction>, Error> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} but matrix has {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Reduced row echelon form; returns (rref, pivot columns).
    pub fn rref(&self) -> (FractionMatrix, Vec<usize>) {
        let mut m = self.rows.clone();
        let n_rows = m.len();
        let mut pivots = Vec::new();
        let mut pivot_row = 0usize;
        for col in 0..self.cols {
            if pivot_row >= n_rows {
                break;
            }
            let Some(sel) = (pivot_row..n_rows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(pivot_row, sel);
            let inv = m[pivot_row][col].recip();
            for x in m[pivot_row].iter_mut() {
                if !x.is_zero() {
                    *x *= &inv;
                }
            }
            for r in 0..n_rows {
                if r != pivot_row && !m[r][col].is_zero() {
                    let factor = m[r][col].clone();
                    for c in col..self.cols {
                        if !m[pivot_row][c].is_zero() {
                            let delta = &factor * &m[pivot_row][c];
                            m[r][c] = &m[r][c] - &delta;
                        }
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (
            FractionMatrix {
                rows: m,
                cols: self.cols,
            },
            pivots,
        )
    }

    /// Exact rank.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }
}

/// Solves `A x = b` exactly. Returns one solution when the system is
/// consistent, `None` otherwise.
pub fn solve(a: &FractionMatrix, b: &[Fraction]) -> Result<Option<Vec<Fraction>>, Error> {
    if b.len() != a.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} but matrix has {} rows",
            b.len(),
            a.n_rows()
        )));
    }
    let mut aug_rows: Vec<Vec<Fraction>> = a.rows.clone();
    for (row, rhs) in aug_rows.iter_mut().zip(b) {
        row.push(rhs.clone());
    }
    let aug = FractionMatrix {
        rows: aug_rows,
        cols: a.cols + 1,
    };
    let (r, pivots) = aug.rref();
    // Inconsistent iff the augmented column is a pivot.
    if pivots.contains(&a.cols) {
        return Ok(None);
    }
    let mut x = vec![Fraction::zero(); a.cols];
    for (row, &col) in pivots.iter().enumerate() {
        x[col] = r.rows[row][a.cols].clone();
    }
    Ok(Some(x))
}

/// Tests whether `v` lies in the rowspan of `matrix`; on success returns the
/// exact certificate coefficients (one per row of `matrix`).
pub fn rowspan_contains(
    matrix: &FractionMatrix,
    v: &[Fraction],
) -> Result<Option<Vec<Fraction>>, Error> {
    if v.len() != matrix.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} but matrix has {} columns",
            v.len(),
            matrix.n_cols()
        )));
    }
    solve(&matrix.transpose(), v)
}

/// Tests rowspan equality of two matrices with the same column count.
/// This is the toric-ideal-equality oracle used throughout.
pub fn rowspan_equal(m1: &FractionMatrix, m2: &FractionMatrix) -> Result<bool, Error> {
    if m1.n_cols() != m2.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "rowspan comparison of {} vs {} columns",
            m1.n_cols(),
            m2.n_cols()
        )));
    }
    let r1 = m1.rank();
    let r2 = m2.rank();
    if r1 != r2 {
        return Ok(false);
    }
    Ok(m1.stack(m2)?.rank() == r1)
}

/// An exact integer basis of the rational kernel of `matrix`. Each vector has
/// coprime entries, with the first nonzero entry positive; the number of
/// vectors equals `cols - rank`.
pub fn integer_kernel_basis(matrix: &FractionMatrix) -> Vec<Vec<BigInt>> {
    let (r, pivots) = matrix.rref();
    let cols = matrix.n_cols();
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut vec_q = vec![Fraction::zero(); cols];
        vec_q[free] = Fraction::one();
        for (row, &pc) in pivots.iter().enumerate() {
            let coeff = &r.rows()[row][free];
            if !coeff.is_zero() {
                vec_q[pc] = -coeff;
            }
        }
        basis.push(clear_denominators(&vec_q));
    }
    basis
}

/// Scales a rational vector to coprime integers with positive leading entry.
fn clear_denominators(v: &[Fraction]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        if !x.is_zero() {
            lcm = lcm.lcm(x.denom());
        }
    }
    let mut ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut gcd = BigInt::zero();
    for x in &ints {
        gcd = gcd.gcd(x);
    }
    if !gcd.is_zero() && !gcd.is_one() {
        for x in ints.iter_mut() {
            *x = &*x / &gcd;
        }
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in ints.iter_mut() {
                *x = -&*x;
            }
        }
    }
    ints
}

/// Multiplies `matrix * b` for an integer vector, exactly.
pub fn mul_int_vector(matrix: &FractionMatrix, b: &[BigInt]) -> Result<Vec<Fraction>, Error> {
    let v: Vec<Fraction> = b
        .iter()
        .map(|x| Fraction::from_big(x.clone(), BigInt::one()))
        .collect();
    matrix.mul_vector(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: i64, d: i64) -> Fraction {
        Fraction::new(n, d)
    }

    fn int_matrix(rows: &[&[u8]]) -> FractionMatrix {
        FractionMatrix::from_int_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn rank_of_independence_matrix() {
        let a = int_matrix(&[&[1, 1, 0, 0], &[0, 0, 1, 1], &[1, 0, 1, 0], &[0, 1, 0, 1]]);
        assert_eq!(a.rank(), 3);
    }

    #[test]
    fn rowspan_contains_all_ones_in_partition_block() {
        let block = int_matrix(&[&[1, 1, 0, 0], &[0, 0, 1, 1]]);
        let ones = vec![Fraction::one(); 4];
        let cert = rowspan_contains(&block, &ones).unwrap().unwrap();
        assert_eq!(cert, vec![Fraction::one(), Fraction::one()]);
    }

    #[test]
    fn rowspan_contains_rejects_unit_vector() {
        let block = int_matrix(&[&[1, 1, 0, 0], &[0, 0, 1, 1]]);
        let e1 = vec![
            Fraction::one(),
            Fraction::zero(),
            Fraction::zero(),
            Fraction::zero(),
        ];
        assert!(rowspan_contains(&block, &e1).unwrap().is_none());
    }

    #[test]
    fn rowspan_equal_under_row_permutation_and_duplication() {
        let m = int_matrix(&[&[1, 0, 1], &[0, 1, 1]]);
        let m2 = int_matrix(&[&[0, 1, 1], &[1, 0, 1], &[1, 0, 1]]);
        assert!(rowspan_equal(&m, &m2).unwrap());
        let id = int_matrix(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert!(!rowspan_equal(&m, &id).unwrap());
    }

    #[test]
    fn independence_kernel_is_one_dimensional() {
        let a = int_matrix(&[&[1, 1, 0, 0], &[0, 0, 1, 1], &[1, 0, 1, 0], &[0, 1, 0, 1]]);
        let basis = integer_kernel_basis(&a);
        assert_eq!(basis.len(), 1);
        let b = &basis[0];
        // The kernel is spanned by +-(1, -1, -1, 1); leading entry positive.
        assert_eq!(
            b,
            &vec![
                BigInt::from(1),
                BigInt::from(-1),
                BigInt::from(-1),
                BigInt::from(1)
            ]
        );
        let product = mul_int_vector(&a, b).unwrap();
        assert!(product.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn identity_kernel_is_empty() {
        let id = int_matrix(&[&[1, 0], &[0, 1]]);
        assert!(integer_kernel_basis(&id).is_empty());
    }

    #[test]
    fn kernel_of_matrix_with_equal_columns_spans_difference() {
        let m = int_matrix(&[&[1, 1, 1], &[0, 0, 1]]);
        // Columns 0 and 1 coincide, so e_0 - e_1 is in the kernel.
        let basis = integer_kernel_basis(&m);
        assert_eq!(basis.len(), 1);
        assert_eq!(
            basis[0],
            vec![BigInt::from(1), BigInt::from(-1), BigInt::from(0)]
        );
    }

    #[test]
    fn solve_reports_inconsistency() {
        let a = int_matrix(&[&[1, 1], &[1, 1]]);
        let b = vec![frac(1, 1), frac(2, 1)];
        assert!(solve(&a, &b).unwrap().is_none());
        let b2 = vec![frac(3, 2), frac(3, 2)];
        let x = solve(&a, &b2).unwrap().unwrap();
        assert_eq!(&x[0] + &x[1], frac(3, 2));
    }

    #[test]
    fn kernel_count_matches_rank_deficiency() {
        let m = int_matrix(&[&[1, 1, 1, 1], &[1, 1, 0, 0]]);
        let basis = integer_kernel_basis(&m);
        assert_eq!(basis.len(), 4 - m.rank());
        for b in &basis {
            assert!(mul_int_vector(&m, b).unwrap().iter().all(|x| x.is_zero()));
        }
    }
}
