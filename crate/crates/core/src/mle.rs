//! Closed-form rational MLEs for GRIP matrices, compressed and
//! de-duplicated variants, and independent MLE verification.
//!
//! For a GRIP matrix the maximum likelihood estimate of normalized data `d`
//! has coordinates
//!
//! ```text
//! p*_j = (1/c_j) * prod_l  alpha^l_{S(l,j)}(d) / sum_{rows in the floret of S(l,j)} alpha(d)
//! ```
//!
//! with the first block contributing the root floret (all of its rows, so
//! the level-1 denominator is the total mass). Verification is independent
//! of this formula: Birch's conditions `Ap = Ad` plus membership in the
//! toric model, certified through integer lattice relations. Both checks are exact.

use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::Error;
use crate::fraction::{check_normalized, check_positive, Fraction};
use crate::grip::{florets_by_level, FloretsByLevel, GripReport, LevelSplit};
use crate::ips::birch_residual_exact;
use crate::linalg::integer_kernel_basis;
use crate::matrix::MultipartitionMatrix;

/// One per-level factor of a closed-form MLE coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MleFactor {
    /// 0-based block.
    pub block: usize,
    /// 0-based selecting row of that block.
    pub row: usize,
    /// alpha . d of the selecting row.
    pub numerator: Fraction,
    /// Sum of alpha . d over the row's floret.
    pub denominator: Fraction,
}

/// A closed-form MLE with optional per-column factor breakdown.
#[derive(Clone, Debug)]
pub struct MleResult {
    pub p_star: Vec<Fraction>,
    /// Column weights c_j entering as 1/c_j.
    pub column_weights: Vec<u64>,
    /// Per-column factor lists, populated when explanation was requested.
    pub factors: Option<Vec<Vec<MleFactor>>>,
}

impl MleResult {
    /// JSON form: `p_star` as exact strings, factors when present. Keys
    /// serialize alphabetically; indices are 1-based.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("column_weights".into(), json!(self.column_weights));
        if let Some(factors) = &self.factors {
            let rendered: Vec<Value> = factors
                .iter()
                .map(|fs| {
                    Value::Array(
                        fs.iter()
                            .map(|f| {
                                json!({
                                    "block": f.block + 1,
                                    "denominator": f.denominator.to_string(),
                                    "numerator": f.numerator.to_string(),
                                    "ratio": (&f.numerator / &f.denominator).to_string(),
                                    "row": f.row + 1,
                                })
                            })
                            .collect(),
                    )
                })
                .collect();
            obj.insert("factors".into(), Value::Array(rendered));
        }
        obj.insert(
            "p_star".into(),
            Value::Array(
                self.p_star
                    .iter()
                    .map(|x| Value::String(x.to_string()))
                    .collect(),
            ),
        );
        Value::Object(obj)
    }
}

fn require_grip(report: &GripReport) -> Result<(), Error> {
    if report.overall {
        return Ok(());
    }
    let level = report
        .levels
        .iter()
        .find(|l| !l.passed())
        .map(|l| l.level)
        .unwrap_or(0);
    Err(Error::GripRequired { level })
}

/// Per-block row numerators `alpha . d` and per-floret denominator sums.
struct FactorTables {
    numerators: Vec<Vec<Fraction>>,
    floret_sums: Vec<Vec<Fraction>>,
    florets: FloretsByLevel,
}

fn factor_tables(
    mat: &MultipartitionMatrix,
    d: &[Fraction],
    report: &GripReport,
) -> Result<FactorTables, Error> {
    let florets = florets_by_level(mat, report)?;
    let mut numerators = Vec::with_capacity(mat.k());
    let mut floret_sums = Vec::with_capacity(mat.k());
    for l in 0..mat.k() {
        let rows = mat.block(l).n_rows();
        let nums: Vec<Fraction> = (0..rows).map(|i| mat.row_dot(l, i, d)).collect();
        let sums: Vec<Fraction> = florets.floret_rows[l]
            .iter()
            .map(|rows| rows.iter().map(|&i| nums[i].clone()).sum())
            .collect();
        numerators.push(nums);
        floret_sums.push(sums);
    }
    Ok(FactorTables {
        numerators,
        floret_sums,
        florets,
    })
}

/// Evaluates the closed-form MLE of a GRIP matrix exactly.
pub fn closed_form_mle(
    mat: &MultipartitionMatrix,
    d: &[Fraction],
    report: &GripReport,
    explain: bool,
) -> Result<MleResult, Error> {
    require_grip(report)?;
    if d.len() != mat.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "data length {} for {} columns",
            d.len(),
            mat.n_cols()
        )));
    }
    check_positive(d)?;
    check_normalized(d)?;
    let tables = factor_tables(mat, d, report)?;
    let weights = &report.column_weights;
    let mut p_star = Vec::with_capacity(mat.n_cols());
    let mut factors = explain.then(Vec::new);
    for j in 0..mat.n_cols() {
        let mut value = Fraction::one() / Fraction::from(weights[j]);
        let mut column_factors = explain.then(Vec::new);
        for l in 0..mat.k() {
            let i = mat.selector(l, j);
            let t = tables.florets.floret_of_row[l][i];
            let numerator = &tables.numerators[l][i];
            let denominator = &tables.floret_sums[l][t];
            value *= &(numerator / denominator);
            if let Some(cf) = column_factors.as_mut() {
                cf.push(MleFactor {
                    block: l,
                    row: i,
                    numerator: numerator.clone(),
                    denominator: denominator.clone(),
                });
            }
        }
        if let (Some(fs), Some(cf)) = (factors.as_mut(), column_factors) {
            fs.push(cf);
        }
        p_star.push(value);
    }
    Ok(MleResult {
        p_star,
        column_weights: weights.clone(),
        factors,
    })
}

/// Aggregates a data vector onto the columns of the compressed prefix at a
/// level split: entry (u, s') sums `d` over the copies it represents. The
/// result is indexed by (u, s') with u-major order and sums to the same
/// total as `d`.
pub fn compressed_data(
    mat: &MultipartitionMatrix,
    split: &LevelSplit,
    d: &[Fraction],
) -> Result<Vec<Fraction>, Error> {
    if d.len() != mat.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "data length {} for {} columns",
            d.len(),
            mat.n_cols()
        )));
    }
    let beta = split.labeling.beta;
    let mut out = Vec::new();
    for u in 0..beta {
        let floret = split.dec.floret_of_b_row[u];
        let x_u = split.omega.x[u];
        for s_prime in 0..x_u {
            let mut total = Fraction::zero();
            for &v in &split.dec.c_florets[floret] {
                let y_v = split.omega.y[v];
                let columns = &split.uv_columns[u][v];
                if columns.len() as u64 != x_u * y_v {
                    return Err(Error::IndexingUndefined(format!(
                        "class ({u}, {v}) has {} columns, expected {}",
                        columns.len(),
                        x_u * y_v
                    )));
                }
                for n in 0..y_v {
                    total += &d[columns[(s_prime * y_v + n) as usize]];
                }
            }
            out.push(total);
        }
    }
    Ok(out)
}

/// The MLE of the compressed data in the compressed prefix model: entry
/// (u, s') is `Y_u * p*_(u,0)(d)` where p* is the prefix MLE of the full
/// data. Verified internally against Birch's conditions on the compressed
/// matrix. The vector is returned unnormalized, as constructed.
pub fn compressed_mle(
    mat: &MultipartitionMatrix,
    split: &LevelSplit,
    d: &[Fraction],
) -> Result<Vec<Fraction>, Error> {
    let prefix = mat.prefix(split.level);
    let prefix_report = crate::grip::grip_check(&prefix);
    let prefix_mle = closed_form_mle(&prefix, d, &prefix_report, false)?;
    let mut out = Vec::new();
    for u in 0..split.labeling.beta {
        let rep = split.labeling.representatives[u];
        let coord = Fraction::from(split.omega.y_floret_sum[u]) * &prefix_mle.p_star[rep];
        for _ in 0..split.omega.x[u] {
            out.push(coord.clone());
        }
    }
    // Birch cross-check on the compressed matrix.
    let compressed = crate::grip::compression(&prefix, &split.omega.x)?;
    let d_tilde = compressed_data(mat, split, d)?;
    for l in 0..compressed.k() {
        for i in 0..compressed.block(l).n_rows() {
            let lhs = compressed.row_dot(l, i, &out);
            let rhs = compressed.row_dot(l, i, &d_tilde);
            assert_eq!(
                lhs, rhs,
                "compressed MLE must match compressed data marginals"
            );
        }
    }
    Ok(out)
}

/// The MLE of the de-duplicated model: pushes the per-row floret ratios of
/// the reduced data through the monomial map of the matrix without repeated
/// columns. No 1/c_j factor appears.
pub fn dedup_mle(
    mat: &MultipartitionMatrix,
    report: &GripReport,
    d_bar: &[Fraction],
) -> Result<Vec<Fraction>, Error> {
    require_grip(report)?;
    let (bar, _labeling) = mat.dedup();
    if d_bar.len() != bar.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "reduced data length {} for {} distinct columns",
            d_bar.len(),
            bar.n_cols()
        )));
    }
    check_positive(d_bar)?;
    check_normalized(d_bar)?;
    // The blocks (hence rows and florets) of the de-duplicated matrix are
    // those of the original; only column multiplicities changed.
    let florets = florets_by_level(mat, report)?;
    let mut t = Vec::with_capacity(bar.total_rows());
    for l in 0..bar.k() {
        let nums: Vec<Fraction> = (0..bar.block(l).n_rows())
            .map(|i| bar.row_dot(l, i, d_bar))
            .collect();
        let sums: Vec<Fraction> = florets.floret_rows[l]
            .iter()
            .map(|rows| rows.iter().map(|&i| nums[i].clone()).sum())
            .collect();
        for (i, num) in nums.iter().enumerate() {
            t.push(num / &sums[florets.floret_of_row[l][i]]);
        }
    }
    bar.monomial_map(&t)
}

/// Tests membership of a strictly positive point in the toric model of the
/// matrix: every integer kernel relation must balance exactly.
pub fn verify_model_point(mat: &MultipartitionMatrix, p: &[Fraction]) -> Result<bool, Error> {
    if p.len() != mat.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "point length {} for {} columns",
            p.len(),
            mat.n_cols()
        )));
    }
    check_positive(p)?;
    let stacked = mat.stacked_fraction_matrix(mat.k());
    for basis_vector in integer_kernel_basis(&stacked) {
        let mut lhs = Fraction::one();
        let mut rhs = Fraction::one();
        for (j, e) in basis_vector.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let exp = e.abs().to_i64().expect("desk-scale exponent");
            let power = p[j].pow(exp);
            if e.is_positive() {
                lhs *= &power;
            } else {
                rhs *= &power;
            }
        }
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Joint verdict certifying an MLE: Birch's marginal conditions and model
/// membership, both exact. Both true pins `p` as the unique MLE.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MleVerdict {
    pub birch_ok: bool,
    pub model_ok: bool,
}

impl MleVerdict {
    pub fn certified(&self) -> bool {
        self.birch_ok && self.model_ok
    }
}

/// Verifies a candidate MLE independently of how it was produced.
pub fn verify_mle(
    mat: &MultipartitionMatrix,
    p: &[Fraction],
    d: &[Fraction],
) -> Result<MleVerdict, Error> {
    check_positive(p)?;
    check_normalized(d)?;
    let birch_ok = birch_residual_exact(mat, p, d).is_zero();
    let model_ok = verify_model_point(mat, p)?;
    Ok(MleVerdict { birch_ok, model_ok })
}

/// Both sides of the final-block summation identity, per final-block row:
///
/// ```text
/// sum_{j in I^k_i} (1/c^{k-1}_j) prod_{l<k} alpha^l_{S(l,j)}(d)/floret_sum
///     = C^k_i * sum_{rows in the floret of i} alpha^k(d)
/// ```
///
/// For k = 1 the product is empty and the prefix weight is 1.
pub fn lemma_identity_sides(
    mat: &MultipartitionMatrix,
    d: &[Fraction],
    report: &GripReport,
) -> Result<Vec<(Fraction, Fraction)>, Error> {
    require_grip(report)?;
    let tables = factor_tables(mat, d, report)?;
    let k = mat.k();
    let prefix_weights: Option<&Vec<u64>> = (k >= 2).then(|| &report.prefix_weights[k - 2]);
    let last = k - 1;
    let mut sides = Vec::new();
    for i in 0..mat.block(last).n_rows() {
        let mut lhs = Fraction::zero();
        for j in mat.block(last).index_set(i) {
            let weight = prefix_weights.map_or(1, |w| w[j]);
            let mut term = Fraction::one() / Fraction::from(weight);
            for l in 0..last {
                let row = mat.selector(l, j);
                let t = tables.florets.floret_of_row[l][row];
                term *= &(&tables.numerators[l][row] / &tables.floret_sums[l][t]);
            }
            lhs += &term;
        }
        // For k = 1 the ratio is the index-set size (zero rows included);
        // for k >= 2 a GRIP matrix has no undefined final-block ratios.
        let ratio = report
            .ratios
            .get(last, i)
            .cloned()
            .expect("ratios are defined on GRIP matrices");
        let t = tables.florets.floret_of_row[last][i];
        let rhs = ratio * &tables.floret_sums[last][t];
        sides.push((lhs, rhs));
    }
    Ok(sides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grip::{grip_check, level_split};
    use crate::ips::{ips_run, ips_step_exact, IpsConfig};
    use crate::matrix::fixtures::*;

    fn frac(n: i64, d: i64) -> Fraction {
        Fraction::new(n, d)
    }

    fn rational_data(m: usize, salt: u64) -> Vec<Fraction> {
        let nums: Vec<i64> = (0..m)
            .map(|j| 1 + ((salt.wrapping_mul(37).wrapping_add(11 * j as u64)) % 89) as i64)
            .collect();
        let total: i64 = nums.iter().sum();
        nums.into_iter().map(|n| Fraction::new(n, total)).collect()
    }

    #[test]
    fn independence_closed_form() {
        let m = independence2x2();
        let report = grip_check(&m);
        let d = rational_data(4, 1);
        let result = closed_form_mle(&m, &d, &report, true).unwrap();
        let d1d2 = &d[0] + &d[1];
        let d1d3 = &d[0] + &d[2];
        assert_eq!(result.p_star[0], &d1d2 * &d1d3);
        let total: Fraction = result.p_star.iter().sum();
        assert!(total.is_one());
        // Factor breakdown carries the selecting rows.
        let factors = result.factors.unwrap();
        assert_eq!(factors[0][0].row, 0);
        assert_eq!(factors[0][1].numerator, d1d3);
        assert_eq!(factors[0][1].denominator, Fraction::one());
    }

    #[test]
    fn worked_example_closed_form() {
        let m = grip14();
        let report = grip_check(&m);
        let d = rational_data(14, 2);
        let result = closed_form_mle(&m, &d, &report, false).unwrap();
        let a11 = m.row_dot(0, 0, &d);
        let a12 = m.row_dot(0, 1, &d);
        let a31 = m.row_dot(2, 0, &d);
        let a34 = m.row_dot(2, 3, &d);
        assert_eq!(result.p_star[0], &a11 * &a31);
        assert_eq!(result.p_star[3], &(&a11 * &a34) * &frac(1, 2));
        assert_eq!(result.p_star[7], &a12 * &a31);
        assert_eq!(result.p_star[10], &(&a12 * &a34) * &frac(1, 2));
        let total: Fraction = result.p_star.iter().sum();
        assert!(total.is_one());
    }

    #[test]
    fn single_identity_block_returns_data() {
        let m = diffrep_identity();
        let report = grip_check(&m);
        let d = rational_data(3, 7);
        let result = closed_form_mle(&m, &d, &report, false).unwrap();
        assert_eq!(result.p_star, d);
    }

    #[test]
    fn closed_form_requires_grip() {
        let m = diffrep_a();
        let report = grip_check(&m);
        let d = rational_data(3, 7);
        assert!(matches!(
            closed_form_mle(&m, &d, &report, false),
            Err(Error::GripRequired { level: 1 })
        ));
    }

    #[test]
    fn closed_form_matches_full_cycle_ips_exactly() {
        let m = grip14();
        let report = grip_check(&m);
        for salt in 0..5 {
            let d = rational_data(14, salt);
            let mle = closed_form_mle(&m, &d, &report, false).unwrap();
            let ips = ips_run(&m, &d, &IpsConfig::default()).unwrap();
            assert_eq!(ips.final_p.as_exact().unwrap(), mle.p_star.as_slice());
        }
    }

    #[test]
    fn mid_cycle_states_are_prefix_mles() {
        let m = grip14();
        let d = rational_data(14, 13);
        let mut p = vec![frac(1, 14); 14];
        for l in 0..m.k() {
            ips_step_exact(&m, &mut p, &d, l).unwrap();
            let prefix = m.prefix(l + 1);
            let prefix_report = grip_check(&prefix);
            let prefix_mle = closed_form_mle(&prefix, &d, &prefix_report, false).unwrap();
            assert_eq!(p, prefix_mle.p_star, "prefix of length {} disagrees", l + 1);
        }
    }

    #[test]
    fn factorizes_through_monomial_map() {
        let m = grip14();
        let report = grip_check(&m);
        let d = rational_data(14, 5);
        let mle = closed_form_mle(&m, &d, &report, false).unwrap();
        let florets = florets_by_level(&m, &report).unwrap();
        let mut t = Vec::new();
        for l in 0..m.k() {
            for i in 0..m.block(l).n_rows() {
                let num = m.row_dot(l, i, &d);
                let den: Fraction = florets.floret_rows[l][florets.floret_of_row[l][i]]
                    .iter()
                    .map(|&r| m.row_dot(l, r, &d))
                    .sum();
                let ratio = report.ratios.get(l, i).unwrap().clone();
                t.push(&(&num / &den) / &ratio);
            }
        }
        assert_eq!(m.monomial_map(&t).unwrap(), mle.p_star);
    }

    #[test]
    fn compressed_data_aggregates_classes() {
        let m = grip14();
        let split = level_split(&m, 2).unwrap();
        let d = rational_data(14, 3);
        let d_tilde = compressed_data(&m, &split, &d).unwrap();
        // x = (1,2,1,2): compressed columns (u=0),(u=1,s'=0),(u=1,s'=1),(u=2),(u=3,0),(u=3,1).
        assert_eq!(d_tilde.len(), 6);
        let total: Fraction = d_tilde.iter().sum();
        assert!(total.is_one());
        // Class u=0 ({cols 1,2,3}, x=1) aggregates all its mass.
        assert_eq!(d_tilde[0], &(&d[0] + &d[1]) + &d[2]);
        // Class u=1 (cols 4..7, x=2, y=1): s'=0 takes columns 4 and 5
        // (classes (1,v4) first copy, (1,v5) first copy).
        assert_eq!(d_tilde[1], &d[3] + &d[4]);
        assert_eq!(d_tilde[2], &d[5] + &d[6]);
    }

    #[test]
    fn compressed_mle_scales_prefix_coordinates() {
        let m = grip14();
        let split = level_split(&m, 2).unwrap();
        let d = rational_data(14, 9);
        let q = compressed_mle(&m, &split, &d).unwrap();
        assert_eq!(q.len(), 6);
        let prefix = m.prefix(2);
        let prefix_mle = closed_form_mle(&prefix, &d, &grip_check(&prefix), false).unwrap();
        // Y = (3,2,3,2) per class; coordinates repeat x_u times.
        assert_eq!(q[0], Fraction::from(3u64) * &prefix_mle.p_star[0]);
        assert_eq!(q[1], Fraction::from(2u64) * &prefix_mle.p_star[3]);
        assert_eq!(q[1], q[2]);
    }

    #[test]
    fn identity_prefix_compression_returns_data() {
        // Two-block matrix whose first block is an identity: the level-1
        // compression is the identity and the compressed MLE is the
        // compressed data itself.
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
        let split = level_split(&m, 1).unwrap();
        let d = rational_data(4, 4);
        let d_tilde = compressed_data(&m, &split, &d).unwrap();
        let q = compressed_mle(&m, &split, &d).unwrap();
        assert_eq!(d_tilde, d);
        assert_eq!(q, d);
    }

    #[test]
    fn dedup_mle_agrees_with_closed_form_on_reduced_matrix() {
        let m = grip14();
        let report = grip_check(&m);
        let d_bar = rational_data(10, 6);
        let via_florets = dedup_mle(&m, &report, &d_bar).unwrap();
        let (bar, _) = m.dedup();
        let bar_report = grip_check(&bar);
        assert!(bar_report.overall);
        let direct = closed_form_mle(&bar, &d_bar, &bar_report, false).unwrap();
        assert_eq!(via_florets, direct.p_star);
        let verdict = verify_mle(&bar, &via_florets, &d_bar).unwrap();
        assert!(verdict.certified());
    }

    #[test]
    fn dedup_mle_on_duplicate_free_matrix_is_closed_form() {
        let m = independence2x2();
        let report = grip_check(&m);
        let d = rational_data(4, 8);
        let a = dedup_mle(&m, &report, &d).unwrap();
        let b = closed_form_mle(&m, &d, &report, false).unwrap();
        assert_eq!(a, b.p_star);
    }

    #[test]
    fn dedup_consistency_with_aggregated_data() {
        // Summing the full MLE over duplicated columns reproduces the
        // de-duplicated MLE of the aggregated data.
        let m = grip14();
        let report = grip_check(&m);
        let d = rational_data(14, 10);
        let full = closed_form_mle(&m, &d, &report, false).unwrap();
        let (bar, labeling) = m.dedup();
        let mut d_bar = vec![Fraction::zero(); bar.n_cols()];
        for (j, &class) in labeling.labels.iter().enumerate() {
            d_bar[class] += &d[j];
        }
        let reduced = dedup_mle(&m, &report, &d_bar).unwrap();
        for (class, cols) in labeling.class_columns.iter().enumerate() {
            let total: Fraction = cols.iter().map(|&j| full.p_star[j].clone()).sum();
            assert_eq!(total, reduced[class]);
            // Each duplicated coordinate carries an equal share.
            let share = &reduced[class] / &Fraction::from(cols.len() as u64);
            for &j in cols {
                assert_eq!(full.p_star[j], share);
            }
        }
    }

    #[test]
    fn model_point_checks() {
        let m = independence2x2();
        // Parametrized points satisfy all kernel relations.
        let t = vec![frac(1, 3), frac(2, 3), frac(2, 5), frac(3, 5)];
        let point = m.monomial_map(&t).unwrap();
        assert!(verify_model_point(&m, &point).unwrap());
        let uniform = vec![frac(1, 4); 4];
        assert!(verify_model_point(&m, &uniform).unwrap());
        // p1 p4 != p2 p3 fails the single kernel relation.
        let off = vec![frac(1, 2), frac(1, 6), frac(1, 6), frac(1, 6)];
        assert!(!verify_model_point(&m, &off).unwrap());
    }

    #[test]
    fn verify_mle_verdicts() {
        let m = independence2x2();
        let report = grip_check(&m);
        let d = rational_data(4, 12);
        let mle = closed_form_mle(&m, &d, &report, false).unwrap();
        assert!(verify_mle(&m, &mle.p_star, &d).unwrap().certified());
        // Uniform is in the model but misses the marginals.
        let uniform = vec![frac(1, 4); 4];
        let verdict = verify_mle(&m, &uniform, &d).unwrap();
        assert!(!verdict.birch_ok);
        assert!(verdict.model_ok);
        // p = d on the full simplex model certifies immediately.
        let id = diffrep_identity();
        let d3 = rational_data(3, 2);
        assert!(verify_mle(&id, &d3, &d3).unwrap().certified());
    }

    #[test]
    fn factorization_holds_across_generated_trees() {
        use crate::staged_tree::{generate_balanced_stratified, matrix_from_tree, GeneratorConfig};
        for seed in 0..15u64 {
            let config = GeneratorConfig {
                levels: 2 + (seed as usize % 3),
                max_branching: 3,
                stage_merge_prob: 0.5,
            };
            let tree = generate_balanced_stratified(seed, &config);
            let m = matrix_from_tree(&tree).unwrap();
            let report = grip_check(&m);
            let d = rational_data(m.n_cols(), seed);
            let mle = closed_form_mle(&m, &d, &report, false).unwrap();
            let florets = florets_by_level(&m, &report).unwrap();
            let mut t = Vec::new();
            for l in 0..m.k() {
                for i in 0..m.block(l).n_rows() {
                    let num = m.row_dot(l, i, &d);
                    let den: Fraction = florets.floret_rows[l][florets.floret_of_row[l][i]]
                        .iter()
                        .map(|&r| m.row_dot(l, r, &d))
                        .sum();
                    let ratio = report.ratios.get(l, i).unwrap().clone();
                    t.push(&(&num / &den) / &ratio);
                }
            }
            assert_eq!(m.monomial_map(&t).unwrap(), mle.p_star, "seed {seed}");
        }
    }

    #[test]
    fn lemma_identity_on_worked_example() {
        let m = grip14();
        let report = grip_check(&m);
        for salt in 0..5 {
            let d = rational_data(14, salt);
            for (lhs, rhs) in lemma_identity_sides(&m, &d, &report).unwrap() {
                assert_eq!(lhs, rhs);
            }
        }
        // Single-block case: the empty product reduces both sides to |I|.
        let id = diffrep_identity();
        let report = grip_check(&id);
        let d = rational_data(3, 1);
        for (lhs, rhs) in lemma_identity_sides(&id, &d, &report).unwrap() {
            assert_eq!(lhs, rhs);
        }
        // A zero row in a single block contributes an empty sum on both
        // sides (its index-set size is zero).
        let with_zero_row = MultipartitionMatrix::new(vec![vec![vec![1, 1], vec![0, 0]]]).unwrap();
        let report = grip_check(&with_zero_row);
        assert!(report.overall);
        let d = rational_data(2, 4);
        let sides = lemma_identity_sides(&with_zero_row, &d, &report).unwrap();
        assert_eq!(sides[1], (Fraction::zero(), Fraction::zero()));
        assert_eq!(sides[0].0, sides[0].1);
    }
}
