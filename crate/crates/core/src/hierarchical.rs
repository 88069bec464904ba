//! Hierarchical models over simplicial complexes: the block matrix of a
//! facet ordering, the running intersection property (RIP), exhaustive RIP
//! order search, and decomposability.
//!
//! Columns of the model matrix are the joint states of all variables in
//! lexicographic order (vertex 1 most significant); the block of a facet F
//! has one row per joint state of F, marking the columns that restrict to
//! it. Binary variables by default, arbitrary finite state sizes supported.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::matrix::MultipartitionMatrix;

/// Exhaustive-search bound on the facet count.
pub const FACET_SEARCH_BOUND: usize = 8;

/// A simplicial complex given by its facets over ground set `{1, .., ground}`,
/// with one state-space size per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    ground: usize,
    facets: Vec<BTreeSet<usize>>,
    state_sizes: Vec<usize>,
}

impl SimplicialComplex {
    /// Validates facets: nonempty, inclusion-maximal, vertices within the
    /// ground set, union covering it. `state_sizes` is per vertex; `None`
    /// means binary.
    pub fn new(
        ground: usize,
        facets: Vec<Vec<usize>>,
        state_sizes: Option<Vec<usize>>,
    ) -> Result<Self, Error> {
        if ground == 0 || facets.is_empty() {
            return Err(Error::Parse(
                "complex needs a nonempty ground set and facets".into(),
            ));
        }
        let facets: Vec<BTreeSet<usize>> = facets
            .into_iter()
            .map(|f| f.into_iter().collect())
            .collect();
        for f in &facets {
            if f.is_empty() {
                return Err(Error::Parse("empty facet".into()));
            }
            if f.iter().any(|&v| v == 0 || v > ground) {
                return Err(Error::Parse(format!(
                    "facet {f:?} leaves the ground set [{ground}]"
                )));
            }
        }
        for (a, fa) in facets.iter().enumerate() {
            for (b, fb) in facets.iter().enumerate() {
                if a != b && fa.is_subset(fb) {
                    return Err(Error::Parse(format!(
                        "facet {fa:?} is contained in {fb:?}; facets must be inclusion-maximal"
                    )));
                }
            }
        }
        let union: BTreeSet<usize> = facets.iter().flatten().copied().collect();
        if union.len() != ground {
            return Err(Error::Parse(format!(
                "facets cover {} of {ground} vertices",
                union.len()
            )));
        }
        let state_sizes = state_sizes.unwrap_or_else(|| vec![2; ground]);
        if state_sizes.len() != ground {
            return Err(Error::Parse(format!(
                "{} state sizes for {ground} vertices",
                state_sizes.len()
            )));
        }
        if state_sizes.contains(&0) {
            return Err(Error::Parse("state sizes must be positive".into()));
        }
        Ok(SimplicialComplex {
            ground,
            facets,
            state_sizes,
        })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn facets(&self) -> &[BTreeSet<usize>] {
        &self.facets
    }

    pub fn state_sizes(&self) -> &[usize] {
        &self.state_sizes
    }

    fn check_order(&self, order: &[usize]) -> Result<(), Error> {
        let mut seen = vec![false; self.n_facets()];
        if order.len() != self.n_facets() {
            return Err(Error::InvalidFacetOrder(format!(
                "{} entries for {} facets",
                order.len(),
                self.n_facets()
            )));
        }
        for &i in order {
            if i >= self.n_facets() || seen[i] {
                return Err(Error::InvalidFacetOrder(format!(
                    "bad or repeated index {i}"
                )));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Builds the multipartition matrix of the complex under the given facet
/// ordering: one block per facet, columns indexed by joint states of all
/// variables in lexicographic order with vertex 1 most significant.
pub fn matrix_from_complex(
    cx: &SimplicialComplex,
    facet_order: &[usize],
) -> Result<MultipartitionMatrix, Error> {
    cx.check_order(facet_order)?;
    let n = cx.ground;
    let m: usize = cx.state_sizes.iter().product();
    // Place values of each vertex in the mixed-radix expansion.
    let mut stride = vec![1usize; n];
    for v in (0..n - 1).rev() {
        stride[v] = stride[v + 1] * cx.state_sizes[v + 1];
    }
    let mut blocks = Vec::with_capacity(cx.n_facets());
    for &fi in facet_order {
        let facet: Vec<usize> = cx.facets[fi].iter().copied().collect();
        let mut fstride = vec![1usize; facet.len()];
        for a in (0..facet.len().saturating_sub(1)).rev() {
            fstride[a] = fstride[a + 1] * cx.state_sizes[facet[a + 1] - 1];
        }
        let rows_count: usize = facet.iter().map(|&v| cx.state_sizes[v - 1]).product();
        let mut rows = vec![vec![0u8; m]; rows_count];
        for col in 0..m {
            let mut row = 0usize;
            for (a, &v) in facet.iter().enumerate() {
                let state = (col / stride[v - 1]) % cx.state_sizes[v - 1];
                row += state * fstride[a];
            }
            rows[row][col] = 1;
        }
        blocks.push(rows);
    }
    MultipartitionMatrix::new(blocks)
}

/// Why a facet ordering fails the running intersection property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RipViolation {
    /// 1-based position r: the prefix union meets facet r+1 badly.
    pub position: usize,
    /// The offending intersection (prefix union with the next facet).
    pub intersection: Vec<usize>,
}

/// Checks the running intersection property of an ordering: for each r, the
/// intersection of the first r facets' union with the next facet must equal
/// a single earlier facet's intersection with it.
pub fn rip_check(
    cx: &SimplicialComplex,
    facet_order: &[usize],
) -> Result<Result<(), RipViolation>, Error> {
    cx.check_order(facet_order)?;
    let mut union: BTreeSet<usize> = BTreeSet::new();
    for (pos, &fi) in facet_order.iter().enumerate() {
        if pos > 0 {
            let next = &cx.facets[fi];
            let inter: BTreeSet<usize> = union.intersection(next).copied().collect();
            let witnessed = facet_order[..pos].iter().any(|&prev| {
                cx.facets[prev]
                    .intersection(next)
                    .copied()
                    .collect::<BTreeSet<_>>()
                    == inter
            });
            if !witnessed {
                return Ok(Err(RipViolation {
                    position: pos,
                    intersection: inter.into_iter().collect(),
                }));
            }
        }
        union.extend(cx.facets[fi].iter().copied());
    }
    Ok(Ok(()))
}

/// Exhaustive search for a RIP ordering, in lexicographic order over facet
/// permutations; `None` certifies that no ordering satisfies the RIP.
pub fn rip_order_search(cx: &SimplicialComplex) -> Result<Option<Vec<usize>>, Error> {
    let s = cx.n_facets();
    if s > FACET_SEARCH_BOUND {
        return Err(Error::FacetCountTooLarge {
            count: s,
            bound: FACET_SEARCH_BOUND,
        });
    }
    let mut perm: Vec<usize> = (0..s).collect();
    loop {
        if rip_check(cx, &perm)?.is_ok() {
            return Ok(Some(perm));
        }
        if !next_permutation(&mut perm) {
            return Ok(None);
        }
    }
}

fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let Some(i) = (0..perm.len() - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
        return false;
    };
    let j = (i + 1..perm.len())
        .rev()
        .find(|&j| perm[j] > perm[i])
        .expect("successor exists");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

/// Decomposability by the recursive split definition: a single facet, or a
/// partition of the facets into two decomposable halves whose vertex
/// unions intersect in a single facet-facet intersection.
pub fn is_decomposable(cx: &SimplicialComplex) -> Result<bool, Error> {
    let s = cx.n_facets();
    if s > FACET_SEARCH_BOUND {
        return Err(Error::FacetCountTooLarge {
            count: s,
            bound: FACET_SEARCH_BOUND,
        });
    }
    let mut memo = std::collections::HashMap::new();
    let full: u32 = (1u32 << s) - 1;
    Ok(decomposable_mask(cx, full, &mut memo))
}

fn decomposable_mask(
    cx: &SimplicialComplex,
    mask: u32,
    memo: &mut std::collections::HashMap<u32, bool>,
) -> bool {
    if mask.count_ones() <= 1 {
        return true;
    }
    if let Some(&hit) = memo.get(&mask) {
        return hit;
    }
    let members: Vec<usize> = (0..cx.n_facets())
        .filter(|&i| mask & (1 << i) != 0)
        .collect();
    let anchor = members[0];
    let rest: Vec<usize> = members[1..].to_vec();
    let mut result = false;
    // Enumerate splits with the anchor fixed on one side.
    'split: for bits in 0..(1u32 << rest.len()) {
        let mut side1: u32 = 1 << anchor;
        for (pos, &f) in rest.iter().enumerate() {
            if bits & (1 << pos) != 0 {
                side1 |= 1 << f;
            }
        }
        let side2 = mask & !side1;
        if side2 == 0 {
            continue;
        }
        let union = |m: u32| -> BTreeSet<usize> {
            (0..cx.n_facets())
                .filter(|&i| m & (1 << i) != 0)
                .flat_map(|i| cx.facets()[i].iter().copied())
                .collect()
        };
        let u1 = union(side1);
        let u2 = union(side2);
        let inter: BTreeSet<usize> = u1.intersection(&u2).copied().collect();
        let mut witnessed = false;
        'pairs: for &f1 in &members {
            if side1 & (1 << f1) == 0 {
                continue;
            }
            for &f2 in &members {
                if side2 & (1 << f2) == 0 {
                    continue;
                }
                let pair: BTreeSet<usize> = cx.facets()[f1]
                    .intersection(&cx.facets()[f2])
                    .copied()
                    .collect();
                if pair == inter {
                    witnessed = true;
                    break 'pairs;
                }
            }
        }
        if witnessed && decomposable_mask(cx, side1, memo) && decomposable_mask(cx, side2, memo) {
            result = true;
            break 'split;
        }
    }
    memo.insert(mask, result);
    result
}

/// Parses the complex text format: one facet per line of space-separated
/// vertex numbers; optional `states: n1 n2 ..` header; `#` comments.
pub fn parse_complex_text(text: &str) -> Result<SimplicialComplex, Error> {
    let mut facets: Vec<Vec<usize>> = Vec::new();
    let mut states: Option<Vec<usize>> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("states:") {
            let sizes: Result<Vec<usize>, _> = rest
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect();
            states = Some(sizes.map_err(|_| Error::Parse(format!("bad states line {line:?}")))?);
            continue;
        }
        let verts: Result<Vec<usize>, _> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect();
        facets.push(verts.map_err(|_| Error::Parse(format!("bad facet line {line:?}")))?);
    }
    if facets.is_empty() {
        return Err(Error::Parse("no facets found".into()));
    }
    let ground = facets
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0)
        .max(states.as_ref().map_or(0, |s| s.len()));
    SimplicialComplex::new(ground, facets, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grip::grip_check;
    use crate::matrix::fixtures::independence2x2;
    use crate::matrix::validate_blocks;

    fn two_indep() -> SimplicialComplex {
        SimplicialComplex::new(2, vec![vec![1], vec![2]], None).unwrap()
    }

    fn chain_35() -> SimplicialComplex {
        SimplicialComplex::new(5, vec![vec![1, 2, 3], vec![3, 4, 5]], None).unwrap()
    }

    fn triangle() -> SimplicialComplex {
        SimplicialComplex::new(3, vec![vec![1, 2], vec![1, 3], vec![2, 3]], None).unwrap()
    }

    #[test]
    fn independence_complex_gives_independence_matrix() {
        let m = matrix_from_complex(&two_indep(), &[0, 1]).unwrap();
        assert_eq!(m, independence2x2());
    }

    #[test]
    fn single_facet_binary_is_identity() {
        let cx = SimplicialComplex::new(1, vec![vec![1]], None).unwrap();
        let m = matrix_from_complex(&cx, &[0]).unwrap();
        assert_eq!(m.k(), 1);
        assert_eq!(m.n_cols(), 2);
        assert_eq!(m.block(0).rows(), &[vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn triangle_matrix_validates() {
        let m = matrix_from_complex(&triangle(), &[0, 1, 2]).unwrap();
        assert_eq!(m.n_cols(), 8);
        assert_eq!(m.total_rows(), 12);
        let blocks: Vec<Vec<Vec<u8>>> = m.blocks().iter().map(|b| b.rows().to_vec()).collect();
        assert!(validate_blocks(&blocks).ok());
    }

    #[test]
    fn block_row_counts_scale_with_state_sizes() {
        let cx =
            SimplicialComplex::new(3, vec![vec![1, 2], vec![2, 3]], Some(vec![3, 2, 2])).unwrap();
        let m = matrix_from_complex(&cx, &[0, 1]).unwrap();
        assert_eq!(m.n_cols(), 12);
        assert_eq!(m.block(0).n_rows(), 6);
        assert_eq!(m.block(1).n_rows(), 4);
    }

    #[test]
    fn rip_holds_for_chain_in_identity_order() {
        assert!(rip_check(&chain_35(), &[0, 1]).unwrap().is_ok());
        assert!(rip_check(&chain_35(), &[1, 0]).unwrap().is_ok());
        // Single facet: vacuous.
        let single = SimplicialComplex::new(2, vec![vec![1, 2]], None).unwrap();
        assert!(rip_check(&single, &[0]).unwrap().is_ok());
    }

    #[test]
    fn rip_fails_for_every_triangle_order() {
        let cx = triangle();
        let mut perm = vec![0usize, 1, 2];
        let mut orders = 0;
        loop {
            let outcome = rip_check(&cx, &perm).unwrap();
            let violation = outcome.unwrap_err();
            assert_eq!(violation.position, 2);
            assert_eq!(violation.intersection.len(), 2);
            orders += 1;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        assert_eq!(orders, 6);
    }

    #[test]
    fn rip_order_search_outcomes() {
        assert_eq!(rip_order_search(&chain_35()).unwrap(), Some(vec![0, 1]));
        assert_eq!(rip_order_search(&triangle()).unwrap(), None);
        let single = SimplicialComplex::new(3, vec![vec![1, 2, 3]], None).unwrap();
        assert_eq!(rip_order_search(&single).unwrap(), Some(vec![0]));
    }

    #[test]
    fn decomposability_verdicts() {
        assert!(is_decomposable(&chain_35()).unwrap());
        assert!(!is_decomposable(&triangle()).unwrap());
        let single = SimplicialComplex::new(2, vec![vec![1, 2]], None).unwrap();
        assert!(is_decomposable(&single).unwrap());
        assert!(is_decomposable(&two_indep()).unwrap());
    }

    #[test]
    fn decomposable_iff_rip_order_exists_on_small_complexes() {
        let cases = vec![
            SimplicialComplex::new(3, vec![vec![1, 2], vec![2, 3]], None).unwrap(),
            SimplicialComplex::new(4, vec![vec![1, 2], vec![3, 4]], None).unwrap(),
            SimplicialComplex::new(4, vec![vec![1, 2], vec![2, 3], vec![3, 4]], None).unwrap(),
            SimplicialComplex::new(
                4,
                vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 1]],
                None,
            )
            .unwrap(),
            triangle(),
            chain_35(),
            SimplicialComplex::new(4, vec![vec![1, 2, 3], vec![2, 3, 4]], None).unwrap(),
            SimplicialComplex::new(
                4,
                vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3]],
                None,
            )
            .unwrap(),
        ];
        for cx in cases {
            let rip = rip_order_search(&cx).unwrap().is_some();
            let dec = is_decomposable(&cx).unwrap();
            assert_eq!(rip, dec, "complex {:?}", cx.facets());
        }
    }

    #[test]
    fn rip_ordered_chain_matrix_satisfies_grip() {
        let order = rip_order_search(&chain_35()).unwrap().unwrap();
        let m = matrix_from_complex(&chain_35(), &order).unwrap();
        assert!(grip_check(&m).overall);
    }

    #[test]
    fn triangle_matrix_fails_grip() {
        let m = matrix_from_complex(&triangle(), &[0, 1, 2]).unwrap();
        assert!(!grip_check(&m).overall);
    }

    #[test]
    fn invalid_orders_and_inputs_rejected() {
        assert!(matches!(
            matrix_from_complex(&chain_35(), &[0, 0]),
            Err(Error::InvalidFacetOrder(_))
        ));
        assert!(matches!(
            matrix_from_complex(&chain_35(), &[0]),
            Err(Error::InvalidFacetOrder(_))
        ));
        // Non-maximal facet.
        assert!(SimplicialComplex::new(2, vec![vec![1, 2], vec![1]], None).is_err());
        // Uncovered vertex.
        assert!(SimplicialComplex::new(3, vec![vec![1, 2]], None).is_err());
        // Search bound.
        let many: Vec<Vec<usize>> = (1..=9).map(|v| vec![v, 10]).collect();
        let cx = SimplicialComplex::new(10, many, None).unwrap();
        assert!(matches!(
            rip_order_search(&cx),
            Err(Error::FacetCountTooLarge { count: 9, bound: 8 })
        ));
    }

    #[test]
    fn complex_text_round_trip() {
        let cx = parse_complex_text("# chain\n1 2 3\n3 4 5\n").unwrap();
        assert_eq!(cx, chain_35());
        let with_states = parse_complex_text("states: 2 3\n1 2\n").unwrap();
        assert_eq!(with_states.state_sizes(), &[2, 3]);
        assert!(parse_complex_text("# nothing\n").is_err());
        assert!(parse_complex_text("1 x\n").is_err());
    }
}
