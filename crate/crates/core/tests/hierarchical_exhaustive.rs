//! Exhaustive checks over all simplicial complexes on up to four vertices:
//! every RIP ordering yields a GRIP matrix, decomposability coincides with
//! the existence of a RIP ordering, and RIP-ordered models converge in one
//! exact cycle. One ternary-state case rides along.

mod common;

use common::{rational_data, TestRng};

use partition_mle::grip::grip_check;
use partition_mle::hierarchical::{
    is_decomposable, matrix_from_complex, rip_check, rip_order_search, SimplicialComplex,
};
use partition_mle::ips::{ips_run, IpsConfig};

/// All inclusion-maximal families of nonempty subsets covering `[n]`.
fn covering_antichains(n: usize) -> Vec<Vec<Vec<usize>>> {
    let subsets: Vec<u32> = (1..(1u32 << n)).collect();
    let mut out = Vec::new();
    // Families as bitmasks over the subset list.
    let families = 1u64 << subsets.len();
    for family in 1..families {
        let members: Vec<u32> = subsets
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (family & (1 << i) != 0).then_some(s))
            .collect();
        let antichain = members.iter().all(|&a| {
            members
                .iter()
                .all(|&b| a == b || (a & b) != a && (a & b) != b)
        });
        if !antichain {
            continue;
        }
        let cover = members.iter().fold(0u32, |acc, &s| acc | s);
        if cover != (1 << n) - 1 {
            continue;
        }
        let facets: Vec<Vec<usize>> = members
            .iter()
            .map(|&s| {
                (0..n)
                    .filter(|&v| s & (1 << v) != 0)
                    .map(|v| v + 1)
                    .collect()
            })
            .collect();
        out.push(facets);
    }
    out
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for perm in out {
            for v in 0..n {
                if !perm.contains(&v) {
                    let mut p = perm.clone();
                    p.push(v);
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

#[test]
fn rip_implies_grip_exhaustively() {
    let mut rng = TestRng(0xE1AE);
    let mut complexes = 0usize;
    let mut rip_orderings = 0usize;
    for n in 1..=4usize {
        for facets in covering_antichains(n) {
            let cx = SimplicialComplex::new(n, facets, None).unwrap();
            complexes += 1;
            let mut any_rip: Option<Vec<usize>> = None;
            for order in all_permutations(cx.n_facets()) {
                if rip_check(&cx, &order).unwrap().is_ok() {
                    let mat = matrix_from_complex(&cx, &order).unwrap();
                    assert!(
                        grip_check(&mat).overall,
                        "RIP ordering {order:?} of {:?} must be GRIP",
                        cx.facets()
                    );
                    rip_orderings += 1;
                    any_rip.get_or_insert(order);
                }
            }
            // Decomposability coincides with the existence of a RIP order.
            let decomposable = is_decomposable(&cx).unwrap();
            assert_eq!(decomposable, any_rip.is_some(), "complex {:?}", cx.facets());
            assert_eq!(decomposable, rip_order_search(&cx).unwrap().is_some());
            // One exact cycle on the first RIP ordering.
            if let Some(order) = any_rip {
                let mat = matrix_from_complex(&cx, &order).unwrap();
                let d = rational_data(&mut rng, mat.n_cols());
                let result = ips_run(&mat, &d, &IpsConfig::default()).unwrap();
                assert!(result.converged);
                assert!(result.steps_taken <= mat.k());
                assert_eq!(result.one_cycle_exact, Some(true));
            }
        }
    }
    assert!(
        complexes > 100,
        "enumeration too small: {complexes} complexes"
    );
    println!("checked {complexes} complexes, {rip_orderings} RIP orderings");
}

#[test]
fn rip_implies_grip_for_a_ternary_case() {
    let cx = SimplicialComplex::new(3, vec![vec![1, 2], vec![2, 3]], Some(vec![3, 2, 3])).unwrap();
    let order = rip_order_search(&cx)
        .unwrap()
        .expect("chain admits a RIP order");
    let mat = matrix_from_complex(&cx, &order).unwrap();
    assert_eq!(mat.n_cols(), 18);
    assert!(grip_check(&mat).overall);
    let mut rng = TestRng(0x3EA);
    let d = rational_data(&mut rng, mat.n_cols());
    let result = ips_run(&mat, &d, &IpsConfig::default()).unwrap();
    assert!(result.converged);
    assert_eq!(result.one_cycle_exact, Some(true));
}
