mod common;

use common::*;
use gridswitch::criteria::*;
use gridswitch::model::{solve_sdcopf, Topology};
use gridswitch::simplex::SimplexOptions;
use gridswitch::{BranchId, Network};
use proptest::prelude::*;

fn alphas(net: &Network) -> Option<Vec<f64>> {
    let d = solve_sdcopf(net, &Topology::all(net.num_branches()), &SimplexOptions::default()).unwrap()?;
    Some(LineProfit.score(net, &d.solution.f, &d.prices).unwrap())
}

/// Cost of the all-closed topology minus one line, `None` if infeasible.
fn single_removal(net: &Network, e: usize) -> Option<f64> {
    let mut mask = vec![true; net.num_branches()];
    mask[e] = false;
    solve_sdcopf(net, &Topology::from_mask(mask), &SimplexOptions::default())
        .unwrap()
        .map(|d| d.solution.objective)
}

#[test]
fn most_negative_profit_is_best_single_removal_on_triangle() {
    let net = triangle();
    let alpha = alphas(&net).unwrap();
    let list = build_priority_list(&alpha);
    assert!(alpha[list.order[0].0] < 0.0, "{alpha:?}");
    let base = solve_sdcopf(&net, &Topology::all(3), &SimplexOptions::default()).unwrap().unwrap();
    let removals: Vec<Option<f64>> = (0..3).map(|e| single_removal(&net, e)).collect();
    let best = (0..3)
        .filter_map(|e| removals[e].map(|z| (e, z)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .unwrap();
    assert_eq!(list.order[0], BranchId(best.0), "alpha {alpha:?}, removals {removals:?}");
    assert!(best.1 < base.solution.objective - 1e-6, "removal must actually help");
}

#[test]
fn shape_errors() {
    let net = triangle();
    assert!(matches!(lpsc(&net, &[0.0; 2], &[0.0; 3]), Err(CriteriaError::ShapeMismatch { what: "flows", .. })));
    assert!(matches!(lpsc(&net, &[0.0; 3], &[0.0; 4]), Err(CriteriaError::ShapeMismatch { what: "prices", .. })));
}

#[test]
fn open_lines_score_zero() {
    let net = triangle();
    let ea = Topology::from_mask(vec![true, true, false]);
    let d = solve_sdcopf(&net, &ea, &SimplexOptions::default()).unwrap().unwrap();
    assert_eq!(lpsc(&net, &d.solution.f, &d.prices).unwrap()[2], 0.0);
}

fn reference_order(alpha: &[f64]) -> Vec<BranchId> {
    // stable insertion sort: ascending alpha, lowest id first on ties
    let mut v: Vec<usize> = Vec::new();
    for i in 0..alpha.len() {
        let pos = v.iter().position(|&j| alpha[i] < alpha[j]).unwrap_or(v.len());
        v.insert(pos, i);
    }
    v.into_iter().map(BranchId).collect()
}

proptest! {
    #[test]
    fn priority_list_matches_reference_sort(alpha in prop::collection::vec(prop_oneof![Just(0.0), Just(-0.0), Just(1.5), -10.0..10.0f64], 0..30)) {
        let l = build_priority_list(&alpha);
        prop_assert_eq!(l.order, reference_order(&alpha));
    }

    #[test]
    fn switchable_sets_nest(alpha in prop::collection::vec(-10.0..10.0f64, 1..30), a in 0usize..40, b in 0usize..40) {
        let l = build_priority_list(&alpha);
        let (lo, hi) = (a.min(b), a.max(b));
        let s = select_switchable(&l, lo);
        let t = select_switchable(&l, hi);
        prop_assert!(s.is_subset_of(&t));
        prop_assert_eq!(t.len(), hi.min(alpha.len()));
    }

    #[test]
    fn profits_scale_with_costs(seed in 0u64..2000, k in 0.1..50.0f64) {
        let net = random_network(seed);
        let scaled = net.with_scaled_costs(k);
        if let (Some(a), Some(b)) = (alphas(&net), alphas(&scaled)) {
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x * k - y).abs() <= 1e-6 * y.abs().max(1.0), "{} * {} vs {}", x, k, y);
            }
        }
    }
}
