mod common;

use std::sync::Arc;

use common::*;
use gridswitch::branchbound::*;
use gridswitch::clock::{Clock, VirtualClock};
use gridswitch::model::*;
use gridswitch::simplex::SimplexOptions;
use gridswitch::sweep::{sweep_all, Execution};
use proptest::prelude::*;

fn vclock() -> Arc<dyn Clock> {
    Arc::new(VirtualClock::new(1e-4))
}

fn opts(sel: NodeSelection, heuristics: bool) -> MipOptions {
    MipOptions { heuristics, gap_tol: 0.0, node_selection: sel, ..Default::default() }
}

#[test]
fn otsp_matches_enumeration() {
    let mut feasible = 0;
    for seed in 0..80 {
        let net = random_network(seed);
        let brute = sweep_all(&net, &SimplexOptions::default(), Execution::Parallel);
        for sel in [NodeSelection::BestBound, NodeSelection::BestBoundPlunge] {
            for heur in [false, true] {
                let r = solve_milp(build_otsp(&net), opts(sel, heur), vclock(), &mut |_| {});
                match brute.best_objective() {
                    Some(z) => {
                        assert_eq!(r.status, MipStatus::Optimal, "seed {seed}");
                        assert!(rel_close(r.ub().unwrap(), z, 1e-7), "seed {seed}: {:?} vs {z}", r.ub());
                        assert!(r.lb.unwrap() <= z + 1e-7 * z.abs().max(1.0));
                    }
                    None => assert_eq!(r.status, MipStatus::Infeasible, "seed {seed}"),
                }
            }
        }
        feasible += brute.best_objective().is_some() as usize;
    }
    assert!(feasible >= 50, "only {feasible} feasible instances");
}

#[test]
fn switching_helps_on_six_line() {
    let net = six_line();
    let brute = sweep_all(&net, &SimplexOptions::default(), Execution::Sequential);
    let all_closed = brute.objectives[(1 << 6) - 1].unwrap();
    let best = brute.best_objective().unwrap();
    assert!(best < all_closed - 1e-6, "{best} vs {all_closed}");
    let r = exact_mip(build_otsp(&net));
    assert!(rel_close(r.ub().unwrap(), best, 1e-9));
}

#[test]
fn injected_optimum_closes_the_search() {
    let net = six_line();
    let brute = sweep_all(&net, &SimplexOptions::default(), Execution::Sequential);
    let best = brute.best.clone().unwrap();
    let mip = build_otsp(&net);
    let values = embed(&mip, &best);
    let mut s = MipSolver::new(mip, opts(NodeSelection::BestBound, false), vclock());
    assert_eq!(s.injector().inject(&values, best.objective).unwrap(), Injection::Accepted);
    let mut events = Vec::new();
    while s.step() {
        events.extend(s.drain_events());
    }
    events.extend(s.drain_events());
    let r = s.result();
    assert_eq!(r.status, MipStatus::Optimal);
    assert!(rel_close(r.ub().unwrap(), best.objective, 1e-9));
    // nothing strictly better can have been found afterwards
    let sources: Vec<_> = events
        .iter()
        .filter_map(|e| match e {
            SolverEvent::NewIncumbent { source, .. } => Some(*source),
            _ => None,
        })
        .collect();
    assert_eq!(sources, vec![IncumbentSource::Injected]);
}

#[test]
fn worse_and_infeasible_injections_are_ignored() {
    let net = six_line();
    let mip = build_otsp(&net);
    let reference = exact_mip(mip.clone()).ub().unwrap();
    let s = MipSolver::new(mip.clone(), opts(NodeSelection::BestBound, false), vclock());
    let inj = s.injector();
    // all lines closed: feasible but worse than the optimum
    let d = solve_sdcopf(&net, &Topology::all(6), &SimplexOptions::default()).unwrap().unwrap();
    let dcopf = embed(&mip, &d.solution);
    let mut broken = dcopf.clone();
    broken[mip.lp.var(gridswitch::lp::VarTag::Flow(gridswitch::BranchId(0))).unwrap().0] += 0.3;
    assert_eq!(inj.inject(&broken, d.solution.objective).unwrap(), Injection::RejectedInfeasible);
    assert_eq!(inj.upper_bound(), None);
    assert_eq!(inj.inject(&dcopf, d.solution.objective).unwrap(), Injection::Accepted);
    assert_eq!(inj.inject(&dcopf, d.solution.objective).unwrap(), Injection::RejectedNotBetter);
    // a lying objective does not help: the bound is recomputed
    assert_eq!(inj.inject(&dcopf, -1e9).unwrap(), Injection::RejectedNotBetter);
    let r = s.run(&mut |_| {});
    assert!(rel_close(r.ub().unwrap(), reference, 1e-9));
    assert!(matches!(inj.inject(&dcopf, 0.0), Err(InjectError::HandleClosed)));
}

#[test]
fn bad_mipstart_is_reported_and_ignored() {
    let net = two_bus();
    // opening the only line leaves the load unserved
    let mip = build_rotsp(&net, &Topology::all(1), &SwitchSet::all(1), Some(&[false])).unwrap();
    let mut events = Vec::new();
    let r = solve_milp(mip, MipOptions::default(), vclock(), &mut |e| events.push(e.clone()));
    assert_eq!(r.status, MipStatus::Optimal);
    assert!(rel_close(r.ub().unwrap(), 40.0, 1e-9));
    assert!(events.iter().any(|e| matches!(e, SolverEvent::RejectedStart { .. })));
}

#[test]
fn good_mipstart_becomes_first_incumbent() {
    let net = six_line();
    let mip = build_rotsp(&net, &Topology::all(6), &SwitchSet::all(6), Some(&[true; 6])).unwrap();
    let mut first = None;
    solve_milp(mip, MipOptions::default(), vclock(), &mut |e| {
        if let (None, SolverEvent::NewIncumbent { source, .. }) = (&first, e) {
            first = Some(*source);
        }
    });
    assert_eq!(first, Some(IncumbentSource::MipStart));
}

#[test]
fn runs_are_deterministic() {
    let net = random_network(17);
    let run = || {
        let mut ev = Vec::new();
        let r = solve_milp(build_otsp(&net), MipOptions::default(), vclock(), &mut |e| ev.push(e.clone()));
        (r.ub(), r.lb, r.nodes, r.lp_iterations, ev)
    };
    assert_eq!(run(), run());
}

#[test]
fn node_limit_reports_feasible_with_gap() {
    let net = six_line();
    let o = MipOptions { node_limit: Some(1), heuristics: false, ..Default::default() };
    let r = solve_milp(build_otsp(&net), o, vclock(), &mut |_| {});
    assert!(matches!(r.status, MipStatus::Feasible | MipStatus::NoSolutionFound | MipStatus::Optimal));
    if let (Some(ub), Some(lb)) = (r.ub(), r.lb) {
        assert!(lb <= ub + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounds_move_monotonically(seed in 0u64..5000) {
        let net = random_network(seed);
        let mut ubs = Vec::new();
        let mut lbs = Vec::new();
        let r = solve_milp(build_otsp(&net), MipOptions::default(), vclock(), &mut |e| match e {
            SolverEvent::NewIncumbent { objective, .. } => ubs.push(*objective),
            SolverEvent::BoundImproved { lb, .. } => lbs.push(*lb),
            _ => {}
        });
        prop_assert!(ubs.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(lbs.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        if let (Some(ub), Some(lb)) = (r.ub(), r.lb) {
            prop_assert!(lb <= ub + 1e-9 * ub.abs().max(1.0));
            prop_assert!(lbs.iter().all(|&l| l <= ub + 1e-9 * ub.abs().max(1.0)));
        }
    }
}
