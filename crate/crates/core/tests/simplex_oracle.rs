mod common;

use common::*;
use gridswitch::lp::{LinearProgram, RowTag, Sense, VarTag};
use gridswitch::model::{build_sdcopf, nodal_prices, Topology};
use gridswitch::simplex::{solve_lp, LpResult, LpStatus, SimplexOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..7usize);
    let m = rng.random_range(1..6usize);
    let mut lp = LinearProgram::new();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let kind = rng.random_range(0..4);
            let (lo, hi) = match kind {
                0 => (0.0, f64::INFINITY),
                1 => (-rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)),
                2 => (f64::NEG_INFINITY, rng.random_range(0.0..3.0)),
                _ => (-5.0, 5.0),
            };
            lp.add_var(VarTag::Aux(j), lo, hi, rng.random_range(-3.0..3.0))
        })
        .collect();
    for i in 0..m {
        let mut coeffs = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.7) {
                coeffs.push((v, rng.random_range(-4.0..4.0)));
            }
        }
        let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.random_range(0..3)];
        lp.add_row(RowTag::Aux(i), coeffs, sense, rng.random_range(-3.0..3.0));
    }
    lp
}

/// Primal and dual feasibility, complementary slackness and zero duality gap.
fn check_certificate(lp: &LinearProgram, r: &LpResult, tol: f64) {
    assert!(lp.max_violation(&r.primal) <= 1e-7, "primal violation {}", lp.max_violation(&r.primal));
    for (row, &y) in lp.rows().iter().zip(&r.duals) {
        let slack = row.rhs - lp.activity(row, &r.primal);
        match row.sense {
            Sense::Le => assert!(y <= tol, "<= row dual {y}"),
            Sense::Ge => assert!(y >= -tol, ">= row dual {y}"),
            Sense::Eq => {}
        }
        assert!((y * slack).abs() <= tol * (1.0 + y.abs()), "complementary slackness {y} * {slack}");
    }
    let mut dual_obj = lp.objective_constant();
    for (row, &y) in lp.rows().iter().zip(&r.duals) {
        dual_obj += y * row.rhs;
    }
    for ((v, &d), &x) in lp.vars().iter().zip(&r.reduced_costs).zip(&r.primal) {
        let at_lo = (x - v.lower).abs() <= 1e-7;
        let at_hi = (x - v.upper).abs() <= 1e-7;
        if !at_lo && !at_hi {
            assert!(d.abs() <= tol, "interior column with reduced cost {d}");
        } else if at_lo && !at_hi {
            assert!(d >= -tol, "column at lower with reduced cost {d}");
        } else if at_hi && !at_lo {
            assert!(d <= tol, "column at upper with reduced cost {d}");
        }
        dual_obj += d * x;
    }
    assert!(rel_close(r.objective, dual_obj, 1e-7), "primal {} vs dual {}", r.objective, dual_obj);
}

#[test]
fn random_lps_match_tableau_oracle() {
    let mut counts = [0usize; 3];
    for seed in 0..400 {
        let lp = random_lp(seed);
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        match (tableau_oracle(&lp), r.status) {
            (OracleOutcome::Optimal(o), LpStatus::Optimal) => {
                assert!(rel_close(r.objective, o.objective, 1e-8), "seed {seed}: {} vs {}", r.objective, o.objective);
                check_certificate(&lp, &r, 1e-7);
                counts[0] += 1;
            }
            (OracleOutcome::Infeasible, LpStatus::Infeasible) => counts[1] += 1,
            (OracleOutcome::Unbounded, LpStatus::Unbounded) => counts[2] += 1,
            (o, s) => panic!("seed {seed}: oracle {o:?} vs simplex {s:?}"),
        }
    }
    // the generator must exercise every outcome
    assert!(counts.iter().all(|&c| c > 10), "{counts:?}");
}

#[test]
fn two_bus_price() {
    let net = two_bus();
    let lp = build_sdcopf(&net, &Topology::all(1));
    let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
    assert!((r.objective - 40.0).abs() < 1e-9);
    let pi = nodal_prices(&net, &lp, &r);
    assert!((pi[1] - 40.0).abs() < 1e-9);
}

#[test]
fn congested_triangle_prices_match_oracle() {
    let net = triangle();
    let lp = build_sdcopf(&net, &Topology::all(3));
    let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
    let OracleOutcome::Optimal(o) = tableau_oracle(&lp) else { panic!("oracle failed") };
    assert!(rel_close(r.objective, o.objective, 1e-8));
    let pi = nodal_prices(&net, &lp, &r);
    for v in 0..3 {
        let row = lp.row(RowTag::Balance(gridswitch::BusId(v))).unwrap();
        assert!((pi[v] - o.duals[row.0]).abs() < 1e-8, "bus {v}: {} vs {}", pi[v], o.duals[row.0]);
    }
    // congestion separates prices
    assert!((pi[0] - pi[2]).abs() > 1.0, "{pi:?}");
    check_certificate(&lp, &r, 1e-7);
}

#[test]
fn no_lines_with_load_is_infeasible() {
    let net = two_bus();
    let lp = build_sdcopf(&net, &Topology::none(1));
    assert_eq!(solve_lp(&lp, &SimplexOptions::default()).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn random_dcopf_match_oracle() {
    for seed in 0..60 {
        let net = random_network(seed);
        let lp = build_sdcopf(&net, &Topology::all(net.num_branches()));
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        match tableau_oracle(&lp) {
            OracleOutcome::Optimal(o) => {
                assert_eq!(r.status, LpStatus::Optimal, "seed {seed}");
                assert!(rel_close(r.objective, o.objective, 1e-8), "seed {seed}");
                check_certificate(&lp, &r, 1e-7);
            }
            OracleOutcome::Infeasible => assert_eq!(r.status, LpStatus::Infeasible, "seed {seed}"),
            OracleOutcome::Unbounded => panic!("dcopf cannot be unbounded"),
        }
    }
}

#[test]
fn identical_inputs_identical_results() {
    let lp = build_sdcopf(&six_line(), &Topology::all(6));
    let a = solve_lp(&lp, &SimplexOptions::default()).unwrap();
    let b = solve_lp(&lp, &SimplexOptions::default()).unwrap();
    assert_eq!(a.primal, b.primal);
    assert_eq!(a.duals, b.duals);
    assert_eq!(a.iterations, b.iterations);
}

proptest! {
    #[test]
    fn optimal_results_carry_a_certificate(seed in 1000u64..100_000) {
        let lp = random_lp(seed);
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        if r.status == LpStatus::Optimal {
            check_certificate(&lp, &r, 1e-7);
        }
    }
}
