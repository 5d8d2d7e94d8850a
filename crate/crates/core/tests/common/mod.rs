#![allow(dead_code)]

use std::sync::Arc;

use gridswitch::branchbound::{solve_milp, MipOptions, MipResult};
use gridswitch::clock::VirtualClock;
use gridswitch::lp::{LinearProgram, MixedIntegerProgram, Sense};
use gridswitch::{Branch, Bus, BusId, Generator, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bus(id: i64, demand: f64) -> Bus {
    Bus { external_id: id, demand }
}

pub fn line(from: usize, to: usize, b: f64, cap: f64) -> Branch {
    Branch { from: BusId(from), to: BusId(to), susceptance: b, capacity: cap }
}

pub fn gen(at: usize, p_max: f64, cost: f64) -> Generator {
    Generator { bus: BusId(at), p_min: 0.0, p_max, cost_linear: cost, cost_constant: 0.0 }
}

/// Generator at bus 1, 1.0 p.u. load at bus 2, one line with capacity 2.
pub fn two_bus() -> Network {
    Network::new(vec![bus(1, 0.0), bus(2, 1.0)], vec![line(0, 1, 4.0, 2.0)], vec![gen(0, 2.0, 40.0)], -0.6, 0.6)
        .unwrap()
}

/// Cheap generator at bus 1, expensive one at bus 2, 1.5 p.u. load at bus 3.
/// The direct line 1-3 is the bottleneck, so prices separate.
pub fn triangle() -> Network {
    Network::new(
        vec![bus(1, 0.0), bus(2, 0.0), bus(3, 1.5)],
        vec![line(0, 1, 10.0, 2.0), line(1, 2, 10.0, 2.0), line(0, 2, 10.0, 0.6)],
        vec![gen(0, 3.0, 10.0), gen(1, 3.0, 30.0)],
        -0.6,
        0.6,
    )
    .unwrap()
}

/// Four buses, six lines; a weak parallel path forces expensive redispatch
/// unless the right lines are opened.
pub fn six_line() -> Network {
    Network::new(
        vec![bus(1, 0.0), bus(2, 0.0), bus(3, 0.9), bus(4, 1.1)],
        vec![
            line(0, 1, 12.0, 1.2),
            line(1, 2, 8.0, 1.0),
            line(2, 3, 15.0, 0.5),
            line(0, 3, 6.0, 0.9),
            line(1, 3, 10.0, 1.4),
            line(0, 2, 9.0, 0.4),
        ],
        vec![gen(0, 2.5, 12.0), gen(1, 1.0, 25.0), gen(2, 1.0, 60.0)],
        -0.6,
        0.6,
    )
    .unwrap()
}

/// Random connected network with 3–6 buses and at most 8 lines.
pub fn random_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.random_range(3..=6usize);
    let mut branches = Vec::new();
    // spanning tree first so the all-closed topology is connected
    for v in 1..nb {
        let u = rng.random_range(0..v);
        branches.push(line(u, v, rng.random_range(2.0..20.0), rng.random_range(0.3..1.5)));
    }
    let extra = rng.random_range(0..=(8 - (nb - 1)).min(4));
    for _ in 0..extra {
        let u = rng.random_range(0..nb);
        let mut v = rng.random_range(0..nb);
        if v == u {
            v = (u + 1) % nb;
        }
        branches.push(line(u, v, rng.random_range(2.0..20.0), rng.random_range(0.2..1.2)));
    }
    let ng = rng.random_range(1..=3usize.min(nb));
    let mut gens = Vec::new();
    for k in 0..ng {
        gens.push(gen(k, rng.random_range(0.8..3.0), rng.random_range(5.0..60.0)));
    }
    let cap: f64 = gens.iter().map(|g| g.p_max).sum();
    let mut buses: Vec<Bus> = (0..nb).map(|i| bus(i as i64 + 1, 0.0)).collect();
    let total = cap * rng.random_range(0.3..0.7);
    let loads: Vec<f64> = (0..nb).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = loads.iter().sum::<f64>().max(1e-9);
    for (b, l) in buses.iter_mut().zip(&loads) {
        b.demand = total * l / s;
    }
    Network::new(buses, branches, gens, -0.6, 0.6).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Pure branch-and-bound (no heuristics), virtual clock.
pub fn exact_mip(mip: MixedIntegerProgram) -> MipResult {
    let opts = MipOptions { heuristics: false, gap_tol: 0.0, ..Default::default() };
    solve_milp(mip, opts, Arc::new(VirtualClock::new(1e-4)), &mut |_| {})
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// `d objective / d rhs` per original row.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Optimal(OracleSolution),
    Infeasible,
    Unbounded,
}

/// Textbook two-phase tableau simplex with Bland's rule, on the standard
/// form `min c'z, Az = b, z >= 0, b >= 0` obtained by shifting bounds,
/// splitting free columns and adding slacks. Every row gets an artificial;
/// the artificial columns' final reduced costs give the duals.
pub fn tableau_oracle(lp: &LinearProgram) -> OracleOutcome {
    // column maps: x_j = shift + sum(sign * z_k)
    let n = lp.num_vars();
    let mut shift = vec![0.0; n];
    let mut parts: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut nz = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // z_k <= ub
    for (j, v) in lp.vars().iter().enumerate() {
        if v.lower.is_finite() {
            shift[j] = v.lower;
            parts[j].push((nz, 1.0));
            if v.upper.is_finite() {
                extra_rows.push((nz, v.upper - v.lower));
            }
            nz += 1;
        } else if v.upper.is_finite() {
            shift[j] = v.upper;
            parts[j].push((nz, -1.0));
            nz += 1;
        } else {
            parts[j].push((nz, 1.0));
            parts[j].push((nz + 1, -1.0));
            nz += 2;
        }
    }
    let m0 = lp.num_rows();
    let m = m0 + extra_rows.len();
    // rows: (coeffs over z, sense, rhs)
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(m);
    for r in lp.rows() {
        let mut a = vec![0.0; nz];
        let mut rhs = r.rhs;
        for &(v, c) in &r.coeffs {
            rhs -= c * shift[v.0];
            for &(k, s) in &parts[v.0] {
                a[k] += c * s;
            }
        }
        rows.push((a, r.sense, rhs));
    }
    for &(k, ub) in &extra_rows {
        let mut a = vec![0.0; nz];
        a[k] = 1.0;
        rows.push((a, Sense::Le, ub));
    }
    // slacks
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let ncols = nz + n_slack + m; // + artificials
    let art0 = nz + n_slack;
    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut sign = vec![1.0; m];
    let mut si = nz;
    for (i, (a, sense, rhs)) in rows.iter().enumerate() {
        t[i][..nz].copy_from_slice(a);
        match sense {
            Sense::Le => {
                t[i][si] = 1.0;
                si += 1;
            }
            Sense::Ge => {
                t[i][si] = -1.0;
                si += 1;
            }
            Sense::Eq => {}
        }
        t[i][ncols] = *rhs;
        if *rhs < 0.0 {
            sign[i] = -1.0;
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][art0 + i] = 1.0;
    }
    let mut basis: Vec<usize> = (0..m).map(|i| art0 + i).collect();
    let mut cost = vec![0.0; ncols];
    for (j, v) in lp.vars().iter().enumerate() {
        for &(k, s) in &parts[j] {
            cost[k] += v.cost * s;
        }
    }
    let constant = lp.objective_constant() + lp.vars().iter().zip(&shift).map(|(v, s)| v.cost * s).sum::<f64>();

    let eps = 1e-10;
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, c: &[f64], allowed: &dyn Fn(usize) -> bool| -> bool {
        loop {
            // reduced costs
            let mut enter = None;
            for j in 0..ncols {
                if !allowed(j) || basis.contains(&j) {
                    continue;
                }
                let mut d = c[j];
                for i in 0..m {
                    d -= c[basis[i]] * t[i][j];
                }
                if d < -1e-9 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][q] > eps {
                    let r = t[i][ncols] / t[i][q];
                    match leave {
                        None => leave = Some((i, r)),
                        Some((li, lr)) => {
                            if r < lr - 1e-12 || (r <= lr + 1e-12 && basis[i] < basis[li]) {
                                leave = Some((i, r));
                            }
                        }
                    }
                }
            }
            let Some((p, _)) = leave else { return false };
            let piv = t[p][q];
            for v in t[p].iter_mut() {
                *v /= piv;
            }
            for i in 0..m {
                if i != p && t[i][q] != 0.0 {
                    let f = t[i][q];
                    for k in 0..=ncols {
                        t[i][k] -= f * t[p][k];
                    }
                }
            }
            basis[p] = q;
        }
    };
    let mut c1 = vec![0.0; ncols];
    for c in c1.iter_mut().skip(art0) {
        *c = 1.0;
    }
    run(&mut t, &mut basis, &c1, &|_| true);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= art0).map(|i| t[i][ncols]).sum();
    if infeas > 1e-7 {
        return OracleOutcome::Infeasible;
    }
    // drive remaining (zero-level) artificials out where possible
    for i in 0..m {
        if basis[i] >= art0 {
            if let Some(q) = (0..art0).find(|&j| t[i][j].abs() > 1e-9 && !basis.contains(&j)) {
                let piv = t[i][q];
                for v in t[i].iter_mut() {
                    *v /= piv;
                }
                for r in 0..m {
                    if r != i && t[r][q] != 0.0 {
                        let f = t[r][q];
                        for k in 0..=ncols {
                            t[r][k] -= f * t[i][k];
                        }
                    }
                }
                basis[i] = q;
            }
        }
    }
    let mut c2 = cost.clone();
    for c in c2.iter_mut().skip(art0) {
        *c = 0.0;
    }
    if !run(&mut t, &mut basis, &c2, &|j| j < art0) {
        return OracleOutcome::Unbounded;
    }
    let mut z = vec![0.0; ncols];
    for i in 0..m {
        z[basis[i]] = t[i][ncols];
    }
    let x: Vec<f64> = (0..n).map(|j| shift[j] + parts[j].iter().map(|&(k, s)| s * z[k]).sum::<f64>()).collect();
    let objective = constant + (0..nz).map(|k| cost[k] * z[k]).sum::<f64>();
    // y_i = c_B B^-1 e_i: the artificial column of row i holds B^-1 e_i
    let duals = (0..m0)
        .map(|i| {
            let y: f64 = (0..m).map(|r| c2[basis[r]] * t[r][art0 + i]).sum();
            y * sign[i]
        })
        .collect();
    OracleOutcome::Optimal(OracleSolution { objective, x, duals })
}
