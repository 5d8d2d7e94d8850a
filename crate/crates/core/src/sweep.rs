//! Exhaustive topology sweeps: every switching pattern solved as a
//! static-topology DC OPF. Exponential, so only for small networks, where
//! it serves as ground truth for the MILP machinery.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::{solve_sdcopf, OtspSolution, SwitchSet, Topology};
use crate::network::Network;
use crate::simplex::SimplexOptions;

/// Largest number of free lines a sweep accepts.
pub const MAX_FREE_LINES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon data parallelism; sequential when built without `parallel`.
    #[default]
    Parallel,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Objective per pattern (`None`: infeasible), indexed by the pattern's bitmask.
    pub objectives: Vec<Option<f64>>,
    /// Cheapest feasible pattern; lowest mask on ties.
    pub best: Option<OtspSolution>,
}

impl SweepResult {
    pub fn best_objective(&self) -> Option<f64> {
        self.best.as_ref().map(|s| s.objective)
    }

    pub fn feasible(&self) -> usize {
        self.objectives.iter().filter(|o| o.is_some()).count()
    }
}

fn map_masks<F>(count: u64, exec: Execution, f: F) -> Vec<Option<OtspSolution>>
where
    F: Fn(u64) -> Option<OtspSolution> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
        _ => (0..count).map(f).collect(),
    }
}

/// Solve the restricted problem by brute force: lines in `es` take every
/// on/off combination, other lines of `ea` stay closed.
///
/// Bit `i` of a mask closes `es.ids()[i]`.
pub fn sweep_restricted(
    net: &Network,
    ea: &Topology,
    es: &SwitchSet,
    opts: &SimplexOptions,
    exec: Execution,
) -> SweepResult {
    let k = es.len();
    assert!(k <= MAX_FREE_LINES, "sweep over {k} lines is too large");
    let mut base = ea.mask().to_vec();
    for e in es.ids() {
        base[e.0] = false;
    }
    let solved = map_masks(1u64 << k, exec, |mask| {
        let mut m = base.clone();
        for (i, e) in es.ids().iter().enumerate() {
            if mask >> i & 1 == 1 {
                m[e.0] = true;
            }
        }
        // the solver never fails on these small dense problems; treat a
        // numerical failure like an infeasible pattern
        solve_sdcopf(net, &Topology::from_mask(m), opts).ok().flatten().map(|d| d.solution)
    });
    let objectives: Vec<Option<f64>> = solved.iter().map(|s| s.as_ref().map(|s| s.objective)).collect();
    let mut best: Option<OtspSolution> = None;
    for s in solved.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| s.objective < b.objective) {
            best = Some(s);
        }
    }
    SweepResult { objectives, best }
}

/// The unrestricted switching optimum over all `2^|E|` topologies.
pub fn sweep_all(net: &Network, opts: &SimplexOptions, exec: Execution) -> SweepResult {
    let n = net.num_branches();
    sweep_restricted(net, &Topology::all(n), &SwitchSet::all(n), opts, exec)
}
