//! LP-based branch-and-bound over binary columns.
//!
//! The solver is resumable: [`MipSolver::step`] processes one node, so a
//! caller can interleave several solvers on one thread. Events are queued
//! and drained by the caller. Incumbents from outside enter through an
//! [`Injector`], which verifies them and lowers the shared upper bound at
//! once; the tree picks them up at the next node boundary.

use std::cmp::Ordering as CmpOrdering;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::lp::MixedIntegerProgram;
use crate::model::FEAS_TOL;
use crate::simplex::{LpStatus, Simplex, SimplexOptions};

/// Denominator guard for [`gap`].
pub const LB_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapError {
    #[error("gap undefined for ub={ub:?}, lb={lb:?}")]
    UndefinedGap { ub: Option<f64>, lb: Option<f64> },
}

/// Relative optimality gap in percent: `100 |ub - lb| / |lb|`.
pub fn gap(ub: f64, lb: f64) -> Result<f64, GapError> {
    if !ub.is_finite() || !lb.is_finite() || lb.abs() <= LB_GUARD {
        return Err(GapError::UndefinedGap { ub: Some(ub), lb: Some(lb) });
    }
    Ok(100.0 * (ub - lb).abs() / lb.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeSelection {
    /// Always the open node with the smallest bound, oldest first.
    BestBound,
    /// Best bound, but after branching keep diving into the child the LP
    /// value rounds to until it is pruned or integral.
    BestBoundPlunge,
}

#[derive(Debug, Clone)]
pub struct MipOptions {
    /// Seconds on the solver's clock.
    pub time_limit: f64,
    /// Percent.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    pub prune_tol: f64,
    pub int_tol: f64,
    /// Rounding + LP repair at the root.
    pub heuristics: bool,
    /// Seconds between heartbeats.
    pub heartbeat: f64,
    pub node_selection: NodeSelection,
    pub simplex: SimplexOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            time_limit: f64::INFINITY,
            gap_tol: 0.01,
            node_limit: None,
            prune_tol: 1e-9,
            int_tol: 1e-6,
            heuristics: true,
            heartbeat: 1.0,
            node_selection: NodeSelection::BestBoundPlunge,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IncumbentSource {
    Branching,
    Heuristic,
    MipStart,
    Injected,
}

impl IncumbentSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            IncumbentSource::Branching => "branching",
            IncumbentSource::Heuristic => "heuristic",
            IncumbentSource::MipStart => "mipstart",
            IncumbentSource::Injected => "injected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MipStatus {
    /// Gap closed to within `gap_tol`.
    Optimal,
    /// A limit or abort hit with an incumbent.
    Feasible,
    /// Tree exhausted without a feasible point.
    Infeasible,
    /// A limit or abort hit before any feasible point was found.
    NoSolutionFound,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverEvent {
    NewIncumbent { at: f64, objective: f64, values: Vec<f64>, source: IncumbentSource },
    BoundImproved { at: f64, lb: f64 },
    Heartbeat { at: f64, ub: Option<f64>, lb: Option<f64>, nodes: usize },
    RejectedStart { at: f64, reason: String },
    Finished { at: f64, status: MipStatus },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub values: Vec<f64>,
    pub objective: f64,
    pub source: IncumbentSource,
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<Incumbent>,
    /// Best bound; `None` if the root relaxation was never solved.
    pub lb: Option<f64>,
    /// Percent; `None` when undefined.
    pub gap: Option<f64>,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Seconds on the solver's clock.
    pub elapsed: f64,
    pub aborted: bool,
}

impl MipResult {
    pub fn ub(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|i| i.objective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Injection {
    Accepted,
    RejectedInfeasible,
    RejectedNotBetter,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InjectError {
    #[error("solver has been dropped")]
    HandleClosed,
}

struct Shared {
    ub: f64,
    pending: VecDeque<(Vec<f64>, f64)>,
    closed: bool,
}

/// Thread-safe handle for offering incumbents to a running solver.
#[derive(Clone)]
pub struct Injector {
    mip: Arc<MixedIntegerProgram>,
    shared: Arc<Mutex<Shared>>,
    prune_tol: f64,
}

impl Injector {
    /// Verify `values` against the model and, if strictly better than the
    /// current upper bound, lower the bound immediately. The objective is
    /// recomputed from `values`; `objective` is only used for logging.
    pub fn inject(&self, values: &[f64], objective: f64) -> Result<Injection, InjectError> {
        if self.shared.lock().unwrap().closed {
            return Err(InjectError::HandleClosed);
        }
        if !self.mip.is_feasible(values, FEAS_TOL) {
            return Ok(Injection::RejectedInfeasible);
        }
        let z = self.mip.lp.objective_value(values);
        if (z - objective).abs() > 1e-6 * z.abs().max(1.0) {
            debug!("injected objective {objective} differs from recomputed {z}");
        }
        let mut s = self.shared.lock().unwrap();
        if s.closed {
            return Err(InjectError::HandleClosed);
        }
        if z < s.ub - self.prune_tol {
            s.ub = z;
            let mut v = values.to_vec();
            round_binaries(&self.mip, &mut v);
            s.pending.push_back((v, z));
            Ok(Injection::Accepted)
        } else {
            Ok(Injection::RejectedNotBetter)
        }
    }

    pub fn upper_bound(&self) -> Option<f64> {
        let ub = self.shared.lock().unwrap().ub;
        ub.is_finite().then_some(ub)
    }
}

/// Cooperative cancellation, checked at node boundaries.
#[derive(Debug, Clone, Default)]
pub struct AbortHandle(Arc<AtomicBool>);

impl AbortHandle {
    pub fn abort(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_aborted(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

fn round_binaries(mip: &MixedIntegerProgram, v: &mut [f64]) {
    for b in &mip.binaries {
        v[b.0] = if v[b.0] > 0.5 { 1.0 } else { 0.0 };
    }
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    bound: f64,
    /// (index into `binaries`, fixed value)
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == CmpOrdering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // reversed: BinaryHeap pops the smallest bound, then the oldest node
    fn cmp(&self, o: &Self) -> CmpOrdering {
        o.bound.total_cmp(&self.bound).then(o.id.cmp(&self.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    Tree,
    Done,
}

pub struct MipSolver {
    mip: Arc<MixedIntegerProgram>,
    opts: MipOptions,
    clock: Arc<dyn Clock>,
    start: f64,
    lp: Simplex,
    shared: Arc<Mutex<Shared>>,
    abort: AbortHandle,
    heap: BinaryHeap<Node>,
    dive: Option<Node>,
    next_id: usize,
    /// Smallest bound of nodes dropped unresolved; caps the proven bound.
    floor: f64,
    lb: Option<f64>,
    incumbent: Option<Incumbent>,
    events: VecDeque<SolverEvent>,
    nodes: usize,
    lp_iterations: usize,
    last_heartbeat: f64,
    phase: Phase,
    status: Option<MipStatus>,
    aborted: bool,
}

impl MipSolver {
    pub fn new(mip: impl Into<Arc<MixedIntegerProgram>>, opts: MipOptions, clock: Arc<dyn Clock>) -> Self {
        let mip = mip.into();
        let lp = Simplex::new(&mip.lp, opts.simplex.clone());
        let start = clock.now();
        let shared = Arc::new(Mutex::new(Shared { ub: f64::INFINITY, pending: VecDeque::new(), closed: false }));
        MipSolver {
            mip,
            opts,
            clock,
            start,
            lp,
            shared,
            abort: AbortHandle::default(),
            heap: BinaryHeap::new(),
            dive: None,
            next_id: 0,
            floor: f64::INFINITY,
            lb: None,
            incumbent: None,
            events: VecDeque::new(),
            nodes: 0,
            lp_iterations: 0,
            last_heartbeat: 0.0,
            phase: Phase::Start,
            status: None,
            aborted: false,
        }
    }

    pub fn mip(&self) -> &MixedIntegerProgram {
        &self.mip
    }

    pub fn injector(&self) -> Injector {
        Injector { mip: Arc::clone(&self.mip), shared: Arc::clone(&self.shared), prune_tol: self.opts.prune_tol }
    }

    pub fn abort_handle(&self) -> AbortHandle {
        self.abort.clone()
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn elapsed(&self) -> f64 {
        self.clock.now() - self.start
    }

    pub fn incumbent(&self) -> Option<&Incumbent> {
        self.incumbent.as_ref()
    }

    pub fn upper_bound(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|i| i.objective)
    }

    pub fn lower_bound(&self) -> Option<f64> {
        self.lb
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn drain_events(&mut self) -> impl Iterator<Item = SolverEvent> + '_ {
        self.events.drain(..)
    }

    pub fn result(&self) -> MipResult {
        let ub = self.upper_bound();
        let gap = match (ub, self.lb) {
            (Some(u), Some(l)) => gap(u, l).ok(),
            _ => None,
        };
        MipResult {
            status: self.status.unwrap_or(if ub.is_some() { MipStatus::Feasible } else { MipStatus::NoSolutionFound }),
            incumbent: self.incumbent.clone(),
            lb: self.lb,
            gap,
            nodes: self.nodes,
            lp_iterations: self.lp_iterations,
            elapsed: self.elapsed(),
            aborted: self.aborted,
        }
    }

    /// Run to completion, forwarding every event to `sink`.
    pub fn run(mut self, sink: &mut dyn FnMut(&SolverEvent)) -> MipResult {
        while self.step() {
            for ev in self.events.drain(..) {
                sink(&ev);
            }
        }
        for ev in self.events.drain(..) {
            sink(&ev);
        }
        self.result()
    }

    fn now(&self) -> f64 {
        self.elapsed()
    }

    fn shared_ub(&self) -> f64 {
        self.shared.lock().unwrap().ub
    }

    /// Offer an own solution; emits an event if it is a strict improvement.
    fn offer(&mut self, values: Vec<f64>, objective: f64, source: IncumbentSource) -> bool {
        {
            let mut s = self.shared.lock().unwrap();
            if !(objective < s.ub - self.opts.prune_tol) {
                return false;
            }
            s.ub = objective;
        }
        self.adopt(values, objective, source);
        true
    }

    fn adopt(&mut self, values: Vec<f64>, objective: f64, source: IncumbentSource) {
        debug!("incumbent {objective:.6} from {}", source.as_str());
        self.events.push_back(SolverEvent::NewIncumbent { at: self.now(), objective, values: values.clone(), source });
        self.incumbent = Some(Incumbent { values, objective, source });
    }

    fn poll_injections(&mut self) {
        let pending: Vec<_> = self.shared.lock().unwrap().pending.drain(..).collect();
        for (values, z) in pending {
            let better = self.incumbent.as_ref().is_none_or(|i| z < i.objective - self.opts.prune_tol);
            if better {
                self.adopt(values, z, IncumbentSource::Injected);
            }
        }
    }

    fn reset_binary_bounds(&mut self) {
        for &b in &self.mip.binaries {
            let v = &self.mip.lp.vars()[b.0];
            self.lp.set_bounds(b, v.lower, v.upper);
        }
    }

    /// Solve the LP with every binary fixed to `assign` (one per binary) on
    /// a scratch copy of the workspace.
    fn solve_fixed(&mut self, assign: &[bool]) -> Option<(Vec<f64>, f64)> {
        let mut lp = self.lp.clone();
        for (k, &b) in self.mip.binaries.iter().enumerate() {
            let v = if assign[k] { 1.0 } else { 0.0 };
            let var = &self.mip.lp.vars()[b.0];
            if v < var.lower || v > var.upper {
                return None;
            }
            lp.set_bounds(b, v, v);
        }
        let res = lp.solve().ok()?;
        self.lp_iterations += res.iterations;
        self.clock.charge(res.iterations);
        if res.status != LpStatus::Optimal {
            return None;
        }
        let mut x = res.primal;
        round_binaries(&self.mip, &mut x);
        self.mip.is_feasible(&x, FEAS_TOL).then(|| {
            let z = self.mip.lp.objective_value(&x);
            (x, z)
        })
    }

    fn try_mipstart(&mut self) {
        let Some(start) = self.mip.mipstart.clone() else { return };
        let ok_shape = start.len() == self.mip.binaries.len() && start.iter().all(|&v| v == 0.0 || v == 1.0);
        let completed =
            if ok_shape { self.solve_fixed(&start.iter().map(|&v| v == 1.0).collect::<Vec<_>>()) } else { None };
        match completed {
            Some((x, z)) => {
                self.offer(x, z, IncumbentSource::MipStart);
            }
            None => {
                let reason = if ok_shape { "completion LP has no feasible solution" } else { "malformed start" };
                warn!("mipstart rejected: {reason}");
                self.events.push_back(SolverEvent::RejectedStart { at: self.now(), reason: reason.to_string() });
            }
        }
    }

    /// Threshold roundings of the relaxation, each completed by an LP.
    fn root_heuristic(&mut self, x: &[f64]) {
        let frac: Vec<f64> = self.mip.binaries.iter().map(|b| x[b.0]).collect();
        let mut tried: Vec<Vec<bool>> = Vec::new();
        for t in [self.opts.int_tol, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0 - self.opts.int_tol] {
            let cand: Vec<bool> = frac.iter().map(|&v| v >= t).collect();
            if tried.contains(&cand) {
                continue;
            }
            if let Some((x, z)) = self.solve_fixed(&cand) {
                debug!("rounding at {t}: {z}");
                self.offer(x, z, IncumbentSource::Heuristic);
            }
            tried.push(cand);
        }
    }

    fn current_lb(&self) -> Option<f64> {
        let mut lb = self.floor;
        if let Some(n) = self.heap.peek() {
            lb = lb.min(n.bound);
        }
        if let Some(d) = &self.dive {
            lb = lb.min(d.bound);
        }
        if let Some(u) = self.upper_bound() {
            lb = lb.min(u);
        }
        lb.is_finite().then_some(lb)
    }

    fn update_lb(&mut self) {
        if let Some(new) = self.current_lb() {
            let improved = self.lb.is_none_or(|l| new > l);
            if improved {
                self.lb = Some(new);
                self.events.push_back(SolverEvent::BoundImproved { at: self.now(), lb: new });
            }
        }
    }

    fn heartbeat(&mut self, force: bool) {
        let t = self.now();
        if force || t - self.last_heartbeat >= self.opts.heartbeat {
            self.last_heartbeat = t;
            self.events.push_back(SolverEvent::Heartbeat { at: t, ub: self.upper_bound(), lb: self.lb, nodes: self.nodes });
        }
    }

    fn finish(&mut self, status: MipStatus) {
        self.poll_injections();
        self.update_lb();
        // an injected point may have arrived after the last check
        let status = match status {
            MipStatus::Infeasible | MipStatus::NoSolutionFound if self.incumbent.is_some() => MipStatus::Feasible,
            s => s,
        };
        let status = if self.gap_closed() { MipStatus::Optimal } else { status };
        self.heartbeat(true);
        self.events.push_back(SolverEvent::Finished { at: self.now(), status });
        self.status = Some(status);
        self.phase = Phase::Done;
    }

    fn gap_closed(&self) -> bool {
        match (self.upper_bound(), self.lb) {
            // a bound above the incumbent is rounding noise
            (Some(u), Some(l)) if l >= u - self.opts.prune_tol => true,
            (Some(u), Some(l)) => match gap(u, l) {
                Ok(g) => g <= self.opts.gap_tol,
                Err(_) => (u - l).abs() <= self.opts.prune_tol,
            },
            _ => false,
        }
    }

    fn pop_node(&mut self) -> Option<Node> {
        if let Some(d) = self.dive.take() {
            return Some(d);
        }
        self.heap.pop()
    }

    /// Process one node. Returns `false` once the solve is over.
    pub fn step(&mut self) -> bool {
        match self.phase {
            Phase::Done => return false,
            Phase::Start => {
                self.phase = Phase::Tree;
                self.try_mipstart();
                self.heap.push(Node { id: 0, bound: f64::NEG_INFINITY, fixings: Vec::new() });
                self.next_id = 1;
            }
            Phase::Tree => {}
        }
        self.poll_injections();
        if self.abort.is_aborted() {
            self.aborted = true;
            self.finish(MipStatus::NoSolutionFound);
            return false;
        }
        if self.now() >= self.opts.time_limit || self.opts.node_limit.is_some_and(|l| self.nodes >= l) {
            self.finish(MipStatus::NoSolutionFound);
            return false;
        }
        if self.nodes > 0 && self.gap_closed() {
            self.finish(MipStatus::Optimal);
            return false;
        }
        let ub = self.shared_ub();
        let node = loop {
            match self.pop_node() {
                None => {
                    self.finish(MipStatus::Infeasible);
                    return false;
                }
                Some(n) if n.bound >= ub - self.opts.prune_tol => continue,
                Some(n) => break n,
            }
        };
        self.process(node);
        self.update_lb();
        self.heartbeat(false);
        true
    }

    fn process(&mut self, node: Node) {
        self.nodes += 1;
        self.reset_binary_bounds();
        for &(k, v) in &node.fixings {
            let b = self.mip.binaries[k];
            let val = if v { 1.0 } else { 0.0 };
            self.lp.set_bounds(b, val, val);
        }
        let mut res = self.lp.solve();
        if !matches!(res, Ok(ref r) if matches!(r.status, LpStatus::Optimal | LpStatus::Infeasible)) {
            // cold restart before giving up on the node
            let mut fresh = Simplex::new(&self.mip.lp, self.opts.simplex.clone());
            for &(k, v) in &node.fixings {
                let val = if v { 1.0 } else { 0.0 };
                fresh.set_bounds(self.mip.binaries[k], val, val);
            }
            res = fresh.solve();
            if res.is_ok() {
                self.lp = fresh;
            }
        }
        let res = match res {
            Ok(r) => r,
            Err(e) => {
                warn!("node {} dropped: {e}", node.id);
                self.floor = self.floor.min(node.bound);
                self.lp = Simplex::new(&self.mip.lp, self.opts.simplex.clone());
                return;
            }
        };
        self.lp_iterations += res.iterations;
        self.clock.charge(res.iterations);
        match res.status {
            LpStatus::Infeasible => return,
            LpStatus::Optimal => {}
            s => {
                warn!("node {} dropped: lp status {s:?}", node.id);
                self.floor = self.floor.min(node.bound);
                return;
            }
        }
        let bound = res.objective.max(node.bound);
        if node.id == 0 && self.opts.heuristics {
            self.root_heuristic(&res.primal);
        }
        if bound >= self.shared_ub() - self.opts.prune_tol {
            return;
        }
        // most fractional binary, lowest index on ties
        let mut pick: Option<(usize, f64)> = None;
        for (k, b) in self.mip.binaries.iter().enumerate() {
            let v = res.primal[b.0];
            let d = v.min(1.0 - v);
            if d > self.opts.int_tol && pick.is_none_or(|(_, best)| d > best) {
                pick = Some((k, d));
            }
        }
        let Some((k, _)) = pick else {
            let mut x = res.primal;
            round_binaries(&self.mip, &mut x);
            if self.mip.is_feasible(&x, FEAS_TOL) {
                let z = self.mip.lp.objective_value(&x);
                self.offer(x, z, IncumbentSource::Branching);
            } else {
                debug!("node {}: integral LP point failed verification", node.id);
                self.floor = self.floor.min(bound);
            }
            return;
        };
        let v = res.primal[self.mip.binaries[k].0];
        let mut children = [false, true].map(|val| {
            let mut fixings = node.fixings.clone();
            fixings.push((k, val));
            let id = self.next_id;
            self.next_id += 1;
            Node { id, bound, fixings }
        });
        match self.opts.node_selection {
            NodeSelection::BestBound => {
                for c in children {
                    self.heap.push(c);
                }
            }
            NodeSelection::BestBoundPlunge => {
                let up_first = v >= 0.5;
                if up_first {
                    children.swap(0, 1);
                }
                let [first, second] = children;
                self.heap.push(second);
                self.dive = Some(first);
            }
        }
    }
}

impl Drop for MipSolver {
    fn drop(&mut self) {
        if let Ok(mut s) = self.shared.lock() {
            s.closed = true;
        }
    }
}

/// Solve `mip` to completion.
pub fn solve_milp(
    mip: impl Into<Arc<MixedIntegerProgram>>,
    opts: MipOptions,
    clock: Arc<dyn Clock>,
    sink: &mut dyn FnMut(&SolverEvent),
) -> MipResult {
    MipSolver::new(mip, opts, clock).run(sink)
}
