//! Master/worker search: rank 0 runs branch-and-bound on the full switching
//! model while ranks 1.. repeatedly solve restricted models around the best
//! known topology and feed improvements back.
//!
//! Ranks talk only through a [`MessageBus`]. Messages carry the sender's
//! clock reading and become visible to a receiver once the receiver's own
//! clock has reached it, so the same code runs on threads against wall time
//! or interleaved on one thread against virtual time.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io;
use std::sync::{Arc, Mutex};

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::branchbound::{
    AbortHandle, Injection, Injector, MipOptions, MipResult, MipSolver, MipStatus, SolverEvent,
};
use crate::clock::{Clock, VirtualClock, WallClock};
use crate::criteria::{build_priority_list, lpsc, select_switchable, PriorityList};
use crate::lp::MixedIntegerProgram;
use crate::model::{
    build_rotsp, check_feasible, embed, lift_rotsp, solve_sdcopf, OtspSolution, SwitchSet, Topology, FEAS_TOL,
};
use crate::network::Network;
use crate::simplex::SimplexOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    Status,
    Solution,
    Incumbent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Status { terminated: bool },
    Solution(OtspSolution),
    Incumbent(OtspSolution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub sent_at: f64,
    pub payload: Payload,
}

impl Message {
    pub fn tag(&self) -> Tag {
        match self.payload {
            Payload::Status { .. } => Tag::Status,
            Payload::Solution(_) => Tag::Solution,
            Payload::Incumbent(_) => Tag::Incumbent,
        }
    }
}

#[derive(Default)]
struct Mailbox {
    solutions: VecDeque<Message>,
    incumbents: VecDeque<Message>,
    status: VecDeque<Message>,
}

/// In-process transport between ranks. Sends never block.
#[derive(Clone)]
pub struct MessageBus {
    boxes: Arc<Vec<Mutex<Mailbox>>>,
}

impl MessageBus {
    pub fn new(ranks: usize) -> Self {
        MessageBus { boxes: Arc::new((0..ranks).map(|_| Mutex::new(Mailbox::default())).collect()) }
    }

    pub fn ranks(&self) -> usize {
        self.boxes.len()
    }

    pub fn endpoint(&self, rank: usize, clock: Arc<dyn Clock>) -> Endpoint {
        assert!(rank < self.ranks());
        Endpoint { rank, bus: self.clone(), clock }
    }

    fn deliver(&self, to: usize, msg: Message) {
        let mut b = self.boxes[to].lock().unwrap();
        match msg.tag() {
            Tag::Solution => b.solutions.push_back(msg),
            Tag::Incumbent => b.incumbents.push_back(msg),
            Tag::Status => b.status.push_back(msg),
        }
    }
}

/// One rank's view of the bus.
#[derive(Clone)]
pub struct Endpoint {
    rank: usize,
    bus: MessageBus,
    clock: Arc<dyn Clock>,
}

/// Remove and return every message visible at `now`, oldest first.
fn take_visible(q: &mut VecDeque<Message>, now: f64) -> Vec<Message> {
    let mut out = Vec::new();
    let mut keep = VecDeque::with_capacity(q.len());
    for m in q.drain(..) {
        if m.sent_at <= now {
            out.push(m);
        } else {
            keep.push_back(m);
        }
    }
    *q = keep;
    out
}

impl Endpoint {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    fn msg(&self, payload: Payload) -> Message {
        Message { sender: self.rank, sent_at: self.now(), payload }
    }

    pub fn broadcast(&self, payload: Payload) {
        let m = self.msg(payload);
        for r in (0..self.bus.ranks()).filter(|&r| r != self.rank) {
            self.bus.deliver(r, m.clone());
        }
    }

    pub fn send(&self, to: usize, payload: Payload) {
        self.bus.deliver(to, self.msg(payload));
    }

    /// All visible Solution messages in arrival order.
    pub fn recv_solutions(&self) -> Vec<Message> {
        let now = self.now();
        take_visible(&mut self.bus.boxes[self.rank].lock().unwrap().solutions, now)
    }

    /// The freshest visible Incumbent; older ones are discarded.
    pub fn recv_incumbent(&self) -> Option<Message> {
        let now = self.now();
        take_visible(&mut self.bus.boxes[self.rank].lock().unwrap().incumbents, now).pop()
    }

    /// Whether a visible Status message reports termination.
    pub fn recv_terminated(&self) -> bool {
        let now = self.now();
        take_visible(&mut self.bus.boxes[self.rank].lock().unwrap().status, now)
            .iter()
            .any(|m| matches!(m.payload, Payload::Status { terminated: true }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerConfig {
    pub n0: usize,
    pub delta_n: usize,
    /// Seconds between polls of the master's incumbent and status.
    pub update_time: f64,
    /// Seconds between checks whether the inner solve should be reset.
    pub reset_time: f64,
    /// Reset the inner solve when it found nothing new for this long.
    pub no_improvement_window: f64,
}

impl Default for WorkerConfig {
    fn default() -> Self {
        WorkerConfig { n0: 40, delta_n: 10, update_time: 10.0, reset_time: 20.0, no_improvement_window: 20.0 }
    }
}

impl WorkerConfig {
    pub fn with_n(n0: usize, delta_n: usize) -> Self {
        WorkerConfig { n0, delta_n, ..Default::default() }
    }

    /// Same timers scaled by `k`.
    pub fn scaled(mut self, k: f64) -> Self {
        self.update_time *= k;
        self.reset_time *= k;
        self.no_improvement_window *= k;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.delta_n < 1 {
            return Err("delta_n must be at least 1".into());
        }
        if !(self.update_time > 0.0 && self.reset_time > 0.0 && self.no_improvement_window > 0.0) {
            return Err("worker timers must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceKind {
    /// Master upper bound step; value is the incumbent source.
    Ub,
    /// Master lower bound step.
    Lb,
    /// Master verdict on a received solution.
    Injection,
    /// Worker sent a solution.
    Solution,
    /// Worker finished an inner solve; value is the next `n`.
    Iteration,
    /// Termination sent (master) or observed (worker).
    Status,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Ub => "ub",
            TraceKind::Lb => "lb",
            TraceKind::Injection => "injection",
            TraceKind::Solution => "solution",
            TraceKind::Iteration => "iteration",
            TraceKind::Status => "status",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub elapsed: f64,
    pub rank: usize,
    pub kind: TraceKind,
    pub value: String,
    pub objective: Option<f64>,
}

pub const TRACE_HEADER: &str = "elapsed_s,rank,kind,value,objective";

/// CSV rendering with fixed formatting: six decimals everywhere.
pub fn trace_csv(records: &[TraceRecord]) -> String {
    let mut s = String::new();
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in records {
        let obj = r.objective.map(|o| format!("{o:.6}")).unwrap_or_default();
        let _ = writeln!(s, "{:.6},{},{},{},{}", r.elapsed, r.rank, r.kind.as_str(), r.value, obj);
    }
    s
}

pub fn write_trace_csv(records: &[TraceRecord], mut w: impl io::Write) -> io::Result<()> {
    w.write_all(trace_csv(records).as_bytes())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkerStats {
    pub rank: usize,
    /// Completed passes through the loop.
    pub iterations: usize,
    pub solutions_sent: usize,
    pub inner_solves_reset: usize,
    /// Switchable-set sizes used, in order.
    pub n_history: Vec<usize>,
    pub first_switchable: Vec<usize>,
    pub terminated_seen_at: Option<f64>,
    /// Longest single step, for latency bounds.
    pub max_step: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MasterStats {
    pub solutions_received: usize,
    pub accepted: usize,
    pub rejected_infeasible: usize,
    pub rejected_not_better: usize,
    pub terminated_at: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub result: MipResult,
    pub solution: Option<OtspSolution>,
    pub trace: Vec<TraceRecord>,
    pub master: MasterStats,
    pub workers: Vec<WorkerStats>,
}

impl RunReport {
    pub fn z_final(&self) -> Option<f64> {
        self.result.ub()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClockMode {
    Wall,
    /// Single thread, virtual time charged per simplex iteration; ranks get
    /// a speed factor drawn from `seed`.
    Simulated { seed: u64, secs_per_iter: f64 },
}

impl ClockMode {
    pub fn simulated(seed: u64) -> Self {
        ClockMode::Simulated { seed, secs_per_iter: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mip: MipOptions,
    /// Give the master the all-lines-closed start.
    pub master_mipstart: bool,
    pub clock: ClockMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { mip: MipOptions::default(), master_mipstart: false, clock: ClockMode::Wall }
    }
}

/// Rank 0: branch-and-bound on the full model, fed by worker solutions.
pub struct Master {
    net: Arc<Network>,
    mip: Arc<MixedIntegerProgram>,
    solver: MipSolver,
    injector: Injector,
    ep: Endpoint,
    trace: Vec<TraceRecord>,
    stats: MasterStats,
    result: Option<MipResult>,
    best: Option<OtspSolution>,
}

impl Master {
    pub fn new(net: Arc<Network>, opts: &RunOptions, ep: Endpoint, clock: Arc<dyn Clock>) -> Self {
        let n = net.num_branches();
        let start = opts.master_mipstart.then(|| vec![true; n]);
        let mip = build_rotsp(&net, &Topology::all(n), &SwitchSet::all(n), start.as_deref())
            .expect("full model always builds");
        let mip = Arc::new(mip);
        let solver = MipSolver::new(Arc::clone(&mip), opts.mip.clone(), clock);
        let injector = solver.injector();
        Master {
            net,
            mip,
            solver,
            injector,
            ep,
            trace: Vec::new(),
            stats: MasterStats::default(),
            result: None,
            best: None,
        }
    }

    pub fn injector(&self) -> Injector {
        self.injector.clone()
    }

    pub fn is_finished(&self) -> bool {
        self.result.is_some()
    }

    pub fn stats(&self) -> &MasterStats {
        &self.stats
    }

    fn record(&mut self, kind: TraceKind, value: impl Into<String>, objective: Option<f64>) {
        self.trace.push(TraceRecord { elapsed: self.ep.now(), rank: 0, kind, value: value.into(), objective });
    }

    fn handle_solutions(&mut self) {
        for m in self.ep.recv_solutions() {
            let Payload::Solution(sol) = m.payload else { continue };
            self.stats.solutions_received += 1;
            let verdict = if check_feasible(&self.net, &sol, FEAS_TOL).is_empty() {
                self.injector.inject(&embed(&self.mip, &sol), sol.objective).unwrap_or(Injection::RejectedNotBetter)
            } else {
                Injection::RejectedInfeasible
            };
            let label = match verdict {
                Injection::Accepted => {
                    self.stats.accepted += 1;
                    "accepted"
                }
                Injection::RejectedInfeasible => {
                    self.stats.rejected_infeasible += 1;
                    "rejected_infeasible"
                }
                Injection::RejectedNotBetter => {
                    self.stats.rejected_not_better += 1;
                    "rejected_not_better"
                }
            };
            debug!("master: solution {:.6} from rank {} {label}", sol.objective, m.sender);
            self.record(TraceKind::Injection, format!("{label}@r{}", m.sender), Some(sol.objective));
        }
    }

    fn handle_events(&mut self) {
        let events: Vec<SolverEvent> = self.solver.drain_events().collect();
        for ev in events {
            match ev {
                SolverEvent::NewIncumbent { objective, values, source, .. } => {
                    self.record(TraceKind::Ub, source.as_str(), Some(objective));
                    let n = self.net.num_branches();
                    match lift_rotsp(&self.net, &Topology::all(n), &SwitchSet::all(n), &self.mip, &values) {
                        Ok(sol) => {
                            self.ep.broadcast(Payload::Incumbent(sol.clone()));
                            self.best = Some(sol);
                        }
                        Err(e) => warn!("master incumbent could not be lifted: {e}"),
                    }
                }
                SolverEvent::BoundImproved { lb, .. } => self.record(TraceKind::Lb, "", Some(lb)),
                SolverEvent::Finished { status, .. } => {
                    self.ep.broadcast(Payload::Status { terminated: true });
                    self.stats.terminated_at = Some(self.ep.now());
                    self.record(TraceKind::Status, format!("{status:?}"), self.solver.upper_bound());
                }
                SolverEvent::RejectedStart { reason, .. } => warn!("master start rejected: {reason}"),
                SolverEvent::Heartbeat { .. } => {}
            }
        }
    }

    /// One node of the master's tree plus message handling.
    pub fn step(&mut self) -> bool {
        if self.result.is_some() {
            return false;
        }
        self.handle_solutions();
        let alive = self.solver.step();
        self.handle_events();
        if !alive {
            let r = self.solver.result();
            info!("master finished: {:?} ub={:?} lb={:?} nodes={}", r.status, r.ub(), r.lb, r.nodes);
            self.result = Some(r);
        }
        alive
    }

    fn into_parts(self) -> (MipResult, Option<OtspSolution>, Vec<TraceRecord>, MasterStats) {
        let result = self.result.unwrap_or_else(|| self.solver.result());
        (result, self.best, self.trace, self.stats)
    }
}

/// Run rank 0 alone against an already wired bus until it terminates.
pub fn run_master(net: Arc<Network>, opts: &RunOptions, ep: Endpoint, clock: Arc<dyn Clock>) -> MipResult {
    let mut m = Master::new(net, opts, ep, clock);
    while m.step() {}
    m.into_parts().0
}

struct Inner {
    solver: MipSolver,
    abort: AbortHandle,
    ea: Topology,
    es: SwitchSet,
    mip: Arc<MixedIntegerProgram>,
    last_improvement: f64,
    last_reset_check: f64,
}

/// Rank j: the restricted-model loop.
pub struct Worker {
    rank: usize,
    net: Arc<Network>,
    cfg: WorkerConfig,
    mip_opts: MipOptions,
    ep: Endpoint,
    clock: Arc<dyn Clock>,
    n: usize,
    ea: Topology,
    es: SwitchSet,
    list: Option<PriorityList>,
    global: Option<OtspSolution>,
    global_ub: f64,
    best_sent: f64,
    inner: Option<Inner>,
    last_poll: f64,
    started: bool,
    done: bool,
    /// Full model solved to optimality; only wait for termination.
    exhausted: bool,
    stats: WorkerStats,
    trace: Vec<TraceRecord>,
}

impl Worker {
    pub fn new(
        net: Arc<Network>,
        cfg: WorkerConfig,
        mip_opts: &MipOptions,
        ep: Endpoint,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let rank = ep.rank();
        let nl = net.num_branches();
        let mip_opts = MipOptions { time_limit: f64::INFINITY, node_limit: None, ..mip_opts.clone() };
        Worker {
            rank,
            n: cfg.n0.min(nl),
            net,
            cfg,
            mip_opts,
            ep,
            clock,
            ea: Topology::all(nl),
            es: SwitchSet::empty(),
            list: None,
            global: None,
            global_ub: f64::INFINITY,
            best_sent: f64::INFINITY,
            inner: None,
            last_poll: 0.0,
            started: false,
            done: false,
            exhausted: false,
            stats: WorkerStats { rank, ..Default::default() },
            trace: Vec::new(),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.done
    }

    pub fn stats(&self) -> &WorkerStats {
        &self.stats
    }

    fn now(&self) -> f64 {
        self.clock.now()
    }

    fn record(&mut self, kind: TraceKind, value: impl Into<String>, objective: Option<f64>) {
        self.trace.push(TraceRecord { elapsed: self.now(), rank: self.rank, kind, value: value.into(), objective });
    }

    fn simplex_opts(&self) -> SimplexOptions {
        self.mip_opts.simplex.clone()
    }

    /// Priority list from the sDCOPF on `ea`; `None` if it has no solution.
    fn prioritize(&mut self, ea: &Topology) -> Option<(PriorityList, OtspSolution)> {
        let d = match solve_sdcopf(&self.net, ea, &self.simplex_opts()) {
            Ok(d) => d,
            Err(e) => {
                warn!("rank {}: sDCOPF failed: {e}", self.rank);
                None
            }
        };
        let Some(d) = d else {
            self.clock.charge(1);
            return None;
        };
        self.clock.charge(d.iterations);
        let alpha = lpsc(&self.net, &d.solution.f, &d.prices).expect("shapes match the network");
        Some((build_priority_list(&alpha), d.solution))
    }

    fn send_solution(&mut self, sol: OtspSolution) {
        let violations = check_feasible(&self.net, &sol, FEAS_TOL);
        if !violations.is_empty() {
            warn!("rank {}: withholding infeasible solution ({} violations)", self.rank, violations.len());
            return;
        }
        self.record(TraceKind::Solution, format!("n={}", self.es.len()), Some(sol.objective));
        self.best_sent = self.best_sent.min(sol.objective);
        self.stats.solutions_sent += 1;
        self.ep.send(0, Payload::Solution(sol));
    }

    fn initialize(&mut self) {
        let nl = self.net.num_branches();
        self.ea = Topology::all(nl);
        match self.prioritize(&Topology::all(nl)) {
            Some((list, sol)) => {
                self.send_solution(sol);
                self.es = select_switchable(&list, self.n);
                self.list = Some(list);
            }
            None => {
                // no dispatch with every line closed: fall back to id order
                warn!("rank {}: all-lines DC OPF has no solution", self.rank);
                let list = build_priority_list(&vec![0.0; nl]);
                self.es = select_switchable(&list, self.n);
                self.list = Some(list);
            }
        }
        self.stats.first_switchable = self.es.ids().iter().map(|e| e.0).collect();
    }

    fn poll(&mut self) {
        self.last_poll = self.now();
        if let Some(m) = self.ep.recv_incumbent() {
            if let Payload::Incumbent(sol) = m.payload {
                self.global_ub = self.global_ub.min(sol.objective);
                self.global = Some(sol);
            }
        }
        if self.ep.recv_terminated() {
            self.stats.terminated_seen_at = Some(self.now());
            self.record(TraceKind::Status, "terminated", None);
            if let Some(inner) = &self.inner {
                inner.abort.abort();
            }
            self.inner = None;
            self.done = true;
        }
    }

    fn start_inner(&mut self) {
        // adopt the freshest global topology
        self.poll();
        if self.done {
            return;
        }
        if let Some(g) = &self.global {
            self.ea = g.topology();
        }
        let start: Vec<bool> = self.es.ids().iter().map(|&e| self.ea.contains(e)).collect();
        // restricted model with the start
        let mip = match build_rotsp(&self.net, &self.ea, &self.es, Some(&start)) {
            Ok(m) => Arc::new(m),
            Err(e) => {
                warn!("rank {}: {e}", self.rank);
                self.done = true;
                return;
            }
        };
        let solver = MipSolver::new(Arc::clone(&mip), self.mip_opts.clone(), Arc::clone(&self.clock));
        let abort = solver.abort_handle();
        self.stats.n_history.push(self.es.len());
        debug!("rank {}: inner solve with |EA|={} |ES|={}", self.rank, self.ea.count(), self.es.len());
        let now = self.now();
        self.inner = Some(Inner {
            solver,
            abort,
            ea: self.ea.clone(),
            es: self.es.clone(),
            mip,
            last_improvement: now,
            last_reset_check: now,
        });
    }

    fn finish_inner(&mut self, result: MipResult, aborted: bool) {
        let full = self.es.len() == self.net.num_branches();
        if full && result.status == MipStatus::Optimal && !aborted {
            self.exhausted = true;
        }
        // widen, re-centre, re-prioritize
        self.n = (self.n + self.cfg.delta_n).min(self.net.num_branches());
        if let Some(g) = &self.global {
            self.ea = g.topology();
        }
        let ea = self.ea.clone();
        match self.prioritize(&ea) {
            Some((list, _)) => self.list = Some(list),
            None => debug!("rank {}: keeping previous priority list", self.rank),
        }
        if let Some(list) = &self.list {
            self.es = select_switchable(list, self.n);
        }
        self.stats.iterations += 1;
        self.record(TraceKind::Iteration, format!("n={}", self.n), result.ub());
    }

    /// One bounded unit of work. Returns `false` once the worker has stopped.
    pub fn step(&mut self) -> bool {
        if self.done {
            return false;
        }
        let t0 = self.now();
        if !self.started {
            self.started = true;
            self.initialize();
            self.last_poll = self.now();
        } else if self.exhausted {
            // nothing left to search; wake up once per polling period
            self.clock.idle_until(self.last_poll + self.cfg.update_time);
            if self.now() - self.last_poll >= self.cfg.update_time {
                self.poll();
            }
        } else if self.inner.is_none() {
            self.start_inner();
        } else {
            self.inner_step();
        }
        self.stats.max_step = self.stats.max_step.max(self.now() - t0);
        !self.done
    }

    fn inner_step(&mut self) {
        // periodic poll of incumbent and status
        if self.now() - self.last_poll >= self.cfg.update_time {
            self.poll();
            if self.done {
                return;
            }
        }
        let mut inner = self.inner.take().expect("inner solve present");
        // periodic reset check
        let now = self.now();
        if now - inner.last_reset_check >= self.cfg.reset_time {
            inner.last_reset_check = now;
            let lb = inner.solver.lower_bound();
            let dominated = lb.is_some_and(|l| l >= self.global_ub - self.mip_opts.prune_tol);
            let stale = now - inner.last_improvement >= self.cfg.no_improvement_window;
            if dominated || stale {
                debug!("rank {}: resetting inner solve (dominated={dominated}, stale={stale})", self.rank);
                inner.abort.abort();
                self.stats.inner_solves_reset += 1;
            }
        }
        let alive = inner.solver.step();
        let events: Vec<SolverEvent> = inner.solver.drain_events().collect();
        for ev in events {
            if let SolverEvent::NewIncumbent { objective, values, source, .. } = ev {
                inner.last_improvement = self.now();
                // forward improvements over the global bound, each point once
                let bar = self.global_ub.min(self.best_sent) - self.mip_opts.prune_tol;
                if objective < bar {
                    debug!("rank {}: inner incumbent {objective:.6} from {}", self.rank, source.as_str());
                    match lift_rotsp(&self.net, &inner.ea, &inner.es, &inner.mip, &values) {
                        Ok(sol) => self.send_solution(sol),
                        Err(e) => warn!("rank {}: lift failed: {e}", self.rank),
                    }
                }
            }
        }
        if alive {
            self.inner = Some(inner);
        } else {
            let r = inner.solver.result();
            let aborted = r.aborted;
            self.finish_inner(r, aborted);
        }
    }

    fn into_parts(self) -> (WorkerStats, Vec<TraceRecord>) {
        (self.stats, self.trace)
    }
}

/// Run rank `j` alone against an already wired bus until the master stops.
pub fn run_worker(
    net: Arc<Network>,
    cfg: WorkerConfig,
    mip_opts: &MipOptions,
    ep: Endpoint,
    clock: Arc<dyn Clock>,
) -> WorkerStats {
    let mut w = Worker::new(net, cfg, mip_opts, ep, clock);
    while w.step() {}
    w.into_parts().0
}

/// Master plus one worker per config, wired over a fresh bus.
pub fn run_parallel(net: Arc<Network>, opts: &RunOptions, workers: &[WorkerConfig]) -> RunReport {
    let ranks = workers.len() + 1;
    let bus = MessageBus::new(ranks);
    match opts.clock {
        ClockMode::Wall => {
            let clock: Arc<dyn Clock> = Arc::new(WallClock::new());
            let mut master = Master::new(Arc::clone(&net), opts, bus.endpoint(0, Arc::clone(&clock)), Arc::clone(&clock));
            let parts = std::thread::scope(|s| {
                let handles: Vec<_> = workers
                    .iter()
                    .enumerate()
                    .map(|(i, cfg)| {
                        let mut w = Worker::new(
                            Arc::clone(&net),
                            cfg.clone(),
                            &opts.mip,
                            bus.endpoint(i + 1, Arc::clone(&clock)),
                            Arc::clone(&clock),
                        );
                        s.spawn(move || {
                            while w.step() {}
                            w.into_parts()
                        })
                    })
                    .collect();
                while master.step() {}
                handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect::<Vec<_>>()
            });
            assemble(master, parts)
        }
        ClockMode::Simulated { seed, secs_per_iter } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let clocks: Vec<VirtualClock> =
                (0..ranks).map(|_| VirtualClock::new(secs_per_iter * rng.random_range(0.8..1.25))).collect();
            let dynclock = |r: usize| -> Arc<dyn Clock> { Arc::new(clocks[r].clone()) };
            let mut master = Master::new(Arc::clone(&net), opts, bus.endpoint(0, dynclock(0)), dynclock(0));
            let mut ws: Vec<Worker> = workers
                .iter()
                .enumerate()
                .map(|(i, cfg)| {
                    Worker::new(Arc::clone(&net), cfg.clone(), &opts.mip, bus.endpoint(i + 1, dynclock(i + 1)), dynclock(i + 1))
                })
                .collect();
            loop {
                // the rank furthest behind moves next, lowest rank on ties
                let mut pick: Option<(usize, f64)> = None;
                if !master.is_finished() {
                    pick = Some((0, clocks[0].now()));
                }
                for (i, w) in ws.iter().enumerate() {
                    let t = clocks[i + 1].now();
                    if !w.is_finished() && pick.is_none_or(|(_, best)| t < best) {
                        pick = Some((i + 1, t));
                    }
                }
                match pick {
                    None => break,
                    Some((0, _)) => {
                        master.step();
                    }
                    Some((r, _)) => {
                        ws[r - 1].step();
                    }
                }
            }
            let parts = ws.into_iter().map(|w| w.into_parts()).collect();
            assemble(master, parts)
        }
    }
}

fn assemble(master: Master, parts: Vec<(WorkerStats, Vec<TraceRecord>)>) -> RunReport {
    let (result, solution, mut trace, master_stats) = master.into_parts();
    let mut workers = Vec::new();
    for (stats, t) in parts {
        trace.extend(t);
        workers.push(stats);
    }
    // stable: records of one rank keep their order
    trace.sort_by(|a, b| a.elapsed.total_cmp(&b.elapsed).then(a.rank.cmp(&b.rank)));
    RunReport { result, solution, trace, master: master_stats, workers }
}
