//! Model builders for the switching problem and its restrictions, plus the
//! lifting maps that turn restricted solutions into full-network ones.
//!
//! Balance rows are written `sum p - sum_{from} f + sum_{to} f = d` so that
//! their duals are the nodal prices with the usual sign.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, MixedIntegerProgram, RowTag, Sense, VarId, VarTag};
use crate::network::{BranchId, BusId, GenId, Network};
use crate::simplex::{solve_lp, LpResult, LpStatus, SimplexError, SimplexOptions};

/// Tolerance used when a lifted point is checked before it is handed out.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("mipstart has {got} entries but the model has {expected} switchable lines")]
    MipstartShapeMismatch { expected: usize, got: usize },
    #[error("source solution is not feasible: {0}")]
    SourceNotFeasible(String),
    #[error("{0} is not a branch of this network")]
    UnknownBranch(BranchId),
}

/// The active-line set: a membership mask over every branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    active: Vec<bool>,
}

impl Topology {
    pub fn all(num_branches: usize) -> Self {
        Topology { active: vec![true; num_branches] }
    }

    pub fn none(num_branches: usize) -> Self {
        Topology { active: vec![false; num_branches] }
    }

    pub fn from_mask(active: Vec<bool>) -> Self {
        Topology { active }
    }

    pub fn from_ids(num_branches: usize, ids: impl IntoIterator<Item = BranchId>) -> Self {
        let mut active = vec![false; num_branches];
        for e in ids {
            active[e.0] = true;
        }
        Topology { active }
    }

    /// `{e : x_e = 1}` for a switching vector.
    pub fn from_switching(x: &[bool]) -> Self {
        Topology { active: x.to_vec() }
    }

    pub fn contains(&self, e: BranchId) -> bool {
        self.active[e.0]
    }

    /// The indicator vector.
    pub fn mask(&self) -> &[bool] {
        &self.active
    }

    pub fn ids(&self) -> impl Iterator<Item = BranchId> + '_ {
        self.active.iter().enumerate().filter(|(_, a)| **a).map(|(i, _)| BranchId(i))
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn num_branches(&self) -> usize {
        self.active.len()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.ids().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

/// Ordered switchable-line set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SwitchSet {
    switchable: Vec<BranchId>,
}

impl SwitchSet {
    pub fn empty() -> Self {
        SwitchSet::default()
    }

    pub fn all(num_branches: usize) -> Self {
        SwitchSet { switchable: (0..num_branches).map(BranchId).collect() }
    }

    /// Keeps first occurrences only.
    pub fn new(ids: impl IntoIterator<Item = BranchId>) -> Self {
        let mut switchable: Vec<BranchId> = Vec::new();
        for e in ids {
            if !switchable.contains(&e) {
                switchable.push(e);
            }
        }
        SwitchSet { switchable }
    }

    pub fn ids(&self) -> &[BranchId] {
        &self.switchable
    }

    pub fn len(&self) -> usize {
        self.switchable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.switchable.is_empty()
    }

    pub fn contains(&self, e: BranchId) -> bool {
        self.switchable.contains(&e)
    }

    pub fn mask(&self, num_branches: usize) -> Vec<bool> {
        let mut m = vec![false; num_branches];
        for e in &self.switchable {
            m[e.0] = true;
        }
        m
    }

    pub fn is_subset_of(&self, other: &SwitchSet) -> bool {
        self.switchable.iter().all(|e| other.contains(*e))
    }
}

/// A full-network point of the unrestricted switching model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtspSolution {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    pub theta: Vec<f64>,
    pub x: Vec<bool>,
    pub objective: f64,
}

impl OtspSolution {
    pub fn topology(&self) -> Topology {
        Topology::from_switching(&self.x)
    }
}

fn add_gen_and_angle_columns(net: &Network, lp: &mut LinearProgram) {
    for g in net.gen_ids() {
        let gen = net.generator(g);
        lp.add_var(VarTag::Gen(g), gen.p_min, gen.p_max, gen.cost_linear);
    }
    for v in net.bus_ids() {
        lp.add_var(VarTag::Angle(v), net.theta_min(), net.theta_max(), 0.0);
    }
    lp.set_objective_constant(net.generators().iter().map(|g| g.cost_constant).sum());
}

fn balance_row(net: &Network, lp: &mut LinearProgram, v: BusId, present: &dyn Fn(BranchId) -> bool) {
    let mut coeffs = Vec::new();
    for &g in net.generators_at(v) {
        coeffs.push((lp.var(VarTag::Gen(g)).unwrap(), 1.0));
    }
    for &e in net.lines_from(v) {
        if present(e) {
            coeffs.push((lp.var(VarTag::Flow(e)).unwrap(), -1.0));
        }
    }
    for &e in net.lines_to(v) {
        if present(e) {
            coeffs.push((lp.var(VarTag::Flow(e)).unwrap(), 1.0));
        }
    }
    lp.add_row(RowTag::Balance(v), coeffs, Sense::Eq, net.bus(v).demand);
}

fn angle_diff(net: &Network, lp: &LinearProgram, e: BranchId) -> Vec<(VarId, f64)> {
    let br = net.branch(e);
    vec![
        (lp.var(VarTag::Angle(br.from)).unwrap(), br.susceptance),
        (lp.var(VarTag::Angle(br.to)).unwrap(), -br.susceptance),
    ]
}

fn flow_def_row(net: &Network, lp: &mut LinearProgram, e: BranchId) {
    let f = lp.var(VarTag::Flow(e)).unwrap();
    let mut c = angle_diff(net, lp, e);
    c.push((f, -1.0));
    lp.add_row(RowTag::FlowDef(e), c, Sense::Eq, 0.0);
}

fn switched_rows(net: &Network, lp: &mut LinearProgram, e: BranchId) {
    let f = lp.var(VarTag::Flow(e)).unwrap();
    let x = lp.var(VarTag::Switch(e)).unwrap();
    let m = net.big_m(e);
    let cap = net.branch(e).capacity;
    let mut lo = angle_diff(net, lp, e);
    lo.extend([(f, -1.0), (x, -m)]);
    lp.add_row(RowTag::BigMLower(e), lo, Sense::Ge, -m);
    let mut up = angle_diff(net, lp, e);
    up.extend([(f, -1.0), (x, m)]);
    lp.add_row(RowTag::BigMUpper(e), up, Sense::Le, m);
    lp.add_row(RowTag::CapUpper(e), vec![(f, 1.0), (x, -cap)], Sense::Le, 0.0);
    lp.add_row(RowTag::CapLower(e), vec![(f, 1.0), (x, cap)], Sense::Ge, 0.0);
}

/// Static-topology DC OPF on the lines of `ea`.
pub fn build_sdcopf(net: &Network, ea: &Topology) -> LinearProgram {
    let mut lp = LinearProgram::new();
    add_gen_and_angle_columns(net, &mut lp);
    for e in ea.ids() {
        let cap = net.branch(e).capacity;
        lp.add_var(VarTag::Flow(e), -cap, cap, 0.0);
    }
    for v in net.bus_ids() {
        balance_row(net, &mut lp, v, &|e| ea.contains(e));
    }
    for e in ea.ids() {
        flow_def_row(net, &mut lp, e);
    }
    lp
}

/// Full switching model: every line carries a binary.
pub fn build_otsp(net: &Network) -> MixedIntegerProgram {
    let mut lp = LinearProgram::new();
    add_gen_and_angle_columns(net, &mut lp);
    for e in net.branch_ids() {
        let cap = net.branch(e).capacity;
        lp.add_var(VarTag::Flow(e), -cap, cap, 0.0);
    }
    let mut binaries = Vec::new();
    for e in net.branch_ids() {
        binaries.push(lp.add_var(VarTag::Switch(e), 0.0, 1.0, 0.0));
    }
    for v in net.bus_ids() {
        balance_row(net, &mut lp, v, &|_| true);
    }
    for e in net.branch_ids() {
        switched_rows(net, &mut lp, e);
    }
    MixedIntegerProgram::new(lp, binaries)
}

/// Restricted switching model: lines in `es` are switchable, other lines in
/// `ea` are fixed closed, the rest do not appear at all.
///
/// `mipstart` holds one entry per line of `es`, in `es` order.
pub fn build_rotsp(
    net: &Network,
    ea: &Topology,
    es: &SwitchSet,
    mipstart: Option<&[bool]>,
) -> Result<MixedIntegerProgram, ModelError> {
    let nl = net.num_branches();
    if let Some(&e) = es.ids().iter().find(|e| e.0 >= nl) {
        return Err(ModelError::UnknownBranch(e));
    }
    if let Some(ms) = mipstart {
        if ms.len() != es.len() {
            return Err(ModelError::MipstartShapeMismatch { expected: es.len(), got: ms.len() });
        }
    }
    let switchable = es.mask(nl);
    let present = |e: BranchId| ea.contains(e) || switchable[e.0];
    let mut lp = LinearProgram::new();
    add_gen_and_angle_columns(net, &mut lp);
    for e in net.branch_ids().filter(|&e| present(e)) {
        let cap = net.branch(e).capacity;
        lp.add_var(VarTag::Flow(e), -cap, cap, 0.0);
    }
    let mut binaries = Vec::new();
    for &e in es.ids() {
        binaries.push(lp.add_var(VarTag::Switch(e), 0.0, 1.0, 0.0));
    }
    for v in net.bus_ids() {
        balance_row(net, &mut lp, v, &present);
    }
    for e in net.branch_ids() {
        if switchable[e.0] {
            switched_rows(net, &mut lp, e);
        } else if ea.contains(e) {
            flow_def_row(net, &mut lp, e);
        }
    }
    let mut mip = MixedIntegerProgram::new(lp, binaries);
    mip.mipstart = mipstart.map(|m| m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
    Ok(mip)
}

fn column(lp: &LinearProgram, values: &[f64], tag: VarTag) -> f64 {
    lp.var(tag).map(|v| values[v.0]).unwrap_or(0.0)
}

/// Full-network point from an sDCOPF optimum: lines outside `ea` are open
/// and carry no flow.
pub fn lift_sdcopf(
    net: &Network,
    ea: &Topology,
    lp: &LinearProgram,
    result: &LpResult,
) -> Result<OtspSolution, ModelError> {
    if result.status != LpStatus::Optimal {
        return Err(ModelError::SourceNotFeasible(format!("lp status {:?}", result.status)));
    }
    let viol = lp.max_violation(&result.primal);
    if viol > FEAS_TOL {
        return Err(ModelError::SourceNotFeasible(format!("max violation {viol:e}")));
    }
    let x = ea.mask().to_vec();
    Ok(extract(net, lp, &result.primal, x, lp.objective_value(&result.primal)))
}

/// Full-network point from a restricted-model solution: switchable lines
/// keep their decisions, the rest follow `ea`.
pub fn lift_rotsp(
    net: &Network,
    ea: &Topology,
    es: &SwitchSet,
    mip: &MixedIntegerProgram,
    values: &[f64],
) -> Result<OtspSolution, ModelError> {
    if !mip.is_feasible(values, FEAS_TOL) {
        return Err(ModelError::SourceNotFeasible(format!(
            "max violation {:e}",
            if values.len() == mip.lp.num_vars() { mip.lp.max_violation(values) } else { f64::NAN }
        )));
    }
    let lp = &mip.lp;
    let x: Vec<bool> = net
        .branch_ids()
        .map(|e| {
            if es.contains(e) {
                column(lp, values, VarTag::Switch(e)) > 0.5
            } else {
                ea.contains(e)
            }
        })
        .collect();
    Ok(extract(net, lp, values, x, lp.objective_value(values)))
}

fn extract(net: &Network, lp: &LinearProgram, values: &[f64], x: Vec<bool>, objective: f64) -> OtspSolution {
    let p = net.gen_ids().map(|g| column(lp, values, VarTag::Gen(g))).collect();
    let theta = net.bus_ids().map(|v| column(lp, values, VarTag::Angle(v))).collect();
    let f = net
        .branch_ids()
        .map(|e| if x[e.0] { column(lp, values, VarTag::Flow(e)) } else { 0.0 })
        .collect();
    OtspSolution { p, f, theta, x, objective }
}

/// Column vector of `mip` that represents `sol`; switching columns absent
/// from the model are ignored.
pub fn embed(mip: &MixedIntegerProgram, sol: &OtspSolution) -> Vec<f64> {
    mip.lp
        .vars()
        .iter()
        .map(|v| match v.tag {
            VarTag::Gen(GenId(g)) => sol.p[g],
            VarTag::Angle(BusId(b)) => sol.theta[b],
            VarTag::Flow(BranchId(e)) => sol.f[e],
            VarTag::Switch(BranchId(e)) => {
                if sol.x[e] {
                    1.0
                } else {
                    0.0
                }
            }
            VarTag::Aux(_) => 0.0,
        })
        .collect()
}

/// Which constraint of the full switching model a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Shape,
    Balance(BusId),
    /// `b dtheta + (1 - x) M >= f`.
    FlowLower(BranchId),
    /// `b dtheta <= f + (1 - x) M`.
    FlowUpper(BranchId),
    /// `|f| <= cap x`.
    Capacity(BranchId),
    Generation(GenId),
    Angle(BusId),
    Objective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub magnitude: f64,
}

/// Every constraint of the full switching model violated by more than `tol`.
pub fn check_feasible(net: &Network, sol: &OtspSolution, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |constraint, magnitude: f64| {
        if magnitude > tol || magnitude.is_nan() {
            out.push(Violation { constraint, magnitude });
        }
    };
    if sol.p.len() != net.num_generators()
        || sol.theta.len() != net.num_buses()
        || sol.f.len() != net.num_branches()
        || sol.x.len() != net.num_branches()
    {
        push(Constraint::Shape, f64::INFINITY);
        return out;
    }
    for v in net.bus_ids() {
        let gen: f64 = net.generators_at(v).iter().map(|g| sol.p[g.0]).sum();
        let out_f: f64 = net.lines_from(v).iter().map(|e| sol.f[e.0]).sum();
        let in_f: f64 = net.lines_to(v).iter().map(|e| sol.f[e.0]).sum();
        push(Constraint::Balance(v), (out_f - in_f - gen + net.bus(v).demand).abs());
    }
    for e in net.branch_ids() {
        let br = net.branch(e);
        let m = net.big_m(e);
        let slack = if sol.x[e.0] { 0.0 } else { m };
        let flow_angle = br.susceptance * (sol.theta[br.from.0] - sol.theta[br.to.0]);
        push(Constraint::FlowLower(e), sol.f[e.0] - flow_angle - slack);
        push(Constraint::FlowUpper(e), flow_angle - sol.f[e.0] - slack);
        let cap = if sol.x[e.0] { br.capacity } else { 0.0 };
        push(Constraint::Capacity(e), sol.f[e.0].abs() - cap);
    }
    for g in net.gen_ids() {
        let gen = net.generator(g);
        let p = sol.p[g.0];
        push(Constraint::Generation(g), (gen.p_min - p).max(p - gen.p_max));
    }
    for v in net.bus_ids() {
        let t = sol.theta[v.0];
        push(Constraint::Angle(v), (net.theta_min() - t).max(t - net.theta_max()));
    }
    let z = net.generation_cost(&sol.p);
    push(Constraint::Objective, (z - sol.objective).abs() / z.abs().max(1.0));
    out
}

/// Nodal prices: the balance-row duals, one per bus.
pub fn nodal_prices(net: &Network, lp: &LinearProgram, result: &LpResult) -> Vec<f64> {
    net.bus_ids()
        .map(|v| lp.row(RowTag::Balance(v)).map(|r| result.duals[r.0]).unwrap_or(0.0))
        .collect()
}

/// A solved static-topology DC OPF, lifted to the full network.
#[derive(Debug, Clone)]
pub struct Dcopf {
    pub solution: OtspSolution,
    pub prices: Vec<f64>,
    pub iterations: usize,
}

/// Build, solve and lift the sDCOPF on `ea`; `None` if it has no solution.
pub fn solve_sdcopf(net: &Network, ea: &Topology, opts: &SimplexOptions) -> Result<Option<Dcopf>, SimplexError> {
    let lp = build_sdcopf(net, ea);
    let res = solve_lp(&lp, opts)?;
    if res.status != LpStatus::Optimal {
        return Ok(None);
    }
    match lift_sdcopf(net, ea, &lp, &res) {
        Ok(solution) => Ok(Some(Dcopf { prices: nodal_prices(net, &lp, &res), solution, iterations: res.iterations })),
        Err(_) => Ok(None),
    }
}
