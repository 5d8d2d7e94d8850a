//! Bounded-variable primal revised simplex.
//!
//! Every row `a'x (<=|=|>=) b` gets a logical column `s` with `a'x + s = b`
//! and bounds `[0, inf)`, `[0, 0]` or `(-inf, 0]` respectively, so the
//! all-logical basis is always available as a start. Phase 1 minimises the
//! sum of basic bound violations (composite pricing), phase 2 the true
//! objective. The basis inverse is held densely and refactorised
//! periodically; logical columns are exploited so only the structural block
//! is inverted.
//!
//! Dual sign convention (minimisation): `y = c_B' B^-1`, so a `<=` row has
//! `y <= 0`, a `>=` row `y >= 0` and an equality row is sign-free. For the
//! balance rows built in [`crate::model`] `y` is the nodal price.

use log::trace;

use crate::lp::{LinearProgram, Sense, VarId};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Primal feasibility tolerance.
    pub feas_tol: f64,
    /// Reduced-cost tolerance.
    pub opt_tol: f64,
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    /// Iteration cap; `0` means `50 * (rows + cols) + 1000`.
    pub max_iters: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iters: 0,
            refactor_every: 100,
            bland_after: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The cap was hit; `primal` holds the last basic solution.
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// One value per structural column.
    pub primal: Vec<f64>,
    /// One value per row.
    pub duals: Vec<f64>,
    /// `c_j - y'a_j` per structural column.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("basis stayed singular after repair")]
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// A reusable simplex workspace over one LP shape.
///
/// Column bounds can be changed between solves; the previous basis is kept
/// as the warm start.
#[derive(Debug, Clone)]
pub struct Simplex {
    opts: SimplexOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    constant: f64,
    status: Vec<Status>,
    head: Vec<usize>,
    x: Vec<f64>,
    binv: Vec<f64>,
    since_refactor: usize,
    needs_refactor: bool,
    total_iterations: usize,
}

const NONE: usize = usize::MAX;

impl Simplex {
    pub fn new(lp: &LinearProgram, opts: SimplexOptions) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, r) in lp.rows().iter().enumerate() {
            for &(VarId(j), a) in &r.coeffs {
                per_col[j].push((i, a));
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        col_start.push(0);
        for c in per_col {
            for (i, a) in c {
                col_row.push(i);
                col_val.push(a);
            }
            col_start.push(col_row.len());
        }
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for v in lp.vars() {
            lo.push(v.lower);
            up.push(v.upper);
            cost.push(v.cost);
        }
        for r in lp.rows() {
            let (l, u) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Eq => (0.0, 0.0),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
            };
            lo.push(l);
            up.push(u);
            cost.push(0.0);
        }
        let rhs = lp.rows().iter().map(|r| r.rhs).collect();
        let mut s = Simplex {
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            rhs,
            lo,
            up,
            cost,
            constant: lp.objective_constant(),
            status: vec![Status::AtLower; n + m],
            head: (n..n + m).collect(),
            x: vec![0.0; n + m],
            binv: Vec::new(),
            since_refactor: 0,
            needs_refactor: true,
            total_iterations: 0,
        };
        for j in 0..n {
            s.status[j] = s.nonbasic_status_for(j);
        }
        for j in n..n + m {
            s.status[j] = Status::Basic;
        }
        s
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn bounds(&self, v: VarId) -> (f64, f64) {
        (self.lo[v.0], self.up[v.0])
    }

    /// Change the bounds of a structural column; takes effect on the next solve.
    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        let j = v.0;
        assert!(j < self.n && lower <= upper);
        self.lo[j] = lower;
        self.up[j] = upper;
        if self.status[j] != Status::Basic {
            self.status[j] = match self.status[j] {
                Status::AtUpper if upper.is_finite() => Status::AtUpper,
                _ => self.nonbasic_status_for(j),
            };
        }
    }

    fn nonbasic_status_for(&self, j: usize) -> Status {
        if self.lo[j].is_finite() {
            Status::AtLower
        } else if self.up[j].is_finite() {
            Status::AtUpper
        } else {
            Status::Free
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::AtLower => self.lo[j],
            Status::AtUpper => self.up[j],
            Status::Free => 0.0,
            Status::Basic => self.x[j],
        }
    }

    /// Visit the nonzeros of column `j` (structural or logical).
    #[inline]
    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else {
            f(j - self.n, 1.0);
        }
    }

    #[inline]
    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for k in self.col_start[j]..self.col_start[j + 1] {
                s += y[self.col_row[k]] * self.col_val[k];
            }
            s
        } else {
            y[j - self.n]
        }
    }

    /// Rebuild the dense inverse from the current basis header, repairing
    /// dependent structural columns by swapping in logicals.
    fn refactor(&mut self) -> Result<(), SimplexError> {
        for _attempt in 0..3 {
            match self.try_refactor() {
                Ok(()) => {
                    self.since_refactor = 0;
                    self.needs_refactor = false;
                    self.recompute_basic_values();
                    return Ok(());
                }
                Err(dropped) => {
                    trace!("basis repair: dropping {} dependent columns", dropped.len());
                }
            }
        }
        Err(SimplexError::NumericalFailure)
    }

    fn try_refactor(&mut self) -> Result<(), Vec<usize>> {
        let m = self.m;
        let n = self.n;
        // rows whose logical is basic need no pivoting
        let mut covered = vec![false; m];
        let mut structural_pos = Vec::new();
        for (p, &j) in self.head.iter().enumerate() {
            if j >= n {
                covered[j - n] = true;
            } else {
                structural_pos.push(p);
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
        let k = structural_pos.len();
        debug_assert_eq!(free_rows.len(), k);
        let mut row_slot = vec![NONE; m];
        for (r, &i) in free_rows.iter().enumerate() {
            row_slot[i] = r;
        }
        // dense k x k block C_R, rows = free rows, cols = structural basics
        let mut c = vec![0.0; k * k];
        for (cidx, &p) in structural_pos.iter().enumerate() {
            let j = self.head[p];
            for t in self.col_start[j]..self.col_start[j + 1] {
                let r = row_slot[self.col_row[t]];
                if r != NONE {
                    c[r * k + cidx] = self.col_val[t];
                }
            }
        }
        // Gauss-Jordan inverse with partial pivoting; `inv` ends as C_R^-1
        // with rows indexed by structural column and columns by free row.
        let mut inv = vec![0.0; k * k];
        for i in 0..k {
            inv[i * k + i] = 1.0;
        }
        let mut row_perm: Vec<usize> = (0..k).collect();
        let mut dropped = Vec::new();
        let scale: f64 = c.iter().fold(0.0, |a: f64, v| a.max(v.abs())).max(1.0);
        for col in 0..k {
            let mut best = col;
            let mut best_val = 0.0;
            for r in col..k {
                let v = c[r * k + col].abs();
                if v > best_val {
                    best_val = v;
                    best = r;
                }
            }
            if best_val <= 1e-11 * scale {
                dropped.push(col);
                continue;
            }
            if best != col {
                for t in 0..k {
                    c.swap(best * k + t, col * k + t);
                    inv.swap(best * k + t, col * k + t);
                }
                row_perm.swap(best, col);
            }
            let piv = c[col * k + col];
            let pinv = 1.0 / piv;
            for t in 0..k {
                c[col * k + t] *= pinv;
                inv[col * k + t] *= pinv;
            }
            for r in 0..k {
                if r == col {
                    continue;
                }
                let f = c[r * k + col];
                if f == 0.0 {
                    continue;
                }
                for t in col..k {
                    c[r * k + t] -= f * c[col * k + t];
                }
                for t in 0..k {
                    inv[r * k + t] -= f * inv[col * k + t];
                }
            }
        }
        if !dropped.is_empty() {
            // Rows left without a pivot take their logical into the basis in
            // place of the dependent structural columns.
            let mut pivoted = vec![false; k];
            for col in 0..k {
                if !dropped.contains(&col) {
                    pivoted[col] = true;
                }
            }
            let spare_rows: Vec<usize> =
                (0..k).filter(|&r| !pivoted[r]).map(|r| free_rows[row_perm[r]]).collect();
            let mut out = Vec::new();
            for (&col, &row) in dropped.iter().zip(&spare_rows) {
                let p = structural_pos[col];
                let j = self.head[p];
                self.status[j] = self.nonbasic_status_for(j);
                self.x[j] = self.nonbasic_value(j);
                let s = n + row;
                self.head[p] = s;
                self.status[s] = Status::Basic;
                out.push(j);
            }
            return Err(out);
        }
        // After elimination with row swaps, row `col` of `inv` belongs to
        // structural column `col`, and column t of `inv` to free row
        // free_rows[t] (row operations do not permute columns).
        let mut binv = vec![0.0; m * m];
        for (cidx, &p) in structural_pos.iter().enumerate() {
            let dst = &mut binv[p * m..(p + 1) * m];
            for t in 0..k {
                dst[free_rows[t]] = inv[cidx * k + t];
            }
        }
        // Logical basics: row i gets e_i - (C_S C_R^-1)[i, :].
        let mut pos_of_row = vec![NONE; m];
        for (p, &j) in self.head.iter().enumerate() {
            if j >= n {
                pos_of_row[j - n] = p;
            }
        }
        for (p, &j) in self.head.iter().enumerate() {
            if j >= n {
                binv[p * m + (j - n)] = 1.0;
            }
        }
        for (cidx, &p) in structural_pos.iter().enumerate() {
            let j = self.head[p];
            for t in self.col_start[j]..self.col_start[j + 1] {
                let i = self.col_row[t];
                if covered[i] {
                    let q = pos_of_row[i];
                    let a = self.col_val[t];
                    for tt in 0..k {
                        binv[q * m + free_rows[tt]] -= a * inv[cidx * k + tt];
                    }
                }
            }
        }
        self.binv = binv;
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for j in 0..self.n + m {
            if self.status[j] == Status::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v != 0.0 {
                let (nn, cs, cr, cv) = (self.n, &self.col_start, &self.col_row, &self.col_val);
                if j < nn {
                    for k in cs[j]..cs[j + 1] {
                        r[cr[k]] -= cv[k] * v;
                    }
                } else {
                    r[j - nn] -= v;
                }
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v: f64 = row.iter().zip(&r).map(|(a, b)| a * b).sum();
            self.x[self.head[p]] = v;
        }
    }

    fn max_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &j in &self.head {
            let v = self.x[j];
            worst = worst.max(self.lo[j] - v).max(v - self.up[j]);
        }
        worst
    }

    fn duals_for(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (p, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yi, a) in y.iter_mut().zip(row) {
                    *yi += c * a;
                }
            }
        }
        y
    }

    /// Solve from the current basis.
    pub fn solve(&mut self) -> Result<LpResult, SimplexError> {
        let m = self.m;
        let ntot = self.n + m;
        let max_iters = if self.opts.max_iters == 0 { 50 * ntot + 1000 } else { self.opts.max_iters };
        let tol = self.opts.feas_tol;
        if self.needs_refactor || self.binv.len() != m * m {
            self.refactor()?;
        } else {
            self.recompute_basic_values();
        }
        let mut iters = 0usize;
        let mut degenerate_streak = 0usize;
        let mut alpha = vec![0.0; m];
        let status = loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let infeasible = self.max_infeasibility() > tol;
            let cb: Vec<f64> = self
                .head
                .iter()
                .map(|&j| {
                    if infeasible {
                        let v = self.x[j];
                        if v < self.lo[j] - tol {
                            -1.0
                        } else if v > self.up[j] + tol {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        self.cost[j]
                    }
                })
                .collect();
            let y = self.duals_for(&cb);
            let bland = degenerate_streak >= self.opts.bland_after;

            // pricing
            let mut enter = NONE;
            let mut enter_d = 0.0;
            for j in 0..ntot {
                let st = self.status[j];
                if st == Status::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let cj = if infeasible { 0.0 } else { self.cost[j] };
                let d = cj - self.dot_col(j, &y);
                let eligible = match st {
                    Status::AtLower => d < -self.opts.opt_tol,
                    Status::AtUpper => d > self.opts.opt_tol,
                    Status::Free => d.abs() > self.opts.opt_tol,
                    Status::Basic => false,
                };
                if eligible {
                    if bland {
                        enter = j;
                        enter_d = d;
                        break;
                    }
                    if d.abs() > enter_d.abs() {
                        enter = j;
                        enter_d = d;
                    }
                }
            }
            if enter == NONE {
                break if infeasible { LpStatus::Infeasible } else { LpStatus::Optimal };
            }
            if iters >= max_iters {
                break LpStatus::IterationLimit;
            }
            iters += 1;
            self.total_iterations += 1;

            let q = enter;
            let dir = if enter_d < 0.0 { 1.0 } else { -1.0 };
            alpha.iter_mut().for_each(|a| *a = 0.0);
            {
                let binv = &self.binv;
                self.for_col(q, |i, a| {
                    for (p, al) in alpha.iter_mut().enumerate() {
                        let b = binv[p * m + i];
                        if b != 0.0 {
                            *al += b * a;
                        }
                    }
                });
            }

            // ratio test; x_B[p] moves at rate -dir * alpha[p]
            let mut theta = self.up[q] - self.lo[q];
            let mut leave = NONE;
            let mut leave_bound = 0.0;
            let mut leave_alpha = 0.0;
            for p in 0..m {
                let a = alpha[p];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let j = self.head[p];
                let rate = -dir * a;
                let v = self.x[j];
                let (l, u) = (self.lo[j], self.up[j]);
                let target = if rate < 0.0 {
                    if v > u + tol {
                        u
                    } else if v >= l - tol {
                        l
                    } else {
                        continue;
                    }
                } else if v < l - tol {
                    l
                } else if v <= u + tol {
                    u
                } else {
                    continue;
                };
                if !target.is_finite() {
                    continue;
                }
                let ratio = ((target - v) / rate).max(0.0);
                let better = if leave == NONE {
                    ratio < theta || (ratio == theta && !theta.is_finite())
                } else if bland {
                    ratio < theta - 1e-12 || (ratio <= theta + 1e-12 && j < self.head[leave])
                } else {
                    ratio < theta - 1e-12
                        || (ratio <= theta + 1e-12
                            && (a.abs() > leave_alpha || (a.abs() == leave_alpha && j < self.head[leave])))
                };
                if better && ratio <= theta + 1e-12 {
                    theta = ratio.min(theta);
                    leave = p;
                    leave_bound = target;
                    leave_alpha = a.abs();
                }
            }
            if leave == NONE && !theta.is_finite() {
                if infeasible {
                    // cannot happen with exact arithmetic; refactor and retry
                    self.refactor()?;
                    continue;
                }
                break LpStatus::Unbounded;
            }
            if theta <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            // update primal values
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= theta * dir * alpha[p];
                }
            }
            if leave == NONE {
                // bound flip
                self.status[q] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
                self.x[q] = self.nonbasic_value(q);
                continue;
            }
            self.x[q] += theta * dir;
            let r = leave;
            let jl = self.head[r];
            self.x[jl] = leave_bound;
            self.status[jl] = if leave_bound == self.lo[jl] { Status::AtLower } else { Status::AtUpper };
            self.status[q] = Status::Basic;
            self.head[r] = q;
            // eta update of the dense inverse
            let ar = alpha[r];
            {
                let (before, rest) = self.binv.split_at_mut(r * m);
                let (pivot_row, after) = rest.split_at_mut(m);
                let inv = 1.0 / ar;
                pivot_row.iter_mut().for_each(|v| *v *= inv);
                for (p, row) in before.chunks_exact_mut(m).enumerate() {
                    let f = alpha[p];
                    if f != 0.0 {
                        for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                            *a -= f * b;
                        }
                    }
                }
                for (k, row) in after.chunks_exact_mut(m).enumerate() {
                    let f = alpha[r + 1 + k];
                    if f != 0.0 {
                        for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                            *a -= f * b;
                        }
                    }
                }
            }
            self.since_refactor += 1;
        };

        // final values
        if status == LpStatus::Optimal {
            // fresh values from a clean factorization before reporting
            if self.since_refactor > 0 {
                self.refactor()?;
                if self.max_infeasibility() > tol {
                    return self.solve_more(iters);
                }
            }
        }
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let y = self.duals_for(&cb);
        let mut primal: Vec<f64> = self.x[..self.n].to_vec();
        for (j, v) in primal.iter_mut().enumerate() {
            if self.status[j] == Status::Basic {
                *v = v.clamp(self.lo[j], self.up[j]);
            }
        }
        let reduced_costs = (0..self.n).map(|j| self.cost[j] - self.dot_col(j, &y)).collect();
        let objective =
            self.constant + primal.iter().zip(&self.cost).map(|(x, c)| x * c).sum::<f64>();
        Ok(LpResult { status, primal, duals: y, reduced_costs, objective, iterations: iters })
    }

    fn solve_more(&mut self, done: usize) -> Result<LpResult, SimplexError> {
        let mut res = self.solve()?;
        res.iterations += done;
        Ok(res)
    }
}

/// Solve `lp` from the all-logical basis.
pub fn solve_lp(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpResult, SimplexError> {
    Simplex::new(lp, opts.clone()).solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{RowTag, VarTag};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-8 * (1.0 + b.abs())
    }

    #[test]
    fn one_variable_lower_row() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarTag::Aux(0), f64::NEG_INFINITY, 10.0, 1.0);
        lp.add_row(RowTag::Aux(0), vec![(x, 1.0)], Sense::Ge, 3.0);
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(close(r.primal[0], 3.0));
        assert!(close(r.objective, 3.0));
        assert!(close(r.duals[0], 1.0));
    }

    #[test]
    fn infeasible_rows() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarTag::Aux(0), 0.0, 1.0, 1.0);
        lp.add_row(RowTag::Aux(0), vec![(x, 1.0)], Sense::Ge, 2.0);
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarTag::Aux(0), 0.0, f64::INFINITY, -1.0);
        let y = lp.add_var(VarTag::Aux(1), 0.0, f64::INFINITY, 0.0);
        lp.add_row(RowTag::Aux(0), vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn bound_flip_only() {
        // min -x - y, 0 <= x,y <= 1, no rows
        let mut lp = LinearProgram::new();
        lp.add_var(VarTag::Aux(0), 0.0, 1.0, -1.0);
        lp.add_var(VarTag::Aux(1), 0.0, 1.0, -1.0);
        let r = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(close(r.objective, -2.0));
    }

    #[test]
    fn warm_start_after_bound_change() {
        // min x + 2y s.t. x + y >= 2, x <= 1.5
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarTag::Aux(0), 0.0, 1.5, 1.0);
        let y = lp.add_var(VarTag::Aux(1), 0.0, 10.0, 2.0);
        lp.add_row(RowTag::Aux(0), vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0);
        let mut s = Simplex::new(&lp, SimplexOptions::default());
        let r = s.solve().unwrap();
        assert!(close(r.objective, 2.5));
        s.set_bounds(x, 0.0, 0.5);
        let r = s.solve().unwrap();
        assert!(close(r.objective, 3.5));
        s.set_bounds(x, 0.0, 3.0);
        let r = s.solve().unwrap();
        assert!(close(r.objective, 2.0));
        assert!(close(r.duals[0], 1.0));
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // classic cycling example (Beale), maximise turned into minimise
        let c = [-0.75, 150.0, -0.02, 6.0];
        let mut lp2 = LinearProgram::new();
        let x: Vec<_> =
            c.iter().enumerate().map(|(i, ci)| lp2.add_var(VarTag::Aux(i), 0.0, f64::INFINITY, *ci)).collect();
        let rows = [
            ([0.25, -60.0, -0.04, 9.0], 0.0),
            ([0.5, -90.0, -0.02, 3.0], 0.0),
            ([0.0, 0.0, 1.0, 0.0], 1.0),
        ];
        for (k, (a, b)) in rows.iter().enumerate() {
            let coeffs = a.iter().enumerate().map(|(i, v)| (x[i], *v)).collect();
            lp2.add_row(RowTag::Aux(k), coeffs, Sense::Le, *b);
        }
        let r = solve_lp(&lp2, &SimplexOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(close(r.objective, -0.05));
    }
}
