//! Linear and mixed-integer program containers.
//!
//! Columns and rows carry tags naming the model entity they stand for, so
//! solutions and duals map back to buses and branches without positional
//! bookkeeping.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::network::{BranchId, BusId, GenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarTag {
    Gen(GenId),
    Angle(BusId),
    Flow(BranchId),
    Switch(BranchId),
    Aux(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowTag {
    /// Nodal power balance; its dual is the bus price.
    Balance(BusId),
    /// `b (theta_f - theta_t) - f = 0` for a fixed-closed line.
    FlowDef(BranchId),
    /// `b (theta_f - theta_t) - f - M x >= -M`.
    BigMLower(BranchId),
    /// `b (theta_f - theta_t) - f + M x <= M`.
    BigMUpper(BranchId),
    /// `f - cap x <= 0`.
    CapUpper(BranchId),
    /// `f + cap x >= 0`.
    CapLower(BranchId),
    Aux(usize),
}

impl fmt::Display for VarTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarTag::Gen(g) => write!(f, "p_g{}", g.0 + 1),
            VarTag::Angle(v) => write!(f, "theta_v{}", v.0 + 1),
            VarTag::Flow(e) => write!(f, "f_e{}", e.0 + 1),
            VarTag::Switch(e) => write!(f, "x_e{}", e.0 + 1),
            VarTag::Aux(i) => write!(f, "y{}", i + 1),
        }
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowTag::Balance(v) => write!(f, "bal_v{}", v.0 + 1),
            RowTag::FlowDef(e) => write!(f, "kvl_e{}", e.0 + 1),
            RowTag::BigMLower(e) => write!(f, "bigm_lo_e{}", e.0 + 1),
            RowTag::BigMUpper(e) => write!(f, "bigm_up_e{}", e.0 + 1),
            RowTag::CapUpper(e) => write!(f, "cap_up_e{}", e.0 + 1),
            RowTag::CapLower(e) => write!(f, "cap_lo_e{}", e.0 + 1),
            RowTag::Aux(i) => write!(f, "r{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub tag: VarTag,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub tag: RowTag,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("variable {0} has lower > upper")]
    InvertedBounds(String),
    #[error("duplicate tag {0}")]
    DuplicateTag(String),
}

/// Minimisation LP: `min c'x + constant` subject to tagged rows and column bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    vars: Vec<Variable>,
    rows: Vec<Row>,
    objective_constant: f64,
    var_index: HashMap<VarTag, VarId>,
    row_index: HashMap<RowTag, RowId>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a column. Panics on a duplicate tag or inverted bounds.
    pub fn add_var(&mut self, tag: VarTag, lower: f64, upper: f64, cost: f64) -> VarId {
        assert!(lower <= upper, "variable {tag} has lower {lower} > upper {upper}");
        let id = VarId(self.vars.len());
        let prev = self.var_index.insert(tag, id);
        assert!(prev.is_none(), "duplicate variable {tag}");
        self.vars.push(Variable { tag, lower, upper, cost });
        id
    }

    /// Add a constraint row. Zero coefficients are dropped and repeated
    /// variables merged.
    pub fn add_row(&mut self, tag: RowTag, coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(coeffs.len());
        for (v, a) in coeffs {
            assert!(v.0 < self.vars.len(), "row {tag} references undeclared column {}", v.0);
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, b)) => *b += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        let id = RowId(self.rows.len());
        let prev = self.row_index.insert(tag, id);
        assert!(prev.is_none(), "duplicate row {tag}");
        self.rows.push(Row { tag, coeffs: merged, sense, rhs });
        id
    }

    pub fn set_objective_constant(&mut self, c: f64) {
        self.objective_constant = c;
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, tag: VarTag) -> Option<VarId> {
        self.var_index.get(&tag).copied()
    }

    pub fn row(&self, tag: RowTag) -> Option<RowId> {
        self.row_index.get(&tag).copied()
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        assert!(lower <= upper);
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
    }

    /// Structural checks; the builders uphold these by construction.
    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.vars {
            if v.lower > v.upper {
                return Err(LpError::InvertedBounds(v.tag.to_string()));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(&(v, _)) = r.coeffs.iter().find(|(v, _)| v.0 >= self.vars.len()) {
                return Err(LpError::UnknownVariable { row: i, var: v.0 });
            }
        }
        Ok(())
    }

    /// `c'x + constant`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum::<f64>()
    }

    /// Row activity `a_i' x`.
    pub fn activity(&self, row: &Row, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for r in &self.rows {
            let act = self.activity(r, x);
            let viol = match r.sense {
                Sense::Le => act - r.rhs,
                Sense::Ge => r.rhs - act,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Order-independent description used to compare two programs structurally.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut vars: Vec<_> = self
            .vars
            .iter()
            .map(|v| (v.tag, v.lower.to_bits(), v.upper.to_bits(), v.cost.to_bits()))
            .collect();
        vars.sort();
        let mut rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                let mut c: Vec<_> =
                    r.coeffs.iter().map(|&(v, a)| (self.vars[v.0].tag, a.to_bits())).collect();
                c.sort();
                (r.tag, c, r.sense, r.rhs.to_bits())
            })
            .collect();
        rows.sort();
        Fingerprint { vars, rows, constant: self.objective_constant.to_bits(), binaries: Vec::new() }
    }

    /// Text export in CPLEX LP format.
    pub fn to_lp_format(&self, binaries: &[VarId]) -> String {
        let mut s = String::new();
        let name = |v: VarId| self.vars[v.0].tag.to_string();
        let term = |s: &mut String, a: f64, n: &str, first: bool| {
            if first {
                let _ = write!(s, " {a} {n}");
            } else if a < 0.0 {
                let _ = write!(s, " - {} {n}", -a);
            } else {
                let _ = write!(s, " + {a} {n}");
            }
        };
        let _ = writeln!(s, "\\ objective constant: {}", self.objective_constant);
        s.push_str("Minimize\n obj:");
        let mut first = true;
        for (i, v) in self.vars.iter().enumerate() {
            if v.cost != 0.0 {
                term(&mut s, v.cost, &name(VarId(i)), first);
                first = false;
            }
        }
        if first {
            s.push_str(" 0");
        }
        s.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(s, " {}:", r.tag);
            for (k, &(v, a)) in r.coeffs.iter().enumerate() {
                term(&mut s, a, &name(v), k == 0);
            }
            if r.coeffs.is_empty() {
                s.push_str(" 0 y0");
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {}", r.rhs);
        }
        s.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            let n = name(VarId(i));
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => {
                    let _ = writeln!(s, " {n} = {}", v.lower);
                }
                (true, true) => {
                    let _ = writeln!(s, " {} <= {n} <= {}", v.lower, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(s, " {n} >= {}", v.lower);
                }
                (false, true) => {
                    let _ = writeln!(s, " -inf <= {n} <= {}", v.upper);
                }
                (false, false) => {
                    let _ = writeln!(s, " {n} free");
                }
            }
        }
        if !binaries.is_empty() {
            s.push_str("Binaries\n");
            for &b in binaries {
                let _ = writeln!(s, " {}", name(b));
            }
        }
        s.push_str("End\n");
        s
    }
}

type FingerprintRow = (RowTag, Vec<(VarTag, u64)>, Sense, u64);

/// Canonical multiset form of a program: columns with bounds and costs,
/// rows with tag-resolved coefficients, the objective constant and binaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub vars: Vec<(VarTag, u64, u64, u64)>,
    pub rows: Vec<FingerprintRow>,
    pub constant: u64,
    pub binaries: Vec<VarTag>,
}

/// An LP plus the binary columns and an optional start for them.
#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<VarId>,
    /// One value in {0, 1} per entry of `binaries`.
    pub mipstart: Option<Vec<f64>>,
}

impl MixedIntegerProgram {
    pub fn new(lp: LinearProgram, binaries: Vec<VarId>) -> Self {
        for &b in &binaries {
            let v = &lp.vars()[b.0];
            assert!(v.lower >= 0.0 && v.upper <= 1.0, "binary {} must have bounds within [0,1]", v.tag);
        }
        MixedIntegerProgram { lp, binaries, mipstart: None }
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut fp = self.lp.fingerprint();
        fp.binaries = self.binaries.iter().map(|b| self.lp.vars()[b.0].tag).collect();
        fp.binaries.sort();
        fp
    }

    /// Whether `x` satisfies every row, bound and integrality requirement within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.lp.num_vars()
            && x.iter().all(|v| v.is_finite())
            && self.lp.max_violation(x) <= tol
            && self.binaries.iter().all(|b| {
                let v = x[b.0];
                v.abs() <= tol || (v - 1.0).abs() <= tol
            })
    }

    pub fn to_lp_format(&self) -> String {
        self.lp.to_lp_format(&self.binaries)
    }
}
