//! MATPOWER case files (the `.m` format used by pglib-opf).
//!
//! [`parse_matpower`] captures the numeric `mpc.*` blocks verbatim and
//! [`to_network`] turns them into a per-unit DC [`Network`]: `b = 1/x`,
//! resistance and charging ignored, capacities from `RATE_A`, linear costs
//! from polynomial `gencost` rows.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;

use crate::error::NetworkError;
use crate::network::{Branch, Bus, BusId, Generator, Network};

/// Minimum MATPOWER column counts.
const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 13;
const GENCOST_COLS: usize = 4;

// bus columns
const BUS_I: usize = 0;
const PD: usize = 2;
// gen columns
const GEN_BUS: usize = 0;
const GEN_STATUS: usize = 7;
const PMAX: usize = 8;
const PMIN: usize = 9;
// branch columns
const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_X: usize = 3;
const RATE_A: usize = 5;
const BR_STATUS: usize = 10;
// gencost columns
const MODEL: usize = 0;
const NCOST: usize = 3;
const COST: usize = 4;

const POLYNOMIAL: f64 = 2.0;

/// Numeric blocks of a case file exactly as read.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCase {
    pub base_mva: f64,
    pub bus_rows: Vec<Vec<f64>>,
    pub gen_rows: Vec<Vec<f64>>,
    pub branch_rows: Vec<Vec<f64>>,
    pub gencost_rows: Vec<Vec<f64>>,
}

impl RawCase {
    /// Row counts as `(bus, branch, gen, gencost)`.
    pub fn row_counts(&self) -> (usize, usize, usize, usize) {
        (
            self.bus_rows.len(),
            self.branch_rows.len(),
            self.gen_rows.len(),
            self.gencost_rows.len(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOptions {
    /// Force every generator floor to zero.
    pub zero_pmin: bool,
    /// Keep `c1` and drop quadratic terms instead of failing.
    pub linearize: bool,
    /// Capacity in p.u. used where `RATE_A = 0`.
    pub unbounded_capacity: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub reject_islands: bool,
    /// Quadratic coefficients at or below this magnitude count as zero.
    pub quadratic_tol: f64,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        NetworkOptions {
            zero_pmin: false,
            linearize: false,
            unbounded_capacity: 100.0,
            theta_min: -std::f64::consts::FRAC_PI_2,
            theta_max: std::f64::consts::FRAC_PI_2,
            reject_islands: false,
            quadratic_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str,
    Eq,
    Open,
    Close,
    OpenCell,
    CloseCell,
    Semi,
    Comma,
    Newline,
}

fn tokenize(text: &str) -> Vec<(Tok, usize)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut chars = line.chars().peekable();
        let mut word = String::new();
        let flush = |word: &mut String, out: &mut Vec<(Tok, usize)>| {
            if !word.is_empty() {
                out.push((Tok::Word(std::mem::take(word)), line_no));
            }
        };
        while let Some(c) = chars.next() {
            match c {
                '%' | '#' => break,
                '\'' | '"' => {
                    flush(&mut word, &mut out);
                    for d in chars.by_ref() {
                        if d == c {
                            break;
                        }
                    }
                    out.push((Tok::Str, line_no));
                }
                '=' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::Eq, line_no));
                }
                '[' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::Open, line_no));
                }
                ']' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::Close, line_no));
                }
                '{' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::OpenCell, line_no));
                }
                '}' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::CloseCell, line_no));
                }
                ';' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::Semi, line_no));
                }
                ',' => {
                    flush(&mut word, &mut out);
                    out.push((Tok::Comma, line_no));
                }
                c if c.is_whitespace() => flush(&mut word, &mut out),
                c => word.push(c),
            }
        }
        flush(&mut word, &mut out);
        out.push((Tok::Newline, line_no));
    }
    out
}

/// A matrix block: rows of raw tokens with the line each row started on.
type TokenRows = Vec<(usize, Vec<String>)>;

enum Value {
    Scalar(String, usize),
    Matrix(TokenRows),
    Other,
}

/// Parse the text of a MATPOWER `.m` case.
pub fn parse_matpower(text: &str) -> Result<RawCase, NetworkError> {
    let toks = tokenize(text);
    let mut fields: BTreeMap<String, Value> = BTreeMap::new();
    let mut i = 0;
    while i < toks.len() {
        let name = match &toks[i].0 {
            Tok::Word(w) if w.starts_with("mpc.") => w[4..].to_string(),
            _ => {
                i += 1;
                continue;
            }
        };
        i += 1;
        while matches!(toks.get(i), Some((Tok::Newline, _))) {
            i += 1;
        }
        if !matches!(toks.get(i), Some((Tok::Eq, _))) {
            continue;
        }
        i += 1;
        while matches!(toks.get(i), Some((Tok::Newline, _))) {
            i += 1;
        }
        match toks.get(i) {
            Some((Tok::Open, _)) => {
                i += 1;
                let mut rows: TokenRows = Vec::new();
                let mut cur: Vec<String> = Vec::new();
                let mut cur_line = 0;
                loop {
                    let Some((t, line)) = toks.get(i) else {
                        return Err(NetworkError::MalformedRow {
                            block: name,
                            line: cur_line,
                            reason: "unterminated matrix".into(),
                        });
                    };
                    i += 1;
                    match t {
                        Tok::Close => {
                            if !cur.is_empty() {
                                rows.push((cur_line, std::mem::take(&mut cur)));
                            }
                            break;
                        }
                        Tok::Semi | Tok::Newline => {
                            if !cur.is_empty() {
                                rows.push((cur_line, std::mem::take(&mut cur)));
                            }
                        }
                        Tok::Comma => {}
                        Tok::Word(w) => {
                            if cur.is_empty() {
                                cur_line = *line;
                            }
                            cur.push(w.clone());
                        }
                        Tok::Str => {
                            if cur.is_empty() {
                                cur_line = *line;
                            }
                            cur.push("'".into());
                        }
                        _ => {
                            return Err(NetworkError::MalformedRow {
                                block: name,
                                line: *line,
                                reason: "unexpected token inside matrix".into(),
                            })
                        }
                    }
                }
                fields.insert(name, Value::Matrix(rows));
            }
            Some((Tok::OpenCell, _)) => {
                let mut depth = 0usize;
                while let Some((t, _)) = toks.get(i) {
                    i += 1;
                    match t {
                        Tok::OpenCell => depth += 1,
                        Tok::CloseCell => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                fields.insert(name, Value::Other);
            }
            Some((Tok::Word(w), line)) => {
                fields.insert(name, Value::Scalar(w.clone(), *line));
                i += 1;
            }
            _ => {
                fields.insert(name, Value::Other);
                i += 1;
            }
        }
    }

    let base_mva = match fields.get("baseMVA") {
        Some(Value::Scalar(s, line)) => parse_num(s, *line)?,
        _ => return Err(NetworkError::MissingBlock("baseMVA".into())),
    };
    if !(base_mva > 0.0) {
        return Err(NetworkError::BaseMva(base_mva));
    }
    let matrix = |name: &str, min_cols: usize| -> Result<Vec<Vec<f64>>, NetworkError> {
        let Some(Value::Matrix(rows)) = fields.get(name) else {
            return Err(NetworkError::MissingBlock(name.into()));
        };
        rows.iter()
            .map(|(line, row)| {
                if row.len() < min_cols {
                    return Err(NetworkError::MalformedRow {
                        block: name.into(),
                        line: *line,
                        reason: format!("expected at least {min_cols} columns, found {}", row.len()),
                    });
                }
                row.iter().map(|t| parse_num(t, *line)).collect()
            })
            .collect()
    };
    let bus_rows = matrix("bus", BUS_COLS)?;
    let gen_rows = matrix("gen", GEN_COLS)?;
    let branch_rows = matrix("branch", BRANCH_COLS)?;
    let gencost_rows = matrix("gencost", GENCOST_COLS)?;
    if let Some(Value::Matrix(rows)) = fields.get("gencost") {
        for ((line, _), row) in rows.iter().zip(&gencost_rows) {
            let n = row[NCOST].max(0.0) as usize;
            if row[MODEL] == POLYNOMIAL && row.len() < COST + n {
                return Err(NetworkError::MalformedRow {
                    block: "gencost".into(),
                    line: *line,
                    reason: format!("declares {n} coefficients but has {} columns", row.len()),
                });
            }
        }
    }
    Ok(RawCase { base_mva, bus_rows, gen_rows, branch_rows, gencost_rows })
}

fn parse_num(tok: &str, line: usize) -> Result<f64, NetworkError> {
    tok.parse::<f64>().map_err(|_| NetworkError::NonNumeric { token: tok.to_string(), line })
}

/// Convert raw case data to a per-unit DC network.
pub fn to_network(raw: &RawCase, opts: &NetworkOptions) -> Result<Network, NetworkError> {
    let base = raw.base_mva;
    let buses: Vec<Bus> = raw
        .bus_rows
        .iter()
        .map(|r| Bus { external_id: r[BUS_I] as i64, demand: r[PD] / base })
        .collect();
    let mut index = BTreeMap::new();
    for (i, b) in buses.iter().enumerate() {
        if index.insert(b.external_id, BusId(i)).is_some() {
            return Err(NetworkError::DuplicateBus(b.external_id));
        }
    }

    let mut branches = Vec::new();
    for (row_no, r) in raw.branch_rows.iter().enumerate() {
        if r[BR_STATUS] == 0.0 {
            continue;
        }
        let (Some(&from), Some(&to)) =
            (index.get(&(r[F_BUS] as i64)), index.get(&(r[T_BUS] as i64)))
        else {
            return Err(NetworkError::UnknownBus { branch: row_no });
        };
        if r[BR_X] == 0.0 {
            return Err(NetworkError::ZeroReactance(row_no));
        }
        let capacity = if r[RATE_A] == 0.0 { opts.unbounded_capacity } else { r[RATE_A] / base };
        branches.push(Branch { from, to, susceptance: 1.0 / r[BR_X], capacity });
    }

    let mut generators = Vec::new();
    for (gi, r) in raw.gen_rows.iter().enumerate() {
        if r[GEN_STATUS] <= 0.0 {
            continue;
        }
        let Some(&bus) = index.get(&(r[GEN_BUS] as i64)) else {
            return Err(NetworkError::UnknownGeneratorBus { generator: gi });
        };
        let cost = raw.gencost_rows.get(gi).ok_or_else(|| NetworkError::MalformedRow {
            block: "gencost".into(),
            line: 0,
            reason: format!("no cost row for generator {gi}"),
        })?;
        let (c1, c0) = linear_cost(cost, gi, opts)?;
        let p_min = if opts.zero_pmin { 0.0 } else { r[PMIN] / base };
        generators.push(Generator {
            bus,
            p_min,
            p_max: r[PMAX] / base,
            cost_linear: c1 * base,
            cost_constant: c0,
        });
    }

    if opts.reject_islands {
        let mut touched = vec![false; buses.len()];
        for br in &branches {
            touched[br.from.0] = true;
            touched[br.to.0] = true;
        }
        for g in &generators {
            touched[g.bus.0] = true;
        }
        if let Some(i) = touched.iter().position(|t| !t) {
            return Err(NetworkError::IslandedBus(buses[i].external_id));
        }
    }

    Network::new(buses, branches, generators, opts.theta_min, opts.theta_max)
}

/// `(c1, c0)` of a polynomial cost row, in MW-based units.
fn linear_cost(row: &[f64], gen: usize, opts: &NetworkOptions) -> Result<(f64, f64), NetworkError> {
    if row[MODEL] != POLYNOMIAL {
        return Err(NetworkError::UnsupportedCostModel { generator: gen, model: row[MODEL] });
    }
    let n = row[NCOST].max(0.0) as usize;
    // coefficients are stored highest order first
    let coef = |degree: usize| -> f64 {
        if degree < n {
            row[COST + n - 1 - degree]
        } else {
            0.0
        }
    };
    for degree in 2..n.max(2) {
        let c = coef(degree);
        if c.abs() > opts.quadratic_tol {
            if opts.linearize {
                warn!("generator {gen}: dropping degree-{degree} cost coefficient {c}");
            } else {
                return Err(NetworkError::QuadraticCostUnsupported { generator: gen, c2: c });
            }
        }
    }
    Ok((coef(1), coef(0)))
}

/// Read and convert a case file in one go.
pub fn load_case(path: impl AsRef<Path>, opts: &NetworkOptions) -> Result<Network, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e))?;
    let raw = parse_matpower(&text)?;
    Ok(to_network(&raw, opts)?)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
