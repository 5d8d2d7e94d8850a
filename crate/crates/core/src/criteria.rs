//! Line-profit switching criterion and the priority list built from it.

use thiserror::Error;

use crate::model::SwitchSet;
use crate::network::{BranchId, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("expected {expected} {what}, got {got}")]
    ShapeMismatch { what: &'static str, expected: usize, got: usize },
}

/// A per-line switching score; lower means a more promising candidate.
pub trait SwitchingCriterion {
    fn score(&self, net: &Network, f: &[f64], prices: &[f64]) -> Result<Vec<f64>, CriteriaError>;
}

/// `alpha_e = f_e (pi_from - pi_to)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LineProfit;

impl SwitchingCriterion for LineProfit {
    fn score(&self, net: &Network, f: &[f64], prices: &[f64]) -> Result<Vec<f64>, CriteriaError> {
        lpsc(net, f, prices)
    }
}

/// Line profits from a lifted flow vector (zero on open lines) and nodal prices.
pub fn lpsc(net: &Network, f: &[f64], prices: &[f64]) -> Result<Vec<f64>, CriteriaError> {
    if f.len() != net.num_branches() {
        return Err(CriteriaError::ShapeMismatch { what: "flows", expected: net.num_branches(), got: f.len() });
    }
    if prices.len() != net.num_buses() {
        return Err(CriteriaError::ShapeMismatch { what: "prices", expected: net.num_buses(), got: prices.len() });
    }
    Ok(net
        .branches()
        .iter()
        .zip(f)
        .map(|(br, &fe)| fe * (prices[br.from.0] - prices[br.to.0]))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityList {
    pub order: Vec<BranchId>,
    pub alpha: Vec<f64>,
}

/// Ascending by score, lowest id first on ties.
pub fn build_priority_list(alpha: &[f64]) -> PriorityList {
    let mut order: Vec<BranchId> = (0..alpha.len()).map(BranchId).collect();
    // -0.0 must tie with 0.0
    let key = |e: &BranchId| if alpha[e.0] == 0.0 { 0.0 } else { alpha[e.0] };
    order.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    PriorityList { order, alpha: alpha.to_vec() }
}

/// The first `min(n, |E|)` lines of the list.
pub fn select_switchable(list: &PriorityList, n: usize) -> SwitchSet {
    SwitchSet::new(list.order.iter().copied().take(n))
}
