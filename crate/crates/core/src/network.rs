//! Immutable DC network description in per-unit quantities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::NetworkError;

/// Dense bus index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BusId(pub usize);

/// Dense branch index, in in-service order of the source case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BranchId(pub usize);

/// Dense generator index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenId(pub usize);

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0 + 1)
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// Bus number as written in the source case.
    pub external_id: i64,
    /// Active demand in p.u.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    /// Series susceptance `1/x` in p.u.
    pub susceptance: f64,
    /// Thermal limit in p.u.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    /// Linear cost in $/p.u./h.
    pub cost_linear: f64,
    /// Constant cost in $/h.
    pub cost_constant: f64,
}

/// Grid data consumed by the model builders.
///
/// Construct with [`Network::new`], which validates the invariants and
/// derives the per-bus adjacency lists. The JSON form produced by serde
/// carries `buses`, `branches`, `generators`, `theta_min` and `theta_max`
/// verbatim; adjacency is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkData", into = "NetworkData")]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    theta_min: f64,
    theta_max: f64,
    from_lines: Vec<Vec<BranchId>>,
    to_lines: Vec<Vec<BranchId>>,
    bus_generators: Vec<Vec<GenId>>,
    external: BTreeMap<i64, BusId>,
}

/// Serialized field set of a [`Network`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkData {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl TryFrom<NetworkData> for Network {
    type Error = NetworkError;

    fn try_from(d: NetworkData) -> Result<Self, Self::Error> {
        Network::new(d.buses, d.branches, d.generators, d.theta_min, d.theta_max)
    }
}

impl From<Network> for NetworkData {
    fn from(n: Network) -> Self {
        NetworkData {
            buses: n.buses,
            branches: n.branches,
            generators: n.generators,
            theta_min: n.theta_min,
            theta_max: n.theta_max,
        }
    }
}

impl Network {
    pub fn new(
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        theta_min: f64,
        theta_max: f64,
    ) -> Result<Self, NetworkError> {
        if !(theta_min < theta_max) || !theta_min.is_finite() || !theta_max.is_finite() {
            return Err(NetworkError::AngleBounds { theta_min, theta_max });
        }
        let nb = buses.len();
        let mut external = BTreeMap::new();
        for (i, b) in buses.iter().enumerate() {
            if external.insert(b.external_id, BusId(i)).is_some() {
                return Err(NetworkError::DuplicateBus(b.external_id));
            }
        }
        let mut from_lines = vec![Vec::new(); nb];
        let mut to_lines = vec![Vec::new(); nb];
        for (i, br) in branches.iter().enumerate() {
            let e = BranchId(i);
            if br.from.0 >= nb || br.to.0 >= nb {
                return Err(NetworkError::UnknownBus { branch: i });
            }
            if br.susceptance == 0.0 || !br.susceptance.is_finite() {
                return Err(NetworkError::ZeroSusceptance(e));
            }
            if !(br.capacity > 0.0) {
                return Err(NetworkError::NonPositiveCapacity(e));
            }
            from_lines[br.from.0].push(e);
            to_lines[br.to.0].push(e);
        }
        let mut bus_generators = vec![Vec::new(); nb];
        for (i, g) in generators.iter().enumerate() {
            if g.bus.0 >= nb {
                return Err(NetworkError::UnknownGeneratorBus { generator: i });
            }
            if g.p_min > g.p_max {
                return Err(NetworkError::GeneratorLimits { generator: i });
            }
            bus_generators[g.bus.0].push(GenId(i));
        }
        Ok(Network {
            buses,
            branches,
            generators,
            theta_min,
            theta_max,
            from_lines,
            to_lines,
            bus_generators,
            external,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn bus(&self, v: BusId) -> &Bus {
        &self.buses[v.0]
    }

    pub fn branch(&self, e: BranchId) -> &Branch {
        &self.branches[e.0]
    }

    pub fn generator(&self, g: GenId) -> &Generator {
        &self.generators[g.0]
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn bus_ids(&self) -> impl Iterator<Item = BusId> {
        (0..self.buses.len()).map(BusId)
    }

    pub fn branch_ids(&self) -> impl Iterator<Item = BranchId> {
        (0..self.branches.len()).map(BranchId)
    }

    pub fn gen_ids(&self) -> impl Iterator<Item = GenId> {
        (0..self.generators.len()).map(GenId)
    }

    /// Lines whose from-end is `v`.
    pub fn lines_from(&self, v: BusId) -> &[BranchId] {
        &self.from_lines[v.0]
    }

    /// Lines whose to-end is `v`.
    pub fn lines_to(&self, v: BusId) -> &[BranchId] {
        &self.to_lines[v.0]
    }

    pub fn generators_at(&self, v: BusId) -> &[GenId] {
        &self.bus_generators[v.0]
    }

    /// Dense index of a bus by its number in the source case.
    pub fn bus_by_external(&self, id: i64) -> Option<BusId> {
        self.external.get(&id).copied()
    }

    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.demand).sum()
    }

    /// Per-line big-M: `|b_e| (theta_max - theta_min) + cap_e`.
    ///
    /// Bounds `|b_e (theta_f - theta_t) - f_e|` over the whole variable box,
    /// so the flow-definition pair is slack whenever the line is open.
    pub fn big_m(&self, e: BranchId) -> f64 {
        let br = &self.branches[e.0];
        br.susceptance.abs() * (self.theta_max - self.theta_min) + br.capacity
    }

    /// Generation cost of a dispatch, including constant terms.
    pub fn generation_cost(&self, p: &[f64]) -> f64 {
        self.generators
            .iter()
            .zip(p)
            .map(|(g, &pg)| g.cost_constant + g.cost_linear * pg)
            .sum()
    }

    /// Copy of this network with every cost multiplied by `k`.
    pub fn with_scaled_costs(&self, k: f64) -> Network {
        let mut n = self.clone();
        for g in &mut n.generators {
            g.cost_linear *= k;
            g.cost_constant *= k;
        }
        n
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Network, NetworkError> {
        serde_json::from_str(text).map_err(|e| NetworkError::Json(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus() -> Network {
        Network::new(
            vec![
                Bus { external_id: 1, demand: 0.0 },
                Bus { external_id: 2, demand: 1.0 },
            ],
            vec![Branch { from: BusId(0), to: BusId(1), susceptance: 4.0, capacity: 1.5 }],
            vec![Generator {
                bus: BusId(0),
                p_min: 0.0,
                p_max: 2.0,
                cost_linear: 40.0,
                cost_constant: 0.0,
            }],
            -0.6,
            0.6,
        )
        .unwrap()
    }

    #[test]
    fn big_m_formula() {
        let n = two_bus();
        assert!((n.big_m(BranchId(0)) - 6.3).abs() < 1e-12);
    }

    #[test]
    fn big_m_dominates_sampled_residuals() {
        use rand::{Rng, SeedableRng};
        let n = two_bus();
        let m = n.big_m(BranchId(0));
        let br = n.branch(BranchId(0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let tf = rng.random_range(n.theta_min()..=n.theta_max());
            let tt = rng.random_range(n.theta_min()..=n.theta_max());
            let f = rng.random_range(-br.capacity..=br.capacity);
            assert!((br.susceptance * (tf - tt) - f).abs() <= m);
        }
    }

    #[test]
    fn adjacency_matches_endpoints() {
        let n = two_bus();
        assert_eq!(n.lines_from(BusId(0)), &[BranchId(0)]);
        assert_eq!(n.lines_to(BusId(1)), &[BranchId(0)]);
        assert!(n.lines_from(BusId(1)).is_empty());
        assert_eq!(n.bus_by_external(2), Some(BusId(1)));
    }

    #[test]
    fn rejects_zero_susceptance() {
        let err = Network::new(
            vec![Bus { external_id: 1, demand: 0.0 }, Bus { external_id: 2, demand: 0.0 }],
            vec![Branch { from: BusId(0), to: BusId(1), susceptance: 0.0, capacity: 1.0 }],
            vec![],
            -0.6,
            0.6,
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::ZeroSusceptance(BranchId(0))));
    }

    #[test]
    fn json_round_trip() {
        let n = two_bus();
        let back = Network::from_json(&n.to_json()).unwrap();
        assert_eq!(n, back);
    }
}
