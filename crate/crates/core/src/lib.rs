//! DC optimal transmission switching: models, an LP/MILP engine, the
//! line-profit switching criterion and an asynchronous master/worker runner.

pub mod branchbound;
pub mod clock;
pub mod coordinator;
pub mod criteria;
pub mod error;
pub mod lp;
pub mod model;
pub mod netio;
pub mod network;
pub mod simplex;
pub mod sweep;

pub use error::NetworkError;
pub use network::{Branch, BranchId, Bus, BusId, GenId, Generator, Network};
