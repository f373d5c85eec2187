//! Task-allocation population games.
//!
//! A large population of agents splits its mass across `n` strategies; each
//! strategy services a subset of `m` growing tasks, and every task shrinks
//! at a rate set by the mass attending it. Agents revise strategies through
//! an entropy-regularized best response to a linear payoff `p = G q` built
//! from the outstanding task levels. This crate provides:
//!
//! - the task/population dynamics and their stationary analysis ([`model`]),
//! - the revision protocol, its target distribution, and the storage
//!   function certifying its passivity ([`protocol`]),
//! - the coupled mean-field simulation ([`closed_loop`]),
//! - payoff-matrix design: cost-optimal equilibrium search, a
//!   margin-maximizing linear program over a sparsity pattern, and
//!   verification of the sufficient conditions for global convergence
//!   ([`design`]),
//! - the complementary energy function for the task side and Lyapunov
//!   monitoring along trajectories ([`passivity`]),
//! - finite-population stochastic simulation validating the mean-field
//!   limit ([`agents`]),
//! - CSV export of trajectories ([`io`]).
//!
//! All numerical types are generic over the floating-point scalar through
//! [`scalar::Scalar`] (implemented for `f32` and `f64`); the `*64` aliases
//! at the crate root pin the common double-precision case.

pub mod agents;
pub mod closed_loop;
pub mod design;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod passivity;
pub mod protocol;
pub mod scalar;

pub use agents::{simulate_agents, AgentSimConfig};
pub use closed_loop::{ClosedLoop, PayoffMatrix, PayoffPattern, SimConfig, Trajectory};
pub use design::{
    design_payoff, natural_pattern, optimal_equilibrium, sample_constraints, verify_conditions,
    ConstraintSample, CostFunction, DesignReport, EquilibriumReport,
};
pub use error::{Error, Result};
pub use model::{
    GrowthRate, PopulationState, RateFamily, StationaryOutcome, StationaryPair, TaskVector,
};
pub use passivity::{
    antistorage, antistorage_sweep, lyapunov_monitor, AntistorageSweep, MonitorReport,
    QuadratureSpec,
};
pub use protocol::{relative_entropy, RevisionProtocol};
pub use scalar::Scalar;

/// Double-precision aliases for the main types.
pub type TaskVector64 = TaskVector<f64>;
pub type PopulationState64 = PopulationState<f64>;
pub type GrowthRate64 = GrowthRate<f64>;
pub type RateFamily64 = RateFamily<f64>;
pub type RevisionProtocol64 = RevisionProtocol<f64>;
pub type PayoffMatrix64 = PayoffMatrix<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ClosedLoop64 = ClosedLoop<f64>;
pub type StationaryPair64 = StationaryPair<f64>;
pub type AgentSimConfig64 = AgentSimConfig<f64>;
pub type DesignReport64 = DesignReport<f64>;
pub type EquilibriumReport64 = EquilibriumReport<f64>;
