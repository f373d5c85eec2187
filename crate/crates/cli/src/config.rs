//! JSON experiment configuration: schema, validation, and conversion into
//! core model types.
//!
//! Unknown keys are rejected everywhere. Strategy indices in config files
//! (`neighborhoods`) are 1-based and converted to 0-based indices
//! internally; all vectors are plain JSON arrays of numbers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use taskgame::numerics::linalg::Mat;
use taskgame::{CostFunction, GrowthRate64, PayoffMatrix64, PayoffPattern, RateFamily64};

use crate::error::CliError;

pub const DEFAULT_MASS: f64 = 1.0;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_RECORD_STRIDE: usize = 100;
pub const DEFAULT_QUADRATURE_NODES: usize = 8;
/// Fallback sampling ceiling when no cost-equalizing level is computable.
pub const DEFAULT_Q_MAX_FALLBACK: f64 = 200.0;

fn default_mass() -> f64 {
    DEFAULT_MASS
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_record_stride() -> usize {
    DEFAULT_RECORD_STRIDE
}
fn default_quadrature_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

/// Top-level experiment description. Sections beyond `family`, `growth`,
/// and `cost` are optional; each subcommand demands the ones it needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    /// Per-task constant growth rates `w` (nonnegative).
    pub growth: Vec<f64>,
    /// Total population mass (default 1).
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// Equilibrium-selection cost over task levels.
    pub cost: CostFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<PayoffSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<AgentsConfig>,
    /// Output directory; the `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Reduction-rate family. `kind` selects the variant.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum FamilyConfig {
    /// One dedicated strategy per task: `F_i = R_i tanh(a_i q_i / 2) x_i^b_i`.
    ResourceCollection {
        rates: Vec<f64>,
        saturations: Vec<f64>,
        exponents: Vec<f64>,
    },
    /// Each task served by a set of strategies (1-based indices):
    /// `F_i = R_i tanh(a_i q_i / 2) sum_{j in N_i} x_j^b_i`.
    HeterogeneousSensing {
        rates: Vec<f64>,
        saturations: Vec<f64>,
        exponents: Vec<f64>,
        neighborhoods: Vec<Vec<usize>>,
        strategy_count: usize,
    },
    /// Level-proportional drain: `F_i = (q_i / l_i) x_i`.
    WaterDistribution { max_levels: Vec<f64> },
}

impl FamilyConfig {
    pub fn build(&self) -> Result<RateFamily64, CliError> {
        match self {
            FamilyConfig::ResourceCollection {
                rates,
                saturations,
                exponents,
            } => RateFamily64::resource_collection(rates.clone(), saturations.clone(), exponents.clone())
                .map_err(CliError::config),
            FamilyConfig::HeterogeneousSensing {
                rates,
                saturations,
                exponents,
                neighborhoods,
                strategy_count,
            } => {
                let sets = neighborhoods_to_indices(neighborhoods, *strategy_count)?;
                RateFamily64::heterogeneous_sensing(
                    rates.clone(),
                    saturations.clone(),
                    exponents.clone(),
                    sets,
                    *strategy_count,
                )
                .map_err(CliError::config)
            }
            FamilyConfig::WaterDistribution { max_levels } => {
                RateFamily64::water_distribution(max_levels.clone()).map_err(CliError::config)
            }
        }
    }
}

/// Converts 1-based strategy indices from a config file to 0-based sets.
pub fn neighborhoods_to_indices(
    neighborhoods: &[Vec<usize>],
    strategy_count: usize,
) -> Result<Vec<Vec<usize>>, CliError> {
    let mut sets = Vec::with_capacity(neighborhoods.len());
    for (task, set) in neighborhoods.iter().enumerate() {
        let mut out = Vec::with_capacity(set.len());
        for &j in set {
            if j == 0 || j > strategy_count {
                return Err(CliError::Config(format!(
                    "neighborhood for task {} lists strategy {}; strategies are numbered 1..={}",
                    task + 1,
                    j,
                    strategy_count
                )));
            }
            out.push(j - 1);
        }
        sets.push(out);
    }
    Ok(sets)
}

/// Converts internal 0-based service sets back to the 1-based form used in
/// config and output files.
pub fn indices_to_neighborhoods(sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    sets.iter().map(|s| s.iter().map(|&j| j + 1).collect()).collect()
}

/// Strategy-revision parameters. Exactly one of `eta` (single temperature)
/// or `schedule` (piecewise-constant temperatures) must be given.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// `"optimal"` anchors revision at the cost-optimal population split;
    /// an explicit array gives the anchor weights directly (they must sum
    /// to the population mass).
    pub theta: ThetaPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<ScheduleSegment>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaPolicy {
    Named(String),
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSegment {
    pub eta: f64,
    pub horizon: f64,
}

/// Where the payoff matrix comes from: `"design"` (run the designer),
/// `"identity"`, or an explicit matrix with an optional declared pattern.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffSource {
    Named(String),
    Explicit(ExplicitPayoff),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPayoff {
    /// Row-major `n x m` matrix (strategies by tasks).
    pub matrix: Vec<Vec<f64>>,
    /// Declared sparsity pattern; `dense` when omitted. `neighbor_shared`
    /// takes its service sets from the family's neighborhoods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternName>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternName {
    Diagonal,
    NeighborShared,
    Dense,
}

/// Integration grid and initial conditions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Final time; omit it when the protocol carries a schedule (the
    /// schedule's segment horizons then add up to the final time).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    /// `"equilibrium"`, `"zero"`, or an explicit task vector.
    pub q0: StateInit,
    /// `"uniform"`, `"equilibrium"`, or an explicit population state.
    pub x0: StateInit,
    /// Record the task-side energy along the trajectory (requires strictly
    /// positive task levels throughout, so not compatible with `q0: "zero"`).
    #[serde(default)]
    pub record_energy: bool,
    /// Gauss-Legendre nodes per panel for energy quadrature (2..=64).
    #[serde(default = "default_quadrature_nodes")]
    pub quadrature_nodes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateInit {
    Named(String),
    Explicit(Vec<f64>),
}

/// Constraint sampling for payoff design and verification.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub count: usize,
    pub seed: u64,
    /// Upper end of the log-uniform task-level range; when omitted it is
    /// derived from the level-equalizing equilibrium (twice its largest
    /// task level), falling back to 200.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
}

/// Finite-population runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    /// Number of agents.
    pub population: usize,
    /// One stochastic run per seed.
    pub seeds: Vec<u64>,
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Cross-field validation beyond what serde checks; builds the family
    /// once to know the game dimensions.
    pub fn validate(&self) -> Result<(), CliError> {
        let family = self.family.build()?;
        let m = family.task_count();
        let n = family.strategy_count();

        if self.growth.len() != m {
            return Err(CliError::Config(format!(
                "growth vector has {} entries; the family has {} tasks",
                self.growth.len(),
                m
            )));
        }
        for (i, &w) in self.growth.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(CliError::Config(format!(
                    "growth entry {} = {w} must be finite and nonnegative",
                    i + 1
                )));
            }
        }
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return Err(CliError::Config(format!(
                "mass = {} must be positive and finite",
                self.mass
            )));
        }

        if let Some(protocol) = &self.protocol {
            match (&protocol.eta, &protocol.schedule) {
                (Some(eta), None) => {
                    if !eta.is_finite() || *eta <= 0.0 {
                        return Err(CliError::Config(format!(
                            "protocol.eta = {eta} must be positive and finite"
                        )));
                    }
                }
                (None, Some(schedule)) => {
                    if schedule.is_empty() {
                        return Err(CliError::Config(
                            "protocol.schedule must have at least one segment".into(),
                        ));
                    }
                    for (k, seg) in schedule.iter().enumerate() {
                        if !seg.eta.is_finite() || seg.eta <= 0.0 {
                            return Err(CliError::Config(format!(
                                "schedule segment {}: eta = {} must be positive and finite",
                                k + 1,
                                seg.eta
                            )));
                        }
                        if !seg.horizon.is_finite() || seg.horizon <= 0.0 {
                            return Err(CliError::Config(format!(
                                "schedule segment {}: horizon = {} must be positive and finite",
                                k + 1,
                                seg.horizon
                            )));
                        }
                    }
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(
                        "protocol: give either eta or schedule, not both".into(),
                    ));
                }
                (None, None) => {
                    return Err(CliError::Config(
                        "protocol: one of eta or schedule is required".into(),
                    ));
                }
            }
            match &protocol.theta {
                ThetaPolicy::Named(name) => {
                    if name != "optimal" {
                        return Err(CliError::Config(format!(
                            "protocol.theta = {name:?}: expected \"optimal\" or an array of weights"
                        )));
                    }
                }
                ThetaPolicy::Explicit(weights) => {
                    if weights.len() != n {
                        return Err(CliError::Config(format!(
                            "protocol.theta has {} entries; the family has {} strategies",
                            weights.len(),
                            n
                        )));
                    }
                    let mut sum = 0.0;
                    for (j, &t) in weights.iter().enumerate() {
                        if !t.is_finite() || t <= 0.0 {
                            return Err(CliError::Config(format!(
                                "protocol.theta entry {} = {t} must be positive and finite",
                                j + 1
                            )));
                        }
                        sum += t;
                    }
                    if (sum - self.mass).abs() > 1e-9 * (1.0 + self.mass) {
                        return Err(CliError::Config(format!(
                            "protocol.theta sums to {sum}; it must sum to the population mass {}",
                            self.mass
                        )));
                    }
                }
            }
        }

        if let Some(PayoffSource::Named(name)) = &self.payoff {
            if name != "design" && name != "identity" {
                return Err(CliError::Config(format!(
                    "payoff = {name:?}: expected \"design\", \"identity\", or an explicit matrix"
                )));
            }
        }

        if let Some(sim) = &self.simulation {
            if let Some(h) = sim.horizon {
                if !h.is_finite() || h <= 0.0 {
                    return Err(CliError::Config(format!(
                        "simulation.horizon = {h} must be positive and finite"
                    )));
                }
            }
            if !sim.step.is_finite() || sim.step <= 0.0 {
                return Err(CliError::Config(format!(
                    "simulation.step = {} must be positive and finite",
                    sim.step
                )));
            }
            if sim.record_stride == 0 {
                return Err(CliError::Config("simulation.record_stride must be at least 1".into()));
            }
            if !(2..=64).contains(&sim.quadrature_nodes) {
                return Err(CliError::Config(format!(
                    "simulation.quadrature_nodes = {} must lie in 2..=64",
                    sim.quadrature_nodes
                )));
            }
            match &sim.q0 {
                StateInit::Named(name) if name == "equilibrium" || name == "zero" => {}
                StateInit::Named(name) => {
                    return Err(CliError::Config(format!(
                        "simulation.q0 = {name:?}: expected \"equilibrium\", \"zero\", or an array"
                    )));
                }
                StateInit::Explicit(values) => {
                    if values.len() != m {
                        return Err(CliError::Config(format!(
                            "simulation.q0 has {} entries; the family has {} tasks",
                            values.len(),
                            m
                        )));
                    }
                }
            }
            match &sim.x0 {
                StateInit::Named(name) if name == "uniform" || name == "equilibrium" => {}
                StateInit::Named(name) => {
                    return Err(CliError::Config(format!(
                        "simulation.x0 = {name:?}: expected \"uniform\", \"equilibrium\", or an array"
                    )));
                }
                StateInit::Explicit(values) => {
                    if values.len() != n {
                        return Err(CliError::Config(format!(
                            "simulation.x0 has {} entries; the family has {} strategies",
                            values.len(),
                            n
                        )));
                    }
                }
            }
        }

        if let Some(sampler) = &self.sampler {
            if sampler.count == 0 {
                return Err(CliError::Config("sampler.count must be at least 1".into()));
            }
            if let Some(q_max) = sampler.q_max {
                if !q_max.is_finite() || q_max <= 1e-2 {
                    return Err(CliError::Config(format!(
                        "sampler.q_max = {q_max} must be finite and exceed 0.01"
                    )));
                }
            }
        }

        if let Some(agents) = &self.agents {
            if agents.population == 0 {
                return Err(CliError::Config("agents.population must be at least 1".into()));
            }
            if agents.seeds.is_empty() {
                return Err(CliError::Config("agents.seeds must list at least one seed".into()));
            }
        }

        Ok(())
    }

    pub fn build_growth(&self) -> Result<GrowthRate64, CliError> {
        GrowthRate64::new(self.growth.clone()).map_err(CliError::config)
    }
}

/// Builds a payoff matrix from an explicit config entry, validating the
/// declared pattern against the actual entries.
pub fn build_explicit_payoff(
    spec: &ExplicitPayoff,
    family: &RateFamily64,
) -> Result<PayoffMatrix64, CliError> {
    let rows = spec.matrix.len();
    if rows == 0 {
        return Err(CliError::Config("payoff.matrix must have at least one row".into()));
    }
    let cols = spec.matrix[0].len();
    if spec.matrix.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config("payoff.matrix rows must all have the same length".into()));
    }
    let mat = Mat::from_rows(&spec.matrix);
    let pattern = match spec.pattern.unwrap_or(PatternName::Dense) {
        PatternName::Diagonal => PayoffPattern::Diagonal,
        PatternName::NeighborShared => PayoffPattern::NeighborShared {
            sets: family.service_sets(),
        },
        PatternName::Dense => PayoffPattern::Dense,
    };
    PayoffMatrix64::new(mat, pattern).map_err(CliError::config)
}
