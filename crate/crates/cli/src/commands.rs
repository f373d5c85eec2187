//! The four subcommands: payoff design, mean-field simulation,
//! finite-population simulation, and certification of a payoff matrix file.
//!
//! Every command writes the resolved configuration it actually used next to
//! its artifacts, and every artifact is byte-reproducible: rerunning the
//! same invocation on the same inputs yields identical files (outputs carry
//! no timestamps, durations, or host information).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use taskgame::io::trajectory_csv;
use taskgame::numerics::linalg::Mat;
use taskgame::{
    antistorage, design_payoff, lyapunov_monitor, natural_pattern, optimal_equilibrium,
    sample_constraints, simulate_agents, verify_conditions, AgentSimConfig64, ClosedLoop64,
    ConstraintSample, CostFunction, GrowthRate64, PayoffMatrix64, PayoffPattern,
    PopulationState64, QuadratureSpec, RateFamily64, RevisionProtocol64, SimConfig64,
    StationaryPair64, TaskVector64, Trajectory64,
};

use crate::config::{
    self, build_explicit_payoff, indices_to_neighborhoods, neighborhoods_to_indices,
    AgentsConfig, ExperimentConfig, PatternName, PayoffSource, SamplerConfig, ScheduleSegment,
    SimulationConfig, StateInit, ThetaPolicy, DEFAULT_QUADRATURE_NODES, DEFAULT_Q_MAX_FALLBACK,
};
use crate::error::CliError;

/// Negative-energy tolerance for the sample spot check in `verify`.
const ENERGY_TOL: f64 = -1e-10;

/// Parsed config plus the built model objects and lazily computed
/// cost-optimal equilibrium, shared by all subcommands.
pub struct Workspace {
    pub cfg: ExperimentConfig,
    pub family: RateFamily64,
    pub growth: GrowthRate64,
    pub out_dir: PathBuf,
    seed_override: Option<u64>,
    optimum: Option<(StationaryPair64, f64)>,
}

impl Workspace {
    pub fn new(
        config_path: &Path,
        out: Option<PathBuf>,
        seed_override: Option<u64>,
    ) -> Result<Self, CliError> {
        let cfg = config::load(config_path)?;
        let family = cfg.family.build()?;
        let growth = cfg.build_growth()?;
        let out_dir = out
            .or_else(|| cfg.output.clone().map(PathBuf::from))
            .ok_or_else(|| {
                CliError::Config("no output directory: pass --out or set \"output\" in the config".into())
            })?;
        fs::create_dir_all(&out_dir).map_err(CliError::io)?;
        Ok(Workspace {
            cfg,
            family,
            growth,
            out_dir,
            seed_override,
            optimum: None,
        })
    }

    fn mass(&self) -> f64 {
        self.cfg.mass
    }

    /// Cost-optimal stationary pair and its cost, computed once.
    fn optimum(&mut self) -> Result<(StationaryPair64, f64), CliError> {
        if self.optimum.is_none() {
            let report = optimal_equilibrium(&self.family, &self.growth, self.mass(), self.cfg.cost)
                .map_err(CliError::design_stage)?;
            self.optimum = Some((report.pair.clone(), report.cost));
        }
        Ok(self.optimum.clone().unwrap())
    }

    fn require_sampler(&self) -> Result<SamplerConfig, CliError> {
        self.cfg
            .sampler
            .clone()
            .ok_or_else(|| CliError::Config("this command requires a \"sampler\" section".into()))
    }

    fn require_simulation(&self) -> Result<SimulationConfig, CliError> {
        self.cfg
            .simulation
            .clone()
            .ok_or_else(|| CliError::Config("this command requires a \"simulation\" section".into()))
    }

    fn sampler_seed(&self, sampler: &SamplerConfig) -> u64 {
        self.seed_override.unwrap_or(sampler.seed)
    }

    /// Sampling ceiling: explicit, else twice the largest task level of the
    /// level-equalizing equilibrium, else 200.
    fn resolve_q_max(&self, sampler: &SamplerConfig) -> f64 {
        if let Some(q_max) = sampler.q_max {
            return q_max;
        }
        match optimal_equilibrium(&self.family, &self.growth, self.mass(), CostFunction::MaxNorm) {
            Ok(report) => {
                let top = report
                    .pair
                    .tasks()
                    .values()
                    .iter()
                    .cloned()
                    .fold(0.0_f64, f64::max);
                if (2.0 * top).is_finite() && 2.0 * top > 1e-2 {
                    2.0 * top
                } else {
                    DEFAULT_Q_MAX_FALLBACK
                }
            }
            Err(_) => DEFAULT_Q_MAX_FALLBACK,
        }
    }

    fn draw_samples(
        &self,
        sampler: &SamplerConfig,
        q_max: f64,
    ) -> Result<Vec<ConstraintSample<f64>>, CliError> {
        sample_constraints(
            &self.family,
            &self.growth,
            self.mass(),
            sampler.count,
            self.sampler_seed(sampler),
            q_max,
        )
        .map_err(CliError::design_stage)
    }

    /// Anchor weights: the optimal population split or the explicit vector.
    fn resolve_theta(&mut self) -> Result<Vec<f64>, CliError> {
        let protocol = self
            .cfg
            .protocol
            .clone()
            .ok_or_else(|| CliError::Config("this command requires a \"protocol\" section".into()))?;
        match &protocol.theta {
            ThetaPolicy::Named(_) => {
                let (pair, _) = self.optimum()?;
                let theta = pair.population().masses().to_vec();
                let unused: Vec<usize> = theta
                    .iter()
                    .enumerate()
                    .filter(|&(_, &t)| t <= 0.0)
                    .map(|(j, _)| j + 1)
                    .collect();
                if !unused.is_empty() {
                    return Err(CliError::Config(format!(
                        "protocol.theta \"optimal\": the cost-optimal split leaves strategies {unused:?} \
                         unused (zero mass); a revision anchor must be strictly positive, so give \
                         protocol.theta explicitly (e.g. the optimal split blended with a small uniform share)"
                    )));
                }
                Ok(theta)
            }
            ThetaPolicy::Explicit(weights) => Ok(weights.clone()),
        }
    }

    /// Temperature segments: the single `eta` over the simulation horizon,
    /// or the explicit schedule.
    fn resolve_segments(&self, sim: &SimulationConfig) -> Result<Vec<ScheduleSegment>, CliError> {
        let protocol = self
            .cfg
            .protocol
            .as_ref()
            .ok_or_else(|| CliError::Config("this command requires a \"protocol\" section".into()))?;
        match (&protocol.eta, &protocol.schedule) {
            (Some(eta), None) => {
                let horizon = sim.horizon.ok_or_else(|| {
                    CliError::Config("simulation.horizon is required when protocol.eta is used".into())
                })?;
                Ok(vec![ScheduleSegment { eta: *eta, horizon }])
            }
            (None, Some(schedule)) => {
                if sim.horizon.is_some() {
                    return Err(CliError::Config(
                        "omit simulation.horizon when protocol.schedule is given; the segment horizons add up to the final time".into(),
                    ));
                }
                Ok(schedule.clone())
            }
            _ => unreachable!("config validation enforces exactly one of eta/schedule"),
        }
    }

    /// The payoff matrix the run uses, plus a provenance label for the echo.
    fn resolve_payoff(&mut self) -> Result<(PayoffMatrix64, String), CliError> {
        let source = self
            .cfg
            .payoff
            .clone()
            .ok_or_else(|| CliError::Config("this command requires a \"payoff\" entry".into()))?;
        match source {
            PayoffSource::Named(name) if name == "identity" => {
                let m = self.family.task_count();
                let n = self.family.strategy_count();
                if n != m {
                    return Err(CliError::Config(format!(
                        "payoff \"identity\" requires one strategy per task, but the family has {n} strategies and {m} tasks"
                    )));
                }
                Ok((PayoffMatrix64::identity(m).map_err(CliError::config)?, name))
            }
            PayoffSource::Named(name) => {
                // "design": run the full pipeline and use the designed matrix.
                let sampler = self.require_sampler()?;
                let (pair, _) = self.optimum()?;
                let q_max = self.resolve_q_max(&sampler);
                let samples = self.draw_samples(&sampler, q_max)?;
                let pattern = natural_pattern(&self.family);
                let report = design_payoff(&self.family, &self.growth, &samples, pattern, &pair)
                    .map_err(CliError::design_stage)?;
                Ok((report.payoff, name))
            }
            PayoffSource::Explicit(spec) => Ok((
                build_explicit_payoff(&spec, &self.family)?,
                "explicit".to_string(),
            )),
        }
    }

    fn resolve_q0(&mut self, sim: &SimulationConfig) -> Result<Vec<f64>, CliError> {
        match &sim.q0 {
            StateInit::Named(name) if name == "zero" => {
                Ok(vec![0.0; self.family.task_count()])
            }
            StateInit::Named(_) => {
                let (pair, _) = self.optimum()?;
                Ok(pair.tasks().values().to_vec())
            }
            StateInit::Explicit(values) => {
                TaskVector64::new(values.clone()).map_err(CliError::config)?;
                Ok(values.clone())
            }
        }
    }

    fn resolve_x0(&mut self, sim: &SimulationConfig) -> Result<PopulationState64, CliError> {
        let n = self.family.strategy_count();
        match &sim.x0 {
            StateInit::Named(name) if name == "uniform" => {
                PopulationState64::uniform(n, self.mass()).map_err(CliError::config)
            }
            StateInit::Named(_) => {
                let (pair, _) = self.optimum()?;
                PopulationState64::new(pair.population().masses().to_vec(), self.mass())
                    .map_err(CliError::config)
            }
            StateInit::Explicit(values) => {
                PopulationState64::new(values.clone(), self.mass()).map_err(CliError::config)
            }
        }
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        write_json(&self.out_dir.join(name), value)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.out_dir.join(name), text).map_err(CliError::io)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io)
}

// ---------------------------------------------------------------------------
// Payoff matrix files (written by design/simulate, read back by verify).

#[derive(Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffFile {
    pattern: PatternName,
    /// 1-based service sets, present only for `neighbor_shared`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    neighborhoods: Option<Vec<Vec<usize>>>,
    /// Row-major `n x m` matrix (strategies by tasks).
    matrix: Vec<Vec<f64>>,
}

fn payoff_file(matrix: &PayoffMatrix64) -> PayoffFile {
    let (pattern, neighborhoods) = match matrix.pattern() {
        PayoffPattern::Diagonal => (PatternName::Diagonal, None),
        PayoffPattern::NeighborShared { sets } => (
            PatternName::NeighborShared,
            Some(indices_to_neighborhoods(sets)),
        ),
        PayoffPattern::Dense => (PatternName::Dense, None),
    };
    PayoffFile {
        pattern,
        neighborhoods,
        matrix: matrix.matrix().to_rows(),
    }
}

fn read_payoff_file(path: &Path, family: &RateFamily64) -> Result<PayoffMatrix64, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read payoff file {}: {e}", path.display())))?;
    let file: PayoffFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse payoff file {}: {e}", path.display())))?;
    let rows = file.matrix.len();
    if rows == 0 {
        return Err(CliError::Config("payoff file matrix must have at least one row".into()));
    }
    let cols = file.matrix[0].len();
    if file.matrix.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config("payoff file matrix rows must all have the same length".into()));
    }
    let pattern = match file.pattern {
        PatternName::Diagonal => PayoffPattern::Diagonal,
        PatternName::Dense => PayoffPattern::Dense,
        PatternName::NeighborShared => {
            let sets = match &file.neighborhoods {
                Some(sets) => neighborhoods_to_indices(sets, rows)?,
                None => family.service_sets(),
            };
            PayoffPattern::NeighborShared { sets }
        }
    };
    PayoffMatrix64::new(Mat::from_rows(&file.matrix), pattern).map_err(CliError::config)
}

// ---------------------------------------------------------------------------
// Resolved-configuration echo.

#[derive(Serialize)]
struct ResolvedEcho<'a> {
    command: &'static str,
    family: &'a config::FamilyConfig,
    growth: &'a [f64],
    mass: f64,
    cost: CostFunction,
    #[serde(skip_serializing_if = "Option::is_none")]
    protocol: Option<ProtocolEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    payoff: Option<PayoffEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<SimulationEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampler: Option<SamplerEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agents: Option<&'a AgentsConfig>,
}

#[derive(Serialize)]
struct ProtocolEcho {
    /// Anchor weights after policy resolution.
    theta: Vec<f64>,
    segments: Vec<ScheduleSegment>,
}

#[derive(Serialize)]
struct PayoffEcho {
    source: String,
    file: PayoffFile,
}

#[derive(Serialize)]
struct SimulationEcho {
    total_horizon: f64,
    step: f64,
    record_stride: usize,
    q0: Vec<f64>,
    x0: Vec<f64>,
    record_energy: bool,
    quadrature_nodes: usize,
}

#[derive(Serialize)]
struct SamplerEcho {
    count: usize,
    seed: u64,
    q_max: f64,
}

// ---------------------------------------------------------------------------
// design

pub fn cmd_design(mut ws: Workspace) -> Result<(), CliError> {
    let sampler = ws.require_sampler()?;

    if ws.growth.values().iter().all(|&w| w == 0.0) {
        let m = ws.family.task_count();
        let n = ws.family.strategy_count();
        eprintln!(
            "degenerate game: the growth vector is zero, every task level decays to zero under any \
             population split, and the design problem imposes no constraints"
        );
        ws.write_json(
            "equilibrium.json",
            &json!({
                "degenerate": true,
                "detail": "zero growth: the stationary task vector is 0 for every population split and every split is cost-optimal",
                "tasks": vec![0.0; m],
                "population": vec![ws.mass() / n as f64; n],
                "cost": 0.0,
            }),
        )?;
        ws.write_json(
            "design_report.json",
            &json!({
                "degenerate": true,
                "detail": "nothing to design: any payoff matrix leaves the zero equilibrium optimal",
            }),
        )?;
        let echo = ResolvedEcho {
            command: "design",
            family: &ws.cfg.family,
            growth: &ws.cfg.growth,
            mass: ws.mass(),
            cost: ws.cfg.cost,
            protocol: None,
            payoff: None,
            simulation: None,
            sampler: Some(SamplerEcho {
                count: sampler.count,
                seed: ws.sampler_seed(&sampler),
                q_max: ws.resolve_q_max(&sampler),
            }),
            agents: None,
        };
        ws.write_json("resolved_config.json", &echo)?;
        println!("design: degenerate game (zero growth); wrote {}", ws.out_dir.display());
        return Ok(());
    }

    let report = optimal_equilibrium(&ws.family, &ws.growth, ws.mass(), ws.cfg.cost)
        .map_err(CliError::design_stage)?;
    ws.optimum = Some((report.pair.clone(), report.cost));

    let q_max = ws.resolve_q_max(&sampler);
    let samples = ws.draw_samples(&sampler, q_max)?;
    let pattern = natural_pattern(&ws.family);
    let design = design_payoff(&ws.family, &ws.growth, &samples, pattern, &report.pair)
        .map_err(CliError::design_stage)?;

    ws.write_json("equilibrium.json", &report)?;
    ws.write_json("design_report.json", &design)?;
    ws.write_json("payoff_matrix.json", &payoff_file(&design.payoff))?;
    let echo = ResolvedEcho {
        command: "design",
        family: &ws.cfg.family,
        growth: &ws.cfg.growth,
        mass: ws.mass(),
        cost: ws.cfg.cost,
        protocol: None,
        payoff: Some(PayoffEcho {
            source: "design".into(),
            file: payoff_file(&design.payoff),
        }),
        simulation: None,
        sampler: Some(SamplerEcho {
            count: sampler.count,
            seed: ws.sampler_seed(&sampler),
            q_max,
        }),
        agents: None,
    };
    ws.write_json("resolved_config.json", &echo)?;

    if !design.passed {
        return Err(CliError::Infeasible(format!(
            "designed matrix failed its own certification (margin {:.3e}); see design_report.json",
            design.margin
        )));
    }
    println!(
        "design: margin {:.6e}, certification passed, optimal cost {:.6}; wrote {}",
        design.margin,
        report.cost,
        ws.out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

/// Extends `acc` by `seg` shifted to start at `offset`, dropping `seg`'s
/// initial sample when it duplicates the accumulated terminal time.
fn append_segment(acc: &mut Trajectory64, seg: Trajectory64, offset: f64) {
    let skip = usize::from(!acc.times.is_empty());
    acc.times.extend(seg.times.iter().skip(skip).map(|t| offset + t));
    acc.tasks.extend(seg.tasks.into_iter().skip(skip));
    acc.populations.extend(seg.populations.into_iter().skip(skip));
    acc.payoffs.extend(seg.payoffs.into_iter().skip(skip));
    acc.storage.extend(seg.storage.into_iter().skip(skip));
    if let (Some(acc_l), Some(seg_l)) = (acc.antistorage.as_mut(), seg.antistorage) {
        acc_l.extend(seg_l.into_iter().skip(skip));
    }
}

pub fn cmd_simulate(mut ws: Workspace) -> Result<(), CliError> {
    let sim = ws.require_simulation()?;
    let (payoff, payoff_source) = ws.resolve_payoff()?;
    let theta = ws.resolve_theta()?;
    let segments = ws.resolve_segments(&sim)?;
    let q0 = ws.resolve_q0(&sim)?;
    let x0 = ws.resolve_x0(&sim)?;
    let quad = QuadratureSpec::new(sim.quadrature_nodes).map_err(CliError::config)?;

    let mut combined = Trajectory64 {
        times: Vec::new(),
        tasks: Vec::new(),
        populations: Vec::new(),
        payoffs: Vec::new(),
        storage: Vec::new(),
        antistorage: sim.record_energy.then(Vec::new),
    };
    let mut monitors = Vec::new();
    let mut cur_q = q0.clone();
    let mut cur_x = x0.clone();
    let mut offset = 0.0;
    let mut last_loop = None;

    for seg in &segments {
        let protocol =
            RevisionProtocol64::new(theta.clone(), seg.eta).map_err(CliError::config)?;
        let system = ClosedLoop64::new(
            ws.family.clone(),
            ws.growth.clone(),
            payoff.clone(),
            protocol.clone(),
        )
        .map_err(CliError::config)?;
        let sim_cfg = SimConfig64 {
            horizon: seg.horizon,
            step: sim.step,
            record_stride: sim.record_stride,
            antistorage: sim.record_energy.then_some(quad),
            pin_population: false,
        };
        let start_q = TaskVector64::new(cur_q.clone()).map_err(CliError::config)?;
        let traj = system
            .simulate(&start_q, &cur_x, &sim_cfg)
            .map_err(CliError::simulate_stage)?;

        monitors.push(
            match lyapunov_monitor(&traj, &payoff, &ws.family, &ws.growth, &protocol, &quad) {
                Ok(report) => json!({"status": "ok", "eta": seg.eta, "report": report}),
                Err(e) => json!({"status": "unavailable", "eta": seg.eta, "reason": e.to_string()}),
            },
        );

        cur_q = traj.last_tasks().to_vec();
        cur_x = PopulationState64::new(traj.last_population().to_vec(), ws.mass())
            .map_err(|e| CliError::Runtime(format!("terminal population state: {e}")))?;
        append_segment(&mut combined, traj, offset);
        offset += seg.horizon;
        last_loop = Some(system);
    }
    let system = last_loop.expect("at least one segment");

    let residual = system
        .equilibrium_residual(&cur_q, cur_x.masses())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let terminal_cost = ws.cfg.cost.evaluate(&cur_q);
    let optimum = match ws.optimum() {
        Ok((pair, cost)) => json!({
            "tasks": pair.tasks().values(),
            "population": pair.population().masses(),
            "cost": cost,
        }),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    let monitor_passed = monitors.iter().all(|m| {
        m.get("report")
            .and_then(|r| r.get("passed"))
            .and_then(|p| p.as_bool())
            .unwrap_or(false)
    });

    ws.write_text("trajectory.csv", &trajectory_csv(&combined))?;
    ws.write_json(
        "summary.json",
        &json!({
            "terminal_time": offset,
            "terminal_tasks": cur_q,
            "terminal_population": cur_x.masses(),
            "terminal_residual": residual,
            "terminal_cost": terminal_cost,
            "optimum": optimum,
            "monitors": monitors,
            "monitor_passed": monitor_passed,
        }),
    )?;
    ws.write_json(
        "metadata.json",
        &json!({
            "command": "simulate",
            "version": env!("CARGO_PKG_VERSION"),
            "tasks": ws.family.task_count(),
            "strategies": ws.family.strategy_count(),
            "segments": segments.len(),
            "total_horizon": offset,
            "step": sim.step,
            "record_stride": sim.record_stride,
            "samples": combined.times.len(),
            "energy_recorded": sim.record_energy,
        }),
    )?;
    ws.write_json("payoff_matrix.json", &payoff_file(&payoff))?;
    let echo = ResolvedEcho {
        command: "simulate",
        family: &ws.cfg.family,
        growth: &ws.cfg.growth,
        mass: ws.cfg.mass,
        cost: ws.cfg.cost,
        protocol: Some(ProtocolEcho {
            theta,
            segments: segments.clone(),
        }),
        payoff: Some(PayoffEcho {
            source: payoff_source,
            file: payoff_file(&payoff),
        }),
        simulation: Some(SimulationEcho {
            total_horizon: offset,
            step: sim.step,
            record_stride: sim.record_stride,
            q0,
            x0: x0.masses().to_vec(),
            record_energy: sim.record_energy,
            quadrature_nodes: sim.quadrature_nodes,
        }),
        sampler: None,
        agents: None,
    };
    ws.write_json("resolved_config.json", &echo)?;

    println!(
        "simulate: {} samples over [0, {}], terminal residual {:.3e}, terminal cost {:.6}, monitor {}; wrote {}",
        combined.times.len(),
        offset,
        residual,
        terminal_cost,
        if monitor_passed { "passed" } else { "not passed" },
        ws.out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// agents

fn sup_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| {
            u.iter()
                .zip(v)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max)
        })
        .fold(0.0_f64, f64::max)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite deviations"));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

pub fn cmd_agents(mut ws: Workspace) -> Result<(), CliError> {
    let agents = ws
        .cfg
        .agents
        .clone()
        .ok_or_else(|| CliError::Config("this command requires an \"agents\" section".into()))?;
    let sim = ws.require_simulation()?;
    let segments = ws.resolve_segments(&sim)?;
    if segments.len() != 1 {
        return Err(CliError::Config(
            "multi-segment temperature schedules are not supported for agent simulations; give a single protocol.eta".into(),
        ));
    }
    let seg = &segments[0];
    let (payoff, payoff_source) = ws.resolve_payoff()?;
    let theta = ws.resolve_theta()?;
    let q0 = ws.resolve_q0(&sim)?;
    let x0 = ws.resolve_x0(&sim)?;

    let protocol = RevisionProtocol64::new(theta.clone(), seg.eta).map_err(CliError::config)?;
    let system = ClosedLoop64::new(
        ws.family.clone(),
        ws.growth.clone(),
        payoff.clone(),
        protocol,
    )
    .map_err(CliError::config)?;

    let ode_cfg = SimConfig64 {
        horizon: seg.horizon,
        step: sim.step,
        record_stride: sim.record_stride,
        antistorage: None,
        pin_population: false,
    };
    let start_q = TaskVector64::new(q0.clone()).map_err(CliError::config)?;
    let ode = system
        .simulate(&start_q, &x0, &ode_cfg)
        .map_err(CliError::simulate_stage)?;
    ws.write_text("trajectory_ode.csv", &trajectory_csv(&ode))?;

    let mut per_seed = Vec::new();
    let mut population_deviations = Vec::new();
    for &seed in &agents.seeds {
        let agent_cfg = AgentSimConfig64 {
            agent_count: agents.population,
            seed,
            horizon: seg.horizon,
            step: sim.step,
            record_stride: sim.record_stride,
            antistorage: None,
        };
        let traj =
            simulate_agents(&system, &q0, &x0, &agent_cfg).map_err(CliError::simulate_stage)?;
        if traj.times.len() != ode.times.len() {
            return Err(CliError::Runtime(format!(
                "agent run (seed {seed}) recorded {} samples but the reference run recorded {}",
                traj.times.len(),
                ode.times.len()
            )));
        }
        let dev_x = sup_deviation(&traj.populations, &ode.populations);
        let dev_q = sup_deviation(&traj.tasks, &ode.tasks);
        ws.write_text(&format!("trajectory_seed_{seed}.csv"), &trajectory_csv(&traj))?;
        per_seed.push(json!({
            "seed": seed,
            "sup_population_deviation": dev_x,
            "sup_task_deviation": dev_q,
        }));
        population_deviations.push(dev_x);
    }
    let median_dev = median(&mut population_deviations);

    ws.write_json(
        "deviation_summary.json",
        &json!({
            "population": agents.population,
            "runs": agents.seeds.len(),
            "per_seed": per_seed,
            "median_population_deviation": median_dev,
        }),
    )?;
    ws.write_json(
        "metadata.json",
        &json!({
            "command": "agents",
            "version": env!("CARGO_PKG_VERSION"),
            "tasks": ws.family.task_count(),
            "strategies": ws.family.strategy_count(),
            "population": agents.population,
            "runs": agents.seeds.len(),
            "horizon": seg.horizon,
            "step": sim.step,
            "record_stride": sim.record_stride,
        }),
    )?;
    ws.write_json("payoff_matrix.json", &payoff_file(&payoff))?;
    let echo = ResolvedEcho {
        command: "agents",
        family: &ws.cfg.family,
        growth: &ws.cfg.growth,
        mass: ws.cfg.mass,
        cost: ws.cfg.cost,
        protocol: Some(ProtocolEcho {
            theta,
            segments: segments.clone(),
        }),
        payoff: Some(PayoffEcho {
            source: payoff_source,
            file: payoff_file(&payoff),
        }),
        simulation: Some(SimulationEcho {
            total_horizon: seg.horizon,
            step: sim.step,
            record_stride: sim.record_stride,
            q0,
            x0: x0.masses().to_vec(),
            record_energy: false,
            quadrature_nodes: sim.quadrature_nodes,
        }),
        sampler: None,
        agents: Some(&agents),
    };
    ws.write_json("resolved_config.json", &echo)?;

    println!(
        "agents: {} runs of {} agents, median sup population deviation {:.4}; wrote {}",
        agents.seeds.len(),
        agents.population,
        median_dev,
        ws.out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// verify

pub fn cmd_verify(mut ws: Workspace, payoff_path: &Path) -> Result<(), CliError> {
    let sampler = ws.require_sampler()?;
    let payoff = read_payoff_file(payoff_path, &ws.family)?;
    let (pair, _) = ws.optimum()?;
    let q_max = ws.resolve_q_max(&sampler);
    let samples = ws.draw_samples(&sampler, q_max)?;

    let report = verify_conditions(&payoff, &ws.family, &ws.growth, &samples, &pair)
        .map_err(CliError::design_stage)?;

    let nodes = ws
        .cfg
        .simulation
        .as_ref()
        .map(|s| s.quadrature_nodes)
        .unwrap_or(DEFAULT_QUADRATURE_NODES);
    let quad = QuadratureSpec::new(nodes).map_err(CliError::config)?;
    let mut min_energy = f64::INFINITY;
    let mut negatives = 0_usize;
    for sample in &samples {
        let value = antistorage(
            sample.tasks(),
            sample.population(),
            &payoff,
            &ws.family,
            &ws.growth,
            &quad,
        )
        .map_err(|e| CliError::Runtime(format!("energy spot check: {e}")))?;
        min_energy = min_energy.min(value);
        if value < ENERGY_TOL {
            negatives += 1;
        }
    }
    let energy_ok = negatives == 0;
    let passed = report.passed && energy_ok;

    ws.write_json(
        "verify_report.json",
        &json!({
            "payoff_file": payoff_path.display().to_string(),
            "conditions": report,
            "energy": {
                "samples": samples.len(),
                "min": min_energy,
                "negative_count": negatives,
                "tolerance": ENERGY_TOL,
                "passed": energy_ok,
            },
            "passed": passed,
        }),
    )?;
    let echo = ResolvedEcho {
        command: "verify",
        family: &ws.cfg.family,
        growth: &ws.cfg.growth,
        mass: ws.cfg.mass,
        cost: ws.cfg.cost,
        protocol: None,
        payoff: Some(PayoffEcho {
            source: "file".into(),
            file: payoff_file(&payoff),
        }),
        simulation: None,
        sampler: Some(SamplerEcho {
            count: sampler.count,
            seed: ws.sampler_seed(&sampler),
            q_max,
        }),
        agents: None,
    };
    ws.write_json("resolved_config.json", &echo)?;

    if !passed {
        let mut reasons = Vec::new();
        if !report.symmetry.passed {
            reasons.push(format!("symmetry check failed (worst {:.3e})", report.symmetry.worst));
        }
        if !report.column.passed {
            reasons.push(format!(
                "column alignment failed ({} violations, min slack {:.3e})",
                report.column.violations, report.column.worst
            ));
        }
        if !report.row.passed {
            reasons.push(format!(
                "row dominance at the optimum failed ({} violations, worst {:.3e})",
                report.row.violations, report.row.worst
            ));
        }
        if !energy_ok {
            reasons.push(format!(
                "energy negative at {negatives} samples (min {min_energy:.3e})"
            ));
        }
        return Err(CliError::VerifyFailed(reasons.join("; ")));
    }
    println!(
        "verify: certification passed (margin {:.3e}, min energy {:.3e}); wrote {}",
        report.margin,
        min_energy,
        ws.out_dir.display()
    );
    Ok(())
}
