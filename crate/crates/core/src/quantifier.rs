//! Almost-safe set quantification by guided scenario sampling, and the
//! matching statistical validation.
//!
//! The quantification loop alternates between
//!
//! * sampling a start centroid, uniformly when the replay buffer is empty and
//!   otherwise the centroid nearest to a popped failure state,
//! * running the scenario,
//! * on collision, pruning the failing start and every centroid with an
//!   observed path into it, and queueing the failing states for focused
//!   resampling,
//! * on a safe run, adding any uncovered state as a new centroid linked to
//!   the centroid the run came from.
//!
//! It stops once `required_consecutive_runs(ε, β)` runs in a row started from
//! a uniformly drawn centroid, stayed inside the set and left it unchanged.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CellId, CoveringGrid, Delta, ExitReason, Metric, ReplayBuffer, RunStats, SafeSetDump, State,
    TransitionGraph,
};
use crate::error::{Error, Result};
use crate::models::SubjectVehicleModel;
use crate::sim::{run_scenario, LeadPolicy, SimConfig, Termination, Trajectory};

/// `ceil(ln β / ln(1 − ε))`, at least one.
pub fn required_consecutive_runs(epsilon: f64, beta: f64) -> Result<usize> {
    check_probability("epsilon", epsilon)?;
    check_probability("beta", beta)?;
    if epsilon == 1.0 {
        return Ok(1);
    }
    let ratio = beta.ln() / (-epsilon).ln_1p();
    // tolerance keeps exact integer ratios from rounding up
    Ok(((ratio - 1e-9).ceil() as usize).max(1))
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// Which safe-run transitions are recorded in the state graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Only edges into newly added centroids.
    #[default]
    ExpansionOnly,
    /// Also every move between distinct existing cells, so pruning cascades
    /// through the initial lattice. Results then depend on sampling order.
    Cascading,
}

/// Which states of a failing run seed ancestor pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    /// States that are themselves centroids: the start, and any added
    /// centroid the run passed through exactly.
    #[default]
    Point,
    /// The cell covering each state of the run. Removes cells whose own
    /// centroid may be safe.
    Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantConfig {
    pub epsilon: f64,
    pub beta: f64,
    pub delta: Delta,
    pub sim: SimConfig,
    pub policy: LeadPolicy,
    pub seed: u64,
    /// Defaults to 50 times the required consecutive count.
    #[serde(default)]
    pub max_total_runs: Option<usize>,
    #[serde(default)]
    pub edge_mode: EdgeMode,
    #[serde(default)]
    pub prune_mode: PruneMode,
    #[serde(default)]
    pub metric: Metric,
}

impl QuantConfig {
    pub fn new(
        epsilon: f64,
        beta: f64,
        delta: [f64; 3],
        sim: SimConfig,
        policy: LeadPolicy,
    ) -> Self {
        QuantConfig {
            epsilon,
            beta,
            delta: Delta(delta),
            sim,
            policy,
            seed: 0,
            max_total_runs: None,
            edge_mode: EdgeMode::default(),
            prune_mode: PruneMode::default(),
            metric: Metric::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn required_runs(&self) -> Result<usize> {
        required_consecutive_runs(self.epsilon, self.beta)
    }

    pub fn run_cap(&self) -> Result<usize> {
        Ok(self.max_total_runs.unwrap_or(50 * self.required_runs()?))
    }

    pub fn check(&self) -> Result<()> {
        let required = self.required_runs()?;
        self.delta.check()?;
        self.sim.check()?;
        if let Some(cap) = self.max_total_runs {
            if cap <= required {
                return Err(Error::Config(format!(
                    "max_total_runs {cap} must exceed the {required} required consecutive runs"
                )));
            }
        }
        Ok(())
    }

    /// Full lattice over the bounds with failure-touching cells removed.
    pub fn initial_grid(&self) -> Result<CoveringGrid> {
        let mut grid = CoveringGrid::new(self.sim.bounds, self.delta)?.with_metric(self.metric);
        grid.exclude_failure_set(self.sim.collision_headway);
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSource {
    Uniform,
    Buffer,
}

/// One line of the quantification log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub s0: State,
    pub source: StartSource,
    pub outcome: Termination,
    pub trajectory_len: usize,
    pub active_after: usize,
    pub buffer_after: usize,
    pub consecutive_after: usize,
}

pub fn write_run_log<W: Write>(log: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run",
        "s0_d",
        "s0_v0",
        "s0_v1",
        "source",
        "outcome",
        "trajectory_len",
        "active_after",
        "buffer_after",
        "consecutive_after",
    ])?;
    for r in log {
        let source = match r.source {
            StartSource::Uniform => "uniform",
            StartSource::Buffer => "buffer",
        };
        let outcome = match r.outcome {
            Termination::Collision => "collision",
            Termination::Horizon => "horizon",
        };
        w.write_record([
            r.run.to_string(),
            r.s0.d.to_string(),
            r.s0.v0.to_string(),
            r.s0.v1.to_string(),
            source.to_owned(),
            outcome.to_owned(),
            r.trajectory_len.to_string(),
            r.active_after.to_string(),
            r.buffer_after.to_string(),
            r.consecutive_after.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<run log>", e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SafeSetResult {
    /// The claimed almost safe set.
    pub grid: CoveringGrid,
    /// Observed safe transitions between cells.
    pub state_graph: TransitionGraph,
    /// Observed transitions on failing runs.
    pub unsafe_edges: Vec<(State, State)>,
    pub stats: RunStats,
    pub config: QuantConfig,
    pub log: Vec<RunRecord>,
}

impl SafeSetResult {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn exit_reason(&self) -> ExitReason {
        self.stats.exit_reason
    }

    /// State-graph edges from an active cell into a removed one.
    pub fn pruning_closure_violations(&self) -> Vec<(CellId, CellId)> {
        self.state_graph
            .edges()
            .filter(|(a, b)| self.grid.is_active(*a) && !self.grid.is_active(*b))
            .collect()
    }

    pub fn to_dump(&self) -> Result<SafeSetDump> {
        self.to_dump_with(serde_json::to_value(&self.config)?)
    }

    /// Dump with a caller-supplied configuration echo.
    pub fn to_dump_with(&self, config: serde_json::Value) -> Result<SafeSetDump> {
        Ok(
            SafeSetDump::from_grid(&self.grid, Some(self.config.seed), config)
                .with_stats(self.stats.clone()),
        )
    }
}

/// Quantifies from the full lattice over the configured bounds.
pub fn quantify(cfg: &QuantConfig, model: &mut dyn SubjectVehicleModel) -> Result<SafeSetResult> {
    let grid = cfg.initial_grid()?;
    quantify_from(cfg, model, grid)
}

/// Quantifies starting from a given grid, e.g. another model's result.
pub fn quantify_from(
    cfg: &QuantConfig,
    model: &mut dyn SubjectVehicleModel,
    initial: CoveringGrid,
) -> Result<SafeSetResult> {
    quantify_observed(cfg, model, initial, &mut |_, _| {})
}

/// [`quantify_from`] with a callback that sees every run as it is logged.
pub fn quantify_observed(
    cfg: &QuantConfig,
    model: &mut dyn SubjectVehicleModel,
    initial: CoveringGrid,
    observer: &mut dyn FnMut(&RunRecord, &Trajectory),
) -> Result<SafeSetResult> {
    cfg.check()?;
    if initial.bounds() != &cfg.sim.bounds || initial.delta() != &cfg.delta {
        return Err(Error::GridMismatch(
            "initial grid bounds/delta differ from the configuration".into(),
        ));
    }
    let required = cfg.required_runs()?;
    let cap = cfg.run_cap()?;

    let mut grid = initial;
    grid.exclude_failure_set(cfg.sim.collision_headway);
    let mut graph = TransitionGraph::new();
    for (id, _) in grid.iter() {
        graph.add_vertex(id);
    }
    let mut unsafe_edges = Vec::new();
    let mut buffer = ReplayBuffer::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = Vec::new();

    let mut consecutive = 0usize;
    let mut total_runs = 0usize;
    let mut collision_runs = 0usize;

    let exit_reason = loop {
        if consecutive >= required {
            break ExitReason::Validated;
        }
        if grid.is_empty() {
            buffer.clear();
            break ExitReason::ExhaustedEmpty;
        }
        if total_runs >= cap {
            break ExitReason::RunCap;
        }

        let (start, s0, source) = if buffer.is_empty() {
            let (id, s) = grid.sample_centroid(&mut rng)?;
            (id, s, StartSource::Uniform)
        } else {
            let sb = buffer.pop()?;
            let id = grid.nearest_centroid(&sb)?;
            (id, grid.centroid(id).expect("active"), StartSource::Buffer)
        };

        let traj = run_scenario(model, &cfg.policy, s0, &cfg.sim, &mut rng)?;
        total_runs += 1;

        if traj.collided() {
            collision_runs += 1;
            let last = traj.states.len() - 1;
            for i in 0..last {
                let s = traj.states[i];
                buffer.push(s);
                let hit = match cfg.prune_mode {
                    PruneMode::Cell => grid.cell_of(&s),
                    _ if i == 0 => Some(start),
                    PruneMode::Point => grid.cell_of(&s).filter(|c| grid.centroid(*c) == Some(s)),
                };
                if let Some(cell) = hit {
                    for doomed in graph.ancestors(cell) {
                        grid.remove(doomed);
                    }
                }
                unsafe_edges.push((s, traj.states[i + 1]));
            }
            buffer.push(traj.states[last]);
            consecutive = 0;
        } else {
            let before = grid.active_len();
            let mut prev = start;
            for s in &traj.states[1..] {
                match grid.cell_of(s) {
                    None => {
                        let id = grid.insert_extra(*s);
                        graph.add_edge(prev, id);
                        prev = id;
                    }
                    Some(cell) if cfg.edge_mode == EdgeMode::Cascading && cell != prev => {
                        graph.add_edge(prev, cell);
                        prev = cell;
                    }
                    Some(_) => {}
                }
            }
            if grid.active_len() != before || !buffer.is_empty() {
                consecutive = 0;
            } else {
                consecutive += 1;
            }
        }

        let record = RunRecord {
            run: total_runs - 1,
            s0,
            source,
            outcome: traj.terminated_by,
            trajectory_len: traj.len(),
            active_after: grid.active_len(),
            buffer_after: buffer.len(),
            consecutive_after: consecutive,
        };
        observer(&record, &traj);
        log.push(record);
    };

    Ok(SafeSetResult {
        grid,
        state_graph: graph,
        unsafe_edges,
        stats: RunStats {
            total_runs,
            collision_runs,
            consecutive_safe_at_exit: consecutive,
            required_runs: required,
            exit_reason,
        },
        config: cfg.clone(),
        log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCause {
    Collision,
    LeftSet,
    /// A neighborhood of the set reaches into the failure set.
    FailureSetOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub run: usize,
    pub step: usize,
    pub state: State,
    pub cause: ViolationCause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub runs_executed: usize,
    pub required_runs: usize,
    pub first_violation: Option<Violation>,
}

/// Checks a candidate set with `required_consecutive_runs(ε, β)` runs from
/// independently drawn centroids. Stops at the first run that collides or
/// visits a state outside the set.
pub fn validate(
    grid: &CoveringGrid,
    model: &mut dyn SubjectVehicleModel,
    policy: &LeadPolicy,
    epsilon: f64,
    beta: f64,
    sim: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ValidationReport> {
    let required = required_consecutive_runs(epsilon, beta)?;
    sim.check()?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some((_, c)) = grid.failure_overlap(sim.collision_headway) {
        return Ok(ValidationReport {
            passed: false,
            runs_executed: 0,
            required_runs: required,
            first_violation: Some(Violation {
                run: 0,
                step: 0,
                state: c,
                cause: ViolationCause::FailureSetOverlap,
            }),
        });
    }
    for run in 0..required {
        let (_, s0) = grid.sample_centroid(rng)?;
        let traj = run_scenario(model, policy, s0, sim, rng)?;
        let violation = traj.states.iter().enumerate().find_map(|(step, s)| {
            if traj.collided() && step == traj.states.len() - 1 {
                Some((step, *s, ViolationCause::Collision))
            } else if !grid.covers(s) {
                Some((step, *s, ViolationCause::LeftSet))
            } else {
                None
            }
        });
        if let Some((step, state, cause)) = violation {
            return Ok(ValidationReport {
                passed: false,
                runs_executed: run + 1,
                required_runs: required,
                first_violation: Some(Violation {
                    run,
                    step,
                    state,
                    cause,
                }),
            });
        }
    }
    Ok(ValidationReport {
        passed: true,
        runs_executed: required,
        required_runs: required,
        first_violation: None,
    })
}
