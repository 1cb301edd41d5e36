//! Multi-hour DC-OPF with line switching.
//!
//! The model minimizes curtailment, generation and breaker-operation cost
//! over a horizon of hourly blocks. Switching is limited per line over the
//! horizon and system-wide per hour. [`dc_opf`] solves the fixed-topology
//! special case directly.

mod bnb;
mod dcopf;
mod export;
mod lp;
mod model;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::network::{DemandProfile, Network, Topology};

pub use bnb::{relative_gap, BackendOutcome, BranchAndBound, MilpBackend, INTEGRALITY_TOLERANCE};
pub use dcopf::{dc_opf, dc_opf_horizon, DcOpfSolution};
pub use export::write_lp;
pub use model::{
    all_switchable, big_m, build_model, frozen, FreeCandidates, MilpModel, ModelIndex, Row,
    RowFamily, Sense, Var, VarKind,
};

/// Absolute tolerance on constraint residuals of returned dispatches.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("line {line} is not switchable but is a free candidate in hour {hour}")]
    InvalidCandidate { line: usize, hour: usize },
    #[error("invalid planning configuration: {0}")]
    InvalidConfig(String),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("LP iteration limit reached")]
    IterationLimit,
    #[error("numerical failure in LP solve: {0}")]
    NumericalFailure(String),
    #[error("search limit reached before any feasible plan was found")]
    LimitWithoutIncumbent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    FeasibleAtLimit,
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleAtLimit => "feasible_at_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveLimits {
    /// Relative optimality gap at which the search stops.
    pub mip_gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            mip_gap: 1e-4,
            node_limit: None,
            time_limit: None,
        }
    }
}

impl SolveLimits {
    /// Search to (numerically) proven optimality.
    pub fn exact() -> Self {
        SolveLimits {
            mip_gap: 1e-9,
            ..Default::default()
        }
    }
}

/// How the big-M constant of each coupling row is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BigM {
    /// `M = B * pi`: the largest `|B dtheta|` the angle bounds allow.
    AngleSpan,
    /// One value per line, in MW.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingBudgets {
    /// Maximum breaker operations per line over the horizon.
    pub per_line: Vec<i64>,
    /// Maximum breaker operations in the whole network per hour.
    pub per_hour: Vec<i64>,
}

impl SwitchingBudgets {
    pub fn uniform(n_lines: usize, horizon: usize, per_line: i64, per_hour: i64) -> Self {
        SwitchingBudgets {
            per_line: vec![per_line; n_lines],
            per_hour: vec![per_hour; horizon],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningConfig {
    pub horizon: usize,
    /// `None` drops both budget families (classic switching).
    pub budgets: Option<SwitchingBudgets>,
    /// Loading fraction above which a line is monitored.
    pub alpha: f64,
    pub big_m: BigM,
    /// Charge `zeta` for closing as well as opening a line.
    pub charge_both_directions: bool,
    /// Fraction of `f_max` at which a predicted post-switching flow counts as an overload.
    pub overload_threshold: f64,
    pub limits: SolveLimits,
}

impl PlanningConfig {
    pub fn new(horizon: usize) -> Self {
        PlanningConfig {
            horizon,
            budgets: None,
            alpha: 0.5,
            big_m: BigM::AngleSpan,
            charge_both_directions: true,
            overload_threshold: 1.0,
            limits: SolveLimits::default(),
        }
    }

    pub fn with_budgets(mut self, budgets: SwitchingBudgets) -> Self {
        self.budgets = Some(budgets);
        self
    }

    pub(crate) fn check_dimensions(
        &self,
        network: &Network,
        demand: &DemandProfile,
    ) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::InvalidConfig(msg));
        if self.horizon == 0 {
            return bad("horizon must be at least one hour".into());
        }
        if demand.blocks() < self.horizon || network.blocks().is_some_and(|b| b < self.horizon) {
            return bad(format!("data covers fewer than {} blocks", self.horizon));
        }
        if demand.penalty.len() != network.n_buses()
            || demand.demand.iter().any(|d| d.len() != network.n_buses())
        {
            return bad("demand profile does not match the bus count".into());
        }
        if let Some(b) = &self.budgets {
            if b.per_line.len() != network.n_lines() || b.per_hour.len() != self.horizon {
                return bad("budget arrays do not match lines/horizon".into());
            }
        }
        if let BigM::Explicit(values) = &self.big_m {
            if values.len() != network.n_lines() {
                return bad("explicit big-M needs one value per line".into());
            }
        }
        Ok(())
    }

    /// Full validation, including the value ranges the model builder tolerates.
    pub fn validate(&self, network: &Network, demand: &DemandProfile) -> Result<(), SolveError> {
        self.check_dimensions(network, demand)?;
        let bad = |msg: String| Err(SolveError::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.overload_threshold > 0.0) {
            return bad("overload threshold must be positive".into());
        }
        if !(self.limits.mip_gap >= 0.0) {
            return bad("mip gap must be non-negative".into());
        }
        if let Some(b) = &self.budgets {
            if b.per_line.iter().chain(&b.per_hour).any(|&h| h < 0) {
                return bad("switching budgets must be non-negative".into());
            }
        }
        if let BigM::Explicit(values) = &self.big_m {
            for (l, &m) in values.iter().enumerate() {
                if !(m >= network.flow_factor(l) * std::f64::consts::PI) {
                    return bad(format!(
                        "big-M of line {} is below B*pi and would cut feasible flows",
                        network.lines()[l].id
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Dispatch of one hour; vectors are indexed by generator, line and bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct HourDispatch {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
}

impl HourDispatch {
    pub fn generation_cost(&self, network: &Network, t: usize) -> f64 {
        network
            .generators()
            .iter()
            .zip(&self.p)
            .map(|(g, p)| g.cost[t] * p)
            .sum()
    }

    pub fn curtailment_cost(&self, demand: &DemandProfile) -> f64 {
        demand.penalty.iter().zip(&self.r).map(|(q, r)| q * r).sum()
    }

    pub fn curtailment(&self) -> f64 {
        self.r.iter().sum()
    }
}

/// Line statuses for every hour, starting from the initial topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingPlan {
    pub initial: Topology,
    pub hours: Vec<Topology>,
}

impl SwitchingPlan {
    pub fn unchanged(initial: Topology, horizon: usize) -> Self {
        SwitchingPlan {
            hours: vec![initial.clone(); horizon],
            initial,
        }
    }

    fn previous(&self, t: usize) -> &Topology {
        if t == 0 {
            &self.initial
        } else {
            &self.hours[t - 1]
        }
    }

    /// Whether line `l` changes state entering hour `t`.
    pub fn switched(&self, t: usize, l: usize) -> bool {
        self.hours[t].is_closed(l) != self.previous(t).is_closed(l)
    }

    /// Whether line `l` is opened entering hour `t`.
    pub fn opened(&self, t: usize, l: usize) -> bool {
        self.previous(t).is_closed(l) && !self.hours[t].is_closed(l)
    }

    pub fn line_events(&self, l: usize) -> usize {
        (0..self.hours.len())
            .filter(|&t| self.switched(t, l))
            .count()
    }

    pub fn hour_events(&self, t: usize) -> usize {
        (0..self.initial.len())
            .filter(|&l| self.switched(t, l))
            .count()
    }

    pub fn total_events(&self) -> usize {
        (0..self.hours.len()).map(|t| self.hour_events(t)).sum()
    }

    /// Breaker-operation cost of entering hour `t`.
    pub fn switching_cost(&self, network: &Network, t: usize, both_directions: bool) -> f64 {
        network
            .lines()
            .iter()
            .enumerate()
            .filter(|&(l, _)| {
                if both_directions {
                    self.switched(t, l)
                } else {
                    self.opened(t, l)
                }
            })
            .map(|(_, line)| line.switch_cost)
            .sum()
    }

    /// True when every per-line and per-hour budget holds.
    pub fn respects(&self, budgets: &SwitchingBudgets) -> bool {
        (0..self.initial.len()).all(|l| self.line_events(l) as i64 <= budgets.per_line[l])
            && (0..self.hours.len()).all(|t| self.hour_events(t) as i64 <= budgets.per_hour[t])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub plan: SwitchingPlan,
    pub dispatch: Vec<HourDispatch>,
    pub nodes: u64,
    pub wall_time: Duration,
}

impl SolveResult {
    /// Absolute distance between incumbent and bound.
    pub fn absolute_gap(&self) -> f64 {
        (self.objective - self.bound).max(0.0)
    }
}

/// Solve with the reference branch-and-bound backend.
pub fn solve(model: &MilpModel, config: &PlanningConfig) -> Result<SolveResult, SolveError> {
    solve_with(&BranchAndBound, model, config)
}

pub fn solve_with(
    backend: &dyn MilpBackend,
    model: &MilpModel,
    config: &PlanningConfig,
) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let outcome = backend.solve_milp(model, &config.limits)?;
    match outcome.status {
        SolveStatus::Infeasible => return Err(SolveError::Infeasible),
        SolveStatus::Unbounded => return Err(SolveError::Unbounded),
        _ => {}
    }
    let x = &outcome.values;
    let idx = &model.index;
    let hours = idx
        .delta
        .iter()
        .map(|row| Topology::new(row.iter().map(|&j| x[j] > 0.5).collect()))
        .collect();
    let pick = |vars: &Vec<usize>| vars.iter().map(|&j| x[j]).collect::<Vec<f64>>();
    let dispatch = (0..model.horizon)
        .map(|t| HourDispatch {
            p: pick(&idx.p[t]),
            f: pick(&idx.f[t]),
            theta: pick(&idx.theta[t]),
            r: pick(&idx.r[t]),
        })
        .collect();
    Ok(SolveResult {
        status: outcome.status,
        objective: outcome.objective,
        bound: outcome.bound,
        gap: outcome.gap(),
        plan: SwitchingPlan {
            initial: Topology::new(model.initial.clone()),
            hours,
        },
        dispatch,
        nodes: outcome.nodes,
        wall_time: started.elapsed(),
    })
}
