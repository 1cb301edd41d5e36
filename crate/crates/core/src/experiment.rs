//! The four comparison regimes and the cross-checks between them.
//!
//! | regime        | free lines                | budgets |
//! |---------------|---------------------------|---------|
//! | `baseline`    | none                      | n/a     |
//! | `classic`     | every switchable line     | dropped |
//! | `constrained` | every switchable line     | kept    |
//! | `reduced`     | screened candidates       | kept    |
//!
//! Their optimal objectives are ordered `classic <= constrained <= reduced
//! <= baseline`; [`compare_all`] checks this within the reported gaps.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::milp::{
    self, all_switchable, build_model, PlanningConfig, SolveResult, SolveStatus, SwitchingPlan,
};
use crate::network::{DemandProfile, Network, Topology};
use crate::reduction::{plan_switching, CandidateLists, MonitoredLines, ScreeningSummary};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Baseline,
    Classic,
    Constrained,
    Reduced,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::Baseline,
        Regime::Classic,
        Regime::Constrained,
        Regime::Reduced,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Regime::Baseline => "baseline",
            Regime::Classic => "classic",
            Regime::Constrained => "constrained",
            Regime::Reduced => "reduced",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Screening {
    pub monitored: MonitoredLines,
    pub candidates: CandidateLists,
    pub summary: ScreeningSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRun {
    pub regime: Regime,
    pub result: SolveResult,
    /// Free (hour, line) switching decisions.
    pub free_candidates: usize,
    /// Whether switching costs were charged for closing as well as opening.
    pub charge_both_directions: bool,
    pub screening: Option<Screening>,
}

impl RegimeRun {
    pub fn hour_cost(&self, network: &Network, demand: &DemandProfile, t: usize) -> f64 {
        let d = &self.result.dispatch[t];
        d.generation_cost(network, t)
            + d.curtailment_cost(demand)
            + self
                .result
                .plan
                .switching_cost(network, t, self.charge_both_directions)
    }
}

/// The planning configuration a regime actually solves with.
pub fn regime_config(config: &PlanningConfig, regime: Regime) -> PlanningConfig {
    let mut c = config.clone();
    if regime == Regime::Classic {
        c.budgets = None;
    }
    c
}

pub fn run_regime(
    network: &Network,
    demand: &DemandProfile,
    config: &PlanningConfig,
    regime: Regime,
) -> Result<RegimeRun, Error> {
    let config = regime_config(config, regime);
    config.validate(network, demand)?;
    let (result, free_candidates, screening) = match regime {
        Regime::Baseline => {
            let started = Instant::now();
            let initial = Topology::initial(network);
            let hours = milp::dc_opf_horizon(network, &initial, demand, config.horizon)?;
            let objective = hours.iter().map(|h| h.objective).sum();
            let result = SolveResult {
                status: SolveStatus::Optimal,
                objective,
                bound: objective,
                gap: 0.0,
                plan: SwitchingPlan::unchanged(initial, config.horizon),
                dispatch: hours.into_iter().map(|h| h.dispatch).collect(),
                nodes: 0,
                wall_time: started.elapsed(),
            };
            (result, 0, None)
        }
        Regime::Classic | Regime::Constrained => {
            let model = build_model(
                network,
                demand,
                &config,
                &all_switchable(network, config.horizon),
            )?;
            let free = network.switchable_lines().len() * config.horizon;
            (milp::solve(&model, &config)?, free, None)
        }
        Regime::Reduced => {
            let out = plan_switching(network, demand, &config)?;
            let free = out.candidates.updated.iter().map(Vec::len).sum();
            let screening = Screening {
                monitored: out.monitored,
                candidates: out.candidates,
                summary: out.summary,
            };
            (out.result, free, Some(screening))
        }
    };
    Ok(RegimeRun {
        regime,
        result,
        free_candidates,
        charge_both_directions: config.charge_both_directions,
        screening,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RegimeRun>,
    pub checks: Vec<InvariantCheck>,
}

impl Comparison {
    pub fn run(&self, regime: Regime) -> &RegimeRun {
        self.runs
            .iter()
            .find(|r| r.regime == regime)
            .expect("all regimes ran")
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn total_solve_time(&self) -> Duration {
        self.runs.iter().map(|r| r.result.wall_time).sum()
    }
}

/// Relative slack allowed on top of the reported gaps.
const ORDER_TOLERANCE: f64 = 1e-6;

/// `upper` is the regime whose optimum cannot be lower than `lower`'s: its
/// incumbent must not fall below `lower`'s proven bound.
fn ordering_check(lower: &RegimeRun, upper: &RegimeRun) -> InvariantCheck {
    let slack = ORDER_TOLERANCE * upper.result.objective.abs().max(1.0);
    let passed = upper.result.objective >= lower.result.bound - slack;
    InvariantCheck {
        name: format!("{} <= {}", lower.regime, upper.regime),
        passed,
        detail: format!(
            "{}: {:.6} (bound {:.6}), {}: {:.6}",
            lower.regime,
            lower.result.objective,
            lower.result.bound,
            upper.regime,
            upper.result.objective
        ),
    }
}

fn budget_check(run: &RegimeRun, config: &PlanningConfig) -> InvariantCheck {
    let passed = config
        .budgets
        .as_ref()
        .is_none_or(|b| run.result.plan.respects(b));
    InvariantCheck {
        name: format!("{} respects budgets", run.regime),
        passed,
        detail: format!("{} switching events", run.result.plan.total_events()),
    }
}

fn candidate_check(run: &RegimeRun) -> InvariantCheck {
    let plan = &run.result.plan;
    let updated = &run
        .screening
        .as_ref()
        .expect("reduced run")
        .candidates
        .updated;
    let stray: Vec<(usize, usize)> = (0..plan.hours.len())
        .flat_map(|t| (0..plan.initial.len()).map(move |l| (t, l)))
        .filter(|&(t, l)| {
            plan.hours[t].is_closed(l) != plan.initial.is_closed(l) && !updated[t].contains(&l)
        })
        .collect();
    InvariantCheck {
        name: "reduced keeps non-candidates fixed".into(),
        passed: stray.is_empty(),
        detail: if stray.is_empty() {
            "no line outside the candidate list changed".into()
        } else {
            format!(
                "{} (hour, line) pairs changed outside the list",
                stray.len()
            )
        },
    }
}

/// Run every regime and cross-check the results.
pub fn compare_all(
    network: &Network,
    demand: &DemandProfile,
    config: &PlanningConfig,
) -> Result<Comparison, Error> {
    let runs = Regime::ALL
        .into_iter()
        .map(|r| run_regime(network, demand, config, r))
        .collect::<Result<Vec<_>, _>>()?;
    let by = |r: Regime| runs.iter().find(|x| x.regime == r).unwrap();
    let mut checks = vec![
        ordering_check(by(Regime::Classic), by(Regime::Constrained)),
        ordering_check(by(Regime::Constrained), by(Regime::Reduced)),
        ordering_check(by(Regime::Reduced), by(Regime::Baseline)),
    ];
    for r in [Regime::Constrained, Regime::Reduced] {
        checks.push(budget_check(by(r), config));
    }
    checks.push(candidate_check(by(Regime::Reduced)));
    Ok(Comparison { runs, checks })
}
