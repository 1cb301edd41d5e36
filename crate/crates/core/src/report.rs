//! Result documents: JSON for machines, an aligned table for people.
//!
//! Wall-clock times are only included on request so that repeated runs on
//! the same input produce identical bytes.

use std::fmt::Write as _;

use serde::Serialize;

use crate::case::CaseFile;
use crate::experiment::{Comparison, Regime, RegimeRun};
use crate::milp::PlanningConfig;
use crate::network::{DemandProfile, Network};
use crate::wear::{Breaker, WearError};

/// Relative cost saving of `objective` against `baseline`, in percent.
pub fn saving_pct(baseline: f64, objective: f64) -> f64 {
    (baseline - objective) / baseline * 100.0
}

/// How many more operations `reference` needs than `count`, relative to
/// `count`, in percent. `None` when `count` is zero.
pub fn switching_reduction_pct(reference: usize, count: usize) -> Option<f64> {
    (count > 0).then(|| (reference as f64 - count as f64) / count as f64 * 100.0)
}

/// Rounds away LP noise so reports stay readable and stable.
fn tidy(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourRow {
    pub hour: usize,
    pub generation_cost: f64,
    pub curtailment_cost: f64,
    pub switching_cost: f64,
    pub total_cost: f64,
    pub curtailment_mw: f64,
    pub switching_events: usize,
    pub open_lines: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitored: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineRow {
    pub line: usize,
    pub events: usize,
    /// Hours (1-based) entering which the line changes state.
    pub hours: Vec<usize>,
    pub operations_left_before: u64,
    pub operations_left_after: u64,
}

/// What was solved and with which settings. Synthetic cases carry their
/// generator seed in `source`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseInfo {
    pub name: Option<String>,
    pub source: Option<String>,
    pub horizon: usize,
    /// Per-line budgets; absent when switching is unlimited.
    pub h1: Option<Vec<i64>>,
    /// Per-hour budgets; absent when switching is unlimited.
    pub h2: Option<Vec<i64>>,
    pub alpha: f64,
    pub overload_threshold: f64,
    pub charge_both_directions: bool,
    pub mip_gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
}

impl CaseInfo {
    pub fn new(case: &CaseFile, config: &PlanningConfig) -> Self {
        CaseInfo {
            name: case.name.clone(),
            source: case.source.clone(),
            horizon: config.horizon,
            h1: config.budgets.as_ref().map(|b| b.per_line.clone()),
            h2: config.budgets.as_ref().map(|b| b.per_hour.clone()),
            alpha: config.alpha,
            overload_threshold: config.overload_threshold,
            charge_both_directions: config.charge_both_directions,
            mip_gap: config.limits.mip_gap,
            node_limit: config.limits.node_limit,
            time_limit_s: config.limits.time_limit.map(|t| t.as_secs_f64()),
        }
    }

    /// `body` as a JSON document headed by this record.
    pub fn document<T: Serialize>(&self, body: &T) -> String {
        #[derive(Serialize)]
        struct Document<'a, T> {
            case: &'a CaseInfo,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut s = serde_json::to_string_pretty(&Document { case: self, body })
            .expect("report serializes");
        s.push('\n');
        s
    }

    /// Header lines for the text reports.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "case: {}", self.name.as_deref().unwrap_or("(unnamed)"));
        if let Some(source) = &self.source {
            let _ = writeln!(out, "source: {source}");
        }
        let limit = self
            .node_limit
            .map_or("none".to_string(), |n| n.to_string());
        let _ = writeln!(
            out,
            "horizon: {}  alpha: {}  mip gap: {}  node limit: {}",
            self.horizon, self.alpha, self.mip_gap, limit
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub solve_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screening_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub regime: String,
    pub status: String,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub free_candidates: usize,
    pub switching_events: usize,
    pub hours: Vec<HourRow>,
    /// Lines that switch at least once.
    pub lines: Vec<LineRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    /// `breakers` holds one entry per line position.
    pub fn new(
        network: &Network,
        demand: &DemandProfile,
        run: &RegimeRun,
        breakers: &[Breaker],
        timings: bool,
    ) -> Result<Self, WearError> {
        let result = &run.result;
        let plan = &result.plan;
        let screening = run.screening.as_ref();
        let hours = (0..plan.hours.len())
            .map(|t| {
                let d = &result.dispatch[t];
                let generation_cost = d.generation_cost(network, t);
                let curtailment_cost = d.curtailment_cost(demand);
                let switching_cost = plan.switching_cost(network, t, run.charge_both_directions);
                HourRow {
                    hour: t + 1,
                    generation_cost: tidy(generation_cost),
                    curtailment_cost: tidy(curtailment_cost),
                    switching_cost: tidy(switching_cost),
                    total_cost: tidy(generation_cost + curtailment_cost + switching_cost),
                    curtailment_mw: tidy(d.curtailment()),
                    switching_events: plan.hour_events(t),
                    open_lines: (0..network.n_lines())
                        .filter(|&l| !plan.hours[t].is_closed(l))
                        .map(|l| network.lines()[l].id)
                        .collect(),
                    monitored: screening.map(|s| s.monitored.per_hour[t].len()),
                    candidates: screening.map(|s| s.candidates.updated[t].len()),
                }
            })
            .collect();
        let mut lines = Vec::new();
        for (l, breaker) in breakers.iter().enumerate().take(network.n_lines()) {
            let events = plan.line_events(l);
            if events == 0 {
                continue;
            }
            lines.push(LineRow {
                line: network.lines()[l].id,
                events,
                hours: (0..plan.hours.len())
                    .filter(|&t| plan.switched(t, l))
                    .map(|t| t + 1)
                    .collect(),
                operations_left_before: breaker.remaining()?,
                operations_left_after: breaker.remaining_after(events as u64)?,
            });
        }
        Ok(RunReport {
            regime: run.regime.label().to_string(),
            status: result.status.label().to_string(),
            objective: tidy(result.objective),
            bound: tidy(result.bound),
            gap: result.gap,
            nodes: result.nodes,
            free_candidates: run.free_candidates,
            switching_events: plan.total_events(),
            hours,
            lines,
            timings: timings.then(|| Timings {
                solve_s: result.wall_time.as_secs_f64(),
                screening_s: screening.map(|s| s.summary.screening_time.as_secs_f64()),
            }),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "regime {}  status {}  objective {:.2}  gap {:.2e}  nodes {}  switches {}",
            self.regime, self.status, self.objective, self.gap, self.nodes, self.switching_events
        );
        let screened = self.hours.iter().any(|h| h.monitored.is_some());
        let _ = write!(
            out,
            "{:>4} {:>14} {:>12} {:>10} {:>14} {:>9} {:>4}",
            "hour", "generation", "curtailment", "switching", "total", "curt MW", "ops"
        );
        if screened {
            let _ = write!(out, " {:>4} {:>5}", "MLL", "SLL");
        }
        let _ = writeln!(out, "  open lines");
        for h in &self.hours {
            let _ = write!(
                out,
                "{:>4} {:>14.2} {:>12.2} {:>10.2} {:>14.2} {:>9.2} {:>4}",
                h.hour,
                h.generation_cost,
                h.curtailment_cost,
                h.switching_cost,
                h.total_cost,
                h.curtailment_mw,
                h.switching_events
            );
            if screened {
                let _ = write!(
                    out,
                    " {:>4} {:>5}",
                    h.monitored.unwrap_or(0),
                    h.candidates.unwrap_or(0)
                );
            }
            let open: Vec<String> = h.open_lines.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(
                out,
                "  {}",
                if open.is_empty() {
                    "-".into()
                } else {
                    open.join(",")
                }
            );
        }
        if !self.lines.is_empty() {
            let _ = writeln!(
                out,
                "{:>4} {:>6} {:>10} {:>10}  hours",
                "line", "events", "ops left", "after"
            );
            for l in &self.lines {
                let hours: Vec<String> = l.hours.iter().map(|h| h.to_string()).collect();
                let _ = writeln!(
                    out,
                    "{:>4} {:>6} {:>10} {:>10}  {}",
                    l.line,
                    l.events,
                    l.operations_left_before,
                    l.operations_left_after,
                    hours.join(",")
                );
            }
        }
        if let Some(t) = &self.timings {
            let _ = write!(out, "solve time {:.3} s", t.solve_s);
            if let Some(s) = t.screening_s {
                let _ = write!(out, "  screening {s:.3} s");
            }
            let _ = writeln!(out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub regime: String,
    pub objective: f64,
    pub saving_pct: f64,
    pub switching_events: usize,
    /// Extra operations the classic plan needs relative to this one.
    pub classic_excess_switching_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub summary: Vec<RegimeSummary>,
    pub checks: Vec<CheckRow>,
    pub runs: Vec<RunReport>,
}

impl ComparisonReport {
    pub fn new(
        network: &Network,
        demand: &DemandProfile,
        comparison: &Comparison,
        breakers: &[Breaker],
        timings: bool,
    ) -> Result<Self, WearError> {
        let baseline = comparison.run(Regime::Baseline).result.objective;
        let classic_ops = comparison.run(Regime::Classic).result.plan.total_events();
        let summary = comparison
            .runs
            .iter()
            .map(|r| {
                let ops = r.result.plan.total_events();
                RegimeSummary {
                    regime: r.regime.label().to_string(),
                    objective: tidy(r.result.objective),
                    saving_pct: tidy(saving_pct(baseline, r.result.objective)),
                    switching_events: ops,
                    classic_excess_switching_pct: switching_reduction_pct(classic_ops, ops)
                        .map(tidy),
                }
            })
            .collect();
        let checks = comparison
            .checks
            .iter()
            .map(|c| CheckRow {
                name: c.name.clone(),
                passed: c.passed,
                detail: c.detail.clone(),
            })
            .collect();
        let runs = comparison
            .runs
            .iter()
            .map(|r| RunReport::new(network, demand, r, breakers, timings))
            .collect::<Result<_, _>>()?;
        Ok(ComparisonReport {
            summary,
            checks,
            runs,
        })
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>16} {:>9} {:>9} {:>14}",
            "regime", "objective", "saving %", "switches", "classic extra %"
        );
        for s in &self.summary {
            let extra = s
                .classic_excess_switching_pct
                .map_or("-".to_string(), |v| format!("{v:.0}"));
            let _ = writeln!(
                out,
                "{:<12} {:>16.2} {:>9.3} {:>9} {:>14}",
                s.regime, s.objective, s.saving_pct, s.switching_events, extra
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "[{}] {}: {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        for r in &self.runs {
            let _ = writeln!(out);
            out.push_str(&r.to_text());
        }
        out
    }
}
