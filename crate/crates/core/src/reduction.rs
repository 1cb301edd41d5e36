//! Candidate-line reduction for the switching problem.
//!
//! The pipeline in [`plan_switching`]:
//!
//! 1. solve the fixed-topology OPF on the initial topology for every hour;
//! 2. monitor every line loaded above `alpha` of its limit;
//! 3. compute LODFs of the monitored lines against every closed switchable line;
//! 4. drop candidates whose opening is predicted to overload a monitored line
//!    (and bridges, whose opening islands the grid);
//! 5. solve the switching MILP with only the surviving candidates free.
//!
//! Multiple simultaneous outages are not screened, so the reduced solve can
//! miss the true optimum.

use std::time::{Duration, Instant};

use crate::milp::{self, HourDispatch, PlanningConfig, SolveResult};
use crate::network::{DemandProfile, Network, Topology};
use crate::sensitivity::{post_outage_flow, SensitivitySet};
use crate::Error;

/// Loading margin of a line: `|f| - alpha * f_max`. Positive means monitored.
pub fn violation_score(flow: f64, f_max: f64, alpha: f64) -> f64 {
    flow.abs() - alpha * f_max
}

/// Lines loaded above `alpha` in each hour of the no-switching solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitoredLines {
    pub per_hour: Vec<Vec<usize>>,
}

impl MonitoredLines {
    /// Every line monitored in at least one hour, ascending.
    pub fn union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.per_hour.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.per_hour.iter().map(Vec::len).collect()
    }
}

pub fn monitored_lines(
    network: &Network,
    topology: &Topology,
    step1: &[HourDispatch],
    alpha: f64,
) -> MonitoredLines {
    let per_hour = step1
        .iter()
        .map(|hour| {
            topology
                .closed_lines()
                .filter(|&l| violation_score(hour.f[l], network.lines()[l].f_max, alpha) > 0.0)
                .collect()
        })
        .collect();
    MonitoredLines { per_hour }
}

/// Original, excluded and surviving switching candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateLists {
    pub original: Vec<usize>,
    pub excluded: Vec<Vec<usize>>,
    pub updated: Vec<Vec<usize>>,
}

impl CandidateLists {
    pub fn from_excluded(original: Vec<usize>, excluded: Vec<Vec<usize>>) -> Self {
        let updated = excluded
            .iter()
            .map(|ex| {
                original
                    .iter()
                    .copied()
                    .filter(|l| !ex.contains(l))
                    .collect()
            })
            .collect();
        CandidateLists {
            original,
            excluded,
            updated,
        }
    }

    pub fn updated_sizes(&self) -> Vec<usize> {
        self.updated.iter().map(Vec::len).collect()
    }

    /// True when some hour keeps fewer candidates than the original list.
    pub fn reduces(&self) -> bool {
        self.updated.iter().any(|u| u.len() < self.original.len())
    }
}

/// Candidates whose single-line opening would overload a monitored line,
/// per hour, plus every bridge candidate.
///
/// Candidates open in the step-1 topology have no outage to screen and are
/// never excluded.
pub fn excluded_candidates(
    network: &Network,
    step1: &[HourDispatch],
    monitored: &MonitoredLines,
    sensitivities: &SensitivitySet,
    original: &[usize],
    overload_threshold: f64,
) -> Vec<Vec<usize>> {
    step1
        .iter()
        .zip(&monitored.per_hour)
        .map(|(hour, watch)| {
            original
                .iter()
                .copied()
                .filter(|&l| {
                    if !sensitivities.topology().is_closed(l) {
                        return false;
                    }
                    if sensitivities.is_bridge(l) == Some(true) {
                        return true;
                    }
                    watch.iter().any(|&m| {
                        if m == l {
                            return false;
                        }
                        let Some(Ok(factor)) = sensitivities.lodf(m, l) else {
                            return false;
                        };
                        let predicted = post_outage_flow(hour.f[m], hour.f[l], factor);
                        predicted.abs() - overload_threshold * network.lines()[m].f_max >= 0.0
                    })
                })
                .collect()
        })
        .collect()
}

/// Per-hour sizes in the shape of the monitored/updated candidate table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningSummary {
    pub monitored: Vec<usize>,
    pub updated: Vec<usize>,
    pub original: usize,
    pub screening_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub result: SolveResult,
    pub step1: Vec<HourDispatch>,
    pub monitored: MonitoredLines,
    pub candidates: CandidateLists,
    pub summary: ScreeningSummary,
}

/// Screening steps 1-4 only: returns the step-1 dispatch, monitored lines and
/// candidate lists.
pub fn screen(
    network: &Network,
    demand: &DemandProfile,
    config: &PlanningConfig,
) -> Result<(Vec<HourDispatch>, MonitoredLines, CandidateLists), Error> {
    let topology = Topology::initial(network);
    let step1: Vec<HourDispatch> =
        milp::dc_opf_horizon(network, &topology, demand, config.horizon)?
            .into_iter()
            .map(|s| s.dispatch)
            .collect();
    let monitored = monitored_lines(network, &topology, &step1, config.alpha);
    let original = network.switchable_lines();
    let closed: Vec<usize> = original
        .iter()
        .copied()
        .filter(|&l| topology.is_closed(l))
        .collect();
    let sensitivities = SensitivitySet::compute(network, &topology, &monitored.union(), &closed)?;
    let excluded = excluded_candidates(
        network,
        &step1,
        &monitored,
        &sensitivities,
        &original,
        config.overload_threshold,
    );
    Ok((
        step1,
        monitored,
        CandidateLists::from_excluded(original, excluded),
    ))
}

/// Screen the candidate list, then solve the switching problem with only
/// the surviving candidates free in each hour.
pub fn plan_switching(
    network: &Network,
    demand: &DemandProfile,
    config: &PlanningConfig,
) -> Result<PlanOutcome, Error> {
    let started = Instant::now();
    let (step1, monitored, candidates) = screen(network, demand, config)?;
    let screening_time = started.elapsed();
    let model = milp::build_model(network, demand, config, &candidates.updated)?;
    let result = milp::solve(&model, config)?;
    let summary = ScreeningSummary {
        monitored: monitored.sizes(),
        updated: candidates.updated_sizes(),
        original: candidates.original.len(),
        screening_time,
    };
    Ok(PlanOutcome {
        result,
        step1,
        monitored,
        candidates,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::tests::{braess, system};
    use crate::milp::{SolveLimits, SwitchingBudgets};
    use crate::network::fixtures::line;

    #[test]
    fn violation_boundaries() {
        assert_eq!(violation_score(50.0, 100.0, 0.5), 0.0);
        assert_eq!(violation_score(-80.0, 100.0, 0.5), 30.0);
        assert_eq!(violation_score(0.0, 100.0, 0.5), -50.0);
    }

    fn hour(f: Vec<f64>) -> HourDispatch {
        HourDispatch {
            p: vec![],
            f,
            theta: vec![],
            r: vec![],
        }
    }

    #[test]
    fn monitoring_thresholds() {
        let (net, _) = braess(1);
        let topo = Topology::initial(&net);
        let zero = monitored_lines(&net, &topo, &[hour(vec![0.0; 3]), hour(vec![0.0; 3])], 0.5);
        assert_eq!(zero.per_hour, vec![Vec::<usize>::new(), vec![]]);
        let any = monitored_lines(&net, &topo, &[hour(vec![1e-3, 0.0, -2.0])], 0.0);
        assert_eq!(any.per_hour, vec![vec![0, 2]]);
        let open = monitored_lines(&net, &topo.with_open(2), &[hour(vec![0.0, 0.0, 90.0])], 0.5);
        assert!(open.per_hour[0].is_empty());
    }

    #[test]
    fn one_heavily_loaded_line_in_four_bus_case() {
        // cheap unit at bus 1, load at bus 2: the 1-2 line is 90% loaded,
        // the ring through 3 and 4 carries the rest at low loading.
        let lines = vec![
            line(1, 1, 2, 10.0, 100.0),
            line(2, 2, 3, 1.0, 100.0),
            line(3, 3, 4, 1.0, 100.0),
            line(4, 4, 1, 1.0, 100.0),
        ];
        let (net, demand) = system(4, lines, &[(1, 10.0, 500.0)], &[(2, 97.5)], 1);
        let topo = Topology::initial(&net);
        let step1 = milp::dc_opf(&net, &topo, &demand, 0).unwrap().dispatch;
        // the three-line ring path has series susceptance 1/3
        let share = 10.0 / (10.0 + 1.0 / 3.0);
        assert!((step1.f[0] - 97.5 * share).abs() < 1e-6);
        assert!(step1.f[0] / 100.0 > 0.9 && step1.f[1] / 100.0 < 0.4);
        let mll = monitored_lines(&net, &topo, &[step1], 0.5);
        assert_eq!(mll.per_hour, vec![vec![0]]);
    }

    #[test]
    fn exclusion_rules() {
        // parallel pair 1-2 near its limit plus a radial spur to bus 3
        let lines = vec![
            line(1, 1, 2, 10.0, 100.0),
            line(2, 1, 2, 10.0, 100.0),
            line(3, 2, 3, 10.0, 100.0),
        ];
        let (net, _) = system(3, lines, &[], &[], 1);
        let topo = Topology::initial(&net);
        let original = net.switchable_lines();
        let flows = [hour(vec![60.0, 60.0, 20.0])];

        let nothing = MonitoredLines {
            per_hour: vec![vec![]],
        };
        let set = SensitivitySet::compute(&net, &topo, &[], &original).unwrap();
        let ex = excluded_candidates(&net, &flows, &nothing, &set, &original, 1.0);
        assert_eq!(ex, vec![vec![2]], "only the spur bridge");

        let both = monitored_lines(&net, &topo, &flows, 0.5);
        assert_eq!(both.per_hour, vec![vec![0, 1]]);
        let set = SensitivitySet::compute(&net, &topo, &both.union(), &original).unwrap();
        let ex = excluded_candidates(&net, &flows, &both, &set, &original, 1.0);
        assert_eq!(ex, vec![vec![0, 1, 2]]);

        // the spur never affects the pair
        assert!(set.lodf(0, 2).unwrap().is_err());
        let lists = CandidateLists::from_excluded(original.clone(), ex);
        assert!(lists.updated[0].is_empty());
        assert!(lists.reduces());
    }

    #[test]
    fn zero_hour_budget_returns_initial_topology() {
        let (net, demand) = braess(2);
        let config =
            PlanningConfig::new(2).with_budgets(SwitchingBudgets::uniform(net.n_lines(), 2, 2, 0));
        let out = plan_switching(&net, &demand, &config).unwrap();
        assert_eq!(out.result.plan.total_events(), 0);
        let base: f64 = milp::dc_opf_horizon(&net, &Topology::initial(&net), &demand, 2)
            .unwrap()
            .iter()
            .map(|s| s.objective)
            .sum();
        assert!((out.result.objective - base).abs() <= 1e-8 * base);
    }

    #[test]
    fn relieving_line_survives_screening() {
        let (net, demand) = braess(2);
        let mut config =
            PlanningConfig::new(2).with_budgets(SwitchingBudgets::uniform(net.n_lines(), 2, 2, 4));
        config.limits = SolveLimits::exact();
        let out = plan_switching(&net, &demand, &config).unwrap();
        assert_eq!(out.monitored.per_hour, vec![vec![2], vec![2]]);
        assert_eq!(out.candidates.updated, vec![vec![2], vec![2]]);
        let full =
            milp::build_model(&net, &demand, &config, &milp::all_switchable(&net, 2)).unwrap();
        let full = milp::solve(&full, &config).unwrap();
        assert_eq!(out.result.plan, full.plan);
        assert!((out.result.objective - full.objective).abs() < 1e-9 * full.objective);
    }
}
