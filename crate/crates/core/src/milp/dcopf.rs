use std::f64::consts::FRAC_PI_2;

use crate::network::{DemandProfile, Network, Topology};

use super::lp::LinearProgram;
use super::model::Sense;
use super::{HourDispatch, SolveError};

#[derive(Debug, Clone, PartialEq)]
pub struct DcOpfSolution {
    pub dispatch: HourDispatch,
    pub objective: f64,
}

/// Fixed-topology DC-OPF for block `t`.
///
/// Closed lines carry `f = B * (theta_from - theta_to)` as an equality, open
/// lines carry no flow. Curtailment keeps the LP feasible, including on
/// islanded buses.
pub fn dc_opf(
    network: &Network,
    topology: &Topology,
    demand: &DemandProfile,
    t: usize,
) -> Result<DcOpfSolution, SolveError> {
    network
        .check_topology(topology)
        .map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
    if t >= demand.blocks() || network.blocks().is_some_and(|b| t >= b) {
        return Err(SolveError::InvalidConfig(format!(
            "block {} is out of range",
            t + 1
        )));
    }
    let mut lp = LinearProgram::new();
    let p: Vec<_> = network
        .generators()
        .iter()
        .map(|g| lp.add_var(g.cost[t], g.p_min[t], g.p_max[t]))
        .collect();
    let f: Vec<_> = network
        .lines()
        .iter()
        .enumerate()
        .map(|(l, line)| {
            if topology.is_closed(l) {
                lp.add_var(0.0, line.f_min, line.f_max)
            } else {
                lp.add_var(0.0, 0.0, 0.0)
            }
        })
        .collect();
    let theta: Vec<_> = (0..network.n_buses())
        .map(|i| {
            let span = if i == network.reference() {
                0.0
            } else {
                FRAC_PI_2
            };
            lp.add_var(0.0, -span, span)
        })
        .collect();
    let r: Vec<_> = (0..network.n_buses())
        .map(|i| lp.add_var(demand.penalty[i], 0.0, demand.demand[t][i]))
        .collect();

    let mut balance = vec![Vec::new(); network.n_buses()];
    for l in 0..network.n_lines() {
        let (from, to) = network.line_ends(l);
        balance[from].push((f[l], -1.0));
        balance[to].push((f[l], 1.0));
        if topology.is_closed(l) {
            let b = network.flow_factor(l);
            lp.add_constraint(
                vec![(f[l], 1.0), (theta[from], -b), (theta[to], b)],
                Sense::Eq,
                0.0,
            );
        }
    }
    for (g, &var) in p.iter().enumerate() {
        balance[network.generator_bus(g)].push((var, 1.0));
    }
    for (i, mut terms) in balance.into_iter().enumerate() {
        terms.push((r[i], 1.0));
        lp.add_constraint(terms, Sense::Eq, demand.demand[t][i]);
    }

    let Some(solution) = lp.solve()? else {
        return Err(SolveError::Infeasible);
    };
    let values =
        |vars: &[usize]| -> Vec<f64> { vars.iter().map(|&v| solution.values[v]).collect() };
    let dispatch = HourDispatch {
        p: values(&p),
        f: values(&f),
        theta: values(&theta),
        r: values(&r),
    };
    let objective = dispatch.generation_cost(network, t) + dispatch.curtailment_cost(demand);
    Ok(DcOpfSolution {
        dispatch,
        objective,
    })
}

/// [`dc_opf`] for every block of the horizon on one topology.
pub fn dc_opf_horizon(
    network: &Network,
    topology: &Topology,
    demand: &DemandProfile,
    horizon: usize,
) -> Result<Vec<DcOpfSolution>, SolveError> {
    (0..horizon)
        .map(|t| dc_opf(network, topology, demand, t))
        .collect()
}
