use std::f64::consts::{FRAC_PI_2, PI};

use crate::network::{DemandProfile, Network};

use super::{PlanningConfig, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Var {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Which group of the formulation a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    Balance,
    /// `f - B dtheta >= -M (1 - delta)`
    CouplingLower,
    /// `f - B dtheta <= M (1 - delta)`
    CouplingUpper,
    /// `f <= f_max delta`
    CapacityUpper,
    /// `f >= f_min delta`
    CapacityLower,
    /// `s >= delta[t] - delta[t-1]`
    SwitchOn,
    /// `s >= delta[t-1] - delta[t]`
    SwitchOff,
    /// `o >= delta[t-1] - delta[t]`, opening-only charging
    OpeningCharge,
    LineBudget,
    HourBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub family: RowFamily,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Variable positions by network entity; outer index is the hour.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelIndex {
    pub delta: Vec<Vec<usize>>,
    pub switch: Vec<Vec<usize>>,
    pub opening: Option<Vec<Vec<usize>>>,
    pub p: Vec<Vec<usize>>,
    pub f: Vec<Vec<usize>>,
    pub theta: Vec<Vec<usize>>,
    pub r: Vec<Vec<usize>>,
}

/// A mixed-integer linear program in minimization form.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    pub index: ModelIndex,
    /// Known-feasible assignment for the binaries, as `(var, value)` pairs.
    pub hint: Vec<(usize, f64)>,
    pub horizon: usize,
    pub initial: Vec<bool>,
}

impl MilpModel {
    fn new(horizon: usize) -> Self {
        MilpModel {
            vars: Vec::new(),
            rows: Vec::new(),
            index: ModelIndex::default(),
            hint: Vec::new(),
            horizon,
            initial: Vec::new(),
        }
    }

    fn add_var(&mut self, name: String, lower: f64, upper: f64, cost: f64, kind: VarKind) -> usize {
        self.vars.push(Var {
            name,
            lower,
            upper,
            cost,
            kind,
        });
        self.vars.len() - 1
    }

    fn add_row(
        &mut self,
        name: String,
        family: RowFamily,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.rows.push(Row {
            name,
            family,
            terms,
            sense,
            rhs,
        });
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| i)
    }

    pub fn n_binaries(&self) -> usize {
        self.binaries().count()
    }

    /// Binaries whose bounds still allow both values.
    pub fn free_binaries(&self) -> usize {
        self.binaries()
            .filter(|&i| self.vars[i].lower < self.vars[i].upper)
            .count()
    }

    pub fn rows_of(&self, family: RowFamily) -> usize {
        self.rows.iter().filter(|r| r.family == family).count()
    }

    /// Pin a variable to one value by collapsing its bounds.
    pub fn fix(&mut self, var: usize, value: f64) {
        self.vars[var].lower = value;
        self.vars[var].upper = value;
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.cost * x).sum()
    }

    /// Largest bound or row violation of an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.rows.iter().map(|row| {
            let lhs: f64 = row.terms.iter().map(|&(j, a)| a * values[j]).sum();
            match row.sense {
                Sense::Le => (lhs - row.rhs).max(0.0),
                Sense::Ge => (row.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - row.rhs).abs(),
            }
        });
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

/// Lines that may change state in each hour. `free[t]` lists line positions.
pub type FreeCandidates = Vec<Vec<usize>>;

pub fn all_switchable(network: &Network, horizon: usize) -> FreeCandidates {
    vec![network.switchable_lines(); horizon]
}

pub fn frozen(horizon: usize) -> FreeCandidates {
    vec![Vec::new(); horizon]
}

/// Big-M used in the flow/angle coupling rows of a line.
pub fn big_m(network: &Network, config: &PlanningConfig, line: usize) -> f64 {
    match &config.big_m {
        super::BigM::AngleSpan => network.flow_factor(line) * PI,
        super::BigM::Explicit(values) => values[line],
    }
}

/// Assemble the switching MILP over `config.horizon` hours.
///
/// Lines missing from `free[t]` have `delta[t]` fixed to their initial status.
/// Budget rows are only emitted when `config.budgets` is set.
pub fn build_model(
    network: &Network,
    demand: &DemandProfile,
    config: &PlanningConfig,
    free: &[Vec<usize>],
) -> Result<MilpModel, SolveError> {
    let horizon = config.horizon;
    config.check_dimensions(network, demand)?;
    if free.len() != horizon {
        return Err(SolveError::InvalidConfig(format!(
            "candidate schedule covers {} hours, horizon is {horizon}",
            free.len()
        )));
    }
    let n_lines = network.n_lines();
    let n_buses = network.n_buses();
    let lines = network.lines();

    let mut is_free = vec![vec![false; n_lines]; horizon];
    for (t, hour) in free.iter().enumerate() {
        for &l in hour {
            if l >= n_lines || !lines[l].switchable {
                return Err(SolveError::InvalidCandidate {
                    line: lines.get(l).map_or(l, |x| x.id),
                    hour: t + 1,
                });
            }
            is_free[t][l] = true;
        }
    }

    let mut m = MilpModel::new(horizon);
    m.initial = lines.iter().map(|l| l.initial_status).collect();
    let init = |l: usize| if lines[l].initial_status { 1.0 } else { 0.0 };

    let mut delta = vec![vec![0; n_lines]; horizon];
    for l in 0..n_lines {
        for t in 0..horizon {
            let (lo, hi) = if is_free[t][l] {
                (0.0, 1.0)
            } else {
                (init(l), init(l))
            };
            let v = m.add_var(
                format!("delta_{}_{}", t + 1, lines[l].id),
                lo,
                hi,
                0.0,
                VarKind::Binary,
            );
            delta[t][l] = v;
            m.hint.push((v, init(l)));
        }
    }
    let switch_cost = |l: usize| {
        if config.charge_both_directions {
            lines[l].switch_cost
        } else {
            0.0
        }
    };
    let mut switch = vec![vec![0; n_lines]; horizon];
    for l in 0..n_lines {
        for t in 0..horizon {
            switch[t][l] = m.add_var(
                format!("s_{}_{}", t + 1, lines[l].id),
                0.0,
                1.0,
                switch_cost(l),
                VarKind::Continuous,
            );
        }
    }
    let opening = (!config.charge_both_directions).then(|| {
        let mut opening = vec![vec![0; n_lines]; horizon];
        for l in 0..n_lines {
            for t in 0..horizon {
                opening[t][l] = m.add_var(
                    format!("o_{}_{}", t + 1, lines[l].id),
                    0.0,
                    1.0,
                    lines[l].switch_cost,
                    VarKind::Continuous,
                );
            }
        }
        opening
    });

    let (mut p, mut f, mut theta, mut r) = (vec![], vec![], vec![], vec![]);
    for t in 0..horizon {
        let hour = t + 1;
        p.push(
            network
                .generators()
                .iter()
                .map(|g| {
                    m.add_var(
                        format!("p_{hour}_{}", g.id),
                        g.p_min[t],
                        g.p_max[t],
                        g.cost[t],
                        VarKind::Continuous,
                    )
                })
                .collect::<Vec<_>>(),
        );
        f.push(
            lines
                .iter()
                .map(|l| {
                    m.add_var(
                        format!("f_{hour}_{}", l.id),
                        l.f_min,
                        l.f_max,
                        0.0,
                        VarKind::Continuous,
                    )
                })
                .collect::<Vec<_>>(),
        );
        theta.push(
            (0..n_buses)
                .map(|i| {
                    let span = if i == network.reference() {
                        0.0
                    } else {
                        FRAC_PI_2
                    };
                    m.add_var(
                        format!("theta_{hour}_{}", network.buses()[i].id),
                        -span,
                        span,
                        0.0,
                        VarKind::Continuous,
                    )
                })
                .collect::<Vec<_>>(),
        );
        r.push(
            (0..n_buses)
                .map(|i| {
                    m.add_var(
                        format!("r_{hour}_{}", network.buses()[i].id),
                        0.0,
                        demand.demand[t][i],
                        demand.penalty[i],
                        VarKind::Continuous,
                    )
                })
                .collect::<Vec<_>>(),
        );
    }

    for t in 0..horizon {
        let hour = t + 1;
        // nodal balance: generation + curtailment - net outflow = demand
        let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_buses];
        for l in 0..n_lines {
            let (from, to) = network.line_ends(l);
            balance[from].push((f[t][l], -1.0));
            balance[to].push((f[t][l], 1.0));
        }
        for g in 0..network.generators().len() {
            balance[network.generator_bus(g)].push((p[t][g], 1.0));
        }
        for (i, mut terms) in balance.into_iter().enumerate() {
            terms.push((r[t][i], 1.0));
            m.add_row(
                format!("balance_{hour}_{}", network.buses()[i].id),
                RowFamily::Balance,
                terms,
                Sense::Eq,
                demand.demand[t][i],
            );
        }

        for l in 0..n_lines {
            let id = lines[l].id;
            let (from, to) = network.line_ends(l);
            let b = network.flow_factor(l);
            let big = big_m(network, config, l);
            let coupling = vec![
                (f[t][l], 1.0),
                (theta[t][from], -b),
                (theta[t][to], b),
                (delta[t][l], -big),
            ];
            m.add_row(
                format!("couple_lo_{hour}_{id}"),
                RowFamily::CouplingLower,
                coupling.clone(),
                Sense::Ge,
                -big,
            );
            let mut upper = coupling;
            upper[3].1 = big;
            m.add_row(
                format!("couple_up_{hour}_{id}"),
                RowFamily::CouplingUpper,
                upper,
                Sense::Le,
                big,
            );
            m.add_row(
                format!("cap_up_{hour}_{id}"),
                RowFamily::CapacityUpper,
                vec![(f[t][l], 1.0), (delta[t][l], -lines[l].f_max)],
                Sense::Le,
                0.0,
            );
            m.add_row(
                format!("cap_lo_{hour}_{id}"),
                RowFamily::CapacityLower,
                vec![(f[t][l], 1.0), (delta[t][l], -lines[l].f_min)],
                Sense::Ge,
                0.0,
            );

            // s >= |delta[t] - delta[t-1]|; delta[0] is the initial status
            let (prev_terms, prev_const) = if t == 0 {
                (vec![], init(l))
            } else {
                (vec![(delta[t - 1][l], 1.0)], 0.0)
            };
            let diff_row = |sign: f64, var: usize| {
                let mut terms = vec![(var, 1.0), (delta[t][l], -sign)];
                terms.extend(prev_terms.iter().map(|&(v, a)| (v, sign * a)));
                (terms, -sign * prev_const)
            };
            let (terms, rhs) = diff_row(1.0, switch[t][l]);
            m.add_row(
                format!("sw_on_{hour}_{id}"),
                RowFamily::SwitchOn,
                terms,
                Sense::Ge,
                rhs,
            );
            let (terms, rhs) = diff_row(-1.0, switch[t][l]);
            m.add_row(
                format!("sw_off_{hour}_{id}"),
                RowFamily::SwitchOff,
                terms,
                Sense::Ge,
                rhs,
            );
            if let Some(opening) = &opening {
                let (terms, rhs) = diff_row(-1.0, opening[t][l]);
                m.add_row(
                    format!("open_{hour}_{id}"),
                    RowFamily::OpeningCharge,
                    terms,
                    Sense::Ge,
                    rhs,
                );
            }
        }
    }

    if let Some(budgets) = &config.budgets {
        for l in 0..n_lines {
            m.add_row(
                format!("budget_line_{}", lines[l].id),
                RowFamily::LineBudget,
                (0..horizon).map(|t| (switch[t][l], 1.0)).collect(),
                Sense::Le,
                budgets.per_line[l] as f64,
            );
        }
        for t in 0..horizon {
            m.add_row(
                format!("budget_hour_{}", t + 1),
                RowFamily::HourBudget,
                (0..n_lines).map(|l| (switch[t][l], 1.0)).collect(),
                Sense::Le,
                budgets.per_hour[t] as f64,
            );
        }
    }

    m.index = ModelIndex {
        delta,
        switch,
        opening,
        p,
        f,
        theta,
        r,
    };
    Ok(m)
}
