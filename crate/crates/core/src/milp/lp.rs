//! Linear programs solved by the HiGHS dual simplex.
//!
//! [`LpSolver`] keeps one HiGHS instance alive across solves. Changing column
//! bounds leaves the previous optimal basis dual feasible, so re-solves after
//! branching start from it instead of from scratch.

use std::os::raw::c_int;

use highs::{HighsModelStatus, Model, RowProblem, Sense as HighsSense};

use super::model::Sense;
use super::SolveError;

/// Sparse terms with lower and upper activity bounds.
type Row = (Vec<(usize, f64)>, f64, f64);

#[derive(Debug, Clone, Default)]
pub(crate) struct LinearProgram {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub(crate) fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let (lo, hi) = match sense {
            Sense::Le => (f64::NEG_INFINITY, rhs),
            Sense::Ge => (rhs, f64::INFINITY),
            Sense::Eq => (rhs, rhs),
        };
        self.rows.push((terms, lo, hi));
    }

    fn build(&self) -> Model {
        let mut problem = RowProblem::default();
        let cols: Vec<_> = (0..self.cost.len())
            .map(|j| problem.add_column(self.cost[j], self.lower[j]..=self.upper[j]))
            .collect();
        for (terms, lo, hi) in &self.rows {
            let terms: Vec<_> = terms.iter().map(|&(j, a)| (cols[j], a)).collect();
            problem.add_row(*lo..=*hi, terms);
        }
        let mut model = problem.optimise(HighsSense::Minimise);
        model.make_quiet();
        model.set_option("threads", 1);
        model.set_option("presolve", "off");
        model.set_option("solver", "simplex");
        model
    }

    pub(crate) fn into_solver(self) -> LpSolver {
        LpSolver {
            model: Some(self.build()),
            program: self,
        }
    }

    pub(crate) fn solve(self) -> Result<Option<LpSolution>, SolveError> {
        self.into_solver().solve()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

pub(crate) struct LpSolver {
    model: Option<Model>,
    /// The program with the current bounds.
    program: LinearProgram,
}

impl LpSolver {
    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        let p = &mut self.program;
        if p.lower[j] == lower && p.upper[j] == upper {
            return;
        }
        p.lower[j] = lower;
        p.upper[j] = upper;
        let model = self.model.as_mut().expect("solver holds a model");
        // SAFETY: the pointer comes from a live HiGHS instance owned by
        // `model`, and `j` is a valid column index of that instance.
        let status = unsafe {
            highs_sys::Highs_changeColBounds(model.as_mut_ptr(), j as c_int, lower, upper)
        };
        debug_assert!(status >= 0, "HiGHS rejected a bound change");
    }

    /// `Ok(None)` when infeasible. A numerical failure is retried once on a
    /// freshly built instance without the previous basis.
    pub(crate) fn solve(&mut self) -> Result<Option<LpSolution>, SolveError> {
        match self.run() {
            Err(SolveError::NumericalFailure(_)) => {
                self.model = Some(self.program.build());
                self.run()
            }
            other => other,
        }
    }

    fn run(&mut self) -> Result<Option<LpSolution>, SolveError> {
        let model = self.model.take().expect("solver holds a model");
        let solved = match model.try_solve() {
            Ok(solved) => solved,
            Err(e) => {
                self.model = Some(self.program.build());
                return Err(SolveError::NumericalFailure(format!("{e:?}")));
            }
        };
        let outcome = match solved.status() {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => {
                let values = solved.get_solution().columns().to_vec();
                let objective = values
                    .iter()
                    .zip(&self.program.cost)
                    .map(|(x, c)| x * c)
                    .sum();
                Ok(Some(LpSolution { values, objective }))
            }
            // every variable is bounded, so this can only be infeasibility
            HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => Ok(None),
            HighsModelStatus::Unbounded => Err(SolveError::Unbounded),
            HighsModelStatus::ReachedIterationLimit => Err(SolveError::IterationLimit),
            other => Err(SolveError::NumericalFailure(format!("{other:?}"))),
        };
        self.model = Some(Model::from(solved));
        outcome
    }
}
