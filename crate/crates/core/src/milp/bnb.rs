//! Reference MILP backend: best-first branch-and-bound on the binaries with
//! LP relaxation bounds.
//!
//! Relaxations are solved by the bounded-variable dual simplex behind
//! [`LpSolver`](super::lp::LpSolver). One solver instance serves the whole
//! search; each node only changes the bounds of its fixed binaries, so a
//! re-solve starts from the previous basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::lp::{LinearProgram, LpSolver};
use super::model::MilpModel;
use super::{SolveError, SolveLimits, SolveStatus};

/// Values within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

const LOCAL_SEARCH_PASSES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutcome {
    pub status: SolveStatus,
    /// Best incumbent; empty when infeasible or unbounded.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub nodes: u64,
}

impl BackendOutcome {
    fn without_incumbent(status: SolveStatus, nodes: u64) -> Self {
        BackendOutcome {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            bound: f64::NAN,
            nodes,
        }
    }

    /// Relative gap between incumbent and bound.
    pub fn gap(&self) -> f64 {
        relative_gap(self.objective, self.bound)
    }
}

pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Contract every MILP backend fulfils: best incumbent, proven bound, status.
pub trait MilpBackend {
    fn solve_milp(
        &self,
        model: &MilpModel,
        limits: &SolveLimits,
    ) -> Result<BackendOutcome, SolveError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

struct Node {
    bound: f64,
    seq: u64,
    /// `(position among the binaries, value)`.
    fixings: Vec<(usize, f64)>,
    /// Relaxation values of the binaries.
    binaries: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the maximum: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
    binaries: Vec<f64>,
}

pub(crate) fn linear_program(model: &MilpModel) -> LinearProgram {
    let mut lp = LinearProgram::new();
    for v in &model.vars {
        lp.add_var(v.cost, v.lower, v.upper);
    }
    for row in &model.rows {
        lp.add_constraint(row.terms.clone(), row.sense, row.rhs);
    }
    lp
}

struct Search<'a> {
    model: &'a MilpModel,
    solver: LpSolver,
    binary_ids: Vec<usize>,
    root_bounds: Vec<(f64, f64)>,
    incumbent: Option<Incumbent>,
}

impl Search<'_> {
    /// Solve the relaxation with the given binaries fixed and every other
    /// binary at its model bounds.
    fn relax(&mut self, fixed: &[Option<f64>]) -> Result<Option<(f64, Vec<f64>)>, SolveError> {
        for (k, &j) in self.binary_ids.iter().enumerate() {
            let (lo, hi) = match fixed[k] {
                Some(v) => (v, v),
                None => self.root_bounds[k],
            };
            self.solver.set_bounds(j, lo, hi);
        }
        Ok(self.solver.solve()?.map(|s| (s.objective, s.values)))
    }

    /// Polish an integral assignment and keep it if it beats the incumbent.
    /// Returns true on a strict objective improvement.
    fn consider(&mut self, rounded: Vec<f64>) -> Result<bool, SolveError> {
        let in_bounds = rounded
            .iter()
            .zip(&self.root_bounds)
            .all(|(&v, &(lo, hi))| lo <= v && v <= hi);
        if !in_bounds {
            return Ok(false);
        }
        let fixed: Vec<Option<f64>> = rounded.iter().map(|&v| Some(v)).collect();
        let Some((_, values)) = self.relax(&fixed)? else {
            return Ok(false);
        };
        let objective = self.model.objective_value(&values);
        let (better, strict) = match &self.incumbent {
            None => (true, true),
            Some(inc) => {
                let tie = 1e-9 * inc.objective.abs().max(1.0);
                let strict = objective < inc.objective - tie;
                (
                    strict || (objective <= inc.objective + tie && rounded < inc.binaries),
                    strict,
                )
            }
        };
        if better {
            self.incumbent = Some(Incumbent {
                objective,
                values,
                binaries: rounded,
            });
        }
        Ok(strict)
    }

    /// First-improvement local search: apply one move (flip every binary
    /// in the group) to the incumbent at a time, in order, until a full pass
    /// finds nothing better.
    fn improve(&mut self, moves: &[Vec<usize>], max_passes: usize) -> Result<(), SolveError> {
        for _ in 0..max_passes {
            let mut improved = false;
            for group in moves {
                let Some(inc) = &self.incumbent else {
                    return Ok(());
                };
                let mut flipped = inc.binaries.clone();
                for &k in group {
                    flipped[k] = 1.0 - flipped[k];
                }
                improved |= self.consider(flipped)?;
            }
            if !improved {
                break;
            }
        }
        Ok(())
    }

    fn binaries_of(&self, values: &[f64]) -> Vec<f64> {
        self.binary_ids.iter().map(|&j| values[j]).collect()
    }
}

/// Local search moves over the free binaries: every single flip, plus, for
/// each line, flipping its status from some hour to the end of the horizon.
/// A suffix flip changes the switching schedule by one operation where a
/// single-hour flip costs two. Moves the root relaxation favours come first.
fn local_moves(
    model: &MilpModel,
    binary_ids: &[usize],
    root: &[f64],
    free: &[bool],
) -> Vec<Vec<usize>> {
    let mut position = vec![None; model.vars.len()];
    for (k, &j) in binary_ids.iter().enumerate() {
        position[j] = Some(k);
    }
    let mut moves: Vec<Vec<usize>> = (0..binary_ids.len())
        .filter(|&k| free[k])
        .map(|k| vec![k])
        .collect();
    let delta = &model.index.delta;
    let n_lines = delta.first().map_or(0, Vec::len);
    for l in 0..n_lines {
        for t in 0..delta.len() {
            let group: Vec<usize> = delta[t..]
                .iter()
                .filter_map(|hour| position[hour[l]])
                .filter(|&k| free[k])
                .collect();
            if group.len() > 1 {
                moves.push(group);
            }
        }
    }
    let pull = |g: &Vec<usize>| g.iter().map(|&k| root[k]).sum::<f64>() / g.len() as f64;
    let mut keyed: Vec<(f64, usize, Vec<usize>)> = moves
        .into_iter()
        .enumerate()
        .map(|(i, g)| (pull(&g), i, g))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, g)| g).collect()
}

fn fixed_vector(n: usize, fixings: &[(usize, f64)]) -> Vec<Option<f64>> {
    let mut fixed = vec![None; n];
    for &(k, v) in fixings {
        fixed[k] = Some(v);
    }
    fixed
}

impl MilpBackend for BranchAndBound {
    fn solve_milp(
        &self,
        model: &MilpModel,
        limits: &SolveLimits,
    ) -> Result<BackendOutcome, SolveError> {
        let started = Instant::now();
        let binary_ids: Vec<usize> = model.binaries().collect();
        let root_bounds = binary_ids
            .iter()
            .map(|&j| (model.vars[j].lower, model.vars[j].upper))
            .collect();
        let n = binary_ids.len();
        let mut search = Search {
            model,
            solver: linear_program(model).into_solver(),
            binary_ids,
            root_bounds,
            incumbent: None,
        };
        let Some((root_bound, root_values)) = search.relax(&vec![None; n])? else {
            return Ok(BackendOutcome::without_incumbent(
                SolveStatus::Infeasible,
                0,
            ));
        };
        let root_binaries = search.binaries_of(&root_values);

        if !model.hint.is_empty() {
            let mut hinted = vec![0.0; model.vars.len()];
            for &(j, v) in &model.hint {
                hinted[j] = v;
            }
            let rounded = search.binaries_of(&hinted);
            search.consider(rounded)?;
        }
        let free: Vec<bool> = search.root_bounds.iter().map(|&(lo, hi)| lo < hi).collect();
        let moves = local_moves(model, &search.binary_ids, &root_binaries, &free);
        search.improve(&moves, LOCAL_SEARCH_PASSES)?;

        let cutoff = |inc: &Option<Incumbent>| {
            inc.as_ref().map_or(f64::INFINITY, |i| {
                i.objective - limits.mip_gap * i.objective.abs().max(1.0)
            })
        };

        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Node {
            bound: root_bound,
            seq,
            fixings: Vec::new(),
            binaries: root_binaries,
        });
        let mut nodes = 0u64;
        let mut at_limit = false;

        while let Some(node) = heap.pop() {
            if node.bound >= cutoff(&search.incumbent) {
                // every remaining node is at least as bad
                heap.clear();
                break;
            }
            let over_nodes = limits.node_limit.is_some_and(|n| nodes >= n);
            let over_time = limits.time_limit.is_some_and(|t| started.elapsed() >= t);
            if over_nodes || over_time {
                heap.push(node);
                at_limit = true;
                break;
            }
            nodes += 1;

            let mut branch: Option<(usize, f64)> = None;
            for (k, &x) in node.binaries.iter().enumerate() {
                if (x - x.round()).abs() > INTEGRALITY_TOLERANCE {
                    let score = (x - 0.5).abs();
                    if branch.is_none_or(|(_, best)| score < best) {
                        branch = Some((k, score));
                    }
                }
            }
            let Some((k, _)) = branch else {
                let rounded = node.binaries.iter().map(|x| x.round()).collect();
                if search.consider(rounded)? {
                    search.improve(&moves, LOCAL_SEARCH_PASSES)?;
                }
                continue;
            };

            for value in [0.0, 1.0] {
                let mut fixings = node.fixings.clone();
                fixings.push((k, value));
                let Some((objective, values)) = search.relax(&fixed_vector(n, &fixings))? else {
                    continue;
                };
                let bound = objective.max(node.bound);
                if bound < cutoff(&search.incumbent) {
                    seq += 1;
                    let binaries = search.binaries_of(&values);
                    heap.push(Node {
                        bound,
                        seq,
                        fixings,
                        binaries,
                    });
                }
            }
        }

        let Some(inc) = search.incumbent else {
            return if at_limit {
                Err(SolveError::LimitWithoutIncumbent)
            } else {
                Ok(BackendOutcome::without_incumbent(
                    SolveStatus::Infeasible,
                    nodes,
                ))
            };
        };
        let bound = heap.iter().map(|n| n.bound).fold(inc.objective, f64::min);
        Ok(BackendOutcome {
            status: if at_limit {
                SolveStatus::FeasibleAtLimit
            } else {
                SolveStatus::Optimal
            },
            values: inc.values,
            objective: inc.objective,
            bound,
            nodes,
        })
    }
}
