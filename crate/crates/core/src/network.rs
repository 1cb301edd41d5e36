//! Grid representation and the reduced matrices built from it.
//!
//! Buses, lines and generators are addressed by their position in the
//! [`Network`] vectors. User-facing ids are kept on each record and only used
//! for lookups and reporting.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: usize },
    #[error("expected exactly one reference bus, found {0}")]
    ReferenceBusCount(usize),
    #[error("{kind} {id} references unknown bus {bus}")]
    UnknownBus {
        kind: &'static str,
        id: usize,
        bus: usize,
    },
    #[error("line {id}: {reason}")]
    InvalidLine { id: usize, reason: String },
    #[error("generator {id}: {reason}")]
    InvalidGenerator { id: usize, reason: String },
    #[error("mva base must be positive, got {0}")]
    InvalidBase(f64),
    #[error("topology has {got} entries, network has {expected} lines")]
    TopologyLength { expected: usize, got: usize },
    #[error("closed-line graph is disconnected: {}", format_components(.components))]
    SingularTopology { components: Vec<Vec<usize>> },
}

fn format_components(components: &[Vec<usize>]) -> String {
    components
        .iter()
        .map(|c| {
            let ids: Vec<String> = c.iter().map(|id| id.to_string()).collect();
            format!("{{{}}}", ids.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub is_reference: bool,
}

/// A dispatchable unit. `cost`, `p_min` and `p_max` hold one entry per load
/// block; the network checks that every generator covers the same number of
/// blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub cost: Vec<f64>,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series susceptance in p.u. on the network MVA base.
    pub susceptance: f64,
    pub f_max: f64,
    pub f_min: f64,
    pub switchable: bool,
    /// Cost charged per breaker operation ($).
    pub switch_cost: f64,
    pub initial_status: bool,
}

/// Per-bus demand over the planning blocks plus the curtailment price.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    /// `demand[t][i]` in MW for block `t`, bus position `i`.
    pub demand: Vec<Vec<f64>>,
    /// Curtailment penalty per bus position, $/MWh.
    pub penalty: Vec<f64>,
}

impl DemandProfile {
    pub fn blocks(&self) -> usize {
        self.demand.len()
    }

    pub fn total(&self, t: usize) -> f64 {
        self.demand[t].iter().sum()
    }
}

/// On/off state of every line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Topology(Vec<bool>);

impl Topology {
    pub fn new(status: Vec<bool>) -> Self {
        Topology(status)
    }

    pub fn all_closed(n_lines: usize) -> Self {
        Topology(vec![true; n_lines])
    }

    pub fn initial(network: &Network) -> Self {
        Topology(network.lines.iter().map(|l| l.initial_status).collect())
    }

    pub fn is_closed(&self, line: usize) -> bool {
        self.0[line]
    }

    pub fn set(&mut self, line: usize, closed: bool) {
        self.0[line] = closed;
    }

    pub fn with_open(&self, line: usize) -> Self {
        let mut t = self.clone();
        t.0[line] = false;
        t
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn closed_lines(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(l, _)| l)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Validated, immutable grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    mva_base: f64,
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    reference: usize,
    bus_pos: HashMap<usize, usize>,
    // (from position, to position) per line
    ends: Vec<(usize, usize)>,
    gen_bus: Vec<usize>,
}

impl Network {
    pub fn new(
        mva_base: f64,
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
    ) -> Result<Self, NetworkError> {
        if !(mva_base > 0.0 && mva_base.is_finite()) {
            return Err(NetworkError::InvalidBase(mva_base));
        }
        let mut bus_pos = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if bus_pos.insert(b.id, i).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "bus",
                    id: b.id,
                });
            }
        }
        let refs: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_reference)
            .map(|(i, _)| i)
            .collect();
        if refs.len() != 1 {
            return Err(NetworkError::ReferenceBusCount(refs.len()));
        }

        let mut line_ids = HashMap::new();
        let mut ends = Vec::with_capacity(lines.len());
        for l in &lines {
            if line_ids.insert(l.id, ()).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "line",
                    id: l.id,
                });
            }
            let lookup = |bus| {
                bus_pos.get(&bus).copied().ok_or(NetworkError::UnknownBus {
                    kind: "line",
                    id: l.id,
                    bus,
                })
            };
            let (from, to) = (lookup(l.from_bus)?, lookup(l.to_bus)?);
            let bad = |reason: &str| NetworkError::InvalidLine {
                id: l.id,
                reason: reason.to_string(),
            };
            if from == to {
                return Err(bad("from and to bus are the same"));
            }
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                return Err(bad("susceptance must be positive"));
            }
            if !(l.f_min <= 0.0 && l.f_max >= 0.0) || !l.f_min.is_finite() || !l.f_max.is_finite() {
                return Err(bad("limits must satisfy f_min <= 0 <= f_max"));
            }
            if !(l.switch_cost >= 0.0) {
                return Err(bad("switching cost must be non-negative"));
            }
            ends.push((from, to));
        }

        let blocks = generators.first().map(|g| g.cost.len());
        let mut gen_ids = HashMap::new();
        let mut gen_bus = Vec::with_capacity(generators.len());
        for g in &generators {
            if gen_ids.insert(g.id, ()).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "generator",
                    id: g.id,
                });
            }
            let pos = bus_pos
                .get(&g.bus)
                .copied()
                .ok_or(NetworkError::UnknownBus {
                    kind: "generator",
                    id: g.id,
                    bus: g.bus,
                })?;
            let bad = |reason: String| NetworkError::InvalidGenerator { id: g.id, reason };
            if Some(g.cost.len()) != blocks
                || g.p_min.len() != g.cost.len()
                || g.p_max.len() != g.cost.len()
            {
                return Err(bad("per-block arrays have inconsistent lengths".into()));
            }
            for t in 0..g.cost.len() {
                if !(0.0 <= g.p_min[t] && g.p_min[t] <= g.p_max[t]) || !g.p_max[t].is_finite() {
                    return Err(bad(format!("block {}: need 0 <= p_min <= p_max", t + 1)));
                }
                if !g.cost[t].is_finite() {
                    return Err(bad(format!("block {}: cost is not finite", t + 1)));
                }
            }
            gen_bus.push(pos);
        }

        Ok(Network {
            mva_base,
            reference: refs[0],
            buses,
            lines,
            generators,
            bus_pos,
            ends,
            gen_bus,
        })
    }

    pub fn mva_base(&self) -> f64 {
        self.mva_base
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Position of the reference bus.
    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.bus_pos.get(&id).copied()
    }

    pub fn line_position(&self, id: usize) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// Bus positions at the from and to end of a line.
    pub fn line_ends(&self, line: usize) -> (usize, usize) {
        self.ends[line]
    }

    pub fn generator_bus(&self, gen: usize) -> usize {
        self.gen_bus[gen]
    }

    /// Number of load blocks the generator data covers (`None` without generators).
    pub fn blocks(&self) -> Option<usize> {
        self.generators.first().map(|g| g.cost.len())
    }

    /// MW of flow per radian of angle difference: susceptance scaled by the base.
    pub fn flow_factor(&self, line: usize) -> f64 {
        self.lines[line].susceptance * self.mva_base
    }

    /// Row of a bus in the reduced matrices, `None` for the reference bus.
    pub fn reduced_row(&self, bus: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match bus.cmp(&self.reference) {
            Less => Some(bus),
            Equal => None,
            Greater => Some(bus - 1),
        }
    }

    pub fn switchable_lines(&self) -> Vec<usize> {
        (0..self.lines.len())
            .filter(|&l| self.lines[l].switchable)
            .collect()
    }

    pub fn max_marginal_cost(&self) -> f64 {
        self.generators
            .iter()
            .flat_map(|g| g.cost.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_topology(&self, topology: &Topology) -> Result<(), NetworkError> {
        if topology.len() != self.lines.len() {
            return Err(NetworkError::TopologyLength {
                expected: self.lines.len(),
                got: topology.len(),
            });
        }
        Ok(())
    }
}

/// Reduced bus-branch incidence matrix: `(buses - 1) x lines`, +1 at the
/// from-bus row and -1 at the to-bus row of every column.
pub fn incidence_matrix(network: &Network) -> DMatrix<f64> {
    let mut psi = DMatrix::zeros(network.n_buses() - 1, network.n_lines());
    for l in 0..network.n_lines() {
        let (from, to) = network.line_ends(l);
        if let Some(r) = network.reduced_row(from) {
            psi[(r, l)] = 1.0;
        }
        if let Some(r) = network.reduced_row(to) {
            psi[(r, l)] = -1.0;
        }
    }
    psi
}

/// `Y = Psi B Psi^T` over closed lines, susceptances in p.u.
///
/// Fails with [`NetworkError::SingularTopology`] when the closed lines do not
/// connect every bus.
pub fn reduced_admittance(
    network: &Network,
    topology: &Topology,
) -> Result<DMatrix<f64>, NetworkError> {
    network.check_topology(topology)?;
    let components = connectivity(network, topology);
    if components.len() > 1 {
        return Err(NetworkError::SingularTopology { components });
    }
    Ok(assemble_admittance(network, topology))
}

pub(crate) fn assemble_admittance(network: &Network, topology: &Topology) -> DMatrix<f64> {
    let n = network.n_buses() - 1;
    let mut y = DMatrix::zeros(n, n);
    for l in topology.closed_lines() {
        let b = network.lines()[l].susceptance;
        let (from, to) = network.line_ends(l);
        let (rf, rt) = (network.reduced_row(from), network.reduced_row(to));
        if let Some(i) = rf {
            y[(i, i)] += b;
        }
        if let Some(j) = rt {
            y[(j, j)] += b;
        }
        if let (Some(i), Some(j)) = (rf, rt) {
            y[(i, j)] -= b;
            y[(j, i)] -= b;
        }
    }
    y
}

/// Connected components of the closed-line graph as sorted bus ids. Components
/// are ordered by their smallest bus id.
pub fn connectivity(network: &Network, topology: &Topology) -> Vec<Vec<usize>> {
    let n = network.n_buses();
    let mut adjacency = vec![Vec::new(); n];
    for l in topology.closed_lines() {
        let (a, b) = network.line_ends(l);
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut ids = Vec::new();
        while let Some(u) = queue.pop_front() {
            ids.push(network.buses()[u].id);
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        ids.sort_unstable();
        components.push(ids);
    }
    components.sort_by_key(|c| c[0]);
    components
}
