//! Power transfer and line outage distribution factors for a fixed topology.
//!
//! For a line `l` with terminals `(k, n)` the flow on line `m` induced by a
//! unit injection at `k` and unit withdrawal at `n` is
//!
//! ```text
//! PTDF[m, l] = B[m] * Psi[:, m]^T * Y^-1 * Psi[:, l]
//! ```
//!
//! and the outage of `l` shifts `LODF[m, l] = PTDF[m, l] / (1 - PTDF[l, l])`
//! of its pre-outage flow onto `m`. All solves share one Cholesky
//! factorization of the reduced admittance matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::network::{self, Network, NetworkError, Topology};

/// Self-PTDF values within this distance of 1 mark a bridge line.
pub const BRIDGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("line {0} is open in this topology")]
    LineOpen(usize),
    #[error("opening line {0} islands the network")]
    BridgeLine(usize),
    #[error("cross factor needs two distinct lines, got line {0} twice")]
    SameLine(usize),
    #[error("reduced admittance matrix is not positive definite")]
    Factorization,
}

/// One factorization of `Y` for a topology, reusable for any number of
/// distribution-factor queries.
pub struct SensitivityEngine<'a> {
    network: &'a Network,
    topology: Topology,
    factor: Option<Cholesky<f64, Dyn>>,
}

impl<'a> SensitivityEngine<'a> {
    pub fn new(network: &'a Network, topology: &Topology) -> Result<Self, SensitivityError> {
        let y = network::reduced_admittance(network, topology)?;
        let factor = if y.nrows() == 0 {
            None
        } else {
            Some(y.cholesky().ok_or(SensitivityError::Factorization)?)
        };
        Ok(SensitivityEngine {
            network,
            topology: topology.clone(),
            factor,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    fn ensure_closed(&self, line: usize) -> Result<(), SensitivityError> {
        if self.topology.is_closed(line) {
            Ok(())
        } else {
            Err(SensitivityError::LineOpen(self.network.lines()[line].id))
        }
    }

    /// Reduced angles produced by a unit transfer across the terminals of `line`.
    fn transfer_angles(&self, line: usize) -> DVector<f64> {
        let n = self.network.n_buses() - 1;
        let mut rhs = DVector::zeros(n);
        let (from, to) = self.network.line_ends(line);
        if let Some(r) = self.network.reduced_row(from) {
            rhs[r] += 1.0;
        }
        if let Some(r) = self.network.reduced_row(to) {
            rhs[r] -= 1.0;
        }
        match &self.factor {
            Some(f) => f.solve(&rhs),
            None => rhs,
        }
    }

    fn flow_from_angles(&self, line: usize, angles: &DVector<f64>) -> f64 {
        let (from, to) = self.network.line_ends(line);
        let at = |bus| self.network.reduced_row(bus).map_or(0.0, |r| angles[r]);
        self.network.lines()[line].susceptance * (at(from) - at(to))
    }

    /// Distribution factors of every line in `observed` for a transfer across `line`.
    fn ptdf_column(&self, line: usize, observed: &[usize]) -> Vec<f64> {
        let angles = self.transfer_angles(line);
        observed
            .iter()
            .map(|&m| self.flow_from_angles(m, &angles))
            .collect()
    }

    pub fn ptdf_self(&self, line: usize) -> Result<f64, SensitivityError> {
        self.ensure_closed(line)?;
        Ok(self.ptdf_column(line, &[line])[0])
    }

    pub fn ptdf_cross(&self, monitored: usize, line: usize) -> Result<f64, SensitivityError> {
        if monitored == line {
            return Err(SensitivityError::SameLine(self.network.lines()[line].id));
        }
        self.ensure_closed(monitored)?;
        self.ensure_closed(line)?;
        Ok(self.ptdf_column(line, &[monitored])[0])
    }

    pub fn lodf(&self, monitored: usize, line: usize) -> Result<f64, SensitivityError> {
        let cross = self.ptdf_cross(monitored, line)?;
        let own = self.ptdf_self(line)?;
        if is_bridge(own) {
            return Err(SensitivityError::BridgeLine(self.network.lines()[line].id));
        }
        Ok(cross / (1.0 - own))
    }
}

pub fn is_bridge(ptdf_self: f64) -> bool {
    (1.0 - ptdf_self).abs() <= BRIDGE_TOLERANCE
}

pub fn ptdf_self(
    network: &Network,
    topology: &Topology,
    line: usize,
) -> Result<f64, SensitivityError> {
    SensitivityEngine::new(network, topology)?.ptdf_self(line)
}

pub fn ptdf_cross(
    network: &Network,
    topology: &Topology,
    monitored: usize,
    line: usize,
) -> Result<f64, SensitivityError> {
    SensitivityEngine::new(network, topology)?.ptdf_cross(monitored, line)
}

pub fn lodf(
    network: &Network,
    topology: &Topology,
    monitored: usize,
    line: usize,
) -> Result<f64, SensitivityError> {
    SensitivityEngine::new(network, topology)?.lodf(monitored, line)
}

/// Predicted flow on a monitored line after opening another line.
pub fn post_outage_flow(flow_monitored: f64, flow_outaged: f64, lodf: f64) -> f64 {
    flow_monitored + lodf * flow_outaged
}

/// Distribution factors between a set of monitored lines and a set of
/// switching candidates, all computed against one factorization.
///
/// Bridge candidates keep their self-PTDF but carry no LODF column. When a
/// line is both monitored and a candidate, its own outage factor is -1 (its
/// flow drops to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySet {
    topology: Topology,
    monitored: Vec<usize>,
    candidates: Vec<usize>,
    ptdf_self: Vec<f64>,
    bridge: Vec<bool>,
    ptdf_cross: DMatrix<f64>,
    lodf: DMatrix<f64>,
}

impl SensitivitySet {
    pub fn compute(
        network: &Network,
        topology: &Topology,
        monitored: &[usize],
        candidates: &[usize],
    ) -> Result<Self, SensitivityError> {
        let engine = SensitivityEngine::new(network, topology)?;
        for &l in monitored.iter().chain(candidates) {
            engine.ensure_closed(l)?;
        }
        let (nm, nc) = (monitored.len(), candidates.len());
        let mut ptdf_self = Vec::with_capacity(nc);
        let mut bridge = Vec::with_capacity(nc);
        let mut ptdf_cross = DMatrix::zeros(nm, nc);
        let mut lodf = DMatrix::zeros(nm, nc);
        let mut observed = Vec::with_capacity(nm + 1);
        for (c, &l) in candidates.iter().enumerate() {
            observed.clear();
            observed.push(l);
            observed.extend_from_slice(monitored);
            let column = engine.ptdf_column(l, &observed);
            let own = column[0];
            let is_bridge = is_bridge(own);
            ptdf_self.push(own);
            bridge.push(is_bridge);
            for (k, &m) in monitored.iter().enumerate() {
                ptdf_cross[(k, c)] = column[k + 1];
                if !is_bridge {
                    lodf[(k, c)] = if m == l {
                        -1.0
                    } else {
                        column[k + 1] / (1.0 - own)
                    };
                }
            }
        }
        Ok(SensitivitySet {
            topology: topology.clone(),
            monitored: monitored.to_vec(),
            candidates: candidates.to_vec(),
            ptdf_self,
            bridge,
            ptdf_cross,
            lodf,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn monitored(&self) -> &[usize] {
        &self.monitored
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    fn candidate_col(&self, line: usize) -> Option<usize> {
        self.candidates.iter().position(|&c| c == line)
    }

    fn monitored_row(&self, line: usize) -> Option<usize> {
        self.monitored.iter().position(|&m| m == line)
    }

    pub fn ptdf_self(&self, candidate: usize) -> Option<f64> {
        self.candidate_col(candidate).map(|c| self.ptdf_self[c])
    }

    pub fn is_bridge(&self, candidate: usize) -> Option<bool> {
        self.candidate_col(candidate).map(|c| self.bridge[c])
    }

    pub fn ptdf_cross(&self, monitored: usize, candidate: usize) -> Option<f64> {
        let (r, c) = (
            self.monitored_row(monitored)?,
            self.candidate_col(candidate)?,
        );
        Some(self.ptdf_cross[(r, c)])
    }

    /// `None` when either line is not part of the set.
    pub fn lodf(
        &self,
        monitored: usize,
        candidate: usize,
    ) -> Option<Result<f64, SensitivityError>> {
        let (r, c) = (
            self.monitored_row(monitored)?,
            self.candidate_col(candidate)?,
        );
        Some(if self.bridge[c] {
            Err(SensitivityError::BridgeLine(candidate))
        } else {
            Ok(self.lodf[(r, c)])
        })
    }

    pub fn ptdf_cross_matrix(&self) -> &DMatrix<f64> {
        &self.ptdf_cross
    }

    pub fn self_ptdfs(&self) -> &[f64] {
        &self.ptdf_self
    }

    pub fn bridges(&self) -> &[bool] {
        &self.bridge
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use approx::assert_abs_diff_eq;

    fn parallel_pair() -> Network {
        Network::new(
            1.0,
            buses(2, 2),
            vec![line(1, 1, 2, 10.0, 1.0), line(2, 1, 2, 10.0, 1.0)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_line_is_bridge() {
        let net = Network::new(1.0, buses(2, 2), vec![line(1, 1, 2, 4.0, 1.0)], vec![]).unwrap();
        let topo = Topology::initial(&net);
        assert_eq!(ptdf_self(&net, &topo, 0).unwrap(), 1.0);
        let eng = SensitivityEngine::new(&net, &topo).unwrap();
        assert_eq!(eng.ptdf_self(0).unwrap(), 1.0);
        let set = SensitivitySet::compute(&net, &topo, &[0], &[0]).unwrap();
        assert_eq!(set.is_bridge(0), Some(true));
        assert!(matches!(
            set.lodf(0, 0),
            Some(Err(SensitivityError::BridgeLine(_)))
        ));
    }

    #[test]
    fn parallel_lines_split_evenly() {
        let net = parallel_pair();
        let topo = Topology::initial(&net);
        assert_abs_diff_eq!(ptdf_self(&net, &topo, 0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ptdf_cross(&net, &topo, 1, 0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(lodf(&net, &topo, 1, 0).unwrap(), 1.0, epsilon = 1e-10);
        assert_eq!(
            ptdf_cross(&net, &topo, 0, 0),
            Err(SensitivityError::SameLine(1))
        );
    }

    #[test]
    fn triangle_factors() {
        let net = triangle(10.0);
        let topo = Topology::all_closed(3);
        let eng = SensitivityEngine::new(&net, &topo).unwrap();
        for l in 0..3 {
            assert_abs_diff_eq!(eng.ptdf_self(l).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
            for m in (0..3).filter(|&m| m != l) {
                assert_abs_diff_eq!(
                    eng.ptdf_cross(m, l).unwrap().abs(),
                    1.0 / 3.0,
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(eng.lodf(m, l).unwrap().abs(), 1.0, epsilon = 1e-10);
            }
        }
        let set = SensitivitySet::compute(&net, &topo, &[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(set.self_ptdfs().len(), 3);
        for l in 0..3 {
            for m in 0..3 {
                let v = set.lodf(m, l).unwrap().unwrap();
                if m == l {
                    assert_eq!(v, -1.0);
                } else {
                    assert_abs_diff_eq!(v.abs(), 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn empty_monitored_keeps_self_terms() {
        let net = triangle(5.0);
        let set = SensitivitySet::compute(&net, &Topology::all_closed(3), &[], &[0, 2]).unwrap();
        assert_eq!(set.ptdf_cross_matrix().shape(), (0, 2));
        assert_abs_diff_eq!(set.ptdf_self(2).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn open_lines_and_islands_are_rejected() {
        let net = triangle(5.0);
        let topo = Topology::all_closed(3).with_open(1);
        assert_eq!(
            SensitivitySet::compute(&net, &topo, &[1], &[0]).unwrap_err(),
            SensitivityError::LineOpen(2)
        );
        assert_eq!(
            ptdf_self(&net, &topo, 1),
            Err(SensitivityError::LineOpen(2))
        );
        // lines 1 and 3 are now both bridges
        assert!(matches!(
            lodf(&net, &topo, 2, 0),
            Err(SensitivityError::BridgeLine(1))
        ));
        let islands = Topology::new(vec![true, false, false]);
        assert!(matches!(
            ptdf_cross(&net, &islands, 0, 0),
            Err(SensitivityError::Network(
                NetworkError::SingularTopology { .. }
            ))
        ));
    }

    #[test]
    fn post_outage_arithmetic() {
        assert_eq!(post_outage_flow(0.0, 0.0, 0.3), 0.0);
        assert_eq!(post_outage_flow(40.0, 60.0, 1.0), 100.0);
    }
}
