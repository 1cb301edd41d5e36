#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tsplan::case::{parse_case, CaseFile};
use tsplan::network::{Bus, Generator, Line, Network, Topology};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> CaseFile {
    let path = fixtures_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_case(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every bundled fixture, sorted by file name.
pub fn all_fixtures() -> Vec<(String, CaseFile)> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| (n.clone(), fixture(&n)))
        .collect()
}

/// The congested 13-bus fixture family.
pub fn congested_family() -> Vec<(String, CaseFile)> {
    all_fixtures()
        .into_iter()
        .filter(|(n, _)| n.starts_with("congested-13-"))
        .collect()
}

/// A random connected network: a random spanning tree plus extra lines,
/// which may run in parallel to existing ones. Bus 1 is the reference.
pub fn random_network(rng: &mut impl Rng, n_buses: usize, n_lines: usize) -> Network {
    assert!(n_lines + 1 >= n_buses);
    let mut ends = Vec::new();
    for k in 2..=n_buses {
        ends.push((rng.random_range(1..k), k));
    }
    while ends.len() < n_lines {
        let a = rng.random_range(1..=n_buses);
        let b = rng.random_range(1..=n_buses);
        if a != b {
            ends.push((a, b));
        }
    }
    let lines = ends
        .into_iter()
        .enumerate()
        .map(|(k, (from_bus, to_bus))| Line {
            id: k + 1,
            from_bus,
            to_bus,
            susceptance: rng.random_range(1.0..20.0),
            f_max: 1e4,
            f_min: -1e4,
            switchable: true,
            switch_cost: 1.0,
            initial_status: true,
        })
        .collect();
    let buses = (1..=n_buses)
        .map(|id| Bus {
            id,
            is_reference: id == 1,
        })
        .collect();
    let generators = vec![Generator {
        id: 1,
        bus: 1,
        cost: vec![10.0],
        p_min: vec![0.0],
        p_max: vec![1e4],
    }];
    Network::new(100.0, buses, lines, generators).unwrap()
}

/// Line flows of a lossless DC power flow for bus injections `injection`
/// (by bus position, summing to zero), computed from first principles.
/// `None` when the closed lines do not connect every bus.
pub fn dc_power_flow(
    network: &Network,
    topology: &Topology,
    injection: &[f64],
) -> Option<Vec<f64>> {
    let n = network.n_buses();
    let reference = network.reference();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for (l, line) in network.lines().iter().enumerate() {
        if !topology.is_closed(l) {
            continue;
        }
        let (i, j) = network.line_ends(l);
        let y = network.mva_base() * line.susceptance;
        b[(i, i)] += y;
        b[(j, j)] += y;
        b[(i, j)] -= y;
        b[(j, i)] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != reference).collect();
    let reduced = DMatrix::from_fn(keep.len(), keep.len(), |r, c| b[(keep[r], keep[c])]);
    let rhs = DVector::from_iterator(keep.len(), keep.iter().map(|&i| injection[i]));
    let lu = reduced.lu();
    // a disconnected network leaves the reduced matrix singular
    let scale = lu.u().diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if lu
        .u()
        .diagonal()
        .iter()
        .any(|x| x.abs() <= 1e-9 * scale.max(1.0))
    {
        return None;
    }
    let solved = lu.solve(&rhs)?;
    let mut theta = vec![0.0; n];
    for (r, &i) in keep.iter().enumerate() {
        theta[i] = solved[r];
    }
    Some(
        network
            .lines()
            .iter()
            .enumerate()
            .map(|(l, line)| {
                if topology.is_closed(l) {
                    let (i, j) = network.line_ends(l);
                    network.mva_base() * line.susceptance * (theta[i] - theta[j])
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

/// Random balanced injections: every non-reference bus draws from
/// `[-100, 100]` MW and the reference bus absorbs the rest.
pub fn random_injection(rng: &mut impl Rng, network: &Network) -> Vec<f64> {
    let reference = network.reference();
    let mut p: Vec<f64> = (0..network.n_buses())
        .map(|i| {
            if i == reference {
                0.0
            } else {
                rng.random_range(-100.0..100.0)
            }
        })
        .collect();
    p[reference] = -p.iter().sum::<f64>();
    p
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}
