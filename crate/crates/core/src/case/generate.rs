//! Seeded synthetic cases.
//!
//! The grid is a random spanning tree plus random chords, so it is always
//! connected. Ratings are derived from the flows of an unconstrained
//! dispatch: lines chosen as congested get a rating below their natural peak
//! flow, every other line is loaded at most 45% by that dispatch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BudgetRecord, BusRecord, CaseFile, ConfigRecord, GeneratorRecord, LineRecord};
use super::{FORMAT_NAME, FORMAT_VERSION};
use crate::milp::dc_opf;
use crate::network::Topology;

/// Loading of uncongested lines under the unconstrained dispatch stays at or below this.
pub const SLACK_LOADING: f64 = 0.45;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub n_buses: usize,
    pub n_lines: usize,
    pub horizon: usize,
    /// Fraction of lines rated below their natural peak flow, in `[0, 1]`.
    pub congestion: f64,
    pub h1: i64,
    pub h2: i64,
    pub alpha: f64,
    /// Switching cost per operation is drawn from this range ($).
    pub switch_cost: (f64, f64),
    /// Written into the case's solver settings.
    pub node_limit: Option<u64>,
}

impl GenSpec {
    pub fn new(seed: u64, n_buses: usize, n_lines: usize, horizon: usize) -> Self {
        GenSpec {
            seed,
            n_buses,
            n_lines,
            horizon,
            congestion: 0.3,
            h1: 2,
            h2: 4,
            alpha: 0.5,
            switch_cost: (2.0, 20.0),
            node_limit: None,
        }
    }

    pub fn congestion(mut self, knob: f64) -> Self {
        self.congestion = knob;
        self
    }

    pub fn budgets(mut self, h1: i64, h2: i64) -> Self {
        self.h1 = h1;
        self.h2 = h2;
        self
    }

    pub fn switch_cost(mut self, lo: f64, hi: f64) -> Self {
        self.switch_cost = (lo, hi);
        self
    }

    pub fn node_limit(mut self, nodes: u64) -> Self {
        self.node_limit = Some(nodes);
        self
    }

    /// The `tsplan gen` invocation that reproduces this spec.
    pub fn command(&self) -> String {
        let mut cmd = format!(
            "tsplan gen --seed {} --buses {} --lines {} --horizon {} --congestion {} \
             --h1 {} --h2 {} --alpha {} --switch-cost {},{}",
            self.seed,
            self.n_buses,
            self.n_lines,
            self.horizon,
            self.congestion,
            self.h1,
            self.h2,
            self.alpha,
            self.switch_cost.0,
            self.switch_cost.1
        );
        if let Some(n) = self.node_limit {
            cmd.push_str(&format!(" --node-limit {n}"));
        }
        cmd
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_buses < 2 {
            return Err("need at least 2 buses".into());
        }
        if self.n_lines + 1 < self.n_buses {
            return Err(format!(
                "{} lines cannot connect {} buses",
                self.n_lines, self.n_buses
            ));
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.congestion) {
            return Err("congestion knob must lie in [0, 1]".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err("alpha must lie in (0, 1]".into());
        }
        if self.h1 < 0 || self.h2 < 0 {
            return Err("switching budgets must be non-negative".into());
        }
        if !(self.switch_cost.0 >= 0.0 && self.switch_cost.1 >= self.switch_cost.0) {
            return Err("switch cost range is empty or negative".into());
        }
        Ok(())
    }
}

fn round_dp(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

fn ceil_dp(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (x * scale).ceil() / scale
}

/// Build a synthetic case. Equal specs give byte-identical output.
///
/// # Panics
///
/// When `spec` fails [`GenSpec::validate`].
pub fn generate_case(spec: &GenSpec) -> CaseFile {
    if let Err(e) = spec.validate() {
        panic!("invalid generator spec: {e}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_buses;
    let horizon = spec.horizon;

    let mut ends = Vec::with_capacity(spec.n_lines);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(&mut rng);
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        ends.push((parent, order[k]));
    }
    while ends.len() < spec.n_lines {
        let a = rng.random_range(1..=n);
        let mut b = rng.random_range(1..n);
        if b >= a {
            b += 1;
        }
        ends.push((a.min(b), a.max(b)));
    }
    let mut lines: Vec<LineRecord> = ends
        .into_iter()
        .enumerate()
        .map(|(k, (from, to))| LineRecord {
            id: k + 1,
            from,
            to,
            b: round_dp(rng.random_range(10.0..40.0), 2),
            fmax: 1e6,
            fmin: None,
            switchable: true,
            zeta: round_dp(rng.random_range(spec.switch_cost.0..=spec.switch_cost.1), 2),
            delta0: 1,
            breaker: None,
        })
        .collect();

    let n_gen = (n * 5).div_ceil(4);
    let mut generators = Vec::with_capacity(n_gen);
    for g in 0..n_gen {
        let bus = rng.random_range(1..=n);
        let base_cost: f64 = rng.random_range(10.0..60.0);
        let p_max = round_dp(rng.random_range(50.0..250.0), 1);
        let cost = (0..horizon)
            .map(|_| round_dp(base_cost * rng.random_range(0.95..1.05), 2))
            .collect();
        generators.push(GeneratorRecord {
            id: g + 1,
            bus,
            cost,
            p_min: vec![0.0; horizon],
            p_max: vec![p_max; horizon],
        });
    }
    let capacity: f64 = generators.iter().map(|g| g.p_max[0]).sum();

    let mut weights: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.7) {
                rng.random_range(0.5..1.5)
            } else {
                0.0
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let weight_sum: f64 = weights.iter().sum();
    let peak = 0.6 * capacity;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let buses: Vec<BusRecord> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| BusRecord {
            id: i + 1,
            reference: i == 0,
            d: (0..horizon)
                .map(|t| {
                    let shape = 0.8 + 0.2 * (phase + t as f64 * 0.9).sin();
                    let noise = rng.random_range(0.85..1.15);
                    round_dp(peak * w / weight_sum * shape * noise, 2)
                })
                .collect(),
            q: 1000.0,
        })
        .collect();

    let mut case = CaseFile {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        name: Some(format!(
            "synthetic-{}-{}-{}-{}",
            spec.seed, spec.n_buses, spec.n_lines, spec.horizon
        )),
        source: Some(spec.command()),
        mva_base: 100.0,
        horizon,
        buses,
        lines: Vec::new(),
        generators,
        config: ConfigRecord {
            h1: Some(BudgetRecord::PerEntry(vec![spec.h1; spec.n_lines])),
            h2: Some(BudgetRecord::PerEntry(vec![spec.h2; horizon])),
            alpha: spec.alpha,
            charge_both_directions: true,
            mip_gap: 1e-4,
            node_limit: spec.node_limit,
            time_limit_s: None,
            overload_threshold: 1.0,
            big_m: None,
        },
        duty_curves: Vec::new(),
    };

    // Natural flows: economic dispatch with unbounded lines.
    case.lines = lines.clone();
    let network = case.network().expect("generated network is valid");
    let demand = case.demand();
    let topology = Topology::initial(&network);
    let mut peak_flow = vec![0.0f64; lines.len()];
    for t in 0..horizon {
        let sol = dc_opf(&network, &topology, &demand, t).expect("unconstrained dispatch solves");
        for (pk, f) in peak_flow.iter_mut().zip(&sol.dispatch.f) {
            *pk = pk.max(f.abs());
        }
    }

    let n_tight = (spec.congestion * lines.len() as f64).round() as usize;
    let mut by_flow: Vec<usize> = (0..lines.len()).collect();
    by_flow.sort_by(|&a, &b| peak_flow[b].total_cmp(&peak_flow[a]).then(a.cmp(&b)));
    let mut tight = vec![false; lines.len()];
    for &l in by_flow.iter().take(n_tight) {
        tight[l] = true;
    }
    for (l, line) in lines.iter_mut().enumerate() {
        let natural = peak_flow[l];
        let rating = if tight[l] {
            natural * rng.random_range(0.75..0.95)
        } else {
            natural / rng.random_range(0.25..SLACK_LOADING)
        };
        line.fmax = ceil_dp(rating.max(10.0), 1);
        line.fmin = Some(-line.fmax);
    }
    case.lines = lines;
    case
}
