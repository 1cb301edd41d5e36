//! Case files: a single versioned JSON document holding the grid, the
//! demand profile, planning defaults and optional breaker duty curves.
//!
//! Field names follow the usual symbols: `d` and `q` on buses, `b`, `fmax`,
//! `fmin`, `zeta` and `delta0` on lines, `Co`, `Pmin` and `Pmax` on
//! generators, and `T`, `H1`, `H2` and `alpha` for the planning settings.
//! Money is in $, power in MW, susceptance in p.u. on `mva_base`.

mod generate;

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{BigM, PlanningConfig, SolveLimits, SwitchingBudgets};
use crate::network::{Bus, DemandProfile, Generator, Line, Network, NetworkError};
use crate::wear::{Breaker, DutyCurve, SwitchHistory};

pub use generate::{generate_case, GenSpec};

pub const FORMAT_NAME: &str = "tsplan-case";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("schema error at `{path}` (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("invalid case: {0}")]
    Invalid(String),
}

impl From<NetworkError> for CaseError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::DuplicateId { .. }
            | NetworkError::ReferenceBusCount(_)
            | NetworkError::UnknownBus { .. } => CaseError::Integrity(e.to_string()),
            _ => CaseError::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reference: bool,
    /// Demand per block, MW.
    pub d: Vec<f64>,
    /// Curtailment penalty, $/MWh.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryRecord {
    pub current_ka: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakerRecord {
    /// Name of an entry in `duty_curves`; the built-in default curve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<HistoryRecord>,
    /// Current interrupted by a planned switching operation; the curve's
    /// normal current when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_current_ka: Option<f64>,
}

fn default_true() -> bool {
    true
}

fn default_status() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    /// Susceptance, p.u.
    pub b: f64,
    pub fmax: f64,
    /// Defaults to `-fmax`.
    #[serde(default)]
    pub fmin: Option<f64>,
    #[serde(default = "default_true")]
    pub switchable: bool,
    #[serde(default)]
    pub zeta: f64,
    #[serde(default = "default_status")]
    pub delta0: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaker: Option<BreakerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRecord {
    pub id: usize,
    pub bus: usize,
    #[serde(rename = "Co")]
    pub cost: Vec<f64>,
    #[serde(rename = "Pmin")]
    pub p_min: Vec<f64>,
    #[serde(rename = "Pmax")]
    pub p_max: Vec<f64>,
}

/// A budget given either once for every entry or entry by entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetRecord {
    Uniform(i64),
    PerEntry(Vec<i64>),
}

impl BudgetRecord {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<i64>, CaseError> {
        match self {
            BudgetRecord::Uniform(v) => Ok(vec![*v; n]),
            BudgetRecord::PerEntry(v) if v.len() == n => Ok(v.clone()),
            BudgetRecord::PerEntry(v) => Err(CaseError::Invalid(format!(
                "{what} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

fn default_gap() -> f64 {
    1e-4
}

fn default_threshold() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigRecord {
    /// Per-line switching budget over the horizon; absent means unlimited.
    #[serde(rename = "H1", default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<BudgetRecord>,
    /// Per-hour system-wide switching budget; absent means unlimited.
    #[serde(rename = "H2", default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<BudgetRecord>,
    pub alpha: f64,
    #[serde(default = "default_true")]
    pub charge_both_directions: bool,
    #[serde(default = "default_gap")]
    pub mip_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_limit: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<f64>,
    #[serde(default = "default_threshold")]
    pub overload_threshold: f64,
    /// Explicit big-M per line in MW; `B * pi` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_m: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DutyCurveRecord {
    pub name: String,
    pub budget: f64,
    /// `[current kA, weight]` pairs.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Free-text note on where the data came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub mva_base: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
    pub generators: Vec<GeneratorRecord>,
    pub config: ConfigRecord,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub duty_curves: Vec<DutyCurveRecord>,
}

/// Parse, normalize and validate a case document.
pub fn parse_case(text: &str) -> Result<CaseFile, CaseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut case: CaseFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CaseError::Schema {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    case.normalize()?;
    case.validate()?;
    Ok(case)
}

impl CaseFile {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("case serializes");
        s.push('\n');
        s
    }

    fn normalize(&mut self) -> Result<(), CaseError> {
        for l in &mut self.lines {
            l.fmin.get_or_insert(-l.fmax);
        }
        let n_lines = self.lines.len();
        if let Some(h1) = &self.config.h1 {
            self.config.h1 = Some(BudgetRecord::PerEntry(h1.expand(n_lines, "H1")?));
        }
        if let Some(h2) = &self.config.h2 {
            self.config.h2 = Some(BudgetRecord::PerEntry(h2.expand(self.horizon, "H2")?));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        let invalid = |m: String| Err(CaseError::Invalid(m));
        if self.format != FORMAT_NAME {
            return invalid(format!(
                "format must be `{FORMAT_NAME}`, got `{}`",
                self.format
            ));
        }
        if self.version != FORMAT_VERSION {
            return invalid(format!("unsupported version {}", self.version));
        }
        if self.horizon == 0 {
            return invalid("T must be at least 1".into());
        }
        for b in &self.buses {
            if b.d.len() != self.horizon {
                return invalid(format!(
                    "bus {}: d has {} blocks, T = {}",
                    b.id,
                    b.d.len(),
                    self.horizon
                ));
            }
            if b.d.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
                return invalid(format!(
                    "bus {}: demand must be finite and non-negative",
                    b.id
                ));
            }
        }
        for g in &self.generators {
            if g.cost.len() != self.horizon {
                return invalid(format!(
                    "generator {}: Co has {} blocks, T = {}",
                    g.id,
                    g.cost.len(),
                    self.horizon
                ));
            }
        }
        for l in &self.lines {
            if l.delta0 > 1 {
                return invalid(format!("line {}: delta0 must be 0 or 1", l.id));
            }
        }
        let network = self.network()?;
        let max_cost = network.max_marginal_cost();
        for b in &self.buses {
            if !(b.q > max_cost) {
                return invalid(format!(
                    "bus {}: curtailment price {} must exceed the largest generator cost {max_cost}",
                    b.id, b.q
                ));
            }
        }
        let curves = self.duty_curves()?;
        for l in &self.lines {
            if let Some(br) = &l.breaker {
                let curve = match &br.curve {
                    Some(name) => curves.get(name).ok_or_else(|| {
                        CaseError::Integrity(format!(
                            "line {} references unknown duty curve `{name}`",
                            l.id
                        ))
                    })?,
                    None => &DutyCurve::default(),
                };
                for &i in br
                    .history
                    .iter()
                    .map(|h| &h.current_ka)
                    .chain(&br.switch_current_ka)
                {
                    curve
                        .weight_at(i)
                        .map_err(|e| CaseError::Invalid(format!("line {}: {e}", l.id)))?;
                }
            }
        }
        let (network, demand, config) = self.planning_inputs()?;
        config
            .validate(&network, &demand)
            .map_err(|e| CaseError::Invalid(e.to_string()))
    }

    pub fn network(&self) -> Result<Network, CaseError> {
        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id,
                is_reference: b.reference,
            })
            .collect();
        let lines = self
            .lines
            .iter()
            .map(|l| Line {
                id: l.id,
                from_bus: l.from,
                to_bus: l.to,
                susceptance: l.b,
                f_max: l.fmax,
                f_min: l.fmin.unwrap_or(-l.fmax),
                switchable: l.switchable,
                switch_cost: l.zeta,
                initial_status: l.delta0 == 1,
            })
            .collect();
        let generators = self
            .generators
            .iter()
            .map(|g| Generator {
                id: g.id,
                bus: g.bus,
                cost: g.cost.clone(),
                p_min: g.p_min.clone(),
                p_max: g.p_max.clone(),
            })
            .collect();
        Ok(Network::new(self.mva_base, buses, lines, generators)?)
    }

    pub fn demand(&self) -> DemandProfile {
        DemandProfile {
            demand: (0..self.horizon)
                .map(|t| self.buses.iter().map(|b| b.d[t]).collect())
                .collect(),
            penalty: self.buses.iter().map(|b| b.q).collect(),
        }
    }

    pub fn config(&self) -> Result<PlanningConfig, CaseError> {
        let c = &self.config;
        let n_lines = self.lines.len();
        let budgets = match (&c.h1, &c.h2) {
            (None, None) => None,
            (h1, h2) => Some(SwitchingBudgets {
                per_line: match h1 {
                    Some(h) => h.expand(n_lines, "H1")?,
                    None => vec![self.horizon as i64; n_lines],
                },
                per_hour: match h2 {
                    Some(h) => h.expand(self.horizon, "H2")?,
                    None => vec![n_lines as i64; self.horizon],
                },
            }),
        };
        Ok(PlanningConfig {
            horizon: self.horizon,
            budgets,
            alpha: c.alpha,
            big_m: match &c.big_m {
                Some(v) => BigM::Explicit(v.clone()),
                None => BigM::AngleSpan,
            },
            charge_both_directions: c.charge_both_directions,
            overload_threshold: c.overload_threshold,
            limits: SolveLimits {
                mip_gap: c.mip_gap,
                node_limit: c.node_limit,
                time_limit: c.time_limit_s.map(Duration::from_secs_f64),
            },
        })
    }

    pub fn planning_inputs(&self) -> Result<(Network, DemandProfile, PlanningConfig), CaseError> {
        Ok((self.network()?, self.demand(), self.config()?))
    }

    pub fn duty_curves(&self) -> Result<HashMap<String, DutyCurve>, CaseError> {
        let mut out = HashMap::new();
        for c in &self.duty_curves {
            let curve = DutyCurve::new(c.points.iter().map(|p| (p[0], p[1])).collect(), c.budget)
                .map_err(|e| CaseError::Invalid(format!("duty curve `{}`: {e}", c.name)))?;
            if out.insert(c.name.clone(), curve).is_some() {
                return Err(CaseError::Integrity(format!(
                    "duplicate duty curve `{}`",
                    c.name
                )));
            }
        }
        Ok(out)
    }

    /// The first `horizon` blocks of this case.
    pub fn truncated(&self, horizon: usize) -> Result<CaseFile, CaseError> {
        if horizon == 0 || horizon > self.horizon {
            return Err(CaseError::Invalid(format!(
                "horizon {horizon} is outside 1..={}",
                self.horizon
            )));
        }
        let mut case = self.clone();
        case.horizon = horizon;
        for b in &mut case.buses {
            b.d.truncate(horizon);
        }
        for g in &mut case.generators {
            g.cost.truncate(horizon);
            g.p_min.truncate(horizon);
            g.p_max.truncate(horizon);
        }
        if let Some(BudgetRecord::PerEntry(h2)) = &mut case.config.h2 {
            h2.truncate(horizon);
        }
        case.validate()?;
        Ok(case)
    }

    /// Breaker of the line at position `line`; the default breaker when the
    /// case gives none.
    pub fn breaker(&self, line: usize) -> Result<Breaker, CaseError> {
        let record = self.lines[line].breaker.as_ref();
        let curve = match record.and_then(|b| b.curve.as_ref()) {
            Some(name) => self
                .duty_curves()?
                .remove(name)
                .ok_or_else(|| CaseError::Integrity(format!("unknown duty curve `{name}`")))?,
            None => DutyCurve::default(),
        };
        let history = SwitchHistory {
            entries: record
                .map(|b| b.history.iter().map(|h| (h.current_ka, h.count)).collect())
                .unwrap_or_default(),
        };
        let switch_current_ka = record
            .and_then(|b| b.switch_current_ka)
            .unwrap_or_else(|| curve.normal_current());
        Ok(Breaker {
            curve,
            history,
            switch_current_ka,
        })
    }

    pub fn breakers(&self) -> Result<Vec<Breaker>, CaseError> {
        (0..self.lines.len()).map(|l| self.breaker(l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_BUS: &str = include_str!("../../../../fixtures/two-bus.json");

    #[test]
    fn minimal_fixture_parses() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.lines.len(), 1);
        assert_eq!(case.lines[0].fmin, Some(-case.lines[0].fmax));
        let net = case.network().unwrap();
        assert_eq!(net.n_lines(), 1);
    }

    #[test]
    fn duplicate_bus_is_an_integrity_error() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.buses[1].id = case.buses[0].id;
        let err = parse_case(&case.to_json()).unwrap_err();
        assert!(
            matches!(err, CaseError::Integrity(ref m) if m.contains("duplicate bus")),
            "{err}"
        );
    }

    #[test]
    fn dangling_bus_reference_is_named() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.generators[0].bus = 99;
        let err = parse_case(&case.to_json()).unwrap_err();
        assert!(
            matches!(err, CaseError::Integrity(ref m) if m.contains("99")),
            "{err}"
        );
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let text = TWO_BUS.replacen("\"fmax\"", "\"f_max\"", 1);
        match parse_case(&text).unwrap_err() {
            CaseError::Schema { path, line, .. } => {
                assert!(path.starts_with("lines[0]"), "{path}");
                assert!(line > 1);
            }
            other => panic!("unexpected {other}"),
        }
        let wrong_type = TWO_BUS.replacen("\"alpha\": 0.5", "\"alpha\": \"half\"", 1);
        assert!(
            matches!(parse_case(&wrong_type), Err(CaseError::Schema { ref path, .. }) if path == "config.alpha")
        );
    }

    #[test]
    fn scalar_budgets_expand() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.config.h1, Some(BudgetRecord::PerEntry(vec![2])));
        let cfg = case.config().unwrap();
        assert_eq!(cfg.budgets.unwrap().per_hour, vec![4; case.horizon]);
    }

    #[test]
    fn curtailment_price_must_dominate_costs() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.buses[0].q = 1.0;
        assert!(matches!(
            parse_case(&case.to_json()),
            Err(CaseError::Invalid(_))
        ));
    }

    #[test]
    fn truncation_keeps_the_leading_blocks() {
        let case = parse_case(TWO_BUS).unwrap();
        let short = case.truncated(1).unwrap();
        assert_eq!(short.buses[1].d, vec![50.0]);
        assert_eq!(short.config.h2, Some(BudgetRecord::PerEntry(vec![4])));
        assert!(case.truncated(3).is_err());
        assert!(case.truncated(0).is_err());
    }

    #[test]
    fn inconsistent_horizon_is_rejected() {
        let mut case = parse_case(TWO_BUS).unwrap();
        case.buses[0].d.push(1.0);
        assert!(
            matches!(parse_case(&case.to_json()), Err(CaseError::Invalid(ref m)) if m.contains("blocks"))
        );
    }
}
