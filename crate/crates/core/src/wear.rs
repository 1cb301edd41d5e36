//! Circuit-breaker wear accounting.
//!
//! A breaker tolerates a fixed number of weighted interruptions before it
//! needs maintenance. Interrupting a larger current costs more: each
//! interruption at current `I` consumes `k(I)` units of the budget, with `k`
//! read off a duty curve. The remaining number of interruptions at `I_x` is
//!
//! ```text
//! n_x = floor((budget - sum_i n_i * k(I_i)) / k(I_x))
//! ```

use thiserror::Error;

/// Budget of weighted operations of the default breaker.
pub const DEFAULT_BUDGET: f64 = 6000.0;
/// Rated normal current of the default breaker (kA); weight 1.
pub const DEFAULT_NORMAL_CURRENT_KA: f64 = 3.15;
/// Rated short-circuit breaking current of the default breaker (kA).
pub const DEFAULT_SHORT_CIRCUIT_KA: f64 = 40.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WearError {
    #[error("current {current} kA is outside the duty curve range [{min}, {max}] kA")]
    OutOfRange { current: f64, min: f64, max: f64 },
    #[error("invalid duty curve: {0}")]
    InvalidCurve(String),
}

/// Interruption weight versus current, interpolated linearly in log-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct DutyCurve {
    points: Vec<(f64, f64)>,
    budget: f64,
}

impl Default for DutyCurve {
    /// Two anchors: weight 1 at the rated normal current and a weight at
    /// 40 kA such that ten short-circuit interruptions exhaust the budget.
    fn default() -> Self {
        DutyCurve {
            points: vec![
                (DEFAULT_NORMAL_CURRENT_KA, 1.0),
                (DEFAULT_SHORT_CIRCUIT_KA, DEFAULT_BUDGET / 10.0),
            ],
            budget: DEFAULT_BUDGET,
        }
    }
}

impl DutyCurve {
    /// `points` are `(current kA, weight)` pairs with strictly increasing
    /// current, non-decreasing weight, all weights at least 1 and the first
    /// weight exactly 1.
    pub fn new(points: Vec<(f64, f64)>, budget: f64) -> Result<Self, WearError> {
        let bad = |m: &str| Err(WearError::InvalidCurve(m.to_string()));
        if points.is_empty() {
            return bad("no points");
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return bad("budget must be positive");
        }
        if points
            .iter()
            .any(|&(i, k)| !(i > 0.0 && i.is_finite() && k.is_finite()))
        {
            return bad("currents must be positive and finite");
        }
        if points
            .windows(2)
            .any(|w| !(w[1].0 > w[0].0) || w[1].1 < w[0].1)
        {
            return bad("currents must increase strictly and weights must not decrease");
        }
        if points[0].1 != 1.0 || points.iter().any(|&(_, k)| k < 1.0) {
            return bad("weights start at 1 at the normal current and never drop below it");
        }
        Ok(DutyCurve { points, budget })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Current at which one interruption costs one unit of budget.
    pub fn normal_current(&self) -> f64 {
        self.points[0].0
    }

    pub fn weight_at(&self, current: f64) -> Result<f64, WearError> {
        let (min, max) = (self.points[0].0, self.points[self.points.len() - 1].0);
        if !(current >= min && current <= max) {
            return Err(WearError::OutOfRange { current, min, max });
        }
        if let Some(&(_, k)) = self.points.iter().find(|&&(i, _)| i == current) {
            return Ok(k);
        }
        let upper = self.points.iter().position(|&(i, _)| i > current).unwrap();
        let (i0, k0) = self.points[upper - 1];
        let (i1, k1) = self.points[upper];
        let s = (current.ln() - i0.ln()) / (i1.ln() - i0.ln());
        Ok((k0.ln() + s * (k1.ln() - k0.ln())).exp())
    }

    /// Budget consumed by a history of interruptions.
    pub fn consumed(&self, history: &SwitchHistory) -> Result<f64, WearError> {
        history
            .entries
            .iter()
            .map(|&(i, n)| Ok(n as f64 * self.weight_at(i)?))
            .sum()
    }

    /// Interruptions at `current` still permitted after `history`, never negative.
    pub fn remaining_operations(
        &self,
        history: &SwitchHistory,
        current: f64,
    ) -> Result<u64, WearError> {
        let used = self.consumed(history)?;
        let k = self.weight_at(current)?;
        let left = (self.budget - used) / k;
        // absorb rounding in the log-log interpolation before flooring
        let n = (left + 1e-9 * left.abs().max(1.0)).floor();
        Ok(if n > 0.0 { n as u64 } else { 0 })
    }
}

/// Past interruptions as `(current kA, count)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SwitchHistory {
    pub entries: Vec<(f64, u64)>,
}

impl SwitchHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, current: f64, count: u64) {
        self.entries.push((current, count));
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, n)| n).sum()
    }
}

/// A line's breaker: its duty curve, past interruptions and the current a
/// planned switching operation interrupts.
#[derive(Debug, Clone, PartialEq)]
pub struct Breaker {
    pub curve: DutyCurve,
    pub history: SwitchHistory,
    pub switch_current_ka: f64,
}

impl Default for Breaker {
    fn default() -> Self {
        let curve = DutyCurve::default();
        Breaker {
            switch_current_ka: curve.normal_current(),
            curve,
            history: SwitchHistory::new(),
        }
    }
}

impl Breaker {
    /// Planned-switching operations left before maintenance.
    pub fn remaining(&self) -> Result<u64, WearError> {
        self.curve
            .remaining_operations(&self.history, self.switch_current_ka)
    }

    /// Operations left after `events` more planned switchings.
    pub fn remaining_after(&self, events: u64) -> Result<u64, WearError> {
        let mut history = self.history.clone();
        history.record(self.switch_current_ka, events);
        self.curve
            .remaining_operations(&history, self.switch_current_ka)
    }
}
