//! Multi-hour transmission switching planning.
//!
//! `tsplan` solves DC optimal power flow with line switching over a horizon
//! of hourly blocks. Breaker operations are charged in the objective and can
//! be limited per line and per hour. A sensitivity-based screen shrinks the
//! list of lines the optimizer may switch.
//!
//! ```
//! use tsplan::case::{generate_case, GenSpec};
//! use tsplan::reduction::plan_switching;
//!
//! let case = generate_case(&GenSpec::new(7, 6, 9, 2).congestion(0.4));
//! let (network, demand, config) = case.planning_inputs().unwrap();
//! let outcome = plan_switching(&network, &demand, &config).unwrap();
//! assert!(outcome.result.plan.total_events() <= 2 * config.budgets.unwrap().per_hour[0] as usize);
//! ```
//!
//! The modules follow the data flow: [`network`] holds the grid and its
//! matrices, [`sensitivity`] the distribution factors, [`milp`] the
//! optimization model and solver, [`reduction`] the candidate screen,
//! [`experiment`] the comparison regimes, [`case`] file I/O and synthetic
//! cases, [`report`] result documents and [`wear`] breaker maintenance
//! accounting.

// Index loops mirror the model's notation; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod case;
pub mod experiment;
pub mod milp;
pub mod network;
pub mod reduction;
pub mod report;
pub mod sensitivity;
pub mod wear;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] network::NetworkError),
    #[error(transparent)]
    Sensitivity(#[from] sensitivity::SensitivityError),
    #[error(transparent)]
    Solve(#[from] milp::SolveError),
    #[error(transparent)]
    Wear(#[from] wear::WearError),
    #[error(transparent)]
    Case(#[from] case::CaseError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/sensitivity.md")]
    mod sensitivity {}
    #[doc = include_str!("../../../book/src/switching.md")]
    mod switching {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/wear.md")]
    mod wear {}
    #[doc = include_str!("../../../book/src/case-format.md")]
    mod case_format {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
