//! Hot-rolling batch scheduling under time-of-use electricity prices.
//!
//! Slabs are grouped into rolling units and sequenced, and idle time is
//! placed between units so that rolling happens in cheap hours. Two costs are
//! traded off: the electricity bill (f1, CNY) and the jump penalty between
//! neighbouring slabs (f2). [`moea::evolve`] returns the trade-off front and
//! [`topsis::rank`] picks one schedule from it.
//!
//! ```
//! use tou_sched::generator::{generate, Profile};
//! use tou_sched::moea::{evolve, SolverParams};
//!
//! let inst = generate(20, 2, 1, Profile::FEW_NOT_FULL).unwrap();
//! let params = SolverParams { generations: 30, rng_seed: 1, ..SolverParams::default() };
//! let result = evolve(&inst, &params).unwrap();
//! for s in &result.archive {
//!     assert!(s.objectives.feasible);
//! }
//! ```
//!
//! The guide in `book/` walks through the model, the file formats and the
//! command line tool.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod encoding;
pub mod generator;
pub mod instance;
pub mod moea;
pub mod objectives;
pub mod oracle;
pub mod tariff;
pub mod topsis;

// Compile and run the guide's code blocks as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/tariff.md")]
    mod tariff {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/checking.md")]
    mod checking {}
}
