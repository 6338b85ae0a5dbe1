//! Risk-sensitive cost minimization on finite controlled Markov chains.
//!
//! The optimal growth rate of the exponentiated cumulative cost is computed
//! as the value of a single-controller zero-sum ergodic game: one player picks
//! a transition kernel `q` (paying a Kullback-Leibler penalty against the
//! controlled kernel), the other picks actions. The game is solved through a
//! pair of finite linear programs over dyadic kernel grids, and every answer
//! can be checked against the spectral and enumeration oracles in [`oracle`]
//! and the nested dynamic-programming equations in [`dp`].
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; file formats, the command line, and reports live in the
//! `riskmdp` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod dp;
pub mod error;
pub mod ext;
pub mod game;
pub mod grid;
mod linalg;
pub mod lp;
pub(crate) mod math;
pub mod model;
pub mod oracle;
pub mod sample;

pub use error::{Error, Result};
pub use ext::Ext;
pub use model::{KernelMatrix, MdpModel, PurePolicy, StationaryPolicy};
