//! Streaming stochastic gradient methods with mini-batches that may grow or shrink
//! over time, their averaged variants, closed-form non-asymptotic error bounds, and
//! a Monte-Carlo harness for measuring convergence rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod models;
pub mod optimizers;
pub mod recursion;
pub mod schedules;
pub mod summation;

pub use error::{Error, Result};
