//! Worst-case pricing over α-regular valuation distributions.
//!
//! The crate computes approximation ratios of statistic-based pricing
//! policies, certifies hidden-pricing ratios through discretized linear
//! programs, and evaluates the matching impossibility bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod hiddenlp;
pub mod mechanisms;
pub mod numerics;
pub mod reduction;

pub use error::{Error, Result};
pub use numerics::{ExtReal, Tolerances};
pub use distributions::{Alpha, CheckDist, Distribution, GeneralRegular, HatDist, UniformDist, Valuation};
pub use reduction::{ReductionConfig, Statistic, StatisticPolicy};
