//! Subagged boosted probit model trees.
//!
//! This crate holds the algorithmic core and needs only `alloc`:
//!
//! * [`numerics`]: stable normal pdf/cdf, inverse Mills ratio, probit loss,
//!   Newton working response/weight and single-feature weighted least squares.
//! * [`probitboost`]: forward-stagewise additive probit models.
//! * [`cart`]: weighted Gini CART partitioning.
//! * [`pmt`]: probit model trees (CART partition + per-leaf ProbitBoost).
//! * [`ensemble`]: AdaBoost / SAMME over model trees and the subagging layer.
//! * [`bounds`]: generalization-bound calculators and subagging design statistics.
//!
//! IO, file formats and the command line live in the `sbpmt` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod bounds;
pub mod cart;
pub mod dataset;
pub mod ensemble;
mod error;
pub mod numerics;
pub mod pmt;
pub mod probitboost;

pub use dataset::Dataset;
pub use error::{Error, Result};
