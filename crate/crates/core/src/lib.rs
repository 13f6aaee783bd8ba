//! Core model: a VAR(1) productivity process, carbon-price transition
//! scenarios, a multisector Cobb-Douglas economy with emission costs,
//! structural firm valuation, credit-risk measures and calibration.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod credit;
pub mod economy;
pub mod error;
pub mod linalg;
pub mod normal;
pub mod rng;
pub mod transition;
pub mod valuation;
pub mod var_process;

pub use error::{Error, Result};
