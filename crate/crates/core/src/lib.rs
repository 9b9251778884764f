// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spectroscopy of a superconducting flux qubit coupled to an NV⁻ spin ensemble.
//!
//! Three models of increasing fidelity compute the qubit excitation under a
//! weak microwave drive:
//!
//! - [`thom`]: three coupled harmonic oscillators, closed form.
//! - [`mhom`]: a sampled inhomogeneous ensemble of oscillator pairs.
//! - [`master_eq`]: Lindblad steady state in a truncated Fock space, valid at any drive power.
//!
//! [`estimate`] turns ensemble broadening parameters into effective couplings
//! and decay rates, and [`fitting`] extracts line widths. All frequencies use
//! the [`units::Freq`] convention.
//!
//! ```
//! use fqnv::thom::thom_peak_positions;
//! use fqnv::units::SystemParams;
//! let peaks = thom_peak_positions(&SystemParams::reference_device()).unwrap();
//! assert!((peaks.separation() - 27.0).abs() < 0.3);
//! ```

pub mod config;
pub mod eigen;
pub mod error;
pub mod estimate;
pub mod fitting;
pub mod io;
pub mod master_eq;
pub mod mhom;
mod numeric;
pub mod thom;
pub mod units;

pub use error::{Error, PipelineStage, Result};
pub use units::{Freq, FrequencyGrid, SignalMap, Spectrum, SystemParams};
