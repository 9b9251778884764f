// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Runs the guide's code samples as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/units.md")]
pub mod units {}
#[doc = include_str!("../../../book/src/eigen.md")]
pub mod eigen {}
#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}
#[doc = include_str!("../../../book/src/master_equation.md")]
pub mod master_equation {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
