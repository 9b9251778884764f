// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lorentzian fits, peak finding and a Levenberg-Marquardt engine.

mod lm;
mod lorentz;
mod peaks;
mod power;

pub use lm::{levenberg_marquardt, LeastSquares, LmOptions, LmOutcome};
pub use lorentz::{
    fit_lorentzian, fit_lorentzian_points, lorentzian_model, LorentzianFitResult, LorentzianParams, MIN_FIT_POINTS,
};
pub use peaks::{find_peaks, find_peaks_default, Peak, PeakClass, PeakList, DEFAULT_PROMINENCE_FRACTION};
pub use power::{fwhm_vs_power, middle_peak_fit, FwhmPoint, PowerModel, WINDOW_HWHM};
