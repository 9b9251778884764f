// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::Serialize;

use super::lorentz::{fit_lorentzian_points, window_points, LorentzianFitResult};
use crate::error::{Error, Result};
use crate::master_eq::{me_spectrum, HilbertLayout};
use crate::mhom::{mhom_spectrum, MhomParams, SampledEnsemble};
use crate::numeric::{local_maxima, prominence};
use crate::thom::thom_spectrum;
use crate::units::{Freq, FrequencyGrid, Spectrum, SystemParams};

/// Window half width in units of the HWHM.
pub const WINDOW_HWHM: f64 = 3.0;

/// Interior local maximum closest to `omega_nv`.
fn middle_index(x: &[f64], y: &[f64], omega_nv: f64) -> Result<usize> {
    local_maxima(y)
        .into_iter()
        .filter(|&i| prominence(y, i) > 0.0)
        .min_by(|&a, &b| (x[a] - omega_nv).abs().total_cmp(&(x[b] - omega_nv).abs()))
        .ok_or(Error::NoInteriorPeak)
}

/// HWHM measured against the peak's prominence base.
fn crossing_hwhm(x: &[f64], y: &[f64], i: usize) -> f64 {
    let half = y[i] - 0.5 * prominence(y, i);
    let left = (0..i).rev().find(|&k| y[k] <= half).map(|k| {
        let f = (y[k + 1] - half) / (y[k + 1] - y[k]);
        x[i] - (x[k + 1] - f * (x[k + 1] - x[k]))
    });
    let right = (i + 1..y.len()).find(|&k| y[k] <= half).map(|k| {
        let f = (y[k - 1] - half) / (y[k - 1] - y[k]);
        x[k - 1] + f * (x[k] - x[k - 1]) - x[i]
    });
    match (left, right) {
        (Some(l), Some(r)) => l.min(r),
        (Some(w), None) | (None, Some(w)) => w,
        (None, None) => 0.25 * (x[x.len() - 1] - x[0]),
    }
}

/// Lorentzian fit of the peak nearest `omega_nv`.
///
/// The first window is ±3 crossing widths around the sampled maximum; the fit
/// is then repeated on ±3 fitted widths around the fitted centre.
pub fn middle_peak_fit(spec: &Spectrum, omega_nv: Freq) -> Result<LorentzianFitResult> {
    let x = spec.frequencies();
    let y = &spec.values;
    let i = middle_index(&x, y, omega_nv.0)?;
    let g0 = crossing_hwhm(&x, y, i);
    let first = fit_window(&x, y, x[i], g0)?;
    if !first.converged {
        return Ok(first);
    }
    fit_window(&x, y, first.omega_center.0, first.gamma.0)
}

fn fit_window(x: &[f64], y: &[f64], center: f64, hwhm: f64) -> Result<LorentzianFitResult> {
    let w = WINDOW_HWHM * hwhm;
    let (wx, wy) = window_points(x, y, (Freq(center - w), Freq(center + w)));
    fit_lorentzian_points(&wx, &wy)
}

/// Spectrum model used by [`fwhm_vs_power`].
#[derive(Clone, Copy, Debug)]
pub enum PowerModel<'a> {
    Thom,
    Mhom(&'a SampledEnsemble),
    Me(HilbertLayout),
}

impl PowerModel<'_> {
    pub fn spectrum(&self, params: &SystemParams, grid: &FrequencyGrid) -> Result<Spectrum> {
        match self {
            PowerModel::Thom => thom_spectrum(params, grid),
            PowerModel::Mhom(ens) => mhom_spectrum(ens, &MhomParams::from_system(params), grid),
            PowerModel::Me(layout) => me_spectrum(params, grid, layout),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FwhmPoint {
    pub lambda: Freq,
    /// `None` when the spectrum or the fit failed.
    pub fwhm: Option<Freq>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Middle-peak FWHM for each drive amplitude. Failures are recorded per point.
pub fn fwhm_vs_power(
    params: &SystemParams,
    lambdas: &[Freq],
    grid: &FrequencyGrid,
    model: PowerModel<'_>,
) -> Result<Vec<FwhmPoint>> {
    params.validate()?;
    if let Some(l) = lambdas.iter().find(|l| !(l.0 > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter(format!("drive amplitude must be positive, got {l}")));
    }
    Ok(lambdas
        .par_iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda);
            match model.spectrum(&p, grid).and_then(|s| middle_peak_fit(&s, p.omega_nv)) {
                Ok(fit) => FwhmPoint { lambda, fwhm: Some(fit.fwhm), converged: fit.converged, error: None },
                Err(e) => FwhmPoint { lambda, fwhm: None, converged: false, error: Some(e.to_string()) },
            }
        })
        .collect())
}
