// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Three coupled harmonic oscillators: closed-form weak-drive spectrum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{golden_max, local_maxima, prominence, refine_tol};
use crate::units::{Freq, FrequencyGrid, ModelTag, ParamsSnapshot, Spectrum, SystemParams};

type C = Complex64;

const POLE_FLOOR: f64 = 1e-300;

/// Steady-state qubit amplitude at one drive frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThomResponse {
    pub omega: Freq,
    pub amplitude: C,
}

impl ThomResponse {
    pub fn excitation(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Qubit amplitude `(λ/2)·N/D` at drive frequency `omega`.
pub fn thom_response(params: &SystemParams, omega: Freq) -> Result<ThomResponse> {
    let w = omega.0;
    let i = C::i();
    let wq = params.omega_fq.0 - w;
    let wn = params.omega_nv.0 - w;
    let (g, j) = (params.g.0, params.j.0);
    let b = i * params.gamma_b.0 - wn;
    let d = i * params.gamma_d.0 - wn;
    let n = b * d - j * j;
    let den = (i * params.gamma_fq.0 - wq) * n - g * g * d;
    if den.norm() < POLE_FLOOR {
        return Err(Error::PoleAtRealAxis { omega: w });
    }
    Ok(ThomResponse { omega, amplitude: n / den * (0.5 * params.lambda.0) })
}

/// Qubit excitation probability at drive frequency `omega`.
///
/// ```
/// use fqnv::thom::thom_excitation;
/// use fqnv::units::{Freq, SystemParams};
/// let p = SystemParams::reference_device();
/// let on_res = thom_excitation(&p, p.omega_nv).unwrap();
/// let off_res = thom_excitation(&p, p.omega_nv + Freq(6.0)).unwrap();
/// assert!(on_res > off_res);
/// ```
pub fn thom_excitation(params: &SystemParams, omega: Freq) -> Result<f64> {
    thom_response(params, omega).map(|r| r.excitation())
}

/// Excitation evaluated on every grid point.
pub fn thom_spectrum(params: &SystemParams, grid: &FrequencyGrid) -> Result<Spectrum> {
    let values = thom_values(params, &grid.points())?;
    Spectrum::new(*grid, values, ModelTag::Thom, ParamsSnapshot::System(*params))
}

pub(crate) fn thom_values(params: &SystemParams, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas.par_iter().map(|&w| thom_excitation(params, Freq(w))).collect()
}

/// Positions of the left, middle and right spectral maxima.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThomPeaks {
    pub left: Freq,
    pub middle: Freq,
    pub right: Freq,
}

impl ThomPeaks {
    pub fn separation(&self) -> f64 {
        self.right.0 - self.left.0
    }
}

/// Locate the three maxima by a fine scan followed by golden-section refinement.
///
/// Requires the resolved regime g ≥ 3·w where w is the widest of the qubit,
/// dark and mixed qubit-bright linewidths.
pub fn thom_peak_positions(params: &SystemParams) -> Result<ThomPeaks> {
    let width = resolved_width(params);
    if params.g.0 < 3.0 * width {
        return Err(Error::InvalidParameter(format!(
            "peak finding needs g >= 3 x linewidth: g = {}, linewidth = {width}",
            params.g.0
        )));
    }
    let gmax = params.max_gamma();
    let positive = [params.gamma_fq.0, params.gamma_b.0, params.gamma_d.0]
        .into_iter()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !positive.is_finite() {
        return Err(Error::PoleAtRealAxis { omega: params.omega_nv.0 });
    }
    let delta = params.detuning().0;
    let center = params.omega_nv.0 + 0.5 * delta;
    let reach = 1.5 * (params.splitting_half().powi(2) + 0.25 * delta * delta).sqrt() + 10.0 * gmax;
    let step = positive / 5.0;
    let n = ((2.0 * reach / step).ceil() as usize).max(64) + 1;
    let grid = FrequencyGrid::new(Freq(center - reach), Freq(center + reach), n)?;
    let xs = grid.points();
    let ys = thom_values(params, &xs)?;

    let mut peaks: Vec<(usize, f64)> = local_maxima(&ys).into_iter().map(|i| (i, prominence(&ys, i))).collect();
    if peaks.len() < 3 {
        return Err(Error::PeaksNotResolved { expected: 3, found: peaks.len() });
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(3);
    peaks.sort_by_key(|p| p.0);

    let h = grid.step();
    let mut pos = [Freq::ZERO; 3];
    for (slot, &(i, _)) in pos.iter_mut().zip(&peaks) {
        let (x, _) = golden_max(xs[i] - h, xs[i] + h, refine_tol(xs[i], h), |w| thom_excitation(params, Freq(w)))?;
        *slot = Freq(x);
    }
    Ok(ThomPeaks { left: pos[0], middle: pos[1], right: pos[2] })
}

/// Widest linewidth among the qubit, dark mode and qubit-bright polaritons.
pub fn resolved_width(params: &SystemParams) -> f64 {
    let polariton = 0.5 * (params.gamma_fq.0 + params.gamma_b.0);
    params.gamma_fq.0.max(params.gamma_d.0).max(polariton)
}
