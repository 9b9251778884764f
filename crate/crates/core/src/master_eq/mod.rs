// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad master equation for a driven two-level qubit coupled to truncated
//! bright and dark bosonic modes, solved for its steady state in the frame
//! rotating at the drive frequency.

mod liouvillian;
mod operators;
mod steady;

pub use liouvillian::{build_liouvillian, MeModel, Superoperator};
pub use operators::{build_rotating_hamiltonian, HilbertLayout, LayoutOperators, OperatorMatrix};
pub use steady::{
    qubit_excitation, steady_state, DensityMatrix, SolveDiagnostics, SteadyState, DENSE_LIMIT, HERMITICITY_TOL,
    POSITIVITY_TOL, RESIDUAL_TOL, TRACE_TOL,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{Freq, FrequencyGrid, ModelTag, ParamsSnapshot, Spectrum, SystemParams};

/// Qubit excitation at a single drive frequency, with solve diagnostics.
pub fn me_point(model: &MeModel, omega: Freq) -> Result<(f64, SolveDiagnostics)> {
    let ss = steady_state(&model.liouvillian(omega)).map_err(Error::at(omega.0))?;
    Ok((qubit_excitation(&ss.rho, model.layout()), ss.diagnostics))
}

/// ME spectrum together with per-point solver diagnostics.
#[derive(Clone, Debug)]
pub struct MeSpectrum {
    pub spectrum: Spectrum,
    pub diagnostics: Vec<SolveDiagnostics>,
}

pub fn me_spectrum_with_diagnostics(
    params: &SystemParams,
    grid: &FrequencyGrid,
    layout: &HilbertLayout,
) -> Result<MeSpectrum> {
    params.validate()?;
    let model = MeModel::new(params, layout);
    let points: Vec<(f64, SolveDiagnostics)> =
        grid.points().par_iter().map(|&w| me_point(&model, Freq(w))).collect::<Result<_>>()?;
    let (values, diagnostics): (Vec<f64>, Vec<SolveDiagnostics>) = points.into_iter().unzip();
    let spectrum = Spectrum::new(*grid, values, ModelTag::Me, ParamsSnapshot::System(*params))?;
    Ok(MeSpectrum { spectrum, diagnostics })
}

/// Steady-state qubit excitation over the grid.
///
/// ```
/// use fqnv::master_eq::{me_spectrum, HilbertLayout};
/// use fqnv::units::{Freq, FrequencyGrid, SystemParams};
/// let p = SystemParams { lambda: Freq(1.0), ..SystemParams::reference_device() };
/// let grid = FrequencyGrid::centered(p.omega_nv, 1.0, 3).unwrap();
/// let s = me_spectrum(&p, &grid, &HilbertLayout::uniform(2).unwrap()).unwrap();
/// assert!(s.values[1] > s.values[0]);
/// ```
pub fn me_spectrum(params: &SystemParams, grid: &FrequencyGrid, layout: &HilbertLayout) -> Result<Spectrum> {
    me_spectrum_with_diagnostics(params, grid, layout).map(|m| m.spectrum)
}

/// Relative deviation between spectra at layouts (n_b, n_d) and (n_b+1, n_d+1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_b: usize,
    pub n_d: usize,
    pub max_rel_dev: f64,
    pub pass: bool,
}

pub const CONVERGENCE_TOL: f64 = 1e-3;

fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = (x - y).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / y.abs().max(x.abs())
            }
        })
        .fold(0.0, f64::max)
}

pub fn truncation_convergence(
    params: &SystemParams,
    grid: &FrequencyGrid,
    layout: &HilbertLayout,
) -> Result<ConvergenceReport> {
    let a = me_spectrum(params, grid, layout)?;
    let b = me_spectrum(params, grid, &layout.grown())?;
    let max_rel_dev = max_relative_deviation(&a.values, &b.values);
    Ok(ConvergenceReport {
        n_b: layout.n_max_bright,
        n_d: layout.n_max_dark,
        max_rel_dev,
        pass: max_rel_dev < CONVERGENCE_TOL,
    })
}

/// Grow the truncation from `start` until a report passes or `max_levels` is reached.
pub fn converge_truncation(
    params: &SystemParams,
    grid: &FrequencyGrid,
    start: &HilbertLayout,
    max_levels: usize,
) -> Result<Vec<ConvergenceReport>> {
    let mut layout = *start;
    let mut prev = me_spectrum(params, grid, &layout)?;
    let mut reports = Vec::new();
    while layout.n_max_bright.max(layout.n_max_dark) < max_levels {
        let next_layout = layout.grown();
        let next = me_spectrum(params, grid, &next_layout)?;
        let max_rel_dev = max_relative_deviation(&prev.values, &next.values);
        let pass = max_rel_dev < CONVERGENCE_TOL;
        reports.push(ConvergenceReport { n_b: layout.n_max_bright, n_d: layout.n_max_dark, max_rel_dev, pass });
        if pass {
            break;
        }
        layout = next_layout;
        prev = next;
    }
    Ok(reports)
}
