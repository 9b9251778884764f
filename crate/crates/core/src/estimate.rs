// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Translate ensemble-level inputs into effective three-mode parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, PipelineStage, Result};
use crate::fitting::{levenberg_marquardt, LeastSquares, LmOptions};
use crate::mhom::{
    mhom_middle_peak_shift, mhom_response, mhom_values, slope_through_origin, EnsembleSpec, MhomParams,
    MiddlePeakSearch, SampledEnsemble,
};
use crate::numeric::{golden_max, local_maxima, prominence, refine_tol};
use crate::thom::{thom_excitation, thom_values};
use crate::units::{Freq, FrequencyGrid, SystemParams};

/// Qubit decay rate 1/(2 T1) for `t1_us` in microseconds, in ×2π MHz.
///
/// ```
/// use fqnv::estimate::gamma_fq_from_t1;
/// let t1 = 1.0 / (4.0 * std::f64::consts::PI * 0.33);
/// assert!((gamma_fq_from_t1(t1).unwrap().0 - 0.33).abs() < 1e-12);
/// ```
pub fn gamma_fq_from_t1(t1_us: f64) -> Result<Freq> {
    if !(t1_us > 0.0) {
        return Err(Error::InvalidParameter(format!("T1 must be positive, got {t1_us}")));
    }
    Ok(Freq(1.0 / (4.0 * std::f64::consts::PI * t1_us)))
}

/// Inverse of [`gamma_fq_from_t1`].
pub fn t1_from_gamma_fq(gamma_fq: Freq) -> Result<f64> {
    if !(gamma_fq.0 > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_fq must be positive, got {gamma_fq}")));
    }
    Ok(1.0 / (4.0 * std::f64::consts::PI * gamma_fq.0))
}

fn refine_peak(ensemble: &SampledEnsemble, params: &MhomParams, xs: &[f64], i: usize) -> Result<f64> {
    let h = xs[1] - xs[0];
    golden_max(xs[i] - h, xs[i] + h, refine_tol(xs[i], h), |w| mhom_response(&ensemble.packets, params, Freq(w))).map(|r| r.0)
}

/// Distance between the most prominent ensemble peaks below and above `omega_nv`.
pub fn estimate_separation(ensemble: &SampledEnsemble, params: &MhomParams, grid: &FrequencyGrid) -> Result<Freq> {
    params.validate()?;
    let xs = grid.points();
    let ys = mhom_values(&ensemble.packets, params, &xs)?;
    let w0 = ensemble.spec.omega_nv.0;
    let side = |below: bool| {
        local_maxima(&ys)
            .into_iter()
            .filter(|&i| if below { xs[i] < w0 } else { xs[i] > w0 })
            .map(|i| (i, prominence(&ys, i)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    };
    match (side(true), side(false)) {
        (Some(l), Some(r)) => {
            let left = refine_peak(ensemble, params, &xs, l)?;
            let right = refine_peak(ensemble, params, &xs, r)?;
            Ok(Freq(right - left))
        }
        (l, r) => Err(Error::PeaksNotResolved { expected: 2, found: l.is_some() as usize + r.is_some() as usize }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioEstimate {
    /// Slope of the middle-peak shift against detuning, J²/(g²+J²).
    pub ratio: f64,
    pub rms_residual: f64,
    pub shifts: Vec<(f64, f64)>,
}

pub fn estimate_ratio(
    ensemble: &SampledEnsemble,
    params: &MhomParams,
    deltas: &[f64],
    search: &MiddlePeakSearch,
) -> Result<RatioEstimate> {
    if deltas.len() < 3 {
        return Err(Error::InsufficientData { found: deltas.len(), needed: 3 });
    }
    let shifts = mhom_middle_peak_shift(ensemble, params, deltas, search)?;
    let (ratio, rms_residual) = slope_through_origin(&shifts);
    Ok(RatioEstimate { ratio, rms_residual, shifts })
}

/// Invert separation = 2√(g²+J²) and ratio = J²/(g²+J²).
///
/// ```
/// use fqnv::estimate::solve_g_j;
/// use fqnv::units::Freq;
/// let (g, j) = solve_g_j(Freq(2.0), 0.5).unwrap();
/// assert!((g.0 - 0.5f64.sqrt()).abs() < 1e-15 && (j.0 - g.0).abs() < 1e-15);
/// ```
pub fn solve_g_j(separation: Freq, ratio: f64) -> Result<(Freq, Freq)> {
    if !(separation.0 > 0.0) || !separation.is_finite() {
        return Err(Error::InvalidParameter(format!("separation must be positive, got {separation}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    let s = 0.5 * separation.0;
    Ok((Freq(s * (1.0 - ratio).sqrt()), Freq(s * ratio.sqrt())))
}

/// Parameters held fixed while fitting the mode linewidths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedCouplings {
    pub g: Freq,
    pub j: Freq,
    pub gamma_fq: Freq,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaFit {
    pub gamma_b: Freq,
    pub gamma_d: Freq,
    /// ‖thom − mhom‖₂ of the unit-peak spectra.
    pub residual_norm: f64,
    pub iterations: usize,
}

struct GammaProblem<'a> {
    base: SystemParams,
    xs: &'a [f64],
    target: Vec<f64>,
}

// Parameters are ln Γ_b, ln Γ_d so both stay positive.
impl LeastSquares for GammaProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.xs.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        let params = SystemParams { gamma_b: Freq(p[0].exp()), gamma_d: Freq(p[1].exp()), ..self.base };
        let mut ys = thom_values(&params, self.xs)?;
        unit_peak(self.xs, &mut ys, |w| thom_excitation(&params, Freq(w)))?;
        for ((o, y), t) in out.iter_mut().zip(&ys).zip(&self.target) {
            *o = y - t;
        }
        Ok(())
    }
}

/// Divide by the continuous peak value, refined around the largest sample.
fn unit_peak(xs: &[f64], ys: &mut [f64], f: impl FnMut(f64) -> Result<f64>) -> Result<()> {
    let i = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b])).unwrap_or(0);
    let (lo, hi) = (xs[i.saturating_sub(1)], xs[(i + 1).min(xs.len() - 1)]);
    let (_, m) = golden_max(lo, hi, refine_tol(xs[i], hi - lo), f)?;
    let m = m.max(ys[i]);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::NonPositiveGamma { gamma: 0.0 });
    }
    ys.iter_mut().for_each(|v| *v /= m);
    Ok(())
}

/// Least-squares Γ_b, Γ_d such that the three-mode lineshape matches the
/// ensemble lineshape, both normalised to unit peak.
///
/// Starts from (fwhm_strain, fwhm_zfs); a zero width falls back to the packet
/// linewidth in `params`, then to 10 grid steps.
pub fn fit_gammas(
    ensemble: &SampledEnsemble,
    params: &MhomParams,
    fixed: &FixedCouplings,
    grid: &FrequencyGrid,
) -> Result<GammaFit> {
    let guess = |width: Freq, packet: Freq| {
        Freq([width.0, packet.0, 10.0 * grid.step()].into_iter().find(|&w| w > 0.0).unwrap_or(1.0))
    };
    let start = (guess(ensemble.spec.fwhm_strain, params.gamma_b), guess(ensemble.spec.fwhm_zfs, params.gamma_d));
    fit_gammas_from(ensemble, params, fixed, grid, start)
}

/// [`fit_gammas`] from an explicit starting point (Γ_b, Γ_d).
pub fn fit_gammas_from(
    ensemble: &SampledEnsemble,
    params: &MhomParams,
    fixed: &FixedCouplings,
    grid: &FrequencyGrid,
    start: (Freq, Freq),
) -> Result<GammaFit> {
    params.validate()?;
    if let Some(g) = [start.0, start.1].into_iter().find(|g| !(g.0 > 0.0) || !g.is_finite()) {
        return Err(Error::NonPositiveGamma { gamma: g.0 });
    }
    let xs = grid.points();
    let mut target = mhom_values(&ensemble.packets, params, &xs)?;
    unit_peak(&xs, &mut target, |w| mhom_response(&ensemble.packets, params, Freq(w)))?;
    let base = SystemParams {
        omega_fq: params.omega_fq,
        omega_nv: ensemble.spec.omega_nv,
        g: fixed.g,
        j: fixed.j,
        theta: 0.0,
        gamma_fq: fixed.gamma_fq,
        gamma_b: Freq::ZERO,
        gamma_d: Freq::ZERO,
        lambda: Freq(1.0),
    };
    base.validate()?;
    let problem = GammaProblem { base, xs: &xs, target };
    let out = levenberg_marquardt(&problem, &[start.0 .0.ln(), start.1 .0.ln()], &LmOptions::default())?;
    if !out.converged {
        return Err(Error::NotConverged { iterations: out.iterations });
    }
    let (gamma_b, gamma_d) = (out.params[0].exp(), out.params[1].exp());
    if let Some(&g) = [gamma_b, gamma_d].iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::NonPositiveGamma { gamma: g });
    }
    Ok(GammaFit {
        gamma_b: Freq(gamma_b),
        gamma_d: Freq(gamma_d),
        residual_norm: out.residual_norm,
        iterations: out.iterations,
    })
}

fn default_deltas() -> Vec<f64> {
    vec![2.0, 4.0, 6.0, 8.0, 10.0]
}

/// Inputs of [`run_pipeline`] beyond the ensemble itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub t1_us: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Homogeneous linewidth of each packet's bright and dark oscillator;
    /// defaults to the ensemble's zero-field-splitting width.
    #[serde(default)]
    pub packet_gamma: Option<Freq>,
    /// Grid for locating the side peaks; defaults to ω_NV ± 40 with 4001 points.
    #[serde(default)]
    pub survey_grid: Option<FrequencyGrid>,
    /// Grid for the linewidth fit; defaults to the survey grid.
    #[serde(default)]
    pub fit_grid: Option<FrequencyGrid>,
    #[serde(default)]
    pub search: MiddlePeakSearch,
}

impl PipelineConfig {
    pub fn new(t1_us: f64) -> Self {
        PipelineConfig {
            t1_us,
            deltas: default_deltas(),
            packet_gamma: None,
            survey_grid: None,
            fit_grid: None,
            search: MiddlePeakSearch::default(),
        }
    }

    pub fn survey_grid_for(&self, spec: &EnsembleSpec) -> Result<FrequencyGrid> {
        match self.survey_grid {
            Some(g) => Ok(g),
            None => FrequencyGrid::centered(spec.omega_nv, 40.0, 4001),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Intermediate {
    pub separation: Freq,
    pub ratio: f64,
    pub slope_fit_residual: f64,
    pub gamma_fit_residual: f64,
    pub shifts: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub n_packets: usize,
    pub t1_us: f64,
    pub packet_gamma: Freq,
    pub deltas: Vec<f64>,
    pub survey_grid: FrequencyGrid,
    pub fit_grid: FrequencyGrid,
    pub search: MiddlePeakSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineResult {
    pub g: Freq,
    pub j: Freq,
    pub gamma_fq: Freq,
    pub gamma_b: Freq,
    pub gamma_d: Freq,
    pub intermediate: Intermediate,
    pub provenance: Provenance,
}

impl PipelineResult {
    /// Resonant effective parameters with the given drive amplitude.
    pub fn system_params(&self, omega_nv: Freq, lambda: Freq) -> SystemParams {
        SystemParams {
            omega_fq: omega_nv,
            omega_nv,
            g: self.g,
            j: self.j,
            theta: 0.0,
            gamma_fq: self.gamma_fq,
            gamma_b: self.gamma_b,
            gamma_d: self.gamma_d,
            lambda,
        }
    }
}

/// Qubit decay, side-peak separation, middle-peak slope, (g, J), then (Γ_b, Γ_d).
pub fn run_pipeline(spec: &EnsembleSpec, config: &PipelineConfig) -> Result<PipelineResult> {
    let gamma_fq = gamma_fq_from_t1(config.t1_us).map_err(Error::stage(PipelineStage::QubitDecay))?;
    let ensemble = SampledEnsemble::sample(spec).map_err(Error::stage(PipelineStage::Sampling))?;
    let survey_grid = config.survey_grid_for(spec).map_err(Error::stage(PipelineStage::Sampling))?;
    let fit_grid = config.fit_grid.unwrap_or(survey_grid);
    let packet_gamma = config.packet_gamma.unwrap_or(spec.fwhm_zfs);
    let params = MhomParams {
        omega_fq: spec.omega_nv,
        gamma_fq,
        gamma_b: packet_gamma,
        gamma_d: packet_gamma,
        lambda: Freq(1.0),
    };

    let separation =
        estimate_separation(&ensemble, &params, &survey_grid).map_err(Error::stage(PipelineStage::Separation))?;
    let ratio = estimate_ratio(&ensemble, &params, &config.deltas, &config.search)
        .map_err(Error::stage(PipelineStage::Ratio))?;
    let (g, j) = solve_g_j(separation, ratio.ratio).map_err(Error::stage(PipelineStage::Coupling))?;
    let fixed = FixedCouplings { g, j, gamma_fq };
    let fit = fit_gammas(&ensemble, &params, &fixed, &fit_grid).map_err(Error::stage(PipelineStage::Gammas))?;

    Ok(PipelineResult {
        g,
        j,
        gamma_fq,
        gamma_b: fit.gamma_b,
        gamma_d: fit.gamma_d,
        intermediate: Intermediate {
            separation,
            ratio: ratio.ratio,
            slope_fit_residual: ratio.rms_residual,
            gamma_fit_residual: fit.residual_norm,
            shifts: ratio.shifts,
        },
        provenance: Provenance {
            seed: spec.seed,
            n_packets: spec.n_packets,
            t1_us: config.t1_us,
            packet_gamma,
            deltas: config.deltas.clone(),
            survey_grid,
            fit_grid,
            search: config.search,
        },
    })
}
