// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Many-harmonic-oscillator model: an inhomogeneous NV ensemble sampled as
//! independent bright/dark oscillator pairs, each coupled to the qubit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{golden_max, local_maxima, pairwise_sum, prominence, refine_tol};
use crate::units::{
    check_finite, check_non_negative, Freq, FrequencyGrid, ModelTag, ParamsSnapshot, Spectrum, SystemParams,
};

type C = Complex64;

/// FWHM of a Gaussian divided by its standard deviation.
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineShape {
    #[default]
    Gaussian,
    /// Cauchy distribution with half width FWHM/2.
    Lorentzian,
}

/// Statistical description of the ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_packets: usize,
    pub mean_zeeman: Freq,
    pub fwhm_zeeman: Freq,
    pub fwhm_strain: Freq,
    /// Zero-field-splitting spread; also the default homogeneous NV linewidth.
    pub fwhm_zfs: Freq,
    pub collective_g: Freq,
    pub omega_nv: Freq,
    pub seed: u64,
    #[serde(default)]
    pub line_shape: LineShape,
}

impl EnsembleSpec {
    /// The measured sample: 36000 packets, Zeeman 28 ± 3.1, strain 4.4, zfs 0.2.
    pub fn reference() -> Self {
        EnsembleSpec {
            n_packets: 36_000,
            mean_zeeman: Freq(28.0),
            fwhm_zeeman: Freq(3.1),
            fwhm_strain: Freq(4.4),
            fwhm_zfs: Freq(0.2),
            collective_g: Freq(13.0),
            omega_nv: Freq(2878.0),
            seed: 1,
            line_shape: LineShape::Gaussian,
        }
    }

    /// [`EnsembleSpec::reference`] with a zero-mean Zeeman distribution.
    pub fn reference_zero_mean() -> Self {
        EnsembleSpec { mean_zeeman: Freq::ZERO, ..Self::reference() }
    }

    /// Zero-width ensemble equivalent to a single bright/dark pair with coupling `j`.
    pub fn homogeneous(n_packets: usize, collective_g: Freq, j: Freq, omega_nv: Freq) -> Self {
        EnsembleSpec {
            n_packets,
            mean_zeeman: j,
            fwhm_zeeman: Freq::ZERO,
            fwhm_strain: Freq::ZERO,
            fwhm_zfs: Freq::ZERO,
            collective_g,
            omega_nv,
            seed: 0,
            line_shape: LineShape::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_packets == 0 {
            return Err(Error::InvalidParameter("n_packets must be >= 1".into()));
        }
        check_finite("mean_zeeman", self.mean_zeeman.0)?;
        check_non_negative("fwhm_zeeman", self.fwhm_zeeman.0)?;
        check_non_negative("fwhm_strain", self.fwhm_strain.0)?;
        check_non_negative("fwhm_zfs", self.fwhm_zfs.0)?;
        check_non_negative("omega_nv", self.omega_nv.0)?;
        check_finite("collective_g", self.collective_g.0)?;
        if self.collective_g.0 <= 0.0 {
            return Err(Error::InvalidParameter("collective_g must be > 0".into()));
        }
        Ok(())
    }
}

/// One sampled bright/dark oscillator pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePacket {
    pub zeta: Freq,
    pub omega_b: Freq,
    pub omega_d: Freq,
    pub j_zeeman: Freq,
    pub j_strain: Freq,
}

/// A spec together with its sampled packets.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledEnsemble {
    pub spec: EnsembleSpec,
    pub packets: Vec<EnsemblePacket>,
}

impl SampledEnsemble {
    pub fn sample(spec: &EnsembleSpec) -> Result<Self> {
        Ok(SampledEnsemble { spec: *spec, packets: sample_ensemble(spec)? })
    }
}

enum Spread {
    Normal(Normal<f64>),
    Cauchy(Cauchy<f64>),
    Fixed(f64),
}

impl Spread {
    fn new(shape: LineShape, center: f64, fwhm: f64) -> Result<Self> {
        if fwhm == 0.0 {
            return Ok(Spread::Fixed(center));
        }
        let bad = |e: String| Error::InvalidParameter(e);
        Ok(match shape {
            LineShape::Gaussian => Spread::Normal(
                Normal::new(center, fwhm / GAUSSIAN_FWHM_PER_SIGMA).map_err(|e| bad(e.to_string()))?,
            ),
            LineShape::Lorentzian => {
                Spread::Cauchy(Cauchy::new(center, fwhm / 2.0).map_err(|e| bad(e.to_string()))?)
            }
        })
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> f64 {
        match self {
            Spread::Normal(d) => d.sample(rng),
            Spread::Cauchy(d) => d.sample(rng),
            Spread::Fixed(v) => *v,
        }
    }
}

/// Draw `n_packets` packets; deterministic in `spec.seed`.
///
/// Per packet the draws are, in order: D, E1, E2, J.
pub fn sample_ensemble(spec: &EnsembleSpec) -> Result<Vec<EnsemblePacket>> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let zfs = Spread::new(spec.line_shape, spec.omega_nv.0, spec.fwhm_zfs.0)?;
    let strain = Spread::new(spec.line_shape, 0.0, spec.fwhm_strain.0)?;
    let zeeman = Spread::new(spec.line_shape, spec.mean_zeeman.0, spec.fwhm_zeeman.0)?;
    let zeta = Freq(spec.collective_g.0 / (spec.n_packets as f64).sqrt());
    Ok((0..spec.n_packets)
        .map(|_| {
            let d = zfs.draw(&mut rng);
            let e1 = strain.draw(&mut rng);
            let e2 = strain.draw(&mut rng);
            let jz = zeeman.draw(&mut rng);
            EnsemblePacket {
                zeta,
                omega_b: Freq(d - e1),
                omega_d: Freq(d + e1),
                j_zeeman: Freq(jz),
                j_strain: Freq(e2),
            }
        })
        .collect())
}

/// Qubit-side parameters of the ensemble model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhomParams {
    pub omega_fq: Freq,
    pub gamma_fq: Freq,
    pub gamma_b: Freq,
    pub gamma_d: Freq,
    pub lambda: Freq,
}

impl MhomParams {
    pub fn from_system(p: &SystemParams) -> Self {
        MhomParams {
            omega_fq: p.omega_fq,
            gamma_fq: p.gamma_fq,
            gamma_b: p.gamma_b,
            gamma_d: p.gamma_d,
            lambda: p.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("omega_fq", self.omega_fq.0)?;
        check_non_negative("gamma_fq", self.gamma_fq.0)?;
        check_non_negative("gamma_b", self.gamma_b.0)?;
        check_non_negative("gamma_d", self.gamma_d.0)?;
        check_non_negative("lambda", self.lambda.0)
    }
}

const DIVERGENCE_FLOOR: f64 = 1e-300;

/// Complex qubit amplitude ĉ of the ensemble model.
pub fn mhom_amplitude(packets: &[EnsemblePacket], params: &MhomParams, omega: Freq) -> Result<C> {
    if packets.is_empty() {
        return Err(Error::InvalidParameter("ensemble has no packets".into()));
    }
    let w = omega.0;
    let i = C::i();
    let self_energy = pairwise_sum(packets.len(), &|k| {
        let p = &packets[k];
        let dark = C::new(w - p.omega_d.0, params.gamma_d.0);
        let bright = C::new(w - p.omega_b.0, params.gamma_b.0);
        let k2 = p.j_zeeman.0 * p.j_zeeman.0 + p.j_strain.0 * p.j_strain.0;
        dark * (p.zeta.0 * p.zeta.0) / (bright * dark - k2)
    });
    let den = C::new(w - params.omega_fq.0, 0.0) + i * params.gamma_fq.0 - self_energy;
    if !den.re.is_finite() || !den.im.is_finite() || den.norm() < DIVERGENCE_FLOOR {
        return Err(Error::DivergentResponse { omega: w });
    }
    Ok(C::new(0.5 * params.lambda.0, 0.0) / den)
}

/// Qubit excitation |ĉ|² at drive frequency `omega`.
pub fn mhom_response(packets: &[EnsemblePacket], params: &MhomParams, omega: Freq) -> Result<f64> {
    mhom_amplitude(packets, params, omega).map(|c| c.norm_sqr())
}

pub(crate) fn mhom_values(packets: &[EnsemblePacket], params: &MhomParams, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas.par_iter().map(|&w| mhom_response(packets, params, Freq(w))).collect()
}

/// Ensemble response on every grid point.
pub fn mhom_spectrum(ensemble: &SampledEnsemble, params: &MhomParams, grid: &FrequencyGrid) -> Result<Spectrum> {
    params.validate()?;
    let values = mhom_values(&ensemble.packets, params, &grid.points())?;
    Spectrum::new(
        *grid,
        values,
        ModelTag::Mhom,
        ParamsSnapshot::Ensemble { spec: ensemble.spec, params: *params },
    )
}

/// Where to look for the middle peak relative to `omega_nv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiddlePeakSearch {
    /// Scan half width at zero detuning; widened by |δ|/4.
    pub half_width: f64,
    pub step: f64,
}

impl Default for MiddlePeakSearch {
    fn default() -> Self {
        MiddlePeakSearch { half_width: 3.0, step: 0.01 }
    }
}

/// Most prominent maximum of the ensemble response near `omega_nv`.
pub fn mhom_middle_peak(
    packets: &[EnsemblePacket],
    params: &MhomParams,
    omega_nv: Freq,
    half_width: f64,
    step: f64,
) -> Result<Freq> {
    if !(half_width > 0.0 && step > 0.0 && step < half_width) {
        return Err(Error::InvalidParameter("middle-peak search needs 0 < step < half_width".into()));
    }
    let n = (2.0 * half_width / step).round() as usize + 1;
    let grid = FrequencyGrid::centered(omega_nv, half_width, n)?;
    let xs = grid.points();
    let ys = mhom_values(packets, params, &xs)?;
    let best = local_maxima(&ys)
        .into_iter()
        .map(|i| (i, prominence(&ys, i)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::PeaksNotResolved { expected: 1, found: 0 })?;
    let h = grid.step();
    let tol = refine_tol(xs[best.0], h);
    let (x, _) = golden_max(xs[best.0] - h, xs[best.0] + h, tol, |w| mhom_response(packets, params, Freq(w)))?;
    Ok(Freq(x))
}

/// Middle-peak shift ω_middle − ω_NV for each qubit detuning δ.
///
/// Each δ must satisfy |δ| ≤ collective_g.
pub fn mhom_middle_peak_shift(
    ensemble: &SampledEnsemble,
    params: &MhomParams,
    deltas: &[f64],
    search: &MiddlePeakSearch,
) -> Result<Vec<(f64, f64)>> {
    let w0 = ensemble.spec.omega_nv;
    let limit = ensemble.spec.collective_g.0;
    deltas
        .iter()
        .map(|&d| {
            if !d.is_finite() || d.abs() > limit {
                return Err(Error::PerturbationOutOfRange { delta: d, limit });
            }
            let p = MhomParams { omega_fq: w0 + Freq(d), ..*params };
            let hw = search.half_width + 0.25 * d.abs();
            let peak = mhom_middle_peak(&ensemble.packets, &p, w0, hw, search.step)?;
            Ok((d, (peak - w0).0))
        })
        .collect()
}

/// Least-squares slope through the origin, with the RMS residual.
pub fn slope_through_origin(points: &[(f64, f64)]) -> (f64, f64) {
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rms = (points.iter().map(|p| (p.1 - slope * p.0).powi(2)).sum::<f64>() / points.len().max(1) as f64).sqrt();
    (slope, rms)
}
