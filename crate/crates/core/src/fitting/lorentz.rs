// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use crate::error::{Error, Result};
use crate::units::{Freq, Spectrum};

/// Parameters of a·γ²/((ω−ω′)² + γ²) + c.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams {
    pub a: f64,
    pub gamma: Freq,
    pub omega_center: Freq,
    pub c: f64,
}

/// Lorentzian with half width at half maximum `gamma`.
///
/// ```
/// use fqnv::fitting::{lorentzian_model, LorentzianParams};
/// use fqnv::units::Freq;
/// let p = LorentzianParams { a: 1.0, gamma: Freq(0.5), omega_center: Freq(0.0), c: 0.0 };
/// assert!((lorentzian_model(&p, Freq(1.5)).unwrap() - 0.1).abs() < 1e-15);
/// ```
pub fn lorentzian_model(theta: &LorentzianParams, omega: Freq) -> Result<f64> {
    let g = theta.gamma.0;
    if !(g > 0.0) {
        return Err(Error::NonPositiveGamma { gamma: g });
    }
    let t = omega.0 - theta.omega_center.0;
    Ok(theta.a * g * g / (t * t + g * g) + theta.c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LorentzianFitResult {
    pub a: f64,
    /// Half width at half maximum.
    pub gamma: Freq,
    pub omega_center: Freq,
    pub c: f64,
    pub residual_norm: f64,
    pub fwhm: Freq,
    pub converged: bool,
    pub n_iterations: usize,
}

impl LorentzianFitResult {
    pub fn params(&self) -> LorentzianParams {
        LorentzianParams { a: self.a, gamma: self.gamma, omega_center: self.omega_center, c: self.c }
    }
}

pub const MIN_FIT_POINTS: usize = 8;

struct LorentzProblem<'a> {
    t: &'a [f64],
    y: &'a [f64],
}

// Parameters: [a, γ, u, c] with ω′ = x_ref + u. Only γ² enters, so γ may change sign freely.
impl LeastSquares for LorentzProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        let g2 = p[1] * p[1];
        for (o, (&t, &y)) in out.iter_mut().zip(self.t.iter().zip(self.y)) {
            let s = t - p[2];
            *o = p[0] * g2 / (s * s + g2) + p[3] - y;
        }
        Ok(())
    }

    fn jacobian(&self, p: &[f64], jac: &mut [f64]) -> Result<()> {
        let m = self.t.len();
        let g2 = p[1] * p[1];
        for (i, &t) in self.t.iter().enumerate() {
            let s = t - p[2];
            let den = s * s + g2;
            jac[i] = g2 / den;
            jac[m + i] = 2.0 * p[0] * p[1] * s * s / (den * den);
            jac[2 * m + i] = 2.0 * p[0] * g2 * s / (den * den);
            jac[3 * m + i] = 1.0;
        }
        Ok(())
    }
}

/// Half width at the half-maximum crossing, linearly interpolated on each side.
fn hwhm_guess(x: &[f64], y: &[f64], imax: usize, base: f64) -> f64 {
    let half = 0.5 * (y[imax] + base);
    let mut widths = Vec::new();
    if let Some(k) = (0..imax).rev().find(|&k| y[k] <= half) {
        let f = (y[k + 1] - half) / (y[k + 1] - y[k]);
        widths.push(x[imax] - (x[k + 1] - f * (x[k + 1] - x[k])));
    }
    if let Some(k) = (imax + 1..y.len()).find(|&k| y[k] <= half) {
        let f = (y[k - 1] - half) / (y[k - 1] - y[k]);
        widths.push(x[k - 1] + f * (x[k] - x[k - 1]) - x[imax]);
    }
    if widths.is_empty() {
        0.25 * (x[x.len() - 1] - x[0])
    } else {
        widths.iter().sum::<f64>() / widths.len() as f64
    }
}

/// Fit a Lorentzian to sample points.
pub fn fit_lorentzian_points(x: &[f64], y: &[f64]) -> Result<LorentzianFitResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("x and y lengths differ".into()));
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { found: x.len(), needed: MIN_FIT_POINTS });
    }
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("fit data must be finite".into()));
    }
    let imax = (0..y.len()).max_by(|&i, &j| y[i].total_cmp(&y[j])).unwrap_or(0);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    if imax == 0 || imax + 1 == y.len() || y[imax] == ymin {
        return Err(Error::NoInteriorPeak);
    }
    let x_ref = x[imax];
    let t: Vec<f64> = x.iter().map(|v| v - x_ref).collect();
    let p0 = [y[imax] - ymin, hwhm_guess(x, y, imax, ymin), 0.0, ymin];
    let out = levenberg_marquardt(&LorentzProblem { t: &t, y }, &p0, &LmOptions::default())?;
    let gamma = out.params[1].abs();
    if out.converged && !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma { gamma });
    }
    Ok(LorentzianFitResult {
        a: out.params[0],
        gamma: Freq(gamma),
        omega_center: Freq(x_ref + out.params[2]),
        c: out.params[3],
        residual_norm: out.residual_norm,
        fwhm: Freq(2.0 * gamma),
        converged: out.converged,
        n_iterations: out.iterations,
    })
}

/// Fit a Lorentzian to the spectrum points inside `window` (inclusive).
pub fn fit_lorentzian(spec: &Spectrum, window: (Freq, Freq)) -> Result<LorentzianFitResult> {
    let (x, y) = window_points(&spec.frequencies(), &spec.values, window);
    fit_lorentzian_points(&x, &y)
}

pub(crate) fn window_points(x: &[f64], y: &[f64], window: (Freq, Freq)) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (window.0 .0.min(window.1 .0), window.0 .0.max(window.1 .0));
    x.iter().zip(y).filter(|(w, _)| **w >= lo && **w <= hi).map(|(a, b)| (*a, *b)).unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(p: &LorentzianParams, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&w| lorentzian_model(p, Freq(w)).unwrap()).collect();
        (x, y)
    }

    fn truth() -> LorentzianParams {
        LorentzianParams { a: 0.07, gamma: Freq(0.6), omega_center: Freq(2878.13), c: 0.01 }
    }

    #[test]
    fn model_values() {
        let p = LorentzianParams { a: 2.0, gamma: Freq(0.3), omega_center: Freq(5.0), c: 0.5 };
        assert_eq!(lorentzian_model(&p, Freq(5.0)).unwrap(), 2.5);
        assert!((lorentzian_model(&p, Freq(5.3)).unwrap() - 1.5).abs() < 1e-15);
        assert!((lorentzian_model(&p, Freq(4.7)).unwrap() - 1.5).abs() < 1e-15);
        let bad = LorentzianParams { gamma: Freq(0.0), ..p };
        assert!(matches!(lorentzian_model(&bad, Freq(1.0)), Err(Error::NonPositiveGamma { .. })));
    }

    #[test]
    fn in_class_recovery() {
        let p = truth();
        let (x, y) = sample(&p, 2875.0, 2881.0, 61);
        let f = fit_lorentzian_points(&x, &y).unwrap();
        assert!(f.converged);
        assert!(f.residual_norm < 1e-12, "{}", f.residual_norm);
        assert!((f.a / p.a - 1.0).abs() < 1e-8);
        assert!((f.gamma.0 / p.gamma.0 - 1.0).abs() < 1e-8);
        assert!((f.c / p.c - 1.0).abs() < 1e-8);
        assert!((f.omega_center.0 - p.omega_center.0).abs() < 1e-8 * p.omega_center.0);
        assert_eq!(f.fwhm.0, 2.0 * f.gamma.0);
    }

    #[test]
    fn noisy_recovery_median_within_one_percent() {
        let p = truth();
        let (x, y) = sample(&p, 2875.0, 2881.0, 121);
        let noise = Normal::new(0.0, 0.01 * p.a).unwrap();
        let mut errs: Vec<f64> = (0..100)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let yn: Vec<f64> = y.iter().map(|v| v + noise.sample(&mut rng)).collect();
                let f = fit_lorentzian_points(&x, &yn).unwrap();
                (f.gamma.0 / p.gamma.0 - 1.0).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[50] < 0.01, "median {}", errs[50]);
    }

    #[test]
    fn vertical_scaling_and_translation_invariance() {
        let p = LorentzianParams { a: 1.0, gamma: Freq(0.8), omega_center: Freq(10.2), c: 0.0 };
        let (x, y) = sample(&p, 7.0, 13.0, 41);
        let y: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + 0.01 * ((i * 7) % 5) as f64).collect();
        let base = fit_lorentzian_points(&x, &y).unwrap();
        let s = 37.5;
        let ys: Vec<f64> = y.iter().map(|v| v * s).collect();
        let scaled = fit_lorentzian_points(&x, &ys).unwrap();
        assert!((scaled.a / (s * base.a) - 1.0).abs() < 1e-8);
        assert!((scaled.c / (s * base.c) - 1.0).abs() < 1e-8);
        assert!((scaled.gamma.0 / base.gamma.0 - 1.0).abs() < 1e-8);
        assert!((scaled.omega_center.0 - base.omega_center.0).abs() < 1e-8);
        let shift = 2871.0;
        let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let moved = fit_lorentzian_points(&xs, &y).unwrap();
        assert!((moved.gamma.0 / base.gamma.0 - 1.0).abs() < 1e-8);
        assert!((moved.omega_center.0 - shift - base.omega_center.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_edge_maximum_and_short_windows() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let rising: Vec<f64> = x.clone();
        assert!(matches!(fit_lorentzian_points(&x, &rising), Err(Error::NoInteriorPeak)));
        assert!(matches!(
            fit_lorentzian_points(&x[..5], &rising[..5]),
            Err(Error::InsufficientData { .. })
        ));
    }
}
