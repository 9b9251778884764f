// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unit conventions, parameter records, frequency grids and spectra.
//!
//! Every frequency-like quantity (transition frequencies, couplings, decay
//! rates, detunings, drive amplitude) is stored as the scalar `x` of a value
//! written `x × 2π MHz`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mhom::{EnsembleSpec, MhomParams};

/// A frequency-like scalar in units of 2π MHz.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Freq(pub f64);

impl Freq {
    pub const ZERO: Freq = Freq(0.0);

    pub const fn new(mhz: f64) -> Self {
        Freq(mhz)
    }

    pub const fn mhz(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> Self {
        Freq(self.0.abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for Freq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} MHz", self.0)
    }
}

impl From<f64> for Freq {
    fn from(v: f64) -> Self {
        Freq(v)
    }
}

impl Add for Freq {
    type Output = Freq;
    fn add(self, rhs: Freq) -> Freq {
        Freq(self.0 + rhs.0)
    }
}

impl Sub for Freq {
    type Output = Freq;
    fn sub(self, rhs: Freq) -> Freq {
        Freq(self.0 - rhs.0)
    }
}

impl Neg for Freq {
    type Output = Freq;
    fn neg(self) -> Freq {
        Freq(-self.0)
    }
}

impl Mul<f64> for Freq {
    type Output = Freq;
    fn mul(self, rhs: f64) -> Freq {
        Freq(self.0 * rhs)
    }
}

impl Div<f64> for Freq {
    type Output = Freq;
    fn div(self, rhs: f64) -> Freq {
        Freq(self.0 / rhs)
    }
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn check_non_negative(name: &str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v < 0.0 {
        return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// Effective parameters of the qubit, bright mode and dark mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub omega_fq: Freq,
    pub omega_nv: Freq,
    pub g: Freq,
    pub j: Freq,
    #[serde(default)]
    pub theta: f64,
    pub gamma_fq: Freq,
    pub gamma_b: Freq,
    pub gamma_d: Freq,
    pub lambda: Freq,
}

impl SystemParams {
    /// Qubit-ensemble detuning `omega_fq - omega_nv`.
    pub fn detuning(&self) -> Freq {
        self.omega_fq - self.omega_nv
    }

    /// `sqrt(g^2 + J^2)`, half the resonant splitting.
    pub fn splitting_half(&self) -> f64 {
        self.g.0.hypot(self.j.0)
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma_fq.0.max(self.gamma_b.0).max(self.gamma_d.0)
    }

    pub fn with_lambda(mut self, lambda: Freq) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_detuning(mut self, delta: Freq) -> Self {
        self.omega_fq = self.omega_nv + delta;
        self
    }

    /// Effective parameters fitted to the measured device (resonant, weak drive).
    pub fn reference_device() -> Self {
        SystemParams {
            omega_fq: Freq(2878.0),
            omega_nv: Freq(2878.0),
            g: Freq(12.95),
            j: Freq(3.46),
            theta: 0.0,
            gamma_fq: Freq(0.300),
            gamma_b: Freq(6.433),
            gamma_d: Freq(0.493),
            lambda: Freq(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("omega_fq", self.omega_fq.0)?;
        check_non_negative("omega_nv", self.omega_nv.0)?;
        check_non_negative("g", self.g.0)?;
        check_non_negative("j", self.j.0)?;
        check_finite("theta", self.theta)?;
        check_non_negative("gamma_fq", self.gamma_fq.0)?;
        check_non_negative("gamma_b", self.gamma_b.0)?;
        check_non_negative("gamma_d", self.gamma_d.0)?;
        check_non_negative("lambda", self.lambda.0)
    }
}

/// Uniform, strictly increasing frequency grid including both end points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct FrequencyGrid {
    start: Freq,
    stop: Freq,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    start_mhz: f64,
    stop_mhz: f64,
    n_points: usize,
}

impl TryFrom<GridRepr> for FrequencyGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        FrequencyGrid::new(Freq(r.start_mhz), Freq(r.stop_mhz), r.n_points)
    }
}

impl From<FrequencyGrid> for GridRepr {
    fn from(g: FrequencyGrid) -> Self {
        GridRepr { start_mhz: g.start.0, stop_mhz: g.stop.0, n_points: g.n_points }
    }
}

impl FrequencyGrid {
    pub fn new(start: Freq, stop: Freq, n_points: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidGrid("end points must be finite".into()));
        }
        if start.0 >= stop.0 {
            return Err(Error::InvalidGrid(format!("start {start} must be below stop {stop}")));
        }
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n_points}")));
        }
        let grid = FrequencyGrid { start, stop, n_points };
        let pts = grid.points();
        if pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("spacing below floating-point resolution".into()));
        }
        Ok(grid)
    }

    /// Grid of `n_points` centred on `center` spanning `center ± half_width`.
    pub fn centered(center: Freq, half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(center - Freq(half_width), center + Freq(half_width), n_points)
    }

    pub fn start(&self) -> Freq {
        self.start
    }

    pub fn stop(&self) -> Freq {
        self.stop
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        (self.stop.0 - self.start.0) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.stop.0
        } else {
            self.start.0 + (self.stop.0 - self.start.0) * (i as f64 / (self.n_points - 1) as f64)
        }
    }

    /// Grid points in MHz.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

/// Evenly spaced grid points; first equals `start`, last equals `stop`.
///
/// ```
/// use fqnv::units::{linspace, Freq, FrequencyGrid};
/// let grid = FrequencyGrid::new(Freq(2868.0), Freq(2888.0), 3).unwrap();
/// let pts: Vec<f64> = linspace(&grid).iter().map(|f| f.mhz()).collect();
/// assert_eq!(pts, vec![2868.0, 2878.0, 2888.0]);
/// ```
pub fn linspace(grid: &FrequencyGrid) -> Vec<Freq> {
    grid.points().into_iter().map(Freq).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Thom,
    Mhom,
    Me,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Thom => "thom",
            ModelTag::Mhom => "mhom",
            ModelTag::Me => "me",
        })
    }
}

impl std::str::FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thom" => Ok(ModelTag::Thom),
            "mhom" => Ok(ModelTag::Mhom),
            "me" => Ok(ModelTag::Me),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// Parameters a spectrum was computed from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsSnapshot {
    System(SystemParams),
    Ensemble { spec: EnsembleSpec, params: MhomParams },
}

/// Affine map from excitation to switching probability, `offset - scale * v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalMap {
    pub scale: f64,
    pub offset: f64,
}

impl SignalMap {
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        let map = SignalMap { scale, offset };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("signal scale", self.scale)?;
        check_finite("signal offset", self.offset)
    }

    pub fn apply(&self, v: f64) -> f64 {
        self.offset - self.scale * v
    }

    /// Least-squares map taking `excitation` onto measured `switching` values.
    pub fn fit(excitation: &[f64], switching: &[f64]) -> Result<Self> {
        if excitation.len() != switching.len() || excitation.len() < 2 {
            return Err(Error::InvalidParameter(
                "signal map fit needs two equal-length series of at least 2 points".into(),
            ));
        }
        let n = excitation.len() as f64;
        let mx = excitation.iter().sum::<f64>() / n;
        let my = switching.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (&x, &y) in excitation.iter().zip(switching) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
        if sxx == 0.0 {
            return Err(Error::InvalidParameter("excitation series is constant".into()));
        }
        let slope = sxy / sxx;
        SignalMap::new(-slope, my - slope * mx)
    }
}

/// Excitation values on a grid, with the model and parameters that produced them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub model: ModelTag,
    pub params: ParamsSnapshot,
    pub signal: Option<SignalTrace>,
}

/// Switching-probability values derived from a spectrum through a [`SignalMap`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalTrace {
    pub map: SignalMap,
    pub values: Vec<f64>,
}

/// Roundoff below this magnitude in a non-negative quantity is flushed to zero.
const NEGATIVE_ROUNDOFF: f64 = 1e-10;

impl Spectrum {
    pub fn new(
        grid: FrequencyGrid,
        mut values: Vec<f64>,
        model: ModelTag,
        params: ParamsSnapshot,
    ) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -NEGATIVE_ROUNDOFF {
                return Err(Error::InvalidParameter(format!(
                    "spectrum value {v} at {} MHz is not a finite non-negative number",
                    grid.point(i)
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Spectrum { grid, values, model, params, signal: None })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Copy whose values are divided by the maximum.
    pub fn normalized(&self) -> Vec<f64> {
        let m = self.max_value();
        if m > 0.0 {
            self.values.iter().map(|v| v / m).collect()
        } else {
            self.values.clone()
        }
    }
}

/// Attach switching-probability values `offset - scale * excitation`.
///
/// ```
/// use fqnv::units::*;
/// let grid = FrequencyGrid::new(Freq(0.0), Freq(1.0), 2).unwrap();
/// let spec = Spectrum::new(
///     grid, vec![0.25, 0.0], ModelTag::Thom,
///     ParamsSnapshot::System(SystemParams::reference_device()),
/// ).unwrap();
/// let mapped = apply_signal_map(&spec, SignalMap::new(1.0, 1.0).unwrap());
/// assert_eq!(mapped.signal.unwrap().values, vec![0.75, 1.0]);
/// ```
pub fn apply_signal_map(spec: &Spectrum, map: SignalMap) -> Spectrum {
    let values = spec.values.iter().map(|&v| map.apply(v)).collect();
    let mut out = spec.clone();
    out.signal = Some(SignalTrace { map, values });
    out
}

/// Drive amplitude for a source power, `lambda_ref * 10^((p - p_ref) / 20)`.
///
/// No attenuation model is assumed; both reference values come from the user.
pub fn lambda_from_dbm(lambda_ref: Freq, p_ref_dbm: f64, p_dbm: f64) -> Freq {
    lambda_ref * 10f64.powf((p_dbm - p_ref_dbm) / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linspace_small_grids() {
        let g = FrequencyGrid::new(Freq(0.0), Freq(1.0), 2).unwrap();
        assert_eq!(g.points(), vec![0.0, 1.0]);
        let g = FrequencyGrid::centered(Freq(2878.0), 30.0, 601).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 601);
        assert_eq!(p[0], 2848.0);
        assert_eq!(p[600], 2908.0);
        assert!((g.step() - 0.1).abs() < 1e-12);
        for w in p.windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(FrequencyGrid::new(Freq(1.0), Freq(1.0), 5).is_err());
        assert!(FrequencyGrid::new(Freq(2.0), Freq(1.0), 5).is_err());
        assert!(FrequencyGrid::new(Freq(0.0), Freq(1.0), 1).is_err());
        assert!(FrequencyGrid::new(Freq(f64::NAN), Freq(1.0), 3).is_err());
        let bad: std::result::Result<FrequencyGrid, _> =
            serde_json::from_str(r#"{"start_mhz": 5, "stop_mhz": 1, "n_points": 3}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn constant_map_and_identity_map() {
        let m = SignalMap::new(0.0, 0.8).unwrap();
        assert_eq!(m.apply(123.0), 0.8);
        let m = SignalMap::new(1.0, 1.0).unwrap();
        assert_eq!(m.apply(0.25), 0.75);
        assert!(SignalMap::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn signal_map_fit_recovers_affine_map() {
        let x = [0.0, 0.1, 0.4, 0.9];
        let y: Vec<f64> = x.iter().map(|v| 0.7 - 0.5 * v).collect();
        let m = SignalMap::fit(&x, &y).unwrap();
        assert!((m.scale - 0.5).abs() < 1e-14);
        assert!((m.offset - 0.7).abs() < 1e-14);
    }

    #[test]
    fn spectrum_rejects_negative_and_flushes_roundoff() {
        let g = FrequencyGrid::new(Freq(0.0), Freq(1.0), 2).unwrap();
        let p = ParamsSnapshot::System(SystemParams::reference_device());
        assert!(Spectrum::new(g, vec![-0.1, 0.0], ModelTag::Me, p.clone()).is_err());
        assert!(Spectrum::new(g, vec![0.0], ModelTag::Me, p.clone()).is_err());
        let s = Spectrum::new(g, vec![-1e-14, 0.5], ModelTag::Me, p).unwrap();
        assert_eq!(s.values, vec![0.0, 0.5]);
    }

    #[test]
    fn dbm_hook() {
        let l = lambda_from_dbm(Freq(1.0), -30.0, -10.0);
        assert!((l.0 - 10.0).abs() < 1e-12);
        assert_eq!(lambda_from_dbm(Freq(2.5), -16.0, -16.0), Freq(2.5));
    }

    #[test]
    fn system_params_json_rejects_unknown_keys() {
        let mut v = serde_json::to_value(SystemParams::reference_device()).unwrap();
        v["bogus"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<SystemParams>(v).is_err());
    }

    proptest! {
        #[test]
        fn freq_serialization_round_trips_bitwise(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = serde_json::to_string(&Freq(x)).unwrap();
            let back: Freq = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.0.to_bits(), x.to_bits());
        }

        #[test]
        fn signal_map_is_affine(scale in 0.0..10.0f64, offset in -5.0..5.0f64,
                                v1 in 0.0..1.0f64, v2 in 0.0..1.0f64, a in 0.0..=1.0f64) {
            let m = SignalMap::new(scale, offset).unwrap();
            let lhs = m.apply(a * v1 + (1.0 - a) * v2);
            let rhs = a * m.apply(v1) + (1.0 - a) * m.apply(v2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn grid_points_strictly_increase(start in -1e4..1e4f64, width in 1e-3..1e3f64, n in 2usize..500) {
            let g = FrequencyGrid::new(Freq(start), Freq(start + width), n).unwrap();
            let p = g.points();
            prop_assert_eq!(p.len(), n);
            prop_assert_eq!(p[0], start);
            prop_assert_eq!(p[n - 1], start + width);
            prop_assert!(p.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
