// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::PipelineConfig;
use crate::master_eq::HilbertLayout;
use crate::mhom::EnsembleSpec;
use crate::units::{lambda_from_dbm, Freq, FrequencyGrid, ModelTag, SignalMap, SystemParams};

/// User-supplied λ(P) calibration, λ = λ_ref · 10^((P − P_ref)/20).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveCalibration {
    pub lambda_ref: Freq,
    pub p_ref_dbm: f64,
}

impl DriveCalibration {
    pub fn lambda_at(&self, p_dbm: f64) -> Freq {
        lambda_from_dbm(self.lambda_ref, self.p_ref_dbm, p_dbm)
    }
}

/// Every section is optional; commands ask for the ones they need.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: Option<SystemParams>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub grid: Option<FrequencyGrid>,
    #[serde(default)]
    pub model: Option<ModelTag>,
    #[serde(default)]
    pub me_options: Option<HilbertLayout>,
    #[serde(default)]
    pub signal_map: Option<SignalMap>,
    #[serde(default)]
    pub drive_calibration: Option<DriveCalibration>,
    #[serde(default)]
    pub estimate: Option<PipelineConfig>,
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing section `{section}`"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let tag = |section: &'static str| move |e: Error| Error::Config(format!("{section}: {e}"));
        if let Some(s) = &self.system {
            s.validate().map_err(tag("system"))?;
        }
        if let Some(e) = &self.ensemble {
            e.validate().map_err(tag("ensemble"))?;
        }
        if let Some(l) = &self.me_options {
            HilbertLayout::new(l.n_max_bright, l.n_max_dark).map_err(tag("me_options"))?;
        }
        if let Some(m) = &self.signal_map {
            m.validate().map_err(tag("signal_map"))?;
        }
        if let Some(c) = &self.drive_calibration {
            if !(c.lambda_ref.0 > 0.0) || !c.lambda_ref.is_finite() || !c.p_ref_dbm.is_finite() {
                return Err(Error::Config("drive_calibration: lambda_ref must be positive and p_ref finite".into()));
            }
        }
        if let Some(p) = &self.estimate {
            if !(p.t1_us > 0.0) {
                return Err(Error::Config(format!("estimate: t1_us must be positive, got {}", p.t1_us)));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<&SystemParams> {
        self.system.as_ref().ok_or_else(|| missing("system"))
    }

    pub fn ensemble(&self) -> Result<&EnsembleSpec> {
        self.ensemble.as_ref().ok_or_else(|| missing("ensemble"))
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        self.grid.ok_or_else(|| missing("grid"))
    }

    pub fn model(&self) -> ModelTag {
        self.model.unwrap_or(ModelTag::Thom)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.me_options.unwrap_or_default()
    }

    pub fn estimate(&self) -> Result<&PipelineConfig> {
        self.estimate.as_ref().ok_or_else(|| missing("estimate"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{
        "system": {"omega_fq": 2878.0, "omega_nv": 2878.0, "g": 12.95, "j": 3.46,
                   "gamma_fq": 0.3, "gamma_b": 6.433, "gamma_d": 0.493, "lambda": 1.0},
        "grid": {"start_mhz": 2848.0, "stop_mhz": 2908.0, "n_points": 601},
        "model": "me",
        "me_options": {"n_max_bright": 3, "n_max_dark": 3},
        "signal_map": {"scale": 1.0, "offset": 1.0}
    }"#;

    #[test]
    fn full_config_parses() {
        let c = RunConfig::from_json(FULL).unwrap();
        assert_eq!(*c.system().unwrap(), SystemParams::reference_device());
        assert_eq!(c.grid().unwrap().n_points(), 601);
        assert_eq!(c.model(), ModelTag::Me);
        assert_eq!(c.layout(), HilbertLayout::uniform(3).unwrap());
        assert!(c.ensemble().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"sytem": {}}"#,
            r#"{"grid": {"start_mhz": 0, "stop_mhz": 1, "n_points": 3, "step": 1}}"#,
            r#"{"system": {"omega_fq": 1, "omega_nv": 1, "g": 1, "j": 1, "gamma_fq": 0,
                "gamma_b": 0, "gamma_d": 0, "lambda": 1, "kappa": 2}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn missing_system_field_rejected() {
        let text = FULL.replace(r#""g": 12.95, "#, "");
        let e = RunConfig::from_json(&text).unwrap_err();
        assert!(e.to_string().contains("`g`"), "{e}");
        assert!(e.is_config());
    }

    #[test]
    fn invalid_values_rejected_on_load() {
        let negative = FULL.replace(r#""gamma_d": 0.493"#, r#""gamma_d": -0.493"#);
        assert!(RunConfig::from_json(&negative).is_err());
        let inverted = FULL.replace(r#""start_mhz": 2848.0"#, r#""start_mhz": 2948.0"#);
        assert!(RunConfig::from_json(&inverted).is_err());
        let layout = FULL.replace(r#""n_max_dark": 3"#, r#""n_max_dark": 0"#);
        assert!(RunConfig::from_json(&layout).is_err());
        let map = FULL.replace(r#""scale": 1.0"#, r#""scale": -1.0"#);
        assert!(RunConfig::from_json(&map).is_err());
    }

    #[test]
    fn drive_calibration_hook() {
        let c = DriveCalibration { lambda_ref: Freq(2.0), p_ref_dbm: -20.0 };
        assert!((c.lambda_at(-20.0).0 - 2.0).abs() < 1e-15);
        assert!((c.lambda_at(0.0).0 - 20.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::from_json(FULL).unwrap();
        let again = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
