// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use crate::eigen::eigen_numeric;
use crate::numeric::{local_maxima, prominence};
use crate::units::{Freq, ParamsSnapshot, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakClass {
    Left,
    Middle,
    Right,
    Unclassified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub omega: Freq,
    pub height: f64,
    pub prominence: f64,
    pub class: PeakClass,
}

/// Peaks in increasing frequency order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PeakList(pub Vec<Peak>);

impl PeakList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn of_class(&self, class: PeakClass) -> Option<&Peak> {
        self.0.iter().find(|p| p.class == class)
    }

    /// Peak nearest to `omega`.
    pub fn nearest(&self, omega: Freq) -> Option<&Peak> {
        self.0.iter().min_by(|a, b| (a.omega.0 - omega.0).abs().total_cmp(&(b.omega.0 - omega.0).abs()))
    }
}

/// Default prominence threshold as a fraction of the global maximum.
pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.02;

/// Local maxima with prominence at least `min_prominence`.
///
/// With exactly three peaks they are labelled left/middle/right by matching
/// against the single-excitation eigenfrequencies when the spectrum carries
/// system parameters, otherwise by position.
pub fn find_peaks(spec: &Spectrum, min_prominence: f64) -> PeakList {
    let x = spec.frequencies();
    let y = &spec.values;
    let mut peaks: Vec<Peak> = local_maxima(y)
        .into_iter()
        .map(|i| (i, prominence(y, i)))
        .filter(|&(_, p)| p >= min_prominence)
        .map(|(i, p)| Peak { omega: Freq(x[i]), height: y[i], prominence: p, class: PeakClass::Unclassified })
        .collect();
    if peaks.len() == 3 {
        let order = match &spec.params {
            ParamsSnapshot::System(p) => eigen_numeric(p, p.detuning()).ok().and_then(|e| {
                let mut used = [false; 3];
                let mut labels = [0usize; 3];
                for (k, peak) in peaks.iter().enumerate() {
                    let j = (0..3).min_by(|&a, &b| {
                        (e.energies[a].0 - peak.omega.0).abs().total_cmp(&(e.energies[b].0 - peak.omega.0).abs())
                    })?;
                    if used[j] {
                        return None;
                    }
                    used[j] = true;
                    labels[k] = j;
                }
                Some(labels)
            }),
            ParamsSnapshot::Ensemble { .. } => None,
        }
        .unwrap_or([0, 1, 2]);
        for (peak, k) in peaks.iter_mut().zip(order) {
            peak.class = [PeakClass::Left, PeakClass::Middle, PeakClass::Right][k];
        }
    }
    PeakList(peaks)
}

/// [`find_peaks`] with the threshold at 2% of the spectrum maximum.
pub fn find_peaks_default(spec: &Spectrum) -> PeakList {
    find_peaks(spec, DEFAULT_PROMINENCE_FRACTION * spec.max_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thom::thom_spectrum;
    use crate::units::{FrequencyGrid, ModelTag, SystemParams};

    #[test]
    fn monotone_spectrum_has_no_peaks() {
        let grid = FrequencyGrid::new(Freq(0.0), Freq(1.0), 11).unwrap();
        let s = Spectrum::new(
            grid,
            (0..11).map(f64::from).collect(),
            ModelTag::Thom,
            ParamsSnapshot::System(SystemParams::reference_device()),
        )
        .unwrap();
        assert!(find_peaks(&s, 0.0).is_empty());
    }

    #[test]
    fn reference_device_three_classified_peaks() {
        let p = SystemParams::reference_device();
        let grid = FrequencyGrid::centered(p.omega_nv, 30.0, 1001).unwrap();
        let pk = find_peaks_default(&thom_spectrum(&p, &grid).unwrap());
        assert_eq!(pk.len(), 3);
        assert_eq!(pk.0.iter().map(|p| p.class).collect::<Vec<_>>(), vec![PeakClass::Left, PeakClass::Middle, PeakClass::Right]);
        assert!((pk.of_class(PeakClass::Middle).unwrap().omega.0 - 2878.0).abs() < 0.1);
    }

    #[test]
    fn decoupled_dark_mode_two_peaks() {
        let p = SystemParams { j: Freq(0.0), ..SystemParams::reference_device() };
        let grid = FrequencyGrid::centered(p.omega_nv, 30.0, 1001).unwrap();
        let pk = find_peaks_default(&thom_spectrum(&p, &grid).unwrap());
        assert_eq!(pk.len(), 2);
        assert!(pk.0.iter().all(|p| p.class == PeakClass::Unclassified));
    }
}
