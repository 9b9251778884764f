// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Eigenstructure of the single-excitation block spanned by
//! (|0↑⟩, |B↓⟩, |D↓⟩): qubit excited, bright mode excited, dark mode excited.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{Freq, SystemParams};

type C = Complex64;

/// 3×3 Hermitian matrix in the basis (|0↑⟩, |B↓⟩, |D↓⟩).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleExcitationHamiltonian {
    pub matrix: [[C; 3]; 3],
}

impl SingleExcitationHamiltonian {
    /// Largest deviation from Hermiticity, max |H_ij - conj(H_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut err = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                err = err.max((m[i][j] - m[j][i].conj()).norm());
            }
        }
        err
    }

    pub fn to_mat(&self) -> Mat<C> {
        Mat::from_fn(3, 3, |i, j| self.matrix[i][j])
    }
}

/// Eigenvalues in ascending order with unit eigenvectors and qubit weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenResult {
    pub energies: [Freq; 3],
    /// `vectors[k]` is the eigenvector belonging to `energies[k]`.
    #[serde(skip)]
    pub vectors: [[C; 3]; 3],
    /// |⟨0↑|v_k⟩|², the spectroscopic visibility of each level.
    pub qubit_weights: [f64; 3],
}

impl EigenResult {
    fn from_vectors(energies: [f64; 3], mut vectors: [[C; 3]; 3]) -> Self {
        for v in vectors.iter_mut() {
            fix_phase(v);
        }
        let qubit_weights = [vectors[0][0].norm_sqr(), vectors[1][0].norm_sqr(), vectors[2][0].norm_sqr()];
        EigenResult { energies: energies.map(Freq), vectors, qubit_weights }
    }

    pub fn left(&self) -> Freq {
        self.energies[0]
    }

    pub fn middle(&self) -> Freq {
        self.energies[1]
    }

    pub fn right(&self) -> Freq {
        self.energies[2]
    }

    /// Largest |⟨v_i|v_j⟩ - δ_ij|.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let ip = inner(&self.vectors[i], &self.vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((ip - C::new(target, 0.0)).norm());
            }
        }
        err
    }
}

fn inner(a: &[C; 3], b: &[C; 3]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[C; 3]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotate `v` so that its largest-magnitude component is real and positive.
fn fix_phase(v: &mut [C; 3]) {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|x| x.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for x in v.iter_mut() {
        *x *= phase;
    }
    v[pivot] = C::new(v[pivot].norm(), 0.0);
}

/// Single-excitation Hamiltonian for qubit detuning `delta` from the ensemble.
pub fn build_h1(params: &SystemParams, delta: Freq) -> SingleExcitationHamiltonian {
    let w = params.omega_nv.0;
    let g = C::new(params.g.0, 0.0);
    let jc = C::from_polar(params.j.0, params.theta);
    let z = C::new(0.0, 0.0);
    let matrix = [
        [C::new(w + delta.0, 0.0), g, z],
        [g, C::new(w, 0.0), jc],
        [z, jc.conj(), C::new(w, 0.0)],
    ];
    SingleExcitationHamiltonian { matrix }
}

/// Resonant eigenvectors for θ = 0 in the order (left, middle, right).
fn resonant_vectors(g: f64, j: f64) -> [[f64; 3]; 3] {
    let s = g.hypot(j);
    if s == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        [r * g / s, -r, r * j / s],
        [-j / s, 0.0, g / s],
        [r * g / s, r, r * j / s],
    ]
}

/// Apply the gauge that carries θ = 0 eigenvectors to arbitrary θ.
fn gauge(v: [f64; 3], theta: f64) -> [C; 3] {
    [C::new(v[0], 0.0), C::new(v[1], 0.0), C::new(v[2], 0.0) * C::from_polar(1.0, -theta)]
}

/// Closed-form eigenstructure at δ = 0.
///
/// ```
/// use fqnv::eigen::eigen_exact_resonant;
/// use fqnv::units::{Freq, SystemParams};
/// let mut p = SystemParams::reference_device();
/// p.g = Freq(13.0);
/// p.j = Freq(3.5);
/// let e = eigen_exact_resonant(&p);
/// assert!((e.right().mhz() - e.left().mhz() - 2.0 * 13f64.hypot(3.5)).abs() < 1e-12);
/// assert!((e.qubit_weights[1] - 0.0676).abs() < 1e-4);
/// ```
pub fn eigen_exact_resonant(params: &SystemParams) -> EigenResult {
    let (g, j, w) = (params.g.0, params.j.0, params.omega_nv.0);
    let s = g.hypot(j);
    let vecs = resonant_vectors(g, j).map(|v| gauge(v, params.theta));
    EigenResult::from_vectors([w - s, w, w + s], vecs)
}

/// First-order perturbation theory in `delta` around the resonant solution.
///
/// Requires |δ| ≤ 0.5·√(g² + J²).
pub fn eigen_perturbative(params: &SystemParams, delta: Freq) -> Result<EigenResult> {
    let (g, j, w) = (params.g.0, params.j.0, params.omega_nv.0);
    let s = g.hypot(j);
    let d = delta.0;
    let limit = 0.5 * s;
    if !d.is_finite() || d.abs() > limit {
        return Err(Error::PerturbationOutOfRange { delta: d, limit });
    }
    if d == 0.0 {
        return Ok(eigen_exact_resonant(params));
    }

    let v0 = resonant_vectors(g, j);
    let e0 = [-s, 0.0, s];
    // The perturbation δ|0↑⟩⟨0↑| has matrix elements δ·c_k·c_n with c the qubit amplitude.
    let c = [v0[0][0], v0[1][0], v0[2][0]];
    let mut energies = [0.0; 3];
    let mut vecs = [[0.0; 3]; 3];
    for k in 0..3 {
        energies[k] = w + e0[k] + d * c[k] * c[k];
        let mut v = v0[k];
        for n in 0..3 {
            if n == k {
                continue;
            }
            let coef = d * c[k] * c[n] / (e0[k] - e0[n]);
            for (vi, bi) in v.iter_mut().zip(&v0[n]) {
                *vi += coef * bi;
            }
        }
        vecs[k] = v;
    }

    let mut out = vecs.map(|v| gauge(v, params.theta));
    for k in 0..3 {
        for m in 0..k {
            let proj = inner(&out[m], &out[k]);
            let basis = out[m];
            for (x, b) in out[k].iter_mut().zip(&basis) {
                *x -= proj * b;
            }
        }
        let n = norm(&out[k]);
        for x in out[k].iter_mut() {
            *x /= n;
        }
    }
    Ok(EigenResult::from_vectors(energies, out))
}

/// Dense Hermitian diagonalization of [`build_h1`].
pub fn eigen_numeric(params: &SystemParams, delta: Freq) -> Result<EigenResult> {
    let h = build_h1(params, delta).to_mat();
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverFailure(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut energies = [0.0; 3];
    let mut vecs = [[C::new(0.0, 0.0); 3]; 3];
    for k in 0..3 {
        energies[k] = s[k].re;
        for i in 0..3 {
            vecs[k][i] = u[(i, k)];
        }
    }
    Ok(EigenResult::from_vectors(energies, vecs))
}
