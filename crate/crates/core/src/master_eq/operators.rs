// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Freq, SystemParams};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Truncated Hilbert space qubit ⊗ bright ⊗ dark.
///
/// Basis index of |q, n_b, n_d⟩ is `(q·n_max_bright + n_b)·n_max_dark + n_d`,
/// qubit slowest. Qubit level 0 is |↓⟩ (ground), 1 is |↑⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertLayout {
    pub n_max_bright: usize,
    pub n_max_dark: usize,
}

impl Default for HilbertLayout {
    fn default() -> Self {
        HilbertLayout { n_max_bright: 4, n_max_dark: 4 }
    }
}

impl HilbertLayout {
    pub fn new(n_max_bright: usize, n_max_dark: usize) -> Result<Self> {
        if n_max_bright == 0 || n_max_dark == 0 {
            return Err(Error::InvalidParameter("Fock truncation must keep at least one level".into()));
        }
        Ok(HilbertLayout { n_max_bright, n_max_dark })
    }

    pub fn uniform(n_max: usize) -> Result<Self> {
        Self::new(n_max, n_max)
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max_bright * self.n_max_dark
    }

    pub fn index(&self, qubit: usize, bright: usize, dark: usize) -> usize {
        debug_assert!(qubit < 2 && bright < self.n_max_bright && dark < self.n_max_dark);
        (qubit * self.n_max_bright + bright) * self.n_max_dark + dark
    }

    /// Inverse of [`HilbertLayout::index`].
    pub fn decompose(&self, i: usize) -> (usize, usize, usize) {
        let dark = i % self.n_max_dark;
        let rest = i / self.n_max_dark;
        (rest / self.n_max_bright, rest % self.n_max_bright, dark)
    }

    /// Layout with one more Fock level in each mode.
    pub fn grown(&self) -> Self {
        HilbertLayout { n_max_bright: self.n_max_bright + 1, n_max_dark: self.n_max_dark + 1 }
    }
}

/// Dense operator on the layout's Hilbert space.
#[derive(Clone, Debug)]
pub struct OperatorMatrix(pub Mat<C>);

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.0[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        OperatorMatrix(self.0.adjoint().to_owned())
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn matmul(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

pub(crate) fn kron(a: &Mat<C>, b: &Mat<C>) -> Mat<C> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn identity(n: usize) -> Mat<C> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

fn annihilation(n: usize) -> Mat<C> {
    Mat::from_fn(n, n, |i, j| if j == i + 1 { C::new((j as f64).sqrt(), 0.0) } else { ZERO })
}

fn add_scaled(out: &mut Mat<C>, a: &Mat<C>, coef: C) {
    for j in 0..out.ncols() {
        for i in 0..out.nrows() {
            out[(i, j)] += coef * a[(i, j)];
        }
    }
}

/// Qubit and mode operators embedded in a layout.
pub struct LayoutOperators {
    pub sigma_minus: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
    pub sigma_x: OperatorMatrix,
    pub bright: OperatorMatrix,
    pub dark: OperatorMatrix,
}

impl LayoutOperators {
    pub fn new(layout: &HilbertLayout) -> Self {
        let (nb, nd) = (layout.n_max_bright, layout.n_max_dark);
        let id_b = identity(nb);
        let id_d = identity(nd);
        let id_q = identity(2);
        let on_qubit = |q: Mat<C>| OperatorMatrix(kron(&kron(&q, &id_b), &id_d));
        let sm = Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO });
        let sz = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => -ONE,
            (1, 1) => ONE,
            _ => ZERO,
        });
        let sx = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        LayoutOperators {
            sigma_minus: on_qubit(sm),
            sigma_z: on_qubit(sz),
            sigma_x: on_qubit(sx),
            bright: OperatorMatrix(kron(&kron(&id_q, &annihilation(nb)), &id_d)),
            dark: OperatorMatrix(kron(&kron(&id_q, &id_b), &annihilation(nd))),
        }
    }
}

/// Hamiltonian in the frame rotating at the drive frequency `omega`.
///
/// H = ½(ω_FQ−ω)σz + (ω_NV−ω)(b†b + d†d) + g(σ₊b + σ₋b†) + J(e^{iθ}b†d + e^{−iθ}bd†) + (λ/2)σx
pub fn build_rotating_hamiltonian(params: &SystemParams, omega: Freq, layout: &HilbertLayout) -> OperatorMatrix {
    let ops = LayoutOperators::new(layout);
    rotating_hamiltonian(params, omega, &ops)
}

pub(crate) fn rotating_hamiltonian(params: &SystemParams, omega: Freq, ops: &LayoutOperators) -> OperatorMatrix {
    let sm = &ops.sigma_minus.0;
    let sp = sm.adjoint().to_owned();
    let b = &ops.bright.0;
    let d = &ops.dark.0;
    let bd = b.adjoint().to_owned();
    let dd = d.adjoint().to_owned();
    let n = sm.nrows();
    let mut h = Mat::<C>::zeros(n, n);
    let re = |x: f64| C::new(x, 0.0);
    add_scaled(&mut h, &ops.sigma_z.0, re(0.5 * (params.omega_fq.0 - omega.0)));
    let detune_nv = re(params.omega_nv.0 - omega.0);
    add_scaled(&mut h, &(&bd * b), detune_nv);
    add_scaled(&mut h, &(&dd * d), detune_nv);
    add_scaled(&mut h, &(&sp * b), re(params.g.0));
    add_scaled(&mut h, &(sm * &bd), re(params.g.0));
    let phase = C::from_polar(params.j.0, params.theta);
    add_scaled(&mut h, &(&bd * d), phase);
    add_scaled(&mut h, &(b * &dd), phase.conj());
    add_scaled(&mut h, &ops.sigma_x.0, re(0.5 * params.lambda.0));
    OperatorMatrix(h)
}
