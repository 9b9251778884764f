// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64;

use super::operators::{rotating_hamiltonian, HilbertLayout, LayoutOperators, OperatorMatrix};
use crate::units::{Freq, SystemParams};

type C = Complex64;

/// Lindblad generator acting on the column-stacked density matrix,
/// vec(ρ)[j·d + i] = ρ[i, j].
///
/// Stored as sorted, merged (row, col, value) entries; every diagonal entry is present.
#[derive(Clone, Debug)]
pub struct Superoperator {
    d: usize,
    entries: Vec<(usize, usize, C)>,
    diag_pos: Vec<usize>,
}

impl Superoperator {
    /// Dimension of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        self.d
    }

    /// Dimension of the superoperator, d².
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn entries(&self) -> &[(usize, usize, C)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Mat<C> {
        let n = self.dim();
        let mut m = Mat::<C>::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    pub fn apply(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::new(0.0, 0.0); self.dim()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |tr L(E_kl)| over matrix units E_kl; zero for a trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        let mut cols = vec![C::new(0.0, 0.0); self.dim()];
        for &(r, c, v) in &self.entries {
            if r % (self.d + 1) == 0 {
                cols[c] += v;
            }
        }
        cols.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Copy with `f(i, j)` added to the diagonal entry acting on ρ[i, j].
    pub(crate) fn with_diagonal(&self, f: impl Fn(usize, usize) -> C) -> Superoperator {
        let mut out = self.clone();
        for j in 0..self.d {
            for i in 0..self.d {
                out.entries[self.diag_pos[j * self.d + i]].2 += f(i, j);
            }
        }
        out
    }
}

#[derive(Default)]
struct Builder {
    d: usize,
    map: BTreeMap<(usize, usize), C>,
}

fn nonzeros(m: &Mat<C>) -> Vec<(usize, usize, C)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != C::new(0.0, 0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl Builder {
    fn new(d: usize) -> Self {
        let mut b = Builder { d, map: BTreeMap::new() };
        for k in 0..d * d {
            b.map.insert((k, k), C::new(0.0, 0.0));
        }
        b
    }

    fn add(&mut self, r: usize, c: usize, v: C) {
        *self.map.entry((r, c)).or_insert(C::new(0.0, 0.0)) += v;
    }

    /// ρ ↦ coef·Aρ
    fn left(&mut self, a: &Mat<C>, coef: C) {
        let d = self.d;
        for (i, k, v) in nonzeros(a) {
            for j in 0..d {
                self.add(j * d + i, j * d + k, coef * v);
            }
        }
    }

    /// ρ ↦ coef·ρB
    fn right(&mut self, b: &Mat<C>, coef: C) {
        let d = self.d;
        for (l, j, v) in nonzeros(b) {
            for i in 0..d {
                self.add(j * d + i, l * d + i, coef * v);
            }
        }
    }

    /// ρ ↦ coef·AρB
    fn sandwich(&mut self, a: &Mat<C>, b: &Mat<C>, coef: C) {
        let d = self.d;
        let nb = nonzeros(b);
        for (i, k, av) in nonzeros(a) {
            for &(l, j, bv) in &nb {
                self.add(j * d + i, l * d + k, coef * av * bv);
            }
        }
    }

    fn finish(self) -> Superoperator {
        let d = self.d;
        let entries: Vec<(usize, usize, C)> = self.map.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        let mut diag_pos = vec![0; d * d];
        for (pos, &(r, c, _)) in entries.iter().enumerate() {
            if r == c {
                diag_pos[r] = pos;
            }
        }
        Superoperator { d, entries, diag_pos }
    }
}

/// Liouvillian L(ρ) = −i[H, ρ] + Σ_c −Γ_c(c†cρ + ρc†c − 2cρc†) for
/// c ∈ {σ₋, b, d} with rates Γ_FQ, Γ_b, Γ_d.
pub fn build_liouvillian(h: &OperatorMatrix, params: &SystemParams, layout: &HilbertLayout) -> Superoperator {
    let ops = LayoutOperators::new(layout);
    liouvillian_from_ops(h, params, &ops)
}

fn liouvillian_from_ops(h: &OperatorMatrix, params: &SystemParams, ops: &LayoutOperators) -> Superoperator {
    let d = h.dim();
    let mut b = Builder::new(d);
    b.left(&h.0, C::new(0.0, -1.0));
    b.right(&h.0, C::new(0.0, 1.0));
    for (c, gamma) in [
        (&ops.sigma_minus, params.gamma_fq.0),
        (&ops.bright, params.gamma_b.0),
        (&ops.dark, params.gamma_d.0),
    ] {
        if gamma == 0.0 {
            continue;
        }
        let cd = c.0.adjoint().to_owned();
        let n = &cd * &c.0;
        b.left(&n, C::new(-gamma, 0.0));
        b.right(&n, C::new(-gamma, 0.0));
        b.sandwich(&c.0, &cd, C::new(2.0 * gamma, 0.0));
    }
    b.finish()
}

/// Liouvillian family over drive frequency with the ω-independent part built once.
///
/// Only the diagonal term i(ω − ω_ref)(N_i − N_j) depends on ω, where
/// N = ½σz + b†b + d†d.
#[derive(Clone, Debug)]
pub struct MeModel {
    params: SystemParams,
    layout: HilbertLayout,
    omega_ref: f64,
    base: Superoperator,
    number: Vec<f64>,
}

impl MeModel {
    pub fn new(params: &SystemParams, layout: &HilbertLayout) -> Self {
        let ops = LayoutOperators::new(layout);
        let omega_ref = params.omega_nv.0;
        let h = rotating_hamiltonian(params, Freq(omega_ref), &ops);
        let base = liouvillian_from_ops(&h, params, &ops);
        let number = (0..layout.dim())
            .map(|i| {
                let (q, nb, nd) = layout.decompose(i);
                (q as f64 - 0.5) + nb as f64 + nd as f64
            })
            .collect();
        MeModel { params: *params, layout: *layout, omega_ref, base, number }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn liouvillian(&self, omega: Freq) -> Superoperator {
        let dw = omega.0 - self.omega_ref;
        self.base.with_diagonal(|i, j| C::new(0.0, dw * (self.number[i] - self.number[j])))
    }
}
