// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::liouvillian::Superoperator;
use super::operators::HilbertLayout;
use crate::error::{Error, Result};

type C = Complex64;

/// Largest superoperator dimension solved with a dense LU factorization.
pub const DENSE_LIMIT: usize = 4096;

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const UNIQUENESS_TOL: f64 = 1e-10;

/// Density matrix over a [`HilbertLayout`].
#[derive(Clone, Debug)]
pub struct DensityMatrix(pub Mat<C>);

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.0[(i, j)]
    }

    /// Pure basis state |i⟩⟨i|.
    pub fn basis_state(dim: usize, i: usize) -> Self {
        DensityMatrix(Mat::from_fn(dim, dim, |r, c| if r == i && c == i { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) }))
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.0[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm_max()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = self
            .0
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::SolverFailure(format!("density-matrix eigenvalues: {e:?}")))?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn to_vec(&self) -> Vec<C> {
        let d = self.dim();
        (0..d * d).map(|k| self.0[(k % d, k / d)]).collect()
    }
}

/// Quality measures of one steady-state solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    /// |tr ρ − 1|.
    pub trace_error: f64,
    /// max |ρ − ρ†| of the solution before symmetrization.
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// ‖L vec ρ‖₂ / ‖L‖_F.
    pub residual: f64,
    /// Scaled residual of the best second kernel candidate; small means non-unique.
    pub uniqueness_residual: f64,
}

impl SolveDiagnostics {
    pub fn within_tolerances(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error < HERMITICITY_TOL
            && self.min_eigenvalue >= -POSITIVITY_TOL
            && self.residual < RESIDUAL_TOL
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub diagnostics: SolveDiagnostics,
}

enum Factor {
    Dense(faer::linalg::solvers::PartialPivLu<C>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, C>),
}

impl Factor {
    fn solve_in_place(&self, rhs: &mut Mat<C>) {
        match self {
            Factor::Dense(lu) => lu.solve_in_place(rhs.as_mut()),
            Factor::Sparse(lu) => lu.solve_in_place(rhs.as_mut()),
        }
    }
}

/// Superoperator with the first row replaced by the trace functional.
fn constrained(l: &Superoperator) -> Vec<(usize, usize, C)> {
    let d = l.hilbert_dim();
    let mut rows: Vec<(usize, usize, C)> = l.entries().iter().copied().filter(|e| e.0 != 0).collect();
    rows.extend((0..d).map(|i| (0, i * (d + 1), C::new(1.0, 0.0))));
    rows
}

fn factor(n: usize, entries: &[(usize, usize, C)]) -> Result<Factor> {
    if n <= DENSE_LIMIT {
        let mut a = Mat::<C>::zeros(n, n);
        for &(r, c, v) in entries {
            a[(r, c)] += v;
        }
        Ok(Factor::Dense(a.partial_piv_lu()))
    } else {
        let trip: Vec<Triplet<usize, usize, C>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, C>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::SolverFailure(format!("sparse assembly: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::SolverFailure(format!("sparse LU: {e:?}")))?;
        Ok(Factor::Sparse(lu))
    }
}

fn apply(entries: &[(usize, usize, C)], x: &[C]) -> Vec<C> {
    let mut y = vec![C::new(0.0, 0.0); x.len()];
    for &(r, c, v) in entries {
        y[r] += v * x[c];
    }
    y
}

fn norm2(x: &[C]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unique trace-one kernel vector of `l`, as a Hermitian density matrix.
///
/// ```
/// use fqnv::master_eq::*;
/// use fqnv::units::{Freq, SystemParams};
/// let layout = HilbertLayout::uniform(2).unwrap();
/// let p = SystemParams { lambda: Freq(0.1), ..SystemParams::reference_device() };
/// let l = build_liouvillian(&build_rotating_hamiltonian(&p, p.omega_nv, &layout), &p, &layout);
/// let ss = steady_state(&l).unwrap();
/// assert!(ss.diagnostics.within_tolerances());
/// assert!(qubit_excitation(&ss.rho, &layout) < 1e-3);
/// ```
pub fn steady_state(l: &Superoperator) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let n = l.dim();
    let a = constrained(l);
    let lu = factor(n, &a)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut rhs = Mat::<C>::zeros(n, 2);
    rhs[(0, 0)] = C::new(1.0, 0.0);
    for k in 0..n {
        rhs[(k, 1)] = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    lu.solve_in_place(&mut rhs);
    let x: Vec<C> = (0..n).map(|k| rhs[(k, 0)]).collect();
    let mut y: Vec<C> = (0..n).map(|k| rhs[(k, 1)]).collect();
    if x.iter().chain(&y).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonUniqueSteadyState { residual: 0.0 });
    }

    // One extra inverse iteration sharpens the second-candidate estimate.
    let ny = norm2(&y);
    let mut again = Mat::<C>::from_fn(n, 1, |k, _| y[k] / ny);
    lu.solve_in_place(&mut again);
    y = (0..n).map(|k| again[(k, 0)]).collect();
    let a_norm = a.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt();
    let uniqueness_residual = norm2(&apply(&a, &y)) / (a_norm * norm2(&y));
    if !uniqueness_residual.is_finite() || uniqueness_residual < UNIQUENESS_TOL {
        return Err(Error::NonUniqueSteadyState { residual: uniqueness_residual });
    }

    let raw = Mat::<C>::from_fn(d, d, |i, j| x[j * d + i]);
    let hermiticity_error = (&raw - raw.adjoint()).norm_max();
    let sym = Mat::<C>::from_fn(d, d, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let rho = DensityMatrix(sym);
    let trace_error = (rho.trace() - C::new(1.0, 0.0)).norm();
    let min_eigenvalue = rho.min_eigenvalue()?;
    let residual = norm2(&l.apply(&rho.to_vec())) / l.frobenius_norm().max(f64::MIN_POSITIVE);

    let diagnostics = SolveDiagnostics { trace_error, hermiticity_error, min_eigenvalue, residual, uniqueness_residual };
    if trace_error > TRACE_TOL {
        return Err(Error::SolverFailure(format!("trace off by {trace_error:.3e}")));
    }
    if min_eigenvalue < -POSITIVITY_TOL {
        return Err(Error::SolverFailure(format!("negative eigenvalue {min_eigenvalue:.3e}")));
    }
    Ok(SteadyState { rho, diagnostics })
}

/// ⟨σ₊σ₋⟩: total population of the qubit's upper level.
pub fn qubit_excitation(rho: &DensityMatrix, layout: &HilbertLayout) -> f64 {
    let mut acc = C::new(0.0, 0.0);
    for b in 0..layout.n_max_bright {
        for d in 0..layout.n_max_dark {
            let i = layout.index(1, b, d);
            acc += rho.get(i, i);
        }
    }
    debug_assert!(acc.im.abs() < HERMITICITY_TOL);
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master_eq::{build_liouvillian, build_rotating_hamiltonian};
    use crate::units::{Freq, SystemParams};

    fn decoupled() -> SystemParams {
        SystemParams { g: Freq(0.0), j: Freq(0.0), lambda: Freq(0.0), ..SystemParams::reference_device() }
    }

    #[test]
    fn decoupled_undriven_relaxes_to_ground() {
        let l = HilbertLayout::uniform(3).unwrap();
        let p = decoupled();
        let ss = steady_state(&build_liouvillian(&build_rotating_hamiltonian(&p, Freq(2870.0), &l), &p, &l)).unwrap();
        let ground = l.index(0, 0, 0);
        assert!((ss.rho.get(ground, ground).re - 1.0).abs() < 1e-12);
        assert!(qubit_excitation(&ss.rho, &l).abs() < 1e-12);
        assert!(ss.diagnostics.within_tolerances());
    }

    #[test]
    fn undamped_mode_is_not_unique() {
        let l = HilbertLayout::uniform(2).unwrap();
        let p = SystemParams { gamma_d: Freq(0.0), ..decoupled() };
        let r = steady_state(&build_liouvillian(&build_rotating_hamiltonian(&p, Freq(2870.0), &l), &p, &l));
        assert!(matches!(r, Err(Error::NonUniqueSteadyState { .. })), "{r:?}");
    }

    #[test]
    fn excitation_of_reference_states() {
        let l = HilbertLayout::new(2, 3).unwrap();
        assert_eq!(qubit_excitation(&DensityMatrix::basis_state(l.dim(), l.index(0, 0, 0)), &l), 0.0);
        let mut m = Mat::<C>::zeros(l.dim(), l.dim());
        m[(l.index(0, 0, 0), l.index(0, 0, 0))] = C::new(0.5, 0.0);
        m[(l.index(1, 0, 0), l.index(1, 0, 0))] = C::new(0.5, 0.0);
        assert_eq!(qubit_excitation(&DensityMatrix(m), &l), 0.5);
    }

    #[test]
    fn driven_qubit_matches_bloch_solution() {
        // Isolated two-level system with decay 2Γ and dephasing Γ of the coherence:
        // excitation = (λ²/4) / (Δ² + Γ² + λ²/2) with Δ the drive detuning.
        let l = HilbertLayout::uniform(1).unwrap();
        let (gq, lam) = (0.3, 0.8);
        let p = SystemParams { gamma_fq: Freq(gq), lambda: Freq(lam), ..decoupled() };
        for dw in [0.0, 0.2, -0.7, 1.5] {
            let w = p.omega_fq.0 + dw;
            let ss = steady_state(&build_liouvillian(&build_rotating_hamiltonian(&p, Freq(w), &l), &p, &l)).unwrap();
            let want = 0.25 * lam * lam / (dw * dw + gq * gq + 0.5 * lam * lam);
            assert!((qubit_excitation(&ss.rho, &l) - want).abs() < 1e-12, "dw {dw}");
        }
    }

    #[test]
    fn sparse_path_agrees_with_dense() {
        let l = HilbertLayout::uniform(3).unwrap();
        let p = SystemParams { lambda: Freq(4.0), ..SystemParams::reference_device() };
        let sup = build_liouvillian(&build_rotating_hamiltonian(&p, Freq(2880.0), &l), &p, &l);
        let dense = steady_state(&sup).unwrap();
        let a = constrained(&sup);
        let Factor::Sparse(lu) = factor_sparse(sup.dim(), &a) else { unreachable!() };
        let mut rhs = Mat::<C>::zeros(sup.dim(), 1);
        rhs[(0, 0)] = C::new(1.0, 0.0);
        lu.solve_in_place(rhs.as_mut());
        let d = sup.hilbert_dim();
        for i in 0..d {
            for j in 0..d {
                let s = rhs[(j * d + i, 0)];
                let h = (s + rhs[(i * d + j, 0)].conj()) * 0.5;
                assert!((h - dense.rho.get(i, j)).norm() < 1e-12);
            }
        }
    }

    fn factor_sparse(n: usize, entries: &[(usize, usize, C)]) -> Factor {
        let trip: Vec<Triplet<usize, usize, C>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, C>::try_new_from_triplets(n, n, &trip).unwrap();
        Factor::Sparse(a.sp_lu().unwrap())
    }
}
