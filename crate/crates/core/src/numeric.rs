// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small numerical helpers shared by the models.

use num_complex::Complex64;

/// Pairwise (cascade) sum of `f(0) + ... + f(n-1)`.
pub fn pairwise_sum(n: usize, f: &impl Fn(usize) -> Complex64) -> Complex64 {
    fn go(lo: usize, hi: usize, f: &impl Fn(usize) -> Complex64) -> Complex64 {
        if hi - lo <= 32 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                acc += f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    if n == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        go(0, n, f)
    }
}

/// Bracket width at which refining a grid maximum at `x` with spacing `h` stops.
pub fn refine_tol(x: f64, h: f64) -> f64 {
    (1e-9 * h).max(8.0 * f64::EPSILON * x.abs())
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol`; returns (argmax, max).
pub fn golden_max<E>(
    mut a: f64,
    mut b: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64, E>,
) -> Result<(f64, f64), E> {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Indices of strict interior local maxima (plateaus count once, at their left edge).
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut k = i;
            while k + 1 < n && y[k + 1] == y[i] {
                k += 1;
            }
            if k + 1 < n && y[k + 1] < y[i] {
                out.push(i);
            }
            i = k + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence of the maximum at `i`.
pub fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left_min = h;
    for k in (0..i).rev() {
        if y[k] > h {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_exact_integer_sum() {
        let s = pairwise_sum(1000, &|i| Complex64::new(i as f64, -(i as f64)));
        assert_eq!(s, Complex64::new(499_500.0, -499_500.0));
        assert_eq!(pairwise_sum(0, &|_| Complex64::new(1.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_max::<()>(-3.0, 5.0, 1e-10, |x| Ok(-(x - 1.25) * (x - 1.25) + 2.0)).unwrap();
        assert!((x - 1.25).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn maxima_and_prominence() {
        let y = [0.0, 1.0, 0.5, 3.0, 3.0, 2.0, 2.5, 0.0];
        assert_eq!(local_maxima(&y), vec![1, 3, 6]);
        assert_eq!(prominence(&y, 3), 3.0);
        assert_eq!(prominence(&y, 1), 0.5);
        assert_eq!(prominence(&y, 6), 0.5);
    }
}
