//! Complex Schur decomposition by the implicit single-shift QR algorithm on
//! Hessenberg form, with Wilkinson shifts and periodic exceptional shifts.
//!
//! The exceptional shifts matter here: plain Wilkinson-shifted QR stalls on
//! permutation matrices (the spectrum is symmetric under rotation and the
//! shift pattern cycles), and Koopman matrices of cyclic maps are exactly
//! that case. Every tenth stalled sweep injects the standard ad-hoc shift
//! `h[e,e] + 0.75·|h[e,e−1]|`, which breaks the cycle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CMatrix;
use crate::error::{Error, Result};

/// Unitary Q and upper-triangular T with A = Q T Qᴴ.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Frobenius reconstruction residual ‖A − Q T Qᴴ‖_F.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        (&self.q * &self.t * self.q.adjoint() - a).norm()
    }
}

/// Givens rotation G = [[c, s], [−s̄, c]] with c real and G·(f, g)ᵀ = (r, 0)ᵀ.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let gn = g.norm();
    if gn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let fn_ = f.norm();
    if fn_ == 0.0 {
        return (0.0, g.conj() / gn);
    }
    let d = fn_.hypot(gn);
    let c = fn_ / d;
    let s = (f / fn_) * g.conj() / d;
    (c, s)
}

/// Eigenvalue of [[a, b], [c, d]] closest to d (the Wilkinson shift).
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let (r1, r2) = (half_diff + disc, half_diff - disc);
    // Roots of the 2×2 are d + r1, d + r2; take the one closer to d.
    if r1.norm() <= r2.norm() {
        d + r1
    } else {
        d + r2
    }
}

/// Complex Schur decomposition of a general square matrix.
///
/// `a` is reduced to Hessenberg form first; the QR iteration then deflates
/// eigenvalues from the bottom. Fails with `NumericFailure` if the sweep
/// budget (30 per eigenvalue) is exhausted, which on finite matrices only
/// happens for adversarial inputs.
pub fn complex_schur(a: &CMatrix) -> Result<SchurForm> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix has no Schur form".into()));
    }
    if n == 1 {
        return Ok(SchurForm {
            q: CMatrix::identity(1, 1),
            t: a.clone(),
        });
    }

    let (q0, h0) = a.clone().hessenberg().unpack();
    let mut h = h0;
    let mut q = q0;
    // Hessenberg reduction leaves exact zeros below the subdiagonal only up
    // to rounding in nalgebra's packed representation; enforce them.
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }

    let scale = h.norm().max(f64::MIN_POSITIVE);
    let negligible = |h: &CMatrix, i: usize| -> bool {
        let local = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
        let tol = if local > 0.0 {
            f64::EPSILON * local
        } else {
            f64::EPSILON * scale
        };
        h[(i, i - 1)].norm() <= tol
    };

    let mut end = n - 1; // active block is rows lo..=end
    let mut stalled = 0usize;
    let mut budget = 30 * n;

    while end > 0 {
        // Deflate converged eigenvalues at the bottom.
        if negligible(&h, end) {
            h[(end, end - 1)] = Complex64::new(0.0, 0.0);
            end -= 1;
            stalled = 0;
            continue;
        }
        // Find the start of the active unreduced block.
        let mut lo = end;
        while lo > 0 && !negligible(&h, lo) {
            lo -= 1;
        }
        if lo > 0 {
            h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
        }

        if budget == 0 {
            return Err(Error::NumericFailure(format!(
                "QR iteration exhausted its sweep budget with {} eigenvalues unresolved",
                end + 1
            )));
        }
        budget -= 1;
        stalled += 1;

        let sigma = if stalled % 10 == 0 {
            // Exceptional shift to break shift-invariant cycling.
            h[(end, end)] + Complex64::new(0.75 * h[(end, end - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(end - 1, end - 1)],
                h[(end - 1, end)],
                h[(end, end - 1)],
                h[(end, end)],
            )
        };

        // Implicit single-shift sweep: create the bulge at the top of the
        // active block and chase it off the bottom.
        let mut x = h[(lo, lo)] - sigma;
        let mut z = h[(lo + 1, lo)];
        for k in lo..end {
            let (c, s) = givens(x, z);
            let sc = s.conj();
            // Left: rows k, k+1 over columns (bulge column)..n.
            let col_start = if k == lo { lo } else { k - 1 };
            for j in col_start..n {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = t1 * c + t2 * s;
                h[(k + 1, j)] = -t1 * sc + t2 * c;
            }
            // Right: columns k, k+1 over rows 0..=min(k+2, end).
            let row_end = (k + 2).min(end);
            for i in 0..=row_end {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = t1 * c + t2 * sc;
                h[(i, k + 1)] = -t1 * s + t2 * c;
            }
            for i in 0..n {
                let t1 = q[(i, k)];
                let t2 = q[(i, k + 1)];
                q[(i, k)] = t1 * c + t2 * sc;
                q[(i, k + 1)] = -t1 * s + t2 * c;
            }
            if k + 1 < end {
                x = h[(k + 1, k)];
                z = h[(k + 2, k)];
            }
        }
    }

    Ok(SchurForm { q, t: h })
}

/// Convenience wrapper promoting a real matrix.
pub fn complex_schur_real(a: &DMatrix<f64>) -> Result<SchurForm> {
    let c = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| Complex64::new(a[(i, j)], 0.0));
    complex_schur(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted_norms(mut v: Vec<Complex64>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v.into_iter().map(|z| (z.re, z.im)).collect()
    }

    #[test]
    fn schur_of_cycle_permutations() {
        // The case that defeats shift-naive QR: exact cyclic permutations.
        for n in [2usize, 3, 4, 5, 8, 16, 37] {
            let mut a = CMatrix::zeros(n, n);
            for i in 0..n {
                a[(i, (i + 1) % n)] = c(1.0, 0.0);
            }
            let schur = complex_schur(&a).unwrap();
            assert!(schur.residual(&a) < 1e-12 * n as f64, "n = {n}");
            // Eigenvalues must be the n-th roots of unity.
            let mut evs = schur.eigenvalues();
            for ev in &mut evs {
                let mut best = f64::INFINITY;
                for k in 0..n {
                    let root = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
                    best = best.min((*ev - root).norm());
                }
                assert!(best < 1e-10, "n = {n}, stray eigenvalue {ev}");
            }
        }
    }

    #[test]
    fn schur_matches_known_spectra_under_similarity() {
        // Random unit-triangular similarity of a known diagonal: the spectrum
        // must come back exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [3usize, 7, 15] {
            let diag: Vec<Complex64> = (0..n)
                .map(|k| c(0.2 + 0.1 * k as f64, if k % 2 == 0 { 0.3 } else { -0.25 }))
                .collect();
            let mut m = CMatrix::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = diag[i];
            }
            let mut s = CMatrix::identity(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    s[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            let s_inv = s.clone().try_inverse().unwrap();
            let a = &s * &m * &s_inv;
            let schur = complex_schur(&a).unwrap();
            assert!(schur.residual(&a) < 1e-10);
            let got = sorted_norms(schur.eigenvalues());
            let want = sorted_norms(diag);
            for (g, w) in got.iter().zip(&want) {
                assert_abs_diff_eq!(g.0, w.0, epsilon = 1e-8);
                assert_abs_diff_eq!(g.1, w.1, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn schur_handles_nilpotent_and_defective() {
        // Single Jordan chain: σ = {0}, and the residual certificate still
        // holds even though eigenvalue scatter is intrinsic.
        let n = 12;
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = c(1.0, 0.0);
        }
        let schur = complex_schur(&a).unwrap();
        assert!(schur.residual(&a) < 1e-13 * n as f64);

        let j2 = CMatrix::from_fn(2, 2, |i, j| if j >= i { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let schur = complex_schur(&j2).unwrap();
        assert!(schur.residual(&j2) < 1e-14);
        for ev in schur.eigenvalues() {
            assert!((ev - c(1.0, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn schur_random_dense_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [10usize, 40, 90] {
            let a = CMatrix::from_fn(n, n, |_, _| {
                c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let schur = complex_schur(&a).unwrap();
            assert!(
                schur.residual(&a) < 1e-12 * (n as f64) * a.norm(),
                "n = {n}, residual {:.3e}",
                schur.residual(&a)
            );
            // Unitarity of Q.
            let qhq = schur.q.adjoint() * &schur.q;
            assert!((qhq - CMatrix::identity(n, n)).norm() < 1e-12 * n as f64);
        }
    }
}
