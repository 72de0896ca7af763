//! Dense complex spectral engine: eigenvalues with multiplicities, operator
//! norms over sup/L¹(μ)/L²(μ), resolvents, contour-integral spectral
//! projections, matrix powers and numerical kernels.
//!
//! All inputs are square complex matrices with the row index as the output
//! coordinate: `(T f)(x) = Σ_y T[x, y] f(y)`.

mod contour;
mod eigen;
mod qr;

pub use contour::{contour_projection, power_split_projection, ContourProjection};
pub use eigen::{eigen, SpectralValue, SpectrumReport, CLUSTER_TOL};
pub use qr::{complex_schur, complex_schur_real, SchurForm};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynsys::FiniteMeasure;
use crate::error::{Error, Result};

/// Working matrix type of the whole pipeline.
pub type CMatrix = DMatrix<Complex64>;
/// Complex column vector.
pub type CVector = DVector<Complex64>;

/// Relative tolerance (times dimension) used when deciding numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// Validates shape and entry finiteness of a working matrix.
pub fn validate_matrix(t: &CMatrix) -> Result<()> {
    if t.nrows() != t.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}×{}",
            t.nrows(),
            t.ncols()
        )));
    }
    if t.nrows() == 0 {
        return Err(Error::InvalidInput("matrix must be nonempty".into()));
    }
    if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has NaN or infinite entries".into()));
    }
    Ok(())
}

/// True if every entry has vanishing imaginary part.
pub fn is_real(t: &CMatrix) -> bool {
    t.iter().all(|z| z.im == 0.0)
}

pub fn to_real(t: &CMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)].re)
}

pub fn to_complex(t: &DMatrix<f64>) -> CMatrix {
    CMatrix::from_fn(t.nrows(), t.ncols(), |i, j| Complex64::new(t[(i, j)], 0.0))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Entrywise maximum modulus.
pub fn max_abs(t: &CMatrix) -> f64 {
    t.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operator norm flavour. The weighted kinds carry the measure because the
/// norm of a matrix on L^p(μ) depends on the atom weights.
#[derive(Debug, Clone)]
pub enum NormKind {
    /// Sup norm on functions; induced operator norm = max absolute row sum.
    Sup,
    /// L¹(μ): induced norm = max over columns j of Σ_i μ_i |T_ij| / μ_j.
    L1(FiniteMeasure),
    /// L²(μ): induced norm = largest singular value of D^{1/2} T D^{−1/2}.
    L2(FiniteMeasure),
}

impl NormKind {
    pub fn measure(&self) -> Option<&FiniteMeasure> {
        match self {
            NormKind::Sup => None,
            NormKind::L1(mu) | NormKind::L2(mu) => Some(mu),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NormKind::Sup => "sup",
            NormKind::L1(_) => "l1",
            NormKind::L2(_) => "l2",
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if let Some(mu) = self.measure() {
            if mu.n() != n {
                return Err(Error::DimensionMismatch(format!(
                    "norm measure has {} atoms but matrix dimension is {n}",
                    mu.n()
                )));
            }
        }
        Ok(())
    }
}

/// Induced operator norm of `t` for the given kind.
pub fn operator_norm(t: &CMatrix, kind: &NormKind) -> Result<f64> {
    validate_matrix(t)?;
    kind.check_dim(t.nrows())?;
    let n = t.nrows();
    Ok(match kind {
        NormKind::Sup => (0..n)
            .map(|i| (0..n).map(|j| t[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::L1(mu) => (0..n)
            .map(|j| {
                (0..n).map(|i| mu.weight(i) * t[(i, j)].norm()).sum::<f64>() / mu.weight(j)
            })
            .fold(0.0, f64::max),
        NormKind::L2(mu) => {
            let scaled = CMatrix::from_fn(n, n, |i, j| {
                t[(i, j)] * (mu.weight(i) / mu.weight(j)).sqrt()
            });
            let sv = if is_real(&scaled) {
                to_real(&scaled).singular_values()
            } else {
                scaled.singular_values()
            };
            sv.iter().copied().fold(0.0, f64::max)
        }
    })
}

/// Norm of a vector for the given kind.
pub fn vector_norm(f: &CVector, kind: &NormKind) -> Result<f64> {
    kind.check_dim(f.len())?;
    Ok(match kind {
        NormKind::Sup => f.iter().map(|z| z.norm()).fold(0.0, f64::max),
        NormKind::L1(mu) => f.iter().enumerate().map(|(i, z)| mu.weight(i) * z.norm()).sum(),
        NormKind::L2(mu) => f
            .iter()
            .enumerate()
            .map(|(i, z)| mu.weight(i) * z.norm_sqr())
            .sum::<f64>()
            .sqrt(),
    })
}

/// ‖Tⁿ‖ for n = 1..n_max by iterated multiplication, with per-step norm
/// evaluation. Overflow is reported through `diverged_at`, not fatal.
#[derive(Debug, Clone)]
pub struct PowerNormSequence {
    pub norms: Vec<f64>,
    /// Set to the first exponent whose power overflowed f64 range, if any.
    pub diverged_at: Option<usize>,
}

pub fn power_norm_sequence(t: &CMatrix, kind: &NormKind, n_max: usize) -> Result<PowerNormSequence> {
    validate_matrix(t)?;
    kind.check_dim(t.nrows())?;
    if n_max < 1 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let mut norms = Vec::with_capacity(n_max);
    let mut power = t.clone();
    let mut diverged_at = None;
    for n in 1..=n_max {
        let value = operator_norm(&power, kind)?;
        if !value.is_finite() {
            diverged_at = Some(n);
            break;
        }
        norms.push(value);
        if n < n_max {
            power = t * &power;
        }
    }
    Ok(PowerNormSequence { norms, diverged_at })
}

/// Tⁿ by binary exponentiation; exponent 0 gives the identity.
pub fn matrix_power(t: &CMatrix, mut k: u128) -> CMatrix {
    let n = t.nrows();
    let mut result = identity(n);
    let mut base = t.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &base * &result;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Same power routine on real matrices (the common case for instances built
/// from maps; keeps big power checks in real arithmetic).
pub fn matrix_power_real(t: &DMatrix<f64>, mut k: u128) -> DMatrix<f64> {
    let n = t.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = t.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &base * &result;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// R(λ, T) = (λI − T)^{-1}, verified by the residual ‖(λI − T)R − I‖ ≤ 1e−8.
pub fn resolvent(t: &CMatrix, lambda: Complex64) -> Result<CMatrix> {
    validate_matrix(t)?;
    let n = t.nrows();
    let shifted = {
        let mut m = -t.clone();
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        m
    };
    let lu = shifted.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(|| {
        Error::SingularResolvent(format!("λ = {lambda} is an eigenvalue of T"))
    })?;
    let residual = max_abs(&(&shifted * &inverse - identity(n)));
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::SingularResolvent(format!(
            "λ = {lambda} is within working precision of the spectrum (residual {residual:.3e})"
        )));
    }
    Ok(inverse)
}

/// Orthonormal basis of the numerical kernel: right singular vectors whose
/// singular value is ≤ tol · σ_max · n. Returns an n×k matrix of columns.
pub fn kernel_basis(t: &CMatrix, tol: f64) -> Result<CMatrix> {
    validate_matrix(t)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("kernel tolerance must be positive".into()));
    }
    let n = t.nrows();
    let svd = t.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol * smax * n as f64;
    // A zero matrix has kernel = everything; all σ = 0 pass the cutoff.
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    let mut basis = CMatrix::zeros(n, kept.len());
    for (k, &i) in kept.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).adjoint());
    }
    Ok(basis)
}

/// Orthonormal basis of the numerical range (column space) at the same kind
/// of relative cutoff; used for rank-revealing basis extraction.
pub fn range_basis(t: &CMatrix, tol: f64) -> Result<CMatrix> {
    validate_matrix(t)?;
    let n = t.nrows();
    let svd = t.clone().svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol * smax * n as f64;
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff && svd.singular_values[i] > 0.0)
        .collect();
    let mut basis = CMatrix::zeros(n, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        basis.set_column(k, &u.column(i));
    }
    Ok(basis)
}

/// Least-squares residual of expressing each column of `vectors` in
/// span(basis); the maximum column residual is returned (sup over columns of
/// the euclidean misfit). Empty basis ⇒ residual is the largest column norm.
pub fn span_containment_residual(basis: &CMatrix, vectors: &CMatrix) -> f64 {
    if vectors.ncols() == 0 {
        return 0.0;
    }
    if basis.ncols() == 0 {
        return (0..vectors.ncols())
            .map(|j| vectors.column(j).norm())
            .fold(0.0, f64::max);
    }
    // basis has orthonormal columns in every caller, so the projector is B B^H.
    let projected = basis * (basis.adjoint() * vectors);
    let residual = vectors - projected;
    (0..residual.ncols())
        .map(|j| residual.column(j).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_matrix(n: usize, rows: &[f64]) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| c(rows[i * n + j], 0.0))
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        assert!(validate_matrix(&CMatrix::zeros(2, 3)).is_err());
        assert!(validate_matrix(&CMatrix::zeros(0, 0)).is_err());
        let mut nan = CMatrix::zeros(2, 2);
        nan[(0, 1)] = c(f64::NAN, 0.0);
        assert!(validate_matrix(&nan).is_err());
    }

    #[test]
    fn sup_norm_is_max_row_sum() {
        // [[1,0],[1,0]] has row sums 1,1 in sup; L¹ with counting measure is 2.
        let t = real_matrix(2, &[1.0, 0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(operator_norm(&t, &NormKind::Sup).unwrap(), 1.0);
        let counting = FiniteMeasure::uniform(2).unwrap();
        assert_abs_diff_eq!(operator_norm(&t, &NormKind::L1(counting)).unwrap(), 2.0);
        let diag = real_matrix(2, &[0.5, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(operator_norm(&diag, &NormKind::Sup).unwrap(), 1.0);
    }

    #[test]
    fn l2_norm_is_weighted_singular_value() {
        // Diagonal similarity leaves diagonal matrices alone.
        let t = real_matrix(2, &[0.5, 0.0, 0.0, 1.0]);
        let mu = FiniteMeasure::new(vec![0.25, 2.0]).unwrap();
        assert_abs_diff_eq!(operator_norm(&t, &NormKind::L2(mu)).unwrap(), 1.0, epsilon = 1e-12);
        // Nilpotent shift e_0 ↦ e_1 with halving measure: ‖T‖ = √(μ_1/μ_0).
        let shift = real_matrix(2, &[0.0, 0.0, 1.0, 0.0]);
        let mu = FiniteMeasure::new(vec![1.0, 0.5]).unwrap();
        assert_abs_diff_eq!(
            operator_norm(&shift, &NormKind::L2(mu)).unwrap(),
            (0.5f64).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn power_norms_track_decay_and_permutations() {
        let t = real_matrix(1, &[0.5]);
        let seq = power_norm_sequence(&t, &NormKind::Sup, 3).unwrap();
        assert_eq!(seq.norms, vec![0.5, 0.25, 0.125]);
        assert!(seq.diverged_at.is_none());

        let swap = real_matrix(2, &[0.0, 1.0, 1.0, 0.0]);
        let seq = power_norm_sequence(&swap, &NormKind::Sup, 4).unwrap();
        assert_eq!(seq.norms, vec![1.0; 4]);

        // Nilpotent part of 0→1→2→2: restriction to the tail ideal
        // {f : f(2) = 0} in coordinates (0, 1): f ↦ (f(1), 0).
        let nil = real_matrix(2, &[0.0, 1.0, 0.0, 0.0]);
        let seq = power_norm_sequence(&nil, &NormKind::Sup, 3).unwrap();
        assert_eq!(seq.norms, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn resolvent_examples() {
        // T = 0 (n = 1), λ = 2 → [1/2].
        let z = CMatrix::zeros(1, 1);
        let r = resolvent(&z, c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r[(0, 0)].re, 0.5, epsilon = 1e-14);

        // diag(1/2, 1), λ = 2 → diag(2/3, 1).
        let t = real_matrix(2, &[0.5, 0.0, 0.0, 1.0]);
        let r = resolvent(&t, c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r[(0, 0)].re, 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(0, 1)].norm(), 0.0, epsilon = 1e-14);

        // T = [[1,0],[1,0]], λ = 2: (2I − T) = [[1,0],[−1,2]], whose inverse
        // is [[1,0],[1/2,1/2]]. Cross-checked by the Neumann series
        // (2 − T)^{-1} = ½(I + T/2 + T²/4 + …) with T² = T, which sums to
        // ½(I + T).
        let t = real_matrix(2, &[1.0, 0.0, 1.0, 0.0]);
        let r = resolvent(&t, c(2.0, 0.0)).unwrap();
        let expected = real_matrix(2, &[1.0, 0.0, 0.5, 0.5]);
        assert!(max_abs(&(r - expected)) < 1e-14);

        // λ in the spectrum fails loudly.
        assert!(resolvent(&t, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn kernel_basis_examples() {
        // T = 0 on 2 states: kernel is everything.
        let z = CMatrix::zeros(2, 2);
        assert_eq!(kernel_basis(&z, 1e-12).unwrap().ncols(), 2);
        // Identity: empty kernel.
        let id = identity(3);
        assert_eq!(kernel_basis(&id, 1e-12).unwrap().ncols(), 0);
        // [[1,0],[1,0]] − I has kernel spanned by (1,1)/√2 (the fixed space).
        let t = real_matrix(2, &[1.0, 0.0, 1.0, 0.0]) - identity(2);
        let k = kernel_basis(&t, 1e-12).unwrap();
        assert_eq!(k.ncols(), 1);
        let v = k.column(0);
        assert_abs_diff_eq!(v[0].norm(), (0.5f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!((v[0] - v[1]).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn matrix_power_agrees_with_iteration() {
        let t = real_matrix(2, &[0.0, 1.0, 0.5, 0.5]);
        let mut direct = identity(2);
        for k in 0..9u128 {
            assert!(max_abs(&(matrix_power(&t, k) - &direct)) < 1e-12, "k = {k}");
            direct = &t * &direct;
        }
    }

    #[test]
    fn span_residual_detects_containment() {
        let basis = CMatrix::from_columns(&[CVector::from_vec(vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ])]);
        let inside = CMatrix::from_columns(&[CVector::from_vec(vec![c(3.0, 0.0), c(3.0, 0.0)])]);
        let outside = CMatrix::from_columns(&[CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])]);
        assert!(span_containment_residual(&basis, &inside) < 1e-12);
        assert!(span_containment_residual(&basis, &outside) > 0.5);
    }
}
