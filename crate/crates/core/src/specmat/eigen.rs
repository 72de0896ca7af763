//! Full-spectrum computation with algebraic multiplicities.
//!
//! The solver is the in-crate complex Schur decomposition. Its reconstruction
//! residual ‖T − Q S Qᴴ‖_F certifies every reported value: each diagonal
//! value of S is an exact eigenvalue of a matrix within that distance of T,
//! hence σ_min(λI − T) never exceeds the reported bound.

use num_complex::Complex64;

use super::qr::complex_schur;
use super::{kernel_basis, max_abs, validate_matrix, CMatrix};
use crate::error::{Error, Result};

/// Clustering radius for assigning multiplicities from a numerical solver.
/// Gallery instances keep true spectral separations ≥ 0.1, so this is safe
/// by many orders of magnitude.
pub const CLUSTER_TOL: f64 = 1e-8;

/// One distinct spectral value with its multiplicities.
#[derive(Debug, Clone)]
pub struct SpectralValue {
    pub value: Complex64,
    pub algebraic_multiplicity: usize,
    /// Filled on demand by [`SpectrumReport::with_geometric`]; rank decisions
    /// cost an SVD per distinct value and batch sweeps do not need them.
    pub geometric_multiplicity: Option<usize>,
}

/// Spectrum of a matrix: distinct eigenvalues (clustered at [`CLUSTER_TOL`])
/// with multiplicities, spectral radius, the gap at 1 and the accuracy
/// certificate.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Sorted by modulus descending, then by phase.
    pub eigenvalues: Vec<SpectralValue>,
    pub spectral_radius: f64,
    /// Min distance from 1 to spectral values other than 1 itself
    /// (`f64::INFINITY` when σ(T) = {1}).
    pub gap_at_one: f64,
    /// Every reported eigenvalue λ satisfies σ_min(λI − T) ≤ residual_bound.
    pub residual_bound: f64,
}

impl SpectrumReport {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.iter().map(|v| v.algebraic_multiplicity).sum()
    }

    /// Distance from z to the nearest reported eigenvalue.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|v| (v.value - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.distance_to(z) <= tol
    }

    /// Fills geometric multiplicities via the numerical kernel of λI − T at
    /// tolerance 1e−12.
    pub fn with_geometric(mut self, t: &CMatrix) -> Result<SpectrumReport> {
        let n = t.nrows();
        for v in &mut self.eigenvalues {
            let mut shifted = -t.clone();
            for i in 0..n {
                shifted[(i, i)] += v.value;
            }
            v.geometric_multiplicity = Some(kernel_basis(&shifted, 1e-12)?.ncols());
        }
        Ok(self)
    }
}

/// Full spectrum with multiplicities and an accuracy certificate.
pub fn eigen(t: &CMatrix) -> Result<SpectrumReport> {
    validate_matrix(t)?;
    let n = t.nrows();

    let schur = complex_schur(t)?;
    let raw = schur.eigenvalues();
    let residual = schur.residual(t);

    let scale = max_abs(t).max(f64::MIN_POSITIVE);
    if residual > 1e-10 * n as f64 * scale {
        return Err(Error::NumericFailure(format!(
            "Schur reconstruction residual {residual:.3e} exceeds the accuracy contract {:.3e}",
            1e-10 * n as f64 * scale
        )));
    }

    // Greedy clustering at CLUSTER_TOL with running-mean centres.
    let mut sorted = raw;
    sorted.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite eigenvalues"));
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    let mut drift: f64 = 0.0;
    for z in sorted {
        match clusters
            .iter_mut()
            .min_by(|a, b| {
                (a.0 - z).norm().partial_cmp(&(b.0 - z).norm()).expect("finite")
            })
            .filter(|(c, _)| (*c - z).norm() <= CLUSTER_TOL)
        {
            Some((center, count)) => {
                let new_count = *count + 1;
                let new_center = (*center * (*count as f64) + z) / new_count as f64;
                drift = drift.max((new_center - z).norm());
                *center = new_center;
                *count = new_count;
            }
            None => clusters.push((z, 1)),
        }
    }

    let spectral_radius = clusters.iter().map(|(c, _)| c.norm()).fold(0.0, f64::max);
    let one = Complex64::new(1.0, 0.0);
    let gap_at_one = clusters
        .iter()
        .filter(|(c, _)| (c - one).norm() > 1e-6)
        .map(|(c, _)| (c - one).norm())
        .fold(f64::INFINITY, f64::min);

    let mut eigenvalues: Vec<SpectralValue> = clusters
        .into_iter()
        .map(|(value, algebraic_multiplicity)| SpectralValue {
            value,
            algebraic_multiplicity,
            geometric_multiplicity: None,
        })
        .collect();
    eigenvalues.sort_by(|a, b| {
        (b.value.norm(), a.value.arg())
            .partial_cmp(&(a.value.norm(), b.value.arg()))
            .expect("finite eigenvalues")
    });

    Ok(SpectrumReport {
        eigenvalues,
        spectral_radius,
        gap_at_one,
        residual_bound: residual + drift,
    })
}
