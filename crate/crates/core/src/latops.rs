//! Finite-dimensional lattice homomorphisms.
//!
//! In finite dimension the lattice homomorphisms (operators commuting with
//! the modulus, |Tf| = T|f|) are exactly the weighted composition matrices:
//! at most one nonzero entry per row, all entries nonnegative. This module
//! builds them from maps and weights, validates arbitrary matrices against
//! that characterization (structurally and by randomized modulus-commutation
//! sampling), provides the exact stable/periodic projections used as oracles
//! by the spectral pipeline, and ships the built-in instance gallery.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynsys::{cycle_structure, CycleStructure, FiniteMap, FiniteMeasure};
use crate::error::{Error, Result};
use crate::specmat::{self, CMatrix, CVector, NormKind};

/// A cycle counts as peripheral when its weight product is within this
/// tolerance of 1 in the 1/length power.
pub const PERIPHERAL_CYCLE_TOL: f64 = 1e-6;

/// A weighted composition operator (Tf)(x) = w(x)·f(φ(x)).
#[derive(Debug, Clone)]
pub struct WeightedCompositionOperator {
    map: FiniteMap,
    weights: Vec<f64>,
    matrix: CMatrix,
}

impl WeightedCompositionOperator {
    pub fn map(&self) -> &FiniteMap {
        &self.map
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn real_matrix(&self) -> DMatrix<f64> {
        specmat::to_real(&self.matrix)
    }

    /// Applies the action law directly (without the matrix).
    pub fn apply(&self, f: &CVector) -> CVector {
        CVector::from_fn(self.n(), |x, _| self.weights[x] * f[self.map.apply(x)])
    }

    /// Weight product along each cycle of the underlying map.
    pub fn cycle_weight_products(&self, cs: &CycleStructure) -> Vec<f64> {
        cs.cycles
            .iter()
            .map(|cycle| cycle.iter().map(|&u| self.weights[u]).product())
            .collect()
    }

    /// Spectral radius by the cycle formula: max over cycles of
    /// (weight product)^(1/length). Zero when every cycle carries a zero
    /// weight.
    pub fn spectral_radius_formula(&self, cs: &CycleStructure) -> f64 {
        cs.cycles
            .iter()
            .zip(self.cycle_weight_products(cs))
            .map(|(cycle, product)| product.powf(1.0 / cycle.len() as f64))
            .fold(0.0, f64::max)
    }

    /// Indices of cycles whose eigenvalues sit on the unit circle.
    pub fn peripheral_cycles(&self, cs: &CycleStructure) -> Vec<usize> {
        cs.cycles
            .iter()
            .zip(self.cycle_weight_products(cs))
            .enumerate()
            .filter(|(_, (cycle, product))| {
                product.powf(1.0 / cycle.len() as f64) >= 1.0 - PERIPHERAL_CYCLE_TOL
            })
            .map(|(id, _)| id)
            .collect()
    }
}

/// Koopman matrix f ↦ f∘φ: all weights 1, row x has a single 1 in column
/// φ(x); fixes the constant function exactly and has sup norm exactly 1.
pub fn koopman_matrix(map: &FiniteMap) -> WeightedCompositionOperator {
    weighted_composition(map, &vec![1.0; map.n()]).expect("unit weights are valid")
}

/// General weighted composition operator; weights must be nonnegative and
/// finite for the result to be a lattice homomorphism.
pub fn weighted_composition(map: &FiniteMap, weights: &[f64]) -> Result<WeightedCompositionOperator> {
    if weights.len() != map.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} states",
            weights.len(),
            map.n()
        )));
    }
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::NotLatticeHomomorphism(format!(
            "weight[{i}] = {w}; lattice homomorphisms need nonnegative weights"
        )));
    }
    let n = map.n();
    let mut matrix = CMatrix::zeros(n, n);
    for x in 0..n {
        matrix[(x, map.apply(x))] = Complex64::new(weights[x], 0.0);
    }
    Ok(WeightedCompositionOperator {
        map: map.clone(),
        weights: weights.to_vec(),
        matrix,
    })
}

/// Result of the lattice-homomorphism gate.
#[derive(Debug, Clone)]
pub struct LatticeHomCheckResult {
    pub is_lattice_hom: bool,
    /// A vector with ‖|Tf| − T|f|‖_∞ beyond tolerance, when the answer is
    /// negative; reproduces the violation.
    pub witness: Option<(CVector, f64)>,
}

fn modulus_deviation(t: &CMatrix, f: &CVector) -> f64 {
    let tf = t * f;
    let abs_f = CVector::from_fn(f.len(), |i, _| Complex64::new(f[i].norm(), 0.0));
    let t_abs_f = t * abs_f;
    (0..f.len())
        .map(|i| (Complex64::new(tf[i].norm(), 0.0) - t_abs_f[i]).norm())
        .fold(0.0, f64::max)
}

/// Decides whether T is a lattice homomorphism, two ways: structurally (at
/// most one nonzero per row, nonnegative real) and by modulus-commutation on
/// seeded random complex vectors. The two verdicts must agree; disagreement
/// is a bug trap, not a verdict.
pub fn check_lattice_homomorphism(
    t: &CMatrix,
    trials: usize,
    seed: u64,
) -> Result<LatticeHomCheckResult> {
    specmat::validate_matrix(t)?;
    if trials < 1 {
        return Err(Error::InvalidInput("need at least one sampling trial".into()));
    }
    let n = t.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let structural = (0..n).all(|i| {
        let mut nonzeros = 0;
        (0..n).all(|j| {
            let z = t[(i, j)];
            if z == zero {
                return true;
            }
            nonzeros += 1;
            nonzeros <= 1 && z.im == 0.0 && z.re > 0.0
        })
    });

    let scale = specmat::max_abs(t).max(1.0);
    let tol = 1e-10 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witness: Option<(CVector, f64)> = None;
    for _ in 0..trials {
        let f = CVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
        });
        let dev = modulus_deviation(t, &f);
        if dev > tol && witness.as_ref().map_or(true, |(_, best)| dev > *best) {
            witness = Some((f, dev));
        }
    }
    let sampled = witness.is_none();

    if structural != sampled {
        return Err(Error::InternalInconsistency(format!(
            "structural verdict {structural} vs sampled verdict {sampled} (worst deviation {:?})",
            witness.map(|(_, d)| d)
        )));
    }
    Ok(LatticeHomCheckResult {
        is_lattice_hom: structural,
        witness,
    })
}

/// For a lattice homomorphism with r(T) = 1, the value 1 must lie in the
/// spectrum. Returns whether it does (within 1e−6); hypothesis failures are
/// errors, not verdicts.
pub fn one_in_spectrum_check(t: &CMatrix) -> Result<bool> {
    let gate = check_lattice_homomorphism(t, 32, 0x517ec7)?;
    if !gate.is_lattice_hom {
        return Err(Error::InvalidHypothesis(
            "one_in_spectrum_check needs a lattice homomorphism".into(),
        ));
    }
    let report = specmat::eigen(t)?;
    if (report.spectral_radius - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidHypothesis(format!(
            "one_in_spectrum_check needs r(T) = 1, got {}",
            report.spectral_radius
        )));
    }
    Ok(report.contains(Complex64::new(1.0, 0.0), 1e-6))
}

/// A vector is quasi-interior in the finite case iff every coordinate is
/// strictly positive.
pub fn quasi_interior_check(h: &DVector<f64>) -> bool {
    h.len() > 0 && h.iter().all(|&x| x > 0.0)
}

/// Exact stable/periodic data of a weighted composition operator, computed
/// combinatorially. This is the oracle the contour pipeline is checked
/// against: no eigensolver, no quadrature, only walks on the functional
/// graph and weight products.
#[derive(Debug, Clone)]
pub struct ExactDecomposition {
    /// Π, the projection onto the periodic part along the stable ideal.
    pub complement: DMatrix<f64>,
    /// P = I − Π, the projection onto the stable ideal.
    pub projection: DMatrix<f64>,
    /// States lying on peripheral cycles.
    pub peripheral_states: Vec<bool>,
    pub dim_periodic: usize,
    pub dim_stable: usize,
    /// lcm of the peripheral cycle lengths (1 when none exist).
    pub period: u128,
    /// Max tail height into peripheral components; for Koopman operators
    /// this is the nilpotency index of T on the stable ideal.
    pub preperiod: usize,
}

/// Builds the exact projections for T = (φ, w).
///
/// The periodic part is spanned by eigenvectors of unimodular eigenvalues,
/// which live exactly on the components whose cycle has weight product 1;
/// on those components the complement projection reads
/// (Π f)(x) = W_M(x) · f(φ^M(x)) with M a multiple of the period at least
/// the preperiod, and W_M the weight product along the M-step orbit.
/// Everywhere else Π vanishes. For Koopman operators Π is a 0/1 matrix and
/// all arithmetic is exact.
pub fn exact_decomposition(wco: &WeightedCompositionOperator) -> Result<ExactDecomposition> {
    let n = wco.n();
    let map = wco.map();
    let cs = cycle_structure(map);
    let peripheral_ids = wco.peripheral_cycles(&cs);
    let mut is_peripheral_cycle = vec![false; cs.cycles.len()];
    for &id in &peripheral_ids {
        is_peripheral_cycle[id] = true;
    }

    let mut cycle_id_of_state = vec![usize::MAX; n];
    for (id, cycle) in cs.cycles.iter().enumerate() {
        for &u in cycle {
            cycle_id_of_state[u] = id;
        }
    }

    let mut peripheral_states = vec![false; n];
    for &id in &peripheral_ids {
        for &u in &cs.cycles[id] {
            peripheral_states[u] = true;
        }
    }

    let period = peripheral_ids
        .iter()
        .fold(1u128, |acc, &id| crate::dynsys::lcm_u128(acc, cs.cycles[id].len() as u128));

    // Does the orbit of x end on a peripheral cycle?
    let reaches_peripheral: Vec<bool> = (0..n)
        .map(|x| {
            let mut v = x;
            while !cs.is_periodic_point(v) {
                v = map.apply(v);
            }
            is_peripheral_cycle[cycle_id_of_state[v]]
        })
        .collect();

    let preperiod = (0..n)
        .filter(|&x| reaches_peripheral[x])
        .map(|x| cs.tail_height[x])
        .max()
        .unwrap_or(0);

    // M = smallest positive multiple of the period that is ≥ the preperiod.
    let m_steps: u128 = (preperiod as u128).div_ceil(period).max(1) * period;

    let mut complement = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        if !reaches_peripheral[x] {
            continue;
        }
        // Walk the tail exactly, then advance the leftover steps modulo the
        // cycle length; full loops contribute weight product exactly 1.
        let mut v = x;
        let mut product = 1.0f64;
        let mut steps_used: u128 = 0;
        while !cs.is_periodic_point(v) {
            product *= wco.weights()[v];
            v = map.apply(v);
            steps_used += 1;
        }
        let len = cs.cycle_length_of(v) as u128;
        let remainder = (m_steps - steps_used) % len;
        for _ in 0..remainder {
            product *= wco.weights()[v];
            v = map.apply(v);
        }
        if product != 0.0 {
            complement[(x, v)] = product;
        }
    }

    let projection = DMatrix::<f64>::identity(n, n) - &complement;
    let dim_periodic = peripheral_states.iter().filter(|&&b| b).count();
    Ok(ExactDecomposition {
        complement,
        projection,
        peripheral_states,
        dim_periodic,
        dim_stable: n - dim_periodic,
        period,
        preperiod,
    })
}

// ---------------------------------------------------------------------------
// Gallery.
// ---------------------------------------------------------------------------

/// Qualitative expectations of a gallery instance, asserted by the test
/// suites rather than trusted as configuration.
#[derive(Debug, Clone)]
pub struct GalleryExpectations {
    /// Distinct eigenvalues with algebraic multiplicity.
    pub spectrum: Vec<(Complex64, usize)>,
    pub one_isolated: bool,
    pub dim_stable: usize,
    pub period: u128,
    pub periodic: bool,
    pub eventually_periodic: Option<(usize, u128)>,
    /// Some(index) when T restricted to the stable ideal is nilpotent with
    /// that index; None when the powers never reach zero.
    pub nilpotency_index: Option<usize>,
    pub operator_norm: f64,
    /// Whether T fixes the order unit 𝟙 (the AM-unit hypothesis).
    pub fixes_unit: bool,
}

#[derive(Debug, Clone)]
pub struct GalleryInstance {
    pub name: String,
    pub operator: WeightedCompositionOperator,
    pub norm: NormKind,
    pub unit: DVector<f64>,
    pub expected: GalleryExpectations,
}

pub const GALLERY_NAMES: [&str; 4] = [
    "am_diag_half_one",
    "c_limit_truncation",
    "l1_constant_map",
    "l1_doubling_truncation",
];

/// Built-in instances mirroring the worked examples: the sup-norm diagonal
/// with a spectral gap, the limit functional on convergent sequences
/// (finite truncation), the constant map on two L¹ atoms, and the L¹[0,2]
/// doubling-map truncation. `n` controls the truncation size where it
/// applies.
pub fn gallery(name: &str, n: usize) -> Result<GalleryInstance> {
    let one = Complex64::new(1.0, 0.0);
    match name {
        "am_diag_half_one" => {
            // diag(1/2, 1) on sup-norm ℂ²: spectrum {1/2, 1}, 1 isolated,
            // stable ideal span{e₀}; the powers on the ideal halve forever
            // and never vanish, so it is not nilpotent there. T𝟙 ≠ 𝟙.
            let map = FiniteMap::identity(2)?;
            let operator = weighted_composition(&map, &[0.5, 1.0])?;
            Ok(GalleryInstance {
                name: name.into(),
                operator,
                norm: NormKind::Sup,
                unit: DVector::from_element(2, 1.0),
                expected: GalleryExpectations {
                    spectrum: vec![(Complex64::new(0.5, 0.0), 1), (one, 1)],
                    one_isolated: true,
                    dim_stable: 1,
                    period: 1,
                    periodic: false,
                    eventually_periodic: None,
                    nilpotency_index: None,
                    operator_norm: 1.0,
                    fixes_unit: false,
                },
            })
        }
        "c_limit_truncation" => {
            // a ↦ (lim a)·𝟙 truncated to n coordinates with the last one
            // playing the limit: the Koopman matrix of the constant map
            // x ↦ n−1. A projection: T² = T, σ = {0, 1}.
            if n < 2 {
                return Err(Error::InvalidInput("c_limit_truncation needs n ≥ 2".into()));
            }
            let map = FiniteMap::constant(n, n - 1)?;
            let operator = koopman_matrix(&map);
            Ok(GalleryInstance {
                name: name.into(),
                operator,
                norm: NormKind::Sup,
                unit: DVector::from_element(n, 1.0),
                expected: GalleryExpectations {
                    spectrum: vec![(Complex64::new(0.0, 0.0), n - 1), (one, 1)],
                    one_isolated: true,
                    dim_stable: n - 1,
                    period: 1,
                    periodic: false,
                    eventually_periodic: Some((1, 1)),
                    nilpotency_index: Some(1),
                    operator_norm: 1.0,
                    fixes_unit: true,
                },
            })
        }
        "l1_constant_map" => {
            // Koopman of the constant map on two counting-measure atoms,
            // viewed on L¹: ‖T‖ = 2, σ = {0, 1}, eventually periodic with
            // (k, p) = (1, 1) but not periodic.
            let map = FiniteMap::constant(2, 0)?;
            let operator = koopman_matrix(&map);
            Ok(GalleryInstance {
                name: name.into(),
                operator,
                norm: NormKind::L1(FiniteMeasure::uniform(2)?),
                unit: DVector::from_element(2, 1.0),
                expected: GalleryExpectations {
                    spectrum: vec![(Complex64::new(0.0, 0.0), 1), (one, 1)],
                    one_isolated: true,
                    dim_stable: 1,
                    period: 1,
                    periodic: false,
                    eventually_periodic: Some((1, 1)),
                    nilpotency_index: Some(1),
                    operator_norm: 2.0,
                    fixes_unit: true,
                },
            })
        }
        "l1_doubling_truncation" => {
            // Dyadic truncation of f ↦ f∘φ with φ(x) = 2x on [0,1], x on
            // [1,2]: state 0 is the absorbing cell [1,2] (mass 1), state j
            // the cell (2^{−j}, 2^{1−j}] (mass 2^{−j}), and the cell shift
            // j ↦ j−1 realizes the doubling. All weights are 1; the measure
            // halves per level, so the restriction to the tail ideal has L¹
            // norm exactly 1/2 and nilpotency index n.
            if n < 1 {
                return Err(Error::InvalidInput("l1_doubling_truncation needs n ≥ 1".into()));
            }
            let image: Vec<usize> = (0..=n).map(|j| j.saturating_sub(1)).collect();
            let map = FiniteMap::new(image)?;
            let operator = koopman_matrix(&map);
            let mu = FiniteMeasure::new((0..=n).map(|j| 0.5f64.powi(j as i32)).collect())?;
            Ok(GalleryInstance {
                name: name.into(),
                operator,
                norm: NormKind::L1(mu),
                unit: DVector::from_element(n + 1, 1.0),
                expected: GalleryExpectations {
                    spectrum: vec![(Complex64::new(0.0, 0.0), n), (one, 1)],
                    one_isolated: true,
                    dim_stable: n,
                    period: 1,
                    periodic: false,
                    eventually_periodic: Some((n, 1)),
                    nilpotency_index: Some(n),
                    operator_norm: 1.5,
                    fixes_unit: true,
                },
            })
        }
        other => Err(Error::UnknownGallery(format!(
            "{other}; known: {}",
            GALLERY_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specmat::{eigen, max_abs, operator_norm};
    use approx::assert_abs_diff_eq;

    fn map(image: &[usize]) -> FiniteMap {
        FiniteMap::new(image.to_vec()).unwrap()
    }

    #[test]
    fn koopman_examples() {
        // Constant map 0,1 → 0 gives [[1,0],[1,0]].
        let t = koopman_matrix(&map(&[0, 0]));
        let m = t.real_matrix();
        assert_eq!(
            (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
            (1.0, 0.0, 1.0, 0.0)
        );
        // Identity map → identity matrix.
        let id = koopman_matrix(&FiniteMap::identity(3).unwrap());
        assert!(max_abs(&(id.matrix() - specmat::identity(3))) == 0.0);
        // 3-cycle → cyclic permutation matrix with sup norm exactly 1 and
        // T𝟙 = 𝟙 exactly.
        let c3 = koopman_matrix(&map(&[1, 2, 0]));
        assert_eq!(operator_norm(c3.matrix(), &NormKind::Sup).unwrap(), 1.0);
        let ones = CVector::from_element(3, Complex64::new(1.0, 0.0));
        assert_eq!((c3.matrix() * &ones - &ones).norm(), 0.0);
    }

    #[test]
    fn weighted_composition_examples() {
        // diag(1/2, 1) as (identity, (1/2, 1)).
        let t = weighted_composition(&FiniteMap::identity(2).unwrap(), &[0.5, 1.0]).unwrap();
        assert_eq!(t.real_matrix()[(0, 0)], 0.5);
        assert_eq!(t.real_matrix()[(1, 1)], 1.0);

        // Zero weights put 0 in the spectrum.
        let z = weighted_composition(&map(&[1, 0]), &[0.0, 1.0]).unwrap();
        let report = eigen(z.matrix()).unwrap();
        assert!(report.contains(Complex64::new(0.0, 0.0), 1e-10));

        // 2-cycle with weights (2, 1/2): cycle product 1, σ = {1, −1}.
        let t = weighted_composition(&map(&[1, 0]), &[2.0, 0.5]).unwrap();
        let report = eigen(t.matrix()).unwrap();
        assert!(report.contains(Complex64::new(1.0, 0.0), 1e-10));
        assert!(report.contains(Complex64::new(-1.0, 0.0), 1e-10));
        assert_eq!(report.eigenvalues.len(), 2);

        // Negative weights are rejected.
        assert!(weighted_composition(&map(&[1, 0]), &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn action_law_on_basis_and_random_vectors() {
        let phi = map(&[1, 2, 3, 2, 0]);
        let w = [0.3, 1.7, 0.0, 2.5, 1.0];
        let t = weighted_composition(&phi, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..100 {
            let f = if trial < 5 {
                CVector::from_fn(5, |i, _| {
                    Complex64::new(if i == trial { 1.0 } else { 0.0 }, 0.0)
                })
            } else {
                CVector::from_fn(5, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                })
            };
            let via_matrix = t.matrix() * &f;
            let via_action = t.apply(&f);
            assert!((via_matrix - via_action).norm() <= 1e-12);
        }
    }

    #[test]
    fn lattice_gate_examples() {
        // [[1,0],[1,0]] is a lattice homomorphism.
        let t = koopman_matrix(&map(&[0, 0]));
        let res = check_lattice_homomorphism(t.matrix(), 64, 1).unwrap();
        assert!(res.is_lattice_hom);

        // Two nonzeros in a row: not one, with a witness; f = (1, −1) shows
        // |Tf| = (0, 1) against T|f| = (2, 1).
        let mut bad = CMatrix::zeros(2, 2);
        bad[(0, 0)] = Complex64::new(1.0, 0.0);
        bad[(0, 1)] = Complex64::new(1.0, 0.0);
        bad[(1, 1)] = Complex64::new(1.0, 0.0);
        let hand = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert!(modulus_deviation(&bad, &hand) > 1.0);
        let res = check_lattice_homomorphism(&bad, 64, 2).unwrap();
        assert!(!res.is_lattice_hom);
        let (f, dev) = res.witness.unwrap();
        assert!(dev > 1e-6);
        assert_abs_diff_eq!(modulus_deviation(&bad, &f), dev, epsilon = 1e-14);

        // A negative entry: rejected.
        let mut neg = CMatrix::zeros(2, 2);
        neg[(0, 1)] = Complex64::new(-1.0, 0.0);
        neg[(1, 0)] = Complex64::new(1.0, 0.0);
        let res = check_lattice_homomorphism(&neg, 64, 3).unwrap();
        assert!(!res.is_lattice_hom);
    }

    #[test]
    fn one_in_spectrum_examples() {
        assert!(one_in_spectrum_check(&specmat::identity(4)).unwrap());
        let swap = koopman_matrix(&map(&[1, 0]));
        assert!(one_in_spectrum_check(swap.matrix()).unwrap());
        // Weighted instance with one unimodular cycle and a tail.
        let t = weighted_composition(&map(&[1, 0, 0]), &[2.0, 0.5, 0.7]).unwrap();
        assert!(one_in_spectrum_check(t.matrix()).unwrap());
        // r(T) ≠ 1 violates the hypothesis.
        let half = weighted_composition(&FiniteMap::identity(2).unwrap(), &[0.5, 0.5]).unwrap();
        assert!(one_in_spectrum_check(half.matrix()).is_err());
    }

    #[test]
    fn quasi_interior_examples() {
        assert!(quasi_interior_check(&DVector::from_vec(vec![1.0, 1.0])));
        assert!(!quasi_interior_check(&DVector::from_vec(vec![1.0, 0.0])));
        assert!(quasi_interior_check(&DVector::from_vec(vec![0.1, 2.0, 3.0])));
    }

    #[test]
    fn spectral_radius_formula_agrees_with_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        for _ in 0..40 {
            let n = rng.gen_range(2..40);
            let image: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let phi = FiniteMap::new(image).unwrap();
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.6)).collect();
            let t = weighted_composition(&phi, &weights).unwrap();
            let cs = cycle_structure(&phi);
            let formula = t.spectral_radius_formula(&cs);
            let computed = eigen(t.matrix()).unwrap().spectral_radius;
            assert_abs_diff_eq!(formula, computed, epsilon = 1e-8);
        }
    }

    #[test]
    fn exact_decomposition_koopman_tail() {
        // 0→1→2→3→2: periodic part on {2,3}, preperiod 2, period 2; Π is the
        // 0/1 matrix of the phase-aligned collapse and P² = P exactly.
        let phi = map(&[1, 2, 3, 2]);
        let wco = koopman_matrix(&phi);
        let ex = exact_decomposition(&wco).unwrap();
        assert_eq!(ex.dim_periodic, 2);
        assert_eq!(ex.dim_stable, 2);
        assert_eq!(ex.period, 2);
        assert_eq!(ex.preperiod, 2);
        let p = &ex.projection;
        assert_eq!((p * p - p).abs().max(), 0.0);
        // Π commutes with T exactly.
        let t = wco.real_matrix();
        assert_eq!((&ex.complement * &t - &t * &ex.complement).abs().max(), 0.0);
        assert!(ex.peripheral_states[2] && ex.peripheral_states[3]);
        assert!(!ex.peripheral_states[0] && !ex.peripheral_states[1]);
    }

    #[test]
    fn exact_decomposition_weighted_interior_cycle() {
        // Two 2-cycles: one with weight product 1 (peripheral), one with
        // product 0.25 (interior), plus a tail into the peripheral one.
        let phi = map(&[1, 0, 3, 2, 0]);
        let w = [2.0, 0.5, 0.5, 0.5, 0.8];
        let wco = weighted_composition(&phi, &w).unwrap();
        let ex = exact_decomposition(&wco).unwrap();
        assert_eq!(ex.dim_periodic, 2);
        assert_eq!(ex.dim_stable, 3);
        assert_eq!(ex.period, 2);
        assert_eq!(ex.preperiod, 1);
        let p = &ex.projection;
        assert!((p * p - p).abs().max() < 1e-14);
        let t = wco.real_matrix();
        assert!((&ex.complement * &t - &t * &ex.complement).abs().max() < 1e-14);
        // Interior-cycle states belong to the stable support.
        assert!(!ex.peripheral_states[2] && !ex.peripheral_states[3]);
        assert!(ex.peripheral_states[0] && ex.peripheral_states[1]);
    }

    #[test]
    fn gallery_instances_are_well_formed() {
        for name in GALLERY_NAMES {
            let g = gallery(name, 8).unwrap();
            assert_eq!(g.name, name);
            let norm = operator_norm(g.operator.matrix(), &g.norm).unwrap();
            assert_abs_diff_eq!(norm, g.expected.operator_norm, epsilon = 1e-12);
            let fixes = {
                let ones =
                    CVector::from_fn(g.operator.n(), |i, _| Complex64::new(g.unit[i], 0.0));
                (g.operator.matrix() * &ones - &ones).norm() == 0.0
            };
            assert_eq!(fixes, g.expected.fixes_unit, "{name}");
        }
        assert!(gallery("unknown", 4).is_err());
    }

    #[test]
    fn doubling_truncation_tail_norm_is_half() {
        // Restriction to the tail ideal {f : f(0) = 0}: drop row/column 0;
        // its L¹(μ) norm is exactly 1/2 at every truncation size.
        for n in [2usize, 5, 16] {
            let g = gallery("l1_doubling_truncation", n).unwrap();
            let t = g.operator.real_matrix();
            let mu = match &g.norm {
                NormKind::L1(mu) => mu.clone(),
                _ => unreachable!(),
            };
            let sub = t.view((1, 1), (n, n)).clone_owned();
            let sub_mu = FiniteMeasure::new(mu.weights()[1..].to_vec()).unwrap();
            let norm = operator_norm(&specmat::to_complex(&sub), &NormKind::L1(sub_mu)).unwrap();
            assert_abs_diff_eq!(norm, 0.5, epsilon = 1e-14);
        }
    }
}
