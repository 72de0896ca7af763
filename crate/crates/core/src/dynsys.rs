//! Finite dynamical systems (functional graphs) and their exact combinatorial
//! analysis: cycles, tail heights, minimal eventual-periodicity pairs and
//! measure preservation.
//!
//! Everything in this module is exact integer combinatorics. The spectral
//! pipeline is validated against these results, so no operation here may
//! depend on floating-point linear algebra.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Absolute per-atom tolerance for measure equality checks. Measures are
/// exact rationals in input files where possible; the tolerance only absorbs
/// float parsing.
pub const MEASURE_TOL: f64 = 1e-12;

/// A self-map φ of the finite state set {0, …, n−1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteMap {
    image: Vec<usize>,
}

impl FiniteMap {
    /// Builds a map from its image table: `image[i] = φ(i)`.
    ///
    /// Empty maps are rejected; spectra of empty operators are undefined
    /// downstream.
    pub fn new(image: Vec<usize>) -> Result<Self> {
        if image.is_empty() {
            return Err(Error::InvalidInput("finite map needs at least one state".into()));
        }
        let n = image.len();
        if let Some((i, &y)) = image.iter().enumerate().find(|(_, &y)| y >= n) {
            return Err(Error::InvalidInput(format!(
                "image[{i}] = {y} is out of range for n = {n}"
            )));
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    /// The n-cycle 0 → 1 → ⋯ → n−1 → 0.
    pub fn full_cycle(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| (i + 1) % n.max(1)).collect())
    }

    pub fn constant(n: usize, target: usize) -> Result<Self> {
        if target >= n {
            return Err(Error::InvalidInput(format!("target {target} out of range for n = {n}")));
        }
        Self::new(vec![target; n])
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.n()];
        for &y in &self.image {
            if seen[y] {
                return false;
            }
            seen[y] = true;
        }
        true
    }

    /// self ∘ other, i.e. x ↦ self(other(x)).
    pub fn compose(&self, other: &FiniteMap) -> FiniteMap {
        debug_assert_eq!(self.n(), other.n());
        FiniteMap {
            image: other.image.iter().map(|&y| self.image[y]).collect(),
        }
    }

    /// φ^k by binary exponentiation on composition; φ^0 is the identity.
    pub fn iterate(&self, mut k: u128) -> FiniteMap {
        let mut result = FiniteMap {
            image: (0..self.n()).collect(),
        };
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = base.compose(&result);
            }
            k >>= 1;
            if k > 0 {
                base = base.compose(&base);
            }
        }
        result
    }
}

/// Exact cycle decomposition of a functional graph, with the minimal pair
/// (preperiod k, period p) such that φ^(k+p) = φ^k.
#[derive(Debug, Clone)]
pub struct CycleStructure {
    /// Sorted list of all periodic states (union of the cycles).
    pub periodic_points: Vec<usize>,
    /// Disjoint cycles, each listed in orbit order starting at its smallest
    /// state.
    pub cycles: Vec<Vec<usize>>,
    /// `tail_height[i]` = number of steps from i to its nearest periodic
    /// point (0 iff i is periodic).
    pub tail_height: Vec<usize>,
    /// Minimal k with φ^(k+p) = φ^k: the maximum tail height.
    pub preperiod: usize,
    /// Minimal p ≥ 1 with φ^(k+p) = φ^k: the lcm of the cycle lengths.
    pub period: u128,
    /// `cycle_len_reached[x]` = length of the cycle the orbit of x falls into.
    pub cycle_len_reached: Vec<usize>,
}

impl CycleStructure {
    pub fn is_periodic_point(&self, x: usize) -> bool {
        self.tail_height[x] == 0
    }

    pub fn cycle_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.cycles.iter().map(|c| c.len())
    }

    /// Length of the cycle that state x eventually falls into.
    pub fn cycle_length_of(&self, x: usize) -> usize {
        self.cycle_len_reached[x]
    }
}

/// Exact cycle decomposition; total on valid maps.
pub fn cycle_structure(map: &FiniteMap) -> CycleStructure {
    let n = map.n();

    // Locate cycles with the three-colour walk: follow the orbit from each
    // unvisited state, recording the path; a revisit inside the current path
    // closes a new cycle, a hit on an older path merges into it.
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unvisited,
        OnPath,
        Done,
    }
    let mut state = vec![State::Unvisited; n];
    let mut on_cycle = vec![false; n];
    let mut cycles: Vec<Vec<usize>> = Vec::new();

    for start in 0..n {
        if state[start] != State::Unvisited {
            continue;
        }
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == State::Unvisited {
            state[v] = State::OnPath;
            path.push(v);
            v = map.apply(v);
        }
        if state[v] == State::OnPath {
            // New cycle: everything on the path from the first occurrence of
            // v onward is periodic.
            let cut = path.iter().position(|&u| u == v).expect("v is on the current path");
            let mut cycle: Vec<usize> = path[cut..].to_vec();
            for &u in &cycle {
                on_cycle[u] = true;
            }
            // Canonical orientation: start at the smallest state.
            let min_pos = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, &u)| u)
                .map(|(i, _)| i)
                .expect("cycle is nonempty");
            cycle.rotate_left(min_pos);
            cycles.push(cycle);
        }
        for u in path {
            state[u] = State::Done;
        }
    }
    cycles.sort_by_key(|c| c[0]);

    // Tail heights by forward walk with memoisation: h(x) = 0 on cycles,
    // else 1 + h(φ(x)).
    let mut tail_height = vec![usize::MAX; n];
    let mut cycle_len_reached = vec![0usize; n];
    for cycle in &cycles {
        for &u in cycle {
            tail_height[u] = 0;
            cycle_len_reached[u] = cycle.len();
        }
    }
    let mut stack = Vec::new();
    for x in 0..n {
        if tail_height[x] != usize::MAX {
            continue;
        }
        let mut v = x;
        while tail_height[v] == usize::MAX {
            stack.push(v);
            v = map.apply(v);
        }
        let mut h = tail_height[v];
        let reached = cycle_len_reached[v];
        while let Some(u) = stack.pop() {
            h += 1;
            tail_height[u] = h;
            cycle_len_reached[u] = reached;
        }
    }

    let preperiod = tail_height.iter().copied().max().unwrap_or(0);
    let period = cycles.iter().fold(1u128, |acc, c| lcm_u128(acc, c.len() as u128));

    let mut periodic_points: Vec<usize> = cycles.iter().flatten().copied().collect();
    periodic_points.sort_unstable();

    CycleStructure {
        periodic_points,
        cycles,
        tail_height,
        preperiod,
        period,
        cycle_len_reached,
    }
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd_u128(b, a % b)
    }
}

pub(crate) fn lcm_u128(a: u128, b: u128) -> u128 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd_u128(a, b) * b
}

/// Minimal (k, p) with φ^(k+p) = φ^k; always exists on finite state sets.
pub fn eventually_periodic_pair(map: &FiniteMap) -> (usize, u128) {
    let cs = cycle_structure(map);
    (cs.preperiod, cs.period)
}

/// φ is periodic ⟺ its preperiod is 0 ⟺ φ is a bijection.
pub fn is_periodic_map(map: &FiniteMap) -> bool {
    map.is_bijective()
}

/// A strictly positive finite measure on {0, …, n−1}.
#[derive(Debug, Clone)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
    total: f64,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("measure needs at least one atom".into()));
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "measure atom {i} = {w} is not strictly positive and finite"
            )));
        }
        let total = weights.iter().sum();
        Ok(Self { weights, total })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// Uniform probability measure (atoms 1/n).
    pub fn uniform_probability(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Rescales so the total mass is 1.
    pub fn normalized(&self) -> FiniteMeasure {
        let weights = self.weights.iter().map(|w| w / self.total).collect();
        FiniteMeasure { weights, total: 1.0 }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= MEASURE_TOL
    }
}

/// Exact finite-dimensional measure preservation: μ(φ⁻¹{y}) = μ(y) for every
/// state y, within [`MEASURE_TOL`] per atom.
pub fn is_measure_preserving(map: &FiniteMap, mu: &FiniteMeasure) -> Result<bool> {
    if map.n() != mu.n() {
        return Err(Error::DimensionMismatch(format!(
            "map has {} states but measure has {} atoms",
            map.n(),
            mu.n()
        )));
    }
    let mut pullback = vec![0.0; map.n()];
    for x in 0..map.n() {
        pullback[map.apply(x)] += mu.weight(x);
    }
    Ok(pullback
        .iter()
        .zip(mu.weights())
        .all(|(p, w)| (p - w).abs() <= MEASURE_TOL))
}

/// Brute-force minimal eventual-periodicity pair by direct iteration of φ
/// until a repeated power appears. Exponential-free but O(n·(k+p)) — this is
/// the independent oracle used by the tests, kept here so other crates'
/// property suites can reuse it.
pub fn brute_force_minimal_pair(map: &FiniteMap) -> (usize, u128) {
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut power = FiniteMap::identity(map.n()).expect("n >= 1");
    let mut m = 0usize;
    loop {
        if let Some(&first) = seen.get(power.image()) {
            return (first, (m - first) as u128);
        }
        seen.insert(power.image().to_vec(), m);
        power = map.compose(&power);
        m += 1;
    }
}
