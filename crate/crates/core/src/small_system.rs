//! The finite-dimensional system coupled to the reservoir: energies, coupling
//! matrix, the doubled Liouvillean `L_S = H_S⊗1 − 1⊗H_S`, its eigenvalue index
//! sets and the coupling constant δ₀.

use crate::error::{invalid, NessError, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Differences closer than this are treated as the same eigenvalue of `L_S`.
pub const PAIR_TOL: f64 = 1e-9;

/// Hermiticity tolerance on the coupling matrix.
const HERMITIAN_TOL: f64 = 1e-14;

/// Energies `E_0 < … < E_{d−1}` of `H_S` and the coupling `Y`, both in the
/// eigenbasis of `H_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSystem {
    energies: Vec<f64>,
    coupling: DMatrix<Complex64>,
}

impl SmallSystem {
    pub fn new(energies: Vec<f64>, coupling: DMatrix<Complex64>) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(invalid("small system needs at least one level"));
        }
        if coupling.nrows() != d || coupling.ncols() != d {
            return Err(invalid(format!(
                "coupling must be {d}x{d}, got {}x{}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) || coupling.iter().any(|y| !y.re.is_finite() || !y.im.is_finite()) {
            return Err(invalid("non-finite entries in small system"));
        }
        for i in 0..d {
            for j in 0..d {
                if (coupling[(i, j)] - coupling[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(invalid(format!("coupling is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(SmallSystem { energies, coupling })
    }

    /// Real symmetric coupling.
    pub fn with_real_coupling(energies: Vec<f64>, coupling: DMatrix<f64>) -> Result<Self> {
        SmallSystem::new(energies, coupling.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.coupling
    }

    /// `E_{n,m} = E_n − E_m`.
    pub fn transition(&self, n: usize, m: usize) -> f64 {
        self.energies[n] - self.energies[m]
    }

    /// Strictly ascending energies, i.e. no degenerate level.
    pub fn is_nondegenerate(&self) -> bool {
        self.energies.windows(2).all(|w| w[0] < w[1])
    }

    pub fn shifted(&self, c: f64) -> SmallSystem {
        SmallSystem {
            energies: self.energies.iter().map(|e| e + c).collect(),
            coupling: self.coupling.clone(),
        }
    }
}

/// One eigenvalue of `L_S` together with all pairs `(n, m)` realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleEigenvalue {
    pub value: f64,
    /// Pairs in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleSpectrum {
    /// Ascending in `value`.
    pub eigenvalues: Vec<LiouvilleEigenvalue>,
}

impl LiouvilleSpectrum {
    pub fn find(&self, e: f64) -> Option<&LiouvilleEigenvalue> {
        self.eigenvalues.iter().find(|b| (b.value - e).abs() <= PAIR_TOL)
    }

    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|b| b.value).collect()
    }
}

pub fn liouville_spectrum(sys: &SmallSystem) -> Result<LiouvilleSpectrum> {
    let d = sys.dim();
    let scale = sys.energies.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    // Differences agreeing to rounding are equal; anything else within
    // PAIR_TOL is a near-degeneracy we refuse to merge silently.
    let round_tol = 64.0 * f64::EPSILON * scale;
    let mut diffs: Vec<(f64, (usize, usize))> = (0..d)
        .flat_map(|n| (0..d).map(move |m| (n, m)))
        .map(|(n, m)| (sys.transition(n, m), (n, m)))
        .collect();
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut eigenvalues: Vec<LiouvilleEigenvalue> = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for (value, pair) in diffs {
        if let Some(last) = eigenvalues.last_mut() {
            let prev = *members.last().expect("bucket non-empty");
            let gap = value - prev;
            if gap <= round_tol {
                last.pairs.push(pair);
                members.push(value);
                continue;
            }
            if gap <= PAIR_TOL {
                return Err(NessError::AmbiguousSpectrum { a: prev, b: value });
            }
            finish_bucket(last, &members);
        }
        eigenvalues.push(LiouvilleEigenvalue { value, pairs: vec![pair] });
        members = vec![value];
    }
    if let Some(last) = eigenvalues.last_mut() {
        finish_bucket(last, &members);
    }
    Ok(LiouvilleSpectrum { eigenvalues })
}

fn finish_bucket(bucket: &mut LiouvilleEigenvalue, members: &[f64]) {
    bucket.pairs.sort();
    if bucket.pairs.iter().any(|(n, m)| n == m) {
        bucket.value = 0.0;
    } else {
        bucket.value = members.iter().sum::<f64>() / members.len() as f64;
    }
}

/// The index sets `N_l^{(j)} = {i : E_{i,j} = e}` and `N_r^{(i)} = {j : E_{i,j} = e}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    pub e: f64,
    /// `left[j] = N_l^{(j)}`.
    pub left: Vec<Vec<usize>>,
    /// `right[i] = N_r^{(i)}`.
    pub right: Vec<Vec<usize>>,
    pub n_l: Vec<usize>,
    pub n_r: Vec<usize>,
    pub n_l_complement: Vec<usize>,
    pub n_r_complement: Vec<usize>,
}

pub fn index_sets(sys: &SmallSystem, e: f64) -> Result<IndexSets> {
    let spectrum = liouville_spectrum(sys)?;
    let bucket = spectrum.find(e).ok_or(NessError::NotAnEigenvalue(e))?;
    let d = sys.dim();
    let mut left = vec![Vec::new(); d];
    let mut right = vec![Vec::new(); d];
    for &(i, j) in &bucket.pairs {
        left[j].push(i);
        right[i].push(j);
    }
    let n_l: Vec<usize> = (0..d).filter(|&i| !right[i].is_empty()).collect();
    let n_r: Vec<usize> = (0..d).filter(|&j| !left[j].is_empty()).collect();
    let n_l_complement = (0..d).filter(|i| !n_l.contains(i)).collect();
    let n_r_complement = (0..d).filter(|j| !n_r.contains(j)).collect();
    Ok(IndexSets { e: bucket.value, left, right, n_l, n_r, n_l_complement, n_r_complement })
}

/// The two minima entering `2δ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta0 {
    /// `min_{n∈N_l} inf σ(p_{N_r^{(n)}} Ȳ p_{N_r^c} Ȳ p_{N_r^{(n)}})`.
    pub right_min: f64,
    /// `min_{m∈N_r} inf σ(p_{N_l^{(m)}} Y p_{N_l^c} Y p_{N_l^{(m)}})`.
    pub left_min: f64,
}

impl Delta0 {
    pub fn value(&self) -> f64 {
        0.5 * (self.right_min + self.left_min)
    }
}

/// `p_A X p_B X p_A` restricted to the range of `p_A`.
fn compressed_square(x: &DMatrix<Complex64>, range: &[usize], middle: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(range.len(), range.len(), |r, c| {
        middle
            .iter()
            .map(|&j| x[(range[r], j)] * x[(j, range[c])])
            .sum()
    })
}

pub(crate) fn min_hermitian_eigenvalue(m: DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn delta0_parts(sys: &SmallSystem, e: f64) -> Result<Delta0> {
    if e.abs() <= PAIR_TOL {
        return Err(NessError::NotApplicable("delta0 is defined only for nonzero eigenvalues"));
    }
    let sets = index_sets(sys, e)?;
    let y = sys.coupling();
    let y_bar = y.map(|z| z.conj());
    let right_min = sets
        .n_l
        .iter()
        .map(|&n| min_hermitian_eigenvalue(compressed_square(&y_bar, &sets.right[n], &sets.n_r_complement)))
        .fold(f64::INFINITY, f64::min);
    let left_min = sets
        .n_r
        .iter()
        .map(|&m| min_hermitian_eigenvalue(compressed_square(y, &sets.left[m], &sets.n_l_complement)))
        .fold(f64::INFINITY, f64::min);
    Ok(Delta0 { right_min, left_min })
}

pub fn delta0(sys: &SmallSystem, e: f64) -> Result<f64> {
    delta0_parts(sys, e).map(|d| d.value())
}

/// `c_n = e^{−βE_n/2}/√Z_β`, computed relative to the lowest energy.
pub fn gibbs_vector(sys: &SmallSystem, beta: f64) -> Result<DVector<f64>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be positive and finite, got {beta}")));
    }
    let e_min = sys.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let c = DVector::from_iterator(
        sys.dim(),
        sys.energies.iter().map(|e| (-0.5 * beta * (e - e_min)).exp()),
    );
    let norm = c.norm();
    Ok(c / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference(b: f64) -> SmallSystem {
        SmallSystem::with_real_coupling(vec![-b, b], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    fn ones3() -> SmallSystem {
        SmallSystem::with_real_coupling(vec![0.0, 1.0, 2.5], DMatrix::from_element(3, 3, 1.0)).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(SmallSystem::with_real_coupling(vec![0.0, 1.0], y).is_err());
        let y = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0),
        ]);
        assert!(SmallSystem::new(vec![0.0, 1.0], y).is_err());
    }

    #[test]
    fn reference_spectrum() {
        let s = liouville_spectrum(&reference(0.1)).unwrap();
        let v = s.values();
        assert_eq!(v.len(), 3);
        assert!((v[0] + 0.2).abs() < 1e-15 && v[1] == 0.0 && (v[2] - 0.2).abs() < 1e-15);
        assert_eq!(s.eigenvalues[1].pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(s.eigenvalues[2].pairs, vec![(1, 0)]);
    }

    #[test]
    fn trivial_and_three_level_spectra() {
        let one = SmallSystem::with_real_coupling(vec![0.3], DMatrix::from_element(1, 1, 0.0)).unwrap();
        let s = liouville_spectrum(&one).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert_eq!(s.eigenvalues[0].value, 0.0);
        assert_eq!(s.eigenvalues[0].pairs, vec![(0, 0)]);

        let s = liouville_spectrum(&ones3()).unwrap();
        let expected = [-2.5, -1.5, -1.0, 0.0, 1.0, 1.5, 2.5];
        assert_eq!(s.values().len(), 7);
        for (a, b) in s.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn near_degenerate_differences_are_ambiguous() {
        let sys = SmallSystem::with_real_coupling(vec![0.0, 1.0, 2.0 + 1e-10], DMatrix::from_element(3, 3, 1.0)).unwrap();
        assert!(matches!(liouville_spectrum(&sys), Err(NessError::AmbiguousSpectrum { .. })));
        // exact ladder merges
        let sys = SmallSystem::with_real_coupling(vec![0.1, 0.2, 0.3], DMatrix::from_element(3, 3, 1.0)).unwrap();
        let s = liouville_spectrum(&sys).unwrap();
        assert_eq!(s.values().len(), 5);
        assert_eq!(s.find(0.1).unwrap().pairs, vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn reference_index_sets() {
        let sets = index_sets(&reference(0.1), 0.2).unwrap();
        assert_eq!(sets.left, vec![vec![1], vec![]]);
        assert_eq!(sets.right, vec![vec![], vec![0]]);
        assert_eq!(sets.n_l, vec![1]);
        assert_eq!(sets.n_r, vec![0]);
        assert_eq!(sets.n_l_complement, vec![0]);
        assert_eq!(sets.n_r_complement, vec![1]);
        assert!(matches!(index_sets(&reference(0.1), 0.3), Err(NessError::NotAnEigenvalue(_))));
    }

    #[test]
    fn zero_eigenvalue_index_sets_are_diagonal() {
        let sets = index_sets(&ones3(), 0.0).unwrap();
        for n in 0..3 {
            assert_eq!(sets.left[n], vec![n]);
            assert_eq!(sets.right[n], vec![n]);
        }
        let sets = index_sets(&ones3(), 1.0).unwrap();
        assert_eq!(sets.n_l, vec![1]);
        assert_eq!(sets.n_r, vec![0]);
        assert!(!sets.n_l_complement.is_empty() && !sets.n_r_complement.is_empty());
    }

    #[test]
    fn reference_delta0_is_one() {
        let sys = reference(0.1);
        assert!((delta0(&sys, 0.2).unwrap() - 1.0).abs() <= 1e-12);
        assert!((delta0(&sys, -0.2).unwrap() - 1.0).abs() <= 1e-12);
        assert!(matches!(delta0(&sys, 0.0), Err(NessError::NotApplicable(_))));
    }

    #[test]
    fn diagonal_coupling_gives_zero_delta0() {
        let sys = SmallSystem::with_real_coupling(vec![0.0, 1.0, 2.5], DMatrix::from_diagonal_element(3, 3, 0.7)).unwrap();
        for e in [1.0, -1.5, 2.5] {
            assert_eq!(delta0(&sys, e).unwrap(), 0.0);
        }
    }

    #[test]
    fn three_level_delta0_by_hand() {
        // e = 1: only pair (1,0). N_l = {1}, N_r = {0}, N_r^c = {1,2}, N_l^c = {0,2}.
        // right: n=1, range N_r^{(1)} = {0}: Σ_{j∈{1,2}} Ȳ_{0j}Ȳ_{j0} = 2.
        // left:  m=0, range N_l^{(0)} = {1}: Σ_{j∈{0,2}} Y_{1j}Y_{j1} = 2.
        let parts = delta0_parts(&ones3(), 1.0).unwrap();
        assert!((parts.right_min - 2.0).abs() < 1e-14);
        assert!((parts.left_min - 2.0).abs() < 1e-14);
        assert!((parts.value() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gibbs_examples() {
        let b = 0.1;
        let beta = 1.7;
        let c = gibbs_vector(&reference(b), beta).unwrap();
        let z = (beta * b).exp() + (-beta * b).exp();
        assert!((c[0] - (beta * b / 2.0).exp() / z.sqrt()).abs() < 1e-15);
        assert!((c[1] - (-beta * b / 2.0).exp() / z.sqrt()).abs() < 1e-15);

        let c = gibbs_vector(&ones3(), 1e-12).unwrap();
        for x in c.iter() {
            assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        }
        assert!(gibbs_vector(&ones3(), 0.0).is_err());
        // large beta does not overflow
        let c = gibbs_vector(&SmallSystem::with_real_coupling(vec![-500.0, 500.0], DMatrix::from_element(2, 2, 1.0)).unwrap(), 10.0).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15 && c[1] >= 0.0);
    }

    fn random_system() -> impl Strategy<Value = SmallSystem> {
        (2usize..5).prop_flat_map(|d| {
            (
                proptest::collection::vec(0.05f64..1.0, d),
                proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d),
            )
                .prop_map(move |(gaps, ys)| {
                    let mut e = Vec::with_capacity(d);
                    let mut acc = -0.3;
                    for g in gaps {
                        // irrational-looking increments keep differences distinct
                        acc += g * std::f64::consts::SQRT_2;
                        e.push(acc);
                    }
                    let mut y = DMatrix::from_fn(d, d, |i, j| Complex64::new(ys[i * d + j].0, ys[i * d + j].1));
                    y = (&y + y.adjoint()) * Complex64::new(0.5, 0.0);
                    for i in 0..d {
                        y[(i, i)].im = 0.0;
                    }
                    SmallSystem::new(e, y).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn buckets_partition_all_pairs(sys in random_system()) {
            if let Ok(spec) = liouville_spectrum(&sys) {
                let d = sys.dim();
                let mut all: Vec<(usize, usize)> = spec.eigenvalues.iter().flat_map(|b| b.pairs.clone()).collect();
                all.sort();
                let expected: Vec<(usize, usize)> = (0..d).flat_map(|n| (0..d).map(move |m| (n, m))).collect();
                prop_assert_eq!(all, expected);
                let zero = spec.find(0.0).unwrap();
                for n in 0..d {
                    prop_assert!(zero.pairs.contains(&(n, n)));
                }
            }
        }

        #[test]
        fn delta0_shift_invariant_and_psd(sys in random_system(), shift in -3.0f64..3.0) {
            if let Ok(spec) = liouville_spectrum(&sys) {
                let shifted = sys.shifted(shift);
                for e in spec.values().into_iter().filter(|e| *e != 0.0) {
                    let a = delta0_parts(&sys, e).unwrap();
                    prop_assert!(a.left_min >= -1e-12 && a.right_min >= -1e-12);
                    if let Ok(b) = delta0(&shifted, e) {
                        prop_assert!((a.value() - b).abs() < 1e-10);
                    }
                }
            }
        }

        #[test]
        fn gibbs_positive_decreasing_normalized(sys in random_system(), beta in 0.01f64..50.0) {
            let c = gibbs_vector(&sys, beta).unwrap();
            prop_assert!((c.norm_squared() - 1.0).abs() <= 1e-14);
            prop_assert!(c.iter().all(|x| *x > 0.0));
            for w in c.as_slice().windows(2) {
                prop_assert!(w[0] > w[1]);
            }
        }
    }
}
