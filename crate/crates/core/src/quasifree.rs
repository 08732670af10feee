//! The two-temperature quasi-free steady state: momentum occupation, the
//! doubled form-factor vectors, two-point functions and determinantal
//! n-point functions.

use crate::dispersion::{t_of_k, DispersionParams};
use crate::error::{invalid, NessError, Result};
use crate::jet::Jet;
use crate::quadrature::adaptive;
use crate::rescaling::RadialFunction;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePair {
    beta_plus: f64,
    beta_minus: f64,
}

impl TemperaturePair {
    pub fn new(beta_plus: f64, beta_minus: f64) -> Result<Self> {
        for (name, b) in [("beta_plus", beta_plus), ("beta_minus", beta_minus)] {
            if !(b > 0.0 && b.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {b}")));
            }
        }
        Ok(TemperaturePair { beta_plus, beta_minus })
    }

    pub fn equilibrium(beta: f64) -> Result<Self> {
        TemperaturePair::new(beta, beta)
    }

    pub fn beta_plus(&self) -> f64 {
        self.beta_plus
    }

    pub fn beta_minus(&self) -> f64 {
        self.beta_minus
    }

    pub fn is_equilibrium(&self) -> bool {
        self.beta_plus == self.beta_minus
    }

    /// Inverse temperature governing momentum `k`: `β₊` on `[0, π)`, `β₋` on `[−π, 0)`.
    pub fn beta_at(&self, k: f64) -> f64 {
        if k >= 0.0 {
            self.beta_plus
        } else {
            self.beta_minus
        }
    }
}

/// `(1 + e^x)^{-1}` without overflow.
pub fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Occupation `ρ(k)` and `1 − ρ(k)`, each evaluated without cancellation.
pub fn occupation(k: f64, temps: &TemperaturePair, params: &DispersionParams) -> (f64, f64) {
    let x = temps.beta_at(k) * params.omega(k);
    (fermi(x), fermi(-x))
}

pub fn rho_of_k(k: f64, temps: &TemperaturePair, params: &DispersionParams) -> f64 {
    occupation(k, temps, params).0
}

/// `max_k |ρ(k) − ρ(−k)|` over `n` midpoints of `(0, π)`.
pub fn momentum_asymmetry(temps: &TemperaturePair, params: &DispersionParams, n: usize) -> f64 {
    (0..n)
        .map(|i| {
            let k = PI * (i as f64 + 0.5) / n as f64;
            (rho_of_k(k, temps, params) - rho_of_k(-k, temps, params)).abs()
        })
        .fold(0.0, f64::max)
}

/// A form factor, stored in the half-angle coordinate `t = tan(k/2)`.
#[derive(Debug, Clone)]
pub struct FormFactor {
    radial: RadialFunction,
    support: Vec<(f64, f64)>,
}

/// `b(x) = exp(1 − 1/(1 − x²))` on `(−1, 1)`: a C∞ bump with peak value 1.
fn bump_jet(x: Jet) -> Jet {
    let one_minus = x * x * -1.0 + 1.0;
    (one_minus.recip() * -1.0 + 1.0).exp()
}

/// `ψ(x)/(ψ(x) + ψ(1−x))`, `ψ(x) = e^{−1/x}`: smooth step from 0 at x ≤ 0 to 1 at x ≥ 1.
fn step_jet(x: Jet) -> Jet {
    let v = x.value().re;
    if v <= 0.0 {
        return Jet::zero();
    }
    if v >= 1.0 {
        return Jet::real_constant(1.0);
    }
    let psi = |y: Jet| (y.recip() * -1.0).exp();
    let a = psi(x);
    let b = psi(x * -1.0 + 1.0);
    a.div(&(a + b))
}

impl FormFactor {
    /// Wraps a radial function whose values vanish outside `support` (in `t`).
    pub fn from_radial(radial: RadialFunction, support: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &support {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(invalid(format!("bad support interval [{a}, {b}]")));
            }
        }
        Ok(FormFactor { radial, support })
    }

    pub fn zero() -> Self {
        FormFactor {
            radial: RadialFunction::from_jet(3, Some(Vec::new()), |_| Jet::zero()),
            support: Vec::new(),
        }
    }

    /// Sum of unit-height C∞ bumps, one per interval in `t`.
    pub fn bump(intervals: &[(f64, f64)]) -> Result<Self> {
        let iv = intervals.to_vec();
        let rule_iv = iv.clone();
        let radial = RadialFunction::from_jet(3, Some(iv.clone()), move |t| {
            let mut acc = Jet::zero();
            for &(a, b) in &rule_iv {
                if t > a && t < b {
                    let x = (Jet::variable(t) * 2.0 + (-(a + b))) * (1.0 / (b - a));
                    acc = acc + bump_jet(x);
                }
            }
            acc
        });
        FormFactor::from_radial(radial, iv)
    }

    /// C∞ plateau: 1 on `flat`, 0 outside `support`, smooth steps in between.
    /// Each entry is `(support, flat)` with `support.0 < flat.0 ≤ flat.1 < support.1`.
    pub fn plateau(pieces: &[((f64, f64), (f64, f64))]) -> Result<Self> {
        for &((a, d), (b, c)) in pieces {
            if !(a < b && b <= c && c < d) {
                return Err(invalid(format!("plateau needs a < b <= c < d, got {a}, {b}, {c}, {d}")));
            }
        }
        let p = pieces.to_vec();
        let support: Vec<(f64, f64)> = p.iter().map(|&(s, _)| s).collect();
        let radial = RadialFunction::from_jet(3, Some(support.clone()), move |t| {
            let mut acc = Jet::zero();
            for &((a, d), (b, c)) in &p {
                if t > a && t < d {
                    let x = Jet::variable(t);
                    let up = step_jet((x + (-a)) * (1.0 / (b - a)));
                    let down = step_jet((x * -1.0 + d) * (1.0 / (d - c)));
                    acc = acc + up * down;
                }
            }
            acc
        });
        FormFactor::from_radial(radial, support)
    }

    /// Indicator of a union of intervals; discontinuous, so values only.
    pub fn indicator(intervals: &[(f64, f64)]) -> Result<Self> {
        let iv = intervals.to_vec();
        let rule_iv = iv.clone();
        let radial = RadialFunction::from_values(Some(iv.clone()), move |t| {
            let inside = rule_iv.iter().any(|&(a, b)| t >= a && t <= b);
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        });
        FormFactor::from_radial(radial, iv)
    }

    /// The same form factor multiplied by `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> FormFactor {
        FormFactor {
            radial: self.radial.scale(Complex64::from_polar(1.0, phi)),
            support: self.support.clone(),
        }
    }

    pub fn radial(&self) -> &RadialFunction {
        &self.radial
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn eval_t(&self, t: f64) -> Complex64 {
        if !self.support.iter().any(|&(a, b)| t >= a && t <= b) {
            return Complex64::default();
        }
        self.radial.eval(t)
    }

    /// `f(k) = f_t(tan(k/2))`; the point `k = −π` lies outside every bounded support.
    pub fn eval_k(&self, k: f64) -> Complex64 {
        match t_of_k(k) {
            Ok(t) => self.eval_t(t),
            Err(_) => Complex64::default(),
        }
    }

    /// `f̄(k)`, conjugation in the momentum representation.
    pub fn eval_k_conj(&self, k: f64) -> Complex64 {
        self.eval_k(k).conj()
    }
}

/// `g₁¹, g₁², g₂¹, g₂²` at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubledVectors {
    pub g1_1: Complex64,
    pub g1_2: Complex64,
    pub g2_1: Complex64,
    pub g2_2: Complex64,
}

impl DoubledVectors {
    /// `(g₁ⁱ, g₂ⁱ)` for copy `i ∈ {1, 2}`.
    pub fn copy(&self, i: usize) -> (Complex64, Complex64) {
        match i {
            1 => (self.g1_1, self.g2_1),
            2 => (self.g1_2, self.g2_2),
            _ => panic!("copy index must be 1 or 2"),
        }
    }
}

pub fn doubled_vectors(k: f64, f: &FormFactor, temps: &TemperaturePair, params: &DispersionParams) -> DoubledVectors {
    let (rho, hole) = occupation(k, temps, params);
    let (sr, sh) = (rho.sqrt(), hole.sqrt());
    let fk = f.eval_k(k);
    let fb = fk.conj();
    DoubledVectors { g1_1: fk * sh, g1_2: fb * sr, g2_1: fk * sr, g2_2: fb * sh }
}

/// Two-point matrix `M[m][n] = ⟨a*(δ_m) a(δ_n)⟩` on a window of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub sites: Vec<i64>,
    pub matrix: DMatrix<Complex64>,
}

impl CovarianceMatrix {
    pub fn new(sites: Vec<i64>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != sites.len() || matrix.ncols() != sites.len() {
            return Err(invalid("covariance dimension does not match window"));
        }
        Ok(CovarianceMatrix { sites, matrix })
    }

    pub fn index_of(&self, site: i64) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    pub fn entry(&self, m: i64, n: i64) -> Result<Complex64> {
        let i = self.index_of(m).ok_or(NessError::WindowTooSmall(m))?;
        let j = self.index_of(n).ok_or(NessError::WindowTooSmall(n))?;
        Ok(self.matrix[(i, j)])
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Sub-matrix on a subset of the window, in the given order.
    pub fn restrict(&self, sites: &[i64]) -> Result<CovarianceMatrix> {
        let idx: Vec<usize> = sites
            .iter()
            .map(|&s| self.index_of(s).ok_or(NessError::WindowTooSmall(s)))
            .collect::<Result<_>>()?;
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.matrix[(idx[r], idx[c])]);
        CovarianceMatrix::new(sites.to_vec(), m)
    }
}

/// Relative tolerance of the two-point quadrature.
pub const TWO_POINT_REL_TOL: f64 = 1e-10;

/// `⟨δ_m, ρ δ_n⟩ = (1/2π) ∫ e^{ik(n−m)} ρ(k) dk`, split at the jumps of `ρ`.
pub fn ness_two_point(m: i64, n: i64, temps: &TemperaturePair, params: &DispersionParams) -> Result<Complex64> {
    let r = (n - m) as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in [(-PI, 0.0), (0.0, PI)] {
        // the branch is fixed on each half, so evaluate it explicitly
        let beta = if a < 0.0 { temps.beta_minus() } else { temps.beta_plus() };
        let rho = |k: f64| fermi(beta * params.omega(k));
        re += adaptive(a, b, TWO_POINT_REL_TOL, 1e-15, |k| (r * k).cos() * rho(k))?;
        if r != 0.0 {
            im += adaptive(a, b, TWO_POINT_REL_TOL, 1e-15, |k| (r * k).sin() * rho(k))?;
        }
    }
    Ok(Complex64::new(re, im) / (2.0 * PI))
}

pub fn ness_covariance(window: &[i64], temps: &TemperaturePair, params: &DispersionParams) -> Result<CovarianceMatrix> {
    if window.is_empty() {
        return Err(invalid("window must be non-empty"));
    }
    let mut sorted = window.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("window sites must be distinct"));
    }
    // The state is translation invariant, so entries depend on n − m only.
    let mut by_offset: BTreeMap<i64, Complex64> = BTreeMap::new();
    for &m in window {
        for &n in window {
            if let std::collections::btree_map::Entry::Vacant(v) = by_offset.entry(n - m) {
                v.insert(ness_two_point(m, n, temps, params)?);
            }
        }
    }
    let d = window.len();
    let matrix = DMatrix::from_fn(d, d, |i, j| by_offset[&(window[j] - window[i])]);
    CovarianceMatrix::new(window.to_vec(), matrix)
}

/// A finitely supported lattice vector `f = Σ f(n) δ_n`.
pub type SiteVector = Vec<(i64, Complex64)>;

/// `ω(a*(f_n)⋯a*(f_1) a(g_1)⋯a(g_m)) = δ_{nm} det[⟨a*(f_i) a(g_j)⟩]`, with
/// `⟨a*(f) a(g)⟩ = Σ f(m) M[m][n] conj(g(n))` (linear in `f`, antilinear in `g`).
pub fn n_point(fs: &[SiteVector], gs: &[SiteVector], c: &CovarianceMatrix) -> Result<Complex64> {
    if fs.len() != gs.len() {
        return Ok(Complex64::default());
    }
    let k = fs.len();
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut a = DMatrix::<Complex64>::zeros(k, k);
    for (i, f) in fs.iter().enumerate() {
        for (j, g) in gs.iter().enumerate() {
            let mut acc = Complex64::default();
            for &(m, fm) in f {
                for &(n, gn) in g {
                    acc += fm * c.entry(m, n)? * gn.conj();
                }
            }
            a[(i, j)] = acc;
        }
    }
    Ok(a.determinant())
}
