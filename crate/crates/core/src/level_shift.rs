//! The level-shift operator `Γ(e)` on an eigenspace of `L_S`, its kernel and
//! gap, the `Δβ` gap scan and the exponent analysis of the threshold `λ₁`.

use crate::dispersion::{solve_shell, DispersionParams};
use crate::error::{invalid, NessError, Result};
use crate::quasifree::{doubled_vectors, occupation, FormFactor, TemperaturePair};
use crate::small_system::{liouville_spectrum, SmallSystem};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

/// Relative kernel threshold, in units of `‖G‖`.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelShiftOperator {
    pub e: f64,
    /// Pairs `(n, m)` with `E_n − E_m = e`, lexicographic.
    pub basis: Vec<(usize, usize)>,
    pub matrix: DMatrix<Complex64>,
}

impl LevelShiftOperator {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Spectral norm (`G` is Hermitian).
    pub fn norm(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.eigenvalues().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn quadratic_form(&self, c: &DVector<Complex64>) -> f64 {
        (c.adjoint() * &self.matrix * c)[(0, 0)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }
}

/// Row of `F_{n,m}` on the basis: `Y[n][a] δ_{m,b} g₁ − δ_{n,a} conj(Y[m][b]) g₂`.
fn coupling_row(
    sys: &SmallSystem,
    basis: &[(usize, usize)],
    n: usize,
    m: usize,
    g1: Complex64,
    g2: Complex64,
) -> Vec<Complex64> {
    let y = sys.coupling();
    basis
        .iter()
        .map(|&(a, b)| {
            let mut v = Complex64::default();
            if m == b {
                v += y[(n, a)] * g1;
            }
            if n == a {
                v -= y[(m, b)].conj() * g2;
            }
            v
        })
        .collect()
}

/// Whether `(n, m)` couples to the basis at all, independent of `k`.
fn couples(sys: &SmallSystem, basis: &[(usize, usize)], n: usize, m: usize) -> bool {
    let y = sys.coupling();
    basis.iter().any(|&(a, b)| (m == b && y[(n, a)].norm() > 0.0) || (n == a && y[(m, b)].norm() > 0.0))
}

pub fn assemble_gamma(
    e: f64,
    sys: &SmallSystem,
    f: &FormFactor,
    temps: &TemperaturePair,
    params: &DispersionParams,
) -> Result<LevelShiftOperator> {
    let spectrum = liouville_spectrum(sys)?;
    let bucket = spectrum.find(e).ok_or(NessError::NotAnEigenvalue(e))?;
    let e = bucket.value;
    let basis = bucket.pairs.clone();
    let dim = basis.len();
    let d = sys.dim();
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 0..d {
        for m in 0..d {
            if basis.contains(&(n, m)) || !couples(sys, &basis, n, m) {
                continue;
            }
            let e_nm = sys.transition(n, m);
            for (copy, target) in [(1, e - e_nm), (2, e_nm - e)] {
                for root in solve_shell(target, params)?.roots {
                    let (g1, g2) = doubled_vectors(root.k, f, temps, params).copy(copy);
                    let v = coupling_row(sys, &basis, n, m, g1, g2);
                    for (i, vi) in v.iter().enumerate() {
                        for (j, vj) in v.iter().enumerate() {
                            g[(i, j)] += vi.conj() * vj * root.weight;
                        }
                    }
                }
            }
        }
    }
    Ok(LevelShiftOperator { e, basis, matrix: g })
}

/// `⟨φ, Γ(0) φ⟩` for `φ = Σ c_n (n, n)`, summed directly over pairs `n ≠ m`.
pub fn gamma0_quadratic_form(
    c: &DVector<Complex64>,
    sys: &SmallSystem,
    f: &FormFactor,
    temps: &TemperaturePair,
    params: &DispersionParams,
) -> Result<f64> {
    let d = sys.dim();
    if c.len() != d {
        return Err(invalid(format!("vector has length {}, system has dimension {d}", c.len())));
    }
    let y = sys.coupling();
    let mut total = 0.0;
    for n in 0..d {
        for m in 0..d {
            if n == m {
                continue;
            }
            let y2 = y[(m, n)].norm_sqr();
            if y2 == 0.0 {
                continue;
            }
            // ω(q_mn) = E_m − E_n
            for root in solve_shell(sys.transition(m, n), params)?.roots {
                let (rho, hole) = occupation(root.k, temps, params);
                let amp = c[m] * hole.sqrt() - c[n] * rho.sqrt();
                total += y2 * amp.norm_sqr() * f.eval_k(root.k).norm_sqr() * root.weight;
            }
            for root in solve_shell(sys.transition(n, m), params)?.roots {
                let (rho, hole) = occupation(root.k, temps, params);
                let amp = c[m] * rho.sqrt() - c[n] * hole.sqrt();
                total += y2 * amp.norm_sqr() * f.eval_k(root.k).norm_sqr() * root.weight;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub e: f64,
    pub eigenvalues: Vec<f64>,
    pub min_eig: f64,
    pub norm: f64,
    /// Smallest eigenvalue above the kernel threshold; 0 if there is none.
    pub gamma_e: f64,
    /// Orthonormal kernel vectors as `(re, im)` components on the basis.
    pub kernel_basis: Vec<Vec<(f64, f64)>>,
    /// `G` vanishes identically, so the gap is undefined.
    pub zero_operator: bool,
    pub kernel_tol: f64,
}

impl KernelReport {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }

    pub fn kernel_vector(&self, i: usize) -> DVector<Complex64> {
        DVector::from_iterator(
            self.kernel_basis[i].len(),
            self.kernel_basis[i].iter().map(|&(re, im)| Complex64::new(re, im)),
        )
    }
}

pub fn kernel_report(g: &LevelShiftOperator, kernel_tol: f64) -> KernelReport {
    let dim = g.dim();
    let eig = g.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let norm = eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let zero_operator = norm == 0.0;
    let threshold = kernel_tol * norm;
    let mut kernel_basis = Vec::new();
    let mut gamma_e = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        let lam = eigenvalues[pos];
        if zero_operator || lam < threshold {
            let col = eig.eigenvectors.column(i);
            // fix the phase: largest component real and positive
            let lead = col.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
            let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { Complex64::new(1.0, 0.0) };
            kernel_basis.push(col.iter().map(|z| z * phase).map(|z| (z.re, z.im)).collect());
        } else {
            gamma_e = lam;
            break;
        }
    }
    KernelReport {
        e: g.e,
        min_eig: eigenvalues.first().copied().unwrap_or(0.0),
        eigenvalues,
        norm,
        gamma_e,
        kernel_basis,
        zero_operator,
        kernel_tol,
    }
}

/// `|⟨u, c⟩|` for the Gibbs vector embedded as `Σ c_n (n, n)` on the `e = 0` basis.
pub fn gibbs_overlap(report: &KernelReport, basis: &[(usize, usize)], gibbs: &DVector<f64>) -> f64 {
    let embedded = DVector::from_iterator(
        basis.len(),
        basis.iter().map(|&(n, m)| Complex64::new(if n == m { gibbs[n] } else { 0.0 }, 0.0)),
    );
    (0..report.kernel_dim())
        .map(|i| report.kernel_vector(i).dotc(&embedded).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub delta_beta: f64,
    pub gamma0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapScan {
    pub rows: Vec<GapRow>,
    /// Least-squares slope of `ln γ₀` against `ln Δβ` over rows with `Δβ > 0`.
    pub slope: Option<f64>,
}

pub fn gap_scan(
    sys: &SmallSystem,
    f: &FormFactor,
    params: &DispersionParams,
    beta_center: f64,
    deltas: &[f64],
) -> Result<GapScan> {
    let mut rows = Vec::with_capacity(deltas.len());
    for &db in deltas {
        if !(db >= 0.0) || !db.is_finite() {
            return Err(invalid(format!("Δβ must be non-negative, got {db}")));
        }
        let temps = TemperaturePair::new(beta_center + 0.5 * db, beta_center - 0.5 * db)?;
        let g = assemble_gamma(0.0, sys, f, &temps, params)?;
        rows.push(GapRow { delta_beta: db, gamma0: g.min_eigenvalue() });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta_beta > 0.0 && r.gamma0 > 0.0)
        .map(|r| (r.delta_beta.ln(), r.gamma0.ln()))
        .collect();
    Ok(GapScan { slope: loglog_slope(&points), rows })
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One term `v^a γ_e^b` of the threshold minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lambda1Term {
    pub v_exponent: Ratio<i64>,
    pub gamma_exponent: Ratio<i64>,
}

impl Lambda1Term {
    pub fn eval(&self, v: f64, gamma_e: f64) -> f64 {
        let a = *self.v_exponent.numer() as f64 / *self.v_exponent.denom() as f64;
        let b = *self.gamma_exponent.numer() as f64 / *self.gamma_exponent.denom() as f64;
        v.powf(a) * gamma_e.powf(b)
    }
}

/// `v^{100/26}`, `(v/γ_e)^{100/182}`, `γ_e^{100/11}`, `(vγ_e)^{100/18}`.
pub fn lambda1_terms() -> [Lambda1Term; 4] {
    let r = Ratio::new;
    [
        Lambda1Term { v_exponent: r(100, 26), gamma_exponent: r(0, 1) },
        Lambda1Term { v_exponent: r(100, 182), gamma_exponent: r(-100, 182) },
        Lambda1Term { v_exponent: r(0, 1), gamma_exponent: r(100, 11) },
        Lambda1Term { v_exponent: r(100, 18), gamma_exponent: r(100, 18) },
    ]
}

fn check_lambda1_args(v: f64, gamma_e: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(invalid(format!("v must lie in (0, 1], got {v}")));
    }
    if !(gamma_e > 0.0) || !gamma_e.is_finite() {
        return Err(invalid(format!("gap must be positive, got {gamma_e}")));
    }
    Ok(())
}

pub fn lambda1_scaling(v: f64, gamma_e: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("constant must be positive, got {c}")));
    }
    let i = lambda1_active_term(v, gamma_e)?;
    Ok(c * lambda1_terms()[i].eval(v, gamma_e))
}

/// Index of the smallest of the four terms at `(v, γ_e)`.
pub fn lambda1_active_term(v: f64, gamma_e: f64) -> Result<usize> {
    check_lambda1_args(v, gamma_e)?;
    let terms = lambda1_terms();
    Ok((0..4)
        .min_by(|&a, &b| terms[a].eval(v, gamma_e).total_cmp(&terms[b].eval(v, gamma_e)))
        .expect("four terms"))
}

/// Which variable is sent to zero with the other held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    SmallV,
    SmallGap,
}

/// The term that eventually wins the minimum, and its exponent in the
/// vanishing variable. For a variable `x → 0` the term with the largest
/// exponent of `x` is the smallest.
pub fn dominant_term(limit: Limit) -> (usize, Ratio<i64>) {
    let terms = lambda1_terms();
    let exponent = |t: &Lambda1Term| match limit {
        Limit::SmallV => t.v_exponent,
        Limit::SmallGap => t.gamma_exponent,
    };
    let (i, t) = terms
        .iter()
        .enumerate()
        .max_by(|a, b| exponent(a.1).cmp(&exponent(b.1)))
        .expect("four terms");
    (i, exponent(t))
}

/// Exponent of `Δβ` in `λ₁` when `γ_e = Δβ²`.
pub fn delta_beta_exponent() -> Ratio<i64> {
    dominant_term(Limit::SmallGap).1 * 2
}
