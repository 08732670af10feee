//! Machine checks of the model assumptions: support and smoothness of the
//! form factor, resonance shells inside `Λ_v`, non-degeneracy with a lower
//! bound on `|f|` at the shells, and the coupling conditions (`δ₀ > 0`,
//! non-vanishing off-diagonal `Y`). Also builds the two-level reference model.

use crate::dispersion::{k_of_t, solve_shell, support_region, t_of_k, DispersionParams};
use crate::error::{invalid, NessError, Result};
use crate::quasifree::{FormFactor, TemperaturePair};
use crate::rescaling::{apply_p, p_cubed_norm_on_grid, MeasureQuadrature};
use crate::small_system::{delta0, liouville_spectrum, SmallSystem, PAIR_TOL};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// Shell weights above this are reported as marginal (close to a band edge).
pub const MARGINAL_WEIGHT: f64 = 1e3;
/// `δ₀` at or below this counts as vanishing.
pub const DELTA0_FLOOR: f64 = 1e-12;
/// Growth of the grid norm of `p³f` per halving of the step that signals divergence.
pub const P3_GROWTH_LIMIT: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub params: DispersionParams,
    pub sys: SmallSystem,
    pub form_factor: FormFactor,
    pub temps: TemperaturePair,
    pub v: f64,
    pub a_bound: f64,
    pub lambda: f64,
}

impl ModelInstance {
    pub fn new(
        params: DispersionParams,
        sys: SmallSystem,
        form_factor: FormFactor,
        temps: TemperaturePair,
        v: f64,
        a_bound: f64,
        lambda: f64,
    ) -> Result<Self> {
        support_region(v)?;
        if !(a_bound > 0.0) || !a_bound.is_finite() {
            return Err(invalid(format!("lower bound a must be positive, got {a_bound}")));
        }
        if !lambda.is_finite() {
            return Err(invalid("coupling constant must be finite"));
        }
        Ok(ModelInstance { params, sys, form_factor, temps, v, a_bound, lambda })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportVerdict {
    pub passed: bool,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Support intervals (in `t`) not contained in `Λ_v`.
    pub violations: Vec<(f64, f64)>,
    /// `"analytic"` or `"grid"`.
    pub p3_method: String,
    pub p3_norms: Vec<f64>,
    pub p3_finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellWitness {
    pub e_i: f64,
    pub e_j: f64,
    /// Non-negative root `k_ij`, if the shell is non-empty.
    pub k: Option<f64>,
    pub weight: Option<f64>,
    pub in_region: bool,
    pub band_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceVerdict {
    pub passed: bool,
    pub shells: Vec<ShellWitness>,
    /// Pairs `(e_i, e_j)` whose shell is empty, at a band edge or outside `Λ_v`.
    pub failures: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormFactorWitness {
    pub e_i: f64,
    pub e_j: f64,
    pub k: f64,
    pub abs_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormFactorVerdict {
    pub passed: bool,
    pub nondegenerate: bool,
    /// Index pairs of equal or out-of-order neighbouring levels.
    pub degenerate_levels: Vec<(usize, usize)>,
    pub a_bound: f64,
    pub min_abs_f: Option<f64>,
    /// Shell points where `|f| < a`.
    pub failures: Vec<FormFactorWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta0Witness {
    pub e: f64,
    pub delta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingVerdict {
    pub passed: bool,
    pub delta0_positive: bool,
    pub delta0: Vec<Delta0Witness>,
    pub min_delta0: Option<f64>,
    pub offdiagonal_nonzero: bool,
    pub zero_offdiagonal: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub support_and_smoothness: SupportVerdict,
    pub resonances: ResonanceVerdict,
    pub nondegeneracy_and_formfactor: FormFactorVerdict,
    pub coupling: CouplingVerdict,
    pub all_passed: bool,
}

pub fn check_support_and_smoothness(inst: &ModelInstance) -> Result<SupportVerdict> {
    let region = support_region(inst.v)?;
    let violations: Vec<(f64, f64)> = inst
        .form_factor
        .support()
        .iter()
        .copied()
        .filter(|&(a, b)| !region.contains_interval(a, b))
        .collect();
    let radial = inst.form_factor.radial();
    let (method, norms, finite) = if radial.analytic_order() >= 3 {
        let p3 = apply_p(&apply_p(&apply_p(radial)));
        let norm = MeasureQuadrature::default().norm(&p3);
        ("analytic", vec![norm], norm.is_finite())
    } else {
        let support = inst.form_factor.support();
        let lo = support.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = support.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            ("grid", Vec::new(), true)
        } else {
            let pad = 0.05 * (hi - lo) + 0.1;
            let h0 = (hi - lo + 2.0 * pad) / 2000.0;
            let norms: Vec<f64> = (0..3)
                .map(|j| p_cubed_norm_on_grid(radial, lo - pad, hi + pad, h0 / f64::powi(2.0, j)))
                .collect();
            let finite = norms.iter().all(|x| x.is_finite())
                && norms.windows(2).all(|w| w[1] <= P3_GROWTH_LIMIT * w[0]);
            ("grid", norms, finite)
        }
    };
    Ok(SupportVerdict {
        passed: violations.is_empty() && finite,
        t_lo: region.t_lo,
        t_hi: region.t_hi,
        violations,
        p3_method: method.to_string(),
        p3_norms: norms,
        p3_finite: finite,
    })
}

/// Ordered pairs of distinct `L_S` eigenvalues.
fn eigenvalue_pairs(sys: &SmallSystem) -> Result<Vec<(f64, f64)>> {
    let values = liouville_spectrum(sys)?.values();
    let mut out = Vec::new();
    for &a in &values {
        for &b in &values {
            if a != b {
                out.push((a, b));
            }
        }
    }
    Ok(out)
}

pub fn check_resonances(inst: &ModelInstance) -> Result<ResonanceVerdict> {
    let region = support_region(inst.v)?;
    let mut shells = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (ei, ej) in eigenvalue_pairs(&inst.sys)? {
        let witness = match solve_shell(ei - ej, &inst.params) {
            Err(NessError::BandEdge { .. }) => {
                ShellWitness { e_i: ei, e_j: ej, k: None, weight: None, in_region: false, band_edge: true }
            }
            Err(e) => return Err(e),
            Ok(shell) => match shell.positive() {
                None => ShellWitness { e_i: ei, e_j: ej, k: None, weight: None, in_region: false, band_edge: false },
                Some(root) => {
                    if root.weight > MARGINAL_WEIGHT {
                        warnings.push(format!(
                            "shell for e_i - e_j = {} has weight {:.3e} (near a band edge)",
                            ei - ej,
                            root.weight
                        ));
                    }
                    let in_region = t_of_k(root.k).map(|t| region.contains(t)).unwrap_or(false);
                    ShellWitness {
                        e_i: ei,
                        e_j: ej,
                        k: Some(root.k),
                        weight: Some(root.weight),
                        in_region,
                        band_edge: false,
                    }
                }
            },
        };
        if !witness.in_region {
            failures.push((ei, ej));
        }
        shells.push(witness);
    }
    Ok(ResonanceVerdict { passed: failures.is_empty(), shells, failures, warnings })
}

pub fn check_nondegeneracy_and_formfactor(inst: &ModelInstance) -> Result<FormFactorVerdict> {
    let energies = inst.sys.energies();
    let degenerate_levels: Vec<(usize, usize)> =
        (1..energies.len()).filter(|&i| !(energies[i - 1] < energies[i])).map(|i| (i - 1, i)).collect();
    let nondegenerate = degenerate_levels.is_empty();
    let mut min_abs_f: Option<f64> = None;
    let mut failures = Vec::new();
    if nondegenerate {
        for (ei, ej) in eigenvalue_pairs(&inst.sys)? {
            let roots = match solve_shell(ei - ej, &inst.params) {
                Ok(shell) => shell.roots,
                Err(NessError::BandEdge { .. }) => Vec::new(),
                Err(e) => return Err(e),
            };
            for root in roots {
                let abs_f = inst.form_factor.eval_k(root.k).norm();
                min_abs_f = Some(min_abs_f.map_or(abs_f, |m| m.min(abs_f)));
                if abs_f < inst.a_bound {
                    failures.push(FormFactorWitness { e_i: ei, e_j: ej, k: root.k, abs_f });
                }
            }
        }
    }
    Ok(FormFactorVerdict {
        passed: nondegenerate && failures.is_empty(),
        nondegenerate,
        degenerate_levels,
        a_bound: inst.a_bound,
        min_abs_f,
        failures,
    })
}

pub fn check_coupling(inst: &ModelInstance) -> Result<CouplingVerdict> {
    let mut witnesses = Vec::new();
    let values = match liouville_spectrum(&inst.sys) {
        Ok(s) => s.values(),
        Err(NessError::AmbiguousSpectrum { .. }) => Vec::new(),
        Err(e) => return Err(e),
    };
    for e in values.into_iter().filter(|e| e.abs() > PAIR_TOL) {
        witnesses.push(Delta0Witness { e, delta0: delta0(&inst.sys, e)? });
    }
    let min_delta0 = witnesses.iter().map(|w| w.delta0).reduce(f64::min);
    let delta0_positive = !witnesses.is_empty() && witnesses.iter().all(|w| w.delta0 > DELTA0_FLOOR);
    let y = inst.sys.coupling();
    let d = inst.sys.dim();
    let zero_offdiagonal: Vec<(usize, usize)> = (0..d)
        .flat_map(|m| (0..d).map(move |n| (m, n)))
        .filter(|&(m, n)| m < n && y[(m, n)].norm() == 0.0)
        .collect();
    let offdiagonal_nonzero = zero_offdiagonal.is_empty();
    Ok(CouplingVerdict {
        passed: delta0_positive && offdiagonal_nonzero,
        delta0_positive,
        delta0: witnesses,
        min_delta0,
        offdiagonal_nonzero,
        zero_offdiagonal,
    })
}

pub fn validate(inst: &ModelInstance) -> Result<ValidationReport> {
    let support_and_smoothness = check_support_and_smoothness(inst)?;
    let resonances = check_resonances(inst)?;
    let nondegeneracy_and_formfactor = check_nondegeneracy_and_formfactor(inst)?;
    let coupling = check_coupling(inst)?;
    let all_passed = support_and_smoothness.passed
        && resonances.passed
        && nondegeneracy_and_formfactor.passed
        && coupling.passed;
    Ok(ValidationReport { support_and_smoothness, resonances, nondegeneracy_and_formfactor, coupling, all_passed })
}

/// Lower bound `a` used by the reference model.
pub const REFERENCE_A_BOUND: f64 = 0.5;
/// Coupling constant used by the reference model.
pub const REFERENCE_LAMBDA: f64 = 0.01;
/// Largest half-width (in `k`) of the flat margin around the outermost shells.
pub const REFERENCE_FLAT_MARGIN: f64 = 0.02;

/// Upper bound on `b`: `cos(k_v)/4` with `sin² k_v = v`.
pub fn reference_b_limit(v: f64) -> f64 {
    0.25 * (1.0 - v).sqrt()
}

/// Two-level model `H_S = bσ_z`, `Y = σ_x`, `γ = 0`, with `f` a C∞ plateau
/// equal to 1 on the arc through all resonance shells and supported in `Λ_v`.
pub fn build_reference_instance(v: f64, b: f64, temps: TemperaturePair) -> Result<ModelInstance> {
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid(format!("v must lie in (0, 1), got {v}")));
    }
    let limit = reference_b_limit(v);
    if !(b > 0.0 && b < limit) {
        return Err(invalid(format!("b must lie in (0, {limit}), got {b}")));
    }
    let k_v = v.sqrt().asin();
    let k_4b = (4.0 * b).acos();
    let r = REFERENCE_FLAT_MARGIN.min(0.5 * (k_4b - k_v));
    let (flat_lo, flat_hi) = (k_4b - r, PI - k_4b + r);
    let (supp_lo, supp_hi) = (0.5 * (k_v + flat_lo), 0.5 * (PI - k_v + flat_hi));
    let t = |k: f64| (0.5 * k).tan();
    let positive = ((t(supp_lo), t(supp_hi)), (t(flat_lo), t(flat_hi)));
    let negative = ((-t(supp_hi), -t(supp_lo)), (-t(flat_hi), -t(flat_lo)));
    let f = FormFactor::plateau(&[negative, positive])?;
    let sys = SmallSystem::with_real_coupling(vec![-b, b], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))?;
    ModelInstance::new(DispersionParams::new(0.0)?, sys, f, temps, v, REFERENCE_A_BOUND, REFERENCE_LAMBDA)
}

/// `k ∈ (0, π)` with `cos k = c`, for `|c| < 1`.
pub fn shell_momentum(c: f64) -> f64 {
    k_of_t(((1.0 - c) / (1.0 + c)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn hot() -> TemperaturePair {
        TemperaturePair::new(2.0, 1.0).unwrap()
    }

    #[test]
    fn reference_instance_passes_everything() {
        let inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        let report = validate(&inst).unwrap();
        assert!(report.all_passed, "{report:?}");
        assert_eq!(report.support_and_smoothness.p3_method, "analytic");
        assert!((report.nondegeneracy_and_formfactor.min_abs_f.unwrap() - 1.0).abs() < 1e-12);
        assert!((report.coupling.min_delta0.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(report.resonances.shells.len(), 6);
    }

    #[test]
    fn b_range_is_strict() {
        let limit = reference_b_limit(0.25);
        assert!((limit - 3f64.sqrt() / 8.0).abs() < 1e-15);
        assert!(build_reference_instance(0.25, limit, hot()).is_err());
        assert!(build_reference_instance(0.25, 0.0, hot()).is_err());
        assert!(build_reference_instance(0.25, limit * (1.0 - 1e-9), hot()).is_ok());
    }

    #[test]
    fn shell_momentum_inverts_cosine() {
        for c in [-0.9, -0.2, 0.0, 0.4, 0.8] {
            assert!((shell_momentum(c).cos() - c).abs() < 1e-14);
        }
    }

    #[test]
    fn support_below_t_lo_fails() {
        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        let t_lo = support_region(0.25).unwrap().t_lo;
        inst.form_factor = FormFactor::bump(&[(0.1 * t_lo, 0.9 * t_lo)]).unwrap();
        let v = check_support_and_smoothness(&inst).unwrap();
        assert!(!v.passed);
        assert_eq!(v.violations, vec![(0.1 * t_lo, 0.9 * t_lo)]);
        assert!(v.p3_finite);
    }

    #[test]
    fn indicator_is_not_smooth_enough() {
        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        inst.form_factor = FormFactor::indicator(&[(0.5, 2.0)]).unwrap();
        let v = check_support_and_smoothness(&inst).unwrap();
        assert!(v.violations.is_empty());
        assert_eq!(v.p3_method, "grid");
        assert!(!v.p3_finite && !v.passed);
    }

    #[test]
    fn out_of_band_pair_fails_resonance() {
        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        inst.sys = SmallSystem::with_real_coupling(vec![-0.4, 0.4], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
            .unwrap();
        let r = check_resonances(&inst).unwrap();
        assert!(!r.passed);
        assert!(r.failures.contains(&(0.8, -0.8)));
    }

    #[test]
    fn large_v_squeezes_shells_out() {
        // with b fixed, raising v shrinks Λ_v around k = ±π/2 until a shell leaves
        let b = 0.1;
        let mut failed_at = None;
        for i in 1..100 {
            let v = i as f64 / 100.0;
            let mut inst = build_reference_instance(0.25, b, hot()).unwrap();
            inst.v = v;
            if !check_resonances(&inst).unwrap().passed {
                failed_at = Some(v);
                break;
            }
        }
        // sin² k_{4b} = 1 − 16b² is the first shell to leave
        let v_star = 1.0 - 16.0 * b * b;
        let v = failed_at.unwrap();
        assert!(v > v_star - 0.011 && v <= v_star + 0.011);
    }

    #[test]
    fn degenerate_energies_and_vanishing_form_factor() {
        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        inst.sys = SmallSystem::with_real_coupling(vec![0.1, 0.1], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
            .unwrap();
        let r = check_nondegeneracy_and_formfactor(&inst).unwrap();
        assert!(!r.passed && !r.nondegenerate);
        assert_eq!(r.degenerate_levels, vec![(0, 1)]);

        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        // remove the mass around the 4b shells only
        let t = |k: f64| (0.5 * k).tan();
        let k2 = shell_momentum(0.2);
        inst.form_factor = FormFactor::plateau(&[
            ((-t(k2 + 0.05), -t(k2 - 0.05)), (-t(k2 + 0.01), -t(k2 - 0.01))),
            ((t(k2 - 0.05), t(k2 + 0.05)), (t(k2 - 0.01), t(k2 + 0.01))),
        ])
        .unwrap();
        let r = check_nondegeneracy_and_formfactor(&inst).unwrap();
        assert!(!r.passed);
        assert!(!r.failures.is_empty());
        // only the covered shell cos k = 0.2 is spared
        assert!(r.failures.iter().all(|w| (w.e_i - w.e_j - 0.2).abs() > 1e-9));
        assert!(r.failures.iter().all(|w| w.abs_f < 0.5));
    }

    #[test]
    fn raising_a_only_flips_to_fail() {
        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        for a in [0.1, 0.5, 1.0] {
            inst.a_bound = a;
            assert!(check_nondegeneracy_and_formfactor(&inst).unwrap().passed);
        }
        inst.a_bound = 1.0 + 1e-9;
        assert!(!check_nondegeneracy_and_formfactor(&inst).unwrap().passed);
    }

    #[test]
    fn coupling_failures() {
        let mut inst = build_reference_instance(0.25, 0.1, hot()).unwrap();
        let z = Complex64::default();
        let o = Complex64::new(1.0, 0.0);
        // block-diagonal: level 2 decoupled from {0, 1}; equal spacing makes
        // e = 0.1 carry the pairs (1, 0) and (2, 1), one in each block
        inst.sys = SmallSystem::new(
            vec![-0.1, 0.0, 0.1],
            DMatrix::from_row_slice(3, 3, &[z, o, z, o, z, z, z, z, o]),
        )
        .unwrap();
        let c = check_coupling(&inst).unwrap();
        assert!(!c.passed && !c.delta0_positive && !c.offdiagonal_nonzero);
        let at = |e: f64| c.delta0.iter().find(|w| (w.e - e).abs() < 1e-9).unwrap().delta0;
        assert!(at(0.1).abs() <= DELTA0_FLOOR && at(-0.1).abs() <= DELTA0_FLOOR);
        // e = 0.2 has the single pair (2, 0): δ₀ = ½(|Y₀₁|² + 0)
        assert!((at(0.2) - 0.5).abs() < 1e-14);
        assert_eq!(c.zero_offdiagonal, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn report_is_reproducible() {
        let a = validate(&build_reference_instance(0.3, 0.05, hot()).unwrap()).unwrap();
        let b = validate(&build_reference_instance(0.3, 0.05, hot()).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
