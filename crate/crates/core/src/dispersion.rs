//! The tight-binding dispersion `ω(k) = cos k − γ`, the half-angle coordinate
//! `t = tan(k/2)`, the commutator functions `s1, s2, s3`, the momentum support
//! region and energy-shell solving.

use crate::error::{invalid, NessError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Distance of `target + γ` from ±1 below which a shell is treated as a band edge.
pub const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    gamma: f64,
}

impl DispersionParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > -1.0 && gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (-1, 1), got {gamma}")));
        }
        Ok(DispersionParams { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega(&self, k: f64) -> f64 {
        omega(k, self)
    }
}

pub fn omega(k: f64, params: &DispersionParams) -> f64 {
    k.cos() - params.gamma
}

/// `t = tan(k/2)`; the endpoints `k = ±π` map to infinity.
pub fn t_of_k(k: f64) -> Result<f64> {
    if (k.abs() - PI).abs() < 1e-300 || k.abs() > PI {
        return Err(NessError::Pole(k));
    }
    Ok((0.5 * k).tan())
}

pub fn k_of_t(t: f64) -> f64 {
    2.0 * t.atan()
}

/// The dispersion in the `t` coordinate: `2/(t²+1) − 1 − γ`.
pub fn h_of_t(t: f64, params: &DispersionParams) -> f64 {
    2.0 / (t * t + 1.0) - 1.0 - params.gamma
}

pub fn s1(t: f64) -> f64 {
    let q = 1.0 + t * t;
    4.0 * t * t / (q * q)
}

pub fn s2(t: f64) -> f64 {
    let q = 1.0 + t * t;
    8.0 * (t * t - 1.0) * t * t / (q * q * q)
}

pub fn s3(t: f64) -> f64 {
    let t2 = t * t;
    let q = 1.0 + t2;
    16.0 * (t2 - 4.0 * t2 * t2 + t2 * t2 * t2) / (q * q * q * q)
}

/// `{t : s1(t) ≥ v}` = `{t : t_lo ≤ |t| ≤ t_hi}`, equivalently `{k : sin²k ≥ v}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportRegion {
    pub v: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl SupportRegion {
    pub fn contains(&self, t: f64) -> bool {
        let a = t.abs();
        a >= self.t_lo * (1.0 - 1e-12) && a <= self.t_hi * (1.0 + 1e-12)
    }

    /// Whether a closed interval lies inside one of the two components.
    pub fn contains_interval(&self, lo: f64, hi: f64) -> bool {
        lo <= hi && self.contains(lo) && self.contains(hi) && (lo > 0.0) == (hi > 0.0)
    }

    /// Boundary momenta `k_v ≤ |k| ≤ π − k_v` with `sin² k_v = v`.
    pub fn k_bounds(&self) -> (f64, f64) {
        (k_of_t(self.t_lo), k_of_t(self.t_hi))
    }

    /// The two components `[-t_hi, -t_lo]` and `[t_lo, t_hi]`.
    pub fn components(&self) -> [(f64, f64); 2] {
        [(-self.t_hi, -self.t_lo), (self.t_lo, self.t_hi)]
    }
}

pub fn support_region(v: f64) -> Result<SupportRegion> {
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid(format!("support level v must lie in (0, 1), got {v}")));
    }
    // Roots of √v (1 + t²) = 2t; the product of the roots is 1.
    let r = (1.0 - v).sqrt();
    let t_lo = v.sqrt() / (1.0 + r);
    let t_hi = (1.0 + r) / v.sqrt();
    Ok(SupportRegion { v, t_lo, t_hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellRoot {
    pub k: f64,
    /// `1/|ω'(k)| = 1/|sin k|`, the delta-function weight.
    pub weight: f64,
}

/// Solutions of `ω(k) = target` on `[−π, π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumShell {
    pub target: f64,
    pub roots: Vec<ShellRoot>,
}

impl MomentumShell {
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// The non-negative root, if any.
    pub fn positive(&self) -> Option<ShellRoot> {
        self.roots.iter().copied().find(|r| r.k >= 0.0)
    }

    pub fn negative(&self) -> Option<ShellRoot> {
        self.roots.iter().copied().find(|r| r.k < 0.0)
    }
}

/// Reduces `∫dk g(k) δ(ω(k) − target)` to a weighted sum over roots.
pub fn solve_shell(target: f64, params: &DispersionParams) -> Result<MomentumShell> {
    let x = target + params.gamma;
    if (x - 1.0).abs() <= EDGE_TOL || (x + 1.0).abs() <= EDGE_TOL {
        return Err(NessError::BandEdge { target, gamma: params.gamma });
    }
    if x.abs() > 1.0 {
        return Ok(MomentumShell { target, roots: Vec::new() });
    }
    let k = x.acos();
    let weight = 1.0 / k.sin().abs();
    Ok(MomentumShell {
        target,
        roots: vec![ShellRoot { k, weight }, ShellRoot { k: -k, weight }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(g: f64) -> DispersionParams {
        DispersionParams::new(g).unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(0.0, &p(0.0)), 1.0);
        assert_abs_diff_eq!(omega(PI / 2.0, &p(0.0)), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(omega(PI / 3.0, &p(0.25)), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn gamma_range_enforced() {
        assert!(DispersionParams::new(1.0).is_err());
        assert!(DispersionParams::new(-1.0).is_err());
        assert!(DispersionParams::new(f64::NAN).is_err());
        assert!(DispersionParams::new(0.999).is_ok());
    }

    #[test]
    fn half_angle_coordinate() {
        assert_eq!(t_of_k(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(t_of_k(PI / 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k_of_t(t_of_k(1.3).unwrap()), 1.3, epsilon = 1e-14);
        assert!(matches!(t_of_k(PI), Err(NessError::Pole(_))));
        assert!(matches!(t_of_k(-PI), Err(NessError::Pole(_))));
    }

    #[test]
    fn s_function_examples() {
        assert_eq!(s1(1.0), 1.0);
        assert_abs_diff_eq!(s1(t_of_k(PI / 3.0).unwrap()), 0.75, epsilon = 1e-15);
        assert_eq!(s2(1.0), 0.0);
    }

    #[test]
    fn s1_equals_sin_squared_on_grid() {
        let n = 10_000;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let k = -PI + (i as f64 + 0.5) * 2.0 * PI / n as f64;
            let t = t_of_k(k).unwrap();
            worst = worst.max((s1(t) - k.sin().powi(2)).abs());
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn q_recursion_analytic_and_finite_difference() {
        // −t d/dt of h, s1, s2 in closed form.
        let dh = |t: f64| -4.0 * t / (1.0 + t * t).powi(2);
        let ds1 = |t: f64| 8.0 * t * (1.0 - t * t) / (1.0 + t * t).powi(3);
        let ds2 = |t: f64| {
            let q = 1.0 + t * t;
            (32.0 * t.powi(3) - 16.0 * t) / q.powi(3) - 48.0 * (t * t - 1.0) * t.powi(3) / q.powi(4)
        };
        let params = p(0.3);
        let step = 1e-5;
        let cd = |f: &dyn Fn(f64) -> f64, t: f64| (f(t + step) - f(t - step)) / (2.0 * step);
        for i in 0..=400 {
            let t = -10.0 + i as f64 * 0.05;
            assert!((-t * dh(t) - s1(t)).abs() <= 1e-10);
            assert!((-t * ds1(t) - s2(t)).abs() <= 1e-10);
            assert!((-t * ds2(t) - s3(t)).abs() <= 1e-10);
            let h = |x: f64| h_of_t(x, &params);
            assert!((-t * cd(&h, t) - s1(t)).abs() <= 1e-6);
            assert!((-t * cd(&s1, t) - s2(t)).abs() <= 1e-6);
            assert!((-t * cd(&s2, t) - s3(t)).abs() <= 1e-6);
        }
    }

    #[test]
    fn support_region_examples() {
        let r = support_region(0.5).unwrap();
        assert_abs_diff_eq!(r.t_lo, 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.t_hi, 2f64.sqrt() + 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s1(r.t_lo), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s1(r.t_hi), 0.5, epsilon = 1e-12);
        assert!(r.contains(1.0));
        assert!(r.contains(-1.0));
        assert!(!r.contains(0.1));

        let r = support_region(1.0 - 1e-12).unwrap();
        assert_abs_diff_eq!(r.t_lo, 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(r.t_hi, 1.0, epsilon = 1e-5);

        assert!(support_region(0.0).is_err());
        assert!(support_region(1.0).is_err());
    }

    #[test]
    fn shell_examples() {
        let s = solve_shell(0.5, &p(0.0)).unwrap();
        assert_eq!(s.roots.len(), 2);
        assert_abs_diff_eq!(s.roots[0].k, PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.roots[1].k, -PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.roots[0].weight, 2.0 / 3f64.sqrt(), epsilon = 1e-15);

        assert!(solve_shell(2.0, &p(0.0)).unwrap().is_empty());

        let s = solve_shell(0.0, &p(0.0)).unwrap();
        assert_abs_diff_eq!(s.roots[0].k, PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.roots[0].weight, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn shell_band_edge() {
        assert!(matches!(solve_shell(1.0, &p(0.0)), Err(NessError::BandEdge { .. })));
        assert!(matches!(solve_shell(-1.0 - 5e-10, &p(0.0)), Err(NessError::BandEdge { .. })));
        assert!(matches!(solve_shell(0.7, &p(0.3)), Err(NessError::BandEdge { .. })));
    }

    proptest! {
        #[test]
        fn shell_roots_consistent(target in -1.5f64..1.5, g in -0.95f64..0.95) {
            let params = p(g);
            if let Ok(shell) = solve_shell(target, &params) {
                for r in &shell.roots {
                    prop_assert!((omega(r.k, &params) - target).abs() <= 1e-12);
                    prop_assert!((r.weight * r.k.sin().abs() - 1.0).abs() <= 1e-12);
                    prop_assert!(r.k >= -PI && r.k < PI);
                }
                prop_assert!(shell.roots.len() <= 2);
            }
        }

        #[test]
        fn support_region_inversion_symmetric(v in 1e-6f64..0.999999) {
            let r = support_region(v).unwrap();
            prop_assert!((r.t_lo * r.t_hi - 1.0).abs() <= 1e-12);
            prop_assert!(r.t_lo > 0.0 && r.t_lo < r.t_hi);
            prop_assert!((s1(r.t_lo) - v).abs() <= 1e-12);
            prop_assert!((s1(r.t_hi) - v).abs() <= 1e-12);
        }

        #[test]
        fn support_region_monotone(v1 in 0.01f64..0.98, dv in 0.001f64..0.01) {
            let a = support_region(v1).unwrap();
            let b = support_region(v1 + dv).unwrap();
            prop_assert!(a.t_lo <= b.t_lo && b.t_hi <= a.t_hi);
        }

        #[test]
        fn membership_matches_s1(t in -20.0f64..20.0, v in 0.01f64..0.99) {
            let r = support_region(v).unwrap();
            let s = s1(t);
            if (s - v).abs() > 1e-9 {
                prop_assert_eq!(r.contains(t), s >= v);
            }
        }
    }
}
