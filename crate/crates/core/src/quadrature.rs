//! Gauss–Legendre rules, composite panels and a simple adaptive integrator.

use crate::error::{NessError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 16-point rule used by the panel integrators.
    pub fn sixteen() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite 16-point Gauss–Legendre quadrature with panels distributed over
/// a set of disjoint intervals in proportion to their length.
#[derive(Debug, Clone, Copy)]
pub struct PanelGrid {
    pub total_nodes: usize,
}

impl PanelGrid {
    pub fn integrate<F: FnMut(f64) -> Complex64>(
        &self,
        intervals: &[(f64, f64)],
        mut f: F,
    ) -> Complex64 {
        let rule = GaussLegendre::sixteen();
        let panels_total = (self.total_nodes / rule.nodes.len()).max(1);
        let length: f64 = intervals.iter().map(|(a, b)| (b - a).max(0.0)).sum();
        let mut acc = Complex64::new(0.0, 0.0);
        if length <= 0.0 {
            return acc;
        }
        for &(a, b) in intervals {
            if b <= a {
                continue;
            }
            let panels = (((b - a) / length) * panels_total as f64).round().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                let hi = if p + 1 == panels { b } else { lo + h };
                acc += rule.integrate(lo, hi, &mut f);
            }
        }
        acc
    }
}

/// Adaptive bisection with a 16-point rule, comparing one panel against its
/// two halves. Fails after `max_depth` levels.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, rel_tol: f64, abs_tol: f64, mut f: F) -> Result<f64> {
    let rule = GaussLegendre::sixteen();
    let mut g = |x: f64| Complex64::new(f(x), 0.0);
    let whole = rule.integrate(a, b, &mut g).re;
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total = 0.0;
    // Tolerance is judged against a running scale estimate.
    let scale_est = whole.abs();
    const MAX_DEPTH: usize = 40;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut g).re;
        let right = rule.integrate(mid, hi, &mut g).re;
        let refined = left + right;
        let frac = (hi - lo) / (b - a);
        let tol = (rel_tol * scale_est).max(abs_tol) * frac.max(1e-3);
        if (refined - est).abs() <= tol {
            total += refined;
        } else if depth >= MAX_DEPTH {
            return Err(NessError::QuadratureFailure { a: lo, b: hi });
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}
