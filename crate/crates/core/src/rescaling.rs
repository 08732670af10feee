//! The rescaling group `u(θ)` on `L²(ℝ, 2/(t²+1) dt)`, its generator `p`,
//! and the q-transform `m ↦ −t m'` on multiplication functions.
//!
//! Functions carry Taylor jets (see [`Jet`]) so that derivatives up to third
//! order are exact whenever the underlying rule provides them. Functions built
//! from bare value closures fall back to five-point finite differences.

use crate::jet::{Jet, MAX_ORDER};
use crate::quadrature::PanelGrid;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Step of the five-point finite-difference fallback.
pub const FD_STEP: f64 = 1e-4;

const I: Complex64 = Complex64::new(0.0, 1.0);

type Rule = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

/// A complex function of the half-angle coordinate `t`.
#[derive(Clone)]
pub struct RadialFunction {
    rule: Rule,
    order: usize,
    support: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("order", &self.order)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl RadialFunction {
    /// A function given by its jet; `order` is the number of trustworthy derivatives.
    pub fn from_jet<F>(order: usize, support: Option<Vec<(f64, f64)>>, rule: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        RadialFunction { rule: Arc::new(rule), order: order.min(MAX_ORDER), support }
    }

    /// A function known only through its values; derivatives use finite differences.
    pub fn from_values<F>(support: Option<Vec<(f64, f64)>>, rule: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        RadialFunction { rule: Arc::new(move |t| Jet::value_only(rule(t))), order: 0, support }
    }

    pub fn constant(c: Complex64) -> Self {
        RadialFunction::from_jet(MAX_ORDER, None, move |_| Jet::constant(c))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.rule)(t).value()
    }

    pub fn jet(&self, t: f64) -> Jet {
        (self.rule)(t).with_order(self.order)
    }

    /// Number of derivatives available in closed form.
    pub fn analytic_order(&self) -> usize {
        self.order
    }

    pub fn is_finite_difference_only(&self) -> bool {
        self.order == 0
    }

    pub fn support(&self) -> Option<&[(f64, f64)]> {
        self.support.as_deref()
    }

    /// k-th derivative: exact when available, otherwise nested central differences.
    pub fn derivative(&self, t: f64, k: usize) -> Complex64 {
        if k <= self.order {
            return self.jet(t).derivative(k).unwrap_or_default();
        }
        let h = FD_STEP;
        let d = |x: f64| self.derivative(x, k - 1);
        (-d(t + 2.0 * h) + d(t + h) * 8.0 - d(t - h) * 8.0 + d(t - 2.0 * h)) / (12.0 * h)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &RadialFunction) -> RadialFunction {
        let (a, b) = (self.clone(), other.clone());
        let support = intersect_supports(self.support(), other.support());
        let order = self.order.min(other.order);
        RadialFunction::from_jet(order, support, move |t| a.jet(t) * b.jet(t))
    }

    pub fn scale(&self, c: Complex64) -> RadialFunction {
        let a = self.clone();
        RadialFunction::from_jet(self.order, self.support.clone(), move |t| a.jet(t).scale(c))
    }
}

fn scale_support(support: Option<&[(f64, f64)]>, factor: f64) -> Option<Vec<(f64, f64)>> {
    support.map(|s| {
        s.iter()
            .map(|&(a, b)| {
                let (x, y) = (a * factor, b * factor);
                (x.min(y), x.max(y))
            })
            .collect()
    })
}

pub(crate) fn intersect_supports(
    a: Option<&[(f64, f64)]>,
    b: Option<&[(f64, f64)]>,
) -> Option<Vec<(f64, f64)>> {
    match (a, b) {
        (None, None) => None,
        (Some(s), None) | (None, Some(s)) => Some(s.to_vec()),
        (Some(s), Some(r)) => {
            let mut out = Vec::new();
            for &(a0, a1) in s {
                for &(b0, b1) in r {
                    let (lo, hi) = (a0.max(b0), a1.min(b1));
                    if lo < hi {
                        out.push((lo, hi));
                    }
                }
            }
            out.sort_by(|x, y| x.0.total_cmp(&y.0));
            Some(out)
        }
    }
}

/// `(u(θ)g)(t) = e^{θ/2} √((t²+1)/(e^{2θ}t²+1)) g(e^θ t)`.
pub fn apply_u(theta: f64, f: &RadialFunction) -> RadialFunction {
    let f = f.clone();
    let s = theta.exp();
    let pre = (0.5 * theta).exp();
    let support = scale_support(f.support(), 1.0 / s);
    let order = f.order;
    RadialFunction::from_jet(order, support, move |t| {
        let x = Jet::variable(t);
        let ratio = (x * x + 1.0).div(&(x * x * (s * s) + 1.0));
        let amp = ratio.sqrt() * pre;
        amp * f.jet(s * t).dilate(s)
    })
}

/// `(pf)(t) = −i(½ f − t²/(t²+1) f + t f')`, the generator of `u(θ) = e^{iθp}`.
pub fn apply_p(f: &RadialFunction) -> RadialFunction {
    let f = f.clone();
    let support = f.support.clone();
    if f.order >= 1 {
        let order = f.order - 1;
        RadialFunction::from_jet(order, support, move |t| {
            let x = Jet::variable(t);
            let w = (x * x + 1.0).recip() + (-0.5);
            let j = f.jet(t);
            let d = j.differentiate().expect("order >= 1");
            (w * j + x * d).scale(-I)
        })
    } else {
        RadialFunction::from_values(support, move |t| {
            let w = 1.0 / (t * t + 1.0) - 0.5;
            -I * (f.eval(t) * w + f.derivative(t, 1) * t)
        })
    }
}

/// `(qm)(t) = −t m'(t)`.
pub fn q_transform(m: &RadialFunction) -> RadialFunction {
    let m = m.clone();
    let support = m.support.clone();
    if m.order >= 1 {
        let order = m.order - 1;
        RadialFunction::from_jet(order, support, move |t| {
            let d = m.jet(t).differentiate().expect("order >= 1");
            -(Jet::variable(t) * d)
        })
    } else {
        RadialFunction::from_values(support, move |t| -m.derivative(t, 1) * t)
    }
}

/// `t ↦ m(e^θ t)`: conjugating the multiplication operator by `u(θ)` rescales its argument.
pub fn rescale_multiplication(theta: f64, m: &RadialFunction) -> RadialFunction {
    let m = m.clone();
    let s = theta.exp();
    let support = scale_support(m.support(), 1.0 / s);
    RadialFunction::from_jet(m.order, support, move |t| m.jet(s * t).dilate(s))
}

/// Quadrature for the measure `dμ(t) = 2/(t²+1) dt` truncated to `|t| ≤ t_max`.
#[derive(Debug, Clone, Copy)]
pub struct MeasureQuadrature {
    pub t_max: f64,
    pub nodes: usize,
}

impl Default for MeasureQuadrature {
    fn default() -> Self {
        MeasureQuadrature { t_max: 50.0, nodes: 4096 }
    }
}

impl MeasureQuadrature {
    fn intervals(&self, support: Option<Vec<(f64, f64)>>) -> Vec<(f64, f64)> {
        let window = [(-self.t_max, self.t_max)];
        intersect_supports(support.as_deref(), Some(&window)).unwrap_or_default()
    }

    /// `⟨g, f⟩_μ = ∫ conj(g) f dμ`.
    pub fn inner(&self, g: &RadialFunction, f: &RadialFunction) -> Complex64 {
        let intervals = self.intervals(intersect_supports(g.support(), f.support()));
        PanelGrid { total_nodes: self.nodes }
            .integrate(&intervals, |t| g.eval(t).conj() * f.eval(t) * (2.0 / (t * t + 1.0)))
    }

    pub fn norm(&self, f: &RadialFunction) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }
}

/// `‖p³f‖_μ` computed on a uniform grid of spacing `h` over `[lo, hi]` with
/// five-point differences, the function taken as zero outside the window.
/// Used to detect functions outside the domain of `p³` by refinement.
pub fn p_cubed_norm_on_grid(f: &RadialFunction, lo: f64, hi: f64, h: f64) -> f64 {
    let n = ((hi - lo) / h).ceil() as usize + 1;
    let ts: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let mut vals: Vec<Complex64> = ts.iter().map(|&t| f.eval(t)).collect();
    for _ in 0..3 {
        let at = |v: &[Complex64], i: isize| -> Complex64 {
            if i < 0 || i as usize >= v.len() {
                Complex64::default()
            } else {
                v[i as usize]
            }
        };
        let next: Vec<Complex64> = (0..n)
            .map(|i| {
                let i = i as isize;
                let d = (-at(&vals, i + 2) + at(&vals, i + 1) * 8.0 - at(&vals, i - 1) * 8.0
                    + at(&vals, i - 2))
                    / (12.0 * h);
                let t = ts[i as usize];
                let w = 1.0 / (t * t + 1.0) - 0.5;
                -I * (vals[i as usize] * w + d * t)
            })
            .collect();
        vals = next;
    }
    let sum: f64 = vals
        .iter()
        .zip(&ts)
        .map(|(v, &t)| v.norm_sqr() * 2.0 / (t * t + 1.0))
        .sum();
    (sum * h).sqrt()
}
