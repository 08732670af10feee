//! Third-order Taylor jets: a value together with its first three derivatives
//! with respect to a single real variable.
//!
//! Jets carry the number of derivatives that are actually known. Arithmetic
//! keeps the smaller of the two orders, so a result never claims more
//! derivatives than its inputs supplied.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    d: [Complex64; MAX_ORDER + 1],
    order: usize,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Jet {
    pub fn new(d: [Complex64; MAX_ORDER + 1], order: usize) -> Self {
        let mut d = d;
        for x in d.iter_mut().skip(order.min(MAX_ORDER) + 1) {
            *x = ZERO;
        }
        Jet { d, order: order.min(MAX_ORDER) }
    }

    pub fn real(d: [f64; MAX_ORDER + 1]) -> Self {
        Jet::new(d.map(|x| Complex64::new(x, 0.0)), MAX_ORDER)
    }

    /// The independent variable itself.
    pub fn variable(t: f64) -> Self {
        Jet::real([t, 1.0, 0.0, 0.0])
    }

    pub fn constant(c: Complex64) -> Self {
        Jet::new([c, ZERO, ZERO, ZERO], MAX_ORDER)
    }

    pub fn real_constant(c: f64) -> Self {
        Jet::constant(Complex64::new(c, 0.0))
    }

    /// Value only, no derivative information.
    pub fn value_only(c: Complex64) -> Self {
        Jet::new([c, ZERO, ZERO, ZERO], 0)
    }

    pub fn zero() -> Self {
        Jet::real_constant(0.0)
    }

    pub fn value(&self) -> Complex64 {
        self.d[0]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Derivative of the given order, if known.
    pub fn derivative(&self, k: usize) -> Option<Complex64> {
        (k <= self.order).then(|| self.d[k])
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = self.order.min(order);
        for x in self.d.iter_mut().skip(self.order + 1) {
            *x = ZERO;
        }
        self
    }

    /// Jet of the derivative; loses one order.
    pub fn differentiate(&self) -> Option<Jet> {
        if self.order == 0 {
            return None;
        }
        Some(Jet::new([self.d[1], self.d[2], self.d[3], ZERO], self.order - 1))
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet::new(self.d.map(|x| x * c), self.order)
    }

    /// Derivatives of `t -> f(s * t)` given the jet of `f` at `s * t`.
    pub fn dilate(&self, s: f64) -> Jet {
        let mut d = self.d;
        let mut p = 1.0;
        for x in d.iter_mut() {
            *x *= p;
            p *= s;
        }
        Jet::new(d, self.order)
    }

    /// Composition `g(self)` where `g` is given by its value and derivatives
    /// at `self.value()`.
    pub fn compose(&self, g: [Complex64; MAX_ORDER + 1]) -> Jet {
        let [_, u1, u2, u3] = self.d;
        let d = [
            g[0],
            g[1] * u1,
            g[2] * u1 * u1 + g[1] * u2,
            g[3] * u1 * u1 * u1 + g[2] * u1 * u2 * 3.0 + g[1] * u3,
        ];
        Jet::new(d, self.order)
    }

    pub fn exp(&self) -> Jet {
        let e = self.d[0].exp();
        self.compose([e, e, e, e])
    }

    pub fn recip(&self) -> Jet {
        let u = self.d[0];
        let r = u.inv();
        self.compose([r, -r * r, r * r * r * 2.0, -r * r * r * r * 6.0])
    }

    pub fn sqrt(&self) -> Jet {
        let u = self.d[0];
        let s = u.sqrt();
        let r = u.inv();
        self.compose([s, s * r * 0.5, -s * r * r * 0.25, s * r * r * r * 0.375])
    }

    pub fn div(&self, other: &Jet) -> Jet {
        *self * other.recip()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(rhs.d) {
            *x += y;
        }
        Jet::new(d, self.order.min(rhs.order))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(self.d.map(|x| -x), self.order)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (a, b) = (self.d, rhs.d);
        let d = [
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + a[1] * b[1] * 2.0 + a[0] * b[2],
            a[3] * b[0] + (a[2] * b[1] + a[1] * b[2]) * 3.0 + a[0] * b[3],
        ];
        Jet::new(d, self.order.min(rhs.order))
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self + Jet::real_constant(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(Complex64::new(rhs, 0.0))
    }
}
