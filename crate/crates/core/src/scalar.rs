//! Scalar abstractions.
//!
//! [`Real`] is the floating-point bound used by the spectrum and enumeration
//! code. [`Scalar`] is a smaller algebra implemented by `f64`, `Complex64`
//! and second-order Taylor jets, so a single analytic `ln Z` expression can
//! yield values, exact β-derivatives and complex-step parameter derivatives.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable by the spectrum and enumeration layers.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln Σ exp(x_i)` with a max shift. Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let s: T = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Minimal field with the elementary functions needed by analytic partition
/// functions.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    /// Real part of the primal value; used for branch selection only.
    fn re(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sqrt(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }

    fn abs_re(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }

    /// `ln cosh x`, stable for large |x|.
    fn ln_cosh(self) -> Self {
        let a = self.abs_re();
        a + (a.scale(-2.0)).exp().ln_1p() - Self::cst(std::f64::consts::LN_2)
    }

    fn cosh(self) -> Self {
        (self.exp() + (-self).exp()).scale(0.5)
    }

    fn sinh(self) -> Self {
        (self.exp() - (-self).exp()).scale(0.5)
    }

    fn tanh(self) -> Self {
        let a = self.abs_re();
        let e = a.scale(-2.0).exp();
        let t = (Self::cst(1.0) - e) / (Self::cst(1.0) + e);
        if self.re() < 0.0 {
            -t
        } else {
            t
        }
    }

    fn powi(self, n: u32) -> Self {
        let mut base = self;
        let mut acc = Self::cst(1.0);
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// `ln(e^self + e^other)`.
    fn lse2(self, other: Self) -> Self {
        let (hi, lo) = if self.re() >= other.re() {
            (self, other)
        } else {
            (other, self)
        };
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `ln Σ exp(x_i)` over any [`Scalar`], shifting by the term with largest
/// real part.
pub fn lse<S: Scalar>(xs: &[S]) -> S {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if x.re() > xs[best].re() {
            best = i;
        }
    }
    let m = xs[best];
    let mut acc = S::cst(0.0);
    for (i, &x) in xs.iter().enumerate() {
        if i != best {
            acc = acc + (x - m).exp();
        }
    }
    m + acc.ln_1p()
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn re(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Scalar for Complex64 {
    fn cst(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(&self) -> f64 {
        self.re
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn ln_1p(self) -> Self {
        let (x, y) = (self.re, self.im);
        Complex64::new(
            0.5 * (x * (2.0 + x) + y * y).ln_1p(),
            y.atan2(1.0 + x),
        )
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
}

/// Truncated Taylor series `v + d1·ε + d2·ε²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<S> {
    pub v: S,
    pub d1: S,
    pub d2: S,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(v: S) -> Self {
        Jet {
            v,
            d1: S::cst(0.0),
            d2: S::cst(0.0),
        }
    }

    pub fn variable(v: S) -> Self {
        Jet {
            v,
            d1: S::cst(1.0),
            d2: S::cst(0.0),
        }
    }

    /// Second derivative with respect to the seeded variable.
    pub fn second(&self) -> S {
        self.d2.scale(2.0)
    }

    // f(v) + f'(v) δ + f''(v) δ²/2 with δ = d1 ε + d2 ε².
    fn chain(self, f: S, df: S, ddf: S) -> Self {
        Jet {
            v: f,
            d1: df * self.d1,
            d2: df * self.d2 + (ddf * self.d1 * self.d1).scale(0.5),
        }
    }
}

impl<S: Scalar> Add for Jet<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl<S: Scalar> Sub for Jet<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Jet {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl<S: Scalar> Mul for Jet<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Jet {
            v: self.v * o.v,
            d1: self.v * o.d1 + self.d1 * o.v,
            d2: self.v * o.d2 + self.d1 * o.d1 + self.d2 * o.v,
        }
    }
}

impl<S: Scalar> Div for Jet<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q0 = self.v / o.v;
        let q1 = (self.d1 - q0 * o.d1) / o.v;
        let q2 = (self.d2 - q0 * o.d2 - q1 * o.d1) / o.v;
        Jet {
            v: q0,
            d1: q1,
            d2: q2,
        }
    }
}

impl<S: Scalar> Scalar for Jet<S> {
    fn cst(x: f64) -> Self {
        Jet::constant(S::cst(x))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = S::cst(1.0) / self.v;
        self.chain(self.v.ln(), r, -(r * r))
    }
    fn ln_1p(self) -> Self {
        let r = S::cst(1.0) / (S::cst(1.0) + self.v);
        self.chain(self.v.ln_1p(), r, -(r * r))
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let r = S::cst(1.0) / s;
        self.chain(s, r.scale(0.5), (r * r * r).scale(-0.25))
    }
}

/// Complex-step step size.
pub const COMPLEX_STEP: f64 = 1e-20;

/// Heat capacity `β² ∂²_β ln Z` of an analytic `ln Z`, evaluated exactly
/// with a β-jet.
pub fn heat_capacity_from_log_z<S, F>(log_z: F, beta: S) -> S
where
    S: Scalar,
    F: Fn(Jet<S>) -> Jet<S>,
{
    let j = log_z(Jet::variable(beta));
    beta * beta * j.second()
}

/// `(ln Z, ⟨E⟩, Var E)` from an analytic `ln Z(β)`.
pub fn log_z_moments<F>(log_z: F, beta: f64) -> (f64, f64, f64)
where
    F: Fn(Jet<f64>) -> Jet<f64>,
{
    let j = log_z(Jet::variable(beta));
    (j.v, -j.d1, j.second())
}

/// Gradient of `f` by complex step: `Im f(θ + i h e_k) / h`.
pub fn complex_step_gradient<F>(f: F, theta: &[f64]) -> Vec<f64>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    let mut z: Vec<Complex64> = theta.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    (0..theta.len())
        .map(|k| {
            z[k].im = COMPLEX_STEP;
            let g = f(&z).im / COMPLEX_STEP;
            z[k].im = 0.0;
            g
        })
        .collect()
}
