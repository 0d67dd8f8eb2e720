//! Scalar abstraction shared by every geometric routine.
//!
//! All numerical code in this crate is written against [`Real`], which is a
//! thin extension of [`num_traits::Float`]. Two families implement it:
//!
//! * the primitive floats `f32` and `f64`;
//! * [`Jet`], a forward-mode second-order jet carrying a value, a gradient
//!   and a packed symmetric Hessian with respect to up to [`JET_VARS`]
//!   seeded variables.
//!
//! Evaluating a metric at jets yields the exact first and second partial
//! derivatives of `F²` in `(x, y)` that the spray and the fundamental tensor
//! are built from. Iterative solvers (the navigation root finder in
//! particular) stay exact under jets as long as they finish with a couple of
//! undamped Newton steps.

use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

/// Floating point scalar used throughout the crate.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for non-representable input,
    /// which cannot happen for the finite literals used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    /// Value used for branch decisions and convergence tests.
    #[inline]
    fn approx(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalars that can be built from plain values of `T` (constants) and whose
/// value part can be read back as `T`.
///
/// `T` lifts into itself and into [`Jet<T>`]; coefficient-carrying
/// structures are evaluated at any `S: Lift<T>`.
pub trait Lift<T: Real>: Real {
    fn lift(v: T) -> Self;
    fn value(self) -> T;
    /// Jet-aware dispatch for user-supplied evaluators that are only
    /// object-safe at concrete scalar types.
    fn dispatch<D: Dispatch<T> + ?Sized>(d: &D, x: &[Self], y: &[Self]) -> Option<Self>;
    fn dispatch_vec<D: Dispatch<T> + ?Sized>(d: &D, x: &[Self]) -> Option<Vec<Self>>;
}

/// Evaluators that provide values at `T` and, optionally, at `Jet<T>`.
pub trait Dispatch<T: Real> {
    fn at_value(&self, _x: &[T], _y: &[T]) -> Option<T> {
        None
    }
    fn at_jet(&self, _x: &[Jet<T>], _y: &[Jet<T>]) -> Option<Jet<T>> {
        None
    }
    fn vec_at_value(&self, _x: &[T]) -> Option<Vec<T>> {
        None
    }
    fn vec_at_jet(&self, _x: &[Jet<T>]) -> Option<Vec<Jet<T>>> {
        None
    }
}

impl<T: Real> Lift<T> for T {
    #[inline]
    fn lift(v: T) -> Self {
        v
    }
    #[inline]
    fn value(self) -> T {
        self
    }
    fn dispatch<D: Dispatch<T> + ?Sized>(d: &D, x: &[T], y: &[T]) -> Option<T> {
        d.at_value(x, y)
    }
    fn dispatch_vec<D: Dispatch<T> + ?Sized>(d: &D, x: &[T]) -> Option<Vec<T>> {
        d.vec_at_value(x)
    }
}

impl<T: Real> Lift<T> for Jet<T> {
    #[inline]
    fn lift(v: T) -> Self {
        Jet::constant(v)
    }
    #[inline]
    fn value(self) -> T {
        self.v
    }
    fn dispatch<D: Dispatch<T> + ?Sized>(d: &D, x: &[Self], y: &[Self]) -> Option<Self> {
        d.at_jet(x, y)
    }
    fn dispatch_vec<D: Dispatch<T> + ?Sized>(d: &D, x: &[Self]) -> Option<Vec<Self>> {
        d.vec_at_jet(x)
    }
}

/// Maximum number of seeded variables in a [`Jet`]. `(x, y)` jets use
/// `2n` variables, so charts up to dimension 4 are supported.
pub const JET_VARS: usize = 8;
const HESS_LEN: usize = JET_VARS * (JET_VARS + 1) / 2;

#[inline]
fn tri(i: usize, j: usize) -> usize {
    if i >= j {
        i * (i + 1) / 2 + j
    } else {
        j * (j + 1) / 2 + i
    }
}

/// Second-order forward-mode jet.
#[derive(Clone, Copy)]
pub struct Jet<T> {
    v: T,
    n: u8,
    g: [T; JET_VARS],
    h: [T; HESS_LEN],
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Jet {
            v,
            n: 0,
            g: [T::zero(); JET_VARS],
            h: [T::zero(); HESS_LEN],
        }
    }

    /// The `index`-th of `nvars` independent variables, evaluated at `v`.
    pub fn variable(v: T, index: usize, nvars: usize) -> Self {
        assert!(nvars <= JET_VARS, "jet supports at most {JET_VARS} variables");
        assert!(index < nvars);
        let mut j = Self::constant(v);
        j.n = nvars as u8;
        j.g[index] = T::one();
        j
    }

    /// Seeds a full vector of variables `values[k]` as variable `offset + k`.
    pub fn seed(values: &[T], offset: usize, nvars: usize) -> Vec<Self> {
        values
            .iter()
            .enumerate()
            .map(|(k, &v)| Self::variable(v, offset + k, nvars))
            .collect()
    }

    pub fn val(&self) -> T {
        self.v
    }

    pub fn nvars(&self) -> usize {
        self.n as usize
    }

    pub fn grad(&self, i: usize) -> T {
        self.g[i]
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.h[tri(i, j)]
    }

    #[inline]
    fn width(a: &Self, b: &Self) -> u8 {
        a.n.max(b.n)
    }

    /// Applies a scalar function with value `f0` and derivatives `f1`, `f2`.
    #[inline]
    fn chain(self, f0: T, f1: T, f2: T) -> Self {
        let m = self.n as usize;
        let mut out = Self::constant(f0);
        out.n = self.n;
        for i in 0..m {
            out.g[i] = f1 * self.g[i];
        }
        for i in 0..m {
            for j in 0..=i {
                let k = tri(i, j);
                out.h[k] = f1 * self.h[k] + f2 * self.g[i] * self.g[j];
            }
        }
        out
    }

    fn is_const(&self) -> bool {
        let m = self.n as usize;
        self.g[..m].iter().all(|g| g.is_zero()) && self.h[..m * (m + 1) / 2].iter().all(|h| h.is_zero())
    }

    fn with_value(mut self, v: T) -> Self {
        self.v = v;
        self
    }
}

impl<T: Real> Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.n as usize;
        f.debug_struct("Jet")
            .field("v", &self.v)
            .field("g", &&self.g[..m])
            .field("h", &&self.h[..m * (m + 1) / 2])
            .finish()
    }
}

impl<T: Real> Display for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.v, f)
    }
}

impl<T: Real> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

impl<T: Real> PartialOrd for Jet<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.v.partial_cmp(&other.v)
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let n = Self::width(&self, &b);
        let m = n as usize;
        let mut out = self;
        out.n = n;
        out.v = self.v + b.v;
        for i in 0..m {
            out.g[i] = self.g[i] + b.g[i];
        }
        for k in 0..m * (m + 1) / 2 {
            out.h[k] = self.h[k] + b.h[k];
        }
        out
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let m = self.n as usize;
        let mut out = self;
        out.v = -self.v;
        for i in 0..m {
            out.g[i] = -self.g[i];
        }
        for k in 0..m * (m + 1) / 2 {
            out.h[k] = -self.h[k];
        }
        out
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let n = Self::width(&self, &b);
        let m = n as usize;
        let mut out = Self::constant(self.v * b.v);
        out.n = n;
        for i in 0..m {
            out.g[i] = self.v * b.g[i] + b.v * self.g[i];
        }
        for i in 0..m {
            for j in 0..=i {
                let k = tri(i, j);
                out.h[k] = self.v * b.h[k]
                    + b.v * self.h[k]
                    + self.g[i] * b.g[j]
                    + self.g[j] * b.g[i];
            }
        }
        out
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    #[inline]
    fn div(self, b: Self) -> Self {
        if b.n == 0 {
            let inv = T::one() / b.v;
            return self.chain(self.v * inv, inv, T::zero());
        }
        self * b.recip()
    }
}

impl<T: Real> Rem for Jet<T> {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        self - (self / b).trunc() * b
    }
}

impl<T: Real> AddAssign for Jet<T> {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}
impl<T: Real> SubAssign for Jet<T> {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}
impl<T: Real> MulAssign for Jet<T> {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}
impl<T: Real> DivAssign for Jet<T> {
    fn div_assign(&mut self, b: Self) {
        *self = *self / b;
    }
}

impl<T: Real> Sum for Jet<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl<T: Real> Zero for Jet<T> {
    fn zero() -> Self {
        Self::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }
}

impl<T: Real> One for Jet<T> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Real> Num for Jet<T> {
    type FromStrRadixErr = <T as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(s, radix).map(Self::constant)
    }
}

impl<T: Real> ToPrimitive for Jet<T> {
    fn to_i64(&self) -> Option<i64> {
        self.v.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.v.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.v.to_f64()
    }
}

impl<T: Real> NumCast for Jet<T> {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        <T as NumCast>::from(n).map(Self::constant)
    }
}

impl<T: Real> FromPrimitive for Jet<T> {
    fn from_i64(n: i64) -> Option<Self> {
        T::from_i64(n).map(Self::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        T::from_u64(n).map(Self::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        T::from_f64(n).map(Self::constant)
    }
}

impl<T: Real> Float for Jet<T> {
    fn nan() -> Self {
        Self::constant(T::nan())
    }
    fn infinity() -> Self {
        Self::constant(T::infinity())
    }
    fn neg_infinity() -> Self {
        Self::constant(T::neg_infinity())
    }
    fn neg_zero() -> Self {
        Self::constant(T::neg_zero())
    }
    fn min_value() -> Self {
        Self::constant(T::min_value())
    }
    fn min_positive_value() -> Self {
        Self::constant(T::min_positive_value())
    }
    fn max_value() -> Self {
        Self::constant(T::max_value())
    }
    fn epsilon() -> Self {
        Self::constant(T::epsilon())
    }
    fn is_nan(self) -> bool {
        self.v.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.v.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.v.is_finite()
    }
    fn is_normal(self) -> bool {
        self.v.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.v.classify()
    }
    fn floor(self) -> Self {
        Self::constant(self.v.floor())
    }
    fn ceil(self) -> Self {
        Self::constant(self.v.ceil())
    }
    fn round(self) -> Self {
        Self::constant(self.v.round())
    }
    fn trunc(self) -> Self {
        Self::constant(self.v.trunc())
    }
    fn fract(self) -> Self {
        self.with_value(self.v.fract())
    }
    fn abs(self) -> Self {
        if self.v < T::zero() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Self::constant(self.v.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.v.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.v.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let r = T::one() / self.v;
        self.chain(r, -r * r, T::lit(2.0) * r * r * r)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            2 => self * self,
            _ => {
                let nf = T::from_i32(n).expect("small integer");
                let f2 = nf * (nf - T::one()) * self.v.powi(n - 2);
                self.chain(self.v.powi(n), nf * self.v.powi(n - 1), f2)
            }
        }
    }
    fn powf(self, p: Self) -> Self {
        if p.is_const() {
            let e = p.v;
            let f2 = e * (e - T::one()) * self.v.powf(e - T::lit(2.0));
            self.chain(self.v.powf(e), e * self.v.powf(e - T::one()), f2)
        } else {
            (p * self.ln()).exp()
        }
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let f1 = T::lit(0.5) / s;
        self.chain(s, f1, -T::lit(0.25) / (s * self.v))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn exp2(self) -> Self {
        let l = T::lit(std::f64::consts::LN_2);
        let e = self.v.exp2();
        self.chain(e, l * e, l * l * e)
    }
    fn ln(self) -> Self {
        let r = T::one() / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / Self::constant(T::lit(std::f64::consts::LN_2))
    }
    fn log10(self) -> Self {
        self.ln() / Self::constant(T::lit(std::f64::consts::LN_10))
    }
    fn max(self, other: Self) -> Self {
        if other.v > self.v || self.v.is_nan() {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other.v < self.v || self.v.is_nan() {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.v > other.v {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let c = self.v.cbrt();
        let f1 = T::one() / (T::lit(3.0) * c * c);
        let f2 = -T::lit(2.0) / (T::lit(9.0) * c.powi(5));
        self.chain(c, f1, f2)
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        let d = T::one() + t * t;
        self.chain(t, d, T::lit(2.0) * t * d)
    }
    fn asin(self) -> Self {
        let q = T::one() - self.v * self.v;
        let f1 = T::one() / q.sqrt();
        self.chain(self.v.asin(), f1, self.v * f1 / q)
    }
    fn acos(self) -> Self {
        let q = T::one() - self.v * self.v;
        let f1 = -T::one() / q.sqrt();
        self.chain(self.v.acos(), f1, self.v * f1 / q)
    }
    fn atan(self) -> Self {
        let q = T::one() + self.v * self.v;
        self.chain(self.v.atan(), T::one() / q, -T::lit(2.0) * self.v / (q * q))
    }
    fn atan2(self, other: Self) -> Self {
        let value = self.v.atan2(other.v);
        let local = if other.v.abs() >= self.v.abs() {
            (self / other).atan()
        } else {
            -(other / self).atan()
        };
        local.with_value(value)
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        let e = self.v.exp();
        self.chain(self.v.exp_m1(), e, e)
    }
    fn ln_1p(self) -> Self {
        let r = T::one() / (T::one() + self.v);
        self.chain(self.v.ln_1p(), r, -r * r)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let d = T::one() - t * t;
        self.chain(t, d, -T::lit(2.0) * t * d)
    }
    fn asinh(self) -> Self {
        let q = self.v * self.v + T::one();
        let f1 = T::one() / q.sqrt();
        self.chain(self.v.asinh(), f1, -self.v * f1 / q)
    }
    fn acosh(self) -> Self {
        let q = self.v * self.v - T::one();
        let f1 = T::one() / q.sqrt();
        self.chain(self.v.acosh(), f1, -self.v * f1 / q)
    }
    fn atanh(self) -> Self {
        let q = T::one() - self.v * self.v;
        self.chain(self.v.atanh(), T::one() / q, T::lit(2.0) * self.v / (q * q))
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.v.integer_decode()
    }
}

impl<T: Real> Real for Jet<T> {}

#[cfg(test)]
mod tests {
    use super::*;

    type J = Jet<f64>;

    fn fd_grad_hess(f: impl Fn(f64, f64) -> f64, a: f64, b: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let h = 1e-4;
        let gx = (f(a + h, b) - f(a - h, b)) / (2.0 * h);
        let gy = (f(a, b + h) - f(a, b - h)) / (2.0 * h);
        let hxx = (f(a + h, b) - 2.0 * f(a, b) + f(a - h, b)) / (h * h);
        let hyy = (f(a, b + h) - 2.0 * f(a, b) + f(a, b - h)) / (h * h);
        let hxy = (f(a + h, b + h) - f(a + h, b - h) - f(a - h, b + h) + f(a - h, b - h)) / (4.0 * h * h);
        ([gx, gy], [[hxx, hxy], [hxy, hyy]])
    }

    fn check<F, G>(fj: F, ff: G, a: f64, b: f64)
    where
        F: Fn(J, J) -> J,
        G: Fn(f64, f64) -> f64 + Copy,
    {
        let x = J::variable(a, 0, 2);
        let y = J::variable(b, 1, 2);
        let r = fj(x, y);
        let (g, h) = fd_grad_hess(ff, a, b);
        assert!((r.val() - ff(a, b)).abs() < 1e-12);
        for i in 0..2 {
            assert!((r.grad(i) - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "grad {i}: {} vs {}", r.grad(i), g[i]);
            for j in 0..2 {
                assert!(
                    (r.hess(i, j) - h[i][j]).abs() < 1e-5 * (1.0 + h[i][j].abs()),
                    "hess {i}{j}: {} vs {}",
                    r.hess(i, j),
                    h[i][j]
                );
            }
        }
    }

    #[test]
    fn arithmetic_matches_finite_differences() {
        check(|x, y| x * y / (x + y), |x, y| x * y / (x + y), 0.7, 1.3);
        check(|x, y| (x * x + y * y * y).sqrt(), |x, y| (x * x + y * y * y).sqrt(), 0.7, 1.3);
        check(|x, y| (x - y).exp() * x.ln(), |x, y| (x - y).exp() * x.ln(), 0.7, 1.3);
        check(|x, y| y.atan2(x) + x.powi(4), |x, y| y.atan2(x) + x.powi(4), -0.7, 0.3);
        check(|x, y| y.atan2(x), |x, y| y.atan2(x), 0.1, 0.9);
        check(|x, y| x.powf(y), |x, y| x.powf(y), 0.8, 1.7);
        check(|x, y| x.powf(J::constant(2.5)) * y.cbrt(), |x, y| x.powf(2.5) * y.cbrt(), 0.8, 1.7);
        check(|x, y| (x * y).sin().tanh() + x.exp_m1() - y.ln_1p(), |x, y| (x * y).sin().tanh() + x.exp_m1() - y.ln_1p(), 0.4, 0.6);
        check(|x, y| x.hypot(y).recip(), |x, y| x.hypot(y).recip(), 0.4, 0.6);
        check(|x, y| x.asin() * y.acos() + x.atanh() * y.asinh(), |x, y| x.asin() * y.acos() + x.atanh() * y.asinh(), 0.4, 0.6);
    }

    #[test]
    fn constants_carry_no_derivatives() {
        let c = J::constant(3.0);
        let x = J::variable(2.0, 0, 1);
        let r = c * x * x;
        assert_eq!(r.grad(0), 12.0);
        assert_eq!(r.hess(0, 0), 6.0);
        assert!(J::lit(1.5).is_const());
        assert_eq!(<J as Float>::epsilon().val(), f64::EPSILON);
    }

    #[test]
    fn lift_round_trip() {
        let j: J = Lift::lift(2.5);
        assert_eq!(Lift::<f64>::value(j), 2.5);
        assert_eq!(<f64 as Lift<f64>>::lift(1.0), 1.0);
    }
}
