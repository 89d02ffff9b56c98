//! Truncated Taylor arithmetic of order 3.
//!
//! A [`Taylor`] holds the normalized coefficients `c[k] = f^(k)(z)/k!` of a
//! function at a point. Products, quotients and the elementary functions are
//! propagated with the usual recurrences, so derivatives come out exact up to
//! rounding. [`Jet3`] is the user-facing view holding the derivatives
//! themselves.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{Num, One, Zero};

use super::ExprError;

/// Number of stored coefficients (value plus three derivatives).
pub const ORDER: usize = 4;

const FACTORIAL: [f64; ORDER] = [1.0, 1.0, 2.0, 6.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<T> {
    pub c: [T; ORDER],
}

impl<T: Copy + Num> Taylor<T> {
    pub fn constant(v: T) -> Self {
        let mut c = [T::zero(); ORDER];
        c[0] = v;
        Self { c }
    }

    /// The independent variable evaluated at `v`.
    pub fn variable(v: T) -> Self {
        let mut c = [T::zero(); ORDER];
        c[0] = v;
        c[1] = T::one();
        Self { c }
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn scale(self, k: T) -> Self {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v = *v * k;
        }
        Self { c }
    }

    /// Integer power by repeated squaring; well defined at zero.
    pub fn powi(self, n: i32) -> Result<Self, ExprError> {
        if n < 0 {
            return Self::constant(T::one()).checked_div(self.powi(-n)?);
        }
        let mut result = Self::constant(T::one());
        let mut base = self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            e >>= 1;
        }
        Ok(result)
    }
}

impl<T: Copy + Num> Taylor<T>
where
    T: PartialEq,
{
    pub fn checked_div(self, rhs: Self) -> Result<Self, ExprError> {
        let b0 = rhs.c[0];
        if b0 == T::zero() {
            return Err(ExprError::Singular("division by zero"));
        }
        let mut c = [T::zero(); ORDER];
        for k in 0..ORDER {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc = acc - rhs.c[j] * c[k - j];
            }
            c[k] = acc / b0;
        }
        Ok(Self { c })
    }
}

impl<T: Copy + Num> Add for Taylor<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a = *a + b;
        }
        Self { c }
    }
}

impl<T: Copy + Num> Sub for Taylor<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a = *a - b;
        }
        Self { c }
    }
}

impl<T: Copy + Num> Mul for Taylor<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [T::zero(); ORDER];
        for (k, ck) in c.iter_mut().enumerate() {
            for j in 0..=k {
                *ck = *ck + self.c[j] * rhs.c[k - j];
            }
        }
        Self { c }
    }
}

/// Panics on a zero leading coefficient; use [`Taylor::checked_div`] when the
/// divisor may vanish.
impl<T: Copy + Num + PartialEq> Div for Taylor<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.checked_div(rhs).expect("jet division by zero")
    }
}

impl<T: Copy + Num + Neg<Output = T>> Neg for Taylor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v = -*v;
        }
        Self { c }
    }
}

pub type CTaylor = Taylor<Complex64>;

fn on_negative_axis(a: Complex64) -> bool {
    a.re < 0.0 && a.im.abs() <= 1e-14 * a.re.abs()
}

impl CTaylor {
    pub fn exp(self) -> Self {
        let a = self.c;
        let mut e = [Complex64::zero(); ORDER];
        e[0] = a[0].exp();
        for k in 1..ORDER {
            let mut acc = Complex64::zero();
            for j in 1..=k {
                acc += a[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Self { c: e }
    }

    /// Principal logarithm; refuses arguments on the cut.
    pub fn ln(self) -> Result<Self, ExprError> {
        let a = self.c;
        if a[0].is_zero() {
            return Err(ExprError::Singular("logarithm of zero"));
        }
        if on_negative_axis(a[0]) {
            return Err(ExprError::BranchCut("log"));
        }
        let mut l = [Complex64::zero(); ORDER];
        l[0] = a[0].ln();
        for k in 1..ORDER {
            let mut acc = Complex64::zero();
            for j in 1..k {
                acc += l[j] * a[k - j] * j as f64;
            }
            l[k] = (a[k] - acc / k as f64) / a[0];
        }
        Ok(Self { c: l })
    }

    /// Principal square root; refuses arguments on the cut.
    pub fn sqrt(self) -> Result<Self, ExprError> {
        let a = self.c;
        if a[0].is_zero() {
            return Err(ExprError::Singular("square root at zero"));
        }
        if on_negative_axis(a[0]) {
            return Err(ExprError::BranchCut("sqrt"));
        }
        let mut s = [Complex64::zero(); ORDER];
        s[0] = a[0].sqrt();
        for k in 1..ORDER {
            let mut acc = a[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (s[0] * 2.0);
        }
        Ok(Self { c: s })
    }

    /// `self^p` on the principal branch, `exp(p log self)`.
    pub fn powc(self, p: Self) -> Result<Self, ExprError> {
        Ok((p * self.ln()?).exp())
    }

    /// Simultaneous sine and cosine.
    pub fn sin_cos(self) -> (Self, Self) {
        let a = self.c;
        let mut s = [Complex64::zero(); ORDER];
        let mut c = [Complex64::zero(); ORDER];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..ORDER {
            let mut ds = Complex64::zero();
            let mut dc = Complex64::zero();
            for j in 1..=k {
                ds += a[j] * c[k - j] * j as f64;
                dc -= a[j] * s[k - j] * j as f64;
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    /// Simultaneous hyperbolic sine and cosine.
    pub fn sinh_cosh(self) -> (Self, Self) {
        let a = self.c;
        let mut s = [Complex64::zero(); ORDER];
        let mut c = [Complex64::zero(); ORDER];
        s[0] = a[0].sinh();
        c[0] = a[0].cosh();
        for k in 1..ORDER {
            let mut ds = Complex64::zero();
            let mut dc = Complex64::zero();
            for j in 1..=k {
                ds += a[j] * c[k - j] * j as f64;
                dc += a[j] * s[k - j] * j as f64;
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Derivative view of the coefficients.
    pub fn to_jet(self) -> Jet3 {
        Jet3 {
            d0: self.c[0] * FACTORIAL[0],
            d1: self.c[1] * FACTORIAL[1],
            d2: self.c[2] * FACTORIAL[2],
            d3: self.c[3] * FACTORIAL[3],
        }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::one())
    }
}

/// Real jets reuse the complex recurrences along the real axis.
impl Taylor<f64> {
    pub fn to_complex(self) -> CTaylor {
        Taylor { c: self.c.map(|v| Complex64::new(v, 0.0)) }
    }

    fn from_re(t: CTaylor) -> Self {
        Taylor { c: t.c.map(|v| v.re) }
    }

    pub fn exp(self) -> Self {
        Self::from_re(self.to_complex().exp())
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.to_complex().sin_cos();
        (Self::from_re(s), Self::from_re(c))
    }

    /// Square root of a positive jet.
    pub fn sqrt(self) -> Result<Self, ExprError> {
        if self.c[0] <= 0.0 {
            return Err(ExprError::Singular("square root of a non-positive value"));
        }
        Ok(Self::from_re(self.to_complex().sqrt()?))
    }

    /// Derivatives `f, f′, f″, f‴`.
    pub fn derivatives(self) -> [f64; ORDER] {
        [self.c[0], self.c[1], self.c[2] * FACTORIAL[2], self.c[3] * FACTORIAL[3]]
    }
}

/// Value and first three complex derivatives of a holomorphic function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet3 {
    pub d0: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
}

impl Jet3 {
    pub fn as_array(&self) -> [Complex64; 4] {
        [self.d0, self.d1, self.d2, self.d3]
    }

    pub fn to_taylor(self) -> CTaylor {
        Taylor {
            c: [
                self.d0,
                self.d1 / FACTORIAL[1],
                self.d2 / FACTORIAL[2],
                self.d3 / FACTORIAL[3],
            ],
        }
    }
}
