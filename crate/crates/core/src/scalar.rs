//! Scalar fields used by the series and operator layers.
//!
//! Exact work happens over [`Q`] (unbounded rationals) or [`Gauss`]
//! (rationals adjoined `i`).  `Complex64` is admitted as a third instance so
//! the numeric modules can reuse the series recursions on floating-point
//! Taylor data.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational with unbounded numerator and denominator.
pub type Q = BigRational;

/// Builds `n/d` as an exact rational.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the integer `n` as an exact rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q` or an integer literal.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    Q::from_str(s).ok().filter(|r: &Q| !r.denom().is_zero())
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `[num, den]` pair as decimal strings, for JSON output.
pub fn q_pair(x: &Q) -> [String; 2] {
    [x.numer().to_string(), x.denom().to_string()]
}

/// A field usable as series / operator coefficients.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_q(x: &Q) -> Self;
    fn inv(&self) -> Option<Self>;
    fn to_c64(&self) -> Complex64;

    fn from_i64(n: i64) -> Self {
        Self::from_q(&qi(n))
    }
}

impl Scalar for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(q_to_f64(self), 0.0)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_q(x: &Q) -> Self {
        Complex64::new(q_to_f64(x), 0.0)
    }
    fn inv(&self) -> Option<Self> {
        if Scalar::is_zero(self) {
            None
        } else {
            Some(1.0 / self)
        }
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

/// Exact Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Gauss {
    pub re: Q,
    pub im: Q,
}

impl Gauss {
    pub fn new(re: Q, im: Q) -> Self {
        Gauss { re, im }
    }

    pub fn real(re: Q) -> Self {
        Gauss { re, im: <Q as Zero>::zero() }
    }

    pub fn i() -> Self {
        Gauss::new(<Q as Zero>::zero(), <Q as One>::one())
    }

    pub fn is_real(&self) -> bool {
        Zero::is_zero(&self.im)
    }

    pub fn conj(&self) -> Self {
        Gauss::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> Q {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (Zero::is_zero(&self.re), Zero::is_zero(&self.im)) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}*i", self.im),
            (false, false) => {
                if self.im.is_negative() {
                    write!(f, "{}-{}*i", self.re, -self.im.clone())
                } else {
                    write!(f, "{}+{}*i", self.re, self.im)
                }
            }
        }
    }
}

impl Add for Gauss {
    type Output = Gauss;
    fn add(self, rhs: Gauss) -> Gauss {
        Gauss::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Gauss {
    type Output = Gauss;
    fn sub(self, rhs: Gauss) -> Gauss {
        Gauss::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Gauss {
    type Output = Gauss;
    fn mul(self, rhs: Gauss) -> Gauss {
        if Zero::is_zero(&self.im) && Zero::is_zero(&rhs.im) {
            return Gauss::real(self.re * rhs.re);
        }
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        Gauss::new(re, im)
    }
}

impl Div for Gauss {
    type Output = Gauss;
    fn div(self, rhs: Gauss) -> Gauss {
        self * rhs.inv().expect("division by zero Gaussian rational")
    }
}

impl Neg for Gauss {
    type Output = Gauss;
    fn neg(self) -> Gauss {
        Gauss::new(-self.re, -self.im)
    }
}

impl Scalar for Gauss {
    fn zero() -> Self {
        Gauss::real(<Q as Zero>::zero())
    }
    fn one() -> Self {
        Gauss::real(<Q as One>::one())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn from_q(x: &Q) -> Self {
        Gauss::real(x.clone())
    }
    fn inv(&self) -> Option<Self> {
        if Scalar::is_zero(self) {
            return None;
        }
        if self.is_real() {
            return Some(Gauss::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Some(Gauss::new(&self.re / &n, -(&self.im / &n)))
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(q_to_f64(&self.re), q_to_f64(&self.im))
    }
}

/// Exact square root of a rational, if it is a perfect square.
pub fn q_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

/// Exact square root in `Q(i)`, if one exists.
pub fn gauss_sqrt(z: &Gauss) -> Option<Gauss> {
    if Scalar::is_zero(&z.im) {
        if let Some(r) = q_sqrt(&z.re) {
            return Some(Gauss::real(r));
        }
        return q_sqrt(&-z.re.clone()).map(|r| Gauss::new(<Q as Scalar>::zero(), r));
    }
    // (x + iy)² = z: x² = (re + |z|)/2, y = im/(2x)
    let modulus = q_sqrt(&z.norm_sqr())?;
    let x = q_sqrt(&((&z.re + modulus) / Q::from_integer(2.into())))?;
    let y = &z.im / (&x * Q::from_integer(2.into()));
    Some(Gauss::new(x, y))
}

/// `n!` as an exact rational.
pub fn factorial(n: usize) -> Q {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Q::from_integer(acc)
}

/// Binomial coefficient `C(n, k)` as a machine integer.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}
