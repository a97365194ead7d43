//! Truncated Laurent series `Σ c_k u^k + O(u^T)` with exact coefficients.
//!
//! Storage is dense from the valuation up to the truncation order, so
//! `coeffs.len() == trunc - valuation` always holds.  Coefficients at
//! exponents `>= trunc` are unknown, never zero.  The leading stored
//! coefficient is nonzero unless the series is the zero series, whose
//! valuation is set equal to its truncation order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{q_pair, Scalar, Q};

/// Number of known terms beyond the valuation used when nothing else is asked for.
pub const DEFAULT_TRUNC: i64 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("cannot invert the zero series")]
    ZeroSeries,
    #[error("log-derivative has a pole of order {0} (at most a simple pole is allowed)")]
    PoleTooDeep(i64),
    #[error("series known only below u^{0}; residue is undetermined")]
    InsufficientPrecision(i64),
}

#[derive(Clone, PartialEq, Debug)]
pub struct LaurentSeries<S> {
    valuation: i64,
    coeffs: Vec<S>,
    trunc: i64,
}

impl<S: Scalar> LaurentSeries<S> {
    /// Builds `Σ coeffs[k] u^(start+k) + O(u^trunc)`; coefficients past `trunc`
    /// are dropped and missing ones below `trunc` are taken as zero.
    pub fn new(start: i64, coeffs: Vec<S>, trunc: i64) -> Self {
        let trunc = trunc.max(start);
        let len = (trunc - start) as usize;
        let mut coeffs = coeffs;
        coeffs.truncate(len);
        coeffs.resize(len, S::zero());
        let mut s = LaurentSeries {
            valuation: start,
            coeffs,
            trunc,
        };
        s.normalize();
        s
    }

    pub fn zero(trunc: i64) -> Self {
        LaurentSeries {
            valuation: trunc,
            coeffs: Vec::new(),
            trunc,
        }
    }

    pub fn constant(c: S, trunc: i64) -> Self {
        Self::monomial(c, 0, trunc)
    }

    pub fn one(trunc: i64) -> Self {
        Self::constant(S::one(), trunc)
    }

    /// `c·u^k + O(u^trunc)`.
    pub fn monomial(c: S, k: i64, trunc: i64) -> Self {
        if k >= trunc {
            return Self::zero(trunc);
        }
        Self::new(k, vec![c], trunc)
    }

    /// The local coordinate `u` itself.
    pub fn var(trunc: i64) -> Self {
        Self::monomial(S::one(), 1, trunc)
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => {
                self.valuation = self.trunc;
                self.coeffs.clear();
            }
            Some(0) => {}
            Some(k) => {
                self.coeffs.drain(..k);
                self.valuation += k as i64;
            }
        }
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Known coefficients, starting at the valuation.
    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Coefficient of `u^k`, or `None` when `k >= trunc`.
    pub fn coeff(&self, k: i64) -> Option<S> {
        if k >= self.trunc {
            None
        } else if k < self.valuation {
            Some(S::zero())
        } else {
            Some(self.coeffs[(k - self.valuation) as usize].clone())
        }
    }

    /// Leading coefficient; zero for the zero series.
    pub fn leading(&self) -> S {
        self.coeffs.first().cloned().unwrap_or_else(S::zero)
    }

    /// Forget every coefficient at exponent `>= t`.
    pub fn truncate(&self, t: i64) -> Self {
        if t >= self.trunc {
            return self.clone();
        }
        if t <= self.valuation {
            return Self::zero(t);
        }
        let mut c = self.coeffs.clone();
        c.truncate((t - self.valuation) as usize);
        Self::new(self.valuation, c, t)
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::new(
            self.valuation,
            self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
            self.trunc,
        )
    }

    /// Multiply by `u^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentSeries {
            valuation: self.valuation + k,
            coeffs: self.coeffs.clone(),
            trunc: self.trunc + k,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let v = self.valuation.min(other.valuation);
        let t = self.trunc.min(other.trunc);
        let coeffs = (v..t)
            .map(|k| {
                let a = self.coeff(k).unwrap_or_else(S::zero);
                let b = other.coeff(k).unwrap_or_else(S::zero);
                a + b
            })
            .collect();
        Self::new(v, coeffs, t)
    }

    pub fn neg(&self) -> Self {
        LaurentSeries {
            valuation: self.valuation,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            trunc: self.trunc,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Product; valuation adds and the result is known up to
    /// `min(ta + vb, tb + va)`.
    pub fn mul(&self, other: &Self) -> Self {
        let v = self.valuation + other.valuation;
        let t = (self.trunc + other.valuation).min(other.trunc + self.valuation);
        let len = (t - v).max(0) as usize;
        let a = &self.coeffs;
        let b = &other.coeffs;
        let mut out = Vec::with_capacity(len);
        for k in 0..len {
            let mut acc = S::zero();
            for (i, ai) in a.iter().enumerate().take(k + 1) {
                if let Some(bj) = b.get(k - i) {
                    acc = acc + ai.clone() * bj.clone();
                }
            }
            out.push(acc);
        }
        Self::new(v, out, t)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.trunc - self.valuation);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiplicative inverse with the same relative precision.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        if self.is_zero() {
            return Err(SeriesError::ZeroSeries);
        }
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let a0_inv = a[0].inv().ok_or(SeriesError::ZeroSeries)?;
        let mut b: Vec<S> = Vec::with_capacity(n);
        b.push(a0_inv.clone());
        for k in 1..n {
            let mut acc = S::zero();
            for i in 1..=k {
                acc = acc + a[i].clone() * b[k - i].clone();
            }
            b.push(-(acc * a0_inv.clone()));
        }
        let v = -self.valuation;
        Ok(Self::new(v, b, v + n as i64))
    }

    /// Termwise `d/du`; the truncation order drops by one.
    pub fn derive(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.valuation + i as i64;
                c.clone() * S::from_i64(k)
            })
            .collect();
        Self::new(self.valuation - 1, coeffs, self.trunc - 1)
    }

    /// `k`-th derivative.
    pub fn derive_n(&self, k: usize) -> Self {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.derive();
        }
        s
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LaurentSeries<T> {
        LaurentSeries::new(
            self.valuation,
            self.coeffs.iter().map(f).collect(),
            self.trunc,
        )
    }

    pub fn to_c64(&self) -> LaurentSeries<Complex64> {
        self.map(|c| c.to_c64())
    }

    /// Numeric value of the known part at `u`.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c.to_c64();
        }
        acc * u.powi(self.valuation as i32)
    }

    /// True when both series agree on every exponent below `t` (both must be
    /// known there).
    pub fn agrees_below(&self, other: &Self, t: i64) -> bool {
        if t > self.trunc || t > other.trunc {
            return false;
        }
        let lo = self.valuation.min(other.valuation);
        (lo..t).all(|k| self.coeff(k) == other.coeff(k))
    }
}

/// Local solution of `ψ′ = f·ψ` around `u = 0`.
///
/// Returns `(ρ, g)` with `ρ = Res_0 f` and `g` a unit power series,
/// `g(0) = 1`, such that `ψ = u^ρ·g`.  `g` is known up to
/// `min(trunc, trunc(f) + 1)`.
pub fn solve_log_derivative<S: Scalar>(
    f: &LaurentSeries<S>,
    trunc: i64,
) -> Result<(S, LaurentSeries<S>), SeriesError> {
    if f.trunc() < 0 {
        return Err(SeriesError::InsufficientPrecision(f.trunc()));
    }
    if !f.is_zero() && f.valuation() < -1 {
        return Err(SeriesError::PoleTooDeep(-f.valuation()));
    }
    let rho = f.coeff(-1).unwrap_or_else(S::zero);
    let t = trunc.min(f.trunc() + 1);
    if t <= 0 {
        return Ok((rho, LaurentSeries::zero(t)));
    }
    let h: Vec<S> = (0..f.trunc())
        .map(|k| f.coeff(k).unwrap_or_else(S::zero))
        .collect();
    let mut g: Vec<S> = Vec::with_capacity(t as usize);
    g.push(S::one());
    for k in 0..(t - 1) as usize {
        let mut acc = S::zero();
        for i in 0..=k {
            acc = acc + h[i].clone() * g[k - i].clone();
        }
        let denom = S::from_i64(k as i64 + 1).inv().expect("nonzero integer");
        g.push(acc * denom);
    }
    Ok((rho, LaurentSeries::new(0, g, t)))
}

impl<S: Scalar> Add for &LaurentSeries<S> {
    type Output = LaurentSeries<S>;
    fn add(self, rhs: Self) -> LaurentSeries<S> {
        LaurentSeries::add(self, rhs)
    }
}

impl<S: Scalar> Sub for &LaurentSeries<S> {
    type Output = LaurentSeries<S>;
    fn sub(self, rhs: Self) -> LaurentSeries<S> {
        LaurentSeries::sub(self, rhs)
    }
}

impl<S: Scalar> Mul for &LaurentSeries<S> {
    type Output = LaurentSeries<S>;
    fn mul(self, rhs: Self) -> LaurentSeries<S> {
        LaurentSeries::mul(self, rhs)
    }
}

impl<S: Scalar> Neg for &LaurentSeries<S> {
    type Output = LaurentSeries<S>;
    fn neg(self) -> LaurentSeries<S> {
        LaurentSeries::neg(self)
    }
}

pub(crate) fn fmt_term(coeff: &str, monomial: &str) -> (bool, String) {
    let (neg, body) = match coeff.strip_prefix('-') {
        Some(rest) if !rest.contains(['+', '-']) => (true, rest.to_string()),
        _ => (false, coeff.to_string()),
    };
    let body = if body.contains(['+', '-']) {
        format!("({body})")
    } else {
        body
    };
    let text = match (body.as_str(), monomial) {
        (b, "") => b.to_string(),
        ("1", m) => m.to_string(),
        (b, m) => format!("{b}*{m}"),
    };
    (neg, text)
}

pub(crate) fn join_terms(terms: &[(bool, String)]) -> String {
    let mut out = String::new();
    for (i, (neg, t)) in terms.iter().enumerate() {
        match (i, neg) {
            (0, true) => {
                out.push('-');
                out.push_str(t);
            }
            (0, false) => out.push_str(t),
            (_, true) => {
                out.push_str(" - ");
                out.push_str(t);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(t);
            }
        }
    }
    out
}

impl<S: Scalar> fmt::Display for LaurentSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = self.valuation + i as i64;
            let mono = match k {
                0 => String::new(),
                1 => "u".to_string(),
                _ => format!("u^{k}"),
            };
            terms.push(fmt_term(&c.to_string(), &mono));
        }
        terms.push((false, format!("O(u^{})", self.trunc)));
        write!(f, "{}", join_terms(&terms))
    }
}

/// JSON form `{valuation, coeffs: [[num, den], …], trunc}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub valuation: i64,
    pub coeffs: Vec<[String; 2]>,
    pub trunc: i64,
}

impl LaurentSeries<Q> {
    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            valuation: self.valuation,
            coeffs: self.coeffs.iter().map(q_pair).collect(),
            trunc: self.trunc,
        }
    }

    pub fn from_json(j: &SeriesJson) -> Option<Self> {
        let coeffs = j
            .coeffs
            .iter()
            .map(|[n, d]| crate::scalar::parse_q(&format!("{n}/{d}")))
            .collect::<Option<Vec<_>>>()?;
        Some(Self::new(j.valuation, coeffs, j.trunc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn s(start: i64, c: &[i64], t: i64) -> LaurentSeries<Q> {
        LaurentSeries::new(start, c.iter().map(|&x| qi(x)).collect(), t)
    }

    #[test]
    fn inverse_monomials() {
        let a = LaurentSeries::monomial(qi(1), -1, 10);
        let b = LaurentSeries::var(10);
        let p = a.mul(&b);
        assert_eq!(p.valuation(), 0);
        assert_eq!(p.coeff(0), Some(qi(1)));
        // min(10 + 1, 10 - 1) = 9
        assert_eq!(p.trunc(), 9);
        assert!(p.coeffs()[1..].iter().all(Scalar::is_zero));
    }

    #[test]
    fn difference_of_squares() {
        let a = s(0, &[1, 1], 12);
        let b = s(0, &[1, -1], 12);
        assert_eq!(a.mul(&b), s(0, &[1, 0, -1], 12));
    }

    #[test]
    fn geometric_inverse() {
        let inv = s(0, &[1, 1], 8).invert().unwrap();
        assert_eq!(inv, s(0, &[1, -1, 1, -1, 1, -1, 1, -1], 8));
        let inv2 = LaurentSeries::monomial(qi(1), -2, 6).invert().unwrap();
        assert_eq!(inv2.valuation(), 2);
        assert_eq!(inv2.coeff(2), Some(qi(1)));
        assert_eq!(inv2.trunc(), 10);
        assert_eq!(
            LaurentSeries::<Q>::zero(5).invert(),
            Err(SeriesError::ZeroSeries)
        );
    }

    #[test]
    fn derivatives() {
        let d = LaurentSeries::monomial(qi(1), -1, 5).derive();
        assert_eq!(d.valuation(), -2);
        assert_eq!(d.coeff(-2), Some(qi(-1)));
        assert_eq!(d.trunc(), 4);
        let c = LaurentSeries::constant(q(7, 3), 5).derive();
        assert!(c.is_zero());
        assert_eq!(c.trunc(), 4);
    }

    #[test]
    fn zero_series_normalization() {
        let z = s(0, &[0, 0, 0], 3);
        assert!(z.is_zero());
        assert_eq!(z.valuation(), 3);
        let t = s(-1, &[0, 0, 2], 4);
        assert_eq!(t.valuation(), 1);
        assert_eq!(t.coeff(1), Some(qi(2)));
    }

    #[test]
    fn log_derivative_of_zero_and_constants() {
        let (rho, g) = solve_log_derivative(&LaurentSeries::<Q>::zero(10), 10).unwrap();
        assert_eq!(rho, qi(0));
        assert_eq!(g, LaurentSeries::one(10));

        let c = q(2, 3);
        let (rho, g) = solve_log_derivative(&LaurentSeries::constant(c.clone(), 10), 6).unwrap();
        assert_eq!(rho, qi(0));
        let expected: Vec<Q> = (0..6)
            .map(|k| {
                let mut p = qi(1);
                for _ in 0..k {
                    p *= c.clone();
                }
                p / crate::scalar::factorial(k)
            })
            .collect();
        assert_eq!(g, LaurentSeries::new(0, expected, 6));
    }

    #[test]
    fn log_derivative_simple_pole() {
        let f = LaurentSeries::monomial(qi(-1), -1, 10);
        let (rho, g) = solve_log_derivative(&f, 10).unwrap();
        assert_eq!(rho, qi(-1));
        assert_eq!(g, LaurentSeries::one(10));
        let deep = LaurentSeries::monomial(qi(1), -2, 10);
        assert_eq!(
            solve_log_derivative(&deep, 10),
            Err(SeriesError::PoleTooDeep(2))
        );
    }

    #[test]
    fn display_form() {
        let p = LaurentSeries::new(-2, vec![qi(1), qi(0), qi(0), qi(0), q(1, 5)], 3);
        assert_eq!(p.to_string(), "u^-2 + 1/5*u^2 + O(u^3)");
        let n = s(0, &[-1, 2], 2);
        assert_eq!(n.to_string(), "-1 + 2*u + O(u^2)");
    }

    #[test]
    fn json_roundtrip() {
        let p = LaurentSeries::new(-2, vec![qi(1), qi(0), q(-3, 7)], 1);
        let j = p.to_json();
        assert_eq!(j.coeffs[2], ["-3".to_string(), "7".to_string()]);
        assert_eq!(LaurentSeries::from_json(&j), Some(p));
    }
}
