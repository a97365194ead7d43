//! The Lamé operator `L_m = D² − m(m+1)℘` and its Hermite eigenfunctions.
//!
//! A point of the spectral curve is an elliptic function
//! `f = c0 + Σ_i ζ(z − a_i) − m·ζ(z)` with `m` simple poles of residue 1
//! and residue `−m` at the origin, subject to the Bethe conditions
//! `f(a_i + x) + f(a_i − x) → 0` as `x → 0`.  Then `π(f) = f² + f′ − m(m+1)℘`
//! is a constant `λ` and `ψ = e^{∫f}` solves `L_m ψ = λ ψ`.
//!
//! The pole set is indexed `a_0 = 0, a_1, …, a_m`; only `a_1..a_m` are unknowns.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::commutant::{CommutantError, GenericLamePair};
use crate::elliptic::{EllipticElement, EllipticError, EllipticInvariants, Lattice};
use crate::opalg::DiffOp;
use crate::scalar::{qi, Scalar, Q};
use crate::series::{solve_log_derivative, LaurentSeries, SeriesError};

/// Bethe residual at which Newton iteration stops.
pub const BETHE_TOL: f64 = 1e-10;

const PI_SAMPLES: usize = 20;
const CAUCHY_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LameError {
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("Newton iteration did not converge from seed {seed}")]
    NoConvergence { seed: u64 },
    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(String),
    #[error("m must be a positive integer for the Bethe solver")]
    UnsupportedM,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Commutant(#[from] CommutantError),
}

/// `L_m = D² − m(m+1)·℘` over the elliptic ring.
pub fn build_lame(m: &Q, inv: &Arc<EllipticInvariants>) -> DiffOp<EllipticElement> {
    let c = -(m * (m + qi(1)));
    DiffOp::new(
        vec![
            EllipticElement::p(inv).scale(&c),
            EllipticElement::zero(inv),
            EllipticElement::one(inv),
        ],
        EllipticElement::zero(inv),
    )
}

/// `f = c0 + Σ ζ(z − a_i) − m ζ(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteAnsatz {
    pub m: u32,
    pub poles: Vec<Complex64>,
    pub c0: Complex64,
    /// Max Bethe residual `|g_i|` at the stored data.
    pub residual: f64,
}

impl HermiteAnsatz {
    /// Checks pole count and separation, then records the Bethe residual.
    pub fn new(
        m: u32,
        poles: Vec<Complex64>,
        c0: Complex64,
        lat: &Lattice,
    ) -> Result<Self, LameError> {
        if poles.len() != m as usize {
            return Err(LameError::InvalidAnsatz(format!(
                "expected {m} poles, got {}",
                poles.len()
            )));
        }
        let tol = 1e-6 * lat.min_length();
        for (i, a) in poles.iter().enumerate() {
            if lat.distance_to_lattice(*a) < tol {
                return Err(LameError::InvalidAnsatz(format!("pole {i} sits at the origin")));
            }
            for b in &poles[..i] {
                if lat.distance_to_lattice(a - b) < tol {
                    return Err(LameError::InvalidAnsatz("coincident poles".into()));
                }
            }
        }
        let mut out = HermiteAnsatz {
            m,
            poles,
            c0,
            residual: 0.0,
        };
        out.residual = bethe_residuals(&out, lat)?
            .iter()
            .fold(0.0, |acc: f64, g| acc.max(g.norm()));
        Ok(out)
    }

    /// The involution `f(x) ↦ −f(−x)`: poles and `c0` change sign.
    pub fn sigma(&self) -> Self {
        HermiteAnsatz {
            m: self.m,
            poles: self.poles.iter().map(|a| -a).collect(),
            c0: -self.c0,
            residual: self.residual,
        }
    }

    fn pole_distance(&self, z: Complex64, lat: &Lattice) -> f64 {
        self.poles
            .iter()
            .map(|a| lat.distance_to_lattice(z - a))
            .fold(lat.distance_to_lattice(z), f64::min)
    }
}

/// `f(z)`.
pub fn hermite_f(ansatz: &HermiteAnsatz, lat: &Lattice, z: Complex64) -> Result<Complex64, LameError> {
    let mut acc = ansatz.c0 - lat.zeta(z)? * ansatz.m as f64;
    for a in &ansatz.poles {
        acc += lat.zeta(z - a)?;
    }
    Ok(acc)
}

/// `f′(z) = −Σ ℘(z − a_i) + m ℘(z)`.
pub fn hermite_df(ansatz: &HermiteAnsatz, lat: &Lattice, z: Complex64) -> Result<Complex64, LameError> {
    let mut acc = lat.wp(z)? * ansatz.m as f64;
    for a in &ansatz.poles {
        acc -= lat.wp(z - a)?;
    }
    Ok(acc)
}

/// `g_i = lim_{x→0} f(a_i + x) + f(a_i − x)
///      = 2 (c0 + Σ_{j≠i} ζ(a_i − a_j) − m ζ(a_i))`.
pub fn bethe_residuals(ansatz: &HermiteAnsatz, lat: &Lattice) -> Result<Vec<Complex64>, LameError> {
    let a = &ansatz.poles;
    let m = ansatz.m as f64;
    (0..a.len())
        .map(|i| {
            let mut s = ansatz.c0 - lat.zeta(a[i])? * m;
            for (j, aj) in a.iter().enumerate() {
                if j != i {
                    s += lat.zeta(a[i] - aj)?;
                }
            }
            Ok(2.0 * s)
        })
        .collect()
}

fn bethe_jacobian(poles: &[Complex64], m: f64, lat: &Lattice) -> Result<DMatrix<Complex64>, LameError> {
    let n = poles.len();
    let mut jac = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        let mut diag = lat.wp(poles[i])? * m;
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = lat.wp(poles[i] - poles[j])?;
            diag -= w;
            jac[(i, j)] = 2.0 * w;
        }
        jac[(i, i)] = 2.0 * diag;
    }
    Ok(jac)
}

/// Radical-inverse (van der Corput) value of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton point `(s, t)` in the unit square.
pub fn halton2(i: u64, bases: (u64, u64)) -> (f64, f64) {
    (radical_inverse(i, bases.0), radical_inverse(i, bases.1))
}

/// Seed poles for `seed`: successive Halton points in the period
/// parallelogram, skipping those within `0.05·|ω1|` of the origin or of a
/// previously chosen pole modulo the lattice.
pub fn seed_poles(m: u32, lat: &Lattice, seed: u64) -> Vec<Complex64> {
    let sep = 0.05 * lat.omega1().norm();
    let mut poles: Vec<Complex64> = Vec::with_capacity(m as usize);
    let mut i = 1 + seed * 7919;
    while poles.len() < m as usize {
        let (s, t) = halton2(i, (2, 3));
        i += 1;
        let z = lat.point(s, t);
        let ok = lat.distance_to_lattice(z) > sep
            && poles.iter().all(|p| lat.distance_to_lattice(z - p) > sep);
        if ok {
            poles.push(z);
        }
    }
    poles
}

/// A point of the spectral curve: a converged ansatz and `λ = π(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub ansatz: HermiteAnsatz,
    pub pi_residual: f64,
    pub seed: u64,
    pub iterations: usize,
}

/// Newton solve of the Bethe equations from the seed poles.
///
/// The curve of solutions is one-dimensional; the slice is fixed by holding
/// `c0` at the mean of the values that solve each equation at the seed.
pub fn solve_bethe(m: u32, lat: &Lattice, seed: u64) -> Result<SpectralPoint, LameError> {
    if m == 0 {
        return Err(LameError::UnsupportedM);
    }
    let mf = m as f64;
    let mut poles = seed_poles(m, lat, seed);
    let mut c0 = Complex64::new(0.0, 0.0);
    for i in 0..poles.len() {
        let mut s = lat.zeta(poles[i])? * mf;
        for j in 0..poles.len() {
            if j != i {
                s -= lat.zeta(poles[i] - poles[j])?;
            }
        }
        c0 += s;
    }
    c0 /= mf;

    let eval = |poles: &[Complex64]| -> Result<(Vec<Complex64>, f64), LameError> {
        let a = HermiteAnsatz {
            m,
            poles: poles.to_vec(),
            c0,
            residual: 0.0,
        };
        let g = bethe_residuals(&a, lat)?;
        let r = g.iter().fold(0.0, |acc: f64, x| acc.max(x.norm()));
        Ok((g, r))
    };
    let (mut g, mut res) = eval(&poles)?;
    let mut iterations = 0;
    while res >= BETHE_TOL {
        if iterations >= 100 {
            return Err(LameError::NoConvergence { seed });
        }
        iterations += 1;
        let jac = bethe_jacobian(&poles, mf, lat)?;
        let rhs = DVector::from_vec(g.clone());
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(LameError::NoConvergence { seed })?;
        let mut t = 1.0;
        loop {
            let trial: Vec<Complex64> = poles.iter().zip(step.iter()).map(|(a, d)| a - d * t).collect();
            let sep_ok = trial.iter().enumerate().all(|(i, a)| {
                lat.distance_to_lattice(*a) > 1e-4 * lat.min_length()
                    && trial[..i]
                        .iter()
                        .all(|b| lat.distance_to_lattice(a - b) > 1e-4 * lat.min_length())
            });
            if sep_ok {
                if let Ok((g2, r2)) = eval(&trial) {
                    if r2 < res || t < 1e-3 {
                        poles = trial;
                        g = g2;
                        res = r2;
                        break;
                    }
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(LameError::NoConvergence { seed });
            }
        }
    }
    let ansatz = HermiteAnsatz::new(m, poles, c0, lat)?;
    let (lambda, pi_residual) = pi_residual(&ansatz, lat)?;
    Ok(SpectralPoint {
        lambda,
        ansatz,
        pi_residual,
        seed,
        iterations,
    })
}

/// Samples `π(f) = f² + f′ − m(m+1)℘` at quasi-random points away from the
/// poles; returns the mean and the largest deviation from it.
pub fn pi_residual(ansatz: &HermiteAnsatz, lat: &Lattice) -> Result<(Complex64, f64), LameError> {
    let mm = (ansatz.m * (ansatz.m + 1)) as f64;
    let keep_out = 0.1 * lat.min_length();
    let mut values = Vec::with_capacity(PI_SAMPLES);
    let mut i = 1;
    while values.len() < PI_SAMPLES {
        let (s, t) = halton2(i, (5, 7));
        i += 1;
        let z = lat.point(s, t);
        if ansatz.pole_distance(z, lat) < keep_out {
            continue;
        }
        let f = hermite_f(ansatz, lat, z)?;
        let df = hermite_df(ansatz, lat, z)?;
        let wp = lat.wp(z)?;
        values.push(f * f + df - mm * wp);
    }
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let dev = values.iter().fold(0.0, |acc: f64, v| acc.max((v - mean).norm()));
    Ok((mean, dev))
}

/// Local data of `ψ = e^{∫f}` at an ordinary point.
#[derive(Clone, Debug)]
pub struct LocalEigenfunction {
    pub x0: Complex64,
    /// Radius of the Cauchy circle; coefficients are compared at this scale.
    pub radius: f64,
    /// Taylor series of `ψ` in `u = x − x0`, normalized to `ψ(x0) = 1`.
    pub psi: LaurentSeries<Complex64>,
    /// Taylor series of `f`.
    pub f: LaurentSeries<Complex64>,
}

/// Default base point for local checks: a fixed point of the period
/// parallelogram, nudged off the poles.
pub fn default_base(ansatz: &HermiteAnsatz, lat: &Lattice) -> Complex64 {
    let mut i = 3;
    loop {
        let (s, t) = halton2(i, (11, 13));
        let z = lat.point(0.15 + 0.7 * s, 0.15 + 0.7 * t);
        if ansatz.pole_distance(z, lat) > 0.2 * lat.min_length()
            && ansatz.sigma().pole_distance(z, lat) > 0.2 * lat.min_length()
        {
            return z;
        }
        i += 1;
    }
}

/// Taylor coefficients of `f` at `x0` by the trapezoidal Cauchy integral.
fn cauchy_taylor(
    ansatz: &HermiteAnsatz,
    lat: &Lattice,
    x0: Complex64,
    radius: f64,
    terms: usize,
) -> Result<LaurentSeries<Complex64>, LameError> {
    let k = CAUCHY_POINTS;
    let samples: Vec<Complex64> = (0..k)
        .map(|j| {
            let w = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / k as f64);
            hermite_f(ansatz, lat, x0 + w)
        })
        .collect::<Result<_, _>>()?;
    let coeffs = (0..terms)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, s) in samples.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (n * j) as f64 / k as f64;
                acc += s * Complex64::from_polar(1.0, phase);
            }
            acc / (k as f64 * radius.powi(n as i32))
        })
        .collect();
    Ok(LaurentSeries::new(0, coeffs, terms as i64))
}

/// Taylor series of `℘` at `x0` from `℘″ = 6℘² − g2/2`.
pub fn wp_taylor_numeric(lat: &Lattice, x0: Complex64, terms: usize) -> Result<LaurentSeries<Complex64>, LameError> {
    let v = lat.values(x0)?;
    let mut p = vec![Complex64::new(0.0, 0.0); terms.max(2)];
    p[0] = v.wp;
    p[1] = v.wp_prime;
    for k in 0..terms.saturating_sub(2) {
        let mut sq = Complex64::new(0.0, 0.0);
        for i in 0..=k {
            sq += p[i] * p[k - i];
        }
        let mut rhs = 6.0 * sq;
        if k == 0 {
            rhs -= lat.g2() / 2.0;
        }
        p[k + 2] = rhs / ((k + 2) * (k + 1)) as f64;
    }
    p.truncate(terms);
    Ok(LaurentSeries::new(0, p, terms as i64))
}

/// Builds `ψ = e^{∫f}` at `x0` via the Taylor series of `f`.
pub fn local_eigenfunction(
    ansatz: &HermiteAnsatz,
    lat: &Lattice,
    x0: Complex64,
    terms: usize,
) -> Result<LocalEigenfunction, LameError> {
    let radius = (0.5 * ansatz.pole_distance(x0, lat)).min(0.25 * lat.min_length());
    let f = cauchy_taylor(ansatz, lat, x0, radius, terms + 1)?;
    let (rho, psi) = solve_log_derivative(&f, terms as i64 + 2)?;
    debug_assert!(rho.norm() == 0.0);
    Ok(LocalEigenfunction {
        x0,
        radius,
        psi,
        f,
    })
}

/// Largest scaled coefficient `|c_k|·r^k` of a series below `terms`.
fn scaled_max(s: &LaurentSeries<Complex64>, r: f64, terms: usize) -> f64 {
    (0..terms as i64)
        .map(|k| s.coeff(k).map_or(0.0, |c| c.norm() * r.powi(k as i32)))
        .fold(0.0, f64::max)
}

/// Residual of `(L_m − λ)ψ` for `ψ = e^{∫f}` through `terms` Taylor
/// coefficients, each scaled by `r^k` for the Cauchy radius `r` and
/// relative to the size of `ψ` on that circle.
pub fn eigenfunction_check(
    ansatz: &HermiteAnsatz,
    lat: &Lattice,
    lambda: Complex64,
    terms: usize,
) -> Result<f64, LameError> {
    let x0 = default_base(ansatz, lat);
    eigenfunction_check_at(ansatz, lat, lambda, x0, terms)
}

pub fn eigenfunction_check_at(
    ansatz: &HermiteAnsatz,
    lat: &Lattice,
    lambda: Complex64,
    x0: Complex64,
    terms: usize,
) -> Result<f64, LameError> {
    let loc = local_eigenfunction(ansatz, lat, x0, terms + 2)?;
    let mm = Complex64::new((ansatz.m * (ansatz.m + 1)) as f64, 0.0);
    let wp = wp_taylor_numeric(lat, x0, terms + 4)?;
    let pot = wp.scale(&mm).add(&LaurentSeries::constant(lambda, terms as i64 + 4));
    let res = loc.psi.derive_n(2).sub(&pot.mul(&loc.psi));
    let scale = scaled_max(&loc.psi, loc.radius, terms).max(1.0);
    Ok(scaled_max(&res, loc.radius, terms) / scale)
}

/// Wronskian at `x0` of `ψ_f` and `ψ_{σf}`, both normalized to 1 at `x0`:
/// `W = f_σ(x0) − f(x0)`.
pub fn sigma_wronskian(ansatz: &HermiteAnsatz, lat: &Lattice, x0: Complex64) -> Result<Complex64, LameError> {
    Ok(hermite_f(&ansatz.sigma(), lat, x0)? - hermite_f(ansatz, lat, x0)?)
}

/// Eigenvalue `μ` of `Q_m` on `ψ = e^{∫f}`, with the largest scaled
/// deviation of `Q_m ψ − μψ` from zero.
pub fn q_eigenvalue(
    ansatz: &HermiteAnsatz,
    lat: &Lattice,
    pair: &GenericLamePair,
    x0: Complex64,
    terms: usize,
) -> Result<(Complex64, f64), LameError> {
    let s = pair.order();
    let loc = local_eigenfunction(ansatz, lat, x0, terms + s + 2)?;
    let t = terms as i64 + s as i64 + 2;
    let p = wp_taylor_numeric(lat, x0, t as usize + 1)?;
    let dp = p.derive();
    let mut qpsi = loc.psi.derive_n(s);
    for (j, a, b, c) in pair.q_numeric(lat.g2(), lat.g3()) {
        let mut coef = LaurentSeries::constant(c, t);
        for _ in 0..a {
            coef = coef.mul(&p);
        }
        if b == 1 {
            coef = coef.mul(&dp);
        }
        qpsi = qpsi.add(&coef.mul(&loc.psi.derive_n(j)));
    }
    let mu = qpsi.coeff(0).unwrap_or_else(Complex64::zero);
    let dev = qpsi.sub(&loc.psi.scale(&mu));
    let scale = scaled_max(&qpsi, loc.radius, terms).max(1.0);
    Ok((mu, scaled_max(&dev, loc.radius, terms) / scale))
}

/// Residual diagnostics of one spectral point.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub bethe: f64,
    pub pi: f64,
    pub eigen: f64,
    pub sigma_lambda_gap: f64,
    pub wronskian: Complex64,
    /// `|μ² − P_m(λ)| / max(1, |P_m(λ)|)`, when the commutant is available.
    pub spectral: Option<f64>,
    pub mu: Option<Complex64>,
}

/// Runs every local check on a converged point.
pub fn verify_point(
    point: &SpectralPoint,
    lat: &Lattice,
    terms: usize,
    with_commutant: bool,
) -> Result<Verification, LameError> {
    let a = &point.ansatz;
    let sigma = HermiteAnsatz::new(a.m, a.sigma().poles, a.sigma().c0, lat)?;
    let (lambda_s, _) = pi_residual(&sigma, lat)?;
    let x0 = default_base(a, lat);
    let eigen = eigenfunction_check_at(a, lat, point.lambda, x0, terms)?
        .max(eigenfunction_check_at(&sigma, lat, lambda_s, x0, terms)?);
    let (spectral, mu) = if with_commutant {
        let pair = GenericLamePair::get(a.m)?;
        let (mu, _) = q_eigenvalue(a, lat, &pair, x0, terms)?;
        let pv = pair.p_eval(point.lambda, lat.g2(), lat.g3());
        (Some((mu * mu - pv).norm() / pv.norm().max(1.0)), Some(mu))
    } else {
        (None, None)
    };
    Ok(Verification {
        bethe: a.residual,
        pi: point.pi_residual,
        eigen,
        sigma_lambda_gap: (lambda_s - point.lambda).norm(),
        wronskian: sigma_wronskian(a, lat, x0)?,
        spectral,
        mu,
    })
}
