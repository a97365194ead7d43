use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fiber::{action_matrix, find_base_point, localize, solution_basis_local, BasePoint};
use super::search::find_commuting;
use super::CommutantError;
use crate::elliptic::EllipticElement;
use crate::linalg::{determinant, interpolate, mat_mul, poly_eval};
use crate::opalg::DiffOp;
use crate::scalar::{q, qi, Gauss, Scalar, Q};
use crate::series::{fmt_term, join_terms, LaurentSeries};

/// `μ² = P(λ)` with `P` stored constant coefficient first.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurve {
    pub coeffs: Vec<Q>,
}

impl SpectralCurve {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&Q::one())
    }

    pub fn eval<S: Scalar>(&self, lambda: &S) -> S {
        let c: Vec<S> = self.coeffs.iter().map(S::from_q).collect();
        poly_eval(&c, lambda)
    }

    /// Discriminant `(−1)^{n(n−1)/2} Res(P, P′) / lead(P)`.
    pub fn discriminant(&self) -> Q {
        let n = self.degree();
        if n == 0 {
            return Q::one();
        }
        let p: Vec<Q> = self.coeffs.iter().rev().cloned().collect();
        let dp: Vec<Q> = (0..n)
            .map(|k| &p[k] * qi((n - k) as i64))
            .collect();
        // Sylvester matrix of P (degree n) and P′ (degree n−1)
        let size = 2 * n - 1;
        let mut m = vec![vec![Q::zero(); size]; size];
        for r in 0..n - 1 {
            for (k, c) in p.iter().enumerate() {
                m[r][r + k] = c.clone();
            }
        }
        for r in 0..n {
            for (k, c) in dp.iter().enumerate() {
                m[n - 1 + r][r + k] = c.clone();
            }
        }
        let res = determinant(m);
        let sign = if (n * (n - 1) / 2).is_multiple_of(2) { qi(1) } else { qi(-1) };
        sign * res / p[0].clone()
    }
}

impl fmt::Display for SpectralCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match k {
                0 => String::new(),
                1 => "lambda".to_string(),
                _ => format!("lambda^{k}"),
            };
            terms.push(fmt_term(&c.to_string(), &mono));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", join_terms(&terms))
    }
}

struct LocalPair {
    l: DiffOp<LaurentSeries<Gauss>>,
    q: DiffOp<LaurentSeries<Gauss>>,
    trunc: i64,
}

impl LocalPair {
    fn new(
        l: &DiffOp<EllipticElement>,
        q: &DiffOp<EllipticElement>,
        base: &BasePoint,
        trunc: i64,
    ) -> Self {
        LocalPair {
            l: localize(l, base, trunc),
            q: localize(q, base, trunc),
            trunc,
        }
    }

    fn action(&self, lambda: &Gauss) -> Result<Vec<Vec<Gauss>>, CommutantError> {
        let basis = solution_basis_local(&self.l, lambda, self.trunc)?;
        action_matrix(&self.q, &basis)
    }
}

fn scalar_value(m: &[Vec<Gauss>]) -> Option<Gauss> {
    let c = m[0][0].clone();
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let want = if i == j { c.clone() } else { Gauss::zero() };
            if *x != want {
                return None;
            }
        }
    }
    Some(c)
}

fn check_pair(
    l: &DiffOp<EllipticElement>,
    q: &DiffOp<EllipticElement>,
) -> Result<usize, CommutantError> {
    if l.order() != Some(2) {
        return Err(CommutantError::NotLameType);
    }
    let s = q.order().ok_or(CommutantError::EvenOrder(0))?;
    if s % 2 == 0 {
        return Err(CommutantError::EvenOrder(s));
    }
    if !l.commutator(q)?.is_zero() {
        return Err(CommutantError::NotCommuting);
    }
    Ok(s)
}

/// The monic `P` with `Q² = P(L)`, found by interpolating the scalar by which
/// `Q²` acts on solution fibers at `λ = 0, 1, 2, …`, then verified as an
/// exact operator identity.
pub fn spectral_polynomial(
    l: &DiffOp<EllipticElement>,
    q: &DiffOp<EllipticElement>,
    base: Option<&BasePoint>,
    trunc: i64,
) -> Result<SpectralCurve, CommutantError> {
    let s = check_pair(l, q)?;
    let base = match base {
        Some(b) => b.clone(),
        None => find_base_point(l.invariants())?,
    };
    let trunc = trunc.max(2 * s as i64 + 8);
    let local = LocalPair::new(l, q, &base, trunc);
    let needed = s + 1;

    let sample = |i: usize| -> Result<(Q, Option<Q>), CommutantError> {
        let lambda = Gauss::from_i64(i as i64);
        let m = local.action(&lambda)?;
        match scalar_value(&mat_mul(&m, &m)) {
            Some(c) if !c.is_real() => Err(CommutantError::InterpolationMismatch),
            c => Ok((lambda.re, c.map(|c| c.re))),
        }
    };
    let first: Vec<_> = (0..needed)
        .into_par_iter()
        .map(sample)
        .collect::<Result<_, _>>()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut next = needed;
    let mut pending = first;
    while xs.len() < needed {
        for (x, y) in pending.drain(..) {
            if let Some(y) = y {
                xs.push(x);
                ys.push(y);
            }
        }
        if xs.len() < needed {
            if next > 4 * needed + 8 {
                return Err(CommutantError::NonScalarAction {
                    lambda: next.to_string(),
                });
            }
            pending.push(sample(next)?);
            next += 1;
        }
    }
    xs.truncate(needed);
    ys.truncate(needed);
    let coeffs = interpolate(&xs, &ys);
    let curve = SpectralCurve { coeffs };
    if curve.degree() != s || !curve.is_monic() {
        return Err(CommutantError::InterpolationMismatch);
    }
    if !q.pow(2).sub(&l.poly(&curve.coeffs))?.is_zero() {
        return Err(CommutantError::InterpolationMismatch);
    }
    Ok(curve)
}

/// Outcome of [`algebraic_type_test`].
#[derive(Clone, Debug)]
pub enum Verdict {
    AlgebraicType {
        order: usize,
        witness: DiffOp<EllipticElement>,
        curve: SpectralCurve,
        regular_samples: usize,
        samples: usize,
    },
    NoWitnessUpTo(usize),
}

fn is_regular_semisimple(m: &[Vec<Gauss>]) -> bool {
    match m.len() {
        0 | 1 => true,
        2 => {
            let tr = m[0][0].clone() + m[1][1].clone();
            let det = determinant(m.to_vec());
            !(tr.clone() * tr - Gauss::from_i64(4) * det).is_zero()
        }
        _ => false,
    }
}

/// Searches odd orders `s ≤ max_order` for a commuting operator and checks
/// that it acts regularly and semisimply on the fiber at random rational `λ`.
pub fn algebraic_type_test(
    l: &DiffOp<EllipticElement>,
    max_order: usize,
    wbound: Option<u32>,
    samples: usize,
    seed: u64,
    trunc: i64,
) -> Result<Verdict, CommutantError> {
    let base = find_base_point(l.invariants())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambdas: Vec<Gauss> = (0..samples)
        .map(|_| Gauss::real(q(rng.gen_range(-50..=50), rng.gen_range(1..=7))))
        .collect();
    for s in (1..=max_order).step_by(2) {
        let wq = match find_commuting(l, s, wbound) {
            Ok(wq) => wq,
            Err(CommutantError::NotFound { .. }) => continue,
            Err(e) => return Err(e),
        };
        let curve = spectral_polynomial(l, &wq, Some(&base), trunc)?;
        let local = LocalPair::new(l, &wq, &base, trunc.max(2 * s as i64 + 8));
        let regular = lambdas
            .par_iter()
            .map(|lam| local.action(lam).map(|m| is_regular_semisimple(&m)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|&r| r)
            .count();
        if regular > 0 || samples == 0 {
            return Ok(Verdict::AlgebraicType {
                order: s,
                witness: wq,
                curve,
                regular_samples: regular,
                samples,
            });
        }
    }
    Ok(Verdict::NoWitnessUpTo(max_order))
}

/// Pairwise commutators of a family of operators.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutativityReport {
    /// `(i, j, commutes)` for every `i < j`.
    pub pairs: Vec<(usize, usize, bool)>,
}

impl CommutativityReport {
    pub fn all_commute(&self) -> bool {
        self.pairs.iter().all(|p| p.2)
    }
}

pub fn centralizer_commutativity_check(
    found: &[DiffOp<EllipticElement>],
) -> Result<CommutativityReport, CommutantError> {
    let idx: Vec<(usize, usize)> = (0..found.len())
        .flat_map(|i| (i + 1..found.len()).map(move |j| (i, j)))
        .collect();
    let pairs = idx
        .par_iter()
        .map(|&(i, j)| Ok((i, j, found[i].commutator(&found[j])?.is_zero())))
        .collect::<Result<Vec<_>, CommutantError>>()?;
    Ok(CommutativityReport { pairs })
}
