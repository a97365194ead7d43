use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;

use super::CommutantError;
use crate::elliptic::{EllipticElement, EllipticInvariants};
use crate::opalg::{DiffOp, DiffRing};
use crate::scalar::{factorial, gauss_sqrt, q_sqrt, Gauss, Scalar, Q};
use crate::series::LaurentSeries;

/// An ordinary point `x0` given by exact values `(℘(x0), ℘′(x0))`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint {
    pub p0: Gauss,
    pub dp0: Gauss,
}

impl BasePoint {
    pub fn new(p0: Gauss, dp0: Gauss, inv: &EllipticInvariants) -> Result<Self, CommutantError> {
        if dp0.clone() * dp0.clone() != inv.cubic(&p0) {
            return Err(CommutantError::OffCurve);
        }
        Ok(BasePoint { p0, dp0 })
    }
}

/// Smallest-height point with rational `p0` and `p0′` rational or purely
/// imaginary, skipping the half-periods where `p0′ = 0`.  Curves without such
/// a point (e.g. `g2 = 4, g3 = 0`) fall back to Gaussian-rational `p0`.
pub fn find_base_point(inv: &EllipticInvariants) -> Result<BasePoint, CommutantError> {
    const MAX_HEIGHT: i64 = 40;
    for h in 0..=MAX_HEIGHT {
        for d in 1..=h.max(1) {
            for n in -h..=h {
                if n.abs().max(d) != h.max(1) && h > 0 {
                    continue;
                }
                if h == 0 && n != 0 {
                    continue;
                }
                if n.gcd(&d) != 1 && n != 0 {
                    continue;
                }
                let p0 = Q::new(BigInt::from(n), BigInt::from(d));
                let c = inv.cubic(&p0);
                if c.is_zero() {
                    continue;
                }
                if let Some(r) = q_sqrt(&c) {
                    return Ok(BasePoint {
                        p0: Gauss::real(p0),
                        dp0: Gauss::real(r),
                    });
                }
                if let Some(r) = q_sqrt(&-c) {
                    return Ok(BasePoint {
                        p0: Gauss::real(p0),
                        dp0: Gauss::new(Q::zero(), r),
                    });
                }
            }
        }
    }
    const GAUSS_HEIGHT: i64 = 12;
    for h in 1..=GAUSS_HEIGHT {
        for d in 1..=h {
            for n in -h..=h {
                for k in (-h..=h).filter(|&k| k != 0) {
                    if n.abs().max(k.abs()).max(d) != h || n.gcd(&k).gcd(&d) != 1 {
                        continue;
                    }
                    let p0 = Gauss::new(Q::new(n.into(), d.into()), Q::new(k.into(), d.into()));
                    let c = inv.cubic(&p0);
                    if c.is_zero() {
                        continue;
                    }
                    if let Some(r) = gauss_sqrt(&c) {
                        return Ok(BasePoint { p0, dp0: r });
                    }
                }
            }
        }
    }
    Err(CommutantError::NoBasePoint)
}

/// Taylor series of `℘` at the base point in `u = x − x0`, up to `u^trunc`.
fn wp_taylor(
    inv: &Arc<EllipticInvariants>,
    base: &BasePoint,
    trunc: i64,
) -> LaurentSeries<Gauss> {
    let mut coeffs = Vec::with_capacity(trunc as usize);
    let mut d = EllipticElement::p(inv);
    for k in 0..trunc.max(0) as usize {
        let fk = Gauss::from_q(&factorial(k)).inv().expect("nonzero factorial");
        coeffs.push(d.eval(&base.p0, &base.dp0) * fk);
        d = d.ring_derive();
    }
    LaurentSeries::new(0, coeffs, trunc)
}

/// Expands the coefficients of an elliptic operator at `x0`.
pub fn localize(
    op: &DiffOp<EllipticElement>,
    base: &BasePoint,
    trunc: i64,
) -> DiffOp<LaurentSeries<Gauss>> {
    let p = wp_taylor(op.invariants(), base, trunc + 1);
    let dp = p.derive();
    op.map(LaurentSeries::zero(trunc), |c| c.substitute(&p, &dp, trunc))
}

/// Echelon basis `ψ_k = u^k + O(u^N)` of `(L − λ)ψ = 0` for an operator with
/// power-series coefficients and unit leading coefficient.
pub fn solution_basis_local<S: Scalar>(
    l: &DiffOp<LaurentSeries<S>>,
    lambda: &S,
    trunc: i64,
) -> Result<Vec<LaurentSeries<S>>, CommutantError> {
    let Some(n_ord) = l.order() else {
        return Ok(Vec::new());
    };
    if l.coeffs().iter().any(|a| !a.is_zero() && a.valuation() < 0) {
        return Err(CommutantError::SingularPoint);
    }
    let lead0 = l.coeff(n_ord).coeff(0).unwrap_or_else(S::zero);
    let lead_inv = lead0.inv().ok_or(CommutantError::SingularPoint)?;
    let coeff_trunc = l.coeffs().iter().map(|a| a.trunc()).min().unwrap_or(trunc);
    let steps = (trunc - n_ord as i64).min(coeff_trunc);
    if steps <= 0 {
        return Err(CommutantError::TruncationTooLow(trunc));
    }
    let steps = steps as usize;
    let a: Vec<Vec<S>> = l
        .coeffs()
        .iter()
        .map(|c| {
            (0..steps)
                .map(|i| c.coeff(i as i64).unwrap_or_else(S::zero))
                .collect()
        })
        .collect();
    // falling factorials k(k−1)…(k−j+1) as scalars
    let ff = |k: usize, j: usize| -> S {
        (0..j).fold(S::one(), |acc, t| acc * S::from_i64((k - t) as i64))
    };
    let len = steps + n_ord;
    let mut basis = Vec::with_capacity(n_ord);
    for k in 0..n_ord {
        let mut c = vec![S::zero(); len];
        c[k] = S::one();
        for n in 0..steps {
            // coefficient of u^n in (L − λ)ψ, omitting the unknown c[n + N]
            let mut acc = -(lambda.clone() * c[n].clone());
            for (j, aj) in a.iter().enumerate() {
                for i in 0..=n {
                    let idx = n - i + j;
                    if (j == n_ord && i == 0) || aj[i].is_zero() || c[idx].is_zero() {
                        continue;
                    }
                    acc = acc + aj[i].clone() * c[idx].clone() * ff(idx, j);
                }
            }
            c[n + n_ord] = -(acc * lead_inv.clone()) / ff(n + n_ord, n_ord);
        }
        basis.push(LaurentSeries::new(0, c, len as i64));
    }
    Ok(basis)
}

/// Solution basis at an ordinary point of the curve.
#[derive(Clone, Debug)]
pub struct SolutionBasis {
    pub base: BasePoint,
    pub lambda: Gauss,
    pub basis: Vec<LaurentSeries<Gauss>>,
    pub trunc: i64,
}

impl SolutionBasis {
    /// Lowest exponent at which `(L − λ)ψ_k` has a nonzero coefficient,
    /// over all basis elements, or the residual's truncation if none.
    pub fn residual_order(&self, l: &DiffOp<EllipticElement>) -> i64 {
        let local = localize(l, &self.base, self.trunc);
        self.basis
            .iter()
            .map(|psi| {
                let r = local.apply(psi).sub(&psi.scale(&self.lambda));
                if r.is_zero() {
                    r.trunc()
                } else {
                    r.valuation()
                }
            })
            .min()
            .unwrap_or(self.trunc)
    }

    /// `ψ_k = u^k + O(u^N)`.
    pub fn is_echelon(&self) -> bool {
        let n = self.basis.len() as i64;
        self.basis.iter().enumerate().all(|(k, psi)| {
            (0..n).all(|j| {
                let c = psi.coeff(j).unwrap_or_else(Gauss::zero);
                if j == k as i64 {
                    c == Gauss::one()
                } else {
                    c.is_zero()
                }
            })
        })
    }
}

pub fn solution_basis(
    l: &DiffOp<EllipticElement>,
    lambda: &Gauss,
    base: &BasePoint,
    trunc: i64,
) -> Result<SolutionBasis, CommutantError> {
    let local = localize(l, base, trunc);
    let basis = solution_basis_local(&local, lambda, trunc)?;
    Ok(SolutionBasis {
        base: base.clone(),
        lambda: lambda.clone(),
        basis,
        trunc,
    })
}

/// Outcome of [`rank`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankReport {
    Rank(usize),
    /// The leading coefficient is not a unit; carries its printed form.
    UnitFailure { leading: String },
    ZeroOperator,
}

/// Dimension of the formal solution space: the order when the leading
/// coefficient is a unit.
pub fn rank<R: DiffRing>(l: &DiffOp<R>) -> RankReport {
    match (l.order(), l.leading()) {
        (Some(n), Some(a)) if a.is_unit() => RankReport::Rank(n),
        (Some(_), Some(a)) => RankReport::UnitFailure {
            leading: a.to_string(),
        },
        _ => RankReport::ZeroOperator,
    }
}

/// Matrix of `Q` on a local echelon basis: `M[j][k]` is the coefficient of
/// `u^j` in `Q ψ_k`.
pub(crate) fn action_matrix<S: Scalar>(
    q: &DiffOp<LaurentSeries<S>>,
    basis: &[LaurentSeries<S>],
) -> Result<Vec<Vec<S>>, CommutantError> {
    let n = basis.len();
    let mut m = vec![vec![S::zero(); n]; n];
    for (k, psi) in basis.iter().enumerate() {
        let image = q.apply(psi);
        if image.trunc() < 2 * n as i64 {
            return Err(CommutantError::TruncationTooLow(psi.trunc()));
        }
        for (j, row) in m.iter_mut().enumerate() {
            row[k] = image.coeff(j as i64).unwrap_or_else(S::zero);
        }
    }
    Ok(m)
}

/// Matrix of a commuting `Q` on the echelon solution basis at `λ`.
pub fn centralizer_action(
    l: &DiffOp<EllipticElement>,
    q: &DiffOp<EllipticElement>,
    lambda: &Gauss,
    base: &BasePoint,
    trunc: i64,
) -> Result<Vec<Vec<Gauss>>, CommutantError> {
    if !l.commutator(q)?.is_zero() {
        return Err(CommutantError::NotCommuting);
    }
    let sb = solution_basis(l, lambda, base, trunc)?;
    let lq = localize(q, base, trunc);
    action_matrix(&lq, &sb.basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lame::build_lame;
    use crate::scalar::{q, qi};

    #[test]
    fn default_curve_base_point() {
        let inv = EllipticInvariants::default_curve();
        let b = find_base_point(&inv).unwrap();
        assert_eq!(b.p0, Gauss::zero());
        assert_eq!(b.dp0, Gauss::i());
    }

    #[test]
    fn off_curve_rejected() {
        let inv = EllipticInvariants::default_curve();
        assert_eq!(
            BasePoint::new(Gauss::zero(), Gauss::one(), &inv),
            Err(CommutantError::OffCurve)
        );
    }

    #[test]
    fn second_derivative_basis() {
        let z = LaurentSeries::<Q>::zero(20);
        let d2 = DiffOp::d_pow(2, z.clone());
        let b = solution_basis_local(&d2, &qi(0), 20).unwrap();
        assert!(b[0].sub(&LaurentSeries::one(20)).is_zero());
        assert!(b[1].sub(&LaurentSeries::var(20)).is_zero());
    }

    #[test]
    fn first_order_basis_is_exponential() {
        let z = LaurentSeries::<Q>::zero(12);
        let d = DiffOp::d_pow(1, z);
        let b = solution_basis_local(&d, &q(3, 2), 12).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].coeff(2), Some(q(9, 8)));
        assert_eq!(b[0].coeff(3), Some(q(27, 48)));
    }

    #[test]
    fn lame_basis_residual() {
        let inv = EllipticInvariants::default_curve().into_arc();
        let l = build_lame(&qi(1), &inv);
        let base = find_base_point(&inv).unwrap();
        let sb = solution_basis(&l, &Gauss::zero(), &base, 30).unwrap();
        assert!(sb.is_echelon());
        assert!(sb.residual_order(&l) >= 28);
    }

    #[test]
    fn ranks() {
        let inv = EllipticInvariants::default_curve().into_arc();
        assert_eq!(rank(&build_lame(&qi(2), &inv)), RankReport::Rank(2));
        let t = 10;
        let u = LaurentSeries::<Q>::var(t);
        let d3 = DiffOp::d_pow(3, LaurentSeries::zero(t));
        let op = d3.add(&DiffOp::d_pow(1, LaurentSeries::zero(t)).left_mul(&u)).unwrap();
        assert_eq!(rank(&op), RankReport::Rank(3));
        let ud = DiffOp::d_pow(1, LaurentSeries::zero(t)).left_mul(&u);
        assert!(matches!(rank(&ud), RankReport::UnitFailure { .. }));
    }
}
