//! Lamé commutants with `g2`, `g3` kept as variables.
//!
//! The coefficients of `Q_m` and `P_m` are weighted-homogeneous polynomials in
//! `(g2, g3)` (weights 4 and 6).  They are recovered exactly by solving on
//! several rational curves and interpolating each coefficient over the
//! monomials `g2^α g3^β` of the right weight.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::spectral::spectral_polynomial;
use super::{find_commuting, CommutantError};
use crate::elliptic::EllipticInvariants;
use crate::lame::build_lame;
use crate::linalg::solve_augmented;
use crate::scalar::{q_to_f64, qi, Scalar, Q};

/// Sample curves: pairwise distinct `g2³/g3²`, all with a point over `Q(i)`
/// at `p = 0`.
const CURVES: [(i64, i64); 6] = [(4, 1), (1, -4), (-3, -1), (7, -9), (2, 1), (5, 4)];

/// `Σ c_{αβ} g2^α g3^β`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenericPoly {
    pub terms: BTreeMap<(u32, u32), Q>,
}

impl GenericPoly {
    pub fn eval<S: Scalar>(&self, g2: &S, g3: &S) -> S {
        self.terms.iter().fold(S::zero(), |acc, (&(a, b), c)| {
            let mut t = S::from_q(c);
            for _ in 0..a {
                t = t * g2.clone();
            }
            for _ in 0..b {
                t = t * g3.clone();
            }
            acc + t
        })
    }

    pub fn eval_c64(&self, g2: Complex64, g3: Complex64) -> Complex64 {
        self.terms.iter().fold(Complex64::new(0.0, 0.0), |acc, (&(a, b), c)| {
            acc + q_to_f64(c) * g2.powu(a) * g3.powu(b)
        })
    }
}

fn weight_monomials(w: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut b = 0;
    while 6 * b <= w {
        if (w - 6 * b).is_multiple_of(4) {
            out.push(((w - 6 * b) / 4, b));
        }
        b += 1;
    }
    out
}

fn fit(w: i64, values: &[(Q, Q, Q)]) -> Result<GenericPoly, CommutantError> {
    if w < 0 || w % 2 == 1 {
        return if values.iter().all(|v| v.2.is_zero()) {
            Ok(GenericPoly::default())
        } else {
            Err(CommutantError::InterpolationMismatch)
        };
    }
    let monos = weight_monomials(w as u32);
    let rows: Vec<Vec<Q>> = values
        .iter()
        .map(|(g2, g3, y)| {
            let mut r: Vec<Q> = monos
                .iter()
                .map(|&(a, b)| GenericPoly::default_mono(a, b).eval(g2, g3))
                .collect();
            r.push(y.clone());
            r
        })
        .collect();
    let x = solve_augmented(rows, monos.len()).ok_or(CommutantError::InterpolationMismatch)?;
    let terms = monos
        .into_iter()
        .zip(x)
        .filter(|(_, c)| !c.is_zero())
        .collect();
    Ok(GenericPoly { terms })
}

impl GenericPoly {
    fn default_mono(a: u32, b: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((a, b), Q::one());
        GenericPoly { terms }
    }
}

/// `Q_m` and `P_m` for the Lamé operator `D² − m(m+1)℘` on a general curve.
#[derive(Clone, Debug)]
pub struct GenericLamePair {
    pub m: u32,
    /// Coefficient of `p^a p′^b D^j`, keyed by `(j, a, b)`.
    pub q_terms: BTreeMap<(usize, u32, u8), GenericPoly>,
    /// Coefficients of `P_m`, constant first.
    pub p_coeffs: Vec<GenericPoly>,
}

impl GenericLamePair {
    pub fn compute(m: u32) -> Result<Self, CommutantError> {
        let s = 2 * m as usize + 1;
        let mut q_samples: BTreeMap<(usize, u32, u8), Vec<(Q, Q, Q)>> = BTreeMap::new();
        let mut p_samples: Vec<Vec<(Q, Q, Q)>> = vec![Vec::new(); s + 1];
        let mut ops = Vec::new();
        for &(g2, g3) in &CURVES {
            let inv = EllipticInvariants::new(qi(g2), qi(g3))
                .expect("sample curves are smooth")
                .into_arc();
            let l = build_lame(&qi(m as i64), &inv);
            let q = find_commuting(&l, s, None)?;
            let p = spectral_polynomial(&l, &q, None, 40)?;
            for (k, c) in p.coeffs.iter().enumerate() {
                p_samples[k].push((qi(g2), qi(g3), c.clone()));
            }
            ops.push((qi(g2), qi(g3), q));
        }
        for (_, _, q) in &ops {
            for (j, c) in q.coeffs().iter().enumerate() {
                for (a, b, _) in c.terms() {
                    q_samples.entry((j, a, b)).or_default();
                }
            }
        }
        for (key, samples) in q_samples.iter_mut() {
            for (g2, g3, q) in &ops {
                samples.push((g2.clone(), g3.clone(), q.coeff(key.0).coeff(key.1, key.2)));
            }
        }
        let mut q_terms = BTreeMap::new();
        for (key @ (j, a, b), samples) in q_samples {
            let w = s as i64 - j as i64 - 2 * a as i64 - 3 * b as i64;
            q_terms.insert(key, fit(w, &samples)?);
        }
        let p_coeffs = p_samples
            .iter()
            .enumerate()
            .map(|(k, samples)| fit(2 * (s as i64 - k as i64), samples))
            .collect::<Result<_, _>>()?;
        Ok(GenericLamePair {
            m,
            q_terms,
            p_coeffs,
        })
    }

    /// Cached [`GenericLamePair::compute`].
    pub fn get(m: u32) -> Result<Arc<Self>, CommutantError> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Arc<GenericLamePair>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(p) = cache.lock().expect("cache lock").get(&m) {
            return Ok(p.clone());
        }
        let p = Arc::new(GenericLamePair::compute(m)?);
        cache.lock().expect("cache lock").insert(m, p.clone());
        Ok(p)
    }

    pub fn order(&self) -> usize {
        2 * self.m as usize + 1
    }

    /// `P_m(λ)` on a curve with complex invariants.
    pub fn p_eval(&self, lambda: Complex64, g2: Complex64, g3: Complex64) -> Complex64 {
        self.p_coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * lambda + c.eval_c64(g2, g3))
    }

    /// Numeric coefficients `(j, a, b, c)` of `Q_m` (excluding `D^s`).
    pub fn q_numeric(&self, g2: Complex64, g3: Complex64) -> Vec<(usize, u32, u8, Complex64)> {
        self.q_terms
            .iter()
            .filter(|(k, _)| k.0 < self.order())
            .map(|(&(j, a, b), c)| (j, a, b, c.eval_c64(g2, g3)))
            .collect()
    }

    /// Specializes `Q_m` to a rational curve.
    pub fn q_on(
        &self,
        inv: &Arc<EllipticInvariants>,
    ) -> crate::opalg::DiffOp<crate::elliptic::EllipticElement> {
        use crate::elliptic::EllipticElement;
        let s = self.order();
        let mut coeffs = vec![EllipticElement::zero(inv); s + 1];
        for (&(j, a, b), c) in &self.q_terms {
            let v = c.eval(inv.g2(), inv.g3());
            coeffs[j] = coeffs[j].add(&EllipticElement::monomial(v, a, b as u32, inv));
        }
        crate::opalg::DiffOp::new(coeffs, EllipticElement::zero(inv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn first_pair_in_general_form() {
        let g = GenericLamePair::compute(1).unwrap();
        // P_1 = λ³ − (g2/4)λ − g3/4
        assert_eq!(g.p_coeffs[3].terms.get(&(0, 0)), Some(&qi(1)));
        assert_eq!(g.p_coeffs[1].terms.get(&(1, 0)), Some(&q(-1, 4)));
        assert_eq!(g.p_coeffs[0].terms.get(&(0, 1)), Some(&q(-1, 4)));
        assert!(g.p_coeffs[2].terms.is_empty());
    }

    #[test]
    fn specialization_matches_direct_solve() {
        let g = GenericLamePair::compute(2).unwrap();
        let inv = EllipticInvariants::new(q(3, 2), q(-2, 5)).unwrap().into_arc();
        let l = build_lame(&qi(2), &inv);
        let direct = find_commuting(&l, 5, None).unwrap();
        assert_eq!(g.q_on(&inv), direct);
    }
}
