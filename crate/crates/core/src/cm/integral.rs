use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::operator::{build_cm, cm_commutator, mono_weight, CMOperator, Gen, Mono};
use super::CMError;
use crate::elliptic::Lattice;
use crate::scalar::{q, Scalar, Q};

/// Residual bound for commutators that vanish modulo elliptic identities.
pub const CM_RESIDUAL_TOL: f64 = 1e-8;

fn gen_values(x: &[Complex64], lat: &Lattice) -> Result<BTreeMap<Gen, Complex64>, CMError> {
    let mut out = BTreeMap::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let v = lat.values(x[i] - x[j])?;
            out.insert(Gen::W { i: i as u8, j: j as u8, k: 0 }, v.wp);
            out.insert(Gen::W { i: i as u8, j: j as u8, k: 1 }, v.wp_prime);
        }
    }
    out.insert(Gen::G2, lat.g2());
    out.insert(Gen::G3, lat.g3());
    Ok(out)
}

fn eval_mono(m: &Mono, vals: &BTreeMap<Gen, Complex64>) -> Complex64 {
    m.iter()
        .fold(Complex64::new(1.0, 0.0), |acc, (g, e)| acc * vals[g].powu(*e))
}

/// Coefficient functions of `op` evaluated at the point `x`, keyed by the
/// `∂`-exponent.
pub fn eval_coefficients(
    op: &CMOperator,
    x: &[Complex64],
    lat: &Lattice,
) -> Result<BTreeMap<Vec<u32>, Complex64>, CMError> {
    let vals = gen_values(x, lat)?;
    let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for ((d, mono), c) in &op.terms {
        let c = c.to_f64().unwrap_or(f64::NAN);
        *out.entry(d.clone()).or_insert(Complex64::new(0.0, 0.0)) += eval_mono(mono, &vals) * c;
    }
    Ok(out)
}

/// Random configurations with all pairwise differences at least
/// `0.15·min_length` away from the lattice.
pub fn sample_configurations(n: usize, lat: &Lattice, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sep = 0.15 * lat.min_length();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<Complex64> = (0..n)
            .map(|_| lat.point(rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let ok = (0..n).all(|i| (i + 1..n).all(|j| lat.distance_to_lattice(x[i] - x[j]) > sep));
        if ok {
            out.push(x);
        }
    }
    out
}

/// Random lattices with `ω1 = 1` and `ω2` in a box of the upper half plane.
pub fn random_lattices(count: usize, seed: u64) -> Vec<Lattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a77);
    (0..count)
        .map(|_| {
            let w2 = Complex64::new(rng.gen_range(-0.45..0.45), rng.gen_range(0.9..1.6));
            Lattice::new(Complex64::new(1.0, 0.0), w2).expect("ω2 lies in the upper half plane")
        })
        .collect()
}

/// Largest coefficient of `expr` over random configurations: zero exactly
/// when `expr` lies in the ideal of elliptic identities, up to rounding.
pub fn numeric_residual(expr: &CMOperator, lat: &Lattice, samples: usize, seed: u64) -> Result<f64, CMError> {
    if expr.is_zero() {
        return Ok(0.0);
    }
    let pts = sample_configurations(expr.n, lat, samples, seed);
    let vals = pts
        .par_iter()
        .map(|x| {
            eval_coefficients(expr, x, lat).map(|m| m.values().fold(0.0, |a: f64, v| a.max(v.norm())))
        })
        .collect::<Result<Vec<f64>, CMError>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut v = p.clone();
            v.insert(pos, n - 1);
            out.push(v);
        }
    }
    out
}

fn multi_indices(n: usize, total: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Non-constant monomials of weight at most `bound`.
fn monomials_up_to(n: usize, bound: u32) -> Vec<Mono> {
    let mut gens = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            gens.push(Gen::W { i: i as u8, j: j as u8, k: 0 });
            gens.push(Gen::W { i: i as u8, j: j as u8, k: 1 });
        }
    }
    gens.push(Gen::G2);
    gens.push(Gen::G3);
    let mut out = vec![Mono::new()];
    for g in gens {
        let mut next = Vec::new();
        for m in &out {
            let mut e = 0;
            loop {
                let mut mm = m.clone();
                if e > 0 {
                    mm.insert(g, e);
                }
                if mono_weight(&mm) > bound {
                    break;
                }
                next.push(mm);
                e += 1;
            }
        }
        out = next;
    }
    out.retain(|m| !m.is_empty());
    out
}

/// `S_n`-symmetrized ansatz terms of order below `j` with coefficient weight
/// at most `j − |α|`.  Constant-coefficient terms are omitted: these are the
/// trace terms through which polynomials in lower integrals would enter.
pub fn ansatz_basis(n: usize, m: &Q, j: u32) -> Vec<CMOperator> {
    let perms = permutations(n);
    let mut covered = BTreeSet::new();
    let mut basis = Vec::new();
    for order in (0..j).rev() {
        for alpha in multi_indices(n, order) {
            for mono in monomials_up_to(n, j - order) {
                let key = (alpha.clone(), mono.clone());
                if covered.contains(&key) {
                    continue;
                }
                let mut seed_op = CMOperator::zero(n, m.clone());
                seed_op.add_term(alpha.clone(), mono.clone(), Q::one());
                let mut orbit = CMOperator::zero(n, m.clone());
                for p in &perms {
                    let img = seed_op.permute(p);
                    covered.extend(img.terms.keys().cloned());
                    orbit = orbit.add(&img);
                }
                if !orbit.is_zero() {
                    basis.push(orbit);
                }
            }
        }
    }
    basis
}

/// Best rational approximation with denominator at most `max_den`.
pub fn rational_approx(x: f64, max_den: i64) -> Q {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let ai = a as i64;
        let h2 = ai.saturating_mul(h1).saturating_add(h0);
        let k2 = ai.saturating_mul(k1).saturating_add(k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    q(h1, k1)
}

/// Tunable sampling of [`solve_higher_integral`].
#[derive(Clone, Debug)]
pub struct IntegralOptions {
    pub lattices: usize,
    /// Configurations per lattice used to assemble the linear system.
    pub solve_samples: usize,
    /// Configurations per lattice used to certify the result.
    pub check_samples: usize,
    pub seed: u64,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        IntegralOptions {
            lattices: 3,
            solve_samples: 12,
            check_samples: 200,
            seed: 0,
        }
    }
}

/// Outcome of [`solve_higher_integral`].
#[derive(Clone, Debug)]
pub struct HigherIntegral {
    pub operator: CMOperator,
    pub unknowns: usize,
    /// Largest `numeric_residual` of `[L², L^j]` over the check lattices.
    pub residual: f64,
    /// Set when `L^j` is a polynomial in lower integrals.
    pub reducible: Option<String>,
}

/// Solves for `L^j = Σ∂_i^j + lower order` commuting with `L¹` and `L²`.
pub fn solve_higher_integral(n: usize, m: &Q, j: u32, opts: &IntegralOptions) -> Result<HigherIntegral, CMError> {
    if n == 0 || n > 3 || j == 0 || j > 3 {
        return Err(CMError::Unsupported(format!("n = {n}, j = {j}")));
    }
    if j as usize > n && !(n == 2 && j == 3) {
        return Err(CMError::Unsupported(format!("j = {j} exceeds n = {n}")));
    }
    let (l1, l2) = build_cm(n, m);
    let mut principal = CMOperator::zero(n, m.clone());
    for i in 0..n {
        principal = principal.add(&CMOperator::d(n, m.clone(), i, j));
    }
    let basis = ansatz_basis(n, m, j);
    let e0 = cm_commutator(&l2, &principal);
    let ek: Vec<CMOperator> = basis.par_iter().map(|b| cm_commutator(&l2, b)).collect();

    let lattices = random_lattices(opts.lattices, opts.seed);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (li, lat) in lattices.iter().enumerate() {
        for x in sample_configurations(n, lat, opts.solve_samples, opts.seed + li as u64) {
            let v0 = eval_coefficients(&e0, &x, lat)?;
            let vk = ek
                .iter()
                .map(|e| eval_coefficients(e, &x, lat))
                .collect::<Result<Vec<_>, _>>()?;
            let mut keys: BTreeSet<Vec<u32>> = v0.keys().cloned().collect();
            for v in &vk {
                keys.extend(v.keys().cloned());
            }
            let zero = Complex64::new(0.0, 0.0);
            for key in keys {
                let row: Vec<Complex64> = vk.iter().map(|v| *v.get(&key).unwrap_or(&zero)).collect();
                let b = -*v0.get(&key).unwrap_or(&zero);
                let scale = row.iter().fold(b.norm(), |a, c| a.max(c.norm()));
                if scale == 0.0 {
                    continue;
                }
                rows.push(row.iter().map(|c| c.re / scale).collect());
                rhs.push(b.re / scale);
                rows.push(row.iter().map(|c| c.im / scale).collect());
                rhs.push(b.im / scale);
            }
        }
    }
    let k = basis.len();
    let coeffs: Vec<Q> = if k == 0 {
        Vec::new()
    } else {
        let a = DMatrix::from_fn(rows.len(), k, |r, c| rows[r][c]);
        let b = DVector::from_vec(rhs);
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin < 1e-9 * smax {
            return Err(CMError::Ambiguous {
                free: svd.singular_values.iter().filter(|s| **s < 1e-9 * smax).count(),
            });
        }
        let x = svd.solve(&b, 1e-12).map_err(|e| CMError::Unsupported(e.to_string()))?;
        let fit = (&a * &x - &b).amax();
        if fit > 1e-6 {
            return Err(CMError::AnsatzTooSmall { j, misfit: fit });
        }
        x.iter().map(|v| rational_approx(*v, 1000)).collect()
    };
    let mut op = principal;
    for (b, c) in basis.iter().zip(&coeffs) {
        op = op.add(&b.scale(c));
    }
    if !cm_commutator(&l1, &op).is_zero() {
        return Err(CMError::NotTranslationInvariant);
    }
    let comm = cm_commutator(&l2, &op);
    let mut residual: f64 = 0.0;
    for (li, lat) in lattices.iter().enumerate() {
        residual = residual.max(numeric_residual(&comm, lat, opts.check_samples, opts.seed + 100 + li as u64)?);
    }
    if residual > CM_RESIDUAL_TOL {
        return Err(CMError::AnsatzTooSmall { j, misfit: residual });
    }
    let reducible = if j as usize > n {
        // Newton: p3 = (3/2) p1 p2 − (1/2) p1³ when e3 = 0
        let combo = l1.mul(&l2).scale(&q(3, 2)).sub(&l1.pow(3).scale(&q(1, 2)));
        if combo != op {
            return Err(CMError::Unsupported("unexpected integral above n".into()));
        }
        Some("3/2*L1*L2 - 1/2*L1^3".to_string())
    } else {
        None
    };
    Ok(HigherIntegral {
        operator: op,
        unknowns: k,
        residual,
        reducible,
    })
}
