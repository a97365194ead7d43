use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::ToPrimitive;

use super::integral::{solve_higher_integral, IntegralOptions};
use super::operator::{build_cm, CMOperator, Gen};
use super::CMError;
use crate::commutant::{rank, RankReport};
use crate::elliptic::{EllipticInvariants, Lattice};
use crate::lame::{default_base, local_eigenfunction, seed_poles, wp_taylor_numeric, HermiteAnsatz, BETHE_TOL};
use crate::scalar::qi;
use crate::series::LaurentSeries;

type C = Complex64;

fn czero() -> C {
    C::new(0.0, 0.0)
}

/// `α_k = e_k − e_{k+1}` (1-based `k`).
pub fn simple_root(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k - 1] = 1.0;
    v[k] = -1.0;
    v
}

/// Residue at the origin: `−m((n−1)α_1 + … + α_{n−1})`.
pub fn origin_residue(n: usize, m: u32) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for k in 1..n {
        for (x, a) in v.iter_mut().zip(simple_root(n, k)) {
            *x -= (m as usize * (n - k)) as f64 * a;
        }
    }
    v
}

/// Residue labels in the required pattern: `m(n−1)` copies of 1, then
/// `m(n−2)` copies of 2, …, `m` copies of `n−1`.
pub fn residue_pattern(n: usize, m: u32) -> Vec<usize> {
    (1..n)
        .flat_map(|k| std::iter::repeat_n(k, m as usize * (n - k)))
        .collect()
}

fn dot_rc(r: &[f64], v: &[C]) -> C {
    r.iter().zip(v).map(|(a, b)| b * *a).sum()
}

fn dot_rr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An `h`-valued Hermite ansatz `f = c + Σ r_i ζ(x − a_i) + r_0 ζ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CMBetheState {
    pub n: usize,
    pub m: u32,
    pub poles: Vec<C>,
    /// `k` such that the residue at `poles[i]` is `α_k`.
    pub residue_index: Vec<usize>,
    /// Constant term, a vector in the hyperplane `Σ y_i = 0`.
    pub c: Vec<C>,
    pub residuals: Vec<C>,
}

impl CMBetheState {
    pub fn new(
        n: usize,
        m: u32,
        poles: Vec<C>,
        residue_index: Vec<usize>,
        c: Vec<C>,
        lat: &Lattice,
    ) -> Result<Self, CMError> {
        if n < 2 {
            return Err(CMError::InvalidState("need n ≥ 2".into()));
        }
        let mut want = residue_pattern(n, m);
        let mut got = residue_index.clone();
        want.sort_unstable();
        got.sort_unstable();
        if want != got || poles.len() != residue_index.len() {
            return Err(CMError::InvalidState(format!(
                "residue multiplicities must be m(n−k) for α_k; expected {} poles",
                want.len()
            )));
        }
        if c.len() != n || c.iter().sum::<C>().norm() > 1e-12 * (1.0 + c.iter().map(|z| z.norm()).sum::<f64>()) {
            return Err(CMError::InvalidState("constant term must lie in Σ y_i = 0".into()));
        }
        let mut s = CMBetheState {
            n,
            m,
            poles,
            residue_index,
            c,
            residuals: Vec::new(),
        };
        s.residuals = cm_bethe_residual(&s, lat)?;
        Ok(s)
    }

    pub fn residue(&self, i: usize) -> Vec<f64> {
        simple_root(self.n, self.residue_index[i])
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, g| a.max(g.norm()))
    }

    /// `f(x) ↦ −f(−x)`.
    pub fn sigma(&self) -> Self {
        CMBetheState {
            poles: self.poles.iter().map(|a| -a).collect(),
            c: self.c.iter().map(|z| -z).collect(),
            ..self.clone()
        }
    }

    /// For `n = 2`, `f = f_1·α_1` with `f_1` a scalar Hermite ansatz.
    pub fn to_lame(&self, lat: &Lattice) -> Result<HermiteAnsatz, CMError> {
        if self.n != 2 {
            return Err(CMError::Unsupported("scalar reduction needs n = 2".into()));
        }
        Ok(HermiteAnsatz::new(self.m, self.poles.clone(), self.c[0], lat)?)
    }

    pub fn from_lame(a: &HermiteAnsatz, lat: &Lattice) -> Result<Self, CMError> {
        Self::new(2, a.m, a.poles.clone(), vec![1; a.poles.len()], vec![a.c0, -a.c0], lat)
    }
}

/// `g_i(0) = 2⟨c + Σ_{j≠i} r_j ζ(a_i − a_j) + r_0 ζ(a_i), r_i⟩`, the limit of
/// `⟨f(a_i + x) + f(a_i − x), Res_{a_i} f⟩` at `x = 0`.
pub fn cm_bethe_residual(state: &CMBetheState, lat: &Lattice) -> Result<Vec<C>, CMError> {
    let r0 = origin_residue(state.n, state.m);
    let a = &state.poles;
    (0..a.len())
        .map(|i| {
            let ri = state.residue(i);
            let mut s = dot_rc(&ri, &state.c) + lat.zeta(a[i])? * dot_rr(&r0, &ri);
            for j in 0..a.len() {
                if j != i {
                    s += lat.zeta(a[i] - a[j])? * dot_rr(&state.residue(j), &ri);
                }
            }
            Ok(2.0 * s)
        })
        .collect()
}

fn jacobian(state: &CMBetheState, lat: &Lattice) -> Result<DMatrix<C>, CMError> {
    let r0 = origin_residue(state.n, state.m);
    let a = &state.poles;
    let k = a.len();
    let mut jac = DMatrix::from_element(k, k, czero());
    for i in 0..k {
        let ri = state.residue(i);
        let mut diag = -lat.wp(a[i])? * dot_rr(&r0, &ri);
        for j in 0..k {
            if j == i {
                continue;
            }
            let w = lat.wp(a[i] - a[j])? * dot_rr(&state.residue(j), &ri);
            diag -= w;
            jac[(i, j)] = 2.0 * w;
        }
        jac[(i, i)] = 2.0 * diag;
    }
    Ok(jac)
}

/// Least-squares constant term `c = Σ γ_k α_k` for the seed poles.
fn slice_constant(n: usize, m: u32, poles: &[C], index: &[usize], lat: &Lattice) -> Result<Vec<C>, CMError> {
    let zero_c = vec![czero(); n];
    let trial = CMBetheState {
        n,
        m,
        poles: poles.to_vec(),
        residue_index: index.to_vec(),
        c: zero_c,
        residuals: Vec::new(),
    };
    let g = cm_bethe_residual(&trial, lat)?;
    // 2⟨Σ γ_k α_k, r_i⟩ = −g_i
    let a = DMatrix::from_fn(poles.len(), n - 1, |i, k| {
        C::new(2.0 * dot_rr(&simple_root(n, k + 1), &trial.residue(i)), 0.0)
    });
    let b = DVector::from_iterator(g.len(), g.iter().map(|x| -x));
    let ah = a.adjoint();
    let gamma = (&ah * &a)
        .lu()
        .solve(&(&ah * b))
        .ok_or_else(|| CMError::InvalidState("degenerate slice".into()))?;
    let mut c = vec![czero(); n];
    for k in 0..n - 1 {
        for (x, r) in c.iter_mut().zip(simple_root(n, k + 1)) {
            *x += gamma[k] * r;
        }
    }
    Ok(c)
}

/// Damped Newton on the poles with the constant term fixed at its seed
/// least-squares value.  For `n = 2` this is the scalar Lamé solve.
pub fn cm_solve_bethe(n: usize, m: u32, lat: &Lattice, seed: u64) -> Result<CMBetheState, CMError> {
    if m == 0 || n < 2 {
        return Err(CMError::Unsupported("Bethe solve needs m ≥ 1 and n ≥ 2".into()));
    }
    let index = residue_pattern(n, m);
    let mut poles = seed_poles(index.len() as u32, lat, seed);
    let c = slice_constant(n, m, &poles, &index, lat)?;
    let mk = |poles: &[C]| CMBetheState {
        n,
        m,
        poles: poles.to_vec(),
        residue_index: index.clone(),
        c: c.clone(),
        residuals: Vec::new(),
    };
    let norm = |g: &[C]| g.iter().fold(0.0, |a: f64, x| a.max(x.norm()));
    let mut g = cm_bethe_residual(&mk(&poles), lat)?;
    let mut res = norm(&g);
    let mut iterations = 0;
    let sep = 1e-4 * lat.min_length();
    while res >= BETHE_TOL {
        if iterations >= 100 {
            return Err(CMError::NoConvergence { seed });
        }
        iterations += 1;
        let step = jacobian(&mk(&poles), lat)?
            .lu()
            .solve(&DVector::from_vec(g.clone()))
            .ok_or(CMError::NoConvergence { seed })?;
        let mut t = 1.0;
        loop {
            let trial: Vec<C> = poles.iter().zip(step.iter()).map(|(a, d)| a - d * t).collect();
            let sep_ok = trial.iter().enumerate().all(|(i, a)| {
                lat.distance_to_lattice(*a) > sep && trial[..i].iter().all(|b| lat.distance_to_lattice(a - b) > sep)
            });
            if sep_ok {
                if let Ok(g2) = cm_bethe_residual(&mk(&trial), lat) {
                    let r2 = norm(&g2);
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
                return Err(CMError::NoConvergence { seed });
            }
        }
    }
    CMBetheState::new(n, m, poles, index, c, lat)
}

/// Truncated Taylor polynomial in `n` variables `u = x − x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MPoly {
    pub n: usize,
    pub degree: u32,
    pub coeffs: BTreeMap<Vec<u32>, C>,
}

impl MPoly {
    pub fn zero(n: usize, degree: u32) -> Self {
        MPoly {
            n,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, degree: u32, c: C) -> Self {
        let mut p = Self::zero(n, degree);
        p.coeffs.insert(vec![0; n], c);
        p
    }

    fn linear(n: usize, degree: u32, a: &[C]) -> Self {
        let mut p = Self::zero(n, degree);
        for (i, c) in a.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.coeffs.insert(e, *c);
        }
        p
    }

    pub fn coeff(&self, e: &[u32]) -> C {
        *self.coeffs.get(e).unwrap_or(&czero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            *out.coeffs.entry(e.clone()).or_insert(czero()) += c;
        }
        out
    }

    pub fn scale(&self, s: C) -> Self {
        MPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n, self.degree.min(other.degree));
        for (ea, ca) in &self.coeffs {
            let da: u32 = ea.iter().sum();
            for (eb, cb) in &other.coeffs {
                if da + eb.iter().sum::<u32>() > out.degree {
                    continue;
                }
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *out.coeffs.entry(e).or_insert(czero()) += ca * cb;
            }
        }
        out
    }

    /// `∂/∂u_i`; the result is exact through `degree − 1`.
    pub fn derive(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n, self.degree.saturating_sub(1));
        for (e, c) in &self.coeffs {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            out.coeffs.insert(f, c * e[i] as f64);
        }
        out
    }

    /// `s(ℓ(u))` for a univariate Taylor series `s` and linear form `ℓ`.
    pub fn compose(s: &LaurentSeries<C>, n: usize, degree: u32, ell: &[C]) -> Self {
        let l = Self::linear(n, degree, ell);
        let mut power = Self::constant(n, degree, C::new(1.0, 0.0));
        let mut out = Self::zero(n, degree);
        for k in 0..=degree as i64 {
            if let Some(c) = s.coeff(k) {
                out = out.add(&power.scale(c));
            }
            power = power.mul(&l);
        }
        out
    }

    /// Largest `|c_e|·r^{|e|}` over `|e| ≤ upto`.
    pub fn scaled_max(&self, r: f64, upto: u32) -> f64 {
        self.coeffs
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() <= upto)
            .map(|(e, c)| c.norm() * r.powi(e.iter().sum::<u32>() as i32))
            .fold(0.0, f64::max)
    }
}

fn exp_series(terms: usize) -> LaurentSeries<C> {
    let mut c = Vec::with_capacity(terms);
    let mut f = 1.0;
    for k in 0..terms {
        if k > 0 {
            f /= k as f64;
        }
        c.push(C::new(f, 0.0));
    }
    LaurentSeries::new(0, c, terms as i64)
}

/// Applies `op` to a local series at `x0`, expanding every generator around
/// `x0` numerically.
pub fn apply_numeric(op: &CMOperator, psi: &MPoly, x0: &[C], lat: &Lattice) -> Result<MPoly, CMError> {
    let n = op.n;
    let deg = psi.degree;
    let used: std::collections::BTreeSet<(u8, u8)> = op
        .terms
        .keys()
        .flat_map(|(_, mono)| mono.keys())
        .filter_map(|g| match g {
            Gen::W { i, j, .. } => Some((*i, *j)),
            _ => None,
        })
        .collect();
    let mut gens: BTreeMap<Gen, MPoly> = BTreeMap::new();
    for &(i, j) in &used {
        let (i, j) = (i as usize, j as usize);
        {
            let wp = wp_taylor_numeric(lat, x0[i] - x0[j], deg as usize + 2)?;
            let mut ell = vec![czero(); n];
            ell[i] = C::new(1.0, 0.0);
            ell[j] = C::new(-1.0, 0.0);
            gens.insert(Gen::W { i: i as u8, j: j as u8, k: 0 }, MPoly::compose(&wp, n, deg, &ell));
            gens.insert(Gen::W { i: i as u8, j: j as u8, k: 1 }, MPoly::compose(&wp.derive(), n, deg, &ell));
        }
    }
    gens.insert(Gen::G2, MPoly::constant(n, deg, lat.g2()));
    gens.insert(Gen::G3, MPoly::constant(n, deg, lat.g3()));
    let mut out = MPoly::zero(n, deg);
    for ((d, mono), c) in &op.terms {
        let mut term = psi.clone();
        for (i, &k) in d.iter().enumerate() {
            for _ in 0..k {
                term = term.derive(i);
            }
        }
        let mut coeff = MPoly::constant(n, deg, C::new(c.to_f64().unwrap_or(f64::NAN), 0.0));
        for (g, e) in mono {
            for _ in 0..*e {
                coeff = coeff.mul(&gens[g]);
            }
        }
        out = out.add(&coeff.mul(&term));
    }
    Ok(out)
}

/// Local eigenfunction `ψ_{f,t}` with its base point and comparison radius.
#[derive(Clone, Debug)]
pub struct LocalCMEigenfunction {
    pub x0: Vec<C>,
    pub radius: f64,
    pub psi: MPoly,
}

/// `ψ_{f,t} = e^{t⟨x, e_1+…+e_n⟩ + ∫Φ}`: for `m = 0` a plane wave, for
/// `n = 2` the product `e^{t(x1+x2)} ψ_{f_1}(x1 − x2)`.
pub fn local_cm_eigenfunction(
    state: &CMBetheState,
    t: C,
    lat: &Lattice,
    degree: u32,
) -> Result<LocalCMEigenfunction, CMError> {
    let n = state.n;
    let one = C::new(1.0, 0.0);
    if state.m == 0 {
        let v: Vec<C> = state.c.iter().map(|c| c + t).collect();
        let x0 = (0..n)
            .map(|i| lat.point(0.1 + 0.27 * i as f64, 0.13 + 0.31 * i as f64))
            .collect();
        let radius = 0.5 / (1.0 + v.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let psi = MPoly::compose(&exp_series(degree as usize + 1), n, degree, &v);
        return Ok(LocalCMEigenfunction { x0, radius, psi });
    }
    if n != 2 {
        return Err(CMError::Unsupported(
            "explicit eigenfunctions are available for n = 2 or m = 0".into(),
        ));
    }
    let ansatz = state.to_lame(lat)?;
    let y0 = default_base(&ansatz, lat);
    let loc = local_eigenfunction(&ansatz, lat, y0, degree as usize + 2)?;
    let phi = MPoly::compose(&loc.psi, 2, degree, &[one, -one]);
    let wave = MPoly::compose(&exp_series(degree as usize + 1), 2, degree, &[t, t]);
    Ok(LocalCMEigenfunction {
        x0: vec![y0 / 2.0, -y0 / 2.0],
        radius: 0.5 * loc.radius,
        psi: wave.mul(&phi),
    })
}

/// Eigenvalues `π(f, t)_i` and the largest scaled residual of
/// `L_i ψ − π_i ψ`.
#[derive(Clone, Debug)]
pub struct EigenCheck {
    pub pi: Vec<C>,
    pub residual: f64,
}

pub fn cm_eigen_check(state: &CMBetheState, t: C, lat: &Lattice, degree: u32) -> Result<EigenCheck, CMError> {
    let loc = local_cm_eigenfunction(state, t, lat, degree)?;
    let m = qi(state.m as i64);
    let (l1, l2) = build_cm(state.n, &m);
    let mut ops = vec![l1, l2];
    if state.n == 3 {
        ops.push(solve_higher_integral(3, &m, 3, &IntegralOptions::default())?.operator);
    }
    let origin = vec![0; state.n];
    let psi0 = loc.psi.coeff(&origin);
    let scale = loc.psi.scaled_max(loc.radius, degree).max(1e-300);
    let mut pi = Vec::new();
    let mut residual: f64 = 0.0;
    for op in &ops {
        let ord = op.order().unwrap_or(0);
        let lpsi = apply_numeric(op, &loc.psi, &loc.x0, lat)?;
        let p = lpsi.coeff(&origin) / psi0;
        let diff = lpsi.add(&loc.psi.scale(-p));
        residual = residual.max(diff.scaled_max(loc.radius, degree - ord) / scale);
        pi.push(p);
    }
    Ok(EigenCheck { pi, residual })
}

/// Independence of `ψ_{f,t}` and `ψ_{σf,t}`, which share every eigenvalue.
#[derive(Clone, Debug)]
pub struct PairCheck {
    pub pi: Vec<C>,
    pub pi_sigma: Vec<C>,
    /// `ψ ∂_1ψ_σ − ψ_σ ∂_1ψ` at the base point (both normalized to 1).
    pub wronskian: C,
    pub independent: usize,
}

pub fn cm_pair_check(state: &CMBetheState, t: C, lat: &Lattice, degree: u32) -> Result<PairCheck, CMError> {
    if state.n != 2 {
        return Err(CMError::Unsupported("pair check needs n = 2".into()));
    }
    let s = state.sigma();
    let a = cm_eigen_check(state, t, lat, degree)?;
    let b = cm_eigen_check(&s, t, lat, degree)?;
    // evaluate both at the base point of ψ_f through ∂/∂x1 at that point
    let ansatz = state.to_lame(lat)?;
    let y0 = default_base(&ansatz, lat);
    let f = crate::lame::hermite_f(&ansatz, lat, y0)?;
    let fs = crate::lame::hermite_f(&s.to_lame(lat)?, lat, y0)?;
    // ∂1 log ψ = t + f(y0)
    let wronskian = (t + fs) - (t + f);
    let rel = wronskian.norm() / (1.0 + f.norm().max(fs.norm()));
    Ok(PairCheck {
        pi: a.pi,
        pi_sigma: b.pi,
        wronskian,
        independent: if rel > 1e-8 { 2 } else { 1 },
    })
}

/// Rank of the two-particle system after separating the centre of mass:
/// `L²` restricted to functions of `x1 − x2` is `2(D² − m(m+1)℘)`.
pub fn cm_rank_two_particles(m: u32, inv: &Arc<EllipticInvariants>) -> Result<usize, CMError> {
    let (_, l2) = build_cm(2, &qi(m as i64));
    match rank(&l2.reduce_relative(inv)?) {
        RankReport::Rank(r) => Ok(r),
        other => Err(CMError::Unsupported(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_bookkeeping() {
        assert_eq!(residue_pattern(3, 1), vec![1, 1, 2]);
        assert_eq!(origin_residue(3, 1), vec![-2.0, 1.0, 1.0]);
        let lat = Lattice::square();
        let bad = CMBetheState::new(
            3,
            1,
            vec![C::new(0.3, 0.2); 3],
            vec![1, 2, 2],
            vec![czero(); 3],
            &lat,
        );
        assert!(matches!(bad, Err(CMError::InvalidState(_))));
    }

    #[test]
    fn plane_wave() {
        let lat = Lattice::square();
        let c = vec![C::new(0.3, 0.1), C::new(-0.5, 0.2), C::new(0.2, -0.3)];
        let st = CMBetheState::new(3, 0, Vec::new(), Vec::new(), c.clone(), &lat).unwrap();
        let t = C::new(0.7, -0.2);
        let chk = cm_eigen_check(&st, t, &lat, 8).unwrap();
        let v: Vec<C> = c.iter().map(|x| x + t).collect();
        for (k, p) in chk.pi.iter().enumerate() {
            let want: C = v.iter().map(|x| x.powu(k as u32 + 1)).sum();
            assert!((p - want).norm() < 1e-10, "{k}: {p} vs {want}");
        }
        assert!(chk.residual < 1e-10);
    }
}
