//! Monodromy of `ψ″ = (m(m+1)℘(z) + λ)ψ` on the once-punctured torus.
//!
//! Solutions are continued along polylines with an adaptive Dormand–Prince
//! 5(4) integrator.  `M_A`, `M_B` come from the period loops at a common base
//! point, `M_0` from a small loop around the puncture.  Concatenating paths
//! `γ1` then `γ2` multiplies transport matrices as `Φ(γ2)·Φ(γ1)`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::elliptic::{EllipticError, Lattice};

pub type CMatrix = Matrix2<Complex64>;

/// Absolute and relative local error tolerance of the integrator.
pub const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonodromyError {
    #[error("path passes within {distance:.3e} of a lattice point")]
    PathNearPole { distance: f64 },
    #[error("step size underflow at z = {re}+{im}i")]
    StepUnderflow { re: f64, im: f64 },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

type State = [Complex64; 4];

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Equation<'a> {
    lat: &'a Lattice,
    mm: f64,
    lambda: Complex64,
}

impl Equation<'_> {
    /// `d/ds` of the state along `z = z0 + s·e`.
    fn rhs(&self, z: Complex64, e: Complex64, y: &State) -> Result<State, MonodromyError> {
        let v = self.lat.wp(z)? * self.mm + self.lambda;
        // columns (ψ, ψ′) of two solutions: y = [ψ1, ψ1′, ψ2, ψ2′]
        Ok([e * y[1], e * v * y[0], e * y[3], e * v * y[2]])
    }

    fn segment(&self, z0: Complex64, z1: Complex64, y: &mut State) -> Result<(), MonodromyError> {
        let len = (z1 - z0).norm();
        if len == 0.0 {
            return Ok(());
        }
        let e = (z1 - z0) / len;
        let scale = self.lat.omega1().norm();
        let mut s = 0.0;
        let mut h = 0.01 * scale;
        let mut k = [[c0(); 4]; 7];
        k[0] = self.rhs(z0, e, y)?;
        while s < len {
            let z = z0 + e * s;
            let near = self.lat.distance_to_lattice(z) < 0.1 * scale;
            let hmax = if near { 0.01 * scale } else { 0.1 * scale };
            h = h.min(hmax).min(len - s);
            if h < 1e-14 * scale {
                return Err(MonodromyError::StepUnderflow { re: z.re, im: z.im });
            }
            for st in 1..7 {
                let mut yt = *y;
                for (j, kj) in k.iter().enumerate().take(st) {
                    let a = A[st][j];
                    if a != 0.0 {
                        for c in 0..4 {
                            yt[c] += kj[c] * (h * a);
                        }
                    }
                }
                k[st] = self.rhs(z + e * (C[st] * h), e, &yt)?;
            }
            let mut y5 = *y;
            let mut err = 0.0f64;
            for c in 0..4 {
                let mut d5 = c0();
                let mut d4 = c0();
                for st in 0..7 {
                    d5 += k[st][c] * B5[st];
                    d4 += k[st][c] * B4[st];
                }
                y5[c] += d5 * h;
                let sc = STEP_TOL + STEP_TOL * y[c].norm().max(y5[c].norm());
                err = err.max(((d5 - d4) * h).norm() / sc);
            }
            if err <= 1.0 {
                s += h;
                *y = y5;
                k[0] = k[6];
            }
            let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            h *= fac.clamp(0.2, 5.0);
        }
        Ok(())
    }
}

/// Minimum distance from a polyline to the lattice (sampled finely).
fn path_clearance(lat: &Lattice, path: &[Complex64]) -> f64 {
    let step = 0.002 * lat.omega1().norm();
    let mut best = f64::INFINITY;
    for w in path.windows(2) {
        let n = ((w[1] - w[0]).norm() / step).ceil().max(1.0) as usize;
        for i in 0..=n {
            let z = w[0] + (w[1] - w[0]) * (i as f64 / n as f64);
            best = best.min(lat.distance_to_lattice(z));
        }
    }
    best
}

/// Fundamental matrix along `path`, normalized to the identity at its start.
pub fn transport(
    m: f64,
    lambda: Complex64,
    lat: &Lattice,
    path: &[Complex64],
) -> Result<CMatrix, MonodromyError> {
    let clearance = path_clearance(lat, path);
    if clearance < 0.02 * lat.omega1().norm() {
        return Err(MonodromyError::PathNearPole {
            distance: clearance,
        });
    }
    let eq = Equation {
        lat,
        mm: m * (m + 1.0),
        lambda,
    };
    let one = Complex64::new(1.0, 0.0);
    let mut y: State = [one, c0(), c0(), one];
    for w in path.windows(2) {
        eq.segment(w[0], w[1], &mut y)?;
    }
    Ok(CMatrix::new(y[0], y[2], y[1], y[3]))
}

/// Loops at `b`: the two period translates and a polygon of radius
/// `0.05·|ω1|` around the origin, traversed counterclockwise.
pub fn loops(lat: &Lattice, b: Complex64) -> [Vec<Complex64>; 3] {
    let r = 0.05 * lat.omega1().norm();
    let dir = b / b.norm();
    let start = dir * r;
    let theta0 = dir.arg();
    let sides = 48;
    let mut circle = vec![b];
    for k in 0..=sides {
        let t = theta0 + 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
        circle.push(Complex64::from_polar(r, t));
    }
    circle[1] = start;
    circle.push(b);
    [
        vec![b, b + lat.omega1()],
        vec![b, b + lat.omega2()],
        circle,
    ]
}

pub fn default_basepoint(lat: &Lattice) -> Complex64 {
    -0.37 * lat.omega1() - 0.41 * lat.omega2()
}

fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖AB − BA‖_F / (‖A‖_F ‖B‖_F)`.
pub fn commutator_defect(a: &CMatrix, b: &CMatrix) -> f64 {
    fro(&(a * b - b * a)) / (fro(a) * fro(b))
}

fn inverse(m: &CMatrix) -> CMatrix {
    let det = m.determinant();
    CMatrix::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det
}

/// Matrices and diagnostics of one monodromy computation.
#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub m: f64,
    pub lambda: Complex64,
    pub basepoint: Complex64,
    pub m_a: CMatrix,
    pub m_b: CMatrix,
    pub m_0: CMatrix,
    pub det_defects: [f64; 3],
    /// Smallest relative gap between a commutator word in `M_A`, `M_B` and
    /// `M_0^{±1}`.
    pub relation_defect: f64,
    pub relation_word: String,
    pub commutator_defect: f64,
    pub common_line_defect: f64,
}

impl MonodromyResult {
    pub fn max_det_defect(&self) -> f64 {
        self.det_defects.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn monodromy_group(
    m: f64,
    lambda: Complex64,
    lat: &Lattice,
    basepoint: Option<Complex64>,
) -> Result<MonodromyResult, MonodromyError> {
    let b = basepoint.unwrap_or_else(|| default_basepoint(lat));
    let [pa, pb, p0] = loops(lat, b);
    let mats: Vec<CMatrix> = [pa, pb, p0]
        .par_iter()
        .map(|p| transport(m, lambda, lat, p))
        .collect::<Result<_, _>>()?;
    let (m_a, m_b, m_0) = (mats[0], mats[1], mats[2]);
    let det_defects = [
        (m_a.determinant() - 1.0).norm(),
        (m_b.determinant() - 1.0).norm(),
        (m_0.determinant() - 1.0).norm(),
    ];
    let (ia, ib) = (inverse(&m_a), inverse(&m_b));
    let words = [
        ("MB^-1 MA^-1 MB MA", ib * ia * m_b * m_a),
        ("MA^-1 MB^-1 MA MB", ia * ib * m_a * m_b),
        ("MB MA MB^-1 MA^-1", m_b * m_a * ib * ia),
        ("MA MB MA^-1 MB^-1", m_a * m_b * ia * ib),
    ];
    let targets = [("M0", m_0), ("M0^-1", inverse(&m_0))];
    let mut relation_defect = f64::INFINITY;
    let mut relation_word = String::new();
    for (wn, w) in &words {
        for (tn, t) in &targets {
            let d = fro(&(w - t)) / fro(t);
            if d < relation_defect {
                relation_defect = d;
                relation_word = format!("{wn} = {tn}");
            }
        }
    }
    let mut res = MonodromyResult {
        m,
        lambda,
        basepoint: b,
        m_a,
        m_b,
        m_0,
        det_defects,
        relation_defect,
        relation_word,
        commutator_defect: commutator_defect(&m_a, &m_b),
        common_line_defect: 0.0,
    };
    res.common_line_defect = irreducibility_probe(&res).defect;
    Ok(res)
}

/// Outcome of [`irreducibility_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct LineReport {
    /// Sine of the angle between `v` and `M_B v` for each eigenline `v` of `M_A`.
    pub per_line: Vec<f64>,
    /// Minimum of `per_line`; 0 when `M_A` is scalar.
    pub defect: f64,
    pub note: String,
}

fn eigenvectors(m: &CMatrix) -> Vec<[Complex64; 2]> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let tr = a + d;
    let disc = (tr * tr - 4.0 * (a * d - b * c)).sqrt();
    let mut out = Vec::new();
    for ev in [(tr + disc) / 2.0, (tr - disc) / 2.0] {
        // (M − ev) v = 0: pick the better-conditioned row
        let v1 = [b, ev - a];
        let v2 = [ev - d, c];
        let n1 = v1[0].norm() + v1[1].norm();
        let n2 = v2[0].norm() + v2[1].norm();
        let v = if n1 >= n2 { v1 } else { v2 };
        out.push(v);
    }
    out
}

fn sin_angle(v: &[Complex64; 2], w: &[Complex64; 2]) -> f64 {
    let cross = (v[0] * w[1] - v[1] * w[0]).norm();
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    if nv == 0.0 || nw == 0.0 {
        return 0.0;
    }
    cross / (nv * nw)
}

/// Tests for a line invariant under both `M_A` and `M_B`.  A large defect
/// certifies that the generated group acts irreducibly.
pub fn irreducibility_probe(res: &MonodromyResult) -> LineReport {
    let a = res.m_a;
    let scale = fro(&a);
    let off = (a[(0, 1)].norm() + a[(1, 0)].norm() + (a[(0, 0)] - a[(1, 1)]).norm()) / scale;
    if off < 1e-10 {
        return LineReport {
            per_line: Vec::new(),
            defect: 0.0,
            note: "M_A is scalar; every eigenline of M_B is invariant".into(),
        };
    }
    let per_line: Vec<f64> = eigenvectors(&a)
        .iter()
        .map(|v| {
            let w = [
                res.m_b[(0, 0)] * v[0] + res.m_b[(0, 1)] * v[1],
                res.m_b[(1, 0)] * v[0] + res.m_b[(1, 1)] * v[1],
            ];
            sin_angle(v, &w)
        })
        .collect();
    let defect = per_line.iter().cloned().fold(f64::INFINITY, f64::min);
    let note = if defect < 1e-6 {
        "M_B preserves an eigenline of M_A: the pair is reducible (for commuting \
         diagonalizable matrices both eigenlines are shared)"
    } else {
        "no eigenline of M_A is preserved by M_B: no common invariant line"
    };
    LineReport {
        per_line,
        defect,
        note: note.into(),
    }
}

/// One row of [`commutativity_scan`].
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub lambda: Complex64,
    pub commutator_defect: f64,
    pub det_defect: f64,
    pub relation_defect: f64,
    pub trace_a: Complex64,
    pub trace_b: Complex64,
    pub flagged: bool,
    pub reason: Option<String>,
}

/// Commutator defects over a list of eigenvalues, flagging rows whose
/// monodromy is parabolic (`tr² = 4`) or whose defect deviates by more than
/// three decades from the median.
pub fn commutativity_scan(
    m: f64,
    lambdas: &[Complex64],
    lat: &Lattice,
) -> Result<Vec<ScanRow>, MonodromyError> {
    let results: Vec<MonodromyResult> = lambdas
        .par_iter()
        .map(|&l| monodromy_group(m, l, lat, None))
        .collect::<Result<_, _>>()?;
    let mut logs: Vec<f64> = results
        .iter()
        .map(|r| r.commutator_defect.max(1e-300).log10())
        .collect();
    logs.sort_by(f64::total_cmp);
    let median = logs.get(logs.len() / 2).cloned().unwrap_or(0.0);
    Ok(results
        .into_iter()
        .map(|r| {
            let ta = r.m_a.trace();
            let tb = r.m_b.trace();
            let parabolic = (ta * ta - 4.0).norm() < 1e-6 || (tb * tb - 4.0).norm() < 1e-6;
            let outlier = (r.commutator_defect.max(1e-300).log10() - median).abs() > 3.0;
            let reason = match (parabolic, outlier) {
                (true, _) => Some("trace^2 = 4: degenerate Floquet multipliers".to_string()),
                (false, true) => Some("commutator defect deviates from the majority".to_string()),
                _ => None,
            };
            ScanRow {
                lambda: r.lambda,
                commutator_defect: r.commutator_defect,
                det_defect: r.max_det_defect(),
                relation_defect: r.relation_defect,
                trace_a: ta,
                trace_b: tb,
                flagged: reason.is_some(),
                reason,
            }
        })
        .collect())
}
