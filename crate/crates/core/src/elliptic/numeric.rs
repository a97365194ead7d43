use std::f64::consts::PI;

use num_complex::Complex64;

use super::exact::wp_coefficients;
use super::EllipticError;

/// Terms kept in the floating-point Laurent expansion around a lattice point.
const SERIES_TERMS: usize = 40;

/// Relative distance to a lattice point below which evaluation is refused.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// A period lattice `Λ = Z·ω1 + Z·ω2` with cached invariants, quasi-periods
/// and Laurent data.
#[derive(Clone, Debug)]
pub struct Lattice {
    omega1: Complex64,
    omega2: Complex64,
    // Lagrange-reduced, positively oriented basis of the same lattice
    red: [Complex64; 2],
    // quasi-periods of the reduced basis: ζ(z + red[k]) = ζ(z) + eta_red[k]
    eta_red: [Complex64; 2],
    g2: Complex64,
    g3: Complex64,
    coeffs: Vec<Complex64>,
}

/// `℘`, `℘′` and `ζ` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WpValues {
    pub wp: Complex64,
    pub wp_prime: Complex64,
    pub zeta: Complex64,
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    (a.conj() * b).im
}

fn reduce_basis(w1: Complex64, w2: Complex64) -> [Complex64; 2] {
    let (mut a, mut b) = (w1, w2);
    for _ in 0..200 {
        if b.norm_sqr() < a.norm_sqr() {
            std::mem::swap(&mut a, &mut b);
        }
        let mu = ((b * a.conj()).re / a.norm_sqr()).round();
        if mu == 0.0 {
            break;
        }
        b -= a * mu;
    }
    if cross(a, b) < 0.0 {
        b = -b;
    }
    [a, b]
}

fn sigma_k(n: u64, k: i32) -> f64 {
    let mut s = 0.0;
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += (d as f64).powi(k);
            let e = n / d;
            if e != d {
                s += (e as f64).powi(k);
            }
        }
        d += 1;
    }
    s
}

/// `(g2, g3)` of the lattice spanned by `a`, `b` (reduced, oriented).
///
/// The Eisenstein sums `60·Σ′ω⁻⁴` and `140·Σ′ω⁻⁶` are summed row by row in
/// closed form, which yields their `q`-expansions in `q = e^{2πiτ}`; after
/// reduction `|q| ≤ e^{−π√3}` and the tail falls below `1e−17` quickly.
fn eisenstein_invariants(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let tau = b / a;
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let mut e4 = Complex64::new(0.0, 0.0);
    let mut e6 = Complex64::new(0.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..200u64 {
        qn *= q;
        let t4 = qn * sigma_k(n, 3);
        let t6 = qn * sigma_k(n, 5);
        e4 += t4;
        e6 += t6;
        if t6.norm() < 1e-19 && t4.norm() < 1e-19 {
            break;
        }
    }
    let e4 = 1.0 + 240.0 * e4;
    let e6 = 1.0 - 504.0 * e6;
    let g2 = (4.0 * PI.powi(4) / 3.0) * e4 / a.powi(4);
    let g3 = (8.0 * PI.powi(6) / 27.0) * e6 / a.powi(6);
    (g2, g3)
}

/// Complex invariants `(g2, g3)` of a lattice.
pub fn invariants_from_periods(lat: &Lattice) -> (Complex64, Complex64) {
    (lat.g2, lat.g3)
}

impl Lattice {
    pub fn new(omega1: Complex64, omega2: Complex64) -> Result<Self, EllipticError> {
        if !(cross(omega1, omega2) > 0.0) || !omega1.is_finite() || !omega2.is_finite() {
            return Err(EllipticError::NotOriented);
        }
        let red = reduce_basis(omega1, omega2);
        let (g2, g3) = eisenstein_invariants(red[0], red[1]);
        let coeffs = wp_coefficients(&g2, &g3, SERIES_TERMS);
        let mut lat = Lattice {
            omega1,
            omega2,
            red,
            eta_red: [Complex64::new(0.0, 0.0); 2],
            g2,
            g3,
            coeffs,
        };
        let e0 = 2.0 * lat.local_values(red[0] / 2.0).zeta;
        let e1 = 2.0 * lat.local_values(red[1] / 2.0).zeta;
        lat.eta_red = [e0, e1];
        Ok(lat)
    }

    /// The square lattice `Z + Z·i`.
    pub fn square() -> Self {
        Lattice::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)).expect("oriented")
    }

    /// The hexagonal lattice `Z + Z·e^{iπ/3}`.
    pub fn hexagonal() -> Self {
        Lattice::new(
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, PI / 3.0),
        )
        .expect("oriented")
    }

    pub fn omega1(&self) -> Complex64 {
        self.omega1
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2
    }

    pub fn g2(&self) -> Complex64 {
        self.g2
    }

    pub fn g3(&self) -> Complex64 {
        self.g3
    }

    /// Length of the shortest nonzero lattice vector.
    pub fn min_length(&self) -> f64 {
        self.red[0].norm()
    }

    /// Real coordinates of `z` in the reduced basis.
    fn reduced_coords(&self, z: Complex64) -> (f64, f64) {
        let [a, b] = self.red;
        let det = cross(a, b);
        (cross(z, b) / det, cross(a, z) / det)
    }

    /// Nearest lattice point as integer coordinates in the reduced basis.
    fn nearest(&self, z: Complex64) -> (i64, i64) {
        let (x, y) = self.reduced_coords(z);
        let (x0, y0) = (x.round() as i64, y.round() as i64);
        let [a, b] = self.red;
        let mut best = (x0, y0);
        let mut best_d = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let (i, j) = (x0 + dx, y0 + dy);
                let d = (z - a * i as f64 - b * j as f64).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn distance_to_lattice(&self, z: Complex64) -> f64 {
        let (i, j) = self.nearest(z);
        (z - self.red[0] * i as f64 - self.red[1] * j as f64).norm()
    }

    /// Integer coordinates `(n1, n2)` of a lattice vector `w = n1·ω1 + n2·ω2`.
    pub fn coords_in_periods(&self, w: Complex64) -> (i64, i64) {
        let det = cross(self.omega1, self.omega2);
        (
            (cross(w, self.omega2) / det).round() as i64,
            (cross(self.omega1, w) / det).round() as i64,
        )
    }

    /// Laurent series plus duplication, no argument reduction.
    fn local_values(&self, w: Complex64) -> WpValues {
        let limit = 0.5 * self.min_length();
        let mut n = 0;
        let mut h = w;
        while h.norm() > limit {
            h /= 2.0;
            n += 1;
        }
        let h2 = h * h;
        let mut wp = Complex64::new(0.0, 0.0);
        let mut dwp = Complex64::new(0.0, 0.0);
        let mut zeta = Complex64::new(0.0, 0.0);
        // Horner in h² over k = 2..K
        for k in (2..self.coeffs.len()).rev() {
            let c = self.coeffs[k];
            wp = wp * h2 + c;
            dwp = dwp * h2 + c * (2 * k - 2) as f64;
            zeta = zeta * h2 + c / (2 * k - 1) as f64;
        }
        let mut x = 1.0 / h2 + wp * h2;
        let mut y = -2.0 / (h2 * h) + dwp * h;
        let mut z = 1.0 / h - zeta * h2 * h;
        for _ in 0..n {
            let s = (6.0 * x * x - self.g2 / 2.0) / y;
            let x2 = s * s / 4.0 - 2.0 * x;
            let y2 = s * (x - x2) - y;
            z = 2.0 * z + s / 2.0;
            x = x2;
            y = y2;
        }
        WpValues {
            wp: x,
            wp_prime: y,
            zeta: z,
        }
    }

    /// `℘(z)`, `℘′(z)` and `ζ(z)` in one pass.
    pub fn values(&self, z: Complex64) -> Result<WpValues, EllipticError> {
        let (i, j) = self.nearest(z);
        let lattice_point = self.red[0] * i as f64 + self.red[1] * j as f64;
        let w = z - lattice_point;
        if w.norm() < POLE_TOLERANCE * self.min_length() {
            return Err(EllipticError::NearPole { re: z.re, im: z.im });
        }
        let mut v = self.local_values(w);
        v.zeta += self.eta_red[0] * i as f64 + self.eta_red[1] * j as f64;
        Ok(v)
    }

    pub fn wp(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        Ok(self.values(z)?.wp)
    }

    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        Ok(self.values(z)?.wp_prime)
    }

    /// Weierstrass `ζ`, with `ζ′ = −℘` and `ζ(z + ω) = ζ(z) + η(ω)`.
    pub fn zeta(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        Ok(self.values(z)?.zeta)
    }

    /// Quasi-period `η(ω) = ζ(z + ω) − ζ(z)` of a lattice vector.
    pub fn eta_of(&self, w: Complex64) -> Complex64 {
        let (x, y) = self.reduced_coords(w);
        self.eta_red[0] * x.round() + self.eta_red[1] * y.round()
    }

    /// Quasi-periods `(η1, η2)` attached to `ω1`, `ω2`.
    pub fn quasi_periods(&self) -> (Complex64, Complex64) {
        (self.eta_of(self.omega1), self.eta_of(self.omega2))
    }

    /// A point of the fundamental parallelogram `s·ω1 + t·ω2`, `s, t ∈ [0, 1)`.
    pub fn point(&self, s: f64, t: f64) -> Complex64 {
        self.omega1 * s + self.omega2 * t
    }

    /// Laurent coefficients `c_k` of `℘` for this lattice (index = k).
    pub fn laurent_coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// `℘(z; Λ)`.
pub fn wp_eval(z: Complex64, lat: &Lattice) -> Result<Complex64, EllipticError> {
    lat.wp(z)
}

/// `℘′(z; Λ)`.
pub fn wp_prime_eval(z: Complex64, lat: &Lattice) -> Result<Complex64, EllipticError> {
    lat.wp_prime(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orientation_is_checked() {
        assert!(matches!(
            Lattice::new(c(0.0, 1.0), c(1.0, 0.0)),
            Err(EllipticError::NotOriented)
        ));
    }

    #[test]
    fn square_and_hexagonal_symmetry() {
        let sq = Lattice::square();
        assert!(sq.g3().norm() < 1e-10, "g3 = {}", sq.g3());
        let hex = Lattice::hexagonal();
        assert!(hex.g2().norm() < 1e-10, "g2 = {}", hex.g2());
    }

    #[test]
    fn homogeneity_under_rescaling() {
        let lat = Lattice::new(c(1.0, 0.1), c(0.3, 1.2)).unwrap();
        let big = Lattice::new(c(2.0, 0.2), c(0.6, 2.4)).unwrap();
        assert!((big.g2() * 16.0 - lat.g2()).norm() < 1e-10 * lat.g2().norm());
        assert!((big.g3() * 64.0 - lat.g3()).norm() < 1e-10 * lat.g3().norm());
    }

    #[test]
    fn legendre_relation() {
        let lat = Lattice::new(c(1.0, 0.2), c(-0.4, 0.9)).unwrap();
        let (e1, e2) = lat.quasi_periods();
        let lhs = e1 * lat.omega2() - e2 * lat.omega1();
        assert!((lhs - c(0.0, 2.0 * PI)).norm() < 1e-10, "{lhs}");
    }

    #[test]
    fn near_pole_refused() {
        let lat = Lattice::square();
        assert!(matches!(
            lat.wp(c(1.0 + 1e-12, 1.0)),
            Err(EllipticError::NearPole { .. })
        ));
    }

    fn lattice_sum_invariants(a: Complex64, b: Complex64, r: i64) -> (Complex64, Complex64) {
        let mut s4 = c(0.0, 0.0);
        let mut s6 = c(0.0, 0.0);
        for i in -r..=r {
            for j in -r..=r {
                if i == 0 && j == 0 {
                    continue;
                }
                let w = a * i as f64 + b * j as f64;
                s4 += w.powi(-4);
                s6 += w.powi(-6);
            }
        }
        (60.0 * s4, 140.0 * s6)
    }

    #[test]
    fn eisenstein_matches_direct_lattice_sum() {
        let lat = Lattice::new(c(1.0, 0.1), c(0.3, 1.2)).unwrap();
        // box-sum tail of Σ′ω⁻⁴ decays like R⁻², so extrapolate in R
        let (a2, a3) = lattice_sum_invariants(lat.omega1(), lat.omega2(), 150);
        let (b2, b3) = lattice_sum_invariants(lat.omega1(), lat.omega2(), 300);
        let g2 = (4.0 * b2 - a2) / 3.0;
        let g3 = (4.0 * b3 - a3) / 3.0;
        assert!((g2 - lat.g2()).norm() < 1e-6, "{g2} vs {}", lat.g2());
        assert!((g3 - lat.g3()).norm() < 1e-6, "{g3} vs {}", lat.g3());
    }

    #[test]
    fn parity_periodicity_and_ode() {
        let lat = Lattice::new(c(1.1, -0.2), c(0.4, 0.95)).unwrap();
        for k in 0..50 {
            let z = lat.point(0.013 + 0.0197 * k as f64, 0.91 - 0.0173 * k as f64);
            let v = lat.values(z).unwrap();
            let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(1.0);
            assert!(rel(lat.wp(-z).unwrap(), v.wp) < 1e-10);
            assert!(rel(lat.wp(z + lat.omega1()).unwrap(), v.wp) < 1e-10);
            assert!(rel(lat.wp(z - lat.omega2()).unwrap(), v.wp) < 1e-10);
            let rhs = 4.0 * v.wp.powi(3) - lat.g2() * v.wp - lat.g3();
            assert!(rel(v.wp_prime * v.wp_prime, rhs) < 1e-8);
            assert!(rel(lat.zeta(-z).unwrap(), -v.zeta) < 1e-10);
            let shifted = lat.zeta(z + lat.omega1()).unwrap();
            assert!(rel(shifted, v.zeta + lat.quasi_periods().0) < 1e-9);
        }
    }

    #[test]
    fn zeta_derivative_is_minus_wp() {
        let lat = Lattice::hexagonal();
        let z = c(0.31, 0.22);
        let h = 1e-4;
        let dz = (lat.zeta(z + h).unwrap() - lat.zeta(z - h).unwrap()) / (2.0 * h);
        assert!((dz + lat.wp(z).unwrap()).norm() < 1e-6);
    }
}
