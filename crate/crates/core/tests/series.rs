use proptest::prelude::*;
use qcis::elliptic::{wp_prime_series, wp_series};
use qcis::scalar::{q, qi, Q};
use qcis::series::solve_log_derivative;
use qcis::{EllipticInvariants, LaurentSeries, Scalar};

fn rational() -> impl Strategy<Value = Q> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| q(n, d))
}

fn series() -> impl Strategy<Value = LaurentSeries<Q>> {
    (-3i64..=3, prop::collection::vec(rational(), 1..7), 0i64..4)
        .prop_map(|(v, c, extra)| {
            let t = v + c.len() as i64 + extra;
            LaurentSeries::new(v, c, t)
        })
}

fn unit_series() -> impl Strategy<Value = LaurentSeries<Q>> {
    (series(), 1i64..=4).prop_map(|(s, lead)| {
        let v = s.valuation().min(s.trunc() - 1);
        let mut c = vec![qi(lead)];
        c.extend((v + 1..s.trunc()).map(|k| s.coeff(k).unwrap_or_else(Q::zero)));
        LaurentSeries::new(v, c, s.trunc())
    })
}

fn same(a: &LaurentSeries<Q>, b: &LaurentSeries<Q>) -> bool {
    a.agrees_below(b, a.trunc().min(b.trunc()))
}

proptest! {
    #[test]
    fn ring_axioms(a in series(), b in series(), c in series()) {
        prop_assert!(same(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c))));
        prop_assert!(same(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c))));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn derive_is_a_derivation(a in series(), b in series()) {
        let lhs = a.mul(&b).derive();
        let rhs = a.derive().mul(&b).add(&a.mul(&b.derive()));
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn double_inversion(a in unit_series()) {
        let back = a.invert().unwrap().invert().unwrap();
        prop_assert!(same(&back, &a));
        prop_assert!(same(&a.mul(&a.invert().unwrap()), &LaurentSeries::one(a.trunc() - a.valuation())));
    }

    #[test]
    fn log_derivative_solution(rho in -3i64..=3, tail in prop::collection::vec(rational(), 0..6)) {
        let t = tail.len() as i64;
        let mut c = vec![qi(rho)];
        c.extend(tail);
        let f = LaurentSeries::new(-1, c, t);
        let (r, g) = solve_log_derivative(&f, 12).unwrap();
        prop_assert_eq!(r.clone(), qi(rho));
        // (u^ρ g)' = f u^ρ g  ⇔  g' + ρ u⁻¹ g = f g
        let lhs = g.derive().add(&g.shift(-1).scale(&r));
        let rhs = f.mul(&g);
        prop_assert!(lhs.agrees_below(&rhs, g.trunc() - 2));
    }
}

#[test]
fn small_identities() {
    let u = LaurentSeries::<Q>::var(10);
    let one = LaurentSeries::one(10);
    assert_eq!(u.invert().unwrap().mul(&u), LaurentSeries::one(9));
    let prod = one.add(&u).mul(&one.sub(&u));
    assert!(prod.agrees_below(&one.sub(&u.mul(&u)), 10));
    let geo = one.add(&u).invert().unwrap();
    for k in 0..10 {
        assert_eq!(geo.coeff(k).unwrap(), qi(if k % 2 == 0 { 1 } else { -1 }));
    }
    assert_eq!(u.pow(2).invert().unwrap().invert().unwrap().coeff(2).unwrap(), qi(1));
    assert_eq!(u.invert().unwrap().derive().coeff(-2).unwrap(), qi(-1));
    assert!(LaurentSeries::constant(q(5, 3), 6).derive().is_zero());
}

#[test]
fn wp_product_matches_convolution() {
    let inv = EllipticInvariants::new(qi(4), qi(1)).unwrap();
    let p = wp_series(&inv, 14);
    let sq = p.mul(&p);
    assert_eq!(sq.valuation(), -4);
    let coeffs: Vec<Q> = (-2..14).map(|k| p.coeff(k).unwrap()).collect();
    for n in 0..(sq.trunc() + 4) as usize {
        let mut acc = Q::zero();
        for i in 0..=n {
            if i < coeffs.len() && n - i < coeffs.len() {
                acc += &coeffs[i] * &coeffs[n - i];
            }
        }
        assert_eq!(sq.coeff(n as i64 - 4).unwrap(), acc, "u^{}", n as i64 - 4);
    }
}

#[test]
fn wp_inverse_by_long_division() {
    let inv = EllipticInvariants::new(qi(4), qi(1)).unwrap();
    let p = wp_series(&inv, 12);
    let r = p.invert().unwrap();
    assert_eq!(r.valuation(), 2);
    assert_eq!(r.leading(), Q::one());
    // long division of 1 by u⁻²(1 + a u⁴ + …): r·p = 1
    let n = (p.trunc() + 2) as usize;
    let a: Vec<Q> = (0..n).map(|k| p.coeff(k as i64 - 2).unwrap()).collect();
    let mut b = vec![Q::zero(); n];
    for k in 0..n {
        let mut acc = if k == 0 { Q::one() } else { Q::zero() };
        for j in 1..=k {
            acc -= &a[j] * &b[k - j];
        }
        b[k] = acc;
    }
    for k in 0..(r.trunc() - 2) as usize {
        assert_eq!(r.coeff(k as i64 + 2).unwrap(), b[k]);
    }
}

#[test]
fn derived_wp_matches_recursion() {
    let inv = EllipticInvariants::new(q(-3, 7), q(5, 11)).unwrap();
    let d = wp_series(&inv, 21).derive();
    assert!(d.agrees_below(&wp_prime_series(&inv, 20), 20));
}

#[test]
fn log_derivative_examples() {
    let (r, g) = solve_log_derivative(&LaurentSeries::<Q>::zero(10), 10).unwrap();
    assert!(r.is_zero());
    assert_eq!(g, LaurentSeries::one(g.trunc()));
    let c = q(2, 3);
    let (_, g) = solve_log_derivative(&LaurentSeries::constant(c.clone(), 10), 8).unwrap();
    let mut fact = Q::one();
    for k in 0..8 {
        assert_eq!(g.coeff(k).unwrap(), c.pow(k as i32) / &fact);
        fact *= qi(k + 1);
    }
    let (r, g) = solve_log_derivative(&LaurentSeries::monomial(qi(-1), -1, 10), 10).unwrap();
    assert_eq!(r, qi(-1));
    assert_eq!(g, LaurentSeries::one(g.trunc()));
}
