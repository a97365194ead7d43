use proptest::prelude::*;
use qcis::elliptic::wp_series;
use qcis::lame::build_lame;
use qcis::scalar::{q, qi, Q};
use qcis::{DiffOp, EllipticElement, EllipticInvariants, LaurentSeries};
use std::sync::Arc;

fn inv() -> Arc<EllipticInvariants> {
    EllipticInvariants::new(qi(4), qi(1)).unwrap().into_arc()
}

fn element() -> impl Strategy<Value = EllipticElement> {
    prop::collection::vec(((-4i64..=4, 1i64..=3), 0u32..=2, 0u32..=1), 0..3).prop_map(|terms| {
        let inv = inv();
        terms.into_iter().fold(EllipticElement::zero(&inv), |acc, ((n, d), a, b)| {
            acc.add(&EllipticElement::monomial(q(n, d), a, b, &inv))
        })
    })
}

fn operator() -> impl Strategy<Value = DiffOp<EllipticElement>> {
    prop::collection::vec(element(), 1..4).prop_map(|c| DiffOp::new(c, EllipticElement::zero(&inv())))
}

fn series_operator() -> impl Strategy<Value = DiffOp<LaurentSeries<Q>>> {
    prop::collection::vec(prop::collection::vec((-5i64..=5, 1i64..=3), 1..5), 1..4).prop_map(|cs| {
        let coeffs = cs
            .into_iter()
            .map(|c| LaurentSeries::new(0, c.into_iter().map(|(n, d)| q(n, d)).collect(), 20))
            .collect();
        DiffOp::new(coeffs, LaurentSeries::zero(20))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_is_associative(a in operator(), b in operator(), c in operator()) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn jacobi_identity(a in operator(), b in operator(), c in operator()) {
        let t1 = a.commutator(&b.commutator(&c).unwrap()).unwrap();
        let t2 = b.commutator(&c.commutator(&a).unwrap()).unwrap();
        let t3 = c.commutator(&a.commutator(&b).unwrap()).unwrap();
        prop_assert!(t1.add(&t2).unwrap().add(&t3).unwrap().is_zero());
    }

    #[test]
    fn adjoint_is_an_involutive_antihomomorphism(a in operator(), b in operator()) {
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        prop_assert_eq!(a.compose(&b).unwrap().adjoint(), b.adjoint().compose(&a.adjoint()).unwrap());
    }

    #[test]
    fn application_respects_composition(a in series_operator(), b in series_operator(),
                                        psi in prop::collection::vec((-5i64..=5, 1i64..=3), 1..8)) {
        let psi = LaurentSeries::new(-1, psi.into_iter().map(|(n, d)| q(n, d)).collect(), 16);
        let lhs = a.compose(&b).unwrap().apply(&psi);
        let rhs = a.apply(&b.apply(&psi));
        let t = lhs.trunc().min(rhs.trunc());
        prop_assert!(t > 0 && lhs.agrees_below(&rhs, t));
    }
}

#[test]
fn composition_examples() {
    let inv = inv();
    let z = LaurentSeries::<Q>::zero(12);
    let d = DiffOp::d_pow(1, z.clone());
    let u = DiffOp::multiplication(LaurentSeries::var(12));
    let expect = DiffOp::new(vec![LaurentSeries::one(12), LaurentSeries::var(12)], z.clone());
    let du = d.compose(&u).unwrap();
    assert!(du.coeff(0).agrees_below(&expect.coeff(0), 11));
    assert!(du.coeff(1).agrees_below(&expect.coeff(1), 11));

    let e0 = EllipticElement::zero(&inv);
    let p = EllipticElement::p(&inv);
    let d2 = DiffOp::d_pow(2, e0.clone());
    let mp = DiffOp::multiplication(p.clone());
    let comm = d2.commutator(&mp).unwrap();
    // [D², p] = 2p′D + p″ with p″ = 6p² − g2/2
    let hand = DiffOp::new(
        vec![
            p.pow(2).scale(&qi(6)).sub(&EllipticElement::constant(qi(2), &inv)),
            EllipticElement::dp(&inv).scale(&qi(2)),
        ],
        e0.clone(),
    );
    assert_eq!(comm, hand);
    let l = build_lame(&qi(1), &inv);
    assert_eq!(l.compose(&DiffOp::identity(e0.clone())).unwrap(), l);
    assert!(l.commutator(&l).unwrap().is_zero());
    let cubic = l.poly(&[q(-1, 4), qi(-1), qi(3), qi(1)]);
    assert!(l.commutator(&cubic).unwrap().is_zero());
}

#[test]
fn adjoint_examples() {
    let inv = inv();
    let e0 = EllipticElement::zero(&inv);
    assert_eq!(DiffOp::d_pow(1, e0.clone()).adjoint(), DiffOp::d_pow(1, e0.clone()).neg());
    assert_eq!(DiffOp::d_pow(3, e0.clone()).adjoint(), DiffOp::d_pow(3, e0.clone()).neg());
    for m in [qi(0), qi(1), qi(2), q(1, 2)] {
        let l = build_lame(&m, &inv);
        assert_eq!(l.adjoint(), l);
    }
}

#[test]
fn application_examples() {
    let inv = inv();
    let z = LaurentSeries::<Q>::zero(12);
    let u3 = LaurentSeries::monomial(qi(1), 3, 12);
    assert_eq!(DiffOp::d_pow(2, z.clone()).apply(&u3), LaurentSeries::monomial(qi(6), 1, 10));
    assert_eq!(DiffOp::identity(z).apply(&u3), u3);

    // (D² − 2℘)ψ for ψ = u⁻¹ Σ b_k u^k: coefficient of u^{k−3} is
    // (k−1)(k−2)b_k − 2 Σ_j c_j b_{k−j} with ℘ = Σ c_j u^{j−2}
    let l = build_lame(&qi(1), &inv);
    let psi = LaurentSeries::new(-1, vec![qi(1), qi(0), q(1, 3), qi(2), q(-1, 5), qi(1)], 5);
    let out = l.apply(&psi);
    let p = wp_series(&inv, 10);
    let b = |k: i64| psi.coeff(k - 1).unwrap_or_else(|| qi(0));
    let c = |j: i64| p.coeff(j - 2).unwrap_or_else(|| qi(0));
    for k in 0..6i64 {
        let mut want = qi((k - 1) * (k - 2)) * b(k);
        for j in 0..=k {
            want -= qi(2) * c(j) * b(k - j);
        }
        assert_eq!(out.coeff(k - 3).unwrap(), want, "u^{}", k - 3);
    }
}
