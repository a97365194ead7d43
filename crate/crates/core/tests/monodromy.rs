use num_complex::Complex64;
use proptest::prelude::*;
use qcis::monodromy::{
    commutativity_scan, irreducibility_probe, monodromy_group, transport, CMatrix, MonodromyError,
};
use qcis::Lattice;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dist_to_identity(m: &CMatrix) -> f64 {
    (m - CMatrix::identity()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn generic_lambdas() -> Vec<Complex64> {
    (0..10).map(|k| c(-4.3 + 1.37 * k as f64, 0.29)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closed_paths_and_determinants(s in 0.15f64..0.85, t in 0.15f64..0.85, w in 0.02f64..0.08,
                                     lr in -5.0f64..5.0, li in -1.0f64..1.0, m in 0u32..3) {
        let lat = Lattice::square();
        let z = lat.point(s, t);
        prop_assume!(lat.distance_to_lattice(z) > 0.15);
        let lambda = c(lr, li);
        let square = vec![z, z + w, z + c(w, w), z + c(0.0, w), z];
        let mono = transport(m as f64, lambda, &lat, &square).unwrap();
        prop_assert!(dist_to_identity(&mono) < 1e-8);
        let there = vec![z, z + c(0.3, 0.05)];
        let back = vec![z + c(0.3, 0.05), z];
        prop_assume!(lat.distance_to_lattice(z + c(0.3, 0.05)) > 0.1);
        if let Ok(a) = transport(m as f64, lambda, &lat, &there) {
            let b = transport(m as f64, lambda, &lat, &back).unwrap();
            prop_assert!(dist_to_identity(&(b * a)) < 1e-8);
            prop_assert!((a.determinant() - 1.0).norm() < 1e-8);
        }
    }
}

#[test]
fn path_through_a_pole_is_rejected() {
    let lat = Lattice::square();
    let path = vec![c(-0.3, 0.0), c(0.3, 0.0)];
    assert!(matches!(
        transport(1.0, c(0.5, 0.0), &lat, &path),
        Err(MonodromyError::PathNearPole { .. })
    ));
}

#[test]
fn integer_m_is_abelian_half_integer_is_not() {
    let lat = Lattice::square();
    let third = c(1.0 / 3.0, 0.0);
    for m in [0.0, 1.0, 2.0] {
        let r = monodromy_group(m, third, &lat, None).unwrap();
        assert!(r.commutator_defect < 1e-6, "m = {m}");
        assert!(r.max_det_defect() < 1e-8);
        assert!(r.relation_defect < 1e-6);
        assert!(dist_to_identity(&r.m_0) < 1e-6);
        assert!((r.m_0.trace() - 2.0).norm() < 1e-6);
    }
    for m in [0.5, 1.5] {
        let r = monodromy_group(m, third, &lat, None).unwrap();
        assert!(r.commutator_defect > 1e-2, "m = {m}");
        assert!(r.relation_defect < 1e-6);
        assert!(irreducibility_probe(&r).defect > 1e-2);
    }
    let r = monodromy_group(1.0, third, &lat, None).unwrap();
    let line = irreducibility_probe(&r);
    assert_eq!(line.per_line.len(), 2);
    assert!(!line.note.is_empty());
}

#[test]
fn basepoint_independence() {
    let lat = Lattice::new(c(1.0, 0.0), c(0.18, 1.07)).unwrap();
    for m in [1.0, 2.0, 0.5] {
        for lambda in [c(-2.2, 0.4), c(1.3, -0.7)] {
            let a = monodromy_group(m, lambda, &lat, None).unwrap();
            let b = monodromy_group(m, lambda, &lat, Some(a.basepoint + c(0.06, 0.035))).unwrap();
            let inv = |r: &qcis::monodromy::MonodromyResult| {
                [r.m_a.trace(), r.m_b.trace(), (r.m_a * r.m_b).trace()]
            };
            for (x, y) in inv(&a).iter().zip(inv(&b).iter()) {
                assert!((x - y).norm() < 1e-6 * x.norm().max(1.0), "m = {m}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn scans() {
    let lat = Lattice::square();
    for row in commutativity_scan(1.0, &generic_lambdas(), &lat).unwrap() {
        assert!(row.commutator_defect < 1e-6);
        assert!(row.det_defect < 1e-8 && row.relation_defect < 1e-6);
        assert!(!row.flagged);
    }
    for row in commutativity_scan(0.0, &[c(0.7, 0.0), c(-3.0, 1.0), c(5.5, -2.0)], &lat).unwrap() {
        assert!(row.commutator_defect < 1e-8);
    }
    // branch point: λ = e1 = ℘(ω1/2) is a root of P_1
    let e1 = lat.wp(lat.omega1() * 0.5).unwrap();
    let rows = commutativity_scan(1.0, &[e1, c(-1.6, 0.29)], &lat).unwrap();
    assert!(rows[0].flagged, "{:?}", rows[0]);
    assert!(!rows[1].flagged);
}
