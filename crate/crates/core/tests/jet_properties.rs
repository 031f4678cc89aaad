use std::collections::BTreeMap;

use curvlab::Jet;
use proptest::prelude::*;

/// Jet as a sparse polynomial keyed by exponent vector.
fn as_poly(j: &Jet) -> BTreeMap<Vec<u8>, f64> {
    j.indices()
        .iter()
        .zip(j.coefficients())
        .map(|(a, &c)| (a.exponents().to_vec(), c))
        .collect()
}

fn naive_product(a: &Jet, b: &Jet, order: usize) -> BTreeMap<Vec<u8>, f64> {
    let mut out: BTreeMap<Vec<u8>, f64> = as_poly(a).keys().map(|k| (k.clone(), 0.0)).collect();
    for (ea, ca) in as_poly(a) {
        for (eb, cb) in as_poly(b) {
            let e: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
            if e.iter().map(|&x| x as usize).sum::<usize>() <= order {
                *out.get_mut(&e).unwrap() += ca * cb;
            }
        }
    }
    out
}

fn jet_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (1usize..=4, 0usize..=5).prop_flat_map(|(dim, order)| {
        let n = curvlab::jets::coefficient_count(dim, order);
        (
            Just(dim),
            Just(order),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..2.0, n),
        )
    })
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coefficients()
        .iter()
        .zip(b.coefficients())
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn product_matches_naive_polynomial_product((dim, order, ca, cb) in jet_strategy()) {
        let a = Jet::from_coefficients(dim, order, ca).unwrap();
        let b = Jet::from_coefficients(dim, order, cb).unwrap();
        let got = as_poly(&a.try_mul(&b).unwrap());
        for (k, v) in naive_product(&a, &b, order) {
            prop_assert!((got[&k] - v).abs() <= 1e-12 * (1.0 + v.abs()), "{k:?}: {} vs {v}", got[&k]);
        }
    }

    #[test]
    fn leibniz_rule((dim, order, ca, cb) in jet_strategy(), axis in 0usize..4) {
        prop_assume!(order >= 1);
        let axis = axis % dim;
        let a = Jet::from_coefficients(dim, order, ca).unwrap();
        let b = Jet::from_coefficients(dim, order, cb).unwrap();
        let lhs = (&a * &b).diff(axis).unwrap();
        let rhs = &a.diff(axis).unwrap() * &b.truncate(order - 1)
            + &a.truncate(order - 1) * &b.diff(axis).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn division_inverts_product((dim, order, ca, cb) in jet_strategy()) {
        let a = Jet::from_coefficients(dim, order, ca).unwrap();
        let b = Jet::from_coefficients(dim, order, cb).unwrap().add_scalar(5.0);
        let q = a.try_div(&b).unwrap();
        prop_assert!(close(&(&q * &b), &a, 1e-10));
    }

    #[test]
    fn elementary_function_identities((dim, order, ca, _cb) in jet_strategy()) {
        let a = Jet::from_coefficients(dim, order, ca).unwrap().scale(0.5);
        let s = a.sin();
        let c = a.cos();
        let one = &(&s * &s) + &(&c * &c);
        prop_assert!(close(&one, &Jet::constant(dim, order, 1.0), 1e-12));
        let e = a.exp();
        prop_assert!(close(&e.ln().unwrap(), &a, 1e-11));
        let p = e.sqrt().unwrap();
        prop_assert!(close(&(&p * &p), &e, 1e-11));
    }

    #[test]
    fn mixed_partials_commute((dim, order, ca, _cb) in jet_strategy(), i in 0usize..4, j in 0usize..4) {
        prop_assume!(order >= 2);
        let (i, j) = (i % dim, j % dim);
        let a = Jet::from_coefficients(dim, order, ca).unwrap();
        let ij = a.diff(i).unwrap().diff(j).unwrap();
        let ji = a.diff(j).unwrap().diff(i).unwrap();
        prop_assert!(close(&ij, &ji, 0.0));
    }
}

#[test]
fn seeded_jets_reproduce_polynomial_derivatives() {
    // p(x, y) = x^3 y^2 at (0.7, -1.3); all derivatives by hand.
    let [x, y] = [0.7f64, -1.3];
    let v = Jet::seeds(&[x, y], 5).unwrap();
    let p = &(&(&v[0] * &v[0]) * &v[0]) * &(&v[1] * &v[1]);
    let d = |a: u8, b: u8| p.derivative(&curvlab::MultiIndex::new(vec![a, b])).unwrap();
    assert!((d(0, 0) - x.powi(3) * y * y).abs() < 1e-14);
    assert!((d(1, 0) - 3.0 * x * x * y * y).abs() < 1e-13);
    assert!((d(2, 1) - 12.0 * x * y).abs() < 1e-13);
    assert!((d(3, 2) - 12.0).abs() < 1e-12);
    assert_eq!(d(4, 0), 0.0);
}
