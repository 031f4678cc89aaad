use curvlab::models::find_model;
use curvlab::quadrature::{adjointness_defects, build_grid, AdjointPair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check(model: &str, resolution: Option<&[usize]>, pair: AdjointPair, tol: f64) {
    let m = find_model(model).unwrap();
    let grid = build_grid(&m, resolution).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let pairs: Vec<_> = (0..10)
        .map(|_| (m.random_scalar(&mut rng), m.random_sym2(&mut rng)))
        .collect();
    let start = std::time::Instant::now();
    let reports = adjointness_defects(&grid, &pairs, pair).unwrap();
    let worst = reports.iter().map(|r| r.defect).fold(0.0, f64::max);
    eprintln!("{model} {pair:?} {} nodes: worst {worst:e} in {:?}", grid.len(), start.elapsed());
    assert!(worst <= tol, "{model} {pair:?}: {worst:e}");
}

#[test]
fn gamma_pair_flat_torus() {
    check("flat_torus_2", None, AdjointPair::Gamma, 1e-10);
    check("flat_torus_3", None, AdjointPair::Gamma, 1e-10);
}

#[test]
fn gamma_pair_curved() {
    check("perturbed_torus_3", None, AdjointPair::Gamma, 1e-8);
    check("s2_r1", None, AdjointPair::Gamma, 1e-8);
    check("s2xs2_r1_r1", None, AdjointPair::Gamma, 1e-8);
}

#[test]
fn lambda_pair() {
    check("flat_torus_2", None, AdjointPair::Lambda, 1e-7);
    check("perturbed_torus_3", None, AdjointPair::Lambda, 1e-7);
    check("s2_r1", None, AdjointPair::Lambda, 1e-7);
    check("s2xs2_r1_r1", None, AdjointPair::Lambda, 1e-7);
}

#[test]
fn combined_table_matches_single_pairs() {
    let m = find_model("s2_r1").unwrap();
    let grid = build_grid(&m, Some(&[12, 16])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<_> = (0..2)
        .map(|_| (m.random_scalar(&mut rng), m.random_sym2(&mut rng)))
        .collect();
    let table = curvlab::quadrature::adjointness_table(&grid, &pairs).unwrap();
    let gamma = adjointness_defects(&grid, &pairs, AdjointPair::Gamma).unwrap();
    let lambda = adjointness_defects(&grid, &pairs, AdjointPair::Lambda).unwrap();
    for (k, (g, l)) in table.iter().enumerate() {
        assert_eq!(*g, gamma[k]);
        assert_eq!(*l, lambda[k]);
    }
}

#[test]
fn product_grid_is_already_converged() {
    let m = find_model("s2xs2_r1_r2").unwrap();
    let coarse = build_grid(&m, None).unwrap();
    let fine = build_grid(&m, Some(&[10, 12, 10, 12])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = vec![(m.random_scalar(&mut rng), m.random_sym2(&mut rng))];
    let a = curvlab::quadrature::adjointness_table(&coarse, &pairs).unwrap();
    let b = curvlab::quadrature::adjointness_table(&fine, &pairs).unwrap();
    let (ga, la) = a[0];
    let (gb, lb) = b[0];
    for (x, y) in [(ga.forward, gb.forward), (la.forward, lb.forward), (la.adjoint, lb.adjoint)] {
        assert!((x - y).abs() <= 1e-11 * x.abs().max(1.0), "{x} vs {y}");
    }
}
