mod common;

use common::dense_principal;
use frontlab::eigen::DEFAULT_TOL;
use frontlab::{
    assemble, principal_eigenpair, rasterize, BoundaryMode, DiffusionField, DomainSpec, DriftScheme, Grid, Lattice,
    Primitive,
};
use proptest::prelude::*;

fn grid2(m: usize) -> Grid {
    Grid::new(Lattice::new(&[1.0, 1.5]).unwrap(), &[m, m + 2]).unwrap()
}

#[test]
fn constant_zeta_shifts_the_spectrum() {
    let g = grid2(12);
    let a = DiffusionField::identity(2);
    for c in [0.0, 1.0, -3.5] {
        let op = assemble(&g, &a, &vec![c; g.len()], &[], 0.0, BoundaryMode::Periodic).unwrap();
        let r = principal_eigenpair(&op, DEFAULT_TOL).unwrap();
        assert!((r.value + c).abs() < 1e-9, "{} vs {}", r.value, -c);
        // constant eigenfunction normalized in L²(C_0)
        let want = (1.0 / 1.5f64).sqrt();
        assert!(r.eigenfunction.iter().all(|v| (v - want).abs() < 1e-6));
    }
}

#[test]
fn homogeneous_drift_matches_the_discrete_symbol() {
    // k(λ) for A = I, ζ = 0 in 1D: (2/h²)(1 − cosh(λh)) under the conjugated scheme
    let g = Grid::new(Lattice::new(&[1.0]).unwrap(), &[20]).unwrap();
    let a = DiffusionField::identity(1);
    let h: f64 = 0.05;
    for lambda in [0.3f64, 1.0, 4.0] {
        let op = assemble(&g, &a, &vec![0.0; 20], &[1.0], lambda, BoundaryMode::Periodic).unwrap();
        let k = principal_eigenpair(&op, DEFAULT_TOL).unwrap().value;
        let want = 2.0 / (h * h) * (1.0 - (lambda * h).cosh());
        assert!((k - want).abs() < 1e-8 * want.abs().max(1.0), "{k} vs {want}");
    }
}

#[test]
fn oscillating_and_anisotropic_match_dense_spectrum() {
    let lat = Lattice::new(&[1.0, 1.0]).unwrap();
    let g = Grid::new(lat.clone(), &[14, 14]).unwrap();
    let fields = [
        DiffusionField::oscillating([[1.0, 0.0], [0.0, 1.0]], 0.6, &lat).unwrap(),
        DiffusionField::constant([[2.0, 0.7], [0.7, 1.0]], 2),
    ];
    let zeta: Vec<f64> = g.positions().iter().map(|x| 3.0 * (6.0 * x[0]).sin() * (2.0 * x[1]).cos()).collect();
    for a in &fields {
        for (lambda, e) in [(0.0, [1.0, 0.0]), (1.3, [0.6, 0.8]), (5.0, [0.0, -1.0])] {
            for scheme in [DriftScheme::Conjugated, DriftScheme::Central] {
                let op = frontlab::operator::assemble_with(&g, a, &zeta, &e, lambda, BoundaryMode::Periodic, scheme)
                    .unwrap();
                let r = principal_eigenpair(&op, DEFAULT_TOL).unwrap();
                let dense = dense_principal(&op);
                assert!((r.value - dense).abs() < 1e-6, "{scheme:?} λ={lambda}: {} vs {dense}", r.value);
            }
        }
    }
}

#[test]
fn dirichlet_components_match_dense_spectrum() {
    let lat = Lattice::new(&[2.0, 2.0]).unwrap();
    let spec = DomainSpec::union(vec![
        Primitive::Disk { center: [0.6, 0.6], radius: 0.45 },
        Primitive::Rect { corner: [1.1, 0.9], extents: [0.7, 0.9] },
    ]);
    let mask = rasterize(&spec, &lat, &[24, 24]).unwrap();
    let comps = frontlab::analyze_components(&mask).unwrap();
    assert_eq!(comps.len(), 2);
    let g = mask.grid();
    let zeta = vec![4.0; g.len()];
    let a = DiffusionField::identity(2);
    let whole = assemble(g, &a, &zeta, &[], 0.0, BoundaryMode::Dirichlet(mask.inside().to_vec())).unwrap();
    let v = principal_eigenpair(&whole, DEFAULT_TOL).unwrap().value;
    let ce = frontlab::component_eigenvalues(&mask, &comps, &a, &zeta, DEFAULT_TOL).unwrap();
    assert!((v - ce.min()).abs() < 1e-9);
    assert!((v - dense_principal(&whole)).abs() < 1e-6);
    for id in 0..2 {
        let sub = comps.component_mask(&mask, id).unwrap();
        let op = assemble(g, &a, &zeta, &[], 0.0, BoundaryMode::Dirichlet(sub.inside().to_vec())).unwrap();
        assert!((ce.results[id].value - dense_principal(&op)).abs() < 1e-6);
    }
}

#[test]
fn eigenvalue_is_monotone_in_zeta() {
    let g = grid2(10);
    let a = DiffusionField::identity(2);
    let z1: Vec<f64> = g.positions().iter().map(|x| (5.0 * x[0]).cos()).collect();
    let z2: Vec<f64> = z1.iter().zip(g.positions()).map(|(z, x)| z + 0.5 * (x[1] * 3.0).sin().powi(2)).collect();
    for lambda in [0.0, 2.0] {
        let k1 = principal_eigenpair(&assemble(&g, &a, &z1, &[1.0, 0.0], lambda, BoundaryMode::Periodic).unwrap(), DEFAULT_TOL)
            .unwrap()
            .value;
        let k2 = principal_eigenpair(&assemble(&g, &a, &z2, &[1.0, 0.0], lambda, BoundaryMode::Periodic).unwrap(), DEFAULT_TOL)
            .unwrap()
            .value;
        assert!(k2 < k1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_media_match_dense_oracle(
        a11 in 0.5f64..3.0, a22 in 0.5f64..3.0, off in -0.9f64..0.9,
        amp in 0.0f64..4.0, freq in 1usize..4,
        lambda in 0.0f64..6.0, theta in 0.0f64..std::f64::consts::TAU,
        m in 6usize..13,
    ) {
        let a12 = off * (a11 * a22).sqrt();
        let a = DiffusionField::constant([[a11, a12], [a12, a22]], 2);
        let g = Grid::new(Lattice::new(&[1.0, 1.0]).unwrap(), &[m, m + 1]).unwrap();
        let zeta: Vec<f64> = g
            .positions()
            .iter()
            .map(|x| amp * (std::f64::consts::TAU * freq as f64 * x[0]).cos() + 0.5 * x[1])
            .collect();
        let e = [theta.cos(), theta.sin()];
        let op = assemble(&g, &a, &zeta, &e, lambda, BoundaryMode::Periodic).unwrap();
        let r = principal_eigenpair(&op, DEFAULT_TOL).unwrap();
        prop_assert!((r.value - dense_principal(&op)).abs() < 1e-6);
        prop_assert!(r.eigenfunction.iter().all(|&v| v > 0.0));
    }
}
