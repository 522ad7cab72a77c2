mod common;

use common::{homogeneous_1d, max_abs_diff, shooting_logistic, stripe};
use frontlab::evolution::{
    front_run, minimal_steady_state, steady_ladder, EvolutionOptions, FrontOptions, Stepper,
};
use frontlab::{CellProblem, DiffusionField, DomainSpec, LadderSchedule, Lattice, Mode, Primitive, ReactionKind, ReactionModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn intervals(lengths: &[(f64, f64)], cell: f64, resolution: usize, rate: f64, gamma: f64) -> CellProblem {
    let prims = lengths
        .iter()
        .map(|&(a, len)| Primitive::Rect { corner: [a, 0.0], extents: [len, 1.0] })
        .collect();
    CellProblem::build(
        &Lattice::new(&[cell]).unwrap(),
        &[resolution],
        &DomainSpec::union(prims),
        DiffusionField::identity(1),
        &ReactionModel::uniform(ReactionKind::Logistic { rate }),
        LadderSchedule { gamma, n_max: 100 },
    )
    .unwrap()
}

#[test]
fn flat_data_follow_the_logistic_ode() {
    let p = homogeneous_1d(1.0, 8);
    let st = Stepper::for_mode(&p, Mode::Periodic { rung: 0 }, 0.01).unwrap();
    let mut s = st.state(vec![0.1; 8], true).unwrap();
    while s.t < 5.0 - 1e-12 {
        st.step(&mut s).unwrap();
    }
    let exact = 0.1 * s.t.exp() / (0.9 + 0.1 * s.t.exp());
    assert!(s.u.iter().all(|&u| (u - exact).abs() < 5e-3), "{} vs {exact}", s.u[0]);
    // the ODE oracle by RK4 agrees with the closed form
    let y = common::rk4(|_, y: [f64; 1]| [y[0] * (1.0 - y[0])], [0.1], 0.0, s.t, 2000);
    assert!((y[0] - exact).abs() < 1e-10);
}

#[test]
fn comparison_principle_on_random_ordered_pairs() {
    let p = stripe(5);
    let st = Stepper::for_mode(&p, Mode::Periodic { rung: 5 }, 0.5).unwrap();
    let n = p.grid().len();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.8)).collect();
        let v0: Vec<f64> = u0.iter().map(|&u| (u + rng.gen_range(0.0..0.2)).min(1.0)).collect();
        let mut u = st.state(u0, false).unwrap();
        let mut v = st.state(v0, false).unwrap();
        for _ in 0..40 {
            st.step(&mut u).unwrap();
            st.step(&mut v).unwrap();
            assert!(u.u.iter().zip(&v.u).all(|(a, b)| *a <= b + 1e-12));
        }
    }
}

#[test]
fn dirichlet_steady_state_matches_shooting() {
    let p = intervals(&[(0.5, 2.0)], 3.0, 600, 5.0, 10.0);
    let r = minimal_steady_state(&p, Mode::Dirichlet, &EvolutionOptions::default()).unwrap();
    let g = p.grid();
    let h = g.spacing(0);
    let inside: Vec<usize> = (0..g.len()).filter(|&i| p.mask().is_inside(i)).collect();
    // the pinned neighbours sit one spacing beyond the first and last unknowns
    let left = g.position(inside[0])[0] - h;
    let len = (inside.len() + 1) as f64 * h;
    let oracle = shooting_logistic(5.0, len, 4000);
    let want: Vec<f64> = inside.iter().map(|&i| oracle(g.position(i)[0] - left)).collect();
    let got: Vec<f64> = inside.iter().map(|&i| r.p[i]).collect();
    let err = max_abs_diff(&got, &want);
    assert!(err < 1e-4, "sup error {err}");
}

#[test]
fn only_components_in_i_minus_carry_mass() {
    // lengths 2 and 0.5: only the long interval has a negative Dirichlet eigenvalue
    let p = intervals(&[(0.5, 2.0), (3.5, 0.5)], 5.0, 160, 5.0, 10.0);
    let r = minimal_steady_state(&p, Mode::Dirichlet, &EvolutionOptions::default()).unwrap();
    assert_eq!(r.components.len(), 2);
    assert_eq!(r.components[0].in_i_minus, Some(true));
    assert!(r.components[0].positive);
    assert_eq!(r.components[1].in_i_minus, Some(false));
    assert_eq!(r.components[1].max_p, 0.0);
}

#[test]
fn larger_seed_converges_above_the_minimal_state() {
    let p = stripe(5);
    let mode = Mode::Periodic { rung: 5 };
    let min = minimal_steady_state(&p, mode, &EvolutionOptions::default()).unwrap();
    let st = Stepper::for_mode(&p, mode, 0.5).unwrap();
    let mut s = st.state(vec![1.0; p.grid().len()], false).unwrap();
    while s.t < 40.0 {
        st.step(&mut s).unwrap();
    }
    assert!(s.u.iter().zip(&min.p).all(|(u, q)| *u >= q - 1e-8));
    assert!(max_abs_diff(&s.u, &min.p) < 1e-6);
}

#[test]
fn zero_penalization_gives_a_constant_ladder() {
    let p = CellProblem::build(
        &Lattice::new(&[2.0]).unwrap(),
        &[32],
        &DomainSpec::union(vec![Primitive::Rect { corner: [0.5, 0.0], extents: [1.0, 1.0] }]),
        DiffusionField::identity(1),
        &ReactionModel::uniform(ReactionKind::Logistic { rate: 20.0 }),
        LadderSchedule { gamma: 0.0, n_max: 4 },
    )
    .unwrap();
    let l = steady_ladder(&p, &[0, 2, 4], &EvolutionOptions::default()).unwrap();
    assert!(max_abs_diff(&l.results[0].p, &l.results[2].p) < 1e-12);
    assert!(max_abs_diff(&l.hostile_mass, &[l.hostile_mass[0]; 3]) < 1e-12);
}

#[test]
fn steady_ladder_is_monotone() {
    let p = stripe(20);
    let l = steady_ladder(&p, &[0, 2, 20], &EvolutionOptions::default()).unwrap();
    assert!(l.max_increase() <= 1e-8);
    assert!(l.mass_strictly_decreasing());
    assert!(l.deficit(p.mask().inside()) <= 1e-6);
}

#[test]
fn homogeneous_front_moves_at_the_kpp_speed() {
    let p = homogeneous_1d(1.0, 10);
    let f = front_run(&p, 0, &[1.0], &FrontOptions { cells: 160, time: Some(50.0), ..FrontOptions::default() }).unwrap();
    assert!(!f.exited && !f.stalled);
    assert!((f.speed - 2.0).abs() < 0.2, "{}", f.speed);
    assert!(f.midpoint_time.is_some());
    assert!(front_run(&p, 0, &[1.0], &FrontOptions { cells: 4, ..FrontOptions::default() }).is_err());
}
