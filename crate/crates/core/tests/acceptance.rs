//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (bypassing the harness capture) and then asserts.

mod common;

use std::io::Write;
use std::time::Instant;

use common::{dense_principal, disk_array, homogeneous_1d, max_abs_diff, shooting_logistic, stripe};
use frontlab::eigen::DEFAULT_TOL;
use frontlab::evolution::{front_run, minimal_steady_state, steady_ladder, EvolutionOptions, FrontOptions, Stepper};
use frontlab::geometry::positivity_precondition;
use frontlab::scenario::{run, Scenario};
use frontlab::speeds::{minimal_speed, positivity_certificate, speed_ladder, SpeedOptions};
use frontlab::{
    assemble, eigen_ladder, principal_eigenpair, rasterize, rayleigh_check, BoundaryMode, CellProblem, DiffusionField,
    DomainSpec, LadderSchedule, Lattice, Mode, Primitive, ReactionKind, ReactionModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, title: &str, checks: &[(String, bool)], started: Instant, budget: f64) {
    let secs = started.elapsed().as_secs_f64();
    let mut all: Vec<(String, bool)> = checks.to_vec();
    all.push((format!("runtime {secs:.1} s <= {budget} s"), secs <= budget));
    let ok = all.iter().all(|c| c.1);
    let detail: Vec<String> = all.iter().map(|(d, p)| format!("{}{d}", if *p { "" } else { "FAILED " })).collect();
    let line = format!("[{}] criterion {id}: {title}: {}", if ok { "PASS" } else { "FAIL" }, detail.join("; "));
    writeln!(std::io::stderr(), "{line}").unwrap();
    assert!(ok, "{line}");
}

fn stripe_spec() -> DomainSpec {
    DomainSpec::union(vec![Primitive::Slab { normal: [0.0, 1.0], a: 1.25, b: 3.75 }])
}

#[test]
fn criterion_01_kpp_speed() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for c in [1.0f64, 4.0] {
        let s = Instant::now();
        let p = homogeneous_1d(c, 20);
        let r = minimal_speed(&p, Mode::Periodic { rung: 0 }, &[1.0], &SpeedOptions::default()).unwrap();
        let want = 2.0 * c.sqrt();
        let rel = (r.c_star - want).abs() / want;
        let lrel = (r.lambda_star - c.sqrt()).abs() / c.sqrt();
        checks.push((format!("c={c}: c* = {:.5} (rel {rel:.1e})", r.c_star), rel <= 0.01));
        checks.push((format!("lambda* = {:.4} (rel {lrel:.1e})", r.lambda_star), lrel <= 0.02));
        let secs = s.elapsed().as_secs_f64();
        checks.push((format!("{secs:.2} s"), secs < 10.0));
    }
    verdict(1, "classical KPP speed", &checks, t, 20.0);
}

fn dirichlet_interval(resolution: usize) -> f64 {
    let lat = Lattice::new(&[2.0]).unwrap();
    let spec = DomainSpec::union(vec![Primitive::Rect { corner: [0.5, 0.0], extents: [1.0, 1.0] }]);
    let mask = rasterize(&spec, &lat, &[resolution]).unwrap();
    let g = mask.grid();
    let op = assemble(g, &DiffusionField::identity(1), &vec![0.0; g.len()], &[], 0.0, BoundaryMode::Dirichlet(mask.inside().to_vec()))
        .unwrap();
    principal_eigenpair(&op, DEFAULT_TOL).unwrap().value
}

#[test]
fn criterion_02_dirichlet_interval() {
    let t = Instant::now();
    let v: Vec<f64> = [128, 256, 512].iter().map(|&m| dirichlet_interval(m)).collect();
    // error expansion a h + b h^2: eliminate both terms
    let r1: Vec<f64> = v.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let r2 = (4.0 * r1[1] - r1[0]) / 3.0;
    let pi2 = std::f64::consts::PI.powi(2);
    let rel = (r2 - pi2).abs() / pi2;
    let raw = (v[2] - pi2).abs() / pi2;
    verdict(
        2,
        "Dirichlet eigenvalue of the unit interval",
        &[(format!("extrapolated {r2:.6} vs {pi2:.6} (rel {rel:.1e}; finest raw rel {raw:.1e})"), rel <= 1e-3)],
        t,
        5.0,
    );
}

#[test]
fn criterion_03_eigen_ladder() {
    let t = Instant::now();
    let p = stripe(100);
    let rungs: Vec<usize> = (0..=100).collect();
    let mut checks = Vec::new();
    for lambda in [0.0, 0.5, 1.0, 2.0] {
        let l = eigen_ladder(&p, &rungs, lambda, &[1.0, 0.0], DEFAULT_TOL).unwrap();
        let d = l.limit.value;
        let gap = l.gaps().last().copied().unwrap();
        let rel = gap / d.abs();
        checks.push((format!("lambda={lambda}: strictly increasing"), l.is_strictly_increasing()));
        checks.push((format!("below limit {d:.5}"), l.below_limit()));
        checks.push((format!("final gap {rel:.2e} of |limit|"), rel <= 0.05));
    }
    verdict(3, "monotone eigenvalue ladder", &checks, t, 120.0);
}

#[test]
fn criterion_04_steady_ladder() {
    let t = Instant::now();
    let p = stripe(100);
    let rungs: Vec<usize> = (0..=100).collect();
    let l = steady_ladder(&p, &rungs, &EvolutionOptions::default()).unwrap();
    let inc = l.max_increase();
    let ratio = l.hostile_mass.last().unwrap() / l.hostile_mass[0];
    let deficit = l.deficit(p.mask().inside());
    verdict(
        4,
        "steady ladder",
        &[
            (format!("max increase {inc:.1e}"), inc <= 1e-8),
            ("hostile mass strictly decreasing".into(), l.mass_strictly_decreasing()),
            (format!("final mass ratio {ratio:.2e}"), ratio < 0.1),
            (format!("deficit {deficit:.1e}"), deficit <= 1e-6),
        ],
        t,
        300.0,
    );
}

#[test]
fn criterion_05_dichotomy() {
    let t = Instant::now();
    let mut checks = Vec::new();
    // (a) KPP: the ladder limit is the Dirichlet state
    let p = stripe(100);
    let l = steady_ladder(&p, &[0, 10, 100], &EvolutionOptions::default()).unwrap();
    let inside = p.mask().inside();
    let omega: Vec<usize> = (0..inside.len()).filter(|&i| inside[i]).collect();
    let gap = omega.iter().map(|&i| (l.results[2].p[i] - l.dirichlet.p[i]).abs()).fold(0.0, f64::max);
    checks.push((format!("(a) max |p_n - p| = {gap:.2e}"), gap <= 5e-2));
    // (b) tuned non-KPP component at every rung
    let text = std::fs::read_to_string(common::scenario_path("remark31.toml")).unwrap();
    let text = text.replace("rungs = [0, 1, 2, 5, 10, 20, 50, 100]\n", "").replace(
        r#"experiments = ["steady", "steady-ladder"]"#,
        r#"experiment = "steady-ladder""#,
    );
    let s = Scenario::from_toml(&text).unwrap();
    assert_eq!(s.rungs().len(), 101);
    let r = run(&s).unwrap();
    let tuned: Vec<_> = r.assertions().filter(|(_, a)| a.name.contains("s0/2")).collect();
    checks.push(("(b) tuned component found".into(), !tuned.is_empty()));
    for (_, a) in tuned {
        checks.push((format!("(b) {}", a.detail), a.passed));
    }
    verdict(5, "KPP versus tuned non-KPP limits", &checks, t, 300.0);
}

#[test]
fn criterion_06_blocking() {
    let t = Instant::now();
    let p = disk_array(100.0, 100);
    let l = speed_ladder(&p, &[1.0, 0.0], &[0, 1, 2, 5, 10, 20, 50, 100], &SpeedOptions::default(), false).unwrap();
    let c = l.speeds();
    let last = l.reports.last().unwrap();
    verdict(
        6,
        "blocking in an array of disks",
        &[
            ("all rungs have an unstable zero state".into(), l.skipped.is_empty()),
            (format!("nonincreasing {:.4} -> {:.4}", c[0], c[c.len() - 1]), l.is_nonincreasing(1e-6)),
            (format!("final/initial {:.3}", c[c.len() - 1] / c[0]), c[c.len() - 1] <= 0.1 * c[0]),
            ("blocked flag".into(), last.blocked_suspected),
            (format!("flatness {:.1e}", last.flatness), last.flatness <= 0.05),
        ],
        t,
        600.0,
    );
}

#[test]
fn criterion_07_positivity() {
    let t = Instant::now();
    let p = stripe(100);
    let l = speed_ladder(&p, &[1.0, 0.0], &[0, 1, 2, 5, 10, 20, 50, 100], &SpeedOptions::default(), true).unwrap();
    let lb = l.lower_bound().unwrap();
    let fin = *l.speeds().last().unwrap();
    let d = positivity_precondition(&stripe_spec(), &[1.0, 0.0], p.diffusion()).unwrap().unwrap();
    let lambdas: Vec<f64> = (1..=400).map(|j| 0.05 * j as f64).collect();
    let cert = positivity_certificate(&p, &d, &[1.0, 0.0], 100, &lambdas, DEFAULT_TOL).unwrap();
    let mut checks = vec![
        ("speeds nonincreasing".to_string(), l.is_nonincreasing(1e-6)),
        (format!("final {fin:.4} >= bound {lb:.4} - 1e-3"), fin >= lb - 1e-3),
        ("certificate verified".into(), cert.verified),
    ];
    match cert.lambda_uniform {
        Some(u) => {
            let rel = (u - cert.analytic_lambda).abs() / cert.analytic_lambda;
            checks.push((format!("threshold {u:.3} vs analytic {:.3} (rel {rel:.1e})", cert.analytic_lambda), rel <= 0.1));
        }
        None => checks.push(("threshold found".into(), false)),
    }
    verdict(7, "positivity along a band", &checks, t, 600.0);
}

#[test]
fn criterion_08_fronts() {
    let t = Instant::now();
    let mut checks = Vec::new();
    let h = homogeneous_1d(1.0, 10);
    let c = minimal_speed(&h, Mode::Periodic { rung: 0 }, &[1.0], &SpeedOptions::default()).unwrap().c_star;
    let f = front_run(&h, 0, &[1.0], &FrontOptions { cells: 160, time: Some(50.0), ..FrontOptions::default() }).unwrap();
    let rel = (f.speed - c).abs() / c;
    checks.push((format!("homogeneous {:.3} vs {c:.3} (rel {rel:.3})", f.speed), rel <= 0.15 && !f.exited));
    let s = stripe(20);
    let c = minimal_speed(&s, Mode::Periodic { rung: 20 }, &[1.0, 0.0], &SpeedOptions::default()).unwrap().c_star;
    let f = front_run(&s, 20, &[1.0, 0.0], &FrontOptions { cells: 64, ..FrontOptions::default() }).unwrap();
    let rel = (f.speed - c).abs() / c;
    checks.push((format!("band rung 20: {:.3} vs {c:.3} (rel {rel:.3})", f.speed), rel <= 0.15 && !f.exited));
    verdict(8, "front speeds match minimal speeds", &checks, t, 900.0);
}

#[test]
fn criterion_09_oracles() {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut grids = 0;
    let mut compare = |op: frontlab::OperatorMatrix| {
        assert!(op.len() <= 1000);
        let r = principal_eigenpair(&op, DEFAULT_TOL).unwrap().value;
        worst = worst.max((r - dense_principal(&op)).abs());
        grids += 1;
    };
    for (rate, m) in [(1.0, 8), (1.0, 20), (4.0, 20), (9.0, 20), (1.0, 10)] {
        let p = homogeneous_1d(rate, m);
        for lambda in [0.0, 1.0, 3.0] {
            compare(p.operator(Mode::Periodic { rung: 0 }, lambda, &[1.0]).unwrap());
        }
    }
    let p = stripe(100);
    for mode in [Mode::Periodic { rung: 0 }, Mode::Periodic { rung: 20 }, Mode::Periodic { rung: 100 }, Mode::Dirichlet] {
        for lambda in [0.0, 0.5, 2.0, 6.0] {
            compare(p.operator(mode, lambda, &[1.0, 0.0]).unwrap());
        }
    }
    compare(p.operator(Mode::Periodic { rung: 5 }, 1.0, &[0.6, 0.8]).unwrap());
    let r31 = common::load_scenario("remark31.toml").problem().unwrap();
    for mode in [Mode::Periodic { rung: 0 }, Mode::Periodic { rung: 100 }, Mode::Dirichlet] {
        compare(r31.operator(mode, 0.0, &[1.0]).unwrap());
    }
    for m in [128, 256, 512] {
        let lat = Lattice::new(&[2.0]).unwrap();
        let spec = DomainSpec::union(vec![Primitive::Rect { corner: [0.5, 0.0], extents: [1.0, 1.0] }]);
        let mask = rasterize(&spec, &lat, &[m]).unwrap();
        let g = mask.grid();
        compare(
            assemble(g, &DiffusionField::identity(1), &vec![0.0; g.len()], &[], 0.0, BoundaryMode::Dirichlet(mask.inside().to_vec()))
                .unwrap(),
        );
    }

    // 1D Dirichlet steady state against shooting
    let p = CellProblem::build(
        &Lattice::new(&[3.0]).unwrap(),
        &[600],
        &DomainSpec::union(vec![Primitive::Rect { corner: [0.5, 0.0], extents: [2.0, 1.0] }]),
        DiffusionField::identity(1),
        &ReactionModel::uniform(ReactionKind::Logistic { rate: 5.0 }),
        LadderSchedule { gamma: 10.0, n_max: 0 },
    )
    .unwrap();
    let r = minimal_steady_state(&p, Mode::Dirichlet, &EvolutionOptions::default()).unwrap();
    let g = p.grid();
    let h = g.spacing(0);
    let inside: Vec<usize> = (0..g.len()).filter(|&i| p.mask().is_inside(i)).collect();
    let left = g.position(inside[0])[0] - h;
    let oracle = shooting_logistic(5.0, (inside.len() + 1) as f64 * h, 4000);
    let want: Vec<f64> = inside.iter().map(|&i| oracle(g.position(i)[0] - left)).collect();
    let got: Vec<f64> = inside.iter().map(|&i| r.p[i]).collect();
    let sup = max_abs_diff(&got, &want);
    verdict(
        9,
        "oracle equivalence",
        &[
            (format!("{grids} operators, worst eigenvalue gap {worst:.1e}"), worst <= 1e-6),
            (format!("steady state vs shooting sup error {sup:.1e}"), sup <= 1e-4),
        ],
        t,
        600.0,
    );
}

#[test]
fn criterion_10_invariants() {
    let t = Instant::now();
    let mut checks = Vec::new();
    let p = stripe(20);

    let st = Stepper::for_mode(&p, Mode::Periodic { rung: 5 }, 0.5).unwrap();
    let n = p.grid().len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ordered = true;
    for _ in 0..20 {
        let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.8)).collect();
        let v0: Vec<f64> = u0.iter().map(|&u| (u + rng.gen_range(0.0..0.2)).min(1.0)).collect();
        let mut u = st.state(u0, false).unwrap();
        let mut v = st.state(v0, false).unwrap();
        for _ in 0..40 {
            st.step(&mut u).unwrap();
            st.step(&mut v).unwrap();
            ordered &= u.u.iter().zip(&v.u).all(|(a, b)| *a <= b + 1e-12);
        }
    }
    checks.push(("comparison principle on 20 pairs".to_string(), ordered));

    let mut worst_second = f64::INFINITY;
    for (rung, e) in [(0, [1.0, 0.0]), (20, [1.0, 0.0]), (20, [0.6, 0.8])] {
        let ks: Vec<f64> =
            (0..17).map(|j| p.k(Mode::Periodic { rung }, 0.25 * j as f64, &e, DEFAULT_TOL).unwrap()).collect();
        for w in ks.windows(3) {
            worst_second = worst_second.min(-(w[0] - 2.0 * w[1] + w[2]));
        }
    }
    checks.push((format!("convexity, min second difference {worst_second:.1e}"), worst_second >= -1e-6));

    let mut worst_r: f64 = 0.0;
    for mode in [Mode::Periodic { rung: 0 }, Mode::Periodic { rung: 20 }, Mode::Dirichlet] {
        let op = p.operator(mode, 0.0, &[1.0, 0.0]).unwrap();
        let r = principal_eigenpair(&op, DEFAULT_TOL).unwrap();
        worst_r = worst_r.max((rayleigh_check(&op, &r.eigenfunction).unwrap() - r.value).abs());
    }
    checks.push((format!("Rayleigh gap {worst_r:.1e}"), worst_r <= 10.0 * DEFAULT_TOL));

    let o = SpeedOptions::default();
    let mut worst_sym: f64 = 0.0;
    for rung in [0, 20] {
        for e in [[1.0, 0.0], [0.0, 1.0]] {
            let a = minimal_speed(&p, Mode::Periodic { rung }, &e, &o).unwrap().c_star;
            let b = minimal_speed(&p, Mode::Periodic { rung }, &[-e[0], -e[1]], &o).unwrap().c_star;
            worst_sym = worst_sym.max((a - b).abs());
        }
    }
    checks.push((format!("reflection symmetry {worst_sym:.1e}"), worst_sym <= 2.0 * DEFAULT_TOL));

    let s = common::load_scenario("homogeneous-1d.toml");
    let a = run(&s).unwrap().csv_files().unwrap();
    let b = run(&s).unwrap().csv_files().unwrap();
    checks.push((format!("{} CSV files identical on rerun", a.len()), a == b && !a.is_empty()));

    verdict(10, "invariant suite", &checks, t, 600.0);
}
