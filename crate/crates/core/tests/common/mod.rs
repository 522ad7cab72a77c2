#![allow(dead_code)]

use std::path::PathBuf;

use frontlab::scenario::Scenario;
use frontlab::{
    CellProblem, DiffusionField, DomainSpec, LadderSchedule, Lattice, OperatorMatrix, Primitive, ReactionKind,
    ReactionModel,
};
use nalgebra::DMatrix;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn load_scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("scenario parses")
}

/// Logistic growth at `rate` everywhere on a 1D cell of length 1.
pub fn homogeneous_1d(rate: f64, resolution: usize) -> CellProblem {
    CellProblem::build(
        &Lattice::new(&[1.0]).unwrap(),
        &[resolution],
        &DomainSpec::whole_space(),
        DiffusionField::identity(1),
        &ReactionModel::uniform(ReactionKind::Logistic { rate }),
        LadderSchedule { gamma: 0.0, n_max: 0 },
    )
    .unwrap()
}

/// Band 1.25 < y < 3.75 in a 1 x 5 cell, logistic rate 5, gamma 10.
pub fn stripe(n_max: usize) -> CellProblem {
    CellProblem::build(
        &Lattice::new(&[1.0, 5.0]).unwrap(),
        &[8, 40],
        &DomainSpec::union(vec![Primitive::Slab { normal: [0.0, 1.0], a: 1.25, b: 3.75 }]),
        DiffusionField::identity(2),
        &ReactionModel::uniform(ReactionKind::Logistic { rate: 5.0 }),
        LadderSchedule { gamma: 10.0, n_max },
    )
    .unwrap()
}

/// Disks of radius 1 on the period-8 square lattice, logistic rate 8.
pub fn disk_array(gamma: f64, n_max: usize) -> CellProblem {
    CellProblem::build(
        &Lattice::new(&[8.0, 8.0]).unwrap(),
        &[64, 64],
        &DomainSpec::union(vec![Primitive::Disk { center: [4.0, 4.0], radius: 1.0 }]),
        DiffusionField::identity(2),
        &ReactionModel::uniform(ReactionKind::Logistic { rate: 8.0 }),
        LadderSchedule { gamma, n_max },
    )
    .unwrap()
}

/// Smallest real part over the full dense spectrum of the unpinned block.
pub fn dense_principal(op: &OperatorMatrix) -> f64 {
    let active = op.active_nodes();
    let sub = op.matrix().submatrix(&active).to_dense();
    let n = sub.len();
    let m = DMatrix::from_fn(n, n, |i, j| sub[i][j]);
    if op.is_symmetric() {
        m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Classical RK4 for `y' = f(t, y)` from `t0` to `t1` in `steps` steps.
pub fn rk4<const D: usize>(f: impl Fn(f64, [f64; D]) -> [f64; D], y0: [f64; D], t0: f64, t1: f64, steps: usize) -> [f64; D] {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let axpy = |y: [f64; D], k: [f64; D], s: f64| {
        let mut out = y;
        for i in 0..D {
            out[i] += s * k[i];
        }
        out
    };
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, axpy(y, k1, h / 2.0));
        let k3 = f(t + h / 2.0, axpy(y, k2, h / 2.0));
        let k4 = f(t + h, axpy(y, k3, h));
        for i in 0..D {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Shooting oracle for `-u'' = r u (1 - u)` on `(0, len)` with `u = 0` at both
/// ends: bisection on the initial slope for the positive solution.
pub fn shooting_logistic(rate: f64, len: f64, steps: usize) -> impl Fn(f64) -> f64 {
    let rhs = move |_t: f64, y: [f64; 2]| [y[1], -rate * y[0] * (1.0 - y[0])];
    let end = |s: f64| rk4(rhs, [0.0, s], 0.0, len, steps)[0];
    // end(s) > 0 for slopes too large (overshoot), < 0 for too small ones
    // slopes above sqrt(r/3) leave [0, 1]
    let (mut lo, mut hi) = (1e-6, (rate / 3.0).sqrt());
    let sign_lo = end(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if end(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let slope = 0.5 * (lo + hi);
    move |x: f64| {
        if x <= 0.0 || x >= len {
            return 0.0;
        }
        let n = ((x / len) * steps as f64).ceil().max(1.0) as usize;
        rk4(rhs, [0.0, slope], 0.0, x, n)[0]
    }
}
