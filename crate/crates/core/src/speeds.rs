//! Dispersion curves `λ ↦ k_{e,λ}`, minimal speeds `min −k/λ`, spreading
//! speeds and the slab/cylinder positivity certificate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{unit_direction, CertificateDescriptor};
use crate::operator::Stencil;
use crate::problem::{CellProblem, Mode};

pub const DEFAULT_LAMBDA_MAX: f64 = 20.0;
pub const LAMBDA_FLOOR: f64 = 1e-2;
pub const PRESAMPLE_COUNT: usize = 64;
/// Relative variation of `−k` over `[λ_max/10, λ_max]` below which the curve
/// counts as flat.
pub const FLAT_TOL: f64 = 0.05;
const GOLDEN: f64 = 0.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedOptions {
    pub lambda_max: f64,
    /// Relative width at which golden-section refinement stops.
    pub lambda_tol: f64,
    pub eig_tol: f64,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self { lambda_max: DEFAULT_LAMBDA_MAX, lambda_tol: 1e-6, eig_tol: crate::eigen::DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub lambda: f64,
    pub k: f64,
}

impl DispersionSample {
    pub fn speed(&self) -> f64 {
        -self.k / self.lambda
    }
}

/// Geometric grid of `count` points from `LAMBDA_FLOOR` to `lambda_max`.
pub fn presample_grid(lambda_max: f64, count: usize) -> Vec<f64> {
    let ratio = (lambda_max / LAMBDA_FLOOR).ln();
    (0..count)
        .map(|j| {
            if j + 1 == count {
                lambda_max
            } else {
                LAMBDA_FLOOR * (ratio * j as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SpeedReport {
    pub direction: [f64; 2],
    pub mode: Mode,
    /// `k_{e,0}`, the principal eigenvalue without drift.
    pub lambda1: f64,
    pub presample: Vec<DispersionSample>,
    pub refinement: Vec<DispersionSample>,
    pub lambda_star: f64,
    pub c_star: f64,
    pub lambda_max: f64,
    pub minimizer_interior: bool,
    pub unimodal: bool,
    pub blocked_suspected: bool,
    /// Relative variation of `−k` over the top decade of the presample.
    pub flatness: f64,
}

impl SpeedReport {
    /// Every evaluated sample, sorted by λ.
    pub fn samples(&self) -> Vec<DispersionSample> {
        let mut all: Vec<DispersionSample> = self.presample.iter().chain(&self.refinement).copied().collect();
        all.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        all
    }

    /// `q` at the smallest sample exceeds twice the reported speed.
    pub fn blows_up_at_zero(&self) -> bool {
        self.presample[0].speed() > 2.0 * self.c_star
    }

    /// `−k_{e,λ} ≥ −k_{e,0}` at every sample, up to `slack`.
    pub fn dominates_zero_drift(&self, slack: f64) -> bool {
        self.samples().iter().all(|s| -s.k >= -self.lambda1 - slack)
    }
}

fn relative_variation(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = hi.abs().max(lo.abs());
    if scale == 0.0 {
        0.0
    } else {
        (hi - lo) / scale
    }
}

/// `c* = min_{λ>0} −k_{e,λ}/λ` for one mode, evaluated on `(0, λ_max]`.
pub fn minimal_speed(problem: &CellProblem, mode: Mode, e: &[f64], opts: &SpeedOptions) -> Result<SpeedReport> {
    let dim = problem.grid().dim();
    let dir = unit_direction(e, dim)?;
    if !(opts.lambda_max > LAMBDA_FLOOR) {
        return Err(Error::InvalidInput(format!(
            "lambda_max must exceed {LAMBDA_FLOOR}, got {}",
            opts.lambda_max
        )));
    }
    let tol = opts.eig_tol;
    let lambda1 = problem.k(mode, 0.0, e, tol)?;
    if lambda1 >= -tol {
        return Err(Error::StableZeroState { value: lambda1 });
    }
    let grid = presample_grid(opts.lambda_max, PRESAMPLE_COUNT);
    let presample = grid
        .par_iter()
        .map(|&lambda| Ok(DispersionSample { lambda, k: problem.k(mode, lambda, e, tol)? }))
        .collect::<Result<Vec<_>>>()?;
    let q: Vec<f64> = presample.iter().map(|s| s.speed()).collect();
    let last = q.len() - 1;
    let j = (0..q.len()).fold(0, |b, i| if q[i] < q[b] { i } else { b });
    let rel = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    let unimodal = (1..=j).all(|i| q[i] <= q[i - 1] + rel(q[i], q[i - 1]))
        && (j + 1..q.len()).all(|i| q[i] >= q[i - 1] - rel(q[i], q[i - 1]));

    let top: Vec<f64> = presample
        .iter()
        .filter(|s| s.lambda >= opts.lambda_max / 10.0 * (1.0 - 1e-12))
        .map(|s| -s.k)
        .collect();
    let flatness = relative_variation(&top);

    let mut refinement = Vec::new();
    let (lambda_star, c_star, interior) = if j == last {
        (opts.lambda_max, q[last], false)
    } else if !unimodal {
        (presample[j].lambda, q[j], j > 0)
    } else {
        let lo = if j == 0 { 0.5 * presample[0].lambda } else { presample[j - 1].lambda };
        let hi = presample[j + 1].lambda;
        let mut eval = |lambda: f64| -> Result<f64> {
            let k = problem.k(mode, lambda, e, tol)?;
            refinement.push(DispersionSample { lambda, k });
            Ok(-k / lambda)
        };
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - GOLDEN * (b - a);
        let mut x2 = a + GOLDEN * (b - a);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        while b - a > opts.lambda_tol * (a + b) * 0.5 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - GOLDEN * (b - a);
                f1 = eval(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + GOLDEN * (b - a);
                f2 = eval(x2)?;
            }
        }
        let (ls, cs) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        if cs <= q[j] {
            (ls, cs, true)
        } else {
            (presample[j].lambda, q[j], true)
        }
    };
    Ok(SpeedReport {
        direction: dir,
        mode,
        lambda1,
        presample,
        refinement,
        lambda_star,
        c_star,
        lambda_max: opts.lambda_max,
        minimizer_interior: interior,
        unimodal,
        blocked_suspected: !interior && flatness <= FLAT_TOL,
        flatness,
    })
}

#[derive(Debug, Clone)]
pub struct SpeedLadder {
    pub direction: [f64; 2],
    pub rungs: Vec<usize>,
    pub reports: Vec<SpeedReport>,
    /// Rungs left out because the zero state is stable there.
    pub skipped: Vec<(usize, String)>,
    /// Dirichlet-mode report; its speed is the lower bound for the limit.
    pub dirichlet: Option<SpeedReport>,
}

impl SpeedLadder {
    pub fn speeds(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.c_star).collect()
    }

    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.reports.windows(2).all(|w| w[1].c_star <= w[0].c_star + slack)
    }

    /// `k_{e,λ,n}` nondecreasing in n at every common presample λ.
    pub fn k_nondecreasing(&self, slack: f64) -> bool {
        self.reports.windows(2).all(|w| {
            w[0].presample.iter().zip(&w[1].presample).all(|(a, b)| b.k >= a.k - slack * (1.0 + a.k.abs()))
        })
    }

    /// Largest-rung speed, the estimate of the limit.
    pub fn limit_estimate(&self) -> Option<f64> {
        self.reports.last().map(|r| r.c_star)
    }

    pub fn lower_bound(&self) -> Option<f64> {
        self.dirichlet.as_ref().map(|r| r.c_star)
    }
}

pub fn speed_ladder(
    problem: &CellProblem,
    e: &[f64],
    rungs: &[usize],
    opts: &SpeedOptions,
    with_dirichlet: bool,
) -> Result<SpeedLadder> {
    let dir = unit_direction(e, problem.grid().dim())?;
    let outcomes: Vec<(usize, Result<SpeedReport>)> = rungs
        .par_iter()
        .map(|&n| (n, minimal_speed(problem, Mode::Periodic { rung: n }, e, opts)))
        .collect();
    let mut reports = Vec::new();
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (n, r) in outcomes {
        match r {
            Ok(r) => {
                reports.push(r);
                kept.push(n);
            }
            Err(Error::StableZeroState { value }) => {
                skipped.push((n, format!("principal eigenvalue {value:.6e} >= 0, zero state stable")))
            }
            Err(err) => return Err(err.at_rung(n)),
        }
    }
    let dirichlet = if with_dirichlet {
        match minimal_speed(problem, Mode::Dirichlet, e, opts) {
            Ok(r) => Some(r),
            Err(Error::StableZeroState { .. }) => None,
            Err(err) => return Err(err),
        }
    } else {
        None
    };
    Ok(SpeedLadder { direction: dir, rungs: kept, reports, skipped, dirichlet })
}

/// `count` unit vectors strictly inside the half-circle `ξ·e > 0`, plus `e`.
pub fn direction_fan(e: [f64; 2], count: usize) -> Vec<[f64; 2]> {
    let theta = e[1].atan2(e[0]);
    let mut out = vec![e];
    for j in 0..count {
        let t = theta - std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
        out.push([t.cos(), t.sin()]);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SpreadEntry {
    pub xi: [f64; 2],
    pub c_star: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SpreadingReport {
    pub direction: [f64; 2],
    pub rung: usize,
    pub entries: Vec<SpreadEntry>,
    pub w_star: f64,
    pub argmin: [f64; 2],
}

/// `w*_n(e) = min_{ξ·e>0} c*_n(ξ)/(ξ·e)` over a direction grid.
pub fn spreading_speed(
    problem: &CellProblem,
    rung: usize,
    e: &[f64],
    directions: &[[f64; 2]],
    opts: &SpeedOptions,
) -> Result<SpreadingReport> {
    let dim = problem.grid().dim();
    let dir = unit_direction(e, dim)?;
    if directions.is_empty() {
        return Err(Error::InvalidInput("empty direction grid".into()));
    }
    for xi in directions {
        let xe = xi[0] * dir[0] + xi[1] * dir[1];
        if !(xe > 0.0) {
            return Err(Error::InvalidInput(format!("direction {xi:?} does not satisfy xi.e > 0")));
        }
    }
    let entries = directions
        .par_iter()
        .map(|xi| {
            let r = minimal_speed(problem, Mode::Periodic { rung }, &xi[..dim], opts)?;
            let xe = xi[0] * dir[0] + xi[1] * dir[1];
            Ok(SpreadEntry { xi: *xi, c_star: r.c_star, ratio: r.c_star / xe })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = entries
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("nonempty");
    Ok(SpreadingReport { direction: dir, rung, w_star: best.ratio, argmin: best.xi, entries: entries.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateSample {
    pub lambda: f64,
    /// Discrete inequality with ζ replaced by `−sup|ζ|` on the slab.
    pub uniform_ok: bool,
    /// Discrete inequality with the actual ζ.
    pub actual_ok: bool,
    pub minus_k: f64,
    /// `−k ≥ αλ²` up to a relative `1e-6`.
    pub eig_ok: bool,
}

#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub descriptor: CertificateDescriptor,
    pub rung: usize,
    pub alpha: f64,
    /// `√((π²(Ae'·e')/w² + sup|ζ|)/α)`.
    pub analytic_lambda: f64,
    pub lambda_uniform: Option<f64>,
    pub lambda_actual: Option<f64>,
    pub verified: bool,
    pub samples: Vec<CertificateSample>,
}

/// Smallest sample from which the predicate holds on every later sample.
fn tail_start(samples: &[CertificateSample], pred: impl Fn(&CertificateSample) -> bool) -> Option<f64> {
    let mut start = None;
    for s in samples.iter().rev() {
        if pred(s) {
            start = Some(s.lambda);
        } else {
            break;
        }
    }
    start
}

/// Checks `L_{e,λ,n} ψ_λ ≤ −αλ² ψ_λ` on the slab (or cylinder) nodes for the
/// sampled λ and cross-checks `−k_{e,λ,n} ≥ αλ²` with the eigensolver.
pub fn positivity_certificate(
    problem: &CellProblem,
    descriptor: &CertificateDescriptor,
    e: &[f64],
    rung: usize,
    lambdas: &[f64],
    tol: f64,
) -> Result<CertificateReport> {
    let a = problem.diffusion().constant_matrix().ok_or(Error::NonConstantDiffusion)?;
    let grid = problem.grid();
    let dir = unit_direction(e, grid.dim())?;
    let (normal, lo, hi) = match *descriptor {
        CertificateDescriptor::Slab { normal, a, b, .. } => (normal, a, b),
        CertificateDescriptor::Cylinder { axis, center, half_width, .. } => {
            let nu = crate::geometry::perp(axis);
            let c = center[0] * nu[0] + center[1] * nu[1];
            (nu, c - half_width, c + half_width)
        }
    };
    let alpha = descriptor.alpha();
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("certificate constant alpha = {alpha} is not positive")));
    }
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let an = [a[0][0] * normal[0] + a[0][1] * normal[1], a[1][0] * normal[0] + a[1][1] * normal[1]];
    let ae = [a[0][0] * dir[0] + a[0][1] * dir[1], a[1][0] * dir[0] + a[1][1] * dir[1]];
    let ann = dot(an, normal);
    let ratio = dot(ae, normal) / ann;
    let width = hi - lo;
    let mid = 0.5 * (lo + hi);

    // representatives of the cell nodes strictly inside the band
    let lattice = grid.lattice();
    let slab = |x: [f64; 2]| -> Option<[f64; 2]> {
        for k0 in -3i64..=3 {
            for k1 in if grid.dim() > 1 { -3i64..=3 } else { 0..=0 } {
                let t = lattice.vector([k0, k1]);
                let y = [x[0] - t[0], x[1] - t[1]];
                let s = dot(y, normal);
                if lo < s && s < hi {
                    return Some(y);
                }
            }
        }
        None
    };
    let nodes: Vec<(usize, [f64; 2])> =
        (0..grid.len()).filter_map(|i| slab(grid.position(i)).map(|y| (i, y))).collect();
    if nodes.is_empty() {
        return Err(Error::InvalidInput("certificate band contains no grid node".into()));
    }
    let zeta = problem.zeta(Mode::Periodic { rung });
    let sup_zeta = nodes.iter().map(|&(i, _)| zeta[i].abs()).fold(0.0, f64::max);
    let analytic_lambda = ((std::f64::consts::PI.powi(2) * ann / (width * width) + sup_zeta) / alpha).sqrt();

    let mut sorted: Vec<f64> = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let samples = sorted
        .par_iter()
        .map(|&lambda| {
            let lp = lambda * ratio;
            let psi = |x: [f64; 2]| {
                let s = dot(x, normal);
                if lo < s && s < hi {
                    (lp * (s - mid)).exp() * (std::f64::consts::PI / width * (s - mid)).cos()
                } else {
                    0.0
                }
            };
            let stencil = Stencil::new(grid, problem.diffusion(), dir, lambda, problem.scheme());
            let bound = alpha * lambda * lambda;
            let mut uniform_ok = true;
            let mut actual_ok = true;
            for &(i, y) in &nodes {
                let p = psi(y);
                let mut l = -zeta[i] * p;
                for (_, d, v) in stencil.row(i) {
                    l += v * psi([y[0] + d[0], y[1] + d[1]]);
                }
                let slack = 1e-10 * (l.abs() + bound * p);
                actual_ok &= l <= -bound * p + slack;
                uniform_ok &= l + (zeta[i] + sup_zeta) * p <= -bound * p + slack;
            }
            let k = problem.k(Mode::Periodic { rung }, lambda, e, tol)?;
            Ok(CertificateSample {
                lambda,
                uniform_ok,
                actual_ok,
                minus_k: -k,
                eig_ok: -k >= bound * (1.0 - 1e-6),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda_uniform = tail_start(&samples, |s| s.uniform_ok);
    let lambda_actual = tail_start(&samples, |s| s.actual_ok);
    let verified = match lambda_uniform {
        Some(l) => samples.iter().filter(|s| s.lambda >= l).all(|s| s.eig_ok),
        None => false,
    };
    Ok(CertificateReport {
        descriptor: descriptor.clone(),
        rung,
        alpha,
        analytic_lambda,
        lambda_uniform,
        lambda_actual,
        verified,
        samples,
    })
}
