//! Principal eigenpairs by shifted inverse iteration with a sparse LU.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::DiffusionField;
use crate::geometry::{ComponentReport, DomainMask};
use crate::operator::{assemble, gershgorin, BoundaryMode, OperatorMatrix};
use crate::problem::{CellProblem, Mode};
use crate::sparse::{Csr, SparseLu};

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 20_000;
const MAX_RESTARTS: usize = 5;
const MAX_RESHIFTS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub value: f64,
    /// On every node, pinned nodes included; `Σ φ² ΔV = 1`.
    pub eigenfunction: Vec<f64>,
    /// `‖Lφ − kφ‖₂ / ‖φ‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub lambda: f64,
    pub direction: [f64; 2],
    pub rung: Option<usize>,
    pub dirichlet: bool,
}

impl EigenResult {
    /// Smallest eigenfunction value over the given nodes.
    pub fn min_on(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&i| self.eigenfunction[i]).fold(f64::INFINITY, f64::min)
    }
}

struct Converged {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
    iterations: usize,
    restarts: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn has_sign_change(v: &[f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().any(|&x| x < -1e-12 * scale)
}

fn inverse_iteration(s: &Csr, tol: f64) -> Result<Converged> {
    let n = s.n();
    let sigma0 = gershgorin(s) - 1.0;
    let mut start = vec![1.0 / (n as f64).sqrt(); n];
    let mut total = 0usize;
    let mut best = f64::INFINITY;
    for restart in 0..=MAX_RESTARTS {
        let mut sigma = sigma0;
        let mut lu = SparseLu::factor(s, sigma)?;
        let mut reshifts = 0;
        let mut since_factor = 0;
        let mut w = start.clone();
        let mut sw = vec![0.0; n];
        let mut finished = None;
        while total < MAX_ITERATIONS {
            total += 1;
            since_factor += 1;
            lu.solve_in_place(&mut w);
            let nw = norm(&w);
            if !(nw.is_finite() && nw > 0.0) {
                return Err(Error::Factorization("inverse iteration produced a non-finite vector".into()));
            }
            let sign = if w.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            w.iter_mut().for_each(|x| *x *= sign / nw);
            s.matvec_into(&w, &mut sw);
            let mu = dot(&w, &sw);
            let r = sw.iter().zip(&w).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
            best = best.min(r);
            if r <= tol {
                finished = Some((mu, r));
                break;
            }
            let gap = mu - sigma;
            if since_factor >= 6 && reshifts < MAX_RESHIFTS && gap > 0.0 && r < 0.05 * gap {
                let next = mu - 0.1 * gap;
                if let Ok(f) = SparseLu::factor(s, next) {
                    lu = f;
                    sigma = next;
                    reshifts += 1;
                    since_factor = 0;
                }
            }
        }
        let Some((mu, r)) = finished else {
            return Err(Error::NonConvergence { iterations: total, residual: best });
        };
        if !has_sign_change(&w) {
            return Ok(Converged { value: mu, vector: w, residual: r, iterations: total, restarts: restart });
        }
        start = w.iter().map(|x| x.abs()).collect();
    }
    Err(Error::NotPositive(format!(
        "eigenvector kept changing sign after {MAX_RESTARTS} restarts"
    )))
}

/// Smallest eigenvalue of a sparse matrix with nonpositive off-diagonals.
pub(crate) fn principal_value(s: &Csr, tol: f64) -> Result<f64> {
    inverse_iteration(s, tol).map(|c| c.value)
}

/// Principal eigenpair of `op`: the eigenvalue of minimal real part with a
/// positive eigenvector, computed on the unpinned nodes.
pub fn principal_eigenpair(op: &OperatorMatrix, tol: f64) -> Result<EigenResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let active = op.active_nodes();
    if active.is_empty() {
        return Err(Error::NoActiveNodes);
    }
    let sub;
    let s = if active.len() == op.len() {
        op.matrix()
    } else {
        sub = op.matrix().submatrix(&active);
        &sub
    };
    let c = inverse_iteration(s, tol)?;
    let mut phi = vec![0.0; op.len()];
    let scale = 1.0 / (dot(&c.vector, &c.vector) * op.node_volume()).sqrt();
    for (k, &i) in active.iter().enumerate() {
        phi[i] = c.vector[k] * scale;
    }
    Ok(EigenResult {
        value: c.value,
        eigenfunction: phi,
        residual: c.residual,
        iterations: c.iterations,
        restarts: c.restarts,
        lambda: op.lambda(),
        direction: op.direction(),
        rung: op.rung(),
        dirichlet: op.mode().is_dirichlet(),
    })
}

/// Discrete Rayleigh quotient `(Σ_{i<j} −L_ij (φ_i−φ_j)² + Σ_i (Σ_j L_ij) φ_i²) / Σ φ_i²`
/// over the unpinned nodes: the quadrature of `∫A∇φ·∇φ − ζφ²` over `∫φ²`.
pub fn rayleigh_check(op: &OperatorMatrix, phi: &[f64]) -> Result<f64> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if phi.len() != op.len() {
        return Err(Error::LengthMismatch { expected: op.len(), got: phi.len() });
    }
    let m = op.matrix();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in op.active_nodes() {
        let mut rowsum = 0.0;
        for (j, v) in m.row(i) {
            rowsum += v;
            if j > i {
                num += -v * (phi[i] - phi[j]).powi(2);
            }
        }
        num += rowsum * phi[i] * phi[i];
        den += phi[i] * phi[i];
    }
    if den == 0.0 {
        return Err(Error::InvalidInput("Rayleigh quotient of the zero vector".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone)]
pub struct EigenLadder {
    pub lambda: f64,
    pub direction: [f64; 2],
    pub rungs: Vec<usize>,
    pub values: Vec<EigenResult>,
    /// The Dirichlet-mode value, the `n = ∞` reference.
    pub limit: EigenResult,
}

impl EigenLadder {
    pub fn gaps(&self) -> Vec<f64> {
        self.values.iter().map(|r| self.limit.value - r.value).collect()
    }

    /// Nondecreasing in n up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1].value >= w[0].value - slack)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1].value > w[0].value)
    }

    pub fn below_limit(&self) -> bool {
        self.values.iter().all(|r| r.value < self.limit.value)
    }
}

/// Principal eigenvalues along the penalization ladder at fixed `(λ, e)`,
/// with the Dirichlet-mode value as the limit reference.
pub fn eigen_ladder(problem: &CellProblem, rungs: &[usize], lambda: f64, e: &[f64], tol: f64) -> Result<EigenLadder> {
    let values = rungs
        .par_iter()
        .map(|&n| problem.eigen(Mode::Periodic { rung: n }, lambda, e, tol))
        .collect::<Result<Vec<_>>>()?;
    let limit = problem.eigen(Mode::Dirichlet, lambda, e, tol)?;
    Ok(EigenLadder {
        lambda,
        direction: limit.direction,
        rungs: rungs.to_vec(),
        values,
        limit,
    })
}

#[derive(Debug, Clone)]
pub struct ComponentEigenvalues {
    pub results: Vec<EigenResult>,
    /// Components with a negative Dirichlet principal eigenvalue.
    pub i_minus: Vec<usize>,
}

impl ComponentEigenvalues {
    pub fn values(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.value).collect()
    }

    pub fn min(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Dirichlet principal eigenvalue of `−∇·(A∇) − ζ` on each component.
pub fn component_eigenvalues(
    mask: &DomainMask,
    components: &ComponentReport,
    a: &DiffusionField,
    zeta: &[f64],
    tol: f64,
) -> Result<ComponentEigenvalues> {
    let results = (0..components.len())
        .into_par_iter()
        .map(|id| {
            let sub = components.component_mask(mask, id)?;
            let op = assemble(mask.grid(), a, zeta, &[], 0.0, BoundaryMode::Dirichlet(sub.inside().to_vec()))?;
            principal_eigenpair(&op, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let i_minus = results.iter().enumerate().filter(|(_, r)| r.value < 0.0).map(|(i, _)| i).collect();
    Ok(ComponentEigenvalues { results, i_minus })
}
