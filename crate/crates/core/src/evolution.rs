//! IMEX time integration of `u_t = ∇·(A∇u) + f_n(x,u)`: minimal steady states
//! by monotone evolution, the steady-state ladder and front runs on strips.

use rayon::prelude::*;

use crate::eigen::{component_eigenvalues, principal_eigenpair, principal_value};
use crate::error::{Error, Result};
use crate::fields::ReactionLadder;
use crate::geometry::analyze_components;
use crate::grid::{Grid, Lattice};
use crate::operator::{assemble, BoundaryMode, DriftScheme, Stencil};
use crate::problem::{CellProblem, Mode};
use crate::sparse::{Csr, SparseLu};
use crate::speeds::{minimal_speed, SpeedOptions};

/// Allowed excursion outside `[0, M]` and allowed decrease in monotone runs.
pub const STATE_SLACK: f64 = 1e-10;
/// Increment rate below which Newton polishing is attempted.
const NEWTON_TRIGGER: f64 = 1e-4;
const NEWTON_ITERATIONS: usize = 40;
/// Windows skipped after a rejected Newton candidate.
const NEWTON_BACKOFF: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    /// `Δt · Lip(F̃)`.
    pub cfl: f64,
    pub tol: f64,
    /// Time window `T` for the increment test `‖u(t+T) − u(t)‖ ≤ tol·T`.
    pub window: f64,
    pub max_time: f64,
    pub newton: bool,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self { cfl: 0.5, tol: 1e-8, window: 1.0, max_time: 20_000.0, newton: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    /// On every node of the stepper's grid.
    pub u: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub monotone: bool,
    /// `(t, ‖u(t) − u(t−T)‖/T)` at each window end.
    pub increments: Vec<(f64, f64)>,
}

/// Backward-Euler diffusion with the linear penalization treated implicitly,
/// explicit unpenalized reaction:
/// `(I + Δt(K − diag ρ)) u⁺ = u + Δt (F̃(u) + g)` with `g` the inflow from
/// clamped boundary values.
pub struct Stepper {
    full_len: usize,
    unknowns: Vec<usize>,
    cell_node: Vec<usize>,
    diffusion: Csr,
    lu: SparseLu,
    rho: Vec<f64>,
    inflow: Vec<f64>,
    ladder: ReactionLadder,
    dt: f64,
    node_volume: f64,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("unknowns", &self.unknowns.len())
            .field("dt", &self.dt)
            .finish()
    }
}

fn weighted_norm(v: &[f64], dv: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dv).sqrt()
}

impl Stepper {
    #[allow(clippy::too_many_arguments)]
    fn build(
        full_len: usize,
        unknowns: Vec<usize>,
        cell_node: Vec<usize>,
        diffusion: Csr,
        rho: Vec<f64>,
        inflow: Vec<f64>,
        ladder: ReactionLadder,
        cfl: f64,
        node_volume: f64,
    ) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0, 1], got {cfl}")));
        }
        if unknowns.is_empty() {
            return Err(Error::NoActiveNodes);
        }
        let lip = ladder.base_lipschitz();
        let dt = if lip > 0.0 { cfl / lip } else { cfl };
        let lu = Self::factor(&diffusion, &rho, dt)?;
        Ok(Self { full_len, unknowns, cell_node, diffusion, lu, rho, inflow, ladder, dt, node_volume })
    }

    fn factor(diffusion: &Csr, rho: &[f64], dt: f64) -> Result<SparseLu> {
        let d: Vec<f64> = rho.iter().map(|r| 1.0 - dt * r).collect();
        SparseLu::factor(&diffusion.scaled(dt).add_diagonal(&d), 0.0)
    }

    /// Stepper on the cell for a periodic rung or the Dirichlet problem.
    pub fn for_mode(problem: &CellProblem, mode: Mode, cfl: f64) -> Result<Self> {
        let inside = match mode {
            Mode::Periodic { .. } => vec![true; problem.grid().len()],
            Mode::Dirichlet => problem.mask().inside().to_vec(),
        };
        Self::on_nodes(problem, &inside, mode.rung(), cfl)
    }

    /// Stepper with Dirichlet pinning outside `active`; `rung = None` uses the
    /// unpenalized reaction.
    pub fn on_nodes(problem: &CellProblem, active: &[bool], rung: Option<usize>, cfl: f64) -> Result<Self> {
        let grid = problem.grid();
        let n = grid.len();
        let mode = if active.iter().all(|&a| a) {
            BoundaryMode::Periodic
        } else {
            BoundaryMode::Dirichlet(active.to_vec())
        };
        let op = assemble(grid, problem.diffusion(), &vec![0.0; n], &[], 0.0, mode)?;
        let unknowns = op.active_nodes();
        let k = op.matrix().submatrix(&unknowns);
        let ladder = problem.ladder().clone();
        let rho = unknowns.iter().map(|&i| ladder.rho(rung.unwrap_or(0), i)).collect();
        let m = unknowns.len();
        Self::build(n, unknowns.clone(), unknowns, k, rho, vec![0.0; m], ladder, cfl, grid.node_volume())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.full_len
    }

    pub fn is_empty(&self) -> bool {
        self.full_len == 0
    }

    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    pub fn saturation(&self) -> f64 {
        self.ladder.saturation()
    }

    fn gather(&self, u: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&i| u[i]).collect()
    }

    pub fn state(&self, u0: Vec<f64>, monotone: bool) -> Result<EvolutionState> {
        if u0.len() != self.full_len {
            return Err(Error::LengthMismatch { expected: self.full_len, got: u0.len() });
        }
        Ok(EvolutionState { u: u0, t: 0.0, dt: self.dt, monotone, increments: Vec::new() })
    }

    /// One IMEX step; checks the range `[0, M]` and, for monotone runs,
    /// nodewise growth.
    pub fn step(&self, state: &mut EvolutionState) -> Result<()> {
        let dt = self.dt;
        let mut rhs: Vec<f64> = self
            .unknowns
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let u = state.u[i];
                u + dt * (self.ladder.base_value(self.cell_node[k], u) + self.inflow[k])
            })
            .collect();
        self.lu.solve_in_place(&mut rhs);
        let t = state.t + dt;
        let m = self.saturation();
        for (k, &i) in self.unknowns.iter().enumerate() {
            let v = rhs[k];
            if !(v >= -STATE_SLACK && v <= m + STATE_SLACK) {
                return Err(Error::RangeViolation { node: i, value: v, time: t });
            }
            if state.monotone && v < state.u[i] - STATE_SLACK {
                return Err(Error::MonotonicityViolation { node: i, drop: state.u[i] - v, time: t });
            }
            state.u[i] = v;
        }
        state.t = t;
        Ok(())
    }

    /// `K u − g − f_n(u)` on the unknowns.
    fn stationary_defect(&self, u_unknown: &[f64]) -> Vec<f64> {
        let ku = self.diffusion.matvec(u_unknown);
        ku.iter()
            .enumerate()
            .map(|(k, &v)| {
                let u = u_unknown[k];
                v - self.inflow[k] - self.rho[k] * u - self.ladder.base_value(self.cell_node[k], u)
            })
            .collect()
    }

    /// Weighted L² norm of the stationary defect.
    pub fn residual(&self, u: &[f64]) -> f64 {
        weighted_norm(&self.stationary_defect(&self.gather(u)), self.node_volume)
    }

    fn jacobian(&self, x: &[f64]) -> Csr {
        let d: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| -self.rho[k] - self.ladder.kind(self.cell_node[k]).derivative(v))
            .collect();
        self.diffusion.add_diagonal(&d)
    }

    /// Principal eigenvalue of the linearized stationary operator at `u`;
    /// a limit of a monotone run from below has it nonnegative.
    pub fn linear_stability(&self, u: &[f64]) -> Result<f64> {
        principal_value(&self.jacobian(&self.gather(u)), crate::eigen::DEFAULT_TOL)
    }

    /// Newton iteration for the stationary equation started at `u`.
    pub fn newton(&self, u: &[f64], tol: f64) -> Option<Vec<f64>> {
        let mut x = self.gather(u);
        for _ in 0..NEWTON_ITERATIONS {
            let defect = self.stationary_defect(&x);
            if weighted_norm(&defect, self.node_volume) <= tol {
                let mut full = vec![0.0; self.full_len];
                for (k, &i) in self.unknowns.iter().enumerate() {
                    full[i] = x[k];
                }
                return Some(full);
            }
            let jac = self.jacobian(&x);
            let lu = SparseLu::factor(&jac, 0.0).ok()?;
            let mut delta = defect;
            lu.solve_in_place(&mut delta);
            for (xk, dk) in x.iter_mut().zip(&delta) {
                *xk -= dk;
            }
            if !x.iter().all(|v| v.is_finite()) {
                return None;
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRow {
    pub id: usize,
    pub nodes: usize,
    /// Dirichlet principal eigenvalue on the component (Dirichlet mode only).
    pub eigenvalue: Option<f64>,
    pub in_i_minus: Option<bool>,
    pub max_p: f64,
    pub min_p: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub p: Vec<f64>,
    pub mode: Mode,
    pub residual: f64,
    pub time: f64,
    pub epsilon0: Vec<f64>,
    pub principal: Vec<f64>,
    pub newton: bool,
    pub components: Vec<ComponentRow>,
}

struct Limit {
    p: Vec<f64>,
    residual: f64,
    time: f64,
    newton: bool,
}

fn monotone_limit(stepper: &Stepper, u0: Vec<f64>, opts: &EvolutionOptions) -> Result<Limit> {
    let m = stepper.saturation();
    let mut state = stepper.state(u0, true)?;
    let mut last = state.u.clone();
    let steps_per_window = (opts.window / stepper.dt).ceil().max(1.0) as usize;
    let window = steps_per_window as f64 * stepper.dt;
    let mut skip = 0usize;
    loop {
        for _ in 0..steps_per_window {
            stepper.step(&mut state)?;
        }
        let inc: Vec<f64> = state.u.iter().zip(&last).map(|(a, b)| a - b).collect();
        let rate = weighted_norm(&inc, stepper.node_volume) / window;
        state.increments.push((state.t, rate));
        last.clone_from(&state.u);
        if skip > 0 {
            skip -= 1;
        } else if opts.newton && rate <= NEWTON_TRIGGER {
            if let Some(p) = stepper.newton(&state.u, opts.tol) {
                let below = p.iter().zip(&state.u).all(|(pi, ui)| *pi >= ui - 1e-8);
                let bounded = p.iter().all(|&v| v >= -STATE_SLACK && v <= m + STATE_SLACK);
                // an unstable stationary point is not the limit of the run
                if below && bounded && stepper.linear_stability(&p)? >= -1e-8 {
                    let residual = stepper.residual(&p);
                    return Ok(Limit { p, residual, time: state.t, newton: true });
                }
            }
            skip = NEWTON_BACKOFF;
        }
        if rate <= opts.tol {
            let residual = stepper.residual(&state.u);
            if residual <= opts.tol && stepper.linear_stability(&state.u)? >= -1e-8 {
                return Ok(Limit { p: state.u, residual, time: state.t, newton: false });
            }
        }
        if state.t >= opts.max_time {
            return Err(Error::SteadyStateNotReached { time: state.t, rate });
        }
    }
}

fn component_rows(problem: &CellProblem, p: &[f64], eig: Option<&[f64]>) -> Result<Vec<ComponentRow>> {
    let report = analyze_components(problem.mask())?;
    Ok(report
        .components
        .iter()
        .map(|c| {
            let max_p = c.nodes.iter().map(|&i| p[i]).fold(f64::NEG_INFINITY, f64::max);
            let min_p = c.nodes.iter().map(|&i| p[i]).fold(f64::INFINITY, f64::min);
            let eigenvalue = eig.map(|e| e[c.id]);
            ComponentRow {
                id: c.id,
                nodes: c.nodes.len(),
                eigenvalue,
                in_i_minus: eigenvalue.map(|v| v < 0.0),
                max_p,
                min_p,
                positive: min_p > 0.0,
            }
        })
        .collect())
}

/// Minimal steady state: the monotone limit of the evolution started at
/// `ε₀φ`, with `φ` the principal eigenfunction scaled to `max φ = 1`.
pub fn minimal_steady_state(problem: &CellProblem, mode: Mode, opts: &EvolutionOptions) -> Result<SteadyStateResult> {
    match mode {
        Mode::Periodic { rung } => {
            let eig = problem.eigen(mode, 0.0, &[], crate::eigen::DEFAULT_TOL)?;
            if eig.value >= 0.0 {
                return Err(Error::StableZeroState { value: eig.value }.at_rung(rung));
            }
            let support: Vec<usize> = (0..problem.grid().len()).collect();
            let eps0 = problem.ladder().epsilon0(Some(rung), eig.value, &support).map_err(|e| e.at_rung(rung))?;
            let top = eig.eigenfunction.iter().copied().fold(0.0, f64::max);
            let u0 = eig.eigenfunction.iter().map(|v| eps0 * v / top).collect();
            let stepper = Stepper::for_mode(problem, mode, opts.cfl)?;
            let lim = monotone_limit(&stepper, u0, opts).map_err(|e| e.at_rung(rung))?;
            let components = component_rows(problem, &lim.p, None)?;
            Ok(SteadyStateResult {
                p: lim.p,
                mode,
                residual: lim.residual,
                time: lim.time,
                epsilon0: vec![eps0],
                principal: vec![eig.value],
                newton: lim.newton,
                components,
            })
        }
        Mode::Dirichlet => {
            let mask = problem.mask();
            let report = analyze_components(mask)?;
            let zeta = problem.zeta(Mode::Dirichlet);
            let eigs = component_eigenvalues(mask, &report, problem.diffusion(), &zeta, crate::eigen::DEFAULT_TOL)?;
            if eigs.i_minus.is_empty() {
                return Err(Error::StableZeroState { value: eigs.min() });
            }
            let runs = eigs
                .i_minus
                .par_iter()
                .map(|&id| {
                    let sub = report.component_mask(mask, id)?;
                    let phi = &eigs.results[id];
                    let support = report.components[id].nodes.clone();
                    let eps0 = problem.ladder().epsilon0(None, phi.value, &support)?;
                    let top = phi.eigenfunction.iter().copied().fold(0.0, f64::max);
                    let u0 = phi.eigenfunction.iter().map(|v| eps0 * v / top).collect();
                    let stepper = Stepper::on_nodes(problem, sub.inside(), None, opts.cfl)?;
                    Ok((eps0, monotone_limit(&stepper, u0, opts)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut p = vec![0.0; problem.grid().len()];
            let mut time: f64 = 0.0;
            let mut newton = true;
            let mut epsilon0 = Vec::new();
            for (eps0, lim) in &runs {
                for (pi, li) in p.iter_mut().zip(&lim.p) {
                    *pi += li;
                }
                time = time.max(lim.time);
                newton &= lim.newton;
                epsilon0.push(*eps0);
            }
            let whole = Stepper::for_mode(problem, Mode::Dirichlet, opts.cfl)?;
            let residual = whole.residual(&p);
            let values = eigs.values();
            let components = component_rows(problem, &p, Some(&values))?;
            Ok(SteadyStateResult { p, mode, residual, time, epsilon0, principal: values, newton, components })
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyLadder {
    pub rungs: Vec<usize>,
    pub results: Vec<SteadyStateResult>,
    pub dirichlet: SteadyStateResult,
    /// `‖p_n‖_{L²(C_0∖Ω)}` per rung.
    pub hostile_mass: Vec<f64>,
}

impl SteadyLadder {
    /// Largest `p_{n+1} − p_n` over consecutive rungs and all nodes.
    pub fn max_increase(&self) -> f64 {
        self.results
            .windows(2)
            .flat_map(|w| w[1].p.iter().zip(&w[0].p).map(|(a, b)| a - b).collect::<Vec<_>>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mass_strictly_decreasing(&self) -> bool {
        self.hostile_mass.windows(2).all(|w| w[1] < w[0])
    }

    /// `max (p − p_n)⁺` over Ω̄ nodes at the last rung.
    pub fn deficit(&self, inside: &[bool]) -> f64 {
        let last = self.results.last().expect("nonempty ladder");
        last.p
            .iter()
            .zip(&self.dirichlet.p)
            .zip(inside)
            .filter(|(_, &ins)| ins)
            .map(|((pn, p), _)| (p - pn).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `max (p_n − p)` over the given nodes at rung index `idx`.
    pub fn excess_on(&self, idx: usize, nodes: &[usize]) -> f64 {
        let r = &self.results[idx];
        nodes
            .iter()
            .map(|&i| r.p[i] - self.dirichlet.p[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn hostile_mass(problem: &CellProblem, p: &[f64]) -> f64 {
    let dv = problem.grid().node_volume();
    let s: f64 = p
        .iter()
        .zip(problem.mask().inside())
        .filter(|(_, &ins)| !ins)
        .map(|(v, _)| v * v)
        .sum();
    (s * dv).sqrt()
}

pub fn steady_ladder(problem: &CellProblem, rungs: &[usize], opts: &EvolutionOptions) -> Result<SteadyLadder> {
    let results = rungs
        .par_iter()
        .map(|&n| minimal_steady_state(problem, Mode::Periodic { rung: n }, opts))
        .collect::<Result<Vec<_>>>()?;
    let dirichlet = minimal_steady_state(problem, Mode::Dirichlet, opts)?;
    let hostile_mass = results.iter().map(|r| hostile_mass(problem, &r.p)).collect();
    Ok(SteadyLadder { rungs: rungs.to_vec(), results, dirichlet, hostile_mass })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontOptions {
    /// Number of cells along the propagation axis.
    pub cells: usize,
    /// Final time; `None` picks `0.6 · cells · L / c*_0`.
    pub time: Option<f64>,
    pub cfl: f64,
    /// Record the front position every this many steps.
    pub record_every: usize,
}

impl Default for FrontOptions {
    fn default() -> Self {
        Self { cells: 16, time: None, cfl: 0.05, record_every: 1 }
    }
}

/// Speeds below this count as a stalled front.
pub const STALL_SPEED: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontResult {
    pub direction: [f64; 2],
    pub rung: usize,
    pub cells: usize,
    pub final_time: f64,
    pub dt: f64,
    pub level: f64,
    /// `(t, position along e measured from the trailing end)`.
    pub positions: Vec<(f64, f64)>,
    pub speed: f64,
    /// Mean `|u|` over hostile nodes in the middle half of the strip at the end.
    pub hostile_amplitude: f64,
    /// First time the front passes the strip midpoint.
    pub midpoint_time: Option<f64>,
    pub exited: bool,
    pub stalled: bool,
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Front run on a strip of `cells` periods along a coordinate axis `e`,
/// periodic across, with `p_n` clamped behind and 0 ahead.
pub fn front_run(problem: &CellProblem, rung: usize, e: &[f64], opts: &FrontOptions) -> Result<FrontResult> {
    let grid = problem.grid();
    let dim = grid.dim();
    let dir = crate::geometry::unit_direction(e, dim)?;
    let axis = (0..dim)
        .find(|&a| (dir[a].abs() - 1.0).abs() < 1e-12)
        .ok_or_else(|| Error::InvalidInput(format!("front runs need a coordinate direction, got {e:?}")))?;
    let forward = dir[axis] > 0.0;
    if opts.cells < 8 {
        return Err(Error::InvalidInput(format!("strip needs at least 8 cells, got {}", opts.cells)));
    }
    let steady = minimal_steady_state(problem, Mode::Periodic { rung }, &EvolutionOptions::default())?;
    let p = &steady.p;
    let p_bar = p.iter().sum::<f64>() / p.len() as f64;
    let level = 0.5 * p_bar;

    let period = grid.lattice().period(axis);
    let length = opts.cells as f64 * period;
    let final_time = match opts.time {
        Some(t) => t,
        None => {
            let c0 = minimal_speed(problem, Mode::Periodic { rung: 0 }, e, &SpeedOptions::default())?.c_star;
            0.6 * length / c0
        }
    };

    // strip grid: the cell repeated `cells` times along the axis
    let mut periods = grid.lattice().periods().to_vec();
    periods[axis] = length;
    let mut shape = grid.shape().to_vec();
    shape[axis] *= opts.cells;
    let strip = Grid::new(Lattice::new(&periods)?, &shape)?;
    let ma = grid.extent(axis);
    let cols = shape[axis];
    let cell_of = |node: usize| {
        let mut idx = strip.multi_index(node);
        idx[axis] %= ma;
        grid.index(idx)
    };
    // column counted from the trailing end
    let column = |node: usize| {
        let c = strip.multi_index(node)[axis];
        if forward {
            c
        } else {
            cols - 1 - c
        }
    };
    let stencil = Stencil::new(&strip, problem.diffusion(), [0.0; 2], 0.0, DriftScheme::Conjugated);
    let n = strip.len();
    let mut rows = Vec::with_capacity(n);
    let mut inflow = vec![0.0; n];
    for i in 0..n {
        let idx = strip.multi_index(i);
        let mut row = Vec::new();
        for (j, d, v) in stencil.row(i) {
            let step = (d[axis] / strip.spacing(axis)).round() as i64;
            let raw = idx[axis] as i64 + step;
            if raw < 0 || raw >= cols as i64 {
                // clamped value: p_n on the trailing side, 0 ahead
                let trailing = (raw < 0) == forward;
                if trailing {
                    inflow[i] -= v * p[cell_of(j)];
                }
            } else {
                row.push((j, v));
            }
        }
        rows.push(row);
    }
    let k = Csr::from_rows(rows);
    let ladder = problem.ladder().clone();
    let cell_nodes: Vec<usize> = (0..n).map(cell_of).collect();
    let rho = cell_nodes.iter().map(|&c| ladder.rho(rung, c)).collect();
    let stepper = Stepper::build(
        n,
        (0..n).collect(),
        cell_nodes.clone(),
        k,
        rho,
        inflow,
        ladder,
        opts.cfl,
        strip.node_volume(),
    )?;

    let h = strip.spacing(axis);
    let start = length / 4.0;
    let u0: Vec<f64> = (0..n)
        .map(|i| if (column(i) as f64 + 0.5) * h < start { p[cell_nodes[i]] } else { 0.0 })
        .collect();
    let mut state = stepper.state(u0, false)?;

    let position = |u: &[f64]| -> f64 {
        let mut colmax = vec![0.0f64; cols];
        for (i, &v) in u.iter().enumerate() {
            let c = column(i);
            colmax[c] = colmax[c].max(v);
        }
        match (0..cols).rev().find(|&c| colmax[c] >= level) {
            None => 0.0,
            Some(c) if c + 1 == cols => length,
            Some(c) => {
                let (a, b) = (colmax[c], colmax[c + 1]);
                let frac = if a > b { (a - level) / (a - b) } else { 0.0 };
                (c as f64 + 0.5 + frac) * h
            }
        }
    };

    let mut positions = vec![(0.0, position(&state.u))];
    let mut midpoint_time = None;
    let mut exited = false;
    let exit_at = length - period;
    let steps = (final_time / stepper.dt()).ceil() as usize;
    for s in 1..=steps {
        stepper.step(&mut state)?;
        if s % opts.record_every.max(1) == 0 || s == steps {
            let x = position(&state.u);
            positions.push((state.t, x));
            if midpoint_time.is_none() && x >= 0.5 * length {
                midpoint_time = Some(state.t);
            }
            if x >= exit_at {
                exited = true;
                break;
            }
        }
    }
    let t_end = state.t;
    let tail: Vec<(f64, f64)> = positions.iter().copied().filter(|&(t, _)| t >= 0.5 * t_end).collect();
    let speed = least_squares_slope(&tail);

    let (lo, hi) = (cols / 4, 3 * cols / 4);
    let inside = problem.mask().inside();
    let hostile: Vec<f64> = (0..n)
        .filter(|&i| !inside[cell_nodes[i]] && (lo..hi).contains(&column(i)))
        .map(|i| state.u[i].abs())
        .collect();
    let hostile_amplitude = if hostile.is_empty() { 0.0 } else { hostile.iter().sum::<f64>() / hostile.len() as f64 };

    Ok(FrontResult {
        direction: dir,
        rung,
        cells: opts.cells,
        final_time: t_end,
        dt: stepper.dt(),
        level,
        positions,
        speed,
        hostile_amplitude,
        midpoint_time,
        exited,
        stalled: speed < STALL_SPEED,
    })
}

/// Principal eigenfunction scaled to `max = 1` on a Dirichlet component.
pub fn scaled_component_eigenfunction(problem: &CellProblem, id: usize) -> Result<Vec<f64>> {
    let mask = problem.mask();
    let report = analyze_components(mask)?;
    let sub = report.component_mask(mask, id)?;
    let op = assemble(
        problem.grid(),
        problem.diffusion(),
        &problem.zeta(Mode::Dirichlet),
        &[],
        0.0,
        BoundaryMode::Dirichlet(sub.inside().to_vec()),
    )?;
    let r = principal_eigenpair(&op, crate::eigen::DEFAULT_TOL)?;
    let top = r.eigenfunction.iter().copied().fold(0.0, f64::max);
    Ok(r.eigenfunction.iter().map(|v| v / top).collect())
}
