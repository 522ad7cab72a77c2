//! Diffusion coefficients, reaction terms and the penalization ladder.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{DomainMask, Primitive};
use crate::grid::{Grid, Lattice};

pub type Matrix2 = [[f64; 2]; 2];

type MatrixFn = Arc<dyn Fn([f64; 2]) -> Matrix2 + Send + Sync>;

#[derive(Clone)]
enum DiffusionKind {
    Constant(Matrix2),
    /// `base * (1 + amplitude cos(2πx/L_1) cos(2πy/L_2))`
    Oscillating { base: Matrix2, amplitude: f64, periods: [f64; 2] },
    Custom(MatrixFn),
}

/// Lattice-periodic, symmetric, uniformly elliptic diffusion matrix `A(x)`.
#[derive(Clone)]
pub struct DiffusionField {
    dim: usize,
    kind: DiffusionKind,
}

impl std::fmt::Debug for DiffusionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.kind {
            DiffusionKind::Constant(m) => format!("Constant({m:?})"),
            DiffusionKind::Oscillating { base, amplitude, .. } => {
                format!("Oscillating {{ base: {base:?}, amplitude: {amplitude} }}")
            }
            DiffusionKind::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("DiffusionField").field("dim", &self.dim).field("kind", &kind).finish()
    }
}

fn restrict(m: Matrix2, dim: usize) -> Matrix2 {
    if dim == 1 {
        [[m[0][0], 0.0], [0.0, 0.0]]
    } else {
        m
    }
}

impl DiffusionField {
    pub fn identity(dim: usize) -> Self {
        Self::constant([[1.0, 0.0], [0.0, 1.0]], dim)
    }

    pub fn constant(m: Matrix2, dim: usize) -> Self {
        Self { dim, kind: DiffusionKind::Constant(restrict(m, dim)) }
    }

    pub fn oscillating(base: Matrix2, amplitude: f64, lattice: &Lattice) -> Result<Self> {
        if amplitude.abs() >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "oscillation amplitude must be below 1 in magnitude, got {amplitude}"
            )));
        }
        let dim = lattice.dim();
        let periods = [lattice.period(0), if dim > 1 { lattice.period(1) } else { 1.0 }];
        Ok(Self { dim, kind: DiffusionKind::Oscillating { base: restrict(base, dim), amplitude, periods } })
    }

    /// A user-supplied evaluator; it must be periodic on the lattice.
    pub fn custom(dim: usize, f: impl Fn([f64; 2]) -> Matrix2 + Send + Sync + 'static) -> Self {
        Self { dim, kind: DiffusionKind::Custom(Arc::new(f)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, DiffusionKind::Constant(_))
    }

    pub fn constant_matrix(&self) -> Option<Matrix2> {
        match self.kind {
            DiffusionKind::Constant(m) => Some(m),
            _ => None,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> Matrix2 {
        match &self.kind {
            DiffusionKind::Constant(m) => *m,
            DiffusionKind::Oscillating { base, amplitude, periods } => {
                let mut s = amplitude * (2.0 * PI * x[0] / periods[0]).cos();
                if self.dim > 1 {
                    s *= (2.0 * PI * x[1] / periods[1]).cos();
                }
                let f = 1.0 + s;
                [[base[0][0] * f, base[0][1] * f], [base[1][0] * f, base[1][1] * f]]
            }
            DiffusionKind::Custom(f) => restrict(f(x), self.dim),
        }
    }

    /// Ellipticity constant sampled on the grid nodes along coordinate and
    /// diagonal directions. Errors name the first non-SPD node.
    pub fn ellipticity(&self, grid: &Grid) -> Result<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dirs: &[[f64; 2]] = if self.dim == 1 {
            &[[1.0, 0.0]]
        } else {
            &[[1.0, 0.0], [0.0, 1.0], [s, s], [s, -s]]
        };
        let mut beta = f64::INFINITY;
        for node in 0..grid.len() {
            let a = self.eval(grid.position(node));
            if !spd(a, self.dim) {
                return Err(Error::NotSpd { node });
            }
            for d in dirs {
                let q = d[0] * (a[0][0] * d[0] + a[0][1] * d[1]) + d[1] * (a[1][0] * d[0] + a[1][1] * d[1]);
                beta = beta.min(q);
            }
        }
        Ok(beta)
    }
}

pub(crate) fn spd(a: Matrix2, dim: usize) -> bool {
    if !a.iter().flatten().all(|v| v.is_finite()) {
        return false;
    }
    if dim == 1 {
        return a[0][0] > 0.0;
    }
    let sym = (a[0][1] - a[1][0]).abs() <= 1e-12 * (a[0][0].abs() + a[1][1].abs());
    sym && a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0
}

/// Monostable reaction nonlinearities `u ↦ F(u)` selectable by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReactionKind {
    /// `rate·u(1-u)`
    Logistic { rate: f64 },
    /// `λu - u³`
    KppCubic { lambda: f64 },
    /// `λu + u²` on `[0, s0]`, then decreasing linearly to zero at `saturation`.
    Remark31 { lambda: f64, s0: f64, saturation: f64 },
    /// Piecewise-linear table through `(u[i], f[i])` with `u[0] = 0`, `f[0] = 0`.
    Tabulated { u: Vec<f64>, f: Vec<f64> },
}

impl ReactionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReactionKind::Logistic { .. } => "logistic",
            ReactionKind::KppCubic { .. } => "kpp-cubic",
            ReactionKind::Remark31 { .. } => "remark31",
            ReactionKind::Tabulated { .. } => "tabulated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self {
            ReactionKind::Logistic { rate } if !(*rate > 0.0) => bad(format!("logistic rate must be positive, got {rate}")),
            ReactionKind::KppCubic { lambda } if !(*lambda > 0.0) => {
                bad(format!("kpp-cubic lambda must be positive, got {lambda}"))
            }
            ReactionKind::Remark31 { lambda, s0, saturation } => {
                if !(*s0 > 0.0 && s0 < saturation) {
                    bad(format!("remark31 needs 0 < s0 < saturation, got s0 = {s0}, saturation = {saturation}"))
                } else if !lambda.is_finite() {
                    bad("remark31 lambda must be finite".into())
                } else {
                    Ok(())
                }
            }
            ReactionKind::Tabulated { u, f } => {
                if u.len() < 2 || u.len() != f.len() {
                    return bad("tabulated reaction needs matching u/f tables with at least two knots".into());
                }
                if u[0] != 0.0 || f[0] != 0.0 {
                    return bad("tabulated reaction must start at (0, 0)".into());
                }
                if u.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated knots must be strictly increasing".into());
                }
                if f[f.len() - 1] > 0.0 {
                    return bad("tabulated reaction must be nonpositive at its last knot".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            ReactionKind::Logistic { rate } => rate * u * (1.0 - u),
            ReactionKind::KppCubic { lambda } => lambda * u - u * u * u,
            ReactionKind::Remark31 { lambda, s0, saturation } => {
                if u <= *s0 {
                    lambda * u + u * u
                } else {
                    (lambda * s0 + s0 * s0) * (saturation - u) / (saturation - s0)
                }
            }
            ReactionKind::Tabulated { u: knots, f } => {
                let last = knots.len() - 1;
                if u >= knots[last] {
                    return f[last];
                }
                if u <= 0.0 {
                    return (f[1] - f[0]) / (knots[1] - knots[0]) * u;
                }
                let i = knots.partition_point(|&k| k <= u) - 1;
                let t = (u - knots[i]) / (knots[i + 1] - knots[i]);
                f[i] + t * (f[i + 1] - f[i])
            }
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            ReactionKind::Logistic { rate } => rate * (1.0 - 2.0 * u),
            ReactionKind::KppCubic { lambda } => lambda - 3.0 * u * u,
            ReactionKind::Remark31 { lambda, s0, saturation } => {
                if u <= *s0 {
                    lambda + 2.0 * u
                } else {
                    -(lambda * s0 + s0 * s0) / (saturation - s0)
                }
            }
            ReactionKind::Tabulated { u: knots, f } => {
                let last = knots.len() - 1;
                if u >= knots[last] {
                    return 0.0;
                }
                let i = knots.partition_point(|&k| k <= u).saturating_sub(1).min(last - 1);
                (f[i + 1] - f[i]) / (knots[i + 1] - knots[i])
            }
        }
    }

    /// `∂F/∂u (0)`.
    pub fn zeta(&self) -> f64 {
        self.derivative(0.0)
    }

    /// Level `M` with `F(M) ≤ 0`.
    pub fn saturation(&self) -> f64 {
        match self {
            ReactionKind::Logistic { .. } => 1.0,
            ReactionKind::KppCubic { lambda } => lambda.sqrt(),
            ReactionKind::Remark31 { saturation, .. } => *saturation,
            ReactionKind::Tabulated { u, .. } => u[u.len() - 1],
        }
    }

    /// Sampled Lipschitz constant of `F` on `[0, m]`.
    pub fn lipschitz(&self, m: f64) -> f64 {
        const SAMPLES: usize = 2000;
        let mut lip: f64 = 0.0;
        for i in 0..=SAMPLES {
            let u = m * i as f64 / SAMPLES as f64;
            lip = lip.max(self.derivative(u).abs());
        }
        lip
    }
}

/// `F(x, u)` on Ω̄ as a default kind plus zone overrides; the first zone whose
/// primitive contains `x` selects its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionModel {
    kinds: Vec<ReactionKind>,
    zones: Vec<(Primitive, usize)>,
}

impl ReactionModel {
    pub fn uniform(kind: ReactionKind) -> Self {
        Self { kinds: vec![kind], zones: Vec::new() }
    }

    pub fn with_zone(mut self, region: Primitive, kind: ReactionKind) -> Self {
        self.kinds.push(kind);
        self.zones.push((region, self.kinds.len() - 1));
        self
    }

    pub fn kinds(&self) -> &[ReactionKind] {
        &self.kinds
    }

    pub fn kind_index_at(&self, x: [f64; 2], lattice: &Lattice) -> usize {
        self.zones
            .iter()
            .find(|(p, _)| p.contains(x, lattice))
            .map_or(0, |&(_, k)| k)
    }

    pub fn saturation(&self) -> f64 {
        self.kinds.iter().map(ReactionKind::saturation).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for k in &self.kinds {
            k.validate()?;
        }
        for (p, _) in &self.zones {
            p.validate()?;
        }
        let m = self.saturation();
        for k in &self.kinds {
            if k.value(0.0) != 0.0 {
                return Err(Error::InvalidInput(format!("{} reaction does not vanish at 0", k.name())));
            }
            if k.value(m) > 0.0 {
                return Err(Error::InvalidInput(format!("{} reaction is positive at M = {m}", k.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KppWitness {
    pub x: [f64; 2],
    pub u: f64,
    pub u_next: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KppCheck {
    pub holds: bool,
    pub witness: Option<KppWitness>,
}

/// Sampled KPP test: `F(x,u)/u` must not increase across consecutive
/// samples (1e-12 slack) at any sampled `x`.
pub fn check_kpp(model: &ReactionModel, lattice: &Lattice, positions: &[[f64; 2]], samples: &[f64]) -> KppCheck {
    let mut checked = vec![false; model.kinds.len()];
    for &x in positions {
        let k = model.kind_index_at(x, lattice);
        if checked[k] {
            continue;
        }
        checked[k] = true;
        let kind = &model.kinds[k];
        for w in samples.windows(2) {
            let (u, v) = (w[0], w[1]);
            if !(u > 0.0) {
                continue;
            }
            if kind.value(v) / v > kind.value(u) / u + 1e-12 {
                return KppCheck { holds: false, witness: Some(KppWitness { x, u, u_next: v }) };
            }
        }
    }
    KppCheck { holds: true, witness: None }
}

/// Uniform sample grid of `(0, m]`.
pub fn kpp_samples(m: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| m * i as f64 / count as f64).collect()
}

const EPS0_SCAN: usize = 2048;

fn epsilon_admissible(
    f: &impl Fn(usize, f64) -> f64,
    zeta: &[f64],
    nodes: &[usize],
    lambda1: f64,
    s: f64,
) -> bool {
    nodes.iter().all(|&x| {
        let g = f(x, s) - zeta[x] * s - 0.5 * lambda1 * s;
        g >= -1e-13 * s.max(1e-300) * (1.0 + zeta[x].abs() + lambda1.abs())
    })
}

/// Largest `ε₀ ∈ (0, M]` with `f(x,s) ≥ ζ(x)s + (λ₁/2)s` for every sampled node
/// `x` and every `s ∈ (0, ε₀]`: a scan of `(0, M]` followed by bisection at
/// the first failing sample.
pub fn choose_epsilon0(
    f: impl Fn(usize, f64) -> f64,
    zeta: &[f64],
    nodes: &[usize],
    saturation: f64,
    lambda1: f64,
) -> Result<f64> {
    if !(lambda1 < 0.0) {
        return Err(Error::Epsilon0(format!("principal eigenvalue {lambda1:.4e} is not negative")));
    }
    if !(saturation > 0.0) {
        return Err(Error::Epsilon0(format!("saturation level {saturation} is not positive")));
    }
    let floor = saturation * 1e-9;
    if !epsilon_admissible(&f, zeta, nodes, lambda1, floor) {
        return Err(Error::Epsilon0(format!(
            "subsolution inequality fails already at s = {floor:.1e}"
        )));
    }
    let mut lo = floor;
    let mut hi = None;
    for j in 1..=EPS0_SCAN {
        let s = saturation * j as f64 / EPS0_SCAN as f64;
        if epsilon_admissible(&f, zeta, nodes, lambda1, s) {
            lo = s;
        } else {
            hi = Some(s);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(saturation);
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if epsilon_admissible(&f, zeta, nodes, lambda1, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSchedule {
    pub gamma: f64,
    pub n_max: usize,
}

/// `f_n(x,u) = F(x,u)` on inside nodes and `-γ n u + F̃(x,u)` on hostile nodes.
#[derive(Debug, Clone)]
pub struct ReactionLadder {
    model: ReactionModel,
    node_kind: Vec<usize>,
    inside: Vec<bool>,
    schedule: LadderSchedule,
    saturation: f64,
}

pub fn build_ladder(model: &ReactionModel, mask: &DomainMask, schedule: LadderSchedule) -> Result<ReactionLadder> {
    model.validate()?;
    if !(schedule.gamma >= 0.0) || !schedule.gamma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "penalization rate must be nonnegative, got {}",
            schedule.gamma
        )));
    }
    let grid = mask.grid();
    let node_kind = (0..grid.len())
        .map(|n| model.kind_index_at(grid.position(n), grid.lattice()))
        .collect();
    Ok(ReactionLadder {
        model: model.clone(),
        node_kind,
        inside: mask.inside().to_vec(),
        schedule,
        saturation: model.saturation(),
    })
}

impl ReactionLadder {
    pub fn model(&self) -> &ReactionModel {
        &self.model
    }

    pub fn schedule(&self) -> LadderSchedule {
        self.schedule
    }

    pub fn n_max(&self) -> usize {
        self.schedule.n_max
    }

    pub fn len(&self) -> usize {
        self.node_kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_kind.is_empty()
    }

    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn kind(&self, node: usize) -> &ReactionKind {
        &self.model.kinds[self.node_kind[node]]
    }

    /// Penalization `ρ_n(x)`: `-γn` off Ω̄, 0 on it.
    pub fn rho(&self, n: usize, node: usize) -> f64 {
        if self.inside[node] {
            0.0
        } else {
            -self.schedule.gamma * n as f64
        }
    }

    /// Unpenalized part `F̃(x,u)`.
    pub fn base_value(&self, node: usize, u: f64) -> f64 {
        self.kind(node).value(u)
    }

    pub fn value(&self, n: usize, node: usize, u: f64) -> f64 {
        self.rho(n, node) * u + self.base_value(node, u)
    }

    pub fn derivative(&self, n: usize, node: usize, u: f64) -> f64 {
        self.rho(n, node) + self.kind(node).derivative(u)
    }

    /// `ζ_n` at every node.
    pub fn zeta(&self, n: usize) -> Vec<f64> {
        (0..self.len()).map(|x| self.kind(x).zeta() + self.rho(n, x)).collect()
    }

    /// `ζ = ∂F/∂u(x,0)`, the linearization on Ω̄ (no penalization).
    pub fn zeta_domain(&self) -> Vec<f64> {
        self.zeta(0)
    }

    /// Sampled Lipschitz constant of the unpenalized reaction on `[0, M]`.
    pub fn base_lipschitz(&self) -> f64 {
        self.model.kinds.iter().map(|k| k.lipschitz(self.saturation)).fold(0.0, f64::max)
    }

    /// `ε₀` for rung `n` (`None`: the unpenalized Dirichlet problem) over the
    /// given support nodes.
    pub fn epsilon0(&self, n: Option<usize>, lambda1: f64, support: &[usize]) -> Result<f64> {
        let rung = n.unwrap_or(0);
        // nodes sharing kind and inside flag give identical constraints
        let mut reps: BTreeMap<(usize, bool), usize> = BTreeMap::new();
        for &x in support {
            reps.entry((self.node_kind[x], self.inside[x])).or_insert(x);
        }
        let nodes: Vec<usize> = reps.into_values().collect();
        let zeta = self.zeta(rung);
        choose_epsilon0(|x, s| self.value(rung, x, s), &zeta, &nodes, self.saturation, lambda1)
    }
}
