//! Sparse assembly of `−∇·(A∇) + 2λAe·∇ + λ∇·(Ae) − λ²Ae·e − ζ` on the cell
//! grid, periodic or with Dirichlet pinning outside a mask.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::DiffusionField;
use crate::geometry::unit_direction;
use crate::grid::Grid;
use crate::sparse::Csr;

/// Drift is considered under-resolved above this value of `λ·h·max|Ae|`.
pub const DRIFT_GUARD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryMode {
    Periodic,
    /// Nodes with `false` are pinned to zero.
    Dirichlet(Vec<bool>),
}

impl BoundaryMode {
    pub fn is_active(&self, node: usize) -> bool {
        match self {
            BoundaryMode::Periodic => true,
            BoundaryMode::Dirichlet(m) => m[node],
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryMode::Dirichlet(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftScheme {
    /// `e^{λx·e} M_h e^{−λx·e}` with `M_h` the flux-form matrix at λ = 0:
    /// off-diagonals are weighted by `exp(−λ e·(x_j − x_i))`. Keeps the
    /// M-matrix sign pattern for every λ.
    #[default]
    Conjugated,
    /// Second-order central differences for `2λAe·∇` and `∇·(Ae)`.
    Central,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: Csr,
    mode: BoundaryMode,
    lambda: f64,
    direction: [f64; 2],
    rung: Option<usize>,
    symmetric: bool,
    node_volume: f64,
    warnings: Vec<String>,
}

/// `λ·h_max·max|Ae|` over the grid.
pub fn drift_resolution(grid: &Grid, a: &DiffusionField, e: [f64; 2], lambda: f64) -> f64 {
    let h = grid.spacings().into_iter().fold(0.0, f64::max);
    let mut m: f64 = 0.0;
    for x in grid.positions() {
        let v = mat_vec(a.eval(x), e);
        m = m.max(v[0].hypot(v[1]));
    }
    lambda.abs() * h * m
}

fn mat_vec(a: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn assemble(
    grid: &Grid,
    a: &DiffusionField,
    zeta: &[f64],
    e: &[f64],
    lambda: f64,
    mode: BoundaryMode,
) -> Result<OperatorMatrix> {
    assemble_with(grid, a, zeta, e, lambda, mode, DriftScheme::default())
}

pub fn assemble_with(
    grid: &Grid,
    a: &DiffusionField,
    zeta: &[f64],
    e: &[f64],
    lambda: f64,
    mode: BoundaryMode,
    scheme: DriftScheme,
) -> Result<OperatorMatrix> {
    let n = grid.len();
    if zeta.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: zeta.len() });
    }
    if let BoundaryMode::Dirichlet(m) = &mode {
        if m.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: m.len() });
        }
    }
    if a.dim() != grid.dim() {
        return Err(Error::InvalidInput(format!(
            "diffusion field dimension {} does not match grid dimension {}",
            a.dim(),
            grid.dim()
        )));
    }
    let dim = grid.dim();
    let e = if lambda == 0.0 { [0.0; 2] } else { unit_direction(e, dim)? };
    a.ellipticity(grid)?;
    let stencil = Stencil::new(grid, a, e, lambda, scheme);

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        if !mode.is_active(i) {
            rows.push(vec![(i, 1.0)]);
            continue;
        }
        let mut row: Vec<(usize, f64)> = stencil
            .row(i)
            .into_iter()
            .filter(|&(c, _, _)| mode.is_active(c))
            .map(|(c, _, v)| (c, v))
            .collect();
        row.push((i, -zeta[i]));
        rows.push(row);
    }

    let mut warnings = Vec::new();
    let peclet = drift_resolution(grid, a, e, lambda);
    if peclet > DRIFT_GUARD {
        warnings.push(format!(
            "drift under-resolved: lambda*h*max|Ae| = {peclet:.3} exceeds {DRIFT_GUARD}"
        ));
    }
    Ok(OperatorMatrix {
        matrix: Csr::from_rows(rows),
        mode,
        lambda,
        direction: e,
        rung: None,
        symmetric: lambda == 0.0,
        node_volume: grid.node_volume(),
        warnings,
    })
}

/// Periodic stencil of the ζ-free operator; each entry carries the physical
/// displacement to its node.
pub(crate) struct Stencil<'a> {
    grid: &'a Grid,
    coeff: Vec<[[f64; 2]; 2]>,
    ae: Vec<[f64; 2]>,
    e: [f64; 2],
    lambda: f64,
    scheme: DriftScheme,
    has_cross: bool,
}

impl<'a> Stencil<'a> {
    pub(crate) fn new(grid: &'a Grid, a: &DiffusionField, e: [f64; 2], lambda: f64, scheme: DriftScheme) -> Self {
        let coeff: Vec<[[f64; 2]; 2]> = grid.positions().into_iter().map(|x| a.eval(x)).collect();
        let ae = coeff.iter().map(|&m| mat_vec(m, e)).collect();
        let has_cross = grid.dim() > 1 && coeff.iter().any(|m| m[0][1] != 0.0);
        Self { grid, coeff, ae, e, lambda, scheme, has_cross }
    }

    fn weight(&self, disp: [f64; 2]) -> f64 {
        match self.scheme {
            DriftScheme::Conjugated => (-self.lambda * (self.e[0] * disp[0] + self.e[1] * disp[1])).exp(),
            DriftScheme::Central => 1.0,
        }
    }

    pub(crate) fn row(&self, i: usize) -> Vec<(usize, [f64; 2], f64)> {
        let grid = self.grid;
        let dim = grid.dim();
        let coeff = &self.coeff;
        let h = [grid.spacing(0), if dim > 1 { grid.spacing(1) } else { 1.0 }];
        let mut row = Vec::with_capacity(10);
        let mut diag = 0.0;
        for (axis, nb) in grid.axis_neighbors(i) {
            let af = 0.5 * (coeff[i][axis][axis] + coeff[nb.node][axis][axis]);
            let c = af / (h[axis] * h[axis]);
            diag += c;
            row.push((nb.node, nb.displacement, -c * self.weight(nb.displacement)));
        }
        if self.has_cross {
            for sx in [1i64, -1] {
                for sy in [1i64, -1] {
                    let nb = grid.neighbor(i, [sx, sy]);
                    let ax = grid.neighbor(i, [sx, 0]).node;
                    let ay = grid.neighbor(i, [0, sy]).node;
                    let c = (sx * sy) as f64 * (coeff[ax][0][1] + coeff[ay][0][1]) / (4.0 * h[0] * h[1]);
                    row.push((nb.node, nb.displacement, -c * self.weight(nb.displacement)));
                }
            }
        }
        if self.scheme == DriftScheme::Central && self.lambda != 0.0 {
            let (lambda, ae, e) = (self.lambda, &self.ae, self.e);
            let mut div = 0.0;
            for axis in 0..dim {
                let mut step = [0i64; 2];
                step[axis] = 1;
                let p = grid.neighbor(i, step);
                step[axis] = -1;
                let m = grid.neighbor(i, step);
                let d = lambda * ae[i][axis] / h[axis];
                row.push((p.node, p.displacement, d));
                row.push((m.node, m.displacement, -d));
                div += (ae[p.node][axis] - ae[m.node][axis]) / (2.0 * h[axis]);
            }
            diag += lambda * div - lambda * lambda * (ae[i][0] * e[0] + ae[i][1] * e[1]);
        }
        row.push((i, [0.0; 2], diag));
        row
    }
}

impl OperatorMatrix {
    pub fn with_rung(mut self, rung: Option<usize>) -> Self {
        self.rung = rung;
        self
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.n()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.n() == 0
    }

    pub fn mode(&self) -> &BoundaryMode {
        &self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    pub fn rung(&self) -> Option<usize> {
        self.rung
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn node_volume(&self) -> f64 {
        self.node_volume
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Unpinned node indices in increasing order.
    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mode.is_active(i)).collect()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: v.len() });
        }
        Ok(self.matrix.matvec(v))
    }

    pub fn gershgorin_lower_bound(&self) -> f64 {
        gershgorin(&self.matrix)
    }

    /// `row col value` lines, zero-based.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!(
            "# n = {} nnz = {} lambda = {} direction = {:?}\n",
            self.len(),
            self.matrix.nnz(),
            self.lambda,
            self.direction
        );
        for i in 0..self.len() {
            for (j, v) in self.matrix.row(i) {
                let _ = writeln!(s, "{i} {j} {v:.17e}");
            }
        }
        s
    }
}

pub(crate) fn gershgorin(m: &Csr) -> f64 {
    (0..m.n())
        .map(|i| {
            let mut d = 0.0;
            let mut off = 0.0;
            for (j, v) in m.row(i) {
                if j == i {
                    d += v;
                } else {
                    off += v.abs();
                }
            }
            d - off
        })
        .fold(f64::INFINITY, f64::min)
}
