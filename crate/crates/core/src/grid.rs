//! Periodicity lattice and the node grid on the cell `[0,L_1] x ... x [0,L_N]`.
//!
//! Nodes sit at cell centers `(i + 1/2) h`, indexed with the first axis
//! running fastest. Points are carried as `[f64; 2]`; in 1D the second
//! coordinate is always zero.

use crate::error::{Error, Result};

/// Minimum number of nodes per period in each direction.
pub const MIN_NODES_PER_PERIOD: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    periods: Vec<f64>,
}

impl Lattice {
    pub fn new(periods: &[f64]) -> Result<Self> {
        if periods.is_empty() || periods.len() > 2 {
            return Err(Error::InvalidInput(format!(
                "lattice dimension must be 1 or 2, got {}",
                periods.len()
            )));
        }
        if periods.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lattice periods must be positive, got {periods:?}"
            )));
        }
        Ok(Self { periods: periods.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.periods.get(axis).copied().unwrap_or(0.0)
    }

    /// Physical translation for integer lattice coordinates.
    pub fn vector(&self, k: [i64; 2]) -> [f64; 2] {
        [k[0] as f64 * self.period(0), k[1] as f64 * self.period(1)]
    }

    pub fn cell_volume(&self) -> f64 {
        self.periods.iter().product()
    }
}

/// One step to a grid neighbour, with the lattice offset picked up when the
/// step wraps across the cell boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub node: usize,
    pub wrap: [i64; 2],
    /// Physical displacement from the node to this neighbour.
    pub displacement: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lattice: Lattice,
    shape: Vec<usize>,
}

impl Grid {
    pub fn new(lattice: Lattice, shape: &[usize]) -> Result<Self> {
        if shape.len() != lattice.dim() {
            return Err(Error::InvalidInput(format!(
                "grid shape {shape:?} does not match lattice dimension {}",
                lattice.dim()
            )));
        }
        if let Some(&m) = shape.iter().find(|&&m| m < MIN_NODES_PER_PERIOD) {
            return Err(Error::InvalidInput(format!(
                "resolution {m} is below {MIN_NODES_PER_PERIOD} nodes per period"
            )));
        }
        Ok(Self { lattice, shape: shape.to_vec() })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Extent along `axis`; 1 for the missing axis in 1D.
    pub fn extent(&self, axis: usize) -> usize {
        self.shape.get(axis).copied().unwrap_or(1)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lattice.period(axis) / self.extent(axis) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    /// Quadrature weight of one node (trapezoidal rule on the periodic cell).
    pub fn node_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn index(&self, i: [usize; 2]) -> usize {
        i[0] + self.extent(0) * i[1]
    }

    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        let m0 = self.extent(0);
        [node % m0, node / m0]
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(node);
        let x = (i as f64 + 0.5) * self.spacing(0);
        let y = if self.dim() > 1 { (j as f64 + 0.5) * self.spacing(1) } else { 0.0 };
        [x, y]
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|n| self.position(n)).collect()
    }

    /// Neighbour of `node` shifted by `step` (each entry in {-1,0,1}) with
    /// periodic wrap.
    pub fn neighbor(&self, node: usize, step: [i64; 2]) -> Neighbor {
        let idx = self.multi_index(node);
        let mut out = [0usize; 2];
        let mut wrap = [0i64; 2];
        let mut displacement = [0.0; 2];
        for a in 0..2 {
            let m = self.extent(a) as i64;
            if a >= self.dim() || step[a] == 0 {
                out[a] = idx[a];
                continue;
            }
            let raw = idx[a] as i64 + step[a];
            out[a] = raw.rem_euclid(m) as usize;
            wrap[a] = raw.div_euclid(m);
            displacement[a] = step[a] as f64 * self.spacing(a);
        }
        Neighbor { node: self.index(out), wrap, displacement }
    }

    /// The 2N axis neighbours: (+x, -x, +y, -y).
    pub fn axis_neighbors(&self, node: usize) -> Vec<(usize, Neighbor)> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            for s in [1i64, -1] {
                let mut step = [0i64; 2];
                step[axis] = s;
                out.push((axis, self.neighbor(node, step)));
            }
        }
        out
    }
}
