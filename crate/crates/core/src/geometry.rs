//! The periodic open set Ω, its rasterization onto the cell grid, and the
//! connected-component analysis that decides direction-boundedness.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::DiffusionField;
use crate::grid::{Grid, Lattice, MIN_NODES_PER_PERIOD};

const IMAGE_RANGE: i64 = 3;
const UNIT_TOL: f64 = 1e-9;

/// A shape descriptor; every primitive stands for the union of its lattice
/// translates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Primitive {
    /// `a < x·normal < b`.
    Slab { normal: [f64; 2], a: f64, b: f64 },
    /// Points at distance `< half_width` from the line `center + R·axis`.
    Stripe { axis: [f64; 2], center: [f64; 2], half_width: f64 },
    Disk { center: [f64; 2], radius: f64 },
    /// Open box `corner < x < corner + extents`.
    Rect { corner: [f64; 2], extents: [f64; 2] },
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn perp(a: [f64; 2]) -> [f64; 2] {
    [-a[1], a[0]]
}

/// Pads a 1- or 2-component direction to `[f64; 2]` and checks `|e| = 1`.
pub fn unit_direction(e: &[f64], dim: usize) -> Result<[f64; 2]> {
    if e.len() != dim {
        return Err(Error::InvalidInput(format!(
            "direction {e:?} has {} components, lattice dimension is {dim}",
            e.len()
        )));
    }
    let mut out = [0.0; 2];
    out[..dim].copy_from_slice(e);
    if (norm(out) - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitVector(e.to_vec()));
    }
    Ok(out)
}

impl Primitive {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            Primitive::Slab { normal, a, b } => {
                if (norm(*normal) - 1.0).abs() > UNIT_TOL {
                    return Err(Error::NotUnitVector(normal.to_vec()));
                }
                if !(a < b) {
                    return bad(format!("slab requires a < b, got a = {a}, b = {b}"));
                }
            }
            Primitive::Stripe { axis, half_width, .. } => {
                if (norm(*axis) - 1.0).abs() > UNIT_TOL {
                    return Err(Error::NotUnitVector(axis.to_vec()));
                }
                if !(*half_width > 0.0) {
                    return bad(format!("stripe half-width must be positive, got {half_width}"));
                }
            }
            Primitive::Disk { radius, .. } => {
                if !(*radius > 0.0) {
                    return bad(format!("disk radius must be positive, got {radius}"));
                }
            }
            Primitive::Rect { extents, .. } => {
                if extents.iter().any(|&w| !(w > 0.0)) {
                    return bad(format!("rectangle extents must be positive, got {extents:?}"));
                }
            }
        }
        Ok(())
    }

    fn contains_single(&self, x: [f64; 2], dim: usize) -> bool {
        match self {
            Primitive::Slab { normal, a, b } => {
                let s = dot(x, *normal);
                *a < s && s < *b
            }
            Primitive::Stripe { axis, center, half_width } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                dot(d, perp(*axis)).abs() < *half_width
            }
            Primitive::Disk { center, radius } => {
                let d = [x[0] - center[0], if dim > 1 { x[1] - center[1] } else { 0.0 }];
                norm(d) < *radius
            }
            Primitive::Rect { corner, extents } => (0..dim)
                .all(|a| corner[a] < x[a] && x[a] < corner[a] + extents[a]),
        }
    }

    /// The lattice image `x - k` of `x` that lies in the base primitive, if any.
    pub fn local_point(&self, x: [f64; 2], lattice: &Lattice) -> Option<[f64; 2]> {
        let dim = lattice.dim();
        let ky = if dim > 1 { IMAGE_RANGE } else { 0 };
        for k0 in -IMAGE_RANGE..=IMAGE_RANGE {
            for k1 in -ky..=ky {
                let t = lattice.vector([k0, k1]);
                let y = [x[0] - t[0], x[1] - t[1]];
                if self.contains_single(y, dim) {
                    return Some(y);
                }
            }
        }
        None
    }

    pub fn contains(&self, x: [f64; 2], lattice: &Lattice) -> bool {
        self.local_point(x, lattice).is_some()
    }

    /// Smallest feature width of the primitive, in length units.
    fn feature_width(&self, dim: usize) -> f64 {
        match self {
            Primitive::Slab { a, b, .. } => b - a,
            Primitive::Stripe { half_width, .. } => 2.0 * half_width,
            Primitive::Disk { radius, .. } => 2.0 * radius,
            Primitive::Rect { extents, .. } => {
                extents[..dim].iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(default)]
    pub whole_space: bool,
    #[serde(default, rename = "primitive")]
    pub primitives: Vec<Primitive>,
}

impl DomainSpec {
    pub fn whole_space() -> Self {
        Self { whole_space: true, primitives: Vec::new() }
    }

    pub fn union(primitives: Vec<Primitive>) -> Self {
        Self { whole_space: false, primitives }
    }

    pub fn contains(&self, x: [f64; 2], lattice: &Lattice) -> bool {
        self.whole_space || self.primitives.iter().any(|p| p.contains(x, lattice))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: Grid,
    inside: Vec<bool>,
    boundary_adjacent: Vec<bool>,
    warnings: Vec<String>,
}

impl DomainMask {
    /// Builds a mask directly from node flags.
    pub fn from_flags(grid: Grid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: inside.len() });
        }
        if !inside.iter().any(|&b| b) {
            return Err(Error::EmptyDomain);
        }
        let boundary_adjacent = (0..grid.len())
            .map(|n| {
                grid.axis_neighbors(n)
                    .iter()
                    .any(|(_, nb)| inside[nb.node] != inside[n])
            })
            .collect();
        Ok(Self { grid, inside, boundary_adjacent, warnings: Vec::new() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn is_inside(&self, node: usize) -> bool {
        self.inside[node]
    }

    pub fn boundary_adjacent(&self) -> &[bool] {
        &self.boundary_adjacent
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_whole_space(&self) -> bool {
        self.inside.iter().all(|&b| b)
    }

    /// ASCII PGM (P2): 255 inside Ω, 0 in the hostile region; first grid row
    /// (smallest y) printed last so the image reads with y upwards.
    pub fn to_pgm(&self) -> String {
        let w = self.grid.extent(0);
        let h = self.grid.extent(1);
        let mut out = format!("P2\n{w} {h}\n255\n");
        for j in (0..h).rev() {
            let row: Vec<&str> = (0..w)
                .map(|i| if self.inside[self.grid.index([i, j])] { "255" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Node-centred rasterization: a node is inside iff its centre lies in Ω.
pub fn rasterize(spec: &DomainSpec, lattice: &Lattice, resolution: &[usize]) -> Result<DomainMask> {
    for p in &spec.primitives {
        p.validate()?;
    }
    let grid = Grid::new(lattice.clone(), resolution)?;
    let inside: Vec<bool> = (0..grid.len())
        .map(|n| spec.contains(grid.position(n), lattice))
        .collect();
    let mut mask = DomainMask::from_flags(grid, inside)?;
    let h_max = mask.grid.spacings().into_iter().fold(0.0, f64::max);
    for (i, p) in spec.primitives.iter().enumerate() {
        let width = p.feature_width(lattice.dim());
        if width < MIN_NODES_PER_PERIOD as f64 * h_max {
            mask.warnings.push(format!(
                "primitive {i} spans {:.1} nodes (< {MIN_NODES_PER_PERIOD}); boundary is under-resolved",
                width / h_max
            ));
        }
    }
    Ok(mask)
}

/// Union-find whose links carry the lattice offset between a node's copy and
/// its parent's copy.
struct OffsetUnionFind {
    parent: Vec<usize>,
    offset: Vec<[i64; 2]>,
    rank: Vec<u8>,
}

impl OffsetUnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), offset: vec![[0; 2]; n], rank: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> (usize, [i64; 2]) {
        let p = self.parent[x];
        if p == x {
            return (x, [0, 0]);
        }
        let (root, off_p) = self.find(p);
        let o = self.offset[x];
        let total = [o[0] + off_p[0], o[1] + off_p[1]];
        self.parent[x] = root;
        self.offset[x] = total;
        (root, total)
    }

    /// Joins `a` with the copy of `b` shifted by `d`. Returns the cycle
    /// offset when both were already connected.
    fn union(&mut self, a: usize, b: usize, d: [i64; 2]) -> Option<[i64; 2]> {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        let rel = [oa[0] + d[0] - ob[0], oa[1] + d[1] - ob[1]];
        if ra == rb {
            return Some(rel);
        }
        // rb's copy sits at `rel` relative to ra's copy.
        if self.rank[ra] >= self.rank[rb] {
            self.parent[rb] = ra;
            self.offset[rb] = rel;
            if self.rank[ra] == self.rank[rb] {
                self.rank[ra] += 1;
            }
        } else {
            self.parent[ra] = rb;
            self.offset[ra] = [-rel[0], -rel[1]];
        }
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Basis (Hermite form) of the subgroup of Z² generated by `vectors`.
pub fn lattice_basis(vectors: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut rows: Vec<[i64; 2]> = vectors.iter().copied().filter(|v| *v != [0, 0]).collect();
    let mut basis = Vec::new();
    for col in 0..2 {
        // Euclid on column `col` until a single row carries a nonzero entry.
        loop {
            let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            nz.sort_by_key(|&i| rows[i][col].abs());
            let pivot = rows[nz[0]];
            for &i in &nz[1..] {
                let q = rows[i][col] / pivot[col];
                rows[i] = [rows[i][0] - q * pivot[0], rows[i][1] - q * pivot[1]];
            }
        }
        if let Some(i) = rows.iter().position(|r| r[col] != 0) {
            let mut r = rows.remove(i);
            if r[col] < 0 {
                r = [-r[0], -r[1]];
            }
            basis.push(r);
        }
        rows.retain(|r| *r != [0, 0]);
    }
    if basis.len() == 2 && basis[1][1] != 0 {
        // reduce the off-diagonal entry of the first row
        let q = basis[0][1].div_euclid(basis[1][1]);
        basis[0] = [basis[0][0] - q * basis[1][0], basis[0][1] - q * basis[1][1]];
    }
    debug_assert!(basis.iter().all(|b| gcd(b[0], b[1]) > 0));
    basis
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: usize,
    pub nodes: Vec<usize>,
    /// Generators of the winding subgroup, in integer lattice coordinates.
    pub winding: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    lattice: Lattice,
    pub components: Vec<Component>,
    /// Component id per node (`None` in the hostile region).
    pub node_component: Vec<Option<usize>>,
}

impl ComponentReport {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Physical winding generators `(k_1 L_1, k_2 L_2)` of component `id`.
    pub fn physical_winding(&self, id: usize) -> Vec<[f64; 2]> {
        self.components[id].winding.iter().map(|&k| self.lattice.vector(k)).collect()
    }

    /// Mask holding only the nodes of component `id`.
    pub fn component_mask(&self, mask: &DomainMask, id: usize) -> Result<DomainMask> {
        let mut flags = vec![false; mask.grid().len()];
        for &n in &self.components[id].nodes {
            flags[n] = true;
        }
        DomainMask::from_flags(mask.grid().clone(), flags)
    }
}

/// Connected components of the inside nodes (2N-neighbour adjacency across
/// periodic wraps) and their winding subgroups.
pub fn analyze_components(mask: &DomainMask) -> Result<ComponentReport> {
    let grid = mask.grid();
    let n = grid.len();
    if mask.inside_count() == 0 {
        return Err(Error::EmptyDomain);
    }
    let mut uf = OffsetUnionFind::new(n);
    let mut cycles: Vec<(usize, [i64; 2])> = Vec::new();
    for node in 0..n {
        if !mask.inside[node] {
            continue;
        }
        for axis in 0..grid.dim() {
            let mut step = [0i64; 2];
            step[axis] = 1;
            let nb = grid.neighbor(node, step);
            if !mask.inside[nb.node] {
                continue;
            }
            if let Some(c) = uf.union(node, nb.node, nb.wrap) {
                if c != [0, 0] {
                    cycles.push((node, c));
                }
            }
        }
    }
    let mut root_to_id = std::collections::HashMap::new();
    let mut components: Vec<Component> = Vec::new();
    let mut node_component = vec![None; n];
    for node in 0..n {
        if !mask.inside[node] {
            continue;
        }
        let (root, _) = uf.find(node);
        let id = *root_to_id.entry(root).or_insert_with(|| {
            components.push(Component { id: components.len(), nodes: Vec::new(), winding: Vec::new() });
            components.len() - 1
        });
        components[id].nodes.push(node);
        node_component[node] = Some(id);
    }
    let mut raw: Vec<Vec<[i64; 2]>> = vec![Vec::new(); components.len()];
    for (node, c) in cycles {
        let (root, _) = uf.find(node);
        raw[root_to_id[&root]].push(c);
    }
    for (comp, r) in components.iter_mut().zip(raw) {
        comp.winding = lattice_basis(&r);
    }
    Ok(ComponentReport { lattice: grid.lattice().clone(), components, node_component })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessVerdict {
    pub per_component: Vec<bool>,
    pub all_bounded: bool,
}

/// A component is bounded in direction `e` iff `k·e = 0` for every winding
/// generator `k`.
pub fn bounded_in_direction(report: &ComponentReport, e: &[f64]) -> Result<BoundednessVerdict> {
    let e = unit_direction(e, report.lattice.dim())?;
    let per_component: Vec<bool> = (0..report.components.len())
        .map(|id| {
            report.physical_winding(id).iter().all(|k| {
                let scale = norm(*k).max(1.0);
                dot(*k, e).abs() <= 1e-12 * scale
            })
        })
        .collect();
    let all_bounded = per_component.iter().all(|&b| b);
    Ok(BoundednessVerdict { per_component, all_bounded })
}

/// Slab or cylinder inside Ω that certifies a positive limiting speed.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateDescriptor {
    Slab { primitive: usize, normal: [f64; 2], a: f64, b: f64, alpha: f64 },
    /// In 2D the cylinder `d(x, x0 + R e') < r` is a stripe with axis `e'`.
    Cylinder { primitive: usize, axis: [f64; 2], center: [f64; 2], half_width: f64, beta: f64, alpha: f64 },
}

impl CertificateDescriptor {
    pub fn alpha(&self) -> f64 {
        match self {
            CertificateDescriptor::Slab { alpha, .. } | CertificateDescriptor::Cylinder { alpha, .. } => *alpha,
        }
    }

    pub fn primitive(&self) -> usize {
        match self {
            CertificateDescriptor::Slab { primitive, .. } | CertificateDescriptor::Cylinder { primitive, .. } => {
                *primitive
            }
        }
    }
}

fn mat_vec(a: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Looks for a slab `{a < x·e' < b}` (with `e' ≠ ±e`) or a cylinder around an
/// eigen-direction `e'` of `A` with `e·e' ≠ 0` among the primitives of `spec`.
pub fn positivity_precondition(
    spec: &DomainSpec,
    e: &[f64],
    diffusion: &DiffusionField,
) -> Result<Option<CertificateDescriptor>> {
    let dim = diffusion.dim();
    let e = unit_direction(e, dim)?;
    let a = diffusion.constant_matrix().ok_or(Error::NonConstantDiffusion)?;
    let ae = mat_vec(a, e);
    let mut saw_parallel_slab = false;
    let mut best: Option<CertificateDescriptor> = None;
    let mut consider = |c: CertificateDescriptor| {
        if best.as_ref().map_or(true, |b| c.alpha() > b.alpha()) {
            best = Some(c);
        }
    };
    for (i, p) in spec.primitives.iter().enumerate() {
        p.validate()?;
        match *p {
            Primitive::Slab { normal, a: lo, b: hi } => {
                if dim < 2 || (dot(normal, e).abs() - 1.0).abs() < 1e-12 {
                    saw_parallel_slab = true;
                    continue;
                }
                let ane = mat_vec(a, normal);
                let alpha = dot(ae, e) / 2.0 - dot(ae, normal).powi(2) / (2.0 * dot(ane, normal));
                if alpha > 0.0 {
                    consider(CertificateDescriptor::Slab { primitive: i, normal, a: lo, b: hi, alpha });
                }
            }
            Primitive::Stripe { axis, center, half_width } => {
                let aa = mat_vec(a, axis);
                let beta = dot(aa, axis);
                let off = [aa[0] - beta * axis[0], aa[1] - beta * axis[1]];
                let ea = dot(e, axis);
                if norm(off) <= 1e-12 * beta.abs().max(1.0) && ea.abs() > 1e-12 {
                    let alpha = beta * ea * ea / 2.0;
                    consider(CertificateDescriptor::Cylinder {
                        primitive: i,
                        axis,
                        center,
                        half_width,
                        beta,
                        alpha,
                    });
                }
            }
            _ => {}
        }
    }
    match best {
        Some(c) => Ok(Some(c)),
        None if saw_parallel_slab => Err(Error::ParallelSlab),
        None => Ok(None),
    }
}
