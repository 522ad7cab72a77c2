//! A cell problem bundles the grid, the domain mask, the diffusion field and
//! the reaction ladder, and hands out operators for any rung or the
//! Dirichlet limit.

use crate::eigen::{principal_eigenpair, EigenResult};
use crate::error::{Error, Result};
use crate::fields::{build_ladder, DiffusionField, LadderSchedule, ReactionLadder, ReactionModel};
use crate::geometry::{rasterize, DomainMask, DomainSpec};
use crate::grid::{Grid, Lattice};
use crate::operator::{assemble_with, BoundaryMode, DriftScheme, OperatorMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Whole-space periodic problem with reaction `f_n`.
    Periodic { rung: usize },
    /// Dirichlet problem on the mask with the unpenalized reaction.
    Dirichlet,
}

impl Mode {
    pub fn rung(&self) -> Option<usize> {
        match self {
            Mode::Periodic { rung } => Some(*rung),
            Mode::Dirichlet => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Mode::Periodic { rung } => format!("n={rung}"),
            Mode::Dirichlet => "dirichlet".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellProblem {
    mask: DomainMask,
    diffusion: DiffusionField,
    ladder: ReactionLadder,
    scheme: DriftScheme,
}

impl CellProblem {
    pub fn new(mask: DomainMask, diffusion: DiffusionField, ladder: ReactionLadder) -> Result<Self> {
        if diffusion.dim() != mask.grid().dim() {
            return Err(Error::InvalidInput(format!(
                "diffusion field dimension {} does not match grid dimension {}",
                diffusion.dim(),
                mask.grid().dim()
            )));
        }
        if ladder.len() != mask.grid().len() {
            return Err(Error::LengthMismatch { expected: mask.grid().len(), got: ladder.len() });
        }
        diffusion.ellipticity(mask.grid())?;
        Ok(Self { mask, diffusion, ladder, scheme: DriftScheme::default() })
    }

    /// Rasterizes `spec` and builds the ladder in one go.
    pub fn build(
        lattice: &Lattice,
        resolution: &[usize],
        spec: &DomainSpec,
        diffusion: DiffusionField,
        model: &ReactionModel,
        schedule: LadderSchedule,
    ) -> Result<Self> {
        let mask = rasterize(spec, lattice, resolution)?;
        let ladder = build_ladder(model, &mask, schedule)?;
        Self::new(mask, diffusion, ladder)
    }

    pub fn with_scheme(mut self, scheme: DriftScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.mask.grid()
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn diffusion(&self) -> &DiffusionField {
        &self.diffusion
    }

    pub fn ladder(&self) -> &ReactionLadder {
        &self.ladder
    }

    pub fn scheme(&self) -> DriftScheme {
        self.scheme
    }

    pub fn zeta(&self, mode: Mode) -> Vec<f64> {
        match mode {
            Mode::Periodic { rung } => self.ladder.zeta(rung),
            Mode::Dirichlet => self.ladder.zeta_domain(),
        }
    }

    pub fn boundary(&self, mode: Mode) -> BoundaryMode {
        match mode {
            Mode::Periodic { .. } => BoundaryMode::Periodic,
            Mode::Dirichlet => BoundaryMode::Dirichlet(self.mask.inside().to_vec()),
        }
    }

    pub fn operator(&self, mode: Mode, lambda: f64, e: &[f64]) -> Result<OperatorMatrix> {
        let op = assemble_with(
            self.grid(),
            &self.diffusion,
            &self.zeta(mode),
            e,
            lambda,
            self.boundary(mode),
            self.scheme,
        )?;
        Ok(op.with_rung(mode.rung()))
    }

    /// Principal eigenpair of `L_{e,λ}` in the given mode; errors carry the
    /// rung and λ.
    pub fn eigen(&self, mode: Mode, lambda: f64, e: &[f64], tol: f64) -> Result<EigenResult> {
        let annotate = |err: Error| {
            let err = err.at_lambda(lambda);
            match mode.rung() {
                Some(n) => err.at_rung(n),
                None => err,
            }
        };
        let op = self.operator(mode, lambda, e).map_err(annotate)?;
        principal_eigenpair(&op, tol).map_err(annotate)
    }

    /// `k_{e,λ}` in the given mode.
    pub fn k(&self, mode: Mode, lambda: f64, e: &[f64], tol: f64) -> Result<f64> {
        Ok(self.eigen(mode, lambda, e, tol)?.value)
    }
}
