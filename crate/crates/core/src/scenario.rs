//! Declarative scenarios: a TOML file names the medium, the ladder and one or
//! more experiments; `run` executes them and collects tables, a text summary
//! and pass/fail assertions.

use rayon::prelude::*;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::eigen::{component_eigenvalues, eigen_ladder, rayleigh_check};
use crate::error::{Error, Result};
use crate::evolution::{
    front_run, minimal_steady_state, scaled_component_eigenfunction, steady_ladder, EvolutionOptions, FrontOptions,
};
use crate::fields::{
    build_ladder, check_kpp, kpp_samples, DiffusionField, LadderSchedule, Matrix2, ReactionKind, ReactionModel,
};
use crate::geometry::{
    analyze_components, bounded_in_direction, positivity_precondition, rasterize, unit_direction, ComponentReport,
    DomainMask, DomainSpec, Primitive,
};
use crate::grid::{Grid, Lattice};
use crate::operator::{drift_resolution, DRIFT_GUARD};
use crate::output::{field_table, num, write_atomic, Table};
use crate::problem::{CellProblem, Mode};
use crate::speeds::{direction_fan, minimal_speed, positivity_certificate, speed_ladder, spreading_speed, SpeedOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Eigen,
    EigenLadder,
    Steady,
    SteadyLadder,
    Speed,
    SpeedLadder,
    Spread,
    Certificate,
    Front,
    BlockScan,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Eigen,
        Experiment::EigenLadder,
        Experiment::Steady,
        Experiment::SteadyLadder,
        Experiment::Speed,
        Experiment::SpeedLadder,
        Experiment::Spread,
        Experiment::Certificate,
        Experiment::Front,
        Experiment::BlockScan,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Eigen => "eigen",
            Experiment::EigenLadder => "eigen-ladder",
            Experiment::Steady => "steady",
            Experiment::SteadyLadder => "steady-ladder",
            Experiment::Speed => "speed",
            Experiment::SpeedLadder => "speed-ladder",
            Experiment::Spread => "spread",
            Experiment::Certificate => "certificate",
            Experiment::Front => "front",
            Experiment::BlockScan => "block-scan",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::Eigen => "principal eigenvalues at rung 0, the top rung and in Dirichlet mode, plus per-component values",
            Experiment::EigenLadder => "k_{e,lambda,n} along the ladder against the Dirichlet limit",
            Experiment::Steady => "minimal steady state at one rung and in Dirichlet mode",
            Experiment::SteadyLadder => "minimal steady states along the ladder, hostile mass and limit gap",
            Experiment::Speed => "dispersion curve and minimal speed per direction",
            Experiment::SpeedLadder => "minimal speeds along the ladder with the Dirichlet lower bound",
            Experiment::Spread => "spreading speed w*(e) over a fan of directions",
            Experiment::Certificate => "slab or cylinder positivity certificate for the limiting speed",
            Experiment::Front => "time-dependent front on a strip of cells, empirical speed",
            Experiment::BlockScan => "speed ladders over a full circle of directions (polar table)",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub periods: Vec<f64>,
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionSection {
    #[default]
    Identity,
    Constant { matrix: Matrix2 },
    Oscillating { base: Matrix2, amplitude: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSection {
    pub region: Primitive,
    pub reaction: ReactionKind,
    /// Reset the linear rate of a remark31 zone so that the Dirichlet
    /// eigenvalue of the component it covers sits just above zero.
    #[serde(default)]
    pub tune_threshold: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReactionSection {
    #[serde(flatten)]
    pub kind: ReactionKind,
    /// Declared KPP property; checked by `validate`.
    #[serde(default)]
    pub kpp: Option<bool>,
    #[serde(default)]
    pub zone: Vec<ZoneSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub gamma: f64,
    pub n_max: usize,
    /// Subset of `0..=n_max`; all rungs when absent.
    #[serde(default)]
    pub rungs: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    pub lambdas: Vec<f64>,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self { lambdas: vec![0.0] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedSection {
    pub directions: Option<Vec<Vec<f64>>>,
    pub lambda_max: f64,
    pub lambda_tol: f64,
    /// Rung used by `speed` and `spread`.
    pub rung: usize,
    /// Directions in the spreading fan and in the block-scan circle.
    pub fan: usize,
    pub certificate_step: f64,
}

impl Default for SpeedSection {
    fn default() -> Self {
        Self {
            directions: None,
            lambda_max: crate::speeds::DEFAULT_LAMBDA_MAX,
            lambda_tol: 1e-6,
            rung: 0,
            fan: 8,
            certificate_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadySection {
    /// Rung for `steady`; the top rung when absent.
    pub rung: Option<usize>,
    pub cfl: f64,
    pub window: f64,
    pub max_time: f64,
}

impl Default for SteadySection {
    fn default() -> Self {
        let o = EvolutionOptions::default();
        Self { rung: None, cfl: o.cfl, window: o.window, max_time: o.max_time }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontSection {
    pub cells: usize,
    pub time: Option<f64>,
    pub cfl: f64,
    pub rung: Option<usize>,
    /// Write every this many recorded positions.
    pub stride: usize,
    /// Also compute c*_n and assert the empirical speed is within `speed_rel`.
    pub compare: bool,
    pub speed_rel: f64,
}

impl Default for FrontSection {
    fn default() -> Self {
        let o = FrontOptions::default();
        Self { cells: o.cells, time: None, cfl: o.cfl, rung: None, stride: 10, compare: false, speed_rel: 0.15 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eigen: f64,
    pub steady: f64,
    /// Slack in `p_{n+1} ≤ p_n`.
    pub monotone: f64,
    /// Bound on `max (p − p_n)⁺` at the last rung.
    pub deficit: f64,
    /// Slack in speed monotonicity.
    pub speed: f64,
    /// Slack in the Dirichlet lower bound on the last-rung speed.
    pub lower_bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eigen: 1e-8, steady: 1e-8, monotone: 1e-8, deficit: 1e-6, speed: 1e-6, lower_bound: 1e-3 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub experiments: Vec<Experiment>,
    pub lattice: LatticeSection,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    pub reaction: ReactionSection,
    pub ladder: LadderSection,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default)]
    pub speed: SpeedSection,
    #[serde(default)]
    pub steady: SteadySection,
    #[serde(default)]
    pub front: FrontSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip)]
    pub source: String,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.source = text.to_string();
        if s.experiment.is_none() && s.experiments.is_empty() {
            return Err(Error::Config("no experiment named (set `experiment` or `experiments`)".into()));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn experiment_list(&self) -> Vec<Experiment> {
        let mut v: Vec<Experiment> = self.experiment.into_iter().chain(self.experiments.iter().copied()).collect();
        let mut seen = std::collections::HashSet::new();
        v.retain(|e| seen.insert(*e));
        v
    }

    pub fn dim(&self) -> usize {
        self.lattice.periods.len()
    }

    pub fn rungs(&self) -> Vec<usize> {
        self.ladder.rungs.clone().unwrap_or_else(|| (0..=self.ladder.n_max).collect())
    }

    pub fn top_rung(&self) -> usize {
        self.rungs().last().copied().unwrap_or(self.ladder.n_max)
    }

    pub fn schedule(&self) -> LadderSchedule {
        LadderSchedule { gamma: self.ladder.gamma, n_max: self.ladder.n_max }
    }

    pub fn directions(&self) -> Vec<Vec<f64>> {
        self.speed.directions.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; self.dim()];
            e[0] = 1.0;
            vec![e]
        })
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(&self.lattice.periods)
    }

    pub fn diffusion(&self) -> Result<DiffusionField> {
        let dim = self.dim();
        Ok(match &self.diffusion {
            DiffusionSection::Identity => DiffusionField::identity(dim),
            DiffusionSection::Constant { matrix } => DiffusionField::constant(*matrix, dim),
            DiffusionSection::Oscillating { base, amplitude } => {
                DiffusionField::oscillating(*base, *amplitude, &self.lattice()?)?
            }
        })
    }

    pub fn speed_options(&self) -> SpeedOptions {
        SpeedOptions { lambda_max: self.speed.lambda_max, lambda_tol: self.speed.lambda_tol, eig_tol: self.tolerances.eigen }
    }

    pub fn evolution_options(&self) -> EvolutionOptions {
        EvolutionOptions {
            cfl: self.steady.cfl,
            tol: self.tolerances.steady,
            window: self.steady.window,
            max_time: self.steady.max_time,
            newton: true,
        }
    }

    pub fn mask(&self) -> Result<DomainMask> {
        rasterize(&self.domain, &self.lattice()?, &self.lattice.resolution)
    }

    /// Reaction model with threshold-tuned zones resolved.
    pub fn reaction_model(&self, mask: &DomainMask, diffusion: &DiffusionField) -> Result<ReactionModel> {
        let mut model = ReactionModel::uniform(self.reaction.kind.clone());
        let mut report: Option<ComponentReport> = None;
        for zone in &self.reaction.zone {
            let mut kind = zone.reaction.clone();
            if zone.tune_threshold {
                let ReactionKind::Remark31 { s0, saturation, .. } = kind else {
                    return Err(Error::Config("tune_threshold applies only to remark31 zones".into()));
                };
                if report.is_none() {
                    report = Some(analyze_components(mask)?);
                }
                let ids = zone_components(mask, report.as_ref().expect("set above"), &zone.region);
                if ids.is_empty() {
                    return Err(Error::Config("tuned zone covers no component of the domain".into()));
                }
                let mu = threshold_rate(mask, report.as_ref().expect("set above"), diffusion, &ids, self.tolerances.eigen)?;
                kind = ReactionKind::Remark31 { lambda: mu * (1.0 - 1e-9), s0, saturation };
            }
            model = model.with_zone(zone.region.clone(), kind);
        }
        model.validate()?;
        Ok(model)
    }

    pub fn problem(&self) -> Result<CellProblem> {
        let mask = self.mask()?;
        let diffusion = self.diffusion()?;
        let model = self.reaction_model(&mask, &diffusion)?;
        let ladder = build_ladder(&model, &mask, self.schedule())?;
        CellProblem::new(mask, diffusion, ladder)
    }

    /// Grid, cutoff and ladder in one line each.
    pub fn context_lines(&self) -> Vec<String> {
        let h: Vec<f64> =
            self.lattice.periods.iter().zip(&self.lattice.resolution).map(|(l, m)| l / *m as f64).collect();
        vec![
            format!(
                "grid: periods {:?}, resolution {:?}, spacing {:?}",
                self.lattice.periods, self.lattice.resolution, h
            ),
            format!("lambda cutoff: {}", self.speed.lambda_max),
            format!("ladder: gamma = {}, n_max = {}, rungs = {:?}", self.ladder.gamma, self.ladder.n_max, self.rungs()),
        ]
    }
}

/// Components with at least one node inside `region`.
fn zone_components(mask: &DomainMask, report: &ComponentReport, region: &Primitive) -> Vec<usize> {
    let grid = mask.grid();
    report
        .components
        .iter()
        .filter(|c| c.nodes.iter().any(|&n| region.contains(grid.position(n), grid.lattice())))
        .map(|c| c.id)
        .collect()
}

/// Smallest Dirichlet eigenvalue of `−∇·(A∇)` over the given components.
fn threshold_rate(
    mask: &DomainMask,
    report: &ComponentReport,
    diffusion: &DiffusionField,
    ids: &[usize],
    tol: f64,
) -> Result<f64> {
    let zero = vec![0.0; mask.grid().len()];
    let all = component_eigenvalues(mask, report, diffusion, &zero, tol)?;
    Ok(ids.iter().map(|&i| all.results[i].value).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Dry-run checks. Never fails; problems come back as findings.
pub fn validate(s: &Scenario) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut err = |m: String| out.push(Finding { severity: Severity::Error, message: m });
    let t = &s.tolerances;
    for (name, v) in [
        ("eigen", t.eigen),
        ("steady", t.steady),
        ("monotone", t.monotone),
        ("deficit", t.deficit),
        ("speed", t.speed),
        ("lower_bound", t.lower_bound),
        ("lambda_tol", s.speed.lambda_tol),
        ("certificate_step", s.speed.certificate_step),
    ] {
        if !(v > 0.0) {
            err(format!("tolerance `{name}` must be positive, got {v}"));
        }
    }
    if !(s.speed.lambda_max > crate::speeds::LAMBDA_FLOOR) {
        err(format!("lambda_max = {} is below the sampling floor", s.speed.lambda_max));
    }
    if !(s.ladder.gamma >= 0.0) {
        err(format!("ladder gamma must be nonnegative, got {}", s.ladder.gamma));
    }
    if let Some(r) = &s.ladder.rungs {
        if r.is_empty() || r.windows(2).any(|w| w[1] <= w[0]) {
            err(format!("ladder rungs must be nonempty and strictly increasing, got {r:?}"));
        }
        if let Some(&n) = r.iter().find(|&&n| n > s.ladder.n_max) {
            err(format!("rung {n} exceeds n_max = {}", s.ladder.n_max));
        }
    }
    let experiments = s.experiment_list();
    let lattice = match s.lattice() {
        Ok(l) => l,
        Err(e) => {
            err(e.to_string());
            return out;
        }
    };
    let grid = match Grid::new(lattice, &s.lattice.resolution) {
        Ok(g) => g,
        Err(e) => {
            err(e.to_string());
            return out;
        }
    };
    let diffusion = match s.diffusion().and_then(|d| d.ellipticity(&grid).map(|_| d)) {
        Ok(d) => d,
        Err(e) => {
            err(e.to_string());
            return out;
        }
    };
    let mask = match s.mask() {
        Ok(m) => m,
        Err(e) => {
            err(e.to_string());
            return out;
        }
    };
    let mut dirs = Vec::new();
    for e in s.directions() {
        match unit_direction(&e, s.dim()) {
            Ok(d) => dirs.push(d),
            Err(x) => err(x.to_string()),
        }
    }
    let mut findings = std::mem::take(&mut out);
    let mut push = |sev: Severity, m: String| findings.push(Finding { severity: sev, message: m });
    for w in mask.warnings() {
        push(Severity::Warning, w.clone());
    }
    if s.ladder.gamma == 0.0 {
        push(Severity::Note, "gamma = 0: every rung equals rung 0".into());
    }
    for d in &dirs {
        let r = drift_resolution(&grid, &diffusion, *d, s.speed.lambda_max);
        if r > DRIFT_GUARD {
            push(
                Severity::Warning,
                format!(
                    "drift under-resolved: lambda_max * h * max|Ae| = {r:.3} > {DRIFT_GUARD} for e = {:?}",
                    &d[..s.dim()]
                ),
            );
        }
    }
    match s.reaction_model(&mask, &diffusion) {
        Err(e) => push(Severity::Error, e.to_string()),
        Ok(model) => {
            let kpp = check_kpp(&model, grid.lattice(), &grid.positions(), &kpp_samples(model.saturation(), 200));
            match (s.reaction.kpp, kpp.holds) {
                (Some(true), false) => {
                    let w = kpp.witness.expect("witness on failure");
                    push(
                        Severity::Error,
                        format!(
                            "reaction declared KPP but F/u increases between u = {:.4} and u = {:.4} at x = {:?}",
                            w.u, w.u_next, w.x
                        ),
                    );
                }
                (Some(false), true) => {
                    push(Severity::Warning, "reaction declared non-KPP but F/u is nonincreasing on the samples".into())
                }
                (None, holds) => push(Severity::Note, format!("sampled KPP property: {holds}")),
                _ => {}
            }
        }
    }
    if experiments.contains(&Experiment::Certificate) {
        if !diffusion.is_constant() {
            push(Severity::Error, "certificate requested but the diffusion matrix is not constant".into());
        } else {
            for d in &dirs {
                match positivity_precondition(&s.domain, &d[..s.dim()], &diffusion) {
                    Ok(Some(_)) => {}
                    Ok(None) => push(
                        Severity::Error,
                        format!("no slab or cylinder in the domain certifies direction {:?}", &d[..s.dim()]),
                    ),
                    Err(e) => push(Severity::Error, format!("certificate for {:?}: {e}", &d[..s.dim()])),
                }
            }
        }
    }
    if experiments.contains(&Experiment::Front) {
        if s.front.cells < 8 {
            push(Severity::Error, format!("front strip needs at least 8 cells, got {}", s.front.cells));
        }
        for d in &dirs {
            if d.iter().filter(|v| v.abs() > 1e-12).count() != 1 {
                push(Severity::Error, format!("front runs need a coordinate axis direction, got {:?}", &d[..s.dim()]));
            }
        }
    }
    if let Some(n) = s.front.rung.into_iter().chain(s.steady.rung).find(|&n| n > s.ladder.n_max) {
        push(Severity::Error, format!("rung {n} exceeds n_max = {}", s.ladder.n_max));
    }
    if s.speed.rung > s.ladder.n_max {
        push(Severity::Error, format!("speed rung {} exceeds n_max = {}", s.speed.rung, s.ladder.n_max));
    }
    findings.sort_by_key(|f| f.severity);
    findings
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub seconds: f64,
}

impl ExperimentReport {
    fn new(experiment: Experiment) -> Self {
        Self { experiment, tables: Vec::new(), summary: Vec::new(), assertions: Vec::new(), seconds: 0.0 }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }

    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub scenario: String,
    pub context: Vec<String>,
    pub experiments: Vec<ExperimentReport>,
    pub seconds: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.experiments.iter().all(ExperimentReport::passed)
    }

    pub fn assertions(&self) -> impl Iterator<Item = (&Experiment, &Assertion)> {
        self.experiments.iter().flat_map(|r| r.assertions.iter().map(move |a| (&r.experiment, a)))
    }

    /// CSV files keyed by file name, in a fixed order.
    pub fn csv_files(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for r in &self.experiments {
            for t in &r.tables {
                out.push((format!("{}-{}.csv", r.experiment.name(), t.name), t.to_csv()?));
            }
        }
        Ok(out)
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.name);
        for c in &self.context {
            let _ = writeln!(s, "{c}");
        }
        for r in &self.experiments {
            let _ = writeln!(s, "\n== {} ({:.2} s) ==", r.experiment.name(), r.seconds);
            for line in &r.summary {
                let _ = writeln!(s, "{line}");
            }
            for a in &r.assertions {
                let _ = writeln!(s, "[{}] {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
        }
        let total = self.assertions().count();
        let failed = self.assertions().filter(|(_, a)| !a.passed).count();
        let _ = writeln!(s, "\nassertions: {} passed, {failed} failed", total - failed);
        let _ = writeln!(s, "wall clock: {:.2} s", self.seconds);
        let _ = writeln!(s, "\n--- scenario ---\n{}", self.scenario.trim_end());
        s
    }

    /// Writes every table and `report.txt` atomically; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for (name, body) in self.csv_files()? {
            let p = dir.join(name);
            write_atomic(&p, body.as_bytes())?;
            paths.push(p);
        }
        let p = dir.join("report.txt");
        write_atomic(&p, self.summary_text().as_bytes())?;
        paths.push(p);
        Ok(paths)
    }
}

/// Runs every experiment of the scenario; independent experiments share
/// the current rayon pool.
pub fn run(s: &Scenario) -> Result<RunReport> {
    let errors: Vec<String> =
        validate(s).into_iter().filter(|f| f.severity == Severity::Error).map(|f| f.message).collect();
    if !errors.is_empty() {
        return Err(Error::Config(errors.join("; ")));
    }
    let start = Instant::now();
    let problem = s.problem()?;
    let experiments = s
        .experiment_list()
        .par_iter()
        .map(|&e| {
            let t = Instant::now();
            let mut r = run_experiment(s, &problem, e)
                .map_err(|err| Error::InExperiment { name: e.name().to_string(), source: Box::new(err) })?;
            r.seconds = t.elapsed().as_secs_f64();
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        name: s.name.clone().unwrap_or_else(|| "unnamed".into()),
        scenario: s.source.clone(),
        context: s.context_lines(),
        experiments,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs inside a dedicated pool of `jobs` threads.
pub fn run_with_jobs(s: &Scenario, jobs: Option<usize>) -> Result<RunReport> {
    match jobs {
        None => run(s),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| run(s)),
    }
}

pub fn run_experiment(s: &Scenario, problem: &CellProblem, e: Experiment) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new(e);
    match e {
        Experiment::Eigen => eigen_experiment(s, problem, &mut r)?,
        Experiment::EigenLadder => eigen_ladder_experiment(s, problem, &mut r)?,
        Experiment::Steady => steady_experiment(s, problem, &mut r)?,
        Experiment::SteadyLadder => steady_ladder_experiment(s, problem, &mut r)?,
        Experiment::Speed => speed_experiment(s, problem, &mut r)?,
        Experiment::SpeedLadder => speed_ladder_experiment(s, problem, &mut r)?,
        Experiment::Spread => spread_experiment(s, problem, &mut r)?,
        Experiment::Certificate => certificate_experiment(s, problem, &mut r)?,
        Experiment::Front => front_experiment(s, problem, &mut r)?,
        Experiment::BlockScan => block_scan_experiment(s, problem, &mut r)?,
    }
    Ok(r)
}

fn modes(s: &Scenario, problem: &CellProblem) -> Vec<Mode> {
    let mut v = vec![Mode::Periodic { rung: 0 }];
    if s.top_rung() > 0 {
        v.push(Mode::Periodic { rung: s.top_rung() });
    }
    if !problem.mask().is_whole_space() {
        v.push(Mode::Dirichlet);
    }
    v
}

fn fmt_dir(d: &[f64]) -> String {
    let parts: Vec<String> = d.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn eigen_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let tol = s.tolerances.eigen;
    let e = s.directions().remove(0);
    let modes = modes(s, problem);
    let mut table = Table::new(
        "values",
        &["mode", "lambda [1/length]", "eigenvalue [1/time]", "residual [1/time]", "iterations [count]"],
    );
    let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
    let mut by_mode = Vec::new();
    for (li, &lambda) in s.eigen.lambdas.iter().enumerate() {
        let results = modes
            .par_iter()
            .map(|&m| problem.eigen(m, lambda, &e, tol))
            .collect::<Result<Vec<_>>>()?;
        for (m, res) in modes.iter().zip(&results) {
            table.push(vec![
                m.label(),
                num(lambda),
                num(res.value),
                num(res.residual),
                res.iterations.to_string(),
            ]);
            r.note(format!("{} at lambda = {lambda}: eigenvalue {:.10e}", m.label(), res.value));
            let active: Vec<usize> = match m {
                Mode::Dirichlet => (0..problem.grid().len()).filter(|&i| problem.mask().is_inside(i)).collect(),
                _ => (0..problem.grid().len()).collect(),
            };
            let min = res.min_on(&active);
            r.check(
                format!("positive eigenfunction ({}, lambda = {lambda})", m.label()),
                min > 0.0,
                format!("min = {min:.3e}"),
            );
            if lambda == 0.0 {
                let op = problem.operator(*m, 0.0, &e)?;
                let q = rayleigh_check(&op, &res.eigenfunction)?;
                let dev = (q - res.value).abs();
                let bound = 10.0 * tol * (1.0 + res.value.abs());
                r.check(
                    format!("Rayleigh consistency ({})", m.label()),
                    dev <= bound,
                    format!("|R - eigenvalue| = {dev:.3e} (bound {bound:.1e})"),
                );
            }
            if li == 0 {
                fields.push((m.label(), res.eigenfunction.clone()));
            }
        }
        by_mode.push(results);
    }
    for results in &by_mode {
        if let Some(d) = results.iter().find(|x| x.dirichlet) {
            for p in results.iter().filter(|x| !x.dirichlet) {
                r.check(
                    format!("periodic below Dirichlet (n = {}, lambda = {})", p.rung.unwrap_or(0), p.lambda),
                    p.value <= d.value + tol * (1.0 + d.value.abs()),
                    format!("{:.6e} <= {:.6e}", p.value, d.value),
                );
            }
        }
    }
    r.tables.push(table);
    let labels: Vec<&str> = fields.iter().map(|f| f.0.as_str()).collect();
    let values: Vec<&[f64]> = fields.iter().map(|f| f.1.as_slice()).collect();
    r.tables.push(field_table("eigenfunctions", "1/length^(N/2)", problem.mask(), &values, &labels));

    if !problem.mask().is_whole_space() {
        let report = analyze_components(problem.mask())?;
        let comps = component_eigenvalues(problem.mask(), &report, problem.diffusion(), &problem.zeta(Mode::Dirichlet), tol)?;
        let mut t = Table::new(
            "components",
            &["component [id]", "nodes [count]", "winding generators [count]", "dirichlet eigenvalue [1/time]", "in I_- [flag]"],
        );
        for (c, res) in report.components.iter().zip(&comps.results) {
            t.push(vec![
                c.id.to_string(),
                c.nodes.len().to_string(),
                c.winding.len().to_string(),
                num(res.value),
                ((res.value < 0.0) as u8).to_string(),
            ]);
        }
        r.note(format!("components: {}, I_- = {:?}", report.len(), comps.i_minus));
        if let Some(d) = by_mode.first().and_then(|v| v.iter().find(|x| x.dirichlet)) {
            let dev = (comps.min() - d.value).abs();
            r.check(
                "Dirichlet value is the component minimum",
                dev <= 10.0 * tol * (1.0 + d.value.abs()),
                format!("|min_i - whole| = {dev:.3e}"),
            );
        }
        r.tables.push(t);
    }
    Ok(())
}

fn eigen_ladder_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let tol = s.tolerances.eigen;
    let e = s.directions().remove(0);
    let rungs = s.rungs();
    let mut t = Table::new("ladder", &["lambda [1/length]", "rung", "k [1/time]", "gap to dirichlet [1/time]"]);
    for &lambda in &s.eigen.lambdas {
        let ladder = eigen_ladder(problem, &rungs, lambda, &e, tol)?;
        for (n, (res, gap)) in ladder.rungs.iter().zip(ladder.values.iter().zip(ladder.gaps())) {
            t.push(vec![num(lambda), n.to_string(), num(res.value), num(gap)]);
        }
        t.push(vec![num(lambda), "dirichlet".into(), num(ladder.limit.value), num(0.0)]);
        let slack = tol * (1.0 + ladder.limit.value.abs());
        let last_gap = ladder.gaps().last().copied().unwrap_or(f64::NAN);
        r.note(format!(
            "lambda = {lambda}: k_0 = {:.8e}, k_top = {:.8e}, k_D = {:.8e}, final gap {:.3e} ({:.2}% of |k_D|)",
            ladder.values[0].value,
            ladder.values.last().expect("nonempty").value,
            ladder.limit.value,
            last_gap,
            100.0 * last_gap / ladder.limit.value.abs()
        ));
        r.check(
            format!("nondecreasing in n (lambda = {lambda})"),
            ladder.is_monotone(slack),
            format!("strictly increasing: {}", ladder.is_strictly_increasing()),
        );
        r.check(
            format!("below Dirichlet limit (lambda = {lambda})"),
            ladder.values.iter().all(|v| v.value <= ladder.limit.value + slack),
            format!("smallest gap {:.3e}", ladder.gaps().into_iter().fold(f64::INFINITY, f64::min)),
        );
    }
    r.tables.push(t);
    Ok(())
}

fn steady_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let opts = s.evolution_options();
    let rung = s.steady.rung.unwrap_or(s.top_rung());
    let mut modes = vec![Mode::Periodic { rung }];
    if !problem.mask().is_whole_space() {
        modes.push(Mode::Dirichlet);
    }
    let results = modes
        .par_iter()
        .map(|&m| minimal_steady_state(problem, m, &opts))
        .collect::<Result<Vec<_>>>()?;
    let m = problem.ladder().saturation();
    let mut t = Table::new(
        "components",
        &["mode", "component [id]", "nodes [count]", "dirichlet eigenvalue [1/time]", "in I_- [flag]", "max p [density]", "min p [density]"],
    );
    for res in &results {
        let label = res.mode.label();
        r.note(format!(
            "{label}: residual {:.3e}, time {:.2}, newton {}, max p {:.6e}",
            res.residual,
            res.time,
            res.newton,
            res.p.iter().copied().fold(0.0, f64::max)
        ));
        r.check(
            format!("stationary residual ({label})"),
            res.residual <= s.tolerances.steady,
            format!("{:.3e} <= {:.1e}", res.residual, s.tolerances.steady),
        );
        let lo = res.p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = res.p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        r.check(format!("0 <= p <= M ({label})"), lo >= -1e-10 && hi <= m + 1e-10, format!("range [{lo:.3e}, {hi:.6e}]"));
        for c in &res.components {
            t.push(vec![
                label.clone(),
                c.id.to_string(),
                c.nodes.to_string(),
                c.eigenvalue.map_or("".into(), num),
                c.in_i_minus.map_or("".into(), |b| (b as u8).to_string()),
                num(c.max_p),
                num(c.min_p),
            ]);
        }
        if res.mode == Mode::Dirichlet {
            let ok = res.components.iter().all(|c| c.in_i_minus == Some(c.positive));
            r.check("p > 0 exactly on I_- components", ok, format!("{} components", res.components.len()));
        }
    }
    let labels: Vec<String> = results.iter().map(|x| x.mode.label()).collect();
    let label_refs: Vec<&str> = labels.iter().map(|x| x.as_str()).collect();
    let values: Vec<&[f64]> = results.iter().map(|x| x.p.as_slice()).collect();
    r.tables.push(field_table("fields", "density", problem.mask(), &values, &label_refs));
    r.tables.push(t);
    Ok(())
}

fn steady_ladder_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let opts = s.evolution_options();
    let rungs = s.rungs();
    let ladder = steady_ladder(problem, &rungs, &opts)?;
    let inside = problem.mask().inside();
    let omega: Vec<usize> = (0..inside.len()).filter(|&i| inside[i]).collect();
    let mut t = Table::new(
        "ladder",
        &[
            "rung",
            "hostile L2 mass [density*length^(N/2)]",
            "max |p_n - p| on domain [density]",
            "max (p - p_n)+ on domain [density]",
            "residual [density/time]",
            "time [time]",
        ],
    );
    for (k, res) in ladder.results.iter().enumerate() {
        let gap = omega.iter().map(|&i| (res.p[i] - ladder.dirichlet.p[i]).abs()).fold(0.0, f64::max);
        let deficit = omega.iter().map(|&i| (ladder.dirichlet.p[i] - res.p[i]).max(0.0)).fold(0.0, f64::max);
        t.push(vec![
            ladder.rungs[k].to_string(),
            num(ladder.hostile_mass[k]),
            num(gap),
            num(deficit),
            num(res.residual),
            num(res.time),
        ]);
    }
    let inc = ladder.max_increase();
    r.check(
        "p_{n+1} <= p_n nodewise",
        ladder.results.len() < 2 || inc <= s.tolerances.monotone,
        format!("largest increase {inc:.3e}"),
    );
    if s.ladder.gamma > 0.0 && ladder.results.len() > 1 {
        r.check(
            "hostile mass strictly decreasing",
            ladder.mass_strictly_decreasing(),
            format!(
                "{:.4e} -> {:.4e}",
                ladder.hostile_mass[0],
                ladder.hostile_mass.last().expect("nonempty")
            ),
        );
    }
    let deficit = ladder.deficit(inside);
    r.check(
        "max (p - p_n)+ at the last rung",
        deficit <= s.tolerances.deficit,
        format!("{deficit:.3e} <= {:.1e}", s.tolerances.deficit),
    );
    let last = ladder.results.len() - 1;
    r.note(format!(
        "last rung {}: max |p_n - p| on the domain {:.4e}",
        ladder.rungs[last],
        ladder.excess_on(last, &omega).max(ladder.deficit(inside))
    ));
    let grid = problem.grid();
    let kpp = check_kpp(problem.ladder().model(), grid.lattice(), &grid.positions(), &kpp_samples(problem.ladder().saturation(), 200));
    r.note(format!("sampled KPP property: {}", kpp.holds));

    // tuned remark31 zones: the ladder limit stays above s0 * phi on the zone
    let tuned: Vec<&ZoneSection> = s.reaction.zone.iter().filter(|z| z.tune_threshold).collect();
    if !tuned.is_empty() {
        let report = analyze_components(problem.mask())?;
        for z in tuned {
            let ReactionKind::Remark31 { s0, .. } = z.reaction else { continue };
            for id in zone_components(problem.mask(), &report, &z.region) {
                let nodes = &report.components[id].nodes;
                let phi = scaled_component_eigenfunction(problem, id)?;
                let bound = 0.5 * s0 * nodes.iter().map(|&i| phi[i]).fold(0.0, f64::max);
                let worst = (0..ladder.results.len()).map(|k| ladder.excess_on(k, nodes)).fold(f64::INFINITY, f64::min);
                r.check(
                    format!("p_n - p stays above s0/2 * max phi on component {id}"),
                    worst >= bound,
                    format!("min over rungs of max(p_n - p) = {worst:.4e}, bound {bound:.4e}"),
                );
            }
        }
    }
    let labels: Vec<String> =
        ladder.rungs.iter().map(|n| format!("n={n}")).chain(std::iter::once("dirichlet".to_string())).collect();
    let label_refs: Vec<&str> = labels.iter().map(|x| x.as_str()).collect();
    let values: Vec<&[f64]> =
        ladder.results.iter().map(|x| x.p.as_slice()).chain(std::iter::once(ladder.dirichlet.p.as_slice())).collect();
    r.tables.push(t);
    r.tables.push(field_table("fields", "density", problem.mask(), &values, &label_refs));
    Ok(())
}

fn dispersion_table(name: &str, samples: &[crate::speeds::DispersionSample]) -> Table {
    let mut t = Table::new(name, &["lambda [1/length]", "k [1/time]", "-k/lambda [length/time]"]);
    for x in samples {
        t.push_nums(&[x.lambda, x.k, x.speed()]);
    }
    t
}

fn speed_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let opts = s.speed_options();
    let mode = Mode::Periodic { rung: s.speed.rung };
    let dirs = s.directions();
    let reports = dirs
        .par_iter()
        .map(|e| minimal_speed(problem, mode, e, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "speeds",
        &["e_x [1]", "e_y [1]", "rung", "k at lambda 0 [1/time]", "lambda* [1/length]", "c* [length/time]", "interior [flag]", "blocked suspected [flag]"],
    );
    for (i, (e, rep)) in dirs.iter().zip(&reports).enumerate() {
        t.push(vec![
            num(rep.direction[0]),
            num(rep.direction[1]),
            s.speed.rung.to_string(),
            num(rep.lambda1),
            num(rep.lambda_star),
            num(rep.c_star),
            (rep.minimizer_interior as u8).to_string(),
            (rep.blocked_suspected as u8).to_string(),
        ]);
        r.note(format!(
            "e = {}: c* = {:.8}, lambda* = {:.6}, interior {}, unimodal {}",
            fmt_dir(e),
            rep.c_star,
            rep.lambda_star,
            rep.minimizer_interior,
            rep.unimodal
        ));
        r.check(format!("c* >= 0 for e = {}", fmt_dir(e)), rep.c_star >= 0.0, format!("{:.6e}", rep.c_star));
        r.check(
            format!("-k/lambda blows up at 0 for e = {}", fmt_dir(e)),
            rep.blows_up_at_zero(),
            format!("q({}) = {:.4e}", rep.presample[0].lambda, rep.presample[0].speed()),
        );
        r.check(
            format!("-k(lambda) >= -k(0) for e = {}", fmt_dir(e)),
            rep.dominates_zero_drift(10.0 * s.tolerances.eigen * (1.0 + rep.lambda1.abs())),
            "all samples",
        );
        r.tables.push(dispersion_table(&format!("dispersion-{i}"), &rep.samples()));
    }
    r.tables.insert(0, t);
    Ok(())
}

fn speed_ladder_table(name: &str) -> Table {
    Table::new(
        name,
        &[
            "angle [rad]",
            "e_x [1]",
            "e_y [1]",
            "rung",
            "lambda* [1/length]",
            "c* [length/time]",
            "interior [flag]",
            "blocked suspected [flag]",
            "flatness [1]",
        ],
    )
}

fn push_speed_row(t: &mut Table, rung: String, rep: &crate::speeds::SpeedReport) {
    let d = rep.direction;
    t.push(vec![
        num(d[1].atan2(d[0])),
        num(d[0]),
        num(d[1]),
        rung,
        num(rep.lambda_star),
        num(rep.c_star),
        (rep.minimizer_interior as u8).to_string(),
        (rep.blocked_suspected as u8).to_string(),
        num(rep.flatness),
    ]);
}

fn speed_ladder_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let opts = s.speed_options();
    let rungs = s.rungs();
    let dirichlet = !problem.mask().is_whole_space();
    let mut t = speed_ladder_table("ladder");
    for e in s.directions() {
        let ladder = speed_ladder(problem, &e, &rungs, &opts, dirichlet)?;
        for (n, rep) in ladder.rungs.iter().zip(&ladder.reports) {
            push_speed_row(&mut t, n.to_string(), rep);
        }
        if let Some(d) = &ladder.dirichlet {
            push_speed_row(&mut t, "dirichlet".into(), d);
        }
        for (n, why) in &ladder.skipped {
            r.note(format!("e = {}: rung {n} skipped, {why}", fmt_dir(&e)));
        }
        let speeds = ladder.speeds();
        let slack = s.tolerances.speed * (1.0 + speeds.first().copied().unwrap_or(0.0));
        r.note(format!(
            "e = {}: c*_n from {:.6} to {:.6}; lower bound {}",
            fmt_dir(&e),
            speeds.first().copied().unwrap_or(f64::NAN),
            speeds.last().copied().unwrap_or(f64::NAN),
            ladder.lower_bound().map_or("n/a".into(), |b| format!("{b:.6}"))
        ));
        r.check(format!("c*_n nonincreasing for e = {}", fmt_dir(&e)), ladder.is_nonincreasing(slack), format!("{} rungs", speeds.len()));
        r.check(
            format!("k_(e,lambda,n) nondecreasing in n for e = {}", fmt_dir(&e)),
            ladder.k_nondecreasing(10.0 * s.tolerances.eigen),
            "common presample",
        );
        if let (Some(lim), Some(lb)) = (ladder.limit_estimate(), ladder.lower_bound()) {
            r.check(
                format!("last-rung speed above the Dirichlet bound for e = {}", fmt_dir(&e)),
                lim >= lb - s.tolerances.lower_bound,
                format!("{lim:.6} >= {lb:.6} - {:.0e}", s.tolerances.lower_bound),
            );
        }
        if dirichlet {
            let report = analyze_components(problem.mask())?;
            let verdict = bounded_in_direction(&report, &e)?;
            r.note(format!("e = {}: every component bounded in e: {}", fmt_dir(&e), verdict.all_bounded));
        }
    }
    r.tables.push(t);
    Ok(())
}

fn spread_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let opts = s.speed_options();
    let dim = s.dim();
    let mut t = Table::new(
        "fan",
        &["e_x [1]", "e_y [1]", "xi_x [1]", "xi_y [1]", "c*(xi) [length/time]", "c*(xi)/(xi.e) [length/time]"],
    );
    for e in s.directions() {
        let d = unit_direction(&e, dim)?;
        let fan = if dim == 1 { vec![d] } else { direction_fan(d, s.speed.fan) };
        let rep = spreading_speed(problem, s.speed.rung, &e, &fan, &opts)?;
        for x in &rep.entries {
            t.push_nums(&[d[0], d[1], x.xi[0], x.xi[1], x.c_star, x.ratio]);
        }
        let c_e = rep.entries[0].c_star;
        r.note(format!("e = {}: w* = {:.6} at xi = {}, c*(e) = {c_e:.6}", fmt_dir(&e), rep.w_star, fmt_dir(&rep.argmin[..dim])));
        r.check(format!("w* <= c*(e) for e = {}", fmt_dir(&e)), rep.w_star <= c_e + 1e-12, format!("{:.6} <= {c_e:.6}", rep.w_star));
        r.check(format!("w* >= 0 for e = {}", fmt_dir(&e)), rep.w_star >= 0.0, format!("{:.6e}", rep.w_star));
    }
    r.tables.push(t);
    Ok(())
}

fn certificate_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let rung = s.top_rung();
    let step = s.speed.certificate_step;
    let count = (s.speed.lambda_max / step).floor() as usize;
    let lambdas: Vec<f64> = (1..=count).map(|j| j as f64 * step).collect();
    let mut t = Table::new(
        "samples",
        &["e_x [1]", "e_y [1]", "lambda [1/length]", "-k [1/time]", "alpha lambda^2 [1/time]", "uniform ok [flag]", "actual ok [flag]", "eigen ok [flag]"],
    );
    for e in s.directions() {
        let Some(desc) = positivity_precondition(&s.domain, &e, problem.diffusion())? else {
            r.check(format!("certificate exists for e = {}", fmt_dir(&e)), false, "no slab or cylinder found");
            continue;
        };
        let rep = positivity_certificate(problem, &desc, &e, rung, &lambdas, s.tolerances.eigen)?;
        let d = unit_direction(&e, s.dim())?;
        for x in &rep.samples {
            t.push(vec![
                num(d[0]),
                num(d[1]),
                num(x.lambda),
                num(x.minus_k),
                num(rep.alpha * x.lambda * x.lambda),
                (x.uniform_ok as u8).to_string(),
                (x.actual_ok as u8).to_string(),
                (x.eig_ok as u8).to_string(),
            ]);
        }
        let show = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.4}"));
        r.note(format!(
            "e = {}: {:?}, alpha = {:.4}, analytic Lambda = {:.4}, uniform {}, actual {}",
            fmt_dir(&e),
            desc,
            rep.alpha,
            rep.analytic_lambda,
            show(rep.lambda_uniform),
            show(rep.lambda_actual)
        ));
        if let Some(lu) = rep.lambda_uniform.filter(|_| rep.verified) {
            // below Lambda, -k >= -k(0) >= -lambda_{1,D} bounds the quotient instead
            let l1d = problem.eigen(Mode::Dirichlet, 0.0, &e, s.tolerances.eigen)?.value;
            let bound = (rep.alpha * lu).min(-l1d / lu);
            r.note(format!("e = {}: implied bound on the limiting speed min(alpha Lambda, -lambda_1D / Lambda) = {bound:.6}", fmt_dir(&e)));
        }
        r.check(format!("certificate verified for e = {} at rung {rung}", fmt_dir(&e)), rep.verified, show(rep.lambda_uniform));
        if let Some(lu) = rep.lambda_uniform {
            let rel = (lu - rep.analytic_lambda).abs() / rep.analytic_lambda;
            r.check(
                format!("discrete threshold within 10% of analytic for e = {}", fmt_dir(&e)),
                rel <= 0.1,
                format!("{lu:.4} vs {:.4} ({:.1}%)", rep.analytic_lambda, 100.0 * rel),
            );
        }
    }
    r.tables.push(t);
    Ok(())
}

fn front_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let rung = s.front.rung.unwrap_or(s.top_rung());
    let opts = FrontOptions { cells: s.front.cells, time: s.front.time, cfl: s.front.cfl, record_every: 1 };
    let dirs = s.directions();
    let results = dirs
        .par_iter()
        .map(|e| front_run(problem, rung, e, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Table::new(
        "runs",
        &["e_x [1]", "e_y [1]", "rung", "cells [count]", "final time [time]", "dt [time]", "speed [length/time]", "hostile amplitude [density]", "midpoint time [time]", "exited [flag]", "stalled [flag]"],
    );
    r.note("time origin: positions are reported from t = 0; the midpoint crossing time is listed for alignment across rungs");
    for (i, (e, f)) in dirs.iter().zip(&results).enumerate() {
        summary.push(vec![
            num(f.direction[0]),
            num(f.direction[1]),
            rung.to_string(),
            f.cells.to_string(),
            num(f.final_time),
            num(f.dt),
            num(f.speed),
            num(f.hostile_amplitude),
            f.midpoint_time.map_or("".into(), num),
            (f.exited as u8).to_string(),
            (f.stalled as u8).to_string(),
        ]);
        let mut t = Table::new(&format!("positions-{i}"), &["t [time]", "position [length]"]);
        for (k, p) in f.positions.iter().enumerate() {
            if k % s.front.stride.max(1) == 0 || k + 1 == f.positions.len() {
                t.push_nums(&[p.0, p.1]);
            }
        }
        r.tables.push(t);
        r.note(format!(
            "e = {}: empirical speed {:.6}, level {:.4}, stalled {}, hostile amplitude {:.3e}",
            fmt_dir(e),
            f.speed,
            f.level,
            f.stalled,
            f.hostile_amplitude
        ));
        r.check(
            format!("front stays inside the strip for e = {}", fmt_dir(e)),
            !f.exited,
            if f.exited { "exited, rerun with more cells".to_string() } else { format!("{} cells", f.cells) },
        );
        if s.front.compare {
            let c = minimal_speed(problem, Mode::Periodic { rung }, e, &s.speed_options())?.c_star;
            let rel = (f.speed - c).abs() / c;
            r.check(
                format!("empirical speed within {:.0}% of c*_n for e = {}", 100.0 * s.front.speed_rel, fmt_dir(e)),
                rel <= s.front.speed_rel,
                format!("{:.6} vs {c:.6} ({:.1}%)", f.speed, 100.0 * rel),
            );
        }
    }
    r.tables.insert(0, summary);
    Ok(())
}

fn block_scan_experiment(s: &Scenario, problem: &CellProblem, r: &mut ExperimentReport) -> Result<()> {
    let opts = s.speed_options();
    let rungs = s.rungs();
    let dim = s.dim();
    let dirs: Vec<Vec<f64>> = if dim == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        let m = s.speed.fan.max(1);
        (0..m)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    };
    let report = if problem.mask().is_whole_space() { None } else { Some(analyze_components(problem.mask())?) };
    let mut t = speed_ladder_table("polar");
    for e in &dirs {
        let ladder = speed_ladder(problem, e, &rungs, &opts, false)?;
        for (n, rep) in ladder.rungs.iter().zip(&ladder.reports) {
            push_speed_row(&mut t, n.to_string(), rep);
        }
        let Some(last) = ladder.reports.last() else {
            r.note(format!("e = {}: every rung has a stable zero state", fmt_dir(e)));
            continue;
        };
        let bounded = match &report {
            Some(rep) => bounded_in_direction(rep, e)?.all_bounded,
            None => false,
        };
        r.note(format!(
            "e = {}: c*_0 = {:.6}, c*_top = {:.6}, blocked suspected {}, bounded components {}",
            fmt_dir(e),
            ladder.reports[0].c_star,
            last.c_star,
            last.blocked_suspected,
            bounded
        ));
        r.check(
            format!("c*_n nonincreasing for e = {}", fmt_dir(e)),
            ladder.is_nonincreasing(s.tolerances.speed * (1.0 + ladder.reports[0].c_star)),
            format!("{} rungs", ladder.reports.len()),
        );
        if bounded {
            r.check(
                format!("blocking flagged at the top rung for e = {}", fmt_dir(e)),
                last.blocked_suspected,
                format!("flatness {:.3e}, minimizer interior {}", last.flatness, last.minimizer_interior),
            );
        }
    }
    r.tables.push(t);
    Ok(())
}
