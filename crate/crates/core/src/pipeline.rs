//! End-to-end runs: mesh, IFE space, assembly, solve and error evaluation.

use std::time::Instant;

use crate::assembly::{assemble_system, reconstruct_solution, AssemblyParams, DiscreteField, IfeSpace, SparseSystem};
use crate::error::{Result, Warning};
use crate::geometry::ClassifyOptions;
use crate::mesh::{build_mesh, Subdivision};
use crate::postprocess::{compute_errors, ErrorReport};
use crate::problems::ProblemSpec;
use crate::solver::{pcg_solve, SolveReport, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub n: usize,
    pub subdivision: Subdivision,
    pub classify: ClassifyOptions,
    pub assembly: AssemblyParams,
    pub solver: SolverConfig,
}

impl RunOptions {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            subdivision: Subdivision::SixTet,
            classify: ClassifyOptions::default(),
            assembly: AssemblyParams::default(),
            solver: SolverConfig::default(),
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub mesh: f64,
    /// Classification, cut geometry and local bases.
    pub space: f64,
    pub assemble: f64,
    pub solve: f64,
    pub errors: f64,
}

impl Timings {
    /// Everything up to the linear system, the quantity reported as assembly time.
    pub fn setup(&self) -> f64 {
        self.mesh + self.space + self.assemble
    }
}

pub struct RunResult {
    pub space: IfeSpace,
    pub system: SparseSystem,
    pub field: DiscreteField,
    pub solve: SolveReport,
    pub errors: Option<ErrorReport>,
    pub timings: Timings,
    pub warnings: Vec<Warning>,
}

pub fn build_space(problem: &ProblemSpec, options: &RunOptions) -> Result<IfeSpace> {
    let mesh = build_mesh(problem.domain, options.n, options.subdivision)?;
    IfeSpace::with_options(mesh, problem.level_set.as_ref(), problem.beta_minus, problem.beta_plus, &options.classify)
}

/// Space and system only.
pub fn build_system(problem: &ProblemSpec, options: &RunOptions) -> Result<(IfeSpace, SparseSystem, Timings)> {
    let mut timings = Timings::default();
    let t = Instant::now();
    let mesh = build_mesh(problem.domain, options.n, options.subdivision)?;
    timings.mesh = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let space =
        IfeSpace::with_options(mesh, problem.level_set.as_ref(), problem.beta_minus, problem.beta_plus, &options.classify)?;
    timings.space = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let system = assemble_system(&space, problem, &options.assembly)?;
    timings.assemble = t.elapsed().as_secs_f64();
    Ok((space, system, timings))
}

pub fn solve_problem(problem: &ProblemSpec, options: &RunOptions) -> Result<RunResult> {
    let (space, system, mut timings) = build_system(problem, options)?;
    let t = Instant::now();
    let (u, solve) = pcg_solve(&system, &options.solver)?;
    timings.solve = t.elapsed().as_secs_f64();
    let field = reconstruct_solution(&space, &system, &u);
    let t = Instant::now();
    let errors = match problem.exact {
        Some(_) => Some(compute_errors(&space, &field, problem, system.sigma)?),
        None => None,
    };
    timings.errors = t.elapsed().as_secs_f64();
    let warnings = space.warnings.clone();
    log::info!(
        "{} N={} dofs={} iterations={} setup={:.2}s solve={:.2}s",
        problem.name,
        options.n,
        system.n_dofs(),
        solve.iterations,
        timings.setup(),
        timings.solve
    );
    Ok(RunResult { space, system, field, solve, errors, timings, warnings })
}
