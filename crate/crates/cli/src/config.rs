//! Run configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! study = "convergence"        # solve | convergence | conditioning | epsilon_robustness
//!
//! [problem]
//! name = "example1"            # example1 | example2 | example3 | patch_test | custom
//! beta_minus = 1.0
//! beta_plus = 100.0
//!
//! [mesh]
//! ns = [8, 16, 32]
//! subdivision = "six_tet"      # or five_tet
//! ```
//!
//! Optional sections: `[assembly]`, `[solver]`, `[conditioning]`,
//! `[robustness]`, `[output]`; custom problems add `[problem.interface]`,
//! `[problem.domain]` and `[problem.custom]`. See `configs/` for complete files.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use ife_core::enrichment::{FluxJump, JumpData, ScalarField, Smoothness, VectorField};
use ife_core::levelset::{self, FnLevelSet};
use ife_core::pipeline::RunOptions;
use ife_core::solver::Smoother;
use ife_core::{AssemblyParams, BoxDomain, EnrichmentMode, LevelSet, ProblemSpec, SolverConfig, Subdivision, Vec3};
use serde::Deserialize;

use crate::expr::Formula;

pub const SCHEMA_VERSION: u32 = 1;

pub const BUILTIN_PROBLEMS: [&str; 4] = ["example1", "example2", "example3", "patch_test"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Solve,
    Convergence,
    Conditioning,
    EpsilonRobustness,
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::Solve => "solve",
            Study::Convergence => "convergence",
            Study::Conditioning => "conditioning",
            Study::EpsilonRobustness => "epsilon_robustness",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub study: Study,
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub assembly: AssemblyConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub conditioning: ConditioningConfig,
    #[serde(default)]
    pub robustness: RobustnessConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    /// Interface location parameter of `example3`.
    pub epsilon: Option<f64>,
    pub domain: Option<DomainConfig>,
    pub interface: Option<InterfaceConfig>,
    pub custom: Option<CustomConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

/// Either a built-in level set (`name`, `params`) or a formula `expression`
/// in x, y, z that is negative inside.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    pub name: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    pub expression: Option<String>,
}

/// Exact pieces `u_minus`, `u_plus` (data derived from them), or raw data
/// `f_minus`, `f_plus`, `g`, `q1`, `q2`. `q2` may use nx, ny, nz, the unit
/// normal pointing to the plus side.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    pub u_minus: Option<String>,
    pub u_plus: Option<String>,
    pub f_minus: Option<String>,
    pub f_plus: Option<String>,
    pub g: Option<String>,
    pub q1: Option<String>,
    pub q2: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub ns: Vec<usize>,
    #[serde(default = "default_subdivision")]
    pub subdivision: String,
}

fn default_subdivision() -> String {
    "six_tet".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyConfig {
    /// Defaults to `10 * max(beta)`.
    pub sigma: Option<f64>,
    pub enrichment: String,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self { sigma: None, enrichment: "pointwise".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub amg: bool,
    pub strength_threshold: f64,
    /// `gauss_seidel` or `jacobi`.
    pub smoother: String,
    pub smoother_sweeps: usize,
    pub smoothed_aggregation: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            amg: d.amg,
            strength_threshold: d.strength_threshold,
            smoother: "gauss_seidel".into(),
            smoother_sweeps: d.smoother_sweeps,
            smoothed_aggregation: d.smoothed_aggregation,
        }
    }
}

/// Jump ratios `rho = beta_plus / beta_minus`, with `beta_minus` from `[problem]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditioningConfig {
    pub rhos: Vec<f64>,
    pub lanczos_steps: usize,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        Self { rhos: vec![100.0], lanczos_steps: 400 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    pub epsilons: Vec<f64>,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self { epsilons: vec![1e-1, 1e-6] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    pub dir: String,
    /// Mesh solution and interface as legacy VTK, per run.
    pub vtk: bool,
    /// Interface error samples as CSV and VTK, per run.
    pub surface_map: bool,
    /// Wall-clock columns; leave them blank for byte-reproducible CSV.
    pub record_timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), vtk: false, surface_map: false, record_timings: true }
    }
}

/// 1-based line of `key` in `[section]` (empty section for the top level).
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            current = h.trim_end_matches(']').trim().to_string();
            if current == section && key.is_empty() {
                return Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&src).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(src: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(src).map_err(|e| anyhow!("{e}"))?;
        config.validate().map_err(|(section, key, msg)| {
            let field = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            match locate(src, section, key).or_else(|| locate(src, section, "")) {
                Some(line) => anyhow!("line {line}, field `{field}`: {msg}"),
                None => anyhow!("field `{field}`: {msg}"),
            }
        })?;
        Ok(config)
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(("", "schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let ns = &self.mesh.ns;
        if ns.is_empty() {
            return Err(("mesh", "ns", "at least one N is required".into()));
        }
        if ns[0] == 0 {
            return Err(("mesh", "ns", "N must be positive".into()));
        }
        if ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(("mesh", "ns", format!("must be strictly increasing, got {ns:?}")));
        }
        if self.study == Study::Convergence && ns.len() < 2 {
            return Err(("mesh", "ns", "a convergence study needs at least two meshes".into()));
        }
        self.subdivision().map_err(|e| ("mesh", "subdivision", e.to_string()))?;
        self.enrichment().map_err(|e| ("assembly", "enrichment", e.to_string()))?;
        if let Some(s) = self.assembly.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(("assembly", "sigma", format!("must be positive, got {s}")));
            }
        }
        self.smoother().map_err(|e| ("solver", "smoother", e.to_string()))?;
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(("solver", "tol", format!("must lie in (0, 1), got {}", self.solver.tol)));
        }
        if self.solver.max_iter == 0 {
            return Err(("solver", "max_iter", "must be positive".into()));
        }

        let p = &self.problem;
        let custom = p.name == "custom";
        if !custom && !BUILTIN_PROBLEMS.contains(&p.name.as_str()) {
            return Err((
                "problem",
                "name",
                format!("unknown problem `{}` (expected {} or custom)", p.name, BUILTIN_PROBLEMS.join(", ")),
            ));
        }
        for (key, b) in [("beta_minus", p.beta_minus), ("beta_plus", p.beta_plus)] {
            if let Some(b) = b {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(("problem", key, format!("must be positive, got {b}")));
                }
            }
        }
        if p.epsilon.is_some() && p.name != "example3" {
            return Err(("problem", "epsilon", "only example3 takes epsilon".into()));
        }
        if !custom {
            for (key, present) in [
                ("domain", p.domain.is_some()),
                ("interface", p.interface.is_some()),
                ("custom", p.custom.is_some()),
            ] {
                if present {
                    return Err(("problem", key, format!("only custom problems take `{key}`; {} is fixed", p.name)));
                }
            }
        }
        match self.study {
            Study::Conditioning => {
                let rhos = &self.conditioning.rhos;
                if rhos.is_empty() || rhos.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(("conditioning", "rhos", format!("need positive jump ratios, got {rhos:?}")));
                }
                if rhos.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(("conditioning", "rhos", format!("must be strictly increasing, got {rhos:?}")));
                }
                if p.beta_plus.is_some() {
                    return Err(("problem", "beta_plus", "set by conditioning.rhos in a conditioning study".into()));
                }
                if self.conditioning.lanczos_steps < 2 {
                    return Err(("conditioning", "lanczos_steps", "must be at least 2".into()));
                }
            }
            Study::EpsilonRobustness => {
                if p.name != "example3" {
                    return Err(("problem", "name", "epsilon_robustness runs example3".into()));
                }
                if p.epsilon.is_some() {
                    return Err(("problem", "epsilon", "set by robustness.epsilons in this study".into()));
                }
                let eps = &self.robustness.epsilons;
                if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                    return Err(("robustness", "epsilons", format!("need positive values, got {eps:?}")));
                }
            }
            Study::Solve | Study::Convergence => {}
        }
        if custom {
            let c = p.custom.as_ref().ok_or(("problem", "custom", "custom problems need [problem.custom]".into()))?;
            if p.interface.is_none() {
                return Err(("problem", "interface", "custom problems need [problem.interface]".into()));
            }
            if self.study == Study::Convergence && c.u_minus.is_none() {
                return Err(("problem.custom", "u_minus", "a convergence study needs an exact solution".into()));
            }
            // formulas are checked by building the problem once
            self.problem_with(None).map_err(|e| ("problem", "custom", format!("{e:#}")))?;
        }
        Ok(())
    }

    pub fn subdivision(&self) -> Result<Subdivision> {
        Ok(self.mesh.subdivision.parse()?)
    }

    pub fn enrichment(&self) -> Result<EnrichmentMode> {
        Ok(self.assembly.enrichment.parse()?)
    }

    fn smoother(&self) -> Result<Smoother> {
        match self.solver.smoother.as_str() {
            "gauss_seidel" => Ok(Smoother::GaussSeidel),
            "jacobi" => Ok(Smoother::Jacobi),
            other => bail!("unknown smoother `{other}` (expected gauss_seidel or jacobi)"),
        }
    }

    pub fn run_options(&self, n: usize) -> Result<RunOptions> {
        let mut o = RunOptions::new(n);
        o.subdivision = self.subdivision()?;
        o.assembly = AssemblyParams { sigma: self.assembly.sigma, enrichment_mode: self.enrichment()?, ..o.assembly };
        o.solver = SolverConfig {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            amg: self.solver.amg,
            strength_threshold: self.solver.strength_threshold,
            smoother: self.smoother()?,
            smoother_sweeps: self.solver.smoother_sweeps,
            smoothed_aggregation: self.solver.smoothed_aggregation,
        };
        Ok(o)
    }

    pub fn betas(&self) -> (f64, f64) {
        (self.problem.beta_minus.unwrap_or(1.0), self.problem.beta_plus.unwrap_or(100.0))
    }

    /// The configured problem.
    pub fn problem(&self) -> Result<ProblemSpec> {
        self.problem_with(None)
    }

    /// The problem with `beta_plus = rho * beta_minus`.
    pub fn problem_with_ratio(&self, rho: f64) -> Result<ProblemSpec> {
        let bm = self.betas().0;
        self.build(bm, rho * bm, self.problem.epsilon)
    }

    /// The problem with epsilon replaced.
    pub fn problem_with(&self, epsilon: Option<f64>) -> Result<ProblemSpec> {
        let (bm, bp) = self.betas();
        self.build(bm, bp, epsilon.or(self.problem.epsilon))
    }

    fn build(&self, bm: f64, bp: f64, epsilon: Option<f64>) -> Result<ProblemSpec> {
        let p = &self.problem;
        if p.name != "custom" {
            return Ok(ProblemSpec::builtin(&p.name, Some((bm, bp)), epsilon)?);
        }
        let domain = match &p.domain {
            Some(d) => BoxDomain::new(Vec3::from(d.lo), Vec3::from(d.hi))?,
            None => BoxDomain::cube(-1.0, 1.0)?,
        };
        let ls = level_set(p.interface.as_ref().context("missing [problem.interface]")?, &domain)?;
        custom_problem(p.custom.as_ref().context("missing [problem.custom]")?, domain, ls, bm, bp)
    }
}

fn level_set(cfg: &InterfaceConfig, domain: &BoxDomain) -> Result<Arc<dyn LevelSet>> {
    match (&cfg.name, &cfg.expression) {
        (Some(name), None) => Ok(levelset::builtin(name, &cfg.params)?),
        (None, Some(text)) => {
            if !cfg.params.is_empty() {
                bail!("interface `params` only apply to a named level set");
            }
            let f = Arc::new(Formula::parse(text, 3)?);
            let g = f.gradient()?;
            let value = f.clone();
            let diameter = (domain.hi - domain.lo).norm();
            Ok(Arc::new(
                FnLevelSet::new(move |x: &Vec3| value.at(x), diameter)
                    .with_gradient(move |x: &Vec3| Vec3::new(g[0].at(x), g[1].at(x), g[2].at(x))),
            ))
        }
        _ => bail!("interface needs exactly one of `name` or `expression`"),
    }
}

fn scalar(f: Formula) -> ScalarField {
    Arc::new(move |x: &Vec3| f.at(x))
}

fn formula(text: &Option<String>, key: &str) -> Result<Formula> {
    Formula::parse(text.as_deref().unwrap_or("0"), 3).with_context(|| format!("`{key}`"))
}

fn custom_problem(c: &CustomConfig, domain: BoxDomain, ls: Arc<dyn LevelSet>, bm: f64, bp: f64) -> Result<ProblemSpec> {
    let exact = c.u_minus.is_some() || c.u_plus.is_some();
    let data = [&c.f_minus, &c.f_plus, &c.g, &c.q1, &c.q2].iter().any(|v| v.is_some());
    if exact && data {
        bail!("give either u_minus/u_plus or f_minus/f_plus/g/q1/q2, not both");
    }
    if exact {
        let (Some(_), Some(_)) = (&c.u_minus, &c.u_plus) else {
            bail!("both u_minus and u_plus are required");
        };
        let mut value: Vec<ScalarField> = Vec::new();
        let mut gradient: Vec<VectorField> = Vec::new();
        let mut laplacian: Vec<ScalarField> = Vec::new();
        for (text, key) in [(&c.u_minus, "u_minus"), (&c.u_plus, "u_plus")] {
            let u = formula(text, key)?;
            let g = u.gradient().with_context(|| format!("`{key}`"))?;
            let second = [g[0].partial(0)?, g[1].partial(1)?, g[2].partial(2)?];
            let g = Arc::new(g);
            gradient.push(Arc::new(move |x: &Vec3| Vec3::new(g[0].at(x), g[1].at(x), g[2].at(x))));
            laplacian.push(Arc::new(move |x: &Vec3| second.iter().map(|d| d.at(x)).sum()));
            value.push(scalar(u));
        }
        let pair = |v: Vec<ScalarField>| -> [ScalarField; 2] { [v[0].clone(), v[1].clone()] };
        return Ok(ProblemSpec::manufactured(
            "custom",
            domain,
            ls,
            bm,
            bp,
            pair(value),
            [gradient[0].clone(), gradient[1].clone()],
            pair(laplacian),
        )?);
    }
    if c.f_minus.is_none() && c.f_plus.is_none() {
        bail!("need u_minus/u_plus or f_minus/f_plus");
    }
    let q2 = Formula::parse(c.q2.as_deref().unwrap_or("0"), 6).context("`q2`")?;
    let spec = ProblemSpec {
        name: "custom".into(),
        domain,
        level_set: ls,
        beta_minus: bm,
        beta_plus: bp,
        source: [scalar(formula(&c.f_minus, "f_minus")?), scalar(formula(&c.f_plus, "f_plus")?)],
        boundary: scalar(formula(&c.g, "g")?),
        jumps: JumpData {
            q1: scalar(formula(&c.q1, "q1")?),
            q2: FluxJump::Scalar(Arc::new(move |x: &Vec3, n: &Vec3| q2.eval(x, n))),
            smoothness: Smoothness::PointwiseOk,
        },
        exact: None,
    };
    if !(bm > 0.0 && bp > 0.0) {
        bail!("coefficients must be positive");
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "schema_version = 1\nstudy = \"convergence\"\n[problem]\nname = \"example1\"\n[mesh]\nns = [4, 8]\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.study, Study::Convergence);
        assert_eq!(c.betas(), (1.0, 100.0));
        let o = c.run_options(4).unwrap();
        assert_eq!(o.solver, SolverConfig::default());
        assert_eq!(o.assembly, AssemblyParams::default());
        assert!(c.output.record_timings);
    }

    #[test]
    fn unknown_field_is_reported_with_line() {
        let src = format!("{BASE}colour = 3\n");
        let e = format!("{:#}", RunConfig::parse(&src).unwrap_err());
        assert!(e.contains("colour") && e.contains("line 7"), "{e}");
    }

    #[test]
    fn semantic_errors_point_at_the_field() {
        let src = BASE.replace("[4, 8]", "[8, 4]");
        let e = format!("{:#}", RunConfig::parse(&src).unwrap_err());
        assert!(e.contains("line 6") && e.contains("mesh.ns") && e.contains("strictly increasing"), "{e}");
        let src = BASE.replace("schema_version = 1", "schema_version = 7");
        assert!(format!("{:#}", RunConfig::parse(&src).unwrap_err()).contains("line 1"));
        let src = BASE.replace("example1", "example9");
        assert!(format!("{:#}", RunConfig::parse(&src).unwrap_err()).contains("unknown problem"));
        let src = format!("{BASE}[solver]\nsmoother = \"sor\"\n");
        assert!(format!("{:#}", RunConfig::parse(&src).unwrap_err()).contains("line 8"));
    }

    #[test]
    fn builtin_problems_reject_overrides() {
        let src = BASE.replace("name = \"example1\"", "name = \"example1\"\nepsilon = 0.1");
        assert!(RunConfig::parse(&src).is_err());
        let src = format!("{BASE}[problem.interface]\nname = \"sphere\"\nparams = [0.5]\n");
        assert!(RunConfig::parse(&src).is_err());
    }

    #[test]
    fn custom_manufactured_problem_derives_data() {
        let src = "schema_version = 1\nstudy = \"solve\"\n[problem]\nname = \"custom\"\nbeta_minus = 2.0\nbeta_plus = 3.0\n\
                   [problem.interface]\nexpression = \"x^2 + y^2 + z^2 - 0.25\"\n\
                   [problem.custom]\nu_minus = \"x^2 * y\"\nu_plus = \"z^3\"\n[mesh]\nns = [4]\n";
        let c = RunConfig::parse(src).unwrap();
        let p = c.problem().unwrap();
        let x = Vec3::new(0.1, 0.2, 0.3);
        assert!(((p.source[0])(&x) + 2.0 * 2.0 * 0.2).abs() < 1e-12);
        assert!(((p.source[1])(&x) + 3.0 * 6.0 * 0.3).abs() < 1e-12);
        assert!(((p.jumps.q1)(&x) - (0.027 - 0.002)).abs() < 1e-12);
        let n = Vec3::new(0.0, 0.0, 1.0);
        assert!((p.jumps.q2.eval(&x, &n) - 3.0 * 3.0 * 0.09).abs() < 1e-12);
        assert!((p.level_set.gradient(&x) - 2.0 * x).norm() < 1e-12);
    }

    #[test]
    fn custom_data_problem() {
        let src = "schema_version = 1\nstudy = \"solve\"\n[problem]\nname = \"custom\"\n\
                   [problem.interface]\nname = \"sphere\"\nparams = [0.5]\n\
                   [problem.custom]\nf_minus = \"1\"\nf_plus = \"0\"\nq2 = \"nx\"\n[mesh]\nns = [4]\n";
        let p = RunConfig::parse(src).unwrap().problem().unwrap();
        assert!(p.exact.is_none());
        assert_eq!(p.jumps.q2.eval(&Vec3::zeros(), &Vec3::new(0.6, 0.8, 0.0)), 0.6);
        let bad = src.replace("q2 = \"nx\"", "q2 = \"nx\"\nu_minus = \"x\"");
        assert!(RunConfig::parse(&bad).is_err());
        let bad = src.replace("q2 = \"nx\"", "q1 = \"nx\"");
        assert!(RunConfig::parse(&bad).is_err());
    }
}
