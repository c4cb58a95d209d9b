//! The four studies and their `--check` gates.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use ife_core::assembly::compare_with_p1;
use ife_core::pipeline::{build_system, solve_problem, RunResult};
use ife_core::solver::estimate_condition;
use ife_core::{IfeSpace, ProblemSpec, SparseSystem};

use crate::config::{RunConfig, Study};
use crate::report::{self, ConditionRow, SolveRow};

pub const PATCH_LIMIT: f64 = 1e-9;
pub const L2_ORDER: f64 = 1.8;
pub const H1_ORDER: f64 = 0.85;
pub const KAPPA_RATIO: (f64, f64) = (3.0, 5.0);
pub const MAX_ITERATIONS: usize = 40;
pub const MAX_SPREAD: usize = 5;
pub const SYMMETRY_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Default)]
struct Gates {
    enabled: bool,
    checks: Vec<Check>,
}

impl Gates {
    fn push(&mut self, name: impl Into<String>, pass: bool, detail: String) {
        if self.enabled {
            self.checks.push(Check { name: name.into(), pass, detail });
        }
    }

    /// Same P1 sparsity pattern and a symmetric matrix.
    fn structure(&mut self, label: &str, space: &IfeSpace, system: &SparseSystem) {
        if !self.enabled {
            return;
        }
        let (extra, missing) = compare_with_p1(space, &system.matrix);
        let sym = system.matrix.symmetry_defect();
        self.push(
            format!("{label} structure"),
            extra.is_empty() && missing.is_empty() && sym <= SYMMETRY_LIMIT,
            format!(
                "{} entries outside the P1 pattern, {} P1 entries missing, symmetry defect {sym:.1e}",
                extra.len(),
                missing.len()
            ),
        );
    }
}

/// Runs the configured study, writing artifacts to `out` and the summary to
/// `stdout`. Gates are evaluated only with `check`.
pub fn run(config: &RunConfig, out: &Path, check: bool, stdout: &mut impl Write) -> Result<Vec<Check>> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut gates = Gates { enabled: check, ..Default::default() };
    let timings = config.output.record_timings;
    writeln!(stdout, "{} study, problem {}", config.study.name(), config.problem.name)?;
    match config.study {
        Study::Solve | Study::Convergence => {
            let problem = config.problem()?;
            let rows = solve_series(config, &problem, None, out, &mut gates)?;
            let path = out.join(format!("{}.csv", config.study.name()));
            report::write_solve_csv(&path, &rows, timings)?;
            report::print_solve_table(stdout, &rows, timings)?;
            if config.study == Study::Convergence && problem.name != "patch_test" {
                order_gate(&mut gates, "", &rows, true);
            }
        }
        Study::EpsilonRobustness => {
            let mut rows = Vec::new();
            for &eps in &config.robustness.epsilons {
                let problem = config.problem_with(Some(eps))?;
                let series = solve_series(config, &problem, Some(eps), out, &mut gates)?;
                order_gate(&mut gates, &format!("epsilon {eps:e} "), &series, false);
                rows.extend(series);
            }
            report::write_solve_csv(&out.join("robustness.csv"), &rows, timings)?;
            report::print_solve_table(stdout, &rows, timings)?;
            let max = rows.iter().map(|r| r.iterations).max().unwrap_or(0);
            gates.push("iterations bounded", max <= MAX_ITERATIONS, format!("max {max} (limit {MAX_ITERATIONS})"));
            let spread = config
                .mesh
                .ns
                .iter()
                .map(|&n| {
                    let its: Vec<usize> = rows.iter().filter(|r| r.n == n).map(|r| r.iterations).collect();
                    its.iter().max().unwrap() - its.iter().min().unwrap()
                })
                .max()
                .unwrap_or(0);
            gates.push("iterations flat in epsilon", spread <= MAX_SPREAD, format!("spread {spread} (limit {MAX_SPREAD})"));
        }
        Study::Conditioning => {
            let rows = conditioning(config, &mut gates)?;
            report::write_condition_csv(&out.join("conditioning.csv"), &rows)?;
            report::print_condition_table(stdout, &rows)?;
            conditioning_gates(&mut gates, &rows, &config.conditioning.rhos);
        }
    }
    Ok(gates.checks)
}

fn solve_series(
    config: &RunConfig,
    problem: &ProblemSpec,
    epsilon: Option<f64>,
    out: &Path,
    gates: &mut Gates,
) -> Result<Vec<SolveRow>> {
    let mut rows = Vec::new();
    for &n in &config.mesh.ns {
        let label = match epsilon {
            Some(e) => format!("epsilon {e:e} N={n}"),
            None => format!("N={n}"),
        };
        let options = config.run_options(n)?;
        let run: RunResult = solve_problem(problem, &options).with_context(|| format!("{} {label}", problem.name))?;
        for w in &run.warnings {
            log::warn!("{label}: {w}");
        }
        if !run.solve.converged {
            log::warn!("{label}: solver stopped after {} iterations", run.solve.iterations);
        }
        gates.push(
            format!("{label} solver"),
            run.solve.converged,
            format!("{} iterations, residual {:.1e}", run.solve.iterations, run.solve.final_residual()),
        );
        gates.structure(&label, &run.space, &run.system);
        let errors = run.errors.as_ref().map(|e| [e.l2_error, e.h1_seminorm_error, e.linf_error, e.energy_error]);
        if problem.name == "patch_test" {
            if let Some(e) = errors {
                let worst = e[0].max(e[1]).max(e[2]);
                gates.push(format!("{label} patch test"), worst <= PATCH_LIMIT, format!("max error {worst:.2e} (limit {PATCH_LIMIT:e})"));
            }
        }
        let tag = match epsilon {
            Some(e) => format!("eps{e:e}_N{n}"),
            None => format!("N{n}"),
        };
        report::write_run_files(out, &tag, problem, &run, config.output.vtk, config.output.surface_map)?;
        rows.push(SolveRow {
            epsilon,
            n,
            h: run.space.mesh.h(),
            dofs: run.system.n_dofs(),
            errors,
            iterations: run.solve.iterations,
            assemble_s: run.timings.setup(),
            solve_s: run.timings.solve,
        });
    }
    Ok(rows)
}

/// Orders between the two finest meshes of the series.
fn order_gate(gates: &mut Gates, prefix: &str, rows: &[SolveRow], with_h1: bool) {
    if rows.len() < 2 {
        return;
    }
    let Some(o) = report::orders(rows, rows.len() - 1) else {
        return;
    };
    let pass = o[0] >= L2_ORDER && (!with_h1 || o[1] >= H1_ORDER);
    let detail = if with_h1 {
        format!("l2 {:.2} (min {L2_ORDER}), h1 {:.2} (min {H1_ORDER})", o[0], o[1])
    } else {
        format!("l2 {:.2} (min {L2_ORDER})", o[0])
    };
    gates.push(format!("{prefix}convergence order"), pass, detail);
}

fn conditioning(config: &RunConfig, gates: &mut Gates) -> Result<Vec<ConditionRow>> {
    let mut rows = Vec::new();
    for &n in &config.mesh.ns {
        for &rho in &config.conditioning.rhos {
            let label = format!("N={n} rho={rho:e}");
            let problem = config.problem_with_ratio(rho)?;
            let (space, system, _) = build_system(&problem, &config.run_options(n)?).with_context(|| label.clone())?;
            gates.structure(&label, &space, &system);
            let s = estimate_condition(&system.matrix, config.conditioning.lanczos_steps).with_context(|| label.clone())?;
            gates.push(format!("{label} positive definite"), s.lambda_min > 0.0, format!("lambda_min {:.3e}", s.lambda_min));
            rows.push(ConditionRow {
                n,
                rho,
                dofs: system.n_dofs(),
                lambda_min: s.lambda_min,
                lambda_max: s.lambda_max,
                kappa: s.kappa,
                lanczos_steps: s.lanczos_steps,
            });
        }
    }
    Ok(rows)
}

fn conditioning_gates(gates: &mut Gates, rows: &[ConditionRow], rhos: &[f64]) {
    for &rho in rhos {
        let series: Vec<&ConditionRow> = rows.iter().filter(|r| r.rho == rho).collect();
        for w in series.windows(2) {
            if w[1].n == 2 * w[0].n {
                let ratio = w[1].kappa / w[0].kappa;
                gates.push(
                    format!("rho={rho:e} kappa N={} / N={}", w[1].n, w[0].n),
                    (KAPPA_RATIO.0..=KAPPA_RATIO.1).contains(&ratio),
                    format!("ratio {ratio:.3} (want [{}, {}])", KAPPA_RATIO.0, KAPPA_RATIO.1),
                );
            }
        }
    }
    if rhos.len() > 1 {
        let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        ns.dedup();
        for n in ns {
            let ks: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.kappa).collect();
            let list = ks.iter().map(|k| format!("{k:.3e}")).collect::<Vec<_>>().join(", ");
            gates.push(format!("N={n} kappa monotone in rho"), ks.windows(2).all(|w| w[1] >= w[0]), format!("kappa {list}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crow(n: usize, rho: f64, kappa: f64) -> ConditionRow {
        ConditionRow { n, rho, dofs: 1, lambda_min: 1.0, lambda_max: kappa, kappa, lanczos_steps: 10 }
    }

    #[test]
    fn conditioning_gates_check_ratio_and_monotonicity() {
        let mut g = Gates { enabled: true, ..Default::default() };
        let rows = [crow(8, 1.0, 10.0), crow(8, 10.0, 20.0), crow(16, 1.0, 40.0), crow(16, 10.0, 15.0)];
        conditioning_gates(&mut g, &rows, &[1.0, 10.0]);
        let pass: Vec<(String, bool)> = g.checks.iter().map(|c| (c.name.clone(), c.pass)).collect();
        assert_eq!(
            pass,
            vec![
                ("rho=1e0 kappa N=16 / N=8".to_string(), true),
                ("rho=1e1 kappa N=16 / N=8".to_string(), false),
                ("N=8 kappa monotone in rho".to_string(), true),
                ("N=16 kappa monotone in rho".to_string(), false),
            ]
        );
    }

    #[test]
    fn disabled_gates_record_nothing() {
        let mut g = Gates::default();
        g.push("x", false, String::new());
        assert!(g.checks.is_empty());
    }
}
