//! CSV tables, per-run VTK and surface files, and the printed summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use ife_core::geometry::ElementTag;
use ife_core::io::{write_interface_vtk, write_mesh_vtk, write_surface_csv, write_surface_vtk};
use ife_core::pipeline::RunResult;
use ife_core::postprocess::{observed_order, surface_error_map};
use ife_core::ProblemSpec;

/// One solved mesh of a solve, convergence or robustness study.
#[derive(Debug, Clone)]
pub struct SolveRow {
    pub epsilon: Option<f64>,
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    /// `[l2, h1, linf, energy]` when the exact solution is known.
    pub errors: Option<[f64; 4]>,
    pub iterations: usize,
    pub assemble_s: f64,
    pub solve_s: f64,
}

/// One matrix of a conditioning study.
#[derive(Debug, Clone)]
pub struct ConditionRow {
    pub n: usize,
    pub rho: f64,
    pub dofs: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub lanczos_steps: usize,
}

/// Observed `[l2, h1]` orders of `rows[k]` against the previous row of the same series.
pub fn orders(rows: &[SolveRow], k: usize) -> Option<[f64; 2]> {
    let prev = rows[..k].iter().rev().find(|r| r.epsilon == rows[k].epsilon)?;
    let (a, b) = (prev.errors?, rows[k].errors?);
    Some([observed_order(a[0], b[0], prev.h, rows[k].h), observed_order(a[1], b[1], prev.h, rows[k].h)])
}

fn num(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn write_solve_csv(path: &Path, rows: &[SolveRow], record_timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let robustness = rows.iter().any(|r| r.epsilon.is_some());
    let mut header = vec![];
    if robustness {
        header.push("epsilon");
    }
    header.extend([
        "N", "h", "dofs", "l2", "h1", "linf", "energy", "l2_order", "h1_order", "iterations", "assemble_s", "solve_s",
    ]);
    w.write_record(&header)?;
    for (k, r) in rows.iter().enumerate() {
        let mut rec = Vec::new();
        if robustness {
            rec.push(r.epsilon.map(|e| format!("{e:e}")).unwrap_or_default());
        }
        rec.extend([r.n.to_string(), num(r.h), r.dofs.to_string()]);
        match r.errors {
            Some(e) => rec.extend(e.iter().map(|v| num(*v))),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        match orders(rows, k) {
            Some(o) => rec.extend(o.iter().map(|v| format!("{v:.4}"))),
            None => rec.extend([String::new(), String::new()]),
        }
        rec.push(r.iterations.to_string());
        if record_timings {
            rec.extend([format!("{:.4}", r.assemble_s), format!("{:.4}", r.solve_s)]);
        } else {
            rec.extend([String::new(), String::new()]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_condition_csv(path: &Path, rows: &[ConditionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["N", "rho", "dofs", "lambda_min", "lambda_max", "kappa", "lanczos_steps"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:e}", r.rho),
            r.dofs.to_string(),
            num(r.lambda_min),
            num(r.lambda_max),
            num(r.kappa),
            r.lanczos_steps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

/// Solution on the mesh, the discrete interface and, with `surface`, the
/// interface error samples. Files are named `<kind>_<tag>.<ext>`.
pub fn write_run_files(dir: &Path, tag: &str, problem: &ProblemSpec, run: &RunResult, vtk: bool, surface: bool) -> Result<()> {
    let space = &run.space;
    if vtk {
        let tags: Vec<f64> = space
            .classification
            .tags
            .iter()
            .map(|t| match t {
                ElementTag::Minus => 0.0,
                ElementTag::Plus => 1.0,
                ElementTag::Interface => 2.0,
            })
            .collect();
        let mut point: Vec<(&str, &[f64])> = vec![("u_h", &run.field.nodal)];
        let exact: Vec<f64>;
        let error: Vec<f64>;
        if let Some(ex) = &problem.exact {
            exact = space
                .mesh
                .nodes
                .iter()
                .zip(&space.classification.node_sides)
                .map(|(x, s)| ex.value(*s, x))
                .collect();
            error = exact.iter().zip(&run.field.nodal).map(|(a, b)| b - a).collect();
            point.push(("u", &exact));
            point.push(("error", &error));
        }
        let mut w = create(&dir.join(format!("solution_{tag}.vtk")))?;
        write_mesh_vtk(&mut w, &space.mesh, &point, &[("region", &tags)])?;
        w.flush()?;
        let mut w = create(&dir.join(format!("interface_{tag}.vtk")))?;
        write_interface_vtk(&mut w, &space.cuts, None)?;
        w.flush()?;
    }
    if surface && problem.exact.is_some() {
        let samples = surface_error_map(space, &run.field, problem)?;
        let mut w = create(&dir.join(format!("surface_{tag}.csv")))?;
        write_surface_csv(&mut w, &samples)?;
        w.flush()?;
        let mut w = create(&dir.join(format!("surface_{tag}.vtk")))?;
        write_surface_vtk(&mut w, &samples)?;
        w.flush()?;
    }
    Ok(())
}

fn opt(v: Option<f64>, width: usize) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:>width$.2}"),
        _ => format!("{:>width$}", "-"),
    }
}

pub fn print_solve_table(out: &mut impl Write, rows: &[SolveRow], record_timings: bool) -> std::io::Result<()> {
    let robustness = rows.iter().any(|r| r.epsilon.is_some());
    if robustness {
        write!(out, "{:>8} ", "epsilon")?;
    }
    write!(out, "{:>4} {:>9} {:>8} {:>10} {:>5} {:>10} {:>5} {:>10} {:>5}", "N", "h", "dofs", "l2", "ord", "h1", "ord", "linf", "its")?;
    if record_timings {
        write!(out, " {:>9} {:>9}", "assemble", "solve")?;
    }
    writeln!(out)?;
    for (k, r) in rows.iter().enumerate() {
        if robustness {
            write!(out, "{:>8} ", r.epsilon.map(|e| format!("{e:.0e}")).unwrap_or_default())?;
        }
        let e = |i: usize| r.errors.map(|e| format!("{:>10.3e}", e[i])).unwrap_or_else(|| format!("{:>10}", "-"));
        let o = orders(rows, k);
        write!(
            out,
            "{:>4} {:>9.3e} {:>8} {} {} {} {} {} {:>5}",
            r.n,
            r.h,
            r.dofs,
            e(0),
            opt(o.map(|o| o[0]), 5),
            e(1),
            opt(o.map(|o| o[1]), 5),
            e(2),
            r.iterations
        )?;
        if record_timings {
            write!(out, " {:>8.3}s {:>8.3}s", r.assemble_s, r.solve_s)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn print_condition_table(out: &mut impl Write, rows: &[ConditionRow]) -> std::io::Result<()> {
    writeln!(out, "{:>4} {:>8} {:>8} {:>11} {:>11} {:>11}", "N", "rho", "dofs", "lambda_min", "lambda_max", "kappa")?;
    for r in rows {
        writeln!(
            out,
            "{:>4} {:>8} {:>8} {:>11.4e} {:>11.4e} {:>11.4e}",
            r.n,
            format!("{:e}", r.rho),
            r.dofs,
            r.lambda_min,
            r.lambda_max,
            r.kappa
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eps: Option<f64>, n: usize, l2: f64) -> SolveRow {
        SolveRow {
            epsilon: eps,
            n,
            h: 1.0 / n as f64,
            dofs: n,
            errors: Some([l2, l2.sqrt(), l2, l2]),
            iterations: 3,
            assemble_s: 0.5,
            solve_s: 0.25,
        }
    }

    #[test]
    fn orders_follow_each_series() {
        let rows = [row(Some(0.1), 8, 4e-2), row(Some(0.1), 16, 1e-2), row(Some(1e-6), 8, 1.0), row(Some(1e-6), 16, 0.5)];
        assert!(orders(&rows, 0).is_none());
        let o = orders(&rows, 1).unwrap();
        assert!((o[0] - 2.0).abs() < 1e-12 && (o[1] - 1.0).abs() < 1e-12);
        assert!(orders(&rows, 2).is_none());
        assert!((orders(&rows, 3).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_columns_and_blank_timings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_solve_csv(&path, &[row(None, 8, 4e-2), row(None, 16, 1e-2)], false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "N,h,dofs,l2,h1,linf,energy,l2_order,h1_order,iterations,assemble_s,solve_s");
        assert!(lines[1].ends_with(",,,3,,"), "{}", lines[1]);
        assert!(lines[2].contains(",2.0000,1.0000,3,,"), "{}", lines[2]);
        write_solve_csv(&path, &[row(Some(0.1), 8, 4e-2)], true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epsilon,N,"));
        assert!(text.lines().nth(1).unwrap().ends_with(",3,0.5000,0.2500"));
    }
}
