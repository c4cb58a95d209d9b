//! Preconditioned conjugate gradients, aggregation AMG and Lanczos spectrum
//! estimates.

mod amg;
mod lanczos;

use std::time::Instant;

pub use amg::{Amg, AmgOptions, Smoother};
pub use lanczos::{estimate_condition, lanczos_extreme, SpectrumEstimate};

use crate::assembly::SparseSystem;
use crate::error::{IfeError, Result};
use crate::sparse::{axpy, dot, norm, CsrMatrix};

pub trait Preconditioner: Sync {
    /// `z = M^-1 r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        Self { inv_diag: a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect() }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual tolerance `|b - Ax| / |b|`.
    pub tol: f64,
    pub max_iter: usize,
    /// AMG preconditioner; Jacobi otherwise.
    pub amg: bool,
    pub strength_threshold: f64,
    pub smoother: Smoother,
    pub smoother_sweeps: usize,
    /// Smooth the tentative prolongation.
    pub smoothed_aggregation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            amg: true,
            strength_threshold: 0.08,
            smoother: Smoother::GaussSeidel,
            smoother_sweeps: 2,
            smoothed_aggregation: false,
        }
    }
}

impl SolverConfig {
    pub fn amg_options(&self) -> AmgOptions {
        AmgOptions {
            strength_threshold: self.strength_threshold,
            smoother: self.smoother,
            smoother_sweeps: self.smoother_sweeps,
            smoothed: self.smoothed_aggregation,
            ..AmgOptions::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual_history: Vec<f64>,
    pub converged: bool,
    /// Preconditioner construction, seconds.
    pub setup_time: f64,
    /// Setup plus iterations, seconds.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.relative_residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Conjugate gradients on `A x = b` from `x`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = b.len();
    if a.n_rows != n || a.n_cols != n || x.len() != n {
        return Err(IfeError::InvalidArgument(format!(
            "dimension mismatch: matrix {}x{}, rhs {}, x {}",
            a.n_rows,
            a.n_cols,
            n,
            x.len()
        )));
    }
    let start = Instant::now();
    let bnorm = norm(b);
    let mut report = SolveReport::default();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.converged = true;
        report.relative_residual_history.push(0.0);
        return Ok(report);
    }
    let mut r = a.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let res0 = norm(&r) / bnorm;
    report.relative_residual_history.push(res0);
    if res0 <= tol {
        report.converged = true;
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(IfeError::Indefinite { iteration: it, curvature: pap });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let res = norm(&r) / bnorm;
        report.relative_residual_history.push(res);
        report.iterations = it;
        if res <= tol {
            report.converged = true;
            break;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Solves an assembled system from a zero initial guess.
pub fn pcg_solve(system: &SparseSystem, config: &SolverConfig) -> Result<(Vec<f64>, SolveReport)> {
    solve_matrix(&system.matrix, &system.rhs, config)
}

pub fn solve_matrix(a: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let precond: Box<dyn Preconditioner> =
        if config.amg { Box::new(Amg::new(a, &config.amg_options())?) } else { Box::new(Jacobi::new(a)) };
    let setup = start.elapsed().as_secs_f64();
    let mut x = vec![0.0; b.len()];
    let mut report = pcg(a, b, &mut x, precond.as_ref(), config.tol, config.max_iter)?;
    report.setup_time = setup;
    report.wall_time += setup;
    if !report.converged {
        log::warn!(
            "PCG stopped after {} iterations at relative residual {:e}",
            report.iterations,
            report.final_residual()
        );
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn poisson_7pt(m: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize, k: usize| i + m * (j + m * k);
        let mut t = Vec::new();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let p = idx(i, j, k);
                    t.push((p, p, 6.0));
                    if i > 0 {
                        t.push((p, idx(i - 1, j, k), -1.0));
                    }
                    if i + 1 < m {
                        t.push((p, idx(i + 1, j, k), -1.0));
                    }
                    if j > 0 {
                        t.push((p, idx(i, j - 1, k), -1.0));
                    }
                    if j + 1 < m {
                        t.push((p, idx(i, j + 1, k), -1.0));
                    }
                    if k > 0 {
                        t.push((p, idx(i, j, k - 1), -1.0));
                    }
                    if k + 1 < m {
                        t.push((p, idx(i, j, k + 1), -1.0));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(m * m * m, m * m * m, &t).unwrap()
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = CsrMatrix::identity(10);
        let b: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let (x, rep) = solve_matrix(&a, &b, &SolverConfig::default()).unwrap();
        assert!(rep.converged && rep.iterations <= 1);
        assert_eq!(x, b);
    }

    #[test]
    fn jacobi_on_diagonal_matches_plain_cg() {
        let n = 30;
        let t: Vec<_> = (0..n).map(|i| (i, i, (i + 1) as f64)).collect();
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b = vec![1.0; n];
        let cfg = SolverConfig { amg: false, ..SolverConfig::default() };
        let (x, rep) = solve_matrix(&a, &b, &cfg).unwrap();
        // Jacobi is exact on a diagonal matrix
        assert_eq!(rep.iterations, 1);
        for i in 0..n {
            assert!((x[i] - 1.0 / (i + 1) as f64).abs() < 1e-12);
        }
        // unpreconditioned CG needs one step per distinct eigenvalue
        let mut x = vec![0.0; n];
        let plain = pcg(&a, &b, &mut x, &IdentityPreconditioner, 1e-8, 200).unwrap();
        assert!(plain.converged && plain.iterations <= n);
        let kappa = n as f64;
        let bound = (0.5 * kappa.sqrt() * (2.0 / 1e-8f64).ln()).ceil() as usize;
        assert!(plain.iterations <= bound);
    }

    #[test]
    fn indefinite_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        let cfg = SolverConfig { amg: false, ..SolverConfig::default() };
        let mut x = vec![0.0; 2];
        let err = pcg(&a, &[0.0, 1.0], &mut x, &IdentityPreconditioner, 1e-8, 10).unwrap_err();
        assert!(matches!(err, IfeError::Indefinite { .. }));
        assert!(solve_matrix(&a, &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn zero_rhs() {
        let a = poisson_7pt(3);
        let (x, rep) = solve_matrix(&a, &vec![0.0; 27], &SolverConfig::default()).unwrap();
        assert!(rep.converged && x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_history_terminates_below_tol() {
        let a = poisson_7pt(8);
        let b: Vec<f64> = (0..512).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let (x, rep) = solve_matrix(&a, &b, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.final_residual() <= 1e-8);
        let r = a.matvec(&x);
        let res = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / norm(&b);
        assert!(res <= 1.0001e-8);
    }
}
