//! Extreme eigenvalues of SPD matrices.
//!
//! `lambda_max` comes from Lanczos on `A`; `lambda_min` from Lanczos on
//! `A^-1`, each application being a tight PCG solve (inverse iteration
//! accelerated by Krylov subspace). Both use full reorthogonalization and a
//! start vector drawn from a ChaCha stream seeded with 42.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pcg, Amg, AmgOptions, Preconditioner};
use crate::error::{IfeError, Result};
use crate::sparse::{dot, norm, CsrMatrix};

pub const SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub kappa: f64,
    /// Lanczos steps spent on both ends together.
    pub lanczos_steps: usize,
}

/// Largest Ritz value of the symmetric operator `op` on `R^n`, stopping when
/// it changes by less than `rel_tol` relative between steps. Returns the value
/// and the number of steps.
pub fn lanczos_extreme(
    n: usize,
    max_steps: usize,
    rel_tol: f64,
    op: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
) -> Result<(f64, usize)> {
    if n == 0 {
        return Err(IfeError::InvalidArgument("empty operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut prev = f64::NAN;
    let steps = max_steps.min(n).max(1);
    for k in 0..steps {
        op(&basis[k], &mut w)?;
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let b = norm(&w);
        let ritz = largest_ritz(&alpha, &beta);
        let done = k + 1 == steps || b <= 1e-14 * ritz.abs().max(f64::MIN_POSITIVE);
        if done || (prev.is_finite() && (ritz - prev).abs() <= rel_tol * ritz.abs()) {
            return Ok((ritz, k + 1));
        }
        prev = ritz;
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    unreachable!()
}

fn largest_ritz(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    SymmetricEigen::new(t).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Extreme eigenvalues of an SPD matrix with at most `steps` Lanczos steps
/// per end.
pub fn estimate_condition(a: &CsrMatrix, steps: usize) -> Result<SpectrumEstimate> {
    let n = a.n_rows;
    if n != a.n_cols {
        return Err(IfeError::InvalidArgument("matrix is not square".into()));
    }
    let rel_tol = 1e-5;
    let (lambda_max, s1) = lanczos_extreme(n, steps, rel_tol, &mut |x, y| {
        a.matvec_into(x, y);
        Ok(())
    })?;
    let amg = Amg::new(a, &AmgOptions::default())?;
    let precond: &dyn Preconditioner = &amg;
    let (mu, s2) = lanczos_extreme(n, steps, rel_tol, &mut |x, y| {
        y.iter_mut().for_each(|v| *v = 0.0);
        let rep = pcg(a, x, y, precond, 1e-12, 10 * n.max(100))?;
        if !rep.converged {
            return Err(IfeError::Internal(format!(
                "inner solve stalled at relative residual {:e}",
                rep.final_residual()
            )));
        }
        Ok(())
    })?;
    if !(mu > 0.0) || !(lambda_max > 0.0) {
        return Err(IfeError::Indefinite { iteration: s1 + s2, curvature: mu.min(lambda_max) });
    }
    let lambda_min = 1.0 / mu;
    Ok(SpectrumEstimate { lambda_max, lambda_min, kappa: lambda_max / lambda_min, lanczos_steps: s1 + s2 })
}

#[cfg(test)]
mod tests {
    use super::super::tests::poisson_7pt;
    use super::*;

    #[test]
    fn identity_has_unit_condition() {
        let s = estimate_condition(&CsrMatrix::identity(50), 50).unwrap();
        assert!((s.kappa - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_by_two_diagonal() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 10.0)]).unwrap();
        let s = estimate_condition(&a, 10).unwrap();
        assert!((s.kappa - 10.0).abs() < 1e-6, "{}", s.kappa);
    }

    #[test]
    fn poisson_matches_closed_form() {
        let m = 12;
        let a = poisson_7pt(m);
        let s = estimate_condition(&a, 200).unwrap();
        let th = std::f64::consts::PI / (m + 1) as f64;
        let lmin = 3.0 * (2.0 - 2.0 * th.cos());
        let lmax = 3.0 * (2.0 + 2.0 * th.cos());
        assert!((s.lambda_min - lmin).abs() < 1e-3 * lmin, "{} {}", s.lambda_min, lmin);
        assert!((s.lambda_max - lmax).abs() < 1e-3 * lmax, "{} {}", s.lambda_max, lmax);
    }

    #[test]
    fn deterministic() {
        let a = poisson_7pt(7);
        assert_eq!(estimate_condition(&a, 100).unwrap(), estimate_condition(&a, 100).unwrap());
    }
}
