//! Aggregation-based algebraic multigrid used as a CG preconditioner.
//!
//! Coarsening groups strongly connected unknowns into aggregates; the
//! prolongation is piecewise constant over aggregates, optionally smoothed by
//! one damped Jacobi step. Coarse operators are Galerkin products. One V-cycle
//! with symmetric damped Jacobi smoothing is a symmetric positive definite
//! operator.

use nalgebra::DVector;
use rayon::prelude::*;

use super::Preconditioner;
use crate::error::{Result, Warning};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgOptions {
    pub strength_threshold: f64,
    pub smoother_sweeps: usize,
    pub omega: f64,
    /// Levels at or below this size are solved directly.
    pub coarse_size: usize,
    pub max_levels: usize,
    pub smoothed: bool,
    pub smoother: Smoother,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoother {
    /// Damped Jacobi, parallel.
    #[default]
    Jacobi,
    /// Forward Gauss-Seidel before the coarse correction, backward after.
    GaussSeidel,
}

impl Default for AmgOptions {
    fn default() -> Self {
        Self { strength_threshold: 0.08, smoother_sweeps: 1, omega: 2.0 / 3.0, coarse_size: 200, max_levels: 25, smoothed: false, smoother: Smoother::Jacobi }
    }
}

struct Level {
    a: CsrMatrix,
    /// `w D^-1` with the damping `w` of this level.
    inv_diag: Vec<f64>,
    diag: Vec<f64>,
    /// Prolongation from the next coarser level.
    p: CsrMatrix,
    r: CsrMatrix,
}

enum CoarseSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    /// Fallback for a large truncated hierarchy: a fixed number of smoothing sweeps.
    Sweeps { a: CsrMatrix, inv_diag: Vec<f64>, sweeps: usize },
}

pub struct Amg {
    levels: Vec<Level>,
    coarse: CoarseSolver,
    options: AmgOptions,
    pub warnings: Vec<Warning>,
}

/// Aggregate index of every unknown.
pub(crate) fn aggregate(a: &CsrMatrix, theta: f64) -> (Vec<usize>, usize) {
    let n = a.n_rows;
    let diag = a.diagonal();
    let strong: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(|&(&j, &v)| j != i && -v >= theta * (diag[i] * diag[j]).abs().sqrt() && v != 0.0)
                .map(|(&j, _)| j)
                .collect()
        })
        .collect();
    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    // phase 1: seeds whose whole strong neighbourhood is free
    for i in 0..n {
        if agg[i] != NONE || strong[i].is_empty() {
            continue;
        }
        if strong[i].iter().all(|&j| agg[j] == NONE) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    // phase 2: attach to a neighbouring phase-1 aggregate
    let snapshot = agg.clone();
    for i in 0..n {
        if agg[i] != NONE {
            continue;
        }
        let (cols, vals) = a.row(i);
        let best = cols
            .iter()
            .zip(vals)
            .filter(|&(&j, _)| snapshot[j] != NONE && strong[i].contains(&j))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(&j, _)| snapshot[j]);
        if let Some(k) = best {
            agg[i] = k;
        }
    }
    // phase 3: leftovers
    for i in 0..n {
        if agg[i] != NONE {
            continue;
        }
        agg[i] = count;
        for &j in &strong[i] {
            if agg[j] == NONE {
                agg[j] = count;
            }
        }
        count += 1;
    }
    (agg, count)
}

fn inv_diag(a: &CsrMatrix) -> Vec<f64> {
    a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 }).collect()
}

/// Upper estimate of the spectral radius of `D^-1 A` from a short Lanczos run
/// on the symmetrically scaled matrix.
pub(crate) fn jacobi_radius(a: &CsrMatrix, dinv: &[f64]) -> f64 {
    let s: Vec<f64> = dinv.iter().map(|d| d.abs().sqrt()).collect();
    let mut t = vec![0.0; a.n_rows];
    let est = super::lanczos_extreme(a.n_rows, 20, 1e-3, &mut |x, y| {
        for i in 0..x.len() {
            t[i] = x[i] * s[i];
        }
        a.matvec_into(&t, y);
        y.iter_mut().zip(&s).for_each(|(v, si)| *v *= si);
        Ok(())
    });
    est.map(|(r, _)| 1.05 * r).unwrap_or(2.0)
}

/// Damped Jacobi converges only for `w rho < 2`; the nominal damping is
/// capped at `4 / (3 rho)` so that the V-cycle stays positive definite.
fn damped(mut dinv: Vec<f64>, omega: f64, rho: f64) -> Vec<f64> {
    let w = omega.min(4.0 / (3.0 * rho));
    dinv.iter_mut().for_each(|d| *d *= w);
    dinv
}

fn tentative(n: usize, agg: &[usize], n_coarse: usize) -> CsrMatrix {
    CsrMatrix { n_rows: n, n_cols: n_coarse, indptr: (0..=n).collect(), indices: agg.to_vec(), values: vec![1.0; n] }
}

/// `(I - w D^-1 A) P`.
fn smooth_prolongation(a: &CsrMatrix, dinv: &[f64], p: &CsrMatrix, w: f64) -> CsrMatrix {
    let mut ap = a.matmul(p);
    for i in 0..ap.n_rows {
        for k in ap.indptr[i]..ap.indptr[i + 1] {
            ap.values[k] *= -w * dinv[i];
        }
    }
    // add P (pattern of P is contained in that of AP when a_ii != 0)
    let mut t = Vec::with_capacity(ap.nnz() + p.nnz());
    for i in 0..ap.n_rows {
        let (c, v) = ap.row(i);
        t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
        let (c, v) = p.row(i);
        t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
    }
    CsrMatrix::from_triplets(ap.n_rows, ap.n_cols, &t).expect("in range")
}

impl Amg {
    pub fn new(a: &CsrMatrix, options: &AmgOptions) -> Result<Self> {
        let mut levels = Vec::new();
        let mut warnings = Vec::new();
        let mut current = a.clone();
        while current.n_rows > options.coarse_size && levels.len() + 1 < options.max_levels {
            let (agg, nc) = aggregate(&current, options.strength_threshold);
            if nc as f64 > 0.95 * current.n_rows as f64 || nc == 0 {
                let w = Warning::CoarseningStagnated { level: levels.len(), size: current.n_rows };
                log::warn!("{w}");
                warnings.push(w);
                break;
            }
            let dinv = inv_diag(&current);
            let rho = jacobi_radius(&current, &dinv);
            let mut p = tentative(current.n_rows, &agg, nc);
            if options.smoothed {
                p = smooth_prolongation(&current, &dinv, &p, 4.0 / 3.0 / rho);
            }
            let dinv = damped(dinv, options.omega, rho);
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p));
            levels.push(Level { diag: current.diagonal(), a: current, inv_diag: dinv, p, r });
            current = coarse;
        }
        let coarse = if current.n_rows <= 4000 {
            let dense = current.to_dense();
            match dense.clone().cholesky() {
                Some(c) => CoarseSolver::Cholesky(c),
                None => CoarseSolver::Lu(dense.lu()),
            }
        } else {
            let dinv = inv_diag(&current);
            let rho = jacobi_radius(&current, &dinv);
            CoarseSolver::Sweeps { inv_diag: damped(dinv, options.omega, rho), a: current, sweeps: 20 }
        };
        Ok(Self { levels, coarse, options: *options, warnings })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// Unknowns per level, finest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.levels.iter().map(|l| l.a.n_rows).collect();
        s.push(match &self.coarse {
            CoarseSolver::Cholesky(c) => c.l_dirty().nrows(),
            CoarseSolver::Lu(lu) => lu.l().nrows(),
            CoarseSolver::Sweeps { a, .. } => a.n_rows,
        });
        s
    }

    fn relax(&self, l: &Level, b: &[f64], x: &mut [f64], forward: bool) {
        let sweeps = self.options.smoother_sweeps;
        match self.options.smoother {
            Smoother::Jacobi => self.smooth(&l.a, &l.inv_diag, b, x, sweeps),
            Smoother::GaussSeidel => {
                for _ in 0..sweeps {
                    gauss_seidel(&l.a, &l.diag, b, x, forward);
                }
            }
        }
    }

    fn smooth(&self, a: &CsrMatrix, dinv: &[f64], b: &[f64], x: &mut [f64], sweeps: usize) {
        let mut ax = vec![0.0; b.len()];
        for _ in 0..sweeps {
            a.matvec_into(x, &mut ax);
            x.par_iter_mut().enumerate().with_min_len(4096).for_each(|(i, xi)| {
                *xi += dinv[i] * (b[i] - ax[i]);
            });
        }
    }

    fn coarse_solve(&self, b: &[f64]) -> Vec<f64> {
        match &self.coarse {
            CoarseSolver::Cholesky(c) => c.solve(&DVector::from_column_slice(b)).as_slice().to_vec(),
            CoarseSolver::Lu(lu) => lu
                .solve(&DVector::from_column_slice(b))
                .map(|v| v.as_slice().to_vec())
                .unwrap_or_else(|| b.to_vec()),
            CoarseSolver::Sweeps { a, inv_diag, sweeps } => {
                let mut x = vec![0.0; b.len()];
                self.smooth(a, inv_diag, b, &mut x, *sweeps);
                x
            }
        }
    }

    fn vcycle(&self, level: usize, b: &[f64]) -> Vec<f64> {
        if level == self.levels.len() {
            return self.coarse_solve(b);
        }
        let l = &self.levels[level];
        let mut x = vec![0.0; b.len()];
        self.relax(l, b, &mut x, true);
        let ax = l.a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rc = l.r.matvec(&r);
        let xc = self.vcycle(level + 1, &rc);
        let corr = l.p.matvec(&xc);
        for (xi, c) in x.iter_mut().zip(&corr) {
            *xi += c;
        }
        self.relax(l, b, &mut x, false);
        x
    }
}

fn gauss_seidel(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], forward: bool) {
    let n = a.n_rows;
    let mut step = |i: usize| {
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                s -= v * x[j];
            }
        }
        if diag[i] != 0.0 {
            x[i] = s / diag[i];
        }
    };
    if forward {
        (0..n).for_each(&mut step);
    } else {
        (0..n).rev().for_each(&mut step);
    }
}

impl Preconditioner for Amg {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.vcycle(0, r));
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::poisson_7pt;
    use super::super::{pcg, IdentityPreconditioner};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn aggregates_cover_everything() {
        let a = poisson_7pt(6);
        let (agg, nc) = aggregate(&a, 0.08);
        assert!(agg.iter().all(|&k| k < nc));
        assert!(nc < 216 / 3);
    }

    #[test]
    fn small_matrix_is_direct() {
        let a = poisson_7pt(4);
        let amg = Amg::new(&a, &AmgOptions::default()).unwrap();
        assert_eq!(amg.n_levels(), 1);
        let b = vec![1.0; 64];
        let mut x = vec![0.0; 64];
        let rep = pcg(&a, &b, &mut x, &amg, 1e-8, 10).unwrap();
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn preconditioner_is_symmetric() {
        let a = poisson_7pt(10);
        for smoothed in [false, true] {
            let amg = Amg::new(&a, &AmgOptions { coarse_size: 50, smoothed, ..AmgOptions::default() }).unwrap();
            assert!(amg.n_levels() > 1);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..5 {
                let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut mx = vec![0.0; 1000];
                let mut my = vec![0.0; 1000];
                amg.apply(&x, &mut mx);
                amg.apply(&y, &mut my);
                let l: f64 = mx.iter().zip(&y).map(|(a, b)| a * b).sum();
                let r: f64 = x.iter().zip(&my).map(|(a, b)| a * b).sum();
                assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn fewer_iterations_than_plain_cg() {
        let a = poisson_7pt(16);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let b: Vec<f64> = (0..a.n_rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; a.n_rows];
        let plain = pcg(&a, &b, &mut x, &IdentityPreconditioner, 1e-8, 2000).unwrap();
        for smoothed in [false, true] {
            let amg = Amg::new(&a, &AmgOptions { smoothed, ..AmgOptions::default() }).unwrap();
            let mut x = vec![0.0; a.n_rows];
            let rep = pcg(&a, &b, &mut x, &amg, 1e-8, 2000).unwrap();
            assert!(rep.iterations <= 30, "{}", rep.iterations);
            assert!(3 * rep.iterations <= plain.iterations, "{} vs {}", rep.iterations, plain.iterations);
        }
    }
}
