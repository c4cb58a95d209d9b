//! Compressed sparse row matrices.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{IfeError, Result};

/// CSR matrix with sorted, unique column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, indptr: vec![0; n_rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { n_rows: n, n_cols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(IfeError::InvalidArgument(format!("entry ({i}, {j}) outside {n_rows}x{n_cols}")));
            }
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { n_rows, n_cols, indptr, indices, values })
    }

    /// Zero matrix with the given (unsorted, possibly repeated) row patterns.
    pub fn from_pattern(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let nnz = indices.len();
        Self { n_rows: rows.len(), n_cols, indptr, indices, values: vec![0.0; nnz] }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.indptr[i];
        self.indices[lo..self.indptr[i + 1]].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds to an existing entry; fails if `(i, j)` is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        match self.position(i, j) {
            Some(k) => {
                self.values[k] += v;
                Ok(())
            }
            None => Err(IfeError::Internal(format!("entry ({i}, {j}) is not in the sparsity pattern"))),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        });
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.n_cols + 1];
        for &j in &self.indices {
            count[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            count[j + 1] += count[j];
        }
        let indptr = count.clone();
        let mut next = count;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        Self { n_rows: self.n_cols, n_cols: self.n_rows, indptr, indices, values }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.n_cols, other.n_rows);
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.n_rows)
            .into_par_iter()
            .map_init(
                || (vec![f64::NAN; other.n_cols], Vec::new()),
                |(acc, touched), i| {
                    touched.clear();
                    let (ca, va) = self.row(i);
                    for (&k, &a) in ca.iter().zip(va) {
                        let (cb, vb) = other.row(k);
                        for (&j, &b) in cb.iter().zip(vb) {
                            if acc[j].is_nan() {
                                acc[j] = a * b;
                                touched.push(j);
                            } else {
                                acc[j] += a * b;
                            }
                        }
                    }
                    touched.sort_unstable();
                    let vals = touched.iter().map(|&j| std::mem::replace(&mut acc[j], f64::NAN)).collect();
                    (touched.clone(), vals)
                },
            )
            .collect();
        let mut indptr = Vec::with_capacity(self.n_rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (c, v) in rows {
            indices.extend(c);
            values.extend(v);
            indptr.push(indices.len());
        }
        Self { n_rows: self.n_rows, n_cols: other.n_cols, indptr, indices, values }
    }

    /// `max |a_ij - a_ji|` over the stored entries, relative to `max |a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Whether both matrices store exactly the same positions.
    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.n_rows == other.n_rows && self.indptr == other.indptr && self.indices == other.indices
    }

    /// Restriction to the given rows and columns (both ascending).
    pub fn submatrix(&self, rows: &[usize], cols_map: &[Option<usize>], n_cols: usize) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(jj) = cols_map[j] {
                    indices.push(jj);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { n_rows: rows.len(), n_cols, indptr, indices, values }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Matrix Market coordinate format (general, 1-based).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() > 1 << 14 {
        a.par_iter().zip(b).map(|(x, y)| x * y).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x).with_min_len(4096).for_each(|(y, x)| *y += alpha * x);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, nnz: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<_> =
            (0..nnz).map(|_| (rng.random_range(0..n), rng.random_range(0..m), rng.random_range(-1.0..1.0))).collect();
        CsrMatrix::from_triplets(n, m, &t).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 3.0);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let a = random(30, 20, 120, 1);
        let b = random(20, 25, 90, 2);
        let c = a.matmul(&b);
        assert!((c.to_dense() - a.to_dense() * b.to_dense()).amax() < 1e-13);
        assert!((a.transpose().to_dense() - a.to_dense().transpose()).amax() == 0.0);
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y = a.matvec(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x);
        for i in 0..30 {
            assert!((y[i] - yd[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn pattern_add() {
        let mut a = CsrMatrix::from_pattern(3, vec![vec![2, 0, 0], vec![1], vec![]]);
        assert_eq!(a.nnz(), 3);
        a.add(0, 2, 1.5).unwrap();
        assert!(a.add(2, 2, 1.0).is_err());
        assert_eq!(a.get(0, 2), 1.5);
    }

    #[test]
    fn matrix_market_roundtrip_header() {
        let a = CsrMatrix::identity(3);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 "));
    }
}
