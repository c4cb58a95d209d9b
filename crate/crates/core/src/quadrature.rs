//! Quadrature on tetrahedra and triangles.
//!
//! Low degrees use the classical symmetric rules; everything else is a
//! collapsed (Duffy) tensor product of Gauss-Jacobi rules, exact for total
//! degree `p` with `ceil((p + 1) / 2)` points per direction.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::Vec3;

pub const MAX_DEGREE: usize = 15;

/// Points on the reference simplex and weights summing to its measure
/// (1/6 for the tetrahedron, 1/2 for the triangle).
#[derive(Debug, Clone)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub type TetRule = QuadratureRule<3>;
pub type TriangleRule = QuadratureRule<2>;

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight
/// `(1 - x)^alpha (1 + x)^beta` (Golub-Welsch).
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0 && alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut j = DMatrix::<f64>::zeros(m, m);
    for n in 0..m {
        let nf = n as f64;
        j[(n, n)] = if n == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        if n + 1 < m {
            let k = nf + 1.0;
            let s = 2.0 * k + ab;
            let b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
            j[(n, n + 1)] = b.sqrt();
            j[(n + 1, n)] = b.sqrt();
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gamma function for the small positive arguments used here.
fn gamma(x: f64) -> f64 {
    if x.fract() == 0.0 && x > 0.0 && x < 30.0 {
        return (1..x as u64).map(|k| k as f64).product();
    }
    // Lanczos approximation, g = 7
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1 - t)^alpha`.
fn unit_jacobi(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(m, alpha, 0.0);
    let scale = 2f64.powf(alpha + 1.0);
    (x.iter().map(|x| 0.5 * (1.0 + x)).collect(), w.iter().map(|w| w / scale).collect())
}

fn collapsed_tet(degree: usize) -> TetRule {
    let m = (degree + 2) / 2;
    let (a, wa) = unit_jacobi(m, 0.0);
    let (b, wb) = unit_jacobi(m, 1.0);
    let (c, wc) = unit_jacobi(m, 2.0);
    let mut points = Vec::with_capacity(m * m * m);
    let mut weights = Vec::with_capacity(m * m * m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                points.push([a[i] * (1.0 - b[j]) * (1.0 - c[k]), b[j] * (1.0 - c[k]), c[k]]);
                weights.push(wa[i] * wb[j] * wc[k]);
            }
        }
    }
    TetRule { points, weights, degree }
}

fn collapsed_triangle(degree: usize) -> TriangleRule {
    let m = (degree + 2) / 2;
    let (a, wa) = unit_jacobi(m, 0.0);
    let (b, wb) = unit_jacobi(m, 1.0);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            points.push([a[i] * (1.0 - b[j]), b[j]]);
            weights.push(wa[i] * wb[j]);
        }
    }
    TriangleRule { points, weights, degree }
}

fn build_tet(degree: usize) -> TetRule {
    match degree {
        0 | 1 => TetRule { points: vec![[0.25; 3]], weights: vec![1.0 / 6.0], degree },
        2 => {
            let (a, b) = (0.585_410_196_624_968_5, 0.138_196_601_125_010_5);
            TetRule {
                points: vec![[b, b, b], [a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 24.0; 4],
                degree,
            }
        }
        _ => collapsed_tet(degree),
    }
}

fn build_triangle(degree: usize) -> TriangleRule {
    match degree {
        0 | 1 => TriangleRule { points: vec![[1.0 / 3.0; 2]], weights: vec![0.5], degree },
        2 => TriangleRule {
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 6.0; 3],
            degree,
        },
        _ => collapsed_triangle(degree),
    }
}

/// Cached rule exact for polynomials of total degree `degree` on the
/// reference tetrahedron. Panics above [`MAX_DEGREE`].
pub fn tet_rule(degree: usize) -> &'static TetRule {
    static CACHE: [OnceLock<TetRule>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
    assert!(degree <= MAX_DEGREE, "quadrature degree {degree} exceeds {MAX_DEGREE}");
    CACHE[degree].get_or_init(|| build_tet(degree))
}

/// Cached rule exact for polynomials of total degree `degree` on the
/// reference triangle. Panics above [`MAX_DEGREE`].
pub fn triangle_rule(degree: usize) -> &'static TriangleRule {
    static CACHE: [OnceLock<TriangleRule>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
    assert!(degree <= MAX_DEGREE, "quadrature degree {degree} exceeds {MAX_DEGREE}");
    CACHE[degree].get_or_init(|| build_triangle(degree))
}

/// Physical quadrature points and weights on a tetrahedron.
pub fn tet_points(v: &[Vec3; 4], degree: usize) -> impl Iterator<Item = (Vec3, f64)> + '_ {
    let rule = tet_rule(degree);
    let (e1, e2, e3) = (v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    let det = e1.dot(&e2.cross(&e3)).abs();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(move |(p, w)| (v[0] + p[0] * e1 + p[1] * e2 + p[2] * e3, w * det))
}

/// Physical quadrature points and weights on a triangle embedded in 3D.
pub fn triangle_points(v: &[Vec3; 3], degree: usize) -> impl Iterator<Item = (Vec3, f64)> + '_ {
    let rule = triangle_rule(degree);
    let (e1, e2) = (v[1] - v[0], v[2] - v[0]);
    let jac = e1.cross(&e2).norm();
    rule.points.iter().zip(&rule.weights).map(move |(p, w)| (v[0] + p[0] * e1 + p[1] * e2, w * jac))
}

pub fn integrate_tet(v: &[Vec3; 4], degree: usize, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
    tet_points(v, degree).map(|(x, w)| w * f(&x)).sum()
}

pub fn integrate_triangle(v: &[Vec3; 3], degree: usize, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
    triangle_points(v, degree).map(|(x, w)| w * f(&x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn tet_monomials_exact() {
        for p in 0..=MAX_DEGREE {
            let rule = tet_rule(p);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=p as u32 {
                for b in 0..=(p as u32 - a) {
                    for c in 0..=(p as u32 - a - b) {
                        let exact = fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32))
                            .sum();
                        assert!(((q - exact) / exact).abs() < 1e-13, "p={p} ({a},{b},{c}): {q} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn triangle_monomials_exact() {
        for p in 0..=MAX_DEGREE {
            let rule = triangle_rule(p);
            for a in 0..=p as u32 {
                for b in 0..=(p as u32 - a) {
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32))
                        .sum();
                    assert!(((q - exact) / exact).abs() < 1e-13, "p={p} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn gauss_jacobi_non_integer_weight() {
        // int_{-1}^{1} (1-x)^0.5 dx = 2^1.5 / 1.5
        let (_, w) = gauss_jacobi(5, 0.5, 0.0);
        let total: f64 = w.iter().sum();
        assert!((total - 2f64.powf(1.5) / 1.5).abs() < 1e-12);
    }

    #[test]
    fn physical_mapping() {
        let v = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0), Vec3::new(0.0, 0.0, 0.5), Vec3::new(1.0, 1.0, 1.0)];
        let vol = crate::mesh::signed_volume(&v[0], &v[1], &v[2], &v[3]).abs();
        let c = (v[0] + v[1] + v[2] + v[3]) / 4.0;
        let q = integrate_tet(&v, 1, |x| 2.0 * x.x - x.y + 3.0 * x.z);
        assert!((q - vol * (2.0 * c.x - c.y + 3.0 * c.z)).abs() < 1e-14);
        let t = [v[0], v[1], v[2]];
        let area = crate::mesh::triangle_area(&t[0], &t[1], &t[2]);
        assert!((integrate_triangle(&t, 4, |_| 1.0) - area).abs() < 1e-14);
    }
}
