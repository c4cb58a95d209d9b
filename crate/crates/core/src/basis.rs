//! Local immersed shape functions on cut elements.
//!
//! A local function is linear on each side of the approximating plane. The
//! 8 coefficients are fixed by 4 nodal values, continuity of the value at the
//! 3 plane points, and continuity of the flux `beta grad u . n` across the
//! plane. Solving the same 8x8 system with the 8 unit right-hand sides gives
//! the 4 nodal shape functions, the 3 jump functions and the flux-jump
//! function used by the enrichment.

use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::{SMatrix, SVector, Vector4};

use crate::error::{IfeError, Result, Warning};
use crate::geometry::{CutElementGeometry, Side};
use crate::levelset::LevelSet;
use crate::Vec3;

/// `c0 + g . x` on each side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiecewiseLinear {
    pub minus: [f64; 4],
    pub plus: [f64; 4],
}

impl PiecewiseLinear {
    pub const ZERO: Self = Self { minus: [0.0; 4], plus: [0.0; 4] };

    /// The same linear function on both sides.
    pub fn linear(c0: f64, g: Vec3) -> Self {
        let p = [c0, g.x, g.y, g.z];
        Self { minus: p, plus: p }
    }

    pub fn from_coefficients(c: &[f64; 8]) -> Self {
        Self { minus: [c[0], c[1], c[2], c[3]], plus: [c[4], c[5], c[6], c[7]] }
    }

    pub fn piece(&self, side: Side) -> &[f64; 4] {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn value(&self, side: Side, x: &Vec3) -> f64 {
        let p = self.piece(side);
        p[0] + p[1] * x.x + p[2] * x.y + p[3] * x.z
    }

    pub fn gradient(&self, side: Side) -> Vec3 {
        let p = self.piece(side);
        Vec3::new(p[1], p[2], p[3])
    }

    /// `plus - minus` at `x`.
    pub fn jump(&self, x: &Vec3) -> f64 {
        self.value(Side::Plus, x) - self.value(Side::Minus, x)
    }

    pub fn flux_jump(&self, n: &Vec3, beta_minus: f64, beta_plus: f64) -> f64 {
        beta_plus * self.gradient(Side::Plus).dot(n) - beta_minus * self.gradient(Side::Minus).dot(n)
    }
}

impl Add for PiecewiseLinear {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for PiecewiseLinear {
    fn add_assign(&mut self, rhs: Self) {
        for k in 0..4 {
            self.minus[k] += rhs.minus[k];
            self.plus[k] += rhs.plus[k];
        }
    }
}

impl Sub for PiecewiseLinear {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs * -1.0
    }
}

impl Mul<f64> for PiecewiseLinear {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { minus: self.minus.map(|c| c * s), plus: self.plus.map(|c| c * s) }
    }
}

/// How a point picks the piece of a [`PiecewiseLinear`].
#[derive(Clone, Copy)]
pub enum SideSelector<'a> {
    /// Sign of the level set (zero counts as plus).
    LevelSet(&'a dyn LevelSet),
    /// Side of a plane; points on the plane count as minus.
    Plane { point: Vec3, normal: Vec3 },
}

impl SideSelector<'_> {
    pub fn plane_of(geom: &CutElementGeometry) -> Self {
        SideSelector::Plane { point: geom.plane_point, normal: geom.normal }
    }

    pub fn side(&self, x: &Vec3) -> Side {
        match self {
            SideSelector::LevelSet(ls) => Side::of_value(ls.value(x)),
            SideSelector::Plane { point, normal } => {
                if (x - point).dot(normal) <= 0.0 {
                    Side::Minus
                } else {
                    Side::Plus
                }
            }
        }
    }
}

pub fn evaluate(v: &PiecewiseLinear, x: &Vec3, selector: &SideSelector<'_>) -> f64 {
    v.value(selector.side(x), x)
}

pub fn evaluate_gradient(v: &PiecewiseLinear, x: &Vec3, selector: &SideSelector<'_>) -> Vec3 {
    v.gradient(selector.side(x))
}

/// Nodal values at the 4 vertices (piece by vertex side), value jumps at
/// the 3 selected plane points, and the flux jump across the plane.
pub fn dof_functionals(v: &PiecewiseLinear, geom: &CutElementGeometry, beta_minus: f64, beta_plus: f64) -> [f64; 8] {
    let mut out = [0.0; 8];
    for i in 0..4 {
        out[i] = v.value(geom.vertex_sides[i], &geom.vertices[i]);
    }
    for (j, d) in geom.selected_points().iter().enumerate() {
        out[4 + j] = v.jump(d);
    }
    out[7] = v.flux_jump(&geom.normal, beta_minus, beta_plus);
    out
}

/// Gradients of the P1 barycentric functions of a tetrahedron.
pub fn p1_gradients(v: &[Vec3; 4]) -> [Vec3; 4] {
    let (e1, e2, e3) = (v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    let det = e1.dot(&e2.cross(&e3));
    let g1 = e2.cross(&e3) / det;
    let g2 = e3.cross(&e1) / det;
    let g3 = e1.cross(&e2) / det;
    [-(g1 + g2 + g3), g1, g2, g3]
}

/// The 4 standard P1 shape functions as (side-independent) piecewise linears.
pub fn p1_basis(v: &[Vec3; 4]) -> [PiecewiseLinear; 4] {
    let g = p1_gradients(v);
    std::array::from_fn(|i| {
        let j = (i + 1) % 4;
        // lambda_i(v_j) = 0
        PiecewiseLinear::linear(-g[i].dot(&v[j]), g[i])
    })
}

/// The 8x8 system in global coordinates. Rows: nodal values (in the block of
/// the vertex side), value jumps at the 3 plane points, flux jump.
pub fn build_b_matrix(geom: &CutElementGeometry, beta_minus: f64, beta_plus: f64) -> SMatrix<f64, 8, 8> {
    let mut b = SMatrix::<f64, 8, 8>::zeros();
    for i in 0..4 {
        let v = geom.vertices[i];
        let off = 4 * geom.vertex_sides[i].index();
        b[(i, off)] = 1.0;
        for k in 0..3 {
            b[(i, off + 1 + k)] = v[k];
        }
    }
    for (r, d) in geom.selected_points().iter().enumerate() {
        let row = 4 + r;
        b[(row, 0)] = -1.0;
        b[(row, 4)] = 1.0;
        for k in 0..3 {
            b[(row, 1 + k)] = -d[k];
            b[(row, 5 + k)] = d[k];
        }
    }
    for k in 0..3 {
        b[(7, 1 + k)] = -beta_minus * geom.normal[k];
        b[(7, 5 + k)] = beta_plus * geom.normal[k];
    }
    b
}

/// The 8 local functions of one cut element.
#[derive(Debug, Clone)]
pub struct IfeLocalBasis {
    pub element: usize,
    /// Nodal shape functions, by local vertex.
    pub shape: [PiecewiseLinear; 4],
    /// Unit value jump at the selected plane point `j`, zero elsewhere.
    pub jump: [PiecewiseLinear; 3],
    /// Unit flux jump with continuous value.
    pub flux: PiecewiseLinear,
    /// `||B||_1 ||B^-1||_1` of the scaled local system.
    pub condition: f64,
}

/// Condition estimate above which a warning is raised.
pub const CONDITION_WARNING: f64 = 1e12;

fn one_norm(m: &SMatrix<f64, 8, 8>) -> f64 {
    (0..8).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solves the local system in element-local coordinates
/// `(x - v0) / h_T` with a rescaled flux row and row equilibration.
pub fn solve_local_basis(
    geom: &CutElementGeometry,
    beta_minus: f64,
    beta_plus: f64,
) -> Result<(IfeLocalBasis, Option<Warning>)> {
    if !(beta_minus > 0.0 && beta_plus > 0.0) {
        return Err(IfeError::InvalidArgument(format!(
            "coefficients must be positive, got {beta_minus} and {beta_plus}"
        )));
    }
    let x0 = geom.vertices[0];
    let h = geom.diameter();
    let local = |x: &Vec3| (x - x0) / h;
    let beta_max = beta_minus.max(beta_plus);

    let mut b = SMatrix::<f64, 8, 8>::zeros();
    for i in 0..4 {
        let v = local(&geom.vertices[i]);
        let off = 4 * geom.vertex_sides[i].index();
        b[(i, off)] = 1.0;
        for k in 0..3 {
            b[(i, off + 1 + k)] = v[k];
        }
    }
    for (r, d) in geom.selected_points().iter().enumerate() {
        let d = local(d);
        let row = 4 + r;
        b[(row, 0)] = -1.0;
        b[(row, 4)] = 1.0;
        for k in 0..3 {
            b[(row, 1 + k)] = -d[k];
            b[(row, 5 + k)] = d[k];
        }
    }
    // flux row in local coordinates carries a factor 1 / h; scaled by h / beta_max
    let flux_scale = h / beta_max;
    for k in 0..3 {
        b[(7, 1 + k)] = -beta_minus / beta_max * geom.normal[k];
        b[(7, 5 + k)] = beta_plus / beta_max * geom.normal[k];
    }
    let mut row_scale = SVector::<f64, 8>::zeros();
    for r in 0..8 {
        let m = b.row(r).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if m == 0.0 {
            return Err(IfeError::DegenerateCut { element: geom.element });
        }
        row_scale[r] = 1.0 / m;
        b.row_mut(r).scale_mut(1.0 / m);
    }
    let lu = b.lu();
    let inv = lu.try_inverse().ok_or(IfeError::DegenerateCut { element: geom.element })?;
    let condition = one_norm(&b) * one_norm(&inv);

    // Column k of B^-1 D (with the flux rhs scale) gives the local coefficients.
    let to_global = |c: SVector<f64, 8>| -> PiecewiseLinear {
        let conv = |p: Vector4<f64>| -> [f64; 4] {
            let g = Vec3::new(p[1], p[2], p[3]) / h;
            [p[0] - g.dot(&x0), g.x, g.y, g.z]
        };
        PiecewiseLinear {
            minus: conv(Vector4::new(c[0], c[1], c[2], c[3])),
            plus: conv(Vector4::new(c[4], c[5], c[6], c[7])),
        }
    };
    let column = |k: usize| -> PiecewiseLinear {
        let mut rhs_scale = row_scale[k];
        if k == 7 {
            rhs_scale *= flux_scale;
        }
        to_global(inv.column(k) * rhs_scale)
    };
    let basis = IfeLocalBasis {
        element: geom.element,
        shape: std::array::from_fn(column),
        jump: std::array::from_fn(|j| column(4 + j)),
        flux: column(7),
        condition,
    };
    let warning = (condition > CONDITION_WARNING).then(|| {
        let w = Warning::NearSingularBasis { element: geom.element, condition };
        log::warn!("{w}");
        w
    });
    Ok((basis, warning))
}

impl IfeLocalBasis {
    /// Enrichment function `j` in 0..4: the 3 value-jump functions, then the flux-jump function.
    pub fn xi(&self, j: usize) -> PiecewiseLinear {
        if j < 3 {
            self.jump[j]
        } else {
            self.flux
        }
    }

    /// The IFE function with the given nodal values and homogeneous jumps.
    pub fn interpolate(&self, nodal: &[f64; 4]) -> PiecewiseLinear {
        let mut out = PiecewiseLinear::ZERO;
        for i in 0..4 {
            out += self.shape[i] * nodal[i];
        }
        out
    }
}

/// Plus piece of the IFE function whose minus piece is `p`, for a flat
/// interface through `f` with unit normal `n`.
pub fn plus_extension(p: &[f64; 4], f: &Vec3, n: &Vec3, beta_minus: f64, beta_plus: f64) -> [f64; 4] {
    let g = Vec3::new(p[1], p[2], p[3]);
    let s = (beta_minus - beta_plus) / beta_plus * g.dot(n);
    // p + s (x - f) . n
    let gp = g + s * n;
    [p[0] - s * f.dot(n), gp.x, gp.y, gp.z]
}

/// Sanity helper for tests and diagnostics: residual of the 8 defining
/// conditions for local function `k` (0..8).
pub fn defining_residual(
    geom: &CutElementGeometry,
    basis: &IfeLocalBasis,
    beta_minus: f64,
    beta_plus: f64,
    k: usize,
) -> f64 {
    let f = match k {
        0..=3 => basis.shape[k],
        4..=6 => basis.jump[k - 4],
        _ => basis.flux,
    };
    let b = build_b_matrix(geom, beta_minus, beta_plus);
    let c = SVector::<f64, 8>::from_iterator(f.minus.iter().chain(&f.plus).copied());
    let mut e = SVector::<f64, 8>::zeros();
    e[k] = 1.0;
    (b * c - e).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CutPoint;
    use crate::mesh::TET_EDGES;
    use proptest::prelude::*;

    fn plane_cut(vertices: [Vec3; 4], p: Vec3, n: Vec3) -> Option<CutElementGeometry> {
        let d = vertices.map(|v| (v - p).dot(&n));
        let sides = d.map(Side::of_value);
        if sides.iter().all(|&s| s == sides[0]) {
            return None;
        }
        let cuts: Vec<CutPoint> = TET_EDGES
            .iter()
            .filter(|&&(i, j)| sides[i] != sides[j])
            .map(|&(i, j)| {
                let t = d[i] / (d[i] - d[j]);
                CutPoint { edge: (i, j), t, point: vertices[i] + t * (vertices[j] - vertices[i]) }
            })
            .collect();
        CutElementGeometry::from_cuts(0, vertices, sides, &cuts).ok().map(|g| g.0)
    }

    fn reference() -> [Vec3; 4] {
        [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)]
    }

    #[test]
    fn p1_is_lagrange() {
        let v = [Vec3::new(0.1, 0.0, 0.2), Vec3::new(1.0, 0.3, 0.0), Vec3::new(0.0, 1.2, 0.1), Vec3::new(0.2, 0.1, 0.9)];
        let b = p1_basis(&v);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b[i].value(Side::Minus, &v[j]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn equal_coefficients_reduce_to_p1() {
        let v = reference();
        let g = plane_cut(v, Vec3::new(0.3, 0.0, 0.0), Vec3::new(1.0, 0.2, 0.1).normalize()).unwrap();
        let (basis, _) = solve_local_basis(&g, 3.0, 3.0).unwrap();
        let p1 = p1_basis(&v);
        for i in 0..4 {
            for s in Side::BOTH {
                for k in 0..4 {
                    assert!((basis.shape[i].piece(s)[k] - p1[i].piece(s)[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn defining_conditions_hold() {
        let v = reference();
        let g = plane_cut(v, Vec3::new(0.3, 0.25, 0.0), Vec3::new(1.0, 1.0, 0.3).normalize()).unwrap();
        let (basis, w) = solve_local_basis(&g, 1.0, 1000.0).unwrap();
        assert!(w.is_none());
        for k in 0..8 {
            assert!(defining_residual(&g, &basis, 1.0, 1000.0, k) < 1e-10, "function {k}");
        }
    }

    #[test]
    fn closed_form_plus_piece() {
        let v = reference();
        for (bm, bp) in [(1.0, 100.0), (100.0, 1.0), (1.0, 10.0)] {
            let g = plane_cut(v, Vec3::new(0.4, 0.1, 0.1), Vec3::new(1.0, 0.5, -0.2).normalize()).unwrap();
            let (basis, _) = solve_local_basis(&g, bm, bp).unwrap();
            for i in 0..4 {
                let want = plus_extension(&basis.shape[i].minus, &g.plane_point, &g.normal, bm, bp);
                for k in 0..4 {
                    assert!((basis.shape[i].plus[k] - want[k]).abs() < 1e-9 * (1.0 + want[k].abs()));
                }
            }
        }
    }

    #[test]
    fn functionals_of_simple_functions() {
        let g = plane_cut(reference(), Vec3::new(0.3, 0.2, 0.1), Vec3::new(1.0, 0.4, 0.2).normalize()).unwrap();
        let c = PiecewiseLinear::linear(2.5, Vec3::zeros());
        assert_eq!(dof_functionals(&c, &g, 1.0, 7.0), [2.5, 2.5, 2.5, 2.5, 0.0, 0.0, 0.0, 0.0]);
        let bp = 7.0;
        let n = g.normal;
        let f = g.plane_point;
        let plus = [-f.dot(&n) / bp, n.x / bp, n.y / bp, n.z / bp];
        let v = PiecewiseLinear { minus: [0.0; 4], plus };
        let d = dof_functionals(&v, &g, 1.0, bp);
        for j in 4..7 {
            assert!(d[j].abs() < 1e-15);
        }
        assert!((d[7] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn functionals_match_b_matrix() {
        let g = plane_cut(reference(), Vec3::new(0.3, 0.3, 0.1), Vec3::new(1.0, 1.0, 0.2).normalize()).unwrap();
        let b = build_b_matrix(&g, 2.0, 30.0);
        let c = [0.3, -1.2, 0.5, 2.0, 1.1, 0.7, -0.4, 0.9];
        let v = PiecewiseLinear::from_coefficients(&c);
        let direct = dof_functionals(&v, &g, 2.0, 30.0);
        let via_b = b * SVector::<f64, 8>::from_row_slice(&c);
        for k in 0..8 {
            assert!((direct[k] - via_b[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn flux_function_for_equal_coefficients() {
        let g = plane_cut(reference(), Vec3::new(0.25, 0.25, 0.25), Vec3::new(0.2, 1.0, 0.5).normalize()).unwrap();
        let (basis, _) = solve_local_basis(&g, 4.0, 4.0).unwrap();
        let d = dof_functionals(&basis.xi(3), &g, 4.0, 4.0);
        for k in 0..7 {
            assert!(d[k].abs() < 1e-13);
        }
        assert!((d[7] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn side_selection_modes() {
        let g = plane_cut(reference(), Vec3::new(0.3, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let plane = SideSelector::plane_of(&g);
        assert_eq!(plane.side(&Vec3::new(0.3, 0.1, 0.1)), Side::Minus);
        let ls = crate::levelset::Plane::axis(0, 0.3);
        assert_eq!(SideSelector::LevelSet(&ls).side(&Vec3::new(0.3, 0.1, 0.1)), Side::Plus);
        let c = PiecewiseLinear::linear(1.0, Vec3::zeros());
        let x = Vec3::new(0.2, 0.1, 0.1);
        assert_eq!(evaluate(&c, &x, &plane), evaluate(&c, &x, &SideSelector::LevelSet(&ls)));
    }

    #[test]
    fn partition_of_unity() {
        let v = reference();
        let g = plane_cut(v, Vec3::new(0.2, 0.2, 0.2), Vec3::new(0.3, 1.0, 0.7).normalize()).unwrap();
        let (basis, _) = solve_local_basis(&g, 1.0, 100.0).unwrap();
        let sum = basis.interpolate(&[1.0; 4]);
        for s in Side::BOTH {
            let p = sum.piece(s);
            assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-12 && p[3].abs() < 1e-12);
        }
    }

    #[test]
    fn near_vertex_cut_stays_well_conditioned() {
        let h = 0.01;
        let v = reference().map(|x| x * h);
        let g = plane_cut(v, Vec3::new(1e-9 * h, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let (basis, _) = solve_local_basis(&g, 1.0, 1e4).unwrap();
        assert!(basis.condition.is_finite());
        for k in 0..8 {
            assert!(defining_residual(&g, &basis, 1.0, 1e4, k) < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn random_cuts_satisfy_conditions(
            px in 0.05f64..0.45, py in 0.05f64..0.45, pz in 0.05f64..0.45,
            nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in -1.0f64..1.0,
            lb in -3.0f64..3.0,
        ) {
            let n = Vec3::new(nx, ny, nz);
            prop_assume!(n.norm() > 0.1);
            let Some(g) = plane_cut(reference(), Vec3::new(px, py, pz), n.normalize()) else { return Ok(()) };
            let (bm, bp) = (1.0, 10f64.powf(lb));
            let (basis, _) = solve_local_basis(&g, bm, bp).unwrap();
            let scale = 1.0 + bp.max(bm);
            for k in 0..8 {
                prop_assert!(defining_residual(&g, &basis, bm, bp, k) < 1e-8 * scale);
            }
        }
    }
}
