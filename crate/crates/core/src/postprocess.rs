//! Error norms against exact solutions, observed convergence orders and
//! interface error maps.
//!
//! Inside an element the exact and the discrete piece are both chosen by the
//! sign of the level set at the evaluation point, so the mismatch region
//! between the interface and its planar approximation is compared like any
//! other point.

use rayon::prelude::*;

use crate::assembly::{DiscreteField, IfeSpace};
use crate::error::{IfeError, Result};
use crate::geometry::Side;
use crate::problems::{ExactSolution, ProblemSpec};
use crate::quadrature::{tet_points, triangle_points};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub l2_error: f64,
    pub h1_seminorm_error: f64,
    pub linf_error: f64,
    pub energy_error: f64,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    l2: f64,
    h1: f64,
    energy: f64,
    linf: f64,
}

impl Sums {
    fn merge(self, o: Sums) -> Sums {
        Sums { l2: self.l2 + o.l2, h1: self.h1 + o.h1, energy: self.energy + o.energy, linf: self.linf.max(o.linf) }
    }
}

fn exact_of(problem: &ProblemSpec) -> Result<&ExactSolution> {
    problem
        .exact
        .as_ref()
        .ok_or_else(|| IfeError::InvalidArgument(format!("problem '{}' has no exact solution", problem.name)))
}

/// Error norms with degree-4 quadrature on every integration piece.
pub fn compute_errors(space: &IfeSpace, field: &DiscreteField, problem: &ProblemSpec, sigma: f64) -> Result<ErrorReport> {
    compute_errors_with_degree(space, field, problem, sigma, 4)
}

pub fn compute_errors_with_degree(
    space: &IfeSpace,
    field: &DiscreteField,
    problem: &ProblemSpec,
    sigma: f64,
    degree: usize,
) -> Result<ErrorReport> {
    let exact = exact_of(problem)?;
    let mesh = &space.mesh;
    let ls = problem.level_set.as_ref();
    let beta = |s: Side| problem.beta(s);

    let per_element: Vec<Sums> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let local = field.local(space, e);
            let mut s = Sums::default();
            let sample = |x: &Vec3| {
                let side = Side::of_value(ls.value(x));
                (exact.value(side, x) - local.value(side, x)).abs()
            };
            for v in mesh.element_vertices(e) {
                s.linf = s.linf.max(sample(&v));
            }
            if let Some(g) = space.cuts.get(e) {
                for t in &g.interface_triangles {
                    s.linf = s.linf.max(sample(&((t[0] + t[1] + t[2]) / 3.0)));
                }
            }
            for (tet, _) in space.pieces(e) {
                for (x, w) in tet_points(&tet, degree) {
                    let side = Side::of_value(ls.value(&x));
                    let d = exact.value(side, &x) - local.value(side, &x);
                    let g = (exact.gradient(side, &x) - local.gradient(side)).norm_squared();
                    s.l2 += w * d * d;
                    s.h1 += w * g;
                    s.energy += w * beta(side) * g;
                    s.linf = s.linf.max(d.abs());
                }
            }
            s
        })
        .collect();

    let faces = &space.classification.interface_faces;
    let per_face: Vec<f64> = (0..faces.len())
        .into_par_iter()
        .map(|slot| {
            let f = faces[slot];
            let face = &mesh.faces[f];
            let Some(right) = face.right else { return 0.0 };
            let (ul, ur) = (field.local(space, face.left), field.local(space, right));
            let normal = mesh.face_normal(f);
            let hf = mesh.face_diameter(f);
            let mut acc = 0.0;
            for piece in &space.face_pieces[slot] {
                let side = piece.side;
                for (x, w) in triangle_points(&piece.vertices, degree) {
                    let jump = ul.value(side, &x) - ur.value(side, &x);
                    let ge = exact.gradient(side, &x) - 0.5 * (ul.gradient(side) + ur.gradient(side));
                    let flux = beta(side) * ge.dot(&normal);
                    acc += w * (sigma / hf * jump * jump + hf / sigma * flux * flux);
                }
            }
            acc
        })
        .collect();

    let total = per_element.into_iter().fold(Sums::default(), Sums::merge);
    let faces_sum: f64 = per_face.iter().sum();
    Ok(ErrorReport {
        n: mesh.n,
        h: mesh.h(),
        dofs: space.n_dofs(),
        l2_error: total.l2.max(0.0).sqrt(),
        h1_seminorm_error: total.h1.max(0.0).sqrt(),
        linf_error: total.linf,
        energy_error: (total.energy + faces_sum).max(0.0).sqrt(),
    })
}

/// Energy norm of a discrete field (no exact solution involved).
pub fn energy_norm(space: &IfeSpace, field: &DiscreteField, problem: &ProblemSpec, sigma: f64) -> f64 {
    let zero: crate::enrichment::ScalarField = std::sync::Arc::new(|_| 0.0);
    let zero_grad: crate::enrichment::VectorField = std::sync::Arc::new(|_| Vec3::zeros());
    let mut p = problem.clone();
    p.exact = Some(ExactSolution { value: [zero.clone(), zero], gradient: [zero_grad.clone(), zero_grad] });
    compute_errors(space, field, &p, sigma).map(|r| r.energy_error).unwrap_or(f64::NAN)
}

/// One interface sample: centroid of an interface triangle and the absolute
/// error there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub element: usize,
    pub point: Vec3,
    pub error: f64,
}

pub fn surface_error_map(space: &IfeSpace, field: &DiscreteField, problem: &ProblemSpec) -> Result<Vec<SurfaceSample>> {
    let exact = exact_of(problem)?;
    let ls = problem.level_set.as_ref();
    let mut out = Vec::new();
    for g in space.cuts.iter() {
        let local = field.local(space, g.element);
        for t in &g.interface_triangles {
            let x = (t[0] + t[1] + t[2]) / 3.0;
            let side = Side::of_value(ls.value(&x));
            out.push(SurfaceSample {
                element: g.element,
                point: x,
                error: (exact.value(side, &x) - local.value(side, &x)).abs(),
            });
        }
    }
    Ok(out)
}

/// Observed orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` between
/// consecutive reports; `NaN` where an error vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orders {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub reports: Vec<ErrorReport>,
    /// `orders[i]` compares `reports[i]` and `reports[i + 1]`.
    pub orders: Vec<Orders>,
}

impl ConvergenceTable {
    /// Orders between the two finest meshes.
    pub fn finest_orders(&self) -> Orders {
        *self.orders.last().expect("at least two reports")
    }
}

pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    if e_coarse > 0.0 && e_fine > 0.0 {
        (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
    } else {
        f64::NAN
    }
}

pub fn convergence_table(reports: &[ErrorReport]) -> Result<ConvergenceTable> {
    if reports.len() < 2 {
        return Err(IfeError::InvalidArgument(format!(
            "a convergence table needs at least 2 reports, got {}",
            reports.len()
        )));
    }
    let mut orders = Vec::with_capacity(reports.len() - 1);
    for w in reports.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !(a.h > b.h && b.h > 0.0) {
            return Err(IfeError::InvalidArgument(format!(
                "reports must be ordered by decreasing h, got {} then {}",
                a.h, b.h
            )));
        }
        orders.push(Orders {
            l2: observed_order(a.l2_error, b.l2_error, a.h, b.h),
            h1: observed_order(a.h1_seminorm_error, b.h1_seminorm_error, a.h, b.h),
            linf: observed_order(a.linf_error, b.linf_error, a.h, b.h),
            energy: observed_order(a.energy_error, b.energy_error, a.h, b.h),
        });
    }
    Ok(ConvergenceTable { reports: reports.to_vec(), orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_system, reconstruct_solution, AssemblyParams};
    use crate::levelset::Plane;
    use crate::mesh::{build_mesh, BoxDomain, Subdivision};
    use crate::solver::{pcg_solve, SolverConfig};
    use std::sync::Arc;

    fn report(h: f64, e: f64) -> ErrorReport {
        ErrorReport { h, l2_error: e, h1_seminorm_error: e, linf_error: e, energy_error: e, ..Default::default() }
    }

    #[test]
    fn orders_from_arithmetic() {
        let t = convergence_table(&[report(0.2, 4e-2), report(0.1, 1e-2)]).unwrap();
        assert!((t.orders[0].l2 - 2.0).abs() < 1e-12);
        let t = convergence_table(&[report(0.2, 2e-1), report(0.1, 1e-1)]).unwrap();
        assert!((t.orders[0].h1 - 1.0).abs() < 1e-12);
        assert!(convergence_table(&[report(0.1, 1.0)]).is_err());
        assert!(convergence_table(&[report(0.1, 1.0), report(0.2, 1.0)]).is_err());
    }

    fn linear_problem() -> ProblemSpec {
        let g = Vec3::new(0.3, -1.0, 2.0);
        let u: crate::enrichment::ScalarField = Arc::new(move |x: &Vec3| 1.0 + g.dot(x));
        let du: crate::enrichment::VectorField = Arc::new(move |_| g);
        let zero: crate::enrichment::ScalarField = Arc::new(|_| 0.0);
        ProblemSpec::manufactured(
            "linear",
            BoxDomain::unit(),
            Arc::new(Plane::axis(0, 2.0)),
            1.0,
            1.0,
            [u.clone(), u],
            [du.clone(), du],
            [zero.clone(), zero],
        )
        .unwrap()
    }

    #[test]
    fn nodal_interpolant_of_global_linear_has_no_error() {
        let p = linear_problem();
        let mesh = build_mesh(BoxDomain::unit(), 4, Subdivision::SixTet).unwrap();
        let space = IfeSpace::new(mesh, p.level_set.as_ref(), 1.0, 1.0).unwrap();
        let mut field = DiscreteField::zeros(&space);
        let u = p.exact.as_ref().unwrap();
        for (i, x) in space.mesh.nodes.iter().enumerate() {
            field.nodal[i] = u.value(Side::Plus, x);
        }
        let r = compute_errors(&space, &field, &p, 10.0).unwrap();
        assert!(r.l2_error < 1e-12 && r.h1_seminorm_error < 1e-12 && r.linf_error < 1e-12 && r.energy_error < 1e-12);
        let map = surface_error_map(&space, &field, &p).unwrap();
        assert!(map.is_empty());
    }

    #[test]
    fn patch_test_is_exact() {
        let p = ProblemSpec::patch_test(1.0, 100.0).unwrap();
        for n in [4, 8] {
            let mesh = build_mesh(p.domain, n, Subdivision::SixTet).unwrap();
            let space = IfeSpace::new(mesh, p.level_set.as_ref(), p.beta_minus, p.beta_plus).unwrap();
            let sys = assemble_system(&space, &p, &AssemblyParams::default()).unwrap();
            let cfg = SolverConfig { tol: 1e-14, ..SolverConfig::default() };
            let (u, _) = pcg_solve(&sys, &cfg).unwrap();
            let field = reconstruct_solution(&space, &sys, &u);
            let r = compute_errors(&space, &field, &p, sys.sigma).unwrap();
            assert!(r.l2_error < 1e-9 && r.h1_seminorm_error < 1e-9 && r.linf_error < 1e-9, "{r:?}");
            let map = surface_error_map(&space, &field, &p).unwrap();
            assert!(!map.is_empty());
            assert!(map.iter().all(|s| s.error < 1e-9));
        }
    }

    #[test]
    fn energy_norm_is_homogeneous() {
        let p = ProblemSpec::example1(1.0, 10.0).unwrap();
        let mesh = build_mesh(p.domain, 6, Subdivision::SixTet).unwrap();
        let space = IfeSpace::new(mesh, p.level_set.as_ref(), 1.0, 10.0).unwrap();
        let mut field = DiscreteField::zeros(&space);
        assert_eq!(energy_norm(&space, &field, &p, 100.0), 0.0);
        for (i, x) in space.mesh.nodes.iter().enumerate() {
            field.nodal[i] = (3.0 * x.x).sin() * x.y + x.z;
        }
        let a = energy_norm(&space, &field, &p, 100.0);
        field.nodal.iter_mut().for_each(|v| *v *= -2.5);
        let b = energy_norm(&space, &field, &p, 100.0);
        assert!(a > 0.0 && (b - 2.5 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn quadrature_degree_is_sufficient() {
        let p = ProblemSpec::example1(1.0, 100.0).unwrap();
        let mesh = build_mesh(p.domain, 6, Subdivision::SixTet).unwrap();
        let space = IfeSpace::new(mesh, p.level_set.as_ref(), 1.0, 100.0).unwrap();
        let field = DiscreteField::zeros(&space);
        let a = compute_errors_with_degree(&space, &field, &p, 1000.0, 4).unwrap();
        let b = compute_errors_with_degree(&space, &field, &p, 1000.0, 5).unwrap();
        assert!((a.l2_error - b.l2_error).abs() < 0.01 * b.l2_error);
    }
}
