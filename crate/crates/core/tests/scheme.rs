use std::sync::Arc;

use ife_core::assembly::assemble_bilinear;
use ife_core::basis::p1_gradients;
use ife_core::enrichment::{ScalarField, VectorField};
use ife_core::levelset::{Orthocircle, Sphere};
use ife_core::mesh::build_mesh;
use ife_core::pipeline::{solve_problem, RunOptions};
use ife_core::postprocess::compute_errors;
use ife_core::{BoxDomain, DiscreteField, IfeSpace, ProblemSpec, Subdivision, Vec3};

fn wave(a: f64) -> (ScalarField, VectorField, ScalarField) {
    (
        Arc::new(move |x: &Vec3| a * (x.x + 2.0 * x.y + 3.0 * x.z).sin()),
        Arc::new(move |x: &Vec3| a * (x.x + 2.0 * x.y + 3.0 * x.z).cos() * Vec3::new(1.0, 2.0, 3.0)),
        Arc::new(move |x: &Vec3| -14.0 * a * (x.x + 2.0 * x.y + 3.0 * x.z).sin()),
    )
}

/// `u- = w`, `u+ = w / 100` with `beta = (1, 100)`: the flux is continuous
/// and only the value jumps.
fn value_jump_problem() -> ProblemSpec {
    let (um, gm, lm) = wave(1.0);
    let (up, gp, lp) = wave(0.01);
    ProblemSpec::manufactured(
        "value_jump",
        BoxDomain::cube(-1.2, 1.2).unwrap(),
        Arc::new(Orthocircle::default()),
        1.0,
        100.0,
        [um, up],
        [gm, gp],
        [lm, lp],
    )
    .unwrap()
}

#[test]
fn value_jump_solution_tracks_interpolant() {
    let p = value_jump_problem();
    let r = solve_problem(&p, &RunOptions::new(20)).unwrap();
    let exact = p.exact.as_ref().unwrap();
    let space = &r.space;
    let mut interp = DiscreteField::zeros(space);
    for (i, x) in space.mesh.nodes.iter().enumerate() {
        interp.nodal[i] = exact.value(space.classification.node_sides[i], x);
    }
    interp.enrichment = r.field.enrichment.clone();
    let ie = compute_errors(space, &interp, &p, r.system.sigma).unwrap();
    let e = r.errors.unwrap();
    assert!(e.l2_error < 2.0 * ie.l2_error, "solution {:e} vs interpolant {:e}", e.l2_error, ie.l2_error);
}

#[test]
fn doubling_sigma_keeps_patch_solution() {
    let p = ProblemSpec::patch_test(1.0, 100.0).unwrap();
    let mut base = RunOptions::new(4);
    base.solver.tol = 1e-14;
    let mut doubled = base;
    doubled.assembly.sigma = Some(2.0 * 10.0 * 100.0);
    let a = solve_problem(&p, &base).unwrap();
    let b = solve_problem(&p, &doubled).unwrap();
    let diff = a.field.nodal.iter().zip(&b.field.nodal).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-9, "{diff:e}");
}

#[test]
fn no_interface_gives_p1_stiffness() {
    let mesh = build_mesh(BoxDomain::unit(), 3, Subdivision::SixTet).unwrap();
    let ls = Sphere::new(Vec3::new(0.5, 0.5, 0.5), 5.0);
    let beta = 2.5;
    let space = IfeSpace::new(mesh.clone(), &ls, beta, 7.0).unwrap();
    assert!(space.cuts.is_empty());
    let a = assemble_bilinear(&space, 10.0).unwrap();
    let n = mesh.n_nodes();
    let mut want = vec![vec![0.0; n]; n];
    for (e, tet) in mesh.elements.iter().enumerate() {
        let g = p1_gradients(&mesh.element_vertices(e));
        let vol = mesh.element_volume(e);
        for i in 0..4 {
            for j in 0..4 {
                want[tet[i]][tet[j]] += beta * vol * g[i].dot(&g[j]);
            }
        }
    }
    let free = &space.free_nodes;
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            assert!((a.get(r, c) - want[i][j]).abs() < 1e-12, "({i}, {j})");
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let zero = || -> ScalarField { Arc::new(|_| 0.0) };
    let p = ProblemSpec::manufactured(
        "zero",
        BoxDomain::cube(-1.0, 1.0).unwrap(),
        Arc::new(Sphere::centered(0.6)),
        1.0,
        10.0,
        [zero(), zero()],
        [Arc::new(|_| Vec3::zeros()), Arc::new(|_| Vec3::zeros())],
        [zero(), zero()],
    )
    .unwrap();
    let r = solve_problem(&p, &RunOptions::new(6)).unwrap();
    assert!(r.field.nodal.iter().all(|&v| v == 0.0));
    assert_eq!(r.solve.iterations, 0);
}

#[test]
fn five_tet_mesh_converges() {
    let p = ProblemSpec::example1(1.0, 10.0).unwrap();
    let errs: Vec<f64> = [8, 16]
        .iter()
        .map(|&n| {
            let mut o = RunOptions::new(n);
            o.subdivision = Subdivision::FiveTet;
            solve_problem(&p, &o).unwrap().errors.unwrap().l2_error
        })
        .collect();
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}
