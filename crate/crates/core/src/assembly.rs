//! Symmetric interior-penalty assembly over the immersed space.
//!
//! Unknowns are the values at free mesh nodes. Off the interface the local
//! functions are the P1 barycentric functions; on cut elements they are the
//! nodal immersed shape functions. Faces of cut elements carry the
//! consistency and penalty terms. The enrichment only enters the load vector.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::basis::{p1_basis, solve_local_basis, IfeLocalBasis, PiecewiseLinear, SideSelector};
use crate::enrichment::{assemble_enrichment, EnrichmentField, EnrichmentMode};
use crate::error::{IfeError, Result, Warning};
use crate::geometry::{
    build_cut_geometry, classify_with, refine_cut_face, ClassifyOptions, CutGeometries, ElementClassification,
    FaceSubTriangle, Side,
};
use crate::levelset::LevelSet;
use crate::mesh::{signed_volume, Mesh};
use crate::problems::ProblemSpec;
use crate::quadrature::{tet_points, triangle_points};
use crate::sparse::CsrMatrix;
use crate::Vec3;

/// Length scale of the penalty term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyLength {
    /// Longest edge of the face.
    #[default]
    FaceDiameter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyParams {
    /// Penalty parameter; `None` means `10 * max(beta-, beta+)`.
    pub sigma: Option<f64>,
    pub penalty_length: PenaltyLength,
    pub enrichment_mode: EnrichmentMode,
    /// Quadrature degree for the source and interface load terms.
    pub load_degree: usize,
}

impl Default for AssemblyParams {
    fn default() -> Self {
        Self { sigma: None, penalty_length: PenaltyLength::FaceDiameter, enrichment_mode: EnrichmentMode::Pointwise, load_degree: 4 }
    }
}

impl AssemblyParams {
    pub fn sigma_for(&self, beta_minus: f64, beta_plus: f64) -> Result<f64> {
        let s = self.sigma.unwrap_or(10.0 * beta_minus.max(beta_plus));
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(IfeError::InvalidArgument(format!("penalty parameter must be positive, got {s}")))
        }
    }
}

/// Mesh, interface geometry and local bases: everything that depends on
/// the level set and the coefficients but not on the data.
#[derive(Debug, Clone)]
pub struct IfeSpace {
    pub mesh: Mesh,
    pub classification: ElementClassification,
    pub cuts: CutGeometries,
    /// Local bases, aligned with `cuts.cuts`.
    pub bases: Vec<IfeLocalBasis>,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// Refinement of every face in `classification.interface_faces`.
    pub face_pieces: Vec<Vec<FaceSubTriangle>>,
    pub dof_of_node: Vec<Option<usize>>,
    pub free_nodes: Vec<usize>,
    pub warnings: Vec<Warning>,
}

impl IfeSpace {
    pub fn new(mesh: Mesh, ls: &dyn LevelSet, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Self::with_options(mesh, ls, beta_minus, beta_plus, &ClassifyOptions::default())
    }

    pub fn with_options(
        mesh: Mesh,
        ls: &dyn LevelSet,
        beta_minus: f64,
        beta_plus: f64,
        opts: &ClassifyOptions,
    ) -> Result<Self> {
        let classification = classify_with(&mesh, ls, opts)?;
        let cuts = build_cut_geometry(&mesh, ls, &classification)?;
        let built: Vec<(IfeLocalBasis, Option<Warning>)> =
            cuts.cuts.par_iter().map(|g| solve_local_basis(g, beta_minus, beta_plus)).collect::<Result<_>>()?;
        let mut warnings = classification.warnings.clone();
        warnings.extend(cuts.warnings.iter().cloned());
        let bases = built
            .into_iter()
            .map(|(b, w)| {
                warnings.extend(w);
                b
            })
            .collect();
        let face_pieces = classification
            .interface_faces
            .par_iter()
            .map(|&f| refine_cut_face(&mesh, f, &cuts, ls))
            .collect::<Result<_>>()?;
        let mut dof_of_node = vec![None; mesh.n_nodes()];
        let mut free_nodes = Vec::new();
        for (i, slot) in dof_of_node.iter_mut().enumerate() {
            if !mesh.boundary_nodes[i] {
                *slot = Some(free_nodes.len());
                free_nodes.push(i);
            }
        }
        Ok(Self { mesh, classification, cuts, bases, beta_minus, beta_plus, face_pieces, dof_of_node, free_nodes, warnings })
    }

    pub fn n_dofs(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn beta(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.beta_minus,
            Side::Plus => self.beta_plus,
        }
    }

    pub fn local_basis(&self, e: usize) -> Option<&IfeLocalBasis> {
        self.cuts.slot(e).map(|k| &self.bases[k])
    }

    /// Nodal shape functions of element `e`, by local vertex.
    pub fn shapes(&self, e: usize) -> [PiecewiseLinear; 4] {
        match self.local_basis(e) {
            Some(b) => b.shape,
            None => p1_basis(&self.mesh.element_vertices(e)),
        }
    }

    /// Integration pieces of an element: sub-tetrahedra with the side whose
    /// local piece applies.
    pub fn pieces(&self, e: usize) -> Vec<([Vec3; 4], Side)> {
        match self.cuts.get(e) {
            Some(g) => g
                .minus_subtets
                .iter()
                .map(|t| (*t, Side::Minus))
                .chain(g.plus_subtets.iter().map(|t| (*t, Side::Plus)))
                .collect(),
            None => {
                let side = self.classification.element_side(e).unwrap_or(Side::Plus);
                vec![(self.mesh.element_vertices(e), side)]
            }
        }
    }

    /// Piece selector for points in element `e`.
    pub fn selector(&self, e: usize) -> Option<SideSelector<'static>> {
        self.cuts.get(e).map(SideSelector::plane_of)
    }
}

/// Face traces of a function: its local piecewise linear on the left and
/// right element of the face (`None` means zero).
type Traces = (Option<PiecewiseLinear>, Option<PiecewiseLinear>);

/// Volume part of the bilinear form on one element for the given local
/// functions, `M[k][l] = sum_pieces beta grad f_k . grad f_l`.
fn volume_block(space: &IfeSpace, e: usize, funcs: &[PiecewiseLinear]) -> Vec<f64> {
    let m = funcs.len();
    let mut out = vec![0.0; m * m];
    for (tet, side) in space.pieces(e) {
        let vol = signed_volume(&tet[0], &tet[1], &tet[2], &tet[3]).abs();
        if vol == 0.0 {
            continue;
        }
        let c = space.beta(side) * vol;
        let grads: Vec<Vec3> = funcs.iter().map(|f| f.gradient(side)).collect();
        for k in 0..m {
            for l in 0..m {
                out[k * m + l] += c * grads[k].dot(&grads[l]);
            }
        }
    }
    out
}

/// Face part of the bilinear form on interface face `slot` (index into
/// `interface_faces`):
/// `-{beta du/dn}[v] - {beta dv/dn}[u] + sigma / |e| [u][v]`.
fn face_block(space: &IfeSpace, slot: usize, sigma: f64, funcs: &[Traces]) -> Vec<f64> {
    let mesh = &space.mesh;
    let f = space.classification.interface_faces[slot];
    let normal = mesh.face_normal(f);
    let penalty = sigma / mesh.face_diameter(f);
    let m = funcs.len();
    let mut out = vec![0.0; m * m];
    let mut jump = vec![0.0; m];
    let mut flux = vec![0.0; m];
    for piece in &space.face_pieces[slot] {
        let side = piece.side;
        let beta = space.beta(side);
        for (x, w) in triangle_points(&piece.vertices, 2) {
            for (k, (tl, tr)) in funcs.iter().enumerate() {
                let (vl, gl) = tl.map_or((0.0, Vec3::zeros()), |p| (p.value(side, &x), p.gradient(side)));
                let (vr, gr) = tr.map_or((0.0, Vec3::zeros()), |p| (p.value(side, &x), p.gradient(side)));
                jump[k] = vl - vr;
                flux[k] = 0.5 * beta * (gl + gr).dot(&normal);
            }
            for k in 0..m {
                for l in 0..m {
                    out[k * m + l] += w * (-flux[l] * jump[k] - flux[k] * jump[l] + penalty * jump[k] * jump[l]);
                }
            }
        }
    }
    out
}

/// Global nodes touching interface face `slot` and their traces.
fn face_functions(space: &IfeSpace, slot: usize) -> (Vec<usize>, Vec<Traces>) {
    let mesh = &space.mesh;
    let face = &mesh.faces[space.classification.interface_faces[slot]];
    let right = face.right.expect("interface faces are interior");
    let (nl, nr) = (mesh.elements[face.left], mesh.elements[right]);
    let (sl, sr) = (space.shapes(face.left), space.shapes(right));
    let nodes: BTreeSet<usize> = nl.iter().chain(&nr).copied().collect();
    let nodes: Vec<usize> = nodes.into_iter().collect();
    let traces = nodes
        .iter()
        .map(|p| (nl.iter().position(|q| q == p).map(|i| sl[i]), nr.iter().position(|q| q == p).map(|i| sr[i])))
        .collect();
    (nodes, traces)
}

/// Sparsity of the bilinear form over all mesh nodes: the P1 node graph
/// plus couplings across interface faces.
fn full_pattern(space: &IfeSpace) -> CsrMatrix {
    let mesh = &space.mesh;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_nodes()];
    for tet in &mesh.elements {
        for &a in tet {
            rows[a].extend_from_slice(tet);
        }
    }
    for &f in &space.classification.interface_faces {
        let face = &mesh.faces[f];
        if let Some(r) = face.right {
            let (nl, nr) = (mesh.elements[face.left], mesh.elements[r]);
            for &a in nl.iter().chain(&nr) {
                rows[a].extend_from_slice(&nl);
                rows[a].extend_from_slice(&nr);
            }
        }
    }
    CsrMatrix::from_pattern(mesh.n_nodes(), rows)
}

/// Bilinear form over all mesh nodes (boundary rows included).
pub fn assemble_full_matrix(space: &IfeSpace, sigma: f64) -> Result<CsrMatrix> {
    let mesh = &space.mesh;
    let mut a = full_pattern(space);
    let blocks: Vec<Vec<f64>> =
        (0..mesh.n_elements()).into_par_iter().map(|e| volume_block(space, e, &space.shapes(e))).collect();
    for (e, block) in blocks.iter().enumerate() {
        let tet = mesh.elements[e];
        for k in 0..4 {
            for l in 0..4 {
                a.add(tet[k], tet[l], block[k * 4 + l])?;
            }
        }
    }
    let faces: Vec<(Vec<usize>, Vec<f64>)> = (0..space.classification.interface_faces.len())
        .into_par_iter()
        .map(|slot| {
            let (nodes, traces) = face_functions(space, slot);
            (nodes, face_block(space, slot, sigma, &traces))
        })
        .collect();
    for (nodes, block) in &faces {
        let m = nodes.len();
        for k in 0..m {
            for l in 0..m {
                a.add(nodes[k], nodes[l], block[k * m + l])?;
            }
        }
    }
    let defect = a.symmetry_defect();
    if defect > 1e-10 {
        return Err(IfeError::Internal(format!("assembled matrix is not symmetric (relative defect {defect:e})")));
    }
    Ok(a)
}

/// The stiffness matrix on free nodes.
pub fn assemble_bilinear(space: &IfeSpace, sigma: f64) -> Result<CsrMatrix> {
    let full = assemble_full_matrix(space, sigma)?;
    Ok(full.submatrix(&space.free_nodes, &space.dof_of_node, space.n_dofs()))
}

/// `a_h(w, phi_i)` for every node `i`, with `w` given element-wise on the
/// elements listed in `support` (zero elsewhere).
pub fn bilinear_action(
    space: &IfeSpace,
    sigma: f64,
    support: &[usize],
    w: &(dyn Fn(usize) -> PiecewiseLinear + Sync),
) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; mesh.n_nodes()];
    let in_support = |e: usize| support.binary_search(&e).is_ok();
    let vols: Vec<[f64; 4]> = support
        .par_iter()
        .map(|&e| {
            let shapes = space.shapes(e);
            let funcs = [shapes[0], shapes[1], shapes[2], shapes[3], w(e)];
            let block = volume_block(space, e, &funcs);
            std::array::from_fn(|k| block[k * 5 + 4])
        })
        .collect();
    for (&e, v) in support.iter().zip(&vols) {
        for k in 0..4 {
            out[mesh.elements[e][k]] += v[k];
        }
    }
    let faces: Vec<(Vec<usize>, Vec<f64>)> = (0..space.classification.interface_faces.len())
        .into_par_iter()
        .filter_map(|slot| {
            let face = &mesh.faces[space.classification.interface_faces[slot]];
            let right = face.right?;
            let wl = in_support(face.left).then(|| w(face.left));
            let wr = in_support(right).then(|| w(right));
            if wl.is_none() && wr.is_none() {
                return None;
            }
            let (nodes, mut traces) = face_functions(space, slot);
            traces.push((wl, wr));
            let m = traces.len();
            let block = face_block(space, slot, sigma, &traces);
            Some((nodes, (0..m - 1).map(|k| block[k * m + m - 1]).collect()))
        })
        .collect();
    for (nodes, vals) in &faces {
        for (p, v) in nodes.iter().zip(vals) {
            out[*p] += v;
        }
    }
    out
}

/// Assembled linear system on free nodes.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub free_nodes: Vec<usize>,
    pub dof_of_node: Vec<Option<usize>>,
    /// Dirichlet values at boundary nodes, zero at free nodes.
    pub dirichlet_values: Vec<f64>,
    pub enrichment: EnrichmentField,
    pub sigma: f64,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        self.free_nodes.len()
    }
}

/// Load vector over all nodes before boundary elimination:
/// `int f phi_i - int_{Gamma_h} q2 {phi_i} - a_h(q_h, phi_i)`.
pub fn assemble_rhs(
    space: &IfeSpace,
    problem: &ProblemSpec,
    enrichment: &EnrichmentField,
    sigma: f64,
    degree: usize,
) -> Vec<f64> {
    let mesh = &space.mesh;
    let loads: Vec<[f64; 4]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let shapes = space.shapes(e);
            let mut acc = [0.0; 4];
            for (tet, side) in space.pieces(e) {
                for (x, w) in tet_points(&tet, degree) {
                    let f = problem.source_at(&x);
                    for k in 0..4 {
                        acc[k] += w * f * shapes[k].value(side, &x);
                    }
                }
            }
            if let Some(g) = space.cuts.get(e) {
                for tri in &g.interface_triangles {
                    for (x, w) in triangle_points(tri, degree) {
                        let q2 = problem.jumps.q2.eval(&x, &g.normal);
                        for k in 0..4 {
                            let avg = 0.5 * (shapes[k].value(Side::Minus, &x) + shapes[k].value(Side::Plus, &x));
                            acc[k] -= w * q2 * avg;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut rhs = vec![0.0; mesh.n_nodes()];
    for (e, acc) in loads.iter().enumerate() {
        for k in 0..4 {
            rhs[mesh.elements[e][k]] += acc[k];
        }
    }
    let support: Vec<usize> = space.cuts.cuts.iter().map(|g| g.element).collect();
    let lift = bilinear_action(space, sigma, &support, &|e| enrichment.local(space.cuts.slot(e).unwrap()));
    for (r, l) in rhs.iter_mut().zip(&lift) {
        *r -= l;
    }
    rhs
}

/// Full system: matrix, load with enrichment and Dirichlet lifting.
pub fn assemble_system(space: &IfeSpace, problem: &ProblemSpec, params: &AssemblyParams) -> Result<SparseSystem> {
    let sigma = params.sigma_for(space.beta_minus, space.beta_plus)?;
    let enrichment = assemble_enrichment(
        &space.mesh,
        problem.level_set.as_ref(),
        &space.cuts,
        &space.bases,
        &problem.jumps,
        params.enrichment_mode,
    )?;
    let full = assemble_full_matrix(space, sigma)?;
    let mut rhs_full = assemble_rhs(space, problem, &enrichment, sigma, params.load_degree);
    let mut dirichlet_values = vec![0.0; space.mesh.n_nodes()];
    for (i, x) in space.mesh.nodes.iter().enumerate() {
        if space.mesh.boundary_nodes[i] {
            dirichlet_values[i] = (problem.boundary)(x);
        }
    }
    let lifted = full.matvec(&dirichlet_values);
    for (r, l) in rhs_full.iter_mut().zip(&lifted) {
        *r -= l;
    }
    let rhs = space.free_nodes.iter().map(|&i| rhs_full[i]).collect();
    let matrix = full.submatrix(&space.free_nodes, &space.dof_of_node, space.n_dofs());
    Ok(SparseSystem {
        matrix,
        rhs,
        free_nodes: space.free_nodes.clone(),
        dof_of_node: space.dof_of_node.clone(),
        dirichlet_values,
        enrichment,
        sigma,
    })
}

/// Standard P1 stiffness pattern on the free nodes (values zero).
pub fn p1_pattern(space: &IfeSpace) -> CsrMatrix {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); space.n_dofs()];
    for tet in &space.mesh.elements {
        for &a in tet {
            if let Some(i) = space.dof_of_node[a] {
                rows[i].extend(tet.iter().filter_map(|&b| space.dof_of_node[b]));
            }
        }
    }
    CsrMatrix::from_pattern(space.n_dofs(), rows)
}

/// Stored positions of a matrix.
pub fn pattern_pairs(a: &CsrMatrix) -> BTreeSet<(usize, usize)> {
    (0..a.n_rows).flat_map(|i| a.row(i).0.iter().map(move |&j| (i, j)).collect::<Vec<_>>()).collect()
}

/// Comparison with the P1 pattern: non-zero entries of `a` outside it, and
/// P1 positions missing from the stored pattern of `a`.
pub fn compare_with_p1(space: &IfeSpace, a: &CsrMatrix) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let p1 = pattern_pairs(&p1_pattern(space));
    let got = pattern_pairs(a);
    let extra = got.difference(&p1).copied().filter(|&(i, j)| a.get(i, j) != 0.0).collect();
    (extra, p1.difference(&got).copied().collect())
}

/// Discrete solution: nodal values at all nodes plus the enrichment.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub nodal: Vec<f64>,
    pub enrichment: EnrichmentField,
}

impl DiscreteField {
    pub fn zeros(space: &IfeSpace) -> Self {
        Self { nodal: vec![0.0; space.mesh.n_nodes()], enrichment: EnrichmentField::zeros(space.cuts.len()) }
    }

    /// Local piecewise-linear function on element `e`.
    pub fn local(&self, space: &IfeSpace, e: usize) -> PiecewiseLinear {
        let shapes = space.shapes(e);
        let tet = space.mesh.elements[e];
        let mut out = PiecewiseLinear::ZERO;
        for k in 0..4 {
            out += shapes[k] * self.nodal[tet[k]];
        }
        if let Some(k) = space.cuts.slot(e) {
            if k < self.enrichment.len() {
                out += self.enrichment.local(k);
            }
        }
        out
    }

    /// Value at `x` in element `e`, piece by `side`.
    pub fn value(&self, space: &IfeSpace, e: usize, side: Side, x: &Vec3) -> f64 {
        self.local(space, e).value(side, x)
    }
}

/// Expands the free-node solution with the Dirichlet values and enrichment.
pub fn reconstruct_solution(space: &IfeSpace, system: &SparseSystem, u: &[f64]) -> DiscreteField {
    let mut nodal = system.dirichlet_values.clone();
    for (k, &i) in system.free_nodes.iter().enumerate() {
        nodal[i] = u[k];
    }
    let _ = space;
    DiscreteField { nodal, enrichment: system.enrichment.clone() }
}
