//! Interface geometry on the background mesh: element classification, edge
//! cut points, the approximating plane of each cut element, and the
//! decompositions of cut elements and cut faces used for quadrature.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{IfeError, Result, Warning};
use crate::levelset::LevelSet;
use crate::mesh::{signed_volume, triangle_area, Mesh, TET_EDGES};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// Sign convention of the level set; zero belongs to the plus side.
    pub fn of_value(v: f64) -> Side {
        if v < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Minus => 0,
            Side::Plus => 1,
        }
    }

    pub const BOTH: [Side; 2] = [Side::Minus, Side::Plus];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementTag {
    Minus,
    Plus,
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Nodes with `|value| < snap_tolerance * h` are moved to the plus side.
    pub snap_tolerance: f64,
    /// Interior samples per sign-changing edge used to detect edges crossed
    /// more than once. Zero disables the check.
    pub edge_samples: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { snap_tolerance: 1e-12, edge_samples: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct ElementClassification {
    pub tags: Vec<ElementTag>,
    pub node_values: Vec<f64>,
    /// Node sides after snapping.
    pub node_sides: Vec<Side>,
    /// Cut elements, ascending.
    pub interface_elements: Vec<usize>,
    /// Interior faces of cut elements, ascending.
    pub interface_faces: Vec<usize>,
    pub warnings: Vec<Warning>,
}

impl ElementClassification {
    pub fn is_interface(&self, e: usize) -> bool {
        self.tags[e] == ElementTag::Interface
    }

    /// Side of a non-interface element.
    pub fn element_side(&self, e: usize) -> Option<Side> {
        match self.tags[e] {
            ElementTag::Minus => Some(Side::Minus),
            ElementTag::Plus => Some(Side::Plus),
            ElementTag::Interface => None,
        }
    }
}

pub fn classify(mesh: &Mesh, ls: &dyn LevelSet) -> Result<ElementClassification> {
    classify_with(mesh, ls, &ClassifyOptions::default())
}

pub fn classify_with(mesh: &Mesh, ls: &dyn LevelSet, opts: &ClassifyOptions) -> Result<ElementClassification> {
    let node_values: Vec<f64> = mesh.nodes.par_iter().map(|x| ls.value(x)).collect();
    let snap = opts.snap_tolerance * mesh.h();
    let mut warnings = Vec::new();
    let node_sides: Vec<Side> = node_values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.abs() < snap {
                warnings.push(Warning::NodeSnapped { node: i });
                Side::Plus
            } else {
                Side::of_value(v)
            }
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }

    // An element whose plus vertices all sit on the interface has an empty
    // plus part; it is treated as a minus element.
    let snapped = |p: usize| node_values[p].abs() < snap;
    let tags: Vec<ElementTag> = mesh
        .elements
        .iter()
        .enumerate()
        .map(|(e, tet)| {
            let minus = tet.iter().filter(|&&p| node_sides[p] == Side::Minus).count();
            match minus {
                4 => ElementTag::Minus,
                0 => ElementTag::Plus,
                _ if tet.iter().all(|&p| node_sides[p] == Side::Minus || snapped(p)) => {
                    let w = Warning::TouchingElement { element: e };
                    log::warn!("{w}");
                    warnings.push(w);
                    ElementTag::Minus
                }
                _ => ElementTag::Interface,
            }
        })
        .collect();
    let interface_elements: Vec<usize> =
        (0..tags.len()).filter(|&e| tags[e] == ElementTag::Interface).collect();

    if opts.edge_samples > 0 {
        interface_elements.par_iter().try_for_each(|&e| check_single_crossings(mesh, ls, e, opts.edge_samples))?;
    }

    let mut interface_faces: Vec<usize> = interface_elements
        .iter()
        .flat_map(|&e| mesh.element_faces[e].iter().copied())
        .filter(|&f| !mesh.faces[f].is_boundary())
        .collect();
    interface_faces.sort_unstable();
    interface_faces.dedup();

    Ok(ElementClassification { tags, node_values, node_sides, interface_elements, interface_faces, warnings })
}

fn check_single_crossings(mesh: &Mesh, ls: &dyn LevelSet, e: usize, samples: usize) -> Result<()> {
    let tet = &mesh.elements[e];
    for &(i, j) in &TET_EDGES {
        let (a, b) = (tet[i].min(tet[j]), tet[i].max(tet[j]));
        let (xa, xb) = (mesh.nodes[a], mesh.nodes[b]);
        if Side::of_value(ls.value(&xa)) == Side::of_value(ls.value(&xb)) {
            continue;
        }
        let mut changes = 0;
        let mut prev = Side::of_value(ls.value(&xa));
        for s in 1..=samples + 1 {
            let t = s as f64 / (samples + 1) as f64;
            let cur = Side::of_value(ls.value(&(xa + t * (xb - xa))));
            if cur != prev {
                changes += 1;
            }
            prev = cur;
        }
        if changes > 1 {
            return Err(IfeError::MultipleEdgeCuts { element: e, a, b });
        }
    }
    Ok(())
}

/// Parametric root `t` of the level set on the segment `a + t (b - a)`.
///
/// Bisection to machine resolution followed by Newton polishing that is
/// only accepted when it stays inside the bracket and reduces `|value|`.
pub fn edge_root(ls: &dyn LevelSet, a: &Vec3, b: &Vec3) -> Result<f64> {
    let (fa, fb) = (ls.value(a), ls.value(b));
    if !(fa * fb < 0.0) {
        return Err(IfeError::Precondition(format!(
            "edge_root needs a sign change, got values {fa:e} and {fb:e}"
        )));
    }
    Ok(bracketed_root(ls, a, b, Side::of_value(fa)))
}

fn bracketed_root(ls: &dyn LevelSet, a: &Vec3, b: &Vec3, side_a: Side) -> f64 {
    let d = b - a;
    let at = |t: f64| ls.value(&(a + t * d));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = at(mid);
        if fm == 0.0 {
            return mid;
        }
        if Side::of_value(fm) == side_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (at(lo), at(hi));
    let mut t = if flo.abs() <= fhi.abs() { lo } else { hi };
    let mut ft = at(t).abs();
    for _ in 0..3 {
        let x = a + t * d;
        let slope = ls.gradient(&x).dot(&d);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let tn = t - ls.value(&x) / slope;
        if !(tn >= lo.min(hi) - f64::EPSILON && tn <= hi.max(lo) + f64::EPSILON) {
            break;
        }
        let fn_ = at(tn).abs();
        if fn_ < ft {
            t = tn;
            ft = fn_;
        } else {
            break;
        }
    }
    t
}

fn triangle_max_angle(p: &[Vec3; 3]) -> f64 {
    let angle = |a: &Vec3, b: &Vec3, c: &Vec3| {
        let (u, v) = (b - a, c - a);
        u.angle(&v)
    };
    angle(&p[0], &p[1], &p[2]).max(angle(&p[1], &p[2], &p[0])).max(angle(&p[2], &p[0], &p[1]))
}

fn is_collinear(p: &[Vec3; 3]) -> bool {
    let scale = (p[1] - p[0]).norm().max((p[2] - p[1]).norm()).max((p[0] - p[2]).norm());
    scale == 0.0 || 2.0 * triangle_area(&p[0], &p[1], &p[2]) <= 1e-10 * scale * scale
}

/// Picks 3 of the 4 quadrilateral-ordered cut points `D1..D4` spanning the
/// approximating plane.
///
/// Candidate `k` omits `D(k+1)` and keeps the cyclic triple that follows it.
/// The candidate with the smallest maximum interior angle wins; ties go to the
/// smaller omitted index. Collinear candidates are skipped; `None` means all
/// four are collinear.
pub fn select_plane_triple(points: &[Vec3; 4]) -> Option<[usize; 3]> {
    let mut best: Option<([usize; 3], f64)> = None;
    for k in 0..4 {
        let idx = [(k + 1) % 4, (k + 2) % 4, (k + 3) % 4];
        let tri = [points[idx[0]], points[idx[1]], points[idx[2]]];
        if is_collinear(&tri) {
            continue;
        }
        let worst = triangle_max_angle(&tri);
        match best {
            Some((_, b)) if worst >= b - 1e-12 * b => {}
            _ => best = Some((idx, worst)),
        }
    }
    best.map(|(idx, _)| idx)
}

/// A cut point on a tetrahedron edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPoint {
    /// Local vertex indices of the edge.
    pub edge: (usize, usize),
    /// Parameter along `edge.0 -> edge.1`.
    pub t: f64,
    pub point: Vec3,
}

/// Geometry of one cut element.
#[derive(Debug, Clone)]
pub struct CutElementGeometry {
    pub element: usize,
    pub vertices: [Vec3; 4],
    /// Side of each vertex from the level-set sign (after snapping).
    pub vertex_sides: [Side; 4],
    /// 3 cut points, or 4 in quadrilateral order (consecutive points share a face).
    pub cut_points: Vec<CutPoint>,
    /// Indices into `cut_points` of the points spanning the plane.
    pub selected: [usize; 3],
    pub plane_point: Vec3,
    /// Unit normal pointing from the minus to the plus side.
    pub normal: Vec3,
    /// For 4-point cuts: the omitted point index and where the plane crosses its edge.
    pub reintersection: Option<(usize, Vec3)>,
    pub minus_subtets: Vec<[Vec3; 4]>,
    pub plus_subtets: Vec<[Vec3; 4]>,
    /// Triangulation of the plane section inside the element.
    pub interface_triangles: Vec<[Vec3; 3]>,
}

fn oriented(mut t: [Vec3; 4]) -> [Vec3; 4] {
    if signed_volume(&t[0], &t[1], &t[2], &t[3]) < 0.0 {
        t.swap(2, 3);
    }
    t
}

fn prism_tets(top: [Vec3; 3], bottom: [Vec3; 3]) -> [[Vec3; 4]; 3] {
    let (t, b) = (top, bottom);
    [
        oriented([t[0], t[1], t[2], b[2]]),
        oriented([t[0], t[1], b[1], b[2]]),
        oriented([t[0], b[0], b[1], b[2]]),
    ]
}

impl CutElementGeometry {
    /// Builds the cut geometry from the vertex sides and one cut point per
    /// sign-changing edge (in any order).
    pub fn from_cuts(
        element: usize,
        vertices: [Vec3; 4],
        vertex_sides: [Side; 4],
        cuts: &[CutPoint],
    ) -> Result<(Self, Option<Warning>)> {
        let find = |i: usize, j: usize| -> Result<CutPoint> {
            cuts.iter()
                .find(|c| c.edge == (i, j) || c.edge == (j, i))
                .map(|c| if c.edge == (i, j) { *c } else { CutPoint { edge: (i, j), t: 1.0 - c.t, point: c.point } })
                .ok_or_else(|| IfeError::Internal(format!("element {element}: missing cut on edge ({i}, {j})")))
        };
        let minus: Vec<usize> = (0..4).filter(|&i| vertex_sides[i] == Side::Minus).collect();
        let plus: Vec<usize> = (0..4).filter(|&i| vertex_sides[i] == Side::Plus).collect();
        let mut warning = None;

        let geom = match (minus.len(), plus.len()) {
            (1, 3) | (3, 1) => {
                let (lone, others) = if minus.len() == 1 { (minus[0], plus) } else { (plus[0], minus) };
                let cut_points: Vec<CutPoint> =
                    others.iter().map(|&o| find(lone, o)).collect::<Result<_>>()?;
                let p = [cut_points[0].point, cut_points[1].point, cut_points[2].point];
                if is_collinear(&p) {
                    return Err(IfeError::DegenerateCut { element });
                }
                let (plane_point, normal) = oriented_plane(&p, &vertices, &vertex_sides);
                let lone_tet = oriented([vertices[lone], p[0], p[1], p[2]]);
                let prism = prism_tets(p, [vertices[others[0]], vertices[others[1]], vertices[others[2]]]);
                let (minus_subtets, plus_subtets) = if vertex_sides[lone] == Side::Minus {
                    (vec![lone_tet], prism.to_vec())
                } else {
                    (prism.to_vec(), vec![lone_tet])
                };
                CutElementGeometry {
                    element,
                    vertices,
                    vertex_sides,
                    cut_points,
                    selected: [0, 1, 2],
                    plane_point,
                    normal,
                    reintersection: None,
                    minus_subtets,
                    plus_subtets,
                    interface_triangles: vec![p],
                }
            }
            (2, 2) => {
                let (a, b, c, d) = (minus[0], minus[1], plus[0], plus[1]);
                let cut_points = vec![find(a, c)?, find(a, d)?, find(b, d)?, find(b, c)?];
                let quad = [cut_points[0].point, cut_points[1].point, cut_points[2].point, cut_points[3].point];
                let selected = select_plane_triple(&quad).ok_or(IfeError::DegenerateCut { element })?;
                let p = [quad[selected[0]], quad[selected[1]], quad[selected[2]]];
                let (plane_point, normal) = oriented_plane(&p, &vertices, &vertex_sides);
                let omitted = (0..4).find(|k| !selected.contains(k)).unwrap_or(3);
                let (i, j) = cut_points[omitted].edge;
                let (vi, vj) = (vertices[i], vertices[j]);
                let denom = (vj - vi).dot(&normal);
                let mut t = if denom != 0.0 { (plane_point - vi).dot(&normal) / denom } else { cut_points[omitted].t };
                if !(t > 0.0 && t < 1.0) {
                    warning = Some(Warning::ReintersectionClamped { element, t });
                    t = t.clamp(0.0, 1.0);
                }
                let moved = vi + t * (vj - vi);
                let mut q = quad;
                q[omitted] = moved;
                // q = [ac, ad, bd, bc]
                let va = vertices;
                let minus_subtets = prism_tets([va[a], q[0], q[1]], [va[b], q[3], q[2]]).to_vec();
                let plus_subtets = prism_tets([va[c], q[0], q[3]], [va[d], q[1], q[2]]).to_vec();
                CutElementGeometry {
                    element,
                    vertices,
                    vertex_sides,
                    cut_points,
                    selected,
                    plane_point,
                    normal,
                    reintersection: Some((omitted, moved)),
                    minus_subtets,
                    plus_subtets,
                    interface_triangles: vec![[q[0], q[1], q[2]], [q[0], q[2], q[3]]],
                }
            }
            _ => {
                return Err(IfeError::Internal(format!("element {element} is not cut by the interface")));
            }
        };
        Ok((geom, warning))
    }

    pub fn selected_points(&self) -> [Vec3; 3] {
        let s = &self.selected;
        [self.cut_points[s[0]].point, self.cut_points[s[1]].point, self.cut_points[s[2]].point]
    }

    /// Side of `x` relative to the approximating plane; points on the plane
    /// belong to the minus side.
    pub fn plane_side(&self, x: &Vec3) -> Side {
        if (x - self.plane_point).dot(&self.normal) <= 0.0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    pub fn subtets(&self, side: Side) -> &[[Vec3; 4]] {
        match side {
            Side::Minus => &self.minus_subtets,
            Side::Plus => &self.plus_subtets,
        }
    }

    pub fn side_volume(&self, side: Side) -> f64 {
        self.subtets(side).iter().map(|t| signed_volume(&t[0], &t[1], &t[2], &t[3])).sum()
    }

    pub fn volume(&self) -> f64 {
        let v = &self.vertices;
        signed_volume(&v[0], &v[1], &v[2], &v[3])
    }

    pub fn interface_area(&self) -> f64 {
        self.interface_triangles.iter().map(|t| triangle_area(&t[0], &t[1], &t[2])).sum()
    }

    /// Area-weighted centroid of the plane section.
    pub fn interface_centroid(&self) -> Vec3 {
        let mut acc = Vec3::zeros();
        let mut area = 0.0;
        for t in &self.interface_triangles {
            let a = triangle_area(&t[0], &t[1], &t[2]);
            acc += a * (t[0] + t[1] + t[2]) / 3.0;
            area += a;
        }
        if area > 0.0 {
            acc / area
        } else {
            self.plane_point
        }
    }

    /// Longest element edge.
    pub fn diameter(&self) -> f64 {
        TET_EDGES
            .iter()
            .map(|&(i, j)| (self.vertices[i] - self.vertices[j]).norm())
            .fold(0.0, f64::max)
    }
}

/// Plane through `p` with unit normal oriented towards the plus vertices.
fn oriented_plane(p: &[Vec3; 3], vertices: &[Vec3; 4], sides: &[Side; 4]) -> (Vec3, Vec3) {
    let mut n = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
    let score: f64 = (0..4)
        .map(|i| {
            let d = (vertices[i] - p[0]).dot(&n);
            if sides[i] == Side::Plus {
                d
            } else {
                -d
            }
        })
        .sum();
    if score < 0.0 {
        n = -n;
    }
    (p[0], n)
}

/// Cut geometries of all interface elements.
#[derive(Debug, Clone, Default)]
pub struct CutGeometries {
    pub cuts: Vec<CutElementGeometry>,
    index: HashMap<usize, usize>,
    pub warnings: Vec<Warning>,
}

impl CutGeometries {
    pub fn from_vec(cuts: Vec<CutElementGeometry>) -> Self {
        let index = cuts.iter().enumerate().map(|(k, c)| (c.element, k)).collect();
        Self { cuts, index, warnings: Vec::new() }
    }

    pub fn get(&self, element: usize) -> Option<&CutElementGeometry> {
        self.index.get(&element).map(|&k| &self.cuts[k])
    }

    /// Position of `element` in `cuts`.
    pub fn slot(&self, element: usize) -> Option<usize> {
        self.index.get(&element).copied()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CutElementGeometry> {
        self.cuts.iter()
    }

    /// Total area of the piecewise-planar interface approximation.
    pub fn interface_area(&self) -> f64 {
        self.cuts.iter().map(|c| c.interface_area()).sum()
    }
}

/// Builds the cut geometry of every interface element.
///
/// Cut points are computed along each edge in the direction of increasing
/// global node id, so neighbouring elements see bitwise identical points.
pub fn build_cut_geometry(
    mesh: &Mesh,
    ls: &dyn LevelSet,
    classification: &ElementClassification,
) -> Result<CutGeometries> {
    let built: Vec<(CutElementGeometry, Option<Warning>)> = classification
        .interface_elements
        .par_iter()
        .map(|&e| {
            let tet = mesh.elements[e];
            let sides = tet.map(|p| classification.node_sides[p]);
            let mut cuts = Vec::with_capacity(4);
            for &(i, j) in &TET_EDGES {
                if sides[i] == sides[j] {
                    continue;
                }
                let (gi, gj) = (tet[i], tet[j]);
                let (lo, hi) = if gi < gj { (gi, gj) } else { (gj, gi) };
                let (xa, xb) = (mesh.nodes[lo], mesh.nodes[hi]);
                let t = bracketed_root(ls, &xa, &xb, classification.node_sides[lo]);
                let point = xa + t * (xb - xa);
                let t_local = if gi < gj { t } else { 1.0 - t };
                cuts.push(CutPoint { edge: (i, j), t: t_local, point });
            }
            CutElementGeometry::from_cuts(e, mesh.element_vertices(e), sides, &cuts)
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let cuts: Vec<CutElementGeometry> = built
        .into_iter()
        .map(|(g, w)| {
            if let Some(w) = w {
                log::warn!("{w}");
                warnings.push(w);
            }
            g
        })
        .collect();
    let mut out = CutGeometries::from_vec(cuts);
    out.warnings = warnings;
    Ok(out)
}

/// A piece of a mesh face lying on one side of the planes of both adjacent
/// elements. `sides[0]` refers to `face.left`, `sides[1]` to `face.right`;
/// `None` when that element is not cut (or absent). `side` is the piece both
/// traces are taken from: the common tag when the planes agree, otherwise the
/// level set sign at the centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSubTriangle {
    pub vertices: [Vec3; 3],
    pub sides: [Option<Side>; 2],
    pub side: Side,
}

impl FaceSubTriangle {
    pub fn area(&self) -> f64 {
        triangle_area(&self.vertices[0], &self.vertices[1], &self.vertices[2])
    }
}

/// Splits a convex planar polygon by the plane `(x - p) · n = 0`.
fn split_polygon(poly: &[Vec3], p: &Vec3, n: &Vec3, tol: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let d: Vec<f64> = poly
        .iter()
        .map(|x| {
            let v = (x - p).dot(n);
            if v.abs() <= tol {
                0.0
            } else {
                v
            }
        })
        .collect();
    let (mut neg, mut pos) = (Vec::new(), Vec::new());
    for k in 0..poly.len() {
        let l = (k + 1) % poly.len();
        if d[k] <= 0.0 {
            neg.push(poly[k]);
        }
        if d[k] >= 0.0 {
            pos.push(poly[k]);
        }
        if (d[k] < 0.0 && d[l] > 0.0) || (d[k] > 0.0 && d[l] < 0.0) {
            let s = d[k] / (d[k] - d[l]);
            let x = poly[k] + s * (poly[l] - poly[k]);
            neg.push(x);
            pos.push(x);
        }
    }
    (neg, pos)
}

fn polygon_area(poly: &[Vec3]) -> f64 {
    (1..poly.len().saturating_sub(1)).map(|k| triangle_area(&poly[0], &poly[k], &poly[k + 1])).sum()
}

/// Common refinement of face `face_id` against the approximating planes of
/// its (up to two) cut neighbours.
pub fn refine_cut_face(
    mesh: &Mesh,
    face_id: usize,
    cuts: &CutGeometries,
    ls: &dyn LevelSet,
) -> Result<Vec<FaceSubTriangle>> {
    let face = &mesh.faces[face_id];
    let owners = [Some(face.left), face.right];
    let geoms = owners.map(|o| o.and_then(|e| cuts.get(e)));
    let verts = mesh.face_vertices(face_id);
    let face_area = triangle_area(&verts[0], &verts[1], &verts[2]);
    let scale = mesh.face_diameter(face_id);

    let mut polys = vec![verts.to_vec()];
    for g in geoms.iter().flatten() {
        let mut next = Vec::with_capacity(polys.len() * 2);
        for poly in &polys {
            let (neg, pos) = split_polygon(poly, &g.plane_point, &g.normal, 1e-14 * scale);
            for piece in [neg, pos] {
                if piece.len() >= 3 && polygon_area(&piece) > 1e-15 * face_area {
                    next.push(piece);
                }
            }
        }
        polys = next;
    }

    let mut out = Vec::new();
    for poly in &polys {
        for k in 1..poly.len() - 1 {
            let tri = [poly[0], poly[k], poly[k + 1]];
            if triangle_area(&tri[0], &tri[1], &tri[2]) <= 1e-15 * face_area {
                continue;
            }
            let c = (tri[0] + tri[1] + tri[2]) / 3.0;
            let sides = geoms.map(|g| g.map(|g| g.plane_side(&c)));
            let side = match sides {
                [Some(a), Some(b)] if a != b => Side::of_value(ls.value(&c)),
                [Some(a), _] | [_, Some(a)] => a,
                _ => Side::of_value(ls.value(&c)),
            };
            out.push(FaceSubTriangle { vertices: tri, sides, side });
        }
    }
    let total: f64 = out.iter().map(|t| t.area()).sum();
    if (total - face_area).abs() > 1e-10 * face_area {
        return Err(IfeError::Internal(format!(
            "face {face_id}: refined area {total:e} differs from face area {face_area:e}"
        )));
    }
    Ok(out)
}
