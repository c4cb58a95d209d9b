//! Structured tetrahedral meshes of a box.
//!
//! The box is split into `n x n x n` cuboids and every cuboid into five or six
//! tetrahedra. Nodes are numbered lexicographically over the grid with the x
//! index running fastest.

use std::collections::HashMap;

use crate::error::{IfeError, Result};
use crate::Vec3;

/// Axis-aligned box `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoxDomain {
    pub fn new(lo: Vec3, hi: Vec3) -> Result<Self> {
        for k in 0..3 {
            if !(hi[k] > lo[k]) || !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(IfeError::InvalidArgument(format!(
                    "degenerate box: lo = {lo:?}, hi = {hi:?}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `(a, b)^3`.
    pub fn cube(a: f64, b: f64) -> Result<Self> {
        Self::new(Vec3::new(a, a, a), Vec3::new(b, b, b))
    }

    pub fn unit() -> Self {
        Self { lo: Vec3::zeros(), hi: Vec3::new(1.0, 1.0, 1.0) }
    }

    pub fn extent(&self) -> Vec3 {
        self.hi - self.lo
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|k| x[k] >= self.lo[k] && x[k] <= self.hi[k])
    }
}

/// How each cuboid of the background grid is split into tetrahedra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Subdivision {
    /// Five tetrahedra per cuboid, with mirrored orientation in alternate cuboids.
    FiveTet,
    /// Kuhn (Freudenthal) subdivision: six tetrahedra around the main diagonal.
    #[default]
    SixTet,
}

impl std::str::FromStr for Subdivision {
    type Err = IfeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "five_tet" | "five" | "5" => Ok(Subdivision::FiveTet),
            "six_tet" | "six" | "6" => Ok(Subdivision::SixTet),
            other => Err(IfeError::InvalidArgument(format!("unknown subdivision `{other}`"))),
        }
    }
}

/// A triangular face. `left < right`; the face normal used by the assembly
/// points from `left` into `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub nodes: [usize; 3],
    pub left: usize,
    pub right: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    /// The element on the other side of `element`, if any.
    pub fn neighbor(&self, element: usize) -> Option<usize> {
        if element == self.left {
            self.right
        } else {
            Some(self.left)
        }
    }
}

/// Local vertex pairs of the six tetrahedron edges.
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local faces of a tetrahedron; face `k` is opposite vertex `k`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: BoxDomain,
    pub n: usize,
    pub subdivision: Subdivision,
    pub nodes: Vec<Vec3>,
    /// Positively oriented node quadruples.
    pub elements: Vec<[usize; 4]>,
    pub faces: Vec<Face>,
    /// Face ids of each element, `element_faces[e][k]` opposite local vertex `k`.
    pub element_faces: Vec<[usize; 4]>,
    pub boundary_nodes: Vec<bool>,
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

fn corner(bits: [usize; 3]) -> usize {
    bits[0] + 2 * bits[1] + 4 * bits[2]
}

fn orient(mut tet: [usize; 4]) -> [usize; 4] {
    let p = |i: usize| {
        let c = CORNERS[i];
        Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64)
    };
    if signed_volume(&p(tet[0]), &p(tet[1]), &p(tet[2]), &p(tet[3])) < 0.0 {
        tet.swap(2, 3);
    }
    tet
}

/// Local cube-corner templates, positively oriented on the unit cube.
fn kuhn_template() -> Vec<[usize; 4]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|p| {
            let mut bits = [0usize; 3];
            let v0 = corner(bits);
            bits[p[0]] = 1;
            let v1 = corner(bits);
            bits[p[1]] = 1;
            let v2 = corner(bits);
            orient([v0, v1, v2, 7])
        })
        .collect()
}

fn five_template(even: bool) -> Vec<[usize; 4]> {
    let c = |x, y, z| corner([x, y, z]);
    let tets = if even {
        vec![
            [c(0, 0, 0), c(1, 1, 0), c(1, 0, 1), c(0, 1, 1)],
            [c(1, 0, 0), c(0, 0, 0), c(1, 1, 0), c(1, 0, 1)],
            [c(0, 1, 0), c(0, 0, 0), c(1, 1, 0), c(0, 1, 1)],
            [c(0, 0, 1), c(0, 0, 0), c(1, 0, 1), c(0, 1, 1)],
            [c(1, 1, 1), c(1, 1, 0), c(1, 0, 1), c(0, 1, 1)],
        ]
    } else {
        vec![
            [c(1, 0, 0), c(0, 1, 0), c(0, 0, 1), c(1, 1, 1)],
            [c(0, 0, 0), c(1, 0, 0), c(0, 1, 0), c(0, 0, 1)],
            [c(1, 1, 0), c(1, 0, 0), c(0, 1, 0), c(1, 1, 1)],
            [c(1, 0, 1), c(1, 0, 0), c(0, 0, 1), c(1, 1, 1)],
            [c(0, 1, 1), c(0, 1, 0), c(0, 0, 1), c(1, 1, 1)],
        ]
    };
    tets.into_iter().map(orient).collect()
}

/// Builds the structured mesh of `domain` with `n` cuboids per axis.
pub fn build_mesh(domain: BoxDomain, n: usize, subdivision: Subdivision) -> Result<Mesh> {
    if n == 0 {
        return Err(IfeError::InvalidArgument("mesh parameter n must be >= 1".into()));
    }
    let domain = BoxDomain::new(domain.lo, domain.hi)?;
    let np = n + 1;
    let step = domain.extent() / n as f64;
    let node_id = |i: usize, j: usize, k: usize| i + np * (j + np * k);

    let mut nodes = Vec::with_capacity(np * np * np);
    let mut boundary_nodes = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let x = |idx: usize, axis: usize| {
                    if idx == n {
                        domain.hi[axis]
                    } else {
                        domain.lo[axis] + idx as f64 * step[axis]
                    }
                };
                nodes.push(Vec3::new(x(i, 0), x(j, 1), x(k, 2)));
                boundary_nodes.push(i == 0 || j == 0 || k == 0 || i == n || j == n || k == n);
            }
        }
    }

    let kuhn = kuhn_template();
    let five_even = five_template(true);
    let five_odd = five_template(false);
    let per_cube = match subdivision {
        Subdivision::FiveTet => 5,
        Subdivision::SixTet => 6,
    };
    let mut elements = Vec::with_capacity(per_cube * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let template = match subdivision {
                    Subdivision::SixTet => &kuhn,
                    Subdivision::FiveTet if (i + j + k) % 2 == 0 => &five_even,
                    Subdivision::FiveTet => &five_odd,
                };
                let global = |c: usize| {
                    let b = CORNERS[c];
                    node_id(i + b[0], j + b[1], k + b[2])
                };
                for t in template {
                    elements.push([global(t[0]), global(t[1]), global(t[2]), global(t[3])]);
                }
            }
        }
    }

    let (faces, element_faces) = build_faces(&elements);
    Ok(Mesh { domain, n, subdivision, nodes, elements, faces, element_faces, boundary_nodes })
}

fn build_faces(elements: &[[usize; 4]]) -> (Vec<Face>, Vec<[usize; 4]>) {
    let mut lookup: HashMap<[usize; 3], usize> = HashMap::with_capacity(elements.len() * 2 + 16);
    let mut faces: Vec<Face> = Vec::with_capacity(elements.len() * 2 + 16);
    let mut element_faces = vec![[usize::MAX; 4]; elements.len()];
    for (e, tet) in elements.iter().enumerate() {
        for (k, local) in TET_FACES.iter().enumerate() {
            let mut key = [tet[local[0]], tet[local[1]], tet[local[2]]];
            key.sort_unstable();
            let id = *lookup.entry(key).or_insert_with(|| {
                faces.push(Face { nodes: key, left: e, right: None });
                faces.len() - 1
            });
            if faces[id].left != e {
                faces[id].right = Some(e);
            }
            element_faces[e][k] = id;
        }
    }
    (faces, element_faces)
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Cuboid edge length; for a non-cubic box the largest of the three.
    pub fn h(&self) -> f64 {
        let e = self.domain.extent() / self.n as f64;
        e.x.max(e.y).max(e.z)
    }

    pub fn element_vertices(&self, e: usize) -> [Vec3; 4] {
        let t = &self.elements[e];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]], self.nodes[t[3]]]
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        let v = self.element_vertices(e);
        signed_volume(&v[0], &v[1], &v[2], &v[3])
    }

    pub fn face_vertices(&self, f: usize) -> [Vec3; 3] {
        let n = &self.faces[f].nodes;
        [self.nodes[n[0]], self.nodes[n[1]], self.nodes[n[2]]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let v = self.face_vertices(f);
        triangle_area(&v[0], &v[1], &v[2])
    }

    /// Longest edge of the face triangle; the length scale of the penalty term.
    pub fn face_diameter(&self, f: usize) -> f64 {
        let v = self.face_vertices(f);
        (v[0] - v[1]).norm().max((v[1] - v[2]).norm()).max((v[2] - v[0]).norm())
    }

    /// Unit normal of face `f` pointing out of `faces[f].left`.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let face = &self.faces[f];
        let v = self.face_vertices(f);
        let mut n = (v[1] - v[0]).cross(&(v[2] - v[0])).normalize();
        let tet = &self.elements[face.left];
        let opposite = tet.iter().find(|&&p| !face.nodes.contains(&p)).copied().unwrap_or(tet[0]);
        if n.dot(&(self.nodes[opposite] - v[0])) > 0.0 {
            n = -n;
        }
        n
    }

    pub fn n_boundary_nodes(&self) -> usize {
        self.boundary_nodes.iter().filter(|&&b| b).count()
    }
}

/// Free-standing form of [`Mesh::face_diameter`].
pub fn face_diameter(mesh: &Mesh, face: usize) -> f64 {
    mesh.face_diameter(face)
}

/// Element patches: `patch(T)` holds every element whose boundary touches
/// the boundary of `T` (shares at least one node, the mesh being conforming).
///
/// Only the node-to-element incidence is stored; patches are gathered on demand.
#[derive(Debug, Clone)]
pub struct PatchIndex {
    offsets: Vec<usize>,
    incident: Vec<usize>,
    elements: Vec<[usize; 4]>,
}

impl PatchIndex {
    pub fn build(mesh: &Mesh) -> Self {
        let mut counts = vec![0usize; mesh.n_nodes() + 1];
        for tet in &mesh.elements {
            for &p in tet {
                counts[p + 1] += 1;
            }
        }
        for i in 0..mesh.n_nodes() {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut incident = vec![0usize; counts[mesh.n_nodes()]];
        for (e, tet) in mesh.elements.iter().enumerate() {
            for &p in tet {
                incident[fill[p]] = e;
                fill[p] += 1;
            }
        }
        Self { offsets: counts, incident, elements: mesh.elements.clone() }
    }

    pub fn elements_of_node(&self, node: usize) -> &[usize] {
        &self.incident[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Sorted patch of element `e`, including `e` itself.
    pub fn patch(&self, e: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.elements[e].iter().flat_map(|&p| self.elements_of_node(p).iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn build_patches(mesh: &Mesh) -> PatchIndex {
    PatchIndex::build(mesh)
}
