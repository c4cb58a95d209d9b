//! Enrichment carrying non-homogeneous jump data on cut elements.
//!
//! On each cut element the enrichment is a combination of the local jump
//! functions with coefficients read off the data: the value jump at the
//! three plane points, and one flux-jump value per element. It has zero
//! nodal values, so it never adds unknowns; it only enters the load vector.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{IfeLocalBasis, PiecewiseLinear};
use crate::error::{IfeError, Result};
use crate::geometry::{CutElementGeometry, CutGeometries};
use crate::levelset::LevelSet;
use crate::mesh::{triangle_area, Mesh, PatchIndex};
use crate::quadrature::triangle_points;
use crate::Vec3;

pub type ScalarField = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
pub type NormalField = Arc<dyn Fn(&Vec3, &Vec3) -> f64 + Send + Sync>;

/// Flux jump `[beta du/dn]` on the interface.
#[derive(Clone)]
pub enum FluxJump {
    /// A vector field `w` extended off the interface; the jump is `w . n`.
    Vector(VectorField),
    /// A scalar function of the point and the unit normal.
    Scalar(NormalField),
}

impl FluxJump {
    pub fn eval(&self, x: &Vec3, n: &Vec3) -> f64 {
        match self {
            FluxJump::Vector(w) => w(x).dot(n),
            FluxJump::Scalar(q) => q(x, n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothness {
    #[default]
    PointwiseOk,
    AverageRequired,
}

/// Value jump `q1 = u+ - u-` and flux jump `q2` on the interface.
#[derive(Clone)]
pub struct JumpData {
    pub q1: ScalarField,
    pub q2: FluxJump,
    pub smoothness: Smoothness,
}

impl JumpData {
    pub fn zero() -> Self {
        Self {
            q1: Arc::new(|_| 0.0),
            q2: FluxJump::Scalar(Arc::new(|_, _| 0.0)),
            smoothness: Smoothness::PointwiseOk,
        }
    }
}

impl std::fmt::Debug for JumpData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JumpData").field("smoothness", &self.smoothness).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnrichmentMode {
    /// Flux jump evaluated once, at the interface centroid projected onto the interface.
    #[default]
    Pointwise,
    /// Flux jump averaged over the discrete interface of the element patch.
    PatchAverage,
}

impl FromStr for EnrichmentMode {
    type Err = IfeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(Self::Pointwise),
            "patch_average" => Ok(Self::PatchAverage),
            _ => Err(IfeError::InvalidArgument(format!(
                "unknown enrichment mode `{s}` (expected pointwise or patch_average)"
            ))),
        }
    }
}

/// Moves `x` onto the zero set by at most 10 Newton steps along the gradient.
pub fn project_to_interface(ls: &dyn LevelSet, x: &Vec3) -> Vec3 {
    let mut p = *x;
    for _ in 0..10 {
        let v = ls.value(&p);
        if v.abs() <= 1e-12 {
            break;
        }
        let g = ls.gradient(&p);
        let g2 = g.norm_squared();
        if g2 == 0.0 || !g2.is_finite() {
            break;
        }
        p -= v / g2 * g;
    }
    p
}

/// `sum_j q1(D_j) xi_j` over the three plane points.
pub fn build_qt1(geom: &CutElementGeometry, basis: &IfeLocalBasis, data: &JumpData) -> PiecewiseLinear {
    let mut out = PiecewiseLinear::ZERO;
    for (j, d) in geom.selected_points().iter().enumerate() {
        out += basis.jump[j] * (data.q1)(d);
    }
    out
}

/// Flux-jump coefficient of one element in pointwise mode.
pub fn pointwise_flux_value(geom: &CutElementGeometry, ls: &dyn LevelSet, data: &JumpData) -> f64 {
    let x = project_to_interface(ls, &geom.interface_centroid());
    let g = ls.gradient(&x);
    let n = if g.norm() > 0.0 { g.normalize() } else { geom.normal };
    data.q2.eval(&x, &n)
}

/// Flux-jump coefficient averaged over the discrete interface of the patch.
pub fn patch_average_flux_value(
    element: usize,
    patch: &PatchIndex,
    cuts: &CutGeometries,
    data: &JumpData,
) -> Result<f64> {
    let mut integral = 0.0;
    let mut area = 0.0;
    for e in patch.patch(element) {
        let Some(g) = cuts.get(e) else { continue };
        for t in &g.interface_triangles {
            area += triangle_area(&t[0], &t[1], &t[2]);
            integral += triangle_points(t, 4).map(|(x, w)| w * data.q2.eval(&x, &g.normal)).sum::<f64>();
        }
    }
    if area <= 0.0 {
        return Err(IfeError::Internal(format!("element {element}: patch has no interface area")));
    }
    Ok(integral / area)
}

pub fn build_qt2(basis: &IfeLocalBasis, flux_value: f64) -> PiecewiseLinear {
    basis.flux * flux_value
}

/// Enrichment on every cut element, indexed like `CutGeometries::cuts`.
#[derive(Debug, Clone, Default)]
pub struct EnrichmentField {
    pub value_part: Vec<PiecewiseLinear>,
    pub flux_part: Vec<PiecewiseLinear>,
}

impl EnrichmentField {
    pub fn zeros(n_cut: usize) -> Self {
        Self { value_part: vec![PiecewiseLinear::ZERO; n_cut], flux_part: vec![PiecewiseLinear::ZERO; n_cut] }
    }

    /// Total enrichment on cut slot `k`.
    pub fn local(&self, k: usize) -> PiecewiseLinear {
        self.value_part[k] + self.flux_part[k]
    }

    pub fn len(&self) -> usize {
        self.value_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value_part.is_empty()
    }
}

pub fn assemble_enrichment(
    mesh: &Mesh,
    ls: &dyn LevelSet,
    cuts: &CutGeometries,
    bases: &[IfeLocalBasis],
    data: &JumpData,
    mode: EnrichmentMode,
) -> Result<EnrichmentField> {
    if mode == EnrichmentMode::Pointwise && data.smoothness == Smoothness::AverageRequired {
        return Err(IfeError::Precondition(
            "flux-jump data is not smooth enough for pointwise evaluation; use patch_average".into(),
        ));
    }
    let patch = (mode == EnrichmentMode::PatchAverage).then(|| PatchIndex::build(mesh));
    let parts: Vec<(PiecewiseLinear, PiecewiseLinear)> = cuts
        .cuts
        .par_iter()
        .zip(bases)
        .map(|(g, b)| {
            let q = match &patch {
                None => pointwise_flux_value(g, ls, data),
                Some(p) => patch_average_flux_value(g.element, p, cuts, data)?,
            };
            Ok((build_qt1(g, b, data), build_qt2(b, q)))
        })
        .collect::<Result<_>>()?;
    let (value_part, flux_part) = parts.into_iter().unzip();
    Ok(EnrichmentField { value_part, flux_part })
}
