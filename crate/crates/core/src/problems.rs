//! Manufactured interface problems.

use std::sync::Arc;

use crate::enrichment::{FluxJump, JumpData, ScalarField, Smoothness, VectorField};
use crate::error::{IfeError, Result};
use crate::geometry::Side;
use crate::levelset::{LevelSet, Orthocircle, Plane, Sphere, Squircle};
use crate::mesh::BoxDomain;
use crate::Vec3;

/// Exact solution pieces, by side.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: [ScalarField; 2],
    pub gradient: [VectorField; 2],
}

impl ExactSolution {
    pub fn value(&self, side: Side, x: &Vec3) -> f64 {
        (self.value[side.index()])(x)
    }

    pub fn gradient(&self, side: Side, x: &Vec3) -> Vec3 {
        (self.gradient[side.index()])(x)
    }
}

/// An interface problem `-div(beta grad u) = f` with Dirichlet data `g` and
/// jumps `[u] = q1`, `[beta du/dn] = q2` across the zero set of the level set.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: BoxDomain,
    pub level_set: Arc<dyn LevelSet>,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// Source by side.
    pub source: [ScalarField; 2],
    pub boundary: ScalarField,
    pub jumps: JumpData,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("beta_minus", &self.beta_minus)
            .field("beta_plus", &self.beta_plus)
            .finish_non_exhaustive()
    }
}

fn check_betas(beta_minus: f64, beta_plus: f64) -> Result<()> {
    if beta_minus > 0.0 && beta_plus > 0.0 && beta_minus.is_finite() && beta_plus.is_finite() {
        Ok(())
    } else {
        Err(IfeError::InvalidArgument(format!("coefficients must be positive, got {beta_minus} and {beta_plus}")))
    }
}

impl ProblemSpec {
    pub fn side(&self, x: &Vec3) -> Side {
        Side::of_value(self.level_set.value(x))
    }

    pub fn beta(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.beta_minus,
            Side::Plus => self.beta_plus,
        }
    }

    /// Source at `x`, piece chosen by the level-set sign.
    pub fn source_at(&self, x: &Vec3) -> f64 {
        (self.source[self.side(x).index()])(x)
    }

    /// Derives source, boundary data and jumps from exact pieces `u-`, `u+`
    /// with their gradients and Laplacians.
    #[allow(clippy::too_many_arguments)]
    pub fn manufactured(
        name: impl Into<String>,
        domain: BoxDomain,
        level_set: Arc<dyn LevelSet>,
        beta_minus: f64,
        beta_plus: f64,
        value: [ScalarField; 2],
        gradient: [VectorField; 2],
        laplacian: [ScalarField; 2],
    ) -> Result<Self> {
        check_betas(beta_minus, beta_plus)?;
        let [lm, lp] = laplacian;
        let source: [ScalarField; 2] =
            [Arc::new(move |x| -beta_minus * lm(x)), Arc::new(move |x| -beta_plus * lp(x))];
        let (um, up) = (value[0].clone(), value[1].clone());
        let q1: ScalarField = Arc::new(move |x| up(x) - um(x));
        let (gm, gp) = (gradient[0].clone(), gradient[1].clone());
        let w: VectorField = Arc::new(move |x| beta_plus * gp(x) - beta_minus * gm(x));
        let ls = level_set.clone();
        let (um, up) = (value[0].clone(), value[1].clone());
        let boundary: ScalarField = Arc::new(move |x| if ls.value(x) < 0.0 { um(x) } else { up(x) });
        Ok(Self {
            name: name.into(),
            domain,
            level_set,
            beta_minus,
            beta_plus,
            source,
            boundary,
            jumps: JumpData { q1, q2: FluxJump::Vector(w), smoothness: Smoothness::PointwiseOk },
            exact: Some(ExactSolution { value, gradient }),
        })
    }

    /// Sphere of radius pi/4 in (-1, 1)^3, `u- = sin(r^2)`, `u+ = cos(r^2)`.
    pub fn example1(beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Self::manufactured(
            "example1",
            BoxDomain::cube(-1.0, 1.0)?,
            Arc::new(Sphere::centered(std::f64::consts::FRAC_PI_4)),
            beta_minus,
            beta_plus,
            [Arc::new(|x| x.norm_squared().sin()), Arc::new(|x| x.norm_squared().cos())],
            [Arc::new(|x| 2.0 * x.norm_squared().cos() * x), Arc::new(|x| -2.0 * x.norm_squared().sin() * x)],
            [
                Arc::new(|x| {
                    let s = x.norm_squared();
                    6.0 * s.cos() - 4.0 * s * s.sin()
                }),
                Arc::new(|x| {
                    let s = x.norm_squared();
                    -6.0 * s.sin() - 4.0 * s * s.cos()
                }),
            ],
        )
    }

    /// Orthocircle in (-1.2, 1.2)^3, `u- = sin(x + 2y + 3z)`, `u+ = x^2 + y^3 - z`.
    pub fn example2(beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Self::manufactured(
            "example2",
            BoxDomain::cube(-1.2, 1.2)?,
            Arc::new(Orthocircle::default()),
            beta_minus,
            beta_plus,
            [Arc::new(|x| (x.x + 2.0 * x.y + 3.0 * x.z).sin()), Arc::new(|x| x.x * x.x + x.y.powi(3) - x.z)],
            [
                Arc::new(|x| (x.x + 2.0 * x.y + 3.0 * x.z).cos() * Vec3::new(1.0, 2.0, 3.0)),
                Arc::new(|x| Vec3::new(2.0 * x.x, 3.0 * x.y * x.y, -1.0)),
            ],
            [Arc::new(|x| -14.0 * (x.x + 2.0 * x.y + 3.0 * x.z).sin()), Arc::new(|x| 2.0 + 6.0 * x.y)],
        )
    }

    /// Squircle `x^4 + y^4 + z^4 = (0.75 - epsilon)^4` in (-1, 1)^3 with
    /// `u = s^(1/2) / beta` plus a constant outside, `s = x^4 + y^4 + z^4`.
    /// Both jumps vanish.
    pub fn example3(epsilon: f64, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        const ALPHA: f64 = 0.5;
        if !(epsilon < 0.75) {
            return Err(IfeError::InvalidArgument(format!("epsilon {epsilon} leaves no interface")));
        }
        let r0 = 0.75 - epsilon;
        let shift = (1.0 / beta_minus - 1.0 / beta_plus) * r0.powf(4.0 * ALPHA);
        let s = |x: &Vec3| x.x.powi(4) + x.y.powi(4) + x.z.powi(4);
        let power = move |x: &Vec3| s(x).powf(ALPHA);
        let grad_power = move |x: &Vec3| {
            let sv = s(x);
            if sv == 0.0 {
                return Vec3::zeros();
            }
            ALPHA * sv.powf(ALPHA - 1.0) * 4.0 * Vec3::new(x.x.powi(3), x.y.powi(3), x.z.powi(3))
        };
        let lap_power = move |x: &Vec3| {
            let sv = s(x);
            if sv == 0.0 {
                return 0.0;
            }
            let q2 = x.x * x.x + x.y * x.y + x.z * x.z;
            let q6 = x.x.powi(6) + x.y.powi(6) + x.z.powi(6);
            ALPHA * sv.powf(ALPHA - 1.0) * 12.0 * q2 + ALPHA * (ALPHA - 1.0) * sv.powf(ALPHA - 2.0) * 16.0 * q6
        };
        let mut p = Self::manufactured(
            "example3",
            BoxDomain::cube(-1.0, 1.0)?,
            Arc::new(Squircle::with_epsilon(epsilon)),
            beta_minus,
            beta_plus,
            [Arc::new(move |x| power(x) / beta_minus), Arc::new(move |x| power(x) / beta_plus + shift)],
            [Arc::new(move |x| grad_power(x) / beta_minus), Arc::new(move |x| grad_power(x) / beta_plus)],
            [Arc::new(move |x| lap_power(x) / beta_minus), Arc::new(move |x| lap_power(x) / beta_plus)],
        )?;
        p.jumps = JumpData::zero();
        Ok(p)
    }

    /// Plane `x = 0.31` in (0, 1)^3 with a piecewise-linear solution whose
    /// pieces satisfy non-zero value and flux jumps.
    pub fn patch_test(beta_minus: f64, beta_plus: f64) -> Result<Self> {
        let gm = Vec3::new(2.0, -1.0, 0.5);
        let gp = Vec3::new(0.05, 0.7, -0.2);
        Self::manufactured(
            "patch_test",
            BoxDomain::unit(),
            Arc::new(Plane::axis(0, 0.31)),
            beta_minus,
            beta_plus,
            [Arc::new(move |x| 1.0 + gm.dot(x)), Arc::new(move |x| 0.3 + gp.dot(x))],
            [Arc::new(move |_| gm), Arc::new(move |_| gp)],
            [Arc::new(|_| 0.0), Arc::new(|_| 0.0)],
        )
    }

    /// Built-in problem by name with its standard coefficients unless overridden.
    ///
    /// `example3` takes `epsilon` (default 0.1).
    pub fn builtin(name: &str, beta: Option<(f64, f64)>, epsilon: Option<f64>) -> Result<Self> {
        let (bm, bp) = beta.unwrap_or((1.0, 100.0));
        match name {
            "example1" => Self::example1(bm, bp),
            "example2" => Self::example2(bm, bp),
            "example3" => Self::example3(epsilon.unwrap_or(0.1), bm, bp),
            "patch_test" => Self::patch_test(bm, bp),
            _ => Err(IfeError::InvalidArgument(format!(
                "unknown problem `{name}` (expected example1, example2, example3 or patch_test)"
            ))),
        }
    }
}
