//! Level-set descriptions of the interface. `value < 0` is the minus
//! subdomain, `value > 0` the plus subdomain.

use std::sync::Arc;

use crate::error::{IfeError, Result};
use crate::Vec3;

pub trait LevelSet: Send + Sync {
    fn value(&self, x: &Vec3) -> f64;

    /// Gradient of the level set; central differences unless overridden.
    fn gradient(&self, x: &Vec3) -> Vec3 {
        central_difference(|p| self.value(p), x, self.fd_step())
    }

    /// Step used by the finite-difference gradient fallback.
    fn fd_step(&self) -> f64 {
        1e-6
    }
}

pub fn central_difference(f: impl Fn(&Vec3) -> f64, x: &Vec3, step: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for k in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += step;
        xm[k] -= step;
        g[k] = (f(&xp) - f(&xm)) / (2.0 * step);
    }
    g
}

/// Sphere `|x - c|^2 - r^2`.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn centered(radius: f64) -> Self {
        Self::new(Vec3::zeros(), radius)
    }
}

impl LevelSet for Sphere {
    fn value(&self, x: &Vec3) -> f64 {
        (x - self.center).norm_squared() - self.radius * self.radius
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        2.0 * (x - self.center)
    }
}

/// Orthocircle: three orthogonal, interlocking tori,
/// `[(x²+y²-1)²+z²][(x²+z²-1)²+y²][(y²+z²-1)²+x²] - c²(1 + 3(x²+y²+z²))`.
#[derive(Debug, Clone, Copy)]
pub struct Orthocircle {
    pub c: f64,
}

impl Default for Orthocircle {
    fn default() -> Self {
        Self { c: 0.075 }
    }
}

impl LevelSet for Orthocircle {
    fn value(&self, p: &Vec3) -> f64 {
        let (x2, y2, z2) = (p.x * p.x, p.y * p.y, p.z * p.z);
        let a = (x2 + y2 - 1.0).powi(2) + z2;
        let b = (x2 + z2 - 1.0).powi(2) + y2;
        let c = (y2 + z2 - 1.0).powi(2) + x2;
        a * b * c - self.c * self.c * (1.0 + 3.0 * (x2 + y2 + z2))
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        let (x, y, z) = (p.x, p.y, p.z);
        let (x2, y2, z2) = (x * x, y * y, z * z);
        let (sa, sb, sc) = (x2 + y2 - 1.0, x2 + z2 - 1.0, y2 + z2 - 1.0);
        let a = sa * sa + z2;
        let b = sb * sb + y2;
        let c = sc * sc + x2;
        let da = Vec3::new(4.0 * x * sa, 4.0 * y * sa, 2.0 * z);
        let db = Vec3::new(4.0 * x * sb, 2.0 * y, 4.0 * z * sb);
        let dc = Vec3::new(2.0 * x, 4.0 * y * sc, 4.0 * z * sc);
        da * (b * c) + db * (a * c) + dc * (a * b) - 6.0 * self.c * self.c * p
    }
}

/// Squircle `x⁴ + y⁴ + z⁴ - r⁴`.
#[derive(Debug, Clone, Copy)]
pub struct Squircle {
    pub r0: f64,
}

impl Squircle {
    /// The family with `r0 = 0.75 - epsilon`, approaching the grid planes
    /// `x, y, z = ±0.75` as `epsilon -> 0`.
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { r0: 0.75 - epsilon }
    }
}

impl LevelSet for Squircle {
    fn value(&self, x: &Vec3) -> f64 {
        x.x.powi(4) + x.y.powi(4) + x.z.powi(4) - self.r0.powi(4)
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        4.0 * Vec3::new(x.x.powi(3), x.y.powi(3), x.z.powi(3))
    }
}

/// Plane `normal · x - offset` with unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Self {
        let len = normal.norm();
        Self { normal: normal / len, offset: offset / len }
    }

    /// The plane `x[axis] = value`, plus side towards increasing coordinate.
    pub fn axis(axis: usize, value: f64) -> Self {
        let mut n = Vec3::zeros();
        n[axis] = 1.0;
        Self { normal: n, offset: value }
    }
}

impl LevelSet for Plane {
    fn value(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.offset
    }

    fn gradient(&self, _x: &Vec3) -> Vec3 {
        self.normal
    }
}

type ScalarFn = dyn Fn(&Vec3) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Vec3) -> Vec3 + Send + Sync;

/// A level set from closures. Without an analytic gradient, central
/// differences with step `1e-6 * domain diameter` are used.
pub struct FnLevelSet {
    value: Box<ScalarFn>,
    gradient: Option<Box<VectorFn>>,
    step: f64,
}

impl FnLevelSet {
    pub fn new(value: impl Fn(&Vec3) -> f64 + Send + Sync + 'static, domain_diameter: f64) -> Self {
        Self { value: Box::new(value), gradient: None, step: 1e-6 * domain_diameter }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }
}

impl LevelSet for FnLevelSet {
    fn value(&self, x: &Vec3) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        match &self.gradient {
            Some(g) => g(x),
            None => central_difference(|p| (self.value)(p), x, self.step),
        }
    }

    fn fd_step(&self) -> f64 {
        self.step
    }
}

/// Constructs a built-in level set by name.
///
/// | name          | parameters                      |
/// |---------------|---------------------------------|
/// | `sphere`      | `[radius]` or `[cx, cy, cz, r]` |
/// | `orthocircle` | `[]` or `[c]`                   |
/// | `squircle`    | `[epsilon]` (r0 = 0.75 - eps)   |
/// | `plane`       | `[axis, value]` or `[nx, ny, nz, offset]` |
pub fn builtin(name: &str, params: &[f64]) -> Result<Arc<dyn LevelSet>> {
    let bad = || IfeError::InvalidArgument(format!("bad parameters {params:?} for level set `{name}`"));
    Ok(match (name, params.len()) {
        ("sphere", 1) => Arc::new(Sphere::centered(params[0])),
        ("sphere", 4) => Arc::new(Sphere::new(Vec3::new(params[0], params[1], params[2]), params[3])),
        ("orthocircle", 0) => Arc::new(Orthocircle::default()),
        ("orthocircle", 1) => Arc::new(Orthocircle { c: params[0] }),
        ("squircle", 1) => Arc::new(Squircle::with_epsilon(params[0])),
        ("plane", 2) => {
            let axis = params[0] as usize;
            if axis > 2 || params[0].fract() != 0.0 {
                return Err(bad());
            }
            Arc::new(Plane::axis(axis, params[1]))
        }
        ("plane", 4) => {
            let n = Vec3::new(params[0], params[1], params[2]);
            if n.norm() == 0.0 {
                return Err(bad());
            }
            Arc::new(Plane::new(n, params[3]))
        }
        ("sphere" | "orthocircle" | "squircle" | "plane", _) => return Err(bad()),
        _ => return Err(IfeError::InvalidArgument(format!("unknown level set `{name}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_gradient(ls: &dyn LevelSet, x: Vec3) {
        let fd = central_difference(|p| ls.value(p), &x, 1e-6);
        let g = ls.gradient(&x);
        assert!((fd - g).norm() <= 1e-6 * (1.0 + g.norm()), "{fd:?} vs {g:?}");
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let pts = [Vec3::new(0.3, -0.2, 0.7), Vec3::new(0.9, 0.1, 0.05), Vec3::new(-0.5, 0.6, -0.4)];
        for x in pts {
            check_gradient(&Sphere::centered(0.5), x);
            check_gradient(&Orthocircle::default(), x);
            check_gradient(&Squircle::with_epsilon(0.1), x);
            check_gradient(&Plane::new(Vec3::new(1.0, 2.0, -1.0), 0.3), x);
        }
    }

    #[test]
    fn fallback_gradient() {
        let ls = FnLevelSet::new(|x: &Vec3| x.x * x.y + x.z.sin(), 2.0);
        let x = Vec3::new(0.2, -0.3, 0.4);
        let g = ls.gradient(&x);
        assert!((g - Vec3::new(-0.3, 0.2, 0.4f64.cos())).norm() < 1e-8);
    }

    #[test]
    fn builtins_by_name() {
        assert!(builtin("sphere", &[0.5]).is_ok());
        assert!(builtin("plane", &[0.0, 0.31]).is_ok());
        assert!(builtin("plane", &[3.0, 0.31]).is_err());
        assert!(builtin("torus", &[]).is_err());
        let s = builtin("squircle", &[0.1]).unwrap();
        assert!((s.value(&Vec3::new(0.65, 0.0, 0.0))).abs() < 1e-15);
    }
}
