//! Formulas in `x, y, z` (and `nx, ny, nz` for flux jumps) for custom problems.

use anyhow::{bail, Context, Result};
use exmex::prelude::*;
use ife_core::Vec3;

/// Variables a formula may use, in slot order.
pub const VARIABLES: [&str; 6] = ["x", "y", "z", "nx", "ny", "nz"];

#[derive(Clone)]
pub struct Formula {
    text: String,
    expr: FlatEx<f64>,
    /// For each variable of `expr`, its slot in `VARIABLES`.
    slots: Vec<usize>,
}

impl std::fmt::Debug for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Formula({:?})", self.text)
    }
}

impl Formula {
    /// Parses `text`, allowing the first `n_vars` entries of `VARIABLES`.
    pub fn parse(text: &str, n_vars: usize) -> Result<Self> {
        let expr = exmex::parse::<f64>(text).with_context(|| format!("cannot parse `{text}`"))?;
        Self::from_expr(text.to_string(), expr, n_vars)
    }

    fn from_expr(text: String, expr: FlatEx<f64>, n_vars: usize) -> Result<Self> {
        let mut slots = Vec::new();
        for name in expr.var_names() {
            match VARIABLES[..n_vars].iter().position(|v| v == name) {
                Some(k) => slots.push(k),
                None => bail!("`{text}`: unknown variable `{name}` (allowed: {})", VARIABLES[..n_vars].join(", ")),
            }
        }
        Ok(Self { text, expr, slots })
    }

    pub fn eval(&self, x: &Vec3, n: &Vec3) -> f64 {
        let all = [x.x, x.y, x.z, n.x, n.y, n.z];
        let mut vals = [0.0; 6];
        for (v, &s) in vals.iter_mut().zip(&self.slots) {
            *v = all[s];
        }
        self.expr.eval(&vals[..self.slots.len()]).unwrap_or(f64::NAN)
    }

    pub fn at(&self, x: &Vec3) -> f64 {
        self.eval(x, &Vec3::zeros())
    }

    /// Derivative with respect to `x`, `y` or `z`.
    pub fn partial(&self, axis: usize) -> Result<Self> {
        let text = format!("d({})/d{}", self.text, VARIABLES[axis]);
        match self.slots.iter().position(|&s| s == axis) {
            Some(k) => {
                let d = self.expr.clone().partial(k).with_context(|| format!("cannot differentiate `{}`", self.text))?;
                Self::from_expr(text, d, 3)
            }
            None => Self::from_expr(text, exmex::parse::<f64>("0")?, 3),
        }
    }

    pub fn gradient(&self) -> Result<[Formula; 3]> {
        Ok([self.partial(0)?, self.partial(1)?, self.partial(2)?])
    }
}
