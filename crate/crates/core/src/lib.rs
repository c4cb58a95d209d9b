//! Enriched immersed finite elements (IFE) for three-dimensional elliptic
//! interface problems with non-homogeneous jump conditions.
//!
//! The method works on structured, interface-unfitted tetrahedral meshes. On
//! every element cut by the interface the local space of piecewise-linear
//! functions is split into a homogeneous part (nodal, Lagrange-type IFE shape
//! functions) and an enrichment part built directly from the jump data. Only
//! the homogeneous part carries unknowns, so the global system has exactly one
//! degree of freedom per free mesh node, like standard P1 finite elements.
//!
//! The pipeline is:
//!
//! 1. [`mesh::build_mesh`] - structured tetrahedral mesh of a box;
//! 2. [`geometry::classify`] and [`geometry::build_cut_geometry`] - cut
//!    elements, approximating planes and sub-tetrahedra;
//! 3. [`basis::solve_local_basis`] - the 8 local shape functions per cut element;
//! 4. [`enrichment::assemble_enrichment`] - jump-data driven enrichment;
//! 5. [`assembly::assemble_system`] - symmetric interior-penalty system;
//! 6. [`solver::pcg_solve`] with [`solver::Amg`] - AMG-preconditioned CG;
//! 7. [`postprocess::compute_errors`] - error norms and convergence orders.
//!
//! [`pipeline::solve_problem`] strings all of this together for the built-in
//! manufactured problems in [`problems`].

pub mod assembly;
pub mod basis;
pub mod enrichment;
pub mod error;
pub mod geometry;
pub mod io;
pub mod levelset;
pub mod mesh;
pub mod pipeline;
pub mod postprocess;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;

/// Points and vectors in physical space.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use assembly::{AssemblyParams, DiscreteField, IfeSpace, SparseSystem};
pub use basis::{IfeLocalBasis, PiecewiseLinear};
pub use enrichment::{EnrichmentField, EnrichmentMode, JumpData};
pub use error::{IfeError, Result, Warning};
pub use geometry::{CutElementGeometry, CutGeometries, ElementClassification, Side};
pub use levelset::LevelSet;
pub use mesh::{BoxDomain, Mesh, PatchIndex, Subdivision};
pub use postprocess::{ConvergenceTable, ErrorReport};
pub use problems::ProblemSpec;
pub use solver::{SolveReport, SolverConfig, SpectrumEstimate};
pub use sparse::CsrMatrix;
