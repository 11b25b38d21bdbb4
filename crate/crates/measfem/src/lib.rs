//! Simplicial finite element toolkit for second-order elliptic boundary value
//! problems whose right-hand side is a measure: weighted point sources and
//! weighted line sources carried by parametrized curves.
//!
//! The crate covers the full pipeline of a convergence study:
//!
//! * structured simplicial meshes (L-shape, hexagon, cube, unit square) with
//!   uniform red refinement and exact parent tracking,
//! * Lagrange spaces of degree 1-3 with symmetric simplex quadrature,
//! * CSR matrices and a Jacobi-preconditioned conjugate gradient solver,
//! * stiffness / mass / right-hand-side assembly, including the measure
//!   right-hand side `b_i = ∫ φ_i dμ`,
//! * the standard Galerkin scheme and the two-solve very weak scheme, which
//!   agree on every configuration up to solver tolerance,
//! * an experiment harness that measures errors against a fine reference
//!   solution (or an exact solution when one is known) on configurable
//!   subregions and emits CSV / markdown rate tables.
//!
//! The `measfem` binary exposes the harness on the command line; see the
//! crate README for the configuration format.

pub mod analysis;
pub mod assembly;
pub mod config;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod scheme;
pub mod sparse;

pub use error::FemError;
