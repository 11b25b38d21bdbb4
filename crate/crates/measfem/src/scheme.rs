//! Discrete schemes for -div(A grad u) = mu with homogeneous Dirichlet data:
//! the standard Galerkin method and Berggren's two-solve formulation of the
//! very weak (transposition) method.
//!
//! The two-solve form first computes the Galerkin solution w of the source
//! problem, then recovers the very weak solution u from the mass-matrix
//! system M u = M w. With matching trial and test spaces the two solutions
//! coincide up to solver tolerances, and the pair of code paths makes that
//! equivalence checkable.

use crate::assembly::{
    apply_dirichlet, assemble_mass, assemble_measure_rhs, assemble_stiffness, CoefficientField,
    MeasureData,
};
use crate::error::FemError;
use crate::fespace::{FeFunction, FeSpace};
use crate::sparse::{cg_solve_with, default_max_iter, CsrMatrix, DenseVector, SolveStats};
use std::sync::Arc;

/// Which discrete scheme produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Standard,
    Berggren,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Standard => "standard",
            SchemeKind::Berggren => "berggren",
        }
    }
}

/// A discrete solution together with the solver statistics of each stage.
#[derive(Debug)]
pub struct DiscreteSolution {
    pub function: FeFunction,
    pub stats: Vec<SolveStats>,
    pub scheme: SchemeKind,
}

/// Solves with the standard Galerkin scheme for a measure right-hand side.
pub fn solve_standard(
    space: &Arc<FeSpace>,
    field: &CoefficientField,
    measure: &MeasureData,
    tol: f64,
) -> Result<DiscreteSolution, FemError> {
    let b = assemble_measure_rhs(space, measure)?;
    solve_standard_rhs(space, field, b, tol)
}

/// Standard Galerkin solve for an already assembled load vector.
pub fn solve_standard_rhs(
    space: &Arc<FeSpace>,
    field: &CoefficientField,
    mut b: DenseVector,
    tol: f64,
) -> Result<DiscreteSolution, FemError> {
    let mut a = assemble_stiffness(space, field)?;
    apply_dirichlet(&mut a, &mut b, space.boundary_mask());
    let (x, stats) = cg_solve_with(&a, &b, tol, default_max_iter(a.n_rows()), "stiffness")?;
    Ok(DiscreteSolution {
        function: FeFunction::new(space.clone(), x),
        stats: vec![stats],
        scheme: SchemeKind::Standard,
    })
}

/// Solves with the two-solve very weak scheme for a measure right-hand side.
pub fn solve_berggren(
    space: &Arc<FeSpace>,
    field: &CoefficientField,
    measure: &MeasureData,
    tol: f64,
) -> Result<DiscreteSolution, FemError> {
    let b = assemble_measure_rhs(space, measure)?;
    solve_berggren_rhs(space, field, b, tol)
}

/// Two-solve very weak scheme for an already assembled load vector.
pub fn solve_berggren_rhs(
    space: &Arc<FeSpace>,
    field: &CoefficientField,
    mut b: DenseVector,
    tol: f64,
) -> Result<DiscreteSolution, FemError> {
    let mask = space.boundary_mask();
    let mut a = assemble_stiffness(space, field)?;
    apply_dirichlet(&mut a, &mut b, mask);
    let mut m = assemble_mass(space)?;
    let mut dummy = vec![0.0; m.n_rows()];
    apply_dirichlet(&mut m, &mut dummy, mask);
    let (u, _w, stats) = berggren_from_matrices(&a, &m, &b, tol)?;
    Ok(DiscreteSolution {
        function: FeFunction::new(space.clone(), u),
        stats,
        scheme: SchemeKind::Berggren,
    })
}

/// The two-solve core: K w = b, then M u = M w. Returns both the recovered
/// solution u and the intermediate w.
pub(crate) fn berggren_from_matrices(
    a: &CsrMatrix,
    m: &CsrMatrix,
    b: &[f64],
    tol: f64,
) -> Result<(DenseVector, DenseVector, Vec<SolveStats>), FemError> {
    let n = a.n_rows();
    let (w, stats_a) = cg_solve_with(a, b, tol, default_max_iter(n), "stiffness")?;
    let mut c = vec![0.0; n];
    m.spmv(&w, &mut c);
    let (u, stats_m) = cg_solve_with(m, &c, tol, default_max_iter(n), "mass")?;
    Ok((u, w, vec![stats_a, stats_m]))
}

/// Largest entrywise difference of two coefficient vectors, relative to the
/// largest coefficient magnitude among both.
pub fn relative_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}
