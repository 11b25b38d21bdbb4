//! Minimal sparse linear algebra: CSR matrices and a Jacobi-preconditioned
//! conjugate gradient solver.
//!
//! Everything here is deterministic — fixed iteration order, no threading,
//! no randomized pivoting — so repeated runs produce bit-identical results.

use crate::error::FemError;
use std::io::Write;

pub type DenseVector = Vec<f64>;

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; the sparsity pattern is fixed at construction.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix with the pattern given per row. Duplicate column
    /// entries are merged; each row is sorted.
    pub fn from_pattern(n_rows: usize, n_cols: usize, pattern: Vec<Vec<u32>>) -> CsrMatrix {
        assert_eq!(pattern.len(), n_rows, "pattern must have one entry list per row");
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        for mut row in pattern {
            row.sort_unstable();
            row.dedup();
            debug_assert!(row.iter().all(|&c| (c as usize) < n_cols));
            col_indices.extend_from_slice(&row);
            row_offsets.push(col_indices.len());
        }
        let values = vec![0.0; col_indices.len()];
        CsrMatrix { n_rows, n_cols, row_offsets, col_indices, values }
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> CsrMatrix {
        let mut m = CsrMatrix::from_pattern(n, n, (0..n as u32).map(|i| vec![i]).collect());
        for v in m.values.iter_mut() {
            *v = 1.0;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// A row's column indices together with mutable access to its values.
    pub fn row_mut(&mut self, i: usize) -> (&[u32], &mut [f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &mut self.values[lo..hi])
    }

    fn entry_index(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        self.col_indices[lo..hi].binary_search(&(j as u32)).ok().map(|k| lo + k)
    }

    /// Adds v to entry (i, j). The entry must exist in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .entry_index(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .entry_index(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] = v;
    }

    /// Returns the stored value at (i, j), or 0 if the entry is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entry_index(i, j).map_or(0.0, |k| self.values[k])
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "spmv: x length mismatch");
        assert_eq!(y.len(), self.n_rows, "spmv: y length mismatch");
        for i in 0..self.n_rows {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = 0.0;
            for (&c, &v) in self.col_indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                acc += v * x[c as usize];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> DenseVector {
        assert_eq!(self.n_rows, self.n_cols);
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// Largest absolute stored value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum of |a_ij - a_ji| over stored entries. Returns an error if the
    /// pattern itself is not symmetric.
    pub fn symmetry_defect(&self) -> Result<f64, FemError> {
        assert_eq!(self.n_rows, self.n_cols);
        let mut defect = 0.0_f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = c as usize;
                match self.entry_index(j, i) {
                    Some(k) => defect = defect.max((v - self.values[k]).abs()),
                    None => {
                        return Err(FemError::NotSpd(format!(
                            "entry ({i}, {j}) stored but ({j}, {i}) is not"
                        )))
                    }
                }
            }
        }
        Ok(defect)
    }

    /// Writes the matrix in Matrix Market coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", i + 1, c as usize + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Outcome of a conjugate gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Default iteration cap used when none is given.
pub fn default_max_iter(n: usize) -> usize {
    (50.0 * (n as f64).sqrt()) as usize + 1000
}

/// Solves A x = b by Jacobi-preconditioned CG from a zero initial guess.
///
/// Convergence means `‖b - A x‖₂ ≤ tol ‖b‖₂` — the loop tracks the recurrence
/// residual but the final acceptance always re-checks the explicit residual.
/// Failure to converge within the iteration cap is a hard error.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(DenseVector, SolveStats), FemError> {
    cg_solve_with(a, b, tol, default_max_iter(a.n_rows()), "cg")
}

pub fn cg_solve_with(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    stage: &'static str,
) -> Result<(DenseVector, SolveStats), FemError> {
    let n = a.n_rows();
    assert_eq!(a.n_cols(), n, "cg expects a square matrix");
    assert_eq!(b.len(), n, "cg: rhs length mismatch");

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        let stats = SolveStats { iterations: 0, final_relative_residual: 0.0, converged: true };
        return Ok((vec![0.0; n], stats));
    }

    let diag = a.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if d <= 0.0 {
            return Err(FemError::NotSpd(format!("nonpositive diagonal {d:.3e} at row {i}")));
        }
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        a.spmv(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(FemError::NotSpd(format!(
                "curvature pᵀAp = {pq:.3e} at iteration {iterations}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }

        if norm2(&r) <= tol * b_norm {
            // Guard against recurrence drift: accept only the explicit residual.
            a.spmv(&x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
            let explicit = norm2(&r);
            if explicit <= tol * b_norm {
                let stats = SolveStats {
                    iterations,
                    final_relative_residual: explicit / b_norm,
                    converged: true,
                };
                return Ok((x, stats));
            }
            // The recurrence has drifted from the true residual. Restart the
            // recursion from the explicit residual: reusing the stale search
            // direction and rz would destroy conjugacy and can diverge.
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let residual = norm2(&r) / b_norm;
    Err(FemError::SolverStalled { stage, iterations, residual, tol })
}
