//! Lagrange finite element spaces of degree 1-3 on simplicial meshes,
//! with homogeneous Dirichlet boundary conditions expressed as a DOF mask.
//!
//! Global numbering is deterministic: vertex DOFs first (vertex order), then
//! edge DOFs in sorted-edge order (interior nodes of an edge ordered from
//! its smaller global vertex), then face DOFs in sorted-face order (3D,
//! degree 3) or one interior DOF per cell (2D, degree 3).

pub mod basis;
pub mod quadrature;

pub use quadrature::{quadrature_for, QuadratureRule};

use crate::error::FemError;
use crate::mesh::{sorted2, SimplicialMesh};
use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::sync::Arc;

#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<SimplicialMesh>,
    degree: usize,
    n_dofs: usize,
    n_local: usize,
    /// Global DOF per (cell, local node), `n_cells * n_local`.
    cell_dofs: Vec<u32>,
    /// Node position per DOF, `n_dofs * dim`.
    dof_coords: Vec<f64>,
    /// True for DOFs whose node lies on the domain boundary.
    boundary_mask: Vec<bool>,
    /// One incident cell per DOF (the first one that references it).
    dof_cell: Vec<u32>,
}

/// Builds the degree-`degree` Lagrange space on `mesh`.
pub fn build_space(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<FeSpace, FemError> {
    if !(1..=3).contains(&degree) {
        return Err(FemError::InvalidDegree(degree));
    }
    let dim = mesh.dim();
    let k = degree;
    let nv = mesh.n_vertices();
    let n_cells = mesh.n_cells();
    let nodes = basis::local_nodes_cached(dim, k);
    let n_local = nodes.len();

    // Edge table (k >= 2): sorted unique vertex pairs, sorted order.
    let mut edges: Vec<(u32, u32)> = Vec::new();
    if k >= 2 {
        let edge_list: &[(usize, usize)] =
            if dim == 2 { &basis::EDGES_2D } else { &basis::EDGES_3D };
        let mut keys: Vec<(u32, u32)> = Vec::with_capacity(n_cells * edge_list.len());
        for c in 0..n_cells {
            let cell = mesh.cell(c);
            for &(i, j) in edge_list {
                keys.push(sorted2(cell[i], cell[j]));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        edges = keys;
    }
    let edge_index = |a: u32, b: u32| -> usize {
        let key = sorted2(a, b);
        edges.binary_search(&key).expect("edge of a cell must be in the edge table")
    };

    // Face table (3D, k == 3): sorted unique vertex triples, sorted order.
    let mut faces: Vec<[u32; 3]> = Vec::new();
    if dim == 3 && k == 3 {
        let mut keys: Vec<[u32; 3]> = Vec::with_capacity(n_cells * 4);
        for c in 0..n_cells {
            let cell = mesh.cell(c);
            for f in basis::FACES_3D {
                let mut tri = [cell[f[0]], cell[f[1]], cell[f[2]]];
                tri.sort_unstable();
                keys.push(tri);
            }
        }
        keys.sort_unstable();
        keys.dedup();
        faces = keys;
    }

    let n_edge_dofs = edges.len() * (k - 1);
    let n_extra = if k == 3 {
        if dim == 2 {
            n_cells
        } else {
            faces.len()
        }
    } else {
        0
    };
    let n_dofs = nv + n_edge_dofs + n_extra;
    let edge_base = nv;
    let extra_base = nv + n_edge_dofs;

    let mut cell_dofs: Vec<u32> = Vec::with_capacity(n_cells * n_local);
    let mut dof_coords = vec![0.0_f64; n_dofs * dim];
    let mut dof_cell = vec![u32::MAX; n_dofs];

    for c in 0..n_cells {
        let cell = mesh.cell(c);
        for alpha in nodes {
            let support: Vec<usize> =
                (0..=dim).filter(|&i| alpha[i] > 0).collect();
            let dof: usize = match support.len() {
                1 => cell[support[0]] as usize,
                2 => {
                    let (i, j) = (support[0], support[1]);
                    let m = alpha[j] as usize; // position from vertex i toward j
                    let (a, b) = (cell[i], cell[j]);
                    let global_m = if a < b { m } else { k - m };
                    edge_base + edge_index(a, b) * (k - 1) + (global_m - 1)
                }
                3 if dim == 3 => {
                    let mut tri = [
                        cell[support[0]],
                        cell[support[1]],
                        cell[support[2]],
                    ];
                    tri.sort_unstable();
                    let f = faces.binary_search(&tri).expect("face must be in the face table");
                    extra_base + f
                }
                _ => extra_base + c, // 2D interior node
            };
            cell_dofs.push(dof as u32);
            if dof_cell[dof] == u32::MAX {
                dof_cell[dof] = c as u32;
                let base = dof * dim;
                for d in 0..dim {
                    let mut x = 0.0;
                    for i in 0..=dim {
                        if alpha[i] > 0 {
                            x += alpha[i] as f64 / k as f64
                                * mesh.vertex(cell[i] as usize)[d];
                        }
                    }
                    dof_coords[base + d] = x;
                }
            }
        }
    }

    // Boundary classification from the boundary facets.
    let mut boundary_mask = vec![false; n_dofs];
    let mut bverts: HashSet<u32> = HashSet::new();
    let mut bedges: HashSet<(u32, u32)> = HashSet::new();
    let mut bfaces: HashSet<[u32; 3]> = HashSet::new();
    for f in 0..mesh.n_boundary_facets() {
        let facet = mesh.boundary_facet(f);
        for &v in facet {
            bverts.insert(v);
        }
        if dim == 2 {
            bedges.insert(sorted2(facet[0], facet[1]));
        } else {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                bedges.insert(sorted2(facet[i], facet[j]));
            }
            let mut tri = [facet[0], facet[1], facet[2]];
            tri.sort_unstable();
            bfaces.insert(tri);
        }
    }
    for &v in &bverts {
        boundary_mask[v as usize] = true;
    }
    for (e, &(a, b)) in edges.iter().enumerate() {
        if bedges.contains(&(a, b)) {
            for m in 0..k - 1 {
                boundary_mask[edge_base + e * (k - 1) + m] = true;
            }
        }
    }
    if dim == 3 && k == 3 {
        for (f, tri) in faces.iter().enumerate() {
            if bfaces.contains(tri) {
                boundary_mask[extra_base + f] = true;
            }
        }
    }

    Ok(FeSpace {
        mesh,
        degree,
        n_dofs,
        n_local,
        cell_dofs,
        dof_coords,
        boundary_mask,
        dof_cell,
    })
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn cell_dofs(&self, c: usize) -> &[u32] {
        &self.cell_dofs[c * self.n_local..(c + 1) * self.n_local]
    }

    pub fn dof_position(&self, dof: usize) -> &[f64] {
        let dim = self.mesh.dim();
        &self.dof_coords[dof * dim..(dof + 1) * dim]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        self.boundary_mask[dof]
    }

    /// An arbitrary but fixed cell incident to the DOF.
    pub fn dof_cell(&self, dof: usize) -> usize {
        self.dof_cell[dof] as usize
    }

    pub fn n_interior_dofs(&self) -> usize {
        self.boundary_mask.iter().filter(|&&b| !b).count()
    }
}

/// Coefficients of a function in a Lagrange space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    pub space: Arc<FeSpace>,
    pub coefficients: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coefficients: Vec<f64>) -> FeFunction {
        assert_eq!(coefficients.len(), space.n_dofs());
        FeFunction { space, coefficients }
    }

    pub fn zero(space: Arc<FeSpace>) -> FeFunction {
        let n = space.n_dofs();
        FeFunction { space, coefficients: vec![0.0; n] }
    }

    /// Value at the barycentric point `lambda` of cell `c`.
    pub fn value_in_cell(&self, c: usize, lambda: &[f64]) -> f64 {
        let dim = self.space.mesh.dim();
        let k = self.space.degree;
        let n = self.space.n_local;
        let mut values = [0.0_f64; 20];
        basis::eval_basis(dim, k, lambda, &mut values[..n], None);
        let dofs = self.space.cell_dofs(c);
        values[..n]
            .iter()
            .zip(dofs)
            .map(|(&v, &d)| v * self.coefficients[d as usize])
            .sum()
    }

    /// Physical gradient at the barycentric point `lambda` of cell `c`.
    pub fn gradient_in_cell(&self, c: usize, lambda: &[f64]) -> [f64; 3] {
        let dim = self.space.mesh.dim();
        let k = self.space.degree;
        let n = self.space.n_local;
        let mut values = [0.0_f64; 20];
        let mut grads = [[0.0_f64; 4]; 20];
        basis::eval_basis(dim, k, lambda, &mut values[..n], Some(&mut grads[..n]));
        let (lam_grads, _) = self.space.mesh.barycentric_gradients(c);
        let dofs = self.space.cell_dofs(c);
        let mut out = [0.0; 3];
        for (b, &dof) in dofs.iter().enumerate() {
            let coeff = self.coefficients[dof as usize];
            for i in 0..=dim {
                let w = coeff * grads[b][i];
                for d in 0..dim {
                    out[d] += w * lam_grads[i][d];
                }
            }
        }
        out
    }

    /// Point evaluation; `None` outside the mesh.
    pub fn evaluate(&self, x: &[f64]) -> Option<f64> {
        let loc = self.space.mesh.locate_point(x)?;
        Some(self.value_in_cell(loc.cell, &loc.barycentric))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Writes `n_dofs degree` then one coefficient per line.
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.space.n_dofs(), self.space.degree())?;
        for c in &self.coefficients {
            writeln!(w, "{c:.17e}")?;
        }
        Ok(())
    }
}

/// Nodal interpolation of a function.
pub fn interpolate<F: Fn(&[f64]) -> f64>(space: &Arc<FeSpace>, f: F) -> FeFunction {
    let coefficients: Vec<f64> =
        (0..space.n_dofs()).map(|d| f(space.dof_position(d))).collect();
    FeFunction { space: space.clone(), coefficients }
}

/// Reads a coefficient file written by [`FeFunction::write_text`] against a
/// given space; the declared size and degree must match.
pub fn read_function<R: BufRead>(
    r: &mut R,
    space: &Arc<FeSpace>,
) -> Result<FeFunction, FemError> {
    let mut lines = r.lines().enumerate();
    let (hno, header) = match lines.next() {
        Some((no, line)) => (no + 1, line?),
        None => {
            return Err(FemError::FunctionFormat { line: 1, message: "empty file".into() })
        }
    };
    let parts: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| FemError::FunctionFormat {
                line: hno,
                message: format!("bad header token '{t}': {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if parts.len() != 2 {
        return Err(FemError::FunctionFormat {
            line: hno,
            message: "header must be 'n_dofs degree'".into(),
        });
    }
    if parts[0] != space.n_dofs() || parts[1] != space.degree() {
        return Err(FemError::FunctionFormat {
            line: hno,
            message: format!(
                "file is for n_dofs {} degree {}, space has n_dofs {} degree {}",
                parts[0],
                parts[1],
                space.n_dofs(),
                space.degree()
            ),
        });
    }
    let mut coefficients = Vec::with_capacity(parts[0]);
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t.parse::<f64>().map_err(|e| FemError::FunctionFormat {
            line: no + 1,
            message: format!("bad coefficient '{t}': {e}"),
        })?;
        coefficients.push(v);
    }
    if coefficients.len() != parts[0] {
        return Err(FemError::FunctionFormat {
            line: 0,
            message: format!("expected {} coefficients, found {}", parts[0], coefficients.len()),
        });
    }
    Ok(FeFunction { space: space.clone(), coefficients })
}
