//! Conforming simplicial meshes in 2D and 3D.
//!
//! Meshes are immutable after construction. Construction normalizes every
//! cell to positive orientation, checks conformity through a facet-incidence
//! census (each facet belongs to one or two cells), and derives the boundary
//! facets from that census. Uniform red refinement produces the next mesh in
//! a nested hierarchy and records the parent cell of every child.

mod generate;
mod io;
mod locate;
mod refine;

pub use generate::{
    generate_cube, generate_hexagon, generate_lshape, generate_unit_square, hexagon_vertices,
};
pub use io::read_mesh;
pub use locate::PointLocation;

use crate::error::FemError;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Barycentric tolerance for point-in-cell tests and related geometry.
pub const GEOM_TOL: f64 = 1e-10;

/// Axis-aligned predicate selecting a subregion of the domain. Ball
/// membership is strict (`< r`), complement membership is strict (`> r`),
/// so cells touching the sphere itself belong to neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionPredicate {
    WholeDomain,
    Ball { center: Vec<f64>, radius: f64 },
    BallComplement { center: Vec<f64>, radius: f64 },
}

impl RegionPredicate {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            RegionPredicate::WholeDomain => true,
            RegionPredicate::Ball { center, radius } => dist(center, x) < *radius,
            RegionPredicate::BallComplement { center, radius } => dist(center, x) > *radius,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// A conforming simplicial mesh (triangles for `dim == 2`, tetrahedra for
/// `dim == 3`) with refinement bookkeeping.
#[derive(Debug)]
pub struct SimplicialMesh {
    dim: usize,
    /// Vertex coordinates, `n_vertices * dim`, row-major.
    coords: Vec<f64>,
    /// Cell vertex indices, `n_cells * (dim + 1)`, positively oriented.
    cells: Vec<u32>,
    /// Boundary facet vertex indices, `n_boundary_facets * dim`, each facet
    /// sorted ascending; facets listed in sorted order.
    boundary_facets: Vec<u32>,
    /// Refinement level: 0 for a generated mesh.
    level: usize,
    /// For level > 0: parent cell index at the previous level, per cell.
    parent_of_cell: Vec<u32>,
    grid: OnceLock<locate::CellGrid>,
}

impl SimplicialMesh {
    /// Builds a mesh from raw vertex and cell arrays. Cells are reoriented
    /// to positive volume; conformity and degeneracy are checked; boundary
    /// facets are derived from the facet-incidence census.
    pub fn from_parts(
        dim: usize,
        coords: Vec<f64>,
        mut cells: Vec<u32>,
        level: usize,
        parent_of_cell: Vec<u32>,
    ) -> Result<SimplicialMesh, FemError> {
        assert!(dim == 2 || dim == 3, "only dim 2 and 3 are supported");
        assert_eq!(coords.len() % dim, 0);
        assert_eq!(cells.len() % (dim + 1), 0);
        let n_cells = cells.len() / (dim + 1);
        if !parent_of_cell.is_empty() {
            assert_eq!(parent_of_cell.len(), n_cells);
        }

        // Orient and check degeneracy.
        let mut max_extent = 0.0_f64;
        for d in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in 0..coords.len() / dim {
                lo = lo.min(coords[v * dim + d]);
                hi = hi.max(coords[v * dim + d]);
            }
            max_extent = max_extent.max(hi - lo);
        }
        let vol_floor = 1e-14 * max_extent.powi(dim as i32);
        for c in 0..n_cells {
            let s = signed_volume(dim, &coords, &cells[c * (dim + 1)..(c + 1) * (dim + 1)]);
            if s.abs() <= vol_floor {
                return Err(FemError::DegenerateCell { cell: c, volume: s });
            }
            if s < 0.0 {
                cells.swap(c * (dim + 1) + dim - 1, c * (dim + 1) + dim);
            }
        }

        let boundary_facets = census_boundary(dim, &cells, n_cells)?;

        Ok(SimplicialMesh {
            dim,
            coords,
            cells,
            boundary_facets,
            level,
            parent_of_cell,
            grid: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.boundary_facets.len() / self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Parent cell at the previous refinement level, if this mesh was
    /// produced by `refine_uniform`.
    pub fn parent_of_cell(&self, cell: usize) -> Option<usize> {
        self.parent_of_cell.get(cell).map(|&p| p as usize)
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[u32] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn boundary_facet(&self, f: usize) -> &[u32] {
        &self.boundary_facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(self.dim, &self.coords, self.cell(c))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Longest edge of the cell.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let mut d2 = 0.0_f64;
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                let a = self.vertex(cell[i] as usize);
                let b = self.vertex(cell[j] as usize);
                let s: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                d2 = d2.max(s);
            }
        }
        d2.sqrt()
    }

    /// Mesh size: the largest cell diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_cells()).fold(0.0, |m, c| m.max(self.cell_diameter(c)))
    }

    /// Barycentric coordinates of `x` with respect to cell `c` (unclamped;
    /// entries are negative when `x` lies outside the cell). Only the first
    /// `dim + 1` entries are meaningful.
    pub fn barycentric(&self, c: usize, x: &[f64]) -> [f64; 4] {
        let cell = self.cell(c);
        let v0 = self.vertex(cell[0] as usize);
        let mut out = [0.0; 4];
        match self.dim {
            2 => {
                let v1 = self.vertex(cell[1] as usize);
                let v2 = self.vertex(cell[2] as usize);
                let a = [v1[0] - v0[0], v2[0] - v0[0], v1[1] - v0[1], v2[1] - v0[1]];
                let det = a[0] * a[3] - a[1] * a[2];
                let rx = x[0] - v0[0];
                let ry = x[1] - v0[1];
                let l1 = (rx * a[3] - ry * a[1]) / det;
                let l2 = (ry * a[0] - rx * a[2]) / det;
                out[0] = 1.0 - l1 - l2;
                out[1] = l1;
                out[2] = l2;
            }
            _ => {
                let v1 = self.vertex(cell[1] as usize);
                let v2 = self.vertex(cell[2] as usize);
                let v3 = self.vertex(cell[3] as usize);
                let m = [
                    v1[0] - v0[0],
                    v2[0] - v0[0],
                    v3[0] - v0[0],
                    v1[1] - v0[1],
                    v2[1] - v0[1],
                    v3[1] - v0[1],
                    v1[2] - v0[2],
                    v2[2] - v0[2],
                    v3[2] - v0[2],
                ];
                let r = [x[0] - v0[0], x[1] - v0[1], x[2] - v0[2]];
                // Cramer's rule on the 3x3 system m * l = r.
                let det = det3(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]);
                let l1 = det3(r[0], m[1], m[2], r[1], m[4], m[5], r[2], m[7], m[8]) / det;
                let l2 = det3(m[0], r[0], m[2], m[3], r[1], m[5], m[6], r[2], m[8]) / det;
                let l3 = det3(m[0], m[1], r[0], m[3], m[4], r[1], m[6], m[7], r[2]) / det;
                out[0] = 1.0 - l1 - l2 - l3;
                out[1] = l1;
                out[2] = l2;
                out[3] = l3;
            }
        }
        out
    }

    /// Gradients of the barycentric coordinate functions of cell `c`:
    /// `grads[i]` is the constant vector `∇λ_i` (only `dim` entries used).
    pub fn barycentric_gradients(&self, c: usize) -> ([[f64; 3]; 4], f64) {
        let cell = self.cell(c);
        let v0 = self.vertex(cell[0] as usize);
        let mut grads = [[0.0; 3]; 4];
        let vol;
        match self.dim {
            2 => {
                let v1 = self.vertex(cell[1] as usize);
                let v2 = self.vertex(cell[2] as usize);
                let a = v1[0] - v0[0];
                let b = v2[0] - v0[0];
                let c_ = v1[1] - v0[1];
                let d = v2[1] - v0[1];
                let det = a * d - b * c_;
                vol = det / 2.0;
                // rows of the inverse Jacobian
                grads[1] = [d / det, -b / det, 0.0];
                grads[2] = [-c_ / det, a / det, 0.0];
            }
            _ => {
                let v1 = self.vertex(cell[1] as usize);
                let v2 = self.vertex(cell[2] as usize);
                let v3 = self.vertex(cell[3] as usize);
                let m = [
                    v1[0] - v0[0],
                    v2[0] - v0[0],
                    v3[0] - v0[0],
                    v1[1] - v0[1],
                    v2[1] - v0[1],
                    v3[1] - v0[1],
                    v1[2] - v0[2],
                    v2[2] - v0[2],
                    v3[2] - v0[2],
                ];
                let det = det3(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]);
                vol = det / 6.0;
                // inverse via adjugate; row i of inv(m) is ∇λ_{i+1}
                let inv = [
                    (m[4] * m[8] - m[5] * m[7]) / det,
                    (m[2] * m[7] - m[1] * m[8]) / det,
                    (m[1] * m[5] - m[2] * m[4]) / det,
                    (m[5] * m[6] - m[3] * m[8]) / det,
                    (m[0] * m[8] - m[2] * m[6]) / det,
                    (m[2] * m[3] - m[0] * m[5]) / det,
                    (m[3] * m[7] - m[4] * m[6]) / det,
                    (m[1] * m[6] - m[0] * m[7]) / det,
                    (m[0] * m[4] - m[1] * m[3]) / det,
                ];
                grads[1] = [inv[0], inv[1], inv[2]];
                grads[2] = [inv[3], inv[4], inv[5]];
                grads[3] = [inv[6], inv[7], inv[8]];
            }
        }
        for d in 0..3 {
            grads[0][d] = -(1..=self.dim).map(|i| grads[i][d]).sum::<f64>();
        }
        (grads, vol)
    }

    /// Physical position of the barycentric point `lambda` in cell `c`.
    pub fn point_from_barycentric(&self, c: usize, lambda: &[f64]) -> [f64; 3] {
        let cell = self.cell(c);
        let mut x = [0.0; 3];
        for (i, &v) in cell.iter().enumerate() {
            let p = self.vertex(v as usize);
            for d in 0..self.dim {
                x[d] += lambda[i] * p[d];
            }
        }
        x
    }

    /// Cells whose vertices all satisfy the region predicate.
    pub fn select_cells(&self, region: &RegionPredicate) -> Vec<usize> {
        (0..self.n_cells())
            .filter(|&c| {
                self.cell(c).iter().all(|&v| region.contains(self.vertex(v as usize)))
            })
            .collect()
    }

    /// Distance from `x` to the nearest boundary facet.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for f in 0..self.n_boundary_facets() {
            let facet = self.boundary_facet(f);
            let d = if self.dim == 2 {
                point_segment_distance(
                    x,
                    self.vertex(facet[0] as usize),
                    self.vertex(facet[1] as usize),
                )
            } else {
                point_triangle_distance(
                    x,
                    self.vertex(facet[0] as usize),
                    self.vertex(facet[1] as usize),
                    self.vertex(facet[2] as usize),
                )
            };
            best = best.min(d);
        }
        best
    }
}

#[allow(clippy::too_many_arguments)]
fn det3(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64, g: f64, h: f64, i: f64) -> f64 {
    a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
}

pub(crate) fn signed_volume(dim: usize, coords: &[f64], cell: &[u32]) -> f64 {
    let v = |i: usize, d: usize| coords[cell[i] as usize * dim + d];
    match dim {
        2 => {
            let ax = v(1, 0) - v(0, 0);
            let ay = v(1, 1) - v(0, 1);
            let bx = v(2, 0) - v(0, 0);
            let by = v(2, 1) - v(0, 1);
            (ax * by - ay * bx) / 2.0
        }
        _ => {
            let m: Vec<f64> = (1..4)
                .flat_map(|i| (0..3).map(move |d| (i, d)))
                .map(|(i, d)| v(i, d) - v(0, d))
                .collect();
            det3(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]) / 6.0
        }
    }
}

/// Facet-incidence census: every facet must belong to exactly one cell
/// (boundary) or exactly two cells (interior). Returns the boundary facets,
/// each sorted ascending, listed in sorted order.
fn census_boundary(dim: usize, cells: &[u32], n_cells: usize) -> Result<Vec<u32>, FemError> {
    match dim {
        2 => {
            let mut keys: Vec<u64> = Vec::with_capacity(n_cells * 3);
            for c in 0..n_cells {
                let t = &cells[c * 3..c * 3 + 3];
                for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                    let (a, b) = sorted2(t[i], t[j]);
                    keys.push((a as u64) << 32 | b as u64);
                }
            }
            let boundary_keys = boundary_from_sorted_runs(&mut keys)?;
            let mut out = Vec::with_capacity(boundary_keys.len() * 2);
            for k in boundary_keys {
                out.push((k >> 32) as u32);
                out.push((k & 0xffff_ffff) as u32);
            }
            Ok(out)
        }
        _ => {
            let mut keys: Vec<u128> = Vec::with_capacity(n_cells * 4);
            for c in 0..n_cells {
                let t = &cells[c * 4..c * 4 + 4];
                for f in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
                    let mut tri = [t[f[0]], t[f[1]], t[f[2]]];
                    tri.sort_unstable();
                    keys.push(
                        (tri[0] as u128) << 64 | (tri[1] as u128) << 32 | tri[2] as u128,
                    );
                }
            }
            let boundary_keys = boundary_from_sorted_runs(&mut keys)?;
            let mut out = Vec::with_capacity(boundary_keys.len() * 3);
            for k in boundary_keys {
                out.push((k >> 64) as u32);
                out.push(((k >> 32) & 0xffff_ffff) as u32);
                out.push((k & 0xffff_ffff) as u32);
            }
            Ok(out)
        }
    }
}

fn boundary_from_sorted_runs<T: Ord + Copy>(keys: &mut Vec<T>) -> Result<Vec<T>, FemError> {
    keys.sort_unstable();
    let mut boundary = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        match j - i {
            1 => boundary.push(keys[i]),
            2 => {}
            count => return Err(FemError::NonConforming { count }),
        }
        i = j;
    }
    Ok(boundary)
}

pub(crate) fn sorted2(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn point_segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let dim = a.len();
    let mut ab2 = 0.0;
    let mut t = 0.0;
    for d in 0..dim {
        let e = b[d] - a[d];
        ab2 += e * e;
        t += (x[d] - a[d]) * e;
    }
    let t = if ab2 > 0.0 { (t / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut s = 0.0;
    for d in 0..dim {
        let p = a[d] + t * (b[d] - a[d]);
        s += (x[d] - p) * (x[d] - p);
    }
    s.sqrt()
}

/// Distance from a point to a triangle in 3D (closest point on the closed
/// triangle, including edges and vertices).
fn point_triangle_distance(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let sub = |u: &[f64], v: &[f64]| [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    let dotv = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dotv(ab, ap);
    let d2 = dotv(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return dotv(ap, ap).sqrt();
    }
    let bp = sub(p, b);
    let d3 = dotv(ab, bp);
    let d4 = dotv(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return dotv(bp, bp).sqrt();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        let q = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
        let e = sub(p, &q);
        return dotv(e, e).sqrt();
    }
    let cp = sub(p, c);
    let d5 = dotv(ab, cp);
    let d6 = dotv(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return dotv(cp, cp).sqrt();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        let q = [a[0] + t * ac[0], a[1] + t * ac[1], a[2] + t * ac[2]];
        let e = sub(p, &q);
        return dotv(e, e).sqrt();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let q = [
            b[0] + t * (c[0] - b[0]),
            b[1] + t * (c[1] - b[1]),
            b[2] + t * (c[2] - b[2]),
        ];
        let e = sub(p, &q);
        return dotv(e, e).sqrt();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let q = [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ];
    let e = sub(p, &q);
    dotv(e, e).sqrt()
}
