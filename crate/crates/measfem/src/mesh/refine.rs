//! Uniform red refinement with parent tracking.
//!
//! Triangles split into four congruent children through the edge midpoints.
//! Tetrahedra split into four corner children plus four children from the
//! interior octahedron, cut along its shortest diagonal (ties broken by the
//! lexicographically smallest midpoint index pair, so refinement is fully
//! deterministic). Coarse vertices keep their indices, midpoints are
//! appended, which makes the hierarchy exactly nested.

use super::{sorted2, SimplicialMesh};
use crate::error::FemError;
use std::collections::HashMap;

impl SimplicialMesh {
    pub fn refine_uniform(&self) -> Result<SimplicialMesh, FemError> {
        let dim = self.dim;
        let mut coords = self.coords.clone();
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, coords: &mut Vec<f64>| -> u32 {
            let key = sorted2(a, b);
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let m = (coords.len() / dim) as u32;
            for d in 0..dim {
                let pa = coords[a as usize * dim + d];
                let pb = coords[b as usize * dim + d];
                coords.push(0.5 * (pa + pb));
            }
            midpoint.insert(key, m);
            m
        };

        let n_cells = self.n_cells();
        let children_per_cell = if dim == 2 { 4 } else { 8 };
        let mut cells: Vec<u32> = Vec::with_capacity(n_cells * children_per_cell * (dim + 1));
        let mut parents: Vec<u32> = Vec::with_capacity(n_cells * children_per_cell);

        for c in 0..n_cells {
            let cell = self.cell(c).to_vec();
            if dim == 2 {
                let (v0, v1, v2) = (cell[0], cell[1], cell[2]);
                let m01 = mid(v0, v1, &mut coords);
                let m02 = mid(v0, v2, &mut coords);
                let m12 = mid(v1, v2, &mut coords);
                cells.extend_from_slice(&[v0, m01, m02]);
                cells.extend_from_slice(&[m01, v1, m12]);
                cells.extend_from_slice(&[m02, m12, v2]);
                cells.extend_from_slice(&[m01, m12, m02]);
            } else {
                let (v0, v1, v2, v3) = (cell[0], cell[1], cell[2], cell[3]);
                let m01 = mid(v0, v1, &mut coords);
                let m02 = mid(v0, v2, &mut coords);
                let m03 = mid(v0, v3, &mut coords);
                let m12 = mid(v1, v2, &mut coords);
                let m13 = mid(v1, v3, &mut coords);
                let m23 = mid(v2, v3, &mut coords);
                cells.extend_from_slice(&[v0, m01, m02, m03]);
                cells.extend_from_slice(&[v1, m01, m12, m13]);
                cells.extend_from_slice(&[v2, m02, m12, m23]);
                cells.extend_from_slice(&[v3, m03, m13, m23]);

                // Interior octahedron: three candidate diagonals, each with
                // its equatorial cycle of the remaining four midpoints.
                let candidates = [
                    ((m01, m23), [m02, m03, m13, m12]),
                    ((m02, m13), [m01, m03, m23, m12]),
                    ((m03, m12), [m01, m02, m23, m13]),
                ];
                let len2 = |a: u32, b: u32| -> f64 {
                    (0..dim)
                        .map(|d| {
                            let e = coords[a as usize * dim + d] - coords[b as usize * dim + d];
                            e * e
                        })
                        .sum()
                };
                let mut best = 0;
                let mut best_len = len2(candidates[0].0 .0, candidates[0].0 .1);
                let mut best_key = sorted2(candidates[0].0 .0, candidates[0].0 .1);
                for (i, ((a, b), _)) in candidates.iter().enumerate().skip(1) {
                    let l = len2(*a, *b);
                    let key = sorted2(*a, *b);
                    if l < best_len || (l == best_len && key < best_key) {
                        best = i;
                        best_len = l;
                        best_key = key;
                    }
                }
                let ((da, db), cycle) = candidates[best];
                for e in 0..4 {
                    cells.extend_from_slice(&[da, db, cycle[e], cycle[(e + 1) % 4]]);
                }
            }
            for _ in 0..children_per_cell {
                parents.push(c as u32);
            }
        }

        SimplicialMesh::from_parts(dim, coords, cells, self.level + 1, parents)
    }
}
