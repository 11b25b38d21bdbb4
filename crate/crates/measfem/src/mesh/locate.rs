//! Point location with a uniform bucket grid over cell bounding boxes.
//!
//! Buckets list candidate cells in ascending index order, so scanning a
//! bucket front to back and returning the first containing cell implements
//! the deterministic tie-break: for points on shared facets the lowest cell
//! index wins.

use super::{SimplicialMesh, GEOM_TOL};

/// Result of a successful point location: the containing cell and the
/// barycentric coordinates of the point, clamped to `[0, 1]` and
/// renormalized to sum to one.
#[derive(Debug, Clone, Copy)]
pub struct PointLocation {
    pub cell: usize,
    pub barycentric: [f64; 4],
}

#[derive(Debug)]
pub(super) struct CellGrid {
    mins: [f64; 3],
    maxs: [f64; 3],
    inv_width: [f64; 3],
    res: [usize; 3],
    offsets: Vec<u32>,
    entries: Vec<u32>,
}

impl CellGrid {
    fn build(mesh: &SimplicialMesh) -> CellGrid {
        let dim = mesh.dim();
        let n_cells = mesh.n_cells();
        let mut mins = [0.0_f64; 3];
        let mut maxs = [1.0_f64; 3];
        for d in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in 0..mesh.n_vertices() {
                lo = lo.min(mesh.vertex(v)[d]);
                hi = hi.max(mesh.vertex(v)[d]);
            }
            let pad = 1e-12 * (hi - lo).max(1.0);
            mins[d] = lo - pad;
            maxs[d] = hi + pad;
        }
        let per_axis = ((n_cells as f64 / 2.0).powf(1.0 / dim as f64).ceil() as usize)
            .clamp(1, 256);
        let mut res = [1usize; 3];
        let mut inv_width = [0.0_f64; 3];
        for d in 0..dim {
            res[d] = per_axis;
            inv_width[d] = res[d] as f64 / (maxs[d] - mins[d]);
        }
        let n_buckets = res[0] * res[1] * res[2];

        let bucket_range = |mesh: &SimplicialMesh, c: usize| -> [(usize, usize); 3] {
            let mut range = [(0usize, 0usize); 3];
            for d in 0..dim {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &v in mesh.cell(c) {
                    let x = mesh.vertex(v as usize)[d];
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                let b_lo = (((lo - mins[d]) * inv_width[d]).floor() as isize)
                    .clamp(0, res[d] as isize - 1) as usize;
                let b_hi = (((hi - mins[d]) * inv_width[d]).floor() as isize)
                    .clamp(0, res[d] as isize - 1) as usize;
                range[d] = (b_lo, b_hi);
            }
            range
        };

        // Two passes: count entries per bucket, then fill in cell order so
        // every bucket lists cells ascending.
        let mut counts = vec![0u32; n_buckets + 1];
        for c in 0..n_cells {
            let r = bucket_range(mesh, c);
            for bz in r[2].0..=r[2].1 {
                for by in r[1].0..=r[1].1 {
                    for bx in r[0].0..=r[0].1 {
                        counts[bz * res[0] * res[1] + by * res[0] + bx + 1] += 1;
                    }
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let mut cursor = offsets.clone();
        let mut entries = vec![0u32; offsets[n_buckets] as usize];
        for c in 0..n_cells {
            let r = bucket_range(mesh, c);
            for bz in r[2].0..=r[2].1 {
                for by in r[1].0..=r[1].1 {
                    for bx in r[0].0..=r[0].1 {
                        let b = bz * res[0] * res[1] + by * res[0] + bx;
                        entries[cursor[b] as usize] = c as u32;
                        cursor[b] += 1;
                    }
                }
            }
        }
        CellGrid { mins, maxs, inv_width, res, offsets, entries }
    }

    fn candidates(&self, dim: usize, x: &[f64]) -> Option<&[u32]> {
        let mut b = [0usize; 3];
        for d in 0..dim {
            if x[d] < self.mins[d] || x[d] > self.maxs[d] {
                return None;
            }
            b[d] = (((x[d] - self.mins[d]) * self.inv_width[d]).floor() as isize)
                .clamp(0, self.res[d] as isize - 1) as usize;
        }
        let bucket = b[2] * self.res[0] * self.res[1] + b[1] * self.res[0] + b[0];
        let lo = self.offsets[bucket] as usize;
        let hi = self.offsets[bucket + 1] as usize;
        Some(&self.entries[lo..hi])
    }
}

impl SimplicialMesh {
    /// Finds the cell containing `x`. Points on shared facets resolve to the
    /// lowest containing cell index; points outside every cell return `None`.
    pub fn locate_point(&self, x: &[f64]) -> Option<PointLocation> {
        let grid = self.grid.get_or_init(|| CellGrid::build(self));
        let candidates = grid.candidates(self.dim, x)?;
        for &c in candidates {
            let lam = self.barycentric(c as usize, x);
            let min_l = lam[..self.dim + 1].iter().cloned().fold(f64::INFINITY, f64::min);
            if min_l >= -GEOM_TOL {
                let mut clamped = [0.0; 4];
                let mut sum = 0.0;
                for i in 0..self.dim + 1 {
                    clamped[i] = lam[i].max(0.0);
                    sum += clamped[i];
                }
                for l in clamped.iter_mut() {
                    *l /= sum;
                }
                return Some(PointLocation { cell: c as usize, barycentric: clamped });
            }
        }
        None
    }
}
