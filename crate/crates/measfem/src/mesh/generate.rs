//! Structured mesh generators. All generators produce level-0 meshes with
//! exactly reproducible vertex numbering, so repeated runs build identical
//! meshes and identical DOF layouts.

use super::SimplicialMesh;
use crate::error::FemError;
use std::collections::HashMap;

/// L-shaped domain `(-1,1)² \ [0,1)×(-1,0]` as three unit squares, each
/// split into an n×n grid of squares, each square cut along its lower-left
/// to upper-right diagonal. `n = 4` gives 65 vertices and 96 triangles.
pub fn generate_lshape(n: usize) -> Result<SimplicialMesh, FemError> {
    assert!(n >= 1);
    let ni = n as i64;
    let mut index: HashMap<(i64, i64), u32> = HashMap::new();
    let mut coords: Vec<f64> = Vec::new();
    // Lattice points (i, j)/n on the closed L; scan order fixes numbering.
    for j in -ni..=ni {
        for i in -ni..=ni {
            if i <= 0 || j >= 0 {
                index.insert((i, j), (coords.len() / 2) as u32);
                coords.push(i as f64 / n as f64);
                coords.push(j as f64 / n as f64);
            }
        }
    }
    let mut cells: Vec<u32> = Vec::new();
    for j in -ni..ni {
        for i in -ni..ni {
            // Square [i, i+1] × [j, j+1] (lattice units) is kept unless it
            // lies in the removed quadrant x ≥ 0, y ≤ 0.
            if i >= 0 && j < 0 {
                continue;
            }
            let a = index[&(i, j)];
            let b = index[&(i + 1, j)];
            let c = index[&(i + 1, j + 1)];
            let d = index[&(i, j + 1)];
            cells.extend_from_slice(&[a, b, c]);
            cells.extend_from_slice(&[a, c, d]);
        }
    }
    SimplicialMesh::from_parts(2, coords, cells, 0, Vec::new())
}

/// Unit square (0,1)² as an n×n grid of squares, each cut along its
/// lower-left to upper-right diagonal.
pub fn generate_unit_square(n: usize) -> Result<SimplicialMesh, FemError> {
    assert!(n >= 1);
    let idx = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut coords = Vec::with_capacity((n + 1) * (n + 1) * 2);
    for j in 0..=n {
        for i in 0..=n {
            coords.push(i as f64 / n as f64);
            coords.push(j as f64 / n as f64);
        }
    }
    let mut cells = Vec::with_capacity(n * n * 6);
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            cells.extend_from_slice(&[a, b, c]);
            cells.extend_from_slice(&[a, c, d]);
        }
    }
    SimplicialMesh::from_parts(2, coords, cells, 0, Vec::new())
}

/// The six corners of the hexagonal domain, in boundary order. The last
/// corner is pulled outward by 1/10, which makes its interior angle close
/// to (but below) π.
pub fn hexagon_vertices() -> [[f64; 2]; 6] {
    let a = 1.0 / 3.0_f64.sqrt();
    [
        [-a, 1.0],
        [a, 1.0],
        [2.0 * a, 0.0],
        [a, -1.0],
        [-a, -1.0],
        [-a - 0.1, 0.0],
    ]
}

/// Hexagonal domain meshed as a fan of six triangles around the centroid,
/// then `fan_subdivisions` uniform refinements folded into the initial mesh
/// (the result is still a level-0 mesh).
pub fn generate_hexagon(fan_subdivisions: usize) -> Result<SimplicialMesh, FemError> {
    let corners = hexagon_vertices();
    let mut coords = Vec::with_capacity(14);
    let cx = corners.iter().map(|v| v[0]).sum::<f64>() / 6.0;
    let cy = corners.iter().map(|v| v[1]).sum::<f64>() / 6.0;
    coords.push(cx);
    coords.push(cy);
    for v in corners {
        coords.push(v[0]);
        coords.push(v[1]);
    }
    let mut cells = Vec::with_capacity(18);
    for i in 0..6u32 {
        let next = if i == 5 { 1 } else { i + 2 };
        cells.extend_from_slice(&[0, i + 1, next]);
    }
    let mut mesh = SimplicialMesh::from_parts(2, coords, cells, 0, Vec::new())?;
    for _ in 0..fan_subdivisions {
        let fine = mesh.refine_uniform()?;
        // Fold the refinement into the initial mesh: level stays 0.
        mesh = SimplicialMesh::from_parts(
            2,
            fine.coords.clone(),
            fine.cells.clone(),
            0,
            Vec::new(),
        )?;
    }
    Ok(mesh)
}

/// Unit cube (0,1)³ as an n×n×n grid of subcubes, each split into six
/// tetrahedra sharing the main diagonal (Kuhn decomposition). The same
/// decomposition in every subcube makes the mesh conforming.
pub fn generate_cube(n: usize) -> Result<SimplicialMesh, FemError> {
    assert!(n >= 1);
    let np = n + 1;
    let idx = |i: usize, j: usize, k: usize| (k * np * np + j * np + i) as u32;
    let mut coords = Vec::with_capacity(np * np * np * 3);
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                coords.push(i as f64 / n as f64);
                coords.push(j as f64 / n as f64);
                coords.push(k as f64 / n as f64);
            }
        }
    }
    // The six axis orders of the Kuhn decomposition.
    const ORDERS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(n * n * n * 24);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for order in ORDERS {
                    let mut p = [i, j, k];
                    let v0 = idx(p[0], p[1], p[2]);
                    p[order[0]] += 1;
                    let v1 = idx(p[0], p[1], p[2]);
                    p[order[1]] += 1;
                    let v2 = idx(p[0], p[1], p[2]);
                    p[order[2]] += 1;
                    let v3 = idx(p[0], p[1], p[2]);
                    cells.extend_from_slice(&[v0, v1, v2, v3]);
                }
            }
        }
    }
    SimplicialMesh::from_parts(3, coords, cells, 0, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lshape_reference_counts() {
        let m = generate_lshape(4).unwrap();
        assert_eq!(m.n_vertices(), 65);
        assert_eq!(m.n_cells(), 96);
        let m1 = generate_lshape(1).unwrap();
        assert_eq!(m1.n_vertices(), 8);
        assert_eq!(m1.n_cells(), 6);
        assert_eq!(m1.n_boundary_facets(), 8);
    }

    #[test]
    fn lshape_volume_is_three() {
        for n in [1, 2, 4] {
            let m = generate_lshape(n).unwrap();
            assert!((m.total_volume() - 3.0).abs() < 1e-12 * 3.0, "n = {n}");
        }
    }

    #[test]
    fn lshape_excludes_removed_quadrant() {
        let m = generate_lshape(4).unwrap();
        assert!(m.locate_point(&[0.5, -0.5]).is_none());
        assert!(m.locate_point(&[-0.5, 0.5]).is_some());
    }

    #[test]
    fn unit_square_counts_and_volume() {
        let m = generate_unit_square(3).unwrap();
        assert_eq!(m.n_vertices(), 16);
        assert_eq!(m.n_cells(), 18);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hexagon_fan_counts() {
        let m0 = generate_hexagon(0).unwrap();
        assert_eq!(m0.n_vertices(), 7);
        assert_eq!(m0.n_cells(), 6);
        assert_eq!(m0.level(), 0);
        let m1 = generate_hexagon(1).unwrap();
        assert_eq!(m1.n_cells(), 24);
        assert_eq!(m1.level(), 0);
        assert!(m1.parent_of_cell(0).is_none(), "pre-refinement leaves no parents");
    }

    #[test]
    fn hexagon_pulled_corner_coordinate() {
        let v6 = hexagon_vertices()[5];
        assert!((v6[0] - (-1.0 / 3.0_f64.sqrt() - 0.1)).abs() < 1e-15);
        assert!((v6[0] - (-0.67735)).abs() < 1e-5);
        assert_eq!(v6[1], 0.0);
    }

    #[test]
    fn hexagon_volume_matches_shoelace() {
        let corners = hexagon_vertices();
        let mut shoelace = 0.0;
        for i in 0..6 {
            let p = corners[i];
            let q = corners[(i + 1) % 6];
            shoelace += p[0] * q[1] - q[0] * p[1];
        }
        let area = shoelace.abs() / 2.0;
        for s in 0..3 {
            let m = generate_hexagon(s).unwrap();
            assert!((m.total_volume() - area).abs() < 1e-12 * area, "s = {s}");
        }
    }

    #[test]
    fn cube_reference_counts() {
        let m = generate_cube(2).unwrap();
        assert_eq!(m.n_vertices(), 27);
        assert_eq!(m.n_cells(), 48);
        let m1 = generate_cube(1).unwrap();
        assert_eq!(m1.n_vertices(), 8);
        assert_eq!(m1.n_cells(), 6);
    }

    #[test]
    fn cube_volume_is_one() {
        for n in [1, 2, 3] {
            let m = generate_cube(n).unwrap();
            assert!((m.total_volume() - 1.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn cube_boundary_facet_count() {
        // Each of the 6 faces carries 2·n² boundary triangles.
        let m = generate_cube(2).unwrap();
        assert_eq!(m.n_boundary_facets(), 6 * 2 * 4);
    }
}
