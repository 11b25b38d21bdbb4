//! Independent numerical oracles: each test checks library output against a
//! result computed by a different method (dense elimination, brute-force
//! scans, analytic integrals) so that shared bugs cannot hide.

use measfem::analysis::RefinementLadder;
use measfem::assembly::{
    apply_dirichlet, assemble_load_l2, assemble_measure_rhs, assemble_stiffness,
    CoefficientField, CurveAtom, MeasureData, PointAtom,
};
use measfem::config::preset;
use measfem::fespace::build_space;
use measfem::mesh::{generate_hexagon, generate_lshape, generate_unit_square, RegionPredicate};
use measfem::scheme::solve_standard;
use measfem::sparse::cg_solve;
use std::sync::Arc;

/// Gaussian elimination with partial pivoting on a dense copy — a direct
/// solver sharing no code with the CG path.
fn dense_solve(a: &measfem::sparse::CsrMatrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = vec![0.0_f64; n * n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            m[i * n + c as usize] = v;
        }
    }
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| m[p * n + col].abs().total_cmp(&m[q * n + col].abs()))
            .unwrap();
        assert!(m[pivot_row * n + col].abs() > 1e-14, "singular dense system");
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0_f64; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    x
}

#[test]
fn cg_matches_dense_elimination_on_unit_square() {
    // P1 stiffness on the unit square with a manufactured smooth load;
    // 121 DOFs, well under the dense oracle's comfort zone.
    let mesh = Arc::new(generate_unit_square(10).unwrap());
    let space = Arc::new(build_space(mesh, 1).unwrap());
    assert!(space.n_dofs() <= 500);
    let mut a = assemble_stiffness(&space, &CoefficientField::Identity).unwrap();
    let mut b = assemble_load_l2(&space, |x: &[f64]| {
        (2.0 * x[0] - 0.3).cos() * (1.5 * x[1] + 0.2).sin() + 0.5
    })
    .unwrap();
    apply_dirichlet(&mut a, &mut b, space.boundary_mask());

    let (x_cg, stats) = cg_solve(&a, &b, 1e-14).unwrap();
    assert!(stats.converged);
    let x_dense = dense_solve(&a, &b);
    let worst = x_cg
        .iter()
        .zip(&x_dense)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0_f64, f64::max);
    assert!(worst < 1e-9, "CG and dense elimination disagree by {worst:.3e}");
}

/// The three curve sources of the cube study, parametrized independently of
/// the library: component functions f1, f2, f3 on t in [0, 0.4], cyclically
/// shifted per curve.
fn curve_point(shift: usize, t: f64) -> [f64; 3] {
    let f = [
        0.5 + 0.1 * (1.0 - t) * (4.0 * std::f64::consts::PI * t).sin(),
        0.5 + 0.1 * (1.0 - t) * (4.0 * std::f64::consts::PI * t).cos(),
        0.3 + t,
    ];
    [f[shift % 3], f[(1 + shift) % 3], f[(2 + shift) % 3]]
}

fn curve_measure(segments: usize) -> MeasureData {
    let weights = [1.6, 0.8, 1.2];
    let curves = (0..3)
        .map(|shift| {
            let mut flat = Vec::with_capacity((segments + 1) * 3);
            for i in 0..=segments {
                let t = 0.4 * i as f64 / segments as f64;
                flat.extend_from_slice(&curve_point(shift, t));
            }
            CurveAtom {
                points: flat,
                dim: 3,
                density: weights[shift],
                label: format!("curve{shift}"),
            }
        })
        .collect();
    MeasureData { points: Vec::new(), curves }
}

#[test]
fn polyline_halving_changes_rhs_at_second_order() {
    // Halving the segment length of a smooth curve's polyline changes the
    // assembled RHS by O(segment length squared), so successive changes
    // shrink by a factor near 4.
    let cfg = preset("example3", None).unwrap();
    let ladder = RefinementLadder::build(cfg.domain.build().unwrap(), 1).unwrap();
    let space = Arc::new(build_space(ladder.mesh(1).clone(), 1).unwrap());

    let rhs: Vec<Vec<f64>> = [64usize, 128, 256, 512, 1024]
        .iter()
        .map(|&segments| assemble_measure_rhs(&space, &curve_measure(segments)).unwrap())
        .collect();
    let change = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    let deltas: Vec<f64> = rhs.windows(2).map(|w| change(&w[0], &w[1])).collect();
    for (i, pair) in deltas.windows(2).enumerate() {
        let ratio = pair[0] / pair[1];
        assert!(
            (3.5..=4.5).contains(&ratio),
            "halving step {i}: ratio {ratio:.3} outside [3.5, 4.5] (deltas {:?})",
            deltas
        );
    }
}

#[test]
fn point_source_solution_peaks_at_the_source_node() {
    // Discrete maximum principle on the P1 L-shape family: the Galerkin
    // solution for a positive point source attains its maximum at the
    // source's own node. Verified by brute scan over every coefficient.
    let ladder = RefinementLadder::build(generate_lshape(4).unwrap(), 1).unwrap();
    let source = [-0.5, 0.5];
    let measure = MeasureData {
        points: vec![PointAtom { position: source.to_vec(), weight: 1.0, label: "src".into() }],
        curves: Vec::new(),
    };
    for level in [0usize, 1] {
        let space = Arc::new(build_space(ladder.mesh(level).clone(), 1).unwrap());
        let solution =
            solve_standard(&space, &CoefficientField::Identity, &measure, 1e-12).unwrap();
        let u = &solution.function.coefficients;
        assert!(u.iter().all(|c| c.is_finite()));
        let (argmax, &max) = u
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.total_cmp(q))
            .unwrap();
        assert!(max > 0.0);
        let pos = space.dof_position(argmax);
        assert!(
            (pos[0] - source[0]).abs() < 1e-12 && (pos[1] - source[1]).abs() < 1e-12,
            "level {level}: max at ({}, {}) instead of the source",
            pos[0],
            pos[1]
        );
    }
}

#[test]
fn region_selection_matches_brute_force() {
    let mesh = {
        let ladder = RefinementLadder::build(generate_hexagon(1).unwrap(), 2).unwrap();
        ladder.mesh(2).clone()
    };
    let center = [0.0, 0.0];
    let radius = 1.0 / 3.0;
    let ball = RegionPredicate::Ball { center: center.to_vec(), radius };
    let complement = RegionPredicate::BallComplement { center: center.to_vec(), radius };
    let whole = RegionPredicate::WholeDomain;

    // Brute force: a cell belongs to the ball selection iff every vertex
    // lies strictly inside; to the complement iff every vertex is strictly
    // outside.
    let strictly_inside = |v: &[f64]| -> bool {
        let dx = v[0] - center[0];
        let dy = v[1] - center[1];
        (dx * dx + dy * dy).sqrt() < radius
    };
    let mut expected_ball = Vec::new();
    let mut expected_complement = Vec::new();
    for c in 0..mesh.n_cells() {
        let verts = mesh.cell(c);
        let inside = verts.iter().filter(|&&v| strictly_inside(mesh.vertex(v as usize))).count();
        if inside == 3 {
            expected_ball.push(c);
        }
        if inside == 0 {
            let any_on_sphere = verts.iter().any(|&v| {
                let p = mesh.vertex(v as usize);
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                ((dx * dx + dy * dy).sqrt() - radius).abs() == 0.0
            });
            if !any_on_sphere {
                expected_complement.push(c);
            }
        }
    }

    assert_eq!(mesh.select_cells(&ball), expected_ball);
    assert_eq!(mesh.select_cells(&complement), expected_complement);
    let all: Vec<usize> = (0..mesh.n_cells()).collect();
    assert_eq!(mesh.select_cells(&whole), all);

    // The selected ball cells cannot cover more area than the disk itself.
    let selected_area: f64 =
        expected_ball.iter().map(|&c| mesh.cell_volume(c)).sum();
    assert!(selected_area < std::f64::consts::PI * radius * radius);
    assert!(!expected_ball.is_empty() && !expected_complement.is_empty());
}
