//! Symmetric positive-weight quadrature on the reference simplex.
//!
//! Points are barycentric, weights sum to one; an integral over a cell is
//! `volume * Σ w_q f(x_q)`. Rules exist for exactness degrees up to 6;
//! `quadrature_for` hands out the smallest stored rule that integrates the
//! requested degree exactly.

use crate::error::FemError;
use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Every polynomial of total degree up to this is integrated exactly.
    pub exact_degree: usize,
    /// Barycentric points; only the first `dim + 1` entries are used.
    pub points: Vec<[f64; 4]>,
    /// Positive weights, summing to one.
    pub weights: Vec<f64>,
}

/// Returns a rule on the `dim`-simplex exact for polynomials of total degree
/// `exact_degree`. Degrees above 6 are not supported and give a hard error.
pub fn quadrature_for(dim: usize, exact_degree: usize) -> Result<&'static QuadratureRule, FemError> {
    if exact_degree > 6 {
        return Err(FemError::QuadratureDegree(exact_degree));
    }
    assert!(dim == 2 || dim == 3, "only dim 2 and 3 are supported");
    let table = rules();
    let rule = table
        .iter()
        .filter(|r| r.dim == dim && r.exact_degree >= exact_degree)
        .min_by_key(|r| r.exact_degree)
        .expect("rule table covers degrees up to 6");
    Ok(rule)
}

fn rules() -> &'static Vec<QuadratureRule> {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    RULES.get_or_init(build_rules)
}

/// All distinct permutations of a barycentric orbit generator, in sorted
/// order (deterministic point ordering).
fn orbit(gen: &[f64]) -> Vec<Vec<f64>> {
    let n = gen.len();
    let mut perms: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    // Heap's algorithm, then dedup on bit patterns.
    fn heap(k: usize, idx: &mut Vec<usize>, gen: &[f64], out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            out.push(idx.iter().map(|&i| gen[i]).collect());
            return;
        }
        for i in 0..k {
            heap(k - 1, idx, gen, out);
            if k % 2 == 0 {
                idx.swap(i, k - 1);
            } else {
                idx.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut idx, gen, &mut perms);
    perms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    perms.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    perms
}

fn push_orbit(points: &mut Vec<[f64; 4]>, weights: &mut Vec<f64>, gen: &[f64], w: f64) {
    for p in orbit(gen) {
        let mut q = [0.0; 4];
        q[..p.len()].copy_from_slice(&p);
        points.push(q);
        weights.push(w);
    }
}

fn build_rules() -> Vec<QuadratureRule> {
    let mut rules = Vec::new();

    // -------- triangles --------
    {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        push_orbit(&mut points, &mut weights, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0);
        rules.push(QuadratureRule { dim: 2, exact_degree: 1, points, weights });
    }
    {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        push_orbit(&mut points, &mut weights, &[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0);
        rules.push(QuadratureRule { dim: 2, exact_degree: 2, points, weights });
    }
    {
        // 6-point rule, exact through degree 4.
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let a1 = 0.445948490915965;
        let a2 = 0.091576213509771;
        push_orbit(&mut points, &mut weights, &[a1, a1, 1.0 - 2.0 * a1], 0.223381589678011);
        push_orbit(&mut points, &mut weights, &[a2, a2, 1.0 - 2.0 * a2], 0.109951743655322);
        rules.push(QuadratureRule { dim: 2, exact_degree: 4, points, weights });
    }
    {
        // 12-point rule, exact through degree 6.
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let a1 = 0.249286745170910;
        let a2 = 0.063089014491502;
        let (b, c) = (0.310352451033785, 0.053145049844816);
        push_orbit(&mut points, &mut weights, &[a1, a1, 1.0 - 2.0 * a1], 0.116786275726379);
        push_orbit(&mut points, &mut weights, &[a2, a2, 1.0 - 2.0 * a2], 0.050844906370207);
        push_orbit(&mut points, &mut weights, &[b, c, 1.0 - b - c], 0.082851075618374);
        rules.push(QuadratureRule { dim: 2, exact_degree: 6, points, weights });
    }

    // -------- tetrahedra --------
    {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        push_orbit(&mut points, &mut weights, &[0.25, 0.25, 0.25, 0.25], 1.0);
        rules.push(QuadratureRule { dim: 3, exact_degree: 1, points, weights });
    }
    {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let a = (5.0 + 3.0 * 5.0_f64.sqrt()) / 20.0;
        let b = (5.0 - 5.0_f64.sqrt()) / 20.0;
        push_orbit(&mut points, &mut weights, &[a, b, b, b], 0.25);
        rules.push(QuadratureRule { dim: 3, exact_degree: 2, points, weights });
    }
    {
        // 14-point rule, exact through degree 5.
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let a1 = 0.3108859192633006;
        let a2 = 0.09273525031089125;
        let a3 = 0.04550370412564964;
        push_orbit(&mut points, &mut weights, &[a1, a1, a1, 1.0 - 3.0 * a1], 0.1126879257180159);
        push_orbit(&mut points, &mut weights, &[a2, a2, a2, 1.0 - 3.0 * a2], 0.07349304311636196);
        push_orbit(
            &mut points,
            &mut weights,
            &[a3, a3, 0.5 - a3, 0.5 - a3],
            0.04254602077708147,
        );
        rules.push(QuadratureRule { dim: 3, exact_degree: 5, points, weights });
    }
    {
        // 24-point rule, exact through degree 6.
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let a1 = 0.2146028712591517;
        let a2 = 0.04067395853461135;
        let a3 = 0.3223378901422757;
        let (a4, b4) = (0.06366100187501753, 0.6030056647916491);
        push_orbit(&mut points, &mut weights, &[a1, a1, a1, 1.0 - 3.0 * a1], 0.03992275025816749);
        push_orbit(&mut points, &mut weights, &[a2, a2, a2, 1.0 - 3.0 * a2], 0.01007721105532064);
        push_orbit(&mut points, &mut weights, &[a3, a3, a3, 1.0 - 3.0 * a3], 0.05535718154365472);
        push_orbit(
            &mut points,
            &mut weights,
            &[a4, a4, b4, 1.0 - 2.0 * a4 - b4],
            27.0 / 560.0,
        );
        rules.push(QuadratureRule { dim: 3, exact_degree: 6, points, weights });
    }

    rules
}
