//! Lagrange shape functions on the reference simplex in barycentric form.
//!
//! A degree-k node is a barycentric multi-index `alpha` with `|alpha| = k`
//! placed at `alpha / k`. The local ordering is: vertex nodes, then edge
//! nodes edge by edge (interior nodes of an edge ordered from its first
//! local vertex), then face nodes (3D) or the cell-interior node (2D, k=3).
//! The shape function of node `alpha` is the product over coordinates of
//!
//! `p_m(t) = Π_{j<m} (k·t - j) / (m - j)`  with `m = alpha_i`, `t = λ_i`,
//!
//! which is one at its own node and zero at all others.

pub const EDGES_2D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
pub const EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
pub const FACES_3D: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

/// Local node multi-indices for degree `k` on a `dim`-simplex, in the fixed
/// local order described in the module docs.
pub fn local_nodes(dim: usize, k: usize) -> Vec<[u8; 4]> {
    assert!((1..=3).contains(&k));
    let mut nodes: Vec<[u8; 4]> = Vec::new();
    for v in 0..=dim {
        let mut a = [0u8; 4];
        a[v] = k as u8;
        nodes.push(a);
    }
    let edges: &[(usize, usize)] = if dim == 2 { &EDGES_2D } else { &EDGES_3D };
    for &(i, j) in edges {
        for m in 1..k {
            let mut a = [0u8; 4];
            a[i] = (k - m) as u8;
            a[j] = m as u8;
            nodes.push(a);
        }
    }
    if k == 3 {
        if dim == 2 {
            nodes.push([1, 1, 1, 0]);
        } else {
            for f in FACES_3D {
                let mut a = [0u8; 4];
                for &v in &f {
                    a[v] = 1;
                }
                nodes.push(a);
            }
        }
    }
    nodes
}

pub fn n_local_nodes(dim: usize, k: usize) -> usize {
    // binomial(k + dim, dim)
    match (dim, k) {
        (2, 1) => 3,
        (2, 2) => 6,
        (2, 3) => 10,
        (3, 1) => 4,
        (3, 2) => 10,
        (3, 3) => 20,
        _ => unreachable!("degree {k} unsupported"),
    }
}

/// Value and derivative of `p_m` at `t` for degree `k`.
#[inline]
fn factor_eval(k: usize, m: u8, t: f64) -> (f64, f64) {
    let mut v = 1.0;
    let mut d = 0.0;
    for j in 0..m as usize {
        let denom = (m as usize - j) as f64;
        let f = (k as f64 * t - j as f64) / denom;
        d = d * f + v * k as f64 / denom;
        v *= f;
    }
    (v, d)
}

/// Evaluates all shape functions of degree `k` at the barycentric point
/// `lambda`; optionally also the partial derivatives with respect to each
/// barycentric coordinate (the physical gradient is `Σ_i ∂φ/∂λ_i ∇λ_i`).
pub fn eval_basis(
    dim: usize,
    k: usize,
    lambda: &[f64],
    values: &mut [f64],
    mut grads: Option<&mut [[f64; 4]]>,
) {
    let nodes = local_nodes_cached(dim, k);
    debug_assert_eq!(values.len(), nodes.len());
    for (n, alpha) in nodes.iter().enumerate() {
        let mut v = [0.0_f64; 4];
        let mut d = [0.0_f64; 4];
        for i in 0..=dim {
            let (vi, di) = factor_eval(k, alpha[i], lambda[i]);
            v[i] = vi;
            d[i] = di;
        }
        let mut value = 1.0;
        for vi in v.iter().take(dim + 1) {
            value *= vi;
        }
        values[n] = value;
        if let Some(g) = grads.as_deref_mut() {
            for i in 0..=dim {
                let mut partial = d[i];
                for (l, vl) in v.iter().enumerate().take(dim + 1) {
                    if l != i {
                        partial *= vl;
                    }
                }
                g[n][i] = partial;
            }
            for i in dim + 1..4 {
                g[n][i] = 0.0;
            }
        }
    }
}

/// Cached node tables for the six (dim, k) combinations.
pub fn local_nodes_cached(dim: usize, k: usize) -> &'static [[u8; 4]] {
    use std::sync::OnceLock;
    static TABLES: OnceLock<Vec<Vec<[u8; 4]>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let mut t = Vec::new();
        for dim in [2, 3] {
            for k in 1..=3 {
                t.push(local_nodes(dim, k));
            }
        }
        t
    });
    let idx = (dim - 2) * 3 + (k - 1);
    &tables[idx]
}
