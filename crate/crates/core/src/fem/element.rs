//! The quadratic Lagrange triangle in barycentric form.
//!
//! Local basis order: vertex functions `λ_i(2λ_i − 1)` for `i = 0, 1, 2`,
//! then edge functions `4λ_0λ_1`, `4λ_1λ_2`, `4λ_2λ_0`.

use super::quadrature::QuadratureRule;
use crate::mesh::{Mesh, Point};

const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

pub(crate) fn p2_values(l: [f64; 3]) -> [f64; 6] {
    let mut v = [0.0; 6];
    for i in 0..3 {
        v[i] = l[i] * (2.0 * l[i] - 1.0);
    }
    for (k, &(i, j)) in EDGES.iter().enumerate() {
        v[3 + k] = 4.0 * l[i] * l[j];
    }
    v
}

/// `∂φ_a/∂λ_k` at barycentric point `l`.
pub(crate) fn p2_dlambda(l: [f64; 3]) -> [[f64; 3]; 6] {
    let mut d = [[0.0; 3]; 6];
    for i in 0..3 {
        d[i][i] = 4.0 * l[i] - 1.0;
    }
    for (k, &(i, j)) in EDGES.iter().enumerate() {
        d[3 + k][i] = 4.0 * l[j];
        d[3 + k][j] = 4.0 * l[i];
    }
    d
}

/// Quadrature rule with basis data tabulated at its points.
#[derive(Debug, Clone)]
pub(crate) struct Tabulation {
    pub rule: QuadratureRule,
    pub values: Vec<[f64; 6]>,
    pub dlambda: Vec<[[f64; 3]; 6]>,
}

impl Tabulation {
    pub fn new(order: usize) -> Self {
        let rule = QuadratureRule::of_order(order);
        let values = rule.points.iter().map(|&l| p2_values(l)).collect();
        let dlambda = rule.points.iter().map(|&l| p2_dlambda(l)).collect();
        Self {
            rule,
            values,
            dlambda,
        }
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }
}

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl Geometry {
    pub fn of(mesh: &Mesh, t: usize) -> Self {
        let points = mesh.triangle_points(t);
        let [p0, p1, p2] = points;
        let area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let grad_lambda = [
            [(p1[1] - p2[1]) / area2, (p2[0] - p1[0]) / area2],
            [(p2[1] - p0[1]) / area2, (p0[0] - p2[0]) / area2],
            [(p0[1] - p1[1]) / area2, (p1[0] - p0[0]) / area2],
        ];
        Self {
            points,
            area: 0.5 * area2,
            grad_lambda,
        }
    }

    pub fn map(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.points;
        [
            l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
        ]
    }

    /// Physical gradients of the six basis functions.
    pub fn grads(&self, dlambda: &[[f64; 3]; 6]) -> [[f64; 2]; 6] {
        let g = &self.grad_lambda;
        let mut out = [[0.0; 2]; 6];
        for (a, d) in dlambda.iter().enumerate() {
            for c in 0..2 {
                out[a][c] = d[0] * g[0][c] + d[1] * g[1][c] + d[2] * g[2][c];
            }
        }
        out
    }

    /// Physical quadrature weight for reference weight `w` (reference area 1/2).
    pub fn jac_weight(&self, w: f64) -> f64 {
        2.0 * self.area * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_basis_property() {
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for (j, &l) in nodes.iter().enumerate() {
            let v = p2_values(l);
            for (a, &va) in v.iter().enumerate() {
                let expect = if a == j { 1.0 } else { 0.0 };
                assert!((va - expect).abs() < 1e-15, "φ_{a} at node {j}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mesh = crate::mesh::generate_unit_square(1);
        let geo = Geometry::of(&mesh, 1);
        let l = [0.2, 0.3, 0.5];
        let g = geo.grads(&p2_dlambda(l));
        // Move in physical space: dλ = ∇λ · dx.
        let h = 1e-6;
        for c in 0..2 {
            let shift = |s: f64| {
                let mut m = l;
                for (k, mk) in m.iter_mut().enumerate() {
                    *mk += s * geo.grad_lambda[k][c];
                }
                p2_values(m)
            };
            let (vp, vm) = (shift(h), shift(-h));
            for a in 0..6 {
                let fd = (vp[a] - vm[a]) / (2.0 * h);
                assert!((fd - g[a][c]).abs() < 1e-8, "a={a} c={c}: {fd} vs {}", g[a][c]);
            }
        }
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let mesh = crate::mesh::generate_unit_square(3);
        for t in 0..mesh.n_triangles() {
            let g = Geometry::of(&mesh, t).grad_lambda;
            for c in 0..2 {
                assert!((g[0][c] + g[1][c] + g[2][c]).abs() < 1e-12);
            }
        }
    }
}
