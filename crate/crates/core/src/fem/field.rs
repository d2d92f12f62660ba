//! Coefficient vectors, nodal interpolation, point evaluation, and
//! quadrature-based error norms.

use super::dofmap::DofMap;
use super::element::{p2_dlambda, p2_values, Geometry, Tabulation};
use super::FemError;
use crate::mesh::{Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Vector P2, component-major, length `2 Ns`.
    Velocity,
    /// Scalar P1, length `Np`.
    Pressure,
}

impl Space {
    pub fn dim(self, dofmap: &DofMap) -> usize {
        match self {
            Space::Velocity => dofmap.n_velocity(),
            Space::Pressure => dofmap.n_pressure(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    space: Space,
    values: Vec<f64>,
}

impl FieldVector {
    pub fn zeros(space: Space, dofmap: &DofMap) -> Self {
        Self {
            space,
            values: vec![0.0; space.dim(dofmap)],
        }
    }

    pub fn from_values(space: Space, values: Vec<f64>, dofmap: &DofMap) -> Result<Self, FemError> {
        let expected = space.dim(dofmap);
        if values.len() != expected {
            return Err(FemError::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Nodal P2 interpolant of a vector field.
pub fn interpolate_velocity(dofmap: &DofMap, f: impl Fn(Point) -> [f64; 2]) -> FieldVector {
    let ns = dofmap.n_scalar();
    let mut v = vec![0.0; 2 * ns];
    for (i, &p) in dofmap.coords().iter().enumerate() {
        let [fx, fy] = f(p);
        v[i] = fx;
        v[ns + i] = fy;
    }
    FieldVector {
        space: Space::Velocity,
        values: v,
    }
}

/// Nodal P1 interpolant of a scalar field.
pub fn interpolate_pressure(dofmap: &DofMap, f: impl Fn(Point) -> f64) -> FieldVector {
    let values = dofmap.coords()[..dofmap.n_pressure()].iter().map(|&p| f(p)).collect();
    FieldVector {
        space: Space::Pressure,
        values,
    }
}

fn cell_coeffs(dofmap: &DofMap, u: &[f64], t: usize) -> ([f64; 6], [f64; 6]) {
    let ns = dofmap.n_scalar();
    let d = dofmap.cell_dofs(t);
    (
        std::array::from_fn(|a| u[d[a]]),
        std::array::from_fn(|a| u[ns + d[a]]),
    )
}

/// Velocity of `u` at barycentric point `l` of cell `t`.
pub fn velocity_in_cell(dofmap: &DofMap, u: &[f64], t: usize, l: [f64; 3]) -> [f64; 2] {
    let (ux, uy) = cell_coeffs(dofmap, u, t);
    let v = p2_values(l);
    let mut out = [0.0; 2];
    for a in 0..6 {
        out[0] += ux[a] * v[a];
        out[1] += uy[a] * v[a];
    }
    out
}

/// `grad[c][d] = ∂u_c/∂x_d` at barycentric point `l` of cell `t`.
pub fn velocity_gradient_in_cell(
    mesh: &Mesh,
    dofmap: &DofMap,
    u: &[f64],
    t: usize,
    l: [f64; 3],
) -> [[f64; 2]; 2] {
    let (ux, uy) = cell_coeffs(dofmap, u, t);
    let g = Geometry::of(mesh, t).grads(&p2_dlambda(l));
    let mut out = [[0.0; 2]; 2];
    for a in 0..6 {
        for d in 0..2 {
            out[0][d] += ux[a] * g[a][d];
            out[1][d] += uy[a] * g[a][d];
        }
    }
    out
}

/// P1 pressure at barycentric point `l` of cell `t`.
pub fn pressure_in_cell(mesh: &Mesh, p: &[f64], t: usize, l: [f64; 3]) -> f64 {
    let tri = mesh.triangles()[t];
    l[0] * p[tri[0]] + l[1] * p[tri[1]] + l[2] * p[tri[2]]
}

/// Evaluates a velocity field at an arbitrary point, if it lies in the mesh.
pub fn eval_velocity(mesh: &Mesh, dofmap: &DofMap, u: &[f64], x: Point) -> Option<[f64; 2]> {
    mesh.locate(x).map(|(t, l)| velocity_in_cell(dofmap, u, t, l))
}

/// Evaluates a pressure field at an arbitrary point, if it lies in the mesh.
pub fn eval_pressure(mesh: &Mesh, p: &[f64], x: Point) -> Option<f64> {
    mesh.locate(x).map(|(t, l)| pressure_in_cell(mesh, p, t, l))
}

/// `∇·u_h` at each cell centroid.
pub fn cell_divergence(mesh: &Mesh, dofmap: &DofMap, u: &[f64]) -> Vec<f64> {
    (0..mesh.n_triangles())
        .map(|t| {
            let g = velocity_gradient_in_cell(mesh, dofmap, u, t, [1.0 / 3.0; 3]);
            g[0][0] + g[1][1]
        })
        .collect()
}

/// `sqrt(Σ_K ∫_K integrand)` with the order-6 rule.
fn integrate_sq(mesh: &Mesh, mut integrand: impl FnMut(usize, &Geometry, [f64; 3], Point) -> f64) -> f64 {
    let tab = Tabulation::new(6);
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let geo = Geometry::of(mesh, t);
        for (q, &l) in tab.rule.points.iter().enumerate() {
            s += geo.jac_weight(tab.rule.weights[q]) * integrand(t, &geo, l, geo.map(l));
        }
    }
    s.max(0.0).sqrt()
}

/// `‖u_h − u‖_{L²}`.
pub fn l2_error(mesh: &Mesh, dofmap: &DofMap, u: &[f64], exact: impl Fn(Point) -> [f64; 2]) -> f64 {
    integrate_sq(mesh, |t, _, l, x| {
        let uh = velocity_in_cell(dofmap, u, t, l);
        let ue = exact(x);
        (uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2)
    })
}

/// `‖∇(u_h − u)‖_{L²}`; `grad_exact[c][d] = ∂u_c/∂x_d`.
pub fn h1_seminorm_error(
    mesh: &Mesh,
    dofmap: &DofMap,
    u: &[f64],
    grad_exact: impl Fn(Point) -> [[f64; 2]; 2],
) -> f64 {
    integrate_sq(mesh, |t, _, l, x| {
        let gh = velocity_gradient_in_cell(mesh, dofmap, u, t, l);
        let ge = grad_exact(x);
        let mut s = 0.0;
        for c in 0..2 {
            for d in 0..2 {
                s += (gh[c][d] - ge[c][d]).powi(2);
            }
        }
        s
    })
}

/// `‖∇·u_h − ∇·u‖_{L²}`.
pub fn div_l2_error(mesh: &Mesh, dofmap: &DofMap, u: &[f64], div_exact: impl Fn(Point) -> f64) -> f64 {
    integrate_sq(mesh, |t, _, l, x| {
        let gh = velocity_gradient_in_cell(mesh, dofmap, u, t, l);
        (gh[0][0] + gh[1][1] - div_exact(x)).powi(2)
    })
}

/// `‖(p_h − p) − c‖_{L²}` with `c` the mean of `p_h − p`, i.e. the error
/// modulo constants. Equals [`pressure_l2_error`] when both have the same mean.
pub fn pressure_l2_error_mod_const(mesh: &Mesh, p: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
    let tab = Tabulation::new(6);
    let (mut int, mut area) = (0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let geo = Geometry::of(mesh, t);
        for (q, &l) in tab.rule.points.iter().enumerate() {
            let w = geo.jac_weight(tab.rule.weights[q]);
            int += w * (pressure_in_cell(mesh, p, t, l) - exact(geo.map(l)));
            area += w;
        }
    }
    let c = int / area;
    integrate_sq(mesh, |t, _, l, x| (pressure_in_cell(mesh, p, t, l) - exact(x) - c).powi(2))
}

/// `‖p_h − p‖_{L²}`.
pub fn pressure_l2_error(mesh: &Mesh, p: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
    integrate_sq(mesh, |t, _, l, x| (pressure_in_cell(mesh, p, t, l) - exact(x)).powi(2))
}
