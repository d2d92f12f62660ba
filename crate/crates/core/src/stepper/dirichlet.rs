use super::{ProblemSetup, StepperError, VectorField};
use crate::fem::Discretization;
use crate::linalg::CsrMatrix;
use crate::mesh::Point;

/// Velocity dofs fixed by Dirichlet data, with their values at one time.
#[derive(Clone)]
pub struct DirichletConstraints {
    n_scalar: usize,
    /// Constrained scalar dofs, ascending.
    scalar_dofs: Vec<usize>,
    points: Vec<Point>,
    fields: Vec<VectorField>,
    /// Constrained vector dofs: all x components, then all y components.
    dofs: Vec<usize>,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl std::fmt::Debug for DirichletConstraints {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletConstraints")
            .field("dofs", &self.dofs.len())
            .field("max_abs_value", &self.max_abs_value())
            .finish()
    }
}

impl DirichletConstraints {
    /// Constrains every boundary dof to the setup's data for its tag at `t`.
    pub fn new(disc: &Discretization, setup: &ProblemSetup, t: f64) -> Result<Self, StepperError> {
        let dm = disc.dofmap();
        let mesh = disc.mesh();
        let ns = dm.n_scalar();
        let mut scalar_dofs = Vec::new();
        let mut fields = Vec::new();
        for i in 0..ns {
            if let Some(tag) = dm.boundary_tag(i) {
                let name = mesh.tag_name(tag).map_or_else(|| tag.to_string(), str::to_string);
                let g = setup
                    .boundary_data(&name)
                    .ok_or(StepperError::MissingBoundaryData(name))?;
                scalar_dofs.push(i);
                fields.push(g.clone());
            }
        }
        let points = scalar_dofs.iter().map(|&i| dm.coord(i)).collect();
        let mut dofs: Vec<usize> = scalar_dofs.clone();
        dofs.extend(scalar_dofs.iter().map(|&i| ns + i));
        let mut mask = vec![false; 2 * ns];
        for &d in &dofs {
            mask[d] = true;
        }
        let mut c = Self {
            n_scalar: ns,
            scalar_dofs,
            points,
            fields,
            values: vec![0.0; dofs.len()],
            dofs,
            mask,
        };
        c.update(t);
        Ok(c)
    }

    /// Re-evaluates the boundary data at time `t`.
    pub fn update(&mut self, t: f64) {
        let nb = self.scalar_dofs.len();
        for k in 0..nb {
            let [gx, gy] = (self.fields[k])(self.points[k], t);
            self.values[k] = gx;
            self.values[nb + k] = gy;
        }
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Per velocity dof: whether it is constrained.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_scalar
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Overwrites the constrained entries of `u` with the data.
    pub fn impose(&self, u: &mut [f64]) {
        for (&d, &v) in self.dofs.iter().zip(&self.values) {
            u[d] = v;
        }
    }

    /// Vector of length `n` holding the data on constrained dofs, zero elsewhere.
    pub fn lifted(&self, n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n];
        self.impose(&mut g);
        g
    }
}

/// Symmetric elimination on a fixed pattern: constrained rows become
/// identity rows with right-hand side `g`, constrained columns are moved to
/// the right-hand side. `mask` and `g` have the system's dimension.
pub(crate) fn eliminate(a: &mut CsrMatrix, rhs: &mut [f64], mask: &[bool], g: &[f64]) {
    let n = a.nrows();
    debug_assert_eq!(mask.len(), n);
    let row_ptr = a.row_ptr().to_vec();
    let cols = a.col_idx().to_vec();
    let vals = a.values_mut();
    for i in 0..n {
        let range = row_ptr[i]..row_ptr[i + 1];
        if mask[i] {
            for k in range {
                vals[k] = if cols[k] == i { 1.0 } else { 0.0 };
            }
            rhs[i] = g[i];
        } else {
            for k in range {
                let j = cols[k];
                if mask[j] {
                    rhs[i] -= vals[k] * g[j];
                    vals[k] = 0.0;
                }
            }
        }
    }
}

/// Applies the constraints to a velocity system or to a larger system whose
/// leading block is the velocity (e.g. a saddle-point matrix). Constrained
/// diagonal entries must be present in the pattern.
pub fn apply_dirichlet(a: &mut CsrMatrix, rhs: &mut [f64], constraints: &DirichletConstraints) {
    let n = a.nrows();
    let mut mask = vec![false; n];
    mask[..constraints.n_velocity()].copy_from_slice(constraints.mask());
    let g = constraints.lifted(n);
    eliminate(a, rhs, &mask, &g);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_union, Axis, Rect, TagRule};
    use crate::stepper::{Scheme, StabilizationParams};

    fn channel() -> Discretization {
        let rules = [TagRule::new(Axis::X, 0.0, "inlet"), TagRule::new(Axis::X, 40.0, "outlet")];
        let rects = [
            Rect::new(0.0, 5.0, 0.0, 10.0),
            Rect::new(5.0, 6.0, 1.0, 10.0),
            Rect::new(6.0, 40.0, 0.0, 10.0),
        ];
        Discretization::new(generate_rect_union(&rects, 1.0, &rules, "wall").unwrap())
    }

    fn setup() -> ProblemSetup {
        ProblemSetup::new(1.0, 0.1, 1.0, Scheme::Modular, StabilizationParams::none())
    }

    #[test]
    fn missing_tag_is_reported() {
        let d = channel();
        let s = setup().with_dirichlet("inlet", |_, _| [0.0, 0.0]);
        match DirichletConstraints::new(&d, &s, 0.0) {
            Err(StepperError::MissingBoundaryData(tag)) => assert!(tag == "outlet" || tag == "wall"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn inlet_profile_value() {
        let d = channel();
        let profile = |p: Point, _t: f64| [p[1] * (10.0 - p[1]) / 25.0, 0.0];
        let s = setup()
            .with_dirichlet("inlet", profile)
            .with_dirichlet("outlet", profile)
            .with_dirichlet("wall", |_, _| [0.0, 0.0]);
        let c = DirichletConstraints::new(&d, &s, 3.7).unwrap();
        let i = (0..d.dofmap().n_scalar())
            .find(|&i| d.dofmap().coord(i) == [0.0, 5.0])
            .unwrap();
        let k = c.dofs().iter().position(|&x| x == i).unwrap();
        assert!((c.values()[k] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_constraints_give_zero_boundary_values() {
        let d = Discretization::new(crate::mesh::generate_unit_square(3));
        let s = setup().with_dirichlet_default(|_, _| [0.0, 0.0]);
        let c = DirichletConstraints::new(&d, &s, 0.0).unwrap();
        let mut m = d.ops().m.clone();
        let mut rhs = vec![1.0; d.n_velocity()];
        apply_dirichlet(&mut m, &mut rhs, &c);
        let x = crate::linalg::spd_factorize(&m).unwrap().solve(&rhs);
        for &i in c.dofs() {
            assert_eq!(x[i], 0.0);
        }
        assert!(m.max_asymmetry() == 0.0);
    }

    #[test]
    fn elimination_reproduces_full_solution() {
        // Solve M x = M u for a known u with boundary values imposed; the
        // constrained solve must return u exactly (up to round-off).
        let d = Discretization::new(crate::mesh::generate_unit_square(3));
        let s = setup().with_dirichlet_default(|p, _| [p[0] * p[1], 1.0 - p[0]]);
        let c = DirichletConstraints::new(&d, &s, 0.0).unwrap();
        let u = d.interpolate_velocity(|p| [p[0] * p[1], 1.0 - p[0]]).into_values();
        let mut a = d.ops().m.clone();
        let mut rhs = a.mul_vec(&u);
        apply_dirichlet(&mut a, &mut rhs, &c);
        let x = crate::linalg::spd_factorize(&a).unwrap().solve(&rhs);
        for (xi, ui) in x.iter().zip(&u) {
            assert!((xi - ui).abs() < 1e-12);
        }
    }
}
