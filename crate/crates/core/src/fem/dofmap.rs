use crate::mesh::{Mesh, Point};

/// Degree-of-freedom numbering for the P2 velocity / P1 pressure pair.
///
/// Scalar P2 dofs are the vertices (`0..V`) followed by the edge midpoints
/// (`V..V+E`, in mesh edge order). Vector dofs are component-major: the x
/// component of scalar dof `i` is `i`, the y component is `Ns + i`.
/// Pressure dofs coincide with the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n_scalar: usize,
    n_pressure: usize,
    coords: Vec<Point>,
    /// Boundary tag of each scalar dof (lowest tag at corners).
    boundary_tag: Vec<Option<u32>>,
    cell_dofs: Vec<[usize; 6]>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let nv = mesh.n_vertices();
        let ne = mesh.n_edges();
        let mut coords: Vec<Point> = mesh.vertices().to_vec();
        coords.extend(mesh.edges().iter().map(|&[a, b]| {
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }));

        let mut boundary_tag: Vec<Option<u32>> = vec![None; nv + ne];
        let mut mark = |dof: usize, tag: u32| {
            let slot = &mut boundary_tag[dof];
            *slot = Some(slot.map_or(tag, |t| t.min(tag)));
        };
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            if let Some(tag) = mesh.edge_tag(e) {
                mark(a, tag);
                mark(b, tag);
                mark(nv + e, tag);
            }
        }

        let cell_dofs = mesh
            .triangles()
            .iter()
            .zip(mesh.triangle_edges())
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();

        Self {
            n_scalar: nv + ne,
            n_pressure: nv,
            coords,
            boundary_tag,
            cell_dofs,
        }
    }

    /// `Ns = V + E`.
    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    /// `2 Ns`.
    pub fn n_velocity(&self) -> usize {
        2 * self.n_scalar
    }

    /// `Np = V`.
    pub fn n_pressure(&self) -> usize {
        self.n_pressure
    }

    /// Coordinates of scalar dof `i`.
    pub fn coord(&self, i: usize) -> Point {
        self.coords[i]
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn boundary_tag(&self, i: usize) -> Option<u32> {
        self.boundary_tag[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary_tag[i].is_some()
    }

    /// Scalar dofs lying on the boundary, ascending.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        (0..self.n_scalar).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Local-to-global scalar dofs of triangle `t`: three vertices, then the
    /// midpoints of local edges `(0,1)`, `(1,2)`, `(2,0)`.
    pub fn cell_dofs(&self, t: usize) -> [usize; 6] {
        self.cell_dofs[t]
    }

    pub fn n_cells(&self) -> usize {
        self.cell_dofs.len()
    }
}

pub fn build_dofmap(mesh: &Mesh) -> DofMap {
    DofMap::new(mesh)
}
