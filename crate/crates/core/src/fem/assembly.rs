//! Element-by-element assembly of the velocity and pressure operators.
//!
//! Every velocity matrix is stored on one shared pattern coupling all
//! components of all dofs that share a triangle, so operators can be combined
//! value-wise without symbolic work. Assembly is serial and bit-reproducible.

use super::dofmap::DofMap;
use super::element::{Geometry, Tabulation};
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point};

/// Local vector dof `c * 6 + a` is component `c` of basis function `a`.
const NLOC: usize = 12;

/// Shared sparsity pattern of all velocity matrices.
#[derive(Debug, Clone)]
pub struct VelocityPattern {
    zeros: CsrMatrix,
    /// Per cell: CSR position of local entry `(r, s)` at `r * 12 + s`.
    cell_pos: Vec<[usize; NLOC * NLOC]>,
}

fn scalar_neighbours(dofmap: &DofMap) -> Vec<Vec<usize>> {
    let mut nb: Vec<Vec<usize>> = vec![Vec::new(); dofmap.n_scalar()];
    for t in 0..dofmap.n_cells() {
        let dofs = dofmap.cell_dofs(t);
        for &i in &dofs {
            nb[i].extend_from_slice(&dofs);
        }
    }
    for row in &mut nb {
        row.sort_unstable();
        row.dedup();
    }
    nb
}

fn global_vector_dofs(dofmap: &DofMap, t: usize) -> [usize; NLOC] {
    let ns = dofmap.n_scalar();
    let d = dofmap.cell_dofs(t);
    let mut g = [0; NLOC];
    for a in 0..6 {
        g[a] = d[a];
        g[6 + a] = ns + d[a];
    }
    g
}

impl VelocityPattern {
    pub fn new(dofmap: &DofMap) -> Self {
        let ns = dofmap.n_scalar();
        let nb = scalar_neighbours(dofmap);
        let n = 2 * ns;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for _c in 0..2 {
            for row in &nb {
                col_idx.extend_from_slice(row);
                col_idx.extend(row.iter().map(|&j| ns + j));
                row_ptr.push(col_idx.len());
            }
        }
        let nnz = col_idx.len();
        let zeros = CsrMatrix::from_raw(n, n, row_ptr, col_idx, vec![0.0; nnz]);
        let cell_pos = (0..dofmap.n_cells())
            .map(|t| {
                let g = global_vector_dofs(dofmap, t);
                let mut pos = [0usize; NLOC * NLOC];
                for r in 0..NLOC {
                    for s in 0..NLOC {
                        pos[r * NLOC + s] = zeros.find(g[r], g[s]).expect("pattern covers cell");
                    }
                }
                pos
            })
            .collect();
        Self { zeros, cell_pos }
    }

    /// A zero matrix on the shared pattern.
    pub fn zero_matrix(&self) -> CsrMatrix {
        self.zeros.clone()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.zeros
    }

    pub(crate) fn scatter(&self, out: &mut CsrMatrix, t: usize, local: &[[f64; NLOC]; NLOC]) {
        let pos = &self.cell_pos[t];
        let vals = out.values_mut();
        for r in 0..NLOC {
            for s in 0..NLOC {
                vals[pos[r * NLOC + s]] += local[r][s];
            }
        }
    }
}

/// Assembles a symmetric velocity operator from local contributions.
fn assemble_symmetric<F>(mesh: &Mesh, pattern: &VelocityPattern, order: usize, mut local: F) -> CsrMatrix
where
    F: FnMut(&Geometry, &Tabulation, &mut [[f64; NLOC]; NLOC]),
{
    let tab = Tabulation::new(order);
    let mut out = pattern.zero_matrix();
    let mut loc = [[0.0; NLOC]; NLOC];
    for t in 0..mesh.n_triangles() {
        let geo = Geometry::of(mesh, t);
        loc.iter_mut().for_each(|r| r.fill(0.0));
        local(&geo, &tab, &mut loc);
        // Mirror the upper triangle so both halves accumulate identical values.
        for r in 0..NLOC {
            for s in 0..r {
                loc[r][s] = loc[s][r];
            }
        }
        pattern.scatter(&mut out, t, &loc);
    }
    out
}

/// `M_ij = (φ_j, φ_i)` on the shared pattern.
pub fn assemble_mass_on(mesh: &Mesh, pattern: &VelocityPattern) -> CsrMatrix {
    assemble_symmetric(mesh, pattern, 4, |geo, tab, loc| {
        for q in 0..tab.len() {
            let w = geo.jac_weight(tab.rule.weights[q]);
            let v = &tab.values[q];
            for a in 0..6 {
                for b in 0..6 {
                    let m = w * v[a] * v[b];
                    loc[a][b] += m;
                    loc[6 + a][6 + b] += m;
                }
            }
        }
    })
}

/// `A_ij = (∇φ_j, ∇φ_i)` on the shared pattern.
pub fn assemble_stiffness_on(mesh: &Mesh, pattern: &VelocityPattern) -> CsrMatrix {
    assemble_symmetric(mesh, pattern, 4, |geo, tab, loc| {
        for q in 0..tab.len() {
            let w = geo.jac_weight(tab.rule.weights[q]);
            let g = geo.grads(&tab.dlambda[q]);
            for a in 0..6 {
                for b in 0..6 {
                    let k = w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    loc[a][b] += k;
                    loc[6 + a][6 + b] += k;
                }
            }
        }
    })
}

/// `G_ij = (∇·φ_j, ∇·φ_i)` on the shared pattern.
pub fn assemble_graddiv_on(mesh: &Mesh, pattern: &VelocityPattern) -> CsrMatrix {
    assemble_symmetric(mesh, pattern, 4, |geo, tab, loc| {
        for q in 0..tab.len() {
            let w = geo.jac_weight(tab.rule.weights[q]);
            let g = geo.grads(&tab.dlambda[q]);
            for c in 0..2 {
                for a in 0..6 {
                    for d in 0..2 {
                        for b in 0..6 {
                            loc[c * 6 + a][d * 6 + b] += w * g[a][c] * g[b][d];
                        }
                    }
                }
            }
        }
    })
}

/// `B_ij = (∇·φ_j, q_i)`: `Np × 2Ns`.
pub fn assemble_divergence_matrix(mesh: &Mesh, dofmap: &DofMap) -> CsrMatrix {
    let tab = Tabulation::new(4);
    let mut trip = Vec::with_capacity(mesh.n_triangles() * 3 * NLOC);
    for t in 0..mesh.n_triangles() {
        let geo = Geometry::of(mesh, t);
        let g_dofs = global_vector_dofs(dofmap, t);
        let verts = mesh.triangles()[t];
        let mut loc = [[0.0; NLOC]; 3];
        for q in 0..tab.len() {
            let w = geo.jac_weight(tab.rule.weights[q]);
            let l = tab.rule.points[q];
            let g = geo.grads(&tab.dlambda[q]);
            for (i, row) in loc.iter_mut().enumerate() {
                for c in 0..2 {
                    for b in 0..6 {
                        row[c * 6 + b] += w * l[i] * g[b][c];
                    }
                }
            }
        }
        for i in 0..3 {
            for s in 0..NLOC {
                trip.push((verts[i], g_dofs[s], loc[i][s]));
            }
        }
    }
    CsrMatrix::from_triplets(dofmap.n_pressure(), dofmap.n_velocity(), trip)
}

/// `∫ q_i` for every P1 pressure basis function (area/3 per incident triangle).
pub fn pressure_weights(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t) / 3.0;
        for &v in tri {
            w[v] += a;
        }
    }
    w
}

/// `(f, φ_i)` for a vector body force.
pub fn assemble_load(mesh: &Mesh, dofmap: &DofMap, f: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let tab = Tabulation::new(6);
    let ns = dofmap.n_scalar();
    let mut out = vec![0.0; 2 * ns];
    for t in 0..mesh.n_triangles() {
        let geo = Geometry::of(mesh, t);
        let dofs = dofmap.cell_dofs(t);
        for q in 0..tab.len() {
            let w = geo.jac_weight(tab.rule.weights[q]);
            let fx = f(geo.map(tab.rule.points[q]));
            for a in 0..6 {
                let v = w * tab.values[q][a];
                out[dofs[a]] += v * fx[0];
                out[ns + dofs[a]] += v * fx[1];
            }
        }
    }
    out
}

/// Repeated assembly of the skew-symmetric convection operator
/// `N(w) = ½(C − Cᵀ)`, `C_ij = (w·∇φ_j, φ_i)`, on the shared pattern.
#[derive(Debug, Clone)]
pub struct ConvectionAssembler {
    tab: Tabulation,
    /// Per cell: physical weight and basis gradients at each quadrature point.
    cells: Vec<CellData>,
    dofs: Vec<[usize; 6]>,
    ns: usize,
}

#[derive(Debug, Clone)]
struct CellData {
    weights: Vec<f64>,
    grads: Vec<[[f64; 2]; 6]>,
}

impl ConvectionAssembler {
    pub fn new(mesh: &Mesh, dofmap: &DofMap) -> Self {
        let tab = Tabulation::new(5);
        let cells = (0..mesh.n_triangles())
            .map(|t| {
                let geo = Geometry::of(mesh, t);
                CellData {
                    weights: tab.rule.weights.iter().map(|&w| geo.jac_weight(w)).collect(),
                    grads: tab.dlambda.iter().map(|d| geo.grads(d)).collect(),
                }
            })
            .collect();
        let dofs = (0..dofmap.n_cells()).map(|t| dofmap.cell_dofs(t)).collect();
        Self {
            tab,
            cells,
            dofs,
            ns: dofmap.n_scalar(),
        }
    }

    /// Overwrites `out` (which must carry the shared pattern) with `N(w)`.
    pub fn assemble_into(&self, pattern: &VelocityPattern, w: &[f64], out: &mut CsrMatrix) {
        assert_eq!(w.len(), 2 * self.ns, "convecting field length");
        out.values_mut().fill(0.0);
        let mut loc = [[0.0; NLOC]; NLOC];
        for (t, cell) in self.cells.iter().enumerate() {
            let d = &self.dofs[t];
            let wx: [f64; 6] = std::array::from_fn(|a| w[d[a]]);
            let wy: [f64; 6] = std::array::from_fn(|a| w[self.ns + d[a]]);
            let mut c = [[0.0; 6]; 6];
            for q in 0..self.tab.len() {
                let v = &self.tab.values[q];
                let g = &cell.grads[q];
                let (mut u0, mut u1) = (0.0, 0.0);
                for a in 0..6 {
                    u0 += wx[a] * v[a];
                    u1 += wy[a] * v[a];
                }
                let wq = cell.weights[q];
                for b in 0..6 {
                    let adv = wq * (u0 * g[b][0] + u1 * g[b][1]);
                    for a in 0..6 {
                        c[a][b] += adv * v[a];
                    }
                }
            }
            for a in 0..6 {
                for b in 0..6 {
                    let n = 0.5 * (c[a][b] - c[b][a]);
                    loc[a][b] = n;
                    loc[6 + a][6 + b] = n;
                }
            }
            pattern.scatter(out, t, &loc);
        }
    }

    pub fn assemble(&self, pattern: &VelocityPattern, w: &[f64]) -> CsrMatrix {
        let mut out = pattern.zero_matrix();
        self.assemble_into(pattern, w, &mut out);
        out
    }
}
