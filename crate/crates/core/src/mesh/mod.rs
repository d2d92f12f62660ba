//! Conforming triangular meshes with tagged boundary segments.

mod generate;
mod msh;

pub use generate::{build_mesh, generate_rect_union, generate_unit_square, Axis, DomainKind, DomainSpec, Rect, TagRule};
pub use msh::{parse_mesh, read_mesh_file, write_mesh, write_mesh_file};

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("non-conforming domain specification: {0}")]
    NonConformingSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: u32,
}

/// Immutable conforming triangulation.
///
/// Triangles are counterclockwise. Edges are numbered in order of first
/// appearance when walking triangles and their local edges `(0,1)`, `(1,2)`,
/// `(2,0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    tags: BTreeMap<u32, String>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    /// Per edge: boundary tag if the edge lies on the boundary.
    edge_tags: Vec<Option<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub h_max: f64,
    pub h_min: f64,
    pub area_total: f64,
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Validates and builds a mesh.
    ///
    /// Every triangle must have positive signed area, every edge must belong
    /// to one or two triangles, and the boundary edges (edges with exactly one
    /// triangle) must match `boundary_edges` one-to-one.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        tags: BTreeMap<u32, String>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::Topology(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(MeshError::Topology(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut owners: Vec<u8> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut te = [0usize; 3];
            for (l, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let (va, vb) = (tri[a], tri[b]);
                let key = (va.min(vb), va.max(vb));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    owners.push(0);
                    edges.len() - 1
                });
                owners[id] += 1;
                if owners[id] > 2 {
                    return Err(MeshError::Topology(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        key.0, key.1
                    )));
                }
                te[l] = id;
            }
            triangle_edges.push(te);
        }

        let mut edge_tags = vec![None; edges.len()];
        for be in &boundary_edges {
            let [a, b] = be.vertices;
            if a >= nv || b >= nv {
                return Err(MeshError::Topology("boundary edge references a missing vertex".into()));
            }
            let key = (a.min(b), a.max(b));
            let id = *edge_index.get(&key).ok_or_else(|| {
                MeshError::Topology(format!("boundary edge ({a}, {b}) is not a mesh edge"))
            })?;
            if owners[id] != 1 {
                return Err(MeshError::Topology(format!(
                    "boundary edge ({a}, {b}) belongs to {} triangles",
                    owners[id]
                )));
            }
            if edge_tags[id].is_some() {
                return Err(MeshError::Topology(format!("boundary edge ({a}, {b}) listed twice")));
            }
            edge_tags[id] = Some(be.tag);
        }
        if let Some(id) = (0..edges.len()).find(|&e| owners[e] == 1 && edge_tags[e].is_none()) {
            return Err(MeshError::Topology(format!(
                "boundary edge ({}, {}) has no tag",
                edges[id][0], edges[id][1]
            )));
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            tags,
            edges,
            triangle_edges,
            edge_tags,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn tags(&self) -> &BTreeMap<u32, String> {
        &self.tags
    }

    pub fn tag_name(&self, tag: u32) -> Option<&str> {
        self.tags.get(&tag).map(String::as_str)
    }

    pub fn tag_id(&self, name: &str) -> Option<u32> {
        self.tags.iter().find(|(_, n)| n.as_str() == name).map(|(&id, _)| id)
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn edge_tag(&self, edge: usize) -> Option<u32> {
        self.edge_tags[edge]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// `V − E + T`: 1 for a simply connected domain, 0 with one hole.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    /// Diameter of triangle `t` (its longest edge).
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn metrics(&self) -> MeshMetrics {
        let mut h_max = 0.0f64;
        let mut h_min = f64::INFINITY;
        let mut area_total = 0.0;
        for t in 0..self.n_triangles() {
            let d = self.triangle_diameter(t);
            h_max = h_max.max(d);
            h_min = h_min.min(d);
            area_total += self.triangle_area(t);
        }
        MeshMetrics {
            h_max,
            h_min,
            area_total,
            vertices: self.n_vertices(),
            edges: self.n_edges(),
            triangles: self.n_triangles(),
        }
    }

    /// Triangle containing `p` together with its barycentric coordinates.
    /// Points on shared edges resolve to the lowest triangle index.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        (0..self.n_triangles()).find_map(|t| {
            let [a, b, c] = self.triangle_points(t);
            let area = signed_area(a, b, c);
            let l0 = signed_area(p, b, c) / area;
            let l1 = signed_area(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            (l0 >= -TOL && l1 >= -TOL && l2 >= -TOL).then_some((t, [l0, l1, l2]))
        })
    }
}

/// Free-standing form of [`Mesh::metrics`].
pub fn mesh_metrics(mesh: &Mesh) -> MeshMetrics {
    mesh.metrics()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_triangle() -> Mesh {
        let tags = BTreeMap::from([(1, "wall".to_string())]);
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge { vertices: [0, 1], tag: 1 },
                BoundaryEdge { vertices: [1, 2], tag: 1 },
                BoundaryEdge { vertices: [2, 0], tag: 1 },
            ],
            tags,
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_counts() {
        let m = one_triangle();
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_triangles()), (3, 3, 1));
        assert_eq!(m.euler_characteristic(), 1);
        assert!((m.metrics().area_total - 0.5).abs() < 1e-15);
        assert!((m.metrics().h_max - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![],
            BTreeMap::new(),
        );
        assert!(matches!(err, Err(MeshError::Topology(_))));
    }

    #[test]
    fn untagged_boundary_is_rejected() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![BoundaryEdge { vertices: [0, 1], tag: 1 }],
            BTreeMap::new(),
        );
        assert!(matches!(err, Err(MeshError::Topology(_))));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        // Three triangles sharing edge (0, 1).
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
            vec![],
            BTreeMap::new(),
        );
        assert!(matches!(err, Err(MeshError::Topology(_))));
    }

    #[test]
    fn locate_returns_barycentrics() {
        let m = one_triangle();
        let (t, l) = m.locate([0.25, 0.25]).unwrap();
        assert_eq!(t, 0);
        assert!((l[0] - 0.5).abs() < 1e-15 && (l[1] - 0.25).abs() < 1e-15);
        assert!(m.locate([1.0, 1.0]).is_none());
    }
}
