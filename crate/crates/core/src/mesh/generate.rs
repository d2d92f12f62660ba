//! Structured generators for unit squares and unions of axis-aligned
//! rectangles. Every grid cell is split along its `(x0,y0)-(x1,y1)` diagonal.

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use super::{read_mesh_file, BoundaryEdge, Mesh, MeshError, Point};

/// Coordinate tolerance for grid snapping and boundary predicates.
const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    fn contains(&self, p: Point) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Tags a boundary edge whose two endpoints both satisfy `coord(axis) = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct TagRule {
    pub axis: Axis,
    pub value: f64,
    pub tag: String,
}

impl TagRule {
    pub fn new(axis: Axis, value: f64, tag: impl Into<String>) -> Self {
        Self {
            axis,
            value,
            tag: tag.into(),
        }
    }

    fn matches(&self, p: Point) -> bool {
        let c = match self.axis {
            Axis::X => p[0],
            Axis::Y => p[1],
        };
        (c - self.value).abs() <= SNAP_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    UnitSquare(usize),
    RectUnion { rects: Vec<Rect>, h: f64 },
    ExternalFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// First matching rule wins; unmatched boundary edges get `default_tag`.
    pub rules: Vec<TagRule>,
    pub default_tag: String,
}

impl DomainSpec {
    pub fn unit_square(m: usize) -> Self {
        Self {
            kind: DomainKind::UnitSquare(m),
            rules: Vec::new(),
            default_tag: "wall".into(),
        }
    }
}

pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh, MeshError> {
    match &spec.kind {
        DomainKind::UnitSquare(m) => {
            if *m == 0 {
                return Err(MeshError::NonConformingSpec("m must be at least 1".into()));
            }
            structured_union(
                &[Rect::new(0.0, 1.0, 0.0, 1.0)],
                1.0 / *m as f64,
                &spec.rules,
                &spec.default_tag,
            )
        }
        DomainKind::RectUnion { rects, h } => structured_union(rects, *h, &spec.rules, &spec.default_tag),
        DomainKind::ExternalFile(path) => read_mesh_file(path),
    }
}

/// `[0,1]²` with `m` cells per side; all sides tagged `"wall"`.
pub fn generate_unit_square(m: usize) -> Mesh {
    build_mesh(&DomainSpec::unit_square(m)).expect("unit square is always conforming")
}

pub fn generate_rect_union(
    rects: &[Rect],
    h: f64,
    rules: &[TagRule],
    default_tag: &str,
) -> Result<Mesh, MeshError> {
    structured_union(rects, h, rules, default_tag)
}

fn grid_index(value: f64, origin: f64, h: f64, what: &str) -> Result<usize, MeshError> {
    let k = (value - origin) / h;
    let r = k.round();
    if (k - r).abs() * h > SNAP_TOL || r < 0.0 {
        return Err(MeshError::NonConformingSpec(format!(
            "{what} = {value} is not on the grid of spacing {h}"
        )));
    }
    Ok(r as usize)
}

fn structured_union(
    rects: &[Rect],
    h: f64,
    rules: &[TagRule],
    default_tag: &str,
) -> Result<Mesh, MeshError> {
    if rects.is_empty() {
        return Err(MeshError::NonConformingSpec("no rectangles".into()));
    }
    if !(h > 0.0) {
        return Err(MeshError::NonConformingSpec(format!("spacing {h} must be positive")));
    }
    for r in rects {
        if !(r.x1 > r.x0 && r.y1 > r.y0) {
            return Err(MeshError::NonConformingSpec(format!("degenerate rectangle {r:?}")));
        }
    }
    for (i, a) in rects.iter().enumerate() {
        for b in &rects[i + 1..] {
            let w = a.x1.min(b.x1) - a.x0.max(b.x0);
            let hgt = a.y1.min(b.y1) - a.y0.max(b.y0);
            if w > SNAP_TOL && hgt > SNAP_TOL {
                return Err(MeshError::NonConformingSpec(format!(
                    "rectangles {a:?} and {b:?} overlap"
                )));
            }
        }
    }

    let xmin = rects.iter().map(|r| r.x0).fold(f64::INFINITY, f64::min);
    let xmax = rects.iter().map(|r| r.x1).fold(f64::NEG_INFINITY, f64::max);
    let ymin = rects.iter().map(|r| r.y0).fold(f64::INFINITY, f64::min);
    let ymax = rects.iter().map(|r| r.y1).fold(f64::NEG_INFINITY, f64::max);
    let nx = grid_index(xmax, xmin, h, "x")?;
    let ny = grid_index(ymax, ymin, h, "y")?;
    for r in rects {
        grid_index(r.x0, xmin, h, "x0")?;
        grid_index(r.x1, xmin, h, "x1")?;
        grid_index(r.y0, ymin, h, "y0")?;
        grid_index(r.y1, ymin, h, "y1")?;
    }

    let coord = |i: usize, j: usize| -> Point {
        [
            xmin + (xmax - xmin) * i as f64 / nx as f64,
            ymin + (ymax - ymin) * j as f64 / ny as f64,
        ]
    };

    let mut active = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let a = coord(i, j);
            let b = coord(i + 1, j + 1);
            let center = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            active[j * nx + i] = rects.iter().any(|r| r.contains(center));
        }
    }
    let n_active = active.iter().filter(|&&a| a).count();
    let expected_area: f64 = rects.iter().map(Rect::area).sum();
    let cell_area = (xmax - xmin) / nx as f64 * (ymax - ymin) / ny as f64;
    if ((n_active as f64) * cell_area - expected_area).abs() > 1e-9 * expected_area {
        return Err(MeshError::NonConformingSpec("rectangles do not tile the grid".into()));
    }
    check_connected(&active, nx, ny)?;

    // Row-major numbering of the vertices touched by active cells.
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    for j in 0..ny {
        for i in 0..nx {
            if active[j * nx + i] {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    used[(j + dj) * (nx + 1) + i + di] = true;
                }
            }
        }
    }
    let mut id = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let g = j * (nx + 1) + i;
            if used[g] {
                id[g] = vertices.len();
                vertices.push(coord(i, j));
            }
        }
    }

    let mut triangles = Vec::with_capacity(2 * n_active);
    for j in 0..ny {
        for i in 0..nx {
            if !active[j * nx + i] {
                continue;
            }
            let v00 = id[j * (nx + 1) + i];
            let v10 = id[j * (nx + 1) + i + 1];
            let v01 = id[(j + 1) * (nx + 1) + i];
            let v11 = id[(j + 1) * (nx + 1) + i + 1];
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    // Tag ids: rule tags in order of first appearance, then the default.
    let mut names: Vec<String> = Vec::new();
    for r in rules {
        if !names.contains(&r.tag) {
            names.push(r.tag.clone());
        }
    }
    if !names.iter().any(|n| n == default_tag) {
        names.push(default_tag.to_string());
    }
    let tag_of = |name: &str| names.iter().position(|n| n == name).unwrap() as u32 + 1;
    let tags: BTreeMap<u32, String> = names.iter().map(|n| (tag_of(n), n.clone())).collect();

    let boundary_edges = boundary_edges_of(&vertices, &triangles, |a, b| {
        rules
            .iter()
            .find(|r| r.matches(a) && r.matches(b))
            .map_or_else(|| tag_of(default_tag), |r| tag_of(&r.tag))
    });

    Mesh::new(vertices, triangles, boundary_edges, tags)
}

fn check_connected(active: &[bool], nx: usize, ny: usize) -> Result<(), MeshError> {
    let Some(start) = active.iter().position(|&a| a) else {
        return Err(MeshError::NonConformingSpec("empty domain".into()));
    };
    let mut seen = vec![false; active.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 0;
    while let Some(c) = queue.pop_front() {
        count += 1;
        let (i, j) = (c % nx, c / nx);
        let mut nbrs = Vec::with_capacity(4);
        if i > 0 {
            nbrs.push(c - 1);
        }
        if i + 1 < nx {
            nbrs.push(c + 1);
        }
        if j > 0 {
            nbrs.push(c - nx);
        }
        if j + 1 < ny {
            nbrs.push(c + nx);
        }
        for n in nbrs {
            if active[n] && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    if count != active.iter().filter(|&&a| a).count() {
        return Err(MeshError::NonConformingSpec("domain is not connected".into()));
    }
    Ok(())
}

/// Boundary edges (edges owned by exactly one triangle), oriented as in their
/// triangle, in order of first appearance.
pub(crate) fn boundary_edges_of(
    vertices: &[Point],
    triangles: &[[usize; 3]],
    mut tag: impl FnMut(Point, Point) -> u32,
) -> Vec<BoundaryEdge> {
    let mut count: std::collections::HashMap<(usize, usize), usize> = Default::default();
    for tri in triangles {
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let key = (tri[a].min(tri[b]), tri[a].max(tri[b]));
            *count.entry(key).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for tri in triangles {
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let (va, vb) = (tri[a], tri[b]);
            if count[&(va.min(vb), va.max(vb))] == 1 {
                out.push(BoundaryEdge {
                    vertices: [va, vb],
                    tag: tag(vertices[va], vertices[vb]),
                });
            }
        }
    }
    out
}
