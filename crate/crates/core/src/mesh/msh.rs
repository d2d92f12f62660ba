//! ASCII MSH 2.2 subset.
//!
//! Grammar (one token group per line, sections in any order, unknown
//! sections skipped):
//!
//! ```text
//! $MeshFormat
//! 2.2 0 8
//! $EndMeshFormat
//! $PhysicalNames            (optional)
//! <count>
//! <dim> <tag> "<name>"
//! $EndPhysicalNames
//! $Nodes
//! <count>
//! <id> <x> <y> <z>
//! $EndNodes
//! $Elements
//! <count>
//! <id> <type> <ntags> <physical> [<elementary> ...] <node ids...>
//! $EndElements
//! ```
//!
//! Element types: `15` (point, ignored), `1` (2-node boundary line, tagged by
//! its physical group), `2` (3-node triangle). Clockwise triangles are
//! reoriented. Lines without a `$PhysicalNames` entry are named `tag<N>`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{signed_area, BoundaryEdge, Mesh, MeshError, Point};

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let text = fs::read_to_string(path)?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, context: &str) -> Result<(usize, &'a str), MeshError> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Ok((i + 1, t));
            }
        }
        Err(MeshError::Parse {
            line: self.last + 1,
            reason: format!("unexpected end of file in {context}"),
        })
    }
}

fn perr(line: usize, reason: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    tok.ok_or_else(|| perr(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| perr(line, format!("invalid {what}")))
}

fn expect_end(lines: &mut Lines, section: &str) -> Result<(), MeshError> {
    let (ln, l) = lines.next_line(section)?;
    if l != format!("$End{section}") {
        return Err(perr(ln, format!("expected $End{section}, found {l:?}")));
    }
    Ok(())
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let mut names: BTreeMap<u32, String> = BTreeMap::new();
    let mut nodes: Vec<Point> = Vec::new();
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut raw_lines: Vec<(usize, [usize; 2], u32)> = Vec::new();
    let mut raw_tris: Vec<(usize, [usize; 3])> = Vec::new();
    let mut saw_format = false;
    let mut saw_nodes = false;
    let mut saw_elements = false;

    loop {
        let Some((i, l)) = lines.inner.next() else { break };
        lines.last = i + 1;
        let ln = i + 1;
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        match l {
            "$MeshFormat" => {
                let (ln, v) = lines.next_line("MeshFormat")?;
                let mut it = v.split_whitespace();
                let version: f64 = parse_num(it.next(), ln, "version")?;
                let file_type: u32 = parse_num(it.next(), ln, "file type")?;
                if !(2.0..3.0).contains(&version) || file_type != 0 {
                    return Err(perr(ln, "only ASCII version 2.x is supported"));
                }
                expect_end(&mut lines, "MeshFormat")?;
                saw_format = true;
            }
            "$PhysicalNames" => {
                let (ln, c) = lines.next_line("PhysicalNames")?;
                let count: usize = parse_num(Some(c), ln, "count")?;
                for _ in 0..count {
                    let (ln, e) = lines.next_line("PhysicalNames")?;
                    let mut it = e.splitn(3, char::is_whitespace);
                    let dim: u32 = parse_num(it.next(), ln, "dimension")?;
                    let tag: u32 = parse_num(it.next(), ln, "tag")?;
                    let name = it
                        .next()
                        .map(|s| s.trim().trim_matches('"').to_string())
                        .filter(|s| !s.is_empty())
                        .ok_or_else(|| perr(ln, "missing name"))?;
                    if dim == 1 {
                        names.insert(tag, name);
                    }
                }
                expect_end(&mut lines, "PhysicalNames")?;
            }
            "$Nodes" => {
                let (ln, c) = lines.next_line("Nodes")?;
                let count: usize = parse_num(Some(c), ln, "count")?;
                for _ in 0..count {
                    let (ln, e) = lines.next_line("Nodes")?;
                    let mut it = e.split_whitespace();
                    let id: usize = parse_num(it.next(), ln, "node id")?;
                    let x: f64 = parse_num(it.next(), ln, "x")?;
                    let y: f64 = parse_num(it.next(), ln, "y")?;
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(perr(ln, format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y]);
                }
                expect_end(&mut lines, "Nodes")?;
                saw_nodes = true;
            }
            "$Elements" => {
                let (ln, c) = lines.next_line("Elements")?;
                let count: usize = parse_num(Some(c), ln, "count")?;
                for _ in 0..count {
                    let (ln, e) = lines.next_line("Elements")?;
                    let toks: Vec<&str> = e.split_whitespace().collect();
                    let mut it = toks.iter().copied();
                    let _id: usize = parse_num(it.next(), ln, "element id")?;
                    let ty: u32 = parse_num(it.next(), ln, "element type")?;
                    let ntags: usize = parse_num(it.next(), ln, "tag count")?;
                    let mut etags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        etags.push(parse_num::<u32>(it.next(), ln, "element tag")?);
                    }
                    let rest: Vec<usize> = it
                        .map(|t| t.parse().map_err(|_| perr(ln, "invalid node id")))
                        .collect::<Result<_, _>>()?;
                    match (ty, rest.len()) {
                        (15, 1) => {}
                        (1, 2) => {
                            let tag = *etags.first().ok_or_else(|| perr(ln, "line without physical tag"))?;
                            raw_lines.push((ln, [rest[0], rest[1]], tag));
                        }
                        (2, 3) => raw_tris.push((ln, [rest[0], rest[1], rest[2]])),
                        (1 | 2 | 15, _) => return Err(perr(ln, "wrong number of element nodes")),
                        _ => return Err(perr(ln, format!("unsupported element type {ty}"))),
                    }
                }
                expect_end(&mut lines, "Elements")?;
                saw_elements = true;
            }
            s if s.starts_with("$End") => return Err(perr(ln, format!("unmatched {s}"))),
            s if s.starts_with('$') => {
                let end = format!("$End{}", &s[1..]);
                loop {
                    let (_, l) = lines.next_line(&s[1..])?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(perr(ln, format!("unexpected content {other:?}"))),
        }
    }
    if !saw_format || !saw_nodes || !saw_elements {
        return Err(perr(
            lines.last + 1,
            "missing one of the $MeshFormat, $Nodes or $Elements sections",
        ));
    }

    let lookup = |ln: usize, id: usize| {
        node_index
            .get(&id)
            .copied()
            .ok_or_else(|| perr(ln, format!("unknown node id {id}")))
    };
    let mut triangles = Vec::with_capacity(raw_tris.len());
    for (ln, t) in raw_tris {
        let mut tri = [lookup(ln, t[0])?, lookup(ln, t[1])?, lookup(ln, t[2])?];
        if signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    }
    let mut boundary_edges = Vec::with_capacity(raw_lines.len());
    for (ln, l, tag) in raw_lines {
        boundary_edges.push(BoundaryEdge {
            vertices: [lookup(ln, l[0])?, lookup(ln, l[1])?],
            tag,
        });
        names.entry(tag).or_insert_with(|| format!("tag{tag}"));
    }
    let used: std::collections::BTreeSet<u32> = boundary_edges.iter().map(|e| e.tag).collect();
    names.retain(|t, _| used.contains(t));
    Mesh::new(nodes, triangles, boundary_edges, names)
}

/// Serializes a mesh in the subset accepted by [`parse_mesh`]. Node and
/// element ids are one-based; coordinates carry 17 significant digits.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let _ = writeln!(s, "$PhysicalNames\n{}", mesh.tags().len());
    for (tag, name) in mesh.tags() {
        let _ = writeln!(s, "1 {tag} \"{name}\"");
    }
    s.push_str("$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:.16e} {:.16e} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n");
    let n_elem = mesh.boundary_edges().len() + mesh.n_triangles();
    let _ = writeln!(s, "$Elements\n{n_elem}");
    let mut id = 1;
    for e in mesh.boundary_edges() {
        let _ = writeln!(s, "{id} 1 2 {} {} {} {}", e.tag, e.tag, e.vertices[0] + 1, e.vertices[1] + 1);
        id += 1;
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{id} 2 2 0 1 {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

pub fn write_mesh_file(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_unit_square;

    const MINIMAL: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
1
1 7 \"wall\"
$EndPhysicalNames
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
4
1 1 2 7 1 1 2
2 1 2 7 1 2 3
3 1 2 7 1 3 1
4 2 2 0 1 1 2 3
$EndElements
";

    #[test]
    fn minimal_file() {
        let m = parse_mesh(MINIMAL).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles()), (3, 1));
        assert_eq!(m.tag_name(7), Some("wall"));
        assert_eq!(m.boundary_edges().len(), 3);
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let cw = MINIMAL.replace("4 2 2 0 1 1 2 3", "4 2 2 0 1 1 3 2");
        let m = parse_mesh(&cw).unwrap();
        assert_eq!(m.triangles()[0], [0, 1, 2]);
        assert!(m.triangle_area(0) > 0.0);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let cut: String = MINIMAL.lines().take(11).collect::<Vec<_>>().join("\n");
        match parse_mesh(&cut) {
            Err(MeshError::Parse { line, reason }) => {
                assert_eq!(line, 12);
                assert!(reason.contains("end of file"), "{reason}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let bad = MINIMAL.replace("2 1 0 0", "2 1 zero 0");
        match parse_mesh(&bad) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn over_shared_edge_is_topology_error() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n5\n1 0 0 0\n2 1 0 0\n3 0.5 1 0\n4 0.5 -1 0\n5 0.5 2 0\n$EndNodes\n$Elements\n3\n1 2 2 0 1 1 2 3\n2 2 2 0 1 2 1 4\n3 2 2 0 1 1 2 5\n$EndElements\n";
        assert!(matches!(parse_mesh(text), Err(MeshError::Topology(_))));
    }

    #[test]
    fn write_then_read_roundtrip() {
        let m = generate_unit_square(3);
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back, m);
    }
}
