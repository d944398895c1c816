//! ASCII mesh exchange subset.
//!
//! Two sections are understood:
//!
//! ```text
//! $Nodes
//! <count>
//! <index> <x> <z>
//! $EndNodes
//! $Elements
//! <count>
//! <index> <type> <n_tags> <tags...> <node indices...>
//! $EndElements
//! ```
//!
//! Element type 1 is a 2-node boundary line whose first tag is the physical
//! boundary id (1=FreeSurface, 2=Bed, 3=FarField, 4=Body, 5=Symmetry);
//! type 2 is a 3-node triangle. Node indices are 1-based.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryFace, BoundaryTag, Mesh};
use crate::{Error, Result};

/// Parse a mesh from the exchange format text.
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let lines: Vec<&str> = text.lines().collect();
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut raw_lines: Vec<(usize, usize, usize, usize)> = Vec::new(); // (v0, v1, tag, src line)

    let parse_err = |line: usize, message: String| Error::MeshParse { line, message };

    let mut i = 0usize;
    while i < lines.len() {
        let line = lines[i].trim();
        match line {
            "$Nodes" => {
                let count_line = i + 1;
                let count: usize = lines
                    .get(count_line)
                    .ok_or_else(|| parse_err(count_line + 1, "missing node count".into()))?
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(count_line + 1, format!("bad node count: {e}")))?;
                for k in 0..count {
                    let ln = count_line + 1 + k;
                    let row = lines
                        .get(ln)
                        .ok_or_else(|| parse_err(ln + 1, "unexpected end of node block".into()))?;
                    let mut it = row.split_whitespace();
                    let idx: usize = it
                        .next()
                        .ok_or_else(|| parse_err(ln + 1, "empty node line".into()))?
                        .parse()
                        .map_err(|e| parse_err(ln + 1, format!("bad node index: {e}")))?;
                    let x: f64 = it
                        .next()
                        .ok_or_else(|| parse_err(ln + 1, "missing x coordinate".into()))?
                        .parse()
                        .map_err(|e| parse_err(ln + 1, format!("bad x coordinate: {e}")))?;
                    let z: f64 = it
                        .next()
                        .ok_or_else(|| parse_err(ln + 1, "missing z coordinate".into()))?
                        .parse()
                        .map_err(|e| parse_err(ln + 1, format!("bad z coordinate: {e}")))?;
                    if node_ids.insert(idx, nodes.len()).is_some() {
                        return Err(parse_err(ln + 1, format!("duplicate node index {idx}")));
                    }
                    nodes.push((x, z));
                }
                let end = count_line + 1 + count;
                if lines.get(end).map(|l| l.trim()) != Some("$EndNodes") {
                    return Err(parse_err(end + 1, "expected $EndNodes".into()));
                }
                i = end + 1;
            }
            "$Elements" => {
                let count_line = i + 1;
                let count: usize = lines
                    .get(count_line)
                    .ok_or_else(|| parse_err(count_line + 1, "missing element count".into()))?
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(count_line + 1, format!("bad element count: {e}")))?;
                for k in 0..count {
                    let ln = count_line + 1 + k;
                    let row = lines.get(ln).ok_or_else(|| {
                        parse_err(ln + 1, "unexpected end of element block".into())
                    })?;
                    let fields: Vec<usize> = row
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|e| parse_err(ln + 1, format!("bad integer `{t}`: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    if fields.len() < 3 {
                        return Err(parse_err(ln + 1, "truncated element line".into()));
                    }
                    let (etype, ntags) = (fields[1], fields[2]);
                    let tags = &fields[3..3 + ntags.min(fields.len().saturating_sub(3))];
                    if tags.len() != ntags {
                        return Err(parse_err(ln + 1, "fewer tags than declared".into()));
                    }
                    let conn = &fields[3 + ntags..];
                    let lookup = |id: usize| -> Result<usize> {
                        node_ids
                            .get(&id)
                            .copied()
                            .ok_or_else(|| parse_err(ln + 1, format!("unknown node index {id}")))
                    };
                    match etype {
                        1 => {
                            if conn.len() != 2 {
                                return Err(parse_err(ln + 1, "line element needs 2 nodes".into()));
                            }
                            let tag = *tags.first().ok_or_else(|| {
                                parse_err(ln + 1, "boundary line is missing its physical tag".into())
                            })?;
                            if BoundaryTag::from_physical_id(tag).is_none() {
                                return Err(parse_err(
                                    ln + 1,
                                    format!("unknown boundary tag {tag} (expected 1..=5)"),
                                ));
                            }
                            raw_lines.push((lookup(conn[0])?, lookup(conn[1])?, tag, ln + 1));
                        }
                        2 => {
                            if conn.len() != 3 {
                                return Err(parse_err(ln + 1, "triangle needs 3 nodes".into()));
                            }
                            triangles.push([lookup(conn[0])?, lookup(conn[1])?, lookup(conn[2])?]);
                        }
                        other => {
                            return Err(parse_err(ln + 1, format!("unsupported element type {other}")));
                        }
                    }
                }
                let end = count_line + 1 + count;
                if lines.get(end).map(|l| l.trim()) != Some("$EndElements") {
                    return Err(parse_err(end + 1, "expected $EndElements".into()));
                }
                i = end + 1;
            }
            "" => i += 1,
            other if other.starts_with('$') => {
                return Err(parse_err(i + 1, format!("unknown section {other}")));
            }
            _ => {
                return Err(parse_err(i + 1, format!("unexpected content `{line}`")));
            }
        }
    }

    if triangles.is_empty() {
        return Err(Error::MeshInvalid("mesh contains no triangles".into()));
    }

    // Normalize orientation to counter-clockwise.
    for t in triangles.iter_mut() {
        let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        let area2 = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
        if area2 < 0.0 {
            t.swap(1, 2);
        }
    }

    // Attach boundary lines to owning triangle edges.
    let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, t) in triangles.iter().enumerate() {
        for edge in 0..3 {
            let (a, b) = match edge {
                0 => (t[0], t[1]),
                1 => (t[1], t[2]),
                _ => (t[2], t[0]),
            };
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
            edge_owner.insert(key, (e, edge));
        }
    }
    let mut boundary_faces = Vec::new();
    for (v0, v1, tag, src) in raw_lines {
        let key = (v0.min(v1), v0.max(v1));
        match edge_count.get(&key) {
            Some(1) => {}
            Some(_) => {
                return Err(Error::MeshParse {
                    line: src,
                    message: format!("boundary line {v0}-{v1} lies on an interior edge"),
                });
            }
            None => {
                return Err(Error::MeshParse {
                    line: src,
                    message: format!("boundary line {v0}-{v1} matches no triangle edge"),
                });
            }
        }
        let (element, edge) = edge_owner[&key];
        boundary_faces.push(BoundaryFace {
            element,
            edge,
            tag: BoundaryTag::from_physical_id(tag).expect("validated above"),
        });
    }

    let depth = nodes.iter().map(|p| -p.1).fold(0.0f64, f64::max);
    let length = nodes.iter().map(|p| p.0).fold(0.0f64, f64::max);
    let mesh = Mesh {
        curved_order: None,
        curved: vec![None; triangles.len()],
        vertices: nodes,
        triangles,
        boundary_faces,
        depth,
        length,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Serialize a mesh in the exchange format. Curved data is not exported.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("$Nodes\n");
    let _ = writeln!(out, "{}", mesh.vertices.len());
    for (i, (x, z)) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i + 1, x, z);
    }
    out.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(out, "{}", mesh.boundary_faces.len() + mesh.triangles.len());
    let mut idx = 1usize;
    for bf in &mesh.boundary_faces {
        let (a, b) = mesh.edge_vertices(bf.element, bf.edge);
        let _ = writeln!(out, "{} 1 1 {} {} {}", idx, bf.tag.physical_id(), a + 1, b + 1);
        idx += 1;
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} 2 1 0 {} {} {}", idx, t[0] + 1, t[1] + 1, t[2] + 1);
        idx += 1;
    }
    out.push_str("$EndElements\n");
    out
}

/// Read a mesh file from disk.
pub fn import_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    read_mesh(&text)
}

/// Write a mesh file to disk.
pub fn export_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cylinder_domain;

    const TWO_TRI: &str = "\
$Nodes
4
1 0.0 0.0
2 1.0 0.0
3 1.0 1.0
4 0.0 1.0
$EndNodes
$Elements
6
1 1 1 2 1 2
2 1 1 3 2 3
3 1 1 1 3 4
4 1 1 5 4 1
5 2 1 0 1 2 3
6 2 1 0 1 3 4
$EndElements
";

    #[test]
    fn parses_two_triangle_square() {
        let m = read_mesh(TWO_TRI).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.boundary_faces.len(), 4);
        m.validate().unwrap();
    }

    #[test]
    fn repeated_boundary_face_is_rejected() {
        let text = TWO_TRI.replace("6\n1 1 1 2 1 2", "7\n0 1 1 2 1 2\n1 1 1 2 1 2");
        let err = read_mesh(&text).unwrap_err();
        assert!(matches!(err, Error::MeshInvalid(_)), "{err}");
    }

    #[test]
    fn unknown_tag_reports_line_number() {
        let text = TWO_TRI.replace("1 1 1 2 1 2", "1 1 1 9 1 2");
        match read_mesh(&text).unwrap_err() {
            Error::MeshParse { line, message } => {
                assert_eq!(line, 10);
                assert!(message.contains("unknown boundary tag"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_count_reports_line_number() {
        let text = TWO_TRI.replace("$Nodes\n4", "$Nodes\nfour");
        match read_mesh(&text).unwrap_err() {
            Error::MeshParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn cylinder_roundtrip_preserves_connectivity() {
        let m = generate_cylinder_domain(1.0, 6.283, 10.0, 5, 1.2, true).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert_eq!(m.triangles, back.triangles);
        assert_eq!(m.vertices.len(), back.vertices.len());
        let mut a = m.boundary_faces.clone();
        let mut b = back.boundary_faces.clone();
        let key = |bf: &BoundaryFace| (bf.element, bf.edge, bf.tag.physical_id());
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b);
    }
}
