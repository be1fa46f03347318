//! Line-oriented mesh text format.
//!
//! ```text
//! # comment
//! nodes N
//! id x y            (N lines)
//! elements M
//! id n0 n1 n2       (M lines)
//! bedges K
//! elem localEdge TAG (K lines, TAG in EXT INT A B)
//! ```

use std::fmt::Write as _;

use super::{BoundaryEdge, BoundaryTag, Mesh, MeshError, Node};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            self.last = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            if !fields.is_empty() {
                return Some((idx + 1, fields));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), MeshError> {
        self.next_content().ok_or_else(|| MeshError::Parse {
            line: self.last + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn header(&mut self, keyword: &str) -> Result<usize, MeshError> {
        let (line, fields) = self.expect(&format!("`{keyword} <count>`"))?;
        match fields.as_slice() {
            [k, count] if *k == keyword => parse(count, line, "count"),
            _ => Err(MeshError::Parse {
                line,
                message: format!("expected `{keyword} <count>`, found `{}`", fields.join(" ")),
            }),
        }
    }
}

fn parse<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T, MeshError> {
    field.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("invalid {what} `{field}`"),
    })
}

fn arity(fields: &[&str], n: usize, line: usize) -> Result<(), MeshError> {
    if fields.len() == n {
        Ok(())
    } else {
        Err(MeshError::Parse {
            line,
            message: format!("expected {n} fields, found {}", fields.len()),
        })
    }
}

pub fn load_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let n_nodes = lines.header("nodes")?;
    let mut nodes: Vec<Option<Node>> = vec![None; n_nodes];
    for _ in 0..n_nodes {
        let (line, f) = lines.expect("a node line")?;
        arity(&f, 3, line)?;
        let id: usize = parse(f[0], line, "node id")?;
        let x: f64 = parse(f[1], line, "coordinate")?;
        let y: f64 = parse(f[2], line, "coordinate")?;
        let slot = nodes.get_mut(id).ok_or_else(|| MeshError::Parse {
            line,
            message: format!("node id {id} out of range 0..{n_nodes}"),
        })?;
        if slot.is_some() {
            return Err(MeshError::DuplicateNode(id));
        }
        *slot = Some(Node { x, y });
    }
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or(MeshError::MissingNode(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let n_elements = lines.header("elements")?;
    let mut elements: Vec<Option<[usize; 3]>> = vec![None; n_elements];
    for _ in 0..n_elements {
        let (line, f) = lines.expect("an element line")?;
        arity(&f, 4, line)?;
        let id: usize = parse(f[0], line, "element id")?;
        let tri = [
            parse(f[1], line, "node reference")?,
            parse(f[2], line, "node reference")?,
            parse(f[3], line, "node reference")?,
        ];
        let slot = elements.get_mut(id).ok_or_else(|| MeshError::Parse {
            line,
            message: format!("element id {id} out of range 0..{n_elements}"),
        })?;
        if slot.is_some() {
            return Err(MeshError::DuplicateElement(id));
        }
        *slot = Some(tri);
    }
    let elements = elements
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            e.ok_or(MeshError::Parse {
                line: 0,
                message: format!("element id {i} is missing"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n_edges = lines.header("bedges")?;
    let mut boundary = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (line, f) = lines.expect("a boundary edge line")?;
        arity(&f, 3, line)?;
        let element: usize = parse(f[0], line, "element reference")?;
        let local_edge: usize = parse(f[1], line, "local edge")?;
        let tag: BoundaryTag = f[2]
            .parse()
            .map_err(|message| MeshError::Parse { line, message })?;
        boundary.push(BoundaryEdge { element, local_edge, tag });
    }
    if let Some((line, _)) = lines.next_content() {
        return Err(MeshError::Parse {
            line,
            message: "trailing content after boundary edges".into(),
        });
    }

    Mesh::new(nodes, elements, boundary)
}

/// Serializes a mesh; coordinates use the shortest round-trip float form.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# frostsim mesh");
    let _ = writeln!(out, "nodes {}", mesh.node_count());
    for (i, n) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {:?} {:?}", n.x, n.y);
    }
    let _ = writeln!(out, "elements {}", mesh.element_count());
    for (i, t) in mesh.elements().iter().enumerate() {
        let _ = writeln!(out, "{i} {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "bedges {}", mesh.boundary_edges().len());
    for b in mesh.boundary_edges() {
        let _ = writeln!(out, "{} {} {}", b.element, b.local_edge, b.tag);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = "\
# unit right triangle
nodes 3
0 0 0
1 1 0
2 0 1   # apex
elements 1
0 0 1 2
bedges 3
0 0 EXT
0 1 INT
0 2 A
";

    #[test]
    fn loads_unit_triangle() {
        let mesh = load_mesh(UNIT).unwrap();
        assert_eq!(mesh.geometry()[0].area, 0.5);
        assert_eq!(mesh.boundary_edges()[1].tag, BoundaryTag::Int);
    }

    #[test]
    fn dangling_reference() {
        let text = UNIT.replace("0 0 1 2", "0 0 1 99");
        assert!(matches!(
            load_mesh(&text),
            Err(MeshError::DanglingReference { node: 99, count: 3, .. })
        ));
    }

    #[test]
    fn duplicate_node_id() {
        let text = UNIT.replace("1 1 0", "0 1 0");
        assert_eq!(load_mesh(&text).unwrap_err(), MeshError::DuplicateNode(0));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = UNIT.replace("1 1 0", "1 one 0");
        match load_mesh(&text).unwrap_err() {
            MeshError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = UNIT.replace("0 2 A", "0 2 SIDE");
        assert!(matches!(load_mesh(&text), Err(MeshError::Parse { line: 11, .. })));
    }

    #[test]
    fn untagged_edge_in_file() {
        let text = UNIT.replace("bedges 3", "bedges 2").replace("0 2 A\n", "");
        assert!(matches!(load_mesh(&text), Err(MeshError::UntaggedBoundaryEdge(_))));
    }

    #[test]
    fn clockwise_element_in_file_is_reoriented() {
        let text = UNIT.replace("0 0 1 2", "0 0 2 1");
        let mesh = load_mesh(&text).unwrap();
        assert_eq!(mesh.geometry()[0].area, 0.5);
    }
}
