//! Two-dimensional linear-triangle meshes with tagged boundary edges.
//!
//! A [`Mesh`] is immutable once built. Construction validates the
//! invariants every solver downstream relies on: dense node ids, positive
//! (counter-clockwise) element orientation, a conforming edge graph and a
//! boundary in which every topological boundary edge carries exactly one
//! [`BoundaryTag`].

mod generate;
mod io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_lshape, generate_rectangle};
pub use io::{load_mesh, write_mesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(usize),
    #[error("duplicate element id {0}")]
    DuplicateElement(usize),
    #[error("node ids are not dense: id {0} is missing")]
    MissingNode(usize),
    #[error("element {element} references node {node}, but the mesh has {count} nodes")]
    DanglingReference {
        element: usize,
        node: usize,
        count: usize,
    },
    #[error("node {0} has a non-finite coordinate")]
    NonFiniteCoordinate(usize),
    #[error("element {element} is degenerate (area {area:e})")]
    DegenerateElement { element: usize, area: f64 },
    #[error("edge {0:?} is shared by more than two elements")]
    NonConforming([usize; 2]),
    #[error("boundary edge {0:?} carries no tag")]
    UntaggedBoundaryEdge([usize; 2]),
    #[error("edge {local_edge} of element {element} is tagged but is not on the boundary")]
    NotOnBoundary { element: usize, local_edge: usize },
    #[error("boundary edge {0:?} is tagged more than once")]
    DuplicateTag([usize; 2]),
    #[error("local edge index {0} out of range 0..3")]
    LocalEdge(usize),
}

/// Boundary group of an edge: exterior surface, interior surface, and the
/// two roller supports (`A`: `u_x = 0`, `B`: `u_y = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    #[serde(rename = "EXT")]
    Ext,
    #[serde(rename = "INT")]
    Int,
    A,
    B,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [BoundaryTag::Ext, BoundaryTag::Int, BoundaryTag::A, BoundaryTag::B];
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::Ext => "EXT",
            BoundaryTag::Int => "INT",
            BoundaryTag::A => "A",
            BoundaryTag::B => "B",
        })
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EXT" => Ok(BoundaryTag::Ext),
            "INT" => Ok(BoundaryTag::Int),
            "A" => Ok(BoundaryTag::A),
            "B" => Ok(BoundaryTag::B),
            other => Err(format!("unknown boundary tag `{other}` (expected EXT, INT, A or B)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub element: usize,
    /// Edge `k` joins local nodes `k` and `(k+1) % 3`.
    pub local_edge: usize,
    pub tag: BoundaryTag,
}

/// Derived per-element quantities of a linear triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    /// Constant gradients of the three shape functions [1/m].
    pub gradients: [[f64; 2]; 3],
    pub area: f64,
    pub centroid: [f64; 2],
}

/// Shape-function gradients and area of a triangle given by its vertices.
/// The vertices must be counter-clockwise.
pub fn shape_gradients(vertices: [[f64; 2]; 3]) -> Result<ElementGeometry, MeshError> {
    let [[x1, y1], [x2, y2], [x3, y3]] = vertices;
    let twice_area = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    let scale = [(x2 - x1).hypot(y2 - y1), (x3 - x2).hypot(y3 - y2), (x1 - x3).hypot(y1 - y3)]
        .into_iter()
        .fold(0.0f64, f64::max);
    let area = 0.5 * twice_area;
    if !area.is_finite() || area <= 1e-12 * scale * scale {
        return Err(MeshError::DegenerateElement { element: 0, area });
    }
    let inv = 1.0 / twice_area;
    Ok(ElementGeometry {
        gradients: [
            [(y2 - y3) * inv, (x3 - x2) * inv],
            [(y3 - y1) * inv, (x1 - x3) * inv],
            [(y1 - y2) * inv, (x2 - x1) * inv],
        ],
        area,
        centroid: [(x1 + x2 + x3) / 3.0, (y1 + y2 + y3) / 3.0],
    })
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Node>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    geometry: Vec<ElementGeometry>,
    node_elements: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds and validates a mesh. Clockwise triangles are reoriented (and
    /// the local edge index of any boundary edge on them remapped).
    pub fn new(
        nodes: Vec<Node>,
        mut elements: Vec<[usize; 3]>,
        mut boundary: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        let count = nodes.len();
        for (i, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(MeshError::NonFiniteCoordinate(i));
            }
        }
        for (e, tri) in elements.iter().enumerate() {
            if let Some(&node) = tri.iter().find(|&&n| n >= count) {
                return Err(MeshError::DanglingReference { element: e, node, count });
            }
        }
        for be in &boundary {
            if be.local_edge > 2 {
                return Err(MeshError::LocalEdge(be.local_edge));
            }
            if be.element >= elements.len() {
                return Err(MeshError::InvalidGeometry(format!(
                    "boundary edge references element {} of {}",
                    be.element,
                    elements.len()
                )));
            }
        }

        let vertices = |tri: &[usize; 3]| tri.map(|n| [nodes[n].x, nodes[n].y]);
        let mut reoriented = vec![false; elements.len()];
        for (e, tri) in elements.iter_mut().enumerate() {
            let [[x1, y1], [x2, y2], [x3, y3]] = vertices(tri);
            if (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1) < 0.0 {
                tri.swap(1, 2);
                reoriented[e] = true;
            }
        }
        // swapping local nodes 1 and 2 maps edges 0 <-> 2, edge 1 stays
        for be in &mut boundary {
            if reoriented[be.element] {
                be.local_edge = 2 - be.local_edge;
            }
        }

        let geometry = elements
            .iter()
            .enumerate()
            .map(|(e, tri)| {
                shape_gradients(vertices(tri)).map_err(|err| match err {
                    MeshError::DegenerateElement { area, .. } => {
                        MeshError::DegenerateElement { element: e, area }
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut edge_use: HashMap<[usize; 2], u32> = HashMap::new();
        for tri in &elements {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                let uses = edge_use.entry(key).or_insert(0);
                *uses += 1;
                if *uses > 2 {
                    return Err(MeshError::NonConforming(key));
                }
            }
        }

        let mut tagged: HashMap<[usize; 2], BoundaryTag> = HashMap::new();
        for be in &boundary {
            let tri = elements[be.element];
            let key = edge_key(tri[be.local_edge], tri[(be.local_edge + 1) % 3]);
            if edge_use[&key] != 1 {
                return Err(MeshError::NotOnBoundary {
                    element: be.element,
                    local_edge: be.local_edge,
                });
            }
            if tagged.insert(key, be.tag).is_some() {
                return Err(MeshError::DuplicateTag(key));
            }
        }
        let mut untagged: Vec<[usize; 2]> = edge_use
            .iter()
            .filter(|(key, &uses)| uses == 1 && !tagged.contains_key(*key))
            .map(|(key, _)| *key)
            .collect();
        untagged.sort_unstable();
        if let Some(&key) = untagged.first() {
            return Err(MeshError::UntaggedBoundaryEdge(key));
        }

        let mut node_elements = vec![Vec::new(); count];
        for (e, tri) in elements.iter().enumerate() {
            for &n in tri {
                node_elements[n].push(e);
            }
        }
        if let Some(orphan) = node_elements.iter().position(Vec::is_empty) {
            return Err(MeshError::InvalidGeometry(format!(
                "node {orphan} belongs to no element"
            )));
        }

        Ok(Self {
            nodes,
            elements,
            boundary,
            geometry,
            node_elements,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Elements sharing each node.
    pub fn node_elements(&self, node: usize) -> &[usize] {
        &self.node_elements[node]
    }

    /// Global node ids of a boundary edge, in the element's orientation.
    pub fn edge_nodes(&self, edge: &BoundaryEdge) -> [usize; 2] {
        let tri = self.elements[edge.element];
        [tri[edge.local_edge], tri[(edge.local_edge + 1) % 3]]
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        let [a, b] = self.edge_nodes(edge);
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        (pb.x - pa.x).hypot(pb.y - pa.y)
    }

    /// Sorted, deduplicated nodes lying on edges with the given tag.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary
            .iter()
            .filter(|be| be.tag == tag)
            .flat_map(|be| self.edge_nodes(be))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Node closest to a point; ties go to the lowest id.
    pub fn nearest_node(&self, x: f64, y: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = (n.x - x).powi(2) + (n.y - y).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Element-centroid average of a nodal field.
    pub fn centroid_values(&self, nodal: &[f64]) -> Vec<f64> {
        self.elements
            .iter()
            .map(|tri| (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0)
            .collect()
    }

    /// Area-weighted average over the elements around a node.
    pub fn node_average(&self, node: usize, per_element: &[f64]) -> f64 {
        let (sum, area) = self.node_elements[node]
            .iter()
            .fold((0.0, 0.0), |(s, a), &e| {
                let ae = self.geometry[e].area;
                (s + per_element[e] * ae, a + ae)
            });
        sum / area
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> Mesh {
        Mesh::new(
            vec![Node { x: 0.0, y: 0.0 }, Node { x: 1.0, y: 0.0 }, Node { x: 0.0, y: 1.0 }],
            vec![[0, 1, 2]],
            (0..3)
                .map(|k| BoundaryEdge { element: 0, local_edge: k, tag: BoundaryTag::Ext })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unit_triangle_gradients_and_area() {
        let g = shape_gradients([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.gradients, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g.area, 0.5);
        assert_eq!(unit_triangle().total_area(), 0.5);
    }

    #[test]
    fn scaling_halves_gradients_and_quadruples_area() {
        let tri = [[0.1, 0.2], [0.9, 0.35], [0.4, 1.1]];
        let g1 = shape_gradients(tri).unwrap();
        let g2 = shape_gradients(tri.map(|[x, y]| [2.0 * x, 2.0 * y])).unwrap();
        assert!((g2.area - 4.0 * g1.area).abs() < 1e-14);
        for a in 0..3 {
            for d in 0..2 {
                assert!((g2.gradients[a][d] - 0.5 * g1.gradients[a][d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let err = shape_gradients([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateElement { .. }));
    }

    #[test]
    fn clockwise_triangle_is_reoriented_with_edge_remap() {
        let nodes = vec![Node { x: 0.0, y: 0.0 }, Node { x: 0.0, y: 1.0 }, Node { x: 1.0, y: 0.0 }];
        // clockwise; tag edge 0 (nodes 0-1, the x = 0 side) as A, the rest EXT
        let boundary = vec![
            BoundaryEdge { element: 0, local_edge: 0, tag: BoundaryTag::A },
            BoundaryEdge { element: 0, local_edge: 1, tag: BoundaryTag::Ext },
            BoundaryEdge { element: 0, local_edge: 2, tag: BoundaryTag::Ext },
        ];
        let mesh = Mesh::new(nodes, vec![[0, 1, 2]], boundary).unwrap();
        assert!(mesh.geometry()[0].area > 0.0);
        let a_edge = mesh.boundary_edges().iter().find(|b| b.tag == BoundaryTag::A).unwrap();
        let mut ends = mesh.edge_nodes(a_edge);
        ends.sort();
        assert_eq!(ends, [0, 1]);
    }

    #[test]
    fn untagged_boundary_edge_is_rejected() {
        let err = Mesh::new(
            vec![Node { x: 0.0, y: 0.0 }, Node { x: 1.0, y: 0.0 }, Node { x: 0.0, y: 1.0 }],
            vec![[0, 1, 2]],
            vec![BoundaryEdge { element: 0, local_edge: 0, tag: BoundaryTag::Ext }],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::UntaggedBoundaryEdge(_)));
    }

    #[test]
    fn interior_edge_cannot_be_tagged() {
        let mesh = generate_rectangle(1.0, 1.0, 1, 1).unwrap();
        let mut boundary = mesh.boundary_edges().to_vec();
        // every element of the 4-triangle cell has interior edges 1 and 2
        boundary.push(BoundaryEdge { element: 0, local_edge: 1, tag: BoundaryTag::Int });
        let err = Mesh::new(mesh.nodes().to_vec(), mesh.elements().to_vec(), boundary).unwrap_err();
        assert!(matches!(err, MeshError::NotOnBoundary { .. }));
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let err = Mesh::new(
            vec![Node { x: 0.0, y: 0.0 }, Node { x: 1.0, y: 0.0 }, Node { x: 0.0, y: 1.0 }],
            vec![[0, 1, 99]],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, MeshError::DanglingReference { element: 0, node: 99, count: 3 });
    }
}
