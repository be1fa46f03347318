//! Structured generators. Every grid cell is split into four triangles
//! around an added centre node, which keeps the triangulation free of a
//! preferred diagonal direction.

use super::{BoundaryEdge, BoundaryTag, Mesh, MeshError, Node};

/// Number of uniform divisions of `length` with spacing at most `h`.
fn divisions(length: f64, h: f64) -> usize {
    ((length / h) - 1e-9).ceil().max(1.0) as usize
}

fn linspace(start: f64, end: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| {
        if i == n {
            end
        } else {
            start + (end - start) * i as f64 / n as f64
        }
    })
}

/// Grid of cells with a predicate deciding which cells exist and a
/// classifier assigning a tag to each exposed cell side.
struct CellGrid<'a> {
    xs: Vec<f64>,
    ys: Vec<f64>,
    has_cell: &'a dyn Fn(usize, usize) -> bool,
    side_tag: &'a dyn Fn(usize, usize, Side) -> BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl CellGrid<'_> {
    fn build(&self) -> Result<Mesh, MeshError> {
        let (nx, ny) = (self.xs.len() - 1, self.ys.len() - 1);
        let cell = |i: isize, j: isize| -> bool {
            i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && (self.has_cell)(i as usize, j as usize)
        };

        let mut nodes = Vec::new();
        let mut corner_id = vec![usize::MAX; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                let touches = [(0, 0), (-1, 0), (0, -1), (-1, -1)]
                    .iter()
                    .any(|&(di, dj)| cell(i as isize + di, j as isize + dj));
                if touches {
                    corner_id[j * (nx + 1) + i] = nodes.len();
                    nodes.push(Node { x: self.xs[i], y: self.ys[j] });
                }
            }
        }

        let mut elements = Vec::new();
        let mut boundary = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if !cell(i as isize, j as isize) {
                    continue;
                }
                let id = |ii: usize, jj: usize| corner_id[jj * (nx + 1) + ii];
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                let m = nodes.len();
                nodes.push(Node {
                    x: 0.5 * (self.xs[i] + self.xs[i + 1]),
                    y: 0.5 * (self.ys[j] + self.ys[j + 1]),
                });
                let sides = [
                    ([a, b, m], Side::Bottom, (0, -1)),
                    ([b, c, m], Side::Right, (1, 0)),
                    ([c, d, m], Side::Top, (0, 1)),
                    ([d, a, m], Side::Left, (-1, 0)),
                ];
                for (tri, side, (di, dj)) in sides {
                    if !cell(i as isize + di, j as isize + dj) {
                        boundary.push(BoundaryEdge {
                            element: elements.len(),
                            local_edge: 0,
                            tag: (self.side_tag)(i, j, side),
                        });
                    }
                    elements.push(tri);
                }
            }
        }
        Mesh::new(nodes, elements, boundary)
    }
}

/// L-shaped wall corner: the union of the strips `[0,outer] x [0,thickness]`
/// and `[0,thickness] x [0,outer]`.
///
/// The faces `x = 0` and `y = 0` are exterior (`EXT`), the re-entrant faces
/// `y = thickness` and `x = thickness` are interior (`INT`). The cut end of
/// the horizontal leg (`x = outer`) is the vertical roller face `A`, the cut
/// end of the vertical leg (`y = outer`) the horizontal roller face `B`.
pub fn generate_lshape(outer: f64, thickness: f64, h: f64) -> Result<Mesh, MeshError> {
    if !(outer.is_finite() && thickness.is_finite() && h.is_finite()) {
        return Err(MeshError::InvalidGeometry("dimensions must be finite".into()));
    }
    if !(thickness > 0.0 && outer > thickness) {
        return Err(MeshError::InvalidGeometry(format!(
            "need 0 < thickness < outer (thickness = {thickness}, outer = {outer})"
        )));
    }
    if !(h > 0.0 && h <= thickness) {
        return Err(MeshError::InvalidGeometry(format!(
            "need 0 < h <= thickness (h = {h}, thickness = {thickness})"
        )));
    }
    let nt = divisions(thickness, h);
    let nr = divisions(outer - thickness, h);
    let coords: Vec<f64> = linspace(0.0, thickness, nt)
        .chain(linspace(thickness, outer, nr).skip(1))
        .collect();
    let last = nt + nr - 1;

    let has_cell = |i: usize, j: usize| i < nt || j < nt;
    let side_tag = |i: usize, j: usize, side: Side| match side {
        Side::Bottom if j == 0 => BoundaryTag::Ext,
        Side::Left if i == 0 => BoundaryTag::Ext,
        Side::Right if i == last => BoundaryTag::A,
        Side::Top if j == last => BoundaryTag::B,
        _ => BoundaryTag::Int,
    };
    CellGrid {
        xs: coords.clone(),
        ys: coords,
        has_cell: &has_cell,
        side_tag: &side_tag,
    }
    .build()
}

/// Rectangle `[0,width] x [0,height]` with `nx` by `ny` cells; every
/// boundary edge is tagged `EXT`.
pub fn generate_rectangle(width: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh, MeshError> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) || nx == 0 || ny == 0 {
        return Err(MeshError::InvalidGeometry(format!(
            "rectangle needs positive size and cell counts (got {width} x {height}, {nx} x {ny})"
        )));
    }
    let has_cell = |_: usize, _: usize| true;
    let side_tag = |_: usize, _: usize, _: Side| BoundaryTag::Ext;
    CellGrid {
        xs: linspace(0.0, width, nx).collect(),
        ys: linspace(0.0, height, ny).collect(),
        has_cell: &has_cell,
        side_tag: &side_tag,
    }
    .build()
}
