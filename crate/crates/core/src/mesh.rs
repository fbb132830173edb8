//! Background grid, active mesh extraction, and degree-of-freedom layout.
//!
//! An axis-aligned grid of square cells covers a box around the physical
//! domain.  Cells meeting the domain (fully inside or cut by the boundary)
//! form the active mesh that carries the discretization; outside cells are
//! discarded.  Cut cells whose inside area is negligible are demoted to
//! outside so they cannot poison conditioning, with their sliver of
//! boundary re-hosted on an active neighbor.

use std::collections::BTreeMap;

use crate::domain::{Domain, Point, Rect};
use crate::error::GeometryError;
use crate::intersect::{classify_cell_detailed, intersect_cell_boundary, CellClass, CutInfo};

/// Cut cells with inside area below this fraction of the cell area are
/// treated as outside.
pub const SLIVER_AREA_FRACTION: f64 = 1e-12;

/// One active cell of the background grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub ix: u32,
    pub iy: u32,
    pub class: CellClass,
    /// True for cells whose closure lies strictly inside the domain; faces
    /// between two such cells need no stabilization.
    pub strict_inside: bool,
    /// Boundary data for cut cells.
    pub cut: Option<CutInfo>,
}

/// Orientation of an interior face (the axis its normal points along).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceAxis {
    /// Vertical face between horizontal neighbors.
    X,
    /// Horizontal face between vertical neighbors.
    Y,
}

/// A face shared by two active cells.
#[derive(Debug, Clone, Copy)]
pub struct Face {
    /// Active index of the left / bottom cell.
    pub a: u32,
    /// Active index of the right / top cell.
    pub b: u32,
    pub axis: FaceAxis,
}

/// The active part of the background grid.
#[derive(Debug)]
pub struct ActiveMesh {
    pub h: f64,
    pub origin: Point,
    pub nx: u32,
    pub ny: u32,
    pub cells: Vec<Cell>,
    /// Dense grid-to-active-index map, row-major (iy * nx + ix).
    grid_index: Vec<Option<u32>>,
    /// Faces between pairs of active cells.
    pub faces: Vec<Face>,
    /// Indices into `faces` needing ghost stabilization: at least one of the
    /// two cells is not strictly inside.
    pub stab_faces: Vec<u32>,
    /// Grid coordinates of cut cells demoted to outside as slivers.
    pub demoted: Vec<(u32, u32)>,
}

impl ActiveMesh {
    /// Physical coordinates of grid node (ix, iy).
    ///
    /// Every consumer builds coordinates through this function, so shared
    /// nodes are bitwise identical across cells.
    pub fn node_point(&self, ix: u32, iy: u32) -> Point {
        node_point(self.origin, self.h, ix, iy)
    }

    /// Rectangle of the grid cell (ix, iy).
    pub fn cell_rect_at(&self, ix: u32, iy: u32) -> Rect {
        Rect::new(self.node_point(ix, iy), self.node_point(ix + 1, iy + 1))
    }

    /// Rectangle of an active cell.
    pub fn cell_rect(&self, active_index: u32) -> Rect {
        let c = &self.cells[active_index as usize];
        self.cell_rect_at(c.ix, c.iy)
    }

    /// Active index of grid cell (ix, iy), if active.
    pub fn active_index(&self, ix: u32, iy: u32) -> Option<u32> {
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        self.grid_index[(iy * self.nx + ix) as usize]
    }

    /// Whether any active cell lies fully inside the domain.
    pub fn has_interior_cell(&self) -> bool {
        self.cells.iter().any(|c| c.class == CellClass::Inside)
    }

    /// A rectangular all-inside mesh, for tests and reference computations.
    ///
    /// With `mark_strict_inside` false every face is a stabilization face,
    /// which exercises the ghost-penalty machinery on uncut geometry.
    pub fn uniform_block(origin: Point, h: f64, nx: u32, ny: u32, mark_strict_inside: bool) -> ActiveMesh {
        let mut cells = Vec::with_capacity((nx * ny) as usize);
        let mut grid_index = vec![None; (nx * ny) as usize];
        for iy in 0..ny {
            for ix in 0..nx {
                grid_index[(iy * nx + ix) as usize] = Some(cells.len() as u32);
                cells.push(Cell {
                    ix,
                    iy,
                    class: CellClass::Inside,
                    strict_inside: mark_strict_inside,
                    cut: None,
                });
            }
        }
        let mut mesh = ActiveMesh {
            h,
            origin,
            nx,
            ny,
            cells,
            grid_index,
            faces: Vec::new(),
            stab_faces: Vec::new(),
            demoted: Vec::new(),
        };
        mesh.build_faces();
        mesh
    }

    /// Populate `faces` and `stab_faces` from the active cells.
    fn build_faces(&mut self) {
        self.faces.clear();
        self.stab_faces.clear();
        for (ai, cell) in self.cells.iter().enumerate() {
            // Right and top neighbors; iterating row-major makes this
            // enumeration deterministic and covers each face once.
            let neighbors = [
                (cell.ix + 1, cell.iy, FaceAxis::X),
                (cell.ix, cell.iy + 1, FaceAxis::Y),
            ];
            for (jx, jy, axis) in neighbors {
                if let Some(bi) = self.active_index(jx, jy) {
                    let face = Face { a: ai as u32, b: bi, axis };
                    let stab = !(cell.strict_inside && self.cells[bi as usize].strict_inside);
                    self.faces.push(face);
                    if stab {
                        self.stab_faces.push(self.faces.len() as u32 - 1);
                    }
                }
            }
        }
    }
}

/// Physical coordinates of grid node (ix, iy) on a grid with the given
/// origin and spacing.
pub fn node_point(origin: Point, h: f64, ix: u32, iy: u32) -> Point {
    Point::new(origin.x + ix as f64 * h, origin.y + iy as f64 * h)
}

/// Build the active mesh for a domain on a grid covering `bbox`.
///
/// # Arguments
///
/// * `domain` - Implicit description of the physical region.
/// * `h` - Grid spacing; the box sides must be integer multiples of it.
/// * `bbox` - Grid extent; must contain the domain.
///
/// # Errors
///
/// Propagates classification failures (ambiguous cuts, root-finder
/// breakdown) tagged with the offending cell.
pub fn build_active_mesh(domain: &dyn Domain, h: f64, bbox: &Rect) -> Result<ActiveMesh, GeometryError> {
    let nx = (bbox.width() / h).round() as u32;
    let ny = (bbox.height() / h).round() as u32;
    assert!(
        (nx as f64 * h - bbox.width()).abs() <= 1e-9 * bbox.width()
            && (ny as f64 * h - bbox.height()).abs() <= 1e-9 * bbox.height(),
        "grid spacing must tile the bounding box exactly"
    );
    let origin = bbox.min;

    let mut cells: Vec<Cell> = Vec::new();
    let mut grid_index = vec![None; (nx * ny) as usize];
    let mut demoted: Vec<(u32, u32)> = Vec::new();

    for iy in 0..ny {
        for ix in 0..nx {
            let rect = Rect::new(node_point(origin, h, ix, iy), node_point(origin, h, ix + 1, iy + 1));
            let class = classify_cell_detailed(domain, &rect)?;
            match class.class {
                CellClass::Outside => {}
                CellClass::Inside => {
                    grid_index[(iy * nx + ix) as usize] = Some(cells.len() as u32);
                    cells.push(Cell {
                        ix,
                        iy,
                        class: CellClass::Inside,
                        strict_inside: class.strict_inside,
                        cut: None,
                    });
                }
                CellClass::Cut => {
                    let info = intersect_cell_boundary(domain, &rect, ix, iy)?;
                    if info.area < SLIVER_AREA_FRACTION * h * h {
                        // Negligible inside area: the cell contributes
                        // nothing but conditioning trouble.
                        demoted.push((ix, iy));
                        continue;
                    }
                    grid_index[(iy * nx + ix) as usize] = Some(cells.len() as u32);
                    cells.push(Cell { ix, iy, class: CellClass::Cut, strict_inside: false, cut: Some(info) });
                }
            }
        }
    }

    let mut mesh = ActiveMesh {
        h,
        origin,
        nx,
        ny,
        cells,
        grid_index,
        faces: Vec::new(),
        stab_faces: Vec::new(),
        demoted,
    };
    mesh.build_faces();
    Ok(mesh)
}

/// Global degree-of-freedom layout over the active mesh.
///
/// Nodes of active cells are sorted by (iy, ix) and each carries four
/// degrees of freedom in the order v, v_x, v_y, v_xy.
#[derive(Debug)]
pub struct DofMap {
    pub n_dofs: usize,
    /// Grid coordinates (ix, iy) of each active node, in slot order.
    pub nodes: Vec<(u32, u32)>,
    node_slot: BTreeMap<(u32, u32), u32>,
    cell_dofs: Vec<[u32; 16]>,
}

impl DofMap {
    /// Global indices of a cell's 16 local degrees of freedom
    /// (corner-major: SW, SE, NW, NE; kinds v, v_x, v_y, v_xy).
    pub fn cell_dofs(&self, active_index: u32) -> &[u32; 16] {
        &self.cell_dofs[active_index as usize]
    }

    /// Slot of a grid node, if it belongs to any active cell.
    pub fn node_slot(&self, ix: u32, iy: u32) -> Option<u32> {
        self.node_slot.get(&(iy, ix)).copied()
    }
}

/// Number the degrees of freedom of an active mesh.
pub fn build_dof_map(mesh: &ActiveMesh) -> DofMap {
    // Collect active nodes keyed (iy, ix) so slot order is row-major.
    let mut node_slot: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for cell in &mesh.cells {
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            node_slot.entry((cell.iy + dy, cell.ix + dx)).or_insert(0);
        }
    }
    let mut nodes = Vec::with_capacity(node_slot.len());
    for (slot, ((iy, ix), v)) in node_slot.iter_mut().enumerate() {
        *v = slot as u32;
        nodes.push((*ix, *iy));
    }

    let cell_dofs = mesh
        .cells
        .iter()
        .map(|cell| {
            let mut dofs = [0u32; 16];
            for (c, (dx, dy)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                let slot = node_slot[&(cell.iy + dy, cell.ix + dx)];
                for kind in 0..4 {
                    dofs[4 * c + kind] = 4 * slot + kind as u32;
                }
            }
            dofs
        })
        .collect();

    DofMap { n_dofs: 4 * nodes.len(), nodes, node_slot, cell_dofs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Circle;

    fn unit_bbox() -> Rect {
        Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    fn disk() -> Circle {
        Circle::new(Point::new(0.5, 0.5), 0.5)
    }

    #[test]
    fn quarter_resolution_counts() {
        let mesh = build_active_mesh(&disk(), 0.25, &unit_bbox()).unwrap();
        assert_eq!(mesh.cells.len(), 16);
        let cut = mesh.cells.iter().filter(|c| c.class == CellClass::Cut).count();
        assert_eq!(cut, 12);
        let inside = mesh.cells.iter().filter(|c| c.class == CellClass::Inside).count();
        assert_eq!(inside, 4);
        let dofs = build_dof_map(&mesh);
        assert_eq!(dofs.n_dofs, 100); // 5 x 5 nodes, 4 dofs each
    }

    #[test]
    fn eighth_resolution_has_interior_ring() {
        let mesh = build_active_mesh(&disk(), 0.125, &unit_bbox()).unwrap();
        assert!(mesh.has_interior_cell());
        // Strict-inside cells exist and all their corners are inside.
        let strict: Vec<_> = mesh.cells.iter().filter(|c| c.strict_inside).collect();
        assert!(!strict.is_empty());
        for c in &strict {
            let rect = mesh.cell_rect_at(c.ix, c.iy);
            for corner in rect.corners_ccw() {
                assert!(disk().signed_distance(corner) < 0.0);
            }
        }
        // Every stabilization face touches at least one non-strict cell.
        for &fi in &mesh.stab_faces {
            let f = mesh.faces[fi as usize];
            let a = &mesh.cells[f.a as usize];
            let b = &mesh.cells[f.b as usize];
            assert!(!a.strict_inside || !b.strict_inside);
        }
        // Faces with one inactive side are excluded entirely.
        for f in &mesh.faces {
            let a = &mesh.cells[f.a as usize];
            let b = &mesh.cells[f.b as usize];
            let (dx, dy) = match f.axis {
                FaceAxis::X => (1, 0),
                FaceAxis::Y => (0, 1),
            };
            assert_eq!(a.ix + dx, b.ix);
            assert_eq!(a.iy + dy, b.iy);
        }
    }

    #[test]
    fn single_cell_dof_layout() {
        let mesh = ActiveMesh::uniform_block(Point::new(0.0, 0.0), 1.0, 1, 1, true);
        let dofs = build_dof_map(&mesh);
        assert_eq!(dofs.n_dofs, 16);
        assert_eq!(mesh.faces.len(), 0);
        // Two cells side by side share a node column: 6 nodes, 24 dofs.
        let mesh2 = ActiveMesh::uniform_block(Point::new(0.0, 0.0), 1.0, 2, 1, true);
        let dofs2 = build_dof_map(&mesh2);
        assert_eq!(dofs2.n_dofs, 24);
        assert_eq!(mesh2.faces.len(), 1);
        assert!(mesh2.stab_faces.is_empty());
        // The same block with strictness dropped stabilizes its face.
        let mesh3 = ActiveMesh::uniform_block(Point::new(0.0, 0.0), 1.0, 2, 1, false);
        assert_eq!(mesh3.stab_faces.len(), 1);
    }

    #[test]
    fn dof_order_is_row_major_with_four_per_node() {
        let mesh = ActiveMesh::uniform_block(Point::new(0.0, 0.0), 0.5, 2, 2, true);
        let dofs = build_dof_map(&mesh);
        // Nodes sorted by (iy, ix): (0,0),(1,0),(2,0),(0,1),...
        assert_eq!(dofs.nodes[0], (0, 0));
        assert_eq!(dofs.nodes[1], (1, 0));
        assert_eq!(dofs.nodes[3], (0, 1));
        // Cell 0 (SW cell): SW corner node is slot 0 with dofs 0..4.
        let d = dofs.cell_dofs(0);
        assert_eq!(&d[0..4], &[0, 1, 2, 3]);
        // SE corner of cell 0 is node (1,0) = slot 1.
        assert_eq!(&d[4..8], &[4, 5, 6, 7]);
        // NW corner is node (0,1) = slot 3.
        assert_eq!(&d[8..12], &[12, 13, 14, 15]);
    }

    #[test]
    fn demoted_slivers_are_recorded_not_active() {
        // A circle grazing the interior grid lines x, y = 0.25, 0.75 from
        // the inside: the poke depth is large enough that its perimeter
        // crossings escape every node-snap window, yet each poked area
        // (which scales like the depth to the power 3/2) sits far below the
        // sliver threshold.  Every poke straddles a node, so two cells
        // demote per side.
        let eps = 1e-10;
        let c = Circle::new(Point::new(0.5, 0.5), 0.25 + eps);
        let mesh = build_active_mesh(&c, 0.25, &unit_bbox()).unwrap();
        assert_eq!(mesh.demoted.len(), 8);
        assert!(mesh.demoted.contains(&(3, 2)));
        assert!(mesh.active_index(3, 2).is_none());
        // The four central cells stay active and cut.
        for (ix, iy) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let ci = mesh.active_index(ix, iy).unwrap();
            assert_eq!(mesh.cells[ci as usize].class, CellClass::Cut);
        }
    }
}
