//! End-to-end geometry pipeline for one background-grid resolution.

use crate::boundary::{build_discrete_boundary, BoundaryMode, DiscreteBoundary};
use crate::decomp::{decompose_cut_cell, CutCellDecomposition};
use crate::domain::{Domain, Rect};
use crate::error::GeometryError;
use crate::mesh::{build_active_mesh, build_dof_map, ActiveMesh, DofMap};

/// Everything geometric the assembly of one level needs.
#[derive(Debug)]
pub struct LevelGeometry {
    pub mesh: ActiveMesh,
    pub dofs: DofMap,
    pub boundary: DiscreteBoundary,
    /// Per active cell: the cut-cell triangulation (None for full cells).
    pub decomps: Vec<Option<CutCellDecomposition>>,
}

/// Build mesh, degrees of freedom, discrete boundary, and cut-cell
/// decompositions for one resolution.
///
/// # Errors
///
/// Any geometric failure: ambiguous cuts, open boundary loops, orphaned
/// slivers, degenerate decompositions, or a mesh without a single interior
/// cell (too coarse to carry the discretization).
pub fn build_level_geometry(
    domain: &dyn Domain,
    h: f64,
    bbox: &Rect,
    mode: BoundaryMode,
) -> Result<LevelGeometry, GeometryError> {
    let mesh = build_active_mesh(domain, h, bbox)?;
    if !mesh.has_interior_cell() {
        return Err(GeometryError::NoInteriorCell { h });
    }
    let dofs = build_dof_map(&mesh);
    let boundary = build_discrete_boundary(domain, &mesh, mode)?;

    let mut decomps: Vec<Option<CutCellDecomposition>> = vec![None; mesh.cells.len()];
    for seg in &boundary.segments {
        let host_cell = &mesh.cells[seg.host as usize];
        if (host_cell.ix, host_cell.iy) != seg.cell {
            // Re-hosted sliver: its inside area is below the demotion
            // threshold and is not integrated.
            continue;
        }
        let info = host_cell
            .cut
            .as_ref()
            .expect("a boundary segment's own cell must be a cut cell");
        let rect = mesh.cell_rect(seg.host);
        decomps[seg.host as usize] = Some(decompose_cut_cell(&rect, info, &seg.curve)?);
    }

    Ok(LevelGeometry { mesh, dofs, boundary, decomps })
}
