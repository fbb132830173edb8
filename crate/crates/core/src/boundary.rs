//! Discrete boundary: per-cell cubic approximants of the exact boundary.
//!
//! Each cut cell carries one cubic curve joining its two perimeter
//! intersection points.  Two flavors are supported: interpolation through
//! four exact boundary points (C0 across cells) and Hermite interpolation
//! of endpoint positions and exact tangents (C1 across cells, since
//! neighboring segments share the endpoint tangent).  Boundary integrals
//! are evaluated on these curves with the frame (normal, tangent,
//! curvature) computed from the curve itself.

use std::collections::BTreeMap;

use crate::domain::{cross2, outward_normal, Domain, Point, Vec2};
use crate::error::GeometryError;
use crate::intersect::{intersect_cell_boundary, IsectKey};
use crate::mesh::ActiveMesh;
use crate::quadrature::gauss_for_degree;

/// Smoothness of the discrete boundary across segment joints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Interpolate four exact boundary points per segment.
    C0,
    /// Hermite-interpolate endpoint positions and exact tangents.
    C1,
}

impl std::str::FromStr for BoundaryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c0" => Ok(BoundaryMode::C0),
            "c1" => Ok(BoundaryMode::C1),
            other => Err(format!("unknown boundary mode '{other}' (expected c0 or c1)")),
        }
    }
}

/// Parametric cubic curve c(s) = a + b s + c s^2 + d s^3 on s in [0, 1].
#[derive(Debug, Clone)]
pub struct CubicCurve {
    a: Vec2,
    b: Vec2,
    c: Vec2,
    d: Vec2,
}

impl CubicCurve {
    /// Interpolate four points at s = 0, 1/3, 2/3, 1.
    pub fn from_points_4(p0: Point, p1: Point, p2: Point, p3: Point) -> CubicCurve {
        // Solve the 1D Vandermonde system once per component; the inverse
        // for nodes {0, 1/3, 2/3, 1} has small integer entries.
        let v0 = p0.coords;
        let v1 = p1.coords;
        let v2 = p2.coords;
        let v3 = p3.coords;
        let a = v0;
        let b = -5.5 * v0 + 9.0 * v1 - 4.5 * v2 + v3;
        let c = 9.0 * v0 - 22.5 * v1 + 18.0 * v2 - 4.5 * v3;
        let d = -4.5 * v0 + 13.5 * v1 - 13.5 * v2 + 4.5 * v3;
        CubicCurve { a, b, c, d }
    }

    /// Hermite cubic from endpoint positions and parametric velocities.
    pub fn from_hermite(p0: Point, m0: Vec2, p1: Point, m1: Vec2) -> CubicCurve {
        let delta = p1 - p0;
        CubicCurve {
            a: p0.coords,
            b: m0,
            c: 3.0 * delta - 2.0 * m0 - m1,
            d: -2.0 * delta + m0 + m1,
        }
    }

    /// Position at parameter `s`.
    pub fn eval(&self, s: f64) -> Point {
        Point::from(self.a + s * (self.b + s * (self.c + s * self.d)))
    }

    /// First parametric derivative at `s`.
    pub fn velocity(&self, s: f64) -> Vec2 {
        self.b + s * (2.0 * self.c + s * 3.0 * self.d)
    }

    /// Second parametric derivative at `s`.
    pub fn acceleration(&self, s: f64) -> Vec2 {
        2.0 * self.c + s * 6.0 * self.d
    }

    /// Split at s = 1/2 into two cubics each reparametrized to [0, 1].
    pub fn subdivide_half(&self) -> (CubicCurve, CubicCurve) {
        // Left: c(s/2); right: c(1/2 + s/2).  Polynomial composition.
        let left = CubicCurve {
            a: self.a,
            b: 0.5 * self.b,
            c: 0.25 * self.c,
            d: 0.125 * self.d,
        };
        let mid = self.eval(0.5).coords;
        let vel = self.velocity(0.5);
        let acc = self.acceleration(0.5);
        let right = CubicCurve {
            a: mid,
            b: 0.5 * vel,
            c: 0.125 * acc,
            d: 0.125 * self.d,
        };
        (left, right)
    }

    /// Unit tangent, outward normal, and curvature at `s`.
    ///
    /// The frame follows the curve's own geometry: counterclockwise travel
    /// puts the domain on the left, so the outward normal is the tangent
    /// rotated clockwise.
    pub fn frame(&self, s: f64) -> (Vec2, Vec2, f64) {
        let v = self.velocity(s);
        let speed = v.norm();
        let t = v / speed;
        let n = outward_normal(t);
        let kappa = cross2(v, self.acceleration(s)) / speed.powi(3);
        (t, n, kappa)
    }
}

/// One discrete-boundary segment: a cubic curve living on a host cell.
#[derive(Debug, Clone)]
pub struct BoundarySegment {
    /// Grid coordinates of the cell geometrically owning the segment.
    pub cell: (u32, u32),
    /// Active cell whose basis extension hosts this segment's integrals
    /// (differs from `cell` only for demoted slivers).
    pub host: u32,
    pub curve: CubicCurve,
    pub key_in: IsectKey,
    pub key_out: IsectKey,
    /// Exact boundary parameter at the entry point.
    pub s_in: f64,
    /// Exact counterclockwise parameter extent.
    pub s_delta: f64,
}

/// The discrete boundary of one resolution level.
#[derive(Debug)]
pub struct DiscreteBoundary {
    pub mode: BoundaryMode,
    pub segments: Vec<BoundarySegment>,
}

/// A quadrature point on the discrete boundary.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryQP {
    pub point: Point,
    /// Arc-length weight (Gauss weight times curve speed).
    pub weight: f64,
    pub normal: Vec2,
    pub tangent: Vec2,
    pub curvature: f64,
}

/// Build the discrete boundary of an active mesh.
///
/// Segments of demoted sliver cells are re-hosted on an active neighbor so
/// the boundary stays complete while the sliver's own basis is dropped.
///
/// # Errors
///
/// [`GeometryError::OrphanSliver`] when a demoted cell has no active
/// neighbor; [`GeometryError::OpenLoop`] when the segments of a closed
/// domain fail to chain into a single loop.
pub fn build_discrete_boundary(
    domain: &dyn Domain,
    mesh: &ActiveMesh,
    mode: BoundaryMode,
) -> Result<DiscreteBoundary, GeometryError> {
    let mut segments: Vec<BoundarySegment> = Vec::new();

    for (ai, cell) in mesh.cells.iter().enumerate() {
        if let Some(info) = &cell.cut {
            segments.push(make_segment(domain, info, ai as u32, mode));
        }
    }

    // Demoted slivers keep their piece of boundary, hosted next door.
    for &(ix, iy) in &mesh.demoted {
        let rect = mesh.cell_rect_at(ix, iy);
        let info = intersect_cell_boundary(domain, &rect, ix, iy)?;
        let host = find_active_neighbor(mesh, ix, iy)
            .ok_or(GeometryError::OrphanSliver { ix, iy })?;
        segments.push(make_segment(domain, &info, host, mode));
    }

    if domain.param_period().is_some() && !segments.is_empty() {
        check_closed_loop(&segments)?;
    }

    Ok(DiscreteBoundary { mode, segments })
}

/// Build one segment's cubic curve in the requested mode.
fn make_segment(domain: &dyn Domain, info: &crate::intersect::CutInfo, host: u32, mode: BoundaryMode) -> BoundarySegment {
    let p0 = info.p_in;
    let p3 = info.p_out;
    let curve = match mode {
        BoundaryMode::C0 => {
            // Project the chord's third points onto the exact boundary.
            let chord = p3 - p0;
            let q1 = domain.closest_point(Point::from(p0.coords + chord / 3.0));
            let q2 = domain.closest_point(Point::from(p0.coords + 2.0 * chord / 3.0));
            CubicCurve::from_points_4(p0, q1, q2, p3)
        }
        BoundaryMode::C1 => {
            // Endpoint tangents are exact, so adjacent segments share them.
            let scale = (p3 - p0).norm();
            let m0 = scale * domain.boundary_tangent(info.s_in);
            let m1 = scale * domain.boundary_tangent(info.s_in + info.s_delta);
            CubicCurve::from_hermite(p0, m0, p3, m1)
        }
    };
    BoundarySegment {
        cell: (info.ix, info.iy),
        host,
        curve,
        key_in: info.key_in,
        key_out: info.key_out,
        s_in: info.s_in,
        s_delta: info.s_delta,
    }
}

/// Nearest active cell to a demoted one, searched in a deterministic order
/// (edge neighbors first, then diagonals).
fn find_active_neighbor(mesh: &ActiveMesh, ix: u32, iy: u32) -> Option<u32> {
    const OFFSETS: [(i64, i64); 8] = [
        (-1, 0),
        (1, 0),
        (0, -1),
        (0, 1),
        (-1, -1),
        (1, -1),
        (-1, 1),
        (1, 1),
    ];
    for (dx, dy) in OFFSETS {
        let jx = ix as i64 + dx;
        let jy = iy as i64 + dy;
        if jx < 0 || jy < 0 {
            continue;
        }
        if let Some(a) = mesh.active_index(jx as u32, jy as u32) {
            return Some(a);
        }
    }
    None
}

/// Verify the segments chain into one closed loop via their point keys.
fn check_closed_loop(segments: &[BoundarySegment]) -> Result<(), GeometryError> {
    let by_entry: BTreeMap<IsectKey, usize> = segments
        .iter()
        .enumerate()
        .map(|(i, s)| (s.key_in, i))
        .collect();
    if by_entry.len() != segments.len() {
        // Two segments claim the same entry point: cannot be a single loop.
        return Err(GeometryError::OpenLoop { n_chained: 0, n_total: segments.len() });
    }
    let mut visited = 0usize;
    let mut current = 0usize;
    loop {
        visited += 1;
        let next = match by_entry.get(&segments[current].key_out) {
            Some(&n) => n,
            None => return Err(GeometryError::OpenLoop { n_chained: visited, n_total: segments.len() }),
        };
        if next == 0 {
            break;
        }
        if visited > segments.len() {
            return Err(GeometryError::OpenLoop { n_chained: visited, n_total: segments.len() });
        }
        current = next;
    }
    if visited != segments.len() {
        return Err(GeometryError::OpenLoop { n_chained: visited, n_total: segments.len() });
    }
    Ok(())
}

/// Quadrature on one boundary segment, exact to the given polynomial
/// degree in the curve parameter.
pub fn boundary_quadrature(segment: &BoundarySegment, degree: usize) -> Vec<BoundaryQP> {
    let rule = gauss_for_degree(degree);
    rule.iter()
        .map(|gp| {
            let (tangent, normal, curvature) = segment.curve.frame(gp.x);
            let speed = segment.curve.velocity(gp.x).norm();
            BoundaryQP {
                point: segment.curve.eval(gp.x),
                weight: gp.w * speed,
                normal,
                tangent,
                curvature,
            }
        })
        .collect()
}
