//! Cell classification and boundary-perimeter intersection.
//!
//! Cells of the background grid are classified against the implicit domain
//! by corner signs plus root detection on the cell edges (a curved boundary
//! can cross a single edge twice).  For cut cells the two perimeter
//! intersection points are located by safeguarded bisection to machine
//! accuracy, oriented counterclockwise along the boundary, and combined
//! with the interior cell corners into the data every downstream consumer
//! (discrete boundary, decomposition, quadrature) works from.

use crate::domain::{cross2, Domain, Point, Rect};
use crate::error::GeometryError;
use crate::quadrature::gauss_legendre_01;

/// Absolute tolerance deciding whether a point sits on the boundary.
pub const ON_BOUNDARY_TOL: f64 = 1e-12;

/// Edge-root parameters this close to an endpoint snap onto the grid node.
const SNAP_TAU: f64 = 1e-10;

/// Number of uniform probes per edge when hunting for sign changes.
const EDGE_SAMPLES: usize = 16;

/// Classification of a background cell against the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Inside,
    Cut,
    Outside,
}

/// Classification plus the strict-interior flag used for stabilization sets.
#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub class: CellClass,
    /// All corners strictly inside and no edge roots: the cell belongs to
    /// the fully interior set whose faces need no stabilization.
    pub strict_inside: bool,
}

/// Identity of an intersection point, shared exactly between the two cells
/// adjacent to the grid edge carrying it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IsectKey {
    /// `k`-th root on the horizontal grid edge from node (ix, iy) to (ix+1, iy).
    HEdge { ix: u32, iy: u32, k: u8 },
    /// `k`-th root on the vertical grid edge from node (ix, iy) to (ix, iy+1).
    VEdge { ix: u32, iy: u32, k: u8 },
    /// A grid node the boundary passes through.
    Node { ix: u32, iy: u32 },
}

/// Everything known about how the boundary crosses one cut cell.
#[derive(Debug, Clone)]
pub struct CutInfo {
    pub ix: u32,
    pub iy: u32,
    /// Point where the counterclockwise boundary enters the cell.
    pub p_in: Point,
    /// Point where it leaves.
    pub p_out: Point,
    pub key_in: IsectKey,
    pub key_out: IsectKey,
    /// Boundary parameter at `p_in`.
    pub s_in: f64,
    /// Counterclockwise parameter length of the arc inside the cell.
    pub s_delta: f64,
    /// Cell corners strictly inside the domain, ordered counterclockwise
    /// along the perimeter starting after `p_out`.
    pub inside_corners: Vec<Point>,
    /// Area of (cell intersect domain), computed with the exact arc.
    pub area: f64,
}

/// One root on a canonical grid edge.
#[derive(Debug, Clone, Copy)]
struct EdgeRoot {
    tau: f64,
    /// Some(0) / Some(1) when the root snapped onto the edge start / end node.
    snapped: Option<u8>,
}

/// Roots of the signed distance along the canonical edge `a -> b`.
///
/// `h` is the edge length (grid spacing).  The signed distance is assumed
/// 1-Lipschitz along the edge, which certifies intervals without roots and
/// makes plain bisection converge to any requested residual.
fn edge_roots(domain: &dyn Domain, a: Point, b: Point, h: f64) -> Result<Vec<EdgeRoot>, GeometryError> {
    let g = |tau: f64| domain.signed_distance(Point::new(a.x + tau * (b.x - a.x), a.y + tau * (b.y - a.y)));
    let target = 1e-13 * h;

    let mut samples = [0.0f64; EDGE_SAMPLES + 1];
    for (k, s) in samples.iter_mut().enumerate() {
        *s = g(k as f64 / EDGE_SAMPLES as f64);
    }

    let mut roots: Vec<f64> = Vec::new();

    // Endpoint contacts.
    if samples[0].abs() <= ON_BOUNDARY_TOL {
        roots.push(0.0);
    }
    if samples[EDGE_SAMPLES].abs() <= ON_BOUNDARY_TOL {
        roots.push(1.0);
    }

    let mut brackets: Vec<(f64, f64)> = Vec::new();
    for k in 0..EDGE_SAMPLES {
        let (ga, gb) = (samples[k], samples[k + 1]);
        if ga.abs() <= ON_BOUNDARY_TOL || gb.abs() <= ON_BOUNDARY_TOL {
            // Interior sample sitting on the boundary: take it as a root.
            if ga.abs() <= ON_BOUNDARY_TOL && k > 0 {
                roots.push(k as f64 / EDGE_SAMPLES as f64);
            }
            continue;
        }
        if ga.signum() != gb.signum() {
            brackets.push((k as f64 / EDGE_SAMPLES as f64, (k + 1) as f64 / EDGE_SAMPLES as f64));
        }
    }

    // A dip through zero between two same-sign samples can only hide where
    // some sample is already closer to the boundary than the sampling can
    // exclude (Lipschitz bound: half the sample spacing).
    let spacing = h / EDGE_SAMPLES as f64;
    let min_abs = samples.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
    if brackets.is_empty() && roots.is_empty() && min_abs <= 0.75 * spacing {
        let k_min = (0..=EDGE_SAMPLES)
            .min_by(|&i, &j| samples[i].abs().partial_cmp(&samples[j].abs()).unwrap())
            .unwrap();
        let sign = samples[k_min].signum();
        let lo = ((k_min as f64 - 1.5) / EDGE_SAMPLES as f64).max(0.0);
        let hi = ((k_min as f64 + 1.5) / EDGE_SAMPLES as f64).min(1.0);
        // Golden-section search for the extremum of sign * g.
        let phi = 0.5 * (3.0 - 5.0f64.sqrt());
        let (mut x0, mut x3) = (lo, hi);
        let mut x1 = x0 + phi * (x3 - x0);
        let mut x2 = x3 - phi * (x3 - x0);
        let (mut f1, mut f2) = (sign * g(x1), sign * g(x2));
        for _ in 0..80 {
            if f1 < f2 {
                x3 = x2;
                x2 = x1;
                f2 = f1;
                x1 = x0 + phi * (x3 - x0);
                f1 = sign * g(x1);
            } else {
                x0 = x1;
                x1 = x2;
                f1 = f2;
                x2 = x3 - phi * (x3 - x0);
                f2 = sign * g(x2);
            }
        }
        let x_star = if f1 < f2 { x1 } else { x2 };
        let g_star = g(x_star);
        if g_star.signum() != sign && g_star.abs() > ON_BOUNDARY_TOL {
            // The edge dips through the boundary: two crossings.
            brackets.push((lo, x_star));
            brackets.push((x_star, hi));
        }
    }

    for (mut lo, mut hi) in brackets {
        let mut glo = g(lo);
        if glo.signum() == g(hi).signum() {
            continue; // Bracket vanished after endpoint snapping; ignore.
        }
        let mut tau = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..120 {
            tau = 0.5 * (lo + hi);
            let gm = g(tau);
            if gm.abs() <= target {
                converged = true;
                break;
            }
            if gm.signum() == glo.signum() {
                lo = tau;
                glo = gm;
            } else {
                hi = tau;
            }
            if hi - lo < 1e-17 {
                converged = g(tau).abs() <= 10.0 * target;
                break;
            }
        }
        if !converged {
            return Err(GeometryError::RootNoConvergence { residual: g(tau).abs(), iters: 120 });
        }
        roots.push(tau);
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Snap near-endpoint roots to the nodes, then drop interior duplicates:
    // a same-edge pair closer than the snap window is a tangential graze of
    // negligible depth and does not count as a crossing.
    let mut out: Vec<EdgeRoot> = Vec::new();
    let mut skip_next = false;
    for (i, &tau) in roots.iter().enumerate() {
        if skip_next {
            skip_next = false;
            continue;
        }
        if i + 1 < roots.len() && roots[i + 1] - tau < SNAP_TAU {
            let near_start = tau < SNAP_TAU;
            let near_end = roots[i + 1] > 1.0 - SNAP_TAU;
            if near_start || near_end {
                // Duplicate detections of a node contact collapse onto it.
                out.push(EdgeRoot { tau: if near_start { 0.0 } else { 1.0 }, snapped: Some(if near_start { 0 } else { 1 }) });
            }
            skip_next = true;
            continue;
        }
        if tau < SNAP_TAU {
            out.push(EdgeRoot { tau: 0.0, snapped: Some(0) });
        } else if tau > 1.0 - SNAP_TAU {
            out.push(EdgeRoot { tau: 1.0, snapped: Some(1) });
        } else {
            out.push(EdgeRoot { tau, snapped: None });
        }
    }
    out.dedup_by(|a, b| (a.tau - b.tau).abs() < SNAP_TAU);
    Ok(out)
}

/// Canonical edges of cell (ix, iy): bottom, right, top, left.
///
/// Each edge is reported in its canonical grid orientation (left to right
/// for horizontal, bottom to top for vertical) so that the two cells
/// sharing an edge compute bitwise identical roots.
fn cell_edges(cell: &Rect) -> [(Point, Point); 4] {
    let [sw, se, ne, nw] = cell.corners_ccw();
    [(sw, se), (se, ne), (nw, ne), (sw, nw)]
}

/// Roots on all four edges of a cell, in canonical edge parametrization.
fn all_edge_roots(domain: &dyn Domain, cell: &Rect) -> Result<[Vec<EdgeRoot>; 4], GeometryError> {
    let h = cell.width();
    let edges = cell_edges(cell);
    Ok([
        edge_roots(domain, edges[0].0, edges[0].1, h)?,
        edge_roots(domain, edges[1].0, edges[1].1, h)?,
        edge_roots(domain, edges[2].0, edges[2].1, h)?,
        edge_roots(domain, edges[3].0, edges[3].1, h)?,
    ])
}

/// A deduplicated intersection point on the cell perimeter.
#[derive(Debug, Clone, Copy)]
struct PerimPoint {
    point: Point,
    /// Perimeter coordinate in [0, 4): edge index plus position, walking
    /// counterclockwise from the SW corner.
    perim: f64,
    /// Local identity; turned into an [`IsectKey`] once grid indices are known.
    edge: usize,
    root_index: usize,
    snapped_node: Option<usize>, // corner index 0..4 (SW, SE, NE, NW)
}

/// Collect the distinct perimeter intersection points of a cell.
fn perimeter_points(cell: &Rect, roots: &[Vec<EdgeRoot>; 4]) -> Vec<PerimPoint> {
    let edges = cell_edges(cell);
    // Corner index (in CCW order SW, SE, NE, NW) for (edge, end-of-edge-flag).
    const CORNER_OF: [[usize; 2]; 4] = [[0, 1], [1, 2], [3, 2], [0, 3]];
    // Perimeter coordinate: edges 0,1 run with their canonical direction,
    // edges 2,3 against it.
    let perim_of = |edge: usize, tau: f64| -> f64 {
        match edge {
            0 => tau,
            1 => 1.0 + tau,
            2 => 2.0 + (1.0 - tau),
            _ => 3.0 + (1.0 - tau),
        }
    };

    let mut pts: Vec<PerimPoint> = Vec::new();
    for edge in 0..4 {
        for (k, root) in roots[edge].iter().enumerate() {
            let (a, b) = edges[edge];
            let (point, snapped_node) = match root.snapped {
                Some(0) => (a, Some(CORNER_OF[edge][0])),
                Some(_) => (b, Some(CORNER_OF[edge][1])),
                None => (
                    Point::new(a.x + root.tau * (b.x - a.x), a.y + root.tau * (b.y - a.y)),
                    None,
                ),
            };
            // A node contact is reported by both touching edges; keep one.
            if let Some(c) = snapped_node {
                if pts.iter().any(|p| p.snapped_node == Some(c)) {
                    continue;
                }
                pts.push(PerimPoint {
                    point,
                    perim: c as f64,
                    edge,
                    root_index: k,
                    snapped_node,
                });
            } else {
                pts.push(PerimPoint { point, perim: perim_of(edge, root.tau), edge, root_index: k, snapped_node });
            }
        }
    }
    pts
}

/// Classify a cell against the domain.
///
/// Corner signs decide the easy cases; edge roots catch boundary crossings
/// between corners of equal sign, and a coarse interior sample catches a
/// boundary lying entirely inside the cell (a cell covering the whole
/// domain is CUT even though all its corners are outside).
pub fn classify_cell(domain: &dyn Domain, cell: &Rect) -> Result<CellClass, GeometryError> {
    Ok(classify_cell_detailed(domain, cell)?.class)
}

/// Classification plus strict-interior flag.
pub fn classify_cell_detailed(domain: &dyn Domain, cell: &Rect) -> Result<Classification, GeometryError> {
    let corners = cell.corners_ccw();
    let d: Vec<f64> = corners.iter().map(|&c| domain.signed_distance(c)).collect();
    let roots = all_edge_roots(domain, cell)?;
    let distinct = perimeter_points(cell, &roots);
    let n_roots = distinct.len();

    let mut has_neg = d.iter().any(|&v| v < -ON_BOUNDARY_TOL);
    let mut has_pos = d.iter().any(|&v| v > ON_BOUNDARY_TOL);

    let class = if n_roots >= 2 {
        CellClass::Cut
    } else {
        // One contact point or none: sample the interior to rule out a
        // boundary component hiding inside the cell.
        for fy in [0.25, 0.5, 0.75] {
            for fx in [0.25, 0.5, 0.75] {
                let p = Point::new(
                    cell.min.x + fx * cell.width(),
                    cell.min.y + fy * cell.height(),
                );
                let v = domain.signed_distance(p);
                has_neg |= v < -ON_BOUNDARY_TOL;
                has_pos |= v > ON_BOUNDARY_TOL;
            }
        }
        match (has_neg, has_pos) {
            (true, true) => CellClass::Cut,
            (true, false) => CellClass::Inside,
            _ => CellClass::Outside,
        }
    };

    let strict_inside = class == CellClass::Inside
        && n_roots == 0
        && d.iter().all(|&v| v < -ON_BOUNDARY_TOL);
    Ok(Classification { class, strict_inside })
}

/// Locate the boundary inside a cut cell.
///
/// Returns the two perimeter intersection points ordered so that the
/// boundary, travelled counterclockwise, enters at `p_in` and leaves at
/// `p_out`, together with the interior corners and the exact cut area.
pub fn intersect_cell_boundary(
    domain: &dyn Domain,
    cell: &Rect,
    ix: u32,
    iy: u32,
) -> Result<CutInfo, GeometryError> {
    let roots = all_edge_roots(domain, cell)?;
    let pts = perimeter_points(cell, &roots);
    if pts.len() != 2 {
        return Err(GeometryError::AmbiguousCut { ix, iy, count: pts.len() });
    }

    let key_of = |p: &PerimPoint| -> IsectKey {
        if let Some(c) = p.snapped_node {
            // Corner index (SW, SE, NE, NW) to node offsets.
            let (ox, oy) = [(0, 0), (1, 0), (1, 1), (0, 1)][c];
            IsectKey::Node { ix: ix + ox, iy: iy + oy }
        } else {
            let k = p.root_index as u8;
            match p.edge {
                0 => IsectKey::HEdge { ix, iy, k },
                1 => IsectKey::VEdge { ix: ix + 1, iy, k },
                2 => IsectKey::HEdge { ix, iy: iy + 1, k },
                _ => IsectKey::VEdge { ix, iy, k },
            }
        }
    };

    // Orient: travelling counterclockwise, the boundary enters the cell
    // where its tangent crosses the perimeter inward and leaves where it
    // crosses outward.  The parameter gap from entry to exit may be either
    // the short or the long way around (a cell containing most of the
    // boundary).
    let (pa, pb) = (pts[0], pts[1]);
    let sa = domain.boundary_param(pa.point);
    let sb = domain.boundary_param(pb.point);
    // Inward perimeter normal at a crossing: the crossed edge's inward
    // normal, or the corner bisector for a node contact.
    let inward_normal = |p: &PerimPoint| -> (f64, f64) {
        match p.snapped_node {
            Some(0) => (1.0, 1.0),  // SW corner
            Some(1) => (-1.0, 1.0), // SE
            Some(2) => (-1.0, -1.0), // NE
            Some(_) => (1.0, -1.0), // NW
            None => match p.edge {
                0 => (0.0, 1.0),  // bottom
                1 => (-1.0, 0.0), // right
                2 => (0.0, -1.0), // top
                _ => (1.0, 0.0),  // left
            },
        }
    };
    let inwardness = |p: &PerimPoint, s: f64| -> f64 {
        let t = domain.boundary_tangent(s);
        let (nx, ny) = inward_normal(p);
        t.x * nx + t.y * ny
    };
    let (wa, wb) = (inwardness(&pa, sa), inwardness(&pb, sb));
    let tangential = 1e-10;
    let (pin, pout, s_in, s_out) = if wa > tangential && wb < -tangential {
        (pa, pb, sa, sb)
    } else if wb > tangential && wa < -tangential {
        (pb, pa, sb, sa)
    } else {
        // Near-tangential contact at both points: pick the orientation whose
        // arc stays inside the cell.
        let excursion = |s0: f64, delta: f64| -> f64 {
            let mut worst: f64 = 0.0;
            for k in 0..48 {
                let s = s0 + delta * (k as f64 + 0.5) / 48.0;
                let p = domain.boundary_point(s);
                let dx = (cell.min.x - p.x).max(p.x - cell.max.x).max(0.0);
                let dy = (cell.min.y - p.y).max(p.y - cell.max.y).max(0.0);
                worst = worst.max(dx.max(dy));
            }
            worst
        };
        if excursion(sa, domain.ccw_param_delta(sa, sb)) <= excursion(sb, domain.ccw_param_delta(sb, sa)) {
            (pa, pb, sa, sb)
        } else {
            (pb, pa, sb, sa)
        }
    };
    let s_delta = domain.ccw_param_delta(s_in, s_out);

    // Interior corners between p_out and p_in, counterclockwise.
    let corners = cell.corners_ccw();
    let d: Vec<f64> = corners.iter().map(|&c| domain.signed_distance(c)).collect();
    let span = (pin.perim - pout.perim).rem_euclid(4.0);
    let mut inside: Vec<(f64, Point)> = Vec::new();
    for (c, (&corner, &dist)) in corners.iter().zip(d.iter()).enumerate() {
        if dist < -ON_BOUNDARY_TOL {
            let delta = (c as f64 - pout.perim).rem_euclid(4.0);
            if delta > 0.0 && delta < span {
                inside.push((delta, corner));
            }
        }
    }
    inside.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let inside_corners: Vec<Point> = inside.into_iter().map(|(_, p)| p).collect();

    // Exact cut area: shoelace of the straight polygon plus the lens between
    // the chord and the exact arc.
    let mut poly: Vec<Point> = Vec::with_capacity(2 + inside_corners.len());
    poly.push(pin.point);
    poly.push(pout.point);
    poly.extend(inside_corners.iter().copied());
    let mut area = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        area += 0.5 * (a.x * b.y - b.x * a.y);
    }
    area += arc_chord_lens_area(domain, s_in, s_delta, pin.point, pout.point);

    Ok(CutInfo {
        ix,
        iy,
        p_in: pin.point,
        p_out: pout.point,
        key_in: key_of(&pin),
        key_out: key_of(&pout),
        s_in,
        s_delta,
        inside_corners,
        area,
    })
}

/// Signed area between the exact arc from `s_in` over `s_delta` and its chord.
fn arc_chord_lens_area(domain: &dyn Domain, s_in: f64, s_delta: f64, p_in: Point, p_out: Point) -> f64 {
    let rule = gauss_legendre_01(24);
    let mut arc = 0.0;
    for gp in &rule {
        let s = s_in + gp.x * s_delta;
        let p = domain.boundary_point(s);
        let v = domain.boundary_velocity(s);
        arc += gp.w * s_delta * cross2(p.coords, v);
    }
    // Close the loop with the chord from p_out back to p_in.
    let chord = cross2(p_out.coords, p_in.coords);
    0.5 * (arc + chord)
}
