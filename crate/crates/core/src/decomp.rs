//! Decomposition of cut cells into integrable triangles.
//!
//! The inside part of a cut cell is a polygon whose one curved side is the
//! cell's cubic boundary segment.  It is fanned into triangles from the
//! entry point; the triangle touching the boundary is a ten-node cubic
//! (P3) triangle whose curved edge reproduces the cubic segment exactly,
//! the rest are straight.  A cap cut (both intersections on one edge, no
//! interior corners) splits the curve at its midpoint into two curved
//! triangles over the chord midpoint.

use crate::boundary::CubicCurve;
use crate::domain::{cross2, Point, Rect};
use crate::error::GeometryError;
use crate::intersect::CutInfo;
use crate::quadrature::{gauss_for_degree, triangle_rule};

/// A quadrature point in the plane.
#[derive(Debug, Clone, Copy)]
pub struct AreaQP {
    pub point: Point,
    pub weight: f64,
}

/// Straight triangle with counterclockwise vertices.
#[derive(Debug, Clone)]
pub struct StraightTri {
    pub v: [Point; 3],
}

impl StraightTri {
    pub fn signed_area(&self) -> f64 {
        0.5 * cross2(self.v[1] - self.v[0], self.v[2] - self.v[0])
    }
}

/// Ten-node cubic triangle.
///
/// Vertices are numbered V1, V2, V3 counterclockwise; the V1-V2 edge is the
/// curved one.  Nodes 4-9 are the edge thirds (two per edge, in edge
/// direction, edges V1V2, V2V3, V3V1), node 10 is interior.
#[derive(Debug, Clone)]
pub struct CurvedTri {
    pub nodes: [Point; 10],
}

impl CurvedTri {
    /// Build from a cubic curve (the V1 -> V2 edge) and the apex V3.
    ///
    /// The curved-edge nodes are the curve at s = 1/3, 2/3, so the P3 edge
    /// restriction reproduces the cubic curve exactly.  The interior node
    /// follows the curve's bulge at two thirds strength, keeping the
    /// interior map well shaped.
    pub fn from_curve_and_apex(curve: &CubicCurve, apex: Point) -> CurvedTri {
        let v1 = curve.eval(0.0);
        let v2 = curve.eval(1.0);
        let v3 = apex;
        let third = |a: Point, b: Point, f: f64| Point::from(a.coords + f * (b - a));
        let chord_mid = Point::from(0.5 * (v1.coords + v2.coords));
        let bulge = curve.eval(0.5) - chord_mid;
        let centroid = Point::from((v1.coords + v2.coords + v3.coords) / 3.0);
        CurvedTri {
            nodes: [
                v1,
                v2,
                v3,
                curve.eval(1.0 / 3.0),
                curve.eval(2.0 / 3.0),
                third(v2, v3, 1.0 / 3.0),
                third(v2, v3, 2.0 / 3.0),
                third(v3, v1, 1.0 / 3.0),
                third(v3, v1, 2.0 / 3.0),
                Point::from(centroid.coords + (2.0 / 3.0) * bulge),
            ],
        }
    }

    /// Map a reference point (u, v) to physical coordinates.
    pub fn eval(&self, u: f64, v: f64) -> Point {
        let n = p3_shapes(u, v);
        let mut x = 0.0;
        let mut y = 0.0;
        for (i, node) in self.nodes.iter().enumerate() {
            x += n[i] * node.x;
            y += n[i] * node.y;
        }
        Point::new(x, y)
    }

    /// Jacobian determinant of the reference-to-physical map at (u, v).
    pub fn jacobian(&self, u: f64, v: f64) -> f64 {
        let dn = p3_shape_gradients(u, v);
        let (mut xu, mut xv, mut yu, mut yv) = (0.0, 0.0, 0.0, 0.0);
        for (i, node) in self.nodes.iter().enumerate() {
            xu += dn[i][0] * node.x;
            xv += dn[i][1] * node.x;
            yu += dn[i][0] * node.y;
            yv += dn[i][1] * node.y;
        }
        xu * yv - xv * yu
    }
}

/// P3 Lagrange shape functions on the reference triangle
/// {(u, v) : u, v >= 0, u + v <= 1}, with barycentrics
/// l1 = 1 - u - v (V1), l2 = u (V2), l3 = v (V3).
fn p3_shapes(u: f64, v: f64) -> [f64; 10] {
    let l1 = 1.0 - u - v;
    let l2 = u;
    let l3 = v;
    let vertex = |l: f64| 0.5 * l * (3.0 * l - 1.0) * (3.0 * l - 2.0);
    let edge = |li: f64, lj: f64| 4.5 * li * lj * (3.0 * li - 1.0);
    [
        vertex(l1),
        vertex(l2),
        vertex(l3),
        edge(l1, l2), // V1V2 edge, node nearer V1
        edge(l2, l1), // nearer V2
        edge(l2, l3), // V2V3 edge, nearer V2
        edge(l3, l2),
        edge(l3, l1), // V3V1 edge, nearer V3
        edge(l1, l3),
        27.0 * l1 * l2 * l3,
    ]
}

/// Gradients of the P3 shapes with respect to (u, v).
fn p3_shape_gradients(u: f64, v: f64) -> [[f64; 2]; 10] {
    let l1 = 1.0 - u - v;
    let l2 = u;
    let l3 = v;
    // d/dl of the vertex and edge polynomials.
    let dvertex = |l: f64| 0.5 * (27.0 * l * l - 18.0 * l + 2.0);
    let dedge_i = |li: f64, lj: f64| 4.5 * lj * (6.0 * li - 1.0);
    let dedge_j = |li: f64| 4.5 * li * (3.0 * li - 1.0);
    // Chain rule: dl1 = (-1, -1), dl2 = (1, 0), dl3 = (0, 1).
    let grad = |dl1: f64, dl2: f64, dl3: f64| [-dl1 + dl2, -dl1 + dl3];
    [
        grad(dvertex(l1), 0.0, 0.0),
        grad(0.0, dvertex(l2), 0.0),
        grad(0.0, 0.0, dvertex(l3)),
        grad(dedge_i(l1, l2), dedge_j(l1), 0.0),
        grad(dedge_j(l2), dedge_i(l2, l1), 0.0),
        grad(0.0, dedge_i(l2, l3), dedge_j(l2)),
        grad(0.0, dedge_j(l3), dedge_i(l3, l2)),
        grad(dedge_j(l3), 0.0, dedge_i(l3, l1)),
        grad(dedge_i(l1, l3), 0.0, dedge_j(l1)),
        [
            27.0 * (-l2 * l3 + l1 * l3),
            27.0 * (-l2 * l3 + l1 * l2),
        ],
    ]
}

/// One integrable piece of a cut cell.
#[derive(Debug, Clone)]
pub enum Triangle {
    Straight(StraightTri),
    Curved(CurvedTri),
}

/// Triangulation of the inside part of one cut cell.
#[derive(Debug, Clone)]
pub struct CutCellDecomposition {
    pub tris: Vec<Triangle>,
}

impl CutCellDecomposition {
    /// The same decomposition with curved edges replaced by their chords.
    ///
    /// Used by error norms, which integrate on straight triangles.
    pub fn straightened(&self) -> CutCellDecomposition {
        let tris = self
            .tris
            .iter()
            .map(|t| match t {
                Triangle::Straight(s) => Triangle::Straight(s.clone()),
                Triangle::Curved(c) => Triangle::Straight(StraightTri {
                    v: [c.nodes[0], c.nodes[1], c.nodes[2]],
                }),
            })
            .collect();
        CutCellDecomposition { tris }
    }
}

/// Decompose a cut cell into triangles.
///
/// # Arguments
///
/// * `cell` - The cell rectangle (used for degeneracy scaling).
/// * `info` - Intersection data of the cell.
/// * `curve` - The cell's discrete boundary segment, running from
///   `info.p_in` to `info.p_out`.
///
/// # Errors
///
/// [`GeometryError::DegenerateTriangle`] when a fan triangle collapses;
/// [`GeometryError::NonPositiveJacobian`] when a curved triangle folds
/// over.
pub fn decompose_cut_cell(
    cell: &Rect,
    info: &CutInfo,
    curve: &CubicCurve,
) -> Result<CutCellDecomposition, GeometryError> {
    let h2 = cell.width() * cell.height();
    let mut tris: Vec<Triangle> = Vec::new();

    if info.inside_corners.is_empty() {
        // Cap cut: the region between the curve and its chord.  Split the
        // curve at midparameter and raise both halves over the chord
        // midpoint.
        let (left, right) = curve.subdivide_half();
        let mid = Point::from(0.5 * (info.p_in.coords + info.p_out.coords));
        tris.push(Triangle::Curved(CurvedTri::from_curve_and_apex(&left, mid)));
        tris.push(Triangle::Curved(CurvedTri::from_curve_and_apex(&right, mid)));
    } else {
        // Fan from the entry point across the interior corners.
        let corners = &info.inside_corners;
        tris.push(Triangle::Curved(CurvedTri::from_curve_and_apex(curve, corners[0])));
        for pair in corners.windows(2) {
            let tri = StraightTri { v: [info.p_in, pair[0], pair[1]] };
            let area = tri.signed_area();
            if area <= 1e-13 * h2 {
                return Err(GeometryError::DegenerateTriangle { ix: info.ix, iy: info.iy, area });
            }
            tris.push(Triangle::Straight(tri));
        }
    }

    // Probe the curved maps for folding.
    for t in &tris {
        if let Triangle::Curved(c) = t {
            for tp in triangle_rule(4) {
                if c.jacobian(tp.u, tp.v) <= 0.0 {
                    return Err(GeometryError::NonPositiveJacobian { ix: info.ix, iy: info.iy });
                }
            }
        }
    }

    Ok(CutCellDecomposition { tris })
}

/// Quadrature over a decomposed cut cell, exact to `degree` on each piece.
pub fn area_quadrature(decomp: &CutCellDecomposition, degree: usize) -> Vec<AreaQP> {
    let mut out = Vec::new();
    for t in &decomp.tris {
        match t {
            Triangle::Straight(s) => {
                let jac = 2.0 * s.signed_area();
                for tp in triangle_rule(degree) {
                    let l1 = 1.0 - tp.u - tp.v;
                    let p = Point::new(
                        l1 * s.v[0].x + tp.u * s.v[1].x + tp.v * s.v[2].x,
                        l1 * s.v[0].y + tp.u * s.v[1].y + tp.v * s.v[2].y,
                    );
                    out.push(AreaQP { point: p, weight: tp.w * jac });
                }
            }
            Triangle::Curved(c) => {
                // The map is cubic, so det J has degree 4; integrating an
                // integrand of `degree` exactly needs degree + 4 in the
                // reference variables.
                for tp in triangle_rule(degree + 4) {
                    let jac = c.jacobian(tp.u, tp.v);
                    out.push(AreaQP { point: c.eval(tp.u, tp.v), weight: tp.w * jac });
                }
            }
        }
    }
    out
}

/// Tensor-product Gauss quadrature over a full rectangular cell.
pub fn tensor_cell_quadrature(rect: &Rect, degree: usize) -> Vec<AreaQP> {
    let gx = gauss_for_degree(degree);
    let gy = gauss_for_degree(degree);
    let (w, h) = (rect.width(), rect.height());
    let mut out = Vec::with_capacity(gx.len() * gy.len());
    for py in &gy {
        for px in &gx {
            out.push(AreaQP {
                point: Point::new(rect.min.x + px.x * w, rect.min.y + py.x * h),
                weight: px.w * py.w * w * h,
            });
        }
    }
    out
}
