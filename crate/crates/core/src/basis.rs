//! Bicubic Hermite (Bogner-Fox-Schmit) shape functions on grid cells.
//!
//! Each cell carries 16 degrees of freedom: the deflection and its first
//! derivatives (v, v_x, v_y, v_xy) at the four corners.  Shape functions are
//! tensor products of the 1D cubic Hermite basis, which makes them C^1
//! across cell faces and lets every derivative up to third order be
//! evaluated as a product of 1D factors.  All evaluations are polynomial,
//! so they extend naturally outside the cell — cut cells use exactly this
//! extension on the part of the physical domain that sticks out.

use crate::domain::{Point, Rect, Vec2};
use crate::mesh::{ActiveMesh, DofMap};

/// Number of degrees of freedom per cell.
pub const DOFS_PER_CELL: usize = 16;

/// Local corner order: SW, SE, NW, NE (x fastest).
const CORNER_SIDES: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// 1D cubic Hermite basis on an interval of length `h`, differentiated
/// `order` times, at local coordinate `xi` in [0, 1].
///
/// # Arguments
///
/// * `xi` - Local coordinate (values outside [0, 1] evaluate the polynomial
///   extension).
/// * `h` - Interval length; slope functions are scaled by `h` so that the
///   associated degrees of freedom are physical derivatives.
/// * `order` - Derivative order with respect to the physical coordinate.
///
/// # Returns
///
/// `[value-left, slope-left, value-right, slope-right]`; all four entries
/// are zero for `order > 3`.
pub fn hermite_1d(xi: f64, h: f64, order: usize) -> [f64; 4] {
    let raw = match order {
        0 => [
            (2.0 * xi - 3.0) * xi * xi + 1.0,
            ((xi - 2.0) * xi + 1.0) * xi,
            (3.0 - 2.0 * xi) * xi * xi,
            (xi - 1.0) * xi * xi,
        ],
        1 => [
            6.0 * xi * xi - 6.0 * xi,
            3.0 * xi * xi - 4.0 * xi + 1.0,
            -6.0 * xi * xi + 6.0 * xi,
            3.0 * xi * xi - 2.0 * xi,
        ],
        2 => [12.0 * xi - 6.0, 6.0 * xi - 4.0, -12.0 * xi + 6.0, 6.0 * xi - 2.0],
        3 => [12.0, 6.0, -12.0, 6.0],
        _ => [0.0; 4],
    };
    let scale = h.powi(-(order as i32));
    [raw[0] * scale, raw[1] * h * scale, raw[2] * scale, raw[3] * h * scale]
}

/// All 16 shape functions of a cell, differentiated `(a, b)` times in x
/// and y, at the physical point `p`.
///
/// # Arguments
///
/// * `cell` - The cell rectangle.
/// * `p` - Physical evaluation point (may lie outside the cell).
/// * `a`, `b` - Derivative orders in x and y.
///
/// # Returns
///
/// Values indexed `4 * corner + kind` with corners ordered SW, SE, NW, NE
/// and kinds ordered v, v_x, v_y, v_xy.
pub fn shape_values(cell: &Rect, p: Point, a: usize, b: usize) -> [f64; DOFS_PER_CELL] {
    let hx = cell.width();
    let hy = cell.height();
    let fx = hermite_1d((p.x - cell.min.x) / hx, hx, a);
    let fy = hermite_1d((p.y - cell.min.y) / hy, hy, b);
    let mut out = [0.0; DOFS_PER_CELL];
    for (c, &(sx, sy)) in CORNER_SIDES.iter().enumerate() {
        for kind in 0..4 {
            let x_slope = kind & 1; // v_x and v_xy carry the x slope factor
            let y_slope = kind >> 1; // v_y and v_xy carry the y slope factor
            out[4 * c + kind] = fx[2 * sx + x_slope] * fy[2 * sy + y_slope];
        }
    }
    out
}

/// Shape function derivatives through third order at one point.
#[derive(Debug, Clone)]
pub struct ShapeDerivs {
    pub v: [f64; DOFS_PER_CELL],
    pub dx: [f64; DOFS_PER_CELL],
    pub dy: [f64; DOFS_PER_CELL],
    pub dxx: [f64; DOFS_PER_CELL],
    pub dxy: [f64; DOFS_PER_CELL],
    pub dyy: [f64; DOFS_PER_CELL],
    pub dxxx: [f64; DOFS_PER_CELL],
    pub dxxy: [f64; DOFS_PER_CELL],
    pub dxyy: [f64; DOFS_PER_CELL],
    pub dyyy: [f64; DOFS_PER_CELL],
}

/// Evaluate every derivative of every shape function up to third order.
///
/// Shares the 1D factor evaluations across all ten derivative combinations,
/// which is the hot path of assembly.
pub fn shape_derivs(cell: &Rect, p: Point) -> ShapeDerivs {
    let hx = cell.width();
    let hy = cell.height();
    let xi = (p.x - cell.min.x) / hx;
    let eta = (p.y - cell.min.y) / hy;
    let fx: [[f64; 4]; 4] = std::array::from_fn(|o| hermite_1d(xi, hx, o));
    let fy: [[f64; 4]; 4] = std::array::from_fn(|o| hermite_1d(eta, hy, o));

    let combine = |a: usize, b: usize| -> [f64; DOFS_PER_CELL] {
        let mut out = [0.0; DOFS_PER_CELL];
        for (c, &(sx, sy)) in CORNER_SIDES.iter().enumerate() {
            for kind in 0..4 {
                out[4 * c + kind] = fx[a][2 * sx + (kind & 1)] * fy[b][2 * sy + (kind >> 1)];
            }
        }
        out
    };

    ShapeDerivs {
        v: combine(0, 0),
        dx: combine(1, 0),
        dy: combine(0, 1),
        dxx: combine(2, 0),
        dxy: combine(1, 1),
        dyy: combine(0, 2),
        dxxx: combine(3, 0),
        dxxy: combine(2, 1),
        dxyy: combine(1, 2),
        dyyy: combine(0, 3),
    }
}

/// Value, gradient, Hessian, and third derivatives of a finite element
/// function at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldState {
    pub value: f64,
    pub grad: Vec2,
    /// (v_xx, v_xy, v_yy)
    pub hess: [f64; 3],
    /// (v_xxx, v_xxy, v_xyy, v_yyy)
    pub third: [f64; 4],
}

impl FieldState {
    /// Contract shape derivatives with the local coefficient vector.
    pub fn from_shapes(sh: &ShapeDerivs, local: &[f64; DOFS_PER_CELL]) -> Self {
        let dot = |row: &[f64; DOFS_PER_CELL]| -> f64 {
            row.iter().zip(local.iter()).map(|(a, b)| a * b).sum()
        };
        FieldState {
            value: dot(&sh.v),
            grad: Vec2::new(dot(&sh.dx), dot(&sh.dy)),
            hess: [dot(&sh.dxx), dot(&sh.dxy), dot(&sh.dyy)],
            third: [dot(&sh.dxxx), dot(&sh.dxxy), dot(&sh.dxyy), dot(&sh.dyyy)],
        }
    }
}

/// Fill a global coefficient vector by interpolating nodal data.
///
/// # Arguments
///
/// * `f` - Returns `(v, v_x, v_y, v_xy)` at a grid node.
/// * `mesh`, `dofs` - Active mesh and its degree-of-freedom layout.
///
/// # Returns
///
/// Coefficients for every active degree of freedom, in global order.
pub fn interpolate(
    f: &dyn Fn(Point) -> [f64; 4],
    mesh: &ActiveMesh,
    dofs: &DofMap,
) -> Vec<f64> {
    let mut out = vec![0.0; dofs.n_dofs];
    for (slot, &(ix, iy)) in dofs.nodes.iter().enumerate() {
        let vals = f(mesh.node_point(ix, iy));
        for (k, &v) in vals.iter().enumerate() {
            out[4 * slot + k] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_cell() -> Rect {
        Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    #[test]
    fn hermite_midpoint_values() {
        let v = hermite_1d(0.5, 1.0, 0);
        assert_eq!(v, [0.5, 0.125, 0.5, -0.125]);
    }

    #[test]
    fn hermite_slope_dof_is_physical_derivative() {
        // At the right end, only the right slope function has unit slope.
        for h in [1.0, 0.25, 0.0625] {
            let d = hermite_1d(1.0, h, 1);
            assert_relative_eq!(d[0], 0.0, epsilon = 1e-12 / h);
            assert_relative_eq!(d[1], 0.0, epsilon = 1e-12);
            assert_relative_eq!(d[2], 0.0, epsilon = 1e-12 / h);
            assert_relative_eq!(d[3], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shapes_are_kronecker_at_corners() {
        let cell = Rect::new(Point::new(0.5, 0.25), Point::new(0.75, 0.5));
        let corners = [
            Point::new(0.5, 0.25),
            Point::new(0.75, 0.25),
            Point::new(0.5, 0.5),
            Point::new(0.75, 0.5),
        ];
        for (c, &p) in corners.iter().enumerate() {
            for (kind, (a, b)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                let vals = shape_values(&cell, p, a, b);
                for i in 0..DOFS_PER_CELL {
                    let expect = if i == 4 * c + kind { 1.0 } else { 0.0 };
                    assert_relative_eq!(vals[i], expect, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn reproduces_bicubics_exactly_including_extension() {
        // f = x^3 y^3 has nodal data representable exactly; check values and
        // derivatives inside the cell and on its polynomial extension.
        let cell = Rect::new(Point::new(0.25, 0.5), Point::new(0.5, 0.75));
        let f = |p: Point| p.x.powi(3) * p.y.powi(3);
        let corners = [
            Point::new(0.25, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.25, 0.75),
            Point::new(0.5, 0.75),
        ];
        let mut local = [0.0; DOFS_PER_CELL];
        for (c, &q) in corners.iter().enumerate() {
            local[4 * c] = f(q);
            local[4 * c + 1] = 3.0 * q.x.powi(2) * q.y.powi(3);
            local[4 * c + 2] = 3.0 * q.x.powi(3) * q.y.powi(2);
            local[4 * c + 3] = 9.0 * q.x.powi(2) * q.y.powi(2);
        }
        // Points inside and outside the cell.
        for p in [
            Point::new(0.3, 0.6),
            Point::new(0.45, 0.72),
            Point::new(0.6, 0.8),  // outside: extension
            Point::new(0.2, 0.45), // outside: extension
        ] {
            let st = FieldState::from_shapes(&shape_derivs(&cell, p), &local);
            assert_relative_eq!(st.value, f(p), max_relative = 1e-11);
            assert_relative_eq!(st.grad.x, 3.0 * p.x.powi(2) * p.y.powi(3), max_relative = 1e-10);
            assert_relative_eq!(st.hess[1], 9.0 * p.x.powi(2) * p.y.powi(2), max_relative = 1e-10);
            assert_relative_eq!(st.hess[0], 6.0 * p.x * p.y.powi(3), max_relative = 1e-10);
            assert_relative_eq!(st.third[0], 6.0 * p.y.powi(3), max_relative = 1e-10);
            assert_relative_eq!(st.third[3], 6.0 * p.x.powi(3), max_relative = 1e-10);
        }
    }

    #[test]
    fn mixed_partial_orders_commute_bitwise() {
        let cell = Rect::new(Point::new(0.0, 0.0), Point::new(0.125, 0.125));
        let p = Point::new(0.07, 0.04);
        let sh = shape_derivs(&cell, p);
        // Independent recomputation straight from the tensor factors.
        let direct = shape_values(&cell, p, 1, 1);
        for i in 0..DOFS_PER_CELL {
            assert_eq!(sh.dxy[i], direct[i]);
        }
    }

    proptest! {
        #[test]
        fn value_shapes_partition_unity(x in -0.5f64..1.5, y in -0.5f64..1.5) {
            let cell = unit_cell();
            let vals = shape_values(&cell, Point::new(x, y), 0, 0);
            let sum: f64 = (0..4).map(|c| vals[4 * c]).sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
        }

        #[test]
        fn fourth_derivatives_vanish(x in 0.0f64..1.0) {
            let vals = hermite_1d(x, 0.25, 4);
            prop_assert!(vals.iter().all(|&v| v == 0.0));
        }
    }
}
