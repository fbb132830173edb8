//! Implicitly defined domains.
//!
//! A [`Domain`] describes a region of the plane through a signed distance
//! function together with an exact description of its boundary curve:
//! closest-point projection, and boundary frames (tangent, outward normal,
//! curvature) addressed by a scalar boundary parameter.  The boundary is
//! assumed smooth and traversed counterclockwise, so the region lies on the
//! left of the tangent direction and the outward normal is the tangent
//! rotated by -90 degrees.

use nalgebra::{Point2, Vector2};

/// Planar point.
pub type Point = Point2<f64>;
/// Planar vector.
pub type Vec2 = Vector2<f64>;

/// z-component of the cross product of two planar vectors.
#[inline]
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Rotate a vector by -90 degrees.
///
/// For a counterclockwise unit tangent this is the outward unit normal.
#[inline]
pub fn outward_normal(t: Vec2) -> Vec2 {
    Vec2::new(t.y, -t.x)
}

/// Axis-aligned rectangle, used both for grid cells and bounding boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        assert!(min.x < max.x && min.y < max.y, "empty rectangle");
        Rect { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    /// Corners in counterclockwise perimeter order: SW, SE, NE, NW.
    pub fn corners_ccw(&self) -> [Point; 4] {
        [
            Point::new(self.min.x, self.min.y),
            Point::new(self.max.x, self.min.y),
            Point::new(self.max.x, self.max.y),
            Point::new(self.min.x, self.max.y),
        ]
    }

    /// True if `p` lies inside the rectangle enlarged by `margin` on all sides.
    pub fn contains(&self, p: Point, margin: f64) -> bool {
        p.x >= self.min.x - margin
            && p.x <= self.max.x + margin
            && p.y >= self.min.y - margin
            && p.y <= self.max.y + margin
    }
}

/// A smooth, closed, implicitly defined region of the plane.
///
/// Implementations must guarantee, within a tubular neighborhood of the
/// boundary wide enough to cover every grid cell the cut machinery visits:
///
/// * `signed_distance` is negative inside, positive outside, zero on the
///   boundary, and 1-Lipschitz (an exact distance up to smooth corrections);
/// * `closest_point` projects onto the boundary;
/// * the boundary parametrization `boundary_point` is counterclockwise
///   (region on the left of `boundary_tangent`).
pub trait Domain: Sync {
    /// Signed distance to the boundary (negative inside).
    fn signed_distance(&self, p: Point) -> f64;

    /// Closest boundary point to `p`.
    fn closest_point(&self, p: Point) -> Point;

    /// Boundary parameter of the boundary point closest to `p`.
    fn boundary_param(&self, p: Point) -> f64;

    /// Boundary point at parameter `s`.
    fn boundary_point(&self, s: f64) -> Point;

    /// Unit counterclockwise tangent at parameter `s`.
    fn boundary_tangent(&self, s: f64) -> Vec2;

    /// Outward unit normal at parameter `s`.
    fn boundary_normal(&self, s: f64) -> Vec2 {
        outward_normal(self.boundary_tangent(s))
    }

    /// Signed curvature at parameter `s`; positive where the region is convex.
    fn boundary_curvature(&self, s: f64) -> f64;

    /// Derivative of `boundary_point` with respect to the parameter.
    fn boundary_velocity(&self, s: f64) -> Vec2 {
        let d = 1e-6;
        let a = self.boundary_point(s - d);
        let b = self.boundary_point(s + d);
        (b - a) / (2.0 * d)
    }

    /// Period of the boundary parameter for closed curves, `None` for open ones.
    fn param_period(&self) -> Option<f64>;

    /// Parameter increase when travelling counterclockwise from `from` to `to`.
    fn ccw_param_delta(&self, from: f64, to: f64) -> f64 {
        match self.param_period() {
            Some(p) => (to - from).rem_euclid(p),
            None => to - from,
        }
    }
}

/// Disk of radius `radius` around `center`; boundary parameter is the polar angle.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        assert!(radius > 0.0, "circle radius must be positive");
        Circle { center, radius }
    }
}

impl Domain for Circle {
    fn signed_distance(&self, p: Point) -> f64 {
        (p - self.center).norm() - self.radius
    }

    fn closest_point(&self, p: Point) -> Point {
        let d = p - self.center;
        let n = d.norm();
        if n == 0.0 {
            // The center has no unique projection; any boundary point works.
            return self.center + Vec2::new(self.radius, 0.0);
        }
        self.center + d * (self.radius / n)
    }

    fn boundary_param(&self, p: Point) -> f64 {
        let d = p - self.center;
        d.y.atan2(d.x)
    }

    fn boundary_point(&self, s: f64) -> Point {
        self.center + Vec2::new(self.radius * s.cos(), self.radius * s.sin())
    }

    fn boundary_tangent(&self, s: f64) -> Vec2 {
        Vec2::new(-s.sin(), s.cos())
    }

    fn boundary_normal(&self, s: f64) -> Vec2 {
        Vec2::new(s.cos(), s.sin())
    }

    fn boundary_curvature(&self, _s: f64) -> f64 {
        1.0 / self.radius
    }

    fn boundary_velocity(&self, s: f64) -> Vec2 {
        Vec2::new(-self.radius * s.sin(), self.radius * s.cos())
    }

    fn param_period(&self) -> Option<f64> {
        Some(std::f64::consts::TAU)
    }
}

/// Half plane `{ p : (p - origin) . normal <= 0 }` with a straight boundary.
///
/// Degenerate unbounded instance used to verify the cut machinery against
/// straight cuts, where areas and boundary integrals have closed forms.
/// The boundary parameter is the coordinate along the tangent direction.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlane {
    pub origin: Point,
    normal: Vec2,
    tangent: Vec2,
}

impl HalfPlane {
    /// `normal` points out of the region; it is normalized internally.
    pub fn new(origin: Point, normal: Vec2) -> Self {
        let n = normal.normalize();
        // outward n = rot_{-90}(t)  =>  t = rot_{+90}(n).
        let t = Vec2::new(-n.y, n.x);
        HalfPlane { origin, normal: n, tangent: t }
    }
}

impl Domain for HalfPlane {
    fn signed_distance(&self, p: Point) -> f64 {
        (p - self.origin).dot(&self.normal)
    }

    fn closest_point(&self, p: Point) -> Point {
        p - self.normal * self.signed_distance(p)
    }

    fn boundary_param(&self, p: Point) -> f64 {
        (p - self.origin).dot(&self.tangent)
    }

    fn boundary_point(&self, s: f64) -> Point {
        self.origin + self.tangent * s
    }

    fn boundary_tangent(&self, _s: f64) -> Vec2 {
        self.tangent
    }

    fn boundary_curvature(&self, _s: f64) -> f64 {
        0.0
    }

    fn boundary_velocity(&self, _s: f64) -> Vec2 {
        self.tangent
    }

    fn param_period(&self) -> Option<f64> {
        None
    }
}
