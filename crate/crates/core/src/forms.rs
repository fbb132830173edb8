//! Weak forms of the thin-plate bending operator and system assembly.
//!
//! The bilinear form couples the bending moment tensor with test-function
//! curvatures over the inside region, adds symmetric boundary consistency
//! terms built from the effective transverse traction, a boundary penalty
//! enforcing the deflection, and a ghost penalty stabilizing normal
//! derivative jumps across faces near the boundary.  The four parts are
//! assembled into separate sparse matrices so they can be weighted,
//! inspected, and tested independently.

use crate::basis::{shape_derivs, shape_values, ShapeDerivs, DOFS_PER_CELL};
use crate::boundary::boundary_quadrature;
use crate::decomp::{area_quadrature, tensor_cell_quadrature};
use crate::domain::{Point, Rect, Vec2};
use crate::pipeline::LevelGeometry;
use crate::quadrature::gauss_for_degree;
use crate::solver::SparseSymmetric;

/// Isotropic plate material.
#[derive(Debug, Clone, Copy)]
pub struct Material {
    /// Young's modulus.
    pub e: f64,
    /// Poisson's ratio.
    pub nu: f64,
    /// Plate thickness.
    pub thickness: f64,
}

impl Material {
    /// Shear-scaled bending stiffness E t^3 / (12 (1 + nu)).
    pub fn kappa(&self) -> f64 {
        self.e * self.thickness.powi(3) / (12.0 * (1.0 + self.nu))
    }

    /// The trace coupling factor nu / (1 - nu).
    pub fn nu_factor(&self) -> f64 {
        self.nu / (1.0 - self.nu)
    }
}

/// Boundary and stabilization weights.
#[derive(Debug, Clone, Copy)]
pub struct NitscheParams {
    /// Dimensionless scale of the boundary penalty.
    pub gamma_scale: f64,
    /// Ghost-penalty weight (multiplies kappa times the raw jump form).
    pub beta: f64,
}

impl NitscheParams {
    /// Absolute boundary penalty coefficient.
    pub fn gamma(&self, m: &Material) -> f64 {
        let k = m.kappa();
        self.gamma_scale * (2.0 * k + 2.0 * k * m.nu_factor())
    }

    /// Absolute ghost-penalty weight.
    pub fn beta_eff(&self, m: &Material) -> f64 {
        self.beta * m.kappa()
    }
}

/// Bending moment tensor (M_xx, M_xy, M_yy) from a Hessian.
pub fn stress(hess: &[f64; 3], m: &Material) -> [f64; 3] {
    let k = m.kappa();
    let nf = m.nu_factor();
    let tr = hess[0] + hess[2];
    [k * (hess[0] + nf * tr), k * hess[1], k * (hess[2] + nf * tr)]
}

/// Contraction sigma(a) : H(b) of the moment of one Hessian with another.
///
/// Symmetric in its arguments, which keeps assembled blocks bitwise
/// symmetric.
pub fn stress_inner(ha: &[f64; 3], hb: &[f64; 3], m: &Material) -> f64 {
    let k = m.kappa();
    let nf = m.nu_factor();
    k * (ha[0] * hb[0] + 2.0 * ha[1] * hb[1] + ha[2] * hb[2] + nf * (ha[0] + ha[2]) * (hb[0] + hb[2]))
}

/// Effective transverse boundary traction of a deflection field.
///
/// Combines the normal shear force with the tangential derivative of the
/// twisting moment; the curvature term accounts for the rotation of the
/// boundary frame along the curve.
///
/// # Arguments
///
/// * `hess` - (v_xx, v_xy, v_yy) at the boundary point.
/// * `third` - (v_xxx, v_xxy, v_xyy, v_yyy).
/// * `n`, `t` - Outward normal and counterclockwise tangent.
/// * `curvature` - Signed curvature of the boundary curve.
/// * `m` - Material.
pub fn traction(
    hess: &[f64; 3],
    third: &[f64; 4],
    n: Vec2,
    t: Vec2,
    curvature: f64,
    m: &Material,
) -> f64 {
    let k = m.kappa();
    let nf = m.nu_factor();
    let [xxx, xxy, xyy, yyy] = *third;

    // Normal component of the moment divergence: kappa (1 + nf) n . grad(lap v).
    let lap_x = xxx + xyy;
    let lap_y = xxy + yyy;
    let shear = k * (1.0 + nf) * (n.x * lap_x + n.y * lap_y);

    // Tangential derivative of the twisting moment M_nt along the curve:
    // directional derivative of M in direction t, contracted n . () . t,
    // plus the frame-rotation term curvature * (M_tt - M_nn).
    let mx = [xxx + nf * lap_x, xxy, xyy + nf * lap_x];
    let my = [xxy + nf * lap_y, xyy, yyy + nf * lap_y];
    let g = [
        t.x * mx[0] + t.y * my[0],
        t.x * mx[1] + t.y * my[1],
        t.x * mx[2] + t.y * my[2],
    ];
    let n_g_t = g[0] * n.x * t.x + g[1] * (n.x * t.y + n.y * t.x) + g[2] * n.y * t.y;
    // In M_tt - M_nn the trace parts cancel, leaving the plain Hessian form.
    let h_tt = hess[0] * t.x * t.x + 2.0 * hess[1] * t.x * t.y + hess[2] * t.y * t.y;
    let h_nn = hess[0] * n.x * n.x + 2.0 * hess[1] * n.x * n.y + hess[2] * n.y * n.y;
    shear + k * n_g_t + curvature * k * (h_tt - h_nn)
}

/// The assembled linear system, split by physical origin.
#[derive(Debug)]
pub struct AssembledSystem {
    pub n: usize,
    /// Moment-curvature form over the inside region.
    pub interior: SparseSymmetric,
    /// Symmetric boundary consistency terms.
    pub nitsche: SparseSymmetric,
    /// Boundary deflection penalty (gamma / h^3 weighted).
    pub penalty: SparseSymmetric,
    /// Raw ghost-penalty jump form (unweighted).
    pub stabilization: SparseSymmetric,
    pub rhs: Vec<f64>,
    pub gamma: f64,
    pub beta_eff: f64,
    pub h: f64,
}

/// A = interior + nitsche + penalty + beta_eff * stabilization, applied to
/// a vector with the per-part contributions kept separate.
#[derive(Debug)]
pub struct OperatorSplit {
    pub interior: Vec<f64>,
    pub nitsche: Vec<f64>,
    pub penalty: Vec<f64>,
    pub stabilization: Vec<f64>,
    pub total: Vec<f64>,
}

impl AssembledSystem {
    /// The full system matrix.
    pub fn matrix(&self) -> SparseSymmetric {
        SparseSymmetric::sum_scaled(&[
            (&self.interior, 1.0),
            (&self.nitsche, 1.0),
            (&self.penalty, 1.0),
            (&self.stabilization, self.beta_eff),
        ])
    }

    /// Apply the operator, reporting each part's contribution.
    pub fn apply_split(&self, v: &[f64]) -> OperatorSplit {
        let interior = self.interior.matvec(v);
        let nitsche = self.nitsche.matvec(v);
        let penalty = self.penalty.matvec(v);
        let mut stabilization = self.stabilization.matvec(v);
        for s in stabilization.iter_mut() {
            *s *= self.beta_eff;
        }
        let total = (0..self.n)
            .map(|i| interior[i] + nitsche[i] + penalty[i] + stabilization[i])
            .collect();
        OperatorSplit { interior, nitsche, penalty, stabilization, total }
    }
}

/// Hessian row of one shape function.
fn hess_of(sh: &ShapeDerivs, i: usize) -> [f64; 3] {
    [sh.dxx[i], sh.dxy[i], sh.dyy[i]]
}

/// Third-derivative row of one shape function.
fn third_of(sh: &ShapeDerivs, i: usize) -> [f64; 4] {
    [sh.dxxx[i], sh.dxxy[i], sh.dxyy[i], sh.dyyy[i]]
}

/// Mirror the lower triangle of a local block into the upper one.
fn mirror(block: &mut [[f64; DOFS_PER_CELL]; DOFS_PER_CELL]) {
    for i in 0..DOFS_PER_CELL {
        for j in 0..i {
            block[j][i] = block[i][j];
        }
    }
}

/// Scatter a full local block into a triplet list.
fn scatter16(
    triplets: &mut Vec<(u32, u32, f64)>,
    dofs: &[u32; DOFS_PER_CELL],
    block: &[[f64; DOFS_PER_CELL]; DOFS_PER_CELL],
) {
    for i in 0..DOFS_PER_CELL {
        for j in 0..DOFS_PER_CELL {
            let v = block[i][j];
            if v != 0.0 {
                triplets.push((dofs[i], dofs[j], v));
            }
        }
    }
}

/// Full-cell bending stiffness on a cell of size `h`, exact for the
/// bicubic basis (translation invariant, computed once per level).
fn full_cell_stiffness(h: f64, m: &Material, degree: usize) -> [[f64; DOFS_PER_CELL]; DOFS_PER_CELL] {
    let rect = Rect::new(Point::new(0.0, 0.0), Point::new(h, h));
    let mut block = [[0.0; DOFS_PER_CELL]; DOFS_PER_CELL];
    for q in tensor_cell_quadrature(&rect, degree) {
        let sh = shape_derivs(&rect, q.point);
        for i in 0..DOFS_PER_CELL {
            let hi = hess_of(&sh, i);
            for j in 0..=i {
                block[i][j] += q.weight * stress_inner(&hi, &hess_of(&sh, j), m);
            }
        }
    }
    mirror(&mut block);
    block
}

/// Raw ghost-penalty matrix of one interior face, for the two adjacent
/// cells stacked left/bottom then right/top (32 local dofs).
///
/// Integrates h [d2n jump]^2 + h^3 [d3n jump]^2 with a rule exact for the
/// degree-6 polynomial face integrands.
fn face_matrix(h: f64, along_x: bool) -> [[f64; 32]; 32] {
    let (rect_a, rect_b, face_start, face_dir, orders) = if along_x {
        // Vertical face between horizontal neighbors; normal along x.
        (
            Rect::new(Point::new(0.0, 0.0), Point::new(h, h)),
            Rect::new(Point::new(h, 0.0), Point::new(2.0 * h, h)),
            Point::new(h, 0.0),
            Vec2::new(0.0, 1.0),
            [(2usize, 0usize), (3, 0)],
        )
    } else {
        (
            Rect::new(Point::new(0.0, 0.0), Point::new(h, h)),
            Rect::new(Point::new(0.0, h), Point::new(h, 2.0 * h)),
            Point::new(0.0, h),
            Vec2::new(1.0, 0.0),
            [(0, 2), (0, 3)],
        )
    };
    let rule = gauss_for_degree(7);
    let mut block = [[0.0; 32]; 32];
    for gp in &rule {
        let p = Point::new(face_start.x + gp.x * h * face_dir.x, face_start.y + gp.x * h * face_dir.y);
        let w = gp.w * h;
        for (level, &(a, b)) in orders.iter().enumerate() {
            let da = shape_values(&rect_a, p, a, b);
            let db = shape_values(&rect_b, p, a, b);
            let mut jump = [0.0; 32];
            jump[..16].copy_from_slice(&da);
            for (j, &v) in db.iter().enumerate() {
                jump[16 + j] = -v;
            }
            // h for the second-derivative jump, h^3 for the third.
            let scale = w * h.powi(1 + 2 * level as i32);
            for i in 0..32 {
                for j in 0..=i {
                    block[i][j] += scale * jump[i] * jump[j];
                }
            }
        }
    }
    for i in 0..32 {
        for j in 0..i {
            block[j][i] = block[i][j];
        }
    }
    block
}

/// Assemble the full system for one level.
///
/// # Arguments
///
/// * `geo` - Level geometry from [`crate::pipeline::build_level_geometry`].
/// * `material`, `params` - Physics and method weights.
/// * `load` - Transverse load density.
/// * `degree` - Quadrature degree for area and boundary integrals.
pub fn assemble(
    geo: &LevelGeometry,
    material: &Material,
    params: &NitscheParams,
    load: &dyn Fn(Point) -> f64,
    degree: usize,
) -> AssembledSystem {
    let n = geo.dofs.n_dofs;
    let h = geo.mesh.h;
    let gamma = params.gamma(material);
    let beta_eff = params.beta_eff(material);
    let inv_h3 = h.powi(-3);

    let mut tri_interior: Vec<(u32, u32, f64)> = Vec::new();
    let mut tri_nitsche: Vec<(u32, u32, f64)> = Vec::new();
    let mut tri_penalty: Vec<(u32, u32, f64)> = Vec::new();
    let mut tri_stab: Vec<(u32, u32, f64)> = Vec::new();
    let mut rhs = vec![0.0; n];

    // Area terms: one exact reference stiffness serves every full cell.
    let k_full = full_cell_stiffness(h, material, degree.max(6));
    let ref_rect = Rect::new(Point::new(0.0, 0.0), Point::new(h, h));
    let ref_rule = tensor_cell_quadrature(&ref_rect, degree);
    let ref_vals: Vec<[f64; DOFS_PER_CELL]> = ref_rule
        .iter()
        .map(|q| shape_values(&ref_rect, q.point, 0, 0))
        .collect();

    for ci in 0..geo.mesh.cells.len() {
        let dofs = geo.dofs.cell_dofs(ci as u32);
        let rect = geo.mesh.cell_rect(ci as u32);
        match &geo.decomps[ci] {
            None => {
                scatter16(&mut tri_interior, dofs, &k_full);
                for (q, vals) in ref_rule.iter().zip(ref_vals.iter()) {
                    let x = Point::new(rect.min.x + q.point.x, rect.min.y + q.point.y);
                    let fw = load(x) * q.weight;
                    for i in 0..DOFS_PER_CELL {
                        rhs[dofs[i] as usize] += fw * vals[i];
                    }
                }
            }
            Some(decomp) => {
                let mut block = [[0.0; DOFS_PER_CELL]; DOFS_PER_CELL];
                for q in area_quadrature(decomp, degree) {
                    let sh = shape_derivs(&rect, q.point);
                    for i in 0..DOFS_PER_CELL {
                        let hi = hess_of(&sh, i);
                        for j in 0..=i {
                            block[i][j] += q.weight * stress_inner(&hi, &hess_of(&sh, j), material);
                        }
                    }
                    let fw = load(q.point) * q.weight;
                    for i in 0..DOFS_PER_CELL {
                        rhs[dofs[i] as usize] += fw * sh.v[i];
                    }
                }
                mirror(&mut block);
                scatter16(&mut tri_interior, dofs, &block);
            }
        }
    }

    // Boundary terms: consistency pairs and penalty, on the host cell basis.
    for seg in &geo.boundary.segments {
        let rect = geo.mesh.cell_rect(seg.host);
        let dofs = geo.dofs.cell_dofs(seg.host);
        let mut nit = [[0.0; DOFS_PER_CELL]; DOFS_PER_CELL];
        let mut pen = [[0.0; DOFS_PER_CELL]; DOFS_PER_CELL];
        for qp in boundary_quadrature(seg, degree) {
            let sh = shape_derivs(&rect, qp.point);
            let mut tr = [0.0; DOFS_PER_CELL];
            for i in 0..DOFS_PER_CELL {
                tr[i] = traction(
                    &hess_of(&sh, i),
                    &third_of(&sh, i),
                    qp.normal,
                    qp.tangent,
                    qp.curvature,
                    material,
                );
            }
            let pen_w = qp.weight * gamma * inv_h3;
            for i in 0..DOFS_PER_CELL {
                for j in 0..=i {
                    nit[i][j] += qp.weight * (tr[i] * sh.v[j] + sh.v[i] * tr[j]);
                    pen[i][j] += pen_w * sh.v[i] * sh.v[j];
                }
            }
        }
        mirror(&mut nit);
        mirror(&mut pen);
        scatter16(&mut tri_nitsche, dofs, &nit);
        scatter16(&mut tri_penalty, dofs, &pen);
    }

    // Ghost penalty: two reference face matrices serve every face.
    let face_x = face_matrix(h, true);
    let face_y = face_matrix(h, false);
    for &fi in &geo.mesh.stab_faces {
        let face = geo.mesh.faces[fi as usize];
        let da = geo.dofs.cell_dofs(face.a);
        let db = geo.dofs.cell_dofs(face.b);
        let block = match face.axis {
            crate::mesh::FaceAxis::X => &face_x,
            crate::mesh::FaceAxis::Y => &face_y,
        };
        let mut all = [0u32; 32];
        all[..16].copy_from_slice(da);
        all[16..].copy_from_slice(db);
        // The two cells share the dofs of their common edge, so several
        // local entries land on the same global pair.  Fold the block onto
        // the unique dofs first, filling only the lower triangle and
        // mirroring: one contribution per global pair keeps the assembled
        // matrix bitwise symmetric.
        let mut unique: Vec<u32> = all.to_vec();
        unique.sort_unstable();
        unique.dedup();
        let group: [usize; 32] = std::array::from_fn(|p| unique.binary_search(&all[p]).unwrap());
        let nu = unique.len();
        let mut comp = vec![0.0f64; nu * nu];
        for p in 0..32 {
            for q in 0..32 {
                let (a, b) = (group[p], group[q]);
                if a >= b {
                    comp[a * nu + b] += block[p][q];
                }
            }
        }
        for a in 0..nu {
            for b in 0..a {
                comp[b * nu + a] = comp[a * nu + b];
            }
        }
        for a in 0..nu {
            for b in 0..nu {
                let v = comp[a * nu + b];
                if v != 0.0 {
                    tri_stab.push((unique[a], unique[b], v));
                }
            }
        }
    }

    AssembledSystem {
        n,
        interior: SparseSymmetric::from_triplets(n, tri_interior),
        nitsche: SparseSymmetric::from_triplets(n, tri_nitsche),
        penalty: SparseSymmetric::from_triplets(n, tri_penalty),
        stabilization: SparseSymmetric::from_triplets(n, tri_stab),
        rhs,
        gamma,
        beta_eff,
        h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::interpolate;
    use crate::domain::{Circle, Domain};
    use crate::mesh::{build_dof_map, ActiveMesh};
    use approx::assert_relative_eq;

    fn steel_like() -> Material {
        Material { e: 100.0, nu: 0.3, thickness: 0.1 }
    }

    /// A material normalized so kappa = 1 (isolates the formula structure).
    fn unit_kappa() -> Material {
        Material { e: 15.6, nu: 0.3, thickness: 1.0 }
    }

    #[test]
    fn material_constants() {
        let m = steel_like();
        assert_relative_eq!(m.kappa(), 1.0 / 156.0, max_relative = 1e-14);
        assert_relative_eq!(m.nu_factor(), 3.0 / 7.0, max_relative = 1e-14);
        let p = NitscheParams { gamma_scale: 100.0, beta: 0.1 };
        assert_relative_eq!(p.gamma(&m), 2000.0 / (7.0 * 156.0), max_relative = 1e-14);
        assert_relative_eq!(p.beta_eff(&m), 0.1 / 156.0, max_relative = 1e-14);
    }

    #[test]
    fn stress_components_from_reference_hessian() {
        let m = steel_like();
        let s = stress(&[0.02, -0.01, 0.005], &m);
        let k = 1.0 / 156.0;
        let tr = 0.025;
        assert_relative_eq!(s[0], k * (0.02 + 3.0 / 7.0 * tr), max_relative = 1e-13);
        assert_relative_eq!(s[1], k * -0.01, max_relative = 1e-13);
        assert_relative_eq!(s[2], k * (0.005 + 3.0 / 7.0 * tr), max_relative = 1e-13);
        // The inner product agrees with an explicit contraction.
        let hb = [0.1, 0.2, -0.3];
        let sb = stress(&hb, &m);
        let expect = sb[0] * 0.02 + 2.0 * sb[1] * -0.01 + sb[2] * 0.005;
        assert_relative_eq!(stress_inner(&[0.02, -0.01, 0.005], &hb, &m), expect, max_relative = 1e-13);
    }

    #[test]
    fn traction_of_a_pure_cubic_on_a_straight_edge() {
        // v = x^3 on a boundary with n = +x, t = +y, zero curvature:
        // T = kappa (1 + nu/(1-nu)) d/dx(lap v) = (10/7) * 6 = 60/7.
        let m = unit_kappa();
        let t = traction(
            &[6.0 * 0.7, 0.0, 0.0], // hessian at x = 0.7 (unused by shear part)
            &[6.0, 0.0, 0.0, 0.0],
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            0.0,
            &m,
        );
        assert_relative_eq!(t, 60.0 / 7.0, max_relative = 1e-13);
    }

    #[test]
    fn traction_matches_finite_difference_arc_derivative() {
        // Independent construction on a circle: T = n . div M + d/ds (M_nt)
        // with the tangential derivative taken by finite differences of the
        // full rotating-frame product n(s) . M(c(s)) . t(s).
        let m = steel_like();
        let circle = Circle::new(Point::new(0.2, -0.1), 0.7);
        // A test field with nonconstant third derivatives.
        let hess = |p: Point| -> [f64; 3] {
            // v = x^4 y + 2 x y^3 + x^2 y^2
            let (x, y) = (p.x, p.y);
            [
                12.0 * x * x * y + 2.0 * y * y,
                4.0 * x.powi(3) + 6.0 * y * y + 4.0 * x * y,
                12.0 * x * y + 2.0 * x * x,
            ]
        };
        let third = |p: Point| -> [f64; 4] {
            let (x, y) = (p.x, p.y);
            [
                24.0 * x * y,
                12.0 * x * x + 4.0 * y,
                6.0 * 2.0 * y + 4.0 * x,
                12.0 * x,
            ]
        };
        for angle in [0.3, 1.2, 2.8, 4.4] {
            let p = circle.boundary_point(angle);
            let n = circle.boundary_normal(angle);
            let t = circle.boundary_tangent(angle);
            let mine = traction(&hess(p), &third(p), n, t, 1.0 / 0.7, &m);

            // Reference: n . (div M) by differentiating the moment field.
            let k = m.kappa();
            let nf = m.nu_factor();
            let th = third(p);
            let div_m = Vec2::new(
                k * (th[0] + nf * (th[0] + th[2])) + k * th[2],
                k * th[1] + k * (th[3] + nf * (th[1] + th[3])),
            );
            let shear_ref = n.dot(&div_m);
            // d/ds of M_nt with everything rotating, by central difference.
            let ds = 1e-5;
            let mnt = |s: f64| -> f64 {
                let q = circle.boundary_point(s);
                let nn = circle.boundary_normal(s);
                let tt = circle.boundary_tangent(s);
                let mm = stress(&hess(q), &m);
                nn.x * (mm[0] * tt.x + mm[1] * tt.y) + nn.y * (mm[1] * tt.x + mm[2] * tt.y)
            };
            let dmnt = (mnt(angle + ds) - mnt(angle - ds)) / (2.0 * ds * 0.7);
            assert_relative_eq!(mine, shear_ref + dmnt, max_relative = 1e-5);
        }
    }

    #[test]
    fn full_cell_stiffness_annihilates_linears() {
        let m = steel_like();
        let h = 0.25;
        let k = full_cell_stiffness(h, &m, 8);
        // Local dof vector of v = 2 + 3x - y on the cell [0,h]^2.
        let corners = [(0.0, 0.0), (h, 0.0), (0.0, h), (h, h)];
        let mut d = [0.0; 16];
        for (c, &(x, y)) in corners.iter().enumerate() {
            d[4 * c] = 2.0 + 3.0 * x - y;
            d[4 * c + 1] = 3.0;
            d[4 * c + 2] = -1.0;
            d[4 * c + 3] = 0.0;
        }
        for i in 0..16 {
            let row: f64 = (0..16).map(|j| k[i][j] * d[j]).sum();
            assert_relative_eq!(row, 0.0, epsilon = 1e-12);
        }
        // Quadratic bending carries positive energy.
        let mut q = [0.0; 16];
        for (c, &(x, _)) in corners.iter().enumerate() {
            q[4 * c] = x * x;
            q[4 * c + 1] = 2.0 * x;
        }
        let energy: f64 = (0..16)
            .map(|i| (0..16).map(|j| q[i] * k[i][j] * q[j]).sum::<f64>())
            .sum();
        assert!(energy > 0.0);
    }

    #[test]
    fn face_matrix_annihilates_global_bicubics() {
        // Degrees of freedom sampled from one global polynomial x^3 y^3 have
        // no cross-face jumps in any derivative.
        let h = 0.5;
        for along_x in [true, false] {
            let fm = face_matrix(h, along_x);
            let nodes: [(f64, f64); 8] = if along_x {
                [
                    (0.0, 0.0),
                    (h, 0.0),
                    (0.0, h),
                    (h, h),
                    (h, 0.0),
                    (2.0 * h, 0.0),
                    (h, h),
                    (2.0 * h, h),
                ]
            } else {
                [
                    (0.0, 0.0),
                    (h, 0.0),
                    (0.0, h),
                    (h, h),
                    (0.0, h),
                    (h, h),
                    (0.0, 2.0 * h),
                    (h, 2.0 * h),
                ]
            };
            let mut d = [0.0; 32];
            for (c, &(x, y)) in nodes.iter().enumerate() {
                d[4 * c] = x.powi(3) * y.powi(3);
                d[4 * c + 1] = 3.0 * x * x * y.powi(3);
                d[4 * c + 2] = 3.0 * x.powi(3) * y * y;
                d[4 * c + 3] = 9.0 * x * x * y * y;
            }
            for i in 0..32 {
                let row: f64 = (0..32).map(|j| fm[i][j] * d[j]).sum();
                assert_relative_eq!(row, 0.0, epsilon = 1e-10);
            }
            // A one-sided bump does jump.
            let mut e = [0.0; 32];
            e[0] = 1.0;
            let energy: f64 = (0..32)
                .map(|i| (0..32).map(|j| e[i] * fm[i][j] * e[j]).sum::<f64>())
                .sum();
            assert!(energy > 0.0);
        }
    }

    #[test]
    fn assembled_stabilization_matches_dense_per_face_reference() {
        // Independent reference: loop the faces of a 2x2 block, integrating
        // the jumps with a different rule directly on the physical cells.
        let origin = Point::new(0.25, -0.5);
        let h = 0.125;
        let mesh = ActiveMesh::uniform_block(origin, h, 2, 2, false);
        let dofs = build_dof_map(&mesh);
        let geo = LevelGeometry {
            dofs,
            boundary: crate::boundary::DiscreteBoundary { mode: crate::boundary::BoundaryMode::C1, segments: vec![] },
            decomps: vec![None; mesh.cells.len()],
            mesh,
        };
        let m = steel_like();
        let params = NitscheParams { gamma_scale: 100.0, beta: 0.1 };
        let sys = assemble(&geo, &m, &params, &|_| 0.0, 8);

        let n = geo.dofs.n_dofs;
        let mut dense = vec![vec![0.0; n]; n];
        let rule = gauss_for_degree(13); // deliberately finer than assembly
        for f in &geo.mesh.faces {
            let ra = geo.mesh.cell_rect(f.a);
            let rb = geo.mesh.cell_rect(f.b);
            let da = geo.dofs.cell_dofs(f.a);
            let db = geo.dofs.cell_dofs(f.b);
            let (start, dir, orders): (Point, Vec2, [(usize, usize); 2]) = match f.axis {
                crate::mesh::FaceAxis::X => (Point::new(rb.min.x, rb.min.y), Vec2::new(0.0, 1.0), [(2, 0), (3, 0)]),
                crate::mesh::FaceAxis::Y => (Point::new(rb.min.x, rb.min.y), Vec2::new(1.0, 0.0), [(0, 2), (0, 3)]),
            };
            for gp in &rule {
                let p = Point::new(start.x + gp.x * h * dir.x, start.y + gp.x * h * dir.y);
                for (level, &(a, b)) in orders.iter().enumerate() {
                    let va = shape_values(&ra, p, a, b);
                    let vb = shape_values(&rb, p, a, b);
                    let scale = gp.w * h * h.powi(1 + 2 * level as i32);
                    let mut jump = vec![0.0; n];
                    for i in 0..16 {
                        jump[da[i] as usize] += va[i];
                        jump[db[i] as usize] -= vb[i];
                    }
                    for i in 0..n {
                        if jump[i] == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            dense[i][j] += scale * jump[i] * jump[j];
                        }
                    }
                }
            }
        }
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let assembled = sys.stabilization.get(i, j);
                worst = worst.max((assembled - dense[i][j]).abs());
                scale = scale.max(dense[i][j].abs());
            }
        }
        assert!(worst <= 1e-12 * scale, "max deviation {worst} at scale {scale}");
    }

    #[test]
    fn assembled_matrix_is_bitwise_symmetric() {
        let d = Circle::new(Point::new(0.5, 0.5), 0.5);
        let bbox = Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let geo = crate::pipeline::build_level_geometry(&d, 0.125, &bbox, crate::boundary::BoundaryMode::C1).unwrap();
        let m = steel_like();
        let params = NitscheParams { gamma_scale: 100.0, beta: 0.1 };
        let sys = assemble(&geo, &m, &params, &|_| 1.0, 8);
        assert_eq!(sys.matrix().symmetry_defect(), 0.0);
    }

    #[test]
    fn boundary_penalty_vanishes_on_interpolated_zero_trace() {
        // Interpolating a function that vanishes on the boundary circle
        // makes the penalty energy small (fourth-order in h), while a
        // constant keeps it order one.  Qualitative sanity of scaling.
        let d = Circle::new(Point::new(0.5, 0.5), 0.5);
        let bbox = Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let geo = crate::pipeline::build_level_geometry(&d, 0.0625, &bbox, crate::boundary::BoundaryMode::C1).unwrap();
        let m = steel_like();
        let params = NitscheParams { gamma_scale: 100.0, beta: 0.1 };
        let sys = assemble(&geo, &m, &params, &|_| 0.0, 8);
        // w = R^2 - |p - c|^2 vanishes on the circle.
        let w = interpolate(
            &|p: Point| {
                let dx = p.x - 0.5;
                let dy = p.y - 0.5;
                [0.25 - dx * dx - dy * dy, -2.0 * dx, -2.0 * dy, 0.0]
            },
            &geo.mesh,
            &geo.dofs,
        );
        let ones = interpolate(&|_| [1.0, 0.0, 0.0, 0.0], &geo.mesh, &geo.dofs);
        let pen_w = sys.penalty.quadratic_form(&w, &w);
        let pen_1 = sys.penalty.quadratic_form(&ones, &ones);
        assert!(pen_w < 1e-4 * pen_1, "pen_w = {pen_w}, pen_1 = {pen_1}");
    }
}
