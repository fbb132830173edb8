//! Reference solution, error norms, and the convergence study driver.
//!
//! The closed-form deflection of a uniformly loaded, simply supported
//! circular plate anchors every accuracy measurement: discretization errors
//! in weighted Sobolev norms, boundary reconstruction accuracy, and the
//! center deflection.  The study driver solves a sequence of uniformly
//! refined levels and fits observed convergence orders.

use std::time::Instant;

use crate::basis::{interpolate, shape_derivs, shape_values, FieldState, DOFS_PER_CELL};
use crate::boundary::{boundary_quadrature, BoundaryMode};
use crate::decomp::{area_quadrature, tensor_cell_quadrature};
use crate::domain::{Circle, Domain, Point, Rect, Vec2};
use crate::error::Error;
use crate::forms::{assemble, stress_inner, traction, AssembledSystem, Material, NitscheParams};
use crate::pipeline::{build_level_geometry, LevelGeometry};
use crate::solver::{condition_estimate, solve};

/// Closed-form deflection of a uniformly loaded, simply supported circular
/// plate: a polynomial in the squared distance to the plate center.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    center: Point,
    a0: f64,
    a2: f64,
    a4: f64,
    load: f64,
}

impl ExactSolution {
    /// Build the reference deflection for a plate occupying `plate` under
    /// uniform transverse pressure.
    ///
    /// # Arguments
    ///
    /// * `material` - Plate material (determines the bending stiffness).
    /// * `pressure` - Uniform transverse load.
    /// * `plate` - The circular region the plate occupies.
    pub fn new(material: &Material, pressure: f64, plate: &Circle) -> ExactSolution {
        let r = plate.radius;
        let c = pressure * r.powi(4) / (64.0 * material.kappa());
        let a = (5.0 + material.nu) / (1.0 + material.nu);
        ExactSolution {
            center: plate.center,
            a0: c * a,
            a2: -c * (1.0 + a) / (r * r),
            a4: c / r.powi(4),
            load: pressure / (1.0 - material.nu),
        }
    }

    /// Plate center.
    pub fn center(&self) -> Point {
        self.center
    }

    /// Deflection at the plate center (the maximum).
    pub fn center_value(&self) -> f64 {
        self.a0
    }

    /// The constant load density driving the scaled bending operator, equal
    /// to `pressure / (1 - nu)`.
    ///
    /// The bilinear form divides the classical flexural rigidity by
    /// `1 - nu`, so the matching right-hand side carries the same factor.
    pub fn load_density(&self) -> f64 {
        self.load
    }

    /// Deflection at `p`.
    pub fn value(&self, p: Point) -> f64 {
        let d = p - self.center;
        let rho2 = d.norm_squared();
        self.a0 + rho2 * (self.a2 + rho2 * self.a4)
    }

    /// Deflection gradient at `p`.
    pub fn gradient(&self, p: Point) -> Vec2 {
        let d = p - self.center;
        let rho2 = d.norm_squared();
        d * (2.0 * self.a2 + 4.0 * self.a4 * rho2)
    }

    /// Deflection Hessian `(u_xx, u_xy, u_yy)` at `p`.
    pub fn hessian(&self, p: Point) -> [f64; 3] {
        let d = p - self.center;
        let rho2 = d.norm_squared();
        let base = 2.0 * self.a2 + 4.0 * self.a4 * rho2;
        [
            base + 8.0 * self.a4 * d.x * d.x,
            8.0 * self.a4 * d.x * d.y,
            base + 8.0 * self.a4 * d.y * d.y,
        ]
    }

    /// Third derivatives `(u_xxx, u_xxy, u_xyy, u_yyy)` at `p`.
    pub fn third(&self, p: Point) -> [f64; 4] {
        let d = p - self.center;
        [
            24.0 * self.a4 * d.x,
            8.0 * self.a4 * d.y,
            8.0 * self.a4 * d.x,
            24.0 * self.a4 * d.y,
        ]
    }

    /// All derivatives up to third order at `p`.
    pub fn state(&self, p: Point) -> FieldState {
        FieldState {
            value: self.value(p),
            grad: self.gradient(p),
            hess: self.hessian(p),
            third: self.third(p),
        }
    }

    /// Nodal data `[v, v_x, v_y, v_xy]` for Hermite interpolation.
    pub fn nodal(&self, p: Point) -> [f64; 4] {
        let g = self.gradient(p);
        [self.value(p), g.x, g.y, self.hessian(p)[1]]
    }
}

/// Relative errors of a discrete field against the reference solution.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    /// Relative L2 error over the discrete region.
    pub l2: f64,
    /// Relative H1 seminorm error.
    pub h1: f64,
    /// Relative broken H2 seminorm error.
    pub h2b: f64,
    /// Relative error in the method's energy norm (moment-curvature form
    /// plus ghost penalty plus weighted boundary terms).
    pub energy: f64,
}

/// Squared Frobenius norm of a symmetric 2x2 matrix stored as (xx, xy, yy).
fn hess_sq(h: &[f64; 3]) -> f64 {
    h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]
}

/// Measure the error of a coefficient vector in relative L2, H1, broken H2,
/// and energy norms.
///
/// Area integrals run over full cells and straightened (polygonal) cut-cell
/// triangulations; the energy norm adds the ghost-penalty form of the
/// discrete field, and traction and deflection mismatch terms integrated
/// along the as-built curved boundary with the natural `h^3 / kappa`-scaled
/// and `gamma / h^3` weights.  The reference field carries no ghost-penalty
/// energy: it is smooth, so its inter-cell jumps vanish.
///
/// # Arguments
///
/// * `geo` - Level geometry the coefficients live on.
/// * `system` - Assembled system (supplies the ghost-penalty form and weights).
/// * `u` - Discrete coefficient vector.
/// * `exact` - Reference solution.
/// * `material` - Plate material.
/// * `degree` - Quadrature degree for the error integrals.
pub fn error_norms(
    geo: &LevelGeometry,
    system: &AssembledSystem,
    u: &[f64],
    exact: &ExactSolution,
    material: &Material,
    degree: usize,
) -> ErrorReport {
    let mesh = &geo.mesh;
    let mut num = [0.0f64; 4];
    let mut den = [0.0f64; 4];

    for (ci, _) in mesh.cells.iter().enumerate() {
        let rect = mesh.cell_rect(ci as u32);
        let dofs = geo.dofs.cell_dofs(ci as u32);
        let local: [f64; DOFS_PER_CELL] = std::array::from_fn(|i| u[dofs[i] as usize]);
        let rule = match &geo.decomps[ci] {
            None => tensor_cell_quadrature(&rect, degree),
            Some(decomp) => area_quadrature(&decomp.straightened(), degree),
        };
        for q in rule {
            let sh = shape_derivs(&rect, q.point);
            let fh = FieldState::from_shapes(&sh, &local);
            let fe = exact.state(q.point);
            let ev = fh.value - fe.value;
            let eg = fh.grad - fe.grad;
            let eh = [
                fh.hess[0] - fe.hess[0],
                fh.hess[1] - fe.hess[1],
                fh.hess[2] - fe.hess[2],
            ];
            num[0] += q.weight * ev * ev;
            den[0] += q.weight * fe.value * fe.value;
            num[1] += q.weight * eg.norm_squared();
            den[1] += q.weight * fe.grad.norm_squared();
            num[2] += q.weight * hess_sq(&eh);
            den[2] += q.weight * hess_sq(&fe.hess);
            num[3] += q.weight * stress_inner(&eh, &eh, material);
            den[3] += q.weight * stress_inner(&fe.hess, &fe.hess, material);
        }
    }

    // Ghost-penalty energy of the discrete field (the smooth reference
    // contributes none).
    num[3] += system.beta_eff * system.stabilization.quadratic_form(u, u);

    // Boundary terms of the energy norm.
    let h = mesh.h;
    let w_traction = h.powi(3) / (2.0 * material.kappa() * (1.0 + material.nu_factor()));
    let w_value = system.gamma / h.powi(3);
    for seg in &geo.boundary.segments {
        let rect = mesh.cell_rect(seg.host);
        let dofs = geo.dofs.cell_dofs(seg.host);
        let local: [f64; DOFS_PER_CELL] = std::array::from_fn(|i| u[dofs[i] as usize]);
        for qp in boundary_quadrature(seg, degree) {
            let sh = shape_derivs(&rect, qp.point);
            let fh = FieldState::from_shapes(&sh, &local);
            let fe = exact.state(qp.point);
            let tr_h = traction(&fh.hess, &fh.third, qp.normal, qp.tangent, qp.curvature, material);
            let tr_e = traction(&fe.hess, &fe.third, qp.normal, qp.tangent, qp.curvature, material);
            let e_tr = tr_h - tr_e;
            let e_v = fh.value - fe.value;
            num[3] += qp.weight * (w_traction * e_tr * e_tr + w_value * e_v * e_v);
            den[3] += qp.weight * (w_traction * tr_e * tr_e + w_value * fe.value * fe.value);
        }
    }

    let rel = |k: usize| (num[k] / den[k]).sqrt();
    ErrorReport { l2: rel(0), h1: rel(1), h2b: rel(2), energy: rel(3) }
}

/// Evaluate a discrete field at a point of the active mesh.
///
/// Returns `None` when no active cell contains the point.
pub fn evaluate_at(geo: &LevelGeometry, u: &[f64], p: Point) -> Option<f64> {
    let mesh = &geo.mesh;
    let fx = (p.x - mesh.origin.x) / mesh.h;
    let fy = (p.y - mesh.origin.y) / mesh.h;
    if fx < 0.0 || fy < 0.0 {
        return None;
    }
    let ix0 = (fx.floor() as u32).min(mesh.nx.saturating_sub(1));
    let iy0 = (fy.floor() as u32).min(mesh.ny.saturating_sub(1));
    // A point on a grid line belongs to several cells; probe the containing
    // cell first, then its lower neighbors which share the point.
    let candidates = [
        (ix0, iy0),
        (ix0.wrapping_sub(1), iy0),
        (ix0, iy0.wrapping_sub(1)),
        (ix0.wrapping_sub(1), iy0.wrapping_sub(1)),
    ];
    for &(ix, iy) in &candidates {
        let Some(ci) = mesh.active_index(ix, iy) else {
            continue;
        };
        let rect = mesh.cell_rect(ci);
        if !rect.contains(p, 1e-12 * mesh.h) {
            continue;
        }
        let dofs = geo.dofs.cell_dofs(ci);
        let vals = shape_values(&rect, p, 0, 0);
        let mut acc = 0.0;
        for i in 0..DOFS_PER_CELL {
            acc += vals[i] * u[dofs[i] as usize];
        }
        return Some(acc);
    }
    None
}

/// Parameters of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct StudyConfig {
    pub material: Material,
    /// Uniform transverse pressure.
    pub pressure: f64,
    /// The circular plate.
    pub plate: Circle,
    pub params: NitscheParams,
    /// Background-grid bounding box.
    pub bbox: Rect,
    /// Coarsest cell size; level `k` uses `h_start / 2^k`.
    pub h_start: f64,
    /// Number of refinement levels.
    pub levels: usize,
    pub mode: BoundaryMode,
    /// Quadrature degree for assembly and error integration.
    pub quad_degree: usize,
}

impl Default for StudyConfig {
    /// The reference configuration: a unit-pressure plate of radius 1/2
    /// centered in the unit square.
    fn default() -> StudyConfig {
        StudyConfig {
            material: Material { e: 100.0, nu: 0.3, thickness: 0.1 },
            pressure: 1.0,
            plate: Circle::new(Point::new(0.5, 0.5), 0.5),
            params: NitscheParams { gamma_scale: 100.0, beta: 0.1 },
            bbox: Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)),
            h_start: 0.125,
            levels: 4,
            mode: BoundaryMode::C1,
            quad_degree: 8,
        }
    }
}

impl StudyConfig {
    /// Cell size of refinement level `level`.
    pub fn h_at(&self, level: usize) -> f64 {
        self.h_start / (1u64 << level) as f64
    }

    /// The reference solution for this configuration.
    pub fn exact(&self) -> ExactSolution {
        ExactSolution::new(&self.material, self.pressure, &self.plate)
    }
}

/// Measured quantities of one solved refinement level.
#[derive(Debug, Clone, Copy)]
pub struct LevelReport {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub errors: ErrorReport,
    /// Spectral condition number estimate of the system matrix.
    pub cond_estimate: f64,
    /// Normwise relative backward error of the linear solve.
    pub rel_residual: f64,
    pub solve_seconds: f64,
    /// Discrete deflection at the plate center.
    pub center_value: f64,
}

/// One solved level with its geometry, system, and coefficients.
#[derive(Debug)]
pub struct LevelSolution {
    pub geo: LevelGeometry,
    pub system: AssembledSystem,
    pub u: Vec<f64>,
    pub report: LevelReport,
}

/// Build, assemble, and solve one refinement level.
///
/// # Errors
///
/// Geometry failures from [`build_level_geometry`] and solver failures
/// (loss of positive definiteness, iteration limits).
pub fn solve_level(cfg: &StudyConfig, level: usize) -> Result<LevelSolution, Error> {
    let h = cfg.h_at(level);
    let geo = build_level_geometry(&cfg.plate, h, &cfg.bbox, cfg.mode)?;
    let exact = cfg.exact();
    let load = exact.load_density();
    let system = assemble(&geo, &cfg.material, &cfg.params, &|_| load, cfg.quad_degree);
    let matrix = system.matrix();
    let clock = Instant::now();
    let solved = solve(&matrix, &system.rhs)?;
    let solve_seconds = clock.elapsed().as_secs_f64();
    let cond_estimate = condition_estimate(&matrix);
    let errors = error_norms(&geo, &system, &solved.x, &exact, &cfg.material, cfg.quad_degree);
    let center_value = evaluate_at(&geo, &solved.x, exact.center())
        .expect("plate center lies in an active cell");
    let report = LevelReport {
        level,
        h,
        n_dofs: system.n,
        errors,
        cond_estimate,
        rel_residual: solved.rel_residual,
        solve_seconds,
        center_value,
    };
    Ok(LevelSolution { geo, system, u: solved.x, report })
}

/// Fitted convergence orders of the four error norms.
#[derive(Debug, Clone, Copy)]
pub struct Slopes {
    pub l2: f64,
    pub h1: f64,
    pub h2b: f64,
    pub energy: f64,
}

/// A completed convergence study.
#[derive(Debug)]
pub struct StudyResult {
    pub levels: Vec<LevelSolution>,
    pub slopes: Slopes,
}

/// Least-squares slope of `log(err)` against `log(h)`: the observed
/// convergence order across a refinement sequence.
pub fn fit_rate(hs: &[f64], errs: &[f64]) -> f64 {
    assert!(hs.len() == errs.len() && hs.len() >= 2, "need at least two levels");
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Observed order between two consecutive levels of a halving sequence.
pub fn rate_between(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Fit convergence orders from a sequence of level reports.
pub fn fitted_slopes(reports: &[LevelReport]) -> Slopes {
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let pick = |f: &dyn Fn(&ErrorReport) -> f64| -> f64 {
        let errs: Vec<f64> = reports.iter().map(|r| f(&r.errors)).collect();
        fit_rate(&hs, &errs)
    };
    Slopes {
        l2: pick(&|e| e.l2),
        h1: pick(&|e| e.h1),
        h2b: pick(&|e| e.h2b),
        energy: pick(&|e| e.energy),
    }
}

/// Run the full refinement sequence of a configuration.
///
/// # Errors
///
/// The first geometry or solver failure aborts the study.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyResult, Error> {
    let mut levels = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        levels.push(solve_level(cfg, level)?);
    }
    let reports: Vec<LevelReport> = levels.iter().map(|l| l.report).collect();
    let slopes = fitted_slopes(&reports);
    Ok(StudyResult { levels, slopes })
}

/// Interpolation errors of the reference solution on one level.
///
/// # Errors
///
/// Geometry failures from [`build_level_geometry`].
pub fn interpolation_errors(cfg: &StudyConfig, level: usize) -> Result<ErrorReport, Error> {
    let h = cfg.h_at(level);
    let geo = build_level_geometry(&cfg.plate, h, &cfg.bbox, cfg.mode)?;
    let exact = cfg.exact();
    let load = exact.load_density();
    let system = assemble(&geo, &cfg.material, &cfg.params, &|_| load, cfg.quad_degree);
    let u = interpolate(&|p| exact.nodal(p), &geo.mesh, &geo.dofs);
    Ok(error_norms(&geo, &system, &u, &exact, &cfg.material, cfg.quad_degree))
}

/// Boundary reconstruction errors of one level.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryAccuracy {
    /// Largest absolute signed distance from the discrete to the true
    /// boundary.
    pub max_distance: f64,
    /// Largest deviation of the discrete outward normal from the true
    /// normal at the nearest boundary point (Euclidean).
    pub max_normal_error: f64,
    /// Arc-length average of the absolute signed distance.
    ///
    /// Fitting a convergence order to the maxima is noisy: the worst
    /// segment's angular extent jitters from level to level with how the
    /// grid happens to slice the boundary.  The averages smooth over all
    /// segments and expose the underlying order cleanly.
    pub mean_distance: f64,
    /// Arc-length average of the normal deviation.
    pub mean_normal_error: f64,
}

/// Sample every discrete-boundary segment against the true boundary.
///
/// # Arguments
///
/// * `domain` - The true domain.
/// * `geo` - Level geometry holding the discrete boundary.
/// * `samples` - Interior samples per segment for the maxima; the averages
///   integrate with a fixed-degree quadrature instead.
pub fn boundary_accuracy(domain: &dyn Domain, geo: &LevelGeometry, samples: usize) -> BoundaryAccuracy {
    let mut max_distance = 0.0f64;
    let mut max_normal_error = 0.0f64;
    let mut sum_distance = 0.0f64;
    let mut sum_normal = 0.0f64;
    let mut length = 0.0f64;
    let normal_gap = |p: Point, n_disc: Vec2| -> f64 {
        let n_true = domain.boundary_normal(domain.boundary_param(p));
        (n_disc - n_true).norm()
    };
    for seg in &geo.boundary.segments {
        for i in 1..=samples {
            let tau = i as f64 / (samples + 1) as f64;
            let p = seg.curve.eval(tau);
            max_distance = max_distance.max(domain.signed_distance(p).abs());
            let (_, n_disc, _) = seg.curve.frame(tau);
            max_normal_error = max_normal_error.max(normal_gap(p, n_disc));
        }
        for qp in boundary_quadrature(seg, 8) {
            sum_distance += qp.weight * domain.signed_distance(qp.point).abs();
            sum_normal += qp.weight * normal_gap(qp.point, qp.normal);
            length += qp.weight;
        }
    }
    BoundaryAccuracy {
        max_distance,
        max_normal_error,
        mean_distance: sum_distance / length,
        mean_normal_error: sum_normal / length,
    }
}
