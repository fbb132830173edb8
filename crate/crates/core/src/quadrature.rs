//! Gauss quadrature rules.
//!
//! One-dimensional Gauss-Legendre rules on [0, 1] (nodes computed by Newton
//! iteration on the Legendre polynomial, no coefficient tables), tensor
//! rules on squares, and collapsed (Duffy) tensor rules on the reference
//! triangle `{(u, v) : u, v >= 0, u + v <= 1}` that are exact for any
//! requested total polynomial degree.

/// A quadrature node on [0, 1] with its weight.
#[derive(Debug, Clone, Copy)]
pub struct GaussPoint {
    pub x: f64,
    pub w: f64,
}

/// `n`-point Gauss-Legendre rule on [0, 1]; exact for degree `2n - 1`.
pub fn gauss_legendre_01(n: usize) -> Vec<GaussPoint> {
    assert!(n >= 1, "need at least one Gauss point");
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        // Initial guess for the k-th root of P_n on [-1, 1].
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { p0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1].
        pts.push(GaussPoint { x: 0.5 * (x + 1.0), w: 0.5 * w });
    }
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    pts
}

/// Smallest 1D rule exact for polynomial degree `degree`.
pub fn gauss_for_degree(degree: usize) -> Vec<GaussPoint> {
    gauss_legendre_01(degree / 2 + 1)
}

/// Quadrature node on the reference triangle.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePoint {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// Rule on the reference triangle exact for total degree `degree`.
///
/// Built by the Duffy map `(xi, eta) -> (xi, eta (1 - xi))` whose Jacobian
/// `1 - xi` raises the xi-degree by one; weights stay positive and the sum
/// of weights is the reference area 1/2.
pub fn triangle_rule(degree: usize) -> Vec<TrianglePoint> {
    let gx = gauss_for_degree(degree + 1);
    let gy = gauss_for_degree(degree);
    let mut pts = Vec::with_capacity(gx.len() * gy.len());
    for a in &gx {
        for b in &gy {
            pts.push(TrianglePoint {
                u: a.x,
                v: b.x * (1.0 - a.x),
                w: a.w * b.w * (1.0 - a.x),
            });
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rules_integrate_monomials_exactly() {
        for n in 1..=8 {
            let rule = gauss_legendre_01(n);
            assert_relative_eq!(rule.iter().map(|p| p.w).sum::<f64>(), 1.0, epsilon = 1e-14);
            for k in 0..=(2 * n - 1) {
                let num: f64 = rule.iter().map(|p| p.w * p.x.powi(k as i32)).sum();
                let exact = 1.0 / (k as f64 + 1.0);
                assert_relative_eq!(num, exact, epsilon = 1e-13, max_relative = 1e-13);
            }
        }
    }

    /// Integral of u^a v^b over the reference triangle.
    fn tri_monomial_exact(a: u32, b: u32) -> f64 {
        // a! b! / (a + b + 2)!
        let fact = |m: u32| (1..=m).map(|k| k as f64).product::<f64>().max(1.0);
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_integrate_monomials_exactly() {
        for degree in [1usize, 2, 4, 8, 10] {
            let rule = triangle_rule(degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let num: f64 = rule
                        .iter()
                        .map(|p| p.w * p.u.powi(a as i32) * p.v.powi(b as i32))
                        .sum();
                    let exact = tri_monomial_exact(a, b);
                    assert_relative_eq!(num, exact, epsilon = 1e-14, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn triangle_weights_are_positive_and_sum_to_half() {
        let rule = triangle_rule(8);
        assert!(rule.iter().all(|p| p.w > 0.0));
        assert_relative_eq!(rule.iter().map(|p| p.w).sum::<f64>(), 0.5, epsilon = 1e-14);
    }
}
