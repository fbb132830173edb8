//! Sparse symmetric storage, a profile Cholesky factorization with
//! iterative refinement, a Jacobi-preconditioned conjugate gradient
//! fallback for large systems, and a power-iteration condition estimator.

use crate::error::SolverError;

/// Symmetric sparse matrix in CSR format storing both triangles.
#[derive(Debug, Clone)]
pub struct SparseSymmetric {
    pub n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl SparseSymmetric {
    /// Build from (row, col, value) triplets, summing duplicates.
    ///
    /// Duplicates are combined in insertion order (stable sort), so a
    /// symmetric triplet stream yields a bitwise symmetric matrix.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> SparseSymmetric {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col: Vec<u32> = Vec::new();
        let mut val: Vec<f64> = Vec::new();
        let mut iter = triplets.into_iter().peekable();
        while let Some((i, j, v)) = iter.next() {
            let mut sum = v;
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    sum += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            col.push(j);
            val.push(sum);
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymmetric { n, row_ptr, col, val }
    }

    /// An all-zero matrix.
    pub fn zero(n: usize) -> SparseSymmetric {
        SparseSymmetric { n, row_ptr: vec![0; n + 1], col: Vec::new(), val: Vec::new() }
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col[lo..hi].binary_search(&(j as u32)) {
            Ok(k) => self.val[lo + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k] as usize];
            }
            y[i] = acc;
        }
        y
    }

    /// x^T A y.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(ay.iter()).map(|(a, b)| a * b).sum()
    }

    /// Maximum relative asymmetry max |A_ij - A_ji| / max |A_ij|.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k] as usize;
                worst = worst.max((self.val[k] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Largest absolute diagonal entry.
    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n).fold(0.0f64, |m, i| m.max(self.get(i, i).abs()))
    }

    /// Infinity norm (largest absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).fold(0.0f64, |m, i| {
            let row: f64 = (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.val[k].abs()).sum();
            m.max(row)
        })
    }

    /// Weighted sum of several matrices with congruent or different patterns.
    pub fn sum_scaled(parts: &[(&SparseSymmetric, f64)]) -> SparseSymmetric {
        let n = parts.first().map(|(m, _)| m.n).unwrap_or(0);
        let mut row_ptr = vec![0usize; n + 1];
        let mut col: Vec<u32> = Vec::new();
        let mut val: Vec<f64> = Vec::new();
        let mut merged: Vec<(u32, f64)> = Vec::new();
        for i in 0..n {
            merged.clear();
            for (m, s) in parts {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    merged.push((m.col[k], s * m.val[k]));
                }
            }
            merged.sort_by_key(|&(j, _)| j);
            let mut idx = 0;
            while idx < merged.len() {
                let j = merged[idx].0;
                let mut sum = 0.0;
                while idx < merged.len() && merged[idx].0 == j {
                    sum += merged[idx].1;
                    idx += 1;
                }
                col.push(j);
                val.push(sum);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymmetric { n, row_ptr, col, val }
    }
}

/// Profile (skyline) Cholesky factorization A = L L^T.
#[derive(Debug)]
pub struct ProfileCholesky {
    n: usize,
    /// First stored column of each row.
    first: Vec<u32>,
    /// Start of each row's values; row i occupies first[i]..=i.
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl ProfileCholesky {
    /// Factor a symmetric positive definite matrix.
    ///
    /// # Errors
    ///
    /// [`SolverError::NotPositiveDefinite`] when a pivot falls below the
    /// breakdown threshold (relative to the largest diagonal entry).
    pub fn factor(a: &SparseSymmetric) -> Result<ProfileCholesky, SolverError> {
        let n = a.n;
        let mut first = vec![0u32; n];
        for i in 0..n {
            let lo = a.row_ptr[i];
            let hi = a.row_ptr[i + 1];
            first[i] = if hi > lo { a.col[lo].min(i as u32) } else { i as u32 };
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] as usize + 1);
        }
        let mut vals = vec![0.0f64; start[n]];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col[k] as usize;
                if j <= i {
                    vals[start[i] + (j - first[i] as usize)] = a.val[k];
                }
            }
        }

        let pivot_floor = 1e-14 * a.max_abs_diag().max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = first[i] as usize;
            for j in fi..i {
                let fj = first[j] as usize;
                let lo = fi.max(fj);
                let mut sum = vals[start[i] + (j - fi)];
                for k in lo..j {
                    sum -= vals[start[i] + (k - fi)] * vals[start[j] + (k - fj)];
                }
                vals[start[i] + (j - fi)] = sum / vals[start[j] + (j - fj)];
            }
            let mut d = vals[start[i] + (i - fi)];
            for k in fi..i {
                let l = vals[start[i] + (k - fi)];
                d -= l * l;
            }
            if d <= pivot_floor {
                return Err(SolverError::NotPositiveDefinite { index: i, pivot: d });
            }
            vals[start[i] + (i - fi)] = d.sqrt();
        }
        Ok(ProfileCholesky { n, first, start, vals })
    }

    /// Solve A x = b with the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        // Forward: L y = b.
        for i in 0..self.n {
            let fi = self.first[i] as usize;
            let mut sum = x[i];
            for k in fi..i {
                sum -= self.vals[self.start[i] + (k - fi)] * x[k];
            }
            x[i] = sum / self.vals[self.start[i] + (i - fi)];
        }
        // Backward: L^T x = y.
        for i in (0..self.n).rev() {
            let fi = self.first[i] as usize;
            x[i] /= self.vals[self.start[i] + (i - fi)];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.vals[self.start[i] + (k - fi)] * xi;
            }
        }
        x
    }
}

/// Residual b - A x with compensated (Neumaier) accumulation per row.
pub fn residual_compensated(a: &SparseSymmetric, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; a.n];
    for i in 0..a.n {
        let mut sum = b[i];
        let mut comp = 0.0;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let term = -a.val[k] * x[a.col[k] as usize];
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        r[i] = sum + comp;
    }
    r
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Normwise relative backward error `|b - A x| / (|A| |x| + |b|)` in the
/// infinity norm.
///
/// This is the conditioning-independent quality measure of a computed
/// solution: the naive quotient `|r| / |b|` has a storage floor of
/// `eps |A| |x| / |b|`, which grows with the operator norm no matter how
/// the solve is refined.
pub fn backward_error(a: &SparseSymmetric, x: &[f64], b: &[f64]) -> f64 {
    let r = residual_compensated(a, x, b);
    let denom = (a.norm_inf() * norm_inf(x) + norm_inf(b)).max(f64::MIN_POSITIVE);
    norm_inf(&r) / denom
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    DirectCholesky,
    ConjugateGradient,
}

/// A solved linear system.
#[derive(Debug)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Normwise relative backward error of the returned solution (see
    /// [`backward_error`]).
    pub rel_residual: f64,
    pub method: SolveMethod,
}

/// Dimension above which the direct factorization yields to conjugate
/// gradients.
pub const DIRECT_LIMIT: usize = 200_000;

/// Solve A x = b, choosing the method by problem size.
///
/// The direct path runs two rounds of iterative refinement with
/// compensated residuals, which keeps the backward error near rounding
/// level even for ill-conditioned fourth-order systems.
pub fn solve(a: &SparseSymmetric, b: &[f64]) -> Result<SolveReport, SolverError> {
    if a.n <= DIRECT_LIMIT {
        let chol = ProfileCholesky::factor(a)?;
        let mut x = chol.solve(b);
        for _ in 0..2 {
            let r = residual_compensated(a, &x, b);
            let dx = chol.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx.iter()) {
                *xi += di;
            }
        }
        let rel = backward_error(a, &x, b);
        Ok(SolveReport { x, rel_residual: rel, method: SolveMethod::DirectCholesky })
    } else {
        let (x, _) = pcg(a, b, 1e-13, 40 * a.n)?;
        let rel = backward_error(a, &x, b);
        Ok(SolveReport { x, rel_residual: rel, method: SolveMethod::ConjugateGradient })
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &SparseSymmetric, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64), SolverError> {
    let n = a.n;
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let norm_b = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag.iter()).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
    let mut last_rel = 1.0;
    for _ in 0..max_iter {
        last_rel = norm2(&r) / norm_b;
        if last_rel <= rel_tol {
            return Ok((x, last_rel));
        }
        let ap = a.matvec(&p);
        let p_ap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::IterationLimit { residual: last_rel, iters: max_iter })
}

/// Deterministic pseudo-random unit vector (splitmix64 stream).
fn seeded_unit_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    let mut v: Vec<f64> = (0..n).map(|_| (next() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect();
    let norm = norm2(&v).max(f64::MIN_POSITIVE);
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    v
}

/// Estimate the spectral condition number of a symmetric positive definite
/// matrix by power iteration on A and on A^{-1} (through a factorization).
///
/// Returns infinity when the factorization breaks down (singular or
/// indefinite matrix).
pub fn condition_estimate(a: &SparseSymmetric) -> f64 {
    let chol = match ProfileCholesky::factor(a) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    let lambda_max = rayleigh_power(a.n, |v| a.matvec(v));
    let inv_lambda_min = rayleigh_power(a.n, |v| chol.solve(v));
    lambda_max * inv_lambda_min
}

/// Largest Rayleigh quotient of a symmetric positive operator by power
/// iteration with a deterministic start and a relative-change stop.
fn rayleigh_power(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mut v = seeded_unit_vector(n, 0x5eed_cafe_f00d_0001);
    let mut rq_prev = 0.0f64;
    let mut rq = 0.0f64;
    for iter in 0..400 {
        let av = apply(&v);
        rq = v.iter().zip(av.iter()).map(|(a, b)| a * b).sum();
        let norm = norm2(&av).max(f64::MIN_POSITIVE);
        v = av.iter().map(|x| x / norm).collect();
        if iter > 8 && (rq - rq_prev).abs() <= 1e-5 * rq.abs() {
            break;
        }
        rq_prev = rq;
    }
    rq
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense_to_sparse(m: &[&[f64]]) -> SparseSymmetric {
        let n = m.len();
        let mut t = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i as u32, j as u32, v));
                }
            }
        }
        SparseSymmetric::from_triplets(n, t)
    }

    #[test]
    fn solves_the_reference_two_by_two() {
        let a = dense_to_sparse(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let report = solve(&a, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(report.x[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(report.x[1], 1.0 / 3.0, epsilon = 1e-15);
        assert!(report.rel_residual <= 1e-15);
        assert_eq!(report.method, SolveMethod::DirectCholesky);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SparseSymmetric::from_triplets(
            2,
            vec![(0, 0, 1.0), (0, 0, 1.5), (1, 1, 2.0), (0, 1, 0.25), (1, 0, 0.25)],
        );
        assert_relative_eq!(a.get(0, 0), 2.5);
        assert_relative_eq!(a.get(0, 1), 0.25);
        assert_eq!(a.nnz(), 4);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = dense_to_sparse(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        match ProfileCholesky::factor(&a) {
            Err(SolverError::NotPositiveDefinite { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    /// Deterministic random SPD matrix: banded A = B^T B + eps I.
    fn random_spd(n: usize, band: usize, seed: u64) -> SparseSymmetric {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(band)..(i + band + 1).min(n) {
                dense[i][j] = next();
            }
        }
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    v += dense[k][i] * dense[k][j];
                }
                if i == j {
                    v += 0.5;
                }
                if v != 0.0 {
                    t.push((i as u32, j as u32, v));
                }
            }
        }
        SparseSymmetric::from_triplets(n, t)
    }

    #[test]
    fn refinement_drives_residual_to_rounding_level() {
        let a = random_spd(80, 6, 42);
        let b: Vec<f64> = (0..80).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let report = solve(&a, &b).unwrap();
        assert!(report.rel_residual <= 1e-15, "backward error {}", report.rel_residual);
    }

    #[test]
    fn backward_error_matches_a_hand_computation() {
        let a = dense_to_sparse(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert_relative_eq!(a.norm_inf(), 3.0);
        let x = [1.0, -1.0];
        // A x = (1, -1) exactly, so against b = A x the error vanishes.
        assert_eq!(backward_error(&a, &x, &[1.0, -1.0]), 0.0);
        // A small perturbation of b appears scaled by |A| |x| + |b|.
        let d = 2f64.powi(-30);
        let expected = d / (3.0 + 1.0 + d);
        assert_relative_eq!(backward_error(&a, &x, &[1.0 + d, -1.0]), expected, epsilon = 1e-15);
    }

    #[test]
    fn cg_agrees_with_direct() {
        let a = random_spd(60, 4, 7);
        let b: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let direct = solve(&a, &b).unwrap();
        let (x_cg, rel) = pcg(&a, &b, 1e-12, 10_000).unwrap();
        assert!(rel <= 1e-12);
        for i in 0..60 {
            assert_relative_eq!(x_cg[i], direct.x[i], max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn condition_estimate_tracks_diagonal_matrices() {
        // diag(1 .. 1e6) has condition number 1e6.
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            let v = 10f64.powf(6.0 * i as f64 / (n - 1) as f64);
            t.push((i as u32, i as u32, v));
        }
        let a = SparseSymmetric::from_triplets(n, t);
        let cond = condition_estimate(&a);
        assert!(cond > 1e6 / 2.0 && cond < 2e6, "estimate {cond}");
        // Identity has condition one.
        let id = SparseSymmetric::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        assert_relative_eq!(condition_estimate(&id), 1.0, max_relative = 1e-3);
        // Singular matrices report infinity.
        let sing = dense_to_sparse(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(condition_estimate(&sing).is_infinite());
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let sym = dense_to_sparse(&[&[2.0, 1.0], &[1.0, 3.0]]);
        assert_eq!(sym.symmetry_defect(), 0.0);
        let asym = SparseSymmetric::from_triplets(2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0 + 1e-8), (1, 1, 3.0)]);
        assert!(asym.symmetry_defect() > 1e-9);
    }

    #[test]
    fn sum_scaled_merges_disjoint_patterns() {
        let a = SparseSymmetric::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let b = SparseSymmetric::from_triplets(3, vec![(0, 1, 2.0), (1, 0, 2.0)]);
        let s = SparseSymmetric::sum_scaled(&[(&a, 2.0), (&b, 0.5)]);
        assert_relative_eq!(s.get(0, 0), 2.0);
        assert_relative_eq!(s.get(0, 1), 1.0);
        assert_relative_eq!(s.get(1, 0), 1.0);
        assert_relative_eq!(s.get(2, 2), 2.0);
    }
}
