//! Dense symmetric matrices and the Cholesky factorization the likelihood
//! is built on.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular: Cholesky pivot {pivot} is {value:e} (threshold {threshold:e})")]
    NearSingular {
        pivot: usize,
        value: f64,
        threshold: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),
}

/// Row-major dense square matrix. Symmetric matrices store both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds a symmetric matrix from a function evaluated on the upper
    /// triangle (including the diagonal).
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        SymMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.data {
            *x *= a;
        }
    }

    /// Leading `k × k` block.
    pub fn leading(&self, k: usize) -> SymMatrix {
        let mut out = SymMatrix::zeros(k);
        for i in 0..k {
            out.data[i * k..(i + 1) * k].copy_from_slice(&self.row(i)[..k]);
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// Largest `|A_ij − A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the loop vectorize.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in (4 * chunks)..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Relative pivot threshold: a squared pivot below `factor · n · ε · max_ii A_ii`
/// counts as breakdown.
pub const DEFAULT_PIVOT_FACTOR: f64 = 1.0;

/// Lower-triangular Cholesky factor `A = L Lᵀ`, stored row-major (packed rows
/// of increasing length would save half the memory; the full square keeps
/// row slices contiguous for the dot products).
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self, LinalgError> {
        Self::factor_with(a, DEFAULT_PIVOT_FACTOR)
    }

    /// Factorization with breakdown threshold `pivot_factor · n · ε · max diag`.
    pub fn factor_with(a: &SymMatrix, pivot_factor: f64) -> Result<Self, LinalgError> {
        let n = a.dim();
        let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0f64, f64::max);
        let threshold = pivot_factor * n as f64 * f64::EPSILON * max_diag;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let aij = a.get(i, j);
                if !aij.is_finite() {
                    return Err(LinalgError::NonFinite(i, j));
                }
                let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if i == j {
                    let p = aij - s;
                    if !(p > threshold) {
                        return Err(LinalgError::NearSingular {
                            pivot: i,
                            value: p,
                            threshold,
                        });
                    }
                    l[i * n + i] = p.sqrt();
                } else {
                    l[i * n + j] = (aij - s) / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, i)).collect()
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.entry(i, i).ln()).sum::<f64>()
    }

    pub fn min_max_diagonal(&self) -> (f64, f64) {
        (0..self.n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let d = self.entry(i, i);
            (lo.min(d), hi.max(d))
        })
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (b[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[i * n + i];
            let xi = x[i];
            for k in 0..i {
                x[k] -= self.l[i * n + k] * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `‖L⁻¹ b‖² = bᵀ A⁻¹ b`.
    pub fn quad_form(&self, b: &[f64]) -> f64 {
        let y = self.solve_lower(b);
        dot(&y, &y)
    }

    /// `L z`, used to sample from `N(0, A)`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| dot(&self.l[i * n..i * n + i + 1], &z[..=i])).collect()
    }
}

/// Solves a general dense system by Gaussian elimination with partial
/// pivoting. Independent of the Cholesky path; used for cross-checks.
pub fn lu_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let mut m: Vec<f64> = a.as_slice().to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if !(pmax > 0.0) {
            return Err(LinalgError::NearSingular {
                pivot: col,
                value: pmax,
                threshold: 0.0,
            });
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spd(n: usize) -> SymMatrix {
        SymMatrix::from_upper(n, |i, j| {
            let d = (i as f64 - j as f64).abs();
            (-0.3 * d).exp() + if i == j { 0.1 } else { 0.0 }
        })
    }

    #[test]
    fn factor_reproduces_matrix() {
        let a = spd(17);
        let c = Cholesky::factor(&a).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                let s: f64 = (0..17).map(|k| c.entry(i, k) * c.entry(j, k)).sum();
                assert_abs_diff_eq!(s, a.get(i, j), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn solves_agree_with_lu() {
        let a = spd(23);
        let b: Vec<f64> = (0..23).map(|i| (i as f64 * 0.7).sin()).collect();
        let c = Cholesky::factor(&a).unwrap();
        let x1 = c.solve(&b);
        let x2 = lu_solve(&a, &b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-11);
        }
        assert_abs_diff_eq!(c.quad_form(&b), dot(&b, &x2), epsilon = 1e-11);
    }

    #[test]
    fn two_by_two_logdet() {
        let rho: f64 = 0.6;
        let a = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]);
        let c = Cholesky::factor(&a).unwrap();
        assert_abs_diff_eq!(c.logdet(), (1.0 - rho * rho).ln(), epsilon = 1e-15);
    }

    #[test]
    fn breakdown_reports_pivot() {
        let a = SymMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        match Cholesky::factor(&a) {
            Err(LinalgError::NearSingular { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected breakdown, got {other:?}"),
        }
    }
}
