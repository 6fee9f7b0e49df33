//! Numerical integration: Gauss–Legendre rules and adaptive Gauss–Kronrod.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    NoConvergence { tol: f64, estimate: f64, error: f64 },
    #[error("integrand returned a non-finite value at {0}")]
    NonFinite(f64),
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

// 7-point Gauss / 15-point Kronrod pair.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(c));
    }
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite(c - x));
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite(c + x));
        }
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Adaptive G7/K15 integration of `f` over the finite interval [a, b] to an
/// absolute tolerance. Intervals are bisected globally, largest error first.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = kronrod15(&mut f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol {
        if parts.len() >= MAX_INTERVALS {
            return Err(QuadratureError::NoConvergence {
                tol,
                estimate: total,
                error: err,
            });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, pv, pe) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further in floating point.
            if err - pe <= tol {
                return Ok(total);
            }
            return Err(QuadratureError::NoConvergence {
                tol,
                estimate: total,
                error: err,
            });
        }
        let (v1, e1) = kronrod15(&mut f, lo, mid)?;
        let (v2, e2) = kronrod15(&mut f, mid, hi)?;
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        if parts.len() % 64 == 0 {
            // resum to limit drift
            total = parts.iter().map(|p| p.2).sum();
            err = parts.iter().map(|p| p.3).sum();
        }
    }
    Ok(parts.iter().map(|p| p.2).sum())
}

/// ∫_{−∞}^{∞} f via the substitution `x = tan(t)`, `t ∈ (−π/2, π/2)`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<f64, QuadratureError> {
    let g = move |t: f64| {
        let c = t.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let v = f(t.tan()) / (c * c);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, -0.5 * PI, 0.5 * PI, tol)
}

/// ∫_a^∞ f via the substitution `x = a + tan(t)`, `t ∈ [0, π/2)`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: f64) -> Result<f64, QuadratureError> {
    let g = move |t: f64| {
        let c = t.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let v = f(a + t.tan()) / (c * c);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 0.5 * PI, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for k in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert_abs_diff_eq!(approx, exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate(|x| if x > 0.0 { x.powf(-0.5) } else { 0.0 }, 0.0, 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-8);
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-14).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn infinite_ranges() {
        let v = integrate_real_line(|x| (-x * x / 2.0).exp(), 1e-12).unwrap();
        assert_abs_diff_eq!(v, (2.0 * PI).sqrt(), epsilon = 1e-10);
        let v = integrate_half_line(|x| (-x).exp(), 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    }
}
