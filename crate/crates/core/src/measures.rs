//! Hellinger affinities of scaled coefficient laws and the Kakutani
//! dichotomy for the product measures induced by two parameter sets.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::kernels::spectral::normalization_factor;
use crate::kernels::{Normalization, SpectralParams};
use crate::geometry::Domain;
use crate::quadrature::{integrate_half_line, integrate_real_line, QuadratureError};
use crate::sampler::CoefficientLaw;
use crate::spectral::EigenSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `φ(a) = ρ(P_a, P_1)`, the Hellinger affinity between the law of `aξ` and
/// that of `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affinity {
    pub value: f64,
    /// The two laws are mutually singular (only for laws without a density).
    pub mutually_singular: bool,
}

fn check_scale(a: f64) -> Result<(), MeasureError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(MeasureError::Argument(format!("scale a = {a} must be positive")));
    }
    Ok(())
}

fn ln_t_density(df: f64, x: f64) -> f64 {
    // standardized: Student-t scaled by √((df−2)/df)
    let c = ((df - 2.0) / df).sqrt();
    let y = x / c;
    ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln() - (df + 1.0) / 2.0 * (y * y / df).ln_1p()
        - c.ln()
}

/// `1 − φ(a) = ½ ∫ (√f_a − √f)²` by quadrature, for laws with a density.
/// The exponential case integrates the `Exp(1)` density on `(0, ∞)`.
pub fn hellinger_defect_quadrature(law: CoefficientLaw, a: f64) -> Result<f64, MeasureError> {
    check_scale(a)?;
    law.validate().map_err(|e| MeasureError::Argument(e.to_string()))?;
    let d = a - 1.0;
    let tol = 1e-12 * (d * d).max(1e-10);
    let defect = |lnf: &dyn Fn(f64) -> f64, x: f64| {
        let p = (0.5 * (lnf(x / a) - a.ln())).exp();
        let q = (0.5 * lnf(x)).exp();
        0.5 * (p - q) * (p - q)
    };
    match law {
        CoefficientLaw::Gaussian => {
            let lnf = |x: f64| -0.5 * x * x - 0.5 * (2.0 * PI).ln();
            Ok(integrate_real_line(|x| defect(&lnf, x), tol)?)
        }
        CoefficientLaw::CenteredExponential => {
            let lnf = |x: f64| -x;
            Ok(integrate_half_line(|x| defect(&lnf, x), 0.0, tol)?)
        }
        CoefficientLaw::ScaledStudentT { df } => {
            let lnf = move |x: f64| ln_t_density(df, x);
            Ok(integrate_real_line(|x| defect(&lnf, x), tol)?)
        }
        CoefficientLaw::Rademacher => Err(MeasureError::Unsupported(
            "the Rademacher law has no density; scaled copies are mutually singular".into(),
        )),
    }
}

/// Quadrature route to `φ(a)`.
pub fn hellinger_affinity_quadrature(law: CoefficientLaw, a: f64) -> Result<f64, MeasureError> {
    Ok(1.0 - hellinger_defect_quadrature(law, a)?)
}

/// `−log φ(a)`, accurate for `a` close to 1. `+∞` for singular pairs.
pub fn neg_log_affinity(law: CoefficientLaw, a: f64) -> Result<f64, MeasureError> {
    check_scale(a)?;
    let d = a - 1.0;
    match law {
        CoefficientLaw::Gaussian => Ok(-0.5 * (-(d * d) / (1.0 + a * a)).ln_1p()),
        CoefficientLaw::CenteredExponential => Ok(-0.5 * (-(d * d) / ((1.0 + a) * (1.0 + a))).ln_1p()),
        CoefficientLaw::ScaledStudentT { .. } => Ok(-(-hellinger_defect_quadrature(law, a)?).ln_1p()),
        CoefficientLaw::Rademacher => Ok(if a == 1.0 { 0.0 } else { f64::INFINITY }),
    }
}

/// Closed forms for the Gaussian (`√(2a/(1+a²))`) and exponential
/// (`2√a/(1+a)`) laws, quadrature for Student-t, and 0 with the singularity
/// flag for the Rademacher law when `a ≠ 1`.
pub fn hellinger_affinity(law: CoefficientLaw, a: f64) -> Result<Affinity, MeasureError> {
    check_scale(a)?;
    match law {
        CoefficientLaw::Gaussian => Ok(Affinity {
            value: (2.0 * a / (1.0 + a * a)).sqrt(),
            mutually_singular: false,
        }),
        CoefficientLaw::CenteredExponential => Ok(Affinity {
            value: 2.0 * a.sqrt() / (1.0 + a),
            mutually_singular: false,
        }),
        CoefficientLaw::ScaledStudentT { .. } => Ok(Affinity {
            value: hellinger_affinity_quadrature(law, a)?,
            mutually_singular: false,
        }),
        CoefficientLaw::Rademacher => Ok(if a == 1.0 {
            Affinity {
                value: 1.0,
                mutually_singular: false,
            }
        } else {
            Affinity {
                value: 0.0,
                mutually_singular: true,
            }
        }),
    }
}

/// `v(θ)` for an eigensystem. Unit-diagonal normalization needs a concrete
/// domain.
pub fn normalization_for(p: &SpectralParams, es: &EigenSystem) -> Result<f64, MeasureError> {
    let d = es.dim() as f64;
    match (p.normalization, es) {
        (Normalization::Power, _) => Ok(p.tau.powf(-p.s + d / 2.0)),
        (Normalization::None, _) => Ok(1.0),
        (Normalization::UnitDiagonal, EigenSystem::Sphere { max_degree }) => {
            Ok(normalization_factor(Domain::Sphere, p, *max_degree))
        }
        (Normalization::UnitDiagonal, EigenSystem::Interval { modes }) => {
            Ok(normalization_factor(Domain::Interval, p, *modes))
        }
        (Normalization::UnitDiagonal, EigenSystem::Synthetic { .. }) => Err(MeasureError::Unsupported(
            "unit-diagonal normalization has no meaning for a synthetic spectrum".into(),
        )),
    }
}

/// Microergodic parameter `σ² v(θ)`.
pub fn microergodic(p: &SpectralParams, es: &EigenSystem) -> Result<f64, MeasureError> {
    Ok(p.sigma2 * normalization_for(p, es)?)
}

/// Copy of `p2` whose `σ²` makes `σ₂² v(θ₂) = σ₁² v(θ₁)`.
pub fn match_microergodic(p1: &SpectralParams, p2: &SpectralParams, es: &EigenSystem) -> Result<SpectralParams, MeasureError> {
    let mut q = *p2;
    q.sigma2 = microergodic(p1, es)? / normalization_for(p2, es)?;
    Ok(q)
}

fn check_count(es: &EigenSystem, n: usize) -> Result<(), MeasureError> {
    if n > es.len() {
        return Err(MeasureError::Argument(format!(
            "requested {n} eigenvalues but the system holds {}",
            es.len()
        )));
    }
    Ok(())
}

/// `log a_i` for `i = 1..=n`, with the equal-smoothness case written through
/// `ln_1p` so that `a_i − 1` keeps its relative accuracy for large `λ_i`.
pub fn log_ratio_sequence(p1: &SpectralParams, p2: &SpectralParams, es: &EigenSystem, n: usize) -> Result<Vec<f64>, MeasureError> {
    check_count(es, n)?;
    let m1 = microergodic(p1, es)?;
    let m2 = microergodic(p2, es)?;
    let base = 0.5 * (m1 / m2).ln();
    Ok((1..=n)
        .into_par_iter()
        .map(|i| {
            let lam = es.eigenvalue(i);
            if p1.s == p2.s {
                base - 0.5 * p1.s * ((p1.tau - p2.tau) / (p2.tau + lam)).ln_1p()
            } else {
                base - 0.5 * p1.s * (p1.tau + lam).ln() + 0.5 * p2.s * (p2.tau + lam).ln()
            }
        })
        .collect())
}

/// Single ratio `a_i` (1-based), without materializing the sequence.
pub fn ratio_at(p1: &SpectralParams, p2: &SpectralParams, es: &EigenSystem, i: usize) -> Result<f64, MeasureError> {
    if i == 0 {
        return Err(MeasureError::Argument("indices start at 1".into()));
    }
    check_count(es, i)?;
    let lam = es.eigenvalue(i);
    let base = 0.5 * (microergodic(p1, es)? / microergodic(p2, es)?).ln();
    Ok((base - 0.5 * p1.s * (p1.tau + lam).ln() + 0.5 * p2.s * (p2.tau + lam).ln()).exp())
}

/// `a_i = σ₁√v(θ₁)(τ₁+λ_i)^{−s₁/2} / (σ₂√v(θ₂)(τ₂+λ_i)^{−s₂/2})`, `i = 1..=n`.
pub fn eigenvalue_ratio_sequence(p1: &SpectralParams, p2: &SpectralParams, es: &EigenSystem, n: usize) -> Result<Vec<f64>, MeasureError> {
    Ok(log_ratio_sequence(p1, p2, es, n)?.into_iter().map(f64::exp).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Equivalent,
    Orthogonal,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Equivalent => "EQUIVALENT",
            Verdict::Orthogonal => "ORTHOGONAL",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

/// Thresholds of the empirical rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KakutaniRule {
    /// Fitted tail slopes in `[slope_threshold − undecided_band, slope_threshold)`
    /// are reported as undecided.
    pub slope_threshold: f64,
    pub undecided_band: f64,
    /// Equivalence also needs the extrapolated tail to be at most this
    /// multiple of the partial sum.
    pub tail_ratio: f64,
    /// Tail window for the fit starts at `n · tail_start`.
    pub tail_start: f64,
}

impl Default for KakutaniRule {
    fn default() -> Self {
        KakutaniRule {
            slope_threshold: -1.0,
            undecided_band: 0.1,
            tail_ratio: 1.0,
            tail_start: 0.1,
        }
    }
}

pub const DEFAULT_KAKUTANI_TERMS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct KakutaniReport {
    pub p1: SpectralParams,
    pub p2: SpectralParams,
    pub dim: usize,
    pub law: CoefficientLaw,
    /// `−log φ(a_i)`.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Least-squares slope of `log term` vs `log i` over the tail window.
    pub tail_slope: Option<f64>,
    /// `Σ_{i>N}` of the fitted power law, when it is summable.
    pub extrapolated_tail: Option<f64>,
    pub verdict: Verdict,
    /// Reason for the empirical verdict.
    pub rule: String,
    /// Verdict of the analytic dichotomy (equal smoothness, equal
    /// microergodic parameter, `d ≤ 3`).
    pub analytic: Verdict,
}

/// Slope and intercept of `log y` against `log x` by least squares.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn analytic_verdict(p1: &SpectralParams, p2: &SpectralParams, es: &EigenSystem) -> Result<Verdict, MeasureError> {
    let m1 = microergodic(p1, es)?;
    let m2 = microergodic(p2, es)?;
    let micro_equal = ((m1 - m2) / m1).abs() <= 1e-12;
    if p1.s == p2.s && p1.tau == p2.tau && micro_equal {
        return Ok(Verdict::Equivalent);
    }
    if p1.s == p2.s && micro_equal && es.dim() <= 3 {
        Ok(Verdict::Equivalent)
    } else {
        Ok(Verdict::Orthogonal)
    }
}

pub fn kakutani_classify(
    p1: &SpectralParams,
    p2: &SpectralParams,
    law: CoefficientLaw,
    es: &EigenSystem,
    n: usize,
    rule: &KakutaniRule,
) -> Result<KakutaniReport, MeasureError> {
    if n < 100 {
        return Err(MeasureError::Argument(format!("need at least 100 terms, got {n}")));
    }
    law.validate().map_err(|e| MeasureError::Argument(e.to_string()))?;
    let log_a = log_ratio_sequence(p1, p2, es, n)?;
    let terms: Vec<f64> = log_a
        .par_iter()
        .map(|&la| {
            if la == 0.0 {
                return Ok(0.0);
            }
            neg_log_affinity(law, la.exp()).map(|t| t.max(0.0))
        })
        .collect::<Result<_, _>>()?;
    let mut partial_sums = Vec::with_capacity(n);
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let analytic = analytic_verdict(p1, p2, es)?;
    let total = acc;

    let mut tail_slope = None;
    let mut extrapolated_tail = None;
    let (verdict, why) = if terms.iter().any(|t| t.is_infinite()) {
        (Verdict::Orthogonal, "some coordinate laws are mutually singular".to_string())
    } else if total == 0.0 {
        (Verdict::Equivalent, "all terms vanish".to_string())
    } else {
        let start = ((n as f64 * rule.tail_start) as usize).max(1);
        let xs: Vec<f64> = (start..=n).map(|i| i as f64).collect();
        let ys = &terms[start - 1..];
        match log_log_fit(&xs, ys) {
            None => (Verdict::Undecided, "tail terms vanish numerically; no slope fit".to_string()),
            Some((slope, icept)) => {
                tail_slope = Some(slope);
                if slope >= rule.slope_threshold {
                    (Verdict::Orthogonal, format!("tail slope {slope:.4} ≥ {}", rule.slope_threshold))
                } else if slope >= rule.slope_threshold - rule.undecided_band {
                    (Verdict::Undecided, format!("tail slope {slope:.4} within the undecided band"))
                } else {
                    // Σ_{i>N} C i^β ≈ C N^{β+1} / (−β−1)
                    let tail = (icept + (slope + 1.0) * (n as f64).ln()).exp() / (-slope - 1.0);
                    extrapolated_tail = Some(tail);
                    if tail <= rule.tail_ratio * total {
                        (Verdict::Equivalent, format!("tail slope {slope:.4}, extrapolated tail {tail:.3e}"))
                    } else {
                        (Verdict::Undecided, format!("extrapolated tail {tail:.3e} exceeds the partial sum"))
                    }
                }
            }
        }
    };
    Ok(KakutaniReport {
        p1: *p1,
        p2: *p2,
        dim: es.dim(),
        law,
        terms,
        partial_sums,
        tail_slope,
        extrapolated_tail,
        verdict,
        rule: why,
        analytic,
    })
}

/// Empirical constants `c ≤ −log φ(a)/(a−1)² ≤ C` over a grid near 1.
pub fn taylor_window_check(law: CoefficientLaw, grid: &[f64]) -> Result<(f64, f64), MeasureError> {
    if grid.is_empty() {
        return Err(MeasureError::Argument("grid is empty".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &a in grid {
        if a == 1.0 || !(0.5..=2.0).contains(&a) {
            return Err(MeasureError::Argument(format!("grid point {a} must lie in [0.5, 2] and differ from 1")));
        }
        let r = neg_log_affinity(law, a)? / ((a - 1.0) * (a - 1.0));
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(s: f64, tau: f64, sigma2: f64) -> SpectralParams {
        SpectralParams::new(s, tau, sigma2, Normalization::Power)
    }

    #[test]
    fn closed_forms() {
        let g = hellinger_affinity(CoefficientLaw::Gaussian, 2.0).unwrap().value;
        assert!((g - (0.8f64).sqrt()).abs() < 1e-15);
        assert_eq!(hellinger_affinity(CoefficientLaw::Gaussian, 1.0).unwrap().value, 1.0);
        let e = hellinger_affinity(CoefficientLaw::CenteredExponential, 4.0).unwrap().value;
        assert!((e - 0.8).abs() < 1e-15);
        for a in [0.3, 0.7, 1.9, 3.3] {
            let x = hellinger_affinity(CoefficientLaw::Gaussian, a).unwrap().value;
            let y = hellinger_affinity(CoefficientLaw::Gaussian, 1.0 / a).unwrap().value;
            assert!((x - y).abs() < 1e-10);
        }
        let r = hellinger_affinity(CoefficientLaw::Rademacher, 1.5).unwrap();
        assert!(r.mutually_singular && r.value == 0.0);
        assert!(hellinger_affinity(CoefficientLaw::Gaussian, 0.0).is_err());
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for k in 0..=40 {
            let a = 0.25 * 16f64.powf(k as f64 / 40.0);
            let g = hellinger_affinity_quadrature(CoefficientLaw::Gaussian, a).unwrap();
            assert!((g - (2.0 * a / (1.0 + a * a)).sqrt()).abs() <= 1e-8, "a={a}");
            let e = hellinger_affinity_quadrature(CoefficientLaw::CenteredExponential, a).unwrap();
            assert!((e - 2.0 * a.sqrt() / (1.0 + a)).abs() <= 1e-8, "a={a}");
        }
    }

    #[test]
    fn student_t_affinity_is_valid() {
        let law = CoefficientLaw::ScaledStudentT { df: 4.0 };
        assert!((hellinger_affinity(law, 1.0).unwrap().value - 1.0).abs() < 1e-12);
        let mut prev = 1.0;
        for a in [1.1, 1.5, 2.0, 4.0] {
            let v = hellinger_affinity(law, a).unwrap().value;
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn ratio_sequence_examples() {
        let es = EigenSystem::Sphere { max_degree: 100 };
        let p1 = power(2.0, 1.0, 1.0);
        let p2 = match_microergodic(&p1, &power(2.0, 2.0, 1.0), &es).unwrap();
        // i = 2 has λ = 2
        let a = eigenvalue_ratio_sequence(&p1, &p2, &es, 2).unwrap();
        assert!((a[1] - 4.0 / 3.0).abs() < 1e-14);
        let same = eigenvalue_ratio_sequence(&p1, &p1, &es, 50).unwrap();
        assert!(same.iter().all(|&x| x == 1.0));
        // s₁ > s₂: a_i ~ λ_i^{-1/2}. At index 10⁴ (λ = 9900) that is still
        // about 0.01; below 1e-3 once the degree reaches 10⁴.
        let (q1, q2) = (power(3.0, 1.0, 1.0), power(2.0, 1.0, 1.0));
        let big = EigenSystem::Sphere { max_degree: 10_000 };
        let a = eigenvalue_ratio_sequence(&q1, &q2, &big, 10_000).unwrap();
        assert!((a[9_999] - 9901f64.powf(-0.5)).abs() < 1e-15);
        assert!(a.windows(2).all(|w| w[1] <= w[0]));
        let far = ratio_at(&q1, &q2, &big, 10_000 * 10_000 + 1).unwrap();
        assert!(far < 1e-3 && (far - (1.0 + 1e8f64 + 1e4).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn taylor_constants() {
        let g = taylor_window_check(CoefficientLaw::Gaussian, &[1.0 - 1e-3, 1.0 + 1e-3]).unwrap();
        assert!((g.0 - 0.25).abs() < 1e-3 && (g.1 - 0.25).abs() < 1e-3);
        // (a−1)² is not symmetric under a ↦ 1/a, so the two ends differ by ~18%.
        let (c, cc) = taylor_window_check(CoefficientLaw::Gaussian, &[0.9, 1.1]).unwrap();
        let direct = |a: f64| -0.5 * (2.0 * a / (1.0 + a * a)).ln() / ((a - 1.0) * (a - 1.0));
        assert!((c - direct(1.1)).abs() < 1e-12 && (cc - direct(0.9)).abs() < 1e-12);
        assert!(c / cc > 0.8 && c / cc < 0.9);
        let grid: Vec<f64> = (0..=30).map(|k| 0.5 + 0.05 * k as f64).filter(|a| (a - 1.0f64).abs() > 1e-9).collect();
        let (c, cc) = taylor_window_check(CoefficientLaw::CenteredExponential, &grid).unwrap();
        assert!(c >= 0.05 && cc <= 5.0 && c > 0.0);
        assert!(taylor_window_check(CoefficientLaw::Gaussian, &[1.0]).is_err());
    }

    #[test]
    fn verdicts_small() {
        let es = EigenSystem::Sphere { max_degree: 316 };
        let p1 = power(2.0, 1.0, 1.0);
        let p2 = match_microergodic(&p1, &power(2.0, 3.0, 1.0), &es).unwrap();
        let r = kakutani_classify(&p1, &p2, CoefficientLaw::Gaussian, &es, 100_000, &KakutaniRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Equivalent);
        assert_eq!(r.analytic, Verdict::Equivalent);
        assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let r = kakutani_classify(&p1, &power(2.5, 1.0, 1.0), CoefficientLaw::Gaussian, &es, 1000, &KakutaniRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Orthogonal);
        let r = kakutani_classify(&p1, &p2, CoefficientLaw::Rademacher, &es, 1000, &KakutaniRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Orthogonal);
        let r = kakutani_classify(&p1, &p1, CoefficientLaw::Rademacher, &es, 1000, &KakutaniRule::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Equivalent);
    }

    fn system(d: usize, n: usize) -> EigenSystem {
        match d {
            1 => EigenSystem::Interval { modes: n },
            2 => EigenSystem::sphere_with_count(n),
            _ => EigenSystem::Synthetic { dim: d, len: n },
        }
    }

    #[test]
    fn twelve_case_matrix() {
        let n = DEFAULT_KAKUTANI_TERMS;
        for d in 1..=4 {
            let es = system(d, n);
            let p1 = power(2.0, 1.0, 1.0);
            let matched = match_microergodic(&p1, &power(2.0, 3.0, 1.0), &es).unwrap();
            let mut sig = matched;
            sig.sigma2 *= 1.5;
            let cases = [matched, sig, power(2.5, 1.0, 1.0)];
            for (k, p2) in cases.iter().enumerate() {
                let r = kakutani_classify(&p1, p2, CoefficientLaw::Gaussian, &es, n, &KakutaniRule::default()).unwrap();
                assert_eq!(r.verdict, r.analytic, "d={d} case={k} {}", r.rule);
                assert!(r.terms.iter().all(|&t| t >= 0.0));
                if d == 2 && k == 0 {
                    let xs: Vec<f64> = (1000..=10_000).map(|i| i as f64).collect();
                    let (slope, _) = log_log_fit(&xs, &r.terms[999..10_000]).unwrap();
                    assert!((-2.4..=-1.6).contains(&slope), "{slope}");
                }
            }
        }
    }
}
