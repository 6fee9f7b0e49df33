use std::f64::consts::PI;

use super::{KernelError, Normalization, SpectralParams};
use crate::geometry::{cos_angle, Domain, DomainPoint, GeometryError, PointSet};
use crate::linalg::SymMatrix;

/// Default truncation degree on the sphere, i.e. `(100+1)² = 10 201`
/// eigenfunctions.
pub const DEFAULT_TRUNCATION: usize = 100;

// Pairs processed together in the batched Legendre recurrence.
const PAIR_BLOCK: usize = 256;

/// Truncated Whittle–Matérn kernel.
///
/// On the sphere `truncation` is the maximal degree `L`; on the interval it
/// is the number of Dirichlet modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernel {
    domain: Domain,
    params: SpectralParams,
    truncation: usize,
    /// `v(θ)`.
    norm: f64,
    /// Sphere: `σ² v (τ+l(l+1))^{−s} (2l+1)/(4π)` for `l = 0..=L`.
    /// Interval: `σ² v (τ+i²)^{−s} 2/π` for `i = 1..=L` (index `i − 1`).
    coeffs: Vec<f64>,
    // Legendre recurrence factors (2l+1)/(l+1) and l/(l+1).
    rec_a: Vec<f64>,
    rec_b: Vec<f64>,
}

/// `Σ (τ+λ)^{−s} · mult` over the retained spectrum with the domain's
/// eigenfunction weight: `(2l+1)/(4π)` on the sphere, `1/π` (the average of
/// `e_i²`) on the interval.
fn mean_diagonal(domain: Domain, s: f64, tau: f64, truncation: usize) -> f64 {
    match domain {
        Domain::Sphere => (0..=truncation)
            .map(|l| {
                let lam = (l * (l + 1)) as f64;
                (2 * l + 1) as f64 / (4.0 * PI) * (-s * (tau + lam).ln()).exp()
            })
            .sum(),
        Domain::Interval => (1..=truncation)
            .map(|i| (-s * (tau + (i * i) as f64).ln()).exp() / PI)
            .sum(),
    }
}

/// Normalization factor `v(θ)` for the given choice.
pub(crate) fn normalization_factor(domain: Domain, p: &SpectralParams, truncation: usize) -> f64 {
    match p.normalization {
        Normalization::Power => p.tau.powf(-p.s + domain.dim() as f64 / 2.0),
        Normalization::UnitDiagonal => 1.0 / mean_diagonal(domain, p.s, p.tau, truncation),
        Normalization::None => 1.0,
    }
}

impl SpectralKernel {
    pub fn new(domain: Domain, params: SpectralParams, truncation: usize) -> Result<Self, KernelError> {
        params.validate(domain.dim())?;
        if domain == Domain::Interval && truncation == 0 {
            return Err(KernelError::Parameter(
                "interval kernel needs at least one mode".into(),
            ));
        }
        let norm = normalization_factor(domain, &params, truncation);
        let scale = params.sigma2 * norm;
        let coeffs: Vec<f64> = match domain {
            Domain::Sphere => (0..=truncation)
                .map(|l| {
                    let lam = (l * (l + 1)) as f64;
                    scale * (-params.s * (params.tau + lam).ln()).exp() * (2 * l + 1) as f64
                        / (4.0 * PI)
                })
                .collect(),
            Domain::Interval => (1..=truncation)
                .map(|i| scale * (-params.s * (params.tau + (i * i) as f64).ln()).exp() * 2.0 / PI)
                .collect(),
        };
        let rec_a = (0..=truncation)
            .map(|l| (2 * l + 1) as f64 / (l + 1) as f64)
            .collect();
        let rec_b = (0..=truncation).map(|l| l as f64 / (l + 1) as f64).collect();
        Ok(SpectralKernel {
            domain,
            params,
            truncation,
            norm,
            coeffs,
            rec_a,
            rec_b,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn params(&self) -> &SpectralParams {
        &self.params
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `v(θ)`.
    pub fn normalization_factor(&self) -> f64 {
        self.norm
    }

    /// Microergodic parameter `σ² v(θ)`.
    pub fn microergodic(&self) -> f64 {
        self.params.sigma2 * self.norm
    }

    /// On the sphere: `Σ c_l P_l(t)` for `t = ⟨x, y⟩`.
    pub fn eval_cos(&self, t: f64) -> f64 {
        debug_assert_eq!(self.domain, Domain::Sphere);
        let c = &self.coeffs;
        let mut sum = c[0];
        if self.truncation == 0 {
            return sum;
        }
        let (mut p0, mut p1) = (1.0, t);
        sum += c[1] * t;
        for l in 1..self.truncation {
            let p2 = self.rec_a[l] * t * p1 - self.rec_b[l] * p0;
            sum += c[l + 1] * p2;
            p0 = p1;
            p1 = p2;
        }
        sum
    }

    /// Diagonal value `K(x, x)`; constant on the sphere.
    pub fn sphere_diagonal(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn eval(&self, a: &DomainPoint, b: &DomainPoint) -> Result<f64, KernelError> {
        match (a, b) {
            (DomainPoint::Sphere(x), DomainPoint::Sphere(y)) if self.domain == Domain::Sphere => {
                if a == b {
                    Ok(self.sphere_diagonal())
                } else {
                    Ok(self.eval_cos(cos_angle(x, y)))
                }
            }
            (DomainPoint::Interval(x), DomainPoint::Interval(y)) if self.domain == Domain::Interval => {
                Ok(self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let i = (k + 1) as f64;
                        c * (i * x).sin() * (i * y).sin()
                    })
                    .sum())
            }
            _ => Err(GeometryError::DomainMismatch(self.domain, a.domain()).into()),
        }
    }

    pub(crate) fn gram(&self, ps: &PointSet) -> SymMatrix {
        match self.domain {
            Domain::Sphere => self.gram_sphere(ps),
            Domain::Interval => self.gram_interval(ps),
        }
    }

    fn gram_sphere(&self, ps: &PointSet) -> SymMatrix {
        let n = ps.len();
        let vecs: Vec<[f64; 3]> = ps.points().iter().map(|p| p.unit_vector()).collect();
        let mut g = SymMatrix::zeros(n);
        let diag = self.sphere_diagonal();
        for i in 0..n {
            g.set_sym(i, i, diag);
        }
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut t = vec![0.0; PAIR_BLOCK];
        let mut p0 = vec![0.0; PAIR_BLOCK];
        let mut p1 = vec![0.0; PAIR_BLOCK];
        let mut acc = vec![0.0; PAIR_BLOCK];
        let c = &self.coeffs;
        for block in pairs.chunks(PAIR_BLOCK) {
            let m = block.len();
            for (k, &(i, j)) in block.iter().enumerate() {
                t[k] = cos_angle(&vecs[i], &vecs[j]);
                p0[k] = 1.0;
                p1[k] = t[k];
                acc[k] = c[0] + if self.truncation > 0 { c[1] * t[k] } else { 0.0 };
            }
            for l in 1..self.truncation {
                let (a, b, cl) = (self.rec_a[l], self.rec_b[l], c[l + 1]);
                for k in 0..m {
                    let p2 = a * t[k] * p1[k] - b * p0[k];
                    acc[k] += cl * p2;
                    p0[k] = p1[k];
                    p1[k] = p2;
                }
            }
            for (k, &(i, j)) in block.iter().enumerate() {
                g.set_sym(i, j, acc[k]);
            }
        }
        g
    }

    fn gram_interval(&self, ps: &PointSet) -> SymMatrix {
        let n = ps.len();
        let modes = self.truncation;
        let xs: Vec<f64> = ps
            .points()
            .iter()
            .map(|p| match p {
                DomainPoint::Interval(x) => *x,
                _ => unreachable!("domain checked by caller"),
            })
            .collect();
        let sines: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| (1..=modes).map(|i| (i as f64 * x).sin()).collect())
            .collect();
        SymMatrix::from_upper(n, |i, j| {
            sines[i]
                .iter()
                .zip(&sines[j])
                .zip(&self.coeffs)
                .map(|((a, b), c)| a * b * c)
                .sum()
        })
    }
}

/// Raw spectral tail `Σ_{l>L} (τ+l(l+1))^{−s} (2l+1)/(4π)` on the sphere,
/// summed explicitly up to a cutoff and closed with an integral bound.
pub fn spectral_truncation_tail(params: &SpectralParams, truncation: usize) -> Result<f64, KernelError> {
    if !(params.s > 1.0) {
        return Err(KernelError::Divergent(params.s));
    }
    if !(params.tau > 0.0) {
        return Err(KernelError::Parameter(format!(
            "range scale tau = {} must be positive",
            params.tau
        )));
    }
    let s = params.s;
    let tau = params.tau;
    let term = |l: f64| (2.0 * l + 1.0) / (4.0 * PI) * (-s * (tau + l * (l + 1.0)).ln()).exp();
    let start = truncation + 1;
    let cutoff = start + 20 * (truncation + 1).max(50);
    let mut sum = 0.0;
    for l in start..cutoff {
        sum += term(l as f64);
    }
    // (2l+1)(τ+l(l+1))^{−s} is decreasing for l ≥ cutoff, so the remainder is
    // at most ∫_{c−1}^∞ = (τ+(c−1)c)^{1−s} / ((s−1) 4π).
    let c = cutoff as f64;
    let remainder = (-(s - 1.0) * (tau + (c - 1.0) * c).ln()).exp() / ((s - 1.0) * 4.0 * PI);
    Ok(sum + remainder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_placement_sphere;
    use crate::spectral::{real_spherical_harmonics, sh_index};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(s: f64, tau: f64, norm: Normalization, l: usize) -> SpectralKernel {
        SpectralKernel::new(Domain::Sphere, SpectralParams::new(s, tau, 1.0, norm), l).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng) -> DomainPoint {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).sqrt();
        DomainPoint::normalized([r * phi.cos(), r * phi.sin(), z]).unwrap()
    }

    #[test]
    fn unit_diagonal_is_one() {
        let k = kernel(5.0, 20.0, Normalization::UnitDiagonal, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_point(&mut rng);
            assert_abs_diff_eq!(k.eval(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
            // the off-diagonal formula at t = 1 agrees too
            assert_abs_diff_eq!(k.eval_cos(1.0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_term_kernel() {
        let k = kernel(5.0, 20.0, Normalization::None, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, b) = (random_point(&mut rng), random_point(&mut rng));
        assert_abs_diff_eq!(
            k.eval(&a, &b).unwrap(),
            20f64.powi(-5) / (4.0 * PI),
            epsilon = 1e-22
        );
    }

    #[test]
    fn power_normalization_value() {
        let k = kernel(3.0, 4.0, Normalization::Power, 10);
        assert_abs_diff_eq!(k.normalization_factor(), 4f64.powf(-2.0), epsilon = 1e-16);
    }

    #[test]
    fn rejects_low_smoothness() {
        let p = SpectralParams::new(1.0, 20.0, 1.0, Normalization::Power);
        assert!(SpectralKernel::new(Domain::Sphere, p, 10).is_err());
    }

    #[test]
    fn addition_theorem_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for lmax in [0usize, 3, 10] {
            let k = kernel(2.5, 3.0, Normalization::None, lmax);
            for _ in 0..20 {
                let (x, y) = (random_point(&mut rng), random_point(&mut rng));
                let (hx, hy) = (real_spherical_harmonics(lmax, &x), real_spherical_harmonics(lmax, &y));
                let mut brute = 0.0;
                for l in 0..=lmax {
                    let w = (3.0 + (l * (l + 1)) as f64).powf(-2.5);
                    for m in -(l as i64)..=(l as i64) {
                        brute += w * hx[sh_index(l, m)] * hy[sh_index(l, m)];
                    }
                }
                assert_abs_diff_eq!(k.eval(&x, &y).unwrap(), brute, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn batched_gram_matches_pointwise() {
        let ps = regular_placement_sphere(40).unwrap();
        let k = kernel(4.0, 10.0, Normalization::UnitDiagonal, 60);
        let g = k.gram(&ps);
        for i in 0..ps.len() {
            for j in 0..ps.len() {
                assert_abs_diff_eq!(g.get(i, j), k.eval(ps.get(i), ps.get(j)).unwrap(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn truncation_changes_power_diagonal_by_tail_ratio() {
        // Relative change of the unnormalized diagonal equals the spectral tail
        // ratio, computed here by direct summation.
        let direct_tail: f64 = (101..=150)
            .map(|l| (2 * l + 1) as f64 * (20.0 + (l * (l + 1)) as f64).powf(-5.0))
            .sum();
        let head: f64 = (0..=100)
            .map(|l| (2 * l + 1) as f64 * (20.0 + (l * (l + 1)) as f64).powf(-5.0))
            .sum();
        let d100 = kernel(5.0, 20.0, Normalization::Power, 100).sphere_diagonal();
        let d150 = kernel(5.0, 20.0, Normalization::Power, 150).sphere_diagonal();
        let rel = (d150 - d100) / d100;
        assert!((rel - direct_tail / head).abs() < 1e-3 * direct_tail / head);
        assert!(rel < 2e-11, "relative truncation change {rel:e}");
        let u100 = kernel(5.0, 20.0, Normalization::UnitDiagonal, 100).sphere_diagonal();
        let u150 = kernel(5.0, 20.0, Normalization::UnitDiagonal, 150).sphere_diagonal();
        assert!(((u150 - u100) / u100).abs() <= 1e-12);
    }

    #[test]
    fn tail_bound_properties() {
        let p = SpectralParams::new(5.0, 20.0, 1.0, Normalization::None);
        // Oracle: direct summation to l = 10^5.
        let direct = |lmin: usize| -> f64 {
            (lmin..=100_000)
                .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * (20.0 + (l as f64) * (l as f64 + 1.0)).powf(-5.0))
                .sum()
        };
        let t100 = spectral_truncation_tail(&p, 100).unwrap();
        let t200 = spectral_truncation_tail(&p, 200).unwrap();
        assert!((t100 - direct(101)).abs() / direct(101) < 1e-6);
        assert!(t100 <= 1e-12);
        let ratio = t200 / t100;
        let expect = 2f64.powf(-8.0);
        assert!(ratio >= expect / 2.0 && ratio <= expect * 2.0, "ratio {ratio}");

        let p2 = SpectralParams::new(2.0, 1.0, 1.0, Normalization::None);
        let mut prev = f64::INFINITY;
        for l in [10usize, 100, 1000, 10_000] {
            let t = spectral_truncation_tail(&p2, l).unwrap();
            assert!(t < prev && t > 0.0);
            prev = t;
        }
        assert!(prev < 1e-8);
        let p3 = SpectralParams::new(1.0, 1.0, 1.0, Normalization::None);
        assert_eq!(spectral_truncation_tail(&p3, 10), Err(KernelError::Divergent(1.0)));
    }

    #[test]
    fn interval_kernel_matches_series() {
        let p = SpectralParams::new(1.5, 2.0, 1.0, Normalization::Power);
        let k = SpectralKernel::new(Domain::Interval, p, 50).unwrap();
        let (x, y) = (0.4, 2.1);
        let v = 2f64.powf(-1.5 + 0.5);
        let direct: f64 = (1..=50)
            .map(|i| {
                let e = |z: f64| crate::spectral::interval_eigenfunction(i, z).unwrap();
                v * (2.0 + (i * i) as f64).powf(-1.5) * e(x) * e(y)
            })
            .sum();
        let got = k
            .eval(&DomainPoint::Interval(x), &DomainPoint::Interval(y))
            .unwrap();
        assert_abs_diff_eq!(got, direct, epsilon = 1e-14);
    }
}
