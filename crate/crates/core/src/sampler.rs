//! Karhunen–Loève simulation of Whittle–Matérn fields with i.i.d.
//! standardized coefficients, and exact Gaussian sampling through a Cholesky
//! factor of the Gram matrix.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, DomainPoint, PointSet};
use crate::kernels::{gram_matrix, KernelError, KernelModel, SpectralKernel, SpectralParams};
use crate::linalg::{dot, Cholesky, LinalgError};
use crate::spectral::real_spherical_harmonics_into;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid coefficient law: {0}")]
    Law(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("Gram matrix is not numerically positive definite: {0}")]
    NearSingular(#[from] LinalgError),
}

/// Law of the i.i.d. Karhunen–Loève coefficients. Every law is standardized
/// to mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientLaw {
    Gaussian,
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// `Exp(1) − 1`.
    CenteredExponential,
    /// Student-t scaled by `√((df−2)/df)`.
    ScaledStudentT { df: f64 },
}

pub const DEFAULT_T_DF: f64 = 4.0;

impl CoefficientLaw {
    pub fn validate(&self) -> Result<(), SamplerError> {
        match *self {
            CoefficientLaw::ScaledStudentT { df } if !(df > 2.0) || !df.is_finite() => Err(SamplerError::Law(
                format!("Student-t with df = {df} has no finite variance (needs df > 2)"),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CoefficientLaw::Gaussian => "gaussian".into(),
            CoefficientLaw::Rademacher => "rademacher".into(),
            CoefficientLaw::CenteredExponential => "centered_exponential".into(),
            CoefficientLaw::ScaledStudentT { df } => format!("student_t({df})"),
        }
    }

    /// One standardized draw. The law must have been validated.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CoefficientLaw::Gaussian => rng.sample(StandardNormal),
            CoefficientLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientLaw::CenteredExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            CoefficientLaw::ScaledStudentT { df } => {
                let t: f64 = rng.sample(StudentT::new(df).expect("validated df"));
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }
}

/// Infinite stream of standardized draws from one seed.
pub struct StandardizedStream {
    law: CoefficientLaw,
    rng: ChaCha8Rng,
}

impl Iterator for StandardizedStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.law.draw(&mut self.rng))
    }
}

pub fn standardized_draws(law: CoefficientLaw, seed: u64) -> Result<StandardizedStream, SamplerError> {
    law.validate()?;
    Ok(StandardizedStream {
        law,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

/// Coefficients `ξ_j` for basis indices `0..count`. Index `j` is drawn from
/// its own generator stream, so a coefficient does not depend on how many
/// others are requested.
pub fn kl_coefficients(law: CoefficientLaw, seed: u64, count: usize) -> Result<Vec<f64>, SamplerError> {
    law.validate()?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|j| {
            let mut rng = base.clone();
            rng.set_stream(j as u64);
            rng.set_word_pos(0);
            law.draw(&mut rng)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    KarhunenLoeve,
    CholeskyDirect,
}

/// How a sample was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub method: SamplingMethod,
    pub law: CoefficientLaw,
    pub seed: u64,
    /// Truncation level of the series (KL only).
    pub truncation: Option<usize>,
    /// True parameters, including `σ₀²` (KL only).
    pub params: Option<SpectralParams>,
}

#[derive(Debug, Clone)]
pub struct FieldSample {
    pub points: Arc<PointSet>,
    pub values: Vec<f64>,
    pub record: GenerationRecord,
}

/// Precomputed weighted basis `B_{ij} = σ₀ √v (τ₀+λ_j)^{−s₀/2} e_j(x_i)` for
/// repeated Karhunen–Loève sampling on one design.
#[derive(Debug, Clone)]
pub struct KlSampler {
    points: Arc<PointSet>,
    params: SpectralParams,
    truncation: usize,
    basis_len: usize,
    weighted_basis: Vec<f64>,
}

impl KlSampler {
    pub fn new(params: SpectralParams, truncation: usize, points: Arc<PointSet>) -> Result<Self, SamplerError> {
        let domain = points.domain();
        // Validates the parameters and yields v(θ₀).
        let kernel = SpectralKernel::new(domain, params, truncation)?;
        let amp = (params.sigma2 * kernel.normalization_factor()).sqrt();
        let (basis_len, weights): (usize, Vec<f64>) = match domain {
            Domain::Sphere => {
                let m = (truncation + 1) * (truncation + 1);
                let mut w = Vec::with_capacity(m);
                for l in 0..=truncation {
                    let lam = (l * (l + 1)) as f64;
                    let wl = amp * (-0.5 * params.s * (params.tau + lam).ln()).exp();
                    w.extend(std::iter::repeat_n(wl, 2 * l + 1));
                }
                (m, w)
            }
            Domain::Interval => (
                truncation,
                (1..=truncation)
                    .map(|i| amp * (-0.5 * params.s * (params.tau + (i * i) as f64).ln()).exp())
                    .collect(),
            ),
        };
        let n = points.len();
        let mut weighted_basis = vec![0.0; n * basis_len];
        for (i, p) in points.points().iter().enumerate() {
            let row = &mut weighted_basis[i * basis_len..(i + 1) * basis_len];
            match *p {
                DomainPoint::Sphere(_) => {
                    let (theta, phi) = p.spherical_angles();
                    real_spherical_harmonics_into(truncation, theta, phi, row);
                }
                DomainPoint::Interval(x) => {
                    let c = (2.0 / PI).sqrt();
                    for (k, r) in row.iter_mut().enumerate() {
                        *r = c * ((k + 1) as f64 * x).sin();
                    }
                }
            }
            for (r, w) in row.iter_mut().zip(&weights) {
                *r *= w;
            }
        }
        Ok(KlSampler {
            points,
            params,
            truncation,
            basis_len,
            weighted_basis,
        })
    }

    pub fn points(&self) -> &Arc<PointSet> {
        &self.points
    }

    /// Number of retained eigenfunctions.
    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    /// Field values for given coefficients `ξ`.
    pub fn values_for(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.basis_len);
        self.weighted_basis
            .chunks_exact(self.basis_len.max(1))
            .take(self.points.len())
            .map(|row| dot(row, xi))
            .collect()
    }

    pub fn sample(&self, law: CoefficientLaw, seed: u64) -> Result<FieldSample, SamplerError> {
        let xi = kl_coefficients(law, seed, self.basis_len)?;
        let values = if self.basis_len == 0 {
            vec![0.0; self.points.len()]
        } else {
            self.values_for(&xi)
        };
        Ok(FieldSample {
            points: Arc::clone(&self.points),
            values,
            record: GenerationRecord {
                method: SamplingMethod::KarhunenLoeve,
                law,
                seed,
                truncation: Some(self.truncation),
                params: Some(self.params),
            },
        })
    }
}

/// `u(x) = σ₀ √v(θ₀) Σ (τ₀+λ_j)^{−s₀/2} ξ_j e_j(x)` over the truncated basis.
pub fn sample_kl(
    params: SpectralParams,
    truncation: usize,
    law: CoefficientLaw,
    points: Arc<PointSet>,
    seed: u64,
) -> Result<FieldSample, SamplerError> {
    law.validate()?;
    KlSampler::new(params, truncation, points)?.sample(law, seed)
}

/// Exact draw from `N(0, K(x))` via `L z`, `K(x) = L Lᵀ`.
pub fn sample_gaussian_direct(model: &KernelModel, points: Arc<PointSet>, seed: u64) -> Result<FieldSample, SamplerError> {
    let gram = gram_matrix(model, &points)?;
    let chol = Cholesky::factor(&gram)?;
    Ok(sample_with_factor(&chol, points, seed))
}

/// Exact Gaussian draw reusing a factor of the design's Gram matrix.
pub fn sample_with_factor(chol: &Cholesky, points: Arc<PointSet>, seed: u64) -> FieldSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..chol.dim()).map(|_| rng.sample(StandardNormal)).collect();
    FieldSample {
        points,
        values: chol.mul_lower(&z),
        record: GenerationRecord {
            method: SamplingMethod::CholeskyDirect,
            law: CoefficientLaw::Gaussian,
            seed,
            truncation: None,
            params: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_placement_sphere;
    use crate::kernels::Normalization;

    fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        (mean, m2 / (n - 1) as f64, n)
    }

    #[test]
    fn laws_are_standardized() {
        // fourth moments: Gaussian 3, Rademacher 1, centered Exp 9; the t(4)
        // variance estimator has infinite variance, so it gets a wider band.
        for (law, kurt) in [
            (CoefficientLaw::Gaussian, 3.0),
            (CoefficientLaw::Rademacher, 1.0),
            (CoefficientLaw::CenteredExponential, 9.0),
            (CoefficientLaw::ScaledStudentT { df: 4.0 }, f64::NAN),
        ] {
            let n = 1_000_000;
            let (mean, var, _) = moments(standardized_draws(law, 11).unwrap().take(n));
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{law:?} mean {mean}");
            if kurt.is_finite() {
                // the 1/n floor covers the mean-correction term when x² is constant
                let se = ((kurt - 1.0) / n as f64).sqrt().max(1.0 / n as f64);
                assert!((var - 1.0).abs() < 4.0 * se, "{law:?} var {var}");
            } else {
                assert!((var - 1.0).abs() < 0.05, "{law:?} var {var}");
            }
        }
    }

    #[test]
    fn support_of_discrete_and_shifted_laws() {
        assert!(standardized_draws(CoefficientLaw::Rademacher, 3)
            .unwrap()
            .take(1000)
            .all(|x| x == 1.0 || x == -1.0));
        assert!(standardized_draws(CoefficientLaw::CenteredExponential, 3)
            .unwrap()
            .take(1000)
            .all(|x| x > -1.0));
        assert!(CoefficientLaw::ScaledStudentT { df: 2.0 }.validate().is_err());
    }

    #[test]
    fn single_constant_eigenfunction() {
        let ps = Arc::new(regular_placement_sphere(12).unwrap());
        let p = SpectralParams::new(5.0, 20.0, 1.0, Normalization::None);
        let s = sample_kl(p, 0, CoefficientLaw::Gaussian, ps, 9).unwrap();
        let xi = kl_coefficients(CoefficientLaw::Gaussian, 9, 1).unwrap()[0];
        let expect = (20f64.powf(-5.0) / (4.0 * PI)).sqrt() * xi;
        for v in &s.values {
            assert!((v - expect).abs() <= 1e-15 * expect.abs());
        }
    }

    #[test]
    fn deterministic_and_truncation_stable() {
        let ps = Arc::new(regular_placement_sphere(30).unwrap());
        let p = SpectralParams::new(5.0, 20.0, 1.0, Normalization::UnitDiagonal);
        let a = sample_kl(p, 100, CoefficientLaw::Gaussian, Arc::clone(&ps), 5).unwrap();
        let b = sample_kl(p, 100, CoefficientLaw::Gaussian, Arc::clone(&ps), 5).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample_kl(p, 150, CoefficientLaw::Gaussian, ps, 5).unwrap();
        let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // The difference is the l ∈ (100, 150] part of the series; its
        // standard deviation under unit-diagonal normalization is the square
        // root of the relative spectral tail (≈ 3.7e-6 here).
        let term = |l: usize| (2 * l + 1) as f64 * (20.0 + (l * (l + 1)) as f64).powf(-5.0);
        let head: f64 = (0..=100).map(term).sum();
        let tail: f64 = (101..=150).map(term).sum();
        let tail_sd = (tail / head).sqrt();
        for (x, y) in a.values.iter().zip(&c.values) {
            assert!((x - y).abs() <= 5.0 * tail_sd, "{} vs sd {tail_sd:e}", (x - y).abs());
            assert!((x - y).abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn marginal_variance_is_sigma2() {
        let ps = Arc::new(PointSet::new(Domain::Sphere, vec![DomainPoint::from_spherical(1.1, 0.4)]).unwrap());
        let p = SpectralParams::new(5.0, 20.0, 2.0, Normalization::UnitDiagonal);
        let sampler = KlSampler::new(p, 100, ps).unwrap();
        let vals = (0..5000u64).map(|r| sampler.sample(CoefficientLaw::Gaussian, 1000 + r).unwrap().values[0]);
        let (_, var, n) = moments(vals);
        // SE of a Gaussian sample variance: σ² √(2/(n−1))
        let se = 2.0 * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - 2.0).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn direct_sampling_single_point() {
        let ps = Arc::new(regular_placement_sphere(1).unwrap());
        let k: KernelModel = SpectralKernel::new(
            Domain::Sphere,
            SpectralParams::new(3.0, 2.0, 1.0, Normalization::UnitDiagonal),
            20,
        )
        .unwrap()
        .into();
        let a = sample_gaussian_direct(&k, Arc::clone(&ps), 4).unwrap();
        let b = sample_gaussian_direct(&k, ps, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z: f64 = rng.sample(StandardNormal);
        assert_eq!(a.values, b.values);
        assert!((a.values[0] - z).abs() < 1e-12);
    }

    #[test]
    fn interval_sampler_matches_kernel_diagonal() {
        let pts = Arc::new(crate::geometry::uniform_grid_interval(3).unwrap());
        let p = SpectralParams::new(1.5, 2.0, 1.0, Normalization::Power);
        let sampler = KlSampler::new(p, 40, Arc::clone(&pts)).unwrap();
        let k = SpectralKernel::new(Domain::Interval, p, 40).unwrap();
        // Σ_j B_ij² equals K(x_i, x_i)
        for i in 0..3 {
            let row = &sampler.weighted_basis[i * 40..(i + 1) * 40];
            let d: f64 = row.iter().map(|v| v * v).sum();
            let kii = k.eval(pts.get(i), pts.get(i)).unwrap();
            assert!((d - kii).abs() < 1e-13 * kii);
        }
    }
}
