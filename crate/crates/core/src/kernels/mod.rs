//! Covariance kernels behind a common evaluation interface.
//!
//! * [`SpectralKernel`]: the truncated Whittle–Matérn series
//!   `v(θ) Σ (τ+λ_i)^{−s} e_i(x) e_i(y)`, collapsed on the sphere by the
//!   addition theorem to a Legendre series in `⟨x, y⟩`.
//! * [`MaternKernel`]: the Euclidean Matérn covariance applied to chordal
//!   distance.
//! * [`WendlandKernel`]: generalized Wendland functions applied to chordal
//!   distance.

mod family;
mod fit;
mod matern;
pub(crate) mod spectral;
mod wendland;

pub use family::{SmoothnessFamily, SpectralRangeFamily};
pub use fit::{fit_auxiliary_parameters, AuxiliaryFamily, FittedParameters};
pub use matern::{matern_correlation_bessel, matern_eval, MaternKernel};
pub use spectral::{spectral_truncation_tail, SpectralKernel, DEFAULT_TRUNCATION};
pub use wendland::{default_wendland_mu, minimal_wendland_mu, wendland_eval, WendlandKernel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{chordal_distance, Domain, DomainPoint, GeometryError, PointSet};
use crate::linalg::SymMatrix;
use crate::quadrature::QuadratureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameter: {0}")]
    Parameter(String),
    #[error("truncation tail diverges for s = {0} (needs s > 1)")]
    Divergent(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Choice of the normalization function `v(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `v(θ) = τ^{−s+d/2}`.
    Power,
    /// `v(θ)` is the inverse of the domain-averaged marginal variance of the
    /// truncated series. On the sphere the diagonal is constant, so this is
    /// exactly `K(x, x) ≡ 1` (times `σ²`).
    UnitDiagonal,
    /// `v ≡ 1`.
    None,
}

/// Smoothness `s`, range scale `τ`, magnitude `σ²` and the normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub s: f64,
    pub tau: f64,
    pub sigma2: f64,
    pub normalization: Normalization,
}

impl SpectralParams {
    pub fn new(s: f64, tau: f64, sigma2: f64, normalization: Normalization) -> Self {
        SpectralParams {
            s,
            tau,
            sigma2,
            normalization,
        }
    }

    /// Checks `s > d/2`, `τ > 0`, `σ² > 0`.
    pub fn validate(&self, dim: usize) -> Result<(), KernelError> {
        let half_d = dim as f64 / 2.0;
        if !(self.s > half_d) || !self.s.is_finite() {
            return Err(KernelError::Parameter(format!(
                "smoothness s = {} must exceed d/2 = {half_d}",
                self.s
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(KernelError::Parameter(format!(
                "range scale tau = {} must be positive",
                self.tau
            )));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(KernelError::Parameter(format!(
                "magnitude sigma2 = {} must be positive",
                self.sigma2
            )));
        }
        Ok(())
    }
}

/// One of the supported covariance kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelModel {
    TruncatedSpectral(SpectralKernel),
    EuclideanMatern(MaternKernel),
    GeneralizedWendland(WendlandKernel),
}

impl From<SpectralKernel> for KernelModel {
    fn from(k: SpectralKernel) -> Self {
        KernelModel::TruncatedSpectral(k)
    }
}

impl From<MaternKernel> for KernelModel {
    fn from(k: MaternKernel) -> Self {
        KernelModel::EuclideanMatern(k)
    }
}

impl From<WendlandKernel> for KernelModel {
    fn from(k: WendlandKernel) -> Self {
        KernelModel::GeneralizedWendland(k)
    }
}

impl KernelModel {
    pub fn domain(&self) -> Domain {
        match self {
            KernelModel::TruncatedSpectral(k) => k.domain(),
            KernelModel::EuclideanMatern(k) => k.domain,
            KernelModel::GeneralizedWendland(k) => k.domain,
        }
    }

    /// Magnitude `σ²` carried by the model.
    pub fn sigma2(&self) -> f64 {
        match self {
            KernelModel::TruncatedSpectral(k) => k.params().sigma2,
            KernelModel::EuclideanMatern(k) => k.sigma2,
            KernelModel::GeneralizedWendland(k) => k.sigma2,
        }
    }

    /// Same kernel with magnitude replaced.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<KernelModel, KernelError> {
        Ok(match self {
            KernelModel::TruncatedSpectral(k) => {
                let mut p = *k.params();
                p.sigma2 = sigma2;
                KernelModel::TruncatedSpectral(SpectralKernel::new(k.domain(), p, k.truncation())?)
            }
            KernelModel::EuclideanMatern(k) => {
                KernelModel::EuclideanMatern(MaternKernel::new(k.domain, k.nu, k.tau, sigma2)?)
            }
            KernelModel::GeneralizedWendland(k) => KernelModel::GeneralizedWendland(
                WendlandKernel::new(k.domain, k.kappa, k.mu, k.beta, sigma2)?,
            ),
        })
    }

    /// Covariance `K(a, b)`.
    pub fn covariance(&self, a: &DomainPoint, b: &DomainPoint) -> Result<f64, KernelError> {
        match self {
            KernelModel::TruncatedSpectral(k) => k.eval(a, b),
            KernelModel::EuclideanMatern(k) => Ok(k.eval_distance(chordal_distance(a, b)?)),
            KernelModel::GeneralizedWendland(k) => k.eval_distance(chordal_distance(a, b)?),
        }
    }

    /// Covariance as a function of chordal distance on the sphere. For the
    /// spectral kernel `⟨x, y⟩ = 1 − r²/2`.
    pub fn covariance_at_chordal(&self, r: f64) -> Result<f64, KernelError> {
        match self {
            KernelModel::TruncatedSpectral(k) => {
                if k.domain() != Domain::Sphere {
                    return Err(KernelError::Argument(
                        "radial profile of the spectral kernel exists only on the sphere".into(),
                    ));
                }
                Ok(k.eval_cos((1.0 - 0.5 * r * r).clamp(-1.0, 1.0)))
            }
            KernelModel::EuclideanMatern(k) => Ok(k.eval_distance(r)),
            KernelModel::GeneralizedWendland(k) => k.eval_distance(r),
        }
    }

    /// Cross-covariances `K(y, x_i)` for every design point.
    pub fn cross_covariance(&self, ps: &PointSet, y: &DomainPoint) -> Result<Vec<f64>, KernelError> {
        ps.points().iter().map(|x| self.covariance(x, y)).collect()
    }
}

/// Gram matrix `K(x)_{ij} = K(x_i, x_j)` of a design.
pub fn gram_matrix(model: &KernelModel, ps: &PointSet) -> Result<SymMatrix, KernelError> {
    if ps.domain() != model.domain() {
        return Err(GeometryError::DomainMismatch(model.domain(), ps.domain()).into());
    }
    match model {
        KernelModel::TruncatedSpectral(k) => Ok(k.gram(ps)),
        _ => {
            let pts = ps.points();
            let mut err = None;
            let m = SymMatrix::from_upper(pts.len(), |i, j| match model.covariance(&pts[i], &pts[j]) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(m),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_placement_sphere;

    #[test]
    fn gram_symmetry_and_single_point() {
        let ps = regular_placement_sphere(30).unwrap();
        let models: Vec<KernelModel> = vec![
            SpectralKernel::new(
                Domain::Sphere,
                SpectralParams::new(5.0, 20.0, 1.0, Normalization::UnitDiagonal),
                100,
            )
            .unwrap()
            .into(),
            MaternKernel::new(Domain::Sphere, 1.3, 4.0, 2.0).unwrap().into(),
            WendlandKernel::new(Domain::Sphere, 1.0, 4.0, 1.2, 1.0).unwrap().into(),
        ];
        for m in &models {
            let g = gram_matrix(m, &ps).unwrap();
            assert_eq!(g.asymmetry(), 0.0);
            let one = ps.prefix(1);
            let g1 = gram_matrix(m, &one).unwrap();
            assert_eq!(g1.dim(), 1);
            assert_eq!(g1.get(0, 0), m.covariance(one.get(0), one.get(0)).unwrap());
        }
    }

    #[test]
    fn gram_rejects_domain_mismatch() {
        let ps = crate::geometry::uniform_grid_interval(4).unwrap();
        let m: KernelModel = MaternKernel::new(Domain::Sphere, 1.5, 1.0, 1.0).unwrap().into();
        assert!(gram_matrix(&m, &ps).is_err());
    }

    #[test]
    fn params_validation() {
        let p = SpectralParams::new(1.0, 20.0, 1.0, Normalization::Power);
        assert!(p.validate(2).is_err());
        assert!(p.validate(1).is_ok());
        assert!(SpectralParams::new(2.0, 0.0, 1.0, Normalization::Power).validate(2).is_err());
        assert!(SpectralParams::new(2.0, 1.0, -1.0, Normalization::Power).validate(2).is_err());
    }
}
