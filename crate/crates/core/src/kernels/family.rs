use super::{
    default_wendland_mu, KernelError, KernelModel, MaternKernel, Normalization, SpectralKernel, SpectralParams,
    WendlandKernel,
};
use crate::geometry::Domain;

/// A kernel family indexed by smoothness `s`, as scanned by the smoothness
/// estimator. Every variant maps `s` to a kernel whose RKHS has Sobolev
/// order `s` on the domain.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothnessFamily {
    /// Truncated spectral kernel with fixed `τ`.
    Spectral {
        domain: Domain,
        tau: f64,
        sigma2: f64,
        normalization: Normalization,
        truncation: usize,
    },
    /// Euclidean Matérn with order `ν = s − d/2`.
    Matern { domain: Domain, tau: f64, sigma2: f64 },
    /// Generalized Wendland with `κ = s − (d+1)/2`; `mu = None` uses the
    /// default for each `κ`.
    Wendland {
        domain: Domain,
        beta: f64,
        sigma2: f64,
        mu: Option<f64>,
    },
}

impl SmoothnessFamily {
    pub fn domain(&self) -> Domain {
        match self {
            SmoothnessFamily::Spectral { domain, .. }
            | SmoothnessFamily::Matern { domain, .. }
            | SmoothnessFamily::Wendland { domain, .. } => *domain,
        }
    }

    pub fn sigma2(&self) -> f64 {
        match self {
            SmoothnessFamily::Spectral { sigma2, .. }
            | SmoothnessFamily::Matern { sigma2, .. }
            | SmoothnessFamily::Wendland { sigma2, .. } => *sigma2,
        }
    }

    pub fn model_at(&self, s: f64) -> Result<KernelModel, KernelError> {
        let half_d = self.domain().dim() as f64 / 2.0;
        if !(s > half_d) {
            return Err(KernelError::Parameter(format!(
                "smoothness s = {s} must exceed d/2 = {half_d}"
            )));
        }
        match *self {
            SmoothnessFamily::Spectral {
                domain,
                tau,
                sigma2,
                normalization,
                truncation,
            } => Ok(SpectralKernel::new(domain, SpectralParams::new(s, tau, sigma2, normalization), truncation)?.into()),
            SmoothnessFamily::Matern { domain, tau, sigma2 } => {
                Ok(MaternKernel::new(domain, s - half_d, tau, sigma2)?.into())
            }
            SmoothnessFamily::Wendland {
                domain,
                beta,
                sigma2,
                mu,
            } => {
                let kappa = s - half_d - 0.5;
                if !(kappa > 0.0) {
                    return Err(KernelError::Parameter(format!(
                        "Wendland family needs s > (d+1)/2, got s = {s}"
                    )));
                }
                let mu = mu.unwrap_or_else(|| default_wendland_mu(domain, kappa));
                Ok(WendlandKernel::new(domain, kappa, mu, beta, sigma2)?.into())
            }
        }
    }
}

/// Truncated spectral kernels indexed by `τ` at fixed smoothness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRangeFamily {
    pub domain: Domain,
    pub s: f64,
    pub sigma2: f64,
    pub normalization: Normalization,
    pub truncation: usize,
}

impl SpectralRangeFamily {
    pub fn model_at(&self, tau: f64) -> Result<SpectralKernel, KernelError> {
        SpectralKernel::new(
            self.domain,
            SpectralParams::new(self.s, tau, self.sigma2, self.normalization),
            self.truncation,
        )
    }
}
