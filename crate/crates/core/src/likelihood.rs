//! Gaussian log-likelihood, minimum-norm interpolation and conditional
//! variances, all through one Cholesky factorization of the Gram matrix.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{DomainPoint, PointSet};
use crate::kernels::{gram_matrix, KernelError, KernelModel};
use crate::linalg::{dot, lu_solve, Cholesky, LinalgError, SymMatrix};

/// Largest design accepted by [`logdet_by_conditioning`].
pub const CONDITIONING_PATH_MAX_N: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("data has length {got} but the design has {expected} points")]
    DataLength { expected: usize, got: usize },
    #[error("conditioning path is capped at n = {max}, got n = {got}")]
    TooLarge { max: usize, got: usize },
}

impl LikelihoodError {
    /// Failing pivot when the Gram matrix is numerically singular.
    pub fn singular_pivot(&self) -> Option<usize> {
        match self {
            LikelihoodError::Linalg(LinalgError::NearSingular { pivot, .. }) => Some(*pivot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodEval {
    pub loglik: f64,
    pub logdet: f64,
    /// `u(x)ᵀ K(x)⁻¹ u(x)`.
    pub quad_form: f64,
    pub n: usize,
    /// Smallest and largest diagonal entries of the Cholesky factor.
    pub chol_min: f64,
    pub chol_max: f64,
}

impl LikelihoodEval {
    pub fn from_parts(n: usize, logdet: f64, quad_form: f64, chol_min: f64, chol_max: f64) -> Self {
        let loglik = -0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * logdet - 0.5 * quad_form;
        LikelihoodEval {
            loglik,
            logdet,
            quad_form,
            n,
            chol_min,
            chol_max,
        }
    }
}

/// Gram matrix of the design, optionally with an explicit diagonal nugget.
pub fn factor_gram(model: &KernelModel, ps: &PointSet, nugget: f64) -> Result<Cholesky, LikelihoodError> {
    let mut g = gram_matrix(model, ps)?;
    if nugget != 0.0 {
        g.add_diagonal(nugget);
    }
    Ok(Cholesky::factor(&g)?)
}

fn check_len(chol: &Cholesky, u: &[f64]) -> Result<(), LikelihoodError> {
    if u.len() != chol.dim() {
        return Err(LikelihoodError::DataLength {
            expected: chol.dim(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Log-likelihood from an existing factor of `K(x)`.
pub fn log_likelihood_from_factor(chol: &Cholesky, u: &[f64]) -> Result<LikelihoodEval, LikelihoodError> {
    check_len(chol, u)?;
    let (lo, hi) = chol.min_max_diagonal();
    Ok(LikelihoodEval::from_parts(chol.dim(), chol.logdet(), chol.quad_form(u), lo, hi))
}

/// `ℓ = −(n/2) log 2π − ½ log det K(x) − ½ u(x)ᵀ K(x)⁻¹ u(x)`.
pub fn log_likelihood(model: &KernelModel, ps: &PointSet, u: &[f64]) -> Result<LikelihoodEval, LikelihoodError> {
    if u.len() != ps.len() {
        return Err(LikelihoodError::DataLength {
            expected: ps.len(),
            got: u.len(),
        });
    }
    log_likelihood_from_factor(&factor_gram(model, ps, 0.0)?, u)
}

/// Minimum-norm interpolant `m(y) = Σ c_i K(y, x_i)`, `c = K(x)⁻¹ u(x)`.
#[derive(Debug, Clone)]
pub struct InterpolantRep {
    pub coeffs: Vec<f64>,
    /// `‖m‖² = u(x)ᵀ K(x)⁻¹ u(x)`, computed exactly as the likelihood's quadratic form.
    pub squared_norm: f64,
    model: KernelModel,
    points: PointSet,
}

impl InterpolantRep {
    pub fn predict(&self, y: &DomainPoint) -> Result<f64, LikelihoodError> {
        let k = self.model.cross_covariance(&self.points, y)?;
        Ok(dot(&k, &self.coeffs))
    }

    pub fn model(&self) -> &KernelModel {
        &self.model
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }
}

pub fn min_norm_interpolant(model: &KernelModel, ps: &PointSet, u: &[f64]) -> Result<InterpolantRep, LikelihoodError> {
    let chol = factor_gram(model, ps, 0.0)?;
    check_len(&chol, u)?;
    Ok(InterpolantRep {
        coeffs: chol.solve(u),
        squared_norm: chol.quad_form(u),
        model: model.clone(),
        points: ps.clone(),
    })
}

/// Reusable factor for conditional variances at many target points.
#[derive(Debug, Clone)]
pub struct Conditioner {
    model: KernelModel,
    points: PointSet,
    chol: Option<Cholesky>,
}

impl Conditioner {
    pub fn new(model: &KernelModel, ps: &PointSet) -> Result<Self, LikelihoodError> {
        let chol = if ps.is_empty() {
            None
        } else {
            Some(factor_gram(model, ps, 0.0)?)
        };
        Ok(Conditioner {
            model: model.clone(),
            points: ps.clone(),
            chol,
        })
    }

    /// `V(y|x) = K(y,y) − K(y,x) K(x)⁻¹ K(x,y)`, clipped at 0 from below.
    pub fn variance(&self, y: &DomainPoint) -> Result<f64, LikelihoodError> {
        let kyy = self.model.covariance(y, y)?;
        let Some(chol) = &self.chol else {
            return Ok(kyy);
        };
        let k = self.model.cross_covariance(&self.points, y)?;
        Ok((kyy - chol.quad_form(&k)).max(0.0))
    }
}

pub fn conditional_variance(model: &KernelModel, ps: &PointSet, y: &DomainPoint) -> Result<f64, LikelihoodError> {
    Conditioner::new(model, ps)?.variance(y)
}

/// `log det K(x) = Σ_i log V(x_i | x_1, …, x_{i−1})`, each conditional variance
/// solved independently by Gaussian elimination. Cost `O(n⁴)`; validation only.
pub fn logdet_by_conditioning(model: &KernelModel, ps: &PointSet) -> Result<f64, LikelihoodError> {
    let n = ps.len();
    if n > CONDITIONING_PATH_MAX_N {
        return Err(LikelihoodError::TooLarge {
            max: CONDITIONING_PATH_MAX_N,
            got: n,
        });
    }
    let g = gram_matrix(model, ps)?;
    let mut total = 0.0;
    for i in 0..n {
        let kii = g.get(i, i);
        let v = if i == 0 {
            kii
        } else {
            let block: SymMatrix = g.leading(i);
            let k: Vec<f64> = (0..i).map(|j| g.get(j, i)).collect();
            let w = lu_solve(&block, &k)?;
            kii - dot(&k, &w)
        };
        if !(v > 0.0) {
            return Err(LinalgError::NearSingular {
                pivot: i,
                value: v,
                threshold: 0.0,
            }
            .into());
        }
        total += v.ln();
    }
    Ok(total)
}
