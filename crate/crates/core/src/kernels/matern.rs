use statrs::function::gamma::ln_gamma;

use super::KernelError;
use crate::bessel::ln_bessel_k;
use crate::geometry::Domain;

// Closed forms are used up to this half-integer order; beyond it the
// factorial ratios lose accuracy faster than the Bessel route.
const MAX_CLOSED_FORM_ORDER: u32 = 12;

/// Euclidean Matérn covariance `σ² 2^{1−ν}/Γ(ν) (√τ r)^ν K_ν(√τ r)`,
/// evaluated at the chordal distance of its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternKernel {
    pub domain: Domain,
    pub nu: f64,
    pub tau: f64,
    pub sigma2: f64,
}

fn check(nu: f64, tau: f64, sigma2: f64) -> Result<(), KernelError> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(KernelError::Parameter(format!("Matérn order nu = {nu} must be positive")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(KernelError::Parameter(format!("Matérn scale tau = {tau} must be positive")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(KernelError::Parameter(format!(
            "Matérn magnitude sigma2 = {sigma2} must be positive"
        )));
    }
    Ok(())
}

impl MaternKernel {
    pub fn new(domain: Domain, nu: f64, tau: f64, sigma2: f64) -> Result<Self, KernelError> {
        check(nu, tau, sigma2)?;
        Ok(MaternKernel {
            domain,
            nu,
            tau,
            sigma2,
        })
    }

    pub fn eval_distance(&self, r: f64) -> f64 {
        self.sigma2 * matern_correlation(self.nu, self.tau.sqrt() * r)
    }
}

/// `2^{1−ν}/Γ(ν) x^ν K_ν(x)` through the Bessel function, in log space.
pub fn matern_correlation_bessel(nu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let ln = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * x.ln() + ln_bessel_k(nu, x);
    ln.exp()
}

/// `ν = p + 1/2`: `e^{−x} p!/(2p)! Σ_{i=0}^{p} (p+i)!/(i!(p−i)!) (2x)^{p−i}`.
fn half_integer_correlation(p: u32, x: f64) -> f64 {
    // Horner in 2x with coefficients c_i = p!/(2p)! (p+i)!/(i!(p−i)!).
    let p = p as usize;
    let mut fact = vec![1.0f64; 2 * p + 1];
    for k in 1..=2 * p {
        fact[k] = fact[k - 1] * k as f64;
    }
    let y = 2.0 * x;
    let mut acc = 0.0;
    // coefficient of y^{p−i}; iterate from the highest power (i = 0) down
    for i in 0..=p {
        let c = fact[p] / fact[2 * p] * fact[p + i] / (fact[i] * fact[p - i]);
        acc = acc * y + c;
    }
    acc * (-x).exp()
}

fn matern_correlation(nu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let p = nu - 0.5;
    if p >= 0.0 && p.fract() == 0.0 && p <= MAX_CLOSED_FORM_ORDER as f64 {
        return half_integer_correlation(p as u32, x);
    }
    matern_correlation_bessel(nu, x)
}

/// Matérn covariance at distance `r`.
pub fn matern_eval(nu: f64, tau: f64, sigma2: f64, r: f64) -> Result<f64, KernelError> {
    check(nu, tau, sigma2)?;
    if !(r >= 0.0) {
        return Err(KernelError::Argument(format!("distance r = {r} must be nonnegative")));
    }
    Ok(sigma2 * matern_correlation(nu, tau.sqrt() * r))
}
