use statrs::function::gamma::ln_gamma;

use super::KernelError;
use crate::geometry::Domain;
use crate::quadrature::integrate;

const REL_TOL: f64 = 1e-12;

/// Generalized Wendland covariance
/// `σ² 2^{1−κ}/Γ(κ) ∫_{r/β}^1 u (u² − r²/β²)^{κ−1} (1−u)^μ du`, zero for `r ≥ β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WendlandKernel {
    pub domain: Domain,
    pub kappa: f64,
    pub mu: f64,
    pub beta: f64,
    pub sigma2: f64,
}

/// Smallest admissible `μ`: positive definiteness in the ambient space
/// `ℝ^k` needs `μ ≥ (k+1)/2 + κ`.
pub fn minimal_wendland_mu(domain: Domain, kappa: f64) -> f64 {
    (domain.ambient_dim() as f64 + 1.0) / 2.0 + kappa
}

/// Default `μ = ⌈(k+1)/2 + κ⌉`.
pub fn default_wendland_mu(domain: Domain, kappa: f64) -> f64 {
    minimal_wendland_mu(domain, kappa).ceil()
}

impl WendlandKernel {
    pub fn new(domain: Domain, kappa: f64, mu: f64, beta: f64, sigma2: f64) -> Result<Self, KernelError> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(KernelError::Parameter(format!("Wendland kappa = {kappa} must be positive")));
        }
        let mu_min = minimal_wendland_mu(domain, kappa);
        if !(mu >= mu_min) || !mu.is_finite() {
            return Err(KernelError::Parameter(format!(
                "Wendland mu = {mu} is below the validity threshold {mu_min}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(KernelError::Parameter(format!("Wendland support beta = {beta} must be positive")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(KernelError::Parameter(format!(
                "Wendland magnitude sigma2 = {sigma2} must be positive"
            )));
        }
        Ok(WendlandKernel {
            domain,
            kappa,
            mu,
            beta,
            sigma2,
        })
    }

    pub fn eval_distance(&self, r: f64) -> Result<f64, KernelError> {
        wendland_eval(self.kappa, self.mu, self.beta, self.sigma2, r)
    }
}

/// `∫_z^1 u (u² − z²)^{κ−1} (1−u)^μ du` for `0 ≤ z < 1`.
fn wendland_integral(kappa: f64, mu: f64, z: f64) -> Result<f64, KernelError> {
    // Value at z = 0 is B(2κ, μ+1); the tolerance is taken relative to it.
    let scale = (ln_gamma(2.0 * kappa) + ln_gamma(mu + 1.0) - ln_gamma(2.0 * kappa + mu + 1.0)).exp();
    let tol = REL_TOL * scale;
    if kappa >= 1.0 {
        let f = |u: f64| {
            let w = ((u - z) * (u + z)).max(0.0);
            u * w.powf(kappa - 1.0) * (1.0 - u).max(0.0).powf(mu)
        };
        Ok(integrate(f, z, 1.0, tol)?)
    } else {
        // u = z + (1−z) t^{1/κ} absorbs (u−z)^{κ−1}:
        // integrand becomes (1−z)^κ/κ · u (u+z)^{κ−1} (1−u)^μ in t ∈ [0, 1].
        let w = 1.0 - z;
        let pref = w.powf(kappa) / kappa;
        let f = |t: f64| {
            let u = z + w * t.powf(1.0 / kappa);
            let up = u + z;
            if up <= 0.0 {
                return 0.0;
            }
            pref * u * up.powf(kappa - 1.0) * (1.0 - u).max(0.0).powf(mu)
        };
        Ok(integrate(f, 0.0, 1.0, tol)?)
    }
}

/// Generalized Wendland covariance at distance `r`.
pub fn wendland_eval(kappa: f64, mu: f64, beta: f64, sigma2: f64, r: f64) -> Result<f64, KernelError> {
    if !(kappa > 0.0) || !(beta > 0.0) || !(mu >= 0.0) {
        return Err(KernelError::Parameter(format!(
            "invalid Wendland parameters kappa = {kappa}, mu = {mu}, beta = {beta}"
        )));
    }
    if !(r >= 0.0) {
        return Err(KernelError::Argument(format!("distance r = {r} must be nonnegative")));
    }
    let z = r / beta;
    if z >= 1.0 {
        return Ok(0.0);
    }
    let pref = ((1.0 - kappa) * std::f64::consts::LN_2 - ln_gamma(kappa)).exp();
    Ok(sigma2 * pref * wendland_integral(kappa, mu, z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;

    #[test]
    fn support_and_beta_integral() {
        assert_eq!(wendland_eval(1.0, 4.0, 0.7, 1.0, 0.7).unwrap(), 0.0);
        assert_eq!(wendland_eval(1.0, 4.0, 0.7, 1.0, 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(wendland_eval(1.0, 4.0, 1.0, 1.0, 0.0).unwrap(), 1.0 / 30.0, epsilon = 1e-14);
        let just_inside = wendland_eval(2.0, 5.0, 1.0, 1.0, 1.0 - 1e-6).unwrap();
        assert!(just_inside >= 0.0 && just_inside < 1e-25);
    }

    #[test]
    fn stable_under_node_doubling() {
        // fixed Gauss–Legendre rules of increasing order as an independent route
        let z: f64 = 0.5;
        let f = |u: f64| u * (u * u - z * z).powf(1.0) * (1.0 - u).powf(5.0);
        let gl = |n: usize| -> f64 {
            let (x, w) = gauss_legendre(n);
            let (a, b) = (z, 1.0);
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| 0.5 * (b - a) * wi * f(0.5 * (b - a) * xi + 0.5 * (a + b)))
                .sum::<f64>()
                * 0.5 // 2^{1−κ}/Γ(κ) at κ = 2
        };
        let v = wendland_eval(2.0, 5.0, 1.0, 1.0, 0.5).unwrap();
        assert!((gl(20) - gl(40)).abs() < 1e-14);
        assert_abs_diff_eq!(v, gl(40), epsilon = 1e-10);
    }

    #[test]
    fn singular_kappa_substitution() {
        // κ = 1/2, z = 0: 2^{1/2}/Γ(1/2) ∫ u·u^{−1}(1−u)^μ du = √2/√π/(μ+1)
        let mu = 3.0;
        let v = wendland_eval(0.5, mu, 1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(v, (2.0 / std::f64::consts::PI).sqrt() / (mu + 1.0), epsilon = 1e-12);
        // decreasing in r on (0, β)
        let mut prev = v;
        for k in 1..20 {
            let w = wendland_eval(0.5, mu, 1.0, 1.0, 0.05 * k as f64).unwrap();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn validity_threshold() {
        assert!(WendlandKernel::new(Domain::Sphere, 1.0, 2.9, 1.0, 1.0).is_err());
        assert!(WendlandKernel::new(Domain::Sphere, 1.0, 3.0, 1.0, 1.0).is_ok());
        assert!(WendlandKernel::new(Domain::Interval, 1.0, 2.0, 1.0, 1.0).is_ok());
        assert_eq!(default_wendland_mu(Domain::Sphere, 3.5), 6.0);
    }
}
