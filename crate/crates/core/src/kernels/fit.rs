use super::{default_wendland_mu, KernelError, KernelModel, MaternKernel, WendlandKernel};

/// Candidate family for [`fit_auxiliary_parameters`]; the smoothness-type
/// parameters are frozen, the scale (`τ` or `β`) and `σ²` are fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxiliaryFamily {
    Matern { nu: f64 },
    /// `mu = None` selects the default for the target's domain.
    Wendland { kappa: f64, mu: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedParameters {
    pub model: KernelModel,
    /// Fitted `τ` (Matérn) or `β` (Wendland).
    pub scale: f64,
    pub sigma2: f64,
    /// `Σ (K_fit(r) − K_target(r))²` over the grid.
    pub residual: f64,
    /// `√(residual / Σ K_target(r)²)`.
    pub relative_residual: f64,
}

// log-scale search window for the scale parameter
const MATERN_LOG_RANGE: (f64, f64) = (-6.0, 10.0);
const WENDLAND_LOG_RANGE: (f64, f64) = (-4.0, 4.0);
const COARSE_POINTS: usize = 161;

fn unit_profile(family: AuxiliaryFamily, domain: crate::geometry::Domain, scale: f64, grid: &[f64]) -> Result<Vec<f64>, KernelError> {
    match family {
        AuxiliaryFamily::Matern { nu } => {
            let k = MaternKernel::new(domain, nu, scale, 1.0)?;
            Ok(grid.iter().map(|&r| k.eval_distance(r)).collect())
        }
        AuxiliaryFamily::Wendland { kappa, mu } => {
            let mu = mu.unwrap_or_else(|| default_wendland_mu(domain, kappa));
            let k = WendlandKernel::new(domain, kappa, mu, scale, 1.0)?;
            grid.iter().map(|&r| k.eval_distance(r)).collect()
        }
    }
}

/// Least-squares fit of a candidate family's covariance curve to the target's
/// curve over a chordal distance grid. `σ²` is solved in closed form for each
/// scale; the scale is searched on a coarse log grid and refined by
/// golden-section search.
pub fn fit_auxiliary_parameters(
    target: &KernelModel,
    family: AuxiliaryFamily,
    grid: &[f64],
) -> Result<FittedParameters, KernelError> {
    if grid.is_empty() {
        return Err(KernelError::Argument("distance grid is empty".into()));
    }
    let domain = target.domain();
    let t: Vec<f64> = grid
        .iter()
        .map(|&r| target.covariance_at_chordal(r))
        .collect::<Result<_, _>>()?;
    let tt: f64 = t.iter().map(|v| v * v).sum();

    // (residual, σ²) at a given log-scale
    let objective = |log_scale: f64| -> Result<(f64, f64), KernelError> {
        let g = unit_profile(family, domain, log_scale.exp(), grid)?;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let gt: f64 = g.iter().zip(&t).map(|(a, b)| a * b).sum();
        if !(gg > 0.0) {
            return Ok((tt, 0.0));
        }
        let s2 = (gt / gg).max(0.0);
        let res: f64 = g.iter().zip(&t).map(|(a, b)| (s2 * a - b).powi(2)).sum();
        Ok((res, s2))
    };

    let (lo, hi) = match family {
        AuxiliaryFamily::Matern { .. } => MATERN_LOG_RANGE,
        AuxiliaryFamily::Wendland { .. } => WENDLAND_LOG_RANGE,
    };
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let mut best = (f64::INFINITY, lo);
    for k in 0..COARSE_POINTS {
        let x = lo + step * k as f64;
        let (res, _) = objective(x)?;
        if res < best.0 {
            best = (res, x);
        }
    }
    // golden-section on the bracket around the coarse minimizer
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = objective(c)?.0;
    let mut fd = objective(d)?.0;
    while b - a > 1e-10 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d)?.0;
        }
    }
    let mid = 0.5 * (a + b);
    let (mut res, mut s2) = objective(mid)?;
    let mut log_scale = mid;
    if best.0 < res {
        log_scale = best.1;
        (res, s2) = objective(log_scale)?;
    }
    let scale = log_scale.exp();
    let model: KernelModel = match family {
        AuxiliaryFamily::Matern { nu } => MaternKernel::new(domain, nu, scale, s2)?.into(),
        AuxiliaryFamily::Wendland { kappa, mu } => WendlandKernel::new(
            domain,
            kappa,
            mu.unwrap_or_else(|| default_wendland_mu(domain, kappa)),
            scale,
            s2,
        )?
        .into(),
    };
    Ok(FittedParameters {
        model,
        scale,
        sigma2: s2,
        residual: res,
        relative_residual: if tt > 0.0 { (res / tt).sqrt() } else { 0.0 },
    })
}
