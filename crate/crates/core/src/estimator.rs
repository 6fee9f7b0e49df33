//! Maximum-likelihood estimation of the smoothness, the magnitude and the
//! range scale.
//!
//! Smoothness is found by a deterministic coarse grid followed by
//! golden-section refinement of the bracket around the best grid point.
//! Coarse-grid factorizations are shared across data sets observed on the
//! same design, which is what makes replicated experiments affordable.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::PointSet;
use crate::kernels::{KernelError, KernelModel, SmoothnessFamily, SpectralRangeFamily};
use crate::likelihood::{factor_gram, LikelihoodError};
use crate::linalg::Cholesky;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("estimation failed: {0}")]
    Failed(String),
    #[error("invalid search setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Settings of the smoothness search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessOptions {
    pub grid_step: f64,
    /// Golden-section stops once the bracket is narrower than this.
    pub tolerance: f64,
    /// Replace `σ²` by its closed-form maximizer at every `s`.
    pub profile_magnitude: bool,
    /// Explicit diagonal nugget added to every Gram matrix (0 = none).
    pub nugget: f64,
}

impl Default for SmoothnessOptions {
    fn default() -> Self {
        SmoothnessOptions {
            grid_step: 0.25,
            tolerance: 1e-4,
            profile_magnitude: false,
            nugget: 0.0,
        }
    }
}

/// Default smoothness search interval on the sphere.
pub const DEFAULT_SMOOTHNESS_INTERVAL: (f64, f64) = (1.0 + 1e-7, 30.0);

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    InvalidParameter(String),
    /// Cholesky breakdown at the given pivot.
    Singular(usize),
    /// Profiled magnitude is zero (the data vanish).
    Degenerate,
}

/// One evaluated point of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    /// Parameter value (`s` or `τ`).
    pub at: f64,
    /// Log-likelihood, profiled over `σ²` when that option is set.
    pub loglik: Option<f64>,
    /// Magnitude estimate `σ̂²` at this point.
    pub sigma2: Option<f64>,
    pub status: RowStatus,
    pub chol_min: f64,
    pub chol_max: f64,
}

impl ProfileRow {
    fn failed(at: f64, status: RowStatus) -> Self {
        ProfileRow {
            at,
            loglik: None,
            sigma2: None,
            status,
            chol_min: f64::NAN,
            chol_max: f64::NAN,
        }
    }

    fn score(&self) -> f64 {
        self.loglik.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationTrace {
    pub grid: Vec<ProfileRow>,
    /// Successive golden-section brackets, outermost first.
    pub brackets: Vec<(f64, f64)>,
    pub final_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Smoothness estimate (the fixed smoothness for range estimation).
    pub s_hat: f64,
    pub sigma2_hat: f64,
    pub tau_hat: Option<f64>,
    /// `σ̂² v(θ̂)`, when the kernel is spectral.
    pub microergodic: Option<f64>,
    pub loglik: f64,
    /// The maximizer sits on an end of the search interval.
    pub boundary: bool,
    pub chol_min: f64,
    pub chol_max: f64,
    pub trace: EstimationTrace,
    pub elapsed: Duration,
}

/// `σ̂² = u(x)ᵀ K(x)⁻¹ u(x) / n`.
pub fn estimate_magnitude(model: &KernelModel, ps: &PointSet, u: &[f64]) -> Result<f64, EstimationError> {
    let e = crate::likelihood::log_likelihood(model, ps, u)?;
    Ok(e.quad_form / e.n as f64)
}

/// Objective at one parameter value given a factor of `σ_f² K̃`.
fn evaluate(chol: &Cholesky, u: &[f64], at: f64, sigma2_f: f64, profile: bool) -> ProfileRow {
    let n = u.len() as f64;
    let logdet = chol.logdet();
    let q = chol.quad_form(u);
    let (lo, hi) = chol.min_max_diagonal();
    let base = -0.5 * n * (2.0 * std::f64::consts::PI).ln();
    let c = q / n;
    let (loglik, sigma2, status) = if profile {
        if !(c > 0.0) {
            (None, Some(0.0), RowStatus::Degenerate)
        } else {
            (Some(base - 0.5 * (logdet + n * c.ln()) - 0.5 * n), Some(sigma2_f * c), RowStatus::Ok)
        }
    } else {
        (Some(base - 0.5 * logdet - 0.5 * q), Some(sigma2_f * c), RowStatus::Ok)
    };
    ProfileRow {
        at,
        loglik,
        sigma2,
        status,
        chol_min: lo,
        chol_max: hi,
    }
}

/// Factors the Gram matrix of the model at one parameter value; the error
/// status is returned instead when the model or the factorization fails.
fn factor_at<F>(make: &F, at: f64, ps: &PointSet, nugget: f64) -> Result<(Cholesky, f64), RowStatus>
where
    F: Fn(f64) -> Result<KernelModel, KernelError>,
{
    let model = make(at).map_err(|e| RowStatus::InvalidParameter(e.to_string()))?;
    match factor_gram(&model, ps, nugget) {
        Ok(c) => Ok((c, model.sigma2())),
        Err(e) => match e.singular_pivot() {
            Some(p) => Err(RowStatus::Singular(p)),
            None => Err(RowStatus::InvalidParameter(e.to_string())),
        },
    }
}

fn evaluate_batch<F>(make: &F, at: f64, ps: &PointSet, data: &[&[f64]], opts: &SmoothnessOptions) -> Vec<ProfileRow>
where
    F: Fn(f64) -> Result<KernelModel, KernelError>,
{
    match factor_at(make, at, ps, opts.nugget) {
        Ok((chol, s2)) => data
            .iter()
            .map(|u| evaluate(&chol, u, at, s2, opts.profile_magnitude))
            .collect(),
        Err(status) => data.iter().map(|_| ProfileRow::failed(at, status.clone())).collect(),
    }
}

fn search_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut k = 0usize;
    loop {
        let x = lo + step * k as f64;
        if x >= hi - 1e-12 * step {
            break;
        }
        g.push(x);
        k += 1;
    }
    g.push(hi);
    g
}

/// Golden-section maximization on `[a, b]`, starting from the best coarse point.
fn golden_refine<F>(
    make: &F,
    ps: &PointSet,
    u: &[f64],
    coarse_best: &ProfileRow,
    bracket: (f64, f64),
    opts: &SmoothnessOptions,
) -> (ProfileRow, Vec<(f64, f64)>, f64)
where
    F: Fn(f64) -> Result<KernelModel, KernelError>,
{
    let eval = |x: f64| -> ProfileRow {
        match factor_at(make, x, ps, opts.nugget) {
            Ok((chol, s2)) => evaluate(&chol, u, x, s2, opts.profile_magnitude),
            Err(status) => ProfileRow::failed(x, status),
        }
    };
    let (mut a, mut b) = bracket;
    let mut brackets = vec![(a, b)];
    let mut best = coarse_best.clone();
    if b - a > opts.tolerance {
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = eval(c);
        let mut fd = eval(d);
        while b - a > opts.tolerance {
            // ties move toward the smaller parameter
            if fc.score() >= fd.score() {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = eval(d);
            }
            brackets.push((a, b));
        }
        for cand in [fc, fd] {
            if cand.score() > best.score() || (cand.score() == best.score() && cand.at < best.at) {
                best = cand;
            }
        }
    }
    (best, brackets, b - a)
}

fn pick_best(rows: &[ProfileRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, r) in rows.iter().enumerate() {
        if r.loglik.is_none() {
            continue;
        }
        // strict improvement keeps the smaller parameter on ties
        if best.is_none_or(|b| r.score() > rows[b].score()) {
            best = Some(k);
        }
    }
    best
}

fn check_data(ps: &PointSet, data: &[&[f64]]) -> Result<(), EstimationError> {
    for u in data {
        if u.len() != ps.len() {
            return Err(LikelihoodError::DataLength {
                expected: ps.len(),
                got: u.len(),
            }
            .into());
        }
    }
    Ok(())
}

struct SearchSpec<'a, F> {
    make: &'a F,
    grid: Vec<f64>,
    lo: f64,
    hi: f64,
    step: f64,
}

/// Shared grid + golden-section driver; `step` is the grid spacing in the
/// search variable `x` and `make` maps `x` to a model.
fn maximize_batch<F>(
    spec: SearchSpec<'_, F>,
    ps: &PointSet,
    data: &[&[f64]],
    opts: &SmoothnessOptions,
) -> Vec<Result<(ProfileRow, EstimationTrace, Duration), EstimationError>>
where
    F: Fn(f64) -> Result<KernelModel, KernelError> + Sync,
{
    let started = Instant::now();
    let per_point: Vec<Vec<ProfileRow>> = spec
        .grid
        .par_iter()
        .map(|&x| evaluate_batch(spec.make, x, ps, data, opts))
        .collect();
    let grid_share = started.elapsed() / data.len().max(1) as u32;
    (0..data.len())
        .map(|j| {
            let t0 = Instant::now();
            let rows: Vec<ProfileRow> = per_point.iter().map(|r| r[j].clone()).collect();
            let Some(k) = pick_best(&rows) else {
                let reason = if rows.iter().any(|r| r.status == RowStatus::Degenerate) {
                    "profiled magnitude is zero at every grid point (data vanish)".to_string()
                } else {
                    "the likelihood could not be evaluated at any grid point".to_string()
                };
                return Err(EstimationError::Failed(reason));
            };
            let a = if k == 0 { spec.lo } else { rows[k].at - spec.step };
            let b = if k + 1 == rows.len() { spec.hi } else { rows[k + 1].at };
            let a = a.max(spec.lo);
            let (best, brackets, width) = golden_refine(spec.make, ps, data[j], &rows[k], (a, b.min(spec.hi)), opts);
            let trace = EstimationTrace {
                grid: rows,
                brackets,
                final_width: width,
            };
            Ok((best, trace, grid_share + t0.elapsed()))
        })
        .collect()
}

fn near_end(x: f64, lo: f64, hi: f64, tol: f64) -> bool {
    x - lo <= tol || hi - x <= tol
}

/// Maximizes the log-likelihood over `s ∈ [s_min, s_max]` for several data
/// vectors observed on the same design.
pub fn estimate_smoothness_batch(
    family: &SmoothnessFamily,
    ps: &PointSet,
    data: &[&[f64]],
    interval: (f64, f64),
    opts: &SmoothnessOptions,
) -> Result<Vec<Result<EstimationResult, EstimationError>>, EstimationError> {
    let (lo, hi) = interval;
    let half_d = family.domain().dim() as f64 / 2.0;
    if !(lo > half_d) || !(hi >= lo) || !hi.is_finite() {
        return Err(EstimationError::Setup(format!(
            "search interval [{lo}, {hi}] must be nonempty and lie above d/2 = {half_d}"
        )));
    }
    if !(opts.grid_step > 0.0) || !(opts.tolerance > 0.0) {
        return Err(EstimationError::Setup("grid step and tolerance must be positive".into()));
    }
    check_data(ps, data)?;
    let make = |s: f64| family.model_at(s);
    let spec = SearchSpec {
        make: &make,
        grid: search_grid(lo, hi, opts.grid_step),
        lo,
        hi,
        step: opts.grid_step,
    };
    Ok(maximize_batch(spec, ps, data, opts)
        .into_iter()
        .map(|r| {
            r.map(|(best, trace, elapsed)| EstimationResult {
                s_hat: best.at,
                sigma2_hat: best.sigma2.unwrap_or(0.0),
                tau_hat: None,
                microergodic: None,
                loglik: best.score(),
                boundary: near_end(best.at, lo, hi, opts.tolerance),
                chol_min: best.chol_min,
                chol_max: best.chol_max,
                trace,
                elapsed,
            })
        })
        .collect())
}

pub fn estimate_smoothness(
    family: &SmoothnessFamily,
    ps: &PointSet,
    u: &[f64],
    interval: (f64, f64),
    opts: &SmoothnessOptions,
) -> Result<EstimationResult, EstimationError> {
    estimate_smoothness_batch(family, ps, &[u], interval, opts)?
        .pop()
        .expect("one data vector in, one result out")
}

/// Settings of the range search. The grid is uniform in `log τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeOptions {
    pub log_step: f64,
    /// Bracket width in `log τ` at which golden-section stops.
    pub tolerance: f64,
    pub nugget: f64,
}

impl Default for RangeOptions {
    fn default() -> Self {
        RangeOptions {
            log_step: 0.2,
            tolerance: 1e-4,
            nugget: 0.0,
        }
    }
}

/// Joint `(τ, σ²)` estimate at fixed smoothness with `σ²` profiled out, for
/// several data vectors on one design.
pub fn estimate_range_and_magnitude_batch(
    family: &SpectralRangeFamily,
    ps: &PointSet,
    data: &[&[f64]],
    tau_bounds: (f64, f64),
    opts: &RangeOptions,
) -> Result<Vec<Result<EstimationResult, EstimationError>>, EstimationError> {
    let (tl, tu) = tau_bounds;
    if !(tl > 0.0) || !(tu >= tl) || !tu.is_finite() {
        return Err(EstimationError::Setup(format!("range bounds [{tl}, {tu}] are invalid")));
    }
    check_data(ps, data)?;
    let make = |x: f64| family.model_at(x.exp()).map(KernelModel::from);
    let (lo, hi) = (tl.ln(), tu.ln());
    let sopts = SmoothnessOptions {
        grid_step: opts.log_step,
        tolerance: opts.tolerance,
        profile_magnitude: true,
        nugget: opts.nugget,
    };
    let grid = if hi > lo { search_grid(lo, hi, opts.log_step) } else { vec![lo] };
    let spec = SearchSpec {
        make: &make,
        grid,
        lo,
        hi,
        step: opts.log_step,
    };
    Ok(maximize_batch(spec, ps, data, &sopts)
        .into_iter()
        .map(|r| {
            let (best, mut trace, elapsed) = r?;
            let tau = best.at.exp();
            for row in &mut trace.grid {
                row.at = row.at.exp();
            }
            for br in &mut trace.brackets {
                *br = (br.0.exp(), br.1.exp());
            }
            let sigma2 = best.sigma2.unwrap_or(0.0);
            let v = family.model_at(tau)?.normalization_factor();
            Ok(EstimationResult {
                s_hat: family.s,
                sigma2_hat: sigma2,
                tau_hat: Some(tau),
                microergodic: Some(sigma2 * v),
                loglik: best.score(),
                boundary: hi > lo && near_end(best.at, lo, hi, opts.tolerance),
                chol_min: best.chol_min,
                chol_max: best.chol_max,
                trace,
                elapsed,
            })
        })
        .collect())
}

pub fn estimate_range_and_magnitude(
    family: &SpectralRangeFamily,
    ps: &PointSet,
    u: &[f64],
    tau_bounds: (f64, f64),
    opts: &RangeOptions,
) -> Result<EstimationResult, EstimationError> {
    estimate_range_and_magnitude_batch(family, ps, &[u], tau_bounds, opts)?
        .pop()
        .expect("one data vector in, one result out")
}

/// `ℓ(s)` at each grid value, in grid order; failures are recorded inline.
pub fn likelihood_profile(
    family: &SmoothnessFamily,
    ps: &PointSet,
    u: &[f64],
    grid: &[f64],
    profile_magnitude: bool,
) -> Vec<ProfileRow> {
    let opts = SmoothnessOptions {
        profile_magnitude,
        ..SmoothnessOptions::default()
    };
    let make = |s: f64| family.model_at(s);
    grid.par_iter()
        .map(|&s| {
            if u.len() != ps.len() {
                return ProfileRow::failed(s, RowStatus::InvalidParameter("data length mismatch".into()));
            }
            evaluate_batch(&make, s, ps, &[u], &opts).pop().expect("one row")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{regular_placement_sphere, Domain};
    use crate::kernels::{Normalization, SpectralKernel, SpectralParams, DEFAULT_TRUNCATION};
    use crate::likelihood::log_likelihood;
    use crate::sampler::{sample_kl, CoefficientLaw};
    use std::sync::Arc;

    fn family(tau: f64) -> SmoothnessFamily {
        SmoothnessFamily::Spectral {
            domain: Domain::Sphere,
            tau,
            sigma2: 1.0,
            normalization: Normalization::UnitDiagonal,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    fn sample(n: usize, seed: u64) -> (Arc<PointSet>, Vec<f64>) {
        let ps = Arc::new(regular_placement_sphere(n).unwrap());
        let p = SpectralParams::new(5.0, 20.0, 1.0, Normalization::UnitDiagonal);
        let s = sample_kl(p, DEFAULT_TRUNCATION, CoefficientLaw::Gaussian, Arc::clone(&ps), seed).unwrap();
        (ps, s.values)
    }

    #[test]
    fn magnitude_closed_form() {
        let ps = regular_placement_sphere(1).unwrap();
        let m: KernelModel = SpectralKernel::new(
            Domain::Sphere,
            SpectralParams::new(3.0, 2.0, 1.0, Normalization::UnitDiagonal),
            10,
        )
        .unwrap()
        .into();
        assert!((estimate_magnitude(&m, &ps, &[2.0]).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(estimate_magnitude(&m, &ps, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn magnitude_is_stationary_point() {
        let (ps, u) = sample(80, 3);
        let base = family(20.0).model_at(4.0).unwrap();
        let s2 = estimate_magnitude(&base, &ps, &u).unwrap();
        let ll = |x: f64| log_likelihood(&base.with_sigma2(x).unwrap(), &ps, &u).unwrap().loglik;
        let h = 1e-4 * s2;
        let deriv = (ll(s2 + h) - ll(s2 - h)) / (2.0 * h);
        let scale = (ll(s2) / s2).abs();
        assert!(deriv.abs() <= 1e-6 * scale, "{deriv} vs {scale}");
    }

    #[test]
    fn recovers_smoothness_on_moderate_design() {
        let (ps, u) = sample(200, 1);
        let r = estimate_smoothness(&family(20.0), &ps, &u, DEFAULT_SMOOTHNESS_INTERVAL, &SmoothnessOptions::default())
            .unwrap();
        assert!((r.s_hat - 5.0).abs() < 1.0, "s_hat {}", r.s_hat);
        assert!(!r.boundary);
        // refinement never loses to the coarse grid
        let best_grid = r.trace.grid.iter().filter_map(|g| g.loglik).fold(f64::NEG_INFINITY, f64::max);
        assert!(r.loglik >= best_grid);
        for w in r.trace.brackets.windows(2) {
            assert!(w[1].1 - w[1].0 < w[0].1 - w[0].0);
        }
        // scale invariance under profiled magnitude
        let opts = SmoothnessOptions {
            profile_magnitude: true,
            ..Default::default()
        };
        let a = estimate_smoothness(&family(20.0), &ps, &u, DEFAULT_SMOOTHNESS_INTERVAL, &opts).unwrap();
        let u3: Vec<f64> = u.iter().map(|v| 3.0 * v).collect();
        let b = estimate_smoothness(&family(20.0), &ps, &u3, DEFAULT_SMOOTHNESS_INTERVAL, &opts).unwrap();
        assert_eq!(a.s_hat, b.s_hat);
        assert_eq!(a.trace.brackets, b.trace.brackets);
        assert!((b.sigma2_hat / a.sigma2_hat - 9.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_maximizer_is_flagged() {
        let (ps, u) = sample(200, 1);
        let r = estimate_smoothness(&family(20.0), &ps, &u, (6.0, 30.0), &SmoothnessOptions::default()).unwrap();
        assert_eq!(r.s_hat, 6.0);
        assert!(r.boundary);
    }

    #[test]
    fn zero_data_fails_under_profiling() {
        let ps = regular_placement_sphere(30).unwrap();
        let opts = SmoothnessOptions {
            profile_magnitude: true,
            ..Default::default()
        };
        let r = estimate_smoothness(&family(20.0), &ps, &vec![0.0; ps.len()], (2.0, 6.0), &opts);
        assert!(matches!(r, Err(EstimationError::Failed(_))));
    }

    #[test]
    fn profile_rows() {
        let (ps, u) = sample(60, 2);
        let rows = likelihood_profile(&family(20.0), &ps, &u, &[0.5, 5.0], false);
        assert!(matches!(rows[0].status, RowStatus::InvalidParameter(_)));
        let direct = log_likelihood(&family(20.0).model_at(5.0).unwrap(), &ps, &u).unwrap().loglik;
        assert_eq!(rows[1].loglik, Some(direct));
    }

    #[test]
    fn degenerate_range_interval_is_magnitude_estimate() {
        let (ps, u) = sample(100, 4);
        let fam = SpectralRangeFamily {
            domain: Domain::Sphere,
            s: 5.0,
            sigma2: 1.0,
            normalization: Normalization::Power,
            truncation: DEFAULT_TRUNCATION,
        };
        let r = estimate_range_and_magnitude(&fam, &ps, &u, (20.0, 20.0), &RangeOptions::default()).unwrap();
        let m: KernelModel = fam.model_at(20.0).unwrap().into();
        let s2 = estimate_magnitude(&m, &ps, &u).unwrap();
        assert!((r.tau_hat.unwrap() - 20.0).abs() < 1e-12);
        assert!((r.sigma2_hat - s2).abs() <= 1e-12 * s2);
        let full = estimate_range_and_magnitude(&fam, &ps, &u, (1.0, 30.0), &RangeOptions::default()).unwrap();
        assert!(full.microergodic.unwrap() > 0.0 && full.microergodic.unwrap().is_finite());
    }
}
