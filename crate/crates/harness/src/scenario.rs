//! Replication loops for the simulation scenarios.

use std::sync::Arc;

use rayon::prelude::*;
use statrs::statistics::{Data, Distribution, OrderStatistics};
use thiserror::Error;
use whittle_core::estimator::{
    estimate_range_and_magnitude_batch, estimate_smoothness_batch, EstimationError, EstimationResult, RangeOptions,
    SmoothnessOptions,
};
use whittle_core::geometry::{random_sphere, regular_placement_sphere, uniform_grid_interval, Domain, GeometryError, PointSet};
use whittle_core::kernels::{
    fit_auxiliary_parameters, AuxiliaryFamily, FittedParameters, KernelError, KernelModel, Normalization, SmoothnessFamily,
    SpectralKernel, SpectralParams, SpectralRangeFamily,
};
use whittle_core::measures::{
    kakutani_classify, match_microergodic, KakutaniReport, KakutaniRule, MeasureError, Verdict,
};
use whittle_core::sampler::{CoefficientLaw, KlSampler, SamplerError};
use whittle_core::spectral::EigenSystem;

use crate::config::{AuxiliaryKind, ConfigError, DesignKind, ScenarioConfig, ScenarioKind};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replication, from the master seed, scenario, size and index.
pub fn replication_seed(master: u64, scenario: ScenarioKind, n: usize, rep: usize) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ scenario as u64);
    h = splitmix64(h ^ n as u64);
    splitmix64(h ^ rep as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    /// Scenario name, with `:variant` for scenarios that try several candidates.
    pub scenario: String,
    /// Requested design size.
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// `NaN` when the replication failed.
    pub s_hat: f64,
    /// `σ̂²`, or the microergodic estimate `σ̂² v(θ̂)` for MICROERGODIC_CLT.
    pub sigma2_hat: f64,
    pub boundary: bool,
    pub cond_min: f64,
    pub cond_max: f64,
    pub ms_elapsed: f64,
}

impl ReplicationRecord {
    pub fn failed(&self) -> bool {
        self.s_hat.is_nan()
    }
}

/// Statistics of one `(scenario, n)` cell over its successful replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scenario: String,
    pub n: usize,
    pub count: usize,
    pub failures: usize,
    pub boundary_hits: usize,
    pub median: f64,
    pub mean: f64,
    pub iqr: f64,
    /// `mean − reference`.
    pub bias: f64,
    pub sigma2_mean: f64,
    pub sigma2_variance: f64,
}

/// Per-cell summaries computed from records alone. `reference` is `s₀`.
pub fn summarize(records: &[ReplicationRecord], reference: f64) -> Vec<CellSummary> {
    let mut keys: Vec<(String, usize)> = records.iter().map(|r| (r.scenario.clone(), r.n)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(scenario, n)| {
            let cell: Vec<&ReplicationRecord> = records.iter().filter(|r| r.scenario == scenario && r.n == n).collect();
            let ok: Vec<&&ReplicationRecord> = cell.iter().filter(|r| !r.failed()).collect();
            let s: Vec<f64> = ok.iter().map(|r| r.s_hat).collect();
            let m: Vec<f64> = ok.iter().map(|r| r.sigma2_hat).collect();
            let (median, mean, iqr) = if s.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let mut d = Data::new(s.clone());
                (d.median(), d.mean().unwrap_or(f64::NAN), d.interquartile_range())
            };
            let md = Data::new(m);
            CellSummary {
                scenario,
                n,
                count: ok.len(),
                failures: cell.len() - ok.len(),
                boundary_hits: ok.iter().filter(|r| r.boundary).count(),
                median,
                mean,
                iqr,
                bias: mean - reference,
                sigma2_mean: md.mean().unwrap_or(f64::NAN),
                sigma2_variance: md.variance().unwrap_or(f64::NAN),
            }
        })
        .collect()
}

/// Design for a requested size.
pub fn build_design(cfg: &ScenarioConfig, n: usize) -> Result<PointSet, GeometryError> {
    match (cfg.domain, cfg.design) {
        (Domain::Sphere, DesignKind::Regular) => regular_placement_sphere(n),
        (Domain::Sphere, DesignKind::Random) => random_sphere(n, splitmix64(cfg.seed ^ 0xD1B5_4A32_D192_ED03 ^ n as u64)),
        (Domain::Interval, _) => uniform_grid_interval(n),
    }
}

pub fn true_params(cfg: &ScenarioConfig) -> SpectralParams {
    SpectralParams::new(cfg.s0, cfg.tau0, cfg.sigma2, cfg.normalization)
}

/// One candidate model evaluated on every replication.
#[derive(Debug, Clone)]
enum Candidate {
    Smoothness { label: String, family: SmoothnessFamily },
    Range { label: String, family: SpectralRangeFamily },
}

/// Auxiliary fit performed before any replication (MISSPECIFIED_KERNEL).
#[derive(Debug, Clone)]
pub struct AuxiliaryFit {
    pub family: AuxiliaryKind,
    pub fit: FittedParameters,
}

/// Evenly spaced distances up to the diameter of the domain.
fn distance_grid(domain: Domain, points: usize) -> Vec<f64> {
    let diam = match domain {
        Domain::Sphere => 2.0,
        Domain::Interval => std::f64::consts::PI,
    };
    (0..points).map(|k| diam * k as f64 / (points - 1) as f64).collect()
}

fn candidates(cfg: &ScenarioConfig) -> Result<(Vec<Candidate>, Vec<AuxiliaryFit>), ScenarioError> {
    let spectral = |tau: f64| SmoothnessFamily::Spectral {
        domain: cfg.domain,
        tau,
        sigma2: cfg.sigma2,
        normalization: cfg.normalization,
        truncation: cfg.truncation,
    };
    let name = cfg.scenario.as_str();
    let mut fits = Vec::new();
    let list = match cfg.scenario {
        ScenarioKind::Correct | ScenarioKind::MisspecifiedLaw => vec![Candidate::Smoothness {
            label: name.to_string(),
            family: spectral(cfg.tau0),
        }],
        ScenarioKind::MisspecifiedTau => cfg
            .candidate_taus
            .iter()
            .map(|&t| Candidate::Smoothness {
                label: format!("{name}:tau={t}"),
                family: spectral(t),
            })
            .collect(),
        ScenarioKind::MisspecifiedKernel => {
            let target: KernelModel = SpectralKernel::new(cfg.domain, true_params(cfg), cfg.truncation)?.into();
            let grid = distance_grid(cfg.domain, cfg.fit_grid_points);
            let half_d = cfg.domain.dim() as f64 / 2.0;
            let mut out = Vec::new();
            for &kind in &cfg.families {
                let aux = match kind {
                    AuxiliaryKind::Matern => AuxiliaryFamily::Matern { nu: cfg.s0 - half_d },
                    AuxiliaryKind::Wendland => AuxiliaryFamily::Wendland {
                        kappa: cfg.s0 - half_d - 0.5,
                        mu: None,
                    },
                };
                let fit = fit_auxiliary_parameters(&target, aux, &grid)?;
                let family = match kind {
                    AuxiliaryKind::Matern => SmoothnessFamily::Matern {
                        domain: cfg.domain,
                        tau: fit.scale,
                        sigma2: fit.sigma2,
                    },
                    AuxiliaryKind::Wendland => SmoothnessFamily::Wendland {
                        domain: cfg.domain,
                        beta: fit.scale,
                        sigma2: fit.sigma2,
                        mu: None,
                    },
                };
                out.push(Candidate::Smoothness {
                    label: format!("{name}:{}", kind.as_str()),
                    family,
                });
                fits.push(AuxiliaryFit { family: kind, fit });
            }
            out
        }
        ScenarioKind::MicroergodicClt => vec![Candidate::Range {
            label: name.to_string(),
            family: SpectralRangeFamily {
                domain: cfg.domain,
                s: cfg.s0,
                sigma2: cfg.sigma2,
                normalization: cfg.normalization,
                truncation: cfg.truncation,
            },
        }],
        ScenarioKind::KakutaniTable => Vec::new(),
    };
    Ok((list, fits))
}

/// Design sizes actually realized by the placement, keyed by requested `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedSize {
    pub requested: usize,
    pub realized: usize,
}

#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub records: Vec<ReplicationRecord>,
    pub summary: Vec<CellSummary>,
    pub sizes: Vec<RealizedSize>,
    pub fits: Vec<AuxiliaryFit>,
    /// Value the `sigma2_hat` column targets: `σ₀²`, or `σ₀² v(θ₀)` for
    /// MICROERGODIC_CLT.
    pub sigma2_reference: f64,
}

#[derive(Debug, Clone)]
pub enum ScenarioOutcome {
    Replications(ReplicationOutcome),
    Kakutani(Vec<KakutaniRow>),
}

fn record_from(
    label: &str,
    n: usize,
    rep: usize,
    seed: u64,
    res: Result<EstimationResult, EstimationError>,
    range: bool,
    timing: bool,
) -> ReplicationRecord {
    match res {
        Ok(r) => ReplicationRecord {
            scenario: label.to_string(),
            n,
            rep,
            seed,
            s_hat: r.s_hat,
            sigma2_hat: if range { r.microergodic.unwrap_or(f64::NAN) } else { r.sigma2_hat },
            boundary: r.boundary,
            cond_min: r.chol_min,
            cond_max: r.chol_max,
            ms_elapsed: if timing { r.elapsed.as_secs_f64() * 1e3 } else { 0.0 },
        },
        Err(_) => ReplicationRecord {
            scenario: label.to_string(),
            n,
            rep,
            seed,
            s_hat: f64::NAN,
            sigma2_hat: f64::NAN,
            boundary: false,
            cond_min: f64::NAN,
            cond_max: f64::NAN,
            ms_elapsed: 0.0,
        },
    }
}

/// Simulated observations of the true model on one design, one vector per
/// replication.
pub fn simulate_replications(
    cfg: &ScenarioConfig,
    design: Arc<PointSet>,
    n: usize,
) -> Result<Vec<(u64, Vec<f64>)>, ScenarioError> {
    let sampler = KlSampler::new(true_params(cfg), cfg.truncation, design)?;
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(cfg.seed, cfg.scenario, n, rep);
            Ok((seed, sampler.sample(cfg.law, seed)?.values))
        })
        .collect()
}

/// Runs every replication of a scenario. Output is sorted by
/// `(scenario label, n, rep)` and independent of the thread count.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    cfg.validate()?;
    if cfg.scenario == ScenarioKind::KakutaniTable {
        let base = SpectralParams::new(cfg.s0, cfg.tau0, cfg.sigma2, Normalization::Power);
        return Ok(ScenarioOutcome::Kakutani(kakutani_matrix(base, 2.0 * cfg.tau0, cfg.law, cfg.kakutani_terms)?));
    }
    let (cands, fits) = candidates(cfg)?;
    let mut records = Vec::new();
    let mut sizes = Vec::new();
    let mut ns = cfg.sizes.clone();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let design = Arc::new(build_design(cfg, n)?);
        sizes.push(RealizedSize {
            requested: n,
            realized: design.len(),
        });
        let reps = simulate_replications(cfg, Arc::clone(&design), n)?;
        let data: Vec<&[f64]> = reps.iter().map(|(_, v)| v.as_slice()).collect();
        for cand in &cands {
            let (label, results, range) = match cand {
                Candidate::Smoothness { label, family } => {
                    let opts = SmoothnessOptions {
                        grid_step: cfg.grid_step,
                        tolerance: cfg.tolerance,
                        profile_magnitude: cfg.profiles_magnitude(),
                        nugget: 0.0,
                    };
                    (label, estimate_smoothness_batch(family, &design, &data, cfg.search_interval, &opts)?, false)
                }
                Candidate::Range { label, family } => {
                    let opts = RangeOptions {
                        tolerance: cfg.tolerance,
                        ..RangeOptions::default()
                    };
                    (label, estimate_range_and_magnitude_batch(family, &design, &data, cfg.tau_bounds, &opts)?, true)
                }
            };
            for (rep, ((seed, _), res)) in reps.iter().zip(results).enumerate() {
                records.push(record_from(label, n, rep, *seed, res, range, cfg.record_timing));
            }
        }
    }
    records.sort_by(|a, b| (&a.scenario, a.n, a.rep).cmp(&(&b.scenario, b.n, b.rep)));
    let sigma2_reference = if cfg.scenario == ScenarioKind::MicroergodicClt {
        cfg.sigma2 * SpectralKernel::new(cfg.domain, true_params(cfg), cfg.truncation)?.normalization_factor()
    } else {
        cfg.sigma2
    };
    let reference = cfg.s0;
    Ok(ScenarioOutcome::Replications(ReplicationOutcome {
        summary: summarize(&records, reference),
        records,
        sizes,
        fits,
        sigma2_reference,
    }))
}

/// One row of the equivalence table.
#[derive(Debug, Clone, PartialEq)]
pub struct KakutaniRow {
    pub dim: usize,
    pub regime: &'static str,
    pub analytic: Verdict,
    pub empirical: Verdict,
    pub tail_slope: Option<f64>,
    pub partial_sum: f64,
    pub extrapolated_tail: Option<f64>,
    pub rule: String,
}

impl KakutaniRow {
    pub fn from_report(regime: &'static str, r: &KakutaniReport) -> Self {
        KakutaniRow {
            dim: r.dim,
            regime,
            analytic: r.analytic,
            empirical: r.verdict,
            tail_slope: r.tail_slope,
            partial_sum: r.partial_sums.last().copied().unwrap_or(0.0),
            extrapolated_tail: r.extrapolated_tail,
            rule: r.rule.clone(),
        }
    }
}

/// Eigensystem standing in for dimension `d`: the interval for 1, the sphere
/// for 2, Weyl-exact synthetic spectra above.
pub fn kakutani_system(d: usize, terms: usize) -> EigenSystem {
    match d {
        1 => EigenSystem::Interval { modes: terms },
        2 => EigenSystem::sphere_with_count(terms),
        _ => EigenSystem::Synthetic { dim: d, len: terms },
    }
}

/// Full report for one case of the table.
pub fn kakutani_case(
    base: SpectralParams,
    alt_tau: f64,
    law: CoefficientLaw,
    d: usize,
    regime: &str,
    terms: usize,
) -> Result<KakutaniReport, ScenarioError> {
    let es = kakutani_system(d, terms);
    let matched = match_microergodic(&base, &SpectralParams { tau: alt_tau, ..base }, &es)?;
    let other = match regime {
        "matched" => matched,
        "sigma_mismatch" => SpectralParams {
            sigma2: 1.5 * matched.sigma2,
            ..matched
        },
        "s_mismatch" => SpectralParams { s: base.s + 0.5, ..base },
        _ => return Err(MeasureError::Argument(format!("unknown regime '{regime}'")).into()),
    };
    Ok(kakutani_classify(&base, &other, law, &es, terms, &KakutaniRule::default())?)
}

pub const KAKUTANI_REGIMES: [&str; 3] = ["matched", "sigma_mismatch", "s_mismatch"];

/// `d ∈ {1, 2, 3, 4}` × {matched microergodic parameter, mismatched `σ²`,
/// mismatched `s`}. The matched alternative uses range `alt_tau`.
pub fn kakutani_matrix(
    base: SpectralParams,
    alt_tau: f64,
    law: CoefficientLaw,
    terms: usize,
) -> Result<Vec<KakutaniRow>, ScenarioError> {
    let mut rows = Vec::new();
    for d in 1..=4 {
        for regime in KAKUTANI_REGIMES {
            let r = kakutani_case(base, alt_tau, law, d, regime, terms)?;
            rows.push(KakutaniRow::from_report(regime, &r));
        }
    }
    Ok(rows)
}
