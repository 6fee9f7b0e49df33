//! Flat `key = value` scenario files.
//!
//! ```text
//! # smoothness recovery at desk scale
//! scenario = CORRECT
//! sizes = 200, 500
//! replications = 20
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;
use whittle_core::estimator::DEFAULT_SMOOTHNESS_INTERVAL;
use whittle_core::geometry::Domain;
use whittle_core::kernels::{Normalization, DEFAULT_TRUNCATION};
use whittle_core::measures::DEFAULT_KAKUTANI_TERMS;
use whittle_core::sampler::{CoefficientLaw, DEFAULT_T_DF};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration; offending keys: {}", .0.iter().map(|(k, m)| format!("{k} ({m})")).collect::<Vec<_>>().join(", "))]
    Invalid(Vec<(String, String)>),
}

impl ConfigError {
    /// Keys named by an [`ConfigError::Invalid`] error.
    pub fn keys(&self) -> Vec<&str> {
        match self {
            ConfigError::Invalid(v) => v.iter().map(|(k, _)| k.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Correct,
    MisspecifiedTau,
    MisspecifiedLaw,
    MisspecifiedKernel,
    MicroergodicClt,
    KakutaniTable,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Correct,
        ScenarioKind::MisspecifiedTau,
        ScenarioKind::MisspecifiedLaw,
        ScenarioKind::MisspecifiedKernel,
        ScenarioKind::MicroergodicClt,
        ScenarioKind::KakutaniTable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Correct => "CORRECT",
            ScenarioKind::MisspecifiedTau => "MISSPECIFIED_TAU",
            ScenarioKind::MisspecifiedLaw => "MISSPECIFIED_LAW",
            ScenarioKind::MisspecifiedKernel => "MISSPECIFIED_KERNEL",
            ScenarioKind::MicroergodicClt => "MICROERGODIC_CLT",
            ScenarioKind::KakutaniTable => "KAKUTANI_TABLE",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let up = s.trim().to_ascii_uppercase();
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == up)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxiliaryKind {
    Matern,
    Wendland,
}

impl AuxiliaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AuxiliaryKind::Matern => "matern",
            AuxiliaryKind::Wendland => "wendland",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    /// Deterministic regular placement on the sphere, uniform grid on the interval.
    Regular,
    /// Uniform random points on the sphere, drawn once per `n` from the master seed.
    Random,
}

pub fn parse_law(name: &str, df: f64) -> Result<CoefficientLaw, String> {
    match name.trim().to_ascii_lowercase().as_str() {
        "gaussian" | "normal" => Ok(CoefficientLaw::Gaussian),
        "rademacher" | "bernoulli" => Ok(CoefficientLaw::Rademacher),
        "centered_exponential" | "exponential" => Ok(CoefficientLaw::CenteredExponential),
        "student_t" | "t" => Ok(CoefficientLaw::ScaledStudentT { df }),
        other => Err(format!("unknown law '{other}'")),
    }
}

pub fn parse_normalization(name: &str) -> Result<Normalization, String> {
    match name.trim().to_ascii_lowercase().as_str() {
        "unit_diagonal" => Ok(Normalization::UnitDiagonal),
        "power" => Ok(Normalization::Power),
        "none" => Ok(Normalization::None),
        other => Err(format!("unknown normalization '{other}'")),
    }
}

pub fn parse_domain(name: &str) -> Result<Domain, String> {
    match name.trim().to_ascii_lowercase().as_str() {
        "sphere" => Ok(Domain::Sphere),
        "interval" => Ok(Domain::Interval),
        other => Err(format!("unknown domain '{other}'")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub domain: Domain,
    pub s0: f64,
    pub tau0: f64,
    pub sigma2: f64,
    pub law: CoefficientLaw,
    pub truncation: usize,
    pub normalization: Normalization,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub search_interval: (f64, f64),
    pub grid_step: f64,
    pub tolerance: f64,
    /// `None` picks the per-scenario default.
    pub profile_magnitude: Option<bool>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub design: DesignKind,
    /// Candidate `τ` values (MISSPECIFIED_TAU).
    pub candidate_taus: Vec<f64>,
    /// Auxiliary families (MISSPECIFIED_KERNEL).
    pub families: Vec<AuxiliaryKind>,
    /// Grid points on the chordal range `[0, 2]` used to fit auxiliary kernels.
    pub fit_grid_points: usize,
    /// `τ` search bounds (MICROERGODIC_CLT).
    pub tau_bounds: (f64, f64),
    pub kakutani_terms: usize,
    pub record_timing: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: ScenarioKind::Correct,
            domain: Domain::Sphere,
            s0: 5.0,
            tau0: 20.0,
            sigma2: 1.0,
            law: CoefficientLaw::Gaussian,
            truncation: DEFAULT_TRUNCATION,
            normalization: Normalization::UnitDiagonal,
            sizes: vec![200, 500],
            replications: 20,
            search_interval: DEFAULT_SMOOTHNESS_INTERVAL,
            grid_step: 0.25,
            tolerance: 1e-4,
            profile_magnitude: None,
            seed: 1,
            output_dir: PathBuf::from("out"),
            design: DesignKind::Regular,
            candidate_taus: vec![1.0, 30.0],
            families: vec![AuxiliaryKind::Matern, AuxiliaryKind::Wendland],
            fit_grid_points: 101,
            tau_bounds: (1.0, 30.0),
            kakutani_terms: DEFAULT_KAKUTANI_TERMS,
            record_timing: false,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "domain",
    "s0",
    "tau0",
    "sigma2",
    "law",
    "t_df",
    "truncation",
    "normalization",
    "sizes",
    "replications",
    "search_interval",
    "grid_step",
    "tolerance",
    "profile_magnitude",
    "seed",
    "output_dir",
    "design",
    "candidate_taus",
    "families",
    "fit_grid_points",
    "tau_bounds",
    "kakutani_terms",
    "record_timing",
    "profile",
];

/// Raw `key -> value` pairs; duplicate keys are a syntax error.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(out)
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|_| format!("cannot parse '{x}'")))
        .collect()
}

fn pair(v: &str) -> Result<(f64, f64), String> {
    match list::<f64>(v)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected two comma-separated numbers".into()),
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got '{v}'")),
    }
}

fn scalar<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse '{v}'"))
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses and validates. Every bad key is reported, not just the first.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let pairs = parse_pairs(text)?;
        let mut errs: Vec<(String, String)> = Vec::new();
        let mut cfg = ScenarioConfig::default();

        // The full-scale profile only changes defaults; explicit keys win.
        if let Some(p) = pairs.get("profile") {
            match p.to_ascii_lowercase().as_str() {
                "desk" => {}
                "full" => {
                    cfg.sizes = vec![500, 1000, 2000];
                    cfg.replications = 100;
                }
                _ => errs.push(("profile".into(), format!("expected 'desk' or 'full', got '{p}'"))),
            }
        }
        for key in pairs.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                errs.push((key.clone(), "unknown key".into()));
            }
        }
        macro_rules! take {
            ($key:literal, $parse:expr, $slot:expr) => {
                if let Some(v) = pairs.get($key) {
                    match $parse(v.as_str()) {
                        Ok(x) => $slot = x,
                        Err(e) => errs.push(($key.into(), e)),
                    }
                }
            };
        }
        let mut df = DEFAULT_T_DF;
        take!("t_df", scalar::<f64>, df);
        if let Some(v) = pairs.get("law") {
            match parse_law(v, df) {
                Ok(l) => cfg.law = l,
                Err(e) => errs.push(("law".into(), e)),
            }
        }
        take!("scenario", |v: &str| v.parse::<ScenarioKind>(), cfg.scenario);
        if cfg.scenario == ScenarioKind::MisspecifiedLaw && !pairs.contains_key("law") {
            cfg.law = CoefficientLaw::Rademacher;
        }
        take!("domain", parse_domain, cfg.domain);
        take!("s0", scalar::<f64>, cfg.s0);
        take!("tau0", scalar::<f64>, cfg.tau0);
        take!("sigma2", scalar::<f64>, cfg.sigma2);
        take!("truncation", scalar::<usize>, cfg.truncation);
        take!("normalization", parse_normalization, cfg.normalization);
        take!("sizes", list::<usize>, cfg.sizes);
        take!("replications", scalar::<usize>, cfg.replications);
        take!("search_interval", pair, cfg.search_interval);
        take!("grid_step", scalar::<f64>, cfg.grid_step);
        take!("tolerance", scalar::<f64>, cfg.tolerance);
        take!("profile_magnitude", |v| boolean(v).map(Some), cfg.profile_magnitude);
        take!("seed", scalar::<u64>, cfg.seed);
        take!("output_dir", |v: &str| Ok::<_, String>(PathBuf::from(v)), cfg.output_dir);
        take!(
            "design",
            |v: &str| match v.to_ascii_lowercase().as_str() {
                "regular" => Ok(DesignKind::Regular),
                "random" => Ok(DesignKind::Random),
                _ => Err(format!("expected 'regular' or 'random', got '{v}'")),
            },
            cfg.design
        );
        take!("candidate_taus", list::<f64>, cfg.candidate_taus);
        take!(
            "families",
            |v: &str| v
                .split(',')
                .map(|x| match x.trim().to_ascii_lowercase().as_str() {
                    "matern" => Ok(AuxiliaryKind::Matern),
                    "wendland" => Ok(AuxiliaryKind::Wendland),
                    o => Err(format!("unknown family '{o}'")),
                })
                .collect::<Result<Vec<_>, _>>(),
            cfg.families
        );
        take!("fit_grid_points", scalar::<usize>, cfg.fit_grid_points);
        take!("tau_bounds", pair, cfg.tau_bounds);
        take!("kakutani_terms", scalar::<usize>, cfg.kakutani_terms);
        take!("record_timing", boolean, cfg.record_timing);

        errs.extend(cfg.problems());
        if errs.is_empty() {
            Ok(cfg)
        } else {
            errs.sort();
            errs.dedup();
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let errs = self.problems();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn problems(&self) -> Vec<(String, String)> {
        let mut e = Vec::new();
        let mut bad = |k: &str, m: String| e.push((k.to_string(), m));
        let half_d = self.domain.dim() as f64 / 2.0;
        if self.replications < 1 {
            bad("replications", "must be at least 1".into());
        }
        if self.sizes.is_empty() {
            bad("sizes", "must list at least one design size".into());
        }
        if self.sizes.iter().any(|&n| n < 2) {
            bad("sizes", "every design size must be at least 2".into());
        }
        let (lo, hi) = self.search_interval;
        if !(lo > half_d) || !(hi >= lo) || !hi.is_finite() {
            bad("search_interval", format!("must satisfy d/2 = {half_d} < lo <= hi < inf"));
        }
        if !(self.s0 > half_d) || !self.s0.is_finite() {
            bad("s0", format!("must exceed d/2 = {half_d}"));
        }
        if !(self.tau0 > 0.0) || !self.tau0.is_finite() {
            bad("tau0", "must be positive".into());
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            bad("sigma2", "must be positive".into());
        }
        if let Err(err) = self.law.validate() {
            bad("law", err.to_string());
        }
        if self.truncation < 1 {
            bad("truncation", "must be at least 1".into());
        }
        if !(self.grid_step > 0.0) {
            bad("grid_step", "must be positive".into());
        }
        if !(self.tolerance > 0.0) {
            bad("tolerance", "must be positive".into());
        }
        match self.scenario {
            ScenarioKind::MisspecifiedTau => {
                if self.candidate_taus.is_empty() || self.candidate_taus.iter().any(|t| !(*t > 0.0)) {
                    bad("candidate_taus", "must list positive values".into());
                }
            }
            ScenarioKind::MisspecifiedKernel => {
                if self.families.is_empty() {
                    bad("families", "must list matern and/or wendland".into());
                }
                if self.fit_grid_points < 2 {
                    bad("fit_grid_points", "must be at least 2".into());
                }
            }
            ScenarioKind::MicroergodicClt => {
                let (a, b) = self.tau_bounds;
                if !(a > 0.0) || !(b >= a) || !b.is_finite() {
                    bad("tau_bounds", "must satisfy 0 < lo <= hi < inf".into());
                }
            }
            ScenarioKind::KakutaniTable => {
                if self.kakutani_terms < 100 {
                    bad("kakutani_terms", "must be at least 100".into());
                }
                if matches!(self.law, CoefficientLaw::Rademacher) {
                    bad("law", "the Kakutani table needs a law with a density".into());
                }
            }
            _ => {}
        }
        e
    }

    /// Whether `σ²` is profiled out of the likelihood. Off by default only
    /// where the fitted kernel is the true one.
    pub fn profiles_magnitude(&self) -> bool {
        self.profile_magnitude.unwrap_or(!matches!(
            self.scenario,
            ScenarioKind::Correct | ScenarioKind::MisspecifiedLaw
        ))
    }
}
