//! Run configuration: TOML document, documented defaults, flag overrides.
//!
//! Unknown keys are rejected, every diagnostic names the offending key,
//! and flag overrides are applied after parsing so flags always win.

use crate::error::{Error, Result};
use crate::report::ReportFormat;
use crate::rng::GaussianSampler;
use crate::space::{BanachSpace, TimeGrid};
use crate::stochastic::NoiseMode;
use serde::Deserialize;

/// The raw key-value document. Every field has a documented default, so an
/// empty document is a valid configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Experiment name; a CLI positional argument overrides it.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub space: SpaceSection,
    /// Noise coordinates per time bin. Default 2.
    #[serde(default = "d_h_default")]
    pub d_h: usize,
    /// Time horizon T. Default 1.0.
    #[serde(default = "horizon_default")]
    pub horizon: f64,
    /// Number of uniform time bins N_t. Default 16.
    #[serde(default = "bins_default")]
    pub bins: usize,
    /// Monte Carlo path count M. Default 4000.
    #[serde(default = "paths_default")]
    pub paths: usize,
    /// Moment exponent p. Default 2.0; values outside {2, 4} are allowed
    /// but flagged in the report predicate.
    #[serde(default = "p_default")]
    pub p: f64,
    /// Master seed. Default 1.
    #[serde(default = "seed_default")]
    pub seed: u64,
    /// Noise mode: "gaussian" or "rademacher". Default "gaussian".
    #[serde(default = "mode_default")]
    pub mode: String,
    /// Oracle tree depth (also the level count of the dyadic process
    /// experiment). Default 6.
    #[serde(default = "depth_default")]
    pub depth: usize,
    /// Family size: random integrands per experiment, oracle trials.
    /// Default 20.
    #[serde(default = "trials_default")]
    pub trials: usize,
    /// Gaussian sampler: "polar" or "invcdf". Default "polar".
    #[serde(default = "sampler_default")]
    pub sampler: String,
    /// Report output path; stdout when absent.
    #[serde(default)]
    pub out: Option<String>,
    /// Report format: "csv" or "json". Default "csv".
    #[serde(default = "format_default")]
    pub format: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    /// "hilbert" or "lq". Default "hilbert".
    #[serde(default = "variant_default")]
    pub variant: String,
    /// Target dimension d_E. Default 4.
    #[serde(default = "d_e_default")]
    pub d_e: usize,
    /// Exponent for the lq variant; must lie in (1, inf). Default 2.0.
    #[serde(default = "q_default")]
    pub q: f64,
    /// Coordinate weights for the lq variant; uniform 1/d_E when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn d_h_default() -> usize {
    2
}
fn horizon_default() -> f64 {
    1.0
}
fn bins_default() -> usize {
    16
}
fn paths_default() -> usize {
    4000
}
fn p_default() -> f64 {
    2.0
}
fn seed_default() -> u64 {
    1
}
fn mode_default() -> String {
    "gaussian".into()
}
fn depth_default() -> usize {
    6
}
fn trials_default() -> usize {
    20
}
fn sampler_default() -> String {
    "polar".into()
}
fn format_default() -> String {
    "csv".into()
}
fn variant_default() -> String {
    "hilbert".into()
}
fn d_e_default() -> usize {
    4
}
fn q_default() -> f64 {
    2.0
}

impl Default for SpaceSection {
    fn default() -> Self {
        SpaceSection {
            variant: variant_default(),
            d_e: d_e_default(),
            q: q_default(),
            weights: None,
        }
    }
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            experiment: None,
            space: SpaceSection::default(),
            d_h: d_h_default(),
            horizon: horizon_default(),
            bins: bins_default(),
            paths: paths_default(),
            p: p_default(),
            seed: seed_default(),
            mode: mode_default(),
            depth: depth_default(),
            trials: trials_default(),
            sampler: sampler_default(),
            out: None,
            format: format_default(),
        }
    }
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Flag-level overrides; flags win over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<String>,
    pub format: Option<String>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawConfig) {
        if let Some(seed) = self.seed {
            raw.seed = seed;
        }
        if let Some(paths) = self.paths {
            raw.paths = paths;
        }
        if let Some(out) = &self.out {
            raw.out = Some(out.clone());
        }
        if let Some(format) = &self.format {
            raw.format = format.clone();
        }
    }
}

/// A validated configuration ready for dispatch.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub space: BanachSpace,
    pub d_h: usize,
    pub grid: TimeGrid,
    pub paths: usize,
    pub p: f64,
    /// True when p lies outside the default set {2, 4}; surfaces as a
    /// warning suffix on the report predicate.
    pub nonstandard_p: bool,
    pub seed: u64,
    pub mode: NoiseMode,
    pub depth: usize,
    pub trials: usize,
    pub sampler: GaussianSampler,
    pub out: Option<String>,
    pub format: ReportFormat,
}

/// Validate a raw document into a typed configuration. `name` is the CLI
/// positional experiment name and wins over the document's `experiment`.
pub fn validate(raw: &RawConfig, name: Option<&str>) -> Result<ExperimentConfig> {
    let experiment = name
        .map(str::to_owned)
        .or_else(|| raw.experiment.clone())
        .ok_or_else(|| Error::Config("experiment: no experiment named".into()))?;

    let space = match raw.space.variant.as_str() {
        "hilbert" => {
            if raw.space.q != 2.0 {
                return Err(Error::Config(
                    "space.q: only the lq variant takes an exponent (hilbert is fixed at 2)"
                        .into(),
                ));
            }
            if raw.space.weights.is_some() {
                return Err(Error::Config(
                    "space.weights: only the lq variant takes weights".into(),
                ));
            }
            BanachSpace::hilbert(raw.space.d_e)
                .map_err(|e| Error::Config(format!("space.d_e: {e}")))?
        }
        "lq" => {
            if !(raw.space.q.is_finite() && raw.space.q > 1.0) {
                return Err(Error::Config(format!(
                    "space.q: q must lie in (1, inf), got {}",
                    raw.space.q
                )));
            }
            match &raw.space.weights {
                Some(w) => BanachSpace::lq(raw.space.q, w.clone())
                    .map_err(|e| Error::Config(format!("space.weights: {e}")))?,
                None => BanachSpace::lq_unit(raw.space.q, raw.space.d_e)
                    .map_err(|e| Error::Config(format!("space.d_e: {e}")))?,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "space.variant: expected \"hilbert\" or \"lq\", got \"{other}\""
            )))
        }
    };
    if let Some(w) = &raw.space.weights {
        if w.len() != raw.space.d_e {
            return Err(Error::Config(format!(
                "space.weights: length {} does not match space.d_e = {}",
                w.len(),
                raw.space.d_e
            )));
        }
    }

    if raw.d_h == 0 {
        return Err(Error::Config("d_h: must be at least 1".into()));
    }
    let grid = TimeGrid::new(raw.horizon, raw.bins)
        .map_err(|e| Error::Config(format!("horizon/bins: {e}")))?;
    if raw.paths < 2 {
        return Err(Error::Config("paths: need at least 2 paths".into()));
    }
    if !(raw.p.is_finite() && raw.p > 1.0) {
        return Err(Error::Config(format!(
            "p: must lie in (1, inf), got {}",
            raw.p
        )));
    }
    let mode = NoiseMode::parse(&raw.mode).ok_or_else(|| {
        Error::Config(format!(
            "mode: expected \"gaussian\" or \"rademacher\", got \"{}\"",
            raw.mode
        ))
    })?;
    let sampler = GaussianSampler::parse(&raw.sampler).ok_or_else(|| {
        Error::Config(format!(
            "sampler: expected \"polar\" or \"invcdf\", got \"{}\"",
            raw.sampler
        ))
    })?;
    if raw.depth == 0 || raw.depth > 16 {
        return Err(Error::Config(format!(
            "depth: must lie in 1..=16, got {}",
            raw.depth
        )));
    }
    if raw.trials == 0 || raw.trials > 10_000 {
        return Err(Error::Config(format!(
            "trials: must lie in 1..=10000, got {}",
            raw.trials
        )));
    }
    let format = ReportFormat::parse(&raw.format)
        .map_err(|e| Error::Config(format!("format: {e}")))?;

    Ok(ExperimentConfig {
        experiment,
        space,
        d_h: raw.d_h,
        grid,
        paths: raw.paths,
        p: raw.p,
        nonstandard_p: raw.p != 2.0 && raw.p != 4.0,
        seed: raw.seed,
        mode,
        depth: raw.depth,
        trials: raw.trials,
        sampler,
        out: raw.out.clone(),
        format,
    })
}

impl ExperimentConfig {
    /// The documented defaults with a given experiment name.
    pub fn defaults(experiment: &str) -> Self {
        validate(&RawConfig::default(), Some(experiment))
            .expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_documented_defaults() {
        let raw = RawConfig::from_toml("").unwrap();
        let cfg = validate(&raw, Some("ito_isometry")).unwrap();
        assert_eq!(cfg.experiment, "ito_isometry");
        assert!(cfg.space.is_hilbert());
        assert_eq!(cfg.space.dim(), 4);
        assert_eq!(cfg.d_h, 2);
        assert_eq!(cfg.grid.bins, 16);
        assert_eq!(cfg.grid.horizon, 1.0);
        assert_eq!(cfg.paths, 4000);
        assert_eq!(cfg.p, 2.0);
        assert!(!cfg.nonstandard_p);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.trials, 20);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RawConfig::from_toml("pathz = 100").unwrap_err();
        assert!(err.to_string().contains("pathz"), "{err}");
        let err = RawConfig::from_toml("[space]\nvariance = 1").unwrap_err();
        assert!(err.to_string().contains("variance"), "{err}");
    }

    #[test]
    fn q_out_of_range_is_named() {
        let raw = RawConfig::from_toml("[space]\nvariant = \"lq\"\nq = 1.0").unwrap();
        let err = validate(&raw, Some("two_sided")).unwrap_err();
        assert!(err.to_string().contains("q must lie in (1, inf)"), "{err}");
    }

    #[test]
    fn zero_bins_is_rejected() {
        let raw = RawConfig::from_toml("bins = 0").unwrap();
        assert!(validate(&raw, Some("two_sided")).is_err());
    }

    #[test]
    fn flags_override_the_document() {
        let mut raw = RawConfig::from_toml("seed = 3\npaths = 100").unwrap();
        let ov = Overrides {
            seed: Some(9),
            paths: None,
            out: None,
            format: Some("json".into()),
        };
        ov.apply(&mut raw);
        let cfg = validate(&raw, Some("doob")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.paths, 100);
        assert_eq!(cfg.format, ReportFormat::Json);
    }

    #[test]
    fn nonstandard_p_is_flagged_not_rejected() {
        let raw = RawConfig::from_toml("p = 3.0").unwrap();
        let cfg = validate(&raw, Some("two_sided")).unwrap();
        assert!(cfg.nonstandard_p);
        let raw = RawConfig::from_toml("p = 1.0").unwrap();
        assert!(validate(&raw, Some("two_sided")).is_err());
    }

    #[test]
    fn hilbert_rejects_lq_only_keys() {
        let raw = RawConfig::from_toml("[space]\nvariant = \"hilbert\"\nq = 4.0").unwrap();
        assert!(validate(&raw, Some("two_sided")).is_err());
        let raw =
            RawConfig::from_toml("[space]\nvariant = \"hilbert\"\nweights = [1.0]").unwrap();
        assert!(validate(&raw, Some("two_sided")).is_err());
    }

    #[test]
    fn weight_length_mismatch_is_named() {
        let raw = RawConfig::from_toml(
            "[space]\nvariant = \"lq\"\nq = 4.0\nd_e = 3\nweights = [0.5, 0.5]",
        )
        .unwrap();
        let err = validate(&raw, Some("two_sided")).unwrap_err();
        assert!(err.to_string().contains("weights"), "{err}");
    }
}
