//! Whole-pipeline configuration, loaded from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{KMeansOptions, NegativeSampling, SmoOptions};
use crate::error::{Error, Result};
use crate::model::{ActuatorParams, WingConfig};
use crate::sigproc::FeatureSpec;
use crate::simulator::{ScheduleSpec, SensorLayout, DEFAULT_SEVERITY};
use crate::store::sha256_hex;
use crate::tensor::CpOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    /// Integration step (s); the sensor sample interval equals it.
    pub dt: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self { dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DamageSpec {
    pub severity: f64,
}

impl Default for DamageSpec {
    fn default() -> Self {
        Self {
            severity: DEFAULT_SEVERITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Noise standard deviation as a fraction of the reference sensor's
    /// healthy RMS.
    pub relative_sigma: f64,
    pub reference_sensor: u32,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            relative_sigma: 0.1,
            reference_sensor: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmSpec {
    pub nu_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Standardise C-space axes with training-set mean and deviation.
    pub standardize: bool,
    pub smo: SmoOptions,
}

impl Default for SvmSpec {
    fn default() -> Self {
        Self {
            nu_grid: vec![0.01, 0.02, 0.03, 0.05, 0.1],
            gamma_grid: vec![0.1, 0.3, 0.6, 1.2, 2.5, 5.0],
            standardize: true,
            smo: SmoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KdeSpec {
    /// Fixed bandwidth; Scott's rule when absent.
    pub bandwidth: Option<f64>,
    pub sampling: NegativeSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSpec {
    /// Cluster count; the sensor count when absent.
    pub k: Option<usize>,
    pub router: String,
    pub kmeans: KMeansOptions,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            k: None,
            router: "nearest-centroid".into(),
            kmeans: KMeansOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    /// Share of healthy events used for training; the rest is evaluated.
    pub train_fraction: f64,
    /// Damaged events kept for evaluation, relative to the healthy count.
    pub damaged_fraction: f64,
    /// Ranks contrasted by `dim-compare`.
    pub ranks: Vec<usize>,
    /// Rank used by `angle-compare` and `per-cluster`.
    pub rank: usize,
    /// Event count of the LHS schedules.
    pub lhs_events: usize,
    /// Resolution of the exported per-cluster decision grids.
    pub boundary_resolution: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            damaged_fraction: 0.2,
            ranks: vec![2, 3],
            rank: 2,
            lhs_events: 169,
            boundary_resolution: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub wing: WingConfig,
    pub actuator: ActuatorParams,
    pub sensors: SensorLayout,
    pub schedule: ScheduleSpec,
    pub simulation: SimulationSpec,
    pub damage: DamageSpec,
    pub noise: NoiseSpec,
    pub features: FeatureSpec,
    pub cp: CpOptions,
    pub svm: SvmSpec,
    pub kde: KdeSpec,
    pub cluster: ClusterSpec,
    pub experiment: ExperimentSpec,
    pub seed: u64,
    pub output_dir: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            wing: WingConfig::default(),
            actuator: ActuatorParams::default(),
            sensors: SensorLayout::default(),
            schedule: ScheduleSpec::default(),
            simulation: SimulationSpec::default(),
            damage: DamageSpec::default(),
            noise: NoiseSpec::default(),
            features: FeatureSpec::default(),
            cp: CpOptions::default(),
            svm: SvmSpec::default(),
            kde: KdeSpec::default(),
            cluster: ClusterSpec::default(),
            experiment: ExperimentSpec::default(),
            seed: 0,
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Unreadable or malformed files are
    /// configuration errors.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact JSON encoding, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        sha256_hex(&serde_json::to_vec(&canonical).expect("config serialises"))
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster.k.unwrap_or(self.sensors.len())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.wing.validate()?;
        self.actuator.validate()?;
        self.sensors.validate(&self.wing)?;
        self.cp.validate()?;
        if !(self.simulation.dt > 0.0 && self.simulation.dt.is_finite()) {
            return bad(format!("simulation.dt must be > 0, got {}", self.simulation.dt));
        }
        if !(0.0..1.0).contains(&self.damage.severity) {
            return bad(format!("damage.severity must lie in [0, 1), got {}", self.damage.severity));
        }
        if !(self.noise.relative_sigma >= 0.0) {
            return bad("noise.relative_sigma must be >= 0".into());
        }
        if !self.sensors.sensors.iter().any(|s| s.id == self.noise.reference_sensor) {
            return bad(format!(
                "noise.reference_sensor {} is not in the layout",
                self.noise.reference_sensor
            ));
        }
        if self.svm.nu_grid.is_empty() || self.svm.gamma_grid.is_empty() {
            return bad("svm grids must be non-empty".into());
        }
        if self.svm.nu_grid.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return bad("svm.nu_grid entries must lie in (0, 1)".into());
        }
        if self.svm.gamma_grid.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return bad("svm.gamma_grid entries must be > 0".into());
        }
        let e = &self.experiment;
        if !(e.train_fraction > 0.0 && e.train_fraction < 1.0) {
            return bad(format!("experiment.train_fraction must lie in (0, 1), got {}", e.train_fraction));
        }
        if !(e.damaged_fraction > 0.0 && e.damaged_fraction <= 1.0) {
            return bad(format!("experiment.damaged_fraction must lie in (0, 1], got {}", e.damaged_fraction));
        }
        if e.ranks.is_empty() || e.ranks.contains(&0) || e.rank == 0 {
            return bad("experiment ranks must be >= 1".into());
        }
        if e.lhs_events == 0 || e.boundary_resolution < 2 {
            return bad("experiment.lhs_events must be >= 1 and boundary_resolution >= 2".into());
        }
        if self.cluster_count() == 0 {
            return bad("cluster.k must be >= 1".into());
        }
        if !(self.kde.sampling.density_quantile >= 0.0 && self.kde.sampling.density_quantile <= 1.0) {
            return bad("kde.density_quantile must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let back = PipelineConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            PipelineConfig::from_json(r#"{"seed": 1, "colour": "red"}"#),
            Err(Error::InvalidConfig(_))
        ));
        assert!(PipelineConfig::from_json(r#"{"svm": {"nu": 0.1}}"#).is_err());
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = PipelineConfig::from_json(r#"{"seed": 7, "damage": {"severity": 0.5}}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.damage.severity, 0.5);
        assert_eq!(cfg.features, FeatureSpec::default());
    }

    #[test]
    fn hash_tracks_content_but_not_output_dir() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_values_are_reported() {
        for doc in [
            r#"{"simulation": {"dt": 0}}"#,
            r#"{"svm": {"nu_grid": []}}"#,
            r#"{"svm": {"nu_grid": [1.5]}}"#,
            r#"{"noise": {"reference_sensor": 9}}"#,
            r#"{"experiment": {"train_fraction": 1.0}}"#,
        ] {
            assert!(matches!(PipelineConfig::from_json(doc), Err(Error::InvalidConfig(_))), "{doc}");
        }
    }
}
