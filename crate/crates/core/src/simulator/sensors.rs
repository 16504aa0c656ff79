use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::integrate::Trajectory;
use crate::error::{Error, Result};
use crate::model::WingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorLayout {
    pub sensors: Vec<Sensor>,
}

impl Default for SensorLayout {
    /// Root leading edge, mid-chord mid-span, outboard control surface, tip
    /// leading edge, tip trailing edge, for the default wing.
    fn default() -> Self {
        let at = |id, x, y| Sensor { id, x, y };
        Self {
            sensors: vec![
                at(1, 0.2, 0.75),
                at(2, 1.0, 3.75),
                at(3, 1.8, 5.5),
                at(4, 0.2, 7.2),
                at(5, 1.9, 7.2),
            ],
        }
    }
}

impl SensorLayout {
    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn validate(&self, cfg: &WingConfig) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::InvalidConfig("sensor layout is empty".into()));
        }
        for s in &self.sensors {
            if !(0.0..=cfg.chord).contains(&s.x) || !(0.0..=cfg.span).contains(&s.y) {
                return Err(Error::InvalidConfig(format!(
                    "sensor {} at ({}, {}) lies outside the {} x {} wing",
                    s.id, s.x, s.y, cfg.chord, cfg.span
                )));
            }
        }
        Ok(())
    }

    /// Per-sensor weights mapping `[γ̈, θ̈, β̈_1..]` to the vertical acceleration.
    fn weights(&self, cfg: &WingConfig) -> Vec<Vec<f64>> {
        self.sensors
            .iter()
            .map(|s| {
                let mut w = vec![s.y, s.x - cfg.flexural_axis];
                for r in &cfg.surfaces {
                    let on = r.measure() > 0.0 && r.contains(s.y) && s.x > cfg.hinge_axis;
                    w.push(if on { s.x - cfg.hinge_axis } else { 0.0 });
                }
                w
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HealthLabel {
    Healthy,
    Damaged,
}

impl HealthLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            HealthLabel::Healthy => "healthy",
            HealthLabel::Damaged => "damaged",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "healthy" => Ok(HealthLabel::Healthy),
            "damaged" => Ok(HealthLabel::Damaged),
            other => Err(Error::Integrity(format!("unknown health label `{other}`"))),
        }
    }

    pub fn is_damaged(&self) -> bool {
        matches!(self, HealthLabel::Damaged)
    }
}

/// Accelerometer time series for every sensor of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecordings {
    pub sample_rate: f64,
    pub sensor_ids: Vec<u32>,
    /// One series per sensor, all of equal length.
    pub channels: Vec<Vec<f64>>,
    pub event: Vec<usize>,
    pub label: HealthLabel,
    /// Seed of the noise stream applied, if any.
    pub noise_seed: Option<u64>,
    pub noise_sigma: f64,
}

impl SensorRecordings {
    pub fn n_samples(&self) -> usize {
        self.event.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.channels.len()
    }

    pub fn n_events(&self) -> usize {
        self.event.last().map_or(0, |&e| e + 1)
    }

    pub fn duration(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate
    }

    /// Root-mean-square of one channel.
    pub fn rms(&self, channel: usize) -> f64 {
        let c = &self.channels[channel];
        if c.is_empty() {
            return 0.0;
        }
        (c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.event.len();
        if self.channels.iter().any(|c| c.len() != n) {
            return Err(Error::Integrity("sensor channels differ in length".into()));
        }
        if self.sensor_ids.len() != self.channels.len() {
            return Err(Error::Integrity("sensor id count differs from channel count".into()));
        }
        if self.event.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Integrity("event indices decrease".into()));
        }
        Ok(())
    }
}

/// Vertical acceleration `z̈ = y γ̈ + (x − x_f) θ̈ + Σ_j (x − x_h) β̈_j 1[y ∈ R_j] 1[x > x_h]`
/// at every probe.
pub fn sensor_accel(
    traj: &Trajectory,
    layout: &SensorLayout,
    cfg: &WingConfig,
    label: HealthLabel,
) -> Result<SensorRecordings> {
    layout.validate(cfg)?;
    let nq = 2 + cfg.n_surfaces();
    if traj.n_coords != nq {
        return Err(Error::InvalidInput(format!(
            "trajectory carries {} coordinates, wing has {nq}",
            traj.n_coords
        )));
    }
    let weights = layout.weights(cfg);
    let channels = weights
        .iter()
        .map(|w| {
            (0..traj.len())
                .map(|k| {
                    traj.acceleration(k)
                        .iter()
                        .zip(w)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(SensorRecordings {
        sample_rate: 1.0 / traj.dt,
        sensor_ids: layout.sensors.iter().map(|s| s.id).collect(),
        channels,
        event: traj.event.clone(),
        label,
        noise_seed: None,
        noise_sigma: 0.0,
    })
}

/// Adds i.i.d. zero-mean Gaussian noise of standard deviation `sigma` to
/// every sample.
pub fn add_noise(rec: &SensorRecordings, sigma: f64, seed: u64) -> Result<SensorRecordings> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut out = rec.clone();
    out.noise_seed = Some(seed);
    out.noise_sigma = sigma;
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    for channel in &mut out.channels {
        for v in channel.iter_mut() {
            *v += dist.sample(&mut rng);
        }
    }
    Ok(out)
}
