use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::model::{assemble, to_state_space, ActuatorParams};
use crate::seeds;
use crate::sigproc::{featurize, FeatureTensor};
use crate::simulator::{
    add_noise, inject_damage, sensor_accel, simulate, HealthLabel, InputSchedule, ScheduleRegistry, ScheduleSpec,
    SensorRecordings,
};
use crate::store::{meta_as, Artifact};
use crate::tensor::{cp_als, project_new, CpFactors, CpOptions};

/// Noise-corrupted healthy and damaged recordings of one schedule kind.
#[derive(Debug, Clone)]
pub struct SimulatedPair {
    pub healthy: SensorRecordings,
    pub damaged: SensorRecordings,
    pub healthy_schedule: InputSchedule,
    pub damaged_schedule: InputSchedule,
    pub noise_sigma: f64,
}

fn clean_run(cfg: &PipelineConfig, act: &ActuatorParams, schedule: &InputSchedule, label: HealthLabel) -> Result<SensorRecordings> {
    let sys = assemble(&cfg.wing, act).map_err(Error::at_stage("assemble"))?;
    let ss = to_state_space(&sys).map_err(Error::at_stage("assemble"))?;
    let traj = simulate(&ss, schedule, cfg.simulation.dt, None).map_err(Error::at_stage("simulate"))?;
    sensor_accel(&traj, &cfg.sensors, &cfg.wing, label).map_err(Error::at_stage("sensors"))
}

/// Simulates the wing with the nominal and the leaking actuator. Grid
/// schedules coincide; LHS schedules are drawn from separate seed streams.
/// Both runs receive noise scaled to the healthy reference sensor's RMS.
pub fn simulate_pair(cfg: &PipelineConfig, schedule: &ScheduleSpec, seed: u64) -> Result<SimulatedPair> {
    let registry = ScheduleRegistry::default();
    let m = cfg.wing.n_surfaces();
    let stage = Error::at_stage("schedule");
    let healthy_schedule = registry
        .generate(schedule, m, seeds::derive(seed, seeds::tag("schedule/healthy")))
        .map_err(stage)?;
    let damaged_schedule = registry
        .generate(schedule, m, seeds::derive(seed, seeds::tag("schedule/damaged")))
        .map_err(Error::at_stage("schedule"))?;

    let damaged_act = inject_damage(&cfg.actuator, cfg.damage.severity).map_err(Error::at_stage("damage"))?;
    let (healthy, damaged) = rayon::join(
        || clean_run(cfg, &cfg.actuator, &healthy_schedule, HealthLabel::Healthy),
        || clean_run(cfg, &damaged_act, &damaged_schedule, HealthLabel::Damaged),
    );
    let (healthy, damaged) = (healthy?, damaged?);

    let reference = healthy
        .sensor_ids
        .iter()
        .position(|&id| id == cfg.noise.reference_sensor)
        .ok_or_else(|| Error::InvalidConfig("noise reference sensor missing from recordings".into()))?;
    let sigma = cfg.noise.relative_sigma * healthy.rms(reference);
    let stage = Error::at_stage("noise");
    let healthy = add_noise(&healthy, sigma, seeds::derive(seed, seeds::tag("noise/healthy"))).map_err(stage)?;
    let damaged = add_noise(&damaged, sigma, seeds::derive(seed, seeds::tag("noise/damaged")))
        .map_err(Error::at_stage("noise"))?;
    Ok(SimulatedPair {
        healthy,
        damaged,
        healthy_schedule,
        damaged_schedule,
        noise_sigma: sigma,
    })
}

/// Healthy and damaged feature tensors over one schedule kind.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub healthy: FeatureTensor,
    pub damaged: FeatureTensor,
    pub noise_sigma: f64,
}

impl Dataset {
    pub fn from_pair(cfg: &PipelineConfig, pair: &SimulatedPair) -> Result<Self> {
        let hash = cfg.hash();
        let stage = Error::at_stage("featurize");
        let healthy = featurize(&pair.healthy, &cfg.features, &hash).map_err(stage)?;
        let damaged = featurize(&pair.damaged, &cfg.features, &hash).map_err(Error::at_stage("featurize"))?;
        Ok(Self {
            healthy,
            damaged,
            noise_sigma: pair.noise_sigma,
        })
    }

    pub fn generate(cfg: &PipelineConfig, schedule: &ScheduleSpec, seed: u64) -> Result<Self> {
        Self::from_pair(cfg, &simulate_pair(cfg, schedule, seed)?)
    }

    /// Keeps a seeded subset of `round(fraction · n_healthy)` damaged
    /// events, in their original order. Transients are untouched because
    /// the subset is drawn after simulation.
    pub fn thin_damaged(&mut self, fraction: f64, seed: u64) {
        let n = self.damaged.n_events();
        let keep = ((fraction * self.healthy.n_events() as f64).round() as usize).clamp(1, n);
        if keep == n {
            return;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut chosen = idx[..keep].to_vec();
        chosen.sort_unstable();
        self.damaged = self.damaged.select_events(&chosen);
    }

    /// Healthy events followed by damaged events in one tensor.
    pub fn combined(&self) -> Result<FeatureTensor> {
        FeatureTensor::concat(&[&self.healthy, &self.damaged])
    }

    /// Splits a combined tensor back by label, preserving event order.
    pub fn from_combined(t: &FeatureTensor) -> Self {
        let (dam, hea): (Vec<usize>, Vec<usize>) = (0..t.n_events()).partition(|&k| t.event_labels[k].is_damaged());
        Self {
            healthy: t.select_events(&hea),
            damaged: t.select_events(&dam),
            noise_sigma: 0.0,
        }
    }
}

/// Disjoint healthy train and evaluation event indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub eval_healthy: Vec<usize>,
}

/// Seeded shuffle of the healthy events; the first `round(fraction · n)`
/// (at least two) go to training.
pub fn split_healthy(n: usize, fraction: f64, seed: u64) -> Result<Split> {
    let n_train = ((fraction * n as f64).round() as usize).max(2);
    if n_train >= n {
        return Err(Error::InvalidInput(format!(
            "{n} healthy events leave nothing to evaluate at train fraction {fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut eval_healthy = idx[n_train..].to_vec();
    train.sort_unstable();
    eval_healthy.sort_unstable();
    Ok(Split { train, eval_healthy })
}

/// Events placed in C-space: the CP model of the healthy training tensor,
/// projections of every event onto its `A`, `B` factors, and the per-axis
/// standardisation fitted on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub factors: CpFactors,
    pub split: Split,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub train: Vec<Vec<f64>>,
    /// Held-out healthy events, then every damaged event.
    pub eval: Vec<Vec<f64>>,
    pub eval_labels: Vec<HealthLabel>,
    /// Index of each evaluation point within its own health class.
    pub eval_events: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingMeta {
    split: Split,
    eval_labels: Vec<HealthLabel>,
    eval_events: Vec<usize>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl Embedding {
    pub fn rank(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn to_artifact(&self) -> Result<Artifact> {
        let flat = |pts: &[Vec<f64>]| -> Vec<f64> {
            // column-major [n, rank]
            let r = self.rank();
            (0..r).flat_map(|j| pts.iter().map(move |p| p[j])).collect()
        };
        let meta = EmbeddingMeta {
            split: self.split.clone(),
            eval_labels: self.eval_labels.clone(),
            eval_events: self.eval_events.clone(),
        };
        let r = self.rank();
        Artifact::new("embedding", serde_json::to_value(meta)?)
            .with("mean", &[r], self.mean.clone())?
            .with("scale", &[r], self.scale.clone())?
            .with("train", &[self.train.len(), r], flat(&self.train))?
            .with("eval", &[self.eval.len(), r], flat(&self.eval))
    }

    /// Restores an embedding; the CP factors are carried separately.
    pub fn from_artifact(art: &Artifact, factors: CpFactors) -> Result<Self> {
        art.expect_kind("embedding")?;
        let meta: EmbeddingMeta = meta_as(art)?;
        let unflat = |name: &str| -> Result<Vec<Vec<f64>>> {
            let (shape, v) = art.array(name)?;
            let [n, r] = shape else {
                return Err(Error::Integrity(format!("embedding array {name} is not a matrix")));
            };
            Ok((0..*n).map(|i| (0..*r).map(|j| v[i + n * j]).collect()).collect())
        };
        let emb = Self {
            mean: art.array("mean")?.1.to_vec(),
            scale: art.array("scale")?.1.to_vec(),
            train: unflat("train")?,
            eval: unflat("eval")?,
            factors,
            split: meta.split,
            eval_labels: meta.eval_labels,
            eval_events: meta.eval_events,
        };
        if emb.eval.len() != emb.eval_labels.len() || emb.factors.rank() != emb.rank() {
            return Err(Error::Integrity("embedding arrays disagree with their labels or factors".into()));
        }
        Ok(emb)
    }
}

/// Decomposes the healthy training events at `rank` and projects every
/// event into C-space.
pub fn embed(
    data: &Dataset,
    rank: usize,
    cp: &CpOptions,
    standardize: bool,
    fraction: f64,
    seed: u64,
) -> Result<Embedding> {
    let split = split_healthy(data.healthy.n_events(), fraction, seeds::derive(seed, seeds::tag("split")))
        .map_err(Error::at_stage("split"))?;
    let train_tensor = data.healthy.data.select_slices(&split.train);
    let opts = CpOptions { rank, ..cp.clone() };
    let factors = cp_als(&train_tensor, &opts, seeds::derive(seed, seeds::tag("cp"))).map_err(Error::at_stage("decompose"))?;
    if !factors.converged {
        log::warn!("CP-ALS at rank {rank} stopped at the iteration cap");
    }
    let project = |t: &crate::tensor::Tensor3| project_new(t, &factors, cp.cond_threshold).map_err(Error::at_stage("project"));
    let raw_train = rows(&project(&train_tensor)?);
    let mut raw_eval = rows(&project(&data.healthy.data.select_slices(&split.eval_healthy))?);
    raw_eval.extend(rows(&project(&data.damaged.data)?));

    let n = raw_train.len() as f64;
    let mean: Vec<f64> = (0..rank).map(|j| raw_train.iter().map(|p| p[j]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..rank)
        .map(|j| {
            let var = raw_train.iter().map(|p| (p[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0);
            if standardize && var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mean = if standardize { mean } else { vec![0.0; rank] };

    let mut eval_labels = vec![HealthLabel::Healthy; split.eval_healthy.len()];
    eval_labels.extend(vec![HealthLabel::Damaged; data.damaged.n_events()]);
    let mut eval_events = split.eval_healthy.clone();
    eval_events.extend(0..data.damaged.n_events());
    let mut emb = Embedding {
        factors,
        split,
        mean,
        scale,
        train: Vec::new(),
        eval: Vec::new(),
        eval_labels,
        eval_events,
    };
    emb.train = raw_train.iter().map(|p| emb.standardize(p)).collect();
    emb.eval = raw_eval.iter().map(|p| emb.standardize(p)).collect();
    Ok(emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::build_tensor;

    #[test]
    fn split_is_disjoint_and_covering() {
        let s = split_healthy(25, 0.5, 3).unwrap();
        assert_eq!(s.train.len(), 13);
        let mut all: Vec<usize> = s.train.iter().chain(&s.eval_healthy).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..25).collect::<Vec<_>>());
        assert_eq!(s, split_healthy(25, 0.5, 3).unwrap());
        assert!(split_healthy(2, 0.5, 0).is_err());
    }

    fn toy_dataset() -> Dataset {
        // rank-2 structure plus a damaged shift on the second sensor
        let feat = |k: usize, damaged: bool| -> Vec<Vec<f64>> {
            let s = 1.0 + (k % 7) as f64;
            let t = 2.0 + (k % 3) as f64;
            (0..3)
                .map(|j| {
                    (0..6)
                        .map(|i| {
                            let bump = if damaged && j == 1 { 3.0 } else { 0.0 };
                            s * (i + 1) as f64 * (j + 1) as f64 + t * ((i * j) % 4) as f64 + bump
                        })
                        .collect()
                })
                .collect()
        };
        let h: Vec<_> = (0..30).map(|k| feat(k, false)).collect();
        let d: Vec<_> = (0..10).map(|k| feat(k, true)).collect();
        Dataset {
            healthy: build_tensor(&h, &vec![HealthLabel::Healthy; 30]).unwrap(),
            damaged: build_tensor(&d, &vec![HealthLabel::Damaged; 10]).unwrap(),
            noise_sigma: 0.0,
        }
    }

    #[test]
    fn embedding_standardises_training_rows() {
        let emb = embed(&toy_dataset(), 2, &CpOptions::default(), true, 0.5, 1).unwrap();
        assert_eq!(emb.train.len(), 15);
        assert_eq!(emb.eval.len(), 25);
        for j in 0..2 {
            let m: f64 = emb.train.iter().map(|p| p[j]).sum::<f64>() / 15.0;
            let v: f64 = emb.train.iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / 14.0;
            assert!(m.abs() < 1e-10 && (v - 1.0).abs() < 1e-10);
        }
        assert_eq!(emb.eval_labels.iter().filter(|l| l.is_damaged()).count(), 10);
    }

    #[test]
    fn embedding_artifact_round_trip() {
        let emb = embed(&toy_dataset(), 2, &CpOptions::default(), true, 0.5, 4).unwrap();
        let back = Embedding::from_artifact(&emb.to_artifact().unwrap(), emb.factors.clone()).unwrap();
        assert_eq!(back, emb);
    }

    #[test]
    fn combined_tensor_splits_back_by_label() {
        let d = toy_dataset();
        let back = Dataset::from_combined(&d.combined().unwrap());
        assert_eq!(back.healthy.data, d.healthy.data);
        assert_eq!(back.damaged.data, d.damaged.data);
    }
}
