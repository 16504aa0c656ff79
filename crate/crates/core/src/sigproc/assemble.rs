use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{segment_events, FeatureSpec, SpectralExtractor};
use super::window::TaperRegistry;
use crate::error::{Error, Result};
use crate::simulator::{HealthLabel, SensorRecordings};
use crate::store::{meta_as, Artifact};
use crate::tensor::Tensor3;

/// `(feature × sensor × event)` tensor with labels for every mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTensor {
    pub data: Tensor3,
    pub feature_labels: Vec<String>,
    pub sensor_labels: Vec<String>,
    pub event_labels: Vec<HealthLabel>,
    /// Event index within the originating schedule.
    pub event_ids: Vec<usize>,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    feature_labels: Vec<String>,
    sensor_labels: Vec<String>,
    event_labels: Vec<HealthLabel>,
    event_ids: Vec<usize>,
    config_hash: String,
}

impl FeatureTensor {
    pub fn dims(&self) -> [usize; 3] {
        self.data.dims()
    }

    pub fn n_events(&self) -> usize {
        self.event_labels.len()
    }

    pub fn select_events(&self, ks: &[usize]) -> Self {
        Self {
            data: self.data.select_slices(ks),
            feature_labels: self.feature_labels.clone(),
            sensor_labels: self.sensor_labels.clone(),
            event_labels: ks.iter().map(|&k| self.event_labels[k]).collect(),
            event_ids: ks.iter().map(|&k| self.event_ids[k]).collect(),
            config_hash: self.config_hash.clone(),
        }
    }

    /// Stacks tensors along the event mode.
    pub fn concat(parts: &[&FeatureTensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))?;
        let [ni, nj, _] = first.dims();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut ids = Vec::new();
        for p in parts {
            let [pi, pj, _] = p.dims();
            if (pi, pj) != (ni, nj) || p.sensor_labels != first.sensor_labels {
                return Err(Error::InvalidInput("tensors disagree on feature or sensor modes".into()));
            }
            data.extend_from_slice(p.data.as_slice());
            labels.extend_from_slice(&p.event_labels);
            ids.extend_from_slice(&p.event_ids);
        }
        Ok(Self {
            data: Tensor3::from_vec([ni, nj, labels.len()], data)?,
            feature_labels: first.feature_labels.clone(),
            sensor_labels: first.sensor_labels.clone(),
            event_labels: labels,
            event_ids: ids,
            config_hash: first.config_hash.clone(),
        })
    }

    /// Squared feature magnitude per sensor for every event, `[event][sensor]`.
    pub fn sensor_energy(&self) -> Vec<Vec<f64>> {
        let [ni, nj, nk] = self.dims();
        (0..nk)
            .map(|k| {
                (0..nj)
                    .map(|j| (0..ni).map(|i| self.data.get(i, j, k).powi(2)).sum())
                    .collect()
            })
            .collect()
    }

    pub fn to_artifact(&self) -> Result<Artifact> {
        let meta = TensorMeta {
            feature_labels: self.feature_labels.clone(),
            sensor_labels: self.sensor_labels.clone(),
            event_labels: self.event_labels.clone(),
            event_ids: self.event_ids.clone(),
            config_hash: self.config_hash.clone(),
        };
        Artifact::new("feature-tensor", serde_json::to_value(meta)?).with(
            "x",
            &self.dims(),
            self.data.as_slice().to_vec(),
        )
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        art.expect_kind("feature-tensor")?;
        let meta: TensorMeta = meta_as(art)?;
        let (shape, values) = art.array("x")?;
        let dims: [usize; 3] = shape
            .try_into()
            .map_err(|_| Error::Integrity(format!("tensor shape {shape:?} is not three-way")))?;
        if meta.feature_labels.len() != dims[0]
            || meta.sensor_labels.len() != dims[1]
            || meta.event_labels.len() != dims[2]
            || meta.event_ids.len() != dims[2]
        {
            return Err(Error::Integrity("mode labels disagree with tensor shape".into()));
        }
        Ok(Self {
            data: Tensor3::from_vec(dims, values.to_vec())?,
            feature_labels: meta.feature_labels,
            sensor_labels: meta.sensor_labels,
            event_labels: meta.event_labels,
            event_ids: meta.event_ids,
            config_hash: meta.config_hash,
        })
    }
}

/// Assembles `X[i, j, k]` = feature `i` of sensor `j` at event `k` from
/// `features[event][sensor]`.
pub fn build_tensor(features: &[Vec<Vec<f64>>], labels: &[HealthLabel]) -> Result<FeatureTensor> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature events but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let nj = features.first().map_or(0, Vec::len);
    let ni = features.first().and_then(|s| s.first()).map_or(0, Vec::len);
    if nj == 0 || ni == 0 {
        return Err(Error::InvalidInput("no features to assemble".into()));
    }
    if features.iter().any(|s| s.len() != nj || s.iter().any(|f| f.len() != ni)) {
        return Err(Error::InvalidInput("ragged feature arrays".into()));
    }
    let data = Tensor3::from_fn([ni, nj, features.len()], |i, j, k| features[k][j][i]);
    if !data.is_finite() {
        return Err(Error::InvalidInput("features contain non-finite values".into()));
    }
    Ok(FeatureTensor {
        data,
        feature_labels: (0..ni).map(|i| format!("band_{i}")).collect(),
        sensor_labels: (0..nj).map(|j| format!("sensor_{}", j + 1)).collect(),
        event_labels: labels.to_vec(),
        event_ids: (0..features.len()).collect(),
        config_hash: String::new(),
    })
}

/// Segments, transforms and assembles one recording into a tensor.
pub fn featurize(rec: &SensorRecordings, spec: &FeatureSpec, config_hash: &str) -> Result<FeatureTensor> {
    let seg = segment_events(rec)?;
    let extractor = SpectralExtractor::new(spec, seg.len, &TaperRegistry::default())?;
    let features: Vec<Vec<Vec<f64>>> = seg
        .windows
        .par_iter()
        .map(|sensors| sensors.iter().map(|w| extractor.features(w)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut t = build_tensor(&features, &vec![rec.label; features.len()])?;
    t.sensor_labels = rec.sensor_ids.iter().map(|id| format!("sensor_{id}")).collect();
    t.config_hash = config_hash.into();
    Ok(t)
}
