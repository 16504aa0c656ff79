use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ocsvm::{train_ocsvm, OcsvmModel};
use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Fresh seeds tried when every restart leaves a cluster empty.
    pub retries: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iter: 300,
            retries: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, m)| (c, dist2(m, x)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// k-means++ seeding: each new centre is drawn with probability
/// proportional to its squared distance from the nearest existing centre.
fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centres = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d2.iter()
                .position(|&d| {
                    u -= d;
                    u < 0.0
                })
                .unwrap_or(points.len() - 1)
        } else {
            rng.random_range(0..points.len())
        };
        centres.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &centres[centres.len() - 1]));
        }
    }
    centres
}

/// Lloyd iterations from one seeding; `None` when a cluster empties.
fn lloyd(points: &[Vec<f64>], k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> Option<KMeansFit> {
    let dim = points[0].len();
    let mut centroids = plus_plus(points, k, rng);
    let mut assignments = vec![usize::MAX; points.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (c, _) = nearest(&centroids, p);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            *c = s.into_iter().map(|v| v / n as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = assignments.iter().zip(points).map(|(&a, p)| dist2(&centroids[a], p)).sum();
    Some(KMeansFit {
        assignments,
        centroids,
        inertia,
    })
}

/// Best-of-`restarts` k-means with k-means++ seeding.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeansFit> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} must lie in 1..={}",
            points.len()
        )));
    }
    for attempt in 0..=opts.retries {
        let mut best: Option<KMeansFit> = None;
        for r in 0..opts.restarts.max(1) {
            let stream = (attempt * opts.restarts.max(1) + r) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, stream));
            if let Some(fit) = lloyd(points, k, opts.max_iter, &mut rng) {
                if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
                    best = Some(fit);
                }
            }
        }
        if let Some(fit) = best {
            return Ok(fit);
        }
        log::warn!("k-means attempt {attempt} left a cluster empty; retrying with a new seed");
    }
    Err(Error::EmptyCluster {
        retries: opts.retries,
    })
}

/// Sensor most associated with a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub sensor: usize,
    /// Pearson correlation of membership with that sensor's feature energy.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub models: Vec<OcsvmModel>,
    pub attribution: Vec<Attribution>,
}

impl ClusterSet {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == cluster).collect()
    }

    pub fn nearest_cluster(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// For each cluster, the sensor whose per-point feature energy correlates
/// most strongly with membership. With a single cluster membership is
/// constant, so the sensor of largest mean energy is reported instead.
pub fn attribute_sensors(assignments: &[usize], k: usize, sensor_energy: &[Vec<f64>]) -> Vec<Attribution> {
    let n_sensors = sensor_energy.first().map_or(0, Vec::len);
    (0..k)
        .map(|c| {
            let member: Vec<f64> = assignments.iter().map(|&a| f64::from(u8::from(a == c))).collect();
            let scored: Vec<(usize, f64)> = (0..n_sensors)
                .map(|s| {
                    let e: Vec<f64> = sensor_energy.iter().map(|row| row[s]).collect();
                    let key = if k == 1 { e.iter().sum::<f64>() } else { pearson(&member, &e) };
                    (s, key)
                })
                .collect();
            let (sensor, key) = scored
                .into_iter()
                .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
            Attribution {
                sensor,
                correlation: if k == 1 { 1.0 } else { key },
            }
        })
        .collect()
}

/// Clusters C-space points and trains one one-class SVM per cluster.
///
/// Each cluster's ν is raised to `1/m_c` when the cluster is too small
/// for the requested value; clusters with fewer than two members are
/// rejected as degenerate.
pub fn cluster_split(
    points: &[Vec<f64>],
    sensor_energy: &[Vec<f64>],
    k: usize,
    nu: f64,
    gamma: f64,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<ClusterSet> {
    if sensor_energy.len() != points.len() {
        return Err(Error::InvalidInput("one sensor-energy row is needed per point".into()));
    }
    let fit = kmeans(points, k, seed, opts)?;
    let mut models = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<Vec<f64>> = points
            .iter()
            .zip(&fit.assignments)
            .filter(|(_, &a)| a == c)
            .map(|(p, _)| p.clone())
            .collect();
        if members.len() < 2 {
            return Err(Error::EmptyCluster { retries: opts.retries });
        }
        let nu_c = nu.max(1.0 / members.len() as f64);
        models.push(train_ocsvm(&members, nu_c, gamma)?);
    }
    let attribution = attribute_sensors(&fit.assignments, k, sensor_energy);
    Ok(ClusterSet {
        assignments: fit.assignments,
        centroids: fit.centroids,
        models,
        attribution,
    })
}

/// Decision for one point under a set of per-cluster models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Routed {
    pub cluster: usize,
    pub score: f64,
}

/// Combines per-cluster models into a single decision for a new point.
pub trait Router: Send + Sync {
    fn name(&self) -> &'static str;
    fn route(&self, set: &ClusterSet, x: &[f64]) -> Routed;
}

/// Score of the model whose centroid is nearest.
pub struct NearestCentroid;

impl Router for NearestCentroid {
    fn name(&self) -> &'static str {
        "nearest-centroid"
    }

    fn route(&self, set: &ClusterSet, x: &[f64]) -> Routed {
        let cluster = set.nearest_cluster(x);
        Routed {
            cluster,
            score: set.models[cluster].decision(x),
        }
    }
}

/// Inlier when at least half the models accept; the score is the vote
/// margin in `[−1, 1]`.
pub struct MajorityVote;

impl Router for MajorityVote {
    fn name(&self) -> &'static str {
        "majority-vote"
    }

    fn route(&self, set: &ClusterSet, x: &[f64]) -> Routed {
        let yes = set.models.iter().filter(|m| m.decision(x) >= 0.0).count() as f64;
        Routed {
            cluster: set.nearest_cluster(x),
            score: (2.0 * yes - set.k() as f64) / set.k() as f64,
        }
    }
}

/// Model scores averaged with inverse squared centroid distance weights.
pub struct WeightedAverage;

impl Router for WeightedAverage {
    fn name(&self) -> &'static str {
        "weighted-average"
    }

    fn route(&self, set: &ClusterSet, x: &[f64]) -> Routed {
        let d: Vec<f64> = set.centroids.iter().map(|c| dist2(c, x)).collect();
        let cluster = set.nearest_cluster(x);
        if d[cluster] == 0.0 {
            return Routed {
                cluster,
                score: set.models[cluster].decision(x),
            };
        }
        let w: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        let total: f64 = w.iter().sum();
        let score = set.models.iter().zip(&w).map(|(m, w)| w * m.decision(x)).sum::<f64>() / total;
        Routed { cluster, score }
    }
}

#[derive(Clone)]
pub struct RouterRegistry {
    routers: BTreeMap<&'static str, Arc<dyn Router>>,
}

impl Default for RouterRegistry {
    fn default() -> Self {
        let mut r = Self {
            routers: BTreeMap::new(),
        };
        r.register(Arc::new(NearestCentroid));
        r.register(Arc::new(MajorityVote));
        r.register(Arc::new(WeightedAverage));
        r
    }
}

impl RouterRegistry {
    pub fn register(&mut self, router: Arc<dyn Router>) {
        self.routers.insert(router.name(), router);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Router>> {
        self.routers.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "router",
            name: name.into(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.routers.keys().copied().collect()
    }
}
