use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-weight isotropic Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub points: Vec<Vec<f64>>,
    pub bandwidth: f64,
    pub dim: usize,
}

impl KdeModel {
    /// Fits to `points`, using Scott's rule when `bandwidth` is `None`.
    pub fn fit(points: &[Vec<f64>], bandwidth: Option<f64>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("KDE needs points of one nonzero dimension".into()));
        }
        let h = match bandwidth {
            Some(h) => h,
            None => scott_bandwidth(points)?,
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("KDE bandwidth must be > 0, got {h}")));
        }
        Ok(Self {
            points: points.to_vec(),
            bandwidth: h,
            dim,
        })
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let h2 = self.bandwidth * self.bandwidth;
        let norm = (TAU * h2).powf(-(self.dim as f64) / 2.0);
        let sum: f64 = self
            .points
            .iter()
            .map(|p| {
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * h2)).exp()
            })
            .sum();
        norm * sum / self.points.len() as f64
    }

    /// Per-axis `[lo, hi]` of the reference points.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|d| {
                self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[d]), hi.max(p[d]))
                })
            })
            .collect()
    }
}

/// `p(x) = (1/N) Σ_n (2π h²)^{−D/2} exp(−‖x − x_n‖² / 2h²)`.
pub fn kde_density(model: &KdeModel, x: &[f64]) -> f64 {
    model.density(x)
}

/// Scott's rule with the pooled per-axis standard deviation:
/// `h = σ N^{−1/(D+4)}`.
pub fn scott_bandwidth(points: &[Vec<f64>]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput("Scott's rule needs at least two points".into()));
    }
    let dim = points[0].len();
    let mut var_sum = 0.0;
    for d in 0..dim {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n as f64;
        var_sum += points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    }
    let sigma = (var_sum / dim as f64).sqrt();
    if sigma == 0.0 {
        return Err(Error::InvalidInput(
            "points have zero spread; supply a KDE bandwidth explicitly".into(),
        ));
    }
    Ok(sigma * (n as f64).powf(-1.0 / (dim as f64 + 4.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NegativeSampling {
    pub n: usize,
    /// Candidates are accepted below this quantile of the training densities.
    pub density_quantile: f64,
    /// Bounding-box expansion as a fraction of each axis' range.
    pub box_margin: f64,
}

impl Default for NegativeSampling {
    fn default() -> Self {
        Self {
            n: 200,
            density_quantile: 0.05,
            box_margin: 0.25,
        }
    }
}

const MIN_ACCEPTANCE: f64 = 1e-3;
const MIN_CANDIDATES: usize = 10_000;

/// Sampling box for negatives: the data box widened by `margin` times each
/// axis' range (or times the bandwidth on a degenerate axis).
pub fn negative_box(model: &KdeModel, margin: f64) -> Vec<(f64, f64)> {
    model
        .bounds()
        .into_iter()
        .map(|(lo, hi)| {
            let pad = margin * (hi - lo).max(model.bandwidth);
            (lo - pad, hi + pad)
        })
        .collect()
}

/// Rejection-samples `n` artificial outliers: uniform candidates from the
/// expanded data box whose density falls below the `density_quantile` of
/// the reference points' own densities.
pub fn generate_negatives(
    model: &KdeModel,
    n: usize,
    density_quantile: f64,
    box_margin: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidInput("requested zero negatives".into()));
    }
    if !(0.0..=1.0).contains(&density_quantile) || !(box_margin >= 0.0) {
        return Err(Error::InvalidInput(
            "density_quantile must lie in [0, 1] and box_margin be >= 0".into(),
        ));
    }
    let mut dens: Vec<f64> = model.points.iter().map(|p| model.density(p)).collect();
    dens.sort_by(f64::total_cmp);
    let threshold = dens[((dens.len() - 1) as f64 * density_quantile).floor() as usize];
    let bbox = negative_box(model, box_margin);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tried = 0usize;
    while out.len() < n {
        let cand: Vec<f64> = bbox.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect();
        tried += 1;
        if model.density(&cand) < threshold {
            out.push(cand);
        }
        if tried >= MIN_CANDIDATES && (out.len() as f64) < MIN_ACCEPTANCE * tried as f64 {
            return Err(Error::LowAcceptance {
                rate: out.len() as f64 / tried as f64,
            });
        }
    }
    log::debug!("accepted {n} negatives from {tried} candidates");
    Ok(out)
}
