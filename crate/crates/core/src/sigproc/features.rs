use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::window::{Taper, TaperRegistry};
use crate::error::{Error, Result};
use crate::simulator::SensorRecordings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSpec {
    pub n_bins: usize,
    pub window: String,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            n_bins: 16,
            window: "hann".into(),
        }
    }
}

/// Per-event, per-sensor windows of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindows {
    /// `windows[event][sensor]`.
    pub windows: Vec<Vec<Vec<f64>>>,
    /// Sample index at which each event starts in the recording.
    pub starts: Vec<usize>,
    pub len: usize,
}

/// Cuts every channel at event boundaries; all windows are truncated to
/// the shortest event.
pub fn segment_events(rec: &SensorRecordings) -> Result<EventWindows> {
    rec.validate()?;
    let n_events = rec.n_events();
    if n_events == 0 {
        return Err(Error::InvalidInput("recording has no events".into()));
    }
    let mut starts = vec![usize::MAX; n_events];
    let mut counts = vec![0usize; n_events];
    for (t, &e) in rec.event.iter().enumerate() {
        if starts[e] == usize::MAX {
            starts[e] = t;
        }
        counts[e] += 1;
    }
    if let Some(e) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("event {e} has no samples")));
    }
    let len = *counts.iter().min().expect("at least one event");
    let windows = starts
        .iter()
        .map(|&s| rec.channels.iter().map(|c| c[s..s + len].to_vec()).collect())
        .collect();
    Ok(EventWindows { windows, starts, len })
}

/// Spectral band features for windows of one fixed length.
///
/// A window is mean-removed, tapered and transformed; the one-sided
/// magnitude spectrum (DC excluded) is averaged over `n_bins`
/// logarithmically spaced bands. Magnitudes are scaled by `2 / Σw` so a
/// sinusoid of amplitude `a` on a bin centre peaks near `a`.
pub struct SpectralExtractor {
    len: usize,
    taper: Vec<f64>,
    scale: f64,
    edges: Vec<usize>,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectralExtractor {
    pub fn new(spec: &FeatureSpec, len: usize, tapers: &TaperRegistry) -> Result<Self> {
        let taper = tapers.get(&spec.window)?;
        Self::with_taper(spec.n_bins, len, taper.as_ref())
    }

    pub fn with_taper(n_bins: usize, len: usize, taper: &dyn Taper) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidConfig("n_bins must be >= 1".into()));
        }
        if len < 2 * n_bins {
            return Err(Error::InvalidInput(format!(
                "window of {len} samples is shorter than 2 x {n_bins} bins"
            )));
        }
        let weights = taper.weights(len);
        let sum: f64 = weights.iter().sum();
        Ok(Self {
            len,
            scale: 2.0 / sum,
            taper: weights,
            edges: band_edges(len / 2, n_bins),
            fft: FftPlanner::new().plan_fft_forward(len),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Band `b` covers one-sided bins `edges[b]..edges[b + 1]`.
    pub fn band_edges(&self) -> &[usize] {
        &self.edges
    }

    /// Two-sided `|X_f|²`, `f = 0..n`, of the mean-removed, tapered window.
    pub fn power_spectrum(&self, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.len {
            return Err(Error::InvalidInput(format!(
                "window has {} samples, extractor expects {}",
                window.len(),
                self.len
            )));
        }
        if window.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("window has non-finite samples".into()));
        }
        let mean = window.iter().sum::<f64>() / self.len as f64;
        let mut buf: Vec<Complex<f64>> = window
            .iter()
            .zip(&self.taper)
            .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        Ok(buf.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Sum of `|X_f|²` over each band's bins.
    pub fn band_energies(&self, window: &[f64]) -> Result<Vec<f64>> {
        let p = self.power_spectrum(window)?;
        Ok(self.edges.windows(2).map(|e| p[e[0]..e[1]].iter().sum()).collect())
    }

    pub fn features(&self, window: &[f64]) -> Result<Vec<f64>> {
        let p = self.power_spectrum(window)?;
        Ok(self
            .edges
            .windows(2)
            .map(|e| {
                let mags: f64 = p[e[0]..e[1]].iter().map(|v| v.sqrt()).sum();
                self.scale * mags / (e[1] - e[0]) as f64
            })
            .collect())
    }
}

/// Integer band edges over bins `1..=half`: geometric spacing, then nudged
/// so that every band holds at least one bin.
fn band_edges(half: usize, n_bins: usize) -> Vec<usize> {
    let top = half + 1;
    let ratio = (top as f64).ln() / n_bins as f64;
    let mut edges: Vec<usize> = (0..=n_bins)
        .map(|b| (ratio * b as f64).exp().round() as usize)
        .collect();
    edges[0] = 1;
    edges[n_bins] = top;
    for b in 1..=n_bins {
        edges[b] = edges[b].max(edges[b - 1] + 1);
    }
    for b in (0..n_bins).rev() {
        edges[b] = edges[b].min(edges[b + 1] - 1);
    }
    edges
}

/// Convenience wrapper: Hann-tapered features of a single window.
pub fn spectral_features(window: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    SpectralExtractor::with_taper(n_bins, window.len(), &super::window::Hann)?.features(window)
}
