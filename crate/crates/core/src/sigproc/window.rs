use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A taper applied to a window before its Fourier transform.
pub trait Taper: Send + Sync {
    fn name(&self) -> &'static str;
    fn weights(&self, n: usize) -> Vec<f64>;
}

pub struct Hann;

impl Taper for Hann {
    fn name(&self) -> &'static str {
        "hann"
    }

    /// Periodic Hann window, `w_t = ½(1 − cos(2πt/n))`.
    fn weights(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| 0.5 * (1.0 - (TAU * t as f64 / n as f64).cos()))
            .collect()
    }
}

pub struct Rectangular;

impl Taper for Rectangular {
    fn name(&self) -> &'static str {
        "rectangular"
    }

    fn weights(&self, n: usize) -> Vec<f64> {
        vec![1.0; n]
    }
}

#[derive(Clone)]
pub struct TaperRegistry {
    tapers: BTreeMap<&'static str, Arc<dyn Taper>>,
}

impl Default for TaperRegistry {
    fn default() -> Self {
        let mut r = Self {
            tapers: BTreeMap::new(),
        };
        r.register(Arc::new(Hann));
        r.register(Arc::new(Rectangular));
        r
    }
}

impl TaperRegistry {
    pub fn register(&mut self, taper: Arc<dyn Taper>) {
        self.tapers.insert(taper.name(), taper);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Taper>> {
        self.tapers.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "window",
            name: name.into(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tapers.keys().copied().collect()
    }
}
