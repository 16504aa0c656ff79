//! Commanded control-surface input schedules.
//!
//! Generators are registered by name so a schedule kind can be chosen from
//! configuration; see [`ScheduleRegistry`].

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One held command: surface angles in degrees and the hold duration in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub angles_deg: Vec<f64>,
    pub hold: f64,
}

/// Admissible commanded angle magnitudes, `min_abs ≤ |β_C| ≤ max_abs` (deg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleBounds {
    pub min_abs: f64,
    pub max_abs: f64,
}

impl AngleBounds {
    pub fn full(max_abs: f64) -> Self {
        Self {
            min_abs: 0.0,
            max_abs,
        }
    }

    pub fn contains(&self, angle: f64) -> bool {
        let a = angle.abs();
        a >= self.min_abs - 1e-12 && a <= self.max_abs + 1e-12
    }

    fn validate(&self) -> Result<()> {
        if !(self.min_abs >= 0.0 && self.max_abs > self.min_abs) {
            return Err(Error::InvalidConfig(format!(
                "angle bounds need 0 <= min_abs < max_abs, got [{}, {}]",
                self.min_abs, self.max_abs
            )));
        }
        Ok(())
    }

    /// Maps `u ∈ [0, 1)` onto `[−max, −min] ∪ [min, max]` preserving measure.
    fn from_unit(&self, u: f64) -> f64 {
        let width = self.max_abs - self.min_abs;
        let t = u * 2.0 * width;
        if t < width {
            -self.max_abs + t
        } else {
            self.min_abs + (t - width)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSchedule {
    pub mode: String,
    pub bounds: AngleBounds,
    pub events: Vec<Event>,
}

impl InputSchedule {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n_surfaces(&self) -> usize {
        self.events.first().map_or(0, |e| e.angles_deg.len())
    }

    pub fn duration(&self) -> f64 {
        self.events.iter().map(|e| e.hold).sum()
    }
}

/// Every ordered combination of `steps` equi-spaced angles in
/// `[−max_abs, max_abs]` per surface, last surface varying fastest.
pub fn make_grid_schedule(
    max_abs: f64,
    steps: usize,
    surfaces: usize,
    hold: f64,
) -> Result<InputSchedule> {
    if steps == 0 {
        return Err(Error::InvalidConfig("grid schedule needs steps >= 1".into()));
    }
    let bounds = AngleBounds::full(max_abs);
    bounds.validate()?;
    let levels: Vec<f64> = if steps == 1 {
        vec![-max_abs]
    } else {
        (0..steps)
            .map(|i| -max_abs + 2.0 * max_abs * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let total = steps.pow(surfaces as u32);
    let events = (0..total)
        .map(|mut idx| {
            let mut angles = vec![0.0; surfaces];
            for slot in angles.iter_mut().rev() {
                *slot = levels[idx % steps];
                idx /= steps;
            }
            Event {
                angles_deg: angles,
                hold,
            }
        })
        .collect();
    Ok(InputSchedule {
        mode: "grid".into(),
        bounds,
        events,
    })
}

/// Latin hypercube over the admissible angle set: each surface's commands
/// fall in `n_events` distinct, equally sized strata. With `min_abs > 0`
/// the strata tile `[−max, −min] ∪ [min, max]`, half on each sign.
pub fn make_lhs_schedule(
    bounds: AngleBounds,
    n_events: usize,
    surfaces: usize,
    hold: f64,
    seed: u64,
) -> Result<InputSchedule> {
    if n_events == 0 {
        return Err(Error::InvalidConfig("LHS schedule needs n_events >= 1".into()));
    }
    bounds.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(surfaces);
    for _ in 0..surfaces {
        let mut strata: Vec<usize> = (0..n_events).collect();
        strata.shuffle(&mut rng);
        let col: Vec<f64> = strata
            .into_iter()
            .map(|s| {
                let u = (s as f64 + rng.random::<f64>()) / n_events as f64;
                bounds.from_unit(u)
            })
            .collect();
        columns.push(col);
    }
    let events = (0..n_events)
        .map(|e| Event {
            angles_deg: columns.iter().map(|c| c[e]).collect(),
            hold,
        })
        .collect();
    let mode = if bounds.min_abs > 0.0 { "lhs-large" } else { "lhs" };
    Ok(InputSchedule {
        mode: mode.into(),
        bounds,
        events,
    })
}

/// Parameters shared by every schedule generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSpec {
    /// Registered generator name: `grid`, `lhs` or `lhs-large`.
    pub kind: String,
    pub max_angle_deg: f64,
    /// Lower magnitude bound used by `lhs-large`.
    pub min_large_angle_deg: f64,
    /// Levels per surface for `grid`.
    pub grid_steps: usize,
    /// Event count for the LHS generators.
    pub n_events: usize,
    pub hold: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            kind: "grid".into(),
            max_angle_deg: 8.0,
            min_large_angle_deg: 5.0,
            grid_steps: 13,
            n_events: 100,
            hold: 2.0,
        }
    }
}

pub trait ScheduleGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    fn generate(&self, spec: &ScheduleSpec, surfaces: usize, seed: u64) -> Result<InputSchedule>;
}

struct Grid;
struct FullRangeLhs;
struct LargeAngleLhs;

impl ScheduleGenerator for Grid {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn generate(&self, spec: &ScheduleSpec, surfaces: usize, _seed: u64) -> Result<InputSchedule> {
        make_grid_schedule(spec.max_angle_deg, spec.grid_steps, surfaces, spec.hold)
    }
}

impl ScheduleGenerator for FullRangeLhs {
    fn name(&self) -> &'static str {
        "lhs"
    }

    fn generate(&self, spec: &ScheduleSpec, surfaces: usize, seed: u64) -> Result<InputSchedule> {
        let bounds = AngleBounds::full(spec.max_angle_deg);
        make_lhs_schedule(bounds, spec.n_events, surfaces, spec.hold, seed)
    }
}

impl ScheduleGenerator for LargeAngleLhs {
    fn name(&self) -> &'static str {
        "lhs-large"
    }

    fn generate(&self, spec: &ScheduleSpec, surfaces: usize, seed: u64) -> Result<InputSchedule> {
        let bounds = AngleBounds {
            min_abs: spec.min_large_angle_deg,
            max_abs: spec.max_angle_deg,
        };
        make_lhs_schedule(bounds, spec.n_events, surfaces, spec.hold, seed)
    }
}

/// Name → generator lookup.
pub struct ScheduleRegistry {
    inner: BTreeMap<&'static str, Box<dyn ScheduleGenerator>>,
}

impl Default for ScheduleRegistry {
    fn default() -> Self {
        let mut reg = Self {
            inner: BTreeMap::new(),
        };
        reg.register(Box::new(Grid));
        reg.register(Box::new(FullRangeLhs));
        reg.register(Box::new(LargeAngleLhs));
        reg
    }
}

impl ScheduleRegistry {
    pub fn register(&mut self, generator: Box<dyn ScheduleGenerator>) {
        self.inner.insert(generator.name(), generator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ScheduleGenerator> {
        self.inner
            .get(name)
            .map(|g| g.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "schedule generator",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.inner.keys().copied().collect()
    }

    pub fn generate(&self, spec: &ScheduleSpec, surfaces: usize, seed: u64) -> Result<InputSchedule> {
        if !(spec.hold > 0.0) {
            return Err(Error::InvalidConfig(format!("hold must be > 0, got {}", spec.hold)));
        }
        self.get(&spec.kind)?.generate(spec, surfaces, seed)
    }
}
