//! From accelerometer recordings to the `(feature × sensor × event)` tensor.

mod assemble;
mod features;
mod window;

pub use assemble::{build_tensor, featurize, FeatureTensor};
pub use features::{segment_events, spectral_features, EventWindows, FeatureSpec, SpectralExtractor};
pub use window::{Hann, Rectangular, Taper, TaperRegistry};
