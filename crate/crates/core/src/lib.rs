//! Correlation-filter visual tracking with an adaptively weighted saliency
//! response channel, and an OTB-style benchmark harness.
//!
//! The tracker learns two closed-form multi-channel correlation filters: one
//! over HoG and intensity features from a wide search region, one over a
//! saliency map from a tighter region. At localization time the saliency
//! response is added to the appearance response with a weight that follows
//! the temporal consistency (cosine similarity) of consecutive saliency maps.

pub mod bench;
pub mod config;
pub mod dcf;
pub mod error;
pub mod features;
pub mod fft;
pub mod fusion;
pub mod grid;
pub mod imaging;
pub mod saliency;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
pub use fusion::{FusionConfig, SaliencySource, WeightRule};
pub use grid::RealGrid;
pub use imaging::{BoundingBox, ImagePlane};
pub use saliency::{SaliencyMap, SaliencyProvider};
pub use tracker::{FrameDiagnostics, TrackerState};
