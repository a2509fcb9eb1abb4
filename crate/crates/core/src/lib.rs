//! Latent-space roughness analysis and fill-tuning dataset selection.

pub mod error;
pub mod frustration;
pub mod geometry;
pub mod ktn;
pub mod optimize;
pub mod oracle;
pub mod pipeline;
pub mod surfaces;
pub mod transition;

pub use error::{Error, Result};
pub use geometry::{Bounds, Point, RandomSource};
