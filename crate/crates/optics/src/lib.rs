//! Scalar optical channel: an analytic Gaussian beam, binary masks,
//! angular-spectrum propagation, detector expectation maps, Poisson photon
//! counts and exact counting statistics for a saturating site detector.

pub mod analysis;
pub mod constants;
pub mod counting;
pub mod counts;
pub mod detector;
pub mod double_slit;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod io;
pub mod mask;
pub mod propagate;

pub use counts::{cumulative_frames, sample_counts, CountsFrame};
pub use detector::{expectation_map, DetectorParams, PixelMap};
pub use double_slit::{run_double_slit, DoubleSlitConfig, DoubleSlitResult};
pub use error::{OpticsError, Result};
pub use grid::{FieldGrid, GridSpec};
