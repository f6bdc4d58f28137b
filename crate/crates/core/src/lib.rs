//! Evaporation-driven tear-film thinning: forward models, fluorescence
//! rendering, reduced-order acceleration, image preprocessing and
//! derivative-free fitting of evaporation parameters.

pub mod error;
pub mod evaporation;
pub mod forward;
pub mod grid;
pub mod intensity;
pub mod inverse;
pub mod ode;
pub mod params;
pub mod preprocess;
pub mod rom;
pub mod spectral;

pub use error::{Error, Result};
pub use evaporation::{
    ellipse_geometry, CircularPeak, EllipseGeometry, EllipticPeak, Evaporation, EvaporationSpec,
    Peak, RadialEvaporation, StreakEvaporation,
};
pub use grid::{FieldState, Grid2D, InitialConditions};
pub use intensity::{intensity, intensity_at, normalization_coefficient};
pub use params::{derive_nondim, nondim_time, NondimParams, PhysicalParams};
