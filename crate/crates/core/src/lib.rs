//! Frequency-domain simulation and fitting of continuous linear measurements
//! on multimode spin oscillators.
//!
//! - [`model`]: oscillator modes, ensembles and the multilevel spin builder.
//! - [`spectrum`]: homodyne PSDs at any quadrature, squeezing envelopes,
//!   rotating-wave expressions and the backaction-imprecision product.
//! - [`fit`]: synthetic periodogram data and global multi-quadrature fits.
//! - [`optics`]: ray-matrix design of the collimated tophat probe.
//! - [`cli`]: the `spinsqz` command-line front end.
//!
//! Runnable examples for each capability live in `examples/`.

pub mod cli;
pub mod error;
pub mod fit;
pub mod model;
pub mod optics;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{
    build_cesium_ensemble, clebsch_coefficient, derived_rates, CesiumLevelSpec, Damping,
    DerivedRates, EnsembleModel, ExtraneousNoise, ModeParams, SHOT_NOISE,
};
pub use spectrum::{homodyne_psd, Method, PsdTrace, SpectrumRequest};
