//! Split-step simulation and Gaussian-noise modelling of cross-channel
//! interference (XCI) in dispersion-managed coherent links.
//!
//! The crate is organized as a pipeline: [`topology`] describes the link,
//! [`txsignal`] builds the launched WDM field, [`ssfm`] propagates it,
//! [`rxdsp`] measures the interference on the channel under test, [`gnmodel`]
//! provides the analytic incoherent reference and [`analysis`] turns traces
//! into gradients and correlation functions. [`campaign`] ties these together
//! into reproducible scenario matrices.

pub mod analysis;
pub mod campaign;
pub mod error;
pub mod field;
pub mod gnmodel;
pub mod rxdsp;
pub mod scalar;
pub mod ssfm;
pub mod topology;
pub mod txsignal;
pub mod units;

pub use error::{Error, Result};
pub use field::SampledField;
pub use scalar::Real;

/// Double-precision field, the reference configuration.
pub type Field = SampledField<f64>;
/// Single-precision field.
pub type Field32 = SampledField<f32>;
