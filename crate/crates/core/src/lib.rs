//! Performance analysis of vertical underwater optical links through
//! cascaded mixture Exponential-Generalized-Gamma (EGG) turbulence.
//!
//! The end-to-end fading is the product of independent per-layer EGG
//! variables. Its irradiance and SNR statistics, and the average BER,
//! ergodic capacity and outage probability built on them, are finite sums
//! of Fox H-functions evaluated by [`fox_h`]. [`montecarlo`] draws the
//! physical channel directly and serves as an independent check.

pub mod channel;
pub mod error;
pub mod fox_h;
pub mod metrics;
pub mod montecarlo;
pub mod quad;
pub mod scenario;
pub mod special_fn;
pub mod sweep;

pub use error::{Error, Result};
