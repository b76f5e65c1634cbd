//! Frequency-domain analysis of a coherent feedback squeezer: a degenerate
//! optical parametric oscillator inside a negative coherent-feedback loop.
//!
//! The crate computes closed-loop transfer functions, vacuum-input output
//! noise spectra, gain-fluctuation sensitivity bounds, Nyquist/Bode
//! stability verdicts, and allowable-length-mismatch feasibility maps for
//! free-space and waveguide devices.
//!
//! Module map:
//! - [`linsys`]: 2x2 complex response algebra, basis transforms, singular
//!   value gains, winding numbers.
//! - [`dispersion`]: refractive-index models and phase-matching quantities.
//! - [`plants`]: DOPO and filter models (Langevin, single-pass, cavity,
//!   Butterworth BPF).
//! - [`network`]: the assembled feedback squeezer, its loop gains, transfer
//!   sets and spectra, and the general feedback composition.
//! - [`stability`]: Nyquist verdicts, Bode traces, sensitivity bounds.
//! - [`feasibility`]: length-mismatch scans and (R_f, xi) sweep maps.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` guards reject NaN

pub mod dispersion;
pub mod error;
pub mod feasibility;
pub mod linsys;
pub mod network;
pub mod plants;
pub mod stability;

pub use error::{CfsError, Result};
pub use linsys::{AcMatrix, AcResponse, ComplexTrace, QuadMatrix, C64};
pub use network::{CfsConfig, ControllerBs, PlantModel, PropagationSegment};
pub use plants::{ButterworthBpf, CavityDopoParams, LangevinDopoParams, Quadrature};
pub use stability::{StabilitySettings, StabilityVerdict};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Energy loss of a path with the stated attenuation, `1 - 10^(-a l / 10)`
/// for `a` in dB/cm and `l` in m.
pub fn loss_from_db_per_cm(db_per_cm: f64, length_m: f64) -> f64 {
    1.0 - 10f64.powf(-db_per_cm * length_m * 100.0 / 10.0)
}
