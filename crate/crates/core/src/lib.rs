//! Ring optical cavity with an intracavity gain-doublet medium.
//!
//! The medium is a pair of Lorentzian gain lines placed symmetrically about the
//! cavity resonance. Between the lines the refractive index falls with
//! frequency, and with the right slope the round-trip phase stops depending on
//! frequency to first order: a white-light cavity. The crate covers
//!
//! * [`medium`]: complex index of the doublet and its Taylor coefficients,
//! * [`cavity`]: round-trip phase, dephasing, transmission and build-up spectra,
//! * [`linewidth`]: closed-form linewidth predictions and numerical FWHM,
//! * [`tuner`]: solving the gain amplitude for a target group index,
//! * [`runner`]: scenario configs, sweeps, CSV/JSON output and the self-test.
//!
//! Frequencies are angular (rad/s) everywhere inside the library. Conversion
//! from ordinary frequencies happens once, in [`runner::config`].

pub mod cavity;
pub mod error;
pub mod linewidth;
pub mod medium;
pub mod roots;
pub mod runner;
pub mod tuner;
pub mod units;

pub use cavity::{CavityModel, Dephasing, GainCoupling, Response, TransmissionSpectrum};
pub use error::{Error, Result};
pub use linewidth::{LinewidthReport, WlcLinewidthInputs};
pub use medium::{DispersionCoefficients, GainDoublet};
pub use tuner::{TuneResult, WidthScaling};
