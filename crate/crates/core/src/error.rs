use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the physical model and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency is not a cavity resonance: phase residual {residual:.3e} rad exceeds {tolerance:.3e} rad")]
    NotOnResonance { residual: f64, tolerance: f64 },

    #[error("round-trip amplitude {amplitude:.6} is at or above the self-oscillation threshold")]
    OscillationThreshold { amplitude: f64 },

    #[error("linewidth equation has no positive root (linear coefficient {linear:.6e}, cubic coefficient zero)")]
    NoPositiveRoot { linear: f64 },

    #[error("spectrum peak or half-maximum crossing lies on the grid boundary; widen the span")]
    PeakAtEdge,

    #[error("transmission never falls below half maximum within the grid")]
    NoHalfMaxCrossing,

    #[error("oscillation-flagged samples inside the half-maximum band")]
    ThresholdInBand,

    #[error("no solution: {0}")]
    Infeasible(String),

    #[error("root not bracketed: f({lo:.6e}) = {f_lo:.6e}, f({hi:.6e}) = {f_hi:.6e}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}
