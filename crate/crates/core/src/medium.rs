//! Gain-doublet medium: two equal Lorentzian gain lines at `omega0 ± Γ/2`.
//!
//! The complex index is
//!
//! ```text
//! ñ(ω) = 1 + Σ_{s=±1} M / ((ω − ω0 − sΓ/2) + iW)
//! ```
//!
//! with the field propagating as `exp(i(ñωz/c − ωt))`, so `Im ñ < 0` is gain
//! and the single-pass field factor is `exp(−(ω/c)·Im ñ·ℓ)`. `Re ñ − 1` is odd
//! about `omega0` and `Im ñ` is even, which makes every even Taylor coefficient
//! of the real part vanish there.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::LN_10;

use crate::error::{Error, Result};
use crate::units::C;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainDoublet {
    omega0: f64,
    gamma_sep: f64,
    width: f64,
    amplitude: f64,
    alpha: f64,
    length: f64,
}

/// Taylor coefficients of `Re ñ` at the doublet centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionCoefficients {
    /// s/rad
    pub n1: f64,
    /// s²/rad²; zero for the symmetric doublet.
    pub n2: f64,
    /// (1/6)·∂³n/∂ω³, s³/rad³
    pub n3: f64,
    /// Group index `1 + n1·omega0`.
    pub ng: f64,
}

impl GainDoublet {
    /// * `omega0` – centre between the lines, rad/s
    /// * `gamma_sep` – line separation Γ, rad/s
    /// * `width` – HWHM W of each line, rad/s
    /// * `amplitude` – line strength M, rad/s
    /// * `alpha` – residual amplitude loss, 1/m
    /// * `length` – medium length ℓ, m
    pub fn new(
        omega0: f64,
        gamma_sep: f64,
        width: f64,
        amplitude: f64,
        alpha: f64,
        length: f64,
    ) -> Result<Self> {
        let positive = [
            ("omega0", omega0),
            ("gamma_sep", gamma_sep),
            ("width", width),
            ("length", length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("amplitude", amplitude), ("alpha", alpha)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(Self { omega0, gamma_sep, width, amplitude, alpha, length })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma_sep(&self) -> f64 {
        self.gamma_sep
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn with_amplitude(self, amplitude: f64) -> Result<Self> {
        Self::new(self.omega0, self.gamma_sep, self.width, amplitude, self.alpha, self.length)
    }

    pub fn with_width(self, width: f64) -> Result<Self> {
        Self::new(self.omega0, self.gamma_sep, width, self.amplitude, self.alpha, self.length)
    }

    pub fn with_separation(self, gamma_sep: f64) -> Result<Self> {
        Self::new(self.omega0, gamma_sep, self.width, self.amplitude, self.alpha, self.length)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.omega0, self.gamma_sep, self.width, self.amplitude, alpha, self.length)
    }

    /// `ñ − 1` at detuning `delta = ω − omega0`.
    ///
    /// Works from the detuning directly: forming `omega0 + delta` first would
    /// throw away the sub-Hz part of `delta` at optical frequencies. Keeping
    /// the excess separate from the leading 1 also keeps its full precision
    /// (the excess is ~1e-7, far below the spacing of f64 values near 1).
    pub fn excess_index_at_detuning(&self, delta: f64) -> Complex64 {
        let half = 0.5 * self.gamma_sep;
        let upper = Complex64::new(self.amplitude, 0.0) / Complex64::new(delta - half, self.width);
        let lower = Complex64::new(self.amplitude, 0.0) / Complex64::new(delta + half, self.width);
        upper + lower
    }

    /// ñ at detuning `delta = ω − omega0`.
    pub fn index_at_detuning(&self, delta: f64) -> Complex64 {
        Complex64::new(1.0, 0.0) + self.excess_index_at_detuning(delta)
    }

    /// ñ(ω) for an absolute angular frequency.
    pub fn complex_index(&self, omega: f64) -> Complex64 {
        self.index_at_detuning(omega - self.omega0)
    }

    /// ∂n1/∂M at fixed Γ and W. Negative exactly when Γ > 2W.
    pub fn n1_per_amplitude(&self) -> f64 {
        let w2 = self.width * self.width;
        let a2 = 0.25 * self.gamma_sep * self.gamma_sep;
        2.0 * (w2 - a2) / ((a2 + w2) * (a2 + w2))
    }

    /// Closed-form derivatives of `Re ñ` at `omega0`.
    ///
    /// With `a = Γ/2` each line contributes `M·u/(u² + W²)` at `u = x ∓ a`, whose
    /// k-th derivative is `Re[(−1)^k k! M/(u + iW)^{k+1}]`. Summing the two lines:
    ///
    /// ```text
    /// n1 = 2M (W² − a²) / (a² + W²)²
    /// n3 = −2M (a⁴ − 6a²W² + W⁴) / (a² + W²)⁴
    /// ```
    pub fn dispersion_coefficients(&self) -> DispersionCoefficients {
        let m = self.amplitude;
        let w2 = self.width * self.width;
        let a2 = 0.25 * self.gamma_sep * self.gamma_sep;
        let s = a2 + w2;
        let n1 = m * self.n1_per_amplitude();
        let n3 = -2.0 * m * (a2 * a2 - 6.0 * a2 * w2 + w2 * w2) / (s * s * s * s);
        DispersionCoefficients { n1, n2: 0.0, n3, ng: 1.0 + n1 * self.omega0 }
    }

    pub fn group_index(&self) -> f64 {
        self.dispersion_coefficients().ng
    }

    /// Single-pass intensity gain in dB (positive = amplification). Residual
    /// loss α is not included.
    pub fn single_pass_gain_db(&self, omega: f64) -> f64 {
        self.gain_db_at_detuning(omega - self.omega0)
    }

    pub fn gain_db_at_detuning(&self, delta: f64) -> f64 {
        let omega = self.omega0 + delta;
        let exponent = -(omega / C) * self.excess_index_at_detuning(delta).im * self.length;
        // 10·log10(exp(2x)) = 20x/ln 10
        20.0 * exponent / LN_10
    }

    /// Single-pass field gain `exp(−(ω/c)·Im ñ·ℓ)` at detuning `delta`.
    pub fn field_gain_at_detuning(&self, delta: f64) -> f64 {
        let omega = self.omega0 + delta;
        (-(omega / C) * self.excess_index_at_detuning(delta).im * self.length).exp()
    }

    /// Residual loss factor ρ = exp(−αℓ) applied once per round trip.
    pub fn residual_loss_factor(&self) -> f64 {
        (-self.alpha * self.length).exp()
    }

    /// Amplitude M giving `gain_db` of single-pass gain at a line centre
    /// (`omega0 + Γ/2`). The dB figure is linear in M.
    pub fn amplitude_for_line_gain_db(&self, gain_db: f64) -> Result<f64> {
        let unit = self.with_amplitude(1.0)?;
        let per_unit = unit.gain_db_at_detuning(0.5 * self.gamma_sep);
        let m = gain_db / per_unit;
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "line gain {gain_db} dB does not map to a non-negative amplitude"
            )));
        }
        Ok(m)
    }
}

/// Third-order coefficient from the first-order one for a well-separated
/// doublet, `n3 ≈ −2·n1/Γ²`.
///
/// This is the estimate the white-light linewidth formulas are written with.
/// For Lorentzian lines the exact [`GainDoublet::dispersion_coefficients`]
/// value tends to `4·n1/Γ²` as `W/Γ → 0` instead (opposite sign, twice the
/// magnitude), so compare magnitudes with care.
pub fn n3_doublet_approx(n1: f64, gamma_sep: f64) -> f64 {
    -2.0 * n1 / (gamma_sep * gamma_sep)
}
