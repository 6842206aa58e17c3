//! Cavity linewidths: closed forms and numerical FWHM.
//!
//! Every linewidth here is a full width at half maximum in rad/s. The empty
//! cavity width follows from setting the Airy transmission to half its peak,
//! `γ = (4c/L)·asin[(1 − R)/(2√R)]`; residual loss widens it by
//! `β = asin[(1 − Rρ)/(2√(Rρ))] / asin[(1 − R)/(2√R)]`.
//!
//! With a dispersive medium the half-maximum condition on the dephasing gives
//!
//! ```text
//! γ′/γ = β / [1 + {(n_g − 1) + n3·ω0·γ′²}·ℓ/L]
//! ```
//!
//! solved here as the positive root of
//! `(n3·ω0·ℓ/L)·γ′³ + [1 + (n_g − 1)·ℓ/L]·γ′ − βγ = 0`.

use serde::Serialize;
use std::f64::consts::PI;

use crate::cavity::{CavityModel, TransmissionSpectrum};
use crate::error::{Error, Result};
use crate::medium::n3_doublet_approx;
use crate::roots::{bisect, Tolerance};
use crate::units::C;

/// `F = π√R/(1 − R)`
pub fn finesse_from_reflectivity(reflectivity: f64) -> f64 {
    PI * reflectivity.sqrt() / (1.0 - reflectivity)
}

/// Inverse of [`finesse_from_reflectivity`]: with `s = √R`,
/// `F·s² + π·s − F = 0`.
pub fn reflectivity_from_finesse(finesse: f64) -> f64 {
    let s = (-PI + (PI * PI + 4.0 * finesse * finesse).sqrt()) / (2.0 * finesse);
    s * s
}

/// Empty-cavity FWHM `(4c/L)·asin[(1 − R)/(2√R)]`, rad/s.
///
/// Defined for `3 − 2√2 < R < 1`, where the asin argument stays below 1.
pub fn empty_linewidth(reflectivity: f64, length: f64) -> f64 {
    4.0 * C / length * ((1.0 - reflectivity) / (2.0 * reflectivity.sqrt())).asin()
}

/// The high-finesse form `2π·FSR/F`, rad/s.
pub fn finesse_linewidth(reflectivity: f64, length: f64) -> f64 {
    2.0 * PI * (C / length) / finesse_from_reflectivity(reflectivity)
}

/// FWHM with the round-trip amplitude `R` replaced by `Rρ`.
pub fn lossy_linewidth(reflectivity: f64, rho: f64, length: f64) -> f64 {
    empty_linewidth(reflectivity * rho, length)
}

/// Loss broadening factor β (1 when ρ = 1, growing as ρ falls).
pub fn loss_beta(reflectivity: f64, rho: f64) -> f64 {
    let rr = reflectivity * rho;
    ((1.0 - rr) / (2.0 * rr.sqrt())).asin()
        / ((1.0 - reflectivity) / (2.0 * reflectivity.sqrt())).asin()
}

/// Parameters of the white-light linewidth equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WlcLinewidthInputs {
    pub ng: f64,
    /// s³/rad³, non-negative
    pub n3: f64,
    pub omega0: f64,
    /// ℓ, m
    pub medium_length: f64,
    /// L, m
    pub cavity_length: f64,
    pub beta: f64,
    /// γ, rad/s
    pub gamma_empty: f64,
}

impl WlcLinewidthInputs {
    fn fill(&self) -> f64 {
        self.medium_length / self.cavity_length
    }

    /// `1 + (n_g − 1)·ℓ/L`; zero at the white-light condition.
    pub fn linear_coefficient(&self) -> f64 {
        1.0 + (self.ng - 1.0) * self.fill()
    }

    pub fn cubic_coefficient(&self) -> f64 {
        self.n3 * self.omega0 * self.fill()
    }

    /// Relative residual of the ratio form of the linewidth equation at
    /// `gamma_prime`.
    pub fn residual(&self, gamma_prime: f64) -> f64 {
        let denom =
            1.0 + ((self.ng - 1.0) + self.n3 * self.omega0 * gamma_prime * gamma_prime) * self.fill();
        (gamma_prime / self.gamma_empty * denom - self.beta).abs() / self.beta
    }
}

/// Positive root γ′ of the white-light linewidth equation.
pub fn predict_wlc_linewidth(inputs: &WlcLinewidthInputs) -> Result<f64> {
    if inputs.n3.is_nan() || inputs.n3 < 0.0 {
        return Err(Error::InvalidInput(format!(
            "n3 must be non-negative for a gain doublet, got {}",
            inputs.n3
        )));
    }
    if !(inputs.gamma_empty > 0.0 && inputs.beta > 0.0) {
        return Err(Error::InvalidInput("gamma_empty and beta must be positive".into()));
    }
    let target = inputs.beta * inputs.gamma_empty;
    let lin = inputs.linear_coefficient();
    let cub = inputs.cubic_coefficient();

    if cub == 0.0 {
        if lin > 0.0 {
            return Ok(target / lin);
        }
        return Err(Error::NoPositiveRoot { linear: lin });
    }

    // f(0) = −βγ < 0 and f is eventually increasing, so [0, hi] brackets the
    // single positive root once f(hi) > 0.
    let f = |g: f64| cub * g * g * g + lin * g - target;
    let ideal = (target / cub).cbrt();
    let mut hi = 10.0 * target.max(ideal);
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(f, 0.0, hi, Tolerance::relative(1e-12))?.x)
}

/// White-light linewidth with `n3 = −2n1/Γ²` substituted, `(βγΓ²/2)^{1/3}`.
pub fn ideal_wlc_linewidth(beta: f64, gamma_empty: f64, gamma_sep: f64) -> f64 {
    (beta * gamma_empty * gamma_sep * gamma_sep / 2.0).cbrt()
}

/// `1 − lossy/lossless`
pub fn buildup_reduction(lossless_peak: f64, lossy_peak: f64) -> f64 {
    1.0 - lossy_peak / lossless_peak
}

/// Distance between the outermost half-maximum crossings of a spectrum.
///
/// The maximum is refined between its neighbouring samples, then each crossing
/// is bisected on the cavity model to 1e-3 of the grid step. Flat-topped and
/// double-humped profiles are measured edge to edge.
pub fn measure_fwhm(spec: &TransmissionSpectrum) -> Result<f64> {
    let n = spec.len();
    if n < 3 {
        return Err(Error::InvalidInput("spectrum needs at least 3 samples".into()));
    }
    let t = &spec.transmission;
    let (i_max, &sampled_max) = t
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if spec.oscillating[i_max] {
        return Err(Error::ThresholdInBand);
    }
    if i_max == 0 || i_max == n - 1 {
        return Err(Error::PeakAtEdge);
    }

    let peak = refine_peak(spec, i_max).max(sampled_max);
    let half = 0.5 * peak;
    if t.iter().all(|&v| v >= half) {
        return Err(Error::NoHalfMaxCrossing);
    }
    let left = t.iter().position(|&v| v >= half).expect("peak is above half");
    let right = t.iter().rposition(|&v| v >= half).expect("peak is above half");
    if left == 0 || right == n - 1 {
        return Err(Error::PeakAtEdge);
    }
    if spec.oscillating[left..=right].iter().any(|&f| f) {
        return Err(Error::ThresholdInBand);
    }

    let tol = Tolerance::absolute(1e-3 * spec.grid_step());
    let g = |d: f64| spec.transmission_at_detuning(d) - half;
    let lo = bisect(g, spec.detunings[left - 1], spec.detunings[left], tol)?.x;
    let hi = bisect(g, spec.detunings[right], spec.detunings[right + 1], tol)?.x;
    Ok(hi - lo)
}

// Golden-section search for the maximum between the neighbours of `i`.
fn refine_peak(spec: &TransmissionSpectrum, i: usize) -> f64 {
    let f = |d: f64| spec.transmission_at_detuning(d);
    let (mut a, mut b) = (spec.detunings[i - 1], spec.detunings[i + 1]);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let stop = 1e-6 * spec.grid_step();
    while b - a > stop {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Linewidth figures for one cavity configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinewidthReport {
    pub gamma_empty: f64,
    pub beta: f64,
    pub gamma_lossy: f64,
    pub gamma_wlc_predicted: Option<f64>,
    pub gamma_wlc_ideal: Option<f64>,
    pub gamma_measured: Option<f64>,
    pub buildup_peak: f64,
    /// Relative to the empty, loss-free peak build-up; negative when net gain
    /// lifts the peak above it.
    pub buildup_reduction: f64,
}

impl LinewidthReport {
    /// Closed-form figures for `cavity`, plus the measured FWHM and peak
    /// build-up of `spectrum` when one is given.
    ///
    /// The prediction uses `n3 = −2n1/Γ²`, which is what the white-light
    /// formula is built on; at the white-light condition it equals the ideal
    /// closed form.
    pub fn for_cavity(cavity: &CavityModel, spectrum: Option<&TransmissionSpectrum>) -> Result<Self> {
        let r = cavity.reflectivity();
        let length = cavity.length();
        let rho = cavity.residual_loss_factor();
        let gamma_empty = empty_linewidth(r, length);
        let beta = loss_beta(r, rho);

        let (predicted, ideal) = match cavity.medium() {
            Some(m) => {
                let k = m.dispersion_coefficients();
                let inputs = WlcLinewidthInputs {
                    ng: k.ng,
                    n3: n3_doublet_approx(k.n1, m.gamma_sep()),
                    omega0: m.omega0(),
                    medium_length: m.length(),
                    cavity_length: length,
                    beta,
                    gamma_empty,
                };
                (
                    predict_wlc_linewidth(&inputs).ok(),
                    Some(ideal_wlc_linewidth(beta, gamma_empty, m.gamma_sep())),
                )
            }
            None => (None, None),
        };

        let t = cavity.transmissivity();
        let lossless_peak = t / ((1.0 - r) * (1.0 - r));
        let buildup_peak = match spectrum {
            Some(s) => s.peak_buildup(),
            None => t / ((1.0 - r * rho) * (1.0 - r * rho)),
        };
        let gamma_measured = match spectrum {
            Some(s) => Some(measure_fwhm(s)?),
            None => None,
        };

        Ok(Self {
            gamma_empty,
            beta,
            gamma_lossy: beta * gamma_empty,
            gamma_wlc_predicted: predicted,
            gamma_wlc_ideal: ideal,
            gamma_measured,
            buildup_peak,
            buildup_reduction: buildup_reduction(lossless_peak, buildup_peak),
        })
    }
}
