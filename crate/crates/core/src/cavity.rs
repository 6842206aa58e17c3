//! Ring cavity with an optional gain-doublet medium.
//!
//! Transmission follows the lossy-ring form
//!
//! ```text
//! I_o(ω) = T² / |1 − a(ω)·e^{iφ(ω)}|²,   buildup = T / |1 − a(ω)·e^{iφ(ω)}|²
//! φ(ω)   = (ω/c)·[(L − ℓ) + ℓ·Re ñ(ω)]
//! a(ω)   = R·e^{−αℓ}                         (GainCoupling::DispersionOnly)
//! a(ω)   = R·e^{−αℓ}·e^{−(ω/c)·Im ñ(ω)·ℓ}    (GainCoupling::Full)
//! ```
//!
//! With no medium this is `T²/(1 + R² − 2R cos φ)`; with a zero-amplitude
//! medium and α > 0 it is the same with `R → Rρ`, `ρ = e^{−αℓ}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::medium::GainDoublet;
use crate::units::{frac_of_quotient, two_prod, C};

/// Phase residual accepted as "on resonance", unless one ulp of the cavity
/// length already moves the phase by more (see [`CavityModel::resonance_tolerance`]).
pub const RESONANCE_TOLERANCE_RAD: f64 = 1e-9;

/// How the medium's gain lines act on the circulating field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainCoupling {
    /// Only `Re ñ` enters (through the round-trip phase). The medium is taken
    /// as transparent at the probe: line gain balanced by background loss.
    #[default]
    DispersionOnly,
    /// `Im ñ` also scales the round-trip amplitude. Strong doublets can push
    /// `|a| ≥ 1`, where the steady-state model no longer applies.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityModel {
    length: f64,
    reflectivity: f64,
    transmissivity: f64,
    medium: Option<GainDoublet>,
    coupling: GainCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Response {
    pub transmission: f64,
    pub buildup: f64,
}

/// Everything evaluated at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub transmission: f64,
    pub buildup: f64,
    /// Round-trip phase relative to the resonance at `omega0`.
    pub phase: f64,
    /// `ñ − 1`
    pub excess_index: Complex64,
    /// Round-trip field amplitude `a`.
    pub amplitude: f64,
    pub oscillating: bool,
}

/// Round-trip dephasing from the full index and from its cubic Taylor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dephasing {
    pub full: f64,
    pub truncated: f64,
}

impl CavityModel {
    pub fn new(length: f64, reflectivity: f64, transmissivity: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!("cavity length must be positive, got {length}")));
        }
        if !(reflectivity > 0.0 && reflectivity < 1.0) {
            return Err(Error::InvalidInput(format!(
                "reflectivity must lie in (0, 1), got {reflectivity}"
            )));
        }
        if !(transmissivity.is_finite() && transmissivity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "transmissivity must be positive, got {transmissivity}"
            )));
        }
        Ok(Self {
            length,
            reflectivity,
            transmissivity,
            medium: None,
            coupling: GainCoupling::default(),
        })
    }

    /// Couplers with no absorption or scatter: `T = 1 − R`.
    pub fn lossless(length: f64, reflectivity: f64) -> Result<Self> {
        Self::new(length, reflectivity, 1.0 - reflectivity)
    }

    pub fn with_medium(mut self, medium: GainDoublet) -> Result<Self> {
        if medium.length() > self.length {
            return Err(Error::InvalidInput(format!(
                "medium length {} m exceeds cavity length {} m",
                medium.length(),
                self.length
            )));
        }
        self.medium = Some(medium);
        Ok(self)
    }

    pub fn without_medium(mut self) -> Self {
        self.medium = None;
        self
    }

    pub fn with_coupling(mut self, coupling: GainCoupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_length(self, length: f64) -> Result<Self> {
        let out = Self::new(length, self.reflectivity, self.transmissivity)?.with_coupling(self.coupling);
        match self.medium {
            Some(m) => out.with_medium(m),
            None => Ok(out),
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn medium(&self) -> Option<&GainDoublet> {
        self.medium.as_ref()
    }

    pub fn coupling(&self) -> GainCoupling {
        self.coupling
    }

    /// True when the couplers were built with `T = 1 − R`.
    pub fn has_lossless_couplers(&self) -> bool {
        self.transmissivity == 1.0 - self.reflectivity
    }

    /// Free spectral range as an angular frequency, `2πc/L`.
    pub fn free_spectral_range(&self) -> f64 {
        TAU * C / self.length
    }

    /// Residual loss factor ρ (1 without a medium).
    pub fn residual_loss_factor(&self) -> f64 {
        self.medium.map_or(1.0, |m| m.residual_loss_factor())
    }

    /// Peak transmission of the same couplers with no medium, `T²/(1 − R)²`.
    pub fn empty_peak_transmission(&self) -> f64 {
        let t = self.transmissivity;
        let r = self.reflectivity;
        t * t / ((1.0 - r) * (1.0 - r))
    }

    // ℓ·Re(ñ − 1) at absolute frequency `omega`, or 0 with no medium.
    fn excess_path(&self, omega: f64) -> f64 {
        match &self.medium {
            Some(m) => m.length() * m.excess_index_at_detuning(omega - m.omega0()).re,
            None => 0.0,
        }
    }

    /// Absolute round-trip phase `(ω/c)·[(L − ℓ) + ℓ·Re ñ(ω)]`.
    pub fn round_trip_phase(&self, omega: f64) -> f64 {
        omega / C * (self.length + self.excess_path(omega))
    }

    /// Round-trip phase minus the nearest multiple of 2π, in (−π, π].
    ///
    /// The phase itself is ~10⁷ rad at optical frequencies, so the dominant
    /// `ωL/(2πc)` cycle count is divided in double-double arithmetic.
    pub fn resonance_residual(&self, omega: f64) -> f64 {
        let cycles = frac_of_quotient(two_prod(omega, self.length), two_prod(TAU, C))
            + omega * self.excess_path(omega) / (TAU * C);
        let mut wrapped = cycles - cycles.round();
        if wrapped <= -0.5 {
            wrapped += 1.0;
        }
        wrapped * TAU
    }

    /// `max(1e-9 rad, phase change from one ulp of L)`: below that the length
    /// cannot be set any closer to resonance in f64.
    pub fn resonance_tolerance(&self, omega: f64) -> f64 {
        let ulp = self.length.next_up() - self.length;
        RESONANCE_TOLERANCE_RAD.max(omega * ulp / C)
    }

    pub fn check_resonance(&self, omega0: f64) -> Result<()> {
        let residual = self.resonance_residual(omega0);
        let tolerance = self.resonance_tolerance(omega0);
        if residual.abs() > tolerance {
            return Err(Error::NotOnResonance { residual, tolerance });
        }
        Ok(())
    }

    /// Shortest length change that puts `omega_target` on a resonance. The
    /// change stays below half a wavelength.
    pub fn snap_to_resonance(&self, omega_target: f64) -> Result<Self> {
        if omega_target.is_nan() || omega_target <= 0.0 {
            return Err(Error::InvalidInput(format!("target frequency must be positive, got {omega_target}")));
        }
        let eps = self.resonance_residual(omega_target);
        if eps == 0.0 {
            return Ok(*self);
        }
        let min_length = self.medium.map_or(0.0, |m| m.length());
        let mut length = self.length - eps * C / omega_target;
        if length < min_length {
            // Medium fills the cavity: lengthen to the next resonance instead.
            length = self.length - (eps - eps.signum() * TAU) * C / omega_target;
        }

        // The closed-form length is only good to an ulp or so; keep whichever
        // neighbouring representable length lands closest.
        let mut best = self.with_length(length)?;
        let mut best_residual = best.resonance_residual(omega_target).abs();
        for dir in [1.0f64, -1.0] {
            let mut candidate = length;
            for _ in 0..4 {
                candidate = if dir > 0.0 { candidate.next_up() } else { candidate.next_down() };
                if candidate < min_length {
                    break;
                }
                let cav = self.with_length(candidate)?;
                let r = cav.resonance_residual(omega_target).abs();
                if r < best_residual {
                    best = cav;
                    best_residual = r;
                }
            }
        }
        Ok(best)
    }

    // Medium detuning for cavity detuning `delta` about `omega0`.
    fn medium_detuning(m: &GainDoublet, omega0: f64, delta: f64) -> f64 {
        (omega0 - m.omega0()) + delta
    }

    /// `φ(ω0 + δ) − φ(ω0)`, assembled so the large `ω0·L/c` term cancels
    /// analytically.
    fn phase_offset(&self, omega0: f64, delta: f64) -> f64 {
        let bare = delta * self.length / C;
        match &self.medium {
            None => bare,
            Some(m) => {
                let x0 = Self::medium_detuning(m, omega0, 0.0);
                let x = Self::medium_detuning(m, omega0, delta);
                let r = m.excess_index_at_detuning(x).re;
                let r0 = m.excess_index_at_detuning(x0).re;
                bare + m.length() / C * ((omega0 + delta) * r - omega0 * r0)
            }
        }
    }

    fn round_trip_amplitude(&self, omega: f64, medium_delta: Option<f64>) -> f64 {
        let base = self.reflectivity;
        match (&self.medium, medium_delta) {
            (Some(m), Some(x)) => {
                let rho = m.residual_loss_factor();
                match self.coupling {
                    GainCoupling::DispersionOnly => base * rho,
                    GainCoupling::Full => {
                        let im = m.excess_index_at_detuning(x).im;
                        base * rho * (-(omega / C) * im * m.length()).exp()
                    }
                }
            }
            _ => base,
        }
    }

    fn response(&self, amplitude: f64, phase: f64) -> Response {
        let t = self.transmissivity;
        // |1 − a·e^{iφ}|² without the cancellation of 1 + a² − 2a·cos φ near resonance
        let gap = 1.0 - amplitude;
        let s = (0.5 * phase).sin();
        let denom = gap * gap + 4.0 * amplitude * s * s;
        Response { transmission: t * t / denom, buildup: t / denom }
    }

    /// Dephasing `D_φ = φ(ω0 + δ) − φ(ω0)` from the full index, with the cubic
    /// Taylor model `(L/c)·{δ + (ℓ/L)[n1·ω0·δ + n3·ω0·δ³]}` alongside.
    pub fn dephasing(&self, delta: f64, omega0: f64) -> Result<Dephasing> {
        self.check_resonance(omega0)?;
        if delta.abs() >= self.free_spectral_range() {
            return Err(Error::InvalidInput(format!(
                "|delta| = {} rad/s must be below the free spectral range {} rad/s",
                delta.abs(),
                self.free_spectral_range()
            )));
        }
        let full = self.phase_offset(omega0, delta);
        let truncated = match &self.medium {
            None => delta * self.length / C,
            Some(m) => {
                let k = m.dispersion_coefficients();
                let cubic = k.n1 * omega0 * delta + k.n3 * omega0 * delta * delta * delta;
                self.length / C * (delta + m.length() / self.length * cubic)
            }
        };
        Ok(Dephasing { full, truncated })
    }

    /// Everything at cavity detuning `delta` about `omega0`, treating `omega0`
    /// as an exact resonance. Callers are expected to have checked that.
    pub fn sample_at_detuning(&self, omega0: f64, delta: f64) -> Sample {
        let medium_delta = self.medium.map(|m| Self::medium_detuning(&m, omega0, delta));
        let excess_index = match (&self.medium, medium_delta) {
            (Some(m), Some(x)) => m.excess_index_at_detuning(x),
            _ => Complex64::new(0.0, 0.0),
        };
        let phase = self.phase_offset(omega0, delta);
        let amplitude = self.round_trip_amplitude(omega0 + delta, medium_delta);
        let Response { transmission, buildup } = self.response(amplitude, phase);
        Sample {
            transmission,
            buildup,
            phase,
            excess_index,
            amplitude,
            oscillating: amplitude.abs() >= 1.0,
        }
    }

    /// Transmission and build-up at an absolute frequency.
    pub fn transmission_at(&self, omega: f64) -> Result<Response> {
        let medium_delta = self.medium.map(|m| omega - m.omega0());
        let amplitude = self.round_trip_amplitude(omega, medium_delta);
        if amplitude.abs() >= 1.0 {
            return Err(Error::OscillationThreshold { amplitude });
        }
        Ok(self.response(amplitude, self.resonance_residual(omega)))
    }

    /// Uniform spectrum over `[−span/2, span/2]` about the resonance `omega0`.
    /// Samples at or above the oscillation threshold are flagged, not dropped.
    pub fn spectrum(&self, omega0: f64, span: f64, points: usize) -> Result<TransmissionSpectrum> {
        if points < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 points, got {points}")));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::InvalidInput(format!("span must be positive, got {span}")));
        }
        self.check_resonance(omega0)?;

        // Half-integer offsets keep the grid exactly symmetric about zero.
        let step = span / (points - 1) as f64;
        let centre = 0.5 * (points - 1) as f64;
        let detunings: Vec<f64> = (0..points).map(|i| (i as f64 - centre) * step).collect();
        let samples: Vec<Sample> = detunings
            .par_iter()
            .map(|&d| self.sample_at_detuning(omega0, d))
            .collect();

        Ok(TransmissionSpectrum::from_samples(*self, omega0, detunings, &samples))
    }
}

/// Sampled cavity response about a resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSpectrum {
    cavity: CavityModel,
    omega0: f64,
    scale: f64,
    /// rad/s, strictly increasing
    pub detunings: Vec<f64>,
    pub transmission: Vec<f64>,
    pub buildup: Vec<f64>,
    /// Round-trip phase relative to resonance, rad.
    pub phase: Vec<f64>,
    pub index_re: Vec<f64>,
    pub index_im: Vec<f64>,
    pub oscillating: Vec<bool>,
}

impl TransmissionSpectrum {
    fn from_samples(cavity: CavityModel, omega0: f64, detunings: Vec<f64>, samples: &[Sample]) -> Self {
        Self {
            cavity,
            omega0,
            scale: 1.0,
            detunings,
            transmission: samples.iter().map(|s| s.transmission).collect(),
            buildup: samples.iter().map(|s| s.buildup).collect(),
            phase: samples.iter().map(|s| s.phase).collect(),
            index_re: samples.iter().map(|s| s.excess_index.re).collect(),
            index_im: samples.iter().map(|s| s.excess_index.im).collect(),
            oscillating: samples.iter().map(|s| s.oscillating).collect(),
        }
    }

    pub fn cavity(&self) -> &CavityModel {
        &self.cavity
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    pub fn grid_step(&self) -> f64 {
        self.detunings[1] - self.detunings[0]
    }

    /// Same spectrum with transmission and build-up multiplied by `factor`.
    /// Re-evaluation through [`Self::transmission_at_detuning`] applies it too.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out.transmission.iter_mut().for_each(|t| *t *= factor);
        out.buildup.iter_mut().for_each(|b| *b *= factor);
        out
    }

    /// Model transmission at an arbitrary detuning (off-grid), with the
    /// spectrum's scale applied.
    pub fn transmission_at_detuning(&self, delta: f64) -> f64 {
        self.scale * self.cavity.sample_at_detuning(self.omega0, delta).transmission
    }

    pub fn oscillating_at_detuning(&self, delta: f64) -> bool {
        self.cavity.sample_at_detuning(self.omega0, delta).oscillating
    }

    pub fn peak_transmission(&self) -> f64 {
        self.transmission.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn peak_buildup(&self) -> f64 {
        self.buildup.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn any_oscillating(&self) -> bool {
        self.oscillating.iter().any(|&f| f)
    }

    /// `(max − min)/max` of transmission over samples with `|δ| ≤ half_band`.
    pub fn ripple_fraction(&self, half_band: f64) -> Option<f64> {
        let inside: Vec<f64> = self
            .detunings
            .iter()
            .zip(&self.transmission)
            .filter(|(d, _)| d.abs() <= half_band)
            .map(|(_, &t)| t)
            .collect();
        if inside.is_empty() {
            return None;
        }
        let max = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = inside.iter().copied().fold(f64::INFINITY, f64::min);
        Some((max - min) / max)
    }
}

/// Half a free spectral range as a detuning, where the empty cavity is
/// anti-resonant.
pub fn anti_resonance_detuning(cavity: &CavityModel) -> f64 {
    PI * C / cavity.length()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linewidth::reflectivity_from_finesse;
    use crate::units::{mhz_to_rad_s, omega_from_wavelength};
    use proptest::prelude::*;

    fn omega_780() -> f64 {
        omega_from_wavelength(780e-9)
    }

    fn f100_cavity() -> CavityModel {
        CavityModel::lossless(1.0, reflectivity_from_finesse(100.0)).unwrap()
    }

    fn tuned_doublet(ng: f64, alpha: f64) -> GainDoublet {
        let d = GainDoublet::new(omega_780(), mhz_to_rad_s(8.0), mhz_to_rad_s(1.0), 1.0, alpha, 0.1)
            .unwrap();
        let m = (ng - 1.0) / (d.omega0() * d.n1_per_amplitude());
        d.with_amplitude(m).unwrap()
    }

    fn resonant(cavity: CavityModel) -> CavityModel {
        cavity.snap_to_resonance(omega_780()).unwrap()
    }

    #[test]
    fn empty_phase_at_resonance_is_multiple_of_two_pi() {
        let cav = f100_cavity();
        for n in [1.0, 7.0, 1_282_051.0] {
            let omega = TAU * C / cav.length() * n;
            let phi = cav.round_trip_phase(omega);
            assert!((phi - TAU * n).abs() <= 1e-12 * TAU * n);
            assert!(cav.resonance_residual(omega).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_amplitude_medium_leaves_phase_unchanged() {
        let cav = f100_cavity();
        let with = cav.with_medium(tuned_doublet(1.0, 0.0)).unwrap();
        for f in [-30.0, -1.0, 0.0, 0.5, 12.0] {
            let omega = omega_780() + mhz_to_rad_s(f);
            assert_eq!(with.round_trip_phase(omega), cav.round_trip_phase(omega));
        }
    }

    #[test]
    fn white_light_phase_is_bounded_by_cubic_term() {
        let cav = resonant(f100_cavity().with_medium(tuned_doublet(-9.0, 0.0)).unwrap());
        let m = *cav.medium().unwrap();
        let k = m.dispersion_coefficients();
        let w0 = omega_780();
        let quarter = 0.25 * m.gamma_sep();
        for i in 1..=20 {
            let d = quarter * i as f64 / 20.0;
            let full = cav.dephasing(d, w0).unwrap().full.abs();
            let cubic = (k.n3 * w0 * d * d * d * m.length() / C).abs();
            // next odd term is O(δ⁵); allow 5% of the cubic for it at Γ/4
            assert!(full <= cubic * 1.05, "δ = {d:e}: |D| {full:e} vs cubic {cubic:e}");
        }
    }

    #[test]
    fn dephasing_basics() {
        let cav = resonant(f100_cavity());
        let w0 = omega_780();
        assert_eq!(cav.dephasing(0.0, w0).unwrap().full, 0.0);
        for d in [-1e7, 3.3e5, 6.0e6] {
            let dp = cav.dephasing(d, w0).unwrap();
            assert_eq!(dp.full, d * cav.length() / C);
            assert_eq!(dp.truncated, dp.full);
        }
    }

    #[test]
    fn dephasing_full_vs_truncated_near_centre() {
        let cav = resonant(f100_cavity().with_medium(tuned_doublet(-9.0, 0.0)).unwrap());
        let dp = cav.dephasing(mhz_to_rad_s(1.0), omega_780()).unwrap();
        let rel = (dp.full - dp.truncated).abs() / dp.truncated.abs();
        assert!(rel < 0.05, "full {} truncated {} rel {rel}", dp.full, dp.truncated);
    }

    #[test]
    fn dephasing_requires_resonance() {
        let cav = resonant(f100_cavity());
        let off = omega_780() + 0.25 * cav.free_spectral_range();
        assert!(matches!(cav.dephasing(1.0, off), Err(Error::NotOnResonance { .. })));
        assert!(cav.dephasing(cav.free_spectral_range(), omega_780()).is_err());
        assert!(matches!(cav.spectrum(off, 1e7, 11), Err(Error::NotOnResonance { .. })));
    }

    #[test]
    fn impedance_matched_peak_is_unity() {
        let cav = resonant(f100_cavity());
        let r = cav.transmission_at(omega_780()).unwrap();
        assert!((r.transmission - 1.0).abs() < 1e-12);
        let s = cav.sample_at_detuning(omega_780(), 0.0);
        assert_eq!(s.transmission, 1.0);
    }

    #[test]
    fn anti_resonance_value() {
        let cav = resonant(f100_cavity());
        let (t, r) = (cav.transmissivity(), cav.reflectivity());
        let expected = t * t / ((1.0 + r) * (1.0 + r));
        let s = cav.sample_at_detuning(omega_780(), anti_resonance_detuning(&cav));
        assert!((s.transmission - expected).abs() <= 1e-12 * expected);
        let abs = cav.transmission_at(omega_780() + anti_resonance_detuning(&cav)).unwrap();
        assert!((abs.transmission - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn residual_loss_lowers_peak() {
        let base = f100_cavity();
        let r = base.reflectivity();
        let rho = (-0.005f64).exp();
        // α = 0.05 /m over ℓ = 0.1 m, no gain.
        let lossy = resonant(base.with_medium(tuned_doublet(1.0, 0.05)).unwrap());
        let peak = lossy.sample_at_detuning(omega_780(), 0.0).transmission;
        let ratio = peak / base.empty_peak_transmission();
        let expected = (1.0 - r).powi(2) / (1.0 - r * rho).powi(2);
        assert!((ratio - expected).abs() < 1e-12);
        assert!((ratio - 0.748).abs() < 0.002, "ratio {ratio}");
    }

    #[test]
    fn reductions_to_lossy_ring_formulas() {
        let base = resonant(f100_cavity());
        let (r, t) = (base.reflectivity(), base.transmissivity());
        let w0 = omega_780();
        for coupling in [GainCoupling::DispersionOnly, GainCoupling::Full] {
            let lossy = base
                .with_medium(tuned_doublet(1.0, 0.05))
                .unwrap()
                .with_coupling(coupling);
            let rho = lossy.residual_loss_factor();
            for i in -50..=50 {
                let d = mhz_to_rad_s(0.37 * i as f64);
                let phi = d * base.length() / C;
                let a3 = t * t / (1.0 + r * r - 2.0 * r * phi.cos());
                let a4 = t * t / (1.0 + (r * rho) * (r * rho) - 2.0 * (r * rho) * phi.cos());
                let (b3, b4) = (
                    base.sample_at_detuning(w0, d).transmission,
                    lossy.sample_at_detuning(w0, d).transmission,
                );
                assert!((b3 - a3).abs() <= 1e-12 * a3, "{b3} vs {a3}");
                assert!((b4 - a4).abs() <= 1e-12 * a4, "{b4} vs {a4}");
            }
        }
    }

    #[test]
    fn full_coupling_reports_threshold() {
        let cav = resonant(
            f100_cavity()
                .with_medium(tuned_doublet(-9.0, 0.05))
                .unwrap()
                .with_coupling(GainCoupling::Full),
        );
        let line = omega_780() + mhz_to_rad_s(4.0);
        assert!(matches!(cav.transmission_at(line), Err(Error::OscillationThreshold { .. })));
        let spec = cav.spectrum(omega_780(), mhz_to_rad_s(20.0), 201).unwrap();
        assert!(spec.any_oscillating());
        assert!(!spec.oscillating[100]);
        // Dispersion-only coupling never reaches threshold with passive couplers.
        let passive = cav.with_coupling(GainCoupling::DispersionOnly);
        assert!(!passive.spectrum(omega_780(), mhz_to_rad_s(20.0), 201).unwrap().any_oscillating());
    }

    #[test]
    fn empty_spectrum_is_even_and_matches_medium_free_limit() {
        let cav = resonant(f100_cavity());
        let span = 10.0 * mhz_to_rad_s(3.0);
        let spec = cav.spectrum(omega_780(), span, 801).unwrap();
        let n = spec.len();
        for i in 0..n {
            assert_eq!(spec.detunings[i], -spec.detunings[n - 1 - i]);
            let (a, b) = (spec.transmission[i], spec.transmission[n - 1 - i]);
            assert!((a - b).abs() <= 1e-12 * a.max(b));
        }
        let zero = resonant(cav.with_medium(tuned_doublet(1.0, 0.0)).unwrap());
        let spec0 = zero.spectrum(omega_780(), span, 801).unwrap();
        for (a, b) in spec.transmission.iter().zip(&spec0.transmission) {
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn empty_peaks_repeat_every_fsr() {
        let cav = resonant(f100_cavity());
        let fsr = cav.free_spectral_range();
        let peak = cav.sample_at_detuning(omega_780(), 0.0).transmission;
        for k in -3i32..=3 {
            let t = cav.sample_at_detuning(omega_780(), k as f64 * fsr).transmission;
            assert!((t - peak).abs() <= 1e-12 * peak, "k = {k}: {t}");
            let shoulder = cav.sample_at_detuning(omega_780(), k as f64 * fsr + 0.01 * fsr).transmission;
            assert!(shoulder < t);
        }
    }

    #[test]
    fn snapping_moves_length_less_than_half_wavelength() {
        let cav = f100_cavity();
        let w0 = omega_780();
        let snapped = cav.snap_to_resonance(w0).unwrap();
        assert!((snapped.length() - 1.0).abs() <= 390e-9);
        assert!(snapped.resonance_residual(w0).abs() < 1e-9);
        let again = snapped.snap_to_resonance(w0).unwrap();
        assert!((again.length() - snapped.length()).abs() <= 2.0 * f64::EPSILON);

        // Re ñ(ω0) = 1 for the symmetric doublet, so adding it keeps the resonance.
        let with = snapped.with_medium(tuned_doublet(-9.0, 0.05)).unwrap();
        assert!(with.check_resonance(w0).is_ok());
    }

    #[test]
    fn medium_longer_than_cavity_rejected() {
        let cav = CavityModel::lossless(0.05, 0.9).unwrap();
        assert!(cav.with_medium(tuned_doublet(-9.0, 0.0)).is_err());
        assert!(CavityModel::new(1.0, 1.0, 0.1).is_err());
        assert!(CavityModel::new(1.0, 0.9, 0.0).is_err());
        assert!(CavityModel::lossless(1.0, 0.9).unwrap().has_lossless_couplers());
        assert!(!CavityModel::new(1.0, 0.9, 0.05).unwrap().has_lossless_couplers());
    }

    proptest! {
        #[test]
        fn buildup_over_transmission_is_inverse_t(
            f in 80.0f64..400.0,
            t_frac in 0.2f64..1.0,
            ng in -15.0f64..1.0,
            d_mhz in -20.0f64..20.0,
        ) {
            let r = reflectivity_from_finesse(f);
            let cav = CavityModel::new(1.0, r, t_frac * (1.0 - r)).unwrap();
            let cav = resonant(cav.with_medium(tuned_doublet(ng, 0.05)).unwrap());
            let s = cav.sample_at_detuning(omega_780(), mhz_to_rad_s(d_mhz));
            let ratio = s.buildup / s.transmission;
            prop_assert!((ratio * cav.transmissivity() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn symmetric_doublet_spectrum_is_even(
            ng in -15.0f64..0.9,
            d_mhz in 0.0f64..30.0,
            full in proptest::bool::ANY,
        ) {
            let coupling = if full { GainCoupling::Full } else { GainCoupling::DispersionOnly };
            let cav = resonant(f100_cavity().with_medium(tuned_doublet(ng, 0.05)).unwrap())
                .with_coupling(coupling);
            let d = mhz_to_rad_s(d_mhz);
            let p = cav.sample_at_detuning(omega_780(), d);
            let m = cav.sample_at_detuning(omega_780(), -d);
            // Only the (ω0 ± δ) prefactor of the medium phase breaks evenness,
            // a relative effect of order δ/ω0 ~ 1e-7 amplified by the finesse.
            prop_assert!((p.transmission - m.transmission).abs() <= 1e-6 * p.transmission.max(m.transmission));
            prop_assert!((p.buildup - m.buildup).abs() <= 1e-6 * p.buildup.max(m.buildup));
        }

        #[test]
        fn peak_bounded_without_net_gain(
            ng in -15.0f64..1.0,
            alpha in 0.0f64..2.0,
            full in proptest::bool::ANY,
        ) {
            let coupling = if full { GainCoupling::Full } else { GainCoupling::DispersionOnly };
            let cav = resonant(f100_cavity().with_medium(tuned_doublet(ng, alpha)).unwrap())
                .with_coupling(coupling);
            let spec = cav.spectrum(omega_780(), mhz_to_rad_s(40.0), 401).unwrap();
            let r = cav.reflectivity();
            let net_gain = spec
                .detunings
                .iter()
                .map(|&d| cav.sample_at_detuning(omega_780(), d).amplitude / r)
                .fold(0.0f64, f64::max);
            if net_gain <= 1.0 {
                prop_assert!(spec.peak_transmission() <= cav.empty_peak_transmission() * (1.0 + 1e-12));
            }
        }
    }
}
