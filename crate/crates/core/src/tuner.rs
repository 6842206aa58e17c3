//! Solving doublet parameters for a target group index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::GainDoublet;
use crate::roots::{bisect_log, first_crossing_log};

const K_MIN: f64 = 1e-6;
const K_MAX: f64 = 1e6;
const K_REL_TOL: f64 = 1e-10;

/// First-order index slope `−(1/ω0)(L/ℓ)` that cancels the empty-cavity
/// phase slope.
pub fn required_n1(cavity_length: f64, medium_length: f64, omega0: f64) -> f64 {
    -(cavity_length / medium_length) / omega0
}

/// `1 − L/ℓ`
pub fn white_light_group_index(cavity_length: f64, medium_length: f64) -> f64 {
    1.0 - cavity_length / medium_length
}

/// How the line width follows the gain factor `k` in [`tune_with_scaling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthScaling {
    /// `W = √k·W_ref`: pumping harder also power-broadens the lines.
    #[default]
    SqrtGain,
    /// `W = W_ref`
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneResult {
    /// M, rad/s
    pub amplitude: f64,
    /// W (HWHM), rad/s
    pub width: f64,
    pub achieved_ng: f64,
    /// `M/M_ref` when tuned against a reference amplitude.
    pub gain_factor: Option<f64>,
    pub iterations: usize,
    /// The tuned doublet.
    pub medium: GainDoublet,
}

fn ng_tolerance(target_ng: f64) -> f64 {
    1e-6 * target_ng.abs().max(1.0)
}

/// Amplitude M giving `target_ng` at the template's Γ and W.
///
/// n1 is linear in M, so `M = (n_g − 1)/(ω0·∂n1/∂M)`.
pub fn tune_gain_amplitude(template: &GainDoublet, target_ng: f64) -> Result<TuneResult> {
    if !target_ng.is_finite() {
        return Err(Error::InvalidInput(format!("target_ng must be finite, got {target_ng}")));
    }
    let slope = template.n1_per_amplitude() * template.omega0();
    if target_ng == 1.0 {
        let medium = template.with_amplitude(0.0)?;
        return Ok(result(medium, None, 0));
    }
    if slope == 0.0 || (target_ng < 1.0 && slope > 0.0) {
        return Err(Error::Infeasible(format!(
            "n_g = {target_ng} needs anomalous dispersion, which requires separation > 2·width \
             (separation {:.6e} rad/s, width {:.6e} rad/s)",
            template.gamma_sep(),
            template.width()
        )));
    }
    let amplitude = (target_ng - 1.0) / slope;
    if amplitude < 0.0 {
        return Err(Error::Infeasible(format!(
            "n_g = {target_ng} would need a negative (absorbing) amplitude {amplitude}"
        )));
    }
    let medium = template.with_amplitude(amplitude)?;
    let out = result(medium, None, 0);
    check_achieved(&out, target_ng)?;
    Ok(out)
}

/// Gain factor `k` such that amplitude `k·M_ref` (and width scaled per
/// `scaling` from the template's W) reaches `target_ng`.
///
/// Scans `k ∈ [1e-6, 1e6]` on a log grid and bisects the first crossing in
/// `ln k`.
pub fn tune_with_scaling(
    template: &GainDoublet,
    target_ng: f64,
    reference_amplitude: f64,
    scaling: WidthScaling,
) -> Result<TuneResult> {
    if !(reference_amplitude.is_finite() && reference_amplitude > 0.0) {
        return Err(Error::InvalidInput(format!(
            "reference amplitude must be positive, got {reference_amplitude}"
        )));
    }
    if !target_ng.is_finite() {
        return Err(Error::InvalidInput(format!("target_ng must be finite, got {target_ng}")));
    }
    let w_ref = template.width();
    let at = |k: f64| -> Result<GainDoublet> {
        let width = match scaling {
            WidthScaling::SqrtGain => w_ref * k.sqrt(),
            WidthScaling::None => w_ref,
        };
        template.with_amplitude(k * reference_amplitude)?.with_width(width)
    };

    let unit = at(1.0)?;
    if (unit.group_index() - target_ng).abs() <= ng_tolerance(target_ng) {
        return Ok(result(unit, Some(1.0), 0));
    }

    let mismatch = |k: f64| match at(k) {
        Ok(m) => m.group_index() - target_ng,
        Err(_) => f64::NAN,
    };
    let root = first_crossing_log(mismatch, K_MIN, K_MAX, 20, K_REL_TOL)?.ok_or_else(|| {
        Error::Infeasible(format!(
            "no gain factor in [{K_MIN:e}, {K_MAX:e}] reaches n_g = {target_ng}"
        ))
    })?;
    let out = result(at(root.x)?, Some(root.x), root.iterations);
    check_achieved(&out, target_ng)?;
    Ok(out)
}

/// [`tune_with_scaling`] with `W = √k·W_ref`.
pub fn tune_with_width_scaling(
    template: &GainDoublet,
    target_ng: f64,
    reference_amplitude: f64,
) -> Result<TuneResult> {
    tune_with_scaling(template, target_ng, reference_amplitude, WidthScaling::SqrtGain)
}

/// Separation Γ at which the template's fixed M and W give `target_ng`,
/// searched on the falling-slope side, `Γ > 2√3·W`, up to `gamma_max`.
///
/// Past `Γ = 2√3·W` the group index rises monotonically back towards 1 as the
/// lines move apart.
pub fn separation_for_group_index(template: &GainDoublet, target_ng: f64, gamma_max: f64) -> Result<f64> {
    let gamma_min = 2.0 * 3f64.sqrt() * template.width();
    let mismatch = |g: f64| match template.with_separation(g) {
        Ok(m) => m.group_index() - target_ng,
        Err(_) => f64::NAN,
    };
    let (f_lo, f_hi) = (mismatch(gamma_min), mismatch(gamma_max));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Infeasible(format!(
            "n_g = {target_ng} is not reached for separations in [{gamma_min:.6e}, {gamma_max:.6e}] rad/s"
        )));
    }
    Ok(bisect_log(mismatch, gamma_min, gamma_max, 1e-13)?.x)
}

fn result(medium: GainDoublet, gain_factor: Option<f64>, iterations: usize) -> TuneResult {
    TuneResult {
        amplitude: medium.amplitude(),
        width: medium.width(),
        achieved_ng: medium.group_index(),
        gain_factor,
        iterations,
        medium,
    }
}

fn check_achieved(out: &TuneResult, target_ng: f64) -> Result<()> {
    let err = (out.achieved_ng - target_ng).abs();
    if err > ng_tolerance(target_ng) {
        return Err(Error::Infeasible(format!(
            "tuned n_g = {} misses target {target_ng} by {err:e}",
            out.achieved_ng
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_rad_s, omega_from_wavelength};
    use proptest::prelude::*;

    fn template(sep_mhz: f64) -> GainDoublet {
        GainDoublet::new(
            omega_from_wavelength(780e-9),
            mhz_to_rad_s(sep_mhz),
            mhz_to_rad_s(1.0),
            0.0,
            0.0,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn white_light_slope() {
        let w = omega_from_wavelength(780e-9);
        assert_eq!(white_light_group_index(1.0, 1.0), 0.0);
        assert_eq!(1.0 + required_n1(1.0, 1.0, w) * w, 0.0);
        assert_eq!(white_light_group_index(1.0, 0.1), -9.0);
        let n1 = required_n1(1.0, 0.1, w);
        // independent: λ/(2πc)·10
        let oracle = -10.0 * 780e-9 / (2.0 * std::f64::consts::PI * 299_792_458.0);
        assert!((n1 - oracle).abs() < 1e-12 * oracle.abs());
        assert!((n1 + 4.14e-15).abs() < 0.01e-15);
    }

    #[test]
    fn default_doublet_amplitude() {
        let r = tune_gain_amplitude(&template(8.0), -9.0).unwrap();
        assert!((r.amplitude - 1.57).abs() < 0.01, "M = {}", r.amplitude);
        assert!((r.achieved_ng + 9.0).abs() <= 9e-6);
        // oracle: M = (ng − 1)/(ω0 · 2(W² − a²)/(a² + W²)²) in MHz units
        let (w, a) = (mhz_to_rad_s(1.0), mhz_to_rad_s(4.0));
        let m = -10.0 / (omega_from_wavelength(780e-9) * 2.0 * (w * w - a * a) / (a * a + w * w).powi(2));
        assert!((r.amplitude - m).abs() < 1e-12 * m);
    }

    #[test]
    fn unit_target_needs_no_gain() {
        let r = tune_gain_amplitude(&template(8.0), 1.0).unwrap();
        assert_eq!(r.amplitude, 0.0);
        assert_eq!(r.achieved_ng, 1.0);
    }

    #[test]
    fn amplitude_is_linear_in_cavity_ratio() {
        let t = template(8.0);
        let m10 = tune_gain_amplitude(&t, white_light_group_index(1.0, 0.1)).unwrap().amplitude;
        let m20 = tune_gain_amplitude(&t, white_light_group_index(2.0, 0.1)).unwrap().amplitude;
        assert!((m20 / m10 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_lines_cannot_give_anomalous_dispersion() {
        let t = template(1.5);
        assert!(matches!(tune_gain_amplitude(&t, -9.0), Err(Error::Infeasible(_))));
        assert!(matches!(
            tune_with_scaling(&t, -9.0, 1.0, WidthScaling::None),
            Err(Error::Infeasible(_))
        ));
        // narrowing the lines (k < 1) can still separate them
        let narrowed = tune_with_width_scaling(&t, -9.0, 1.0).unwrap();
        assert!(narrowed.width < 0.75 * t.width());
    }

    #[test]
    fn width_scaling_trivial_factor() {
        let t = template(8.0);
        let base = tune_gain_amplitude(&t, -9.0).unwrap();
        let r = tune_with_width_scaling(&t, -9.0, base.amplitude).unwrap();
        assert_eq!(r.gain_factor, Some(1.0));
        assert_eq!(r.amplitude, base.amplitude);
    }

    #[test]
    fn without_width_scaling_matches_closed_form() {
        let t = template(12.0);
        let closed = tune_gain_amplitude(&t, -9.0).unwrap();
        let r = tune_with_scaling(&t, -9.0, 1.57, WidthScaling::None).unwrap();
        assert!((r.amplitude - closed.amplitude).abs() < 1e-9 * closed.amplitude);
        assert!((r.achieved_ng + 9.0).abs() <= 9e-6);
    }

    #[test]
    fn fixed_gain_drifts_towards_normal_dispersion() {
        let base = tune_gain_amplitude(&template(8.0), -9.0).unwrap().medium;
        let mut prev = base.group_index();
        for sep in [10.0, 14.0, 20.0, 40.0, 80.0] {
            let ng = base.with_separation(mhz_to_rad_s(sep)).unwrap().group_index();
            assert!(ng > prev && ng < 1.0);
            prev = ng;
        }
        let g = separation_for_group_index(&base, -1.95, mhz_to_rad_s(1000.0)).unwrap();
        let ng = base.with_separation(g).unwrap().group_index();
        assert!((ng + 1.95).abs() < 1e-9);
        assert!(g > mhz_to_rad_s(8.0));
    }

    #[test]
    fn width_scaling_needs_more_gain_than_fixed_width() {
        let t = template(16.0);
        let m_ref = 1.57;
        let fixed = tune_with_scaling(&t, -9.0, m_ref, WidthScaling::None).unwrap();
        let scaled = tune_with_width_scaling(&t, -9.0, m_ref).unwrap();
        assert!(scaled.gain_factor.unwrap() > fixed.gain_factor.unwrap());
        assert!((scaled.width / t.width() - scaled.gain_factor.unwrap().sqrt()).abs() < 1e-12);
        assert!((scaled.achieved_ng + 9.0).abs() <= 9e-6);
    }

    proptest! {
        #[test]
        fn tuned_amplitude_round_trips(sep in 3.0f64..60.0, target in -30.0f64..0.99) {
            let r = tune_gain_amplitude(&template(sep), target).unwrap();
            prop_assert!(r.amplitude > 0.0);
            let ng = r.medium.dispersion_coefficients().ng;
            prop_assert!((ng - target).abs() <= ng_tolerance(target));
        }

        #[test]
        fn amplitude_scales_with_one_minus_target(sep in 3.0f64..60.0, a in -30.0f64..0.9, b in -30.0f64..0.9) {
            let t = template(sep);
            let ma = tune_gain_amplitude(&t, a).unwrap().amplitude;
            let mb = tune_gain_amplitude(&t, b).unwrap().amplitude;
            prop_assert!((ma * (1.0 - b) - mb * (1.0 - a)).abs() <= 1e-12 * ma.max(mb) * (1.0 - a.min(b)));
        }

        #[test]
        fn larger_compensation_needs_larger_gain_factor(sep in 8.0f64..40.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
            prop_assume!((a - b).abs() > 1e-3);
            let t = template(sep);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let k_lo = tune_with_width_scaling(&t, 1.0 - lo - 0.1, 1.0).unwrap().gain_factor.unwrap();
            let k_hi = tune_with_width_scaling(&t, 1.0 - hi - 0.1, 1.0).unwrap().gain_factor.unwrap();
            prop_assert!(k_hi > k_lo);
        }
    }
}
