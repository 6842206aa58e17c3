//! Acceptance checks, run by the `selftest` scenario and the `acceptance`
//! test target.
//!
//! Each check builds its own inputs from the reference configuration: a 1 m
//! ring of finesse 100 holding a 10 cm doublet medium at 780 nm, lines 8 MHz
//! apart and 2 MHz wide (FWHM), residual loss 0.0005 /cm.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cavity::{CavityModel, GainCoupling};
use crate::error::Result;
use crate::linewidth::{
    buildup_reduction, empty_linewidth, finesse_linewidth, ideal_wlc_linewidth, loss_beta,
    measure_fwhm, predict_wlc_linewidth, reflectivity_from_finesse, WlcLinewidthInputs,
};
use crate::medium::{n3_doublet_approx, GainDoublet};
use crate::runner::scenario::{resonant_cavity, sweep_point, SweepMode, SweepPoint};
use crate::tuner::{
    separation_for_group_index, tune_gain_amplitude, tune_with_width_scaling, white_light_group_index,
};
use crate::units::{mhz_to_rad_s, omega_from_wavelength, rad_s_to_mhz, C};

const FINESSE: f64 = 100.0;
const CAVITY_LENGTH: f64 = 1.0;
const MEDIUM_LENGTH: f64 = 0.1;
const LAMBDA: f64 = 780e-9;
const SEPARATION_MHZ: f64 = 8.0;
const HWHM_MHZ: f64 = 1.0;
/// 0.0005 /cm
const ALPHA: f64 = 0.05;
const POINTS: usize = 4001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionOutcome {
    /// `"[PASS] 1 title: first detail"`
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("[{status}] criterion {}: {}", self.id, self.title);
        if let Some(d) = self.details.first() {
            let _ = write!(s, " | {d}");
        }
        s
    }
}

struct Check {
    id: u8,
    title: &'static str,
    passed: bool,
    details: Vec<String>,
}

impl Check {
    fn new(id: u8, title: &'static str) -> Self {
        Self { id, title, passed: true, details: Vec::new() }
    }

    fn expect(&mut self, ok: bool, detail: String) {
        let tag = if ok { "ok" } else { "FAILED" };
        self.details.push(format!("{tag}: {detail}"));
        self.passed &= ok;
    }

    fn note(&mut self, detail: String) {
        self.details.push(detail);
    }

    fn finish(self, result: Result<()>) -> CriterionOutcome {
        let mut details = self.details;
        let mut passed = self.passed;
        if let Err(e) = result {
            details.push(format!("FAILED: error {e}"));
            passed = false;
        }
        // failures first, so one-line summaries show what went wrong
        details.sort_by_key(|d| !d.starts_with("FAILED"));
        CriterionOutcome { id: self.id, title: self.title, passed, details }
    }
}

fn omega0() -> f64 {
    omega_from_wavelength(LAMBDA)
}

fn reference_cavity() -> Result<CavityModel> {
    Ok(CavityModel::lossless(CAVITY_LENGTH, reflectivity_from_finesse(FINESSE))?
        .with_coupling(GainCoupling::DispersionOnly))
}

fn reference_template(sep_mhz: f64) -> Result<GainDoublet> {
    GainDoublet::new(
        omega0(),
        mhz_to_rad_s(sep_mhz),
        mhz_to_rad_s(HWHM_MHZ),
        0.0,
        ALPHA,
        MEDIUM_LENGTH,
    )
}

fn target_ng() -> f64 {
    white_light_group_index(CAVITY_LENGTH, MEDIUM_LENGTH)
}

/// Reference doublet tuned to the white-light condition at 8 MHz.
fn baseline() -> Result<GainDoublet> {
    Ok(tune_gain_amplitude(&reference_template(SEPARATION_MHZ)?, target_ng())?.medium)
}

fn mhz(v: f64) -> f64 {
    rad_s_to_mhz(v)
}

pub fn criterion_1() -> CriterionOutcome {
    let mut c = Check::new(1, "ideal white-light linewidth worked example");
    let g = ideal_wlc_linewidth(1.0, mhz_to_rad_s(1.0), mhz_to_rad_s(7.95));
    let rel = (mhz(g) - 3.16).abs() / 3.16;
    c.expect(rel <= 0.005, format!("gamma' = {:.4} MHz vs 3.16 MHz (rel {rel:.2e}, tol 5e-3)", mhz(g)));
    c.finish(Ok(()))
}

pub fn criterion_2() -> CriterionOutcome {
    let mut c = Check::new(2, "empty cavity FSR and linewidth");
    let r = reflectivity_from_finesse(FINESSE);
    let fsr = C / CAVITY_LENGTH / 1e6;
    let arcsin = mhz(empty_linewidth(r, CAVITY_LENGTH));
    let familiar = mhz(finesse_linewidth(r, CAVITY_LENGTH));
    let agree = (arcsin - familiar).abs() / familiar;
    c.expect((fsr - 299.79).abs() < 0.005, format!("FSR = {fsr:.4} MHz"));
    c.expect((arcsin - 3.0).abs() <= 0.01, format!("arcsin form gamma = {arcsin:.5} MHz"));
    c.expect((familiar - 3.0).abs() <= 0.01, format!("2 pi FSR/F gamma = {familiar:.5} MHz"));
    c.expect(agree <= 0.002, format!("forms agree to {agree:.2e} (tol 2e-3)"));
    c.finish(Ok(()))
}

pub fn criterion_3() -> CriterionOutcome {
    let mut c = Check::new(3, "loss broadening and build-up reduction");
    let result = (|| -> Result<()> {
        let r = reflectivity_from_finesse(FINESSE);
        let rho = (-ALPHA * MEDIUM_LENGTH).exp();
        let beta = loss_beta(r, rho);
        c.expect((beta - 1.16).abs() <= 0.02, format!("beta = {beta:.4} (1.16 +/- 0.02)"));

        // build-up from the cavity model, gain-free medium
        let w0 = omega0();
        let empty = resonant_cavity(&reference_cavity()?, None, w0)?;
        let lossy = resonant_cavity(&reference_cavity()?, Some(reference_template(SEPARATION_MHZ)?), w0)?;
        let b0 = empty.sample_at_detuning(w0, 0.0).buildup;
        let b1 = lossy.sample_at_detuning(w0, 0.0).buildup;
        let red = buildup_reduction(b0, b1);
        c.expect((0.20..=0.35).contains(&red), format!("peak build-up reduction = {red:.4} (in [0.20, 0.35])"));
        let closed = 1.0 - (1.0 - r).powi(2) / (1.0 - r * rho).powi(2);
        c.note(format!("closed-form reduction {closed:.4}"));
        Ok(())
    })();
    c.finish(result)
}

fn retuned_sweep(separations_mhz: &[f64]) -> Result<Vec<SweepPoint>> {
    use rayon::prelude::*;
    let base = reference_cavity()?;
    let baseline = baseline()?;
    separations_mhz
        .par_iter()
        .map(|&s| {
            sweep_point(
                &base,
                &baseline,
                mhz_to_rad_s(s),
                SweepMode::Retune { width_scaling: false },
                target_ng(),
                None,
                POINTS,
            )
        })
        .collect()
}

pub fn criterion_4() -> CriterionOutcome {
    let mut c = Check::new(4, "white-light tuning and broadening");
    let result = (|| -> Result<()> {
        let tuned = tune_gain_amplitude(&reference_template(SEPARATION_MHZ)?, target_ng())?;
        let err = (tuned.achieved_ng - target_ng()).abs();
        c.expect(err <= 1e-6 * target_ng().abs(), format!("n_g = {:.9} (target -9, err {err:.1e})", tuned.achieved_ng));

        let pts = retuned_sweep(&[SEPARATION_MHZ, 14.0])?;
        let lossy = {
            let r = reflectivity_from_finesse(FINESSE);
            loss_beta(r, (-ALPHA * MEDIUM_LENGTH).exp()) * empty_linewidth(r, CAVITY_LENGTH)
        };
        match &pts[0].gamma_measured {
            Ok(g) => c.expect(
                *g >= 3.0 * lossy,
                format!(
                    "8 MHz: FWHM {:.3} MHz = {:.2} x gain-free {:.3} MHz (need >= 3)",
                    mhz(*g),
                    g / lossy,
                    mhz(lossy)
                ),
            ),
            Err(e) => c.expect(false, format!("8 MHz: FWHM not measurable ({e})")),
        }
        match &pts[1].gamma_measured {
            Ok(g) => c.expect(
                mhz(*g) >= 15.0,
                format!("14 MHz: FWHM {:.3} MHz (need >= 15 MHz)", mhz(*g)),
            ),
            Err(e) => c.expect(false, format!("14 MHz: FWHM not measurable ({e})")),
        }
        Ok(())
    })();
    c.finish(result)
}

pub fn criterion_5() -> CriterionOutcome {
    let mut c = Check::new(5, "predicted vs measured white-light linewidth");
    let result = (|| -> Result<()> {
        let seps = [6.0, 8.0, 10.0, 12.0, 14.0];
        let pts = retuned_sweep(&seps)?;
        let mut worst: f64 = 0.0;
        let mut ok = true;
        let mut rows = Vec::new();
        for (s, p) in seps.iter().zip(&pts) {
            match (&p.gamma_measured, p.gamma_predicted) {
                (Ok(m), Some(pr)) => {
                    let rel = (m - pr).abs() / pr;
                    worst = worst.max(rel);
                    ok &= rel <= 0.25;
                    rows.push(format!("{s} MHz: measured {:.3}, predicted {:.3} (rel {rel:.3})", mhz(*m), mhz(pr)));
                }
                (m, pr) => {
                    ok = false;
                    rows.push(format!("{s} MHz: measured {m:?}, predicted {pr:?}"));
                }
            }
        }
        c.expect(ok, format!("worst relative gap {worst:.3} (tol 0.25)"));
        rows.into_iter().for_each(|r| c.note(r));
        Ok(())
    })();
    c.finish(result)
}

const DRIFTED_NG: [f64; 3] = [-1.95, 0.42, 0.71];
const REFERENCE_GAIN_FACTORS: [f64; 3] = [2.25, 5.65, 8.29];

/// Separations at which the fixed baseline gain gives the drifted group
/// indices −1.95, 0.42, 0.71.
pub fn reconstructed_separations() -> Result<Vec<f64>> {
    let base = baseline()?;
    DRIFTED_NG
        .iter()
        .map(|&ng| separation_for_group_index(&base, ng, mhz_to_rad_s(1000.0)))
        .collect()
}

pub fn criterion_6() -> CriterionOutcome {
    let mut c = Check::new(6, "fixed-gain drift and width-scaled retuning");
    let result = (|| -> Result<()> {
        let base = baseline()?;
        let seps = reconstructed_separations()?;
        let mut prev_sep = base.gamma_sep();
        let mut factors = Vec::new();
        for (i, &g) in seps.iter().enumerate() {
            let fixed = base.with_separation(g)?;
            let ng = fixed.group_index();
            c.expect(
                (ng - DRIFTED_NG[i]).abs() < 1e-6 && g > prev_sep,
                format!("separation {:.3} MHz gives fixed-gain n_g = {ng:.4}", mhz(g)),
            );
            prev_sep = g;
            let t = tune_with_width_scaling(&fixed, target_ng(), base.amplitude())?;
            let k = t.gain_factor.unwrap_or(f64::NAN);
            c.note(format!(
                "gain factor {k:.3} vs reference {:.2} (ratio {:.2}, width {:.3} MHz FWHM)",
                REFERENCE_GAIN_FACTORS[i],
                k / REFERENCE_GAIN_FACTORS[i],
                mhz(2.0 * t.width)
            ));
            factors.push(k);
        }
        let monotone = factors.windows(2).all(|w| w[1] > w[0]);
        c.expect(monotone, format!("gain factors increasing: {factors:.3?}"));
        Ok(())
    })();
    c.finish(result)
}

pub fn criterion_7() -> CriterionOutcome {
    let mut c = Check::new(7, "retuning reduces in-band ripple");
    let result = (|| -> Result<()> {
        let cavity = reference_cavity()?;
        let base = baseline()?;
        for g in reconstructed_separations()? {
            let solid = sweep_point(&cavity, &base, g, SweepMode::FixedGain, target_ng(), None, POINTS)?;
            let dotted = sweep_point(
                &cavity,
                &base,
                g,
                SweepMode::Retune { width_scaling: true },
                target_ng(),
                None,
                POINTS,
            )?;
            let (rs, rd) = (
                solid.ripple_fraction.unwrap_or(f64::NAN),
                dotted.ripple_fraction.unwrap_or(f64::NAN),
            );
            c.expect(
                rd < rs,
                format!("{:.3} MHz: ripple retuned {rd:.4} vs fixed gain {rs:.4}", mhz(g)),
            );
        }
        Ok(())
    })();
    c.finish(result)
}

pub fn criterion_8() -> CriterionOutcome {
    let mut c = Check::new(8, "loss-free white-light cavity keeps its build-up");
    let result = (|| -> Result<()> {
        let target_buildup = 2000.0;
        // lossless couplers: peak build-up 1/(1 − R)
        let r = 1.0 - 1.0 / target_buildup;
        let template = GainDoublet::new(omega0(), mhz_to_rad_s(7.95), mhz_to_rad_s(HWHM_MHZ), 0.0, 0.0, MEDIUM_LENGTH)?;
        let medium = tune_gain_amplitude(&template, target_ng())?.medium;
        let cav = resonant_cavity(&CavityModel::lossless(CAVITY_LENGTH, r)?, Some(medium), omega0())?;
        let band = mhz_to_rad_s(2.0);
        let spec = cav.spectrum(omega0(), 4.0 * band, POINTS)?;
        let peak = spec.peak_buildup();
        c.expect(
            (peak - target_buildup).abs() <= 0.01 * target_buildup,
            format!("peak build-up {peak:.2} (2000 +/- 1%)"),
        );
        let in_band: Vec<f64> = spec
            .detunings
            .iter()
            .zip(&spec.buildup)
            .filter(|(d, _)| d.abs() <= band)
            .map(|(_, &b)| b)
            .collect();
        let min = in_band.iter().copied().fold(f64::INFINITY, f64::min);
        let max = in_band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dev = ((target_buildup - min) / target_buildup).max((max - target_buildup) / target_buildup);
        c.expect(
            dev <= 0.10,
            format!("build-up over |detuning| <= 2 MHz spans [{min:.1}, {max:.1}] (max deviation {dev:.3}, tol 0.10)"),
        );
        if let Ok(g) = measure_fwhm(&spec) {
            c.note(format!("measured FWHM {:.3} MHz", mhz(g)));
        }
        Ok(())
    })();
    c.finish(result)
}

// ---- property checks on fixed grids -----------------------------------------

fn fd_first(d: &GainDoublet, h: f64) -> f64 {
    let f = |x: f64| d.excess_index_at_detuning(x).re;
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

fn fd_third_raw(d: &GainDoublet, h: f64) -> f64 {
    let f = |x: f64| d.excess_index_at_detuning(x).re;
    (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h)
}

fn fd_third(d: &GainDoublet, h: f64) -> f64 {
    (4.0 * fd_third_raw(d, 0.5 * h) - fd_third_raw(d, h)) / 3.0
}

fn check_derivatives(c: &mut Check) -> Result<()> {
    let mut worst1: f64 = 0.0;
    let mut worst3: f64 = 0.0;
    for sep in [3.0, 8.0, 20.0, 40.0] {
        for ratio in [0.02, 0.125, 0.3, 0.6] {
            for m in [0.1, 1.5, 20.0] {
                let g = mhz_to_rad_s(sep);
                let d = GainDoublet::new(omega0(), g, ratio * g, m, 0.0, MEDIUM_LENGTH)?;
                let k = d.dispersion_coefficients();
                let h = (0.5 * g).hypot(d.width()) / 100.0;
                worst1 = worst1.max((k.n1 - fd_first(&d, h)).abs() / k.n1.abs());
                let s = 0.25 * g * g + d.width() * d.width();
                let scale = k.n3.abs().max(m / (s * s));
                worst3 = worst3.max((k.n3 - fd_third(&d, h) / 6.0).abs() / scale);
            }
        }
    }
    c.expect(worst1 <= 1e-6, format!("n1 vs finite differences: worst rel {worst1:.1e}"));
    c.expect(worst3 <= 1e-6, format!("n3 vs finite differences: worst rel {worst3:.1e}"));
    Ok(())
}

fn check_symmetry(c: &mut Check) -> Result<()> {
    let mut ok = true;
    for sep in [2.0, 8.0, 30.0] {
        let d = reference_template(sep)?.with_amplitude(1.7)?;
        for i in 0..200 {
            let x = mhz_to_rad_s(0.173 * i as f64);
            let (p, q) = (d.excess_index_at_detuning(x), d.excess_index_at_detuning(-x));
            ok &= p.re == -q.re && p.im == q.im;
        }
    }
    c.expect(ok, "Re(n - 1) odd and Im n even about the centre, exactly".into());
    Ok(())
}

fn check_zero_gain(c: &mut Check) -> Result<()> {
    let w0 = omega0();
    let base = resonant_cavity(&reference_cavity()?, None, w0)?;
    let lossy = resonant_cavity(&reference_cavity()?, Some(reference_template(SEPARATION_MHZ)?), w0)?;
    let (r, t) = (base.reflectivity(), base.transmissivity());
    let rho = lossy.residual_loss_factor();
    let mut worst: f64 = 0.0;
    for i in -100..=100 {
        let d = mhz_to_rad_s(0.41 * i as f64);
        let phi = d * base.length() / C;
        let a3 = t * t / (1.0 + r * r - 2.0 * r * phi.cos());
        let a4 = t * t / (1.0 + (r * rho).powi(2) - 2.0 * r * rho * phi.cos());
        worst = worst.max((base.sample_at_detuning(w0, d).transmission - a3).abs() / a3);
        worst = worst.max((lossy.sample_at_detuning(w0, d).transmission - a4).abs() / a4);
    }
    c.expect(worst <= 1e-12, format!("zero gain reduces to the Airy forms: worst rel {worst:.1e}"));
    Ok(())
}

fn check_cubic(c: &mut Check) -> Result<()> {
    let mut worst: f64 = 0.0;
    for ng in [-15.0, -9.0, -1.0, 0.5] {
        for sep in [2.0, 8.0, 30.0] {
            for gamma in [0.05, 1.0, 3.0, 10.0] {
                for beta in [1.0, 1.16, 2.0] {
                    let n1 = (ng - 1.0) / omega0();
                    let inputs = WlcLinewidthInputs {
                        ng,
                        n3: n3_doublet_approx(n1, mhz_to_rad_s(sep)),
                        omega0: omega0(),
                        medium_length: MEDIUM_LENGTH,
                        cavity_length: CAVITY_LENGTH,
                        beta,
                        gamma_empty: mhz_to_rad_s(gamma),
                    };
                    worst = worst.max(inputs.residual(predict_wlc_linewidth(&inputs)?));
                }
            }
        }
    }
    c.expect(worst < 1e-9, format!("linewidth cubic residual: worst {worst:.1e}"));
    Ok(())
}

fn check_fwhm(c: &mut Check) -> Result<()> {
    let w0 = omega0();
    let mut worst: f64 = 0.0;
    for r in [0.90, 0.95, 0.969, 0.99] {
        let cav = resonant_cavity(&CavityModel::lossless(CAVITY_LENGTH, r)?, None, w0)?;
        let g = empty_linewidth(r, cav.length());
        let spec = cav.spectrum(w0, 6.0 * g, 2001)?;
        worst = worst.max((measure_fwhm(&spec)? - g).abs() / g);
    }
    c.expect(worst <= 1e-3, format!("FWHM extractor vs arcsin form: worst rel {worst:.1e}"));
    Ok(())
}

fn check_units(c: &mut Check) -> Result<()> {
    // all frequencies in "MHz-radians" instead of rad/s
    let k = 1.0 / mhz_to_rad_s(1.0);
    let mut worst: f64 = 0.0;
    for sep in [4.0, 8.0, 20.0] {
        let d = reference_template(sep)?.with_amplitude(1.3)?;
        let s = GainDoublet::new(d.omega0() * k, d.gamma_sep() * k, d.width() * k, d.amplitude() * k, 0.0, d.length())?;
        let (a, b) = (d.group_index(), s.group_index());
        worst = worst.max((a - b).abs() / a.abs());

        let r = reflectivity_from_finesse(FINESSE);
        let beta = loss_beta(r, 0.99);
        let n1 = d.dispersion_coefficients().n1;
        let base = WlcLinewidthInputs {
            ng: d.group_index(),
            n3: n3_doublet_approx(n1, d.gamma_sep()),
            omega0: d.omega0(),
            medium_length: MEDIUM_LENGTH,
            cavity_length: CAVITY_LENGTH,
            beta,
            gamma_empty: empty_linewidth(r, CAVITY_LENGTH),
        };
        let scaled = WlcLinewidthInputs {
            n3: base.n3 / (k * k * k),
            omega0: base.omega0 * k,
            gamma_empty: base.gamma_empty * k,
            ..base
        };
        let ra = predict_wlc_linewidth(&base)? / base.gamma_empty;
        let rb = predict_wlc_linewidth(&scaled)? / scaled.gamma_empty;
        worst = worst.max((ra - rb).abs() / ra);
        let ia = ideal_wlc_linewidth(beta, base.gamma_empty, d.gamma_sep()) / base.gamma_empty;
        let ib = ideal_wlc_linewidth(beta, scaled.gamma_empty, s.gamma_sep()) / scaled.gamma_empty;
        worst = worst.max((ia - ib).abs() / ia);
    }
    c.expect(worst <= 1e-10, format!("dimensionless outputs under a unit change: worst rel {worst:.1e}"));
    Ok(())
}

pub fn criterion_9() -> CriterionOutcome {
    let mut c = Check::new(9, "property suites");
    let result = (|| -> Result<()> {
        check_derivatives(&mut c)?;
        check_symmetry(&mut c)?;
        check_zero_gain(&mut c)?;
        check_cubic(&mut c)?;
        check_fwhm(&mut c)?;
        check_units(&mut c)?;
        Ok(())
    })();
    c.finish(result)
}

pub fn run_all() -> Vec<CriterionOutcome> {
    let checks: [fn() -> CriterionOutcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    checks.iter().map(|f| f()).collect()
}
