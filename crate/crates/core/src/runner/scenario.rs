//! Scenario execution.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cavity::{CavityModel, TransmissionSpectrum};
use crate::error::{Error, Result};
use crate::linewidth::{measure_fwhm, LinewidthReport};
use crate::medium::{n3_doublet_approx, GainDoublet};
use crate::runner::acceptance::{self, CriterionOutcome};
use crate::runner::config::{
    AmplitudeSource, MediumSettings, Scenario, ScenarioConfig, DEFAULT_LAMBDA_NM,
};
use crate::runner::RunError;
use crate::tuner::{tune_gain_amplitude, tune_with_width_scaling, TuneResult};
use crate::units::{omega_from_wavelength, rad_s_to_hz, rad_s_to_mhz};

/// A spectrum destined for its own output file.
#[derive(Debug, Clone)]
pub struct LabelledSpectrum {
    pub label: String,
    pub spectrum: TransmissionSpectrum,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub scenario: Scenario,
    pub report: Value,
    pub spectra: Vec<LabelledSpectrum>,
    pub summary: Option<Vec<crate::runner::output::SummaryRow>>,
    /// Selftest only.
    pub criteria: Option<Vec<CriterionOutcome>>,
}

impl ScenarioOutput {
    fn new(scenario: Scenario, report: Value) -> Self {
        Self { scenario, report, spectra: Vec::new(), summary: None, criteria: None }
    }
}

fn ctx(context: &str) -> impl FnOnce(Error) -> RunError + '_ {
    move |source| RunError::Scenario { context: context.to_string(), source }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> std::result::Result<ScenarioOutput, RunError> {
    log::info!("running scenario {}", cfg.scenario);
    match cfg.scenario {
        Scenario::Empty => run_empty(cfg),
        Scenario::Spectrum => run_spectrum(cfg),
        Scenario::Predict => run_predict(cfg),
        Scenario::Tune => run_tune(cfg),
        Scenario::SweepSeparation => run_sweep(cfg),
        Scenario::Selftest => Ok(run_selftest()),
    }
}

fn bare_cavity(cfg: &ScenarioConfig) -> Result<CavityModel> {
    let c = &cfg.cavity;
    Ok(CavityModel::new(c.length_m, c.reflectivity, c.transmissivity)?.with_coupling(c.gain_coupling))
}

fn medium_settings(cfg: &ScenarioConfig) -> &MediumSettings {
    cfg.medium.as_ref().expect("medium scenarios always resolve a medium section")
}

/// Doublet with Γ, W and α from the config and amplitude M = 0.
pub fn medium_template(m: &MediumSettings) -> Result<GainDoublet> {
    GainDoublet::new(m.omega0, m.gamma_sep, m.width, 0.0, m.alpha, m.length_m)
}

/// The configured doublet. An amplitude not fixed by the config is solved
/// for the target group index; the tune result is returned with it.
pub fn configured_medium(cfg: &ScenarioConfig) -> Result<(GainDoublet, Option<TuneResult>)> {
    let m = medium_settings(cfg);
    let template = medium_template(m)?;
    match m.amplitude {
        AmplitudeSource::Given(a) => Ok((template.with_amplitude(a)?, None)),
        AmplitudeSource::GainDbAtLine(db) => {
            let a = template.amplitude_for_line_gain_db(db)?;
            Ok((template.with_amplitude(a)?, None))
        }
        AmplitudeSource::FromTarget => {
            let target = cfg.target_ng().expect("medium present");
            let t = tune_gain_amplitude(&template, target)?;
            Ok((t.medium, Some(t)))
        }
    }
}

/// `base` with `medium` inserted, its length snapped onto resonance at
/// `omega0`.
pub fn resonant_cavity(base: &CavityModel, medium: Option<GainDoublet>, omega0: f64) -> Result<CavityModel> {
    let cav = match medium {
        Some(m) => base.with_medium(m)?,
        None => base.without_medium(),
    };
    let snapped = cav.snap_to_resonance(omega0)?;
    log::debug!(
        "snapped cavity length {} m -> {} m",
        cav.length(),
        snapped.length()
    );
    Ok(snapped)
}

fn medium_span(medium: &GainDoublet) -> f64 {
    4.0 * medium.gamma_sep()
}

fn empty_span(cavity: &CavityModel) -> f64 {
    20.0 * crate::linewidth::empty_linewidth(cavity.reflectivity(), cavity.length())
}

fn mhz(v: f64) -> f64 {
    rad_s_to_mhz(v)
}

fn cavity_json(cav: &CavityModel, requested_length: f64) -> Value {
    json!({
        "length_m": cav.length(),
        "length_adjustment_m": cav.length() - requested_length,
        "reflectivity": cav.reflectivity(),
        "transmissivity": cav.transmissivity(),
        "gain_coupling": cav.coupling(),
        "free_spectral_range_mhz": mhz(cav.free_spectral_range()),
    })
}

fn medium_json(m: &GainDoublet) -> Value {
    let k = m.dispersion_coefficients();
    json!({
        "amplitude_rad_s": m.amplitude(),
        "separation_mhz": mhz(m.gamma_sep()),
        "width_fwhm_mhz": mhz(2.0 * m.width()),
        "length_m": m.length(),
        "alpha_per_m": m.alpha(),
        "center_frequency_hz": rad_s_to_hz(m.omega0()),
        "n1_s_per_rad": k.n1,
        "n3_exact_s3_per_rad3": k.n3,
        "n3_doublet_approx_s3_per_rad3": n3_doublet_approx(k.n1, m.gamma_sep()),
        "group_index": k.ng,
        "line_gain_db": m.gain_db_at_detuning(0.5 * m.gamma_sep()),
    })
}

fn tune_json(t: &TuneResult) -> Value {
    json!({
        "amplitude_rad_s": t.amplitude,
        "width_fwhm_mhz": mhz(2.0 * t.width),
        "achieved_ng": t.achieved_ng,
        "gain_factor": t.gain_factor,
        "iterations": t.iterations,
    })
}

fn opt_mhz(v: Option<f64>) -> Value {
    v.map(|x| json!(mhz(x))).unwrap_or(Value::Null)
}

fn linewidth_json(rep: &LinewidthReport, measured: &Result<f64>) -> Value {
    let mut v = json!({
        "gamma_empty_mhz": mhz(rep.gamma_empty),
        "beta": rep.beta,
        "gamma_lossy_mhz": mhz(rep.gamma_lossy),
        "gamma_wlc_predicted_mhz": opt_mhz(rep.gamma_wlc_predicted),
        "gamma_wlc_ideal_mhz": opt_mhz(rep.gamma_wlc_ideal),
        "gamma_measured_mhz": measured.as_ref().ok().map(|&g| mhz(g)),
        "buildup_peak": rep.buildup_peak,
        "buildup_reduction": rep.buildup_reduction,
    });
    if let Err(e) = measured {
        v["fwhm_error"] = json!(e.to_string());
    }
    v
}

/// Closed-form report with the measured FWHM and peak build-up of `spec`
/// folded in. A failed FWHM measurement is returned, not raised.
fn spectrum_linewidths(cav: &CavityModel, spec: &TransmissionSpectrum) -> Result<(LinewidthReport, Result<f64>)> {
    let mut rep = LinewidthReport::for_cavity(cav, None)?;
    let measured = measure_fwhm(spec);
    let lossless_peak = cav.transmissivity() / (1.0 - cav.reflectivity()).powi(2);
    rep.buildup_peak = spec.peak_buildup();
    rep.buildup_reduction = crate::linewidth::buildup_reduction(lossless_peak, rep.buildup_peak);
    rep.gamma_measured = measured.as_ref().ok().copied();
    Ok((rep, measured))
}

fn run_empty(cfg: &ScenarioConfig) -> std::result::Result<ScenarioOutput, RunError> {
    let lambda_nm = cfg.medium.as_ref().map_or(DEFAULT_LAMBDA_NM, |m| m.lambda_nm);
    let omega0 = omega_from_wavelength(lambda_nm * 1e-9);
    let base = bare_cavity(cfg).map_err(ctx("empty: cavity"))?;
    let cav = resonant_cavity(&base, None, omega0).map_err(ctx("empty: resonance"))?;
    let span = cfg.scan.span.unwrap_or_else(|| empty_span(&cav));
    let spec = cav.spectrum(omega0, span, cfg.scan.points).map_err(ctx("empty: spectrum"))?;
    let (rep, measured) = spectrum_linewidths(&cav, &spec).map_err(ctx("empty: linewidth"))?;
    let report = json!({
        "scenario": "empty",
        "cavity": cavity_json(&cav, base.length()),
        "finesse": crate::linewidth::finesse_from_reflectivity(cav.reflectivity()),
        "gamma_finesse_form_mhz": mhz(crate::linewidth::finesse_linewidth(cav.reflectivity(), cav.length())),
        "linewidth": linewidth_json(&rep, &measured),
        "peak_transmission": spec.peak_transmission(),
    });
    let mut out = ScenarioOutput::new(Scenario::Empty, report);
    out.spectra.push(LabelledSpectrum { label: "empty".into(), spectrum: spec });
    Ok(out)
}

fn run_spectrum(cfg: &ScenarioConfig) -> std::result::Result<ScenarioOutput, RunError> {
    let (medium, tuned) = configured_medium(cfg).map_err(ctx("spectrum: medium"))?;
    let base = bare_cavity(cfg).map_err(ctx("spectrum: cavity"))?;
    let omega0 = medium.omega0();
    let cav = resonant_cavity(&base, Some(medium), omega0).map_err(ctx("spectrum: resonance"))?;
    let span = cfg.scan.span.unwrap_or_else(|| medium_span(&medium));
    let spec = cav.spectrum(omega0, span, cfg.scan.points).map_err(ctx("spectrum: spectrum"))?;
    let (rep, measured) = spectrum_linewidths(&cav, &spec).map_err(ctx("spectrum: linewidth"))?;
    if let Err(e) = &measured {
        log::warn!("FWHM not measurable: {e}");
    }
    let report = json!({
        "scenario": "spectrum",
        "cavity": cavity_json(&cav, base.length()),
        "medium": medium_json(&medium),
        "tune": tuned.as_ref().map(tune_json),
        "linewidth": linewidth_json(&rep, &measured),
        "peak_transmission": spec.peak_transmission(),
        "ripple_fraction": spec.ripple_fraction(0.5 * medium.gamma_sep()),
        "any_oscillating": spec.any_oscillating(),
    });
    let mut out = ScenarioOutput::new(Scenario::Spectrum, report);
    out.spectra.push(LabelledSpectrum { label: "spectrum".into(), spectrum: spec });
    Ok(out)
}

fn run_predict(cfg: &ScenarioConfig) -> std::result::Result<ScenarioOutput, RunError> {
    let (medium, tuned) = configured_medium(cfg).map_err(ctx("predict: medium"))?;
    let base = bare_cavity(cfg).map_err(ctx("predict: cavity"))?;
    let cav = base.with_medium(medium).map_err(ctx("predict: cavity"))?;
    let rep = LinewidthReport::for_cavity(&cav, None).map_err(ctx("predict: linewidth"))?;
    let report = json!({
        "scenario": "predict",
        "cavity": cavity_json(&cav, base.length()),
        "medium": medium_json(&medium),
        "tune": tuned.as_ref().map(tune_json),
        "linewidth": linewidth_json(&rep, &Err(Error::InvalidInput("no spectrum in predict".into()))),
    });
    Ok(ScenarioOutput::new(Scenario::Predict, report))
}

fn run_tune(cfg: &ScenarioConfig) -> std::result::Result<ScenarioOutput, RunError> {
    let m = medium_settings(cfg);
    let template = medium_template(m).map_err(ctx("tune: medium"))?;
    let target = cfg.target_ng().expect("medium present");
    let tuned = if cfg.tune.width_scaling {
        let (reference, _) = configured_medium(cfg).map_err(ctx("tune: reference amplitude"))?;
        tune_with_width_scaling(&template, target, reference.amplitude())
    } else {
        tune_gain_amplitude(&template, target)
    }
    .map_err(ctx("tune"))?;

    let base = bare_cavity(cfg).map_err(ctx("tune: cavity"))?;
    let omega0 = tuned.medium.omega0();
    let cav = resonant_cavity(&base, Some(tuned.medium), omega0).map_err(ctx("tune: resonance"))?;
    let span = cfg.scan.span.unwrap_or_else(|| medium_span(&tuned.medium));
    let spec = cav.spectrum(omega0, span, cfg.scan.points).map_err(ctx("tune: spectrum"))?;
    let (rep, measured) = spectrum_linewidths(&cav, &spec).map_err(ctx("tune: linewidth"))?;
    let report = json!({
        "scenario": "tune",
        "target_ng": target,
        "tune": tune_json(&tuned),
        "cavity": cavity_json(&cav, base.length()),
        "medium": medium_json(&tuned.medium),
        "linewidth": linewidth_json(&rep, &measured),
        "peak_transmission": spec.peak_transmission(),
    });
    let mut out = ScenarioOutput::new(Scenario::Tune, report);
    out.spectra.push(LabelledSpectrum { label: "tune".into(), spectrum: spec });
    Ok(out)
}

/// How a sweep entry sets the doublet amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Keep the baseline M and W (solid traces).
    FixedGain,
    /// Re-solve for the target group index at each separation (dotted
    /// traces); with `width_scaling` the width follows √(gain factor).
    Retune { width_scaling: bool },
}

/// One separation of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub gamma_sep: f64,
    pub medium: GainDoublet,
    pub cavity: CavityModel,
    pub spectrum: TransmissionSpectrum,
    pub ng: f64,
    pub gamma_predicted: Option<f64>,
    pub gamma_measured: Result<f64>,
    pub ripple_fraction: Option<f64>,
    pub peak_transmission: f64,
    pub gain_factor: Option<f64>,
}

/// Build, tune and sample the cavity at separation `gamma_sep`, starting
/// from `baseline` (whose amplitude is the reference for gain factors).
pub fn sweep_point(
    base: &CavityModel,
    baseline: &GainDoublet,
    gamma_sep: f64,
    mode: SweepMode,
    target_ng: f64,
    span: Option<f64>,
    points: usize,
) -> Result<SweepPoint> {
    let template = baseline.with_separation(gamma_sep)?;
    let m_ref = baseline.amplitude();
    let (medium, gain_factor) = match mode {
        SweepMode::FixedGain => (template, Some(1.0)),
        SweepMode::Retune { width_scaling: true } => {
            let t = tune_with_width_scaling(&template, target_ng, m_ref)?;
            (t.medium, t.gain_factor)
        }
        SweepMode::Retune { width_scaling: false } => {
            let t = tune_gain_amplitude(&template, target_ng)?;
            let k = (m_ref > 0.0).then(|| t.amplitude / m_ref);
            (t.medium, k)
        }
    };
    let omega0 = medium.omega0();
    let cavity = resonant_cavity(base, Some(medium), omega0)?;
    let span = span.unwrap_or_else(|| medium_span(&medium));
    let spectrum = cavity.spectrum(omega0, span, points)?;
    let report = LinewidthReport::for_cavity(&cavity, None)?;
    Ok(SweepPoint {
        gamma_sep,
        medium,
        cavity,
        ng: medium.group_index(),
        gamma_predicted: report.gamma_wlc_predicted,
        gamma_measured: measure_fwhm(&spectrum),
        ripple_fraction: spectrum.ripple_fraction(0.5 * gamma_sep),
        peak_transmission: spectrum.peak_transmission(),
        gain_factor,
        spectrum,
    })
}

pub fn sweep_label(gamma_sep: f64) -> String {
    format!("gamma_{:.4}mhz", mhz(gamma_sep))
}

fn run_sweep(cfg: &ScenarioConfig) -> std::result::Result<ScenarioOutput, RunError> {
    use crate::runner::output::SummaryRow;

    let (baseline, tuned) = configured_medium(cfg).map_err(ctx("sweep: baseline medium"))?;
    let base = bare_cavity(cfg).map_err(ctx("sweep: cavity"))?;
    let target = cfg.target_ng().expect("medium present");
    let mode = if cfg.sweep.retune_each {
        SweepMode::Retune { width_scaling: cfg.tune.width_scaling }
    } else {
        SweepMode::FixedGain
    };

    let results: Vec<(f64, Result<SweepPoint>)> = cfg
        .sweep
        .separations
        .par_iter()
        .map(|&g| (g, sweep_point(&base, &baseline, g, mode, target, cfg.scan.span, cfg.scan.points)))
        .collect();

    let mut out = ScenarioOutput::new(Scenario::SweepSeparation, Value::Null);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (g, res) in results {
        match res {
            Ok(p) => {
                if let Err(e) = &p.gamma_measured {
                    log::warn!("{}: FWHM not measurable: {e}", sweep_label(g));
                }
                rows.push(SummaryRow {
                    gamma_sep_mhz: mhz(g),
                    ng: Some(p.ng),
                    gamma_pred_mhz: p.gamma_predicted.map(mhz),
                    gamma_meas_mhz: p.gamma_measured.as_ref().ok().map(|&x| mhz(x)),
                    peak_transmission: Some(p.peak_transmission),
                    ripple_fraction: p.ripple_fraction,
                    gain_factor: p.gain_factor,
                });
                entries.push(json!({
                    "separation_mhz": mhz(g),
                    "status": "ok",
                    "file": sweep_label(g),
                    "medium": medium_json(&p.medium),
                    "cavity_length_m": p.cavity.length(),
                    "fwhm_error": p.gamma_measured.as_ref().err().map(|e| e.to_string()),
                }));
                out.spectra.push(LabelledSpectrum { label: sweep_label(g), spectrum: p.spectrum });
            }
            Err(e) => {
                log::warn!("{}: entry failed: {e}", sweep_label(g));
                rows.push(SummaryRow {
                    gamma_sep_mhz: mhz(g),
                    ng: None,
                    gamma_pred_mhz: None,
                    gamma_meas_mhz: None,
                    peak_transmission: None,
                    ripple_fraction: None,
                    gain_factor: None,
                });
                entries.push(json!({
                    "separation_mhz": mhz(g),
                    "status": "failed",
                    "error": e.to_string(),
                }));
            }
        }
    }
    out.report = json!({
        "scenario": "sweep_separation",
        "mode": mode,
        "target_ng": target,
        "baseline": medium_json(&baseline),
        "baseline_tune": tuned.as_ref().map(tune_json),
        "entries": entries,
    });
    out.summary = Some(rows);
    Ok(out)
}

fn run_selftest() -> ScenarioOutput {
    let outcomes = acceptance::run_all();
    let passed = outcomes.iter().filter(|c| c.passed).count();
    let report = json!({
        "scenario": "selftest",
        "passed": passed,
        "total": outcomes.len(),
        "criteria": outcomes,
    });
    let mut out = ScenarioOutput::new(Scenario::Selftest, report);
    out.criteria = Some(outcomes);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::config::load_config;

    #[test]
    fn retuned_sweep_hits_target_at_every_separation() {
        let cfg = load_config(
            "scenario = \"sweep_separation\"\n[scan]\npoints = 401\n[sweep]\nseparations_mhz = [6.0, 8.0, 12.0]\n",
        )
        .unwrap();
        let out = run_scenario(&cfg).unwrap();
        let rows = out.summary.unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!((r.ng.unwrap() + 9.0).abs() <= 9e-6);
        }
        assert_eq!(out.spectra.len(), 3);
        // baseline separation: gain factor 1
        assert!((rows[1].gain_factor.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_gain_sweep_drifts_towards_positive_ng() {
        let cfg = load_config(
            "scenario = \"sweep_separation\"\n[scan]\npoints = 201\n[sweep]\nseparations_mhz = [8.0, 12.0, 20.0, 40.0]\nretune_each = false\n",
        )
        .unwrap();
        let rows = run_scenario(&cfg).unwrap().summary.unwrap();
        let ng: Vec<f64> = rows.iter().map(|r| r.ng.unwrap()).collect();
        assert!((ng[0] + 9.0).abs() < 1e-6);
        assert!(ng.windows(2).all(|w| w[1] > w[0]));
        assert!(*ng.last().unwrap() > 0.0);
    }

    #[test]
    fn infeasible_sweep_entry_is_marked_not_fatal() {
        let cfg = load_config(
            "scenario = \"sweep_separation\"\n[scan]\npoints = 201\n[sweep]\nseparations_mhz = [1.5, 8.0]\n",
        )
        .unwrap();
        let out = run_scenario(&cfg).unwrap();
        let rows = out.summary.unwrap();
        assert!(rows[0].ng.is_none());
        assert!(rows[1].ng.is_some());
        assert_eq!(out.report["entries"][0]["status"], "failed");
    }

    #[test]
    fn tuned_medium_keeps_resonance_at_centre() {
        let cfg = load_config("scenario = \"spectrum\"\n[scan]\npoints = 101\n").unwrap();
        let (medium, _) = configured_medium(&cfg).unwrap();
        let base = bare_cavity(&cfg).unwrap();
        let empty = resonant_cavity(&base, None, medium.omega0()).unwrap();
        let with = resonant_cavity(&base, Some(medium), medium.omega0()).unwrap();
        assert_eq!(empty.length(), with.length());
        assert!((empty.length() - 1.0).abs() < 390e-9);
    }

    #[test]
    fn predict_has_no_spectrum() {
        let cfg = load_config("scenario = \"predict\"\n").unwrap();
        let out = run_scenario(&cfg).unwrap();
        assert!(out.spectra.is_empty());
        let pred = out.report["linewidth"]["gamma_wlc_predicted_mhz"].as_f64().unwrap();
        let ideal = out.report["linewidth"]["gamma_wlc_ideal_mhz"].as_f64().unwrap();
        assert!((pred - ideal).abs() < 1e-9 * ideal);
    }

    #[test]
    fn tune_width_scaling_reports_gain_factor() {
        let cfg = load_config(
            "scenario = \"tune\"\n[medium]\nseparation_mhz = 16.0\namplitude_rad_s = 1.5748\n[tune]\nwidth_scaling = true\n[scan]\npoints = 201\n",
        )
        .unwrap();
        let out = run_scenario(&cfg).unwrap();
        let k = out.report["tune"]["gain_factor"].as_f64().unwrap();
        assert!(k > 1.0);
        assert!((out.report["tune"]["achieved_ng"].as_f64().unwrap() + 9.0).abs() < 9e-6);
    }
}
