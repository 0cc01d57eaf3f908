//! Config-to-files drivers behind the command-line subcommands. Each run is a
//! pure function of the config (and seed): identical inputs give identical
//! files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{compare_bounds, BoundComparison, BoundCurve};
use crate::config::{RunConfig, ScanKind};
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::estimator::{g_min_thermal_floor, sensitivity_curve, NoiseModel, SensitivityRow};
use crate::io::{self, SCHEMA_VERSION};
use crate::materials::CouplingChannel;
use crate::membrane::{center_modes, enumerate_modes, overlap_factor, MembraneSpec, ModeIndex};
use crate::montecarlo::{expected_bound, recover, synthesize_output, RecoveryResult, SimulationConfig};
use crate::noisebudget::{detection_bandwidth, NoiseBudget};
use crate::scanplan::{
    plan_array_campaign, plan_for_duration, plan_with, CampaignOptions, FixedStep, ScanPlan, StepModel, TunedMembrane,
};

/// Command-line overrides applied on top of a [`RunConfig`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub channel: Option<CouplingChannel>,
    pub multimode: bool,
}

impl RunOptions {
    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
    }

    fn channel(&self, cfg: &RunConfig) -> CouplingChannel {
        self.channel.unwrap_or(cfg.materials.channel)
    }
}

fn side_label(spec: &MembraneSpec) -> String {
    let cm = (spec.side * 1e2 * 1e6).round() / 1e6;
    format!("{cm}cm")
}

fn channel_suffix(channel: CouplingChannel) -> &'static str {
    match channel {
        CouplingChannel::BMinusL => "",
        CouplingChannel::B => "_b",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub side_cm: f64,
    pub f11_hz: f64,
    /// √S_xx^imp (m/√Hz).
    pub sqrt_sxx_imp: f64,
    /// On-resonance √S_aa^th (m s⁻²/√Hz).
    pub sqrt_saa_th: f64,
    /// Detection bandwidth Δω_det (rad/s).
    pub detection_bandwidth_rad_s: f64,
    pub fractional_bandwidth: f64,
    pub file: String,
}

/// Noise budget of the fundamental of every configured membrane.
pub fn run_budget(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<BudgetSummary>> {
    let out = opts.out_dir(cfg);
    let ro = cfg.readout()?;
    let grid_spec = cfg.grid.spec();
    let mut summaries = Vec::new();
    for spec in cfg.membranes()? {
        let w0 = spec.omega11();
        let grid = grid_spec.build(&[(w0, spec.q0)])?;
        let budget = NoiseBudget::compute(&spec, &ro, ModeIndex::FUNDAMENTAL, &grid)?;
        let dw = detection_bandwidth(&spec, &ro, ModeIndex::FUNDAMENTAL)?;
        let file = format!("budget_{}.csv", side_label(&spec));
        io::write_table(
            &out.join(&file),
            "budget",
            io::BUDGET_UNITS,
            budget.rows(),
            json!({ "side_cm": spec.side * 1e2, "mode": [1, 1], "power_mw": ro.power * 1e3 }),
        )?;
        let th = crate::noisebudget::thermal_psd(&spec, w0);
        summaries.push(BudgetSummary {
            side_cm: spec.side * 1e2,
            f11_hz: w0 / TWO_PI,
            sqrt_sxx_imp: ro.imprecision().sqrt(),
            sqrt_saa_th: th.sqrt(),
            detection_bandwidth_rad_s: dw,
            fractional_bandwidth: dw / w0,
            file,
        });
    }
    io::write_json(
        &out.join("budget_summary.json"),
        &json!({ "schema_version": SCHEMA_VERSION, "kind": "budget-summary", "membranes": summaries }),
    )?;
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub side_cm: f64,
    pub tau_label: String,
    pub tau_s: f64,
    pub channel: CouplingChannel,
    pub f12: f64,
    pub multimode: bool,
    pub mode_count: usize,
    pub f11_hz: f64,
    /// Bound at the fundamental.
    pub g_min_resonance: f64,
    /// Thermal-noise-only bound at the fundamental.
    pub g_thermal_floor: f64,
    pub f_best_hz: f64,
    pub g_best: f64,
    pub file: String,
}

/// Sensitivity curves for every membrane and integration time.
pub fn run_gmin(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<CurveSummary>> {
    let out = opts.out_dir(cfg);
    let ro = cfg.readout()?;
    let channel = opts.channel(cfg);
    let f12 = cfg.f12(Some(channel))?;
    let multimode = opts.multimode || cfg.gmin.multimode;
    let grid_spec = cfg.grid.spec();
    let times = cfg.integration_times()?;
    let mut summaries = Vec::new();
    for spec in cfg.membranes()? {
        let w0 = spec.omega11();
        let dm = cfg.dm.model(w0)?;
        let tau_dm = 2.0 * dm.q_dm / w0;
        let single_grid = grid_spec.build(&[(w0, spec.q0)])?;
        let modes = if multimode {
            let m = enumerate_modes(&spec, cfg.grid.mode_f_max_hz, cfg.grid.max_modes)?;
            Some(center_modes(&m))
        } else {
            None
        };
        let multi_grid = match &modes {
            Some(m) => Some(grid_spec.build(&m.iter().map(|m| (m.omega, spec.q0)).collect::<Vec<_>>())?),
            None => None,
        };
        for t in &times {
            let tau = t.seconds(tau_dm);
            let mut variants = vec![(NoiseModel::SingleMode(ModeIndex::FUNDAMENTAL), &single_grid, "")];
            if let (Some(m), Some(g)) = (&modes, &multi_grid) {
                variants.push((NoiseModel::Multimode(m), g, "_multimode"));
            }
            for (model, grid, suffix) in variants {
                let is_multi = matches!(model, NoiseModel::Multimode(_));
                let curve = sensitivity_curve(&spec, &ro, grid, f12, model, &dm, tau)?;
                let file = format!(
                    "sensitivity{}_{}_{}{}.csv",
                    channel_suffix(channel),
                    side_label(&spec),
                    t.label(),
                    suffix
                );
                io::write_table(
                    &out.join(&file),
                    "sensitivity",
                    io::SENSITIVITY_UNITS,
                    curve.rows(),
                    json!({
                        "side_cm": spec.side * 1e2,
                        "tau_s": tau,
                        "channel": channel,
                        "f12": f12,
                        "multimode": is_multi,
                    }),
                )?;
                let at_res = curve
                    .points
                    .iter()
                    .min_by(|a, b| (a.omega - w0).abs().total_cmp(&(b.omega - w0).abs()))
                    .expect("non-empty curve");
                let best = curve.best().expect("non-empty curve");
                let floor = g_min_thermal_floor(&spec, &dm, f12, overlap_factor(ModeIndex::FUNDAMENTAL), tau)?;
                summaries.push(CurveSummary {
                    side_cm: spec.side * 1e2,
                    tau_label: t.label(),
                    tau_s: tau,
                    channel,
                    f12,
                    multimode: is_multi,
                    mode_count: curve.mode_count,
                    f11_hz: w0 / TWO_PI,
                    g_min_resonance: at_res.g_min,
                    g_thermal_floor: floor.g_min,
                    f_best_hz: best.omega / TWO_PI,
                    g_best: best.g_min,
                    file,
                });
            }
        }
    }
    io::write_json(
        &out.join(format!("gmin_summary{}.json", channel_suffix(channel))),
        &json!({ "schema_version": SCHEMA_VERSION, "kind": "gmin-summary", "curves": summaries }),
    )?;
    Ok(summaries)
}

/// Compare one sensitivity CSV with each bound file; writes a JSON report
/// and a ratio CSV per overlapping bound.
pub fn run_bounds(sensitivity: &Path, bounds: &[PathBuf], out: &Path, channel: Option<CouplingChannel>) -> Result<Vec<BoundComparison>> {
    if bounds.is_empty() {
        return Err(Error::Config("bounds: give at least one bound file".into()));
    }
    let rows: Vec<SensitivityRow> = io::read_sensitivity_csv(sensitivity)?;
    let channel = match channel {
        Some(c) => c,
        None => {
            let side = io::sidecar_path(sensitivity);
            let from_meta = if side.exists() {
                let sc: io::Sidecar = io::read_json(&side)?;
                sc.meta.get("channel").and_then(|v| serde_json::from_value(v.clone()).ok())
            } else {
                None
            };
            from_meta.unwrap_or(CouplingChannel::BMinusL)
        }
    };
    let mut reports = Vec::new();
    for path in bounds {
        let bound = BoundCurve::read(path)?;
        let cmp = compare_bounds(&rows, channel, &bound);
        if !cmp.is_empty_overlap() {
            io::write_table(
                &out.join(format!("ratio_{}.csv", bound.label)),
                "bound-ratio",
                io::RATIO_UNITS,
                &cmp.points,
                json!({ "bound": bound.label, "note": bound.note }),
            )?;
        }
        reports.push(cmp);
    }
    let summary: Vec<_> = reports
        .iter()
        .map(|c| {
            json!({
                "label": c.label,
                "empty_overlap": c.is_empty_overlap(),
                "overlap_hz": c.overlap,
                "max_ratio": c.max_ratio,
                "max_ratio_f_hz": c.max_ratio_f_hz,
                "exceed_bands_hz": c.exceed_bands,
                "channel_mismatch": c.channel_mismatch,
            })
        })
        .collect();
    io::write_json(
        &out.join("bounds_report.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "bounds-report",
            "sensitivity": sensitivity.file_name().map(|s| s.to_string_lossy().into_owned()),
            "channel": channel,
            "bounds": summary,
        }),
    )?;
    Ok(reports)
}

/// Everything needed to reproduce and audit one injection/recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryManifest {
    pub schema_version: String,
    pub kind: String,
    pub seed: u64,
    pub config: RunConfig,
    pub simulation: SimulationConfig,
    pub samples: usize,
    pub actual_duration_s: f64,
    pub expected_bound: f64,
    pub result: RecoveryResult,
    pub series_file: Option<String>,
}

pub fn run_montecarlo(cfg: &RunConfig, opts: &RunOptions) -> Result<RecoveryManifest> {
    let out = opts.out_dir(cfg);
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.montecarlo.seed = seed;
    }
    let sim = cfg.simulation(opts.channel)?;
    let series = synthesize_output(&sim)?;
    let result = recover(&sim, &series)?;
    let series_file = if cfg.montecarlo.dump_series {
        let name = "series.f64".to_string();
        io::write_series(&out.join(&name), &series, sim.sample_rate, sim.seed)?;
        Some(name)
    } else {
        None
    };
    let manifest = RecoveryManifest {
        schema_version: SCHEMA_VERSION.into(),
        kind: "recovery".into(),
        seed: sim.seed,
        expected_bound: expected_bound(&sim)?,
        samples: series.len(),
        actual_duration_s: sim.actual_duration(),
        simulation: sim,
        config: cfg,
        result,
        series_file,
    };
    io::write_json(&out.join("montecarlo.json"), &manifest)?;
    Ok(manifest)
}

/// Result of the `scan` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanOutput {
    Single(ScanPlan),
    Campaign(crate::scanplan::CampaignPlan),
}

fn write_plan(out: &Path, name: &str, plan: &ScanPlan) -> Result<()> {
    io::write_table(
        &out.join(format!("{name}.csv")),
        "scan",
        io::SCAN_UNITS,
        plan.rows(),
        json!({ "total_time_s": plan.total_time, "warning": plan.warning }),
    )?;
    io::write_json(
        &out.join(format!("{name}.json")),
        &json!({ "schema_version": SCHEMA_VERSION, "kind": "scan-plan", "plan": plan }),
    )
}

pub fn run_scanplan(cfg: &RunConfig, opts: &RunOptions) -> Result<ScanOutput> {
    let out = opts.out_dir(cfg);
    let ro = cfg.readout()?;
    let specs = cfg.membranes()?;
    let sc = &cfg.scan;
    if sc.kind == ScanKind::Campaign {
        let w_ref = specs[0].omega11();
        let dm = cfg.dm.model(w_ref)?;
        let options = CampaignOptions {
            band: sc.band_hz.map(|(a, b)| (TWO_PI * a, TWO_PI * b)),
            harmonic_f_max: sc.harmonic_f_max_hz,
        };
        let campaign = plan_array_campaign(&specs, &ro, &dm, sc.fractional_sweep, options)?;
        for (spec, plan) in specs.iter().zip(&campaign.plans) {
            write_plan(&out, &format!("scan_{}", side_label(spec)), plan)?;
        }
        io::write_json(
            &out.join("campaign.json"),
            &json!({ "schema_version": SCHEMA_VERSION, "kind": "campaign", "campaign": campaign }),
        )?;
        return Ok(ScanOutput::Campaign(campaign));
    }

    let spec = specs[0];
    let w11 = spec.omega11();
    let dm = cfg.dm.model(w11)?;
    let start = sc.f_start_hz.map_or(w11, |f| TWO_PI * f);
    let tuned = TunedMembrane { spec, readout: ro, dm };
    let model: Box<dyn StepModel> = match (sc.step_hz, sc.dwell_s) {
        (Some(step), Some(dwell)) => Box::new(FixedStep {
            width: TWO_PI * step,
            dwell,
        }),
        (None, None) => Box::new(tuned),
        _ => return Err(Error::Config("scan: set both step_hz and dwell_s, or neither".into())),
    };
    let plan = match sc.kind {
        ScanKind::Band => {
            let end = sc
                .f_end_hz
                .ok_or_else(|| Error::Config("scan: kind = \"band\" needs f_end_hz".into()))?;
            let tunable = cfg.tuning_limit().map(|l| (w11, w11 * (1.0 + l)));
            plan_with(model.as_ref(), start, TWO_PI * end, tunable)?
        }
        _ => plan_for_duration(model.as_ref(), start, sc.budget_s)?,
    };
    write_plan(&out, "scan", &plan)?;
    Ok(ScanOutput::Single(plan))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub i: u32,
    pub j: u32,
    pub f_hz: f64,
    pub beta: f64,
    pub m_kg: f64,
}

/// Mode tables for every configured membrane; returns the mode counts.
pub fn run_modes(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<(String, usize)>> {
    let out = opts.out_dir(cfg);
    let mut counts = Vec::new();
    for spec in cfg.membranes()? {
        let modes = enumerate_modes(&spec, cfg.grid.mode_f_max_hz, cfg.grid.max_modes)?;
        let file = format!("modes_{}.csv", side_label(&spec));
        io::write_table(
            &out.join(&file),
            "modes",
            io::MODE_UNITS,
            modes.iter().map(|m| ModeRow {
                i: m.index.i,
                j: m.index.j,
                f_hz: m.frequency_hz(),
                beta: m.beta,
                m_kg: m.mass,
            }),
            json!({ "side_cm": spec.side * 1e2, "f_max_hz": cfg.grid.mode_f_max_hz }),
        )?;
        counts.push((file, modes.len()));
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_labels() {
        assert_eq!(side_label(&MembraneSpec::with_side(0.025)), "2.5cm");
        assert_eq!(side_label(&MembraneSpec::with_side(0.2)), "20cm");
    }

    #[test]
    fn scan_needs_step_and_dwell_together() {
        let mut cfg = RunConfig::default();
        cfg.scan.step_hz = Some(0.2);
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out: Some(dir.path().into()),
            ..RunOptions::default()
        };
        assert_eq!(run_scanplan(&cfg, &opts).unwrap_err().exit_code(), 2);
    }
}
