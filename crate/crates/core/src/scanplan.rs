//! Scan planning: stepping a tunable resonance across a band one detection
//! bandwidth at a time, dwelling one coherence time per step, and combining
//! several membranes into a campaign.

use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::dmfield::DmModel;
use crate::error::{Error, Result};
use crate::membrane::{mode_frequency, MembraneSpec, ModeIndex};
use crate::noisebudget::{detection_bandwidth, OpticalReadout};

/// Default fractional tuning range above the untuned fundamental.
pub const DEFAULT_TUNING_LIMIT: f64 = 0.10;

/// Step width and dwell time as functions of the resonance frequency.
pub trait StepModel {
    /// Width of the band covered by one step centered at `omega` (rad/s).
    fn step_width(&self, omega: f64) -> Result<f64>;
    /// Integration time per step at `omega` (s).
    fn dwell(&self, omega: f64) -> f64;
}

/// A membrane retuned by stress: mass fixed, thermal noise following the
/// resonance frequency. Step = detection bandwidth, dwell = coherence time.
#[derive(Debug, Clone, Copy)]
pub struct TunedMembrane {
    pub spec: MembraneSpec,
    pub readout: OpticalReadout,
    pub dm: DmModel,
}

impl StepModel for TunedMembrane {
    fn step_width(&self, omega: f64) -> Result<f64> {
        detection_bandwidth(&self.spec.tuned_to(omega), &self.readout, ModeIndex::FUNDAMENTAL)
    }

    fn dwell(&self, omega: f64) -> f64 {
        2.0 * self.dm.q_dm / omega
    }
}

/// Constant step and dwell.
#[derive(Debug, Clone, Copy)]
pub struct FixedStep {
    /// Step width (rad/s).
    pub width: f64,
    /// Dwell (s).
    pub dwell: f64,
}

impl StepModel for FixedStep {
    fn step_width(&self, _omega: f64) -> Result<f64> {
        Ok(self.width)
    }

    fn dwell(&self, _omega: f64) -> f64 {
        self.dwell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanStep {
    /// Center (rad/s).
    pub center: f64,
    /// Width covered (rad/s).
    pub width: f64,
    pub dwell: f64,
    /// Time elapsed at the end of this step (s).
    pub cumulative: f64,
}

/// One exported row of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub step_index: usize,
    pub f_center_hz: f64,
    pub bandwidth_hz: f64,
    pub dwell_s: f64,
    pub cumulative_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPlan {
    pub omega_start: f64,
    pub omega_end: f64,
    pub steps: Vec<ScanStep>,
    /// Σ dwell (s).
    pub total_time: f64,
    /// Covered width over requested width.
    pub fractional_coverage: f64,
    /// Set when the requested band was clipped to the tunable range.
    pub warning: Option<String>,
}

impl ScanPlan {
    pub fn is_truncated(&self) -> bool {
        self.warning.is_some()
    }

    /// Total width tiled by the steps (rad/s).
    pub fn covered_width(&self) -> f64 {
        self.steps.iter().map(|s| s.width).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = ScanRow> + '_ {
        self.steps.iter().enumerate().map(|(i, s)| ScanRow {
            step_index: i,
            f_center_hz: s.center / TWO_PI,
            bandwidth_hz: s.width / TWO_PI,
            dwell_s: s.dwell,
            cumulative_s: s.cumulative,
        })
    }

    /// `(lo, hi)` intervals covered by the steps (rad/s).
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.steps
            .iter()
            .map(|s| (s.center - s.width / 2.0, s.center + s.width / 2.0))
            .collect()
    }
}

/// Tile `[omega_start, omega_end]` from the left edge with steps whose width is
/// evaluated at their own center. The last step is narrowed to end exactly at
/// `omega_end` but still dwells a full period. `omega_start == omega_end` gives
/// one step centered there.
///
/// `tunable` restricts the band to `(lo, hi)`; anything outside is dropped and
/// the plan carries a warning.
pub fn plan_with<M: StepModel + ?Sized>(
    model: &M,
    omega_start: f64,
    omega_end: f64,
    tunable: Option<(f64, f64)>,
) -> Result<ScanPlan> {
    if !(omega_start > 0.0 && omega_end >= omega_start && omega_end.is_finite()) {
        return Err(Error::invalid(format!(
            "scan band [{omega_start}, {omega_end}] rad/s is not a positive interval"
        )));
    }
    let requested = omega_end - omega_start;
    let (mut lo, mut hi) = (omega_start, omega_end);
    let mut warning = None;
    if let Some((t_lo, t_hi)) = tunable {
        if lo < t_lo * (1.0 - 1e-12) || hi > t_hi * (1.0 + 1e-12) {
            lo = lo.max(t_lo);
            hi = hi.min(t_hi);
            warning = Some(format!(
                "band [{:.3}, {:.3}] Hz exceeds the tunable range [{:.3}, {:.3}] Hz; plan truncated",
                omega_start / TWO_PI,
                omega_end / TWO_PI,
                t_lo / TWO_PI,
                t_hi / TWO_PI
            ));
        }
    }
    let mut steps = Vec::new();
    let mut elapsed = 0.0;
    if requested == 0.0 && warning.is_none() {
        let width = model.step_width(lo)?;
        let dwell = model.dwell(lo);
        steps.push(ScanStep {
            center: lo,
            width,
            dwell,
            cumulative: dwell,
        });
        return Ok(ScanPlan {
            omega_start,
            omega_end,
            steps,
            total_time: dwell,
            fractional_coverage: 1.0,
            warning,
        });
    }
    let mut left = lo;
    while left < hi {
        let mut width = model.step_width(left)?;
        for _ in 0..3 {
            width = model.step_width(left + width / 2.0)?;
        }
        if !(width > 0.0) {
            return Err(Error::invalid("step width must be positive"));
        }
        let right = (left + width).min(hi);
        let width = right - left;
        let center = left + width / 2.0;
        let dwell = model.dwell(center);
        elapsed += dwell;
        steps.push(ScanStep {
            center,
            width,
            dwell,
            cumulative: elapsed,
        });
        left = right;
    }
    let covered: f64 = steps.iter().map(|s| s.width).sum();
    Ok(ScanPlan {
        omega_start,
        omega_end,
        steps,
        total_time: elapsed,
        fractional_coverage: if requested > 0.0 { covered / requested } else { 0.0 },
        warning,
    })
}

/// Stress-tuned scan of the fundamental of `spec` over `[omega_start, omega_end]`
/// with the default tuning range `[ω11, ω11 (1 + 10%)]`.
pub fn plan_scan(
    spec: &MembraneSpec,
    ro: &OpticalReadout,
    dm_template: &DmModel,
    omega_start: f64,
    omega_end: f64,
) -> Result<ScanPlan> {
    plan_scan_with_limit(spec, ro, dm_template, omega_start, omega_end, Some(DEFAULT_TUNING_LIMIT))
}

/// As [`plan_scan`] with an explicit fractional tuning limit; `None` lifts it.
pub fn plan_scan_with_limit(
    spec: &MembraneSpec,
    ro: &OpticalReadout,
    dm_template: &DmModel,
    omega_start: f64,
    omega_end: f64,
    tuning_limit: Option<f64>,
) -> Result<ScanPlan> {
    spec.validate()?;
    ro.validate()?;
    let model = TunedMembrane {
        spec: *spec,
        readout: *ro,
        dm: *dm_template,
    };
    let w11 = spec.omega11();
    let tunable = tuning_limit.map(|f| (w11, w11 * (1.0 + f)));
    plan_with(&model, omega_start, omega_end, tunable)
}

/// Steps taken from `omega_start` upward until the time budget is spent; only
/// steps whose full dwell fits are kept.
pub fn plan_for_duration<M: StepModel + ?Sized>(model: &M, omega_start: f64, budget_s: f64) -> Result<ScanPlan> {
    if !(omega_start > 0.0 && budget_s > 0.0) {
        return Err(Error::invalid("scan needs a positive start frequency and time budget"));
    }
    let mut steps = Vec::new();
    let mut left = omega_start;
    let mut elapsed = 0.0;
    loop {
        let mut width = model.step_width(left)?;
        for _ in 0..3 {
            width = model.step_width(left + width / 2.0)?;
        }
        let center = left + width / 2.0;
        let dwell = model.dwell(center);
        if elapsed + dwell > budget_s * (1.0 + 1e-12) {
            break;
        }
        elapsed += dwell;
        steps.push(ScanStep {
            center,
            width,
            dwell,
            cumulative: elapsed,
        });
        left += width;
    }
    Ok(ScanPlan {
        omega_start,
        omega_end: left,
        steps,
        total_time: elapsed,
        fractional_coverage: 1.0,
        warning: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    /// Target band (rad/s).
    pub band: (f64, f64),
    /// Fraction of the band covered by fundamental scans.
    pub fundamental_fraction: f64,
    /// Fraction covered once higher-order resonance windows are added.
    pub with_harmonics_fraction: f64,
    /// Merged covered intervals inside the band (rad/s).
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPlan {
    pub plans: Vec<ScanPlan>,
    pub coverage: CoverageSummary,
    /// Membranes run concurrently: the longest plan (s).
    pub wall_clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignOptions {
    /// Target band (rad/s); defaults to the union of the sweeps.
    pub band: Option<(f64, f64)>,
    /// Count higher (odd, odd) resonances up to this frequency (Hz) as extra
    /// coverage windows while each fundamental step dwells.
    pub harmonic_f_max: Option<f64>,
}

/// Scan each membrane's fundamental from `ω11` up by `fractional_sweep`.
pub fn plan_array_campaign(
    membranes: &[MembraneSpec],
    ro: &OpticalReadout,
    dm_template: &DmModel,
    fractional_sweep: f64,
    options: CampaignOptions,
) -> Result<CampaignPlan> {
    if membranes.is_empty() {
        return Err(Error::invalid("campaign needs at least one membrane"));
    }
    if !(fractional_sweep >= 0.0) {
        return Err(Error::invalid("fractional sweep must be non-negative"));
    }
    let mut plans = Vec::with_capacity(membranes.len());
    let mut fundamental = Vec::new();
    let mut harmonic = Vec::new();
    for spec in membranes {
        let w11 = spec.omega11();
        let plan = plan_scan_with_limit(spec, ro, dm_template, w11, w11 * (1.0 + fractional_sweep), None)?;
        fundamental.extend(plan.intervals());
        if let Some(f_max) = options.harmonic_f_max {
            let ladder = harmonic_ladder(spec, TWO_PI * f_max);
            for step in &plan.steps {
                let tuned = spec.tuned_to(step.center);
                for &idx in &ladder {
                    let w = mode_frequency(&tuned, idx);
                    let width = detection_bandwidth(&tuned, ro, idx)?;
                    harmonic.push((w - width / 2.0, w + width / 2.0));
                }
            }
        }
        plans.push(plan);
    }
    let band = options.band.unwrap_or_else(|| {
        let lo = fundamental.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
        let hi = fundamental.iter().map(|i| i.1).fold(0.0, f64::max);
        (lo, hi)
    });
    if !(band.1 > band.0) {
        return Err(Error::invalid("campaign band must have positive width"));
    }
    let fund_cover = covered_in_band(&fundamental, band);
    let mut all = fundamental;
    all.extend(harmonic);
    let merged = clip_and_merge(&all, band);
    let total = covered_in_band(&all, band);
    let wall_clock = plans.iter().map(|p| p.total_time).fold(0.0, f64::max);
    Ok(CampaignPlan {
        plans,
        coverage: CoverageSummary {
            band,
            fundamental_fraction: fund_cover / (band.1 - band.0),
            with_harmonics_fraction: total / (band.1 - band.0),
            intervals: merged,
        },
        wall_clock,
    })
}

/// Center-coupled modes above the fundamental up to `omega_max` (untuned).
fn harmonic_ladder(spec: &MembraneSpec, omega_max: f64) -> Vec<ModeIndex> {
    let ratio = omega_max / spec.omega11();
    let n = (2.0 * ratio * ratio).sqrt().floor() as u32;
    let mut out = Vec::new();
    for i in (1..=n).step_by(2) {
        for j in (1..=n).step_by(2) {
            let idx = ModeIndex { i, j };
            if idx != ModeIndex::FUNDAMENTAL && idx.frequency_ratio_sq() <= ratio * ratio {
                out.push(idx);
            }
        }
    }
    out
}

/// Union of `intervals` intersected with `band`, as sorted disjoint intervals.
pub fn clip_and_merge(intervals: &[(f64, f64)], band: (f64, f64)) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = intervals
        .iter()
        .map(|&(a, b)| (a.max(band.0), b.min(band.1)))
        .filter(|(a, b)| b > a)
        .collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match merged.last_mut() {
            Some(last) if a <= last.1 * (1.0 + 1e-12) => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Total width of the union of `intervals` inside `band`.
pub fn covered_in_band(intervals: &[(f64, f64)], band: (f64, f64)) -> f64 {
    clip_and_merge(intervals, band).iter().map(|(a, b)| b - a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn single_point_band() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let dm = DmModel::at_omega(spec.omega11()).unwrap();
        let w = spec.omega11();
        let plan = plan_scan(&spec, &ro, &dm, w, w).unwrap();
        assert_eq!(plan.steps.len(), 1);
        assert!(rel(plan.total_time, dm.coherence_time()) < 1e-12);
        assert!(!plan.is_truncated());
    }

    #[test]
    fn tiling_is_exact() {
        let model = FixedStep { width: 0.7, dwell: 3.0 };
        let plan = plan_with(&model, 100.0, 110.0, None).unwrap();
        assert_eq!(plan.steps.len(), 15);
        assert!(rel(plan.covered_width(), 10.0) < 1e-12);
        assert!(rel(plan.total_time, 45.0) < 1e-12);
        let iv = plan.intervals();
        for w in iv.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_warns() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let dm = DmModel::at_omega(spec.omega11()).unwrap();
        let w = spec.omega11();
        let plan = plan_scan(&spec, &ro, &dm, w, 1.2 * w).unwrap();
        assert!(plan.is_truncated());
        assert!(rel(plan.fractional_coverage, 0.5) < 1e-9);
    }

    #[test]
    fn day_long_fixed_scan() {
        let model = FixedStep {
            width: TWO_PI * 0.2,
            dwell: 90.0,
        };
        let plan = plan_for_duration(&model, TWO_PI * 2000.0, 86_400.0).unwrap();
        assert_eq!(plan.steps.len(), 960);
        assert!(rel(plan.covered_width() / TWO_PI, 192.0) < 1e-9);
    }

    #[test]
    fn interval_union() {
        let v = [(0.0, 1.0), (0.5, 2.0), (3.0, 4.0), (-1.0, -0.5)];
        assert_eq!(clip_and_merge(&v, (0.0, 3.5)), vec![(0.0, 2.0), (3.0, 3.5)]);
        assert!((covered_in_band(&v, (0.0, 3.5)) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn zero_sweep_campaign_covers_one_bandwidth() {
        let spec = MembraneSpec::with_side(0.2);
        let ro = OpticalReadout::default();
        let dm = DmModel::at_omega(spec.omega11()).unwrap();
        let w = spec.omega11();
        let band = (0.95 * w, 1.05 * w);
        let c = plan_array_campaign(
            &[spec],
            &ro,
            &dm,
            0.0,
            CampaignOptions {
                band: Some(band),
                harmonic_f_max: None,
            },
        )
        .unwrap();
        let bw = detection_bandwidth(&spec, &ro, ModeIndex::FUNDAMENTAL).unwrap();
        assert!(rel(c.coverage.fundamental_fraction, bw / (band.1 - band.0)) < 1e-3);
    }
}
