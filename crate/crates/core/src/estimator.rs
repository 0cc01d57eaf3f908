//! Periodogram estimation and the coupling-strength bound.
//!
//! Periodograms use non-overlapping rectangular segments and single-sided
//! normalization, so a bin value is a PSD: `P_k = 2 |X_k|² / (f_s n)` for
//! interior bins and `|X_k|² / (f_s n)` at DC and Nyquist.
//!
//! The bound on `g` sets the DM peak equal to the detector noise and improves
//! as `(τ_DM/τ)^{1/2}` while a single periodogram is still shorter than the
//! coherence time, then as `(τ_DM/τ)^{1/4}` once independent coherence-time
//! segments are averaged.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::constants::{K_B, TWO_PI};
use crate::dmfield::{mass_from_omega, DmModel};
use crate::error::{Error, Result};
use crate::membrane::{MembraneSpec, Mode, ModeIndex};
use crate::noisebudget::{detector_noise, multimode_effective_noise, OpticalReadout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramEstimate {
    /// Bin frequencies (Hz), `k / T` for `k = 0..=n/2`.
    pub freq_hz: Vec<f64>,
    /// Segment-averaged single-sided PSD.
    pub power: Vec<f64>,
    pub segments: usize,
    /// Segment length (s).
    pub segment_duration: f64,
}

impl PeriodogramEstimate {
    pub fn bin_width_hz(&self) -> f64 {
        1.0 / self.segment_duration
    }

    /// Index of the bin nearest `f_hz`.
    pub fn nearest_bin(&self, f_hz: f64) -> usize {
        let k = (f_hz * self.segment_duration).round();
        (k.max(0.0) as usize).min(self.power.len() - 1)
    }

    pub fn omega(&self, k: usize) -> f64 {
        TWO_PI * self.freq_hz[k]
    }
}

/// FFT plan cache for repeated periodograms of the same segment length.
pub struct SegmentTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SegmentTransform {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        SegmentTransform { n, fft }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Single-sided periodogram of one segment of `n` samples.
    pub fn power(&self, segment: &[f64], sample_rate: f64) -> Vec<f64> {
        debug_assert_eq!(segment.len(), self.n);
        let mut buf: Vec<Complex64> = segment.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        let n = self.n;
        let scale = 1.0 / (sample_rate * n as f64);
        (0..=n / 2)
            .map(|k| {
                let edge = k == 0 || (n % 2 == 0 && k == n / 2);
                let factor = if edge { 1.0 } else { 2.0 };
                factor * buf[k].norm_sqr() * scale
            })
            .collect()
    }
}

/// Average the single-sided periodograms of consecutive non-overlapping
/// segments of length `segment_duration`. Trailing samples that do not fill a
/// segment are dropped.
pub fn periodogram(series: &[f64], sample_rate: f64, segment_duration: f64) -> Result<PeriodogramEstimate> {
    if !(sample_rate > 0.0 && segment_duration > 0.0) {
        return Err(Error::invalid("sample rate and segment duration must be positive"));
    }
    let n = (segment_duration * sample_rate).round() as usize;
    if n < 2 {
        return Err(Error::invalid("segment must contain at least two samples"));
    }
    if series.len() < n {
        return Err(Error::invalid(format!(
            "series of {} samples is shorter than one segment of {n}",
            series.len()
        )));
    }
    let transform = SegmentTransform::new(n);
    let per_segment: Vec<Vec<f64>> = series
        .par_chunks_exact(n)
        .map(|seg| transform.power(seg, sample_rate))
        .collect();
    Ok(average_segments(&per_segment, n, sample_rate))
}

pub(crate) fn average_segments(per_segment: &[Vec<f64>], n: usize, sample_rate: f64) -> PeriodogramEstimate {
    let segments = per_segment.len();
    let mut power = vec![0.0; n / 2 + 1];
    for p in per_segment {
        for (acc, v) in power.iter_mut().zip(p) {
            *acc += v;
        }
    }
    for v in &mut power {
        *v /= segments as f64;
    }
    let duration = n as f64 / sample_rate;
    PeriodogramEstimate {
        freq_hz: (0..=n / 2).map(|k| k as f64 / duration).collect(),
        power,
        segments,
        segment_duration: duration,
    }
}

/// Per-bin standard deviation of the averaged estimate, `mean / √N`.
pub fn noise_floor_sigma(est: &PeriodogramEstimate) -> Vec<f64> {
    let root_n = (est.segments.max(1) as f64).sqrt();
    est.power.iter().map(|p| p / root_n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Integration time up to one coherence time.
    SubCoherence,
    /// Averaging over several coherence times.
    SuperCoherence,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SubCoherence => "sub-coherence",
            Regime::SuperCoherence => "super-coherence",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sub-coherence" => Ok(Regime::SubCoherence),
            "super-coherence" => Ok(Regime::SuperCoherence),
            _ => Err(Error::invalid(format!("unknown regime '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    /// DM Compton frequency (rad/s).
    pub omega: f64,
    pub g_min: f64,
    pub regime: Regime,
}

/// Integration-time factor of the bound and its regime.
pub fn time_factor(tau: f64, tau_dm: f64) -> (f64, Regime) {
    let r = tau_dm / tau;
    if tau <= tau_dm {
        (r.sqrt(), Regime::SubCoherence)
    } else {
        (r.powf(0.25), Regime::SuperCoherence)
    }
}

/// Smallest detectable coupling at `omega` for detector noise `saa_det`
/// ((m/s²)²/Hz) after integrating for `tau` seconds.
///
/// `τ_DM` is evaluated at `omega` with the quality factor of `dm`.
pub fn g_min(
    omega: f64,
    saa_det: f64,
    tau: f64,
    dm: &DmModel,
    f12: f64,
    beta: f64,
) -> Result<SensitivityPoint> {
    for (name, v) in [("omega", omega), ("saa_det", saa_det), ("tau", tau), ("f12", f12)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("g_min needs positive {name}, got {v}")));
        }
    }
    if !(beta.is_finite() && beta != 0.0) {
        return Err(Error::invalid("g_min needs a nonzero overlap factor"));
    }
    let tau_dm = 2.0 * dm.q_dm / omega;
    let a0 = dm.force_scale().a0;
    let (factor, regime) = time_factor(tau, tau_dm);
    let g = 3f64.sqrt() / (beta.abs() * f12 * a0) * (saa_det / tau_dm).sqrt() * factor;
    Ok(SensitivityPoint {
        omega,
        g_min: g,
        regime,
    })
}

/// Thermal-noise-only bound on the fundamental resonance,
/// `√(3/2)/(β f12 a0) · √(4 k_B T ω0² / (m Q0 Q_DM))` times the time factor.
pub fn g_min_thermal_floor(
    spec: &MembraneSpec,
    dm: &DmModel,
    f12: f64,
    beta: f64,
    tau: f64,
) -> Result<SensitivityPoint> {
    spec.validate()?;
    if !(tau > 0.0 && f12 > 0.0 && beta != 0.0) {
        return Err(Error::invalid("thermal-floor bound needs positive tau, f12 and nonzero beta"));
    }
    let w0 = spec.omega11();
    let tau_dm = 2.0 * dm.q_dm / w0;
    let a0 = dm.force_scale().a0;
    let inner = 4.0 * K_B * spec.temperature * w0 * w0 / (spec.effective_mass() * spec.q0 * dm.q_dm);
    let (factor, regime) = time_factor(tau, tau_dm);
    Ok(SensitivityPoint {
        omega: w0,
        g_min: 1.5f64.sqrt() / (beta.abs() * f12 * a0) * inner.sqrt() * factor,
        regime,
    })
}

/// Which noise model a sensitivity curve uses.
#[derive(Debug, Clone)]
pub enum NoiseModel<'a> {
    /// One mode read out on its own; the bound uses its overlap factor.
    SingleMode(ModeIndex),
    /// Multimode effective noise; overlap already folded in, bound uses β = 1.
    Multimode(&'a [Mode]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub points: Vec<SensitivityPoint>,
    /// Number of center-coupled modes in the noise model.
    pub mode_count: usize,
    /// Integration time (s).
    pub tau: f64,
    pub f12: f64,
}

/// One exported row of a sensitivity curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub f_hz: f64,
    pub mass_ev: f64,
    pub g_min: f64,
    pub regime: Regime,
    pub mode_count: usize,
}

impl SensitivityCurve {
    pub fn rows(&self) -> impl Iterator<Item = SensitivityRow> + '_ {
        self.points.iter().map(move |p| SensitivityRow {
            f_hz: p.omega / TWO_PI,
            mass_ev: mass_from_omega(p.omega).unwrap_or(f64::NAN),
            g_min: p.g_min,
            regime: p.regime,
            mode_count: self.mode_count,
        })
    }

    /// Point with the smallest bound.
    pub fn best(&self) -> Option<&SensitivityPoint> {
        self.points.iter().min_by(|a, b| a.g_min.total_cmp(&b.g_min))
    }
}

/// Bound on `g` at every grid frequency (rad/s), using the noise-only detector
/// spectrum. The DM halo parameters come from `dm_template`; its mass is
/// replaced by each grid frequency.
pub fn sensitivity_curve(
    spec: &MembraneSpec,
    ro: &OpticalReadout,
    grid: &[f64],
    f12: f64,
    model: NoiseModel<'_>,
    dm_template: &DmModel,
    tau: f64,
) -> Result<SensitivityCurve> {
    spec.validate()?;
    ro.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("empty frequency grid"));
    }
    let mode_count = match &model {
        NoiseModel::SingleMode(_) => 1,
        NoiseModel::Multimode(modes) => modes.iter().filter(|m| m.beta != 0.0).count(),
    };
    let points = grid
        .par_iter()
        .map(|&w| {
            let (saa, beta) = match &model {
                NoiseModel::SingleMode(idx) => {
                    (detector_noise(spec, ro, *idx, w), crate::membrane::overlap_factor(*idx))
                }
                NoiseModel::Multimode(modes) => (multimode_effective_noise(spec, ro, modes, w)?, 1.0),
            };
            g_min(w, saa, tau, dm_template, f12, beta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityCurve {
        points,
        mode_count,
        tau,
        f12,
    })
}

/// Least-squares Lorentzian `A / (1 + ((ω − ω_c)/γ)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub peak: f64,
    /// Center (rad/s).
    pub center: f64,
    /// Half width at half maximum (rad/s).
    pub hwhm: f64,
}

impl LorentzianFit {
    /// `ω_c / FWHM`.
    pub fn quality_factor(&self) -> f64 {
        self.center / (2.0 * self.hwhm)
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let x = (omega - self.center) / self.hwhm;
        self.peak / (1.0 + x * x)
    }
}

/// Fit a Lorentzian to `(omega, power)` by Levenberg–Marquardt, starting from
/// `guess`. The center is fitted relative to the guess to keep the problem
/// well conditioned at large `ω / γ`.
pub fn fit_lorentzian(omega: &[f64], power: &[f64], guess: LorentzianFit) -> Result<LorentzianFit> {
    if omega.len() != power.len() || omega.len() < 4 {
        return Err(Error::invalid("Lorentzian fit needs at least four matching points"));
    }
    let w_ref = guess.center;
    let scale = guess.peak.abs().max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = omega.iter().map(|w| w - w_ref).collect();
    let ys: Vec<f64> = power.iter().map(|p| p / scale).collect();
    // p = [A, shift, γ]
    let mut p = [1.0, 0.0, guess.hwhm];
    let cost = |p: &[f64; 3]| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let u = (x - p[1]) / p[2];
                let r = p[0] / (1.0 + u * u) - y;
                r * r
            })
            .sum()
    };
    let mut lambda = 1e-3;
    let mut current = cost(&p);
    for _ in 0..500 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (x, y) in xs.iter().zip(&ys) {
            let u = (x - p[1]) / p[2];
            let d = 1.0 + u * u;
            let model = p[0] / d;
            let grad = [
                1.0 / d,
                2.0 * p[0] * u / (p[2] * d * d),
                2.0 * p[0] * u * u / (p[2] * d * d),
            ];
            let r = model - y;
            for a in 0..3 {
                jtr[a] += grad[a] * r;
                for b in 0..3 {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] *= 1.0 + lambda;
            }
            let Some(step) = solve3(m, jtr.map(|v| -v)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], (p[2] + step[2]).abs()];
            let c = cost(&trial);
            if c < current {
                let converged = (current - c) <= 1e-14 * current;
                p = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(p.iter().all(|v| v.is_finite()) && p[2] > 0.0) {
        return Err(Error::invalid("Lorentzian fit diverged"));
    }
    Ok(LorentzianFit {
        peak: p[0] * scale,
        center: w_ref + p[1],
        hwhm: p[2],
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::YEAR;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn tone_at_bin_center() {
        let fs = 1000.0;
        let t = 2.0;
        let n = (fs * t) as usize;
        let a = 3.0;
        let f = 125.0;
        let x: Vec<f64> = (0..n).map(|i| a * (TWO_PI * f * i as f64 / fs + 0.3).cos()).collect();
        let est = periodogram(&x, fs, t).unwrap();
        let k = est.nearest_bin(f);
        assert!(rel(est.power[k], a * a / 2.0 * t) < 1e-10);
        // Parseval: Σ P Δf = mean square
        let total: f64 = est.power.iter().sum::<f64>() * est.bin_width_hz();
        assert!(rel(total, a * a / 2.0) < 1e-10);
    }

    #[test]
    fn dc_series_lands_in_bin_zero() {
        let x = vec![2.5; 1000];
        let est = periodogram(&x, 100.0, 10.0).unwrap();
        assert!(est.power[0] > 0.0);
        assert!(est.power[1..].iter().all(|&p| p < 1e-20 * est.power[0]));
        assert!(rel(est.power[0] * est.bin_width_hz(), 2.5 * 2.5) < 1e-12);
    }

    #[test]
    fn too_short_series() {
        assert!(periodogram(&[1.0; 10], 100.0, 1.0).is_err());
    }

    #[test]
    fn white_noise_level_and_scatter() {
        let fs = 200.0;
        let s0: f64 = 4.0e-3;
        let sigma = (s0 * fs / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n_seg = 400;
        let seg = 1.0;
        let x: Vec<f64> = (0..(n_seg as f64 * seg * fs) as usize)
            .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let est = periodogram(&x, fs, seg).unwrap();
        assert_eq!(est.segments, n_seg);
        let interior = &est.power[1..est.power.len() - 1];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        assert!(rel(mean, s0) < 2.0 / (n_seg as f64).sqrt());
        let sig = noise_floor_sigma(&est);
        assert!(rel(sig[10], est.power[10] / 20.0) < 1e-14);
    }

    #[test]
    fn sigma_matches_mean_for_single_segment() {
        let est = PeriodogramEstimate {
            freq_hz: vec![0.0, 1.0],
            power: vec![2.0, 3.0],
            segments: 1,
            segment_duration: 1.0,
        };
        assert_eq!(noise_floor_sigma(&est), est.power);
    }

    #[test]
    fn golden_bounds_10cm() {
        let spec = MembraneSpec::default();
        let w0 = spec.omega11();
        let dm = DmModel::at_omega(w0).unwrap();
        assert!(rel(dm.coherence_time(), 39.6293) < 1e-5);
        let s_th = crate::noisebudget::thermal_psd(&spec, w0);
        let beta = crate::membrane::overlap_factor(ModeIndex::FUNDAMENTAL);
        let at_tau = g_min(w0, s_th, dm.coherence_time(), &dm, 0.053, beta).unwrap();
        assert!(rel(at_tau.g_min, 2.615_575_20e-23) < 1e-6, "{}", at_tau.g_min);
        let yr = g_min(w0, s_th, YEAR, &dm, 0.053, beta).unwrap();
        assert!(rel(yr.g_min, 8.755_787_5e-25) < 1e-6, "{}", yr.g_min);
        assert_eq!(yr.regime, Regime::SuperCoherence);
        let floor = g_min_thermal_floor(&spec, &dm, 0.053, beta, YEAR).unwrap();
        assert!(rel(floor.g_min, yr.g_min) < 1e-12);
    }

    #[test]
    fn golden_thermal_floor_20cm() {
        let spec = MembraneSpec::with_side(0.2);
        let dm = DmModel::at_omega(spec.omega11()).unwrap();
        let beta = crate::membrane::overlap_factor(ModeIndex::FUNDAMENTAL);
        let p = g_min_thermal_floor(&spec, &dm, 0.053, beta, YEAR).unwrap();
        assert!(rel(p.g_min, 2.603_111_2e-25) < 1e-6, "{}", p.g_min);
    }

    #[test]
    fn branch_continuity() {
        let dm = DmModel::at_omega(1e4).unwrap();
        let tau_dm = 2.0 * dm.q_dm / 1e4;
        let below = g_min(1e4, 1e-24, tau_dm * (1.0 - 1e-12), &dm, 0.05, 1.6).unwrap();
        let at = g_min(1e4, 1e-24, tau_dm, &dm, 0.05, 1.6).unwrap();
        let above = g_min(1e4, 1e-24, tau_dm * (1.0 + 1e-12), &dm, 0.05, 1.6).unwrap();
        assert!(rel(below.g_min, at.g_min) < 1e-11);
        assert!(rel(above.g_min, at.g_min) < 1e-11);
        assert_eq!(at.regime, Regime::SubCoherence);
    }

    #[test]
    fn curve_minimum_on_resonance() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let w0 = spec.omega11();
        let grid: Vec<f64> = (-50..=50).map(|k| w0 * (1.0 + k as f64 * 1e-7)).collect();
        let dm = DmModel::at_omega(w0).unwrap();
        let c = sensitivity_curve(&spec, &ro, &grid, 0.053, NoiseModel::SingleMode(ModeIndex::FUNDAMENTAL), &dm, YEAR)
            .unwrap();
        assert_eq!(c.best().unwrap().omega, w0);
        assert!(sensitivity_curve(&spec, &ro, &[], 0.053, NoiseModel::SingleMode(ModeIndex::FUNDAMENTAL), &dm, YEAR).is_err());
    }

    #[test]
    fn lorentzian_fit_recovers_exact_shape() {
        let truth = LorentzianFit {
            peak: 2.5e-20,
            center: 1256.637,
            hwhm: 2.1,
        };
        let w: Vec<f64> = (-60..=60).map(|k| truth.center + 0.17 * k as f64).collect();
        let p: Vec<f64> = w.iter().map(|&x| truth.eval(x)).collect();
        let guess = LorentzianFit {
            peak: 1.5e-20,
            center: truth.center + 0.5,
            hwhm: 4.0,
        };
        let fit = fit_lorentzian(&w, &p, guess).unwrap();
        assert!(rel(fit.peak, truth.peak) < 1e-8);
        assert!((fit.center - truth.center).abs() < 1e-8);
        assert!(rel(fit.hwhm, truth.hwhm) < 1e-8);
    }
}
