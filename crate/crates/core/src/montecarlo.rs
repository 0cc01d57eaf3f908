//! Time-domain simulation of the detector output and recovery of an injected
//! dark-matter signal.
//!
//! The output is built block by block (block = analysis segment) in the
//! frequency domain: white Gaussian force noise is drawn per mode and per bin,
//! multiplied by each mode's susceptibility at the bin frequency, and summed
//! with the DM acceleration filtered through `Σ β_ij χ_ij`. White displacement
//! imprecision is added in the time domain. Because the filter acts bin by
//! bin, dividing a segment periodogram by `Σ β² |χ|²` undoes it exactly, which
//! is what [`recover`] does.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, source,
//! mode, block)`, so results do not depend on how work is split across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::constants::TWO_PI;
use crate::dmfield::{phase_jump_series, DmModel, DmSignalAmplitude};
use crate::error::{Error, Result};
use crate::estimator::{average_segments, g_min, PeriodogramEstimate, SegmentTransform};
use crate::materials::{suppression_factor, Composition, CouplingChannel};
use crate::membrane::{chi, chi_norm_sq, MembraneSpec, Mode, ModeIndex};
use crate::noisebudget::{thermal_psd, OpticalReadout};

const STREAM_FORCE: u64 = 1;
const STREAM_IMPRECISION: u64 = 2;
const STREAM_SIGNAL: u64 = 3;

/// Which noise sources are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSources {
    pub thermal: bool,
    pub backaction: bool,
    pub imprecision: bool,
}

impl NoiseSources {
    pub const ALL: NoiseSources = NoiseSources {
        thermal: true,
        backaction: true,
        imprecision: true,
    };
    pub const NONE: NoiseSources = NoiseSources {
        thermal: false,
        backaction: false,
        imprecision: false,
    };

    pub fn any(&self) -> bool {
        self.thermal || self.backaction || self.imprecision
    }
}

impl Default for NoiseSources {
    fn default() -> Self {
        NoiseSources::ALL
    }
}

/// How [`recover`] obtains the noise floor under the DM line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloorMode {
    /// Closed-form floor from the configured noise sources.
    #[default]
    Modeled,
    /// Modeled shape rescaled to the off-peak bins of the data.
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub spec: MembraneSpec,
    pub readout: OpticalReadout,
    pub dm: DmModel,
    pub injected_g: f64,
    pub f12: f64,
    /// Modes included in the readout; only center-coupled (odd, odd) modes contribute.
    pub modes: Vec<ModeIndex>,
    /// Requested run length (s); rounded to a whole number of segments.
    pub duration: f64,
    /// Sample rate (Hz).
    pub sample_rate: f64,
    /// Requested segment length (s); adjusted so the DM line sits on a bin.
    pub segment_duration: f64,
    pub seed: u64,
    pub noise: NoiseSources,
    pub floor: FloorMode,
    /// Detection threshold on the SNR.
    pub snr_threshold: f64,
}

impl SimulationConfig {
    /// Desk-scale configuration: default 10 cm membrane with Q0 = 1e5, DM line
    /// with Q_DM = 300 on the fundamental, sampled at 5 f11, Si₃N₄–Be in the
    /// B−L channel. Segments default to one coherence time.
    pub fn desk(injected_g: f64, coherence_times: f64, seed: u64) -> Self {
        let spec = MembraneSpec {
            q0: 1.0e5,
            ..MembraneSpec::default()
        };
        let w0 = spec.omega11();
        let dm = DmModel::at_omega(w0)
            .and_then(|d| d.with_q_dm(300.0))
            .expect("valid desk DM model");
        let tau_dm = dm.coherence_time();
        let f12 = suppression_factor(
            &Composition::silicon_nitride(),
            &Composition::beryllium(),
            CouplingChannel::BMinusL,
        )
        .expect("builtin compositions");
        SimulationConfig {
            spec,
            readout: OpticalReadout::default(),
            dm,
            injected_g,
            f12,
            modes: vec![ModeIndex::FUNDAMENTAL],
            duration: coherence_times * tau_dm,
            sample_rate: 5.0 * w0 / TWO_PI,
            segment_duration: tau_dm,
            seed,
            noise: NoiseSources::ALL,
            floor: FloorMode::Modeled,
            snr_threshold: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.readout.validate()?;
        self.dm.validate()?;
        if self.modes.is_empty() {
            return Err(Error::invalid("simulation needs at least one mode"));
        }
        if !(self.injected_g >= 0.0 && self.injected_g.is_finite()) {
            return Err(Error::invalid("injected_g must be finite and non-negative"));
        }
        if !(self.f12 > 0.0) {
            return Err(Error::invalid("f12 must be positive"));
        }
        let f_max = self
            .modes
            .iter()
            .map(|&m| Mode::new(&self.spec, m).frequency_hz())
            .fold(0.0, f64::max)
            .max(self.dm.frequency_hz());
        if !(self.sample_rate > 4.0 * f_max) {
            return Err(Error::invalid(format!(
                "sample rate {} Hz must exceed 4 × the highest frequency {f_max:.3} Hz",
                self.sample_rate
            )));
        }
        if !(self.segment_duration > 0.0 && self.duration >= self.segment_duration * 0.5) {
            return Err(Error::invalid("duration must cover at least one segment"));
        }
        Ok(())
    }

    pub fn coherence_time(&self) -> f64 {
        self.dm.coherence_time()
    }

    /// Samples per segment, chosen near `segment_duration` so that the DM
    /// frequency falls on a bin center.
    pub fn segment_samples(&self) -> usize {
        aligned_segment_samples(self.dm.frequency_hz(), self.sample_rate, self.segment_duration)
    }

    pub fn segment_count(&self) -> usize {
        let t = self.segment_samples() as f64 / self.sample_rate;
        ((self.duration / t).round() as usize).max(1)
    }

    /// Length of the synthesized series (s).
    pub fn actual_duration(&self) -> f64 {
        (self.segment_count() * self.segment_samples()) as f64 / self.sample_rate
    }

    fn center_modes(&self) -> Vec<Mode> {
        self.modes
            .iter()
            .map(|&m| Mode::new(&self.spec, m))
            .filter(|m| m.beta != 0.0)
            .collect()
    }

    fn acceleration_amplitude(&self) -> f64 {
        DmSignalAmplitude::new(self.injected_g, self.f12, 1.0, self.dm.force_scale().a0).a_dm()
    }
}

/// Segment length in samples near `target_s · fs` with `f_dm · n / fs` as close
/// to an integer as the rates allow.
pub fn aligned_segment_samples(f_dm: f64, sample_rate: f64, target_s: f64) -> usize {
    let cycles = (f_dm * target_s).round().max(1.0);
    let n = (cycles * sample_rate / f_dm).round() as usize;
    n.max(2)
}

/// Expected fraction of a Lorentzian line's peak PSD that lands in the center
/// bin of a rectangular segment of length `x = T / τ_DM` coherence times:
/// `1 − (1 − e^{−x}) / x`.
pub fn window_response(x: f64) -> f64 {
    if x < 1e-6 {
        return x / 2.0;
    }
    1.0 - (1.0 - (-x).exp()) / x
}

struct BlockPlan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl BlockPlan {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        BlockPlan {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }
}

fn stream_rng(seed: u64, kind: u64, mode: usize, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) | ((mode as u64 & 0xff_ffff) << 32) | (block as u64 & 0xffff_ffff));
    rng
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Synthesize the detector displacement output (m).
pub fn synthesize_output(cfg: &SimulationConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = cfg.segment_samples();
    let blocks = cfg.segment_count();
    let fs = cfg.sample_rate;
    let modes = cfg.center_modes();
    let plan = BlockPlan::new(n);

    let signal = if cfg.injected_g > 0.0 {
        let mut rng = stream_rng(cfg.seed, STREAM_SIGNAL, 0, 0);
        Some(phase_jump_series(cfg.acceleration_amplitude(), &cfg.dm, n * blocks, fs, &mut rng))
    } else {
        None
    };

    let m = cfg.spec.effective_mass();
    let s_ba = if cfg.noise.backaction { cfg.readout.backaction(m) } else { 0.0 };
    let force_psd: Vec<f64> = modes
        .iter()
        .map(|mode| {
            let th = if cfg.noise.thermal { thermal_psd(&cfg.spec, mode.omega) } else { 0.0 };
            th + s_ba
        })
        .collect();
    let imp_sigma = if cfg.noise.imprecision {
        (cfg.readout.imprecision() * fs / 2.0).sqrt()
    } else {
        0.0
    };
    // chi and Σβχ per bin, shared by all blocks
    let omegas: Vec<f64> = (0..=n / 2).map(|k| TWO_PI * k as f64 * fs / n as f64).collect();
    let chis: Vec<Vec<Complex64>> = modes
        .iter()
        .map(|mode| omegas.iter().map(|&w| chi(mode.omega, cfg.spec.q0, w)).collect())
        .collect();
    let response: Vec<Complex64> = (0..omegas.len())
        .map(|k| modes.iter().zip(&chis).map(|(mode, c)| c[k] * mode.beta).sum())
        .collect();

    let out: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
            for (mi, psd) in force_psd.iter().enumerate() {
                if *psd == 0.0 {
                    continue;
                }
                let mut rng = stream_rng(cfg.seed, STREAM_FORCE, mi, b);
                let c = (psd * fs * n as f64 / 4.0).sqrt();
                for k in 1..n.div_ceil(2) {
                    let f = Complex64::new(normal(&mut rng), normal(&mut rng)) * c;
                    spectrum[k] += chis[mi][k] * f;
                }
            }
            if let Some(sig) = &signal {
                let mut buf: Vec<Complex64> =
                    sig[b * n..(b + 1) * n].iter().map(|&x| Complex64::new(x, 0.0)).collect();
                plan.fwd.process(&mut buf);
                for k in 1..n.div_ceil(2) {
                    spectrum[k] += response[k] * buf[k];
                }
            }
            for k in 1..n.div_ceil(2) {
                spectrum[n - k] = spectrum[k].conj();
            }
            plan.inv.process(&mut spectrum);
            let mut block: Vec<f64> = spectrum.iter().map(|z| z.re / n as f64).collect();
            if imp_sigma > 0.0 {
                let mut rng = stream_rng(cfg.seed, STREAM_IMPRECISION, 0, b);
                for x in &mut block {
                    *x += imp_sigma * normal(&mut rng);
                }
            }
            block
        })
        .collect();
    debug_assert_eq!(plan.n, n);
    Ok(out.concat())
}

/// Per-bin deconvolution gain `H = Σ β² |χ|²` and modeled DM-referred floor.
fn bin_model(cfg: &SimulationConfig, modes: &[Mode], omega: f64) -> (f64, f64) {
    let m = cfg.spec.effective_mass();
    let s_ba = if cfg.noise.backaction { cfg.readout.backaction(m) } else { 0.0 };
    let mut h = 0.0;
    let mut driven = 0.0;
    for mode in modes {
        let c2 = chi_norm_sq(mode.omega, cfg.spec.q0, omega);
        h += mode.beta * mode.beta * c2;
        let th = if cfg.noise.thermal { thermal_psd(&cfg.spec, mode.omega) } else { 0.0 };
        driven += c2 * (th + s_ba);
    }
    let imp = if cfg.noise.imprecision { cfg.readout.imprecision() } else { 0.0 };
    (h, (imp + driven) / h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub g_hat: f64,
    /// One-sigma uncertainty on `g_hat`.
    pub g_err: f64,
    pub snr: f64,
    /// Frequency of the selected bin (rad/s).
    pub peak_frequency: f64,
    pub detected: bool,
    /// Coupling upper limit when nothing is detected.
    pub upper_limit: Option<f64>,
    pub segments: usize,
    /// Segment length (s).
    pub segment_duration: f64,
    /// Deconvolved PSD in the selected bin ((m/s²)²/Hz).
    pub bin_power: f64,
    /// Noise floor under the selected bin ((m/s²)²/Hz).
    pub noise_floor: f64,
    /// Center-bin window response used to debias the peak.
    pub window_response: f64,
}

/// DM-referred acceleration periodogram of `series`: the displacement
/// periodogram divided by `Σ β² |χ|²` bin by bin.
pub fn deconvolved_periodogram(cfg: &SimulationConfig, series: &[f64]) -> Result<PeriodogramEstimate> {
    let n = cfg.segment_samples();
    if series.len() < n {
        return Err(Error::invalid("series is shorter than one segment"));
    }
    let transform = SegmentTransform::new(n);
    let per_segment: Vec<Vec<f64>> = series
        .par_chunks_exact(n)
        .map(|seg| transform.power(seg, cfg.sample_rate))
        .collect();
    let mut est = average_segments(&per_segment, n, cfg.sample_rate);
    let modes = cfg.center_modes();
    for k in 0..est.power.len() {
        let (h, _) = bin_model(cfg, &modes, est.omega(k));
        est.power[k] /= h;
    }
    Ok(est)
}

/// Estimate the injected coupling from a synthesized series.
pub fn recover(cfg: &SimulationConfig, series: &[f64]) -> Result<RecoveryResult> {
    cfg.validate()?;
    let tau_dm = cfg.coherence_time();
    if cfg.duration < 2.0 * tau_dm {
        return Err(Error::invalid(format!(
            "recovery needs at least two coherence times ({:.4} s), got {:.4} s",
            2.0 * tau_dm,
            cfg.duration
        )));
    }
    let est = deconvolved_periodogram(cfg, series)?;
    let modes = cfg.center_modes();
    let w_dm = cfg.dm.omega();
    let bin_w = TWO_PI / est.segment_duration;
    let reach = (1.0 / tau_dm).max(0.5 * bin_w);
    let floors: Vec<f64> = (0..est.power.len()).map(|k| bin_model(cfg, &modes, est.omega(k)).1).collect();

    let scale = match cfg.floor {
        FloorMode::Modeled => 1.0,
        FloorMode::Fitted => {
            let off: Vec<f64> = (1..est.power.len() - 1)
                .filter(|&k| (est.omega(k) - w_dm).abs() > 10.0 * reach)
                .map(|k| est.power[k] / floors[k])
                .collect();
            if off.is_empty() {
                return Err(Error::invalid("no off-peak bins to fit the noise floor"));
            }
            off.iter().sum::<f64>() / off.len() as f64
        }
    };

    let root_n = (est.segments as f64).sqrt();
    let candidates: Vec<usize> = (0..est.power.len())
        .filter(|&k| (est.omega(k) - w_dm).abs() <= reach * (1.0 + 1e-9))
        .collect();
    let k = candidates
        .iter()
        .copied()
        .max_by(|&a, &b| {
            (est.power[a] - scale * floors[a]).total_cmp(&(est.power[b] - scale * floors[b]))
        })
        .unwrap_or_else(|| est.nearest_bin(w_dm / TWO_PI));

    let p_hat = est.power[k];
    let floor = scale * floors[k];
    let sigma = floor / root_n;
    let excess = p_hat - floor;
    let snr = if sigma > 0.0 { (excess / sigma).max(0.0) } else if excess > 0.0 { f64::INFINITY } else { 0.0 };
    let w = window_response(est.segment_duration / tau_dm);
    let a0 = cfg.dm.force_scale().a0;
    let conv = 3.0 / ((cfg.f12 * a0).powi(2) * w * tau_dm);
    let g_hat = (excess.max(0.0) * conv).sqrt();
    let sigma_g2 = (p_hat / root_n).max(sigma) * conv;
    let g_err = (g_hat * g_hat + sigma_g2).sqrt() - g_hat;
    let detected = snr >= cfg.snr_threshold;
    let upper_limit = (!detected).then(|| ((excess.max(0.0) + sigma) * conv).sqrt());
    Ok(RecoveryResult {
        g_hat,
        g_err,
        snr,
        peak_frequency: est.omega(k),
        detected,
        upper_limit,
        segments: est.segments,
        segment_duration: est.segment_duration,
        bin_power: p_hat,
        noise_floor: floor,
        window_response: w,
    })
}

/// Closed-form bound for the configuration's noise model at the DM frequency,
/// after integrating for the run length.
pub fn expected_bound(cfg: &SimulationConfig) -> Result<f64> {
    let modes = cfg.center_modes();
    let (_, floor) = bin_model(cfg, &modes, cfg.dm.omega());
    Ok(g_min(cfg.dm.omega(), floor, cfg.actual_duration(), &cfg.dm, cfg.f12, 1.0)?.g_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    /// Integration time (s).
    pub tau: f64,
    /// Smallest coupling with seed-averaged SNR ≥ threshold.
    pub g_min: f64,
    pub segments: usize,
}

/// Measure the minimum detectable coupling versus integration time.
///
/// For `τ ≤ τ_DM` a single segment of length `τ` is used; beyond that the run
/// is split into coherence-time segments. For each `τ`, signal-only (g = 1)
/// and noise-only series are synthesized for `seeds` consecutive seeds
/// starting at `cfg_base.seed`. Since the output is linear in `g`, the DM bin of
/// a run at coupling `g` is `noise + g · signal`, and the smallest `g` whose
/// seed-averaged SNR reaches the threshold is found by bisection.
pub fn scaling_experiment(cfg_base: &SimulationConfig, tau_list: &[f64], seeds: usize) -> Result<Vec<ScalingPoint>> {
    cfg_base.validate()?;
    if tau_list.is_empty() || seeds == 0 {
        return Err(Error::invalid("scaling experiment needs taus and at least one seed"));
    }
    let tau_dm = cfg_base.coherence_time();
    let mut points = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        if !(tau > 0.0) {
            return Err(Error::invalid("integration times must be positive"));
        }
        let mut cfg = cfg_base.clone();
        if tau <= tau_dm {
            cfg.segment_duration = tau;
            cfg.duration = tau;
        } else {
            cfg.segment_duration = tau_dm;
            cfg.duration = tau;
        }
        let n = cfg.segment_samples();
        let segments = cfg.segment_count();
        let k = ((cfg.dm.frequency_hz() * n as f64 / cfg.sample_rate).round() as usize).max(1);
        let w_k = TWO_PI * k as f64 * cfg.sample_rate / n as f64;
        let modes = cfg.center_modes();
        let (h, floor) = bin_model(&cfg, &modes, w_k);
        let norm = 2.0 / (cfg.sample_rate * n as f64 * h);

        let runs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let seed = cfg_base.seed.wrapping_add(s as u64);
                let signal_cfg = SimulationConfig {
                    injected_g: 1.0,
                    noise: NoiseSources::NONE,
                    seed,
                    ..cfg.clone()
                };
                let noise_cfg = SimulationConfig {
                    injected_g: 0.0,
                    seed,
                    ..cfg.clone()
                };
                let sig = synthesize_output(&signal_cfg)?;
                let noi = synthesize_output(&noise_cfg)?;
                Ok((bin_dft(&sig, n, k), bin_dft(&noi, n, k)))
            })
            .collect::<Result<Vec<_>>>()?;

        let sigma = floor / (segments as f64).sqrt();
        let mean_snr = |g: f64| -> f64 {
            runs.iter()
                .map(|(sig, noi)| {
                    let p = sig
                        .iter()
                        .zip(noi)
                        .map(|(s, x)| (x + s * g).norm_sqr())
                        .sum::<f64>()
                        * norm
                        / segments as f64;
                    (p - floor) / sigma
                })
                .sum::<f64>()
                / runs.len() as f64
        };
        let target = cfg.snr_threshold;
        let mut lo = 0.0;
        let mut hi = 1e-30;
        while mean_snr(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1.0 {
                return Err(Error::invalid("scaling experiment: no coupling reaches the SNR threshold"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_snr(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-9 * hi {
                break;
            }
        }
        points.push(ScalingPoint {
            tau: cfg.actual_duration(),
            g_min: hi,
            segments,
        });
    }
    Ok(points)
}

/// DFT coefficient of bin `k` for each length-`n` segment.
fn bin_dft(series: &[f64], n: usize, k: usize) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, -TWO_PI * k as f64 / n as f64);
    series
        .chunks_exact(n)
        .map(|seg| {
            let mut phase = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &x) in seg.iter().enumerate() {
                if i % 64 == 0 {
                    phase = Complex64::from_polar(1.0, -TWO_PI * ((k * i) % n) as f64 / n as f64);
                }
                acc += phase * x;
                phase *= step;
            }
            acc
        })
        .collect()
}

/// Least-squares log-log slope of `ys` against `xs`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope_sub: f64,
    pub slope_super: f64,
    /// Integration time where the two fitted lines cross (s).
    pub crossover_tau: f64,
}

/// Fit separate power laws below and above `tau_dm`.
pub fn fit_scaling(points: &[ScalingPoint], tau_dm: f64) -> Result<ScalingFit> {
    let (sub, sup): (Vec<_>, Vec<_>) = points.iter().partition(|p| p.tau <= tau_dm * (1.0 + 1e-9));
    if sub.len() < 2 || sup.len() < 2 {
        return Err(Error::invalid("need at least two points on each side of the coherence time"));
    }
    let xy = |v: &[&ScalingPoint]| -> (Vec<f64>, Vec<f64>) { (v.iter().map(|p| p.tau).collect(), v.iter().map(|p| p.g_min).collect()) };
    let (x1, y1) = xy(&sub);
    let (x2, y2) = xy(&sup);
    let (a, b) = loglog_slope(&x1, &y1);
    let (c, d) = loglog_slope(&x2, &y2);
    Ok(ScalingFit {
        slope_sub: a,
        slope_super: c,
        crossover_tau: ((d - b) / (a - c)).exp(),
    })
}
