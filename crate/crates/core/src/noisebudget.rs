//! Detector noise: shot-noise imprecision and backaction, thermal force noise,
//! their single-mode and multimode combinations, the standard quantum limit,
//! and the detection bandwidth.
//!
//! All PSDs are single-sided, per Hz, evaluated at angular frequency ω.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};
use crate::membrane::{chi_norm_sq, mode_frequency, MembraneSpec, Mode, ModeIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalReadout {
    pub finesse: f64,
    /// Input power (W).
    pub power: f64,
    /// Laser wavelength (m).
    pub wavelength: f64,
    /// Detection efficiency in (0, 1].
    pub efficiency: f64,
}

impl Default for OpticalReadout {
    fn default() -> Self {
        OpticalReadout {
            finesse: 100.0,
            power: 0.3e-3,
            wavelength: 1.0e-6,
            efficiency: 1.0,
        }
    }
}

impl OpticalReadout {
    pub fn with_power(power: f64) -> Self {
        OpticalReadout {
            power,
            ..OpticalReadout::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("finesse", self.finesse),
            ("power", self.power),
            ("wavelength", self.wavelength),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("readout {name} must be positive, got {v}")));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid("readout efficiency must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Detected imprecision `S_xx^imp` (m²/Hz).
    pub fn imprecision(&self) -> f64 {
        imprecision_psd(self)
    }

    /// Radiation-pressure backaction on mass `m` (kg), in (m/s²)²/Hz.
    ///
    /// The force noise does not depend on how efficiently the light is
    /// detected, so it pairs with the ideal (η = 1) imprecision.
    pub fn backaction(&self, m: f64) -> f64 {
        let ideal = OpticalReadout {
            efficiency: 1.0,
            ..*self
        };
        backaction_psd(m, imprecision_psd(&ideal))
    }
}

/// `S_xx^imp = π ħ c λ / (64 η F² P)`, white.
pub fn imprecision_psd(ro: &OpticalReadout) -> f64 {
    std::f64::consts::PI * HBAR * C_LIGHT * ro.wavelength
        / (64.0 * ro.efficiency * ro.finesse * ro.finesse * ro.power)
}

/// `S_aa^ba = ħ² / (m² S_xx^imp)`.
pub fn backaction_psd(m: f64, s_imp: f64) -> f64 {
    HBAR * HBAR / (m * m * s_imp)
}

/// `S_aa^th = 4 k_B T ω0 / (m Q0)`, white near the resonance at `omega0`.
pub fn thermal_psd(spec: &MembraneSpec, omega0: f64) -> f64 {
    4.0 * K_B * spec.temperature * omega0 / (spec.effective_mass() * spec.q0)
}

/// `S_xx^tot = S_xx^imp + |χ|² (S_aa^ba + S_aa^th + S_aa^DM)` for a single
/// mode. Pass `|_| 0.0` for a noise-only budget.
pub fn total_displacement_psd<F>(
    spec: &MembraneSpec,
    ro: &OpticalReadout,
    idx: ModeIndex,
    dm_signal_psd: F,
    omega: f64,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let w0 = mode_frequency(spec, idx);
    let m = spec.effective_mass();
    let chi2 = chi_norm_sq(w0, spec.q0, omega);
    ro.imprecision() + chi2 * (ro.backaction(m) + thermal_psd(spec, w0) + dm_signal_psd(omega))
}

/// Single-mode detector noise referred to acceleration:
/// `S_aa^det = S_xx^imp / |χ|² + S_aa^ba + S_aa^th`.
pub fn detector_noise(spec: &MembraneSpec, ro: &OpticalReadout, idx: ModeIndex, omega: f64) -> f64 {
    let w0 = mode_frequency(spec, idx);
    let m = spec.effective_mass();
    ro.imprecision() / chi_norm_sq(w0, spec.q0, omega) + ro.backaction(m) + thermal_psd(spec, w0)
}

/// Effective DM-referred noise of a multimode readout at the membrane center:
///
/// ```text
/// S_eff = [S_xx^imp + Σ |χ_ij|² (S_th,ij + S_ba)] / Σ |χ_ij|² β_ij²
/// ```
///
/// Modes with zero overlap do not move the center and are skipped. Each
/// mode's thermal noise is evaluated at its own resonance. The overlap factor
/// is already folded in, so downstream bounds must use β = 1.
pub fn multimode_effective_noise(
    spec: &MembraneSpec,
    ro: &OpticalReadout,
    modes: &[Mode],
    omega: f64,
) -> Result<f64> {
    let (noise, response) = multimode_sums(spec, ro, modes, omega)?;
    if response == 0.0 {
        return Err(Error::invalid("no mode in the list couples to a uniform acceleration"));
    }
    Ok((ro.imprecision() + noise) / response)
}

/// `(Σ |χ|² (S_th + S_ba), Σ |χ|² β²)` over center-coupled modes.
pub(crate) fn multimode_sums(
    spec: &MembraneSpec,
    ro: &OpticalReadout,
    modes: &[Mode],
    omega: f64,
) -> Result<(f64, f64)> {
    if modes.is_empty() {
        return Err(Error::invalid("multimode noise needs at least one mode"));
    }
    let s_ba = ro.backaction(spec.effective_mass());
    let mut noise = 0.0;
    let mut response = 0.0;
    for mode in modes.iter().filter(|m| m.beta != 0.0) {
        let chi2 = chi_norm_sq(mode.omega, spec.q0, omega);
        noise += chi2 * (thermal_psd(spec, mode.omega) + s_ba);
        response += chi2 * mode.beta * mode.beta;
    }
    Ok((noise, response))
}

/// Standard quantum limit `2ħ / (m |χ(ω)|)` for mode `idx`.
pub fn sql_psd(m: f64, omega: f64, spec: &MembraneSpec, idx: ModeIndex) -> f64 {
    let w0 = mode_frequency(spec, idx);
    2.0 * HBAR / (m * chi_norm_sq(w0, spec.q0, omega).sqrt())
}

/// Width (rad/s) of the band around `ω_idx` where driven motion
/// `|χ|² (S_th + S_ba)` exceeds the imprecision floor.
pub fn detection_bandwidth(spec: &MembraneSpec, ro: &OpticalReadout, idx: ModeIndex) -> Result<f64> {
    let w0 = mode_frequency(spec, idx);
    let drive = thermal_psd(spec, w0) + ro.backaction(spec.effective_mass());
    let s_imp = ro.imprecision();
    let peak = chi_norm_sq(w0, spec.q0, w0) * drive;
    if !(peak > s_imp) {
        return Err(Error::UnresolvedResonance {
            peak_sxx: peak,
            s_imp,
        });
    }
    let excess = |omega: f64| chi_norm_sq(w0, spec.q0, omega) * drive - s_imp;
    let upper = band_edge(&excess, w0, 1.0);
    let lower = band_edge(&excess, w0, -1.0);
    Ok(upper + lower)
}

/// Detuning from `w0` (in direction `sign`) at which `excess` changes sign.
fn band_edge<F: Fn(f64) -> f64>(excess: &F, w0: f64, sign: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = w0 * 1e-9;
    while excess(w0 + sign * hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if sign < 0.0 && hi >= w0 {
            return w0;
        }
    }
    // 1e-3 relative on each edge, with margin
    while hi - lo > 1e-5 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(w0 + sign * mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Small-detuning estimate `√((S_th + S_ba) / S_imp) / ω0`.
pub fn detection_bandwidth_estimate(spec: &MembraneSpec, ro: &OpticalReadout, idx: ModeIndex) -> f64 {
    let w0 = mode_frequency(spec, idx);
    let drive = thermal_psd(spec, w0) + ro.backaction(spec.effective_mass());
    (drive / ro.imprecision()).sqrt() / w0
}

/// Single-mode noise budget sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub mode: ModeIndex,
    /// Grid (rad/s).
    pub omega: Vec<f64>,
    pub sxx_imp: Vec<f64>,
    pub saa_th: Vec<f64>,
    pub saa_ba: Vec<f64>,
    pub sxx_th: Vec<f64>,
    pub sxx_ba: Vec<f64>,
    pub sxx_tot: Vec<f64>,
    pub saa_det: Vec<f64>,
    pub saa_sql: Vec<f64>,
}

/// One grid row of a [`NoiseBudget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub omega_rad_s: f64,
    pub f_hz: f64,
    pub sxx_imp: f64,
    pub sxx_th: f64,
    pub sxx_ba: f64,
    pub sxx_tot: f64,
    pub saa_det: f64,
    pub saa_sql: f64,
}

impl NoiseBudget {
    pub fn compute(
        spec: &MembraneSpec,
        ro: &OpticalReadout,
        idx: ModeIndex,
        omega: &[f64],
    ) -> Result<Self> {
        spec.validate()?;
        ro.validate()?;
        if omega.is_empty() {
            return Err(Error::invalid("empty frequency grid"));
        }
        let w0 = mode_frequency(spec, idx);
        let m = spec.effective_mass();
        let s_imp = ro.imprecision();
        let s_th = thermal_psd(spec, w0);
        let s_ba = ro.backaction(m);
        let rows: Vec<[f64; 5]> = omega
            .par_iter()
            .map(|&w| {
                let chi2 = chi_norm_sq(w0, spec.q0, w);
                let sxx_th = chi2 * s_th;
                let sxx_ba = chi2 * s_ba;
                [
                    sxx_th,
                    sxx_ba,
                    s_imp + sxx_th + sxx_ba,
                    s_imp / chi2 + s_ba + s_th,
                    2.0 * HBAR / (m * chi2.sqrt()),
                ]
            })
            .collect();
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
        Ok(NoiseBudget {
            mode: idx,
            omega: omega.to_vec(),
            sxx_imp: vec![s_imp; omega.len()],
            saa_th: vec![s_th; omega.len()],
            saa_ba: vec![s_ba; omega.len()],
            sxx_th: col(0),
            sxx_ba: col(1),
            sxx_tot: col(2),
            saa_det: col(3),
            saa_sql: col(4),
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = BudgetRow> + '_ {
        (0..self.len()).map(move |k| BudgetRow {
            omega_rad_s: self.omega[k],
            f_hz: self.omega[k] / TWO_PI,
            sxx_imp: self.sxx_imp[k],
            sxx_th: self.sxx_th[k],
            sxx_ba: self.sxx_ba[k],
            sxx_tot: self.sxx_tot[k],
            saa_det: self.saa_det[k],
            saa_sql: self.saa_sql[k],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membrane::{enumerate_modes, ModeIndex};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn imprecision_default() {
        let ro = OpticalReadout::default();
        let s = imprecision_psd(&ro);
        assert!(rel(s, 5.173_036_086e-34) < 1e-8, "{s}");
        assert!(rel(imprecision_psd(&OpticalReadout::with_power(0.6e-3)), s / 2.0) < 1e-14);
        let half = OpticalReadout {
            efficiency: 0.5,
            ..ro
        };
        assert!(rel(imprecision_psd(&half), 2.0 * s) < 1e-14);
    }

    #[test]
    fn backaction_and_thermal_for_10cm() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let m = spec.effective_mass();
        assert!(rel(ro.backaction(m), 8.948_359_382e-24) < 1e-8);
        let s_th = thermal_psd(&spec, spec.omega11());
        assert!(rel(s_th, 8.990_743_329e-24) < 1e-8, "{s_th}");
        assert!(rel(ro.backaction(4.0 * m), ro.backaction(m) / 16.0) < 1e-14);
        let cold = MembraneSpec {
            temperature: 0.0,
            ..spec
        };
        assert_eq!(thermal_psd(&cold, spec.omega11()), 0.0);
    }

    #[test]
    fn backaction_ignores_detection_efficiency() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout {
            efficiency: 0.3,
            ..OpticalReadout::default()
        };
        let m = spec.effective_mass();
        assert_eq!(ro.backaction(m), OpticalReadout::default().backaction(m));
    }

    #[test]
    fn budget_at_resonance_20cm() {
        let spec = MembraneSpec::with_side(0.2);
        let ro = OpticalReadout::default();
        let w0 = spec.omega11();
        assert!(rel(w0, 12_616.939_7) < 1e-8);
        let b = NoiseBudget::compute(&spec, &ro, ModeIndex::FUNDAMENTAL, &[w0]).unwrap();
        let r = b.rows().next().unwrap();
        assert!(rel(b.saa_ba[0], 5.592_724_6e-25) < 1e-7);
        assert!(rel(b.saa_th[0], 1.123_842_9e-24) < 1e-7);
        assert!(rel(r.sxx_th, 4.434_957_89e-23) < 1e-7);
        assert!(rel(r.sxx_ba, 2.207_025_36e-23) < 1e-7);
        assert!(rel(r.sxx_tot, 6.641_983_25e-23) < 1e-7);
        assert!(rel(r.saa_det, 1.683_115_38e-24) < 1e-7);
        assert!(rel(r.saa_sql, 5.4153e-30) < 1e-4);
    }

    #[test]
    fn total_displacement_limits() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let w0 = spec.omega11();
        let far = total_displacement_psd(&spec, &ro, ModeIndex::FUNDAMENTAL, |_| 0.0, 1e3 * w0);
        assert!(rel(far, ro.imprecision()) < 1e-6);
        let with_dm = total_displacement_psd(&spec, &ro, ModeIndex::FUNDAMENTAL, |_| 1e-20, w0);
        let without = total_displacement_psd(&spec, &ro, ModeIndex::FUNDAMENTAL, |_| 0.0, w0);
        assert!(with_dm > without);
    }

    #[test]
    fn single_mode_reduction() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let modes = [Mode::new(&spec, ModeIndex::FUNDAMENTAL)];
        for w in [0.5, 0.999, 1.0, 1.0001, 3.0].map(|x| x * spec.omega11()) {
            let eff = multimode_effective_noise(&spec, &ro, &modes, w).unwrap();
            let det = detector_noise(&spec, &ro, ModeIndex::FUNDAMENTAL, w);
            assert!(rel(eff * modes[0].beta.powi(2), det) < 1e-12);
        }
        assert!(multimode_effective_noise(&spec, &ro, &[], spec.omega11()).is_err());
    }

    #[test]
    fn multimode_dip_at_33() {
        let spec = MembraneSpec::default();
        let ro = OpticalReadout::default();
        let modes = enumerate_modes(&spec, 30e3, 2000).unwrap();
        let w33 = mode_frequency(&spec, ModeIndex { i: 3, j: 3 });
        let at = multimode_effective_noise(&spec, &ro, &modes, w33).unwrap();
        let off = multimode_effective_noise(&spec, &ro, &modes, w33 * 1.001).unwrap();
        assert!(at.is_finite() && at < off / 100.0);
    }

    #[test]
    fn sql_is_lower_bound() {
        let spec = MembraneSpec::default();
        let m = spec.effective_mass();
        let w0 = spec.omega11();
        for w in [0.5 * w0, w0, 1.01 * w0] {
            let sql = sql_psd(m, w, &spec, ModeIndex::FUNDAMENTAL);
            for k in 0..=50 {
                let p = 10f64.powf(-6.0 + 5.0 * k as f64 / 50.0);
                let ro = OpticalReadout::with_power(p);
                let sum = ro.imprecision() / chi_norm_sq(w0, spec.q0, w) + ro.backaction(m);
                assert!(sum >= sql * (1.0 - 1e-12));
            }
        }
        assert!(rel(sql_psd(m, w0, &spec, ModeIndex::FUNDAMENTAL), 8.664_480_04e-29) < 1e-7);
    }

    #[test]
    fn bandwidth_20cm() {
        let spec = MembraneSpec::with_side(0.2);
        let ro = OpticalReadout::default();
        let bw = detection_bandwidth(&spec, &ro, ModeIndex::FUNDAMENTAL).unwrap();
        assert!(rel(bw, 4.520_95) < 1e-3, "{bw}");
        let est = detection_bandwidth_estimate(&spec, &ro, ModeIndex::FUNDAMENTAL);
        assert!(rel(bw, est) < 0.05);
        let more = detection_bandwidth(&spec, &OpticalReadout::with_power(3e-3), ModeIndex::FUNDAMENTAL).unwrap();
        assert!(more > bw);
    }

    #[test]
    fn bandwidth_10cm_closed_form() {
        let spec = MembraneSpec::default();
        let est = detection_bandwidth_estimate(&spec, &OpticalReadout::default(), ModeIndex::FUNDAMENTAL);
        assert!(rel(est, 7.379_78) < 1e-5, "{est}");
    }

    #[test]
    fn unresolved_resonance() {
        let spec = MembraneSpec {
            q0: 1.0,
            temperature: 0.0,
            ..MembraneSpec::default()
        };
        let ro = OpticalReadout::with_power(1e-9);
        let err = detection_bandwidth(&spec, &ro, ModeIndex::FUNDAMENTAL).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
