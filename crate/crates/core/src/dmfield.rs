//! Dark-matter particle parameters, the signal amplitude, and its lineshape.
//!
//! The virialized field is modeled as a single tone at the Compton frequency
//! whose phase is redrawn uniformly at the events of a Poisson process with
//! mean waiting time `τ_DM = 2 Q_DM / ω_DM`. Its single-sided acceleration PSD is
//! the Lorentzian
//!
//! ```text
//! S_aa(ω) = a_dm² τ_DM / (1 + τ_DM² (ω − ω_DM)²)
//! ```
//!
//! with `a_dm = β g f12 a0 / √3`. The `√3` averages over the unknown field
//! polarization and is applied here and nowhere else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, E_CHARGE, HBAR, PLANCK, RHO_DM_LOCAL, TWO_PI};
use crate::error::{Error, Result};
use crate::materials::{dm_force_scale, DmForceScale};

/// Quality factor of the Doppler-broadened line.
pub const DEFAULT_Q_DM: f64 = 5.0e5;
/// Virial speed as a fraction of c.
pub const DEFAULT_V_VIR: f64 = 1.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmModel {
    /// Particle mass (eV/c²).
    pub mass_ev: f64,
    pub q_dm: f64,
    /// Local energy density (GeV/cm³).
    pub rho_gev_cm3: f64,
    /// Virial speed as a fraction of c.
    pub v_vir: f64,
}

impl DmModel {
    pub fn new(mass_ev: f64, q_dm: f64, rho_gev_cm3: f64, v_vir: f64) -> Result<Self> {
        let dm = DmModel {
            mass_ev,
            q_dm,
            rho_gev_cm3,
            v_vir,
        };
        dm.validate()?;
        Ok(dm)
    }

    /// Model whose Compton frequency is `omega` (rad/s), with default halo parameters.
    pub fn at_omega(omega: f64) -> Result<Self> {
        DmModel::new(mass_from_omega(omega)?, DEFAULT_Q_DM, RHO_DM_LOCAL, DEFAULT_V_VIR)
    }

    /// Same halo parameters, different particle mass.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        DmModel::new(mass_from_omega(omega)?, self.q_dm, self.rho_gev_cm3, self.v_vir)
    }

    pub fn with_q_dm(&self, q_dm: f64) -> Result<Self> {
        DmModel::new(self.mass_ev, q_dm, self.rho_gev_cm3, self.v_vir)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_ev.is_finite() && self.mass_ev > 0.0) {
            return Err(Error::invalid("dark-matter mass must be positive"));
        }
        if !(self.q_dm.is_finite() && self.q_dm > 1.0) {
            return Err(Error::invalid("q_dm must exceed 1"));
        }
        if !(self.rho_gev_cm3.is_finite() && self.rho_gev_cm3 > 0.0) {
            return Err(Error::invalid("dark-matter density must be positive"));
        }
        if !(self.v_vir > 0.0 && self.v_vir < 1.0) {
            return Err(Error::invalid("v_vir must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Compton angular frequency (rad/s).
    pub fn omega(&self) -> f64 {
        self.mass_ev * E_CHARGE / HBAR
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega() / TWO_PI
    }

    pub fn coherence_time(&self) -> f64 {
        coherence_time(self)
    }

    pub fn de_broglie_wavelength(&self) -> f64 {
        de_broglie_wavelength(self.mass_ev, self.v_vir).expect("validated model")
    }

    pub fn force_scale(&self) -> DmForceScale {
        dm_force_scale(self.rho_gev_cm3).expect("validated model")
    }
}

/// `ω = m c² / ħ` for a mass in eV/c².
pub fn compton_frequency(mass_ev: f64) -> Result<f64> {
    if !(mass_ev.is_finite() && mass_ev > 0.0) {
        return Err(Error::invalid("dark-matter mass must be positive"));
    }
    Ok(mass_ev * E_CHARGE / HBAR)
}

/// Inverse of [`compton_frequency`].
pub fn mass_from_omega(omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("Compton frequency must be positive"));
    }
    Ok(omega * HBAR / E_CHARGE)
}

/// `λ = h / (m v)` with `v = v_vir · c`.
pub fn de_broglie_wavelength(mass_ev: f64, v_vir: f64) -> Result<f64> {
    if !(v_vir > 0.0 && v_vir < 1.0) {
        return Err(Error::invalid("v_vir must lie in (0, 1)"));
    }
    if !(mass_ev.is_finite() && mass_ev > 0.0) {
        return Err(Error::invalid("dark-matter mass must be positive"));
    }
    let mass_kg = mass_ev * E_CHARGE / (C_LIGHT * C_LIGHT);
    Ok(PLANCK / (mass_kg * v_vir * C_LIGHT))
}

/// `τ_DM = 2 Q_DM / ω_DM`.
pub fn coherence_time(dm: &DmModel) -> f64 {
    2.0 * dm.q_dm / dm.omega()
}

/// Components of the signal amplitude `a_dm = β g f12 a0 / √3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmSignalAmplitude {
    pub g: f64,
    pub f12: f64,
    pub beta: f64,
    pub a0: f64,
}

impl DmSignalAmplitude {
    pub fn new(g: f64, f12: f64, beta: f64, a0: f64) -> Self {
        DmSignalAmplitude { g, f12, beta, a0 }
    }

    /// Polarization-averaged amplitude (m/s²).
    pub fn a_dm(&self) -> f64 {
        (self.beta * self.g * self.f12 * self.a0).abs() / 3f64.sqrt()
    }
}

/// Single-sided Lorentzian acceleration PSD ((m/s²)²/Hz) at angular frequency `omega`.
pub fn lorentzian_psd(omega: f64, amp: &DmSignalAmplitude, dm: &DmModel) -> f64 {
    let tau = coherence_time(dm);
    let a = amp.a_dm();
    let detuning = tau * (omega - dm.omega());
    a * a * tau / (1.0 + detuning * detuning)
}

/// Realize the phase-jump signal `a(t) = a_dm cos(ω_DM t + θ(t))`, sampled at
/// `sample_rate` for `duration` seconds.
///
/// `θ` is redrawn from `U[0, 2π)` at Poisson events with mean spacing `τ_DM`.
/// The time average of `a²` is `a_dm² / 2`, so the ensemble PSD integrates to
/// the same power as [`lorentzian_psd`].
pub fn sample_signal(
    amp: &DmSignalAmplitude,
    dm: &DmModel,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = checked_sample_count(dm, duration, sample_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(phase_jump_series(amp.a_dm(), dm, n, sample_rate, &mut rng))
}

pub(crate) fn checked_sample_count(dm: &DmModel, duration: f64, sample_rate: f64) -> Result<usize> {
    if !(sample_rate > 2.0 * dm.frequency_hz()) {
        return Err(Error::invalid(format!(
            "sample rate {sample_rate} Hz is below the Nyquist rate for {:.3} Hz",
            dm.frequency_hz()
        )));
    }
    let n = (duration * sample_rate).round();
    if !(n >= 2.0) {
        return Err(Error::invalid("series needs at least two samples"));
    }
    Ok(n as usize)
}

pub(crate) fn phase_jump_series<R: Rng>(
    amplitude: f64,
    dm: &DmModel,
    n: usize,
    sample_rate: f64,
    rng: &mut R,
) -> Vec<f64> {
    let tau = coherence_time(dm);
    let omega = dm.omega();
    let waiting = Exp::new(1.0 / tau).expect("positive rate");
    let mut theta = rng.random_range(0.0..TWO_PI);
    let mut next_jump = waiting.sample(rng);
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            while t >= next_jump {
                theta = rng.random_range(0.0..TWO_PI);
                next_jump += waiting.sample(rng);
            }
            amplitude * (omega * t + theta).cos()
        })
        .collect()
}
