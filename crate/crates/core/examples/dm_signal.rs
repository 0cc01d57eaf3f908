//! Dark-photon field parameters near a 4 kHz resonance and a short
//! realization of the phase-jump signal.

use optodm::constants::TWO_PI;
use optodm::dmfield::{lorentzian_psd, sample_signal, DmModel, DmSignalAmplitude};

fn main() -> optodm::Result<()> {
    let dm = DmModel::at_omega(TWO_PI * 4016.0)?;
    let force = dm.force_scale();
    println!("mass              {:.4e} eV", dm.mass_ev);
    println!("coherence time    {:.2} s", dm.coherence_time());
    println!("de Broglie length {:.3e} m", dm.de_broglie_wavelength());
    println!("a0 = {:.4e} m/s^2, F0 = {:.4e} N", force.a0, force.f0);

    let amp = DmSignalAmplitude::new(1e-23, 0.053, 1.0, force.a0);
    println!("a_dm = {:.3e} m/s^2", amp.a_dm());
    println!("peak PSD = {:.3e} (m/s^2)^2/Hz", lorentzian_psd(dm.omega(), &amp, &dm));

    // desk-scale line so the series stays short
    let desk = dm.with_q_dm(300.0)?;
    let x = sample_signal(&amp, &desk, 2.0, 5.0 * desk.frequency_hz(), 1)?;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    println!("{} samples, rms {:.3e} (expected {:.3e})", x.len(), rms, amp.a_dm() / 2f64.sqrt());
    Ok(())
}
