//! A day of fixed 0.2 Hz steps, and a stress-tuned octave scan.

use optodm::constants::TWO_PI;
use optodm::dmfield::DmModel;
use optodm::membrane::MembraneSpec;
use optodm::noisebudget::OpticalReadout;
use optodm::scanplan::{plan_for_duration, plan_scan, plan_scan_with_limit, FixedStep};

fn main() -> optodm::Result<()> {
    let spec = MembraneSpec::with_side(0.20);
    let day = plan_for_duration(&FixedStep { width: TWO_PI * 0.2, dwell: 90.0 }, spec.omega11(), 86_400.0)?;
    println!("day scan: {} steps, {:.1} Hz", day.steps.len(), day.covered_width() / TWO_PI);

    let spec = MembraneSpec::with_side(0.10);
    let w = spec.omega11();
    let ro = OpticalReadout::default();
    let dm = DmModel::at_omega(w)?;
    let limited = plan_scan(&spec, &ro, &dm, w, 2.0 * w)?;
    if let Some(msg) = &limited.warning {
        println!("warning: {msg}");
    }
    println!("limited: {} steps, {:.2} days", limited.steps.len(), limited.total_time / 86_400.0);
    let full = plan_scan_with_limit(&spec, &ro, &dm, w, 2.0 * w, None)?;
    println!("octave:  {} steps, {:.2} days", full.steps.len(), full.total_time / 86_400.0);
    Ok(())
}
