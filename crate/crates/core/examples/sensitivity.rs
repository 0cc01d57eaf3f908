//! Sensitivity of a 10 cm membrane at one coherence time and one year.

use optodm::constants::{TWO_PI, YEAR};
use optodm::dmfield::DmModel;
use optodm::estimator::{g_min_thermal_floor, sensitivity_curve, NoiseModel};
use optodm::grid::GridSpec;
use optodm::materials::{suppression_factor, Composition, CouplingChannel};
use optodm::membrane::{overlap_factor, MembraneSpec, ModeIndex};
use optodm::noisebudget::OpticalReadout;

fn main() -> optodm::Result<()> {
    let spec = MembraneSpec::with_side(0.10);
    let ro = OpticalReadout::default();
    let w0 = spec.omega11();
    let dm = DmModel::at_omega(w0)?;
    let f12 = suppression_factor(&Composition::silicon_nitride(), &Composition::beryllium(), CouplingChannel::BMinusL)?;
    let grid = GridSpec::default().build(&[(w0, spec.q0)])?;
    for (label, tau) in [("tau_dm", dm.coherence_time()), ("1 year", YEAR)] {
        let curve = sensitivity_curve(&spec, &ro, &grid, f12, NoiseModel::SingleMode(ModeIndex::FUNDAMENTAL), &dm, tau)?;
        let best = curve.best().expect("non-empty grid");
        let floor = g_min_thermal_floor(&spec, &dm, f12, overlap_factor(ModeIndex::FUNDAMENTAL), tau)?;
        println!(
            "{label:<7} best g_min = {:.3e} at {:.3} Hz ({}), thermal floor {:.3e}",
            best.g_min,
            best.omega / TWO_PI,
            best.regime,
            floor.g_min
        );
    }
    Ok(())
}
