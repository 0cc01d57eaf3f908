//! Noise budget of a 20 cm membrane at three readout powers.

use optodm::constants::TWO_PI;
use optodm::grid::GridSpec;
use optodm::membrane::{MembraneSpec, ModeIndex};
use optodm::noisebudget::{detection_bandwidth, NoiseBudget, OpticalReadout};

fn main() -> optodm::Result<()> {
    let spec = MembraneSpec::with_side(0.20);
    let w0 = spec.omega11();
    let grid = GridSpec::default().build(&[(w0, spec.q0)])?;
    for power in [0.1e-3, 1e-3, 10e-3] {
        let ro = OpticalReadout::with_power(power);
        let b = NoiseBudget::compute(&spec, &ro, ModeIndex::FUNDAMENTAL, &grid)?;
        let k = grid.partition_point(|&w| w < w0);
        let dw = detection_bandwidth(&spec, &ro, ModeIndex::FUNDAMENTAL)?;
        println!(
            "P = {:>4.1} mW  sqrt(Sxx_imp) = {:.3e}  at f11: Saa_det = {:.3e}, Saa_sql = {:.3e}  dw_det = 2pi x {:.3} Hz",
            power * 1e3,
            b.sxx_imp[k].sqrt(),
            b.saa_det[k],
            b.saa_sql[k],
            dw / TWO_PI
        );
    }
    Ok(())
}
