//! Compare a one-year 10 cm forecast with the shipped bound curves.

use std::path::Path;

use optodm::bounds::{compare_bounds, BoundCurve};
use optodm::constants::YEAR;
use optodm::dmfield::DmModel;
use optodm::estimator::{sensitivity_curve, NoiseModel};
use optodm::grid::GridSpec;
use optodm::materials::CouplingChannel;
use optodm::membrane::{MembraneSpec, ModeIndex};
use optodm::noisebudget::OpticalReadout;

fn main() -> optodm::Result<()> {
    let spec = MembraneSpec::with_side(0.10);
    let w0 = spec.omega11();
    let grid = GridSpec::default().build(&[(w0, spec.q0)])?;
    let dm = DmModel::at_omega(w0)?;
    let curve = sensitivity_curve(
        &spec,
        &OpticalReadout::default(),
        &grid,
        0.053,
        NoiseModel::SingleMode(ModeIndex::FUNDAMENTAL),
        &dm,
        YEAR,
    )?;
    let rows: Vec<_> = curve.rows().collect();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bounds");
    for file in ["eot_wash.csv", "ligo.csv"] {
        let bound = BoundCurve::read(&dir.join(file))?;
        let c = compare_bounds(&rows, CouplingChannel::BMinusL, &bound);
        match (c.max_ratio, c.max_ratio_f_hz) {
            (Some(r), Some(f)) => println!("{}: best improvement x{r:.1} at {f:.2} Hz", c.label),
            _ => println!("{}: no frequency overlap", c.label),
        }
    }
    Ok(())
}
