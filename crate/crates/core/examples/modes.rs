//! Mode table of a 10 cm membrane up to five times the fundamental.

use optodm::membrane::{enumerate_modes, MembraneSpec};

fn main() -> optodm::Result<()> {
    let spec = MembraneSpec::with_side(0.10);
    let f11 = spec.omega11() / std::f64::consts::TAU;
    let modes = enumerate_modes(&spec, 5.0 * f11, 200)?;
    println!("{} modes below {:.0} Hz", modes.len(), 5.0 * f11);
    println!("{:>3} {:>3} {:>10} {:>9}", "i", "j", "f (Hz)", "beta");
    for m in modes.iter().filter(|m| m.beta != 0.0) {
        println!("{:>3} {:>3} {:>10.2} {:>9.5}", m.index.i, m.index.j, m.frequency_hz(), m.beta);
    }
    Ok(())
}
