//! Charge-to-mass ratios and differential suppression factors for the
//! built-in materials.

use optodm::materials::{charge_per_amu, suppression_factor, Composition, CouplingChannel};

fn main() -> optodm::Result<()> {
    let names = ["Si3N4", "Be", "SiO2", "Si", "H2O"];
    println!("{:<8} {:>10} {:>10}", "material", "(B-L)/amu", "B/amu");
    for name in names {
        let c = Composition::builtin(name)?;
        println!(
            "{:<8} {:>10.5} {:>10.5}",
            name,
            charge_per_amu(&c, CouplingChannel::BMinusL)?,
            charge_per_amu(&c, CouplingChannel::B)?
        );
    }

    let si = Composition::silicon_nitride();
    let be = Composition::beryllium();
    for ch in [CouplingChannel::BMinusL, CouplingChannel::B] {
        println!("f12(Si3N4, Be, {ch}) = {:.5}", suppression_factor(&si, &be, ch)?);
    }
    Ok(())
}
