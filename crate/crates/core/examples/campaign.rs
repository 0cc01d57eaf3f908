//! Four-membrane array sweeping each fundamental by 10%.

use optodm::constants::TWO_PI;
use optodm::dmfield::DmModel;
use optodm::membrane::MembraneSpec;
use optodm::noisebudget::OpticalReadout;
use optodm::scanplan::{plan_array_campaign, CampaignOptions};

fn main() -> optodm::Result<()> {
    let specs: Vec<MembraneSpec> = [0.025, 0.05, 0.10, 0.20].iter().map(|&s| MembraneSpec::with_side(s)).collect();
    let dm = DmModel::at_omega(specs[0].omega11())?;
    let options = CampaignOptions {
        band: Some((TWO_PI * 2e3, TWO_PI * 25e3)),
        harmonic_f_max: Some(25e3),
    };
    let plan = plan_array_campaign(&specs, &OpticalReadout::default(), &dm, 0.10, options)?;
    for (spec, p) in specs.iter().zip(&plan.plans) {
        println!(
            "{:>5.1} cm: {:>6} steps, {:.2} days",
            spec.side * 1e2,
            p.steps.len(),
            p.total_time / 86_400.0
        );
    }
    println!(
        "wall clock {:.2} days; band coverage {:.3} (fundamentals), {:.3} (with harmonics)",
        plan.wall_clock / 86_400.0,
        plan.coverage.fundamental_fraction,
        plan.coverage.with_harmonics_fraction
    );
    Ok(())
}
