use optodm::constants::TWO_PI;
use optodm::dmfield::DmModel;
use optodm::membrane::MembraneSpec;
use optodm::noisebudget::OpticalReadout;
use optodm::scanplan::{plan_array_campaign, CampaignOptions, CampaignPlan};

const OCTAVE: (f64, f64) = (TWO_PI * 2000.0, TWO_PI * 4000.0);

/// Ten membranes with fundamentals geometrically spaced over 2-4 kHz.
fn array() -> Vec<MembraneSpec> {
    (0..10)
        .map(|k| {
            let f = 2000.0 * 2f64.powf(k as f64 / 9.0);
            MembraneSpec::default().tuned_to(TWO_PI * f)
        })
        .collect()
}

fn campaign(sweep: f64) -> CampaignPlan {
    let specs = array();
    let dm = DmModel::at_omega(specs[0].omega11()).unwrap();
    let options = CampaignOptions {
        band: Some(OCTAVE),
        harmonic_f_max: None,
    };
    plan_array_campaign(&specs, &OpticalReadout::default(), &dm, sweep, options).unwrap()
}

#[test]
fn ten_membranes_cover_the_octave() {
    let plan = campaign(0.10);
    assert!((plan.coverage.fundamental_fraction - 1.0).abs() < 1e-9, "{}", plan.coverage.fundamental_fraction);
    assert_eq!(plan.coverage.intervals.len(), 1);
    let days = plan.wall_clock / 86_400.0;
    println!("octave campaign: {days:.3} days wall clock");
    assert!(plan.plans.iter().all(|p| p.total_time <= plan.wall_clock));
}

#[test]
fn coverage_grows_with_sweep() {
    let sweeps = [0.0, 0.005, 0.01, 0.02, 0.04, 0.08];
    let cover: Vec<f64> = sweeps.iter().map(|&s| campaign(s).coverage.fundamental_fraction).collect();
    assert!(cover.windows(2).all(|w| w[1] >= w[0]), "{cover:?}");
    assert!(cover[0] > 0.0 && cover[0] < 1e-2);
}
