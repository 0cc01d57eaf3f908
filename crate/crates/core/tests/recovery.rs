use optodm::constants::TWO_PI;
use optodm::montecarlo::{expected_bound, recover, synthesize_output, FloorMode, SimulationConfig};

const G_INJ: f64 = 3e-19;

#[test]
fn injections_recovered_within_three_sigma() {
    let mut hits = 0;
    for s in 0..20 {
        let cfg = SimulationConfig::desk(G_INJ, 20.0, 100 + s);
        let r = recover(&cfg, &synthesize_output(&cfg).unwrap()).unwrap();
        assert!(r.detected, "seed {s}: snr {}", r.snr);
        if (r.g_hat - G_INJ).abs() <= 3.0 * r.g_err {
            hits += 1;
        }
    }
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn null_upper_limits_track_closed_form() {
    let mut ratios = Vec::new();
    for s in 0..20 {
        let cfg = SimulationConfig::desk(0.0, 20.0, 500 + s);
        let r = recover(&cfg, &synthesize_output(&cfg).unwrap()).unwrap();
        let limit = r.upper_limit.unwrap_or(r.g_hat + r.g_err);
        ratios.push(limit / expected_bound(&cfg).unwrap());
    }
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[9] + ratios[10]);
    assert!((0.5..=2.0).contains(&median), "median {median}, all {ratios:?}");
}

#[test]
fn fitted_floor_agrees_with_model() {
    let cfg = SimulationConfig {
        floor: FloorMode::Fitted,
        ..SimulationConfig::desk(G_INJ, 20.0, 42)
    };
    let x = synthesize_output(&cfg).unwrap();
    let fitted = recover(&cfg, &x).unwrap();
    let modeled = recover(&SimulationConfig { floor: FloorMode::Modeled, ..cfg.clone() }, &x).unwrap();
    assert!((fitted.noise_floor / modeled.noise_floor - 1.0).abs() < 0.2);
    assert!((fitted.g_hat / modeled.g_hat - 1.0).abs() < 0.2);
}

#[test]
fn off_resonance_injection_is_not_claimed() {
    // line 20% above the fundamental, imprecision-limited; inject a tenth of the bound
    let base = SimulationConfig::desk(0.0, 20.0, 77);
    let dm = base.dm.with_omega(1.2 * base.spec.omega11()).unwrap();
    let mut cfg = SimulationConfig {
        dm,
        sample_rate: 5.0 * 1.2 * base.spec.omega11() / TWO_PI,
        duration: 20.0 * dm.coherence_time(),
        segment_duration: dm.coherence_time(),
        ..base.clone()
    };
    let bound = expected_bound(&cfg).unwrap();
    assert!(bound > 10.0 * expected_bound(&base).unwrap());
    cfg.injected_g = 0.1 * bound;
    let r = recover(&cfg, &synthesize_output(&cfg).unwrap()).unwrap();
    assert!(r.snr < 5.0, "snr {}", r.snr);
    let limit = r.upper_limit.unwrap_or(r.g_hat + 3.0 * r.g_err);
    assert!(limit > cfg.injected_g);
}

#[test]
fn too_short_runs_are_rejected() {
    let cfg = SimulationConfig::desk(G_INJ, 1.0, 1);
    let x = synthesize_output(&cfg).unwrap();
    assert!(recover(&cfg, &x).is_err());
}
