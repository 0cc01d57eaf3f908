use optodm::constants::{K_B, TWO_PI};
use optodm::dmfield::{sample_signal, DmModel, DmSignalAmplitude};
use optodm::estimator::{fit_lorentzian, periodogram, LorentzianFit};
use optodm::membrane::{chi_norm_sq, MembraneSpec, ModeIndex};
use optodm::montecarlo::{synthesize_output, FloorMode, NoiseSources, SimulationConfig};
use optodm::noisebudget::{thermal_psd, OpticalReadout};

#[test]
fn phase_jump_lineshape() {
    let dm = DmModel::at_omega(TWO_PI * 200.0).unwrap().with_q_dm(300.0).unwrap();
    let tau = dm.coherence_time();
    // a0 = √3 cancels the polarization average, so a_dm = 1
    let amp = DmSignalAmplitude::new(1.0, 1.0, 1.0, 3f64.sqrt());
    assert!((amp.a_dm() - 1.0).abs() < 1e-15);
    let fs = 1000.0;
    let seg = (40.0 * tau * fs).round() / fs;
    let x = sample_signal(&amp, &dm, 200.0 * seg, fs, 11).unwrap();
    let est = periodogram(&x, fs, seg).unwrap();
    assert_eq!(est.segments, 200);

    let (mut w, mut p) = (Vec::new(), Vec::new());
    for k in 0..est.power.len() {
        if (est.omega(k) - dm.omega()).abs() <= 5.0 / tau {
            w.push(est.omega(k));
            p.push(est.power[k]);
        }
    }
    let guess = LorentzianFit {
        peak: tau,
        center: dm.omega(),
        hwhm: 1.0 / tau,
    };
    let fit = fit_lorentzian(&w, &p, guess).unwrap();
    let q_err = fit.quality_factor() / 300.0 - 1.0;
    let peak_err = fit.peak / tau - 1.0;
    assert!(q_err.abs() < 0.10, "Q off by {q_err}");
    assert!(peak_err.abs() < 0.15, "peak off by {peak_err}");

    // total power a_dm²/2
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    assert!((var / 0.5 - 1.0).abs() < 0.05, "{var}");
}

fn thermal_only(f0: f64, q0: f64, fs: f64, segment: f64, blocks: usize) -> SimulationConfig {
    let spec = MembraneSpec {
        q0,
        ..MembraneSpec::default()
    }
    .tuned_to(TWO_PI * f0);
    let dm = DmModel::at_omega(TWO_PI * f0).unwrap().with_q_dm(300.0).unwrap();
    SimulationConfig {
        spec,
        readout: OpticalReadout::default(),
        dm,
        injected_g: 0.0,
        f12: 0.05,
        modes: vec![ModeIndex::FUNDAMENTAL],
        duration: segment * blocks as f64,
        sample_rate: fs,
        segment_duration: segment,
        seed: 3,
        noise: NoiseSources {
            thermal: true,
            backaction: false,
            imprecision: false,
        },
        floor: FloorMode::Modeled,
        snr_threshold: 1.0,
    }
}

#[test]
fn thermal_equipartition() {
    let cfg = thermal_only(100.0, 1e3, 500.0, 50.0, 400);
    let x = synthesize_output(&cfg).unwrap();
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;

    let w0 = cfg.spec.omega11();
    let s_th = thermal_psd(&cfg.spec, w0);
    // ∫|χ|² S df by Simpson on a grid dense across the line
    let n = 2_000_000;
    let f_max = cfg.sample_rate / 2.0;
    let h = f_max / n as f64;
    let mut integral = 0.0;
    for k in 0..=n {
        let f = k as f64 * h;
        let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        integral += c * chi_norm_sq(w0, cfg.spec.q0, TWO_PI * f) * s_th;
    }
    integral *= h / 3.0;
    let kt = K_B * cfg.spec.temperature / (cfg.spec.effective_mass() * w0 * w0);
    assert!((integral / kt - 1.0).abs() < 0.01, "{integral} vs {kt}");
    assert!((var / integral - 1.0).abs() < 0.05, "{var} vs {integral}");
}

fn closure(noise: NoiseSources) {
    let base = SimulationConfig::desk(0.0, 1.0, 21);
    let segment = base.segment_samples() as f64 / base.sample_rate;
    let cfg = SimulationConfig {
        noise,
        duration: 400.0 * segment,
        ..base
    };
    let x = synthesize_output(&cfg).unwrap();
    let est = periodogram(&x, cfg.sample_rate, segment).unwrap();
    assert_eq!(est.segments, 400);
    let w0 = cfg.spec.omega11();
    let m = cfg.spec.effective_mass();
    let drive = if noise.thermal { thermal_psd(&cfg.spec, w0) } else { 0.0 }
        + if noise.backaction { cfg.readout.backaction(m) } else { 0.0 };
    let imp = if noise.imprecision { cfg.readout.imprecision() } else { 0.0 };

    let tol = 3.0 / (est.segments as f64).sqrt();
    let bins = 1..est.power.len() - 1;
    let ratios: Vec<f64> = bins
        .map(|k| est.power[k] / (imp + chi_norm_sq(w0, cfg.spec.q0, est.omega(k)) * drive))
        .collect();
    let inside = ratios.iter().filter(|r| (*r - 1.0).abs() <= tol).count();
    assert!(inside as f64 >= 0.99 * ratios.len() as f64, "{inside}/{}", ratios.len());
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let tol_mean = 3.0 / ((est.segments * ratios.len()) as f64).sqrt();
    assert!((mean - 1.0).abs() < tol_mean, "mean ratio {mean}");
}

#[test]
fn periodogram_closure_driven_only() {
    closure(NoiseSources {
        imprecision: false,
        ..NoiseSources::ALL
    });
}

#[test]
fn periodogram_closure_all_terms() {
    closure(NoiseSources::ALL);
}

#[test]
fn output_is_linear_in_coupling() {
    let quiet = |g: f64| SimulationConfig {
        noise: NoiseSources::NONE,
        ..SimulationConfig::desk(g, 4.0, 5)
    };
    let a = synthesize_output(&quiet(1e-19)).unwrap();
    let b = synthesize_output(&quiet(3e-19)).unwrap();
    let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak > 0.0);
    for (x, y) in a.iter().zip(&b) {
        assert!((3.0 * x - y).abs() <= 1e-9 * peak);
    }
    // signal and noise superpose
    let both = synthesize_output(&SimulationConfig::desk(1e-19, 4.0, 5)).unwrap();
    let noise = synthesize_output(&SimulationConfig::desk(0.0, 4.0, 5)).unwrap();
    let scale = noise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((s, n), t) in a.iter().zip(&noise).zip(&both) {
        assert!((s + n - t).abs() <= 1e-9 * scale);
    }
}

#[test]
fn synthesis_is_deterministic() {
    let cfg = SimulationConfig::desk(3e-19, 4.0, 9);
    let a = synthesize_output(&cfg).unwrap();
    let b = synthesize_output(&cfg).unwrap();
    assert_eq!(a, b);
    let c = synthesize_output(&SimulationConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a, c);
}
