//! Minimum detectable coupling versus integration time, below and above the
//! coherence time.

use optodm::montecarlo::{fit_scaling, scaling_experiment, SimulationConfig};

fn main() -> optodm::Result<()> {
    let base = SimulationConfig::desk(0.0, 1.0, 1);
    let tdm = base.coherence_time();
    let taus: Vec<f64> = [0.0625, 0.125, 0.25, 0.5, 2.0, 4.0, 8.0, 16.0].iter().map(|x| x * tdm).collect();
    let pts = scaling_experiment(&base, &taus, 500)?;
    for p in &pts {
        println!("tau = {:>7.3} tau_dm  g_min = {:.3e}  ({} segments)", p.tau / tdm, p.g_min, p.segments);
    }
    let fit = fit_scaling(&pts, tdm)?;
    println!("slopes {:.3} / {:.3}", fit.slope_sub, fit.slope_super);
    Ok(())
}
