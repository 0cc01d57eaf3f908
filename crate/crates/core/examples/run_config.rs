//! Parse a run configuration and show what it resolves to.

use optodm::config::RunConfig;

const TEXT: &str = r#"
[membrane]
sides_cm = [5.0, 10.0]
stress_gpa = 1.0
q0 = 1e8

[readout]
power_mw = 1.0

[gmin]
integration_times = ["coherence", "30d", "1y"]
"#;

fn main() -> optodm::Result<()> {
    let cfg = RunConfig::parse(TEXT)?;
    let ro = cfg.readout()?;
    println!("readout: F = {}, P = {} W", ro.finesse, ro.power);
    for spec in cfg.membranes()? {
        println!(
            "membrane {:.0} cm: f11 = {:.1} Hz, m_eff = {:.3e} kg",
            spec.side * 1e2,
            spec.omega11() / std::f64::consts::TAU,
            spec.effective_mass()
        );
    }
    for t in cfg.integration_times()? {
        println!("integration time {}", t.label());
    }
    println!("f12 = {:.4}", cfg.f12(None)?);
    Ok(())
}
