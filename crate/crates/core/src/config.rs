//! TOML run configuration. Section names mirror the library modules and every
//! physical key carries its unit in the name (`power_mw`, `stress_gpa`, ...).
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::{TWO_PI, YEAR};
use crate::dmfield::{compton_frequency, DmModel, DEFAULT_Q_DM, DEFAULT_V_VIR};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::materials::{suppression_factor, Composition, CouplingChannel, IsotopeTable};
use crate::membrane::{MembraneSpec, DEFAULT_MAX_MODES, DEFAULT_MODE_F_MAX};
use crate::montecarlo::{FloorMode, NoiseSources, SimulationConfig};
use crate::noisebudget::OpticalReadout;
use crate::scanplan::DEFAULT_TUNING_LIMIT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub materials: MaterialsSection,
    pub membrane: MembraneSection,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub dm: DmSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub gmin: GminSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub montecarlo: MonteCarloSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsSection {
    pub test_material: String,
    pub reference_material: String,
    pub channel: CouplingChannel,
    /// Optional `symbol Z A mass_amu` override file, relative to the config.
    pub isotope_table: Option<PathBuf>,
    pub custom: Vec<CustomMaterial>,
}

impl Default for MaterialsSection {
    fn default() -> Self {
        MaterialsSection {
            test_material: "Si3N4".into(),
            reference_material: "Be".into(),
            channel: CouplingChannel::BMinusL,
            isotope_table: None,
            custom: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMaterial {
    pub name: String,
    /// `[symbol, count]` pairs.
    pub parts: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembraneSection {
    #[serde(default = "default_sides")]
    pub sides_cm: Vec<f64>,
    #[serde(default = "default_thickness")]
    pub thickness_nm: f64,
    #[serde(default = "default_density")]
    pub density_kg_m3: f64,
    pub stress_gpa: f64,
    #[serde(default = "default_q0")]
    pub q0: f64,
    #[serde(default = "default_temperature")]
    pub temperature_mk: f64,
}

fn default_sides() -> Vec<f64> {
    vec![10.0]
}
fn default_thickness() -> f64 {
    200.0
}
fn default_density() -> f64 {
    3100.0
}
fn default_q0() -> f64 {
    1.0e9
}
fn default_temperature() -> f64 {
    10.0
}

impl Default for MembraneSection {
    fn default() -> Self {
        MembraneSection {
            sides_cm: default_sides(),
            thickness_nm: default_thickness(),
            density_kg_m3: default_density(),
            stress_gpa: 1.0,
            q0: default_q0(),
            temperature_mk: default_temperature(),
        }
    }
}

impl MembraneSection {
    pub fn specs(&self) -> Result<Vec<MembraneSpec>> {
        if self.sides_cm.is_empty() {
            return Err(Error::Config("membrane.sides_cm must list at least one side".into()));
        }
        self.sides_cm
            .iter()
            .map(|&side| {
                let spec = MembraneSpec {
                    side: side / 100.0,
                    thickness: self.thickness_nm / 1e9,
                    density: self.density_kg_m3,
                    stress: self.stress_gpa * 1e9,
                    q0: self.q0,
                    temperature: self.temperature_mk / 1e3,
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub finesse: f64,
    pub power_mw: f64,
    pub wavelength_nm: f64,
    pub efficiency: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        let ro = OpticalReadout::default();
        ReadoutSection {
            finesse: ro.finesse,
            power_mw: ro.power * 1e3,
            wavelength_nm: ro.wavelength * 1e9,
            efficiency: ro.efficiency,
        }
    }
}

impl ReadoutSection {
    pub fn readout(&self) -> Result<OpticalReadout> {
        let ro = OpticalReadout {
            finesse: self.finesse,
            power: self.power_mw / 1e3,
            wavelength: self.wavelength_nm / 1e9,
            efficiency: self.efficiency,
        };
        ro.validate()?;
        Ok(ro)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmSection {
    /// Fix the DM mass; otherwise each membrane's fundamental is used.
    pub mass_ev: Option<f64>,
    pub frequency_hz: Option<f64>,
    pub q_dm: f64,
    pub rho_gev_cm3: f64,
    pub v_vir: f64,
}

impl Default for DmSection {
    fn default() -> Self {
        DmSection {
            mass_ev: None,
            frequency_hz: None,
            q_dm: DEFAULT_Q_DM,
            rho_gev_cm3: crate::constants::RHO_DM_LOCAL,
            v_vir: DEFAULT_V_VIR,
        }
    }
}

impl DmSection {
    /// DM model at the configured mass, or at `fallback_omega` when none is set.
    pub fn model(&self, fallback_omega: f64) -> Result<DmModel> {
        let omega = match (self.mass_ev, self.frequency_hz) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("dm: set mass_ev or frequency_hz, not both".into()))
            }
            (Some(m), None) => compton_frequency(m)?,
            (None, Some(f)) => TWO_PI * f,
            (None, None) => fallback_omega,
        };
        let template = DmModel::at_omega(omega)?;
        DmModel::new(template.mass_ev, self.q_dm, self.rho_gev_cm3, self.v_vir)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
    pub refine_points: usize,
    pub refine_linewidths: f64,
    pub ladder_points: usize,
    pub ladder_span: f64,
    /// Highest mode frequency kept by mode enumeration.
    pub mode_f_max_hz: f64,
    pub max_modes: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSection {
            f_min_hz: g.f_min_hz,
            f_max_hz: g.f_max_hz,
            points: g.points,
            refine_points: g.refine_points,
            refine_linewidths: g.refine_linewidths,
            ladder_points: g.ladder_points,
            ladder_span: g.ladder_span,
            mode_f_max_hz: DEFAULT_MODE_F_MAX,
            max_modes: DEFAULT_MAX_MODES,
        }
    }
}

impl GridSection {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            f_min_hz: self.f_min_hz,
            f_max_hz: self.f_max_hz,
            points: self.points,
            refine_points: self.refine_points,
            refine_linewidths: self.refine_linewidths,
            ladder_points: self.ladder_points,
            ladder_span: self.ladder_span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GminSection {
    /// Integration times: `"coherence"` (τ_DM at the fundamental) or a number
    /// with an optional `s`, `h`, `d`, `y` suffix.
    pub integration_times: Vec<String>,
    pub multimode: bool,
}

impl Default for GminSection {
    fn default() -> Self {
        GminSection {
            integration_times: vec!["coherence".into(), "1y".into()],
            multimode: false,
        }
    }
}

/// An integration time as written in the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationTime {
    Coherence,
    Seconds(f64),
}

impl IntegrationTime {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "coherence" {
            return Ok(IntegrationTime::Coherence);
        }
        let (num, scale) = match s.char_indices().last() {
            Some((i, 's')) => (&s[..i], 1.0),
            Some((i, 'h')) => (&s[..i], 3600.0),
            Some((i, 'd')) => (&s[..i], 86_400.0),
            Some((i, 'y')) => (&s[..i], YEAR),
            _ => (s, 1.0),
        };
        match num.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(IntegrationTime::Seconds(v * scale)),
            _ => Err(Error::Config(format!(
                "gmin.integration_times: cannot parse '{s}' (use 'coherence' or e.g. '3600', '1d', '1y')"
            ))),
        }
    }

    pub fn seconds(&self, tau_dm: f64) -> f64 {
        match *self {
            IntegrationTime::Coherence => tau_dm,
            IntegrationTime::Seconds(t) => t,
        }
    }

    /// Short label used in output file names.
    pub fn label(&self) -> String {
        match *self {
            IntegrationTime::Coherence => "tau_dm".into(),
            IntegrationTime::Seconds(t) if (t / YEAR - (t / YEAR).round()).abs() < 1e-9 => {
                format!("{}y", (t / YEAR).round())
            }
            IntegrationTime::Seconds(t) => format!("{t}s"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    /// Scan a frequency band with the first membrane.
    Band,
    /// Plan as many steps as fit in `budget_s`.
    #[default]
    Duration,
    /// Every membrane scans its fundamental in parallel.
    Campaign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub kind: ScanKind,
    /// Defaults to the first membrane's fundamental.
    pub f_start_hz: Option<f64>,
    pub f_end_hz: Option<f64>,
    /// Fractional stress-tuning range above the fundamental.
    pub tuning_limit: f64,
    pub unlimited_tuning: bool,
    pub budget_s: f64,
    /// Fixed step width; when absent the detection bandwidth is used.
    pub step_hz: Option<f64>,
    /// Fixed dwell; when absent the coherence time is used.
    pub dwell_s: Option<f64>,
    pub fractional_sweep: f64,
    pub harmonic_f_max_hz: Option<f64>,
    pub band_hz: Option<(f64, f64)>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            kind: ScanKind::Duration,
            f_start_hz: None,
            f_end_hz: None,
            tuning_limit: DEFAULT_TUNING_LIMIT,
            unlimited_tuning: false,
            budget_s: 86_400.0,
            step_hz: None,
            dwell_s: None,
            fractional_sweep: DEFAULT_TUNING_LIMIT,
            harmonic_f_max_hz: None,
            band_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub thermal: bool,
    pub backaction: bool,
    pub imprecision: bool,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            thermal: true,
            backaction: true,
            imprecision: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub injected_g: f64,
    /// Run length in coherence times; ignored when `duration_s` is set.
    pub coherence_times: f64,
    pub duration_s: Option<f64>,
    /// Defaults to 5 × the fundamental.
    pub sample_rate_hz: Option<f64>,
    /// Defaults to one coherence time.
    pub segment_s: Option<f64>,
    pub seed: u64,
    /// Quality factor used for the simulated membrane (overrides `membrane.q0`).
    pub q0: f64,
    /// Overrides `dm.q_dm` for the simulation.
    pub q_dm: f64,
    pub noise: NoiseSection,
    pub floor: FloorMode,
    pub snr_threshold: f64,
    /// Also write the raw series as little-endian f64.
    pub dump_series: bool,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            injected_g: 3.0e-19,
            coherence_times: 20.0,
            duration_s: None,
            sample_rate_hz: None,
            segment_s: None,
            seed: 1,
            q0: 1.0e5,
            q_dm: 300.0,
            noise: NoiseSection::default(),
            floor: FloorMode::Modeled,
            snr_threshold: 1.0,
            dump_series: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            materials: MaterialsSection::default(),
            membrane: MembraneSection::default(),
            readout: ReadoutSection::default(),
            dm: DmSection::default(),
            grid: GridSection::default(),
            gmin: GminSection::default(),
            scan: ScanSection::default(),
            montecarlo: MonteCarloSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            if let Some(t) = cfg.materials.isotope_table.as_mut() {
                if t.is_relative() {
                    *t = dir.join(&*t);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.membrane.specs()?;
        self.readout.readout()?;
        self.grid.spec().validate()?;
        for t in &self.gmin.integration_times {
            IntegrationTime::parse(t)?;
        }
        if !(self.scan.tuning_limit >= 0.0) {
            return Err(Error::Config("scan.tuning_limit must be non-negative".into()));
        }
        Ok(())
    }

    pub fn readout(&self) -> Result<OpticalReadout> {
        self.readout.readout()
    }

    pub fn membranes(&self) -> Result<Vec<MembraneSpec>> {
        self.membrane.specs()
    }

    pub fn integration_times(&self) -> Result<Vec<IntegrationTime>> {
        self.gmin.integration_times.iter().map(|s| IntegrationTime::parse(s)).collect()
    }

    pub fn tuning_limit(&self) -> Option<f64> {
        (!self.scan.unlimited_tuning).then_some(self.scan.tuning_limit)
    }

    pub fn isotope_table(&self) -> Result<IsotopeTable> {
        let mut table = IsotopeTable::builtin();
        if let Some(path) = &self.materials.isotope_table {
            table.merge_file(path)?;
        }
        Ok(table)
    }

    pub fn composition(&self, name: &str) -> Result<Composition> {
        if let Some(c) = self.materials.custom.iter().find(|c| c.name == name) {
            let table = self.isotope_table()?;
            let parts: Vec<(&str, f64)> = c.parts.iter().map(|(s, n)| (s.as_str(), *n)).collect();
            return Composition::from_symbols(&c.name, &table, &parts);
        }
        Composition::builtin(name)
    }

    /// Suppression factor of the configured material pair in `channel`
    /// (defaults to the configured channel).
    pub fn f12(&self, channel: Option<CouplingChannel>) -> Result<f64> {
        let a = self.composition(&self.materials.test_material)?;
        let b = self.composition(&self.materials.reference_material)?;
        suppression_factor(&a, &b, channel.unwrap_or(self.materials.channel))
    }

    /// Monte Carlo configuration: the first membrane with the simulation Q0,
    /// DM line on its fundamental unless a mass is configured.
    pub fn simulation(&self, channel: Option<CouplingChannel>) -> Result<SimulationConfig> {
        let mc = &self.montecarlo;
        let spec = MembraneSpec {
            q0: mc.q0,
            ..self.membranes()?[0]
        };
        let w0 = spec.omega11();
        let dm = self.dm.model(w0)?.with_q_dm(mc.q_dm)?;
        let tau_dm = dm.coherence_time();
        let cfg = SimulationConfig {
            spec,
            readout: self.readout()?,
            dm,
            injected_g: mc.injected_g,
            f12: self.f12(channel)?,
            modes: vec![crate::membrane::ModeIndex::FUNDAMENTAL],
            duration: mc.duration_s.unwrap_or(mc.coherence_times * tau_dm),
            sample_rate: mc.sample_rate_hz.unwrap_or(5.0 * w0 / TWO_PI),
            segment_duration: mc.segment_s.unwrap_or(tau_dm),
            seed: mc.seed,
            noise: NoiseSources {
                thermal: mc.noise.thermal,
                backaction: mc.noise.backaction,
                imprecision: mc.noise.imprecision,
            },
            floor: mc.floor,
            snr_threshold: mc.snr_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::parse("[membrane]\nstress_gpa = 1.0\n").unwrap();
        assert_eq!(cfg.membrane.sides_cm, vec![10.0]);
        assert_eq!(cfg.membranes().unwrap()[0], MembraneSpec::default());
        assert_eq!(cfg.readout().unwrap(), OpticalReadout::default());
    }

    #[test]
    fn missing_stress_names_key() {
        let err = RunConfig::parse("[membrane]\nsides_cm = [20.0]\n").unwrap_err();
        assert!(err.to_string().contains("stress_gpa"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::parse("[membrane]\nstress_gpa = 1.0\n[readout]\npower = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("power"), "{err}");
    }

    #[test]
    fn integration_time_parsing() {
        assert_eq!(IntegrationTime::parse("coherence").unwrap(), IntegrationTime::Coherence);
        assert_eq!(IntegrationTime::parse("1y").unwrap(), IntegrationTime::Seconds(YEAR));
        assert_eq!(IntegrationTime::parse("90s").unwrap(), IntegrationTime::Seconds(90.0));
        assert_eq!(IntegrationTime::parse("2h").unwrap(), IntegrationTime::Seconds(7200.0));
        assert!(IntegrationTime::parse("-1").is_err());
        assert!(IntegrationTime::parse("week").is_err());
        assert_eq!(IntegrationTime::Seconds(YEAR).label(), "1y");
    }

    #[test]
    fn simulation_matches_desk() {
        let cfg = RunConfig::default();
        let sim = cfg.simulation(None).unwrap();
        assert_eq!(sim, SimulationConfig::desk(3.0e-19, 20.0, 1));
    }

    #[test]
    fn custom_material() {
        let text = r#"
[materials]
test_material = "SiN"
reference_material = "Be"
[[materials.custom]]
name = "SiN"
parts = [["Si-28", 3.0], ["N-14", 4.0]]
[membrane]
stress_gpa = 1.0
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let f = cfg.f12(None).unwrap();
        assert!((f - 0.0546011448).abs() < 1e-8);
    }
}
