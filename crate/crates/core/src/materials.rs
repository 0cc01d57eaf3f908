//! Material compositions, coupling channels, and the dark-photon force scale.
//!
//! A dark photon coupled to baryon (B) or baryon-minus-lepton (B−L) number
//! accelerates a body in proportion to its charge-to-mass ratio. Two bodies of
//! different composition therefore see a differential acceleration scaled by
//! the suppression factor `f12 = |q1/μ1 − q2/μ2|`, where `q` is the coupling
//! charge and `μ` the mass in atomic mass units.
//!
//! The B channel difference comes entirely from nuclear mass defects, so
//! isotope masses must be tabulated to well below 1 amu precision.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{AMU, E_CHARGE, EPSILON_0, GEV_PER_CM3};
use crate::error::{Error, Result};

/// A single nuclide (neutral atom, electrons included in `mass_amu`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isotope {
    pub symbol: String,
    pub z: u32,
    pub a: u32,
    pub mass_amu: f64,
}

impl Isotope {
    pub fn new(symbol: impl Into<String>, z: u32, a: u32, mass_amu: f64) -> Result<Self> {
        let iso = Isotope {
            symbol: symbol.into(),
            z,
            a,
            mass_amu,
        };
        iso.validate()?;
        Ok(iso)
    }

    /// The free neutron; the only entry allowed to carry `Z = 0`.
    pub fn neutron() -> Self {
        Isotope {
            symbol: "n".into(),
            z: 0,
            a: 1,
            mass_amu: 1.008_664_916,
        }
    }

    pub fn is_neutron(&self) -> bool {
        self.z == 0 && self.a == 1
    }

    fn validate(&self) -> Result<()> {
        if self.z == 0 && !self.is_neutron() {
            return Err(Error::invalid(format!("{}: Z must be >= 1", self.symbol)));
        }
        if self.z > self.a {
            return Err(Error::invalid(format!(
                "{}: Z = {} exceeds A = {}",
                self.symbol, self.z, self.a
            )));
        }
        if !self.mass_amu.is_finite() || (self.mass_amu - f64::from(self.a)).abs() >= 0.3 {
            return Err(Error::invalid(format!(
                "{}: mass {} amu is not within 0.3 of A = {}",
                self.symbol, self.mass_amu, self.a
            )));
        }
        Ok(())
    }

    fn charge(&self, channel: CouplingChannel) -> f64 {
        match channel {
            CouplingChannel::BMinusL => f64::from(self.a - self.z),
            CouplingChannel::B => f64::from(self.a),
        }
    }
}

/// Lookup table of isotopes keyed by symbol (e.g. `"Si-28"`).
#[derive(Debug, Clone, Default)]
pub struct IsotopeTable {
    entries: BTreeMap<String, Isotope>,
}

impl IsotopeTable {
    /// Built-in table. Masses from the 2020 Atomic Mass Evaluation.
    pub fn builtin() -> Self {
        let rows = [
            ("H-1", 1, 1, 1.007_825_032),
            ("Be-9", 4, 9, 9.012_183_062),
            ("N-14", 7, 14, 14.003_074_004),
            ("O-16", 8, 16, 15.994_914_620),
            ("Si-28", 14, 28, 27.976_926_535),
        ];
        let mut table = IsotopeTable::default();
        for (symbol, z, a, mass) in rows {
            table.insert(Isotope {
                symbol: symbol.into(),
                z,
                a,
                mass_amu: mass,
            });
        }
        table.insert(Isotope::neutron());
        table
    }

    pub fn insert(&mut self, iso: Isotope) {
        self.entries.insert(iso.symbol.clone(), iso);
    }

    pub fn get(&self, symbol: &str) -> Result<&Isotope> {
        self.entries
            .get(symbol)
            .ok_or_else(|| Error::invalid(format!("unknown isotope '{symbol}'")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse override rows of the form `symbol Z A mass_amu`. Blank lines and
    /// lines starting with `#` are skipped. Parsed rows replace existing entries.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || {
                Error::Config(format!(
                    "isotope table line {}: expected 'symbol Z A mass_amu', got '{line}'",
                    lineno + 1
                ))
            };
            if fields.len() != 4 {
                return Err(bad());
            }
            let z = fields[1].parse().map_err(|_| bad())?;
            let a = fields[2].parse().map_err(|_| bad())?;
            let mass = fields[3].parse().map_err(|_| bad())?;
            let iso = Isotope {
                symbol: fields[0].to_string(),
                z,
                a,
                mass_amu: mass,
            };
            iso.validate()?;
            self.insert(iso);
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_text(&text)
    }
}

/// Stoichiometric material description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub name: String,
    pub constituents: Vec<(Isotope, f64)>,
}

impl Composition {
    pub fn new(name: impl Into<String>, constituents: Vec<(Isotope, f64)>) -> Result<Self> {
        let comp = Composition {
            name: name.into(),
            constituents,
        };
        comp.validate()?;
        Ok(comp)
    }

    /// Build a composition from `(symbol, count)` pairs resolved against `table`.
    pub fn from_symbols(name: &str, table: &IsotopeTable, parts: &[(&str, f64)]) -> Result<Self> {
        let constituents = parts
            .iter()
            .map(|&(sym, count)| Ok((table.get(sym)?.clone(), count)))
            .collect::<Result<Vec<_>>>()?;
        Composition::new(name, constituents)
    }

    /// Stoichiometric Si₃N₄ from the dominant isotopes.
    pub fn silicon_nitride() -> Self {
        let table = IsotopeTable::builtin();
        Composition::from_symbols("Si3N4", &table, &[("Si-28", 3.0), ("N-14", 4.0)])
            .expect("builtin isotopes")
    }

    pub fn beryllium() -> Self {
        let table = IsotopeTable::builtin();
        Composition::from_symbols("Be", &table, &[("Be-9", 1.0)]).expect("builtin isotopes")
    }

    /// Resolve one of the built-in material names.
    pub fn builtin(name: &str) -> Result<Self> {
        let table = IsotopeTable::builtin();
        let parts: &[(&str, f64)] = match name {
            "Si3N4" => &[("Si-28", 3.0), ("N-14", 4.0)],
            "Be" => &[("Be-9", 1.0)],
            "SiO2" => &[("Si-28", 1.0), ("O-16", 2.0)],
            "H2O" => &[("H-1", 2.0), ("O-16", 1.0)],
            "Si" => &[("Si-28", 1.0)],
            _ => return Err(Error::invalid(format!("unknown material '{name}'"))),
        };
        Composition::from_symbols(name, &table, parts)
    }

    fn validate(&self) -> Result<()> {
        if self.constituents.is_empty() {
            return Err(Error::invalid(format!("composition '{}' is empty", self.name)));
        }
        for (iso, count) in &self.constituents {
            iso.validate()?;
            if !(count.is_finite() && *count > 0.0) {
                return Err(Error::invalid(format!(
                    "composition '{}': count for {} must be positive",
                    self.name, iso.symbol
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass_amu(&self) -> f64 {
        self.constituents.iter().map(|(iso, n)| n * iso.mass_amu).sum()
    }
}

/// Conserved charge the dark photon couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingChannel {
    BMinusL,
    B,
}

impl fmt::Display for CouplingChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingChannel::BMinusL => "b-minus-l",
            CouplingChannel::B => "b",
        })
    }
}

impl FromStr for CouplingChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b-minus-l" | "b-l" | "bminusl" => Ok(CouplingChannel::BMinusL),
            "b" => Ok(CouplingChannel::B),
            other => Err(Error::invalid(format!(
                "unknown coupling channel '{other}' (expected b-minus-l or b)"
            ))),
        }
    }
}

/// Coupling charge per atomic mass unit of a composition.
pub fn charge_per_amu(comp: &Composition, channel: CouplingChannel) -> Result<f64> {
    comp.validate()?;
    let charge: f64 = comp
        .constituents
        .iter()
        .map(|(iso, n)| n * iso.charge(channel))
        .sum();
    Ok(charge / comp.total_mass_amu())
}

/// Differential-acceleration suppression factor between two materials.
pub fn suppression_factor(
    c1: &Composition,
    c2: &Composition,
    channel: CouplingChannel,
) -> Result<f64> {
    Ok((charge_per_amu(c1, channel)? - charge_per_amu(c2, channel)?).abs())
}

/// Suppression factor for two identical masses separated by `separation`,
/// which respond only to the field gradient: `π d / λ_DM` to first order.
pub fn gradient_suppression(separation: f64, lambda_dm: f64) -> Result<f64> {
    if !(separation > 0.0 && lambda_dm > 0.0) {
        return Err(Error::invalid(
            "gradient suppression needs positive separation and wavelength",
        ));
    }
    Ok(std::f64::consts::PI * separation / lambda_dm)
}

/// Force and acceleration normalization of the dark-photon field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmForceScale {
    /// Force per unit charge per unit coupling (N).
    pub f0: f64,
    /// `f0` divided by the nucleon (atomic mass) unit (m/s²).
    pub a0: f64,
}

/// `F0 = sqrt(2 e² ρ_DM / ε0)` with the density given in GeV/cm³.
pub fn dm_force_scale(rho_gev_cm3: f64) -> Result<DmForceScale> {
    if !(rho_gev_cm3.is_finite() && rho_gev_cm3 > 0.0) {
        return Err(Error::invalid("dark-matter density must be positive"));
    }
    let rho = rho_gev_cm3 * GEV_PER_CM3;
    let f0 = (2.0 * E_CHARGE * E_CHARGE * rho / EPSILON_0).sqrt();
    Ok(DmForceScale { f0, a0: f0 / AMU })
}
