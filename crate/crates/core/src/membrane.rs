//! Square tensioned membrane: mode frequencies and shapes, effective mass,
//! overlap with a uniform acceleration, and the mechanical susceptibility.
//!
//! Coordinates are centered: `y, z ∈ [−L/2, L/2]`, with the readout at the
//! origin. Odd indices have cosine profiles (antinode at the center), even
//! indices sine profiles (node at the center).

use std::cmp::Ordering;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::{Error, Result};

pub const DEFAULT_DENSITY: f64 = 3100.0;
pub const DEFAULT_STRESS: f64 = 1.0e9;
pub const DEFAULT_THICKNESS: f64 = 200e-9;
pub const DEFAULT_Q0: f64 = 1.0e9;
pub const DEFAULT_TEMPERATURE: f64 = 10e-3;

/// Default enumeration cap: modes up to this frequency (Hz)...
pub const DEFAULT_MODE_F_MAX: f64 = 30.0e3;
/// ...or this many modes, whichever comes first.
pub const DEFAULT_MAX_MODES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembraneSpec {
    /// Side length (m).
    pub side: f64,
    /// Thickness (m).
    pub thickness: f64,
    /// Mass density (kg/m³).
    pub density: f64,
    /// Tensile stress (Pa).
    pub stress: f64,
    pub q0: f64,
    /// Bath temperature (K).
    pub temperature: f64,
}

impl Default for MembraneSpec {
    fn default() -> Self {
        MembraneSpec {
            side: 0.10,
            thickness: DEFAULT_THICKNESS,
            density: DEFAULT_DENSITY,
            stress: DEFAULT_STRESS,
            q0: DEFAULT_Q0,
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

impl MembraneSpec {
    /// Default Si₃N₄ membrane with side `side` (m).
    pub fn with_side(side: f64) -> Self {
        MembraneSpec {
            side,
            ..MembraneSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("side", self.side),
            ("thickness", self.thickness),
            ("density", self.density),
            ("stress", self.stress),
            ("q0", self.q0),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("membrane {name} must be positive, got {value}")));
            }
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::invalid("membrane temperature must be non-negative"));
        }
        Ok(())
    }

    /// Transverse wave speed `√(σ/ρ)` (m/s).
    pub fn phase_velocity(&self) -> f64 {
        (self.stress / self.density).sqrt()
    }

    /// `ρ h L²` (kg).
    pub fn physical_mass(&self) -> f64 {
        self.density * self.thickness * self.side * self.side
    }

    /// Modal mass, the same for every mode: `m_phys / 4` (kg).
    pub fn effective_mass(&self) -> f64 {
        self.physical_mass() / 4.0
    }

    pub fn omega11(&self) -> f64 {
        mode_frequency(self, ModeIndex::FUNDAMENTAL)
    }

    /// Stress that puts the fundamental at `omega` (rad/s), geometry fixed.
    pub fn stress_for_omega11(&self, omega: f64) -> f64 {
        let v = omega * self.side / (PI * 2f64.sqrt());
        v * v * self.density
    }

    /// Copy of this membrane retuned (via stress) to a fundamental at `omega`.
    pub fn tuned_to(&self, omega: f64) -> Self {
        MembraneSpec {
            stress: self.stress_for_omega11(omega),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub i: u32,
    pub j: u32,
}

impl ModeIndex {
    pub const FUNDAMENTAL: ModeIndex = ModeIndex { i: 1, j: 1 };

    pub fn new(i: u32, j: u32) -> Result<Self> {
        if i == 0 || j == 0 {
            return Err(Error::invalid(format!("mode indices must be >= 1, got ({i}, {j})")));
        }
        Ok(ModeIndex { i, j })
    }

    /// Both indices odd, i.e. the mode moves the membrane center.
    pub fn is_odd_odd(&self) -> bool {
        self.i % 2 == 1 && self.j % 2 == 1
    }

    /// `(i² + j²) / 2`, the squared frequency ratio to the fundamental.
    pub fn frequency_ratio_sq(&self) -> f64 {
        (f64::from(self.i).powi(2) + f64::from(self.j).powi(2)) / 2.0
    }
}

/// `ω_ij = v π √(i² + j²) / L`.
pub fn mode_frequency(spec: &MembraneSpec, idx: ModeIndex) -> f64 {
    let k = PI * (f64::from(idx.i).powi(2) + f64::from(idx.j).powi(2)).sqrt() / spec.side;
    spec.phase_velocity() * k
}

fn profile(n: u32, u: f64, side: f64) -> f64 {
    let arg = f64::from(n) * PI * u / side;
    if n % 2 == 1 {
        arg.cos()
    } else {
        arg.sin()
    }
}

/// Normalized mode shape `φ_ij(y, z)`, equal to 1 at the center for odd-odd modes.
pub fn mode_shape(idx: ModeIndex, y: f64, z: f64, side: f64) -> Result<f64> {
    let half = side / 2.0;
    let tol = 1e-12 * side;
    if !(y.abs() <= half + tol && z.abs() <= half + tol) {
        return Err(Error::invalid(format!(
            "point ({y}, {z}) lies outside the membrane of side {side}"
        )));
    }
    Ok(profile(idx.i, y, side) * profile(idx.j, z, side))
}

/// Overlap of a spatially uniform acceleration with mode `(i, j)`:
/// `∫φ dA / ∫φ² dA`, nonzero only for odd-odd modes.
pub fn overlap_factor(idx: ModeIndex) -> f64 {
    if !idx.is_odd_odd() {
        return 0.0;
    }
    let sign = if ((idx.i + idx.j) / 2 - 1) % 2 == 0 { 1.0 } else { -1.0 };
    (4.0 / PI).powi(2) / (f64::from(idx.i) * f64::from(idx.j)) * sign
}

/// Acceleration-to-displacement susceptibility with structural damping,
/// `χ = 1 / (ω² − ω0² + i ω0²/Q0)` (s²).
pub fn susceptibility(spec: &MembraneSpec, idx: ModeIndex, omega: f64) -> Complex64 {
    chi(mode_frequency(spec, idx), spec.q0, omega)
}

/// Susceptibility of a resonance at `omega0` with quality factor `q0`.
pub fn chi(omega0: f64, q0: f64, omega: f64) -> Complex64 {
    let w02 = omega0 * omega0;
    Complex64::new(omega * omega - w02, w02 / q0).inv()
}

/// `|χ|²` without forming the complex value.
pub fn chi_norm_sq(omega0: f64, q0: f64, omega: f64) -> f64 {
    let w02 = omega0 * omega0;
    let re = omega * omega - w02;
    let im = w02 / q0;
    1.0 / (re * re + im * im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: ModeIndex,
    /// Angular frequency (rad/s).
    pub omega: f64,
    pub beta: f64,
    /// Modal mass (kg).
    pub mass: f64,
}

impl Mode {
    pub fn new(spec: &MembraneSpec, index: ModeIndex) -> Self {
        Mode {
            index,
            omega: mode_frequency(spec, index),
            beta: overlap_factor(index),
            mass: spec.effective_mass(),
        }
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega / TWO_PI
    }
}

/// All modes with `f_ij ≤ f_max`, sorted by frequency (ties by index), capped
/// at `max_modes`. Degenerate modes are kept as separate entries.
pub fn enumerate_modes(spec: &MembraneSpec, f_max: f64, max_modes: usize) -> Result<Vec<Mode>> {
    spec.validate()?;
    let f11 = spec.omega11() / TWO_PI;
    if !(f_max >= f11) {
        return Err(Error::invalid(format!(
            "f_max = {f_max} Hz is below the fundamental at {f11:.3} Hz"
        )));
    }
    // ω_ij ≤ ω_max  ⇔  i² + j² ≤ 2 (f_max/f11)²
    let limit = 2.0 * (f_max / f11).powi(2) * (1.0 + 1e-12);
    let n_max = limit.sqrt().floor() as u32;
    let mut modes = Vec::new();
    for i in 1..=n_max {
        for j in 1..=n_max {
            let idx = ModeIndex { i, j };
            if 2.0 * idx.frequency_ratio_sq() <= limit {
                modes.push(Mode::new(spec, idx));
            }
        }
    }
    modes.sort_by(|a, b| {
        a.omega
            .partial_cmp(&b.omega)
            .unwrap_or(Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    modes.truncate(max_modes);
    Ok(modes)
}

/// Modes that move the membrane center (nonzero overlap), in input order.
pub fn center_modes(modes: &[Mode]) -> Vec<Mode> {
    modes.iter().copied().filter(|m| m.beta != 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn idx(i: u32, j: u32) -> ModeIndex {
        ModeIndex::new(i, j).unwrap()
    }

    #[test]
    fn fundamental_frequencies_by_size() {
        for (side, f_oracle) in [(0.20, 2008.048), (0.10, 4016.097), (0.05, 8032.19), (0.025, 16064.39)] {
            let spec = MembraneSpec::with_side(side);
            let f = spec.omega11() / TWO_PI;
            assert!(rel(f, f_oracle) < 1e-6, "{side}: {f}");
        }
        let spec = MembraneSpec::default();
        assert!(rel(mode_frequency(&spec, idx(1, 3)) / spec.omega11(), 5f64.sqrt()) < 1e-14);
    }

    #[test]
    fn frequency_scaling() {
        let a = MembraneSpec::with_side(0.1);
        let b = MembraneSpec::with_side(0.05);
        assert!(rel(b.omega11(), 2.0 * a.omega11()) < 1e-14);
        let c = MembraneSpec { stress: 4.0e9, ..a };
        assert!(rel(c.omega11(), 2.0 * a.omega11()) < 1e-14);
        let t = a.tuned_to(1.1 * a.omega11());
        assert!(rel(t.omega11(), 1.1 * a.omega11()) < 1e-13);
    }

    #[test]
    fn masses() {
        let spec = MembraneSpec::default();
        assert!(rel(spec.effective_mass(), 1.55e-6) < 1e-12);
        assert!(rel(MembraneSpec::with_side(0.2).effective_mass(), 6.2e-6) < 1e-12);
    }

    #[test]
    fn shapes() {
        let l = 0.1;
        assert_eq!(mode_shape(idx(1, 1), 0.0, 0.0, l).unwrap(), 1.0);
        assert_eq!(mode_shape(idx(2, 1), 0.0, 0.0, l).unwrap(), 0.0);
        assert!(mode_shape(idx(1, 1), l / 2.0, 0.01, l).unwrap().abs() < 1e-15);
        assert!(mode_shape(idx(1, 1), -l / 2.0, 0.01, l).unwrap().abs() < 1e-15);
        assert!(mode_shape(idx(2, 3), 0.02, l / 2.0, l).unwrap().abs() < 1e-15);
        assert!(mode_shape(idx(1, 1), 0.06, 0.0, l).is_err());
    }

    #[test]
    fn overlap_values() {
        assert!(rel(overlap_factor(idx(1, 1)), 1.621_138_9) < 1e-7);
        assert!(rel(overlap_factor(idx(1, 3)), -0.540_379_6) < 1e-6);
        assert!(rel(overlap_factor(idx(3, 3)), 0.180_126_5) < 1e-6);
        assert!(rel(overlap_factor(idx(5, 5)), 0.064_845_6) < 1e-6);
        assert!(rel(overlap_factor(idx(1, 7)), -0.231_591_3) < 1e-6);
        assert_eq!(overlap_factor(idx(2, 5)), 0.0);
        assert_eq!(overlap_factor(idx(3, 4)), 0.0);
        assert_eq!(overlap_factor(idx(1, 3)), overlap_factor(idx(3, 1)));
    }

    #[test]
    fn susceptibility_limits() {
        let (w0, q) = (1000.0, 1e3);
        assert!(rel(chi_norm_sq(w0, q, w0), q * q / w0.powi(4)) < 1e-12);
        let dc = chi_norm_sq(w0, q, 0.0);
        assert!(rel(dc, 1.0 / w0.powi(4) / (1.0 + 1.0 / (q * q))) < 1e-12);
        let hi = chi_norm_sq(w0, q, 1e6);
        assert!(rel(hi, 1e-24) < 1e-5);
        let c = chi(w0, q, 1234.0);
        assert!(rel(c.norm_sqr(), chi_norm_sq(w0, q, 1234.0)) < 1e-12);
    }

    #[test]
    fn half_power_points() {
        let (w0, q) = (1.0, 1e3);
        let peak = chi_norm_sq(w0, q, w0);
        for x in [0.999_499_875, 1.000_499_875] {
            assert!(rel(chi_norm_sq(w0, q, x), peak / 2.0) < 1e-6);
        }
    }

    #[test]
    fn enumeration() {
        let spec = MembraneSpec::default();
        let f11 = spec.omega11() / TWO_PI;
        let one = enumerate_modes(&spec, f11 * 1.0001, 100).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].index, ModeIndex::FUNDAMENTAL);
        assert!(enumerate_modes(&spec, f11 * 0.9, 100).is_err());

        let modes = enumerate_modes(&spec, 5.0 * f11 * 1.0001, 10_000).unwrap();
        assert!(modes.windows(2).all(|w| w[0].omega <= w[1].omega));
        let has = |i, j| modes.iter().any(|m| m.index == idx(i, j));
        assert!(has(5, 5) && has(1, 7) && has(7, 1));
        let w55 = mode_frequency(&spec, idx(5, 5));
        let w17 = mode_frequency(&spec, idx(1, 7));
        assert!(rel(w55, w17) < 1e-14);
        assert!(rel(w55 / spec.omega11(), 5.0) < 1e-14);

        let capped = enumerate_modes(&spec, 5.0 * f11, 7).unwrap();
        assert_eq!(capped.len(), 7);
    }
}
