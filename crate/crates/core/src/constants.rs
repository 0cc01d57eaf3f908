//! Physical constants (CODATA 2022, SI units).

/// Reduced Planck constant ħ (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant h (J·s), exact.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum (m/s), exact.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Elementary charge (C), exact. Also the eV→J conversion factor.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity ε₀ (F/m).
pub const EPSILON_0: f64 = 8.854_187_818_8e-12;

/// Boltzmann constant (J/K), exact.
pub const K_B: f64 = 1.380_649e-23;

/// Atomic mass constant (kg). Used as the nucleon mass in `a0 = F0 / m_n`
/// so that accelerations pair with charge-per-amu ratios.
pub const AMU: f64 = 1.660_539_068_92e-27;

/// Standard gravity (m/s²).
pub const G0: f64 = 9.806_65;

/// Julian year (s).
pub const YEAR: f64 = 365.25 * 86_400.0;

/// 1 GeV/cm³ expressed in J/m³.
pub const GEV_PER_CM3: f64 = 1.0e9 * E_CHARGE / 1.0e-6;

/// Local dark-matter energy density used throughout (GeV/cm³).
pub const RHO_DM_LOCAL: f64 = 0.4;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_matches_planck() {
        assert!((HBAR * TWO_PI / PLANCK - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gev_density_conversion() {
        // 0.4 GeV/cm³ ≈ 6.4e-5 J/m³
        let rho = RHO_DM_LOCAL * GEV_PER_CM3;
        assert!((rho - 6.408_706_536e-5).abs() / rho < 1e-9);
    }
}
