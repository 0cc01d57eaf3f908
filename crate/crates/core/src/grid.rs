//! Frequency grids that resolve very narrow resonances.
//!
//! A logarithmic base grid alone steps straight over a Q0 = 1e9 peak, so each
//! resonance inside the band gets a dense linear patch of ±`refine_linewidths`
//! linewidths plus a geometric ladder of detunings out to ±`ladder_span` of the
//! resonance frequency, which resolves the detection-band shoulders.

use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// Log-spaced base points.
    pub points: usize,
    /// Linear points per resonance patch.
    pub refine_points: usize,
    /// Half-width of the linear patch in linewidths (ω0/Q0).
    pub refine_linewidths: f64,
    /// Geometric ladder points on each side of a resonance.
    pub ladder_points: usize,
    /// Outer reach of the ladder as a fraction of ω0.
    pub ladder_span: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            f_min_hz: 1.0e3,
            f_max_hz: 30.0e3,
            points: 2000,
            refine_points: 41,
            refine_linewidths: 10.0,
            ladder_points: 60,
            ladder_span: 0.1,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::invalid("empty frequency grid"));
        }
        if !(self.f_min_hz > 0.0 && self.f_max_hz > self.f_min_hz) {
            return Err(Error::invalid(format!(
                "grid needs 0 < f_min < f_max, got [{}, {}] Hz",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if self.points == 1 && self.f_max_hz != self.f_min_hz {
            return Err(Error::invalid("a grid spanning a band needs at least two points"));
        }
        if !(self.refine_linewidths > 0.0 && self.ladder_span > 0.0 && self.ladder_span < 1.0) {
            return Err(Error::invalid("grid refinement widths must be positive, ladder_span < 1"));
        }
        Ok(())
    }

    /// Sorted, deduplicated angular-frequency grid (rad/s) refined around each
    /// resonance `(ω0, Q0)` that falls inside the band.
    pub fn build(&self, resonances: &[(f64, f64)]) -> Result<Vec<f64>> {
        self.validate()?;
        let lo = TWO_PI * self.f_min_hz;
        let hi = TWO_PI * self.f_max_hz;
        let mut grid = log_space(lo, hi, self.points);
        for &(w0, q0) in resonances {
            if !(w0 >= lo && w0 <= hi) {
                continue;
            }
            let half = self.refine_linewidths * w0 / q0;
            if self.refine_points > 1 {
                let n = self.refine_points;
                grid.extend((0..n).map(|k| w0 - half + 2.0 * half * k as f64 / (n - 1) as f64));
            }
            grid.push(w0);
            let outer = self.ladder_span * w0;
            if self.ladder_points > 1 && outer > half {
                for d in log_space(half, outer, self.ladder_points) {
                    grid.push(w0 - d);
                    grid.push(w0 + d);
                }
            }
        }
        grid.retain(|&w| w >= lo && w <= hi);
        grid.sort_by(|a, b| a.total_cmp(b));
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
        Ok(grid)
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_rejected() {
        let g = GridSpec {
            points: 0,
            ..GridSpec::default()
        };
        assert!(g.build(&[]).is_err());
    }

    #[test]
    fn refined_grid_hits_resonance() {
        let g = GridSpec::default();
        let w0 = TWO_PI * 4016.097;
        let grid = g.build(&[(w0, 1e9)]).unwrap();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert!(grid.iter().any(|&w| w == w0));
        let near = grid.iter().filter(|&&w| (w - w0).abs() <= 10.001 * w0 / 1e9).count();
        assert!(near >= 41);
        assert!(grid.len() > g.points);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1.0, 100.0, 3);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!((v[2] - 100.0).abs() < 1e-12);
    }
}
