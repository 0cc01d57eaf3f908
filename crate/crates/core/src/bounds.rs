//! Published exclusion curves, ingested as data, and comparison against a
//! forecast sensitivity curve.
//!
//! Bound files are CSV with optional `# key = value` comment lines
//! (`label`, `channel`, `note`) followed by a header of either
//! `f_hz,g_limit` or `mass_ev,g_limit`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{E_CHARGE, HBAR, TWO_PI};
use crate::error::{Error, Result};
use crate::estimator::SensitivityRow;
use crate::materials::CouplingChannel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub label: String,
    pub channel: CouplingChannel,
    /// `(f_hz, g_limit)`, strictly increasing in frequency.
    pub points: Vec<(f64, f64)>,
    pub note: Option<String>,
}

impl BoundCurve {
    pub fn new(label: impl Into<String>, channel: CouplingChannel, points: Vec<(f64, f64)>) -> Result<Self> {
        let curve = BoundCurve {
            label: label.into(),
            channel,
            points,
            note: None,
        };
        curve.validate()?;
        Ok(curve)
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid(format!("bound '{}' has no points", self.label)));
        }
        for &(f, g) in &self.points {
            if !(f.is_finite() && f > 0.0 && g.is_finite() && g > 0.0) {
                return Err(Error::invalid(format!(
                    "bound '{}': point ({f}, {g}) must be positive",
                    self.label
                )));
            }
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(format!(
                "bound '{}': frequency axis must be strictly increasing",
                self.label
            )));
        }
        Ok(())
    }

    /// Treat a sensitivity curve as a bound (useful for self-comparison and
    /// for comparing two forecasts).
    pub fn from_sensitivity(label: &str, channel: CouplingChannel, rows: &[SensitivityRow]) -> Result<Self> {
        BoundCurve::new(label, channel, rows.iter().map(|r| (r.f_hz, r.g_min)).collect())
    }

    pub fn f_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Log-log interpolated limit at `f_hz`, `None` outside the tabulated range.
    pub fn limit_at(&self, f_hz: f64) -> Option<f64> {
        let (lo, hi) = self.f_range();
        if f_hz < lo || f_hz > hi {
            return None;
        }
        let k = self.points.partition_point(|p| p.0 < f_hz);
        if k < self.points.len() && self.points[k].0 == f_hz {
            return Some(self.points[k].1);
        }
        let (f0, g0) = self.points[k - 1];
        let (f1, g1) = self.points[k];
        if g0 == g1 {
            return Some(g0);
        }
        let t = (f_hz / f0).ln() / (f1 / f0).ln();
        Some((g0.ln() + t * (g1 / g0).ln()).exp())
    }

    pub fn parse(text: &str, default_label: &str) -> Result<Self> {
        let mut label = default_label.to_string();
        let mut channel = CouplingChannel::BMinusL;
        let mut note = None;
        let mut body = String::new();
        for line in text.lines() {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    let v = v.trim().to_string();
                    match k.trim() {
                        "label" => label = v,
                        "channel" => channel = v.parse()?,
                        "note" => note = Some(v),
                        _ => {}
                    }
                }
            } else if !t.is_empty() {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let headers = reader.headers()?.clone();
        let x_is_mass = match (headers.get(0), headers.get(1)) {
            (Some("f_hz"), Some("g_limit")) => false,
            (Some("mass_ev"), Some("g_limit")) => true,
            _ => {
                return Err(Error::Config(format!(
                    "bound '{label}': header must be 'f_hz,g_limit' or 'mass_ev,g_limit', got '{}'",
                    headers.iter().collect::<Vec<_>>().join(",")
                )))
            }
        };
        let mut points = Vec::new();
        for rec in reader.deserialize::<(f64, f64)>() {
            let (x, g) = rec?;
            let f = if x_is_mass { x * E_CHARGE / HBAR / TWO_PI } else { x };
            points.push((f, g));
        }
        let curve = BoundCurve {
            label,
            channel,
            points,
            note,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("bound");
        BoundCurve::parse(&text, stem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub f_hz: f64,
    /// Bound over forecast; above 1 the forecast improves on the bound.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub label: String,
    /// Overlapping frequency range (Hz), `None` when disjoint.
    pub overlap: Option<(f64, f64)>,
    pub points: Vec<RatioPoint>,
    pub max_ratio: Option<f64>,
    pub max_ratio_f_hz: Option<f64>,
    /// Contiguous frequency ranges (Hz) where the ratio exceeds 1.
    pub exceed_bands: Vec<(f64, f64)>,
    pub channel_mismatch: bool,
}

impl BoundComparison {
    pub fn is_empty_overlap(&self) -> bool {
        self.overlap.is_none()
    }
}

/// Ratio `bound / g_min` at every forecast frequency inside the bound's range.
pub fn compare_bounds(rows: &[SensitivityRow], channel: CouplingChannel, bound: &BoundCurve) -> BoundComparison {
    let points: Vec<RatioPoint> = rows
        .iter()
        .filter_map(|r| {
            bound.limit_at(r.f_hz).map(|g| RatioPoint {
                f_hz: r.f_hz,
                ratio: g / r.g_min,
            })
        })
        .collect();
    let overlap = match (points.first(), points.last()) {
        (Some(a), Some(b)) => Some((a.f_hz, b.f_hz)),
        _ => None,
    };
    let best = points.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio));
    let mut exceed_bands = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for p in &points {
        if p.ratio > 1.0 {
            open = Some(match open {
                Some((a, _)) => (a, p.f_hz),
                None => (p.f_hz, p.f_hz),
            });
        } else if let Some(band) = open.take() {
            exceed_bands.push(band);
        }
    }
    exceed_bands.extend(open);
    BoundComparison {
        label: bound.label.clone(),
        overlap,
        max_ratio: best.map(|p| p.ratio),
        max_ratio_f_hz: best.map(|p| p.f_hz),
        points,
        exceed_bands,
        channel_mismatch: bound.channel != channel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Regime;

    fn row(f: f64, g: f64) -> SensitivityRow {
        SensitivityRow {
            f_hz: f,
            mass_ev: 0.0,
            g_min: g,
            regime: Regime::SuperCoherence,
            mode_count: 1,
        }
    }

    #[test]
    fn parse_with_metadata() {
        let text = "# label = eot-wash\n# channel = b-minus-l\n# note = flat stand-in\nf_hz,g_limit\n1.0,1e-22\n1e6,1e-22\n";
        let b = BoundCurve::parse(text, "x").unwrap();
        assert_eq!(b.label, "eot-wash");
        assert_eq!(b.points.len(), 2);
        assert_eq!(b.limit_at(4000.0), Some(1e-22));
        assert_eq!(b.limit_at(0.5), None);
    }

    #[test]
    fn parse_mass_axis() {
        let text = "mass_ev,g_limit\n4.1356676969e-15,1e-20\n4.1356676969e-13,1e-22\n";
        let b = BoundCurve::parse(text, "m").unwrap();
        assert!((b.points[0].0 - 1.0).abs() < 1e-6);
        let mid = b.limit_at(10.0).unwrap();
        assert!((mid / 1e-21 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(BoundCurve::parse("freq,g\n1,2\n", "x").is_err());
        assert!(BoundCurve::parse("f_hz,g_limit\n2,1e-22\n1,1e-22\n", "x").is_err());
        assert!(BoundCurve::parse("f_hz,g_limit\n1,-1\n", "x").is_err());
    }

    #[test]
    fn self_comparison_is_unity() {
        let rows: Vec<_> = (1..20).map(|k| row(100.0 * k as f64, 1e-23 / k as f64)).collect();
        let b = BoundCurve::from_sensitivity("self", CouplingChannel::BMinusL, &rows).unwrap();
        let c = compare_bounds(&rows, CouplingChannel::BMinusL, &b);
        assert_eq!(c.points.len(), rows.len());
        assert!(c.points.iter().all(|p| (p.ratio - 1.0).abs() < 1e-12));
        assert!(c.exceed_bands.is_empty());
    }

    #[test]
    fn disjoint_ranges() {
        let rows = vec![row(2000.0, 1e-24), row(3000.0, 1e-24)];
        let ligo = BoundCurve::new("ligo", CouplingChannel::BMinusL, vec![(10.0, 1e-23), (1000.0, 1e-23)]).unwrap();
        let c = compare_bounds(&rows, CouplingChannel::BMinusL, &ligo);
        assert!(c.is_empty_overlap());
        assert!(c.max_ratio.is_none());
    }

    #[test]
    fn exceed_band_detection() {
        let rows = vec![row(1.0, 1.0), row(2.0, 0.1), row(3.0, 0.1), row(4.0, 1.0)];
        let b = BoundCurve::new("flat", CouplingChannel::B, vec![(1.0, 0.5), (4.0, 0.5)]).unwrap();
        let c = compare_bounds(&rows, CouplingChannel::BMinusL, &b);
        assert_eq!(c.exceed_bands, vec![(2.0, 3.0)]);
        assert!((c.max_ratio.unwrap() - 5.0).abs() < 1e-12);
        assert!(c.channel_mismatch);
    }
}
