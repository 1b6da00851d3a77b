//! Ambiguity-aware margins `m = mu * a + nu` and the decision boundaries
//! they shift.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ambiguity::AmbiguityMap;
use crate::error::{Error, Result};

/// Half-width of the band treated as a zero margin.
pub const ZERO_BAND: f64 = 1e-12;

/// Margins beyond this magnitude make one side of a cosine boundary vacuous.
pub const VACUOUS_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginSpec {
    /// Scale applied to ambiguity.
    pub mu: f64,
    /// Bias.
    pub nu: f64,
    /// Replace negative margins by zero.
    pub clamp_at_zero: bool,
}

impl MarginSpec {
    pub const fn new(mu: f64, nu: f64) -> Self {
        Self {
            mu,
            nu,
            clamp_at_zero: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.is_finite() && self.nu.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "margin parameters must be finite, got mu={} nu={}",
                self.mu,
                self.nu
            )))
        }
    }
}

impl Default for MarginSpec {
    fn default() -> Self {
        MarginPreset::S3dis.spec()
    }
}

pub fn margin(a: f64, spec: &MarginSpec) -> f64 {
    let m = spec.mu * a + spec.nu;
    if spec.clamp_at_zero {
        m.max(0.0)
    } else {
        m
    }
}

/// Margins for every point of a map. Warns once if any exceeds
/// [`VACUOUS_MARGIN`] in magnitude.
pub fn margins(map: &AmbiguityMap, spec: &MarginSpec) -> Vec<f64> {
    let out: Vec<f64> = map.values.iter().map(|&a| margin(a, spec)).collect();
    if let Some(m) = out.iter().find(|m| m.abs() > VACUOUS_MARGIN) {
        log::warn!(
            "layer {}: margin {m} exceeds {VACUOUS_MARGIN} in magnitude, one decision side is vacuous",
            map.layer
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginRegime {
    Positive,
    Zero,
    Negative,
}

impl MarginRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            MarginRegime::Positive => "positive",
            MarginRegime::Zero => "zero",
            MarginRegime::Negative => "negative",
        }
    }
}

impl fmt::Display for MarginRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn regime(m: f64) -> MarginRegime {
    if m.abs() < ZERO_BAND {
        MarginRegime::Zero
    } else if m > 0.0 {
        MarginRegime::Positive
    } else {
        MarginRegime::Negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    /// `sim_intra - sim_inter >= m`.
    IntraSide,
    InterSide,
}

pub fn boundary_satisfied(sim_intra: f64, sim_inter: f64, m: f64) -> BoundarySide {
    if sim_intra - sim_inter >= m {
        BoundarySide::IntraSide
    } else {
        BoundarySide::InterSide
    }
}

/// Named margin settings: the two per-dataset settings plus the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginPreset {
    S3dis,
    Scannet,
    Const0,
    Const05,
    PosA,
    OneMinusA,
    Clamped,
}

impl MarginPreset {
    pub const ALL: [MarginPreset; 7] = [
        MarginPreset::S3dis,
        MarginPreset::Scannet,
        MarginPreset::Const0,
        MarginPreset::Const05,
        MarginPreset::PosA,
        MarginPreset::OneMinusA,
        MarginPreset::Clamped,
    ];

    /// Ablation grid: constant margins first, then adaptive ones.
    pub const ABLATION: [MarginPreset; 6] = [
        MarginPreset::Const0,
        MarginPreset::Const05,
        MarginPreset::PosA,
        MarginPreset::OneMinusA,
        MarginPreset::S3dis,
        MarginPreset::Clamped,
    ];

    pub fn spec(self) -> MarginSpec {
        match self {
            MarginPreset::S3dis => MarginSpec::new(-1.0, 0.5),
            MarginPreset::Scannet => MarginSpec::new(-1.0, 0.6),
            MarginPreset::Const0 => MarginSpec::new(0.0, 0.0),
            MarginPreset::Const05 => MarginSpec::new(0.0, 0.5),
            MarginPreset::PosA => MarginSpec::new(1.0, 0.0),
            MarginPreset::OneMinusA => MarginSpec::new(-1.0, 1.0),
            MarginPreset::Clamped => MarginSpec {
                mu: -1.0,
                nu: 0.5,
                clamp_at_zero: true,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MarginPreset::S3dis => "s3dis",
            MarginPreset::Scannet => "scannet",
            MarginPreset::Const0 => "const0",
            MarginPreset::Const05 => "const05",
            MarginPreset::PosA => "pos_a",
            MarginPreset::OneMinusA => "one_minus_a",
            MarginPreset::Clamped => "clamped",
        }
    }
}

impl fmt::Display for MarginPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarginPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MarginPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.into()))
    }
}

pub fn preset(name: &str) -> Result<MarginSpec> {
    name.parse::<MarginPreset>().map(MarginPreset::spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_arithmetic() {
        let s3dis = preset("s3dis").unwrap();
        assert_eq!(margin(0.5, &s3dis), 0.0);
        assert_eq!(margin(1.0, &s3dis), -0.5);
        assert!((margin(0.2, &s3dis) - 0.3).abs() < 1e-15);
        let clamped = preset("clamped").unwrap();
        assert_eq!(margin(0.8, &clamped), 0.0);
        assert!((margin(0.1, &clamped) - 0.4).abs() < 1e-15);
        let scannet = preset("scannet").unwrap();
        assert_eq!(regime(margin(0.6, &scannet)), MarginRegime::Zero);
        let zero = preset("const0").unwrap();
        for a in [0.0, 0.3, 1.0] {
            assert_eq!(margin(a, &zero), 0.0);
        }
    }

    #[test]
    fn regimes() {
        assert_eq!(regime(0.3), MarginRegime::Positive);
        assert_eq!(regime(0.0), MarginRegime::Zero);
        assert_eq!(regime(-0.0), MarginRegime::Zero);
        assert_eq!(regime(5e-13), MarginRegime::Zero);
        assert_eq!(regime(-0.5), MarginRegime::Negative);
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(boundary_satisfied(0.9, 0.5, 0.3), BoundarySide::IntraSide);
        assert_eq!(boundary_satisfied(0.9, 0.5, 0.4), BoundarySide::IntraSide);
        assert_eq!(boundary_satisfied(0.75, 0.5, 0.25), BoundarySide::IntraSide);
        assert_eq!(boundary_satisfied(0.2, 0.5, -0.5), BoundarySide::IntraSide);
        assert_eq!(boundary_satisfied(0.5, 0.9, 0.0), BoundarySide::InterSide);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in MarginPreset::ALL {
            assert_eq!(p.name().parse::<MarginPreset>().unwrap(), p);
        }
        assert_eq!(preset("nope"), Err(Error::UnknownPreset("nope".into())));
    }

    #[test]
    fn ablation_rows_in_table_order() {
        let rows: Vec<(f64, f64, bool)> = MarginPreset::ABLATION
            .iter()
            .map(|p| {
                let s = p.spec();
                (s.mu, s.nu, s.clamp_at_zero)
            })
            .collect();
        assert_eq!(
            rows,
            [
                (0.0, 0.0, false),
                (0.0, 0.5, false),
                (1.0, 0.0, false),
                (-1.0, 1.0, false),
                (-1.0, 0.5, false),
                (-1.0, 0.5, true)
            ]
        );
    }

    #[test]
    fn margins_over_map() {
        let map = AmbiguityMap {
            values: alloc::vec![0.0, 0.5, 1.0],
            layer: 0,
        };
        assert_eq!(margins(&map, &MarginSpec::default()), [0.5, 0.0, -0.5]);
    }
}
