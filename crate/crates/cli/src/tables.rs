//! CSV artifacts.
//!
//! | file        | columns                                      |
//! |-------------|----------------------------------------------|
//! | `amb.csv`   | `index,a,m,regime`                           |
//! | `curve.csv` | `epoch,l_ce,l_am_sum,l_joint,oa`             |
//! | `ablate.csv`| `preset,seed,oa,miou,boundary_band_acc`      |
//!
//! Reals use Rust's shortest round-trip formatting. In `ablate.csv` the
//! median rows carry `median` in the seed column, and a missing boundary
//! accuracy is written as `nan`.

use std::fmt::Write as _;

use amcontrast_core::margin::regime;
use amcontrast_core::model::EpochLog;

pub const AMB_HEADER: &str = "index,a,m,regime";
pub const CURVE_HEADER: &str = "epoch,l_ce,l_am_sum,l_joint,oa";
pub const ABLATE_HEADER: &str = "preset,seed,oa,miou,boundary_band_acc";

pub fn amb_csv(ambiguity: &[f64], margins: &[f64]) -> String {
    let mut out = format!("{AMB_HEADER}\n");
    for (i, (a, m)) in ambiguity.iter().zip(margins).enumerate() {
        let _ = writeln!(out, "{i},{a},{m},{}", regime(*m));
    }
    out
}

pub fn curve_csv(log: &[EpochLog]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for e in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epoch, e.l_ce, e.l_am_sum, e.l_joint, e.oa
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub preset: String,
    pub seed: u64,
    pub oa: f64,
    pub miou: f64,
    pub boundary_band_acc: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

/// Median of the finite values; midpoint of the two middle ones for even
/// counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Data rows in the given order, then one median row per preset in order of
/// first appearance.
pub fn ablate_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("{ABLATE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.preset,
            r.seed,
            r.oa,
            r.miou,
            opt(r.boundary_band_acc)
        );
    }
    let mut presets: Vec<&str> = Vec::new();
    for r in rows {
        if !presets.contains(&r.preset.as_str()) {
            presets.push(&r.preset);
        }
    }
    for p in presets {
        let of = |f: &dyn Fn(&AblationRow) -> Option<f64>| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.preset == p)
                .filter_map(f)
                .collect();
            median(&v)
        };
        let _ = writeln!(
            out,
            "{p},median,{},{},{}",
            opt(of(&|r| Some(r.oa))),
            opt(of(&|r| Some(r.miou))),
            opt(of(&|r| r.boundary_band_acc))
        );
    }
    out
}
