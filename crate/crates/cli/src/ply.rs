//! Binary little-endian PLY with grey vertex colours.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use amcontrast_core::cloud::PointCloud;

use crate::error::{CliError, Result};

/// Grey level for an ambiguity: white at 0, black at 1.
pub fn grey(a: f64) -> u8 {
    (255.0 * (1.0 - a.clamp(0.0, 1.0))).round() as u8
}

pub fn write_ambiguity<W: Write>(
    out: &mut W,
    cloud: &PointCloud,
    ambiguity: &[f64],
) -> std::io::Result<()> {
    assert_eq!(cloud.len(), ambiguity.len(), "one ambiguity per point");
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\ncomment ambiguity map, white = 0, black = 1\n\
         element vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    )?;
    for (p, &a) in cloud.positions().iter().zip(ambiguity) {
        for v in p {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        let g = grey(a);
        out.write_all(&[g, g, g])?;
    }
    Ok(())
}

pub fn save_ambiguity(path: &Path, cloud: &PointCloud, ambiguity: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_ambiguity(&mut out, cloud, ambiguity)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}
