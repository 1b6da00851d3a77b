//! Plain-text point clouds.
//!
//! ```text
//! points <n> feature_dims <D> classes <C>
//! x y z f_1 ... f_D label
//! ```
//!
//! Lines starting with `#` are comments. Reals are written with 17
//! significant digits so a save/load round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use amcontrast_core::cloud::PointCloud;

use crate::error::{CliError, Result};

pub fn to_string(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "points {} feature_dims {} classes {}",
        cloud.len(),
        cloud.feature_dims(),
        cloud.num_classes()
    );
    for (i, p) in cloud.positions().iter().enumerate() {
        for v in p.iter().chain(cloud.feature_row(i)) {
            let _ = write!(out, "{v:.16e} ");
        }
        let _ = writeln!(out, "{}", cloud.labels()[i]);
    }
    out
}

pub fn save(cloud: &PointCloud, path: &Path) -> Result<()> {
    fs::write(path, to_string(cloud)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text).map_err(|(line, message)| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

fn header(line: &str, no: usize) -> ParseResult<(usize, usize, usize)> {
    let tok: Vec<&str> = line.split_whitespace().collect();
    let bad = || (no, format!("malformed header {line:?}"));
    if tok.len() != 6 || tok[0] != "points" || tok[2] != "feature_dims" || tok[4] != "classes" {
        return Err(bad());
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let (n, d, c) = (num(tok[1])?, num(tok[3])?, num(tok[5])?);
    if n == 0 || c == 0 {
        return Err((no, "header needs at least one point and one class".into()));
    }
    Ok((n, d, c))
}

/// Parses a cloud, reporting errors with their 1-based line number.
pub fn parse(text: &str) -> ParseResult<PointCloud> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (no, first) = lines.next().ok_or((1, "missing header".to_string()))?;
    let (n, dims, classes) = header(first, no)?;
    let mut positions = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    let mut last = no;
    for (no, line) in lines {
        last = no;
        if labels.len() == n {
            return Err((no, format!("more than {n} data rows")));
        }
        let tok: Vec<&str> = line.split(' ').collect();
        if tok.len() != dims + 4 {
            return Err((
                no,
                format!("expected {} values, found {}", dims + 4, tok.len()),
            ));
        }
        let mut reals = Vec::with_capacity(dims + 3);
        for t in &tok[..dims + 3] {
            let v: f64 = t
                .parse()
                .map_err(|_| (no, format!("not a number: {t:?}")))?;
            if !v.is_finite() {
                return Err((no, "non-finite value".into()));
            }
            reals.push(v);
        }
        let label: usize = tok[dims + 3]
            .parse()
            .map_err(|_| (no, format!("bad label {:?}", tok[dims + 3])))?;
        if label >= classes {
            return Err((no, "label out of range".into()));
        }
        positions.push([reals[0], reals[1], reals[2]]);
        features.extend_from_slice(&reals[3..]);
        labels.push(label);
    }
    if labels.len() != n {
        return Err((
            last,
            format!("header declares {n} points, found {}", labels.len()),
        ));
    }
    PointCloud::new(positions, features, dims, labels, classes).map_err(|e| (last, e.to_string()))
}
