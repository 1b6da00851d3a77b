//! Versioned binary model file.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic "AMC3DNET" | version u32
//! stages u32 | widths u32 x stages | ratio u32 | aggregation_k u32
//! head_width u32 | seed u64 | fps_start u64 | input_scale f64
//! input_dim u32 | classes u32
//! layer count u32 | (out u32, in u32) per layer
//! value count u64 | values f64
//! ```

use std::fs;
use std::path::Path;

use amcontrast_core::model::{NetConfig, ParamLayout, Params};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"AMC3DNET";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: NetConfig,
    pub params: Params,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

pub fn encode(model: &Model) -> Vec<u8> {
    let net = &model.net;
    let layout = model.params.layout();
    let mut out = Vec::with_capacity(64 + 8 * model.params.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, net.stages);
    for &w in &net.widths {
        put_u32(&mut out, w);
    }
    put_u32(&mut out, net.downsample_ratio);
    put_u32(&mut out, net.aggregation_k);
    put_u32(&mut out, net.head_width);
    out.extend_from_slice(&net.seed.to_le_bytes());
    out.extend_from_slice(&(net.fps_start as u64).to_le_bytes());
    out.extend_from_slice(&net.input_scale.to_le_bytes());
    put_u32(&mut out, layout.input_dim());
    put_u32(&mut out, layout.num_classes());
    put_u32(&mut out, layout.shapes().len());
    for &(o, i) in layout.shapes() {
        put_u32(&mut out, o);
        put_u32(&mut out, i);
    }
    out.extend_from_slice(&(model.params.values.len() as u64).to_le_bytes());
    for v in &model.params.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(buf: &[u8]) -> std::result::Result<Model, String> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a model file (bad magic)".into());
    }
    let version = r.u32()? as u32;
    if version != VERSION {
        return Err(format!("unsupported model version {version}"));
    }
    let stages = r.u32()?;
    if stages == 0 || stages > 64 {
        return Err(format!("implausible stage count {stages}"));
    }
    let widths = (0..stages)
        .map(|_| r.u32())
        .collect::<std::result::Result<_, _>>()?;
    let net = NetConfig {
        stages,
        widths,
        downsample_ratio: r.u32()?,
        aggregation_k: r.u32()?,
        head_width: r.u32()?,
        seed: r.u64()?,
        fps_start: r.u64()? as usize,
        input_scale: r.f64()?,
    };
    net.validate().map_err(|e| e.to_string())?;
    let input_dim = r.u32()?;
    let classes = r.u32()?;
    let layout = ParamLayout::new(&net, input_dim, classes);
    let count = r.u32()?;
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        shapes.push((r.u32()?, r.u32()?));
    }
    if shapes != layout.shapes() {
        return Err(format!(
            "shape table {shapes:?} does not match configuration {:?}",
            layout.shapes()
        ));
    }
    let n = r.u64()? as usize;
    if n != layout.len() {
        return Err(format!("{n} values for {} parameters", layout.len()));
    }
    let values = (0..n)
        .map(|_| r.f64())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if r.pos != buf.len() {
        return Err(format!("{} trailing bytes", buf.len() - r.pos));
    }
    let params = Params::from_values(layout, values).map_err(|e| e.to_string())?;
    Ok(Model { net, params })
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, encode(model)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> Result<Model> {
    let buf = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&buf).map_err(|m| CliError::Data(format!("{}: {m}", path.display())))
}
