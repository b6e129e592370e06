//! Little-endian parameter file: `u32 kind, u32 F, u32 C, u32 n_tensors`,
//! then `u32 rows, u32 cols` per tensor, then the row-major `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::learn::classifier::{tensor_shapes, ClassifierKind, ClassifierParams};

/// Size in bytes of the serialized parameters, header included.
pub fn encoded_len(params: &ClassifierParams) -> usize {
    16 + 8 * params.shapes().len() + payload_len(params)
}

/// Size in bytes of the raw `f64` values; this is what one gossip exchange
/// ships per model.
pub fn payload_len(params: &ClassifierParams) -> usize {
    8 * params.n_params()
}

pub fn write_params<W: Write>(params: &ClassifierParams, mut w: W) -> std::io::Result<()> {
    let shapes = params.shapes();
    for x in [
        params.kind.code(),
        params.n_features as u32,
        params.n_classes as u32,
        shapes.len() as u32,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    for s in &shapes {
        w.write_all(&(s.rows as u32).to_le_bytes())?;
        w.write_all(&(s.cols as u32).to_le_bytes())?;
    }
    for v in &params.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Codec(format!("truncated parameter header: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_params<R: Read>(mut r: R) -> Result<ClassifierParams> {
    let code = read_u32(&mut r)?;
    let kind = ClassifierKind::from_code(code)
        .ok_or_else(|| Error::Codec(format!("unknown classifier kind code {code}")))?;
    let f = read_u32(&mut r)? as usize;
    let c = read_u32(&mut r)? as usize;
    let n_tensors = read_u32(&mut r)? as usize;
    if n_tensors > 16 {
        return Err(Error::Codec(format!("implausible tensor count {n_tensors}")));
    }
    let mut shapes = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        shapes.push((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize));
    }
    let hidden = if kind == ClassifierKind::Mlp {
        shapes.first().map_or(0, |s| s.0)
    } else {
        0
    };
    let expected: Vec<(usize, usize)> = tensor_shapes(kind, f, c, hidden)
        .iter()
        .map(|s| (s.rows, s.cols))
        .collect();
    if shapes != expected {
        return Err(Error::Codec(format!(
            "tensor shapes {shapes:?} do not match a {kind} classifier ({expected:?})"
        )));
    }
    let mut params = ClassifierParams::zeros(kind, f, c, hidden);
    let mut buf = [0u8; 8];
    for v in &mut params.values {
        r.read_exact(&mut buf)
            .map_err(|e| Error::Codec(format!("truncated parameter data: {e}")))?;
        *v = f64::from_le_bytes(buf);
    }
    if r.read(&mut buf).map_err(|e| Error::Codec(e.to_string()))? != 0 {
        return Err(Error::Codec("trailing bytes after parameter data".into()));
    }
    Ok(params)
}

pub fn write_params_file(params: &ClassifierParams, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_params(params, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_params_file(path: &Path) -> Result<ClassifierParams> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_params(BufReader::new(file))
}
