//! Binary tensor checkpoint.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! magic    8 bytes  "EXSUMCKP"
//! version  u32      1
//! count    u32      number of tensors
//! per tensor:
//!   name_len u32, name (UTF-8)
//!   rank u32, dims u32 × rank
//!   payload  f32 LE × product(dims)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EXSUMCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(out: &mut impl Write, x: u32) -> std::io::Result<()> {
    out.write_all(&x.to_le_bytes())
}

fn to_u32(x: usize, what: &str) -> std::io::Result<u32> {
    u32::try_from(x).map_err(|_| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("{what} too large"),
        )
    })
}

pub fn write_checkpoint<'a, T: Scalar>(
    path: impl AsRef<Path>,
    tensors: impl IntoIterator<Item = (&'a str, &'a Tensor<T>)>,
) -> Result<()> {
    let path = path.as_ref();
    let tensors: Vec<_> = tensors.into_iter().collect();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        put_u32(out, CHECKPOINT_VERSION)?;
        put_u32(out, to_u32(tensors.len(), "tensor count")?)?;
        for (name, t) in &tensors {
            put_u32(out, to_u32(name.len(), "name")?)?;
            out.write_all(name.as_bytes())?;
            put_u32(out, to_u32(t.shape().len(), "rank")?)?;
            for &d in t.shape() {
                put_u32(out, to_u32(d, "dimension")?)?;
            }
            for &x in t.data() {
                out.write_all(&(x.to_f64_lossy() as f32).to_le_bytes())?;
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint("truncated file".into()))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn read_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<(String, Tensor<T>)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        inner: BufReader::new(file),
    };
    if r.bytes(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!(
            "{}: not a checkpoint",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.bytes(len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = r.u32()? as usize;
        let shape = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = r.bytes(n * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        tensors.push((name, Tensor::new(shape, data)?));
    }
    Ok(tensors)
}
