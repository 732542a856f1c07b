//! Flat parameter files: a little-endian `u64` count of layer sizes, the sizes
//! themselves as `u64`, then every parameter as a little-endian `f64`
//! (per layer: weights row-major `(out, in)`, then biases).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Mlp, NnError};

const MAX_LAYERS: u64 = 1024;
const MAX_WIDTH: u64 = 1 << 24;

impl Mlp {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), NnError> {
        let sizes = self.layer_sizes();
        w.write_all(&(sizes.len() as u64).to_le_bytes())?;
        for s in &sizes {
            w.write_all(&(*s as u64).to_le_bytes())?;
        }
        for layer in self.layers() {
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, NnError> {
        let count = read_u64(&mut r)?;
        if !(2..=MAX_LAYERS).contains(&count) {
            return Err(NnError::BadSnapshot(format!(
                "implausible layer count {count}"
            )));
        }
        let mut sizes = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let s = read_u64(&mut r)?;
            if s == 0 || s > MAX_WIDTH {
                return Err(NnError::BadSnapshot(format!("implausible layer size {s}")));
            }
            sizes.push(s as usize);
        }
        let mut net = Mlp::zeros(&sizes)?;
        for layer in net.layers_mut() {
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                let mut buf = [0u8; 8];
                r.read_exact(&mut buf)
                    .map_err(|_| NnError::BadSnapshot("truncated parameter block".into()))?;
                *v = f64::from_le_bytes(buf);
            }
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(NnError::BadSnapshot(
                "trailing bytes after parameters".into(),
            ));
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        Mlp::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NnError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| NnError::BadSnapshot("truncated header".into()))?;
    Ok(u64::from_le_bytes(buf))
}
