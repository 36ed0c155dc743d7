//! Named dense-array checkpoints.
//!
//! Layout (little-endian): magic `LGCKPT`, u32 version, u32 array count,
//! then per array: u32 name length, name bytes, u32 rank, u64 dims, f64 data.

use std::path::Path;

use super::generator::GeneratorParams;
use super::verifier::VerifierParams;
use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"LGCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<u64>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub arrays: Vec<NamedArray>,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl Checkpoint {
    pub fn push(&mut self, name: &str, shape: Vec<u64>, data: Vec<f64>) {
        self.arrays.push(NamedArray {
            name: name.into(),
            shape,
            data,
        });
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Format(format!("checkpoint has no array '{name}'")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            out.extend_from_slice(&(a.name.len() as u32).to_le_bytes());
            out.extend_from_slice(a.name.as_bytes());
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for d in &a.shape {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for x in &a.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(6)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic bytes)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let count = r.u32()?;
        let mut ck = Checkpoint::default();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Format("array name is not UTF-8".into()))?;
            let rank = r.u32()?;
            let shape = (0..rank).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            let n = shape
                .iter()
                .try_fold(1u64, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format("array shape overflows".into()))?;
            if n as usize > (buf.len() - r.pos) / 8 {
                return Err(Error::Format("checkpoint truncated".into()));
            }
            let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            ck.push(&name, shape, data);
        }
        if r.pos != buf.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = std::fs::read(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&buf)
    }
}

impl GeneratorParams {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let v = self.vocab_size() as u64;
        let mut ck = Checkpoint::default();
        ck.push("generator.bigram", vec![v, v], self.bigram.clone());
        ck.push("generator.ctx", vec![v, v], self.ctx.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let bigram = ck.get("generator.bigram")?;
        let ctx = ck.get("generator.ctx")?;
        let v = bigram.shape.first().copied().unwrap_or(0) as usize;
        if bigram.shape != [v as u64, v as u64] || ctx.shape != bigram.shape {
            return Err(Error::Format("generator arrays must be square and equal".into()));
        }
        GeneratorParams::from_parts(v, bigram.data.clone(), ctx.data.clone())
    }
}

impl VerifierParams {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        ck.push("verifier.weights", vec![self.dim() as u64], self.weights.clone());
        ck.push("verifier.bias", vec![1], vec![self.bias]);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let w = ck.get("verifier.weights")?;
        let b = ck.get("verifier.bias")?;
        if b.data.len() != 1 {
            return Err(Error::Format("verifier bias must be a scalar".into()));
        }
        VerifierParams::from_parts(w.data.clone(), b.data[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bit_exact_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = GeneratorParams::random(7, 1.0, &mut rng);
        let mut ck = g.to_checkpoint();
        ck.push("odd", vec![3], vec![f64::MIN_POSITIVE, -0.0, 1e308]);
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(GeneratorParams::from_checkpoint(&back).unwrap(), g);
        assert_eq!(back.get("odd").unwrap().data[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn corrupt_input() {
        let v = VerifierParams::zeros(16).to_checkpoint().to_bytes();
        let mut bad = v.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Format(_))));
        assert!(Checkpoint::from_bytes(&v[..v.len() - 3]).is_err());
    }
}
