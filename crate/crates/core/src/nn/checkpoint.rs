//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! magic "HMPTCPNN" | version u32 | section count u32
//! per section: name length u32 | name bytes | tensor count u32
//! per tensor:  rank u32 | dims u64 * rank | values f64 * product(dims)
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so a load reproduces the saved
//! parameters exactly.

use std::io::{Read, Write};

use super::{Module, NnError};

const MAGIC: &[u8; 8] = b"HMPTCPNN";
pub const CHECKPOINT_VERSION: u32 = 1;

/// The tensors of one named module.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSection {
    pub name: String,
    pub tensors: Vec<(Vec<usize>, Vec<f64>)>,
}

impl CheckpointSection {
    pub fn capture(name: &str, module: &dyn Module) -> Self {
        let mut tensors = Vec::new();
        module.visit(&mut |shape, p| tensors.push((shape.to_vec(), p.to_vec())));
        Self {
            name: name.to_string(),
            tensors,
        }
    }

    /// Copies the stored tensors into `module`, which must have the same
    /// layout.
    pub fn restore(&self, module: &mut dyn Module) -> Result<(), NnError> {
        let mut shapes = Vec::new();
        module.visit(&mut |shape, _| shapes.push(shape.to_vec()));
        if shapes.len() != self.tensors.len() {
            return Err(NnError::Checkpoint(format!(
                "section {:?} has {} tensors, module has {}",
                self.name,
                self.tensors.len(),
                shapes.len()
            )));
        }
        for (index, (expected, (got, _))) in shapes.iter().zip(&self.tensors).enumerate() {
            if expected != got {
                return Err(NnError::ShapeMismatch {
                    index,
                    expected: expected.clone(),
                    got: got.clone(),
                });
            }
        }
        let mut k = 0;
        module.visit_mut(&mut |_, p| {
            p.copy_from_slice(&self.tensors[k].1);
            k += 1;
        });
        Ok(())
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_checkpoint<W: Write>(w: &mut W, sections: &[CheckpointSection]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, CHECKPOINT_VERSION)?;
    put_u32(w, sections.len() as u32)?;
    for s in sections {
        put_u32(w, s.name.len() as u32)?;
        w.write_all(s.name.as_bytes())?;
        put_u32(w, s.tensors.len() as u32)?;
        for (shape, values) in &s.tensors {
            put_u32(w, shape.len() as u32)?;
            for &d in shape {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in values {
                w.write_all(&v.to_bits().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Reader<'a, R: Read>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N], NnError> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|e| NnError::Checkpoint(format!("truncated while reading {what}: {e}")))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }
}

// Guards against absurd allocations from corrupt headers.
const MAX_ELEMENTS: u64 = 1 << 28;

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Vec<CheckpointSection>, NnError> {
    let mut rd = Reader(r);
    let magic: [u8; 8] = rd.bytes("magic")?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("not a checkpoint file".into()));
    }
    let version = rd.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let count = rd.u32("section count")?;
    let mut sections = Vec::new();
    for _ in 0..count {
        let len = rd.u32("name length")? as usize;
        if len > 4096 {
            return Err(NnError::Checkpoint(format!("section name length {len}")));
        }
        let mut name = vec![0u8; len];
        rd.0.read_exact(&mut name)
            .map_err(|e| NnError::Checkpoint(format!("truncated section name: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| NnError::Checkpoint("section name is not UTF-8".into()))?;
        let n_tensors = rd.u32("tensor count")?;
        let mut tensors = Vec::new();
        for _ in 0..n_tensors {
            let rank = rd.u32("rank")?;
            if rank > 8 {
                return Err(NnError::Checkpoint(format!("tensor rank {rank}")));
            }
            let mut shape = Vec::new();
            let mut total: u64 = 1;
            for _ in 0..rank {
                let d = rd.u64("dimension")?;
                total = total.saturating_mul(d);
                shape.push(d as usize);
            }
            if total > MAX_ELEMENTS {
                return Err(NnError::Checkpoint(format!("tensor of {total} elements")));
            }
            let values = (0..total)
                .map(|_| rd.u64("value").map(f64::from_bits))
                .collect::<Result<Vec<_>, _>>()?;
            tensors.push((shape, values));
        }
        sections.push(CheckpointSection { name, tensors });
    }
    Ok(sections)
}
