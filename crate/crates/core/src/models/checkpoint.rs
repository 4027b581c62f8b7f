//! Binary checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic     8 bytes  "WKGECKPT"
//! version   u32      1
//! kind      u32      0 TransE, 1 DistMult, 2 RotatE, 3 AttH, 4 MLP
//! dim       u64
//! n_entities  u64    (MLP: input width)
//! n_relations u64    (MLP: output width)
//! seed      u64
//! n_arrays  u32
//! then per array: length u64, followed by `length` f64 values
//! ```
//!
//! KGE checkpoints hold two arrays: the entity table then the relation table.

use std::io::{Read, Write};
use std::path::Path;

use super::{ModelKind, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"WKGECKPT";
const VERSION: u32 = 1;
pub const MLP_TAG: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub kind: u32,
    pub dim: u64,
    pub n_entities: u64,
    pub n_relations: u64,
    pub seed: u64,
}

pub fn write_arrays(path: &Path, header: Header, arrays: &[&[f64]]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&header.kind.to_le_bytes());
    for v in [header.dim, header.n_entities, header.n_relations, header.seed] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in arrays {
        buf.extend_from_slice(&(a.len() as u64).to_le_bytes());
        for x in *a {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    file: String,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::parse(&self.file, 0, format!("truncated checkpoint at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
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

pub fn read_arrays(path: &Path) -> Result<(Header, Vec<Vec<f64>>)> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut c = Cursor { buf: &buf, pos: 0, file: file.clone() };
    if c.take(8)? != MAGIC {
        return Err(Error::parse(&file, 0, "not a checkpoint (bad magic)"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::parse(&file, 0, format!("unsupported checkpoint version {version}")));
    }
    let kind = c.u32()?;
    let header = Header { kind, dim: c.u64()?, n_entities: c.u64()?, n_relations: c.u64()?, seed: c.u64()? };
    let n_arrays = c.u32()? as usize;
    let mut arrays = Vec::with_capacity(n_arrays);
    for _ in 0..n_arrays {
        let len = c.u64()? as usize;
        if len > (buf.len() - c.pos) / 8 {
            return Err(Error::parse(&file, 0, "array length exceeds file size"));
        }
        arrays.push((0..len).map(|_| c.f64()).collect::<Result<Vec<_>>>()?);
    }
    if c.pos != buf.len() {
        return Err(Error::parse(&file, 0, "trailing bytes after checkpoint"));
    }
    Ok((header, arrays))
}

pub fn save(params: &ModelParams, path: &Path) -> Result<()> {
    let header = Header {
        kind: params.kind.tag(),
        dim: params.dim as u64,
        n_entities: params.n_entities() as u64,
        n_relations: params.n_relations() as u64,
        seed: params.seed,
    };
    write_arrays(path, header, &[params.entity_table(), params.relation_table()])
}

/// Loads a KGE checkpoint and checks its sizes against the vocabulary.
pub fn load(path: &Path, n_entities: usize, n_relations: usize) -> Result<ModelParams> {
    let (h, mut arrays) = read_arrays(path)?;
    let file = path.display().to_string();
    let kind = ModelKind::from_tag(h.kind)
        .ok_or_else(|| Error::parse(&file, 0, format!("checkpoint kind tag {} is not a KGE model", h.kind)))?;
    if h.n_entities as usize != n_entities || h.n_relations as usize != n_relations {
        return Err(Error::Data(format!(
            "checkpoint has {} entities / {} relations but the graph has {n_entities} / {n_relations}",
            h.n_entities, h.n_relations
        )));
    }
    if arrays.len() != 2 {
        return Err(Error::parse(&file, 0, format!("expected 2 arrays, found {}", arrays.len())));
    }
    let relations = arrays.pop().unwrap();
    let entities = arrays.pop().unwrap();
    ModelParams::from_parts(kind, h.dim as usize, h.seed, n_entities, n_relations, entities, relations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        for kind in ModelKind::ALL {
            let params = ModelParams::init(kind, 7, 3, 8, 9).unwrap();
            save(&params, &p).unwrap();
            assert_eq!(load(&p, 7, 3).unwrap(), params);
            assert!(matches!(load(&p, 8, 3), Err(Error::Data(_))));
        }
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load(&p, 7, 3).is_err());
        std::fs::write(&p, b"garbage").unwrap();
        assert!(load(&p, 7, 3).is_err());
    }

    #[test]
    fn header_layout_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        let params = ModelParams::init(ModelKind::DistMult, 2, 1, 3, 77).unwrap();
        save(&params, &p).unwrap();
        let b = std::fs::read(&p).unwrap();
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(b[40..48].try_into().unwrap()), 77);
        // header 52 bytes + two arrays of (8 + 8·len)
        assert_eq!(b.len(), 52 + 8 + 6 * 8 + 8 + 3 * 8);
        let first = f64::from_le_bytes(b[60..68].try_into().unwrap());
        assert_eq!(first, params.entity_table()[0]);
    }
}
