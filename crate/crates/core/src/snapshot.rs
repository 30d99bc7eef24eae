//! Versioned binary snapshot of a [`GraphState`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      b"PACF"
//! version    u16
//! c          u32
//! delta      f64
//! n          u64
//! rng seed   [u8; 32]
//! rng stream u64
//! rng word   u128
//! degrees    n x u32
//! adjacency  per node: LEB128 length, then LEB128 gaps of the sorted ids
//! crc32      u32 over every preceding byte
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphState, NodeId};
use crate::params::ModelParams;
use crate::weights::CumulativeWeights;

pub const MAGIC: &[u8; 4] = b"PACF";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub params: ModelParams,
    pub degrees: Vec<u32>,
    pub adjacency: Vec<Vec<NodeId>>,
    pub rng_seed: [u8; 32],
    pub rng_stream: u64,
    pub rng_word_pos: u128,
}

impl Snapshot {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64 + self.degrees.len() * 8);
        buf.extend_from_slice(MAGIC);
        buf.write_u16::<LittleEndian>(VERSION).unwrap();
        buf.write_u32::<LittleEndian>(self.params.c()).unwrap();
        buf.write_f64::<LittleEndian>(self.params.delta()).unwrap();
        buf.write_u64::<LittleEndian>(self.n() as u64).unwrap();
        buf.extend_from_slice(&self.rng_seed);
        buf.write_u64::<LittleEndian>(self.rng_stream).unwrap();
        buf.write_u128::<LittleEndian>(self.rng_word_pos).unwrap();
        for &d in &self.degrees {
            buf.write_u32::<LittleEndian>(d).unwrap();
        }
        for adj in &self.adjacency {
            write_varint(&mut buf, adj.len() as u64);
            let mut prev = 0;
            for &v in adj {
                write_varint(&mut buf, u64::from(v - prev));
                prev = v;
            }
        }
        let crc = crc32fast::hash(&buf);
        buf.write_u32::<LittleEndian>(crc).unwrap();
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 2 + 4 {
            return Err(Error::format("snapshot truncated"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if &body[..4] != MAGIC {
            return Err(Error::format("not a snapshot file (bad magic)"));
        }
        let mut cur = Cursor::new(&body[4..]);
        let version = cur.read_u16::<LittleEndian>().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported snapshot version {version}, expected {VERSION}"
            )));
        }
        let stored_crc = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored_crc {
            return Err(Error::format(
                "snapshot checksum mismatch (truncated or corrupted)",
            ));
        }

        let c = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        let delta = cur.read_f64::<LittleEndian>().map_err(truncated)?;
        let params = ModelParams::new(c, delta).map_err(|e| Error::format(e.to_string()))?;
        let n = cur.read_u64::<LittleEndian>().map_err(truncated)?;
        if n == 0 || n > u64::from(NodeId::MAX) || n > body.len() as u64 {
            return Err(Error::format(format!("implausible node count {n}")));
        }
        let n = n as usize;
        let mut rng_seed = [0u8; 32];
        cur.read_exact(&mut rng_seed).map_err(truncated)?;
        let rng_stream = cur.read_u64::<LittleEndian>().map_err(truncated)?;
        let rng_word_pos = cur.read_u128::<LittleEndian>().map_err(truncated)?;

        let mut degrees = Vec::with_capacity(n);
        for _ in 0..n {
            degrees.push(cur.read_u32::<LittleEndian>().map_err(truncated)?);
        }
        let mut adjacency = Vec::with_capacity(n);
        for node in 1..=n {
            let len = read_varint(&mut cur)?;
            if len > n as u64 {
                return Err(Error::format(format!("node {node} lists {len} neighbours")));
            }
            let mut adj = Vec::with_capacity(len as usize);
            let mut prev = 0u64;
            for _ in 0..len {
                let gap = read_varint(&mut cur)?;
                prev += gap;
                if (gap == 0 && !adj.is_empty()) || prev == 0 || prev > n as u64 {
                    return Err(Error::format(format!("bad neighbour id in node {node}")));
                }
                adj.push(prev as NodeId);
            }
            adjacency.push(adj);
        }
        if (cur.position() as usize) != body.len() - 4 {
            return Err(Error::format("trailing bytes after adjacency"));
        }
        Ok(Snapshot {
            params,
            degrees,
            adjacency,
            rng_seed,
            rng_stream,
            rng_word_pos,
        })
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn truncated(_: std::io::Error) -> Error {
    Error::format("snapshot truncated")
}

fn write_varint(buf: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf.push(byte);
            return;
        }
        buf.push(byte | 0x80);
    }
}

fn read_varint(cur: &mut Cursor<&[u8]>) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = cur.read_u8().map_err(truncated)?;
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::format("varint overflow"))
}

impl GraphState {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            params: self.params,
            degrees: self.degrees.clone(),
            adjacency: self.adjacency.clone(),
            rng_seed: self.rng.get_seed(),
            rng_stream: self.rng.get_stream(),
            rng_word_pos: self.rng.get_word_pos(),
        }
    }

    /// Rebuilds a state from a snapshot, validating its structure.
    pub fn restore(snapshot: Snapshot) -> Result<GraphState> {
        let mut rng = ChaCha8Rng::from_seed(snapshot.rng_seed);
        rng.set_stream(snapshot.rng_stream);
        rng.set_word_pos(snapshot.rng_word_pos);
        if snapshot.adjacency.len() != snapshot.degrees.len() {
            return Err(Error::format("degree and adjacency counts differ"));
        }
        let weights = CumulativeWeights::from_counts(
            snapshot.degrees.iter().map(|&d| u64::from(d)),
            snapshot.params.delta(),
        );
        let state = GraphState {
            params: snapshot.params,
            degrees: snapshot.degrees,
            adjacency: snapshot.adjacency,
            weights,
            rng,
        };
        state.check_invariants()?;
        Ok(state)
    }
}
