//! Binary grid dumps and CSV export of lattice fields.
//!
//! A dump is one line of JSON describing the grid, a newline, then the raw
//! samples as little-endian `f64` in `(t, x, Q)` order with `Q` fastest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::lattice::{Field, Lattice};
use crate::error::{Error, Result};

const FORMAT: &str = "mfcache-grid/1";

/// Header line of a grid dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub format: String,
    pub name: String,
    /// Sample counts along `t`, `x`, `Q`.
    pub dims: [usize; 3],
    pub t_range: [f64; 2],
    pub x_range: [f64; 2],
    pub q_range: [f64; 2],
    pub order: String,
    pub dtype: String,
    /// Hex SHA-256 of the payload bytes.
    pub sha256: String,
}

impl GridHeader {
    fn lattice(&self) -> Result<Lattice> {
        let [nt1, nx, nq] = self.dims;
        if nt1 < 2 {
            return Err(Error::GridFormat(format!("need at least two time slices, got {nt1}")));
        }
        Lattice::new(nt1 - 1, nx, nq, self.t_range[1], self.q_range[1])
    }
}

fn payload(field: &Field) -> Vec<u8> {
    field.data().iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn header_for(field: &Field, name: &str, bytes: &[u8]) -> GridHeader {
    let lat = field.lattice();
    GridHeader {
        format: FORMAT.to_owned(),
        name: name.to_owned(),
        dims: [lat.nt + 1, lat.nx, lat.nq],
        t_range: [0.0, lat.horizon],
        x_range: [0.0, 1.0],
        q_range: [0.0, lat.capacity],
        order: "t,x,q".to_owned(),
        dtype: "f64le".to_owned(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

/// Serializes a field into the dump format.
pub fn write_grid_to<W: Write>(mut w: W, field: &Field, name: &str) -> Result<()> {
    let bytes = payload(field);
    let header = header_for(field, name, &bytes);
    let line = serde_json::to_string(&header).map_err(|e| Error::GridFormat(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn write_grid(path: impl AsRef<Path>, field: &Field, name: &str) -> Result<()> {
    write_grid_to(BufWriter::new(File::create(path)?), field, name)
}

/// Parses a dump, verifying its dimensions and checksum.
pub fn read_grid_from<R: Read>(r: R) -> Result<(GridHeader, Field)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: GridHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::GridFormat(format!("bad header: {e}")))?;
    if header.format != FORMAT || header.dtype != "f64le" || header.order != "t,x,q" {
        return Err(Error::GridFormat(format!(
            "unsupported layout {} / {} / {}",
            header.format, header.dtype, header.order
        )));
    }
    let lattice = header.lattice()?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let expected = (lattice.nt + 1) * lattice.slice_len() * 8;
    if bytes.len() != expected {
        return Err(Error::GridFormat(format!("payload has {} bytes, expected {expected}", bytes.len())));
    }
    let digest = hex::encode(Sha256::digest(&bytes));
    if digest != header.sha256 {
        return Err(Error::GridFormat("checksum mismatch".to_owned()));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, Field::from_vec(lattice, data)?))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<(GridHeader, Field)> {
    read_grid_from(File::open(path)?)
}

/// Writes `t,x,q,value` rows, one per lattice sample.
pub fn write_csv_to<W: Write>(w: W, field: &Field) -> Result<()> {
    let mut w = BufWriter::new(w);
    let lat = *field.lattice();
    writeln!(w, "t,x,q,value")?;
    for n in 0..=lat.nt {
        let slice = field.slice(n);
        for i in 0..lat.nx {
            for k in 0..lat.nq {
                writeln!(w, "{},{},{},{}", lat.t(n), lat.x(i), lat.q(k), slice[lat.idx(i, k)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    write_csv_to(File::create(path)?, field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let lat = Lattice::new(3, 4, 5, 2.0, 1.5).unwrap();
        let n = (lat.nt + 1) * lat.slice_len();
        Field::from_vec(lat, (0..n).map(|i| (i as f64).sin()).collect()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &f, "value").unwrap();
        let (h, g) = read_grid_from(buf.as_slice()).unwrap();
        assert_eq!(h.dims, [4, 4, 5]);
        assert_eq!(h.name, "value");
        assert_eq!(g.lattice(), f.lattice());
        assert_eq!(g.data(), f.data());
    }

    #[test]
    fn corrupted_payload_is_rejected() {
        let f = sample();
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &f, "value").unwrap();
        let last = buf.len() - 1;
        buf[last] ^= 0x01;
        assert!(matches!(read_grid_from(buf.as_slice()), Err(Error::GridFormat(_))));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let f = sample();
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &f, "value").unwrap();
        buf.truncate(buf.len() - 8);
        assert!(matches!(read_grid_from(buf.as_slice()), Err(Error::GridFormat(_))));
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x,q,value");
        assert_eq!(lines.len(), 1 + 4 * 4 * 5);
        assert!(lines[1].starts_with("0,0.125,0.15,0"));
    }
}
