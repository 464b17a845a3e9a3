use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoxMeasure, MeasureSpec};
use crate::cgrid::GridGeometry;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"UBIQMEAS";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    c: u32,
    d: usize,
    j_max: u32,
    kind: String,
    spec: Option<MeasureSpec>,
    seed: Option<u64>,
}

/// Writes JSON when the path ends in `.json`, the binary layout otherwise.
pub fn write_measure(mu: &BoxMeasure, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::to_writer(&mut file, mu)?;
    } else {
        write_binary(mu, &mut file)?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_measure(path: &Path) -> Result<BoxMeasure> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&mut bytes.as_slice())
    } else {
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Magic, version, header length, JSON header, then each generation as little-endian f64.
pub fn write_binary(mu: &BoxMeasure, out: &mut impl Write) -> Result<()> {
    let header = Header {
        c: mu.geom.c,
        d: mu.geom.d,
        j_max: mu.j_max,
        kind: mu.kind().to_string(),
        spec: mu.spec.clone(),
        seed: mu.seed,
    };
    let h = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(h.len() as u64).to_le_bytes())?;
    out.write_all(&h)?;
    for level in mu.levels() {
        for v in level {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary(input: &mut impl Read) -> Result<BoxMeasure> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Invalid("not a measure file".into()));
    }
    let mut u32b = [0u8; 4];
    input.read_exact(&mut u32b)?;
    if u32::from_le_bytes(u32b) != VERSION {
        return Err(Error::Invalid("unsupported measure file version".into()));
    }
    let mut u64b = [0u8; 8];
    input.read_exact(&mut u64b)?;
    let mut h = vec![0u8; u64::from_le_bytes(u64b) as usize];
    input.read_exact(&mut h)?;
    let header: Header = serde_json::from_slice(&h)?;
    let geom = GridGeometry::new(header.c, header.d)?;
    geom.check_depth(header.j_max)?;
    let mut levels = Vec::with_capacity(header.j_max as usize + 1);
    let mut buf = [0u8; 8];
    for j in 0..=header.j_max {
        let n = geom.box_count(j) as usize;
        let mut level = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut buf)?;
            level.push(f64::from_le_bytes(buf));
        }
        levels.push(level);
    }
    BoxMeasure::from_levels(geom, levels, header.spec, header.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_multinomial, MultinomialSpec};

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let spec = MultinomialSpec::new(3, vec![vec![0.5, 0.3, 0.2]]).unwrap();
        let mu = build_multinomial(&spec, 5).unwrap();
        let mut buf = Vec::new();
        write_binary(&mu, &mut buf).unwrap();
        let back = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn json_round_trip() {
        let mu = build_multinomial(&MultinomialSpec::uniform(2, 2), 3).unwrap();
        let s = serde_json::to_string(&mu).unwrap();
        let back: BoxMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
    }
}
