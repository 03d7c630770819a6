//! Model file format.
//!
//! ```text
//! SDRQC1\n
//! q k n_in n_out tau_min tau_max seed\n
//! F   u64 byte length, then run-length records
//! H   u64 byte length, then run-length records
//! D   u64 byte length, then run-length records
//! u32 readout threshold
//! u8  active flag, then q x u32 winners when set
//! u128 generator word position
//! ```
//!
//! Matrices are row-major. A run-length record is `(u32 run, u32 value)`.
//! All integers are little-endian. `F` and `D` only hold 0 or 1; `H` holds
//! transition counts.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::coding_field::{Code, FieldGeometry};
use crate::error::{Error, Result};
use crate::memory::{Memory, ModelParams};

pub const MAGIC: &[u8] = b"SDRQC1\n";

fn encode_runs<T: Copy + PartialEq + Into<u32>>(values: &[T], out: &mut Vec<u8>) {
    let mut body = Vec::new();
    let mut iter = values.iter().copied().peekable();
    while let Some(v) = iter.next() {
        let mut run: u32 = 1;
        while run < u32::MAX && iter.peek() == Some(&v) {
            iter.next();
            run += 1;
        }
        body.extend_from_slice(&run.to_le_bytes());
        body.extend_from_slice(&v.into().to_le_bytes());
    }
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
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
            .ok_or_else(|| Error::Format("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.buf[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing header line".into()))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| Error::Format("header is not UTF-8".into()))
    }

    fn runs(&mut self, len: usize, max_value: u32, name: &str) -> Result<Vec<u32>> {
        let bytes = self.u64()? as usize;
        if !bytes.is_multiple_of(8) {
            return Err(Error::Format(format!("{name}: ragged run-length stream")));
        }
        let mut body = Reader {
            buf: self.take(bytes)?,
            pos: 0,
        };
        let mut values = Vec::with_capacity(len);
        for _ in 0..bytes / 8 {
            let run = body.u32()? as usize;
            let value = body.u32()?;
            if value > max_value {
                return Err(Error::Format(format!(
                    "{name}: weight {value} out of range"
                )));
            }
            if run == 0 || values.len() + run > len {
                return Err(Error::Format(format!("{name}: bad run length {run}")));
            }
            values.resize(values.len() + run, value);
        }
        if values.len() != len {
            return Err(Error::Format(format!(
                "{name}: expected {len} weights, found {}",
                values.len()
            )));
        }
        Ok(values)
    }
}

impl Memory {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let g = p.geometry;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(
            format!(
                "{} {} {} {} {} {} {}\n",
                g.q(),
                g.k(),
                g.n_in(),
                g.n_out(),
                p.tau_min,
                p.tau_max,
                p.seed
            )
            .as_bytes(),
        );
        encode_runs(&self.f, &mut out);
        encode_runs(&self.h, &mut out);
        encode_runs(&self.d, &mut out);
        out.extend_from_slice(&(p.readout_threshold as u32).to_le_bytes());
        match &self.active {
            Some(code) => {
                out.push(1);
                for &w in code.winners() {
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
            None => out.push(0),
        }
        out.extend_from_slice(&self.rng.word_pos().to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(MAGIC) {
            return Err(Error::Format("unknown magic or version".into()));
        }
        let mut r = Reader {
            buf: bytes,
            pos: MAGIC.len(),
        };
        let fields: Vec<&str> = r.line()?.split(' ').collect();
        if fields.len() != 7 {
            return Err(Error::Format(format!(
                "header has {} fields, expected 7",
                fields.len()
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!("header field `{s}`: {e}")))
        };
        let float = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("header field `{s}`: {e}")))
        };
        let geometry = FieldGeometry::new(
            int(fields[0])?,
            int(fields[1])?,
            int(fields[2])?,
            int(fields[3])?,
        )?;
        let seed = fields[6]
            .parse::<u64>()
            .map_err(|e| Error::Format(format!("seed: {e}")))?;
        let mut params = ModelParams::new(geometry, seed)
            .with_temperatures(float(fields[4])?, float(fields[5])?);

        let units = geometry.units();
        let f = r.runs(geometry.n_in() * units, 1, "F")?;
        let h = r.runs(units * units, u32::MAX, "H")?;
        let d = r.runs(units * geometry.n_out(), 1, "D")?;
        params.readout_threshold = r.u32()? as usize;

        let mut model = Memory::new(params)?;
        model.f = f.into_iter().map(|w| w as u8).collect();
        model.h = h;
        model.d = d.into_iter().map(|w| w as u8).collect();
        model.active = match r.u8()? {
            0 => None,
            1 => {
                let winners = (0..geometry.q())
                    .map(|_| r.u32())
                    .collect::<Result<Vec<_>>>()?;
                Some(Code::for_geometry(&geometry, winners)?)
            }
            other => return Err(Error::Format(format!("bad active flag {other}"))),
        };
        model.rng.set_word_pos(r.u128()?);
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(model)
    }

    /// Writes the model atomically: a sibling temp file is renamed into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(&self.to_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::memory::SelectMode;
    use crate::pattern::BitPattern;
    use crate::rng::SdrRng;

    fn trained(seed: u64, n: usize) -> Memory {
        let g = FieldGeometry::new(5, 4, 20, 20).unwrap();
        let mut m = Memory::new(ModelParams::new(g, seed).with_temperatures(0.1, 3.5)).unwrap();
        let mut rng = SdrRng::new(seed);
        let items: Vec<BitPattern> = (0..n)
            .map(|_| BitPattern::random(20, 4, &mut rng).unwrap())
            .collect();
        if n > 0 {
            m.learn_sequence(&items).unwrap();
        }
        m
    }

    #[test]
    fn header_layout() {
        let bytes = trained(1, 0).to_bytes();
        assert!(bytes.starts_with(b"SDRQC1\n5 4 20 20 0.1 3.5 1\n"));
    }

    #[test]
    fn rejects_unknown_magic() {
        let mut bytes = trained(1, 3).to_bytes();
        bytes[5] = b'2';
        assert!(matches!(Memory::from_bytes(&bytes), Err(Error::Format(_))));
        assert!(Memory::from_bytes(b"").is_err());
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let bytes = trained(2, 3).to_bytes();
        assert!(Memory::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Memory::from_bytes(&longer).is_err());
    }

    #[test]
    fn reload_continues_the_same_random_stream() {
        let mut a = trained(3, 4);
        let mut b = Memory::from_bytes(&a.to_bytes()).unwrap();
        for _ in 0..5 {
            assert_eq!(
                a.step(SelectMode::Proportional).unwrap(),
                b.step(SelectMode::Proportional).unwrap()
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn save_load_save_is_byte_identical(seed in any::<u64>(), n in 0usize..8) {
            let m = trained(seed, n);
            let bytes = m.to_bytes();
            let loaded = Memory::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&loaded.f, &m.f);
            prop_assert_eq!(&loaded.h, &m.h);
            prop_assert_eq!(loaded.active(), m.active());
            prop_assert_eq!(loaded.to_bytes(), bytes);
        }
    }
}
