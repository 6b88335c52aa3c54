//! Little-endian framing shared by the on-disk formats.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &[u8; 8]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn usizes(&mut self, vs: &[usize]) -> &mut Self {
        self.buf.reserve(vs.len() * 8);
        for &v in vs {
            self.buf.extend_from_slice(&(v as u64).to_le_bytes());
        }
        self
    }

    pub fn scalars<T: Scalar>(&mut self, vs: &[T]) -> &mut Self {
        self.buf.reserve(vs.len() * T::BYTES);
        for &v in vs {
            v.write_le(&mut self.buf);
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Decoder<'a> {
    pub fn new(bytes: &'a [u8], magic: &[u8; 8], what: &'static str) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != magic {
            return Err(Error::Format(format!("{what}: bad magic")));
        }
        Ok(Self {
            bytes,
            pos: 8,
            what,
        })
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!("{}: truncated at byte {}", self.what, self.pos))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(b))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .map_err(|_| Error::Format(format!("{}: length {v} overflows", self.what)))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(f64::from_le_bytes(b))
    }

    fn checked_len(&self, count: usize, width: usize) -> Result<usize> {
        count
            .checked_mul(width)
            .ok_or_else(|| Error::Format(format!("{}: payload size overflows", self.what)))
    }

    pub fn usizes(&mut self, count: usize) -> Result<Vec<usize>> {
        let len = self.checked_len(count, 8)?;
        let raw = self.take(len)?;
        raw.chunks_exact(8)
            .map(|c| {
                let mut b = [0u8; 8];
                b.copy_from_slice(c);
                usize::try_from(u64::from_le_bytes(b))
                    .map_err(|_| Error::Format(format!("{}: index overflows", self.what)))
            })
            .collect()
    }

    pub fn scalars<T: Scalar>(&mut self, count: usize) -> Result<Vec<T>> {
        let len = self.checked_len(count, T::BYTES)?;
        let raw = self.take(len)?;
        Ok(raw.chunks_exact(T::BYTES).map(T::read_le).collect())
    }

    pub fn i64s(&mut self, count: usize) -> Result<Vec<i64>> {
        let len = self.checked_len(count, 8)?;
        let raw = self.take(len)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| {
                let mut b = [0u8; 8];
                b.copy_from_slice(c);
                i64::from_le_bytes(b)
            })
            .collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
