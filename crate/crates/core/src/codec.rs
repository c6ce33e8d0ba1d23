//! Minimal cursor for the fixed big-endian binary layouts.

use crate::digest::Hash32;

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, at: 0 }
    }

    pub fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.at.checked_add(n)?;
        let out = self.buf.get(self.at..end)?;
        self.at = end;
        Some(out)
    }

    pub fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_be_bytes(b.try_into().unwrap()))
    }

    pub fn digest(&mut self) -> Option<Hash32> {
        self.take(32).and_then(Hash32::from_slice)
    }

    /// A u64 count followed by that many digests.
    pub fn digests(&mut self) -> Option<Vec<Hash32>> {
        let n = usize::try_from(self.u64()?).ok()?;
        if n > self.remaining() / 32 {
            return None;
        }
        (0..n).map(|_| self.digest()).collect()
    }

    /// A u64 length followed by that many bytes.
    pub fn bytes(&mut self) -> Option<&'a [u8]> {
        let n = usize::try_from(self.u64()?).ok()?;
        self.take(n)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.at
    }

    pub fn is_done(&self) -> bool {
        self.at == self.buf.len()
    }
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub(crate) fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u64(out, b.len() as u64);
    out.extend_from_slice(b);
}

pub(crate) fn put_digests(out: &mut Vec<u8>, ds: &[Hash32]) {
    put_u64(out, ds.len() as u64);
    for d in ds {
        out.extend_from_slice(&d.0);
    }
}
