//! Canonical binary encoding.
//!
//! Every hashed or signed structure goes through this encoding. The layout is
//! fixed and documented in `docs/serialization.md`:
//!
//! * integers are big-endian, `u8`/`u32`/`u64` at their natural width
//! * `f64` is its IEEE-754 bit pattern as a big-endian `u64`
//! * `bool` is one byte, `0x00` or `0x01`; anything else fails to decode
//! * byte strings and UTF-8 strings are a `u32` length followed by the bytes
//! * 32-byte digests are written raw, without a length prefix
//! * sequences are a `u32` element count followed by the elements
//! * options are a `0x00` tag, or a `0x01` tag followed by the value
//!
//! Decoding is strict, so `encode(decode(bytes)) == bytes` whenever decoding
//! succeeds.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEof(usize),
    #[error("invalid boolean byte {0:#04x}")]
    InvalidBool(u8),
    #[error("invalid tag {tag} for {what}")]
    InvalidTag { what: &'static str, tag: u8 },
    #[error("invalid utf-8 in string field")]
    InvalidUtf8,
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        let n = u32::try_from(n).expect("length exceeds u32::MAX");
        self.u32(n)
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.len(v.len());
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn put<T: Encode + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }

    pub fn seq<'a, T: Encode + 'a, I>(&mut self, items: I) -> &mut Self
    where
        I: IntoIterator<Item = &'a T>,
        I::IntoIter: ExactSizeIterator,
    {
        let it = items.into_iter();
        self.len(it.len());
        for item in it {
            item.encode(self);
        }
        self
    }

    pub fn opt<T: Encode>(&mut self, v: Option<&T>) -> &mut Self {
        match v {
            None => self.u8(0),
            Some(v) => self.u8(1).put(v),
        }
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::UnexpectedEof(self.pos));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes(b.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn bool(&mut self) -> Result<bool, DecodeError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(DecodeError::InvalidBool(b)),
        }
    }

    pub fn len(&mut self) -> Result<usize, DecodeError> {
        let n = self.u32()? as usize;
        // A length can never exceed what is left; reject early so corrupted
        // prefixes do not trigger huge allocations.
        if n > self.remaining() {
            return Err(DecodeError::UnexpectedEof(self.pos));
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, DecodeError> {
        let n = self.len()?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn string(&mut self) -> Result<String, DecodeError> {
        String::from_utf8(self.bytes()?).map_err(|_| DecodeError::InvalidUtf8)
    }

    pub fn get<T: Decode>(&mut self) -> Result<T, DecodeError> {
        T::decode(self)
    }

    pub fn seq<T: Decode>(&mut self) -> Result<Vec<T>, DecodeError> {
        let n = self.len()?;
        (0..n).map(|_| T::decode(self)).collect()
    }

    pub fn opt<T: Decode>(&mut self) -> Result<Option<T>, DecodeError> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(T::decode(self)?)),
            tag => Err(DecodeError::InvalidTag { what: "option", tag }),
        }
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

pub trait Encode {
    fn encode(&self, enc: &mut Encoder);

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.finish()
    }
}

pub trait Decode: Sized {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError>;

    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let v = Self::decode(&mut dec)?;
        dec.finish()?;
        Ok(v)
    }
}

impl Encode for u64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(*self);
    }
}

impl Decode for u64 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.u64()
    }
}

impl Encode for f64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.f64(*self);
    }
}

impl Decode for f64 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.f64()
    }
}

impl Encode for bool {
    fn encode(&self, enc: &mut Encoder) {
        enc.bool(*self);
    }
}

impl Encode for String {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl Decode for String {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.string()
    }
}

impl Encode for str {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl<A: Encode, B: Encode> Encode for (A, B) {
    fn encode(&self, enc: &mut Encoder) {
        self.0.encode(enc);
        self.1.encode(enc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_big_endian_and_length_prefixed() {
        let mut enc = Encoder::new();
        enc.u32(1).u64(2).str("ab").bool(true).opt::<u64>(None);
        assert_eq!(
            enc.finish(),
            vec![0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, b'a', b'b', 1, 0]
        );
    }

    #[test]
    fn rejects_bad_bool_and_trailing_bytes() {
        let mut dec = Decoder::new(&[2]);
        assert_eq!(dec.bool(), Err(DecodeError::InvalidBool(2)));
        assert_eq!(
            u64::from_canonical_bytes(&[0, 0, 0, 0, 0, 0, 0, 1, 9]),
            Err(DecodeError::TrailingBytes(1))
        );
    }

    #[test]
    fn oversized_length_prefix_is_eof_not_alloc() {
        let mut dec = Decoder::new(&[0xff, 0xff, 0xff, 0xff, 1]);
        assert!(matches!(dec.bytes(), Err(DecodeError::UnexpectedEof(_))));
    }

    proptest! {
        #[test]
        fn strings_and_floats_round_trip(s in ".*", x in any::<f64>(), n in any::<u64>()) {
            let mut enc = Encoder::new();
            enc.str(&s).f64(x).u64(n);
            let bytes = enc.finish();
            let mut dec = Decoder::new(&bytes);
            prop_assert_eq!(dec.string().unwrap(), s);
            prop_assert_eq!(dec.f64().unwrap().to_bits(), x.to_bits());
            prop_assert_eq!(dec.u64().unwrap(), n);
            prop_assert!(dec.finish().is_ok());
        }
    }
}
