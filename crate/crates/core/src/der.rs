// SPDX-License-Identifier: Apache-2.0

//! Minimal X.690 DER writer and strict reader.
//!
//! Only what certificates, CSRs and CRLs need: single-octet tags, definite
//! minimal lengths. The reader rejects anything a DER encoder would not emit.

use std::fmt;

use thiserror::Error;
use time::{Date, Month, OffsetDateTime, PrimitiveDateTime, Time};

pub const BOOLEAN: u8 = 0x01;
pub const INTEGER: u8 = 0x02;
pub const BIT_STRING: u8 = 0x03;
pub const OCTET_STRING: u8 = 0x04;
pub const NULL: u8 = 0x05;
pub const OID: u8 = 0x06;
pub const ENUMERATED: u8 = 0x0a;
pub const UTF8_STRING: u8 = 0x0c;
pub const PRINTABLE_STRING: u8 = 0x13;
pub const IA5_STRING: u8 = 0x16;
pub const UTC_TIME: u8 = 0x17;
pub const GENERALIZED_TIME: u8 = 0x18;
pub const SEQUENCE: u8 = 0x30;
pub const SET: u8 = 0x31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("DER error: {0}")]
pub struct DerError(pub String);

pub type Result<T> = std::result::Result<T, DerError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(DerError(msg.into()))
}

pub const fn context(n: u8) -> u8 {
    0xa0 | n
}

pub const fn context_primitive(n: u8) -> u8 {
    0x80 | n
}

pub fn tlv(tag: u8, content: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(content.len() + 6);
    out.push(tag);
    let len = content.len();
    if len < 0x80 {
        out.push(len as u8);
    } else {
        let bytes = len.to_be_bytes();
        let skip = bytes.iter().take_while(|&&b| b == 0).count();
        out.push(0x80 | (bytes.len() - skip) as u8);
        out.extend_from_slice(&bytes[skip..]);
    }
    out.extend_from_slice(content);
    out
}

pub fn sequence(parts: &[&[u8]]) -> Vec<u8> {
    tlv(SEQUENCE, &parts.concat())
}

/// SET OF: members are sorted by their encodings.
pub fn set_of(mut members: Vec<Vec<u8>>) -> Vec<u8> {
    members.sort();
    tlv(SET, &members.concat())
}

pub fn explicit(n: u8, inner: &[u8]) -> Vec<u8> {
    tlv(context(n), inner)
}

pub fn boolean(v: bool) -> Vec<u8> {
    tlv(BOOLEAN, &[if v { 0xff } else { 0x00 }])
}

pub fn null() -> Vec<u8> {
    tlv(NULL, &[])
}

pub fn uint(v: u64) -> Vec<u8> {
    integer_bytes(&v.to_be_bytes())
}

/// Encodes a non-negative big-endian magnitude as a minimal INTEGER.
pub fn integer_bytes(magnitude: &[u8]) -> Vec<u8> {
    let skip = magnitude.iter().take_while(|&&b| b == 0).count();
    let trimmed = &magnitude[skip..];
    let mut content = Vec::with_capacity(trimmed.len() + 1);
    if trimmed.first().is_none_or(|&b| b & 0x80 != 0) {
        content.push(0);
    }
    content.extend_from_slice(trimmed);
    tlv(INTEGER, &content)
}

pub fn octet_string(v: &[u8]) -> Vec<u8> {
    tlv(OCTET_STRING, v)
}

pub fn bit_string(unused: u8, bytes: &[u8]) -> Vec<u8> {
    let mut content = Vec::with_capacity(bytes.len() + 1);
    content.push(unused);
    content.extend_from_slice(bytes);
    tlv(BIT_STRING, &content)
}

pub fn ia5(s: &str) -> Vec<u8> {
    tlv(IA5_STRING, s.as_bytes())
}

pub fn utf8(s: &str) -> Vec<u8> {
    tlv(UTF8_STRING, s.as_bytes())
}

pub fn oid(arcs: &Oid) -> Vec<u8> {
    tlv(OID, &arcs.to_content())
}

/// UTCTime for 1950..2049, GeneralizedTime otherwise.
pub fn time(t: OffsetDateTime) -> Vec<u8> {
    let t = t.to_offset(time::UtcOffset::UTC);
    let year = t.year();
    if (1950..2050).contains(&year) {
        let s = format!(
            "{:02}{:02}{:02}{:02}{:02}{:02}Z",
            year % 100,
            t.month() as u8,
            t.day(),
            t.hour(),
            t.minute(),
            t.second()
        );
        tlv(UTC_TIME, s.as_bytes())
    } else {
        let s = format!(
            "{:04}{:02}{:02}{:02}{:02}{:02}Z",
            year,
            t.month() as u8,
            t.day(),
            t.hour(),
            t.minute(),
            t.second()
        );
        tlv(GENERALIZED_TIME, s.as_bytes())
    }
}

/// An object identifier as a list of arcs.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Oid(Vec<u64>);

impl Oid {
    pub fn new(arcs: &[u64]) -> Oid {
        Oid(arcs.to_vec())
    }

    pub fn parse(dotted: &str) -> Option<Oid> {
        let arcs: Option<Vec<u64>> = dotted.split('.').map(|a| a.parse().ok()).collect();
        let arcs = arcs?;
        if arcs.len() < 2 || arcs[0] > 2 || (arcs[0] < 2 && arcs[1] >= 40) {
            return None;
        }
        Some(Oid(arcs))
    }

    pub fn to_content(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut push = |mut v: u64| {
            let mut tmp = vec![(v & 0x7f) as u8];
            v >>= 7;
            while v > 0 {
                tmp.push(0x80 | (v & 0x7f) as u8);
                v >>= 7;
            }
            tmp.reverse();
            out.extend_from_slice(&tmp);
        };
        push(self.0[0] * 40 + self.0[1]);
        for &a in &self.0[2..] {
            push(a);
        }
        out
    }

    pub fn from_content(bytes: &[u8]) -> Result<Oid> {
        if bytes.is_empty() {
            return err("empty OID");
        }
        let mut arcs = Vec::new();
        let mut acc: u64 = 0;
        let mut fresh = true;
        for (i, &b) in bytes.iter().enumerate() {
            if fresh && b == 0x80 {
                return err("non-minimal OID arc");
            }
            if acc > (u64::MAX >> 7) {
                return err("OID arc overflow");
            }
            acc = (acc << 7) | u64::from(b & 0x7f);
            fresh = b & 0x80 == 0;
            if fresh {
                if arcs.is_empty() {
                    let first = (acc / 40).min(2);
                    arcs.push(first);
                    arcs.push(acc - first * 40);
                } else {
                    arcs.push(acc);
                }
                acc = 0;
            } else if i == bytes.len() - 1 {
                return err("truncated OID");
            }
        }
        Ok(Oid(arcs))
    }
}

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

impl fmt::Debug for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Oid({self})")
    }
}

/// A cursor over concatenated DER values.
#[derive(Clone)]
pub struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn peek_tag(&self) -> Option<u8> {
        self.data.first().copied()
    }

    /// Reads one value, returning its tag, content, and full encoding.
    pub fn read_any(&mut self) -> Result<(u8, &'a [u8], &'a [u8])> {
        let d = self.data;
        let tag = *d.first().ok_or_else(|| DerError("unexpected end of input".into()))?;
        if tag & 0x1f == 0x1f {
            return err("multi-octet tags are not supported");
        }
        let first = *d.get(1).ok_or_else(|| DerError("missing length".into()))?;
        let (len, header) = if first < 0x80 {
            (first as usize, 2)
        } else {
            let n = (first & 0x7f) as usize;
            if n == 0 {
                return err("indefinite length");
            }
            if n > 4 {
                return err("length too large");
            }
            let bytes = d.get(2..2 + n).ok_or_else(|| DerError("truncated length".into()))?;
            if bytes[0] == 0 {
                return err("non-minimal length");
            }
            let len = bytes.iter().fold(0usize, |acc, &b| (acc << 8) | b as usize);
            if len < 0x80 {
                return err("non-minimal length");
            }
            (len, 2 + n)
        };
        let end = header
            .checked_add(len)
            .filter(|&e| e <= d.len())
            .ok_or_else(|| DerError("truncated value".into()))?;
        self.data = &d[end..];
        Ok((tag, &d[header..end], &d[..end]))
    }

    pub fn read(&mut self, tag: u8) -> Result<&'a [u8]> {
        let (t, content, _) = self.read_any()?;
        if t != tag {
            return err(format!("expected tag {tag:#04x}, found {t:#04x}"));
        }
        Ok(content)
    }

    /// Reads a value with the given tag, returning its full encoding.
    pub fn read_raw(&mut self, tag: u8) -> Result<&'a [u8]> {
        let (t, _, raw) = self.read_any()?;
        if t != tag {
            return err(format!("expected tag {tag:#04x}, found {t:#04x}"));
        }
        Ok(raw)
    }

    pub fn read_optional(&mut self, tag: u8) -> Result<Option<&'a [u8]>> {
        if self.peek_tag() == Some(tag) {
            self.read(tag).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn nested(&mut self, tag: u8) -> Result<Reader<'a>> {
        self.read(tag).map(Reader::new)
    }

    pub fn finish(&self) -> Result<()> {
        if self.data.is_empty() {
            Ok(())
        } else {
            err("trailing data")
        }
    }

    pub fn read_bool(&mut self) -> Result<bool> {
        match self.read(BOOLEAN)? {
            [0x00] => Ok(false),
            [0xff] => Ok(true),
            _ => err("invalid BOOLEAN"),
        }
    }

    /// Reads an INTEGER and returns its content octets after checking minimal
    /// encoding.
    pub fn read_integer_bytes(&mut self) -> Result<&'a [u8]> {
        let c = self.read(INTEGER)?;
        check_integer(c)?;
        Ok(c)
    }

    pub fn read_uint(&mut self) -> Result<u64> {
        let c = self.read_integer_bytes()?;
        integer_to_u64(c)
    }

    pub fn read_oid(&mut self) -> Result<Oid> {
        Oid::from_content(self.read(OID)?)
    }

    /// Reads a BIT STRING, returning (unused bits, bytes).
    pub fn read_bit_string(&mut self) -> Result<(u8, &'a [u8])> {
        let c = self.read(BIT_STRING)?;
        let (&unused, bytes) = c.split_first().ok_or_else(|| DerError("empty BIT STRING".into()))?;
        if unused > 7 || (bytes.is_empty() && unused != 0) {
            return err("invalid BIT STRING padding");
        }
        if let Some(&last) = bytes.last() {
            if last & ((1u8 << unused) - 1) != 0 {
                return err("non-zero BIT STRING padding");
            }
        }
        Ok((unused, bytes))
    }

    pub fn read_time(&mut self) -> Result<OffsetDateTime> {
        let (tag, c, _) = self.read_any()?;
        parse_time(tag, c)
    }
}

pub fn check_integer(c: &[u8]) -> Result<()> {
    match c {
        [] => err("empty INTEGER"),
        [0x00, b, ..] if b & 0x80 == 0 => err("non-minimal INTEGER"),
        [0xff, b, ..] if b & 0x80 != 0 => err("non-minimal INTEGER"),
        _ => Ok(()),
    }
}

pub fn integer_to_u64(c: &[u8]) -> Result<u64> {
    if c[0] & 0x80 != 0 {
        return err("negative INTEGER");
    }
    let c = if c[0] == 0 { &c[1..] } else { c };
    if c.len() > 8 {
        return err("INTEGER too large");
    }
    Ok(c.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b)))
}

fn parse_time(tag: u8, c: &[u8]) -> Result<OffsetDateTime> {
    let s = std::str::from_utf8(c).map_err(|_| DerError("non-ASCII time".into()))?;
    let digits = |r: std::ops::Range<usize>| -> Result<u32> {
        let part = s.get(r).ok_or_else(|| DerError("short time".into()))?;
        if !part.bytes().all(|b| b.is_ascii_digit()) {
            return err("invalid time digits");
        }
        Ok(part.parse().unwrap_or(0))
    };
    let (year, rest) = match tag {
        UTC_TIME => {
            if s.len() != 13 || !s.ends_with('Z') {
                return err("UTCTime must be YYMMDDHHMMSSZ");
            }
            let yy = digits(0..2)? as i32;
            (if yy >= 50 { 1900 + yy } else { 2000 + yy }, 2)
        }
        GENERALIZED_TIME => {
            if s.len() != 15 || !s.ends_with('Z') {
                return err("GeneralizedTime must be YYYYMMDDHHMMSSZ");
            }
            (digits(0..4)? as i32, 4)
        }
        _ => return err("expected a time value"),
    };
    let month = Month::try_from(digits(rest..rest + 2)? as u8).map_err(|_| DerError("bad month".into()))?;
    let date = Date::from_calendar_date(year, month, digits(rest + 2..rest + 4)? as u8)
        .map_err(|_| DerError("bad date".into()))?;
    let time = Time::from_hms(
        digits(rest + 4..rest + 6)? as u8,
        digits(rest + 6..rest + 8)? as u8,
        digits(rest + 8..rest + 10)? as u8,
    )
    .map_err(|_| DerError("bad time of day".into()))?;
    Ok(PrimitiveDateTime::new(date, time).assume_utc())
}

#[cfg(test)]
mod tests {
    use super::*;
    use time::macros::datetime;

    #[test]
    fn lengths() {
        assert_eq!(tlv(0x04, &[0; 3])[..2], [0x04, 3]);
        assert_eq!(tlv(0x04, &[0; 200])[..3], [0x04, 0x81, 200]);
        assert_eq!(tlv(0x04, &[0; 300])[..4], [0x04, 0x82, 0x01, 0x2c]);
        let enc = tlv(0x04, &[7; 300]);
        let mut r = Reader::new(&enc);
        assert_eq!(r.read(0x04).unwrap().len(), 300);
        assert!(r.finish().is_ok());
    }

    #[test]
    fn rejects_non_minimal() {
        assert!(Reader::new(&[0x04, 0x81, 0x05, 1, 2, 3, 4, 5]).read_any().is_err());
        assert!(Reader::new(&[0x04, 0x80]).read_any().is_err());
        assert!(Reader::new(&[0x02, 0x02, 0x00, 0x01]).read_integer_bytes().is_err());
        assert!(Reader::new(&[0x02, 0x00]).read_integer_bytes().is_err());
        assert!(Reader::new(&[0x04, 0x05, 1]).read_any().is_err());
    }

    #[test]
    fn integers() {
        assert_eq!(uint(0), vec![0x02, 0x01, 0x00]);
        assert_eq!(uint(127), vec![0x02, 0x01, 0x7f]);
        assert_eq!(uint(128), vec![0x02, 0x02, 0x00, 0x80]);
        assert_eq!(integer_bytes(&[0x00, 0x00, 0x0a]), vec![0x02, 0x01, 0x0a]);
        assert_eq!(Reader::new(&uint(300)).read_uint().unwrap(), 300);
    }

    #[test]
    fn oids() {
        let o = Oid::parse("1.2.840.10045.4.3.2").unwrap();
        assert_eq!(o.to_content(), vec![0x2a, 0x86, 0x48, 0xce, 0x3d, 0x04, 0x03, 0x02]);
        assert_eq!(Oid::from_content(&o.to_content()).unwrap(), o);
        let p = Oid::parse("1.3.6.1.4.1.57264.100.1").unwrap();
        assert_eq!(Oid::from_content(&p.to_content()).unwrap().to_string(), "1.3.6.1.4.1.57264.100.1");
        assert!(Oid::from_content(&[0x2a, 0x86]).is_err());
        assert!(Oid::parse("3.1").is_none());
    }

    #[test]
    fn times() {
        let t = datetime!(2024-02-29 13:14:15 UTC);
        let enc = time(t);
        assert_eq!(enc[0], UTC_TIME);
        assert_eq!(&enc[2..], b"240229131415Z");
        assert_eq!(Reader::new(&enc).read_time().unwrap(), t);
        let far = datetime!(2051-01-01 00:00:00 UTC);
        let enc = time(far);
        assert_eq!(enc[0], GENERALIZED_TIME);
        assert_eq!(Reader::new(&enc).read_time().unwrap(), far);
    }
}
