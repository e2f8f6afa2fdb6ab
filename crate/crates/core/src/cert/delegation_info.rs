// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

use crate::der::{self, Oid, Reader};
use crate::name_scope::{DomainName, DomainPattern};

const DEFAULT_OID: &str = "1.3.6.1.4.1.57264.100.1";
const DEFAULT_DNS_SUFFIX_OID: &str = "1.3.6.1.4.1.57264.100.2";

/// OID of the DelegationInfo extension. A private-enterprise placeholder,
/// overridable at build time through `DECERT_EXTENSION_OID`.
pub fn delegation_info_oid() -> &'static Oid {
    static OID: OnceLock<Oid> = OnceLock::new();
    OID.get_or_init(|| {
        let text = option_env!("DECERT_EXTENSION_OID").unwrap_or(DEFAULT_OID);
        Oid::parse(text).expect("DECERT_EXTENSION_OID is not a dotted OID")
    })
}

/// Non-critical companion extension carrying the DNS suffix under which the
/// issuer publishes revocations.
pub fn revocation_dns_suffix_oid() -> &'static Oid {
    static OID: OnceLock<Oid> = OnceLock::new();
    OID.get_or_init(|| {
        let text = option_env!("DECERT_DNS_SUFFIX_OID").unwrap_or(DEFAULT_DNS_SUFFIX_OID);
        Oid::parse(text).expect("DECERT_DNS_SUFFIX_OID is not a dotted OID")
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed DelegationInfo: {0}")]
pub struct MalformedExtension(pub String);

/// The payload of the critical DelegationInfo extension.
///
/// ```text
/// DelegationInfo ::= SEQUENCE {
///     excludeDomains    [0] EXPLICIT SEQUENCE OF IA5String,
///     includeDomains    [1] EXPLICIT SEQUENCE OF IA5String OPTIONAL,
///     delegationPathLen [2] EXPLICIT INTEGER (0..255) OPTIONAL }
/// ```
///
/// Strings are sorted bytewise. An absent path length means 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DelegationInfo {
    pub exclude: BTreeSet<DomainName>,
    /// Mirror of the certificate's SAN dNSName set.
    pub include: Option<BTreeSet<DomainPattern>>,
    pub path_len: Option<u8>,
}

impl DelegationInfo {
    pub fn effective_path_len(&self) -> u8 {
        self.path_len.unwrap_or(0)
    }

    pub fn encode(&self) -> Vec<u8> {
        let strings = |mut items: Vec<String>| {
            items.sort();
            let parts: Vec<Vec<u8>> = items.iter().map(|s| der::ia5(s)).collect();
            der::tlv(der::SEQUENCE, &parts.concat())
        };
        let mut body = der::explicit(0, &strings(self.exclude.iter().map(|d| d.to_string()).collect()));
        if let Some(include) = &self.include {
            body.extend(der::explicit(1, &strings(include.iter().map(|p| p.to_string()).collect())));
        }
        if let Some(n) = self.path_len {
            body.extend(der::explicit(2, &der::uint(u64::from(n))));
        }
        der::tlv(der::SEQUENCE, &body)
    }

    /// Decodes a canonical encoding. Anything `encode` would not produce,
    /// including unsorted or duplicate entries, is rejected.
    pub fn decode(bytes: &[u8]) -> Result<Self, MalformedExtension> {
        let info = Self::decode_loose(bytes).map_err(|e| MalformedExtension(e.to_string()))?;
        if info.encode() != bytes {
            return Err(MalformedExtension("non-canonical encoding".into()));
        }
        Ok(info)
    }

    fn decode_loose(bytes: &[u8]) -> Result<Self, Box<dyn std::error::Error>> {
        let mut outer = Reader::new(bytes);
        let mut seq = outer.nested(der::SEQUENCE)?;
        outer.finish()?;

        let mut excl = seq.nested(der::context(0))?;
        let mut list = excl.nested(der::SEQUENCE)?;
        excl.finish()?;
        let mut exclude = BTreeSet::new();
        while !list.is_empty() {
            let name = DomainName::parse(ia5_str(list.read(der::IA5_STRING)?)?)?;
            if !exclude.insert(name.clone()) {
                return Err(format!("duplicate exclude entry {name}").into());
            }
        }

        let mut include = None;
        if let Some(content) = seq.read_optional(der::context(1))? {
            let mut wrap = Reader::new(content);
            let mut list = wrap.nested(der::SEQUENCE)?;
            wrap.finish()?;
            let mut set = BTreeSet::new();
            while !list.is_empty() {
                let p = DomainPattern::parse(ia5_str(list.read(der::IA5_STRING)?)?)?;
                if !set.insert(p.clone()) {
                    return Err(format!("duplicate include entry {p}").into());
                }
            }
            include = Some(set);
        }

        let mut path_len = None;
        if let Some(content) = seq.read_optional(der::context(2))? {
            let mut wrap = Reader::new(content);
            let n = wrap.read_integer_bytes()?;
            wrap.finish()?;
            let n = der::integer_to_u64(n)?;
            path_len = Some(u8::try_from(n).map_err(|_| format!("path length {n} out of range"))?);
        }
        seq.finish()?;
        Ok(DelegationInfo {
            exclude,
            include,
            path_len,
        })
    }
}

fn ia5_str(bytes: &[u8]) -> Result<&str, Box<dyn std::error::Error>> {
    if !bytes.is_ascii() {
        return Err("non-IA5 payload".into());
    }
    Ok(std::str::from_utf8(bytes)?)
}

/// X.509 KeyUsage bits 0 (digitalSignature) through 8 (decipherOnly).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct KeyUsageSet(u16);

impl KeyUsageSet {
    pub const DIGITAL_SIGNATURE: u8 = 0;
    pub const KEY_CERT_SIGN: u8 = 5;
    pub const CRL_SIGN: u8 = 6;

    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Option<Self> {
        let mut mask = 0u16;
        for b in bits {
            if b > 8 {
                return None;
            }
            mask |= 1 << b;
        }
        Some(KeyUsageSet(mask))
    }

    pub fn all() -> Self {
        KeyUsageSet(0x1ff)
    }

    pub fn contains(&self, bit: u8) -> bool {
        bit <= 8 && self.0 & (1 << bit) != 0
    }

    pub fn is_subset_of(&self, other: &KeyUsageSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=8).filter(|&b| self.contains(b))
    }

    /// Bits present here but not in `other`.
    pub fn difference(&self, other: &KeyUsageSet) -> KeyUsageSet {
        KeyUsageSet(self.0 & !other.0)
    }

    pub(crate) fn to_bit_string(self) -> Vec<u8> {
        let Some(top) = (0..=8u8).rev().find(|&b| self.contains(b)) else {
            return der::bit_string(0, &[]);
        };
        let nbytes = top as usize / 8 + 1;
        let mut bytes = vec![0u8; nbytes];
        for b in self.bits() {
            bytes[b as usize / 8] |= 0x80 >> (b % 8);
        }
        der::bit_string((nbytes * 8 - top as usize - 1) as u8, &bytes)
    }

    pub(crate) fn from_bit_string(bytes: &[u8]) -> KeyUsageSet {
        let mut mask = 0u16;
        for (i, byte) in bytes.iter().enumerate().take(2) {
            for bit in 0..8 {
                let idx = i * 8 + bit;
                if idx <= 8 && byte & (0x80 >> bit) != 0 {
                    mask |= 1 << idx;
                }
            }
        }
        KeyUsageSet(mask)
    }

    /// Parses "0,5,6".
    pub fn parse_list(text: &str) -> Option<Self> {
        if text.trim().is_empty() {
            return Some(KeyUsageSet::default());
        }
        let bits: Option<Vec<u8>> = text.split(',').map(|s| s.trim().parse().ok()).collect();
        KeyUsageSet::from_bits(bits?)
    }
}

impl std::fmt::Display for KeyUsageSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let bits: Vec<String> = self.bits().map(|b| b.to_string()).collect();
        write!(f, "{{{}}}", bits.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(ex: &[&str], inc: Option<&[&str]>, pl: Option<u8>) -> DelegationInfo {
        DelegationInfo {
            exclude: ex.iter().map(|s| DomainName::parse(s).unwrap()).collect(),
            include: inc.map(|v| v.iter().map(|s| DomainPattern::parse(s).unwrap()).collect()),
            path_len: pl,
        }
    }

    #[test]
    fn round_trip_fig2b() {
        let i = info(&["a.vids.abc.com"], None, Some(5));
        assert_eq!(DelegationInfo::decode(&i.encode()).unwrap(), i);
    }

    #[test]
    fn ordering_insensitive() {
        let a = info(&["b.abc.com", "a.abc.com"], Some(&["x.abc.com", "*.abc.com"]), Some(1));
        let b = info(&["a.abc.com", "b.abc.com"], Some(&["*.abc.com", "x.abc.com"]), Some(1));
        assert_eq!(a.encode(), b.encode());
    }

    #[test]
    fn rejects_truncation_and_duplicates() {
        let enc = info(&["a.abc.com"], None, Some(2)).encode();
        for cut in 0..enc.len() {
            assert!(DelegationInfo::decode(&enc[..cut]).is_err(), "cut {cut}");
        }
        let mut trailing = enc.clone();
        trailing.push(0);
        assert!(DelegationInfo::decode(&trailing).is_err());

        // duplicate one exclude entry at the byte level
        let entry = der::ia5("a.abc.com");
        let list = der::tlv(der::SEQUENCE, &[entry.clone(), entry].concat());
        let dup = der::tlv(der::SEQUENCE, &der::explicit(0, &list));
        assert!(DelegationInfo::decode(&dup).unwrap_err().0.contains("duplicate"));
    }

    #[test]
    fn rejects_unsorted_and_uppercase() {
        let list = der::tlv(der::SEQUENCE, &[der::ia5("b.com"), der::ia5("a.com")].concat());
        let enc = der::tlv(der::SEQUENCE, &der::explicit(0, &list));
        assert!(DelegationInfo::decode(&enc).is_err());
        let list = der::tlv(der::SEQUENCE, &der::ia5("A.com"));
        let enc = der::tlv(der::SEQUENCE, &der::explicit(0, &list));
        assert!(DelegationInfo::decode(&enc).is_err());
    }

    #[test]
    fn key_usage_bits() {
        let ku = KeyUsageSet::from_bits([1, 3, 5, 6]).unwrap();
        let parent = KeyUsageSet::from_bits([0, 1, 5, 6]).unwrap();
        assert!(!ku.is_subset_of(&parent));
        assert_eq!(ku.difference(&parent).bits().collect::<Vec<_>>(), vec![3]);
        assert!(KeyUsageSet::from_bits([9]).is_none());
        // digitalSignature alone: one byte, seven unused bits
        assert_eq!(KeyUsageSet::from_bits([0]).unwrap().to_bit_string(), vec![0x03, 0x02, 0x07, 0x80]);
        // decipherOnly forces a second byte
        let d = KeyUsageSet::from_bits([0, 8]).unwrap();
        assert_eq!(d.to_bit_string(), vec![0x03, 0x03, 0x07, 0x80, 0x80]);
        assert_eq!(KeyUsageSet::from_bit_string(&[0x80, 0x80]), d);
        assert_eq!(KeyUsageSet::parse_list("1, 3,5,6"), Some(ku));
    }
}
