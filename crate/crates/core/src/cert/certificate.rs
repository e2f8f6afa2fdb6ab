// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt;

use rand::RngCore;
use thiserror::Error;
use time::OffsetDateTime;

use super::delegation_info::{
    delegation_info_oid, revocation_dns_suffix_oid, DelegationInfo, KeyUsageSet,
};
use crate::der::{self, Oid, Reader};
use crate::keys::{PublicKeyInfo, SignatureAlgorithm, SigningKey};
use crate::name_scope::{DomainName, DomainPattern, DomainScope};

const OID_CN: &[u64] = &[2, 5, 4, 3];
const OID_BASIC_CONSTRAINTS: &[u64] = &[2, 5, 29, 19];
pub(crate) const OID_KEY_USAGE: &[u64] = &[2, 5, 29, 15];
pub(crate) const OID_SAN: &[u64] = &[2, 5, 29, 17];
const OID_CRL_DP: &[u64] = &[2, 5, 29, 31];
const OID_SKI: &[u64] = &[2, 5, 29, 14];
const OID_AKI: &[u64] = &[2, 5, 29, 35];
const OID_EKU: &[u64] = &[2, 5, 29, 37];
const OID_CERT_POLICIES: &[u64] = &[2, 5, 29, 32];

#[derive(Debug, Error)]
pub enum CertError {
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("policy violation: {0}")]
    PolicyViolation(String),
    #[error("signing failure: {0}")]
    SigningFailure(String),
}

impl From<der::DerError> for CertError {
    fn from(e: der::DerError) -> Self {
        CertError::MalformedCertificate(e.0)
    }
}

/// A certificate serial number: the content octets of a positive DER INTEGER.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Serial(Vec<u8>);

impl Serial {
    /// Sixteen random octets, positive and minimally encoded.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Serial {
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        bytes[0] = (bytes[0] & 0x7f) | 0x40;
        Serial(bytes.to_vec())
    }

    /// From a big-endian magnitude; leading zero octets are trimmed and a
    /// sign octet added when needed.
    pub fn from_magnitude(bytes: &[u8]) -> Serial {
        let enc = der::integer_bytes(bytes);
        Serial(enc[2..].to_vec())
    }

    /// From DER INTEGER content octets, which must be minimal and positive.
    pub fn from_content(bytes: &[u8]) -> Result<Serial, der::DerError> {
        der::check_integer(bytes)?;
        if bytes[0] & 0x80 != 0 {
            return Err(der::DerError("negative serial".into()));
        }
        if bytes.len() > 21 {
            return Err(der::DerError("serial longer than 20 octets".into()));
        }
        Ok(Serial(bytes.to_vec()))
    }

    pub fn from_hex(text: &str) -> Result<Serial, der::DerError> {
        let bytes = hex::decode(text.trim()).map_err(|e| der::DerError(e.to_string()))?;
        if bytes.is_empty() {
            return Err(der::DerError("empty serial".into()));
        }
        Serial::from_content(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Lowercase hex of every content octet, without trimming.
    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub(crate) fn to_der(&self) -> Vec<u8> {
        der::tlv(der::INTEGER, &self.0)
    }
}

impl Ord for Serial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Serial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Serial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Serial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Serial({})", self.to_hex())
    }
}

/// An extension passed through verbatim, mostly for building test material.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExtension {
    pub oid: Oid,
    pub critical: bool,
    pub value: Vec<u8>,
}

/// Everything needed to assemble a certificate except the issuer.
#[derive(Debug, Clone)]
pub struct CertificateTemplate {
    pub subject_cn: String,
    pub san: Vec<DomainPattern>,
    pub delegation_info: Option<DelegationInfo>,
    pub delegation_info_critical: bool,
    pub key_usage: Option<KeyUsageSet>,
    pub is_ca: bool,
    pub basic_path_len: Option<u32>,
    pub serial: Serial,
    pub not_before: OffsetDateTime,
    pub not_after: OffsetDateTime,
    pub subject_key: PublicKeyInfo,
    pub crl_url: Option<String>,
    pub revocation_dns_suffix: Option<DomainName>,
    pub extra_extensions: Vec<RawExtension>,
}

impl CertificateTemplate {
    pub fn new(
        subject_cn: impl Into<String>,
        subject_key: PublicKeyInfo,
        serial: Serial,
        not_before: OffsetDateTime,
        not_after: OffsetDateTime,
    ) -> Self {
        CertificateTemplate {
            subject_cn: subject_cn.into(),
            san: Vec::new(),
            delegation_info: None,
            delegation_info_critical: true,
            key_usage: None,
            is_ca: false,
            basic_path_len: None,
            serial,
            not_before,
            not_after,
            subject_key,
            crl_url: None,
            revocation_dns_suffix: None,
            extra_extensions: Vec::new(),
        }
    }
}

/// Who signs a certificate.
#[derive(Clone, Copy)]
pub enum Signer<'a> {
    /// The template's own key; subject and issuer names coincide.
    SelfSigned(&'a SigningKey),
    Issuer(&'a ParsedCertificate, &'a SigningKey),
}

impl<'a> Signer<'a> {
    fn key(&self) -> &'a SigningKey {
        match self {
            Signer::SelfSigned(k) | Signer::Issuer(_, k) => k,
        }
    }
}

/// Assembles and signs a certificate, enforcing the DeCert invariants.
pub fn build_certificate(template: &CertificateTemplate, signer: Signer<'_>) -> Result<Vec<u8>, CertError> {
    if template.not_before >= template.not_after {
        return Err(CertError::PolicyViolation("empty validity window".into()));
    }
    if template.delegation_info.is_some() {
        if template.is_ca {
            return Err(CertError::PolicyViolation(
                "a certificate carrying DelegationInfo must have cA=FALSE".into(),
            ));
        }
        if !template.delegation_info_critical {
            return Err(CertError::PolicyViolation("DelegationInfo must be marked critical".into()));
        }
    }
    if let Signer::Issuer(cert, k) = &signer {
        if k.public_key_info() != *cert.public_key() {
            return Err(CertError::SigningFailure("signing key does not match issuer certificate".into()));
        }
    }
    build_certificate_unchecked(template, signer)
}

/// Like [`build_certificate`] without the policy checks. Used to produce
/// deliberately defective material.
pub fn build_certificate_unchecked(
    template: &CertificateTemplate,
    signer: Signer<'_>,
) -> Result<Vec<u8>, CertError> {
    let key = signer.key();
    let issuer_cn = match signer {
        Signer::SelfSigned(k) => {
            if k.public_key_info() != template.subject_key {
                return Err(CertError::SigningFailure("self-signed key does not match subject key".into()));
            }
            template.subject_cn.as_str()
        }
        Signer::Issuer(cert, _) => cert.subject_cn(),
    };
    let alg = key.signature_algorithm().to_der();

    let mut exts: Vec<Vec<u8>> = Vec::new();
    let mut bc = Vec::new();
    if template.is_ca {
        bc.extend(der::boolean(true));
        if let Some(n) = template.basic_path_len {
            bc.extend(der::uint(u64::from(n)));
        }
    }
    exts.push(extension(OID_BASIC_CONSTRAINTS, true, &der::tlv(der::SEQUENCE, &bc)));
    if let Some(ku) = template.key_usage {
        exts.push(extension(OID_KEY_USAGE, true, &ku.to_bit_string()));
    }
    if !template.san.is_empty() {
        exts.push(extension(OID_SAN, false, &san_value(template.san.iter())));
    }
    if let Some(url) = &template.crl_url {
        let uri = der::tlv(der::context_primitive(6), url.as_bytes());
        let dp = der::sequence(&[&der::explicit(0, &der::explicit(0, &uri))]);
        exts.push(extension(OID_CRL_DP, false, &der::sequence(&[&dp])));
    }
    if let Some(info) = &template.delegation_info {
        exts.push(extension_oid(delegation_info_oid(), template.delegation_info_critical, &info.encode()));
    }
    if let Some(suffix) = &template.revocation_dns_suffix {
        exts.push(extension_oid(revocation_dns_suffix_oid(), false, &der::ia5(suffix.as_str())));
    }
    for raw in &template.extra_extensions {
        exts.push(extension_oid(&raw.oid, raw.critical, &raw.value));
    }

    let tbs = der::sequence(&[
        &der::explicit(0, &der::uint(2)),
        &template.serial.to_der(),
        &alg,
        &name(issuer_cn),
        &der::sequence(&[&der::time(template.not_before), &der::time(template.not_after)]),
        &name(&template.subject_cn),
        template.subject_key.as_bytes(),
        &der::explicit(3, &der::tlv(der::SEQUENCE, &exts.concat())),
    ]);
    let sig = key.sign(&tbs);
    Ok(der::sequence(&[&tbs, &alg, &der::bit_string(0, &sig)]))
}

/// SubjectAltName value holding the patterns as sorted dNSNames.
pub(crate) fn san_value<'a>(patterns: impl Iterator<Item = &'a DomainPattern>) -> Vec<u8> {
    let mut names: Vec<String> = patterns.map(|p| p.to_string()).collect();
    names.sort();
    names.dedup();
    let gn: Vec<u8> = names
        .iter()
        .flat_map(|n| der::tlv(der::context_primitive(2), n.as_bytes()))
        .collect();
    der::tlv(der::SEQUENCE, &gn)
}

/// dNSName entries of a SubjectAltName value; other name forms are skipped.
pub(crate) fn parse_san_value(value: &[u8]) -> Result<BTreeSet<DomainPattern>, CertError> {
    let mut r = Reader::new(value);
    let mut names = r.nested(der::SEQUENCE)?;
    r.finish()?;
    let mut out = BTreeSet::new();
    while !names.is_empty() {
        let (tag, content, _) = names.read_any()?;
        if tag == der::context_primitive(2) {
            let text = std::str::from_utf8(content)
                .map_err(|_| CertError::MalformedCertificate("non-ASCII dNSName".into()))?;
            let p = DomainPattern::parse(text).map_err(|e| CertError::MalformedCertificate(e.to_string()))?;
            out.insert(p);
        }
    }
    Ok(out)
}

fn extension(arcs: &[u64], critical: bool, value: &[u8]) -> Vec<u8> {
    extension_oid(&Oid::new(arcs), critical, value)
}

pub(crate) fn extension_oid(oid: &Oid, critical: bool, value: &[u8]) -> Vec<u8> {
    let mut body = der::oid(oid);
    if critical {
        body.extend(der::boolean(true));
    }
    body.extend(der::octet_string(value));
    der::tlv(der::SEQUENCE, &body)
}

pub(crate) fn name(cn: &str) -> Vec<u8> {
    if cn.is_empty() {
        return der::sequence(&[]);
    }
    let atv = der::sequence(&[&der::oid(&Oid::new(OID_CN)), &der::utf8(cn)]);
    der::sequence(&[&der::set_of(vec![atv])])
}

pub(crate) fn parse_name_cn(content: &[u8]) -> Result<String, der::DerError> {
    let mut rdns = Reader::new(content);
    let mut cn = String::new();
    while !rdns.is_empty() {
        let mut set = rdns.nested(der::SET)?;
        while !set.is_empty() {
            let mut atv = set.nested(der::SEQUENCE)?;
            let oid = atv.read_oid()?;
            let (tag, value, _) = atv.read_any()?;
            atv.finish()?;
            if oid == Oid::new(OID_CN) {
                if !matches!(tag, der::UTF8_STRING | der::PRINTABLE_STRING | der::IA5_STRING) {
                    return Err(der::DerError("unsupported CN string type".into()));
                }
                cn = String::from_utf8(value.to_vec()).map_err(|_| der::DerError("CN is not UTF-8".into()))?;
            }
        }
    }
    Ok(cn)
}

/// A decoded certificate. Construction goes through [`ParsedCertificate::from_der`]
/// so the fields always describe `raw_der`.
#[derive(Clone)]
pub struct ParsedCertificate {
    subject_cn: String,
    issuer_cn: String,
    san: BTreeSet<DomainPattern>,
    delegation_info: Option<DelegationInfo>,
    key_usage: Option<KeyUsageSet>,
    is_ca: bool,
    basic_path_len: Option<u32>,
    serial: Serial,
    not_before: OffsetDateTime,
    not_after: OffsetDateTime,
    public_key: PublicKeyInfo,
    crl_url: Option<String>,
    revocation_dns_suffix: Option<DomainName>,
    unknown_critical: Vec<Oid>,
    signature_algorithm: SignatureAlgorithm,
    tbs: Vec<u8>,
    signature: Vec<u8>,
    raw: Vec<u8>,
}

impl PartialEq for ParsedCertificate {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw
    }
}

impl Eq for ParsedCertificate {}

impl fmt::Debug for ParsedCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParsedCertificate")
            .field("subject", &self.subject_cn)
            .field("issuer", &self.issuer_cn)
            .field("serial", &self.serial)
            .field("decert", &self.is_decert())
            .finish_non_exhaustive()
    }
}

impl ParsedCertificate {
    pub fn from_der(bytes: &[u8]) -> Result<Self, CertError> {
        let mut outer = Reader::new(bytes);
        let mut cert = outer.nested(der::SEQUENCE)?;
        outer.finish()?;
        let tbs_raw = cert.read_raw(der::SEQUENCE)?;
        let outer_alg = SignatureAlgorithm::from_der(cert.read(der::SEQUENCE)?)?;
        let (unused, signature) = cert.read_bit_string()?;
        if unused != 0 {
            return Err(CertError::MalformedCertificate("signature has unused bits".into()));
        }
        cert.finish()?;

        let mut tbs = Reader::new(tbs_raw).nested(der::SEQUENCE)?;
        let mut version = tbs.nested(der::context(0))?;
        if version.read_uint()? != 2 {
            return Err(CertError::MalformedCertificate("only v3 certificates are supported".into()));
        }
        version.finish()?;
        let serial = Serial::from_content(tbs.read_integer_bytes()?)?;
        let inner_alg = SignatureAlgorithm::from_der(tbs.read(der::SEQUENCE)?)?;
        if inner_alg != outer_alg {
            return Err(CertError::MalformedCertificate("signature algorithm mismatch".into()));
        }
        let issuer_cn = parse_name_cn(tbs.read(der::SEQUENCE)?)?;
        let mut validity = tbs.nested(der::SEQUENCE)?;
        let not_before = validity.read_time()?;
        let not_after = validity.read_time()?;
        validity.finish()?;
        let subject_cn = parse_name_cn(tbs.read(der::SEQUENCE)?)?;
        let public_key = PublicKeyInfo::from_der(tbs.read_raw(der::SEQUENCE)?)
            .map_err(|e| CertError::MalformedCertificate(e.to_string()))?;

        let mut parsed = ParsedCertificate {
            subject_cn,
            issuer_cn,
            san: BTreeSet::new(),
            delegation_info: None,
            key_usage: None,
            is_ca: false,
            basic_path_len: None,
            serial,
            not_before,
            not_after,
            public_key,
            crl_url: None,
            revocation_dns_suffix: None,
            unknown_critical: Vec::new(),
            signature_algorithm: outer_alg,
            tbs: tbs_raw.to_vec(),
            signature: signature.to_vec(),
            raw: bytes.to_vec(),
        };

        if let Some(content) = tbs.read_optional(der::context(3))? {
            let mut wrap = Reader::new(content);
            let mut list = wrap.nested(der::SEQUENCE)?;
            wrap.finish()?;
            let mut seen = BTreeSet::new();
            while !list.is_empty() {
                let mut ext = list.nested(der::SEQUENCE)?;
                let oid = ext.read_oid()?;
                let critical = if ext.peek_tag() == Some(der::BOOLEAN) {
                    let c = ext.read_bool()?;
                    if !c {
                        return Err(CertError::MalformedCertificate("explicit DEFAULT FALSE".into()));
                    }
                    true
                } else {
                    false
                };
                let value = ext.read(der::OCTET_STRING)?;
                ext.finish()?;
                if !seen.insert(oid.clone()) {
                    return Err(CertError::MalformedCertificate(format!("duplicate extension {oid}")));
                }
                parsed.apply_extension(&oid, critical, value)?;
            }
        }
        tbs.finish()?;

        if parsed.not_before >= parsed.not_after {
            return Err(CertError::MalformedCertificate("notBefore is not before notAfter".into()));
        }
        Ok(parsed)
    }

    fn apply_extension(&mut self, oid: &Oid, critical: bool, value: &[u8]) -> Result<(), CertError> {
        let is = |arcs: &[u64]| *oid == Oid::new(arcs);
        if is(OID_BASIC_CONSTRAINTS) {
            let mut r = Reader::new(value);
            let mut bc = r.nested(der::SEQUENCE)?;
            r.finish()?;
            if bc.peek_tag() == Some(der::BOOLEAN) {
                self.is_ca = bc.read_bool()?;
                if !self.is_ca {
                    return Err(CertError::MalformedCertificate("explicit cA FALSE".into()));
                }
            }
            if bc.peek_tag() == Some(der::INTEGER) {
                let n = bc.read_uint()?;
                self.basic_path_len =
                    Some(u32::try_from(n).map_err(|_| CertError::MalformedCertificate("pathLen too large".into()))?);
            }
            bc.finish()?;
        } else if is(OID_KEY_USAGE) {
            let mut r = Reader::new(value);
            let (_, bits) = r.read_bit_string()?;
            r.finish()?;
            self.key_usage = Some(KeyUsageSet::from_bit_string(bits));
        } else if is(OID_SAN) {
            self.san = parse_san_value(value)?;
        } else if is(OID_CRL_DP) {
            self.crl_url = parse_crl_url(value)?;
        } else if *oid == *delegation_info_oid() {
            if !critical {
                return Err(CertError::MalformedCertificate(
                    "DelegationInfo extension must be marked critical".into(),
                ));
            }
            let info = DelegationInfo::decode(value).map_err(|e| CertError::MalformedCertificate(e.to_string()))?;
            self.delegation_info = Some(info);
        } else if *oid == *revocation_dns_suffix_oid() {
            let mut r = Reader::new(value);
            let text = r.read(der::IA5_STRING)?;
            r.finish()?;
            let text = std::str::from_utf8(text).map_err(|_| CertError::MalformedCertificate("bad suffix".into()))?;
            self.revocation_dns_suffix =
                Some(DomainName::parse(text).map_err(|e| CertError::MalformedCertificate(e.to_string()))?);
        } else if is(OID_SKI) || is(OID_AKI) || is(OID_EKU) || is(OID_CERT_POLICIES) {
            // understood, not needed here
        } else if critical {
            self.unknown_critical.push(oid.clone());
        }
        Ok(())
    }

    /// Accepts DER or a PEM document; PEM must contain exactly one certificate.
    pub fn parse(input: &[u8]) -> Result<Self, CertError> {
        if input.trim_ascii_start().starts_with(b"-----BEGIN") {
            let text = std::str::from_utf8(input)
                .map_err(|_| CertError::MalformedCertificate("PEM is not UTF-8".into()))?;
            let mut certs = parse_pem_chain(text)?;
            if certs.len() != 1 {
                return Err(CertError::MalformedCertificate(format!(
                    "expected one certificate, found {}",
                    certs.len()
                )));
            }
            return Ok(certs.remove(0));
        }
        Self::from_der(input)
    }

    pub fn subject_cn(&self) -> &str {
        &self.subject_cn
    }

    pub fn issuer_cn(&self) -> &str {
        &self.issuer_cn
    }

    pub fn san(&self) -> &BTreeSet<DomainPattern> {
        &self.san
    }

    pub fn delegation_info(&self) -> Option<&DelegationInfo> {
        self.delegation_info.as_ref()
    }

    pub fn key_usage(&self) -> Option<KeyUsageSet> {
        self.key_usage
    }

    pub fn is_ca(&self) -> bool {
        self.is_ca
    }

    pub fn basic_path_len(&self) -> Option<u32> {
        self.basic_path_len
    }

    pub fn serial(&self) -> &Serial {
        &self.serial
    }

    pub fn not_before(&self) -> OffsetDateTime {
        self.not_before
    }

    pub fn not_after(&self) -> OffsetDateTime {
        self.not_after
    }

    pub fn public_key(&self) -> &PublicKeyInfo {
        &self.public_key
    }

    pub fn crl_url(&self) -> Option<&str> {
        self.crl_url.as_deref()
    }

    pub fn revocation_dns_suffix(&self) -> Option<&DomainName> {
        self.revocation_dns_suffix.as_ref()
    }

    /// Critical extensions this parser does not understand.
    pub fn unknown_critical_extensions(&self) -> &[Oid] {
        &self.unknown_critical
    }

    pub fn signature_algorithm(&self) -> SignatureAlgorithm {
        self.signature_algorithm
    }

    pub fn raw_der(&self) -> &[u8] {
        &self.raw
    }

    pub fn to_pem(&self) -> String {
        pem_encode("CERTIFICATE", &self.raw)
    }

    pub fn is_decert(&self) -> bool {
        self.delegation_info.is_some()
    }

    pub fn is_self_issued(&self) -> bool {
        self.subject_cn == self.issuer_cn
    }

    /// SAN includes with DelegationInfo excludes.
    pub fn scope(&self) -> DomainScope {
        DomainScope {
            include: self.san.clone(),
            exclude: self
                .delegation_info
                .as_ref()
                .map(|i| i.exclude.clone())
                .unwrap_or_default(),
        }
    }

    /// Remaining delegation depth; 0 when absent.
    pub fn delegation_path_len(&self) -> u8 {
        self.delegation_info.as_ref().map_or(0, DelegationInfo::effective_path_len)
    }

    pub fn is_valid_at(&self, at: OffsetDateTime) -> bool {
        self.not_before <= at && at <= self.not_after
    }

    pub fn verify_signed_by(&self, issuer_key: &PublicKeyInfo) -> bool {
        issuer_key.verify(self.signature_algorithm, &self.tbs, &self.signature)
    }
}

fn parse_crl_url(value: &[u8]) -> Result<Option<String>, CertError> {
    let mut r = Reader::new(value);
    let mut points = r.nested(der::SEQUENCE)?;
    r.finish()?;
    while !points.is_empty() {
        let mut dp = points.nested(der::SEQUENCE)?;
        if let Some(name) = dp.read_optional(der::context(0))? {
            let mut name = Reader::new(name);
            if let Some(full) = name.read_optional(der::context(0))? {
                let mut gns = Reader::new(full);
                while !gns.is_empty() {
                    let (tag, content, _) = gns.read_any()?;
                    if tag == der::context_primitive(6) {
                        return Ok(Some(String::from_utf8_lossy(content).into_owned()));
                    }
                }
            }
        }
    }
    Ok(None)
}

pub fn parse_certificate(input: &[u8]) -> Result<ParsedCertificate, CertError> {
    ParsedCertificate::parse(input)
}

pub fn is_decert(cert: &ParsedCertificate) -> bool {
    cert.is_decert()
}

/// Parses every CERTIFICATE block in a PEM bundle, in order.
pub fn parse_pem_chain(text: &str) -> Result<Vec<ParsedCertificate>, CertError> {
    let blocks = pem::parse_many(text).map_err(|e| CertError::MalformedCertificate(e.to_string()))?;
    blocks
        .iter()
        .filter(|b| b.tag() == "CERTIFICATE")
        .map(|b| ParsedCertificate::from_der(b.contents()))
        .collect()
}

pub fn pem_encode(label: &str, der: &[u8]) -> String {
    let block = pem::Pem::new(label, der.to_vec());
    pem::encode_config(&block, pem::EncodeConfig::new().set_line_ending(pem::LineEnding::LF))
}

pub fn chain_to_pem(chain: &[ParsedCertificate]) -> String {
    chain.iter().map(ParsedCertificate::to_pem).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::KeyAlgorithm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use time::macros::datetime;

    fn key(seed: u64) -> SigningKey {
        SigningKey::generate(KeyAlgorithm::EcdsaP256, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
    }

    fn owner() -> (ParsedCertificate, SigningKey) {
        let k = key(1);
        let mut t = CertificateTemplate::new(
            "abc.com",
            k.public_key_info(),
            Serial::from_magnitude(&[1]),
            datetime!(2025-01-01 0:00 UTC),
            datetime!(2026-01-01 0:00 UTC),
        );
        t.san = vec![DomainPattern::parse("abc.com").unwrap()];
        let der = build_certificate(&t, Signer::SelfSigned(&k)).unwrap();
        (ParsedCertificate::from_der(&der).unwrap(), k)
    }

    fn fig1_template(k: &SigningKey) -> CertificateTemplate {
        let mut t = CertificateTemplate::new(
            "cdn.com",
            k.public_key_info(),
            Serial::random(&mut ChaCha20Rng::seed_from_u64(9)),
            datetime!(2025-03-01 0:00 UTC),
            datetime!(2025-03-01 6:00 UTC),
        );
        t.san = vec![DomainPattern::parse("*.content.abc.com").unwrap()];
        t.key_usage = KeyUsageSet::from_bits([0, 5, 6]);
        t.delegation_info = Some(DelegationInfo::default());
        t.crl_url = Some("http://abc.com/v1/crl.der".into());
        t.revocation_dns_suffix = Some(DomainName::parse("abc.com").unwrap());
        t
    }

    #[test]
    fn fig1_round_trip() {
        let (issuer, ik) = owner();
        let k = key(2);
        let t = fig1_template(&k);
        let der = build_certificate(&t, Signer::Issuer(&issuer, &ik)).unwrap();
        let c = ParsedCertificate::from_der(&der).unwrap();
        assert_eq!(c.subject_cn(), "cdn.com");
        assert_eq!(c.issuer_cn(), "abc.com");
        assert_eq!(c.san().iter().cloned().collect::<Vec<_>>(), t.san);
        assert_eq!(c.delegation_info(), t.delegation_info.as_ref());
        assert_eq!(c.key_usage(), t.key_usage);
        assert!(!c.is_ca());
        assert_eq!(c.serial(), &t.serial);
        assert_eq!(c.not_before(), t.not_before);
        assert_eq!(c.not_after(), t.not_after);
        assert_eq!(c.public_key(), &t.subject_key);
        assert_eq!(c.crl_url(), t.crl_url.as_deref());
        assert_eq!(c.revocation_dns_suffix(), t.revocation_dns_suffix.as_ref());
        assert!(c.is_decert());
        assert!(c.verify_signed_by(issuer.public_key()));
        assert!(!c.verify_signed_by(c.public_key()));
        assert!(!issuer.is_decert());
        let pem = c.to_pem();
        assert_eq!(ParsedCertificate::parse(pem.as_bytes()).unwrap(), c);
    }

    #[test]
    fn ca_flag_with_delegation_info_is_rejected() {
        let (issuer, ik) = owner();
        let mut t = fig1_template(&key(2));
        t.is_ca = true;
        assert!(matches!(
            build_certificate(&t, Signer::Issuer(&issuer, &ik)),
            Err(CertError::PolicyViolation(_))
        ));
    }

    #[test]
    fn non_critical_delegation_info_fails_to_parse() {
        let (issuer, ik) = owner();
        let mut t = fig1_template(&key(2));
        t.delegation_info_critical = false;
        assert!(build_certificate(&t, Signer::Issuer(&issuer, &ik)).is_err());
        let der = build_certificate_unchecked(&t, Signer::Issuer(&issuer, &ik)).unwrap();
        assert!(matches!(ParsedCertificate::from_der(&der), Err(CertError::MalformedCertificate(_))));
    }

    #[test]
    fn unknown_critical_extensions_are_recorded() {
        let (issuer, ik) = owner();
        let mut t = fig1_template(&key(2));
        t.extra_extensions.push(RawExtension {
            oid: Oid::parse("1.2.3.4").unwrap(),
            critical: true,
            value: der::null(),
        });
        t.extra_extensions.push(RawExtension {
            oid: Oid::parse("1.2.3.5").unwrap(),
            critical: false,
            value: der::null(),
        });
        let c = ParsedCertificate::from_der(&build_certificate(&t, Signer::Issuer(&issuer, &ik)).unwrap()).unwrap();
        assert_eq!(c.unknown_critical_extensions(), &[Oid::parse("1.2.3.4").unwrap()]);
    }

    #[test]
    fn wrong_signing_key_is_refused() {
        let (issuer, _) = owner();
        let t = fig1_template(&key(2));
        assert!(matches!(
            build_certificate(&t, Signer::Issuer(&issuer, &key(3))),
            Err(CertError::SigningFailure(_))
        ));
    }

    #[test]
    fn truncated_der_is_malformed() {
        let (issuer, _) = owner();
        let raw = issuer.raw_der();
        assert!(ParsedCertificate::from_der(&raw[..raw.len() - 1]).is_err());
    }

    #[test]
    fn serial_forms() {
        assert_eq!(Serial::from_magnitude(&[0x0a, 0x1b]).to_hex(), "0a1b");
        assert_eq!(Serial::from_magnitude(&[0]).to_hex(), "00");
        assert_eq!(Serial::from_magnitude(&[0x80]).to_hex(), "0080");
        let s = Serial::random(&mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(s.as_bytes().len(), 16);
        assert_eq!(Serial::from_hex(&s.to_hex()).unwrap(), s);
        assert!(Serial::from_hex("80").is_err());
    }
}
