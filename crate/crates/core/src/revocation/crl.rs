// SPDX-License-Identifier: Apache-2.0

use time::{Duration, OffsetDateTime};

use super::store::{RevocationRecord, RevocationStore};
use super::RevocationError;
use crate::cert::{name, parse_name_cn, ParsedCertificate, Serial};
use crate::clock::Clock;
use crate::der::{self, Oid, Reader};
use crate::keys::{PublicKeyInfo, SignatureAlgorithm, SigningKey};

const OID_CRL_NUMBER: &[u64] = &[2, 5, 29, 20];
const OID_REASON_CODE: &[u64] = &[2, 5, 29, 21];

pub const DEFAULT_CRL_LIFETIME: Duration = Duration::hours(1);

/// CRLReason names, indexed by code. Code 7 is unassigned.
const REASONS: [&str; 11] = [
    "unspecified",
    "keyCompromise",
    "cACompromise",
    "affiliationChanged",
    "superseded",
    "cessationOfOperation",
    "certificateHold",
    "",
    "removeFromCRL",
    "privilegeWithdrawn",
    "aACompromise",
];

fn reason_code(reason: &str) -> Option<u8> {
    REASONS
        .iter()
        .position(|r| !r.is_empty() && r.eq_ignore_ascii_case(reason))
        .map(|i| i as u8)
}

/// An owner-signed X.509 v2 CRL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrlDocument {
    pub issuer_cn: String,
    pub this_update: OffsetDateTime,
    pub next_update: OffsetDateTime,
    pub number: u64,
    /// Sorted by serial. Free-text reasons that are not CRLReason names come
    /// back as "unspecified" after a DER round trip.
    pub entries: Vec<RevocationRecord>,
    signature_algorithm: SignatureAlgorithm,
    tbs: Vec<u8>,
    signature: Vec<u8>,
    raw: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrlStatus {
    NotRevoked,
    Revoked,
    StaleCrl,
}

impl CrlDocument {
    pub fn to_der(&self) -> &[u8] {
        &self.raw
    }

    pub fn verify_signature(&self, issuer_key: &PublicKeyInfo) -> bool {
        issuer_key.verify(self.signature_algorithm, &self.tbs, &self.signature)
    }

    pub fn lists(&self, serial: &Serial) -> bool {
        self.entries.binary_search_by(|e| e.serial.cmp(serial)).is_ok()
    }

    pub fn from_der(bytes: &[u8]) -> Result<Self, RevocationError> {
        Self::parse(bytes).map_err(|e| RevocationError::MalformedCrl(e.0))
    }

    fn parse(bytes: &[u8]) -> Result<Self, der::DerError> {
        let mut outer = Reader::new(bytes);
        let mut crl = outer.nested(der::SEQUENCE)?;
        outer.finish()?;
        let tbs_raw = crl.read_raw(der::SEQUENCE)?;
        let alg = SignatureAlgorithm::from_der(crl.read(der::SEQUENCE)?)?;
        let (_, signature) = crl.read_bit_string()?;
        crl.finish()?;

        let mut tbs = Reader::new(tbs_raw).nested(der::SEQUENCE)?;
        if tbs.read_uint()? != 1 {
            return Err(der::DerError("expected a v2 CRL".into()));
        }
        if SignatureAlgorithm::from_der(tbs.read(der::SEQUENCE)?)? != alg {
            return Err(der::DerError("signature algorithm mismatch".into()));
        }
        let issuer_cn = parse_name_cn(tbs.read(der::SEQUENCE)?)?;
        let this_update = tbs.read_time()?;
        let next_update = tbs.read_time()?;
        let mut entries = Vec::new();
        if tbs.peek_tag() == Some(der::SEQUENCE) {
            let mut list = tbs.nested(der::SEQUENCE)?;
            while !list.is_empty() {
                let mut entry = list.nested(der::SEQUENCE)?;
                let serial = Serial::from_content(entry.read_integer_bytes()?)?;
                let revoked_at = entry.read_time()?;
                let mut reason = REASONS[0].to_owned();
                if let Some(exts) = entry.read_optional(der::SEQUENCE)? {
                    let mut exts = Reader::new(exts);
                    while !exts.is_empty() {
                        let mut ext = exts.nested(der::SEQUENCE)?;
                        let oid = ext.read_oid()?;
                        if ext.peek_tag() == Some(der::BOOLEAN) {
                            ext.read_bool()?;
                        }
                        let value = ext.read(der::OCTET_STRING)?;
                        if oid == Oid::new(OID_REASON_CODE) {
                            let code = Reader::new(value).read(der::ENUMERATED)?;
                            if let [c] = code {
                                if let Some(name) = REASONS.get(*c as usize).filter(|n| !n.is_empty()) {
                                    reason = (*name).to_owned();
                                }
                            }
                        }
                    }
                }
                entry.finish()?;
                entries.push(RevocationRecord {
                    serial,
                    revoked_at,
                    reason,
                });
            }
        }
        let mut number = 0;
        if let Some(exts) = tbs.read_optional(der::context(0))? {
            let mut wrap = Reader::new(exts);
            let mut list = wrap.nested(der::SEQUENCE)?;
            while !list.is_empty() {
                let mut ext = list.nested(der::SEQUENCE)?;
                let oid = ext.read_oid()?;
                if ext.peek_tag() == Some(der::BOOLEAN) {
                    ext.read_bool()?;
                }
                let value = ext.read(der::OCTET_STRING)?;
                if oid == Oid::new(OID_CRL_NUMBER) {
                    number = Reader::new(value).read_uint()?;
                }
            }
        }
        tbs.finish()?;
        if entries.windows(2).any(|w| w[0].serial >= w[1].serial) {
            return Err(der::DerError("CRL entries are not sorted by serial".into()));
        }
        Ok(CrlDocument {
            issuer_cn,
            this_update,
            next_update,
            number,
            entries,
            signature_algorithm: alg,
            tbs: tbs_raw.to_vec(),
            signature: signature.to_vec(),
            raw: bytes.to_vec(),
        })
    }
}

/// Builds and signs a CRL covering every record in `store`.
pub fn build_crl(
    store: &RevocationStore,
    issuer_cert: &ParsedCertificate,
    issuer_key: &SigningKey,
    clock: &dyn Clock,
    lifetime: Duration,
) -> Result<CrlDocument, RevocationError> {
    if issuer_key.public_key_info() != *issuer_cert.public_key() {
        return Err(RevocationError::SigningFailure(
            "issuer key does not match issuer certificate".into(),
        ));
    }
    if lifetime <= Duration::ZERO {
        return Err(RevocationError::SigningFailure("CRL lifetime must be positive".into()));
    }
    let this_update = clock.now();
    let next_update = this_update + lifetime;
    let alg = issuer_key.signature_algorithm();

    let entries: Vec<Vec<u8>> = store
        .records()
        .map(|r| {
            let mut body = r.serial.to_der();
            body.extend(der::time(r.revoked_at));
            if let Some(code) = reason_code(&r.reason).filter(|&c| c != 0) {
                let value = der::tlv(der::ENUMERATED, &[code]);
                let ext = der::sequence(&[&der::oid(&Oid::new(OID_REASON_CODE)), &der::octet_string(&value)]);
                body.extend(der::sequence(&[&ext]));
            }
            der::tlv(der::SEQUENCE, &body)
        })
        .collect();

    let mut tbs_body = der::uint(1);
    tbs_body.extend(alg.to_der());
    tbs_body.extend(name(issuer_cert.subject_cn()));
    tbs_body.extend(der::time(this_update));
    tbs_body.extend(der::time(next_update));
    if !entries.is_empty() {
        tbs_body.extend(der::tlv(der::SEQUENCE, &entries.concat()));
    }
    let number = der::sequence(&[
        &der::oid(&Oid::new(OID_CRL_NUMBER)),
        &der::octet_string(&der::uint(store.generation())),
    ]);
    tbs_body.extend(der::explicit(0, &der::sequence(&[&number])));
    let tbs = der::tlv(der::SEQUENCE, &tbs_body);
    let sig = issuer_key.sign(&tbs);
    let raw = der::sequence(&[&tbs, &alg.to_der(), &der::bit_string(0, &sig)]);
    CrlDocument::from_der(&raw)
}

/// Status of `cert` according to `crl`, whose signature the caller has
/// already checked against the certificate's issuer.
pub fn check_crl(cert: &ParsedCertificate, crl: &CrlDocument, at: OffsetDateTime) -> CrlStatus {
    if at > crl.next_update {
        CrlStatus::StaleCrl
    } else if crl.lists(cert.serial()) {
        CrlStatus::Revoked
    } else {
        CrlStatus::NotRevoked
    }
}
