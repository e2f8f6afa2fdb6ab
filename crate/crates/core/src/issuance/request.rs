// SPDX-License-Identifier: Apache-2.0

use crate::cert::{
    delegation_info_oid, extension_oid, name, parse_name_cn, parse_san_value, san_value, DelegationInfo,
    KeyUsageSet, OID_KEY_USAGE, OID_SAN,
};
use crate::der::{self, Oid, Reader};
use crate::keys::{PublicKeyInfo, SignatureAlgorithm, SigningKey};
use crate::name_scope::DomainScope;

use super::IssuanceError;

const OID_EXTENSION_REQUEST: &[u64] = &[1, 2, 840, 113549, 1, 9, 14];

/// A delegation request: PKCS#10 with the requested SAN, DelegationInfo
/// (excludes and path length) and KeyUsage carried as requested extensions.
/// The request signature is the proof of possession.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationRequest {
    pub subject_cn: String,
    pub public_key: PublicKeyInfo,
    pub scope: DomainScope,
    pub key_usage: KeyUsageSet,
    pub path_len: u8,
    signature_algorithm: SignatureAlgorithm,
    info: Vec<u8>,
    signature: Vec<u8>,
    raw: Vec<u8>,
}

fn request_info(
    subject_cn: &str,
    key: &PublicKeyInfo,
    scope: &DomainScope,
    key_usage: KeyUsageSet,
    path_len: u8,
) -> Vec<u8> {
    let info = DelegationInfo {
        exclude: scope.exclude.clone(),
        include: None,
        path_len: Some(path_len),
    };
    let exts = der::sequence(&[
        &extension_oid(&Oid::new(OID_SAN), false, &san_value(scope.include.iter())),
        &extension_oid(&Oid::new(OID_KEY_USAGE), true, &key_usage.to_bit_string()),
        &extension_oid(delegation_info_oid(), true, &info.encode()),
    ]);
    let attr = der::sequence(&[&der::oid(&Oid::new(OID_EXTENSION_REQUEST)), &der::set_of(vec![exts])]);
    der::sequence(&[
        &der::uint(0),
        &name(subject_cn),
        key.as_bytes(),
        &der::tlv(der::context(0), &attr),
    ])
}

/// Builds and signs a request with the delegatee's key.
pub fn create_request(
    subject_cn: &str,
    key: &SigningKey,
    scope: &DomainScope,
    key_usage: KeyUsageSet,
    path_len: u8,
) -> Result<DelegationRequest, IssuanceError> {
    if subject_cn.is_empty() {
        return Err(IssuanceError::MalformedRequest("empty subject common name".into()));
    }
    if scope.include.is_empty() {
        return Err(IssuanceError::MalformedRequest("requested scope has no include patterns".into()));
    }
    let public_key = key.public_key_info();
    let info = request_info(subject_cn, &public_key, scope, key_usage, path_len);
    let alg = key.signature_algorithm();
    let signature = key.sign(&info);
    let raw = der::sequence(&[&info, &alg.to_der(), &der::bit_string(0, &signature)]);
    Ok(DelegationRequest {
        subject_cn: subject_cn.to_owned(),
        public_key,
        scope: scope.clone(),
        key_usage,
        path_len,
        signature_algorithm: alg,
        info,
        signature,
        raw,
    })
}

impl DelegationRequest {
    pub fn to_der(&self) -> &[u8] {
        &self.raw
    }

    pub fn to_pem(&self) -> String {
        crate::cert::pem_encode("CERTIFICATE REQUEST", &self.raw)
    }

    /// True when the request was signed by the key it names.
    pub fn verify_proof(&self) -> bool {
        self.public_key.verify(self.signature_algorithm, &self.info, &self.signature)
    }

    /// Accepts DER or PEM. The proof of possession is not checked here.
    pub fn parse(input: &[u8]) -> Result<Self, IssuanceError> {
        if input.trim_ascii_start().starts_with(b"-----BEGIN") {
            let doc = pem::parse(input).map_err(|e| IssuanceError::MalformedRequest(e.to_string()))?;
            if doc.tag() != "CERTIFICATE REQUEST" {
                return Err(IssuanceError::MalformedRequest(format!("unexpected PEM label {}", doc.tag())));
            }
            return Self::from_der(doc.contents());
        }
        Self::from_der(input)
    }

    pub fn from_der(bytes: &[u8]) -> Result<Self, IssuanceError> {
        Self::decode(bytes).map_err(|e| IssuanceError::MalformedRequest(e.to_string()))
    }

    fn decode(bytes: &[u8]) -> Result<Self, Box<dyn std::error::Error>> {
        let mut outer = Reader::new(bytes);
        let mut req = outer.nested(der::SEQUENCE)?;
        outer.finish()?;
        let info_raw = req.read_raw(der::SEQUENCE)?;
        let alg = SignatureAlgorithm::from_der(req.read(der::SEQUENCE)?)?;
        let (unused, signature) = req.read_bit_string()?;
        if unused != 0 {
            return Err("signature has unused bits".into());
        }
        req.finish()?;

        let mut info = Reader::new(info_raw).nested(der::SEQUENCE)?;
        if info.read_uint()? != 0 {
            return Err("unsupported request version".into());
        }
        let subject_cn = parse_name_cn(info.read(der::SEQUENCE)?)?;
        let public_key = PublicKeyInfo::from_der(info.read_raw(der::SEQUENCE)?)?;
        let mut attrs = info.nested(der::context(0))?;
        info.finish()?;

        let mut san = None;
        let mut key_usage = None;
        let mut delegation = None;
        while !attrs.is_empty() {
            let mut attr = attrs.nested(der::SEQUENCE)?;
            let oid = attr.read_oid()?;
            let mut values = attr.nested(der::SET)?;
            attr.finish()?;
            if oid != Oid::new(OID_EXTENSION_REQUEST) {
                continue;
            }
            let mut exts = values.nested(der::SEQUENCE)?;
            values.finish()?;
            while !exts.is_empty() {
                let mut ext = exts.nested(der::SEQUENCE)?;
                let oid = ext.read_oid()?;
                if ext.peek_tag() == Some(der::BOOLEAN) {
                    ext.read_bool()?;
                }
                let value = ext.read(der::OCTET_STRING)?;
                ext.finish()?;
                if oid == Oid::new(OID_SAN) {
                    san = Some(parse_san_value(value)?);
                } else if oid == Oid::new(OID_KEY_USAGE) {
                    let mut r = Reader::new(value);
                    let (_, bits) = r.read_bit_string()?;
                    r.finish()?;
                    key_usage = Some(KeyUsageSet::from_bit_string(bits));
                } else if oid == *delegation_info_oid() {
                    delegation = Some(DelegationInfo::decode(value)?);
                } else {
                    return Err(format!("unsupported requested extension {oid}").into());
                }
            }
        }
        let include = san.filter(|s| !s.is_empty()).ok_or("request names no dNSName")?;
        let delegation = delegation.unwrap_or_default();
        if delegation.include.as_ref().is_some_and(|m| *m != include) {
            return Err("include mirror differs from requested SAN".into());
        }
        if subject_cn.is_empty() {
            return Err("empty subject common name".into());
        }
        Ok(DelegationRequest {
            subject_cn,
            public_key,
            scope: DomainScope {
                include,
                exclude: delegation.exclude.clone(),
            },
            key_usage: key_usage.unwrap_or_default(),
            path_len: delegation.effective_path_len(),
            signature_algorithm: alg,
            info: info_raw.to_vec(),
            signature: signature.to_vec(),
            raw: bytes.to_vec(),
        })
    }
}
