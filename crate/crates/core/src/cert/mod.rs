// SPDX-License-Identifier: Apache-2.0

//! Certificate data model and DER codec, including the DelegationInfo
//! extension that turns an ordinary leaf into a delegation certificate.

mod certificate;
mod delegation_info;

pub use certificate::{
    build_certificate, build_certificate_unchecked, chain_to_pem, is_decert, parse_certificate,
    parse_pem_chain, pem_encode, CertError, CertificateTemplate, ParsedCertificate, RawExtension, Serial,
    Signer,
};
pub(crate) use certificate::{extension_oid, name, parse_name_cn, parse_san_value, san_value, OID_KEY_USAGE, OID_SAN};
pub use delegation_info::{
    delegation_info_oid, revocation_dns_suffix_oid, DelegationInfo, KeyUsageSet, MalformedExtension,
};
