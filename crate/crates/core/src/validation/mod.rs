// SPDX-License-Identifier: Apache-2.0

//! Consumer-side chain validation with exhaustive violation reports.

mod chain;
mod link;
mod report;

use std::sync::Arc;

use time::OffsetDateTime;

use crate::cert::{delegation_info_oid, KeyUsageSet, ParsedCertificate};
use crate::name_scope::DomainName;
use crate::revocation::{check_crl, check_dns, CrlDocument, CrlStatus, DnsStatus, TxtResolver};

pub use chain::{eec_delegation_scope, effective_scope, split_chain, CertificateChain};
pub use link::{validate_link, DelegationAuthority, ValidatorConfig, DEFAULT_MAX_DECERT_DEPTH};
pub use report::{UnknownCode, ValidationReport, Verdict, Violation, ViolationCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Understands DelegationInfo and applies the delegation rules.
    #[default]
    DecertAware,
    /// Plain path validation; DelegationInfo is an unknown critical extension.
    Strict,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decert-aware" | "aware" => Ok(Mode::DecertAware),
            "strict" => Ok(Mode::Strict),
            _ => Err(format!("unknown mode {s:?} (expected decert-aware or strict)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Mode::DecertAware => "decert-aware",
            Mode::Strict => "strict",
        })
    }
}

/// What to do when revocation status cannot be established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailMode {
    Open,
    #[default]
    Closed,
}

#[derive(Clone, Default)]
pub enum RevocationPolicy {
    #[default]
    None,
    /// CRLs from any issuers in the chain; each is matched by issuer name
    /// and signature.
    Crl(Vec<CrlDocument>, FailMode),
    Dns(Arc<dyn TxtResolver>, FailMode),
}

impl std::fmt::Debug for RevocationPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RevocationPolicy::None => f.write_str("None"),
            RevocationPolicy::Crl(crls, m) => write!(f, "Crl({} documents, {m:?})", crls.len()),
            RevocationPolicy::Dns(_, m) => write!(f, "Dns({m:?})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationInput {
    /// Leaf first.
    pub chain: Vec<ParsedCertificate>,
    pub trust_anchors: Vec<ParsedCertificate>,
    pub hostname: DomainName,
    pub at: OffsetDateTime,
    pub revocation: RevocationPolicy,
    pub mode: Mode,
    pub config: ValidatorConfig,
}

impl ValidationInput {
    pub fn new(
        chain: Vec<ParsedCertificate>,
        trust_anchors: Vec<ParsedCertificate>,
        hostname: DomainName,
        at: OffsetDateTime,
    ) -> Self {
        ValidationInput {
            chain,
            trust_anchors,
            hostname,
            at,
            revocation: RevocationPolicy::None,
            mode: Mode::DecertAware,
            config: ValidatorConfig::default(),
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_revocation(mut self, policy: RevocationPolicy) -> Self {
        self.revocation = policy;
        self
    }
}

pub fn validate_chain(input: &ValidationInput) -> ValidationReport {
    let mut v = Vec::new();

    // Unrecognised critical extensions make a certificate unusable outright.
    for (i, cert) in input.chain.iter().enumerate() {
        for oid in cert.unknown_critical_extensions() {
            v.push(Violation::new(i, ViolationCode::UnknownCriticalExtension, oid.to_string()));
        }
        if input.mode == Mode::Strict && cert.is_decert() {
            v.push(Violation::new(
                i,
                ViolationCode::UnknownCriticalExtension,
                delegation_info_oid().to_string(),
            ));
        }
    }
    if !v.is_empty() {
        return ValidationReport::from_violations(v);
    }

    let chain = match split_chain(&input.chain) {
        Ok(c) => c,
        Err(violation) => return ValidationReport::from_violations(vec![violation]),
    };

    standard_checks(&chain, input, &mut v);
    if input.mode == Mode::DecertAware {
        decert_checks(&chain, input, &mut v);
    }
    hostname_check(&chain, &input.hostname, &mut v);
    ValidationReport::from_violations(v)
}

fn standard_checks(chain: &CertificateChain, input: &ValidationInput, v: &mut Vec<Violation>) {
    let certs: Vec<&ParsedCertificate> = chain.iter().collect();
    let n = certs.len();

    for (i, pair) in certs.windows(2).enumerate() {
        let (child, parent) = (pair[0], pair[1]);
        if child.issuer_cn() != parent.subject_cn() {
            v.push(Violation::new(
                i,
                ViolationCode::ChainMalformed,
                format!("issuer {:?} does not name the next certificate {:?}", child.issuer_cn(), parent.subject_cn()),
            ));
        }
        if !child.verify_signed_by(parent.public_key()) {
            v.push(Violation::new(i, ViolationCode::SignatureInvalid, format!("not signed by {}", parent.subject_cn())));
        }
    }

    let top = certs[n - 1];
    if input.trust_anchors.iter().all(|a| a.raw_der() != top.raw_der()) {
        let named: Vec<&ParsedCertificate> =
            input.trust_anchors.iter().filter(|a| a.subject_cn() == top.issuer_cn()).collect();
        if named.is_empty() {
            v.push(Violation::new(n - 1, ViolationCode::UntrustedRoot, format!("no trust anchor named {}", top.issuer_cn())));
        } else if !named.iter().any(|a| top.verify_signed_by(a.public_key())) {
            v.push(Violation::new(
                n - 1,
                ViolationCode::SignatureInvalid,
                format!("not signed by trust anchor {}", top.issuer_cn()),
            ));
        }
    }

    for (i, cert) in certs.iter().enumerate() {
        if input.at < cert.not_before() {
            v.push(Violation::new(i, ViolationCode::NotYetValid, format!("not before {}", cert.not_before())));
        }
        if input.at > cert.not_after() {
            v.push(Violation::new(i, ViolationCode::Expired, format!("not after {}", cert.not_after())));
        }
    }

    let first_ca = chain.eec_index() + 1;
    for (k, ca) in chain.cas.iter().enumerate() {
        let i = first_ca + k;
        if !ca.is_ca() {
            v.push(Violation::new(i, ViolationCode::CAFlagInvalid, "issuing certificate is not a CA"));
        }
        if let Some(ku) = ca.key_usage() {
            if !ku.contains(KeyUsageSet::KEY_CERT_SIGN) {
                v.push(Violation::new(i, ViolationCode::CAFlagInvalid, "CA key usage lacks keyCertSign"));
            }
        }
        if let Some(limit) = ca.basic_path_len() {
            let below = chain.cas[..k].iter().filter(|c| !c.is_self_issued()).count();
            if below as u64 > u64::from(limit) {
                v.push(Violation::new(
                    i,
                    ViolationCode::PathLenExceeded,
                    format!("{below} intermediates below a CA with pathLenConstraint {limit}"),
                ));
            }
        }
    }
}

fn decert_checks(chain: &CertificateChain, input: &ValidationInput, v: &mut Vec<Violation>) {
    for (i, cert) in chain.decerts.iter().enumerate() {
        if cert.is_ca() {
            v.push(Violation::new(i, ViolationCode::CAFlagInvalid, "delegation certificate asserts cA"));
        }
        if cert.san().is_empty() {
            v.push(Violation::new(i, ViolationCode::SANMissing, "delegation certificate has no dNSName"));
        }
        if let Some(mirror) = cert.delegation_info().and_then(|d| d.include.as_ref()) {
            if mirror != cert.san() {
                v.push(Violation::new(i, ViolationCode::DelegationInfoMismatch, "include list differs from SAN"));
            }
        }
        let parent = chain.get(i + 1).expect("every DeCert has an issuer in the chain");
        for (code, detail) in validate_link(parent, cert, &input.config) {
            v.push(Violation::new(i, code, detail));
        }
        revocation_check(i, cert, parent, input, v);
    }
}

fn revocation_check(
    i: usize,
    cert: &ParsedCertificate,
    issuer: &ParsedCertificate,
    input: &ValidationInput,
    v: &mut Vec<Violation>,
) {
    let unknown = |why: &str, fail: FailMode, v: &mut Vec<Violation>| {
        if fail == FailMode::Closed {
            v.push(Violation::new(i, ViolationCode::Revoked, format!("revocation status unknown: {why}")));
        }
    };
    match &input.revocation {
        RevocationPolicy::None => {}
        RevocationPolicy::Crl(crls, fail) => {
            let crl = crls
                .iter()
                .filter(|c| c.issuer_cn == issuer.subject_cn() && c.verify_signature(issuer.public_key()))
                .max_by_key(|c| (c.this_update, c.number));
            match crl.map(|c| check_crl(cert, c, input.at)) {
                None => unknown(&format!("no valid CRL from {}", issuer.subject_cn()), *fail, v),
                Some(CrlStatus::StaleCrl) => unknown("stale CRL", *fail, v),
                Some(CrlStatus::Revoked) => {
                    v.push(Violation::new(i, ViolationCode::Revoked, format!("serial {} listed in CRL", cert.serial())))
                }
                Some(CrlStatus::NotRevoked) => {}
            }
        }
        RevocationPolicy::Dns(resolver, fail) => match check_dns(cert, resolver.as_ref()) {
            DnsStatus::Revoked => v.push(Violation::new(
                i,
                ViolationCode::Revoked,
                format!("serial {} published as revoked", cert.serial()),
            )),
            DnsStatus::LookupFailed => unknown("DNS lookup failed", *fail, v),
            DnsStatus::NotRevoked => {}
        },
    }
}

fn hostname_check(chain: &CertificateChain, hostname: &DomainName, v: &mut Vec<Violation>) {
    let scope = effective_scope(chain);
    if !scope.is_included(hostname) {
        v.push(Violation::new(0, ViolationCode::HostnameNotInScope, format!("{hostname} not in {scope}")));
    } else if scope.is_excluded(hostname) {
        v.push(Violation::new(0, ViolationCode::HostnameExcluded, format!("{hostname} excluded by {scope}")));
    }
}
