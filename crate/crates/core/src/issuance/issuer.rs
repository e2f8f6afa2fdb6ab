// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::RngCore;
use time::Duration;

use crate::cert::{
    build_certificate, parse_pem_chain, CertificateTemplate, DelegationInfo, ParsedCertificate, Serial, Signer,
};
use crate::clock::Clock;
use crate::keys::{PublicKeyInfo, SigningKey};
use crate::name_scope::DomainName;
use crate::revocation::{build_crl, export_zone, CrlDocument, RevocationRecord, RevocationStore, RevocationZone};

use super::policy::{policy_check, IssuerPolicy, CLOCK_SKEW_GRACE};
use super::request::DelegationRequest;
use super::IssuanceError;

/// Signs `req` after a full policy check against `issuer_cert`.
pub fn issue_decert<R: RngCore + ?Sized>(
    req: &DelegationRequest,
    issuer_cert: &ParsedCertificate,
    issuer_key: &SigningKey,
    clock: &dyn Clock,
    policy: &IssuerPolicy,
    validity: Option<Duration>,
    rng: &mut R,
) -> Result<ParsedCertificate, IssuanceError> {
    let violations = policy_check(req, policy, &policy.authority_of(issuer_cert));
    if !violations.is_empty() {
        return Err(IssuanceError::PolicyViolation(violations));
    }
    let validity = policy.validity(validity).map_err(IssuanceError::InvalidValidity)?;
    let not_before = clock.now() - CLOCK_SKEW_GRACE;
    let mut t = CertificateTemplate::new(
        req.subject_cn.clone(),
        req.public_key.clone(),
        Serial::random(rng),
        not_before,
        not_before + validity,
    );
    t.san = req.scope.include.iter().cloned().collect();
    t.key_usage = Some(req.key_usage);
    t.delegation_info = Some(DelegationInfo {
        exclude: req.scope.exclude.clone(),
        include: Some(req.scope.include.clone()),
        path_len: Some(req.path_len),
    });
    sign(&t, issuer_cert, issuer_key)
}

fn sign(
    t: &CertificateTemplate,
    issuer_cert: &ParsedCertificate,
    issuer_key: &SigningKey,
) -> Result<ParsedCertificate, IssuanceError> {
    let der = build_certificate(t, Signer::Issuer(issuer_cert, issuer_key))?;
    Ok(ParsedCertificate::from_der(&der)?)
}

/// Key handling on renewal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RenewKey {
    /// Keep the subject key, so certificates it already signed stay valid.
    Reuse,
    /// Move to a new subject key, e.g. after a compromise.
    Rotate(PublicKeyInfo),
}

/// Certificates this issuer has signed, optionally appended to a PEM file.
#[derive(Debug, Default)]
pub struct IssuedIndex {
    certs: BTreeMap<Serial, ParsedCertificate>,
    path: Option<PathBuf>,
}

impl IssuedIndex {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, IssuanceError> {
        let path = path.as_ref().to_path_buf();
        let mut index = IssuedIndex {
            certs: BTreeMap::new(),
            path: Some(path.clone()),
        };
        if path.exists() {
            for cert in parse_pem_chain(&std::fs::read_to_string(&path)?)? {
                index.certs.insert(cert.serial().clone(), cert);
            }
        }
        Ok(index)
    }

    /// Re-reads the backing file, if any.
    pub fn refresh(&mut self) -> Result<(), IssuanceError> {
        if let Some(path) = self.path.clone() {
            *self = IssuedIndex::open(path)?;
        }
        Ok(())
    }

    pub fn insert(&mut self, cert: ParsedCertificate) -> Result<(), IssuanceError> {
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(cert.to_pem().as_bytes())?;
            f.sync_data()?;
        }
        self.certs.insert(cert.serial().clone(), cert);
        Ok(())
    }

    pub fn get(&self, serial: &Serial) -> Option<&ParsedCertificate> {
        self.certs.get(serial)
    }

    pub fn len(&self) -> usize {
        self.certs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.certs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParsedCertificate> {
        self.certs.values()
    }

    /// True when a certificate with this subject key and scope was issued.
    pub fn knows(&self, cert: &ParsedCertificate) -> bool {
        self.certs
            .values()
            .any(|c| c.public_key() == cert.public_key() && c.scope() == cert.scope() && c.issuer_cn() == cert.issuer_cn())
    }
}

/// Re-signs `existing` with a fresh serial and validity window, copying its
/// scope, key usage and path length.
#[allow(clippy::too_many_arguments)]
pub fn renew_decert<R: RngCore + ?Sized>(
    existing: &ParsedCertificate,
    issuer_cert: &ParsedCertificate,
    issuer_key: &SigningKey,
    clock: &dyn Clock,
    key: RenewKey,
    index: &IssuedIndex,
    revoked: &RevocationStore,
    rng: &mut R,
) -> Result<ParsedCertificate, IssuanceError> {
    if !existing.is_decert() || existing.issuer_cn() != issuer_cert.subject_cn() || !index.knows(existing) {
        return Err(IssuanceError::UnknownSubject(existing.subject_cn().to_owned()));
    }
    if revoked.is_revoked(existing.serial()) {
        return Err(IssuanceError::RevokedSubject(existing.serial().clone()));
    }
    let not_before = clock.now() - CLOCK_SKEW_GRACE;
    let validity = existing.not_after() - existing.not_before();
    let subject_key = match key {
        RenewKey::Reuse => existing.public_key().clone(),
        RenewKey::Rotate(k) => k,
    };
    let mut t = CertificateTemplate::new(
        existing.subject_cn(),
        subject_key,
        Serial::random(rng),
        not_before,
        not_before + validity,
    );
    t.san = existing.san().iter().cloned().collect();
    t.key_usage = existing.key_usage();
    t.delegation_info = existing.delegation_info().cloned();
    t.crl_url = existing.crl_url().map(str::to_owned);
    t.revocation_dns_suffix = existing.revocation_dns_suffix().cloned();
    sign(&t, issuer_cert, issuer_key)
}

/// A domain owner's (or delegatee's) signing station: credentials, policy,
/// the issued-certificate index and the revocation store.
pub struct Issuer {
    pub cert: ParsedCertificate,
    /// The issuer's own chain above `cert`, appended to issued chains.
    pub chain: Vec<ParsedCertificate>,
    key: SigningKey,
    pub policy: IssuerPolicy,
    clock: Arc<dyn Clock>,
    rng: Box<dyn RngCore + Send>,
    index: IssuedIndex,
    revocations: RevocationStore,
    crl_lifetime: Duration,
}

impl Issuer {
    pub fn new(
        cert: ParsedCertificate,
        key: SigningKey,
        policy: IssuerPolicy,
        clock: Arc<dyn Clock>,
        rng: Box<dyn RngCore + Send>,
    ) -> Result<Self, IssuanceError> {
        if key.public_key_info() != *cert.public_key() {
            return Err(IssuanceError::KeyMismatch);
        }
        Ok(Issuer {
            cert,
            chain: Vec::new(),
            key,
            policy,
            clock,
            rng,
            index: IssuedIndex::in_memory(),
            revocations: RevocationStore::in_memory(),
            crl_lifetime: crate::revocation::DEFAULT_CRL_LIFETIME,
        })
    }

    pub fn with_chain(mut self, chain: Vec<ParsedCertificate>) -> Self {
        self.chain = chain;
        self
    }

    pub fn with_stores(mut self, index: IssuedIndex, revocations: RevocationStore) -> Self {
        self.index = index;
        self.revocations = revocations;
        self
    }

    pub fn with_crl_lifetime(mut self, lifetime: Duration) -> Self {
        self.crl_lifetime = lifetime;
        self
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    pub fn key(&self) -> &SigningKey {
        &self.key
    }

    pub fn index(&self) -> &IssuedIndex {
        &self.index
    }

    pub fn revocations(&self) -> &RevocationStore {
        &self.revocations
    }

    /// Reloads file-backed stores that another process may have appended to.
    pub fn refresh(&mut self) -> Result<(), IssuanceError> {
        self.index.refresh()?;
        self.revocations.refresh()?;
        Ok(())
    }

    /// `[issued, self.cert, self.chain...]`
    pub fn full_chain(&self, issued: &ParsedCertificate) -> Vec<ParsedCertificate> {
        let mut chain = vec![issued.clone(), self.cert.clone()];
        chain.extend(self.chain.iter().cloned());
        chain
    }

    pub fn issue(
        &mut self,
        req: &DelegationRequest,
        validity: Option<Duration>,
    ) -> Result<ParsedCertificate, IssuanceError> {
        let cert = issue_decert(req, &self.cert, &self.key, self.clock.as_ref(), &self.policy, validity, &mut self.rng)?;
        self.index.insert(cert.clone())?;
        Ok(cert)
    }

    pub fn renew(&mut self, existing: &ParsedCertificate, key: RenewKey) -> Result<ParsedCertificate, IssuanceError> {
        let cert = renew_decert(
            existing,
            &self.cert,
            &self.key,
            self.clock.as_ref(),
            key,
            &self.index,
            &self.revocations,
            &mut self.rng,
        )?;
        self.index.insert(cert.clone())?;
        Ok(cert)
    }

    pub fn revoke(&mut self, serial: &Serial, reason: &str) -> Result<RevocationRecord, IssuanceError> {
        Ok(self.revocations.revoke(serial, reason, self.clock.as_ref())?)
    }

    pub fn crl(&self) -> Result<CrlDocument, IssuanceError> {
        Ok(build_crl(&self.revocations, &self.cert, &self.key, self.clock.as_ref(), self.crl_lifetime)?)
    }

    /// Revocation records published under the issuer's own name.
    pub fn zone(&self) -> Result<RevocationZone, IssuanceError> {
        let domain = DomainName::parse(self.cert.subject_cn())
            .map_err(|e| IssuanceError::MalformedRequest(format!("issuer name is not a domain: {e}")))?;
        Ok(export_zone(&self.revocations, &domain))
    }
}
