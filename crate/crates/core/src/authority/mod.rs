// SPDX-License-Identifier: Apache-2.0

//! The domain owner's delegation authority: request intake, nonce-guarded
//! renewal with key reuse, and CRL / revocation-zone publication.

mod config;
mod http;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::RngCore;
use thiserror::Error;
use time::{Duration, OffsetDateTime};

use crate::cert::{chain_to_pem, parse_pem_chain, Serial};
use crate::clock::{Clock, SystemClock};
use crate::issuance::{DelegationRequest, IssuanceError, IssuedIndex, Issuer, PolicyViolation, RenewKey};
use crate::keys::{KeyAlgorithm, PublicKeyInfo, SignatureAlgorithm, SigningKey};
use crate::revocation::RevocationStore;

pub use config::{AuthorityConfig, PolicyConfig, DEFAULT_NONCE_LIFETIME, DEFAULT_RENEWALS_PER_HOUR};
pub use http::{router, AuthorityServer};

#[derive(Debug, Error)]
pub enum AuthorityError {
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("policy violation")]
    PolicyViolation(Vec<PolicyViolation>),
    #[error("nonce is unknown, expired or already used")]
    StaleNonce,
    #[error("renewal signature does not verify: {0}")]
    BadSignature(String),
    #[error("no certificate with serial {0} was issued here")]
    UnknownSerial(Serial),
    #[error("certificate {0} has been revoked")]
    RevokedSubject(Serial),
    #[error("renewal rate limit reached; retry in {0} s")]
    RateLimited(u64),
    #[error("configuration: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl AuthorityError {
    /// HTTP status for this error.
    pub fn status(&self) -> u16 {
        match self {
            AuthorityError::MalformedRequest(_) => 400,
            AuthorityError::PolicyViolation(_) => 422,
            AuthorityError::StaleNonce | AuthorityError::BadSignature(_) => 401,
            AuthorityError::UnknownSerial(_) => 404,
            AuthorityError::RevokedSubject(_) => 403,
            AuthorityError::RateLimited(_) => 429,
            AuthorityError::Config(_) | AuthorityError::Internal(_) => 500,
        }
    }

    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            AuthorityError::MalformedRequest(_) => "MalformedRequest",
            AuthorityError::PolicyViolation(_) => "PolicyViolation",
            AuthorityError::StaleNonce => "StaleNonce",
            AuthorityError::BadSignature(_) => "BadSignature",
            AuthorityError::UnknownSerial(_) => "UnknownSerial",
            AuthorityError::RevokedSubject(_) => "RevokedSubject",
            AuthorityError::RateLimited(_) => "RateLimited",
            AuthorityError::Config(_) => "Config",
            AuthorityError::Internal(_) => "Internal",
        }
    }
}

impl From<IssuanceError> for AuthorityError {
    fn from(e: IssuanceError) -> Self {
        match e {
            IssuanceError::MalformedRequest(m) => AuthorityError::MalformedRequest(m),
            IssuanceError::UnsupportedAlgorithm(m) | IssuanceError::InvalidValidity(m) => {
                AuthorityError::MalformedRequest(m)
            }
            IssuanceError::PolicyViolation(v) => AuthorityError::PolicyViolation(v),
            IssuanceError::RevokedSubject(s) => AuthorityError::RevokedSubject(s),
            other => AuthorityError::Internal(other.to_string()),
        }
    }
}

/// A single-use renewal challenge bound to one subject key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonceChallenge {
    pub nonce: [u8; 32],
    pub issued_at: OffsetDateTime,
    pub expires_at: OffsetDateTime,
    /// SHA-256 of the subject key's SubjectPublicKeyInfo.
    pub bound_key: [u8; 32],
}

impl NonceChallenge {
    /// `nonce=<hex>` and `expires=<unix>` lines.
    pub fn to_text(&self) -> String {
        format!("nonce={}\nexpires={}\n", hex::encode(self.nonce), self.expires_at.unix_timestamp())
    }

    pub fn parse_nonce(text: &str) -> Option<[u8; 32]> {
        text.lines()
            .find_map(|l| l.strip_prefix("nonce="))
            .and_then(|h| hex::decode(h.trim()).ok())
            .and_then(|v| v.try_into().ok())
    }
}

/// What the subject key signs to authorize a renewal.
pub fn renewal_message(serial: &Serial, nonce: &[u8; 32]) -> Vec<u8> {
    format!("decert-renewal\nserial={}\nnonce={}\n", serial.to_hex(), hex::encode(nonce)).into_bytes()
}

/// Body for `POST /v1/renewals`.
pub fn renewal_body(serial: &Serial, nonce: &[u8; 32], subject_key: &SigningKey) -> String {
    let sig = subject_key.sign(&renewal_message(serial, nonce));
    format!("serial={}\nnonce={}\nsignature={}\n", serial.to_hex(), hex::encode(nonce), hex::encode(sig))
}

struct RenewalForm {
    serial: Serial,
    nonce: [u8; 32],
    signature: Vec<u8>,
}

fn parse_renewal(body: &str) -> Result<RenewalForm, AuthorityError> {
    let bad = |m: &str| AuthorityError::MalformedRequest(m.to_owned());
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value lines"))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            return Err(bad("duplicate field"));
        }
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
    let serial = Serial::from_hex(get("serial")?).map_err(|_| bad("serial is not hex"))?;
    let nonce = hex::decode(get("nonce")?)
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| bad("nonce must be 32 hex-encoded octets"))?;
    let signature = hex::decode(get("signature")?).map_err(|_| bad("signature is not hex"))?;
    Ok(RenewalForm { serial, nonce, signature })
}

fn signature_algorithm(key: &PublicKeyInfo) -> Option<SignatureAlgorithm> {
    match key.algorithm().ok()? {
        KeyAlgorithm::EcdsaP256 => Some(SignatureAlgorithm::EcdsaSha256),
        KeyAlgorithm::Ed25519 => Some(SignatureAlgorithm::Ed25519),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy)]
struct Bucket {
    tokens: f64,
    updated: OffsetDateTime,
}

/// Published documents, rebuilt when the revocation generation moves or the
/// CRL passes half its lifetime.
struct Published {
    generation: u64,
    built_at: OffsetDateTime,
    crl: Arc<Vec<u8>>,
    zone: Arc<String>,
}

/// Tunables that are not part of the issuer itself.
#[derive(Debug, Clone, Copy)]
pub struct AuthoritySettings {
    pub nonce_lifetime: Duration,
    pub renewals_per_hour: u32,
}

impl Default for AuthoritySettings {
    fn default() -> Self {
        AuthoritySettings {
            nonce_lifetime: DEFAULT_NONCE_LIFETIME,
            renewals_per_hour: DEFAULT_RENEWALS_PER_HOUR,
        }
    }
}

/// The service core, independent of transport. Cheap to share behind an
/// `Arc`; every method takes `&self`.
pub struct Authority {
    issuer: Mutex<Issuer>,
    clock: Arc<dyn Clock>,
    rng: Mutex<Box<dyn RngCore + Send>>,
    settings: AuthoritySettings,
    nonces: Mutex<HashMap<[u8; 32], NonceChallenge>>,
    buckets: Mutex<HashMap<[u8; 32], Bucket>>,
    published: Mutex<Option<Published>>,
}

impl Authority {
    pub fn new(issuer: Issuer, clock: Arc<dyn Clock>, rng: Box<dyn RngCore + Send>, settings: AuthoritySettings) -> Self {
        Authority {
            issuer: Mutex::new(issuer),
            clock,
            rng: Mutex::new(rng),
            settings,
            nonces: Mutex::new(HashMap::new()),
            buckets: Mutex::new(HashMap::new()),
            published: Mutex::new(None),
        }
    }

    /// Loads credentials and file-backed stores named by `config`.
    pub fn from_config(config: &AuthorityConfig, clock: Option<Arc<dyn Clock>>) -> Result<Self, AuthorityError> {
        let clock = clock.unwrap_or_else(|| Arc::new(SystemClock));
        let read = |p: &std::path::Path| {
            std::fs::read_to_string(p).map_err(|e| AuthorityError::Config(format!("{}: {e}", p.display())))
        };
        let mut chain = parse_pem_chain(&read(&config.issuer_chain)?)
            .map_err(|e| AuthorityError::Config(format!("{}: {e}", config.issuer_chain.display())))?;
        if chain.is_empty() {
            return Err(AuthorityError::Config(format!("{}: no certificates", config.issuer_chain.display())));
        }
        let cert = chain.remove(0);
        let key = SigningKey::from_pkcs8_pem(&read(&config.issuer_key)?)
            .map_err(|e| AuthorityError::Config(format!("{}: {e}", config.issuer_key.display())))?;
        std::fs::create_dir_all(&config.store_dir)
            .map_err(|e| AuthorityError::Config(format!("{}: {e}", config.store_dir.display())))?;
        let index = IssuedIndex::open(config.issued_path()).map_err(|e| AuthorityError::Config(e.to_string()))?;
        let revocations =
            RevocationStore::open(config.revocations_path()).map_err(|e| AuthorityError::Config(e.to_string()))?;
        let issuer = Issuer::new(cert, key, config.policy()?, clock.clone(), Box::new(rand::rngs::OsRng))
            .map_err(|e| match e {
                IssuanceError::KeyMismatch => AuthorityError::Config("issuer key does not match issuer certificate".into()),
                other => AuthorityError::Config(other.to_string()),
            })?
            .with_chain(chain)
            .with_stores(index, revocations);
        let settings = AuthoritySettings {
            nonce_lifetime: config.nonce_lifetime(),
            renewals_per_hour: config.renewals_per_hour,
        };
        Ok(Authority::new(issuer, clock, Box::new(rand::rngs::OsRng), settings))
    }

    /// Runs `f` with exclusive access to the issuer, e.g. to revoke.
    pub fn with_issuer<T>(&self, f: impl FnOnce(&mut Issuer) -> T) -> T {
        f(&mut self.issuer.lock().unwrap())
    }

    /// Parses a DER or PEM delegation request and signs it under policy.
    /// Returns the PEM chain `[DeCert, issuer, issuer chain...]`.
    pub fn handle_issue(&self, body: &[u8]) -> Result<String, AuthorityError> {
        let req = DelegationRequest::parse(body).map_err(|e| match e {
            IssuanceError::MalformedRequest(m) => AuthorityError::MalformedRequest(m),
            other => AuthorityError::MalformedRequest(other.to_string()),
        })?;
        let mut issuer = self.issuer.lock().unwrap();
        let cert = issuer.issue(&req, None)?;
        Ok(chain_to_pem(&issuer.full_chain(&cert)))
    }

    /// Hands out a fresh nonce bound to the key whose SPKI hashes to
    /// `key_hash_hex`.
    pub fn issue_nonce(&self, key_hash_hex: &str) -> Result<NonceChallenge, AuthorityError> {
        let bound_key: [u8; 32] = hex::decode(key_hash_hex.trim())
            .ok()
            .and_then(|v| v.try_into().ok())
            .ok_or_else(|| AuthorityError::MalformedRequest("key must be a hex SHA-256 key hash".into()))?;
        let now = self.clock.now();
        let mut nonce = [0u8; 32];
        self.rng.lock().unwrap().fill_bytes(&mut nonce);
        let challenge = NonceChallenge {
            nonce,
            issued_at: now,
            expires_at: now + self.settings.nonce_lifetime,
            bound_key,
        };
        let mut nonces = self.nonces.lock().unwrap();
        nonces.retain(|_, c| c.expires_at > now);
        nonces.insert(nonce, challenge.clone());
        Ok(challenge)
    }

    /// Atomically removes the nonce; it is gone whatever happens next.
    fn consume_nonce(&self, nonce: &[u8; 32]) -> Result<NonceChallenge, AuthorityError> {
        let challenge = self.nonces.lock().unwrap().remove(nonce).ok_or(AuthorityError::StaleNonce)?;
        if self.clock.now() >= challenge.expires_at {
            return Err(AuthorityError::StaleNonce);
        }
        Ok(challenge)
    }

    fn take_token(&self, key: [u8; 32]) -> Result<(), AuthorityError> {
        let rate = self.settings.renewals_per_hour;
        if rate == 0 {
            return Err(AuthorityError::RateLimited(3600));
        }
        let per_sec = rate as f64 / 3600.0;
        let now = self.clock.now();
        let mut buckets = self.buckets.lock().unwrap();
        let b = buckets.entry(key).or_insert(Bucket {
            tokens: rate as f64,
            updated: now,
        });
        let elapsed = (now - b.updated).as_seconds_f64().max(0.0);
        b.tokens = (b.tokens + elapsed * per_sec).min(rate as f64);
        b.updated = now;
        if b.tokens < 1.0 {
            return Err(AuthorityError::RateLimited(((1.0 - b.tokens) / per_sec).ceil() as u64));
        }
        b.tokens -= 1.0;
        Ok(())
    }

    /// Renews with key reuse after checking nonce, serial, revocation state,
    /// proof of possession and the per-key rate limit, in that order.
    pub fn handle_renew(&self, body: &str) -> Result<String, AuthorityError> {
        let form = parse_renewal(body)?;
        let challenge = self.consume_nonce(&form.nonce)?;
        let mut issuer = self.issuer.lock().unwrap();
        issuer.refresh()?;
        let existing = issuer
            .index()
            .get(&form.serial)
            .cloned()
            .ok_or_else(|| AuthorityError::UnknownSerial(form.serial.clone()))?;
        if issuer.revocations().is_revoked(&form.serial) {
            return Err(AuthorityError::RevokedSubject(form.serial));
        }
        let key = existing.public_key();
        if key.fingerprint() != challenge.bound_key {
            return Err(AuthorityError::BadSignature("nonce was issued for a different key".into()));
        }
        let alg = signature_algorithm(key).ok_or_else(|| AuthorityError::BadSignature("unsupported key".into()))?;
        if !key.verify(alg, &renewal_message(&form.serial, &form.nonce), &form.signature) {
            return Err(AuthorityError::BadSignature("signature does not match the subject key".into()));
        }
        self.take_token(challenge.bound_key)?;
        let renewed = issuer.renew(&existing, RenewKey::Reuse)?;
        Ok(chain_to_pem(&issuer.full_chain(&renewed)))
    }

    fn published(&self) -> Result<(Arc<Vec<u8>>, Arc<String>), AuthorityError> {
        let mut issuer = self.issuer.lock().unwrap();
        issuer.refresh()?;
        let now = self.clock.now();
        let generation = issuer.revocations().generation();
        let mut cache = self.published.lock().unwrap();
        let fresh = cache
            .as_ref()
            .is_some_and(|p| p.generation == generation && now - p.built_at < crate::revocation::DEFAULT_CRL_LIFETIME / 2);
        if !fresh {
            let crl = issuer.crl()?;
            let zone = issuer.zone()?;
            *cache = Some(Published {
                generation,
                built_at: now,
                crl: Arc::new(crl.to_der().to_vec()),
                zone: Arc::new(zone.to_zone_file()),
            });
        }
        let p = cache.as_ref().unwrap();
        Ok((p.crl.clone(), p.zone.clone()))
    }

    pub fn crl_der(&self) -> Result<Arc<Vec<u8>>, AuthorityError> {
        Ok(self.published()?.0)
    }

    pub fn zone_text(&self) -> Result<Arc<String>, AuthorityError> {
        Ok(self.published()?.1)
    }
}
