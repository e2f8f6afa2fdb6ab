// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use super::store::RevocationStore;
use super::RevocationError;
use crate::cert::{ParsedCertificate, Serial};
use crate::name_scope::DomainName;

pub const RECORD_LABEL: &str = "_decert-revoked";
pub const ZONE_TTL: u32 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DnsStatus {
    NotRevoked,
    Revoked,
    LookupFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("lookup timed out")]
    Timeout,
    #[error("server failure")]
    ServFail,
}

/// TXT lookups. Implementations must tolerate concurrent queries.
pub trait TxtResolver: Send + Sync {
    /// All TXT strings at `name`; an empty list means NXDOMAIN or no data.
    fn query_txt(&self, name: &DomainName) -> Result<Vec<String>, LookupError>;
}

/// `<hex(serial)>._decert-revoked.<issuer_domain>`
pub fn dns_record_name(serial: &Serial, issuer_domain: &DomainName) -> DomainName {
    let label = serial.to_hex();
    DomainName::parse_dns_owner(&format!("{label}.{RECORD_LABEL}.{issuer_domain}"))
        .expect("hex label under a valid domain is a valid owner name")
}

/// Domain under which revocations of `cert` are published: its revocation
/// suffix extension when present, else the issuer's common name.
pub fn revocation_domain(cert: &ParsedCertificate) -> Option<DomainName> {
    cert.revocation_dns_suffix()
        .cloned()
        .or_else(|| DomainName::parse(cert.issuer_cn()).ok())
}

/// Issues exactly one TXT query.
pub fn check_dns(cert: &ParsedCertificate, resolver: &dyn TxtResolver) -> DnsStatus {
    let Some(domain) = revocation_domain(cert) else {
        return DnsStatus::LookupFailed;
    };
    match resolver.query_txt(&dns_record_name(cert.serial(), &domain)) {
        Ok(values) if values.iter().any(|v| v.starts_with("revoked=1")) => DnsStatus::Revoked,
        Ok(_) => DnsStatus::NotRevoked,
        Err(_) => DnsStatus::LookupFailed,
    }
}

/// An in-memory snapshot of published revocation records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationZone {
    records: BTreeMap<DomainName, String>,
}

impl RevocationZone {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: DomainName, value: impl Into<String>) {
        self.records.insert(name, value.into());
    }

    pub fn get(&self, name: &DomainName) -> Option<&str> {
        self.records.get(name).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DomainName, &str)> {
        self.records.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// Master-file text, one `name. TTL IN TXT "value"` line per record.
    pub fn to_zone_file(&self) -> String {
        self.records
            .iter()
            .map(|(name, value)| format!("{name}. {ZONE_TTL} IN TXT \"{}\"\n", escape(value)))
            .collect()
    }

    /// Parses the subset of master-file syntax that `to_zone_file` emits,
    /// plus comments, blank lines and optional TTL/class fields.
    pub fn parse_zone_file(text: &str) -> Result<Self, RevocationError> {
        let mut zone = RevocationZone::new();
        for (n, raw) in text.lines().enumerate() {
            let bad = |why: &str| RevocationError::MalformedZone(format!("line {}: {why}", n + 1));
            let line = strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            let (head, quoted) = line.split_once('"').ok_or_else(|| bad("missing TXT string"))?;
            let fields: Vec<&str> = head.split_whitespace().collect();
            let (owner, rest) = fields.split_first().ok_or_else(|| bad("missing owner name"))?;
            let rest: Vec<String> = rest.iter().map(|f| f.to_ascii_uppercase()).collect();
            let rtype_ok = match rest.as_slice() {
                [t] => t == "TXT",
                [a, t] => (a == "IN" || a.parse::<u32>().is_ok()) && t == "TXT",
                [ttl, class, t] => ttl.parse::<u32>().is_ok() && class == "IN" && t == "TXT",
                _ => false,
            };
            if !rtype_ok {
                return Err(bad("expected [TTL] [IN] TXT"));
            }
            let name = DomainName::parse_dns_owner(owner.strip_suffix('.').unwrap_or(owner))
                .map_err(|e| bad(&e.to_string()))?;
            let value = unescape_quoted(&format!("\"{quoted}")).ok_or_else(|| bad("bad TXT string"))?;
            zone.insert(name, value);
        }
        Ok(zone)
    }
}

impl TxtResolver for RevocationZone {
    fn query_txt(&self, name: &DomainName) -> Result<Vec<String>, LookupError> {
        Ok(self.get(name).map(|v| vec![v.to_owned()]).unwrap_or_default())
    }
}

fn escape(value: &str) -> String {
    value.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Parses one or more adjacent quoted strings, concatenated.
fn unescape_quoted(text: &str) -> Option<String> {
    let mut out = String::new();
    let mut chars = text.trim().chars();
    loop {
        match chars.next() {
            None => return Some(out),
            Some(c) if c.is_whitespace() => continue,
            Some('"') => {}
            Some(_) => return None,
        }
        loop {
            match chars.next()? {
                '"' => break,
                '\\' => out.push(chars.next()?),
                c => out.push(c),
            }
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if quoted => escaped = true,
            '"' => quoted = !quoted,
            ';' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Publishes every record in `store` under `issuer_domain`.
pub fn export_zone(store: &RevocationStore, issuer_domain: &DomainName) -> RevocationZone {
    let mut zone = RevocationZone::new();
    for r in store.records() {
        zone.insert(
            dns_record_name(&r.serial, issuer_domain),
            format!("revoked=1;t={}", r.revoked_at.unix_timestamp()),
        );
    }
    zone
}

/// Wraps a resolver and counts queries.
pub struct CountingResolver<R> {
    inner: R,
    count: AtomicUsize,
    log: Mutex<Vec<DomainName>>,
}

impl<R: TxtResolver> CountingResolver<R> {
    pub fn new(inner: R) -> Self {
        CountingResolver {
            inner,
            count: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn queried(&self) -> Vec<DomainName> {
        self.log.lock().unwrap().clone()
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::SeqCst);
        self.log.lock().unwrap().clear();
    }

    pub fn inner(&self) -> &R {
        &self.inner
    }
}

impl<R: TxtResolver> TxtResolver for CountingResolver<R> {
    fn query_txt(&self, name: &DomainName) -> Result<Vec<String>, LookupError> {
        self.count.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap().push(name.clone());
        self.inner.query_txt(name)
    }
}

/// A resolver that always fails, for fault injection.
#[derive(Debug, Clone)]
pub struct FailingResolver(pub LookupError);

impl TxtResolver for FailingResolver {
    fn query_txt(&self, _: &DomainName) -> Result<Vec<String>, LookupError> {
        Err(self.0.clone())
    }
}
