// SPDX-License-Identifier: Apache-2.0

//! Loopback TLS 1.3 server and probing client for exercising chains end to
//! end.

mod client;
mod server;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::fixtures::{load_anchors, load_fixture, load_manifest, CorpusError, ManifestEntry};
use crate::keys::SigningKey;
use crate::validation::{Verdict, ViolationCode};

pub use client::{probe, HandshakeOutcome, ProbeOptions};
pub use server::{TlsServer, PAGE};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("private key does not match the leaf certificate")]
    KeyMismatch,
    #[error("cannot bind {0}: {1}")]
    Bind(SocketAddr, std::io::Error),
    #[error("cannot reach {0}: {1}")]
    Network(SocketAddr, std::io::Error),
    #[error("tls configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{} manifest cell(s) disagree with the handshake", .0.len())]
    CorpusMismatch(Vec<CellOutcome>),
}

pub(crate) fn provider() -> Arc<rustls::crypto::CryptoProvider> {
    Arc::new(rustls::crypto::ring::default_provider())
}

/// One manifest row replayed over TLS.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub entry: ManifestEntry,
    pub connected: bool,
    pub codes: Vec<ViolationCode>,
}

impl CellOutcome {
    pub fn matches(&self) -> bool {
        let expected_connect = self.entry.verdict == Verdict::Accept;
        self.connected == expected_connect && self.codes == self.entry.codes
    }
}

/// Serves every fixture in the corpus at `dir` and probes each manifest row.
///
/// All rows are returned when they all match; otherwise the mismatching rows
/// come back inside [`HarnessError::CorpusMismatch`].
pub fn run_corpus(dir: &Path) -> Result<Vec<CellOutcome>, HarnessError> {
    let manifest = load_manifest(&dir.join("manifest.tsv"))?;
    let anchors = load_anchors(&dir.join("anchors.pem"))?;
    let mut by_fixture: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        by_fixture.entry(e.fixture.as_str()).or_default().push(e);
    }

    let mut outcomes = Vec::new();
    for (name, entries) in by_fixture {
        let fixture_dir = dir.join(name);
        let loaded = load_fixture(&fixture_dir)?;
        let key = SigningKey::from_pkcs8_pem(&loaded.key_pem).map_err(|e| {
            CorpusError::Invalid(fixture_dir.join("key.pem").display().to_string(), e.to_string())
        })?;
        let server = TlsServer::start(&loaded.chain, key, "127.0.0.1:0".parse().unwrap())?;
        for entry in entries {
            let mut options = ProbeOptions::new(anchors.clone(), entry.mode);
            options.revocation = loaded.revocation.clone();
            options.at = Some(manifest.at);
            let outcome = probe(&entry.hostname, server.addr(), &options)?;
            outcomes.push(CellOutcome {
                entry: entry.clone(),
                connected: outcome.connected,
                codes: outcome.report.map(|r| r.codes()).unwrap_or_default(),
            });
        }
        server.shutdown();
    }

    let bad: Vec<CellOutcome> = outcomes.iter().filter(|o| !o.matches()).cloned().collect();
    if bad.is_empty() {
        Ok(outcomes)
    } else {
        Err(HarnessError::CorpusMismatch(bad))
    }
}
