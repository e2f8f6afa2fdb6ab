// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use rustls::pki_types::CertificateDer;
use rustls::server::{ClientHello, ResolvesServerCert};
use rustls::sign::{CertifiedKey, Signer as TlsSigner, SigningKey as TlsSigningKey};
use rustls::{ServerConfig, ServerConnection, SignatureAlgorithm as TlsAlg, SignatureScheme, StreamOwned};

use crate::cert::ParsedCertificate;
use crate::keys::{KeyAlgorithm, SigningKey};

use super::{provider, HarnessError};

pub const PAGE: &[u8] = b"<!doctype html><title>decert</title><p>delegated content</p>\n";

/// Presents our signing keys to rustls.
struct KeyAdapter(Arc<SigningKey>);

impl fmt::Debug for KeyAdapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyAdapter({})", self.0.algorithm())
    }
}

impl KeyAdapter {
    fn scheme(&self) -> SignatureScheme {
        match self.0.algorithm() {
            KeyAlgorithm::Ed25519 => SignatureScheme::ED25519,
            _ => SignatureScheme::ECDSA_NISTP256_SHA256,
        }
    }
}

impl TlsSigningKey for KeyAdapter {
    fn choose_scheme(&self, offered: &[SignatureScheme]) -> Option<Box<dyn TlsSigner>> {
        let scheme = self.scheme();
        offered.contains(&scheme).then(|| {
            Box::new(SchemeSigner {
                key: self.0.clone(),
                scheme,
            }) as Box<dyn TlsSigner>
        })
    }

    fn algorithm(&self) -> TlsAlg {
        match self.0.algorithm() {
            KeyAlgorithm::Ed25519 => TlsAlg::ED25519,
            _ => TlsAlg::ECDSA,
        }
    }
}

struct SchemeSigner {
    key: Arc<SigningKey>,
    scheme: SignatureScheme,
}

impl fmt::Debug for SchemeSigner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SchemeSigner({:?})", self.scheme)
    }
}

impl TlsSigner for SchemeSigner {
    fn sign(&self, message: &[u8]) -> Result<Vec<u8>, rustls::Error> {
        Ok(self.key.sign(message))
    }

    fn scheme(&self) -> SignatureScheme {
        self.scheme
    }
}

/// Always presents the one configured chain, whatever the SNI.
#[derive(Debug)]
struct FixedChain(Arc<CertifiedKey>);

impl ResolvesServerCert for FixedChain {
    fn resolve(&self, _: ClientHello<'_>) -> Option<Arc<CertifiedKey>> {
        Some(self.0.clone())
    }
}

/// A loopback HTTPS server presenting a fixed chain. Dropping it shuts it
/// down.
pub struct TlsServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    served: Arc<AtomicUsize>,
    thread: Option<JoinHandle<()>>,
}

impl TlsServer {
    /// `chain` is leaf first and is presented verbatim.
    pub fn start(chain: &[ParsedCertificate], key: SigningKey, addr: SocketAddr) -> Result<Self, HarnessError> {
        let leaf = chain.first().ok_or_else(|| HarnessError::Config("empty chain".into()))?;
        if key.public_key_info() != *leaf.public_key() {
            return Err(HarnessError::KeyMismatch);
        }
        let certs: Vec<CertificateDer<'static>> =
            chain.iter().map(|c| CertificateDer::from(c.raw_der().to_vec())).collect();
        let certified = CertifiedKey::new(certs, Arc::new(KeyAdapter(Arc::new(key))));
        let config = ServerConfig::builder_with_provider(provider())
            .with_protocol_versions(&[&rustls::version::TLS13])
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .with_no_client_auth()
            .with_cert_resolver(Arc::new(FixedChain(Arc::new(certified))));
        let config = Arc::new(config);

        let listener = TcpListener::bind(addr).map_err(|e| HarnessError::Bind(addr, e))?;
        let addr = listener.local_addr().map_err(|e| HarnessError::Bind(addr, e))?;
        let stop = Arc::new(AtomicBool::new(false));
        let served = Arc::new(AtomicUsize::new(0));
        let thread = {
            let stop = stop.clone();
            let served = served.clone();
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let config = config.clone();
                    let served = served.clone();
                    std::thread::spawn(move || {
                        if serve_one(config, stream).is_ok() {
                            served.fetch_add(1, Ordering::SeqCst);
                        }
                    });
                }
            })
        };
        Ok(TlsServer {
            addr,
            stop,
            served,
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Connections that completed a handshake and received the page.
    pub fn pages_served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }

    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        if let Some(t) = self.thread.take() {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
            let _ = t.join();
        }
    }
}

impl Drop for TlsServer {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

fn serve_one(config: Arc<ServerConfig>, stream: TcpStream) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    stream.set_write_timeout(Some(Duration::from_secs(5)))?;
    let conn = ServerConnection::new(config).map_err(std::io::Error::other)?;
    let mut tls = StreamOwned::new(conn, stream);
    let mut request = Vec::new();
    let mut buf = [0u8; 1024];
    while !request.windows(4).any(|w| w == b"\r\n\r\n") {
        let n = tls.read(&mut buf)?;
        if n == 0 {
            return Err(std::io::ErrorKind::UnexpectedEof.into());
        }
        request.extend_from_slice(&buf[..n]);
        if request.len() > 16 * 1024 {
            return Err(std::io::ErrorKind::InvalidData.into());
        }
    }
    let head = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        PAGE.len()
    );
    tls.write_all(head.as_bytes())?;
    tls.write_all(PAGE)?;
    tls.conn.send_close_notify();
    tls.flush()?;
    Ok(())
}
