// SPDX-License-Identifier: Apache-2.0

use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rustls::client::danger::{HandshakeSignatureValid, ServerCertVerified, ServerCertVerifier};
use rustls::pki_types::{CertificateDer, ServerName, UnixTime};
use rustls::{CertificateError, ClientConfig, ClientConnection, DigitallySignedStruct, SignatureScheme, StreamOwned};
use time::OffsetDateTime;

use crate::cert::ParsedCertificate;
use crate::keys::SignatureAlgorithm;
use crate::name_scope::DomainName;
use crate::validation::{validate_chain, Mode, RevocationPolicy, ValidationInput, ValidationReport, ViolationCode};

use super::{provider, HarnessError};

#[derive(Debug, Clone)]
pub struct HandshakeOutcome {
    pub connected: bool,
    pub error: Option<String>,
    pub report: Option<ValidationReport>,
    pub page: Option<Vec<u8>>,
}

/// What the probing client checks against.
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub anchors: Vec<ParsedCertificate>,
    pub mode: Mode,
    pub revocation: RevocationPolicy,
    /// Validation instant; the current time when absent.
    pub at: Option<OffsetDateTime>,
    pub timeout: Duration,
}

impl ProbeOptions {
    pub fn new(anchors: Vec<ParsedCertificate>, mode: Mode) -> Self {
        ProbeOptions {
            anchors,
            mode,
            revocation: RevocationPolicy::None,
            at: None,
            timeout: Duration::from_secs(5),
        }
    }
}

/// Hands the presented chain to [`validate_chain`] and keeps the report.
#[derive(Debug)]
struct DecertVerifier {
    hostname: DomainName,
    options: ProbeOptions,
    report: Mutex<Option<ValidationReport>>,
}

fn certificate_error(report: &ValidationReport) -> CertificateError {
    match report.codes().first() {
        Some(ViolationCode::Expired) => CertificateError::Expired,
        Some(ViolationCode::NotYetValid) => CertificateError::NotValidYet,
        Some(ViolationCode::Revoked) => CertificateError::Revoked,
        Some(ViolationCode::UntrustedRoot) => CertificateError::UnknownIssuer,
        Some(ViolationCode::SignatureInvalid) => CertificateError::BadSignature,
        Some(ViolationCode::HostnameNotInScope | ViolationCode::HostnameExcluded) => CertificateError::NotValidForName,
        _ => CertificateError::ApplicationVerificationFailure,
    }
}

impl ServerCertVerifier for DecertVerifier {
    fn verify_server_cert(
        &self,
        end_entity: &CertificateDer<'_>,
        intermediates: &[CertificateDer<'_>],
        _server_name: &ServerName<'_>,
        _ocsp: &[u8],
        now: UnixTime,
    ) -> Result<ServerCertVerified, rustls::Error> {
        let chain: Result<Vec<ParsedCertificate>, _> = std::iter::once(end_entity)
            .chain(intermediates)
            .map(|c| ParsedCertificate::from_der(c.as_ref()))
            .collect();
        let chain = chain.map_err(|_| rustls::Error::InvalidCertificate(CertificateError::BadEncoding))?;
        let at = self.options.at.unwrap_or_else(|| {
            OffsetDateTime::from_unix_timestamp(now.as_secs() as i64).unwrap_or(OffsetDateTime::UNIX_EPOCH)
        });
        let input = ValidationInput {
            chain,
            trust_anchors: self.options.anchors.clone(),
            hostname: self.hostname.clone(),
            at,
            revocation: self.options.revocation.clone(),
            mode: self.options.mode,
            config: Default::default(),
        };
        let report = validate_chain(&input);
        let verdict = if report.is_accept() {
            Ok(ServerCertVerified::assertion())
        } else {
            Err(rustls::Error::InvalidCertificate(certificate_error(&report)))
        };
        *self.report.lock().unwrap() = Some(report);
        verdict
    }

    fn verify_tls12_signature(
        &self,
        _: &[u8],
        _: &CertificateDer<'_>,
        _: &DigitallySignedStruct,
    ) -> Result<HandshakeSignatureValid, rustls::Error> {
        Err(rustls::Error::General("TLS 1.2 is not offered".into()))
    }

    fn verify_tls13_signature(
        &self,
        message: &[u8],
        cert: &CertificateDer<'_>,
        dss: &DigitallySignedStruct,
    ) -> Result<HandshakeSignatureValid, rustls::Error> {
        let cert = ParsedCertificate::from_der(cert.as_ref())
            .map_err(|_| rustls::Error::InvalidCertificate(CertificateError::BadEncoding))?;
        let alg = match dss.scheme {
            SignatureScheme::ECDSA_NISTP256_SHA256 => SignatureAlgorithm::EcdsaSha256,
            SignatureScheme::ED25519 => SignatureAlgorithm::Ed25519,
            _ => return Err(rustls::Error::PeerMisbehaved(rustls::PeerMisbehaved::SignedHandshakeWithUnadvertisedSigScheme)),
        };
        if cert.public_key().verify(alg, message, dss.signature()) {
            Ok(HandshakeSignatureValid::assertion())
        } else {
            Err(rustls::Error::InvalidCertificate(CertificateError::BadSignature))
        }
    }

    fn supported_verify_schemes(&self) -> Vec<SignatureScheme> {
        vec![SignatureScheme::ECDSA_NISTP256_SHA256, SignatureScheme::ED25519]
    }
}

/// Connects to `addr`, sends `hostname` as SNI and fetches `/`.
///
/// Only failure to reach the server is an error; a rejected chain is a
/// normal outcome with `connected == false` and the report attached.
pub fn probe(hostname: &DomainName, addr: SocketAddr, options: &ProbeOptions) -> Result<HandshakeOutcome, HarnessError> {
    let verifier = Arc::new(DecertVerifier {
        hostname: hostname.clone(),
        options: options.clone(),
        report: Mutex::new(None),
    });
    let config = ClientConfig::builder_with_provider(provider())
        .with_protocol_versions(&[&rustls::version::TLS13])
        .map_err(|e| HarnessError::Config(e.to_string()))?
        .dangerous()
        .with_custom_certificate_verifier(verifier.clone())
        .with_no_client_auth();
    let name = ServerName::try_from(hostname.as_str().to_owned()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let conn = ClientConnection::new(Arc::new(config), name).map_err(|e| HarnessError::Config(e.to_string()))?;

    let sock = TcpStream::connect_timeout(&addr, options.timeout).map_err(|e| HarnessError::Network(addr, e))?;
    sock.set_read_timeout(Some(options.timeout)).map_err(|e| HarnessError::Network(addr, e))?;
    sock.set_write_timeout(Some(options.timeout)).map_err(|e| HarnessError::Network(addr, e))?;
    let mut tls = StreamOwned::new(conn, sock);

    let take_report = || verifier.report.lock().unwrap().take();
    let failed = |e: std::io::Error, report| HandshakeOutcome {
        connected: false,
        error: Some(e.to_string()),
        report,
        page: None,
    };

    while tls.conn.is_handshaking() {
        if let Err(e) = tls.conn.complete_io(&mut tls.sock) {
            return Ok(failed(e, take_report()));
        }
    }
    let request = format!("GET / HTTP/1.1\r\nHost: {hostname}\r\nConnection: close\r\n\r\n");
    if let Err(e) = tls.write_all(request.as_bytes()).and_then(|_| tls.flush()) {
        return Ok(failed(e, take_report()));
    }
    let mut response = Vec::new();
    match tls.read_to_end(&mut response) {
        Ok(_) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof && !response.is_empty() => {}
        Err(e) => return Ok(failed(e, take_report())),
    }
    let page = response
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .map(|i| response[i + 4..].to_vec());
    Ok(HandshakeOutcome {
        connected: true,
        error: None,
        report: take_report(),
        page,
    })
}
