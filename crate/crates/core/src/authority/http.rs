// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::oneshot;

use super::{Authority, AuthorityError};

const PEM_CHAIN: &str = "application/pem-certificate-chain";
const PKIX_CRL: &str = "application/pkix-crl";
const DNS_ZONE: &str = "text/dns";
const TEXT: &str = "text/plain; charset=utf-8";

fn typed(status: StatusCode, content_type: &'static str, body: impl Into<axum::body::Body>) -> Response {
    let mut r = Response::new(body.into());
    *r.status_mut() = status;
    r.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    r
}

impl IntoResponse for AuthorityError {
    /// `error<TAB>code<TAB>message`, then one `code<TAB>detail` line per
    /// policy violation.
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut body = format!("error\t{}\t{}\n", self.code(), self);
        if let AuthorityError::PolicyViolation(v) = &self {
            for v in v {
                body.push_str(&format!("{v}\n"));
            }
        }
        let mut r = typed(status, TEXT, body);
        if let AuthorityError::RateLimited(secs) = self {
            r.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(secs));
        }
        r
    }
}

type Shared = State<Arc<Authority>>;

async fn delegations(State(a): Shared, body: Bytes) -> Result<Response, AuthorityError> {
    let pem = a.handle_issue(&body)?;
    Ok(typed(StatusCode::CREATED, PEM_CHAIN, pem))
}

async fn renewals(State(a): Shared, body: Bytes) -> Result<Response, AuthorityError> {
    let text = std::str::from_utf8(&body).map_err(|_| AuthorityError::MalformedRequest("body is not UTF-8".into()))?;
    let pem = a.handle_renew(text)?;
    Ok(typed(StatusCode::OK, PEM_CHAIN, pem))
}

async fn nonce(State(a): Shared, Query(q): Query<HashMap<String, String>>) -> Result<Response, AuthorityError> {
    let key = q
        .get("key")
        .ok_or_else(|| AuthorityError::MalformedRequest("missing key parameter".into()))?;
    let challenge = a.issue_nonce(key)?;
    let mut r = typed(StatusCode::OK, TEXT, challenge.to_text());
    r.headers_mut()
        .insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    Ok(r)
}

async fn crl(State(a): Shared) -> Result<Response, AuthorityError> {
    Ok(typed(StatusCode::OK, PKIX_CRL, a.crl_der()?.as_ref().clone()))
}

async fn zone(State(a): Shared) -> Result<Response, AuthorityError> {
    Ok(typed(StatusCode::OK, DNS_ZONE, a.zone_text()?.as_ref().clone()))
}

async fn healthz() -> Response {
    typed(StatusCode::OK, TEXT, "ok\n")
}

pub fn router(authority: Arc<Authority>) -> Router {
    Router::new()
        .route("/v1/delegations", post(delegations))
        .route("/v1/renewals", post(renewals))
        .route("/v1/nonce", get(nonce))
        .route("/v1/crl.der", get(crl))
        .route("/v1/revocations.zone", get(zone))
        .route("/v1/healthz", get(healthz))
        .with_state(authority)
}

/// The HTTP service on its own runtime thread.
pub struct AuthorityServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl AuthorityServer {
    pub fn start(authority: Arc<Authority>, addr: SocketAddr) -> std::io::Result<Self> {
        let listener = std::net::TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let (tx, rx) = oneshot::channel();
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, router(authority))
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        });
        Ok(AuthorityServer {
            addr,
            stop: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server exits, e.g. when run from the command line.
    pub fn wait(mut self) -> std::io::Result<()> {
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        self.wait()
    }
}

impl Drop for AuthorityServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
