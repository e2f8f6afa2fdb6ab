// SPDX-License-Identifier: Apache-2.0

//! Runs the delegation authority over HTTP on loopback and drives it with a
//! minimal client: issue, nonce, renew, replay, then fetch the CRL.
//!
//! ```text
//! cargo run --example authority_service
//! ```

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use decert::authority::{renewal_body, Authority, AuthorityServer, AuthoritySettings, NonceChallenge};
use decert::cert::{parse_pem_chain, KeyUsageSet};
use decert::clock::SystemClock;
use decert::fixtures::{Pki, DEFAULT_SEED};
use decert::issuance::{create_request, Issuer, IssuerPolicy};
use decert::name_scope::DomainScope;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use time::OffsetDateTime;

fn http(addr: SocketAddr, method: &str, path: &str, body: &[u8]) -> (u16, Vec<u8>) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "{method} {path} HTTP/1.1\r\nHost: authority\r\nContent-Length: {}\r\nConnection: close\r\n\r\n", body.len()).unwrap();
    s.write_all(body).unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let status = std::str::from_utf8(&raw[9..12]).unwrap().parse().unwrap();
    (status, raw[split + 4..].to_vec())
}

fn main() {
    let mut pki = Pki::new(DEFAULT_SEED, OffsetDateTime::now_utc());
    let (owner, owner_key) = pki.eec("abc.com", &["abc.com", "*.abc.com"]);
    let issuer = Issuer::new(owner, owner_key, IssuerPolicy::default(), Arc::new(SystemClock), Box::new(ChaCha20Rng::seed_from_u64(9)))
        .unwrap()
        .with_chain(vec![pki.intermediate.clone()]);
    let authority = Authority::new(issuer, Arc::new(SystemClock), Box::new(ChaCha20Rng::from_entropy()), AuthoritySettings::default());
    let server = AuthorityServer::start(Arc::new(authority), "127.0.0.1:0".parse().unwrap()).unwrap();
    let addr = server.addr();
    println!("authority on http://{addr}");

    let cdn_key = pki.new_key();
    let scope = DomainScope::parse(&["*.content.abc.com"], &[]).unwrap();
    let req = create_request("cdn.com", &cdn_key, &scope, KeyUsageSet::from_bits([0]).unwrap(), 0).unwrap();
    let (status, body) = http(addr, "POST", "/v1/delegations", req.to_der());
    let chain = parse_pem_chain(std::str::from_utf8(&body).unwrap()).unwrap();
    println!("POST /v1/delegations -> {status}, serial {}", chain[0].serial());

    let fp = cdn_key.public_key_info().fingerprint_hex();
    let (status, body) = http(addr, "GET", &format!("/v1/nonce?key={fp}"), b"");
    let nonce = NonceChallenge::parse_nonce(std::str::from_utf8(&body).unwrap()).unwrap();
    println!("GET /v1/nonce -> {status}");

    let renewal = renewal_body(chain[0].serial(), &nonce, &cdn_key);
    let (status, body) = http(addr, "POST", "/v1/renewals", renewal.as_bytes());
    let renewed = parse_pem_chain(std::str::from_utf8(&body).unwrap()).unwrap();
    println!("POST /v1/renewals -> {status}, new serial {}", renewed[0].serial());
    let (status, body) = http(addr, "POST", "/v1/renewals", renewal.as_bytes());
    print!("replay -> {status} {}", String::from_utf8_lossy(&body));

    let (status, body) = http(addr, "GET", "/v1/crl.der", b"");
    println!("GET /v1/crl.der -> {status}, {} bytes", body.len());
    server.shutdown().unwrap();
}
