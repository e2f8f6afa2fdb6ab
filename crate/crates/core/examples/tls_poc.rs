// SPDX-License-Identifier: Apache-2.0

//! Serves the localhost delegation over TLS 1.3 and probes it as a
//! delegation-aware client and as a legacy strict client.
//!
//! ```text
//! cargo run --example tls_poc
//! ```

use decert::fixtures::{Corpus, DEFAULT_AT, DEFAULT_SEED};
use decert::harness::{probe, ProbeOptions, TlsServer};
use decert::validation::Mode;

fn main() {
    let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
    let poc = corpus.fixture("poc").unwrap();
    let server = TlsServer::start(&poc.chain, poc.key.clone(), "127.0.0.1:0".parse().unwrap()).unwrap();
    println!("serving {} on {}", poc.chain[0].scope(), server.addr());

    for mode in [Mode::DecertAware, Mode::Strict] {
        let mut options = ProbeOptions::new(corpus.pki.anchors(), mode);
        options.at = Some(DEFAULT_AT);
        for host in ["a.a.localhost", "b.a.localhost", "c.b.a.localhost"] {
            let out = probe(&host.parse().unwrap(), server.addr(), &options).unwrap();
            let codes = out.report.as_ref().map(|r| r.codes()).unwrap_or_default();
            let page = out.page.as_ref().map(|p| String::from_utf8_lossy(p).trim().to_owned());
            println!("{mode:<13} {host:<16} connected={:<5} {codes:?} {}", out.connected, page.unwrap_or_default());
        }
    }
    println!("pages served: {}", server.pages_served());
}
