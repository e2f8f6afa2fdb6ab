// SPDX-License-Identifier: Apache-2.0

//! The owner's side of a delegation: a CDN builds a signed request, the owner
//! checks it against policy and signs a DeCert, and a client validates the
//! resulting chain.
//!
//! ```text
//! cargo run --example issue_delegation
//! ```

use std::sync::Arc;

use decert::cert::{chain_to_pem, KeyUsageSet};
use decert::clock::FixedClock;
use decert::fixtures::{Pki, DEFAULT_AT, DEFAULT_SEED};
use decert::issuance::{create_request, Issuer, IssuerPolicy};
use decert::name_scope::DomainScope;
use decert::validation::{validate_chain, ValidationInput};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() {
    let mut pki = Pki::new(DEFAULT_SEED, DEFAULT_AT);
    let (owner_cert, owner_key) = pki.eec("abc.com", &["abc.com", "*.abc.com"]);
    let cdn_key = pki.new_key();

    let scope = DomainScope::parse(&["*.content.abc.com"], &[]).unwrap();
    let request = create_request("cdn.com", &cdn_key, &scope, KeyUsageSet::from_bits([0]).unwrap(), 0).unwrap();
    println!("request: {} bytes, proof of possession ok = {}", request.to_der().len(), request.verify_proof());

    let clock = Arc::new(FixedClock::new(DEFAULT_AT));
    let mut issuer = Issuer::new(
        owner_cert,
        owner_key,
        IssuerPolicy::default(),
        clock,
        Box::new(ChaCha20Rng::seed_from_u64(1)),
    )
    .unwrap()
    .with_chain(vec![pki.intermediate.clone()]);
    let decert = issuer.issue(&request, None).unwrap();
    println!(
        "issued {} -> {} serial {} valid {} .. {}",
        decert.issuer_cn(),
        decert.subject_cn(),
        decert.serial(),
        decert.not_before(),
        decert.not_after()
    );

    let chain = issuer.full_chain(&decert);
    for host in ["x.content.abc.com", "www.abc.com"] {
        let input = ValidationInput::new(chain.clone(), pki.anchors(), host.parse().unwrap(), DEFAULT_AT);
        let report = validate_chain(&input);
        println!("{host}: {:?} {:?}", report.verdict(), report.codes());
    }

    print!("{}", chain_to_pem(&chain[..1]));
}
