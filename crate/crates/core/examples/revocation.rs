// SPDX-License-Identifier: Apache-2.0

//! Revoking a DeCert and watching both the CRL and the DNS route pick it up.
//!
//! ```text
//! cargo run --example revocation
//! ```

use std::sync::Arc;

use decert::clock::FixedClock;
use decert::fixtures::{Corpus, DEFAULT_AT, DEFAULT_SEED};
use decert::revocation::{build_crl, export_zone, CountingResolver, RevocationStore, DEFAULT_CRL_LIFETIME};
use decert::validation::{validate_chain, FailMode, RevocationPolicy, ValidationInput};

fn main() {
    let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
    let f = corpus.fixture("fig1").unwrap();
    let (owner, owner_key) = &corpus.owner;
    let clock = FixedClock::new(DEFAULT_AT);
    let mut store = RevocationStore::in_memory();

    let check = |store: &RevocationStore, label: &str| {
        let crl = build_crl(store, owner, owner_key, &clock, DEFAULT_CRL_LIFETIME).unwrap();
        let zone = export_zone(store, &owner.subject_cn().parse().unwrap());
        let resolver = Arc::new(CountingResolver::new(zone));
        for policy in [
            RevocationPolicy::Crl(vec![crl], FailMode::Closed),
            RevocationPolicy::Dns(resolver.clone(), FailMode::Closed),
        ] {
            let name = format!("{policy:?}");
            let input = ValidationInput::new(f.chain.clone(), corpus.pki.anchors(), "x.content.abc.com".parse().unwrap(), DEFAULT_AT)
                .with_revocation(policy);
            let report = validate_chain(&input);
            println!("{label:<7} {name:<28} {:?} {:?}", report.verdict(), report.codes());
        }
        println!("        dns queries: {}", resolver.count());
    };

    check(&store, "before");
    store.revoke(f.chain[0].serial(), "keyCompromise", &clock).unwrap();
    check(&store, "after");

    let zone = export_zone(&store, &owner.subject_cn().parse().unwrap());
    print!("{}", zone.to_zone_file());
}
