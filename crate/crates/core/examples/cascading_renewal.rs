// SPDX-License-Identifier: Apache-2.0

//! Renewing a mid-chain DeCert. Keeping its key leaves the certificates it
//! already signed intact; rotating the key orphans them.
//!
//! ```text
//! cargo run --example cascading_renewal
//! ```

use std::sync::Arc;

use decert::cert::KeyUsageSet;
use decert::clock::{Clock, FixedClock};
use decert::fixtures::{Pki, DEFAULT_AT, DEFAULT_SEED};
use decert::issuance::{create_request, Issuer, IssuerPolicy, RenewKey};
use decert::name_scope::DomainScope;
use decert::validation::{validate_chain, ValidationInput};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use time::Duration;

fn main() {
    let mut pki = Pki::new(DEFAULT_SEED, DEFAULT_AT);
    let (owner, owner_key) = pki.eec("abc.com", &["abc.com", "*.abc.com"]);
    let clock = Arc::new(FixedClock::new(DEFAULT_AT));
    let mut owner_station = Issuer::new(owner.clone(), owner_key, IssuerPolicy::default(), clock.clone(), Box::new(ChaCha20Rng::seed_from_u64(1))).unwrap();

    let ku = KeyUsageSet::from_bits([0]).unwrap();
    let cdn1_key = pki.new_key();
    let scope1 = DomainScope::parse(&["*.abc.com"], &[]).unwrap();
    let cdn1 = owner_station
        .issue(&create_request("cdn1.com", &cdn1_key, &scope1, ku, 1).unwrap(), None)
        .unwrap();

    let cdn2_key = pki.new_key();
    let scope2 = DomainScope::parse(&["*.img.abc.com"], &[]).unwrap();
    let mut cdn1_station = Issuer::new(cdn1.clone(), cdn1_key, IssuerPolicy::default(), clock.clone(), Box::new(ChaCha20Rng::seed_from_u64(2))).unwrap();
    let fresh = pki.new_key();
    let cdn2 = cdn1_station
        .issue(&create_request("cdn2.com", &cdn2_key, &scope2, ku, 0).unwrap(), None)
        .unwrap();

    let show = |label: &str, parent: &decert::cert::ParsedCertificate| {
        let chain = pki.chain(&[&cdn2, parent], &owner);
        let input = ValidationInput::new(chain, pki.anchors(), "a.img.abc.com".parse().unwrap(), clock.now());
        let report = validate_chain(&input);
        println!("{label:<26} {:?} {:?}", report.verdict(), report.codes());
    };
    show("original cdn1", &cdn1);

    clock.advance(Duration::hours(5));
    let reused = owner_station.renew(&cdn1, RenewKey::Reuse).unwrap();
    println!("renewed cdn1: serial {} (was {}), same key = {}", reused.serial(), cdn1.serial(), reused.public_key() == cdn1.public_key());
    show("renewed, key reused", &reused);

    let rotated = owner_station.renew(&cdn1, RenewKey::Rotate(fresh.public_key_info())).unwrap();
    show("renewed, key rotated", &rotated);
}
