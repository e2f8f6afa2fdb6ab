// SPDX-License-Identifier: Apache-2.0

//! Renewing a DeCert in the middle of a chain: reusing its key keeps the
//! certificates below it valid, rotating the key orphans them.

mod common;

use std::path::Path;
use std::sync::Arc;

use common::*;
use decert::cert::{chain_to_pem, parse_pem_chain, KeyUsageSet, ParsedCertificate};
use decert::clock::{Clock, FixedClock};
use decert::fixtures::{Pki, DEFAULT_AT};
use decert::issuance::{create_request, renew_decert, IssuedIndex, Issuer, IssuerPolicy, RenewKey};
use decert::name_scope::DomainScope;
use decert::revocation::RevocationStore;
use decert::validation::{validate_chain, ValidationInput, ViolationCode};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use time::Duration;

fn station(cert: &ParsedCertificate, key: decert::keys::SigningKey, clock: &Arc<FixedClock>, seed: u64) -> Issuer {
    Issuer::new(cert.clone(), key, IssuerPolicy::default(), clock.clone(), Box::new(ChaCha20Rng::seed_from_u64(seed)))
        .unwrap()
}

#[test]
fn renewal_through_issuer_stations() {
    let mut pki = Pki::new(9, DEFAULT_AT);
    let (owner, owner_key) = pki.eec("abc.com", &["abc.com", "*.abc.com"]);
    let clock = Arc::new(FixedClock::new(DEFAULT_AT));
    let mut owner_station = station(&owner, owner_key, &clock, 1);
    let ku = KeyUsageSet::from_bits([0]).unwrap();

    let cdn1_key = pki.new_key();
    let scope1 = DomainScope::parse(&["*.abc.com"], &[]).unwrap();
    let cdn1 = owner_station.issue(&create_request("cdn1.com", &cdn1_key, &scope1, ku, 1).unwrap(), None).unwrap();
    let mut cdn1_station = station(&cdn1, cdn1_key, &clock, 2);
    let cdn2_key = pki.new_key();
    let scope2 = DomainScope::parse(&["*.img.abc.com"], &[]).unwrap();
    let cdn2 = cdn1_station
        .issue(&create_request("cdn2.com", &cdn2_key, &scope2, ku, 0).unwrap(), Some(Duration::hours(12)))
        .unwrap();

    let fresh = pki.new_key();
    let check = |parent: &ParsedCertificate| {
        let chain = pki.chain(&[&cdn2, parent], &owner);
        validate_chain(&ValidationInput::new(chain, pki.anchors(), "a.img.abc.com".parse().unwrap(), clock.now()))
    };
    assert!(check(&cdn1).is_accept());

    clock.advance(Duration::hours(5));
    let reused = owner_station.renew(&cdn1, RenewKey::Reuse).unwrap();
    assert_ne!(reused.serial(), cdn1.serial());
    assert!(reused.not_after() > cdn1.not_after());
    assert_eq!(reused.scope(), cdn1.scope());
    assert_eq!(reused.delegation_info(), cdn1.delegation_info());
    assert!(check(&reused).is_accept());

    // the original would have lapsed by now
    clock.advance(Duration::hours(2));
    assert!(check(&cdn1).has(ViolationCode::Expired));
    assert!(check(&reused).is_accept());

    let rotated = owner_station.renew(&cdn1, RenewKey::Rotate(fresh.public_key_info())).unwrap();
    let report = check(&rotated);
    assert_eq!(report.codes(), vec![ViolationCode::SignatureInvalid], "{}", report.to_text());
    assert_eq!(report.violations()[0].index, 0);
}

#[test]
fn revoked_certificates_are_not_renewed() {
    let mut pki = Pki::new(10, DEFAULT_AT);
    let (owner, owner_key) = pki.eec("abc.com", &["abc.com", "*.abc.com"]);
    let clock = Arc::new(FixedClock::new(DEFAULT_AT));
    let mut owner_station = station(&owner, owner_key, &clock, 1);
    let key = pki.new_key();
    let scope = DomainScope::parse(&["*.abc.com"], &[]).unwrap();
    let cdn = owner_station
        .issue(&create_request("cdn1.com", &key, &scope, KeyUsageSet::from_bits([0]).unwrap(), 0).unwrap(), None)
        .unwrap();
    owner_station.revoke(cdn.serial(), "keyCompromise").unwrap();
    assert!(owner_station.renew(&cdn, RenewKey::Reuse).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn renewal_at_any_level(seed in any::<u64>(), depth in 2usize..=4, pick in 0usize..3) {
        let at = DEFAULT_AT;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let levels = random_levels(&mut rng, depth, at);
        let mut built = build_chain(seed, at, &levels);
        let host = host_in(levels.last().unwrap());
        // renew a certificate that has at least one DeCert below it
        let k = pick % (depth - 1);
        let (issuer, issuer_key) = if k == 0 {
            (built.eec.clone(), built.eec_key.clone())
        } else {
            (built.decerts[k - 1].clone(), built.keys[k - 1].clone())
        };
        let mut index = IssuedIndex::in_memory();
        index.insert(built.decerts[k].clone()).unwrap();
        let clock = FixedClock::new(at);
        let revoked = RevocationStore::in_memory();
        let original = built.decerts[k].clone();
        let mut validate = |replacement: ParsedCertificate| {
            built.decerts[k] = replacement;
            let leaf_first: Vec<&ParsedCertificate> = built.decerts.iter().rev().collect();
            let chain = built.pki.chain(&leaf_first, &built.eec);
            validate_chain(&ValidationInput::new(chain, built.pki.anchors(), host.clone(), at))
        };

        let reused = renew_decert(&original, &issuer, &issuer_key, &clock, RenewKey::Reuse, &index, &revoked, &mut rng).unwrap();
        let report = validate(reused);
        prop_assert!(report.is_accept(), "{}", report.to_text());

        let fresh = decert::keys::SigningKey::generate(decert::keys::KeyAlgorithm::EcdsaP256, &mut rng).unwrap();
        let rotated = renew_decert(&original, &issuer, &issuer_key, &clock, RenewKey::Rotate(fresh.public_key_info()), &index, &revoked, &mut rng).unwrap();
        let report = validate(rotated);
        prop_assert_eq!(report.codes(), vec![ViolationCode::SignatureInvalid]);
        prop_assert_eq!(report.violations()[0].index, depth - 1 - k - 1);
    }
}

fn run_ok(dir: &Path, args: &[&str]) -> CliRun {
    let r = decert_bin(dir, &[], args);
    assert_eq!(r.code, 0, "{args:?}\n{}{}", r.stdout, r.stderr);
    r
}

/// Leaf from `below`, everything above it from `above`.
fn splice(below: &Path, above: &Path, out: &Path) {
    let leaf = parse_pem_chain(&std::fs::read_to_string(below).unwrap()).unwrap().remove(0);
    let mut chain = vec![leaf];
    chain.extend(parse_pem_chain(&std::fs::read_to_string(above).unwrap()).unwrap());
    std::fs::write(out, chain_to_pem(&chain)).unwrap();
}

#[test]
fn renewal_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let t0 = rfc3339(DEFAULT_AT);
    let t5 = rfc3339(DEFAULT_AT + Duration::hours(5));
    run_ok(d, &["fixtures", "--out", "corpus"]);
    for (name, seed) in [("cdn1.key", "1"), ("cdn2.key", "2"), ("cdn1-new.key", "3")] {
        run_ok(d, &["keygen", "--out", name, "--seed", seed]);
    }
    run_ok(d, &["csr", "--subject", "cdn1.com", "--include", "*.abc.com", "--path-len", "1", "--key", "cdn1.key", "--out", "cdn1.csr"]);
    run_ok(d, &[
        "issue", "--csr", "cdn1.csr", "--issuer-cert", "corpus/owner/chain.pem", "--issuer-key", "corpus/owner/key.pem",
        "--store", "owner-store", "--at", &t0, "--out", "cdn1.pem",
    ]);
    run_ok(d, &["csr", "--subject", "cdn2.com", "--include", "*.img.abc.com", "--key", "cdn2.key", "--out", "cdn2.csr"]);
    run_ok(d, &[
        "issue", "--csr", "cdn2.csr", "--issuer-cert", "cdn1.pem", "--issuer-key", "cdn1.key",
        "--store", "cdn1-store", "--at", &t0, "--out", "cdn2.pem",
    ]);
    let validate = |chain: &str, at: &str| {
        decert_bin(d, &[], &["validate", "--chain", chain, "--anchors", "corpus/anchors.pem", "--hostname", "a.img.abc.com", "--at", at])
    };
    assert_eq!(validate("cdn2.pem", &t0).code, 0);

    let renew = |extra: &[&str], out: &str| {
        let mut args = vec![
            "renew", "--cert", "cdn1.pem", "--issuer-cert", "corpus/owner/chain.pem", "--issuer-key",
            "corpus/owner/key.pem", "--store", "owner-store", "--at", &t5, "--out", out,
        ];
        args.extend_from_slice(extra);
        run_ok(d, &args);
    };
    renew(&[], "cdn1-reused.pem");
    splice(&d.join("cdn2.pem"), &d.join("cdn1-reused.pem"), &d.join("reused-chain.pem"));
    let r = validate("reused-chain.pem", &t5);
    assert_eq!(r.code, 0, "{}", r.stdout);

    renew(&["--rotate-key", "cdn1-new.key"], "cdn1-rotated.pem");
    splice(&d.join("cdn2.pem"), &d.join("cdn1-rotated.pem"), &d.join("rotated-chain.pem"));
    let r = validate("rotated-chain.pem", &t5);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("SignatureInvalid"), "{}", r.stdout);
}
