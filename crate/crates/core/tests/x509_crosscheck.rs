// SPDX-License-Identifier: Apache-2.0

//! Everything we emit, read back by an unrelated X.509 implementation.

use std::collections::BTreeSet;

use decert::cert::{delegation_info_oid, KeyUsageSet, ParsedCertificate};
use decert::fixtures::{Corpus, DecertSpec, Pki, DEFAULT_AT, DEFAULT_SEED};
use decert::issuance::create_request;
use decert::keys::KeyAlgorithm;
use decert::name_scope::DomainScope;
use x509_parser::certification_request::X509CertificationRequest;
use x509_parser::extensions::{GeneralName, ParsedExtension};
use x509_parser::prelude::{FromDer, X509Certificate};
use x509_parser::revocation_list::CertificateRevocationList;

fn trim(b: &[u8]) -> &[u8] {
    let n = b.iter().take_while(|&&x| x == 0).count().min(b.len().saturating_sub(1));
    &b[n..]
}

fn cn<'a>(name: &'a x509_parser::x509::X509Name<'a>) -> &'a str {
    name.iter_common_name().next().unwrap().as_str().unwrap()
}

fn check(ours: &ParsedCertificate, issuer: &ParsedCertificate) {
    let (rest, theirs) = X509Certificate::from_der(ours.raw_der()).expect("x509-parser accepts it");
    assert!(rest.is_empty());
    assert_eq!(cn(theirs.subject()), ours.subject_cn());
    assert_eq!(cn(theirs.issuer()), ours.issuer_cn());
    assert_eq!(trim(theirs.tbs_certificate.raw_serial()), trim(ours.serial().as_bytes()));
    assert_eq!(theirs.validity().not_before.timestamp(), ours.not_before().unix_timestamp());
    assert_eq!(theirs.validity().not_after.timestamp(), ours.not_after().unix_timestamp());
    assert_eq!(theirs.public_key().raw, ours.public_key().as_bytes());

    let san: BTreeSet<String> = theirs
        .subject_alternative_name()
        .unwrap()
        .map(|e| {
            e.value
                .general_names
                .iter()
                .map(|g| match g {
                    GeneralName::DNSName(s) => s.to_string(),
                    other => panic!("unexpected SAN entry {other:?}"),
                })
                .collect()
        })
        .unwrap_or_default();
    let ours_san: BTreeSet<String> = ours.san().iter().map(ToString::to_string).collect();
    assert_eq!(san, ours_san);

    let ku = theirs.key_usage().unwrap().map(|e| {
        let bits: Vec<u8> = (0..9).filter(|b| e.value.flags & (1 << b) != 0).collect();
        KeyUsageSet::from_bits(bits).unwrap()
    });
    assert_eq!(ku, ours.key_usage());

    let bc = theirs.basic_constraints().unwrap().map(|e| (e.value.ca, e.value.path_len_constraint));
    assert_eq!(bc.map(|b| b.0).unwrap_or(false), ours.is_ca());
    assert_eq!(bc.and_then(|b| b.1), ours.basic_path_len());

    let di_oid = delegation_info_oid().to_string();
    let di = theirs.extensions().iter().find(|e| e.oid.to_id_string() == di_oid);
    match (di, ours.delegation_info()) {
        (Some(ext), Some(info)) => {
            assert!(ext.critical, "DelegationInfo must be critical");
            assert_eq!(ext.value, info.encode().as_slice());
        }
        (None, None) => {}
        (a, b) => panic!("DelegationInfo presence differs: {} vs {}", a.is_some(), b.is_some()),
    }

    let (_, parent) = X509Certificate::from_der(issuer.raw_der()).unwrap();
    theirs
        .verify_signature(Some(parent.public_key()))
        .unwrap_or_else(|e| panic!("{} signature: {e:?}", ours.subject_cn()));
}

fn check_corpus(corpus: &Corpus) {
    let root = &corpus.pki.root;
    check(root, root);
    check(&corpus.pki.intermediate, root);
    check(&corpus.owner.0, &corpus.pki.intermediate);
    let mut seen = 0;
    for f in &corpus.fixtures {
        for pair in f.chain.windows(2) {
            check(&pair[0], &pair[1]);
            seen += 1;
        }
    }
    assert!(seen >= 12);
}

#[test]
fn corpus_certificates_parse_identically() {
    check_corpus(&Corpus::generate(DEFAULT_SEED, DEFAULT_AT));
}

#[test]
fn ed25519_certificates_parse_identically() {
    let mut pki = Pki::with_algorithm(3, DEFAULT_AT, KeyAlgorithm::Ed25519);
    let (eec, key) = pki.eec("abc.com", &["abc.com", "*.abc.com"]);
    let spec = DecertSpec::new("cdn.com", &["*.content.abc.com"], &["x.content.abc.com"], 2).key_usage(&[0, 5]);
    let (decert, _) = pki.decert(&spec, &eec, &key);
    check(&pki.root, &pki.root);
    check(&eec, &pki.intermediate);
    check(&decert, &eec);
}

#[test]
fn crl_parses_and_verifies() {
    let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
    let f = corpus.fixture("revoked").unwrap();
    let crl = f.crl.as_ref().unwrap();
    let (rest, theirs) = CertificateRevocationList::from_der(crl.to_der()).unwrap();
    assert!(rest.is_empty());
    assert_eq!(cn(theirs.issuer()), crl.issuer_cn);
    assert_eq!(theirs.last_update().timestamp(), crl.this_update.unix_timestamp());
    assert_eq!(theirs.next_update().unwrap().timestamp(), crl.next_update.unix_timestamp());
    let serials: Vec<Vec<u8>> = theirs.iter_revoked_certificates().map(|r| trim(r.raw_serial()).to_vec()).collect();
    assert_eq!(serials, vec![trim(f.chain[0].serial().as_bytes()).to_vec()]);
    assert_eq!(theirs.crl_number().map(|n| n.to_string()), Some(crl.number.to_string()));
    let (_, issuer) = X509Certificate::from_der(f.chain[1].raw_der()).unwrap();
    theirs.verify_signature(issuer.public_key()).unwrap();
}

#[test]
fn delegation_request_parses_and_verifies() {
    let mut pki = Pki::new(5, DEFAULT_AT);
    for alg in [KeyAlgorithm::EcdsaP256, KeyAlgorithm::Ed25519] {
        let key = decert::keys::SigningKey::generate(alg, pki.rng()).unwrap();
        let scope = DomainScope::parse(&["*.content.abc.com", "static.abc.com"], &["x.content.abc.com"]).unwrap();
        let req = create_request("cdn.com", &key, &scope, KeyUsageSet::from_bits([0]).unwrap(), 1).unwrap();
        let (rest, theirs) = X509CertificationRequest::from_der(req.to_der()).unwrap();
        assert!(rest.is_empty());
        theirs.verify_signature().unwrap();
        assert_eq!(cn(&theirs.certification_request_info.subject), "cdn.com");
        let names: BTreeSet<String> = theirs
            .requested_extensions()
            .unwrap()
            .filter_map(|e| match e {
                ParsedExtension::SubjectAlternativeName(san) => Some(san.general_names.iter().map(|g| g.to_string())),
                _ => None,
            })
            .flatten()
            .collect();
        assert_eq!(
            names,
            ["DNSName(*.content.abc.com)", "DNSName(static.abc.com)"].map(String::from).into()
        );
    }
}
