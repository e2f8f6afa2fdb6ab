// SPDX-License-Identifier: Apache-2.0

//! Deterministic test PKI and the on-disk fixture corpus.
//!
//! Layout written by [`Corpus::write`]:
//!
//! ```text
//! anchors.pem            trust anchor (test root)
//! manifest.tsv           fixture, hostname, mode, verdict, codes
//! owner/chain.pem        abc.com end-entity certificate + intermediate
//! owner/key.pem
//! <fixture>/chain.pem    leaf first, root omitted
//! <fixture>/key.pem      leaf key
//! <fixture>/issuer-key.pem
//! revoked/crl.der, revoked/revocations.zone
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use time::format_description::well_known::Rfc3339;
use time::macros::datetime;
use time::{Duration, OffsetDateTime};

use crate::cert::{
    build_certificate, build_certificate_unchecked, chain_to_pem, parse_pem_chain, CertError, CertificateTemplate,
    DelegationInfo, KeyUsageSet, ParsedCertificate, Serial, Signer,
};
use crate::clock::FixedClock;
use crate::keys::{KeyAlgorithm, SigningKey};
use crate::name_scope::{DomainName, DomainPattern};
use crate::revocation::{
    build_crl, export_zone, CrlDocument, RevocationStore, RevocationZone, DEFAULT_CRL_LIFETIME,
};
use crate::validation::{FailMode, Mode, RevocationPolicy, Verdict, ViolationCode};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_AT: OffsetDateTime = datetime!(2025-06-01 12:00 UTC);
pub const ROOT_CN: &str = "DeCert Test Root CA";
pub const INTERMEDIATE_CN: &str = "DeCert Test Issuing CA";

/// A small deterministic PKI: root, one intermediate, and helpers to mint
/// end-entity certificates and DeCerts beneath it.
pub struct Pki {
    rng: ChaCha20Rng,
    pub at: OffsetDateTime,
    pub alg: KeyAlgorithm,
    pub root: ParsedCertificate,
    pub root_key: SigningKey,
    pub intermediate: ParsedCertificate,
    pub intermediate_key: SigningKey,
}

/// Parameters for one DeCert. `not_before`/`not_after` default to the
/// issuance rules (backdated 60 s, six hours).
#[derive(Debug, Clone)]
pub struct DecertSpec {
    pub subject_cn: String,
    pub include: Vec<DomainPattern>,
    pub exclude: Vec<DomainName>,
    pub key_usage: Option<KeyUsageSet>,
    pub path_len: u8,
    pub not_before: Option<OffsetDateTime>,
    pub not_after: Option<OffsetDateTime>,
    /// Write the SAN mirror into DelegationInfo.
    pub mirror_include: bool,
}

impl DecertSpec {
    pub fn new(subject_cn: &str, include: &[&str], exclude: &[&str], path_len: u8) -> Self {
        DecertSpec {
            subject_cn: subject_cn.to_owned(),
            include: include.iter().map(|s| DomainPattern::parse(s).expect("fixture pattern")).collect(),
            exclude: exclude.iter().map(|s| DomainName::parse(s).expect("fixture name")).collect(),
            key_usage: Some(KeyUsageSet::from_bits([KeyUsageSet::DIGITAL_SIGNATURE]).unwrap()),
            path_len,
            not_before: None,
            not_after: None,
            mirror_include: true,
        }
    }

    pub fn key_usage(mut self, bits: &[u8]) -> Self {
        self.key_usage = Some(KeyUsageSet::from_bits(bits.iter().copied()).expect("key usage bit"));
        self
    }

    pub fn window(mut self, not_before: OffsetDateTime, not_after: OffsetDateTime) -> Self {
        self.not_before = Some(not_before);
        self.not_after = Some(not_after);
        self
    }
}

impl Pki {
    pub fn new(seed: u64, at: OffsetDateTime) -> Self {
        Self::with_algorithm(seed, at, KeyAlgorithm::EcdsaP256)
    }

    pub fn with_algorithm(seed: u64, at: OffsetDateTime, alg: KeyAlgorithm) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let root_key = SigningKey::generate(alg, &mut rng).expect("supported algorithm");
        let mut t = CertificateTemplate::new(
            ROOT_CN,
            root_key.public_key_info(),
            Serial::random(&mut rng),
            at - Duration::days(365),
            at + Duration::days(3650),
        );
        t.is_ca = true;
        t.basic_path_len = Some(1);
        t.key_usage = KeyUsageSet::from_bits([KeyUsageSet::KEY_CERT_SIGN, KeyUsageSet::CRL_SIGN]);
        let root = parse(build_certificate(&t, Signer::SelfSigned(&root_key)));

        let intermediate_key = SigningKey::generate(alg, &mut rng).expect("supported algorithm");
        let mut t = CertificateTemplate::new(
            INTERMEDIATE_CN,
            intermediate_key.public_key_info(),
            Serial::random(&mut rng),
            at - Duration::days(180),
            at + Duration::days(1825),
        );
        t.is_ca = true;
        t.basic_path_len = Some(0);
        t.key_usage = KeyUsageSet::from_bits([KeyUsageSet::KEY_CERT_SIGN, KeyUsageSet::CRL_SIGN]);
        let intermediate = parse(build_certificate(&t, Signer::Issuer(&root, &root_key)));

        Pki {
            rng,
            at,
            alg,
            root,
            root_key,
            intermediate,
            intermediate_key,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn new_key(&mut self) -> SigningKey {
        SigningKey::generate(self.alg, &mut self.rng).expect("supported algorithm")
    }

    pub fn anchors(&self) -> Vec<ParsedCertificate> {
        vec![self.root.clone()]
    }

    /// A CA-issued end-entity certificate without KeyUsage.
    pub fn eec(&mut self, cn: &str, san: &[&str]) -> (ParsedCertificate, SigningKey) {
        let key = self.new_key();
        let mut t = CertificateTemplate::new(
            cn,
            key.public_key_info(),
            Serial::random(&mut self.rng),
            self.at - Duration::days(30),
            self.at + Duration::days(60),
        );
        t.san = san.iter().map(|s| DomainPattern::parse(s).expect("fixture pattern")).collect();
        let cert = parse(build_certificate(&t, Signer::Issuer(&self.intermediate, &self.intermediate_key)));
        (cert, key)
    }

    pub fn decert(
        &mut self,
        spec: &DecertSpec,
        issuer: &ParsedCertificate,
        issuer_key: &SigningKey,
    ) -> (ParsedCertificate, SigningKey) {
        let key = self.new_key();
        let cert = self.decert_for_key(spec, issuer, issuer_key, &key);
        (cert, key)
    }

    /// Signs a DeCert for an existing subject key. Policy is not consulted,
    /// so defective delegations can be produced on purpose.
    pub fn decert_for_key(
        &mut self,
        spec: &DecertSpec,
        issuer: &ParsedCertificate,
        issuer_key: &SigningKey,
        subject_key: &SigningKey,
    ) -> ParsedCertificate {
        let nb = spec.not_before.unwrap_or(self.at - Duration::seconds(60));
        let na = spec.not_after.unwrap_or(nb + Duration::hours(6));
        let mut t = CertificateTemplate::new(
            spec.subject_cn.clone(),
            subject_key.public_key_info(),
            Serial::random(&mut self.rng),
            nb,
            na,
        );
        t.san = spec.include.clone();
        t.key_usage = spec.key_usage;
        t.delegation_info = Some(DelegationInfo {
            exclude: spec.exclude.iter().cloned().collect(),
            include: spec.mirror_include.then(|| spec.include.iter().cloned().collect()),
            path_len: Some(spec.path_len),
        });
        parse(build_certificate_unchecked(&t, Signer::Issuer(issuer, issuer_key)))
    }

    /// `[leaf.., eec, intermediate]`
    pub fn chain(&self, decerts: &[&ParsedCertificate], eec: &ParsedCertificate) -> Vec<ParsedCertificate> {
        let mut v: Vec<ParsedCertificate> = decerts.iter().map(|c| (*c).clone()).collect();
        v.push(eec.clone());
        v.push(self.intermediate.clone());
        v
    }
}

fn parse(der: Result<Vec<u8>, CertError>) -> ParsedCertificate {
    ParsedCertificate::from_der(&der.expect("fixture certificate builds")).expect("fixture certificate parses")
}

/// One expected outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub fixture: String,
    pub hostname: DomainName,
    pub mode: Mode,
    pub verdict: Verdict,
    pub codes: Vec<ViolationCode>,
}

impl fmt::Display for ManifestEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<&str> = self.codes.iter().map(|c| c.as_str()).collect();
        write!(f, "{}\t{}\t{}\t{}\t{}", self.fixture, self.hostname, self.mode, self.verdict, codes.join(","))
    }
}

/// The expected-outcomes table plus the instant it was computed for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub at: OffsetDateTime,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut out = format!("# at\t{}\n", self.at.format(&Rfc3339).expect("formattable instant"));
        for e in &self.entries {
            out.push_str(&format!("{e}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut at = None;
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let bad = |why: String| format!("manifest line {}: {why}", n + 1);
            if let Some(rest) = line.strip_prefix("# at\t") {
                at = Some(OffsetDateTime::parse(rest.trim(), &Rfc3339).map_err(|e| bad(e.to_string()))?);
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [fixture, host, mode, verdict, codes] = cols[..] else {
                return Err(bad(format!("expected 5 columns, found {}", cols.len())));
            };
            let mut codes: Vec<ViolationCode> = codes
                .split(',')
                .filter(|c| !c.is_empty())
                .map(|c| c.parse().map_err(|e: crate::validation::UnknownCode| bad(e.to_string())))
                .collect::<Result<_, _>>()?;
            codes.sort();
            entries.push(ManifestEntry {
                fixture: fixture.to_owned(),
                hostname: DomainName::parse(host).map_err(|e| bad(e.to_string()))?,
                mode: mode.parse().map_err(bad)?,
                verdict: verdict.parse().map_err(|e: crate::validation::UnknownCode| bad(e.to_string()))?,
                codes,
            });
        }
        Ok(Manifest {
            at: at.ok_or("manifest has no `# at` line")?,
            entries,
        })
    }
}

pub struct Fixture {
    pub name: String,
    /// Leaf first, root omitted.
    pub chain: Vec<ParsedCertificate>,
    pub key: SigningKey,
    pub issuer_key: SigningKey,
    pub crl: Option<CrlDocument>,
    pub zone: Option<RevocationZone>,
}

impl Fixture {
    /// The policy a consumer of this fixture applies: the published zone when
    /// present, otherwise the CRL, otherwise none.
    pub fn revocation_policy(&self) -> RevocationPolicy {
        policy_for(self.zone.clone(), self.crl.clone())
    }
}

fn policy_for(zone: Option<RevocationZone>, crl: Option<CrlDocument>) -> RevocationPolicy {
    match (zone, crl) {
        (Some(z), _) => RevocationPolicy::Dns(Arc::new(z), FailMode::default()),
        (None, Some(c)) => RevocationPolicy::Crl(vec![c], FailMode::default()),
        (None, None) => RevocationPolicy::None,
    }
}

pub struct Corpus {
    pub seed: u64,
    pub pki: Pki,
    /// The abc.com end-entity certificate and its key.
    pub owner: (ParsedCertificate, SigningKey),
    pub fixtures: Vec<Fixture>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn generate(seed: u64, at: OffsetDateTime) -> Self {
        let mut pki = Pki::new(seed, at);
        let (abc, abc_key) = pki.eec("abc.com", &["abc.com"]);
        let (local, local_key) = pki.eec("a.localhost", &["a.localhost"]);
        let mut fixtures = Vec::new();
        let mut entries = Vec::new();
        let mut cell = |fixture: &str, host: &str, verdict: Verdict, codes: &[ViolationCode]| {
            let mut codes = codes.to_vec();
            codes.sort();
            for (mode, verdict, codes) in [
                (Mode::DecertAware, verdict, codes),
                (Mode::Strict, Verdict::Reject, vec![ViolationCode::UnknownCriticalExtension]),
            ] {
                entries.push(ManifestEntry {
                    fixture: fixture.to_owned(),
                    hostname: DomainName::parse(host).expect("fixture host"),
                    mode,
                    verdict,
                    codes,
                });
            }
        };
        use ViolationCode::*;

        // fig1: abc.com delegates *.content.abc.com to cdn.com
        let (cdn, cdn_key) = pki.decert(&DecertSpec::new("cdn.com", &["*.content.abc.com"], &[], 0), &abc, &abc_key);
        fixtures.push(Fixture {
            name: "fig1".into(),
            chain: pki.chain(&[&cdn], &abc),
            key: cdn_key,
            issuer_key: abc_key.clone(),
            crl: None,
            zone: None,
        });
        cell("fig1", "x.content.abc.com", Verdict::Accept, &[]);
        cell("fig1", "www.abc.com", Verdict::Reject, &[HostnameNotInScope]);

        // fig2a: path length 0 at cdn1, and cdn2 reaches outside pics.abc.com
        let cdn1_spec = DecertSpec::new("cdn1.com", &["*.pics.abc.com"], &["a.pics.abc.com"], 0).key_usage(&[0, 1, 5, 6]);
        let (cdn1, cdn1_key) = pki.decert(&cdn1_spec, &abc, &abc_key);
        let (cdn2, cdn2_key) = pki.decert(&DecertSpec::new("cdn2.com", &["*.vids.abc.com"], &[], 0), &cdn1, &cdn1_key);
        fixtures.push(Fixture {
            name: "fig2a".into(),
            chain: pki.chain(&[&cdn2, &cdn1], &abc),
            key: cdn2_key,
            issuer_key: cdn1_key,
            crl: None,
            zone: None,
        });
        cell("fig2a", "x.vids.abc.com", Verdict::Reject, &[PathLenExceeded, IncludeNotSubset]);

        // fig2b: key usage, path length and exclude all exceed cdn1's grant
        let cdn1_spec = DecertSpec::new("cdn1.com", &["*.pics.abc.com"], &[], 1).key_usage(&[0, 1, 5, 6]);
        let (cdn1, cdn1_key) = pki.decert(&cdn1_spec, &abc, &abc_key);
        let cdn2_spec = DecertSpec::new("cdn2.com", &["*.pics.abc.com"], &["a.vids.abc.com"], 5).key_usage(&[1, 3, 5, 6]);
        let (cdn2, cdn2_key) = pki.decert(&cdn2_spec, &cdn1, &cdn1_key);
        fixtures.push(Fixture {
            name: "fig2b".into(),
            chain: pki.chain(&[&cdn2, &cdn1], &abc),
            key: cdn2_key,
            issuer_key: cdn1_key,
            crl: None,
            zone: None,
        });
        cell("fig2b", "x.pics.abc.com", Verdict::Reject, &[KeyUsageNotSubset, PathLenExceeded, ExcludeNotSubset]);

        // poc: *.a.localhost except the b.a.localhost subtree
        let poc_spec = DecertSpec::new("cdn.localhost", &["*.a.localhost"], &["b.a.localhost"], 0);
        let (poc, poc_key) = pki.decert(&poc_spec, &local, &local_key);
        fixtures.push(Fixture {
            name: "poc".into(),
            chain: pki.chain(&[&poc], &local),
            key: poc_key,
            issuer_key: local_key,
            crl: None,
            zone: None,
        });
        cell("poc", "a.a.localhost", Verdict::Accept, &[]);
        cell("poc", "b.a.localhost", Verdict::Reject, &[HostnameExcluded]);
        cell("poc", "c.b.a.localhost", Verdict::Reject, &[HostnameExcluded]);

        // expired: a one-minute delegation issued an hour earlier
        let nb = at - Duration::hours(1) - Duration::seconds(60);
        let spec = DecertSpec::new("cdn.com", &["*.content.abc.com"], &[], 0).window(nb, nb + Duration::minutes(1));
        let (old, old_key) = pki.decert(&spec, &abc, &abc_key);
        fixtures.push(Fixture {
            name: "expired".into(),
            chain: pki.chain(&[&old], &abc),
            key: old_key,
            issuer_key: abc_key.clone(),
            crl: None,
            zone: None,
        });
        cell("expired", "x.content.abc.com", Verdict::Reject, &[Expired]);

        // revoked: listed in abc.com's CRL and revocation zone
        let (gone, gone_key) = pki.decert(&DecertSpec::new("cdn.com", &["*.content.abc.com"], &[], 0), &abc, &abc_key);
        let clock = FixedClock::new(at - Duration::minutes(5));
        let mut store = RevocationStore::in_memory();
        store.revoke(gone.serial(), "keyCompromise", &clock).expect("fresh store");
        clock.advance(Duration::minutes(4));
        let crl = build_crl(&store, &abc, &abc_key, &clock, DEFAULT_CRL_LIFETIME).expect("owner key matches");
        let zone = export_zone(&store, &DomainName::parse("abc.com").unwrap());
        fixtures.push(Fixture {
            name: "revoked".into(),
            chain: pki.chain(&[&gone], &abc),
            key: gone_key,
            issuer_key: abc_key.clone(),
            crl: Some(crl),
            zone: Some(zone),
        });
        cell("revoked", "x.content.abc.com", Verdict::Reject, &[Revoked]);

        Corpus {
            seed,
            pki,
            owner: (abc, abc_key),
            fixtures,
            manifest: Manifest { at, entries },
        }
    }

    pub fn fixture(&self, name: &str) -> Option<&Fixture> {
        self.fixtures.iter().find(|f| f.name == name)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("anchors.pem"), self.pki.root.to_pem())?;
        fs::write(dir.join("manifest.tsv"), self.manifest.to_text())?;
        let owner = dir.join("owner");
        fs::create_dir_all(&owner)?;
        fs::write(owner.join("chain.pem"), chain_to_pem(&[self.owner.0.clone(), self.pki.intermediate.clone()]))?;
        fs::write(owner.join("key.pem"), self.owner.1.to_pkcs8_pem())?;
        for f in &self.fixtures {
            let d = dir.join(&f.name);
            fs::create_dir_all(&d)?;
            fs::write(d.join("chain.pem"), chain_to_pem(&f.chain))?;
            fs::write(d.join("key.pem"), f.key.to_pkcs8_pem())?;
            fs::write(d.join("issuer-key.pem"), f.issuer_key.to_pkcs8_pem())?;
            if let Some(crl) = &f.crl {
                fs::write(d.join("crl.der"), crl.to_der())?;
            }
            if let Some(zone) = &f.zone {
                fs::write(d.join("revocations.zone"), zone.to_zone_file())?;
            }
        }
        Ok(())
    }
}

/// A fixture directory read back from disk.
pub struct LoadedFixture {
    pub chain: Vec<ParsedCertificate>,
    pub key_pem: String,
    pub revocation: RevocationPolicy,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Invalid(String, String),
}

pub fn load_fixture(dir: &Path) -> Result<LoadedFixture, CorpusError> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| CorpusError::Io(p.display().to_string(), e))
    };
    let invalid = |name: &str, e: &dyn fmt::Display| CorpusError::Invalid(dir.join(name).display().to_string(), e.to_string());
    let chain_text = String::from_utf8(read("chain.pem")?).map_err(|e| invalid("chain.pem", &e))?;
    let chain = parse_pem_chain(&chain_text).map_err(|e| invalid("chain.pem", &e))?;
    let key_pem = String::from_utf8(read("key.pem")?).map_err(|e| invalid("key.pem", &e))?;
    let zone = match dir.join("revocations.zone").exists() {
        true => {
            let text = String::from_utf8(read("revocations.zone")?).map_err(|e| invalid("revocations.zone", &e))?;
            Some(RevocationZone::parse_zone_file(&text).map_err(|e| invalid("revocations.zone", &e))?)
        }
        false => None,
    };
    let crl = match dir.join("crl.der").exists() {
        true => Some(CrlDocument::from_der(&read("crl.der")?).map_err(|e| invalid("crl.der", &e))?),
        false => None,
    };
    Ok(LoadedFixture {
        chain,
        key_pem,
        revocation: policy_for(zone, crl),
    })
}

pub fn load_anchors(path: &Path) -> Result<Vec<ParsedCertificate>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    parse_pem_chain(&text).map_err(|e| CorpusError::Invalid(path.display().to_string(), e.to_string()))
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    Manifest::parse(&text).map_err(|e| CorpusError::Invalid(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::{validate_chain, ValidationInput};

    #[test]
    fn manifest_matches_validation() {
        let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
        for e in &corpus.manifest.entries {
            let f = corpus.fixture(&e.fixture).unwrap();
            let input = ValidationInput::new(f.chain.clone(), corpus.pki.anchors(), e.hostname.clone(), corpus.manifest.at)
                .with_mode(e.mode)
                .with_revocation(f.revocation_policy());
            let report = validate_chain(&input);
            assert_eq!((report.verdict(), report.codes()), (e.verdict, e.codes.clone()), "{e}\n{}", report.to_text());
        }
    }

    #[test]
    fn manifest_text_round_trip() {
        let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
        assert_eq!(Manifest::parse(&corpus.manifest.to_text()).unwrap(), corpus.manifest);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = Corpus::generate(7, DEFAULT_AT);
        let b = Corpus::generate(7, DEFAULT_AT);
        for (x, y) in a.fixtures.iter().zip(&b.fixtures) {
            assert_eq!(chain_to_pem(&x.chain), chain_to_pem(&y.chain));
            assert_eq!(x.key.to_pkcs8_pem(), y.key.to_pkcs8_pem());
        }
        let c = Corpus::generate(8, DEFAULT_AT);
        assert_ne!(chain_to_pem(&a.fixtures[0].chain), chain_to_pem(&c.fixtures[0].chain));
    }
}
