// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

//! Generators and reference models shared by the integration tests and the
//! acceptance runner. The models here deliberately avoid the library's own
//! matching code: names are plain label vectors.

pub mod codec_model;

use std::collections::BTreeSet;

use decert::cert::{
    build_certificate_unchecked, CertificateTemplate, DelegationInfo, KeyUsageSet, ParsedCertificate, Serial, Signer,
};
use decert::clock::FixedClock;
use decert::fixtures::Pki;
use decert::keys::SigningKey;
use decert::name_scope::{DomainName, DomainPattern, DomainScope};
use decert::revocation::{build_crl, RevocationStore};
use decert::validation::{FailMode, RevocationPolicy, ValidationInput, ViolationCode};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use time::{Duration, OffsetDateTime};

// ---------------------------------------------------------------------------
// Scope reference model

pub const SUFFIX: &str = "t";
pub const FRESH: &str = "zz";

/// Labels leaf first, suffix excluded.
pub type Labels = Vec<String>;

#[derive(Debug, Clone)]
pub struct ModelPattern {
    pub subtree: bool,
    pub base: Labels,
}

#[derive(Debug, Clone)]
pub struct ModelScope {
    pub include: Vec<ModelPattern>,
    pub exclude: Vec<Labels>,
}

fn is_suffix(short: &[String], long: &[String]) -> bool {
    long.len() >= short.len() && long[long.len() - short.len()..] == *short
}

impl ModelScope {
    pub fn contains(&self, name: &[String]) -> bool {
        let included = self.include.iter().any(|p| {
            if p.subtree {
                name.len() > p.base.len() && is_suffix(&p.base, name)
            } else {
                name == p.base.as_slice()
            }
        });
        included && !self.exclude.iter().any(|e| is_suffix(e, name))
    }

    pub fn max_depth(&self) -> usize {
        self.include
            .iter()
            .map(|p| p.base.len())
            .chain(self.exclude.iter().map(Vec::len))
            .max()
            .unwrap_or(0)
    }

    pub fn to_scope(&self) -> DomainScope {
        let inc: Vec<String> = self
            .include
            .iter()
            .map(|p| {
                let name = dotted(&p.base);
                if p.subtree {
                    format!("*.{name}")
                } else {
                    name
                }
            })
            .collect();
        let exc: Vec<String> = self.exclude.iter().map(|e| dotted(e)).collect();
        let inc: Vec<&str> = inc.iter().map(String::as_str).collect();
        let exc: Vec<&str> = exc.iter().map(String::as_str).collect();
        DomainScope::parse(&inc, &exc).expect("model scope converts")
    }
}

pub fn dotted(labels: &[String]) -> String {
    let mut parts: Vec<&str> = labels.iter().map(String::as_str).collect();
    parts.push(SUFFIX);
    parts.join(".")
}

pub fn alphabet(size: usize) -> Vec<String> {
    ["a", "b", "c", "d"][..size].iter().map(|s| s.to_string()).collect()
}

/// Every label vector of length 0..=depth over `labels` plus one label that
/// no pattern uses.
pub fn universe(labels: &[String], depth: usize) -> Vec<Labels> {
    let mut all: Vec<String> = labels.to_vec();
    all.push(FRESH.to_owned());
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Labels> = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for n in &layer {
            for l in &all {
                let mut m = vec![l.clone()];
                m.extend(n.iter().cloned());
                next.push(m);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub fn to_name(labels: &[String]) -> DomainName {
    DomainName::parse(&dotted(labels)).unwrap()
}

/// Brute-force subset decision over the bounded universe, which is exact
/// for depth = max pattern depth + 1 thanks to the fresh label.
pub fn oracle_subset(child: &ModelScope, parent: &ModelScope, labels: &[String]) -> Option<Labels> {
    let depth = child.max_depth().max(parent.max_depth()) + 1;
    universe(labels, depth)
        .into_iter()
        .find(|n| child.contains(n) && !parent.contains(n))
}

fn labels_strategy(alpha: Vec<String>, min: usize, max: usize) -> impl Strategy<Value = Labels> {
    prop::collection::vec(prop::sample::select(alpha), min..=max)
}

fn pattern_strategy(alpha: Vec<String>) -> impl Strategy<Value = ModelPattern> {
    (any::<bool>(), labels_strategy(alpha, 0, 3)).prop_map(|(subtree, base)| ModelPattern { subtree, base })
}

pub fn scope_strategy(alpha: Vec<String>) -> impl Strategy<Value = ModelScope> {
    (
        prop::collection::vec(pattern_strategy(alpha.clone()), 1..=3),
        prop::collection::vec(labels_strategy(alpha, 1, 4), 0..=2),
    )
        .prop_map(|(include, exclude)| ModelScope { include, exclude })
}

/// A child built by narrowing the parent, so that roughly half the pairs
/// are genuine subsets.
fn narrowed(parent: ModelScope, alpha: Vec<String>) -> impl Strategy<Value = ModelScope> {
    let n = parent.include.len();
    (
        prop::collection::vec((0..n, labels_strategy(alpha.clone(), 0, 1), any::<bool>()), 1..=2),
        prop::collection::vec(labels_strategy(alpha, 1, 4), 0..=1),
        any::<bool>(),
    )
        .prop_map(move |(picks, extra_excl, keep_parent_excl)| {
            let include = picks
                .into_iter()
                .map(|(i, ext, subtree)| {
                    let p = &parent.include[i];
                    let mut base = ext.clone();
                    base.extend(p.base.iter().cloned());
                    if !p.subtree {
                        return p.clone();
                    }
                    ModelPattern {
                        subtree: subtree || ext.is_empty(),
                        base,
                    }
                })
                .collect();
            let mut exclude = extra_excl;
            if keep_parent_excl {
                exclude.extend(parent.exclude.iter().cloned());
            }
            ModelScope { include, exclude }
        })
}

pub fn scope_pair_strategy() -> impl Strategy<Value = (ModelScope, ModelScope, Vec<String>)> {
    (3usize..=4).prop_flat_map(|size| {
        let alpha = alphabet(size);
        let a2 = alpha.clone();
        scope_strategy(alpha.clone()).prop_flat_map(move |parent| {
            let random = scope_strategy(a2.clone()).boxed();
            let derived = narrowed(parent.clone(), a2.clone()).boxed();
            (prop_oneof![random, derived], Just(parent), Just(a2.clone()))
        })
    })
}

// ---------------------------------------------------------------------------
// Delegation chains

pub const CHAIN_LABELS: [&str; 3] = ["p", "q", "r"];

/// One DeCert in a generated chain, before signing.
#[derive(Debug, Clone)]
pub struct Level {
    pub cn: String,
    pub base: DomainName,
    pub exclude: BTreeSet<DomainName>,
    pub key_usage: KeyUsageSet,
    pub path_len: u8,
    pub not_before: OffsetDateTime,
    pub not_after: OffsetDateTime,
    pub is_ca: bool,
    pub omit_san: bool,
    pub wrong_mirror: bool,
    pub foreign_signer: bool,
}

impl Level {
    pub fn include(&self) -> DomainPattern {
        DomainPattern::parse(&format!("*.{}", self.base)).unwrap()
    }

    pub fn scope(&self) -> DomainScope {
        DomainScope::new([self.include()], self.exclude.iter().cloned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    IncludeNotSubset,
    ExcludeNotSubset,
    KeyUsageNotSubset,
    PathLenExceeded,
    Expired,
    NotYetValid,
    SignatureInvalid,
    HostnameNotInScope,
    HostnameExcluded,
    UntrustedRoot,
    Revoked,
    CAFlagInvalid,
    SANMissing,
    DelegationInfoMismatch,
    ChainMalformed,
}

impl Defect {
    pub const ALL: [Defect; 15] = [
        Defect::IncludeNotSubset,
        Defect::ExcludeNotSubset,
        Defect::KeyUsageNotSubset,
        Defect::PathLenExceeded,
        Defect::Expired,
        Defect::NotYetValid,
        Defect::SignatureInvalid,
        Defect::HostnameNotInScope,
        Defect::HostnameExcluded,
        Defect::UntrustedRoot,
        Defect::Revoked,
        Defect::CAFlagInvalid,
        Defect::SANMissing,
        Defect::DelegationInfoMismatch,
        Defect::ChainMalformed,
    ];

    pub fn code(self) -> ViolationCode {
        self.to_string().parse().unwrap()
    }
}

impl std::fmt::Display for Defect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

pub const EEC_NAME: &str = "abc.com";
const KU_POOL: [u8; 5] = [0, 1, 2, 5, 6];

/// Random valid levels, root-most first.
pub fn random_levels(rng: &mut ChaCha20Rng, depth: usize, at: OffsetDateTime) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    for i in 0..depth {
        let (parent_base, parent_excl, parent_ku, budget) = match levels.last() {
            Some(p) => (p.base.clone(), p.exclude.clone(), p.key_usage, p.path_len),
            None => (
                DomainName::parse(EEC_NAME).unwrap(),
                BTreeSet::new(),
                KeyUsageSet::from_bits(KU_POOL).unwrap(),
                4,
            ),
        };
        let mut base = parent_base.clone();
        if i > 0 || rng.gen_bool(0.7) {
            // descend one label, steering clear of the parent's excludes
            let options: Vec<DomainName> = CHAIN_LABELS
                .iter()
                .map(|l| parent_base.child(l).unwrap())
                .filter(|c| !parent_excl.iter().any(|e| c.is_within(e)))
                .collect();
            if let Some(c) = options.choose(rng) {
                if rng.gen_bool(0.8) {
                    base = c.clone();
                }
            }
        }
        let mut exclude: BTreeSet<DomainName> =
            parent_excl.iter().filter(|e| e.is_descendant_of(&base)).cloned().collect();
        if rng.gen_bool(0.5) {
            exclude.insert(base.child(CHAIN_LABELS.choose(rng).unwrap()).unwrap());
        }
        let parent_bits: Vec<u8> = parent_ku.bits().collect();
        let mut bits: Vec<u8> = parent_bits.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        if bits.is_empty() {
            bits.push(parent_bits[0]);
        }
        let remaining = (depth - i - 1) as u8;
        let path_len = rng.gen_range(remaining..budget.max(remaining + 1));
        levels.push(Level {
            cn: format!("cdn{}.net", i + 1),
            base,
            exclude,
            key_usage: KeyUsageSet::from_bits(bits).unwrap(),
            path_len,
            not_before: at - Duration::minutes(rng.gen_range(1..120)),
            not_after: at + Duration::minutes(rng.gen_range(1..600)),
            is_ca: false,
            omit_san: false,
            wrong_mirror: false,
            foreign_signer: false,
        });
    }
    levels
}

/// A host inside the leaf scope: a label no generated pattern uses.
pub fn host_in(leaf: &Level) -> DomainName {
    leaf.base.child("www").unwrap()
}

pub struct BuiltChain {
    pub pki: Pki,
    pub eec: ParsedCertificate,
    pub eec_key: SigningKey,
    /// Root-most first.
    pub decerts: Vec<ParsedCertificate>,
    pub keys: Vec<SigningKey>,
    /// Leaf first, EEC and intermediate after, ready for validation.
    pub chain: Vec<ParsedCertificate>,
}

pub fn build_chain(seed: u64, at: OffsetDateTime, levels: &[Level]) -> BuiltChain {
    let mut pki = Pki::new(seed, at);
    let (eec, eec_key) = pki.eec(EEC_NAME, &[EEC_NAME, &format!("*.{EEC_NAME}")]);
    let mut decerts: Vec<ParsedCertificate> = Vec::new();
    let mut keys: Vec<SigningKey> = Vec::new();
    for level in levels {
        let key = pki.new_key();
        let (issuer, issuer_key) = match (decerts.last(), keys.last()) {
            (Some(c), Some(k)) => (c.clone(), k.clone()),
            _ => (eec.clone(), eec_key.clone()),
        };
        let mut t = CertificateTemplate::new(
            level.cn.clone(),
            key.public_key_info(),
            Serial::random(pki.rng()),
            level.not_before,
            level.not_after,
        );
        let include = level.include();
        if !level.omit_san {
            t.san = vec![include.clone()];
        }
        t.key_usage = Some(level.key_usage);
        t.is_ca = level.is_ca;
        let mirror = if level.wrong_mirror {
            DomainPattern::parse(&format!("*.mirror.{}", level.base)).unwrap()
        } else {
            include
        };
        t.delegation_info = Some(DelegationInfo {
            exclude: level.exclude.clone(),
            include: (!level.omit_san).then(|| [mirror].into_iter().collect()),
            path_len: Some(level.path_len),
        });
        let signer_key = if level.foreign_signer { pki.new_key() } else { issuer_key };
        let der = build_certificate_unchecked(&t, Signer::Issuer(&issuer, &signer_key)).unwrap();
        decerts.push(ParsedCertificate::from_der(&der).unwrap());
        keys.push(key);
    }
    let leaf_first: Vec<&ParsedCertificate> = decerts.iter().rev().collect();
    let chain = pki.chain(&leaf_first, &eec);
    BuiltChain {
        pki,
        eec,
        eec_key,
        decerts,
        keys,
        chain,
    }
}

/// Applies `defect` to a valid chain description and returns the input that
/// should exhibit it.
pub fn inject(
    rng: &mut ChaCha20Rng,
    seed: u64,
    at: OffsetDateTime,
    mut levels: Vec<Level>,
    defect: Defect,
) -> ValidationInput {
    let n = levels.len();
    let i = rng.gen_range(0..n);
    let mut host = host_in(&levels[n - 1]);
    match defect {
        Defect::IncludeNotSubset => levels[i].base = DomainName::parse("elsewhere.org").unwrap(),
        Defect::ExcludeNotSubset => {
            levels[i].exclude.insert(DomainName::parse("x.elsewhere.org").unwrap());
        }
        Defect::KeyUsageNotSubset => {
            // an end-entity parent imposes no key usage, so the defect needs a
            // DeCert parent; give single-level chains one
            if levels.len() == 1 {
                let mut top = levels[0].clone();
                top.cn = "top.net".into();
                top.base = DomainName::parse(EEC_NAME).unwrap();
                top.exclude.clear();
                top.path_len = 3;
                levels[0].path_len = levels[0].path_len.min(2);
                levels.insert(0, top);
            }
            let j = rng.gen_range(1..levels.len());
            let mut bits: Vec<u8> = levels[j].key_usage.bits().collect();
            bits.push(7);
            levels[j].key_usage = KeyUsageSet::from_bits(bits).unwrap();
        }
        Defect::PathLenExceeded => {
            levels[i].path_len = if i == 0 { 4 } else { levels[i - 1].path_len };
        }
        Defect::Expired => {
            levels[i].not_before = at - Duration::hours(3);
            levels[i].not_after = at - Duration::seconds(1);
        }
        Defect::NotYetValid => {
            levels[i].not_before = at + Duration::seconds(1);
            levels[i].not_after = at + Duration::hours(3);
        }
        Defect::SignatureInvalid => levels[i].foreign_signer = true,
        Defect::HostnameNotInScope => host = DomainName::parse(EEC_NAME).unwrap(),
        Defect::HostnameExcluded => {
            let leaf = &mut levels[n - 1];
            let ex = leaf.base.child("blocked").unwrap();
            leaf.exclude.insert(ex.clone());
            host = ex.child("www").unwrap();
        }
        Defect::CAFlagInvalid => levels[i].is_ca = true,
        Defect::SANMissing => levels[i].omit_san = true,
        Defect::DelegationInfoMismatch => levels[i].wrong_mirror = true,
        Defect::UntrustedRoot | Defect::Revoked | Defect::ChainMalformed => {}
    }
    let built = build_chain(seed, at, &levels);
    let mut chain = built.chain.clone();
    let mut anchors = built.pki.anchors();
    let mut revocation = RevocationPolicy::None;
    match defect {
        Defect::UntrustedRoot => {
            let mut other = Pki::new(seed ^ 0x5555, at);
            let key = other.new_key();
            let mut t = CertificateTemplate::new(
                "Unrelated Root CA",
                key.public_key_info(),
                Serial::random(other.rng()),
                at - Duration::days(1),
                at + Duration::days(1),
            );
            t.is_ca = true;
            let der = decert::cert::build_certificate(&t, Signer::SelfSigned(&key)).unwrap();
            anchors = vec![ParsedCertificate::from_der(&der).unwrap()];
        }
        Defect::Revoked => {
            let idx = levels.len() - 1 - i.min(levels.len() - 1);
            let target = &chain[idx];
            let (issuer, issuer_key) = if i == 0 {
                (&built.eec, &built.eec_key)
            } else {
                (&built.decerts[i - 1], &built.keys[i - 1])
            };
            let clock = FixedClock::new(at);
            let mut store = RevocationStore::in_memory();
            store.revoke(target.serial(), "keyCompromise", &clock).unwrap();
            let crl = build_crl(&store, issuer, issuer_key, &clock, Duration::hours(1)).unwrap();
            revocation = RevocationPolicy::Crl(vec![crl], FailMode::Open);
        }
        Defect::ChainMalformed => {
            if chain.len() > 3 {
                let j = rng.gen_range(0..chain.len() - 3);
                chain.remove(j + 1);
            } else {
                chain.swap(0, 1);
            }
        }
        _ => {}
    }
    ValidationInput::new(chain, anchors, host, at).with_revocation(revocation)
}

// ---------------------------------------------------------------------------
// Command line

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the built `decert` binary in `dir` with `DECERT_STORE_DIR` cleared
/// unless given in `env`.
pub fn decert_bin(dir: &std::path::Path, env: &[(&str, &str)], args: &[&str]) -> CliRun {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_decert"));
    cmd.current_dir(dir).args(args).env_remove(decert::cli::STORE_DIR_ENV);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("decert binary runs");
    CliRun {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// The same program run in-process.
pub fn decert_lib(args: &[&str]) -> CliRun {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = decert::cli::run(std::iter::once("decert").chain(args.iter().copied()), &mut out, &mut err);
    CliRun {
        code,
        stdout: String::from_utf8_lossy(&out).into_owned(),
        stderr: String::from_utf8_lossy(&err).into_owned(),
    }
}

pub fn rfc3339(t: OffsetDateTime) -> String {
    t.format(&time::format_description::well_known::Rfc3339).unwrap()
}
