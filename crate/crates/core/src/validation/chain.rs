// SPDX-License-Identifier: Apache-2.0

use crate::cert::ParsedCertificate;
use crate::name_scope::{DomainName, DomainPattern, DomainScope};

use super::report::{Violation, ViolationCode};

/// A presented chain split into its three segments, leaf first.
#[derive(Debug, Clone)]
pub struct CertificateChain {
    /// Delegation certificates, leaf first.
    pub decerts: Vec<ParsedCertificate>,
    /// The domain owner's end-entity certificate.
    pub eec: ParsedCertificate,
    /// Intermediates and possibly the root, lowest first.
    pub cas: Vec<ParsedCertificate>,
}

impl CertificateChain {
    pub fn segment_lengths(&self) -> (usize, usize, usize) {
        (self.decerts.len(), 1, self.cas.len())
    }

    pub fn len(&self) -> usize {
        self.decerts.len() + 1 + self.cas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eec_index(&self) -> usize {
        self.decerts.len()
    }

    pub fn get(&self, index: usize) -> Option<&ParsedCertificate> {
        let d = self.decerts.len();
        match index {
            i if i < d => self.decerts.get(i),
            i if i == d => Some(&self.eec),
            i => self.cas.get(i - d - 1),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParsedCertificate> {
        self.decerts.iter().chain(std::iter::once(&self.eec)).chain(self.cas.iter())
    }

    pub fn leaf(&self) -> &ParsedCertificate {
        self.decerts.first().unwrap_or(&self.eec)
    }

    pub fn into_vec(self) -> Vec<ParsedCertificate> {
        let mut v = self.decerts;
        v.push(self.eec);
        v.extend(self.cas);
        v
    }
}

/// Splits `raw` into a leading run of DeCerts, the end-entity certificate and
/// the CA segment.
pub fn split_chain(raw: &[ParsedCertificate]) -> Result<CertificateChain, Violation> {
    let malformed = |i: usize, why: &str| Violation::new(i, ViolationCode::ChainMalformed, why);
    if raw.is_empty() {
        return Err(malformed(0, "empty chain"));
    }
    let d = raw.iter().take_while(|c| c.is_decert()).count();
    let Some(eec) = raw.get(d) else {
        return Err(malformed(d - 1, "chain has no end-entity certificate below the delegations"));
    };
    if d > 0 && eec.is_ca() {
        return Err(malformed(d, "delegation certificate issued directly by a CA certificate"));
    }
    if let Some(pos) = raw[d + 1..].iter().position(|c| c.is_decert()) {
        return Err(malformed(d + 1 + pos, "delegation certificate above a non-delegation certificate"));
    }
    Ok(CertificateChain {
        decerts: raw[..d].to_vec(),
        eec: eec.clone(),
        cas: raw[d + 1..].to_vec(),
    })
}

/// The delegation scope an end-entity certificate confers: each SAN name
/// grants itself and, for delegation purposes, everything beneath it.
pub fn eec_delegation_scope(eec: &ParsedCertificate) -> DomainScope {
    let mut include = std::collections::BTreeSet::new();
    for p in eec.san() {
        include.insert(p.clone());
        if let DomainPattern::Exact(d) = p {
            include.insert(DomainPattern::Subtree(d.clone()));
        }
    }
    DomainScope {
        include,
        exclude: Default::default(),
    }
}

/// True when some name lies both within `exclude` and in `pattern`.
fn intersects(pattern: &DomainPattern, exclude: &DomainName) -> bool {
    match pattern {
        DomainPattern::Exact(d) => d.is_within(exclude),
        DomainPattern::Subtree(d) => d.is_within(exclude) || exclude.is_descendant_of(d),
    }
}

/// The leaf's scope, augmented with every ancestor exclude that overlaps it.
/// With no DeCerts this is the end-entity SAN as written.
pub fn effective_scope(chain: &CertificateChain) -> DomainScope {
    let Some(leaf) = chain.decerts.first() else {
        return DomainScope {
            include: chain.eec.san().clone(),
            exclude: Default::default(),
        };
    };
    let mut scope = leaf.scope();
    for ancestor in &chain.decerts[1..] {
        for e in &ancestor.scope().exclude {
            if scope.include.iter().any(|p| intersects(p, e)) {
                scope.exclude.insert(e.clone());
            }
        }
    }
    scope
}
