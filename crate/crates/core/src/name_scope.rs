// SPDX-License-Identifier: Apache-2.0

//! Domain names, delegation patterns and the set algebra over them.
//!
//! A [`DomainScope`] denotes a (usually infinite) set of host names: the union
//! of its include patterns minus the subtrees rooted at its exclude entries.
//! [`scope_subset_of`] decides inclusion between two such sets symbolically,
//! without enumerating names.
//!
//! Wildcards are not RFC 6125 single-label wildcards: `*.d` matches every
//! strict descendant of `d` at any depth, and never `d` itself.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const MAX_NAME_LEN: usize = 253;
const MAX_LABEL_LEN: usize = 63;
const MAX_LABELS: usize = 127;
const MAX_UNIVERSE: u64 = 1_000_000;
const MAX_UNIVERSE_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("malformed name {0:?}: {1}")]
    MalformedName(String, &'static str),
    #[error("universe too large: {0} names")]
    UniverseTooLarge(u64),
}

/// A normalized, lowercase, dot-separated host name.
///
/// Ordering is byte-wise on the textual form, which is also the canonical
/// sort order used by the extension codec.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainName(String);

impl DomainName {
    /// Parses a host name. Labels are letters, digits and hyphens.
    pub fn parse(text: &str) -> Result<Self, NameError> {
        Self::parse_with(text, false)
    }

    /// Parses a DNS owner name, which may additionally carry underscore
    /// prefixed service labels such as `_decert-revoked`.
    pub fn parse_dns_owner(text: &str) -> Result<Self, NameError> {
        Self::parse_with(text, true)
    }

    fn parse_with(text: &str, allow_underscore: bool) -> Result<Self, NameError> {
        let bad = |why| NameError::MalformedName(text.to_owned(), why);
        if text.is_empty() {
            return Err(bad("empty name"));
        }
        if !text.is_ascii() {
            return Err(bad("non-ASCII name"));
        }
        let lower = text.to_ascii_lowercase();
        if lower.len() > MAX_NAME_LEN {
            return Err(bad("name longer than 253 octets"));
        }
        let mut count = 0;
        for label in lower.split('.') {
            count += 1;
            if label.is_empty() {
                return Err(bad("empty label"));
            }
            if label.len() > MAX_LABEL_LEN {
                return Err(bad("label longer than 63 octets"));
            }
            let body = match label.strip_prefix('_') {
                Some(rest) if allow_underscore => rest,
                _ => label,
            };
            if body.is_empty() {
                return Err(bad("empty label"));
            }
            if body.contains('*') {
                return Err(bad("wildcard not allowed here"));
            }
            if !body.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
                return Err(bad("illegal character in label"));
            }
            if body.starts_with('-') || body.ends_with('-') {
                return Err(bad("label starts or ends with a hyphen"));
            }
        }
        if count > MAX_LABELS {
            return Err(bad("more than 127 labels"));
        }
        Ok(DomainName(lower))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Labels in textual order, most specific first.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }

    pub fn label_count(&self) -> usize {
        self.0.bytes().filter(|&b| b == b'.').count() + 1
    }

    /// True when `self` equals `ancestor` or lies anywhere beneath it.
    pub fn is_within(&self, ancestor: &DomainName) -> bool {
        self == ancestor || self.is_descendant_of(ancestor)
    }

    /// True when `self` lies strictly beneath `ancestor`.
    pub fn is_descendant_of(&self, ancestor: &DomainName) -> bool {
        let (me, base) = (self.0.as_bytes(), ancestor.0.as_bytes());
        me.len() > base.len() + 1
            && me.ends_with(base)
            && me[me.len() - base.len() - 1] == b'.'
    }

    /// Prepends one label.
    pub fn child(&self, label: &str) -> Result<DomainName, NameError> {
        DomainName::parse(&format!("{label}.{}", self.0))
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DomainName({})", self.0)
    }
}

impl FromStr for DomainName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainName::parse(s)
    }
}

/// An include pattern: a single name, or every strict descendant of a name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainPattern {
    Exact(DomainName),
    Subtree(DomainName),
}

impl DomainPattern {
    pub fn parse(text: &str) -> Result<Self, NameError> {
        match text.strip_prefix("*.") {
            Some(base) => {
                if base.contains('*') {
                    return Err(NameError::MalformedName(
                        text.to_owned(),
                        "wildcard must be the leftmost whole label",
                    ));
                }
                Ok(DomainPattern::Subtree(DomainName::parse(base)?))
            }
            None => {
                if text.contains('*') {
                    return Err(NameError::MalformedName(
                        text.to_owned(),
                        "wildcard must be the leftmost whole label",
                    ));
                }
                Ok(DomainPattern::Exact(DomainName::parse(text)?))
            }
        }
    }

    pub fn base(&self) -> &DomainName {
        match self {
            DomainPattern::Exact(d) | DomainPattern::Subtree(d) => d,
        }
    }

    pub fn matches(&self, name: &DomainName) -> bool {
        match self {
            DomainPattern::Exact(d) => name == d,
            DomainPattern::Subtree(d) => name.is_descendant_of(d),
        }
    }
}

impl fmt::Display for DomainPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainPattern::Exact(d) => write!(f, "{d}"),
            DomainPattern::Subtree(d) => write!(f, "*.{d}"),
        }
    }
}

impl fmt::Debug for DomainPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DomainPattern({self})")
    }
}

impl FromStr for DomainPattern {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainPattern::parse(s)
    }
}

pub fn parse_pattern(text: &str) -> Result<DomainPattern, NameError> {
    DomainPattern::parse(text)
}

pub fn matches(pattern: &DomainPattern, name: &DomainName) -> bool {
    pattern.matches(name)
}

/// Include patterns minus exclude subtrees. An exclude entry `e` removes `e`
/// itself and everything beneath it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DomainScope {
    pub include: BTreeSet<DomainPattern>,
    pub exclude: BTreeSet<DomainName>,
}

impl DomainScope {
    pub fn new(
        include: impl IntoIterator<Item = DomainPattern>,
        exclude: impl IntoIterator<Item = DomainName>,
    ) -> Self {
        DomainScope {
            include: include.into_iter().collect(),
            exclude: exclude.into_iter().collect(),
        }
    }

    /// Builds a scope from textual patterns and names.
    pub fn parse(include: &[&str], exclude: &[&str]) -> Result<Self, NameError> {
        Ok(DomainScope {
            include: include
                .iter()
                .map(|s| DomainPattern::parse(s))
                .collect::<Result<_, _>>()?,
            exclude: exclude
                .iter()
                .map(|s| DomainName::parse(s))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn contains(&self, name: &DomainName) -> bool {
        self.is_included(name) && !self.is_excluded(name)
    }

    pub fn is_included(&self, name: &DomainName) -> bool {
        self.include.iter().any(|p| p.matches(name))
    }

    pub fn is_excluded(&self, name: &DomainName) -> bool {
        self.exclude.iter().any(|e| name.is_within(e))
    }

    /// Drops include patterns already covered by another include and exclude
    /// entries nested under another exclude. Display only; validation always
    /// works on the encoded sets.
    pub fn normalized(&self) -> DomainScope {
        let include = self
            .include
            .iter()
            .filter(|p| {
                !self.include.iter().any(|q| {
                    q != *p
                        && match (q, p) {
                            (DomainPattern::Subtree(b), other) => other.base().is_descendant_of(b),
                            _ => false,
                        }
                })
            })
            .cloned()
            .collect();
        let exclude = self
            .exclude
            .iter()
            .filter(|e| !self.exclude.iter().any(|f| e.is_descendant_of(f)))
            .cloned()
            .collect();
        DomainScope { include, exclude }
    }
}

impl fmt::Display for DomainScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inc: Vec<String> = self.include.iter().map(ToString::to_string).collect();
        let exc: Vec<String> = self.exclude.iter().map(ToString::to_string).collect();
        write!(f, "{{include: [{}], exclude: [{}]}}", inc.join(", "), exc.join(", "))
    }
}

pub fn scope_contains(scope: &DomainScope, name: &DomainName) -> bool {
    scope.contains(name)
}

/// A child region that is not covered by the parent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Witness {
    Pattern(DomainPattern),
    Name(DomainName),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Pattern(p) => write!(f, "{p}"),
            Witness::Name(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetVerdict {
    pub is_subset: bool,
    pub witnesses: Vec<Witness>,
}

impl SubsetVerdict {
    fn from_witnesses(mut witnesses: Vec<Witness>) -> Self {
        witnesses.sort();
        witnesses.dedup();
        SubsetVerdict {
            is_subset: witnesses.is_empty(),
            witnesses,
        }
    }
}

/// Decides `denotation(child) ⊆ denotation(parent)` over the unbounded
/// universe of names.
///
/// For each child include pattern, the part of it that survives the child's
/// own excludes must be covered by some parent include and must avoid every
/// parent exclude subtree. A subtree pattern `*.d` always contains names with
/// a label nobody mentions, so it can only be covered by a parent subtree
/// rooted at `d` or above it.
pub fn scope_subset_of(child: &DomainScope, parent: &DomainScope) -> SubsetVerdict {
    let mut witnesses = Vec::new();
    let child_excludes = |n: &DomainName| child.exclude.iter().any(|e| n.is_within(e));

    for pattern in &child.include {
        match pattern {
            DomainPattern::Exact(d) => {
                if child_excludes(d) {
                    continue;
                }
                if !parent.contains(d) {
                    witnesses.push(Witness::Name(d.clone()));
                }
            }
            DomainPattern::Subtree(d) => {
                if child_excludes(d) {
                    // every descendant of d is excluded as well
                    continue;
                }
                let covered = parent.include.iter().any(|q| match q {
                    DomainPattern::Subtree(g) => d.is_within(g),
                    DomainPattern::Exact(_) => false,
                });
                if !covered {
                    witnesses.push(Witness::Pattern(pattern.clone()));
                }
                for f in &parent.exclude {
                    if d.is_within(f) {
                        witnesses.push(Witness::Pattern(pattern.clone()));
                    } else if f.is_descendant_of(d) && !child_excludes(f) {
                        witnesses.push(Witness::Name(f.clone()));
                    }
                }
            }
        }
    }
    SubsetVerdict::from_witnesses(witnesses)
}

/// Every child exclude entry must itself be a name the parent includes.
pub fn excludes_within_include(
    child_excludes: &BTreeSet<DomainName>,
    parent_include: &BTreeSet<DomainPattern>,
) -> SubsetVerdict {
    SubsetVerdict::from_witnesses(
        child_excludes
            .iter()
            .filter(|e| !parent_include.iter().any(|p| p.matches(e)))
            .map(|e| Witness::Name(e.clone()))
            .collect(),
    )
}

/// All names formed by prepending between zero and `max_depth` labels from
/// `labels` to `suffix`. Shorter names come first; names of equal depth are
/// ordered lexicographically by label sequence.
pub fn enumerate_universe(
    labels: &BTreeSet<String>,
    max_depth: usize,
    suffix: &DomainName,
) -> Result<Vec<DomainName>, NameError> {
    if labels.is_empty() {
        return Err(NameError::MalformedName(String::new(), "empty label alphabet"));
    }
    let n = labels.len() as u64;
    let mut total: u64 = 0;
    let mut layer: u64 = 1;
    for depth in 0..=max_depth {
        if depth > 0 {
            layer = layer.saturating_mul(n);
        }
        total = total.saturating_add(layer);
    }
    if max_depth > MAX_UNIVERSE_DEPTH || total > MAX_UNIVERSE {
        return Err(NameError::UniverseTooLarge(total));
    }
    for l in labels {
        suffix.child(l)?;
    }

    let mut out = Vec::with_capacity(total as usize);
    let mut frontier: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..=max_depth {
        let mut next = Vec::with_capacity(frontier.len() * labels.len());
        for prefix in &frontier {
            let mut text = String::new();
            for l in prefix {
                text.push_str(l);
                text.push('.');
            }
            text.push_str(suffix.as_str());
            out.push(DomainName::parse(&text)?);
            for l in labels {
                let mut p = prefix.clone();
                p.push(l.as_str());
                next.push(p);
            }
        }
        frontier = next;
    }
    Ok(out)
}
