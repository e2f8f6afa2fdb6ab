// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use time::Duration;

use crate::cert::{KeyUsageSet, ParsedCertificate};
use crate::keys::KeyAlgorithm;
use crate::validation::{DelegationAuthority, ValidatorConfig, ViolationCode, DEFAULT_MAX_DECERT_DEPTH};

use super::request::DelegationRequest;

pub const DEFAULT_VALIDITY: Duration = Duration::hours(6);
pub const MIN_VALIDITY: Duration = Duration::minutes(1);
pub const MAX_VALIDITY: Duration = Duration::days(30);
pub const CLOCK_SKEW_GRACE: Duration = Duration::seconds(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyCode {
    IncludeNotSubset,
    ExcludeNotSubset,
    KeyUsageNotSubset,
    PathLenExceeded,
    ProofOfPossessionInvalid,
    KeyAlgorithmNotAllowed,
    KeyTooSmall,
}

impl PolicyCode {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyCode::IncludeNotSubset => "IncludeNotSubset",
            PolicyCode::ExcludeNotSubset => "ExcludeNotSubset",
            PolicyCode::KeyUsageNotSubset => "KeyUsageNotSubset",
            PolicyCode::PathLenExceeded => "PathLenExceeded",
            PolicyCode::ProofOfPossessionInvalid => "ProofOfPossessionInvalid",
            PolicyCode::KeyAlgorithmNotAllowed => "KeyAlgorithmNotAllowed",
            PolicyCode::KeyTooSmall => "KeyTooSmall",
        }
    }

    fn from_link(code: ViolationCode) -> PolicyCode {
        match code {
            ViolationCode::IncludeNotSubset => PolicyCode::IncludeNotSubset,
            ViolationCode::ExcludeNotSubset => PolicyCode::ExcludeNotSubset,
            ViolationCode::KeyUsageNotSubset => PolicyCode::KeyUsageNotSubset,
            ViolationCode::PathLenExceeded => PolicyCode::PathLenExceeded,
            other => unreachable!("link checks never yield {other}"),
        }
    }
}

impl fmt::Display for PolicyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PolicyViolation {
    pub code: PolicyCode,
    pub detail: String,
}

impl fmt::Display for PolicyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.code, self.detail)
    }
}

/// What the domain owner is willing to sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuerPolicy {
    pub allowed_key_algorithms: Vec<KeyAlgorithm>,
    pub min_key_bits: u32,
    pub max_validity: Duration,
    pub default_validity: Duration,
    /// Delegation path budget when issuing directly from the end-entity
    /// certificate.
    pub max_path_len: u8,
    pub allowed_key_usage: KeyUsageSet,
}

impl Default for IssuerPolicy {
    fn default() -> Self {
        IssuerPolicy {
            allowed_key_algorithms: vec![KeyAlgorithm::EcdsaP256, KeyAlgorithm::Ed25519],
            min_key_bits: 256,
            max_validity: MAX_VALIDITY,
            default_validity: DEFAULT_VALIDITY,
            max_path_len: DEFAULT_MAX_DECERT_DEPTH,
            allowed_key_usage: KeyUsageSet::all(),
        }
    }
}

impl IssuerPolicy {
    /// Resolves a requested validity against the policy bounds.
    pub fn validity(&self, requested: Option<Duration>) -> Result<Duration, String> {
        let v = requested.unwrap_or(self.default_validity);
        let max = self.max_validity.min(MAX_VALIDITY);
        if v < MIN_VALIDITY || v > max {
            return Err(format!("validity {v} outside {MIN_VALIDITY}..={max}"));
        }
        Ok(v)
    }

    /// The authority a certificate held by this issuer confers, with the
    /// policy's path budget standing in for an end-entity certificate.
    pub fn authority_of(&self, issuer: &ParsedCertificate) -> DelegationAuthority {
        DelegationAuthority::of(
            issuer,
            &ValidatorConfig {
                max_decert_depth: self.max_path_len,
            },
        )
    }
}

/// Every reason `req` may not be granted under `authority`. Empty means the
/// request can be signed.
pub fn policy_check(
    req: &DelegationRequest,
    policy: &IssuerPolicy,
    authority: &DelegationAuthority,
) -> Vec<PolicyViolation> {
    let mut out: Vec<PolicyViolation> = authority
        .check(&req.scope, req.key_usage, req.path_len)
        .into_iter()
        .map(|(code, detail)| PolicyViolation {
            code: PolicyCode::from_link(code),
            detail,
        })
        .collect();
    if !req.key_usage.is_subset_of(&policy.allowed_key_usage) {
        out.push(PolicyViolation {
            code: PolicyCode::KeyUsageNotSubset,
            detail: format!(
                "key usage {} not allowed by policy {}",
                req.key_usage, policy.allowed_key_usage
            ),
        });
    }
    if !req.verify_proof() {
        out.push(PolicyViolation {
            code: PolicyCode::ProofOfPossessionInvalid,
            detail: "request signature does not verify under the requested key".into(),
        });
    }
    match req.public_key.algorithm() {
        Ok(alg) if policy.allowed_key_algorithms.contains(&alg) => {
            match req.public_key.key_bits() {
                Ok(bits) if bits >= policy.min_key_bits => {}
                Ok(bits) => out.push(PolicyViolation {
                    code: PolicyCode::KeyTooSmall,
                    detail: format!("{bits}-bit key below {}", policy.min_key_bits),
                }),
                Err(e) => out.push(PolicyViolation {
                    code: PolicyCode::KeyTooSmall,
                    detail: e.to_string(),
                }),
            }
        }
        Ok(alg) => out.push(PolicyViolation {
            code: PolicyCode::KeyAlgorithmNotAllowed,
            detail: format!("{alg} keys are not accepted"),
        }),
        Err(e) => out.push(PolicyViolation {
            code: PolicyCode::KeyAlgorithmNotAllowed,
            detail: e.to_string(),
        }),
    }
    out.sort();
    out
}
