// SPDX-License-Identifier: Apache-2.0

//! Domain-owner side: delegation requests, policy checks, signing and
//! key-reuse renewal.

mod issuer;
mod policy;
mod request;

use thiserror::Error;

use crate::cert::{CertError, Serial};
use crate::revocation::RevocationError;

pub use issuer::{issue_decert, renew_decert, IssuedIndex, Issuer, RenewKey};
pub use policy::{
    policy_check, IssuerPolicy, PolicyCode, PolicyViolation, CLOCK_SKEW_GRACE, DEFAULT_VALIDITY, MAX_VALIDITY,
    MIN_VALIDITY,
};
pub use request::{create_request, DelegationRequest};

#[derive(Debug, Error)]
pub enum IssuanceError {
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("unsupported algorithm: {0}")]
    UnsupportedAlgorithm(String),
    #[error("policy violation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    PolicyViolation(Vec<PolicyViolation>),
    #[error("invalid validity: {0}")]
    InvalidValidity(String),
    #[error("no matching certificate was issued to {0}")]
    UnknownSubject(String),
    #[error("certificate {0} has been revoked")]
    RevokedSubject(Serial),
    #[error("issuer key does not match issuer certificate")]
    KeyMismatch,
    #[error(transparent)]
    Certificate(#[from] CertError),
    #[error(transparent)]
    Revocation(#[from] RevocationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
