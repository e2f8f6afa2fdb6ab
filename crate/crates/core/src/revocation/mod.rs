// SPDX-License-Identifier: Apache-2.0

//! Owner-managed revocation: a persistent store, owner-signed CRLs and
//! revocation records published as DNS TXT entries.

mod crl;
mod dns;
mod store;

use thiserror::Error;

use crate::cert::Serial;

pub use crl::{build_crl, check_crl, CrlDocument, CrlStatus, DEFAULT_CRL_LIFETIME};
pub use dns::{
    check_dns, dns_record_name, export_zone, revocation_domain, CountingResolver, DnsStatus, FailingResolver,
    LookupError, RevocationZone, TxtResolver, RECORD_LABEL,
};
pub use store::{revoke, RevocationRecord, RevocationStore};

#[derive(Debug, Error)]
pub enum RevocationError {
    #[error("serial {0} is already revoked")]
    AlreadyRevoked(Serial),
    #[error("invalid revocation reason {0:?}")]
    InvalidReason(String),
    #[error("corrupt revocation store: {0}")]
    Corrupt(String),
    #[error("signing failure: {0}")]
    SigningFailure(String),
    #[error("malformed CRL: {0}")]
    MalformedCrl(String),
    #[error("malformed zone file: {0}")]
    MalformedZone(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
