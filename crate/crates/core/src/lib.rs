// SPDX-License-Identifier: Apache-2.0

pub mod cert;
pub mod clock;
pub mod der;
pub mod keys;
pub mod name_scope;
pub mod revocation;
pub mod validation;
pub mod issuance;
pub mod fixtures;
pub mod harness;
pub mod authority;
pub mod cli;
