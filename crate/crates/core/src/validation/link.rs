// SPDX-License-Identifier: Apache-2.0

use crate::cert::{KeyUsageSet, ParsedCertificate};
use crate::name_scope::{excludes_within_include, scope_subset_of, DomainScope, Witness};

use super::chain::eec_delegation_scope;
use super::report::ViolationCode;

pub const DEFAULT_MAX_DECERT_DEPTH: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidatorConfig {
    /// Delegation path budget granted by an end-entity certificate.
    pub max_decert_depth: u8,
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig {
            max_decert_depth: DEFAULT_MAX_DECERT_DEPTH,
        }
    }
}

/// What a certificate may hand down to a delegation it signs. Issuance and
/// validation both judge a link through this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationAuthority {
    pub scope: DomainScope,
    /// `None` places no constraint.
    pub key_usage: Option<KeyUsageSet>,
    /// A child's path length must be strictly below this.
    pub path_budget: u32,
}

impl DelegationAuthority {
    pub fn of(parent: &ParsedCertificate, config: &ValidatorConfig) -> Self {
        if parent.is_decert() {
            DelegationAuthority {
                scope: parent.scope(),
                key_usage: Some(parent.key_usage().unwrap_or_else(KeyUsageSet::all)),
                path_budget: u32::from(parent.delegation_path_len()),
            }
        } else {
            DelegationAuthority {
                scope: eec_delegation_scope(parent),
                key_usage: parent.key_usage(),
                path_budget: u32::from(config.max_decert_depth),
            }
        }
    }

    pub fn check(
        &self,
        child_scope: &DomainScope,
        child_key_usage: KeyUsageSet,
        child_path_len: u8,
    ) -> Vec<(ViolationCode, String)> {
        let mut out = Vec::new();
        let subset = scope_subset_of(child_scope, &self.scope);
        if !subset.is_subset {
            out.push((
                ViolationCode::IncludeNotSubset,
                format!("outside issuer scope: {}", join(&subset.witnesses)),
            ));
        }
        let excl = excludes_within_include(&child_scope.exclude, &self.scope.include);
        if !excl.is_subset {
            out.push((
                ViolationCode::ExcludeNotSubset,
                format!("exclude not within issuer include: {}", join(&excl.witnesses)),
            ));
        }
        if let Some(parent_ku) = self.key_usage {
            if !child_key_usage.is_subset_of(&parent_ku) {
                out.push((
                    ViolationCode::KeyUsageNotSubset,
                    format!(
                        "key usage {} not within {}; extra {}",
                        child_key_usage,
                        parent_ku,
                        child_key_usage.difference(&parent_ku)
                    ),
                ));
            }
        }
        if u32::from(child_path_len) >= self.path_budget {
            let detail = if self.path_budget == 0 {
                format!("issuer path length 0 admits no delegation (child requests {child_path_len})")
            } else {
                format!("path length {child_path_len} exceeds issuer limit {}", self.path_budget - 1)
            };
            out.push((ViolationCode::PathLenExceeded, detail));
        }
        out
    }
}

fn join(witnesses: &[Witness]) -> String {
    witnesses.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Delegation checks on one link, where `parent` is a DeCert or the
/// end-entity certificate and `child` is a DeCert it signed.
pub fn validate_link(
    parent: &ParsedCertificate,
    child: &ParsedCertificate,
    config: &ValidatorConfig,
) -> Vec<(ViolationCode, String)> {
    DelegationAuthority::of(parent, config).check(
        &child.scope(),
        child.key_usage().unwrap_or_else(KeyUsageSet::all),
        child.delegation_path_len(),
    )
}
