// SPDX-License-Identifier: Apache-2.0

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use time::Duration;

use crate::issuance::IssuerPolicy;
use crate::keys::KeyAlgorithm;

use super::AuthorityError;

pub const DEFAULT_NONCE_LIFETIME: Duration = Duration::seconds(120);
pub const DEFAULT_RENEWALS_PER_HOUR: u32 = 10;

/// Service configuration, read from TOML:
///
/// ```toml
/// listen = "127.0.0.1:8440"
/// issuer_chain = "owner/chain.pem"   # issuer certificate first
/// issuer_key = "owner/key.pem"
/// store_dir = "store"
/// nonce_lifetime_secs = 120
/// renewals_per_hour = 10
///
/// [policy]
/// default_validity_secs = 21600
/// max_validity_secs = 2592000
/// max_path_len = 4
/// key_algorithms = ["ecdsa-p256", "ed25519"]
/// ```
///
/// Relative paths are resolved against the directory holding the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthorityConfig {
    pub listen: SocketAddr,
    pub issuer_chain: PathBuf,
    pub issuer_key: PathBuf,
    pub store_dir: PathBuf,
    #[serde(default = "default_nonce_secs")]
    pub nonce_lifetime_secs: u64,
    #[serde(default = "default_renewals")]
    pub renewals_per_hour: u32,
    #[serde(default)]
    pub policy: PolicyConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub default_validity_secs: Option<i64>,
    pub max_validity_secs: Option<i64>,
    pub max_path_len: Option<u8>,
    pub key_algorithms: Option<Vec<String>>,
}

fn default_nonce_secs() -> u64 {
    DEFAULT_NONCE_LIFETIME.whole_seconds() as u64
}

fn default_renewals() -> u32 {
    DEFAULT_RENEWALS_PER_HOUR
}

impl AuthorityConfig {
    pub fn load(path: &Path) -> Result<Self, AuthorityError> {
        let text = std::fs::read_to_string(path).map_err(|e| AuthorityError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            for p in [&mut config.issuer_chain, &mut config.issuer_key, &mut config.store_dir] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, AuthorityError> {
        let config: AuthorityConfig = toml::from_str(text).map_err(|e| AuthorityError::Config(e.to_string()))?;
        config.policy()?;
        if config.nonce_lifetime_secs == 0 {
            return Err(AuthorityError::Config("nonce_lifetime_secs must be positive".into()));
        }
        Ok(config)
    }

    pub fn nonce_lifetime(&self) -> Duration {
        Duration::seconds(self.nonce_lifetime_secs as i64)
    }

    pub fn policy(&self) -> Result<IssuerPolicy, AuthorityError> {
        let mut policy = IssuerPolicy::default();
        let p = &self.policy;
        if let Some(s) = p.default_validity_secs {
            policy.default_validity = Duration::seconds(s);
        }
        if let Some(s) = p.max_validity_secs {
            policy.max_validity = Duration::seconds(s);
        }
        if let Some(n) = p.max_path_len {
            policy.max_path_len = n;
        }
        if let Some(algs) = &p.key_algorithms {
            policy.allowed_key_algorithms = algs
                .iter()
                .map(|a| a.parse::<KeyAlgorithm>().map_err(|e| AuthorityError::Config(e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        policy
            .validity(None)
            .map_err(|e| AuthorityError::Config(format!("default validity: {e}")))?;
        Ok(policy)
    }

    pub fn issued_path(&self) -> PathBuf {
        self.store_dir.join("issued.pem")
    }

    pub fn revocations_path(&self) -> PathBuf {
        self.store_dir.join("revocations.tsv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = AuthorityConfig::parse(
            "listen = \"127.0.0.1:0\"\nissuer_chain = \"c.pem\"\nissuer_key = \"k.pem\"\nstore_dir = \"s\"\n[policy]\nmax_path_len = 1\nkey_algorithms = [\"ed25519\"]\n",
        )
        .unwrap();
        assert_eq!(c.nonce_lifetime(), DEFAULT_NONCE_LIFETIME);
        assert_eq!(c.renewals_per_hour, 10);
        let p = c.policy().unwrap();
        assert_eq!(p.max_path_len, 1);
        assert_eq!(p.allowed_key_algorithms, vec![KeyAlgorithm::Ed25519]);
    }

    #[test]
    fn rejects_bad_values() {
        let base = "listen = \"127.0.0.1:0\"\nissuer_chain = \"c\"\nissuer_key = \"k\"\nstore_dir = \"s\"\n";
        assert!(AuthorityConfig::parse(&format!("{base}[policy]\ndefault_validity_secs = 5\n")).is_err());
        assert!(AuthorityConfig::parse(&format!("{base}[policy]\nkey_algorithms = [\"dsa\"]\n")).is_err());
        assert!(AuthorityConfig::parse(&format!("{base}colour = 1\n")).is_err());
    }
}
