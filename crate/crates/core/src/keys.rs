// SPDX-License-Identifier: Apache-2.0

//! Signing keys, SubjectPublicKeyInfo handling and signature verification.
//!
//! ECDSA P-256 with SHA-256 is the default; Ed25519 is supported for both
//! signing and verification. RSA keys are recognized when parsing so such
//! certificates can be inspected, but RSA signatures are never accepted.

use std::fmt;

use ed25519_dalek::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey};
use p256::ecdsa::signature::{Signer, Verifier};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::der::{self, Oid, Reader};

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("unsupported key: {0}")]
    Unsupported(String),
    #[error("key encoding error: {0}")]
    Encoding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyAlgorithm {
    EcdsaP256,
    Ed25519,
    Rsa,
}

impl KeyAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            KeyAlgorithm::EcdsaP256 => "ecdsa-p256",
            KeyAlgorithm::Ed25519 => "ed25519",
            KeyAlgorithm::Rsa => "rsa",
        }
    }
}

impl fmt::Display for KeyAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KeyAlgorithm {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ecdsa-p256" => Ok(KeyAlgorithm::EcdsaP256),
            "ed25519" => Ok(KeyAlgorithm::Ed25519),
            other => Err(KeyError::Unsupported(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignatureAlgorithm {
    EcdsaSha256,
    Ed25519,
    RsaPkcs1Sha256,
}

impl SignatureAlgorithm {
    fn oid(self) -> Oid {
        match self {
            SignatureAlgorithm::EcdsaSha256 => Oid::new(&[1, 2, 840, 10045, 4, 3, 2]),
            SignatureAlgorithm::Ed25519 => Oid::new(&[1, 3, 101, 112]),
            SignatureAlgorithm::RsaPkcs1Sha256 => Oid::new(&[1, 2, 840, 113549, 1, 1, 11]),
        }
    }

    /// DER AlgorithmIdentifier.
    pub fn to_der(self) -> Vec<u8> {
        match self {
            SignatureAlgorithm::RsaPkcs1Sha256 => der::sequence(&[&der::oid(&self.oid()), &der::null()]),
            _ => der::sequence(&[&der::oid(&self.oid())]),
        }
    }

    pub fn from_der(content: &[u8]) -> Result<Self, der::DerError> {
        let mut r = Reader::new(content);
        let oid = r.read_oid()?;
        let alg = [
            SignatureAlgorithm::EcdsaSha256,
            SignatureAlgorithm::Ed25519,
            SignatureAlgorithm::RsaPkcs1Sha256,
        ]
        .into_iter()
        .find(|a| a.oid() == oid)
        .ok_or_else(|| der::DerError(format!("unknown signature algorithm {oid}")))?;
        if alg == SignatureAlgorithm::RsaPkcs1Sha256 {
            r.read_optional(der::NULL)?;
        }
        r.finish()?;
        Ok(alg)
    }
}

/// DER-encoded SubjectPublicKeyInfo.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKeyInfo(Vec<u8>);

impl PublicKeyInfo {
    pub fn from_der(bytes: &[u8]) -> Result<Self, KeyError> {
        let spki = PublicKeyInfo(bytes.to_vec());
        spki.algorithm()?;
        Ok(spki)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn algorithm(&self) -> Result<KeyAlgorithm, KeyError> {
        let bad = |e: der::DerError| KeyError::Encoding(e.0);
        let mut outer = Reader::new(&self.0);
        let mut spki = outer.nested(der::SEQUENCE).map_err(bad)?;
        outer.finish().map_err(bad)?;
        let mut alg = spki.nested(der::SEQUENCE).map_err(bad)?;
        let oid = alg.read_oid().map_err(bad)?;
        spki.read_bit_string().map_err(bad)?;
        spki.finish().map_err(bad)?;
        let ec = Oid::new(&[1, 2, 840, 10045, 2, 1]);
        if oid == ec {
            let curve = alg.read_oid().map_err(bad)?;
            if curve == Oid::new(&[1, 2, 840, 10045, 3, 1, 7]) {
                return Ok(KeyAlgorithm::EcdsaP256);
            }
            return Err(KeyError::Unsupported(format!("EC curve {curve}")));
        }
        if oid == Oid::new(&[1, 3, 101, 112]) {
            return Ok(KeyAlgorithm::Ed25519);
        }
        if oid == Oid::new(&[1, 2, 840, 113549, 1, 1, 1]) {
            return Ok(KeyAlgorithm::Rsa);
        }
        Err(KeyError::Unsupported(format!("key algorithm {oid}")))
    }

    /// Nominal key size in bits.
    pub fn key_bits(&self) -> Result<u32, KeyError> {
        match self.algorithm()? {
            KeyAlgorithm::EcdsaP256 | KeyAlgorithm::Ed25519 => Ok(256),
            KeyAlgorithm::Rsa => {
                let bad = |e: der::DerError| KeyError::Encoding(e.0);
                let mut spki = Reader::new(&self.0).nested(der::SEQUENCE).map_err(bad)?;
                spki.read(der::SEQUENCE).map_err(bad)?;
                let (_, key) = spki.read_bit_string().map_err(bad)?;
                let mut rsa = Reader::new(key).nested(der::SEQUENCE).map_err(bad)?;
                let modulus = rsa.read_integer_bytes().map_err(bad)?;
                let m = if modulus[0] == 0 { &modulus[1..] } else { modulus };
                Ok((m.len() as u32) * 8 - m.first().map_or(0, |b| b.leading_zeros()))
            }
        }
    }

    /// SHA-256 over the DER encoding, used to bind renewal nonces to a key.
    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(&self.0).into()
    }

    pub fn fingerprint_hex(&self) -> String {
        hex::encode(self.fingerprint())
    }

    pub fn verify(&self, alg: SignatureAlgorithm, message: &[u8], signature: &[u8]) -> bool {
        match (alg, self.algorithm()) {
            (SignatureAlgorithm::EcdsaSha256, Ok(KeyAlgorithm::EcdsaP256)) => {
                let Ok(key) = p256::ecdsa::VerifyingKey::from_public_key_der(&self.0) else {
                    return false;
                };
                let Ok(sig) = p256::ecdsa::Signature::from_der(signature) else {
                    return false;
                };
                key.verify(message, &sig).is_ok()
            }
            (SignatureAlgorithm::Ed25519, Ok(KeyAlgorithm::Ed25519)) => {
                let Ok(key) = ed25519_dalek::VerifyingKey::from_public_key_der(&self.0) else {
                    return false;
                };
                let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else {
                    return false;
                };
                key.verify_strict(message, &sig).is_ok()
            }
            _ => false,
        }
    }
}

impl fmt::Debug for PublicKeyInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKeyInfo({})", &self.fingerprint_hex()[..16])
    }
}

/// A private key able to sign certificates, CRLs, requests and TLS handshakes.
#[derive(Clone)]
pub enum SigningKey {
    EcdsaP256(p256::ecdsa::SigningKey),
    Ed25519(ed25519_dalek::SigningKey),
}

impl SigningKey {
    pub fn generate<R: RngCore + CryptoRng>(alg: KeyAlgorithm, rng: &mut R) -> Result<Self, KeyError> {
        match alg {
            KeyAlgorithm::EcdsaP256 => Ok(SigningKey::EcdsaP256(p256::ecdsa::SigningKey::random(rng))),
            KeyAlgorithm::Ed25519 => Ok(SigningKey::Ed25519(ed25519_dalek::SigningKey::generate(rng))),
            KeyAlgorithm::Rsa => Err(KeyError::Unsupported("RSA key generation".into())),
        }
    }

    pub fn algorithm(&self) -> KeyAlgorithm {
        match self {
            SigningKey::EcdsaP256(_) => KeyAlgorithm::EcdsaP256,
            SigningKey::Ed25519(_) => KeyAlgorithm::Ed25519,
        }
    }

    pub fn signature_algorithm(&self) -> SignatureAlgorithm {
        match self {
            SigningKey::EcdsaP256(_) => SignatureAlgorithm::EcdsaSha256,
            SigningKey::Ed25519(_) => SignatureAlgorithm::Ed25519,
        }
    }

    pub fn public_key_info(&self) -> PublicKeyInfo {
        let doc = match self {
            SigningKey::EcdsaP256(k) => k.verifying_key().to_public_key_der(),
            SigningKey::Ed25519(k) => k.verifying_key().to_public_key_der(),
        };
        PublicKeyInfo(doc.expect("public key encoding is infallible").as_bytes().to_vec())
    }

    /// Signs `message`; ECDSA signatures are DER encoded.
    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        match self {
            SigningKey::EcdsaP256(k) => {
                let sig: p256::ecdsa::Signature = k.sign(message);
                sig.to_der().as_bytes().to_vec()
            }
            SigningKey::Ed25519(k) => k.sign(message).to_bytes().to_vec(),
        }
    }

    pub fn to_pkcs8_pem(&self) -> String {
        let le = ed25519_dalek::pkcs8::spki::der::pem::LineEnding::LF;
        let pem = match self {
            SigningKey::EcdsaP256(k) => k.to_pkcs8_pem(le),
            SigningKey::Ed25519(k) => k.to_pkcs8_pem(le),
        };
        pem.expect("private key encoding is infallible").to_string()
    }

    pub fn from_pkcs8_pem(text: &str) -> Result<Self, KeyError> {
        if let Ok(k) = p256::ecdsa::SigningKey::from_pkcs8_pem(text) {
            return Ok(SigningKey::EcdsaP256(k));
        }
        if let Ok(k) = ed25519_dalek::SigningKey::from_pkcs8_pem(text) {
            return Ok(SigningKey::Ed25519(k));
        }
        Err(KeyError::Unsupported(
            "expected a PKCS#8 ECDSA P-256 or Ed25519 private key".into(),
        ))
    }
}

impl fmt::Debug for SigningKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SigningKey({}, {:?})", self.algorithm(), self.public_key_info())
    }
}
