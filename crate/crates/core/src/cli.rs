// SPDX-License-Identifier: Apache-2.0

//! The `decert` command line. Every subcommand is a thin adapter over the
//! library; [`run`] is the whole program minus process exit.
//!
//! Exit status: 0 success or Accept, 1 Reject or refused issuance, 2 usage
//! or bad input, 3 I/O or network failure.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use time::format_description::well_known::Rfc3339;
use time::{Duration, OffsetDateTime};

use crate::authority::{Authority, AuthorityConfig, AuthorityServer};
use crate::cert::{chain_to_pem, parse_pem_chain, KeyUsageSet, ParsedCertificate, Serial};
use crate::clock::{Clock, FixedClock, SystemClock};
use crate::fixtures::{Corpus, DEFAULT_AT, DEFAULT_SEED};
use crate::harness::{probe, ProbeOptions, TlsServer};
use crate::issuance::{create_request, DelegationRequest, IssuanceError, IssuedIndex, Issuer, IssuerPolicy, RenewKey};
use crate::keys::{KeyAlgorithm, SigningKey};
use crate::name_scope::{DomainName, DomainScope};
use crate::revocation::{build_crl, export_zone, CrlDocument, RevocationStore, RevocationZone, DEFAULT_CRL_LIFETIME};
use crate::validation::{validate_chain, FailMode, Mode, RevocationPolicy, ValidationInput, ValidatorConfig};

pub const STORE_DIR_ENV: &str = "DECERT_STORE_DIR";
const DEFAULT_STORE_DIR: &str = "decert-store";

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "decert", version, about = "Delegation certificates: issue, revoke, validate and serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a private key (PKCS#8 PEM).
    Keygen {
        #[arg(long, default_value = "ecdsa-p256")]
        alg: KeyAlgorithm,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic key from a seed (testing only).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a signed delegation request.
    Csr {
        #[arg(long)]
        subject: String,
        /// Names or wildcards to delegate; repeat or comma-separate.
        #[arg(long, required = true, value_delimiter = ',')]
        include: Vec<String>,
        /// Subtrees withheld from the delegation.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        /// KeyUsage bit numbers, e.g. "0,5".
        #[arg(long, default_value = "0")]
        key_usage: String,
        #[arg(long, default_value_t = 0)]
        path_len: u8,
        /// Delegatee private key.
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// PEM instead of DER output.
        #[arg(long)]
        pem: bool,
    },
    /// Sign a delegation request; prints the chain, new certificate first.
    Issue {
        #[arg(long)]
        csr: PathBuf,
        /// Issuer certificate, optionally followed by its own chain.
        #[arg(long)]
        issuer_cert: PathBuf,
        #[arg(long)]
        issuer_key: PathBuf,
        /// e.g. 90s, 1m, 6h, 30d.
        #[arg(long, value_parser = parse_duration)]
        validity: Option<Duration>,
        #[command(flatten)]
        common: StoreAndTime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-sign a previously issued DeCert with a fresh validity window.
    Renew {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        issuer_cert: PathBuf,
        #[arg(long)]
        issuer_key: PathBuf,
        /// Move the certificate to this new key instead of reusing the old one.
        #[arg(long)]
        rotate_key: Option<PathBuf>,
        #[command(flatten)]
        common: StoreAndTime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record a revocation in the store.
    Revoke {
        /// Serial number in hex.
        #[arg(long)]
        serial: String,
        #[arg(long, default_value = "unspecified")]
        reason: String,
        #[command(flatten)]
        common: StoreAndTime,
    },
    /// Publish the store as a signed CRL (DER).
    Crl {
        #[arg(long)]
        issuer_cert: PathBuf,
        #[arg(long)]
        issuer_key: PathBuf,
        #[arg(long, value_parser = parse_duration)]
        lifetime: Option<Duration>,
        #[command(flatten)]
        common: StoreAndTime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Publish the store as revocation TXT records.
    Zone {
        /// Domain the records live under (normally the issuer's name).
        #[arg(long)]
        domain: DomainName,
        #[command(flatten)]
        common: StoreAndTime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a chain for a hostname and print the report.
    Validate {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        anchors: PathBuf,
        #[arg(long)]
        hostname: DomainName,
        #[arg(long, default_value = "now")]
        at: String,
        #[arg(long, default_value = "decert-aware")]
        mode: Mode,
        #[command(flatten)]
        revocation: RevocationArgs,
        #[arg(long)]
        max_depth: Option<u8>,
        #[arg(long)]
        json: bool,
    },
    /// Write the deterministic fixture corpus and its manifest.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Instant the corpus is built for.
        #[arg(long)]
        at: Option<String>,
    },
    /// Serve a chain over TLS on a local address.
    Serve {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8443")]
        listen: SocketAddr,
    },
    /// Handshake with a server and validate what it presents.
    Probe {
        #[arg(long)]
        hostname: DomainName,
        #[arg(long)]
        connect: SocketAddr,
        #[arg(long)]
        anchors: PathBuf,
        #[arg(long, default_value = "decert-aware")]
        mode: Mode,
        #[arg(long, default_value = "now")]
        at: String,
        #[command(flatten)]
        revocation: RevocationArgs,
    },
    /// Run the delegation authority HTTP service.
    Authority {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct StoreAndTime {
    /// Store directory; defaults to $DECERT_STORE_DIR, then ./decert-store.
    #[arg(long)]
    store: Option<PathBuf>,
    /// RFC 3339 instant or "now".
    #[arg(long, default_value = "now")]
    at: String,
}

#[derive(Debug, Args)]
pub struct RevocationArgs {
    /// none, crl:PATH or dns:ZONEFILE.
    #[arg(long, default_value = "none")]
    revocation: String,
    /// Accept when revocation status cannot be determined.
    #[arg(long)]
    fail_open: bool,
}

#[derive(Debug)]
enum Failure {
    Reject(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Reject(_) => EXIT_REJECT,
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Reject(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<IssuanceError> for Failure {
    fn from(e: IssuanceError) -> Self {
        match e {
            IssuanceError::Io(e) => Failure::Io(e.to_string()),
            IssuanceError::PolicyViolation(v) => Failure::Reject(
                v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"),
            ),
            IssuanceError::RevokedSubject(_) | IssuanceError::UnknownSubject(_) => Failure::Reject(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `90s`, `15m`, `6h`, `30d` or a bare number of seconds.
pub fn parse_duration(text: &str) -> Result<Duration, String> {
    let text = text.trim();
    let split = text.find(|c: char| !c.is_ascii_digit()).unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let n: i64 = num.parse().map_err(|_| format!("bad duration {text:?}"))?;
    match unit {
        "" | "s" => Ok(Duration::seconds(n)),
        "m" => Ok(Duration::minutes(n)),
        "h" => Ok(Duration::hours(n)),
        "d" => Ok(Duration::days(n)),
        _ => Err(format!("bad duration unit in {text:?}")),
    }
}

/// `now` or an RFC 3339 timestamp.
pub fn parse_at(text: &str) -> Result<Option<OffsetDateTime>, String> {
    if text == "now" {
        return Ok(None);
    }
    OffsetDateTime::parse(text, &Rfc3339)
        .map(Some)
        .map_err(|e| format!("bad --at {text:?}: {e}"))
}

fn clock_for(at: &str) -> Result<Arc<dyn Clock>, Failure> {
    Ok(match parse_at(at).map_err(Failure::Usage)? {
        Some(t) => Arc::new(FixedClock::new(t)),
        None => Arc::new(SystemClock),
    })
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| Failure::Usage(format!("{}: not UTF-8", path.display())))
}

fn read_chain(path: &Path) -> Result<Vec<ParsedCertificate>, Failure> {
    let chain = parse_pem_chain(&read_text(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if chain.is_empty() {
        return Err(Failure::Usage(format!("{}: no certificates", path.display())));
    }
    Ok(chain)
}

fn read_key(path: &Path) -> Result<SigningKey, Failure> {
    SigningKey::from_pkcs8_pem(&read_text(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(bytes).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn store_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(STORE_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE_DIR))
}

struct Stores {
    index: IssuedIndex,
    revocations: RevocationStore,
}

fn open_stores(dir: &Path) -> Result<Stores, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    Ok(Stores {
        index: IssuedIndex::open(dir.join("issued.pem"))?,
        revocations: RevocationStore::open(dir.join("revocations.tsv")).map_err(|e| Failure::Io(e.to_string()))?,
    })
}

fn issuer_from(cert: &Path, key: &Path, common: &StoreAndTime, rng: ChaCha20Rng) -> Result<Issuer, Failure> {
    let mut chain = read_chain(cert)?;
    let issuer_cert = chain.remove(0);
    let key = read_key(key)?;
    let stores = open_stores(&store_dir(common.store.as_deref()))?;
    Ok(Issuer::new(issuer_cert, key, IssuerPolicy::default(), clock_for(&common.at)?, Box::new(rng))?
        .with_chain(chain)
        .with_stores(stores.index, stores.revocations))
}

fn revocation_policy(args: &RevocationArgs) -> Result<RevocationPolicy, Failure> {
    let fail = if args.fail_open { FailMode::Open } else { FailMode::Closed };
    let spec = args.revocation.as_str();
    if spec == "none" {
        return Ok(RevocationPolicy::None);
    }
    if let Some(path) = spec.strip_prefix("crl:") {
        let mut crls = Vec::new();
        for p in path.split(',') {
            let p = Path::new(p);
            crls.push(CrlDocument::from_der(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?);
        }
        return Ok(RevocationPolicy::Crl(crls, fail));
    }
    if let Some(path) = spec.strip_prefix("dns:") {
        let p = Path::new(path);
        let zone = RevocationZone::parse_zone_file(&read_text(p)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        return Ok(RevocationPolicy::Dns(Arc::new(zone), fail));
    }
    Err(Failure::Usage(format!("--revocation must be none, crl:PATH or dns:PATH, not {spec:?}")))
}

fn now_or(at: &str) -> Result<OffsetDateTime, Failure> {
    Ok(parse_at(at).map_err(Failure::Usage)?.unwrap_or_else(|| SystemClock.now()))
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Outcome {
    let rng = ChaCha20Rng::from_entropy();
    match cli.command {
        Command::Keygen { alg, out, seed } => {
            let mut rng = seed.map(ChaCha20Rng::seed_from_u64).unwrap_or(rng);
            let key = SigningKey::generate(alg, &mut rng).map_err(|e| Failure::Usage(e.to_string()))?;
            emit(Some(&out), key.to_pkcs8_pem().as_bytes(), stdout)?;
            writeln!(stdout, "{}", key.public_key_info().fingerprint_hex()).map_err(|e| Failure::Io(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::Csr {
            subject,
            include,
            exclude,
            key_usage,
            path_len,
            key,
            out,
            pem,
        } => {
            let include: Vec<&str> = include.iter().map(String::as_str).collect();
            let exclude: Vec<&str> = exclude.iter().map(String::as_str).collect();
            let scope = DomainScope::parse(&include, &exclude).map_err(|e| Failure::Usage(e.to_string()))?;
            let ku = KeyUsageSet::parse_list(&key_usage)
                .ok_or_else(|| Failure::Usage(format!("bad --key-usage {key_usage:?}")))?;
            let req = create_request(&subject, &read_key(&key)?, &scope, ku, path_len)?;
            let bytes = if pem { req.to_pem().into_bytes() } else { req.to_der().to_vec() };
            emit(out.as_deref(), &bytes, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Issue {
            csr,
            issuer_cert,
            issuer_key,
            validity,
            common,
            out,
        } => {
            let req = DelegationRequest::parse(&read(&csr)?)?;
            let mut issuer = issuer_from(&issuer_cert, &issuer_key, &common, rng)?;
            let cert = issuer.issue(&req, validity)?;
            emit(out.as_deref(), chain_to_pem(&issuer.full_chain(&cert)).as_bytes(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Renew {
            cert,
            issuer_cert,
            issuer_key,
            rotate_key,
            common,
            out,
        } => {
            let existing = read_chain(&cert)?.remove(0);
            let key = match rotate_key {
                Some(p) => RenewKey::Rotate(read_key(&p)?.public_key_info()),
                None => RenewKey::Reuse,
            };
            let mut issuer = issuer_from(&issuer_cert, &issuer_key, &common, rng)?;
            let renewed = issuer.renew(&existing, key)?;
            emit(out.as_deref(), chain_to_pem(&issuer.full_chain(&renewed)).as_bytes(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Revoke { serial, reason, common } => {
            let serial = Serial::from_hex(&serial).map_err(|_| Failure::Usage(format!("bad serial {serial:?}")))?;
            let mut store = open_stores(&store_dir(common.store.as_deref()))?.revocations;
            let record = store
                .revoke(&serial, &reason, clock_for(&common.at)?.as_ref())
                .map_err(|e| Failure::Usage(e.to_string()))?;
            writeln!(stdout, "revoked\t{}\t{}", record.serial.to_hex(), record.revoked_at.unix_timestamp())
                .map_err(|e| Failure::Io(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::Crl {
            issuer_cert,
            issuer_key,
            lifetime,
            common,
            out,
        } => {
            let cert = read_chain(&issuer_cert)?.remove(0);
            let key = read_key(&issuer_key)?;
            let store = open_stores(&store_dir(common.store.as_deref()))?.revocations;
            let crl = build_crl(
                &store,
                &cert,
                &key,
                clock_for(&common.at)?.as_ref(),
                lifetime.unwrap_or(DEFAULT_CRL_LIFETIME),
            )
            .map_err(|e| Failure::Usage(e.to_string()))?;
            emit(out.as_deref(), crl.to_der(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Zone { domain, common, out } => {
            let store = open_stores(&store_dir(common.store.as_deref()))?.revocations;
            emit(out.as_deref(), export_zone(&store, &domain).to_zone_file().as_bytes(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Validate {
            chain,
            anchors,
            hostname,
            at,
            mode,
            revocation,
            max_depth,
            json,
        } => {
            let mut input = ValidationInput::new(read_chain(&chain)?, read_chain(&anchors)?, hostname, now_or(&at)?)
                .with_mode(mode)
                .with_revocation(revocation_policy(&revocation)?);
            if let Some(d) = max_depth {
                input.config = ValidatorConfig { max_decert_depth: d };
            }
            let report = validate_chain(&input);
            let text = if json { report.to_json() + "\n" } else { report.to_text() };
            emit(None, text.as_bytes(), stdout)?;
            Ok(if report.is_accept() { EXIT_OK } else { EXIT_REJECT })
        }
        Command::Fixtures { out, seed, at } => {
            let at = match at {
                Some(a) => parse_at(&a).map_err(Failure::Usage)?.unwrap_or_else(|| SystemClock.now()),
                None => DEFAULT_AT,
            };
            let corpus = Corpus::generate(seed, at);
            corpus.write(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            writeln!(stdout, "{} fixtures, {} manifest rows", corpus.fixtures.len(), corpus.manifest.entries.len())
                .map_err(|e| Failure::Io(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::Serve { chain, key, listen } => {
            let server = TlsServer::start(&read_chain(&chain)?, read_key(&key)?, listen).map_err(harness_failure)?;
            writeln!(stdout, "listening on {}", server.addr()).map_err(|e| Failure::Io(e.to_string()))?;
            stdout.flush().map_err(|e| Failure::Io(e.to_string()))?;
            loop {
                std::thread::park();
            }
        }
        Command::Probe {
            hostname,
            connect,
            anchors,
            mode,
            at,
            revocation,
        } => {
            let mut options = ProbeOptions::new(read_chain(&anchors)?, mode);
            options.at = parse_at(&at).map_err(Failure::Usage)?;
            options.revocation = revocation_policy(&revocation)?;
            let outcome = probe(&hostname, connect, &options).map_err(harness_failure)?;
            let mut text = String::new();
            match (&outcome.connected, &outcome.error) {
                (true, _) => text.push_str("connected\n"),
                (false, Some(e)) => text.push_str(&format!("rejected\t{e}\n")),
                (false, None) => text.push_str("rejected\n"),
            }
            if let Some(r) = &outcome.report {
                text.push_str(&r.to_text());
            }
            emit(None, text.as_bytes(), stdout)?;
            Ok(if outcome.connected { EXIT_OK } else { EXIT_REJECT })
        }
        Command::Authority { config } => {
            let config = AuthorityConfig::load(&config).map_err(|e| Failure::Usage(e.to_string()))?;
            let authority = Authority::from_config(&config, None).map_err(|e| Failure::Usage(e.to_string()))?;
            let server = AuthorityServer::start(Arc::new(authority), config.listen)
                .map_err(|e| Failure::Io(format!("{}: {e}", config.listen)))?;
            writeln!(stdout, "listening on {}", server.addr()).map_err(|e| Failure::Io(e.to_string()))?;
            stdout.flush().map_err(|e| Failure::Io(e.to_string()))?;
            server.wait().map_err(|e| Failure::Io(e.to_string()))?;
            Ok(EXIT_OK)
        }
    }
}

fn harness_failure(e: crate::harness::HarnessError) -> Failure {
    use crate::harness::HarnessError as H;
    match e {
        H::Bind(..) | H::Network(..) => Failure::Io(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "decert: {}", f.message());
            f.code()
        }
    }
}
