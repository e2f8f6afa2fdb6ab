// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use time::OffsetDateTime;

use super::RevocationError;
use crate::cert::Serial;
use crate::clock::Clock;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationRecord {
    pub serial: Serial,
    pub revoked_at: OffsetDateTime,
    pub reason: String,
}

impl RevocationRecord {
    fn to_line(&self) -> String {
        format!("{}\t{}\t{}\n", self.serial.to_hex(), self.revoked_at.unix_timestamp(), self.reason)
    }

    fn from_line(line: &str) -> Result<Self, RevocationError> {
        let bad = || RevocationError::Corrupt(line.to_owned());
        let mut parts = line.splitn(3, '\t');
        let serial = Serial::from_hex(parts.next().ok_or_else(bad)?).map_err(|_| bad())?;
        let unix: i64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let revoked_at = OffsetDateTime::from_unix_timestamp(unix).map_err(|_| bad())?;
        let reason = parts.next().unwrap_or("").to_owned();
        Ok(RevocationRecord {
            serial,
            revoked_at,
            reason,
        })
    }
}

/// The owner's revocation list, optionally backed by an append-only file of
/// `serial-hex<TAB>unix-time<TAB>reason` lines.
#[derive(Debug, Default)]
pub struct RevocationStore {
    records: BTreeMap<Serial, RevocationRecord>,
    path: Option<PathBuf>,
    generation: u64,
}

impl RevocationStore {
    pub fn in_memory() -> Self {
        RevocationStore::default()
    }

    /// Opens (or creates) a file-backed store and replays its records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, RevocationError> {
        let path = path.as_ref().to_path_buf();
        let mut store = RevocationStore {
            path: Some(path.clone()),
            ..Default::default()
        };
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record = RevocationRecord::from_line(&line)?;
                if store.records.insert(record.serial.clone(), record).is_some() {
                    return Err(RevocationError::Corrupt(format!("duplicate serial in {}", path.display())));
                }
                store.generation += 1;
            }
        }
        Ok(store)
    }

    pub fn revoke(
        &mut self,
        serial: &Serial,
        reason: &str,
        clock: &dyn Clock,
    ) -> Result<RevocationRecord, RevocationError> {
        if self.records.contains_key(serial) {
            return Err(RevocationError::AlreadyRevoked(serial.clone()));
        }
        if reason.contains(['\t', '\n', '\r']) || reason.len() > 128 {
            return Err(RevocationError::InvalidReason(reason.to_owned()));
        }
        let record = RevocationRecord {
            serial: serial.clone(),
            revoked_at: clock.now(),
            reason: reason.to_owned(),
        };
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(record.to_line().as_bytes())?;
            f.sync_data()?;
        }
        self.records.insert(serial.clone(), record.clone());
        self.generation += 1;
        Ok(record)
    }

    pub fn is_revoked(&self, serial: &Serial) -> bool {
        self.records.contains_key(serial)
    }

    pub fn get(&self, serial: &Serial) -> Option<&RevocationRecord> {
        self.records.get(serial)
    }

    /// Records in serial order.
    pub fn records(&self) -> impl Iterator<Item = &RevocationRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Bumped on every successful revocation.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Picks up records appended to the backing file by another process.
    /// Returns whether anything changed.
    pub fn refresh(&mut self) -> Result<bool, RevocationError> {
        let Some(path) = &self.path else { return Ok(false) };
        let fresh = RevocationStore::open(path)?;
        if fresh.generation == self.generation {
            return Ok(false);
        }
        *self = fresh;
        Ok(true)
    }
}

pub fn revoke(
    store: &mut RevocationStore,
    serial: &Serial,
    reason: &str,
    clock: &dyn Clock,
) -> Result<RevocationRecord, RevocationError> {
    store.revoke(serial, reason, clock)
}
