// SPDX-License-Identifier: Apache-2.0

//! Writes the deterministic fixture corpus to a directory and replays its
//! manifest over loopback TLS.
//!
//! ```text
//! cargo run --example fixtures_corpus -- [DIR]
//! ```

use std::path::PathBuf;

use decert::fixtures::{Corpus, DEFAULT_AT, DEFAULT_SEED};
use decert::harness::{run_corpus, HarnessError};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("decert-fixtures"));
    let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
    corpus.write(&dir).unwrap();
    println!("wrote {} fixtures to {}", corpus.fixtures.len(), dir.display());

    match run_corpus(&dir) {
        Ok(cells) => {
            for c in &cells {
                println!("ok   {}", c.entry);
            }
        }
        Err(HarnessError::CorpusMismatch(bad)) => {
            for c in &bad {
                println!("FAIL {} (connected={}, got {:?})", c.entry, c.connected, c.codes);
            }
            std::process::exit(1);
        }
        Err(e) => panic!("{e}"),
    }
}
