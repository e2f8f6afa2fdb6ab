// SPDX-License-Identifier: Apache-2.0

//! The three worked delegation chains: one valid, one broken by a path
//! length of zero and an out-of-scope include, one broken three ways.
//!
//! ```text
//! cargo run --example invalid_chains
//! ```

use decert::fixtures::{Corpus, DEFAULT_AT, DEFAULT_SEED};
use decert::validation::{validate_chain, ValidationInput};

fn main() {
    let corpus = Corpus::generate(DEFAULT_SEED, DEFAULT_AT);
    for (name, host) in [
        ("fig1", "x.content.abc.com"),
        ("fig2a", "x.vids.abc.com"),
        ("fig2b", "x.pics.abc.com"),
    ] {
        let f = corpus.fixture(name).unwrap();
        println!("== {name} ({host})");
        for c in &f.chain {
            println!("   {} <- {}  scope {}", c.subject_cn(), c.issuer_cn(), c.scope());
        }
        let input = ValidationInput::new(f.chain.clone(), corpus.pki.anchors(), host.parse().unwrap(), DEFAULT_AT);
        print!("{}", validate_chain(&input).to_text());
    }
}
