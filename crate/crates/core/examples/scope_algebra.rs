// SPDX-License-Identifier: Apache-2.0

//! Include/exclude scopes: membership and the subset check that every
//! delegation link relies on.
//!
//! ```text
//! cargo run --example scope_algebra
//! ```

use decert::name_scope::{scope_subset_of, DomainName, DomainScope};

fn main() {
    let owner = DomainScope::parse(&["abc.com", "*.abc.com"], &[]).unwrap();
    let cdn = DomainScope::parse(&["*.content.abc.com"], &["private.content.abc.com"]).unwrap();

    println!("owner  {owner}");
    println!("cdn    {cdn}");
    for host in ["img.content.abc.com", "content.abc.com", "x.private.content.abc.com", "abc.com"] {
        let name = DomainName::parse(host).unwrap();
        println!("  {host:<28} owner={:<5} cdn={}", owner.contains(&name), cdn.contains(&name));
    }

    let v = scope_subset_of(&cdn, &owner);
    println!("cdn within owner: {}", v.is_subset);

    // A sub-delegation reaching outside its parent is caught with a witness.
    let greedy = DomainScope::parse(&["*.abc.com"], &[]).unwrap();
    let v = scope_subset_of(&greedy, &cdn);
    println!("greedy within cdn: {}", v.is_subset);
    for w in &v.witnesses {
        println!("  uncovered: {w}");
    }

    // Re-including an excluded subtree is just as bad.
    let sneaky = DomainScope::parse(&["*.private.content.abc.com"], &[]).unwrap();
    let v = scope_subset_of(&sneaky, &cdn);
    println!("sneaky within cdn: {} ({} witness)", v.is_subset, v.witnesses.len());
}
