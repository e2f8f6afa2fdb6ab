// SPDX-License-Identifier: Apache-2.0

//! The symbolic subset decision against brute-force enumeration.

mod common;

use std::collections::BTreeSet;

use common::*;
use decert::name_scope::{enumerate_universe, scope_contains, scope_subset_of, DomainName, Witness};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn subset_agrees_with_enumeration((child, parent, alpha) in scope_pair_strategy()) {
        let verdict = scope_subset_of(&child.to_scope(), &parent.to_scope());
        let counterexample = oracle_subset(&child, &parent, &alpha);
        prop_assert_eq!(verdict.is_subset, counterexample.is_none(),
            "child {} parent {} oracle witness {:?}", child.to_scope(), parent.to_scope(), counterexample);
        prop_assert_eq!(verdict.is_subset, verdict.witnesses.is_empty());
    }

    #[test]
    fn membership_agrees_with_model((scope, _, alpha) in scope_pair_strategy()) {
        let s = scope.to_scope();
        for n in universe(&alpha, scope.max_depth() + 1) {
            prop_assert_eq!(scope_contains(&s, &to_name(&n)), scope.contains(&n), "{} in {}", dotted(&n), s);
        }
    }

    #[test]
    fn name_witnesses_are_real((child, parent, _) in scope_pair_strategy()) {
        let (c, p) = (child.to_scope(), parent.to_scope());
        for w in scope_subset_of(&c, &p).witnesses {
            if let Witness::Name(n) = w {
                prop_assert!(c.contains(&n) && !p.contains(&n), "{} is no witness", n);
            }
        }
    }

    #[test]
    fn subset_is_reflexive((scope, _, _) in scope_pair_strategy()) {
        let s = scope.to_scope();
        prop_assert!(scope_subset_of(&s, &s).is_subset);
    }
}

#[test]
fn generator_produces_both_outcomes() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strategy = scope_pair_strategy();
    let (mut yes, mut no) = (0, 0);
    for _ in 0..1000 {
        let (c, p, alpha) = strategy.new_tree(&mut runner).unwrap().current();
        match oracle_subset(&c, &p, &alpha) {
            None => yes += 1,
            Some(_) => no += 1,
        }
    }
    assert!(yes >= 200 && no >= 200, "subset {yes} / not subset {no}");
}

#[test]
fn library_universe_matches_model() {
    let alpha = alphabet(3);
    let labels: BTreeSet<String> = alpha.iter().cloned().chain([FRESH.to_owned()]).collect();
    let suffix = DomainName::parse(SUFFIX).unwrap();
    let lib: BTreeSet<String> = enumerate_universe(&labels, 3, &suffix)
        .unwrap()
        .iter()
        .map(ToString::to_string)
        .collect();
    let model: BTreeSet<String> = universe(&alpha, 3).iter().map(|n| dotted(n)).collect();
    assert_eq!(lib, model);
    assert_eq!(model.len(), 1 + 4 + 16 + 64);
}

#[test]
fn worked_examples() {
    let scope = |inc: &[&str], exc: &[&str]| decert::name_scope::DomainScope::parse(inc, exc).unwrap();
    let poc = scope(&["*.a.localhost"], &["b.a.localhost"]);
    let n = |s: &str| DomainName::parse(s).unwrap();
    assert!(poc.contains(&n("a.a.localhost")));
    assert!(!poc.contains(&n("b.a.localhost")));
    assert!(!poc.contains(&n("c.b.a.localhost")));
    assert!(!poc.contains(&n("a.localhost")));

    let pics = scope(&["*.pics.abc.com"], &["a.pics.abc.com"]);
    assert!(!scope_subset_of(&scope(&["*.vids.abc.com"], &[]), &pics).is_subset);
    assert!(scope_subset_of(&scope(&["*.x.pics.abc.com"], &[]), &pics).is_subset);
    assert!(!scope_subset_of(&scope(&["*.pics.abc.com"], &[]), &pics).is_subset);
}
