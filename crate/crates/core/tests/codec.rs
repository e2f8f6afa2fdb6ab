// SPDX-License-Identifier: Apache-2.0

//! DelegationInfo encoding: round trips, canonical form, mutation
//! robustness, checked against a small independent TLV reader.

mod common;

use std::collections::BTreeSet;

use common::codec_model::*;
use decert::cert::{DelegationInfo, MalformedExtension};
use decert::name_scope::{DomainName, DomainPattern};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn round_trip_is_bit_exact(i in info()) {
        let der = i.encode();
        let back = DelegationInfo::decode(&der).unwrap();
        prop_assert_eq!(&back, &i);
        prop_assert_eq!(back.encode(), der.clone());
        prop_assert_eq!(oracle_fields(&der), expected_fields(&i));
    }

    #[test]
    fn encoding_ignores_input_order(i in info(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut ex: Vec<DomainName> = i.exclude.iter().cloned().collect();
        ex.shuffle(&mut rng);
        let rebuilt = DelegationInfo {
            exclude: ex.into_iter().rev().collect::<BTreeSet<_>>(),
            include: i.include.as_ref().map(|s| {
                let mut v: Vec<DomainPattern> = s.iter().cloned().collect();
                v.shuffle(&mut rng);
                v.into_iter().collect()
            }),
            path_len: i.path_len,
        };
        prop_assert_eq!(rebuilt.encode(), i.encode());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn mutations_never_decode_to_the_original(
        i in info(),
        flips in prop::collection::vec((any::<prop::sample::Index>(), 1u8..=255), 1..=3),
    ) {
        let der = i.encode();
        let mut bad = der.clone();
        for (at, mask) in flips {
            let k = at.index(bad.len());
            bad[k] ^= mask;
        }
        prop_assume!(bad != der);
        match DelegationInfo::decode(&bad) {
            Err(MalformedExtension(_)) => {}
            Ok(other) => {
                prop_assert_ne!(&other, &i);
                prop_assert_eq!(other.encode(), bad);
            }
        }
    }
}

#[test]
fn minimal_encoding_bytes() {
    let i = DelegationInfo {
        path_len: Some(0),
        ..Default::default()
    };
    assert_eq!(i.encode(), [0x30, 0x09, 0xA0, 0x02, 0x30, 0x00, 0xA2, 0x03, 0x02, 0x01, 0x00]);
    assert_eq!(
        DelegationInfo::default().encode(),
        [0x30, 0x04, 0xA0, 0x02, 0x30, 0x00]
    );
}

#[test]
fn rejects_non_canonical_forms() {
    let cases: &[&[u8]] = &[
        // long-form length where short form fits
        &[0x30, 0x81, 0x04, 0xA0, 0x02, 0x30, 0x00],
        // path length with a redundant leading zero
        &[0x30, 0x0A, 0xA0, 0x02, 0x30, 0x00, 0xA2, 0x04, 0x02, 0x02, 0x00, 0x01],
        // missing exclude list
        &[0x30, 0x05, 0xA2, 0x03, 0x02, 0x01, 0x00],
        // trailing garbage
        &[0x30, 0x04, 0xA0, 0x02, 0x30, 0x00, 0x00],
        &[],
    ];
    for c in cases {
        assert!(DelegationInfo::decode(c).is_err(), "{c:02x?}");
    }
    // unsorted excludes
    let a = b"a.example.com";
    let b = b"b.example.com";
    let mut list = Vec::new();
    for s in [b, a] {
        list.push(0x16);
        list.push(s.len() as u8);
        list.extend_from_slice(s);
    }
    let mut der = vec![0x30, (list.len() + 4) as u8, 0xA0, (list.len() + 2) as u8, 0x30, list.len() as u8];
    der.extend(list);
    assert!(DelegationInfo::decode(&der).is_err());
}
