// SPDX-License-Identifier: Apache-2.0

//! DelegationInfo values and a reader for their encoding that shares no
//! code with the library.

use decert::cert::DelegationInfo;
use decert::name_scope::{DomainName, DomainPattern};
use proptest::prelude::*;

/// Minimal DER TLV reader, independent of the library's codec.
#[derive(Debug, PartialEq)]
pub enum Tlv {
    Cons(u8, Vec<Tlv>),
    Prim(u8, Vec<u8>),
}

pub fn read_tlv(b: &[u8]) -> Option<(Tlv, &[u8])> {
    let tag = *b.first()?;
    let first = *b.get(1)? as usize;
    let (len, hdr) = if first < 0x80 {
        (first, 2)
    } else {
        let n = first & 0x7f;
        let mut len = 0usize;
        for i in 0..n {
            len = (len << 8) | *b.get(2 + i)? as usize;
        }
        (len, 2 + n)
    };
    let body = b.get(hdr..hdr + len)?;
    let rest = &b[hdr + len..];
    if tag & 0x20 != 0 {
        let mut items = Vec::new();
        let mut inner = body;
        while !inner.is_empty() {
            let (t, r) = read_tlv(inner)?;
            items.push(t);
            inner = r;
        }
        Some((Tlv::Cons(tag, items), rest))
    } else {
        Some((Tlv::Prim(tag, body.to_vec()), rest))
    }
}

fn strings(t: &Tlv) -> Vec<String> {
    match t {
        Tlv::Cons(0x30, items) => items
            .iter()
            .map(|i| match i {
                Tlv::Prim(0x16, s) => String::from_utf8(s.clone()).unwrap(),
                other => panic!("expected IA5String, got {other:?}"),
            })
            .collect(),
        other => panic!("expected SEQUENCE OF, got {other:?}"),
    }
}

/// What the oracle reads back: excludes, includes, path length.
pub type Fields = (Vec<String>, Option<Vec<String>>, Option<u64>);

pub fn oracle_fields(der: &[u8]) -> Fields {
    let (top, rest) = read_tlv(der).expect("well-formed TLV");
    assert!(rest.is_empty());
    let Tlv::Cons(0x30, fields) = top else { panic!("not a SEQUENCE") };
    let (mut ex, mut inc, mut pl) = (None, None, None);
    for f in &fields {
        match f {
            Tlv::Cons(0xA0, v) => ex = Some(strings(&v[0])),
            Tlv::Cons(0xA1, v) => inc = Some(strings(&v[0])),
            Tlv::Cons(0xA2, v) => match &v[0] {
                Tlv::Prim(0x02, n) => pl = Some(n.iter().fold(0u64, |a, b| (a << 8) | *b as u64)),
                other => panic!("expected INTEGER, got {other:?}"),
            },
            other => panic!("unexpected field {other:?}"),
        }
    }
    (ex.expect("exclude list is mandatory"), inc, pl)
}

fn label() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "cdn", "pics", "x-1", "7"]).prop_map(str::to_owned)
}

fn name() -> impl Strategy<Value = String> {
    prop::collection::vec(label(), 1..=3).prop_map(|mut v| {
        v.push("example.com".into());
        v.join(".")
    })
}

pub fn info() -> impl Strategy<Value = DelegationInfo> {
    (
        prop::collection::vec(name(), 0..=4),
        prop::option::of(prop::collection::vec((any::<bool>(), name()), 1..=4)),
        prop::option::of(any::<u8>()),
    )
        .prop_map(|(ex, inc, pl)| DelegationInfo {
            exclude: ex.iter().map(|s| DomainName::parse(s).unwrap()).collect(),
            include: inc.map(|v| {
                v.iter()
                    .map(|(w, s)| DomainPattern::parse(&if *w { format!("*.{s}") } else { s.clone() }).unwrap())
                    .collect()
            }),
            path_len: pl,
        })
}

pub fn expected_fields(i: &DelegationInfo) -> Fields {
    let mut ex: Vec<String> = i.exclude.iter().map(ToString::to_string).collect();
    ex.sort();
    let inc = i.include.as_ref().map(|s| {
        let mut v: Vec<String> = s.iter().map(ToString::to_string).collect();
        v.sort();
        v
    });
    (ex, inc, i.path_len.map(u64::from))
}
