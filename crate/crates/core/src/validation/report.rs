// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! codes {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum ViolationCode {
            $($name),*
        }

        impl ViolationCode {
            pub const ALL: &'static [ViolationCode] = &[$(ViolationCode::$name),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ViolationCode::$name => stringify!($name)),*
                }
            }
        }
    };
}

codes!(
    UnknownCriticalExtension,
    ChainMalformed,
    SignatureInvalid,
    Expired,
    NotYetValid,
    CAFlagInvalid,
    SANMissing,
    DelegationInfoMismatch,
    IncludeNotSubset,
    ExcludeNotSubset,
    PathLenExceeded,
    KeyUsageNotSubset,
    HostnameNotInScope,
    HostnameExcluded,
    Revoked,
    UntrustedRoot,
);

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown violation code {0:?}")]
pub struct UnknownCode(pub String);

impl FromStr for ViolationCode {
    type Err = UnknownCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViolationCode::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCode(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Verdict::Accept => "Accept",
            Verdict::Reject => "Reject",
        })
    }
}

impl FromStr for Verdict {
    type Err = UnknownCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Accept" => Ok(Verdict::Accept),
            "Reject" => Ok(Verdict::Reject),
            _ => Err(UnknownCode(s.to_owned())),
        }
    }
}

/// One failed check. `index` counts from the leaf (0) towards the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub code: ViolationCode,
    pub detail: String,
}

impl Violation {
    pub fn new(index: usize, code: ViolationCode, detail: impl Into<String>) -> Self {
        Violation {
            index,
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    verdict: Verdict,
    violations: Vec<Violation>,
}

impl ValidationReport {
    /// Sorts and deduplicates; the verdict follows from emptiness.
    pub fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort();
        violations.dedup();
        let verdict = if violations.is_empty() {
            Verdict::Accept
        } else {
            Verdict::Reject
        };
        ValidationReport { verdict, violations }
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn is_accept(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Distinct codes, sorted.
    pub fn codes(&self) -> Vec<ViolationCode> {
        let mut codes: Vec<_> = self.violations.iter().map(|v| v.code).collect();
        codes.sort();
        codes.dedup();
        codes
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    /// `index<TAB>code<TAB>detail` per violation, then `verdict<TAB>...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let detail = v.detail.replace(['\t', '\n'], " ");
            out.push_str(&format!("{}\t{}\t{}\n", v.index, v.code, detail));
        }
        out.push_str(&format!("verdict\t{}\n", self.verdict));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, UnknownCode> {
        let mut violations = Vec::new();
        let mut verdict = None;
        for line in text.lines().filter(|l| !l.is_empty()) {
            let mut parts = line.splitn(3, '\t');
            let first = parts.next().unwrap_or_default();
            let second = parts.next().ok_or_else(|| UnknownCode(line.to_owned()))?;
            if first == "verdict" {
                verdict = Some(second.parse::<Verdict>()?);
                continue;
            }
            let index = first.parse().map_err(|_| UnknownCode(line.to_owned()))?;
            violations.push(Violation::new(index, second.parse()?, parts.next().unwrap_or_default()));
        }
        let report = ValidationReport::from_violations(violations);
        match verdict {
            Some(v) if v == report.verdict => Ok(report),
            _ => Err(UnknownCode(format!("verdict line missing or inconsistent in {text:?}"))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_names_round_trip() {
        assert_eq!(ViolationCode::ALL.len(), 16);
        for c in ViolationCode::ALL {
            assert_eq!(c.as_str().parse::<ViolationCode>().unwrap(), *c);
        }
    }

    #[test]
    fn text_round_trip() {
        let r = ValidationReport::from_violations(vec![
            Violation::new(0, ViolationCode::PathLenExceeded, "child 0 >= budget 0"),
            Violation::new(0, ViolationCode::IncludeNotSubset, "*.vids.abc.com"),
        ]);
        let text = r.to_text();
        assert_eq!(
            text,
            "0\tIncludeNotSubset\t*.vids.abc.com\n0\tPathLenExceeded\tchild 0 >= budget 0\nverdict\tReject\n"
        );
        assert_eq!(ValidationReport::from_text(&text).unwrap(), r);
        let empty = ValidationReport::from_violations(vec![]);
        assert_eq!(empty.to_text(), "verdict\tAccept\n");
        assert!(empty.to_json().contains("\"Accept\""));
    }
}
