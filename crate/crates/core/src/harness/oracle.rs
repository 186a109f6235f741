//! Exhaustive per-position completeness check.
//!
//! Positions never interact, so a session is correct for every N if it is
//! correct for N = 1 under every input. The inputs are `(s, i, m, x, j)` plus
//! the single conjugate-basis outcome: exactly one of the two rounds is
//! measured in the wrong basis, so each case consumes exactly one coin.
//! That gives 2^5 * 2 = 64 cases, each of which must hand both parties
//! `(m, s, i, j)` exactly.

use std::fmt;

use crate::bb84::AliceRawState;
use crate::bitcore::{Bit, BitString, RandomSource, ScriptedBits};
use crate::qsim::QuantumLink;
use crate::seedqkd::{run_seed_with, KeyName, SeedInputs, Streams};
use crate::session::{Roles, SessionConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCase {
    pub s: Bit,
    pub i: Bit,
    pub m: Bit,
    pub x: Bit,
    pub j: Bit,
    pub coin: Bit,
}

impl OracleCase {
    pub fn all() -> impl Iterator<Item = OracleCase> {
        (0..64u8).map(|v| {
            let b = |k: u8| Bit::new((v >> k) & 1 == 1);
            OracleCase {
                s: b(0),
                i: b(1),
                m: b(2),
                x: b(3),
                j: b(4),
                coin: b(5),
            }
        })
    }

    /// Ground truth in [`KeyName::ALL`] order.
    pub fn expected(&self) -> [Bit; 4] {
        [self.m, self.s, self.i, self.j]
    }
}

impl fmt::Display for OracleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "s={} i={} m={} x={} j={} coin={}",
            self.s, self.i, self.m, self.x, self.j, self.coin
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub case: OracleCase,
    /// What the sender recovered, then what the receiver recovered.
    pub sender: [Bit; 4],
    pub receiver: [Bit; 4],
    pub coins_used: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub cases: usize,
    pub failures: Vec<CaseResult>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn one(bit: Bit) -> BitString {
    BitString::new(vec![bit])
}

/// Runs one case through the full session pipeline.
pub fn run_case(case: OracleCase) -> crate::Result<CaseResult> {
    let inputs = SeedInputs {
        alice: AliceRawState::new(one(case.s), one(case.i))?,
        m: one(case.m),
        x: one(case.x),
        j: one(case.j),
    };
    let mut coins = ScriptedBits::new([case.coin, case.coin]);
    let session = run_seed_with(
        &SessionConfig::ideal(1),
        Roles::ALICE_BOB,
        "oracle",
        inputs,
        &mut QuantumLink::ideal(),
        Streams {
            channel: &mut RandomSource::new(0),
            public: &mut RandomSource::new(0),
            coins: &mut coins,
        },
    )?;
    let rec = &session.reconciliation;
    Ok(CaseResult {
        case,
        sender: KeyName::ALL.map(|k| rec.alice_out.get(k)[0]),
        receiver: KeyName::ALL.map(|k| rec.bob_out.get(k)[0]),
        coins_used: coins.consumed(),
    })
}

pub fn completeness_check() -> crate::Result<OracleReport> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for case in OracleCase::all() {
        cases += 1;
        let result = run_case(case)?;
        let expected = case.expected();
        if result.sender != expected || result.receiver != expected || result.coins_used != 1 {
            failures.push(result);
        }
    }
    Ok(OracleReport { cases, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_cases_pass() {
        let report = completeness_check().unwrap();
        assert_eq!(report.cases, 64);
        assert!(report.passed(), "{:?}", report.failures);
    }
}
