//! The worked N = 8 example as a golden vector.
//!
//! The sender's strings, the receiver's bases, the seed and the second value
//! key are injected. The eight conjugate-basis outcomes (four per round) are
//! the `*` cells of the table; the check runs once per assignment of those
//! eight bits and compares every printed cell that is not `*`.
//!
//! Coins are consumed in pulse order, round one first: sweep bit 0..3 fill
//! positions 1, 2, 6, 7 of `a`, bits 4..7 fill positions 3, 4, 5, 8 of `b`.

use std::fmt;

use crate::bb84::{bb84_sift, AliceRawState, SiftResult};
use crate::bitcore::{Bit, BitString, RandomSource, ScriptedBits};
use crate::error::Result;
use crate::qsim::{QuantumLink, QubitState};
use crate::seedqkd::{derive_round_two_bases, run_seed_with, SeedInputs, SeedSession, Streams};
use crate::session::{Roles, SessionConfig};
use crate::transcript::{EventKind, Payload, Phase, SessionRecord};

pub const SWEEPS: usize = 256;

pub const S: &str = "10100000";
pub const I: &str = "01101100";
pub const M: &str = "01100110";
pub const X: &str = "11000110";
pub const J: &str = "10101001";

/// `(row, printed cells)`; `*` marks an outcome-dependent cell and `.` a
/// blank one.
pub const BIT_ROWS: &[(&str, &str)] = &[
    ("1a s", S),
    ("2a i", I),
    ("1b m", M),
    ("2b B_m", M),
    ("3b a", "**101**0"),
    ("4a BB84 l", "11000110"),
    ("BB84 key", "..101..0"),
    ("4ab x", X),
    ("5a t", "01100110"),
    ("6a j", J),
    ("5b n", "01011111"),
    ("6b B_n", "01011111"),
    ("7b b", "10***00*"),
    ("8a y", "11000101"),
    ("8b u", "*0*10011"),
    ("9b v", "1*1*****"),
    ("9a key_m", M),
    ("10a l", "11000110"),
    ("10b key_s", S),
    ("11b key_i", I),
    ("12b key_j", J),
];

pub const STATE_ROWS: &[(&str, [&str; 8])] = &[
    ("3a psi_si", ["psi10", "psi01", "psi11", "psi00", "psi01", "psi01", "psi00", "psi00"]),
    ("7a psi_tj", ["psi01", "psi10", "psi11", "psi00", "psi01", "psi10", "psi10", "psi01"]),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellMismatch {
    pub row: String,
    /// 1-based column.
    pub position: usize,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for CellMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row {}, position {}: expected {}, got {}",
            self.row, self.position, self.expected, self.actual
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenFailure {
    pub sweep: usize,
    pub mismatches: Vec<CellMismatch>,
}

impl fmt::Display for GoldenFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "worked example mismatch on sweep {} ({:08b}):", self.sweep, self.sweep)?;
        for m in &self.mismatches {
            writeln!(f, "  {m}")?;
        }
        Ok(())
    }
}

impl std::error::Error for GoldenFailure {}

#[derive(Clone, Debug)]
pub struct GoldenOutcome {
    pub sweeps: usize,
    /// `(key_m, key_s, key_i, key_j)` as recovered, identical on every sweep.
    pub keys: [BitString; 4],
    /// Record of the all-zero assignment.
    pub record: SessionRecord,
    /// Printed cells that disagree with the protocol formulas. The formulas
    /// win; the table as printed has none.
    pub formula_conflicts: Vec<CellMismatch>,
}

fn bits(s: &str) -> BitString {
    s.parse().expect("constant bit row")
}

pub fn inputs() -> SeedInputs {
    SeedInputs {
        alice: AliceRawState::new(bits(S), bits(I)).expect("equal lengths"),
        m: bits(M),
        x: bits(X),
        j: bits(J),
    }
}

/// Runs the seed protocol on the worked inputs with the given assignment of
/// the eight outcome bits.
pub fn run_sweep(assignment: u8) -> Result<(SeedSession, SiftResult)> {
    let mut coins = ScriptedBits::new((0..8).map(|b| Bit::new((assignment >> b) & 1 == 1)));
    let session = run_seed_with(
        &SessionConfig::ideal(8),
        Roles::ALICE_BOB,
        "worked-example",
        inputs(),
        &mut QuantumLink::ideal(),
        Streams {
            channel: &mut RandomSource::new(0),
            public: &mut RandomSource::new(0),
            coins: &mut coins,
        },
    )?;
    debug_assert_eq!(coins.remaining(), 0);
    let sift = bb84_sift(&session.alice, &session.bob)?;
    Ok((session, sift))
}

fn compare_row(row: &str, printed: &str, actual: &str, out: &mut Vec<CellMismatch>) {
    for (k, (p, a)) in printed.chars().zip(actual.chars()).enumerate() {
        if p != '*' && p != a {
            out.push(CellMismatch {
                row: row.to_owned(),
                position: k + 1,
                expected: p.to_string(),
                actual: a.to_string(),
            });
        }
    }
}

fn sifted_row(sift: &SiftResult, n: usize) -> String {
    let mut row = vec!['.'; n];
    for (j, &k) in sift.kept_indices.iter().enumerate() {
        row[k] = sift.sifted_key[j].to_char();
    }
    row.into_iter().collect()
}

fn states_row(states: &[QubitState]) -> Vec<&'static str> {
    states.iter().map(|s| s.name()).collect()
}

/// The computed value of every printed row, as text.
pub fn actual_rows(session: &SeedSession, sift: &SiftResult) -> Vec<(String, String)> {
    let (alice, bob, r2, ex) = (&session.alice, &session.bob, &session.round2, &session.exchange);
    let out = &session.reconciliation.bob_out;
    let rows: [(&str, &BitString); 21] = [
        ("1a s", &alice.s),
        ("2a i", &alice.i),
        ("1b m", &bob.m),
        ("2b B_m", &bob.m),
        ("3b a", &bob.a),
        ("4a BB84 l", &sift.l),
        ("BB84 key", &sift.sifted_key),
        ("4ab x", &r2.x),
        ("5a t", &r2.t),
        ("6a j", &r2.j),
        ("5b n", &r2.n),
        ("6b B_n", &r2.n),
        ("7b b", &r2.b),
        ("8a y", &ex.y),
        ("8b u", &ex.u),
        ("9b v", &ex.v),
        ("9a key_m", &session.decrypted_m),
        ("10a l", &ex.l),
        ("10b key_s", &out.key_s),
        ("11b key_i", &out.key_i),
        ("12b key_j", &out.key_j),
    ];
    rows.iter()
        .map(|(name, b)| {
            let text = if *name == "BB84 key" {
                sifted_row(sift, alice.len())
            } else {
                b.to_string()
            };
            (name.to_string(), text)
        })
        .collect()
}

/// Every non-`*` cell that differs from the printed table.
pub fn check_cells(session: &SeedSession, sift: &SiftResult) -> Vec<CellMismatch> {
    let mut mismatches = Vec::new();
    for ((row, printed), (_, actual)) in BIT_ROWS.iter().zip(actual_rows(session, sift)) {
        compare_row(row, printed, &actual, &mut mismatches);
    }
    let sent = |phase: Phase| -> Vec<QubitState> {
        session
            .record
            .events
            .iter()
            .find(|e| e.phase == phase && e.kind == EventKind::Quantum && e.name == "sent")
            .and_then(|e| match &e.payload {
                Payload::States(states) => Some(states.iter().flatten().copied().collect()),
                Payload::Bits(_) => None,
            })
            .unwrap_or_default()
    };
    for ((row, printed), states) in STATE_ROWS.iter().zip([sent(Phase::Raw), sent(Phase::Missing)]) {
        for (k, (p, a)) in printed.iter().zip(states_row(&states)).enumerate() {
            if *p != a {
                mismatches.push(CellMismatch {
                    row: row.to_string(),
                    position: k + 1,
                    expected: p.to_string(),
                    actual: a.to_string(),
                });
            }
        }
    }
    mismatches
}

/// Recomputes the formula-defined rows from the printed input rows and
/// reports printed cells that disagree.
pub fn formula_conflicts() -> Vec<CellMismatch> {
    let (s, i, m, x, j) = (bits(S), bits(I), bits(M), bits(X), bits(J));
    let (t, n) = derive_round_two_bases(&s, &m, &x).expect("equal lengths");
    let y = i.xor(&j).expect("equal lengths");
    let l = s.xor(&m).expect("equal lengths");
    let key_s = m.xor(&l).expect("equal lengths");
    let printed = |row: &str| {
        BIT_ROWS
            .iter()
            .find(|(r, _)| *r == row)
            .map(|(_, p)| *p)
            .expect("known row")
    };
    let mut conflicts = Vec::new();
    for (row, computed) in [
        ("5a t", &t),
        ("5b n", &n),
        ("8a y", &y),
        ("4a BB84 l", &l),
        ("10a l", &l),
        ("10b key_s", &key_s),
    ] {
        compare_row(row, printed(row), &computed.to_string(), &mut conflicts);
    }
    conflicts
}

/// Runs all 256 sweeps and checks every cell of each.
pub fn golden_table1() -> std::result::Result<GoldenOutcome, GoldenFailure> {
    let mut first = None;
    for sweep in 0..SWEEPS {
        let (session, sift) = run_sweep(sweep as u8).map_err(|e| GoldenFailure {
            sweep,
            mismatches: vec![CellMismatch {
                row: "protocol".into(),
                position: 0,
                expected: "a completed run".into(),
                actual: e.to_string(),
            }],
        })?;
        let mismatches = check_cells(&session, &sift);
        if !mismatches.is_empty() {
            return Err(GoldenFailure { sweep, mismatches });
        }
        if first.is_none() {
            first = Some(session);
        }
    }
    let session = first.expect("at least one sweep");
    let out = &session.reconciliation.bob_out;
    Ok(GoldenOutcome {
        sweeps: SWEEPS,
        keys: [
            session.decrypted_m.clone(),
            out.key_s.clone(),
            out.key_i.clone(),
            out.key_j.clone(),
        ],
        record: session.record,
        formula_conflicts: formula_conflicts(),
    })
}
