//! Baseline BB84: raw key exchange followed by public reconciliation
//! (sifting). The raw exchange is also the first photon round of the seed
//! protocol.
//!
//! Bob announces his bases `m`; Alice answers with `l = s ^ m`; both keep
//! the positions where `l` is zero and the pulse arrived.

use std::collections::BTreeSet;

use crate::bitcore::{random_bitstring, Bit, BitSource, BitString, RandomSource};
use crate::error::{Error, Result};
use crate::qsim::{encode, measure_pulse, Basis, EveRecord, Pulse, QuantumLink, QubitState, Round};
use crate::session::{Roles, SessionConfig, SessionSources};
use crate::transcript::{KeyStat, Party, Phase, Protocol, SessionRecord};

/// Sender's private strings: bases `s` and values `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliceRawState {
    pub s: BitString,
    pub i: BitString,
}

impl AliceRawState {
    pub fn new(s: BitString, i: BitString) -> Result<Self> {
        if s.len() != i.len() {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: i.len(),
            });
        }
        Ok(AliceRawState { s, i })
    }

    pub fn random(n: usize, src: &mut RandomSource) -> Self {
        let s = random_bitstring(src, n);
        let i = random_bitstring(src, n);
        AliceRawState { s, i }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Receiver's private strings: bases `m` and outcomes `a`. `a` holds 0 at
/// erased positions and those entries carry no information.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BobRawState {
    pub m: BitString,
    pub a: BitString,
    /// 0-based positions lost in transit.
    pub erased: BTreeSet<usize>,
}

impl BobRawState {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// Outcome of sending one string of pulses through a link.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonRound {
    pub sent: Vec<QubitState>,
    pub received: Vec<Option<QubitState>>,
    pub outcomes: BitString,
    pub erased: BTreeSet<usize>,
    pub eve: Vec<EveRecord>,
}

/// Encodes `(send_bases[k], values[k])`, passes each pulse through `link`
/// and measures what arrives in `recv_bases[k]`. Conjugate-basis outcomes
/// come from `coins`.
pub fn photon_round(
    send_bases: &BitString,
    values: &BitString,
    recv_bases: &BitString,
    round: Round,
    link: &mut QuantumLink,
    channel_src: &mut RandomSource,
    coins: &mut (impl BitSource + ?Sized),
) -> Result<PhotonRound> {
    let n = send_bases.len();
    for other in [values, recv_bases] {
        if other.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: other.len(),
            });
        }
    }
    link.take_eve_record();

    let mut sent = Vec::with_capacity(n);
    let mut received = Vec::with_capacity(n);
    let mut outcomes = BitString::zeros(n);
    let mut erased = BTreeSet::new();
    for k in 0..n {
        let state = encode(send_bases[k], values[k]);
        let arrived = link.transmit(Pulse::new(k, state, round), channel_src);
        sent.push(state);
        received.push(arrived.state);
        if arrived.is_erased() {
            erased.insert(k);
        } else {
            outcomes.set(k, measure_pulse(&arrived, Basis::from_bit(recv_bases[k]), coins)?);
        }
    }
    Ok(PhotonRound {
        sent,
        received,
        outcomes,
        erased,
        eve: link.take_eve_record(),
    })
}

/// Raw exchange with every choice supplied by the caller.
pub fn raw_exchange(
    alice: &AliceRawState,
    m: BitString,
    link: &mut QuantumLink,
    channel_src: &mut RandomSource,
    bob_coins: &mut (impl BitSource + ?Sized),
) -> Result<(BobRawState, PhotonRound)> {
    let round = photon_round(&alice.s, &alice.i, &m, Round::Raw, link, channel_src, bob_coins)?;
    let bob = BobRawState {
        m,
        a: round.outcomes.clone(),
        erased: round.erased.clone(),
    };
    Ok((bob, round))
}

/// Raw exchange with fresh random strings: Alice draws `s` then `i` from
/// `src_a`, Bob draws `m` from `src_b` and later uses it for his
/// measurement coins.
pub fn bb84_raw_exchange(
    n: usize,
    link: &mut QuantumLink,
    src_a: &mut RandomSource,
    src_b: &mut RandomSource,
    channel_src: &mut RandomSource,
) -> Result<(AliceRawState, BobRawState)> {
    let alice = AliceRawState::random(n, src_a);
    let m = random_bitstring(src_b, n);
    let (bob, _) = raw_exchange(&alice, m, link, channel_src, src_b)?;
    Ok((alice, bob))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiftResult {
    pub l: BitString,
    /// 0-based positions with `l = 0` that were not erased.
    pub kept_indices: Vec<usize>,
    /// Bob's outcomes at the kept positions.
    pub sifted_key: BitString,
}

pub fn bb84_sift(alice: &AliceRawState, bob: &BobRawState) -> Result<SiftResult> {
    let l = alice.s.xor(&bob.m)?;
    if bob.a.len() != l.len() {
        return Err(Error::LengthMismatch {
            left: l.len(),
            right: bob.a.len(),
        });
    }
    let kept_indices: Vec<usize> = (0..l.len())
        .filter(|&k| l[k] == Bit::ZERO && !bob.erased.contains(&k))
        .collect();
    let sifted_key = bob.a.restrict(&kept_indices);
    Ok(SiftResult {
        l,
        kept_indices,
        sifted_key,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QberEstimate {
    pub qber: f64,
    pub remaining_a: BitString,
    pub remaining_b: BitString,
    /// 0-based positions (within the compared keys) that were disclosed.
    pub disclosed: Vec<usize>,
}

/// Number of positions disclosed for a key of length `len`:
/// `ceil(fraction * len)`, clamped to `len`.
pub fn sacrifice_count(fraction: f64, len: usize) -> usize {
    let raw = fraction * len as f64;
    // Guard against products like 0.1 * 30 landing a hair above an integer.
    let count = (raw - raw.abs() * 1e-12).ceil();
    (count.max(0.0) as usize).min(len)
}

/// Publicly compares a random subset of positions and removes them from both
/// keys.
pub fn estimate_qber(
    alice_key: &BitString,
    bob_key: &BitString,
    sacrifice_fraction: f64,
    src: &mut RandomSource,
) -> Result<QberEstimate> {
    if alice_key.len() != bob_key.len() {
        return Err(Error::LengthMismatch {
            left: alice_key.len(),
            right: bob_key.len(),
        });
    }
    if alice_key.is_empty() {
        return Err(Error::EmptyKey);
    }
    if !(sacrifice_fraction > 0.0 && sacrifice_fraction <= 1.0) {
        return Err(Error::SacrificeFraction(sacrifice_fraction));
    }
    let len = alice_key.len();
    let disclosed = src.sample_positions(len, sacrifice_count(sacrifice_fraction, len));
    let mismatches = disclosed
        .iter()
        .filter(|&&k| alice_key[k] != bob_key[k])
        .count();
    let mut is_disclosed = vec![false; len];
    for &k in &disclosed {
        is_disclosed[k] = true;
    }
    let remaining: Vec<usize> = (0..len).filter(|&k| !is_disclosed[k]).collect();
    Ok(QberEstimate {
        qber: mismatches as f64 / disclosed.len() as f64,
        remaining_a: alice_key.restrict(&remaining),
        remaining_b: bob_key.restrict(&remaining),
        disclosed,
    })
}

/// Estimates QBER on one key pair when sacrifice is enabled, recording the
/// disclosed sample on the transcript. Returns `None` for an empty key or a
/// zero fraction.
pub(crate) fn sacrifice_and_record(
    record: &mut SessionRecord,
    roles: Roles,
    key_name: &str,
    sender_key: &BitString,
    receiver_key: &BitString,
    fraction: f64,
    public: &mut RandomSource,
) -> Result<Option<QberEstimate>> {
    if fraction == 0.0 || sender_key.is_empty() {
        return Ok(None);
    }
    let est = estimate_qber(sender_key, receiver_key, fraction, public)?;
    let mut mask = BitString::zeros(sender_key.len());
    for &k in &est.disclosed {
        mask.set(k, Bit::ONE);
    }
    record.message(Phase::Qber, roles.sender, &format!("{key_name}.sample"), &mask);
    record.message(
        Phase::Qber,
        roles.sender,
        &format!("{key_name}.bits"),
        &sender_key.restrict(&est.disclosed),
    );
    record.message(
        Phase::Qber,
        roles.receiver,
        &format!("{key_name}.bits"),
        &receiver_key.restrict(&est.disclosed),
    );
    Ok(Some(est))
}

pub(crate) fn record_round(record: &mut SessionRecord, phase: Phase, roles: Roles, round: &PhotonRound) {
    record.quantum(phase, roles.sender, "sent", round.sent.iter().copied().map(Some).collect());
    if !round.eve.is_empty() {
        let n = round.sent.len();
        let mut attacked = BitString::zeros(n);
        let mut basis = BitString::zeros(n);
        let mut outcome = BitString::zeros(n);
        for r in &round.eve {
            attacked.set(r.index, Bit::ONE);
            basis.set(r.index, r.basis.bit());
            outcome.set(r.index, r.outcome);
        }
        record.local(phase, Party::Eve, "attacked", &attacked);
        record.local(phase, Party::Eve, "basis", &basis);
        record.local(phase, Party::Eve, "outcome", &outcome);
    }
    record.quantum(phase, roles.receiver, "received", round.received.clone());
}

pub(crate) fn erasure_mask(n: usize, erased: &BTreeSet<usize>) -> BitString {
    let mut mask = BitString::zeros(n);
    for &k in erased {
        mask.set(k, Bit::ONE);
    }
    mask
}

/// A complete BB84 run.
#[derive(Clone, Debug)]
pub struct Bb84Session {
    pub alice: AliceRawState,
    pub bob: BobRawState,
    pub sift: SiftResult,
    /// Alice's sifted key: `i` at the kept positions.
    pub alice_key: BitString,
    pub qber: Option<QberEstimate>,
    pub aborted: bool,
    pub record: SessionRecord,
}

impl Bb84Session {
    /// Kept positions over pulses sent.
    pub fn sifting_rate(&self) -> f64 {
        if self.alice.is_empty() {
            0.0
        } else {
            self.sift.kept_indices.len() as f64 / self.alice.len() as f64
        }
    }
}

pub fn run_bb84(config: &SessionConfig, sources: &mut SessionSources) -> Result<Bb84Session> {
    config.validate()?;
    let alice = AliceRawState::random(config.n, &mut sources.sender);
    let m = random_bitstring(&mut sources.receiver, config.n);
    let mut link = QuantumLink::new(config.channel, config.adversary);
    run_bb84_with(config, alice, m, &mut link, sources)
}

/// BB84 with the sender's strings and the receiver's bases supplied.
pub fn run_bb84_with(
    config: &SessionConfig,
    alice: AliceRawState,
    m: BitString,
    link: &mut QuantumLink,
    sources: &mut SessionSources,
) -> Result<Bb84Session> {
    let roles = Roles::ALICE_BOB;
    let n = alice.len();
    let mut record = SessionRecord::new("bb84", Protocol::Bb84, n);

    record.local(Phase::Raw, roles.sender, "s", &alice.s);
    record.local(Phase::Raw, roles.sender, "i", &alice.i);
    record.local(Phase::Raw, roles.receiver, "m", &m);
    let (bob, round) = raw_exchange(&alice, m, link, &mut sources.channel, &mut sources.receiver)?;
    record_round(&mut record, Phase::Raw, roles, &round);
    record.local(Phase::Raw, roles.receiver, "a", &bob.a);

    record.message(Phase::Sift, roles.receiver, "m", &bob.m);
    record.message(Phase::Sift, roles.receiver, "lost", &erasure_mask(n, &bob.erased));
    let sift = bb84_sift(&alice, &bob)?;
    record.message(Phase::Sift, roles.sender, "l", &sift.l);

    let alice_key = alice.i.restrict(&sift.kept_indices);
    record.local(Phase::Output, roles.sender, "key", &alice_key);
    record.local(Phase::Output, roles.receiver, "key", &sift.sifted_key);

    let qber = sacrifice_and_record(
        &mut record,
        roles,
        "key",
        &alice_key,
        &sift.sifted_key,
        config.sacrifice_fraction,
        &mut sources.public,
    )?;
    let aborted = qber.as_ref().is_some_and(|q| q.qber > config.abort_threshold);

    record.summary.pulses = n;
    record.summary.aborted = aborted;
    record.summary.keys.push(KeyStat {
        name: "key".into(),
        length: alice_key.len(),
        remaining: qber.as_ref().map_or(alice_key.len(), |q| q.remaining_a.len()),
        qber: qber.as_ref().map(|q| q.qber),
        verified: Some(alice_key == sift.sifted_key),
    });

    Ok(Bb84Session {
        alice,
        bob,
        sift,
        alice_key,
        qber,
        aborted,
        record,
    })
}
