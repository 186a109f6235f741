//! QKD from a random seed.
//!
//! The quantum part is BB84's raw exchange plus a second ("missing key")
//! round whose bases are derived from a public random seed `x`:
//! the sender uses `t = s ^ x`, the receiver `n = 1 ^ m ^ x`. Since
//! `t ^ n = 1 ^ s ^ m`, every position is measured in the preparation basis
//! in exactly one of the two rounds.
//!
//! The classical part replaces sifting:
//!
//! * sender publishes `y = i ^ j`;
//! * receiver publishes `u = n ^ f(m, a, b ^ y)` and `v = n ^ f(m, b, a ^ y)`;
//! * sender decrypts `m = t ^ f(s, (1 ^ i) ^ u, j ^ v)` and publishes
//!   `l = s ^ m`;
//! * receiver recovers `s = m ^ l`, `i = f(l, a, b ^ y)`, `j = f(l, a ^ y, b)`.
//!
//! Here `f` is [`select`]. Both parties end with all four strings at full
//! length. The y/u/v step is usually called the asymmetric-cryptography
//! step; it is XOR masking and no security claim is made for it.
//!
//! Message order on the classical channel is fixed: `x`, round-two pulses,
//! `y`, `u`, `v`, `l`, then the list of positions discarded for loss.

use std::collections::BTreeSet;
use std::fmt;

use crate::bb84::{
    erasure_mask, photon_round, raw_exchange, record_round, sacrifice_and_record, AliceRawState, BobRawState,
    PhotonRound, QberEstimate,
};
use crate::bitcore::{random_bitstring, select, BitSource, BitString, RandomSource};
use crate::error::{Error, Result};
use crate::qsim::{QuantumLink, Round};
use crate::session::{Role, Roles, SessionConfig, SessionSources};
use crate::transcript::{KeyStat, Phase, Protocol, SessionRecord};

/// Strings of the second photon round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedRound {
    pub x: BitString,
    pub t: BitString,
    pub j: BitString,
    pub n: BitString,
    pub b: BitString,
    /// 0-based positions lost in the second round.
    pub erased2: BTreeSet<usize>,
}

/// Public messages of the classical part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalExchange {
    pub y: BitString,
    pub u: BitString,
    pub v: BitString,
    pub l: BitString,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyName {
    M,
    S,
    I,
    J,
}

impl KeyName {
    pub const ALL: [KeyName; 4] = [KeyName::M, KeyName::S, KeyName::I, KeyName::J];

    pub fn as_str(self) -> &'static str {
        match self {
            KeyName::M => "key_m",
            KeyName::S => "key_s",
            KeyName::I => "key_i",
            KeyName::J => "key_j",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for KeyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One party's copy of the four keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyBundle {
    pub key_m: BitString,
    pub key_s: BitString,
    pub key_i: BitString,
    pub key_j: BitString,
    /// Whether each key equals the other party's original, in
    /// [`KeyName::ALL`] order. Only a simulation can know this.
    pub verified: [bool; 4],
}

impl KeyBundle {
    pub fn get(&self, name: KeyName) -> &BitString {
        match name {
            KeyName::M => &self.key_m,
            KeyName::S => &self.key_s,
            KeyName::I => &self.key_i,
            KeyName::J => &self.key_j,
        }
    }

    pub fn is_verified(&self, name: KeyName) -> bool {
        self.verified[name.slot()]
    }

    pub fn all_verified(&self) -> bool {
        self.verified.iter().all(|&v| v)
    }

    pub fn len(&self) -> usize {
        self.key_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.key_m.is_empty()
    }
}

fn check_lengths(n: usize, strings: &[&BitString]) -> Result<()> {
    match strings.iter().find(|s| s.len() != n) {
        Some(bad) => Err(Error::LengthMismatch {
            left: n,
            right: bad.len(),
        }),
        None => Ok(()),
    }
}

pub fn publish_seed(n: usize, src: &mut impl BitSource) -> BitString {
    random_bitstring(src, n)
}

/// `(t, n)` with `t = s ^ x` and `n = (1 ^ m) ^ x`.
pub fn derive_round_two_bases(s: &BitString, m: &BitString, x: &BitString) -> Result<(BitString, BitString)> {
    let t = s.xor(x)?;
    let n = m.complement().xor(x)?;
    Ok((t, n))
}

/// Second photon round with the sender's value key `j` supplied.
pub fn missing_key_exchange_with(
    alice: &AliceRawState,
    bob: &BobRawState,
    x: &BitString,
    j: BitString,
    link: &mut QuantumLink,
    channel_src: &mut RandomSource,
    bob_coins: &mut (impl BitSource + ?Sized),
) -> Result<(SeedRound, PhotonRound)> {
    check_lengths(alice.len(), &[&alice.i, &bob.m, x, &j])?;
    let (t, n) = derive_round_two_bases(&alice.s, &bob.m, x)?;
    let round = photon_round(&t, &j, &n, Round::Missing, link, channel_src, bob_coins)?;
    let seed_round = SeedRound {
        x: x.clone(),
        t,
        j,
        n,
        b: round.outcomes.clone(),
        erased2: round.erased.clone(),
    };
    Ok((seed_round, round))
}

/// Second photon round; Alice draws `j` from `src_a`, Bob's conjugate-basis
/// outcomes come from `src_b`.
pub fn missing_key_exchange(
    alice: &AliceRawState,
    bob: &BobRawState,
    x: &BitString,
    link: &mut QuantumLink,
    src_a: &mut RandomSource,
    src_b: &mut RandomSource,
    channel_src: &mut RandomSource,
) -> Result<SeedRound> {
    let j = random_bitstring(src_a, alice.len());
    missing_key_exchange_with(alice, bob, x, j, link, channel_src, src_b).map(|(r, _)| r)
}

pub fn alice_send_y(i: &BitString, j: &BitString) -> Result<BitString> {
    i.xor(j)
}

/// `u = n ^ f(m, a, b ^ y)`, `v = n ^ f(m, b, a ^ y)`.
pub fn bob_encrypt_uv(bob: &BobRawState, round2: &SeedRound, y: &BitString) -> Result<(BitString, BitString)> {
    let len = bob.len();
    check_lengths(len, &[&bob.a, &round2.n, &round2.b, y])?;
    let u = BitString::from_fn(len, |k| {
        round2.n[k] ^ select(bob.m[k], bob.a[k], round2.b[k] ^ y[k])
    });
    let v = BitString::from_fn(len, |k| {
        round2.n[k] ^ select(bob.m[k], round2.b[k], bob.a[k] ^ y[k])
    });
    Ok((u, v))
}

/// `key_m = t ^ f(s, (1 ^ i) ^ u, j ^ v)`.
pub fn alice_decrypt_m(alice: &AliceRawState, round2: &SeedRound, u: &BitString, v: &BitString) -> Result<BitString> {
    let len = alice.len();
    check_lengths(len, &[&alice.i, &round2.t, &round2.j, u, v])?;
    Ok(BitString::from_fn(len, |k| {
        round2.t[k] ^ select(alice.s[k], !alice.i[k] ^ u[k], round2.j[k] ^ v[k])
    }))
}

/// What the receiver recovers from `l`, before any loss handling:
/// `(key_s, key_i, key_j)`.
pub fn bob_recover(
    bob: &BobRawState,
    round2: &SeedRound,
    y: &BitString,
    l: &BitString,
) -> Result<(BitString, BitString, BitString)> {
    let len = bob.len();
    check_lengths(len, &[&bob.a, &round2.b, y, l])?;
    let key_s = bob.m.xor(l)?;
    let key_i = BitString::from_fn(len, |k| select(l[k], bob.a[k], round2.b[k] ^ y[k]));
    let key_j = BitString::from_fn(len, |k| select(l[k], bob.a[k] ^ y[k], round2.b[k]));
    Ok((key_s, key_i, key_j))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reconciliation {
    pub alice_out: KeyBundle,
    pub bob_out: KeyBundle,
    pub l: BitString,
    /// 0-based positions lost in either round, dropped from every key.
    pub discarded: Vec<usize>,
    /// 0-based positions that survive, in order.
    pub kept: Vec<usize>,
}

pub fn private_reconciliation(
    alice: &AliceRawState,
    key_m: &BitString,
    bob: &BobRawState,
    round2: &SeedRound,
    y: &BitString,
) -> Result<Reconciliation> {
    let len = alice.len();
    check_lengths(len, &[&alice.i, key_m, &bob.m, &round2.j])?;
    let l = alice.s.xor(key_m)?;
    let (key_s, key_i, key_j) = bob_recover(bob, round2, y, &l)?;

    let discarded: Vec<usize> = bob.erased.union(&round2.erased2).copied().collect();
    let kept: Vec<usize> = (0..len)
        .filter(|k| !bob.erased.contains(k) && !round2.erased2.contains(k))
        .collect();

    let alice_keys = [key_m, &alice.s, &alice.i, &round2.j].map(|s| s.restrict(&kept));
    let bob_keys = [&bob.m, &key_s, &key_i, &key_j].map(|s| s.restrict(&kept));
    // Each party checks its copy against the other's original string.
    let verified: [bool; 4] = std::array::from_fn(|k| alice_keys[k] == bob_keys[k]);
    let native_alice = [false, true, true, true];

    let bundle = |keys: [BitString; 4], native: [bool; 4]| {
        let [key_m, key_s, key_i, key_j] = keys;
        KeyBundle {
            key_m,
            key_s,
            key_i,
            key_j,
            verified: std::array::from_fn(|k| native[k] || verified[k]),
        }
    };
    Ok(Reconciliation {
        alice_out: bundle(alice_keys, native_alice),
        bob_out: bundle(bob_keys, native_alice.map(|n| !n)),
        l,
        discarded,
        kept,
    })
}

/// Every private choice of one seed-protocol session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedInputs {
    pub alice: AliceRawState,
    pub m: BitString,
    pub x: BitString,
    pub j: BitString,
}

impl SeedInputs {
    /// Sender draws `s`, `i`, `j`; receiver draws `m`; the publisher then
    /// draws `x` from its own stream.
    pub fn draw(n: usize, publisher: Role, sources: &mut SessionSources) -> Self {
        let alice = AliceRawState::random(n, &mut sources.sender);
        let j = random_bitstring(&mut sources.sender, n);
        let m = random_bitstring(&mut sources.receiver, n);
        let x = match publisher {
            Role::Sender => publish_seed(n, &mut sources.sender),
            Role::Receiver => publish_seed(n, &mut sources.receiver),
        };
        SeedInputs { alice, m, x, j }
    }
}

/// Randomness a session consumes once its inputs are fixed.
pub struct Streams<'a> {
    pub channel: &'a mut RandomSource,
    pub public: &'a mut RandomSource,
    /// Receiver's conjugate-basis measurement outcomes.
    pub coins: &'a mut dyn BitSource,
}

#[derive(Clone, Debug)]
pub struct SeedSession {
    pub roles: Roles,
    pub alice: AliceRawState,
    pub bob: BobRawState,
    pub round2: SeedRound,
    pub exchange: ClassicalExchange,
    /// Sender's decryption of `m` at full length.
    pub decrypted_m: BitString,
    pub reconciliation: Reconciliation,
    /// Per-key estimate in [`KeyName::ALL`] order.
    pub qber: [Option<QberEstimate>; 4],
    pub aborted: bool,
    pub record: SessionRecord,
}

impl SeedSession {
    /// Reconciled length of each key over `n`.
    pub fn yield_ratio(&self) -> f64 {
        if self.alice.is_empty() {
            0.0
        } else {
            self.reconciliation.alice_out.len() as f64 / self.alice.len() as f64
        }
    }

    pub fn pulses(&self) -> usize {
        2 * self.alice.len()
    }

    pub fn qber(&self, name: KeyName) -> Option<f64> {
        self.qber[name.slot()].as_ref().map(|q| q.qber)
    }
}

pub fn run_seed_protocol(config: &SessionConfig, sources: &mut SessionSources) -> Result<SeedSession> {
    config.validate()?;
    let inputs = SeedInputs::draw(config.n, config.seed_publisher, sources);
    let mut link = QuantumLink::new(config.channel, config.adversary);
    let SessionSources {
        receiver,
        channel,
        public,
        ..
    } = sources;
    run_seed_with(
        config,
        Roles::ALICE_BOB,
        "seed",
        inputs,
        &mut link,
        Streams {
            channel,
            public,
            coins: receiver,
        },
    )
}

/// Runs a whole session from fixed inputs.
pub fn run_seed_with(
    config: &SessionConfig,
    roles: Roles,
    label: &str,
    inputs: SeedInputs,
    link: &mut QuantumLink,
    streams: Streams<'_>,
) -> Result<SeedSession> {
    config.validate()?;
    let SeedInputs { alice, m, x, j } = inputs;
    let n = alice.len();
    check_lengths(n, &[&m, &x, &j])?;
    let Streams { channel, public, coins } = streams;
    let (snd, rcv) = (roles.sender, roles.receiver);
    let mut record = SessionRecord::new(label, Protocol::Seed, n);

    record.local(Phase::Raw, snd, "s", &alice.s);
    record.local(Phase::Raw, snd, "i", &alice.i);
    record.local(Phase::Raw, rcv, "m", &m);
    let (bob, raw) = raw_exchange(&alice, m, link, channel, &mut *coins)?;
    record_round(&mut record, Phase::Raw, roles, &raw);
    record.local(Phase::Raw, rcv, "a", &bob.a);

    record.message(Phase::Seed, roles.party(config.seed_publisher), "x", &x);

    let (round2, missing) = missing_key_exchange_with(&alice, &bob, &x, j, link, channel, &mut *coins)?;
    record.local(Phase::Missing, snd, "t", &round2.t);
    record.local(Phase::Missing, snd, "j", &round2.j);
    record.local(Phase::Missing, rcv, "n", &round2.n);
    record_round(&mut record, Phase::Missing, roles, &missing);
    record.local(Phase::Missing, rcv, "b", &round2.b);

    let y = alice_send_y(&alice.i, &round2.j)?;
    record.message(Phase::Asymmetric, snd, "y", &y);
    let (u, v) = bob_encrypt_uv(&bob, &round2, &y)?;
    record.message(Phase::Asymmetric, rcv, "u", &u);
    record.message(Phase::Asymmetric, rcv, "v", &v);
    let decrypted_m = alice_decrypt_m(&alice, &round2, &u, &v)?;
    record.local(Phase::Asymmetric, snd, "key_m", &decrypted_m);

    let reconciliation = private_reconciliation(&alice, &decrypted_m, &bob, &round2, &y)?;
    record.message(Phase::Reconciliation, snd, "l", &reconciliation.l);
    let discard: BTreeSet<usize> = reconciliation.discarded.iter().copied().collect();
    record.message(Phase::Erasure, rcv, "discard", &erasure_mask(n, &discard));

    for name in KeyName::ALL {
        record.local(Phase::Output, snd, name.as_str(), reconciliation.alice_out.get(name));
    }
    for name in KeyName::ALL {
        record.local(Phase::Output, rcv, name.as_str(), reconciliation.bob_out.get(name));
    }

    let mut qber: [Option<QberEstimate>; 4] = Default::default();
    for name in KeyName::ALL {
        qber[name.slot()] = sacrifice_and_record(
            &mut record,
            roles,
            name.as_str(),
            reconciliation.alice_out.get(name),
            reconciliation.bob_out.get(name),
            config.sacrifice_fraction,
            public,
        )?;
    }
    let aborted = qber.iter().flatten().any(|q| q.qber > config.abort_threshold);

    record.summary.pulses = 2 * n;
    record.summary.aborted = aborted;
    for name in KeyName::ALL {
        let est = &qber[name.slot()];
        let length = reconciliation.alice_out.len();
        record.summary.keys.push(KeyStat {
            name: name.as_str().into(),
            length,
            remaining: est.as_ref().map_or(length, |q| q.remaining_a.len()),
            qber: est.as_ref().map(|q| q.qber),
            verified: Some(reconciliation.alice_out.get(name) == reconciliation.bob_out.get(name)),
        });
    }

    let exchange = ClassicalExchange {
        y,
        u,
        v,
        l: reconciliation.l.clone(),
    };
    Ok(SeedSession {
        roles,
        alice,
        bob,
        round2,
        exchange,
        decrypted_m,
        reconciliation,
        qber,
        aborted,
        record,
    })
}
