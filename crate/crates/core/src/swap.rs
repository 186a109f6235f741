//! Key swapping through a central photon source.
//!
//! Central plays the sending role of the seed protocol toward two
//! recipients, who each play the receiving role. After decrypting both
//! recipients' basis strings Central announces the positions where they
//! agree, and each recipient keeps its own basis string at those positions.
//! The recipients never interact directly. Central knows the common key, so
//! it acts as a trusted node.
//!
//! Positions lost in either session are left out of the comparison, and
//! positions of `key_m` disclosed during either session's error estimate are
//! removed from the common key afterwards.

use std::collections::BTreeSet;

use crate::bitcore::{Bit, BitString, RandomSource};
use crate::error::{Error, Result};
use crate::qsim::{AdversaryModel, ChannelModel, QuantumLink};
use crate::seedqkd::{run_seed_with, KeyName, SeedInputs, SeedSession, Streams};
use crate::session::{Role, Roles, SessionConfig, SessionSources, DEFAULT_ABORT_THRESHOLD};
use crate::transcript::{KeyStat, Party, Phase, Protocol, SessionRecord};

/// 0-based positions where the two recipients' bases agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoincidenceAnnouncement {
    pub coincide: Vec<usize>,
}

pub fn announce_coincidence(m_a: &BitString, m_b: &BitString) -> Result<CoincidenceAnnouncement> {
    if m_a.len() != m_b.len() {
        return Err(Error::LengthMismatch {
            left: m_a.len(),
            right: m_b.len(),
        });
    }
    Ok(CoincidenceAnnouncement {
        coincide: (0..m_a.len()).filter(|&k| m_a[k] == m_b[k]).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapConfig {
    pub n: usize,
    pub channel_a: ChannelModel,
    pub adversary_a: AdversaryModel,
    pub channel_b: ChannelModel,
    pub adversary_b: AdversaryModel,
    pub sacrifice_fraction: f64,
    pub abort_threshold: f64,
    /// Central sends the same `s`, `i`, `j` (and seed) to both recipients.
    pub reuse_states: bool,
}

impl SwapConfig {
    pub fn ideal(n: usize) -> Self {
        SwapConfig {
            n,
            channel_a: ChannelModel::ideal(),
            adversary_a: AdversaryModel::none(),
            channel_b: ChannelModel::ideal(),
            adversary_b: AdversaryModel::none(),
            sacrifice_fraction: 0.0,
            abort_threshold: DEFAULT_ABORT_THRESHOLD,
            reuse_states: false,
        }
    }

    fn session(&self, channel: ChannelModel, adversary: AdversaryModel) -> SessionConfig {
        SessionConfig {
            n: self.n,
            channel,
            adversary,
            sacrifice_fraction: self.sacrifice_fraction,
            abort_threshold: self.abort_threshold,
            seed_publisher: Role::Sender,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CentralState {
    /// Central and Alice.
    pub session_a: SeedSession,
    /// Central and Bob.
    pub session_b: SeedSession,
    pub reuse_states: bool,
}

impl CentralState {
    pub fn new(session_a: SeedSession, session_b: SeedSession, reuse_states: bool) -> Result<Self> {
        let (na, nb) = (session_a.alice.len(), session_b.alice.len());
        if na != nb {
            return Err(Error::LengthMismatch { left: na, right: nb });
        }
        Ok(CentralState {
            session_a,
            session_b,
            reuse_states,
        })
    }

    pub fn n(&self) -> usize {
        self.session_a.alice.len()
    }

    /// Positions that survived loss in both sessions.
    pub fn comparable(&self) -> BTreeSet<usize> {
        let a: BTreeSet<usize> = self.session_a.reconciliation.kept.iter().copied().collect();
        self.session_b
            .reconciliation
            .kept
            .iter()
            .copied()
            .filter(|k| a.contains(k))
            .collect()
    }

    /// Central's comparison of the two decrypted basis strings.
    pub fn announce(&self) -> Result<CoincidenceAnnouncement> {
        let comparable = self.comparable();
        let mut ann = announce_coincidence(&self.session_a.decrypted_m, &self.session_b.decrypted_m)?;
        ann.coincide.retain(|k| comparable.contains(k));
        Ok(ann)
    }

    /// Original positions of `key_m` disclosed by either session's QBER check.
    pub fn disclosed_m_positions(&self) -> BTreeSet<usize> {
        [&self.session_a, &self.session_b]
            .into_iter()
            .flat_map(|s| {
                let kept = &s.reconciliation.kept;
                s.qber[0]
                    .iter()
                    .flat_map(move |q| q.disclosed.iter().map(move |&d| kept[d]))
            })
            .collect()
    }

    /// Positions making up the common key.
    pub fn key_positions(&self, ann: &CoincidenceAnnouncement) -> Vec<usize> {
        let disclosed = self.disclosed_m_positions();
        ann.coincide
            .iter()
            .copied()
            .filter(|k| !disclosed.contains(k))
            .collect()
    }

    /// The common key as Central computes it from its own decryptions.
    pub fn common_key(&self, ann: &CoincidenceAnnouncement) -> BitString {
        self.session_a.decrypted_m.restrict(&self.key_positions(ann))
    }
}

#[derive(Clone, Debug)]
pub struct SwapOutcome {
    pub central: CentralState,
    pub alice_key: BitString,
    pub bob_key: BitString,
    pub announcement: CoincidenceAnnouncement,
    pub aborted: bool,
    /// Records for the two sessions followed by the swap step itself.
    pub records: Vec<SessionRecord>,
}

impl SwapOutcome {
    pub fn coincidence_rate(&self) -> f64 {
        let n = self.central.n();
        if n == 0 {
            0.0
        } else {
            self.announcement.coincide.len() as f64 / n as f64
        }
    }
}

fn inputs_for(n: usize, central: &mut RandomSource, recipient: &mut RandomSource) -> SeedInputs {
    let mut sources = SessionSources {
        sender: central.clone(),
        receiver: recipient.clone(),
        channel: RandomSource::new(0),
        public: RandomSource::new(0),
    };
    let inputs = SeedInputs::draw(n, Role::Sender, &mut sources);
    *central = sources.sender;
    *recipient = sources.receiver;
    inputs
}

fn run_leg(
    config: SessionConfig,
    recipient: Party,
    label: &str,
    mut central: RandomSource,
    mut recipient_src: RandomSource,
    mut channel: RandomSource,
    mut public: RandomSource,
) -> Result<SeedSession> {
    let inputs = inputs_for(config.n, &mut central, &mut recipient_src);
    let mut link = QuantumLink::new(config.channel, config.adversary);
    run_seed_with(
        &config,
        Roles {
            sender: Party::Central,
            receiver: recipient,
        },
        label,
        inputs,
        &mut link,
        Streams {
            channel: &mut channel,
            public: &mut public,
            coins: &mut recipient_src,
        },
    )
}

/// Runs both Central sessions (concurrently) and joins them. Streams are
/// derived from `master` and `stream`; with `reuse_states` both sessions
/// share Central's stream and therefore its strings.
pub fn run_swap(config: &SwapConfig, master: u64, stream: u64) -> Result<SwapOutcome> {
    let src = |tag: &str| RandomSource::derive(master, stream, tag);
    let (central_a, central_b) = if config.reuse_states {
        (src("central"), src("central"))
    } else {
        (src("central:alice"), src("central:bob"))
    };
    let cfg_a = config.session(config.channel_a, config.adversary_a);
    let cfg_b = config.session(config.channel_b, config.adversary_b);
    cfg_a.validate()?;
    cfg_b.validate()?;

    let (a, b) = rayon::join(
        || {
            run_leg(
                cfg_a,
                Party::Alice,
                "central-alice",
                central_a,
                src("alice"),
                src("channel:alice"),
                src("public:alice"),
            )
        },
        || {
            run_leg(
                cfg_b,
                Party::Bob,
                "central-bob",
                central_b,
                src("bob"),
                src("channel:bob"),
                src("public:bob"),
            )
        },
    );
    join_sessions(a?, b?, config.reuse_states)
}

/// The join point: Central compares, announces, and each recipient cuts its
/// own basis string down to the common key.
pub fn join_sessions(session_a: SeedSession, session_b: SeedSession, reuse_states: bool) -> Result<SwapOutcome> {
    let central = CentralState::new(session_a, session_b, reuse_states)?;
    let n = central.n();
    let announcement = central.announce()?;
    let positions = central.key_positions(&announcement);
    let alice_key = central.session_a.bob.m.restrict(&positions);
    let bob_key = central.session_b.bob.m.restrict(&positions);
    let central_key = central.common_key(&announcement);
    let aborted = central.session_a.aborted || central.session_b.aborted;

    let mut record = SessionRecord::new("swap", Protocol::Swap, n);
    let mut mask = BitString::zeros(n);
    for &k in &announcement.coincide {
        mask.set(k, Bit::ONE);
    }
    record.message(Phase::Swap, Party::Central, "coincide", &mask);
    let mut withheld = BitString::zeros(n);
    for k in central.disclosed_m_positions() {
        withheld.set(k, Bit::ONE);
    }
    record.message(Phase::Swap, Party::Central, "withheld", &withheld);
    record.local(Phase::Output, Party::Central, "common_key", &central_key);
    record.local(Phase::Output, Party::Alice, "common_key", &alice_key);
    record.local(Phase::Output, Party::Bob, "common_key", &bob_key);
    record.summary.pulses = central.session_a.pulses() + central.session_b.pulses();
    record.summary.aborted = aborted;
    record.summary.keys.push(KeyStat {
        name: "common".into(),
        length: alice_key.len(),
        remaining: alice_key.len(),
        qber: None,
        verified: Some(alice_key == bob_key),
    });

    let records = vec![
        central.session_a.record.clone(),
        central.session_b.record.clone(),
        record,
    ];
    Ok(SwapOutcome {
        central,
        alice_key,
        bob_key,
        announcement,
        aborted,
        records,
    })
}

/// Whether both recipients recovered Central's `s`, `i`, `j` exactly, and
/// identically to each other. Only meaningful with `reuse_states`.
pub fn recipients_share_central_strings(outcome: &SwapOutcome) -> bool {
    let (a, b) = (&outcome.central.session_a, &outcome.central.session_b);
    [KeyName::S, KeyName::I, KeyName::J].into_iter().all(|name| {
        let ka = a.reconciliation.bob_out.get(name);
        let kb = b.reconciliation.bob_out.get(name);
        ka == kb && ka == a.reconciliation.alice_out.get(name) && kb == b.reconciliation.alice_out.get(name)
    }) && a.alice == b.alice
        && a.round2.j == b.round2.j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn announcement_examples() {
        assert_eq!(announce_coincidence(&bs("0101"), &bs("0110")).unwrap().coincide, vec![0, 1]);
        assert_eq!(announce_coincidence(&bs("0110"), &bs("0110")).unwrap().coincide, vec![0, 1, 2, 3]);
        assert!(announce_coincidence(&bs("0110"), &bs("1001")).unwrap().coincide.is_empty());
        assert!(announce_coincidence(&bs("01"), &bs("011")).is_err());
    }

    #[test]
    fn ideal_swap_gives_common_key() {
        let outcome = run_swap(&SwapConfig::ideal(10_000), 1, 0).unwrap();
        assert_eq!(outcome.alice_key, outcome.bob_key);
        assert!((outcome.coincidence_rate() - 0.5).abs() < 0.02);
        assert_eq!(outcome.central.common_key(&outcome.announcement), outcome.alice_key);
        assert!(!outcome.aborted);
        assert_eq!(outcome.records.len(), 3);
    }

    #[test]
    fn reused_states_are_shared() {
        let mut config = SwapConfig::ideal(2_000);
        config.reuse_states = true;
        let outcome = run_swap(&config, 2, 0).unwrap();
        assert!(recipients_share_central_strings(&outcome));

        config.reuse_states = false;
        let outcome = run_swap(&config, 2, 0).unwrap();
        assert!(!recipients_share_central_strings(&outcome));
        assert_eq!(outcome.alice_key, outcome.bob_key);
    }

    #[test]
    fn sacrificed_m_positions_leave_the_common_key() {
        let mut config = SwapConfig::ideal(1_000);
        config.sacrifice_fraction = 0.5;
        let outcome = run_swap(&config, 3, 0).unwrap();
        let withheld = outcome.central.disclosed_m_positions();
        assert!(!withheld.is_empty());
        assert_eq!(outcome.alice_key, outcome.bob_key);
        assert!(outcome.alice_key.len() < outcome.announcement.coincide.len());
    }

    #[test]
    fn mismatched_sessions_rejected() {
        let a = run_swap(&SwapConfig::ideal(10), 4, 0).unwrap().central.session_a;
        let b = run_swap(&SwapConfig::ideal(12), 4, 0).unwrap().central.session_b;
        assert!(matches!(join_sessions(a, b, false), Err(Error::LengthMismatch { .. })));
    }
}
