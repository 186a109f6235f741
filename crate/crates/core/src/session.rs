//! Per-session configuration and the random streams each participant owns.

use crate::bitcore::RandomSource;
use crate::error::{Error, Result};
use crate::qsim::{AdversaryModel, ChannelModel};
use crate::transcript::Party;

pub const DEFAULT_SACRIFICE_FRACTION: f64 = 0.5;
pub const DEFAULT_ABORT_THRESHOLD: f64 = 0.11;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionConfig {
    /// Pulses per photon round.
    pub n: usize,
    pub channel: ChannelModel,
    pub adversary: AdversaryModel,
    /// Fraction of each key disclosed for error estimation; 0 skips it.
    pub sacrifice_fraction: f64,
    /// A run is flagged as aborted when any estimated QBER exceeds this.
    pub abort_threshold: f64,
    /// Who publishes the random seed `x` in the seed protocol.
    pub seed_publisher: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Sender,
    Receiver,
}

impl SessionConfig {
    pub fn ideal(n: usize) -> Self {
        SessionConfig {
            n,
            channel: ChannelModel::ideal(),
            adversary: AdversaryModel::none(),
            sacrifice_fraction: 0.0,
            abort_threshold: DEFAULT_ABORT_THRESHOLD,
            seed_publisher: Role::Sender,
        }
    }

    pub fn with_link(mut self, channel: ChannelModel, adversary: AdversaryModel) -> Self {
        self.channel = channel;
        self.adversary = adversary;
        self
    }

    pub fn with_sacrifice(mut self, fraction: f64) -> Self {
        self.sacrifice_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sacrifice_fraction) {
            return Err(Error::SacrificeFraction(self.sacrifice_fraction));
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return Err(Error::Probability {
                name: "abort threshold",
                value: self.abort_threshold,
            });
        }
        Ok(())
    }
}

/// Which parties play the sending and receiving roles. Plain two-party runs
/// use Alice and Bob; key swapping puts Central in the sending role.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Roles {
    pub sender: Party,
    pub receiver: Party,
}

impl Roles {
    pub const ALICE_BOB: Roles = Roles {
        sender: Party::Alice,
        receiver: Party::Bob,
    };

    pub fn party(&self, role: Role) -> Party {
        match role {
            Role::Sender => self.sender,
            Role::Receiver => self.receiver,
        }
    }
}

/// One independent stream per participant of a session.
#[derive(Clone, Debug)]
pub struct SessionSources {
    pub sender: RandomSource,
    pub receiver: RandomSource,
    /// Noise, loss and the eavesdropper's choices.
    pub channel: RandomSource,
    /// Public coin used to pick sacrificed positions.
    pub public: RandomSource,
}

impl SessionSources {
    /// Streams for trial `stream` of a run seeded with `master`, tagged
    /// `alice`, `bob`, `channel` and `public`.
    pub fn derive(master: u64, stream: u64) -> Self {
        SessionSources::derive_tagged(master, stream, ["alice", "bob", "channel", "public"])
    }

    pub fn derive_tagged(master: u64, stream: u64, tags: [&str; 4]) -> Self {
        let [sender, receiver, channel, public] = tags.map(|t| RandomSource::derive(master, stream, t));
        SessionSources {
            sender,
            receiver,
            channel,
            public,
        }
    }
}
