//! Simulated quantum layer.
//!
//! A state is kept as its classical `(basis, value)` label rather than as
//! amplitudes. For the four BB84 states the Born rule reduces to two cases:
//! measuring in the preparation basis returns the encoded value, measuring in
//! the conjugate basis returns a fair coin.

use std::fmt;
use std::str::FromStr;

use crate::bitcore::{Bit, BitSource, RandomSource};
use crate::error::{Error, Result};

/// `Computational` is {|0>, |1>}, `Diagonal` is {|+>, |->}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Computational,
    Diagonal,
}

impl Basis {
    pub fn from_bit(bit: Bit) -> Self {
        if bit.is_one() {
            Basis::Diagonal
        } else {
            Basis::Computational
        }
    }

    pub fn bit(self) -> Bit {
        Bit::new(self == Basis::Diagonal)
    }
}

/// One of the four states `psi_{s i}`: `psi00 = |0>`, `psi01 = |1>`,
/// `psi10 = |+>`, `psi11 = |->`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QubitState {
    basis: Basis,
    value: Bit,
}

impl QubitState {
    pub fn basis(self) -> Basis {
        self.basis
    }

    pub fn basis_bit(self) -> Bit {
        self.basis.bit()
    }

    pub fn value_bit(self) -> Bit {
        self.value
    }

    pub fn name(self) -> &'static str {
        match (self.basis, self.value.is_one()) {
            (Basis::Computational, false) => "psi00",
            (Basis::Computational, true) => "psi01",
            (Basis::Diagonal, false) => "psi10",
            (Basis::Diagonal, true) => "psi11",
        }
    }

    fn flipped(self) -> Self {
        QubitState {
            basis: self.basis,
            value: !self.value,
        }
    }
}

impl fmt::Display for QubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QubitState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (basis, value) = match s {
            "psi00" => (Bit::ZERO, Bit::ZERO),
            "psi01" => (Bit::ZERO, Bit::ONE),
            "psi10" => (Bit::ONE, Bit::ZERO),
            "psi11" => (Bit::ONE, Bit::ONE),
            other => return Err(format!("unknown state {other:?}")),
        };
        Ok(encode(basis, value))
    }
}

pub fn encode(basis_bit: Bit, value_bit: Bit) -> QubitState {
    QubitState {
        basis: Basis::from_bit(basis_bit),
        value: value_bit,
    }
}

pub fn measure(state: QubitState, basis: Basis, coins: &mut (impl BitSource + ?Sized)) -> Bit {
    if basis == state.basis {
        state.value
    } else {
        coins.next_bit()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Round {
    Raw,
    Missing,
}

impl Round {
    pub fn as_str(self) -> &'static str {
        match self {
            Round::Raw => "raw",
            Round::Missing => "missing",
        }
    }
}

/// A photon in flight. `state` is `None` once the channel has lost it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pulse {
    /// 0-based position; reported as `index + 1`.
    pub index: usize,
    pub state: Option<QubitState>,
    pub round: Round,
}

impl Pulse {
    pub fn new(index: usize, state: QubitState, round: Round) -> Self {
        Pulse {
            index,
            state: Some(state),
            round,
        }
    }

    pub fn is_erased(&self) -> bool {
        self.state.is_none()
    }

    pub fn label(&self) -> &'static str {
        self.state.map_or("lost", QubitState::name)
    }
}

/// Measures a received pulse. Lost pulses are an error; the protocol layer
/// decides what to do about them before measuring.
pub fn measure_pulse(pulse: &Pulse, basis: Basis, coins: &mut (impl BitSource + ?Sized)) -> Result<Bit> {
    pulse
        .state
        .map(|state| measure(state, basis, coins))
        .ok_or(Error::Erased {
            position: pulse.index + 1,
        })
}

fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Probability { name, value })
    }
}

/// Per-pulse noise and loss. Noise is a flip of the value bit in the
/// sender's basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    flip_probability: f64,
    loss_probability: f64,
}

impl ChannelModel {
    pub fn new(flip_probability: f64, loss_probability: f64) -> Result<Self> {
        Ok(ChannelModel {
            flip_probability: check_probability("flip probability", flip_probability)?,
            loss_probability: check_probability("loss probability", loss_probability)?,
        })
    }

    pub fn ideal() -> Self {
        ChannelModel {
            flip_probability: 0.0,
            loss_probability: 0.0,
        }
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }

    pub fn loss_probability(&self) -> f64 {
        self.loss_probability
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel::ideal()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EveStrategy {
    None,
    /// Measure in a basis chosen uniformly per pulse, resend the outcome.
    InterceptResendRandom,
    /// Always measure and resend in the given basis.
    InterceptResendFixed(Basis),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversaryModel {
    strategy: EveStrategy,
    attack_fraction: f64,
}

impl AdversaryModel {
    pub fn new(strategy: EveStrategy, attack_fraction: f64) -> Result<Self> {
        Ok(AdversaryModel {
            strategy,
            attack_fraction: check_probability("attack fraction", attack_fraction)?,
        })
    }

    pub fn none() -> Self {
        AdversaryModel {
            strategy: EveStrategy::None,
            attack_fraction: 0.0,
        }
    }

    /// The strategy applied to every pulse.
    pub fn full(strategy: EveStrategy) -> Self {
        AdversaryModel {
            strategy,
            attack_fraction: 1.0,
        }
    }

    pub fn strategy(&self) -> EveStrategy {
        self.strategy
    }

    pub fn attack_fraction(&self) -> f64 {
        self.attack_fraction
    }

    pub fn is_active(&self) -> bool {
        self.strategy != EveStrategy::None && self.attack_fraction > 0.0
    }
}

impl Default for AdversaryModel {
    fn default() -> Self {
        AdversaryModel::none()
    }
}

/// One intercepted pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EveRecord {
    pub index: usize,
    pub round: Round,
    pub basis: Basis,
    pub outcome: Bit,
}

/// A quantum channel with an optional eavesdropper sitting on it. Keeps
/// Eve's measurement log for every pulse she touched.
#[derive(Clone, Debug)]
pub struct QuantumLink {
    channel: ChannelModel,
    adversary: AdversaryModel,
    log: Vec<EveRecord>,
}

impl QuantumLink {
    pub fn new(channel: ChannelModel, adversary: AdversaryModel) -> Self {
        QuantumLink {
            channel,
            adversary,
            log: Vec::new(),
        }
    }

    pub fn ideal() -> Self {
        QuantumLink::new(ChannelModel::ideal(), AdversaryModel::none())
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn adversary(&self) -> &AdversaryModel {
        &self.adversary
    }

    /// Order is fixed: Eve's intercept-resend, then loss, then the value flip.
    pub fn transmit(&mut self, pulse: Pulse, src: &mut RandomSource) -> Pulse {
        let Some(mut state) = pulse.state else {
            return pulse;
        };

        if self.adversary.is_active() && src.bernoulli(self.adversary.attack_fraction) {
            let basis = match self.adversary.strategy {
                EveStrategy::InterceptResendRandom => Basis::from_bit(src.next_bit()),
                EveStrategy::InterceptResendFixed(basis) => basis,
                EveStrategy::None => unreachable!("inactive adversary"),
            };
            let outcome = measure(state, basis, src);
            self.log.push(EveRecord {
                index: pulse.index,
                round: pulse.round,
                basis,
                outcome,
            });
            state = QubitState {
                basis,
                value: outcome,
            };
        }

        if src.bernoulli(self.channel.loss_probability) {
            return Pulse {
                state: None,
                ..pulse
            };
        }

        if src.bernoulli(self.channel.flip_probability) {
            state = state.flipped();
        }

        Pulse {
            state: Some(state),
            ..pulse
        }
    }

    pub fn eve_record(&self) -> &[EveRecord] {
        &self.log
    }

    pub fn take_eve_record(&mut self) -> Vec<EveRecord> {
        std::mem::take(&mut self.log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_STATES: [(Bit, Bit); 4] = [
        (Bit::ZERO, Bit::ZERO),
        (Bit::ZERO, Bit::ONE),
        (Bit::ONE, Bit::ZERO),
        (Bit::ONE, Bit::ONE),
    ];

    #[test]
    fn encode_names_states() {
        assert_eq!(encode(Bit::ONE, Bit::ZERO).name(), "psi10");
        assert_eq!(encode(Bit::ZERO, Bit::ZERO).name(), "psi00");
        for (s, i) in ALL_STATES {
            let q = encode(s, i);
            assert_eq!((q.basis_bit(), q.value_bit()), (s, i));
            assert_eq!(q.name().parse::<QubitState>().unwrap(), q);
        }
    }

    #[test]
    fn matched_measurement_is_deterministic() {
        let mut src = RandomSource::new(1);
        for (s, i) in ALL_STATES {
            let q = encode(s, i);
            for _ in 0..32 {
                assert_eq!(measure(q, Basis::from_bit(s), &mut src), i);
            }
        }
        assert_eq!(
            measure(encode(Bit::ONE, Bit::ONE), Basis::Diagonal, &mut src),
            Bit::ONE
        );
    }

    #[test]
    fn mismatched_measurement_is_fair() {
        let draws = 100_000;
        for (seed, (s, i)) in ALL_STATES.into_iter().enumerate() {
            let mut src = RandomSource::new(seed as u64 + 100);
            let q = encode(s, i);
            let wrong = Basis::from_bit(!s);
            let ones = (0..draws)
                .filter(|_| measure(q, wrong, &mut src).is_one())
                .count();
            let mean = ones as f64 / draws as f64;
            assert!((mean - 0.5).abs() < 0.01, "{} mean {mean}", q.name());
        }
    }

    #[test]
    fn lost_pulse_cannot_be_measured() {
        let pulse = Pulse {
            index: 4,
            state: None,
            round: Round::Raw,
        };
        let err = measure_pulse(&pulse, Basis::Computational, &mut RandomSource::new(0)).unwrap_err();
        assert_eq!(err, Error::Erased { position: 5 });
        assert_eq!(pulse.label(), "lost");
    }

    #[test]
    fn identity_channel_preserves_pulses() {
        let mut link = QuantumLink::ideal();
        let mut src = RandomSource::new(3);
        for (k, (s, i)) in ALL_STATES.into_iter().enumerate() {
            let pulse = Pulse::new(k, encode(s, i), Round::Missing);
            assert_eq!(link.transmit(pulse, &mut src), pulse);
        }
        assert!(link.eve_record().is_empty());
    }

    #[test]
    fn full_loss_erases_everything() {
        let mut link = QuantumLink::new(ChannelModel::new(0.3, 1.0).unwrap(), AdversaryModel::none());
        let mut src = RandomSource::new(3);
        for k in 0..100 {
            let out = link.transmit(Pulse::new(k, encode(Bit::ONE, Bit::ZERO), Round::Raw), &mut src);
            assert!(out.is_erased());
        }
    }

    #[test]
    fn full_flip_inverts_value_in_sender_basis() {
        let mut link = QuantumLink::new(ChannelModel::new(1.0, 0.0).unwrap(), AdversaryModel::none());
        let mut src = RandomSource::new(3);
        let out = link.transmit(Pulse::new(0, encode(Bit::ONE, Bit::ZERO), Round::Raw), &mut src);
        assert_eq!(out.state, Some(encode(Bit::ONE, Bit::ONE)));
    }

    #[test]
    fn rejects_out_of_range_probabilities() {
        assert!(ChannelModel::new(-0.1, 0.0).is_err());
        assert!(ChannelModel::new(0.0, 1.5).is_err());
        assert!(AdversaryModel::new(EveStrategy::InterceptResendRandom, 2.0).is_err());
    }

    #[test]
    fn intercept_resend_error_rate_is_one_quarter() {
        let n = 100_000;
        let mut link = QuantumLink::new(
            ChannelModel::ideal(),
            AdversaryModel::full(EveStrategy::InterceptResendRandom),
        );
        let mut channel_src = RandomSource::new(11);
        let mut bob = RandomSource::new(12);
        let errors = (0..n)
            .filter(|&k| {
                let out = link.transmit(Pulse::new(k, encode(Bit::ZERO, Bit::ZERO), Round::Raw), &mut channel_src);
                measure_pulse(&out, Basis::Computational, &mut bob).unwrap().is_one()
            })
            .count();
        let rate = errors as f64 / n as f64;
        assert!((rate - 0.25).abs() < 0.01, "error rate {rate}");
        assert_eq!(link.eve_record().len(), n);
    }

    #[test]
    fn eve_log_contents() {
        let mut src = RandomSource::new(5);
        let mut quiet = QuantumLink::new(ChannelModel::ideal(), AdversaryModel::new(EveStrategy::None, 1.0).unwrap());
        quiet.transmit(Pulse::new(0, encode(Bit::ZERO, Bit::ZERO), Round::Raw), &mut src);
        assert!(quiet.eve_record().is_empty());

        let mut fixed = QuantumLink::new(
            ChannelModel::ideal(),
            AdversaryModel::full(EveStrategy::InterceptResendFixed(Basis::Computational)),
        );
        for k in 0..50 {
            let out = fixed.transmit(Pulse::new(k, encode(Bit::ZERO, Bit::ZERO), Round::Raw), &mut src);
            assert_eq!(out.state, Some(encode(Bit::ZERO, Bit::ZERO)));
        }
        let log = fixed.take_eve_record();
        assert_eq!(log.len(), 50);
        assert!(log.iter().all(|r| r.outcome == Bit::ZERO && r.basis == Basis::Computational));
        assert!(fixed.eve_record().is_empty());
    }
}
