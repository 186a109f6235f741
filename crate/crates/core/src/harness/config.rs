use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qsim::{AdversaryModel, Basis, ChannelModel, EveStrategy};
use crate::session::{Role, SessionConfig, DEFAULT_ABORT_THRESHOLD, DEFAULT_SACRIFICE_FRACTION};
use crate::swap::SwapConfig;
use crate::transcript::Protocol;

/// Command-line spelling of an adversary strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EveChoice {
    None,
    InterceptResendRandom,
    InterceptResendFixed0,
    InterceptResendFixed1,
}

impl EveChoice {
    pub fn strategy(self) -> EveStrategy {
        match self {
            EveChoice::None => EveStrategy::None,
            EveChoice::InterceptResendRandom => EveStrategy::InterceptResendRandom,
            EveChoice::InterceptResendFixed0 => EveStrategy::InterceptResendFixed(Basis::Computational),
            EveChoice::InterceptResendFixed1 => EveStrategy::InterceptResendFixed(Basis::Diagonal),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EveChoice::None => "none",
            EveChoice::InterceptResendRandom => "ir-random",
            EveChoice::InterceptResendFixed0 => "ir-fixed0",
            EveChoice::InterceptResendFixed1 => "ir-fixed1",
        }
    }
}

impl fmt::Display for EveChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EveChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(EveChoice::None),
            "ir-random" => Ok(EveChoice::InterceptResendRandom),
            "ir-fixed0" => Ok(EveChoice::InterceptResendFixed0),
            "ir-fixed1" => Ok(EveChoice::InterceptResendFixed1),
            other => Err(format!(
                "unknown adversary {other:?} (expected none, ir-random, ir-fixed0 or ir-fixed1)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub trials: usize,
    pub flip: f64,
    pub loss: f64,
    pub eve: EveChoice,
    pub eve_fraction: f64,
    pub sacrifice_fraction: f64,
    pub abort_threshold: f64,
    pub master_seed: u64,
    pub reuse_states: bool,
    pub seed_publisher: Role,
    /// Structured (JSON) report destination.
    pub output_path: Option<PathBuf>,
    /// Directory receiving one transcript file per trial.
    pub transcript_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol, n: usize, trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            protocol,
            n,
            trials,
            flip: 0.0,
            loss: 0.0,
            eve: EveChoice::None,
            eve_fraction: 1.0,
            sacrifice_fraction: DEFAULT_SACRIFICE_FRACTION,
            abort_threshold: DEFAULT_ABORT_THRESHOLD,
            master_seed,
            reuse_states: false,
            seed_publisher: Role::Sender,
            output_path: None,
            transcript_dir: None,
        }
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.flip, self.loss)
    }

    pub fn adversary(&self) -> Result<AdversaryModel> {
        AdversaryModel::new(self.eve.strategy(), self.eve_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.reuse_states && self.protocol != Protocol::Swap {
            return Err(Error::Config("--reuse-states only applies to the swap protocol".into()));
        }
        self.session()?.validate()
    }

    pub fn session(&self) -> Result<SessionConfig> {
        Ok(SessionConfig {
            n: self.n,
            channel: self.channel()?,
            adversary: self.adversary()?,
            sacrifice_fraction: self.sacrifice_fraction,
            abort_threshold: self.abort_threshold,
            seed_publisher: self.seed_publisher,
        })
    }

    /// Both swap legs share the same channel and adversary settings.
    pub fn swap(&self) -> Result<SwapConfig> {
        let (channel, adversary) = (self.channel()?, self.adversary()?);
        Ok(SwapConfig {
            n: self.n,
            channel_a: channel,
            adversary_a: adversary,
            channel_b: channel,
            adversary_b: adversary,
            sacrifice_fraction: self.sacrifice_fraction,
            abort_threshold: self.abort_threshold,
            reuse_states: self.reuse_states,
        })
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            protocol: self.protocol.as_str().to_owned(),
            n: self.n,
            trials: self.trials,
            flip: self.flip,
            loss: self.loss,
            eve: self.eve.as_str().to_owned(),
            eve_fraction: self.eve_fraction,
            sacrifice: self.sacrifice_fraction,
            threshold: self.abort_threshold,
            seed: self.master_seed,
            reuse_states: self.reuse_states,
            seed_publisher: match self.seed_publisher {
                Role::Sender => "alice".to_owned(),
                Role::Receiver => "bob".to_owned(),
            },
            rng: crate::bitcore::RandomSource::ALGORITHM.to_owned(),
        }
    }
}

/// Configuration as it appears in the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub protocol: String,
    pub n: usize,
    pub trials: usize,
    pub flip: f64,
    pub loss: f64,
    pub eve: String,
    pub eve_fraction: f64,
    pub sacrifice: f64,
    pub threshold: f64,
    pub seed: u64,
    pub reuse_states: bool,
    pub seed_publisher: String,
    pub rng: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eve_tokens_round_trip() {
        for choice in [
            EveChoice::None,
            EveChoice::InterceptResendRandom,
            EveChoice::InterceptResendFixed0,
            EveChoice::InterceptResendFixed1,
        ] {
            assert_eq!(choice.as_str().parse::<EveChoice>().unwrap(), choice);
        }
        assert!("mitm".parse::<EveChoice>().is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::new(Protocol::Seed, 10, 1, 0);
        assert!(ok.validate().is_ok());

        let mut bad = ok.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.n = 0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.flip = 1.2;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.sacrifice_fraction = -0.5;
        assert!(bad.validate().is_err());

        let mut bad = ok;
        bad.reuse_states = true;
        assert!(bad.validate().is_err());
    }
}
