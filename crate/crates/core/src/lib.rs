//! Simulation of quantum key distribution from a random seed.
//!
//! The crate models the four BB84 states on a classical simulator and runs
//! three protocols over it:
//!
//! * [`bb84`]: raw key exchange with public sifting, keeping about half of
//!   the pulses;
//! * [`seedqkd`]: a second photon round with seed-derived bases plus XOR
//!   private reconciliation, leaving both parties with four full-length keys;
//! * [`swap`]: a central source running the seed protocol with two
//!   recipients, who end up with a common key.
//!
//! [`harness`] runs seeded Monte Carlo experiments, the worked N = 8 example
//! and the exhaustive per-position completeness check. Everything is
//! deterministic given a master seed.

pub mod bb84;
pub mod bitcore;
pub mod error;
pub mod harness;
pub mod qsim;
pub mod seedqkd;
pub mod session;
pub mod swap;
pub mod transcript;

pub use bitcore::{select, select_strings, Bit, BitSource, BitString, RandomSource, ScriptedBits};
pub use error::{Error, Result};
pub use session::{Role, Roles, SessionConfig, SessionSources};
pub use transcript::{Party, Phase, Protocol, SessionRecord};
