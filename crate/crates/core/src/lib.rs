/*!
Analysis and learning toolkit for contention-based short-packet uplinks that
carry status updates under age-of-information (AoI) and delay constraints.

The crate has three layers that check each other:

* **Analytics** — closed-form link/access models ([`fbc`], [`access`]) feeding
  exponential-domain (Mellin/Chernoff) tail bounds on peak AoI and queueing
  delay, plus an effective-capacity constraint surface ([`snc`]).
* **Simulation** — a deterministic discrete-event simulator of the framed
  random-access protocol ([`sim`]); it is the Monte-Carlo ground truth every
  analytical bound is validated against.
* **Learning** — an MDP wrapper over the simulator ([`env`]) and a from-scratch
  double/dueling deep Q-learning stack ([`drl`]) that allocates subchannels and
  access probabilities.

Everything that draws randomness takes an explicit seed and derives named
sub-streams from it ([`rng`]), so every run — simulation, bound evaluation,
training — is reproducible to the last bit.
*/
// Validation guards are written as `!(x >= 0.0)` on purpose: the negated
// comparison also rejects NaN, which `x < 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod access;
pub mod config;
pub mod drl;
pub mod env;
pub mod fbc;
pub mod rng;
pub mod search;
pub mod sim;
pub mod snc;
pub mod validate;

use thiserror::Error;

/// Crate-wide error type. Numeric routines stay panic-free: parameter-domain
/// problems come back as `Domain`, bad scenario files as `Config`, and
/// protocol/action violations as `Policy`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("policy error: {0}")]
    Policy(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
