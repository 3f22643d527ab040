//! A desk-scale laboratory for time-bounded submachines: a prefix-free
//! universal language, exact time-bounded halting probabilities, BB⁺ and the
//! self-referential diagonal time function.

pub mod beaver;
pub mod cli;
pub mod codec;
pub mod diagonal;
pub mod enumerator;
pub mod error;
pub mod omega;
pub mod submachine;
pub mod vm;

pub use beaver::{Adversary, BBRecord, PiOmega, SubComplexity};
pub use codec::{BitStr, Term};
pub use error::{Error, Result};
pub use omega::{Dyadic, LevelStats, OmegaApprox};
pub use submachine::{SubOutput, TimeFn};
pub use vm::{Machine, MachineConfig, RunOutcome, StepBudget, Steps};

pub(crate) fn serde_bits<S: serde::Serializer>(b: &BitStr, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

pub(crate) fn serde_big<S: serde::Serializer>(
    v: &num_bigint::BigUint,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}
