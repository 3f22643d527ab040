//! Turing submachines: U wrapped by a total time bound.

mod timefn;

pub use timefn::{Family, TimeFn};

use num_bigint::BigUint;
use serde::Serialize;

use crate::codec::{index_of_total, nth_string_big, BitStr, Term};
use crate::error::Result;
use crate::vm::{Ctx, Exec, Machine};

/// Output of the submachine: `l_{k+1}` when `U(w) = l_k` in time, else `l_1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SubOutput {
    #[serde(serialize_with = "crate::serde_bits")]
    pub value: BitStr,
    /// `index_of(value) − 1`, i.e. `k` (0 when the run did not halt in time).
    #[serde(serialize_with = "crate::serde_big")]
    pub numeric: BigUint,
}

impl SubOutput {
    pub fn halted(output: &BitStr) -> Self {
        let k = index_of_total(output);
        SubOutput {
            value: nth_string_big(&(&k + 1u32)).expect("positive index"),
            numeric: k,
        }
    }

    pub fn diverged() -> Self {
        SubOutput {
            value: BitStr::from_u64(0, 1),
            numeric: BigUint::default(),
        }
    }
}

/// A time bound together with the steps spent computing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct BoundEval {
    /// The bound, saturated to `u64`.
    pub value: u64,
    pub cost: u64,
}

/// Everything the submachine does with one string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramEval {
    pub valid: bool,
    pub bound: u64,
    pub bound_cost: u64,
    /// `Some((output, steps))` when the program halted within its bound.
    pub halted: Option<(BitStr, u64)>,
}

impl ProgramEval {
    /// Steps this evaluation contributes to a level's cost.
    pub fn cost(&self) -> u64 {
        if !self.valid {
            return 1;
        }
        let used = self.halted.as_ref().map_or(self.bound, |(_, s)| *s);
        1u64.saturating_add(self.bound_cost).saturating_add(used)
    }

    pub fn sub_output(&self) -> SubOutput {
        match &self.halted {
            Some((o, _)) => SubOutput::halted(o),
            None => SubOutput::diverged(),
        }
    }
}

impl Machine {
    /// The time bound `tf` assigns to `w`.
    pub fn time_bound(&self, tf: &TimeFn, w: &BitStr) -> Result<u64> {
        Ok(self.install(|| self.bound(tf, w, None))?.value)
    }

    /// Steps U spends computing `time_bound(tf, w)`.
    pub fn time_bound_cost(&self, tf: &TimeFn, w: &BitStr) -> Result<u64> {
        Ok(self.install(|| self.bound(tf, w, None))?.cost)
    }

    /// The exact time bound, without saturation.
    pub fn time_bound_exact(&self, tf: &TimeFn, w: &BitStr) -> Result<BigUint> {
        self.install(|| self.bound_exact(tf, w, None))
    }

    pub(crate) fn bound(&self, tf: &TimeFn, w: &BitStr, ctx: Ctx<'_>) -> Result<BoundEval> {
        match tf.family() {
            Family::Poly { c, k } => Ok(BoundEval {
                value: TimeFn::poly_bound(*c, *k, w.len()),
                cost: *k as u64 + 2,
            }),
            Family::Diagonal(inner) => {
                let b = self.star_bound(tf, inner, w, ctx)?;
                Ok(BoundEval {
                    cost: b.cost.saturating_add(1),
                    ..b
                })
            }
            Family::Star { outer, inner } => self.star_bound(outer, inner, w, ctx),
        }
    }

    pub(crate) fn bound_exact(&self, tf: &TimeFn, w: &BitStr, ctx: Ctx<'_>) -> Result<BigUint> {
        match tf.family() {
            Family::Poly { c, k } => Ok(TimeFn::poly_bound_exact(*c, *k, w.len())),
            Family::Diagonal(inner) => self.star_bound_exact(tf, inner, w, ctx),
            Family::Star { outer, inner } => self.star_bound_exact(outer, inner, w, ctx),
        }
    }

    /// `U_tf(w)` as a submachine output.
    pub fn eval_sub(&self, tf: &TimeFn, w: &BitStr) -> Result<SubOutput> {
        Ok(self.evaluate(tf, w)?.sub_output())
    }

    /// Bound, validity and budgeted run of `w` under `tf`.
    pub fn evaluate(&self, tf: &TimeFn, w: &BitStr) -> Result<ProgramEval> {
        self.install(|| self.eval_program(tf, w, None))
    }

    pub(crate) fn eval_program(
        &self,
        tf: &TimeFn,
        w: &BitStr,
        ctx: Ctx<'_>,
    ) -> Result<ProgramEval> {
        let b = self.bound(tf, w, ctx)?;
        let Some(term) = Term::parse(w) else {
            // U halts on invalid strings with l_1 in one step
            let halted = (b.value >= 1).then(|| (BitStr::from_u64(0, 1), 1));
            return Ok(ProgramEval {
                valid: false,
                bound: b.value,
                bound_cost: b.cost,
                halted,
            });
        };
        self.eval_term(&term, b, ctx)
    }

    pub(crate) fn eval_term(&self, term: &Term, b: BoundEval, ctx: Ctx<'_>) -> Result<ProgramEval> {
        let halted = match self.exec(term, &BitStr::new(), b.value, ctx)? {
            Exec::Halted { output, steps } => Some((output, steps)),
            Exec::Exhausted => None,
        };
        Ok(ProgramEval {
            valid: true,
            bound: b.value,
            bound_cost: b.cost,
            halted,
        })
    }
}
