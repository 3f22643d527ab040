//! BB and BB⁺ of a submachine, the π′_Ω procedure and sub-algorithmic
//! complexity.
//!
//! `bb(tf, N)` is the largest numeric output of a program of size `≤ N`
//! that halts within its bound, 0 for the empty list at `N = 0`.
//! `bb_plus = bb + 1`.

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{build, index_of_total, BitStr, Op};
use crate::error::{Error, Result};
use crate::omega::Dyadic;
use crate::submachine::TimeFn;
use crate::vm::Machine;

/// One row of the BB table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BBRecord {
    pub level: usize,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb: BigUint,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_plus: BigUint,
    /// Shortest (then shortlex-first) program attaining `bb`.
    #[serde(serialize_with = "serde_opt_bits")]
    pub witness: Option<BitStr>,
}

fn serde_opt_bits<S: serde::Serializer>(b: &Option<BitStr>, s: S) -> Result<S::Ok, S::Error> {
    match b {
        Some(b) => s.serialize_str(&b.to_string()),
        None => s.serialize_none(),
    }
}

/// Result of π′_Ω.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PiOmega {
    /// `bb(tf, level) + 1`, or 0 for `ρ = 0`.
    Value {
        #[serde(serialize_with = "crate::serde_big")]
        value: BigUint,
        level: usize,
    },
    /// No level up to `guard` reached ρ.
    Diverged { guard: usize },
}

/// Result of a shortest-program search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubComplexity {
    Found {
        size: usize,
        #[serde(serialize_with = "crate::serde_bits")]
        program: BitStr,
    },
    NotFoundBelow {
        bound: usize,
    },
}

impl SubComplexity {
    pub fn size(&self) -> Option<usize> {
        match self {
            SubComplexity::Found { size, .. } => Some(*size),
            SubComplexity::NotFoundBelow { .. } => None,
        }
    }
}

impl Machine {
    /// Table of `bb` and `bb_plus` for `0..=n_max`.
    pub fn bb_table(&self, tf: &TimeFn, n_max: usize) -> Result<Vec<BBRecord>> {
        self.install(|| {
            let mut rows = Vec::with_capacity(n_max + 1);
            let mut best: Option<(BigUint, BitStr)> = None;
            for level in 0..=n_max {
                let st = self.level(tf, level, None)?;
                if let Some((p, o)) = &st.best {
                    let v = index_of_total(o);
                    // strictly larger only, so the shortest attaining program stays
                    if best.as_ref().is_none_or(|(b, _)| v > *b) {
                        best = Some((v, p.clone()));
                    }
                }
                let bb = best.as_ref().map_or_else(BigUint::zero, |(v, _)| v.clone());
                rows.push(BBRecord {
                    level,
                    bb_plus: &bb + 1u32,
                    bb,
                    witness: best
                        .as_ref()
                        .filter(|(v, _)| !v.is_zero())
                        .map(|(_, p)| p.clone()),
                });
            }
            Ok(rows)
        })
    }

    /// `BB(N)` of the submachine.
    pub fn bb(&self, tf: &TimeFn, n: usize) -> Result<BigUint> {
        Ok(self.bb_table(tf, n)?.pop().expect("n + 1 rows").bb)
    }

    /// `BB⁺(N) = BB(N) + 1`.
    pub fn bb_plus(&self, tf: &TimeFn, n: usize) -> Result<BigUint> {
        Ok(self.bb(tf, n)? + 1u32)
    }

    /// π′_Ω: scan levels `1..=guard` until `psum ≥ ρ`, then return BB⁺ there.
    pub fn pi_omega(&self, tf: &TimeFn, rho: &Dyadic, guard: usize) -> Result<PiOmega> {
        if rho.is_zero() {
            return Ok(PiOmega::Value {
                value: BigUint::zero(),
                level: 0,
            });
        }
        if *rho >= Dyadic::one() {
            // psum < 1 at every level, so the scan can only exhaust the guard;
            // answering directly avoids enumerating levels the cap forbids.
            return Ok(PiOmega::Diverged { guard });
        }
        self.install(|| {
            let mut acc = Dyadic::zero();
            for level in 1..=guard {
                acc += &self.level(tf, level, None)?.mass();
                if acc >= *rho {
                    return Ok(PiOmega::Value {
                        value: self.bb_plus(tf, level)?,
                        level,
                    });
                }
            }
            Ok(PiOmega::Diverged { guard })
        })
    }

    /// Size of the shortest program whose submachine numeric is `target`.
    pub fn sub_complexity(
        &self,
        tf: &TimeFn,
        target: &BigUint,
        bound: usize,
    ) -> Result<SubComplexity> {
        self.install(|| {
            for n in 1..=bound {
                if n > self.capacity() || n >= 64 {
                    return Err(Error::Capacity {
                        level: n,
                        capacity: self.capacity(),
                    });
                }
                let hit = (0..1usize << n)
                    .into_par_iter()
                    .with_min_len(256)
                    .map(|i| {
                        let w = BitStr::from_u64(i as u64, n);
                        let e = self.eval_valid(tf, &w, None)?;
                        Ok(e.filter(|e| e.sub_output().numeric == *target).map(|_| w))
                    })
                    .find_first(|r: &Result<Option<BitStr>>| !matches!(r, Ok(None)));
                if let Some(r) = hit {
                    let program = r?.expect("filtered to hits");
                    return Ok(SubComplexity::Found { size: n, program });
                }
            }
            Ok(SubComplexity::NotFoundBelow { bound })
        })
    }

    /// Re-evaluates every string of size `≤ n_max` and checks that no
    /// output of size `≤ N` reaches `bb_plus(N)`.
    pub fn incompressibility(&self, tf: &TimeFn, n_max: usize) -> Result<IncompressibilityReport> {
        let table = self.bb_table(tf, n_max)?;
        let mut rows = Vec::with_capacity(n_max + 1);
        let mut running = BigUint::zero();
        let mut programs = 0u64;
        for rec in &table {
            let n = rec.level;
            if n > 0 {
                let (count, max) = self.install(|| {
                    (0..1usize << n)
                        .into_par_iter()
                        .with_min_len(256)
                        .map(|i| {
                            let w = BitStr::from_u64(i as u64, n);
                            let e = self.eval_program(tf, &w, None)?;
                            Ok::<_, Error>(if e.valid {
                                (1u64, e.sub_output().numeric)
                            } else {
                                (0, BigUint::zero())
                            })
                        })
                        .try_reduce(
                            || (0, BigUint::zero()),
                            |a, b| Ok((a.0 + b.0, a.1.max(b.1))),
                        )
                })?;
                programs += count;
                running = running.max(max);
            }
            rows.push(IncompressibilityRow {
                level: n,
                programs,
                max_output: running.clone(),
                bb_plus: rec.bb_plus.clone(),
                ok: running < rec.bb_plus,
            });
        }
        Ok(IncompressibilityReport {
            time_fn: tf.id(),
            ok: rows.iter().all(|r| r.ok),
            rows,
        })
    }

    /// Runs each adversary on `NAT(N)` for `N ≤ horizon` against `bb_plus(N)`.
    pub fn dominance(&self, tf: &TimeFn, horizon: usize) -> Result<DominanceReport> {
        let table = self.bb_table(tf, horizon)?;
        let mut adversaries = Vec::new();
        for adv in Adversary::ALL {
            let mut rows = Vec::with_capacity(horizon + 1);
            for rec in &table {
                let w = adv.applied_to(rec.level);
                let out = self.eval_sub(tf, &w)?.numeric;
                rows.push(DominanceRow {
                    level: rec.level,
                    program_size: w.len(),
                    ok: out < rec.bb_plus,
                    output: out,
                    bb_plus: rec.bb_plus.clone(),
                });
            }
            let tail = rows.iter().rev().take_while(|r| r.ok).count();
            let n0 = (tail > 0).then(|| horizon + 1 - tail);
            adversaries.push(AdversaryReport {
                name: adv.name().into(),
                program: adv.program(),
                n0,
                rows,
            });
        }
        Ok(DominanceReport {
            time_fn: tf.id(),
            horizon,
            ok: adversaries.iter().all(|a| a.n0.is_some()),
            adversaries,
        })
    }
}

/// A fixed family of programs `P` run as `APPLY∘P∘NAT(N)`.
///
/// The argument reaches `P` as the bits of `NAT(N)`'s encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Adversary {
    /// Halts at once with empty output.
    SilentHalt,
    /// Prints `11` whatever the input.
    ConstantEmitter,
    /// Copies its input to the output.
    IdentityEcho,
    /// Prints every input bit twice.
    Doubler,
}

impl Adversary {
    pub const ALL: [Adversary; 4] = [
        Adversary::SilentHalt,
        Adversary::ConstantEmitter,
        Adversary::IdentityEcho,
        Adversary::Doubler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Adversary::SilentHalt => "silent-halt",
            Adversary::ConstantEmitter => "constant-emitter",
            Adversary::IdentityEcho => "identity-echo",
            Adversary::Doubler => "doubler",
        }
    }

    pub fn ops(self) -> Vec<Op> {
        use Op::*;
        match self {
            Adversary::SilentHalt => vec![],
            Adversary::ConstantEmitter => vec![Push1, Out, Push1, Out],
            Adversary::IdentityEcho => vec![Read, Out, Push1, Jnz(3)],
            Adversary::Doubler => vec![Read, Dup, Out, Out, Push1, Jnz(5)],
        }
    }

    /// Encoding of `P` alone.
    pub fn program(self) -> String {
        build::base(&self.ops()).encode().to_string()
    }

    /// Encoding of `APPLY∘P∘NAT(n)`.
    pub fn applied_to(self, n: usize) -> BitStr {
        build::apply(build::base(&self.ops()), build::nat(n as u64)).encode()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IncompressibilityRow {
    pub level: usize,
    /// Programs of size `≤ level` evaluated.
    pub programs: u64,
    #[serde(serialize_with = "crate::serde_big")]
    pub max_output: BigUint,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_plus: BigUint,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncompressibilityReport {
    pub time_fn: String,
    pub ok: bool,
    pub rows: Vec<IncompressibilityRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceRow {
    pub level: usize,
    pub program_size: usize,
    #[serde(serialize_with = "crate::serde_big")]
    pub output: BigUint,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_plus: BigUint,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdversaryReport {
    pub name: String,
    pub program: String,
    /// Smallest `N₀` with strict dominance on all of `N₀..=horizon`.
    pub n0: Option<usize>,
    pub rows: Vec<DominanceRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceReport {
    pub time_fn: String,
    pub horizon: usize,
    pub ok: bool,
    pub adversaries: Vec<AdversaryReport>,
}

/// CSV with columns `N,bb,bb_plus,witness_bits,witness_size`.
pub fn bb_csv(rows: &[BBRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["N", "bb", "bb_plus", "witness_bits", "witness_size"])?;
    for r in rows {
        let (bits, size) = r
            .witness
            .as_ref()
            .map_or((String::new(), String::new()), |b| {
                (b.to_string(), b.len().to_string())
            });
        w.write_record([
            r.level.to_string(),
            r.bb.to_string(),
            r.bb_plus.to_string(),
            bits,
            size,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct BBRow<'a> {
    #[serde(rename = "N")]
    n: usize,
    bb: String,
    bb_plus: String,
    witness_bits: Option<String>,
    witness_size: Option<usize>,
    time_fn: &'a str,
}

/// JSON array with the same columns as [`bb_csv`].
pub fn bb_json(tf: &TimeFn, rows: &[BBRecord]) -> Result<String> {
    let id = tf.id();
    let out: Vec<BBRow<'_>> = rows
        .iter()
        .map(|r| BBRow {
            n: r.level,
            bb: r.bb.to_string(),
            bb_plus: r.bb_plus.to_string(),
            witness_bits: r.witness.as_ref().map(|b| b.to_string()),
            witness_size: r.witness.as_ref().map(|b| b.len()),
            time_fn: &id,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&out)?)
}
