//! Exact lower approximations to the time-bounded halting probability.
//!
//! `psum(tf, N)` is the sum of `2^−|p|` over the programs `p` of L with
//! `|p| ≤ N` that halt within `time_bound(tf, p)` steps. Strings outside L
//! never count, even though U halts on them by convention.

mod dyadic;

pub use dyadic::Dyadic;

use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{index_of_total, BitStr, Term};
use crate::error::{Error, Result};
use crate::submachine::{ProgramEval, TimeFn};
use crate::vm::{depth, Ctx, Frame, Machine};

/// Aggregates over every string of one length under one time function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelStats {
    pub level: usize,
    /// Strings of this length that are programs of L.
    pub valid: u64,
    /// Programs that halt within their bound.
    pub halting: u64,
    /// Steps U spends evaluating the whole level (saturating).
    pub cost: u64,
    /// The program with the largest in-time output and that output;
    /// ties go to the shortlex-smaller program.
    pub best: Option<(BitStr, BitStr)>,
}

impl LevelStats {
    fn empty(level: usize) -> Self {
        LevelStats {
            level,
            valid: 0,
            halting: 0,
            cost: 0,
            best: None,
        }
    }

    /// Halting mass `halting / 2^level`.
    pub fn mass(&self) -> Dyadic {
        Dyadic::from_count(self.halting, self.level as u32).expect("count fits the level")
    }

    /// Largest submachine numeric at this level (0 if nothing halts).
    pub fn best_numeric(&self) -> BigUint {
        self.best
            .as_ref()
            .map_or_else(BigUint::default, |(_, o)| index_of_total(o))
    }

    fn add(&mut self, program: &BitStr, eval: Option<ProgramEval>) {
        let Some(eval) = eval else {
            self.cost = self.cost.saturating_add(1);
            return;
        };
        self.valid += 1;
        self.cost = self.cost.saturating_add(eval.cost());
        if let Some((output, _)) = eval.halted {
            self.halting += 1;
            self.offer(program.clone(), output);
        }
    }

    fn offer(&mut self, program: BitStr, output: BitStr) {
        let better = match &self.best {
            None => true,
            Some((p, o)) => output > *o || (output == *o && program < *p),
        };
        if better {
            self.best = Some((program, output));
        }
    }

    fn merge(mut self, other: LevelStats) -> LevelStats {
        self.valid += other.valid;
        self.halting += other.halting;
        self.cost = self.cost.saturating_add(other.cost);
        if let Some((p, o)) = other.best {
            self.offer(p, o);
        }
        self
    }
}

/// `psum(tf, level)` for one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OmegaApprox {
    pub level: usize,
    pub value: Dyadic,
    pub time_fn: String,
}

impl OmegaApprox {
    /// Mantissa bits of the normalized value (empty for 0).
    pub fn mantissa_bits(&self) -> String {
        self.value
            .normalized()
            .mantissa()
            .map(|m| m.to_string())
            .unwrap_or_else(|_| "1".into())
    }
}

/// Rejects level requests that would not be strictly below an active
/// evaluation of the same time function.
pub(crate) fn check_guard(ctx: Ctx<'_>, tf: &BitStr, level: usize) -> Result<()> {
    let mut cur = ctx;
    while let Some(f) = cur {
        if f.tf == tf && level >= f.len {
            return Err(Error::Guard {
                program: f
                    .subject
                    .map_or_else(|| format!("level {} of {tf}", f.len), |s| s.to_string()),
                len: f.len,
                level,
            });
        }
        cur = f.parent;
    }
    Ok(())
}

impl Machine {
    /// Statistics of every `n`-bit string under `tf`.
    pub fn level_stats(&self, tf: &TimeFn, n: usize) -> Result<Arc<LevelStats>> {
        self.install(|| self.level(tf, n, None))
    }

    pub(crate) fn level(&self, tf: &TimeFn, n: usize, ctx: Ctx<'_>) -> Result<Arc<LevelStats>> {
        check_guard(ctx, tf.program(), n)?;
        if n > self.capacity() || n >= 64 {
            return Err(Error::Capacity {
                level: n,
                capacity: self.capacity(),
            });
        }
        if n == 0 {
            return Ok(Arc::new(LevelStats::empty(0)));
        }
        let key = (tf.program().clone(), n);
        if self.config().memo {
            if let Some(hit) = self.levels.get(&key) {
                return Ok(hit.clone());
            }
        }
        let frame = Frame {
            tf: tf.program(),
            len: n,
            subject: None,
            depth: depth(ctx),
            parent: ctx,
        };
        let stats = Arc::new(self.compute_level(tf, n, Some(&frame))?);
        if self.config().memo {
            return Ok(self.levels.entry(key).or_insert(stats).clone());
        }
        Ok(stats)
    }

    fn compute_level(&self, tf: &TimeFn, n: usize, ctx: Ctx<'_>) -> Result<LevelStats> {
        (0..1usize << n)
            .into_par_iter()
            .with_min_len(256)
            .try_fold(
                || LevelStats::empty(n),
                |mut acc, i| {
                    let w = BitStr::from_u64(i as u64, n);
                    let eval = self.eval_valid(tf, &w, ctx)?;
                    acc.add(&w, eval);
                    Ok::<_, Error>(acc)
                },
            )
            .try_reduce(|| LevelStats::empty(n), |a, b| Ok(a.merge(b)))
    }

    /// `None` for strings outside L; they cost one step and never count.
    pub(crate) fn eval_valid(
        &self,
        tf: &TimeFn,
        w: &BitStr,
        ctx: Ctx<'_>,
    ) -> Result<Option<ProgramEval>> {
        let Some(term) = Term::parse(w) else {
            return Ok(None);
        };
        let b = self.bound(tf, w, ctx)?;
        self.eval_term(&term, b, ctx).map(Some)
    }

    /// `psum(tf, N)`: exact halting mass of the programs of size `≤ N`.
    pub fn psum(&self, tf: &TimeFn, n: usize) -> Result<Dyadic> {
        self.install(|| {
            let mut acc = Dyadic::zero();
            for level in 1..=n {
                acc += &self.level(tf, level, None)?.mass();
            }
            Ok(acc)
        })
    }

    /// `psum(tf, 0..=n_max)`.
    pub fn omega_table(&self, tf: &TimeFn, n_max: usize) -> Result<Vec<OmegaApprox>> {
        self.install(|| {
            let mut acc = Dyadic::zero();
            let mut rows = vec![OmegaApprox {
                level: 0,
                value: acc.clone(),
                time_fn: tf.id(),
            }];
            for level in 1..=n_max {
                acc += &self.level(tf, level, None)?.mass();
                rows.push(OmegaApprox {
                    level,
                    value: acc.clone(),
                    time_fn: tf.id(),
                });
            }
            Ok(rows)
        })
    }
}

/// CSV with columns `level,mantissa_bits,exact_fraction`.
pub fn omega_csv(rows: &[OmegaApprox]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "mantissa_bits", "exact_fraction"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.mantissa_bits(),
            r.value.fraction_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct OmegaRow<'a> {
    level: usize,
    mantissa_bits: String,
    exact_fraction: String,
    time_fn: &'a str,
}

/// JSON array with the same columns as [`omega_csv`].
pub fn omega_json(rows: &[OmegaApprox]) -> Result<String> {
    let out: Vec<OmegaRow<'_>> = rows
        .iter()
        .map(|r| OmegaRow {
            level: r.level,
            mantissa_bits: r.mantissa_bits(),
            exact_fraction: r.value.fraction_string(),
            time_fn: &r.time_fn,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&out)?)
}
