//! The universal machine U.
//!
//! [`Machine`] runs programs of L with an explicit step budget. Base
//! programs cost one step per executed instruction. The reserved heads
//! follow a fixed cost schedule:
//!
//! | program                | steps                                            |
//! |------------------------|--------------------------------------------------|
//! | invalid string         | 1, output `0`                                    |
//! | EMPTY                  | 1, empty output                                  |
//! | NAT n                  | 1, output `l_n`                                  |
//! | APPLY f x              | 1 + steps of f on input `x ++ input`             |
//! | time function on input | 1 + bound cost, output `l_bound`                 |
//! | T w                    | 1 + steps of w, output `l_steps`                 |
//! | P_SM tf w              | 1 + bound cost + min(steps of w, bound)          |
//! | P_SIGMA tf N           | 1 + Σ level cost(n), n = 1..N                    |
//! | PI_OMEGA tf ρ          | 1 if ρ = 0, else 1 + Σ (level cost(n) + 1), n = 1..k |
//!
//! Bound costs: POLY costs `k + 2`. P* costs `2 + cost(inner)`, plus the
//! certification scan when its input is a π′_Ω form (1 when ρ = 0, else
//! Σ (level cost(n) + 1) over the scanned levels), plus `1 + s + 1` when
//! the scan certifies ρ, where `s` is the form's own step count. P** costs
//! one more than the P* it unfolds to.
//!
//! The cost of a level `n` is the work of evaluating every `n`-bit string
//! under the time function: 1 per string, plus for each program its bound
//! cost and `min(steps, bound)`.
//!
//! A level's cost is at least `2^n`, so a budgeted π′_Ω or P_SIGMA run
//! stops before requesting a level it could not pay for.

mod base;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use num_bigint::BigUint;

use crate::codec::{encode_rho, number_string, BitStr, Term};
use crate::diagonal::FormEval;
use crate::error::{Error, Result};
use crate::omega::{Dyadic, LevelStats};
use crate::submachine::{SubOutput, TimeFn};

/// The cost schedule above in a compact, hashable form.
pub const COST_SCHEDULE: &str = "\
invalid 1
empty 1
nat 1
apply 1+f
tf_term 1+bound_cost
t 1+steps
psm 1+bound_cost+min(steps,bound)
psigma 1+sum(level_cost)
pi 1|1+sum(level_cost+1)
poly_cost k+2
star_cost 2+inner+scan+certified(1+s+1)
pss_cost 1+star
level_cost 1/string+bound_cost+min(steps,bound)
";

/// Default largest program size a machine will enumerate.
pub const DEFAULT_CAPACITY: usize = 26;

/// How many steps a run may take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepBudget {
    Unbounded,
    Fuel(u64),
}

impl StepBudget {
    fn fuel(self) -> u64 {
        match self {
            StepBudget::Unbounded => u64::MAX,
            StepBudget::Fuel(f) => f,
        }
    }
}

/// Result of a budgeted run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RunOutcome {
    Halted { output: BitStr, steps: u64 },
    Exhausted { fuel: u64 },
}

impl RunOutcome {
    pub fn is_halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

/// `run_steps` result: the step count, or divergence up to the guard.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Steps {
    Halted(u64),
    DivergedUpToGuard(u64),
}

/// Internal run result; `Exhausted` means more than the given fuel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Exec {
    Halted { output: BitStr, steps: u64 },
    Exhausted,
}

impl Exec {
    fn plus(self, extra: u64) -> Exec {
        match self {
            Exec::Halted { output, steps } => Exec::Halted {
                output,
                steps: steps.saturating_add(extra),
            },
            Exec::Exhausted => Exec::Exhausted,
        }
    }
}

fn halted(output: BitStr, steps: u64) -> Result<Exec> {
    Ok(Exec::Halted { output, steps })
}

/// One active evaluation that constrains which levels may be requested.
pub(crate) struct Frame<'a> {
    pub tf: &'a BitStr,
    /// Levels `>= len` of `tf` are off limits inside this frame.
    pub len: usize,
    /// The π′_Ω form being certified, for diagonal frames.
    pub subject: Option<&'a BitStr>,
    /// Number of certification frames on the chain, this one included.
    pub depth: usize,
    pub parent: Option<&'a Frame<'a>>,
}

pub(crate) type Ctx<'a> = Option<&'a Frame<'a>>;

pub(crate) fn depth(ctx: Ctx<'_>) -> usize {
    ctx.map_or(0, |f| f.depth)
}

/// Machine settings.
#[derive(Clone, Debug)]
pub struct MachineConfig {
    /// Largest level (program size) the machine will enumerate.
    pub capacity: usize,
    /// Cache level statistics and form certifications.
    pub memo: bool,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            capacity: DEFAULT_CAPACITY,
            memo: true,
            workers: 0,
        }
    }
}

/// The universal machine with its shared memo tables.
pub struct Machine {
    config: MachineConfig,
    pool: rayon::ThreadPool,
    pub(crate) levels: DashMap<(BitStr, usize), Arc<LevelStats>>,
    pub(crate) forms: DashMap<(BitStr, BitStr), FormEval>,
    max_depth: AtomicUsize,
}

impl Machine {
    pub fn new(config: MachineConfig) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        Ok(Machine {
            config,
            pool,
            levels: DashMap::new(),
            forms: DashMap::new(),
            max_depth: AtomicUsize::new(0),
        })
    }

    /// A memoizing machine on all cores.
    pub fn with_defaults() -> Self {
        Self::new(MachineConfig::default()).expect("default thread pool")
    }

    /// A single-threaded machine without memo tables.
    pub fn oracle(capacity: usize) -> Self {
        Self::new(MachineConfig {
            capacity,
            memo: false,
            workers: 1,
        })
        .expect("one-thread pool")
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Deepest chain of nested diagonal certifications seen so far.
    pub fn max_depth(&self) -> usize {
        self.max_depth.load(Ordering::Relaxed)
    }

    pub fn reset_max_depth(&self) {
        self.max_depth.store(0, Ordering::Relaxed);
    }

    pub(crate) fn note_depth(&self, d: usize) {
        self.max_depth.fetch_max(d, Ordering::Relaxed);
    }

    /// Drops every memo entry.
    pub fn clear_memo(&self) {
        self.levels.clear();
        self.forms.clear();
    }

    /// Runs `f` on this machine's worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// `U(w)` on empty input.
    pub fn run(&self, w: &BitStr, budget: StepBudget) -> Result<RunOutcome> {
        self.run_with_input(w, &BitStr::new(), budget)
    }

    pub fn run_with_input(
        &self,
        w: &BitStr,
        input: &BitStr,
        budget: StepBudget,
    ) -> Result<RunOutcome> {
        let fuel = budget.fuel();
        let exec = self.install(|| self.exec_bits(w, input, fuel, None))?;
        Ok(match exec {
            Exec::Halted { output, steps } => RunOutcome::Halted { output, steps },
            Exec::Exhausted => RunOutcome::Exhausted { fuel },
        })
    }

    /// Step count of `U(w)`, or divergence up to `guard` steps.
    pub fn run_steps(&self, w: &BitStr, guard: u64) -> Result<Steps> {
        Ok(match self.run(w, StepBudget::Fuel(guard))? {
            RunOutcome::Halted { steps, .. } => Steps::Halted(steps),
            RunOutcome::Exhausted { fuel } => Steps::DivergedUpToGuard(fuel),
        })
    }

    /// Runs `w` and records one line per step: `step`, opcode or head,
    /// stack depth (tab separated). Heads other than base programs show a
    /// single line.
    pub fn trace(&self, w: &BitStr, budget: StepBudget) -> Result<(RunOutcome, Vec<String>)> {
        let fuel = budget.fuel();
        let mut lines = Vec::new();
        let exec = match Term::parse(w) {
            Some(Term::Base(ops)) if fuel > 0 => {
                base::run(&ops, &BitStr::new(), fuel, Some(&mut lines))
            }
            other => {
                let name = match &other {
                    None => "INVALID".to_string(),
                    Some(t) => t.head().map_or("BASE", |h| h.name()).to_string(),
                };
                lines.push(format!("1\t{name}\t0"));
                self.install(|| self.exec_bits(w, &BitStr::new(), fuel, None))?
            }
        };
        let outcome = match exec {
            Exec::Halted { output, steps } => RunOutcome::Halted { output, steps },
            Exec::Exhausted => RunOutcome::Exhausted { fuel },
        };
        Ok((outcome, lines))
    }

    pub(crate) fn exec_bits(
        &self,
        w: &BitStr,
        input: &BitStr,
        fuel: u64,
        ctx: Ctx<'_>,
    ) -> Result<Exec> {
        if fuel == 0 {
            return Ok(Exec::Exhausted);
        }
        match Term::parse(w) {
            Some(t) => self.exec(&t, input, fuel, ctx),
            None => halted(BitStr::from_u64(0, 1), 1),
        }
    }

    pub(crate) fn exec(
        &self,
        term: &Term,
        input: &BitStr,
        fuel: u64,
        ctx: Ctx<'_>,
    ) -> Result<Exec> {
        if fuel == 0 {
            return Ok(Exec::Exhausted);
        }
        match term {
            Term::Empty => halted(BitStr::new(), 1),
            Term::Base(ops) => Ok(base::run(ops, input, fuel, None)),
            Term::Nat(n) => halted(number_string(&BigUint::from(*n)), 1),
            Term::Apply(f, x) => {
                let mut arg = x.encode();
                arg.extend_from(input);
                Ok(self.exec(f, &arg, fuel - 1, ctx)?.plus(1))
            }
            Term::Poly { .. } | Term::PStarStar(_) | Term::PStar(..) => {
                let tf = TimeFn::from_term(term).expect("time-function term");
                let b = self.bound(&tf, input, ctx)?;
                let steps = b.cost.saturating_add(1);
                if steps > fuel {
                    return Ok(Exec::Exhausted);
                }
                let value = self.bound_exact(&tf, input, ctx)?;
                halted(number_string(&value), steps)
            }
            Term::T(w) => Ok(match self.exec(w, input, fuel - 1, ctx)? {
                Exec::Halted { steps, .. } => Exec::Halted {
                    output: number_string(&BigUint::from(steps)),
                    steps: steps + 1,
                },
                Exec::Exhausted => Exec::Exhausted,
            }),
            Term::Psm(tf, w) => {
                let tf = TimeFn::from_term(tf).expect("time-function term");
                let b = self.bound(&tf, &w.encode(), ctx)?;
                let head = b.cost.saturating_add(1);
                if head > fuel {
                    return Ok(Exec::Exhausted);
                }
                let avail = fuel - head;
                match self.exec(w, &BitStr::new(), b.value.min(avail), ctx)? {
                    Exec::Halted { output, steps } => {
                        halted(SubOutput::halted(&output).value, head + steps)
                    }
                    Exec::Exhausted if b.value <= avail => {
                        halted(SubOutput::diverged().value, head + b.value)
                    }
                    Exec::Exhausted => Ok(Exec::Exhausted),
                }
            }
            Term::PSigma(tf, n) => {
                let tf = TimeFn::from_term(tf).expect("time-function term");
                let mut steps: u64 = 1;
                let mut acc = Dyadic::zero();
                for level in 1..=*n {
                    if steps.saturating_add(level_cost_floor(level)) > fuel {
                        return Ok(Exec::Exhausted);
                    }
                    let st = self.level(&tf, level as usize, ctx)?;
                    steps = steps.saturating_add(st.cost);
                    if steps > fuel {
                        return Ok(Exec::Exhausted);
                    }
                    acc += &st.mass();
                }
                halted(encode_rho(&acc.normalized())?, steps)
            }
            Term::Pi { tf, rho } => {
                let rho = rho.value();
                if rho.is_zero() {
                    return halted(BitStr::new(), 1);
                }
                let tf = TimeFn::from_term(tf).expect("time-function term");
                let mut steps: u64 = 1;
                let mut acc = Dyadic::zero();
                let mut best = BigUint::default();
                for level in 1u64.. {
                    if steps
                        .saturating_add(level_cost_floor(level))
                        .saturating_add(1)
                        > fuel
                    {
                        return Ok(Exec::Exhausted);
                    }
                    let st = self.level(&tf, level as usize, ctx)?;
                    steps = steps.saturating_add(st.cost).saturating_add(1);
                    if steps > fuel {
                        return Ok(Exec::Exhausted);
                    }
                    acc += &st.mass();
                    best = best.max(st.best_numeric());
                    if acc >= rho {
                        return halted(number_string(&(best + 1u32)), steps);
                    }
                }
                unreachable!("the level loop only exits by returning")
            }
        }
    }
}

/// Every level costs at least one step per string.
fn level_cost_floor(level: u64) -> u64 {
    if level >= 64 {
        u64::MAX
    } else {
        1u64 << level
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::build::*;
    use crate::codec::Op;

    fn m() -> Machine {
        Machine::new(MachineConfig {
            capacity: 12,
            memo: true,
            workers: 2,
        })
        .unwrap()
    }

    fn out(o: RunOutcome) -> (String, u64) {
        match o {
            RunOutcome::Halted { output, steps } => (output.to_string(), steps),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn literals_and_invalid_strings() {
        let m = m();
        assert_eq!(
            out(m.run(&nat(3).encode(), StepBudget::Unbounded).unwrap()),
            ("00".into(), 1)
        );
        assert_eq!(
            out(m.run(&"1".parse().unwrap(), StepBudget::Unbounded).unwrap()),
            ("0".into(), 1)
        );
        assert_eq!(
            out(m.run(&Term::Empty.encode(), StepBudget::Unbounded).unwrap()),
            ("".into(), 1)
        );
        for w in ["", "0", "1", "1101"] {
            assert_eq!(
                m.run(&w.parse().unwrap(), StepBudget::Fuel(0)).unwrap(),
                RunOutcome::Exhausted { fuel: 0 }
            );
        }
    }

    #[test]
    fn loop_exhausts_and_t_counts_steps() {
        let m = m();
        let lp = base(&[Op::Push1, Op::Jnz(1)]).encode();
        assert_eq!(
            m.run(&lp, StepBudget::Fuel(1_000_000)).unwrap(),
            RunOutcome::Exhausted { fuel: 1_000_000 }
        );
        assert_eq!(
            m.run_steps(&t(base(&[Op::Push1, Op::Jnz(1)])).encode(), 100_000)
                .unwrap(),
            Steps::DivergedUpToGuard(100_000)
        );
        let w = base(&[Op::Push1, Op::Out]);
        assert_eq!(m.run_steps(&w.encode(), 100).unwrap(), Steps::Halted(3));
        let (o, s) = out(m.run(&t(w).encode(), StepBudget::Unbounded).unwrap());
        assert_eq!((o.as_str(), s), ("00", 4));
    }

    #[test]
    fn apply_passes_the_argument_as_input() {
        let m = m();
        let echo = base(&[Op::Read, Op::Out, Op::Push1, Op::Jnz(3)]);
        let prog = apply(echo, nat(2));
        let (o, _) = out(m.run(&prog.encode(), StepBudget::Unbounded).unwrap());
        assert_eq!(o, nat(2).encode().to_string());
    }

    #[test]
    fn poly_as_a_program_reports_its_bound() {
        let m = m();
        // poly:2,1 on the 4-bit input NAT(0): 2·5 + 2 = 12
        let prog = apply(poly(2, 1), nat(0));
        let (o, s) = out(m.run(&prog.encode(), StepBudget::Unbounded).unwrap());
        assert_eq!(o, number_string(&BigUint::from(12u32)).to_string());
        assert_eq!(s, 1 + 1 + 3);
    }

    #[test]
    fn pi_omega_zero_halts_at_once() {
        let m = m();
        let prog = pi(poly(2, 1), BitStr::new());
        assert_eq!(
            out(m.run(&prog.encode(), StepBudget::Unbounded).unwrap()),
            ("".into(), 1)
        );
    }

    #[test]
    fn trace_lines() {
        let m = m();
        let (o, lines) = m
            .trace(&base(&[Op::Push1, Op::Out]).encode(), StepBudget::Unbounded)
            .unwrap();
        assert!(o.is_halted());
        assert_eq!(lines, ["1\tPUSH1\t0", "2\tOUT\t1", "3\tHALT\t0"]);
    }
}
