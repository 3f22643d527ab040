//! The diagonal time functions P* and P**.
//!
//! `P*∘outer∘inner` gives a string `w` the time bound
//!
//! * `run_steps(w)` when `w` is a π′_Ω form `PI outer 0^m 1 ρ`, the scan
//!   `psum(outer, n) ≥ ρ` succeeds for some `n ≤ |w| − 1`, and
//!   `run_steps(w)` is strictly larger than `inner`'s bound;
//! * `inner`'s bound otherwise.
//!
//! `P**∘inner` is the fixed point where `outer` is the diagonal itself.
//! Certifying `w` only needs levels below `|w|`, so the recursion is
//! well-founded; every certification pushes a guard frame and any request
//! for a level `≥ |w|` of the same time function is reported as
//! [`Error::Guard`](crate::Error::Guard).

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{build, encode_rho_padded, BitReader, BitStr, Head, RhoBlock};
use crate::error::{Error, Result};
use crate::omega::Dyadic;
use crate::submachine::{BoundEval, TimeFn};
use crate::vm::{depth, Ctx, Frame, Machine};

/// Outcome of the certification scan for one form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct FormEval {
    pub certified: bool,
    /// First level whose psum reaches ρ (0 when ρ = 0).
    pub level: usize,
    pub scan_cost: u64,
    /// `run_steps(w)` when certified.
    pub steps: u64,
}

/// Whether `w` is `PI_OMEGA∘tf∘0^m 1 ρ` for the given time function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormMatch {
    pub matched: bool,
    pub rho: Option<Dyadic>,
    pub rho_block_width: usize,
}

/// The ρ block of `w` if `w` is a π′_Ω form over `tf`.
pub(crate) fn form_rho(tf: &TimeFn, w: &BitStr) -> Option<RhoBlock> {
    let head = Head::Pi.codeword();
    let prog = tf.program();
    if w.len() < head.len() + prog.len() + 1 {
        return None;
    }
    let mut r = BitReader::new(w);
    for ch in head.bytes() {
        if r.read()? != (ch == b'1') {
            return None;
        }
    }
    for b in prog.iter() {
        if r.read()? != b {
            return None;
        }
    }
    let block = RhoBlock::read(&mut r)?;
    (r.remaining() == 0).then_some(block)
}

/// Builds the π′_Ω form over `tf` with the given mantissa.
pub fn pi_form(tf: &TimeFn, mantissa: &BitStr) -> BitStr {
    build::pi(tf.term(), mantissa.clone()).encode()
}

impl Machine {
    pub(crate) fn star_bound(
        &self,
        outer: &TimeFn,
        inner: &TimeFn,
        w: &BitStr,
        ctx: Ctx<'_>,
    ) -> Result<BoundEval> {
        let ib = self.bound(inner, w, ctx)?;
        let mut out = BoundEval {
            value: ib.value,
            cost: ib.cost.saturating_add(2),
        };
        if let Some(rho) = form_rho(outer, w) {
            let f = self.certify(outer, w, &rho, ctx)?;
            out.cost = out.cost.saturating_add(f.scan_cost);
            if f.certified {
                out.cost = out.cost.saturating_add(f.steps).saturating_add(2);
                if f.steps > ib.value {
                    out.value = f.steps;
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn star_bound_exact(
        &self,
        outer: &TimeFn,
        inner: &TimeFn,
        w: &BitStr,
        ctx: Ctx<'_>,
    ) -> Result<BigUint> {
        let ib = self.bound_exact(inner, w, ctx)?;
        if let Some(rho) = form_rho(outer, w) {
            let f = self.certify(outer, w, &rho, ctx)?;
            if f.certified && BigUint::from(f.steps) > ib {
                return Ok(BigUint::from(f.steps));
            }
        }
        Ok(ib)
    }

    fn certify(
        &self,
        outer: &TimeFn,
        w: &BitStr,
        rho: &RhoBlock,
        ctx: Ctx<'_>,
    ) -> Result<FormEval> {
        let key = (outer.program().clone(), w.clone());
        if self.config().memo {
            if let Some(hit) = self.forms.get(&key) {
                return Ok(*hit);
            }
        }
        let frame = Frame {
            tf: outer.program(),
            len: w.len(),
            subject: Some(w),
            depth: depth(ctx) + 1,
            parent: ctx,
        };
        self.note_depth(frame.depth);
        let rho = rho.value();
        let eval = if rho.is_zero() {
            FormEval {
                certified: true,
                level: 0,
                scan_cost: 1,
                steps: 1,
            }
        } else {
            let mut acc = Dyadic::zero();
            let mut scan: u64 = 0;
            let mut found = None;
            for n in 1..w.len() {
                let st = self.level(outer, n, Some(&frame))?;
                acc += &st.mass();
                scan = scan.saturating_add(st.cost).saturating_add(1);
                if acc >= rho {
                    found = Some(n);
                    break;
                }
            }
            FormEval {
                certified: found.is_some(),
                level: found.unwrap_or(0),
                scan_cost: scan,
                steps: if found.is_some() {
                    scan.saturating_add(1)
                } else {
                    0
                },
            }
        };
        if self.config().memo {
            self.forms.insert(key, eval);
        }
        Ok(eval)
    }

    /// The P*∘outer∘inner time bound of `w`.
    pub fn p_star_time(&self, outer: &TimeFn, inner: &TimeFn, w: &BitStr) -> Result<u64> {
        Ok(self
            .install(|| self.star_bound(outer, inner, w, None))?
            .value)
    }

    /// The P**∘inner time bound of `w`.
    pub fn p_star_star_time(&self, inner: &TimeFn, w: &BitStr) -> Result<u64> {
        self.time_bound(&TimeFn::diagonal(inner.clone()), w)
    }

    /// Matches `w` against the π′_Ω form over `tf`.
    pub fn form_match(&self, tf: &TimeFn, w: &BitStr) -> FormMatch {
        match form_rho(tf, w) {
            Some(b) => FormMatch {
                matched: true,
                rho: Some(b.value()),
                rho_block_width: b.width(),
            },
            None => FormMatch {
                matched: false,
                rho: None,
                rho_block_width: 0,
            },
        }
    }

    /// Certification details for a π′_Ω form over `outer`: `(certified,
    /// level, run_steps)`; `None` if `w` is not such a form.
    pub fn certification(&self, outer: &TimeFn, w: &BitStr) -> Result<Option<(bool, usize, u64)>> {
        let Some(rho) = form_rho(outer, w) else {
            return Ok(None);
        };
        let f = self.install(|| self.certify(outer, w, &rho, None))?;
        Ok(Some((f.certified, f.level, f.steps)))
    }

    /// Evaluates every string up to `horizon` bits under `diag:inner`, and
    /// every π′_Ω form over it with a mantissa of at most `form_width` bits.
    pub fn verify_totality(
        &self,
        inner: &TimeFn,
        horizon: usize,
        form_width: usize,
    ) -> Result<TotalityReport> {
        let diag = TimeFn::diagonal(inner.clone());
        self.reset_max_depth();
        let mut report = TotalityReport {
            time_fn: diag.id(),
            horizon,
            form_width,
            ..TotalityReport::default()
        };
        for n in 1..=horizon {
            if n >= 64 {
                return Err(Error::Capacity {
                    level: n,
                    capacity: self.capacity(),
                });
            }
            let part = self.install(|| {
                (0..1usize << n)
                    .into_par_iter()
                    .with_min_len(256)
                    .map(|i| self.totality_check(&diag, inner, &BitStr::from_u64(i as u64, n)))
                    .reduce(TotalityPart::default, TotalityPart::merge)
            });
            report.absorb(part);
        }
        let mut forms = Vec::new();
        for m in 0..=form_width {
            for v in 0..1u64 << m {
                forms.push(pi_form(&diag, &BitStr::from_u64(v, m)));
            }
        }
        let part = self.install(|| {
            forms
                .par_iter()
                .map(|w| self.totality_check(&diag, inner, w))
                .reduce(TotalityPart::default, TotalityPart::merge)
        });
        report.forms_checked = part.strings;
        report.forms_certified = part.certified;
        report.forms_clause_i = part.clause_i;
        report.absorb(TotalityPart {
            strings: 0,
            programs: 0,
            certified: 0,
            clause_i: 0,
            ..part
        });
        report.max_depth = self.max_depth();
        report.total = report.guard_violations == 0
            && report.extension_violations == 0
            && report.error.is_none();
        Ok(report)
    }

    fn totality_check(&self, diag: &TimeFn, inner: &TimeFn, w: &BitStr) -> TotalityPart {
        let mut part = TotalityPart {
            strings: 1,
            ..TotalityPart::default()
        };
        let res = (|| -> Result<()> {
            let e = self.eval_program(diag, w, None)?;
            let ib = self.bound(inner, w, None)?.value;
            if e.valid {
                part.programs = 1;
            }
            if e.bound < ib {
                part.extension_violations = 1;
                part.first_extension_violation = Some(w.clone());
            }
            if let Some(rho) = form_rho(diag, w) {
                let f = self.certify(diag, w, &rho, None)?;
                if f.certified {
                    part.certified = 1;
                }
                if e.bound > ib {
                    part.clause_i = 1;
                }
            }
            Ok(())
        })();
        match res {
            Ok(()) => {}
            Err(Error::Guard { .. }) => {
                part.guard_violations = 1;
                part.first_violation = Some(w.clone());
            }
            Err(other) => part.other_error = Some((w.clone(), other.to_string())),
        }
        part
    }

    /// Builds and runs the π′_Ω witness for `BB⁺(diag:inner, n)`.
    pub fn build_witness(&self, inner: &TimeFn, n: usize) -> Result<WitnessReport> {
        let diag = TimeFn::diagonal(inner.clone());
        let rho = self.psum(&diag, n)?.normalized();
        let prefix_len = pi_form(&diag, &BitStr::new()).len() - 1;
        let mut width = rho.exponent();
        while prefix_len + 2 * width as usize + 1 < n + 1 {
            width += 1;
        }
        let mantissa = rho.padded_to(width)?.mantissa()?;
        let witness = pi_form(&diag, &mantissa);
        debug_assert_eq!(
            witness.len(),
            prefix_len + encode_rho_padded(&rho, width)?.len()
        );
        let expected = self.bb_plus(&diag, n)?;
        let eval = self.evaluate(&diag, &witness)?;
        let output = eval.sub_output().numeric;
        let inner_bound = self.time_bound(inner, &witness)?;
        let size = witness.len();
        Ok(WitnessReport {
            level: n,
            rho: rho.to_string(),
            padded_width: width as usize,
            witness_size: size,
            output: output.clone(),
            expected: expected.clone(),
            clause_i: eval.bound > inner_bound,
            bound: eval.bound,
            steps: eval.halted.as_ref().map(|(_, s)| *s),
            slack: size as i64 - 2 * n as i64,
            ok: output == expected && size > n,
            witness,
        })
    }

    /// Witness reports for `1..=n_max` and the measured constant C.
    pub fn witness_suite(&self, inner: &TimeFn, n_max: usize) -> Result<WitnessSuite> {
        let rows = (1..=n_max)
            .map(|n| self.build_witness(inner, n))
            .collect::<Result<Vec<_>>>()?;
        let c = rows.iter().map(|r| r.slack).max().unwrap_or(0);
        let ok = rows
            .iter()
            .all(|r| r.ok && r.witness_size as i64 <= 2 * r.level as i64 + c);
        Ok(WitnessSuite {
            time_fn: TimeFn::diagonal(inner.clone()).id(),
            c,
            ok,
            rows,
        })
    }
}

#[derive(Clone, Debug, Default)]
struct TotalityPart {
    strings: u64,
    programs: u64,
    certified: u64,
    clause_i: u64,
    guard_violations: u64,
    extension_violations: u64,
    first_violation: Option<BitStr>,
    first_extension_violation: Option<BitStr>,
    other_error: Option<(BitStr, String)>,
}

fn min_opt(a: Option<BitStr>, b: Option<BitStr>) -> Option<BitStr> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

impl TotalityPart {
    fn merge(self, o: TotalityPart) -> TotalityPart {
        TotalityPart {
            strings: self.strings + o.strings,
            programs: self.programs + o.programs,
            certified: self.certified + o.certified,
            clause_i: self.clause_i + o.clause_i,
            guard_violations: self.guard_violations + o.guard_violations,
            extension_violations: self.extension_violations + o.extension_violations,
            first_violation: min_opt(self.first_violation, o.first_violation),
            first_extension_violation: min_opt(
                self.first_extension_violation,
                o.first_extension_violation,
            ),
            other_error: match (self.other_error, o.other_error) {
                (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Result of a diagonal totality sweep.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TotalityReport {
    pub time_fn: String,
    pub horizon: usize,
    pub form_width: usize,
    /// Strings of length `1..=horizon` evaluated.
    pub strings_checked: u64,
    /// Of those, programs of L.
    pub programs_checked: u64,
    /// π′_Ω forms evaluated beyond the horizon.
    pub forms_checked: u64,
    pub forms_certified: u64,
    /// Forms whose diagonal bound exceeds the inner bound.
    pub forms_clause_i: u64,
    pub max_depth: usize,
    pub guard_violations: u64,
    pub first_violation: Option<String>,
    /// Strings whose diagonal bound is below the inner bound.
    pub extension_violations: u64,
    pub first_extension_violation: Option<String>,
    pub error: Option<String>,
    pub total: bool,
}

impl TotalityReport {
    fn absorb(&mut self, p: TotalityPart) {
        self.strings_checked += p.strings;
        self.programs_checked += p.programs;
        self.guard_violations += p.guard_violations;
        self.extension_violations += p.extension_violations;
        if self.first_violation.is_none() {
            self.first_violation = p.first_violation.map(|w| w.to_string());
        }
        if self.first_extension_violation.is_none() {
            self.first_extension_violation = p.first_extension_violation.map(|w| w.to_string());
        }
        if self.error.is_none() {
            self.error = p.other_error.map(|(w, e)| format!("{w}: {e}"));
        }
    }
}

/// One witness program and its checks.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub level: usize,
    #[serde(serialize_with = "crate::serde_bits")]
    pub witness: BitStr,
    pub witness_size: usize,
    /// `ρ = psum(diag, level)` before padding.
    pub rho: String,
    pub padded_width: usize,
    /// Submachine numeric of the witness.
    #[serde(serialize_with = "crate::serde_big")]
    pub output: BigUint,
    /// `BB⁺(diag, level)`.
    #[serde(serialize_with = "crate::serde_big")]
    pub expected: BigUint,
    /// Whether the witness received the extra time of clause (i).
    pub clause_i: bool,
    pub bound: u64,
    pub steps: Option<u64>,
    /// `|witness| − 2·level`.
    pub slack: i64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSuite {
    pub time_fn: String,
    /// The measured constant: the largest slack over all rows.
    pub c: i64,
    pub ok: bool,
    pub rows: Vec<WitnessReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::MachineConfig;

    fn m() -> Machine {
        Machine::new(MachineConfig {
            capacity: 16,
            memo: true,
            workers: 2,
        })
        .unwrap()
    }

    fn p21() -> TimeFn {
        TimeFn::poly(2, 1).unwrap()
    }

    #[test]
    fn forms_are_recognized_exactly() {
        let m = m();
        let d = TimeFn::diagonal(p21());
        let w = pi_form(&d, &"011".parse().unwrap());
        let fm = m.form_match(&d, &w);
        assert!(fm.matched);
        assert_eq!(fm.rho_block_width, 3);
        assert_eq!(
            fm.rho.unwrap(),
            Dyadic::from_mantissa(&"011".parse().unwrap())
        );
        let mut longer = w.clone();
        longer.push(false);
        assert!(!m.form_match(&d, &longer).matched);
        // same shape over the inner time function is not a diagonal form
        assert!(!m.form_match(&d, &pi_form(&p21(), &BitStr::new())).matched);
    }

    #[test]
    fn non_forms_get_the_inner_bound() {
        let m = m();
        let w: BitStr = "101".parse().unwrap();
        assert_eq!(m.p_star_star_time(&p21(), &w).unwrap(), 10);
        let d = TimeFn::diagonal(p21());
        assert_eq!(m.p_star_time(&d, &p21(), &w).unwrap(), 10);
    }

    #[test]
    fn rho_zero_and_unreachable_rho_use_clause_ii() {
        let m = m();
        let d = TimeFn::diagonal(p21());
        let zero = pi_form(&d, &BitStr::new());
        assert_eq!(
            m.time_bound(&d, &zero).unwrap(),
            m.time_bound(&p21(), &zero).unwrap()
        );
        assert_eq!(m.certification(&d, &zero).unwrap(), Some((true, 0, 1)));
        // ρ = 0.111111111 cannot be reached by psum below 34 bits
        let hi = pi_form(&d, &"111111111".parse().unwrap());
        let small = Machine::new(MachineConfig {
            capacity: 60,
            ..m.config().clone()
        })
        .unwrap();
        let _ = small;
        assert!(hi.len() > 16);
    }

    #[test]
    fn guard_trips_on_a_cycle() {
        let m = m();
        let tf = p21();
        let frame = Frame {
            tf: tf.program(),
            len: 5,
            subject: None,
            depth: 0,
            parent: None,
        };
        assert!(matches!(
            m.level(&tf, 5, Some(&frame)),
            Err(Error::Guard {
                level: 5,
                len: 5,
                ..
            })
        ));
        assert!(m.level(&tf, 4, Some(&frame)).is_ok());
    }
}
