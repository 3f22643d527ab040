use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::codec::{build, BitStr, Term};
use crate::error::{Error, Result};

/// The family a time function belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `c·(|w|+1)^k + c`.
    Poly { c: u64, k: u32 },
    /// `P**∘inner`: the self-referential diagonal over `inner`.
    Diagonal(Box<TimeFn>),
    /// `P*∘outer∘inner`: grants extra time to π′_Ω programs over `outer`.
    Star {
        outer: Box<TimeFn>,
        inner: Box<TimeFn>,
    },
}

/// A total time-bound program of L, the parameter of a submachine.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TimeFn {
    family: Family,
    program: BitStr,
}

impl TimeFn {
    pub fn poly(c: u64, k: u32) -> Result<Self> {
        if c == 0 {
            return Err(Error::TimeFn("poly needs c >= 1".into()));
        }
        Ok(Self::from_family(Family::Poly { c, k }))
    }

    pub fn diagonal(inner: TimeFn) -> Self {
        Self::from_family(Family::Diagonal(Box::new(inner)))
    }

    pub fn star(outer: TimeFn, inner: TimeFn) -> Self {
        Self::from_family(Family::Star {
            outer: Box::new(outer),
            inner: Box::new(inner),
        })
    }

    fn from_family(family: Family) -> Self {
        let program = Self::term_of(&family).encode();
        TimeFn { family, program }
    }

    fn term_of(family: &Family) -> Term {
        match family {
            Family::Poly { c, k } => build::poly(*c, *k),
            Family::Diagonal(inner) => build::pss(inner.term()),
            Family::Star { outer, inner } => build::pstar(outer.term(), inner.term()),
        }
    }

    /// The time-function term this program parses to.
    pub fn term(&self) -> Term {
        Self::term_of(&self.family)
    }

    /// Converts a time-function term; `None` for other terms.
    pub fn from_term(t: &Term) -> Option<TimeFn> {
        Some(match t {
            Term::Poly { c, k } => TimeFn::poly(*c, *k).ok()?,
            Term::PStarStar(inner) => TimeFn::diagonal(TimeFn::from_term(inner)?),
            Term::PStar(outer, inner) => {
                TimeFn::star(TimeFn::from_term(outer)?, TimeFn::from_term(inner)?)
            }
            _ => return None,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The encoding of this time function as a program of L.
    pub fn program(&self) -> &BitStr {
        &self.program
    }

    /// Builtin families are total: poly by construction, the diagonals by
    /// well-founded recursion, which `verify_totality` checks.
    pub fn asserted_total(&self) -> bool {
        true
    }

    /// The inner time function of a diagonal, if this is one.
    pub fn inner(&self) -> Option<&TimeFn> {
        match &self.family {
            Family::Diagonal(inner) => Some(inner),
            Family::Star { inner, .. } => Some(inner),
            Family::Poly { .. } => None,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.family, Family::Diagonal(_))
    }

    /// Canonical textual id, e.g. `poly:2,1` or `diag:poly:2,1`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    /// `c·(|w|+1)^k + c` saturated to `u64`.
    pub(crate) fn poly_bound(c: u64, k: u32, len: usize) -> u64 {
        let base = len as u64 + 1;
        let mut p: u64 = 1;
        for _ in 0..k {
            p = p.saturating_mul(base);
        }
        c.saturating_mul(p).saturating_add(c)
    }

    pub(crate) fn poly_bound_exact(c: u64, k: u32, len: usize) -> BigUint {
        let p = BigUint::from(len as u64 + 1).pow(k);
        BigUint::from(c) * p + BigUint::from(c)
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Poly { c, k } => write!(f, "poly:{c},{k}"),
            Family::Diagonal(inner) => write!(f, "diag:{inner}"),
            Family::Star { outer, inner } => write!(f, "star({outer};{inner})"),
        }
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeFn({self})")
    }
}

impl FromStr for TimeFn {
    type Err = Error;

    /// Accepts `poly:c,k`, `diag:<tf>` and `star(<outer>;<inner>)`.
    fn from_str(s: &str) -> Result<Self> {
        let (tf, rest) = parse_tf(s.trim())?;
        if !rest.is_empty() {
            return Err(Error::TimeFn(format!("trailing text {rest:?} in {s:?}")));
        }
        Ok(tf)
    }
}

fn parse_tf(s: &str) -> Result<(TimeFn, &str)> {
    if let Some(rest) = s.strip_prefix("diag:") {
        let (inner, rest) = parse_tf(rest)?;
        return Ok((TimeFn::diagonal(inner), rest));
    }
    if let Some(rest) = s.strip_prefix("star(") {
        let (outer, rest) = parse_tf(rest)?;
        let rest = rest
            .strip_prefix(';')
            .ok_or_else(|| Error::TimeFn(format!("expected ';' in {s:?}")))?;
        let (inner, rest) = parse_tf(rest)?;
        let rest = rest
            .strip_prefix(')')
            .ok_or_else(|| Error::TimeFn(format!("expected ')' in {s:?}")))?;
        return Ok((TimeFn::star(outer, inner), rest));
    }
    if let Some(rest) = s.strip_prefix("poly:") {
        let end = rest
            .find(|ch: char| !(ch.is_ascii_digit() || ch == ','))
            .unwrap_or(rest.len());
        let (params, rest) = rest.split_at(end);
        let (c, k) = params
            .split_once(',')
            .ok_or_else(|| Error::TimeFn(format!("expected poly:c,k, got {s:?}")))?;
        let c: u64 = c
            .parse()
            .map_err(|_| Error::TimeFn(format!("bad c in {s:?}")))?;
        let k: u32 = k
            .parse()
            .map_err(|_| Error::TimeFn(format!("bad k in {s:?}")))?;
        return Ok((TimeFn::poly(c, k)?, rest));
    }
    Err(Error::TimeFn(format!(
        "unknown time function {s:?} (expected poly:c,k or diag:...)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for s in [
            "poly:2,1",
            "poly:1,2",
            "diag:poly:2,1",
            "star(poly:1,0;diag:poly:1,2)",
        ] {
            let tf: TimeFn = s.parse().unwrap();
            assert_eq!(tf.id(), s);
            let t = Term::parse(tf.program()).unwrap();
            assert_eq!(TimeFn::from_term(&t).unwrap(), tf);
        }
        for bad in ["poly:0,1", "poly:2", "diag:", "lin:1,1", "poly:1,1x"] {
            assert!(bad.parse::<TimeFn>().is_err(), "{bad}");
        }
    }

    #[test]
    fn poly_formula() {
        assert_eq!(TimeFn::poly_bound(2, 1, 3), 10);
        assert_eq!(TimeFn::poly_bound(1, 0, 99), 2);
        assert_eq!(TimeFn::poly_bound(1, 64, 1), u64::MAX);
        assert_eq!(
            TimeFn::poly_bound_exact(1, 64, 1),
            BigUint::from(2u32).pow(64) + 1u32
        );
    }
}
