//! The prefix-free program language L.
//!
//! Every program is a single self-delimiting *term*. The codeword at the
//! front selects the term's head:
//!
//! | codeword     | head        | payload                                 |
//! |--------------|-------------|-----------------------------------------|
//! | `0`          | EMPTY       | none (halts at once, empty output)      |
//! | `10`         | base        | opcodes up to and including `HALT`      |
//! | `110`        | NAT         | integer code of `n`                     |
//! | `1110`       | APPLY       | program, argument                       |
//! | `11110`      | PI_OMEGA    | time function, ρ block `0^m 1 ρ`        |
//! | `111110`     | POLY        | unary `c−1`, integer code of `k`        |
//! | `1111110`    | P_STAR_STAR | time function                           |
//! | `11111110`   | T           | program                                 |
//! | `111111110`  | P_SM        | time function, program                  |
//! | `1111111110` | P_SIGMA     | time function, integer code of `N`      |
//! | `1111111111` | P_STAR      | time function (outer), time function    |
//!
//! `unary(n)` is `1^n 0`. Primitive heads take their arguments inline, so
//! `head∘args` costs no extra bits. Any other program is applied to an
//! argument with APPLY: `P∘w₁∘…∘w_k` is `APPLY^k P w₁ … w_k`, exactly
//! [`APPLY_COST`] bits per argument.
//!
//! A bit string is a program iff it parses as one term with no bits left
//! over. The codeword table is a complete prefix code and every payload is
//! self-delimiting, so the set of programs is prefix-free.

mod bits;
mod nat;

use std::fmt;

pub use bits::{BitReader, BitStr};
pub use nat::{
    decode_nat, encode_nat, index_of, index_of_total, index_of_u64, nat_code_len, nat_length_bound,
    nth_string, nth_string_big, number_string, string_number, NAT_C_PRIME, NAT_EPSILON,
};
pub(crate) use nat::{read_nat, write_nat};

use crate::error::{Error, Result};
use crate::omega::Dyadic;

/// Bits APPLY adds per argument: the constant C of the ∘ size law.
pub const APPLY_COST: usize = 4;

/// Codeword of base (stack machine) programs.
pub const BASE_CODEWORD: &str = "10";

/// Reserved primitive heads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Empty,
    Nat,
    Apply,
    Pi,
    Poly,
    PStarStar,
    T,
    Psm,
    PSigma,
    PStar,
}

impl Head {
    pub const ALL: [Head; 10] = [
        Head::Empty,
        Head::Nat,
        Head::Apply,
        Head::Pi,
        Head::Poly,
        Head::PStarStar,
        Head::T,
        Head::Psm,
        Head::PSigma,
        Head::PStar,
    ];

    pub fn codeword(self) -> &'static str {
        match self {
            Head::Empty => "0",
            Head::Nat => "110",
            Head::Apply => "1110",
            Head::Pi => "11110",
            Head::Poly => "111110",
            Head::PStarStar => "1111110",
            Head::T => "11111110",
            Head::Psm => "111111110",
            Head::PSigma => "1111111110",
            Head::PStar => "1111111111",
        }
    }

    pub fn codeword_bits(self) -> BitStr {
        self.codeword().parse().expect("static codeword")
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::Empty => "EMPTY",
            Head::Nat => "NAT",
            Head::Apply => "APPLY",
            Head::Pi => "PI_OMEGA",
            Head::Poly => "POLY",
            Head::PStarStar => "P_STAR_STAR",
            Head::T => "T",
            Head::Psm => "P_SM",
            Head::PSigma => "P_SIGMA",
            Head::PStar => "P_STAR",
        }
    }
}

/// Longest run of leading ones in a codeword.
const MAX_ONES: usize = 10;

/// Base machine opcodes. Each is three bits; `JNZ` is followed by its
/// backward distance in unary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Halt,
    Push0,
    Push1,
    Dup,
    Drop,
    Out,
    Read,
    /// Pop; if the bit is 1 jump back `d` instructions (0 = to itself).
    Jnz(u32),
}

impl Op {
    pub const CODE_LEN: usize = 3;

    pub const ALL: [Op; 8] = [
        Op::Halt,
        Op::Push0,
        Op::Push1,
        Op::Dup,
        Op::Drop,
        Op::Out,
        Op::Read,
        Op::Jnz(0),
    ];

    fn code(self) -> u64 {
        match self {
            Op::Halt => 0b000,
            Op::Push0 => 0b001,
            Op::Push1 => 0b010,
            Op::Dup => 0b011,
            Op::Drop => 0b100,
            Op::Out => 0b101,
            Op::Read => 0b110,
            Op::Jnz(_) => 0b111,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Op::Halt => "HALT",
            Op::Push0 => "PUSH0",
            Op::Push1 => "PUSH1",
            Op::Dup => "DUP",
            Op::Drop => "DROP",
            Op::Out => "OUT",
            Op::Read => "READ",
            Op::Jnz(_) => "JNZ",
        }
    }

    fn write(self, out: &mut BitStr) {
        out.extend_from(&BitStr::from_u64(self.code(), Self::CODE_LEN));
        if let Op::Jnz(d) = self {
            write_unary(out, d as u64);
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Jnz(d) => write!(f, "JNZ {d}"),
            op => f.write_str(op.mnemonic()),
        }
    }
}

/// `0^m 1 ρ`: an `m`-bit mantissa preceded by its width.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RhoBlock {
    pub mantissa: BitStr,
}

impl RhoBlock {
    pub fn value(&self) -> Dyadic {
        Dyadic::from_mantissa(&self.mantissa)
    }

    pub fn width(&self) -> usize {
        self.mantissa.len()
    }

    pub fn encoded_len(&self) -> usize {
        2 * self.mantissa.len() + 1
    }

    fn write(&self, out: &mut BitStr) {
        out.push_n(false, self.mantissa.len());
        out.push(true);
        out.extend_from(&self.mantissa);
    }

    pub(crate) fn read(r: &mut BitReader<'_>) -> Option<RhoBlock> {
        let m = r.read_run(false)?;
        Some(RhoBlock {
            mantissa: r.read_bits(m)?,
        })
    }
}

/// A parsed program.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Empty,
    /// Opcodes; the last one is `HALT` and no other is.
    Base(Vec<Op>),
    Nat(u64),
    Apply(Box<Term>, Box<Term>),
    Pi {
        tf: Box<Term>,
        rho: RhoBlock,
    },
    Poly {
        c: u64,
        k: u32,
    },
    PStarStar(Box<Term>),
    T(Box<Term>),
    Psm(Box<Term>, Box<Term>),
    PSigma(Box<Term>, u64),
    PStar(Box<Term>, Box<Term>),
}

fn write_unary(out: &mut BitStr, n: u64) {
    for _ in 0..n {
        out.push(true);
    }
    out.push(false);
}

impl Term {
    /// Parses `bits` as exactly one program; `None` if it is not in L.
    pub fn parse(bits: &BitStr) -> Option<Term> {
        let mut r = BitReader::new(bits);
        let t = read_term(&mut r)?;
        (r.remaining() == 0).then_some(t)
    }

    pub fn encode(&self) -> BitStr {
        let mut out = BitStr::new();
        self.write(&mut out);
        out
    }

    pub fn write(&self, out: &mut BitStr) {
        if let Term::Base(ops) = self {
            out.extend_from(&BASE_CODEWORD.parse().expect("static codeword"));
            for op in ops {
                op.write(out);
            }
            return;
        }
        let head = self.head().expect("non-base term");
        out.extend_from(&head.codeword_bits());
        match self {
            Term::Base(_) | Term::Empty => {}
            Term::Nat(n) => write_nat(out, *n),
            Term::Apply(f, x) => {
                f.write(out);
                x.write(out);
            }
            Term::Pi { tf, rho } => {
                tf.write(out);
                rho.write(out);
            }
            Term::Poly { c, k } => {
                write_unary(out, c - 1);
                write_nat(out, *k as u64);
            }
            Term::PStarStar(x) | Term::T(x) => x.write(out),
            Term::Psm(a, b) | Term::PStar(a, b) => {
                a.write(out);
                b.write(out);
            }
            Term::PSigma(tf, n) => {
                tf.write(out);
                write_nat(out, *n);
            }
        }
    }

    pub fn head(&self) -> Option<Head> {
        Some(match self {
            Term::Base(_) => return None,
            Term::Empty => Head::Empty,
            Term::Nat(_) => Head::Nat,
            Term::Apply(..) => Head::Apply,
            Term::Pi { .. } => Head::Pi,
            Term::Poly { .. } => Head::Poly,
            Term::PStarStar(_) => Head::PStarStar,
            Term::T(_) => Head::T,
            Term::Psm(..) => Head::Psm,
            Term::PSigma(..) => Head::PSigma,
            Term::PStar(..) => Head::PStar,
        })
    }

    /// Time-function terms: POLY, P**∘tf and P*∘tf∘tf.
    pub fn is_time_fn(&self) -> bool {
        matches!(
            self,
            Term::Poly { .. } | Term::PStarStar(_) | Term::PStar(..)
        )
    }
}

fn read_time_fn(r: &mut BitReader<'_>) -> Option<Term> {
    let t = read_term(r)?;
    t.is_time_fn().then_some(t)
}

pub(crate) fn read_term(r: &mut BitReader<'_>) -> Option<Term> {
    let mut ones = 0;
    while ones < MAX_ONES && r.read()? {
        ones += 1;
    }
    Some(match ones {
        0 => Term::Empty,
        1 => Term::Base(read_base(r)?),
        2 => Term::Nat(read_nat(r)?),
        3 => {
            let f = read_term(r)?;
            let x = read_term(r)?;
            Term::Apply(Box::new(f), Box::new(x))
        }
        4 => {
            let tf = read_time_fn(r)?;
            let rho = RhoBlock::read(r)?;
            Term::Pi {
                tf: Box::new(tf),
                rho,
            }
        }
        5 => {
            let c = r.read_run(true)? as u64 + 1;
            let k = u32::try_from(read_nat(r)?).ok()?;
            Term::Poly { c, k }
        }
        6 => Term::PStarStar(Box::new(read_time_fn(r)?)),
        7 => Term::T(Box::new(read_term(r)?)),
        8 => {
            let tf = read_time_fn(r)?;
            let w = read_term(r)?;
            Term::Psm(Box::new(tf), Box::new(w))
        }
        9 => {
            let tf = read_time_fn(r)?;
            Term::PSigma(Box::new(tf), read_nat(r)?)
        }
        _ => {
            let outer = read_time_fn(r)?;
            let inner = read_time_fn(r)?;
            Term::PStar(Box::new(outer), Box::new(inner))
        }
    })
}

fn read_base(r: &mut BitReader<'_>) -> Option<Vec<Op>> {
    let mut ops = Vec::new();
    loop {
        let op = match r.read_u64(Op::CODE_LEN)? {
            0b000 => Op::Halt,
            0b001 => Op::Push0,
            0b010 => Op::Push1,
            0b011 => Op::Dup,
            0b100 => Op::Drop,
            0b101 => Op::Out,
            0b110 => Op::Read,
            _ => {
                let d = r.read_run(true)?;
                if d > ops.len() {
                    return None;
                }
                Op::Jnz(d as u32)
            }
        };
        ops.push(op);
        if op == Op::Halt {
            return Some(ops);
        }
    }
}

/// Decidable decomposition of a bit string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParsedForm {
    /// A primitive head with its inline arguments.
    PrimitiveHead {
        head: Head,
        payload: BitStr,
    },
    /// `head ∘ args[0] ∘ … ∘ args[k−1]` built with APPLY.
    Apply {
        head: Box<ParsedForm>,
        args: Vec<BitStr>,
    },
    BaseProgram(Vec<Op>),
    Invalid,
}

impl ParsedForm {
    fn from_term(t: &Term) -> ParsedForm {
        match t {
            Term::Base(ops) => ParsedForm::BaseProgram(ops.clone()),
            Term::Apply(..) => {
                let mut args = Vec::new();
                let mut cur = t;
                while let Term::Apply(f, x) = cur {
                    args.push(x.encode());
                    cur = f;
                }
                args.reverse();
                ParsedForm::Apply {
                    head: Box::new(ParsedForm::from_term(cur)),
                    args,
                }
            }
            other => {
                let head = other.head().expect("primitive");
                let all = other.encode();
                ParsedForm::PrimitiveHead {
                    head,
                    payload: all.slice(head.codeword().len(), all.len()),
                }
            }
        }
    }

    /// Re-encodes the decomposition; `None` for `Invalid`.
    pub fn encode(&self) -> Option<BitStr> {
        Some(match self {
            ParsedForm::Invalid => return None,
            ParsedForm::BaseProgram(ops) => Term::Base(ops.clone()).encode(),
            ParsedForm::PrimitiveHead { head, payload } => head.codeword_bits().concat(payload),
            ParsedForm::Apply { head, args } => {
                let mut out = BitStr::new();
                for _ in args {
                    out.extend_from(&Head::Apply.codeword_bits());
                }
                out.extend_from(&head.encode()?);
                for a in args {
                    out.extend_from(a);
                }
                out
            }
        })
    }

    pub fn is_valid(&self) -> bool {
        !matches!(self, ParsedForm::Invalid)
    }
}

/// Total decomposition: `Invalid` for strings outside L.
pub fn try_decompose(s: &BitStr) -> ParsedForm {
    match Term::parse(s) {
        Some(t) => ParsedForm::from_term(&t),
        None => ParsedForm::Invalid,
    }
}

pub fn is_program(s: &BitStr) -> bool {
    let mut r = BitReader::new(s);
    read_term(&mut r).is_some() && r.remaining() == 0
}

/// `head ∘ args[0] ∘ … ∘ args[k−1]`.
pub fn encode_apply(head: &BitStr, args: &[BitStr]) -> Result<BitStr> {
    if !is_program(head) {
        return Err(Error::Encoding(format!("head {head} is not a program")));
    }
    if let Some(a) = args.iter().find(|a| !is_program(a)) {
        return Err(Error::Encoding(format!("argument {a} is not a program")));
    }
    let apply = Head::Apply.codeword_bits();
    let mut out = BitStr::new();
    for _ in args {
        out.extend_from(&apply);
    }
    out.extend_from(head);
    for a in args {
        out.extend_from(a);
    }
    Ok(out)
}

/// Encodes `ρ` as `0^m 1 ρ` using its representation width `m`.
pub fn encode_rho(rho: &Dyadic) -> Result<BitStr> {
    let block = RhoBlock {
        mantissa: rho.mantissa()?,
    };
    let mut out = BitStr::new();
    block.write(&mut out);
    Ok(out)
}

/// Encodes `ρ` padded with trailing zeros to `width` mantissa bits.
pub fn encode_rho_padded(rho: &Dyadic, width: u32) -> Result<BitStr> {
    encode_rho(&rho.padded_to(width)?)
}

pub fn decode_rho(bits: &BitStr) -> Result<Dyadic> {
    let mut r = BitReader::new(bits);
    let block = RhoBlock::read(&mut r)
        .ok_or_else(|| Error::Decode(format!("malformed rho block {bits}")))?;
    if r.remaining() != 0 {
        return Err(Error::Decode(format!(
            "{} trailing bits after rho block",
            r.remaining()
        )));
    }
    Ok(block.value())
}

/// The published constants: every codeword and the size-law constants.
pub fn published_constants() -> String {
    let mut s = String::new();
    s.push_str("# sublab language constants\n");
    for h in Head::ALL {
        s.push_str(&format!("codeword {} {}\n", h.name(), h.codeword()));
    }
    s.push_str(&format!("codeword BASE {BASE_CODEWORD}\n"));
    for op in Op::ALL {
        let code = BitStr::from_u64(op.code(), Op::CODE_LEN);
        let arg = if matches!(op, Op::Jnz(_)) {
            " unary(distance)"
        } else {
            ""
        };
        s.push_str(&format!("opcode {} {}{}\n", op.mnemonic(), code, arg));
    }
    s.push_str("unary(n) 1^n 0\n");
    s.push_str("integer_code elias_delta(n+1)\n");
    s.push_str(&format!("C {APPLY_COST}\n"));
    s.push_str(&format!("C_apply {APPLY_COST}\n"));
    s.push_str(&format!("C_prime {NAT_C_PRIME}\n"));
    s.push_str(&format!("epsilon {NAT_EPSILON}\n"));
    s
}

/// Builders for terms.
pub mod build {
    use super::*;

    pub fn base(ops: &[Op]) -> Term {
        let mut v = ops.to_vec();
        if v.last() != Some(&Op::Halt) {
            v.push(Op::Halt);
        }
        Term::Base(v)
    }

    pub fn nat(n: u64) -> Term {
        Term::Nat(n)
    }

    pub fn apply(f: Term, x: Term) -> Term {
        Term::Apply(Box::new(f), Box::new(x))
    }

    pub fn poly(c: u64, k: u32) -> Term {
        assert!(c >= 1, "POLY needs c >= 1");
        Term::Poly { c, k }
    }

    pub fn pss(tf: Term) -> Term {
        Term::PStarStar(Box::new(tf))
    }

    pub fn pstar(outer: Term, inner: Term) -> Term {
        Term::PStar(Box::new(outer), Box::new(inner))
    }

    pub fn pi(tf: Term, mantissa: BitStr) -> Term {
        Term::Pi {
            tf: Box::new(tf),
            rho: RhoBlock { mantissa },
        }
    }

    pub fn t(w: Term) -> Term {
        Term::T(Box::new(w))
    }

    pub fn psm(tf: Term, w: Term) -> Term {
        Term::Psm(Box::new(tf), Box::new(w))
    }

    pub fn psigma(tf: Term, n: u64) -> Term {
        Term::PSigma(Box::new(tf), n)
    }
}
