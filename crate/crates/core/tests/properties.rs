//! Property tests over random programs, strings and schedules.

use num_bigint::BigUint;
use proptest::prelude::*;
use sublab::codec::{
    decode_nat, decode_rho, encode_nat, encode_rho, index_of, index_of_total, is_program,
    nth_string_big, BitStr, Op, RhoBlock, Term,
};
use sublab::diagonal::pi_form;
use sublab::{Dyadic, Machine, MachineConfig, RunOutcome, StepBudget, SubOutput, TimeFn};

fn bits(max: usize) -> impl Strategy<Value = BitStr> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitStr::from_bools)
}

fn base_ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec((0u8..7, 0u32..6), 0..8).prop_map(|raw| {
        let mut ops = Vec::new();
        for (code, d) in raw {
            ops.push(match code {
                0 => Op::Push0,
                1 => Op::Push1,
                2 => Op::Dup,
                3 => Op::Drop,
                4 => Op::Out,
                5 => Op::Read,
                _ => Op::Jnz(d.min(ops.len() as u32)),
            });
        }
        ops.push(Op::Halt);
        ops
    })
}

fn time_fn_term() -> impl Strategy<Value = Term> {
    let poly = (1u64..20, 0u32..1000).prop_map(|(c, k)| Term::Poly { c, k });
    poly.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::PStarStar(Box::new(t))),
            (inner.clone(), inner).prop_map(|(a, b)| Term::PStar(Box::new(a), Box::new(b))),
        ]
    })
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::Empty),
        base_ops().prop_map(Term::Base),
        any::<u64>().prop_map(|n| Term::Nat(n % (u64::MAX - 1))),
        time_fn_term(),
    ];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, x)| Term::Apply(Box::new(f), Box::new(x))),
            (time_fn_term(), bits(6)).prop_map(|(tf, m)| Term::Pi {
                tf: Box::new(tf),
                rho: RhoBlock { mantissa: m }
            }),
            inner.clone().prop_map(|t| Term::T(Box::new(t))),
            (time_fn_term(), inner).prop_map(|(tf, w)| Term::Psm(Box::new(tf), Box::new(w))),
            (time_fn_term(), 0u64..40).prop_map(|(tf, n)| Term::PSigma(Box::new(tf), n)),
        ]
    })
}

fn machine(workers: usize, memo: bool) -> Machine {
    Machine::new(MachineConfig {
        capacity: 26,
        memo,
        workers,
    })
    .unwrap()
}

proptest! {
    #[test]
    fn terms_round_trip_and_are_prefix_free(t in term()) {
        let w = t.encode();
        prop_assert!(is_program(&w));
        prop_assert_eq!(Term::parse(&w), Some(t));
        for k in 0..w.len() {
            prop_assert!(!is_program(&w.slice(0, k)));
        }
    }

    #[test]
    fn shortlex_bijection(k in 1u64..1_000_000_000) {
        let s = nth_string_big(&BigUint::from(k)).unwrap();
        prop_assert_eq!(index_of(&s).unwrap(), BigUint::from(k));
    }

    #[test]
    fn bit_strings_round_trip(s in bits(80)) {
        prop_assert_eq!(s.to_string().parse::<BitStr>().unwrap(), s.clone());
        prop_assert_eq!(BitStr::from_bytes(&s.to_bytes(), s.len()).unwrap(), s);
    }

    #[test]
    fn integer_codes_round_trip(n in 0u64..u64::MAX - 1) {
        prop_assert_eq!(decode_nat(&encode_nat(n)).unwrap(), n);
    }

    #[test]
    fn rho_blocks_round_trip(m in bits(40)) {
        let d = Dyadic::from_mantissa(&m);
        if d < Dyadic::one() {
            prop_assert_eq!(decode_rho(&encode_rho(&d).unwrap()).unwrap(), d);
        }
    }

    #[test]
    fn shift_law_on_longer_strings(w in bits(40)) {
        let m = machine(1, true);
        let tf = TimeFn::poly(2, 1).unwrap();
        let bound = m.time_bound(&tf, &w).unwrap();
        let sub = m.eval_sub(&tf, &w).unwrap();
        match m.run(&w, StepBudget::Fuel(bound)).unwrap() {
            RunOutcome::Halted { output, .. } => prop_assert_eq!(&sub.numeric, &index_of_total(&output)),
            RunOutcome::Exhausted { .. } => prop_assert_eq!(&sub, &SubOutput::diverged()),
        }
        prop_assert_eq!(index_of(&sub.value).unwrap(), &sub.numeric + 1u32);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Memo soundness: results with and without memoization agree.
    #[test]
    fn memo_is_sound(w in bits(30)) {
        let tf = TimeFn::diagonal(TimeFn::poly(2, 1).unwrap());
        let memo = machine(2, true);
        let bare = Machine::oracle(26);
        prop_assert_eq!(memo.time_bound(&tf, &w).unwrap(), bare.time_bound(&tf, &w).unwrap());
        prop_assert_eq!(memo.eval_sub(&tf, &w).unwrap(), bare.eval_sub(&tf, &w).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn levels_are_schedule_independent(n in 1usize..=13, workers in 2usize..=8, cubic in any::<bool>()) {
        let tf = if cubic { TimeFn::poly(1, 3).unwrap() } else { TimeFn::poly(2, 1).unwrap() };
        let serial = Machine::oracle(26).level_stats(&tf, n).unwrap();
        let parallel = machine(workers, true).level_stats(&tf, n).unwrap();
        prop_assert_eq!(serial, parallel);
    }
}

#[test]
fn memo_is_sound_on_diagonal_forms() {
    let inner = TimeFn::poly(2, 1).unwrap();
    let tf = TimeFn::diagonal(inner);
    let memo = machine(2, true);
    let bare = Machine::oracle(26);
    for m in ["", "0", "1", "00", "01", "10", "11"] {
        let w = pi_form(&tf, &m.parse().unwrap());
        assert_eq!(
            memo.time_bound(&tf, &w).unwrap(),
            bare.time_bound(&tf, &w).unwrap(),
            "{w}"
        );
        assert_eq!(
            memo.eval_sub(&tf, &w).unwrap(),
            bare.eval_sub(&tf, &w).unwrap(),
            "{w}"
        );
    }
}

#[test]
fn p_star_star_is_p_star_over_itself() {
    let inner = TimeFn::poly(2, 1).unwrap();
    let tf = TimeFn::diagonal(inner.clone());
    let m = machine(2, true);
    for mant in ["", "1", "01", "11"] {
        let w = pi_form(&tf, &mant.parse().unwrap());
        assert_eq!(
            m.p_star_star_time(&inner, &w).unwrap(),
            m.p_star_time(&tf, &inner, &w).unwrap()
        );
    }
}
