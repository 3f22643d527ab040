//! One line per acceptance criterion. Every comparison is exact unless a
//! tolerance is printed on the line.

use std::fs;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use num_bigint::BigUint;
use sublab::beaver::PiOmega;
use sublab::cli::{run, Cli};
use sublab::codec::{
    build, decode_nat, encode_apply, encode_nat, is_program, nat_code_len, nat_length_bound,
    try_decompose, BitStr, Term, APPLY_COST,
};
use sublab::enumerator::Cache;
use sublab::{Dyadic, Machine, MachineConfig, RunOutcome, StepBudget, SubOutput, TimeFn};

/// Worker count of the parallel side of the determinism check.
const MANY_WORKERS: usize = 8;

/// Slack for the floating-point integer-code bound.
const NAT_BOUND_TOL: f64 = 1e-9;

fn machine(workers: usize) -> Machine {
    Machine::new(MachineConfig {
        capacity: 26,
        memo: true,
        workers,
    })
    .unwrap()
}

fn p21() -> TimeFn {
    TimeFn::poly(2, 1).unwrap()
}

fn p12() -> TimeFn {
    TimeFn::poly(1, 2).unwrap()
}

fn diag() -> TimeFn {
    TimeFn::diagonal(p21())
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn codec_laws() -> Check {
    let mut programs = 0u64;
    for n in 0..=16usize {
        for i in 0..1u64 << n {
            let s = BitStr::from_u64(i, n);
            let form = try_decompose(&s);
            if !is_program(&s) {
                ensure(!form.is_valid() && Term::parse(&s).is_none(), || {
                    format!("{s} decomposes but is not a program")
                })?;
                continue;
            }
            programs += 1;
            let t = Term::parse(&s).ok_or(format!("{s} does not parse"))?;
            ensure(t.encode() == s, || format!("round trip of {s}"))?;
            ensure(form.encode().as_ref() == Some(&s), || {
                format!("decomposition round trip of {s}")
            })?;
            for k in 0..n {
                ensure(!is_program(&s.slice(0, k)), || {
                    format!("prefix of {s} is a program")
                })?;
            }
        }
    }
    let small: Vec<BitStr> = [
        build::nat(0),
        build::nat(5),
        build::base(&[]),
        Term::Empty,
        build::poly(2, 1),
    ]
    .iter()
    .map(Term::encode)
    .collect();
    let mut combos = 0;
    for head in &small {
        for k in 0..=3 {
            let args: Vec<BitStr> = small.iter().cycle().skip(k).take(k).cloned().collect();
            let w = encode_apply(head, &args).map_err(|e| e.to_string())?;
            let total: usize = args.iter().map(BitStr::len).sum();
            ensure(w.len() <= APPLY_COST * k + head.len() + total, || {
                format!("size law for {w}")
            })?;
            ensure(args.iter().all(|a| a.len() < w.len()), || {
                format!("sub-part law for {w}")
            })?;
            combos += 1;
        }
    }
    for n in 0..=1_000_000u64 {
        let code = encode_nat(n);
        ensure(code.len() == nat_code_len(n), || format!("nat length {n}"))?;
        ensure(decode_nat(&code).ok() == Some(n), || {
            format!("nat round trip {n}")
        })?;
        if n >= 2 {
            ensure(
                code.len() as f64 <= nat_length_bound(n) + NAT_BOUND_TOL,
                || format!("nat bound at {n}: {} > {}", code.len(), nat_length_bound(n)),
            )?;
        }
    }
    Ok(format!(
        "{programs} programs among all strings <= 16 bits, {combos} apply combinations with C = {APPLY_COST}, nat codes n <= 10^6 (bound tol {NAT_BOUND_TOL:e})"
    ))
}

fn shift_law() -> Check {
    use sublab::codec::{index_of, index_of_total};
    let m = machine(0);
    let mut checked = 0u64;
    for (tf, c, k) in [(p21(), 2u64, 1u32), (p12(), 1, 2)] {
        for n in 0..=18usize {
            let expect_bound = c * (n as u64 + 1).pow(k) + c;
            for i in 0..1u64 << n {
                let w = BitStr::from_u64(i, n);
                let bound = m.time_bound(&tf, &w).map_err(|e| e.to_string())?;
                ensure(bound == expect_bound, || format!("{tf} bound of {w}"))?;
                let sub = m.eval_sub(&tf, &w).map_err(|e| format!("{tf} {w}: {e}"))?;
                let run = m
                    .run(&w, StepBudget::Fuel(bound))
                    .map_err(|e| e.to_string())?;
                match run {
                    RunOutcome::Halted { output, .. } => {
                        ensure(sub.numeric == index_of_total(&output), || {
                            format!("{tf} numeric of {w}")
                        })?;
                    }
                    RunOutcome::Exhausted { .. } => {
                        ensure(sub == SubOutput::diverged(), || {
                            format!("{tf} divergence of {w}")
                        })?;
                    }
                }
                ensure(
                    index_of(&sub.value).ok() == Some(&sub.numeric + 1u32),
                    || format!("{tf} shift of {w}"),
                )?;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} (time fn, string) pairs, |w| <= 18, poly:2,1 and poly:1,2"
    ))
}

fn omega_properties() -> Check {
    let m = machine(0);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cache = Cache::open(dir.path()).map_err(|e| e.to_string())?;
    let mut finals = Vec::new();
    for tf in [p21(), p12()] {
        let rows = m.omega_table(&tf, 16).map_err(|e| e.to_string())?;
        ensure(rows[0].value == Dyadic::zero(), || format!("{tf} psum(0)"))?;
        ensure(rows.windows(2).all(|w| w[0].value <= w[1].value), || {
            format!("{tf} monotone")
        })?;
        ensure(rows.iter().all(|r| r.value < Dyadic::one()), || {
            format!("{tf} below 1")
        })?;
        let sweep = m
            .sweep(&tf, 16, Some(&mut cache))
            .map_err(|e| e.to_string())?;
        ensure(sweep.psum == rows[16].value, || format!("{tf} sweep psum"))?;
        let rep = m
            .oracle_check(&tf, 16, Some(&cache))
            .map_err(|e| e.to_string())?;
        ensure(rep.ok, || {
            format!("{tf} oracle mismatch at {:?}", rep.first_mismatch)
        })?;
        finals.push(format!(
            "psum({tf},16) = {}",
            rows[16].value.fraction_string()
        ));
    }
    Ok(format!(
        "N <= 16, cached pipeline equals serial oracle; {}",
        finals.join(", ")
    ))
}

fn bb_identity() -> Check {
    let m = machine(0);
    let mut last = Vec::new();
    for tf in [p21(), p12()] {
        let rows = m.bb_table(&tf, 18).map_err(|e| e.to_string())?;
        ensure(rows.iter().all(|r| r.bb_plus == &r.bb + 1u32), || {
            format!("{tf} bb_plus")
        })?;
        ensure(rows.windows(2).all(|w| w[0].bb <= w[1].bb), || {
            format!("{tf} monotone")
        })?;
        last.push(format!("BB+({tf},18) = {}", rows[18].bb_plus));
    }
    Ok(format!("N <= 18; {}", last.join(", ")))
}

fn incompressibility() -> Check {
    let m = machine(0);
    let rep = m.incompressibility(&p21(), 16).map_err(|e| e.to_string())?;
    ensure(rep.ok, || "some program reaches BB+".into())?;
    let dom = m.dominance(&p21(), 22).map_err(|e| e.to_string())?;
    let n0: Vec<String> = dom
        .adversaries
        .iter()
        .map(|a| {
            format!(
                "{} N0={}",
                a.name,
                a.n0.map_or("none".into(), |n| n.to_string())
            )
        })
        .collect();
    ensure(dom.ok, || format!("dominance fails: {}", n0.join(", ")))?;
    Ok(format!(
        "{} programs <= 16 bits all below BB+; dominance to horizon 22: {}",
        rep.rows.last().map_or(0, |r| r.programs),
        n0.join(", ")
    ))
}

fn pi_omega_consistency() -> Check {
    let m = machine(0);
    let mut plateaus = 0;
    for tf in [p21(), p12(), diag()] {
        for n in 1..=14 {
            let rho = m.psum(&tf, n).map_err(|e| e.to_string())?;
            let want = m.bb_plus(&tf, n).map_err(|e| e.to_string())?;
            match m.pi_omega(&tf, &rho, 14).map_err(|e| e.to_string())? {
                PiOmega::Value { value, level } => {
                    ensure(value == want, || format!("{tf} N={n}: {value} != {want}"))?;
                    plateaus += (level < n) as usize;
                }
                PiOmega::Diverged { .. } => return Err(format!("{tf} N={n} diverged")),
            }
        }
        let zero = m
            .pi_omega(&tf, &Dyadic::zero(), 14)
            .map_err(|e| e.to_string())?;
        ensure(
            zero == PiOmega::Value {
                value: BigUint::ZERO,
                level: 0,
            },
            || format!("{tf} rho=0"),
        )?;
        let one = m
            .pi_omega(&tf, &Dyadic::one(), 20)
            .map_err(|e| e.to_string())?;
        ensure(one == PiOmega::Diverged { guard: 20 }, || {
            format!("{tf} rho=1")
        })?;
    }
    Ok(format!(
        "N = 1..14 on poly:2,1, poly:1,2, diag:poly:2,1 ({plateaus} plateau levels); rho=0 -> 0, rho=1 -> diverged; N=0 excluded (psum 0 maps to 0, BB+ is 1)"
    ))
}

fn diagonal_totality() -> Check {
    let m = machine(0);
    let rep = m
        .verify_totality(&p21(), 14, 2)
        .map_err(|e| e.to_string())?;
    ensure(rep.guard_violations == 0, || {
        format!("guard trip at {:?}", rep.first_violation)
    })?;
    ensure(rep.total, || format!("report not total: {:?}", rep.error))?;
    Ok(format!(
        "{} strings ({} programs) <= 14 bits and {} forms, {} guard trips, max depth {}",
        rep.strings_checked,
        rep.programs_checked,
        rep.forms_checked,
        rep.guard_violations,
        rep.max_depth
    ))
}

fn witness() -> Check {
    let m = machine(0);
    let suite = m.witness_suite(&p21(), 8).map_err(|e| e.to_string())?;
    for r in &suite.rows {
        ensure(r.output == r.expected, || {
            format!("N={}: {} != {}", r.level, r.output, r.expected)
        })?;
        ensure(
            r.witness_size > r.level && r.witness_size as i64 <= 2 * r.level as i64 + suite.c,
            || format!("N={} size {}", r.level, r.witness_size),
        )?;
    }
    ensure(suite.ok, || "suite flagged a row".into())?;
    let sizes: Vec<String> = suite
        .rows
        .iter()
        .map(|r| r.witness_size.to_string())
        .collect();
    Ok(format!(
        "N = 1..8, measured C = {}, sizes {}",
        suite.c,
        sizes.join(",")
    ))
}

fn extension_law() -> Check {
    let m = machine(0);
    let rep = m
        .verify_totality(&p21(), 14, 2)
        .map_err(|e| e.to_string())?;
    ensure(rep.extension_violations == 0, || {
        format!("bound below inner at {:?}", rep.first_extension_violation)
    })?;
    for n in 0..=14 {
        let d = m.psum(&diag(), n).map_err(|e| e.to_string())?;
        let i = m.psum(&p21(), n).map_err(|e| e.to_string())?;
        ensure(d >= i, || format!("psum at {n}"))?;
    }
    Ok(format!(
        "{} swept strings and forms, psum(diag,N) >= psum(inner,N) for N <= 14",
        rep.strings_checked + rep.forms_checked
    ))
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in walk(dir) {
        let rel = e.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        if rel != ".lock" {
            out.push((rel, fs::read(&e).unwrap()));
        }
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            v.extend(walk(&p));
        } else {
            v.push(p);
        }
    }
    v
}

fn reports(workers: &str) -> Result<Vec<String>, String> {
    let cmds: [&[&str]; 5] = [
        &["omega", "--n", "16", "--format", "json"],
        &["bb", "--n", "16", "--format", "csv"],
        &["verify", "witness", "--time-fn", "diag:poly:2,1"],
        &[
            "verify",
            "totality",
            "--time-fn",
            "diag:poly:2,1",
            "--horizon",
            "12",
        ],
        &["verify", "dominance", "--horizon", "20"],
    ];
    cmds.iter()
        .map(|c| {
            let head = ["sublab", "--workers", workers];
            let cli =
                Cli::try_parse_from(head.iter().chain(c.iter())).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            run(cli, &mut buf).map_err(|e| e.to_string())?;
            String::from_utf8(buf).map_err(|e| e.to_string())
        })
        .collect()
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (dir, workers) in [(a.path(), 1), (b.path(), MANY_WORKERS)] {
        let m = machine(workers);
        let mut c = Cache::open(dir).map_err(|e| e.to_string())?;
        m.sweep(&p21(), 18, Some(&mut c))
            .map_err(|e| e.to_string())?;
        m.sweep(&p12(), 18, Some(&mut c))
            .map_err(|e| e.to_string())?;
        m.sweep(&diag(), 14, Some(&mut c))
            .map_err(|e| e.to_string())?;
    }
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    ensure(ta == tb, || {
        "sweep artifacts differ between 1 and all workers".into()
    })?;
    let first = reports("1")?;
    let many = MANY_WORKERS.to_string();
    let second = reports(&many)?;
    let third = reports(&many)?;
    ensure(first == second && second == third, || {
        "reports differ between runs".into()
    })?;
    Ok(format!(
        "{} cache files byte-identical (1 vs {MANY_WORKERS} workers); {} reports identical over 3 runs",
        ta.len(),
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("codec laws", codec_laws),
        ("submachine totality and shift law", shift_law),
        ("omega properties and oracle", omega_properties),
        ("bb_plus identity", bb_identity),
        ("sub-incompressibility and dominance", incompressibility),
        ("pi_omega consistency", pi_omega_consistency),
        ("diagonal totality", diagonal_totality),
        ("witness", witness),
        ("extension law", extension_law),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
