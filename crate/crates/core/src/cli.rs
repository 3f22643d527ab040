//! The `sublab` command line.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 usage error,
//! 3 π′_Ω diverged up to its guard.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::beaver::{bb_csv, bb_json, PiOmega};
use crate::codec::BitStr;
use crate::enumerator::{Cache, CACHE_ENV};
use crate::error::{Error, Result};
use crate::omega::{omega_csv, omega_json, Dyadic};
use crate::submachine::TimeFn;
use crate::vm::{Machine, MachineConfig, DEFAULT_CAPACITY};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

/// Default horizon: 20 bits for polynomial families, 14 for diagonals.
pub fn default_horizon(tf: &TimeFn) -> usize {
    if tf.is_diagonal() || tf.inner().is_some() {
        14
    } else {
        20
    }
}

/// Parses ρ exactly. `0` and `1` are the values themselves, a string with
/// a point is binary notation (`0.0110`), anything else is the mantissa
/// after the point (`0110`).
pub fn parse_rho(s: &str) -> Result<Dyadic> {
    let s = s.trim();
    let bits = |t: &str| -> Result<BitStr> {
        t.parse()
            .map_err(|_| Error::Domain(format!("rho {s:?} is not a binary fraction")))
    };
    match s {
        "0" => return Ok(Dyadic::zero()),
        "1" => return Ok(Dyadic::one()),
        _ => {}
    }
    match s.split_once('.') {
        Some(("0", frac)) => Ok(Dyadic::from_mantissa(&bits(frac)?)),
        Some(("1", frac)) if frac.chars().all(|c| c == '0') => Ok(Dyadic::one()),
        Some(_) => Err(Error::Domain(format!("rho {s:?} is not in [0, 1]"))),
        None => Ok(Dyadic::from_mantissa(&bits(s)?)),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sublab",
    version,
    about = "Time-bounded submachines, Ω approximations and BB⁺"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Cache directory.
    #[arg(long, global = true, env = CACHE_ENV)]
    pub cache: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Largest program size the machine may enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_CAPACITY)]
    pub capacity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TfArg {
    /// Time function: poly:c,k, diag:<tf> or star(<outer>;<inner>).
    #[arg(long = "time-fn", default_value = "poly:2,1", value_parser = parse_tf)]
    pub time_fn: TimeFn,
}

fn parse_tf(s: &str) -> Result<TimeFn> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// psum(tf, N) for N = 0..=n.
    Omega {
        #[command(flatten)]
        tf: TfArg,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// BB and BB⁺ for N = 0..=n with attaining programs.
    Bb {
        #[command(flatten)]
        tf: TfArg,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// π′_Ω on a binary fraction ρ.
    PiOmega {
        #[command(flatten)]
        tf: TfArg,
        /// ρ as `0`, `1`, `0.0110` or the mantissa `0110`.
        #[arg(long, value_parser = parse_rho)]
        rho: Dyadic,
        /// Largest level scanned; defaults to the horizon.
        #[arg(long)]
        guard: Option<usize>,
    },
    /// Run a verification suite and print its JSON report.
    Verify {
        which: Suite,
        #[command(flatten)]
        tf: TfArg,
        /// Sweep horizon (totality, dominance).
        #[arg(long)]
        horizon: Option<usize>,
        /// Largest level checked (witness, incompressibility, oracle).
        #[arg(long)]
        n: Option<usize>,
        /// Widest ρ mantissa of the targeted π′_Ω forms (totality).
        #[arg(long, default_value_t = 2)]
        form_width: usize,
    },
    /// Enumerate every program up to n bits, through the cache if set.
    Sweep {
        #[command(flatten)]
        tf: TfArg,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Write omega and BB tables as CSV and JSON into a directory.
    Export {
        #[command(flatten)]
        tf: TfArg,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Totality,
    Witness,
    Dominance,
    Incompressibility,
    Oracle,
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let mut out = std::io::stdout().lock();
    match run(cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

/// Runs one parsed command, writing its output to `out`.
pub fn run(cli: Cli, out: &mut impl std::io::Write) -> Result<u8> {
    let g = cli.global;
    let machine = Machine::new(MachineConfig {
        capacity: g.capacity,
        memo: true,
        workers: g.workers,
    })?;
    let mut cache = g.cache.as_ref().map(Cache::open).transpose()?;
    match cli.command {
        Command::Omega { tf, n } => {
            let rows = machine.omega_table(&tf.time_fn, n)?;
            let text = match g.format {
                Format::Csv => omega_csv(&rows)?,
                Format::Json => omega_json(&rows)?,
                Format::Text => {
                    let mut s = format!("# psum({}, N)\n", tf.time_fn);
                    for r in &rows {
                        s.push_str(&format!(
                            "{:>3}  {}  {}\n",
                            r.level,
                            r.value,
                            r.value.fraction_string()
                        ));
                    }
                    s
                }
            };
            write!(out, "{text}")?;
            Ok(EXIT_OK)
        }
        Command::Bb { tf, n } => {
            let rows = machine.bb_table(&tf.time_fn, n)?;
            let text = match g.format {
                Format::Csv => bb_csv(&rows)?,
                Format::Json => bb_json(&tf.time_fn, &rows)?,
                Format::Text => {
                    let mut s = format!("# BB({0}, N), BB+({0}, N)\n", tf.time_fn);
                    for r in &rows {
                        let wit = r.witness.as_ref().map_or("-".into(), |w| w.to_string());
                        s.push_str(&format!(
                            "{:>3}  {}  {}  {}\n",
                            r.level, r.bb, r.bb_plus, wit
                        ));
                    }
                    s
                }
            };
            write!(out, "{text}")?;
            Ok(EXIT_OK)
        }
        Command::PiOmega { tf, rho, guard } => {
            let guard = guard.unwrap_or_else(|| default_horizon(&tf.time_fn).min(g.capacity));
            let res = machine.pi_omega(&tf.time_fn, &rho, guard)?;
            match g.format {
                Format::Json => writeln!(out, "{}", json(&res)?)?,
                _ => match &res {
                    PiOmega::Value { value, level } => writeln!(out, "{value}\t(level {level})")?,
                    PiOmega::Diverged { guard } => {
                        writeln!(out, "diverged: psum stays below {rho} up to level {guard}")?
                    }
                },
            }
            Ok(match res {
                PiOmega::Value { .. } => EXIT_OK,
                PiOmega::Diverged { .. } => EXIT_DIVERGED,
            })
        }
        Command::Verify {
            which,
            tf,
            horizon,
            n,
            form_width,
        } => {
            let tf = tf.time_fn;
            let (ok, report) = match which {
                Suite::Totality => {
                    let inner = diagonal_inner(&tf)?;
                    let r = machine.verify_totality(&inner, horizon.unwrap_or(14), form_width)?;
                    (r.total, json(&r)?)
                }
                Suite::Witness => {
                    let inner = diagonal_inner(&tf)?;
                    let r = machine.witness_suite(&inner, n.unwrap_or(8))?;
                    (r.ok, json(&r)?)
                }
                Suite::Dominance => {
                    let r = machine.dominance(&tf, horizon.unwrap_or(22))?;
                    (r.ok, json(&r)?)
                }
                Suite::Incompressibility => {
                    let r = machine.incompressibility(&tf, n.unwrap_or(12))?;
                    (r.ok, json(&r)?)
                }
                Suite::Oracle => {
                    let n = n.unwrap_or(12);
                    if let Some(c) = cache.as_mut() {
                        machine.sweep(&tf, n, Some(c))?;
                    }
                    let r = machine.oracle_check(&tf, n, cache.as_ref())?;
                    (r.ok, json(&r)?)
                }
            };
            writeln!(out, "{report}")?;
            Ok(if ok { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Sweep { tf, n } => {
            let n = n.unwrap_or_else(|| default_horizon(&tf.time_fn));
            let s = machine.sweep(&tf.time_fn, n, cache.as_mut())?;
            match g.format {
                Format::Text => {
                    writeln!(out, "# sweep {} up to {n} bits", s.time_fn)?;
                    for st in &s.strata {
                        writeln!(
                            out,
                            "{:>3}  programs {}  halting {}  max output {}{}",
                            st.size,
                            st.programs,
                            st.halting,
                            st.max_output,
                            if st.from_cache { "  (cached)" } else { "" }
                        )?;
                    }
                    writeln!(out, "psum {}  bb {}", s.psum, s.bb)?;
                }
                _ => writeln!(out, "{}", json(&s)?)?,
            }
            Ok(EXIT_OK)
        }
        Command::Export { tf, n, out: dir } => {
            std::fs::create_dir_all(&dir)?;
            let omega = machine.omega_table(&tf.time_fn, n)?;
            let bb = machine.bb_table(&tf.time_fn, n)?;
            std::fs::write(dir.join("omega.csv"), omega_csv(&omega)?)?;
            std::fs::write(dir.join("omega.json"), omega_json(&omega)?)?;
            std::fs::write(dir.join("bb.csv"), bb_csv(&bb)?)?;
            std::fs::write(dir.join("bb.json"), bb_json(&tf.time_fn, &bb)?)?;
            writeln!(
                out,
                "wrote omega and bb tables for {} to {}",
                tf.time_fn,
                dir.display()
            )?;
            Ok(EXIT_OK)
        }
    }
}

fn diagonal_inner(tf: &TimeFn) -> Result<TimeFn> {
    tf.inner()
        .filter(|_| tf.is_diagonal())
        .cloned()
        .ok_or_else(|| Error::TimeFn(format!("{tf} is not a diagonal time function")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String) {
        let cli =
            Cli::try_parse_from(std::iter::once("sublab").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = run(cli, &mut buf).unwrap();
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn rho_parsing_is_exact() {
        assert_eq!(parse_rho("0").unwrap(), Dyadic::zero());
        assert_eq!(parse_rho("1").unwrap(), Dyadic::one());
        assert_eq!(parse_rho("1.000").unwrap(), Dyadic::one());
        assert_eq!(
            parse_rho("0110").unwrap(),
            Dyadic::from_mantissa(&"0110".parse().unwrap())
        );
        assert_eq!(parse_rho("0.0110").unwrap(), parse_rho("011").unwrap());
        assert!(parse_rho("0.2").is_err());
        assert!(parse_rho("1.1").is_err());
    }

    #[test]
    fn omega_rows() {
        let (code, text) = run_args(&["omega", "--n", "0", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(text, "level,mantissa_bits,exact_fraction\n0,,0/2^0\n");
        let (_, text) = run_args(&["omega", "--n", "10", "--format", "csv"]);
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn pi_omega_exit_codes() {
        assert_eq!(
            run_args(&["pi-omega", "--rho", "0"]),
            (EXIT_OK, "0\t(level 0)\n".into())
        );
        let (code, _) = run_args(&["pi-omega", "--rho", "1", "--guard", "20"]);
        assert_eq!(code, EXIT_DIVERGED);
    }

    #[test]
    fn usage_errors() {
        let e = Cli::try_parse_from(["sublab", "omega", "--time-fn", "poly:0,1"]).unwrap_err();
        assert!(e.use_stderr());
        assert!(Cli::try_parse_from(["sublab", "verify", "everything"]).is_err());
    }
}
