//! Exhaustive enumeration of programs with a persistent record cache and an
//! independent serial oracle.
//!
//! # Cache layout
//!
//! ```text
//! <dir>/manifest.json          format version, fingerprint, complete strata
//! <dir>/.lock                  advisory lock held by the running command
//! <dir>/<time fn>/<size>.rec   one record log per (time function, size)
//! ```
//!
//! A record log starts with a 6-byte header: the format version (1 byte),
//! the program size in bits (1 byte) and the width `W` of the output field
//! in bytes (u32 LE). Every record then has the same width:
//!
//! ```text
//! program   ceil(size / 8) bytes, MSB first, zero padded
//! bound     u64 LE
//! steps     u64 LE
//! flags     1 byte, bit 0 = halted within bound
//! output    W bytes, big-endian output index
//! ```
//!
//! Records are sorted by program. A stratum is listed in the manifest only
//! after its log is fully written, and only if its record count equals the
//! number of programs of that size. A fingerprint mismatch discards every
//! stratum.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{index_of_total, is_program, published_constants, BitStr};
use crate::error::{Error, Result};
use crate::omega::Dyadic;
use crate::submachine::TimeFn;
use crate::vm::{Machine, COST_SCHEDULE};

/// Version byte of the record log and the manifest.
pub const FORMAT_VERSION: u8 = 1;

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "SUBLAB_CACHE";

/// The submachine run of one program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    #[serde(serialize_with = "crate::serde_bits")]
    pub program: BitStr,
    pub time_fn_id: String,
    pub bound: u64,
    pub halted_in_bound: bool,
    /// Index of the raw output when halted, else 0.
    #[serde(serialize_with = "crate::serde_big")]
    pub output_index: BigUint,
    /// Steps taken; the bound when the run did not halt in time.
    pub steps: u64,
}

/// SHA-256 of the language constants and the cost schedule.
pub fn fingerprint() -> String {
    let mut h = Sha256::new();
    h.update(published_constants().as_bytes());
    h.update(COST_SCHEDULE.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Number of programs of exactly `n` bits, by parsing every string.
pub fn program_count(n: usize) -> u64 {
    (0..1usize << n)
        .into_par_iter()
        .filter(|&i| is_program(&BitStr::from_u64(i as u64, n)))
        .count() as u64
}

impl Machine {
    /// One record per program of exactly `n` bits, sorted by program.
    pub fn sweep_level(&self, tf: &TimeFn, n: usize) -> Result<Vec<RunRecord>> {
        if n > self.capacity() || n >= 64 {
            return Err(Error::Capacity {
                level: n,
                capacity: self.capacity(),
            });
        }
        let id = tf.id();
        self.install(|| {
            let mut out: Vec<RunRecord> = (0..1usize << n)
                .into_par_iter()
                .with_min_len(256)
                .filter_map(|i| {
                    let w = BitStr::from_u64(i as u64, n);
                    match self.eval_valid(tf, &w, None) {
                        Ok(None) => None,
                        Ok(Some(e)) => Some(Ok(record(&id, w, e.bound, e.halted))),
                        Err(err) => Some(Err(err)),
                    }
                })
                .collect::<Result<_>>()?;
            out.sort_by(|a, b| a.program.cmp(&b.program));
            Ok(out)
        })
    }

    /// Sweeps sizes `1..=n_max`, reading complete strata from the cache and
    /// storing the rest.
    pub fn sweep(
        &self,
        tf: &TimeFn,
        n_max: usize,
        mut cache: Option<&mut Cache>,
    ) -> Result<SweepSummary> {
        let mut strata = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let cached = match cache.as_deref() {
                Some(c) => c.load(tf, n)?,
                None => None,
            };
            let from_cache = cached.is_some();
            let records = match cached {
                Some(r) => r,
                None => {
                    let r = self.sweep_level(tf, n)?;
                    if let Some(c) = cache.as_deref_mut() {
                        c.store(tf, n, &r)?;
                    }
                    r
                }
            };
            strata.push(StratumSummary::of(n, &records, from_cache));
        }
        Ok(SweepSummary::new(tf, strata))
    }

    /// Recomputes sizes `1..=n` with a serial, memo-free machine and
    /// compares every record with the pipeline (the cache when one is
    /// given, else this machine).
    pub fn oracle_check(
        &self,
        tf: &TimeFn,
        n: usize,
        cache: Option<&Cache>,
    ) -> Result<OracleReport> {
        let oracle = Machine::oracle(self.capacity());
        let mut pipe = Vec::with_capacity(n);
        let mut orc = Vec::with_capacity(n);
        let mut first_mismatch = None;
        let mut mismatches = 0u64;
        for level in 1..=n {
            let p = match cache.map(|c| c.load(tf, level)).transpose()?.flatten() {
                Some(r) => r,
                None => self.sweep_level(tf, level)?,
            };
            let o = oracle.sweep_level(tf, level)?;
            let mut i = 0;
            let mut j = 0;
            // merge walk, so a missing or extra record is also a mismatch
            while i < p.len() || j < o.len() {
                let ord = match (p.get(i), o.get(j)) {
                    (Some(a), Some(b)) => a.program.cmp(&b.program),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    _ => std::cmp::Ordering::Greater,
                };
                let (bad, prog) = match ord {
                    std::cmp::Ordering::Equal => {
                        let r = (p[i] != o[j], p[i].program.clone());
                        i += 1;
                        j += 1;
                        r
                    }
                    std::cmp::Ordering::Less => {
                        i += 1;
                        (true, p[i - 1].program.clone())
                    }
                    std::cmp::Ordering::Greater => {
                        j += 1;
                        (true, o[j - 1].program.clone())
                    }
                };
                if bad {
                    mismatches += 1;
                    first_mismatch.get_or_insert_with(|| prog.to_string());
                }
            }
            pipe.push(StratumSummary::of(level, &p, false));
            orc.push(StratumSummary::of(level, &o, false));
        }
        let pipeline = SweepSummary::new(tf, pipe);
        let oracle = SweepSummary::new(tf, orc);
        Ok(OracleReport {
            time_fn: tf.id(),
            level: n,
            ok: mismatches == 0 && pipeline.totals() == oracle.totals(),
            psum_pipeline: pipeline.psum.fraction_string(),
            psum_oracle: oracle.psum.fraction_string(),
            bb_pipeline: pipeline.bb.clone(),
            bb_oracle: oracle.bb.clone(),
            bb_plus_pipeline: &pipeline.bb + 1u32,
            bb_plus_oracle: &oracle.bb + 1u32,
            mismatches,
            first_mismatch,
        })
    }
}

fn record(id: &str, program: BitStr, bound: u64, halted: Option<(BitStr, u64)>) -> RunRecord {
    match halted {
        Some((out, steps)) => RunRecord {
            program,
            time_fn_id: id.to_string(),
            bound,
            halted_in_bound: true,
            output_index: index_of_total(&out),
            steps,
        },
        None => RunRecord {
            program,
            time_fn_id: id.to_string(),
            bound,
            halted_in_bound: false,
            output_index: BigUint::zero(),
            steps: bound,
        },
    }
}

/// Aggregates of one size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratumSummary {
    pub size: usize,
    pub programs: u64,
    pub halting: u64,
    #[serde(serialize_with = "crate::serde_big")]
    pub max_output: BigUint,
    pub from_cache: bool,
}

impl StratumSummary {
    fn of(size: usize, records: &[RunRecord], from_cache: bool) -> Self {
        let halting = records.iter().filter(|r| r.halted_in_bound);
        StratumSummary {
            size,
            programs: records.len() as u64,
            halting: halting.clone().count() as u64,
            max_output: halting
                .map(|r| r.output_index.clone())
                .max()
                .unwrap_or_default(),
            from_cache,
        }
    }
}

/// psum and bb recomputed from sweep records.
#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub time_fn: String,
    pub psum: Dyadic,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb: BigUint,
    pub strata: Vec<StratumSummary>,
}

impl SweepSummary {
    fn new(tf: &TimeFn, strata: Vec<StratumSummary>) -> Self {
        let mut psum = Dyadic::zero();
        let mut bb = BigUint::zero();
        for s in &strata {
            psum += &Dyadic::from_count(s.halting, s.size as u32).expect("count fits the size");
            bb = bb.max(s.max_output.clone());
        }
        SweepSummary {
            time_fn: tf.id(),
            psum,
            bb,
            strata,
        }
    }

    fn totals(&self) -> (Dyadic, BigUint) {
        (self.psum.clone(), self.bb.clone())
    }
}

/// Oracle comparison at one level.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub time_fn: String,
    pub level: usize,
    pub ok: bool,
    pub psum_pipeline: String,
    pub psum_oracle: String,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_pipeline: BigUint,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_oracle: BigUint,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_plus_pipeline: BigUint,
    #[serde(serialize_with = "crate::serde_big")]
    pub bb_plus_oracle: BigUint,
    pub mismatches: u64,
    /// The smallest differing program of the first differing size.
    pub first_mismatch: Option<String>,
}

/// Manifest of a cache directory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub format_version: u8,
    pub fingerprint: String,
    /// Complete strata: time function id → size → record count.
    pub strata: BTreeMap<String, BTreeMap<usize, u64>>,
}

/// A cache directory, locked for the lifetime of the value.
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    manifest: CacheManifest,
    _lock: File,
}

impl Cache {
    /// Opens or creates a cache, taking its advisory lock. A manifest with
    /// another version or fingerprint is discarded with its strata.
    pub fn open(dir: impl AsRef<Path>) -> Result<Cache> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let lock = File::create(dir.join(".lock"))?;
        lock.try_lock()
            .map_err(|_| Error::Cache(format!("{} is in use by another command", dir.display())))?;
        let fresh = CacheManifest {
            format_version: FORMAT_VERSION,
            fingerprint: fingerprint(),
            strata: BTreeMap::new(),
        };
        let path = dir.join("manifest.json");
        let manifest = match fs::read(&path) {
            Ok(bytes) => match serde_json::from_slice::<CacheManifest>(&bytes) {
                Ok(m)
                    if m.format_version == fresh.format_version
                        && m.fingerprint == fresh.fingerprint =>
                {
                    m
                }
                _ => {
                    for entry in fs::read_dir(&dir)? {
                        let entry = entry?;
                        if entry.file_type()?.is_dir() {
                            fs::remove_dir_all(entry.path())?;
                        }
                    }
                    fresh
                }
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => fresh,
            Err(e) => return Err(e.into()),
        };
        let cache = Cache {
            dir,
            manifest,
            _lock: lock,
        };
        cache.write_manifest()?;
        Ok(cache)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &CacheManifest {
        &self.manifest
    }

    pub fn is_complete(&self, tf: &TimeFn, size: usize) -> bool {
        self.manifest
            .strata
            .get(&tf.id())
            .is_some_and(|m| m.contains_key(&size))
    }

    /// Path of the record log of one stratum.
    pub fn stratum_path(&self, tf: &TimeFn, size: usize) -> PathBuf {
        let name: String = tf
            .id()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        self.dir.join(name).join(format!("{size}.rec"))
    }

    /// Records of a complete stratum, `None` if the stratum is absent.
    pub fn load(&self, tf: &TimeFn, size: usize) -> Result<Option<Vec<RunRecord>>> {
        let Some(&count) = self
            .manifest
            .strata
            .get(&tf.id())
            .and_then(|m| m.get(&size))
        else {
            return Ok(None);
        };
        let mut bytes = Vec::new();
        File::open(self.stratum_path(tf, size))?.read_to_end(&mut bytes)?;
        let records = decode_log(&bytes, &tf.id(), size)?;
        if records.len() as u64 != count {
            return Err(Error::Cache(format!(
                "stratum {} size {size}: {} records, manifest says {count}",
                tf.id(),
                records.len()
            )));
        }
        Ok(Some(records))
    }

    /// Writes a stratum and marks it complete.
    pub fn store(&mut self, tf: &TimeFn, size: usize, records: &[RunRecord]) -> Result<()> {
        let expected = program_count(size);
        if records.len() as u64 != expected {
            return Err(Error::Cache(format!(
                "stratum {} size {size}: {} records for {expected} programs",
                tf.id(),
                records.len()
            )));
        }
        let path = self.stratum_path(tf, size);
        fs::create_dir_all(path.parent().expect("stratum path has a parent"))?;
        let tmp = path.with_extension("rec.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            w.write_all(&encode_log(size, records)?)?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        self.manifest
            .strata
            .entry(tf.id())
            .or_default()
            .insert(size, records.len() as u64);
        self.write_manifest()
    }

    fn write_manifest(&self) -> Result<()> {
        let tmp = self.dir.join("manifest.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&self.manifest)?)?;
        fs::rename(&tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}

fn encode_log(size: usize, records: &[RunRecord]) -> Result<Vec<u8>> {
    let width = records
        .iter()
        .map(|r| {
            if r.output_index.is_zero() {
                0
            } else {
                r.output_index.to_bytes_be().len()
            }
        })
        .max()
        .unwrap_or(0);
    let size_byte =
        u8::try_from(size).map_err(|_| Error::Cache(format!("size {size} too large")))?;
    let prog_len = size.div_ceil(8);
    let mut out = Vec::with_capacity(6 + records.len() * (prog_len + 17 + width));
    out.push(FORMAT_VERSION);
    out.push(size_byte);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    for r in records {
        debug_assert_eq!(r.program.len(), size);
        out.extend_from_slice(&r.program.to_bytes());
        out.extend_from_slice(&r.bound.to_le_bytes());
        out.extend_from_slice(&r.steps.to_le_bytes());
        out.push(r.halted_in_bound as u8);
        let v = if r.output_index.is_zero() {
            Vec::new()
        } else {
            r.output_index.to_bytes_be()
        };
        out.extend(std::iter::repeat_n(0u8, width - v.len()));
        out.extend_from_slice(&v);
    }
    Ok(out)
}

fn decode_log(bytes: &[u8], id: &str, size: usize) -> Result<Vec<RunRecord>> {
    let bad = |m: &str| Error::Cache(format!("record log {id} size {size}: {m}"));
    if bytes.len() < 6 {
        return Err(bad("truncated header"));
    }
    if bytes[0] != FORMAT_VERSION {
        return Err(bad("unknown format version"));
    }
    if bytes[1] as usize != size {
        return Err(bad("size mismatch"));
    }
    let width = u32::from_le_bytes(bytes[2..6].try_into().expect("4 bytes")) as usize;
    let prog_len = size.div_ceil(8);
    let rec_len = prog_len + 17 + width;
    let body = &bytes[6..];
    if !body.len().is_multiple_of(rec_len) {
        return Err(bad("truncated record"));
    }
    body.chunks_exact(rec_len)
        .map(|c| {
            let program = BitStr::from_bytes(&c[..prog_len], size)?;
            let u64_at = |i: usize| u64::from_le_bytes(c[i..i + 8].try_into().expect("8 bytes"));
            let flags = c[prog_len + 16];
            if flags > 1 {
                return Err(bad("bad flags"));
            }
            Ok(RunRecord {
                program,
                time_fn_id: id.to_string(),
                bound: u64_at(prog_len),
                steps: u64_at(prog_len + 8),
                halted_in_bound: flags == 1,
                output_index: BigUint::from_bytes_be(&c[prog_len + 17..]),
            })
        })
        .collect()
}
