//! Python bindings: a `Machine` class over time-function spec strings, and
//! the codec helpers. Big integers cross as Python ints, exact fractions as
//! `(numerator, exponent)` pairs, reports as JSON strings.

use num_bigint::BigUint;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sublab::beaver::PiOmega;
use sublab::codec::{self, BitStr};
use sublab::{Dyadic, Error, TimeFn};

fn err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Encoding(_) | Error::Decode(_) | Error::TimeFn(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn tf(spec: &str) -> PyResult<TimeFn> {
    spec.parse().map_err(err)
}

fn bits(s: &str) -> PyResult<BitStr> {
    s.parse().map_err(err)
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// `(N, bb, bb_plus, witness bits)`.
type BBRow = (usize, BigUint, BigUint, Option<String>);

fn frac(d: &Dyadic) -> (BigUint, u32) {
    let n = d.normalized();
    (n.numerator().clone(), n.exponent())
}

/// The universal machine with its enumeration memo.
#[pyclass(name = "Machine", frozen)]
struct PyMachine {
    inner: sublab::Machine,
}

#[pymethods]
impl PyMachine {
    #[new]
    #[pyo3(signature = (capacity = sublab::vm::DEFAULT_CAPACITY, workers = 0, memo = true))]
    fn new(capacity: usize, workers: usize, memo: bool) -> PyResult<Self> {
        let inner = sublab::Machine::new(sublab::MachineConfig {
            capacity,
            memo,
            workers,
        })
        .map_err(err)?;
        Ok(PyMachine { inner })
    }

    /// Time bound of `w` under the time function `spec`.
    fn time_bound(&self, py: Python<'_>, spec: &str, w: &str) -> PyResult<u64> {
        let (t, w) = (tf(spec)?, bits(w)?);
        py.detach(|| self.inner.time_bound(&t, &w)).map_err(err)
    }

    /// `(value bits, numeric)` of the submachine output.
    fn eval_sub(&self, py: Python<'_>, spec: &str, w: &str) -> PyResult<(String, BigUint)> {
        let (t, w) = (tf(spec)?, bits(w)?);
        let s = py.detach(|| self.inner.eval_sub(&t, &w)).map_err(err)?;
        Ok((s.value.to_string(), s.numeric))
    }

    /// `psum(spec, n)` as `(numerator, exponent)`.
    fn psum(&self, py: Python<'_>, spec: &str, n: usize) -> PyResult<(BigUint, u32)> {
        let t = tf(spec)?;
        let d = py.detach(|| self.inner.psum(&t, n)).map_err(err)?;
        Ok(frac(&d))
    }

    fn bb(&self, py: Python<'_>, spec: &str, n: usize) -> PyResult<BigUint> {
        let t = tf(spec)?;
        py.detach(|| self.inner.bb(&t, n)).map_err(err)
    }

    fn bb_plus(&self, py: Python<'_>, spec: &str, n: usize) -> PyResult<BigUint> {
        let t = tf(spec)?;
        py.detach(|| self.inner.bb_plus(&t, n)).map_err(err)
    }

    /// BB table rows `(N, bb, bb_plus, witness bits or None)`.
    fn bb_table(&self, py: Python<'_>, spec: &str, n: usize) -> PyResult<Vec<BBRow>> {
        let t = tf(spec)?;
        let rows = py.detach(|| self.inner.bb_table(&t, n)).map_err(err)?;
        Ok(rows
            .into_iter()
            .map(|r| (r.level, r.bb, r.bb_plus, r.witness.map(|w| w.to_string())))
            .collect())
    }

    /// π′_Ω on `ρ = numerator / 2^exponent`: the value, or `None` when the
    /// scan diverges up to `guard`.
    fn pi_omega(
        &self,
        py: Python<'_>,
        spec: &str,
        numerator: BigUint,
        exponent: u32,
        guard: usize,
    ) -> PyResult<Option<BigUint>> {
        let t = tf(spec)?;
        let rho = Dyadic::new(numerator, exponent).map_err(err)?;
        match py
            .detach(|| self.inner.pi_omega(&t, &rho, guard))
            .map_err(err)?
        {
            PiOmega::Value { value, .. } => Ok(Some(value)),
            PiOmega::Diverged { .. } => Ok(None),
        }
    }

    /// Totality report of `diag:<inner>` as JSON.
    #[pyo3(signature = (inner, horizon, form_width = 2))]
    fn verify_totality(
        &self,
        py: Python<'_>,
        inner: &str,
        horizon: usize,
        form_width: usize,
    ) -> PyResult<String> {
        let t = tf(inner)?;
        let r = py
            .detach(|| self.inner.verify_totality(&t, horizon, form_width))
            .map_err(err)?;
        json(&r)
    }

    /// Witness report for `BB⁺(diag:<inner>, n)` as JSON.
    fn build_witness(&self, py: Python<'_>, inner: &str, n: usize) -> PyResult<String> {
        let t = tf(inner)?;
        let r = py.detach(|| self.inner.build_witness(&t, n)).map_err(err)?;
        json(&r)
    }

    fn dominance(&self, py: Python<'_>, spec: &str, horizon: usize) -> PyResult<String> {
        let t = tf(spec)?;
        let r = py
            .detach(|| self.inner.dominance(&t, horizon))
            .map_err(err)?;
        json(&r)
    }
}

#[pyfunction]
fn is_program(w: &str) -> PyResult<bool> {
    Ok(codec::is_program(&bits(w)?))
}

#[pyfunction]
fn encode_nat(n: u64) -> String {
    codec::encode_nat(n).to_string()
}

#[pyfunction]
fn decode_nat(w: &str) -> PyResult<u64> {
    codec::decode_nat(&bits(w)?).map_err(err)
}

/// The `k`-th string in shortlex order, `k ≥ 1`.
#[pyfunction]
fn nth_string(k: BigUint) -> PyResult<String> {
    codec::nth_string_big(&k)
        .map(|s| s.to_string())
        .map_err(err)
}

#[pyfunction]
fn index_of(w: &str) -> PyResult<BigUint> {
    codec::index_of(&bits(w)?).map_err(err)
}

#[pyfunction]
fn published_constants() -> String {
    codec::published_constants()
}

#[pymodule]
fn sublab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMachine>()?;
    m.add_function(wrap_pyfunction!(is_program, m)?)?;
    m.add_function(wrap_pyfunction!(encode_nat, m)?)?;
    m.add_function(wrap_pyfunction!(decode_nat, m)?)?;
    m.add_function(wrap_pyfunction!(nth_string, m)?)?;
    m.add_function(wrap_pyfunction!(index_of, m)?)?;
    m.add_function(wrap_pyfunction!(published_constants, m)?)?;
    Ok(())
}
