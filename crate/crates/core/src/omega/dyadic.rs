use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::codec::BitStr;
use crate::error::{Error, Result};

/// An exact binary fraction `numerator / 2^exponent` in `[0, 1]`.
///
/// The representation is kept as given (padding with trailing zeros raises
/// the exponent); equality, ordering and hashing are by value.
#[derive(Clone)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            numerator: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            numerator: BigUint::one(),
            exponent: 0,
        }
    }

    pub fn new(numerator: BigUint, exponent: u32) -> Result<Self> {
        if numerator > (BigUint::one() << exponent) {
            return Err(Error::Domain(format!(
                "{numerator}/2^{exponent} is larger than 1"
            )));
        }
        Ok(Dyadic {
            numerator,
            exponent,
        })
    }

    /// `2^-exponent`.
    pub fn unit(exponent: u32) -> Self {
        Dyadic {
            numerator: BigUint::one(),
            exponent,
        }
    }

    /// `count / 2^exponent`; used for per-level halting mass.
    pub fn from_count(count: u64, exponent: u32) -> Result<Self> {
        Dyadic::new(BigUint::from(count), exponent)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Same value with the smallest exponent.
    pub fn normalized(&self) -> Self {
        if self.numerator.is_zero() {
            return Dyadic::zero();
        }
        let tz = self
            .numerator
            .trailing_zeros()
            .unwrap_or(0)
            .min(self.exponent as u64) as u32;
        Dyadic {
            numerator: &self.numerator >> tz,
            exponent: self.exponent - tz,
        }
    }

    /// Same value written with `exponent` mantissa bits (trailing-zero padding).
    pub fn padded_to(&self, exponent: u32) -> Result<Self> {
        let n = self.normalized();
        if exponent < n.exponent {
            return Err(Error::Domain(format!(
                "{} needs at least {} mantissa bits",
                self, n.exponent
            )));
        }
        Ok(Dyadic {
            numerator: n.numerator << (exponent - n.exponent),
            exponent,
        })
    }

    /// The `exponent` bits after the binary point. Only meaningful for values
    /// below 1; the value 1 has no finite mantissa in this layout.
    pub fn mantissa(&self) -> Result<BitStr> {
        if self.numerator >= (BigUint::one() << self.exponent) && !self.numerator.is_zero() {
            return Err(Error::Encoding(
                "1 has no mantissa below the binary point".into(),
            ));
        }
        let mut out = BitStr::with_capacity(self.exponent as usize);
        for i in (0..self.exponent as u64).rev() {
            out.push(self.numerator.bit(i));
        }
        Ok(out)
    }

    /// Parses the mantissa `b1 b2 … bm` of `0.b1…bm₂`.
    pub fn from_mantissa(bits: &BitStr) -> Self {
        let mut numerator = BigUint::zero();
        for b in bits.iter() {
            numerator <<= 1u32;
            if b {
                numerator += 1u32;
            }
        }
        Dyadic {
            numerator,
            exponent: bits.len() as u32,
        }
    }

    /// Exact `"p/2^e"` form of the normalized value.
    pub fn fraction_string(&self) -> String {
        let n = self.normalized();
        format!("{}/2^{}", n.numerator, n.exponent)
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.normalized();
        let bits = n.numerator.bits();
        if bits <= 53 && n.exponent < 1000 {
            let num: u64 = n.numerator.iter_u64_digits().next().unwrap_or(0);
            num as f64 / 2f64.powi(n.exponent as i32)
        } else {
            let shift = bits.saturating_sub(53);
            let top = (&n.numerator >> shift)
                .iter_u64_digits()
                .next()
                .unwrap_or(0);
            top as f64 * 2f64.powi(shift as i32 - n.exponent as i32)
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::hash::Hash for Dyadic {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let n = self.normalized();
        n.numerator.hash(state);
        n.exponent.hash(state);
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        Dyadic {
            numerator: (&self.numerator << (e - self.exponent))
                + (&rhs.numerator << (e - rhs.exponent)),
            exponent: e,
        }
    }
}

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.normalized();
        if n.numerator.is_zero() {
            return f.write_str("0");
        }
        if n.exponent == 0 {
            return f.write_str("1");
        }
        write!(f, "0.{}", n.mantissa().map_err(|_| fmt::Error)?)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({}/2^{})", self.numerator, self.exponent)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.fraction_string())
    }
}
