//! String enumeration and the integer code.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::bits::{BitReader, BitStr};
use crate::error::{Error, Result};

/// Additive constant C′ of the integer-code length bound.
pub const NAT_C_PRIME: f64 = 3.0;
/// ε of the integer-code length bound.
pub const NAT_EPSILON: f64 = 1.0;

/// `l_k`: the k-th string in shortlex order, starting with `l_1 = "0"`.
///
/// The empty string is not part of the enumeration.
pub fn nth_string(k: u64) -> Result<BitStr> {
    if k == 0 {
        return Err(Error::Domain("the enumeration starts at k = 1".into()));
    }
    let m = k as u128 + 1;
    let len = 127 - m.leading_zeros() as usize;
    let mut out = BitStr::with_capacity(len);
    for i in (0..len).rev() {
        out.push((m >> i) & 1 == 1);
    }
    Ok(out)
}

/// [`nth_string`] for arbitrary-precision indices.
pub fn nth_string_big(k: &BigUint) -> Result<BitStr> {
    if k.is_zero() {
        return Err(Error::Domain("the enumeration starts at k = 1".into()));
    }
    let m = k + 1u32;
    let len = m.bits() as usize - 1;
    let mut out = BitStr::with_capacity(len);
    for i in (0..len).rev() {
        out.push(m.bit(i as u64));
    }
    Ok(out)
}

/// Inverse of [`nth_string`]: the value of `1·s` in binary, minus one.
pub fn index_of(s: &BitStr) -> Result<BigUint> {
    if s.is_empty() {
        return Err(Error::Domain("the empty string has no index".into()));
    }
    Ok(index_of_nonempty(s))
}

pub(crate) fn index_of_nonempty(s: &BitStr) -> BigUint {
    if let Some(v) = s.as_u64() {
        if s.len() < 64 {
            return BigUint::from((1u64 << s.len()) + v - 1);
        }
    }
    let mut m = BigUint::one();
    for b in s.iter() {
        m <<= 1u32;
        if b {
            m += 1u32;
        }
    }
    m - 1u32
}

/// `index_of` as a `u64`, when it fits.
pub fn index_of_u64(s: &BitStr) -> Option<u64> {
    index_of(s).ok()?.to_u64()
}

/// `index_of` extended with `index_of("") = 0`, i.e. `l_0` is the empty string.
pub fn index_of_total(s: &BitStr) -> BigUint {
    if s.is_empty() {
        BigUint::zero()
    } else {
        index_of_nonempty(s)
    }
}

/// The string U emits for the number `v`: `l_v`, with `l_0` the empty string.
pub fn number_string(v: &BigUint) -> BitStr {
    if v.is_zero() {
        BitStr::new()
    } else {
        nth_string_big(v).expect("v is positive")
    }
}

/// Inverse of [`number_string`].
pub fn string_number(s: &BitStr) -> BigUint {
    index_of_total(s)
}

/// Elias delta code of `n + 1`: prefix-free, defined for every `n ≥ 0`.
pub fn encode_nat(n: u64) -> BitStr {
    let mut out = BitStr::new();
    write_nat(&mut out, n);
    out
}

pub(crate) fn write_nat(out: &mut BitStr, n: u64) {
    let m = n as u128 + 1;
    let len = 128 - m.leading_zeros() as usize;
    // Elias gamma of the length
    let len_bits = usize::BITS as usize - len.leading_zeros() as usize;
    out.push_n(false, len_bits - 1);
    for i in (0..len_bits).rev() {
        out.push((len >> i) & 1 == 1);
    }
    for i in (0..len - 1).rev() {
        out.push((m >> i) & 1 == 1);
    }
}

/// Reads one integer codeword; `None` on truncation or overflow.
pub(crate) fn read_nat(r: &mut BitReader<'_>) -> Option<u64> {
    let zeros = r.read_run(false)?;
    if zeros > 7 {
        return None;
    }
    let mut len: usize = 1;
    for _ in 0..zeros {
        len = (len << 1) | r.read()? as usize;
    }
    if len > 65 {
        return None;
    }
    let mut m: u128 = 1;
    for _ in 0..len - 1 {
        m = (m << 1) | r.read()? as u128;
    }
    u64::try_from(m - 1).ok()
}

/// Decodes a complete integer codeword; trailing or missing bits are errors.
pub fn decode_nat(s: &BitStr) -> Result<u64> {
    let mut r = BitReader::new(s);
    let n = read_nat(&mut r).ok_or_else(|| Error::Decode(format!("malformed integer code {s}")))?;
    if r.remaining() != 0 {
        return Err(Error::Decode(format!(
            "{} trailing bits after integer code",
            r.remaining()
        )));
    }
    Ok(n)
}

/// Length of `encode_nat(n)` without building it.
pub fn nat_code_len(n: u64) -> usize {
    let m = n as u128 + 1;
    let len = 128 - m.leading_zeros() as usize;
    let len_bits = usize::BITS as usize - len.leading_zeros() as usize;
    2 * len_bits - 1 + len - 1
}

/// The published length bound `C′ + log₂N + (1+ε)·log₂(log₂N)`, for `N ≥ 2`.
pub fn nat_length_bound(n: u64) -> f64 {
    let l = (n as f64).log2();
    NAT_C_PRIME + l + (1.0 + NAT_EPSILON) * l.log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> BitStr {
        x.parse().unwrap()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(nth_string(1).unwrap(), s("0"));
        assert_eq!(nth_string(2).unwrap(), s("1"));
        assert_eq!(nth_string(5).unwrap(), s("10"));
        assert!(nth_string(0).is_err());
        assert_eq!(index_of(&s("0")).unwrap(), BigUint::from(1u32));
        assert_eq!(index_of(&s("1")).unwrap(), BigUint::from(2u32));
        assert_eq!(index_of(&s("00")).unwrap(), BigUint::from(3u32));
        assert!(index_of(&BitStr::new()).is_err());
    }

    #[test]
    fn enumeration_matches_hand_shortlex() {
        // shortlex by brute force: all strings by length, then by value
        let mut expect = Vec::new();
        for len in 1..=10usize {
            for v in 0..(1u64 << len) {
                expect.push(BitStr::from_u64(v, len));
            }
        }
        for (i, want) in expect.iter().enumerate() {
            assert_eq!(&nth_string(i as u64 + 1).unwrap(), want);
        }
    }

    #[test]
    fn big_index_agrees() {
        let long = BitStr::from_bools((0..130).map(|i| i % 5 == 1));
        let k = index_of(&long).unwrap();
        assert_eq!(nth_string_big(&k).unwrap(), long);
    }

    #[test]
    fn number_strings() {
        assert_eq!(number_string(&BigUint::from(0u32)), BitStr::new());
        assert_eq!(number_string(&BigUint::from(3u32)), s("00"));
        assert_eq!(string_number(&s("00")), BigUint::from(3u32));
        assert_eq!(string_number(&BitStr::new()), BigUint::from(0u32));
    }

    #[test]
    fn nat_codes() {
        assert_eq!(encode_nat(0), s("1"));
        assert_eq!(encode_nat(1), s("0100"));
        assert_eq!(encode_nat(2), s("0101"));
        assert_eq!(encode_nat(3), s("01100"));
        for n in [0, 1, 7, 1000, u64::MAX - 1, u64::MAX] {
            let c = encode_nat(n);
            assert_eq!(c.len(), nat_code_len(n));
            assert_eq!(decode_nat(&c).unwrap(), n);
        }
        assert!(decode_nat(&s("01")).is_err());
        assert!(decode_nat(&s("11")).is_err());
    }

    #[test]
    fn nat_bound_at_1000() {
        let c = encode_nat(1000);
        assert_eq!(c.len(), 16);
        assert!(c.len() as f64 <= NAT_C_PRIME + 10.0 + (1.0 + NAT_EPSILON) * 10f64.log2());
    }
}
