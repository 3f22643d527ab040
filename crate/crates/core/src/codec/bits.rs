use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

const WORD: usize = 64;

/// A finite binary string.
///
/// Bits are packed most-significant-first into 64-bit words; bits past `len`
/// in the last word are always zero, so derived equality and hashing are
/// bit-exact. Ordering is shortlex (shorter strings first, then
/// lexicographic), which is also the order of the string enumeration
/// `l_1, l_2, ...`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStr {
    words: Vec<u64>,
    len: usize,
}

impl BitStr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitStr {
            words: Vec::with_capacity(bits.div_ceil(WORD)),
            len: 0,
        }
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 takes at most 64 bits");
        if len == 0 {
            return BitStr::new();
        }
        let masked = if len == WORD {
            value
        } else {
            value & ((1u64 << len) - 1)
        };
        BitStr {
            words: vec![masked << (WORD - len)],
            len,
        }
    }

    pub fn zeros(len: usize) -> Self {
        BitStr {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = BitStr::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        if bit {
            let i = self.len;
            self.words[i / WORD] |= 1 << (WORD - 1 - i % WORD);
        }
        self.len += 1;
    }

    pub fn push_n(&mut self, bit: bool, n: usize) {
        for _ in 0..n {
            self.push(bit);
        }
    }

    pub fn extend_from(&mut self, other: &BitStr) {
        if self.len.is_multiple_of(WORD) {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn concat(&self, other: &BitStr) -> BitStr {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> BitStr {
        assert!(start <= end && end <= self.len);
        let mut out = BitStr::with_capacity(end - start);
        for i in start..end {
            out.push(self.get(i));
        }
        out
    }

    /// Removes trailing zero bits.
    pub fn trim_trailing_zeros(&mut self) {
        while self.len > 0 && !self.get(self.len - 1) {
            self.truncate(self.len - 1);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.words.truncate(len.div_ceil(WORD));
        let rem = len % WORD;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= !0u64 << (WORD - rem);
        }
    }

    pub fn starts_with(&self, prefix: &BitStr) -> bool {
        prefix.len <= self.len && (0..prefix.len).all(|i| self.get(i) == prefix.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// The bits as a `u64` when the string fits in one word.
    pub fn as_u64(&self) -> Option<u64> {
        if self.len > WORD {
            return None;
        }
        Some(match self.words.first() {
            Some(w) if self.len > 0 => w >> (WORD - self.len),
            _ => 0,
        })
    }

    /// Packed bytes, most significant bit first, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push((self.words[i / 8] >> (56 - 8 * (i % 8))) as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, Error> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Decode(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let mut out = BitStr::with_capacity(len);
        for i in 0..len {
            out.push((bytes[i / 8] >> (7 - i % 8)) & 1 == 1);
        }
        Ok(out)
    }
}

impl Ord for BitStr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.words.cmp(&other.words))
    }
}

impl PartialOrd for BitStr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitStr(\"{self}\")")
    }
}

impl FromStr for BitStr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitStr::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                '_' | ' ' => {}
                other => return Err(Error::Domain(format!("not a binary digit: {other:?}"))),
            }
        }
        Ok(out)
    }
}

/// Sequential reader over a [`BitStr`].
pub struct BitReader<'a> {
    bits: &'a BitStr,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitStr) -> Self {
        BitReader { bits, pos: 0 }
    }

    #[inline]
    pub fn pos(&self) -> usize {
        self.pos
    }

    #[inline]
    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    #[inline]
    pub fn read(&mut self) -> Option<bool> {
        if self.pos < self.bits.len() {
            let b = self.bits.get(self.pos);
            self.pos += 1;
            Some(b)
        } else {
            None
        }
    }

    /// Counts a run of `bit` and consumes the terminating opposite bit.
    pub fn read_run(&mut self, bit: bool) -> Option<usize> {
        let mut n = 0;
        loop {
            match self.read()? {
                b if b == bit => n += 1,
                _ => return Some(n),
            }
        }
    }

    pub fn read_bits(&mut self, n: usize) -> Option<BitStr> {
        if self.remaining() < n {
            return None;
        }
        let out = self.bits.slice(self.pos, self.pos + n);
        self.pos += n;
        Some(out)
    }

    pub fn read_u64(&mut self, n: usize) -> Option<u64> {
        if n > 64 || self.remaining() < n {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read()? as u64;
        }
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitStr {
        s.parse().unwrap()
    }

    #[test]
    fn display_round_trip() {
        for s in ["", "0", "1", "0110", &"10".repeat(70)] {
            assert_eq!(b(s).to_string(), s);
        }
    }

    #[test]
    fn shortlex_order() {
        let mut v = [b("10"), b("0"), b("111"), b("1"), b("00"), b("01")];
        v.sort();
        let got: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(got, ["0", "1", "00", "01", "10", "111"]);
    }

    #[test]
    fn truncate_clears_tail() {
        let mut x = b("1111");
        x.truncate(2);
        assert_eq!(x, b("11"));
        let mut y = b("1000");
        y.trim_trailing_zeros();
        assert_eq!(y, b("1"));
    }

    #[test]
    fn bytes_round_trip() {
        let x = b("1011001110001");
        assert_eq!(BitStr::from_bytes(&x.to_bytes(), x.len()).unwrap(), x);
    }

    #[test]
    fn concat_across_word_boundary() {
        let a = BitStr::from_bools((0..63).map(|i| i % 3 == 0));
        let c = b("101");
        let joined = a.concat(&c);
        assert_eq!(joined.len(), 66);
        assert_eq!(joined.slice(63, 66), c);
        assert_eq!(BitStr::from_u64(0b101, 3), c);
        assert_eq!(c.as_u64(), Some(5));
    }
}
