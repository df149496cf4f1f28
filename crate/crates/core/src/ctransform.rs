//! Generalized binary representation of an integer over a delay sequence.
//!
//! The C-transform of `x` over `d = (d_1, ..., d_M)` is computed greedily
//! from the largest index down: bit `i` is set when the residual is at least
//! `d_i`. For `d_i = 2^(i-1)` this is the ordinary binary expansion. Every
//! `0 <= x <= sum(d)` reconstructs exactly iff the sequence is in class A
//! (`d_1 = 1`, `d_{i+1} <= d_1 + ... + d_i + 1`).
//!
//! Bits are stored 0-based (`bits[0]` is `I_1`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on `sum(d)` for any operation that scans every value.
pub const DEFAULT_SCAN_LIMIT: u64 = 1 << 20;

/// An ordered sequence of positive fiber delays, in time slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DelaySeq {
    delays: Vec<u64>,
    total: u64,
}

impl DelaySeq {
    pub fn new(delays: Vec<u64>) -> Result<Self> {
        let mut total = 0u64;
        for (index, &d) in delays.iter().enumerate() {
            if d == 0 {
                return Err(Error::ZeroDelay { index });
            }
            total = total
                .checked_add(d)
                .ok_or(Error::Overflow("summing delays"))?;
        }
        Ok(Self { delays, total })
    }

    pub fn empty() -> Self {
        Self {
            delays: Vec::new(),
            total: 0,
        }
    }

    /// `(1, 2, 4, ..., 2^(m-1))`.
    pub fn powers_of_two(m: usize) -> Result<Self> {
        let delays = (0..m)
            .map(|i| {
                1u64.checked_shl(i as u32)
                    .filter(|_| i < 64)
                    .ok_or(Error::Overflow("building powers of two"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(delays)
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.delays
    }

    /// The first `len` delays.
    pub fn prefix(&self, len: usize) -> DelaySeq {
        let delays = self.delays[..len].to_vec();
        let total = delays.iter().sum();
        DelaySeq { delays, total }
    }

    /// 1-based accessor, matching the usual `d_i` notation.
    pub fn get(&self, i: usize) -> u64 {
        self.delays[i - 1]
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.delays.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn last(&self) -> Option<u64> {
        self.delays.last().copied()
    }
}

impl TryFrom<Vec<u64>> for DelaySeq {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DelaySeq> for Vec<u64> {
    fn from(d: DelaySeq) -> Self {
        d.delays
    }
}

impl fmt::Display for DelaySeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.delays.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// Route bits of a value plus the value they reconstruct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representation {
    #[serde(rename = "x")]
    pub value: u64,
    pub bits: Vec<u8>,
    /// What was left after the last bit; zero whenever the sequence is in class A.
    #[serde(skip)]
    pub residual: u64,
}

impl Representation {
    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|&b| u32::from(b)).sum()
    }
}

/// Popcount and residual of the greedy transform without allocating.
#[inline]
pub(crate) fn popcount_residual(mut x: u64, delays: &[u64]) -> (u32, u64) {
    let mut ones = 0;
    for &d in delays.iter().rev() {
        if x >= d {
            x -= d;
            ones += 1;
        }
    }
    (ones, x)
}

#[inline]
pub(crate) fn popcount_of(x: u64, delays: &[u64]) -> u32 {
    popcount_residual(x, delays).0
}

pub fn c_transform(x: u64, d: &DelaySeq) -> Result<Representation> {
    if x > d.total() {
        return Err(Error::Range { x, total: d.total() });
    }
    let mut bits = vec![0u8; d.len()];
    let mut residual = x;
    for (i, &di) in d.as_slice().iter().enumerate().rev() {
        if residual >= di {
            residual -= di;
            bits[i] = 1;
        }
    }
    Ok(Representation {
        value: x - residual,
        bits,
        residual,
    })
}

pub fn reconstruct(bits: &[u8], d: &DelaySeq) -> Result<u64> {
    if bits.len() != d.len() {
        return Err(Error::LengthMismatch {
            bits: bits.len(),
            delays: d.len(),
        });
    }
    bits.iter()
        .zip(d.as_slice())
        .filter(|(&b, _)| b != 0)
        .try_fold(0u64, |acc, (_, &di)| acc.checked_add(di))
        .ok_or(Error::Overflow("reconstructing a representation"))
}

pub fn in_class_a(d: &DelaySeq) -> bool {
    let s = d.as_slice();
    if s.is_empty() {
        return true;
    }
    if s[0] != 1 {
        return false;
    }
    let mut prefix = 0u64;
    for w in s.windows(2) {
        prefix += w[0];
        if w[1] > prefix + 1 {
            return false;
        }
    }
    true
}

pub fn in_class_b(d: &DelaySeq) -> bool {
    let s = d.as_slice();
    if s.is_empty() {
        return true;
    }
    s[0] == 1
        && s.windows(2)
            .all(|w| w[0] <= w[1] && w[1] as u128 <= 2 * w[0] as u128)
}

/// Brute-force check that every `0..=sum(d)` round-trips through the transform.
pub fn unique_representation_check(d: &DelaySeq) -> Result<bool> {
    unique_representation_check_limited(d, DEFAULT_SCAN_LIMIT)
}

pub fn unique_representation_check_limited(d: &DelaySeq, limit: u64) -> Result<bool> {
    if d.total() > limit {
        return Err(Error::ScanLimit {
            total: d.total(),
            limit,
        });
    }
    Ok((0..=d.total()).all(|x| popcount_residual(x, d.as_slice()).1 == 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u64]) -> DelaySeq {
        DelaySeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn table_rows() {
        let r = c_transform(12, &seq(&[1, 2, 3, 5, 6, 8])).unwrap();
        assert_eq!(r.bits, vec![1, 0, 1, 0, 0, 1]);
        assert_eq!(r.value, 12);

        let g = seq(&[1, 2, 3, 6, 10, 14]);
        assert_eq!(c_transform(17, &g).unwrap().bits, vec![0, 0, 1, 0, 0, 1]);
        let r18 = c_transform(18, &g).unwrap();
        assert_eq!(r18.bits, vec![1, 0, 1, 0, 0, 1]);
        assert_eq!(r18.popcount(), 3);

        assert_eq!(c_transform(0, &seq(&[1, 2, 3])).unwrap().bits, vec![0, 0, 0]);
    }

    #[test]
    fn range_and_empty() {
        let d = seq(&[1, 2]);
        assert_eq!(c_transform(4, &d), Err(Error::Range { x: 4, total: 3 }));
        let e = DelaySeq::empty();
        assert_eq!(c_transform(0, &e).unwrap().bits, Vec::<u8>::new());
        assert!(c_transform(1, &e).is_err());
    }

    #[test]
    fn zero_delay_rejected() {
        assert_eq!(DelaySeq::new(vec![1, 0]), Err(Error::ZeroDelay { index: 1 }));
        assert!(DelaySeq::new(vec![u64::MAX, 1]).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        assert_eq!(
            reconstruct(&[1, 0, 1, 0, 0, 1], &seq(&[1, 2, 3, 5, 6, 8])).unwrap(),
            12
        );
        assert_eq!(reconstruct(&[0, 0, 0], &seq(&[4, 9, 1])).unwrap(), 0);
        assert_eq!(
            reconstruct(&[1; 6], &seq(&[1, 2, 3, 6, 10, 14])).unwrap(),
            1 + 2 + 3 + 6 + 10 + 14
        );
        assert_eq!(
            reconstruct(&[1, 0], &seq(&[1, 2, 3])),
            Err(Error::LengthMismatch { bits: 2, delays: 3 })
        );
    }

    #[test]
    fn class_membership() {
        assert!(in_class_a(&seq(&[1, 2, 3, 5, 6, 8])));
        assert!(!in_class_a(&seq(&[1, 3])));
        assert!(in_class_a(&seq(&[1, 2, 4, 8, 16, 32])));
        assert!(in_class_a(&DelaySeq::empty()));
        assert!(!in_class_a(&seq(&[2])));

        assert!(in_class_b(&seq(&[1, 2, 4, 8])));
        // Every adjacent ratio of (1,2,3,5,6,8) is within [1, 2].
        assert!(in_class_b(&seq(&[1, 2, 3, 5, 6, 8])));
        assert!(!in_class_b(&seq(&[1, 2, 3, 7])));
        assert!(in_class_b(&seq(&[1, 2, 3, 6, 10, 14])));
        assert!(!in_class_b(&seq(&[1, 1, 3])));
    }

    #[test]
    fn unique_representation_examples() {
        assert!(unique_representation_check(&seq(&[1, 2, 3, 5, 6, 8])).unwrap());
        assert!(unique_representation_check(&seq(&[1, 1])).unwrap());
        assert!(!unique_representation_check(&seq(&[1, 3])).unwrap());
        // x = 2 over (1,3) takes d_1 and is left with residual 1.
        let r = c_transform(2, &seq(&[1, 3])).unwrap();
        assert_eq!((r.bits.clone(), r.value, r.residual), (vec![1, 0], 1, 1));
        assert!(matches!(
            unique_representation_check_limited(&seq(&[1, 2, 4]), 6),
            Err(Error::ScanLimit { total: 7, limit: 6 })
        ));
    }

    #[test]
    fn binary_specialization() {
        for m in 0..=10 {
            let d = DelaySeq::powers_of_two(m).unwrap();
            for x in 0..(1u64 << m) {
                let r = c_transform(x, &d).unwrap();
                let expect: Vec<u8> = (0..m).map(|i| ((x >> i) & 1) as u8).collect();
                assert_eq!(r.bits, expect);
            }
        }
    }

    #[test]
    fn json_shapes() {
        let d = seq(&[1, 2, 3]);
        assert_eq!(serde_json::to_string(&d).unwrap(), "[1,2,3]");
        let back: DelaySeq = serde_json::from_str("[1,2,3]").unwrap();
        assert_eq!(back.total(), 6);
        assert!(serde_json::from_str::<DelaySeq>("[1,0]").is_err());
        let r = c_transform(4, &d).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"x":4,"bits":[1,0,1]}"#);
    }
}
