//! Greedy delay sequences built block by block from an integer composition.
//!
//! For a composition `n = (n_1, ..., n_k)` of `M` with prefix sums `s_i`, the
//! greedy rule picks `d_{s_i+j} = B(d^(s_i+j-1); i+1) + 1`. For `n_1 >= 2` this
//! has the closed form `d_j = j` on the first block and
//! `d_{s_i+j} = 2 d_{s_i} + (j-1)(d_{s_1} + ... + d_{s_i} + 1)` afterwards,
//! with `B(d^(s_i); i) = d_{s_1} + ... + d_{s_i}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ctransform::{in_class_b, DelaySeq};
use crate::error::{Error, Result};
use crate::mri::{mri_recursive, BTable, CheckReport, MriQuery, Scanner};

/// Default upper bound on `M` for greedy construction.
pub const DEFAULT_MAX_M: usize = 60;

/// A composition `n_1..n_k` of `M` into positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PartitionSeq {
    parts: Vec<usize>,
}

impl PartitionSeq {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidRange("a partition needs at least one part".into()));
        }
        if let Some(pos) = parts.iter().position(|&p| p == 0) {
            return Err(Error::InvalidRange(format!("part {} is zero", pos + 1)));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Number of blocks `k`.
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    /// Total length `M`.
    pub fn m(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `s_0 = 0, s_1, ..., s_k = M`.
    pub fn prefix_sums(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        out.push(0);
        let mut acc = 0;
        for &p in &self.parts {
            acc += p;
            out.push(acc);
        }
        out
    }

    /// Membership in `N(M,k)`: first part at least 2.
    pub fn in_n(&self) -> bool {
        self.parts[0] >= 2
    }
}

impl TryFrom<Vec<usize>> for PartitionSeq {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PartitionSeq> for Vec<usize> {
    fn from(p: PartitionSeq) -> Self {
        p.parts
    }
}

impl fmt::Display for PartitionSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyMode {
    /// Apply `d = B(prefix; budget) + 1` with `B` from the mri module.
    RecursiveB(BSource),
    /// Closed-form recursion; requires `n_1 >= 2`.
    ClosedForm,
}

/// Which `B` evaluator feeds the recursive construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BSource {
    Scan,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Reject partitions outside `N(M,k)`.
    #[default]
    Strict,
    /// Accept `n_1 = 1` (well defined by the greedy rule).
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedySeq {
    pub partition: PartitionSeq,
    pub delays: DelaySeq,
    /// `B(d^(s_i); i)` for `i = 1..=k`.
    pub b_values: Vec<u64>,
}

impl GreedySeq {
    /// `B(d; k)` of the whole sequence.
    pub fn b(&self) -> u64 {
        *self.b_values.last().unwrap()
    }
}

pub fn greedy_from_partition(
    n: &PartitionSeq,
    mode: GreedyMode,
    strictness: Strictness,
) -> Result<GreedySeq> {
    greedy_from_partition_capped(n, mode, strictness, DEFAULT_MAX_M)
}

pub fn greedy_from_partition_capped(
    n: &PartitionSeq,
    mode: GreedyMode,
    strictness: Strictness,
    max_m: usize,
) -> Result<GreedySeq> {
    let m = n.m();
    if m > max_m {
        return Err(Error::InvalidRange(format!("M={m} exceeds the cap {max_m}")));
    }
    if !n.in_n() && (strictness == Strictness::Strict || mode == GreedyMode::ClosedForm) {
        return Err(Error::PartitionNotInN(n.to_string()));
    }
    match mode {
        GreedyMode::ClosedForm => closed_form(n),
        GreedyMode::RecursiveB(source) => recursive(n, source),
    }
}

fn closed_form(n: &PartitionSeq) -> Result<GreedySeq> {
    const OVF: Error = Error::Overflow("building a greedy sequence");
    let s = n.prefix_sums();
    let mut d: Vec<u64> = (1..=s[1] as u64).collect();
    // T_i = d_{s_1} + ... + d_{s_i}
    let mut t = s[1] as u64;
    let mut b_values = vec![t];
    for i in 1..n.k() {
        let base = d[s[i] - 1].checked_mul(2).ok_or(OVF)?;
        let step = t.checked_add(1).ok_or(OVF)?;
        for j in 1..=n.parts()[i] as u64 {
            let v = step
                .checked_mul(j - 1)
                .and_then(|x| x.checked_add(base))
                .ok_or(OVF)?;
            d.push(v);
        }
        t = t.checked_add(*d.last().unwrap()).ok_or(OVF)?;
        b_values.push(t);
    }
    Ok(GreedySeq {
        partition: n.clone(),
        delays: DelaySeq::new(d)?,
        b_values,
    })
}

fn recursive(n: &PartitionSeq, source: BSource) -> Result<GreedySeq> {
    let s = n.prefix_sums();
    let scanner = Scanner::default();
    let eval = |d: &[u64], budget: u32| -> Result<u64> {
        let prefix = DelaySeq::new(d.to_vec())?;
        match source {
            BSource::Scan => scanner.scan(&prefix, budget),
            BSource::Recursive => Ok(mri_recursive(&MriQuery::new(prefix, budget))?.value),
        }
    };
    let mut d: Vec<u64> = Vec::with_capacity(n.m());
    for i in 0..n.k() {
        for _ in 0..n.parts()[i] {
            let b = eval(&d, i as u32 + 1)?;
            d.push(b.checked_add(1).ok_or(Error::Overflow("building a greedy sequence"))?);
        }
    }
    let b_values = (1..=n.k())
        .map(|i| eval(&d[..s[i]], i as u32))
        .collect::<Result<Vec<_>>>()?;
    Ok(GreedySeq {
        partition: n.clone(),
        delays: DelaySeq::new(d)?,
        b_values,
    })
}

/// Move units into `n_1` until `n_1 >= 2`; the greedy delays are unchanged.
pub fn normalize_partition(n: &PartitionSeq) -> Result<PartitionSeq> {
    let mut parts = n.parts().to_vec();
    while parts[0] < 2 {
        let Some(a) = parts.iter().skip(1).position(|&p| p >= 2).map(|p| p + 1) else {
            return Err(Error::Unnormalizable(n.to_string()));
        };
        parts[0] += 1;
        parts[a] -= 1;
    }
    PartitionSeq::new(parts)
}

/// Lexicographic stream of compositions of `m` into `k` parts with first part >= 2.
#[derive(Debug, Clone)]
pub struct CompositionsN {
    current: Option<Vec<usize>>,
}

pub fn enumerate_n(m: usize, k: usize) -> Result<CompositionsN> {
    if m < 2 || k == 0 || k >= m {
        return Err(Error::InvalidRange(format!(
            "need M >= 2 and 1 <= k <= M-1 (M={m}, k={k})"
        )));
    }
    let mut first = vec![1usize; k];
    first[0] = 2;
    first[k - 1] += m - k - 1;
    Ok(CompositionsN {
        current: Some(first),
    })
}

impl Iterator for CompositionsN {
    type Item = PartitionSeq;

    fn next(&mut self) -> Option<PartitionSeq> {
        let cur = self.current.take()?;
        let k = cur.len();
        let mut next = cur.clone();
        // Rightmost i < k-1 whose suffix has slack to give one unit.
        let mut tail = 0usize;
        let mut advanced = false;
        for i in (0..k.saturating_sub(1)).rev() {
            tail += next[i + 1];
            if tail > k - 1 - i {
                next[i] += 1;
                let rest = tail - 1;
                for slot in next.iter_mut().take(k - 1).skip(i + 1) {
                    *slot = 1;
                }
                next[k - 1] = rest - (k - 2 - i);
                advanced = true;
                break;
            }
        }
        if advanced {
            self.current = Some(next);
        }
        Some(PartitionSeq { parts: cur })
    }
}

/// `|N(M,k)| = C(M-2, k-1)`.
pub fn count_n(m: usize, k: usize) -> u128 {
    if m < 2 || k == 0 || k > m - 1 {
        return 0;
    }
    binomial((m - 2) as u128, (k - 1) as u128)
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Closed-form `B(d^prefix; budget)` at a position consistent with the blocks.
///
/// Valid pairs are `(j, 1)` for `j <= s_1`, `(s_i + j, i + 1)` inside block
/// `i + 1`, and `(s_i, i)` at a block boundary.
pub fn closed_form_b(g: &GreedySeq, prefix: usize, budget: usize) -> Result<u64> {
    let s = g.partition.prefix_sums();
    let k = g.partition.k();
    let d = &g.delays;
    if prefix == 0 || budget == 0 {
        return Err(Error::InconsistentIndex(format!(
            "prefix and budget must be positive (prefix={prefix}, budget={budget})"
        )));
    }
    if budget == 1 && prefix <= s[1] {
        return Ok(prefix as u64);
    }
    if budget <= k && prefix == s[budget] {
        return Ok(g.b_values[budget - 1]);
    }
    let i = budget - 1;
    if i >= 1 && i < k && prefix > s[i] && prefix <= s[i + 1] {
        let t = g.b_values[i - 1];
        return d
            .get(prefix)
            .checked_add(t)
            .ok_or(Error::Overflow("evaluating a closed-form value"));
    }
    Err(Error::InconsistentIndex(format!(
        "prefix {prefix} with budget {budget} does not match blocks {}",
        g.partition
    )))
}

/// Recover a partition `n` in `N(M,k)` whose greedy sequence is `d`.
///
/// The first block is the run `d_j = j`; each later block starts at twice the
/// previous block's last delay and grows by `T_i + 1` per step. Both "extend"
/// and "start a new block" are tried so the reconstruction never depends on
/// the two patterns being disjoint.
pub fn recover_partition(d: &DelaySeq, k: usize) -> Option<PartitionSeq> {
    let v = d.as_slice();
    let m = v.len();
    if m < 2 || k == 0 || k >= m {
        return None;
    }
    let run = v
        .iter()
        .enumerate()
        .take_while(|(j, &x)| x == *j as u64 + 1)
        .count();
    for s1 in (2..=run).rev() {
        let mut parts = vec![s1];
        if extend_blocks(v, s1, s1 as u64, k, &mut parts) {
            let p = PartitionSeq::new(parts).ok()?;
            let rebuilt = greedy_from_partition(&p, GreedyMode::ClosedForm, Strictness::Strict).ok()?;
            if &rebuilt.delays == d {
                return Some(p);
            }
        }
    }
    None
}

fn extend_blocks(v: &[u64], pos: usize, t: u64, k: usize, parts: &mut Vec<usize>) -> bool {
    if pos == v.len() {
        return parts.len() == k;
    }
    if parts.len() == k {
        return false;
    }
    let base = match v[pos - 1].checked_mul(2) {
        Some(b) => b,
        None => return false,
    };
    if v[pos] != base {
        return false;
    }
    let mut j = 1usize;
    loop {
        let end = pos + j;
        let new_t = match t.checked_add(v[end - 1]) {
            Some(x) => x,
            None => return false,
        };
        parts.push(j);
        if extend_blocks(v, end, new_t, k, parts) {
            return true;
        }
        parts.pop();
        if end >= v.len() {
            return false;
        }
        let expect = (t + 1)
            .checked_mul(j as u64)
            .and_then(|x| x.checked_add(base));
        if expect != Some(v[end]) {
            return false;
        }
        j += 1;
    }
}

/// `B(d^(s_i+j); i+1) = d_{s_i+j} + B(d^(s_i+j-1); i)` at every position of every
/// block after the first, including the block boundary `j = 0`.
#[allow(clippy::needless_range_loop)]
pub fn check_greedy_split(g: &GreedySeq, table: &BTable) -> CheckReport {
    let name = "mri-greedy-1";
    let s = g.partition.prefix_sums();
    for i in 1..g.partition.k() {
        for j in 0..=g.partition.parts()[i] {
            let p = s[i] + j;
            let lhs = table.get(p, i as u32 + 1);
            let rhs = g.delays.get(p) + table.get(p - 1, i as u32);
            if lhs != rhs {
                return report_fail(
                    name,
                    format!("n={} i={i} j={j}: B={lhs}, split={rhs}", g.partition),
                );
            }
        }
    }
    report_pass(name)
}

/// Every closed-form prefix is in class B, and `B(d^(s_i+j); i)` stays at
/// `d_{s_1} + ... + d_{s_i}` across block `i + 1`.
#[allow(clippy::needless_range_loop)]
pub fn check_greedy_plateau(g: &GreedySeq, table: &BTable) -> CheckReport {
    let name = "mri-greedy-2";
    let s = g.partition.prefix_sums();
    for len in 1..=g.delays.len() {
        if !in_class_b(&g.delays.prefix(len)) {
            return report_fail(name, format!("n={}: prefix {len} is not in class B", g.partition));
        }
    }
    for i in 1..g.partition.k() {
        let t = g.b_values[i - 1];
        for j in 0..=g.partition.parts()[i] {
            let v = table.get(s[i] + j, i as u32);
            if v != t {
                return report_fail(
                    name,
                    format!("n={} i={i} j={j}: B={v}, expected {t}", g.partition),
                );
            }
        }
    }
    report_pass(name)
}

fn report_pass(name: &str) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        holds: true,
        vacuous: false,
        detail: None,
    }
}

fn report_fail(name: &str, detail: String) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        holds: false,
        vacuous: false,
        detail: Some(detail),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(v: &[usize]) -> PartitionSeq {
        PartitionSeq::new(v.to_vec()).unwrap()
    }

    const TABLE_18: [u64; 18] = [
        1, 2, 3, 6, 10, 14, 18, 36, 58, 116, 196, 276, 356, 436, 872, 1744, 3132, 4520,
    ];

    #[test]
    fn table_sequence_both_modes() {
        let n = part(&[3, 4, 2, 5, 1, 3]);
        let cf = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict).unwrap();
        assert_eq!(cf.delays.as_slice(), &TABLE_18);
        let rec = greedy_from_partition(
            &n,
            GreedyMode::RecursiveB(BSource::Recursive),
            Strictness::Strict,
        )
        .unwrap();
        assert_eq!(rec, cf);
        let scan = greedy_from_partition(
            &n,
            GreedyMode::RecursiveB(BSource::Scan),
            Strictness::Strict,
        )
        .unwrap();
        assert_eq!(scan, cf);
    }

    #[test]
    fn small_example() {
        let g = greedy_from_partition(&part(&[3, 3]), GreedyMode::ClosedForm, Strictness::Strict)
            .unwrap();
        assert_eq!(g.delays.as_slice(), &[1, 2, 3, 6, 10, 14]);
        assert_eq!(g.b_values, vec![3, 17]);
    }

    #[test]
    fn n1_equal_one_needs_permissive() {
        let n = part(&[1, 1, 3]);
        assert!(matches!(
            greedy_from_partition(&n, GreedyMode::RecursiveB(BSource::Scan), Strictness::Strict),
            Err(Error::PartitionNotInN(_))
        ));
        assert!(matches!(
            greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Permissive),
            Err(Error::PartitionNotInN(_))
        ));
        let loose = greedy_from_partition(
            &n,
            GreedyMode::RecursiveB(BSource::Scan),
            Strictness::Permissive,
        )
        .unwrap();
        let norm = normalize_partition(&n).unwrap();
        assert_eq!(norm, part(&[2, 1, 2]));
        let strict =
            greedy_from_partition(&norm, GreedyMode::ClosedForm, Strictness::Strict).unwrap();
        assert_eq!(loose.delays, strict.delays);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_partition(&part(&[1, 1, 1, 4, 2, 6, 3])).unwrap(),
            part(&[2, 1, 1, 3, 2, 6, 3])
        );
        assert_eq!(normalize_partition(&part(&[2, 3])).unwrap(), part(&[2, 3]));
        assert!(matches!(
            normalize_partition(&part(&[1, 1, 1])),
            Err(Error::Unnormalizable(_))
        ));
    }

    #[test]
    fn enumerate_examples() {
        let v: Vec<Vec<usize>> = enumerate_n(4, 2).unwrap().map(|p| p.parts).collect();
        assert_eq!(v, vec![vec![2, 2], vec![3, 1]]);
        let v: Vec<Vec<usize>> = enumerate_n(3, 1).unwrap().map(|p| p.parts).collect();
        assert_eq!(v, vec![vec![3]]);
        assert_eq!(enumerate_n(6, 3).unwrap().count(), 6);
        assert!(enumerate_n(3, 3).is_err());
        assert!(enumerate_n(1, 1).is_err());
        assert!(enumerate_n(5, 0).is_err());
    }

    #[test]
    fn enumeration_is_sorted_and_complete() {
        for m in 2..=12 {
            for k in 1..m {
                let all: Vec<PartitionSeq> = enumerate_n(m, k).unwrap().collect();
                assert_eq!(all.len() as u128, count_n(m, k), "M={m} k={k}");
                assert!(all.windows(2).all(|w| w[0].parts < w[1].parts));
                assert!(all.iter().all(|p| p.in_n() && p.m() == m && p.k() == k));
            }
        }
    }

    #[test]
    fn closed_form_b_examples() {
        let g = greedy_from_partition(&part(&[3, 3]), GreedyMode::ClosedForm, Strictness::Strict)
            .unwrap();
        assert_eq!(closed_form_b(&g, 6, 2).unwrap(), 17);
        for j in 1..=3 {
            assert_eq!(closed_form_b(&g, j, 1).unwrap(), j as u64);
        }
        assert_eq!(closed_form_b(&g, 4, 2).unwrap(), 6 + 3);
        assert!(matches!(closed_form_b(&g, 2, 2), Err(Error::InconsistentIndex(_))));
        assert!(matches!(closed_form_b(&g, 5, 1), Err(Error::InconsistentIndex(_))));

        let big = greedy_from_partition(
            &part(&[3, 4, 2, 5, 1, 3]),
            GreedyMode::ClosedForm,
            Strictness::Strict,
        )
        .unwrap();
        // d_3 + d_7 + d_9 + d_14 + d_15 + d_18
        assert_eq!(closed_form_b(&big, 18, 6).unwrap(), 3 + 18 + 58 + 436 + 872 + 4520);
        let scanned = crate::mri::mri_scan(&MriQuery::new(big.delays.clone(), 6)).unwrap();
        assert_eq!(scanned, 5907);
    }

    #[test]
    fn recovers_partitions() {
        for m in 2..=10 {
            for k in 1..m {
                for n in enumerate_n(m, k).unwrap() {
                    let g = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict)
                        .unwrap();
                    assert_eq!(recover_partition(&g.delays, k), Some(n.clone()));
                }
            }
        }
        let d = DelaySeq::new(vec![1, 2, 4, 8]).unwrap();
        assert_eq!(recover_partition(&d, 2), None);
    }

    #[test]
    fn overflow_is_reported() {
        let mut parts = vec![1usize; 69];
        parts[0] = 2;
        let n = PartitionSeq::new(parts).unwrap();
        assert!(matches!(
            greedy_from_partition_capped(&n, GreedyMode::ClosedForm, Strictness::Strict, 80),
            Err(Error::Overflow(_))
        ));
        let big = PartitionSeq::new(vec![61]).unwrap();
        assert!(greedy_from_partition(&big, GreedyMode::ClosedForm, Strictness::Strict).is_err());
    }
}
