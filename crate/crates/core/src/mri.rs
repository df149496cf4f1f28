//! Maximum representable integer `B(d; k)`: the largest `x'` such that every
//! `0 <= x <= x'` has a C-transform with at most `k` ones.
//!
//! Three routes are provided and cross-checked in tests:
//! * [`mri_scan`], the definition applied literally (the oracle);
//! * [`mri_recursive`], memoized recursion on (prefix length, budget) for
//!   nondecreasing sequences, which also reports the pivot index `l'` where
//!   `B(d^m;i) = ... = B(d^l';i) = d_l' + B(d^(l'-1); i-1)`;
//! * [`BTable::by_recurrence`], the same one-step recurrence applied to every
//!   prefix of any class-A sequence, used by the search for speed.
//!
//! The `check_*` functions evaluate the identities that hold between these
//! values and return a [`CheckReport`] naming the first failing instance.

use serde::{Deserialize, Serialize};

use crate::ctransform::{in_class_a, popcount_of, DelaySeq, DEFAULT_SCAN_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MriQuery {
    pub d: DelaySeq,
    pub k: u32,
}

impl MriQuery {
    pub fn new(d: DelaySeq, k: u32) -> Self {
        Self { d, k }
    }
}

/// How the scan obtains popcounts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanStrategy {
    /// Recompute the transform of every `x` from scratch.
    #[default]
    PerValue,
    /// Reuse `pop(x; d^m) = [x >= d_m] + pop(x - [x >= d_m] d_m; d^(m-1))`
    /// through a table over prefixes.
    Incremental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scanner {
    pub limit: u64,
    pub strategy: ScanStrategy,
}

impl Default for Scanner {
    fn default() -> Self {
        Self {
            limit: DEFAULT_SCAN_LIMIT,
            strategy: ScanStrategy::PerValue,
        }
    }
}

impl Scanner {
    pub fn with_limit(limit: u64) -> Self {
        Self {
            limit,
            ..Self::default()
        }
    }

    fn guard(&self, d: &DelaySeq) -> Result<()> {
        if !in_class_a(d) {
            return Err(Error::NotInClassA(d.to_string()));
        }
        if d.total() > self.limit {
            return Err(Error::ScanLimit {
                total: d.total(),
                limit: self.limit,
            });
        }
        Ok(())
    }

    pub fn scan(&self, d: &DelaySeq, k: u32) -> Result<u64> {
        self.guard(d)?;
        if d.is_empty() || k == 0 {
            return Ok(0);
        }
        let popcounts = self.popcounts(d);
        Ok(first_exceeding(&popcounts, k).map_or(d.total(), |x| x - 1))
    }

    /// `B(d; i)` for every `0 <= i <= max_budget` from one pass over `0..=sum(d)`.
    pub fn scan_all_budgets(&self, d: &DelaySeq, max_budget: u32) -> Result<Vec<u64>> {
        self.guard(d)?;
        let mut row = vec![0u64; max_budget as usize + 1];
        if d.is_empty() {
            return Ok(row);
        }
        let popcounts = self.popcounts(d);
        // Budgets in [running_max, p) are first exceeded at x.
        let mut running_max = 0usize;
        for (x, &p) in popcounts.iter().enumerate() {
            let p = p as usize;
            if p > running_max {
                for slot in row.iter_mut().take(p).skip(running_max) {
                    *slot = x as u64 - 1;
                }
                running_max = p;
            }
        }
        for slot in row.iter_mut().skip(running_max) {
            *slot = d.total();
        }
        row[0] = 0;
        Ok(row)
    }

    fn popcounts(&self, d: &DelaySeq) -> Vec<u32> {
        let total = d.total() as usize;
        match self.strategy {
            ScanStrategy::PerValue => (0..=total as u64)
                .map(|x| popcount_of(x, d.as_slice()))
                .collect(),
            ScanStrategy::Incremental => {
                // prev[x] = pop(x; d^(m-1)) for x <= S_(m-1); class A keeps
                // every residual inside that range.
                let mut prev = vec![0u32; 1];
                let mut prefix_total = 0usize;
                for &dm in d.as_slice() {
                    let dm = dm as usize;
                    let next_total = prefix_total + dm;
                    let mut cur = vec![0u32; next_total + 1];
                    for (x, slot) in cur.iter_mut().enumerate() {
                        *slot = if x >= dm {
                            1 + prev[x - dm]
                        } else {
                            prev[x]
                        };
                    }
                    prev = cur;
                    prefix_total = next_total;
                }
                prev
            }
        }
    }
}

fn first_exceeding(popcounts: &[u32], k: u32) -> Option<u64> {
    popcounts.iter().position(|&p| p > k).map(|x| x as u64)
}

/// `B(d; k)` by the definition, with the default scan limit.
pub fn mri_scan(q: &MriQuery) -> Result<u64> {
    Scanner::default().scan(&q.d, q.k)
}

/// Result of [`mri_recursive`]: the value and the pivot `l'` (1-based,
/// zero when the value is trivially zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MriDerivation {
    pub value: u64,
    pub pivot: usize,
}

/// `B(d; k)` for a nondecreasing class-A sequence without scanning values.
pub fn mri_recursive(q: &MriQuery) -> Result<MriDerivation> {
    let d = &q.d;
    if !d.is_nondecreasing() {
        return Err(Error::NotNondecreasing(d.to_string()));
    }
    if !in_class_a(d) {
        return Err(Error::NotInClassA(d.to_string()));
    }
    let mut memo = Memo::new(d.len(), q.k);
    let value = memo.value(d.as_slice(), d.len(), q.k)?;
    if value == 0 {
        return Ok(MriDerivation { value, pivot: 0 });
    }
    // Walk down while the prefix value is unchanged by the last delay.
    let mut pivot = d.len();
    while pivot > 1 {
        let below = memo.value(d.as_slice(), pivot - 1, q.k)?;
        if below + 1 >= d.get(pivot) {
            break;
        }
        pivot -= 1;
    }
    Ok(MriDerivation { value, pivot })
}

struct Memo {
    cells: Vec<Option<u64>>,
    width: usize,
}

impl Memo {
    fn new(m: usize, k: u32) -> Self {
        let width = k as usize + 1;
        Self {
            cells: vec![None; (m + 1) * width],
            width,
        }
    }

    fn value(&mut self, d: &[u64], len: usize, budget: u32) -> Result<u64> {
        if len == 0 || budget == 0 {
            return Ok(0);
        }
        let idx = len * self.width + budget as usize;
        if let Some(v) = self.cells[idx] {
            return Ok(v);
        }
        let last = d[len - 1];
        let stay = self.value(d, len - 1, budget)?;
        let v = if stay + 1 >= last {
            let lower = self.value(d, len - 1, budget - 1)?;
            last.checked_add(lower)
                .ok_or(Error::Overflow("extending a maximum representable integer"))?
        } else {
            stay
        };
        self.cells[idx] = Some(v);
        Ok(v)
    }
}

/// `B(d^l; i)` for every prefix length `0 <= l <= M` and budget `0 <= i <= max_budget`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BTable {
    rows: Vec<Vec<u64>>,
}

impl BTable {
    /// Every prefix scanned with the definition.
    pub fn by_scan(d: &DelaySeq, max_budget: u32, scanner: &Scanner) -> Result<Self> {
        scanner.guard(d)?;
        let rows = (0..=d.len())
            .map(|l| scanner.scan_all_budgets(&d.prefix(l), max_budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    /// One-step recurrence on class-A sequences:
    /// `B(d^m;i) = d_m + B(d^(m-1);i-1)` if `B(d^(m-1);i) >= d_m - 1`, else `B(d^(m-1);i)`.
    pub fn by_recurrence(d: &DelaySeq, max_budget: u32) -> Result<Self> {
        if !in_class_a(d) {
            return Err(Error::NotInClassA(d.to_string()));
        }
        let mut rows = Vec::with_capacity(d.len() + 1);
        rows.push(vec![0u64; max_budget as usize + 1]);
        for &dm in d.as_slice() {
            let next = extend_row(rows.last().unwrap(), dm)
                .ok_or(Error::Overflow("extending a maximum representable integer"))?;
            rows.push(next);
        }
        Ok(Self { rows })
    }

    /// `B(d^len; budget)`.
    pub fn get(&self, len: usize, budget: u32) -> u64 {
        self.rows[len][budget as usize]
    }

    pub fn row(&self, len: usize) -> &[u64] {
        &self.rows[len]
    }

    pub fn max_budget(&self) -> u32 {
        (self.rows[0].len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Apply the one-step recurrence to a whole budget row. `None` on overflow.
#[inline]
pub(crate) fn extend_row(prev: &[u64], dm: u64) -> Option<Vec<u64>> {
    let mut next = vec![0u64; prev.len()];
    for i in 1..prev.len() {
        next[i] = if prev[i] + 1 >= dm {
            dm.checked_add(prev[i - 1])?
        } else {
            prev[i]
        };
    }
    Some(next)
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub holds: bool,
    /// True when the identity's antecedent did not apply.
    pub vacuous: bool,
    pub detail: Option<String>,
}

impl CheckReport {
    fn pass(name: &str) -> Self {
        Self {
            name: name.to_string(),
            holds: true,
            vacuous: false,
            detail: None,
        }
    }

    fn vacuous(name: &str) -> Self {
        Self {
            vacuous: true,
            ..Self::pass(name)
        }
    }

    fn fail(name: &str, detail: String) -> Self {
        Self {
            name: name.to_string(),
            holds: false,
            vacuous: false,
            detail: Some(detail),
        }
    }
}

fn require_a(d: &DelaySeq) -> Result<()> {
    if in_class_a(d) {
        Ok(())
    } else {
        Err(Error::NotInClassA(d.to_string()))
    }
}

/// True when `d_{l'+1}` is the minimum of `d_{l'+1..=m}` (1-based).
pub fn suffix_min_holds(d: &DelaySeq, lp: usize) -> bool {
    let s = d.as_slice();
    lp < s.len() && s[lp..].iter().all(|&v| v >= s[lp])
}

fn scan_table(d: &DelaySeq, max_budget: u32) -> Result<BTable> {
    BTable::by_scan(d, max_budget, &Scanner::default())
}

/// The three equivalent thresholds on `B(d^m;i)` and `B(d^(m-1);i)` agree.
pub fn check_equivalent_conditions(d: &DelaySeq, i: u32, lp: usize) -> Result<CheckReport> {
    require_a(d)?;
    let table = scan_table(d, i)?;
    equivalent_conditions_on(d, &table, i, lp)
}

pub fn equivalent_conditions_on(
    d: &DelaySeq,
    table: &BTable,
    i: u32,
    lp: usize,
) -> Result<CheckReport> {
    const NAME: &str = "equivalent-conditions";
    let m = d.len();
    if i == 0 || lp == 0 || lp + 1 > m {
        return Err(Error::PreconditionViolated(format!(
            "need i >= 1 and 1 <= l' <= M-1 (i={i}, l'={lp}, M={m})"
        )));
    }
    if !suffix_min_holds(d, lp) {
        return Err(Error::PreconditionViolated(format!(
            "d_{} is not the minimum of the tail of {d}",
            lp + 1
        )));
    }
    let pivot = d.get(lp + 1);
    let full = table.get(m, i);
    let shorter = table.get(m - 1, i);
    let c1 = full + 1 >= pivot;
    let c2 = full >= pivot;
    let c3 = shorter + 1 >= pivot;
    Ok(if c1 == c2 && c2 == c3 {
        CheckReport::pass(NAME)
    } else {
        CheckReport::fail(
            NAME,
            format!("d={d} i={i} l'={lp}: conditions evaluate to ({c1},{c2},{c3})"),
        )
    })
}

/// Popcount telescoping across prefix truncations for small and large `x`.
pub fn check_sum_identities(d: &DelaySeq, x: u64, lp: usize) -> Result<CheckReport> {
    const NAME: &str = "sum-of-c-transform";
    require_a(d)?;
    let s = d.as_slice();
    let m = s.len();
    if lp + 1 > m {
        return Err(Error::PreconditionViolated(format!(
            "need 0 <= l' <= M-1 (l'={lp}, M={m})"
        )));
    }
    if x > d.total() {
        return Err(Error::Range { x, total: d.total() });
    }
    let tail_min = s[lp..].iter().copied().min().unwrap();
    let tail_sum: u64 = s[lp..].iter().sum();
    let small = x < tail_min;
    let large = x >= tail_sum;
    if !small && !large {
        return Err(Error::PreconditionViolated(format!(
            "x={x} is neither below the tail minimum {tail_min} nor at least the tail sum {tail_sum}"
        )));
    }
    let top = popcount_of(x, s);
    if small {
        for j in lp..m {
            let p = popcount_of(x, &s[..j]);
            if p != top {
                return Ok(CheckReport::fail(
                    NAME,
                    format!("d={d} x={x} l'={lp}: popcount over prefix {j} is {p}, full is {top}"),
                ));
            }
        }
    }
    if large {
        let mut removed = 0u64;
        for j in (lp..m).rev() {
            removed += s[j];
            let p = popcount_of(x - removed, &s[..j]) + (m - j) as u32;
            if p != top {
                return Ok(CheckReport::fail(
                    NAME,
                    format!(
                        "d={d} x={x} l'={lp}: telescoped popcount at prefix {j} is {p}, full is {top}"
                    ),
                ));
            }
        }
    }
    Ok(CheckReport::pass(NAME))
}

/// `B(d;i) <= B(d;i+1)`, with equality exactly when `i >= M`.
pub fn check_monotone(d: &DelaySeq, i: u32) -> Result<CheckReport> {
    require_a(d)?;
    let table = scan_table(d, i + 1)?;
    Ok(monotone_on(d, &table, i))
}

pub fn monotone_on(d: &DelaySeq, table: &BTable, i: u32) -> CheckReport {
    const NAME: &str = "mri-monotone";
    let m = d.len();
    let (lo, hi) = (table.get(m, i), table.get(m, i + 1));
    if lo > hi {
        return CheckReport::fail(NAME, format!("d={d}: B(;{i})={lo} > B(;{})={hi}", i + 1));
    }
    if (lo == hi) != (i as usize >= m) {
        return CheckReport::fail(
            NAME,
            format!("d={d}: B(;{i})={lo}, B(;{})={hi}, M={m}", i + 1),
        );
    }
    CheckReport::pass(NAME)
}

/// Below the tail-minimum threshold the value is flat across prefixes `l'..=m`.
pub fn general_i_on(d: &DelaySeq, table: &BTable, i: u32, lp: usize) -> CheckReport {
    const NAME: &str = "mri-general-i";
    let m = d.len();
    if i == 0 || lp == 0 || lp >= m || !suffix_min_holds(d, lp) {
        return CheckReport::vacuous(NAME);
    }
    let pivot = d.get(lp + 1);
    if table.get(m, i) + 1 >= pivot {
        return CheckReport::vacuous(NAME);
    }
    flat_between(NAME, d, table, i, lp)
}

/// Above the last-delay threshold the value splits off `d_m`.
pub fn general_ii_on(d: &DelaySeq, table: &BTable, i: u32) -> CheckReport {
    const NAME: &str = "mri-general-ii";
    let m = d.len();
    if i == 0 || m == 0 {
        return CheckReport::vacuous(NAME);
    }
    let dm = d.get(m);
    let full = table.get(m, i);
    let c1 = full + 1 >= dm;
    let c2 = full >= dm;
    let c3 = table.get(m - 1, i) + 1 >= dm;
    if c1 != c2 || c2 != c3 {
        return CheckReport::fail(
            NAME,
            format!("d={d} i={i}: antecedents disagree ({c1},{c2},{c3})"),
        );
    }
    if !c1 {
        return CheckReport::vacuous(NAME);
    }
    let expect = dm + table.get(m - 1, i - 1);
    if full == expect {
        CheckReport::pass(NAME)
    } else {
        CheckReport::fail(NAME, format!("d={d} i={i}: B={full}, d_m + B(d^(m-1);i-1)={expect}"))
    }
}

/// For nondecreasing sequences, the value is flat down to the pivot and splits there.
pub fn general_iii_on(d: &DelaySeq, table: &BTable, i: u32) -> CheckReport {
    const NAME: &str = "mri-general-iii";
    let m = d.len();
    if i == 0 || m == 0 || !d.is_nondecreasing() {
        return CheckReport::vacuous(NAME);
    }
    let full = table.get(m, i);
    let Some(lp) = (1..=m).rev().find(|&l| d.get(l) <= full) else {
        return CheckReport::fail(NAME, format!("d={d} i={i}: no delay is <= B={full}"));
    };
    let flat = flat_between(NAME, d, table, i, lp);
    if !flat.holds {
        return flat;
    }
    let expect = d.get(lp) + table.get(lp - 1, i - 1);
    if full == expect {
        CheckReport::pass(NAME)
    } else {
        CheckReport::fail(
            NAME,
            format!("d={d} i={i} l'={lp}: B={full}, d_l' + B(d^(l'-1);i-1)={expect}"),
        )
    }
}

/// A short prefix far below the tail minimum pins the value for all longer prefixes.
pub fn general_iv_on(d: &DelaySeq, table: &BTable, i: u32, lp: usize) -> CheckReport {
    const NAME: &str = "mri-general-iv";
    let m = d.len();
    if i == 0 || lp == 0 || lp >= m || !suffix_min_holds(d, lp) {
        return CheckReport::vacuous(NAME);
    }
    if table.get(lp, i) + 1 >= d.get(lp + 1) {
        return CheckReport::vacuous(NAME);
    }
    flat_between(NAME, d, table, i, lp)
}

/// `B(d^i'; i) <= B(d^m; i')`-style monotonicity over every pair of budgets.
pub fn monotone_all_on(d: &DelaySeq, table: &BTable) -> CheckReport {
    const NAME: &str = "mri-monotone-i";
    let m = d.len();
    let row = table.row(m);
    if row.windows(2).all(|w| w[0] <= w[1]) {
        CheckReport::pass(NAME)
    } else {
        CheckReport::fail(NAME, format!("d={d}: budget row {row:?} is not monotone"))
    }
}

fn flat_between(name: &str, d: &DelaySeq, table: &BTable, i: u32, lp: usize) -> CheckReport {
    let m = d.len();
    let v = table.get(m, i);
    for j in lp..m {
        if table.get(j, i) != v {
            return CheckReport::fail(
                name,
                format!("d={d} i={i}: B(d^{j};{i})={} differs from B(d^{m};{i})={v}", table.get(j, i)),
            );
        }
    }
    CheckReport::pass(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u64]) -> DelaySeq {
        DelaySeq::new(v.to_vec()).unwrap()
    }

    fn b(v: &[u64], k: u32) -> u64 {
        mri_scan(&MriQuery::new(seq(v), k)).unwrap()
    }

    #[test]
    fn scan_examples() {
        assert_eq!(b(&[1, 2, 4, 8, 16, 32], 2), 6);
        assert_eq!(b(&[1, 2, 3, 5, 6, 8], 2), 11);
        assert_eq!(b(&[1, 2, 3, 4, 8, 12], 2), 16);
        assert_eq!(b(&[1, 2, 3, 6, 10, 14], 2), 17);
        assert_eq!(b(&[1, 2, 3, 6, 10, 14], 0), 0);
        assert_eq!(b(&[1, 2, 4], 3), 7);
        assert_eq!(mri_scan(&MriQuery::new(DelaySeq::empty(), 3)).unwrap(), 0);
    }

    #[test]
    fn scan_rejects() {
        assert!(matches!(
            mri_scan(&MriQuery::new(seq(&[1, 3]), 1)),
            Err(Error::NotInClassA(_))
        ));
        let s = Scanner::with_limit(5);
        assert!(matches!(s.scan(&seq(&[1, 2, 3]), 1), Err(Error::ScanLimit { .. })));
    }

    #[test]
    fn strategies_and_all_budget_row_agree() {
        let inc = Scanner {
            strategy: ScanStrategy::Incremental,
            ..Scanner::default()
        };
        for v in [
            &[1u64, 2, 3, 5, 6, 8][..],
            &[1, 1, 1],
            &[1, 2, 3, 5, 12, 1, 1, 2, 4, 8, 16, 32],
            &[1],
        ] {
            let d = seq(v);
            let row = Scanner::default().scan_all_budgets(&d, 14).unwrap();
            for k in 0..=14 {
                let a = Scanner::default().scan(&d, k).unwrap();
                assert_eq!(a, inc.scan(&d, k).unwrap(), "{d} k={k}");
                assert_eq!(a, row[k as usize], "{d} k={k}");
            }
        }
    }

    #[test]
    fn recursive_examples() {
        let r = mri_recursive(&MriQuery::new(seq(&[1, 2, 4, 8]), 2)).unwrap();
        assert_eq!(r, MriDerivation { value: 6, pivot: 3 });
        assert_eq!(
            mri_recursive(&MriQuery::new(seq(&[1]), 1)).unwrap().value,
            1
        );
        assert_eq!(
            mri_recursive(&MriQuery::new(seq(&[1, 2, 3, 6, 10, 14]), 2))
                .unwrap()
                .value,
            b(&[1, 2, 3, 6, 10, 14], 2)
        );
        assert!(matches!(
            mri_recursive(&MriQuery::new(seq(&[1, 2, 1]), 1)),
            Err(Error::NotNondecreasing(_))
        ));
        assert!(matches!(
            mri_recursive(&MriQuery::new(seq(&[1, 3]), 1)),
            Err(Error::NotInClassA(_))
        ));
    }

    #[test]
    fn equivalent_conditions_examples() {
        assert!(check_equivalent_conditions(&seq(&[1, 2, 4, 8]), 2, 3).unwrap().holds);
        assert!(check_equivalent_conditions(&seq(&[1, 1]), 1, 1).unwrap().holds);
        // d_2 = 3 is not the tail minimum of (1,3,2).
        assert!(matches!(
            check_equivalent_conditions(&seq(&[1, 2, 3, 2]), 1, 2),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn sum_identity_examples() {
        let r = check_sum_identities(&seq(&[1, 2, 3, 6, 10, 14]), 5, 3).unwrap();
        assert!(r.holds);
        assert!(check_sum_identities(&seq(&[1, 2]), 3, 0).unwrap().holds);
        assert!(matches!(
            check_sum_identities(&seq(&[1, 2, 3, 6, 10, 14]), 20, 3),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn monotone_examples() {
        assert!(check_monotone(&seq(&[1, 2, 4, 8]), 2).unwrap().holds);
        assert!(check_monotone(&seq(&[1]), 1).unwrap().holds);
        let d = seq(&[1, 2, 4, 8, 16, 32]);
        // Only x = 63 needs all six fibers.
        assert_eq!(b(d.as_slice(), 5), 62);
        assert_eq!(b(d.as_slice(), 6), 63);
        assert_eq!(b(d.as_slice(), 7), 63);
        for i in 0..=7 {
            assert!(check_monotone(&d, i).unwrap().holds, "i={i}");
        }
    }

    #[test]
    fn recurrence_table_matches_scan_table() {
        let d = seq(&[1, 2, 3, 5, 12, 1, 1, 2, 4, 8, 16, 32]);
        let a = BTable::by_recurrence(&d, 6).unwrap();
        let s = BTable::by_scan(&d, 6, &Scanner::default()).unwrap();
        assert_eq!(a, s);
        assert_eq!(a.get(12, 5), 62);
    }
}
