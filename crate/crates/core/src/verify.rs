//! Exhaustive machine checks of the identities in [`crate::mri`] and
//! [`crate::greedy`], and of the optimal-is-greedy theorem, over small families.

use serde::{Deserialize, Serialize};

use crate::ctransform::{in_class_a, in_class_b, DelaySeq};
use crate::error::{Error, Result};
use crate::greedy::{
    check_greedy_plateau, check_greedy_split, closed_form_b, enumerate_n, greedy_from_partition,
    normalize_partition, BSource, GreedyMode, PartitionSeq, Strictness,
};
use crate::mri::{
    check_sum_identities, equivalent_conditions_on, general_i_on, general_ii_on, general_iii_on,
    general_iv_on, monotone_all_on, monotone_on, suffix_min_holds, BTable, CheckReport, Scanner,
};
use crate::search::{
    check_optimal_necessary_conditions, class_size, size_estimate, verify_optimal_is_greedy,
    OptimalGreedyReport, SearchOptions, Space, CAP_A,
};

/// Largest sequence length for the lemma family.
pub const LEMMA_CAP: usize = 8;
/// Largest entry in the lemma family.
pub const LEMMA_MAX_ENTRY: u64 = 6;
/// Above this length the optimality sweep prunes.
pub const UNPRUNED_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Lemmas,
    Theorems,
    All,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub name: String,
    pub instances: u64,
    pub vacuous: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    fn record(&mut self, r: &CheckReport) {
        self.instances += 1;
        if r.vacuous {
            self.vacuous += 1;
        }
        if !r.holds {
            self.fail(r.detail.clone().unwrap_or_default());
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.fail(detail());
        }
    }

    fn fail(&mut self, detail: String) {
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(detail);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scope: Scope,
    pub mmax: usize,
    pub tallies: Vec<Tally>,
    /// Reported but not asserted.
    pub observations: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn total_instances(&self) -> u64 {
        self.tallies.iter().map(|t| t.instances).sum()
    }

    pub fn tally(&self, name: &str) -> Option<&Tally> {
        self.tallies.iter().find(|t| t.name == name)
    }
}

pub fn run_verification_suite(scope: Scope, mmax: usize, workers: usize) -> Result<SuiteReport> {
    let lemma_m = match scope {
        Scope::Theorems => 0,
        _ => mmax,
    };
    if lemma_m > LEMMA_CAP {
        return Err(Error::SpaceTooLarge {
            space: 'A',
            m: mmax,
            cap: LEMMA_CAP,
            estimate: lemma_family_size(mmax),
        });
    }
    if scope != Scope::Lemmas && mmax > CAP_A {
        return Err(Error::SpaceTooLarge {
            space: 'A',
            m: mmax,
            cap: CAP_A,
            estimate: size_estimate(Space::A, mmax),
        });
    }
    let mut tallies = Vec::new();
    let mut observations = Vec::new();
    if scope != Scope::Theorems {
        tallies.extend(lemma_suite(mmax)?);
    }
    if scope != Scope::Lemmas {
        let (t, obs) = theorem_suite(mmax, workers)?;
        tallies.extend(t);
        observations.extend(obs);
    }
    let passed = tallies.iter().all(|t| t.failures == 0);
    Ok(SuiteReport {
        scope,
        mmax,
        tallies,
        observations,
        passed,
    })
}

/// Every class-A sequence with length `1..=mmax` and entries `<= max_entry`.
pub fn lemma_family(mmax: usize, max_entry: u64) -> Vec<DelaySeq> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn walk(cur: &mut Vec<u64>, sum: u64, mmax: usize, max_entry: u64, out: &mut Vec<DelaySeq>) {
        if !cur.is_empty() {
            out.push(DelaySeq::new(cur.clone()).expect("positive delays"));
        }
        if cur.len() == mmax {
            return;
        }
        let hi = if cur.is_empty() { 1 } else { (sum + 1).min(max_entry) };
        for v in 1..=hi {
            cur.push(v);
            walk(cur, sum + v, mmax, max_entry, out);
            cur.pop();
        }
    }
    if mmax > 0 && max_entry > 0 {
        walk(&mut cur, 0, mmax, max_entry, &mut out);
    }
    out
}

fn lemma_family_size(mmax: usize) -> u128 {
    // Entries are bounded, so the family is at most max_entry^(M-1) per length.
    (1..=mmax as u32).map(|m| (LEMMA_MAX_ENTRY as u128).saturating_pow(m - 1)).sum()
}

const LEMMA_NAMES: [&str; 12] = [
    "equivalent-conditions",
    "sum-of-c-transform-i",
    "sum-of-c-transform-ii",
    "mri-general-i",
    "mri-general-ii",
    "mri-general-iii",
    "mri-general-iv",
    "mri-monotone-i",
    "mri-monotone-ii",
    "one-step-recurrence",
    "mri-greedy-1",
    "mri-greedy-2",
];

fn lemma_suite(mmax: usize) -> Result<Vec<Tally>> {
    let mut t: Vec<Tally> = LEMMA_NAMES.iter().map(|n| Tally::new(n)).collect();
    let scanner = Scanner::default();
    for d in lemma_family(mmax, LEMMA_MAX_ENTRY) {
        let m = d.len();
        let top = m as u32 + 1;
        let table = BTable::by_scan(&d, top, &scanner)?;
        for lp in 1..m {
            let applies = suffix_min_holds(&d, lp);
            for i in 1..=top {
                if applies {
                    t[0].record(&equivalent_conditions_on(&d, &table, i, lp)?);
                } else {
                    t[0].record(&vacuous("equivalent-conditions"));
                }
                t[3].record(&general_i_on(&d, &table, i, lp));
                t[6].record(&general_iv_on(&d, &table, i, lp));
            }
        }
        for i in 1..=top {
            t[4].record(&general_ii_on(&d, &table, i));
            t[5].record(&general_iii_on(&d, &table, i));
        }
        t[7].record(&monotone_all_on(&d, &table));
        for i in 0..=m as u32 {
            t[8].record(&monotone_on(&d, &table, i));
        }
        let s = d.as_slice();
        for lp in 0..m {
            let tail_min = s[lp..].iter().copied().min().unwrap();
            let tail_sum: u64 = s[lp..].iter().sum();
            for x in 0..=d.total() {
                let (idx, applies) = if x < tail_min {
                    (1, true)
                } else if x >= tail_sum {
                    (2, true)
                } else {
                    (1, false)
                };
                if applies {
                    t[idx].record(&check_sum_identities(&d, x, lp)?);
                } else {
                    t[idx].record(&vacuous("sum-of-c-transform"));
                }
            }
        }
        let rec = BTable::by_recurrence(&d, top)?;
        t[9].check(rec == table, || format!("d={d}: recurrence table differs from scan"));
    }
    for m in 2..=mmax {
        for k in 1..m {
            for n in enumerate_n(m, k)? {
                let g = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict)?;
                let table = BTable::by_scan(&g.delays, k as u32 + 1, &scanner)?;
                t[10].record(&check_greedy_split(&g, &table));
                t[11].record(&check_greedy_plateau(&g, &table));
            }
        }
    }
    Ok(t)
}

fn vacuous(name: &str) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        holds: true,
        vacuous: true,
        detail: None,
    }
}

/// Closed-form values against scans at every position the closed form covers.
pub fn closed_form_comparisons(m: usize, k: usize) -> Result<(u64, Vec<String>)> {
    let scanner = Scanner::default();
    let mut count = 0;
    let mut failures = Vec::new();
    for n in enumerate_n(m, k)? {
        let g = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict)?;
        let s = n.prefix_sums();
        let mut positions: Vec<(usize, usize)> = (1..=s[1]).map(|j| (j, 1)).collect();
        for i in 1..=k {
            positions.push((s[i], i));
            if i < k {
                positions.extend((s[i] + 1..=s[i + 1]).map(|p| (p, i + 1)));
            }
        }
        for (p, budget) in positions {
            let closed = closed_form_b(&g, p, budget)?;
            let scanned = scanner.scan(&g.delays.prefix(p), budget as u32)?;
            count += 1;
            if closed != scanned {
                failures.push(format!(
                    "n={n} prefix {p} budget {budget}: closed form {closed}, scan {scanned}"
                ));
            }
        }
    }
    Ok((count, failures))
}

/// All compositions of `m` into `k` positive parts.
pub fn compositions(m: usize, k: usize) -> Vec<PartitionSeq> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn walk(cur: &mut Vec<usize>, left: usize, k: usize, out: &mut Vec<PartitionSeq>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(PartitionSeq::new(cur.clone()).expect("positive parts"));
            cur.pop();
            return;
        }
        for p in 1..=left - (k - cur.len() - 1) {
            cur.push(p);
            walk(cur, left - p, k, out);
            cur.pop();
        }
    }
    if k >= 1 && m >= k {
        walk(&mut cur, m, k, &mut out);
    }
    out
}

/// Exhaustive optimal-is-greedy reports for `2 <= M <= mmax`, `1 <= k <= M`.
pub fn optimal_greedy_sweep(mmax: usize, workers: usize) -> Result<Vec<OptimalGreedyReport>> {
    let mut out = Vec::new();
    for m in 2..=mmax {
        let opts = SearchOptions {
            workers,
            prune: m > UNPRUNED_MAX,
            ..SearchOptions::default()
        };
        for k in 1..=m as u32 {
            out.push(verify_optimal_is_greedy(m, k, &opts)?);
        }
    }
    Ok(out)
}

fn theorem_suite(mmax: usize, workers: usize) -> Result<(Vec<Tally>, Vec<String>)> {
    let mut optimal = Tally::new("optimal-is-greedy");
    let mut necessary = Tally::new("optimal-necessary-conditions");
    let mut closed = Tally::new("closed-form-vs-scan");
    let mut modes = Tally::new("greedy-mode-agreement");
    let mut normal = Tally::new("normalization-soundness");
    let mut in_b = Tally::new("greedy-in-class-b");
    let mut observations = Vec::new();

    let mut largest_argmax = 0usize;
    for r in optimal_greedy_sweep(mmax, workers)? {
        optimal.check(r.passed(), || {
            format!("M={} k={}: {}", r.m, r.k, r.counterexamples.join("; "))
        });
        largest_argmax = largest_argmax.max(r.argmax_count);
        if (r.k as usize) < r.m {
            for d in &r.argmax_a {
                let rep = check_optimal_necessary_conditions(d, r.k);
                necessary.check(rep.holds, || format!("{d} k={}: {:?}", r.k, rep.checks));
            }
        }
    }
    if mmax >= 2 {
        observations.push(format!(
            "largest argmax set over A for M <= {mmax}: {largest_argmax}"
        ));
    }

    for m in 2..=mmax {
        for k in 1..m {
            let (count, failures) = closed_form_comparisons(m, k)?;
            closed.instances += count;
            for f in failures {
                closed.fail(f);
            }
            for n in enumerate_n(m, k)? {
                let cf = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict)?;
                for source in [BSource::Scan, BSource::Recursive] {
                    let r = greedy_from_partition(&n, GreedyMode::RecursiveB(source), Strictness::Strict)?;
                    modes.check(r.delays == cf.delays && r.b_values == cf.b_values, || {
                        format!("n={n}: {source:?} gives {}, closed form {}", r.delays, cf.delays)
                    });
                }
                in_b.check(in_class_b(&cf.delays) && in_class_a(&cf.delays), || {
                    format!("n={n}: {} is not in class B", cf.delays)
                });
            }
            for n in compositions(m, k).into_iter().filter(|n| !n.in_n()) {
                let direct = greedy_from_partition(
                    &n,
                    GreedyMode::RecursiveB(BSource::Scan),
                    Strictness::Permissive,
                )?;
                match normalize_partition(&n) {
                    Ok(norm) => {
                        let cf = greedy_from_partition(&norm, GreedyMode::ClosedForm, Strictness::Strict)?;
                        normal.check(cf.delays == direct.delays, || {
                            format!("n={n} -> {norm}: {} vs {}", cf.delays, direct.delays)
                        });
                    }
                    Err(Error::Unnormalizable(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    for m in 1..=mmax {
        if let (Some(a), Some(b)) = (class_size(Space::A, m), class_size(Space::B, m)) {
            observations.push(format!("|A_{m}| = {a}, |B_{m}| = {b}"));
        }
    }
    Ok((vec![optimal, necessary, closed, modes, normal, in_b], observations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_shape() {
        let f = lemma_family(3, 6);
        // (1), (1,1), (1,2), (1,1,1..3), (1,2,1..4)
        assert_eq!(f.len(), 1 + 2 + 3 + 4);
        assert!(f.iter().all(in_class_a));
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(6, 3).len(), 10);
        assert_eq!(compositions(3, 3).len(), 1);
        assert!(compositions(2, 3).is_empty());
    }

    #[test]
    fn small_suites_pass() {
        let r = run_verification_suite(Scope::All, 5, 1).unwrap();
        assert!(r.passed, "{:#?}", r.tallies);
        assert!(r.tally("mri-greedy-1").unwrap().instances > 0);
        assert!(r.tally("normalization-soundness").unwrap().instances > 0);
    }

    #[test]
    fn caps_refuse() {
        assert!(matches!(
            run_verification_suite(Scope::All, 30, 1),
            Err(Error::SpaceTooLarge { .. })
        ));
        assert!(run_verification_suite(Scope::Theorems, 13, 1).is_err());
    }

    #[test]
    fn closed_form_counts() {
        let (count, failures) = closed_form_comparisons(6, 2).unwrap();
        assert!(failures.is_empty());
        // Four partitions, each with M + k = 8 positions.
        assert_eq!(count, 4 * 8);
    }
}
