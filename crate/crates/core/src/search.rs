//! Optimal `k`-constrained sequences: exhaustive search over class A or B for
//! small `M`, and the polynomial search over the greedy family `G(M,k)`.
//!
//! The brute force walks the defining inequalities depth first and keeps a
//! stack of `B(prefix; 0..=k)` rows, so each node costs `O(k)`. Subtrees are
//! independent and run on a rayon pool; ties are kept and the final argmax
//! set is sorted, so the output does not depend on the schedule.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctransform::{in_class_a, in_class_b, DelaySeq};
use crate::error::{Error, Result};
use crate::greedy::{
    enumerate_n, greedy_from_partition, recover_partition, GreedyMode, PartitionSeq, Strictness,
};
use crate::mri::{BTable, CheckReport, Scanner};

/// Default enumeration caps.
pub const CAP_A: usize = 12;
pub const CAP_B: usize = 14;

/// Prefix length at which the tree is split into parallel work units.
const SPLIT_DEPTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    A,
    B,
    G,
}

impl Space {
    pub fn letter(self) -> char {
        match self {
            Space::A => 'A',
            Space::B => 'B',
            Space::G => 'G',
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Space::A),
            "B" | "b" => Ok(Space::B),
            "G" | "g" => Ok(Space::G),
            other => Err(Error::InvalidRange(format!("unknown space {other:?}"))),
        }
    }
}

/// How a leaf's `B(d; k)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluator {
    /// Read it off the incrementally maintained row.
    #[default]
    Incremental,
    /// Call the scan oracle on the full sequence.
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Worker threads; 0 means the rayon default.
    pub workers: usize,
    pub prune: bool,
    pub evaluator: Evaluator,
    pub cap_a: usize,
    pub cap_b: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            prune: false,
            evaluator: Evaluator::Incremental,
            cap_a: CAP_A,
            cap_b: CAP_B,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub space: Space,
    pub m: usize,
    pub k: u32,
    pub best_delays: DelaySeq,
    #[serde(rename = "best_B")]
    pub best_b: u64,
    /// Every maximizer, in lexicographic order.
    pub argmax_set: Vec<DelaySeq>,
    /// For `G`, the compositions generating each maximizer (same order).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub argmax_partitions: Vec<Vec<PartitionSeq>>,
    /// Leaves evaluated.
    pub instances_examined: u64,
    #[serde(skip)]
    pub nodes_visited: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Exact `|A_M|` or `|B_M|`, or `None` once the count no longer fits in a `u128`.
pub fn class_size(space: Space, m: usize) -> Option<u128> {
    if space == Space::G || m > 20 {
        return None;
    }
    if m == 0 {
        return Some(1);
    }
    // counts[v]: sequences of the current length whose prefix sum (A) or
    // last delay (B) is v.
    let width = 1usize << m;
    let mut counts = vec![0u128; width + 1];
    counts[1] = 1;
    let mut prefix = vec![0u128; width + 2];
    for _ in 1..m {
        for (i, &c) in counts.iter().enumerate() {
            prefix[i + 1] = prefix[i].checked_add(c)?;
        }
        for (u, slot) in counts.iter_mut().enumerate() {
            // Predecessors v of u: v+1 <= u <= 2v+1 for A, v <= u <= 2v for B.
            let (lo, hi) = match space {
                Space::A => (u / 2, u.saturating_sub(1)),
                _ => (u.div_ceil(2), u),
            };
            *slot = if u == 0 || lo > hi { 0 } else { prefix[hi + 1] - prefix[lo] };
        }
    }
    counts.iter().try_fold(0u128, |acc, &c| acc.checked_add(c))
}

/// Exact size when computable, otherwise a lower bound (every member of a
/// class extends in at least two ways).
pub fn size_estimate(space: Space, m: usize) -> u128 {
    const EXACT: usize = 14;
    if m <= EXACT {
        return class_size(space, m).unwrap_or(u128::MAX);
    }
    let base = class_size(space, EXACT).unwrap_or(u128::MAX);
    base.saturating_mul(1u128.checked_shl((m - EXACT) as u32).unwrap_or(u128::MAX))
}

fn check_cap(space: Space, m: usize, opts: &SearchOptions) -> Result<()> {
    let cap = match space {
        Space::A => opts.cap_a,
        Space::B => opts.cap_b,
        Space::G => return Ok(()),
    };
    if m > cap {
        return Err(Error::SpaceTooLarge {
            space: space.letter(),
            m,
            cap,
            estimate: size_estimate(space, m),
        });
    }
    Ok(())
}

/// All maximizers of `B(d; k)` over `A_M` or `B_M`.
pub fn brute_force_optimal(
    m: usize,
    k: u32,
    space: Space,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    let start = Instant::now();
    if space == Space::G {
        return greedy_optimal(m, k);
    }
    if m == 0 || k == 0 {
        return Err(Error::InvalidRange(format!("need M >= 1 and k >= 1 (M={m}, k={k})")));
    }
    check_cap(space, m, opts)?;

    let seed = if opts.prune { witnessed_lower_bound(m, k)? } else { 0 };
    let best = AtomicU64::new(seed);
    let prefixes = split_prefixes(m, space);
    let ctx = Context {
        m,
        k: k as usize,
        space,
        prune: opts.prune,
        evaluator: opts.evaluator,
        best: &best,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidRange(format!("cannot start {} workers: {e}", opts.workers)))?;
    let parts: Vec<Result<Partial>> =
        pool.install(|| prefixes.par_iter().map(|p| ctx.run(p)).collect());

    let mut best_b = 0u64;
    let mut argmax: Vec<Vec<u64>> = Vec::new();
    let (mut leaves, mut nodes) = (0u64, 0u64);
    for part in parts {
        let part = part?;
        leaves += part.leaves;
        nodes += part.nodes;
        if part.argmax.is_empty() {
            continue;
        }
        if part.best > best_b {
            best_b = part.best;
            argmax.clear();
        }
        if part.best == best_b {
            argmax.extend(part.argmax);
        }
    }
    if argmax.is_empty() {
        // Only reachable if the seed overstated the optimum.
        return Err(Error::PreconditionViolated(format!(
            "pruned search found nothing at or above the seed {seed}"
        )));
    }
    argmax.sort();
    argmax.dedup();
    let argmax_set = argmax
        .into_iter()
        .map(DelaySeq::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchResult {
        space,
        m,
        k,
        best_delays: argmax_set[0].clone(),
        best_b,
        argmax_set,
        argmax_partitions: Vec::new(),
        instances_examined: leaves,
        nodes_visited: nodes,
        wall_time: start.elapsed(),
    })
}

/// Best `B` among greedy sequences, each value obtained by scanning. These
/// sequences are members of `A_M` and `B_M`, so the value is attained.
fn witnessed_lower_bound(m: usize, k: u32) -> Result<u64> {
    if m < 2 || k as usize >= m {
        return Ok(0);
    }
    let scanner = Scanner::default();
    let mut best = 0;
    for n in enumerate_n(m, k as usize)? {
        let g = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict)?;
        best = best.max(scanner.scan(&g.delays, k)?);
    }
    Ok(best)
}

/// Every valid prefix of length `min(M, SPLIT_DEPTH)`.
fn split_prefixes(m: usize, space: Space) -> Vec<Vec<u64>> {
    let depth = m.min(SPLIT_DEPTH);
    let mut out = Vec::new();
    let mut cur = vec![1u64];
    fn walk(cur: &mut Vec<u64>, depth: usize, space: Space, out: &mut Vec<Vec<u64>>) {
        if cur.len() == depth {
            out.push(cur.clone());
            return;
        }
        let (lo, hi) = children(cur, space);
        for v in lo..=hi {
            cur.push(v);
            walk(cur, depth, space, out);
            cur.pop();
        }
    }
    walk(&mut cur, depth, space, &mut out);
    out
}

fn children(prefix: &[u64], space: Space) -> (u64, u64) {
    let last = *prefix.last().unwrap();
    match space {
        Space::A => (1, prefix.iter().sum::<u64>() + 1),
        _ => (last, 2 * last),
    }
}

struct Context<'a> {
    m: usize,
    k: usize,
    space: Space,
    prune: bool,
    evaluator: Evaluator,
    best: &'a AtomicU64,
}

#[derive(Default)]
struct Partial {
    best: u64,
    argmax: Vec<Vec<u64>>,
    leaves: u64,
    nodes: u64,
}

struct Walker<'c, 'a> {
    ctx: &'c Context<'a>,
    delays: Vec<u64>,
    sums: Vec<u64>,
    /// Row `l` holds `B(d^l; 0..=k)`.
    rows: Vec<u64>,
    scratch: Vec<u64>,
    out: Partial,
    scanner: Scanner,
}

impl Context<'_> {
    fn run(&self, prefix: &[u64]) -> Result<Partial> {
        let width = self.k + 1;
        let mut w = Walker {
            ctx: self,
            delays: Vec::with_capacity(self.m),
            sums: vec![0; self.m + 1],
            rows: vec![0; (self.m + 1) * width],
            scratch: vec![0; 2 * width],
            out: Partial::default(),
            scanner: Scanner::default(),
        };
        for &v in prefix {
            w.push(v);
        }
        if w.pruned() {
            return Ok(w.out);
        }
        w.descend()?;
        Ok(w.out)
    }
}

impl Walker<'_, '_> {
    fn push(&mut self, v: u64) {
        let width = self.ctx.k + 1;
        let l = self.delays.len();
        self.delays.push(v);
        self.sums[l + 1] = self.sums[l] + v;
        let (prev, next) = self.rows.split_at_mut((l + 1) * width);
        let prev = &prev[l * width..];
        next[0] = 0;
        for i in 1..width {
            next[i] = if prev[i] + 1 >= v { v + prev[i - 1] } else { prev[i] };
        }
        self.out.nodes += 1;
    }

    fn pop(&mut self) {
        self.delays.pop();
    }

    /// True when no completion of the current prefix can reach the best value.
    fn pruned(&mut self) -> bool {
        if !self.ctx.prune {
            return false;
        }
        let best = self.ctx.best.load(Ordering::Relaxed);
        self.upper_bound() < best
    }

    fn upper_bound(&mut self) -> u64 {
        let width = self.ctx.k + 1;
        let l = self.delays.len();
        let remaining = self.ctx.m - l;
        let (cur, nxt) = self.scratch.split_at_mut(width);
        cur.copy_from_slice(&self.rows[l * width..(l + 1) * width]);
        for _ in 0..remaining {
            nxt[0] = 0;
            for i in 1..width {
                nxt[i] = cur[i].saturating_add(1).saturating_add(cur[i - 1]);
            }
            cur.copy_from_slice(nxt);
        }
        let mut bound = cur[self.ctx.k];
        if self.ctx.space == Space::B {
            // d_{l+j} <= 2^j d_l
            let last = *self.delays.last().unwrap();
            let growth = 1u64
                .checked_shl(remaining as u32 + 1)
                .map_or(u64::MAX, |p| p - 2);
            bound = bound.min(self.sums[l].saturating_add(last.saturating_mul(growth)));
        }
        bound
    }

    fn descend(&mut self) -> Result<()> {
        let l = self.delays.len();
        if l == self.ctx.m {
            return self.leaf();
        }
        let (lo, hi) = match self.ctx.space {
            Space::A => (1, self.sums[l] + 1),
            _ => {
                let last = self.delays[l - 1];
                (last, 2 * last)
            }
        };
        for v in lo..=hi {
            self.push(v);
            if !self.pruned() {
                self.descend()?;
            }
            self.pop();
        }
        Ok(())
    }

    fn leaf(&mut self) -> Result<()> {
        self.out.leaves += 1;
        let value = match self.ctx.evaluator {
            Evaluator::Incremental => self.rows[self.ctx.m * (self.ctx.k + 1) + self.ctx.k],
            Evaluator::Scan => {
                let d = DelaySeq::new(self.delays.clone())?;
                self.scanner.scan(&d, self.ctx.k as u32)?
            }
        };
        if value < self.ctx.best.load(Ordering::Relaxed) || value < self.out.best {
            return Ok(());
        }
        self.ctx.best.fetch_max(value, Ordering::Relaxed);
        if value > self.out.best || self.out.argmax.is_empty() {
            self.out.best = value;
            self.out.argmax.clear();
        }
        self.out.argmax.push(self.delays.clone());
        Ok(())
    }
}

/// Maximizers over `G(M,k)` using the closed-form values.
pub fn greedy_optimal(m: usize, k: u32) -> Result<SearchResult> {
    let start = Instant::now();
    let mut best_b = 0u64;
    let mut found: Vec<(DelaySeq, PartitionSeq)> = Vec::new();
    let mut count = 0u64;
    for n in enumerate_n(m, k as usize)? {
        count += 1;
        let g = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict)?;
        let b = g.b();
        if b > best_b || found.is_empty() {
            best_b = b;
            found.clear();
        }
        if b == best_b {
            found.push((g.delays, n));
        }
    }
    found.sort();
    let mut argmax_set: Vec<DelaySeq> = Vec::new();
    let mut argmax_partitions: Vec<Vec<PartitionSeq>> = Vec::new();
    for (d, n) in found {
        if argmax_set.last() == Some(&d) {
            argmax_partitions.last_mut().unwrap().push(n);
        } else {
            argmax_set.push(d);
            argmax_partitions.push(vec![n]);
        }
    }
    Ok(SearchResult {
        space: Space::G,
        m,
        k,
        best_delays: argmax_set[0].clone(),
        best_b,
        argmax_set,
        argmax_partitions,
        instances_examined: count,
        nodes_visited: count,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// `k >= M`: the only optimum is the binary sequence.
    DegeneratePass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalGreedyReport {
    pub m: usize,
    pub k: u32,
    pub verdict: Verdict,
    pub max_a: u64,
    pub max_b: u64,
    pub max_g: Option<u64>,
    pub argmax_a: Vec<DelaySeq>,
    /// Partition recovered for each member of `argmax_a`, when one exists.
    pub recovered: Vec<Option<PartitionSeq>>,
    pub counterexamples: Vec<String>,
    /// Observation only: the size of the argmax set over A.
    pub argmax_count: usize,
    pub instances_examined: u64,
}

impl OptimalGreedyReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Compare exhaustive optima over `A_M` and `B_M` with the greedy family.
pub fn verify_optimal_is_greedy(
    m: usize,
    k: u32,
    opts: &SearchOptions,
) -> Result<OptimalGreedyReport> {
    let a = brute_force_optimal(m, k, Space::A, opts)?;
    let b = brute_force_optimal(m, k, Space::B, opts)?;
    let mut counterexamples = Vec::new();
    let instances = a.instances_examined + b.instances_examined;

    if k as usize >= m {
        let binary = DelaySeq::powers_of_two(m)?;
        let top = binary.total();
        for r in [&a, &b] {
            if r.best_b != top || r.argmax_set != [binary.clone()] {
                counterexamples.push(format!(
                    "space {}: best {} with argmax {:?}, expected {top} at {binary} only",
                    r.space.letter(),
                    r.best_b,
                    display_all(&r.argmax_set)
                ));
            }
        }
        let verdict = if counterexamples.is_empty() { Verdict::DegeneratePass } else { Verdict::Fail };
        return Ok(OptimalGreedyReport {
            m,
            k,
            verdict,
            max_a: a.best_b,
            max_b: b.best_b,
            max_g: None,
            recovered: vec![None; a.argmax_set.len()],
            argmax_count: a.argmax_set.len(),
            argmax_a: a.argmax_set,
            counterexamples,
            instances_examined: instances,
        });
    }

    let g = greedy_optimal(m, k)?;
    if a.best_b != g.best_b {
        counterexamples.push(format!("max over A is {}, max over G is {}", a.best_b, g.best_b));
    }
    if b.best_b != g.best_b {
        counterexamples.push(format!("max over B is {}, max over G is {}", b.best_b, g.best_b));
    }
    let mut recovered = Vec::with_capacity(a.argmax_set.len());
    for d in &a.argmax_set {
        let n = recover_partition(d, k as usize);
        if n.is_none() {
            counterexamples.push(format!("argmax {d} over A is not in G"));
        }
        recovered.push(n);
    }
    for d in &b.argmax_set {
        if recover_partition(d, k as usize).is_none() {
            counterexamples.push(format!("argmax {d} over B is not in G"));
        }
    }
    if a.argmax_set != g.argmax_set {
        counterexamples.push(format!(
            "argmax over A {:?} differs from argmax over G {:?}",
            display_all(&a.argmax_set),
            display_all(&g.argmax_set)
        ));
    }
    if a.argmax_set != b.argmax_set {
        counterexamples.push(format!(
            "argmax over A {:?} differs from argmax over B {:?}",
            display_all(&a.argmax_set),
            display_all(&b.argmax_set)
        ));
    }
    let verdict = if counterexamples.is_empty() { Verdict::Pass } else { Verdict::Fail };
    Ok(OptimalGreedyReport {
        m,
        k,
        verdict,
        max_a: a.best_b,
        max_b: b.best_b,
        max_g: Some(g.best_b),
        argmax_count: a.argmax_set.len(),
        argmax_a: a.argmax_set,
        recovered,
        counterexamples,
        instances_examined: instances,
    })
}

fn display_all(v: &[DelaySeq]) -> Vec<String> {
    v.iter().map(|d| d.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessaryConditionsReport {
    pub delays: DelaySeq,
    pub k: u32,
    /// False when the hypotheses could not even be set up.
    pub applicable: bool,
    pub holds: bool,
    /// `s_1..s_k`, when they could be recovered.
    pub s: Option<Vec<usize>>,
    pub checks: Vec<CheckReport>,
}

/// Structural properties every optimal sequence must have, evaluated by scan.
#[allow(clippy::needless_range_loop)]
pub fn check_optimal_necessary_conditions(d: &DelaySeq, k: u32) -> NecessaryConditionsReport {
    let mut report = NecessaryConditionsReport {
        delays: d.clone(),
        k,
        applicable: false,
        holds: false,
        s: None,
        checks: Vec::new(),
    };
    let m = d.len();
    let ku = k as usize;
    if m < 2 || k == 0 || ku >= m || !in_class_a(d) {
        report.checks.push(fail(
            "hypotheses",
            format!("need d in A_M, M >= 2 and 1 <= k <= M-1 (d={d}, k={k})"),
        ));
        return report;
    }
    let table = match BTable::by_scan(d, k + 1, &Scanner::default()) {
        Ok(t) => t,
        Err(e) => {
            report.checks.push(fail("hypotheses", e.to_string()));
            return report;
        }
    };
    report.applicable = true;
    let b = |len: usize, i: usize| table.get(len, i as u32);
    let dd = |l: usize| d.get(l);
    let full = b(m, ku);

    let mut checks = vec![
        verdict("nondecreasing", d.is_nondecreasing(), format!("{d} decreases")),
        verdict(
            "value-at-least-last",
            full >= dd(m),
            format!("B={full} < d_M={}", dd(m)),
        ),
    ];

    // s_k, then s_{k-1}..s_1.
    let mut s = vec![0usize; ku + 1];
    let last_at_most = |upto: usize, limit: u64| (1..=upto).rev().find(|&l| dd(l) <= limit);
    let mut recovered = true;
    match last_at_most(m, full) {
        Some(l) => s[ku] = l,
        None => recovered = false,
    }
    for i in (1..ku).rev() {
        if !recovered || s[i + 1] < 2 {
            recovered = false;
            break;
        }
        match last_at_most(s[i + 1] - 1, b(s[i + 1] - 1, i)) {
            Some(l) => s[i] = l,
            None => recovered = false,
        }
    }
    if !recovered {
        checks.push(fail("s-recovery", format!("no admissible s_i for d={d}, k={k}")));
        report.holds = false;
        report.checks = checks;
        return report;
    }
    report.s = Some(s[1..].to_vec());

    let sk = s[ku];
    checks.push(verdict(
        "eq3",
        sk == m && b(sk, ku) == dd(sk) + b(sk - 1, ku - 1),
        format!("s_k={sk}, M={m}"),
    ));
    let bad4: Vec<usize> = (1..=ku).filter(|&i| s[i] < i + 1).collect();
    checks.push(verdict("eq4", bad4.is_empty(), format!("s_i < i+1 at i={bad4:?}")));
    let mut bad5 = Vec::new();
    for i in 1..ku {
        let target = b(s[i], i);
        let flat = (s[i]..s[i + 1]).all(|l| b(l, i) == target);
        if !flat || target != dd(s[i]) + b(s[i] - 1, i - 1) {
            bad5.push(i);
        }
    }
    checks.push(verdict("eq5", bad5.is_empty(), format!("fails at i={bad5:?}")));
    let mut running = 0u64;
    let mut bad6 = Vec::new();
    for i in 1..=ku {
        running += dd(s[i]);
        if b(s[i], i) != running {
            bad6.push(i);
        }
    }
    checks.push(verdict("eq6", bad6.is_empty(), format!("fails at i={bad6:?}")));
    let bad7: Vec<usize> = (1..ku)
        .filter(|&i| b(s[i], i + 1) + 1 < dd(s[i] + 1))
        .collect();
    checks.push(verdict("eq7", bad7.is_empty(), format!("fails at i={bad7:?}")));
    let bad8: Vec<usize> = (1..=ku).filter(|&i| b(s[i] - 1, i) + 1 < dd(s[i])).collect();
    checks.push(verdict("eq8", bad8.is_empty(), format!("fails at i={bad8:?}")));
    let bad9: Vec<usize> = (1..ku)
        .filter(|&i| b(s[i], i + 1) != dd(s[i]) + b(s[i] - 1, i))
        .collect();
    checks.push(verdict("eq9", bad9.is_empty(), format!("fails at i={bad9:?}")));
    let bad10: Vec<usize> = (1..=ku)
        .filter(|&i| s[i] < 2 || b(s[i] - 1, i) != dd(s[i] - 1) + b(s[i] - 2, i - 1))
        .collect();
    checks.push(verdict("eq10", bad10.is_empty(), format!("fails at i={bad10:?}")));

    report.holds = checks.iter().all(|c| c.holds);
    report.checks = checks;
    report
}

fn verdict(name: &str, ok: bool, detail: String) -> CheckReport {
    if ok {
        CheckReport {
            name: name.to_string(),
            holds: true,
            vacuous: false,
            detail: None,
        }
    } else {
        fail(name, detail)
    }
}

fn fail(name: &str, detail: String) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        holds: false,
        vacuous: false,
        detail: Some(detail),
    }
}

/// Membership of `d` in the given space (`G` needs `k`).
pub fn in_space(d: &DelaySeq, space: Space, k: u32) -> bool {
    match space {
        Space::G => recover_partition(d, k as usize).is_some(),
        Space::A => in_class_a(d),
        Space::B => in_class_b(d),
    }
}

/// `B(d; k)` of each member of a result, rescanned.
pub fn rescan(result: &SearchResult) -> Result<Vec<u64>> {
    let scanner = Scanner::default();
    result
        .argmax_set
        .iter()
        .map(|d| scanner.scan(d, result.k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u64]) -> DelaySeq {
        DelaySeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn class_sizes() {
        let a: Vec<u128> = (1..=8).map(|m| class_size(Space::A, m).unwrap()).collect();
        assert_eq!(a, vec![1, 2, 7, 41, 397, 6377, 171886, 7892642]);
        let b: Vec<u128> = (1..=8).map(|m| class_size(Space::B, m).unwrap()).collect();
        assert_eq!(b, vec![1, 2, 5, 17, 86, 698, 9551, 226592]);
        assert_eq!(class_size(Space::A, 20), None);
        assert!(size_estimate(Space::A, 30) > size_estimate(Space::A, 12));
        assert_eq!(size_estimate(Space::A, 8), 7892642);
    }

    #[test]
    fn small_optima() {
        let opts = SearchOptions::default();
        let r = brute_force_optimal(2, 1, Space::A, &opts).unwrap();
        assert_eq!(r.best_b, 2);
        assert_eq!(r.argmax_set, vec![seq(&[1, 2])]);
        assert_eq!(r.instances_examined, 2);

        let r = brute_force_optimal(6, 2, Space::A, &opts).unwrap();
        assert_eq!(r.best_b, 17);
        assert!(r.argmax_set.contains(&seq(&[1, 2, 3, 6, 10, 14])));
        assert_eq!(r.instances_examined, 6377);

        let r = brute_force_optimal(5, 5, Space::B, &opts).unwrap();
        assert_eq!(r.best_b, 31);
        assert_eq!(r.argmax_set, vec![seq(&[1, 2, 4, 8, 16])]);
    }

    #[test]
    fn greedy_examples() {
        let r = greedy_optimal(6, 2).unwrap();
        assert_eq!(r.best_b, 17);
        // n=(4,2) ties with n=(3,3).
        assert_eq!(r.argmax_set, vec![seq(&[1, 2, 3, 4, 8, 13]), seq(&[1, 2, 3, 6, 10, 14])]);
        assert_eq!(r.argmax_partitions[0][0].parts(), &[4, 2]);
        assert_eq!(r.argmax_partitions[1][0].parts(), &[3, 3]);
        assert_eq!(r.instances_examined, 4);

        let r = greedy_optimal(2, 1).unwrap();
        assert_eq!((r.best_b, r.argmax_set.clone()), (2, vec![seq(&[1, 2])]));
    }

    #[test]
    fn caps() {
        let opts = SearchOptions::default();
        let e = brute_force_optimal(13, 3, Space::A, &opts).unwrap_err();
        assert!(matches!(e, Error::SpaceTooLarge { space: 'A', m: 13, cap: 12, .. }));
        assert!(e.is_capacity());
        assert!(brute_force_optimal(15, 3, Space::B, &opts).is_err());
    }

    #[test]
    fn evaluators_pruning_and_workers_agree() {
        for m in 2..=7 {
            for k in 1..=m as u32 {
                for space in [Space::A, Space::B] {
                    let base = brute_force_optimal(m, k, space, &SearchOptions::default()).unwrap();
                    let variants = [
                        SearchOptions { evaluator: Evaluator::Scan, workers: 1, ..Default::default() },
                        SearchOptions { prune: true, ..Default::default() },
                        SearchOptions { prune: true, workers: 1, ..Default::default() },
                        SearchOptions { workers: 3, ..Default::default() },
                    ];
                    for opts in variants {
                        let r = brute_force_optimal(m, k, space, &opts).unwrap();
                        assert_eq!((r.best_b, &r.argmax_set), (base.best_b, &base.argmax_set));
                    }
                    assert!(rescan(&base).unwrap().iter().all(|&v| v == base.best_b));
                }
            }
        }
    }

    #[test]
    fn optimal_is_greedy_examples() {
        let opts = SearchOptions::default();
        let r = verify_optimal_is_greedy(4, 2, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.counterexamples);

        let r = verify_optimal_is_greedy(6, 2, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let i = r.argmax_a.iter().position(|d| d == &seq(&[1, 2, 3, 6, 10, 14])).unwrap();
        assert_eq!(r.recovered[i].as_ref().unwrap().parts(), &[3, 3]);

        let r = verify_optimal_is_greedy(4, 4, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::DegeneratePass);
        assert_eq!(r.argmax_a, vec![seq(&[1, 2, 4, 8])]);
    }

    #[test]
    fn necessary_conditions() {
        let r = check_optimal_necessary_conditions(&seq(&[1, 2, 3, 6, 10, 14]), 2);
        assert!(r.holds, "{:?}", r.checks);
        assert_eq!(r.s, Some(vec![3, 6]));

        let opts = SearchOptions::default();
        let best = brute_force_optimal(4, 3, Space::A, &opts).unwrap();
        for d in &best.argmax_set {
            let r = check_optimal_necessary_conditions(d, 3);
            assert!(r.holds, "{d}: {:?}", r.checks);
        }

        let r = check_optimal_necessary_conditions(&seq(&[1, 2, 4, 8]), 2);
        assert!(r.applicable);
        assert!(!r.holds);
    }

    #[test]
    fn serialization_skips_timing() {
        let r = greedy_optimal(4, 2).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"best_B\""));
        assert!(!json.contains("wall_time"));
    }
}
