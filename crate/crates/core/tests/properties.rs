use delayline::ctransform::{c_transform, in_class_a, in_class_b, reconstruct, unique_representation_check};
use delayline::greedy::{
    count_n, enumerate_n, greedy_from_partition, normalize_partition, recover_partition, BSource,
    GreedyMode, PartitionSeq, Strictness,
};
use delayline::mri::{mri_recursive, mri_scan, BTable, MriQuery, ScanStrategy, Scanner};
use delayline::simulator::{effective_capacity, simulate_compressor, Disposition, Mode, SimConfig};
use delayline::DelaySeq;
use proptest::prelude::*;

fn seq(v: Vec<u64>) -> DelaySeq {
    DelaySeq::new(v).unwrap()
}

/// Map raw numbers onto a class-A sequence of the same length.
fn shape_a(raw: &[u64]) -> DelaySeq {
    let mut out = Vec::with_capacity(raw.len());
    let mut sum = 0u64;
    for (i, &r) in raw.iter().enumerate() {
        let v = if i == 0 { 1 } else { 1 + r % (sum + 1) };
        out.push(v);
        sum += v;
    }
    seq(out)
}

fn class_a(max_len: usize) -> impl Strategy<Value = DelaySeq> {
    prop::collection::vec(any::<u64>(), 0..=max_len).prop_map(|r| shape_a(&r))
}

/// Independent oracle: the first value whose transform uses more than `k` ones.
fn oracle_b(d: &DelaySeq, k: u32) -> u64 {
    (0..=d.total())
        .find(|&x| c_transform(x, d).unwrap().popcount() > k)
        .map_or(d.total(), |x| x - 1)
}

fn all_sequences(len: usize, max_entry: u64, f: &mut impl FnMut(&[u64])) {
    fn walk(cur: &mut Vec<u64>, len: usize, max_entry: u64, f: &mut impl FnMut(&[u64])) {
        f(cur);
        if cur.len() == len {
            return;
        }
        for v in 1..=max_entry {
            cur.push(v);
            walk(cur, len, max_entry, f);
            cur.pop();
        }
    }
    walk(&mut Vec::new(), len, max_entry, f);
}

#[test]
fn class_a_iff_unique_representation_exhaustive() {
    let mut n = 0;
    all_sequences(6, 7, &mut |v| {
        let d = seq(v.to_vec());
        assert_eq!(in_class_a(&d), unique_representation_check(&d).unwrap(), "{d}");
        if in_class_b(&d) {
            assert!(in_class_a(&d), "{d} in B but not A");
        }
        n += 1;
    });
    assert!(n > 100_000);
}

#[test]
fn recursive_matches_scan_exhaustive() {
    all_sequences(7, 10, &mut |v| {
        let d = seq(v.to_vec());
        if !in_class_a(&d) || !d.is_nondecreasing() {
            return;
        }
        for k in 0..=d.len() as u32 + 1 {
            let q = MriQuery::new(d.clone(), k);
            assert_eq!(mri_recursive(&q).unwrap().value, mri_scan(&q).unwrap(), "{d} k={k}");
        }
    });
}

#[test]
fn capacity_is_first_violation_minus_one() {
    all_sequences(6, 6, &mut |v| {
        let d = seq(v.to_vec());
        if v.is_empty() || !in_class_a(&d) {
            return;
        }
        for k in 0..=d.len() as u32 {
            assert_eq!(effective_capacity(&d, k, Mode::Compressor).unwrap(), oracle_b(&d, k));
        }
    });
}

#[test]
fn large_greedy_modes_agree() {
    // M = 20, spread across several block shapes.
    for parts in [vec![2usize; 10], vec![5, 5, 5, 5], vec![3, 1, 4, 1, 5, 6], vec![19, 1]] {
        let n = PartitionSeq::new(parts).unwrap();
        let cf = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict).unwrap();
        let rec =
            greedy_from_partition(&n, GreedyMode::RecursiveB(BSource::Recursive), Strictness::Strict)
                .unwrap();
        assert_eq!(cf, rec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn class_a_iff_unique(raw in prop::collection::vec(1u64..=9, 0..=8)) {
        let d = seq(raw);
        prop_assert_eq!(in_class_a(&d), unique_representation_check(&d).unwrap());
    }

    #[test]
    fn round_trip(d in class_a(10), frac in 0.0f64..=1.0) {
        let x = (d.total() as f64 * frac) as u64;
        let r = c_transform(x, &d).unwrap();
        prop_assert_eq!(reconstruct(&r.bits, &d).unwrap(), x);
        prop_assert_eq!(r.residual, 0);
    }

    #[test]
    fn recurrence_table_matches_scan(d in class_a(10), budget in 0u32..12) {
        let scan = BTable::by_scan(&d, budget, &Scanner::default()).unwrap();
        let rec = BTable::by_recurrence(&d, budget).unwrap();
        prop_assert_eq!(&scan, &rec);
        let inc = Scanner { strategy: ScanStrategy::Incremental, ..Scanner::default() };
        prop_assert_eq!(inc.scan_all_budgets(&d, budget).unwrap(), scan.row(d.len()).to_vec());
    }

    #[test]
    fn scan_matches_independent_oracle(d in class_a(9), k in 0u32..10) {
        prop_assert_eq!(mri_scan(&MriQuery::new(d.clone(), k)).unwrap(), oracle_b(&d, k));
    }

    #[test]
    fn greedy_modes_agree(raw in prop::collection::vec(1usize..=4, 1..=8)) {
        let mut parts = raw;
        parts[0] += 1;
        let n = PartitionSeq::new(parts).unwrap();
        prop_assume!(n.m() <= 20);
        let cf = greedy_from_partition(&n, GreedyMode::ClosedForm, Strictness::Strict).unwrap();
        let rec = greedy_from_partition(&n, GreedyMode::RecursiveB(BSource::Recursive), Strictness::Strict).unwrap();
        prop_assert_eq!(&cf, &rec);
        prop_assert!(in_class_b(&cf.delays));
        let back = recover_partition(&cf.delays, n.k()).unwrap();
        let again = greedy_from_partition(&back, GreedyMode::ClosedForm, Strictness::Strict).unwrap();
        prop_assert_eq!(again.delays, cf.delays);
    }

    #[test]
    fn normalization_is_sound(raw in prop::collection::vec(1usize..=4, 2..=7)) {
        let mut parts = raw;
        parts[0] = 1;
        let n = PartitionSeq::new(parts).unwrap();
        let direct = greedy_from_partition(&n, GreedyMode::RecursiveB(BSource::Scan), Strictness::Permissive).unwrap();
        match normalize_partition(&n) {
            Ok(norm) => {
                prop_assert!(norm.in_n());
                prop_assert_eq!(norm.m(), n.m());
                let cf = greedy_from_partition(&norm, GreedyMode::ClosedForm, Strictness::Strict).unwrap();
                prop_assert_eq!(cf.delays, direct.delays);
            }
            Err(_) => prop_assert!(n.parts().iter().all(|&p| p == 1)),
        }
    }

    #[test]
    fn enumeration_counts(m in 2usize..=14, k in 1usize..=13) {
        prop_assume!(k < m);
        let all: Vec<PartitionSeq> = enumerate_n(m, k).unwrap().collect();
        prop_assert_eq!(all.len() as u128, count_n(m, k));
        prop_assert!(all.windows(2).all(|w| w[0].parts() < w[1].parts()));
        prop_assert!(all.iter().all(|n| n.in_n() && n.m() == m && n.k() == k));
    }

    #[test]
    fn compressor_timing_is_exact(
        d in class_a(7),
        k in 0u32..8,
        gaps in prop::collection::vec((1u64..4, 0u64..200), 0..40),
    ) {
        prop_assume!(!d.is_empty());
        let mut t = 0;
        let arrivals: Vec<(u64, u64)> = gaps.iter().map(|&(g, x)| { t += g; (t, x) }).collect();
        let cfg = SimConfig { d: d.clone(), k, horizon: 1 << 20, mode: Mode::Compressor, seed: 0 };
        let (traces, report) = simulate_compressor(&cfg, &arrivals).unwrap();
        prop_assert!(report.capacity_violations.is_empty());
        for p in traces {
            match p.disposition {
                Disposition::LostOverflow => prop_assert!(p.assigned_delay > d.total()),
                _ => {
                    prop_assert_eq!(p.departure_slot, Some(p.arrival_slot + p.assigned_delay));
                    prop_assert_eq!(p.recirculations as usize, p.fiber_entry_slots.len());
                }
            }
        }
    }
}
