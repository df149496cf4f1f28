//! Slotted simulation of the two self-routed constructions: a linear
//! compressor fed by one input, and a 2-to-1 FIFO multiplexer.
//!
//! A packet with delay `x` arriving at slot `t` enters fiber `i` (when bit
//! `i` is set) at `t + sum_{j<i} bits_j d_j` and leaves at `t + x`. Fibers are
//! tracked only by their entry slots; exit is entry plus delay. Packets that
//! need more than `k` recirculations are simulated to completion and flagged.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctransform::{c_transform, in_class_a, in_class_b, DelaySeq};
use crate::error::{Error, Result};
use crate::mri::{mri_scan, MriQuery};

/// Largest supported horizon, in slots.
pub const MAX_HORIZON: u64 = 1 << 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Compressor,
    FifoMux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Delivered,
    LostOverflow,
    FlaggedUnreliable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketTrace {
    pub id: u64,
    /// 1 or 2 for the multiplexer; always 1 for the compressor.
    pub input: u8,
    pub arrival_slot: u64,
    pub assigned_delay: u64,
    /// Empty for lost packets.
    pub route_bits: Vec<u8>,
    /// `(fiber index, entry slot)`, 1-based fiber index.
    pub fiber_entry_slots: Vec<(usize, u64)>,
    pub departure_slot: Option<u64>,
    pub recirculations: u32,
    pub disposition: Disposition,
}

impl PacketTrace {
    pub fn departed(&self) -> bool {
        self.departure_slot.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: DelaySeq,
    pub k: u32,
    pub horizon: u64,
    pub mode: Mode,
    pub seed: u64,
}

impl SimConfig {
    fn check(&self, expect: Mode) -> Result<()> {
        if self.mode != expect {
            return Err(Error::PreconditionViolated(format!(
                "configuration is for {:?}, not {:?}",
                self.mode, expect
            )));
        }
        if self.horizon > MAX_HORIZON {
            return Err(Error::InvalidRange(format!(
                "horizon {} exceeds 2^48 slots",
                self.horizon
            )));
        }
        let ok = match self.mode {
            Mode::Compressor => in_class_a(&self.d),
            Mode::FifoMux => in_class_b(&self.d),
        };
        if !ok {
            return Err(match self.mode {
                Mode::Compressor => Error::NotInClassA(self.d.to_string()),
                Mode::FifoMux => Error::NotInClassB(self.d.to_string()),
            });
        }
        Ok(())
    }
}

/// A slot where more than one packet uses the same resource.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    /// Fiber index, or 0 for the departure link.
    pub fiber: usize,
    pub slot: u64,
    pub packets: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub packets: u64,
    pub delivered: u64,
    pub flagged_unreliable: u64,
    pub lost_overflow: u64,
    pub fiber_conflicts: Vec<Collision>,
    pub departure_conflicts: Vec<Collision>,
    /// Pairs `(earlier, later)` of packet ids that depart out of order.
    pub fifo_violations: Vec<(u64, u64)>,
    /// Slots with packets buffered but no departure.
    pub work_conservation_violations: Vec<u64>,
    /// Packets with `x <= B(d;k)` that were still flagged.
    pub capacity_violations: Vec<u64>,
    pub effective_capacity: u64,
}

impl ConflictReport {
    pub fn clean(&self) -> bool {
        self.fiber_conflicts.is_empty()
            && self.departure_conflicts.is_empty()
            && self.fifo_violations.is_empty()
            && self.work_conservation_violations.is_empty()
            && self.capacity_violations.is_empty()
    }
}

/// `B(d; k)` after checking that `d` suits the construction.
pub fn effective_capacity(d: &DelaySeq, k: u32, mode: Mode) -> Result<u64> {
    match mode {
        Mode::Compressor if !in_class_a(d) => return Err(Error::NotInClassA(d.to_string())),
        Mode::FifoMux if !in_class_b(d) => return Err(Error::NotInClassB(d.to_string())),
        _ => {}
    }
    mri_scan(&MriQuery::new(d.clone(), k))
}

/// Route one packet. It is flagged when it needs more than `k` fibers, or
/// when `flag_above` is set and its delay exceeds that value.
fn route(
    id: u64,
    input: u8,
    t: u64,
    x: u64,
    d: &DelaySeq,
    k: u32,
    flag_above: Option<u64>,
) -> PacketTrace {
    let Ok(rep) = c_transform(x, d) else {
        return PacketTrace {
            id,
            input,
            arrival_slot: t,
            assigned_delay: x,
            route_bits: Vec::new(),
            fiber_entry_slots: Vec::new(),
            departure_slot: None,
            recirculations: 0,
            disposition: Disposition::LostOverflow,
        };
    };
    let mut entries = Vec::new();
    let mut clock = t;
    for (i, (&bit, &di)) in rep.bits.iter().zip(d.as_slice()).enumerate() {
        if bit == 1 {
            entries.push((i + 1, clock));
            clock += di;
        }
    }
    let recirculations = rep.popcount();
    PacketTrace {
        id,
        input,
        arrival_slot: t,
        assigned_delay: x,
        route_bits: rep.bits,
        fiber_entry_slots: entries,
        departure_slot: Some(clock),
        recirculations,
        disposition: if recirculations > k || flag_above.is_some_and(|c| x > c) {
            Disposition::FlaggedUnreliable
        } else {
            Disposition::Delivered
        },
    }
}

fn collisions(
    traces: &[PacketTrace],
    resources: impl Fn(&PacketTrace) -> Vec<(usize, u64)>,
) -> Vec<Collision> {
    let mut use_map: BTreeMap<(usize, u64), Vec<u64>> = BTreeMap::new();
    for p in traces {
        for key in resources(p) {
            use_map.entry(key).or_default().push(p.id);
        }
    }
    use_map
        .into_iter()
        .filter(|(_, ids)| ids.len() > 1)
        .map(|((fiber, slot), packets)| Collision {
            fiber,
            slot,
            packets,
        })
        .collect()
}

fn summarize(traces: &[PacketTrace], capacity: u64) -> ConflictReport {
    let mut r = ConflictReport {
        packets: traces.len() as u64,
        effective_capacity: capacity,
        ..Default::default()
    };
    for p in traces {
        match p.disposition {
            Disposition::Delivered => r.delivered += 1,
            Disposition::FlaggedUnreliable => {
                r.flagged_unreliable += 1;
                if p.assigned_delay <= capacity {
                    r.capacity_violations.push(p.id);
                }
            }
            Disposition::LostOverflow => r.lost_overflow += 1,
        }
    }
    r.fiber_conflicts = collisions(traces, |p| p.fiber_entry_slots.clone());
    r.departure_conflicts = collisions(traces, |p| {
        p.departure_slot.map(|s| (0usize, s)).into_iter().collect()
    });
    r
}

/// Run a single-input compressor over `(slot, requested delay)` arrivals.
pub fn simulate_compressor(
    cfg: &SimConfig,
    arrivals: &[(u64, u64)],
) -> Result<(Vec<PacketTrace>, ConflictReport)> {
    cfg.check(Mode::Compressor)?;
    for (i, w) in arrivals.windows(2).enumerate() {
        if w[1].0 <= w[0].0 {
            return Err(Error::MalformedArrivals(format!(
                "arrival {} at slot {} does not follow slot {}",
                i + 2,
                w[1].0,
                w[0].0
            )));
        }
    }
    if let Some(&(t, _)) = arrivals.iter().find(|(t, _)| *t >= cfg.horizon) {
        return Err(Error::MalformedArrivals(format!(
            "arrival at slot {t} is past the horizon {}",
            cfg.horizon
        )));
    }
    let capacity = effective_capacity(&cfg.d, cfg.k, Mode::Compressor)?;
    let traces: Vec<PacketTrace> = arrivals
        .iter()
        .enumerate()
        .map(|(id, &(t, x))| route(id as u64, 1, t, x, &cfg.d, cfg.k, None))
        .collect();
    let report = summarize(&traces, capacity);
    Ok((traces, report))
}

/// Random `(slot, delay)` arrivals: each slot carries a packet with
/// probability `p`, with delay uniform in `0..=max_delay`.
pub fn random_compressor_arrivals(horizon: u64, p: f64, max_delay: u64, seed: u64) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon)
        .filter_map(|t| match rng.gen_bool(p) {
            true => Some((t, rng.gen_range(0..=max_delay))),
            false => None,
        })
        .collect()
}

/// Delay assignment for the multiplexer.
pub trait DelayPolicy {
    /// Delay for a packet arriving at `slot`, given the departure slots of
    /// every accepted packet that has not left before `slot`.
    fn assign(&mut self, slot: u64, pending: &VecDeque<u64>) -> u64;
}

/// `x` = number of accepted packets still buffered.
#[derive(Debug, Clone, Copy, Default)]
pub struct BacklogPolicy;

impl DelayPolicy for BacklogPolicy {
    fn assign(&mut self, _slot: u64, pending: &VecDeque<u64>) -> u64 {
        pending.len() as u64
    }
}

/// Two Bernoulli arrival streams over `0..horizon`.
pub fn bernoulli_streams(horizon: u64, p1: f64, p2: f64, seed: u64) -> (Vec<bool>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon)
        .map(|_| (rng.gen_bool(p1), rng.gen_bool(p2)))
        .unzip()
}

pub fn simulate_fifo_mux(
    cfg: &SimConfig,
    input1: &[bool],
    input2: &[bool],
) -> Result<(Vec<PacketTrace>, ConflictReport)> {
    simulate_fifo_mux_with(cfg, input1, input2, &mut BacklogPolicy)
}

pub fn simulate_fifo_mux_with(
    cfg: &SimConfig,
    input1: &[bool],
    input2: &[bool],
    policy: &mut dyn DelayPolicy,
) -> Result<(Vec<PacketTrace>, ConflictReport)> {
    cfg.check(Mode::FifoMux)?;
    if input1.len() != input2.len() {
        return Err(Error::MalformedArrivals(format!(
            "input streams have lengths {} and {}",
            input1.len(),
            input2.len()
        )));
    }
    if input1.len() as u64 > cfg.horizon {
        return Err(Error::MalformedArrivals(format!(
            "streams cover {} slots, beyond the horizon {}",
            input1.len(),
            cfg.horizon
        )));
    }
    let capacity = effective_capacity(&cfg.d, cfg.k, Mode::FifoMux)?;
    let mut traces = Vec::new();
    let mut pending: VecDeque<u64> = VecDeque::new();
    let mut id = 0u64;
    for (t, (&a1, &a2)) in input1.iter().zip(input2).enumerate() {
        let t = t as u64;
        while pending.front().is_some_and(|&dep| dep < t) {
            pending.pop_front();
        }
        for (input, busy) in [(1u8, a1), (2u8, a2)] {
            if !busy {
                continue;
            }
            let x = policy.assign(t, &pending);
            let trace = route(id, input, t, x, &cfg.d, cfg.k, Some(capacity));
            if let Some(dep) = trace.departure_slot {
                pending.push_back(dep);
            }
            traces.push(trace);
            id += 1;
        }
    }
    let mut report = summarize(&traces, capacity);
    report.fifo_violations = fifo_violations(&traces);
    report.work_conservation_violations = idle_slots(&traces);
    Ok((traces, report))
}

/// Departed packets must leave in arrival order (ids are assigned in that order).
fn fifo_violations(traces: &[PacketTrace]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut last: Option<(u64, u64)> = None;
    for p in traces {
        let Some(dep) = p.departure_slot else { continue };
        if let Some((prev_id, prev_dep)) = last {
            if dep <= prev_dep {
                out.push((prev_id, p.id));
            }
        }
        last = Some((p.id, dep));
    }
    out
}

/// Slots in which some packet has arrived and not yet departed, yet nobody departs.
fn idle_slots(traces: &[PacketTrace]) -> Vec<u64> {
    let mut events: BTreeMap<u64, (i64, bool)> = BTreeMap::new();
    for p in traces {
        let Some(dep) = p.departure_slot else { continue };
        events.entry(p.arrival_slot).or_default().0 += 1;
        let e = events.entry(dep).or_default();
        e.1 = true;
        // Leaves after its departure slot.
        events.entry(dep + 1).or_default().0 -= 1;
    }
    let mut out = Vec::new();
    let mut buffered = 0i64;
    let mut prev: Option<u64> = None;
    for (&slot, &(delta, departs)) in &events {
        if let Some(p) = prev {
            // Slots strictly between events keep the same population and no departure.
            if buffered > 0 && slot > p + 1 {
                out.extend(p + 1..slot);
            }
        }
        buffered += delta;
        if buffered > 0 && !departs {
            out.push(slot);
        }
        prev = Some(slot);
    }
    out
}
