//! Structure-exploiting learners: four threshold algorithms, the k-intervals
//! order-recovery learner, and the two Hamming-ball learners.
//!
//! Each learner drives a full trial against an [`Adversary`], issuing all its
//! oracle queries through the given [`OracleSession`] so the session counters
//! are the authoritative query account. The embedded version-space phases are
//! tolerant: when a foreign environment empties the version space, the learner
//! records an event and falls back to predicting 0 instead of aborting.

use std::collections::HashSet;

use rand::Rng;

use crate::core::{expand, k_interval_patterns, HiddenClassSpec, LabeledSample, Labeling, LittlestoneSolver};
use crate::error::{Error, Result};
use crate::learners::{Adversary, TrialRecord};
use crate::oracles::OracleSession;

fn pair(a: usize, ya: bool, b: usize, yb: bool) -> LabeledSample {
    LabeledSample::new(vec![(a, ya), (b, yb)]).expect("distinct points")
}

/// Threshold comparison by weak consistency: `{(a,0),(b,1)}` is realizable
/// iff `rank(a) < rank(b)`.
fn wc_less(session: &mut OracleSession, a: usize, b: usize) -> Result<bool> {
    Ok(session.wc_query(&pair(a, false, b, true))?.is_realizable())
}

/// Threshold comparison by ERM: `{(a,0),(b,1)}` is realizable iff
/// `rank(a) < rank(b)`.
fn erm_less(session: &mut OracleSession, a: usize, b: usize) -> Result<bool> {
    Ok(session.erm_query(&pair(a, false, b, true))?.is_some())
}

/// Version-space majority prediction over a fixed candidate list, with ties
/// broken toward the majority of labels observed so far in the trial
/// (defaulting to 1). Tolerant: once the candidate set empties it predicts 0.
struct HalvingPhase {
    candidates: Vec<Labeling>,
    surviving: Vec<usize>,
    zeros_seen: usize,
    ones_seen: usize,
    emptied: bool,
}

impl HalvingPhase {
    fn new(candidates: Vec<Labeling>) -> Self {
        let surviving = (0..candidates.len()).collect();
        HalvingPhase { candidates, surviving, zeros_seen: 0, ones_seen: 0, emptied: false }
    }

    fn tie_label(&self) -> bool {
        self.zeros_seen <= self.ones_seen
    }

    fn predict(&self, x: usize) -> bool {
        if self.surviving.is_empty() {
            return false;
        }
        let ones = self
            .surviving
            .iter()
            .filter(|&&i| self.candidates[i].get(x))
            .count();
        let zeros = self.surviving.len() - ones;
        if ones == zeros {
            self.tie_label()
        } else {
            ones > zeros
        }
    }

    fn observe_label(&mut self, y: bool) {
        if y {
            self.ones_seen += 1;
        } else {
            self.zeros_seen += 1;
        }
    }

    /// Drops candidates disagreeing with `(x, y)`. Returns true the first
    /// time the surviving set becomes empty.
    fn restrict(&mut self, x: usize, y: bool) -> bool {
        let was_nonempty = !self.surviving.is_empty();
        let candidates = &self.candidates;
        self.surviving.retain(|&i| candidates[i].get(x) == y);
        if was_nonempty && self.surviving.is_empty() && !self.emptied {
            self.emptied = true;
            return true;
        }
        false
    }
}

/// The `T + 1` threshold labelings induced by an ordering of (a subset of)
/// the domain, with every point outside the ordering fixed to its known
/// label (0 when unknown).
fn threshold_candidates(known: &[Option<bool>], order: &[usize], t: usize) -> Vec<Labeling> {
    (0..=order.len())
        .map(|j| {
            let mut bits: Vec<bool> = (0..t).map(|p| known[p].unwrap_or(false)).collect();
            for (pos, &p) in order.iter().enumerate() {
                bits[p] = pos >= j;
            }
            Labeling::new(bits)
        })
        .collect()
}

fn merge_sort_by_wc(session: &mut OracleSession, points: &[usize]) -> Result<Vec<usize>> {
    if points.len() <= 1 {
        return Ok(points.to_vec());
    }
    let mid = points.len() / 2;
    let left = merge_sort_by_wc(session, &points[..mid])?;
    let right = merge_sort_by_wc(session, &points[mid..])?;
    let mut out = Vec::with_capacity(points.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if wc_less(session, left[i], right[j])? {
            out.push(left[i]);
            i += 1;
        } else {
            out.push(right[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&left[i..]);
    out.extend_from_slice(&right[j..]);
    Ok(out)
}

/// Result of a run that also recovers an ordering of the domain.
pub struct OrderedRun {
    pub order: Vec<usize>,
    pub record: TrialRecord,
}

/// Merge-sorts the domain by rank with one WC query per comparison, validates
/// adjacent pairs, then predicts with halving over the induced threshold
/// labelings. WC queries are at most `T*ceil(log2 T) + T`; mistakes at most
/// `ceil(log2(T+1))`. With `strict` set, an adjacency violation (a cyclic
/// comparison structure, impossible for a true threshold session) aborts with
/// `InconsistentOracle`; otherwise it is recorded as an event.
pub fn threshold_sort_wc(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
    strict: bool,
) -> Result<OrderedRun> {
    let t = adversary.horizon();
    let mut record = TrialRecord::new("thr-sort-wc", 0);
    let points: Vec<usize> = (0..t).collect();
    let order = merge_sort_by_wc(session, &points)?;
    for w in order.windows(2) {
        if !wc_less(session, w[0], w[1])? {
            if strict {
                return Err(Error::InconsistentOracle(format!(
                    "adjacent pair ({}, {}) violates the recovered order",
                    w[0], w[1]
                )));
            }
            record.events.push(format!("order violation at adjacent pair ({}, {})", w[0], w[1]));
        }
    }
    let known = vec![None; t];
    let mut phase = HalvingPhase::new(threshold_candidates(&known, &order, t));
    for round in 0..t {
        let x = adversary.instance(round);
        let predicted = phase.predict(x);
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
        phase.observe_label(actual);
        if phase.restrict(x, actual) {
            record.events.push("version space emptied; falling back to 0".into());
        }
    }
    record.counters = session.counters();
    Ok(OrderedRun { order, record })
}

/// Boundary-tracking randomized threshold learner using only WC queries.
/// Arriving points are classified against the rightmost known 0 (`r`) and the
/// leftmost known 1 (`l`) with two queries; points inside the uncertainty
/// region are placed by `m = ceil(36 ln(1/delta))` sampled comparisons, with
/// the middle estimate band predicting 0. Before both boundaries exist it
/// predicts 0 until the first 1, then 1 until the first 0.
pub fn threshold_rand_wc<R: Rng>(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
    delta: f64,
    rng: &mut R,
) -> Result<TrialRecord> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {delta}")));
    }
    let t = adversary.horizon();
    let m = (36.0 * (1.0 / delta).ln()).ceil() as usize;
    let mut record = TrialRecord::new("thr-rand-wc", 0);
    let mut determined: Vec<Option<bool>> = vec![None; t];
    let mut pool: Vec<usize> = (0..t).collect();
    let mut r: Option<usize> = None;
    let mut l: Option<usize> = None;
    for round in 0..t {
        let x = adversary.instance(round);
        let predicted = if let Some(y) = determined[x] {
            y
        } else if r.is_none() || l.is_none() {
            l.is_some()
        } else {
            let (rb, lb) = (r.unwrap(), l.unwrap());
            if !session.wc_query(&pair(rb, false, x, true))?.is_realizable() {
                false
            } else if !session.wc_query(&pair(x, false, lb, true))?.is_realizable() {
                true
            } else {
                let mut hits = 0usize;
                for _ in 0..m {
                    let u = pool[rng.gen_range(0..pool.len())];
                    if u == x {
                        hits += 1;
                        continue;
                    }
                    if determined[u].is_some() {
                        if determined[u] == Some(false) {
                            hits += 1;
                        }
                        continue;
                    }
                    if !session.wc_query(&pair(rb, false, u, true))?.is_realizable() {
                        determined[u] = Some(false);
                        pool.retain(|&p| p != u);
                        hits += 1;
                        continue;
                    }
                    if !session.wc_query(&pair(u, false, lb, true))?.is_realizable() {
                        determined[u] = Some(true);
                        pool.retain(|&p| p != u);
                        continue;
                    }
                    if wc_less(session, u, x)? {
                        hits += 1;
                    }
                }
                let p_hat = hits as f64 / m as f64;
                p_hat >= 2.0 / 3.0
            }
        };
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
        determined[x] = Some(actual);
        pool.retain(|&p| p != x);
        if actual {
            l = match l {
                None => Some(x),
                Some(old) => Some(if wc_less(session, x, old)? { x } else { old }),
            };
        } else {
            r = match r {
                None => Some(x),
                Some(old) => Some(if wc_less(session, old, x)? { x } else { old }),
            };
        }
    }
    record.counters = session.counters();
    Ok(record)
}

fn erm_orientation(session: &mut OracleSession, z1: usize, z2: usize) -> Result<Labeling> {
    if let Some(c) = session.erm_query(&pair(z1, false, z2, true))? {
        return Ok(c);
    }
    session
        .erm_query(&pair(z2, false, z1, true))?
        .ok_or_else(|| {
            Error::InconsistentOracle(format!("neither orientation of ({z1}, {z2}) is realizable"))
        })
}

fn erm_partition_sort(session: &mut OracleSession, points: &[usize]) -> Result<Vec<usize>> {
    if points.len() <= 1 {
        return Ok(points.to_vec());
    }
    let c = erm_orientation(session, points[0], points[1])?;
    let (mut zeros, mut ones) = (Vec::new(), Vec::new());
    for &p in points {
        if c.get(p) {
            ones.push(p);
        } else {
            zeros.push(p);
        }
    }
    let mut out = erm_partition_sort(session, &zeros)?;
    out.extend(erm_partition_sort(session, &ones)?);
    Ok(out)
}

/// Deterministic ERM threshold learner: recovers the full ordering by
/// recursive ERM partitioning (at most `2T` ERM queries), then predicts with
/// halving over the induced threshold labelings (at most `ceil(log2(T+1))`
/// mistakes).
pub fn threshold_det_erm(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
) -> Result<OrderedRun> {
    let t = adversary.horizon();
    let mut record = TrialRecord::new("thr-det-erm", 0);
    let points: Vec<usize> = (0..t).collect();
    let order = erm_partition_sort(session, &points)?;
    let known = vec![None; t];
    let mut phase = HalvingPhase::new(threshold_candidates(&known, &order, t));
    for round in 0..t {
        let x = adversary.instance(round);
        let predicted = phase.predict(x);
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
        phase.observe_label(actual);
        if phase.restrict(x, actual) {
            record.events.push("version space emptied; falling back to 0".into());
        }
    }
    record.counters = session.counters();
    Ok(OrderedRun { order, record })
}

/// Randomized ERM threshold learner maintaining a known-0 / known-1 / unknown
/// partition. Unknown points are predicted through a balanced random split of
/// the unknown region; every mistake commits the falsified side and shrinks
/// the region by a factor of at least 2/3. Regions of size at most 5 are
/// sorted exactly and finished with halving. Mistakes are at most
/// `log_{3/2}(T) + 5`.
pub fn threshold_rand_erm<R: Rng>(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
    rng: &mut R,
) -> Result<TrialRecord> {
    let t = adversary.horizon();
    let mut record = TrialRecord::new("thr-rand-erm", 0);
    let mut known: Vec<Option<bool>> = vec![None; t];
    let mut unknown: Vec<usize> = (0..t).collect();
    let mut split: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut base: Option<HalvingPhase> = None;
    for round in 0..t {
        let x = adversary.instance(round);
        let predicted = if let Some(phase) = &base {
            known[x].unwrap_or_else(|| phase.predict(x))
        } else if let Some(y) = known[x] {
            y
        } else if unknown.len() <= 5 {
            let mut order = Vec::new();
            for &p in unknown.iter() {
                let pos = {
                    let mut pos = order.len();
                    for (i, &q) in order.iter().enumerate() {
                        if erm_less(session, p, q)? {
                            pos = i;
                            break;
                        }
                    }
                    pos
                };
                order.insert(pos, p);
            }
            let phase = HalvingPhase::new(threshold_candidates(&known, &order, t));
            let p = phase.predict(x);
            base = Some(phase);
            p
        } else {
            if split.is_none() {
                let mut attempts = 0;
                split = Some(loop {
                    attempts += 1;
                    if attempts > 1000 {
                        return Err(Error::InconsistentOracle(
                            "no balanced split found after 1000 attempts".into(),
                        ));
                    }
                    let i = rng.gen_range(0..unknown.len());
                    let mut j = rng.gen_range(0..unknown.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    let c = erm_orientation(session, unknown[i], unknown[j])?;
                    let (mut ul, mut ur) = (Vec::new(), Vec::new());
                    for &p in &unknown {
                        if c.get(p) {
                            ur.push(p);
                        } else {
                            ul.push(p);
                        }
                    }
                    if 3 * ul.len().min(ur.len()) >= unknown.len() {
                        break (ul, ur);
                    }
                });
            }
            let (ul, _ur) = split.as_ref().unwrap();
            !ul.contains(&x)
        };
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
        if let Some(phase) = &mut base {
            phase.observe_label(actual);
            if known[x].is_none() {
                if phase.restrict(x, actual) {
                    record.events.push("version space emptied; falling back to 0".into());
                }
                known[x] = Some(actual);
            }
            continue;
        }
        if known[x].is_none() {
            known[x] = Some(actual);
            unknown.retain(|&p| p != x);
            if predicted != actual {
                if let Some((ul, ur)) = split.take() {
                    let committed: &[usize] = if actual { &ur } else { &ul };
                    for &p in committed {
                        if known[p].is_none() {
                            known[p] = Some(actual);
                        }
                    }
                    let keep: HashSet<usize> = if actual {
                        ul.into_iter().collect()
                    } else {
                        ur.into_iter().collect()
                    };
                    unknown.retain(|p| keep.contains(p));
                }
            } else if let Some((ul, ur)) = &mut split {
                ul.retain(|&p| p != x);
                ur.retain(|&p| p != x);
                if 3 * ul.len().min(ur.len()) < unknown.len() {
                    split = None;
                }
            }
        }
    }
    record.counters = session.counters();
    Ok(record)
}

/// Tests whether `z` is an extreme point of `u` in the hidden order: it
/// repeatedly draws `2k` other points, finds the unique unrealizable labeling
/// of the `2k + 1` points, and checks that `z` is labeled 1 in it. Returns
/// false as soon as any repetition labels `z` 0.
pub fn kintervals_extreme_test<R: Rng>(
    session: &mut OracleSession,
    u: &[usize],
    z: usize,
    k: usize,
    delta: f64,
    rep_constant: f64,
    rng: &mut R,
) -> Result<bool> {
    if u.len() < 2 * k + 2 {
        return Err(Error::InvalidConfig(format!(
            "extreme test needs |U| >= 2k+2 = {}, got {}",
            2 * k + 2,
            u.len()
        )));
    }
    if !u.contains(&z) {
        return Err(Error::InvalidConfig(format!("z = {z} is not in U")));
    }
    let others: Vec<usize> = u.iter().copied().filter(|&p| p != z).collect();
    let reps = ((rep_constant * u.len() as f64 * (1.0 / delta).ln()).ceil() as usize).max(1);
    let n = 2 * k + 1;
    for _ in 0..reps {
        let picked = rand::seq::index::sample(rng, others.len(), 2 * k);
        let mut pts: Vec<usize> = picked.iter().map(|i| others[i]).collect();
        pts.push(z);
        pts.sort_unstable();
        let mut unrealizable = None;
        for mask in 0..(1u32 << n) {
            let pairs: Vec<(usize, bool)> = pts
                .iter()
                .enumerate()
                .map(|(i, &p)| (p, mask >> i & 1 == 1))
                .collect();
            let sample = LabeledSample::new(pairs)?;
            if !session.wc_query(&sample)?.is_realizable() {
                unrealizable = Some(mask);
                break;
            }
        }
        let mask = unrealizable.ok_or(Error::NoUnrealizableLabeling(1 << n))?;
        let zpos = pts.iter().position(|&p| p == z).unwrap();
        if mask >> zpos & 1 == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of the k-intervals learner: the peeled order prefix, the unordered
/// residual (at most `2k + 1` points), and the trial record.
pub struct KIntervalsRun {
    pub order: Vec<usize>,
    pub residual: Vec<usize>,
    pub record: TrialRecord,
}

/// Order-recovery learner for unions of at most `k` rank-intervals. Phase 1
/// peels extreme points one at a time with [`kintervals_extreme_test`]
/// (pinning one extreme `z*` so the same end is never peeled twice) until at
/// most `2k + 1` points remain. Phase 2 predicts with halving over the
/// k-interval labelings induced by the recovered order, predicting 0 on the
/// residual points. Each extreme test runs at failure probability
/// `delta / T^2` so the whole run succeeds with probability at least
/// `1 - delta`.
pub fn kintervals_learn<R: Rng>(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
    k: usize,
    delta: f64,
    rep_constant: f64,
    rng: &mut R,
) -> Result<KIntervalsRun> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {delta}")));
    }
    let t = adversary.horizon();
    let mut record = TrialRecord::new("kint-wc", 0);
    let mut order: Vec<usize> = Vec::new();
    let mut u: Vec<usize> = (0..t).collect();
    let mut zstar: Option<usize> = None;
    if k >= 1 && t >= 2 * k + 2 {
        let delta_test = (delta / (t * t) as f64).max(1e-12);
        while u.len() > 2 * k + 1 {
            let mut peel = None;
            for &z in &u {
                if Some(z) == zstar {
                    continue;
                }
                if kintervals_extreme_test(session, &u, z, k, delta_test, rep_constant, rng)? {
                    if peel.is_none() {
                        peel = Some(z);
                        if zstar.is_some() {
                            break;
                        }
                    } else {
                        zstar = Some(z);
                        break;
                    }
                }
            }
            let z = match peel {
                Some(z) => z,
                None => {
                    let z = *u.iter().find(|&&p| Some(p) != zstar).unwrap();
                    record.events.push(format!("no extreme found; peeled point {z}"));
                    z
                }
            };
            order.push(z);
            u.retain(|&p| p != z);
        }
    }
    let residual = u;
    let ordered: HashSet<usize> = order.iter().copied().collect();
    let candidates: Vec<Labeling> = k_interval_patterns(order.len(), k)?
        .into_iter()
        .map(|pattern| {
            let mut bits = vec![false; t];
            for (pos, &p) in order.iter().enumerate() {
                bits[p] = pattern[pos];
            }
            Labeling::new(bits)
        })
        .collect();
    let mut phase = HalvingPhase::new(candidates);
    for round in 0..t {
        let x = adversary.instance(round);
        let predicted = if ordered.contains(&x) { phase.predict(x) } else { false };
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
        phase.observe_label(actual);
        if ordered.contains(&x) && phase.restrict(x, actual) {
            record.events.push("version space emptied; falling back to 0".into());
        }
    }
    record.counters = session.counters();
    Ok(KIntervalsRun { order, residual, record })
}

/// One ERM query on the empty sample; the returned concept is predicted
/// everywhere. For a radius-`d` ball the concept and the target are both
/// within `d` of the center, so mistakes are at most `2d`.
pub fn hamming_single_query(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
) -> Result<TrialRecord> {
    let t = adversary.horizon();
    let mut record = TrialRecord::new("ham-1q", 0);
    let concept = match session.erm_query(&LabeledSample::empty())? {
        Some(c) => c,
        None => {
            record.events.push("empty sample unrealizable; predicting 0".into());
            Labeling::zeros(t)
        }
    };
    for round in 0..t {
        let x = adversary.instance(round);
        let predicted = concept.get(x);
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
    }
    record.counters = session.counters();
    Ok(record)
}

/// Optimal-mistake Hamming-ball learner: recovers the center exactly with
/// `2^{d+1}` WC tests on the first `d + 1` points (whose unique unrealizable
/// labeling is the flipped center) plus one ERM query that pins the center on
/// the remaining points, then plays SOA over the reconstructed ball. Queries
/// are at most `2^{d+1} + 1`; mistakes at most `d`.
pub fn hamming_optimal(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
    d: usize,
) -> Result<TrialRecord> {
    let t = adversary.horizon();
    if t < d + 1 {
        return Err(Error::InvalidConfig(format!("need T >= d+1, got T={t}, d={d}")));
    }
    let mut record = TrialRecord::new("ham-opt", 0);
    let n = d + 1;
    let mut unrealizable = Vec::new();
    for mask in 0..(1u64 << n) {
        let pairs: Vec<(usize, bool)> = (0..n).map(|i| (i, mask >> i & 1 == 1)).collect();
        let sample = LabeledSample::new(pairs)?;
        if !session.wc_query(&sample)?.is_realizable() {
            unrealizable.push(mask);
        }
    }
    if unrealizable.len() != 1 {
        return Err(Error::AmbiguousCenter(unrealizable.len()));
    }
    let mask = unrealizable[0];
    let mut center = vec![false; t];
    for (i, c) in center.iter_mut().enumerate().take(n) {
        *c = mask >> i & 1 == 0;
    }
    let pin_sample = LabeledSample::new((0..d).map(|i| (i, !center[i])).collect())?;
    let pinned = session.erm_query(&pin_sample)?.ok_or_else(|| {
        Error::InconsistentOracle("center-pinning sample reported unrealizable".into())
    })?;
    for (x, c) in center.iter_mut().enumerate().skip(n) {
        *c = pinned.get(x);
    }
    let ball = expand(&HiddenClassSpec::HammingBall { center: Labeling::new(center), d }, t)?;
    let mut solver = LittlestoneSolver::new(&ball);
    let mut surviving: Vec<u32> = (0..ball.len() as u32).collect();
    for round in 0..t {
        let x = adversary.instance(round);
        let (mut zeros, mut ones) = (Vec::new(), Vec::new());
        for &i in &surviving {
            if ball.labelings()[i as usize].get(x) {
                ones.push(i);
            } else {
                zeros.push(i);
            }
        }
        let predicted = if surviving.is_empty() {
            false
        } else if zeros.is_empty() {
            true
        } else if ones.is_empty() {
            false
        } else {
            solver.dim(&ones) >= solver.dim(&zeros)
        };
        let actual = adversary.reveal(round, x, predicted);
        record.push_round(round, x, predicted, actual);
        let before = surviving.len();
        surviving.retain(|&i| ball.labelings()[i as usize].get(x) == actual);
        if before > 0 && surviving.is_empty() {
            record.events.push("version space emptied; falling back to 0".into());
        }
    }
    record.counters = session.counters();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::realizable_stream;
    use crate::oracles::{ClassHandle, TieBreakPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn threshold_session(perm: Vec<usize>) -> OracleSession {
        OracleSession::new(
            ClassHandle::Hidden(HiddenClassSpec::Threshold { perm }),
            TieBreakPolicy::CanonicalMin,
        )
    }

    fn threshold_target(perm: &[usize], j: usize) -> Labeling {
        Labeling::new((0..perm.len()).map(|i| perm[i] >= j).collect())
    }

    #[test]
    fn sort_wc_recovers_every_small_permutation() {
        use itertools::Itertools;
        for perm in (0..5usize).permutations(5) {
            let mut session = threshold_session(perm.clone());
            let mut adv = realizable_stream(threshold_target(&perm, 2));
            let run = threshold_sort_wc(&mut session, &mut adv, true).unwrap();
            let ranks: Vec<usize> = run.order.iter().map(|&p| perm[p]).collect();
            assert_eq!(ranks, vec![0, 1, 2, 3, 4]);
            assert!(run.record.mistakes <= 3);
        }
    }

    #[test]
    fn sort_wc_query_budget() {
        let t = 16;
        let perm: Vec<usize> = (0..t).rev().collect();
        let mut session = threshold_session(perm.clone());
        let mut adv = realizable_stream(threshold_target(&perm, 7));
        let run = threshold_sort_wc(&mut session, &mut adv, true).unwrap();
        assert!(run.record.counters.wc <= (t as u64) * 4 + t as u64);
        assert!(run.record.mistakes <= 5);
    }

    #[test]
    fn sort_wc_all_zero_target_single_early_mistake() {
        let t = 8;
        let perm: Vec<usize> = (0..t).collect();
        let mut session = threshold_session(perm.clone());
        let mut adv = realizable_stream(threshold_target(&perm, t + 1));
        let run = threshold_sort_wc(&mut session, &mut adv, true).unwrap();
        for r in run.record.rounds.iter().skip(1) {
            assert!(!r.mistake, "mistake after the first round on the all-0 target");
        }
    }

    #[test]
    fn rand_wc_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for j in 0..=16 {
            let perm: Vec<usize> = (0..16).map(|i| (i * 7) % 16).collect();
            let mut session = threshold_session(perm.clone());
            let mut adv = realizable_stream(threshold_target(&perm, j));
            let rec = threshold_rand_wc(&mut session, &mut adv, 0.05, &mut rng).unwrap();
            assert!(rec.mistakes <= 12, "target {j}: {} mistakes", rec.mistakes);
        }
    }

    #[test]
    fn det_erm_recovers_order_and_respects_budget() {
        use itertools::Itertools;
        for perm in (0..5usize).permutations(5) {
            let mut session = threshold_session(perm.clone());
            let mut adv = realizable_stream(threshold_target(&perm, 3));
            let run = threshold_det_erm(&mut session, &mut adv).unwrap();
            let ranks: Vec<usize> = run.order.iter().map(|&p| perm[p]).collect();
            assert_eq!(ranks, vec![0, 1, 2, 3, 4]);
            assert!(run.record.counters.erm <= 10);
            assert!(run.record.mistakes <= 3);
        }
    }

    #[test]
    fn rand_erm_mistake_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = 64;
        for j in [0, 1, 13, 32, 50, 64] {
            let perm: Vec<usize> = (0..t).map(|i| (i * 29) % t).collect();
            let mut session = threshold_session(perm.clone());
            let mut adv = realizable_stream(threshold_target(&perm, j));
            let rec = threshold_rand_erm(&mut session, &mut adv, &mut rng).unwrap();
            let bound = (t as f64).ln() / 1.5f64.ln() + 5.0;
            assert!(
                (rec.mistakes as f64) <= bound.ceil(),
                "target {j}: {} mistakes > {bound}",
                rec.mistakes
            );
        }
    }

    fn kintervals_session(perm: Vec<usize>, k: usize) -> OracleSession {
        OracleSession::new(
            ClassHandle::Hidden(HiddenClassSpec::KIntervals { perm, k }),
            TieBreakPolicy::CanonicalMin,
        )
    }

    #[test]
    fn extreme_test_accepts_true_minimum() {
        let perm: Vec<usize> = vec![3, 0, 2, 1, 4, 5];
        let z_min = 1;
        let u: Vec<usize> = (0..6).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut session = kintervals_session(perm, 1);
        for _ in 0..20 {
            assert!(kintervals_extreme_test(&mut session, &u, z_min, 1, 0.1, 1.0, &mut rng).unwrap());
        }
    }

    #[test]
    fn extreme_test_rejects_interior_point() {
        let perm: Vec<usize> = (0..8).collect();
        let u: Vec<usize> = (0..8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut session = kintervals_session(perm, 1);
        let verdict = kintervals_extreme_test(&mut session, &u, 4, 1, 0.001, 1.0, &mut rng).unwrap();
        assert!(!verdict, "an interior point must eventually draw label 0");
    }

    #[test]
    fn kintervals_learn_recovers_order_prefix() {
        let perm: Vec<usize> = vec![5, 2, 7, 0, 4, 6, 1, 3];
        let target = Labeling::new((0..8).map(|i| (2..=4).contains(&perm[i])).collect());
        let mut session = kintervals_session(perm.clone(), 1);
        let mut adv = realizable_stream(target);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = kintervals_learn(&mut session, &mut adv, 1, 0.05, 1.0, &mut rng).unwrap();
        assert_eq!(run.residual.len(), 3);
        let ranks: Vec<usize> = run.order.iter().map(|&p| perm[p]).collect();
        let ascending: Vec<usize> = (0..ranks.len()).collect();
        let descending: Vec<usize> = (0..ranks.len()).map(|i| 7 - i).collect();
        assert!(
            ranks == ascending || ranks == descending,
            "order prefix {ranks:?} is not an end-run of the hidden order"
        );
        assert!(run.record.mistakes <= 8);
    }

    #[test]
    fn kintervals_k0_all_zero() {
        let perm: Vec<usize> = (0..6).collect();
        let mut session = kintervals_session(perm, 1);
        let mut adv = realizable_stream(Labeling::zeros(6));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let run = kintervals_learn(&mut session, &mut adv, 0, 0.1, 1.0, &mut rng).unwrap();
        assert_eq!(run.record.mistakes, 0);
        assert_eq!(run.record.counters.total(), 0);
    }

    fn hamming_session(center: Labeling, d: usize) -> OracleSession {
        OracleSession::new(
            ClassHandle::Hidden(HiddenClassSpec::HammingBall { center, d }),
            TieBreakPolicy::CanonicalMin,
        )
    }

    #[test]
    fn single_query_within_two_d() {
        let center: Labeling = "010011".parse().unwrap();
        for d in 0..3 {
            let mut target = center.clone();
            for i in 0..d {
                target.set(i, !target.get(i));
            }
            let mut session = hamming_session(center.clone(), d);
            let mut adv = realizable_stream(target);
            let rec = hamming_single_query(&mut session, &mut adv).unwrap();
            assert!(rec.mistakes as usize <= 2 * d);
            assert_eq!(rec.counters.erm, 1);
        }
    }

    #[test]
    fn optimal_recovers_center_and_stays_within_d() {
        for center_mask in 0..16u32 {
            let center = Labeling::new((0..4).map(|i| center_mask >> i & 1 == 1).collect());
            let mut target = center.clone();
            target.set(2, !target.get(2));
            let mut session = hamming_session(center, 1);
            let mut adv = realizable_stream(target);
            let rec = hamming_optimal(&mut session, &mut adv, 1).unwrap();
            assert!(rec.mistakes <= 1, "center {center_mask:04b}: {} mistakes", rec.mistakes);
            assert!(rec.counters.total() <= 5);
        }
    }

    #[test]
    fn optimal_d0_zero_mistakes() {
        let center: Labeling = "1010".parse().unwrap();
        let mut session = hamming_session(center.clone(), 0);
        let mut adv = realizable_stream(center);
        let rec = hamming_optimal(&mut session, &mut adv, 0).unwrap();
        assert_eq!(rec.mistakes, 0);
    }
}
