//! Lower-bound environments: the nested-cell information-hiding adversary,
//! the equivalence-class threshold adversary for transductive ERM learners,
//! and the uniform-random-concept environment.
//!
//! Each environment couples a label stream (the [`Adversary`] side) with the
//! oracle answers a session will give, either through a hidden spec or
//! through a shared interactive state.

use std::cell::RefCell;
use std::collections::HashSet;
use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core::{ExplicitClass, HiddenClassSpec, LabeledSample, Labeling};
use crate::error::{Error, Result};
use crate::learners::{realizable_stream, Adversary, FixedTargetStream};
use crate::oracles::{ClassHandle, InteractiveOracle, RealizabilityAnswer};

/// Granularity of the secret cell coordinates: uniform multiples of `2^-62`.
const GRAIN_BITS: u32 = 62;

/// The nested-cell adversary. Instances walk down a chain of nested cells
/// whose boundaries are the secret coordinates `z`; the label bits `b` are
/// i.i.d. uniform, so index-level oracle answers carry no information about
/// the current round's bit. In agnostic mode each of `T'` instances is
/// presented for a phase of `phase_len` rounds with i.i.d. uniform labels.
pub struct NestedCellAdversary {
    spec: HiddenClassSpec,
    labels: Vec<bool>,
    phase_len: usize,
}

impl NestedCellAdversary {
    /// Realizable mode: `t` rounds, labels equal to the secret bits `b`.
    pub fn new_realizable(t: usize, seed: u64) -> Result<Self> {
        Self::build(t, 1, seed, false)
    }

    /// Agnostic mode: `t_prime` instances, each shown for `phase_len` rounds
    /// with independent uniform labels.
    pub fn new_agnostic(t_prime: usize, phase_len: usize, seed: u64) -> Result<Self> {
        if phase_len == 0 {
            return Err(Error::InvalidConfig("phase_len must be >= 1".into()));
        }
        Self::build(t_prime, phase_len, seed, true)
    }

    fn build(t: usize, phase_len: usize, seed: u64, agnostic: bool) -> Result<Self> {
        if t < 2 {
            return Err(Error::InvalidConfig("nested-cell adversary needs T >= 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut z = Vec::with_capacity(t - 1);
        while z.len() < t - 1 {
            let grain = rng.gen_range(1..(1u64 << GRAIN_BITS));
            if seen.insert(grain) {
                z.push(grain);
            }
        }
        let b: Vec<bool> = (0..t).map(|_| rng.gen()).collect();
        let labels: Vec<bool> = if agnostic {
            (0..t * phase_len).map(|_| rng.gen()).collect()
        } else {
            b.clone()
        };
        let spec = HiddenClassSpec::NestedCells { z, b };
        spec.validate()?;
        Ok(NestedCellAdversary { spec, labels, phase_len })
    }

    pub fn class_handle(&self) -> ClassHandle {
        ClassHandle::Hidden(self.spec.clone())
    }

    pub fn spec(&self) -> &HiddenClassSpec {
        &self.spec
    }

    /// Minimum total disagreement any single concept can achieve with the
    /// emitted labels: per instance, the minority count of its phase.
    pub fn best_in_class_error(&self) -> u64 {
        self.labels
            .chunks(self.phase_len)
            .map(|phase| {
                let ones = phase.iter().filter(|&&y| y).count();
                ones.min(phase.len() - ones) as u64
            })
            .sum()
    }
}

impl Adversary for NestedCellAdversary {
    fn horizon(&self) -> usize {
        self.labels.len()
    }

    fn instance(&mut self, t: usize) -> usize {
        t / self.phase_len
    }

    fn reveal(&mut self, t: usize, _point: usize, _prediction: bool) -> bool {
        self.labels[t]
    }
}

/// Draws a uniform target labeling; the returned handle is the singleton
/// class containing exactly that labeling, so `wc_query` answers "is the
/// sample consistent with the drawn concept".
pub fn uniform_concept_environment(t: usize, seed: u64) -> (ClassHandle, FixedTargetStream) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = Labeling::new((0..t).map(|_| rng.gen()).collect());
    let class = ExplicitClass::new(vec![target.clone()]).expect("singleton class");
    (ClassHandle::Explicit(class), realizable_stream(target))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PointStatus {
    Unknown,
    Current,
    Old,
}

/// Shared state of the equivalence-class adversary: the threshold-block
/// structure built so far, the query log for post-hoc validation, and the
/// designating-query budget.
struct EqClassState {
    t: usize,
    cap: usize,
    status: Vec<PointStatus>,
    old_label: Vec<Option<bool>>,
    left_blocks: Vec<Vec<usize>>,
    right_blocks: Vec<Vec<usize>>,
    current: Vec<usize>,
    y_c: bool,
    k: usize,
    middle: Vec<usize>,
    middle_label: Option<bool>,
    designating_queries: usize,
    budget: usize,
    log: Vec<(LabeledSample, Option<Labeling>)>,
}

impl EqClassState {
    fn new(t: usize, d: usize) -> Self {
        EqClassState {
            t,
            cap: 1 << d,
            status: vec![PointStatus::Unknown; t],
            old_label: vec![None; t],
            left_blocks: Vec::new(),
            right_blocks: Vec::new(),
            current: Vec::new(),
            y_c: false,
            k: 0,
            middle: Vec::new(),
            middle_label: None,
            designating_queries: 0,
            budget: t / 2,
            log: Vec::new(),
        }
    }

    /// The committed block structure in threshold order (left to right), with
    /// the remaining uncertainty region as a single middle pseudo-block.
    fn units(&self) -> Vec<Vec<usize>> {
        let mut out = self.left_blocks.clone();
        if self.k >= 1 && !self.y_c && !self.current.is_empty() {
            out.push(self.current.clone());
        }
        let mid: Vec<usize> = if self.middle_label.is_some() {
            self.middle.clone()
        } else {
            (0..self.t)
                .filter(|&p| self.status[p] == PointStatus::Unknown)
                .collect()
        };
        out.push(mid);
        if self.k >= 1 && self.y_c && !self.current.is_empty() {
            out.push(self.current.clone());
        }
        out.extend(self.right_blocks.iter().rev().cloned());
        out
    }

    fn cut_labeling(&self, units: &[Vec<usize>], cut: usize) -> Labeling {
        let mut bits = vec![false; self.t];
        for (j, unit) in units.iter().enumerate() {
            for &p in unit {
                bits[p] = j >= cut;
            }
        }
        Labeling::new(bits)
    }

    fn cut_consistent(&self, units: &[Vec<usize>], cut: usize, sample: &LabeledSample) -> bool {
        for (j, unit) in units.iter().enumerate() {
            let label = j >= cut;
            for &p in unit {
                if let Some(y) = sample.get(p) {
                    if y != label {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn charge_designation(&mut self) -> Result<()> {
        if self.designating_queries >= self.budget {
            return Err(Error::QueryBudgetExceeded {
                kind: "eqclass designating queries",
                limit: self.budget as u64,
            });
        }
        self.designating_queries += 1;
        Ok(())
    }

    fn designate_into_current(&mut self, z: usize) {
        self.status[z] = PointStatus::Current;
        self.current.push(z);
    }

    /// Decides a realizability / ERM query, mutating the state per the
    /// designation rules. `None` means "not realizable".
    fn answer(&mut self, sample: &LabeledSample) -> Result<Option<Labeling>> {
        let mut c_mislabeled = false;
        let mut c_present = false;
        let mut u_zero: Option<usize> = None;
        let mut u_one: Option<usize> = None;
        for &(p, y) in sample.pairs() {
            match self.status[p] {
                PointStatus::Current => {
                    c_present = true;
                    if y != self.y_c {
                        c_mislabeled = true;
                    }
                }
                PointStatus::Unknown => {
                    if y {
                        u_one.get_or_insert(p);
                    } else {
                        u_zero.get_or_insert(p);
                    }
                }
                PointStatus::Old => {}
            }
        }
        let answer = if self.k == 0 {
            if let (Some(_), Some(z1)) = (u_zero, u_one) {
                self.charge_designation()?;
                self.k = 1;
                self.y_c = true;
                self.designate_into_current(z1);
                None
            } else {
                self.gap_placement(sample)
            }
        } else {
            let u_mis = if self.y_c { u_zero } else { u_one };
            if c_present && !c_mislabeled && u_mis.is_some() {
                self.charge_designation()?;
                self.designate_into_current(u_mis.unwrap());
                None
            } else if !c_present && u_zero.is_some() && u_one.is_some() {
                self.charge_designation()?;
                self.designate_into_current(u_mis.unwrap());
                None
            } else {
                self.gap_placement(sample)
            }
        };
        self.log.push((sample.clone(), answer.clone()));
        Ok(answer)
    }

    /// Completion-independent realizability for queries outside the
    /// designation rules: a cut between committed blocks (treating the
    /// uncertainty region as one middle block) either satisfies the sample or
    /// none ever will, because all future blocks are placed strictly inside
    /// the middle.
    fn gap_placement(&self, sample: &LabeledSample) -> Option<Labeling> {
        let units = self.units();
        (0..=units.len())
            .find(|&cut| self.cut_consistent(&units, cut, sample))
            .map(|cut| self.cut_labeling(&units, cut))
    }

    fn complete_class(&mut self) {
        if self.current.is_empty() {
            return;
        }
        let block = std::mem::take(&mut self.current);
        for &p in &block {
            self.status[p] = PointStatus::Old;
            self.old_label[p] = Some(self.y_c);
        }
        if self.y_c {
            self.right_blocks.push(block);
        } else {
            self.left_blocks.push(block);
        }
    }

    fn reveal(&mut self, x: usize, prediction: bool) -> bool {
        match self.status[x] {
            PointStatus::Old => self.old_label[x].expect("old points have labels"),
            PointStatus::Current => self.y_c,
            PointStatus::Unknown => {
                let y = !prediction;
                self.k += 1;
                self.complete_class();
                if self.k < self.cap {
                    self.y_c = y;
                    self.designate_into_current(x);
                } else {
                    let mid: Vec<usize> = (0..self.t)
                        .filter(|&p| self.status[p] == PointStatus::Unknown)
                        .collect();
                    for &p in &mid {
                        self.status[p] = PointStatus::Old;
                        self.old_label[p] = Some(y);
                    }
                    self.middle = mid;
                    self.middle_label = Some(y);
                }
                y
            }
        }
    }

    /// The witness concept class: thresholds over the final block structure,
    /// padded with empty parts to exactly `2^d` equivalence classes.
    fn witness_class(&self) -> Result<ExplicitClass> {
        let mut units = self.units();
        let mid_pos = self.left_blocks.len()
            + usize::from(self.k >= 1 && !self.y_c && !self.current.is_empty());
        while units.len() < self.cap {
            units.insert(mid_pos, Vec::new());
        }
        if units.len() > self.cap {
            return Err(Error::InconsistentOracle(format!(
                "witness has {} parts, cap is {}",
                units.len(),
                self.cap
            )));
        }
        let labelings = (0..=units.len())
            .map(|cut| self.cut_labeling(&units, cut))
            .collect();
        ExplicitClass::new(labelings)
    }

    fn truth(&self) -> Result<Labeling> {
        let mut bits = vec![false; self.t];
        for p in 0..self.t {
            bits[p] = match self.status[p] {
                PointStatus::Old => self.old_label[p].expect("old points have labels"),
                PointStatus::Current => self.y_c,
                PointStatus::Unknown => {
                    return Err(Error::InconsistentOracle(format!(
                        "point {p} was never resolved"
                    )))
                }
            };
        }
        Ok(Labeling::new(bits))
    }
}

/// Adaptive transductive lower-bound adversary for deterministic ERM
/// learners over classes of Littlestone dimension `d`: it answers ERM and
/// realizability queries adaptively while forcing a mistake on every
/// prediction of an undesignated point, yielding at least `2^d - 1` mistakes
/// against any deterministic learner that makes fewer than `T/2` designating
/// queries. All answers remain consistent with a concrete witness class of at
/// most `2^d` equivalence classes, checkable post hoc.
#[derive(Clone)]
pub struct EqClassAdversary {
    state: Rc<RefCell<EqClassState>>,
    horizon: usize,
}

impl EqClassAdversary {
    pub fn new(t: usize, d: usize) -> Result<Self> {
        if t < (1usize << (d + 1)) {
            return Err(Error::InvalidConfig(format!("need T >= 2^(d+1), got T={t}, d={d}")));
        }
        Ok(EqClassAdversary { state: Rc::new(RefCell::new(EqClassState::new(t, d))), horizon: t })
    }

    /// Handle for an `OracleSession` that shares this adversary's state.
    pub fn oracle_handle(&self) -> ClassHandle {
        ClassHandle::Interactive(self.state.clone())
    }

    pub fn designating_queries(&self) -> usize {
        self.state.borrow().designating_queries
    }

    pub fn classes_revealed(&self) -> usize {
        self.state.borrow().k
    }

    /// The witness class over the final block structure.
    pub fn witness_class(&self) -> Result<ExplicitClass> {
        self.state.borrow().witness_class()
    }

    /// Post-hoc consistency check: the emitted labels must form a witness
    /// concept, every "not realizable" answer must be unrealizable by the
    /// whole witness class, and every positive answer must be consistent with
    /// some witness concept on its sample.
    pub fn validate_witness(&self) -> Result<()> {
        let state = self.state.borrow();
        let witness = state.witness_class()?;
        let truth = state.truth()?;
        if !witness.contains(&truth) {
            return Err(Error::InconsistentOracle(
                "emitted labels are not a witness concept".into(),
            ));
        }
        for (i, (sample, answer)) in state.log.iter().enumerate() {
            let realizable = witness.labelings().iter().any(|c| c.is_consistent(sample));
            match answer {
                None => {
                    if realizable {
                        return Err(Error::InconsistentOracle(format!(
                            "query {i} was answered not-realizable but the witness realizes it"
                        )));
                    }
                }
                Some(l) => {
                    if !realizable {
                        return Err(Error::InconsistentOracle(format!(
                            "query {i} was answered realizable but the witness cannot realize it"
                        )));
                    }
                    if !l.is_consistent(sample) {
                        return Err(Error::InconsistentOracle(format!(
                            "query {i}'s returned concept disagrees with the sample"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Adversary for EqClassAdversary {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn instance(&mut self, t: usize) -> usize {
        t
    }

    fn reveal(&mut self, _t: usize, point: usize, prediction: bool) -> bool {
        self.state.borrow_mut().reveal(point, prediction)
    }
}

impl InteractiveOracle for EqClassState {
    fn domain_size(&self) -> usize {
        self.t
    }

    fn wc(&mut self, sample: &LabeledSample) -> Result<RealizabilityAnswer> {
        Ok(match self.answer(sample)? {
            Some(_) => RealizabilityAnswer::Realizable,
            None => RealizabilityAnswer::NotRealizable,
        })
    }

    fn erm(&mut self, sample: &LabeledSample) -> Result<Option<Labeling>> {
        self.answer(sample)
    }

    fn agnostic(&mut self, _sample: &LabeledSample) -> Result<Labeling> {
        Err(Error::Unsupported(
            "the equivalence-class adversary serves only ERM and realizability queries".into(),
        ))
    }
}
