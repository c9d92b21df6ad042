//! Consistency and empirical-risk-minimization oracles with query accounting.
//!
//! An [`OracleSession`] wraps a class handle (explicit list, hidden structured
//! spec, or an interactive adversary) and answers four kinds of queries:
//! weak-consistency realizability, ERM, agnostic ERM, and restricted ERM. All
//! queries are counted and transcribed; per-kind budgets abort the trial with
//! `QueryBudgetExceeded` once exhausted.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::core::{expand, DomainPoint, ExplicitClass, HiddenClassSpec, LabeledSample, Labeling};
use crate::error::{Error, Result};

/// Answer of a weak-consistency query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealizabilityAnswer {
    Realizable,
    NotRealizable,
}

impl RealizabilityAnswer {
    pub fn is_realizable(self) -> bool {
        matches!(self, RealizabilityAnswer::Realizable)
    }
}

impl fmt::Display for RealizabilityAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealizabilityAnswer::Realizable => write!(f, "Realizable"),
            RealizabilityAnswer::NotRealizable => write!(f, "NotRealizable"),
        }
    }
}

/// How the oracle picks among equally good concepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreakPolicy {
    /// Lexicographically smallest qualifying labeling. Deterministic; used by
    /// upper-bound experiments.
    #[default]
    CanonicalMin,
    /// A qualifying labeling that is as constant as possible off the sample,
    /// matching the majority of the sample labels (ties toward 0). Used by
    /// lower-bound adversary simulations.
    AdversarialConstantMajority,
}

/// Oracles implemented by a stateful adversary rather than a fixed class.
pub trait InteractiveOracle {
    fn domain_size(&self) -> usize;
    fn wc(&mut self, sample: &LabeledSample) -> Result<RealizabilityAnswer>;
    fn erm(&mut self, sample: &LabeledSample) -> Result<Option<Labeling>>;
    fn agnostic(&mut self, sample: &LabeledSample) -> Result<Labeling>;
}

/// The concept class a session answers for.
#[derive(Clone)]
pub enum ClassHandle {
    Explicit(ExplicitClass),
    Hidden(HiddenClassSpec),
    Interactive(Rc<RefCell<dyn InteractiveOracle>>),
}

impl ClassHandle {
    pub fn domain_size(&self) -> usize {
        match self {
            ClassHandle::Explicit(c) => c.domain_size(),
            ClassHandle::Hidden(s) => s.domain_size(),
            ClassHandle::Interactive(o) => o.borrow().domain_size(),
        }
    }
}

impl fmt::Debug for ClassHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassHandle::Explicit(c) => write!(f, "Explicit({c:?})"),
            ClassHandle::Hidden(s) => write!(f, "Hidden({s:?})"),
            ClassHandle::Interactive(_) => write!(f, "Interactive(..)"),
        }
    }
}

/// The four oracle kinds tracked by the counters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Wc,
    Erm,
    AgnosticErm,
    RestrictedErm,
}

impl QueryKind {
    pub fn name(self) -> &'static str {
        match self {
            QueryKind::Wc => "wc",
            QueryKind::Erm => "erm",
            QueryKind::AgnosticErm => "agnostic_erm",
            QueryKind::RestrictedErm => "restricted_erm",
        }
    }
}

/// Per-kind query counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct QueryCounters {
    pub wc: u64,
    pub erm: u64,
    pub agnostic_erm: u64,
    pub restricted_erm: u64,
}

impl QueryCounters {
    pub fn total(&self) -> u64 {
        self.wc + self.erm + self.agnostic_erm + self.restricted_erm
    }

    pub fn get(&self, kind: QueryKind) -> u64 {
        match kind {
            QueryKind::Wc => self.wc,
            QueryKind::Erm => self.erm,
            QueryKind::AgnosticErm => self.agnostic_erm,
            QueryKind::RestrictedErm => self.restricted_erm,
        }
    }

    fn bump(&mut self, kind: QueryKind) {
        match kind {
            QueryKind::Wc => self.wc += 1,
            QueryKind::Erm => self.erm += 1,
            QueryKind::AgnosticErm => self.agnostic_erm += 1,
            QueryKind::RestrictedErm => self.restricted_erm += 1,
        }
    }
}

/// One transcribed query with the counter state after it was answered.
#[derive(Clone, Debug)]
pub struct TranscriptRecord {
    pub kind: QueryKind,
    pub sample: String,
    pub answer: String,
    pub counters: QueryCounters,
}

impl TranscriptRecord {
    pub fn to_line(&self) -> String {
        format!(
            "kind={} sample=[{}] answer={} wc={} erm={} agnostic={} restricted={}",
            self.kind.name(),
            self.sample,
            self.answer,
            self.counters.wc,
            self.counters.erm,
            self.counters.agnostic_erm,
            self.counters.restricted_erm
        )
    }
}

/// How ERM queries are served.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErmMode {
    /// Answer ERM directly from the class.
    #[default]
    Direct,
    /// Simulate ERM with weak-consistency queries: one realizability check,
    /// then a pointwise extension that tries label 0 at each off-sample point
    /// in ascending index order. Only the WC counter moves.
    ViaWc,
}

/// A single trial's oracle endpoint: class handle, tie-break policy, query
/// counters, transcript, and optional per-kind budgets.
pub struct OracleSession {
    handle: ClassHandle,
    policy: TieBreakPolicy,
    erm_mode: ErmMode,
    counters: QueryCounters,
    transcript: Vec<TranscriptRecord>,
    budgets: [Option<u64>; 4],
    events: Vec<String>,
    exposed: usize,
}

impl OracleSession {
    pub fn new(handle: ClassHandle, policy: TieBreakPolicy) -> Self {
        OracleSession {
            handle,
            policy,
            erm_mode: ErmMode::Direct,
            counters: QueryCounters::default(),
            transcript: Vec::new(),
            budgets: [None; 4],
            events: Vec::new(),
            exposed: 0,
        }
    }

    pub fn with_erm_mode(mut self, mode: ErmMode) -> Self {
        self.erm_mode = mode;
        self
    }

    pub fn with_budget(mut self, kind: QueryKind, limit: u64) -> Self {
        self.budgets[budget_slot(kind)] = Some(limit);
        self
    }

    pub fn handle(&self) -> &ClassHandle {
        &self.handle
    }

    pub fn policy(&self) -> TieBreakPolicy {
        self.policy
    }

    pub fn erm_mode(&self) -> ErmMode {
        self.erm_mode
    }

    pub fn domain_size(&self) -> usize {
        self.handle.domain_size()
    }

    pub fn counters(&self) -> QueryCounters {
        self.counters
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    pub fn transcript_lines(&self) -> Vec<String> {
        self.transcript.iter().map(TranscriptRecord::to_line).collect()
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn note_event(&mut self, event: impl Into<String>) {
        self.events.push(event.into());
    }

    /// Tells the session how many stream instances have been revealed so far.
    /// Only used for future-cell detection on coordinate queries.
    pub fn set_exposed(&mut self, n: usize) {
        self.exposed = n;
    }

    fn charge(&mut self, kind: QueryKind) -> Result<()> {
        if let Some(limit) = self.budgets[budget_slot(kind)] {
            if self.counters.get(kind) >= limit {
                return Err(Error::QueryBudgetExceeded { kind: kind.name(), limit });
            }
        }
        self.counters.bump(kind);
        Ok(())
    }

    fn record(&mut self, kind: QueryKind, sample: &LabeledSample, answer: String) {
        self.transcript.push(TranscriptRecord {
            kind,
            sample: sample.to_string(),
            answer,
            counters: self.counters,
        });
    }

    fn check_domain(&self, sample: &LabeledSample) -> Result<()> {
        let t = self.domain_size();
        if let Some(p) = sample.max_point() {
            if p >= t {
                return Err(Error::IllegalQuery(format!("point {p} outside domain of size {t}")));
            }
        }
        Ok(())
    }

    /// Weak-consistency realizability of the sample.
    pub fn wc_query(&mut self, sample: &LabeledSample) -> Result<RealizabilityAnswer> {
        self.check_domain(sample)?;
        self.charge(QueryKind::Wc)?;
        let answer = match &self.handle {
            ClassHandle::Explicit(class) => explicit_realizable(class, sample),
            ClassHandle::Hidden(spec) => hidden_realizable(spec, sample)?,
            ClassHandle::Interactive(oracle) => oracle.borrow_mut().wc(sample)?,
        };
        self.record(QueryKind::Wc, sample, answer.to_string());
        Ok(answer)
    }

    /// A concept consistent with the sample, or `None` if unrealizable.
    pub fn erm_query(&mut self, sample: &LabeledSample) -> Result<Option<Labeling>> {
        self.check_domain(sample)?;
        match self.erm_mode {
            ErmMode::Direct => {
                self.charge(QueryKind::Erm)?;
                let answer = self.serve_erm(sample)?;
                let shown = answer.as_ref().map_or_else(|| "NotRealizable".into(), |l| l.to_string());
                self.record(QueryKind::Erm, sample, shown);
                Ok(answer)
            }
            ErmMode::ViaWc => self.erm_via_wc(sample),
        }
    }

    fn serve_erm(&mut self, sample: &LabeledSample) -> Result<Option<Labeling>> {
        match &self.handle {
            ClassHandle::Explicit(class) => Ok(explicit_erm(class, sample, self.policy)),
            ClassHandle::Hidden(spec) => hidden_erm(spec, sample, self.policy),
            ClassHandle::Interactive(oracle) => oracle.borrow_mut().erm(sample),
        }
    }

    /// Simulates ERM with weak-consistency queries. Every probe below goes
    /// through `wc_query`, so it is counted and transcribed like any other
    /// learner-issued WC query.
    fn erm_via_wc(&mut self, sample: &LabeledSample) -> Result<Option<Labeling>> {
        let t = self.domain_size();
        if !sample.is_empty() && !self.wc_query(sample)?.is_realizable() {
            return Ok(None);
        }
        let mut committed = sample.clone();
        let mut bits = vec![false; t];
        for (p, y) in sample.pairs() {
            bits[*p] = *y;
        }
        for x in 0..t {
            if committed.contains_point(x) {
                continue;
            }
            let probe = committed.with(x, false)?;
            if self.wc_query(&probe)?.is_realizable() {
                committed = probe;
            } else {
                committed = committed.with(x, true)?;
                bits[x] = true;
            }
        }
        Ok(Some(Labeling::new(bits)))
    }

    /// A concept minimizing disagreements with the (nonempty) sample.
    pub fn agnostic_erm_query(&mut self, sample: &LabeledSample) -> Result<Labeling> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        self.check_domain(sample)?;
        self.charge(QueryKind::AgnosticErm)?;
        let answer = match &self.handle {
            ClassHandle::Explicit(class) => explicit_agnostic(class, sample, self.policy),
            ClassHandle::Hidden(spec) => hidden_agnostic(spec, sample, self.policy)?,
            ClassHandle::Interactive(oracle) => oracle.borrow_mut().agnostic(sample)?,
        };
        self.record(QueryKind::AgnosticErm, sample, answer.to_string());
        Ok(answer)
    }

    /// ERM restricted to pairs the adversary has actually generated.
    pub fn restricted_erm_query(
        &mut self,
        sample: &LabeledSample,
        adversary_history: &LabeledSample,
    ) -> Result<Option<Labeling>> {
        self.check_domain(sample)?;
        if !sample.is_subset_of(adversary_history) {
            return Err(Error::IllegalQuery(
                "restricted ERM sample contains a pair outside the adversary history".into(),
            ));
        }
        self.charge(QueryKind::RestrictedErm)?;
        let answer = self.serve_erm(sample)?;
        let shown = answer.as_ref().map_or_else(|| "NotRealizable".into(), |l| l.to_string());
        self.record(QueryKind::RestrictedErm, sample, shown);
        Ok(answer)
    }

    /// Coordinate-level realizability probe for nested-cell sessions. Answers
    /// like `wc_query` but additionally logs a `FutureCellTouched` event when
    /// any queried coordinate lies strictly inside a cell deeper than the
    /// instances exposed so far.
    pub fn wc_query_coords(&mut self, coords: &[(u64, bool)]) -> Result<RealizabilityAnswer> {
        let spec = match &self.handle {
            ClassHandle::Hidden(spec @ HiddenClassSpec::NestedCells { .. }) => spec.clone(),
            _ => {
                return Err(Error::Unsupported(
                    "coordinate queries are only defined for nested-cell sessions".into(),
                ))
            }
        };
        self.charge(QueryKind::Wc)?;
        if let HiddenClassSpec::NestedCells { z, .. } = &spec {
            let mut boundaries: Vec<u64> = z.clone();
            boundaries.sort_unstable_by(|a, b| b.cmp(a));
            for &(u, _) in coords {
                let depth = boundaries.iter().take_while(|&&b| b > u).count();
                if depth >= self.exposed && self.exposed < boundaries.len() {
                    self.events.push(format!("FutureCellTouched(coord={u}, depth={depth})"));
                }
            }
        }
        let answer = RealizabilityAnswer::Realizable;
        let shown: Vec<String> = coords.iter().map(|(u, y)| format!("{u}:{}", u8::from(*y))).collect();
        self.transcript.push(TranscriptRecord {
            kind: QueryKind::Wc,
            sample: shown.join(","),
            answer: answer.to_string(),
            counters: self.counters,
        });
        Ok(answer)
    }
}

fn budget_slot(kind: QueryKind) -> usize {
    match kind {
        QueryKind::Wc => 0,
        QueryKind::Erm => 1,
        QueryKind::AgnosticErm => 2,
        QueryKind::RestrictedErm => 3,
    }
}

fn explicit_realizable(class: &ExplicitClass, sample: &LabeledSample) -> RealizabilityAnswer {
    if class.labelings().iter().any(|l| l.is_consistent(sample)) {
        RealizabilityAnswer::Realizable
    } else {
        RealizabilityAnswer::NotRealizable
    }
}

fn majority_label(sample: &LabeledSample) -> bool {
    let ones = sample.pairs().iter().filter(|&&(_, y)| y).count();
    ones * 2 > sample.len()
}

/// Score used by the adversarial policy: how many off-sample points carry the
/// sample-majority label.
fn constant_majority_score(l: &Labeling, sample: &LabeledSample, majority: bool) -> usize {
    (0..l.len())
        .filter(|&p| !sample.contains_point(p) && l.get(p) == majority)
        .count()
}

fn explicit_erm(class: &ExplicitClass, sample: &LabeledSample, policy: TieBreakPolicy) -> Option<Labeling> {
    match policy {
        TieBreakPolicy::CanonicalMin => {
            class.labelings().iter().find(|l| l.is_consistent(sample)).cloned()
        }
        TieBreakPolicy::AdversarialConstantMajority => {
            let majority = majority_label(sample);
            class
                .labelings()
                .iter()
                .filter(|l| l.is_consistent(sample))
                .max_by_key(|l| {
                    (
                        constant_majority_score(l, sample, majority),
                        std::cmp::Reverse((*l).clone()),
                    )
                })
                .cloned()
        }
    }
}

fn explicit_agnostic(class: &ExplicitClass, sample: &LabeledSample, policy: TieBreakPolicy) -> Labeling {
    let err = |l: &Labeling| sample.pairs().iter().filter(|&&(p, y)| l.get(p) != y).count();
    let best = class.labelings().iter().map(|l| err(l)).min().expect("class is nonempty");
    let minimizers = class.labelings().iter().filter(|l| err(l) == best);
    match policy {
        TieBreakPolicy::CanonicalMin => minimizers.min().cloned().unwrap(),
        TieBreakPolicy::AdversarialConstantMajority => {
            let majority = majority_label(sample);
            minimizers
                .max_by_key(|l| {
                    (
                        constant_majority_score(l, sample, majority),
                        std::cmp::Reverse((*l).clone()),
                    )
                })
                .cloned()
                .unwrap()
        }
    }
}

/// Analytic realizability for hidden structured specs.
pub fn hidden_realizable(spec: &HiddenClassSpec, sample: &LabeledSample) -> Result<RealizabilityAnswer> {
    let yes = match spec {
        HiddenClassSpec::Threshold { perm } => {
            let max0 = sample.pairs().iter().filter(|&&(_, y)| !y).map(|&(p, _)| perm[p]).max();
            let min1 = sample.pairs().iter().filter(|&&(_, y)| y).map(|&(p, _)| perm[p]).min();
            match (max0, min1) {
                (Some(a), Some(b)) => a < b,
                _ => true,
            }
        }
        HiddenClassSpec::KIntervals { perm, k } => one_block_count(perm, sample) <= *k,
        HiddenClassSpec::HammingBall { center, d } => {
            sample.pairs().iter().filter(|&&(p, y)| center.get(p) != y).count() <= *d
        }
        HiddenClassSpec::NestedCells { .. } => true,
    };
    Ok(if yes { RealizabilityAnswer::Realizable } else { RealizabilityAnswer::NotRealizable })
}

/// Number of maximal 1-blocks when the sample is read in rank order.
fn one_block_count(perm: &[usize], sample: &LabeledSample) -> usize {
    let mut ranked: Vec<(usize, bool)> =
        sample.pairs().iter().map(|&(p, y)| (perm[p], y)).collect();
    ranked.sort_unstable();
    let mut blocks = 0;
    let mut prev = false;
    for (_, y) in ranked {
        if y && !prev {
            blocks += 1;
        }
        prev = y;
    }
    blocks
}

fn hidden_erm(spec: &HiddenClassSpec, sample: &LabeledSample, policy: TieBreakPolicy) -> Result<Option<Labeling>> {
    if let HiddenClassSpec::NestedCells { .. } = spec {
        return Ok(Some(nested_cells_answer(spec.domain_size(), sample)));
    }
    if !hidden_realizable(spec, sample)?.is_realizable() {
        return Ok(None);
    }
    if let (HiddenClassSpec::Threshold { perm }, TieBreakPolicy::CanonicalMin) = (spec, policy) {
        let t = perm.len();
        let min1 = sample
            .pairs()
            .iter()
            .filter(|&&(_, y)| y)
            .map(|&(p, _)| perm[p])
            .min()
            .unwrap_or(t);
        return Ok(Some(Labeling::new((0..t).map(|i| perm[i] >= min1).collect())));
    }
    let prefer = match policy {
        TieBreakPolicy::CanonicalMin => false,
        TieBreakPolicy::AdversarialConstantMajority => majority_label(sample),
    };
    Ok(Some(greedy_completion(spec, sample, prefer)?))
}

/// Completes a realizable sample to a full concept by committing each
/// off-sample point, in ascending index order, to the preferred label when the
/// extension stays realizable. With `prefer = false` this yields the
/// lexicographically smallest consistent concept.
fn greedy_completion(spec: &HiddenClassSpec, sample: &LabeledSample, prefer: bool) -> Result<Labeling> {
    let t = spec.domain_size();
    let mut committed = sample.clone();
    let mut bits = vec![false; t];
    for (p, y) in sample.pairs() {
        bits[*p] = *y;
    }
    for x in 0..t {
        if committed.contains_point(x) {
            continue;
        }
        let probe = committed.with(x, prefer)?;
        if hidden_realizable(spec, &probe)?.is_realizable() {
            committed = probe;
            bits[x] = prefer;
        } else {
            committed = committed.with(x, !prefer)?;
            bits[x] = !prefer;
        }
    }
    Ok(Labeling::new(bits))
}

/// The nested-cell oracle's ERM and agnostic-ERM answer: agree with the
/// sample on sample points, constant majority (ties toward 0) elsewhere.
fn nested_cells_answer(t: usize, sample: &LabeledSample) -> Labeling {
    let majority = majority_label(sample);
    let mut bits = vec![majority; t];
    for &(p, y) in sample.pairs() {
        bits[p] = y;
    }
    Labeling::new(bits)
}

fn hidden_agnostic(spec: &HiddenClassSpec, sample: &LabeledSample, policy: TieBreakPolicy) -> Result<Labeling> {
    match spec {
        HiddenClassSpec::NestedCells { .. } => Ok(nested_cells_answer(spec.domain_size(), sample)),
        _ => {
            if hidden_realizable(spec, sample)?.is_realizable() {
                return hidden_erm(spec, sample, policy).map(|l| l.expect("realizable"));
            }
            let class = expand(spec, spec.domain_size())?;
            Ok(explicit_agnostic(&class, sample, policy))
        }
    }
}

/// Convenience: is this full labeling a member of the hidden class?
pub fn hidden_contains(spec: &HiddenClassSpec, labeling: &Labeling) -> Result<bool> {
    let pairs: Vec<(DomainPoint, bool)> = labeling.bits().iter().copied().enumerate().collect();
    let sample = LabeledSample::new(pairs)?;
    Ok(hidden_realizable(spec, &sample)?.is_realizable())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(t: usize) -> Vec<usize> {
        (0..t).collect()
    }

    fn sample(pairs: &[(usize, bool)]) -> LabeledSample {
        LabeledSample::new(pairs.to_vec()).unwrap()
    }

    #[test]
    fn threshold_wc_rank_rule() {
        let spec = HiddenClassSpec::Threshold { perm: identity(4) };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        assert!(s.wc_query(&sample(&[(0, false), (2, true)])).unwrap().is_realizable());
        assert!(!s.wc_query(&sample(&[(2, false), (0, true)])).unwrap().is_realizable());
        assert!(s.wc_query(&LabeledSample::empty()).unwrap().is_realizable());
        assert_eq!(s.counters().wc, 3);
        assert_eq!(s.transcript().len(), 3);
    }

    #[test]
    fn threshold_erm_canonical_min_example() {
        let spec = HiddenClassSpec::Threshold { perm: identity(4) };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        let l = s.erm_query(&sample(&[(1, false), (2, true)])).unwrap().unwrap();
        assert_eq!(l.to_string(), "0011");
        assert_eq!(s.counters().erm, 1);
    }

    #[test]
    fn kintervals_alternating_unrealizable() {
        let spec = HiddenClassSpec::KIntervals { perm: identity(5), k: 2 };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        let alt = sample(&[(0, true), (1, false), (2, true), (3, false), (4, true)]);
        assert!(!s.wc_query(&alt).unwrap().is_realizable());
    }

    #[test]
    fn hamming_radius_zero_conflict() {
        let spec = HiddenClassSpec::HammingBall { center: Labeling::zeros(4), d: 0 };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        assert_eq!(s.erm_query(&sample(&[(1, true)])).unwrap(), None);
    }

    #[test]
    fn full_labeling_round_trips_through_erm() {
        let class = expand(&HiddenClassSpec::Threshold { perm: identity(4) }, 4).unwrap();
        let target = class.labelings()[2].clone();
        let pairs: Vec<(usize, bool)> = target.bits().iter().copied().enumerate().collect();
        let mut s = OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::CanonicalMin);
        let got = s.erm_query(&LabeledSample::new(pairs).unwrap()).unwrap().unwrap();
        assert_eq!(got, target);
    }

    #[test]
    fn agnostic_empty_sample_rejected() {
        let class = expand(&HiddenClassSpec::Threshold { perm: identity(3) }, 3).unwrap();
        let mut s = OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::CanonicalMin);
        assert!(matches!(s.agnostic_erm_query(&LabeledSample::empty()), Err(Error::EmptySample)));
    }

    #[test]
    fn restricted_erm_legality_gate() {
        let class = expand(&HiddenClassSpec::Threshold { perm: identity(3) }, 3).unwrap();
        let mut s = OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::CanonicalMin);
        let history = sample(&[(0, false), (1, true)]);
        assert!(s.restricted_erm_query(&sample(&[(1, true)]), &history).unwrap().is_some());
        assert!(matches!(
            s.restricted_erm_query(&sample(&[(2, true)]), &history),
            Err(Error::IllegalQuery(_))
        ));
        assert_eq!(s.counters().restricted_erm, 1);
    }

    #[test]
    fn budget_exhaustion() {
        let spec = HiddenClassSpec::Threshold { perm: identity(3) };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin)
            .with_budget(QueryKind::Wc, 2);
        assert!(s.wc_query(&LabeledSample::empty()).is_ok());
        assert!(s.wc_query(&LabeledSample::empty()).is_ok());
        assert!(matches!(
            s.wc_query(&LabeledSample::empty()),
            Err(Error::QueryBudgetExceeded { .. })
        ));
        assert_eq!(s.counters().wc, 2);
    }

    #[test]
    fn erm_via_wc_moves_only_wc_counter() {
        let spec = HiddenClassSpec::Threshold { perm: identity(4) };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec.clone()), TieBreakPolicy::CanonicalMin)
            .with_erm_mode(ErmMode::ViaWc);
        let l = s.erm_query(&sample(&[(1, false), (2, true)])).unwrap().unwrap();
        assert_eq!(l.to_string(), "0011");
        assert_eq!(s.counters().erm, 0);
        assert!(s.counters().wc >= 2);
        let mut direct = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        let d = direct.erm_query(&sample(&[(1, false), (2, true)])).unwrap().unwrap();
        assert_eq!(d, l);
    }

    #[test]
    fn adversarial_policy_is_constant_majority_off_sample() {
        let spec = HiddenClassSpec::HammingBall { center: Labeling::zeros(4), d: 2 };
        let class = expand(&spec, 4).unwrap();
        let mut s =
            OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::AdversarialConstantMajority);
        let l = s.erm_query(&sample(&[(0, true)])).unwrap().unwrap();
        assert_eq!(l.to_string(), "1001");
    }

    #[test]
    fn nested_cells_constant_majority_answers() {
        let spec = HiddenClassSpec::NestedCells { z: vec![30, 20, 10], b: vec![false; 4] };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        assert!(s.wc_query(&sample(&[(0, true), (1, false)])).unwrap().is_realizable());
        let l = s.agnostic_erm_query(&sample(&[(0, true), (1, true), (2, false)])).unwrap();
        assert_eq!(l.to_string(), "1101");
        let e = s.erm_query(&sample(&[(0, true), (2, false)])).unwrap().unwrap();
        assert_eq!(e.to_string(), "1000");
    }

    #[test]
    fn coordinate_query_flags_future_cells() {
        let spec = HiddenClassSpec::NestedCells { z: vec![100, 50, 25], b: vec![false; 4] };
        let mut s = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        s.set_exposed(1);
        assert!(s.wc_query_coords(&[(40, true)]).unwrap().is_realizable());
        assert_eq!(s.events().len(), 1);
        assert!(s.events()[0].contains("FutureCellTouched"));
        s.wc_query_coords(&[(200, true)]).unwrap();
        assert_eq!(s.events().len(), 1);
    }
}
