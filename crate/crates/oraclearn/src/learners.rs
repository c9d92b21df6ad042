//! Generic class-agnostic online learners and reductions: version-space
//! prediction (SOA and Halving), randomized weighted majority for arbitrary
//! label streams, transductive labeling enumeration from a consistency
//! oracle, a greedy ERM-following learner, and the wrapper that replays an
//! ERM learner using only weak-consistency queries.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::core::{sauer_bound, ExplicitClass, LabeledSample, Labeling, LittlestoneSolver};
use crate::error::{Error, Result};
use crate::oracles::{ErmMode, OracleSession, QueryCounters};

/// A label stream: the adversary picks the instance each round and reveals
/// the true label after seeing the prediction.
pub trait Adversary {
    fn horizon(&self) -> usize;
    /// The instance presented at round `t` (0-based).
    fn instance(&mut self, t: usize) -> usize;
    /// Reveals the true label of `point` at round `t`, after the learner
    /// committed to `prediction`.
    fn reveal(&mut self, t: usize, point: usize, prediction: bool) -> bool;
}

/// Fixed-order realizable stream: instances arrive in index order, labels come
/// from a fixed target concept.
pub struct FixedTargetStream {
    target: Labeling,
}

impl FixedTargetStream {
    pub fn new(target: Labeling) -> Self {
        FixedTargetStream { target }
    }
}

impl Adversary for FixedTargetStream {
    fn horizon(&self) -> usize {
        self.target.len()
    }

    fn instance(&mut self, t: usize) -> usize {
        t
    }

    fn reveal(&mut self, _t: usize, point: usize, _prediction: bool) -> bool {
        self.target.get(point)
    }
}

/// A realizable stream for a fixed target concept.
pub fn realizable_stream(target: Labeling) -> FixedTargetStream {
    FixedTargetStream::new(target)
}

/// Fixed-order stream with an arbitrary (possibly unrealizable) label vector.
pub struct ArbitraryStream {
    labels: Vec<bool>,
}

impl ArbitraryStream {
    pub fn new(labels: Vec<bool>) -> Self {
        ArbitraryStream { labels }
    }
}

impl Adversary for ArbitraryStream {
    fn horizon(&self) -> usize {
        self.labels.len()
    }

    fn instance(&mut self, t: usize) -> usize {
        t
    }

    fn reveal(&mut self, _t: usize, point: usize, _prediction: bool) -> bool {
        self.labels[point]
    }
}

/// One prediction round.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RoundRecord {
    pub t: usize,
    pub point: usize,
    pub predicted: bool,
    pub actual: bool,
    pub mistake: bool,
}

/// Full account of one trial: per-round outcomes, totals, query counters,
/// optional regret, and notable events.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub learner: String,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub mistakes: u64,
    pub counters: QueryCounters,
    pub regret: Option<i64>,
    pub events: Vec<String>,
}

impl TrialRecord {
    pub fn new(learner: impl Into<String>, seed: u64) -> Self {
        TrialRecord {
            learner: learner.into(),
            seed,
            rounds: Vec::new(),
            mistakes: 0,
            counters: QueryCounters::default(),
            regret: None,
            events: Vec::new(),
        }
    }

    pub fn push_round(&mut self, t: usize, point: usize, predicted: bool, actual: bool) {
        let mistake = predicted != actual;
        if mistake {
            self.mistakes += 1;
        }
        self.rounds.push(RoundRecord { t, point, predicted, actual, mistake });
    }

    pub fn prediction_sequence(&self) -> Vec<bool> {
        self.rounds.iter().map(|r| r.predicted).collect()
    }

    /// Total oracle queries of all kinds.
    pub fn total_queries(&self) -> u64 {
        self.counters.total()
    }

    /// One CSV row per round: `t,point,predicted,actual,mistake`.
    pub fn write_rounds_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "point", "predicted", "actual", "mistake"])
            .map_err(csv_err)?;
        for r in &self.rounds {
            wtr.write_record([
                r.t.to_string(),
                r.point.to_string(),
                u8::from(r.predicted).to_string(),
                u8::from(r.actual).to_string(),
                u8::from(r.mistake).to_string(),
            ])
            .map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// JSON summary with totals, seed, and the caller's config hash.
    pub fn json_summary(&self, config_hash: u64) -> serde_json::Value {
        serde_json::json!({
            "learner": self.learner,
            "seed": self.seed,
            "rounds": self.rounds.len(),
            "mistakes": self.mistakes,
            "wc_queries": self.counters.wc,
            "erm_queries": self.counters.erm,
            "agnostic_erm_queries": self.counters.agnostic_erm,
            "restricted_erm_queries": self.counters.restricted_erm,
            "regret": self.regret,
            "events": self.events,
            "config_hash": format!("{config_hash:016x}"),
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// The set of class members consistent with all labels revealed so far.
#[derive(Clone, Debug)]
pub struct VersionSpace {
    surviving: Vec<u32>,
}

impl VersionSpace {
    pub fn full(class: &ExplicitClass) -> Self {
        VersionSpace { surviving: (0..class.len() as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.surviving.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surviving.is_empty()
    }

    pub fn surviving(&self) -> &[u32] {
        &self.surviving
    }

    /// Splits the survivors by their label at `point`: (zeros, ones).
    pub fn split(&self, class: &ExplicitClass, point: usize) -> (Vec<u32>, Vec<u32>) {
        let mut zeros = Vec::new();
        let mut ones = Vec::new();
        for &i in &self.surviving {
            if class.labelings()[i as usize].get(point) {
                ones.push(i);
            } else {
                zeros.push(i);
            }
        }
        (zeros, ones)
    }

    /// Drops every survivor disagreeing with `(point, label)`.
    pub fn restrict(&mut self, class: &ExplicitClass, point: usize, label: bool) {
        self.surviving
            .retain(|&i| class.labelings()[i as usize].get(point) == label);
    }

    /// Majority label of the survivors at `point`, ties toward `tie`.
    pub fn majority(&self, class: &ExplicitClass, point: usize, tie: bool) -> bool {
        let ones = self
            .surviving
            .iter()
            .filter(|&&i| class.labelings()[i as usize].get(point))
            .count();
        let zeros = self.surviving.len() - ones;
        if ones == zeros {
            tie
        } else {
            ones > zeros
        }
    }
}

/// Standard Optimal Algorithm: predicts the label whose version-space
/// restriction has the larger game value (ties predict 1). Mistakes are at
/// most the class's Littlestone dimension on realizable streams.
pub fn run_soa(class: &ExplicitClass, adversary: &mut dyn Adversary) -> Result<TrialRecord> {
    let mut record = TrialRecord::new("soa", 0);
    let mut vs = VersionSpace::full(class);
    let mut solver = LittlestoneSolver::new(class);
    for t in 0..adversary.horizon() {
        let x = adversary.instance(t);
        let (zeros, ones) = vs.split(class, x);
        let predicted = if zeros.is_empty() {
            true
        } else if ones.is_empty() {
            false
        } else {
            solver.dim(&ones) >= solver.dim(&zeros)
        };
        let actual = adversary.reveal(t, x, predicted);
        record.push_round(t, x, predicted, actual);
        vs.restrict(class, x, actual);
        if vs.is_empty() {
            return Err(Error::NotRealizableStream);
        }
    }
    Ok(record)
}

/// Halving: predicts the majority label of the version space (ties predict
/// 1). Mistakes are at most `floor(log2 |class|)` on realizable streams.
pub fn run_halving(class: &ExplicitClass, adversary: &mut dyn Adversary) -> Result<TrialRecord> {
    let mut record = TrialRecord::new("halving", 0);
    let mut vs = VersionSpace::full(class);
    for t in 0..adversary.horizon() {
        let x = adversary.instance(t);
        let predicted = vs.majority(class, x, true);
        let actual = adversary.reveal(t, x, predicted);
        record.push_round(t, x, predicted, actual);
        vs.restrict(class, x, actual);
        if vs.is_empty() {
            return Err(Error::NotRealizableStream);
        }
    }
    Ok(record)
}

/// Learning rate giving the standard randomized-weighted-majority regret
/// bound: `min(1, sqrt(2 ln n / T))`.
pub fn mwu_default_eta(class_size: usize, horizon: usize) -> f64 {
    if class_size <= 1 || horizon == 0 {
        return 1.0;
    }
    (2.0 * (class_size as f64).ln() / horizon as f64).sqrt().min(1.0)
}

/// Randomized weighted majority over the class members as experts, for
/// arbitrary (agnostic) label streams. Wrong experts are downweighted by
/// `(1 - eta)` per mistake; the prediction is drawn from the weighted vote.
/// Deterministic given the seed. `regret` is learner mistakes minus the best
/// expert's mistakes.
pub fn run_mwu_agnostic(
    class: &ExplicitClass,
    adversary: &mut dyn Adversary,
    eta: f64,
    seed: u64,
) -> Result<TrialRecord> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidConfig(format!("eta must lie in (0,1], got {eta}")));
    }
    let n = class.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = TrialRecord::new("mwu", seed);
    let mut weights = vec![1.0f64; n];
    let mut expert_losses = vec![0u64; n];
    for t in 0..adversary.horizon() {
        let x = adversary.instance(t);
        let mut w_one = 0.0;
        let mut w_all = 0.0;
        for (i, l) in class.labelings().iter().enumerate() {
            w_all += weights[i];
            if l.get(x) {
                w_one += weights[i];
            }
        }
        let p_one = if w_all > 0.0 { w_one / w_all } else { 0.5 };
        let predicted = rng.gen::<f64>() < p_one;
        let actual = adversary.reveal(t, x, predicted);
        record.push_round(t, x, predicted, actual);
        for (i, l) in class.labelings().iter().enumerate() {
            if l.get(x) != actual {
                expert_losses[i] += 1;
                weights[i] *= 1.0 - eta;
            }
        }
    }
    let best = *expert_losses.iter().min().unwrap_or(&0);
    record.regret = Some(record.mistakes as i64 - best as i64);
    Ok(record)
}

/// Recovers the set of realizable labelings on `[0, T)` by prefix-tree
/// expansion, issuing two weak-consistency queries per surviving prefix per
/// level. Aborts with `QueryBudgetExceeded` if the surviving-prefix count
/// exceeds `sauer_multiple` times the Sauer bound for `d_cap`, which signals
/// that the class's VC dimension is larger than promised.
pub fn transductive_enumerate(
    session: &mut OracleSession,
    t: usize,
    d_cap: usize,
    sauer_multiple: usize,
) -> Result<ExplicitClass> {
    let limit = sauer_bound(d_cap, t).saturating_mul(sauer_multiple.max(1)) as u64;
    let mut prefixes: Vec<Vec<bool>> = vec![Vec::new()];
    for x in 0..t {
        let mut next = Vec::with_capacity(prefixes.len() * 2);
        for prefix in &prefixes {
            for label in [false, true] {
                let mut pairs: Vec<(usize, bool)> =
                    prefix.iter().copied().enumerate().collect();
                pairs.push((x, label));
                let sample = LabeledSample::new(pairs)?;
                if session.wc_query(&sample)?.is_realizable() {
                    let mut ext = prefix.clone();
                    ext.push(label);
                    next.push(ext);
                }
            }
        }
        prefixes = next;
        if prefixes.len() as u64 > limit {
            return Err(Error::QueryBudgetExceeded { kind: "transductive_enumerate", limit });
        }
    }
    ExplicitClass::new(prefixes.into_iter().map(Labeling::new).collect())
}

/// Greedy ERM follower: each round it asks ERM for a concept consistent with
/// the full revealed history and predicts that concept's label on the current
/// instance (0 when the history is unrealizable).
pub fn run_erm_greedy(
    session: &mut OracleSession,
    adversary: &mut dyn Adversary,
) -> Result<TrialRecord> {
    let mut record = TrialRecord::new("erm-greedy", 0);
    let mut history = LabeledSample::empty();
    for t in 0..adversary.horizon() {
        let x = adversary.instance(t);
        let predicted = match session.erm_query(&history)? {
            Some(concept) => concept.get(x),
            None => false,
        };
        let actual = adversary.reveal(t, x, predicted);
        record.push_round(t, x, predicted, actual);
        history = match history.with(x, actual) {
            Ok(h) => h,
            Err(_) => history,
        };
    }
    record.counters = session.counters();
    Ok(record)
}

/// Replays a deterministic ERM learner using only weak-consistency queries:
/// the session's ERM endpoint is switched to the pointwise-extension
/// simulation, so the learner's code runs unchanged while every ERM call is
/// served by at most `T` WC queries.
pub fn simulate_erm_with_wc<F>(
    erm_learner: F,
    mut session: OracleSession,
    adversary: &mut dyn Adversary,
) -> Result<TrialRecord>
where
    F: FnOnce(&mut OracleSession, &mut dyn Adversary) -> Result<TrialRecord>,
{
    session = session.with_erm_mode(ErmMode::ViaWc);
    let mut record = erm_learner(&mut session, adversary)?;
    record.counters = session.counters();
    if record.counters.erm > 0 {
        return Err(Error::ContractViolation(
            "simulated run issued direct ERM queries".into(),
        ));
    }
    Ok(record)
}
