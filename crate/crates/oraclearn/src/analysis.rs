//! Independent brute-force oracles and aggregate analytics: the exact
//! mistake-bound game solver, the minimum-tree-cost dynamic program, binary
//! entropy, and Pareto-frontier aggregation over trial batches.

use std::collections::HashMap;

use serde::Serialize;

use crate::core::ExplicitClass;
use crate::error::{Error, Result};
use crate::learners::TrialRecord;

/// Exact value of the online mistake-bound game for the class: the minimum
/// over learner strategies of the maximum over realizable label streams of
/// the number of mistakes. With `transductive` set, instances arrive in fixed
/// index order and each is played once; otherwise the adversary picks any
/// still-informative instance every round (the classic game whose value is
/// the Littlestone dimension).
pub fn optimal_mistake_bound(class: &ExplicitClass, transductive: bool) -> Result<usize> {
    if class.domain_size() > 10 {
        return Err(Error::DomainTooLarge(format!(
            "optimal_mistake_bound supports T <= 10, got {}",
            class.domain_size()
        )));
    }
    let all: Vec<u32> = (0..class.len() as u32).collect();
    let value = if transductive {
        transductive_game(class, &all, 0, &mut HashMap::new())
    } else {
        adaptive_game(class, &all, &mut HashMap::new())
    };
    Ok(value)
}

fn split(class: &ExplicitClass, surviving: &[u32], x: usize) -> (Vec<u32>, Vec<u32>) {
    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for &i in surviving {
        if class.labelings()[i as usize].get(x) {
            ones.push(i);
        } else {
            zeros.push(i);
        }
    }
    (zeros, ones)
}

fn adaptive_game(
    class: &ExplicitClass,
    surviving: &[u32],
    memo: &mut HashMap<Vec<u32>, usize>,
) -> usize {
    if surviving.len() <= 1 {
        return 0;
    }
    if let Some(&v) = memo.get(surviving) {
        return v;
    }
    let mut best = 0;
    for x in 0..class.domain_size() {
        let (zeros, ones) = split(class, surviving, x);
        if zeros.is_empty() || ones.is_empty() {
            continue;
        }
        let v_zero = adaptive_game(class, &zeros, memo);
        let v_one = adaptive_game(class, &ones, memo);
        // The learner picks the prediction; the adversary then answers with
        // the worse branch for that prediction.
        let if_predict_zero = (1 + v_one).max(v_zero);
        let if_predict_one = (1 + v_zero).max(v_one);
        best = best.max(if_predict_zero.min(if_predict_one));
    }
    memo.insert(surviving.to_vec(), best);
    best
}

fn transductive_game(
    class: &ExplicitClass,
    surviving: &[u32],
    round: usize,
    memo: &mut HashMap<(Vec<u32>, usize), usize>,
) -> usize {
    if round == class.domain_size() || surviving.len() <= 1 {
        return 0;
    }
    let key = (surviving.to_vec(), round);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let (zeros, ones) = split(class, surviving, round);
    let value = if zeros.is_empty() {
        transductive_game(class, &ones, round + 1, memo)
    } else if ones.is_empty() {
        transductive_game(class, &zeros, round + 1, memo)
    } else {
        let v_zero = transductive_game(class, &zeros, round + 1, memo);
        let v_one = transductive_game(class, &ones, round + 1, memo);
        let if_predict_zero = (1 + v_one).max(v_zero);
        let if_predict_one = (1 + v_zero).max(v_one);
        if_predict_zero.min(if_predict_one)
    };
    memo.insert(key, value);
    value
}

/// Worst-case mistakes of a fixed deterministic predictor against the
/// adaptive adversary (any instance each round, labels kept realizable). The
/// predictor maps (class, surviving version-space indices, instance) to a
/// prediction.
pub fn worst_case_mistakes<F>(class: &ExplicitClass, predictor: &F) -> Result<usize>
where
    F: Fn(&ExplicitClass, &[u32], usize) -> bool,
{
    if class.domain_size() > 10 {
        return Err(Error::DomainTooLarge(format!(
            "worst_case_mistakes supports T <= 10, got {}",
            class.domain_size()
        )));
    }
    fn rec<F>(
        class: &ExplicitClass,
        surviving: &[u32],
        predictor: &F,
        memo: &mut HashMap<Vec<u32>, usize>,
    ) -> usize
    where
        F: Fn(&ExplicitClass, &[u32], usize) -> bool,
    {
        if surviving.len() <= 1 {
            return 0;
        }
        if let Some(&v) = memo.get(surviving) {
            return v;
        }
        let mut best = 0;
        for x in 0..class.domain_size() {
            let (zeros, ones) = split(class, surviving, x);
            if zeros.is_empty() || ones.is_empty() {
                continue;
            }
            let predicted = predictor(class, surviving, x);
            for (actual_branch, actual) in [(&zeros, false), (&ones, true)] {
                let miss = usize::from(predicted != actual);
                let v = miss + rec(class, actual_branch, predictor, memo);
                best = best.max(v);
            }
        }
        memo.insert(surviving.to_vec(), best);
        best
    }
    let all: Vec<u32> = (0..class.len() as u32).collect();
    Ok(rec(class, &all, predictor, &mut HashMap::new()))
}

/// Exact minimum cost over binary split trees: the root has value `n`, each
/// internal node of value `m > 1` splits into `y` and `m - y` with
/// `1 <= y <= m/2` at cost `y`, leaves have value 1, and the depth may not
/// exceed `depth_cap`.
pub fn min_tree_cost(n: u64, depth_cap: u32) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidConfig("root value must be >= 1".into()));
    }
    if n > 512 {
        return Err(Error::DomainTooLarge(format!("min_tree_cost supports n <= 512, got {n}")));
    }
    fn rec(n: u64, depth: u32, memo: &mut HashMap<(u64, u32), Option<u64>>) -> Option<u64> {
        if n == 1 {
            return Some(0);
        }
        if depth == 0 {
            return None;
        }
        if let Some(&v) = memo.get(&(n, depth)) {
            return v;
        }
        let mut best: Option<u64> = None;
        for y in 1..=n / 2 {
            if let (Some(a), Some(b)) = (rec(y, depth - 1, memo), rec(n - y, depth - 1, memo)) {
                let cost = y + a + b;
                best = Some(best.map_or(cost, |c| c.min(cost)));
            }
        }
        memo.insert((n, depth), best);
        best
    }
    rec(n, depth_cap, &mut HashMap::new()).ok_or(Error::Infeasible { n, depth_cap })
}

/// Binary entropy `h(x) = -x log2 x - (1-x) log2 (1-x)` with `0 log2 0 := 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(x));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// Mean performance of one homogeneous batch of trials.
#[derive(Clone, Debug, Serialize)]
pub struct ParetoPoint {
    pub learner: String,
    pub mean_mistakes: f64,
    pub mean_queries: f64,
    pub trials: usize,
    pub config_hash: u64,
    pub on_frontier: bool,
}

/// Aggregates each batch into its mean (mistakes, queries) point and marks
/// the non-dominated subset under (mistakes down, queries down). The result
/// is ordered by (queries, mistakes, learner id).
pub fn pareto_aggregate(batches: &[Vec<TrialRecord>]) -> Result<Vec<ParetoPoint>> {
    let mut points = Vec::with_capacity(batches.len());
    for batch in batches {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let learner = batch[0].learner.clone();
        if batch.iter().any(|r| r.learner != learner) {
            return Err(Error::InvalidConfig("batch mixes learners".into()));
        }
        let n = batch.len() as f64;
        let mean_mistakes = batch.iter().map(|r| r.mistakes as f64).sum::<f64>() / n;
        let mean_queries = batch.iter().map(|r| r.total_queries() as f64).sum::<f64>() / n;
        points.push(ParetoPoint {
            learner,
            mean_mistakes,
            mean_queries,
            trials: batch.len(),
            config_hash: 0,
            on_frontier: false,
        });
    }
    for i in 0..points.len() {
        let p = (points[i].mean_mistakes, points[i].mean_queries);
        let dominated = points.iter().enumerate().any(|(j, q)| {
            j != i
                && q.mean_mistakes <= p.0
                && q.mean_queries <= p.1
                && (q.mean_mistakes < p.0 || q.mean_queries < p.1)
        });
        points[i].on_frontier = !dominated;
    }
    points.sort_by(|a, b| {
        a.mean_queries
            .total_cmp(&b.mean_queries)
            .then(a.mean_mistakes.total_cmp(&b.mean_mistakes))
            .then(a.learner.cmp(&b.learner))
    });
    Ok(points)
}

/// CSV export of a Pareto aggregation:
/// `learner,mean_mistakes,mean_queries,trials,on_frontier`.
pub fn pareto_csv<W: std::io::Write>(points: &[ParetoPoint], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["learner", "mean_mistakes", "mean_queries", "trials", "on_frontier"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for p in points {
        wtr.write_record([
            p.learner.clone(),
            format!("{:.6}", p.mean_mistakes),
            format!("{:.6}", p.mean_queries),
            p.trials.to_string(),
            u8::from(p.on_frontier).to_string(),
        ])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{expand, littlestone_dimension, HiddenClassSpec, Labeling};

    fn thresholds(t: usize) -> ExplicitClass {
        expand(&HiddenClassSpec::Threshold { perm: (0..t).collect() }, t).unwrap()
    }

    #[test]
    fn game_value_thresholds_t8() {
        let class = thresholds(8);
        assert_eq!(optimal_mistake_bound(&class, false).unwrap(), 3);
        assert_eq!(
            optimal_mistake_bound(&class, false).unwrap(),
            littlestone_dimension(&class).unwrap()
        );
    }

    #[test]
    fn game_value_singleton_and_cube() {
        let singleton = ExplicitClass::new(vec![Labeling::zeros(4)]).unwrap();
        assert_eq!(optimal_mistake_bound(&singleton, false).unwrap(), 0);
        let mut labelings = Vec::new();
        for m in 0..32u32 {
            labelings.push(Labeling::new((0..5).map(|i| m >> i & 1 == 1).collect()));
        }
        let cube = ExplicitClass::new(labelings).unwrap();
        assert_eq!(optimal_mistake_bound(&cube, false).unwrap(), 5);
        assert_eq!(optimal_mistake_bound(&cube, true).unwrap(), 5);
    }

    #[test]
    fn transductive_thresholds_are_easy_in_index_order() {
        let class = thresholds(8);
        assert_eq!(optimal_mistake_bound(&class, true).unwrap(), 1);
    }

    #[test]
    fn tree_cost_base_cases() {
        assert_eq!(min_tree_cost(2, 1).unwrap(), 1);
        assert_eq!(min_tree_cost(4, 2).unwrap(), 4);
        assert!(matches!(min_tree_cost(2, 0), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn tree_cost_monotonicity() {
        for n in [3u64, 7, 16, 33] {
            let mut prev = u64::MAX;
            for d in (n as f64).log2().ceil() as u32..10 {
                let c = min_tree_cost(n, d).unwrap();
                assert!(c <= prev);
                prev = c;
            }
        }
        let mut prev = 0;
        for n in 1..=64u64 {
            let c = min_tree_cost(n, 10).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn tree_cost_proof_constant_sweep() {
        for n in (16u64..=512).step_by(31) {
            let depth = (1.05 * (n as f64).log2()).floor() as u32;
            match min_tree_cost(n, depth) {
                Ok(cost) => {
                    let bound = 0.1 * n as f64 * (n as f64).log2();
                    assert!(cost as f64 >= bound, "n={n}: cost {cost} < {bound}");
                }
                Err(Error::Infeasible { .. }) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn entropy_values() {
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.2).unwrap() - 0.7219280948873623).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let (a, b) = (binary_entropy(x).unwrap(), binary_entropy(1.0 - x).unwrap());
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pareto_dominance() {
        let mut fast = TrialRecord::new("fast", 0);
        fast.push_round(0, 0, true, false);
        let cheap = TrialRecord::new("cheap", 0);
        let points = pareto_aggregate(&[vec![fast], vec![cheap.clone()]]).unwrap();
        assert_eq!(points.len(), 2);
        let cheap_point = points.iter().find(|p| p.learner == "cheap").unwrap();
        let fast_point = points.iter().find(|p| p.learner == "fast").unwrap();
        assert!(cheap_point.on_frontier);
        assert!(!fast_point.on_frontier);
        assert!(pareto_aggregate(&[vec![]]).is_err());
        let single = pareto_aggregate(&[vec![cheap]]).unwrap();
        assert!(single[0].on_frontier);
    }
}
