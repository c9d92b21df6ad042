//! Cross-module invariants checked by property testing: oracle agreement,
//! analytic-versus-expanded hidden-class answers, counter exactness, the
//! enumeration preprocessor, the ERM-via-WC simulation, and the game solver
//! against SOA.

use oraclearn::analysis::{optimal_mistake_bound, worst_case_mistakes};
use oraclearn::core::{
    expand, littlestone_dimension, vc_dimension, ExplicitClass, HiddenClassSpec, LabeledSample,
    Labeling, LittlestoneSolver,
};
use oraclearn::learners::transductive_enumerate;
use oraclearn::oracles::{ClassHandle, ErmMode, OracleSession, TieBreakPolicy};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn arb_class(max_t: usize, max_n: usize) -> impl Strategy<Value = ExplicitClass> {
    (2..=max_t).prop_flat_map(move |t| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), t), 1..=max_n)
            .prop_map(|rows| ExplicitClass::new(rows.into_iter().map(Labeling::new).collect()).unwrap())
    })
}

fn arb_sample(t: usize) -> impl Strategy<Value = LabeledSample> {
    prop::collection::vec(any::<bool>(), t).prop_flat_map(move |labels| {
        prop::collection::vec(any::<bool>(), t).prop_map(move |mask| {
            let pairs: Vec<(usize, bool)> = mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(p, _)| (p, labels[p]))
                .collect();
            LabeledSample::new(pairs).unwrap()
        })
    })
}

fn arb_perm(t: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..t).collect::<Vec<usize>>()).prop_shuffle()
}

fn arb_hidden_spec() -> impl Strategy<Value = (HiddenClassSpec, usize)> {
    (3..=7usize).prop_flat_map(|t| {
        prop_oneof![
            arb_perm(t).prop_map(move |perm| (HiddenClassSpec::Threshold { perm }, t)),
            (arb_perm(t), 1..=2usize)
                .prop_map(move |(perm, k)| (HiddenClassSpec::KIntervals { perm, k }, t)),
            (prop::collection::vec(any::<bool>(), t), 0..=2usize).prop_map(move |(bits, d)| {
                (HiddenClassSpec::HammingBall { center: Labeling::new(bits), d }, t)
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wc_agrees_with_erm_and_results_are_consistent(
        class in arb_class(6, 12),
        policy in prop_oneof![
            Just(TieBreakPolicy::CanonicalMin),
            Just(TieBreakPolicy::AdversarialConstantMajority)
        ],
        seed_sample in any::<u64>(),
    ) {
        let t = class.domain_size();
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let sample = arb_sample(t)
            .new_tree(&mut runner)
            .unwrap()
            .current();
        let _ = seed_sample;
        let mut session = OracleSession::new(ClassHandle::Explicit(class.clone()), policy);
        let wc = session.wc_query(&sample).unwrap().is_realizable();
        let erm = session.erm_query(&sample).unwrap();
        prop_assert_eq!(wc, erm.is_some());
        if let Some(l) = &erm {
            prop_assert!(l.is_consistent(&sample));
            prop_assert!(class.contains(l));
        }
        prop_assert_eq!(session.counters().total(), 2);
        prop_assert_eq!(session.transcript().len(), 2);
    }

    #[test]
    fn agnostic_error_is_the_class_minimum(class in arb_class(6, 12)) {
        let t = class.domain_size();
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let mut sample = arb_sample(t).new_tree(&mut runner).unwrap().current();
        if sample.is_empty() {
            sample = LabeledSample::new(vec![(0, true)]).unwrap();
        }
        let err = |l: &Labeling| {
            sample.pairs().iter().filter(|&&(p, y)| l.get(p) != y).count()
        };
        let best = class.labelings().iter().map(err).min().unwrap();
        for policy in [TieBreakPolicy::CanonicalMin, TieBreakPolicy::AdversarialConstantMajority] {
            let mut session = OracleSession::new(ClassHandle::Explicit(class.clone()), policy);
            let got = session.agnostic_erm_query(&sample).unwrap();
            prop_assert_eq!(err(&got), best);
            prop_assert!(class.contains(&got));
        }
    }

    #[test]
    fn analytic_realizability_matches_expansion((spec, t) in arb_hidden_spec()) {
        let class = expand(&spec, t).unwrap();
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let mut hidden =
            OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        let mut explicit =
            OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::CanonicalMin);
        for _ in 0..20 {
            let sample = arb_sample(t).new_tree(&mut runner).unwrap().current();
            let a = hidden.wc_query(&sample).unwrap();
            let b = explicit.wc_query(&sample).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn analytic_erm_matches_expansion_under_canonical_min((spec, t) in arb_hidden_spec()) {
        let class = expand(&spec, t).unwrap();
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let mut hidden =
            OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        let mut explicit =
            OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::CanonicalMin);
        for _ in 0..10 {
            let sample = arb_sample(t).new_tree(&mut runner).unwrap().current();
            let a = hidden.erm_query(&sample).unwrap();
            let b = explicit.erm_query(&sample).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn erm_via_wc_equals_direct_erm((spec, t) in arb_hidden_spec()) {
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let mut direct = OracleSession::new(
            ClassHandle::Hidden(spec.clone()),
            TieBreakPolicy::CanonicalMin,
        );
        let mut simulated = OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin)
            .with_erm_mode(ErmMode::ViaWc);
        for _ in 0..10 {
            let sample = arb_sample(t).new_tree(&mut runner).unwrap().current();
            let a = direct.erm_query(&sample).unwrap();
            let b = simulated.erm_query(&sample).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(simulated.counters().wc <= simulated.counters().total());
            prop_assert_eq!(simulated.counters().erm, 0);
        }
    }

    #[test]
    fn enumeration_recovers_hidden_classes((spec, t) in arb_hidden_spec()) {
        let class = expand(&spec, t).unwrap();
        let d_cap = vc_dimension(&class).unwrap();
        let mut session =
            OracleSession::new(ClassHandle::Hidden(spec), TieBreakPolicy::CanonicalMin);
        let got = transductive_enumerate(&mut session, t, d_cap, 2).unwrap();
        prop_assert_eq!(got, class);
    }

    #[test]
    fn soa_worst_case_equals_game_value(class in arb_class(5, 10)) {
        let soa_predictor = |class: &ExplicitClass, surviving: &[u32], x: usize| {
            let mut solver = LittlestoneSolver::new(class);
            let (mut zeros, mut ones) = (Vec::new(), Vec::new());
            for &i in surviving {
                if class.labelings()[i as usize].get(x) {
                    ones.push(i);
                } else {
                    zeros.push(i);
                }
            }
            if zeros.is_empty() {
                true
            } else if ones.is_empty() {
                false
            } else {
                solver.dim(&ones) >= solver.dim(&zeros)
            }
        };
        let worst = worst_case_mistakes(&class, &soa_predictor).unwrap();
        let opt = optimal_mistake_bound(&class, false).unwrap();
        prop_assert_eq!(worst, opt);
        prop_assert_eq!(opt, littlestone_dimension(&class).unwrap());
    }

    #[test]
    fn restricted_erm_counts_separately(class in arb_class(5, 8)) {
        let t = class.domain_size();
        let history = LabeledSample::new(
            (0..t).map(|p| (p, class.labelings()[0].get(p))).collect(),
        ).unwrap();
        let sub = LabeledSample::new(vec![(0, class.labelings()[0].get(0))]).unwrap();
        let mut session =
            OracleSession::new(ClassHandle::Explicit(class), TieBreakPolicy::CanonicalMin);
        let got = session.restricted_erm_query(&sub, &history).unwrap();
        prop_assert!(got.is_some());
        prop_assert_eq!(session.counters().restricted_erm, 1);
        prop_assert_eq!(session.counters().erm, 0);
    }
}

#[test]
fn frozen_dimension_values() {
    let thresholds = expand(&HiddenClassSpec::Threshold { perm: (0..8).collect() }, 8).unwrap();
    assert_eq!(vc_dimension(&thresholds).unwrap(), 1);
    assert_eq!(littlestone_dimension(&thresholds).unwrap(), 3);

    let intervals =
        expand(&HiddenClassSpec::KIntervals { perm: (0..6).collect(), k: 1 }, 6).unwrap();
    assert_eq!(vc_dimension(&intervals).unwrap(), 2);

    let ball = expand(
        &HiddenClassSpec::HammingBall { center: Labeling::zeros(6), d: 2 },
        6,
    )
    .unwrap();
    assert_eq!(littlestone_dimension(&ball).unwrap(), 2);
}
