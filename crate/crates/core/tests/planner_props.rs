use galdef_core::planner::{
    apply_plan, run_planner, verify_plan, CaseTag, Ledger, PlannerConfig, PlannerError, Target,
};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn config(p: u64, n: usize, seed: u64, level: u32) -> PlannerConfig {
    let mut c = PlannerConfig::new(p, n, seed);
    c.level = level;
    c.retry_budget = 4096;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn unforced_runs_verify(p in prop::sample::select(vec![5u64, 7, 11]), n in 1usize..=4, seed: u64, level in 2u32..=4) {
        let run = run_planner(&config(p, n, seed, level)).unwrap();
        prop_assert!(run.report.passed, "{:?}", run.report.failures());
        let expected = if run.plan.case == CaseTag::Case1 { n + 1 } else { n + 3 };
        prop_assert_eq!(run.plan.q.len(), expected);
        prop_assert_eq!(run.report.measured_d, Some(level));
        prop_assert_eq!(run.report.level_d_minus_one, level - 1);
        prop_assert_eq!(run.ledger.replay(&run.state).unwrap(), run.ledger.clone());
    }

    #[test]
    fn runs_are_deterministic(n in 1usize..=3, seed: u64) {
        let a = run_planner(&config(5, n, seed, 2)).unwrap();
        let b = run_planner(&config(5, n, seed, 2)).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn every_coefficient_mutation_is_caught(n in 1usize..=3, seed: u64, case in 0usize..3) {
        let force = [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3][case];
        let mut c = config(5, n, seed, 2);
        c.force_case = Some(force);
        let run = run_planner(&c).unwrap();
        prop_assert!(run.report.passed, "{:?}", run.report.failures());
        for (ti, t) in run.plan.transitions.iter().enumerate() {
            for (si, s) in t.steps.iter().enumerate() {
                for ki in 0..s.terms.len() {
                    let mut plan = run.plan.clone();
                    let coef = &mut plan.transitions[ti].steps[si].terms[ki].coefficient;
                    *coef = (*coef + 1) % 5;
                    let ledger = apply_plan(Ledger::initial(&run.state), &run.state, &plan).unwrap();
                    let report = verify_plan(&run.state, &plan, &ledger);
                    prop_assert!(!report.passed, "mutation of {:?} step {} term {} passed", t.target, si, ki);
                }
            }
        }
    }
}

#[test]
fn all_cases_occur_without_forcing() {
    let mut seen = BTreeSet::new();
    for seed in 0..300u64 {
        let n = 1 + (seed % 3) as usize;
        let run = run_planner(&config(5, n, seed, 2)).unwrap();
        assert!(run.report.passed, "seed {seed}: {:?}", run.report.failures());
        seen.insert(run.plan.case);
    }
    assert_eq!(seen.len(), 3, "{seen:?}");
}

#[test]
fn qi_sets_follow_the_case_tables() {
    let mut c = config(7, 2, 17, 2);
    c.force_case = Some(CaseTag::Case2);
    let run = run_planner(&c).unwrap();
    assert!(run.report.passed);
    let q = |i: usize| run.plan.transition(Target::Omit(i)).unwrap().primes.clone();
    assert_eq!(q(3), vec![0, 1]);
    assert_eq!(q(4), vec![0, 1, 2, 4]);
    assert_eq!(q(5), vec![0, 1, 2, 3]);
    for i in 1..=2 {
        let ramified = run.ledger.initial[i - 1].ramified_coefficient != 0;
        let want: Vec<usize> = if ramified {
            (0..5).filter(|&x| x != i - 1 && x != 4).collect()
        } else {
            (0..3).filter(|&x| x != i - 1).collect()
        };
        assert_eq!(q(i), want);
    }
}

#[test]
fn retry_budget_is_surfaced() {
    let mut c = PlannerConfig::new(5, 2, 9);
    c.force_case = Some(CaseTag::Case3);
    c.force_own_value = Some(4);
    match run_planner(&c) {
        Err(PlannerError::RetryBudgetExhausted { budget, .. }) => assert_eq!(budget, 64),
        other => panic!("{other:?}"),
    }
}
