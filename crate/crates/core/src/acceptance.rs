//! End-to-end acceptance checks shared by the test suite and `galdef verify`.

use crate::cohomology::{
    check_pairing, cohomology_dims, local_condition_nq, nice_pairing_check, root_pair, subspace_length, v_alpha_h1,
    CohDims,
};
use crate::gl2::GroupElem;
use crate::linalg::{solve, LinalgError, ZModMatrix};
use crate::planner::{apply_plan, run_planner, verify_plan, CaseTag, Ledger, PlannerConfig, PlannerError};
use crate::rings::{
    annihilator_of_augmentation, ci_criterion, fitting, fixtures, gor_factorization, random_congruence_ring,
    AugmentedRing, CiVerdict,
};
use crate::selmer::qnew_cotangent;
use crate::tame::{nice_check, normalize_special, CharSumModule, TameError, TameGroup, TameRep};
use crate::Zpn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
    #[serde(skip)]
    pub budget: Duration,
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(id: u8, name: &'static str, budget_ms: u64, f: impl FnOnce() -> Check) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let budget = Duration::from_millis(budget_ms);
    let (passed, detail) = match outcome {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; over the {budget_ms} ms budget")),
        Err(e) => (false, e),
    };
    CriterionResult { id, name, passed, detail, elapsed, budget }
}

fn group(p: u64, n: u32, q: i64) -> Result<TameGroup, String> {
    TameGroup::new(p, n, q).map_err(|e| e.to_string())
}

pub const NICE_TABLE: [(u64, i64); 5] = [(5, 2), (5, 3), (7, 2), (7, 3), (7, 5)];

pub fn nice_table() -> CriterionResult {
    timed(1, "nice local dimension table", 1000, || {
        for (p, q) in NICE_TABLE {
            let g = group(p, 1, q)?;
            let ring = g.ring();
            let frob = GroupElem::diag(ring, ring.reduce(q), 1).map_err(|e| e.to_string())?;
            nice_check(p, q, &frob).map_err(|e| format!("({p},{q}) not nice: {e}"))?;
            let rep = TameRep::new(g, frob, GroupElem::identity(ring)).map_err(|e| e.to_string())?;
            let ad = CharSumModule::adjoint(&rep).map_err(|e| e.to_string())?;
            let dims = cohomology_dims(&ad);
            let (m, nq) = local_condition_nq(&rep).map_err(|e| e.to_string())?;
            let nq_dim = subspace_length(&m, &nq);
            ensure(dims == CohDims { h0: 1, h1: 2, h2: 1 }, || format!("({p},{q}): dims {dims:?}"))?;
            ensure(nq_dim == 1, || format!("({p},{q}): dim N_q = {nq_dim}"))?;
            ensure(dims.h1 - dims.h0 == 1 && dims.h1 - nq_dim == 1, || format!("({p},{q}): differences"))?;
        }
        Ok(format!("{} pairs give (1,2,1) with dim N_q = 1", NICE_TABLE.len()))
    })
}

pub fn character_table() -> CriterionResult {
    timed(2, "character table", 1000, || {
        for (p, q) in NICE_TABLE {
            let g = group(p, 1, q)?;
            let triv = cohomology_dims(&CharSumModule::trivial(g).map_err(|e| e.to_string())?);
            let cyc = cohomology_dims(&CharSumModule::cyclotomic(g).map_err(|e| e.to_string())?);
            ensure(triv == CohDims { h0: 1, h1: 1, h2: 0 }, || format!("({p},{q}) trivial: {triv:?}"))?;
            ensure(cyc == CohDims { h0: 0, h1: 1, h2: 1 }, || format!("({p},{q}) cyclotomic: {cyc:?}"))?;
        }
        Ok("trivial (1,1,0), cyclotomic (0,1,1)".into())
    })
}

/// Random character-sum module over a random tame group, as used by criteria 3 and 4.
pub fn random_module(p: u64, n: u32, seed: u64) -> CharSumModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modulus = p.pow(n);
    let q = loop {
        let q = rng.gen_range(2..modulus);
        if q % p != 0 {
            break q;
        }
    };
    let g = TameGroup::new(p, n, q as i64).expect("q is a unit");
    CharSumModule::random(g, 4, &mut rng)
}

const FAMILY: [(u64, u32); 6] = [(5, 1), (5, 2), (5, 3), (7, 1), (7, 2), (7, 3)];
const FAMILY_SIZE: u64 = 100;

pub fn euler_characteristic() -> CriterionResult {
    timed(3, "Euler characteristic", 10_000, || {
        for (p, n) in FAMILY {
            for seed in 0..FAMILY_SIZE {
                let d = cohomology_dims(&random_module(p, n, seed));
                ensure(d.euler_characteristic() == 0, || format!("p={p} n={n} seed={seed}: {d:?}"))?;
            }
        }
        Ok(format!("{} modules", FAMILY.len() as u64 * FAMILY_SIZE))
    })
}

pub fn duality() -> CriterionResult {
    timed(4, "local duality", 30_000, || {
        for (p, n) in FAMILY {
            for seed in 0..FAMILY_SIZE {
                let m = random_module(p, n, seed);
                let md = m.tate_dual().map_err(|e| e.to_string())?;
                let r = check_pairing(&m, &md).map_err(|e| e.to_string())?;
                ensure(r.perfect && r.exponents == r.dual_exponents, || format!("p={p} n={n} seed={seed}: {r:?}"))?;
            }
        }
        let mut pairs = 0;
        for q in [2, 3] {
            let r = nice_pairing_check(5, q).map_err(|e| e.to_string())?;
            ensure(r.linear_in_frobenius && r.unramified_isotropic && r.scaled_evaluation, || format!("{r:?}"))?;
            pairs += r.pairs_checked;
        }
        Ok(format!("{} perfect pairings; {pairs} enumerated pairs at p=5", FAMILY.len() as u64 * FAMILY_SIZE))
    })
}

pub fn lemma_w() -> CriterionResult {
    timed(5, "root-space H1 lengths", 5000, || {
        let mut cases = 0;
        for m in 1..=2u32 {
            for n in m..=3u32 {
                let g = group(5, n, 2)?;
                let w = root_pair(g, 4, g.ring().p_pow(m)).map_err(|e| e.to_string())?;
                let r = v_alpha_h1(g, m, &w).map_err(|e| e.to_string())?;
                ensure(r.v_exponents == vec![m, m], || format!("m={m} n={n}: V part {:?}", r.v_exponents))?;
                ensure(r.w_exponents.is_empty(), || format!("m={m} n={n}: W part {:?}", r.w_exponents))?;
                cases += 1;
            }
        }
        Ok(format!("{cases} (m, n) cases at p=5, q=2"))
    })
}

/// A random lift mod p^n of nice residual data: a special normal form with a torus scalar, conjugated.
pub fn random_nice_lift<R: Rng>(p: u64, n: u32, rng: &mut R) -> TameRep {
    let ring = Zpn::new(p, n).expect("valid precision");
    let modulus = ring.modulus();
    let q = loop {
        let q = rng.gen_range(2..modulus);
        let r = q % p;
        if r != 0 && r != 1 && r != p - 1 {
            break q;
        }
    };
    let g = TameGroup::over(ring, q as i64).expect("unit");
    let e = rng.gen_range(1..=n);
    let base = TameRep::special(g, e, rng.gen_range(1..p)).expect("special rep");
    let c0 = rng.gen_range(1..p);
    let shift = ring.mul(ring.p_pow((n - e).max(1)), rng.gen_range(0..p));
    let scalar = GroupElem::diag(ring, ring.mul(c0, 1 + shift), c0).expect("unit diagonal");
    let rep = TameRep::new(g, base.sigma.mul(&scalar), base.tau.clone()).expect("torus commutes");
    let conj = loop {
        let e: Vec<i64> = (0..4).map(|_| rng.gen_range(0..modulus) as i64).collect();
        if let Ok(c) = GroupElem::gl2(ring, [[e[0], e[1]], [e[2], e[3]]]) {
            break c;
        }
    };
    rep.conjugate(&conj)
}

pub fn normal_form() -> CriterionResult {
    timed(6, "tame normal form", 5000, || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut count = 0;
        for p in [5u64, 7] {
            for _ in 0..100 {
                let rep = random_nice_lift(p, 3, &mut rng);
                let nf = normalize_special(&rep).map_err(|e| e.to_string())?;
                let k = rep.group.ring().residue_field();
                let ratio = k.mul(nf.rep.sigma.entry(0, 0) % p, k.inv(nf.rep.sigma.entry(1, 1) % p).expect("unit"));
                ensure(nf.rep.sigma.is_diagonal() && nf.rep.tau.is_upper_unipotent(), || format!("{rep:?}"))?;
                ensure(ratio == rep.group.q() % p, || format!("eigenvalue ratio {ratio} for {rep:?}"))?;
                ensure(rep.conjugate(&nf.conjugator) == nf.rep, || format!("re-conjugation differs for {rep:?}"))?;
                count += 1;
            }
        }
        Ok(format!("{count} lifts mod p^3"))
    })
}

pub fn qnew_contributions() -> CriterionResult {
    timed(7, "q-new local contributions", 5000, || {
        let mut cases = 0;
        for q in [2i64, 3] {
            for e in 1..=2u32 {
                for n in e..=3u32 {
                    let r = qnew_cotangent(5, &[(q, e)], n).map_err(|x| x.to_string())?;
                    let c = &r.contributions[0];
                    ensure(c.h1_length - c.nq_length == e, || format!("q={q} e={e} n={n}: {c:?}"))?;
                    ensure(r.exponents == vec![e], || format!("q={q} e={e} n={n}: {:?}", r.exponents))?;
                    cases += 1;
                }
            }
        }
        let both = qnew_cotangent(5, &[(2, 1), (3, 2)], 3).map_err(|x| x.to_string())?;
        ensure(both.exponents == vec![1, 2], || format!("{:?}", both.exponents))?;
        Ok(format!("{cases} single-prime cases and one two-prime case"))
    })
}

pub const PLANNER_RUNS: u64 = 300;
pub const PLANNER_RETRY_BUDGET: usize = 4096;

pub fn planner_config(seed: u64) -> PlannerConfig {
    let n = 1 + (seed % 3) as usize;
    let mut c = PlannerConfig::new(5, n, seed);
    c.retry_budget = PLANNER_RETRY_BUDGET;
    c.force_case = [None, Some(CaseTag::Case1), Some(CaseTag::Case2), Some(CaseTag::Case3)][((seed / 3) % 4) as usize];
    c
}

pub fn planner_end_to_end() -> CriterionResult {
    timed(8, "planner end to end", 60_000, || {
        let identity = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let swap = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        let mut seen = [0usize; 3];
        let mut unforced_seen = [false; 3];
        for seed in 0..PLANNER_RUNS {
            let cfg = planner_config(seed);
            let run = run_planner(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
            let r = &run.report;
            ensure(r.passed, || format!("seed {seed}: {:?}", r.failures()))?;
            let idx = match run.plan.case {
                CaseTag::Case1 => 0,
                CaseTag::Case2 => 1,
                CaseTag::Case3 => 2,
            };
            seen[idx] += 1;
            if cfg.force_case.is_none() {
                unforced_seen[idx] = true;
            }
            let want = if idx == 0 { cfg.n + 1 } else { cfg.n + 3 };
            ensure(run.plan.q.len() == want, || format!("seed {seed}: |Q| = {}", run.plan.q.len()))?;
            match idx {
                1 => ensure(r.final_matrix.as_ref() == Some(&identity), || format!("seed {seed}: {:?}", r.final_matrix))?,
                2 => ensure(r.final_matrix.as_ref() == Some(&swap), || format!("seed {seed}: {:?}", r.final_matrix))?,
                _ => {}
            }
            if seed % 10 == 0 {
                let again = run_planner(&cfg).map_err(|e| e.to_string())?;
                let a = serde_json::to_string(&run.report).map_err(|e| e.to_string())?;
                let b = serde_json::to_string(&again.report).map_err(|e| e.to_string())?;
                ensure(a == b, || format!("seed {seed}: report differs on rerun"))?;
            }
        }
        ensure(seen.iter().all(|&c| c > 0), || format!("case counts {seen:?}"))?;
        Ok(format!(
            "{PLANNER_RUNS} runs, case counts {seen:?}, unforced cases seen {unforced_seen:?}"
        ))
    })
}

pub fn rings() -> CriterionResult {
    timed(9, "augmented rings", 10_000, || {
        for d in 1..=3u32 {
            let a = AugmentedRing::fiber_product(5, d).map_err(|e| e.to_string())?;
            let ci = ci_criterion(&a, None).map_err(|e| e.to_string())?;
            ensure(ci.phi_length == d && ci.eta_length == Some(d), || format!("d={d}: {ci:?}"))?;
            ensure(ci.verdict == CiVerdict::CompleteIntersection, || format!("d={d}: {ci:?}"))?;
            let fit = fitting(&a).map_err(|e| e.to_string())?;
            ensure(fit.pi_exponent == Some(d), || format!("d={d}: π(Fitt) {:?}", fit.pi_exponent))?;
            annihilator_of_augmentation(&a).map_err(|e| e.to_string())?;
            let g = gor_factorization(&fixtures::projection(5, d).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            ensure(g.equal && g.lhs == Some(d), || format!("d={d}: {g:?}"))?;
        }
        let three = AugmentedRing::three_copies(5).map_err(|e| e.to_string())?;
        let ci = ci_criterion(&three, None).map_err(|e| e.to_string())?;
        ensure(
            ci.phi_length == 2 && ci.eta_length == Some(1) && ci.verdict == CiVerdict::NotCompleteIntersection,
            || format!("three copies: {ci:?}"),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut max_gap = 0;
        for i in 0..120 {
            let a = random_congruence_ring(5, &mut rng).map_err(|e| format!("ring {i}: {e}"))?;
            let ci = ci_criterion(&a, None).map_err(|e| format!("ring {i}: {e}"))?;
            let gap = ci.length_gap.ok_or_else(|| format!("ring {i}: η = 0"))?;
            ensure(gap >= 0, || format!("ring {i}: {ci:?}"))?;
            max_gap = max_gap.max(gap);
        }
        Ok(format!("fiber products d=1..3 CI, three copies (2,1), 120 generated rings, largest gap {max_gap}"))
    })
}

/// The negative controls that do not need the command line.
pub fn negative_controls() -> CriterionResult {
    timed(10, "negative controls", 20_000, || {
        let mut mutations = 0;
        for seed in 0..12 {
            let run = run_planner(&planner_config(seed)).map_err(|e| e.to_string())?;
            for (ti, t) in run.plan.transitions.iter().enumerate() {
                for (si, s) in t.steps.iter().enumerate() {
                    for ki in 0..s.terms.len() {
                        let mut plan = run.plan.clone();
                        let c = &mut plan.transitions[ti].steps[si].terms[ki].coefficient;
                        *c = (*c + 1) % 5;
                        let ledger = apply_plan(Ledger::initial(&run.state), &run.state, &plan).map_err(|e| e.to_string())?;
                        ensure(!verify_plan(&run.state, &plan, &ledger).passed, || {
                            format!("seed {seed}: mutation {ti}/{si}/{ki} passed")
                        })?;
                        mutations += 1;
                    }
                }
            }
        }
        for (p, q) in [(5u64, 1i64), (5, 4), (7, 6), (7, 8)] {
            let k = Zpn::new(p, 1).map_err(|e| e.to_string())?;
            let frob = GroupElem::diag(k, k.reduce(q), 1).map_err(|e| e.to_string())?;
            ensure(matches!(nice_check(p, q, &frob), Err(TameError::NotNice(_))), || format!("q={q} accepted at p={p}"))?;
        }
        let zero = run_planner(&PlannerConfig::new(5, 0, 1));
        ensure(matches!(zero, Err(PlannerError::EmptySelmer)), || format!("n=0 gave {zero:?}"))?;
        let k = Zpn::new(5, 2).map_err(|e| e.to_string())?;
        let m = ZModMatrix::from_row_vectors(k, 1, &[vec![5]]);
        ensure(solve(&m, &[1]) == Err(LinalgError::Unsolvable), || "5x = 1 mod 25 solved".into())?;
        Ok(format!("{mutations} plan mutations flagged; q ≡ ±1 rejected; n=0 rejected; Unsolvable reported"))
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        nice_table(),
        character_table(),
        euler_characteristic(),
        duality(),
        lemma_w(),
        normal_form(),
        qnew_contributions(),
        planner_end_to_end(),
        rings(),
        negative_controls(),
    ]
}

pub fn render(r: &CriterionResult) -> String {
    format!(
        "{} criterion {:>2} {}: {} ({} ms, budget {} ms)",
        if r.passed { "PASS" } else { "FAIL" },
        r.id,
        r.name,
        r.detail,
        r.elapsed.as_millis(),
        r.budget.as_millis()
    )
}
