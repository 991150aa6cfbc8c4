//! Scenario parsing, suite dispatch and canonical JSON reports for the `galdef` binary.

use galdef_core::acceptance::{self, CriterionResult};
use galdef_core::cohomology::{
    check_pairing, cohomology_dims, local_condition_nq, subspace_length, unramified_subspace,
};
use galdef_core::gl2::GroupElem;
use galdef_core::planner::{run_planner, CaseTag, PlannerConfig, PlannerRun, Target, MAX_SELMER_RANK};
use galdef_core::rings::{ci_criterion, fitting, random_congruence_ring, AugmentedRing, Congruence, Witnesses};
use galdef_core::selmer::{fixtures, qnew_cotangent, ConditionKind, GlobalModel};
use galdef_core::tame::{CharSumModule, TameGroup, TameRep};
use galdef_core::zp::is_prime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

pub use galdef_core::acceptance::render as acceptance_line;

pub const SEED_ENV: &str = "GALDEF_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum Scenario {
    LocalCohomology(LocalScenario),
    Selmer(SelmerScenario),
    Plan(PlanScenario),
    Rings(RingsScenario),
}

impl Scenario {
    pub fn suite(&self) -> &'static str {
        match self {
            Scenario::LocalCohomology(_) => "local-cohomology",
            Scenario::Selmer(_) => "selmer",
            Scenario::Plan(_) => "plan",
            Scenario::Rings(_) => "rings",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Scenario::LocalCohomology(s) => s.seed,
            Scenario::Selmer(s) => s.seed,
            Scenario::Plan(s) => s.seed,
            Scenario::Rings(s) => s.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleKind {
    /// sl2 with Frobenius diag(q, 1), unramified.
    Sl2Nice,
    /// sl2 under the special rep of the given ramification level.
    Sl2Special,
    Trivial,
    Cyclotomic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalCase {
    pub p: u64,
    pub q: i64,
    #[serde(default = "one")]
    pub n: u32,
    pub module: ModuleKind,
    pub level: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub p: u64,
    pub n: u32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalScenario {
    pub seed: Option<u64>,
    pub p: Option<u64>,
    pub q: Option<i64>,
    pub n: Option<u32>,
    pub module: Option<ModuleKind>,
    pub level: Option<u32>,
    #[serde(default)]
    pub cases: Vec<LocalCase>,
    pub random: Option<RandomFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Borel { condition: ConditionKind, ramified: bool },
    LevelOne { condition: ConditionKind },
    CyclotomicBorel { condition: ConditionKind },
    Adjoint { p: u64, generators: Vec<[[i64; 2]; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QnewSpec {
    pub p: u64,
    pub n: u32,
    /// (q, ramification level) pairs.
    pub primes: Vec<(i64, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelmerScenario {
    pub seed: Option<u64>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    pub qnew: Option<QnewSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanScenario {
    pub seed: Option<u64>,
    #[serde(default = "five")]
    pub p: u64,
    pub n: usize,
    #[serde(default = "two")]
    pub level: u32,
    pub retry_budget: Option<usize>,
    pub force_case: Option<CaseTag>,
    #[serde(default = "one_u64")]
    pub runs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RingSpec {
    FiberProduct { p: u64, d: u32, precision: Option<u32> },
    ThreeCopies { p: u64, precision: Option<u32> },
    Congruence {
        p: u64,
        copies: usize,
        /// (i, j, exponent) triples.
        congruences: Vec<(usize, usize, u32)>,
        #[serde(default)]
        augmentation: usize,
        precision: Option<u32>,
    },
    Table {
        p: u64,
        /// Torsion exponent per basis element, 0 for free.
        torsion: Vec<u32>,
        structure: Vec<Vec<Vec<i64>>>,
        unit: Vec<i64>,
        augmentation: Vec<i64>,
        #[serde(default)]
        depth_one: bool,
        #[serde(default)]
        cohen_macaulay: bool,
        #[serde(default)]
        gorenstein: bool,
        precision: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingFamily {
    pub p: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingsScenario {
    pub seed: Option<u64>,
    #[serde(default)]
    pub rings: Vec<RingSpec>,
    pub family: Option<RingFamily>,
}

fn one() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}
fn two() -> u32 {
    2
}
fn five() -> u64 {
    5
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    validate(&scenario)?;
    Ok(scenario)
}

fn check_prime(p: u64, what: &str) -> Result<(), CliError> {
    if !is_prime(p) || p < 3 {
        return Err(CliError::Validation(format!("{what}: p = {p} must be an odd prime")));
    }
    Ok(())
}

pub fn validate(scenario: &Scenario) -> Result<(), CliError> {
    let bad = |s: String| Err(CliError::Validation(s));
    match scenario {
        Scenario::LocalCohomology(s) => {
            let single = [s.p.is_some(), s.q.is_some(), s.module.is_some()];
            if single.iter().any(|&x| x) && !single.iter().all(|&x| x) {
                return bad("a top-level case needs p, q and module together".into());
            }
            if s.p.is_none() && s.cases.is_empty() && s.random.is_none() {
                return bad("no cases given".into());
            }
            for c in local_cases(s) {
                check_prime(c.p, "case")?;
                if c.n == 0 || c.n > 6 {
                    return bad(format!("n = {} outside 1..=6", c.n));
                }
                if c.q.rem_euclid(c.p as i64) == 0 {
                    return bad(format!("q = {} is divisible by p", c.q));
                }
            }
            if let Some(r) = &s.random {
                check_prime(r.p, "random family")?;
                if r.n == 0 || r.n > 4 || r.count == 0 || r.count > 10_000 {
                    return bad("random family needs 1 <= n <= 4 and 1 <= count <= 10000".into());
                }
            }
        }
        Scenario::Selmer(s) => {
            if s.models.is_empty() && s.qnew.is_none() {
                return bad("no models given".into());
            }
            for m in &s.models {
                if let ModelSpec::Adjoint { p, generators } = m {
                    check_prime(*p, "adjoint model")?;
                    if generators.is_empty() {
                        return bad("adjoint model needs generators".into());
                    }
                }
            }
            if let Some(q) = &s.qnew {
                check_prime(q.p, "qnew")?;
                if q.primes.is_empty() {
                    return bad("qnew needs at least one prime".into());
                }
            }
        }
        Scenario::Plan(s) => {
            if s.n == 0 {
                return bad("plan needs n >= 1: the Selmer group must be nonzero".into());
            }
            if s.n > MAX_SELMER_RANK {
                return bad(format!("n = {} exceeds {MAX_SELMER_RANK}", s.n));
            }
            if !is_prime(s.p) || s.p < 5 {
                return bad(format!("plan needs a prime p >= 5, got {}", s.p));
            }
            if s.level < 2 || s.level > 6 {
                return bad(format!("level {} outside 2..=6", s.level));
            }
            if s.runs == 0 || s.runs > 10_000 {
                return bad("runs must be in 1..=10000".into());
            }
            if s.retry_budget == Some(0) {
                return bad("retry budget must be positive".into());
            }
        }
        Scenario::Rings(s) => {
            if s.rings.is_empty() && s.family.is_none() {
                return bad("no rings given".into());
            }
            if let Some(f) = &s.family {
                check_prime(f.p, "ring family")?;
                if f.count == 0 || f.count > 10_000 {
                    return bad("family count must be in 1..=10000".into());
                }
            }
            for r in &s.rings {
                build_ring(r).map_err(|e| CliError::Validation(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn local_cases(s: &LocalScenario) -> Vec<LocalCase> {
    let mut out = Vec::new();
    if let (Some(p), Some(q), Some(module)) = (s.p, s.q, s.module) {
        out.push(LocalCase { p, q, n: s.n.unwrap_or(1), module, level: s.level });
    }
    out.extend(s.cases.iter().cloned());
    out
}

/// Seed precedence: command flag, scenario field, environment, 0.
pub fn resolve_seed(flag: Option<u64>, scenario: &Scenario, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(scenario.seed()) {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| CliError::Validation(format!("{SEED_ENV}={v} is not an integer"))),
        None => Ok(0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub artifact_version: String,
    pub suite: String,
    pub seed: u64,
    pub scenario: Value,
    pub results: Vec<Value>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<u64>,
}

/// An item result: its JSON and whether it passed.
type Item = (Value, bool);

fn failed(label: Value, err: impl std::fmt::Display) -> Item {
    (json!({ "item": label, "error": err.to_string(), "passed": false }), false)
}

pub fn run(scenario: &Scenario, seed: u64, with_timings: bool) -> Result<Report, CliError> {
    let start = Instant::now();
    let items = match scenario {
        Scenario::LocalCohomology(s) => run_local(s, seed),
        Scenario::Selmer(s) => run_selmer(s),
        Scenario::Plan(s) => run_plan(s, seed),
        Scenario::Rings(s) => run_rings(s, seed),
    };
    let passed = items.iter().all(|(_, ok)| *ok);
    Ok(Report {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        suite: scenario.suite().to_string(),
        seed,
        scenario: serde_json::to_value(scenario).map_err(|e| CliError::Io(e.to_string()))?,
        results: items.into_iter().map(|(v, _)| v).collect(),
        passed,
        timings_ms: with_timings.then(|| start.elapsed().as_millis() as u64),
    })
}

fn local_case(c: &LocalCase) -> Result<Value, String> {
    let g = TameGroup::new(c.p, c.n, c.q).map_err(|e| e.to_string())?;
    let ring = g.ring();
    let rep = match c.module {
        ModuleKind::Sl2Nice => Some(
            TameRep::new(g, GroupElem::diag(ring, ring.reduce(c.q), 1).map_err(|e| e.to_string())?, GroupElem::identity(ring))
                .map_err(|e| e.to_string())?,
        ),
        ModuleKind::Sl2Special => Some(TameRep::special(g, c.level.unwrap_or(1), 1).map_err(|e| e.to_string())?),
        _ => None,
    };
    let m = match (c.module, &rep) {
        (ModuleKind::Trivial, _) => CharSumModule::trivial(g),
        (ModuleKind::Cyclotomic, _) => CharSumModule::cyclotomic(g),
        (_, Some(r)) => CharSumModule::adjoint(r),
        _ => unreachable!("sl2 modules carry a rep"),
    }
    .map_err(|e| e.to_string())?;
    let dims = cohomology_dims(&m);
    let nq = match &rep {
        Some(r) => match local_condition_nq(r) {
            Ok((m, l)) => Some(subspace_length(&m, &l)),
            Err(_) => None,
        },
        None => None,
    };
    let md = m.tate_dual().map_err(|e| e.to_string())?;
    let pairing = check_pairing(&m, &md).map_err(|e| e.to_string())?;
    let euler = dims.euler_characteristic();
    Ok(json!({
        "p": c.p, "q": c.q, "n": c.n, "module": c.module, "level": c.level,
        "h0": dims.h0, "h1": dims.h1, "h2": dims.h2,
        "euler_characteristic": euler,
        "nq_length": nq,
        "unramified_length": subspace_length(&m, &unramified_subspace(&m)),
        "pairing_perfect": pairing.perfect,
        "passed": euler == 0 && pairing.perfect,
    }))
}

fn run_local(s: &LocalScenario, seed: u64) -> Vec<Item> {
    let mut items = Vec::new();
    for c in local_cases(s) {
        let label = json!({ "p": c.p, "q": c.q, "n": c.n, "module": c.module });
        match local_case(&c) {
            Ok(v) => {
                let ok = v["passed"] == json!(true);
                items.push((v, ok));
            }
            Err(e) => items.push(failed(label, e)),
        }
    }
    if let Some(r) = &s.random {
        let mut euler_ok = 0u64;
        let mut perfect = 0u64;
        for i in 0..r.count {
            let m = acceptance::random_module(r.p, r.n, seed.wrapping_add(i));
            euler_ok += u64::from(cohomology_dims(&m).euler_characteristic() == 0);
            let ok = m.tate_dual().ok().and_then(|md| check_pairing(&m, &md).ok()).is_some_and(|x| x.perfect);
            perfect += u64::from(ok);
        }
        let ok = euler_ok == r.count && perfect == r.count;
        items.push((
            json!({ "random_family": { "p": r.p, "n": r.n, "count": r.count },
                    "euler_zero": euler_ok, "pairing_perfect": perfect, "passed": ok }),
            ok,
        ));
    }
    items
}

fn build_model(m: &ModelSpec) -> Result<GlobalModel, String> {
    Ok(match m {
        ModelSpec::Borel { condition, ramified } => fixtures::borel_model(*condition, *ramified),
        ModelSpec::LevelOne { condition } => fixtures::level_one_model(*condition),
        ModelSpec::CyclotomicBorel { condition } => fixtures::cyclotomic_borel_model(*condition),
        ModelSpec::Adjoint { p, generators } => fixtures::adjoint_model(*p, generators).map_err(|e| e.to_string())?,
    })
}

fn run_selmer(s: &SelmerScenario) -> Vec<Item> {
    let mut items = Vec::new();
    for spec in &s.models {
        let label = serde_json::to_value(spec).unwrap_or(Value::Null);
        let result = (|| -> Result<Item, String> {
            let model = build_model(spec)?;
            let sel = model.selmer().map_err(|e| e.to_string())?;
            let dual = model.dual_selmer().map_err(|e| e.to_string())?;
            let gw = model.gw_report().map_err(|e| e.to_string())?;
            let duality = model.duality_diagnostics().map_err(|e| e.to_string())?;
            // the balance is a diagnostic for finite models, not an assertion
            Ok((
                json!({
                    "model": label, "h1_length": sel.h1_length, "selmer_length": sel.length,
                    "selmer_exponents": sel.exponents, "dual_selmer_length": dual.length,
                    "greenberg_wiles": gw, "duality": duality, "passed": true,
                }),
                true,
            ))
        })();
        items.push(result.unwrap_or_else(|e| failed(label.clone(), e)));
    }
    if let Some(q) = &s.qnew {
        let label = serde_json::to_value(q).unwrap_or(Value::Null);
        items.push(match qnew_cotangent(q.p, &q.primes, q.n) {
            Ok(r) => (json!({ "qnew": label, "exponents": r.exponents, "contributions": r.contributions, "passed": true }), true),
            Err(e) => failed(label, e),
        });
    }
    items
}

fn plan_item(run: &PlannerRun) -> Value {
    let classes = |positions: &[usize]| -> Vec<u64> { positions.iter().map(|&i| run.state.primes[i].q_class).collect() };
    let q_sets: Vec<Value> = run
        .plan
        .transitions
        .iter()
        .filter_map(|t| match t.target {
            Target::Omit(i) => Some(json!({ "i": i, "primes": classes(&t.primes) })),
            Target::Full => None,
        })
        .collect();
    json!({
        "seed": run.config.seed,
        "n": run.config.n,
        "case": run.plan.case,
        "own_value": run.plan.own_value,
        "q": classes(&run.plan.q),
        "q_sets": q_sets,
        "level_d": run.report.level_d,
        "level_d_minus_one": run.report.level_d_minus_one,
        "measured_d": run.report.measured_d,
        "final_matrix": run.report.final_matrix,
        "qi_ramified_everywhere": run.report.qi_ramified_everywhere,
        "failures": run.report.failures().iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        "passed": run.report.passed,
    })
}

fn run_plan(s: &PlanScenario, seed: u64) -> Vec<Item> {
    (0..s.runs)
        .map(|i| {
            let mut cfg = PlannerConfig::new(s.p, s.n, seed.wrapping_add(i));
            cfg.level = s.level;
            cfg.force_case = s.force_case;
            if let Some(b) = s.retry_budget {
                cfg.retry_budget = b;
            }
            match run_planner(&cfg) {
                Ok(run) => (plan_item(&run), run.report.passed),
                Err(e) => failed(json!({ "seed": cfg.seed, "n": cfg.n }), e),
            }
        })
        .collect()
}

pub fn build_ring(spec: &RingSpec) -> Result<AugmentedRing, galdef_core::rings::AlgebraError> {
    match spec {
        RingSpec::FiberProduct { p, d, precision } => AugmentedRing::congruence_subring(
            *p,
            2,
            &[Congruence { i: 0, j: 1, exponent: *d }],
            0,
            *precision,
        ),
        RingSpec::ThreeCopies { p, precision } => {
            let c = |i, j| Congruence { i, j, exponent: 1 };
            AugmentedRing::congruence_subring(*p, 3, &[c(0, 1), c(0, 2), c(1, 2)], 0, *precision)
        }
        RingSpec::Congruence { p, copies, congruences, augmentation, precision } => {
            let cs: Vec<Congruence> =
                congruences.iter().map(|&(i, j, exponent)| Congruence { i, j, exponent }).collect();
            AugmentedRing::congruence_subring(*p, *copies, &cs, *augmentation, *precision)
        }
        RingSpec::Table { p, torsion, structure, unit, augmentation, depth_one, cohen_macaulay, gorenstein, precision } => {
            AugmentedRing::from_table(
                *p,
                torsion.iter().map(|&t| (t > 0).then_some(t)).collect(),
                structure.clone(),
                unit.clone(),
                augmentation.clone(),
                Witnesses { depth_one: *depth_one, cohen_macaulay: *cohen_macaulay, gorenstein: *gorenstein },
                *precision,
            )
        }
    }
}

fn ring_item(label: Value, ring: &AugmentedRing) -> Item {
    let result = (|| -> Result<Item, galdef_core::rings::AlgebraError> {
        let ci = ci_criterion(ring, None)?;
        let fit = fitting(ring)?;
        let ok = ci.length_gap.map_or(true, |g| g >= 0) && fit.contained_in_annihilator;
        Ok((
            json!({
                "ring": label,
                "rank": ring.rank(),
                "precision": ring.precision,
                "phi_length": ci.phi_length,
                "eta_length": ci.eta_length,
                "fitting_exponent": fit.pi_exponent,
                "fitting_in_annihilator": fit.contained_in_annihilator,
                "verdict": ci.verdict,
                "length_gap": ci.length_gap,
                "passed": ok,
            }),
            ok,
        ))
    })();
    result.unwrap_or_else(|e| failed(json!(null), e))
}

fn run_rings(s: &RingsScenario, seed: u64) -> Vec<Item> {
    let mut items = Vec::new();
    for spec in &s.rings {
        let label = serde_json::to_value(spec).unwrap_or(Value::Null);
        match build_ring(spec) {
            Ok(r) => items.push(ring_item(label, &r)),
            Err(e) => items.push(failed(label, e)),
        }
    }
    if let Some(f) = &s.family {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..f.count {
            match random_congruence_ring(f.p, &mut rng) {
                Ok(r) => {
                    let label = json!({ "family_index": i, "form": r.form });
                    items.push(ring_item(label, &r));
                }
                Err(e) => items.push(failed(json!({ "family_index": i }), e)),
            }
        }
    }
    items
}

/// Canonical JSON: sorted keys, two-space indentation, trailing newline.
pub fn to_canonical_json(report: &Report) -> Result<String, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_canonical_json(report)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub const SUITES: [&str; 4] = ["local-cohomology", "selmer", "plan", "rings"];

/// The acceptance criteria exercised by `galdef verify <suite>`.
pub fn verify_suite(suite: &str) -> Result<Vec<CriterionResult>, CliError> {
    Ok(match suite {
        "local-cohomology" => vec![
            acceptance::nice_table(),
            acceptance::character_table(),
            acceptance::euler_characteristic(),
            acceptance::duality(),
            acceptance::lemma_w(),
            acceptance::normal_form(),
        ],
        "selmer" => vec![acceptance::qnew_contributions()],
        "plan" => vec![acceptance::planner_end_to_end(), acceptance::negative_controls()],
        "rings" => vec![acceptance::rings()],
        "all" => acceptance::run_all(),
        other => {
            return Err(CliError::Validation(format!("unknown suite {other}; expected one of {SUITES:?} or all")))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_local_scenario() {
        let s = parse_scenario("suite = \"local-cohomology\"\np = 5\nn = 1\nq = 2\nmodule = \"sl2-nice\"\n").unwrap();
        let r = run(&s, 0, false).unwrap();
        assert!(r.passed);
        assert_eq!(r.results[0]["h1"], json!(2));
        assert_eq!(r.results[0]["nq_length"], json!(1));
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_scenario("suite = \"plan\"\nn = 1\nbogus = 3\n").unwrap_err();
        assert!(matches!(&e, CliError::Parse(m) if m.contains("bogus")), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn zero_rank_plan_rejected() {
        let e = parse_scenario("suite = \"plan\"\nn = 0\n").unwrap_err();
        assert!(matches!(e, CliError::Validation(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn seed_precedence() {
        let s = parse_scenario("suite = \"plan\"\nn = 1\nseed = 7\n").unwrap();
        assert_eq!(resolve_seed(Some(3), &s, Some("9")).unwrap(), 3);
        assert_eq!(resolve_seed(None, &s, Some("9")).unwrap(), 7);
        let s = parse_scenario("suite = \"plan\"\nn = 1\n").unwrap();
        assert_eq!(resolve_seed(None, &s, Some("9")).unwrap(), 9);
        assert_eq!(resolve_seed(None, &s, None).unwrap(), 0);
        assert!(resolve_seed(None, &s, Some("x")).is_err());
    }

    #[test]
    fn plan_report_is_canonical_and_deterministic() {
        let s = parse_scenario("suite = \"plan\"\nn = 2\nruns = 3\nretry_budget = 4096\n").unwrap();
        let a = to_canonical_json(&run(&s, 11, false).unwrap()).unwrap();
        let b = to_canonical_json(&run(&s, 11, false).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("timings_ms"));
        let v: Value = serde_json::from_str(&a).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn selmer_and_rings_scenarios() {
        let s = parse_scenario(
            "suite = \"selmer\"\n[[models]]\nmodel = \"level-one\"\ncondition = \"nq\"\n[qnew]\np = 5\nn = 2\nprimes = [[2, 1], [3, 2]]\n",
        )
        .unwrap();
        let r = run(&s, 0, false).unwrap();
        assert_eq!(r.results[1]["exponents"], json!([1, 2]));
        let s = parse_scenario(
            "suite = \"rings\"\n[[rings]]\nkind = \"fiber-product\"\np = 5\nd = 2\n[[rings]]\nkind = \"three-copies\"\np = 5\n",
        )
        .unwrap();
        let r = run(&s, 0, false).unwrap();
        assert!(r.passed);
        assert_eq!(r.results[0]["phi_length"], json!(2));
        assert_eq!(r.results[1]["verdict"], json!("not_complete_intersection"));
    }
}
