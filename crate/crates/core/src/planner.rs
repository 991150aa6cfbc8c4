//! Auxiliary-prime lifting planner driven by a simulated Chebotarev oracle.
//!
//! Global classes are tracked through their local data at nice primes only.
//! The local H¹ at a nice prime is two dimensional, the ramified line N_q plus
//! the unramified line, so a restriction is a pair (c, u): c is the N_q
//! coefficient and u the Frobenius value. Positions are 0-based (position j
//! holds q_{j+1}); class indices are 1-based (index k names f_k).

use crate::gl2::{exp_adjust, top_level_twist, AdjointVector, AdjustmentClass, Flavor, Gl2Error, GroupElem};
use crate::linalg::{image_length, ZModMatrix};
use crate::tame::{is_special, nice_check, ramification_level, RamificationLevel, TameError, TameGroup, TameRep};
use crate::zp::{is_prime, Zpn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_RETRY_BUDGET: usize = 64;
pub const MAX_SELMER_RANK: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("Selmer rank must be positive")]
    EmptySelmer,
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
    #[error("inconsistent constraints: {0}")]
    InconsistentConstraints(String),
    #[error("retry budget of {budget} draws exhausted while choosing {stage}")]
    RetryBudgetExhausted { stage: String, budget: usize },
    #[error("selection is {rows}x{cols}, not square")]
    NonSquareSelection { rows: usize, cols: usize },
    #[error("rule violation: {0}")]
    RuleViolation(String),
    #[error(transparent)]
    Tame(#[from] TameError),
    #[error(transparent)]
    Gl2(#[from] Gl2Error),
}

pub fn f_name(k: usize) -> String {
    format!("f{k}")
}

pub fn phi_name(k: usize) -> String {
    format!("phi{k}")
}

pub fn zeta_name(j: usize) -> String {
    format!("zeta{j}")
}

pub const ZETA: &str = "zeta";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Case1,
    Case2,
    Case3,
}

/// Frobenius torus pattern of a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorusPattern {
    /// diag(q, 1): special at the working level.
    Special,
    /// diag(q, 1) times the top-level twist: special one level down only.
    TwistedTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Value(u64),
    NonZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DrawRequest {
    pub tracked: Vec<String>,
    pub fixed: BTreeMap<String, Constraint>,
    pub torus: Option<TorusPattern>,
    /// Also draw the data of the class ramified at the new prime.
    pub with_class: bool,
    pub own_override: Option<u64>,
}

/// Data of the class f^{(q)} attached to a fresh prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalClassData {
    /// f^{(q)}(Frob_q).
    pub own_value: u64,
    /// The constant γ_q with inv_q(f^{(q)} ∪ φ) = γ_q φ(Frob_q).
    pub pairing_scale: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRecord {
    pub id: u64,
    pub q_class: u64,
    pub level: u32,
    pub torus: TorusPattern,
    /// Specialness defect at the working level before any adjustment.
    pub defect: u64,
    /// Ramified coefficient at the working level before any adjustment.
    pub initial_ramification: u64,
    /// Frobenius values (l_α resp. g_α* components) of the tracked classes.
    pub evaluations: BTreeMap<String, u64>,
    pub class: Option<LocalClassData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    /// Fix f^{(q)}(Frob_q) on every draw that does not override it.
    pub force_own_value: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ChebotarevOracle {
    p: u64,
    level: u32,
    config: OracleConfig,
    rng: ChaCha8Rng,
    draws: u64,
}

impl ChebotarevOracle {
    pub fn new(p: u64, level: u32, config: OracleConfig) -> Result<Self, PlannerError> {
        check_field(p)?;
        if !(2..=8).contains(&level) {
            return Err(PlannerError::InvalidInput(format!("level {level} outside 2..=8")));
        }
        Zpn::new(p, level).map_err(|e| PlannerError::InvalidInput(e.to_string()))?;
        if let Some(v) = config.force_own_value {
            if v >= p {
                return Err(PlannerError::InvalidInput(format!("forced value {v} is not in F_{p}")));
            }
        }
        Ok(ChebotarevOracle { p, level, config, rng: ChaCha8Rng::seed_from_u64(config.seed), draws: 0 })
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn element(&mut self) -> u64 {
        self.rng.gen_range(0..self.p)
    }

    pub fn unit(&mut self) -> u64 {
        self.rng.gen_range(1..self.p)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    pub fn draw(&mut self, req: &DrawRequest) -> Result<PrimeRecord, PlannerError> {
        let p = self.p;
        for (i, name) in req.tracked.iter().enumerate() {
            if req.tracked[..i].contains(name) {
                return Err(PlannerError::InconsistentConstraints(format!("{name} tracked twice")));
            }
        }
        for (name, c) in &req.fixed {
            if !req.tracked.contains(name) {
                return Err(PlannerError::InconsistentConstraints(format!("{name} is not tracked")));
            }
            if let Constraint::Value(v) = c {
                if *v >= p {
                    return Err(PlannerError::InconsistentConstraints(format!("{name} = {v} is not in F_{p}")));
                }
            }
        }
        if let Some(v) = req.own_override {
            if !req.with_class || v >= p {
                return Err(PlannerError::InconsistentConstraints(format!("own value {v} cannot be imposed")));
            }
        }
        let torus = req.torus.unwrap_or(TorusPattern::Special);
        let ring = Zpn::new(p, self.level).expect("checked in new");
        let low = self.rng.gen_range(2..=p - 2);
        let high = self.rng.gen_range(0..ring.modulus() / p);
        let q_class = low + p * high;
        let mut evaluations = BTreeMap::new();
        for name in &req.tracked {
            let v = match req.fixed.get(name) {
                Some(Constraint::Value(v)) => *v,
                Some(Constraint::NonZero) => self.unit(),
                None => self.element(),
            };
            evaluations.insert(name.clone(), v);
        }
        let class = if req.with_class {
            let drawn = self.element();
            let own_value = req.own_override.or(self.config.force_own_value).unwrap_or(drawn);
            Some(LocalClassData { own_value, pairing_scale: self.unit() })
        } else {
            None
        };
        let k = ring.residue_field();
        nice_check(p, q_class as i64, &GroupElem::diag(k, low, 1)?)?;
        let id = self.draws;
        self.draws += 1;
        Ok(PrimeRecord {
            id,
            q_class,
            level: self.level,
            torus,
            defect: match torus {
                TorusPattern::Special => 0,
                TorusPattern::TwistedTop => 1,
            },
            initial_ramification: 0,
            evaluations,
            class,
        })
    }
}

fn check_field(p: u64) -> Result<(), PlannerError> {
    if p < 5 || !is_prime(p) {
        return Err(PlannerError::InvalidInput(format!("p = {p} must be a prime at least 5")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub p: u64,
    pub rows: Vec<String>,
    /// Prime positions.
    pub columns: Vec<usize>,
    pub entries: Vec<Vec<Option<u64>>>,
}

impl EvaluationTable {
    pub fn get(&self, row: &str, col: usize) -> Option<u64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.columns.iter().position(|&c| c == col)?;
        self.entries[i][j]
    }
}

/// Invertibility over k of the evaluation matrix on the selected classes and primes.
pub fn auxiliary_check(table: &EvaluationTable, primes: &[usize], cocycles: &[String]) -> Result<bool, PlannerError> {
    if primes.len() != cocycles.len() {
        return Err(PlannerError::NonSquareSelection { rows: cocycles.len(), cols: primes.len() });
    }
    let mut rows = Vec::with_capacity(cocycles.len());
    for name in cocycles {
        let mut row = Vec::with_capacity(primes.len());
        for &q in primes {
            let v = table
                .get(name, q)
                .ok_or_else(|| PlannerError::RuleViolation(format!("no value of {name} at position {q}")))?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(invertible(table.p, &rows))
}

fn invertible(p: u64, rows: &[Vec<u64>]) -> bool {
    let k = Zpn::new(p, 1).expect("validated field");
    let size = rows.len();
    if size == 0 {
        return true;
    }
    ZModMatrix::from_row_vectors(k, size, rows).is_invertible()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeClass {
    pub index: usize,
    pub position: usize,
    pub own_value: u64,
    pub pairing_scale: u64,
    /// Frobenius values at the fresh primes chosen before this one, fixed by reciprocity.
    pub earlier: Vec<u64>,
}

/// φ_i = a ζ + Σ_j b_j ζ_j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCoefficients {
    pub a: u64,
    pub b: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerState {
    pub p: u64,
    pub n: usize,
    pub level: u32,
    pub zeta_count: usize,
    pub s_places: usize,
    pub primes: Vec<PrimeRecord>,
    /// Ramified coefficient of g_{q_i} for the base primes.
    pub slopes: Vec<u64>,
    pub dual: Vec<DualCoefficients>,
    pub bridges: Vec<BridgeClass>,
    pub gamma0: u64,
}

impl PlannerState {
    pub fn field(&self) -> Zpn {
        Zpn::new(self.p, 1).expect("validated field")
    }

    pub fn class_count(&self) -> usize {
        self.n + self.bridges.len()
    }

    pub fn slope(&self, pos: usize) -> u64 {
        if pos < self.n {
            self.slopes[pos]
        } else {
            1
        }
    }

    /// (c, u) of f_class restricted to the prime at `pos`.
    pub fn restriction(&self, class: usize, pos: usize) -> Result<(u64, u64), PlannerError> {
        let record = self
            .primes
            .get(pos)
            .ok_or_else(|| PlannerError::RuleViolation(format!("no prime at position {pos}")))?;
        let missing = || PlannerError::RuleViolation(format!("no restriction of f{class} at position {pos}"));
        if class == 0 {
            return Err(missing());
        }
        if class <= self.n {
            let u = *record.evaluations.get(&f_name(class)).ok_or_else(missing)?;
            return Ok((0, u));
        }
        let bridge = self.bridges.get(class - self.n - 1).ok_or_else(missing)?;
        if pos < self.n {
            Ok((1, 0))
        } else if pos == bridge.position {
            Ok((1, bridge.own_value))
        } else if pos < bridge.position {
            Ok((0, *bridge.earlier.get(pos - self.n).ok_or_else(missing)?))
        } else {
            Ok((0, *record.evaluations.get(&f_name(class)).ok_or_else(missing)?))
        }
    }

    /// (c, u) of a k-linear combination of classes.
    pub fn combined_restriction(&self, step: &AdjustmentStep, pos: usize) -> Result<(u64, u64), PlannerError> {
        let k = self.field();
        let (mut c, mut u) = (0, 0);
        for t in &step.terms {
            let (tc, tu) = self.restriction(t.class, pos)?;
            c = k.add(c, k.mul(t.coefficient, tc));
            u = k.add(u, k.mul(t.coefficient, tu));
        }
        Ok((c, u))
    }

    pub fn evaluation_table(&self) -> EvaluationTable {
        let mut rows: Vec<String> = (1..=self.class_count()).map(f_name).collect();
        rows.extend((1..=self.class_count()).map(phi_name));
        let columns: Vec<usize> = (0..self.primes.len()).collect();
        let entries = rows
            .iter()
            .enumerate()
            .map(|(ri, name)| {
                columns
                    .iter()
                    .map(|&pos| {
                        if ri < self.class_count() {
                            self.restriction(ri + 1, pos).ok().map(|(_, u)| u)
                        } else {
                            self.primes[pos].evaluations.get(name).copied()
                        }
                    })
                    .collect()
            })
            .collect();
        EvaluationTable { p: self.p, rows, columns, entries }
    }

    /// Dimension of the Selmer group for S ∪ T inside the span of all tracked classes:
    /// classes in N_q at q ∈ T and unramified at the other tracked primes.
    pub fn selmer_kernel_dim(&self, set: &[usize]) -> Result<usize, PlannerError> {
        let classes = self.class_count();
        let mut rows = Vec::with_capacity(self.primes.len());
        for pos in 0..self.primes.len() {
            let mut row = Vec::with_capacity(classes);
            for class in 1..=classes {
                let (c, u) = self.restriction(class, pos)?;
                row.push(if set.contains(&pos) { u } else { c });
            }
            rows.push(row);
        }
        let m = ZModMatrix::from_row_vectors(self.field(), classes, &rows);
        Ok(classes - image_length(&m) as usize)
    }

    /// Σ_v inv_v(g_v ∪ φ_i) over the base primes; g_v = 0 on S.
    pub fn line_pairing(&self, i: usize) -> Result<u64, PlannerError> {
        let k = self.field();
        let mut total = 0;
        for j in 0..self.n {
            let v = *self.primes[j]
                .evaluations
                .get(&phi_name(i))
                .ok_or_else(|| PlannerError::RuleViolation(format!("phi{i} missing at position {j}")))?;
            total = k.add(total, k.mul(self.slopes[j], v));
        }
        Ok(total)
    }

    fn tracked_for_fresh(&self) -> Vec<String> {
        let mut tracked: Vec<String> = (1..=self.n).map(f_name).collect();
        tracked.extend((1..=self.zeta_count).map(zeta_name));
        tracked.push(ZETA.to_string());
        for b in &self.bridges {
            tracked.push(f_name(b.index));
            tracked.push(phi_name(b.index));
        }
        tracked
    }
}

/// Choose Q̃ with identity evaluation matrices for the Selmer and dual Selmer bases.
pub fn build_auxiliary_base(
    n: usize,
    oracle: &mut ChebotarevOracle,
) -> Result<(PlannerState, EvaluationTable), PlannerError> {
    if n == 0 {
        return Err(PlannerError::EmptySelmer);
    }
    if n > MAX_SELMER_RANK {
        return Err(PlannerError::InvalidInput(format!("Selmer rank {n} exceeds {MAX_SELMER_RANK}")));
    }
    let p = oracle.p;
    let k = Zpn::new(p, 1).expect("validated field");
    let gamma0 = oracle.unit();
    let mut tracked: Vec<String> = (1..=n).map(f_name).collect();
    tracked.extend((1..=n).map(phi_name));
    let mut primes = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for j in 1..=n {
        let mut fixed = BTreeMap::new();
        for i in 1..=n {
            let v = u64::from(i == j);
            fixed.insert(f_name(i), Constraint::Value(v));
            fixed.insert(phi_name(i), Constraint::Value(v));
        }
        let req = DrawRequest { tracked: tracked.clone(), fixed, torus: Some(TorusPattern::Special), ..Default::default() };
        let mut record = oracle.draw(&req)?;
        record.initial_ramification = if oracle.coin() { 0 } else { oracle.unit() };
        // g_q removes the existing ramification, or is any ramified class
        slopes.push(if record.initial_ramification != 0 { k.neg(record.initial_ramification) } else { 1 });
        primes.push(record);
    }
    let zeta_count = n + 1;
    let mut state = PlannerState {
        p,
        n,
        level: oracle.level,
        zeta_count,
        s_places: 2,
        primes,
        slopes,
        dual: Vec::new(),
        bridges: Vec::new(),
        gamma0,
    };
    for i in 1..=n {
        let a = state.line_pairing(i)?;
        let b = (0..zeta_count).map(|_| oracle.element()).collect();
        state.dual.push(DualCoefficients { a, b });
    }
    let table = state.evaluation_table();
    Ok((state, table))
}

/// Extra requirements on a fresh prime beyond the Chebotarev conditions every fresh prime satisfies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BridgeRequirement {
    pub own_value: Option<u64>,
    pub own_override: Option<u64>,
    pub pairing_scale: Option<u64>,
    pub extra: BTreeMap<String, Constraint>,
}

/// Draw a fresh prime q and register f^{(q)}, whose restriction at every base prime is g_q.
pub fn seek_bridge_prime(
    state: &mut PlannerState,
    oracle: &mut ChebotarevOracle,
    budget: usize,
    requirement: &BridgeRequirement,
    stage: &str,
) -> Result<usize, PlannerError> {
    // the line (g_v) must not come from a global class unramified at the base primes
    let k = state.field();
    for i in 1..=state.n {
        for j in 0..state.n {
            if state.restriction(i, j)?.0 != 0 {
                return Err(PlannerError::RuleViolation(format!("f{i} is ramified at position {j}")));
            }
        }
    }
    let mut fixed = BTreeMap::new();
    for i in 1..=state.n {
        fixed.insert(f_name(i), Constraint::Value(1));
    }
    for j in 1..=state.zeta_count {
        fixed.insert(zeta_name(j), Constraint::Value(0));
    }
    fixed.insert(ZETA.to_string(), Constraint::NonZero);
    for (name, c) in &requirement.extra {
        if let Some(old) = fixed.insert(name.clone(), *c) {
            if old != *c {
                return Err(PlannerError::InconsistentConstraints(format!("{name} constrained twice")));
            }
        }
    }
    let req = DrawRequest {
        tracked: state.tracked_for_fresh(),
        fixed,
        torus: Some(TorusPattern::TwistedTop),
        with_class: true,
        own_override: requirement.own_override,
    };
    for _ in 0..budget {
        let mut record = oracle.draw(&req)?;
        let class = record.class.expect("requested");
        if requirement.own_value.is_some_and(|v| v != class.own_value)
            || requirement.pairing_scale.is_some_and(|g| g != class.pairing_scale)
        {
            continue;
        }
        for (i, dual) in state.dual.iter().enumerate() {
            let mut v = k.mul(dual.a, record.evaluations[ZETA]);
            for (j, b) in dual.b.iter().enumerate() {
                v = k.add(v, k.mul(*b, record.evaluations[&zeta_name(j + 1)]));
            }
            if v == 0 {
                return Err(PlannerError::RuleViolation(format!("phi{} vanishes at a fresh prime", i + 1)));
            }
            record.evaluations.insert(phi_name(i + 1), v);
        }
        let earlier = state
            .bridges
            .iter()
            .map(|b| k.neg(k.mul(class.pairing_scale, record.evaluations[&phi_name(b.index)])))
            .collect();
        let position = state.primes.len();
        let index = state.class_count() + 1;
        state.primes.push(record);
        state.bridges.push(BridgeClass {
            index,
            position,
            own_value: class.own_value,
            pairing_scale: class.pairing_scale,
            earlier,
        });
        return Ok(position);
    }
    Err(PlannerError::RetryBudgetExhausted { stage: stage.to_string(), budget })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub class: usize,
    pub coefficient: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustmentStep {
    pub terms: Vec<Term>,
}

impl AdjustmentStep {
    fn of(terms: &[(usize, u64)]) -> Self {
        AdjustmentStep { terms: terms.iter().map(|&(class, coefficient)| Term { class, coefficient }).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Full,
    /// The set Q_i, 1-based.
    Omit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub target: Target,
    pub primes: Vec<usize>,
    pub steps: Vec<AdjustmentStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftPlan {
    pub case: CaseTag,
    pub own_value: u64,
    pub level: u32,
    pub q: Vec<usize>,
    pub transitions: Vec<Transition>,
}

impl LiftPlan {
    pub fn transition(&self, target: Target) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.target == target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanOptions {
    pub force_case: Option<CaseTag>,
}

/// Choose the fresh primes for the case of f^{(q)}(Frob_q) and write down every adjustment.
pub fn classify_and_plan(
    state: &mut PlannerState,
    oracle: &mut ChebotarevOracle,
    budget: usize,
    options: PlanOptions,
) -> Result<LiftPlan, PlannerError> {
    let k = state.field();
    let n = state.n;
    let own_override = options.force_case.map(|c| match c {
        CaseTag::Case1 => 2,
        CaseTag::Case2 => 1,
        CaseTag::Case3 => 0,
    });
    let first = seek_bridge_prime(
        state,
        oracle,
        budget,
        &BridgeRequirement { own_override, ..Default::default() },
        "the first fresh prime",
    )?;
    let a = state.bridges[0].own_value;
    let case = match a {
        0 => CaseTag::Case3,
        1 => CaseTag::Case2,
        _ => CaseTag::Case1,
    };
    let (b1, b2, b3) = (n + 1, n + 2, n + 3);
    match case {
        CaseTag::Case1 => {}
        CaseTag::Case2 => {
            let zero = |i: usize| [(f_name(i), Constraint::Value(0)), (phi_name(i), Constraint::Value(0))];
            let req = BridgeRequirement { own_value: Some(1), extra: zero(b1).into_iter().collect(), ..Default::default() };
            seek_bridge_prime(state, oracle, budget, &req, "the second fresh prime")?;
            let req = BridgeRequirement {
                own_value: Some(1),
                extra: zero(b1).into_iter().chain(zero(b2)).collect(),
                ..Default::default()
            };
            seek_bridge_prime(state, oracle, budget, &req, "the third fresh prime")?;
        }
        CaseTag::Case3 => {
            let g0 = state.gamma0;
            if state.bridges[0].pairing_scale != g0 {
                state.primes.truncate(first);
                state.bridges.clear();
                let req = BridgeRequirement {
                    own_value: Some(0),
                    own_override,
                    pairing_scale: Some(g0),
                    ..Default::default()
                };
                seek_bridge_prime(state, oracle, budget, &req, "the first fresh prime in the stabilized subset")?;
            }
            let w = k.neg(k.inv(g0).expect("unit"));
            let pair = |i: usize| [(f_name(i), Constraint::Value(1)), (phi_name(i), Constraint::Value(w))];
            let req = BridgeRequirement {
                own_value: Some(0),
                pairing_scale: Some(g0),
                extra: pair(b1).into_iter().collect(),
                ..Default::default()
            };
            seek_bridge_prime(state, oracle, budget, &req, "the second fresh prime")?;
            let req = BridgeRequirement {
                own_value: Some(0),
                pairing_scale: Some(g0),
                extra: pair(b1).into_iter().chain(pair(b2)).collect(),
                ..Default::default()
            };
            seek_bridge_prime(state, oracle, budget, &req, "the third fresh prime")?;
        }
    }
    let m = state.primes.len();
    let all: Vec<usize> = (0..m).collect();
    let without = |skip: &[usize]| all.iter().copied().filter(|x| !skip.contains(x)).collect::<Vec<_>>();
    let base: Vec<usize> = (0..n).collect();
    let half = k.inv(2).expect("p odd");
    let initial = Ledger::initial(state);
    let mut transitions = Vec::with_capacity(m + 1);

    let full = match case {
        CaseTag::Case1 => AdjustmentStep::of(&[(b1, k.inv(a).expect("a is nonzero"))]),
        CaseTag::Case2 => AdjustmentStep::of(&[(b1, 1), (b2, 1), (b3, 1)]),
        CaseTag::Case3 => AdjustmentStep::of(&[(b1, half), (b2, half), (b3, half)]),
    };
    transitions.push(Transition { target: Target::Full, primes: all.clone(), steps: vec![full] });

    for i in 1..=n {
        let pos = i - 1;
        let ramified = initial.initial[pos].ramified_coefficient != 0;
        let (primes, mut steps) = match (case, ramified) {
            (CaseTag::Case1, true) => (without(&[pos]), vec![AdjustmentStep::of(&[(b1, 1)])]),
            (CaseTag::Case1, false) => (without(&[pos]), vec![]),
            (CaseTag::Case2, true) => {
                let step = AdjustmentStep::of(&[(i, half), (b1, half), (b2, half)]);
                transitions.push(Transition { target: Target::Omit(i), primes: without(&[pos, b3 - 1]), steps: vec![step] });
                continue;
            }
            (CaseTag::Case2, false) | (CaseTag::Case3, false) => (without(&[pos, b2 - 1, b3 - 1]), vec![]),
            (CaseTag::Case3, true) => (without(&[pos, b2 - 1, b3 - 1]), vec![AdjustmentStep::of(&[(b1, 1)])]),
        };
        // then the multiple of f_i that makes the state special at q_{n+1}
        let mut states = initial.initial.clone();
        for s in &steps {
            apply_step(state, &mut states, s)?;
        }
        let delta = states[n].defect;
        let (_, u) = state.restriction(i, n)?;
        let t = k.mul(delta, k.inv(u).ok_or_else(|| PlannerError::RuleViolation(format!("f{i} vanishes at the first fresh prime")))?);
        if t == 0 {
            return Err(PlannerError::RuleViolation(format!("no nonzero multiple of f{i} is needed")));
        }
        steps.push(AdjustmentStep::of(&[(i, t)]));
        transitions.push(Transition { target: Target::Omit(i), primes, steps });
    }
    transitions.push(Transition { target: Target::Omit(b1), primes: base.clone(), steps: vec![] });
    if case != CaseTag::Case1 {
        transitions.push(Transition {
            target: Target::Omit(b2),
            primes: without(&[b2 - 1]),
            steps: vec![AdjustmentStep::of(&[(b1, 1), (b3, 1)])],
        });
        transitions.push(Transition {
            target: Target::Omit(b3),
            primes: without(&[b3 - 1]),
            steps: vec![AdjustmentStep::of(&[(b1, 1), (b2, 1)])],
        });
    }
    Ok(LiftPlan { case, own_value: a, level: state.level, q: all, transitions })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalState {
    pub ramified_coefficient: u64,
    pub defect: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceStatus {
    pub ramified: bool,
    /// Largest level at which the state is unramified, when it is ramified at all.
    pub ramification_level: Option<u32>,
    pub defect: u64,
    pub special: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub target: Target,
    pub primes: Vec<usize>,
    pub history: Vec<AdjustmentStep>,
    pub states: Vec<LocalState>,
    pub s_places_in_condition: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub p: u64,
    pub level: u32,
    pub initial: Vec<LocalState>,
    pub branches: Vec<Branch>,
}

fn apply_step(state: &PlannerState, states: &mut [LocalState], step: &AdjustmentStep) -> Result<(), PlannerError> {
    let k = state.field();
    for (pos, s) in states.iter_mut().enumerate() {
        let (c, u) = state.combined_restriction(step, pos)?;
        s.ramified_coefficient = k.add(s.ramified_coefficient, k.mul(c, state.slope(pos)));
        s.defect = k.sub(s.defect, u);
    }
    Ok(())
}

impl Ledger {
    pub fn initial(state: &PlannerState) -> Ledger {
        let initial = state
            .primes
            .iter()
            .map(|r| LocalState { ramified_coefficient: r.initial_ramification, defect: r.defect })
            .collect();
        Ledger { p: state.p, level: state.level, initial, branches: Vec::new() }
    }

    pub fn branch(&self, target: Target) -> Option<&Branch> {
        self.branches.iter().find(|b| b.target == target)
    }

    /// Status of a prime in a branch; below the working level every state is the unramified special one.
    pub fn status(&self, branch: &Branch, pos: usize, level: u32) -> Option<PlaceStatus> {
        if level < self.level {
            return Some(PlaceStatus { ramified: false, ramification_level: None, defect: 0, special: true });
        }
        if level > self.level {
            return None;
        }
        let s = branch.states.get(pos)?;
        let ramified = s.ramified_coefficient != 0;
        Some(PlaceStatus {
            ramified,
            ramification_level: ramified.then_some(self.level - 1),
            defect: s.defect,
            special: s.defect == 0,
        })
    }

    /// Rebuild every branch from the initial states and the recorded histories.
    pub fn replay(&self, state: &PlannerState) -> Result<Ledger, PlannerError> {
        let mut out = Ledger { branches: Vec::new(), ..self.clone() };
        for b in &self.branches {
            out.branches.push(build_branch(state, &self.initial, b.target, &b.primes, &b.history)?);
        }
        Ok(out)
    }
}

fn build_branch(
    state: &PlannerState,
    initial: &[LocalState],
    target: Target,
    primes: &[usize],
    history: &[AdjustmentStep],
) -> Result<Branch, PlannerError> {
    let mut states = initial.to_vec();
    for step in history {
        apply_step(state, &mut states, step)?;
    }
    // every tracked class lies in N_v at the places of S: Selmer classes by definition, bridge classes since g_v = 0
    let in_condition = history.iter().all(|s| s.terms.iter().all(|t| t.class >= 1 && t.class <= state.class_count()));
    Ok(Branch {
        target,
        primes: primes.to_vec(),
        history: history.to_vec(),
        states,
        s_places_in_condition: vec![in_condition; state.s_places],
    })
}

pub fn apply_plan(ledger: Ledger, state: &PlannerState, plan: &LiftPlan) -> Result<Ledger, PlannerError> {
    if ledger.initial.len() != state.primes.len() {
        return Err(PlannerError::RuleViolation("ledger and state track different primes".into()));
    }
    let mut out = Ledger { branches: Vec::with_capacity(plan.transitions.len()), ..ledger };
    for t in &plan.transitions {
        out.branches.push(build_branch(state, &out.initial, t.target, &t.primes, &t.steps)?);
    }
    Ok(out)
}

/// The local representation at `pos` in a branch, at the working level.
pub fn materialize(state: &PlannerState, ledger: &Ledger, branch: &Branch, pos: usize) -> Result<TameRep, PlannerError> {
    let record = &state.primes[pos];
    let d = state.level;
    let group = TameGroup::new(state.p, d, record.q_class as i64)?;
    let ring = group.ring();
    let k = ring.residue_field();
    let mut sigma = GroupElem::diag(ring, group.q(), 1)?;
    if record.torus == TorusPattern::TwistedTop {
        sigma = sigma.mul(&top_level_twist(ring));
    }
    let r0 = ledger.initial[pos].ramified_coefficient;
    let mut tau = GroupElem::new(
        ZModMatrix::from_row_vectors(ring, 2, &[vec![1, ring.mul(ring.p_pow(d - 1), r0)], vec![0, 1]]),
        Flavor::GL2,
    )?;
    for step in &branch.history {
        let (c, u) = state.combined_restriction(step, pos)?;
        let f = AdjustmentClass::new(
            AdjointVector::from_coords(k, &[u, 0, 0]),
            AdjointVector::from_coords(k, &[0, k.mul(c, state.slope(pos)), 0]),
        );
        (sigma, tau) = exp_adjust(&sigma, &tau, group.q(), &f, d)?;
    }
    Ok(TameRep::new(group, sigma, tau)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub case: CaseTag,
    pub n: usize,
    pub q_size: usize,
    /// d in the convention "ramified mod p^d, unramified mod p^{d-1}".
    pub level_d: u32,
    /// The same level in the convention that counts the last unramified level.
    pub level_d_minus_one: u32,
    pub measured_d: Option<u32>,
    pub final_matrix: Option<Vec<Vec<u64>>>,
    pub checks: Vec<CheckResult>,
    /// Whether the Q_i-state is ramified at every prime of Q_i; reported only.
    pub qi_ramified_everywhere: Vec<bool>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

struct Checks(Vec<CheckResult>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(CheckResult { name: name.into(), passed, detail: detail.into() });
    }
}

fn bridge_matrix(state: &PlannerState) -> Result<Vec<Vec<u64>>, PlannerError> {
    let n = state.n;
    let s = state.bridges.len();
    (0..s)
        .map(|i| (0..s).map(|j| state.restriction(n + 1 + i, n + j).map(|(_, u)| u)).collect())
        .collect()
}

/// The matrix criteria of the proof, checked on the evaluation table.
fn matrix_route(state: &PlannerState, plan: &LiftPlan, target: Target) -> Result<bool, PlannerError> {
    let n = state.n;
    let table = state.evaluation_table();
    let f_rows: Vec<String> = (1..=n).map(f_name).collect();
    let phi_rows: Vec<String> = (1..=n).map(phi_name).collect();
    let both = |cols: &[usize]| -> Result<bool, PlannerError> {
        Ok(auxiliary_check(&table, cols, &f_rows)? && auxiliary_check(&table, cols, &phi_rows)?)
    };
    let base: Vec<usize> = (0..n).collect();
    let deleted = |i: usize| -> Vec<usize> { (0..=n).filter(|&c| c != i - 1).collect() };
    let m = bridge_matrix(state)?;
    let minor = |keep: &[usize]| -> bool {
        let rows: Vec<Vec<u64>> = keep.iter().map(|&i| keep.iter().map(|&j| m[i][j]).collect()).collect();
        invertible(state.p, &rows)
    };
    Ok(match (plan.case, target) {
        (CaseTag::Case1, Target::Full) => both(&base)? && plan.own_value != 0,
        (_, Target::Full) => both(&base)? && minor(&[0, 1, 2]),
        (_, Target::Omit(i)) if i == n + 1 => both(&base)?,
        (_, Target::Omit(i)) if i == n + 2 => both(&base)? && minor(&[0, 2]),
        (_, Target::Omit(i)) if i == n + 3 => both(&base)? && minor(&[0, 1]),
        (CaseTag::Case2, Target::Omit(i)) if plan.transition(target).is_some_and(|t| t.primes.len() == n + 1) => {
            // basis f_i, f_{n+1} - f_{n+2} of the kernel, evaluated at q_{n+1}, q_{n+2}
            let k = state.field();
            let fi: Vec<u64> = (0..2).map(|j| state.restriction(i, n + j).map(|x| x.1)).collect::<Result<_, _>>()?;
            let g: Vec<u64> = (0..2).map(|j| k.sub(m[0][j], m[1][j])).collect();
            both(&deleted(i))? && invertible(state.p, &[fi, g])
        }
        (_, Target::Omit(i)) => both(&deleted(i))?,
    })
}

pub fn verify_plan(state: &PlannerState, plan: &LiftPlan, ledger: &Ledger) -> VerificationReport {
    let n = state.n;
    let d = state.level;
    let mut checks = Checks(Vec::new());
    let m = plan.q.len();
    let expected = match plan.case {
        CaseTag::Case1 => n + 1,
        _ => n + 3,
    };
    checks.add("q_size", m == expected && m == state.primes.len(), format!("|Q| = {m}, expected {expected}"));
    checks.add("q_order", plan.q == (0..m).collect::<Vec<_>>(), "Q is q_1, ..., q_m in order");
    let targets_ok = plan.transitions.len() == m + 1
        && plan.transition(Target::Full).is_some()
        && (1..=m).all(|i| plan.transition(Target::Omit(i)).is_some());
    checks.add("transitions_present", targets_ok, "one transition for Q and one for each Q_i");

    match ledger.replay(state) {
        Ok(r) => checks.add("ledger_replay", &r == ledger, "replaying the history reproduces the ledger"),
        Err(e) => checks.add("ledger_replay", false, e.to_string()),
    }
    let branches_match = plan
        .transitions
        .iter()
        .all(|t| ledger.branch(t.target).is_some_and(|b| b.history == t.steps && b.primes == t.primes));
    checks.add("ledger_matches_plan", branches_match, "every transition was applied");

    let final_matrix = match bridge_matrix(state) {
        Ok(mat) => Some(mat),
        Err(e) => {
            checks.add("bridge_matrix", false, e.to_string());
            None
        }
    };
    if let Some(mat) = &final_matrix {
        let want: Vec<Vec<u64>> = match plan.case {
            CaseTag::Case1 => vec![vec![plan.own_value]],
            CaseTag::Case2 => (0..3).map(|i| (0..3).map(|j| u64::from(i == j)).collect()).collect(),
            CaseTag::Case3 => (0..3).map(|i| (0..3).map(|j| u64::from(i != j)).collect()).collect(),
        };
        checks.add("final_matrix", *mat == want, format!("{mat:?}"));
    }

    let conflict_ok = state.dual.iter().all(|c| c.a != 0)
        && state.primes[n..].iter().all(|r| (1..=n).all(|i| r.evaluations.get(&phi_name(i)).is_some_and(|&v| v != 0)));
    checks.add("dual_classes_nonvanishing", conflict_ok, "a_i != 0 and phi_i(Frob_q) != 0 at fresh primes");

    let mut qi_ramified = Vec::new();
    let mut measured = None;
    for t in &plan.transitions {
        let label = match t.target {
            Target::Full => "Q".to_string(),
            Target::Omit(i) => format!("Q{i}"),
        };
        let Some(branch) = ledger.branch(t.target) else {
            checks.add(format!("{label}_branch"), false, "missing from the ledger");
            continue;
        };
        match state.selmer_kernel_dim(&t.primes) {
            Ok(dim) => checks.add(format!("{label}_auxiliary"), dim == 0, format!("Selmer dimension {dim}")),
            Err(e) => checks.add(format!("{label}_auxiliary"), false, e.to_string()),
        }
        match matrix_route(state, plan, t.target) {
            Ok(ok) => checks.add(format!("{label}_matrix_criterion"), ok, "evaluation matrices invertible"),
            Err(e) => checks.add(format!("{label}_matrix_criterion"), false, e.to_string()),
        }
        let at = |pos: usize, level: u32| ledger.status(branch, pos, level);
        let special_on = t.primes.iter().all(|&q| at(q, d).is_some_and(|s| s.special));
        checks.add(format!("{label}_special_on_set"), special_on, "special at every prime of the set");
        let off: Vec<usize> = (0..m).filter(|q| !t.primes.contains(q)).collect();
        let unram_off = off.iter().all(|&q| at(q, d).is_some_and(|s| !s.ramified));
        checks.add(format!("{label}_unramified_off_set"), unram_off, format!("unramified at {off:?}"));
        checks.add(
            format!("{label}_in_condition_on_s"),
            branch.s_places_in_condition.iter().all(|&b| b),
            "in D_v at every place of S",
        );
        let mut materialized = true;
        let mut detail = String::from("is_special and ramification level agree with the ledger");
        for pos in 0..m {
            match materialize(state, ledger, branch, pos) {
                Ok(rep) => {
                    let status = at(pos, d).expect("tracked");
                    let special = is_special(&rep).map(|v| v.special);
                    let level = ramification_level(&rep);
                    let want_level =
                        if status.ramified { RamificationLevel::Level(d - 1) } else { RamificationLevel::Unramified };
                    if special != Ok(status.special) || level != Ok(want_level) {
                        materialized = false;
                        detail = format!("disagreement at position {pos}");
                    }
                }
                Err(e) => {
                    materialized = false;
                    detail = e.to_string();
                }
            }
        }
        checks.add(format!("{label}_materialized"), materialized, detail);
        match t.target {
            Target::Full => {
                let ramified_at = |level: u32| (0..m).all(|q| at(q, level).is_some_and(|s| s.ramified));
                measured = (1..=d).find(|&l| ramified_at(l));
                checks.add("Q_ramified_at_d", ramified_at(d), "ramified at every prime of Q mod p^d");
                checks.add("Q_unramified_below_d", (0..m).all(|q| !at(q, d - 1).is_some_and(|s| s.ramified)), "mod p^(d-1)");
                checks.add("measured_d", measured == Some(d), format!("measured {measured:?}"));
            }
            Target::Omit(i) => {
                let pos = i - 1;
                let contained = t.primes.iter().all(|&q| q < m)
                    && !t.primes.contains(&pos)
                    && (0..pos).all(|j| t.primes.contains(&j));
                checks.add(format!("{label}_containment"), contained, format!("{:?}", t.primes));
                let full = ledger.branch(Target::Full);
                let congruent = (0..m).all(|q| full.is_some_and(|f| ledger.status(f, q, d - 1) == at(q, d - 1)));
                checks.add(format!("{label}_congruent_below_d"), congruent, "agrees with the Q-state mod p^(d-1)");
                let lower = at(pos, d - 1).is_some_and(|s| s.special);
                let upper = at(pos, d).is_some_and(|s| !s.special && !s.ramified);
                checks.add(
                    format!("{label}_special_below_only"),
                    lower && upper,
                    format!("special mod p^(d-1): {lower}; unramified and nonspecial mod p^d: {upper}"),
                );
                qi_ramified.push(t.primes.iter().all(|&q| at(q, d).is_some_and(|s| s.ramified)));
            }
        }
    }
    let passed = checks.0.iter().all(|c| c.passed);
    VerificationReport {
        case: plan.case,
        n,
        q_size: m,
        level_d: d,
        level_d_minus_one: d - 1,
        measured_d: measured,
        final_matrix,
        checks: checks.0,
        qi_ramified_everywhere: qi_ramified,
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub p: u64,
    pub n: usize,
    pub level: u32,
    pub seed: u64,
    pub retry_budget: usize,
    pub force_case: Option<CaseTag>,
    pub force_own_value: Option<u64>,
}

impl PlannerConfig {
    pub fn new(p: u64, n: usize, seed: u64) -> Self {
        PlannerConfig { p, n, level: 2, seed, retry_budget: DEFAULT_RETRY_BUDGET, force_case: None, force_own_value: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerRun {
    pub config: PlannerConfig,
    pub state: PlannerState,
    pub plan: LiftPlan,
    pub ledger: Ledger,
    pub report: VerificationReport,
}

pub fn run_planner(config: &PlannerConfig) -> Result<PlannerRun, PlannerError> {
    if config.n == 0 {
        return Err(PlannerError::EmptySelmer);
    }
    let mut oracle = ChebotarevOracle::new(
        config.p,
        config.level,
        OracleConfig { seed: config.seed, force_own_value: config.force_own_value },
    )?;
    let (mut state, table) = build_auxiliary_base(config.n, &mut oracle)?;
    let base: Vec<usize> = (0..config.n).collect();
    let f_rows: Vec<String> = (1..=config.n).map(f_name).collect();
    if !auxiliary_check(&table, &base, &f_rows)? {
        return Err(PlannerError::RuleViolation("base set is not auxiliary".into()));
    }
    let plan = classify_and_plan(
        &mut state,
        &mut oracle,
        config.retry_budget,
        PlanOptions { force_case: config.force_case },
    )?;
    let ledger = apply_plan(Ledger::initial(&state), &state, &plan)?;
    let report = verify_plan(&state, &plan, &ledger);
    Ok(PlannerRun { config: config.clone(), state, plan, ledger, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: u64, n: usize, seed: u64, force: Option<CaseTag>) -> PlannerRun {
        let mut c = PlannerConfig::new(p, n, seed);
        c.force_case = force;
        c.retry_budget = 4096;
        run_planner(&c).unwrap()
    }

    #[test]
    fn base_is_identity() {
        let mut o = ChebotarevOracle::new(5, 2, OracleConfig { seed: 3, force_own_value: None }).unwrap();
        let (state, table) = build_auxiliary_base(3, &mut o).unwrap();
        let cols = [0, 1, 2];
        for i in 1..=3 {
            for j in 0..3 {
                assert_eq!(table.get(&f_name(i), j), Some(u64::from(i == j + 1)));
                assert_eq!(table.get(&phi_name(i), j), Some(u64::from(i == j + 1)));
            }
        }
        let f: Vec<String> = (1..=3).map(f_name).collect();
        assert!(auxiliary_check(&table, &cols, &f).unwrap());
        assert_eq!(state.selmer_kernel_dim(&cols).unwrap(), 0);
        assert_eq!(state.selmer_kernel_dim(&[0, 1]).unwrap(), 1);
    }

    #[test]
    fn auxiliary_check_examples() {
        let table = EvaluationTable {
            p: 5,
            rows: vec!["a".into(), "b".into(), "c".into()],
            columns: vec![0, 1, 2],
            entries: vec![
                vec![Some(0), Some(1), Some(1)],
                vec![Some(1), Some(0), Some(1)],
                vec![Some(1), Some(1), Some(0)],
            ],
        };
        let rows: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        assert!(auxiliary_check(&table, &[0, 1, 2], &rows).unwrap());
        assert!(matches!(
            auxiliary_check(&table, &[0, 1], &rows),
            Err(PlannerError::NonSquareSelection { rows: 3, cols: 2 })
        ));
        // identity plus an all-ones column, any column deleted
        let table = EvaluationTable {
            p: 5,
            rows: vec!["a".into(), "b".into()],
            columns: vec![0, 1, 2],
            entries: vec![vec![Some(1), Some(0), Some(1)], vec![Some(0), Some(1), Some(1)]],
        };
        let rows: Vec<String> = vec!["a".into(), "b".into()];
        for cols in [[1, 2], [0, 2], [0, 1]] {
            assert!(auxiliary_check(&table, &cols, &rows).unwrap());
        }
    }

    #[test]
    fn oracle_draws_honor_constraints() {
        let cfg = OracleConfig { seed: 11, force_own_value: None };
        let mut o = ChebotarevOracle::new(7, 3, cfg).unwrap();
        let req = DrawRequest {
            tracked: vec!["f1".into(), "phi1".into(), "x".into()],
            fixed: [("f1".to_string(), Constraint::Value(1)), ("phi1".to_string(), Constraint::Value(0))]
                .into_iter()
                .collect(),
            torus: Some(TorusPattern::TwistedTop),
            ..Default::default()
        };
        let r = o.draw(&req).unwrap();
        assert_eq!(r.evaluations["f1"], 1);
        assert_eq!(r.evaluations["phi1"], 0);
        assert_eq!(r.defect, 1);
        let mut again = ChebotarevOracle::new(7, 3, cfg).unwrap();
        assert_eq!(again.draw(&req).unwrap(), r);
        let bad = DrawRequest { fixed: [("y".to_string(), Constraint::NonZero)].into_iter().collect(), ..req };
        assert!(matches!(o.draw(&bad), Err(PlannerError::InconsistentConstraints(_))));
    }

    #[test]
    fn torus_patterns_materialize() {
        // Special draws are special at the working level; twisted draws only one level down
        let ring = Zpn::new(5, 3).unwrap();
        let group = TameGroup::new(5, 3, 2).unwrap();
        let sigma = GroupElem::diag(ring, 2, 1).unwrap();
        let special = TameRep::new(group, sigma.clone(), GroupElem::identity(ring)).unwrap();
        assert!(is_special(&special).unwrap().special);
        let twisted = TameRep::new(group, sigma.mul(&top_level_twist(ring)), GroupElem::identity(ring)).unwrap();
        assert!(!is_special(&twisted).unwrap().special);
        assert_eq!(is_special(&twisted).unwrap().top_defect, Some(1));
        assert!(is_special(&twisted.reduce_to(2).unwrap()).unwrap().special);
    }

    #[test]
    fn forced_cases_have_expected_shape() {
        let r = run(5, 1, 1, Some(CaseTag::Case1));
        assert_eq!(r.plan.own_value, 2);
        assert_eq!(r.plan.q.len(), 2);
        assert!(r.report.passed, "{:?}", r.report.failures());
        let r = run(5, 1, 2, Some(CaseTag::Case2));
        assert_eq!(r.plan.q.len(), 4);
        assert_eq!(r.report.final_matrix, Some(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]));
        assert!(r.report.passed, "{:?}", r.report.failures());
        let r = run(5, 2, 3, Some(CaseTag::Case3));
        assert_eq!(r.plan.q.len(), 5);
        assert_eq!(r.report.final_matrix, Some(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]));
        assert!(r.report.passed, "{:?}", r.report.failures());
    }

    #[test]
    fn bridge_restrictions_are_the_chosen_line() {
        let r = run(7, 2, 5, Some(CaseTag::Case1));
        for j in 0..2 {
            assert_eq!(r.state.restriction(3, j).unwrap(), (1, 0));
        }
        assert_eq!(r.state.restriction(1, 2).unwrap(), (0, 1));
        assert_eq!(r.state.restriction(2, 2).unwrap(), (0, 1));
    }

    #[test]
    fn case1_adjustment_keeps_base_ramified() {
        let r = run(5, 3, 8, Some(CaseTag::Case1));
        let full = r.ledger.branch(Target::Full).unwrap();
        for pos in 0..3 {
            let s = r.ledger.status(full, pos, 2).unwrap();
            assert!(s.ramified && s.special);
        }
    }

    #[test]
    fn mutated_plan_is_flagged() {
        let r = run(5, 2, 4, Some(CaseTag::Case1));
        let mut plan = r.plan.clone();
        let c = &mut plan.transitions[0].steps[0].terms[0].coefficient;
        *c = (*c + 1) % 5;
        let ledger = apply_plan(Ledger::initial(&r.state), &r.state, &plan).unwrap();
        let report = verify_plan(&r.state, &plan, &ledger);
        assert!(!report.passed);
        assert!(report.failures().iter().any(|c| c.name == "Q_special_on_set"));
    }

    #[test]
    fn rejections() {
        assert_eq!(run_planner(&PlannerConfig::new(5, 0, 1)).unwrap_err(), PlannerError::EmptySelmer);
        assert!(matches!(run_planner(&PlannerConfig::new(3, 1, 1)), Err(PlannerError::InvalidInput(_))));
        let mut c = PlannerConfig::new(5, 1, 1);
        c.force_case = Some(CaseTag::Case2);
        c.force_own_value = Some(2);
        assert!(matches!(run_planner(&c), Err(PlannerError::RetryBudgetExhausted { .. })));
    }
}
