//! Finite augmented local O-algebras, O = Z_p: cotangent modules, congruence
//! ideals, Fitting ideals and the numerical complete-intersection criteria.
//!
//! A ring is stored exactly as a Z_p-module basis (free or p-power torsion per
//! basis element) with integer structure constants. Every invariant is computed
//! in A/p^N A and recomputed at N+1; a difference is an error.

use crate::linalg::{kernel, quotient_decomposition, quotient_length, ZModMatrix};
use crate::zp::{is_prime, Zpn};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PRECISION: u32 = 6;
pub const MAX_PRECISION: u32 = 7;
pub const MAX_RANK: usize = 8;
pub const MINOR_BUDGET: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("ring is not local")]
    NotLocal,
    #[error("cotangent module is not of finite length at precision {0}")]
    InfiniteCotangent(u32),
    #[error("{0} minors exceed the budget")]
    SyzygyBudgetExceeded(usize),
    #[error("map is not compatible with the augmentations")]
    NotAugCompatible,
    #[error("invalid ring map: {0}")]
    InvalidMap(String),
    #[error("missing witness: {0}")]
    WitnessMissing(String),
    #[error("{quantity} changed from {at_n} to {at_next} when raising the precision")]
    PrecisionUnstable { quantity: String, at_n: String, at_next: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Congruence {
    pub i: usize,
    pub j: usize,
    pub exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum RingForm {
    CongruenceSubring { copies: usize, congruences: Vec<Congruence>, augmentation: usize },
    MultiplicationTable,
}

/// Construction-time hypotheses that are not decided here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Witnesses {
    pub depth_one: bool,
    pub cohen_macaulay: bool,
    pub gorenstein: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedRing {
    pub p: u64,
    pub precision: u32,
    /// Per basis element: None for a free summand, Some(t) for Z/p^t.
    pub torsion: Vec<Option<u32>>,
    /// structure[i][j] = coordinates of e_i e_j.
    pub structure: Vec<Vec<Vec<i64>>>,
    pub unit: Vec<i64>,
    /// π(e_i).
    pub augmentation: Vec<i64>,
    pub witnesses: Witnesses,
    pub form: RingForm,
}

/// Row Hermite normal form of an integer matrix with full column rank; returns the nonzero rows.
fn hermite_rows(mut rows: Vec<Vec<i128>>, cols: usize) -> Vec<Vec<i128>> {
    let mut out = Vec::new();
    for c in 0..cols {
        loop {
            let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][c] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| rows[i][c].abs()).expect("nonempty");
            for &i in &nz {
                if i != piv {
                    let q = rows[i][c] / rows[piv][c];
                    for k in 0..cols {
                        rows[i][k] -= q * rows[piv][k];
                    }
                }
            }
        }
        if let Some(i) = rows.iter().position(|r| r[c] != 0) {
            let mut r = rows.remove(i);
            if r[c] < 0 {
                r.iter_mut().for_each(|x| *x = -*x);
            }
            out.push(r);
        }
    }
    // reduce above the pivots
    for i in 0..out.len() {
        for j in 0..i {
            let q = out[j][i].div_euclid(out[i][i]);
            for k in 0..cols {
                out[j][k] -= q * out[i][k];
            }
        }
    }
    out
}

/// Coordinates of v in the upper-triangular basis `basis`, if integral.
fn triangular_coordinates(basis: &[Vec<i128>], v: &[i128]) -> Option<Vec<i64>> {
    let mut rest = v.to_vec();
    let mut x = Vec::with_capacity(basis.len());
    for (i, b) in basis.iter().enumerate() {
        if rest[i] % b[i] != 0 {
            return None;
        }
        let c = rest[i] / b[i];
        for k in 0..rest.len() {
            rest[k] -= c * b[k];
        }
        x.push(i64::try_from(c).ok()?);
    }
    rest.iter().all(|&r| r == 0).then_some(x)
}

impl AugmentedRing {
    /// {a ∈ O^copies : a_i ≡ a_j mod p^e for each congruence}, augmented by a coordinate.
    pub fn congruence_subring(
        p: u64,
        copies: usize,
        congruences: &[Congruence],
        augmentation: usize,
        precision: Option<u32>,
    ) -> Result<Self, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::InvalidRing(format!("{p} is not prime")));
        }
        if copies == 0 || copies > MAX_RANK || augmentation >= copies {
            return Err(AlgebraError::InvalidRing(format!("{copies} copies with augmentation {augmentation}")));
        }
        for c in congruences {
            if c.i >= copies || c.j >= copies || c.i == c.j || c.exponent == 0 || c.exponent > MAX_PRECISION {
                return Err(AlgebraError::InvalidRing(format!("bad congruence {c:?}")));
            }
        }
        let basis = congruence_lattice(p, copies, congruences);
        let mut structure = vec![vec![Vec::new(); copies]; copies];
        for i in 0..copies {
            for j in 0..copies {
                let prod: Vec<i128> = (0..copies).map(|k| basis[i][k] * basis[j][k]).collect();
                structure[i][j] = triangular_coordinates(&basis, &prod)
                    .ok_or_else(|| AlgebraError::InvalidRing("not closed under multiplication".into()))?;
            }
        }
        let unit = triangular_coordinates(&basis, &vec![1; copies])
            .ok_or_else(|| AlgebraError::InvalidRing("unit missing".into()))?;
        let aug = basis.iter().map(|b| b[augmentation] as i64).collect();
        let ring = AugmentedRing {
            p,
            precision: precision.unwrap_or(DEFAULT_PRECISION),
            torsion: vec![None; copies],
            structure,
            unit,
            augmentation: aug,
            witnesses: Witnesses { depth_one: true, cohen_macaulay: true, gorenstein: copies <= 2 },
            form: RingForm::CongruenceSubring { copies, congruences: congruences.to_vec(), augmentation },
        };
        ring.validate()?;
        Ok(ring)
    }

    /// {(a, b) : a ≡ b mod p^d}, augmented by the first coordinate.
    pub fn fiber_product(p: u64, d: u32) -> Result<Self, AlgebraError> {
        Self::congruence_subring(p, 2, &[Congruence { i: 0, j: 1, exponent: d }], 0, None)
    }

    /// Three copies of O, pairwise congruent mod p.
    pub fn three_copies(p: u64) -> Result<Self, AlgebraError> {
        let c = |i, j| Congruence { i, j, exponent: 1 };
        Self::congruence_subring(p, 3, &[c(0, 1), c(0, 2), c(1, 2)], 0, None)
    }

    pub fn from_table(
        p: u64,
        torsion: Vec<Option<u32>>,
        structure: Vec<Vec<Vec<i64>>>,
        unit: Vec<i64>,
        augmentation: Vec<i64>,
        witnesses: Witnesses,
        precision: Option<u32>,
    ) -> Result<Self, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::InvalidRing(format!("{p} is not prime")));
        }
        let ring = AugmentedRing {
            p,
            precision: precision.unwrap_or(DEFAULT_PRECISION),
            torsion,
            structure,
            unit,
            augmentation,
            witnesses,
            form: RingForm::MultiplicationTable,
        };
        ring.validate()?;
        Ok(ring)
    }

    pub fn rank(&self) -> usize {
        self.torsion.len()
    }

    pub fn with_precision(&self, n: u32) -> Result<Self, AlgebraError> {
        if n == 0 || n > MAX_PRECISION + 1 {
            return Err(AlgebraError::InvalidRing(format!("precision {n} outside 1..={}", MAX_PRECISION + 1)));
        }
        Ok(AugmentedRing { precision: n, ..self.clone() })
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        let r = self.rank();
        let bad = |s: String| Err(AlgebraError::InvalidRing(s));
        if r == 0 || r > MAX_RANK {
            return bad(format!("rank {r}"));
        }
        if self.precision == 0 || self.precision > MAX_PRECISION {
            return bad(format!("precision {} outside 1..={MAX_PRECISION}", self.precision));
        }
        if self.unit.len() != r
            || self.augmentation.len() != r
            || self.structure.len() != r
            || self.structure.iter().any(|row| row.len() != r || row.iter().any(|c| c.len() != r))
        {
            return bad("shape mismatch".into());
        }
        if self.torsion.iter().flatten().any(|&t| t == 0) {
            return bad("torsion exponent 0".into());
        }
        for (i, t) in self.torsion.iter().enumerate() {
            if t.is_some() && self.augmentation[i] != 0 {
                return bad(format!("torsion element e{i} has nonzero augmentation"));
            }
        }
        // exact checks over Z, modulo the torsion relations
        let reduce = |v: Vec<i128>| -> Vec<i128> {
            v.into_iter()
                .zip(&self.torsion)
                .map(|(x, t)| match t {
                    Some(t) => x.rem_euclid((self.p as i128).pow(*t)),
                    None => x,
                })
                .collect()
        };
        let mul = |x: &[i128], y: &[i128]| -> Vec<i128> {
            let mut out = vec![0i128; r];
            for i in 0..r {
                for j in 0..r {
                    let s = x[i] * y[j];
                    if s != 0 {
                        for k in 0..r {
                            out[k] += s * self.structure[i][j][k] as i128;
                        }
                    }
                }
            }
            reduce(out)
        };
        let e = |i: usize| -> Vec<i128> { (0..r).map(|k| i128::from(k == i)).collect() };
        let unit: Vec<i128> = self.unit.iter().map(|&x| x as i128).collect();
        for i in 0..r {
            if mul(&unit, &e(i)) != reduce(e(i)) {
                return bad(format!("unit fails on e{i}"));
            }
            if let Some(t) = self.torsion[i] {
                // p^t e_i e_j must vanish
                let scaled: Vec<i128> = e(i).iter().map(|x| x * (self.p as i128).pow(t)).collect();
                for j in 0..r {
                    if mul(&scaled, &e(j)).iter().any(|&x| x != 0) {
                        return bad(format!("torsion of e{i} is not an ideal condition"));
                    }
                }
            }
            for j in 0..r {
                if mul(&e(i), &e(j)) != mul(&e(j), &e(i)) {
                    return bad(format!("e{i} e{j} is not commutative"));
                }
                let prod = mul(&e(i), &e(j));
                let lhs: i128 = prod.iter().zip(&self.augmentation).map(|(x, &a)| x * a as i128).sum();
                if lhs != self.augmentation[i] as i128 * self.augmentation[j] as i128 {
                    return bad("augmentation is not multiplicative".into());
                }
                for k in 0..r {
                    if mul(&mul(&e(i), &e(j)), &e(k)) != mul(&e(i), &mul(&e(j), &e(k))) {
                        return bad(format!("associativity fails on e{i} e{j} e{k}"));
                    }
                }
            }
        }
        let p = self.p as i128;
        let deepest = self
            .structure
            .iter()
            .flatten()
            .flatten()
            .chain(&self.augmentation)
            .filter(|&&x| x != 0)
            .map(|&x| {
                let (mut v, mut y) = (0u32, x as i128);
                while y % p == 0 {
                    y /= p;
                    v += 1;
                }
                v
            })
            .max()
            .unwrap_or(0);
        if deepest >= self.precision {
            return bad(format!("precision {} does not exceed the structure constants' depth {deepest}", self.precision));
        }
        let pi_unit: i128 = unit.iter().zip(&self.augmentation).map(|(x, &a)| x * a as i128).sum();
        if pi_unit != 1 {
            return bad("augmentation does not send 1 to 1".into());
        }
        if !Trunc::new(self)?.is_local() {
            return Err(AlgebraError::NotLocal);
        }
        Ok(())
    }
}

/// A at precision p^N: coordinates in (Z/p^N)^r modulo the torsion relations.
struct Trunc<'a> {
    ring: &'a AugmentedRing,
    z: Zpn,
    rels: Vec<Vec<u64>>,
}

impl<'a> Trunc<'a> {
    fn new(ring: &'a AugmentedRing) -> Result<Self, AlgebraError> {
        let z = Zpn::new(ring.p, ring.precision).map_err(|e| AlgebraError::InvalidRing(e.to_string()))?;
        let r = ring.rank();
        let rels = ring
            .torsion
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                let t = (*t)?;
                (t < ring.precision).then(|| (0..r).map(|k| if k == i { z.p_pow(t) } else { 0 }).collect())
            })
            .collect();
        Ok(Trunc { ring, z, rels })
    }

    fn r(&self) -> usize {
        self.ring.rank()
    }

    fn lift(&self, v: &[i64]) -> Vec<u64> {
        v.iter().map(|&x| self.z.reduce(x)).collect()
    }

    fn mul(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let z = self.z;
        let r = self.r();
        let mut out = vec![0u64; r];
        for i in 0..r {
            if x[i] == 0 {
                continue;
            }
            for j in 0..r {
                let s = z.mul(x[i], y[j]);
                if s == 0 {
                    continue;
                }
                for k in 0..r {
                    out[k] = z.add(out[k], z.mul(s, z.reduce(self.ring.structure[i][j][k])));
                }
            }
        }
        out
    }

    fn pi(&self, x: &[u64]) -> u64 {
        let z = self.z;
        x.iter().zip(&self.ring.augmentation).fold(0, |acc, (&a, &b)| z.add(acc, z.mul(a, z.reduce(b))))
    }

    fn is_zero(&self, x: &[u64]) -> bool {
        crate::linalg::in_span(self.z, self.r(), &self.rels, x)
    }

    /// Minimal generators of span(gens) modulo the torsion relations.
    fn minimal(&self, gens: &[Vec<u64>]) -> Vec<Vec<u64>> {
        quotient_decomposition(self.z, self.r(), gens, &self.rels).into_iter().map(|f| f.generator).collect()
    }

    fn length(&self, gens: &[Vec<u64>]) -> u32 {
        quotient_length(self.z, self.r(), gens, &self.rels)
    }

    /// Generators of {x : M x ∈ span(rels)} for the linear map M (columns in (Z/p^N)^rows).
    fn preimage_of_relations(&self, m: &ZModMatrix, rels: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let cols = m.cols();
        if rels.is_empty() {
            return kernel(m);
        }
        let rm = ZModMatrix::from_columns(self.z, m.rows(), rels);
        kernel(&m.hstack(&rm)).into_iter().map(|v| v[..cols].to_vec()).collect()
    }

    fn aug_kernel(&self) -> Vec<Vec<u64>> {
        let r = self.r();
        let row: Vec<u64> = (0..r).map(|i| self.z.reduce(self.ring.augmentation[i])).collect();
        let m = ZModMatrix::from_row_vectors(self.z, r, &[row]);
        let mut gens = kernel(&m);
        gens.extend(self.rels.iter().cloned());
        self.minimal(&gens)
    }

    fn products(&self, a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                out.push(self.mul(x, y));
            }
        }
        out
    }

    /// The ideal generated by `gens`: its Z/p^N-span after multiplying by the basis.
    fn ideal(&self, gens: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let basis: Vec<Vec<u64>> = (0..self.r()).map(|i| (0..self.r()).map(|k| u64::from(i == k)).collect()).collect();
        let mut all = gens.to_vec();
        all.extend(self.products(&basis, gens));
        self.minimal(&all)
    }

    fn mult_matrix(&self, g: &[u64]) -> ZModMatrix {
        let r = self.r();
        let cols: Vec<Vec<u64>> =
            (0..r).map(|i| self.mul(&(0..r).map(|k| u64::from(i == k)).collect::<Vec<_>>(), g)).collect();
        ZModMatrix::from_columns(self.z, r, &cols)
    }

    /// {x : x g ∈ rels for every generator g}.
    fn annihilator(&self, gens: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let r = self.r();
        if gens.is_empty() {
            return (0..r).map(|i| (0..r).map(|k| u64::from(i == k)).collect()).collect();
        }
        let mut m = self.mult_matrix(&gens[0]);
        for g in &gens[1..] {
            m = m.vstack(&self.mult_matrix(g));
        }
        let big_rels: Vec<Vec<u64>> = (0..gens.len())
            .flat_map(|l| {
                self.rels.iter().map(move |rel| {
                    let mut v = vec![0u64; r * gens.len()];
                    v[l * r..(l + 1) * r].copy_from_slice(rel);
                    v
                })
            })
            .collect();
        let mut out = self.preimage_of_relations(&m, &big_rels);
        out.extend(self.rels.iter().cloned());
        self.minimal(&out)
    }

    /// Smallest e with p^e ∈ π(ideal), None when π(ideal) vanishes mod p^N.
    fn pi_exponent(&self, gens: &[Vec<u64>]) -> Option<u32> {
        let n = self.z.n();
        let e = gens.iter().map(|g| self.z.valuation(self.pi(g))).min().unwrap_or(n);
        (e < n).then_some(e)
    }

    fn is_local(&self) -> bool {
        // the augmentation ideal is nilpotent mod p
        let k = Zpn::new(self.ring.p, 1).expect("prime");
        let sub = Trunc { ring: self.ring, z: k, rels: Vec::new() };
        let m = sub.aug_kernel();
        let mut power = m.clone();
        for _ in 0..=self.r() {
            if power.iter().all(|v| v.iter().all(|&x| x == 0)) {
                return true;
            }
            power = sub.minimal(&sub.products(&power, &m));
        }
        power.iter().all(|v| v.iter().all(|&x| x == 0))
    }

    fn determinant(&self, m: &[Vec<Vec<u64>>]) -> Vec<u64> {
        let k = m.len();
        let r = self.r();
        let mut total = vec![0u64; r];
        let mut perm: Vec<usize> = (0..k).collect();
        loop {
            let mut term = self.lift(&self.ring.unit);
            for (i, &j) in perm.iter().enumerate() {
                term = self.mul(&term, &m[i][j]);
            }
            let sign = permutation_sign(&perm);
            for c in 0..r {
                total[c] = if sign { self.z.add(total[c], term[c]) } else { self.z.sub(total[c], term[c]) };
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        total
    }
}

fn permutation_sign(perm: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Run a computation at N and N+1 and insist on the same answer.
fn stable<T: PartialEq + std::fmt::Debug>(
    ring: &AugmentedRing,
    quantity: &str,
    f: impl Fn(&AugmentedRing) -> Result<T, AlgebraError>,
) -> Result<T, AlgebraError> {
    let at_n = f(ring)?;
    let at_next = f(&ring.with_precision(ring.precision + 1)?)?;
    if at_n != at_next {
        return Err(AlgebraError::PrecisionUnstable {
            quantity: quantity.to_string(),
            at_n: format!("{at_n:?}"),
            at_next: format!("{at_next:?}"),
        });
    }
    Ok(at_n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealHandle {
    pub generators: Vec<Vec<u64>>,
    /// Exponents of the cyclic summands of the ideal as a Z/p^N-module.
    pub exponents: Vec<u32>,
    pub length: u32,
}

fn handle(t: &Trunc, gens: Vec<Vec<u64>>) -> IdealHandle {
    let factors = quotient_decomposition(t.z, t.r(), &gens, &t.rels);
    let length = factors.iter().map(|f| f.exponent).sum();
    IdealHandle { exponents: factors.iter().map(|f| f.exponent).collect(), generators: gens, length }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotangentReport {
    pub exponents: Vec<u32>,
    pub length: u32,
}

fn cotangent_at(ring: &AugmentedRing) -> Result<CotangentReport, AlgebraError> {
    let t = Trunc::new(ring)?;
    let i = t.aug_kernel();
    let mut sq = t.products(&i, &i);
    sq.extend(t.rels.iter().cloned());
    let factors = quotient_decomposition(t.z, t.r(), &i, &sq);
    if factors.iter().any(|f| f.exponent >= ring.precision) {
        return Err(AlgebraError::InfiniteCotangent(ring.precision));
    }
    let exponents: Vec<u32> = factors.iter().map(|f| f.exponent).collect();
    Ok(CotangentReport { length: exponents.iter().sum(), exponents })
}

/// Φ_A = ker π / (ker π)².
pub fn cotangent_phi(ring: &AugmentedRing) -> Result<CotangentReport, AlgebraError> {
    stable(ring, "cotangent module", cotangent_at)
}

fn eta_at(ring: &AugmentedRing) -> Result<Option<u32>, AlgebraError> {
    let t = Trunc::new(ring)?;
    let ann = t.annihilator(&t.aug_kernel());
    Ok(t.pi_exponent(&ann))
}

/// e with η_A = π(Ann(ker π)) = (p^e); None when η_A = 0.
pub fn eta(ring: &AugmentedRing) -> Result<Option<u32>, AlgebraError> {
    stable(ring, "congruence ideal", eta_at)
}

pub fn annihilator_of_augmentation(ring: &AugmentedRing) -> Result<IdealHandle, AlgebraError> {
    let t = Trunc::new(ring)?;
    let ann = t.annihilator(&t.aug_kernel());
    Ok(handle(&t, ann))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FittingReport {
    pub ideal: IdealHandle,
    pub generator_count: usize,
    pub relation_count: usize,
    pub minors: usize,
    /// e with π(Fitt) = (p^e); None when π(Fitt) ⊂ (p^precision).
    pub pi_exponent: Option<u32>,
    pub precision: u32,
    pub contained_in_annihilator: bool,
}

fn fitting_at(ring: &AugmentedRing) -> Result<FittingReport, AlgebraError> {
    let t = Trunc::new(ring)?;
    let r = t.r();
    let gens = t.aug_kernel();
    let k = gens.len();
    if k == 0 {
        let unit = t.lift(&ring.unit);
        return Ok(FittingReport {
            ideal: handle(&t, vec![unit]),
            generator_count: 0,
            relation_count: 0,
            minors: 1,
            pi_exponent: Some(0),
            precision: ring.precision,
            contained_in_annihilator: true,
        });
    }
    // relations (a_1..a_k) with Σ a_l g_l = 0, unknowns laid out as k blocks of r
    let mut cols = Vec::with_capacity(r * k);
    for g in &gens {
        let m = t.mult_matrix(g);
        for c in 0..r {
            cols.push(m.column(c));
        }
    }
    let m = ZModMatrix::from_columns(t.z, r, &cols);
    let syz = t.preimage_of_relations(&m, &t.rels);
    let block_rels: Vec<Vec<u64>> = (0..k)
        .flat_map(|l| {
            t.rels.iter().map(move |rel| {
                let mut v = vec![0u64; r * k];
                v[l * r..(l + 1) * r].copy_from_slice(rel);
                v
            })
        })
        .collect();
    let relations: Vec<Vec<u64>> =
        quotient_decomposition(t.z, r * k, &syz, &block_rels).into_iter().map(|f| f.generator).collect();
    let count = binomial(relations.len(), k);
    if count > MINOR_BUDGET {
        return Err(AlgebraError::SyzygyBudgetExceeded(count));
    }
    let mut minors = Vec::with_capacity(count);
    for rows in combinations(relations.len(), k) {
        let mat: Vec<Vec<Vec<u64>>> =
            rows.iter().map(|&i| (0..k).map(|l| relations[i][l * r..(l + 1) * r].to_vec()).collect()).collect();
        let d = t.determinant(&mat);
        if !t.is_zero(&d) {
            minors.push(d);
        }
    }
    let contained = minors.iter().all(|d| gens.iter().all(|g| t.is_zero(&t.mul(d, g))));
    let pi_exponent = t.pi_exponent(&minors);
    let ideal = t.ideal(&minors);
    Ok(FittingReport {
        ideal: handle(&t, ideal),
        generator_count: k,
        relation_count: relations.len(),
        minors: count,
        pi_exponent,
        precision: ring.precision,
        contained_in_annihilator: contained,
    })
}

/// Zeroth Fitting ideal of ker π as an A-module.
pub fn fitting(ring: &AugmentedRing) -> Result<FittingReport, AlgebraError> {
    let at_n = fitting_at(ring)?;
    let at_next = fitting_at(&ring.with_precision(ring.precision + 1)?)?;
    // a vanishing image only bounds π(Fitt) by p^N, so compare below N
    let n = ring.precision;
    let clamp = |r: &FittingReport| r.pi_exponent.unwrap_or(n).min(n);
    if clamp(&at_n) != clamp(&at_next) {
        return Err(AlgebraError::PrecisionUnstable {
            quantity: "Fitting ideal".into(),
            at_n: format!("{:?}", at_n.pi_exponent),
            at_next: format!("{:?}", at_next.pi_exponent),
        });
    }
    Ok(at_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiVerdict {
    CompleteIntersection,
    NotCompleteIntersection,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiReport {
    pub phi_length: u32,
    /// ℓ(O/η), None when η = 0.
    pub eta_length: Option<u32>,
    pub fitting_exponent: Option<u32>,
    pub depth_witness: bool,
    pub verdict: CiVerdict,
    /// ℓ(Φ) − ℓ(O/η), emitted for exploration only.
    pub length_gap: Option<i64>,
}

/// The numerical complete-intersection criterion under a depth-one witness.
pub fn ci_criterion(ring: &AugmentedRing, depth_witness: Option<bool>) -> Result<CiReport, AlgebraError> {
    let phi = cotangent_phi(ring)?;
    let eta_length = eta(ring)?;
    let fit = fitting(ring)?;
    let depth = depth_witness.unwrap_or(ring.witnesses.depth_one);
    let equal = eta_length == Some(phi.length);
    let verdict = match (depth, equal) {
        (false, _) => CiVerdict::Inconclusive,
        (true, true) => CiVerdict::CompleteIntersection,
        (true, false) => CiVerdict::NotCompleteIntersection,
    };
    Ok(CiReport {
        phi_length: phi.length,
        eta_length,
        fitting_exponent: fit.pi_exponent,
        depth_witness: depth,
        verdict,
        length_gap: eta_length.map(|e| phi.length as i64 - e as i64),
    })
}

/// A map of augmented rings, given by the images of the source basis in target coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingMap {
    pub source: AugmentedRing,
    pub target: AugmentedRing,
    pub images: Vec<Vec<i64>>,
}

impl RingMap {
    pub fn new(source: AugmentedRing, target: AugmentedRing, images: Vec<Vec<i64>>) -> Result<Self, AlgebraError> {
        if source.p != target.p || images.len() != source.rank() || images.iter().any(|v| v.len() != target.rank()) {
            return Err(AlgebraError::InvalidMap("shape mismatch".into()));
        }
        let map = RingMap { source, target, images };
        map.validate()?;
        Ok(map)
    }

    pub fn identity(ring: AugmentedRing) -> Self {
        let r = ring.rank();
        let images = (0..r).map(|i| (0..r).map(|k| i64::from(i == k)).collect()).collect();
        RingMap { source: ring.clone(), target: ring, images }
    }

    fn at_precision(&self, n: u32) -> Result<RingMap, AlgebraError> {
        Ok(RingMap {
            source: self.source.with_precision(n)?,
            target: self.target.with_precision(n)?,
            images: self.images.clone(),
        })
    }

    fn apply(&self, t: &Trunc, x: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.target.rank()];
        for (i, &c) in x.iter().enumerate() {
            for (k, o) in out.iter_mut().enumerate() {
                *o = t.z.add(*o, t.z.mul(c, t.z.reduce(self.images[i][k])));
            }
        }
        out
    }

    fn matrix(&self, tb: &Trunc) -> ZModMatrix {
        let cols: Vec<Vec<u64>> = self.images.iter().map(|v| tb.lift(v)).collect();
        ZModMatrix::from_columns(tb.z, self.target.rank(), &cols)
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        let ta = Trunc::new(&self.source)?;
        let tb = Trunc::new(&self.target)?;
        let ra = self.source.rank();
        let e = |i: usize| -> Vec<u64> { (0..ra).map(|k| u64::from(i == k)).collect() };
        let diff_zero = |x: &[u64], y: &[u64]| tb.is_zero(&crate::linalg::vec_sub(tb.z, x, y));
        if !diff_zero(&self.apply(&ta, &ta.lift(&self.source.unit)), &tb.lift(&self.target.unit)) {
            return Err(AlgebraError::InvalidMap("unit is not preserved".into()));
        }
        for i in 0..ra {
            for j in 0..ra {
                let lhs = self.apply(&ta, &ta.mul(&e(i), &e(j)));
                let rhs = tb.mul(&self.apply(&ta, &e(i)), &self.apply(&ta, &e(j)));
                if !diff_zero(&lhs, &rhs) {
                    return Err(AlgebraError::InvalidMap(format!("not multiplicative on e{i} e{j}")));
                }
            }
            if let Some(t) = self.source.torsion[i] {
                let scaled: Vec<u64> = e(i).iter().map(|&x| ta.z.mul(x, ta.z.p_pow(t))).collect();
                if !tb.is_zero(&self.apply(&ta, &scaled)) {
                    return Err(AlgebraError::InvalidMap(format!("torsion of e{i} is not respected")));
                }
            }
            if tb.pi(&self.apply(&ta, &e(i))) != ta.pi(&e(i)) {
                return Err(AlgebraError::NotAugCompatible);
            }
        }
        let mut image: Vec<Vec<u64>> = (0..ra).map(|i| self.apply(&ta, &e(i))).collect();
        image.extend(tb.rels.iter().cloned());
        if tb.length(&image) != tb.length(&(0..self.target.rank()).map(|i| (0..self.target.rank()).map(|k| u64::from(i == k)).collect()).collect::<Vec<_>>()) {
            return Err(AlgebraError::InvalidMap("not surjective".into()));
        }
        Ok(())
    }

    fn kernel_gens(&self, ta: &Trunc, tb: &Trunc) -> Vec<Vec<u64>> {
        let mut k = tb.preimage_of_relations(&self.matrix(tb), &tb.rels);
        k.extend(ta.rels.iter().cloned());
        ta.minimal(&k)
    }

    /// Length of ker φ; None when the kernel has a free summand.
    pub fn kernel_length(&self) -> Result<Option<u32>, AlgebraError> {
        stable(&self.source, "kernel of the map", |a| {
            let m = self.at_precision(a.precision)?;
            let ta = Trunc::new(&m.source)?;
            let tb = Trunc::new(&m.target)?;
            let factors = quotient_decomposition(ta.z, ta.r(), &m.kernel_gens(&ta, &tb), &ta.rels);
            if factors.iter().any(|f| f.exponent >= a.precision) {
                return Ok(None);
            }
            Ok(Some(factors.iter().map(|f| f.exponent).sum()))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsomReport {
    pub phi_source: u32,
    pub eta_target: Option<u32>,
    pub certified: bool,
    pub kernel_length: Option<u32>,
    /// A certified map must have zero kernel.
    pub kernel_consistent: bool,
}

/// Certify φ an isomorphism of complete intersections when ℓ(Φ_A) ≤ ℓ(O/η_B) < ∞.
pub fn isom_criterion(map: &RingMap) -> Result<IsomReport, AlgebraError> {
    if !map.target.witnesses.depth_one {
        return Err(AlgebraError::WitnessMissing("target depth one".into()));
    }
    let phi = cotangent_phi(&map.source)?;
    let eta_b = eta(&map.target)?;
    let certified = eta_b.is_some_and(|e| phi.length <= e);
    let kernel_length = map.kernel_length()?;
    Ok(IsomReport {
        phi_source: phi.length,
        eta_target: eta_b,
        certified,
        kernel_length,
        kernel_consistent: !certified || kernel_length == Some(0),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GorReport {
    /// π_A(Ann_A(ker π_A)).
    pub lhs: Option<u32>,
    /// π_A(Ann_A(ker φ)).
    pub kernel_factor: Option<u32>,
    /// π_B(Ann_B(ker π_B)).
    pub target_factor: Option<u32>,
    pub rhs: Option<u32>,
    pub equal: bool,
}

/// Compare η_A with π_A(Ann_A(ker φ)) · η_B.
pub fn gor_factorization(map: &RingMap) -> Result<GorReport, AlgebraError> {
    if !map.source.witnesses.gorenstein {
        return Err(AlgebraError::WitnessMissing("source Gorenstein".into()));
    }
    if !map.target.witnesses.cohen_macaulay {
        return Err(AlgebraError::WitnessMissing("target Cohen-Macaulay".into()));
    }
    cotangent_phi(&map.source)?;
    let lhs = eta(&map.source)?;
    let target_factor = eta(&map.target)?;
    let kernel_factor = stable(&map.source, "annihilator of the kernel", |a| {
        let m = map.at_precision(a.precision)?;
        let ta = Trunc::new(&m.source)?;
        let tb = Trunc::new(&m.target)?;
        let ker = m.kernel_gens(&ta, &tb);
        Ok(ta.pi_exponent(&ta.annihilator(&ker)))
    })?;
    let rhs = match (kernel_factor, target_factor) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    Ok(GorReport { lhs, kernel_factor, target_factor, rhs, equal: lhs == rhs })
}

/// A connected congruence subring of O^s, s ∈ {2,3,4}, with exponents in {1,2}.
pub fn random_congruence_ring<R: Rng>(p: u64, rng: &mut R) -> Result<AugmentedRing, AlgebraError> {
    let copies = rng.gen_range(2..=4);
    let mut congruences = Vec::new();
    for j in 1..copies {
        let i = rng.gen_range(0..j);
        congruences.push(Congruence { i, j, exponent: rng.gen_range(1..=2) });
    }
    for i in 0..copies {
        for j in i + 1..copies {
            if !congruences.iter().any(|c| c.i == i && c.j == j) && rng.gen_bool(0.3) {
                congruences.push(Congruence { i, j, exponent: rng.gen_range(1..=2) });
            }
        }
    }
    let augmentation = rng.gen_range(0..copies);
    AugmentedRing::congruence_subring(p, copies, &congruences, augmentation, None)
}

pub mod fixtures {
    use super::*;

    /// O[X]/(X² − p^d X) on the basis 1, X; isomorphic to the fiber product of level d.
    pub fn quadratic_ci(p: u64, d: u32) -> Result<AugmentedRing, AlgebraError> {
        let pd = (p as i64).pow(d);
        let structure = vec![vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![0, pd]]];
        AugmentedRing::from_table(
            p,
            vec![None, None],
            structure,
            vec![1, 0],
            vec![1, 0],
            Witnesses { depth_one: true, cohen_macaulay: true, gorenstein: true },
            None,
        )
    }

    /// O[X]/(X², pX): depth zero, with no depth witness.
    pub fn truncation(p: u64) -> Result<AugmentedRing, AlgebraError> {
        let structure = vec![vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![0, 0]]];
        AugmentedRing::from_table(p, vec![None, Some(1)], structure, vec![1, 0], vec![1, 0], Witnesses::default(), None)
    }

    /// O itself.
    pub fn base(p: u64) -> Result<AugmentedRing, AlgebraError> {
        AugmentedRing::congruence_subring(p, 1, &[], 0, None)
    }

    /// The fiber product of level d mapped onto O by the augmentation coordinate.
    pub fn projection(p: u64, d: u32) -> Result<RingMap, AlgebraError> {
        let a = AugmentedRing::fiber_product(p, d)?;
        let images = a.augmentation.iter().map(|&x| vec![x]).collect();
        RingMap::new(a, base(p)?, images)
    }

    /// O[X]/(X² − p^d X) → fiber product, X ↦ (0, p^d).
    pub fn quadratic_to_fiber(p: u64, d: u32) -> Result<RingMap, AlgebraError> {
        let a = quadratic_ci(p, d)?;
        let b = AugmentedRing::fiber_product(p, d)?;
        // fiber product basis from the Hermite form: (1, 1), (0, p^d)
        RingMap::new(a, b, vec![vec![1, 0], vec![0, 1]])
    }

    /// Three copies onto two by dropping the last coordinate.
    pub fn drop_third(p: u64) -> Result<RingMap, AlgebraError> {
        let a = AugmentedRing::three_copies(p)?;
        let b = AugmentedRing::fiber_product(p, 1)?;
        let target: Vec<Vec<i128>> =
            ambient_basis(&b).iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let images = ambient_basis(&a)
            .iter()
            .map(|v| {
                triangular_coordinates(&target, &[v[0] as i128, v[1] as i128])
                    .ok_or_else(|| AlgebraError::InvalidMap("image outside the target".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        RingMap::new(a, b, images)
    }
}

/// Basis of a congruence subring in ambient coordinates.
pub fn ambient_basis(a: &AugmentedRing) -> Vec<Vec<i64>> {
    let RingForm::CongruenceSubring { copies, congruences, .. } = &a.form else {
        return Vec::new();
    };
    congruence_lattice(a.p, *copies, congruences)
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect()
}

/// Hermite basis of {a ∈ Z^copies : a_i ≡ a_j mod p^e}.
fn congruence_lattice(p: u64, copies: usize, congruences: &[Congruence]) -> Vec<Vec<i128>> {
    let top = congruences.iter().map(|c| c.exponent).max().unwrap_or(0);
    let unit = |k: usize, scale: i128| -> Vec<i128> { (0..copies).map(|l| if k == l { scale } else { 0 }).collect() };
    if top == 0 {
        return (0..copies).map(|k| unit(k, 1)).collect();
    }
    let mut gens: Vec<Vec<i128>> = (0..copies).map(|k| unit(k, (p as i128).pow(top))).collect();
    let z = Zpn::new(p, top).expect("validated");
    let rows: Vec<Vec<u64>> = congruences
        .iter()
        .map(|c| {
            let s = z.p_pow(top - c.exponent);
            let mut row = vec![0; copies];
            row[c.i] = s;
            row[c.j] = z.neg(s);
            row
        })
        .collect();
    let m = ZModMatrix::from_row_vectors(z, copies, &rows);
    gens.extend(kernel(&m).into_iter().map(|v| v.into_iter().map(|x| x as i128).collect()));
    hermite_rows(gens, copies)
}
