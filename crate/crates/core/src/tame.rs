//! The tame local group <σ, τ | σ τ σ^{-1} = τ^q>, its representations and modules.

use crate::gl2::{adjoint_matrix, root_value, torus_lift, Flavor, Gl2Error, GroupElem};
use crate::linalg::ZModMatrix;
use crate::zp::{RingError, ZModScalar, Zpn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotNiceReason {
    #[error("q is divisible by p")]
    QNotCoprime,
    #[error("q is congruent to 1 mod p")]
    QIsOne,
    #[error("q is congruent to -1 mod p")]
    QIsMinusOne,
    #[error("Frobenius is not regular semisimple with eigenvalues in F_p")]
    NotRegular,
    #[error("no root ratio equals q")]
    NoRootMatches,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TameError {
    #[error("relation σ τ σ^-1 = τ^q fails; defect {defect:?}")]
    RelationViolation { defect: Vec<Vec<u64>> },
    #[error("not a nice prime: {0}")]
    NotNice(NotNiceReason),
    #[error("ineligible parameters: {0}")]
    IneligibleParameters(String),
    #[error("cannot normalize: {0}")]
    NotNormalizable(String),
    #[error("inertia acts nontrivially mod p")]
    ResiduallyRamified,
    #[error("filtration violated: {0}")]
    FiltrationViolation(String),
    #[error("q class {0} is not a unit")]
    InvalidQ(u64),
    #[error("modules do not match: {0}")]
    ModuleMismatch(String),
    #[error(transparent)]
    Gl2(#[from] Gl2Error),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Tame quotient of a local Galois group at a prime q ≠ p, at precision p^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TameGroup {
    ring: Zpn,
    q_class: u64,
}

impl TameGroup {
    pub fn new(p: u64, n: u32, q_class: i64) -> Result<Self, TameError> {
        let ring = Zpn::new(p, n)?;
        Self::over(ring, q_class)
    }

    pub fn over(ring: Zpn, q_class: i64) -> Result<Self, TameError> {
        let q = ring.reduce(q_class);
        if !ring.is_unit(q) {
            return Err(TameError::InvalidQ(q));
        }
        Ok(TameGroup { ring, q_class: q })
    }

    pub fn ring(&self) -> Zpn {
        self.ring
    }

    pub fn p(&self) -> u64 {
        self.ring.p()
    }

    pub fn n(&self) -> u32 {
        self.ring.n()
    }

    /// Residue of q mod p^n; also used as the integer exponent in τ^q.
    pub fn q(&self) -> u64 {
        self.q_class
    }

    pub fn with_precision(&self, n: u32) -> Result<Self, TameError> {
        TameGroup::over(self.ring.with_exponent(n)?, self.q_class as i64)
    }
}

/// A homomorphism of the tame group into GL2(Z/p^n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TameRep {
    pub group: TameGroup,
    pub sigma: GroupElem,
    pub tau: GroupElem,
    /// If set, det(A_σ) = q^ν and det(A_τ) = 1.
    pub det_exponent: Option<u32>,
}

impl TameRep {
    pub fn new(group: TameGroup, sigma: GroupElem, tau: GroupElem) -> Result<Self, TameError> {
        let rep = TameRep { group, sigma, tau, det_exponent: None };
        validate(&rep)?;
        Ok(rep)
    }

    /// Special rep in normal form: A_σ = diag(q, 1), A_τ = [[1, p^e u], [0, 1]].
    pub fn special(group: TameGroup, e: u32, u: u64) -> Result<Self, TameError> {
        let ring = group.ring();
        let sigma = GroupElem::diag(ring, group.q(), 1)?;
        let tau = GroupElem::new(
            ZModMatrix::from_row_vectors(ring, 2, &[vec![1, ring.mul(ring.p_pow(e), u)], vec![0, 1]]),
            Flavor::GL2,
        )?;
        TameRep::new(group, sigma, tau)
    }

    pub fn conjugate(&self, c: &GroupElem) -> TameRep {
        TameRep { group: self.group, sigma: self.sigma.conj(c), tau: self.tau.conj(c), det_exponent: self.det_exponent }
    }

    /// Reduce to precision m <= n.
    pub fn reduce_to(&self, m: u32) -> Result<TameRep, TameError> {
        let group = self.group.with_precision(m)?;
        let ring = group.ring();
        Ok(TameRep {
            group,
            sigma: self.sigma.reduce_to(ring),
            tau: self.tau.reduce_to(ring),
            det_exponent: self.det_exponent,
        })
    }
}

/// Check the tame relation (and the determinant constraint if present).
pub fn validate(rep: &TameRep) -> Result<(), TameError> {
    if rep.sigma.ring() != rep.group.ring() || rep.tau.ring() != rep.group.ring() {
        return Err(TameError::ModuleMismatch("images and group have different precision".into()));
    }
    let lhs = rep.tau.conj(&rep.sigma);
    let rhs = rep.tau.pow(rep.group.q());
    if lhs != rhs {
        let defect = lhs.matrix().sub(rhs.matrix()).to_rows();
        return Err(TameError::RelationViolation { defect });
    }
    if let Some(nu) = rep.det_exponent {
        let r = rep.group.ring();
        if rep.sigma.det() != r.pow(rep.group.q(), nu as u64) || rep.tau.det() != 1 {
            return Err(TameError::RelationViolation { defect: vec![vec![rep.sigma.det(), rep.tau.det()]] });
        }
    }
    Ok(())
}

/// Which root space carries the cyclotomic ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootSlot {
    /// λ1/λ2 = q: the (1,2) entry, spanned by E.
    Upper,
    /// λ2/λ1 = q: the (2,1) entry, spanned by F.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NiceCertificate {
    pub p: u64,
    pub q_mod_p: u64,
    pub lambda1: u64,
    pub lambda2: u64,
    pub root: RootSlot,
    /// Bits: 0 q ≢ 1, 1 q ≢ -1, 2 regular semisimple, 3 unique matching root.
    pub conditions: u8,
}

pub fn nice_check(p: u64, q: i64, frob: &GroupElem) -> Result<NiceCertificate, TameError> {
    let k = Zpn::new(p, 1)?;
    let q = k.reduce(q);
    if q == 0 {
        return Err(TameError::NotNice(NotNiceReason::QNotCoprime));
    }
    if q == 1 {
        return Err(TameError::NotNice(NotNiceReason::QIsOne));
    }
    if q == p - 1 {
        return Err(TameError::NotNice(NotNiceReason::QIsMinusOne));
    }
    let (l1, l2) = crate::gl2::eigenvalues_mod_p(frob).map_err(|_| TameError::NotNice(NotNiceReason::NotRegular))?;
    if l1 == l2 {
        return Err(TameError::NotNice(NotNiceReason::NotRegular));
    }
    let r12 = k.mul(l1, k.inv(l2).expect("eigenvalue of invertible matrix"));
    let r21 = k.inv(r12).expect("unit ratio");
    let root = match (r12 == q, r21 == q) {
        (true, false) => RootSlot::Upper,
        (false, true) => RootSlot::Lower,
        _ => return Err(TameError::NotNice(NotNiceReason::NoRootMatches)),
    };
    Ok(NiceCertificate { p, q_mod_p: q, lambda1: l1, lambda2: l2, root, conditions: 0b1111 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrobeniusVariant {
    /// F = L: x = diag(b, b^{-1}), b = a^{(p-1)/d}; needs d > 4.
    LEqualsF,
    /// [L:F] = 2: x = diag(b, b^{-1}), b = a^{(p-1)/2d}; needs d > 2.
    QuadraticL,
    /// [F(μ_p):F] = 4, image contains GL2(F_p), F = L: x = diag(a^{(p-1)/4}, 1).
    CycloFour,
    /// [F(μ_p):F] = 4, p = 5, det = κ: x = diag(a, 1).
    CycloFourDetKappa,
    /// [F(μ_p):F] = 4, p = 5, det = κ^{-1}: x = diag(1, a).
    CycloFourDetKappaInverse,
}

fn is_generator(k: &Zpn, a: u64) -> bool {
    let p = k.p();
    if a % p == 0 {
        return false;
    }
    let mut m = p - 1;
    let mut f = 2;
    while m > 1 {
        if m % f == 0 {
            if k.pow(a, (p - 1) / f) == 1 {
                return false;
            }
            while m % f == 0 {
                m /= f;
            }
        }
        f += 1;
    }
    true
}

/// The explicit Frobenius torus element of the GL2 remark, reduced mod p.
pub fn suggest_frobenius(p: u64, d: u64, variant: FrobeniusVariant, a: u64) -> Result<GroupElem, TameError> {
    let k = Zpn::new(p, 1)?;
    let inel = |s: String| Err(TameError::IneligibleParameters(s));
    if p < 5 {
        return inel(format!("p = {p} < 5"));
    }
    if !is_generator(&k, a) {
        return inel(format!("{a} does not generate F_{p}^x"));
    }
    let x = match variant {
        FrobeniusVariant::LEqualsF => {
            if d <= 4 || (p - 1) % d != 0 {
                return inel(format!("F = L needs d > 4 and d | p-1, got d = {d}"));
            }
            let b = k.pow(a, (p - 1) / d);
            GroupElem::diag(k, b, k.inv(b).expect("unit"))?
        }
        FrobeniusVariant::QuadraticL => {
            if d <= 2 || (p - 1) % (2 * d) != 0 {
                return inel(format!("[L:F] = 2 needs d > 2 and 2d | p-1, got d = {d}"));
            }
            let b = k.pow(a, (p - 1) / (2 * d));
            GroupElem::diag(k, b, k.inv(b).expect("unit"))?
        }
        FrobeniusVariant::CycloFour => {
            if d != 4 || (p - 1) % 4 != 0 {
                return inel(format!("cyclotomic degree 4 variant needs d = 4 and 4 | p-1, got d = {d}"));
            }
            GroupElem::diag(k, k.pow(a, (p - 1) / 4), 1)?
        }
        FrobeniusVariant::CycloFourDetKappa | FrobeniusVariant::CycloFourDetKappaInverse => {
            if p != 5 || d != 4 {
                return inel(format!("determinant-twisted variant needs p = 5 and d = 4, got p = {p}, d = {d}"));
            }
            if variant == FrobeniusVariant::CycloFourDetKappa {
                GroupElem::diag(k, a, 1)?
            } else {
                GroupElem::diag(k, 1, a)?
            }
        }
    };
    let q = root_value(&x)?;
    nice_check(p, q as i64, &x)?;
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HypothesisParams {
    pub p: Option<u64>,
    pub cyclo_degree: u64,
    pub contains_sl2: bool,
    pub contains_gl2_fp: bool,
    pub det_is_cyclo_pm1: bool,
    pub l_equals_f: bool,
    pub center_order: u64,
    pub coxeter_number: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    pub eligible: bool,
    pub reason: String,
    /// The general-group bound p - 1 > max(8#Z, (2h-2)#Z or (4h-4)#Z), when p is known.
    pub general_bound: Option<bool>,
}

pub fn check_hypotheses(params: &HypothesisParams) -> HypothesisVerdict {
    let general_bound = params.p.map(|p| {
        let z = params.center_order;
        let h = params.coxeter_number;
        let second = if z % 2 == 0 { (2 * h).saturating_sub(2) * z } else { (4 * h).saturating_sub(4) * z };
        params.cyclo_degree == p - 1 && p - 1 > (8 * z).max(second)
    });
    let (eligible, reason) = if params.cyclo_degree > 4 && params.contains_sl2 {
        (true, "cyclotomic degree > 4 and image contains SL2".to_string())
    } else if params.cyclo_degree == 4 && params.contains_gl2_fp && (params.l_equals_f || params.det_is_cyclo_pm1) {
        (true, "cyclotomic degree 4, image contains GL2(F_p)".to_string())
    } else if params.cyclo_degree <= 2 {
        (false, format!("cyclotomic degree {} <= 2", params.cyclo_degree))
    } else {
        (false, "no branch of the GL2 criteria applies".to_string())
    };
    HypothesisVerdict { eligible, reason, general_bound }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub conjugator: GroupElem,
    pub rep: TameRep,
}

/// Conjugate so that A_σ is diagonal with λ1/λ2 ≡ q mod p (when possible) and A_τ ∈ U_α.
pub fn normalize_special(rep: &TameRep) -> Result<NormalForm, TameError> {
    validate(rep)?;
    let ring = rep.group.ring();
    let k = ring.residue_field();
    if rep.group.q() % k.p() == 1 {
        return Err(TameError::NotNormalizable("q is congruent to 1 mod p".into()));
    }
    let mut c = torus_lift(&rep.sigma).map_err(|e| TameError::NotNormalizable(e.to_string()))?;
    let d = rep.sigma.conj(&c);
    let ratio = k.mul(d.entry(0, 0) % k.p(), k.inv(d.entry(1, 1) % k.p()).expect("unit"));
    let qk = rep.group.q() % k.p();
    if ratio != qk && k.inv(ratio) == Some(qk) {
        let w = GroupElem::gl2(ring, [[0, 1], [1, 0]])?;
        c = w.mul(&c);
    }
    let nf = rep.conjugate(&c);
    if !nf.sigma.is_diagonal() {
        return Err(TameError::NotNormalizable("Frobenius image did not diagonalize".into()));
    }
    if !nf.tau.is_upper_unipotent() {
        return Err(TameError::NotNormalizable("inertia image is not in the root group U_α".into()));
    }
    Ok(NormalForm { conjugator: c, rep: nf })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialVerdict {
    pub special: bool,
    /// Raw discrepancy α(A_σ)/q - 1 in Z/p^n; zero iff special.
    pub defect: ZModScalar,
    /// Top-level scalar δ with α(A_σ)/q = 1 - 2δ p^{n-1}, when the discrepancy is divisible by p^{n-1}.
    pub top_defect: Option<u64>,
}

pub fn is_special(rep: &TameRep) -> Result<SpecialVerdict, TameError> {
    let nf = normalize_special(rep)?;
    let ring = rep.group.ring();
    let alpha = root_value(&nf.rep.sigma)?;
    let ratio = ring.mul(alpha, ring.inv(rep.group.q()).expect("q is a unit"));
    let raw = ring.sub(ratio, 1);
    let top = ring.p_pow(ring.n() - 1);
    let top_defect = if raw % top.max(1) == 0 || ring.n() == 1 {
        let k = ring.residue_field();
        let scaled = if ring.n() == 1 { raw } else { raw / top };
        // α/q - 1 = -2δ p^{n-1}
        Some(k.mul(k.neg(scaled % k.p()), k.inv(2).expect("p odd")))
    } else {
        None
    };
    Ok(SpecialVerdict { special: raw == 0, defect: ZModScalar { value: raw, ring }, top_defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RamificationLevel {
    Unramified,
    /// Largest m with A_τ ≡ I mod p^m.
    Level(u32),
}

pub fn ramification_level(rep: &TameRep) -> Result<RamificationLevel, TameError> {
    let n = rep.group.n();
    if rep.tau.is_identity() {
        return Ok(RamificationLevel::Unramified);
    }
    let e = (0..=n).rev().find(|&m| rep.tau.is_identity_mod(m)).unwrap_or(0);
    if e == 0 {
        return Err(TameError::ResiduallyRamified);
    }
    Ok(RamificationLevel::Level(e))
}

/// A free Z/p^n-module of rank r with commuting-up-to-relation actions of σ and τ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharSumModule {
    pub group: TameGroup,
    pub m_sigma: ZModMatrix,
    pub m_tau: ZModMatrix,
    /// Filtration step of each coordinate; F_t spans coordinates with tag <= t.
    pub tags: Option<Vec<u32>>,
}

impl CharSumModule {
    pub fn new(group: TameGroup, m_sigma: ZModMatrix, m_tau: ZModMatrix, tags: Option<Vec<u32>>) -> Result<Self, TameError> {
        let m = CharSumModule { group, m_sigma, m_tau, tags };
        m.validate()?;
        Ok(m)
    }

    pub fn rank(&self) -> usize {
        self.m_sigma.rows()
    }

    pub fn ring(&self) -> Zpn {
        self.group.ring()
    }

    pub fn validate(&self) -> Result<(), TameError> {
        let r = self.rank();
        let ring = self.ring();
        if self.m_sigma.ring() != ring || self.m_tau.ring() != ring {
            return Err(TameError::ModuleMismatch("action matrices and group differ in precision".into()));
        }
        if !self.m_sigma.is_square() || self.m_tau.rows() != r || self.m_tau.cols() != r {
            return Err(TameError::ModuleMismatch("action matrices must be square of equal size".into()));
        }
        let si = self.m_sigma.inverse().ok_or_else(|| TameError::ModuleMismatch("σ action is not invertible".into()))?;
        if !self.m_tau.is_invertible() {
            return Err(TameError::ModuleMismatch("τ action is not invertible".into()));
        }
        let lhs = self.m_sigma.mul(&self.m_tau).mul(&si);
        let rhs = self.m_tau.pow(self.group.q());
        if lhs != rhs {
            return Err(TameError::RelationViolation { defect: lhs.sub(&rhs).to_rows() });
        }
        if let Some(tags) = &self.tags {
            if tags.len() != r {
                return Err(TameError::FiltrationViolation("one tag per coordinate required".into()));
            }
            for (name, m) in [("σ", &self.m_sigma), ("τ", &self.m_tau)] {
                for i in 0..r {
                    for j in 0..r {
                        if tags[j] > tags[i] && m.get(j, i) != 0 {
                            return Err(TameError::FiltrationViolation(format!(
                                "{name} moves coordinate {i} outside its filtration step"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Check τ acts trivially on every graded piece of the filtration.
    pub fn check_unipotent_filtration(&self) -> Result<(), TameError> {
        let tags = self.tags.as_ref().ok_or_else(|| TameError::FiltrationViolation("no filtration given".into()))?;
        let r = self.rank();
        for i in 0..r {
            for j in 0..r {
                if tags[i] == tags[j] && self.m_tau.get(j, i) != u64::from(i == j) {
                    return Err(TameError::FiltrationViolation(format!("τ is not unipotent on step {}", tags[i])));
                }
            }
        }
        Ok(())
    }

    /// One-dimensional module: σ acts by `chi`, τ trivially.
    pub fn character(group: TameGroup, chi: i64) -> Result<Self, TameError> {
        let ring = group.ring();
        Self::new(group, ZModMatrix::diagonal(ring, &[ring.reduce(chi)]), ZModMatrix::identity(ring, 1), Some(vec![0]))
    }

    pub fn trivial(group: TameGroup) -> Result<Self, TameError> {
        Self::character(group, 1)
    }

    pub fn cyclotomic(group: TameGroup) -> Result<Self, TameError> {
        Self::character(group, group.q() as i64)
    }

    /// sl2 with the adjoint action of a rep, basis (H, E, F).
    pub fn adjoint(rep: &TameRep) -> Result<Self, TameError> {
        Self::new(rep.group, adjoint_matrix(&rep.sigma), adjoint_matrix(&rep.tau), None)
    }

    /// The standard two-dimensional module of a rep.
    pub fn standard(rep: &TameRep) -> Result<Self, TameError> {
        Self::new(rep.group, rep.sigma.matrix().clone(), rep.tau.matrix().clone(), None)
    }

    pub fn direct_sum(&self, other: &CharSumModule) -> Result<Self, TameError> {
        if self.group != other.group {
            return Err(TameError::ModuleMismatch("different tame groups".into()));
        }
        let ring = self.ring();
        let (a, b) = (self.rank(), other.rank());
        let block = |x: &ZModMatrix, y: &ZModMatrix| {
            let mut m = ZModMatrix::zeros(ring, a + b, a + b);
            for i in 0..a {
                for j in 0..a {
                    m.set(i, j, x.get(i, j));
                }
            }
            for i in 0..b {
                for j in 0..b {
                    m.set(a + i, a + j, y.get(i, j));
                }
            }
            m
        };
        let tags = match (&self.tags, &other.tags) {
            (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
            _ => None,
        };
        Self::new(self.group, block(&self.m_sigma, &other.m_sigma), block(&self.m_tau, &other.m_tau), tags)
    }

    /// Change of basis v -> P v.
    pub fn conjugate(&self, p: &ZModMatrix) -> Result<Self, TameError> {
        let pi = p.inverse().ok_or_else(|| TameError::ModuleMismatch("basis change is not invertible".into()))?;
        Self::new(self.group, p.mul(&self.m_sigma).mul(&pi), p.mul(&self.m_tau).mul(&pi), None)
    }

    /// Tate dual Hom(M, Z/p^n(κ)) in the dual basis.
    pub fn tate_dual(&self) -> Result<Self, TameError> {
        let q = self.group.q();
        let si = self.m_sigma.inverse().expect("validated module");
        let ti = self.m_tau.inverse().expect("validated module");
        let tags = self.tags.as_ref().map(|t| {
            let top = t.iter().copied().max().unwrap_or(0);
            t.iter().map(|x| top - x).collect()
        });
        Self::new(self.group, si.transpose().scale(q), ti.transpose(), tags)
    }

    /// A seeded random module: a sum of character and unipotent blocks, in a random basis.
    ///
    /// Blocks are characters (σ by a unit, τ by a (q-1)-th root of unity) and
    /// two-dimensional blocks σ = diag(q c, c), τ = [[1, x], [0, 1]].
    pub fn random<R: rand::Rng>(group: TameGroup, max_rank: usize, rng: &mut R) -> Self {
        let ring = group.ring();
        let q = group.q();
        let unit = |rng: &mut R| loop {
            let x = rng.gen_range(1..ring.modulus());
            if ring.is_unit(x) {
                break x;
            }
        };
        let roots: Vec<u64> = (1..ring.modulus()).filter(|&t| ring.is_unit(t) && ring.pow(t, q) == t).collect();
        let target = rng.gen_range(1..=max_rank.max(1));
        let mut module: Option<CharSumModule> = None;
        let mut rank = 0;
        while rank < target {
            let block = if target - rank >= 2 && rng.gen_bool(0.5) {
                let c = unit(rng);
                let sigma = ZModMatrix::diagonal(ring, &[ring.mul(q, c), c]);
                let mut tau = ZModMatrix::identity(ring, 2);
                tau.set(0, 1, rng.gen_range(0..ring.modulus()));
                CharSumModule::new(group, sigma, tau, None)
            } else {
                let chi = match rng.gen_range(0..4) {
                    0 => 1,
                    1 => q,
                    _ => unit(rng),
                };
                let t = roots[rng.gen_range(0..roots.len())];
                CharSumModule::new(group, ZModMatrix::diagonal(ring, &[chi]), ZModMatrix::diagonal(ring, &[t]), None)
            }
            .expect("blocks satisfy the tame relation");
            rank += block.rank();
            module = Some(match module {
                None => block,
                Some(m) => m.direct_sum(&block).expect("same group"),
            });
        }
        let module = module.expect("rank is positive");
        let r = module.rank();
        loop {
            let rows: Vec<Vec<i64>> =
                (0..r).map(|_| (0..r).map(|_| rng.gen_range(0..ring.modulus()) as i64).collect()).collect();
            let p = ZModMatrix::from_rows(ring, &rows).expect("small square matrix");
            if p.is_invertible() {
                return module.conjugate(&p).expect("invertible basis change");
            }
        }
    }

    /// Ensure this module and `other` are mutually dual shapes.
    pub fn same_shape(&self, other: &CharSumModule) -> bool {
        self.group == other.group && self.rank() == other.rank()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        let g = TameGroup::new(5, 2, 2).unwrap();
        let r = g.ring();
        let any = GroupElem::gl2(r, [[3, 7], [1, 3]]).unwrap();
        assert!(TameRep::new(g, any, GroupElem::identity(r)).is_ok());
        assert!(TameRep::special(g, 0, 7).is_ok());
        let bad = TameRep::new(g, GroupElem::identity(r), GroupElem::gl2(r, [[1, 1], [0, 1]]).unwrap());
        assert!(matches!(bad, Err(TameError::RelationViolation { .. })));
    }

    #[test]
    fn nice_examples() {
        let k5 = Zpn::new(5, 1).unwrap();
        let c = nice_check(5, 2, &GroupElem::diag(k5, 2, 1).unwrap()).unwrap();
        assert_eq!(c.root, RootSlot::Upper);
        assert_eq!(
            nice_check(5, 4, &GroupElem::diag(k5, 2, 1).unwrap()),
            Err(TameError::NotNice(NotNiceReason::QIsMinusOne))
        );
        let k7 = Zpn::new(7, 1).unwrap();
        assert_eq!(
            nice_check(7, 2, &GroupElem::diag(k7, 3, 1).unwrap()),
            Err(TameError::NotNice(NotNiceReason::NoRootMatches))
        );
    }

    #[test]
    fn frobenius_examples() {
        let x = suggest_frobenius(11, 5, FrobeniusVariant::LEqualsF, 2).unwrap();
        assert_eq!((x.entry(0, 0), x.entry(1, 1)), (4, 3));
        let y = suggest_frobenius(7, 3, FrobeniusVariant::QuadraticL, 3).unwrap();
        assert_eq!((y.entry(0, 0), y.entry(1, 1)), (3, 5));
        assert!(matches!(
            suggest_frobenius(5, 2, FrobeniusVariant::LEqualsF, 2),
            Err(TameError::IneligibleParameters(_))
        ));
        let z = suggest_frobenius(13, 4, FrobeniusVariant::CycloFour, 2).unwrap();
        assert_eq!((z.entry(0, 0), z.entry(1, 1)), (8, 1));
        assert!(suggest_frobenius(5, 4, FrobeniusVariant::CycloFourDetKappa, 2).is_ok());
    }

    #[test]
    fn hypothesis_examples() {
        let mut p = HypothesisParams { p: Some(11), cyclo_degree: 10, contains_sl2: true, center_order: 2, coxeter_number: 2, ..Default::default() };
        assert!(check_hypotheses(&p).eligible);
        assert_eq!(check_hypotheses(&p).general_bound, Some(false));
        p = HypothesisParams { cyclo_degree: 4, contains_gl2_fp: true, det_is_cyclo_pm1: true, ..Default::default() };
        assert!(check_hypotheses(&p).eligible);
        p = HypothesisParams { cyclo_degree: 2, contains_sl2: true, contains_gl2_fp: true, l_equals_f: true, ..Default::default() };
        assert!(!check_hypotheses(&p).eligible);
    }

    #[test]
    fn normalize_examples() {
        let g = TameGroup::new(5, 2, 2).unwrap();
        let r = g.ring();
        let rep = TameRep::new(g, GroupElem::diag(r, 2, 1).unwrap(), GroupElem::identity(r)).unwrap();
        let nf = normalize_special(&rep).unwrap();
        assert!(nf.conjugator.is_identity());
        assert_eq!(nf.rep, rep);

        // conjugate a special ramified rep by I + p·[[0,1],[1,0]]
        let base = TameRep::special(g, 1, 1).unwrap();
        let c = GroupElem::gl2(r, [[1, 5], [5, 1]]).unwrap();
        let moved = base.conjugate(&c);
        assert!(!moved.sigma.is_diagonal());
        let nf = normalize_special(&moved).unwrap();
        assert!(nf.rep.sigma.is_diagonal());
        assert!(nf.rep.tau.is_upper_unipotent());
        assert_eq!(moved.conjugate(&nf.conjugator), nf.rep);

        let g1 = TameGroup::new(5, 2, 6).unwrap();
        let rep1 = TameRep::new(g1, GroupElem::diag(r, 2, 1).unwrap(), GroupElem::identity(r)).unwrap();
        assert!(matches!(normalize_special(&rep1), Err(TameError::NotNormalizable(_))));
    }

    #[test]
    fn special_and_levels() {
        let g = TameGroup::new(7, 3, 3).unwrap();
        let rep = TameRep::special(g, 2, 1).unwrap();
        let v = is_special(&rep).unwrap();
        assert!(v.special);
        assert_eq!(v.top_defect, Some(0));
        assert_eq!(ramification_level(&rep), Ok(RamificationLevel::Level(2)));
        let twisted = TameRep::new(g, rep.sigma.mul(&crate::gl2::top_level_twist(g.ring())), rep.tau.clone()).unwrap();
        let v = is_special(&twisted).unwrap();
        assert!(!v.special);
        assert_eq!(v.top_defect, Some(1));
        assert!(is_special(&twisted.reduce_to(2).unwrap()).unwrap().special);
        let unram = TameRep::special(g, 3, 1).unwrap();
        assert_eq!(ramification_level(&unram), Ok(RamificationLevel::Unramified));
        let r = g.ring();
        let bad = TameRep { group: g, sigma: GroupElem::identity(r), tau: GroupElem::gl2(r, [[1, 1], [0, 1]]).unwrap(), det_exponent: None };
        assert_eq!(ramification_level(&bad), Err(TameError::ResiduallyRamified));
    }
}
