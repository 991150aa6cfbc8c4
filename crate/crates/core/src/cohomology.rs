//! Cohomology of the tame group from the one-relator complex
//! 0 -> M -> M^2 -> M -> 0 of the relator σ τ σ^{-1} τ^{-q}.
//!
//! A 1-cochain is stored as the pair (a, b) = (f(σ), f(τ)) concatenated into a
//! vector of length 2r. The cocycle condition is f(relator) = 0, i.e.
//! (1 - M_τ^q) a = (Σ_{i<q} M_τ^i - M_σ) b.

use crate::gl2::geometric_sum;
use crate::linalg::{
    self, coordinates_in_span, kernel, quotient_decomposition, quotient_length, span_length, CyclicFactor, ZModMatrix,
};
use crate::tame::{nice_check, CharSumModule, TameError, TameGroup, TameRep};
use crate::zp::Zpn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    #[error("modules are not Tate dual shapes: {0}")]
    ModuleMismatch(String),
    #[error("cochain is not a cocycle")]
    NotACocycle,
    #[error("pairing is degenerate (left kernel {left}, right kernel {right})")]
    DegeneratePairing { left: u32, right: u32 },
    #[error(transparent)]
    Tame(#[from] TameError),
}

/// A 1-cochain (f(σ), f(τ)).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cocycle1 {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl Cocycle1 {
    pub fn from_vec(v: &[u64]) -> Self {
        let r = v.len() / 2;
        Cocycle1 { a: v[..r].to_vec(), b: v[r..].to_vec() }
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.a.iter().chain(&self.b).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohDims {
    pub h0: u32,
    pub h1: u32,
    pub h2: u32,
}

impl CohDims {
    pub fn euler_characteristic(&self) -> i64 {
        self.h0 as i64 - self.h1 as i64 + self.h2 as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionLabel {
    Nq,
    Unramified,
    Full,
    Zero,
    Annihilator,
    Custom,
}

/// A submodule of H^1, given by cocycle generators (coboundaries are implicit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalConditionSubspace {
    pub label: ConditionLabel,
    pub generators: Vec<Vec<u64>>,
}

/// d0: m -> ((M_σ - 1) m, (M_τ - 1) m), a 2r x r matrix.
pub fn d0(m: &CharSumModule) -> ZModMatrix {
    let id = ZModMatrix::identity(m.ring(), m.rank());
    m.m_sigma.sub(&id).vstack(&m.m_tau.sub(&id))
}

/// d1: (a, b) -> (1 - M_τ^q) a - (Σ M_τ^i - M_σ) b, an r x 2r matrix.
pub fn d1(m: &CharSumModule) -> ZModMatrix {
    let ring = m.ring();
    let q = m.group.q();
    let id = ZModMatrix::identity(ring, m.rank());
    let a_part = id.sub(&m.m_tau.pow(q));
    let b_part = m.m_sigma.sub(&geometric_sum(&m.m_tau, q));
    a_part.hstack(&b_part)
}

pub fn cocycles(m: &CharSumModule) -> Vec<Vec<u64>> {
    kernel(&d1(m))
}

pub fn coboundaries(m: &CharSumModule) -> Vec<Vec<u64>> {
    d0(m).columns()
}

pub fn is_cocycle(m: &CharSumModule, f: &[u64]) -> bool {
    d1(m).mul_vec(f).iter().all(|&x| x == 0)
}

pub fn is_coboundary(m: &CharSumModule, f: &[u64]) -> bool {
    linalg::in_span(m.ring(), 2 * m.rank(), &coboundaries(m), f)
}

pub fn invariants(m: &CharSumModule) -> Vec<Vec<u64>> {
    kernel(&d0(m))
}

pub fn cohomology_dims(m: &CharSumModule) -> CohDims {
    let ring = m.ring();
    let r = m.rank();
    let h0 = span_length(ring, r, &invariants(m));
    let h1 = quotient_length(ring, 2 * r, &cocycles(m), &coboundaries(m));
    let h2 = linalg::cokernel_length(&d1(m));
    CohDims { h0, h1, h2 }
}

/// Cyclic decomposition of H^1(M) with cocycle representatives.
pub fn h1_basis(m: &CharSumModule) -> Vec<CyclicFactor> {
    quotient_decomposition(m.ring(), 2 * m.rank(), &cocycles(m), &coboundaries(m))
}

/// Length of a subspace of H^1.
pub fn subspace_length(m: &CharSumModule, l: &LocalConditionSubspace) -> u32 {
    quotient_length(m.ring(), 2 * m.rank(), &l.generators, &coboundaries(m))
}

/// Is the class of `f` in the subspace?
pub fn class_in_subspace(m: &CharSumModule, l: &LocalConditionSubspace, f: &[u64]) -> bool {
    let mut gens = l.generators.clone();
    gens.extend(coboundaries(m));
    linalg::in_span(m.ring(), 2 * m.rank(), &gens, f)
}

pub fn full_subspace(m: &CharSumModule) -> LocalConditionSubspace {
    LocalConditionSubspace { label: ConditionLabel::Full, generators: cocycles(m) }
}

pub fn zero_subspace() -> LocalConditionSubspace {
    LocalConditionSubspace { label: ConditionLabel::Zero, generators: Vec::new() }
}

/// Classes representable with τ-value zero.
pub fn unramified_subspace(m: &CharSumModule) -> LocalConditionSubspace {
    let ring = m.ring();
    let r = m.rank();
    let fixed = kernel(&ZModMatrix::identity(ring, r).sub(&m.m_tau.pow(m.group.q())));
    let generators = fixed
        .into_iter()
        .map(|a| a.into_iter().chain(std::iter::repeat(0).take(r)).collect())
        .collect();
    LocalConditionSubspace { label: ConditionLabel::Unramified, generators }
}

/// Classes represented by cocycles valued in the submodule spanned by `w`.
pub fn subspace_valued_in(m: &CharSumModule, w: &[Vec<u64>]) -> LocalConditionSubspace {
    let ring = m.ring();
    let r = m.rank();
    if w.is_empty() {
        return LocalConditionSubspace { label: ConditionLabel::Custom, generators: Vec::new() };
    }
    let k = w.len();
    let wm = ZModMatrix::from_columns(ring, r, w);
    // cochain (W x, W y) for x, y in (Z/p^n)^k
    let zero = ZModMatrix::zeros(ring, r, k);
    let embed = wm.hstack(&zero).vstack(&zero.hstack(&wm));
    let generators = kernel(&d1(m).mul(&embed)).into_iter().map(|xy| embed.mul_vec(&xy)).collect();
    LocalConditionSubspace { label: ConditionLabel::Custom, generators }
}

/// The κ-isotypic inertia-fixed submodule ker(M_σ - q) ∩ ker(M_τ - 1).
pub fn cyclotomic_fixed_line(m: &CharSumModule) -> Vec<Vec<u64>> {
    let ring = m.ring();
    let r = m.rank();
    let id = ZModMatrix::identity(ring, r);
    let stacked = m.m_sigma.sub(&id.scale(m.group.q())).vstack(&m.m_tau.sub(&id));
    kernel(&stacked)
}

/// N_q for a module at a nice prime: classes valued in W = g_α (the GL2 case has t_α ∩ sl2 = 0).
pub fn local_condition_nq_module(m: &CharSumModule) -> LocalConditionSubspace {
    let mut l = subspace_valued_in(m, &cyclotomic_fixed_line(m));
    l.label = ConditionLabel::Nq;
    l
}

/// N_q inside H^1(Γ_q, sl2) for a rep whose Frobenius is nice.
pub fn local_condition_nq(rep: &TameRep) -> Result<(CharSumModule, LocalConditionSubspace), CohomologyError> {
    let k = rep.group.ring().residue_field();
    nice_check(k.p(), rep.group.q() as i64, &rep.sigma.reduce_to(k))?;
    let m = CharSumModule::adjoint(rep)?;
    let l = local_condition_nq_module(&m);
    Ok((m, l))
}

/// Bilinear form B on cochains with cup_inv(f, φ) = f^T B φ.
///
/// The 2-cocycle c(g, h) = <f(g), g φ(h)> is trivialized on the free group by
/// e(w x) = e(w) + κ(w) e(x) - c(w, x), with e = 0 on generators. The class in
/// H^2(Z/p^n(κ)) is e(relator); the differential into that H^2 is zero because
/// σ acts on Z/p^n(κ) by q and τ trivially, so no further reduction is needed.
pub fn cup_form(m: &CharSumModule, md: &CharSumModule) -> Result<ZModMatrix, CohomologyError> {
    if !m.same_shape(md) {
        return Err(CohomologyError::ModuleMismatch("rank or tame group differs".into()));
    }
    let ring = m.ring();
    let r = m.rank();
    let q = m.group.q();
    let id = ZModMatrix::identity(ring, r);
    let zero = ZModMatrix::zeros(ring, r, r);
    // evaluation maps cochain -> value on a generator
    let ev_sigma = id.hstack(&zero);
    let ev_tau = zero.hstack(&id);
    let s_inv = m.m_sigma.inverse().expect("valid module");
    let sd_inv = md.m_sigma.inverse().expect("valid module");
    let t_inv = m.m_tau.inverse().expect("valid module");
    let td_inv = md.m_tau.inverse().expect("valid module");
    let q_inv = ring.inv(q).expect("q is a unit");

    struct Letter<'a> {
        act: &'a ZModMatrix,
        act_dual: &'a ZModMatrix,
        kappa: u64,
        f_val: ZModMatrix,
        phi_val: ZModMatrix,
        /// bilinear matrix of e(letter)
        e_val: ZModMatrix,
    }
    let zero_form = ZModMatrix::zeros(ring, 2 * r, 2 * r);
    let neg = |x: &ZModMatrix| x.scale(ring.neg(1));
    // e(g^{-1}) = -κ(g)^{-1} <f(g), φ(g)>
    let inverse_e = |ev: &ZModMatrix, kappa_inv: u64| neg(&ev.transpose().mul(ev)).scale(kappa_inv);
    let sigma = Letter { act: &m.m_sigma, act_dual: &md.m_sigma, kappa: q, f_val: ev_sigma.clone(), phi_val: ev_sigma.clone(), e_val: zero_form.clone() };
    let tau = Letter { act: &m.m_tau, act_dual: &md.m_tau, kappa: 1, f_val: ev_tau.clone(), phi_val: ev_tau.clone(), e_val: zero_form.clone() };
    let sigma_inv = Letter {
        act: &s_inv,
        act_dual: &sd_inv,
        kappa: q_inv,
        f_val: neg(&s_inv.mul(&ev_sigma)),
        phi_val: neg(&sd_inv.mul(&ev_sigma)),
        e_val: inverse_e(&ev_sigma, q_inv),
    };
    let tau_inv = Letter {
        act: &t_inv,
        act_dual: &td_inv,
        kappa: 1,
        f_val: neg(&t_inv.mul(&ev_tau)),
        phi_val: neg(&td_inv.mul(&ev_tau)),
        e_val: inverse_e(&ev_tau, 1),
    };

    let mut w = id.clone();
    let mut w_dual = id.clone();
    let mut kappa = 1u64;
    let mut f_w = ZModMatrix::zeros(ring, r, 2 * r);
    let mut e = zero_form;
    let mut step = |x: &Letter| {
        // e(w x) = e(w) + κ(w) e(x) - f(w)^T W* φ(x)
        let cross = f_w.transpose().mul(&w_dual.mul(&x.phi_val));
        e = e.add(&x.e_val.scale(kappa)).sub(&cross);
        f_w = f_w.add(&w.mul(&x.f_val));
        w = w.mul(x.act);
        w_dual = w_dual.mul(x.act_dual);
        kappa = ring.mul(kappa, x.kappa);
    };
    step(&sigma);
    step(&tau);
    step(&sigma_inv);
    for _ in 0..q {
        step(&tau_inv);
    }
    Ok(e)
}

/// inv(f ∪ φ) for f a cocycle of M and φ a cocycle of its Tate dual.
pub fn cup_inv(m: &CharSumModule, md: &CharSumModule, f: &[u64], phi: &[u64]) -> Result<u64, CohomologyError> {
    if !is_cocycle(m, f) || !is_cocycle(md, phi) {
        return Err(CohomologyError::NotACocycle);
    }
    let b = cup_form(m, md)?;
    Ok(linalg::dot(m.ring(), f, &b.mul_vec(phi)))
}

/// The H^2 of Z/p^n(κ) in the cokernel model.
pub fn cyclotomic_h2_length(group: TameGroup) -> Result<u32, CohomologyError> {
    Ok(cohomology_dims(&CharSumModule::cyclotomic(group)?).h2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingReport {
    pub h1: u32,
    pub h1_dual: u32,
    pub left_kernel: u32,
    pub right_kernel: u32,
    pub exponents: Vec<u32>,
    pub dual_exponents: Vec<u32>,
    pub perfect: bool,
}

/// Matrix of cup_inv between cyclic generators of H^1(M) and H^1(M*).
pub fn pairing_matrix(
    m: &CharSumModule,
    md: &CharSumModule,
) -> Result<(Vec<CyclicFactor>, Vec<CyclicFactor>, ZModMatrix), CohomologyError> {
    let ring = m.ring();
    let b = cup_form(m, md)?;
    let left = h1_basis(m);
    let right = h1_basis(md);
    let mut p = ZModMatrix::zeros(ring, left.len().max(1), right.len().max(1));
    for (i, x) in left.iter().enumerate() {
        let bx = b.transpose().mul_vec(&x.generator);
        for (j, y) in right.iter().enumerate() {
            p.set(i, j, linalg::dot(ring, &bx, &y.generator));
        }
    }
    Ok((left, right, p))
}

/// Length of the kernel of ⊕ Z/p^{e_i} -> Hom(⊕ Z/p^{f_j}, Z/p^n) given by the rows of `p`.
fn pairing_kernel_length(ring: Zpn, p: &ZModMatrix, exps: &[u32]) -> u32 {
    if exps.is_empty() {
        return 0;
    }
    let n = ring.n();
    let t = p.transpose();
    let t = if t.cols() > exps.len() {
        ZModMatrix::from_columns(ring, t.rows(), &t.columns()[..exps.len()])
    } else {
        t
    };
    let ker = kernel(&t);
    let free_kernel = span_length(ring, exps.len(), &ker);
    let relations: u32 = exps.iter().map(|&e| n - e).sum();
    free_kernel - relations
}

pub fn check_pairing(m: &CharSumModule, md: &CharSumModule) -> Result<PairingReport, CohomologyError> {
    let ring = m.ring();
    let (left, right, p) = pairing_matrix(m, md)?;
    let le: Vec<u32> = left.iter().map(|f| f.exponent).collect();
    let re: Vec<u32> = right.iter().map(|f| f.exponent).collect();
    let left_kernel = pairing_kernel_length(ring, &p, &le);
    let right_kernel = pairing_kernel_length(ring, &p.transpose(), &re);
    let h1: u32 = le.iter().sum();
    let h1_dual: u32 = re.iter().sum();
    Ok(PairingReport {
        h1,
        h1_dual,
        left_kernel,
        right_kernel,
        perfect: left_kernel == 0 && right_kernel == 0 && h1 == h1_dual,
        exponents: le,
        dual_exponents: re,
    })
}

/// L^⊥ inside H^1(M*).
pub fn annihilator(
    m: &CharSumModule,
    md: &CharSumModule,
    l: &LocalConditionSubspace,
) -> Result<LocalConditionSubspace, CohomologyError> {
    let ring = m.ring();
    let b = cup_form(m, md)?;
    let right = h1_basis(md);
    let mut generators = Vec::new();
    if !right.is_empty() {
        let gens: Vec<&Vec<u64>> = l.generators.iter().collect();
        let rows = gens.len().max(1);
        let mut q = ZModMatrix::zeros(ring, rows, right.len());
        for (i, f) in gens.iter().enumerate() {
            let bf = b.transpose().mul_vec(f);
            for (j, y) in right.iter().enumerate() {
                q.set(i, j, linalg::dot(ring, &bf, &y.generator));
            }
        }
        for d in kernel(&q) {
            let mut v = vec![0u64; 2 * md.rank()];
            for (j, y) in right.iter().enumerate() {
                v = linalg::vec_add(ring, &v, &linalg::vec_scale(ring, &y.generator, d[j]));
            }
            generators.push(v);
        }
    }
    let perp = LocalConditionSubspace { label: ConditionLabel::Annihilator, generators };
    let total = cohomology_dims(m).h1;
    let (a, b_len) = (subspace_length(m, l), subspace_length(md, &perp));
    if a + b_len != total {
        return Err(CohomologyError::DegeneratePairing { left: a, right: b_len });
    }
    Ok(perp)
}

/// Coordinates of a class of H^1 in a chosen cyclic basis, or None if not a cocycle.
pub fn class_coordinates(m: &CharSumModule, basis: &[CyclicFactor], f: &[u64]) -> Option<Vec<u64>> {
    let mut gens: Vec<Vec<u64>> = basis.iter().map(|c| c.generator.clone()).collect();
    let k = gens.len();
    gens.extend(coboundaries(m));
    coordinates_in_span(m.ring(), 2 * m.rank(), &gens, f).map(|c| c[..k].to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VAlphaReport {
    pub v_exponents: Vec<u32>,
    pub w_exponents: Vec<u32>,
    /// Exponents of H^1(V_α) / image of H^1(g_α).
    pub cotangent_exponents: Vec<u32>,
}

/// W_α for a GL3 emulation: root spaces (e1-e3, e2-e3, e3-e1, e3-e2) under
/// σ = diag(λ1, λ2, λ3) with λ1/λ2 = q, λ2/λ3 = c, and τ = exp(u E12).
pub fn gl3_extra_roots(group: TameGroup, c: u64, u: u64) -> Result<CharSumModule, TameError> {
    let ring = group.ring();
    let q = group.q();
    let qc = ring.mul(q, c);
    let inv = |x: u64| ring.inv(x).ok_or(TameError::InvalidQ(x));
    // every root character must avoid 1 and κ mod p
    let k = ring.residue_field();
    let chars = [qc, c, inv(qc)?, inv(c)?];
    if chars.iter().any(|&x| k.reduce_u(x) == 1 || k.reduce_u(x) == k.reduce_u(q)) {
        return Err(TameError::IneligibleParameters("a root character of W_α is trivial or cyclotomic".into()));
    }
    let sigma = ZModMatrix::diagonal(ring, &[qc, c, inv(qc)?, inv(c)?]);
    let mut tau = ZModMatrix::identity(ring, 4);
    tau.set(0, 1, u);
    tau.set(3, 2, ring.neg(u));
    CharSumModule::new(group, sigma, tau, Some(vec![0, 1, 1, 0]))
}

/// A single root pair (β + α, β) under σ = diag(qc, c), τ = exp(u E12); the smallest W_α emulation.
pub fn root_pair(group: TameGroup, c: u64, u: u64) -> Result<CharSumModule, TameError> {
    let ring = group.ring();
    let qc = ring.mul(group.q(), c);
    let k = ring.residue_field();
    if [qc, c].iter().any(|&x| k.reduce_u(x) == 1 || k.reduce_u(x) == k.reduce_u(group.q())) {
        return Err(TameError::IneligibleParameters("a root character of W_α is trivial or cyclotomic".into()));
    }
    let mut tau = ZModMatrix::identity(ring, 2);
    tau.set(0, 1, u);
    CharSumModule::new(group, ZModMatrix::diagonal(ring, &[qc, c]), tau, Some(vec![0, 1]))
}

/// H^1 of V_α = sl2 under a special rep of ramification level m, and of a W_α module.
pub fn v_alpha_h1(group: TameGroup, m: u32, w_alpha: &CharSumModule) -> Result<VAlphaReport, CohomologyError> {
    w_alpha.check_unipotent_filtration()?;
    if w_alpha.group != group {
        return Err(CohomologyError::ModuleMismatch("W_α lives over a different tame group".into()));
    }
    let rep = TameRep::special(group, m.min(group.n()), 1)?;
    let v = CharSumModule::adjoint(&rep)?;
    let nq = local_condition_nq_module(&v);
    let ring = v.ring();
    let mut rel = nq.generators.clone();
    rel.extend(coboundaries(&v));
    let cot = quotient_decomposition(ring, 6, &cocycles(&v), &rel);
    Ok(VAlphaReport {
        v_exponents: h1_basis(&v).iter().map(|f| f.exponent).collect(),
        w_exponents: h1_basis(w_alpha).iter().map(|f| f.exponent).collect(),
        cotangent_exponents: cot.iter().map(|f| f.exponent).collect(),
    })
}

/// Lengths of the images of N_{q,n} and of H^1 under the coefficient inclusion
/// V/p^n -> V/p^N (multiplication by p^{N-n}), for the special rep of level m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionImage {
    pub n: u32,
    pub big: u32,
    pub nq_image: u32,
    pub h1_image: u32,
}

pub fn inclusion_image(big: TameGroup, m: u32, n: u32) -> Result<InclusionImage, CohomologyError> {
    let rep_big = TameRep::special(big, m.min(big.n()), 1)?;
    let rep_small = rep_big.reduce_to(n)?;
    let v_big = CharSumModule::adjoint(&rep_big)?;
    let v_small = CharSumModule::adjoint(&rep_small)?;
    let ring = big.ring();
    let shift = ring.p_pow(big.n() - n);
    let push = |gens: Vec<Vec<u64>>| -> Vec<Vec<u64>> {
        gens.into_iter().map(|v| v.iter().map(|&x| ring.mul(x, shift)).collect()).collect()
    };
    let nq = push(local_condition_nq_module(&v_small).generators);
    let all = push(cocycles(&v_small));
    let bd = coboundaries(&v_big);
    Ok(InclusionImage {
        n,
        big: big.n(),
        nq_image: quotient_length(ring, 6, &nq, &bd),
        h1_image: quotient_length(ring, 6, &all, &bd),
    })
}

/// Exhaustive check of the pairing shape at a nice prime, mod p with Frob = diag(q, 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NicePairingReport {
    pub p: u64,
    pub q: u64,
    /// γ_f for each nonzero multiple of the ramified generator of N_q
    pub gammas: Vec<u64>,
    pub pairs_checked: usize,
    /// cup(f, φ) = γ_f φ(Frob) for ramified f in N_q and unramified φ
    pub linear_in_frobenius: bool,
    /// unramified classes pair to zero
    pub unramified_isotropic: bool,
    /// after one rescaling of a ramified φ, cup(f, φ) = f(Frob) for unramified f
    pub scaled_evaluation: bool,
}

fn all_combinations(ring: Zpn, gens: &[Vec<u64>], len: usize) -> Vec<Vec<u64>> {
    let mut out = vec![vec![0u64; len]];
    for g in gens {
        let mut next = Vec::with_capacity(out.len() * ring.modulus() as usize);
        for v in &out {
            for c in 0..ring.modulus() {
                next.push(linalg::vec_add(ring, v, &linalg::vec_scale(ring, g, c)));
            }
        }
        out = next;
    }
    out
}

pub fn nice_pairing_check(p: u64, q: i64) -> Result<NicePairingReport, CohomologyError> {
    let group = TameGroup::new(p, 1, q)?;
    let ring = group.ring();
    let rep = TameRep::special(group, 1, 1)?;
    let (m, nq) = local_condition_nq(&rep)?;
    let md = m.tate_dual()?;
    let b = cup_form(&m, &md)?;
    let cup = |f: &[u64], phi: &[u64]| linalg::dot(ring, f, &b.mul_vec(phi));
    let bd = coboundaries(&m);
    let bd_dual = coboundaries(&md);
    // coordinates: (h, e, f) on sl2 and the dual basis on sl2*; Frob acts through σ
    let f_frob = |f: &[u64]| f[0];
    let phi_frob = |phi: &[u64]| phi[1];
    let nr = unramified_subspace(&m);
    let nr_dual = unramified_subspace(&md);
    let with_bd = |gens: &[Vec<u64>], bd: &[Vec<u64>], len: usize| {
        let mut all = gens.to_vec();
        all.extend(bd.iter().cloned());
        let minimal: Vec<Vec<u64>> = quotient_decomposition(ring, len, &all, &[]).into_iter().map(|c| c.generator).collect();
        all_combinations(ring, &minimal, len)
    };
    let f_ram: Vec<Vec<u64>> = with_bd(&nq.generators, &bd, 6).into_iter().filter(|f| f[3..].iter().any(|&x| x != 0)).collect();
    let f_nr = with_bd(&nr.generators, &bd, 6);
    let phi_nr = with_bd(&nr_dual.generators, &bd_dual, 6);
    let mut pairs = 0;
    let mut gammas = Vec::new();
    let mut linear = true;
    for f in &f_ram {
        let base = phi_nr.iter().find(|phi| phi_frob(phi) == 1).expect("unramified dual class with unit Frobenius value");
        let gamma = cup(f, base);
        if !ring.is_unit(gamma) {
            linear = false;
        }
        if !gammas.contains(&gamma) {
            gammas.push(gamma);
        }
        for phi in &phi_nr {
            pairs += 1;
            linear &= cup(f, phi) == ring.mul(gamma, phi_frob(phi));
        }
    }
    let mut isotropic = true;
    for f in &f_nr {
        for phi in &phi_nr {
            pairs += 1;
            isotropic &= cup(f, phi) == 0;
        }
    }
    // ramified dual class valued in the κ-isotypic line of sl2*
    let ram_dual = local_condition_nq_module(&md);
    let phi_ram = ram_dual.generators.iter().find(|phi| phi[3..].iter().any(|&x| x != 0)).cloned();
    let mut scaled = false;
    if let Some(phi) = phi_ram {
        let f0 = f_nr.iter().find(|f| f_frob(f) == 1).expect("unramified class with unit Frobenius value");
        if let Some(s) = ring.inv(cup(f0, &phi)) {
            let phi = linalg::vec_scale(ring, &phi, s);
            scaled = f_nr.iter().all(|f| cup(f, &phi) == f_frob(f));
            pairs += f_nr.len();
        }
    }
    gammas.sort_unstable();
    Ok(NicePairingReport {
        p,
        q: group.q(),
        gammas,
        pairs_checked: pairs,
        linear_in_frobenius: linear,
        unramified_isotropic: isotropic,
        scaled_evaluation: scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl2::GroupElem;

    fn g(p: u64, n: u32, q: i64) -> TameGroup {
        TameGroup::new(p, n, q).unwrap()
    }

    #[test]
    fn character_table() {
        let grp = g(5, 1, 2);
        assert_eq!(cohomology_dims(&CharSumModule::trivial(grp).unwrap()), CohDims { h0: 1, h1: 1, h2: 0 });
        assert_eq!(cohomology_dims(&CharSumModule::cyclotomic(grp).unwrap()), CohDims { h0: 0, h1: 1, h2: 1 });
        let rep = TameRep::new(grp, GroupElem::diag(grp.ring(), 2, 1).unwrap(), GroupElem::identity(grp.ring())).unwrap();
        let ad = CharSumModule::adjoint(&rep).unwrap();
        assert_eq!(cohomology_dims(&ad), CohDims { h0: 1, h1: 2, h2: 1 });
    }

    #[test]
    fn unramified_dimensions() {
        let grp = g(5, 1, 2);
        let triv = CharSumModule::trivial(grp).unwrap();
        assert_eq!(subspace_length(&triv, &unramified_subspace(&triv)), 1);
        let cyc = CharSumModule::cyclotomic(grp).unwrap();
        assert_eq!(subspace_length(&cyc, &unramified_subspace(&cyc)), 0);
        let rep = TameRep::special(grp, 1, 1).unwrap();
        let ad = CharSumModule::adjoint(&rep).unwrap();
        let nr = unramified_subspace(&ad);
        assert_eq!(subspace_length(&ad, &nr), 1);
    }

    #[test]
    fn nq_lengths() {
        let (m, l) = local_condition_nq(&TameRep::special(g(5, 1, 2), 1, 1).unwrap()).unwrap();
        assert_eq!(subspace_length(&m, &l), 1);
        let (m, l) = local_condition_nq(&TameRep::special(g(5, 2, 2), 2, 1).unwrap()).unwrap();
        assert_eq!(subspace_length(&m, &l), 2);
        let grp = g(5, 1, 4);
        assert!(local_condition_nq(&TameRep::special(grp, 1, 1).unwrap()).is_err());
    }

    #[test]
    fn h2_of_cyclotomic_has_length_n() {
        for n in 1..=4 {
            assert_eq!(cyclotomic_h2_length(g(7, n, 3)).unwrap(), n);
        }
    }

    #[test]
    fn pairing_is_perfect_on_adjoint() {
        for n in 1..=3 {
            let rep = TameRep::special(g(5, n, 2), 1, 1).unwrap();
            let m = CharSumModule::adjoint(&rep).unwrap();
            let md = m.tate_dual().unwrap();
            let rep_ = check_pairing(&m, &md).unwrap();
            assert!(rep_.perfect, "{rep_:?}");
        }
    }

    #[test]
    fn annihilator_examples() {
        let rep = TameRep::special(g(5, 1, 2), 1, 1).unwrap();
        let m = CharSumModule::adjoint(&rep).unwrap();
        let md = m.tate_dual().unwrap();
        let full = annihilator(&m, &md, &full_subspace(&m)).unwrap();
        assert_eq!(subspace_length(&md, &full), 0);
        let nr = annihilator(&m, &md, &unramified_subspace(&m)).unwrap();
        assert_eq!(subspace_length(&md, &nr), 1);
        let nq = annihilator(&m, &md, &local_condition_nq_module(&m)).unwrap();
        assert_eq!(subspace_length(&md, &nq), 1);
    }

    #[test]
    fn lemma_w_lengths() {
        for (m, n) in [(1, 2), (2, 3), (1, 3), (2, 2)] {
            let grp = g(7, n, 3);
            let w = gl3_extra_roots(grp, 2, grp.ring().p_pow(m)).unwrap();
            let rep = v_alpha_h1(grp, m, &w).unwrap();
            assert_eq!(rep.v_exponents, vec![m, m], "m={m} n={n}");
            assert!(rep.w_exponents.is_empty());
            assert_eq!(rep.cotangent_exponents, vec![m]);
        }
        assert!(gl3_extra_roots(g(5, 2, 2), 3, 5).is_err());
        for m in 1..=2 {
            for n in m..=3 {
                let grp = g(5, n, 2);
                let w = root_pair(grp, 4, grp.ring().p_pow(m)).unwrap();
                let rep = v_alpha_h1(grp, m, &w).unwrap();
                assert_eq!(rep.v_exponents, vec![m, m]);
                assert!(rep.w_exponents.is_empty());
            }
        }
        assert!(root_pair(g(5, 1, 2), 1, 1).is_err());
    }

    #[test]
    fn nice_pairing_shape() {
        for (p, q) in [(5, 2), (5, 3), (7, 3), (7, 5)] {
            let r = nice_pairing_check(p, q).unwrap();
            assert!(r.linear_in_frobenius && r.unramified_isotropic && r.scaled_evaluation, "{r:?}");
            assert!(r.pairs_checked > 0);
        }
    }

    #[test]
    fn divisible_limit() {
        for m in 1..=2u32 {
            for n in m..=4u32 {
                let img = inclusion_image(g(5, n, 2), m, n).unwrap();
                assert_eq!((img.nq_image, img.h1_image), (m, 2 * m));
                let img = inclusion_image(g(5, n + m, 2), m, n).unwrap();
                assert_eq!((img.nq_image, img.h1_image), (0, m));
            }
        }
    }
}
