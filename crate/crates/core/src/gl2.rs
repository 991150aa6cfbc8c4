//! GL2 and SL2 over Z/p^n, the adjoint module sl2, and first-order adjustments.

use crate::linalg::ZModMatrix;
use crate::zp::Zpn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gl2Error {
    #[error("matrix is not 2x2")]
    NotTwoByTwo,
    #[error("determinant {0} is not a unit")]
    NotInvertible(u64),
    #[error("SL2 element has determinant {0}")]
    DeterminantNotOne(u64),
    #[error("element is not regular semisimple with eigenvalues in F_p")]
    NotRegular,
    #[error("element is not diagonal")]
    NotDiagonal,
    #[error("adjustment is not a cocycle; relation defect {defect:?}")]
    CocycleViolation { defect: [u64; 3] },
    #[error("adjustment level must be at least 2, got {0}")]
    LevelTooLow(u32),
    #[error("images live mod p^{got}, expected mod p^{expected}")]
    LevelMismatch { got: u32, expected: u32 },
    #[error("matrix is not trace zero")]
    NotTraceZero,
    #[error("incompatible coefficient rings")]
    RingMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    GL2,
    SL2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElem {
    matrix: ZModMatrix,
    flavor: Flavor,
}

impl GroupElem {
    pub fn new(matrix: ZModMatrix, flavor: Flavor) -> Result<Self, Gl2Error> {
        if matrix.rows() != 2 || matrix.cols() != 2 {
            return Err(Gl2Error::NotTwoByTwo);
        }
        let ring = matrix.ring();
        let d = det2(&matrix);
        if !ring.is_unit(d) {
            return Err(Gl2Error::NotInvertible(d));
        }
        if flavor == Flavor::SL2 && d != 1 {
            return Err(Gl2Error::DeterminantNotOne(d));
        }
        Ok(GroupElem { matrix, flavor })
    }

    /// GL2 element from signed entries [[a, b], [c, d]].
    pub fn gl2(ring: Zpn, entries: [[i64; 2]; 2]) -> Result<Self, Gl2Error> {
        Self::new(mat2(ring, entries), Flavor::GL2)
    }

    pub fn sl2(ring: Zpn, entries: [[i64; 2]; 2]) -> Result<Self, Gl2Error> {
        Self::new(mat2(ring, entries), Flavor::SL2)
    }

    pub fn identity(ring: Zpn) -> Self {
        GroupElem { matrix: ZModMatrix::identity(ring, 2), flavor: Flavor::GL2 }
    }

    pub fn diag(ring: Zpn, a: u64, b: u64) -> Result<Self, Gl2Error> {
        Self::new(ZModMatrix::diagonal(ring, &[a, b]), Flavor::GL2)
    }

    pub fn matrix(&self) -> &ZModMatrix {
        &self.matrix
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn ring(&self) -> Zpn {
        self.matrix.ring()
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.matrix.get(i, j)
    }

    pub fn det(&self) -> u64 {
        det2(&self.matrix)
    }

    pub fn mul(&self, other: &GroupElem) -> GroupElem {
        let flavor = if self.flavor == Flavor::SL2 && other.flavor == Flavor::SL2 { Flavor::SL2 } else { Flavor::GL2 };
        GroupElem { matrix: self.matrix.mul(&other.matrix), flavor }
    }

    pub fn inv(&self) -> GroupElem {
        let r = self.ring();
        let d_inv = r.inv(self.det()).expect("group element has unit determinant");
        let m = &self.matrix;
        let adj = mat2u(r, [[m.get(1, 1), r.neg(m.get(0, 1))], [r.neg(m.get(1, 0)), m.get(0, 0)]]);
        GroupElem { matrix: adj.scale(d_inv), flavor: self.flavor }
    }

    pub fn pow(&self, e: u64) -> GroupElem {
        GroupElem { matrix: self.matrix.pow(e), flavor: self.flavor }
    }

    pub fn conj(&self, by: &GroupElem) -> GroupElem {
        by.mul(self).mul(&by.inv())
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == ZModMatrix::identity(self.ring(), 2)
    }

    pub fn is_diagonal(&self) -> bool {
        self.entry(0, 1) == 0 && self.entry(1, 0) == 0
    }

    /// Is the element in the upper unipotent group U_α?
    pub fn is_upper_unipotent(&self) -> bool {
        self.entry(0, 0) == 1 && self.entry(1, 1) == 1 && self.entry(1, 0) == 0
    }

    /// Reduce into Z/p^m for m <= n.
    pub fn reduce_to(&self, target: Zpn) -> GroupElem {
        GroupElem { matrix: self.matrix.reduce_to(target), flavor: self.flavor }
    }

    /// Is the element congruent to the identity mod p^m?
    pub fn is_identity_mod(&self, m: u32) -> bool {
        let r = self.ring();
        if m == 0 {
            return true;
        }
        let pm = r.p().pow(m.min(r.n()));
        (0..2).all(|i| (0..2).all(|j| {
            let target = u64::from(i == j);
            (self.entry(i, j) + pm - target % pm) % pm == 0
        }))
    }

    /// Multiplicative order if at most `bound`.
    pub fn order(&self, bound: u64) -> Option<u64> {
        let mut acc = self.clone();
        for k in 1..=bound {
            if acc.is_identity() {
                return Some(k);
            }
            acc = acc.mul(self);
        }
        None
    }
}

pub fn det2(m: &ZModMatrix) -> u64 {
    let r = m.ring();
    r.sub(r.mul(m.get(0, 0), m.get(1, 1)), r.mul(m.get(0, 1), m.get(1, 0)))
}

pub fn mat2(ring: Zpn, e: [[i64; 2]; 2]) -> ZModMatrix {
    ZModMatrix::from_rows(ring, &[e[0].to_vec(), e[1].to_vec()]).expect("2x2 shape")
}

fn mat2u(ring: Zpn, e: [[u64; 2]; 2]) -> ZModMatrix {
    ZModMatrix::from_row_vectors(ring, 2, &[e[0].to_vec(), e[1].to_vec()])
}

/// Element of sl2 in the basis H = diag(1,-1), E = upper nilpotent, F = lower nilpotent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdjointVector {
    pub h: u64,
    pub e: u64,
    pub f: u64,
    pub ring: Zpn,
}

impl AdjointVector {
    pub fn new(ring: Zpn, h: i64, e: i64, f: i64) -> Self {
        AdjointVector { h: ring.reduce(h), e: ring.reduce(e), f: ring.reduce(f), ring }
    }

    pub fn zero(ring: Zpn) -> Self {
        Self::new(ring, 0, 0, 0)
    }

    pub fn h_basis(ring: Zpn) -> Self {
        Self::new(ring, 1, 0, 0)
    }

    pub fn e_basis(ring: Zpn) -> Self {
        Self::new(ring, 0, 1, 0)
    }

    pub fn f_basis(ring: Zpn) -> Self {
        Self::new(ring, 0, 0, 1)
    }

    pub fn coords(&self) -> [u64; 3] {
        [self.h, self.e, self.f]
    }

    pub fn from_coords(ring: Zpn, c: &[u64]) -> Self {
        AdjointVector { h: ring.reduce_u(c[0]), e: ring.reduce_u(c[1]), f: ring.reduce_u(c[2]), ring }
    }

    pub fn to_matrix(&self) -> ZModMatrix {
        let r = self.ring;
        mat2u(r, [[self.h, self.e], [self.f, r.neg(self.h)]])
    }

    pub fn from_matrix(m: &ZModMatrix) -> Result<Self, Gl2Error> {
        let r = m.ring();
        if r.add(m.get(0, 0), m.get(1, 1)) != 0 {
            return Err(Gl2Error::NotTraceZero);
        }
        Ok(AdjointVector { h: m.get(0, 0), e: m.get(0, 1), f: m.get(1, 0), ring: r })
    }

    pub fn add(&self, o: &AdjointVector) -> AdjointVector {
        let r = self.ring;
        AdjointVector { h: r.add(self.h, o.h), e: r.add(self.e, o.e), f: r.add(self.f, o.f), ring: r }
    }

    pub fn scale(&self, c: u64) -> AdjointVector {
        let r = self.ring;
        AdjointVector { h: r.mul(self.h, c), e: r.mul(self.e, c), f: r.mul(self.f, c), ring: r }
    }

    pub fn is_zero(&self) -> bool {
        self.h == 0 && self.e == 0 && self.f == 0
    }

    pub fn reduce_to(&self, target: Zpn) -> AdjointVector {
        AdjointVector::from_coords(target, &self.coords())
    }
}

/// g v g^{-1}.
pub fn adjoint_act(g: &GroupElem, v: &AdjointVector) -> AdjointVector {
    let m = g.matrix().mul(&v.to_matrix()).mul(g.inv().matrix());
    AdjointVector::from_matrix(&m).expect("conjugation preserves trace")
}

/// Matrix of Ad(g) on sl2 in the (H, E, F) basis; columns are images of basis vectors.
pub fn adjoint_matrix(g: &GroupElem) -> ZModMatrix {
    let r = g.ring();
    let cols: Vec<Vec<u64>> = [AdjointVector::h_basis(r), AdjointVector::e_basis(r), AdjointVector::f_basis(r)]
        .iter()
        .map(|b| adjoint_act(g, b).coords().to_vec())
        .collect();
    ZModMatrix::from_columns(r, 3, &cols)
}

/// A cocycle on the tame generators with values in sl2 over F_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjustmentClass {
    pub sigma: AdjointVector,
    pub tau: AdjointVector,
}

impl AdjustmentClass {
    pub fn new(sigma: AdjointVector, tau: AdjointVector) -> Self {
        AdjustmentClass { sigma, tau }
    }

    pub fn negate(&self) -> Self {
        let r = self.sigma.ring;
        AdjustmentClass { sigma: self.sigma.scale(r.neg(1)), tau: self.tau.scale(r.neg(1)) }
    }
}

/// Defect of the tame relation for a cochain (a, b) on (σ, τ) valued in a module
/// with actions `ms`, `mt`: (1 - M_τ^q) a - (Σ_{i<q} M_τ^i - M_σ) b.
pub fn tame_relation_defect(ms: &ZModMatrix, mt: &ZModMatrix, q: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let r = ms.ring();
    let dim = ms.rows();
    let id = ZModMatrix::identity(r, dim);
    let lhs = id.sub(&mt.pow(q)).mul_vec(a);
    let rhs = geometric_sum(mt, q).sub(ms).mul_vec(b);
    crate::linalg::vec_sub(r, &lhs, &rhs)
}

/// Σ_{i<q} M^i, by doubling.
pub fn geometric_sum(m: &ZModMatrix, q: u64) -> ZModMatrix {
    let r = m.ring();
    let dim = m.rows();
    // (S_k, M^k) with S_k = Σ_{i<k} M^i
    let mut acc_sum = ZModMatrix::zeros(r, dim, dim);
    let mut acc_pow = ZModMatrix::identity(r, dim);
    let mut base_sum = ZModMatrix::identity(r, dim);
    let mut base_pow = m.clone();
    let mut e = q;
    while e > 0 {
        if e & 1 == 1 {
            // S_{a+b} = S_a + M^a S_b
            acc_sum = acc_sum.add(&acc_pow.mul(&base_sum));
            acc_pow = acc_pow.mul(&base_pow);
        }
        base_sum = base_sum.add(&base_pow.mul(&base_sum));
        base_pow = base_pow.mul(&base_pow);
        e >>= 1;
    }
    acc_sum
}

/// Replace each generator image γ by (I + p^{m-1} f(γ)) γ, working mod p^m.
pub fn exp_adjust(
    sigma: &GroupElem,
    tau: &GroupElem,
    q: u64,
    f: &AdjustmentClass,
    m: u32,
) -> Result<(GroupElem, GroupElem), Gl2Error> {
    if m < 2 {
        return Err(Gl2Error::LevelTooLow(m));
    }
    let ring = sigma.ring();
    if ring.n() != m || tau.ring() != ring {
        return Err(Gl2Error::LevelMismatch { got: ring.n(), expected: m });
    }
    let k = ring.residue_field();
    let a = f.sigma.reduce_to(k);
    let b = f.tau.reduce_to(k);
    let ms = adjoint_matrix(&sigma.reduce_to(k));
    let mt = adjoint_matrix(&tau.reduce_to(k));
    let defect = tame_relation_defect(&ms, &mt, q, &a.coords(), &b.coords());
    if defect.iter().any(|&x| x != 0) {
        return Err(Gl2Error::CocycleViolation { defect: [defect[0], defect[1], defect[2]] });
    }
    let scale = ring.p_pow(m - 1);
    let bump = |v: &AdjointVector, g: &GroupElem| -> GroupElem {
        let lifted = AdjointVector::from_coords(ring, &v.coords());
        let factor = ZModMatrix::identity(ring, 2).add(&lifted.to_matrix().scale(scale));
        GroupElem { matrix: factor.mul(g.matrix()), flavor: g.flavor() }
    };
    Ok((bump(&a, sigma), bump(&b, tau)))
}

/// α(t) = t11 / t22 for diagonal t.
pub fn root_value(t: &GroupElem) -> Result<u64, Gl2Error> {
    if !t.is_diagonal() {
        return Err(Gl2Error::NotDiagonal);
    }
    let r = t.ring();
    let d = r.inv(t.entry(1, 1)).ok_or(Gl2Error::NotInvertible(t.entry(1, 1)))?;
    Ok(r.mul(t.entry(0, 0), d))
}

/// Eigenvalues mod p of a 2x2 matrix, if distinct and in F_p.
pub fn eigenvalues_mod_p(x: &GroupElem) -> Result<(u64, u64), Gl2Error> {
    let k = x.ring().residue_field();
    let y = x.reduce_to(k);
    let tr = k.add(y.entry(0, 0), y.entry(1, 1));
    let det = y.det();
    let roots: Vec<u64> = (0..k.p()).filter(|&l| k.add(k.sub(k.mul(l, l), k.mul(tr, l)), det) == 0).collect();
    let distinct = match roots.as_slice() {
        [a, b] => (*a, *b),
        _ => return Err(Gl2Error::NotRegular),
    };
    // keep the diagonal order when the reduction is triangular
    if y.entry(1, 0) == 0 || y.entry(0, 1) == 0 {
        Ok((y.entry(0, 0), y.entry(1, 1)))
    } else {
        Ok(distinct)
    }
}

fn eigenvector_mod_p(y: &GroupElem, l: u64) -> [u64; 2] {
    let k = y.ring();
    let (a, b, c, d) = (y.entry(0, 0), y.entry(0, 1), y.entry(1, 0), y.entry(1, 1));
    let v = if b != 0 {
        [b, k.sub(l, a)]
    } else if c != 0 {
        [k.sub(l, d), c]
    } else if a == l {
        [1, 0]
    } else {
        [0, 1]
    };
    let lead = if v[0] != 0 { v[0] } else { v[1] };
    let li = k.inv(lead).expect("nonzero eigenvector");
    [k.mul(v[0], li), k.mul(v[1], li)]
}

/// A conjugator c with c x c^{-1} diagonal mod p^n, by Hensel iteration from the mod-p eigenbasis.
pub fn torus_lift(x: &GroupElem) -> Result<GroupElem, Gl2Error> {
    let ring = x.ring();
    let k = ring.residue_field();
    let (l1, l2) = eigenvalues_mod_p(x)?;
    if l1 == l2 {
        return Err(Gl2Error::NotRegular);
    }
    let y = x.reduce_to(k);
    let v1 = eigenvector_mod_p(&y, l1);
    let v2 = eigenvector_mod_p(&y, l2);
    let p_mat = GroupElem::new(
        ZModMatrix::from_row_vectors(ring, 2, &[vec![v1[0], v2[0]], vec![v1[1], v2[1]]]),
        Flavor::GL2,
    )?;
    let mut c = p_mat.inv();
    for _ in 0..ring.n().saturating_sub(1) {
        let z = x.conj(&c);
        if z.is_diagonal() {
            break;
        }
        let gap = ring.inv(ring.sub(z.entry(0, 0), z.entry(1, 1))).ok_or(Gl2Error::NotRegular)?;
        let s = ring.mul(z.entry(0, 1), gap);
        let t = ring.neg(ring.mul(z.entry(1, 0), gap));
        let u = GroupElem::new(ZModMatrix::from_row_vectors(ring, 2, &[vec![1, s], vec![t, 1]]), Flavor::GL2)?;
        c = u.mul(&c);
    }
    debug_assert!(x.conj(&c).is_diagonal());
    if !x.conj(&c).is_diagonal() {
        return Err(Gl2Error::NotRegular);
    }
    Ok(GroupElem { matrix: c.matrix, flavor: x.flavor() })
}

/// The twisting matrix diag(1 - p^{n-1}, 1 + p^{n-1}).
pub fn top_level_twist(ring: Zpn) -> GroupElem {
    let t = ring.p_pow(ring.n() - 1);
    GroupElem::diag(ring, ring.sub(1, t), ring.add(1, t)).expect("unit diagonal")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: u64, n: u32) -> Zpn {
        Zpn::new(p, n).unwrap()
    }

    #[test]
    fn adjoint_examples() {
        let k = r(5, 1);
        let g = GroupElem::diag(k, 3, 1).unwrap();
        assert_eq!(adjoint_act(&g, &AdjointVector::e_basis(k)), AdjointVector::new(k, 0, 3, 0));
        assert_eq!(adjoint_act(&g, &AdjointVector::h_basis(k)), AdjointVector::h_basis(k));
        let v = AdjointVector::new(k, 1, 2, 3);
        assert_eq!(adjoint_act(&GroupElem::identity(k), &v), v);
    }

    #[test]
    fn exp_adjust_examples() {
        let ring = r(5, 2);
        let sigma = GroupElem::diag(ring, 2, 1).unwrap();
        let tau = GroupElem::identity(ring);
        let k = ring.residue_field();
        let f = AdjustmentClass::new(AdjointVector::zero(k), AdjointVector::e_basis(k));
        let (s2, t2) = exp_adjust(&sigma, &tau, 2, &f, 2).unwrap();
        assert_eq!(s2, sigma);
        assert_eq!(t2.matrix(), &mat2(ring, [[1, 5], [0, 1]]));
        let (s3, t3) = exp_adjust(&s2, &t2, 2, &f.negate(), 2).unwrap();
        assert_eq!((s3, t3), (sigma.clone(), tau.clone()));
        let zero = AdjustmentClass::new(AdjointVector::zero(k), AdjointVector::zero(k));
        assert_eq!(exp_adjust(&sigma, &tau, 2, &zero, 2).unwrap(), (sigma.clone(), tau.clone()));
        // H on τ is not a cocycle when σ acts by diag(2,1)
        let bad = AdjustmentClass::new(AdjointVector::zero(k), AdjointVector::h_basis(k));
        assert!(matches!(exp_adjust(&sigma, &tau, 2, &bad, 2), Err(Gl2Error::CocycleViolation { .. })));
        assert_eq!(exp_adjust(&sigma.reduce_to(k), &tau.reduce_to(k), 2, &f, 1), Err(Gl2Error::LevelTooLow(1)));
    }

    #[test]
    fn torus_lift_examples() {
        let ring = r(5, 2);
        let d = GroupElem::diag(ring, 2, 1).unwrap();
        assert!(torus_lift(&d).unwrap().is_identity());
        let x = GroupElem::gl2(ring, [[2, 5], [5, 1]]).unwrap();
        let c = torus_lift(&x).unwrap();
        assert!(x.conj(&c).is_diagonal());
        assert!(c.reduce_to(ring.residue_field()).is_identity());
        let u = GroupElem::gl2(ring, [[1, 1], [0, 1]]).unwrap();
        assert_eq!(torus_lift(&u), Err(Gl2Error::NotRegular));
        // irreducible characteristic polynomial x^2 - 2 mod 5
        let e = GroupElem::gl2(ring, [[0, 2], [1, 0]]).unwrap();
        assert_eq!(torus_lift(&e), Err(Gl2Error::NotRegular));
    }

    #[test]
    fn root_value_examples() {
        let ring = r(7, 3);
        assert_eq!(root_value(&GroupElem::diag(ring, 3, 1).unwrap()), Ok(3));
        assert_eq!(root_value(&GroupElem::diag(ring, 5, 5).unwrap()), Ok(1));
        let twist = top_level_twist(ring);
        assert_eq!(root_value(&twist), Ok(ring.reduce(1 - 2 * 49)));
        assert_eq!(root_value(&GroupElem::gl2(ring, [[1, 1], [0, 1]]).unwrap()), Err(Gl2Error::NotDiagonal));
    }

    #[test]
    fn geometric_sum_matches_naive() {
        let ring = r(5, 3);
        let m = mat2(ring, [[1, 5], [3, 26]]);
        let mut naive = ZModMatrix::zeros(ring, 2, 2);
        let mut pw = ZModMatrix::identity(ring, 2);
        for _ in 0..37 {
            naive = naive.add(&pw);
            pw = pw.mul(&m);
        }
        assert_eq!(geometric_sum(&m, 37), naive);
    }
}
