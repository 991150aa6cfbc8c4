//! Dense matrices over Z/p^n: Smith form, solving, kernels and lengths.

use crate::zp::{Zpn, MAX_DIM};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix dimension {0} exceeds the limit {MAX_DIM}")]
    TooLarge(usize),
    #[error("row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("system has no solution")]
    Unsolvable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZModMatrix {
    ring: Zpn,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ZModMatrix {
    pub fn zeros(ring: Zpn, rows: usize, cols: usize) -> Self {
        ZModMatrix { ring, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(ring: Zpn, size: usize) -> Self {
        let mut m = Self::zeros(ring, size, size);
        for i in 0..size {
            m.data[i * size + i] = 1 % ring.modulus();
        }
        m
    }

    /// Checked constructor from signed integer rows.
    pub fn from_rows(ring: Zpn, rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if r > MAX_DIM || c > MAX_DIM {
            return Err(LinalgError::TooLarge(r.max(c)));
        }
        let mut m = Self::zeros(ring, r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(LinalgError::Ragged { row: i, got: row.len(), expected: c });
            }
            for (j, &x) in row.iter().enumerate() {
                m.data[i * c + j] = ring.reduce(x);
            }
        }
        Ok(m)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(ring: Zpn, dim: usize, cols: &[Vec<u64>]) -> Self {
        let mut m = Self::zeros(ring, dim, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), dim, "column length");
            for i in 0..dim {
                m.data[i * cols.len() + j] = ring.reduce_u(col[i]);
            }
        }
        m
    }

    pub fn from_row_vectors(ring: Zpn, cols: usize, rows: &[Vec<u64>]) -> Self {
        let mut m = Self::zeros(ring, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "row length");
            for j in 0..cols {
                m.data[i * cols + j] = ring.reduce_u(row[j]);
            }
        }
        m
    }

    pub fn diagonal(ring: Zpn, entries: &[u64]) -> Self {
        let mut m = Self::zeros(ring, entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn ring(&self) -> Zpn {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = self.ring.reduce_u(x);
    }

    pub fn row(&self, i: usize) -> Vec<u64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<u64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &ZModMatrix) -> ZModMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let r = self.ring;
        let m = r.modulus() as u128;
        let mut out = Self::zeros(r, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k) as u128;
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = ((out.data[idx] as u128 + a * other.get(k, j) as u128) % m) as u64;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        let r = self.ring;
        (0..self.rows)
            .map(|i| (0..self.cols).fold(0, |acc, j| r.add(acc, r.mul(self.get(i, j), v[j]))))
            .collect()
    }

    pub fn add(&self, other: &ZModMatrix) -> ZModMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sum shape");
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x = self.ring.add(*x, *y);
        }
        out
    }

    pub fn sub(&self, other: &ZModMatrix) -> ZModMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "difference shape");
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x = self.ring.sub(*x, *y);
        }
        out
    }

    pub fn scale(&self, c: u64) -> ZModMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x = self.ring.mul(*x, c);
        }
        out
    }

    pub fn pow(&self, mut e: u64) -> ZModMatrix {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.ring, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hstack(&self, other: &ZModMatrix) -> ZModMatrix {
        assert_eq!(self.rows, other.rows, "hstack rows");
        let mut out = Self::zeros(self.ring, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j));
            }
        }
        out
    }

    pub fn vstack(&self, other: &ZModMatrix) -> ZModMatrix {
        assert_eq!(self.cols, other.cols, "vstack cols");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        ZModMatrix { ring: self.ring, rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Reduce entries into a ring with the same prime and smaller exponent.
    pub fn reduce_to(&self, target: Zpn) -> ZModMatrix {
        assert_eq!(self.ring.p(), target.p());
        assert!(target.n() <= self.ring.n());
        let data = self.data.iter().map(|x| x % target.modulus()).collect();
        ZModMatrix { ring: target, rows: self.rows, cols: self.cols, data }
    }

    /// Reinterpret the integer representatives in another ring of the same prime.
    pub fn lift_to(&self, target: Zpn) -> ZModMatrix {
        assert_eq!(self.ring.p(), target.p());
        let data = self.data.iter().map(|x| x % target.modulus()).collect();
        ZModMatrix { ring: target, rows: self.rows, cols: self.cols, data }
    }

    pub fn inverse(&self) -> Option<ZModMatrix> {
        if !self.is_square() {
            return None;
        }
        let s = smith_form(self);
        if s.exponents.iter().any(|&e| e != 0) {
            return None;
        }
        // D is the identity, so M^{-1} = R L.
        Some(s.right.mul(&s.left))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && smith_form(self).exponents.iter().all(|&e| e == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    /// Nondecreasing; `n` marks a zero diagonal entry. Length is min(rows, cols).
    pub exponents: Vec<u32>,
    pub left: ZModMatrix,
    pub right: ZModMatrix,
    pub left_inv: ZModMatrix,
    pub right_inv: ZModMatrix,
}

impl SmithForm {
    pub fn diagonal(&self, rows: usize, cols: usize) -> ZModMatrix {
        let ring = self.left.ring();
        let mut d = ZModMatrix::zeros(ring, rows, cols);
        for (i, &e) in self.exponents.iter().enumerate() {
            d.set(i, i, ring.p_pow(e));
        }
        d
    }
}

fn swap_rows(m: &mut ZModMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..m.cols {
        m.data.swap(a * m.cols + j, b * m.cols + j);
    }
}

fn swap_cols(m: &mut ZModMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..m.rows {
        m.data.swap(i * m.cols + a, i * m.cols + b);
    }
}

/// row_dst += c * row_src
fn add_row(m: &mut ZModMatrix, dst: usize, src: usize, c: u64) {
    if c == 0 {
        return;
    }
    let r = m.ring;
    for j in 0..m.cols {
        let v = r.add(m.get(dst, j), r.mul(c, m.get(src, j)));
        m.data[dst * m.cols + j] = v;
    }
}

/// col_dst += c * col_src
fn add_col(m: &mut ZModMatrix, dst: usize, src: usize, c: u64) {
    if c == 0 {
        return;
    }
    let r = m.ring;
    for i in 0..m.rows {
        let v = r.add(m.get(i, dst), r.mul(c, m.get(i, src)));
        m.data[i * m.cols + dst] = v;
    }
}

fn scale_row(m: &mut ZModMatrix, i: usize, c: u64) {
    for j in 0..m.cols {
        let v = m.ring.mul(m.get(i, j), c);
        m.data[i * m.cols + j] = v;
    }
}

fn scale_col(m: &mut ZModMatrix, j: usize, c: u64) {
    for i in 0..m.rows {
        let v = m.ring.mul(m.get(i, j), c);
        m.data[i * m.cols + j] = v;
    }
}

/// Smith normal form with pivots of minimal valuation (ties: lowest row, then lowest column).
pub fn smith_form(m: &ZModMatrix) -> SmithForm {
    let ring = m.ring;
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut left = ZModMatrix::identity(ring, rows);
    let mut left_inv = ZModMatrix::identity(ring, rows);
    let mut right = ZModMatrix::identity(ring, cols);
    let mut right_inv = ZModMatrix::identity(ring, cols);
    let k_max = rows.min(cols);
    let mut exponents = Vec::with_capacity(k_max);

    for k in 0..k_max {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                let v = ring.valuation(a.get(i, j));
                if v < ring.n() && best.map_or(true, |(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                    if v == 0 {
                        break;
                    }
                }
            }
            if matches!(best, Some((0, _, _))) {
                break;
            }
        }
        let Some((v, pi, pj)) = best else {
            exponents.extend(std::iter::repeat(ring.n()).take(k_max - k));
            break;
        };
        // L <- E L, L^{-1} <- L^{-1} E^{-1}; R <- R E', R^{-1} <- E'^{-1} R^{-1}.
        swap_rows(&mut a, k, pi);
        swap_rows(&mut left, k, pi);
        swap_cols(&mut left_inv, k, pi);
        swap_cols(&mut a, k, pj);
        swap_cols(&mut right, k, pj);
        swap_rows(&mut right_inv, k, pj);

        let pv = ring.p_pow(v);
        let unit = a.get(k, k) / pv;
        let u_inv = ring.inv(unit).expect("pivot cofactor is a unit");
        scale_row(&mut a, k, u_inv);
        scale_row(&mut left, k, u_inv);
        scale_col(&mut left_inv, k, unit);

        for i in k + 1..rows {
            let w = a.get(i, k) / pv;
            if w == 0 {
                continue;
            }
            let c = ring.neg(w);
            add_row(&mut a, i, k, c);
            add_row(&mut left, i, k, c);
            add_col(&mut left_inv, k, i, w);
        }
        for j in k + 1..cols {
            let w = a.get(k, j) / pv;
            if w == 0 {
                continue;
            }
            let c = ring.neg(w);
            add_col(&mut a, j, k, c);
            add_col(&mut right, j, k, c);
            add_row(&mut right_inv, k, j, w);
        }
        exponents.push(v);
    }
    SmithForm { exponents, left, right, left_inv, right_inv }
}

/// Length of coker(M: (Z/p^n)^cols -> (Z/p^n)^rows).
pub fn cokernel_length(m: &ZModMatrix) -> u32 {
    let n = m.ring.n();
    let s = smith_form(m);
    let pivots: u32 = s.exponents.iter().map(|&e| e.min(n)).sum();
    pivots + n * (m.rows - s.exponents.len()) as u32
}

/// Length of the image of M.
pub fn image_length(m: &ZModMatrix) -> u32 {
    m.ring.n() * m.rows as u32 - cokernel_length(m)
}

/// A matrix with at most `m.cols()` rows whose row span equals that of `m`.
pub fn row_span_basis(m: &ZModMatrix) -> ZModMatrix {
    let ring = m.ring;
    let n = ring.n();
    if m.rows <= 1 {
        return m.clone();
    }
    let s = smith_form(m);
    // rows of D R^{-1}
    let rows: Vec<Vec<u64>> = s
        .exponents
        .iter()
        .enumerate()
        .filter(|(_, &e)| e < n)
        .map(|(i, &e)| s.right_inv.row(i).iter().map(|&x| ring.mul(x, ring.p_pow(e))).collect())
        .collect();
    if rows.is_empty() {
        return ZModMatrix::zeros(ring, 1, m.cols);
    }
    ZModMatrix::from_row_vectors(ring, m.cols, &rows)
}

/// Generators of {x : M x = 0}.
pub fn kernel(m: &ZModMatrix) -> Vec<Vec<u64>> {
    let ring = m.ring;
    let s = smith_form(m);
    let mut gens = Vec::new();
    for j in 0..m.cols {
        let e = s.exponents.get(j).copied().unwrap_or(0);
        let scale = if j < s.exponents.len() { ring.p_pow(ring.n() - e) } else { 1 };
        if scale == 0 {
            continue;
        }
        let col: Vec<u64> = s.right.column(j).iter().map(|&x| ring.mul(x, scale)).collect();
        if col.iter().any(|&x| x != 0) {
            gens.push(col);
        }
    }
    gens
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub particular: Vec<u64>,
    pub kernel: Vec<Vec<u64>>,
}

/// Solve M x = b over Z/p^n.
pub fn solve(m: &ZModMatrix, b: &[u64]) -> Result<Solution, LinalgError> {
    if b.len() != m.rows {
        return Err(LinalgError::Shape(format!("rhs has {} entries, matrix has {} rows", b.len(), m.rows)));
    }
    let ring = m.ring;
    let s = smith_form(m);
    let c = s.left.mul_vec(b);
    let mut y = vec![0u64; m.cols];
    for (i, &ci) in c.iter().enumerate() {
        match s.exponents.get(i) {
            Some(&e) => {
                if ring.valuation(ci) < e {
                    return Err(LinalgError::Unsolvable);
                }
                y[i] = if e == ring.n() { 0 } else { ci / ring.p_pow(e) };
            }
            None => {
                if ci != 0 {
                    return Err(LinalgError::Unsolvable);
                }
            }
        }
    }
    let particular = s.right.mul_vec(&y);
    Ok(Solution { particular, kernel: kernel(m) })
}

/// Length of the submodule of (Z/p^n)^dim spanned by `gens`.
pub fn span_length(ring: Zpn, dim: usize, gens: &[Vec<u64>]) -> u32 {
    if gens.is_empty() || dim == 0 {
        return 0;
    }
    image_length(&ZModMatrix::from_columns(ring, dim, gens))
}

/// Is `v` in the span of `gens`?
pub fn in_span(ring: Zpn, dim: usize, gens: &[Vec<u64>], v: &[u64]) -> bool {
    if v.iter().all(|&x| x % ring.modulus() == 0) {
        return true;
    }
    if gens.is_empty() {
        return false;
    }
    solve(&ZModMatrix::from_columns(ring, dim, gens), v).is_ok()
}

/// Express `v` as a combination of `gens` if possible.
pub fn coordinates_in_span(ring: Zpn, dim: usize, gens: &[Vec<u64>], v: &[u64]) -> Option<Vec<u64>> {
    if gens.is_empty() {
        return v.iter().all(|&x| x == 0).then(Vec::new);
    }
    solve(&ZModMatrix::from_columns(ring, dim, gens), v).ok().map(|s| s.particular)
}

/// A cyclic summand of a quotient module: a representative and its order exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicFactor {
    pub generator: Vec<u64>,
    pub exponent: u32,
}

/// Cyclic decomposition of span(sub ∪ rel) / span(rel) inside (Z/p^n)^dim.
pub fn quotient_decomposition(ring: Zpn, dim: usize, sub: &[Vec<u64>], rel: &[Vec<u64>]) -> Vec<CyclicFactor> {
    let mut all: Vec<Vec<u64>> = sub.to_vec();
    all.extend(rel.iter().cloned());
    if all.is_empty() {
        return Vec::new();
    }
    let g = all.len();
    let k = ZModMatrix::from_columns(ring, dim, &all);
    // y ∈ (Z/p^n)^g is a relation iff K y ∈ span(rel).
    let relations: Vec<Vec<u64>> = if rel.is_empty() {
        kernel(&k)
    } else {
        let r = ZModMatrix::from_columns(ring, dim, rel);
        kernel(&k.hstack(&r)).into_iter().map(|v| v[..g].to_vec()).collect()
    };
    let rel_m = if relations.is_empty() {
        ZModMatrix::zeros(ring, g, 1)
    } else {
        ZModMatrix::from_columns(ring, g, &relations)
    };
    let s = smith_form(&rel_m);
    let n = ring.n();
    let mut out = Vec::new();
    for i in 0..g {
        let e = s.exponents.get(i).copied().unwrap_or(n);
        if e == 0 {
            continue;
        }
        let generator = k.mul_vec(&s.left_inv.column(i));
        out.push(CyclicFactor { generator, exponent: e });
    }
    out.sort_by_key(|f| f.exponent);
    out
}

/// Length of span(sub ∪ rel)/span(rel).
pub fn quotient_length(ring: Zpn, dim: usize, sub: &[Vec<u64>], rel: &[Vec<u64>]) -> u32 {
    let mut all = sub.to_vec();
    all.extend(rel.iter().cloned());
    span_length(ring, dim, &all) - span_length(ring, dim, rel)
}

pub fn vec_add(ring: Zpn, a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(&x, &y)| ring.add(x, y)).collect()
}

pub fn vec_sub(ring: Zpn, a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(&x, &y)| ring.sub(x, y)).collect()
}

pub fn vec_scale(ring: Zpn, a: &[u64], c: u64) -> Vec<u64> {
    a.iter().map(|&x| ring.mul(x, c)).collect()
}

pub fn dot(ring: Zpn, a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| ring.add(acc, ring.mul(x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u64, n: u32) -> Zpn {
        Zpn::new(p, n).unwrap()
    }

    #[test]
    fn smith_examples() {
        let r = ring(5, 2);
        assert_eq!(smith_form(&ZModMatrix::identity(r, 2)).exponents, vec![0, 0]);
        let d = ZModMatrix::from_rows(r, &[vec![5, 0], vec![0, 1]]).unwrap();
        assert_eq!(smith_form(&d).exponents, vec![0, 1]);
        let r9 = ring(3, 2);
        let m = ZModMatrix::from_rows(r9, &[vec![2, 1], vec![1, 2]]).unwrap();
        let s = smith_form(&m);
        assert_eq!(s.exponents, vec![0, 1]);
        assert_eq!(s.left.mul(&m).mul(&s.right), s.diagonal(2, 2));
        assert_eq!(cokernel_length(&m), 1);
    }

    #[test]
    fn solve_examples() {
        let r = ring(3, 2);
        let m = ZModMatrix::from_rows(r, &[vec![3]]).unwrap();
        let sol = solve(&m, &[6]).unwrap();
        assert_eq!(sol.particular, vec![2]);
        assert_eq!(sol.kernel, vec![vec![3]]);
        assert_eq!(solve(&m, &[1]), Err(LinalgError::Unsolvable));

        let r49 = ring(7, 2);
        let id = ZModMatrix::identity(r49, 3);
        let sol = solve(&id, &[5, 40, 48]).unwrap();
        assert_eq!(sol.particular, vec![5, 40, 48]);
        assert!(sol.kernel.is_empty());
    }

    #[test]
    fn cokernel_examples() {
        let r = ring(5, 2);
        assert_eq!(cokernel_length(&ZModMatrix::zeros(r, 1, 1)), 2);
        assert_eq!(cokernel_length(&ZModMatrix::identity(r, 3)), 0);
        // wide and tall shapes
        assert_eq!(cokernel_length(&ZModMatrix::zeros(r, 2, 3)), 4);
        assert_eq!(cokernel_length(&ZModMatrix::from_rows(r, &[vec![5], vec![0]]).unwrap()), 3);
    }

    #[test]
    fn quotient_of_cyclic() {
        let r = ring(5, 3);
        let q = quotient_decomposition(r, 1, &[vec![1]], &[vec![25]]);
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].exponent, 2);
        assert_eq!(quotient_length(r, 1, &[vec![5]], &[vec![25]]), 1);
    }

    #[test]
    fn dimension_limit() {
        let r = ring(5, 1);
        let rows = vec![vec![0i64; 2]; 513];
        assert_eq!(ZModMatrix::from_rows(r, &rows), Err(LinalgError::TooLarge(513)));
    }
}
