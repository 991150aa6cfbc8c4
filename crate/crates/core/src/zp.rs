//! Residue rings Z/p^n and their elements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported exponent n in Z/p^n.
pub const MAX_EXPONENT: u32 = 8;
/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("exponent must satisfy 1 <= n <= {MAX_EXPONENT}, got {0}")]
    ExponentOutOfRange(u32),
    #[error("modulus {p}^{n} overflows the supported range")]
    ModulusTooLarge { p: u64, n: u32 },
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The ring Z/p^n. Copyable context passed alongside raw residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Zpn {
    p: u64,
    n: u32,
    modulus: u64,
}

impl Zpn {
    pub fn new(p: u64, n: u32) -> Result<Self, RingError> {
        if !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        if n == 0 || n > MAX_EXPONENT {
            return Err(RingError::ExponentOutOfRange(n));
        }
        let modulus = p
            .checked_pow(n)
            .filter(|m| *m < (1u64 << 40))
            .ok_or(RingError::ModulusTooLarge { p, n })?;
        Ok(Zpn { p, n, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Same prime, different exponent.
    pub fn with_exponent(&self, n: u32) -> Result<Self, RingError> {
        Zpn::new(self.p, n)
    }

    pub fn residue_field(&self) -> Self {
        Zpn { p: self.p, n: 1, modulus: self.p }
    }

    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.modulus as i64) as u64
    }

    pub fn reduce_u(&self, x: u64) -> u64 {
        x % self.modulus
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b % self.modulus) % self.modulus
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.modulus - a % self.modulus) % self.modulus
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a % self.modulus;
        let mut acc = 1 % self.modulus;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// p-adic valuation of a residue; zero has valuation n.
    pub fn valuation(&self, a: u64) -> u32 {
        let mut a = a % self.modulus;
        if a == 0 {
            return self.n;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, a: u64) -> bool {
        a % self.p != 0
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        if !self.is_unit(a) {
            return None;
        }
        let (mut old_r, mut r) = (a as i128 % self.modulus as i128, self.modulus as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        Some(old_s.rem_euclid(self.modulus as i128) as u64)
    }

    /// p^k as a residue (zero once k >= n).
    pub fn p_pow(&self, k: u32) -> u64 {
        if k >= self.n {
            0
        } else {
            self.p.pow(k)
        }
    }

    /// Reduce a residue of this ring into a ring of smaller exponent.
    pub fn project(&self, a: u64, target: &Zpn) -> u64 {
        debug_assert_eq!(self.p, target.p);
        a % target.modulus
    }

    pub fn scalar(&self, x: i64) -> ZModScalar {
        ZModScalar { value: self.reduce(x), ring: *self }
    }
}

/// A residue together with its ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZModScalar {
    pub value: u64,
    pub ring: Zpn,
}

impl ZModScalar {
    pub fn valuation(&self) -> u32 {
        self.ring.valuation(self.value)
    }

    pub fn is_unit(&self) -> bool {
        self.ring.is_unit(self.value)
    }

    pub fn inv(&self) -> Option<ZModScalar> {
        self.ring.inv(self.value).map(|value| ZModScalar { value, ring: self.ring })
    }
}

impl std::fmt::Display for ZModScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} mod {}", self.value, self.ring.modulus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_valuation() {
        let r = Zpn::new(5, 2).unwrap();
        assert_eq!(r.inv(2), Some(13));
        assert_eq!(r.inv(10), None);
        assert_eq!(r.valuation(0), 2);
        assert_eq!(r.valuation(10), 1);
        assert_eq!(r.neg(3), 22);
    }

    #[test]
    fn limits() {
        assert_eq!(Zpn::new(4, 1), Err(RingError::NotPrime(4)));
        assert_eq!(Zpn::new(5, 9), Err(RingError::ExponentOutOfRange(9)));
        assert!(Zpn::new(7, 8).is_ok());
    }
}
