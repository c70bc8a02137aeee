//! Coefficient rings for exact linear algebra.
//!
//! A [`Ring`] is a *value* describing the coefficient ring; its elements are
//! carried separately (`Ring::Elem`).  This lets the prime field carry its
//! runtime modulus while keeping the rest of the engine generic.  Three rings
//! are provided: [`Integers`] (arbitrary-precision), [`Rationals`]
//! (arbitrary-precision, always reduced) and [`PrimeField`] (machine words
//! with explicit reduction, modulus below 2^61 so products fit in `u128`).
//!
//! All three are Euclidean domains for the purposes of the elimination code:
//! `div_rem` performs Euclidean division with a canonical remainder (zero over
//! the fields, `0 <= r < |b|` over the integers), which is enough to drive
//! Hermite/Smith style reduction uniformly.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer as _, One as _, Signed as _, Zero as _};

/// Tag describing which coefficient ring a document or report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingKind {
    Integers,
    Rationals,
    PrimeField(u64),
}

impl fmt::Display for RingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingKind::Integers => write!(f, "integers"),
            RingKind::Rationals => write!(f, "rationals"),
            RingKind::PrimeField(p) => write!(f, "prime_field:{p}"),
        }
    }
}

/// A commutative ring with exact arithmetic and Euclidean division.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    type Elem: Clone + PartialEq + fmt::Debug;

    fn kind(&self) -> RingKind;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, n: i64) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    /// Euclidean division `a = q*b + r` for `b != 0`.
    ///
    /// Over a field `r = 0`; over the integers `0 <= r < |b|`.  The remainder
    /// convention is part of the canonical-form contract: coset
    /// representatives produced by echelon reduction are unique.
    fn div_rem(&self, a: &Self::Elem, b: &Self::Elem) -> (Self::Elem, Self::Elem);

    fn is_field(&self) -> bool;

    fn is_unit(&self, a: &Self::Elem) -> bool;

    /// Decompose `a = u * c` with `u` a unit and `c` the canonical associate
    /// (`|a|` over the integers, `1` for nonzero field elements, `0 -> (1, 0)`).
    fn unit_part(&self, a: &Self::Elem) -> (Self::Elem, Self::Elem);

    /// Pivot-size comparison used for pivot-magnitude minimization
    /// (absolute value over the integers; all nonzero elements tie in a field).
    fn size_cmp(&self, a: &Self::Elem, b: &Self::Elem) -> Ordering;

    /// Canonical decimal serialization (`a/b` in lowest terms over the
    /// rationals, representative in `[0, p)` over a prime field).
    fn format_elem(&self, a: &Self::Elem) -> String;

    /// Parse the serialized form; accepts plain integer literals in every ring.
    fn parse_elem(&self, s: &str) -> Result<Self::Elem, String>;

    /// Exact division: `Some(q)` with `a = q*b`, `None` if `b` is zero or
    /// does not divide `a`.
    fn div_exact(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        if self.is_zero(b) {
            return if self.is_zero(a) { None } else { None };
        }
        let (q, r) = self.div_rem(a, b);
        if self.is_zero(&r) {
            Some(q)
        } else {
            None
        }
    }

    fn divides(&self, b: &Self::Elem, a: &Self::Elem) -> bool {
        if self.is_zero(b) {
            return self.is_zero(a);
        }
        self.div_exact(a, b).is_some()
    }
}

/// Extended Euclid: returns `(g, x, y)` with `x*a + y*b = g` and `g` the
/// canonical associate of `gcd(a, b)`.  Over a field this terminates in one
/// step with `g = 1` whenever `(a, b) != (0, 0)`.
pub fn bezout<R: Ring>(ring: &R, a: &R::Elem, b: &R::Elem) -> (R::Elem, R::Elem, R::Elem) {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut x0, mut x1) = (ring.one(), ring.zero());
    let (mut y0, mut y1) = (ring.zero(), ring.one());
    while !ring.is_zero(&r1) {
        let (q, r2) = ring.div_rem(&r0, &r1);
        r0 = std::mem::replace(&mut r1, r2);
        let nx = ring.sub(&x0, &ring.mul(&q, &x1));
        x0 = std::mem::replace(&mut x1, nx);
        let ny = ring.sub(&y0, &ring.mul(&q, &y1));
        y0 = std::mem::replace(&mut y1, ny);
    }
    if ring.is_zero(&r0) {
        return (ring.zero(), ring.zero(), ring.zero());
    }
    let (u, g) = ring.unit_part(&r0);
    let u_inv = ring
        .div_exact(&ring.one(), &u)
        .expect("unit part must be invertible");
    (g, ring.mul(&u_inv, &x0), ring.mul(&u_inv, &y0))
}

/// A ring in which every nonzero element is invertible.
pub trait Field: Ring {
    fn inv(&self, a: &Self::Elem) -> Self::Elem {
        assert!(!self.is_zero(a), "inverse of zero");
        self.div_rem(&self.one(), a).0
    }
}

/// The ring of integers, backed by `BigInt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Integers;

impl Ring for Integers {
    type Elem = BigInt;

    fn kind(&self) -> RingKind {
        RingKind::Integers
    }
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn from_i64(&self, n: i64) -> BigInt {
        BigInt::from(n)
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }

    fn div_rem(&self, a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
        assert!(!b.is_zero(), "division by zero");
        let (mut q, mut r) = a.div_rem(b);
        if r.is_negative() {
            if b.is_positive() {
                r += b;
                q -= 1;
            } else {
                r -= b;
                q += 1;
            }
        }
        (q, r)
    }

    fn is_field(&self) -> bool {
        false
    }
    fn is_unit(&self, a: &BigInt) -> bool {
        a.abs().is_one()
    }

    fn unit_part(&self, a: &BigInt) -> (BigInt, BigInt) {
        if a.is_negative() {
            (BigInt::from(-1), -a)
        } else {
            (BigInt::one(), a.clone())
        }
    }

    fn size_cmp(&self, a: &BigInt, b: &BigInt) -> Ordering {
        a.abs().cmp(&b.abs())
    }

    fn format_elem(&self, a: &BigInt) -> String {
        a.to_string()
    }

    fn parse_elem(&self, s: &str) -> Result<BigInt, String> {
        s.parse::<BigInt>()
            .map_err(|_| format!("invalid integer literal `{s}`"))
    }
}

/// The field of rationals, backed by `BigRational` (always in lowest terms
/// with positive denominator).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Rationals;

impl Ring for Rationals {
    type Elem = BigRational;

    fn kind(&self) -> RingKind {
        RingKind::Rationals
    }
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_i64(&self, n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }

    fn div_rem(&self, a: &BigRational, b: &BigRational) -> (BigRational, BigRational) {
        assert!(!b.is_zero(), "division by zero");
        (a / b, BigRational::zero())
    }

    fn is_field(&self) -> bool {
        true
    }
    fn is_unit(&self, a: &BigRational) -> bool {
        !a.is_zero()
    }

    fn unit_part(&self, a: &BigRational) -> (BigRational, BigRational) {
        if a.is_zero() {
            (BigRational::one(), BigRational::zero())
        } else {
            (a.clone(), BigRational::one())
        }
    }

    fn size_cmp(&self, _a: &BigRational, _b: &BigRational) -> Ordering {
        Ordering::Equal
    }

    fn format_elem(&self, a: &BigRational) -> String {
        format!("{}/{}", a.numer(), a.denom())
    }

    fn parse_elem(&self, s: &str) -> Result<BigRational, String> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let n = num
            .parse::<BigInt>()
            .map_err(|_| format!("invalid rational literal `{s}`"))?;
        let d = den
            .parse::<BigInt>()
            .map_err(|_| format!("invalid rational literal `{s}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(BigRational::new(n, d))
    }
}

impl Field for Rationals {}

/// Largest allowed prime-field modulus (exclusive): products of two
/// representatives stay well inside `u128`.
pub const MAX_PRIME: u64 = 1 << 61;

/// The prime field `F_p`, `p < 2^61`; elements are canonical representatives
/// in `[0, p)` stored as `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Construct `F_p`, verifying `2 <= p < 2^61` and primality by trial
    /// division.
    pub fn new(p: u64) -> Result<Self, String> {
        if p < 2 {
            return Err(format!("modulus {p} is not prime"));
        }
        if p >= MAX_PRIME {
            return Err(format!("modulus {p} exceeds the 2^61 bound"));
        }
        if p > 3 {
            if p % 2 == 0 || p % 3 == 0 {
                return Err(format!("modulus {p} is not prime"));
            }
            let mut d: u64 = 5;
            while d.saturating_mul(d) <= p {
                if p % d == 0 || p % (d + 2) == 0 {
                    return Err(format!("modulus {p} is not prime"));
                }
                d += 6;
            }
        }
        Ok(PrimeField { p })
    }

    /// Construct without the primality check; the caller asserts `p` is a
    /// prime below 2^61.  Arithmetic is still exact for any odd modulus, but
    /// inverses exist only when `p` is prime.
    pub fn new_unchecked(p: u64) -> Self {
        assert!((2..MAX_PRIME).contains(&p));
        PrimeField { p }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    fn reduce_i128(&self, n: i128) -> u64 {
        let p = self.p as i128;
        let r = n.rem_euclid(p);
        r as u64
    }
}

impl Ring for PrimeField {
    type Elem = u64;

    fn kind(&self) -> RingKind {
        RingKind::PrimeField(self.p)
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_i64(&self, n: i64) -> u64 {
        self.reduce_i128(n as i128)
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }

    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }

    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }

    fn div_rem(&self, a: &u64, b: &u64) -> (u64, u64) {
        assert!(*b != 0, "division by zero");
        // Extended Euclid for b^{-1} mod p.
        let (mut r0, mut r1) = (self.p as i128, *b as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            r0 -= q * r1;
            std::mem::swap(&mut r0, &mut r1);
            t0 -= q * t1;
            std::mem::swap(&mut t0, &mut t1);
        }
        debug_assert_eq!(r0, 1, "noninvertible element mod {}", self.p);
        let inv = self.reduce_i128(t0);
        (self.mul(a, &inv), 0)
    }

    fn is_field(&self) -> bool {
        true
    }
    fn is_unit(&self, a: &u64) -> bool {
        *a != 0
    }

    fn unit_part(&self, a: &u64) -> (u64, u64) {
        if *a == 0 {
            (self.one(), 0)
        } else {
            (*a, self.one())
        }
    }

    fn size_cmp(&self, _a: &u64, _b: &u64) -> Ordering {
        Ordering::Equal
    }

    fn format_elem(&self, a: &u64) -> String {
        a.to_string()
    }

    fn parse_elem(&self, s: &str) -> Result<u64, String> {
        let n = s
            .parse::<BigInt>()
            .map_err(|_| format!("invalid field element `{s}`"))?;
        let p = BigInt::from(self.p);
        let r = ((n % &p) + &p) % &p;
        let digits = r.to_u64_digits().1;
        Ok(digits.first().copied().unwrap_or(0))
    }
}

impl Field for PrimeField {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_euclidean_remainder_is_canonical() {
        let z = Integers;
        for (a, b) in [(7i64, 3i64), (-7, 3), (7, -3), (-7, -3), (6, 3), (-6, 3)] {
            let (q, r) = z.div_rem(&z.from_i64(a), &z.from_i64(b));
            assert!(r >= BigInt::zero() && r < z.from_i64(b).abs());
            assert_eq!(q * z.from_i64(b) + r, z.from_i64(a));
        }
    }

    #[test]
    fn bezout_over_integers() {
        let z = Integers;
        let (g, x, y) = bezout(&z, &z.from_i64(12), &z.from_i64(-18));
        assert_eq!(g, z.from_i64(6));
        assert_eq!(x * z.from_i64(12) + y * z.from_i64(-18), z.from_i64(6));
    }

    #[test]
    fn prime_field_rejects_composites_and_large_moduli() {
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::new(1 << 61).is_err());
        assert!(PrimeField::new(2).is_ok());
        assert!(PrimeField::new(2_147_483_647).is_ok());
    }

    #[test]
    fn prime_field_inverse_near_the_modulus_bound() {
        // 2^61 - 1 is prime; checked externally, constructed unchecked to keep
        // the test fast.
        let f = PrimeField::new_unchecked((1 << 61) - 1);
        let a = f.modulus() - 3;
        let (inv, r) = f.div_rem(&1, &a);
        assert_eq!(r, 0);
        assert_eq!(f.mul(&a, &inv), 1);
    }

    #[test]
    fn rational_serialization_round_trips() {
        let q = Rationals;
        let e = q.parse_elem("-4/6").unwrap();
        assert_eq!(q.format_elem(&e), "-2/3");
        assert_eq!(q.format_elem(&q.parse_elem("5").unwrap()), "5/1");
    }
}
