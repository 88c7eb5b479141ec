//! Capped-precision p-adic numbers.
//!
//! A [`PadicNumber`] is `unit · p^valuation` known modulo `p^(valuation + rel_prec)`.
//! Every operation propagates the precision that is actually justified by its
//! inputs: sums keep the smaller absolute precision, products and quotients the
//! smaller relative precision. Nothing is ever padded with invented digits.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Absolute precision carried by zeros that are known exactly.
pub const EXACT: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PadicError {
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("prime must be odd and at least 3, got {0}")]
    BadPrime(u64),
    #[error("division by zero: divisor is O({p}^{absprec})")]
    DivisionByZero { p: u64, absprec: i64 },
    #[error("precision underflow: {0}")]
    PrecisionUnderflow(String),
    #[error("expected a p-adic unit, got {0}")]
    NotAUnit(String),
    #[error("odd valuation {0}: no square root in Q_p")]
    OddValuation(i64),
    #[error("unit part is not a square modulo {0}")]
    NonResidue(u64),
    #[error("branch hint {hint} is not a square root of {square} modulo {p}")]
    BranchMismatch { p: u64, hint: u64, square: u64 },
    #[error("x0 is not a root of f modulo p")]
    NotARoot,
    #[error("root is not simple modulo p: f'(x0) is not a unit")]
    NonSimpleRoot,
    #[error("rational {0} is not p-integral where integrality is required")]
    NotIntegral(String),
}

pub type PadicResult<T> = Result<T, PadicError>;

thread_local! {
    static POWERS: RefCell<HashMap<u64, Vec<BigInt>>> = RefCell::new(HashMap::new());
}

/// `p^k` with a small per-thread cache.
pub fn p_pow(p: u64, k: u32) -> BigInt {
    POWERS.with(|cell| {
        let mut map = cell.borrow_mut();
        let table = map.entry(p).or_insert_with(|| vec![BigInt::one()]);
        while table.len() <= k as usize {
            let next = table.last().unwrap() * p;
            table.push(next);
        }
        table[k as usize].clone()
    })
}

/// Strips factors of `p` from a nonzero integer, returning the count.
pub(crate) fn strip_p(x: &mut BigInt, p: u64) -> u32 {
    let pb = BigInt::from(p);
    let mut count = 0;
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return count;
        }
        *x = q;
        count += 1;
    }
}

/// p-adic valuation of a nonzero integer.
/// Largest k with p^k ≤ n, and 0 for n < p.
pub fn floor_log_p(p: u64, n: u64) -> i64 {
    let mut k = 0;
    let mut q = p;
    while q <= n {
        k += 1;
        q = q.saturating_mul(p);
    }
    k
}

pub fn int_valuation(x: &BigInt, p: u64) -> u32 {
    assert!(!x.is_zero(), "valuation of zero");
    let mut y = x.clone();
    strip_p(&mut y, p)
}

pub(crate) fn v_p_u64(mut n: u64, p: u64) -> u32 {
    assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    r
}

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Square root modulo an odd prime (Tonelli-Shanks). `None` for non-residues.
pub fn sqrt_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if powmod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while powmod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mulmod(tt, tt, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r)
}

pub(crate) fn inv_mod_pk(a: &BigInt, modulus: &BigInt) -> BigInt {
    let e = a.extended_gcd(modulus);
    debug_assert!(e.gcd.is_one(), "inverse of a non-unit");
    e.x.mod_floor(modulus)
}

/// An element of Q_p known to finite precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicNumber {
    prime: u64,
    unit: BigInt,
    valuation: i64,
    rel_prec: i64,
    is_exact_zero: bool,
}

impl PadicNumber {
    fn check_prime(p: u64) {
        assert!(p >= 3 && p % 2 == 1, "prime must be odd, got {p}");
    }

    /// Zero known modulo `p^absprec`.
    pub fn zero(p: u64, absprec: i64) -> Self {
        Self::check_prime(p);
        PadicNumber { prime: p, unit: BigInt::zero(), valuation: absprec, rel_prec: 0, is_exact_zero: true }
    }

    /// Zero with unbounded precision, for coefficients that are zero by construction.
    pub fn exact_zero(p: u64) -> Self {
        Self::zero(p, EXACT)
    }

    pub fn one(p: u64, absprec: i64) -> Self {
        Self::new(p, 1, absprec)
    }

    /// The integer `value` reduced modulo `p^absprec`.
    pub fn new(p: u64, value: impl Into<BigInt>, absprec: i64) -> Self {
        Self::from_scaled(p, value.into(), 0, absprec)
    }

    /// `value · p^shift` known modulo `p^absprec`.
    pub(crate) fn from_scaled(p: u64, value: BigInt, shift: i64, absprec: i64) -> Self {
        Self::check_prime(p);
        let budget = absprec.saturating_sub(shift);
        if budget <= 0 || value.is_zero() {
            return Self::zero(p, absprec);
        }
        assert!(budget < EXACT / 2, "nonzero p-adic values need a finite precision");
        let budget_u = budget.min(u32::MAX as i64) as u32;
        let m = p_pow(p, budget_u);
        let mut v = value.mod_floor(&m);
        if v.is_zero() {
            return Self::zero(p, absprec);
        }
        let w = strip_p(&mut v, p) as i64;
        PadicNumber { prime: p, unit: v, valuation: shift + w, rel_prec: budget - w, is_exact_zero: false }
    }

    /// `unit · p^valuation` with `rel_prec` significant digits.
    pub fn from_parts(p: u64, unit: BigInt, valuation: i64, rel_prec: i64) -> PadicResult<Self> {
        if p < 3 || p % 2 == 0 {
            return Err(PadicError::BadPrime(p));
        }
        if rel_prec <= 0 {
            return Err(PadicError::PrecisionUnderflow(format!("relative precision {rel_prec}")));
        }
        Ok(Self::from_scaled(p, unit, valuation, valuation + rel_prec))
    }

    /// Coerces an exact rational, known modulo `p^absprec`.
    pub fn from_rational(p: u64, r: &BigRational, absprec: i64) -> Self {
        Self::check_prime(p);
        if r.is_zero() {
            return Self::zero(p, absprec);
        }
        let mut num = r.numer().clone();
        let mut den = r.denom().clone();
        let vn = strip_p(&mut num, p) as i64;
        let vd = strip_p(&mut den, p) as i64;
        let val = vn - vd;
        let budget = absprec - val;
        if budget <= 0 {
            return Self::zero(p, absprec);
        }
        let m = p_pow(p, budget as u32);
        let unit = (num.mod_floor(&m) * inv_mod_pk(&den.mod_floor(&m), &m)).mod_floor(&m);
        PadicNumber { prime: p, unit, valuation: val, rel_prec: budget, is_exact_zero: false }
    }

    pub fn from_i64(p: u64, v: i64, absprec: i64) -> Self {
        Self::new(p, BigInt::from(v), absprec)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// The valuation; for a zero this is the absolute precision (a lower bound).
    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    pub fn rel_prec(&self) -> i64 {
        self.rel_prec
    }

    pub fn absprec(&self) -> i64 {
        if self.is_exact_zero {
            self.valuation
        } else {
            self.valuation + self.rel_prec
        }
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// True when the value is zero to its known precision.
    pub fn is_zero(&self) -> bool {
        self.is_exact_zero
    }

    pub fn is_unit(&self) -> bool {
        !self.is_exact_zero && self.valuation == 0
    }

    pub fn is_integral(&self) -> bool {
        self.valuation >= 0
    }

    fn same_prime(&self, other: &Self) -> PadicResult<()> {
        if self.prime != other.prime {
            Err(PadicError::PrimeMismatch(self.prime, other.prime))
        } else {
            Ok(())
        }
    }

    /// Re-pads to absolute precision `absprec` with zero digits. Only for fixed-point
    /// computations whose error is bounded by a separate analysis.
    pub(crate) fn padded(&self, absprec: i64) -> Self {
        if self.is_exact_zero {
            return Self::zero(self.prime, absprec);
        }
        if absprec <= self.valuation {
            return Self::zero(self.prime, absprec);
        }
        let rel = absprec - self.valuation;
        let m = p_pow(self.prime, rel as u32);
        PadicNumber { unit: self.unit.mod_floor(&m), rel_prec: rel, ..self.clone() }
    }

    /// Lowers the absolute precision to `absprec` (never raises it).
    pub fn truncate(&self, absprec: i64) -> Self {
        if absprec >= self.absprec() {
            return self.clone();
        }
        if self.is_exact_zero {
            return Self::zero(self.prime, absprec);
        }
        Self::from_scaled(self.prime, self.unit.clone(), self.valuation, absprec)
    }

    pub fn try_add(&self, other: &Self) -> PadicResult<Self> {
        self.same_prime(other)?;
        let p = self.prime;
        let abs = self.absprec().min(other.absprec());
        if self.is_exact_zero {
            return Ok(other.truncate(abs));
        }
        if other.is_exact_zero {
            return Ok(self.truncate(abs));
        }
        let v = self.valuation.min(other.valuation);
        if v >= abs {
            return Ok(Self::zero(p, abs));
        }
        let budget = (abs - v) as u32;
        let term = |x: &Self| -> BigInt {
            let d = x.valuation - v;
            if d >= budget as i64 {
                BigInt::zero()
            } else {
                &x.unit * p_pow(p, d as u32)
            }
        };
        let sum = term(self) + term(other);
        Ok(Self::from_scaled(p, sum, v, abs))
    }

    pub fn try_sub(&self, other: &Self) -> PadicResult<Self> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Self) -> PadicResult<Self> {
        self.same_prime(other)?;
        let p = self.prime;
        match (self.is_exact_zero, other.is_exact_zero) {
            (true, true) => Ok(Self::zero(p, self.valuation.saturating_add(other.valuation).min(EXACT))),
            (true, false) => Ok(Self::zero(p, self.valuation.saturating_add(other.valuation).min(EXACT))),
            (false, true) => Ok(Self::zero(p, other.valuation.saturating_add(self.valuation).min(EXACT))),
            (false, false) => {
                let rel = self.rel_prec.min(other.rel_prec);
                let m = p_pow(p, rel as u32);
                let unit = (&self.unit * &other.unit).mod_floor(&m);
                Ok(PadicNumber { prime: p, unit, valuation: self.valuation + other.valuation, rel_prec: rel, is_exact_zero: false })
            }
        }
    }

    pub fn try_div(&self, other: &Self) -> PadicResult<Self> {
        self.same_prime(other)?;
        let p = self.prime;
        if other.is_exact_zero {
            return Err(PadicError::DivisionByZero { p, absprec: other.valuation });
        }
        if self.is_exact_zero {
            return Ok(Self::zero(p, self.valuation.saturating_sub(other.valuation)));
        }
        let rel = self.rel_prec.min(other.rel_prec);
        let m = p_pow(p, rel as u32);
        let inv = inv_mod_pk(&other.unit.mod_floor(&m), &m);
        let unit = (&self.unit * inv).mod_floor(&m);
        Ok(PadicNumber { prime: p, unit, valuation: self.valuation - other.valuation, rel_prec: rel, is_exact_zero: false })
    }

    pub fn inverse(&self) -> PadicResult<Self> {
        if self.is_exact_zero {
            return Err(PadicError::DivisionByZero { p: self.prime, absprec: self.valuation });
        }
        let m = p_pow(self.prime, self.rel_prec as u32);
        Ok(PadicNumber { unit: inv_mod_pk(&self.unit, &m), valuation: -self.valuation, ..self.clone() })
    }

    /// Multiplication by an exact integer.
    pub fn mul_int(&self, n: i64) -> Self {
        if n == 0 {
            return Self::exact_zero(self.prime);
        }
        let v = v_p_u64(n.unsigned_abs(), self.prime) as i64;
        if self.is_exact_zero {
            return Self::zero(self.prime, self.valuation.saturating_add(v).min(EXACT));
        }
        let m = p_pow(self.prime, self.rel_prec as u32);
        let u = BigInt::from(n / self.prime.pow(v as u32) as i64);
        PadicNumber { unit: (&self.unit * u).mod_floor(&m), valuation: self.valuation + v, ..self.clone() }
    }

    /// Division by a nonzero exact integer.
    pub fn div_int(&self, n: i64) -> Self {
        assert!(n != 0, "division by the integer 0");
        let v = v_p_u64(n.unsigned_abs(), self.prime) as i64;
        if self.is_exact_zero {
            return Self::zero(self.prime, self.valuation - v);
        }
        let m = p_pow(self.prime, self.rel_prec as u32);
        let u = BigInt::from(n / self.prime.pow(v as u32) as i64);
        let inv = inv_mod_pk(&u.mod_floor(&m), &m);
        PadicNumber { unit: (&self.unit * inv).mod_floor(&m), valuation: self.valuation - v, ..self.clone() }
    }

    /// Multiplication by an exact rational.
    pub fn mul_rational(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::exact_zero(self.prime);
        }
        let mut num = r.numer().clone();
        let mut den = r.denom().clone();
        let vn = strip_p(&mut num, self.prime) as i64;
        let vd = strip_p(&mut den, self.prime) as i64;
        if self.is_exact_zero {
            return Self::zero(self.prime, (self.valuation.saturating_add(vn - vd)).min(EXACT));
        }
        let m = p_pow(self.prime, self.rel_prec as u32);
        let u = (num.mod_floor(&m) * inv_mod_pk(&den.mod_floor(&m), &m)).mod_floor(&m);
        PadicNumber { unit: (&self.unit * u).mod_floor(&m), valuation: self.valuation + vn - vd, ..self.clone() }
    }

    fn neg_ref(&self) -> Self {
        if self.is_exact_zero {
            return self.clone();
        }
        let m = p_pow(self.prime, self.rel_prec as u32);
        PadicNumber { unit: (&m - &self.unit).mod_floor(&m), ..self.clone() }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        if e == 0 {
            return Self::one(self.prime, self.rel_prec.max(1));
        }
        let mut base = self.clone();
        let mut acc = if self.is_exact_zero {
            return Self::zero(self.prime, self.valuation.saturating_mul(e as i64).min(EXACT));
        } else {
            Self::one(self.prime, self.rel_prec)
        };
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplies by `p^k` (exactly; precision shifts with the value).
    pub fn mul_p_pow(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.valuation = if self.is_exact_zero { self.valuation.saturating_add(k).min(EXACT) } else { self.valuation + k };
        out
    }

    /// Residue modulo p of an integral value.
    pub fn residue(&self) -> Option<u64> {
        if self.absprec() < 1 || self.valuation < 0 {
            return None;
        }
        if self.is_exact_zero || self.valuation > 0 {
            return Some(0);
        }
        (&self.unit % BigInt::from(self.prime)).to_u64()
    }

    /// Representative in `[0, p^k)` of an integral value, `k ≤ absprec`.
    pub fn to_bigint_mod(&self, k: i64) -> Option<BigInt> {
        if self.valuation < 0 && !self.is_exact_zero {
            return None;
        }
        if k > self.absprec() || k < 0 {
            return None;
        }
        if self.is_exact_zero || self.valuation >= k {
            return Some(BigInt::zero());
        }
        let m = p_pow(self.prime, k as u32);
        Some((&self.unit * p_pow(self.prime, self.valuation as u32)).mod_floor(&m))
    }

    /// The representative `unit · p^valuation` as an exact rational.
    pub fn to_rational(&self) -> BigRational {
        if self.is_exact_zero {
            return BigRational::zero();
        }
        if self.valuation >= 0 {
            BigRational::from_integer(&self.unit * p_pow(self.prime, self.valuation as u32))
        } else {
            BigRational::new(self.unit.clone(), p_pow(self.prime, (-self.valuation) as u32))
        }
    }

    /// Symmetric integer representative in `(-p^k/2, p^k/2]` of an integral value.
    pub fn to_signed_bigint(&self, k: i64) -> Option<BigInt> {
        let r = self.to_bigint_mod(k)?;
        let m = p_pow(self.prime, k as u32);
        if &r * 2 > m {
            Some(r - m)
        } else {
            Some(r)
        }
    }

    /// Little-endian base-p digits of the unit part.
    pub fn unit_digits(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.rel_prec.max(0) as usize);
        let mut u = self.unit.clone();
        let pb = BigInt::from(self.prime);
        for _ in 0..self.rel_prec {
            let (q, r) = u.div_rem(&pb);
            out.push(r.to_u64().unwrap());
            u = q;
        }
        out
    }

    /// Agreement of two approximations at their common precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.try_sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }

    /// Teichmüller lift of the residue of a unit, modulo `p^target_prec`.
    pub fn teichmuller(&self, target_prec: i64) -> PadicResult<Self> {
        if !self.is_unit() {
            return Err(PadicError::NotAUnit(self.to_string()));
        }
        if target_prec < 1 {
            return Err(PadicError::PrecisionUnderflow(format!("target precision {target_prec}")));
        }
        let p = self.prime;
        let m = p_pow(p, target_prec as u32);
        let pb = BigInt::from(p);
        let mut x = BigInt::from(self.residue().unwrap());
        loop {
            let next = x.modpow(&pb, &m);
            if next == x {
                break;
            }
            x = next;
        }
        Ok(Self::new(p, x, target_prec))
    }

    /// A square root. The branch is `hint` modulo p when given, otherwise the
    /// root whose residue lies in `1..=(p-1)/2`.
    pub fn sqrt(&self, hint: Option<u64>) -> PadicResult<Self> {
        let p = self.prime;
        if self.is_exact_zero {
            let abs = if self.valuation >= EXACT { EXACT } else { self.valuation.div_euclid(2) };
            return Ok(Self::zero(p, abs));
        }
        if self.valuation % 2 != 0 {
            return Err(PadicError::OddValuation(self.valuation));
        }
        let u0 = (&self.unit % BigInt::from(p)).to_u64().unwrap();
        let mut s0 = sqrt_mod_p(u0, p).ok_or(PadicError::NonResidue(p))?;
        if s0 > (p - 1) / 2 {
            s0 = p - s0;
        }
        if let Some(h) = hint {
            let h = h % p;
            if h == s0 {
            } else if h == p - s0 {
                s0 = p - s0;
            } else {
                return Err(PadicError::BranchMismatch { p, hint: h, square: u0 });
            }
        }
        let rel = self.rel_prec;
        let mut r = BigInt::from(s0);
        let mut k: i64 = 1;
        let two_inv_cache = |m: &BigInt| inv_mod_pk(&BigInt::from(2), m);
        while k < rel {
            k = (2 * k).min(rel);
            let m = p_pow(p, k as u32);
            let u = self.unit.mod_floor(&m);
            let r_inv = inv_mod_pk(&r.mod_floor(&m), &m);
            r = ((&r + u * r_inv) * two_inv_cache(&m)).mod_floor(&m);
        }
        Ok(PadicNumber { prime: p, unit: r, valuation: self.valuation / 2, rel_prec: rel, is_exact_zero: false })
    }

    /// Newton lift of a simple root of `f` (coefficients constant first) from `x0`.
    pub fn hensel_lift_root(coeffs: &[PadicNumber], x0: &PadicNumber, target_prec: i64) -> PadicResult<Self> {
        let p = x0.prime;
        let deriv = crate::poly::derivative(coeffs);
        let r0 = x0.residue().ok_or_else(|| PadicError::NotIntegral(x0.to_string()))?;
        let start = Self::new(p, BigInt::from(r0), target_prec);
        let fx = crate::poly::eval(coeffs, &start);
        if fx.residue() != Some(0) {
            return Err(PadicError::NotARoot);
        }
        let dfx = crate::poly::eval(&deriv, &start);
        if !dfx.is_unit() {
            return Err(PadicError::NonSimpleRoot);
        }
        let mut x = match x0.to_bigint_mod(x0.absprec().min(target_prec).max(1)) {
            Some(v) => Self::new(p, v, target_prec),
            None => start,
        };
        for _ in 0..(2 + 2 * (64 - (target_prec.max(1) as u64).leading_zeros())) {
            let fx = crate::poly::eval(coeffs, &x);
            if fx.is_zero() {
                break;
            }
            let dfx = crate::poly::eval(&deriv, &x);
            let step = fx.try_div(&dfx)?;
            let next = x.try_sub(&step)?;
            x = match next.to_bigint_mod(next.absprec().min(target_prec)) {
                Some(v) => Self::new(p, v, target_prec),
                None => next,
            };
        }
        let fx = crate::poly::eval(coeffs, &x);
        let dfx = crate::poly::eval(&deriv, &x);
        // The root is determined to the precision at which f(x) vanishes.
        let achieved = fx.absprec().min(target_prec) - dfx.valuation();
        Ok(x.truncate(achieved.min(target_prec)))
    }

    fn fmt_term(f: &mut fmt::Formatter<'_>, p: u64, digit: u64, exp: i64) -> fmt::Result {
        match (digit, exp) {
            (d, 0) => write!(f, "{d}"),
            (1, 1) => write!(f, "{p}"),
            (d, 1) => write!(f, "{d}·{p}"),
            (1, e) => write!(f, "{p}^{e}"),
            (d, e) => write!(f, "{d}·{p}^{e}"),
        }
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prime;
        let mut first = true;
        if !self.is_exact_zero {
            for (i, d) in self.unit_digits().into_iter().enumerate() {
                if d == 0 {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                Self::fmt_term(f, p, d, self.valuation + i as i64)?;
                first = false;
            }
        }
        let abs = self.absprec();
        if abs >= EXACT {
            if first {
                write!(f, "0")?;
            }
            return Ok(());
        }
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "O({p}^{abs})")
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl<'a> $tr<&'a PadicNumber> for &'a PadicNumber {
            type Output = PadicNumber;
            fn $m(self, rhs: &'a PadicNumber) -> PadicNumber {
                self.$try(rhs).unwrap_or_else(|e| panic!("p-adic {}: {e}", stringify!($m)))
            }
        }
        impl $tr<PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $m(self, rhs: PadicNumber) -> PadicNumber {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);
forward_binop!(Div, div, try_div);

impl Neg for &PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_ref()
    }
}

impl Neg for PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_ref()
    }
}

/// Compact serialized form.
#[derive(Serialize, Deserialize)]
struct PadicRepr {
    prime: u64,
    valuation: i64,
    digits: Vec<u64>,
    absprec: i64,
}

impl Serialize for PadicNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let digits = if self.is_exact_zero { Vec::new() } else { self.unit_digits() };
        PadicRepr { prime: self.prime, valuation: self.valuation, digits, absprec: self.absprec() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PadicRepr::deserialize(d)?;
        if r.prime < 3 || r.prime % 2 == 0 {
            return Err(serde::de::Error::custom(format!("bad prime {}", r.prime)));
        }
        if r.digits.is_empty() {
            return Ok(PadicNumber::zero(r.prime, r.absprec));
        }
        let mut unit = BigInt::zero();
        for &d in r.digits.iter().rev() {
            if d >= r.prime {
                return Err(serde::de::Error::custom("digit out of range"));
            }
            unit = unit * r.prime + d;
        }
        let v = PadicNumber::from_scaled(r.prime, unit, r.valuation, r.absprec);
        if v.valuation != r.valuation && !v.is_exact_zero {
            return Err(serde::de::Error::custom("leading digit must be nonzero"));
        }
        Ok(v)
    }
}

/// Sign-aware helper used by rational reconstruction and reporting.

#[cfg(test)]
mod tests {
    use super::*;

    fn pn(v: i64, n: i64) -> PadicNumber {
        PadicNumber::from_i64(7, v, n)
    }

    #[test]
    fn add_carries_into_valuation() {
        let s = &pn(3, 5) + &pn(4, 5);
        assert_eq!(s.valuation(), 1);
        assert_eq!(s.unit(), &BigInt::from(1));
        assert_eq!(s.absprec(), 5);
    }

    #[test]
    fn valuation_of_98() {
        let x = pn(98, 5);
        assert_eq!(x.valuation(), 2);
        assert_eq!(x.unit(), &BigInt::from(2));
        assert_eq!(x.rel_prec(), 3);
    }

    #[test]
    fn precision_rules() {
        let a = PadicNumber::from_parts(7, BigInt::from(3), 1, 4).unwrap();
        let b = PadicNumber::from_parts(7, BigInt::from(2), 0, 2).unwrap();
        assert_eq!((&a + &b).absprec(), 2);
        let m = &a * &b;
        assert_eq!(m.valuation(), 1);
        assert_eq!(m.rel_prec(), 2);
        let q = &a / &b;
        assert_eq!(q.rel_prec(), 2);
        assert_eq!(q.valuation(), 1);
    }

    #[test]
    fn division_by_zero_errors() {
        let z = PadicNumber::zero(7, 4);
        assert!(matches!(pn(1, 4).try_div(&z), Err(PadicError::DivisionByZero { .. })));
    }

    #[test]
    fn prime_mismatch_errors() {
        let a = PadicNumber::from_i64(7, 1, 3);
        let b = PadicNumber::from_i64(11, 1, 3);
        assert_eq!(a.try_add(&b), Err(PadicError::PrimeMismatch(7, 11)));
    }

    #[test]
    fn negative_valuation_from_rational() {
        let r = BigRational::new(BigInt::from(3), BigInt::from(49));
        let x = PadicNumber::from_rational(7, &r, 3);
        assert_eq!(x.valuation(), -2);
        assert_eq!(x.rel_prec(), 5);
        let back = &x * &PadicNumber::from_i64(7, 49, 10);
        assert!(back.agrees_with(&pn(3, 3)));
    }

    #[test]
    fn teichmuller_examples() {
        let one = pn(1, 6).teichmuller(6).unwrap();
        assert_eq!(one.to_bigint_mod(6).unwrap(), BigInt::from(1));
        let m1 = pn(6, 1).teichmuller(4).unwrap();
        assert_eq!(m1.to_bigint_mod(4).unwrap(), BigInt::from(7i64.pow(4) - 1));
        // Exhaustive oracle mod 343.
        let t = pn(3, 1).teichmuller(3).unwrap();
        let want: Vec<i64> = (0..343).filter(|x| x % 7 == 3 && (0..7).fold(1i64, |a, _| a * x % 343) == *x).collect();
        assert_eq!(want.len(), 1);
        assert_eq!(t.to_bigint_mod(3).unwrap(), BigInt::from(want[0]));
        assert!(pn(7, 3).teichmuller(3).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let r = pn(4, 5).sqrt(None).unwrap();
        assert_eq!(r.to_bigint_mod(5).unwrap(), BigInt::from(2));
        let r = pn(2, 1).sqrt(None).unwrap();
        assert_eq!(r.residue(), Some(3));
        let r = pn(2, 5).sqrt(None).unwrap();
        let want: Vec<i64> = (0..16807).filter(|x| x % 7 == 3 && x * x % 16807 == 2).collect();
        assert_eq!(r.to_bigint_mod(5).unwrap(), BigInt::from(want[0]));
        let r = pn(2, 5).sqrt(Some(4)).unwrap();
        assert_eq!(r.residue(), Some(4));
        assert_eq!(pn(7, 5).sqrt(None), Err(PadicError::OddValuation(1)));
        assert_eq!(pn(3, 5).sqrt(None), Err(PadicError::NonResidue(7)));
    }

    #[test]
    fn hensel_examples() {
        let f: Vec<PadicNumber> = [-4, 0, 1].iter().map(|&c| pn(c, 10)).collect();
        let r = PadicNumber::hensel_lift_root(&f, &pn(2, 1), 10).unwrap();
        assert_eq!(r.to_bigint_mod(10).unwrap(), BigInt::from(2));

        let p = 11;
        let g: Vec<PadicNumber> = [-1, -1, 0, 1].iter().map(|&c| PadicNumber::from_i64(p, c, 6)).collect();
        let root0 = (0..p as i64).find(|x| (x * x * x - x - 1).rem_euclid(p as i64) == 0 && (3 * x * x - 1).rem_euclid(11) != 0);
        let root0 = root0.expect("x^3 - x - 1 has a simple root mod 11");
        let r = PadicNumber::hensel_lift_root(&g, &PadicNumber::from_i64(p, root0, 1), 6).unwrap();
        let x = r.to_bigint_mod(6).unwrap();
        let m = BigInt::from(11).pow(6);
        let val: BigInt = &x * &x * &x - &x - 1;
        assert!(val.mod_floor(&m).is_zero());

        let h: Vec<PadicNumber> = [-7, 0, 1].iter().map(|&c| pn(c, 10)).collect();
        assert_eq!(PadicNumber::hensel_lift_root(&h, &pn(0, 1), 10), Err(PadicError::NonSimpleRoot));
    }

    #[test]
    fn display_matches_digit_notation() {
        let x = PadicNumber::from_i64(7, 2 * 7 + 4 * 49, 3);
        assert_eq!(x.to_string(), "2·7 + 4·7^2 + O(7^3)");
        let y = PadicNumber::from_i64(7, 1 + 49, 3);
        assert_eq!(y.to_string(), "1 + 7^2 + O(7^3)");
        assert_eq!(PadicNumber::zero(7, 4).to_string(), "O(7^4)");
    }

    #[test]
    fn serde_round_trip() {
        let x = PadicNumber::from_rational(11, &BigRational::new(5.into(), 121.into()), 6);
        let s = serde_json::to_string(&x).unwrap();
        let y: PadicNumber = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    const P: u64 = 7;
    const N: i64 = 6;

    fn modulus() -> i64 {
        7i64.pow(N as u32)
    }

    proptest! {
        #[test]
        fn arithmetic_matches_integers(a in 0i64..117649, b in 0i64..117649) {
            let m = modulus();
            let x = PadicNumber::from_i64(P, a, N);
            let y = PadicNumber::from_i64(P, b, N);
            prop_assert_eq!((&x + &y).to_bigint_mod(N).unwrap(), BigInt::from((a + b) % m));
            prop_assert_eq!((&x - &y).to_bigint_mod(N).unwrap(), BigInt::from((a - b).rem_euclid(m)));
            prop_assert_eq!((&x * &y).to_bigint_mod(N).unwrap(), BigInt::from(a * b % m));
            if b % 7 != 0 {
                let q = &x / &y;
                prop_assert_eq!((&q * &y).to_bigint_mod(N).unwrap(), BigInt::from(a % m));
            }
        }

        #[test]
        fn ring_laws(a in -5000i64..5000, b in -5000i64..5000, c in -5000i64..5000,
                     va in 0i64..3, vb in 0i64..3) {
            let x = PadicNumber::from_i64(P, a, N).mul_p_pow(va);
            let y = PadicNumber::from_i64(P, b, N).mul_p_pow(vb);
            let z = PadicNumber::from_i64(P, c, N);
            prop_assert!((&(&x + &y) + &z).agrees_with(&(&x + &(&y + &z))));
            prop_assert!((&x * &(&y + &z)).agrees_with(&(&(&x * &y) + &(&x * &z))));
            if !x.is_zero() && !y.is_zero() {
                prop_assert_eq!((&x * &y).valuation(), x.valuation() + y.valuation());
            }
        }

        #[test]
        fn teichmuller_is_root_of_unity(a in 1u64..7, n in 1i64..12) {
            let w = PadicNumber::from_i64(P, a as i64, n).teichmuller(n).unwrap();
            let w6 = w.pow(6);
            prop_assert!(w6.agrees_with(&PadicNumber::one(P, n)));
            prop_assert_eq!(w.residue(), Some(a));
        }

        #[test]
        fn sqrt_squares_back(a in 1i64..100000, v in 0i64..3) {
            let x = PadicNumber::from_i64(P, a, 8).mul_p_pow(2 * v);
            if let Ok(r) = x.sqrt(None) {
                prop_assert!((&r * &r).agrees_with(&x));
                prop_assert_eq!(r.rel_prec(), x.rel_prec());
            }
        }
    }
}
