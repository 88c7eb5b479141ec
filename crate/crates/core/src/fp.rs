//! Polynomials over F_p and the small extension fields F_{p^k} used for point counts.

use crate::padic::{mulmod, powmod};

/// Polynomial over F_p, constant term first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct FpPoly {
    pub c: Vec<u64>,
}

impl FpPoly {
    pub fn new(mut c: Vec<u64>, p: u64) -> Self {
        for x in c.iter_mut() {
            *x %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        FpPoly { c }
    }

    pub fn zero() -> Self {
        FpPoly { c: Vec::new() }
    }

    pub fn one() -> Self {
        FpPoly { c: vec![1] }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with -1 for the zero polynomial.
    pub fn deg(&self) -> i64 {
        self.c.len() as i64 - 1
    }

    pub fn lead(&self) -> u64 {
        *self.c.last().unwrap_or(&0)
    }

    pub fn eval(&self, x: u64, p: u64) -> u64 {
        let mut acc = 0;
        for &c in self.c.iter().rev() {
            acc = (mulmod(acc, x, p) + c) % p;
        }
        acc
    }

    pub fn add(&self, o: &Self, p: u64) -> Self {
        let n = self.c.len().max(o.c.len());
        let v = (0..n).map(|i| (self.c.get(i).unwrap_or(&0) + o.c.get(i).unwrap_or(&0)) % p).collect();
        Self::new(v, p)
    }

    pub fn neg(&self, p: u64) -> Self {
        Self::new(self.c.iter().map(|&x| (p - x) % p).collect(), p)
    }

    pub fn sub(&self, o: &Self, p: u64) -> Self {
        self.add(&o.neg(p), p)
    }

    pub fn mul(&self, o: &Self, p: u64) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut v = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                v[i + j] = (v[i + j] + mulmod(a, b, p)) % p;
            }
        }
        Self::new(v, p)
    }

    pub fn scale(&self, k: u64, p: u64) -> Self {
        Self::new(self.c.iter().map(|&x| mulmod(x, k, p)).collect(), p)
    }

    pub fn divrem(&self, d: &Self, p: u64) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut r = self.c.clone();
        let dd = d.c.len() - 1;
        let inv = powmod(d.lead(), p - 2, p);
        if r.len() < d.c.len() {
            return (Self::zero(), self.clone());
        }
        let mut q = vec![0u64; r.len() - dd];
        for i in (0..q.len()).rev() {
            let coef = mulmod(r[i + dd], inv, p);
            q[i] = coef;
            if coef == 0 {
                continue;
            }
            for (j, &b) in d.c.iter().enumerate() {
                r[i + j] = (r[i + j] + p - mulmod(coef, b, p)) % p;
            }
        }
        (Self::new(q, p), Self::new(r, p))
    }

    pub fn rem(&self, d: &Self, p: u64) -> Self {
        self.divrem(d, p).1
    }

    pub fn monic(&self, p: u64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(powmod(self.lead(), p - 2, p), p)
    }

    pub fn derivative(&self, p: u64) -> Self {
        Self::new(self.c.iter().enumerate().skip(1).map(|(i, &x)| mulmod(x, i as u64 % p, p)).collect(), p)
    }

    /// Extended gcd: returns (g, s, t) with g monic and s·a + t·b = g.
    pub fn xgcd(a: &Self, b: &Self, p: u64) -> (Self, Self, Self) {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (Self::one(), Self::zero());
        let (mut t0, mut t1) = (Self::zero(), Self::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1, p);
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1, p), p);
            s0 = std::mem::replace(&mut s1, s);
            let t = t0.sub(&q.mul(&t1, p), p);
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = powmod(r0.lead(), p - 2, p);
        (r0.scale(inv, p), s0.scale(inv, p), t0.scale(inv, p))
    }

    pub fn roots(&self, p: u64) -> Vec<u64> {
        (0..p).filter(|&x| self.eval(x, p) == 0).collect()
    }

    pub fn is_squarefree(&self, p: u64) -> bool {
        let (g, _, _) = Self::xgcd(self, &self.derivative(p), p);
        g.deg() == 0
    }
}

/// Legendre symbol of `a` modulo an odd prime, as -1, 0 or 1.
pub fn legendre(a: u64, p: u64) -> i64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if powmod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// F_{p^k} as F_p[z]/(m(z)) with m monic irreducible of degree k.
#[derive(Clone, Debug)]
pub struct ExtField {
    pub p: u64,
    pub k: usize,
    modulus: FpPoly,
}

impl ExtField {
    /// Finds an irreducible polynomial of degree `k ≤ 3` by root-free search.
    pub fn new(p: u64, k: usize) -> Self {
        assert!((1..=3).contains(&k), "extension degree must be 1, 2 or 3");
        if k == 1 {
            return ExtField { p, k, modulus: FpPoly::new(vec![0, 1], p) };
        }
        let total = p.pow(k as u32);
        for idx in 0..total {
            let mut c = Vec::with_capacity(k + 1);
            let mut r = idx;
            for _ in 0..k {
                c.push(r % p);
                r /= p;
            }
            c.push(1);
            let m = FpPoly::new(c, p);
            if m.roots(p).is_empty() {
                return ExtField { p, k, modulus: m };
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    pub fn order(&self) -> u64 {
        self.p.pow(self.k as u32)
    }

    /// The element with base-p digit vector `idx`.
    pub fn element(&self, idx: u64) -> FpPoly {
        let mut c = Vec::with_capacity(self.k);
        let mut r = idx;
        for _ in 0..self.k {
            c.push(r % self.p);
            r /= self.p;
        }
        FpPoly::new(c, self.p)
    }

    pub fn mul(&self, a: &FpPoly, b: &FpPoly) -> FpPoly {
        a.mul(b, self.p).rem(&self.modulus, self.p)
    }

    pub fn pow(&self, a: &FpPoly, mut e: u64) -> FpPoly {
        let mut acc = FpPoly::one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    /// Evaluates a polynomial with F_p coefficients at an extension element.
    pub fn eval(&self, f: &FpPoly, x: &FpPoly) -> FpPoly {
        let mut acc = FpPoly::zero();
        for &c in f.c.iter().rev() {
            acc = self.mul(&acc, x).add(&FpPoly::new(vec![c], self.p), self.p);
        }
        acc
    }

    /// Quadratic character: -1, 0 or 1.
    pub fn chi(&self, a: &FpPoly) -> i64 {
        if a.is_zero() {
            return 0;
        }
        let r = self.pow(a, (self.order() - 1) / 2);
        if r == FpPoly::one() {
            1
        } else {
            -1
        }
    }
}

/// Number of points on y² = f(x) over F_{p^k}, including the single point at infinity.
pub fn count_points(f: &FpPoly, p: u64, k: usize) -> u64 {
    let field = ExtField::new(p, k);
    let mut n: i64 = 1;
    for idx in 0..field.order() {
        let x = field.element(idx);
        n += 1 + field.chi(&field.eval(f, &x));
    }
    n as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divrem_and_xgcd() {
        let p = 7;
        let a = FpPoly::new(vec![1, 2, 3, 4], p);
        let b = FpPoly::new(vec![5, 1], p);
        let (q, r) = a.divrem(&b, p);
        assert_eq!(q.mul(&b, p).add(&r, p), a);
        let (g, s, t) = FpPoly::xgcd(&a, &b, p);
        assert_eq!(s.mul(&a, p).add(&t.mul(&b, p), p), g);
    }

    #[test]
    fn point_count_of_elliptic_curve() {
        // y^2 = x^3 + 1 over F_7 has 12 points; over F_49 the count follows from a_p = 4.
        let f = FpPoly::new(vec![1, 0, 0, 1], 7);
        assert_eq!(count_points(&f, 7, 1), 12);
        // a = 7 + 1 - 12 = -4; #E(F_49) = 49 + 1 - (a^2 - 14) = 48.
        assert_eq!(count_points(&f, 7, 2), 48);
    }
}
