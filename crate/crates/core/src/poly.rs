//! Dense polynomials (constant term first) over Q_p and over Q.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::padic::PadicNumber;

pub fn eval(coeffs: &[PadicNumber], x: &PadicNumber) -> PadicNumber {
    let mut acc = PadicNumber::exact_zero(x.prime());
    for c in coeffs.iter().rev() {
        acc = &(&acc * x) + c;
    }
    acc
}

pub fn derivative(coeffs: &[PadicNumber]) -> Vec<PadicNumber> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c.mul_int(i as i64)).collect()
}

pub fn add(a: &[PadicNumber], b: &[PadicNumber]) -> Vec<PadicNumber> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => x + y,
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => unreachable!(),
        })
        .collect()
}

pub fn sub(a: &[PadicNumber], b: &[PadicNumber]) -> Vec<PadicNumber> {
    let nb: Vec<PadicNumber> = b.iter().map(|c| -c).collect();
    add(a, &nb)
}

pub fn mul(a: &[PadicNumber], b: &[PadicNumber]) -> Vec<PadicNumber> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let p = a[0].prime();
    let mut out = vec![PadicNumber::exact_zero(p); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() && x.absprec() >= crate::padic::EXACT {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

pub fn scale(a: &[PadicNumber], c: &PadicNumber) -> Vec<PadicNumber> {
    a.iter().map(|x| x * c).collect()
}

/// Exact polynomial over Q, constant term first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly(pub Vec<BigRational>);

impl RationalPoly {
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        RationalPoly(c)
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
    }

    pub fn degree(&self) -> Option<usize> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.0.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.0.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.0.is_empty() || o.0.is_empty() {
            return Self::new(Vec::new());
        }
        let mut c = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let mut r = self.0.clone();
        if r.len() <= dd {
            return (Self::new(Vec::new()), self.clone());
        }
        let lead = d.0[dd].clone();
        let mut q = vec![BigRational::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = &r[i + dd] / &lead;
            for (j, b) in d.0.iter().enumerate() {
                r[i + j] -= &c * b;
            }
            q[i] = c;
        }
        (Self::new(q), Self::new(r))
    }

    /// Returns (g, s, t) with s·a + t·b = g and g monic.
    pub fn xgcd(a: &Self, b: &Self) -> (Self, Self, Self) {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (Self::new(vec![BigRational::one()]), Self::new(Vec::new()));
        let (mut t0, mut t1) = (Self::new(Vec::new()), Self::new(vec![BigRational::one()]));
        while r1.degree().is_some() {
            let (q, r) = r0.divrem(&r1);
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, s);
            let t = t0.sub(&q.mul(&t1));
            t0 = std::mem::replace(&mut t1, t);
        }
        let lead = r0.0.last().cloned().unwrap_or_else(BigRational::one);
        let norm = |x: &Self| Self::new(x.0.iter().map(|c| c / &lead).collect());
        (norm(&r0), norm(&s0), norm(&t0))
    }

    pub fn to_padic(&self, p: u64, absprec: i64) -> Vec<PadicNumber> {
        self.0.iter().map(|c| PadicNumber::from_rational(p, c, absprec)).collect()
    }

    /// Discriminant up to sign and leading-coefficient normalization: the
    /// resultant of the polynomial and its derivative.
    pub fn resultant_with_derivative(&self) -> BigRational {
        let d = self.derivative();
        resultant(&self.0, &d.0)
    }

    /// Rational roots, found by the rational root theorem on the cleared polynomial.
    pub fn rational_roots(&self) -> Vec<BigRational> {
        let Some(deg) = self.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let mut ints = clear_denominators(&self.0);
        let mut roots = Vec::new();
        // Strip zero roots.
        while ints.first().is_some_and(|c| c.is_zero()) {
            ints.remove(0);
            if !roots.contains(&BigRational::zero()) {
                roots.push(BigRational::zero());
            }
        }
        if ints.len() <= 1 {
            return roots;
        }
        let a0 = ints[0].abs();
        let an = ints.last().unwrap().abs();
        let num_divs = divisors(&a0);
        let den_divs = divisors(&an);
        for n in &num_divs {
            for d in &den_divs {
                for sign in [1i32, -1] {
                    let r = BigRational::new(n * BigInt::from(sign), d.clone());
                    if !roots.contains(&r) && self.eval(&r).is_zero() {
                        roots.push(r);
                    }
                }
            }
        }
        roots.sort();
        roots
    }
}

/// Integer multiple of a rational coefficient list with content removed.
pub fn clear_denominators(c: &[BigRational]) -> Vec<BigInt> {
    use num_integer::Integer;
    let mut l = BigInt::one();
    for x in c {
        l = l.lcm(x.denom());
    }
    c.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    use num_integer::Integer;
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if n.is_multiple_of(&d) {
            out.push(d.clone());
            let q = n / &d;
            if q != d {
                out.push(q);
            }
        }
        d += 1;
    }
    out
}

/// Resultant via the Sylvester determinant over Q.
pub fn resultant(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let m = a.len() - 1;
    let n = b.len() - 1;
    let size = m + n;
    if size == 0 {
        return BigRational::one();
    }
    let mut mat = vec![vec![BigRational::zero(); size]; size];
    for r in 0..n {
        for (j, c) in a.iter().rev().enumerate() {
            mat[r][r + j] = c.clone();
        }
    }
    for r in 0..m {
        for (j, c) in b.iter().rev().enumerate() {
            mat[n + r][r + j] = c.clone();
        }
    }
    det_rational(mat)
}

pub fn det_rational(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let pv = m[col][col].clone();
        det *= &pv;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pv;
            for c in col..n {
                let t = &f * &m[col][c];
                m[r][c] -= t;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn rational_roots_of_cubic() {
        let f = RationalPoly::from_ints(&[-6, 11, -6, 1]);
        assert_eq!(f.rational_roots(), vec![q(1), q(2), q(3)]);
        let g = RationalPoly::new(vec![q(-1), q(0), q(4)]);
        assert_eq!(g.rational_roots(), vec![BigRational::new((-1).into(), 2.into()), BigRational::new(1.into(), 2.into())]);
    }

    #[test]
    fn discriminant_of_quadratic() {
        // x^2 - 5: Res(f, f') = -4 * (-5) * ... = 4 * 5 up to sign.
        let f = RationalPoly::from_ints(&[-5, 0, 1]);
        assert_eq!(f.resultant_with_derivative().abs(), q(20));
        let g = RationalPoly::from_ints(&[1, -2, 1]);
        assert!(g.resultant_with_derivative().is_zero());
    }

    #[test]
    fn xgcd_identity() {
        let a = RationalPoly::from_ints(&[1, 2, 0, 3, 1]);
        let b = a.derivative();
        let (g, s, t) = RationalPoly::xgcd(&a, &b);
        assert_eq!(g, RationalPoly::from_ints(&[1]));
        assert_eq!(s.mul(&a).add(&t.mul(&b)), g);
    }

    #[test]
    fn padic_eval_matches_integer() {
        let f: Vec<PadicNumber> = [3, 0, 2, 1].iter().map(|&c| PadicNumber::from_i64(7, c, 8)).collect();
        let v = eval(&f, &PadicNumber::from_i64(7, 5, 8));
        assert_eq!(v.to_bigint_mod(8).unwrap(), BigInt::from(3 + 2 * 25 + 125));
    }
}
