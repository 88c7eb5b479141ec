//! Truncated power series over Q_p with explicit tail bounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{v_p_u64, PadicNumber, EXACT};

/// Lower bound on the valuation of the unknown coefficients `b_i`, `i ≥ t_prec`:
/// `v(b_i) ≥ min_val`, minus `v_p(i)` for formal antiderivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailBound {
    pub min_val: i64,
    pub antiderivative: bool,
}

impl TailBound {
    pub const INTEGRAL: TailBound = TailBound { min_val: 0, antiderivative: false };

    fn at(&self, i: usize, p: u64) -> i64 {
        if self.antiderivative && i > 0 {
            self.min_val - v_p_u64(i as u64, p) as i64
        } else {
            self.min_val
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicPowerSeries {
    prime: u64,
    coeffs: Vec<PadicNumber>,
    t_prec: usize,
    tail: TailBound,
}

impl PadicPowerSeries {
    pub fn new(p: u64, mut coeffs: Vec<PadicNumber>, t_prec: usize) -> Self {
        coeffs.truncate(t_prec);
        debug_assert!(coeffs.iter().all(|c| c.prime() == p));
        PadicPowerSeries { prime: p, coeffs, t_prec, tail: TailBound::INTEGRAL }
    }

    pub fn with_tail(mut self, tail: TailBound) -> Self {
        self.tail = tail;
        self
    }

    pub fn zero(p: u64, t_prec: usize) -> Self {
        Self::new(p, Vec::new(), t_prec)
    }

    /// A polynomial viewed as a series known to `O(t^t_prec)`.
    pub fn from_poly(p: u64, coeffs: &[PadicNumber], t_prec: usize) -> Self {
        Self::new(p, coeffs.to_vec(), t_prec)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn t_prec(&self) -> usize {
        self.t_prec
    }

    pub fn tail(&self) -> TailBound {
        self.tail
    }

    pub fn coeffs(&self) -> &[PadicNumber] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> PadicNumber {
        self.coeffs.get(i).cloned().unwrap_or_else(|| PadicNumber::exact_zero(self.prime))
    }

    /// True when every known coefficient is p-integral.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero() || c.valuation() >= 0)
    }

    /// Smallest valuation among known nonzero coefficients.
    pub fn min_coeff_valuation(&self) -> Option<i64> {
        self.coeffs.iter().filter(|c| !c.is_zero()).map(|c| c.valuation()).min()
    }

    /// Order at t = 0 of the reduction modulo p, if it is below `t_prec`.
    pub fn order_mod_p(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero() && c.valuation() <= 0)
    }

    pub fn truncate_t(&self, m: usize) -> Self {
        let mut s = self.clone();
        s.t_prec = s.t_prec.min(m);
        s.coeffs.truncate(s.t_prec);
        s
    }

    fn combine_tail(&self, o: &Self) -> TailBound {
        TailBound {
            min_val: self.tail.min_val.min(o.tail.min_val),
            antiderivative: self.tail.antiderivative || o.tail.antiderivative,
        }
    }

    fn require_plain(&self, what: &str) -> Result<()> {
        if self.tail.antiderivative {
            return Err(Error::Series(format!("{what} of a formal antiderivative")));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Self {
        let m = self.t_prec.min(o.t_prec);
        let n = self.coeffs.len().max(o.coeffs.len()).min(m);
        let c = (0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect();
        Self::new(self.prime, c, m).with_tail(self.combine_tail(o))
    }

    pub fn neg(&self) -> Self {
        let c = self.coeffs.iter().map(|x| -x).collect();
        Self::new(self.prime, c, self.t_prec).with_tail(self.tail)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &PadicNumber) -> Self {
        let cv = if c.is_zero() { c.absprec() } else { c.valuation() };
        let coeffs = self.coeffs.iter().map(|x| x * c).collect();
        Self::new(self.prime, coeffs, self.t_prec).with_tail(TailBound {
            min_val: self.tail.min_val.saturating_add(cv).min(EXACT),
            antiderivative: self.tail.antiderivative,
        })
    }

    fn low_val(&self) -> i64 {
        self.min_coeff_valuation().unwrap_or(EXACT).min(self.tail.min_val)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.require_plain("product")?;
        o.require_plain("product")?;
        let m = self.t_prec.min(o.t_prec);
        let mut c = vec![PadicNumber::exact_zero(self.prime); m.min(self.coeffs.len() + o.coeffs.len())];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= m {
                break;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= c.len() {
                    break;
                }
                c[i + j] = &c[i + j] + &(a * b);
            }
        }
        let tail = self.tail.min_val.saturating_add(o.low_val()).min(o.tail.min_val.saturating_add(self.low_val()));
        Ok(Self::new(self.prime, c, m).with_tail(TailBound { min_val: tail.min(EXACT), antiderivative: false }))
    }

    /// `self(o(t))`; requires `o(0) = 0`.
    pub fn compose(&self, o: &Self) -> Result<Self> {
        self.require_plain("composition")?;
        o.require_plain("composition")?;
        let c0 = o.coeff(0);
        if !c0.is_zero() {
            return Err(Error::Series("composition with a series of nonzero constant term".into()));
        }
        let m = self.t_prec.min(o.t_prec);
        let inner = o.with_constant(PadicNumber::exact_zero(self.prime));
        let mut acc = Self::zero(self.prime, m);
        for a in self.coeffs.iter().rev() {
            acc = acc.mul(&inner)?.add(&Self::new(self.prime, vec![a.clone()], m));
        }
        if c0.absprec() < EXACT {
            // The constant of `o` is only known to be O(p^A).
            let cap = c0.absprec().saturating_add(self.low_val().min(0));
            acc.coeffs = acc.coeffs.iter().map(|x| x.truncate(cap)).collect();
        }
        let tail = self.tail.min_val.min(o.tail.min_val.saturating_add(self.low_val()));
        Ok(acc.truncate_t(m).with_tail(TailBound { min_val: tail, antiderivative: false }))
    }

    /// Multiplicative inverse of a series with unit constant term.
    pub fn invert_unit(&self) -> Result<Self> {
        self.require_plain("inverse")?;
        let a0 = self.coeff(0);
        if !a0.is_unit() {
            return Err(Error::Series(format!("inverting a series with non-unit constant term {a0}")));
        }
        let m = self.t_prec;
        let inv0 = a0.inverse()?;
        let mut c: Vec<PadicNumber> = Vec::with_capacity(m);
        c.push(inv0.clone());
        for n in 1..m {
            let mut s = PadicNumber::exact_zero(self.prime);
            for k in 1..=n.min(self.coeffs.len().saturating_sub(1)) {
                s = &s + &(&self.coeffs[k] * &c[n - k]);
            }
            c.push(-&(&s * &inv0));
        }
        let tail = self.tail.min_val.min(0);
        Ok(Self::new(self.prime, c, m).with_tail(TailBound { min_val: tail, antiderivative: false }))
    }

    /// Square root with `Y(0) = branch`, by Newton iteration doubling the t-adic accuracy.
    pub fn sqrt_series(&self, branch: &PadicNumber) -> Result<Self> {
        self.require_plain("square root")?;
        let s0 = self.coeff(0);
        if !s0.is_unit() {
            return Err(Error::Series(format!("square root of a series with non-unit constant term {s0}")));
        }
        if !branch.is_unit() || !(branch * branch).agrees_with(&s0) {
            return Err(Error::Series(format!("branch {branch} does not square to {s0}")));
        }
        let m = self.t_prec;
        let mut y = Self::new(self.prime, vec![branch.clone()], 1);
        let mut k = 1;
        while k < m {
            k = (2 * k).min(m);
            let yk = Self::new(self.prime, y.coeffs.clone(), k);
            let sk = self.truncate_t(k);
            let q = sk.mul(&yk.invert_unit()?)?;
            y = yk.add(&q).scale_by_half();
        }
        let mut out = y.truncate_t(m);
        if m > 0 && !out.coeffs.is_empty() {
            out.coeffs[0] = branch.clone();
        }
        Ok(out.with_tail(TailBound { min_val: self.tail.min_val.min(0), antiderivative: false }))
    }

    fn scale_by_half(&self) -> Self {
        let c = self.coeffs.iter().map(|x| x.div_int(2)).collect();
        Self::new(self.prime, c, self.t_prec).with_tail(self.tail)
    }

    pub fn derivative(&self) -> Self {
        let c = self.coeffs.iter().enumerate().skip(1).map(|(i, x)| x.mul_int(i as i64)).collect();
        let tail = TailBound { min_val: self.tail.min_val, antiderivative: false };
        Self::new(self.prime, c, self.t_prec.saturating_sub(1)).with_tail(tail)
    }

    /// Antiderivative with zero constant term; coefficient of `t^(j+1)` is `a_j/(j+1)`.
    pub fn formal_integral(&self) -> Result<Self> {
        self.require_plain("antiderivative")?;
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(PadicNumber::exact_zero(self.prime));
        for (j, a) in self.coeffs.iter().enumerate() {
            c.push(a.div_int(j as i64 + 1));
        }
        let tail = TailBound { min_val: self.tail.min_val, antiderivative: true };
        Ok(Self::new(self.prime, c, self.t_prec + 1).with_tail(tail))
    }

    /// Replaces the constant term.
    pub fn with_constant(&self, c: PadicNumber) -> Self {
        let mut s = self.clone();
        if s.coeffs.is_empty() {
            s.coeffs.push(c);
        } else {
            s.coeffs[0] = c;
        }
        s
    }

    /// `f(p^k t)` as a series; tail bound shifts with the substitution.
    pub fn rescale_argument(&self, k: i64) -> Self {
        let c = self.coeffs.iter().enumerate().map(|(i, x)| x.mul_p_pow(k * i as i64)).collect();
        let tail = TailBound { min_val: self.tail.min_val + k * self.t_prec as i64, antiderivative: self.tail.antiderivative };
        Self::new(self.prime, c, self.t_prec).with_tail(tail)
    }

    /// Lower bound on the valuation of `Σ_{i ≥ t_prec} b_i t0^i` when `v(t0) ≥ v`.
    pub fn tail_valuation(&self, v: i64) -> i64 {
        let m = self.t_prec;
        if !self.tail.antiderivative {
            return self.tail.min_val.saturating_add(v.saturating_mul(m as i64));
        }
        let upper = (m as u64 + 1).saturating_mul(self.prime) as usize;
        (m.max(1)..=upper.max(m + 1)).map(|i| self.tail.at(i, self.prime) + v * i as i64).min().unwrap()
    }

    /// Value at `t0` with `v(t0) ≥ 1`, with the precision cut to the tail bound.
    pub fn evaluate_in_disk(&self, t0: &PadicNumber) -> Result<PadicNumber> {
        if t0.prime() != self.prime {
            return Err(Error::Padic(crate::padic::PadicError::PrimeMismatch(self.prime, t0.prime())));
        }
        let v = t0.valuation();
        if v < 1 {
            return Err(Error::Series(format!("evaluation point {t0} is not in pZ_p")));
        }
        let mut acc = PadicNumber::exact_zero(self.prime);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * t0) + c;
        }
        Ok(acc.truncate(self.tail_valuation(v.min(EXACT / (self.t_prec as i64 + 2)))))
    }

    /// Value at any integral `t0` for a series that is actually a polynomial.
    pub fn evaluate_polynomial(&self, t0: &PadicNumber) -> PadicNumber {
        crate::poly::eval(&self.coeffs, t0)
    }
}

impl fmt::Display for PadicPowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && c.absprec() >= EXACT {
                continue;
            }
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·t")?,
                _ => write!(f, "({c})·t^{i}")?,
            }
            write!(f, " + ")?;
        }
        write!(f, "O(t^{})", self.t_prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    const P: u64 = 7;

    fn s(c: &[i64], m: usize) -> PadicPowerSeries {
        PadicPowerSeries::new(P, c.iter().map(|&x| PadicNumber::from_i64(P, x, 10)).collect(), m)
    }

    fn q(n: i64, d: i64) -> PadicNumber {
        PadicNumber::from_rational(P, &BigRational::new(BigInt::from(n), BigInt::from(d)), 10)
    }

    #[test]
    fn product_of_conjugates() {
        let r = s(&[1, 1], 5).mul(&s(&[1, -1], 5)).unwrap();
        assert!(r.coeff(0).agrees_with(&q(1, 1)));
        assert!(r.coeff(1).is_zero());
        assert!(r.coeff(2).agrees_with(&q(-1, 1)));
    }

    #[test]
    fn geometric_series() {
        let r = s(&[1, -1], 6).invert_unit().unwrap();
        assert_eq!(r.t_prec(), 6);
        for i in 0..6 {
            assert!(r.coeff(i).agrees_with(&q(1, 1)));
        }
    }

    #[test]
    fn binomial_square_root() {
        let r = s(&[1, 1], 3).sqrt_series(&q(1, 1)).unwrap();
        assert!(r.coeff(0).agrees_with(&q(1, 1)));
        assert!(r.coeff(1).agrees_with(&q(1, 2)));
        assert!(r.coeff(2).agrees_with(&q(-1, 8)));
        assert_eq!(r.coeff(0), q(1, 1));
    }

    #[test]
    fn integral_of_one_plus_t() {
        let r = s(&[1, 1], 4).formal_integral().unwrap();
        assert!(r.coeff(0).is_zero());
        assert!(r.coeff(1).agrees_with(&q(1, 1)));
        assert!(r.coeff(2).agrees_with(&q(1, 2)));
        assert_eq!(r.t_prec(), 5);
    }

    #[test]
    fn integral_loses_valuation_at_p() {
        let mut c = vec![0i64; 8];
        c[6] = 1;
        let r = s(&c, 8).formal_integral().unwrap();
        assert_eq!(r.coeff(7).valuation(), -1);
    }

    #[test]
    fn evaluate_t_squared_at_p() {
        let r = s(&[0, 0, 1], 10);
        let v = r.evaluate_in_disk(&PadicNumber::from_i64(P, 7, 10)).unwrap();
        assert!(v.agrees_with(&PadicNumber::from_i64(P, 49, 10)));
        assert_eq!(v.valuation(), 2);
        let z = PadicPowerSeries::zero(P, 6).evaluate_in_disk(&PadicNumber::from_i64(P, 7, 10)).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.absprec(), 6);
        assert!(r.evaluate_in_disk(&PadicNumber::from_i64(P, 1, 10)).is_err());
    }

    #[test]
    fn geometric_series_at_p_matches_closed_form() {
        let m = 12;
        let g = PadicPowerSeries::new(P, vec![PadicNumber::from_i64(P, 1, 20); m], m);
        let v = g.evaluate_in_disk(&PadicNumber::from_i64(P, 7, 20)).unwrap();
        let closed = q(1, -6);
        assert_eq!(v.absprec(), 12);
        assert!(v.agrees_with(&closed));
    }

    #[test]
    fn composition_needs_zero_constant() {
        assert!(s(&[1, 1], 4).compose(&s(&[1, 1], 4)).is_err());
        let r = s(&[0, 1, 1], 4).compose(&s(&[0, 2], 4)).unwrap();
        assert!(r.coeff(1).agrees_with(&q(2, 1)));
        assert!(r.coeff(2).agrees_with(&q(4, 1)));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn series(p: u64, c: &[i64], m: usize, prec: i64) -> PadicPowerSeries {
        PadicPowerSeries::new(p, c.iter().map(|&x| PadicNumber::from_i64(p, x, prec)).collect(), m)
    }

    proptest! {
        #[test]
        fn product_matches_convolution(a in proptest::collection::vec(-400i64..400, 1..8),
                                       b in proptest::collection::vec(-400i64..400, 1..8)) {
            let p = 11;
            let m = 8;
            let r = series(p, &a, m, 6).mul(&series(p, &b, m, 6)).unwrap();
            let modulus = 11i64.pow(6);
            for k in 0..m {
                let mut want = 0i64;
                for i in 0..a.len() {
                    if k >= i && k - i < b.len() {
                        want += a[i] * b[k - i];
                    }
                }
                let got = r.coeff(k).to_bigint_mod(6).unwrap();
                prop_assert_eq!(got, num_bigint::BigInt::from(want.rem_euclid(modulus)));
            }
        }

        #[test]
        fn sqrt_squares_back(c in proptest::collection::vec(-300i64..300, 1..9)) {
            let p = 7;
            let mut c = c;
            c[0] = 2;
            let s0 = series(p, &c, 9, 8);
            let b = PadicNumber::from_i64(p, 2, 8).sqrt(None).unwrap();
            let r = s0.sqrt_series(&b).unwrap();
            let sq = r.mul(&r).unwrap();
            for k in 0..9 {
                prop_assert!(sq.coeff(k).agrees_with(&s0.coeff(k)));
            }
        }

        #[test]
        fn integral_then_derivative(c in proptest::collection::vec(-300i64..300, 1..12)) {
            let s0 = series(7, &c, 12, 8);
            let back = s0.formal_integral().unwrap().derivative();
            for k in 0..12 {
                prop_assert!(back.coeff(k).agrees_with(&s0.coeff(k)));
            }
        }

        #[test]
        fn high_coefficients_do_not_matter(c in proptest::collection::vec(0i64..49, 20), extra in 0i64..2401, m in 1i64..6) {
            // Perturbing b_i with i - v_p(i) >= m leaves the value mod p^m unchanged.
            let p = 7;
            let f = series(p, &c, 20, 10);
            let mut c2 = c.clone();
            for (i, x) in c2.iter_mut().enumerate() {
                if (i as i64) >= m + 1 {
                    *x += extra;
                }
            }
            let g = series(p, &c2, 20, 10);
            let t0 = PadicNumber::from_i64(p, 7 * 3, 10);
            let a = f.evaluate_in_disk(&t0).unwrap().truncate(m);
            let b = g.evaluate_in_disk(&t0).unwrap().truncate(m);
            prop_assert!(a.agrees_with(&b));
        }
    }
}
