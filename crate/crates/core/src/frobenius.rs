//! Frobenius action on the odd de Rham cohomology of y² = F(x), by Kedlaya's algorithm.
//!
//! The basis is ω_i = x^i dx/(2y), i = 0..5. For each i the lift φ with φ(x) = x^p gives
//! φ*(ω_i) = d(g_i) + Σ_j M[i][j]·ω_j, and both M and the primitives g_i are returned.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::HyperellipticCurve;
use crate::error::{Error, Result};
use crate::fp::count_points;
use crate::linalg::{charpoly, Matrix};
use crate::padic::{floor_log_p, p_pow, PadicNumber};
use crate::poly::{self, RationalPoly};

pub const GENUS: usize = 3;
pub const DIM: usize = 2 * GENUS;
const GUARDS: [i64; 3] = [4, 8, 16];

/// The function poly(x)·y^y_exp.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveTerm {
    pub y_exp: i64,
    pub poly: Vec<PadicNumber>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrobeniusData {
    pub prime: u64,
    /// Row i holds the coordinates of φ*(ω_i) modulo exact forms.
    pub matrix: Matrix,
    pub primitives: Vec<Vec<PrimitiveTerm>>,
    pub working_prec: i64,
    pub guard: i64,
}

// Integer polynomial arithmetic modulo m.

fn imod(v: &mut [BigInt], m: &BigInt) {
    for c in v.iter_mut() {
        *c = c.mod_floor(m);
    }
}

fn imul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Division by the monic polynomial f, in place: returns the quotient, leaves the remainder.
fn idivrem_monic(a: &mut Vec<BigInt>, f: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    let df = f.len() - 1;
    imod(a, m);
    if a.len() <= df {
        a.resize(df, BigInt::zero());
        return Vec::new();
    }
    let mut q = vec![BigInt::zero(); a.len() - df];
    for i in (0..q.len()).rev() {
        let c = a[i + df].clone();
        if !c.is_zero() {
            for (j, fj) in f.iter().enumerate() {
                a[i + j] -= &c * fj;
            }
            for k in i..i + df {
                a[k] = a[k].mod_floor(m);
            }
        }
        a[i + df] = BigInt::zero();
        q[i] = c;
    }
    a.truncate(df);
    q
}

/// Digits of a in base f: a = Σ_l d_l·f^l with deg d_l < deg f.
fn base_digits(a: &[BigInt], f: &[BigInt], m: &BigInt) -> Vec<Vec<BigInt>> {
    let mut out = Vec::new();
    let mut cur = a.to_vec();
    loop {
        let q = idivrem_monic(&mut cur, f, m);
        out.push(cur);
        if q.iter().all(|c| c.is_zero()) {
            break;
        }
        cur = q;
    }
    out
}

/// A sum Σ_j R_j·F^(-j) with deg R_j < 7, indices from `lo` upward.
#[derive(Clone, Debug)]
struct FExpansion {
    lo: i64,
    digits: Vec<Vec<BigInt>>,
}

impl FExpansion {
    /// Normalizes unreduced accumulators (any degree) keyed by index, highest index first.
    fn normalize(mut acc: std::collections::BTreeMap<i64, Vec<BigInt>>, f: &[BigInt], m: &BigInt) -> Self {
        let mut out: std::collections::BTreeMap<i64, Vec<BigInt>> = std::collections::BTreeMap::new();
        while let Some((&idx, _)) = acc.iter().next_back() {
            let mut a = acc.remove(&idx).unwrap();
            let q = idivrem_monic(&mut a, f, m);
            if q.iter().any(|c| !c.is_zero()) {
                let e = acc.entry(idx - 1).or_default();
                if e.len() < q.len() {
                    e.resize(q.len(), BigInt::zero());
                }
                for (k, c) in q.into_iter().enumerate() {
                    e[k] += c;
                }
            }
            out.insert(idx, a);
        }
        let lo = out.keys().next().copied().unwrap_or(0);
        let hi = out.keys().next_back().copied().unwrap_or(0);
        let mut digits = vec![vec![BigInt::zero(); f.len() - 1]; (hi - lo + 1) as usize];
        for (k, v) in out {
            digits[(k - lo) as usize] = v;
        }
        FExpansion { lo, digits }
    }

    /// Product with Σ_l g_l·F^(-(off + l)).
    fn mul_digits(&self, g: &[Vec<BigInt>], off: i64, f: &[BigInt], m: &BigInt) -> Self {
        let mut acc: std::collections::BTreeMap<i64, Vec<BigInt>> = std::collections::BTreeMap::new();
        for (j, r) in self.digits.iter().enumerate() {
            if r.iter().all(|c| c.is_zero()) {
                continue;
            }
            for (l, gl) in g.iter().enumerate() {
                let idx = self.lo + j as i64 + off + l as i64;
                let prod = imul(r, gl);
                let e = acc.entry(idx).or_default();
                if e.len() < prod.len() {
                    e.resize(prod.len(), BigInt::zero());
                }
                for (k, c) in prod.into_iter().enumerate() {
                    e[k] += c;
                }
            }
        }
        Self::normalize(acc, f, m)
    }

    fn reduce_mod(&mut self, m: &BigInt) {
        for d in self.digits.iter_mut() {
            imod(d, m);
        }
    }
}

/// (-1)^k·C(2k, k)/4^k = binom(-1/2, k), reduced modulo m.
fn binom_half(k: usize, m: &BigInt) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 1);
    }
    let four_k = BigInt::from(4).modpow(&BigInt::from(k), m);
    let inv = crate::padic::inv_mod_pk(&four_k, m);
    let v = (c * inv).mod_floor(m);
    if k % 2 == 1 {
        (m - v).mod_floor(m)
    } else {
        v
    }
}

fn padic_divrem_monic(a: &[PadicNumber], f: &[PadicNumber]) -> (Vec<PadicNumber>, Vec<PadicNumber>) {
    let df = f.len() - 1;
    let mut r = a.to_vec();
    let p = f[0].prime();
    if r.len() <= df {
        r.resize(df, PadicNumber::exact_zero(p));
        return (Vec::new(), r);
    }
    let mut q = vec![PadicNumber::exact_zero(p); r.len() - df];
    for i in (0..q.len()).rev() {
        let c = r[i + df].clone();
        for (j, fj) in f.iter().enumerate().take(df) {
            r[i + j] = &r[i + j] - &(&c * fj);
        }
        q[i] = c;
    }
    r.truncate(df);
    (q, r)
}

struct Plan {
    modulus_prec: i64,
    terms: usize,
    claimed: i64,
}

fn plan(p: u64, target: i64) -> Plan {
    let half = (p as i64 - 1) / 2;
    let mut l = target;
    loop {
        let terms = l as usize;
        let max_pole = p as i64 * (terms as i64 - 1) + p as i64 + half;
        let log_j = floor_log_p(p, (2 * max_pole + 1) as u64);
        let l_max = (6 * p as i64 - 1) / 7;
        let b_max = 7 * (l_max + 1 - half).max(0) + 6;
        let pos_loss = floor_log_p(p, (2 * b_max + 7) as u64);
        let trunc = terms as i64 + 1 - floor_log_p(p, (2 * (p as i64 * (terms as i64 + 1) + p as i64) + 1) as u64) - 1;
        let claimed = (l - 2 * log_j - pos_loss - 1).min(trunc);
        if claimed >= target {
            return Plan { modulus_prec: l, terms, claimed };
        }
        l += target - claimed;
    }
}

impl FrobeniusData {
    /// Frobenius matrix and primitives correct to `target` digits, certified against the
    /// functional equation, the Weil bound and the point count over F_p.
    pub fn compute(curve: &HyperellipticCurve, p: u64, target: i64) -> Result<Self> {
        curve.check_good_reduction(p)?;
        if p < 7 {
            return Err(Error::BadInput(format!("p = {p} is too small, need p >= 7")));
        }
        let mut last = None;
        for &guard in &GUARDS {
            let fd = Self::compute_raw(curve, p, target, guard)?;
            match fd.zeta(curve) {
                Ok(_) => return Ok(fd),
                Err(e) => {
                    log::warn!("frobenius at p = {p} with guard {guard} failed certification: {e}");
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap_or_else(|| Error::Certification("no guard schedule".into())))
    }

    fn compute_raw(curve: &HyperellipticCurve, p: u64, target: i64, guard: i64) -> Result<Self> {
        let plan = plan(p, target + guard);
        let lp = plan.modulus_prec;
        let m = p_pow(p, lp as u32);
        let m1 = p_pow(p, lp as u32 + 1);
        let half = (p as i64 - 1) / 2;
        let fint = |prec: i64, md: &BigInt| -> Vec<BigInt> {
            curve.f().0.iter().map(|c| PadicNumber::from_rational(p, c, prec).to_bigint_mod(prec).unwrap().mod_floor(md)).collect()
        };
        let f1 = fint(lp + 1, &m1);
        let f = fint(lp, &m);

        // E1 = (F(x^p) - F(x)^p)/p.
        let mut fp = vec![BigInt::one()];
        for _ in 0..p {
            fp = imul(&fp, &f1);
            imod(&mut fp, &m1);
        }
        let mut e1 = vec![BigInt::zero(); fp.len()];
        for (i, c) in f1.iter().enumerate() {
            e1[i * p as usize] += c;
        }
        for (i, c) in fp.iter().enumerate() {
            e1[i] -= c;
        }
        for c in e1.iter_mut() {
            let v = c.mod_floor(&m1);
            debug_assert!((&v % BigInt::from(p)).is_zero());
            *c = (v / BigInt::from(p)).mod_floor(&m);
        }
        let mut e_digits = base_digits(&e1, &f, &m);
        e_digits.resize(p as usize, vec![BigInt::zero(); 7]);
        // Q = E1/F^p = Σ_d q_d F^(-d), d = 1..p, with q_d = e_{p-d}.
        let q_digits: Vec<Vec<BigInt>> = (1..=p as usize).map(|d| e_digits[p as usize - d].clone()).collect();

        // S = Σ_k p^(k+1)·binom(-1/2, k)·Q^k.
        let mut s_acc: std::collections::BTreeMap<i64, Vec<BigInt>> = std::collections::BTreeMap::new();
        let mut qk = FExpansion { lo: 0, digits: vec![{
            let mut v = vec![BigInt::zero(); 7];
            v[0] = BigInt::one();
            v
        }] };
        for k in 0..plan.terms {
            let need = lp - k as i64 - 1;
            if need <= 0 {
                break;
            }
            let coef = (p_pow(p, k as u32 + 1) * binom_half(k, &m)).mod_floor(&m);
            for (j, r) in qk.digits.iter().enumerate() {
                let e = s_acc.entry(qk.lo + j as i64).or_insert_with(|| vec![BigInt::zero(); 7]);
                for (t, c) in r.iter().enumerate() {
                    e[t] += &coef * c;
                }
            }
            if k + 1 < plan.terms {
                let mk = p_pow(p, need as u32);
                qk = qk.mul_digits(&q_digits, 1, &f, &mk);
                qk.reduce_mod(&mk);
            }
        }
        let mut s = FExpansion::normalize(s_acc, &f, &m);
        s.reduce_mod(&m);

        let fq: Vec<PadicNumber> = curve.f_padic(p, lp + 4);
        let dfq = poly::derivative(&fq);
        let fr = curve.f();
        let (_, _, v_rat) = RationalPoly::xgcd(fr, &fr.derivative());
        let vq = v_rat.to_padic(p, lp + 4);

        let rows: Vec<(Vec<PadicNumber>, Vec<PrimitiveTerm>)> = (0..DIM)
            .into_par_iter()
            .map(|i| {
                let a = p as usize * i + p as usize - 1;
                let mut xa = vec![BigInt::zero(); a + 1];
                xa[a] = BigInt::one();
                let xd = base_digits(&xa, &f, &m);
                let neg: Vec<Vec<BigInt>> = xd.into_iter().rev().collect();
                let off = -(neg.len() as i64 - 1);
                let mut t = s.mul_digits(&neg, off, &f, &m);
                t.reduce_mod(&m);
                t.lo += half;
                reduce_row(p, lp, &t, &fq, &dfq, &vq)
            })
            .collect();

        let claimed = target;
        let mut matrix = Vec::with_capacity(DIM);
        let mut primitives = Vec::with_capacity(DIM);
        for (row, prim) in rows {
            matrix.push(row.iter().map(|c| c.truncate(claimed)).collect());
            primitives.push(
                prim.into_iter()
                    .map(|pt| PrimitiveTerm { y_exp: pt.y_exp, poly: pt.poly.iter().map(|c| c.div_int(2).truncate(claimed)).collect() })
                    .collect(),
            );
        }
        debug_assert!(plan.claimed >= target + guard);
        Ok(FrobeniusData { prime: p, matrix, primitives, working_prec: claimed, guard })
    }

    /// L-polynomial data read off the matrix and certified.
    pub fn zeta(&self, curve: &HyperellipticCurve) -> Result<ZetaData> {
        let p = self.prime;
        let cp = charpoly(&self.matrix);
        let prec = cp.iter().map(|c| c.absprec()).min().unwrap();
        let mut a = vec![0i64; DIM + 1];
        a[0] = 1;
        let pi = p as i64;
        for i in 1..=GENUS {
            let bound = (binom(DIM, i) as f64 * (p as f64).powf(i as f64 / 2.0)).floor() as i64;
            let modulus = p_pow(p, prec as u32);
            if BigInt::from(2 * bound + 1) >= modulus {
                return Err(Error::Certification(format!("{prec} digits cannot determine a_{i}")));
            }
            let v = cp[DIM - i].to_signed_bigint(prec).ok_or_else(|| Error::Certification("non-integral coefficient".into()))?;
            let v = v.to_i64().unwrap();
            if v.abs() > bound {
                return Err(Error::Certification(format!("a_{i} = {v} violates the Weil bound {bound}")));
            }
            a[i] = v;
        }
        for i in 0..GENUS {
            a[DIM - i] = pi.pow((GENUS - i) as u32) * a[i];
        }
        for i in GENUS + 1..=DIM {
            let diff = &cp[DIM - i] - &PadicNumber::from_i64(p, a[i], prec);
            if !diff.is_zero() {
                return Err(Error::Certification(format!("functional equation fails at a_{i}")));
            }
        }
        let trace = -a[1];
        let count = count_points(&curve.f_mod_p(p)?, p, 1) as i64;
        if count != pi + 1 - trace {
            return Err(Error::Certification(format!("trace {trace} disagrees with {count} points over F_{p}")));
        }
        Ok(ZetaData::from_l_poly(p, a))
    }
}

fn reduce_row(
    p: u64,
    lp: i64,
    t: &FExpansion,
    fq: &[PadicNumber],
    dfq: &[PadicNumber],
    vq: &[PadicNumber],
) -> (Vec<PadicNumber>, Vec<PrimitiveTerm>) {
    let zero = PadicNumber::zero(p, lp);
    let to_p = |r: &[BigInt]| -> Vec<PadicNumber> { r.iter().map(|c| PadicNumber::new(p, c.clone(), lp)).collect() };
    let mut prims = Vec::new();
    let hi = t.lo + t.digits.len() as i64 - 1;

    // Poles j ≥ 1, from the top down.
    let mut carry: Vec<PadicNumber> = vec![zero.clone(); 7];
    let mut poly_part: Vec<PadicNumber> = vec![zero.clone()];
    let mut j = hi;
    while j >= 1 {
        let mut r = if j >= t.lo { to_p(&t.digits[(j - t.lo) as usize]) } else { vec![zero.clone(); 7] };
        r = poly::add(&r, &carry);
        let (_, b) = padic_divrem_monic(&poly::mul(&r, vq), fq);
        let (a, rem) = padic_divrem_monic(&poly::sub(&r, &poly::mul(&b, dfq)), fq);
        debug_assert!(rem.iter().all(|c| c.valuation() >= lp - 4));
        let k = 2 * j - 1;
        let db = poly::derivative(&b);
        let mut next = poly::add(&a, &db.iter().map(|c| c.mul_int(2).div_int(k)).collect::<Vec<_>>());
        next.resize(7, zero.clone());
        carry = next.iter().map(|c| c.padded(lp)).collect();
        prims.push(PrimitiveTerm { y_exp: -k, poly: b.iter().map(|c| c.mul_int(-2).div_int(k).padded(lp)).collect() });
        j -= 1;
    }
    poly_part = poly::add(&poly_part, &carry);

    // Poles j ≤ 0 become the polynomial Σ R_j·F^(-j).
    let mut fpow = vec![PadicNumber::one(p, lp + 4)];
    let mut jj = 0;
    while jj >= t.lo {
        if jj <= hi {
            let r = to_p(&t.digits[(jj - t.lo) as usize]);
            poly_part = poly::add(&poly_part, &poly::mul(&r, &fpow));
        }
        fpow = poly::mul(&fpow, fq);
        jj -= 1;
    }

    // Positive degree reduction.
    let half = PadicNumber::one(p, lp + 4).div_int(2);
    let mut pp = poly_part;
    while pp.len() > 6 {
        let d = pp.len() - 1;
        let c = pp[d].clone();
        let b = d - 6;
        let factor = c.mul_int(2).div_int(2 * b as i64 + 7);
        let mut xb1f = vec![PadicNumber::exact_zero(p); b.saturating_sub(1)];
        if b > 0 {
            xb1f.extend(fq.iter().map(|x| x.mul_int(b as i64)));
        }
        let mut xbdf = vec![PadicNumber::exact_zero(p); b];
        xbdf.extend(dfq.iter().map(|x| x * &half));
        let sub = poly::scale(&poly::add(&xb1f, &xbdf), &factor);
        pp = poly::sub(&pp, &sub);
        pp.pop();
        pp = pp.iter().map(|c| c.padded(lp)).collect();
        let mut term = vec![PadicNumber::exact_zero(p); b];
        term.push(factor.padded(lp));
        prims.push(PrimitiveTerm { y_exp: 1, poly: term });
    }
    pp.resize(6, zero);
    (pp, prims)
}

fn binom(n: usize, k: usize) -> u64 {
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZetaData {
    pub prime: u64,
    /// a_0..a_6 with L(T) = Σ a_i T^i.
    pub l_poly: Vec<i64>,
    /// Trace of Frobenius, so that #C(F_p) = p + 1 - trace.
    pub trace: i64,
    pub points_fp: u64,
    pub jacobian_order: u64,
}

impl ZetaData {
    pub fn from_l_poly(p: u64, l_poly: Vec<i64>) -> Self {
        let trace = -l_poly[1];
        let points_fp = (p as i64 + 1 - trace) as u64;
        let jacobian_order = l_poly.iter().sum::<i64>() as u64;
        ZetaData { prime: p, l_poly, trace, points_fp, jacobian_order }
    }

    /// Complex roots of T^6·L(1/T), whose moduli should all be √p.
    pub fn reciprocal_roots(&self) -> Vec<Complex64> {
        let coeffs: Vec<f64> = self.l_poly.iter().map(|&a| a as f64).collect();
        aberth(&coeffs)
    }

    pub fn max_weil_deviation(&self) -> f64 {
        let s = (self.prime as f64).sqrt();
        self.reciprocal_roots().iter().map(|z| (z.norm() - s).abs()).fold(0.0, f64::max)
    }

    /// a_{6-i} = p^{3-i}·a_i for i ≤ 3.
    pub fn functional_equation_holds(&self) -> bool {
        let p = self.prime as i128;
        (0..=3).all(|i| self.l_poly[6 - i] as i128 == p.pow(3 - i as u32) * self.l_poly[i] as i128)
    }
}

/// Roots of the monic polynomial z^n + c_1 z^(n-1) + ... + c_n (coefficients c_0 = 1 first).
fn aberth(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &a in c {
            d = d * z + v;
            v = v * z + a;
        }
        (v, d)
    };
    let radius = 1.0 + c.iter().skip(1).map(|a| a.abs()).fold(0.0, f64::max).powf(1.0 / n as f64);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64)).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (v, d) = eval(z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += Complex64::new(1.0, 0.0) / (z[i] - z[j]);
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// L-polynomial from point counts over F_p, F_p², F_p³ and Newton's identities.
pub fn brute_force_l_polynomial(curve: &HyperellipticCurve, p: u64) -> Result<ZetaData> {
    curve.check_good_reduction(p)?;
    let fbar = curve.f_mod_p(p)?;
    let pi = p as i64;
    let s: Vec<i64> = (1..=3).map(|k| pi.pow(k as u32) + 1 - count_points(&fbar, p, k) as i64).collect();
    let e1 = s[0];
    let e2 = (e1 * s[0] - s[1]) / 2;
    let e3 = (e2 * s[0] - e1 * s[1] + s[2]) / 3;
    let a = vec![1, -e1, e2, -e3, pi * e2, -pi * pi * e1, pi * pi * pi];
    Ok(ZetaData::from_l_poly(p, a))
}

/// Certified zeta data from a low precision Frobenius computation.
pub fn zeta(curve: &HyperellipticCurve, p: u64) -> Result<ZetaData> {
    FrobeniusData::compute(curve, p, 6)?.zeta(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{example1, example2, example3};

    #[test]
    fn example2_at_7_matches_point_count() {
        let c = example2();
        let z = zeta(&c, 7).unwrap();
        let b = brute_force_l_polynomial(&c, 7).unwrap();
        assert_eq!(z, b);
        assert_eq!(z.trace, -3);
        assert!(z.max_weil_deviation() < 1e-6);
    }

    #[test]
    fn examples_agree_with_brute_force() {
        for (c, p) in [(example1(), 7), (example3(), 11), (example2(), 11)] {
            assert_eq!(zeta(&c, p).unwrap(), brute_force_l_polynomial(&c, p).unwrap());
        }
    }

    #[test]
    fn matrix_is_stable_under_precision_increase() {
        let c = example2();
        let a = FrobeniusData::compute_raw(&c, 7, 10, 4).unwrap();
        let b = FrobeniusData::compute_raw(&c, 7, 20, 4).unwrap();
        for i in 0..DIM {
            for j in 0..DIM {
                assert!((&a.matrix[i][j] - &b.matrix[i][j]).is_zero());
            }
        }
    }

    #[test]
    fn plan_reaches_target() {
        for p in [7, 11, 13] {
            let pl = plan(p, 30);
            assert!(pl.claimed >= 30);
        }
    }

    #[test]
    fn binom_half_values() {
        let m = BigInt::from(7).pow(5);
        // binom(-1/2, 2) = 3/8.
        let v = binom_half(2, &m);
        assert_eq!((v * BigInt::from(8)).mod_floor(&m), BigInt::from(3));
    }
}

