//! Provable roots in pZ_p of p-adic power series: truncation bounds, scaled root
//! extraction with Hensel lifting, and simplicity certificates.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::FpPoly;
use crate::padic::{int_valuation, p_pow, v_p_u64, PadicNumber, EXACT};
use crate::series::PadicPowerSeries;

/// Precision bookkeeping for root extraction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub prime: u64,
    /// Target p-adic precision.
    pub n: i64,
    /// t-adic truncation.
    pub m: usize,
    /// Working precision of the coefficients.
    pub n_prime: i64,
    /// Minimal coefficient valuation of f(pt), once known.
    pub k: Option<i64>,
    /// Order of vanishing of f' modulo p.
    pub m_f: usize,
    pub a: u64,
    pub e: u32,
}

/// `p^p − p`, saturating.
fn upper_limit(p: u64) -> i64 {
    p.checked_pow(p as u32).map(|q| (q - p).min(EXACT as u64) as i64).unwrap_or(EXACT)
}

/// Smallest `a·p^e ≥ n` with `p ∤ a` and `e ≥ 1`.
fn next_p_multiple(n: i64, p: u64) -> (u64, u32) {
    let r = (n.max(1) as u64).div_ceil(p) * p;
    let e = v_p_u64(r, p);
    (r / p.pow(e), e)
}

pub fn truncation_parameters(n: i64, p: u64, m_f: usize) -> Result<TruncationPolicy> {
    if m_f as u64 >= p - 2 {
        return Err(Error::Truncation(format!("m_f = {m_f} is not below p − 2 = {}", p - 2)));
    }
    if n < m_f as i64 + 2 || n > upper_limit(p) {
        return Err(Error::Truncation(format!("N = {n} outside [{}, p^p − p]", m_f + 2)));
    }
    let mut policy = TruncationPolicy { prime: p, n, m: 0, n_prime: n, k: None, m_f, a: 0, e: 0 };
    policy.set_working_precision(n)?;
    Ok(policy)
}

impl TruncationPolicy {
    /// Recomputes a, e and M for the precision the coefficients are actually known to.
    pub fn set_working_precision(&mut self, n_prime: i64) -> Result<()> {
        if n_prime < self.m_f as i64 + 2 || n_prime > upper_limit(self.prime) {
            return Err(Error::Truncation(format!("working precision {n_prime} out of range")));
        }
        let (a, e) = next_p_multiple(n_prime, self.prime);
        let r = a * self.prime.pow(e);
        self.a = a;
        self.e = e;
        self.n_prime = n_prime;
        self.m = if (r as i64) - (e as i64) < n_prime { r as usize + 1 } else { n_prime as usize };
        Ok(())
    }
}

/// Bound on the number of roots in pZ_p of an antiderivative of `fprime`.
pub fn root_count_bound(fprime: &PadicPowerSeries) -> Result<usize> {
    let p = fprime.prime();
    let m_f = fprime.order_mod_p().ok_or_else(|| Error::Truncation("derivative vanishes modulo p to known order".into()))?;
    if m_f as u64 + 2 >= p {
        return Err(Error::Truncation(format!("m_f = {m_f} is not below p − 2")));
    }
    Ok(m_f + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicRoot {
    /// The root in pZ_p.
    pub value: PadicNumber,
    /// Digits to which the root of f(pt) is known.
    pub precision: i64,
    pub simple: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootReport {
    pub roots: Vec<PadicRoot>,
    pub bound: usize,
    /// Roots of valuation ≥ 1 over C_p, counted with multiplicity, from the Newton polygon.
    pub newton_count: usize,
    pub k: i64,
    pub precision: i64,
    pub all_simple_certified: bool,
}

struct Search {
    p: u64,
    found: Vec<(BigInt, i64, i64, bool)>,
}

fn eval_mod(g: &[BigInt], t: &BigInt, m: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in g.iter().rev() {
        acc = (acc * t + c).mod_floor(m);
    }
    acc
}

fn deriv(g: &[BigInt]) -> Vec<BigInt> {
    g.iter().enumerate().skip(1).map(|(i, c)| c * i).collect()
}

/// Content valuation of g modulo p^prec; `prec` when everything vanishes.
fn content_val(g: &[BigInt], p: u64, prec: i64) -> i64 {
    g.iter().filter(|c| !c.is_zero()).map(|c| int_valuation(c, p) as i64).min().unwrap_or(prec).min(prec)
}

/// g(r + p·s) as a polynomial in s.
fn shift_scale(g: &[BigInt], r: u64, p: u64, m: &BigInt) -> Vec<BigInt> {
    let n = g.len();
    let mut h = g.to_vec();
    // Taylor shift by r.
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = &h[j + 1] * r;
            h[j] = (&h[j] + t).mod_floor(m);
        }
    }
    let mut pk = BigInt::one();
    for c in h.iter_mut() {
        *c = (&*c * &pk).mod_floor(m);
        pk *= p;
    }
    h
}

impl Search {
    /// Roots of g ∈ Z_p[t] known modulo p^prec; `t0 + p^depth·s` is the current disk.
    fn run(&mut self, g: &[BigInt], prec: i64, t0: &BigInt, depth: u32) {
        let p = self.p;
        if prec <= 0 {
            self.found.push((t0.clone(), depth as i64, 0, false));
            return;
        }
        let m = p_pow(p, prec as u32);
        let pb = BigInt::from(p);
        let dg = deriv(g);
        for r in 0..p {
            let rb = BigInt::from(r);
            if !eval_mod(g, &rb, &pb).is_zero() {
                continue;
            }
            let here = t0 + &rb * p_pow(p, depth);
            if !eval_mod(&dg, &rb, &pb).is_zero() {
                let s = hensel(g, &dg, rb, &m);
                self.found.push((t0 + s * p_pow(p, depth), depth as i64 + prec, 1, true));
                continue;
            }
            let h = shift_scale(g, r, p, &m);
            let v = content_val(&h, p, prec);
            if v >= prec {
                let mult = multiplicity_mod_p(g, r, p);
                self.found.push((here, depth as i64 + 1, mult as i64, false));
                continue;
            }
            let d = p_pow(p, v as u32);
            let h: Vec<BigInt> = h.iter().map(|c| c / &d).collect();
            self.run(&h, prec - v, &here, depth + 1);
        }
    }
}

/// Multiplicity of r as a root of g modulo p.
fn multiplicity_mod_p(g: &[BigInt], r: u64, p: u64) -> usize {
    let pb = BigInt::from(p);
    let c: Vec<u64> = g.iter().map(|x| u64::try_from(x.mod_floor(&pb)).unwrap()).collect();
    let mut cur = FpPoly::new(c, p);
    let lin = FpPoly::new(vec![p - r % p, 1], p);
    let mut k = 0;
    while !cur.is_zero() && cur.eval(r, p) == 0 {
        cur = cur.divrem(&lin, p).0;
        k += 1;
    }
    k
}

fn hensel(g: &[BigInt], dg: &[BigInt], mut s: BigInt, m: &BigInt) -> BigInt {
    loop {
        let gs = eval_mod(g, &s, m);
        if gs.is_zero() {
            return s;
        }
        let d = eval_mod(dg, &s, m);
        let inv = modinv(&d, m);
        s = (s - gs * inv).mod_floor(m);
    }
}

fn modinv(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.extended_gcd(m);
    e.x.mod_floor(m)
}

/// Roots of f in pZ_p from the truncation f_M(pt).
/// First index i < m with v(f_i·p^i) < i − v_p(i), if any.
pub fn integrality_violation(f: &PadicPowerSeries, m: usize) -> Option<usize> {
    let p = f.prime();
    (1..m.min(f.t_prec())).find(|&i| {
        let c = f.coeff(i).mul_p_pow(i as i64);
        !c.is_zero() && c.valuation() < i as i64 - v_p_u64(i as u64, p) as i64
    })
}

pub fn roots_in_pzp(f: &PadicPowerSeries, policy: &TruncationPolicy) -> Result<RootReport> {
    let p = f.prime();
    let m = policy.m;
    if f.t_prec() < m {
        return Err(Error::Truncation(format!("series known to O(t^{}) but truncation needs O(t^{m})", f.t_prec())));
    }
    let mut prec = policy.n_prime.min(f.tail_valuation(1));
    let b: Vec<PadicNumber> = (0..m).map(|i| f.coeff(i).mul_p_pow(i as i64)).collect();
    for c in &b {
        prec = prec.min(c.absprec());
    }
    if let Some(i) = integrality_violation(f, m) {
        return Err(Error::Series(format!("coefficient {i} of f(pt) has valuation {} below the integrality bound", b[i].valuation())));
    }
    let k = b.iter().filter(|c| !c.is_zero()).map(|c| c.valuation()).min().ok_or_else(|| Error::Series("f(pt) vanishes to the working precision".into()))?;
    let work = prec - k;
    if work < 1 {
        return Err(Error::Precision(format!("f(pt) known to {prec} digits with k = {k}")));
    }
    let g: Vec<BigInt> = b.iter().map(|c| c.mul_p_pow(-k).to_bigint_mod(work).unwrap_or_default()).collect();
    let newton_count = b.iter().rposition(|c| !c.is_zero() && c.valuation() == k).unwrap_or(0);
    let mut s = Search { p, found: Vec::new() };
    s.run(&g, work, &BigInt::zero(), 0);
    let mut all = true;
    let roots = s
        .found
        .into_iter()
        .map(|(t, tprec, _, simple)| {
            all &= simple;
            PadicRoot { value: PadicNumber::new(p, t, tprec.max(0)).mul_p_pow(1), precision: tprec, simple }
        })
        .collect();
    let bound = policy.m_f + 1;
    Ok(RootReport { roots, bound, newton_count, k, precision: work, all_simple_certified: all })
}

/// True iff the discriminant of the polynomial is nonzero at the available precision.
pub fn simplicity_check(poly: &[PadicNumber]) -> bool {
    let Some(first) = poly.first() else { return false };
    let p = first.prime();
    let prec = poly.iter().map(|c| c.absprec()).min().unwrap_or(0);
    if prec >= EXACT || prec <= 0 {
        return prec >= EXACT && exact_discriminant_nonzero(poly);
    }
    let shift = poly.iter().filter(|c| !c.is_zero()).map(|c| c.valuation()).min().unwrap_or(0).min(0);
    let mut ints: Vec<BigRational> = poly
        .iter()
        .map(|c| BigRational::from_integer(c.mul_p_pow(-shift).to_bigint_mod(prec - shift).unwrap_or_default()))
        .collect();
    while ints.last().is_some_and(|c| c.is_zero()) {
        ints.pop();
    }
    if ints.len() < 2 {
        return false;
    }
    let disc = crate::poly::RationalPoly::new(ints).resultant_with_derivative();
    if disc.is_zero() {
        return false;
    }
    let v = int_valuation(disc.numer(), p) as i64;
    v < prec - shift
}

fn exact_discriminant_nonzero(poly: &[PadicNumber]) -> bool {
    let c: Vec<BigRational> = poly.iter().map(|x| x.to_rational()).collect();
    let r = crate::poly::RationalPoly::new(c);
    r.degree().is_some_and(|d| d >= 1) && !r.resultant_with_derivative().abs().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncation_examples() {
        let a = truncation_parameters(18, 7, 0).unwrap();
        assert_eq!((a.a, a.e, a.m), (3, 1, 18));
        let b = truncation_parameters(21, 7, 0).unwrap();
        assert_eq!((b.a, b.e, b.m), (3, 1, 22));
        assert!(truncation_parameters(2, 7, 0).is_ok());
        assert!(truncation_parameters(1, 7, 0).is_err());
        assert!(truncation_parameters(823_536, 7, 0).is_ok());
        assert!(truncation_parameters(823_537, 7, 0).is_err());
        assert!(truncation_parameters(18, 7, 5).is_err());
        // 49 − 2 < 49 forces M = 50.
        assert_eq!(truncation_parameters(49, 7, 0).unwrap().m, 50);
    }

    fn series(p: u64, c: &[i64], prec: i64) -> PadicPowerSeries {
        let coeffs: Vec<PadicNumber> = c.iter().map(|&x| PadicNumber::from_i64(p, x, prec)).collect();
        PadicPowerSeries::new(p, coeffs, 60)
    }

    #[test]
    fn identity_series_has_root_zero() {
        let f = series(7, &[0, 1], 20);
        let pol = truncation_parameters(18, 7, 0).unwrap();
        let r = roots_in_pzp(&f, &pol).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!(r.roots[0].value.is_zero());
        assert!(r.all_simple_certified);
        assert_eq!(r.newton_count, 1);
        assert_eq!(root_count_bound(&f.derivative()).unwrap(), 1);
    }

    #[test]
    fn bound_rejects_high_vanishing() {
        let f = series(7, &[0, 0, 0, 0, 0, 0, 1], 20);
        assert!(root_count_bound(&f.derivative()).is_err());
        let g = series(7, &[0, 0, 0, 0, 0, 1], 20);
        assert_eq!(root_count_bound(&g.derivative()).unwrap(), 5);
    }

    #[test]
    fn discriminant_examples() {
        let p = 7;
        let c = |v: &[i64]| v.iter().map(|&x| PadicNumber::from_i64(p, x, 20)).collect::<Vec<_>>();
        assert!(simplicity_check(&c(&[-49, 0, 1])));
        assert!(!simplicity_check(&c(&[49, -14, 1])));
    }

    fn eval_i128(c: &[i128], x: i128, m: i128) -> i128 {
        c.iter().rev().fold(0, |acc, &a| (acc * x + a).rem_euclid(m))
    }

    /// Random integer polynomials with roots p·s_i planted and a cofactor with no roots in pZ_p.
    fn planted(p: u64, rng: &mut ChaCha8Rng) -> (Vec<i64>, Vec<i64>) {
        let nroots = rng.gen_range(0..=3);
        let mut s: Vec<i64> = Vec::new();
        while s.len() < nroots {
            let c = rng.gen_range(0..(p * p) as i64);
            if s.iter().all(|&x| (x - c) % p as i64 != 0) {
                s.push(c);
            }
        }
        let mut poly = vec![rng.gen_range(1..p as i64), rng.gen_range(-20..20), rng.gen_range(-20..20)];
        for &si in &s {
            let mut next = vec![0i64; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * p as i64 * si;
            }
            poly = next;
        }
        (poly, s.iter().map(|&x| x * p as i64).collect())
    }

    #[test]
    fn planted_roots_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [7u64, 11, 13] {
            for _ in 0..100 {
                let (poly, roots) = planted(p, &mut rng);
                let f = series(p, &poly, 30);
                let pol = truncation_parameters(2 * p as i64 + 4, p, 0).unwrap();
                let rep = roots_in_pzp(&f, &pol).unwrap();
                let m3 = BigInt::from(p.pow(3));
                let mut got: Vec<BigInt> = rep.roots.iter().map(|r| r.value.to_bigint_mod(3).unwrap().mod_floor(&m3)).collect();
                let mut want: Vec<BigInt> = roots.iter().map(|&r| BigInt::from(r).mod_floor(&m3)).collect();
                got.sort();
                want.sort();
                assert_eq!(got, want, "p = {p}, f = {poly:?}");
                assert!(rep.all_simple_certified);
                assert!(rep.roots.len() <= rep.newton_count);
            }
        }
    }

    #[test]
    fn random_polynomials_match_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [7u64, 11, 13] {
            let m4 = (p as i128).pow(4);
            for _ in 0..100 {
                let poly: Vec<i64> = (0..6).map(|_| rng.gen_range(-200..200)).collect();
                let f = series(p, &poly, 30);
                let pol = truncation_parameters(2 * p as i64 + 4, p, 0).unwrap();
                let rep = roots_in_pzp(&f, &pol).unwrap();
                // Scaled polynomial g(t) = f(pt)/p^k.
                let k = rep.k as u32;
                let g: Vec<i128> = poly
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c as i128 * (p as i128).pow(i as u32)) / (p as i128).pow(k))
                    .collect();
                let dg: Vec<i128> = g.iter().enumerate().skip(1).map(|(i, &c)| c * i as i128).collect();
                let mut oracle: Vec<i128> = (0..m4)
                    .filter(|&t| eval_i128(&g, t, m4) == 0 && eval_i128(&dg, t, p as i128) != 0)
                    .map(|t| (t * p as i128).rem_euclid(m4))
                    .collect();
                let mut got: Vec<i128> = rep
                    .roots
                    .iter()
                    .filter(|r| r.simple && r.precision >= 4)
                    .filter(|r| eval_i128(&dg, (r.value.to_bigint_mod(5).unwrap() / BigInt::from(p)).try_into().unwrap(), p as i128) != 0)
                    .map(|r| i128::try_from(r.value.to_bigint_mod(4).unwrap()).unwrap())
                    .collect();
                oracle.sort();
                got.sort();
                assert_eq!(got, oracle, "p = {p}, f = {poly:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn roots_vanish_and_respect_bound(c in proptest::collection::vec(-300i64..300, 2..7), p in prop::sample::select(vec![7u64, 11, 13])) {
            // Antiderivatives of integral polynomials, so the integrality bound applies.
            let mut coeffs = vec![PadicNumber::from_i64(p, c[0], 30)];
            for (j, &a) in c.iter().enumerate().skip(1) {
                coeffs.push(PadicNumber::from_i64(p, a, 30).div_int(j as i64));
            }
            let f = PadicPowerSeries::new(p, coeffs, 60);
            let m_f = f.derivative().order_mod_p();
            prop_assume!(m_f.is_some_and(|m| (m as u64) + 2 < p));
            let pol = truncation_parameters(2 * p as i64 + 4, p, m_f.unwrap()).unwrap();
            let rep = roots_in_pzp(&f, &pol).unwrap();
            prop_assert!(rep.roots.len() <= rep.bound);
            prop_assert!(rep.newton_count <= rep.bound);
            for r in rep.roots.iter().filter(|r| r.simple) {
                let v = f.evaluate_polynomial(&r.value);
                prop_assert!(v.is_zero() || v.valuation() >= r.precision + rep.k - 1);
            }
        }
    }
}
