//! Recognition of p-adic approximations as rational or quadratic algebraic numbers,
//! with exact verification on the curve.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::curve::format_rational;
use crate::padic::{p_pow, PadicNumber};
use crate::poly::RationalPoly;

/// Unit part of q as an integer modulo p^rel, with the valuation and relative precision.
fn unit_mod(q: &PadicNumber) -> Option<(BigInt, i64, i64)> {
    if q.is_zero() {
        return None;
    }
    let v = q.valuation();
    let rel = q.absprec() - v;
    let u = q.mul_p_pow(-v).to_bigint_mod(rel)?;
    Some((u, v, rel))
}

fn scale_by_p_pow(r: BigRational, p: u64, v: i64) -> BigRational {
    if v >= 0 {
        r * BigRational::from_integer(p_pow(p, v as u32))
    } else {
        r / BigRational::from_integer(p_pow(p, (-v) as u32))
    }
}

/// The fraction r/s ≡ q with |r|, s ≤ p^⌊rel/2⌋, by the half extended Euclidean algorithm.
pub fn rational_reconstruction(q: &PadicNumber) -> Option<BigRational> {
    let p = q.prime();
    if q.is_zero() {
        return Some(BigRational::zero());
    }
    let (u, v, rel) = unit_mod(q)?;
    let m = p_pow(p, rel as u32);
    let bound = p_pow(p, (rel / 2) as u32);
    let (mut r0, mut r1) = (m.clone(), u);
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let qt = &r0 / &r1;
        let r2 = &r0 - &qt * &r1;
        let s2 = &s0 - &qt * &s1;
        r0 = std::mem::replace(&mut r1, r2);
        s0 = std::mem::replace(&mut s1, s2);
    }
    if s1.is_zero() || s1.abs() > bound || !r1.gcd(&s1).is_one() {
        return None;
    }
    Some(scale_by_p_pow(BigRational::new(r1, s1), p, v))
}

type Vector = Vec<BigInt>;

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).fold(BigRational::zero(), |s, t| s + t)
}

/// LLL reduction with δ = 3/4 on a small integer basis.
pub fn lll(mut b: Vec<Vector>) -> Vec<Vector> {
    let n = b.len();
    let delta = BigRational::new(3.into(), 4.into());
    let to_q = |v: &Vector| v.iter().map(|x| BigRational::from_integer(x.clone())).collect::<Vec<_>>();
    let gram_schmidt = |b: &[Vector]| {
        let mut bs: Vec<Vec<BigRational>> = Vec::with_capacity(n);
        let mut mu = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            let mut v = to_q(&b[i]);
            for j in 0..i {
                mu[i][j] = dot(&to_q(&b[i]), &bs[j]) / dot(&bs[j], &bs[j]);
                for (x, y) in v.iter_mut().zip(&bs[j]) {
                    *x -= &mu[i][j] * y;
                }
            }
            bs.push(v);
        }
        (bs, mu)
    };
    let mut k = 1;
    while k < n {
        let (_, mu) = gram_schmidt(&b);
        for j in (0..k).rev() {
            let m = mu[k][j].round().to_integer();
            if !m.is_zero() {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= &m * y;
                }
            }
        }
        let (bs, mu) = gram_schmidt(&b);
        let lhs = dot(&bs[k], &bs[k]);
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * dot(&bs[k - 1], &bs[k - 1]);
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    b
}

fn primitive(mut c: Vec<BigInt>) -> Vec<BigInt> {
    let g = c.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() {
        for x in c.iter_mut() {
            *x = &*x / &g;
        }
    }
    if c.last().is_some_and(|x| x.is_negative()) {
        for x in c.iter_mut() {
            *x = -&*x;
        }
    }
    c
}

/// An irreducible quadratic a + b·X + c·X² with small coefficients vanishing at q, if LLL finds one.
pub fn quadratic_relation(q: &PadicNumber) -> Option<[BigInt; 3]> {
    let p = q.prime();
    let (u, v, rel) = unit_mod(q)?;
    if rel < 3 {
        return None;
    }
    let m = p_pow(p, rel as u32);
    let basis = vec![
        vec![m.clone(), BigInt::zero(), BigInt::zero()],
        vec![(-&u).mod_floor(&m), BigInt::one(), BigInt::zero()],
        vec![(-(&u * &u)).mod_floor(&m), BigInt::zero(), BigInt::one()],
    ];
    let red = lll(basis);
    let bound = p_pow(p, (rel / 2) as u32);
    let best = red.into_iter().min_by_key(|w| w.iter().map(|x| x.abs()).max().unwrap())?;
    if best[2].is_zero() || best.iter().any(|x| x.abs() > bound) {
        return None;
    }
    // Relation for u; substitute u = q·p^(-v).
    let coeffs: Vec<BigRational> = (0..3)
        .map(|i| scale_by_p_pow(BigRational::from_integer(best[i].clone()), p, -(i as i64) * v))
        .collect();
    let den = coeffs.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let ints: Vec<BigInt> = coeffs.iter().map(|c| (c * BigRational::from_integer(den.clone())).to_integer()).collect();
    let c = primitive(ints);
    let disc = &c[1] * &c[1] - BigInt::from(4) * &c[0] * &c[2];
    if !disc.is_negative() && disc.sqrt().pow(2) == disc {
        return None;
    }
    Some([c[0].clone(), c[1].clone(), c[2].clone()])
}

/// a + b·√d.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticNumber {
    pub a: BigRational,
    pub b: BigRational,
}

impl QuadraticNumber {
    pub fn rational(a: BigRational) -> Self {
        QuadraticNumber { a, b: BigRational::zero() }
    }

    fn add(&self, o: &Self) -> Self {
        QuadraticNumber { a: &self.a + &o.a, b: &self.b + &o.b }
    }

    fn mul(&self, o: &Self, d: &BigRational) -> Self {
        QuadraticNumber { a: &self.a * &o.a + &self.b * &o.b * d, b: &self.a * &o.b + &self.b * &o.a }
    }

    /// Embedding into Q_p with √d ↦ delta.
    fn embed(&self, delta: &PadicNumber, prec: i64) -> PadicNumber {
        let p = delta.prime();
        &PadicNumber::from_rational(p, &self.a, prec) + &(&PadicNumber::from_rational(p, &self.b, prec) * delta)
    }
}

/// A point with coordinates in Q(√d), checked exactly on y² = G(x).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraicPoint {
    pub d: BigInt,
    pub x: QuadraticNumber,
    pub y: QuadraticNumber,
    /// Integer minimal polynomials, constant term first.
    pub x_minpoly: Vec<BigInt>,
    pub y_minpoly: Vec<BigInt>,
}

impl AlgebraicPoint {
    pub fn is_rational(&self) -> bool {
        self.x.b.is_zero() && self.y.b.is_zero()
    }

    pub fn x_minpoly_string(&self) -> String {
        format_minpoly(&self.x_minpoly, "x")
    }

    pub fn y_minpoly_string(&self) -> String {
        format_minpoly(&self.y_minpoly, "y")
    }
}

pub fn format_minpoly(c: &[BigInt], var: &str) -> String {
    let mut out = String::new();
    for (i, a) in c.iter().enumerate().rev() {
        if a.is_zero() {
            continue;
        }
        let mag = a.abs();
        if out.is_empty() {
            if a.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if a.is_negative() { " - " } else { " + " });
        }
        let mono = match i {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{i}"),
        };
        if i == 0 || !mag.is_one() {
            out.push_str(&mag.to_string());
        }
        out.push_str(&mono);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn rational_minpoly(r: &BigRational) -> Vec<BigInt> {
    primitive(vec![-r.numer().clone(), r.denom().clone()])
}

/// Candidate exact values of one coordinate: the rational reconstruction and the roots of a quadratic relation.
enum Candidate {
    Rational(BigRational),
    Quadratic([BigInt; 3]),
}

fn candidates(q: &PadicNumber) -> Vec<Candidate> {
    let mut out = Vec::new();
    if let Some(r) = rational_reconstruction(q) {
        out.push(Candidate::Rational(r));
    }
    if let Some(c) = quadratic_relation(q) {
        out.push(Candidate::Quadratic(c));
    }
    out
}

fn disc(c: &[BigInt; 3]) -> BigInt {
    &c[1] * &c[1] - BigInt::from(4) * &c[0] * &c[2]
}

/// Root of the quadratic `c` in Q(√d) (requires disc(c)·d to be a square), matching q under √d ↦ delta.
fn quadratic_root(c: &[BigInt; 3], d: &BigInt, delta: &PadicNumber, q: &PadicNumber) -> Option<QuadraticNumber> {
    let dd = disc(c) * d;
    if dd.is_negative() {
        return None;
    }
    let s = dd.sqrt();
    if &s * &s != dd {
        return None;
    }
    // √disc = s/d·√d.
    let two_c = BigInt::from(2) * &c[2];
    let a = BigRational::new(-c[1].clone(), two_c.clone());
    let b = BigRational::new(s, &two_c * d);
    let prec = q.absprec();
    for cand in [QuadraticNumber { a: a.clone(), b: b.clone() }, QuadraticNumber { a: a.clone(), b: -b.clone() }] {
        if cand.embed(delta, prec + 2).agrees_with(q) {
            return Some(cand);
        }
    }
    None
}

fn eval_quadratic(g: &RationalPoly, x: &QuadraticNumber, d: &BigRational) -> QuadraticNumber {
    let mut acc = QuadraticNumber::rational(BigRational::zero());
    for c in g.0.iter().rev() {
        acc = acc.mul(x, d).add(&QuadraticNumber::rational(c.clone()));
    }
    acc
}

/// Recognizes (x, y) as a point of y² = G(x) over Q or a quadratic field, verified exactly.
pub fn recognize_point(g: &RationalPoly, x: &PadicNumber, y: &PadicNumber) -> Option<AlgebraicPoint> {
    let p = x.prime();
    let cx = candidates(x);
    let cy = candidates(y);
    for a in &cx {
        for b in &cy {
            let d = match (a, b) {
                (Candidate::Rational(_), Candidate::Rational(_)) => BigInt::one(),
                (Candidate::Quadratic(c), _) | (Candidate::Rational(_), Candidate::Quadratic(c)) => squarefree_part(&disc(c)),
            };
            let prec = x.absprec().max(y.absprec()) + 4;
            let delta = if d.is_one() {
                PadicNumber::one(p, prec)
            } else {
                match PadicNumber::new(p, d.clone(), prec).sqrt(None) {
                    Ok(s) => s,
                    Err(_) => continue,
                }
            };
            let resolve = |c: &Candidate, q: &PadicNumber| match c {
                Candidate::Rational(r) => Some((QuadraticNumber::rational(r.clone()), rational_minpoly(r))),
                Candidate::Quadratic(k) => quadratic_root(k, &d, &delta, q).map(|v| (v, k.to_vec())),
            };
            let (Some((xv, xm)), Some((yv, ym))) = (resolve(a, x), resolve(b, y)) else { continue };
            let dq = BigRational::from_integer(d.clone());
            if yv.mul(&yv, &dq) == eval_quadratic(g, &xv, &dq) {
                let d = if xv.b.is_zero() && yv.b.is_zero() { BigInt::one() } else { d };
                return Some(AlgebraicPoint { d, x: xv, y: yv, x_minpoly: xm, y_minpoly: ym });
            }
        }
    }
    None
}

/// Squarefree part by trial division up to 10^5, keeping a square cofactor out.
pub fn squarefree_part(n: &BigInt) -> BigInt {
    let sign = if n.is_negative() { -BigInt::one() } else { BigInt::one() };
    let mut m = n.abs();
    let mut out = BigInt::one();
    let mut q = BigInt::from(2);
    let limit = BigInt::from(100_000);
    while &q * &q <= m && q < limit {
        let mut e = 0;
        while (&m % &q).is_zero() {
            m /= &q;
            e += 1;
        }
        if e % 2 == 1 {
            out *= &q;
        }
        q += 1;
    }
    let r = m.sqrt();
    if &r * &r != m {
        out *= m;
    }
    sign * out
}

/// Human-readable `a + b√d`.
pub fn format_quadratic(v: &QuadraticNumber, d: &BigInt) -> String {
    if v.b.is_zero() {
        return format_rational(&v.a);
    }
    let b = format_rational(&v.b.abs());
    let root = format!("√{d}");
    let term = if v.b.abs().is_one() { root } else { format!("{b}·{root}") };
    let sign = if v.b.is_negative() { "-" } else { "+" };
    if v.a.is_zero() {
        if v.b.is_negative() { format!("-{term}") } else { term }
    } else {
        format!("{} {sign} {term}", format_rational(&v.a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::rat;

    #[test]
    fn reconstructs_fractions() {
        for (n, d) in [(3i64, 7i64), (-22, 5), (1, 49), (0, 1), (343, 2)] {
            let q = PadicNumber::from_rational(7, &BigRational::new(n.into(), d.into()), 20);
            assert_eq!(rational_reconstruction(&q).unwrap(), BigRational::new(n.into(), d.into()));
        }
    }

    #[test]
    fn lll_reduces_small_example() {
        let b = vec![vec![1.into(), 1.into(), 1.into()], vec![(-1).into(), 0.into(), 2.into()], vec![3.into(), 5.into(), 6.into()]];
        let r = lll(b);
        let norms: Vec<BigInt> = r.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
        assert!(norms[0] <= BigInt::from(3));
    }

    #[test]
    fn finds_quadratic_relations() {
        // (1 + √-3)/2 in Q_7.
        let p = 7;
        let s = PadicNumber::from_i64(p, -3, 20).sqrt(None).unwrap();
        let x = (&PadicNumber::one(p, 20) + &s).div_int(2);
        let c = quadratic_relation(&x).unwrap();
        assert_eq!(c, [1.into(), (-1).into(), 1.into()]);
        assert_eq!(format_minpoly(&c, "x"), "x^2 - x + 1");
        let y = PadicNumber::from_i64(11, -140, 20).sqrt(None).unwrap();
        assert_eq!(format_minpoly(&quadratic_relation(&y).unwrap(), "y"), "y^2 + 140");
    }

    #[test]
    fn recognizes_example1_torsion_point() {
        let g = RationalPoly::from_ints(&[8, 32, 32, -16, -36, -8, 9, 4]);
        let y = PadicNumber::from_i64(7, 8, 16).sqrt(None).unwrap();
        let pt = recognize_point(&g, &PadicNumber::zero(7, 16), &y).unwrap();
        assert_eq!(pt.d, 2.into());
        assert_eq!(pt.y_minpoly_string(), "y^2 - 8");
        assert_eq!(pt.x_minpoly_string(), "x");
        assert_eq!(format_quadratic(&pt.y, &pt.d).trim_start_matches('-'), "2·√2");
    }

    #[test]
    fn recognizes_rational_points_and_rejects_noise() {
        let g = RationalPoly::from_ints(&[8, 32, 32, -16, -36, -8, 9, 4]);
        let x = PadicNumber::from_rational(7, &rat(1), 16);
        let y = PadicNumber::from_rational(7, &rat(-5), 16);
        let pt = recognize_point(&g, &x, &y).unwrap();
        assert!(pt.is_rational());
        assert_eq!(pt.y.a, rat(-5));
        let noise = PadicNumber::new(7, BigInt::from(123_456_789_012_345u64), 16);
        assert!(recognize_point(&g, &noise, &noise).is_none());
    }

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_part(&BigInt::from(-12)), BigInt::from(-3));
        assert_eq!(squarefree_part(&BigInt::from(32)), BigInt::from(2));
        assert_eq!(squarefree_part(&BigInt::from(-560)), BigInt::from(-35));
    }
}
