//! The Jacobian over F_p in Mumford representation, with Cantor's group law.

use serde::{Deserialize, Serialize};

use crate::curve::FpPoint;
use crate::error::{Error, Result};
use crate::fp::FpPoly;

pub const GENUS: i64 = 3;

/// A reduced divisor class (u, v) with u monic, deg v < deg u ≤ 3 and u | F − v².
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MumfordDivisorFp {
    pub u: FpPoly,
    pub v: FpPoly,
}

/// y² = F(x) over F_p with F monic of degree 7.
#[derive(Clone, Debug)]
pub struct JacobianFp {
    pub p: u64,
    pub f: FpPoly,
}

impl MumfordDivisorFp {
    pub fn identity() -> Self {
        MumfordDivisorFp { u: FpPoly::one(), v: FpPoly::zero() }
    }

    pub fn is_identity(&self) -> bool {
        self.u.deg() == 0
    }
}

impl JacobianFp {
    pub fn new(f: FpPoly, p: u64) -> Result<Self> {
        if f.deg() != 2 * GENUS + 1 || f.lead() != 1 {
            return Err(Error::Group("F must be monic of degree 7".into()));
        }
        Ok(JacobianFp { p, f })
    }

    pub fn is_valid(&self, d: &MumfordDivisorFp) -> bool {
        let p = self.p;
        d.u.lead() == 1
            && d.u.deg() <= GENUS
            && d.v.deg() < d.u.deg()
            && self.f.sub(&d.v.mul(&d.v, p), p).rem(&d.u, p).is_zero()
    }

    /// [P − ∞] for a point of C(F_p).
    pub fn point_class(&self, pt: &FpPoint) -> MumfordDivisorFp {
        match pt {
            FpPoint::Infinity => MumfordDivisorFp::identity(),
            FpPoint::Affine { x, y } => MumfordDivisorFp { u: FpPoly::new(vec![self.p - x % self.p, 1], self.p), v: FpPoly::new(vec![*y], self.p) },
        }
    }

    pub fn neg(&self, d: &MumfordDivisorFp) -> MumfordDivisorFp {
        MumfordDivisorFp { u: d.u.clone(), v: d.v.neg(self.p) }
    }

    /// Cantor composition followed by reduction.
    pub fn add(&self, a: &MumfordDivisorFp, b: &MumfordDivisorFp) -> MumfordDivisorFp {
        let p = self.p;
        let (d1, e1, e2) = FpPoly::xgcd(&a.u, &b.u, p);
        let (d, c1, c2) = FpPoly::xgcd(&d1, &a.v.add(&b.v, p), p);
        let s1 = c1.mul(&e1, p);
        let s2 = c1.mul(&e2, p);
        let s3 = c2;
        let uu = a.u.mul(&b.u, p);
        let d2 = d.mul(&d, p);
        let mut u = uu.divrem(&d2, p).0;
        let num = s1
            .mul(&a.u, p)
            .mul(&b.v, p)
            .add(&s2.mul(&b.u, p).mul(&a.v, p), p)
            .add(&s3.mul(&a.v.mul(&b.v, p).add(&self.f, p), p), p);
        let mut v = num.divrem(&d, p).0.rem(&u, p);
        while u.deg() > GENUS {
            let un = self.f.sub(&v.mul(&v, p), p).divrem(&u, p).0.monic(p);
            v = v.neg(p).rem(&un, p);
            u = un;
        }
        let u = u.monic(p);
        let v = v.rem(&u, p);
        MumfordDivisorFp { u, v }
    }

    pub fn mul(&self, d: &MumfordDivisorFp, n: u64) -> MumfordDivisorFp {
        let mut acc = MumfordDivisorFp::identity();
        let mut base = d.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &base);
            }
            base = self.add(&base, &base);
            k >>= 1;
        }
        acc
    }

    /// Exact order of d, given a multiple `group_order` of it.
    pub fn element_order(&self, d: &MumfordDivisorFp, group_order: u64) -> Result<u64> {
        if !self.mul(d, group_order).is_identity() {
            return Err(Error::Group(format!("{group_order} does not annihilate the class")));
        }
        let mut order = group_order;
        for (q, _) in factor(group_order) {
            while order % q == 0 && self.mul(d, order / q).is_identity() {
                order /= q;
            }
        }
        Ok(order)
    }

    /// #J(F_p) by enumerating all reduced Mumford pairs.
    pub fn brute_force_order(&self) -> u64 {
        let p = self.p;
        let mut count = 0u64;
        for deg in 0..=GENUS as u32 {
            let nu = p.pow(deg);
            for ui in 0..nu {
                let mut c = digits(ui, p, deg as usize);
                c.push(1);
                let u = FpPoly::new(c, p);
                for vi in 0..nu {
                    let v = FpPoly::new(digits(vi, p, deg as usize), p);
                    if self.f.sub(&v.mul(&v, p), p).rem(&u, p).is_zero() {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

fn digits(mut n: u64, p: u64, k: usize) -> Vec<u64> {
    (0..k)
        .map(|_| {
            let d = n % p;
            n /= p;
            d
        })
        .collect()
}

/// Prime factorization by trial division.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        let mut e = 0;
        while n % q == 0 {
            n /= q;
            e += 1;
        }
        if e > 0 {
            out.push((q, e));
        }
        q += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyFlags {
    /// The reduction of the base class has order prime to p.
    pub order_prime_to_p: bool,
    /// p² does not divide #J(F_p).
    pub p_squared_free: bool,
}

pub fn is_nonanomalous(p: u64, class_order: u64, group_order: u64) -> AnomalyFlags {
    AnomalyFlags { order_prime_to_p: class_order % p != 0, p_squared_free: group_order % (p * p) != 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{example1, example2};
    use crate::frobenius::brute_force_l_polynomial;
    use proptest::prelude::*;

    fn jac(c: &crate::curve::HyperellipticCurve, p: u64) -> JacobianFp {
        JacobianFp::new(c.f_mod_p(p).unwrap(), p).unwrap()
    }

    #[test]
    fn group_order_matches_zeta() {
        for c in [example1(), example2()] {
            let j = jac(&c, 7);
            let z = brute_force_l_polynomial(&c, 7).unwrap();
            assert_eq!(j.brute_force_order(), z.jacobian_order);
        }
    }

    #[test]
    fn weierstrass_classes_are_two_torsion() {
        let c = example1();
        let j = jac(&c, 7);
        let n = brute_force_l_polynomial(&c, 7).unwrap().jacobian_order;
        for pt in c.fp_points(7).unwrap() {
            let d = j.point_class(&pt);
            assert!(j.is_valid(&d));
            assert!(j.add(&d, &j.neg(&d)).is_identity());
            if pt.is_weierstrass() {
                assert!(j.element_order(&d, n).unwrap() <= 2);
            }
        }
    }

    #[test]
    fn example1_extra_point_has_order_12() {
        // (0, 2√2) on the input model maps to x = 0 on the monic model.
        let c = example1();
        let j = jac(&c, 7);
        let n = brute_force_l_polynomial(&c, 7).unwrap().jacobian_order;
        let pts: Vec<_> = c.fp_points(7).unwrap().into_iter().filter(|q| matches!(q, FpPoint::Affine { x: 0, .. })).collect();
        assert_eq!(pts.len(), 2);
        for q in pts {
            assert_eq!(j.element_order(&j.point_class(&q), n).unwrap(), 12);
        }
    }

    #[test]
    fn sum_of_two_points_is_their_divisor() {
        let c = example2();
        let j = jac(&c, 7);
        let pts: Vec<_> = c.fp_points(7).unwrap().into_iter().filter(|q| !q.is_weierstrass() && *q != FpPoint::Infinity).collect();
        for a in &pts {
            for b in &pts {
                let (FpPoint::Affine { x: x1, y: y1 }, FpPoint::Affine { x: x2, y: y2 }) = (a, b) else { unreachable!() };
                if x1 == x2 {
                    continue;
                }
                // u = (x − x1)(x − x2), v the line through both points.
                let p = 7u64;
                let u = FpPoly::new(vec![p - x1, 1], p).mul(&FpPoly::new(vec![p - x2, 1], p), p);
                let slope = (y2 + p - y1) % p * crate::padic::powmod((x2 + p - x1) % p, p - 2, p) % p;
                let v = FpPoly::new(vec![(y1 + p * p - slope * x1 % p) % p, slope], p);
                let expected = MumfordDivisorFp { u, v };
                assert!(j.is_valid(&expected));
                assert_eq!(j.add(&j.point_class(a), &j.point_class(b)), expected);
            }
        }
    }

    #[test]
    fn factorization() {
        assert_eq!(factor(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factor(97), vec![(97, 1)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn group_law_is_associative_and_annihilated(i in 0usize..11, k in 0usize..11, l in 0usize..11, n1 in 1u64..50, n2 in 1u64..50) {
            let c = example2();
            let j = jac(&c, 7);
            let order = brute_force_l_polynomial(&c, 7).unwrap().jacobian_order;
            let pts = c.fp_points(7).unwrap();
            let a = j.mul(&j.point_class(&pts[i]), n1);
            let b = j.mul(&j.point_class(&pts[k]), n2);
            let d = j.point_class(&pts[l]);
            prop_assert_eq!(j.add(&j.add(&a, &b), &d), j.add(&a, &j.add(&b, &d)));
            prop_assert!(j.mul(&j.add(&a, &b), order).is_identity());
            let ord = j.element_order(&a, order).unwrap();
            prop_assert_eq!(order % ord, 0);
        }
    }
}
