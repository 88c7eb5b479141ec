//! The curve y² = F(x) with F monic of degree 7, its reductions and its points.

use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::FpPoly;
use crate::padic::{is_prime_u64, sqrt_mod_p, PadicNumber};
use crate::poly::{clear_denominators, RationalPoly};

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses "a", "-a" or "a/b".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::BadInput(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A rational point, either on the working model or on the input model.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RationalPoint {
    Infinity,
    Affine { x: BigRational, y: BigRational },
}

impl RationalPoint {
    pub fn affine(x: BigRational, y: BigRational) -> Self {
        RationalPoint::Affine { x, y }
    }

    pub fn involution(&self) -> Self {
        match self {
            RationalPoint::Infinity => RationalPoint::Infinity,
            RationalPoint::Affine { x, y } => RationalPoint::Affine { x: x.clone(), y: -y },
        }
    }

    /// JSON-friendly form: `"infinity"` or `["x", "y"]`.
    pub fn to_strings(&self) -> PointSpec {
        match self {
            RationalPoint::Infinity => PointSpec::Infinity(InfinityTag::Infinity),
            RationalPoint::Affine { x, y } => PointSpec::Affine([format_rational(x), format_rational(y)]),
        }
    }

    /// Parses "infinity" or "x,y".
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("infinity") || s == "∞" {
            return Ok(RationalPoint::Infinity);
        }
        let inner = s.trim_start_matches('(').trim_end_matches(')');
        let (x, y) = inner.split_once(',').ok_or_else(|| Error::BadInput(format!("expected \"x,y\" or \"infinity\", got {s:?}")))?;
        Ok(RationalPoint::Affine { x: parse_rational(x)?, y: parse_rational(y)? })
    }

    pub fn from_spec(spec: &PointSpec) -> Result<Self> {
        match spec {
            PointSpec::Infinity(_) => Ok(RationalPoint::Infinity),
            PointSpec::Affine([x, y]) => Ok(RationalPoint::Affine { x: parse_rational(x)?, y: parse_rational(y)? }),
        }
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RationalPoint::Infinity => write!(f, "∞"),
            RationalPoint::Affine { x, y } => write!(f, "({}, {})", format_rational(x), format_rational(y)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfinityTag {
    Infinity,
}

/// Serialized point: the string "infinity" or a pair of rational strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Infinity(InfinityTag),
    Affine([String; 2]),
}

/// A point over Q_p on the working model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvePoint {
    Infinity,
    Affine { x: PadicNumber, y: PadicNumber },
}

impl CurvePoint {
    pub fn involution(&self) -> Self {
        match self {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine { x: x.clone(), y: -y },
        }
    }

    pub fn is_weierstrass(&self) -> bool {
        match self {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { y, .. } => y.is_zero(),
        }
    }

    pub fn x(&self) -> Option<&PadicNumber> {
        match self {
            CurvePoint::Infinity => None,
            CurvePoint::Affine { x, .. } => Some(x),
        }
    }

    pub fn y(&self) -> Option<&PadicNumber> {
        match self {
            CurvePoint::Infinity => None,
            CurvePoint::Affine { y, .. } => Some(y),
        }
    }
}

/// A point of the reduction over F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FpPoint {
    Infinity,
    Affine { x: u64, y: u64 },
}

impl FpPoint {
    pub fn is_weierstrass(&self) -> bool {
        match self {
            FpPoint::Infinity => true,
            FpPoint::Affine { y, .. } => *y == 0,
        }
    }

    pub fn involution(&self, p: u64) -> Self {
        match *self {
            FpPoint::Infinity => FpPoint::Infinity,
            FpPoint::Affine { x, y } => FpPoint::Affine { x, y: (p - y) % p },
        }
    }

    /// The representative of `{P, ι(P)}` with the smaller y.
    pub fn canonical(&self, p: u64) -> Self {
        (*self).min(self.involution(p))
    }
}

impl fmt::Display for FpPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpPoint::Infinity => write!(f, "∞"),
            FpPoint::Affine { x, y } => write!(f, "({x},{y})"),
        }
    }
}

/// A Q_p-point with y = 0 (or ∞), tagged with its exact rational x when it has one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassPoint {
    pub residue: u64,
    pub point: CurvePoint,
    pub rational_x: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperellipticCurve {
    f: RationalPoly,
    original: RationalPoly,
    scale_x: BigRational,
    scale_y: BigRational,
}

impl HyperellipticCurve {
    /// Normalizes y² = G(x), deg G = 7, to a monic model via x_in = u·x, y_in = v·y.
    /// Without an explicit scaling, u = 1/c and v = 1/c³ for the leading coefficient c.
    pub fn normalize_to_monic_odd(g: &[BigRational], scaling: Option<(BigRational, BigRational)>) -> Result<Self> {
        let original = RationalPoly::new(g.to_vec());
        if original.degree() != Some(7) {
            return Err(Error::BadInput(format!("expected a degree 7 polynomial, got degree {:?}", original.degree())));
        }
        let c = original.coeff(7);
        let (u, v) = match scaling {
            Some((u, v)) => {
                if u.is_zero() || v.is_zero() {
                    return Err(Error::BadInput("scaling factors must be nonzero".into()));
                }
                let lead = &c * num_traits::pow(u.clone(), 7) / (&v * &v);
                if !lead.is_one() {
                    return Err(Error::BadInput(format!(
                        "scaling (u, v) does not give a monic model: c·u^7/v^2 = {}",
                        format_rational(&lead)
                    )));
                }
                (u, v)
            }
            None => {
                let inv = c.recip();
                (inv.clone(), num_traits::pow(inv, 3))
            }
        };
        let v2 = &v * &v;
        let mut f = Vec::with_capacity(8);
        let mut upow = BigRational::one();
        for i in 0..8 {
            f.push(original.coeff(i) * &upow / &v2);
            upow = upow * &u;
        }
        let curve = HyperellipticCurve { f: RationalPoly::new(f), original, scale_x: u, scale_y: v };
        if curve.discriminant().is_zero() {
            return Err(Error::BadInput("the polynomial has a repeated root".into()));
        }
        Ok(curve)
    }

    pub fn from_monic(f: &[BigRational]) -> Result<Self> {
        Self::normalize_to_monic_odd(f, Some((rat(1), rat(1))))
    }

    pub fn from_int_coeffs(g: &[i64]) -> Result<Self> {
        let g: Vec<BigRational> = g.iter().map(|&c| rat(c)).collect();
        Self::normalize_to_monic_odd(&g, None)
    }

    /// Coefficients of the monic working model, constant term first.
    pub fn f(&self) -> &RationalPoly {
        &self.f
    }

    pub fn original(&self) -> &RationalPoly {
        &self.original
    }

    pub fn scaling(&self) -> (&BigRational, &BigRational) {
        (&self.scale_x, &self.scale_y)
    }

    /// Res(F, F'), which vanishes exactly when F has a repeated root.
    pub fn discriminant(&self) -> BigRational {
        self.f.resultant_with_derivative()
    }

    pub fn f_padic(&self, p: u64, absprec: i64) -> Vec<PadicNumber> {
        self.f.to_padic(p, absprec)
    }

    /// Reduction of F modulo p, or an error when some coefficient is not p-integral.
    pub fn f_mod_p(&self, p: u64) -> Result<FpPoly> {
        let mut c = Vec::with_capacity(8);
        for x in &self.f.0 {
            let px = PadicNumber::from_rational(p, x, 1);
            match px.residue() {
                Some(r) => c.push(r),
                None => {
                    return Err(Error::BadReduction { p, reason: format!("coefficient {} is not {p}-integral", format_rational(x)) })
                }
            }
        }
        Ok(FpPoly::new(c, p))
    }

    pub fn check_good_reduction(&self, p: u64) -> Result<()> {
        if p < 3 || p % 2 == 0 || !is_prime_u64(p) {
            return Err(Error::BadInput(format!("{p} is not an odd prime")));
        }
        let fbar = self.f_mod_p(p)?;
        if fbar.deg() != 7 || !fbar.is_squarefree(p) {
            return Err(Error::BadReduction { p, reason: "F mod p has a repeated root".into() });
        }
        let lead = self.original.coeff(7);
        if lead.numer().is_multiple_of(&BigInt::from(p)) {
            return Err(Error::BadReduction { p, reason: "p divides the leading coefficient of the input model".into() });
        }
        Ok(())
    }

    /// Smallest prime at least `lower_bound` of good reduction.
    pub fn choose_prime(&self, lower_bound: u64) -> u64 {
        let mut p = lower_bound.max(3);
        loop {
            if is_prime_u64(p) && p % 2 == 1 && self.check_good_reduction(p).is_ok() {
                return p;
            }
            p += 1;
        }
    }

    /// All points over F_p: ∞ first, then affine points in lexicographic order.
    pub fn fp_points(&self, p: u64) -> Result<Vec<FpPoint>> {
        self.check_good_reduction(p)?;
        let fbar = self.f_mod_p(p)?;
        let mut pts = vec![FpPoint::Infinity];
        for x in 0..p {
            let v = fbar.eval(x, p);
            if v == 0 {
                pts.push(FpPoint::Affine { x, y: 0 });
            } else if let Some(r) = sqrt_mod_p(v, p) {
                let (a, b) = if r < p - r { (r, p - r) } else { (p - r, r) };
                pts.push(FpPoint::Affine { x, y: a });
                pts.push(FpPoint::Affine { x, y: b });
            }
        }
        Ok(pts)
    }

    pub fn reduce_point(&self, pt: &CurvePoint) -> Result<FpPoint> {
        match pt {
            CurvePoint::Infinity => Ok(FpPoint::Infinity),
            CurvePoint::Affine { x, y } => {
                if x.absprec() < 1 || y.absprec() < 1 {
                    return Err(Error::Precision("point known to fewer than one digit".into()));
                }
                if x.valuation() < 0 {
                    return Ok(FpPoint::Infinity);
                }
                let p = x.prime();
                Ok(FpPoint::Affine { x: x.residue().unwrap(), y: y.residue().ok_or_else(|| Error::NotOnCurve(format!("y = {y} is not integral but x is")))? % p })
            }
        }
    }

    pub fn reduce_rational(&self, pt: &RationalPoint, p: u64) -> Result<FpPoint> {
        self.reduce_point(&self.rational_to_padic(pt, p, 4))
    }

    pub fn rational_to_padic(&self, pt: &RationalPoint, p: u64, absprec: i64) -> CurvePoint {
        match pt {
            RationalPoint::Infinity => CurvePoint::Infinity,
            RationalPoint::Affine { x, y } => CurvePoint::Affine {
                x: PadicNumber::from_rational(p, x, absprec),
                y: PadicNumber::from_rational(p, y, absprec),
            },
        }
    }

    pub fn is_on_curve(&self, pt: &RationalPoint) -> bool {
        match pt {
            RationalPoint::Infinity => true,
            RationalPoint::Affine { x, y } => y * y == self.f.eval(x),
        }
    }

    pub fn is_on_curve_padic(&self, pt: &CurvePoint) -> bool {
        match pt {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, y } => {
                let prec = x.absprec().min(y.absprec()).min(200);
                let fx = crate::poly::eval(&self.f_padic(x.prime(), prec + 8), x);
                (y * y).agrees_with(&fx)
            }
        }
    }

    /// Working-model point to input-model coordinates.
    pub fn to_original(&self, pt: &RationalPoint) -> RationalPoint {
        match pt {
            RationalPoint::Infinity => RationalPoint::Infinity,
            RationalPoint::Affine { x, y } => RationalPoint::Affine { x: x * &self.scale_x, y: y * &self.scale_y },
        }
    }

    /// Input-model point to working-model coordinates.
    pub fn from_original(&self, pt: &RationalPoint) -> RationalPoint {
        match pt {
            RationalPoint::Infinity => RationalPoint::Infinity,
            RationalPoint::Affine { x, y } => RationalPoint::Affine { x: x / &self.scale_x, y: y / &self.scale_y },
        }
    }

    /// Hensel lifts of the roots of F mod p, tagged with exact rational roots of F.
    pub fn weierstrass_points_qp(&self, p: u64, prec: i64) -> Result<Vec<WeierstrassPoint>> {
        self.check_good_reduction(p)?;
        let fbar = self.f_mod_p(p)?;
        let coeffs = self.f_padic(p, prec);
        let rational_roots = self.f.rational_roots();
        let mut out = Vec::new();
        for r in fbar.roots(p) {
            let x = PadicNumber::hensel_lift_root(&coeffs, &PadicNumber::from_i64(p, r as i64, 1), prec)?;
            let rational_x = rational_roots
                .iter()
                .find(|q| {
                    let qp = PadicNumber::from_rational(p, q, prec);
                    qp.valuation() >= 0 && qp.agrees_with(&x)
                })
                .cloned();
            out.push(WeierstrassPoint { residue: r, point: CurvePoint::Affine { x, y: PadicNumber::exact_zero(p) }, rational_x });
        }
        Ok(out)
    }

    /// Rational points on the input model with x = a/b, |a|, b ≤ H, plus ∞, in input coordinates.
    pub fn search_rational_points(&self, height: u64) -> Vec<RationalPoint> {
        let ints = clear_denominators(&self.original.0);
        let d = {
            let mut l = BigInt::one();
            for c in &self.original.0 {
                l = l.lcm(c.denom());
            }
            l
        };
        let h = height as i64;
        let small: Option<Vec<i128>> = ints.iter().map(|c| c.to_i128()).collect();
        let d_small = d.to_i128();
        let mut found: Vec<RationalPoint> = (-h..=h)
            .into_par_iter()
            .flat_map_iter(|a| {
                let mut local = Vec::new();
                for b in 1..=h {
                    if a.gcd(&b) != 1 {
                        continue;
                    }
                    let hit = match (&small, d_small) {
                        (Some(c), Some(dd)) => square_check_i128(c, dd, a, b),
                        _ => None,
                    };
                    let hit = hit.unwrap_or_else(|| square_check_big(&ints, &d, a, b));
                    if let Some(root) = hit {
                        let x = BigRational::new(BigInt::from(a), BigInt::from(b));
                        let den = &d * BigInt::from(b).pow(4);
                        let y = BigRational::new(root, den);
                        if y.is_zero() {
                            local.push(RationalPoint::Affine { x, y });
                        } else {
                            local.push(RationalPoint::Affine { x: x.clone(), y: -y.clone() });
                            local.push(RationalPoint::Affine { x, y });
                        }
                    }
                }
                local
            })
            .collect();
        found.push(RationalPoint::Infinity);
        found.sort();
        found.dedup();
        found
    }
}

/// Returns sqrt(D·b·S) when it is an integer, where S = Σ c_i a^i b^(7-i); `None` on overflow or failure
/// is distinguished by the outer Option: `Some(None)` means "not a square".
fn square_check_i128(c: &[i128], d: i128, a: i64, b: i64) -> Option<Option<BigInt>> {
    let (a, b) = (a as i128, b as i128);
    let mut s: i128 = 0;
    let mut apow: i128 = 1;
    let mut bpows = [1i128; 8];
    for i in 1..8 {
        bpows[i] = bpows[i - 1].checked_mul(b)?;
    }
    for (i, ci) in c.iter().enumerate() {
        let term = ci.checked_mul(apow)?.checked_mul(bpows[7 - i])?;
        s = s.checked_add(term)?;
        if i < 7 {
            apow = apow.checked_mul(a)?;
        }
    }
    let t = d.checked_mul(b)?.checked_mul(s)?;
    if t < 0 {
        return Some(None);
    }
    let r = t.sqrt();
    Some(if r * r == t { Some(BigInt::from(r)) } else { None })
}

fn square_check_big(c: &[BigInt], d: &BigInt, a: i64, b: i64) -> Option<BigInt> {
    let (a, b) = (BigInt::from(a), BigInt::from(b));
    let mut s = BigInt::zero();
    for (i, ci) in c.iter().enumerate() {
        s += ci * a.pow(i as u32) * b.pow(7 - i as u32);
    }
    let t = d * &b * s;
    if t.is_negative() {
        return None;
    }
    let r = t.sqrt();
    if &r * &r == t {
        Some(r)
    } else {
        None
    }
}


#[cfg(test)]
pub(crate) use tests::{example1, example2, example3};

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn point_counts_have_parity_of_roots(c in proptest::collection::vec(-20i64..20, 7)) {
            let mut g = c.clone();
            g.push(1);
            if let Ok(curve) = HyperellipticCurve::from_int_coeffs(&g) {
                for p in [7u64, 11, 13] {
                    if let Ok(pts) = curve.fp_points(p) {
                        let roots = curve.f_mod_p(p).unwrap().roots(p).len();
                        let affine_non_w = pts.iter().filter(|q| !q.is_weierstrass()).count();
                        prop_assert_eq!(affine_non_w % 2, 0);
                        prop_assert_eq!(pts.len() % 2 == 1, roots % 2 == 0);
                        let ws = curve.weierstrass_points_qp(p, 6).unwrap();
                        prop_assert_eq!(ws.len(), roots);
                    }
                }
            }
        }

        #[test]
        fn searched_points_reduce_to_fp_points(c in proptest::collection::vec(-6i64..6, 7)) {
            let mut g = c.clone();
            g.push(1);
            if let Ok(curve) = HyperellipticCurve::from_int_coeffs(&g) {
                let p = curve.choose_prime(7);
                let pts = curve.fp_points(p).unwrap();
                for q in curve.search_rational_points(6) {
                    let m = curve.from_original(&q);
                    prop_assert!(curve.is_on_curve(&m));
                    prop_assert!(pts.contains(&curve.reduce_rational(&m, p).unwrap()));
                }
            }
        }
    }
}
