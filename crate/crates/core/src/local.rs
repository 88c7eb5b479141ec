//! Local coordinates in residue disks, expansions of holomorphic differentials, tiny integrals.

use serde::{Deserialize, Serialize};

use crate::curve::{CurvePoint, FpPoint, HyperellipticCurve};
use crate::error::{Error, Result};
use crate::padic::{PadicNumber, EXACT};
use crate::series::{PadicPowerSeries, TailBound};

/// Number of holomorphic basis forms ω_i = x^i dx/2y.
pub const HOLOMORPHIC: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskCase {
    Generic,
    FiniteWeierstrass,
    Infinity,
}

/// c0·ω_0 + c1·ω_1 + c2·ω_2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialForm {
    pub c: [PadicNumber; HOLOMORPHIC],
}

impl DifferentialForm {
    pub fn new(c0: PadicNumber, c1: PadicNumber, c2: PadicNumber) -> Self {
        DifferentialForm { c: [c0, c1, c2] }
    }

    pub fn basis(i: usize, p: u64, prec: i64) -> Self {
        let c = std::array::from_fn(|j| if i == j { PadicNumber::one(p, prec) } else { PadicNumber::zero(p, prec) });
        DifferentialForm { c }
    }

    pub fn prime(&self) -> u64 {
        self.c[0].prime()
    }

    pub fn min_valuation(&self) -> Option<i64> {
        self.c.iter().filter(|x| !x.is_zero()).map(|x| x.valuation()).min()
    }

    pub fn is_unit_normalized(&self) -> bool {
        self.min_valuation() == Some(0)
    }

    pub fn scale(&self, k: &PadicNumber) -> Self {
        DifferentialForm { c: std::array::from_fn(|i| &self.c[i] * k) }
    }

    pub fn add(&self, o: &Self) -> Self {
        DifferentialForm { c: std::array::from_fn(|i| &self.c[i] + &o.c[i]) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        DifferentialForm { c: std::array::from_fn(|i| &self.c[i] - &o.c[i]) }
    }

    /// Pairing with a vector of integrals of ω_0, ω_1, ω_2.
    pub fn pair(&self, integrals: &[PadicNumber]) -> PadicNumber {
        let mut acc = PadicNumber::exact_zero(self.prime());
        for (c, v) in self.c.iter().zip(integrals) {
            acc = &acc + &(c * v);
        }
        acc
    }

    pub fn reduce_mod_p(&self) -> Result<[u64; HOLOMORPHIC]> {
        let mut out = [0; HOLOMORPHIC];
        for (o, c) in out.iter_mut().zip(&self.c) {
            *o = c.residue().ok_or_else(|| Error::Annihilator(format!("coefficient {c} is not integral")))?;
        }
        Ok(out)
    }
}

impl std::fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})·ω0 + ({})·ω1 + ({})·ω2", self.c[0], self.c[1], self.c[2])
    }
}

/// Parametrization of a residue disk by t ∈ pZ_p.
///
/// In the infinity case x = t^(-2)·x_of_t and y = t^(-7)·y_of_t, both unit series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub center: CurvePoint,
    pub case: DiskCase,
    pub x_of_t: PadicPowerSeries,
    pub y_of_t: PadicPowerSeries,
    pub x_pole: u32,
    pub y_pole: u32,
    omegas: Vec<PadicPowerSeries>,
    f: Vec<PadicNumber>,
}

fn exact_tail(s: PadicPowerSeries) -> PadicPowerSeries {
    s.with_tail(TailBound { min_val: EXACT, antiderivative: false })
}

fn constant(c: &PadicNumber, m: usize) -> PadicPowerSeries {
    exact_tail(PadicPowerSeries::new(c.prime(), vec![c.clone()], m))
}

/// Σ coeffs[i]·s^i by Horner.
fn horner(coeffs: &[PadicPowerSeries], s: &PadicPowerSeries) -> Result<PadicPowerSeries> {
    let mut acc = PadicPowerSeries::zero(s.prime(), s.t_prec());
    acc = exact_tail(acc);
    for c in coeffs.iter().rev() {
        acc = acc.mul(s)?.add(c);
    }
    Ok(acc)
}

fn pow_series(s: &PadicPowerSeries, e: usize) -> Result<PadicPowerSeries> {
    let mut acc = constant(&PadicNumber::one(s.prime(), s.coeff(0).absprec().max(1)), s.t_prec());
    for _ in 0..e {
        acc = acc.mul(s)?;
    }
    Ok(acc)
}

/// g(t²) from g(u).
fn substitute_square(g: &PadicPowerSeries, m: usize) -> PadicPowerSeries {
    let p = g.prime();
    let mut c = vec![PadicNumber::exact_zero(p); m];
    for (k, a) in g.coeffs().iter().enumerate() {
        if 2 * k < m {
            c[2 * k] = a.clone();
        }
    }
    PadicPowerSeries::new(p, c, m).with_tail(g.tail())
}

/// t^s·g(t).
fn shift(g: &PadicPowerSeries, s: usize) -> PadicPowerSeries {
    let p = g.prime();
    let mut c = vec![PadicNumber::exact_zero(p); s];
    c.extend(g.coeffs().iter().cloned());
    PadicPowerSeries::new(p, c, g.t_prec() + s).with_tail(g.tail())
}

impl LocalExpansion {
    pub fn omega(&self, i: usize) -> &PadicPowerSeries {
        &self.omegas[i]
    }

    pub fn t_prec(&self) -> usize {
        self.x_of_t.t_prec()
    }

    /// Whether `q` lies in the residue disk of the center.
    pub fn contains(&self, q: &CurvePoint) -> bool {
        match (&self.center, q) {
            (CurvePoint::Infinity, CurvePoint::Infinity) => true,
            (CurvePoint::Infinity, CurvePoint::Affine { x, .. }) => !x.is_zero() && x.valuation() < 0,
            (CurvePoint::Affine { .. }, CurvePoint::Infinity) => false,
            (CurvePoint::Affine { x: x0, y: y0 }, CurvePoint::Affine { x, y }) => {
                if x.valuation() < 0 && !x.is_zero() {
                    return false;
                }
                let dx = x - x0;
                let dy = y - y0;
                dx.valuation() >= 1 && dy.valuation() >= 1
            }
        }
    }

    /// The local parameter t(q).
    pub fn parameter(&self, q: &CurvePoint) -> Result<PadicNumber> {
        if !self.contains(q) {
            return Err(Error::DifferentDisks);
        }
        let p = self.x_of_t.prime();
        match (&self.center, q) {
            (_, CurvePoint::Infinity) => Ok(PadicNumber::exact_zero(p)),
            (CurvePoint::Infinity, CurvePoint::Affine { x, y }) => Ok(&(&(x * x) * x) / y),
            (CurvePoint::Affine { x: x0, y: y0 }, CurvePoint::Affine { x, y }) => match self.case {
                DiskCase::Generic => Ok(x - x0),
                _ => Ok(y - y0),
            },
        }
    }

    /// The point with parameter t0, computed by Hensel lifting rather than series evaluation.
    pub fn point_at(&self, t0: &PadicNumber, prec: i64) -> Result<CurvePoint> {
        let p = self.x_of_t.prime();
        if t0.is_zero() && t0.absprec() >= EXACT {
            return Ok(self.center.clone());
        }
        if t0.valuation() < 1 {
            return Err(Error::Series(format!("parameter {t0} is not in pZ_p")));
        }
        let f = &self.f;
        match (&self.center, self.case) {
            (CurvePoint::Affine { x: x0, y: y0 }, DiskCase::Generic) => {
                let x = x0 + t0;
                let fx = crate::poly::eval(f, &x);
                let y = fx.sqrt(y0.residue())?;
                Ok(CurvePoint::Affine { x, y })
            }
            (CurvePoint::Affine { x: x0, y: y0 }, DiskCase::FiniteWeierstrass) => {
                let y = y0 + t0;
                let mut g = f.clone();
                g[0] = &g[0] - &(&y * &y);
                let x = PadicNumber::hensel_lift_root(&g, x0, prec)?;
                Ok(CurvePoint::Affine { x, y })
            }
            (CurvePoint::Infinity, DiskCase::Infinity) => {
                let u = t0 * t0;
                let g = infinity_polynomial(f, &u);
                let xx = PadicNumber::hensel_lift_root(&g, &PadicNumber::one(p, prec), prec)?;
                let x = &xx / &u;
                let x3 = &(&xx * &xx) * &xx;
                let t7 = t0.pow(7);
                Ok(CurvePoint::Affine { x, y: &x3 / &t7 })
            }
            _ => unreachable!("case and center are constructed together"),
        }
    }

    pub fn expand(&self, form: &DifferentialForm) -> PadicPowerSeries {
        let mut acc = self.omegas[0].scale(&form.c[0]);
        for i in 1..HOLOMORPHIC {
            acc = acc.add(&self.omegas[i].scale(&form.c[i]));
        }
        acc
    }

    /// dx/dt, for the finite cases.
    pub fn dx_series(&self) -> Result<PadicPowerSeries> {
        match self.case {
            DiskCase::Infinity => Err(Error::Series("dx has a pole at infinity".into())),
            _ => Ok(self.x_of_t.derivative()),
        }
    }
}

/// X^7 − X^6 + Σ_{i<7} f_i u^(7−i) X^i for a given u.
fn infinity_polynomial(f: &[PadicNumber], u: &PadicNumber) -> Vec<PadicNumber> {
    let mut g: Vec<PadicNumber> = (0..7).map(|i| &f[i] * &u.pow(7 - i as u64)).collect();
    g[6] = &g[6] - &PadicNumber::one(u.prime(), u.absprec().max(1));
    g.push(PadicNumber::one(u.prime(), u.absprec().max(1)));
    g
}

/// Local coordinate at `center` with `m` terms in t and p-adic working precision `prec`.
pub fn local_coordinate(curve: &HyperellipticCurve, center: &CurvePoint, m: usize, prec: i64) -> Result<LocalExpansion> {
    let m = m.max(2);
    let p = match center {
        CurvePoint::Affine { x, .. } => x.prime(),
        CurvePoint::Infinity => return Err(Error::BadInput("the prime is unknown for a bare infinity center; use local_coordinate_at_infinity".into())),
    };
    let (x0, y0) = (center.x().unwrap(), center.y().unwrap());
    if x0.valuation() < 0 && !x0.is_zero() {
        return Err(Error::NotGeneric("center lies in the disk at infinity; expand at infinity instead".into()));
    }
    if !curve.is_on_curve_padic(center) {
        return Err(Error::NotOnCurve(format!("({x0}, {y0})")));
    }
    let f = curve.f_padic(p, prec);
    let fs: Vec<PadicPowerSeries> = f.iter().map(|c| constant(c, m)).collect();
    let df = crate::poly::derivative(&f);
    let dfs: Vec<PadicPowerSeries> = df.iter().map(|c| constant(c, m)).collect();
    let half = PadicNumber::one(p, prec).div_int(2);
    if y0.valuation() < 1 {
        let x = exact_tail(PadicPowerSeries::new(p, vec![x0.clone(), PadicNumber::one(p, EXACT.min(prec + 64))], m));
        let fx = horner(&fs, &x)?;
        let y = fx.sqrt_series(y0)?;
        let inv2y = y.invert_unit()?.scale(&half);
        let mut omegas = Vec::with_capacity(HOLOMORPHIC);
        let mut xi = constant(&PadicNumber::one(p, prec), m);
        for _ in 0..HOLOMORPHIC {
            omegas.push(xi.mul(&inv2y)?);
            xi = xi.mul(&x)?;
        }
        return Ok(LocalExpansion { center: center.clone(), case: DiskCase::Generic, x_of_t: x, y_of_t: y, x_pole: 0, y_pole: 0, omegas, f });
    }
    // Weierstrass disk: y = y0 + t, F(x(t)) = y(t)².
    if !crate::poly::eval(&df, x0).is_unit() {
        return Err(Error::NotGeneric("F' is not a unit at the center".into()));
    }
    let y = exact_tail(PadicPowerSeries::new(p, vec![y0.clone(), PadicNumber::one(p, prec + 64)], m));
    let s = y.mul(&y)?;
    let mut x = constant(x0, m);
    let mut k = 1;
    while k < 2 * m {
        let r = horner(&fs, &x)?.sub(&s);
        let d = horner(&dfs, &x)?.invert_unit()?;
        x = x.sub(&r.mul(&d)?);
        k *= 2;
    }
    let x = x.with_tail(TailBound::INTEGRAL);
    let inv_df = horner(&dfs, &x)?.invert_unit()?;
    let mut omegas = Vec::with_capacity(HOLOMORPHIC);
    let mut xi = constant(&PadicNumber::one(p, prec), m);
    for _ in 0..HOLOMORPHIC {
        omegas.push(xi.mul(&inv_df)?);
        xi = xi.mul(&x)?;
    }
    Ok(LocalExpansion { center: center.clone(), case: DiskCase::FiniteWeierstrass, x_of_t: x, y_of_t: y, x_pole: 0, y_pole: 0, omegas, f })
}

/// Local coordinate t = x³/y at the point at infinity.
pub fn local_coordinate_at_infinity(curve: &HyperellipticCurve, p: u64, m: usize, prec: i64) -> Result<LocalExpansion> {
    let m = m.max(2);
    let mu = m / 2 + 2;
    let f = curve.f_padic(p, prec);
    let one = PadicNumber::one(p, prec);
    // Coefficients of G(X) as series in u.
    let mut gc: Vec<PadicPowerSeries> = (0..7)
        .map(|i| {
            let mut c = vec![PadicNumber::exact_zero(p); 7 - i];
            c.push(f[i].clone());
            exact_tail(PadicPowerSeries::new(p, c, mu))
        })
        .collect();
    gc[6] = gc[6].sub(&constant(&one, mu));
    gc.push(constant(&one, mu));
    let dgc: Vec<PadicPowerSeries> = (1..8).map(|i| gc[i].scale(&PadicNumber::from_i64(p, i as i64, EXACT.min(prec + 64)))).collect();
    let mut xx = constant(&one, mu);
    let mut k = 1;
    while k < 2 * mu {
        let r = horner(&gc, &xx)?;
        let d = horner(&dgc, &xx)?.invert_unit()?;
        xx = xx.sub(&r.mul(&d)?);
        k *= 2;
    }
    let xx = xx.with_tail(TailBound::INTEGRAL);
    let u = exact_tail(PadicPowerSeries::new(p, vec![PadicNumber::exact_zero(p), one.clone()], mu));
    let w = u.mul(&xx.derivative().with_tail(TailBound::INTEGRAL))?.sub(&xx);
    let inv = xx.invert_unit()?;
    let mut omegas = Vec::with_capacity(HOLOMORPHIC);
    for i in 0..HOLOMORPHIC {
        let wi = pow_series(&inv, 3 - i)?.mul(&w)?;
        omegas.push(shift(&substitute_square(&wi, m), 4 - 2 * i).truncate_t(m));
    }
    let x_of_t = substitute_square(&xx, m);
    let y_of_t = substitute_square(&pow_series(&xx, 3)?, m);
    Ok(LocalExpansion { center: CurvePoint::Infinity, case: DiskCase::Infinity, x_of_t, y_of_t, x_pole: 2, y_pole: 7, omegas, f })
}

/// Expansion at any point, dispatching on the disk.
pub fn expansion_at(curve: &HyperellipticCurve, p: u64, center: &CurvePoint, m: usize, prec: i64) -> Result<LocalExpansion> {
    match center {
        CurvePoint::Infinity => local_coordinate_at_infinity(curve, p, m, prec),
        _ => local_coordinate(curve, center, m, prec),
    }
}

/// Number of series terms so that integrating to `prec` digits over t ∈ pZ_p loses nothing.
pub fn terms_for_precision(p: u64, prec: i64) -> usize {
    let mut m = prec.max(1) as usize;
    while (m as i64 + 1) - crate::padic::floor_log_p(p, m as u64 + 1) < prec {
        m += 1;
    }
    m + 1
}

/// ∫_P^Q form for P and Q in the same residue disk.
pub fn tiny_integral(curve: &HyperellipticCurve, form: &DifferentialForm, pt: &CurvePoint, qt: &CurvePoint, prec: i64) -> Result<PadicNumber> {
    let p = form.prime();
    let center = match pt {
        CurvePoint::Affine { x, .. } if !x.is_zero() && x.valuation() < 0 => CurvePoint::Infinity,
        _ => pt.clone(),
    };
    let m = terms_for_precision(p, prec);
    let exp = expansion_at(curve, p, &center, m, prec + 4)?;
    tiny_integral_with(&exp, form, pt, qt)
}

/// ∫_P^Q form using a precomputed expansion of the disk.
pub fn tiny_integral_with(exp: &LocalExpansion, form: &DifferentialForm, pt: &CurvePoint, qt: &CurvePoint) -> Result<PadicNumber> {
    let tp = exp.parameter(pt)?;
    let tq = exp.parameter(qt)?;
    let prim = exp.expand(form).formal_integral()?;
    let at = |t: &PadicNumber| -> Result<PadicNumber> {
        if t.is_zero() && t.absprec() >= EXACT {
            Ok(PadicNumber::exact_zero(t.prime()))
        } else if t.is_zero() {
            // Parameter known to be O(p^k) only.
            let k = t.absprec().max(1);
            let v = prim.tail_valuation(k).min(k + prim.min_coeff_valuation().unwrap_or(0));
            Ok(PadicNumber::zero(t.prime(), v))
        } else {
            prim.evaluate_in_disk(t)
        }
    };
    Ok(&at(&tq)? - &at(&tp)?)
}

/// A lift of a point of C(F_p): integer x for generic disks, the Hensel root for
/// Weierstrass disks, infinity for the disk at infinity.
pub fn lift_fp_point(curve: &HyperellipticCurve, pt: &FpPoint, p: u64, prec: i64) -> Result<CurvePoint> {
    match pt {
        FpPoint::Infinity => Ok(CurvePoint::Infinity),
        FpPoint::Affine { x, y } => {
            let f = curve.f_padic(p, prec);
            let x0 = PadicNumber::from_i64(p, *x as i64, prec);
            if *y == 0 {
                let x = PadicNumber::hensel_lift_root(&f, &x0, prec)?;
                Ok(CurvePoint::Affine { x, y: PadicNumber::zero(p, prec) })
            } else {
                let y = crate::poly::eval(&f, &x0).sqrt(Some(*y))?;
                Ok(CurvePoint::Affine { x: x0, y })
            }
        }
    }
}

/// m(Q̄): the smaller of the orders of vanishing of ᾱ and β̄ at the F_p point.
pub fn disk_vanishing_order(curve: &HyperellipticCurve, alpha: &DifferentialForm, beta: &DifferentialForm, disk: &FpPoint) -> Result<usize> {
    let p = alpha.prime();
    if !alpha.is_unit_normalized() || !beta.is_unit_normalized() {
        return Err(Error::Annihilator("forms must be unit-normalized".into()));
    }
    let center = lift_fp_point(curve, disk, p, 6)?;
    let exp = expansion_at(curve, p, &center, 8, 6)?;
    let oa = exp.expand(alpha).order_mod_p();
    let ob = exp.expand(beta).order_mod_p();
    match (oa, ob) {
        (None, None) => Err(Error::Annihilator(format!("both forms vanish to order at least 8 at {disk}"))),
        (a, b) => Ok(a.unwrap_or(usize::MAX).min(b.unwrap_or(usize::MAX))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{example1, example2, RationalPoint, rat};

    fn padic_point(c: &HyperellipticCurve, x: i64, y: i64, p: u64, prec: i64) -> CurvePoint {
        let pt = c.from_original(&RationalPoint::affine(rat(x), rat(y)));
        c.rational_to_padic(&pt, p, prec)
    }

    #[test]
    fn generic_expansion_satisfies_curve() {
        let c = example2();
        let pt = padic_point(&c, 1, 1, 7, 20);
        let e = local_coordinate(&c, &pt, 12, 20).unwrap();
        assert_eq!(e.case, DiskCase::Generic);
        let f: Vec<PadicPowerSeries> = c.f_padic(7, 20).iter().map(|a| constant(a, 12)).collect();
        let lhs = e.y_of_t.mul(&e.y_of_t).unwrap();
        let rhs = horner(&f, &e.x_of_t).unwrap();
        let d = lhs.sub(&rhs);
        assert!(d.coeffs().iter().all(|a| a.is_zero()));
        assert_eq!(e.x_of_t.coeff(1).to_bigint_mod(10).unwrap(), 1.into());
    }

    #[test]
    fn weierstrass_expansion_leading_terms() {
        let c = example1();
        let w = &c.weierstrass_points_qp(7, 20).unwrap()[0];
        let e = local_coordinate(&c, &w.point, 10, 20).unwrap();
        assert_eq!(e.case, DiskCase::FiniteWeierstrass);
        let df = crate::poly::derivative(&c.f_padic(7, 20));
        let x0 = w.point.x().unwrap();
        let expected = crate::poly::eval(&df, x0).inverse().unwrap();
        assert!((&e.x_of_t.coeff(2) - &expected).valuation() >= 15);
        assert!(e.x_of_t.coeff(1).is_zero());
    }

    #[test]
    fn infinity_orders() {
        let c = example2();
        let e = local_coordinate_at_infinity(&c, 7, 12, 20).unwrap();
        for i in 0..HOLOMORPHIC {
            assert_eq!(e.omega(i).order_mod_p(), Some(4 - 2 * i));
        }
        // The parameter of a point computed from t0 returns t0.
        let t0 = PadicNumber::from_i64(7, 14, 20);
        let q = e.point_at(&t0, 20).unwrap();
        assert!(c.is_on_curve_padic(&q));
        assert!((&e.parameter(&q).unwrap() - &t0).valuation() >= 15);
    }

    #[test]
    fn tiny_integral_of_dx_is_difference_of_x() {
        let c = example2();
        let pt = padic_point(&c, 1, 1, 7, 20);
        let e = local_coordinate(&c, &pt, 25, 20).unwrap();
        let t0 = PadicNumber::from_i64(7, 7 * 3, 20);
        let q = e.point_at(&t0, 20).unwrap();
        let prim = e.dx_series().unwrap().formal_integral().unwrap();
        let v = prim.evaluate_in_disk(&t0).unwrap();
        let dx = q.x().unwrap() - pt.x().unwrap();
        assert!((&v - &dx).valuation() >= 15);
    }

    #[test]
    fn tiny_integrals_antisymmetric_and_recentred() {
        let c = example2();
        let pt = padic_point(&c, 1, 1, 7, 20);
        let e = local_coordinate(&c, &pt, 25, 20).unwrap();
        let q = e.point_at(&PadicNumber::from_i64(7, 14, 20), 20).unwrap();
        let r = e.point_at(&PadicNumber::from_i64(7, 98 + 7, 20), 20).unwrap();
        for i in 0..HOLOMORPHIC {
            let w = DifferentialForm::basis(i, 7, 20);
            let a = tiny_integral(&c, &w, &pt, &q, 12).unwrap();
            let b = tiny_integral(&c, &w, &q, &pt, 12).unwrap();
            assert!((&a + &b).valuation() >= 12);
            let pr = tiny_integral(&c, &w, &pt, &r, 12).unwrap();
            let qr = tiny_integral(&c, &w, &q, &r, 12).unwrap();
            assert!((&(&a + &qr) - &pr).valuation() >= 11, "i = {i}");
        }
    }

    #[test]
    fn vanishing_orders_in_example2() {
        let c = example2();
        let one = |i| DifferentialForm::basis(i, 7, 10);
        for pt in c.fp_points(7).unwrap() {
            let m = disk_vanishing_order(&c, &one(0), &one(1), &pt).unwrap();
            assert!(m <= 2, "{pt}: {m}");
        }
    }
}
