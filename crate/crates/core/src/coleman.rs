//! Coleman integrals of holomorphic forms between points of C(Q_p).

use std::collections::HashMap;
use std::sync::Mutex;

use crate::curve::{CurvePoint, FpPoint, HyperellipticCurve};
use crate::error::{Error, Result};
use crate::frobenius::{FrobeniusData, DIM};
use crate::linalg::{identity, solve};
use crate::local::{expansion_at, lift_fp_point, terms_for_precision, tiny_integral_with, DifferentialForm, HOLOMORPHIC};
use crate::padic::PadicNumber;

#[derive(Clone, Debug)]
struct TeichmullerData {
    point: CurvePoint,
    primitives: Vec<PadicNumber>,
}

/// Curve, prime, Frobenius data and a cache of Teichmüller points per residue disk.
pub struct IntegrationContext {
    curve: HyperellipticCurve,
    prime: u64,
    frob: FrobeniusData,
    prec: i64,
    cache: Mutex<HashMap<FpPoint, TeichmullerData>>,
}

fn zeros(p: u64, n: usize) -> Vec<PadicNumber> {
    vec![PadicNumber::exact_zero(p); n]
}

impl IntegrationContext {
    /// Context for integrals to roughly `prec` digits.
    pub fn new(curve: &HyperellipticCurve, p: u64, prec: i64) -> Result<Self> {
        let frob = FrobeniusData::compute(curve, p, prec + 4)?;
        Ok(Self::with_frobenius(curve, frob, prec))
    }

    pub fn with_frobenius(curve: &HyperellipticCurve, frob: FrobeniusData, prec: i64) -> Self {
        IntegrationContext { curve: curve.clone(), prime: frob.prime, frob, prec, cache: Mutex::new(HashMap::new()) }
    }

    pub fn curve(&self) -> &HyperellipticCurve {
        &self.curve
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn frobenius(&self) -> &FrobeniusData {
        &self.frob
    }

    fn working(&self) -> i64 {
        self.frob.working_prec
    }

    fn teich_data(&self, disk: &FpPoint) -> Result<TeichmullerData> {
        if let Some(d) = self.cache.lock().unwrap().get(disk) {
            return Ok(d.clone());
        }
        let d = self.compute_teich(disk)?;
        self.cache.lock().unwrap().insert(disk.clone(), d.clone());
        Ok(d)
    }

    fn compute_teich(&self, disk: &FpPoint) -> Result<TeichmullerData> {
        let p = self.prime;
        let (xb, yb) = match disk {
            FpPoint::Affine { x, y } if *y != 0 => (*x, *y),
            _ => return Err(Error::NotGeneric(format!("{disk} is a Weierstrass or infinite disk"))),
        };
        let prec = self.working();
        let x = if xb == 0 { PadicNumber::exact_zero(p) } else { PadicNumber::from_i64(p, xb as i64, prec).teichmuller(prec)? };
        let f = self.curve.f_padic(p, prec + 2);
        let y = crate::poly::eval(&f, &x).sqrt(Some(yb))?;
        let point = CurvePoint::Affine { x: x.clone(), y: y.clone() };
        let primitives = self.frob.primitives.iter().map(|terms| evaluate_primitive(terms, &x, &y)).collect::<Result<_>>()?;
        Ok(TeichmullerData { point, primitives })
    }

    /// The Frobenius-fixed point of a generic residue disk.
    pub fn teichmuller_point(&self, disk: &FpPoint) -> Result<CurvePoint> {
        Ok(self.teich_data(disk)?.point)
    }

    /// Integrals of all six basis forms between the Teichmüller points of two generic disks.
    pub fn integrals_between_teichmullers(&self, from: &FpPoint, to: &FpPoint) -> Result<Vec<PadicNumber>> {
        let p = self.prime;
        if from == to {
            return Ok(zeros(p, DIM));
        }
        let a = self.teich_data(from)?;
        let b = self.teich_data(to)?;
        let rhs: Vec<PadicNumber> = b.primitives.iter().zip(&a.primitives).map(|(u, v)| u - v).collect();
        self.solve_frobenius(&rhs)
    }

    fn solve_frobenius(&self, rhs: &[PadicNumber]) -> Result<Vec<PadicNumber>> {
        let p = self.prime;
        let id = identity(p, DIM, self.working() + 4);
        let a: Vec<Vec<PadicNumber>> =
            (0..DIM).map(|i| (0..DIM).map(|j| &id[i][j] - &self.frob.matrix[i][j]).collect()).collect();
        solve(&a, rhs).map_err(|e| Error::Singular(format!("I - M: {e}")))
    }

    fn tiny_vector(&self, pt: &CurvePoint, qt: &CurvePoint) -> Result<Vec<PadicNumber>> {
        let p = self.prime;
        let center = match pt {
            CurvePoint::Affine { x, .. } if !x.is_zero() && x.valuation() < 0 => CurvePoint::Infinity,
            _ => pt.clone(),
        };
        let prec = self.prec + 2;
        let exp = expansion_at(&self.curve, p, &center, terms_for_precision(p, prec), prec + 2)?;
        (0..HOLOMORPHIC).map(|i| tiny_integral_with(&exp, &DifferentialForm::basis(i, p, prec + 2), pt, qt)).collect()
    }

    fn disk(&self, q: &CurvePoint) -> Result<FpPoint> {
        self.curve.reduce_point(q)
    }

    /// ∫_∞^Q ω_i for i = 0, 1, 2.
    pub fn integrals_from_infinity(&self, q: &CurvePoint) -> Result<Vec<PadicNumber>> {
        let p = self.prime;
        let dq = self.disk(q)?;
        match &dq {
            FpPoint::Infinity => self.tiny_vector(&CurvePoint::Infinity, q),
            FpPoint::Affine { y: 0, .. } => {
                let w = lift_fp_point(&self.curve, &dq, p, self.working() + 2)?;
                self.tiny_vector(&w, q)
            }
            FpPoint::Affine { .. } => {
                // ∫_∞^Q = ½·∫_{ιQ}^{Q}, and the odd primitives make the middle term (I − M)^(-1)·2g(T).
                let t = self.teich_data(&dq)?;
                let rhs: Vec<PadicNumber> = t.primitives.iter().map(|g| g.mul_int(2)).collect();
                let mid = self.solve_frobenius(&rhs)?;
                let t_to_q = self.tiny_vector(&t.point, q)?;
                let iq_to_it = self.tiny_vector(&q.involution(), &t.point.involution())?;
                Ok((0..HOLOMORPHIC).map(|i| (&(&iq_to_it[i] + &mid[i]) + &t_to_q[i]).div_int(2)).collect())
            }
        }
    }

    /// ∫_P^Q ω_i for i = 0, 1, 2.
    pub fn basis_integrals(&self, pt: &CurvePoint, qt: &CurvePoint) -> Result<Vec<PadicNumber>> {
        for r in [pt, qt] {
            if !self.curve.is_on_curve_padic(r) {
                return Err(Error::NotOnCurve(format!("{r:?}")));
            }
        }
        let dp = self.disk(pt)?;
        let dq = self.disk(qt)?;
        if dp == dq {
            return self.tiny_vector(pt, qt);
        }
        let generic = |d: &FpPoint| matches!(d, FpPoint::Affine { y, .. } if *y != 0);
        let out: Vec<PadicNumber> = if generic(&dp) && generic(&dq) {
            let tp = self.teich_data(&dp)?;
            let tq = self.teich_data(&dq)?;
            let a = self.tiny_vector(pt, &tp.point)?;
            let mid = self.integrals_between_teichmullers(&dp, &dq)?;
            let b = self.tiny_vector(&tq.point, qt)?;
            (0..HOLOMORPHIC).map(|i| &(&a[i] + &mid[i]) + &b[i]).collect()
        } else {
            let a = self.integrals_from_infinity(pt)?;
            let b = self.integrals_from_infinity(qt)?;
            b.iter().zip(&a).map(|(u, v)| u - v).collect()
        };
        let floor = out.iter().map(|v| v.absprec()).min().unwrap_or(0);
        if floor < 1 {
            return Err(Error::Precision(format!("integral known to {floor} digits")));
        }
        Ok(out)
    }

    pub fn coleman_integral(&self, form: &DifferentialForm, pt: &CurvePoint, qt: &CurvePoint) -> Result<PadicNumber> {
        Ok(form.pair(&self.basis_integrals(pt, qt)?))
    }
}

/// Σ poly(x)·y^e over the terms of a primitive.
fn evaluate_primitive(terms: &[crate::frobenius::PrimitiveTerm], x: &PadicNumber, y: &PadicNumber) -> Result<PadicNumber> {
    let p = x.prime();
    let yinv = y.inverse()?;
    let yinv2 = &yinv * &yinv;
    let mut acc = PadicNumber::exact_zero(p);
    let mut cache: HashMap<i64, PadicNumber> = HashMap::new();
    cache.insert(1, y.clone());
    cache.insert(-1, yinv.clone());
    let mut max_neg = -1;
    for t in terms {
        if !cache.contains_key(&t.y_exp) {
            debug_assert!(t.y_exp < 0 && t.y_exp % 2 != 0);
            let mut e = max_neg;
            let mut v = cache[&e].clone();
            while e > t.y_exp {
                v = &v * &yinv2;
                e -= 2;
                cache.insert(e, v.clone());
            }
            max_neg = e;
        }
        acc = &acc + &(&crate::poly::eval(&t.poly, x) * &cache[&t.y_exp]);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{example1, example2, rat, RationalPoint};

    fn pt(c: &HyperellipticCurve, x: i64, y: i64, prec: i64) -> CurvePoint {
        c.rational_to_padic(&c.from_original(&RationalPoint::affine(rat(x), rat(y))), 7, prec)
    }

    fn close(a: &PadicNumber, b: &PadicNumber, k: i64) -> bool {
        (a - b).valuation() >= k || (a - b).absprec() >= k && (a - b).is_zero()
    }

    #[test]
    fn teichmuller_point_is_fixed() {
        let c = example2();
        let ctx = IntegrationContext::new(&c, 7, 10).unwrap();
        let d = FpPoint::Affine { x: 1, y: 4 };
        let t = ctx.teichmuller_point(&d).unwrap();
        let x = t.x().unwrap();
        assert!(close(&x.pow(7), x, 10));
        assert!(c.is_on_curve_padic(&t));
    }

    #[test]
    fn three_disk_additivity_and_antisymmetry() {
        let c = example2();
        let ctx = IntegrationContext::new(&c, 7, 10).unwrap();
        let a = pt(&c, 0, 1, 14);
        let b = pt(&c, 1, 1, 14);
        let d = pt(&c, 1, -1, 14);
        let ab = ctx.basis_integrals(&a, &b).unwrap();
        let bd = ctx.basis_integrals(&b, &d).unwrap();
        let ad = ctx.basis_integrals(&a, &d).unwrap();
        let ba = ctx.basis_integrals(&b, &a).unwrap();
        let ia = ctx.integrals_from_infinity(&a).unwrap();
        let ib = ctx.integrals_from_infinity(&b).unwrap();
        for i in 0..3 {
            assert!(close(&(&ib[i] - &ia[i]), &ab[i], 6), "i = {i}: {} - {} vs {}", ib[i], ia[i], ab[i]);
            assert!(close(&(&ab[i] + &bd[i]), &ad[i], 6), "i = {i}: {} + {} vs {}", ab[i], bd[i], ad[i]);
            assert!(close(&(&ab[i] + &ba[i]), &PadicNumber::zero(7, 10), 6));
        }
    }

    #[test]
    fn weierstrass_points_integrate_to_zero() {
        let c = example1();
        let ctx = IntegrationContext::new(&c, 7, 8).unwrap();
        let ws = c.weierstrass_points_qp(7, 12).unwrap();
        for w in &ws {
            let v = ctx.integrals_from_infinity(&w.point).unwrap();
            assert!(v.iter().all(|x| x.valuation() >= 6), "{v:?}");
        }
    }

    #[test]
    fn example2_annihilator_ratios() {
        let c = example2();
        let ctx = IntegrationContext::new(&c, 7, 8).unwrap();
        let l = ctx.integrals_from_infinity(&pt(&c, 1, 1, 12)).unwrap();
        let a = PadicNumber::from_i64(7, 4 + 49 + 5 * 2401, 5) / PadicNumber::from_i64(7, 1 + 14 + 49 + 2 * 343 + 5 * 2401, 5);
        let b = PadicNumber::from_i64(7, 4 + 49 + 5 * 2401, 5) / PadicNumber::from_i64(7, 6 + 21 + 98 + 5 * 2401, 5);
        assert!(close(&(-&l[0] / l[1].clone()), &a, 5));
        assert!(close(&(-&l[0] / l[2].clone()), &b, 5));
    }

    #[test]
    fn involution_is_antisymmetric_from_infinity() {
        let c = example2();
        let ctx = IntegrationContext::new(&c, 7, 10).unwrap();
        let q = pt(&c, 1, 1, 14);
        let a = ctx.integrals_from_infinity(&q).unwrap();
        let b = ctx.integrals_from_infinity(&q.involution()).unwrap();
        for i in 0..3 {
            assert!(close(&(&a[i] + &b[i]), &PadicNumber::zero(7, 10), 6));
        }
    }
}

