//! The zero set Z: annihilator basis, disk triage, per-disk root search and classification.

use log::{debug, info, trace, warn};
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coleman::IntegrationContext;
use crate::curve::{format_rational, CurvePoint, FpPoint, HyperellipticCurve, PointSpec, RationalPoint};
use crate::error::{Error, Result};
use crate::frobenius::ZetaData;
use crate::jacobian::{is_nonanomalous, AnomalyFlags, JacobianFp};
use crate::local::{disk_vanishing_order, expansion_at, DifferentialForm, DiskCase, LocalExpansion, HOLOMORPHIC};
use crate::padic::{PadicNumber, EXACT};
use crate::recognize::{format_quadratic, recognize_point, AlgebraicPoint};
use crate::roots::{integrality_violation, roots_in_pzp, simplicity_check, truncation_parameters, RootReport};
use crate::series::PadicPowerSeries;

/// Smallest prime the pipeline accepts.
pub const MIN_PRIME: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnihilatorCase {
    Lambda0Zero,
    Generic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnihilatorBasis {
    /// λ_i = ∫_∞^{P0} ω_i.
    pub lambda: [PadicNumber; HOLOMORPHIC],
    pub k01: i64,
    pub k02: i64,
    pub k12: i64,
    pub alpha: DifferentialForm,
    pub beta: DifferentialForm,
    pub n_prime: i64,
    pub case: AnnihilatorCase,
    /// A basis of the same space whose reductions mod p are independent; used for triage and search.
    pub search: [DifferentialForm; 2],
    pub saturated: bool,
}

fn ord(x: &PadicNumber) -> i64 {
    if x.is_zero() {
        x.absprec()
    } else {
        x.valuation()
    }
}

/// The annihilator of [P0 − ∞] from the integrals λ_i, computed modulo p^n.
pub fn compute_annihilator(ctx: &IntegrationContext, p0: &CurvePoint, n: i64) -> Result<AnnihilatorBasis> {
    let lam = ctx.integrals_from_infinity(p0)?;
    let lambda: [PadicNumber; HOLOMORPHIC] = std::array::from_fn(|i| lam[i].truncate(n));
    annihilator_from_lambda(lambda, n)
}

pub fn annihilator_from_lambda(lambda: [PadicNumber; HOLOMORPHIC], n: i64) -> Result<AnnihilatorBasis> {
    let p = lambda[0].prime();
    if lambda.iter().all(|l| l.is_zero()) {
        return Err(Error::Annihilator(format!("all λ_i vanish modulo {p}^{n}; [P0 − ∞] looks torsion")));
    }
    let k = |i: usize, j: usize| ord(&lambda[i]).min(ord(&lambda[j]));
    let (k01, k02, k12) = (k(0, 1), k(0, 2), k(1, 2));
    let zero = PadicNumber::exact_zero(p);
    let scaled = |c: [PadicNumber; 3], s: i64| DifferentialForm { c: c.map(|x| x.mul_p_pow(-s)) };
    let lambda0_zero = lambda[0].is_zero() && lambda[0].absprec() >= n;
    let (alpha, beta, n_prime, case) = if lambda0_zero {
        warn!("λ_0 vanishes modulo {p}^{n}; exact vanishing cannot be decided at finite precision");
        let alpha = DifferentialForm::basis(0, p, n);
        let beta = scaled([zero.clone(), -&lambda[2], lambda[1].clone()], k12);
        (alpha, beta, n - k12, AnnihilatorCase::Lambda0Zero)
    } else {
        let alpha = scaled([-&lambda[1], lambda[0].clone(), zero.clone()], k01);
        let beta = scaled([-&lambda[2], zero, lambda[0].clone()], k02);
        (alpha, beta, n - k01.max(k02), AnnihilatorCase::Generic)
    };
    if !alpha.is_unit_normalized() || !beta.is_unit_normalized() {
        return Err(Error::Annihilator("annihilator forms are not unit-normalized at working precision".into()));
    }
    let independent = reductions_independent(&alpha, &beta)?;
    let search = if independent { [alpha.clone(), beta.clone()] } else { saturated_kernel(&lambda)? };
    if !independent {
        debug!("ᾱ, β̄ dependent mod {p}; searching with {} and {}", search[0], search[1]);
    }
    Ok(AnnihilatorBasis { lambda, k01, k02, k12, alpha, beta, n_prime, case, search, saturated: !independent })
}

fn reductions_independent(a: &DifferentialForm, b: &DifferentialForm) -> Result<bool> {
    let p = a.prime() as i64;
    let a = a.reduce_mod_p()?.map(|x| x as i64);
    let b = b.reduce_mod_p()?.map(|x| x as i64);
    Ok((0..HOLOMORPHIC).any(|j| cofactor(&a, &b, j, p) != 0))
}

/// det of the rows a, b, e_j modulo p.
fn cofactor(a: &[i64; 3], b: &[i64; 3], j: usize, p: i64) -> i64 {
    let (u, v) = ((j + 1) % 3, (j + 2) % 3);
    (a[u] * b[v] - a[v] * b[u]).rem_euclid(p)
}

/// e_i − (λ_i/λ_j)·e_j for i ≠ j, where λ_j has least valuation: a basis of the kernel of λ
/// over Z_p whose reductions are independent.
fn saturated_kernel(lambda: &[PadicNumber; HOLOMORPHIC]) -> Result<[DifferentialForm; 2]> {
    let p = lambda[0].prime();
    let j = (0..HOLOMORPHIC).min_by_key(|&i| ord(&lambda[i])).unwrap();
    let prec = lambda[j].absprec();
    let forms: Vec<DifferentialForm> = (0..HOLOMORPHIC)
        .filter(|&i| i != j)
        .map(|i| {
            let r = lambda[i].try_div(&lambda[j])?;
            let mut c = std::array::from_fn(|_| PadicNumber::exact_zero(p));
            c[i] = PadicNumber::one(p, prec);
            c[j] = -&r;
            Ok(DifferentialForm { c })
        })
        .collect::<Result<_>>()?;
    Ok([forms[0].clone(), forms[1].clone()])
}

impl AnnihilatorBasis {
    /// The basis form ω_j of least index outside span(ᾱ, β̄).
    pub fn complement_index(&self) -> Result<usize> {
        let p = self.alpha.prime() as i64;
        let a = self.search[0].reduce_mod_p()?.map(|x| x as i64);
        let b = self.search[1].reduce_mod_p()?.map(|x| x as i64);
        if let Some(j) = (0..HOLOMORPHIC).find(|&j| cofactor(&a, &b, j, p) != 0) {
            return Ok(j);
        }
        Err(Error::Annihilator("ᾱ and β̄ are dependent modulo p".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskStatus {
    RuledOut,
    Searched,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiskAnalysis {
    pub disk: FpPoint,
    pub case: DiskCase,
    /// Minimal order of vanishing of ᾱ, β̄ at the disk.
    pub m: usize,
    /// Known rational points in the disk, input coordinates.
    pub known_points_in_disk: Vec<PointSpec>,
    pub status: DiskStatus,
    pub center: Option<CurvePoint>,
    pub roots_f: Option<RootReport>,
    pub roots_g: Option<RootReport>,
    /// Parameters of the common zeros of f and g.
    pub common_roots: Vec<PadicNumber>,
    /// Discriminant certificates of f(pt) and g(pt).
    pub discriminant_nonzero: Option<[bool; 2]>,
    /// v(f_i·p^i) ≥ i − v_p(i) for the coefficients of f and g used.
    pub integrality_bound: Option<[bool; 2]>,
    /// Number of points of Z in this disk.
    pub z_count: usize,
    pub error: Option<String>,
    pub error_class: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Known,
    NewRational,
    Weierstrass,
    Torsion,
    OtherAlgebraic,
}

/// Exact description of a recognized point in input coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactPoint {
    pub x: String,
    pub y: String,
    pub field_discriminant: String,
    pub x_minpoly: String,
    pub y_minpoly: String,
}

impl ExactPoint {
    fn from_algebraic(a: &AlgebraicPoint) -> Self {
        ExactPoint {
            x: format_quadratic(&a.x, &a.d),
            y: format_quadratic(&a.y, &a.d),
            field_discriminant: a.d.to_string(),
            x_minpoly: a.x_minpoly_string(),
            y_minpoly: a.y_minpoly_string(),
        }
    }

    fn from_rational(pt: &RationalPoint) -> Self {
        match pt {
            RationalPoint::Infinity => ExactPoint {
                x: "infinity".into(),
                y: "infinity".into(),
                field_discriminant: "1".into(),
                x_minpoly: String::new(),
                y_minpoly: String::new(),
            },
            RationalPoint::Affine { x, y } => ExactPoint {
                x: format_rational(x),
                y: format_rational(y),
                field_discriminant: "1".into(),
                x_minpoly: linear_minpoly(x, "x"),
                y_minpoly: linear_minpoly(y, "y"),
            },
        }
    }
}

fn linear_minpoly(r: &num_rational::BigRational, var: &str) -> String {
    let c = vec![-r.numer().clone(), r.denom().clone()];
    crate::recognize::format_minpoly(&c, var)
}

/// A point of Z.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroPoint {
    pub kind: PointKind,
    pub disk: FpPoint,
    /// Working-model coordinates.
    pub model_point: CurvePoint,
    /// Input-model coordinates.
    pub point: CurvePoint,
    pub exact: Option<ExactPoint>,
    pub recognized: bool,
    pub reduction_order: Option<u64>,
    pub gamma_index: Option<usize>,
    pub gamma_integral: Option<PadicNumber>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownPointCheck {
    pub point: PointSpec,
    pub alpha_integral: PadicNumber,
    pub beta_integral: PadicNumber,
    pub vanishes: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunParameters {
    pub input_coefficients: Vec<String>,
    pub model_coefficients: Vec<String>,
    pub scaling: [String; 2],
    pub p: u64,
    pub n: i64,
    pub m: usize,
    pub n_prime: i64,
    pub base_point: PointSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    RecognitionIncomplete,
    SimplicityFailure,
    DiskFailure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSetReport {
    pub parameters: RunParameters,
    pub zeta: ZetaData,
    pub coleman_bound: u64,
    pub base_point_order: u64,
    pub anomaly: AnomalyFlags,
    pub annihilator: AnnihilatorBasis,
    pub known_checks: Vec<KnownPointCheck>,
    /// Points of Z modulo the hyperelliptic involution, by kind.
    pub known: Vec<ZeroPoint>,
    pub new_rational: Vec<ZeroPoint>,
    pub torsion: Vec<ZeroPoint>,
    pub other_algebraic: Vec<ZeroPoint>,
    pub weierstrass_w: Vec<ZeroPoint>,
    pub per_disk: Vec<DiskAnalysis>,
    pub warnings: Vec<String>,
    pub status: RunStatus,
}

impl ZeroSetReport {
    pub fn all_points(&self) -> impl Iterator<Item = &ZeroPoint> {
        self.known.iter().chain(&self.new_rational).chain(&self.torsion).chain(&self.other_algebraic).chain(&self.weierstrass_w)
    }

    /// Points of Z outside the known rational points and W, modulo involution.
    pub fn extra_points(&self) -> impl Iterator<Item = &ZeroPoint> {
        self.new_rational.iter().chain(&self.torsion).chain(&self.other_algebraic)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "p = {}, N = {}, n' = {}, M = {}\n#C(F_p) = {}, #J(F_p) = {}, Coleman bound {}\n",
            self.parameters.p,
            self.parameters.n,
            self.parameters.n_prime,
            self.parameters.m,
            self.zeta.points_fp,
            self.zeta.jacobian_order,
            self.coleman_bound
        );
        let mut section = |title: &str, pts: &[ZeroPoint]| {
            s.push_str(&format!("{title}: {}\n", pts.len()));
            for z in pts {
                let desc = match &z.exact {
                    Some(e) => format!("({}, {})  [{} ; {}]", e.x, e.y, e.x_minpoly, e.y_minpoly),
                    None => match &z.point {
                        CurvePoint::Affine { x, y } => format!("x = {x}, y = {y}"),
                        CurvePoint::Infinity => "infinity".into(),
                    },
                };
                let order = z.reduction_order.map(|o| format!(" order mod p {o}")).unwrap_or_default();
                s.push_str(&format!("  disk {}: {desc}{order}\n", z.disk));
            }
        };
        section("known", &self.known);
        section("new rational", &self.new_rational);
        section("torsion", &self.torsion);
        section("other algebraic", &self.other_algebraic);
        section("weierstrass (non-rational)", &self.weierstrass_w);
        s.push_str(&format!("status: {:?}\n", self.status));
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub p: Option<u64>,
    pub n: Option<i64>,
    /// Overrides the t-adic truncation; must be at least the value the truncation bound requires.
    pub m: Option<usize>,
}

/// A known rational point with its model lift and residue disk.
pub struct Known {
    pub input: RationalPoint,
    pub model: CurvePoint,
    pub disk: FpPoint,
}

fn agree(a: &CurvePoint, b: &CurvePoint) -> bool {
    match (a, b) {
        (CurvePoint::Infinity, CurvePoint::Infinity) => true,
        (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => x1.agrees_with(x2) && y1.agrees_with(y2),
        _ => false,
    }
}

fn eval_series(s: &PadicPowerSeries, t: &PadicNumber) -> Result<PadicNumber> {
    if t.is_zero() {
        let k = t.absprec().min(EXACT);
        if k >= EXACT {
            return Ok(s.coeff(0));
        }
        return Ok(&s.coeff(0) + &PadicNumber::zero(t.prime(), s.tail_valuation(k).min(k + s.min_coeff_valuation().unwrap_or(0))));
    }
    s.evaluate_in_disk(t)
}

fn matches_root(a: &PadicNumber, b: &PadicNumber) -> bool {
    let d = a - b;
    d.is_zero()
}

/// Common zeros of f and g in pZ_p, using whichever root set is certified.
fn common_roots(f: &PadicPowerSeries, g: &PadicPowerSeries, rf: &RootReport, rg: &RootReport) -> Result<Vec<PadicNumber>> {
    if rf.all_simple_certified && rg.all_simple_certified {
        let mut out = Vec::new();
        for r in &rf.roots {
            if let Some(s) = rg.roots.iter().find(|s| matches_root(&r.value, &s.value)) {
                out.push(if r.value.absprec() >= s.value.absprec() { r.value.clone() } else { s.value.clone() });
            }
        }
        return Ok(out);
    }
    let (certified, other) = if rf.all_simple_certified {
        (rf, g)
    } else if rg.all_simple_certified {
        (rg, f)
    } else {
        return Err(Error::Simplicity("neither f nor g has certified simple roots".into()));
    };
    let mut out = Vec::new();
    for r in &certified.roots {
        if eval_series(other, &r.value)?.is_zero() {
            out.push(r.value.clone());
        }
    }
    Ok(out)
}

/// Parameters shared by the disk searches of one run.
pub struct SearchSetup<'a> {
    pub ctx: &'a IntegrationContext,
    pub basis: &'a AnnihilatorBasis,
    pub n: i64,
    pub m: usize,
}

/// The center of a disk and the constants ∫_∞^center α, β.
fn disk_center(setup: &SearchSetup, disk: &FpPoint, known: &[&Known], prec: i64) -> Result<(CurvePoint, PadicNumber, PadicNumber)> {
    let ctx = setup.ctx;
    let p = ctx.prime();
    let zero = PadicNumber::exact_zero(p);
    if *disk == FpPoint::Infinity {
        return Ok((CurvePoint::Infinity, zero.clone(), zero));
    }
    if let Some(k) = known.first() {
        return Ok((k.model.clone(), zero.clone(), zero));
    }
    match disk {
        FpPoint::Affine { y: 0, .. } => {
            let c = crate::local::lift_fp_point(ctx.curve(), disk, p, prec)?;
            let c = match c {
                CurvePoint::Affine { x, .. } => CurvePoint::Affine { x, y: zero.clone() },
                other => other,
            };
            Ok((c, zero.clone(), zero))
        }
        _ => {
            let c = ctx.teichmuller_point(disk)?;
            let ints = ctx.integrals_from_infinity(&c)?;
            Ok((c, setup.basis.search[0].pair(&ints), setup.basis.search[1].pair(&ints)))
        }
    }
}

/// Expansions of the antiderivatives f, g of α, β on the disk, with their constants.
pub fn disk_series(setup: &SearchSetup, disk: &FpPoint, known: &[&Known]) -> Result<(LocalExpansion, PadicPowerSeries, PadicPowerSeries)> {
    let ctx = setup.ctx;
    let p = ctx.prime();
    let prec = setup.n + 4;
    let (center, ca, cb) = disk_center(setup, disk, known, prec)?;
    let exp = expansion_at(ctx.curve(), p, &center, setup.m, prec)?;
    let f = exp.expand(&setup.basis.search[0]).formal_integral()?.with_constant(ca);
    let g = exp.expand(&setup.basis.search[1]).formal_integral()?.with_constant(cb);
    Ok((exp, f, g))
}

fn classify_error(e: &Error) -> &'static str {
    match e {
        Error::Simplicity(_) => "simplicity",
        Error::Precision(_) | Error::Padic(_) => "precision",
        Error::Truncation(_) => "truncation",
        Error::Series(_) => "series",
        _ => "other",
    }
}

/// Antiderivative rescaled to f(pt)/p^k and truncated, for the discriminant certificate.
fn scaled_truncation(f: &PadicPowerSeries, m: usize, k: i64) -> Vec<PadicNumber> {
    (0..m).map(|i| f.coeff(i).mul_p_pow(i as i64 - k)).collect()
}

/// Root search in one disk; returns the analysis and the zeros found as model points.
pub fn search_disk(setup: &SearchSetup, mut a: DiskAnalysis, known: &[&Known]) -> (DiskAnalysis, Vec<(PadicNumber, CurvePoint)>) {
    match search_disk_inner(setup, &mut a, known) {
        Ok(pts) => {
            a.z_count = pts.len();
            (a, pts)
        }
        Err(e) => {
            warn!("disk {}: {e}", a.disk);
            a.status = DiskStatus::Failed;
            a.error_class = Some(classify_error(&e).into());
            a.error = Some(e.to_string());
            (a, Vec::new())
        }
    }
}

fn search_disk_inner(setup: &SearchSetup, a: &mut DiskAnalysis, known: &[&Known]) -> Result<Vec<(PadicNumber, CurvePoint)>> {
    let p = setup.ctx.prime();
    let (exp, f, g) = disk_series(setup, &a.disk, known)?;
    a.center = Some(exp.center.clone());
    let n_prime = setup.basis.n_prime;
    a.integrality_bound = Some([&f, &g].map(|s| integrality_violation(s, s.t_prec()).is_none()));
    let mut reports = Vec::new();
    for s in [&f, &g] {
        let m_f = s.derivative().order_mod_p().unwrap_or(usize::MAX);
        let mut pol = truncation_parameters(n_prime, p, m_f)?;
        pol.m = pol.m.max(setup.m.min(s.t_prec()));
        let rep = roots_in_pzp(s, &pol)?;
        trace!("disk {}: m_f = {m_f}, k = {}, {} roots, precision {}", a.disk, rep.k, rep.roots.len(), rep.precision);
        reports.push(rep);
    }
    let (rg, rf) = (reports.pop().unwrap(), reports.pop().unwrap());
    let disc = [simplicity_check(&scaled_truncation(&f, rf.newton_count + 1, rf.k)), simplicity_check(&scaled_truncation(&g, rg.newton_count + 1, rg.k))];
    a.discriminant_nonzero = Some(disc);
    let common = common_roots(&f, &g, &rf, &rg);
    a.roots_f = Some(rf);
    a.roots_g = Some(rg);
    let common = common?;
    let prec = setup.n + 4;
    let mut pts = Vec::new();
    for t in &common {
        let pt = exp.point_at(t, prec.min(t.absprec().max(1) + 2))?;
        pts.push((t.clone(), pt));
    }
    a.common_roots = common;
    debug!("disk {}: {} common zeros", a.disk, pts.len());
    Ok(pts)
}

fn to_input_coords(curve: &HyperellipticCurve, pt: &CurvePoint) -> CurvePoint {
    match pt {
        CurvePoint::Infinity => CurvePoint::Infinity,
        CurvePoint::Affine { x, y } => {
            let (u, v) = curve.scaling();
            CurvePoint::Affine { x: x.mul_rational(u), y: y.mul_rational(v) }
        }
    }
}

fn reduction_order(curve: &HyperellipticCurve, p: u64, pt: &FpPoint, group_order: u64) -> Result<u64> {
    let jac = JacobianFp::new(curve.f_mod_p(p)?, p)?;
    jac.element_order(&jac.point_class(pt), group_order)
}

/// The full pipeline for a curve, a base point of infinite order and known rational points (input coordinates).
pub fn run(curve: &HyperellipticCurve, base: &RationalPoint, known_input: &[RationalPoint], opts: &RunOptions) -> Result<ZeroSetReport> {
    let p = opts.p.unwrap_or_else(|| curve.choose_prime(MIN_PRIME));
    if p < MIN_PRIME {
        return Err(Error::BadInput(format!("p = {p} is below {MIN_PRIME}")));
    }
    curve.check_good_reduction(p)?;
    let n = opts.n.unwrap_or(2 * p as i64 + 4);
    if n < 4 {
        return Err(Error::BadInput(format!("N = {n} is too small")));
    }
    let mut warnings = Vec::new();
    let base_model = curve.from_original(base);
    if !curve.is_on_curve(&base_model) {
        return Err(Error::NotOnCurve(format!("base point {base}")));
    }
    let mut known_pts: Vec<RationalPoint> = vec![RationalPoint::Infinity, base.clone(), base.involution()];
    for k in known_input {
        if !curve.is_on_curve(&curve.from_original(k)) {
            return Err(Error::NotOnCurve(format!("known point {k}")));
        }
        known_pts.push(k.clone());
        known_pts.push(k.involution());
    }
    known_pts.sort();
    known_pts.dedup();
    let known: Vec<Known> = known_pts
        .iter()
        .map(|k| {
            let m = curve.from_original(k);
            let model = curve.rational_to_padic(&m, p, n + 8);
            let disk = curve.reduce_point(&model)?;
            Ok(Known { input: k.clone(), model, disk })
        })
        .collect::<Result<_>>()?;

    info!("p = {p}, N = {n}");
    let ctx = IntegrationContext::new(curve, p, n + 2)?;
    let zeta = ctx.frobenius().zeta(curve)?;
    let base_padic = curve.rational_to_padic(&base_model, p, n + 8);
    let base_disk = curve.reduce_point(&base_padic)?;
    let base_point_order = reduction_order(curve, p, &base_disk, zeta.jacobian_order)?;
    let anomaly = is_nonanomalous(p, base_point_order, zeta.jacobian_order);
    if !anomaly.order_prime_to_p || !anomaly.p_squared_free {
        warnings.push(format!("anomalous reduction: {anomaly:?}"));
    }
    let basis = compute_annihilator(&ctx, &base_padic, n)?;
    if basis.case == AnnihilatorCase::Lambda0Zero {
        warnings.push("λ_0 vanishes at working precision; treated as zero".into());
    }
    info!("n' = {}, α = {}, β = {}", basis.n_prime, basis.alpha, basis.beta);
    let m_policy = truncation_parameters(basis.n_prime.max(2), p, 0)?.m;
    let m = opts.m.unwrap_or(m_policy).max(m_policy);
    let gamma_index = basis.complement_index()?;

    // Known points must lie in Z.
    let known_checks: Vec<KnownPointCheck> = known
        .par_iter()
        .map(|k| {
            let ints = ctx.integrals_from_infinity(&k.model)?;
            let a = basis.alpha.pair(&ints);
            let b = basis.beta.pair(&ints);
            let vanishes = a.is_zero() && b.is_zero();
            Ok(KnownPointCheck { point: k.input.to_strings(), alpha_integral: a, beta_integral: b, vanishes })
        })
        .collect::<Result<_>>()?;
    for c in known_checks.iter().filter(|c| !c.vanishes) {
        warnings.push(format!("known point {:?} does not satisfy both integral conditions at working precision", c.point));
    }

    let disks: Vec<FpPoint> = curve.fp_points(p)?.into_iter().filter(|d| *d == d.canonical(p)).collect();
    let setup = SearchSetup { ctx: &ctx, basis: &basis, n, m };
    let results: Vec<(DiskAnalysis, Vec<(PadicNumber, CurvePoint)>)> = disks
        .par_iter()
        .map(|disk| analyze_disk(&setup, disk, &known))
        .collect::<Result<_>>()?;

    let mut report = ZeroSetReport {
        parameters: RunParameters {
            input_coefficients: curve.original().0.iter().map(format_rational).collect(),
            model_coefficients: curve.f().0.iter().map(format_rational).collect(),
            scaling: [format_rational(curve.scaling().0), format_rational(curve.scaling().1)],
            p,
            n,
            m,
            n_prime: basis.n_prime,
            base_point: base.to_strings(),
        },
        coleman_bound: zeta.points_fp + 4,
        zeta,
        base_point_order,
        anomaly,
        annihilator: basis.clone(),
        known_checks,
        known: Vec::new(),
        new_rational: Vec::new(),
        torsion: Vec::new(),
        other_algebraic: Vec::new(),
        weierstrass_w: Vec::new(),
        per_disk: Vec::new(),
        warnings,
        status: RunStatus::Complete,
    };
    let ws = curve.weierstrass_points_qp(p, n + 4)?;
    let mut listed: Vec<CurvePoint> = Vec::new();
    for (analysis, pts) in results {
        let disk_known: Vec<&Known> = known.iter().filter(|k| k.disk == analysis.disk).collect();
        if analysis.status == DiskStatus::RuledOut {
            for k in &disk_known {
                push_unique(&mut report.known, &mut listed, known_zero_point(curve, k));
            }
        }
        for (_, pt) in pts {
            let z = classify(&ctx, &report, &analysis.disk, &pt, &disk_known, &ws, gamma_index)?;
            let bucket = match z.kind {
                PointKind::Known => &mut report.known,
                PointKind::NewRational => &mut report.new_rational,
                PointKind::Weierstrass => &mut report.weierstrass_w,
                PointKind::Torsion => &mut report.torsion,
                PointKind::OtherAlgebraic => &mut report.other_algebraic,
            };
            push_unique(bucket, &mut listed, z);
        }
        report.per_disk.push(analysis);
    }
    report.status = if report.per_disk.iter().any(|d| d.error_class.as_deref() == Some("simplicity")) {
        RunStatus::SimplicityFailure
    } else if report.per_disk.iter().any(|d| d.status == DiskStatus::Failed) {
        RunStatus::DiskFailure
    } else if report.extra_points().any(|z| !z.recognized) {
        RunStatus::RecognitionIncomplete
    } else {
        RunStatus::Complete
    };
    let rational = report.known.len() + report.new_rational.len();
    if rational as u64 > report.coleman_bound {
        report.warnings.push(format!("{rational} rational points exceed the Coleman bound {}", report.coleman_bound));
    }
    Ok(report)
}

fn push_unique(bucket: &mut Vec<ZeroPoint>, listed: &mut Vec<CurvePoint>, z: ZeroPoint) {
    let inv = z.model_point.involution();
    if listed.iter().any(|q| agree(q, &z.model_point) || agree(q, &inv)) {
        return;
    }
    listed.push(z.model_point.clone());
    bucket.push(z);
}

fn known_zero_point(curve: &HyperellipticCurve, k: &Known) -> ZeroPoint {
    ZeroPoint {
        kind: PointKind::Known,
        disk: k.disk,
        model_point: k.model.clone(),
        point: to_input_coords(curve, &k.model),
        exact: Some(ExactPoint::from_rational(&k.input)),
        recognized: true,
        reduction_order: None,
        gamma_index: None,
        gamma_integral: None,
    }
}

/// Triage and, when needed, search of one disk.
pub fn analyze_disk(setup: &SearchSetup, disk: &FpPoint, known: &[Known]) -> Result<(DiskAnalysis, Vec<(PadicNumber, CurvePoint)>)> {
    let ctx = setup.ctx;
    let p = ctx.prime();
    let disk_known: Vec<&Known> = known.iter().filter(|k| k.disk == *disk).collect();
    let m = disk_vanishing_order(ctx.curve(), &setup.basis.search[0], &setup.basis.search[1], disk)?;
    let case = match disk {
        FpPoint::Infinity => DiskCase::Infinity,
        FpPoint::Affine { y: 0, .. } => DiskCase::FiniteWeierstrass,
        _ => DiskCase::Generic,
    };
    let mut a = DiskAnalysis {
        disk: *disk,
        case,
        m,
        known_points_in_disk: disk_known.iter().map(|k| k.input.to_strings()).collect(),
        status: DiskStatus::Searched,
        center: None,
        roots_f: None,
        roots_g: None,
        common_roots: Vec::new(),
        discriminant_nonzero: None,
        integrality_bound: None,
        z_count: 0,
        error: None,
        error_class: None,
    };
    trace!("disk {disk}: m = {m}, {} known", disk_known.len());
    if disk_known.len() == m + 1 && (m as u64) + 2 < p {
        a.status = DiskStatus::RuledOut;
        a.z_count = disk_known.len();
        return Ok((a, Vec::new()));
    }
    Ok(search_disk(setup, a, &disk_known))
}

/// Sorts one zero of the disk into the report categories.
fn classify(
    ctx: &IntegrationContext,
    report: &ZeroSetReport,
    disk: &FpPoint,
    pt: &CurvePoint,
    disk_known: &[&Known],
    ws: &[crate::curve::WeierstrassPoint],
    gamma_index: usize,
) -> Result<ZeroPoint> {
    let curve = ctx.curve();
    let p = ctx.prime();
    let mut z = ZeroPoint {
        kind: PointKind::OtherAlgebraic,
        disk: *disk,
        model_point: pt.clone(),
        point: to_input_coords(curve, pt),
        exact: None,
        recognized: false,
        reduction_order: None,
        gamma_index: None,
        gamma_integral: None,
    };
    if let Some(k) = disk_known.iter().find(|k| agree(&k.model, pt)) {
        return Ok(known_zero_point(curve, k));
    }
    if let CurvePoint::Affine { x, y } = pt {
        if y.is_zero() {
            z.kind = PointKind::Weierstrass;
            if let Some(w) = ws.iter().find(|w| w.point.x().is_some_and(|wx| wx.agrees_with(x))) {
                if let Some(rx) = &w.rational_x {
                    let input = curve.to_original(&RationalPoint::affine(rx.clone(), num_rational::BigRational::zero()));
                    z.kind = PointKind::NewRational;
                    z.exact = Some(ExactPoint::from_rational(&input));
                }
            }
            z.recognized = z.kind == PointKind::NewRational;
            return Ok(z);
        }
    }
    let CurvePoint::Affine { x: xi, y: yi } = &z.point else {
        return Ok(known_zero_point(curve, disk_known.first().ok_or_else(|| Error::BadInput("point at infinity missing from the known list".into()))?));
    };
    let recognized = recognize_point(curve.original(), xi, yi);
    if let Some(a) = &recognized {
        if a.is_rational() {
            z.kind = PointKind::NewRational;
            z.recognized = true;
            z.exact = Some(ExactPoint::from_algebraic(a));
            return Ok(z);
        }
    }
    let ints = ctx.integrals_from_infinity(pt)?;
    let gamma = ints[gamma_index].clone();
    z.gamma_index = Some(gamma_index);
    z.kind = if gamma.is_zero() { PointKind::Torsion } else { PointKind::OtherAlgebraic };
    z.gamma_integral = Some(gamma);
    z.reduction_order = Some(reduction_order(curve, p, disk, report.zeta.jacobian_order)?);
    if let Some(a) = &recognized {
        z.recognized = true;
        z.exact = Some(ExactPoint::from_algebraic(a));
    }
    Ok(z)
}

/// A base point of infinite order among `candidates` (input coordinates): the first non-Weierstrass
/// point with some ∫_∞^P ω_i nonzero at precision.
pub fn choose_base_point(curve: &HyperellipticCurve, p: u64, candidates: &[RationalPoint]) -> Result<RationalPoint> {
    let ctx = IntegrationContext::new(curve, p, 8)?;
    for c in candidates {
        let m = curve.from_original(c);
        let RationalPoint::Affine { y, .. } = &m else { continue };
        if y.is_zero() {
            continue;
        }
        let pt = curve.rational_to_padic(&m, p, 14);
        let ints = ctx.integrals_from_infinity(&pt)?;
        if ints.iter().any(|v| !v.is_zero()) {
            return Ok(c.clone());
        }
    }
    Err(Error::BadInput("no candidate base point of infinite order".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{example1, example2, example3, rat};

    fn pt(x: i64, y: i64) -> RationalPoint {
        RationalPoint::affine(rat(x), rat(y))
    }

    fn run_example(curve: &HyperellipticCurve, base: RationalPoint, known: &[RationalPoint], p: u64) -> ZeroSetReport {
        run(curve, &base, known, &RunOptions { p: Some(p), ..Default::default() }).unwrap()
    }

    fn example2_report(p: u64) -> ZeroSetReport {
        run_example(&example2(), pt(1, 1), &[pt(0, 1), pt(0, -1), pt(1, -1)], p)
    }

    #[test]
    fn example2_p7_extra_quadratic_points() {
        let r = example2_report(7);
        eprintln!("{}", r.summary());
        assert_eq!(r.status, RunStatus::Complete);
        assert_eq!(r.known.len(), 3);
        assert!(r.known_checks.iter().all(|c| c.vanishes));
        assert!(r.new_rational.is_empty() && r.weierstrass_w.is_empty());
        let extra: Vec<_> = r.extra_points().collect();
        assert_eq!(extra.len(), 2);
        for z in extra {
            let e = z.exact.as_ref().unwrap();
            assert_eq!(e.x_minpoly, "x^2 - x + 1");
            assert_eq!(e.y_minpoly, "y^2 + 3");
        }
        for d in &r.per_disk {
            let bound = if d.case == DiskCase::Generic { 2 } else { 3 };
            assert!(d.z_count <= bound);
            assert!(d.m <= 2);
        }
        let ruled: Vec<_> = r.per_disk.iter().filter(|d| d.status == DiskStatus::RuledOut).collect();
        assert_eq!(ruled.len(), 3);
    }

    #[test]
    fn example2_p7_annihilator_digits() {
        let curve = example2();
        let ctx = IntegrationContext::new(&curve, 7, 20).unwrap();
        let base = curve.rational_to_padic(&curve.from_original(&pt(1, 1)), 7, 26);
        let b = compute_annihilator(&ctx, &base, 18).unwrap();
        assert_eq!(b.case, AnnihilatorCase::Generic);
        assert!(b.n_prime <= 17);
        let num = |digits: &[i64]| PadicNumber::from_i64(7, digits[0] + 7 * digits[1] + 49 * digits[2], 3);
        // Up to a unit, α ∝ (a0, a1, 0) and β ∝ (b0, 0, b2): compare ratios modulo 7³.
        let a = [num(&[1, 2, 1]), num(&[4, 0, 1])];
        let bb = [num(&[6, 3, 2]), num(&[4, 0, 1])];
        let ra = (&b.alpha.c[0] * &a[1]) - (&b.alpha.c[1] * &a[0]);
        let rb = (&b.beta.c[0] * &bb[1]) - (&b.beta.c[2] * &bb[0]);
        assert!(ra.truncate(3).is_zero() && rb.truncate(3).is_zero(), "{} {}", b.alpha, b.beta);
        assert!(b.alpha.c[2].is_zero() && b.beta.c[1].is_zero());
        let ints = ctx.integrals_from_infinity(&base).unwrap();
        assert!(b.alpha.pair(&ints).truncate(b.n_prime).is_zero());
        assert!(b.beta.pair(&ints).truncate(b.n_prime).is_zero());
    }

    #[test]
    fn example2_disk_2_4_roots_differ() {
        let curve = example2();
        let p = 7;
        let n = 18;
        let ctx = IntegrationContext::new(&curve, p, n + 2).unwrap();
        let base = curve.rational_to_padic(&curve.from_original(&pt(1, 1)), p, n + 8);
        let basis = compute_annihilator(&ctx, &base, n).unwrap();
        let m = truncation_parameters(basis.n_prime, p, 0).unwrap().m;
        let setup = SearchSetup { ctx: &ctx, basis: &basis, n, m };
        let disk = FpPoint::Affine { x: 2, y: 4 };
        let a = analyze_disk(&setup, &disk, &[]).unwrap().0;
        assert_eq!(a.status, DiskStatus::Searched);
        assert!(a.common_roots.is_empty());
        let rf = a.roots_f.unwrap();
        let rg = a.roots_g.unwrap();
        assert_eq!((rf.roots.len(), rg.roots.len()), (1, 1));
        let mut got = [rf.roots[0].value.to_bigint_mod(3).unwrap(), rg.roots[0].value.to_bigint_mod(3).unwrap()];
        got.sort();
        let mut want = [num_bigint::BigInt::from(6 * 7 + 5 * 49), num_bigint::BigInt::from(6 * 7 + 2 * 49)];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn example2_p11_no_extra_points() {
        let r = example2_report(11);
        eprintln!("{}", r.summary());
        assert_eq!(r.status, RunStatus::Complete);
        assert_eq!(r.known.len(), 3);
        assert_eq!(r.extra_points().count(), 0);
        // Weierstrass points over Q_11 are 2-torsion and always lie in Z; F mod 11 has one simple root.
        let roots = example2().f_mod_p(11).unwrap().roots(11);
        assert_eq!(roots.len(), 1);
        assert_eq!(r.weierstrass_w.len(), 1);
    }

    #[test]
    fn example1_torsion_points() {
        let r = run_example(&example1(), pt(-1, -1), &[pt(-1, 1), pt(1, -5), pt(1, 5)], 7);
        eprintln!("{}", r.summary());
        assert_eq!(r.status, RunStatus::Complete);
        assert_eq!(r.weierstrass_w.len(), 3);
        assert_eq!(r.torsion.len(), 1);
        assert!(r.new_rational.is_empty() && r.other_algebraic.is_empty());
        let z = &r.torsion[0];
        let e = z.exact.as_ref().unwrap();
        assert_eq!(e.x_minpoly, "x");
        assert_eq!(e.y_minpoly, "y^2 - 8");
        assert_eq!(z.reduction_order, Some(12));
    }

    #[test]
    fn example3_other_algebraic() {
        let r = run_example(&example3(), pt(1, -2), &[pt(0, 0), pt(1, 2)], 11);
        eprintln!("{}", r.summary());
        assert_eq!(r.status, RunStatus::Complete);
        assert_eq!(r.weierstrass_w.len(), 2);
        assert_eq!(r.other_algebraic.len(), 1);
        assert!(r.new_rational.is_empty() && r.torsion.is_empty());
        let z = &r.other_algebraic[0];
        let e = z.exact.as_ref().unwrap();
        assert_eq!(e.x_minpoly, "x + 1");
        assert_eq!(e.y_minpoly, "y^2 + 140");
        assert!(!z.gamma_integral.as_ref().unwrap().is_zero());
    }

    #[test]
    fn report_round_trips_and_is_deterministic() {
        let r = example2_report(11);
        let s = serde_json::to_string(&r).unwrap();
        let back: ZeroSetReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string(&example2_report(11)).unwrap(), s);
    }
}
