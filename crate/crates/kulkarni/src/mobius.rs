//! Subgroups of PSL(2,C): element types, the elliptic maps with prescribed
//! fixed points, the purely elliptic group of SU(2)-shaped maps, tests
//! producing loxodromic elements, elementary-type certificates and
//! approximation of the limit set by loxodromic fixed points.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projective::{
    cross_ratio, cx, Cpx, GenCircle, Mat2, MobiusMap, P1Point, Vec2, I, ONE, ZERO,
};
use crate::spectral::{rotation_kind_with, RotationConfig, RotationKind};
use crate::words::{enumerate_words, Word, DEFAULT_BUDGET};

/// Tolerance on the trace squared.
pub const TAU_TR: f64 = 1e-9;
/// Tolerance for normal-form verification of conjugated generators.
pub const TAU_FORM: f64 = 1e-8;
/// Residual threshold for declaring a point set cocircular.
pub const TAU_CIRCLE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MobiusClass {
    Identity,
    Elliptic { rotation: RotationKind },
    Parabolic,
    Loxodromic,
}

impl MobiusClass {
    pub fn is_loxodromic(&self) -> bool {
        matches!(self, MobiusClass::Loxodromic)
    }
}

pub fn mobius_classify(m: &MobiusMap) -> MobiusClass {
    mobius_classify_with(m, &RotationConfig::default())
}

pub fn mobius_classify_with(m: &MobiusMap, cfg: &RotationConfig) -> MobiusClass {
    if m.is_identity(TAU_TR) {
        return MobiusClass::Identity;
    }
    let t2 = m.trace_sq();
    if (t2 - cx(4.0, 0.0)).norm() <= TAU_TR {
        return MobiusClass::Parabolic;
    }
    if t2.im.abs() <= TAU_TR && t2.re >= -TAU_TR && t2.re < 4.0 {
        // multiplier at a fixed point is the square of an eigenvalue
        let t = m.trace();
        let lam = (t + (t * t - cx(4.0, 0.0)).sqrt()) / 2.0;
        return MobiusClass::Elliptic { rotation: rotation_kind_with(lam * lam, cfg) };
    }
    MobiusClass::Loxodromic
}

/// The elliptic map fixing `1` and `p` with rotation angle `2 pi theta`
/// (multiplier `e^{2 pi i theta}` at `p`). The lift is chosen with
/// nonnegative real part of the trace.
pub fn elliptic_with_fixed_points(p: Cpx, theta: f64) -> Result<MobiusMap> {
    if (p - ONE).norm() <= 1e-12 {
        return Err(Error::InvalidInput("the two fixed points coincide".into()));
    }
    let l = Cpx::from_polar(1.0, PI * theta);
    let lb = l.conj();
    let den = p - ONE;
    let m = Mat2::new((p * lb - l) / den, p * (l - lb) / den, (lb - l) / den, (p * l - lb) / den);
    let mut m = MobiusMap::from_unimodular(m);
    if m.trace().re < 0.0 {
        m = m.negated();
    }
    Ok(m)
}

/// The two sides of each equivalence for an elliptic map fixing `1` and
/// `p`: `a = conj(d)` against `p` real, `|a| = 1` against `p = 0`, and
/// `|a| < 1` against `p < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub a_is_conj_d: bool,
    pub abs_a_is_one: bool,
    pub abs_a_below_one: bool,
    pub p: [f64; 2],
    pub p_real: bool,
    pub p_zero: bool,
    pub p_negative: bool,
}

pub fn lemma2_predicates(m: &MobiusMap, tol: f64) -> Result<Lemma2Report> {
    let fixed = m.fixed_points(TAU_TR);
    let one = P1Point::from_cpx(ONE);
    let other = fixed
        .iter()
        .find(|z| z.distance(&one) > 1e-9)
        .or_else(|| fixed.first())
        .ok_or_else(|| Error::PreconditionViolation("map has no fixed points".into()))?;
    if !fixed.iter().any(|z| z.distance(&one) <= 1e-7) {
        return Err(Error::PreconditionViolation("1 is not a fixed point".into()));
    }
    let p = other
        .to_cpx()
        .ok_or_else(|| Error::PreconditionViolation("fixed point at infinity".into()))?;
    let (a, d) = (m.a(), m.d());
    Ok(Lemma2Report {
        a_is_conj_d: (a - d.conj()).norm() <= tol,
        abs_a_is_one: (a.norm() - 1.0).abs() <= tol,
        abs_a_below_one: a.norm() < 1.0 - tol,
        p: [p.re, p.im],
        p_real: p.im.abs() <= tol,
        p_zero: p.norm() <= tol,
        p_negative: p.im.abs() <= tol && p.re < -tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossRatioTest {
    pub guaranteed_loxodromic: bool,
    pub cross_ratio: P1Point,
}

/// Given the fixed-point pairs of two infinite-order elliptic maps, decides
/// whether the cross ratio lies off the closed negative real axis, which
/// forces a loxodromic element in the group they generate.
pub fn cross_ratio_loxodromic_test(fix1: [P1Point; 2], fix2: [P1Point; 2], tau_axis: f64) -> Result<CrossRatioTest> {
    for a in &fix1 {
        for b in &fix2 {
            if a.distance(b) <= 1e-12 {
                return Err(Error::DegenerateQuadruple);
            }
        }
    }
    let cr = cross_ratio(&fix1[0], &fix1[1], &fix2[0], &fix2[1])?;
    let on_axis = match cr.to_cpx() {
        None => true,
        Some(z) => z.im.abs() <= tau_axis * (1.0 + z.norm()) && z.re <= tau_axis,
    };
    Ok(CrossRatioTest { guaranteed_loxodromic: !on_axis, cross_ratio: cr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicWitness {
    pub m: u32,
    pub trace_sq: [f64; 2],
}

/// Smallest `m >= 1` with `g2^m g1` loxodromic, for parabolic maps with
/// distinct fixed points.
pub fn parabolic_pair_witness(g1: &MobiusMap, g2: &MobiusMap, m_max: u32) -> Result<ParabolicWitness> {
    for g in [g1, g2] {
        if mobius_classify(g) != MobiusClass::Parabolic {
            return Err(Error::PreconditionViolation("both maps must be parabolic".into()));
        }
    }
    let f1 = g1.fixed_points(1e-6);
    let f2 = g2.fixed_points(1e-6);
    if f1[0].distance(&f2[0]) <= 1e-9 {
        return Err(Error::PreconditionViolation("the parabolic maps share their fixed point".into()));
    }
    let mut power = *g2;
    for m in 1..=m_max {
        let w = power.compose(g1);
        if mobius_classify(&w).is_loxodromic() {
            let t = w.trace_sq();
            return Ok(ParabolicWitness { m, trace_sq: [t.re, t.im] });
        }
        power = power.compose(g2);
    }
    Err(Error::BudgetExceeded(m_max as usize))
}

/// The map `z -> (a z - conj(c)) / (c z + conj(a))` with
/// `|a|^2 + |c|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrElement {
    pub a: [f64; 2],
    pub c: [f64; 2],
}

impl CrElement {
    pub fn new(a: Cpx, c: Cpx) -> Result<Self> {
        if ((a.norm_sqr() + c.norm_sqr()) - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput("|a|^2 + |c|^2 must equal 1".into()));
        }
        Ok(Self { a: [a.re, a.im], c: [c.re, c.im] })
    }

    pub fn a(&self) -> Cpx {
        cx(self.a[0], self.a[1])
    }

    pub fn c(&self) -> Cpx {
        cx(self.c[0], self.c[1])
    }

    pub fn to_map(&self) -> MobiusMap {
        let (a, c) = (self.a(), self.c());
        MobiusMap::from_unimodular(Mat2::new(a, -c.conj(), c, a.conj()))
    }

    /// `p+` and `p-` when `c != 0`.
    pub fn fixed_points(&self) -> Option<(Cpx, Cpx)> {
        let (a, c) = (self.a(), self.c());
        if c.norm() <= 1e-12 {
            return None;
        }
        let s = (1.0 - a.re * a.re).max(0.0).sqrt();
        Some((I * (a.im + s) / c, I * (a.im - s) / c))
    }

    pub fn compose(&self, other: &Self) -> Option<Self> {
        cr_membership(&self.to_map().compose(&other.to_map()), 1e-9)
    }
}

/// Reads off the element when the lift (up to sign) has the shape
/// `[[a, -conj(c)], [c, conj(a)]]` within `tol`.
pub fn cr_membership(m: &MobiusMap, tol: f64) -> Option<CrElement> {
    let (a, b, c, d) = (m.a(), m.b(), m.c(), m.d());
    if (d - a.conj()).norm() <= tol && (b + c.conj()).norm() <= tol {
        let n = (a.norm_sqr() + c.norm_sqr()).sqrt();
        return Some(CrElement { a: [a.re / n, a.im / n], c: [c.re / n, c.im / n] });
    }
    None
}

/// The explicit one-parameter elements attached to a negative real `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrGenerator {
    /// `[[a, p conj(c)], [c, conj(a)]]` with the printed `a(x)`, `c(x)`.
    pub phi: MobiusMap,
    /// The unimodular normalization `[[|a|, |a| p conj(c)/a], [c a/|a|, |a|]]`
    /// whose fixed points are `z_x` and `-z_x`.
    pub gamma: MobiusMap,
    pub z_x: [f64; 2],
    /// `kappa(z) = w z` with `w = -z_x`.
    pub kappa: MobiusMap,
    pub f_x: f64,
}

/// `f(x) = (-8 p x^2 + p^2 + 6 p + 1) / (p - 1)^2`.
pub fn cr_f(p: f64, x: f64) -> f64 {
    (-8.0 * p * x * x + p * p + 6.0 * p + 1.0) / ((p - 1.0) * (p - 1.0))
}

pub fn cr_p_generator(p: f64, x: f64) -> Result<CrGenerator> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidInput("x must lie in (0, 1)".into()));
    }
    if !(p < 0.0) {
        return Err(Error::InvalidInput("p must be negative".into()));
    }
    let s = (1.0 - x * x).sqrt();
    let a = (cx(x * (p - 1.0), 0.0) - I * ((p + 1.0) * s)) / (p - 1.0);
    let c = -I * (2.0 * s) / (p - 1.0);
    let phi = MobiusMap::new(Mat2::new(a, c.conj() * p, c, a.conj()))?;
    let r = a.norm();
    let gamma = MobiusMap::new(Mat2::new(cx(r, 0.0), c.conj() * p * r / a, c * a / r, cx(r, 0.0)))?;
    let z_x = I * r * (1.0 - r * r).sqrt() / (c * a);
    let w = -z_x;
    let sw = w.sqrt();
    let kappa = MobiusMap::from_unimodular(Mat2::new(sw, ZERO, ZERO, sw.inv()));
    Ok(CrGenerator { phi, gamma, z_x: [z_x.re, z_x.im], kappa, f_x: cr_f(p, x) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementaryType {
    DihInf,
    Cr,
    Epa,
    MobCstar,
    NonElementary,
    Undetermined,
}

/// Outcome of the bounded-depth elementary-type search. When a conjugator
/// `C` is present, every generator `g` has `C g C^-1` in the normal form of
/// the reported type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryCertificate {
    #[serde(rename = "type")]
    pub kind: ElementaryType,
    pub conjugator: Option<MobiusMap>,
    pub depth: usize,
    pub witness_words: Vec<Word>,
    pub note: String,
}

fn moves_to(g: &MobiusMap, z: &P1Point, targets: &[P1Point]) -> bool {
    let w = g.apply(z);
    targets.iter().any(|t| w.distance(t) <= 1e-8)
}

/// Conjugator sending `u` to 0 and `v` to infinity.
fn conj_to_zero_inf(u: &P1Point, v: &P1Point) -> MobiusMap {
    let inv = Mat2::from_columns(&[v.to_vec(), u.to_vec()]);
    MobiusMap::new(inv).expect("distinct points").inverse()
}

/// Conjugator sending `u` to infinity.
fn conj_to_inf(u: &P1Point) -> MobiusMap {
    let uv = u.to_vec();
    let other = Vec2::new(-uv[1].conj(), uv[0].conj());
    let inv = Mat2::from_columns(&[uv, other]);
    MobiusMap::new(inv).expect("independent columns").inverse()
}

fn conjugate(c: &MobiusMap, g: &MobiusMap) -> MobiusMap {
    c.compose(g).compose(&c.inverse())
}

fn small(z: Cpx, scale: f64) -> bool {
    z.norm() <= TAU_FORM * scale
}

fn scale_of(m: &MobiusMap) -> f64 {
    m.lift().iter().map(|z| z.norm()).fold(1.0, f64::max)
}

fn is_diagonal(m: &MobiusMap) -> bool {
    let s = scale_of(m);
    small(m.b(), s) && small(m.c(), s)
}

fn is_antidiagonal(m: &MobiusMap) -> bool {
    let s = scale_of(m);
    small(m.a(), s) && small(m.d(), s)
}

fn unit_rotation(m: &MobiusMap) -> bool {
    ((m.a() / m.d()).norm() - 1.0).abs() <= TAU_FORM
}

fn in_epa(m: &MobiusMap) -> bool {
    let t = m.trace_sq();
    small(m.c(), scale_of(m)) && t.im.abs() <= TAU_FORM && t.re >= -TAU_FORM && t.re <= 4.0 + TAU_FORM
}

/// Bounded-depth elementary-type search over the reduced words of length at
/// most `depth`. `Undetermined` is a legitimate outcome.
pub fn elementary_certificate(gens: &[MobiusMap], depth: usize) -> ElementaryCertificate {
    let cert = |kind, conjugator, witness_words, note: &str| ElementaryCertificate {
        kind,
        conjugator,
        depth,
        witness_words,
        note: note.to_string(),
    };
    let nontrivial: Vec<MobiusMap> = gens.iter().filter(|g| !g.is_identity(TAU_TR)).copied().collect();
    if nontrivial.is_empty() {
        return cert(ElementaryType::DihInf, Some(MobiusMap::identity()), vec![], "trivial group");
    }
    let words = match enumerate_words(gens, depth, DEFAULT_BUDGET) {
        Ok(w) => w,
        Err(_) => return cert(ElementaryType::Undetermined, None, vec![], "word budget exceeded"),
    };
    let classes: Vec<MobiusClass> = words.iter().map(|w| mobius_classify(&w.element)).collect();
    let lox: Vec<usize> = (0..words.len()).filter(|&i| classes[i].is_loxodromic()).collect();
    let all_epa_traces = classes.iter().all(|c| !c.is_loxodromic());

    // common fixed points of all generators
    let first_fixed = nontrivial[0].fixed_points(1e-7);
    let common: Vec<P1Point> = first_fixed
        .iter()
        .filter(|z| nontrivial.iter().all(|g| moves_to(g, z, &[**z])))
        .copied()
        .collect();
    let verify = |c: &MobiusMap, test: &dyn Fn(&MobiusMap) -> bool| gens.iter().all(|g| test(&conjugate(c, g)));

    if common.len() >= 2 {
        let c = conj_to_zero_inf(&common[0], &common[1]);
        let (kind, ok) = if lox.is_empty() {
            (ElementaryType::DihInf, verify(&c, &|m| is_diagonal(m) && unit_rotation(m)))
        } else {
            (ElementaryType::MobCstar, verify(&c, &|m| is_diagonal(m)))
        };
        let witness = lox.first().map(|&i| vec![words[i].word.clone()]).unwrap_or_default();
        return if ok {
            cert(kind, Some(c), witness, "two common fixed points")
        } else {
            cert(ElementaryType::Undetermined, None, vec![], "normal form verification failed")
        };
    }
    if common.len() == 1 {
        let c = conj_to_inf(&common[0]);
        if all_epa_traces && verify(&c, &in_epa) {
            return cert(ElementaryType::Epa, Some(c), vec![], "common fixed point, no loxodromic word");
        }
        return cert(
            ElementaryType::Undetermined,
            None,
            lox.first().map(|&i| vec![words[i].word.clone()]).unwrap_or_default(),
            "common fixed point with a loxodromic word",
        );
    }

    // invariant pair of points drawn from fixed-point sets of enumerated words
    let mut tried: Vec<[P1Point; 2]> = Vec::new();
    for w in words.iter().skip(1) {
        let f = w.element.fixed_points(1e-7);
        if f.len() != 2 || tried.iter().any(|t| t[0].distance(&f[0]) <= 1e-8 && t[1].distance(&f[1]) <= 1e-8) {
            continue;
        }
        let pair = [f[0], f[1]];
        tried.push(pair);
        if tried.len() > 64 {
            break;
        }
        if !nontrivial.iter().all(|g| pair.iter().all(|z| moves_to(g, z, &pair))) {
            continue;
        }
        let c0 = conj_to_zero_inf(&pair[0], &pair[1]);
        if lox.is_empty() {
            // rescale so that the first swapping generator becomes 1/z
            let mut c = c0;
            if let Some(s) = gens.iter().map(|g| conjugate(&c0, g)).find(|m| is_antidiagonal(m)) {
                let lam = s.b() / s.c();
                let r = lam.sqrt();
                let scale = MobiusMap::from_unimodular(Mat2::new(r.sqrt().inv(), ZERO, ZERO, r.sqrt()));
                c = scale.compose(&c0);
            }
            let ok = verify(&c, &|m| {
                (is_diagonal(m) && unit_rotation(m)) || (is_antidiagonal(m) && ((m.b() / m.c()).norm() - 1.0).abs() <= TAU_FORM)
            });
            if ok {
                return cert(ElementaryType::DihInf, Some(c), vec![], "invariant pair of points");
            }
        } else if verify(&c0, &|m| is_diagonal(m) || is_antidiagonal(m)) {
            return cert(
                ElementaryType::MobCstar,
                Some(c0),
                vec![words[lox[0]].word.clone()],
                "invariant pair of points",
            );
        }
    }

    if lox.is_empty() && classes.iter().all(|c| matches!(c, MobiusClass::Elliptic { .. } | MobiusClass::Identity)) {
        if let Some(c) = invariant_form_conjugator(gens) {
            if verify(&c, &|m| cr_membership(m, TAU_FORM).is_some()) {
                return cert(ElementaryType::Cr, Some(c), vec![], "invariant positive Hermitian form");
            }
        }
    }

    if let Some((i, j)) = disjoint_loxodromic_pair(&words, &lox) {
        return cert(
            ElementaryType::NonElementary,
            None,
            vec![words[i].word.clone(), words[j].word.clone()],
            "two loxodromic words with disjoint fixed points",
        );
    }
    cert(ElementaryType::Undetermined, None, vec![], "no certificate within the depth")
}

fn disjoint_loxodromic_pair(words: &[crate::words::Enumerated<MobiusMap>], lox: &[usize]) -> Option<(usize, usize)> {
    let fixed: Vec<Vec<P1Point>> = lox.iter().map(|&i| words[i].element.fixed_points(1e-7)).collect();
    for a in 0..lox.len() {
        for b in a + 1..lox.len() {
            let disjoint = fixed[a].iter().all(|u| fixed[b].iter().all(|v| u.distance(v) > 1e-6));
            if disjoint {
                return Some((lox[a], lox[b]));
            }
        }
    }
    None
}

/// Conjugator into SU(2) from a positive definite Hermitian form invariant
/// under every generator, if one exists.
fn invariant_form_conjugator(gens: &[MobiusMap]) -> Option<MobiusMap> {
    // Q = [[q0, q1 + i q2], [q1 - i q2, q3]]; each generator gives the real
    // linear conditions g* Q g - Q = 0.
    let basis = [
        Mat2::new(ONE, ZERO, ZERO, ZERO),
        Mat2::new(ZERO, ONE, ONE, ZERO),
        Mat2::new(ZERO, I, -I, ZERO),
        Mat2::new(ZERO, ZERO, ZERO, ONE),
    ];
    let mut ata = Matrix4::<f64>::zeros();
    for g in gens {
        let m = g.lift();
        let cols: Vec<[f64; 4]> = basis
            .iter()
            .map(|b| {
                let r = m.adjoint() * b * m - b;
                [r[(0, 0)].re, r[(0, 1)].re, r[(0, 1)].im, r[(1, 1)].re]
            })
            .collect();
        let a = Matrix4::from_fn(|i, j| cols[j][i]);
        ata += a.transpose() * a;
    }
    let eig = SymmetricEigen::new(ata);
    let k = (0..4).min_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap())?;
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if eig.eigenvalues[k].abs().sqrt() > 1e-7 * top.sqrt().max(1.0) {
        return None;
    }
    let q: Vector4<f64> = eig.eigenvectors.column(k).into_owned();
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    let (q0, q1, q2, q3) = (q[0] * sign, q[1] * sign, q[2] * sign, q[3] * sign);
    let off = cx(q1, q2);
    if q0 <= 1e-12 || q0 * q3 - off.norm_sqr() <= 1e-12 {
        return None;
    }
    // Cholesky Q = L L*; then L* g L^{-*} is unitary.
    let l00 = q0.sqrt();
    let l10 = off.conj() / l00;
    let l11 = (q3 - l10.norm_sqr()).sqrt();
    let l = Mat2::new(cx(l00, 0.0), ZERO, l10, cx(l11, 0.0));
    MobiusMap::new(l.adjoint()).ok()
}

/// Least-squares generalized circle through points of the projective line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub circle: Option<GenCircle>,
    /// `sqrt(smallest eigenvalue / n)` of the normal equations, with points
    /// on the unit sphere scale.
    pub residual: f64,
    pub compatible: bool,
}

pub fn fit_circle(points: &[P1Point]) -> Option<CircleFit> {
    if points.len() < 3 {
        return None;
    }
    let mut ata = Matrix4::<f64>::zeros();
    for p in points {
        let [z1, z2] = *p.coords();
        let w = z1.conj() * z2;
        let row = Vector4::new(z1.norm_sqr(), 2.0 * w.re, -2.0 * w.im, z2.norm_sqr());
        ata += row * row.transpose();
    }
    let eig = SymmetricEigen::new(ata);
    let k = (0..4).min_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap())?;
    let v = eig.eigenvectors.column(k);
    let residual = (eig.eigenvalues[k].max(0.0) / points.len() as f64).sqrt();
    let circle = GenCircle::from_region_form(v[0], cx(v[1], v[2]), v[3]).ok();
    let real_circle = v[1] * v[1] + v[2] * v[2] - v[0] * v[3] > 0.0;
    Some(CircleFit {
        circle,
        residual,
        compatible: points.len() >= 4 && residual <= TAU_CIRCLE && real_circle && circle.is_some(),
    })
}

/// A fixed point of a loxodromic word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub point: P1Point,
    pub word_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenbergCloud {
    pub points: Vec<CloudPoint>,
    pub depth: usize,
    pub circle: Option<CircleFit>,
}

impl GreenbergCloud {
    /// Largest distance from a generator image of a cloud point (taken from
    /// words of length at most `depth - 2`) to the cloud.
    pub fn invariance_defect(&self, gens: &[MobiusMap]) -> f64 {
        let mut worst: f64 = 0.0;
        for cp in self.points.iter().filter(|c| c.word_length + 2 <= self.depth) {
            for g in gens.iter().flat_map(|g| [*g, g.inverse()]) {
                let img = g.apply(&cp.point);
                let d = self.points.iter().map(|q| q.point.distance(&img)).fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Fixed points of all loxodromic reduced words up to `depth`, deduplicated,
/// plus a circle fit.
pub fn greenberg_limit_approx(gens: &[MobiusMap], depth: usize) -> Result<GreenbergCloud> {
    fixed_point_cloud(gens, depth, false)
}

/// Loxodromic and parabolic fixed points up to `depth`. Parabolic fixed
/// points also lie in the limit set but are approached slowly by
/// loxodromic ones, so they sharpen finite samples.
pub fn limit_point_sample(gens: &[MobiusMap], depth: usize) -> Result<GreenbergCloud> {
    fixed_point_cloud(gens, depth, true)
}

fn fixed_point_cloud(gens: &[MobiusMap], depth: usize, parabolic: bool) -> Result<GreenbergCloud> {
    let words = enumerate_words(gens, depth, DEFAULT_BUDGET)?;
    let mut points: Vec<CloudPoint> = Vec::new();
    let mut seen = crate::words::DedupSet::new(1e-9);
    for w in &words {
        let keep = match mobius_classify(&w.element) {
            MobiusClass::Loxodromic => true,
            MobiusClass::Parabolic => parabolic,
            _ => false,
        };
        if !keep {
            continue;
        }
        for z in w.element.fixed_points(1e-7) {
            let key: Vec<f64> = z.sphere().to_vec();
            if seen.insert(key) {
                points.push(CloudPoint { point: z, word_length: w.word.len() });
            }
        }
    }
    let pts: Vec<P1Point> = points.iter().map(|c| c.point).collect();
    Ok(GreenbergCloud { circle: fit_circle(&pts), points, depth })
}
