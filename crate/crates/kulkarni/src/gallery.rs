//! Constructors and self-checks for explicit groups: suspensions of Möbius
//! groups, the group generated by a diagonal matrix and a cyclic
//! permutation, a kissing Schottky group in PSL(3,C) and the fundamental
//! groups of Inoue surfaces.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::actions::{control_frame, control_projection, ConePrediction, GroupSpec, KernelFormReport,
    PairingEntry, SchottkyPairing};
use crate::cyclic::{Layer, LimitSetDesc};
use crate::error::{Error, Result};
use crate::mobius::limit_point_sample;
use crate::projective::{
    cx, json, line_through, Cpx, GenCircle, Mat3, MobiusMap, P1Point, ProjLine, ProjPoint, ProjTransform, I, ONE,
    ZERO,
};
use crate::spectral::{char_poly, char_poly_of, cubic_roots, eval_poly, rotation_kind, svd_sorted};
use crate::words::Word;

/// Tolerance for Sol-form membership and parameter round trips.
pub const TAU_SOL: f64 = 1e-10;

fn embed2(m: &MobiusMap) -> ProjTransform {
    let l = m.lift();
    ProjTransform::from_rows([[l[(0, 0)], l[(0, 1)], ZERO], [l[(1, 0)], l[(1, 1)], ZERO], [ZERO, ZERO, ONE]])
        .expect("block embedding of an invertible map")
}

fn line12() -> ProjLine {
    line_through(&ProjPoint::basis(0), &ProjPoint::basis(1)).expect("distinct basis points")
}

fn line23() -> ProjLine {
    line_through(&ProjPoint::basis(1), &ProjPoint::basis(2)).expect("distinct basis points")
}

fn is_torsion_scalar(g: Cpx) -> bool {
    rotation_kind(g / cx(g.norm(), 0.0), 720).is_torsion() && (g.norm() - 1.0).abs() <= 1e-12
}

/// Two hyperbolic generators with disjoint isometric circles, the second
/// conjugated by a rotation of angle pi/2.
pub fn classical_schottky() -> Vec<MobiusMap> {
    let (c, s) = (1.5f64.cosh(), 1.5f64.sinh());
    let h1 = MobiusMap::from_coeffs(cx(c, 0.0), cx(s, 0.0), cx(s, 0.0), cx(c, 0.0)).expect("invertible");
    let rot = MobiusMap::from_coeffs(
        Cpx::from_polar(1.0, FRAC_PI_4),
        cx(0.0, 0.0),
        cx(0.0, 0.0),
        Cpx::from_polar(1.0, -FRAC_PI_4),
    )
    .expect("invertible");
    let h2 = rot.compose(&h1).compose(&rot.inverse());
    vec![h1, h2]
}

/// Suspension of a Möbius group by a group of scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Suspension {
    pub group: GroupSpec,
    /// Fixed points of loxodromic and parabolic words of the Möbius group,
    /// used as a sample of its limit set.
    pub mobius_limit_points: Vec<P1Point>,
    pub scalar_group_infinite: bool,
    /// Lines through `e3` and the limit points, plus the line `e1 e2` when
    /// the scalar group is infinite.
    pub prediction: ConePrediction,
    pub prediction_empty: bool,
}

/// Block embeddings of the Möbius generators, `diag(g, g, g^-2)` for each
/// scalar generator and the embedding of `-Id`, which lies in the preimage
/// of every Möbius group.
pub fn make_suspension(psl2_gens: &[MobiusMap], scalars: &[Cpx], depth: usize) -> Result<Suspension> {
    let mut gens: Vec<(String, ProjTransform)> = Vec::new();
    for (i, h) in psl2_gens.iter().enumerate() {
        gens.push((format!("h{}", i + 1), embed2(h)));
    }
    let mut infinite = false;
    for (i, &g) in scalars.iter().enumerate() {
        if g.norm() == 0.0 || !g.norm().is_finite() {
            return Err(Error::InvalidInput("scalar generators must be nonzero".into()));
        }
        if (g - ONE).norm() <= 1e-15 {
            continue;
        }
        infinite |= !is_torsion_scalar(g);
        gens.push((format!("g{}", i + 1), ProjTransform::diag(g, g, (g * g).inv())?));
    }
    let minus = ProjTransform::diag(-ONE, -ONE, ONE)?;
    if !gens.iter().any(|(_, m)| m.proj_eq(&minus, 1e-12)) {
        gens.push(("J".into(), minus));
    }
    let group = GroupSpec {
        generators: gens.into_iter().map(|(name, matrix)| crate::actions::Generator { name, matrix }).collect(),
        point: Some(ProjPoint::basis(2)),
        line: Some(line12()),
    };
    group.validate()?;
    let cloud = if psl2_gens.is_empty() { Vec::new() } else { limit_point_sample(psl2_gens, depth)?.points };
    let mobius_limit_points: Vec<P1Point> = cloud.iter().map(|c| c.point).collect();
    let base_points = mobius_limit_points
        .iter()
        .map(|z| {
            let [a, b] = *z.coords();
            ProjPoint::new([a, b, ZERO])
        })
        .collect::<Result<Vec<_>>>()?;
    let extra_lines = if infinite { vec![line12()] } else { Vec::new() };
    let prediction_empty = base_points.is_empty() && extra_lines.is_empty();
    Ok(Suspension {
        group,
        mobius_limit_points,
        scalar_group_infinite: infinite,
        prediction: ConePrediction { apex: ProjPoint::basis(2), base_points, extra_lines },
        prediction_empty,
    })
}

/// Element `B^k diag(a^e1, a^e2, a^e3)` with
/// `e = (n1 - 2 n2 + n3, n1 + n2 - 2 n3, n2 + n3 - 2 n1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaANormalForm {
    pub k: u8,
    pub exponents: [i64; 3],
    pub n: [i64; 3],
}

impl GammaANormalForm {
    pub fn identity() -> Self {
        Self { k: 0, exponents: [0; 3], n: [0; 3] }
    }

    fn from_exponents(k: u8, e: [i64; 3]) -> Self {
        // n3 can be taken to be zero since (1, 1, 1) spans the kernel
        let n2 = (e[1] - e[0]) / 3;
        let n1 = e[1] - n2;
        Self { k, exponents: e, n: [n1, n2, 0] }
    }

    pub fn matrix(&self, a: Cpx) -> Result<ProjTransform> {
        let b = permutation_b();
        let d = ProjTransform::diag(a.powi(self.exponents[0] as i32), a.powi(self.exponents[1] as i32),
            a.powi(self.exponents[2] as i32))?;
        let mut m = ProjTransform::identity();
        for _ in 0..self.k {
            m = m.compose(&b);
        }
        Ok(m.compose(&d))
    }
}

/// The cyclic permutation `e1 -> e2 -> e3 -> e1`.
pub fn permutation_b() -> ProjTransform {
    ProjTransform::from_real_rows([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).expect("permutation")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaA {
    pub group: GroupSpec,
    /// The three coordinate lines.
    pub prediction: LimitSetDesc,
}

/// Group generated by `M_a = diag(a, a, a^-2)` (named `Ma`) and the cyclic
/// permutation `B`.
pub fn make_gamma_a(a: Cpx) -> Result<GammaA> {
    if a.norm() == 0.0 || !a.norm().is_finite() {
        return Err(Error::InvalidInput("a must be nonzero".into()));
    }
    let ma = ProjTransform::diag(a, a, (a * a).inv())?;
    let group = GroupSpec::new(vec![("Ma", ma), ("B", permutation_b())])?;
    let mut prediction = LimitSetDesc::empty(Layer::Lambda);
    let e = |k| ProjPoint::basis(k);
    prediction.push_line("line(e1,e2)", line_through(&e(0), &e(1))?);
    prediction.push_line("line(e1,e3)", line_through(&e(0), &e(2))?);
    prediction.push_line("line(e3,e2)", line_through(&e(2), &e(1))?);
    Ok(GammaA { group, prediction })
}

/// Normal form of a word in `Ma` (generator 0) and `B` (generator 1),
/// obtained by pushing every `B` to the left through the diagonal part.
pub fn gamma_a_normal_form(word: &Word) -> Result<GammaANormalForm> {
    let mut k: i64 = 0;
    let mut e = [0i64; 3];
    for &(g, s) in &word.letters {
        match (g, s > 0) {
            (0, up) => {
                let d = if up { 1 } else { -1 };
                e = [e[0] + d, e[1] + d, e[2] - 2 * d];
            }
            (1, true) => {
                k += 1;
                e = [e[1], e[2], e[0]];
            }
            (1, false) => {
                k -= 1;
                e = [e[2], e[0], e[1]];
            }
            _ => return Err(Error::InvalidInput(format!("generator index {g} is not Ma or B"))),
        }
    }
    Ok(GammaANormalForm::from_exponents(k.rem_euclid(3) as u8, e))
}

/// Parameters of the kissing Schottky group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KissingParams {
    pub theta: f64,
    pub eps2: json::CpxRepr,
    pub eps3: json::CpxRepr,
}

impl Default for KissingParams {
    fn default() -> Self {
        Self { theta: 2f64.sqrt() - 1.0, eps2: [1.0, 0.0], eps3: [1.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KissingDiagnostics {
    pub eps1: json::CpxRepr,
    /// Predicted eigenvalues `i eps1 (3 - sqrt 10)`, `i eps1 (3 + sqrt 10)`
    /// and `eps1^-2`.
    pub eigenvalues: [json::CpxRepr; 3],
    /// Modulus of the characteristic polynomial at each predicted eigenvalue.
    pub char_poly_residuals: [f64; 3],
    /// `(-sqrt 10, 1, k-)` and `(sqrt 10, 1, k+)`.
    pub eigenvectors: [[json::CpxRepr; 3]; 2],
    pub k_minus: json::CpxRepr,
    pub k_plus: json::CpxRepr,
    /// `|M v - lambda v|` for the two printed eigenvectors.
    pub eigenvector_residuals: [f64; 2],
    /// The rotation `e^(2 pi i theta)` has finite order.
    pub rational_theta: bool,
    /// `k+ = k- = 0`: the affine-conjugate case.
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KissingSchottky {
    pub group: GroupSpec,
    pub pairing: SchottkyPairing,
    pub diagnostics: KissingDiagnostics,
    /// Lines through `e3` and sampled limit points of the projected group.
    pub prediction: ConePrediction,
}

/// `eps1 = -(3 + sqrt 10)^(1/3) e^(-i pi (1 + 4 theta) / 6)`.
pub fn kissing_eps1(theta: f64) -> Cpx {
    let r = (3.0 + 10f64.sqrt()).cbrt();
    -Cpx::from_polar(r, -std::f64::consts::PI * (1.0 + 4.0 * theta) / 6.0)
}

/// The printed closed form of the third eigenvector coordinate, `s = -1`
/// for the eigenvalue `i eps1 (3 - sqrt 10)` and `s = 1` for the other.
pub fn kissing_k(theta: f64, eps2: Cpx, eps3: Cpx, s: f64) -> Cpx {
    let pi = std::f64::consts::PI;
    let r10 = 10f64.sqrt();
    let e = Cpx::from_polar(1.0, pi * (1.0 + 4.0 * theta) / 6.0);
    let w = Cpx::from_polar(1.0, 2.0 * pi * theta);
    let num = I * (eps2 * (s * r10) + eps3) * e;
    let den = (3.0 + r10).cbrt() * ((ONE - w) * 3.0 - (-w - s) * r10);
    num / den
}

pub fn kissing_matrices(theta: f64, eps2: Cpx, eps3: Cpx) -> Result<[ProjTransform; 3]> {
    let e1 = kissing_eps1(theta);
    let m1 = ProjTransform::from_rows([[cx(-1.0, -1.0), I, ZERO], [-I, cx(-1.0, 1.0), ZERO], [ZERO, ZERO, ONE]])?;
    let m2 = ProjTransform::from_rows([[cx(1.0, -1.0), -I, ZERO], [I, cx(1.0, 1.0), ZERO], [ZERO, ZERO, ONE]])?;
    let me = ProjTransform::from_rows([
        [I * e1 * 3.0, I * e1 * 10.0, ZERO],
        [I * e1, I * e1 * 3.0, ZERO],
        [eps2, eps3, (e1 * e1).inv()],
    ])?;
    Ok([m1, m2, me])
}

/// The six disks: `D(1+i) <-> D(1-i)`, `D(-1+i) <-> D(-1-i)` and
/// `D(-3) <-> D(3)`, all of radius one.
pub fn kissing_pairing(radius: f64) -> Result<SchottkyPairing> {
    let pair = |g: &str, r: Cpx, s: Cpx| -> Result<PairingEntry> {
        Ok(PairingEntry { generator: g.into(), r: GenCircle::disk(r, radius)?, s: GenCircle::disk(s, radius)? })
    };
    Ok(SchottkyPairing {
        pairs: vec![
            pair("M1", cx(1.0, 1.0), cx(1.0, -1.0))?,
            pair("M2", cx(-1.0, 1.0), cx(-1.0, -1.0))?,
            pair("Meps", cx(-3.0, 0.0), cx(3.0, 0.0))?,
        ],
    })
}

fn triple(v: [Cpx; 3]) -> [json::CpxRepr; 3] {
    v.map(json::from_cpx)
}

/// Builds the kissing Schottky group and checks the closed-form spectral
/// data of its loxodromic generator. `depth` bounds the words used to
/// sample the limit set of the projected group.
pub fn make_kissing_schottky(params: &KissingParams, depth: usize) -> Result<KissingSchottky> {
    let theta = params.theta;
    if !theta.is_finite() {
        return Err(Error::NonFinite);
    }
    let (eps2, eps3) = (json::to_cpx(params.eps2), json::to_cpx(params.eps3));
    let [m1, m2, me] = kissing_matrices(theta, eps2, eps3)?;
    let group = GroupSpec::new(vec![("M1", m1), ("M2", m2), ("Meps", me)])?
        .with_control(ProjPoint::basis(2), line12());

    let e1 = kissing_eps1(theta);
    let r10 = 10f64.sqrt();
    let lam = [I * e1 * (3.0 - r10), I * e1 * (3.0 + r10), (e1 * e1).inv()];
    let cp = char_poly(&me);
    let char_poly_residuals = lam.map(|l| eval_poly(&cp, l).norm());
    let k_minus = kissing_k(theta, eps2, eps3, -1.0);
    let k_plus = kissing_k(theta, eps2, eps3, 1.0);
    let p1 = [cx(-r10, 0.0), ONE, k_minus];
    let p2 = [cx(r10, 0.0), ONE, k_plus];
    let residual = |v: [Cpx; 3], l: Cpx| {
        let x = crate::projective::Vec3::new(v[0], v[1], v[2]);
        (me.lift() * x - x * l).norm()
    };
    let eigenvector_residuals = [residual(p1, lam[0]), residual(p2, lam[1])];
    let rational_theta = rotation_kind(Cpx::from_polar(1.0, 2.0 * std::f64::consts::PI * theta), 720).is_torsion();
    let degenerate = k_minus.norm() + k_plus.norm() <= 1e-12;
    let mut warnings = Vec::new();
    if rational_theta {
        warnings.push("theta is numerically rational; the construction assumes an irrational rotation".into());
    }
    if degenerate {
        warnings.push("eps2 = eps3 = 0 gives the affine-conjugate case".into());
    }
    let diagnostics = KissingDiagnostics {
        eps1: json::from_cpx(e1),
        eigenvalues: triple(lam),
        char_poly_residuals,
        eigenvectors: [triple(p1), triple(p2)],
        k_minus: json::from_cpx(k_minus),
        k_plus: json::from_cpx(k_plus),
        eigenvector_residuals,
        rational_theta,
        degenerate,
        warnings,
    };

    let proj = control_projection(&group, 0)?;
    let frame = control_frame(&group)?;
    let cloud = limit_point_sample(&proj.maps(), depth)?;
    let base_points = cloud.points.iter().map(|c| frame.lift_point(&c.point)).collect();
    Ok(KissingSchottky {
        group,
        pairing: kissing_pairing(1.0)?,
        diagnostics,
        prediction: ConePrediction { apex: ProjPoint::basis(2), base_points, extra_lines: Vec::new() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolFamily {
    #[serde(rename = "SOL4_0")]
    Sol40,
    #[serde(rename = "SOL4_1")]
    Sol41,
    #[serde(rename = "SOL4_1_PRIME")]
    Sol41Prime,
    None,
}

/// Parameters read off a matrix of one of the three Sol forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form")]
pub enum SolParams {
    /// `[[lambda, 0, a], [0, |lambda|^-2, b], [0, 0, 1]]`.
    Zero { lambda: json::CpxRepr, a: json::CpxRepr, b: f64 },
    /// `[[eps, a, b], [0, alpha, c], [0, 0, 1]]`.
    One { eps: f64, alpha: f64, a: f64, b: f64, c: f64 },
    /// `[[1, a, b + i log alpha], [0, alpha, c], [0, 0, 1]]`.
    OnePrime { alpha: f64, a: f64, b: f64, c: f64 },
}

impl SolParams {
    pub fn family(&self) -> SolFamily {
        match self {
            SolParams::Zero { .. } => SolFamily::Sol40,
            SolParams::One { .. } => SolFamily::Sol41,
            SolParams::OnePrime { .. } => SolFamily::Sol41Prime,
        }
    }

    pub fn rebuild(&self) -> Mat3 {
        let r = |x: f64| cx(x, 0.0);
        match *self {
            SolParams::Zero { lambda, a, b } => {
                let l = json::to_cpx(lambda);
                Mat3::new(l, ZERO, json::to_cpx(a), ZERO, r(l.norm_sqr().recip()), r(b), ZERO, ZERO, ONE)
            }
            SolParams::One { eps, alpha, a, b, c } => {
                Mat3::new(r(eps), r(a), r(b), ZERO, r(alpha), r(c), ZERO, ZERO, ONE)
            }
            SolParams::OnePrime { alpha, a, b, c } => {
                Mat3::new(ONE, r(a), cx(b, alpha.ln()), ZERO, r(alpha), r(c), ZERO, ZERO, ONE)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolMembership {
    pub family: SolFamily,
    pub params: Option<SolParams>,
    /// Deviation of the rebuilt matrix from the normalized lift.
    pub roundtrip: f64,
}

/// Lift scaled so that the `(3, 3)` entry is one, if the map is affine.
fn affine_lift(g: &ProjTransform) -> Option<Mat3> {
    let m = g.lift();
    let s = m[(2, 2)];
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if s.norm() <= TAU_SOL * scale || m[(2, 0)].norm() > TAU_SOL * scale || m[(2, 1)].norm() > TAU_SOL * scale {
        return None;
    }
    Some(m / s)
}

fn real(z: Cpx, tol: f64) -> Option<f64> {
    (z.im.abs() <= tol).then_some(z.re)
}

/// Candidate parameters of `g` in the given family, if its normalized lift
/// has the corresponding shape.
pub fn sol_params(g: &ProjTransform, family: SolFamily) -> Option<SolParams> {
    let m = affine_lift(g)?;
    let tol = TAU_SOL * m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let p = match family {
        SolFamily::Sol40 => {
            if m[(0, 1)].norm() > tol || m[(1, 0)].norm() > tol {
                return None;
            }
            let l = m[(0, 0)];
            let b = real(m[(1, 2)], tol)?;
            SolParams::Zero { lambda: json::from_cpx(l), a: json::from_cpx(m[(0, 2)]), b }
        }
        SolFamily::Sol41 => {
            let eps = real(m[(0, 0)], tol)?;
            let eps = if (eps - 1.0).abs() <= tol { 1.0 } else if (eps + 1.0).abs() <= tol { -1.0 } else { return None };
            let alpha = real(m[(1, 1)], tol)?;
            if alpha <= 0.0 || m[(1, 0)].norm() > tol {
                return None;
            }
            SolParams::One { eps, alpha, a: real(m[(0, 1)], tol)?, b: real(m[(0, 2)], tol)?, c: real(m[(1, 2)], tol)? }
        }
        SolFamily::Sol41Prime => {
            if (m[(0, 0)] - ONE).norm() > tol || m[(1, 0)].norm() > tol {
                return None;
            }
            let alpha = real(m[(1, 1)], tol)?;
            if alpha <= 0.0 {
                return None;
            }
            SolParams::OnePrime { alpha, a: real(m[(0, 1)], tol)?, b: m[(0, 2)].re, c: real(m[(1, 2)], tol)? }
        }
        SolFamily::None => return None,
    };
    let dev = (p.rebuild() - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    (dev <= tol).then_some(p)
}

/// Membership of a single element, trying the families in the order
/// `SOL4_0`, `SOL4_1`, `SOL4_1_PRIME`.
pub fn sol_membership(g: &ProjTransform) -> SolMembership {
    sol_membership_in(g, &[SolFamily::Sol40, SolFamily::Sol41, SolFamily::Sol41Prime])
}

fn sol_membership_in(g: &ProjTransform, families: &[SolFamily]) -> SolMembership {
    for &f in families {
        if let Some(p) = sol_params(g, f) {
            let m = affine_lift(g).expect("checked by sol_params");
            let roundtrip = (p.rebuild() - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
            return SolMembership { family: f, params: Some(p), roundtrip };
        }
    }
    SolMembership { family: SolFamily::None, params: None, roundtrip: f64::INFINITY }
}

/// First family containing every generator, with the per-generator data.
pub fn group_sol_family(spec: &GroupSpec) -> (SolFamily, Vec<SolMembership>) {
    for f in [SolFamily::Sol40, SolFamily::Sol41, SolFamily::Sol41Prime] {
        let ms: Vec<SolMembership> = spec.generators.iter().map(|g| sol_membership_in(&g.matrix, &[f])).collect();
        if ms.iter().all(|m| m.family == f) {
            return (f, ms);
        }
    }
    (SolFamily::None, spec.generators.iter().map(|g| sol_membership(&g.matrix)).collect())
}

/// Null vector of `a - lambda I`, from the smallest singular direction.
fn null_vector(a: &Mat3, lambda: Cpx) -> [Cpx; 3] {
    let shifted = a - Mat3::identity() * lambda;
    let (_, _, v) = svd_sorted(&shifted);
    [v[(0, 2)], v[(1, 2)], v[(2, 2)]]
}

/// Unit length with the first nonzero coordinate positive real.
fn normalize_phase(v: &[Cpx]) -> Vec<Cpx> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let first = v.iter().copied().find(|z| z.norm() > 1e-9 * n).unwrap_or(ONE);
    let phase = first.conj() / first.norm();
    v.iter().map(|z| z * phase / n).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InoueSm {
    pub group: GroupSpec,
    pub alpha: f64,
    pub beta: json::CpxRepr,
    /// Real eigenvector of `alpha`.
    pub a: [f64; 3],
    /// Eigenvector of `beta`.
    pub b: [json::CpxRepr; 3],
    pub family: SolFamily,
    pub membership: Vec<SolMembership>,
}

fn int_matrix3(m: &[[i64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|r, c| cx(m[r][c] as f64, 0.0))
}

/// The group generated by `(w, z) -> (alpha w, beta z)` and the three
/// translations by `(a_i, b_i)`, written on `[z; w; 1]`, with control point
/// `e1` and control line `e2 e3`.
pub fn make_inoue_sm(m: &[[i64; 3]; 3]) -> Result<InoueSm> {
    let a = int_matrix3(m);
    let det = a.determinant();
    if (det - ONE).norm() > 1e-9 {
        return Err(Error::SpectrumMismatch(format!("determinant {det} is not 1")));
    }
    let roots = cubic_roots(&char_poly_of(&a));
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let reals: Vec<f64> = roots.iter().filter(|z| z.im.abs() <= tol).map(|z| z.re).collect();
    let complex: Vec<Cpx> = roots.iter().copied().filter(|z| z.im > tol).collect();
    if reals.len() != 1 || complex.len() != 1 || reals[0] <= 1.0 {
        return Err(Error::SpectrumMismatch(
            "expected one real eigenvalue above 1 and a non-real conjugate pair".into(),
        ));
    }
    let alpha = reals[0];
    let beta = complex[0];
    let va = null_vector(&a, cx(alpha, 0.0));
    let pivot = va.iter().copied().fold(ZERO, |acc, z| if z.norm() > acc.norm() { z } else { acc });
    let va_real: Vec<Cpx> = va.iter().map(|z| cx((z * pivot.conj() / pivot.norm()).re, 0.0)).collect();
    let av = normalize_phase(&va_real);
    let bv = normalize_phase(&null_vector(&a, beta));
    let a_i = [av[0].re, av[1].re, av[2].re];
    let b_i = [bv[0], bv[1], bv[2]];
    let mut gens = vec![("g0".to_string(), ProjTransform::diag(beta, cx(alpha, 0.0), ONE)?)];
    for i in 0..3 {
        let t = ProjTransform::from_rows([
            [ONE, ZERO, b_i[i]],
            [ZERO, ONE, cx(a_i[i], 0.0)],
            [ZERO, ZERO, ONE],
        ])?;
        gens.push((format!("g{}", i + 1), t));
    }
    let group = GroupSpec {
        generators: gens.into_iter().map(|(name, matrix)| crate::actions::Generator { name, matrix }).collect(),
        point: Some(ProjPoint::basis(0)),
        line: Some(line23()),
    };
    let (family, membership) = group_sol_family(&group);
    Ok(InoueSm { group, alpha, beta: json::from_cpx(beta), a: a_i, b: triple(b_i), family, membership })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InoueSn {
    pub group: GroupSpec,
    pub sign: Sign,
    pub alpha: f64,
    /// Eigenvector of `alpha`.
    pub a: [f64; 2],
    /// Eigenvector of the other eigenvalue.
    pub b: [f64; 2],
    /// Translation length of the central generator, `(b1 a2 - b2 a1) / r`.
    pub central_translation: f64,
    pub family: SolFamily,
    pub membership: Vec<SolMembership>,
    /// The compatibility condition on `c1, c2` is taken from the caller.
    pub integrability_unchecked: bool,
}

/// Inputs of the `S_N` construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InoueSnParams {
    pub n: [[i64; 2]; 2],
    pub r: i64,
    pub t: json::CpxRepr,
    pub c: [json::CpxRepr; 2],
    pub sign: Sign,
}

fn real_eigvec2(n: &[[f64; 2]; 2], l: f64) -> [f64; 2] {
    let (a, b, c, d) = (n[0][0] - l, n[0][1], n[1][0], n[1][1] - l);
    let v = if a.abs() + b.abs() >= c.abs() + d.abs() { [-b, a] } else { [-d, c] };
    let norm = v[0].hypot(v[1]);
    let first = if v[0].abs() > 1e-12 * norm { v[0] } else { v[1] };
    let s = first.signum() / norm;
    [v[0] * s, v[1] * s]
}

/// The groups `(w, z) -> (alpha w, z + t)` (sign plus, the coefficient of
/// `z` taken as one) or `(alpha w, -z)` (sign minus), together with
/// `(w + a_i, z + b_i w + c_i)` and the central translation, written on
/// `[z; w; 1]` with control point `e1` and control line `e2 e3`.
pub fn make_inoue_sn(p: &InoueSnParams) -> Result<InoueSn> {
    if p.r == 0 {
        return Err(Error::InvalidInput("r must be nonzero".into()));
    }
    let n = [[p.n[0][0] as f64, p.n[0][1] as f64], [p.n[1][0] as f64, p.n[1][1] as f64]];
    let det = n[0][0] * n[1][1] - n[0][1] * n[1][0];
    let tr = n[0][0] + n[1][1];
    let want = match p.sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    if det != want {
        return Err(Error::SpectrumMismatch(format!("determinant {det}, expected {want}")));
    }
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return Err(Error::SpectrumMismatch("eigenvalues are not real and distinct".into()));
    }
    let l1 = (tr + disc.sqrt()) / 2.0;
    let l2 = (tr - disc.sqrt()) / 2.0;
    let (alpha, other) = if l1.abs() >= l2.abs() { (l1, l2) } else { (l2, l1) };
    if alpha <= 1.0 {
        return Err(Error::SpectrumMismatch(format!("expanding eigenvalue {alpha} is not above 1")));
    }
    let a = real_eigvec2(&n, alpha);
    let b = real_eigvec2(&n, other);
    let central = (b[0] * a[1] - b[1] * a[0]) / p.r as f64;
    let t = json::to_cpx(p.t);
    let r = |x: f64| cx(x, 0.0);
    let g0 = match p.sign {
        Sign::Plus => ProjTransform::from_rows([[ONE, ZERO, t], [ZERO, r(alpha), ZERO], [ZERO, ZERO, ONE]])?,
        Sign::Minus => ProjTransform::diag(-ONE, r(alpha), ONE)?,
    };
    let mut gens = vec![("g0".to_string(), g0)];
    for i in 0..2 {
        let g = ProjTransform::from_rows([
            [ONE, r(b[i]), json::to_cpx(p.c[i])],
            [ZERO, ONE, r(a[i])],
            [ZERO, ZERO, ONE],
        ])?;
        gens.push((format!("g{}", i + 1), g));
    }
    gens.push((
        "g3".into(),
        ProjTransform::from_rows([[ONE, ZERO, r(central)], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]])?,
    ));
    let group = GroupSpec {
        generators: gens.into_iter().map(|(name, matrix)| crate::actions::Generator { name, matrix }).collect(),
        point: Some(ProjPoint::basis(0)),
        line: Some(line23()),
    };
    let (family, membership) = group_sol_family(&group);
    Ok(InoueSn {
        group,
        sign: p.sign,
        alpha,
        a,
        b,
        central_translation: central,
        family,
        membership,
        integrability_unchecked: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFormCheck {
    pub depth: usize,
    pub kernel_trivial: bool,
    pub reports: Vec<KernelFormReport>,
    pub ok: bool,
}

/// Writes every kernel word of the control projection found up to
/// `max_len` in the frame `p, u1, u2` and compares it with the translation
/// `[[1, 0, tau], [0, 1, 0], [0, 0, 1]]`, `tau != 0`.
pub fn kernel_form_check(spec: &GroupSpec, max_len: usize) -> Result<KernelFormCheck> {
    let frame = control_frame(spec)?;
    let proj = control_projection(spec, max_len)?;
    let h = Mat3::from_columns(&[frame.basis.column(2), frame.basis.column(0), frame.basis.column(1)]);
    let h_inv = h.try_inverse().ok_or(Error::Singular)?;
    let reports: Vec<KernelFormReport> = proj
        .kernel
        .iter()
        .map(|k| {
            let m = h_inv * k.matrix.lift() * h;
            let m = m / m[(1, 1)];
            let expected = Mat3::new(ONE, ZERO, m[(0, 2)], ZERO, ONE, ZERO, ZERO, ZERO, ONE);
            let deviation = (m - expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let tau = m[(0, 2)];
            KernelFormReport {
                word: k.display.clone(),
                tau: json::from_cpx(tau),
                deviation,
                ok: deviation <= 1e-9 && tau.norm() > 1e-9,
            }
        })
        .collect();
    Ok(KernelFormCheck {
        depth: max_len,
        kernel_trivial: reports.is_empty(),
        ok: reports.iter().all(|r| r.ok),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::{classify, ElementClass};

    #[test]
    fn gamma_a_examples() {
        let ma = |e| (0usize, e);
        let b = |e| (1usize, e);
        let nf = |l: Vec<(usize, i8)>| gamma_a_normal_form(&Word { letters: l }).unwrap();
        let f = nf(vec![ma(1), b(1), ma(1)]);
        assert_eq!((f.k, f.exponents, f.n), (1, [2, -1, -1], [0, -1, 0]));
        assert_eq!(nf(vec![b(1), b(1), b(1)]), GammaANormalForm::identity());
        let f = nf(vec![ma(1)]);
        assert_eq!((f.k, f.exponents, f.n), (0, [1, 1, -2], [1, 0, 0]));
        let a = cx(1.3, 0.4);
        let g = make_gamma_a(a).unwrap().group.matrices();
        let w = Word { letters: vec![ma(1), b(-1), ma(-1), b(1), b(1), ma(1)] };
        assert!(nf(w.letters.clone()).matrix(a).unwrap().proj_eq(&w.evaluate(&g), 1e-9));
    }

    #[test]
    fn kissing_spectral_data() {
        let k = make_kissing_schottky(&KissingParams::default(), 3).unwrap();
        let d = &k.diagnostics;
        assert!(d.char_poly_residuals.iter().all(|&r| r <= 1e-9), "{:?}", d.char_poly_residuals);
        assert!(d.eigenvector_residuals.iter().all(|&r| r <= 1e-8), "{:?}", d.eigenvector_residuals);
        assert!(!d.rational_theta && !d.degenerate);
        let km = json::to_cpx(d.k_minus);
        let kp = json::to_cpx(d.k_plus);
        assert!((km - cx(-3.7548, -0.3382)).norm() < 1e-3, "{km}");
        assert!((kp - cx(-0.36987, 0.07248)).norm() < 1e-4, "{kp}");
        let me = k.group.generators[2].matrix;
        assert_eq!(classify(&me).class, ElementClass::DiagEqualModuliIrrational);
        let p1 = ProjPoint::new([cx(-10f64.sqrt(), 0.0), ONE, km]).unwrap();
        let l = line_through(&p1, &ProjPoint::basis(2)).unwrap();
        assert!(me.apply_line(&l).approx_eq(&l, 1e-8));
    }

    #[test]
    fn kissing_degenerate_and_rational() {
        let p = KissingParams { theta: 0.25, eps2: [0.0, 0.0], eps3: [0.0, 0.0] };
        let d = make_kissing_schottky(&p, 2).unwrap().diagnostics;
        assert!(d.degenerate && d.rational_theta);
        assert_eq!(d.warnings.len(), 2);
    }

    fn companion() -> [[i64; 3]; 3] {
        [[0, 0, 1], [1, 0, 1], [0, 1, 0]]
    }

    #[test]
    fn inoue_sm() {
        let s = make_inoue_sm(&companion()).unwrap();
        assert!((s.alpha - 1.324717957244746).abs() < 1e-12);
        assert_eq!(s.family, SolFamily::Sol40);
        assert!(s.membership.iter().all(|m| m.roundtrip <= TAU_SOL));
        let id = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        assert!(matches!(make_inoue_sm(&id), Err(Error::SpectrumMismatch(_))));
        let proj = control_projection(&s.group, 0).unwrap();
        for (_, m) in &proj.generators {
            let l = m.lift();
            let phase = l.iter().fold(ZERO, |acc, z| if z.norm() > acc.norm() { *z } else { acc });
            let r = l / (phase / phase.norm());
            assert!(r.iter().all(|z| z.im.abs() < 1e-12), "{r}");
        }
        let k = kernel_form_check(&s.group, 4).unwrap();
        assert!(k.kernel_trivial);
    }

    #[test]
    fn inoue_sn() {
        let p = InoueSnParams { n: [[2, 1], [1, 1]], r: 1, t: [0.0, 0.0], c: [[0.0, 0.0]; 2], sign: Sign::Plus };
        let s = make_inoue_sn(&p).unwrap();
        assert_eq!(s.family, SolFamily::Sol41);
        assert!((s.alpha - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        let g3 = s.group.generators[3].matrix.lift();
        let tau = (g3[(0, 2)] / g3[(2, 2)]).re;
        assert!((tau - (s.b[0] * s.a[1] - s.b[1] * s.a[0])).abs() < 1e-10);
        let rot = InoueSnParams { n: [[0, -1], [1, 0]], ..p };
        assert!(matches!(make_inoue_sn(&rot), Err(Error::SpectrumMismatch(_))));
        let minus = InoueSnParams { n: [[1, 1], [1, 0]], sign: Sign::Minus, ..p };
        assert_eq!(make_inoue_sn(&minus).unwrap().family, SolFamily::Sol41);
    }

    #[test]
    fn kernel_translation_detected() {
        let tr = ProjTransform::from_real_rows([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let d = ProjTransform::diag(ONE, cx(2.0, 0.0), ONE).unwrap();
        let spec = GroupSpec::new(vec![("T", tr), ("D", d)]).unwrap().with_control(ProjPoint::basis(0), line23());
        let k = kernel_form_check(&spec, 3).unwrap();
        assert!(!k.kernel_trivial && k.ok);
        assert!(k.reports.iter().any(|r| r.word == "T" && (json::to_cpx(r.tau) - ONE).norm() < 1e-12));
    }

    #[test]
    fn suspension_predictions() {
        let h = MobiusMap::from_coeffs(cx(2.0, 0.0), ZERO, ZERO, cx(0.5, 0.0)).unwrap();
        let fin = make_suspension(&[h], &[-ONE], 2).unwrap();
        assert!(!fin.scalar_group_infinite && fin.prediction.extra_lines.is_empty());
        assert_eq!(fin.group.generators.len(), 2);
        let inf = make_suspension(&[h], &[cx(2.0, 0.0)], 2).unwrap();
        assert!(inf.scalar_group_infinite && inf.prediction.extra_lines.len() == 1);
        let triv = make_suspension(&[], &[ONE], 2).unwrap();
        assert!(triv.prediction_empty);
    }

    #[test]
    fn sol_roundtrip() {
        let g = ProjTransform::from_rows([
            [ONE, cx(0.5, 0.0), cx(0.25, 3f64.ln())],
            [ZERO, cx(3.0, 0.0), cx(-1.0, 0.0)],
            [ZERO, ZERO, ONE],
        ])
        .unwrap();
        let m = sol_membership(&g);
        assert_eq!(m.family, SolFamily::Sol41Prime);
        assert!(m.roundtrip <= TAU_SOL);
        let bad = ProjTransform::from_real_rows([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(sol_membership(&bad).family, SolFamily::None);
    }
}
