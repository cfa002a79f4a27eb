//! Eigenstructure and Jordan type of unimodular 3x3 complex matrices, and
//! detection of roots of unity among unit-modulus eigenvalues.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::projective::{cx, Cpx, Mat3, ProjTransform, Vec3, ONE, ZERO};

/// Relative radius within which computed roots are candidates for merging.
pub const CLUSTER_RADIUS: f64 = 1e-4;
/// Relative singular-value threshold confirming a repeated eigenvalue and
/// deciding numerical rank.
pub const TAU_RANK: f64 = 1e-8;
/// Bases with a larger condition number are flagged.
pub const COND_LIMIT: f64 = 1e10;

/// Jordan block pattern of a 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JordanShape {
    Diag,
    #[serde(rename = "BLOCK2_PLUS_1")]
    Block2Plus1,
    Block3,
}

/// Eigenvalues, a Jordan basis and diagnostics.
///
/// The columns of `basis` are ordered as the Jordan matrix `jordan` is:
/// for `Diag` they follow `eigenvalues`; for `Block2Plus1` they are the
/// eigenvector and generalized eigenvector of the repeated eigenvalue, then
/// the eigenvector of the simple one; for `Block3` they form a chain
/// `N^2 v, N v, v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    /// Sorted by modulus, then by argument in `(-pi, pi]`.
    pub eigenvalues: [Cpx; 3],
    pub basis: Mat3,
    pub jordan: Mat3,
    pub shape: JordanShape,
    /// Multiplicity pattern of the clustered eigenvalues, e.g. `[1, 1, 1]`.
    pub multiplicities: Vec<usize>,
    /// `|A P - P J|_inf / |A|_inf`.
    pub residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
    /// Singular value that decided the rank of a repeated eigenvalue,
    /// relative to `|A|_inf`; zero when every eigenvalue is simple.
    pub rank_residual: f64,
}

impl EigenData {
    /// Diagonal of the Jordan matrix, i.e. the eigenvalue of each column.
    pub fn column_values(&self) -> [Cpx; 3] {
        [self.jordan[(0, 0)], self.jordan[(1, 1)], self.jordan[(2, 2)]]
    }

    pub fn column(&self, k: usize) -> Vec3 {
        self.basis.column(k).into_owned()
    }
}

/// Forces the rank decision for a repeated eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankChoice {
    Auto,
    /// Treat the repeated eigenvalue as semisimple.
    Semisimple,
    /// Treat it as carrying a nontrivial Jordan block.
    Defective,
}

/// Infinity norm (largest absolute row sum).
pub fn norm_inf(m: &Mat3) -> f64 {
    (0..3)
        .map(|r| (0..3).map(|c| m[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Coefficients `[1, c2, c1, c0]` of the monic characteristic polynomial
/// `det(t I - A) = t^3 + c2 t^2 + c1 t + c0`; for a unimodular lift
/// `c0 = -1`.
pub fn char_poly(g: &ProjTransform) -> [Cpx; 4] {
    char_poly_of(g.lift())
}

pub fn char_poly_of(a: &Mat3) -> [Cpx; 4] {
    let tr = a.trace();
    let m2 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
        - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)];
    [ONE, -tr, m2, -a.determinant()]
}

pub fn eval_poly(c: &[Cpx; 4], t: Cpx) -> Cpx {
    ((c[0] * t + c[1]) * t + c[2]) * t + c[3]
}

fn eval_deriv(c: &[Cpx; 4], t: Cpx) -> Cpx {
    (c[0] * 3.0 * t + c[1] * 2.0) * t + c[2]
}

/// Roots of a monic cubic by Cardano's formula, each refined by one Newton
/// step when that step lowers the residual.
pub fn cubic_roots(c: &[Cpx; 4]) -> [Cpx; 3] {
    let (b, cc, d) = (c[1], c[2], c[3]);
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = b * b * b * (2.0 / 27.0) - b * cc / 3.0 + d;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let sq = disc.sqrt();
    let s1 = -q / 2.0 + sq;
    let s2 = -q / 2.0 - sq;
    let s = if s1.norm() >= s2.norm() { s1 } else { s2 };
    let omega = Cpx::from_polar(1.0, 2.0 * PI / 3.0);
    let mut roots = [ZERO; 3];
    if s.norm() == 0.0 {
        roots = [-shift; 3];
    } else {
        let u = s.cbrt();
        let mut w = ONE;
        for r in roots.iter_mut() {
            let uk = u * w;
            *r = uk - p / (uk * 3.0) - shift;
            w *= omega;
        }
    }
    for r in roots.iter_mut() {
        let f = eval_poly(c, *r);
        let df = eval_deriv(c, *r);
        if df.norm() > 0.0 {
            let cand = *r - f / df;
            if cand.re.is_finite() && cand.im.is_finite() && eval_poly(c, cand).norm() < f.norm() {
                *r = cand;
            }
        }
    }
    roots
}

/// Order by modulus (ties within a relative 1e-9) and then by argument.
pub fn eigen_order(a: &Cpx, b: &Cpx) -> Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > 1e-9 * ma.max(mb).max(1e-300) {
        return ma.partial_cmp(&mb).unwrap_or(Ordering::Equal);
    }
    a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal)
}

fn sort3(v: &mut [Cpx; 3]) {
    for i in 1..3 {
        let mut j = i;
        while j > 0 && eigen_order(&v[j], &v[j - 1]) == Ordering::Less {
            v.swap(j, j - 1);
            j -= 1;
        }
    }
}

/// Singular values in decreasing order with matching left and right
/// singular vectors (as columns of `u` and `v`).
pub(crate) fn svd_sorted(m: &Mat3) -> (Mat3, [f64; 3], Mat3) {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let v = svd.v_t.unwrap().adjoint();
    let s = svd.singular_values;
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(Ordering::Equal));
    let us = Mat3::from_fn(|r, c| u[(r, idx[c])]);
    let vs = Mat3::from_fn(|r, c| v[(r, idx[c])]);
    (us, [s[idx[0]], s[idx[1]], s[idx[2]]], vs)
}

fn col(m: &Mat3, k: usize) -> Vec3 {
    m.column(k).into_owned()
}

fn shifted(a: &Mat3, mu: Cpx) -> Mat3 {
    a - Mat3::identity() * mu
}

fn null_vector(a: &Mat3, mu: Cpx) -> Vec3 {
    col(&svd_sorted(&shifted(a, mu)).2, 2)
}

/// Clusters of root indices; roots closer than `CLUSTER_RADIUS * scale`
/// merge only if `A - mean` is numerically singular at `TAU_RANK * scale`.
fn clusters(a: &Mat3, roots: &[Cpx; 3], scale: f64) -> Vec<Vec<usize>> {
    let close = |i: usize, j: usize| (roots[i] - roots[j]).norm() <= CLUSTER_RADIUS * scale;
    let singular = |idx: &[usize]| {
        let mu = idx.iter().map(|&i| roots[i]).sum::<Cpx>() / idx.len() as f64;
        svd_sorted(&shifted(a, mu)).1[2] <= TAU_RANK * scale
    };
    let all = [0usize, 1, 2];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let n_close = pairs.iter().filter(|&&(i, j)| close(i, j)).count();
    if n_close >= 2 && singular(&all) {
        return vec![all.to_vec()];
    }
    let mut best: Option<(usize, usize)> = None;
    for &(i, j) in &pairs {
        if close(i, j) && singular(&[i, j]) {
            let d = (roots[i] - roots[j]).norm();
            if best.map_or(true, |(bi, bj)| d < (roots[bi] - roots[bj]).norm()) {
                best = Some((i, j));
            }
        }
    }
    match best {
        Some((i, j)) => {
            let k = 3 - i - j;
            vec![vec![i, j], vec![k]]
        }
        None => vec![vec![0], vec![1], vec![2]],
    }
}

struct Raw {
    columns: [Vec3; 3],
    values: [Cpx; 3],
    superdiag: [bool; 2],
    shape: JordanShape,
    multiplicities: Vec<usize>,
    rank_residual: f64,
}

/// Jordan decomposition of the unimodular lift of `g`.
pub fn eigen_decompose(g: &ProjTransform) -> EigenData {
    eigen_decompose_with(g.lift(), RankChoice::Auto)
}

/// Both decompositions when the rank decision for a repeated eigenvalue is
/// within three orders of magnitude of the threshold; otherwise only the
/// automatic one.
pub fn eigen_decompose_hedged(g: &ProjTransform) -> Vec<EigenData> {
    let auto = eigen_decompose(g);
    let r = auto.rank_residual;
    if auto.multiplicities.len() < 3 && r > TAU_RANK * 1e-3 && r < TAU_RANK * 1e3 {
        let other = match auto.shape {
            JordanShape::Diag => RankChoice::Defective,
            _ => RankChoice::Semisimple,
        };
        let alt = eigen_decompose_with(g.lift(), other);
        if alt.shape != auto.shape {
            return vec![auto, alt];
        }
    }
    vec![auto]
}

pub fn eigen_decompose_with(a: &Mat3, choice: RankChoice) -> EigenData {
    let scale = norm_inf(a).max(f64::MIN_POSITIVE);
    let roots = cubic_roots(&char_poly_of(a));
    let groups = clusters(a, &roots, scale);
    let raw = match groups.len() {
        3 => simple_basis(a, &roots),
        2 => double_basis(a, &roots, &groups, scale, choice),
        _ => triple_basis(a, scale, choice),
    };
    finish(a, raw, scale)
}

fn simple_basis(a: &Mat3, roots: &[Cpx; 3]) -> Raw {
    let mut values = *roots;
    sort3(&mut values);
    Raw {
        columns: values.map(|mu| null_vector(a, mu)),
        values,
        superdiag: [false, false],
        shape: JordanShape::Diag,
        multiplicities: vec![1, 1, 1],
        rank_residual: 0.0,
    }
}

fn double_basis(a: &Mat3, roots: &[Cpx; 3], groups: &[Vec<usize>], scale: f64, choice: RankChoice) -> Raw {
    let nu = roots[groups[1][0]];
    // a repeated root is only resolved to about sqrt(eps) by the cubic
    // formula; the trace gives it to rounding accuracy
    let mu = (a.trace() - nu) / 2.0;
    let n = shifted(a, mu);
    let (_, s, v) = svd_sorted(&n);
    let rank_residual = s[1] / scale;
    let semisimple = match choice {
        RankChoice::Auto => s[1] <= TAU_RANK * scale,
        RankChoice::Semisimple => true,
        RankChoice::Defective => false,
    };
    let v3 = null_vector(a, nu);
    if semisimple {
        let mut values = [mu, mu, nu];
        sort3(&mut values);
        let mut k = 0;
        let columns = values.map(|val| {
            if val == nu {
                v3
            } else {
                k += 1;
                col(&v, k)
            }
        });
        Raw {
            columns,
            values,
            superdiag: [false, false],
            shape: JordanShape::Diag,
            multiplicities: vec![2, 1],
            rank_residual,
        }
    } else {
        let n2 = n * n;
        let (_, _, v2s) = svd_sorted(&n2);
        let kernel = nalgebra::Matrix3x2::from_columns(&[col(&v2s, 1), col(&v2s, 2)]);
        let nk = n * kernel;
        let svd = nk.svd(false, true);
        let vt = svd.v_t.unwrap();
        let sv = svd.singular_values;
        let top = if sv[0] >= sv[1] { 0 } else { 1 };
        let coeff = nalgebra::Vector2::new(vt[(top, 0)].conj(), vt[(top, 1)].conj());
        let gen = kernel * coeff;
        let eig = n * gen;
        Raw {
            columns: [eig, gen, v3],
            values: [mu, mu, nu],
            superdiag: [true, false],
            shape: JordanShape::Block2Plus1,
            multiplicities: vec![2, 1],
            rank_residual,
        }
    }
}

fn triple_basis(a: &Mat3, scale: f64, choice: RankChoice) -> Raw {
    let mu = a.trace() / 3.0;
    let n = shifted(a, mu);
    let (_, s, v) = svd_sorted(&n);
    let rank = if s[0] <= TAU_RANK * scale {
        0
    } else if s[1] <= TAU_RANK * scale {
        1
    } else {
        2
    };
    let rank = match choice {
        RankChoice::Auto => rank,
        RankChoice::Semisimple => 0,
        RankChoice::Defective => rank.max(1),
    };
    let rank_residual = match rank {
        0 => s[0],
        1 => s[1],
        _ => s[1],
    } / scale;
    let values = [mu; 3];
    match rank {
        0 => Raw {
            columns: [0, 1, 2].map(|k| {
                let mut e = Vec3::zeros();
                e[k] = ONE;
                e
            }),
            values,
            superdiag: [false, false],
            shape: JordanShape::Diag,
            multiplicities: vec![3],
            rank_residual,
        },
        1 => {
            let gen = col(&v, 0);
            let eig = n * gen;
            let e = eig.normalize();
            // kernel vector orthogonal to the chain eigenvector
            let k1 = col(&v, 1);
            let k2 = col(&v, 2);
            let c1 = e.dotc(&k1);
            let c2 = e.dotc(&k2);
            let third = if c1.norm() <= c2.norm() { k1 - e * c1 } else { k2 - e * c2 };
            Raw {
                columns: [eig, gen, third],
                values,
                superdiag: [true, false],
                shape: JordanShape::Block2Plus1,
                multiplicities: vec![3],
                rank_residual,
            }
        }
        _ => {
            let (_, _, v2) = svd_sorted(&(n * n));
            let top = col(&v2, 0);
            let mid = n * top;
            let bottom = n * mid;
            Raw {
                columns: [bottom, mid, top],
                values,
                superdiag: [true, true],
                shape: JordanShape::Block3,
                multiplicities: vec![3],
                rank_residual,
            }
        }
    }
}

fn finish(a: &Mat3, raw: Raw, scale: f64) -> EigenData {
    let norms = raw.columns.map(|c| c.norm().max(f64::MIN_POSITIVE));
    let basis = Mat3::from_fn(|r, c| raw.columns[c][r] / norms[c]);
    let mut jordan = Mat3::from_diagonal(&Vec3::new(raw.values[0], raw.values[1], raw.values[2]));
    for k in 0..2 {
        if raw.superdiag[k] {
            jordan[(k, k + 1)] = cx(norms[k] / norms[k + 1], 0.0);
        }
    }
    let residual = norm_inf(&(a * basis - basis * jordan)) / scale;
    let (_, s, _) = svd_sorted(&basis);
    let condition = if s[2] > 0.0 { s[0] / s[2] } else { f64::INFINITY };
    let mut eigenvalues = raw.values;
    sort3(&mut eigenvalues);
    EigenData {
        eigenvalues,
        basis,
        jordan,
        shape: raw.shape,
        multiplicities: raw.multiplicities,
        residual,
        condition,
        ill_conditioned: !(condition <= COND_LIMIT),
        rank_residual: raw.rank_residual,
    }
}

/// Root-of-unity status of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RotationClass {
    Torsion { order: u64 },
    Irrational,
    NotUnitModulus,
}

/// Rotation status together with the residual that decided it: for
/// `Torsion(q)` the value `|l^q - 1|`, for `Irrational` the smallest such
/// residual over the denominators examined, and `||l| - 1|` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationKind {
    #[serde(flatten)]
    pub class: RotationClass,
    pub residual: f64,
}

impl RotationKind {
    pub fn is_torsion(&self) -> bool {
        matches!(self.class, RotationClass::Torsion { .. })
    }

    pub fn is_unit(&self) -> bool {
        !matches!(self.class, RotationClass::NotUnitModulus)
    }
}

/// Tolerances for rotation detection, plus optional exact rotation data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationConfig {
    pub q_max: u64,
    pub tau_rot: f64,
    pub tau_unit: f64,
    /// When present, unit-modulus scalars are matched against these angles
    /// (as fractions `p/q` of a full turn) within `EXACT_MATCH`; a match is
    /// torsion of order `q / gcd(p, q)` and anything else is irrational.
    pub exact: Option<Vec<(i64, i64)>>,
}

/// Angular tolerance (in turns) for matching exact rotation hints.
pub const EXACT_MATCH: f64 = 1e-6;

impl Default for RotationConfig {
    fn default() -> Self {
        Self { q_max: 720, tau_rot: 1e-9, tau_unit: 1e-8, exact: None }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Distance from `x` to the nearest integer.
fn dist_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// `|e^{2 pi i q x} - 1|` computed from the fractional part.
fn unit_residual(x: f64, q: u64) -> f64 {
    2.0 * (PI * dist_int(q as f64 * x)).sin()
}

/// Classifies `l` with the default tolerances and the given `q_max`.
pub fn rotation_kind(l: Cpx, q_max: u64) -> RotationKind {
    rotation_kind_with(l, &RotationConfig { q_max, ..RotationConfig::default() })
}

pub fn rotation_kind_with(l: Cpx, cfg: &RotationConfig) -> RotationKind {
    let modulus = l.norm();
    if (modulus - 1.0).abs() > cfg.tau_unit {
        return RotationKind { class: RotationClass::NotUnitModulus, residual: (modulus - 1.0).abs() };
    }
    let x = (l.arg() / (2.0 * PI)).rem_euclid(1.0);
    if let Some(hints) = &cfg.exact {
        for &(p, q) in hints {
            if q == 0 {
                continue;
            }
            let frac = p as f64 / q as f64;
            if dist_int(x - frac) <= EXACT_MATCH {
                let order = (q / gcd(p, q)).unsigned_abs();
                return RotationKind {
                    class: RotationClass::Torsion { order },
                    residual: unit_residual(x, order),
                };
            }
        }
        return RotationKind { class: RotationClass::Irrational, residual: f64::NAN };
    }
    // Continued-fraction convergents: the first denominator whose residual
    // passes the threshold is the order, since convergents are exactly the
    // record minimizers of the distance of q x to the integers.
    let mut best = f64::INFINITY;
    let (mut q_prev, mut q_cur) = (0u64, 1u64);
    let mut y = x;
    loop {
        let r = unit_residual(x, q_cur);
        if r <= cfg.tau_rot {
            return RotationKind { class: RotationClass::Torsion { order: q_cur }, residual: r };
        }
        best = best.min(r);
        let frac = y - y.floor();
        if frac < 1e-15 {
            break;
        }
        y = 1.0 / frac;
        let a = y.floor();
        if !a.is_finite() || a > 1e15 {
            break;
        }
        let next = (a as u64).saturating_mul(q_cur).saturating_add(q_prev);
        if next > cfg.q_max || next == 0 {
            break;
        }
        q_prev = q_cur;
        q_cur = next;
    }
    RotationKind { class: RotationClass::Irrational, residual: best }
}
