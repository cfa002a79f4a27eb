//! Homogeneous coordinates on the complex projective plane and line.
//!
//! Points and lines of P^2 are stored as unit triples whose first
//! significant coordinate is real and positive, so that comparison and
//! hashing are deterministic. Projective maps keep a unimodular lift.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Cpx = Complex64;
pub type Mat3 = Matrix3<Cpx>;
pub type Mat2 = Matrix2<Cpx>;
pub type Vec3 = Vector3<Cpx>;
pub type Vec2 = Vector2<Cpx>;

/// Coordinates below this modulus count as zero.
pub const TAU_ZERO: f64 = 1e-12;
/// Default tolerance for projective comparison of canonical forms.
pub const TAU_CMP: f64 = 1e-9;

pub const ZERO: Cpx = Cpx::new(0.0, 0.0);
pub const ONE: Cpx = Cpx::new(1.0, 0.0);
pub const I: Cpx = Cpx::new(0.0, 1.0);

/// Shorthand constructor for complex scalars.
pub fn cx(re: f64, im: f64) -> Cpx {
    Cpx::new(re, im)
}

fn finite(z: &Cpx) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn norm_of(v: &[Cpx]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn pivot_of(v: &[Cpx]) -> Option<usize> {
    v.iter().position(|z| z.norm() > TAU_ZERO)
}

fn is_canonical(v: &[Cpx]) -> bool {
    let n = norm_of(v);
    if (n - 1.0).abs() > 4.0 * f64::EPSILON {
        return false;
    }
    match pivot_of(v) {
        Some(k) => v[k].im == 0.0 && v[k].re > 0.0,
        None => false,
    }
}

/// Unit norm, first coordinate above `TAU_ZERO` rotated to the positive
/// real axis. Idempotent bit for bit.
fn canonical<const N: usize>(v: [Cpx; N]) -> Result<[Cpx; N]> {
    if !v.iter().all(finite) {
        return Err(Error::NonFinite);
    }
    let n = norm_of(&v);
    if n <= TAU_ZERO {
        return Err(Error::ZeroVector);
    }
    if is_canonical(&v) {
        return Ok(v);
    }
    let mut w = v.map(|z| z / n);
    let k = pivot_of(&w).ok_or(Error::ZeroVector)?;
    let phase = w[k].conj() / w[k].norm();
    for z in w.iter_mut() {
        *z *= phase;
    }
    w[k].im = 0.0;
    Ok(w)
}

/// Rescales by the largest modulus first, so that directions with tiny or
/// huge coordinates are not mistaken for the zero vector.
fn canonical_direction<const N: usize>(v: [Cpx; N]) -> Result<[Cpx; N]> {
    if !v.iter().all(finite) {
        return Err(Error::NonFinite);
    }
    let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return Err(Error::ZeroVector);
    }
    canonical(v.map(|z| z / m))
}

/// Hermitian inner product `sum conj(a_i) b_i`.
pub fn hdot(a: &[Cpx], b: &[Cpx]) -> Cpx {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear pairing `sum a_i b_i` used for incidence of points and lines.
pub fn bdot(a: &[Cpx], b: &[Cpx]) -> Cpx {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Complex (bilinear) cross product.
pub fn cross(a: &[Cpx; 3], b: &[Cpx; 3]) -> [Cpx; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Largest coordinate difference after aligning the phase of `b` to `a`.
/// Both inputs are expected to be unit vectors.
pub fn phase_aligned_diff(a: &[Cpx], b: &[Cpx]) -> f64 {
    let ip = hdot(a, b);
    let phase = if ip.norm() > 0.0 { ip.conj() / ip.norm() } else { ONE };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}

/// Relative deviation between two matrices viewed projectively: both are
/// scaled to unit Frobenius norm, the phase of the second is aligned to
/// the first, and the largest entrywise difference is returned.
pub fn projective_deviation(a: &[Cpx], b: &[Cpx]) -> f64 {
    let na = norm_of(a);
    let nb = norm_of(b);
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { f64::INFINITY };
    }
    let ua: Vec<Cpx> = a.iter().map(|z| z / na).collect();
    let ub: Vec<Cpx> = b.iter().map(|z| z / nb).collect();
    phase_aligned_diff(&ua, &ub)
}

pub(crate) fn vec3(v: &[Cpx; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

pub(crate) fn arr3(v: &Vec3) -> [Cpx; 3] {
    [v[0], v[1], v[2]]
}

pub(crate) fn mat2_entries(m: &Mat2) -> [Cpx; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// JSON shapes: complex numbers are `[re, im]`, matrices row-major.
pub mod json {
    use super::*;

    pub type CpxRepr = [f64; 2];
    pub type Triple = [CpxRepr; 3];
    pub type Mat3Repr = [[CpxRepr; 3]; 3];
    pub type Mat2Repr = [[CpxRepr; 2]; 2];

    pub fn from_cpx(z: Cpx) -> CpxRepr {
        [z.re, z.im]
    }

    pub fn to_cpx(r: CpxRepr) -> Cpx {
        Cpx::new(r[0], r[1])
    }

    pub fn from_mat3(m: &Mat3) -> Mat3Repr {
        let mut out = [[[0.0; 2]; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e = from_cpx(m[(r, c)]);
            }
        }
        out
    }

    pub fn to_mat3(r: &Mat3Repr) -> Mat3 {
        Mat3::from_fn(|i, j| to_cpx(r[i][j]))
    }

    pub fn from_mat2(m: &Mat2) -> Mat2Repr {
        [
            [from_cpx(m[(0, 0)]), from_cpx(m[(0, 1)])],
            [from_cpx(m[(1, 0)]), from_cpx(m[(1, 1)])],
        ]
    }

    pub fn to_mat2(r: &Mat2Repr) -> Mat2 {
        Mat2::from_fn(|i, j| to_cpx(r[i][j]))
    }
}

/// A point of P^2 in canonical homogeneous form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "json::Triple", try_from = "json::Triple")]
pub struct ProjPoint {
    coords: [Cpx; 3],
}

impl ProjPoint {
    /// Fails with `ZeroVector` when every coordinate is below `TAU_ZERO`.
    pub fn new(coords: [Cpx; 3]) -> Result<Self> {
        Ok(Self { coords: canonical(coords)? })
    }

    /// Scale-free constructor for computed directions.
    pub fn from_direction(coords: [Cpx; 3]) -> Result<Self> {
        Ok(Self { coords: canonical_direction(coords)? })
    }

    pub fn from_vec(v: &Vec3) -> Result<Self> {
        Self::from_direction(arr3(v))
    }

    pub fn real(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new([cx(x, 0.0), cx(y, 0.0), cx(z, 0.0)])
    }

    /// Standard basis point `e_{k+1}`.
    pub fn basis(k: usize) -> Self {
        let mut c = [ZERO; 3];
        c[k] = ONE;
        Self { coords: c }
    }

    pub fn coords(&self) -> &[Cpx; 3] {
        &self.coords
    }

    pub fn to_vec(&self) -> Vec3 {
        vec3(&self.coords)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        phase_aligned_diff(&self.coords, &other.coords) <= tol
    }

    /// Index of the coordinate of largest modulus (the affine chart used for
    /// plotting and cell hashing).
    pub fn dominant_chart(&self) -> usize {
        let mut k = 0;
        for i in 1..3 {
            if self.coords[i].norm() > self.coords[k].norm() {
                k = i;
            }
        }
        k
    }

    /// Affine coordinates in the given chart, in increasing index order of
    /// the remaining coordinates.
    pub fn affine(&self, chart: usize) -> [Cpx; 2] {
        let d = self.coords[chart];
        let mut out = [ZERO; 2];
        let mut j = 0;
        for i in 0..3 {
            if i != chart {
                out[j] = self.coords[i] / d;
                j += 1;
            }
        }
        out
    }
}

impl From<ProjPoint> for json::Triple {
    fn from(p: ProjPoint) -> Self {
        p.coords.map(json::from_cpx)
    }
}

impl TryFrom<json::Triple> for ProjPoint {
    type Error = Error;
    fn try_from(t: json::Triple) -> Result<Self> {
        ProjPoint::new(t.map(json::to_cpx))
    }
}

/// A line of P^2 stored through its dual coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "json::Triple", try_from = "json::Triple")]
pub struct ProjLine {
    dual: [Cpx; 3],
}

impl ProjLine {
    pub fn new(dual: [Cpx; 3]) -> Result<Self> {
        Ok(Self { dual: canonical(dual)? })
    }

    pub fn from_direction(dual: [Cpx; 3]) -> Result<Self> {
        Ok(Self { dual: canonical_direction(dual)? })
    }

    pub fn dual(&self) -> &[Cpx; 3] {
        &self.dual
    }

    /// Incidence residual `|<dual, x>|` of unit representatives.
    pub fn incidence(&self, p: &ProjPoint) -> f64 {
        bdot(&self.dual, p.coords()).norm()
    }

    pub fn contains(&self, p: &ProjPoint, tol: f64) -> bool {
        self.incidence(p) <= tol
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        phase_aligned_diff(&self.dual, &other.dual) <= tol
    }

    /// Orthonormal basis `(a, b)` of the two-dimensional subspace.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let n = vec3(&self.dual).map(|z| z.conj());
        // points of the line are Hermitian-orthogonal to conj(dual)
        let k = (0..3)
            .min_by(|&i, &j| n[i].norm().partial_cmp(&n[j].norm()).unwrap())
            .unwrap();
        let mut e = Vec3::zeros();
        e[k] = ONE;
        let a = (e - n * n.dotc(&e)).normalize();
        let b = vec3(&cross(&arr3(&n.map(|z| z.conj())), &arr3(&a.map(|z| z.conj()))))
            .map(|z| z.conj());
        let b = (b - n * n.dotc(&b) - a * a.dotc(&b)).normalize();
        (a, b)
    }

    /// Quasi-uniform sample of `count` points along the line.
    pub fn sample(&self, count: usize) -> Vec<ProjPoint> {
        let (a, b) = self.basis();
        fibonacci_sphere(count)
            .into_iter()
            .filter_map(|(theta, phi)| {
                let v = a * cx((theta / 2.0).cos(), 0.0) + b * Cpx::from_polar((theta / 2.0).sin(), phi);
                ProjPoint::from_vec(&v).ok()
            })
            .collect()
    }
}

impl From<ProjLine> for json::Triple {
    fn from(l: ProjLine) -> Self {
        l.dual.map(json::from_cpx)
    }
}

impl TryFrom<json::Triple> for ProjLine {
    type Error = Error;
    fn try_from(t: json::Triple) -> Result<Self> {
        ProjLine::new(t.map(json::to_cpx))
    }
}

/// Polar and azimuthal angles of a Fibonacci lattice on the unit sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            (z.clamp(-1.0, 1.0).acos(), (golden * i as f64).rem_euclid(2.0 * PI))
        })
        .collect()
}

/// The unique line through two distinct points (complex cross product).
pub fn line_through(p: &ProjPoint, q: &ProjPoint) -> Result<ProjLine> {
    let d = cross(p.coords(), q.coords());
    if norm_of(&d) <= TAU_CMP {
        return Err(Error::CoincidentPoints);
    }
    ProjLine::from_direction(d)
}

/// The intersection point of two distinct lines.
pub fn meet(l1: &ProjLine, l2: &ProjLine) -> Result<ProjPoint> {
    let p = cross(l1.dual(), l2.dual());
    if norm_of(&p) <= TAU_CMP {
        return Err(Error::CoincidentLines);
    }
    ProjPoint::from_direction(p)
}

/// Fubini–Study distance in `[0, pi/2]`.
pub fn fs_distance(x: &ProjPoint, y: &ProjPoint) -> f64 {
    let s = norm_of(&cross(x.coords(), y.coords()));
    let c = hdot(x.coords(), y.coords()).norm();
    s.atan2(c)
}

/// Fubini–Study distance from a point to a line.
pub fn fs_distance_to_line(x: &ProjPoint, l: &ProjLine) -> f64 {
    l.incidence(x).min(1.0).asin()
}

/// Element of PSL(3,C) carried by a lift of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "json::Mat3Repr", try_from = "json::Mat3Repr")]
pub struct ProjTransform {
    lift: Mat3,
    /// Factor the raw input was multiplied by (principal `det^{-1/3}`).
    #[serde(skip)]
    scale: Cpx,
}

impl ProjTransform {
    /// Normalizes the input by the principal cube root of its determinant.
    /// Inputs already unimodular within 1e-12 are kept bit for bit.
    pub fn new(m: Mat3) -> Result<Self> {
        if !m.iter().all(finite) {
            return Err(Error::NonFinite);
        }
        let det = m.determinant();
        let scale_ref = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if det.norm() <= 1e-14 * scale_ref.powi(3) || det.norm() == 0.0 {
            return Err(Error::Singular);
        }
        if (det - ONE).norm() <= 1e-12 {
            return Ok(Self { lift: m, scale: ONE });
        }
        let s = det.cbrt().inv();
        let mut lift = m * s;
        // a second pass absorbs the rounding of the first one
        let det2 = lift.determinant();
        let s2 = det2.cbrt().inv();
        lift *= s2;
        Ok(Self { lift, scale: s * s2 })
    }

    /// Wraps a product of unimodular lifts without renormalizing.
    pub fn from_unimodular(lift: Mat3) -> Self {
        Self { lift, scale: ONE }
    }

    pub fn from_rows(rows: [[Cpx; 3]; 3]) -> Result<Self> {
        Self::new(Mat3::from_fn(|i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Mat3::from_fn(|i, j| cx(rows[i][j], 0.0)))
    }

    pub fn diag(a: Cpx, b: Cpx, c: Cpx) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::new(a, b, c)))
    }

    pub fn identity() -> Self {
        Self { lift: Mat3::identity(), scale: ONE }
    }

    pub fn lift(&self) -> &Mat3 {
        &self.lift
    }

    pub fn scale(&self) -> Cpx {
        self.scale
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self::from_unimodular(self.lift * rhs.lift)
    }

    pub fn inverse(&self) -> Self {
        Self::from_unimodular(self.lift.try_inverse().unwrap_or_else(|| adjugate3(&self.lift)))
    }

    pub fn apply(&self, x: &ProjPoint) -> ProjPoint {
        ProjPoint::from_vec(&(self.lift * x.to_vec())).expect("invertible map sends nonzero to nonzero")
    }

    /// Image of a line: the dual vector moves by the inverse transpose.
    pub fn apply_line(&self, l: &ProjLine) -> ProjLine {
        let inv_t = self.inverse().lift.transpose();
        ProjLine::from_direction(arr3(&(inv_t * vec3(l.dual())))).expect("invertible map")
    }

    /// Equality up to a cube root of unity, entrywise within `tol` relative
    /// to the largest entry.
    pub fn proj_eq(&self, other: &Self, tol: f64) -> bool {
        let scale = self.lift.iter().map(|z| z.norm()).fold(1.0, f64::max);
        (0..3).any(|k| {
            let w = Cpx::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
            (self.lift - other.lift * w).iter().all(|z| z.norm() <= tol * scale)
        })
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.proj_eq(&Self::identity(), tol)
    }
}

fn adjugate3(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| {
        let r: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let c: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let minor = m[(r[0], c[0])] * m[(r[1], c[1])] - m[(r[0], c[1])] * m[(r[1], c[0])];
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    })
}

impl From<ProjTransform> for json::Mat3Repr {
    fn from(t: ProjTransform) -> Self {
        json::from_mat3(&t.lift)
    }
}

impl TryFrom<json::Mat3Repr> for ProjTransform {
    type Error = Error;
    fn try_from(r: json::Mat3Repr) -> Result<Self> {
        ProjTransform::new(json::to_mat3(&r))
    }
}

/// A point of the projective line as a canonical homogeneous pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[json::CpxRepr; 2]", try_from = "[json::CpxRepr; 2]")]
pub struct P1Point {
    coords: [Cpx; 2],
}

impl P1Point {
    pub fn new(z1: Cpx, z2: Cpx) -> Result<Self> {
        Ok(Self { coords: canonical_direction([z1, z2])? })
    }

    pub fn from_cpx(z: Cpx) -> Self {
        Self::new(z, ONE).expect("finite affine point")
    }

    pub fn infinity() -> Self {
        Self { coords: [ONE, ZERO] }
    }

    pub fn from_vec(v: &Vec2) -> Result<Self> {
        Self::new(v[0], v[1])
    }

    pub fn coords(&self) -> &[Cpx; 2] {
        &self.coords
    }

    pub fn to_vec(&self) -> Vec2 {
        Vec2::new(self.coords[0], self.coords[1])
    }

    pub fn is_infinity(&self) -> bool {
        self.coords[1].norm() <= TAU_ZERO
    }

    /// Affine value, `None` at infinity.
    pub fn to_cpx(&self) -> Option<Cpx> {
        if self.is_infinity() {
            None
        } else {
            Some(self.coords[0] / self.coords[1])
        }
    }

    /// Chordal (Fubini–Study) distance on the projective line.
    pub fn distance(&self, other: &Self) -> f64 {
        let [a, b] = self.coords;
        let [c, d] = other.coords;
        (a * d - b * c).norm().atan2(hdot(&self.coords, &other.coords).norm())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        phase_aligned_diff(&self.coords, &other.coords) <= tol
    }

    /// Unit vector on the sphere (Bloch coordinates).
    pub fn sphere(&self) -> [f64; 3] {
        let [a, b] = self.coords;
        let w = a * b.conj();
        [2.0 * w.re, 2.0 * w.im, a.norm_sqr() - b.norm_sqr()]
    }
}

impl From<P1Point> for [json::CpxRepr; 2] {
    fn from(p: P1Point) -> Self {
        p.coords.map(json::from_cpx)
    }
}

impl TryFrom<[json::CpxRepr; 2]> for P1Point {
    type Error = Error;
    fn try_from(t: [json::CpxRepr; 2]) -> Result<Self> {
        let [a, b] = t.map(json::to_cpx);
        P1Point::new(a, b)
    }
}

fn det2(p: &P1Point, q: &P1Point) -> Cpx {
    p.coords[0] * q.coords[1] - p.coords[1] * q.coords[0]
}

/// Cross ratio `((z1-z3)(z2-z4))/((z1-z4)(z2-z3))` from homogeneous 2x2
/// determinants; the value may be the point at infinity.
pub fn cross_ratio(z1: &P1Point, z2: &P1Point, z3: &P1Point, z4: &P1Point) -> Result<P1Point> {
    let num = det2(z1, z3) * det2(z2, z4);
    let den = det2(z1, z4) * det2(z2, z3);
    if num.norm() <= TAU_CMP && den.norm() <= TAU_CMP {
        return Err(Error::DegenerateQuadruple);
    }
    P1Point::new(num, den)
}

/// Element of PSL(2,C) carried by a lift of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "json::Mat2Repr", try_from = "json::Mat2Repr")]
pub struct MobiusMap {
    lift: Mat2,
}

impl MobiusMap {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.iter().all(finite) {
            return Err(Error::NonFinite);
        }
        let det = m.determinant();
        let scale_ref = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if det.norm() <= 1e-14 * scale_ref * scale_ref || det.norm() == 0.0 {
            return Err(Error::Singular);
        }
        if (det - ONE).norm() <= 1e-12 {
            return Ok(Self { lift: m });
        }
        Ok(Self { lift: m / det.sqrt() })
    }

    pub fn from_coeffs(a: Cpx, b: Cpx, c: Cpx, d: Cpx) -> Result<Self> {
        Self::new(Mat2::new(a, b, c, d))
    }

    pub fn from_unimodular(lift: Mat2) -> Self {
        Self { lift }
    }

    pub fn identity() -> Self {
        Self { lift: Mat2::identity() }
    }

    pub fn lift(&self) -> &Mat2 {
        &self.lift
    }

    pub fn a(&self) -> Cpx {
        self.lift[(0, 0)]
    }
    pub fn b(&self) -> Cpx {
        self.lift[(0, 1)]
    }
    pub fn c(&self) -> Cpx {
        self.lift[(1, 0)]
    }
    pub fn d(&self) -> Cpx {
        self.lift[(1, 1)]
    }

    pub fn trace(&self) -> Cpx {
        self.a() + self.d()
    }

    /// Trace squared, independent of the sign of the lift.
    pub fn trace_sq(&self) -> Cpx {
        let t = self.trace();
        t * t
    }

    pub fn negated(&self) -> Self {
        Self { lift: -self.lift }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self { lift: self.lift * rhs.lift }
    }

    pub fn inverse(&self) -> Self {
        Self { lift: Mat2::new(self.d(), -self.b(), -self.c(), self.a()) }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut acc = Self::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base);
        }
        acc
    }

    pub fn apply(&self, z: &P1Point) -> P1Point {
        P1Point::from_vec(&(self.lift * z.to_vec())).expect("invertible map")
    }

    pub fn apply_cpx(&self, z: Cpx) -> P1Point {
        self.apply(&P1Point::from_cpx(z))
    }

    /// Derivative at a finite point, `1/(cz+d)^2`.
    pub fn derivative(&self, z: Cpx) -> Cpx {
        let w = self.c() * z + self.d();
        (w * w).inv()
    }

    pub fn proj_eq(&self, other: &Self, tol: f64) -> bool {
        projective_deviation(&mat2_entries(&self.lift), &mat2_entries(&other.lift)) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let s = self.lift.iter().map(|z| z.norm()).fold(1.0, f64::max);
        (self.a() - self.d()).norm() <= tol * s && self.b().norm() <= tol * s && self.c().norm() <= tol * s
    }

    /// Fixed points as eigenvectors of the lift: none for the identity, one
    /// for parabolic maps (|tr^2 - 4| <= `tol_tr`), two otherwise.
    pub fn fixed_points(&self, tol_tr: f64) -> Vec<P1Point> {
        if self.is_identity(TAU_CMP) {
            return Vec::new();
        }
        let t = self.trace();
        let disc = t * t - cx(4.0, 0.0);
        let roots: Vec<Cpx> = if disc.norm() <= tol_tr * (1.0 + (t * t).norm()) {
            vec![t / 2.0]
        } else {
            let s = disc.sqrt();
            vec![(t + s) / 2.0, (t - s) / 2.0]
        };
        roots
            .into_iter()
            .filter_map(|mu| {
                let v1 = Vec2::new(self.b(), mu - self.a());
                let v2 = Vec2::new(mu - self.d(), self.c());
                let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
                P1Point::from_vec(&v).ok()
            })
            .collect()
    }
}

impl From<MobiusMap> for json::Mat2Repr {
    fn from(m: MobiusMap) -> Self {
        json::from_mat2(&m.lift)
    }
}

impl TryFrom<json::Mat2Repr> for MobiusMap {
    type Error = Error;
    fn try_from(r: json::Mat2Repr) -> Result<Self> {
        MobiusMap::new(json::to_mat2(&r))
    }
}

/// Generalized circle `A|z|^2 + conj(B) z + B conj(z) + C = 0` together with
/// one of its complementary regions.
///
/// The coefficients form the Hermitian matrix `H = [[A, B], [conj(B), C]]`,
/// so that `q(z) = v* H v` for `v = (z, 1)`. They are kept scaled to unit
/// Frobenius norm with `A > 0` (or, for lines, the first nonzero of
/// `Re B, Im B` positive). `inside` selects the region `q < 0`, which is the
/// bounded disk when `A > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenCircle {
    pub a: f64,
    pub b: json::CpxRepr,
    pub c: f64,
    pub inside: bool,
}

impl GenCircle {
    /// Builds the circle whose selected region is `{ q < 0 }` for the given
    /// (unnormalized) Hermitian coefficients.
    pub fn from_region_form(a: f64, b: Cpx, c: f64) -> Result<Self> {
        if !(a.is_finite() && c.is_finite() && finite(&b)) {
            return Err(Error::NonFinite);
        }
        let frob = (a * a + c * c + 2.0 * b.norm_sqr()).sqrt();
        if frob == 0.0 {
            return Err(Error::DegenerateCircle);
        }
        let (a, b, c) = (a / frob, b / frob, c / frob);
        if b.norm_sqr() - a * c <= 1e-14 {
            return Err(Error::DegenerateCircle);
        }
        let positive = if a.abs() > 1e-13 {
            a > 0.0
        } else if b.re.abs() > 1e-13 {
            b.re > 0.0
        } else {
            b.im > 0.0
        };
        let s = if positive { 1.0 } else { -1.0 };
        Ok(Self { a: s * a, b: json::from_cpx(b * s), c: s * c, inside: positive })
    }

    /// Open disk `|z - center| < radius`.
    pub fn disk(center: Cpx, radius: f64) -> Result<Self> {
        Self::from_region_form(1.0, -center, center.norm_sqr() - radius * radius)
    }

    /// Region `|z - center| > radius` together with infinity.
    pub fn disk_exterior(center: Cpx, radius: f64) -> Result<Self> {
        Ok(Self::disk(center, radius)?.complement())
    }

    pub fn b(&self) -> Cpx {
        json::to_cpx(self.b)
    }

    pub fn complement(&self) -> Self {
        Self { inside: !self.inside, ..*self }
    }

    pub fn hermitian(&self) -> Mat2 {
        Mat2::new(cx(self.a, 0.0), self.b(), self.b().conj(), cx(self.c, 0.0))
    }

    /// Hermitian form that is negative exactly on the selected region.
    pub fn region_form(&self) -> Mat2 {
        if self.inside {
            self.hermitian()
        } else {
            -self.hermitian()
        }
    }

    /// `q(z)` for the canonical coefficients.
    pub fn eval(&self, z: &P1Point) -> f64 {
        let v = z.to_vec();
        (v.adjoint() * self.hermitian() * v)[(0, 0)].re
    }

    pub fn region_contains(&self, z: &P1Point) -> bool {
        let q = self.eval(z);
        if self.inside {
            q < 0.0
        } else {
            q > 0.0
        }
    }

    pub fn center_radius(&self) -> Option<(Cpx, f64)> {
        if self.a.abs() <= 1e-13 {
            return None;
        }
        let center = -self.b() / self.a;
        let r2 = center.norm_sqr() - self.c / self.a;
        Some((center, r2.max(0.0).sqrt()))
    }

    /// Image of the circle and of its selected region under `m`: the form is
    /// pushed forward by the congruence `(m^-1)* S m^-1`, which preserves the
    /// sign pattern and hence the region.
    pub fn image(&self, m: &MobiusMap) -> Self {
        let n = m.inverse().lift;
        let s = n.adjoint() * self.region_form() * n;
        Self::from_region_form(s[(0, 0)].re, s[(0, 1)], s[(1, 1)].re)
            .expect("congruence keeps the form nondegenerate")
    }

    /// Largest coefficient difference between the two circles (ignoring the
    /// selected side).
    pub fn circle_deviation(&self, other: &Self) -> f64 {
        let d = [
            (self.a - other.a).abs(),
            (self.b() - other.b()).norm(),
            (self.c - other.c).abs(),
        ];
        d.into_iter().fold(0.0, f64::max)
    }

    pub fn same_circle(&self, other: &Self, tol: f64) -> bool {
        self.circle_deviation(other) <= tol
    }

    pub fn same_region(&self, other: &Self, tol: f64) -> bool {
        self.same_circle(other, tol) && self.inside == other.inside
    }

    /// The selected region as a spherical cap: unit center on the sphere and
    /// angular radius in `(0, pi)`.
    pub fn cap(&self) -> ([f64; 3], f64) {
        let s = self.region_form();
        let h0 = 0.5 * (s[(0, 0)].re + s[(1, 1)].re);
        let h3 = 0.5 * (s[(0, 0)].re - s[(1, 1)].re);
        let h1 = s[(0, 1)].re;
        let h2 = -s[(0, 1)].im;
        let n = (h1 * h1 + h2 * h2 + h3 * h3).sqrt();
        let center = [-h1 / n, -h2 / n, -h3 / n];
        (center, (h0 / n).clamp(-1.0, 1.0).acos())
    }

    /// Angular gap between the closures of the two regions: positive when
    /// disjoint, zero when tangent, negative when they overlap.
    pub fn gap(&self, other: &Self) -> f64 {
        let (c1, r1) = self.cap();
        let (c2, r2) = other.cap();
        let dot = c1[0] * c2[0] + c1[1] * c2[1] + c1[2] * c2[2];
        let cr = [
            c1[1] * c2[2] - c1[2] * c2[1],
            c1[2] * c2[0] - c1[0] * c2[2],
            c1[0] * c2[1] - c1[1] * c2[0],
        ];
        let sin = (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
        sin.atan2(dot) - (r1 + r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: [f64; 6]) -> ProjPoint {
        ProjPoint::new([cx(a[0], a[1]), cx(a[2], a[3]), cx(a[4], a[5])]).unwrap()
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let x = p([0.3, -0.2, 1.0, 4.0, -2.0, 0.5]);
        let y = ProjPoint::new(*x.coords()).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.coords()[0].im, 0.0);
        assert!(x.coords()[0].re > 0.0);
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(ProjPoint::new([ZERO; 3]), Err(Error::ZeroVector));
    }

    #[test]
    fn coordinate_lines() {
        let l = line_through(&ProjPoint::basis(0), &ProjPoint::basis(1)).unwrap();
        assert!(l.approx_eq(&ProjLine::new([ZERO, ZERO, ONE]).unwrap(), 1e-12));
        let l = line_through(&ProjPoint::basis(0), &ProjPoint::basis(2)).unwrap();
        assert!(l.approx_eq(&ProjLine::new([ZERO, ONE, ZERO]).unwrap(), 1e-12));
        let q = ProjPoint::real(1.0, 1.0, 0.0).unwrap();
        let l = line_through(&q, &ProjPoint::basis(2)).unwrap();
        assert!(l.approx_eq(&ProjLine::new([ONE, -ONE, ZERO]).unwrap(), 1e-12));
        assert_eq!(line_through(&q, &q), Err(Error::CoincidentPoints));
    }

    #[test]
    fn meets() {
        let l12 = ProjLine::new([ZERO, ZERO, ONE]).unwrap();
        let l13 = ProjLine::new([ZERO, ONE, ZERO]).unwrap();
        let l23 = ProjLine::new([ONE, ZERO, ZERO]).unwrap();
        assert!(meet(&l12, &l13).unwrap().approx_eq(&ProjPoint::basis(0), 1e-12));
        assert!(meet(&l12, &l23).unwrap().approx_eq(&ProjPoint::basis(1), 1e-12));
        let q = ProjPoint::real(1.0, 1.0, 0.0).unwrap();
        let l = line_through(&q, &ProjPoint::basis(2)).unwrap();
        assert!(meet(&l, &l12).unwrap().approx_eq(&q, 1e-12));
        assert_eq!(meet(&l12, &l12), Err(Error::CoincidentLines));
    }

    #[test]
    fn distances() {
        let e1 = ProjPoint::basis(0);
        let e2 = ProjPoint::basis(1);
        let q = ProjPoint::real(1.0, 1.0, 0.0).unwrap();
        assert_eq!(fs_distance(&e1, &e1), 0.0);
        assert!((fs_distance(&e1, &e2) - PI / 2.0).abs() < 1e-15);
        assert!((fs_distance(&e1, &q) - PI / 4.0).abs() < 1e-15);
        let l = line_through(&e1, &e2).unwrap();
        assert!(fs_distance_to_line(&ProjPoint::basis(2), &l) > 1.5);
        assert!(fs_distance_to_line(&q, &l) < 1e-15);
    }

    #[test]
    fn diagonal_map_fixes_axis_pointwise() {
        let a = cx(1.3, 0.4);
        let g = ProjTransform::diag(a, a, (a * a).inv()).unwrap();
        let x = ProjPoint::new([cx(0.2, 1.0), cx(-0.7, 0.1), ZERO]).unwrap();
        assert!(g.apply(&x).approx_eq(&x, 1e-12));
        assert!(g.apply(&ProjPoint::basis(2)).approx_eq(&ProjPoint::basis(2), 1e-12));
    }

    #[test]
    fn cyclic_permutation_moves_axis() {
        let b = ProjTransform::from_real_rows([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let l12 = line_through(&ProjPoint::basis(0), &ProjPoint::basis(1)).unwrap();
        let l32 = line_through(&ProjPoint::basis(2), &ProjPoint::basis(1)).unwrap();
        assert!(b.apply_line(&l12).approx_eq(&l32, 1e-12));
    }

    #[test]
    fn cross_ratio_values() {
        let zero = P1Point::from_cpx(ZERO);
        let inf = P1Point::infinity();
        let one = P1Point::from_cpx(ONE);
        let two = P1Point::from_cpx(cx(2.0, 0.0));
        let r = cross_ratio(&zero, &inf, &one, &two).unwrap().to_cpx().unwrap();
        assert!((r - cx(0.5, 0.0)).norm() < 1e-15);
        let p = cx(-3.0, 1.5);
        let r = cross_ratio(&zero, &inf, &one, &P1Point::from_cpx(p)).unwrap().to_cpx().unwrap();
        assert!((r - p.inv()).norm() < 1e-14);
        let r = cross_ratio(&zero, &one, &zero, &one).unwrap();
        assert_eq!(r.to_cpx(), Some(ZERO));
        assert_eq!(cross_ratio(&zero, &zero, &zero, &one), Err(Error::DegenerateQuadruple));
    }

    #[test]
    fn circle_images() {
        let dilate = MobiusMap::from_coeffs(cx(2.0, 0.0), ZERO, ZERO, ONE).unwrap();
        let img = GenCircle::disk(ZERO, 1.0).unwrap().image(&dilate);
        let (c, r) = img.center_radius().unwrap();
        assert!(c.norm() < 1e-14 && (r - 2.0).abs() < 1e-14 && img.inside);

        let m1 = MobiusMap::from_coeffs(cx(1.0, 1.0), cx(0.0, -1.0), cx(0.0, 1.0), cx(1.0, -1.0)).unwrap();
        let img = GenCircle::disk(cx(1.0, 1.0), 1.0).unwrap().image(&m1);
        let target = GenCircle::disk(cx(1.0, -1.0), 1.0).unwrap();
        assert!(img.same_circle(&target, 1e-12));
        assert!(!img.inside);

        let m3 = MobiusMap::from_coeffs(cx(0.0, 3.0), cx(0.0, 10.0), cx(0.0, 1.0), cx(0.0, 3.0)).unwrap();
        let img = GenCircle::disk(cx(-3.0, 0.0), 1.0).unwrap().image(&m3);
        assert!(img.same_region(&GenCircle::disk_exterior(cx(3.0, 0.0), 1.0).unwrap(), 1e-12));
    }

    #[test]
    fn cap_gaps() {
        let a = GenCircle::disk(cx(1.0, 1.0), 1.0).unwrap();
        let b = GenCircle::disk(cx(1.0, -1.0), 1.0).unwrap();
        let c = GenCircle::disk(cx(-3.0, 0.0), 1.0).unwrap();
        assert!(a.gap(&b).abs() < 1e-12);
        assert!(a.gap(&c) > 0.01);
        let big = GenCircle::disk(cx(1.0, 1.0), 1.5).unwrap();
        assert!(big.gap(&b) < -0.01);
        assert!(a.gap(&a.complement()).abs() < 1e-12);
    }

    #[test]
    fn serialization_round_trip() {
        let g = ProjTransform::from_rows([
            [cx(1.0, 2.0), cx(0.5, 0.0), ZERO],
            [cx(0.0, -1.0), cx(3.0, 0.1), cx(0.2, 0.2)],
            [ONE, ZERO, cx(0.7, -0.3)],
        ])
        .unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let h: ProjTransform = serde_json::from_str(&s).unwrap();
        assert_eq!(g.lift(), h.lift());
        let x = p([0.3, -0.2, 1.0, 4.0, -2.0, 0.5]);
        let y: ProjPoint = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        assert_eq!(x, y);
    }
}
