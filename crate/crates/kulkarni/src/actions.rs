//! Finitely generated subgroups of PSL(3,C): generator specifications, word
//! enumeration, the orbit-sampling limit-set oracle, the control projection
//! to a Möbius group, Schottky pairing certificates and a finiteness test.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cyclic::{classify, Classification, ElementClass, LimitSetDesc};
use crate::error::{Error, Result};
use crate::mobius::elementary_certificate;
use crate::projective::{
    cross, cx, fibonacci_sphere, fs_distance, fs_distance_to_line, line_through, Cpx, GenCircle, Mat2, Mat3,
    MobiusMap, P1Point, ProjLine, ProjPoint, ProjTransform, Vec3, ONE,
};
use crate::spectral::{norm_inf, svd_sorted, JordanShape};
use crate::words::{enumerate_words, Enumerated, Word, DEFAULT_BUDGET};

/// A named generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub matrix: ProjTransform,
}

/// Generators of a subgroup of PSL(3,C), optionally with a distinguished
/// fixed point `p` and a line `l` used by the control projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub generators: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<ProjPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<ProjLine>,
}

impl GroupSpec {
    pub fn new(generators: Vec<(&str, ProjTransform)>) -> Result<Self> {
        let spec = Self {
            generators: generators
                .into_iter()
                .map(|(n, m)| Generator { name: n.to_string(), matrix: m })
                .collect(),
            point: None,
            line: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_control(mut self, point: ProjPoint, line: ProjLine) -> Self {
        self.point = Some(point);
        self.line = Some(line);
        self
    }

    /// Generator names must be unique.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for g in &self.generators {
            if !seen.insert(g.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate generator name {}", g.name)));
            }
        }
        Ok(())
    }

    pub fn matrices(&self) -> Vec<ProjTransform> {
        self.generators.iter().map(|g| g.matrix).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }
}

pub fn enumerate_spec(spec: &GroupSpec, max_len: usize, budget: usize) -> Result<Vec<Enumerated<ProjTransform>>> {
    enumerate_words(&spec.matrices(), max_len, budget)
}

/// A point of an orbit sample together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudEntry {
    pub point: ProjPoint,
    pub word_length: usize,
    pub base_index: Option<usize>,
}

/// Orbit samples deduplicated on a grid of affine cells of side
/// `resolution` in each point's dominant chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub entries: Vec<CloudEntry>,
    pub resolution: f64,
    #[serde(skip)]
    cells: HashSet<[i64; 5]>,
}

impl PointCloud {
    pub fn new(resolution: f64) -> Self {
        Self { entries: Vec::new(), resolution, cells: HashSet::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn cell(&self, p: &ProjPoint) -> [i64; 5] {
        let k = p.dominant_chart();
        let [a, b] = p.affine(k);
        let q = |x: f64| (x / self.resolution).floor() as i64;
        [k as i64, q(a.re), q(a.im), q(b.re), q(b.im)]
    }

    /// Adds the entry unless its cell is already occupied.
    pub fn push(&mut self, e: CloudEntry) -> bool {
        let c = self.cell(&e.point);
        if self.cells.insert(c) {
            self.entries.push(e);
            true
        } else {
            false
        }
    }

    pub fn extend(&mut self, other: &PointCloud) {
        for e in &other.entries {
            self.push(*e);
        }
    }

    pub fn points(&self) -> Vec<ProjPoint> {
        self.entries.iter().map(|e| e.point).collect()
    }

    /// Distance from `x` to the nearest cloud point.
    pub fn distance(&self, x: &ProjPoint) -> f64 {
        self.entries.iter().map(|e| fs_distance(x, &e.point)).fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `chart, re1, im1, re2, im2, word_length`, each point
    /// written in its dominant affine chart.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["chart", "re1", "im1", "re2", "im2", "word_length"]).map_err(io)?;
        for e in &self.entries {
            let k = e.point.dominant_chart();
            let [a, b] = e.point.affine(k);
            w.serialize((format!("z{}=1", k + 1), a.re, a.im, b.re, b.im, e.word_length)).map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?)
            .map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Budgets and tolerances of the orbit oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_len: usize,
    pub samples: usize,
    pub n_min: usize,
    /// Radius of the neighbourhoods of the first layers excluded from the
    /// compact sets used for the last layer.
    pub exclusion: f64,
    pub resolution: f64,
    pub seed: u64,
    /// Points per sampled line of fixed points.
    pub line_samples: usize,
    /// Balls visited per long word when sweeping compact sets.
    pub balls_per_word: usize,
    /// Target points per ball on the image line.
    pub targets_per_ball: usize,
    pub budget: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_len: 200,
            samples: 1000,
            n_min: 50,
            exclusion: 0.02,
            resolution: 0.005,
            seed: 0,
            line_samples: 200,
            balls_per_word: 16,
            targets_per_ball: 24,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Words whose lift has condition number above this are not used to locate
/// fixed points.
pub const MAX_SPREAD: f64 = 1e6;

/// Points with infinite isotropy found among the enumerated elements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedSets {
    pub points: Vec<ProjPoint>,
    pub lines: Vec<ProjLine>,
}

impl FixedSets {
    fn add_point(&mut self, p: ProjPoint) {
        if self.lines.iter().any(|l| l.contains(&p, 1e-9)) || self.points.iter().any(|q| q.approx_eq(&p, 1e-9)) {
            return;
        }
        self.points.push(p);
    }

    fn add_line(&mut self, l: ProjLine) {
        if self.lines.iter().any(|m| m.approx_eq(&l, 1e-9)) {
            return;
        }
        self.points.retain(|p| !l.contains(p, 1e-9));
        self.lines.push(l);
    }

    pub fn distance(&self, x: &ProjPoint) -> f64 {
        self.points
            .iter()
            .map(|p| fs_distance(x, p))
            .chain(self.lines.iter().map(|l| fs_distance_to_line(x, l)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Projective eigenspaces of an element: isolated fixed points and lines of
/// fixed points.
pub fn fixed_set(c: &Classification) -> FixedSets {
    let mut out = FixedSets::default();
    let e = &c.eigen;
    let col = |k: usize| ProjPoint::from_vec(&e.column(k)).expect("nonzero column");
    match e.shape {
        JordanShape::Block3 => out.add_point(col(0)),
        JordanShape::Block2Plus1 => {
            if e.multiplicities.len() == 1 {
                out.add_line(line_through(&col(0), &col(2)).expect("independent columns"));
            } else {
                out.add_point(col(0));
                out.add_point(col(2));
            }
        }
        JordanShape::Diag => {
            let v = e.column_values();
            let pairs = [(0, 1), (0, 2), (1, 2)];
            let mut done = [false; 3];
            for (i, j) in pairs {
                if e.multiplicities.len() < 3 && v[i] == v[j] {
                    out.add_line(line_through(&col(i), &col(j)).expect("independent columns"));
                    done[i] = true;
                    done[j] = true;
                }
            }
            for k in 0..3 {
                if !done[k] {
                    out.add_point(col(k));
                }
            }
        }
    }
    out
}

/// Haar-distributed points of P^2 from a seeded generator.
pub fn random_points(n: usize, seed: u64) -> Vec<ProjPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Ok(p) = ProjPoint::new([cx(g[0], g[1]), cx(g[2], g[3]), cx(g[4], g[5])]) {
            out.push(p);
        }
    }
    out
}

/// Singular frame of a (possibly very unbalanced) unimodular matrix built
/// from the matrix and its exactly known inverse, so that the weakest
/// directions are not lost to rounding.
struct Frame {
    u: [Vec3; 3],
    v: [Vec3; 3],
    /// Logarithms of the singular values.
    log_s: [f64; 3],
}

fn unit(v: Vec3) -> Vec3 {
    v / cx(v.norm(), 0.0)
}

fn conj_cross(a: &Vec3, b: &Vec3) -> Vec3 {
    let c = cross(&[a[0], a[1], a[2]], &[b[0], b[1], b[2]]);
    Vec3::new(c[0].conj(), c[1].conj(), c[2].conj())
}

impl Frame {
    fn new(a: &Mat3, b: &Mat3) -> Self {
        let sa = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let sb = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let (ua, s_a, va) = svd_sorted(&(a / cx(sa, 0.0)));
        let (ub, s_b, vb) = svd_sorted(&(b / cx(sb, 0.0)));
        let log1 = s_a[0].ln() + sa.ln();
        let log3 = -(s_b[0].ln() + sb.ln());
        let log2 = -log1 - log3;
        let u1: Vec3 = ua.column(0).into_owned();
        let v1: Vec3 = va.column(0).into_owned();
        let v3 = {
            let w: Vec3 = ub.column(0).into_owned();
            unit(w - v1 * v1.dotc(&w))
        };
        let u3: Vec3 = vb.column(0).into_owned();
        let v2 = unit(conj_cross(&v1, &v3));
        let r12 = (log2 - log1).exp();
        let r23 = (log3 - log2).exp();
        let u2 = if r12 >= 1e-6 {
            unit(a * v2)
        } else if r23 >= 1e-6 {
            unit(b.adjoint() * v2)
        } else {
            unit(conj_cross(&u1, &u3))
        };
        Self { u: [u1, u2, u3], v: [v1, v2, v3], log_s: [log1, log2, log3] }
    }

    /// Image of `x` given its frame coordinates, scaled by `1/s2`.
    fn image_scaled(&self, c: [Cpx; 3]) -> Vec3 {
        let r1 = (self.log_s[0] - self.log_s[1]).exp();
        let r3 = (self.log_s[2] - self.log_s[1]).exp();
        self.u[0] * (c[0] * r1) + self.u[1] * c[1] + self.u[2] * (c[2] * r3)
    }
}

/// The three layer samples and the fixed sets used for exclusion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    #[serde(rename = "L0")]
    pub l0: PointCloud,
    #[serde(rename = "L1")]
    pub l1: PointCloud,
    #[serde(rename = "L2")]
    pub l2: PointCloud,
    #[serde(rename = "Lambda")]
    pub lambda: PointCloud,
    pub fixed: FixedSets,
    pub words: usize,
    pub long_words: usize,
    pub base_points_used: usize,
    pub balls: usize,
}

/// Orbit-sampling approximation of the three limit-set layers.
///
/// The first layer collects fixed points of infinite-order elements. The
/// second maps base points away from it by words of length at least
/// `n_min`. The third samples balls away from both and, for each long word,
/// sweeps the part of a ball that the word spreads over the line spanned by
/// its two dominant singular directions.
pub fn cluster_oracle(spec: &GroupSpec, cfg: &OracleConfig) -> Result<OracleResult> {
    let words = enumerate_spec(spec, cfg.max_len, cfg.budget)?;
    let classes: Vec<Option<Classification>> = words
        .par_iter()
        .map(|w| {
            // eigenvalues of very unbalanced words cannot be resolved in
            // double precision, and their fixed points are seen by shorter words
            let spread = norm_inf(w.element.lift()) * norm_inf(w.inverse.lift());
            if w.word.is_empty() || spread > MAX_SPREAD {
                return None;
            }
            let c = classify(&w.element);
            let ok = c.class.infinite_order() && !c.eigen.ill_conditioned && c.eigen.residual <= 1e-6;
            ok.then_some(c)
        })
        .collect();
    let mut fixed = FixedSets::default();
    for c in classes.iter().flatten() {
        let f = fixed_set(c);
        for l in f.lines {
            fixed.add_line(l);
        }
        for p in f.points {
            fixed.add_point(p);
        }
    }
    let mut l0 = PointCloud::new(cfg.resolution);
    for p in &fixed.points {
        l0.push(CloudEntry { point: *p, word_length: 0, base_index: None });
    }
    for l in &fixed.lines {
        for p in l.sample(cfg.line_samples) {
            l0.push(CloudEntry { point: p, word_length: 0, base_index: None });
        }
    }

    let mut base = random_points(cfg.samples, cfg.seed);
    let generator_classes: Vec<&Classification> =
        words.iter().zip(&classes).filter(|(w, _)| w.word.len() == 1).filter_map(|(_, c)| c.as_ref()).collect();
    base.extend(axis_points(&generator_classes, (cfg.samples / 16).max(8)));
    // generic points near the fixed set converge slowly and are dropped; points
    // on invariant lines are kept unless they sit on the fixed set itself
    let radius = |i: usize| if i < cfg.samples { cfg.exclusion } else { cfg.resolution };
    let keep: Vec<usize> = (0..base.len()).filter(|&i| fixed.distance(&base[i]) > radius(i)).collect();
    if keep.is_empty() && !base.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let long: Vec<&Enumerated<ProjTransform>> = words.iter().filter(|w| w.word.len() >= cfg.n_min.max(1)).collect();

    let mut l1 = PointCloud::new(cfg.resolution);
    for chunk in long.chunks(64) {
        let images: Vec<Vec<CloudEntry>> = chunk
            .par_iter()
            .map(|w| {
                keep.iter()
                    .filter_map(|&i| {
                        let point = resolved_image(&w.element, &base[i])?;
                        Some(CloudEntry { point, word_length: w.word.len(), base_index: Some(i) })
                    })
                    .collect()
            })
            .collect();
        for e in images.into_iter().flatten() {
            l1.push(e);
        }
    }

    // balls of the compact set K away from the first two layers
    let balls: Vec<(ProjPoint, f64, usize)> = keep
        .par_iter()
        .filter_map(|&i| {
            let d = fixed.distance(&base[i]).min(l1.distance(&base[i]));
            (d > cfg.exclusion).then(|| (base[i], (0.3f64).min((d - cfg.exclusion) / 2.0), i))
        })
        .collect();
    let mut l2 = PointCloud::new(cfg.resolution);
    let targets: Vec<(f64, f64)> = fibonacci_sphere(cfg.targets_per_ball.max(1));
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for (chunk_index, chunk) in long.chunks(64).enumerate() {
        let found: Vec<Vec<CloudEntry>> = chunk
            .par_iter()
            .enumerate()
            .map(|(j, w)| {
                let wi = chunk_index * 64 + j;
                sweep_word(w, wi, &balls, &targets, golden, cfg)
            })
            .collect();
        for e in found.into_iter().flatten() {
            l2.push(e);
        }
    }

    let mut lambda = PointCloud::new(cfg.resolution);
    lambda.extend(&l0);
    lambda.extend(&l1);
    lambda.extend(&l2);
    Ok(OracleResult {
        l0,
        l1,
        l2,
        lambda,
        fixed,
        words: words.len(),
        long_words: long.len(),
        base_points_used: keep.len(),
        balls: balls.len(),
    })
}

/// Images smaller than this fraction of the norm of the lift are dominated
/// by the rounding of the product and are discarded.
const IMAGE_FLOOR: f64 = 1e-10;

fn resolved_image(g: &ProjTransform, x: &ProjPoint) -> Option<ProjPoint> {
    let y = g.lift() * x.to_vec();
    (y.norm() > IMAGE_FLOOR * g.lift().norm()).then(|| ProjPoint::from_vec(&y).ok()).flatten()
}

/// Points on the lines joining two isolated fixed points of the same
/// generator. Such lines are invariant under it, and random base points miss
/// them almost surely although their orbits can accumulate where generic
/// orbits never do.
fn axis_points(generators: &[&Classification], per_line: usize) -> Vec<ProjPoint> {
    let mut out = Vec::new();
    for c in generators {
        let pts = fixed_set(c).points;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                if let Ok(l) = line_through(p, q) {
                    out.extend(l.sample(per_line));
                }
            }
        }
    }
    out
}

fn sweep_word(
    w: &Enumerated<ProjTransform>,
    wi: usize,
    balls: &[(ProjPoint, f64, usize)],
    targets: &[(f64, f64)],
    golden: f64,
    cfg: &OracleConfig,
) -> Vec<CloudEntry> {
    let mut out = Vec::new();
    if balls.is_empty() {
        return out;
    }
    let len = w.word.len();
    // images of a rotating subset of ball centres
    let n_centres = cfg.balls_per_word.min(balls.len());
    for k in 0..n_centres {
        let (c, _, i) = balls[(wi * 7 + k * 13) % balls.len()];
        if let Some(point) = resolved_image(&w.element, &c) {
            out.push(CloudEntry { point, word_length: len, base_index: Some(i) });
        }
    }
    let frame = Frame::new(w.element.lift(), w.inverse.lift());
    let touching: Vec<usize> = (0..balls.len())
        .filter(|&b| {
            let x = balls[b].0.to_vec();
            frame.v[0].dotc(&x).norm() < balls[b].1.sin()
        })
        .collect();
    if touching.is_empty() {
        return out;
    }
    let take = cfg.balls_per_word.min(touching.len());
    let start = (wi * 5) % touching.len();
    for k in 0..take {
        let b = touching[(start + k) % touching.len()];
        let (centre, r, bi) = balls[b];
        let x = centre.to_vec();
        let c0 = unit(x - frame.v[0] * frame.v[0].dotc(&x));
        let c2 = frame.v[1].dotc(&c0);
        let c3 = frame.v[2].dotc(&c0);
        if c2.norm() < 1e-12 {
            continue;
        }
        let offset = ((wi + b) as f64 * golden).fract() * 2.0 * PI;
        let r12 = (frame.log_s[1] - frame.log_s[0]).exp();
        for &(theta, phi) in targets {
            // target direction alpha U1 + beta U2 on the image line
            let alpha = Cpx::from_polar((theta / 2.0).cos(), phi + offset);
            let beta = cx((theta / 2.0).sin(), 0.0);
            if beta.norm() < 1e-9 {
                continue;
            }
            let c1 = alpha / beta * r12 * c2;
            let k_vec = c0 + frame.v[0] * c1;
            let Ok(kp) = ProjPoint::from_vec(&k_vec) else { continue };
            if fs_distance(&kp, &centre) >= r {
                continue;
            }
            let img = frame.image_scaled([c1, c2, c3]);
            if let Ok(p) = ProjPoint::from_vec(&img) {
                out.push(CloudEntry { point: p, word_length: len, base_index: Some(bi) });
            }
        }
    }
    out
}

/// Largest distance from a cloud point to the described set; zero for an
/// empty cloud and infinity when a nonempty cloud meets an empty set.
pub fn hausdorff_one_sided(cloud: &PointCloud, desc: &LimitSetDesc) -> f64 {
    if cloud.is_empty() {
        return 0.0;
    }
    cloud
        .entries
        .par_iter()
        .map(|e| desc.distance(&e.point).unwrap_or(f64::INFINITY))
        .reduce(|| 0.0, f64::max)
}

/// How well a cloud covers a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Cloud points within `near` of the line.
    pub count: usize,
    /// Largest distance from a reference point of the line to the nearest
    /// such cloud point.
    pub max_gap: f64,
}

pub fn line_coverage(cloud: &PointCloud, line: &ProjLine, near: f64) -> Coverage {
    let close: Vec<ProjPoint> = cloud
        .entries
        .iter()
        .map(|e| e.point)
        .filter(|p| fs_distance_to_line(p, line) <= near)
        .collect();
    let refs = line.sample(400);
    let max_gap = refs
        .par_iter()
        .map(|r| close.iter().map(|p| fs_distance(r, p)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max);
    Coverage { count: close.len(), max_gap }
}

/// A union of lines through a common apex, one per base point, plus
/// optional extra lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePrediction {
    pub apex: ProjPoint,
    pub base_points: Vec<ProjPoint>,
    pub extra_lines: Vec<ProjLine>,
}

impl ConePrediction {
    pub fn distance(&self, x: &ProjPoint) -> f64 {
        ConeIndex::new(self).distance(x)
    }
}

/// Nearest-line queries for a cone. In a unitary frame with the apex at
/// `e3`, the distance from `x` to the line through the apex and `b` is
/// `asin(r sin t)`, where `r` is the length of the first two coordinates of
/// the unit vector `x` and `t` the distance between the projections of `x`
/// and `b` to the projective line. It is monotone in `t`, so the nearest
/// line comes from the nearest projected base point.
pub struct ConeIndex<'a> {
    pred: &'a ConePrediction,
    frame: Option<(Vec3, Vec3)>,
    sphere: SphereIndex,
}

impl<'a> ConeIndex<'a> {
    pub fn new(pred: &'a ConePrediction) -> Self {
        let a = pred.apex.coords();
        let frame = ProjLine::new([a[0].conj(), a[1].conj(), a[2].conj()]).ok().map(|l| l.basis());
        let points = match &frame {
            Some((u1, u2)) => pred
                .base_points
                .iter()
                .filter_map(|b| {
                    let v = b.to_vec();
                    P1Point::new(u1.dotc(&v), u2.dotc(&v)).ok().map(|z| z.sphere())
                })
                .collect(),
            None => Vec::new(),
        };
        Self { pred, frame, sphere: SphereIndex::new(points, 0.05) }
    }

    pub fn distance(&self, x: &ProjPoint) -> f64 {
        let extra = self.pred.extra_lines.iter().map(|l| fs_distance_to_line(x, l)).fold(f64::INFINITY, f64::min);
        let cone = match &self.frame {
            Some((u1, u2)) if !self.sphere.is_empty() => {
                let v = x.to_vec();
                let (c1, c2) = (u1.dotc(&v), u2.dotc(&v));
                let r = (c1.norm_sqr() + c2.norm_sqr()).sqrt() / v.norm();
                match P1Point::new(c1, c2) {
                    Ok(z) => {
                        let chord = self.sphere.nearest(&z.sphere());
                        (r * chord / 2.0).min(1.0).asin()
                    }
                    Err(_) => 0.0,
                }
            }
            _ => f64::INFINITY,
        };
        cone.min(extra)
    }
}

/// Uniform grid over points of the unit sphere for nearest-neighbour
/// queries in chordal distance.
pub struct SphereIndex {
    points: Vec<[f64; 3]>,
    cell: f64,
    cells: std::collections::HashMap<[i64; 3], Vec<usize>>,
}

impl SphereIndex {
    pub fn new(points: Vec<[f64; 3]>, cell: f64) -> Self {
        let mut cells: std::collections::HashMap<[i64; 3], Vec<usize>> = std::collections::HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { points, cell, cells }
    }

    fn key(p: &[f64; 3], cell: f64) -> [i64; 3] {
        p.map(|x| (x / cell).floor() as i64)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Chordal distance to the nearest point (infinity when empty).
    pub fn nearest(&self, q: &[f64; 3]) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let c = Self::key(q, self.cell);
        let max_ring = (2.0 / self.cell).ceil() as i64 + 1;
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(list) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &i in list {
                                let p = &self.points[i];
                                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                                best = best.min(d);
                            }
                        }
                    }
                }
            }
            // points outside the searched block are farther than `ring` cells
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub points: usize,
    pub max_distance: f64,
    pub within: usize,
    pub tolerance: f64,
    pub contained: bool,
}

pub fn containment(cloud: &PointCloud, pred: &ConePrediction, tol: f64) -> Containment {
    let index = ConeIndex::new(pred);
    let d: Vec<f64> = cloud.entries.par_iter().map(|e| index.distance(&e.point)).collect();
    let max_distance = d.iter().copied().fold(0.0, f64::max);
    let within = d.iter().filter(|&&x| x <= tol).count();
    Containment { points: d.len(), max_distance, within, tolerance: tol, contained: max_distance <= tol }
}

/// Direct evaluation of the cone distance over every base point.
pub fn cone_distance_direct(pred: &ConePrediction, x: &ProjPoint) -> f64 {
    let xv = x.coords();
    let a = pred.apex.coords();
    // distance to line(b, apex) is asin |det(x, b, apex)| / |b x apex|
    let cone = pred
        .base_points
        .iter()
        .filter_map(|b| {
            let d = cross(b.coords(), a);
            let n = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (n >= 1e-15).then(|| (crate::projective::bdot(&d, xv).norm() / n).min(1.0).asin())
        })
        .fold(f64::INFINITY, f64::min);
    let extra = pred.extra_lines.iter().map(|l| fs_distance_to_line(x, l)).fold(f64::INFINITY, f64::min);
    cone.min(extra)
}

/// Central projection from the control point onto the control line.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFrame {
    pub point: ProjPoint,
    pub line: ProjLine,
    /// Columns `u1, u2, p` with `u1, u2` spanning the line.
    pub basis: Mat3,
    pub basis_inv: Mat3,
}

impl ControlFrame {
    pub fn new(point: ProjPoint, line: ProjLine) -> Result<Self> {
        if line.contains(&point, 1e-9) {
            return Err(Error::PreconditionViolation("the control point lies on the control line".into()));
        }
        let d = line.dual();
        let k = (0..3).fold(0, |best, i| if d[i].norm() > d[best].norm() { i } else { best });
        let others: Vec<usize> = (0..3).filter(|&i| i != k).collect();
        let u = |i: usize| {
            let mut v = Vec3::zeros();
            v[i] = ONE;
            v[k] = -d[i] / d[k];
            v
        };
        let basis = Mat3::from_columns(&[u(others[0]), u(others[1]), point.to_vec()]);
        let basis_inv = basis.try_inverse().ok_or(Error::Singular)?;
        Ok(Self { point, line, basis, basis_inv })
    }

    /// Coordinates on the projective line of the projection of `x`.
    pub fn project_point(&self, x: &ProjPoint) -> Result<P1Point> {
        let y = self.basis_inv * x.to_vec();
        P1Point::new(y[0], y[1])
    }

    /// The point of the control line with the given coordinates.
    pub fn lift_point(&self, z: &P1Point) -> ProjPoint {
        let [a, b] = *z.coords();
        let v = self.basis.column(0) * a + self.basis.column(1) * b;
        ProjPoint::from_vec(&v.into_owned()).expect("nonzero combination")
    }

    /// Induced Möbius map, after checking that `h` fixes the control point.
    pub fn project(&self, h: &ProjTransform) -> Result<MobiusMap> {
        if !h.apply(&self.point).approx_eq(&self.point, 1e-9) {
            return Err(Error::PreconditionViolation("a generator does not fix the control point".into()));
        }
        Ok(self.project_unchecked(h))
    }

    pub fn project_unchecked(&self, h: &ProjTransform) -> MobiusMap {
        let m = self.basis_inv * h.lift() * self.basis;
        let block = Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        // when p is fixed the frame matrix is block triangular and the block
        // has determinant 1 / m33, which avoids cancellation in ad - bc for
        // strongly contracting words
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m[(0, 2)].norm().max(m[(1, 2)].norm()) <= 1e-6 * scale && m[(2, 2)].norm() > 0.0 {
            return MobiusMap::from_unimodular(block * m[(2, 2)].sqrt());
        }
        MobiusMap::new(block).expect("block of an invertible map")
    }

    /// `h` written in the frame `u1, u2, p`.
    pub fn in_frame(&self, h: &ProjTransform) -> Mat3 {
        self.basis_inv * h.lift() * self.basis
    }
}

pub fn control_frame(spec: &GroupSpec) -> Result<ControlFrame> {
    match (spec.point, spec.line) {
        (Some(p), Some(l)) => ControlFrame::new(p, l),
        _ => Err(Error::NotControllable("no control point and line given".into())),
    }
}

/// A nontrivial word whose projection is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelWord {
    pub word: Word,
    pub display: String,
    pub matrix: ProjTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlProjection {
    pub generators: Vec<(String, MobiusMap)>,
    pub kernel_depth: usize,
    pub kernel: Vec<KernelWord>,
}

impl ControlProjection {
    pub fn maps(&self) -> Vec<MobiusMap> {
        self.generators.iter().map(|(_, m)| *m).collect()
    }
}

/// Möbius generators of the projected group and the kernel words found up
/// to `kernel_depth`.
pub fn control_projection(spec: &GroupSpec, kernel_depth: usize) -> Result<ControlProjection> {
    let frame = control_frame(spec)?;
    let generators = spec
        .generators
        .iter()
        .map(|g| Ok((g.name.clone(), frame.project(&g.matrix)?)))
        .collect::<Result<Vec<_>>>()?;
    let names = spec.names();
    let mut kernel = Vec::new();
    if kernel_depth > 0 {
        for w in enumerate_spec(spec, kernel_depth, DEFAULT_BUDGET)? {
            if !w.word.is_empty() && frame.project_unchecked(&w.element).is_identity(1e-9) {
                kernel.push(KernelWord { display: w.word.display(&names), word: w.word, matrix: w.element });
            }
        }
    }
    Ok(ControlProjection { generators, kernel_depth, kernel })
}

/// Largest projective deviation between `Pi(g h)` and `Pi(g) Pi(h)` over
/// the given pairs of words.
pub fn homomorphism_defect(spec: &GroupSpec, pairs: &[(Word, Word)]) -> Result<f64> {
    let frame = control_frame(spec)?;
    let gens = spec.matrices();
    let images: Vec<MobiusMap> = gens.iter().map(|g| frame.project(g)).collect::<Result<_>>()?;
    Ok(pairs
        .par_iter()
        .map(|(a, b)| {
            let whole = frame.project_unchecked(&a.concat(b).evaluate(&gens));
            let split = a.evaluate(&images).compose(&b.evaluate(&images));
            crate::projective::projective_deviation(
                &[whole.a(), whole.b(), whole.c(), whole.d()],
                &[split.a(), split.b(), split.c(), split.d()],
            )
        })
        .reduce(|| 0.0, f64::max))
}

/// Random reduced words of length between 1 and `max_len`.
pub fn random_words(n_gens: usize, count: usize, max_len: usize, seed: u64) -> Vec<Word> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            let mut letters: Vec<(usize, i8)> = Vec::with_capacity(len);
            while letters.len() < len {
                let g = rng.gen_range(0..n_gens);
                let e = if rng.gen_bool(0.5) { 1 } else { -1 };
                if let Some(&(pg, pe)) = letters.last() {
                    if pg == g && pe == -e {
                        continue;
                    }
                }
                letters.push((g, e));
            }
            Word { letters }
        })
        .collect()
}

/// Kernel element written in a frame `p, u1, u2`: expected to be the
/// translation `[[1, 0, tau], [0, 1, 0], [0, 0, 1]]` with `tau != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFormReport {
    pub word: String,
    pub tau: [f64; 2],
    pub deviation: f64,
    pub ok: bool,
}

/// One region pairing `gamma(R) = P^1 - closure(S)` on the control line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingEntry {
    pub generator: String,
    #[serde(rename = "R")]
    pub r: GenCircle,
    #[serde(rename = "S")]
    pub s: GenCircle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchottkyPairing {
    pub pairs: Vec<PairingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub generator: String,
    pub circle_deviation: f64,
    pub side_flipped: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessViolation {
    pub regions: (String, String),
    pub gap: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchottkyReport {
    pub valid: bool,
    pub kissing: bool,
    pub tangencies: Vec<(String, String)>,
    pub generators: Vec<GeneratorReport>,
    pub violations: Vec<DisjointnessViolation>,
}

/// Circle images are compared within this tolerance.
pub const TAU_PAIRING: f64 = 1e-9;
/// Closures closer than this (in angle on the sphere) count as tangent.
pub const TAU_KISS: f64 = 1e-8;

/// Verifies the ping-pong configuration through the projected Möbius
/// generators.
pub fn schottky_certificate(spec: &GroupSpec, pairing: &SchottkyPairing) -> Result<SchottkyReport> {
    let proj = control_projection(spec, 0)?;
    let mut generators = Vec::new();
    for p in &pairing.pairs {
        let idx = spec
            .index_of(&p.generator)
            .ok_or_else(|| Error::InvalidInput(format!("unknown generator {}", p.generator)))?;
        let m = proj.generators[idx].1;
        let img = p.r.image(&m);
        let dev = img.circle_deviation(&p.s);
        let flipped = img.inside != p.s.inside;
        generators.push(GeneratorReport {
            generator: p.generator.clone(),
            circle_deviation: dev,
            side_flipped: flipped,
            ok: dev <= TAU_PAIRING && flipped,
        });
    }
    let regions: Vec<(String, GenCircle)> = pairing
        .pairs
        .iter()
        .flat_map(|p| [(format!("R({})", p.generator), p.r), (format!("S({})", p.generator), p.s)])
        .collect();
    let mut violations = Vec::new();
    let mut tangencies = Vec::new();
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            let (ni, ri) = &regions[i];
            let (nj, rj) = &regions[j];
            let gap = ri.gap(rj);
            let pair = (ni.clone(), nj.clone());
            if ri.same_circle(rj, TAU_PAIRING) {
                violations.push(DisjointnessViolation { regions: pair, gap, reason: "shared boundary circle".into() });
            } else if gap < -TAU_KISS {
                violations.push(DisjointnessViolation { regions: pair, gap, reason: "regions overlap".into() });
            } else if gap <= TAU_KISS {
                tangencies.push(pair);
            }
        }
    }
    let valid = !pairing.pairs.is_empty() && generators.iter().all(|g| g.ok) && violations.is_empty();
    Ok(SchottkyReport { valid, kissing: !tangencies.is_empty(), tangencies, generators, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Finiteness {
    Infinite { witness: Word, display: String, class: ElementClass, reason: String },
    Undetermined { words_examined: usize },
}

/// Looks for an element of infinite order: first one with an eigenvalue
/// ratio off the unit circle or of irrational rotation, then, failing that,
/// one with a nontrivial Jordan block.
pub fn finiteness_heuristic(spec: &GroupSpec, max_len: usize) -> Result<Finiteness> {
    let words = enumerate_spec(spec, max_len, DEFAULT_BUDGET)?;
    let names = spec.names();
    let classes: Vec<ElementClass> = words.par_iter().map(|w| classify(&w.element).class).collect();
    let spectral = |c: &ElementClass| {
        matches!(
            c,
            ElementClass::DiagEllipticIrrational
                | ElementClass::DiagEqualModuliRational
                | ElementClass::DiagEqualModuliIrrational
                | ElementClass::DiagStrongLoxodromic
                | ElementClass::B21UnitIrrational
                | ElementClass::B21Nonunit
        )
    };
    let found = |pred: &dyn Fn(&ElementClass) -> bool, reason: &str| {
        words.iter().zip(&classes).find(|(_, c)| pred(c)).map(|(w, c)| Finiteness::Infinite {
            witness: w.word.clone(),
            display: w.word.display(&names),
            class: *c,
            reason: reason.to_string(),
        })
    };
    if let Some(f) = found(&spectral, "eigenvalue ratio off the unit circle or of irrational rotation") {
        return Ok(f);
    }
    if let Some(f) = found(&|c| c.infinite_order(), "nontrivial Jordan block") {
        return Ok(f);
    }
    Ok(Finiteness::Undetermined { words_examined: words.len() })
}

/// Elementary-type certificate of the projected group.
pub fn projected_certificate(spec: &GroupSpec, depth: usize) -> Result<crate::mobius::ElementaryCertificate> {
    let proj = control_projection(spec, 0)?;
    Ok(elementary_certificate(&proj.maps(), depth))
}

/// Points of P^2 on the control line corresponding to points of P^1.
pub fn lift_to_line(frame: &ControlFrame, pts: &[P1Point]) -> Vec<ProjPoint> {
    pts.iter().map(|z| frame.lift_point(z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::kulkarni_limit_set;
    use crate::projective::{I, ZERO};

    fn strong() -> GroupSpec {
        GroupSpec::new(vec![("g", ProjTransform::diag(cx(0.5, 0.0), ONE, cx(2.0, 0.0)).unwrap())]).unwrap()
    }

    #[test]
    fn duplicate_names_rejected() {
        let g = ProjTransform::identity();
        assert!(GroupSpec::new(vec![("a", g), ("a", g)]).is_err());
    }

    #[test]
    fn identity_group_has_empty_clouds() {
        let spec = GroupSpec::new(vec![("id", ProjTransform::identity())]).unwrap();
        let cfg = OracleConfig { max_len: 10, samples: 50, n_min: 2, ..OracleConfig::default() };
        let r = cluster_oracle(&spec, &cfg).unwrap();
        assert!(r.l0.is_empty() && r.l1.is_empty() && r.l2.is_empty());
    }

    #[test]
    fn strong_loxodromic_oracle_small() {
        let spec = strong();
        let cfg = OracleConfig { max_len: 60, samples: 200, n_min: 40, exclusion: 0.05, ..OracleConfig::default() };
        let r = cluster_oracle(&spec, &cfg).unwrap();
        let k = kulkarni_limit_set(&classify(&spec.generators[0].matrix));
        assert!(hausdorff_one_sided(&r.l0, &k.l0) < 1e-9);
        assert!(hausdorff_one_sided(&r.l1, &k.l1) < 0.05);
        assert!(hausdorff_one_sided(&r.l2, &k.l2) < 0.05);
        assert!(hausdorff_one_sided(&r.lambda, &k.lambda) < 0.05);
        for l in &k.l2.lines {
            let c = line_coverage(&r.l2, &l.line, 0.05);
            assert!(c.count >= 50, "{c:?}");
        }
    }

    #[test]
    fn frame_recovers_weak_directions() {
        let h = ProjTransform::from_rows([
            [ONE, cx(0.3, 0.1), ZERO],
            [cx(0.2, 0.0), ONE, I],
            [ZERO, cx(0.1, 0.0), ONE],
        ])
        .unwrap();
        let g = h.compose(&ProjTransform::diag(cx(0.5, 0.0), ONE, cx(2.0, 0.0)).unwrap()).compose(&h.inverse());
        let mut a = ProjTransform::identity();
        let mut b = ProjTransform::identity();
        for _ in 0..120 {
            a = a.compose(&g);
            b = g.inverse().compose(&b);
        }
        let f = Frame::new(a.lift(), b.lift());
        assert!((f.log_s[0] - 120.0 * 2f64.ln()).abs() < 1.0);
        assert!(f.log_s[1].abs() < 1.0);
        assert!((f.log_s[2] + 120.0 * 2f64.ln()).abs() < 1.0);
        for i in 0..3 {
            for j in 0..3 {
                let d = f.v[i].dotc(&f.v[j]).norm();
                assert!(if i == j { (d - 1.0).abs() < 1e-9 } else { d < 1e-9 });
            }
        }
    }

    #[test]
    fn control_projection_blocks() {
        let m1 = ProjTransform::from_rows([
            [cx(-1.0, -1.0), I, ZERO],
            [-I, cx(-1.0, 1.0), ZERO],
            [ZERO, ZERO, ONE],
        ])
        .unwrap();
        let e3 = ProjPoint::basis(2);
        let l12 = line_through(&ProjPoint::basis(0), &ProjPoint::basis(1)).unwrap();
        let spec = GroupSpec::new(vec![("M1", m1)]).unwrap().with_control(e3, l12);
        let p = control_projection(&spec, 3).unwrap();
        let target = MobiusMap::from_coeffs(cx(1.0, 1.0), -I, I, cx(1.0, -1.0)).unwrap();
        assert!(p.generators[0].1.proj_eq(&target, 1e-12));
        assert!(p.kernel.is_empty());

        let b = ProjTransform::from_real_rows([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let l23 = line_through(&ProjPoint::basis(1), &ProjPoint::basis(2)).unwrap();
        let spec = GroupSpec::new(vec![("B", b)]).unwrap().with_control(ProjPoint::basis(0), l23);
        assert!(matches!(control_projection(&spec, 0), Err(Error::PreconditionViolation(_))));
        let spec = GroupSpec::new(vec![("B", b)]).unwrap();
        assert!(matches!(control_projection(&spec, 0), Err(Error::NotControllable(_))));
    }

    #[test]
    fn finiteness() {
        let b = ProjTransform::from_real_rows([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let spec = GroupSpec::new(vec![("B", b)]).unwrap();
        assert!(matches!(finiteness_heuristic(&spec, 6).unwrap(), Finiteness::Undetermined { .. }));
        let a = cx(1.5, 0.5);
        let ma = ProjTransform::diag(a, a, (a * a).inv()).unwrap();
        let spec = GroupSpec::new(vec![("Ma", ma), ("B", b)]).unwrap();
        match finiteness_heuristic(&spec, 3).unwrap() {
            Finiteness::Infinite { display, .. } => assert_eq!(display, "Ma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let mut c = PointCloud::new(0.005);
        c.push(CloudEntry { point: ProjPoint::basis(2), word_length: 3, base_index: None });
        let s = c.to_csv().unwrap();
        assert_eq!(s, "chart,re1,im1,re2,im2,word_length\nz3=1,0.0,0.0,0.0,0.0,3\n");
    }

    #[test]
    fn cone_index_matches_direct() {
        let apex = ProjPoint::new([cx(0.2, 0.1), cx(-0.3, 0.0), ONE]).unwrap();
        let base_points = random_points(300, 3);
        let pred = ConePrediction { apex, base_points, extra_lines: Vec::new() };
        let idx = ConeIndex::new(&pred);
        for x in random_points(200, 4) {
            let (a, b) = (idx.distance(&x), cone_distance_direct(&pred, &x));
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn random_points_are_seeded() {
        assert_eq!(random_points(5, 7), random_points(5, 7));
        assert_ne!(random_points(5, 7), random_points(5, 8));
    }
}
