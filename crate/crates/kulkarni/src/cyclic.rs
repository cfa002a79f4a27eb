//! Closed-form Kulkarni limit sets, maximal discontinuity regions and
//! invariant lines of cyclic subgroups of PSL(3,C).
//!
//! Every set is described in the element's Jordan frame `f1, f2, f3` (the
//! images of the coordinate points under the basis matrix) and reported in
//! standard coordinates.

use serde::{Deserialize, Serialize};

use crate::projective::{line_through, ProjLine, ProjPoint, ProjTransform, TAU_CMP};
use crate::spectral::{
    eigen_decompose_with, EigenData, JordanShape, RankChoice, RotationClass, RotationConfig, RotationKind,
    rotation_kind_with,
};

/// The row of the cyclic classification an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementClass {
    Identity,
    Block3Unipotent,
    DiagTorsion,
    DiagEllipticIrrational,
    DiagEqualModuliRational,
    DiagEqualModuliIrrational,
    DiagStrongLoxodromic,
    #[serde(rename = "B21_TORSION")]
    B21Torsion,
    #[serde(rename = "B21_UNIT_IRRATIONAL")]
    B21UnitIrrational,
    #[serde(rename = "B21_NONUNIT")]
    B21Nonunit,
}

impl ElementClass {
    pub const ALL: [ElementClass; 10] = [
        ElementClass::Identity,
        ElementClass::Block3Unipotent,
        ElementClass::DiagTorsion,
        ElementClass::DiagEllipticIrrational,
        ElementClass::DiagEqualModuliRational,
        ElementClass::DiagEqualModuliIrrational,
        ElementClass::DiagStrongLoxodromic,
        ElementClass::B21Torsion,
        ElementClass::B21UnitIrrational,
        ElementClass::B21Nonunit,
    ];

    pub fn name(&self) -> String {
        serde_json::to_value(self).unwrap().as_str().unwrap().to_string()
    }

    /// Whether the cyclic group generated by an element of this class is
    /// infinite.
    pub fn infinite_order(&self) -> bool {
        !matches!(self, ElementClass::Identity | ElementClass::DiagTorsion)
    }
}

/// Result of classifying one element.
#[derive(Debug, Clone)]
pub struct Classification {
    pub class: ElementClass,
    pub eigen: EigenData,
    /// `f1, f2, f3` in the order the tables use.
    pub frame: [ProjPoint; 3],
    /// Rotation status of the eigenvalue ratios that decided the class.
    pub rotations: Vec<RotationKind>,
}

impl Classification {
    pub fn ill_conditioned(&self) -> bool {
        self.eigen.ill_conditioned
    }
}

pub fn classify(g: &ProjTransform) -> Classification {
    classify_with(g, &RotationConfig::default(), RankChoice::Auto)
}

pub fn classify_with(g: &ProjTransform, cfg: &RotationConfig, choice: RankChoice) -> Classification {
    let eigen = eigen_decompose_with(g.lift(), choice);
    let lam = eigen.column_values();
    let point = |k: usize| ProjPoint::from_vec(&eigen.column(k)).expect("basis column is nonzero");
    let cols = [point(0), point(1), point(2)];
    let (class, order, rotations) = match eigen.shape {
        JordanShape::Block3 => (ElementClass::Block3Unipotent, [0, 1, 2], Vec::new()),
        JordanShape::Block2Plus1 => {
            let r = rotation_kind_with(lam[0] / lam[2], cfg);
            let class = match r.class {
                RotationClass::Torsion { .. } => ElementClass::B21Torsion,
                RotationClass::Irrational => ElementClass::B21UnitIrrational,
                RotationClass::NotUnitModulus => ElementClass::B21Nonunit,
            };
            (class, [0, 1, 2], vec![r])
        }
        JordanShape::Diag => classify_diag(&lam, cfg),
    };
    Classification { class, frame: order.map(|k| cols[k]), eigen, rotations }
}

fn classify_diag(lam: &[num_complex::Complex64; 3], cfg: &RotationConfig) -> (ElementClass, [usize; 3], Vec<RotationKind>) {
    let ratio = |i: usize, j: usize| rotation_kind_with(lam[i] / lam[j], cfg);
    let r01 = ratio(0, 1);
    let r02 = ratio(0, 2);
    let r12 = ratio(1, 2);
    let all = vec![r01, r02, r12];
    if all.iter().all(|r| r.class == RotationClass::Torsion { order: 1 }) {
        return (ElementClass::Identity, [0, 1, 2], all);
    }
    if all.iter().all(RotationKind::is_unit) {
        let class = if r01.is_torsion() && r02.is_torsion() {
            ElementClass::DiagTorsion
        } else {
            ElementClass::DiagEllipticIrrational
        };
        return (class, [0, 1, 2], all);
    }
    // the pair of equal moduli, if any, goes first
    let pairs = [((0, 1), 2, r01), ((0, 2), 1, r02), ((1, 2), 0, r12)];
    for ((i, j), k, r) in pairs {
        if r.is_unit() {
            let class = if r.is_torsion() {
                ElementClass::DiagEqualModuliRational
            } else {
                ElementClass::DiagEqualModuliIrrational
            };
            return (class, [i, j, k], vec![r]);
        }
    }
    (ElementClass::DiagStrongLoxodromic, [0, 1, 2], all)
}

/// One of the four layers of the limit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    L0,
    L1,
    L2,
    #[serde(rename = "Lambda")]
    Lambda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPoint {
    pub name: String,
    pub point: ProjPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedLine {
    pub name: String,
    pub line: ProjLine,
}

/// A finite union of points and lines, the whole plane, or the unknown
/// cell of the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSetDesc {
    pub tag: Layer,
    pub points: Vec<NamedPoint>,
    pub lines: Vec<NamedLine>,
    pub whole_plane: bool,
    pub unknown: bool,
}

impl LimitSetDesc {
    pub fn empty(tag: Layer) -> Self {
        Self { tag, points: Vec::new(), lines: Vec::new(), whole_plane: false, unknown: false }
    }

    pub fn is_empty(&self) -> bool {
        !self.whole_plane && !self.unknown && self.points.is_empty() && self.lines.is_empty()
    }

    /// Fubini–Study distance from `x` to the set (zero for the whole plane,
    /// `None` for an unknown or empty description).
    pub fn distance(&self, x: &ProjPoint) -> Option<f64> {
        if self.whole_plane {
            return Some(0.0);
        }
        let d = self
            .points
            .iter()
            .map(|p| crate::projective::fs_distance(x, &p.point))
            .chain(self.lines.iter().map(|l| crate::projective::fs_distance_to_line(x, &l.line)))
            .fold(f64::INFINITY, f64::min);
        d.is_finite().then_some(d)
    }

    /// Adds a point unless it is already present or lies on a listed line.
    pub fn push_point(&mut self, name: &str, p: ProjPoint) {
        let covered = self.points.iter().any(|q| q.point.approx_eq(&p, TAU_CMP))
            || self.lines.iter().any(|l| l.line.contains(&p, TAU_CMP));
        if !covered {
            self.points.push(NamedPoint { name: name.to_string(), point: p });
        }
    }

    /// Adds a line and drops points it absorbs.
    pub fn push_line(&mut self, name: &str, l: ProjLine) {
        if self.lines.iter().any(|m| m.line.approx_eq(&l, TAU_CMP)) {
            return;
        }
        self.points.retain(|p| !l.contains(&p.point, TAU_CMP));
        self.lines.push(NamedLine { name: name.to_string(), line: l });
    }

    /// Same set of points and lines, up to order and tolerance.
    pub fn same_set(&self, other: &Self, tol: f64) -> bool {
        self.whole_plane == other.whole_plane
            && self.unknown == other.unknown
            && self.points.len() == other.points.len()
            && self.lines.len() == other.lines.len()
            && self.points.iter().all(|p| other.points.iter().any(|q| p.point.approx_eq(&q.point, tol)))
            && self.lines.iter().all(|l| other.lines.iter().any(|m| l.line.approx_eq(&m.line, tol)))
    }

    /// Image of the set under `g`.
    pub fn image(&self, g: &ProjTransform) -> Self {
        Self {
            tag: self.tag,
            points: self
                .points
                .iter()
                .map(|p| NamedPoint { name: p.name.clone(), point: g.apply(&p.point) })
                .collect(),
            lines: self
                .lines
                .iter()
                .map(|l| NamedLine { name: l.name.clone(), line: g.apply_line(&l.line) })
                .collect(),
            ..self.clone()
        }
    }
}

/// The four layers of a cyclic group's limit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KulkarniLimitSet {
    #[serde(rename = "L0")]
    pub l0: LimitSetDesc,
    #[serde(rename = "L1")]
    pub l1: LimitSetDesc,
    #[serde(rename = "L2")]
    pub l2: LimitSetDesc,
    #[serde(rename = "Lambda")]
    pub lambda: LimitSetDesc,
}

#[derive(Clone, Copy)]
enum Piece {
    Pt(usize),
    Ln(usize, usize),
}

enum Cell {
    Set(&'static [Piece]),
    Whole,
    Unknown,
}

use Piece::{Ln, Pt};

fn table(class: ElementClass) -> [Cell; 3] {
    use Cell::{Set, Unknown, Whole};
    match class {
        ElementClass::Identity | ElementClass::DiagTorsion => [Set(&[]), Set(&[]), Set(&[])],
        ElementClass::Block3Unipotent => [Set(&[Pt(0)]), Set(&[Pt(0)]), Set(&[Ln(0, 1)])],
        ElementClass::DiagEllipticIrrational => [Unknown, Whole, Set(&[])],
        ElementClass::DiagEqualModuliRational => [
            Set(&[Ln(0, 1), Pt(2)]),
            Set(&[Ln(0, 1), Pt(2)]),
            Set(&[Ln(0, 1), Pt(2)]),
        ],
        ElementClass::DiagEqualModuliIrrational => [
            Set(&[Pt(0), Pt(1), Pt(2)]),
            Set(&[Ln(0, 1), Pt(2)]),
            Set(&[Ln(0, 1), Pt(2)]),
        ],
        ElementClass::DiagStrongLoxodromic => [
            Set(&[Pt(0), Pt(1), Pt(2)]),
            Set(&[Pt(0), Pt(1), Pt(2)]),
            Set(&[Ln(0, 1), Ln(1, 2)]),
        ],
        ElementClass::B21Torsion => [Set(&[Ln(0, 2)]), Set(&[Pt(0)]), Set(&[Pt(0)])],
        ElementClass::B21UnitIrrational => [Set(&[Pt(0), Pt(2)]), Set(&[Ln(0, 2)]), Set(&[Pt(0)])],
        ElementClass::B21Nonunit => [
            Set(&[Pt(0), Pt(2)]),
            Set(&[Pt(0), Pt(2)]),
            Set(&[Ln(0, 1), Ln(0, 2)]),
        ],
    }
}

fn point_name(k: usize) -> String {
    format!("f{}", k + 1)
}

fn line_name(i: usize, j: usize) -> String {
    format!("line(f{},f{})", i + 1, j + 1)
}

fn frame_line(frame: &[ProjPoint; 3], i: usize, j: usize) -> ProjLine {
    line_through(&frame[i], &frame[j]).expect("frame points are distinct")
}

fn build(tag: Layer, pieces: &[Piece], frame: &[ProjPoint; 3]) -> LimitSetDesc {
    let mut d = LimitSetDesc::empty(tag);
    for p in pieces.iter().filter(|p| matches!(p, Ln(..))) {
        if let Ln(i, j) = *p {
            d.push_line(&line_name(i, j), frame_line(frame, i, j));
        }
    }
    for p in pieces {
        if let Pt(k) = *p {
            d.push_point(&point_name(k), frame[k]);
        }
    }
    d
}

fn cell_desc(tag: Layer, cell: &Cell, frame: &[ProjPoint; 3]) -> LimitSetDesc {
    match cell {
        Cell::Set(pieces) => build(tag, pieces, frame),
        Cell::Whole => LimitSetDesc { whole_plane: true, ..LimitSetDesc::empty(tag) },
        Cell::Unknown => LimitSetDesc { unknown: true, ..LimitSetDesc::empty(tag) },
    }
}

/// Union of descriptions; the whole plane absorbs everything and an
/// unknown layer makes the union unknown unless the plane is covered.
pub fn union(tag: Layer, parts: &[&LimitSetDesc]) -> LimitSetDesc {
    let mut out = LimitSetDesc::empty(tag);
    if parts.iter().any(|p| p.whole_plane) {
        out.whole_plane = true;
        return out;
    }
    out.unknown = parts.iter().any(|p| p.unknown);
    for p in parts {
        for l in &p.lines {
            out.push_line(&l.name, l.line);
        }
    }
    for p in parts {
        for q in &p.points {
            out.push_point(&q.name, q.point);
        }
    }
    out
}

pub fn kulkarni_limit_set(c: &Classification) -> KulkarniLimitSet {
    let [c0, c1, c2] = table(c.class);
    let l0 = cell_desc(Layer::L0, &c0, &c.frame);
    let l1 = cell_desc(Layer::L1, &c1, &c.frame);
    let l2 = cell_desc(Layer::L2, &c2, &c.frame);
    let lambda = union(Layer::Lambda, &[&l0, &l1, &l2]);
    KulkarniLimitSet { l0, l1, l2, lambda }
}

/// An open region described as the complement of a closed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub complement_of: LimitSetDesc,
}

impl Region {
    pub fn is_empty(&self) -> bool {
        self.complement_of.whole_plane
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDesc {
    pub regions: Vec<Region>,
}

pub fn maximal_domains(c: &Classification) -> RegionDesc {
    let f = &c.frame;
    let removed = |pieces: &[Piece]| Region { complement_of: build(Layer::Lambda, pieces, f) };
    let regions = match c.class {
        ElementClass::DiagStrongLoxodromic => vec![removed(&[Ln(0, 1), Pt(2)]), removed(&[Ln(2, 1), Pt(0)])],
        ElementClass::B21Nonunit => vec![removed(&[Ln(0, 1), Pt(2)]), removed(&[Ln(2, 0)])],
        _ => vec![Region { complement_of: kulkarni_limit_set(c).lambda }],
    };
    RegionDesc { regions }
}

/// All lines through `apex`, parametrized by the points of `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pencil {
    pub name: String,
    pub apex: ProjPoint,
    pub base: ProjLine,
}

impl Pencil {
    pub fn contains(&self, l: &ProjLine, tol: f64) -> bool {
        l.contains(&self.apex, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantLines {
    pub lines: Vec<NamedLine>,
    pub pencils: Vec<Pencil>,
    /// Every line is invariant (the identity).
    pub all: bool,
}

/// Invariant lines, decided by the eigenvalue clusters of the Jordan form.
pub fn invariant_lines(c: &Classification) -> InvariantLines {
    let f = &c.frame;
    let named = |i: usize, j: usize| NamedLine { name: line_name(i, j), line: frame_line(f, i, j) };
    let pencil = |apex: usize, i: usize, j: usize| Pencil {
        name: format!("pencil({})", point_name(apex)),
        apex: f[apex],
        base: frame_line(f, i, j),
    };
    let mut out = InvariantLines { lines: Vec::new(), pencils: Vec::new(), all: false };
    if c.class == ElementClass::Identity {
        out.all = true;
        return out;
    }
    match c.eigen.shape {
        JordanShape::Block3 => out.lines.push(named(0, 1)),
        JordanShape::Block2Plus1 => {
            if c.eigen.multiplicities.len() == 1 {
                out.pencils.push(pencil(0, 2, 1));
            } else {
                out.lines.push(named(0, 2));
                out.lines.push(named(0, 1));
            }
        }
        JordanShape::Diag => {
            let v = c.eigen.column_values();
            // positions of the frame points inside the Jordan basis
            let pos: Vec<usize> = f
                .iter()
                .map(|p| {
                    (0..3)
                        .find(|&k| ProjPoint::from_vec(&c.eigen.column(k)).unwrap().approx_eq(p, 1e-12))
                        .unwrap()
                })
                .collect();
            let same = |i: usize, j: usize| c.eigen.multiplicities.len() < 3 && (v[pos[i]] - v[pos[j]]).norm() == 0.0;
            match (same(0, 1), same(0, 2), same(1, 2)) {
                (false, false, false) => {
                    out.lines.push(named(0, 1));
                    out.lines.push(named(0, 2));
                    out.lines.push(named(1, 2));
                }
                (true, _, _) => {
                    out.lines.push(named(0, 1));
                    out.pencils.push(pencil(2, 0, 1));
                }
                (_, true, _) => {
                    out.lines.push(named(0, 2));
                    out.pencils.push(pencil(1, 0, 2));
                }
                _ => {
                    out.lines.push(named(1, 2));
                    out.pencils.push(pencil(0, 1, 2));
                }
            }
        }
    }
    out
}
