//! The catalogue of 33 (anchored) multiview-variety families: images of
//! k-planes in `P^N` (points, lines, planes), optionally constrained to a
//! Schubert variety (through a point, inside a plane, meeting fixed lines),
//! under n projections `P^N ⇢ P^h`.
//!
//! The module provides the family grammar and enumeration, Schubert anchor
//! sampling and chart parametrizations, dimension formulas with their
//! camera-count hypotheses, set-theoretic membership tests via rank
//! conditions, Euler characteristics, and the reduction of every family to
//! one of the 14 ED-equivalence class representatives.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::camera::{CameraArrangement, CameraError};
use crate::linalg::{self, cr};
use crate::polysys::MultiPoly;
use crate::projective::{
    binom, cross_to_plucker_matrix, line_point_join, meet_form, plucker_embed, points_on_line,
    quadric_through_lines, ruling_parametrization, wedge_power_unchecked, GeometryError,
    GrassmannCoords, HomogeneousPoint,
};
use crate::{C64, REL_RANK_TOL};

#[derive(Debug, Error)]
pub enum CatalogueError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown family tag: {0}")]
    UnknownFamily(String),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The kind of Schubert condition imposed on the world subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorKind {
    None,
    Point,
    Line,
    TwoLines,
    ThreeLines,
    Plane,
    PlanePoint,
}

impl AnchorKind {
    pub fn label(&self) -> &'static str {
        match self {
            AnchorKind::None => "none",
            AnchorKind::Point => "point",
            AnchorKind::Line => "line",
            AnchorKind::TwoLines => "two lines",
            AnchorKind::ThreeLines => "three lines",
            AnchorKind::Plane => "plane",
            AnchorKind::PlanePoint => "plane+point",
        }
    }
}

/// Concrete anchoring data. Planes are stored by their Grassmann
/// coordinates (signed 3×3 minors of a spanning matrix).
#[derive(Debug, Clone)]
pub enum SchubertAnchor {
    None,
    Point(HomogeneousPoint),
    Line(GrassmannCoords),
    TwoLines([GrassmannCoords; 2]),
    ThreeLines([GrassmannCoords; 3]),
    Plane(GrassmannCoords),
    PlanePoint { plane: GrassmannCoords, point: HomogeneousPoint },
}

impl SchubertAnchor {
    pub fn kind(&self) -> AnchorKind {
        match self {
            SchubertAnchor::None => AnchorKind::None,
            SchubertAnchor::Point(_) => AnchorKind::Point,
            SchubertAnchor::Line(_) => AnchorKind::Line,
            SchubertAnchor::TwoLines(_) => AnchorKind::TwoLines,
            SchubertAnchor::ThreeLines(_) => AnchorKind::ThreeLines,
            SchubertAnchor::Plane(_) => AnchorKind::Plane,
            SchubertAnchor::PlanePoint { .. } => AnchorKind::PlanePoint,
        }
    }

    /// Check the structural invariants: multi-line anchors pairwise
    /// disjoint, plane-point anchors incident.
    pub fn validate(&self) -> Result<(), CatalogueError> {
        let disjoint = |a: &GrassmannCoords, b: &GrassmannCoords| -> bool {
            meet_form(a.coords(), b.coords()).norm()
                > 1e-10 * a.coords().norm() * b.coords().norm()
        };
        match self {
            SchubertAnchor::TwoLines([a, b]) => {
                if !disjoint(a, b) {
                    return Err(CatalogueError::DegenerateInput(
                        "anchor lines must be pairwise disjoint".into(),
                    ));
                }
            }
            SchubertAnchor::ThreeLines(ls) => {
                for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                    if !disjoint(&ls[i], &ls[j]) {
                        return Err(CatalogueError::DegenerateInput(
                            "anchor lines must be pairwise disjoint".into(),
                        ));
                    }
                }
            }
            SchubertAnchor::PlanePoint { plane, point } => {
                let w = plane_covector(plane);
                let r = w.dot(point.coords()).norm() / (w.norm() * point.coords().norm());
                if r > 1e-10 {
                    return Err(CatalogueError::DegenerateInput(
                        "anchor point must lie on the anchor plane".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One of the 33 families, without anchor data or camera count:
/// the object dimension k, the ambient and image dimensions (N, h), and the
/// anchor kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FamilyClass {
    pub source_dim: usize,
    pub image_dim: usize,
    pub object_dim: usize,
    pub anchor_kind: AnchorKind,
}

impl FamilyClass {
    pub fn new(
        source_dim: usize,
        image_dim: usize,
        object_dim: usize,
        anchor_kind: AnchorKind,
    ) -> Self {
        Self { source_dim, image_dim, object_dim, anchor_kind }
    }

    /// The stable string tag, e.g. `M^{3,2}`, `L^{L^2,3,2}`, `P^{X,3,3}`.
    pub fn tag(&self) -> String {
        let base = match self.object_dim {
            0 => "M",
            1 => "L",
            2 => "P",
            _ => unreachable!("object dimension beyond planes"),
        };
        let anchor = match (self.object_dim, self.anchor_kind) {
            (_, AnchorKind::None) => None,
            (_, AnchorKind::Point) => Some("X".to_string()),
            (_, AnchorKind::Line) => Some("L".to_string()),
            (_, AnchorKind::TwoLines) => Some("L^2".to_string()),
            (_, AnchorKind::ThreeLines) => Some("L^3".to_string()),
            (_, AnchorKind::Plane) => Some("P".to_string()),
            (_, AnchorKind::PlanePoint) => Some("(P,X)".to_string()),
        };
        match anchor {
            None => format!("{base}^{{{},{}}}", self.source_dim, self.image_dim),
            Some(a) => format!("{base}^{{{a},{},{}}}", self.source_dim, self.image_dim),
        }
    }

    /// Parse a family tag. Inverse of [`FamilyClass::tag`].
    pub fn parse(tag: &str) -> Result<Self, CatalogueError> {
        let bad = || CatalogueError::UnknownFamily(tag.to_string());
        let (base, rest) = tag.split_at(tag.find('^').ok_or_else(bad)?);
        let object_dim = match base {
            "M" => 0,
            "L" => 1,
            "P" => 2,
            _ => return Err(bad()),
        };
        let inner = rest
            .strip_prefix("^{")
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(bad)?;
        let (anchor_token, dims) = if let Some(stripped) = inner.strip_prefix("(P,X),") {
            (Some("(P,X)"), stripped)
        } else {
            let parts: Vec<&str> = inner.splitn(2, ',').collect();
            if parts.len() != 2 {
                return Err(bad());
            }
            if parts[0].chars().all(|c| c.is_ascii_digit()) {
                (None, inner)
            } else {
                (Some(parts[0]), parts[1])
            }
        };
        let nums: Vec<&str> = dims.split(',').collect();
        if nums.len() != 2 {
            return Err(bad());
        }
        let source_dim: usize = nums[0].parse().map_err(|_| bad())?;
        let image_dim: usize = nums[1].parse().map_err(|_| bad())?;
        let anchor_kind = match (object_dim, anchor_token) {
            (_, None) => AnchorKind::None,
            (0, Some("L")) => AnchorKind::Line,
            (0, Some("P")) => AnchorKind::Plane,
            (1, Some("X")) => AnchorKind::Point,
            (1, Some("P")) => AnchorKind::Plane,
            (1, Some("(P,X)")) => AnchorKind::PlanePoint,
            (1, Some("L")) => AnchorKind::Line,
            (1, Some("L^2")) => AnchorKind::TwoLines,
            (1, Some("L^3")) => AnchorKind::ThreeLines,
            (2, Some("X")) => AnchorKind::Point,
            (2, Some("L")) => AnchorKind::Line,
            _ => return Err(bad()),
        };
        let class = Self { source_dim, image_dim, object_dim, anchor_kind };
        if !all_families().contains(&class) {
            return Err(bad());
        }
        Ok(class)
    }
}

/// All 33 catalogued families.
pub fn all_families() -> Vec<FamilyClass> {
    use AnchorKind::*;
    let mut v = Vec::with_capacity(33);
    let f = |n, h, k, a| FamilyClass::new(n, h, k, a);
    // plain point families
    for &(n, h) in &[(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)] {
        v.push(f(n, h, 0, None));
    }
    // points on a line
    for &(n, h) in &[(2, 1), (2, 2), (3, 1), (3, 2), (3, 3)] {
        v.push(f(n, h, 0, Line));
    }
    // points on a plane
    for h in 1..=3 {
        v.push(f(3, h, 0, Plane));
    }
    // plain line families
    v.push(f(2, 2, 1, None));
    v.push(f(3, 2, 1, None));
    v.push(f(3, 3, 1, None));
    // anchored line families in P^3
    for h in [2, 3] {
        v.push(f(3, h, 1, Point));
        v.push(f(3, h, 1, Plane));
        v.push(f(3, h, 1, PlanePoint));
        v.push(f(3, h, 1, Line));
        v.push(f(3, h, 1, TwoLines));
        v.push(f(3, h, 1, ThreeLines));
    }
    // lines through a point in the plane
    v.push(f(2, 2, 1, Point));
    // plane families
    v.push(f(3, 3, 2, None));
    v.push(f(3, 3, 2, Point));
    v.push(f(3, 3, 2, Line));
    v
}

/// A concrete family instance: class data plus anchor subspaces and the
/// camera count.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub source_dim: usize,
    pub image_dim: usize,
    pub object_dim: usize,
    pub anchor: SchubertAnchor,
    pub n: usize,
}

impl FamilySpec {
    pub fn class(&self) -> FamilyClass {
        FamilyClass {
            source_dim: self.source_dim,
            image_dim: self.image_dim,
            object_dim: self.object_dim,
            anchor_kind: self.anchor.kind(),
        }
    }

    pub fn tag(&self) -> String {
        self.class().tag()
    }
}

/// Sample anchor data for a family class.
pub fn sample_anchor<R: Rng>(
    class: &FamilyClass,
    rng: &mut R,
) -> Result<SchubertAnchor, CatalogueError> {
    let np1 = class.source_dim + 1;
    let random_point =
        |rng: &mut R| HomogeneousPoint::new(linalg::real_vec(rng, np1)).expect("nonzero sample");
    let random_line = |rng: &mut R| -> Result<GrassmannCoords, CatalogueError> {
        for _ in 0..50 {
            let a = random_point(rng);
            let b = random_point(rng);
            if let Ok(l) = plucker_embed(&[a, b]) {
                return Ok(l);
            }
        }
        Err(CatalogueError::DegenerateInput("failed to sample a line".into()))
    };
    let anchor = match class.anchor_kind {
        AnchorKind::None => SchubertAnchor::None,
        AnchorKind::Point => SchubertAnchor::Point(random_point(rng)),
        AnchorKind::Line => SchubertAnchor::Line(random_line(rng)?),
        AnchorKind::TwoLines => loop {
            let pair = [random_line(rng)?, random_line(rng)?];
            let cand = SchubertAnchor::TwoLines(pair);
            if cand.validate().is_ok() {
                break cand;
            }
        },
        AnchorKind::ThreeLines => loop {
            let triple = [random_line(rng)?, random_line(rng)?, random_line(rng)?];
            let cand = SchubertAnchor::ThreeLines(triple);
            if cand.validate().is_ok() {
                break cand;
            }
        },
        AnchorKind::Plane => SchubertAnchor::Plane(
            GrassmannCoords::new(linalg::real_vec(rng, 4), 2, 3).expect("nonzero sample"),
        ),
        AnchorKind::PlanePoint => {
            let plane = GrassmannCoords::new(linalg::real_vec(rng, 4), 2, 3).expect("nonzero");
            let w = plane_covector(&plane);
            let basis = plane_point_basis(&w);
            let combo: DVector<C64> = (0..3)
                .map(|j| &basis[j] * cr(rng.gen_range(-1.0..1.0)))
                .fold(DVector::zeros(4), |acc, v| acc + v);
            let point = HomogeneousPoint::new(combo)
                .map_err(|_| CatalogueError::DegenerateInput("plane-point sample vanished".into()))?;
            SchubertAnchor::PlanePoint { plane, point }
        }
    };
    anchor.validate()?;
    Ok(anchor)
}

/// Sample a concrete family spec: anchor data for the class plus the
/// camera count.
pub fn sample_spec<R: Rng>(
    class: &FamilyClass,
    n: usize,
    rng: &mut R,
) -> Result<FamilySpec, CatalogueError> {
    Ok(FamilySpec {
        source_dim: class.source_dim,
        image_dim: class.image_dim,
        object_dim: class.object_dim,
        anchor: sample_anchor(class, rng)?,
        n,
    })
}

/// Dual covector of a plane given by Grassmann coordinates
/// (m012, m013, m023, m123): w = (m123, −m023, m013, −m012).
pub fn plane_covector(plane: &GrassmannCoords) -> DVector<C64> {
    assert_eq!((plane.k(), plane.ambient_dim()), (2, 3));
    let m = plane.coords();
    DVector::from_vec(vec![m[3], -m[2], m[1], -m[0]])
}

/// The signed permutation with ι₃(plane) = S · covector(plane).
pub fn covector_to_tri_matrix() -> DMatrix<C64> {
    let mut s = DMatrix::zeros(4, 4);
    s[(0, 3)] = cr(-1.0);
    s[(1, 2)] = cr(1.0);
    s[(2, 1)] = cr(-1.0);
    s[(3, 0)] = cr(1.0);
    s
}

/// Grassmann coordinates of the span of three points of `P^3`.
pub fn tri_embed(
    a: &DVector<C64>,
    b: &DVector<C64>,
    c: &DVector<C64>,
) -> Result<GrassmannCoords, GeometryError> {
    let pts = [a, b, c]
        .iter()
        .map(|v| HomogeneousPoint::new((*v).clone()))
        .collect::<Result<Vec<_>, _>>()?;
    plucker_embed(&pts)
}

/// Orthonormal basis of the plane with covector w (three points of `P^3`).
fn plane_point_basis(w: &DVector<C64>) -> Vec<DVector<C64>> {
    let m = DMatrix::from_fn(1, w.len(), |_, j| w[j]);
    linalg::kernel(&m)
}

/// Two orthonormal dual vectors annihilating a line of `P^3`.
pub fn line_dual_basis(l: &GrassmannCoords) -> Result<[DVector<C64>; 2], CatalogueError> {
    let (u, v) = points_on_line(l.coords())?;
    let m = DMatrix::from_fn(2, 4, |i, j| if i == 0 { u[j] } else { v[j] });
    let k = linalg::kernel(&m);
    if k.len() != 2 {
        return Err(CatalogueError::DegenerateInput(
            "line annihilator is not two-dimensional".into(),
        ));
    }
    Ok([k[0].clone(), k[1].clone()])
}

/// Dual covector of a line in `P^2` (Grassmann coordinates to the
/// annihilating linear form).
pub fn plane_line_covector(l: &GrassmannCoords) -> DVector<C64> {
    assert_eq!((l.k(), l.ambient_dim()), (1, 2));
    cross_to_plucker_matrix() * l.coords()
}

// ---------------------------------------------------------------------------
// Dimensions and hypotheses
// ---------------------------------------------------------------------------

/// Dimension of the Schubert domain Λ of a family class.
pub fn domain_dimension(class: &FamilyClass) -> usize {
    use AnchorKind::*;
    match (class.object_dim, class.source_dim, class.anchor_kind) {
        (0, n, None) => n,
        (0, _, Line) => 1,
        (0, _, Plane) => 2,
        (1, 3, None) => 4,
        (1, 2, None) => 2,
        (1, 3, Point) => 2,
        (1, 2, Point) => 1,
        (1, 3, Plane) => 2,
        (1, 3, PlanePoint) => 1,
        (1, 3, Line) => 3,
        (1, 3, TwoLines) => 2,
        (1, 3, ThreeLines) => 1,
        (2, 3, None) => 3,
        (2, 3, Point) => 2,
        (2, 3, Line) => 1,
        _ => unreachable!("not a catalogued family: {class:?}"),
    }
}

/// Smallest camera count for which the joint map is generically finite
/// onto its image, so that the variety has the dimension of Λ.
pub fn min_cameras(class: &FamilyClass) -> usize {
    use AnchorKind::*;
    match (class.object_dim, class.source_dim, class.image_dim, class.anchor_kind) {
        (0, n, h, None) if h == n => 1,
        (0, n, h, None) if h + 1 == n => 2,
        (0, 3, 1, None) => 3,
        (0, 3, 1, Plane) => 2,
        (1, 3, 2, None) => 2,
        (1, 3, 2, Point) => 2,
        (1, 3, 2, Line) => 2,
        _ => 1,
    }
}

/// The dimension of the family, after validating the camera-count
/// hypotheses for the given n.
pub fn dimension(spec: &FamilySpec) -> Result<usize, CatalogueError> {
    let class = spec.class();
    let need = min_cameras(&class);
    if spec.n < need {
        return Err(CatalogueError::HypothesisViolated(format!(
            "{} needs at least {need} cameras, got {}",
            class.tag(),
            spec.n
        )));
    }
    Ok(domain_dimension(&class))
}

// ---------------------------------------------------------------------------
// Euler characteristics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EulerKind {
    /// Gr(k, P^n).
    Grassmannian { k: usize, n: usize },
    ProjSpace(usize),
    P1xP1,
    /// The two-line-anchored family with h = 2 and n cameras.
    LTwoAnchored { n: usize },
}

pub fn euler_characteristic(kind: EulerKind) -> usize {
    match kind {
        EulerKind::Grassmannian { k, n } => binom(n + 1, k + 1),
        EulerKind::ProjSpace(n) => n + 1,
        EulerKind::P1xP1 => 4,
        EulerKind::LTwoAnchored { n } => 4 + 2 * n,
    }
}

// ---------------------------------------------------------------------------
// ED-equivalence representatives
// ---------------------------------------------------------------------------

/// Reduction of a family to its ED-equivalence class representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Representative {
    /// One of the 14 class representatives.
    pub class: FamilyClass,
    /// A further reduction that is only a linear isomorphism, not a proven
    /// ED-equivalence (the h = 3 three-line family onto its h = 2 sibling).
    pub iso_only: Option<FamilyClass>,
}

pub fn representative(class: &FamilyClass) -> Representative {
    use AnchorKind::*;
    let t = |tag: &str| FamilyClass::parse(tag).expect("representative tag");
    let target = match (
        class.object_dim,
        class.source_dim,
        class.image_dim,
        class.anchor_kind,
    ) {
        (0, 3, 3, None) | (2, 3, 3, None) => t("M^{3,3}"),
        (0, 2, 2, None)
        | (1, 2, 2, None)
        | (0, 3, 3, Plane)
        | (0, 3, 2, Plane)
        | (1, 3, 3, Point)
        | (1, 3, 3, Plane)
        | (1, 3, 2, Plane)
        | (2, 3, 3, Point) => t("M^{2,2}"),
        (0, 2, 1, None) | (0, 3, 1, Plane) | (1, 3, 2, Point) => t("M^{2,1}"),
        (0, 1, 1, None)
        | (0, _, _, Line)
        | (1, 3, _, PlanePoint)
        | (1, 2, 2, Point)
        | (2, 3, 3, Line) => t("M^{1,1}"),
        _ => *class,
    };
    let iso_only = if class.anchor_kind == ThreeLines && class.image_dim == 3 {
        Option::Some(t("L^{L^3,3,2}"))
    } else {
        Option::None
    };
    Representative { class: target, iso_only }
}

// ---------------------------------------------------------------------------
// Schubert parametrizations and world charts
// ---------------------------------------------------------------------------

/// Explicit parametrization of the Schubert domain Λ inside its Grassmann
/// coordinate space.
#[derive(Debug, Clone)]
pub enum SchubertMap {
    /// a ↦ M·a, domain a ∈ P^{d}.
    Linear(DMatrix<C64>),
    /// a ↦ M·(a0², a0a1, a1²), domain P^1.
    Veronese(DMatrix<C64>),
    /// Polynomial chart without a linear matrix form (plain Grassmannian
    /// and one- or two-line transversal charts), in affine variables.
    Chart(Vec<MultiPoly>),
}

/// A parametrization of Λ in affine chart coordinates: polynomial
/// homogeneous world coordinates in `domain_dim` variables.
#[derive(Debug, Clone)]
pub struct WorldChart {
    pub coords: Vec<MultiPoly>,
    pub domain_dim: usize,
    pub map: SchubertMap,
}

impl WorldChart {
    pub fn eval(&self, t: &[C64]) -> DVector<C64> {
        crate::polysys::poly_eval_vec(&self.coords, t)
    }
}

fn affine_polys_from_linear(m: &DMatrix<C64>) -> Vec<MultiPoly> {
    let d = m.ncols() - 1;
    (0..m.nrows())
        .map(|i| {
            let coeffs: Vec<C64> = (1..m.ncols()).map(|j| m[(i, j)]).collect();
            MultiPoly::affine_linear(d, m[(i, 0)], &coeffs)
        })
        .collect()
}

fn veronese_polys(b: &DMatrix<C64>) -> Vec<MultiPoly> {
    assert_eq!(b.ncols(), 3);
    (0..b.nrows())
        .map(|i| {
            let mut p = MultiPoly::constant(1, b[(i, 0)]);
            p.add_term(vec![1], b[(i, 1)]);
            p.add_term(vec![2], b[(i, 2)]);
            p
        })
        .collect()
}

/// Wedge of two vectors of polynomials: entries x_a y_b − x_b y_a in lex
/// pair order.
fn poly_wedge2(x: &[MultiPoly], y: &[MultiPoly]) -> Vec<MultiPoly> {
    let m = x.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in (a + 1)..m {
            out.push(x[a].mul(&y[b]).sub(&x[b].mul(&y[a])));
        }
    }
    out
}

fn affine_point_path(base: &DVector<C64>, dirs: &[DVector<C64>], nv: usize, var_offset: usize) -> Vec<MultiPoly> {
    (0..base.len())
        .map(|c| {
            let mut p = MultiPoly::constant(nv, base[c]);
            for (j, d) in dirs.iter().enumerate() {
                let mut e = vec![0; nv];
                e[var_offset + j] = 1;
                p.add_term(e, d[c]);
            }
            p
        })
        .collect()
}

/// Sample a full-rank matrix whose columns complete the given vectors to a
/// spanning set.
fn completing_matrix<R: Rng>(
    rng: &mut R,
    fixed: &[DVector<C64>],
    rows: usize,
    cols: usize,
) -> DMatrix<C64> {
    loop {
        let h = linalg::real_mat(rng, rows, cols);
        let mut stack = DMatrix::zeros(rows, fixed.len() + cols);
        for (j, f) in fixed.iter().enumerate() {
            stack.set_column(j, f);
        }
        for j in 0..cols {
            stack.set_column(fixed.len() + j, &h.column(j).into_owned());
        }
        if linalg::rank(&stack) == (fixed.len() + cols).min(rows) {
            return h;
        }
    }
}

/// Parametrization of the Schubert domain of a family, with auxiliary
/// generic data drawn from the rng. Linear anchors give an explicit matrix;
/// the three-line anchor gives the quadratic ruling map; the remaining
/// charts are polynomial.
pub fn schubert_parametrize<R: Rng>(
    class: &FamilyClass,
    anchor: &SchubertAnchor,
    rng: &mut R,
) -> Result<SchubertMap, CatalogueError> {
    anchor.validate()?;
    let np1 = class.source_dim + 1;
    let map = match (class.object_dim, class.source_dim, anchor) {
        // Points of P^N.
        (0, _, SchubertAnchor::None) => SchubertMap::Linear(DMatrix::identity(np1, np1)),
        // Points on a line.
        (0, 3, SchubertAnchor::Line(l)) => {
            let (u, v) = points_on_line(l.coords())?;
            let mut m = DMatrix::zeros(4, 2);
            m.set_column(0, &u);
            m.set_column(1, &v);
            SchubertMap::Linear(m)
        }
        (0, 2, SchubertAnchor::Line(l)) => {
            let d = plane_line_covector(l);
            let dm = DMatrix::from_fn(1, 3, |_, j| d[j]);
            let k = linalg::kernel(&dm);
            let mut m = DMatrix::zeros(3, 2);
            m.set_column(0, &k[0]);
            m.set_column(1, &k[1]);
            SchubertMap::Linear(m)
        }
        // Points on a plane.
        (0, 3, SchubertAnchor::Plane(p)) => {
            let w = plane_covector(p);
            let basis = plane_point_basis(&w);
            let mut m = DMatrix::zeros(4, 3);
            for (j, b) in basis.iter().enumerate() {
                m.set_column(j, b);
            }
            SchubertMap::Linear(m)
        }
        // All lines of P^3: standard Grassmann chart.
        (1, 3, SchubertAnchor::None) => {
            let nv = 4;
            let consts = |vals: [f64; 4]| -> Vec<MultiPoly> {
                vals.iter().map(|&v| MultiPoly::constant(nv, cr(v))).collect()
            };
            let mut x = consts([1.0, 0.0, 0.0, 0.0]);
            x[2] = MultiPoly::var(nv, 0);
            x[3] = MultiPoly::var(nv, 1);
            let mut y = consts([0.0, 1.0, 0.0, 0.0]);
            y[2] = MultiPoly::var(nv, 2);
            y[3] = MultiPoly::var(nv, 3);
            SchubertMap::Chart(poly_wedge2(&x, &y))
        }
        // All lines of P^2: the dual plane.
        (1, 2, SchubertAnchor::None) => SchubertMap::Linear(DMatrix::identity(3, 3)),
        // Lines through a point.
        (1, 3, SchubertAnchor::Point(x)) => {
            let h = completing_matrix(rng, &[x.coords().clone()], 4, 3);
            let mut m = DMatrix::zeros(6, 3);
            for j in 0..3 {
                let hp = HomogeneousPoint::new(h.column(j).into_owned())?;
                m.set_column(j, plucker_embed(&[x.clone(), hp])?.coords());
            }
            SchubertMap::Linear(m)
        }
        (1, 2, SchubertAnchor::Point(x)) => {
            let h = completing_matrix(rng, &[x.coords().clone()], 3, 2);
            let mut m = DMatrix::zeros(3, 2);
            for j in 0..2 {
                let hp = HomogeneousPoint::new(h.column(j).into_owned())?;
                m.set_column(j, plucker_embed(&[x.clone(), hp])?.coords());
            }
            SchubertMap::Linear(m)
        }
        // Lines inside a plane.
        (1, 3, SchubertAnchor::Plane(p)) => {
            let w = plane_covector(p);
            let basis = plane_point_basis(&w);
            let mut h = DMatrix::zeros(4, 3);
            for (j, b) in basis.iter().enumerate() {
                h.set_column(j, b);
            }
            SchubertMap::Linear(wedge_power_unchecked(&h, 2))
        }
        // Lines through a point inside a plane.
        (1, 3, SchubertAnchor::PlanePoint { plane, point }) => {
            let w = plane_covector(plane);
            let basis = plane_point_basis(&w);
            let b = DMatrix::from_fn(4, 3, |i, j| basis[j][i]);
            let g = loop {
                let g = linalg::real_mat(rng, 3, 2);
                let cand = &b * &g;
                let mut stack = DMatrix::zeros(4, 3);
                stack.set_column(0, point.coords());
                stack.set_column(1, &cand.column(0).into_owned());
                stack.set_column(2, &cand.column(1).into_owned());
                if linalg::rank(&stack) == 3 {
                    break cand;
                }
            };
            let mut m = DMatrix::zeros(6, 2);
            for j in 0..2 {
                let q = HomogeneousPoint::new(g.column(j).into_owned())?;
                m.set_column(j, plucker_embed(&[point.clone(), q])?.coords());
            }
            SchubertMap::Linear(m)
        }
        // Lines meeting one fixed line: point on the line joined to a point
        // of an auxiliary generic plane.
        (1, 3, SchubertAnchor::Line(l)) => {
            let (u, v) = points_on_line(l.coords())?;
            let aux = linalg::real_vec(rng, 4);
            let basis = plane_point_basis(&aux);
            let nv = 3;
            let x = affine_point_path(&u, &[v.clone()], nv, 0);
            let y = affine_point_path(&basis[0], &[basis[1].clone(), basis[2].clone()], nv, 1);
            SchubertMap::Chart(poly_wedge2(&x, &y))
        }
        // Lines meeting two fixed disjoint lines.
        (1, 3, SchubertAnchor::TwoLines([l1, l2])) => {
            let (u1, v1) = points_on_line(l1.coords())?;
            let (u2, v2) = points_on_line(l2.coords())?;
            let nv = 2;
            let x = affine_point_path(&u1, &[v1.clone()], nv, 0);
            let y = affine_point_path(&u2, &[v2.clone()], nv, 1);
            SchubertMap::Chart(poly_wedge2(&x, &y))
        }
        // Lines meeting three pairwise disjoint lines: the quadric ruling.
        (1, 3, SchubertAnchor::ThreeLines([l1, l2, l3])) => {
            let ruling = ruling_parametrization(l1, l2, l3)?;
            SchubertMap::Veronese(ruling.matrix().clone())
        }
        // All planes of P^3: the dual space in Grassmann coordinates.
        (2, 3, SchubertAnchor::None) => SchubertMap::Linear(covector_to_tri_matrix()),
        // Planes through a point: covectors annihilating it.
        (2, 3, SchubertAnchor::Point(x)) => {
            let xm = DMatrix::from_fn(1, 4, |_, j| x.coords()[j]);
            let k = linalg::kernel(&xm);
            let mut m = DMatrix::zeros(4, 3);
            for (j, b) in k.iter().enumerate() {
                m.set_column(j, b);
            }
            SchubertMap::Linear(covector_to_tri_matrix() * m)
        }
        // Planes containing a line.
        (2, 3, SchubertAnchor::Line(l)) => {
            let (u, v) = points_on_line(l.coords())?;
            let h = completing_matrix(rng, &[u.clone(), v.clone()], 4, 2);
            let mut m = DMatrix::zeros(4, 2);
            for j in 0..2 {
                let col = h.column(j).into_owned();
                m.set_column(j, tri_embed(&u, &v, &col)?.coords());
            }
            SchubertMap::Linear(m)
        }
        _ => {
            return Err(CatalogueError::UnknownFamily(format!(
                "no Schubert parametrization for {}",
                class.tag()
            )))
        }
    };
    Ok(map)
}

/// The family's domain chart: homogeneous world coordinates as polynomials
/// in affine chart variables.
pub fn world_chart<R: Rng>(
    spec: &FamilySpec,
    rng: &mut R,
) -> Result<WorldChart, CatalogueError> {
    let class = spec.class();
    let map = schubert_parametrize(&class, &spec.anchor, rng)?;
    let (coords, domain_dim) = match &map {
        SchubertMap::Linear(m) => (affine_polys_from_linear(m), m.ncols() - 1),
        SchubertMap::Veronese(b) => (veronese_polys(b), 1),
        SchubertMap::Chart(polys) => {
            let d = polys[0].num_vars;
            (polys.clone(), d)
        }
    };
    debug_assert_eq!(domain_dim, domain_dimension(&class));
    Ok(WorldChart { coords, domain_dim, map })
}

/// Apply the arrangement to a world object (its Grassmann coordinates),
/// producing the tuple of image coordinates.
pub fn project_world(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
    world: &DVector<C64>,
) -> Result<Vec<DVector<C64>>, CatalogueError> {
    let k_plus_1 = spec.object_dim + 1;
    let mut out = Vec::with_capacity(arrangement.len());
    for (i, cam) in arrangement.cameras.iter().enumerate() {
        let w = cam.wedge(k_plus_1);
        let y = &w * world;
        if y.norm() < 1e-10 * w.norm() * world.norm() {
            return Err(CatalogueError::Camera(CameraError::CenterIncidence { index: i }));
        }
        out.push(y);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub label: String,
    pub residual: f64,
    pub threshold: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub member: bool,
    pub conditions: Vec<ConditionCheck>,
}

impl MembershipReport {
    fn from_conditions(conditions: Vec<ConditionCheck>) -> Self {
        Self { member: conditions.iter().all(|c| c.ok), conditions }
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.conditions.iter().map(|c| c.residual).collect()
    }
}

fn check(label: impl Into<String>, residual: f64) -> ConditionCheck {
    let threshold = REL_RANK_TOL;
    ConditionCheck { label: label.into(), residual, threshold, ok: residual <= threshold }
}

fn normalized_columns(cols: &[DVector<C64>]) -> DMatrix<C64> {
    let rows = cols[0].len();
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        let norm = c.norm();
        assert!(norm > 0.0, "zero column in membership matrix");
        m.set_column(j, &(c / cr(norm)));
    }
    m
}

/// Dominant left singular direction of a matrix (the best rank-one common
/// column), unit norm.
fn dominant_direction(m: &DMatrix<C64>) -> DVector<C64> {
    linalg::dominant_left_direction(m)
}

fn anchor_dual_rows(spec: &FamilySpec) -> Result<Vec<DVector<C64>>, CatalogueError> {
    match &spec.anchor {
        SchubertAnchor::None => Ok(vec![]),
        SchubertAnchor::Line(l) => {
            if spec.source_dim == 3 {
                let [p1, p2] = line_dual_basis(l)?;
                Ok(vec![p1, p2])
            } else {
                Ok(vec![plane_line_covector(l)])
            }
        }
        SchubertAnchor::Plane(p) => Ok(vec![plane_covector(p)]),
        _ => Err(CatalogueError::DegenerateInput(
            "anchor kind not legal for point families".into(),
        )),
    }
}

fn validate_tuple(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
    tuple: &[DVector<C64>],
    expected_len: usize,
) -> Result<(), CatalogueError> {
    if arrangement.len() != spec.n {
        return Err(CatalogueError::DimensionMismatch(format!(
            "arrangement has {} cameras, spec says {}",
            arrangement.len(),
            spec.n
        )));
    }
    if arrangement.source_dim != spec.source_dim || arrangement.image_dim != spec.image_dim {
        return Err(CatalogueError::DimensionMismatch(
            "arrangement dimensions do not match the family".into(),
        ));
    }
    if tuple.len() != spec.n {
        return Err(CatalogueError::DimensionMismatch(format!(
            "tuple has {} entries, expected {}",
            tuple.len(),
            spec.n
        )));
    }
    for x in tuple {
        if x.len() != expected_len {
            return Err(CatalogueError::DimensionMismatch(format!(
                "tuple entry has {} coordinates, expected {expected_len}",
                x.len()
            )));
        }
        if x.norm() == 0.0 {
            return Err(CatalogueError::DegenerateInput("zero tuple entry".into()));
        }
    }
    Ok(())
}

/// Membership test for point families: the (P1)/(P2)/(P3) rank conditions
/// with anchor equations appended. Inputs are normalized columnwise, so the
/// report is invariant under rescaling any x_i.
pub fn membership_point(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
    xs: &[DVector<C64>],
) -> Result<MembershipReport, CatalogueError> {
    assert_eq!(spec.object_dim, 0);
    validate_tuple(spec, arrangement, xs, spec.image_dim + 1)?;
    let (n_dim, h) = (spec.source_dim, spec.image_dim);
    let duals = anchor_dual_rows(spec)?;
    let mut conditions = Vec::new();

    if h == n_dim {
        // (P1): the back-projected points agree.
        let cols: Vec<DVector<C64>> = arrangement
            .cameras
            .iter()
            .zip(xs)
            .map(|(c, x)| {
                linalg::solve(c.matrix(), x).ok_or_else(|| {
                    CatalogueError::Camera(CameraError::SingularMatrix("camera inverse".into()))
                })
            })
            .collect::<Result<_, _>>()?;
        let b = normalized_columns(&cols);
        conditions.push(check("P1", linalg::rank_gap(&b, 1)));
        if !duals.is_empty() {
            let xhat = dominant_direction(&b);
            for (j, d) in duals.iter().enumerate() {
                let r = d.dot(&xhat).norm() / d.norm();
                conditions.push(check(format!("anchor[{j}]"), r));
            }
        }
    } else if h + 1 == n_dim {
        // (P2): rank of the stacked back-projection system.
        if !arrangement.centers_pairwise_distinct()? {
            return Err(CatalogueError::HypothesisViolated(
                "pairwise distinct centers required".into(),
            ));
        }
        let n = spec.n;
        let rows = n * (h + 1) + duals.len();
        let cols = n_dim + 1 + n;
        let mut m = DMatrix::zeros(rows, cols);
        for (i, (cam, x)) in arrangement.cameras.iter().zip(xs).enumerate() {
            let xn = x / cr(x.norm());
            for r in 0..(h + 1) {
                for c in 0..(n_dim + 1) {
                    m[(i * (h + 1) + r, c)] = cam.matrix()[(r, c)];
                }
                m[(i * (h + 1) + r, n_dim + 1 + i)] = xn[r];
            }
        }
        for (j, d) in duals.iter().enumerate() {
            for c in 0..(n_dim + 1) {
                m[(n * (h + 1) + j, c)] = d[c];
            }
        }
        let label = if duals.is_empty() { "P2".to_string() } else { "P2+anchor".to_string() };
        conditions.push(check(label, linalg::rank_gap(&m, n_dim + spec.n)));
    } else if (n_dim, h) == (3, 1) {
        // (P3): back-projected planes share a point.
        check_p3_hypotheses(arrangement)?;
        let mut cols: Vec<DVector<C64>> = Vec::new();
        for (cam, x) in arrangement.cameras.iter().zip(xs) {
            let xn = x / cr(x.norm());
            let tilde = DVector::from_vec(vec![xn[1], -xn[0]]);
            cols.push(cam.matrix().transpose() * tilde);
        }
        let labels = if duals.is_empty() { "P3" } else { "P3+anchor" };
        cols.extend(duals.iter().cloned());
        let m = normalized_columns(&cols);
        conditions.push(check(labels, linalg::rank_gap(&m, 3)));
    } else {
        unreachable!("point families have h ∈ {{N, N−1}} or (N,h) = (3,1)");
    }
    Ok(MembershipReport::from_conditions(conditions))
}

fn check_p3_hypotheses(arrangement: &CameraArrangement) -> Result<(), CatalogueError> {
    // Line centers must be pairwise disjoint (generic position).
    let n = arrangement.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut stack = DMatrix::zeros(4, 4);
            for r in 0..2 {
                for c in 0..4 {
                    stack[(r, c)] = arrangement.cameras[i].matrix()[(r, c)];
                    stack[(r + 2, c)] = arrangement.cameras[j].matrix()[(r, c)];
                }
            }
            if linalg::rank(&stack) < 4 {
                return Err(CatalogueError::HypothesisViolated(
                    "center lines must be pairwise disjoint".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Centers of an h = 2 arrangement in `P^3` (or h = 1 in `P^2`).
fn point_centers(arrangement: &CameraArrangement) -> Result<Vec<DVector<C64>>, CatalogueError> {
    arrangement
        .cameras
        .iter()
        .map(|c| c.center_point().map_err(CatalogueError::Camera))
        .collect()
}

fn join_of(a: &DVector<C64>, b: &DVector<C64>) -> Result<GrassmannCoords, CatalogueError> {
    Ok(plucker_embed(&[
        HomogeneousPoint::new(a.clone())?,
        HomogeneousPoint::new(b.clone())?,
    ])?)
}

fn meets(a: &GrassmannCoords, b: &GrassmannCoords) -> bool {
    meet_form(a.coords(), b.coords()).norm() <= 1e-8 * a.coords().norm() * b.coords().norm()
}

fn check_l2_hypotheses(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
) -> Result<(), CatalogueError> {
    let anchor_lines: Vec<&GrassmannCoords> = match &spec.anchor {
        SchubertAnchor::Line(l) => vec![l],
        SchubertAnchor::TwoLines(ls) => ls.iter().collect(),
        SchubertAnchor::ThreeLines(ls) => ls.iter().collect(),
        _ => vec![],
    };
    let gamma = anchor_lines.len();
    let centers = point_centers(arrangement)?;
    let n = centers.len();

    if gamma < 3 {
        for i in 0..n {
            for j in (i + 1)..n {
                if linalg::proj_dist(&centers[i], &centers[j]) < 1e-8 {
                    return Err(CatalogueError::HypothesisViolated(
                        "pairwise distinct centers required".into(),
                    ));
                }
            }
        }
    }
    match gamma {
        0 => {
            // No transversal line may contain 4 centers: no 4 collinear.
            let idx: Vec<usize> = (0..n).collect();
            for quad in crate::projective::k_subsets(idx.len(), 4.min(idx.len())) {
                if quad.len() < 4 {
                    break;
                }
                let m = DMatrix::from_fn(4, 4, |r, c| centers[quad[c]][r]);
                if linalg::rank(&m) <= 2 {
                    return Err(CatalogueError::HypothesisViolated(
                        "four collinear centers".into(),
                    ));
                }
            }
        }
        1 => {
            // No 3 centers on a common transversal of the anchor line.
            for tri in crate::projective::k_subsets(n, 3.min(n)) {
                if tri.len() < 3 {
                    break;
                }
                let m = DMatrix::from_fn(4, 3, |r, c| centers[tri[c]][r]);
                if linalg::rank(&m) <= 2 {
                    let line = join_of(&centers[tri[0]], &centers[tri[1]])?;
                    if meets(&line, anchor_lines[0]) {
                        return Err(CatalogueError::HypothesisViolated(
                            "three centers on a transversal of the anchor line".into(),
                        ));
                    }
                }
            }
        }
        2 => {
            // No two centers whose join meets both anchor lines.
            for i in 0..n {
                for j in (i + 1)..n {
                    let line = join_of(&centers[i], &centers[j])?;
                    if meets(&line, anchor_lines[0]) && meets(&line, anchor_lines[1]) {
                        return Err(CatalogueError::HypothesisViolated(
                            "two centers on a common transversal of both anchor lines".into(),
                        ));
                    }
                }
            }
        }
        3 => {
            // Centers must avoid the quadric spanned by the anchor ruling.
            let q = quadric_through_lines(anchor_lines[0], anchor_lines[1], anchor_lines[2])?;
            for (i, c) in centers.iter().enumerate() {
                let val = (c.transpose() * &q * c)[(0, 0)].norm();
                if val <= 1e-8 * q.norm() * c.norm_squared() {
                    return Err(CatalogueError::HypothesisViolated(format!(
                        "center {i} lies on the anchor quadric"
                    )));
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Membership test for line families: (L1) for h = N (all cameras
/// invertible), (L2) for h = 2 < N, each with the anchor incidences
/// appended. Inputs are normalized columnwise.
pub fn membership_line(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
    ls: &[DVector<C64>],
) -> Result<MembershipReport, CatalogueError> {
    assert_eq!(spec.object_dim, 1);
    let factor_len = binom(spec.image_dim + 1, 2);
    validate_tuple(spec, arrangement, ls, factor_len)?;
    let mut conditions = Vec::new();

    if spec.image_dim == spec.source_dim {
        // (L1): back-projected lines agree.
        if spec.source_dim == 3 {
            for (i, l) in ls.iter().enumerate() {
                let g = GrassmannCoords::new(l.clone(), 1, 3)?;
                conditions.push(check(format!("plucker[{i}]"), g.plucker_residual()));
            }
        }
        let cols: Vec<DVector<C64>> = arrangement
            .cameras
            .iter()
            .zip(ls)
            .map(|(c, l)| {
                let winv = linalg::inverse(&c.wedge(2)).ok_or_else(|| {
                    CatalogueError::Camera(CameraError::SingularMatrix("wedge inverse".into()))
                })?;
                Ok(&winv * l)
            })
            .collect::<Result<_, CatalogueError>>()?;
        let b = normalized_columns(&cols);
        conditions.push(check("L1", linalg::rank_gap(&b, 1)));
        let phat = dominant_direction(&b);
        match &spec.anchor {
            SchubertAnchor::None => {}
            SchubertAnchor::Point(x) if spec.source_dim == 3 => {
                let r = line_point_join(&phat, x.coords()).norm() / x.coords().norm();
                conditions.push(check("anchor:point", r));
            }
            SchubertAnchor::Point(x) => {
                // lines through a point of P^2: the dual form kills x
                let d = cross_to_plucker_matrix() * &phat;
                let r = d.dot(x.coords()).norm() / (d.norm() * x.coords().norm());
                conditions.push(check("anchor:point", r));
            }
            SchubertAnchor::Plane(p) => {
                let w = plane_covector(p);
                let r = (crate::projective::line_matrix(&phat) * &w).norm() / w.norm();
                conditions.push(check("anchor:plane", r));
            }
            SchubertAnchor::PlanePoint { plane, point } => {
                let w = plane_covector(plane);
                let r1 = (crate::projective::line_matrix(&phat) * &w).norm() / w.norm();
                conditions.push(check("anchor:plane", r1));
                let r2 = line_point_join(&phat, point.coords()).norm() / point.coords().norm();
                conditions.push(check("anchor:point", r2));
            }
            SchubertAnchor::Line(l) => {
                let r = meet_form(&phat, l.coords()).norm() / l.coords().norm();
                conditions.push(check("anchor:meet[0]", r));
            }
            SchubertAnchor::TwoLines(lines) => {
                for (j, l) in lines.iter().enumerate() {
                    let r = meet_form(&phat, l.coords()).norm() / l.coords().norm();
                    conditions.push(check(format!("anchor:meet[{j}]"), r));
                }
            }
            SchubertAnchor::ThreeLines(lines) => {
                for (j, l) in lines.iter().enumerate() {
                    let r = meet_form(&phat, l.coords()).norm() / l.coords().norm();
                    conditions.push(check(format!("anchor:meet[{j}]"), r));
                }
            }
        }
    } else if spec.image_dim == 2 && spec.source_dim == 3 {
        // (L2): back-projected planes contain a common line. Image lines
        // arrive in Grassmann coordinates; the annihilating covector is
        // their image under the sign involution.
        check_l2_hypotheses(spec, arrangement)?;
        let k = cross_to_plucker_matrix();
        let cols: Vec<DVector<C64>> = arrangement
            .cameras
            .iter()
            .zip(ls)
            .map(|(c, l)| c.matrix().transpose() * (&k * l))
            .collect();
        let a = normalized_columns(&cols);
        conditions.push(check("L2", linalg::rank_gap(&a, 2)));
        match &spec.anchor {
            SchubertAnchor::None => {}
            SchubertAnchor::Point(x) => {
                let xn = x.coords() / cr(x.coords().norm());
                let r = (a.transpose() * &xn).norm();
                conditions.push(check("anchor:point", r));
            }
            SchubertAnchor::Plane(p) => {
                let w = plane_covector(p);
                let mut cols2 = cols.clone();
                cols2.push(w);
                conditions.push(check(
                    "anchor:plane",
                    linalg::rank_gap(&normalized_columns(&cols2), 2),
                ));
            }
            SchubertAnchor::PlanePoint { plane, point } => {
                let xn = point.coords() / cr(point.coords().norm());
                conditions.push(check("anchor:point", (a.transpose() * &xn).norm()));
                let w = plane_covector(plane);
                let mut cols2 = cols.clone();
                cols2.push(w);
                conditions.push(check(
                    "anchor:plane",
                    linalg::rank_gap(&normalized_columns(&cols2), 2),
                ));
            }
            SchubertAnchor::Line(l) => {
                conditions.push(meet_condition(&cols, l, 0)?);
            }
            SchubertAnchor::TwoLines(lines) => {
                for (j, l) in lines.iter().enumerate() {
                    conditions.push(meet_condition(&cols, l, j)?);
                }
            }
            SchubertAnchor::ThreeLines(lines) => {
                for (j, l) in lines.iter().enumerate() {
                    conditions.push(meet_condition(&cols, l, j)?);
                }
            }
        }
    } else {
        unreachable!("line families have h = N or (N,h) = (3,2)");
    }
    Ok(MembershipReport::from_conditions(conditions))
}

/// The meet condition of (L2): the candidate line meets L_j iff its dual
/// span together with the annihilator of L_j stays rank ≤ 3.
fn meet_condition(
    cols: &[DVector<C64>],
    l: &GrassmannCoords,
    j: usize,
) -> Result<ConditionCheck, CatalogueError> {
    let [p1, p2] = line_dual_basis(l)?;
    let mut aug = cols.to_vec();
    aug.push(p1);
    aug.push(p2);
    Ok(check(
        format!("anchor:meet[{j}]"),
        linalg::rank_gap(&normalized_columns(&aug), 3),
    ))
}

/// Membership test for plane families (h = 3, all cameras invertible):
/// back-projected planes agree, plus anchor incidences.
pub fn membership_plane(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
    ms: &[DVector<C64>],
) -> Result<MembershipReport, CatalogueError> {
    assert_eq!(spec.object_dim, 2);
    validate_tuple(spec, arrangement, ms, 4)?;
    let cols: Vec<DVector<C64>> = arrangement
        .cameras
        .iter()
        .zip(ms)
        .map(|(c, m)| {
            let winv = linalg::inverse(&c.wedge(3)).ok_or_else(|| {
                CatalogueError::Camera(CameraError::SingularMatrix("wedge inverse".into()))
            })?;
            Ok(&winv * m)
        })
        .collect::<Result<_, CatalogueError>>()?;
    let b = normalized_columns(&cols);
    let mut conditions = vec![check("L1", linalg::rank_gap(&b, 1))];
    let mhat = dominant_direction(&b);
    let w = plane_covector(&GrassmannCoords::new(mhat, 2, 3)?);
    match &spec.anchor {
        SchubertAnchor::None => {}
        SchubertAnchor::Point(x) => {
            let r = w.dot(x.coords()).norm() / (w.norm() * x.coords().norm());
            conditions.push(check("anchor:point", r));
        }
        SchubertAnchor::Line(l) => {
            let (u, v) = points_on_line(l.coords())?;
            let r1 = w.dot(&u).norm() / (w.norm() * u.norm());
            let r2 = w.dot(&v).norm() / (w.norm() * v.norm());
            conditions.push(check("anchor:line", r1.max(r2)));
        }
        _ => {
            return Err(CatalogueError::DegenerateInput(
                "anchor kind not legal for plane families".into(),
            ))
        }
    }
    Ok(MembershipReport::from_conditions(conditions))
}

/// Dispatch to the membership test matching the family's object dimension.
pub fn membership(
    spec: &FamilySpec,
    arrangement: &CameraArrangement,
    tuple: &[DVector<C64>],
) -> Result<MembershipReport, CatalogueError> {
    match spec.object_dim {
        0 => membership_point(spec, arrangement, tuple),
        1 => membership_line(spec, arrangement, tuple),
        2 => membership_plane(spec, arrangement, tuple),
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn vec_to_json(v: &DVector<C64>) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(|c| serde_json::json!([c.re, c.im])).collect())
}

fn vec_from_json(v: &serde_json::Value) -> Result<DVector<C64>, CatalogueError> {
    let arr = v
        .as_array()
        .ok_or_else(|| CatalogueError::DegenerateInput("expected coordinate array".into()))?;
    let mut out = Vec::with_capacity(arr.len());
    for e in arr {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| CatalogueError::DegenerateInput("expected [re, im] pair".into()))?;
        let re = pair[0]
            .as_f64()
            .ok_or_else(|| CatalogueError::DegenerateInput("bad real part".into()))?;
        let im = pair[1]
            .as_f64()
            .ok_or_else(|| CatalogueError::DegenerateInput("bad imaginary part".into()))?;
        out.push(C64::new(re, im));
    }
    Ok(DVector::from_vec(out))
}

impl FamilySpec {
    /// Serialize as the family tag plus anchor data.
    pub fn to_json(&self) -> serde_json::Value {
        let mut anchor = serde_json::Map::new();
        let (points, lines, planes): (
            Vec<&HomogeneousPoint>,
            Vec<&GrassmannCoords>,
            Vec<&GrassmannCoords>,
        ) = match &self.anchor {
            SchubertAnchor::None => (vec![], vec![], vec![]),
            SchubertAnchor::Point(x) => (vec![x], vec![], vec![]),
            SchubertAnchor::Line(l) => (vec![], vec![l], vec![]),
            SchubertAnchor::TwoLines(ls) => (vec![], ls.iter().collect(), vec![]),
            SchubertAnchor::ThreeLines(ls) => (vec![], ls.iter().collect(), vec![]),
            SchubertAnchor::Plane(p) => (vec![], vec![], vec![p]),
            SchubertAnchor::PlanePoint { plane, point } => (vec![point], vec![], vec![plane]),
        };
        anchor.insert(
            "points".into(),
            serde_json::Value::Array(points.iter().map(|p| vec_to_json(p.coords())).collect()),
        );
        anchor.insert(
            "lines".into(),
            serde_json::Value::Array(lines.iter().map(|l| vec_to_json(l.coords())).collect()),
        );
        anchor.insert(
            "planes".into(),
            serde_json::Value::Array(planes.iter().map(|p| vec_to_json(p.coords())).collect()),
        );
        serde_json::json!({
            "family": self.tag(),
            "n": self.n,
            "anchor": anchor,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, CatalogueError> {
        let obj = v
            .as_object()
            .ok_or_else(|| CatalogueError::DegenerateInput("expected object".into()))?;
        let tag = obj
            .get("family")
            .and_then(serde_json::Value::as_str)
            .ok_or_else(|| CatalogueError::DegenerateInput("missing family tag".into()))?;
        let class = FamilyClass::parse(tag)?;
        let n = obj
            .get("n")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| CatalogueError::DegenerateInput("missing camera count".into()))?
            as usize;
        let anchor_v = obj
            .get("anchor")
            .and_then(serde_json::Value::as_object)
            .ok_or_else(|| CatalogueError::DegenerateInput("missing anchor".into()))?;
        let grab = |key: &str| -> Result<Vec<DVector<C64>>, CatalogueError> {
            anchor_v
                .get(key)
                .and_then(serde_json::Value::as_array)
                .map(|a| a.iter().map(vec_from_json).collect())
                .unwrap_or_else(|| Ok(vec![]))
        };
        let points = grab("points")?;
        let lines = grab("lines")?;
        let planes = grab("planes")?;
        let line_dim = if class.source_dim == 3 { 3 } else { 2 };
        let mk_line = |v: &DVector<C64>| GrassmannCoords::new(v.clone(), 1, line_dim);
        let anchor = match class.anchor_kind {
            AnchorKind::None => SchubertAnchor::None,
            AnchorKind::Point => SchubertAnchor::Point(HomogeneousPoint::new(
                points
                    .first()
                    .ok_or_else(|| CatalogueError::DegenerateInput("missing anchor point".into()))?
                    .clone(),
            )?),
            AnchorKind::Line => SchubertAnchor::Line(mk_line(lines.first().ok_or_else(|| {
                CatalogueError::DegenerateInput("missing anchor line".into())
            })?)?),
            AnchorKind::TwoLines => {
                if lines.len() != 2 {
                    return Err(CatalogueError::DegenerateInput("need two anchor lines".into()));
                }
                SchubertAnchor::TwoLines([mk_line(&lines[0])?, mk_line(&lines[1])?])
            }
            AnchorKind::ThreeLines => {
                if lines.len() != 3 {
                    return Err(CatalogueError::DegenerateInput("need three anchor lines".into()));
                }
                SchubertAnchor::ThreeLines([
                    mk_line(&lines[0])?,
                    mk_line(&lines[1])?,
                    mk_line(&lines[2])?,
                ])
            }
            AnchorKind::Plane => SchubertAnchor::Plane(GrassmannCoords::new(
                planes
                    .first()
                    .ok_or_else(|| CatalogueError::DegenerateInput("missing anchor plane".into()))?
                    .clone(),
                2,
                3,
            )?),
            AnchorKind::PlanePoint => SchubertAnchor::PlanePoint {
                plane: GrassmannCoords::new(
                    planes
                        .first()
                        .ok_or_else(|| {
                            CatalogueError::DegenerateInput("missing anchor plane".into())
                        })?
                        .clone(),
                    2,
                    3,
                )?,
                point: HomogeneousPoint::new(
                    points
                        .first()
                        .ok_or_else(|| {
                            CatalogueError::DegenerateInput("missing anchor point".into())
                        })?
                        .clone(),
                )?,
            },
        };
        anchor.validate()?;
        Ok(FamilySpec {
            source_dim: class.source_dim,
            image_dim: class.image_dim,
            object_dim: class.object_dim,
            anchor,
            n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn real_t<R: Rng>(r: &mut R, d: usize) -> Vec<C64> {
        (0..d).map(|_| cr(r.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn there_are_thirty_three_families_with_unique_tags() {
        let fams = all_families();
        assert_eq!(fams.len(), 33);
        let tags: HashSet<String> = fams.iter().map(|f| f.tag()).collect();
        assert_eq!(tags.len(), 33);
        let settings: HashSet<(usize, usize, usize)> = fams
            .iter()
            .map(|f| (f.source_dim, f.image_dim, f.object_dim))
            .collect();
        assert_eq!(settings.len(), 10);
        for f in &fams {
            assert!(f.source_dim >= f.image_dim && f.image_dim > f.object_dim);
        }
    }

    #[test]
    fn tags_roundtrip() {
        for f in all_families() {
            let parsed = FamilyClass::parse(&f.tag()).unwrap();
            assert_eq!(parsed, f, "tag {}", f.tag());
        }
        assert!(FamilyClass::parse("M^{4,1}").is_err());
        assert!(FamilyClass::parse("Q^{3,2}").is_err());
        assert!(FamilyClass::parse("L^{L^3,2,2}").is_err());
    }

    #[test]
    fn dimensions_match_the_catalogue() {
        let expect = [
            ("M^{1,1}", 1, 1),
            ("M^{2,1}", 2, 2),
            ("M^{2,2}", 2, 1),
            ("M^{3,1}", 3, 3),
            ("M^{3,2}", 3, 2),
            ("M^{3,3}", 3, 1),
            ("M^{L,2,1}", 1, 1),
            ("M^{L,3,3}", 1, 1),
            ("M^{P,3,1}", 2, 2),
            ("M^{P,3,3}", 2, 1),
            ("L^{2,2}", 2, 1),
            ("L^{3,2}", 4, 2),
            ("L^{3,3}", 4, 1),
            ("L^{X,3,2}", 2, 2),
            ("L^{X,3,3}", 2, 1),
            ("L^{X,2,2}", 1, 1),
            ("L^{P,3,2}", 2, 1),
            ("L^{(P,X),3,3}", 1, 1),
            ("L^{L,3,2}", 3, 2),
            ("L^{L,3,3}", 3, 1),
            ("L^{L^2,3,2}", 2, 1),
            ("L^{L^3,3,2}", 1, 1),
            ("L^{L^3,3,3}", 1, 1),
            ("P^{3,3}", 3, 1),
            ("P^{X,3,3}", 2, 1),
            ("P^{L,3,3}", 1, 1),
        ];
        let mut r = rng(40);
        for (tag, dim, min_n) in expect {
            let class = FamilyClass::parse(tag).unwrap();
            assert_eq!(domain_dimension(&class), dim, "{tag}");
            assert_eq!(min_cameras(&class), min_n, "{tag}");
            let spec = sample_spec(&class, min_n, &mut r).unwrap();
            assert_eq!(dimension(&spec).unwrap(), dim, "{tag}");
        }
        // below the minimum camera count the hypothesis fails
        let spec = sample_spec(&FamilyClass::parse("M^{3,1}").unwrap(), 2, &mut r).unwrap();
        assert!(matches!(dimension(&spec), Err(CatalogueError::HypothesisViolated(_))));
        let spec = sample_spec(&FamilyClass::parse("M^{3,2}").unwrap(), 2, &mut r).unwrap();
        assert_eq!(dimension(&spec).unwrap(), 3);
    }

    #[test]
    fn representatives_form_fourteen_classes() {
        let reps: HashSet<String> = all_families()
            .iter()
            .map(|f| representative(f).class.tag())
            .collect();
        assert_eq!(reps.len(), 14);
        let t = |s: &str| FamilyClass::parse(s).unwrap();
        assert_eq!(representative(&t("P^{X,3,3}")).class, t("M^{2,2}"));
        assert_eq!(representative(&t("M^{L,2,1}")).class, t("M^{1,1}"));
        assert_eq!(representative(&t("M^{3,2}")).class, t("M^{3,2}"));
        assert_eq!(representative(&t("P^{3,3}")).class, t("M^{3,3}"));
        assert_eq!(representative(&t("L^{X,3,2}")).class, t("M^{2,1}"));
        // idempotence
        for f in all_families() {
            let r = representative(&f).class;
            assert_eq!(representative(&r).class, r, "{}", f.tag());
        }
        // the only iso-only reduction is the three-line h = 3 family
        for f in all_families() {
            let r = representative(&f);
            if f.tag() == "L^{L^3,3,3}" {
                assert_eq!(r.iso_only, Some(t("L^{L^3,3,2}")));
                assert_eq!(r.class, f);
            } else {
                assert!(r.iso_only.is_none(), "{}", f.tag());
            }
        }
    }

    #[test]
    fn euler_characteristic_closed_forms() {
        assert_eq!(euler_characteristic(EulerKind::Grassmannian { k: 1, n: 3 }), 6);
        assert_eq!(euler_characteristic(EulerKind::ProjSpace(2)), 3);
        assert_eq!(euler_characteristic(EulerKind::P1xP1), 4);
        assert_eq!(euler_characteristic(EulerKind::LTwoAnchored { n: 3 }), 10);
        assert_eq!(euler_characteristic(EulerKind::Grassmannian { k: 2, n: 4 }), 10);
    }

    #[test]
    fn plane_covector_annihilates_spanning_points() {
        let mut r = rng(41);
        let a = linalg::real_vec(&mut r, 4);
        let b = linalg::real_vec(&mut r, 4);
        let c = linalg::real_vec(&mut r, 4);
        let m = tri_embed(&a, &b, &c).unwrap();
        let w = plane_covector(&m);
        for v in [&a, &b, &c] {
            assert!(w.dot(v).norm() < 1e-10 * w.norm() * v.norm());
        }
        // and the sign matrix converts back
        let s = covector_to_tri_matrix();
        assert!(linalg::proj_dist(m.coords(), &(s * w)) < 1e-10);
    }

    #[test]
    fn anchored_charts_respect_their_anchors() {
        let mut r = rng(42);
        // lines through a point contain the point
        let class = FamilyClass::parse("L^{X,3,3}").unwrap();
        let spec = sample_spec(&class, 1, &mut r).unwrap();
        let chart = world_chart(&spec, &mut r).unwrap();
        let x = match &spec.anchor {
            SchubertAnchor::Point(x) => x.clone(),
            _ => unreachable!(),
        };
        for _ in 0..10 {
            let t = real_t(&mut r, chart.domain_dim);
            let w = chart.eval(&t);
            assert!(line_point_join(&w, x.coords()).norm() < 1e-9 * w.norm() * x.coords().norm());
            assert!(GrassmannCoords::new(w, 1, 3).unwrap().plucker_residual() < 1e-10);
        }
        // lines in a plane satisfy the plane incidence
        let class = FamilyClass::parse("L^{P,3,2}").unwrap();
        let spec = sample_spec(&class, 2, &mut r).unwrap();
        let chart = world_chart(&spec, &mut r).unwrap();
        let w_cov = match &spec.anchor {
            SchubertAnchor::Plane(p) => plane_covector(p),
            _ => unreachable!(),
        };
        for _ in 0..10 {
            let t = real_t(&mut r, chart.domain_dim);
            let w = chart.eval(&t);
            let r1 = (crate::projective::line_matrix(&w) * &w_cov).norm();
            assert!(r1 < 1e-9 * w.norm() * w_cov.norm());
        }
        // transversal charts meet their anchor lines
        for tag in ["L^{L,3,2}", "L^{L^2,3,2}", "L^{L^3,3,2}"] {
            let class = FamilyClass::parse(tag).unwrap();
            let spec = sample_spec(&class, 2, &mut r).unwrap();
            let chart = world_chart(&spec, &mut r).unwrap();
            let lines: Vec<GrassmannCoords> = match &spec.anchor {
                SchubertAnchor::Line(l) => vec![l.clone()],
                SchubertAnchor::TwoLines(ls) => ls.to_vec(),
                SchubertAnchor::ThreeLines(ls) => ls.to_vec(),
                _ => unreachable!(),
            };
            for _ in 0..10 {
                let t = real_t(&mut r, chart.domain_dim);
                let w = chart.eval(&t);
                assert!(
                    GrassmannCoords::new(w.clone(), 1, 3).unwrap().plucker_residual() < 1e-9,
                    "{tag}"
                );
                for l in &lines {
                    let omega = meet_form(&w, l.coords()).norm();
                    assert!(omega < 1e-8 * w.norm() * l.coords().norm(), "{tag}");
                }
            }
        }
        // planes through a line contain the line
        let class = FamilyClass::parse("P^{L,3,3}").unwrap();
        let spec = sample_spec(&class, 1, &mut r).unwrap();
        let chart = world_chart(&spec, &mut r).unwrap();
        let (u, v) = match &spec.anchor {
            SchubertAnchor::Line(l) => points_on_line(l.coords()).unwrap(),
            _ => unreachable!(),
        };
        for _ in 0..10 {
            let t = real_t(&mut r, chart.domain_dim);
            let m = chart.eval(&t);
            let w = plane_covector(&GrassmannCoords::new(m, 2, 3).unwrap());
            assert!(w.dot(&u).norm() < 1e-9 * w.norm() * u.norm());
            assert!(w.dot(&v).norm() < 1e-9 * w.norm() * v.norm());
        }
        // planes through a point contain the point
        let class = FamilyClass::parse("P^{X,3,3}").unwrap();
        let spec = sample_spec(&class, 1, &mut r).unwrap();
        let chart = world_chart(&spec, &mut r).unwrap();
        let x = match &spec.anchor {
            SchubertAnchor::Point(x) => x.clone(),
            _ => unreachable!(),
        };
        for _ in 0..10 {
            let t = real_t(&mut r, chart.domain_dim);
            let m = chart.eval(&t);
            let w = plane_covector(&GrassmannCoords::new(m, 2, 3).unwrap());
            assert!(w.dot(x.coords()).norm() < 1e-9 * w.norm() * x.coords().norm());
        }
    }

    #[test]
    fn every_family_projects_members() {
        // For each family: sample an arrangement and several world objects,
        // project, and verify membership holds with tiny residuals.
        let mut r = rng(43);
        for class in all_families() {
            let n = min_cameras(&class).max(2);
            let spec = sample_spec(&class, n, &mut r).unwrap();
            let arr = CameraArrangement::sample(&mut r, class.source_dim, class.image_dim, n)
                .unwrap();
            let chart = world_chart(&spec, &mut r).unwrap();
            for _ in 0..5 {
                let t = real_t(&mut r, chart.domain_dim);
                let w = chart.eval(&t);
                let tuple = match project_world(&spec, &arr, &w) {
                    Ok(t) => t,
                    Err(_) => continue,
                };
                let report = membership(&spec, &arr, &tuple).unwrap();
                assert!(
                    report.member,
                    "family {} rejected a projected sample: {:?}",
                    class.tag(),
                    report.conditions
                );
                for c in &report.conditions {
                    assert!(c.residual < 1e-9, "{}: {c:?}", class.tag());
                }
            }
        }
    }

    #[test]
    fn perturbed_tuples_are_rejected_where_conditions_bind() {
        let mut r = rng(44);
        for (tag, n) in [
            ("M^{2,2}", 2),
            ("M^{3,2}", 2),
            ("M^{2,1}", 3),
            ("L^{3,3}", 2),
            ("L^{X,3,2}", 3),
            ("P^{3,3}", 2),
            ("M^{L,3,3}", 1),
        ] {
            let class = FamilyClass::parse(tag).unwrap();
            let spec = sample_spec(&class, n, &mut r).unwrap();
            let arr = CameraArrangement::sample(&mut r, class.source_dim, class.image_dim, n)
                .unwrap();
            let chart = world_chart(&spec, &mut r).unwrap();
            let t = real_t(&mut r, chart.domain_dim);
            let w = chart.eval(&t);
            let mut tuple = project_world(&spec, &arr, &w).unwrap();
            for x in tuple.iter_mut() {
                *x /= cr(x.norm());
            }
            tuple[0][0] += cr(1e-2);
            let report = membership(&spec, &arr, &tuple).unwrap();
            assert!(!report.member, "{tag} accepted a perturbed tuple");
        }
    }

    #[test]
    fn identity_pair_is_a_p1_member() {
        let mut r = rng(45);
        let class = FamilyClass::parse("M^{2,2}").unwrap();
        let spec = sample_spec(&class, 2, &mut r).unwrap();
        let arr = CameraArrangement::new(vec![
            crate::camera::Camera::new(DMatrix::identity(3, 3)).unwrap(),
            crate::camera::Camera::new(DMatrix::identity(3, 3)).unwrap(),
        ])
        .unwrap();
        let x = linalg::real_vec(&mut r, 3);
        let report = membership_point(&spec, &arr, &[x.clone(), x]).unwrap();
        assert!(report.member);
    }

    #[test]
    fn membership_is_scale_invariant() {
        let mut r = rng(46);
        let class = FamilyClass::parse("M^{3,2}").unwrap();
        let spec = sample_spec(&class, 3, &mut r).unwrap();
        let arr = CameraArrangement::sample(&mut r, 3, 2, 3).unwrap();
        let chart = world_chart(&spec, &mut r).unwrap();
        let t = real_t(&mut r, 3);
        let w = chart.eval(&t);
        let tuple = project_world(&spec, &arr, &w).unwrap();
        let report1 = membership_point(&spec, &arr, &tuple).unwrap();
        let scaled: Vec<DVector<C64>> = tuple
            .iter()
            .enumerate()
            .map(|(i, x)| x * C64::new(0.0, 2.0 + i as f64))
            .collect();
        let report2 = membership_point(&spec, &arr, &scaled).unwrap();
        assert_eq!(report1.member, report2.member);
        for (a, b) in report1.conditions.iter().zip(&report2.conditions) {
            assert!((a.residual - b.residual).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_pairs_of_image_lines_are_members_for_two_cameras() {
        let mut r = rng(47);
        let class = FamilyClass::parse("L^{3,2}").unwrap();
        let spec = sample_spec(&class, 2, &mut r).unwrap();
        let arr = CameraArrangement::sample(&mut r, 3, 2, 2).unwrap();
        for _ in 0..10 {
            let tuple = vec![linalg::real_vec(&mut r, 3), linalg::real_vec(&mut r, 3)];
            let report = membership_line(&spec, &arr, &tuple).unwrap();
            assert!(report.member);
        }
        // but a random triple is not
        let spec3 = sample_spec(&class, 3, &mut r).unwrap();
        let arr3 = CameraArrangement::sample(&mut r, 3, 2, 3).unwrap();
        let mut rejected = 0;
        for _ in 0..10 {
            let tuple = vec![
                linalg::real_vec(&mut r, 3),
                linalg::real_vec(&mut r, 3),
                linalg::real_vec(&mut r, 3),
            ];
            if !membership_line(&spec3, &arr3, &tuple).unwrap().member {
                rejected += 1;
            }
        }
        assert_eq!(rejected, 10);
    }

    #[test]
    fn l2_hypothesis_violations_are_reported() {
        let mut r = rng(48);
        // duplicate centers for the plain family
        let class = FamilyClass::parse("L^{3,2}").unwrap();
        let spec = sample_spec(&class, 2, &mut r).unwrap();
        let cam = crate::camera::Camera::new(linalg::real_mat(&mut r, 3, 4)).unwrap();
        let arr = CameraArrangement::new(vec![cam.clone(), cam.clone()]).unwrap();
        let tuple = vec![linalg::real_vec(&mut r, 3), linalg::real_vec(&mut r, 3)];
        let err = membership_line(&spec, &arr, &tuple).unwrap_err();
        assert!(matches!(err, CatalogueError::HypothesisViolated(_)));

        // a center on the anchor quadric for the three-line family
        let class = FamilyClass::parse("L^{L^3,3,2}").unwrap();
        let spec = sample_spec(&class, 1, &mut r).unwrap();
        let lines = match &spec.anchor {
            SchubertAnchor::ThreeLines(ls) => ls.clone(),
            _ => unreachable!(),
        };
        let (u, _) = points_on_line(lines[0].coords()).unwrap();
        // camera whose center is u: rows orthogonal to u
        let um = DMatrix::from_fn(1, 4, |_, j| u[j]);
        let k = linalg::kernel(&um);
        let cam_matrix = DMatrix::from_fn(3, 4, |i, j| k[i][j]);
        let bad = CameraArrangement::new(vec![
            crate::camera::Camera::new(cam_matrix).unwrap(),
        ])
        .unwrap();
        let tuple = vec![linalg::real_vec(&mut r, 3)];
        let err = membership_line(&spec, &bad, &tuple).unwrap_err();
        assert!(matches!(err, CatalogueError::HypothesisViolated(_)));

        // two centers on a transversal of both anchor lines
        let class = FamilyClass::parse("L^{L^2,3,2}").unwrap();
        let spec = sample_spec(&class, 2, &mut r).unwrap();
        let (l1, l2) = match &spec.anchor {
            SchubertAnchor::TwoLines([a, b]) => (a.clone(), b.clone()),
            _ => unreachable!(),
        };
        let (p1, q1) = points_on_line(l1.coords()).unwrap();
        let (p2, q2) = points_on_line(l2.coords()).unwrap();
        let a = &p1 + &q1 * cr(0.3);
        let b = &p2 + &q2 * cr(-0.7);
        // centers on the line through a and b
        let c1 = &a + &b * cr(0.5);
        let c2 = &a + &b * cr(2.0);
        let center_camera = |center: &DVector<C64>, r: &mut ChaCha8Rng| {
            let cm = DMatrix::from_fn(1, 4, |_, j| center[j]);
            let k = linalg::kernel(&cm);
            let g = linalg::real_mat(r, 3, 3);
            let basis = DMatrix::from_fn(4, 3, |i, j| k[j][i]).transpose();
            crate::camera::Camera::new(g * basis).unwrap()
        };
        let arr = CameraArrangement::new(vec![
            center_camera(&c1, &mut r),
            center_camera(&c2, &mut r),
        ])
        .unwrap();
        let tuple = vec![linalg::real_vec(&mut r, 3), linalg::real_vec(&mut r, 3)];
        let err = membership_line(&spec, &arr, &tuple).unwrap_err();
        assert!(matches!(err, CatalogueError::HypothesisViolated(_)));
    }

    #[test]
    fn joint_map_rank_equals_dimension() {
        // probabilistic dimension check: the Jacobian of the parametrized
        // joint map has rank = dim at a random point
        let mut r = rng(49);
        for class in all_families() {
            let n = min_cameras(&class);
            let spec = sample_spec(&class, n, &mut r).unwrap();
            let arr = CameraArrangement::sample(&mut r, class.source_dim, class.image_dim, n)
                .unwrap();
            let chart = world_chart(&spec, &mut r).unwrap();
            let map = crate::polysys::rational_parametrization(
                &spec,
                &chart,
                &arr,
                &crate::polysys::AffinePatch::standard(n),
            )
            .unwrap();
            let t = real_t(&mut r, chart.domain_dim);
            // stack affine Jacobians of all factors
            let total_rows: usize = map.factors.iter().map(|f| f.coords.len()).sum();
            let mut jac = DMatrix::zeros(total_rows, map.num_vars);
            let mut row = 0;
            for f in &map.factors {
                let nvec = crate::polysys::poly_eval_vec(&f.coords, &t);
                let d = f.denom.eval(&t);
                for (c, p) in f.coords.iter().enumerate() {
                    for j in 0..map.num_vars {
                        let dn = p.partial(j).eval(&t);
                        let dd = f.denom.partial(j).eval(&t);
                        jac[(row + c, j)] = (dn * d - nvec[c] * dd) / (d * d);
                    }
                }
                row += f.coords.len();
            }
            assert_eq!(
                linalg::rank(&jac),
                domain_dimension(&class),
                "family {}",
                class.tag()
            );
        }
    }

    #[test]
    fn family_spec_json_roundtrip() {
        let mut r = rng(50);
        for tag in ["M^{3,2}", "L^{(P,X),3,2}", "L^{L^3,3,3}", "P^{X,3,3}", "M^{L,2,1}"] {
            let class = FamilyClass::parse(tag).unwrap();
            let spec = sample_spec(&class, 2, &mut r).unwrap();
            let v = spec.to_json();
            let back = FamilySpec::from_json(&v).unwrap();
            assert_eq!(back.tag(), spec.tag());
            assert_eq!(back.n, 2);
            match (&spec.anchor, &back.anchor) {
                (SchubertAnchor::None, SchubertAnchor::None) => {}
                (SchubertAnchor::Point(a), SchubertAnchor::Point(b)) => {
                    assert!(a.proj_eq(b));
                }
                (SchubertAnchor::ThreeLines(a), SchubertAnchor::ThreeLines(b)) => {
                    for (x, y) in a.iter().zip(b) {
                        assert!(x.proj_eq(y));
                    }
                }
                (SchubertAnchor::PlanePoint { plane: p1, point: x1 },
                 SchubertAnchor::PlanePoint { plane: p2, point: x2 }) => {
                    assert!(p1.proj_eq(p2));
                    assert!(x1.proj_eq(x2));
                }
                (SchubertAnchor::Line(a), SchubertAnchor::Line(b)) => assert!(a.proj_eq(b)),
                _ => panic!("anchor kind changed in roundtrip"),
            }
        }
    }
}
