//! Exterior-algebra and projective primitives: Plücker embeddings, wedge
//! powers of matrices, cross products, line incidence forms, and the
//! degree-2 ruling of the smooth quadric through three pairwise disjoint
//! lines in `P^3`.
//!
//! Minor ordering convention, used everywhere in the crate: row-index (and
//! column-index) subsets are enumerated lexicographically. For lines in
//! `P^3` this gives Plücker coordinates in the order
//! `(p01, p02, p03, p12, p13, p23)`; for lines in `P^2` the order
//! `(p01, p02, p12)`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{self, cr};
use crate::{C64, REL_RANK_TOL};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("rank deficient input: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A point of `P^N`, stored as a nonzero coordinate vector of length N+1.
/// Equality is projective (up to complex scale, tolerance [`PROJ_CMP_TOL`]).
#[derive(Debug, Clone)]
pub struct HomogeneousPoint {
    coords: DVector<C64>,
}

impl HomogeneousPoint {
    pub fn new(coords: DVector<C64>) -> Result<Self, GeometryError> {
        if coords.iter().all(|x| x.norm() == 0.0) {
            return Err(GeometryError::DegenerateInput(
                "zero vector is not a projective point".into(),
            ));
        }
        Ok(Self { coords })
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Self {
            coords: DVector::from_iterator(coords.len(), coords.iter().map(|&x| cr(x))),
        }
    }

    /// Standard basis point `e_i` of `P^N`.
    pub fn basis(n_ambient: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n_ambient + 1);
        v[i] = cr(1.0);
        Self { coords: v }
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    pub fn ambient_dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn proj_eq(&self, other: &Self) -> bool {
        linalg::proj_eq(&self.coords, &other.coords)
    }
}

/// Plücker coordinates of a k-plane in `P^N`: the binom(N+1, k+1) maximal
/// minors of a spanning matrix, in lexicographic row-subset order.
#[derive(Debug, Clone)]
pub struct GrassmannCoords {
    coords: DVector<C64>,
    k: usize,
    n_ambient: usize,
}

impl GrassmannCoords {
    pub fn new(coords: DVector<C64>, k: usize, n_ambient: usize) -> Result<Self, GeometryError> {
        let expected = binom(n_ambient + 1, k + 1);
        if coords.len() != expected {
            return Err(GeometryError::DimensionMismatch(format!(
                "Gr({k}, P^{n_ambient}) needs {expected} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().all(|x| x.norm() == 0.0) {
            return Err(GeometryError::DegenerateInput(
                "zero vector is not a Grassmann point".into(),
            ));
        }
        Ok(Self { coords, k, n_ambient })
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.n_ambient
    }

    pub fn proj_eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.n_ambient == other.n_ambient
            && linalg::proj_eq(&self.coords, &other.coords)
    }

    /// Residual of the Plücker quadric `p01·p23 − p02·p13 + p03·p12`,
    /// relative to the squared coordinate norm. Meaningful for (k,N)=(1,3).
    pub fn plucker_residual(&self) -> f64 {
        assert_eq!((self.k, self.n_ambient), (1, 3));
        let p = &self.coords;
        let q = p[0] * p[5] - p[1] * p[4] + p[2] * p[3];
        q.norm() / p.norm_squared()
    }
}

/// A general codimension-d linear slice of one projective factor: d
/// independent linear forms, one per row.
#[derive(Debug, Clone)]
pub struct LinearSliceSpec {
    pub codim: usize,
    pub matrix: DMatrix<C64>,
}

impl LinearSliceSpec {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, GeometryError> {
        let codim = matrix.nrows();
        let r = linalg::rank(&matrix);
        if r < codim {
            return Err(GeometryError::RankDeficient { rank: r, expected: codim });
        }
        Ok(Self { codim, matrix })
    }
}

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All k-element subsets of {0, …, n−1} in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(k).collect()
}

fn submatrix(m: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Plücker embedding of the span of k+1 points: all (k+1)×(k+1) minors of
/// the matrix with the points as columns, in lex row-subset order.
pub fn plucker_embed(points: &[HomogeneousPoint]) -> Result<GrassmannCoords, GeometryError> {
    let kp1 = points.len();
    assert!(kp1 >= 1, "need at least one point");
    let n = points[0].ambient_dim();
    if points.iter().any(|p| p.ambient_dim() != n) {
        return Err(GeometryError::DimensionMismatch(
            "points must share an ambient space".into(),
        ));
    }
    let m = DMatrix::from_fn(n + 1, kp1, |i, j| points[j].coords()[i]);
    let r = linalg::rank(&m);
    if r < kp1 {
        return Err(GeometryError::RankDeficient { rank: r, expected: kp1 });
    }
    let cols: Vec<usize> = (0..kp1).collect();
    let coords = DVector::from_iterator(
        binom(n + 1, kp1),
        k_subsets(n + 1, kp1)
            .iter()
            .map(|rows| linalg::det(&submatrix(&m, rows, &cols))),
    );
    GrassmannCoords::new(coords, kp1 - 1, n)
}

/// The matrix `∧^{k+1} C` acting on Plücker coordinates: entry (I, J) is the
/// minor det C[I, J], with both subsets in lex order. Satisfies
/// `∧^{k+1}C · ι(X_0..X_k) = ι(CX_0..CX_k)` (Cauchy–Binet).
pub fn wedge_power(c: &DMatrix<C64>, k_plus_1: usize) -> Result<DMatrix<C64>, GeometryError> {
    let (rows, cols) = (c.nrows(), c.ncols());
    assert!(k_plus_1 >= 1 && k_plus_1 <= rows.min(cols));
    let r = linalg::rank(c);
    if r < rows.min(cols) {
        return Err(GeometryError::RankDeficient { rank: r, expected: rows.min(cols) });
    }
    Ok(wedge_power_unchecked(c, k_plus_1))
}

pub fn wedge_power_unchecked(c: &DMatrix<C64>, k_plus_1: usize) -> DMatrix<C64> {
    let row_sets = k_subsets(c.nrows(), k_plus_1);
    let col_sets = k_subsets(c.ncols(), k_plus_1);
    DMatrix::from_fn(row_sets.len(), col_sets.len(), |i, j| {
        linalg::det(&submatrix(c, &row_sets[i], &col_sets[j]))
    })
}

/// Entrywise derivative of `∧^{k+1} C` with respect to C[a, b]: the (I, J)
/// entry is the signed cofactor det C[I∖a, J∖b] when a ∈ I and b ∈ J, else 0.
pub fn wedge_power_entry_derivative(
    c: &DMatrix<C64>,
    k_plus_1: usize,
    a: usize,
    b: usize,
) -> DMatrix<C64> {
    let row_sets = k_subsets(c.nrows(), k_plus_1);
    let col_sets = k_subsets(c.ncols(), k_plus_1);
    DMatrix::from_fn(row_sets.len(), col_sets.len(), |i, j| {
        let (rows, cols) = (&row_sets[i], &col_sets[j]);
        match (rows.iter().position(|&r| r == a), cols.iter().position(|&cc| cc == b)) {
            (Some(pa), Some(pb)) => {
                let sub_rows: Vec<usize> = rows.iter().copied().filter(|&r| r != a).collect();
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&cc| cc != b).collect();
                let sign = if (pa + pb) % 2 == 0 { 1.0 } else { -1.0 };
                linalg::det(&submatrix(c, &sub_rows, &sub_cols)) * cr(sign)
            }
            _ => cr(0.0),
        }
    })
}

/// Matrix of the exterior multiplication μ ↦ v∧μ, where v ∈ ∧^{deg_v}C^n
/// and μ ∈ ∧^{deg_in}C^n are given in lex subset coordinates. The sign of
/// each term counts the inversions of the merge e_T∧e_S → e_{T∪S}.
pub fn exterior_mult_matrix(
    v: &DVector<C64>,
    deg_v: usize,
    deg_in: usize,
    n: usize,
) -> DMatrix<C64> {
    let v_sets = k_subsets(n, deg_v);
    let in_sets = k_subsets(n, deg_in);
    let out_sets = k_subsets(n, deg_v + deg_in);
    assert_eq!(v.len(), v_sets.len());
    let mut out = DMatrix::zeros(out_sets.len(), in_sets.len());
    for (ti, t) in v_sets.iter().enumerate() {
        for (si, s) in in_sets.iter().enumerate() {
            if t.iter().any(|a| s.contains(a)) {
                continue;
            }
            let inversions: usize =
                t.iter().map(|&a| s.iter().filter(|&&b| b < a).count()).sum();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            let mut union: Vec<usize> = t.iter().chain(s.iter()).copied().collect();
            union.sort_unstable();
            let oi = out_sets.iter().position(|u| *u == union).expect("union subset");
            out[(oi, si)] += v[ti] * cr(sign);
        }
    }
    out
}

/// Matrix of the contraction μ ↦ ι_w(μ) with a covector w ∈ (C^n)^∨:
/// ι_w(e_{s_0}∧⋯∧e_{s_{k−1}}) = Σ_i (−1)^i w_{s_i} e_{S∖s_i}. An
/// antiderivation with ι_w∘ι_w = 0 whose image spans ker(w) wedges.
pub fn contraction_matrix(w: &DVector<C64>, deg_in: usize, n: usize) -> DMatrix<C64> {
    assert!(deg_in >= 1);
    assert_eq!(w.len(), n);
    let in_sets = k_subsets(n, deg_in);
    let out_sets = k_subsets(n, deg_in - 1);
    let mut out = DMatrix::zeros(out_sets.len(), in_sets.len());
    for (si, s) in in_sets.iter().enumerate() {
        for (pos, &elem) in s.iter().enumerate() {
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            let reduced: Vec<usize> = s.iter().copied().filter(|&x| x != elem).collect();
            let oi = out_sets.iter().position(|u| *u == reduced).expect("reduced subset");
            out[(oi, si)] += w[elem] * cr(sign);
        }
    }
    out
}

/// Cross product in `P^2`: the dual vector of the line through X and Y.
pub fn cross_product(
    x: &HomogeneousPoint,
    y: &HomogeneousPoint,
) -> Result<HomogeneousPoint, GeometryError> {
    assert_eq!(x.ambient_dim(), 2);
    assert_eq!(y.ambient_dim(), 2);
    let (a, b) = (x.coords(), y.coords());
    let v = DVector::from_vec(vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]);
    let scale = a.norm() * b.norm();
    if v.norm() <= REL_RANK_TOL * scale {
        return Err(GeometryError::RankDeficient { rank: 1, expected: 2 });
    }
    HomogeneousPoint::new(v)
}

/// The constant matrix K with `plucker_embed(X, Y) = K · cross_product(X, Y)`
/// under the lex minor ordering (p01, p02, p12). K is the antidiagonal
/// (1, −1, 1) and is an involution, so it converts either direction.
pub fn cross_to_plucker_matrix() -> DMatrix<C64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            cr(0.0), cr(0.0), cr(1.0),
            cr(0.0), cr(-1.0), cr(0.0),
            cr(1.0), cr(0.0), cr(0.0),
        ],
    )
}

/// Bilinear meet form Ω on Plücker 6-vectors: two lines in `P^3` intersect
/// iff Ω vanishes. Ω(p, p) = 0 is the Plücker quadric up to a factor 2.
pub fn meet_form(p: &DVector<C64>, q: &DVector<C64>) -> C64 {
    assert_eq!(p.len(), 6);
    assert_eq!(q.len(), 6);
    p[0] * q[5] - p[1] * q[4] + p[2] * q[3] + p[5] * q[0] - p[4] * q[1] + p[3] * q[2]
}

/// Antisymmetric 4×4 matrix of a Plücker line: M[a][b] = p_{ab} for a < b.
/// Its range is the line's 2-dimensional linear span, so `M·w` is a point on
/// the line for any covector w.
pub fn line_matrix(p: &DVector<C64>) -> DMatrix<C64> {
    assert_eq!(p.len(), 6);
    let mut m = DMatrix::zeros(4, 4);
    let pairs = [(0, 1, 0), (0, 2, 1), (0, 3, 2), (1, 2, 3), (1, 3, 4), (2, 3, 5)];
    for &(a, b, idx) in &pairs {
        m[(a, b)] = p[idx];
        m[(b, a)] = -p[idx];
    }
    m
}

/// Two independent points spanning a line given by Plücker coordinates.
pub fn points_on_line(p: &DVector<C64>) -> Result<(DVector<C64>, DVector<C64>), GeometryError> {
    let m = line_matrix(p);
    let mut candidates: Vec<DVector<C64>> = (0..4)
        .map(|j| DVector::from(m.column(j).into_owned()))
        .collect();
    candidates.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    let first = candidates[0].clone();
    for cand in candidates.iter().skip(1) {
        let stack = DMatrix::from_fn(4, 2, |i, j| if j == 0 { first[i] } else { cand[i] });
        if linalg::rank(&stack) == 2 {
            return Ok((first, cand.clone()));
        }
    }
    Err(GeometryError::DegenerateInput(
        "Plücker vector does not represent a line".into(),
    ))
}

/// Coordinates of the join span(line, X) as a 3-plane element of `P^3`
/// (4 signed 3×3 minors, lex order). Vanishes iff X lies on the line.
pub fn line_point_join(p: &DVector<C64>, x: &DVector<C64>) -> DVector<C64> {
    assert_eq!(p.len(), 6);
    assert_eq!(x.len(), 4);
    // Index map for p_{ab}: 01→0, 02→1, 03→2, 12→3, 13→4, 23→5.
    let j012 = p[0] * x[2] - p[1] * x[1] + p[3] * x[0];
    let j013 = p[0] * x[3] - p[2] * x[1] + p[4] * x[0];
    let j023 = p[1] * x[3] - p[2] * x[2] + p[5] * x[0];
    let j123 = p[3] * x[3] - p[4] * x[2] + p[5] * x[1];
    DVector::from_vec(vec![j012, j013, j023, j123])
}

fn disjointness(a: &GrassmannCoords, b: &GrassmannCoords) -> f64 {
    meet_form(a.coords(), b.coords()).norm() / (a.coords().norm() * b.coords().norm())
}

fn require_pairwise_disjoint(lines: [&GrassmannCoords; 3]) -> Result<(), GeometryError> {
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if disjointness(lines[i], lines[j]) <= 1e-10 {
            return Err(GeometryError::DegenerateInput(format!(
                "lines {i} and {j} intersect"
            )));
        }
    }
    Ok(())
}

/// Symmetric 4×4 matrix M of the unique quadric containing three pairwise
/// disjoint lines in `P^3`: fitted from three points per line, with the
/// nullspace required to be one-dimensional and M full rank (smooth quadric).
pub fn quadric_through_lines(
    l1: &GrassmannCoords,
    l2: &GrassmannCoords,
    l3: &GrassmannCoords,
) -> Result<DMatrix<C64>, GeometryError> {
    require_pairwise_disjoint([l1, l2, l3])?;
    let mut design = DMatrix::zeros(9, 10);
    let mut row = 0;
    for line in [l1, l2, l3] {
        let (u, v) = points_on_line(line.coords())?;
        for t in [0.0, 1.0, -1.0] {
            let pt = &u + &v * cr(t);
            let pt = &pt / cr(pt.norm());
            let mut col = 0;
            for a in 0..4 {
                for b in a..4 {
                    let factor = if a == b { cr(1.0) } else { cr(2.0) };
                    design[(row, col)] = factor * pt[a] * pt[b];
                    col += 1;
                }
            }
            row += 1;
        }
    }
    let null = linalg::kernel(&design);
    if null.len() != 1 {
        return Err(GeometryError::DegenerateInput(format!(
            "quadric through the lines is not unique (nullspace dimension {})",
            null.len()
        )));
    }
    let q = &null[0];
    let mut m = DMatrix::zeros(4, 4);
    let mut col = 0;
    for a in 0..4 {
        for b in a..4 {
            m[(a, b)] = q[col];
            m[(b, a)] = q[col];
            col += 1;
        }
    }
    if linalg::rank(&m) < 4 {
        return Err(GeometryError::DegenerateInput(
            "fitted quadric is singular".into(),
        ));
    }
    Ok(m)
}

/// The ruling of the quadric through three pairwise disjoint lines: a
/// quadratic map `a ↦ B·ν(a)` from `P^1` into Gr(1, P^3), where
/// ν(a) = (a0², a0·a1, a1²). Every output line meets all three inputs.
#[derive(Debug, Clone)]
pub struct Ruling {
    b: DMatrix<C64>,
}

impl Ruling {
    /// The 6×3 coefficient matrix of the quadratic parametrization.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.b
    }

    pub fn line_at(&self, a0: C64, a1: C64) -> GrassmannCoords {
        let nu = DVector::from_vec(vec![a0 * a0, a0 * a1, a1 * a1]);
        GrassmannCoords::new(&self.b * nu, 1, 3).expect("ruling line is nonzero")
    }
}

/// Generalized cross product in `C^4`: the covector of the hyperplane
/// spanned by three independent vectors.
fn hyperplane_covector(cols: [&DVector<C64>; 3]) -> DVector<C64> {
    let m = DMatrix::from_fn(4, 3, |i, j| cols[j][i]);
    let rows: Vec<usize> = (0..4).collect();
    DVector::from_fn(4, |i, _| {
        let keep: Vec<usize> = rows.iter().copied().filter(|&r| r != i).collect();
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        linalg::det(&submatrix(&m, &keep, &[0, 1, 2])) * cr(sign)
    })
}

pub fn ruling_parametrization(
    l1: &GrassmannCoords,
    l2: &GrassmannCoords,
    l3: &GrassmannCoords,
) -> Result<Ruling, GeometryError> {
    require_pairwise_disjoint([l1, l2, l3])?;
    let (u1, v1) = points_on_line(l1.coords())?;
    let (u2, v2) = points_on_line(l2.coords())?;
    let (u3, v3) = points_on_line(l3.coords())?;

    // For p(a) = a0·u1 + a1·v1 on L1, the plane through p(a) and L2 has
    // covector h(a), linear in a; it cuts L3 in b0(a)·u3 + b1(a)·v3 with
    // b(a) = (h·v3 : −h·u3). The resulting line ι(p(a), q(a)) is quadratic
    // in a, so three evaluations determine the coefficient matrix.
    let phi = |a0: f64, a1: f64| -> Result<DVector<C64>, GeometryError> {
        let p = &u1 * cr(a0) + &v1 * cr(a1);
        let h = hyperplane_covector([&p, &u2, &v2]);
        let b0 = h.dot(&v3);
        let b1 = -h.dot(&u3);
        let q = &u3 * b0 + &v3 * b1;
        let pp = HomogeneousPoint::new(p)?;
        let qq = HomogeneousPoint::new(q).map_err(|_| {
            GeometryError::DegenerateInput("ruling point on the third line vanished".into())
        })?;
        Ok(plucker_embed(&[pp, qq])?.coords().clone())
    };

    let f10 = phi(1.0, 0.0)?;
    let f01 = phi(0.0, 1.0)?;
    let f11 = phi(1.0, 1.0)?;
    let mid = &f11 - &f10 - &f01;
    let mut b = DMatrix::zeros(6, 3);
    b.set_column(0, &f10);
    b.set_column(1, &mid);
    b.set_column(2, &f01);
    if linalg::rank(&b) < 3 {
        return Err(GeometryError::DegenerateInput(
            "ruling coefficient matrix is rank deficient".into(),
        ));
    }
    Ok(Ruling { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{proj_eq, real_mat, real_vec};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(coords: &[f64]) -> HomogeneousPoint {
        HomogeneousPoint::from_real(coords)
    }

    fn segre_lines() -> (GrassmannCoords, GrassmannCoords, GrassmannCoords) {
        // Three members of one ruling of X0·X3 − X1·X2 = 0.
        let l1 = plucker_embed(&[pt(&[1.0, 0.0, 0.0, 0.0]), pt(&[0.0, 0.0, 1.0, 0.0])]).unwrap();
        let l2 = plucker_embed(&[pt(&[0.0, 1.0, 0.0, 0.0]), pt(&[0.0, 0.0, 0.0, 1.0])]).unwrap();
        let l3 = plucker_embed(&[pt(&[1.0, 1.0, 0.0, 0.0]), pt(&[0.0, 0.0, 1.0, 1.0])]).unwrap();
        (l1, l2, l3)
    }

    #[test]
    fn plucker_basis_lines() {
        let e01 = plucker_embed(&[pt(&[1.0, 0.0, 0.0, 0.0]), pt(&[0.0, 1.0, 0.0, 0.0])]).unwrap();
        let expected = DVector::from_vec(vec![cr(1.0), cr(0.0), cr(0.0), cr(0.0), cr(0.0), cr(0.0)]);
        assert!(proj_eq(e01.coords(), &expected));

        let e23 = plucker_embed(&[pt(&[0.0, 0.0, 1.0, 0.0]), pt(&[0.0, 0.0, 0.0, 1.0])]).unwrap();
        let expected = DVector::from_vec(vec![cr(0.0), cr(0.0), cr(0.0), cr(0.0), cr(0.0), cr(1.0)]);
        assert!(proj_eq(e23.coords(), &expected));
    }

    #[test]
    fn plucker_rejects_repeated_point() {
        let x = pt(&[1.0, 2.0, 3.0, 4.0]);
        let err = plucker_embed(&[x.clone(), x]).unwrap_err();
        assert!(matches!(err, GeometryError::RankDeficient { .. }));
    }

    #[test]
    fn plucker_residual_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
            let y = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
            let p = plucker_embed(&[x, y]).unwrap();
            assert!(p.plucker_residual() < 1e-12);
        }
    }

    #[test]
    fn wedge_of_identity_is_identity() {
        let i4 = DMatrix::identity(4, 4);
        let w = wedge_power(&i4, 2).unwrap();
        assert_eq!(w, DMatrix::identity(6, 6));

        let two_i = DMatrix::identity(4, 4) * cr(2.0);
        let w = wedge_power(&two_i, 2).unwrap();
        assert!((w - DMatrix::identity(6, 6) * cr(4.0)).norm() < 1e-12);
    }

    #[test]
    fn wedge_is_functorial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = real_mat(&mut rng, 4, 4);
            let d = real_mat(&mut rng, 4, 4);
            let lhs = wedge_power(&(&c * &d), 2).unwrap();
            let rhs = wedge_power(&c, 2).unwrap() * wedge_power(&d, 2).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn wedge_intertwines_plucker() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let c = real_mat(&mut rng, 3, 4);
            let x = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
            let y = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
            let lhs = wedge_power(&c, 2).unwrap() * plucker_embed(&[x.clone(), y.clone()]).unwrap().coords();
            let cx = HomogeneousPoint::new(&c * x.coords()).unwrap();
            let cy = HomogeneousPoint::new(&c * y.coords()).unwrap();
            let rhs = plucker_embed(&[cx, cy]).unwrap();
            assert!(linalg::proj_dist(&lhs, rhs.coords()) < 1e-10);
        }
    }

    #[test]
    fn wedge_entry_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = real_mat(&mut rng, 3, 4);
        let eps = 1e-6;
        for a in 0..3 {
            for b in 0..4 {
                let analytic = wedge_power_entry_derivative(&c, 2, a, b);
                let mut cp = c.clone();
                cp[(a, b)] += cr(eps);
                let mut cm = c.clone();
                cm[(a, b)] -= cr(eps);
                let fd = (wedge_power_unchecked(&cp, 2) - wedge_power_unchecked(&cm, 2))
                    / cr(2.0 * eps);
                assert!((analytic - fd).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn cross_product_examples() {
        let a = cross_product(&pt(&[1.0, 0.0, 0.0]), &pt(&[0.0, 1.0, 0.0])).unwrap();
        assert!(a.proj_eq(&pt(&[0.0, 0.0, 1.0])));
        let b = cross_product(&pt(&[1.0, 0.0, 0.0]), &pt(&[0.0, 0.0, 1.0])).unwrap();
        assert!(b.proj_eq(&pt(&[0.0, -1.0, 0.0])));
        let err = cross_product(&pt(&[1.0, 2.0, 3.0]), &pt(&[2.0, 4.0, 6.0])).unwrap_err();
        assert!(matches!(err, GeometryError::RankDeficient { .. }));
    }

    #[test]
    fn cross_product_annihilates_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = HomogeneousPoint::new(real_vec(&mut rng, 3)).unwrap();
            let y = HomogeneousPoint::new(real_vec(&mut rng, 3)).unwrap();
            let l = cross_product(&x, &y).unwrap();
            let scale = l.coords().norm() * x.coords().norm();
            assert!(l.coords().dot(x.coords()).norm() < 1e-12 * scale);
            assert!(l.coords().dot(y.coords()).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn cross_and_plucker_differ_by_fixed_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = cross_to_plucker_matrix();
        assert!((&k * &k - DMatrix::identity(3, 3)).norm() < 1e-15);
        for _ in 0..20 {
            let x = HomogeneousPoint::new(real_vec(&mut rng, 3)).unwrap();
            let y = HomogeneousPoint::new(real_vec(&mut rng, 3)).unwrap();
            let p = plucker_embed(&[x.clone(), y.clone()]).unwrap();
            let c = cross_product(&x, &y).unwrap();
            let mapped = &k * c.coords();
            assert!(linalg::proj_dist(p.coords(), &mapped) < 1e-10);
        }
    }

    #[test]
    fn meet_form_detects_intersection() {
        let (l1, l2, _) = segre_lines();
        // Two lines through a common point.
        let a = plucker_embed(&[pt(&[1.0, 0.0, 0.0, 0.0]), pt(&[0.0, 1.0, 0.0, 0.0])]).unwrap();
        let b = plucker_embed(&[pt(&[1.0, 0.0, 0.0, 0.0]), pt(&[0.0, 0.0, 1.0, 0.0])]).unwrap();
        assert!(meet_form(a.coords(), b.coords()).norm() < 1e-12);
        assert!(meet_form(l1.coords(), l2.coords()).norm() > 0.5);
    }

    #[test]
    fn line_point_join_detects_incidence() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
        let y = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
        let p = plucker_embed(&[x.clone(), y.clone()]).unwrap();
        let on = x.coords() * cr(0.3) + y.coords() * cr(-1.2);
        assert!(line_point_join(p.coords(), &on).norm() < 1e-10);
        let off = real_vec(&mut rng, 4);
        assert!(line_point_join(p.coords(), &off).norm() > 1e-4);
    }

    #[test]
    fn quadric_through_segre_lines() {
        let (l1, l2, l3) = segre_lines();
        let m = quadric_through_lines(&l1, &l2, &l3).unwrap();
        // X0·X3 − X1·X2 as a symmetric matrix, up to scale.
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 3)] = cr(0.5);
        expected[(3, 0)] = cr(0.5);
        expected[(1, 2)] = cr(-0.5);
        expected[(2, 1)] = cr(-0.5);
        let got = DVector::from_iterator(16, m.iter().copied());
        let want = DVector::from_iterator(16, expected.iter().copied());
        assert!(linalg::proj_dist(&want, &got) < 1e-8);
    }

    #[test]
    fn quadric_vanishes_on_input_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ls: Vec<GrassmannCoords> = (0..3)
            .map(|_| {
                let x = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
                let y = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
                plucker_embed(&[x, y]).unwrap()
            })
            .collect();
        let m = quadric_through_lines(&ls[0], &ls[1], &ls[2]).unwrap();
        for line in &ls {
            let (u, v) = points_on_line(line.coords()).unwrap();
            for k in 0..10 {
                let t = -1.0 + 0.2 * k as f64;
                let p = &u + &v * cr(t);
                let val = (p.transpose() * &m * &p)[(0, 0)];
                assert!(val.norm() < 1e-9 * m.norm() * p.norm_squared());
            }
        }
    }

    #[test]
    fn intersecting_lines_are_rejected() {
        let a = plucker_embed(&[pt(&[1.0, 0.0, 0.0, 0.0]), pt(&[0.0, 1.0, 0.0, 0.0])]).unwrap();
        let b = plucker_embed(&[pt(&[1.0, 0.0, 0.0, 0.0]), pt(&[0.0, 0.0, 1.0, 0.0])]).unwrap();
        let crossing = plucker_embed(&[pt(&[0.0, 0.0, 0.0, 1.0]), pt(&[0.0, 0.0, 1.0, 0.0])]).unwrap();
        let err = quadric_through_lines(&a, &b, &crossing).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateInput(_)));
    }

    #[test]
    fn ruling_lines_meet_all_three_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ls: Vec<GrassmannCoords> = (0..3)
            .map(|_| {
                let x = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
                let y = HomogeneousPoint::new(real_vec(&mut rng, 4)).unwrap();
                plucker_embed(&[x, y]).unwrap()
            })
            .collect();
        let ruling = ruling_parametrization(&ls[0], &ls[1], &ls[2]).unwrap();
        for k in 0..10 {
            let a1 = -1.0 + 0.23 * k as f64;
            let line = ruling.line_at(cr(1.0), cr(a1));
            assert!(line.plucker_residual() < 1e-10);
            for l in &ls {
                let omega = meet_form(line.coords(), l.coords()).norm();
                assert!(omega < 1e-8 * line.coords().norm() * l.coords().norm());
            }
        }
    }

    #[test]
    fn ruling_lines_are_pairwise_disjoint_and_on_the_quadric() {
        let (l1, l2, l3) = segre_lines();
        let ruling = ruling_parametrization(&l1, &l2, &l3).unwrap();
        let m = quadric_through_lines(&l1, &l2, &l3).unwrap();
        let la = ruling.line_at(cr(1.0), cr(0.7));
        let lb = ruling.line_at(cr(1.0), cr(-0.4));
        assert!(meet_form(la.coords(), lb.coords()).norm() > 1e-6);
        let (u, v) = points_on_line(la.coords()).unwrap();
        for t in [0.0, 1.0, -2.0] {
            let p = &u + &v * cr(t);
            let val = (p.transpose() * &m * &p)[(0, 0)];
            assert!(val.norm() < 1e-9 * m.norm() * p.norm_squared());
        }
    }

    #[test]
    fn ruling_starts_at_the_chosen_point_of_l1() {
        let (l1, l2, l3) = segre_lines();
        let (u1, _) = points_on_line(l1.coords()).unwrap();
        let ruling = ruling_parametrization(&l1, &l2, &l3).unwrap();
        let line = ruling.line_at(cr(1.0), cr(0.0));
        // φ(1, 0) passes through u1.
        assert!(line_point_join(line.coords(), &u1).norm() < 1e-10 * line.coords().norm());
    }

    #[test]
    fn random_hyperplane_slices_ruling_twice() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (l1, l2, l3) = segre_lines();
        let ruling = ruling_parametrization(&l1, &l2, &l3).unwrap();
        for _ in 0..10 {
            let h = real_vec(&mut rng, 6);
            // H(φ(a)) = q0·a0² + q1·a0a1 + q2·a1² must have two distinct
            // projective roots for a generic hyperplane.
            let q = h.transpose() * ruling.matrix();
            let (q0, q1, q2) = (q[(0, 0)], q[(0, 1)], q[(0, 2)]);
            let disc = q1 * q1 - cr(4.0) * q0 * q2;
            assert!(disc.norm() > 1e-10);
            // at a = (1, r) the section reads q2·r² + q1·r + q0
            let roots = [
                (-q1 + disc.sqrt()) / (cr(2.0) * q2),
                (-q1 - disc.sqrt()) / (cr(2.0) * q2),
            ];
            for r in roots {
                let line = ruling.line_at(cr(1.0), r);
                let val = h.transpose() * line.coords();
                assert!(val[(0, 0)].norm() < 1e-7 * line.coords().norm());
            }
        }
    }

    #[test]
    fn exterior_mult_agrees_with_plucker_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let x = real_vec(&mut rng, 4);
            let y = real_vec(&mut rng, 4);
            let m = exterior_mult_matrix(&x, 1, 1, 4);
            let wedge = &m * &y;
            let px = HomogeneousPoint::new(x.clone()).unwrap();
            let py = HomogeneousPoint::new(y.clone()).unwrap();
            let line = plucker_embed(&[px, py]).unwrap();
            assert!(proj_eq(&wedge, line.coords()));
            // swapping the arguments flips the sign
            let m2 = exterior_mult_matrix(&y, 1, 1, 4);
            let flipped = &m2 * &x;
            assert!((&wedge + &flipped).norm() < 1e-10 * wedge.norm());
        }
    }

    #[test]
    fn contraction_squares_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for n in [3usize, 4] {
            let w = real_vec(&mut rng, n);
            let c2 = contraction_matrix(&w, 2, n);
            let c1 = contraction_matrix(&w, 1, n);
            let square = &c1 * &c2;
            assert!(square.norm() < 1e-12);
        }
    }

    #[test]
    fn contraction_is_an_antiderivation() {
        // ι_w(x ∧ σ) = w(x)·σ − x ∧ ι_w(σ) for x a vector, σ a 2-form on C⁴.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let w = real_vec(&mut rng, 4);
            let x = real_vec(&mut rng, 4);
            let sigma = real_vec(&mut rng, 6);
            let lhs = contraction_matrix(&w, 3, 4)
                * (exterior_mult_matrix(&x, 1, 2, 4) * &sigma);
            let wx: C64 = w.dot(&x);
            let reduced = contraction_matrix(&w, 2, 4) * &sigma;
            let rhs = &sigma * wx - exterior_mult_matrix(&x, 1, 1, 4) * reduced;
            assert!((&lhs - &rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }
}
