//! Resectioning varieties: recovering a camera from point correspondences
//! is itself a multiview problem once the roles of points and cameras are
//! swapped. Fixed world points induce dual cameras acting on the stacked
//! camera entries, and the images of that dual arrangement form the
//! resectioning variety. This module builds the dual arrangements, the
//! multilinear generators of the vanishing ideal with their partial
//! derivatives, the rank-one singular-locus verification in the smallest
//! case, the inverse of the isomorphic resectioning map, and the ED counts
//! for both the dual-camera chart and the Möbius alignment chart.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::camera::{Camera, CameraArrangement};
use crate::linalg::{self, cr, real_vec};
use crate::metrics::{mix_seed, path_estimate, solve_instance, EddReport, MetricsError};
use crate::polysys::{ed_critical_system_reciprocal, MultiPoly, RationalFactor, RationalMap};
use crate::projective::{k_subsets, HomogeneousPoint};
use crate::C64;

/// Relative tolerance for the general-position minors.
const POSITION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ResectioningError {
    #[error("general position violated: {0}")]
    GeneralPosition(String),
    #[error("index count {k} outside the generator range [{lo}, {hi}]")]
    Range { k: usize, lo: usize, hi: usize },
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

// ---------------------------------------------------------------------------
// Point arrangements and dual cameras
// ---------------------------------------------------------------------------

/// World points of `P^N` in linearly general position: every subset of
/// N + 1 of them spans.
#[derive(Debug, Clone)]
pub struct PointArrangement {
    pub points: Vec<HomogeneousPoint>,
    pub dim: usize,
}

impl PointArrangement {
    pub fn new(points: Vec<HomogeneousPoint>, dim: usize) -> Result<Self, ResectioningError> {
        for (i, p) in points.iter().enumerate() {
            if p.ambient_dim() != dim {
                return Err(ResectioningError::DimensionMismatch(format!(
                    "point {i} lives in dimension {}, expected {dim}",
                    p.ambient_dim()
                )));
            }
        }
        if points.len() >= dim + 1 {
            for subset in k_subsets(points.len(), dim + 1) {
                let m = DMatrix::from_fn(dim + 1, dim + 1, |r, c| {
                    points[subset[c]].coords()[r]
                });
                let scale: f64 = subset
                    .iter()
                    .map(|&j| points[j].coords().norm())
                    .product();
                if linalg::det(&m).norm() <= POSITION_TOL * scale.max(1e-300) {
                    return Err(ResectioningError::GeneralPosition(format!(
                        "points {subset:?} do not span"
                    )));
                }
            }
        }
        Ok(Self { points, dim })
    }

    /// Sample n real points of `P^N` in general position.
    pub fn sample<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Result<Self, ResectioningError> {
        for _ in 0..50 {
            let points: Result<Vec<HomogeneousPoint>, _> = (0..n)
                .map(|_| HomogeneousPoint::new(real_vec(rng, dim + 1)))
                .collect();
            if let Ok(points) = points {
                if let Ok(arr) = Self::new(points, dim) {
                    return Ok(arr);
                }
            }
        }
        Err(ResectioningError::GeneralPosition(
            "failed to sample a general-position arrangement".into(),
        ))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The dual camera of a world point: the block matrix `I_{h+1} ⊗ Xᵀ`
/// acting on the row-stacked entries of a camera, so that
/// `C · X = dual_camera(X) · vec(C)`.
pub fn dual_camera(x: &HomogeneousPoint, h: usize) -> DMatrix<C64> {
    let np1 = x.ambient_dim() + 1;
    let mut m = DMatrix::zeros(h + 1, (h + 1) * np1);
    for r in 0..=h {
        for c in 0..np1 {
            m[(r, r * np1 + c)] = x.coords()[c];
        }
    }
    m
}

/// Row-stacked entries of a camera matrix, matching [`dual_camera`].
pub fn vectorize_camera(c: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_iterator(
        c.nrows() * c.ncols(),
        (0..c.nrows()).flat_map(|r| (0..c.ncols()).map(move |cc| c[(r, cc)])),
    )
}

/// Smallest camera count for which the dual arrangement is proper, i.e.
/// the resectioning variety has the expected dimension.
pub fn proper_threshold(big_n: usize, h: usize) -> usize {
    big_n + 2 + big_n / h
}

/// A point arrangement turned into the arrangement of its dual cameras,
/// projecting the camera space `P^{(h+1)(N+1)−1}` to the image planes.
#[derive(Debug, Clone)]
pub struct ResectioningArrangement {
    pub cameras: CameraArrangement,
    /// Whether the camera count reaches the properness threshold.
    pub proper: bool,
    pub threshold: usize,
}

pub fn resectioning_arrangement(
    x: &PointArrangement,
    h: usize,
) -> Result<ResectioningArrangement, MetricsError> {
    let cams: Result<Vec<Camera>, _> = x
        .points
        .iter()
        .map(|p| Camera::new(dual_camera(p, h)))
        .collect();
    let cameras = CameraArrangement::new(cams?)?;
    let threshold = proper_threshold(x.dim, h);
    Ok(ResectioningArrangement { cameras, proper: x.len() >= threshold, threshold })
}

// ---------------------------------------------------------------------------
// Vanishing-ideal generators
// ---------------------------------------------------------------------------

/// The k-linear maximal-minor generators of the resectioning ideal: for
/// every k-subset S of the points, the bordered matrix stacks the dual
/// cameras of S next to a block-diagonal of the image tuple, and every
/// maximal minor is one generator.
#[derive(Debug, Clone)]
pub struct Generators {
    duals: Vec<DMatrix<C64>>,
    pub big_n: usize,
    pub h: usize,
    pub k: usize,
    pub index_sets: Vec<Vec<usize>>,
    row_choices: Vec<Vec<usize>>,
    camera_cols: usize,
}

pub fn generators(
    x: &PointArrangement,
    h: usize,
    k: usize,
) -> Result<Generators, ResectioningError> {
    let big_n = x.dim;
    let lo = proper_threshold(big_n, h);
    let hi = (big_n + 1) * (h + 1);
    if k < lo || k > hi {
        return Err(ResectioningError::Range { k, lo, hi });
    }
    let camera_cols = (h + 1) * (big_n + 1);
    let rows = k * (h + 1);
    let cols = camera_cols + k;
    if rows < cols {
        return Err(ResectioningError::Range { k, lo, hi });
    }
    let duals = x.points.iter().map(|p| dual_camera(p, h)).collect();
    Ok(Generators {
        duals,
        big_n,
        h,
        k,
        index_sets: k_subsets(x.len(), k),
        row_choices: k_subsets(rows, cols),
        camera_cols,
    })
}

impl Generators {
    /// Number of generators: index subsets times maximal-minor row choices.
    pub fn count(&self) -> usize {
        self.index_sets.len() * self.row_choices.len()
    }

    /// The bordered matrix of one index subset at an image tuple.
    fn bordered(&self, set: &[usize], tuple: &[DVector<C64>]) -> DMatrix<C64> {
        let hp1 = self.h + 1;
        let rows = self.k * hp1;
        let mut m = DMatrix::zeros(rows, self.camera_cols + self.k);
        for (j, &i) in set.iter().enumerate() {
            let block = &self.duals[i];
            for r in 0..hp1 {
                for c in 0..self.camera_cols {
                    m[(j * hp1 + r, c)] = block[(r, c)];
                }
                m[(j * hp1 + r, self.camera_cols + j)] = -tuple[i][r];
            }
        }
        m
    }

    /// Every generator evaluated at the tuple, via LU determinants.
    pub fn eval(&self, tuple: &[DVector<C64>]) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.count());
        for set in &self.index_sets {
            let b = self.bordered(set, tuple);
            for rows in &self.row_choices {
                out.push(linalg::det(&select_rows(&b, rows)));
            }
        }
        out
    }

    /// Every partial derivative ∂/∂ tuple[i][c] of every generator. Each
    /// generator is linear in the bordered column of point i, so the
    /// derivative replaces that column with the matching sign vector.
    pub fn partial(&self, tuple: &[DVector<C64>], i: usize, c: usize) -> Vec<C64> {
        let hp1 = self.h + 1;
        let mut out = Vec::with_capacity(self.count());
        for set in &self.index_sets {
            let pos = set.iter().position(|&s| s == i);
            match pos {
                Some(j) => {
                    let mut b = self.bordered(set, tuple);
                    for r in 0..b.nrows() {
                        b[(r, self.camera_cols + j)] = cr(0.0);
                    }
                    b[(j * hp1 + c, self.camera_cols + j)] = cr(-1.0);
                    for rows in &self.row_choices {
                        out.push(linalg::det(&select_rows(&b, rows)));
                    }
                }
                Option::None => out.extend(std::iter::repeat(cr(0.0)).take(self.row_choices.len())),
            }
        }
        out
    }
}

fn select_rows(m: &DMatrix<C64>, rows: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

// ---------------------------------------------------------------------------
// Singular locus of the smallest resectioning variety
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct R11SingularReport {
    pub n: usize,
    pub generator_count: usize,
    pub rank_one_samples: usize,
    /// Largest generator value over the rank-one tuples.
    pub max_generator_residual: f64,
    /// Largest partial-derivative value over the rank-one tuples.
    pub max_partial_residual: f64,
    /// Largest generator value at the smooth sample point.
    pub smooth_generator_residual: f64,
    /// Largest partial derivative at the smooth sample point; a smooth
    /// point of the variety must have one nonzero.
    pub smooth_max_partial: f64,
    /// Largest two-sided residual of the Laplace pairing expansion.
    pub laplace_residual: f64,
    pub ok: bool,
}

/// Verify that the diagonal rank-one tuples sit in the singular locus of
/// the smallest resectioning variety: every quadrilinear generator and
/// every partial derivative vanishes there, while an image tuple of an
/// invertible camera is a smooth point. Also confirms the pairing
/// expansion of the bordered determinant into products of 2×2 minors.
pub fn sing_check_r11(n: usize, seed: u64) -> Result<R11SingularReport, MetricsError> {
    assert!(n >= 4, "the quadrilinear generators need at least four points");
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 51));
    let x = PointArrangement::sample(&mut rng, n, 1)?;
    let gens = generators(&x, 1, 4)?;

    let mut max_gen = 0.0f64;
    let mut max_partial = 0.0f64;
    let mut commons: Vec<DVector<C64>> = (0..48)
        .map(|_| {
            let t = rng.gen_range(-1.0..1.0);
            DVector::from_vec(vec![cr(1.0), cr(t)])
        })
        .collect();
    commons.push(DVector::from_vec(vec![cr(1.0), cr(0.0)]));
    commons.push(DVector::from_vec(vec![cr(0.0), cr(1.0)]));
    for common in &commons {
        let tuple: Vec<DVector<C64>> = (0..n)
            .map(|_| {
                let s = loop {
                    let s = rng.gen_range(-1.0..1.0_f64);
                    if s.abs() > 0.1 {
                        break s;
                    }
                };
                common * cr(s) / cr(common.norm())
            })
            .collect();
        for g in gens.eval(&tuple) {
            max_gen = max_gen.max(g.norm());
        }
        for i in 0..n {
            for c in 0..2 {
                for g in gens.partial(&tuple, i, c) {
                    max_partial = max_partial.max(g.norm());
                }
            }
        }
    }

    // a generic image tuple lies on the variety but off the singular locus
    let cam = loop {
        let c = linalg::real_mat(&mut rng, 2, 2);
        if linalg::det(&c).norm() > 0.3 {
            break c;
        }
    };
    let smooth_tuple: Vec<DVector<C64>> = x
        .points
        .iter()
        .map(|p| {
            let y = &cam * p.coords();
            let norm = y.norm();
            y / cr(norm)
        })
        .collect();
    let smooth_generator_residual = gens
        .eval(&smooth_tuple)
        .iter()
        .map(|g| g.norm())
        .fold(0.0, f64::max);
    let mut smooth_max_partial = 0.0f64;
    for i in 0..n {
        for c in 0..2 {
            for g in gens.partial(&smooth_tuple, i, c) {
                smooth_max_partial = smooth_max_partial.max(g.norm());
            }
        }
    }

    let laplace_residual = laplace_pairing_residual(&mut rng, 20);

    let ok = max_gen < 1e-10
        && max_partial < 1e-10
        && smooth_generator_residual < 1e-10
        && smooth_max_partial > 1e-6
        && laplace_residual < 1e-10;
    Ok(R11SingularReport {
        n,
        generator_count: gens.count(),
        rank_one_samples: commons.len(),
        max_generator_residual: max_gen,
        max_partial_residual: max_partial,
        smooth_generator_residual,
        smooth_max_partial,
        laplace_residual,
        ok,
    })
}

/// Two-sided check of the pairing expansion of the 8×8 bordered
/// determinant: it equals the signed sum over the three splittings
/// {i,j} ⊔ {k,l} of the four indices (counted in both orders) of
/// `v_i v_j det(X_i X_j) · u_k u_l det(X_k X_l)`.
fn laplace_pairing_residual<R: Rng>(rng: &mut R, trials: usize) -> f64 {
    const PAIRINGS: [([usize; 2], [usize; 2], f64); 6] = [
        ([0, 1], [2, 3], 1.0),
        ([0, 2], [1, 3], -1.0),
        ([0, 3], [1, 2], 1.0),
        ([1, 2], [0, 3], 1.0),
        ([1, 3], [0, 2], -1.0),
        ([2, 3], [0, 1], 1.0),
    ];
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let pts: Vec<DVector<C64>> = (0..4).map(|_| real_vec(rng, 2)).collect();
        let tuple: Vec<DVector<C64>> = (0..4).map(|_| real_vec(rng, 2)).collect();
        let arr = PointArrangement::new(
            pts.iter()
                .map(|p| HomogeneousPoint::new(p.clone()).expect("nonzero sample"))
                .collect(),
            1,
        );
        let arr = match arr {
            Ok(a) => a,
            Err(_) => continue,
        };
        let gens = generators(&arr, 1, 4).expect("valid range");
        let det = gens.eval(&tuple)[0];
        let d = |i: usize, j: usize| pts[i][0] * pts[j][1] - pts[j][0] * pts[i][1];
        let mut sum = cr(0.0);
        for (vv, uu, sign) in PAIRINGS {
            sum += cr(sign)
                * tuple[vv[0]][1]
                * tuple[vv[1]][1]
                * d(vv[0], vv[1])
                * tuple[uu[0]][0]
                * tuple[uu[1]][0]
                * d(uu[0], uu[1]);
        }
        let scale = det.norm().max(sum.norm()).max(1.0);
        worst = worst.max((det - sum).norm() / scale);
    }
    worst
}

// ---------------------------------------------------------------------------
// Inverse of the isomorphic resectioning map
// ---------------------------------------------------------------------------

/// Recover the camera from an image tuple of the resectioning map when the
/// map is an isomorphism (square invertible cameras, n ≥ N + 2). The
/// arrangement is normalized to the standard projective basis internally,
/// the camera of the normalized tuple is `[x_1 ⋯ x_{N+1}] · diag(λ)` with
/// λ matching the next image, and the normalization is undone.
pub fn iso_resection_inverse(
    x: &PointArrangement,
    tuple: &[DVector<C64>],
) -> Result<DMatrix<C64>, ResectioningError> {
    let big_n = x.dim;
    let np1 = big_n + 1;
    if x.len() < big_n + 2 || tuple.len() != x.len() {
        return Err(ResectioningError::DimensionMismatch(format!(
            "need at least {} points with matching images, got {} and {}",
            big_n + 2,
            x.len(),
            tuple.len()
        )));
    }
    if tuple.iter().any(|t| t.len() != np1) {
        return Err(ResectioningError::DimensionMismatch(
            "images of a square camera must match the world dimension".into(),
        ));
    }

    // normalizing homography: the first N+1 points to the coordinate
    // simplex, the next to the all-ones point
    let g0 = DMatrix::from_fn(np1, np1, |r, c| x.points[c].coords()[r]);
    let mu = linalg::solve(&g0, &x.points[np1].coords().clone_owned()).ok_or_else(|| {
        ResectioningError::GeneralPosition("first N+1 points do not span".into())
    })?;
    let mut scaled = g0;
    for c in 0..np1 {
        for r in 0..np1 {
            scaled[(r, c)] *= mu[c];
        }
    }
    let g = linalg::inverse(&scaled).ok_or_else(|| {
        ResectioningError::GeneralPosition("normalizing homography is singular".into())
    })?;

    // camera of the normalized arrangement
    let m0 = DMatrix::from_fn(np1, np1, |r, c| tuple[c][r]);
    if linalg::rank(&m0) < np1 {
        return Err(ResectioningError::RankDeficient(
            "first N+1 images do not span".into(),
        ));
    }
    let lambda = linalg::solve(&m0, &tuple[np1].clone_owned()).ok_or_else(|| {
        ResectioningError::RankDeficient("first N+1 images do not span".into())
    })?;
    let mut c_norm = m0;
    for c in 0..np1 {
        for r in 0..np1 {
            c_norm[(r, c)] *= lambda[c];
        }
    }
    Ok(c_norm * g)
}

// ---------------------------------------------------------------------------
// ED counts
// ---------------------------------------------------------------------------

/// Euclidean distance degree of the resectioning variety `R^{N,h}` with n
/// points, computed in the dual-camera chart: the camera entries are the
/// unknowns, the first entry is pinned to one, and the image factors use
/// the standard patch.
pub fn resection_edd(
    big_n: usize,
    h: usize,
    n: usize,
    seed: u64,
    budget: usize,
) -> Result<EddReport, MetricsError> {
    let threshold = proper_threshold(big_n, h);
    if n < threshold {
        return Err(MetricsError::InvalidPair(format!(
            "resectioning with N={big_n}, h={h} needs at least {threshold} points, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 41));
    let x = PointArrangement::sample(&mut rng, n, big_n)?;
    let res = resectioning_arrangement(&x, h)?;

    let nv = (h + 1) * (big_n + 1) - 1;
    let chart: Vec<MultiPoly> = (0..=nv)
        .map(|j| {
            if j == 0 {
                MultiPoly::constant(nv, cr(1.0))
            } else {
                let mut p = MultiPoly::zero(nv);
                let mut exps = vec![0u32; nv];
                exps[j - 1] = 1;
                p.add_term(exps, cr(1.0));
                p
            }
        })
        .collect();
    let factors: Vec<RationalFactor> = res
        .cameras
        .cameras
        .iter()
        .map(|cam| {
            let coords = crate::polysys::poly_matrix_apply(cam.matrix(), &chart);
            let denom = coords[0].clone();
            let mut patch = DVector::zeros(h + 1);
            patch[0] = cr(1.0);
            RationalFactor { coords, denom, patch, factor_dim: h }
        })
        .collect();
    let map = RationalMap { factors, num_vars: nv };

    let required = path_estimate(&map);
    if required > budget as u128 {
        return Err(MetricsError::BudgetExceeded {
            required: required.min(usize::MAX as u128) as usize,
            budget,
        });
    }

    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = DVector::from_fn(h + 1, |_, _| rng.gen_range(-1.0..1.0));
        u[0] = 1.0;
        data.push(u);
    }
    let system = ed_critical_system_reciprocal(&map, &data);
    let bezout = system.bezout_number();
    if bezout > budget {
        return Err(MetricsError::BudgetExceeded { required: bezout, budget });
    }
    let outcome = solve_instance(&system, &map, &data, Option::None, mix_seed(seed, 42))?;
    Ok(EddReport {
        tag: format!("R^{{{big_n},{h}}}"),
        n,
        bezout: outcome.bezout,
        raw: outcome.raw,
        filtered: outcome.points.len(),
        singular: outcome.singular,
        at_infinity: outcome.at_infinity,
        criticality_rejects: outcome.criticality_rejects,
        patch_coord: 0,
        points: outcome.points,
    })
}

/// Critical-point count of the Möbius alignment problem: fit a Möbius
/// transformation (c11·X + c12)/(c21·X + c22) through n real sample pairs
/// in least squares, in the c22 = 1 chart. This is the smallest
/// resectioning ED problem in an independent chart.
pub fn mobius_alignment_edd(
    n: usize,
    seed: u64,
    budget: usize,
) -> Result<EddReport, MetricsError> {
    if n < 4 {
        return Err(MetricsError::InvalidPair(format!(
            "the alignment problem needs at least 4 samples, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 61));
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

    // variables (c11, c12, c21); homogeneous image coordinates are
    // (c21·X + 1, c11·X + c12)
    let nv = 3;
    let factors: Vec<RationalFactor> = xs
        .iter()
        .map(|&xi| {
            let denom = MultiPoly::affine_linear(nv, cr(1.0), &[cr(0.0), cr(0.0), cr(xi)]);
            let numer = MultiPoly::affine_linear(nv, cr(0.0), &[cr(xi), cr(1.0), cr(0.0)]);
            let mut patch = DVector::zeros(2);
            patch[0] = cr(1.0);
            RationalFactor {
                coords: vec![denom.clone(), numer],
                denom,
                patch,
                factor_dim: 1,
            }
        })
        .collect();
    let map = RationalMap { factors, num_vars: nv };

    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(DVector::from_vec(vec![1.0, rng.gen_range(-1.0..1.0)]));
    }
    let system = ed_critical_system_reciprocal(&map, &data);
    let bezout = system.bezout_number();
    if bezout > budget {
        return Err(MetricsError::BudgetExceeded { required: bezout, budget });
    }
    let outcome = solve_instance(&system, &map, &data, Option::None, mix_seed(seed, 62))?;
    Ok(EddReport {
        tag: "R^{1,1}".into(),
        n,
        bezout: outcome.bezout,
        raw: outcome.raw,
        filtered: outcome.points.len(),
        singular: outcome.singular,
        at_infinity: outcome.at_infinity,
        criticality_rejects: outcome.criticality_rejects,
        patch_coord: 0,
        points: outcome.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{proj_dist, real_mat};
    use crate::metrics::DEFAULT_BUDGET;

    #[test]
    fn dual_cameras_reproduce_the_camera_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (big_n, h) in [(1usize, 1usize), (2, 1), (2, 2), (3, 2)] {
            let x = PointArrangement::sample(&mut rng, big_n + 3, big_n).unwrap();
            let c = real_mat(&mut rng, h + 1, big_n + 1);
            let vec_c = vectorize_camera(&c);
            for p in &x.points {
                let direct = &c * p.coords();
                let dual = dual_camera(p, h) * &vec_c;
                assert!((&direct - &dual).norm() < 1e-12 * direct.norm());
            }
        }
    }

    #[test]
    fn four_line_points_give_two_by_four_dual_cameras() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = PointArrangement::sample(&mut rng, 4, 1).unwrap();
        let res = resectioning_arrangement(&x, 1).unwrap();
        assert!(res.proper);
        assert_eq!(res.threshold, 4);
        assert_eq!(res.cameras.len(), 4);
        for cam in &res.cameras.cameras {
            assert_eq!((cam.matrix().nrows(), cam.matrix().ncols()), (2, 4));
        }
        let below = PointArrangement::sample(&mut rng, 3, 1).unwrap();
        assert!(!resectioning_arrangement(&below, 1).unwrap().proper);
    }

    #[test]
    fn collinear_plane_points_are_rejected() {
        let pts = vec![
            HomogeneousPoint::from_real(&[1.0, 0.0, 0.0]),
            HomogeneousPoint::from_real(&[0.0, 1.0, 0.0]),
            HomogeneousPoint::from_real(&[1.0, 1.0, 0.0]),
            HomogeneousPoint::from_real(&[0.0, 0.0, 1.0]),
        ];
        assert!(matches!(
            PointArrangement::new(pts, 2),
            Err(ResectioningError::GeneralPosition(_))
        ));
    }

    #[test]
    fn generators_vanish_exactly_on_image_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = PointArrangement::sample(&mut rng, 5, 1).unwrap();
        let gens = generators(&x, 1, 4).unwrap();
        assert_eq!(gens.count(), 5);
        for _ in 0..50 {
            let c = real_mat(&mut rng, 2, 2);
            let tuple: Vec<DVector<C64>> = x
                .points
                .iter()
                .map(|p| {
                    let y = &c * p.coords();
                    let norm = y.norm();
                    y / cr(norm)
                })
                .collect();
            for g in gens.eval(&tuple) {
                assert!(g.norm() < 1e-10);
            }
        }
        let random_tuple: Vec<DVector<C64>> = (0..5).map(|_| real_vec(&mut rng, 2)).collect();
        let values = gens.eval(&random_tuple);
        assert!(values.iter().any(|g| g.norm() > 1e-6));
    }

    #[test]
    fn generator_index_range_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = PointArrangement::sample(&mut rng, 5, 1).unwrap();
        assert!(matches!(generators(&x, 1, 3), Err(ResectioningError::Range { .. })));
        assert!(matches!(generators(&x, 1, 5), Err(ResectioningError::Range { .. })));
    }

    #[test]
    fn generators_are_multilinear_in_each_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = PointArrangement::sample(&mut rng, 5, 1).unwrap();
        let gens = generators(&x, 1, 4).unwrap();
        let tuple: Vec<DVector<C64>> = (0..5).map(|_| real_vec(&mut rng, 2)).collect();
        let base = gens.eval(&tuple);
        let s = cr(1.7);
        for i in 0..5 {
            let mut scaled = tuple.clone();
            scaled[i] = &scaled[i] * s;
            let vals = gens.eval(&scaled);
            for ((set, v), v0) in gens
                .index_sets
                .iter()
                .zip(&vals)
                .zip(&base)
            {
                let expected = if set.contains(&i) { v0 * s } else { *v0 };
                assert!((v - expected).norm() < 1e-10 * expected.norm().max(1.0));
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = PointArrangement::sample(&mut rng, 4, 1).unwrap();
        let gens = generators(&x, 1, 4).unwrap();
        let tuple: Vec<DVector<C64>> = (0..4).map(|_| real_vec(&mut rng, 2)).collect();
        let h = 0.5;
        for i in 0..4 {
            for c in 0..2 {
                let mut plus = tuple.clone();
                plus[i][c] += cr(h);
                let mut minus = tuple.clone();
                minus[i][c] -= cr(h);
                let fd: Vec<C64> = gens
                    .eval(&plus)
                    .iter()
                    .zip(gens.eval(&minus))
                    .map(|(p, m)| (p - m) / cr(2.0 * h))
                    .collect();
                for (d, f) in gens.partial(&tuple, i, c).iter().zip(fd) {
                    assert!((d - f).norm() < 1e-9 * f.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn rank_one_tuples_are_singular_points() {
        for n in [4usize, 5] {
            let report = sing_check_r11(n, 7).unwrap();
            assert!(report.ok, "{report:?}");
            assert_eq!(report.generator_count, crate::projective::binom(n, 4));
        }
    }

    #[test]
    fn iso_resection_inverse_recovers_the_camera() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (big_n, n) in [(1usize, 4usize), (2, 5)] {
            let x = PointArrangement::sample(&mut rng, n, big_n).unwrap();
            let c = loop {
                let c = real_mat(&mut rng, big_n + 1, big_n + 1);
                if linalg::det(&c).norm() > 0.1 {
                    break c;
                }
            };
            let tuple: Vec<DVector<C64>> =
                x.points.iter().map(|p| &c * p.coords()).collect();
            let recovered = iso_resection_inverse(&x, &tuple).unwrap();
            let flat_c = vectorize_camera(&c);
            let flat_r = vectorize_camera(&recovered);
            assert!(proj_dist(&flat_c, &flat_r) < 1e-10);
        }
    }

    #[test]
    fn iso_resection_inverse_rejects_degenerate_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = PointArrangement::sample(&mut rng, 4, 1).unwrap();
        let common = real_vec(&mut rng, 2);
        let tuple: Vec<DVector<C64>> = (0..4).map(|_| common.clone()).collect();
        assert!(matches!(
            iso_resection_inverse(&x, &tuple),
            Err(ResectioningError::RankDeficient(_))
        ));
    }

    #[test]
    fn alignment_count_matches_the_conjectured_formula() {
        let report = mobius_alignment_edd(4, 11, DEFAULT_BUDGET).unwrap();
        assert_eq!(report.filtered, 4);
        assert_eq!(report.criticality_rejects, 0);
    }

    #[test]
    fn both_charts_agree_on_the_smallest_resectioning_count() {
        let dual = resection_edd(1, 1, 4, 13, DEFAULT_BUDGET).unwrap();
        let mobius = mobius_alignment_edd(4, 13, DEFAULT_BUDGET).unwrap();
        assert_eq!(dual.filtered, 4);
        assert_eq!(mobius.filtered, dual.filtered);
    }

    #[test]
    fn too_few_points_are_rejected() {
        assert!(resection_edd(1, 1, 3, 1, DEFAULT_BUDGET).is_err());
        assert!(mobius_alignment_edd(3, 1, DEFAULT_BUDGET).is_err());
    }
}
