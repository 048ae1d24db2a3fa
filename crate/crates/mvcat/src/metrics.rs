//! Catalogue-level numerics: Euclidean distance degrees, multidegrees,
//! ED-equivalence verification, dominance of the reduction maps, the
//! line-anchor singular point check, and the leading-coefficient pattern.
//!
//! All counting operations run the homotopy solver twice with independent
//! gamma seeds and insist on agreeing counts; disagreement is reported as
//! an unstable count rather than silently picking one answer.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::camera::{
    cayley, cayley_differential, sample_rotation, sample_skew, skew_basis_direction,
    CameraArrangement, CameraError,
};
use crate::catalogue::{
    dimension, representative, sample_spec, world_chart, AnchorKind, CatalogueError, FamilyClass,
    FamilySpec, SchubertAnchor, SchubertMap,
};
use crate::claims::{self, ClaimKind};
use crate::linalg::{self, cr, proj_dist, rank_with_tol, real_vec};
use crate::polysys::{
    ed_critical_system_reciprocal, poly_dot, poly_eval_vec, poly_matrix_apply,
    rational_parametrization, slice_system, AffinePatch, FactorPatch, MultiPoly, PolyError,
    PolySystem, RationalFactor, RationalMap,
};
use crate::projective::{
    binom, contraction_matrix, exterior_mult_matrix, plucker_embed, points_on_line, wedge_power,
    wedge_power_entry_derivative, GeometryError, HomogeneousPoint,
};
use crate::solver::{solve, SolverError, TrackConfig};
use crate::C64;

/// Default cap on homotopy start points for a single solve.
pub const DEFAULT_BUDGET: usize = 50_000;

/// Relative denominator magnitude below which an endpoint is discarded as
/// an artifact of clearing denominators.
const MIN_DENOM_TOL: f64 = 1e-8;
/// Relative factor-coordinate norm below which an endpoint lies on an
/// excluded base locus.
const FACTOR_ZERO_TOL: f64 = 1e-8;
/// Projective distance below which an endpoint is identified with an
/// excluded world point.
const EXCLUDE_TOL: f64 = 1e-6;
/// First-order optimality residual accepted for a critical point.
const CRITICALITY_TOL: f64 = 1e-8;
/// Relative tolerance for matching critical points across a bijection.
const MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Catalogue(#[from] CatalogueError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Resectioning(#[from] crate::resectioning::ResectioningError),
    #[error("count did not stabilize: {0}")]
    UnstableCount(String),
    #[error("path budget exceeded: {required} start points, budget {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("bijection check failed: {0}")]
    BijectionFailure(String),
    #[error("not a supported pair: {0}")]
    InvalidPair(String),
    #[error("no registered claim for {0}")]
    UnknownClaim(String),
}

/// Splitmix-style seed mixer so that derived seeds from nearby salts are
/// statistically unrelated.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// ED problem assembly
// ---------------------------------------------------------------------------

/// A fully assembled ED criticality instance for one family sample: the
/// rational joint map, the real data tuple, and the cleared polynomial
/// system whose finite regular roots are the critical-point candidates.
#[derive(Debug, Clone)]
pub struct EdProblem {
    pub map: RationalMap,
    pub data: Vec<DVector<f64>>,
    pub system: PolySystem,
    /// Which coordinate carries the affine normalization (all factors use
    /// the same one); 0 is the standard patch.
    pub patch_coord: usize,
    /// World-chart polynomials and an excluded world point: endpoints whose
    /// chart image is projectively this point are discarded (the anchored
    /// line families pass through the singular anchor point).
    pub exclude_world: Option<(Vec<MultiPoly>, DVector<C64>)>,
}

/// Assemble the ED criticality problem for a sampled family instance.
///
/// The affine patch fixes the same coordinate to one on every image factor
/// (the first coordinate unless it degenerates on this sample) and the data
/// tuple is real uniform with the patched coordinate set to one exactly.
/// Fails with `BudgetExceeded` before building the cleared system whenever
/// a degree estimate already rules the solve out.
pub fn ed_problem(
    spec: &FamilySpec,
    seed: u64,
    budget: usize,
) -> Result<EdProblem, MetricsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    build_problem(spec, &mut rng, budget)
}

fn build_problem<R: Rng>(
    spec: &FamilySpec,
    rng: &mut R,
    budget: usize,
) -> Result<EdProblem, MetricsError> {
    dimension(spec)?;
    let chart = world_chart(spec, rng)?;
    let arrangement =
        CameraArrangement::sample(rng, spec.source_dim, spec.image_dim, spec.n)?;

    let coord_len = binom(spec.image_dim + 1, spec.object_dim + 1);
    let mut built: Option<(RationalMap, usize)> = None;
    let mut last_err: Option<PolyError> = None;
    for c in 0..coord_len {
        let patch = AffinePatch {
            factors: (0..spec.n).map(|_| FactorPatch::Coordinate(c)).collect(),
        };
        match rational_parametrization(spec, &chart, &arrangement, &patch) {
            Ok(map) => {
                built = Some((map, c));
                break;
            }
            Err(e @ PolyError::PatchDegenerate(_)) => last_err = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    let (map, patch_coord) = match built {
        Some(pair) => pair,
        Option::None => return Err(last_err.expect("at least one patch attempt").into()),
    };

    if map.num_vars > 1 {
        let required = path_estimate(&map);
        if required > budget as u128 {
            return Err(MetricsError::BudgetExceeded {
                required: required.min(usize::MAX as u128) as usize,
                budget,
            });
        }
    }

    let mut data = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut u = DVector::from_fn(coord_len, |_, _| rng.gen_range(-1.0..1.0));
        u[patch_coord] = 1.0;
        data.push(u);
    }

    let system = ed_critical_system_reciprocal(&map, &data);
    let bezout = system.bezout_number();
    if bezout > budget {
        return Err(MetricsError::BudgetExceeded { required: bezout, budget });
    }

    let exclude_world = match (&spec.anchor, spec.object_dim) {
        (SchubertAnchor::Line(l), 1) => Some((chart.coords.clone(), l.coords().clone())),
        _ => Option::None,
    };

    Ok(EdProblem { map, data, system, patch_coord, exclude_world })
}

/// Total-degree path count of the saturated critical system before it is
/// built: each partial-derivative equation has degree at most
/// max_i(2·deg N_i + deg D_i + 2) and each saturation row degree
/// deg D_i + 1, so the product bounds the homotopy start count.
pub(crate) fn path_estimate(map: &RationalMap) -> u128 {
    let est_e = map
        .factors
        .iter()
        .map(|f| {
            let dn = f.coords.iter().map(|p| p.total_degree()).max().unwrap_or(0);
            2 * dn + f.denom.total_degree() + 2
        })
        .max()
        .unwrap_or(0);
    let mut required = (est_e as u128).saturating_pow(map.num_vars as u32);
    for f in &map.factors {
        required = required.saturating_mul((f.denom.total_degree() + 1) as u128);
    }
    required
}

// ---------------------------------------------------------------------------
// Solving and filtering
// ---------------------------------------------------------------------------

/// One accepted critical point of the squared-distance objective.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    /// Chart parameters.
    pub t: DVector<C64>,
    /// Patch-affine image coordinates per factor.
    pub images: Vec<DVector<C64>>,
    /// Complex bilinear squared distance to the data tuple.
    pub distance_sq: C64,
    /// First-order optimality residual.
    pub criticality: f64,
}

pub(crate) struct SolveOutcome {
    pub(crate) points: Vec<CriticalPoint>,
    pub(crate) raw: usize,
    pub(crate) criticality_rejects: usize,
    pub(crate) singular: usize,
    pub(crate) at_infinity: usize,
    pub(crate) bezout: usize,
}

/// Solve the system with two independent gamma seeds, filter both endpoint
/// sets, and insist the filtered counts agree.
pub(crate) fn solve_instance(
    system: &PolySystem,
    map: &RationalMap,
    data: &[DVector<f64>],
    exclude_world: Option<&(Vec<MultiPoly>, DVector<C64>)>,
    seed: u64,
) -> Result<SolveOutcome, MetricsError> {
    let mut first: Option<SolveOutcome> = None;
    for (i, salt) in [0x55u64, 0xAA].into_iter().enumerate() {
        let config = TrackConfig { seed: mix_seed(seed, salt), ..TrackConfig::default() };
        let report = solve(system, &config)?;
        if report.failed > 0 {
            return Err(MetricsError::UnstableCount(format!(
                "{} of {} paths failed to track",
                report.failed, report.bezout
            )));
        }
        // The system may carry auxiliary variables (reciprocal denominators)
        // after the chart parameters; the filters only see the chart block.
        let candidates: Vec<DVector<C64>> = report
            .regular_solutions
            .iter()
            .map(|z| z.rows(0, map.num_vars).into_owned())
            .collect();
        let (points, rejects) = filter_endpoints(map, data, exclude_world, &candidates);
        match &first {
            Option::None => {
                first = Some(SolveOutcome {
                    points,
                    raw: report.regular_solutions.len(),
                    criticality_rejects: rejects,
                    singular: report.singular,
                    at_infinity: report.at_infinity,
                    bezout: report.bezout,
                });
            }
            Some(prev) if prev.points.len() != points.len() => {
                return Err(MetricsError::UnstableCount(format!(
                    "independent homotopies disagree: {} vs {} critical points",
                    prev.points.len(),
                    points.len()
                )));
            }
            Some(_) => debug_assert_eq!(i, 1),
        }
    }
    Ok(first.expect("two runs completed"))
}

/// Keep the endpoints that are genuine critical points of the rational
/// objective: denominators bounded away from zero, no factor on the base
/// locus, not an excluded world point, and first-order residual within
/// tolerance. Only the last filter counts as a rejection; the others are
/// artifacts of clearing denominators.
fn filter_endpoints(
    map: &RationalMap,
    data: &[DVector<f64>],
    exclude_world: Option<&(Vec<MultiPoly>, DVector<C64>)>,
    candidates: &[DVector<C64>],
) -> (Vec<CriticalPoint>, usize) {
    let mut points = Vec::new();
    let mut rejects = 0usize;
    'next: for cand in candidates {
        let t = cand.as_slice();
        if map.min_denominator(t) <= MIN_DENOM_TOL {
            continue;
        }
        for f in &map.factors {
            let n = poly_eval_vec(&f.coords, t);
            if n.norm() <= FACTOR_ZERO_TOL * factor_scale(f, t) {
                continue 'next;
            }
        }
        if let Some((chart, excluded)) = exclude_world {
            let w = poly_eval_vec(chart, t);
            if proj_dist(&w, excluded) <= EXCLUDE_TOL {
                continue;
            }
        }
        let criticality = map.criticality_residual(data, t);
        if criticality > CRITICALITY_TOL {
            rejects += 1;
            continue;
        }
        let mut images = Vec::with_capacity(map.factors.len());
        let mut distance_sq = cr(0.0);
        for (f, u) in map.factors.iter().zip(data) {
            let n = poly_eval_vec(&f.coords, t);
            let d = f.denom.eval(t);
            let y = n / d;
            for c in 0..y.len() {
                let diff = y[c] - cr(u[c]);
                distance_sq += diff * diff;
            }
            images.push(y);
        }
        points.push(CriticalPoint { t: cand.clone(), images, distance_sq, criticality });
    }
    (points, rejects)
}

/// Coefficient-scale bound for a factor's coordinate polynomials at t, so
/// near-zero factor values are judged relative to the instance size.
fn factor_scale(f: &RationalFactor, t: &[C64]) -> f64 {
    let tn = t.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    f.coords
        .iter()
        .map(|p| p.max_coeff() * tn.powi(p.total_degree() as i32))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Euclidean distance degree
// ---------------------------------------------------------------------------

/// Result of one EDD computation.
#[derive(Debug, Clone)]
pub struct EddReport {
    pub tag: String,
    pub n: usize,
    /// Start points of the homotopy.
    pub bezout: usize,
    /// Distinct finite regular endpoints before filtering.
    pub raw: usize,
    /// Accepted critical points; this is the ED degree estimate.
    pub filtered: usize,
    pub singular: usize,
    pub at_infinity: usize,
    /// Endpoints that passed the locus filters but failed the first-order
    /// residual check.
    pub criticality_rejects: usize,
    pub patch_coord: usize,
    pub points: Vec<CriticalPoint>,
}

/// Euclidean distance degree of a family instance by counting critical
/// points of a generic real data tuple.
pub fn edd(spec: &FamilySpec, seed: u64, budget: usize) -> Result<EddReport, MetricsError> {
    let prob = ed_problem(spec, seed, budget)?;
    let outcome = solve_instance(
        &prob.system,
        &prob.map,
        &prob.data,
        prob.exclude_world.as_ref(),
        mix_seed(seed, 2),
    )?;
    Ok(EddReport {
        tag: spec.tag(),
        n: spec.n,
        bezout: outcome.bezout,
        raw: outcome.raw,
        filtered: outcome.points.len(),
        singular: outcome.singular,
        at_infinity: outcome.at_infinity,
        criticality_rejects: outcome.criticality_rejects,
        patch_coord: prob.patch_coord,
        points: outcome.points,
    })
}

/// EDD for a family tag, sampling the anchor internally. Resectioning tags
/// dispatch to the dual-camera construction.
pub fn edd_for_tag(
    tag: &str,
    n: usize,
    seed: u64,
    budget: usize,
) -> Result<EddReport, MetricsError> {
    if let Some(inner) = tag.strip_prefix("R^{").and_then(|s| s.strip_suffix('}')) {
        let parts: Vec<&str> = inner.split(',').collect();
        let bad = || MetricsError::UnknownClaim(tag.to_string());
        if parts.len() != 2 {
            return Err(bad());
        }
        let big_n: usize = parts[0].parse().map_err(|_| bad())?;
        let h: usize = parts[1].parse().map_err(|_| bad())?;
        return crate::resectioning::resection_edd(big_n, h, n, seed, budget);
    }
    let class = FamilyClass::parse(tag)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 3));
    let spec = sample_spec(&class, n, &mut rng)?;
    edd(&spec, seed, budget)
}

// ---------------------------------------------------------------------------
// Multidegree
// ---------------------------------------------------------------------------

/// Multidegree of a family instance for a codimension profile `d`: the
/// number of points cut by generic linear slices, `d[i]` of them pulled
/// from factor i. Three independent arrangements must agree.
pub fn multidegree(
    spec: &FamilySpec,
    d: &[usize],
    seed: u64,
    budget: usize,
) -> Result<usize, MetricsError> {
    dimension(spec)?;
    let coord_len = binom(spec.image_dim + 1, spec.object_dim + 1);
    let mut counts = Vec::with_capacity(3);
    for run in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 4 + run));
        let chart = world_chart(spec, &mut rng)?;
        let arrangement =
            CameraArrangement::sample(&mut rng, spec.source_dim, spec.image_dim, spec.n)?;
        let patch = AffinePatch::generic(&mut rng, &vec![coord_len; spec.n]);
        let map = rational_parametrization(spec, &chart, &arrangement, &patch)?;
        let system = slice_system(&map, d, &mut rng)?;
        let bezout = system.bezout_number();
        if bezout > budget {
            return Err(MetricsError::BudgetExceeded { required: bezout, budget });
        }
        let config =
            TrackConfig { seed: mix_seed(seed, 8 + run), ..TrackConfig::default() };
        let report = solve(&system, &config)?;
        if report.failed > 0 {
            return Err(MetricsError::UnstableCount(format!(
                "{} of {} slice paths failed to track",
                report.failed, report.bezout
            )));
        }
        let count = report
            .regular_solutions
            .iter()
            .filter(|cand| {
                let t = cand.as_slice();
                map.factors.iter().all(|f| {
                    poly_eval_vec(&f.coords, t).norm() > FACTOR_ZERO_TOL * factor_scale(f, t)
                })
            })
            .count();
        counts.push(count);
    }
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(MetricsError::UnstableCount(format!(
            "slice counts across arrangements: {counts:?}"
        )));
    }
    Ok(counts[0])
}

// ---------------------------------------------------------------------------
// EDD table verification
// ---------------------------------------------------------------------------

/// Outcome of one (family, n) row against the registered formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Match,
    Mismatch,
    /// The formula does not claim this n.
    NoClaim,
    /// The computation was not attempted, with the reason.
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct EddRow {
    pub tag: String,
    pub n: usize,
    pub kind: ClaimKind,
    pub expected: Option<i64>,
    pub raw: Option<usize>,
    pub filtered: Option<usize>,
    pub status: RowStatus,
    pub seed: u64,
    pub runtime_ms: u128,
}

impl EddRow {
    /// Whether this row fails the run: theorem mismatches always do,
    /// conjecture mismatches only in strict mode.
    pub fn is_failure(&self, strict: bool) -> bool {
        self.status == RowStatus::Mismatch && (strict || self.kind == ClaimKind::Theorem)
    }
}

/// Compute one row of the EDD table and compare with the claimed formula.
pub fn verify_edd_row(
    tag: &str,
    n: usize,
    seed: u64,
    budget: usize,
) -> Result<EddRow, MetricsError> {
    let claim =
        claims::edd_claim(tag).ok_or_else(|| MetricsError::UnknownClaim(tag.to_string()))?;
    let expected = if claim.in_range(n) { Some(claim.eval(n)) } else { Option::None };
    let start = Instant::now();
    let computed = edd_for_tag(tag, n, seed, budget);
    let runtime_ms = start.elapsed().as_millis();
    let (raw, filtered, status) = match computed {
        Ok(report) => {
            let status = match expected {
                Some(e) => {
                    if e == report.filtered as i64 {
                        RowStatus::Match
                    } else {
                        RowStatus::Mismatch
                    }
                }
                Option::None => RowStatus::NoClaim,
            };
            (Some(report.raw), Some(report.filtered), status)
        }
        Err(MetricsError::BudgetExceeded { required, budget }) => (
            Option::None,
            Option::None,
            RowStatus::Skipped(format!("needs {required} paths, budget {budget}")),
        ),
        Err(e) => return Err(e),
    };
    Ok(EddRow {
        tag: tag.to_string(),
        n,
        kind: claim.kind,
        expected,
        raw,
        filtered,
        status,
        seed,
        runtime_ms,
    })
}

/// Verify a camera-count range of one family's EDD formula.
pub fn verify_edd_table(
    tag: &str,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    budget: usize,
) -> Result<Vec<EddRow>, MetricsError> {
    n_range.map(|n| verify_edd_row(tag, n, seed, budget)).collect()
}

// ---------------------------------------------------------------------------
// ED-equivalence
// ---------------------------------------------------------------------------

/// The four proven ED-equivalences between an anchored family and its
/// point-family representative, as (representative, anchored) pairs.
pub fn equivalence_pairs() -> Vec<(FamilyClass, FamilyClass)> {
    let t = |tag: &str| FamilyClass::parse(tag).expect("catalogued tag");
    vec![
        (t("M^{3,3}"), t("P^{3,3}")),
        (t("M^{2,2}"), t("P^{X,3,3}")),
        (t("M^{2,1}"), t("L^{X,3,2}")),
        (t("M^{1,1}"), t("L^{X,2,2}")),
    ]
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub left: String,
    pub right: String,
    pub n: usize,
    /// Agreed critical-point count on both sides.
    pub count: usize,
    /// Constant objective offsets per factor from the isometric reduction.
    pub offsets: Vec<f64>,
    /// Largest relative parameter distance across the matched multisets.
    pub max_point_mismatch: f64,
    /// Largest criticality residual of either side's points against the
    /// other side's objective.
    pub max_cross_residual: f64,
    /// Largest relative mismatch of offset-corrected squared distances.
    pub max_distance_mismatch: f64,
    /// Filtered count of an independently sampled representative instance.
    pub representative_count: usize,
}

/// Verify one of the proven ED-equivalences at camera count n: build the
/// isometric reduction explicitly, check that both objectives have the
/// same critical points with squared distances shifted by the predicted
/// constant, and compare against a fresh representative instance.
pub fn verify_ed_equivalence(
    left: &FamilyClass,
    right: &FamilyClass,
    n: usize,
    seed: u64,
    budget: usize,
) -> Result<EquivalenceReport, MetricsError> {
    if !equivalence_pairs().contains(&(*left, *right)) {
        return Err(MetricsError::InvalidPair(format!(
            "({}, {}) is not a proven equivalence",
            left.tag(),
            right.tag()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 11));
    let spec_b = sample_spec(right, n, &mut rng)?;
    dimension(&spec_b)?;
    let chart_b = world_chart(&spec_b, &mut rng)?;
    let mb = match &chart_b.map {
        SchubertMap::Linear(m) => m.clone(),
        _ => {
            return Err(MetricsError::InvalidPair(format!(
                "{} chart is not linear",
                right.tag()
            )))
        }
    };
    let cols = left.source_dim + 1;
    if mb.ncols() != cols {
        return Err(MetricsError::BijectionFailure(format!(
            "chart has {} parameters, representative source needs {cols}",
            mb.ncols()
        )));
    }
    let p = left.image_dim + 1;
    let cams_b =
        CameraArrangement::sample(&mut rng, right.source_dim, right.image_dim, n)?;

    let mut patch_b_factors = Vec::with_capacity(n);
    let mut factors_a = Vec::with_capacity(n);
    let mut reductions = Vec::with_capacity(n);
    for cam in &cams_b.cameras {
        let w = cam.wedge(right.object_dim + 1);
        let wm = &w * &mb;
        let wm_re = DMatrix::from_fn(wm.nrows(), wm.ncols(), |i, j| wm[(i, j)].re);
        let q = linalg::orthonormal_col_basis(&wm_re);
        if q.ncols() != p {
            return Err(MetricsError::BijectionFailure(format!(
                "factor image span has dimension {}, expected {p}",
                q.ncols()
            )));
        }
        let a = sample_rotation(&mut rng, p)? * linalg::promote(&q).transpose();
        let cov_b = real_vec(&mut rng, w.nrows());
        let cov_a = &a * &cov_b;
        let coords_a = poly_matrix_apply(&(&a * &w), &chart_b.coords);
        let denom_a = poly_dot(&cov_a, &coords_a).trim(1e-13);
        factors_a.push(RationalFactor {
            coords: coords_a,
            denom: denom_a,
            patch: cov_a,
            factor_dim: left.image_dim,
        });
        patch_b_factors.push(FactorPatch::Generic(cov_b));
        reductions.push(a);
    }
    let patch_b = AffinePatch { factors: patch_b_factors };
    let map_b = rational_parametrization(&spec_b, &chart_b, &cams_b, &patch_b)?;
    let map_a = RationalMap { factors: factors_a, num_vars: chart_b.domain_dim };

    // the reduction is an isometry on the factor span, so the two patch
    // denominators must agree as polynomials
    for (fa, fb) in map_a.factors.iter().zip(&map_b.factors) {
        let diff = fa.denom.sub(&fb.denom).max_coeff();
        if diff > 1e-8 * fb.denom.max_coeff().max(1e-300) {
            return Err(MetricsError::BijectionFailure(format!(
                "patch denominators differ by {diff:.3e}"
            )));
        }
    }

    let mut data_b = Vec::with_capacity(n);
    let mut data_a = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for a in &reductions {
        let rows = a.ncols();
        let u = DVector::from_fn(rows, |_, _| rng.gen_range(-1.0..1.0));
        let a_re = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re);
        let v = &a_re * &u;
        offsets.push(u.norm_squared() - v.norm_squared());
        data_b.push(u);
        data_a.push(v);
    }
    let total_offset: f64 = offsets.iter().sum();

    let sys_b = ed_critical_system_reciprocal(&map_b, &data_b);
    let sys_a = ed_critical_system_reciprocal(&map_a, &data_a);
    let required = sys_b.bezout_number().max(sys_a.bezout_number());
    if required > budget {
        return Err(MetricsError::BudgetExceeded { required, budget });
    }
    let out_b = solve_instance(&sys_b, &map_b, &data_b, Option::None, mix_seed(seed, 21))?;
    let out_a = solve_instance(&sys_a, &map_a, &data_a, Option::None, mix_seed(seed, 23))?;
    if out_b.criticality_rejects > 0 || out_a.criticality_rejects > 0 {
        return Err(MetricsError::BijectionFailure(format!(
            "criticality rejects: {} on the anchored side, {} on the reduced side",
            out_b.criticality_rejects, out_a.criticality_rejects
        )));
    }
    if out_b.points.len() != out_a.points.len() {
        return Err(MetricsError::BijectionFailure(format!(
            "critical counts differ: {} vs {}",
            out_b.points.len(),
            out_a.points.len()
        )));
    }
    let count = out_b.points.len();

    // greedy multiset matching in the shared parameter space
    let mut taken = vec![false; count];
    let mut max_point_mismatch = 0.0f64;
    let mut max_distance_mismatch = 0.0f64;
    let mut max_cross_residual = 0.0f64;
    for pb in &out_b.points {
        let scale = pb.t.norm().max(1.0);
        let mut best: Option<(usize, f64)> = Option::None;
        for (j, pa) in out_a.points.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let dist = (&pb.t - &pa.t).norm();
            if best.map_or(true, |(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
        let (j, dist) = best.expect("counts already matched");
        if dist > MATCH_TOL * scale {
            return Err(MetricsError::BijectionFailure(format!(
                "unmatched critical point, nearest at relative distance {:.3e}",
                dist / scale
            )));
        }
        taken[j] = true;
        max_point_mismatch = max_point_mismatch.max(dist / scale);

        let pa = &out_a.points[j];
        let dmis = (pb.distance_sq - cr(total_offset) - pa.distance_sq).norm()
            / pb.distance_sq.norm().max(1.0);
        if dmis > MATCH_TOL {
            return Err(MetricsError::BijectionFailure(format!(
                "squared distances differ by {dmis:.3e} after the constant offset"
            )));
        }
        max_distance_mismatch = max_distance_mismatch.max(dmis);

        let ra = map_a.criticality_residual(&data_a, pb.t.as_slice());
        let rb = map_b.criticality_residual(&data_b, pa.t.as_slice());
        max_cross_residual = max_cross_residual.max(ra).max(rb);
        if ra > CRITICALITY_TOL || rb > CRITICALITY_TOL {
            return Err(MetricsError::BijectionFailure(format!(
                "cross criticality residual {:.3e}",
                ra.max(rb)
            )));
        }
    }

    // an independently sampled representative instance must agree
    let mut rng_rep = ChaCha8Rng::seed_from_u64(mix_seed(seed, 13));
    let rep_spec = sample_spec(left, n, &mut rng_rep)?;
    let rep = edd(&rep_spec, mix_seed(seed, 17), budget)?;
    if rep.filtered != count {
        return Err(MetricsError::BijectionFailure(format!(
            "representative instance has {} critical points, equivalence gave {count}",
            rep.filtered
        )));
    }

    Ok(EquivalenceReport {
        left: left.tag(),
        right: right.tag(),
        n,
        count,
        offsets,
        max_point_mismatch,
        max_cross_residual,
        max_distance_mismatch,
        representative_count: rep.filtered,
    })
}

// ---------------------------------------------------------------------------
// Dominance of the reduction maps
// ---------------------------------------------------------------------------

/// The anchored families whose reduction to a representative relies on a
/// dominance argument, plus the two plain families whose camera factor
/// already is the reduced form.
pub fn dominance_cases() -> Vec<FamilyClass> {
    [
        "L^{2,2}",
        "L^{X,3,3}",
        "L^{X,3,2}",
        "L^{X,2,2}",
        "L^{P,3,3}",
        "L^{P,3,2}",
        "L^{(P,X),3,3}",
        "L^{(P,X),3,2}",
        "P^{X,3,3}",
        "P^{L,3,3}",
        "P^{3,3}",
    ]
    .iter()
    .map(|t| FamilyClass::parse(t).expect("catalogued tag"))
    .collect()
}

/// Number of real parameters of the anchor operator for a dominance case.
fn anchor_param_count(class: &FamilyClass) -> usize {
    use AnchorKind::*;
    match (class.object_dim, class.source_dim, class.anchor_kind) {
        (_, _, None) => 0,
        (1, 3, Point) | (2, 3, Point) | (1, 3, Plane) => 4,
        (1, 2, Point) => 3,
        (1, 3, PlanePoint) => 10,
        (2, 3, Line) => 8,
        _ => unreachable!("not a dominance case: {class:?}"),
    }
}

/// Covector of the plane with Grassmann coordinates m, as raw vectors.
fn covector_of(m: &DVector<C64>) -> DVector<C64> {
    DVector::from_vec(vec![m[3], -m[2], m[1], -m[0]])
}

/// The linear operator carrying intrinsic anchor parameters into world
/// Grassmann coordinates of the family's objects.
fn anchor_operator(class: &FamilyClass, params: &DVector<C64>) -> DMatrix<C64> {
    use AnchorKind::*;
    assert_eq!(params.len(), anchor_param_count(class));
    match (class.object_dim, class.source_dim, class.anchor_kind) {
        (1, 2, None) => DMatrix::identity(3, 3),
        (2, 3, None) => DMatrix::identity(4, 4),
        // lines through a point: y ↦ X ∧ y
        (1, 3, Point) => exterior_mult_matrix(params, 1, 1, 4),
        (1, 2, Point) => exterior_mult_matrix(params, 1, 1, 3),
        // planes through a point: σ ↦ X ∧ σ
        (2, 3, Point) => exterior_mult_matrix(params, 1, 2, 4),
        // lines inside a plane: τ ↦ ι_w(τ), the trace of a solid on the plane
        (1, 3, Plane) => contraction_matrix(&covector_of(params), 3, 4),
        // lines inside the plane through its marked point: σ ↦ X ∧ ι_w(σ)
        (1, 3, PlanePoint) => {
            let m = params.rows(0, 4).into_owned();
            let sigma0 = params.rows(4, 6).into_owned();
            let w = covector_of(&m);
            let x = contraction_matrix(&w, 2, 4) * sigma0;
            exterior_mult_matrix(&x, 1, 1, 4) * contraction_matrix(&w, 2, 4)
        }
        // planes containing a line: y ↦ (a ∧ b) ∧ y
        (2, 3, Line) => {
            let a = params.rows(0, 4).into_owned();
            let b = params.rows(4, 4).into_owned();
            let l = exterior_mult_matrix(&a, 1, 1, 4) * b;
            exterior_mult_matrix(&l, 2, 1, 4)
        }
        _ => unreachable!("not a dominance case: {class:?}"),
    }
}

#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub tag: String,
    /// Dimension of the representative's camera space, the rank to reach.
    pub target: usize,
    /// Number of Jacobian columns.
    pub params: usize,
    /// Jacobian rank at three independent random points.
    pub ranks: [usize; 3],
    pub full: bool,
}

/// Verify that the reduction of an anchored family onto its representative
/// is dominant: the composite camera factor, as a function of the rotation,
/// camera, anchor, and chart-injection parameters, has surjective
/// differential at three random points.
pub fn dominance_check(class: &FamilyClass, seed: u64) -> Result<DominanceReport, MetricsError> {
    dominance_jacobian(class, seed, false)
}

/// The same Jacobian with the chart injection constrained to rank one;
/// dominance must fail, which certifies the rank test is discriminating.
pub fn dominance_control(class: &FamilyClass, seed: u64) -> Result<DominanceReport, MetricsError> {
    dominance_jacobian(class, seed, true)
}

fn dominance_jacobian(
    class: &FamilyClass,
    seed: u64,
    rank_one: bool,
) -> Result<DominanceReport, MetricsError> {
    if !dominance_cases().contains(class) {
        return Err(MetricsError::InvalidPair(format!(
            "{} has no dominance reduction",
            class.tag()
        )));
    }
    let rep = representative(class).class;
    let p = rep.image_dim + 1;
    let cols = rep.source_dim + 1;
    let target = p * cols;
    let k1 = class.object_dim + 1;
    let cam_rows = class.image_dim + 1;
    let cam_cols = class.source_dim + 1;
    let w_rows = binom(cam_rows, k1);
    let anchor_params = anchor_param_count(class);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 31));
    let mut ranks = [0usize; 3];
    let mut params_total = 0usize;
    for rank in &mut ranks {
        let a0 = linalg::real_mat(&mut rng, p, w_rows);
        let s1 = sample_skew(&mut rng, p);
        let s2 = sample_skew(&mut rng, w_rows);
        let cam = linalg::real_mat(&mut rng, cam_rows, cam_cols);
        let anchor = real_vec(&mut rng, anchor_params);
        let o1 = cayley(&s1)?;
        let o2 = cayley(&s2)?;
        let w = wedge_power(&cam, k1)?;
        let l_op = anchor_operator(class, &anchor);
        let m_in = l_op.ncols();
        let m_full = &o1 * &a0 * &o2 * &w * &l_op;
        if rank_with_tol(&m_full, 1e-8) != p {
            return Err(MetricsError::BijectionFailure(format!(
                "composite factor of {} does not span the representative image",
                class.tag()
            )));
        }

        let (h_mat, h_a, h_b) = if rank_one {
            let a = real_vec(&mut rng, m_in);
            let b = real_vec(&mut rng, cols);
            let h = &a * b.transpose();
            (h, Some(a), Some(b))
        } else {
            (linalg::real_mat(&mut rng, m_in, cols), Option::None, Option::None)
        };

        let head2 = &o1 * &a0;
        let head3 = &head2 * &o2;
        let head4 = &head3 * &w;
        let tail3 = &l_op * &h_mat;
        let tail2 = &w * &tail3;
        let tail1 = &a0 * &o2 * &tail2;

        let mut columns: Vec<DVector<C64>> = Vec::new();
        for idx in 0..p * (p - 1) / 2 {
            let ds = skew_basis_direction(p, idx);
            let d_o1 = cayley_differential(&s1, &ds)?;
            columns.push(flatten(&(&d_o1 * &tail1)));
        }
        for idx in 0..w_rows * (w_rows - 1) / 2 {
            let ds = skew_basis_direction(w_rows, idx);
            let d_o2 = cayley_differential(&s2, &ds)?;
            columns.push(flatten(&(&head2 * &d_o2 * &tail2)));
        }
        for r in 0..cam_rows {
            for c in 0..cam_cols {
                let dw = wedge_power_entry_derivative(&cam, k1, r, c);
                columns.push(flatten(&(&head3 * &dw * &tail3)));
            }
        }
        for j in 0..anchor_params {
            let dl = anchor_stencil(class, &anchor, j);
            columns.push(flatten(&(&head4 * &dl * &h_mat)));
        }
        match (&h_a, &h_b) {
            (Some(a), Some(b)) => {
                for j in 0..m_in {
                    let col = m_full.column(j).into_owned();
                    columns.push(flatten(&(&col * b.transpose())));
                }
                let ma = &m_full * a;
                for j in 0..cols {
                    let mut e = DMatrix::zeros(p, cols);
                    e.set_column(j, &ma);
                    columns.push(flatten(&e));
                }
            }
            _ => {
                for a in 0..m_in {
                    let col = m_full.column(a).into_owned();
                    for b in 0..cols {
                        let mut e = DMatrix::zeros(p, cols);
                        e.set_column(b, &col);
                        columns.push(flatten(&e));
                    }
                }
            }
        }
        params_total = columns.len();
        let jac = DMatrix::from_columns(&columns);
        *rank = rank_with_tol(&jac, 1e-6);
    }
    let full = ranks.iter().all(|&r| r == target);
    Ok(DominanceReport { tag: class.tag(), target, params: params_total, ranks, full })
}

/// Derivative of the anchor operator in one parameter by a four-point
/// Richardson stencil, exact for the polynomial entries of degree ≤ 4.
fn anchor_stencil(class: &FamilyClass, params: &DVector<C64>, j: usize) -> DMatrix<C64> {
    let h = 0.25;
    let at = |delta: f64| {
        let mut q = params.clone();
        q[j] += cr(delta);
        anchor_operator(class, &q)
    };
    (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * cr(8.0)) / cr(12.0 * h)
}

fn flatten(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

// ---------------------------------------------------------------------------
// Singular point of the line-anchored line families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SingularPointReport {
    pub tag: String,
    /// Jacobian rank of the local equations at the anchor point.
    pub rank_at_anchor: usize,
    /// Smallest and largest Jacobian rank over the smooth sample points.
    pub smooth_rank_range: (usize, usize),
    /// Largest relative residual of the defining equations on the samples.
    pub max_residual: f64,
    pub smooth_samples: usize,
    pub ok: bool,
}

/// Check that the anchor line's Plücker point is the unique rank-drop of
/// the local equations X5 = 0, X1·X4 − X2·X3 = 0 in a frame where the
/// anchor is the first coordinate line: rank 1 at the anchor, rank 2 at
/// twenty transported smooth points.
pub fn singular_point_check(spec: &FamilySpec) -> Result<SingularPointReport, MetricsError> {
    let class = spec.class();
    let tag = class.tag();
    assert!(
        (tag == "L^{L,3,3}" || tag == "L^{L,3,2}") && spec.n >= 2,
        "singular point check applies to the line-anchored line families with n ≥ 2"
    );
    let line = match &spec.anchor {
        SchubertAnchor::Line(l) => l,
        _ => unreachable!("checked by the tag"),
    };
    let (a, b) = points_on_line(line.coords())?;

    // complete the anchor span to a projective frame and transport the
    // Plücker coordinates into it
    let mut rng = ChaCha8Rng::seed_from_u64(0x51C7);
    let frame = loop {
        let mut m = DMatrix::zeros(4, 4);
        m.set_column(0, &a);
        m.set_column(1, &b);
        m.set_column(2, &real_vec(&mut rng, 4));
        m.set_column(3, &real_vec(&mut rng, 4));
        if linalg::rank(&m) == 4 {
            break m;
        }
    };
    let t = wedge_power(&frame, 2)?;
    let anchor_in_frame = t.column(0).into_owned();
    debug_assert!(proj_dist(&anchor_in_frame, line.coords()) < 1e-8);
    let t_inv = linalg::inverse(&t)
        .ok_or_else(|| MetricsError::BijectionFailure("frame wedge is singular".into()))?;

    let grads = |q: &DVector<C64>| -> DMatrix<C64> {
        let mut m = DMatrix::zeros(2, 6);
        m[(0, 5)] = cr(1.0);
        m[(1, 1)] = q[4];
        m[(1, 2)] = -q[3];
        m[(1, 3)] = -q[2];
        m[(1, 4)] = q[1];
        m
    };

    let q_anchor = normalize_max(&(&t_inv * line.coords()));
    let rank_at_anchor = rank_with_tol(&grads(&q_anchor), 1e-6);

    let mut max_residual = 0.0f64;
    let mut rank_lo = usize::MAX;
    let mut rank_hi = 0usize;
    let smooth_samples = 20usize;
    let mut done = 0usize;
    while done < smooth_samples {
        let alpha = cr(rng.gen_range(-1.0..1.0));
        let beta = cr(rng.gen_range(-1.0..1.0));
        let on_line = &a * alpha + &b * beta;
        let z = real_vec(&mut rng, 4);
        let p1 = match HomogeneousPoint::new(on_line) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let p2 = HomogeneousPoint::new(z).expect("nonzero sample");
        let x = match plucker_embed(&[p1, p2]) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let q = normalize_max(&(&t_inv * x.coords()));
        let f1 = q[5].norm();
        let f2 = (q[1] * q[4] - q[2] * q[3]).norm();
        max_residual = max_residual.max(f1).max(f2);
        let r = rank_with_tol(&grads(&q), 1e-6);
        rank_lo = rank_lo.min(r);
        rank_hi = rank_hi.max(r);
        done += 1;
    }
    let ok = rank_at_anchor == 1 && rank_lo == 2 && rank_hi == 2 && max_residual < 1e-8;
    Ok(SingularPointReport {
        tag,
        rank_at_anchor,
        smooth_rank_range: (rank_lo, rank_hi),
        max_residual,
        smooth_samples,
        ok,
    })
}

fn normalize_max(v: &DVector<C64>) -> DVector<C64> {
    let m = v.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    v / cr(m)
}

// ---------------------------------------------------------------------------
// Leading-coefficient pattern
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LeadingPattern {
    pub tag: String,
    pub kind: ClaimKind,
    /// Degree of the EDD polynomial, which is the family dimension.
    pub d: usize,
    /// Multidegree at the all-ones profile.
    pub d_one: usize,
    /// 3^d / d! · d_one as a reduced fraction.
    pub predicted: (i64, i64),
    /// The formula's leading coefficient as a reduced fraction.
    pub formula: (i64, i64),
    pub matches: bool,
}

/// Compare the formula's leading coefficient with the predicted top term
/// 3^d / d! · D(1,…,1).
pub fn leading_coefficient_pattern(tag: &str) -> Result<LeadingPattern, MetricsError> {
    let claim =
        claims::edd_claim(tag).ok_or_else(|| MetricsError::UnknownClaim(tag.to_string()))?;
    let d_one =
        claims::d_one(tag).ok_or_else(|| MetricsError::UnknownClaim(tag.to_string()))?;
    let d = claim.degree();
    let factorial: i64 = (1..=d as i64).product();
    let predicted = reduce(3i64.pow(d as u32) * d_one as i64, factorial);
    let formula = claim.leading();
    Ok(LeadingPattern {
        tag: tag.to_string(),
        kind: claim.kind,
        d,
        d_one,
        predicted,
        formula,
        matches: predicted == formula,
    })
}

fn reduce(num: i64, den: i64) -> (i64, i64) {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let g = gcd(num, den).max(1);
    let sign = if den < 0 { -1 } else { 1 };
    (sign * num / g, sign * den / g)
}
