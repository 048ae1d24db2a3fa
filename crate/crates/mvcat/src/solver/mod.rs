//! Numerical solution of square polynomial systems by total-degree
//! homotopy continuation: roots-of-unity start system, tracking on a
//! random affine patch of projective space so endpoints at infinity stay
//! finite, Euler prediction with a Newton corrector, adaptive steps with a
//! geometric endgame, and endpoint classification by residual and
//! Jacobian condition.
//!
//! Every start path is accounted for: the regular, singular, diverged,
//! and failed counts always sum to the Bézout number, and runs are
//! deterministic for a fixed seed.

pub mod resultant;
pub mod roots;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, cr};
use crate::polysys::{CompiledSystem, PolySystem, PowerTable};
use crate::C64;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("system is not square: {equations} equations in {variables} variables")]
    NotSquare { equations: usize, variables: usize },
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("the two polynomials share a common factor")]
    CommonFactor,
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// Tracking parameters. The defaults are tuned for the desk-scale systems
/// in this crate.
#[derive(Debug, Clone)]
pub struct TrackConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tol: f64,
    pub max_corrector_iters: usize,
    pub divergence_threshold: f64,
    /// Distance from s = 1 inside which the step is capped at half the
    /// remaining arc, so singular endpoints are approached geometrically.
    pub endgame_radius: f64,
    pub cond_threshold: f64,
    pub dedup_tol: f64,
    pub seed: u64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-7,
            max_step: 0.1,
            corrector_tol: 1e-10,
            max_corrector_iters: 3,
            divergence_threshold: 1e8,
            endgame_radius: 1e-2,
            cond_threshold: 1e8,
            dedup_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathClass {
    Regular,
    Singular,
    DivergedToInfinity,
    TrackingFailed,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub start_index: usize,
    pub class: PathClass,
    pub point: Option<DVector<C64>>,
    pub condition: f64,
    pub residual: f64,
    pub steps: usize,
    pub retried: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub bezout: usize,
    pub regular: usize,
    pub singular: usize,
    pub at_infinity: usize,
    pub failed: usize,
    /// Distinct finite endpoints (regular and singular), in first-path order.
    pub solutions: Vec<DVector<C64>>,
    /// Distinct endpoints of regular paths only.
    pub regular_solutions: Vec<DVector<C64>>,
    pub paths: Vec<PathResult>,
}

impl SolveReport {
    pub fn counts_are_consistent(&self) -> bool {
        self.regular + self.singular + self.at_infinity + self.failed == self.bezout
    }
}

/// Homogenization of an affine polynomial: a fresh first variable absorbs
/// the degree gap of every term.
fn homogenize(p: &crate::polysys::MultiPoly) -> crate::polysys::MultiPoly {
    let d = p.total_degree() as u32;
    let mut out = crate::polysys::MultiPoly::zero(p.num_vars + 1);
    for (exps, &c) in &p.terms {
        let total: u32 = exps.iter().sum();
        let mut e = Vec::with_capacity(exps.len() + 1);
        e.push(d - total);
        e.extend_from_slice(exps);
        out.add_term(e, c);
    }
    out
}

/// The patched homogeneous homotopy. Paths live on the affine patch
/// `patch · z = 1` of projective space, so solutions at infinity are
/// ordinary patch points with a vanishing first coordinate instead of
/// slowly escaping iterates the tracker has to chase.
struct ProjHomotopy<'a> {
    /// Homogenized target: nv polynomials in nv + 1 variables.
    compiled: &'a CompiledSystem,
    degrees: Vec<usize>,
    gamma: C64,
    patch: Vec<C64>,
    nv: usize,
}

impl<'a> ProjHomotopy<'a> {
    /// Rows 0..nv: (1−s)·γ·G + s·F with G_i = z_{i+1}^{d_i} − z_0^{d_i};
    /// row nv: patch · z − 1.
    fn eval(&self, z: &[C64], s: f64, table: &mut PowerTable, fbuf: &mut [C64], out: &mut [C64]) {
        self.compiled.eval_into(z, table, fbuf);
        for i in 0..self.nv {
            let d = self.degrees[i] as u32;
            let g = z[i + 1].powu(d) - z[0].powu(d);
            out[i] = cr(1.0 - s) * self.gamma * g + cr(s) * fbuf[i];
        }
        let mut p = -cr(1.0);
        for (c, zz) in self.patch.iter().zip(z) {
            p += c * zz;
        }
        out[self.nv] = p;
    }

    fn jacobian(
        &self,
        z: &[C64],
        s: f64,
        table: &mut PowerTable,
        jbuf: &mut DMatrix<C64>,
        out: &mut DMatrix<C64>,
    ) {
        self.compiled.jacobian_into(z, table, jbuf);
        let nh = self.nv + 1;
        for i in 0..self.nv {
            for j in 0..nh {
                out[(i, j)] = cr(s) * jbuf[(i, j)];
            }
            let d = self.degrees[i] as u32;
            let dd = cr(d as f64);
            out[(i, 0)] -= cr(1.0 - s) * self.gamma * dd * z[0].powu(d.saturating_sub(1));
            out[(i, i + 1)] += cr(1.0 - s) * self.gamma * dd * z[i + 1].powu(d.saturating_sub(1));
        }
        for j in 0..nh {
            out[(self.nv, j)] = self.patch[j];
        }
    }

    /// ∂H/∂s = F(z) − γ·G(z) on the system rows, zero on the patch row.
    fn ds(&self, z: &[C64], table: &mut PowerTable, fbuf: &mut [C64], out: &mut DVector<C64>) {
        self.compiled.eval_into(z, table, fbuf);
        for i in 0..self.nv {
            let d = self.degrees[i] as u32;
            let g = z[i + 1].powu(d) - z[0].powu(d);
            out[i] = fbuf[i] - self.gamma * g;
        }
        out[self.nv] = cr(0.0);
    }
}

/// The k-th start solution of the start system, in mixed-radix order over
/// the per-variable degrees: z ∝ (1, ζ_1, …, ζ_n) scaled onto the patch.
fn start_point(degrees: &[usize], mut index: usize, patch: &[C64]) -> Vec<C64> {
    let mut z: Vec<C64> = Vec::with_capacity(degrees.len() + 1);
    z.push(cr(1.0));
    for &d in degrees {
        let r = index % d;
        index /= d;
        let theta = 2.0 * std::f64::consts::PI * (r as f64) / (d as f64);
        z.push(C64::new(theta.cos(), theta.sin()));
    }
    let mut dot = cr(0.0);
    for (c, zz) in patch.iter().zip(&z) {
        dot += c * zz;
    }
    for zz in &mut z {
        *zz /= dot;
    }
    z
}

/// A patch covector that provably cannot vanish on any start point: the
/// plain z_0 chart plus a random perturbation small enough to keep every
/// `patch · (1, ζ)` away from zero, yet generic enough to miss the target
/// solutions.
fn draw_patch(rng: &mut ChaCha8Rng, nh: usize) -> Vec<C64> {
    let delta: Vec<C64> = (0..nh)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = delta.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-9);
    // the perturbation has norm 0.1/√nh, so its pairing with any start
    // representative (1, ζ_1, …, ζ_n) of unit coordinates stays below 0.1
    let scale = 0.1 / (norm * (nh as f64).sqrt());
    let mut patch: Vec<C64> = delta.into_iter().map(|d| d * cr(scale)).collect();
    patch[0] += cr(1.0);
    patch
}

enum TrackOutcome {
    Landed(Vec<C64>, usize),
    /// The step size collapsed inside the endgame region at the recorded
    /// arc position; the point is handed to endpoint classification, which
    /// must treat it as approximate.
    Truncated(Vec<C64>, f64, usize),
    Diverged(usize),
    Failed(usize),
}

fn track_path(h: &ProjHomotopy, start: &[C64], config: &TrackConfig) -> TrackOutcome {
    let nv = h.nv;
    let nh = nv + 1;
    let mut z: Vec<C64> = start.to_vec();
    let mut s = 0.0f64;
    let mut step = config.initial_step;
    let mut steps_taken = 0usize;

    let mut table = h.compiled.power_table();
    let mut fbuf = vec![C64::new(0.0, 0.0); nv];
    let mut jbuf = DMatrix::zeros(nv, nh);
    let mut jac = DMatrix::zeros(nh, nh);
    let mut rhs = DVector::zeros(nh);
    let mut hval = vec![C64::new(0.0, 0.0); nh];

    while s < 1.0 {
        steps_taken += 1;
        if steps_taken > 50_000 {
            return stall_outcome(s, &z, steps_taken, config);
        }
        let remaining = 1.0 - s;
        let mut ds = step.min(remaining);
        if remaining < config.endgame_radius && ds >= remaining {
            // approach geometrically; snap once the gap is negligible
            if remaining > 1e-10 {
                ds = remaining / 2.0;
            }
        }

        // Euler predictor: z' = z − ds · J⁻¹ ∂H/∂s
        h.jacobian(&z, s, &mut table, &mut jbuf, &mut jac);
        h.ds(&z, &mut table, &mut fbuf, &mut rhs);
        let lu = jac.clone().lu();
        let dz = match lu.solve(&rhs) {
            Some(v) => v,
            None => {
                if !halve(&mut step, config) {
                    return stall_outcome(s, &z, steps_taken, config);
                }
                continue;
            }
        };
        let s_next = s + ds;
        let mut zn: Vec<C64> = (0..nh).map(|i| z[i] - dz[i] * cr(ds)).collect();

        // Newton corrector at s_next
        let mut converged = false;
        let mut iters_used = 0usize;
        for it in 0..config.max_corrector_iters {
            h.eval(&zn, s_next, &mut table, &mut fbuf, &mut hval);
            h.jacobian(&zn, s_next, &mut table, &mut jbuf, &mut jac);
            let lu = jac.clone().lu();
            let delta = match lu.solve(&DVector::from_row_slice(&hval)) {
                Some(v) => v,
                None => break,
            };
            let mut norm2 = 0.0;
            let mut znorm2 = 0.0;
            for i in 0..nh {
                zn[i] -= delta[i];
                norm2 += delta[i].norm_sqr();
                znorm2 += zn[i].norm_sqr();
            }
            if norm2.sqrt() <= config.corrector_tol * znorm2.sqrt().max(1.0) {
                converged = true;
                iters_used = it + 1;
                break;
            }
        }
        if !converged {
            if !halve(&mut step, config) {
                return stall_outcome(s, &z, steps_taken, config);
            }
            continue;
        }

        z = zn;
        s = s_next;
        // on the patch the only way to blow up is a path heading for the
        // patch's own hyperplane at infinity, which is a degenerate draw
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > config.divergence_threshold {
            return TrackOutcome::Diverged(steps_taken);
        }
        if 1.0 - s <= 1e-10 {
            s = 1.0;
        }
        // grow only after an easy correction, so tight passages keep the
        // step small and paths cannot hop onto a neighbour
        if 1.0 - s > config.endgame_radius && iters_used <= 2 {
            step = (step * 1.5).min(config.max_step);
        }
    }
    TrackOutcome::Landed(z, steps_taken)
}

fn halve(step: &mut f64, config: &TrackConfig) -> bool {
    *step /= 2.0;
    *step >= config.min_step
}

/// The step collapsed at arc position s. Inside the endgame region this is
/// the expected behaviour at a singular or ill-conditioned endpoint, so the
/// point is handed over as a truncated approximation; anything earlier is
/// a genuine failure.
fn stall_outcome(s: f64, z: &[C64], steps: usize, config: &TrackConfig) -> TrackOutcome {
    if 1.0 - s <= config.endgame_radius {
        TrackOutcome::Truncated(z.to_vec(), s, steps)
    } else {
        TrackOutcome::Failed(steps)
    }
}

/// Relative residual scale of a system at a point: the coefficient scale
/// times the point magnitude raised to each degree.
fn residual_scale(system: &PolySystem, x: &[C64]) -> f64 {
    let xnorm = x.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1.0);
    system
        .polys
        .iter()
        .map(|p| p.max_coeff() * xnorm.powi(p.total_degree() as i32))
        .fold(0.0, f64::max)
        .max(1e-300)
}

/// Natural magnitude of the Jacobian at a point, used to judge how small
/// its least singular value is. Using σmax instead would declare a 1×1
/// Jacobian perfectly conditioned no matter how close to zero it is.
fn jacobian_scale(system: &PolySystem, x: &[C64]) -> f64 {
    let xnorm = x.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1.0);
    system
        .polys
        .iter()
        .filter(|p| p.total_degree() > 0)
        .map(|p| {
            let d = p.total_degree();
            (d as f64) * p.max_coeff() * xnorm.powi((d - 1) as i32)
        })
        .fold(0.0, f64::max)
        .max(1e-300)
}

struct EndpointVerdict {
    class: PathClass,
    point: Option<DVector<C64>>,
    condition: f64,
    residual: f64,
}

/// The patched homogeneous target system used for endpoint refinement.
struct ProjTarget<'a> {
    compiled: &'a CompiledSystem,
    patch: &'a [C64],
    nv: usize,
}

impl<'a> ProjTarget<'a> {
    /// Newton on [F_homog; patch · z − 1] from z, in place. Solutions at
    /// infinity are ordinary zeros of this square system, so the iteration
    /// settles onto them instead of chasing escaping affine iterates.
    fn refine(&self, z: &mut Vec<C64>) {
        let nv = self.nv;
        let nh = nv + 1;
        let mut table = self.compiled.power_table();
        let mut fbuf = vec![C64::new(0.0, 0.0); nv];
        let mut jbuf = DMatrix::zeros(nv, nh);
        let mut jac = DMatrix::zeros(nh, nh);
        let mut rhs = DVector::zeros(nh);
        for _ in 0..30 {
            self.compiled.eval_into(z, &mut table, &mut fbuf);
            self.compiled.jacobian_into(z, &mut table, &mut jbuf);
            for i in 0..nv {
                rhs[i] = fbuf[i];
                for j in 0..nh {
                    jac[(i, j)] = jbuf[(i, j)];
                }
            }
            rhs[nv] = -cr(1.0);
            for j in 0..nh {
                jac[(nv, j)] = self.patch[j];
                rhs[nv] += self.patch[j] * z[j];
            }
            let lu = jac.clone().lu();
            let delta = match lu.solve(&rhs) {
                Some(v) => v,
                Option::None => break,
            };
            let mut step2 = 0.0;
            let mut znorm2 = 0.0;
            for i in 0..nh {
                z[i] -= delta[i];
                step2 += delta[i].norm_sqr();
                znorm2 += z[i].norm_sqr();
            }
            if step2.sqrt() <= 1e-14 * znorm2.sqrt().max(1.0) {
                break;
            }
        }
    }
}

fn classify_endpoint(
    system: &PolySystem,
    compiled: &CompiledSystem,
    proj: &ProjTarget,
    z_end: &[C64],
    truncated_at: Option<f64>,
    config: &TrackConfig,
) -> EndpointVerdict {
    let nv = system.num_vars;

    // settle the projective representative first, then split on the
    // dehomogenizing coordinate
    let mut z = z_end.to_vec();
    proj.refine(&mut z);
    let znorm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let infinite = EndpointVerdict {
        class: PathClass::DivergedToInfinity,
        point: None,
        condition: f64::INFINITY,
        residual: f64::INFINITY,
    };
    if !znorm.is_finite() || z[0].norm() <= 1e-12 * znorm {
        return infinite;
    }
    let mut x: Vec<C64> = (1..=nv).map(|i| z[i] / z[0]).collect();
    let xnorm0 = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if xnorm0 > 0.01 * config.divergence_threshold {
        return infinite;
    }

    // Newton refinement on the affine target system
    let mut table = compiled.power_table();
    let mut fbuf = vec![C64::new(0.0, 0.0); nv];
    let mut jac = DMatrix::zeros(nv, nv);
    for _ in 0..30 {
        compiled.eval_into(&x, &mut table, &mut fbuf);
        compiled.jacobian_into(&x, &mut table, &mut jac);
        let lu = jac.clone().lu();
        let delta = match lu.solve(&DVector::from_row_slice(&fbuf)) {
            Some(v) => v,
            Option::None => break,
        };
        let mut step2 = 0.0;
        for i in 0..nv {
            x[i] -= delta[i];
            step2 += delta[i].norm_sqr();
        }
        let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > config.divergence_threshold {
            return infinite;
        }
        if step2.sqrt() <= 1e-14 * norm.max(1.0) {
            break;
        }
    }

    compiled.eval_into(&x, &mut table, &mut fbuf);
    let resid = fbuf.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let rel = resid / residual_scale(system, &x);
    compiled.jacobian_into(&x, &mut table, &mut jac);
    let svs = linalg::singular_values(&jac);
    let condition = match svs.last() {
        Some(&smin) if smin > 0.0 => jacobian_scale(system, &x) / smin,
        _ => f64::INFINITY,
    };
    let point = DVector::from_row_slice(&x);

    if rel <= 1e-8 {
        let class = if condition > config.cond_threshold {
            PathClass::Singular
        } else {
            PathClass::Regular
        };
        EndpointVerdict { class, point: Some(point), condition, residual: rel }
    } else if condition > 1e6 && rel <= if truncated_at.is_some() { 1e-4 } else { 1e-5 } {
        // singular roots limit the attainable Newton accuracy, more so when
        // the tracker already had to stop short of the endpoint
        EndpointVerdict {
            class: PathClass::Singular,
            point: Some(point),
            condition,
            residual: rel,
        }
    } else {
        EndpointVerdict {
            class: PathClass::TrackingFailed,
            point: None,
            condition,
            residual: rel,
        }
    }
}

/// The same tracking parameters with every step bound divided by f, for
/// retries that must creep through tight passages.
fn tighter(config: &TrackConfig, f: f64) -> TrackConfig {
    TrackConfig {
        initial_step: config.initial_step / f,
        max_step: config.max_step / f,
        min_step: (config.min_step / f).max(1e-13),
        ..config.clone()
    }
}

/// Track every start path under one gamma and patch. Paths that fail
/// outright are retried once with the same homotopy and ten times smaller
/// steps, so the endpoint permutation of the round stays coherent.
fn run_round(
    system: &PolySystem,
    compiled: &CompiledSystem,
    homog: &CompiledSystem,
    degrees: &[usize],
    bezout: usize,
    gamma: C64,
    patch: &[C64],
    config: &TrackConfig,
) -> Vec<PathResult> {
    let proj = ProjTarget { compiled: homog, patch, nv: system.num_vars };
    (0..bezout)
        .into_par_iter()
        .map(|idx| {
            let start = start_point(degrees, idx, patch);
            let homotopy = ProjHomotopy {
                compiled: homog,
                degrees: degrees.to_vec(),
                gamma,
                patch: patch.to_vec(),
                nv: system.num_vars,
            };
            let mut retried = false;
            let mut outcome = track_path(&homotopy, &start, config);
            if matches!(outcome, TrackOutcome::Failed(_)) {
                retried = true;
                outcome = track_path(&homotopy, &start, &tighter(config, 10.0));
            }
            match outcome {
                TrackOutcome::Landed(z, steps) => {
                    let verdict =
                        classify_endpoint(system, compiled, &proj, &z, Option::None, config);
                    PathResult {
                        start_index: idx,
                        class: verdict.class,
                        point: verdict.point,
                        condition: verdict.condition,
                        residual: verdict.residual,
                        steps,
                        retried,
                    }
                }
                TrackOutcome::Truncated(z, s, steps) => {
                    let verdict = classify_endpoint(system, compiled, &proj, &z, Some(s), config);
                    PathResult {
                        start_index: idx,
                        class: verdict.class,
                        point: verdict.point,
                        condition: verdict.condition,
                        residual: verdict.residual,
                        steps,
                        retried,
                    }
                }
                TrackOutcome::Diverged(steps) => PathResult {
                    start_index: idx,
                    class: PathClass::DivergedToInfinity,
                    point: None,
                    condition: f64::INFINITY,
                    residual: f64::INFINITY,
                    steps,
                    retried,
                },
                TrackOutcome::Failed(steps) => PathResult {
                    start_index: idx,
                    class: PathClass::TrackingFailed,
                    point: None,
                    condition: f64::INFINITY,
                    residual: f64::INFINITY,
                    steps,
                    retried,
                },
            }
        })
        .collect()
}

/// Two regular paths of the same homotopy cannot share an endpoint, so a
/// collision among them means at least one hopped onto a neighbouring path.
fn has_regular_collision(paths: &[PathResult], tol: f64) -> bool {
    for a in 0..paths.len() {
        if paths[a].class != PathClass::Regular {
            continue;
        }
        let Some(pa) = &paths[a].point else { continue };
        for b in (a + 1)..paths.len() {
            if paths[b].class != PathClass::Regular {
                continue;
            }
            let Some(pb) = &paths[b].point else { continue };
            if close(pa, pb, tol) {
                return true;
            }
        }
    }
    false
}

/// Track all Bézout start paths of the total-degree homotopy to the target
/// system. Failed paths are retried with smaller steps, and a round whose
/// regular paths collide is rerun wholesale with a fresh gamma and tighter
/// stepping before any endpoint is trusted.
pub fn solve(system: &PolySystem, config: &TrackConfig) -> Result<SolveReport, SolverError> {
    if !system.is_square() {
        return Err(SolverError::NotSquare {
            equations: system.polys.len(),
            variables: system.num_vars,
        });
    }
    for p in &system.polys {
        if p.is_zero() {
            return Err(SolverError::ZeroPolynomial);
        }
        if p.total_degree() == 0 {
            return Err(SolverError::Degenerate(
                "system contains a nonzero constant equation".into(),
            ));
        }
    }
    let degrees = system.degrees();
    let bezout = system.bezout_number();
    let compiled = system.compiled();
    let nh = system.num_vars + 1;
    let homog_system = PolySystem::new(nh, system.polys.iter().map(homogenize).collect());
    let homog = homog_system.compiled();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw_gamma = |rng: &mut ChaCha8Rng| -> C64 {
        let theta: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
        C64::new(theta.cos(), theta.sin())
    };
    let mut rounds = Vec::with_capacity(3);
    for f in [1.0, 10.0, 100.0] {
        let gamma = draw_gamma(&mut rng);
        let patch = draw_patch(&mut rng, nh);
        rounds.push((gamma, patch, tighter(config, f)));
    }

    let mut paths = run_round(
        system, &compiled, &homog, &degrees, bezout, rounds[0].0, &rounds[0].1, &rounds[0].2,
    );
    for (gamma, patch, round_config) in &rounds[1..] {
        if !has_regular_collision(&paths, config.dedup_tol) {
            break;
        }
        paths = run_round(
            system, &compiled, &homog, &degrees, bezout, *gamma, patch, round_config,
        );
    }

    // collisions that survive the reruns are treated as multiplicity: the
    // Jacobian condition alone can miss it right at the threshold
    let mut shared = vec![false; paths.len()];
    for a in 0..paths.len() {
        let Some(pa) = &paths[a].point else { continue };
        for b in (a + 1)..paths.len() {
            let Some(pb) = &paths[b].point else { continue };
            if close(pa, pb, config.dedup_tol) {
                shared[a] = true;
                shared[b] = true;
            }
        }
    }
    for (p, &m) in paths.iter_mut().zip(&shared) {
        if m && p.class == PathClass::Regular {
            p.class = PathClass::Singular;
        }
    }

    let mut regular = 0;
    let mut singular = 0;
    let mut at_infinity = 0;
    let mut failed = 0;
    for p in &paths {
        match p.class {
            PathClass::Regular => regular += 1,
            PathClass::Singular => singular += 1,
            PathClass::DivergedToInfinity => at_infinity += 1,
            PathClass::TrackingFailed => failed += 1,
        }
    }

    let mut solutions: Vec<DVector<C64>> = Vec::new();
    let mut regular_solutions: Vec<DVector<C64>> = Vec::new();
    for p in &paths {
        if let Some(pt) = &p.point {
            if !solutions.iter().any(|s| close(s, pt, config.dedup_tol)) {
                solutions.push(pt.clone());
            }
            if p.class == PathClass::Regular
                && !regular_solutions.iter().any(|s| close(s, pt, config.dedup_tol))
            {
                regular_solutions.push(pt.clone());
            }
        }
    }

    Ok(SolveReport {
        bezout,
        regular,
        singular,
        at_infinity,
        failed,
        solutions,
        regular_solutions,
        paths,
    })
}

fn close(a: &DVector<C64>, b: &DVector<C64>, tol: f64) -> bool {
    let scale = a.norm().max(1.0);
    (a - b).norm() <= tol * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::MultiPoly;

    fn poly(nv: usize, terms: &[(&[u32], f64)]) -> MultiPoly {
        let mut p = MultiPoly::zero(nv);
        for (e, c) in terms {
            p.add_term(e.to_vec(), cr(*c));
        }
        p
    }

    #[test]
    fn diag_tmp() {
        use crate::catalogue::{sample_spec, FamilyClass};
        use rand::SeedableRng;
        let class = FamilyClass::parse("M^{2,1}").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = sample_spec(&class, 2, &mut rng).unwrap();
        let prob = crate::metrics::ed_problem(&spec, 300, 50_000).unwrap();
        let system = &prob.system;
        let config = TrackConfig::default();

        let degrees = system.degrees();
        let bezout = system.bezout_number();
        let nh = system.num_vars + 1;
        let homog_system = PolySystem::new(nh, system.polys.iter().map(homogenize).collect());
        let homog = homog_system.compiled();
        let mut prng = ChaCha8Rng::seed_from_u64(config.seed);
        let theta: f64 = prng.gen_range(0.0..(2.0 * std::f64::consts::PI));
        let gamma = C64::new(theta.cos(), theta.sin());
        let patch = draw_patch(&mut prng, nh);
        println!("degrees {degrees:?} bezout {bezout}");

        let homotopy = ProjHomotopy {
            compiled: &homog,
            degrees: degrees.to_vec(),
            gamma,
            patch: patch.clone(),
            nv: system.num_vars,
        };
        let mut counts = std::collections::BTreeMap::<String, usize>::new();
        for idx in 0..bezout {
            let start = start_point(&degrees, idx, &patch);
            let outcome = track_path(&homotopy, &start, &config);
            let tag = match &outcome {
                TrackOutcome::Landed(z, steps) => {
                    let znorm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    format!(
                        "landed z0ratio {:.1e} steps {steps}",
                        (z[0].norm() / znorm * 1e12).round() / 1e12
                    )
                }
                TrackOutcome::Truncated(z, s, steps) => {
                    let znorm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    format!(
                        "truncated s {:.6} z0ratio {:.1e} steps {steps}",
                        s,
                        z[0].norm() / znorm
                    )
                }
                TrackOutcome::Diverged(steps) => format!("diverged steps {steps}"),
                TrackOutcome::Failed(steps) => format!("failed steps {steps}"),
            };
            *counts.entry(tag).or_default() += 1;
        }
        for (tag, count) in &counts {
            println!("{count:3} x {tag}");
        }
    }

    #[test]
    fn circle_and_line_intersect_twice() {
        let f = poly(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0), (&[0, 0], -1.0)]);
        let g = poly(2, &[(&[1, 0], 1.0), (&[0, 1], -1.0)]);
        let system = PolySystem::new(2, vec![f, g]);
        let report = solve(&system, &TrackConfig::default()).unwrap();
        assert_eq!(report.bezout, 2);
        assert_eq!(report.regular, 2);
        assert!(report.counts_are_consistent());
        assert_eq!(report.solutions.len(), 2);
        let target = 1.0 / 2.0f64.sqrt();
        for s in &report.solutions {
            assert!((s[0] - s[1]).norm() < 1e-9);
            assert!((s[0].norm() - target).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_and_axis() {
        let f = poly(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0), (&[0, 0], -1.0)]);
        let g = poly(2, &[(&[0, 1], 1.0)]);
        let system = PolySystem::new(2, vec![f, g]);
        let report = solve(&system, &TrackConfig::default()).unwrap();
        assert_eq!(report.regular, 2);
        assert_eq!(report.solutions.len(), 2);
        for s in &report.solutions {
            assert!(s[1].norm() < 1e-10);
            assert!((s[0].norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hyperbola_and_diagonal() {
        let f = poly(2, &[(&[1, 1], 1.0), (&[0, 0], -1.0)]);
        let g = poly(2, &[(&[1, 0], 1.0), (&[0, 1], -1.0)]);
        let system = PolySystem::new(2, vec![f, g]);
        let report = solve(&system, &TrackConfig::default()).unwrap();
        assert_eq!(report.regular, 2);
        for s in &report.solutions {
            assert!((s[0] * s[1] - cr(1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn paths_to_infinity_are_counted() {
        // xy = 1 with x = 2: Bézout 2, one finite solution, one diverges
        let f = poly(2, &[(&[1, 1], 1.0), (&[0, 0], -1.0)]);
        let g = poly(2, &[(&[1, 0], 1.0), (&[0, 0], -2.0)]);
        let system = PolySystem::new(2, vec![f, g]);
        let report = solve(&system, &TrackConfig::default()).unwrap();
        assert_eq!(report.bezout, 2);
        assert_eq!(report.regular, 1);
        assert_eq!(report.at_infinity, 1);
        assert!(report.counts_are_consistent());
        let s = &report.solutions[0];
        assert!((s[0] - cr(2.0)).norm() < 1e-10);
        assert!((s[1] - cr(0.5)).norm() < 1e-10);
    }

    #[test]
    fn double_root_is_singular() {
        // (x−1)² = 0: both paths land on the same singular point
        let f = poly(1, &[(&[2], 1.0), (&[1], -2.0), (&[0], 1.0)]);
        let system = PolySystem::new(1, vec![f]);
        let report = solve(&system, &TrackConfig::default()).unwrap();
        assert_eq!(report.bezout, 2);
        assert_eq!(report.singular, 2);
        assert_eq!(report.solutions.len(), 1);
        assert!((report.solutions[0][0] - cr(1.0)).norm() < 1e-5);
    }

    #[test]
    fn unit_square_grid() {
        let f = poly(2, &[(&[2, 0], 1.0), (&[0, 0], -1.0)]);
        let g = poly(2, &[(&[0, 2], 1.0), (&[0, 0], -1.0)]);
        let system = PolySystem::new(2, vec![f, g]);
        let report = solve(&system, &TrackConfig::default()).unwrap();
        assert_eq!(report.regular, 4);
        assert_eq!(report.solutions.len(), 4);
        for s in &report.solutions {
            assert!((s[0].powu(2) - cr(1.0)).norm() < 1e-10);
            assert!((s[1].powu(2) - cr(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let f = poly(2, &[(&[2, 0], 1.0), (&[0, 2], 3.0), (&[1, 0], -1.0), (&[0, 0], -1.0)]);
        let g = poly(2, &[(&[1, 1], 1.0), (&[0, 1], 2.0), (&[0, 0], -1.0)]);
        let system = PolySystem::new(2, vec![f, g]);
        let config = TrackConfig { seed: 7, ..TrackConfig::default() };
        let a = solve(&system, &config).unwrap();
        let b = solve(&system, &config).unwrap();
        assert_eq!(a.solutions.len(), b.solutions.len());
        for (x, y) in a.solutions.iter().zip(&b.solutions) {
            for i in 0..x.len() {
                assert_eq!(x[i], y[i]);
            }
        }
        // a different seed still finds the same solution set
        let config2 = TrackConfig { seed: 8, ..TrackConfig::default() };
        let c = solve(&system, &config2).unwrap();
        assert_eq!(a.solutions.len(), c.solutions.len());
        for x in &a.solutions {
            assert!(c.solutions.iter().any(|y| (x - y).norm() < 1e-7));
        }
    }

    #[test]
    fn shape_errors() {
        let f = poly(2, &[(&[1, 0], 1.0)]);
        let system = PolySystem::new(2, vec![f]);
        assert!(matches!(
            solve(&system, &TrackConfig::default()),
            Err(SolverError::NotSquare { equations: 1, variables: 2 })
        ));
        let z = MultiPoly::zero(1);
        let system = PolySystem::new(1, vec![z]);
        assert!(matches!(
            solve(&system, &TrackConfig::default()),
            Err(SolverError::ZeroPolynomial)
        ));
    }
}
