//! Multivariate polynomials over complex coefficients and the systems built
//! from them: rational parametrizations of the catalogued families,
//! ED-critical systems (parametric and Lagrange forms), and linear slice
//! systems for multidegrees.
//!
//! Polynomials use a dense term map keyed by exponent vectors; the degrees
//! in this crate stay small (≤ ~20), so no sparsity tricks are needed.
//! [`CompiledSystem`] flattens a system into contiguous arrays for the
//! solver's hot loop.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::camera::CameraArrangement;
use crate::catalogue::{FamilySpec, WorldChart};
use crate::linalg::cr;
use crate::C64;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("patch degenerate: {0}")]
    PatchDegenerate(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero polynomial where a nonzero one is required: {0}")]
    ZeroPolynomial(String),
    #[error("malformed system: {0}")]
    Malformed(String),
}

/// Coefficients below this magnitude are dropped when building polynomials.
const COEFF_EPS: f64 = 0.0;

/// A polynomial in `num_vars` variables with complex coefficients, stored
/// as a map from exponent vectors to nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    pub num_vars: usize,
    pub terms: BTreeMap<Vec<u32>, C64>,
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        Self { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: C64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![0; num_vars], c);
        p
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, cr(1.0))
    }

    pub fn var(num_vars: usize, j: usize) -> Self {
        assert!(j < num_vars);
        let mut e = vec![0; num_vars];
        e[j] = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(e, cr(1.0));
        p
    }

    /// The affine-linear polynomial c₀ + Σ_j coeffs[j]·t_j.
    pub fn affine_linear(num_vars: usize, constant: C64, coeffs: &[C64]) -> Self {
        assert_eq!(coeffs.len(), num_vars);
        let mut p = Self::constant(num_vars, constant);
        for (j, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; num_vars];
            e[j] = 1;
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, coeff: C64) {
        assert_eq!(exps.len(), self.num_vars);
        if coeff.norm() <= COEFF_EPS && !self.terms.contains_key(&exps) {
            return;
        }
        let v = self.terms.entry(exps.clone()).or_insert_with(|| cr(0.0));
        *v += coeff;
        if v.norm() <= COEFF_EPS {
            self.terms.remove(&exps);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.num_vars, other.num_vars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(cr(-1.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        if c.norm() == 0.0 {
            return Self::zero(self.num_vars);
        }
        let terms = self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect();
        Self { num_vars: self.num_vars, terms }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.num_vars, other.num_vars);
        let mut out = Self::zero(self.num_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Formal partial derivative with respect to variable j.
    pub fn partial(&self, j: usize) -> Self {
        assert!(j < self.num_vars);
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[j] -= 1;
            out.add_term(d, c * cr(e[j] as f64));
        }
        out
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.num_vars);
        let mut acc = cr(0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (j, &ej) in e.iter().enumerate() {
                if ej > 0 {
                    m *= x[j].powu(ej);
                }
            }
            acc += m;
        }
        acc
    }

    /// Largest coefficient magnitude, 0 for the zero polynomial.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop terms whose coefficients are below `tol` times the largest one.
    pub fn trim(&self, tol: f64) -> Self {
        let scale = self.max_coeff();
        if scale == 0.0 {
            return self.clone();
        }
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.norm() > tol * scale)
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        Self { num_vars: self.num_vars, terms }
    }
}

/// Dot product of a covector with a vector of polynomials.
pub fn poly_dot(cov: &DVector<C64>, polys: &[MultiPoly]) -> MultiPoly {
    assert_eq!(cov.len(), polys.len());
    let nv = polys[0].num_vars;
    let mut out = MultiPoly::zero(nv);
    for (c, p) in cov.iter().zip(polys) {
        out = out.add(&p.scale(*c));
    }
    out
}

/// Matrix acting on a vector of polynomials.
pub fn poly_matrix_apply(m: &DMatrix<C64>, polys: &[MultiPoly]) -> Vec<MultiPoly> {
    assert_eq!(m.ncols(), polys.len());
    let nv = polys[0].num_vars;
    (0..m.nrows())
        .map(|i| {
            let mut acc = MultiPoly::zero(nv);
            for j in 0..m.ncols() {
                acc = acc.add(&polys[j].scale(m[(i, j)]));
            }
            acc
        })
        .collect()
}

/// Evaluate a vector of polynomials into a DVector.
pub fn poly_eval_vec(polys: &[MultiPoly], x: &[C64]) -> DVector<C64> {
    DVector::from_iterator(polys.len(), polys.iter().map(|p| p.eval(x)))
}

/// Per-factor affine chart: either a coordinate set to 1 or a generic
/// covector whose pairing with the coordinates is normalized to 1.
#[derive(Debug, Clone)]
pub enum FactorPatch {
    Coordinate(usize),
    Generic(DVector<C64>),
}

#[derive(Debug, Clone)]
pub struct AffinePatch {
    pub factors: Vec<FactorPatch>,
}

impl AffinePatch {
    /// The standard patch: first coordinate of every factor set to 1.
    pub fn standard(n_factors: usize) -> Self {
        Self { factors: (0..n_factors).map(|_| FactorPatch::Coordinate(0)).collect() }
    }

    /// Generic real chart covectors, one per factor.
    pub fn generic<R: Rng>(rng: &mut R, coord_lens: &[usize]) -> Self {
        Self {
            factors: coord_lens
                .iter()
                .map(|&len| FactorPatch::Generic(crate::linalg::real_vec(rng, len)))
                .collect(),
        }
    }

    pub fn covector(&self, factor: usize, len: usize) -> DVector<C64> {
        match &self.factors[factor] {
            FactorPatch::Coordinate(i) => {
                let mut v = DVector::zeros(len);
                v[*i] = cr(1.0);
                v
            }
            FactorPatch::Generic(v) => {
                assert_eq!(v.len(), len);
                v.clone()
            }
        }
    }
}

/// One image factor of a parametrized family, as homogeneous coordinate
/// polynomials plus the patch denominator.
#[derive(Debug, Clone)]
pub struct RationalFactor {
    /// Homogeneous coordinates of the image point, as polynomials in the
    /// domain chart variables.
    pub coords: Vec<MultiPoly>,
    /// The patch linear functional applied to `coords`.
    pub denom: MultiPoly,
    /// The patch covector itself.
    pub patch: DVector<C64>,
    /// Dimension of the ambient image variety of this factor (h for point
    /// factors, the Grassmannian dimension for line/plane factors).
    pub factor_dim: usize,
}

/// A tuple of rational factors sharing the domain chart variables:
/// t ↦ (N_1(t)/D_1(t), …, N_n(t)/D_n(t)).
#[derive(Debug, Clone)]
pub struct RationalMap {
    pub factors: Vec<RationalFactor>,
    pub num_vars: usize,
}

impl RationalMap {
    /// Homogeneous image coordinates of every factor at t.
    pub fn eval_homogeneous(&self, t: &[C64]) -> Vec<DVector<C64>> {
        self.factors.iter().map(|f| poly_eval_vec(&f.coords, t)).collect()
    }

    /// Patch-affine image coordinates; None when a denominator is
    /// numerically zero relative to the factor's coordinate norm.
    pub fn eval_affine(&self, t: &[C64], tol: f64) -> Option<Vec<DVector<C64>>> {
        let mut out = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let n = poly_eval_vec(&f.coords, t);
            let d = f.denom.eval(t);
            if d.norm() <= tol * n.norm().max(1e-300) {
                return None;
            }
            out.push(n / d);
        }
        Some(out)
    }

    /// Smallest relative denominator magnitude across factors at t.
    pub fn min_denominator(&self, t: &[C64]) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let n = poly_eval_vec(&f.coords, t).norm().max(1e-300);
                f.denom.eval(t).norm() / n
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// First-order criticality residual of the squared-distance objective
    /// Σ_{i,c} (u_{i,c} − y_{i,c}(t))² at t, relative to the local scale.
    /// Computed directly from the rational map, independently of any
    /// cleared polynomial system.
    pub fn criticality_residual(&self, data: &[DVector<f64>], t: &[C64]) -> f64 {
        assert_eq!(data.len(), self.factors.len());
        let mut grad = vec![cr(0.0); self.num_vars];
        let mut scale = 0.0f64;
        for (f, u) in self.factors.iter().zip(data) {
            let n = poly_eval_vec(&f.coords, t);
            let d = f.denom.eval(t);
            let y = &n / d;
            for j in 0..self.num_vars {
                let dn = DVector::from_iterator(
                    f.coords.len(),
                    f.coords.iter().map(|p| p.partial(j).eval(t)),
                );
                let dd = f.denom.partial(j).eval(t);
                // ∂y = (∂N·D − N·∂D)/D²
                let dy = (dn * d - &n * dd) / (d * d);
                let mut g = cr(0.0);
                for c in 0..y.len() {
                    g += (y[c] - cr(u[c])) * dy[c];
                }
                grad[j] += g;
                scale = scale.max(dy.norm() * (&y - &DVector::from_iterator(u.len(), u.iter().map(|&v| cr(v)))).norm());
            }
        }
        let gnorm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        gnorm / scale.max(1.0)
    }
}

/// Compose a world chart with a camera arrangement and a patch into the
/// rational joint map of the family.
pub fn rational_parametrization(
    spec: &FamilySpec,
    chart: &WorldChart,
    arrangement: &CameraArrangement,
    patch: &AffinePatch,
) -> Result<RationalMap, PolyError> {
    let k_plus_1 = spec.object_dim + 1;
    let n = arrangement.len();
    if patch.factors.len() != n {
        return Err(PolyError::DimensionMismatch(format!(
            "patch has {} factors, arrangement has {n}",
            patch.factors.len()
        )));
    }
    let h = arrangement.image_dim;
    let factor_dim = (spec.object_dim + 1) * (h - spec.object_dim);
    let mut factors = Vec::with_capacity(n);
    for (i, cam) in arrangement.cameras.iter().enumerate() {
        let w = cam.wedge(k_plus_1);
        let coords = poly_matrix_apply(&w, &chart.coords);
        let cov = patch.covector(i, coords.len());
        let denom = poly_dot(&cov, &coords).trim(1e-13);
        if denom.is_zero() {
            return Err(PolyError::PatchDegenerate(format!(
                "denominator of factor {i} is identically zero"
            )));
        }
        factors.push(RationalFactor { coords, denom, patch: cov, factor_dim });
    }
    Ok(RationalMap { factors, num_vars: chart.domain_dim })
}

/// The cleared critical system of Σ_{i,c}(u_{i,c} − N_{i,c}/D_i)²: one
/// polynomial per chart variable,
/// P_j = Σ_i G_{i,j} · Π_{k≠i} D_k³ with
/// G_{i,j} = Σ_c (u_{i,c}·D_i − N_{i,c}) · (∂_j N_{i,c}·D_i − N_{i,c}·∂_j D_i).
///
/// Clearing multiplies by the cube of each other denominator because the
/// per-factor gradient term carries D_i³ below the line; the cleared
/// factors are exactly the D_i, so endpoints with a near-zero denominator
/// are spurious and must be filtered.
pub fn ed_critical_system_param(map: &RationalMap, data: &[DVector<f64>]) -> PolySystem {
    assert_eq!(data.len(), map.factors.len());
    let nv = map.num_vars;
    let n = map.factors.len();

    // G_{i,j}
    let mut g = vec![vec![MultiPoly::zero(nv); nv]; n];
    for (i, (f, u)) in map.factors.iter().zip(data).enumerate() {
        assert_eq!(u.len(), f.coords.len());
        let dpartials: Vec<MultiPoly> = (0..nv).map(|j| f.denom.partial(j)).collect();
        for (c, nc) in f.coords.iter().enumerate() {
            let residual = f.denom.scale(cr(u[c])).sub(nc);
            for j in 0..nv {
                let wronsk = nc.partial(j).mul(&f.denom).sub(&nc.mul(&dpartials[j]));
                g[i][j] = g[i][j].add(&residual.mul(&wronsk));
            }
        }
    }

    // Prefix/suffix products of D_k³ so each Π_{k≠i} is formed once.
    let cubes: Vec<MultiPoly> = map
        .factors
        .iter()
        .map(|f| f.denom.mul(&f.denom).mul(&f.denom))
        .collect();
    let mut prefix = vec![MultiPoly::one(nv)];
    for c in &cubes {
        let last = prefix.last().unwrap().mul(c);
        prefix.push(last);
    }
    let mut suffix = vec![MultiPoly::one(nv); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1].mul(&cubes[i]);
    }

    let mut polys = Vec::with_capacity(nv);
    for j in 0..nv {
        let mut p = MultiPoly::zero(nv);
        for i in 0..n {
            let others = prefix[i].mul(&suffix[i + 1]);
            p = p.add(&g[i][j].mul(&others));
        }
        polys.push(p.trim(1e-13));
    }

    let mut metadata = Map::new();
    metadata.insert("kind".into(), json!("ed_critical_param"));
    PolySystem { num_vars: nv, polys, metadata }
}

/// Saturated critical system of Σ_{i,c}(u_{i,c} − N_{i,c}/D_i)² with one
/// reciprocal variable per factor: in the ring C[t_1..t_nv, μ_1..μ_n] the
/// equations are
/// E_j = Σ_i (A_{i,j}·μ_i − B_{i,j})·μ_i² for each chart variable, with
/// A_{i,j} = Σ_c N_{i,c}·W_{i,c,j}, B_{i,j} = Σ_c u_{i,c}·W_{i,c,j},
/// W_{i,c,j} = ∂_j N_{i,c}·D_i − N_{i,c}·∂_j D_i, together with the
/// saturation equations μ_i·D_i − 1 = 0.
///
/// Every solution has all denominators invertible by construction, so the
/// positive-dimensional junk the cleared form acquires on {D_a = D_b = 0}
/// never enters the homotopy; those loci move to infinity instead.
pub fn ed_critical_system_reciprocal(
    map: &RationalMap,
    data: &[DVector<f64>],
) -> PolySystem {
    assert_eq!(data.len(), map.factors.len());
    let nv = map.num_vars;
    let n = map.factors.len();
    let nt = nv + n;

    let extend = |p: &MultiPoly| -> MultiPoly {
        let mut out = MultiPoly::zero(nt);
        for (e, c) in &p.terms {
            let mut e2 = e.clone();
            e2.extend(std::iter::repeat(0).take(n));
            out.add_term(e2, *c);
        }
        out
    };
    let mu = |i: usize, power: u32| -> MultiPoly {
        let mut e = vec![0u32; nt];
        e[nv + i] = power;
        let mut p = MultiPoly::zero(nt);
        p.add_term(e, cr(1.0));
        p
    };

    let mut polys = Vec::with_capacity(nt);
    for j in 0..nv {
        let mut ej = MultiPoly::zero(nt);
        for (i, (f, u)) in map.factors.iter().zip(data).enumerate() {
            let dpart = f.denom.partial(j);
            let mut a = MultiPoly::zero(nv);
            let mut b = MultiPoly::zero(nv);
            for (c, nc) in f.coords.iter().enumerate() {
                let wronsk = nc.partial(j).mul(&f.denom).sub(&nc.mul(&dpart));
                a = a.add(&nc.mul(&wronsk));
                b = b.add(&wronsk.scale(cr(u[c])));
            }
            let term = extend(&a).mul(&mu(i, 3)).sub(&extend(&b).mul(&mu(i, 2)));
            ej = ej.add(&term);
        }
        polys.push(ej.trim(1e-13));
    }
    for (i, f) in map.factors.iter().enumerate() {
        let sat = extend(&f.denom).mul(&mu(i, 1)).sub(&MultiPoly::one(nt));
        polys.push(sat.trim(1e-13));
    }

    let mut metadata = Map::new();
    metadata.insert("kind".into(), json!("ed_critical_reciprocal"));
    PolySystem { num_vars: nt, polys, metadata }
}

/// Lagrange-multiplier critical system for a variety cut out by
/// `equations` in affine coordinates: with G = A·F for a random real
/// codim×m matrix A, the system is {G = 0, (x − u) − J_G^T λ = 0} in the
/// variables (x, λ).
pub fn ed_critical_system_lagrange<R: Rng>(
    equations: &PolySystem,
    codim: usize,
    u: &[f64],
    rng: &mut R,
) -> PolySystem {
    let nx = equations.num_vars;
    assert_eq!(u.len(), nx);
    assert!(codim >= 1 && codim <= equations.polys.len());
    let nv = nx + codim;

    let extend = |p: &MultiPoly| -> MultiPoly {
        let mut out = MultiPoly::zero(nv);
        for (e, c) in &p.terms {
            let mut e2 = e.clone();
            e2.extend(std::iter::repeat(0).take(codim));
            out.add_term(e2, *c);
        }
        out
    };

    let a = crate::linalg::real_mat_f64(rng, codim, equations.polys.len());
    let g: Vec<MultiPoly> = (0..codim)
        .map(|k| {
            let mut acc = MultiPoly::zero(nx);
            for (m, f) in equations.polys.iter().enumerate() {
                acc = acc.add(&f.scale(cr(a[(k, m)])));
            }
            extend(&acc)
        })
        .collect();

    let mut polys: Vec<MultiPoly> = g.clone();
    for j in 0..nx {
        // (x_j − u_j) − Σ_k λ_k ∂_j G_k
        let mut p = MultiPoly::var(nv, j);
        p = p.sub(&MultiPoly::constant(nv, cr(u[j])));
        for (k, gk) in g.iter().enumerate() {
            let lambda = MultiPoly::var(nv, nx + k);
            p = p.sub(&lambda.mul(&gk.partial(j)));
        }
        polys.push(p);
    }

    let mut metadata = Map::new();
    metadata.insert("kind".into(), json!("ed_critical_lagrange"));
    PolySystem { num_vars: nv, polys, metadata }
}

/// Square slice system: for factor i, `d[i]` random real linear conditions
/// on its homogeneous coordinates (affine-linear in the patch coordinates,
/// with the constant folded into the covector).
pub fn slice_system<R: Rng>(
    map: &RationalMap,
    d: &[usize],
    rng: &mut R,
) -> Result<PolySystem, PolyError> {
    if d.len() != map.factors.len() {
        return Err(PolyError::DimensionMismatch(format!(
            "codimension vector has {} entries, map has {} factors",
            d.len(),
            map.factors.len()
        )));
    }
    let total: usize = d.iter().sum();
    if total != map.num_vars {
        return Err(PolyError::DimensionMismatch(format!(
            "codimensions sum to {total}, domain dimension is {}",
            map.num_vars
        )));
    }
    for (i, (&di, f)) in d.iter().zip(&map.factors).enumerate() {
        if di > f.factor_dim {
            return Err(PolyError::DimensionMismatch(format!(
                "codimension {di} exceeds factor {i} dimension {}",
                f.factor_dim
            )));
        }
    }
    let mut polys = Vec::with_capacity(total);
    for (f, &di) in map.factors.iter().zip(d) {
        for _ in 0..di {
            let cov = crate::linalg::real_vec(rng, f.coords.len());
            polys.push(poly_dot(&cov, &f.coords).trim(1e-13));
        }
    }
    let mut metadata = Map::new();
    metadata.insert("kind".into(), json!("slice"));
    Ok(PolySystem { num_vars: map.num_vars, polys, metadata })
}

/// A square-or-not polynomial system plus provenance metadata.
#[derive(Debug, Clone)]
pub struct PolySystem {
    pub num_vars: usize,
    pub polys: Vec<MultiPoly>,
    pub metadata: Map<String, Value>,
}

impl PolySystem {
    pub fn new(num_vars: usize, polys: Vec<MultiPoly>) -> Self {
        for p in &polys {
            assert_eq!(p.num_vars, num_vars);
        }
        Self { num_vars, polys, metadata: Map::new() }
    }

    pub fn is_square(&self) -> bool {
        self.polys.len() == self.num_vars
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.polys.iter().map(|p| p.total_degree()).collect()
    }

    pub fn bezout_number(&self) -> usize {
        self.degrees().iter().product()
    }

    pub fn eval(&self, x: &[C64]) -> DVector<C64> {
        DVector::from_iterator(self.polys.len(), self.polys.iter().map(|p| p.eval(x)))
    }

    pub fn jacobian(&self, x: &[C64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.polys.len(), self.num_vars, |i, j| {
            self.polys[i].partial(j).eval(x)
        })
    }

    pub fn to_json(&self) -> Value {
        let polys: Vec<Value> = self
            .polys
            .iter()
            .map(|p| {
                let terms: Vec<Value> = p
                    .terms
                    .iter()
                    .map(|(e, c)| {
                        let mut row: Vec<Value> =
                            e.iter().map(|&x| json!(x)).collect();
                        row.push(json!([c.re, c.im]));
                        Value::Array(row)
                    })
                    .collect();
                Value::Array(terms)
            })
            .collect();
        json!({
            "num_vars": self.num_vars,
            "polys": polys,
            "metadata": Value::Object(self.metadata.clone()),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, PolyError> {
        let obj = v.as_object().ok_or_else(|| PolyError::Malformed("expected object".into()))?;
        let num_vars = obj
            .get("num_vars")
            .and_then(Value::as_u64)
            .ok_or_else(|| PolyError::Malformed("missing num_vars".into()))? as usize;
        let polys_v = obj
            .get("polys")
            .and_then(Value::as_array)
            .ok_or_else(|| PolyError::Malformed("missing polys".into()))?;
        let mut polys = Vec::with_capacity(polys_v.len());
        for pv in polys_v {
            let terms_v = pv
                .as_array()
                .ok_or_else(|| PolyError::Malformed("poly must be an array of terms".into()))?;
            let mut p = MultiPoly::zero(num_vars);
            for tv in terms_v {
                let row = tv
                    .as_array()
                    .ok_or_else(|| PolyError::Malformed("term must be an array".into()))?;
                if row.len() != num_vars + 1 {
                    return Err(PolyError::Malformed(format!(
                        "term must have {num_vars} exponents plus a coefficient"
                    )));
                }
                let mut exps = Vec::with_capacity(num_vars);
                for e in &row[..num_vars] {
                    exps.push(
                        e.as_u64()
                            .ok_or_else(|| PolyError::Malformed("exponent must be an integer".into()))?
                            as u32,
                    );
                }
                let cpair = row[num_vars]
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| PolyError::Malformed("coefficient must be [re, im]".into()))?;
                let re = cpair[0]
                    .as_f64()
                    .ok_or_else(|| PolyError::Malformed("coefficient real part".into()))?;
                let im = cpair[1]
                    .as_f64()
                    .ok_or_else(|| PolyError::Malformed("coefficient imaginary part".into()))?;
                p.add_term(exps, C64::new(re, im));
            }
            polys.push(p);
        }
        let metadata = obj
            .get("metadata")
            .and_then(Value::as_object)
            .cloned()
            .unwrap_or_default();
        Ok(Self { num_vars, polys, metadata })
    }

    pub fn compiled(&self) -> CompiledSystem {
        CompiledSystem::new(self)
    }
}

/// Flattened representation of a square-or-rectangular system plus all its
/// formal partials, evaluated through per-variable power tables. Built once
/// and evaluated many times inside the path tracker.
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    pub num_vars: usize,
    pub n_polys: usize,
    poly_ranges: Vec<(usize, usize)>,
    jac_ranges: Vec<(usize, usize)>,
    coeffs: Vec<C64>,
    exps: Vec<u32>,
    max_deg: Vec<u32>,
}

impl CompiledSystem {
    pub fn new(system: &PolySystem) -> Self {
        let nv = system.num_vars;
        let mut coeffs = Vec::new();
        let mut exps = Vec::new();
        let mut poly_ranges = Vec::new();
        let mut jac_ranges = Vec::new();
        let mut max_deg = vec![0u32; nv];

        let push_poly = |p: &MultiPoly,
                             coeffs: &mut Vec<C64>,
                             exps: &mut Vec<u32>,
                             max_deg: &mut Vec<u32>|
         -> (usize, usize) {
            let start = coeffs.len();
            for (e, c) in &p.terms {
                coeffs.push(*c);
                for (j, &ej) in e.iter().enumerate() {
                    max_deg[j] = max_deg[j].max(ej);
                    exps.push(ej);
                }
            }
            (start, coeffs.len())
        };

        for p in &system.polys {
            poly_ranges.push(push_poly(p, &mut coeffs, &mut exps, &mut max_deg));
        }
        for p in &system.polys {
            for j in 0..nv {
                let d = p.partial(j);
                jac_ranges.push(push_poly(&d, &mut coeffs, &mut exps, &mut max_deg));
            }
        }

        Self {
            num_vars: nv,
            n_polys: system.polys.len(),
            poly_ranges,
            jac_ranges,
            coeffs,
            exps,
            max_deg,
        }
    }

    pub fn power_table(&self) -> PowerTable {
        PowerTable {
            pows: self
                .max_deg
                .iter()
                .map(|&d| vec![cr(1.0); d as usize + 1])
                .collect(),
        }
    }

    fn fill_powers(&self, x: &[C64], table: &mut PowerTable) {
        for (j, row) in table.pows.iter_mut().enumerate() {
            row[0] = cr(1.0);
            for e in 1..row.len() {
                row[e] = row[e - 1] * x[j];
            }
        }
    }

    fn eval_range(&self, range: (usize, usize), table: &PowerTable) -> C64 {
        let nv = self.num_vars;
        let mut acc = cr(0.0);
        for t in range.0..range.1 {
            let mut m = self.coeffs[t];
            let base = t * nv;
            for j in 0..nv {
                let e = self.exps[base + j];
                if e > 0 {
                    m *= table.pows[j][e as usize];
                }
            }
            acc += m;
        }
        acc
    }

    /// Evaluate all polynomials at x into `out`.
    pub fn eval_into(&self, x: &[C64], table: &mut PowerTable, out: &mut [C64]) {
        self.fill_powers(x, table);
        for (i, &r) in self.poly_ranges.iter().enumerate() {
            out[i] = self.eval_range(r, table);
        }
    }

    /// Evaluate the Jacobian at x into `out` (n_polys × num_vars).
    pub fn jacobian_into(&self, x: &[C64], table: &mut PowerTable, out: &mut DMatrix<C64>) {
        self.fill_powers(x, table);
        for i in 0..self.n_polys {
            for j in 0..self.num_vars {
                out[(i, j)] = self.eval_range(self.jac_ranges[i * self.num_vars + j], table);
            }
        }
    }
}

/// Reusable per-thread power tables for [`CompiledSystem`] evaluation.
#[derive(Debug, Clone)]
pub struct PowerTable {
    pows: Vec<Vec<C64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraArrangement;
    use crate::catalogue::{self, FamilyClass};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x() -> MultiPoly {
        MultiPoly::var(2, 0)
    }

    fn y() -> MultiPoly {
        MultiPoly::var(2, 1)
    }

    #[test]
    fn square_of_binomial() {
        let s = x().add(&y());
        let sq = s.mul(&s);
        let mut expected = MultiPoly::zero(2);
        expected.add_term(vec![2, 0], cr(1.0));
        expected.add_term(vec![1, 1], cr(2.0));
        expected.add_term(vec![0, 2], cr(1.0));
        assert_eq!(sq, expected);
        assert_eq!(sq.total_degree(), 2);
    }

    #[test]
    fn partial_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            // random dense cubic in 3 variables
            let mut p = MultiPoly::zero(3);
            for a in 0..=3u32 {
                for b in 0..=(3 - a) {
                    for c in 0..=(3 - a - b) {
                        p.add_term(
                            vec![a, b, c],
                            cr(rand::Rng::gen_range(&mut rng, -1.0..1.0)),
                        );
                    }
                }
            }
            let pt: Vec<C64> = (0..3)
                .map(|_| {
                    C64::new(
                        rand::Rng::gen_range(&mut rng, -1.0..1.0),
                        rand::Rng::gen_range(&mut rng, -1.0..1.0),
                    )
                })
                .collect();
            let eps = 1e-6;
            for j in 0..3 {
                let analytic = p.partial(j).eval(&pt);
                let mut up = pt.clone();
                up[j] += cr(eps);
                let mut dn = pt.clone();
                dn[j] -= cr(eps);
                let fd = (p.eval(&up) - p.eval(&dn)) / cr(2.0 * eps);
                assert!((analytic - fd).norm() < 1e-6 * (1.0 + analytic.norm()));
            }
        }
    }

    #[test]
    fn identity_camera_line_gives_identity_chart() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let class = FamilyClass::parse("M^{1,1}").unwrap();
        let spec = catalogue::sample_spec(&class, 1, &mut rng).unwrap();
        let chart = catalogue::world_chart(&spec, &mut rng).unwrap();
        let arr = CameraArrangement::new(vec![crate::camera::Camera::new(
            DMatrix::identity(2, 2),
        )
        .unwrap()])
        .unwrap();
        let map =
            rational_parametrization(&spec, &chart, &arr, &AffinePatch::standard(1)).unwrap();
        // Chart is (1, t); with the identity camera and x0 = 1 the affine
        // image is exactly t.
        let t = [cr(0.7)];
        let img = map.eval_affine(&t, 1e-12).unwrap();
        assert_eq!(img.len(), 1);
        assert!((img[0][0] - cr(1.0)).norm() < 1e-14);
        assert!((img[0][1] - cr(0.7)).norm() < 1e-14);
    }

    #[test]
    fn point_family_denominator_is_first_camera_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let class = FamilyClass::parse("M^{3,2}").unwrap();
        let spec = catalogue::sample_spec(&class, 2, &mut rng).unwrap();
        let chart = catalogue::world_chart(&spec, &mut rng).unwrap();
        let arr = CameraArrangement::sample(&mut rng, 3, 2, 2).unwrap();
        let map =
            rational_parametrization(&spec, &chart, &arr, &AffinePatch::standard(2)).unwrap();
        let t = [cr(0.3), cr(-0.8), cr(0.45)];
        let world = DVector::from_vec(vec![cr(1.0), cr(0.3), cr(-0.8), cr(0.45)]);
        for (i, f) in map.factors.iter().enumerate() {
            let expected = (arr.cameras[i].matrix() * &world)[0];
            assert!((f.denom.eval(&t) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn ed_critical_degree_matches_curve_family_count() {
        // For M^{1,1} the cleared numerator has degree 3n−2 exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for n in 1..=4usize {
            let class = FamilyClass::parse("M^{1,1}").unwrap();
            let spec = catalogue::sample_spec(&class, n, &mut rng).unwrap();
            let chart = catalogue::world_chart(&spec, &mut rng).unwrap();
            let arr = CameraArrangement::sample(&mut rng, 1, 1, n).unwrap();
            let map =
                rational_parametrization(&spec, &chart, &arr, &AffinePatch::standard(n)).unwrap();
            let data: Vec<DVector<f64>> = (0..n)
                .map(|_| {
                    DVector::from_vec(vec![
                        rand::Rng::gen_range(&mut rng, -1.0..1.0),
                        rand::Rng::gen_range(&mut rng, -1.0..1.0),
                    ])
                })
                .collect();
            let sys = ed_critical_system_param(&map, &data);
            assert!(sys.is_square());
            assert_eq!(sys.degrees(), vec![3 * n - 2]);
        }
    }

    #[test]
    fn lagrange_system_shape_and_known_circle_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        // x² + y² − 1
        let mut circle = MultiPoly::zero(2);
        circle.add_term(vec![2, 0], cr(1.0));
        circle.add_term(vec![0, 2], cr(1.0));
        circle.add_term(vec![0, 0], cr(-1.0));
        let eqs = PolySystem::new(2, vec![circle]);
        let sys = ed_critical_system_lagrange(&eqs, 1, &[2.0, 0.0], &mut rng);
        assert_eq!(sys.num_vars, 3);
        assert!(sys.is_square());
        // (1, 0) is critical; solve the multiplier from the last equations.
        // G = a(x²+y²−1), ∂G = (2ax, 2ay); x−2 − λ·2ax = 0 at (1,0) gives
        // λ = −1/(2a).
        let a = {
            // reproduce the matrix drawn inside the constructor
            let mut rng2 = ChaCha8Rng::seed_from_u64(25);
            crate::linalg::real_mat_f64(&mut rng2, 1, 1)[(0, 0)]
        };
        let lambda = cr(-1.0 / (2.0 * a));
        let sol = [cr(1.0), cr(0.0), lambda];
        let r = sys.eval(&sol);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn slice_dimension_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let class = FamilyClass::parse("M^{3,2}").unwrap();
        let spec = catalogue::sample_spec(&class, 3, &mut rng).unwrap();
        let chart = catalogue::world_chart(&spec, &mut rng).unwrap();
        let arr = CameraArrangement::sample(&mut rng, 3, 2, 3).unwrap();
        let map =
            rational_parametrization(&spec, &chart, &arr, &AffinePatch::standard(3)).unwrap();
        let err = slice_system(&map, &[1, 1, 0], &mut rng).unwrap_err();
        assert!(matches!(err, PolyError::DimensionMismatch(_)));
        let ok = slice_system(&map, &[1, 1, 1], &mut rng).unwrap();
        assert!(ok.is_square());
        assert_eq!(ok.degrees(), vec![1, 1, 1]);
    }

    #[test]
    fn json_roundtrip_preserves_system() {
        let mut p = MultiPoly::zero(2);
        p.add_term(vec![2, 0], C64::new(1.5, -0.25));
        p.add_term(vec![0, 1], cr(-3.0));
        let mut q = MultiPoly::zero(2);
        q.add_term(vec![1, 1], cr(2.0));
        let mut sys = PolySystem::new(2, vec![p, q]);
        sys.metadata.insert("family".into(), json!("test"));
        let v = sys.to_json();
        let back = PolySystem::from_json(&v).unwrap();
        assert_eq!(back.num_vars, 2);
        assert_eq!(back.polys, sys.polys);
        assert_eq!(back.metadata.get("family"), sys.metadata.get("family"));
    }

    #[test]
    fn compiled_system_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let mut polys = Vec::new();
        for _ in 0..3 {
            let mut p = MultiPoly::zero(3);
            for a in 0..=2u32 {
                for b in 0..=2u32 {
                    for c in 0..=2u32 {
                        p.add_term(
                            vec![a, b, c],
                            cr(rand::Rng::gen_range(&mut rng, -1.0..1.0)),
                        );
                    }
                }
            }
            polys.push(p);
        }
        let sys = PolySystem::new(3, polys);
        let comp = sys.compiled();
        let mut table = comp.power_table();
        let pt: Vec<C64> = (0..3)
            .map(|_| {
                C64::new(
                    rand::Rng::gen_range(&mut rng, -1.0..1.0),
                    rand::Rng::gen_range(&mut rng, -1.0..1.0),
                )
            })
            .collect();
        let mut vals = vec![cr(0.0); 3];
        comp.eval_into(&pt, &mut table, &mut vals);
        let direct = sys.eval(&pt);
        for i in 0..3 {
            assert!((vals[i] - direct[i]).norm() < 1e-12);
        }
        let mut jac = DMatrix::zeros(3, 3);
        comp.jacobian_into(&pt, &mut table, &mut jac);
        assert!((jac - sys.jacobian(&pt)).norm() < 1e-12);
    }

    #[test]
    fn criticality_residual_vanishes_at_projection_foot() {
        // Identity-camera M^{1,1}: image is the line (1, t); chart x0 = 1.
        // Critical point of (u0−1)² + (u1−t)² is t = u1.
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let class = FamilyClass::parse("M^{1,1}").unwrap();
        let spec = catalogue::sample_spec(&class, 1, &mut rng).unwrap();
        let chart = catalogue::world_chart(&spec, &mut rng).unwrap();
        let arr = CameraArrangement::new(vec![crate::camera::Camera::new(
            DMatrix::identity(2, 2),
        )
        .unwrap()])
        .unwrap();
        let map =
            rational_parametrization(&spec, &chart, &arr, &AffinePatch::standard(1)).unwrap();
        let data = vec![DVector::from_vec(vec![0.9, -0.35])];
        let res_at_foot = map.criticality_residual(&data, &[cr(-0.35)]);
        assert!(res_at_foot < 1e-12);
        let res_off = map.criticality_residual(&data, &[cr(0.5)]);
        assert!(res_off > 1e-3);
    }

    #[test]
    fn generic_patch_denominators_are_recorded() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let class = FamilyClass::parse("M^{2,2}").unwrap();
        let spec = catalogue::sample_spec(&class, 2, &mut rng).unwrap();
        let chart = catalogue::world_chart(&spec, &mut rng).unwrap();
        let arr = CameraArrangement::sample(&mut rng, 2, 2, 2).unwrap();
        let patch = AffinePatch::generic(&mut rng, &[3, 3]);
        let map = rational_parametrization(&spec, &chart, &arr, &patch).unwrap();
        let t = [cr(0.2), cr(0.4)];
        for f in &map.factors {
            let n = poly_eval_vec(&f.coords, &t);
            let expected = f.patch.dot(&n);
            assert!((f.denom.eval(&t) - expected).norm() < 1e-12);
        }
        // the affine coordinates satisfy patch·y = 1
        let imgs = map.eval_affine(&t, 1e-12).unwrap();
        for (f, y) in map.factors.iter().zip(&imgs) {
            assert!((f.patch.dot(y) - cr(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn real_random_cubics_jacobian_relative_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let mut p = MultiPoly::zero(2);
            for a in 0..=3u32 {
                for b in 0..=(3 - a) {
                    p.add_term(vec![a, b], cr(rand::Rng::gen_range(&mut rng, -1.0..1.0)));
                }
            }
            let sys = PolySystem::new(2, vec![p]);
            let pt: Vec<C64> = (0..2)
                .map(|_| cr(rand::Rng::gen_range(&mut rng, -1.0..1.0)))
                .collect();
            let jac = sys.jacobian(&pt);
            let eps = 1e-6;
            for j in 0..2 {
                let mut up = pt.clone();
                up[j] += cr(eps);
                let mut dn = pt.clone();
                dn[j] -= cr(eps);
                let fd = (sys.eval(&up)[0] - sys.eval(&dn)[0]) / cr(2.0 * eps);
                let rel = (jac[(0, j)] - fd).norm() / (1.0 + fd.norm());
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }
}
