//! Bivariate system solving through the Sylvester resultant. Serves as an
//! oracle independent of homotopy continuation: the resultant in one
//! variable is interpolated from evaluated determinants, its roots are the
//! candidate first coordinates, and the second coordinate is recovered by
//! matching univariate roots.

use nalgebra::DMatrix;

use crate::linalg::{self, cr};
use crate::polysys::MultiPoly;
use crate::solver::roots::univariate_roots;
use crate::solver::SolverError;
use crate::C64;

/// Candidate shear slopes. The first that keeps both leading coefficients
/// in y away from zero is used; a generic slope always works because the
/// sheared leading coefficient is the top form evaluated at (λ, 1).
const SHEAR_SLOPES: [f64; 6] = [0.0, 0.612862, -0.453271, 1.170318, -1.839204, 0.287551];

/// All finite common zeros of two bivariate polynomials, computed via the
/// Sylvester resultant with respect to the second variable.
pub fn bivariate_resultant_count(
    f: &MultiPoly,
    g: &MultiPoly,
) -> Result<Vec<(C64, C64)>, SolverError> {
    if f.num_vars != 2 || g.num_vars != 2 {
        return Err(SolverError::Degenerate(
            "resultant solver expects exactly two variables".into(),
        ));
    }
    if f.is_zero() || g.is_zero() {
        return Err(SolverError::ZeroPolynomial);
    }
    if f.total_degree() == 0 || g.total_degree() == 0 {
        return Ok(Vec::new());
    }

    // rescale the variables so coefficient magnitudes are flat across
    // degrees; products of linear forms otherwise grade the Sylvester
    // matrix badly enough to drown the determinant in rounding noise
    let (sx, sy) = balance_scales(f, g);
    let f = &rescale(f, sx, sy);
    let g = &rescale(g, sx, sy);

    let lambda = pick_shear(f, g).ok_or_else(|| {
        SolverError::Degenerate("no shear regularizes the leading coefficients".into())
    })?;
    let fs = shear(f, lambda);
    let gs = shear(g, lambda);
    let fc = coeffs_in_y(&fs);
    let gc = coeffs_in_y(&gs);
    let m = fc.len() - 1;
    let k = gc.len() - 1;

    // interpolate det Sylvester(x) from values at roots of unity; its
    // degree in x is at most m·k
    let num_samples = m * k + 1;
    let mut values = Vec::with_capacity(num_samples);
    let mut max_rel = 0.0f64;
    for j in 0..num_samples {
        let theta = 2.0 * std::f64::consts::PI * (j as f64) / (num_samples as f64);
        let x = C64::new(theta.cos(), theta.sin());
        let mut s = sylvester_at(&fc, &gc, x);
        // row equilibration: the determinant of the normalized matrix is
        // the ratio to the Hadamard bound, a scale-invariant singularity
        // measure, and the LU factors it more accurately
        let mut bound = 1.0f64;
        for row in 0..s.nrows() {
            let norm = s.row(row).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                for col in 0..s.ncols() {
                    s[(row, col)] /= cr(norm);
                }
                bound *= norm;
            }
        }
        let rel = linalg::det(&s);
        max_rel = max_rel.max(rel.norm());
        values.push(rel * cr(bound));
    }
    if max_rel <= 1e-12 {
        return Err(SolverError::CommonFactor);
    }
    let res_coeffs = inverse_dft(&values);

    let xs = univariate_roots(&res_coeffs)?;

    // for each x-candidate, pair up nearby roots of the two slices, then
    // let Newton decide: a loose pre-filter admits drifted candidates and
    // the polished point is accepted purely on its residuals
    let mut solutions: Vec<(C64, C64)> = Vec::new();
    for x0 in xs {
        let fy = slice_coeffs(&fc, x0);
        let gy = slice_coeffs(&gc, x0);
        let f_roots = match univariate_roots(&fy) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let g_roots = match univariate_roots(&gy) {
            Ok(r) => r,
            Err(_) => continue,
        };
        for &yf in &f_roots {
            for &yg in &g_roots {
                if (yf - yg).norm() > 5e-2 * (1.0 + yf.norm()) {
                    continue;
                }
                let y0 = (yf + yg) / cr(2.0);
                let (xr, yr) = polish_pair(&fs, &gs, x0, y0);
                let at = [xr, yr];
                if fs.eval(&at).norm() > 1e-8 * eval_scale(&fs, &at)
                    || gs.eval(&at).norm() > 1e-8 * eval_scale(&gs, &at)
                {
                    continue;
                }
                let point = (cr(sx) * (xr + cr(lambda) * yr), cr(sy) * yr);
                if !solutions.iter().any(|(a, b)| {
                    (a - point.0).norm() + (b - point.1).norm()
                        < 1e-6 * (1.0 + a.norm() + b.norm())
                }) {
                    solutions.push(point);
                }
            }
        }
    }
    Ok(solutions)
}

/// Magnitude of p at the point if no cancellation occurred; the natural
/// scale for judging whether an evaluated residual is numerically zero.
fn eval_scale(p: &MultiPoly, at: &[C64; 2]) -> f64 {
    let ax = at[0].norm();
    let ay = at[1].norm();
    let mut scale = 0.0f64;
    for (exps, c) in &p.terms {
        scale += c.norm() * ax.powi(exps[0] as i32) * ay.powi(exps[1] as i32);
    }
    scale.max(1e-300)
}

fn coeff_scale(p: &MultiPoly) -> f64 {
    p.max_coeff()
}

/// Least-squares fit of log-magnitude against exponents over both
/// polynomials; the returned substitution scales x and y so the fitted
/// magnitude profile is flat.
fn balance_scales(f: &MultiPoly, g: &MultiPoly) -> (f64, f64) {
    let mut normal = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for p in [f, g] {
        for (exps, c) in &p.terms {
            let mag = c.norm();
            if mag <= 0.0 {
                continue;
            }
            let row = [exps[0] as f64, exps[1] as f64, 1.0];
            let val = mag.ln();
            for i in 0..3 {
                for j in 0..3 {
                    normal[(i, j)] += row[i] * row[j];
                }
                rhs[i] += row[i] * val;
            }
        }
    }
    let sol = match normal.lu().solve(&rhs) {
        Some(s) => s,
        Option::None => return (1.0, 1.0),
    };
    let sx = (-sol[0]).exp();
    let sy = (-sol[1]).exp();
    if !sx.is_finite() || !sy.is_finite() {
        return (1.0, 1.0);
    }
    (sx.clamp(1e-3, 1e3), sy.clamp(1e-3, 1e3))
}

/// Substitute x ↦ sx·x, y ↦ sy·y.
fn rescale(p: &MultiPoly, sx: f64, sy: f64) -> MultiPoly {
    if sx == 1.0 && sy == 1.0 {
        return p.clone();
    }
    let mut out = MultiPoly::zero(2);
    for (exps, &coeff) in &p.terms {
        let factor = sx.powi(exps[0] as i32) * sy.powi(exps[1] as i32);
        out.add_term(exps.clone(), coeff * cr(factor));
    }
    out
}

/// Substitute x ↦ x + λy, expanding (x + λy)^a binomially.
fn shear(p: &MultiPoly, lambda: f64) -> MultiPoly {
    if lambda == 0.0 {
        return p.clone();
    }
    let mut out = MultiPoly::zero(2);
    for (exps, &coeff) in &p.terms {
        let (a, b) = (exps[0], exps[1]);
        let mut binom = 1.0f64;
        for i in 0..=a {
            // term: C(a,i) λ^i x^{a−i} y^{b+i}
            let c = coeff * cr(binom * lambda.powi(i as i32));
            out.add_term(vec![a - i, b + i], c);
            binom = binom * ((a - i) as f64) / ((i + 1) as f64);
        }
    }
    out
}

/// Coefficients of p viewed as a polynomial in y: entry d is the
/// polynomial in x multiplying y^d, itself stored as dense coefficients.
fn coeffs_in_y(p: &MultiPoly) -> Vec<Vec<C64>> {
    let dy = p.terms.keys().map(|e| e[1]).max().unwrap_or(0) as usize;
    let dx = p.terms.keys().map(|e| e[0]).max().unwrap_or(0) as usize;
    let mut out = vec![vec![C64::new(0.0, 0.0); dx + 1]; dy + 1];
    for (exps, &coeff) in &p.terms {
        out[exps[1] as usize][exps[0] as usize] += coeff;
    }
    out
}

fn leading_y_coeff_ok(p: &MultiPoly, lambda: f64) -> bool {
    let sheared = shear(p, lambda);
    let cy = coeffs_in_y(&sheared);
    let lead = cy.last().expect("nonzero polynomial");
    let scale = coeff_scale(p).max(1e-300);
    // the leading y-coefficient must be constant in x and sizable
    let constant_ok = lead
        .iter()
        .skip(1)
        .all(|c| c.norm() <= 1e-10 * scale);
    constant_ok && lead[0].norm() > 1e-6 * scale
}

fn pick_shear(f: &MultiPoly, g: &MultiPoly) -> Option<f64> {
    SHEAR_SLOPES
        .iter()
        .copied()
        .find(|&l| leading_y_coeff_ok(f, l) && leading_y_coeff_ok(g, l))
}

fn eval_poly(coeffs: &[C64], x: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Evaluate each y-coefficient at a fixed x, giving a univariate slice.
fn slice_coeffs(cy: &[Vec<C64>], x: C64) -> Vec<C64> {
    cy.iter().map(|cs| eval_poly(cs, x)).collect()
}

fn sylvester_at(fc: &[Vec<C64>], gc: &[Vec<C64>], x: C64) -> DMatrix<C64> {
    let fv = slice_coeffs(fc, x);
    let gv = slice_coeffs(gc, x);
    let m = fv.len() - 1;
    let k = gv.len() - 1;
    let n = m + k;
    let mut s = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for row in 0..k {
        for (j, &c) in fv.iter().enumerate() {
            s[(row, row + m - j)] = c;
        }
    }
    for row in 0..m {
        for (j, &c) in gv.iter().enumerate() {
            s[(k + row, row + k - j)] = c;
        }
    }
    s
}

/// Recover polynomial coefficients from values at the roots of unity.
fn inverse_dft(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, &v) in values.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * ((idx * j % n) as f64) / (n as f64);
            acc += v * C64::new(theta.cos(), theta.sin());
        }
        *c = acc / cr(n as f64);
    }
    coeffs
}

/// A few Newton steps on the sheared pair to tighten a candidate zero.
fn polish_pair(f: &MultiPoly, g: &MultiPoly, mut x: C64, mut y: C64) -> (C64, C64) {
    let fx = f.partial(0);
    let fy = f.partial(1);
    let gx = g.partial(0);
    let gy = g.partial(1);
    for _ in 0..10 {
        let vars = [x, y];
        let fv = f.eval(&vars);
        let gv = g.eval(&vars);
        let j11 = fx.eval(&vars);
        let j12 = fy.eval(&vars);
        let j21 = gx.eval(&vars);
        let j22 = gy.eval(&vars);
        let det = j11 * j22 - j12 * j21;
        if det.norm() < 1e-300 {
            break;
        }
        let dx = (fv * j22 - gv * j12) / det;
        let dy = (j11 * gv - j21 * fv) / det;
        x -= dx;
        y -= dy;
        if dx.norm() + dy.norm() < 1e-15 * (1.0 + x.norm() + y.norm()) {
            break;
        }
    }
    (x, y)
}
