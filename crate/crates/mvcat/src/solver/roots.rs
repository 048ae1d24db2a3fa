//! Roots of univariate complex polynomials: companion matrix, shifted
//! Hessenberg QR with deflation, then a Newton polish against the input
//! coefficients.

use nalgebra::DMatrix;

use crate::linalg::cr;
use crate::solver::SolverError;
use crate::C64;

/// All complex roots of `c[0] + c[1]·x + … + c[d]·x^d` (ascending
/// coefficients), with multiplicity. Trailing coefficients that vanish
/// relative to the largest one are trimmed first.
pub fn univariate_roots(coeffs: &[C64]) -> Result<Vec<C64>, SolverError> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if coeffs.is_empty() || scale == 0.0 {
        return Err(SolverError::ZeroPolynomial);
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = coeffs[deg];
    let mut h = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        h[(i, i - 1)] = cr(1.0);
    }
    for i in 0..deg {
        h[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let mut roots = hessenberg_eigenvalues(&mut h);
    for r in roots.iter_mut() {
        *r = polish(&coeffs[..=deg], *r);
    }
    Ok(roots)
}

/// Horner evaluation of p and p'.
fn horner(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn polish(coeffs: &[C64], mut x: C64) -> C64 {
    for _ in 0..8 {
        let (p, dp) = horner(coeffs, x);
        if dp.norm() <= 1e-300 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.norm() <= 1e-15 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

/// Eigenvalues of an upper-Hessenberg complex matrix by single-shift QR
/// with Givens rotations and deflation.
fn hessenberg_eigenvalues(h: &mut DMatrix<C64>) -> Vec<C64> {
    let n = h.nrows();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let mut stalled = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        // split at negligible subdiagonals
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= 1e-15 * local.max(1e-300) {
                h[(lo, lo - 1)] = cr(0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eigs.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            stalled = 0;
            continue;
        }
        stalled += 1;
        let mu = if stalled % 16 == 0 {
            // exceptional shift to break symmetric cycles
            h[(hi - 1, hi - 1)] + h[(hi - 1, hi - 2)] * cr(1.437)
        } else {
            wilkinson_shift(h, hi)
        };
        if stalled > 400 {
            // give up on further refinement of this block
            for i in lo..hi {
                eigs.push(h[(i, i)]);
            }
            hi = lo;
            stalled = 0;
            continue;
        }
        qr_step(h, lo, hi, mu);
    }
    eigs
}

fn wilkinson_shift(h: &DMatrix<C64>, hi: usize) -> C64 {
    let a = h[(hi - 2, hi - 2)];
    let b = h[(hi - 2, hi - 1)];
    let c = h[(hi - 1, hi - 2)];
    let d = h[(hi - 1, hi - 1)];
    let tr = a + d;
    let disc = (tr * tr - cr(4.0) * (a * d - b * c)).sqrt();
    let mu1 = (tr + disc) / cr(2.0);
    let mu2 = (tr - disc) / cr(2.0);
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// One explicit shifted QR step on the active block `lo..hi`.
fn qr_step(h: &mut DMatrix<C64>, lo: usize, hi: usize, mu: C64) {
    for i in lo..hi {
        h[(i, i)] -= mu;
    }
    // zero the subdiagonal with rotations G_k acting on rows (k, k+1)
    let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - lo - 1);
    for k in lo..(hi - 1) {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (cr(1.0), cr(0.0))
        } else {
            (a / cr(r), b / cr(r))
        };
        for j in k..hi {
            let (top, bot) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = c.conj() * top + s.conj() * bot;
            h[(k + 1, j)] = -s * top + c * bot;
        }
        rots.push((c, s));
    }
    // multiply back on the right by the adjoints in order
    for (idx, (c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let top_row = (k + 2).min(hi);
        for i in lo..top_row {
            let (left, right) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = left * c + right * s;
            h[(i, k + 1)] = left * (-s.conj()) + right * c.conj();
        }
    }
    for i in lo..hi {
        h[(i, i)] += mu;
    }
}
