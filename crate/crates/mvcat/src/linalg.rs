//! Dense complex linear algebra helpers shared across the crate: SVD-based
//! rank decisions, kernels, projective normalization, and seeded real
//! sampling promoted to complex.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::{C64, PROJ_CMP_TOL, REL_RANK_TOL};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank with the crate-wide relative threshold.
pub fn rank(m: &DMatrix<C64>) -> usize {
    rank_with_tol(m, REL_RANK_TOL)
}

pub fn rank_with_tol(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None | Some(&0.0) => 0,
        Some(&smax) => s.iter().filter(|&&x| x > rel_tol * smax).count(),
    }
}

/// Relative slack of the decision "rank ≤ r": the ratio `σ_{r+1}/σ_1`, or 0
/// when the matrix cannot exceed rank r for shape reasons.
pub fn rank_gap(m: &DMatrix<C64>, r: usize) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.get(r)) {
        (Some(&smax), Some(&sr)) if smax > 0.0 => sr / smax,
        _ => 0.0,
    }
}

/// Orthonormal basis of the right kernel (columns of V for trailing singular
/// values), using the crate-wide relative threshold.
pub fn kernel(m: &DMatrix<C64>) -> Vec<DVector<C64>> {
    let gram = m.adjoint() * m;
    let (vals, vecs) = hermitian_eigen(&gram);
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let mut basis = Vec::new();
    // This is meant for exact null spaces; the eigenvalues of the Gram
    // matrix carry a floor of eps·λmax, so the cut sits well above it.
    for (j, &l) in vals.iter().enumerate() {
        if l <= 1e-12 * lmax {
            basis.push(vecs.column(j).into_owned());
        }
    }
    basis
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
/// Returns (eigenvalues, eigenvectors as matching columns), unsorted. The
/// general-purpose decompositions are unreliable for complex singular
/// vectors, so the span- and kernel-extracting helpers route through this.
pub fn hermitian_eigen(a: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v: DMatrix<C64> = DMatrix::identity(n, n);
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 || n == 1 {
        let vals = (0..n).map(|i| m[(i, i)].re).collect();
        return (vals, v);
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= 1e-18 * scale {
                    continue;
                }
                // factor out the phase, then the real Jacobi rotation
                let phase = apq / cr(b);
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let u_qp = -cr(s) * phase.conj();
                let u_qq = cr(c) * phase.conj();
                // right-multiply M and V by the unitary, left-multiply M by
                // its adjoint
                for i in 0..n {
                    let (mp, mq) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = cr(c) * mp + u_qp * mq;
                    m[(i, q)] = cr(s) * mp + u_qq * mq;
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cr(c) * vp + u_qp * vq;
                    v[(i, q)] = cr(s) * vp + u_qq * vq;
                }
                for j in 0..n {
                    let (mp, mq) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = cr(c) * mp + u_qp.conj() * mq;
                    m[(q, j)] = cr(s) * mp + u_qq.conj() * mq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| m[(i, i)].re).collect();
    (vals, v)
}

/// Unit vector maximizing ‖mᴴ·v‖: the dominant left singular direction
/// (the best rank-one factor of the columns).
pub fn dominant_left_direction(m: &DMatrix<C64>) -> DVector<C64> {
    let gram = m * m.adjoint();
    let (vals, vecs) = hermitian_eigen(&gram);
    let mut best = 0;
    for (j, &l) in vals.iter().enumerate() {
        if l > vals[best] {
            best = j;
        }
    }
    vecs.column(best).into_owned()
}

pub fn det(m: &DMatrix<C64>) -> C64 {
    match m.nrows() {
        0 => cr(1.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().lu().determinant(),
    }
}

pub fn solve(a: &DMatrix<C64>, b: &DVector<C64>) -> Option<DVector<C64>> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    a.clone().try_inverse()
}

/// Scale so the largest-modulus coordinate becomes exactly 1.
pub fn proj_normalize(v: &DVector<C64>) -> DVector<C64> {
    let i = argmax_modulus(v);
    let pivot = v[i];
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    v.map(|x| x / pivot)
}

pub fn argmax_modulus(v: &DVector<C64>) -> usize {
    let mut best = 0;
    let mut best_norm = 0.0;
    for (i, x) in v.iter().enumerate() {
        let n = x.norm();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    best
}

/// Relative projective distance: both vectors are rescaled to put a 1 in the
/// position where `a` has its largest modulus, then compared in sup norm.
pub fn proj_dist(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    assert_eq!(a.len(), b.len(), "projective comparison needs equal lengths");
    let i = argmax_modulus(a);
    let (pa, pb) = (a[i], b[i]);
    if pa.norm() == 0.0 {
        return if b.iter().all(|x| x.norm() == 0.0) { 0.0 } else { f64::INFINITY };
    }
    if pb.norm() == 0.0 {
        return f64::INFINITY;
    }
    let na = a.map(|x| x / pa);
    let nb = b.map(|x| x / pb);
    let scale = na.iter().map(|x| x.norm()).fold(0.0, f64::max);
    (na - nb).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale
}

pub fn proj_eq(a: &DVector<C64>, b: &DVector<C64>) -> bool {
    proj_dist(a, b) < PROJ_CMP_TOL
}

/// Real uniform sample in [−1, 1], promoted to complex.
pub fn real_vec<R: Rng>(rng: &mut R, len: usize) -> DVector<C64> {
    DVector::from_fn(len, |_, _| cr(rng.gen_range(-1.0..=1.0)))
}

pub fn real_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| cr(rng.gen_range(-1.0..=1.0)))
}

pub fn real_mat_f64<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

pub fn promote(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(cr)
}

pub fn promote_vec(v: &DVector<f64>) -> DVector<C64> {
    v.map(cr)
}

pub fn real_part(v: &DVector<C64>) -> DVector<f64> {
    v.map(|x| x.re)
}

/// Orthonormal basis (as columns) of the column space of a real sample
/// matrix, via SVD truncation at the crate-wide relative threshold.
pub fn orthonormal_col_basis(samples: &DMatrix<f64>) -> DMatrix<f64> {
    let promoted = promote(samples);
    let gram = &promoted * promoted.adjoint();
    let (vals, vecs) = hermitian_eigen(&gram);
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&j| lmax > 0.0 && vals[j] > 1e-12 * lmax)
        .collect();
    DMatrix::from_fn(samples.nrows(), kept.len(), |i, j| vecs[(i, kept[j])].re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_of_outer_product_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = real_vec(&mut rng, 5);
        let b = real_vec(&mut rng, 7);
        let m = DMatrix::from_fn(5, 7, |i, j| a[i] * b[j]);
        assert_eq!(rank(&m), 1);
        assert!(rank_gap(&m, 1) < 1e-12);
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = real_mat(&mut rng, 2, 4);
        let ker = kernel(&m);
        assert_eq!(ker.len(), 2);
        for v in &ker {
            let img = &m * v;
            assert!(img.iter().all(|x| x.norm() < 1e-12));
        }
    }

    #[test]
    fn hermitian_eigen_decomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 5, 8] {
            let x = DMatrix::from_fn(n, n, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let a = x.adjoint() * &x;
            let (vals, vecs) = hermitian_eigen(&a);
            // unitary eigenvectors
            let gram = vecs.adjoint() * &vecs;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[(i, j)] - cr(want)).norm() < 1e-12);
                }
            }
            // eigen equations hold tightly
            let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for j in 0..n {
                let v = vecs.column(j).into_owned();
                let resid = &a * &v - &v * cr(vals[j]);
                assert!(resid.norm() < 1e-12 * scale.max(1.0), "n={n} j={j}");
                assert!(vals[j] >= -1e-12 * scale);
            }
        }
    }

    #[test]
    fn dominant_direction_recovers_rank_one_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let b = real_vec(&mut rng, 6);
            let bn = &b / cr(b.norm());
            // columns equal up to complex scale plus reconstruction noise
            let mut m = DMatrix::zeros(6, 3);
            for j in 0..3 {
                let phase = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m.set_column(j, &(&bn * phase));
            }
            let d = dominant_left_direction(&m);
            assert!((bn.dotc(&d).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn projective_equality_ignores_complex_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = real_vec(&mut rng, 6);
        let w = v.map(|x| x * c(0.3, -1.7));
        assert!(proj_eq(&v, &w));
        let mut u = v.clone();
        u[0] += cr(1e-3);
        assert!(!proj_eq(&v, &u));
    }

    #[test]
    fn det_matches_lu_on_small_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=4 {
            let m = real_mat(&mut rng, n, n);
            let direct = det(&m);
            let lu = m.clone().lu().determinant();
            assert!((direct - lu).norm() < 1e-10);
        }
    }
}
