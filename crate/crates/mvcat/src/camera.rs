//! Projection matrices and their sampling. A camera is a full-rank
//! (h+1)×(N+1) matrix, inducing the rational map `P^N ⇢ P^h` away from its
//! center. Orthogonal and Stiefel frames are drawn through the Cayley
//! transform so they carry an explicit skew-symmetric chart, which later
//! feeds the dominance Jacobians.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::linalg::{self, cr};
use crate::projective::{wedge_power_unchecked, GeometryError};
use crate::C64;

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("rank deficient camera: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point lies on the center locus of camera {index}")]
    CenterIncidence { index: usize },
    #[error("singular matrix in {0}")]
    SingularMatrix(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

impl From<GeometryError> for CameraError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::RankDeficient { rank, expected } => {
                CameraError::RankDeficient { rank, expected }
            }
            GeometryError::DegenerateInput(s) => CameraError::DegenerateInput(s),
            GeometryError::DimensionMismatch(s) => CameraError::DimensionMismatch(s),
        }
    }
}

/// Relative threshold below which an image vector counts as hitting the
/// center locus.
pub const CENTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Camera {
    matrix: DMatrix<C64>,
}

impl Camera {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, CameraError> {
        let rows = matrix.nrows();
        if rows > matrix.ncols() {
            return Err(CameraError::DimensionMismatch(format!(
                "camera must have at most as many rows as columns, got {}x{}",
                rows,
                matrix.ncols()
            )));
        }
        let r = linalg::rank(&matrix);
        if r < rows {
            return Err(CameraError::RankDeficient { rank: r, expected: rows });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Target dimension h of `P^N ⇢ P^h`.
    pub fn image_dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    /// Source dimension N.
    pub fn source_dim(&self) -> usize {
        self.matrix.ncols() - 1
    }

    /// Apply to a point, failing when the image is numerically zero
    /// relative to the input.
    pub fn apply(&self, x: &DVector<C64>, index: usize) -> Result<DVector<C64>, CameraError> {
        let y = &self.matrix * x;
        if y.norm() < CENTER_TOL * self.matrix.norm() * x.norm() {
            return Err(CameraError::CenterIncidence { index });
        }
        Ok(y)
    }

    /// The induced map on lines: `∧²C` acting on Plücker coordinates.
    pub fn wedge(&self, k_plus_1: usize) -> DMatrix<C64> {
        wedge_power_unchecked(&self.matrix, k_plus_1)
    }

    /// Basis of the kernel: the center locus of the projection, of
    /// projective dimension N − h − 1.
    pub fn center(&self) -> Vec<DVector<C64>> {
        linalg::kernel(&self.matrix)
    }

    /// The center point of a camera with a zero-dimensional center.
    pub fn center_point(&self) -> Result<DVector<C64>, CameraError> {
        let k = self.center();
        if k.len() != 1 {
            return Err(CameraError::DimensionMismatch(format!(
                "center has dimension {}, expected a single point",
                k.len().saturating_sub(1)
            )));
        }
        Ok(k[0].clone())
    }
}

/// A tuple of n cameras `P^N ⇢ P^h` acting on k-planes.
#[derive(Debug, Clone)]
pub struct CameraArrangement {
    pub cameras: Vec<Camera>,
    pub source_dim: usize,
    pub image_dim: usize,
}

impl CameraArrangement {
    pub fn new(cameras: Vec<Camera>) -> Result<Self, CameraError> {
        if cameras.is_empty() {
            return Err(CameraError::DimensionMismatch("need at least one camera".into()));
        }
        let source_dim = cameras[0].source_dim();
        let image_dim = cameras[0].image_dim();
        for c in &cameras {
            if c.source_dim() != source_dim || c.image_dim() != image_dim {
                return Err(CameraError::DimensionMismatch(
                    "all cameras must share source and target dimensions".into(),
                ));
            }
        }
        Ok(Self { cameras, source_dim, image_dim })
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    /// Sample n real cameras with independent uniform entries in [−1, 1].
    /// Cameras onto `P^{N−1}` are re-drawn until all centers are pairwise
    /// distinct, so generic-position hypotheses hold almost surely.
    pub fn sample<R: Rng>(
        rng: &mut R,
        source_dim: usize,
        image_dim: usize,
        n: usize,
    ) -> Result<Self, CameraError> {
        assert!(image_dim <= source_dim);
        for _ in 0..50 {
            let cameras: Result<Vec<Camera>, CameraError> = (0..n)
                .map(|_| Camera::new(linalg::real_mat(rng, image_dim + 1, source_dim + 1)))
                .collect();
            let arr = Self::new(cameras?)?;
            if image_dim + 1 == source_dim {
                if !arr.centers_pairwise_distinct()? {
                    continue;
                }
            }
            return Ok(arr);
        }
        Err(CameraError::DegenerateInput(
            "failed to sample cameras with distinct centers".into(),
        ))
    }

    pub fn centers_pairwise_distinct(&self) -> Result<bool, CameraError> {
        let centers: Vec<DVector<C64>> = self
            .cameras
            .iter()
            .map(|c| c.center_point())
            .collect::<Result<_, _>>()?;
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                if linalg::proj_dist(&centers[i], &centers[j]) < 1e-8 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Cayley transform of a skew-symmetric matrix: O = (I + S)(I − S)^{−1},
/// a rotation without the −1 eigenvalue.
pub fn cayley(s: &DMatrix<C64>) -> Result<DMatrix<C64>, CameraError> {
    let n = s.nrows();
    assert_eq!(n, s.ncols());
    let i = DMatrix::identity(n, n);
    let denom = &i - s;
    let inv = linalg::inverse(&denom)
        .ok_or_else(|| CameraError::SingularMatrix("cayley transform".into()))?;
    Ok((&i + s) * inv)
}

/// Inverse Cayley transform: S = (O + I)^{−1}(O − I).
pub fn inverse_cayley(o: &DMatrix<C64>) -> Result<DMatrix<C64>, CameraError> {
    let n = o.nrows();
    assert_eq!(n, o.ncols());
    let i = DMatrix::identity(n, n);
    let inv = linalg::inverse(&(o + &i))
        .ok_or_else(|| CameraError::SingularMatrix("inverse cayley transform".into()))?;
    Ok(inv * (o - &i))
}

/// Differential of the Cayley transform at S in direction dS:
/// dO = 2 (I − S)^{−1} dS (I − S)^{−1}.
pub fn cayley_differential(
    s: &DMatrix<C64>,
    ds: &DMatrix<C64>,
) -> Result<DMatrix<C64>, CameraError> {
    let n = s.nrows();
    let i = DMatrix::identity(n, n);
    let inv = linalg::inverse(&(&i - s))
        .ok_or_else(|| CameraError::SingularMatrix("cayley differential".into()))?;
    Ok(&inv * ds * &inv * cr(2.0))
}

/// Skew-symmetric matrix from its strictly-upper-triangular entries, read
/// row by row.
pub fn skew_from_params(n: usize, params: &[f64]) -> DMatrix<C64> {
    assert_eq!(params.len(), n * (n - 1) / 2);
    let mut s = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            s[(i, j)] = cr(params[idx]);
            s[(j, i)] = cr(-params[idx]);
            idx += 1;
        }
    }
    s
}

/// Basis direction for the skew chart: the derivative of
/// [`skew_from_params`] with respect to its idx-th parameter.
pub fn skew_basis_direction(n: usize, idx: usize) -> DMatrix<C64> {
    let count = n * (n - 1) / 2;
    let mut params = vec![0.0; count];
    params[idx] = 1.0;
    skew_from_params(n, &params)
}

pub fn sample_skew<R: Rng>(rng: &mut R, n: usize) -> DMatrix<C64> {
    let count = n * (n - 1) / 2;
    let params: Vec<f64> = (0..count).map(|_| rng.gen_range(-1.0..1.0)).collect();
    skew_from_params(n, &params)
}

/// A random special orthogonal matrix in the image of the Cayley chart.
pub fn sample_rotation<R: Rng>(rng: &mut R, n: usize) -> Result<DMatrix<C64>, CameraError> {
    cayley(&sample_skew(rng, n))
}

/// A rows×cols matrix with orthonormal rows (rows ≤ cols) or orthonormal
/// columns (cols ≤ rows), cut from a Cayley-sampled rotation of size
/// max(rows, cols).
pub fn sample_stiefel<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<C64>, CameraError> {
    let n = rows.max(cols);
    let o = sample_rotation(rng, n)?;
    Ok(o.view((0, 0), (rows, cols)).into_owned())
}
