//! Catalogue of multiview and resectioning varieties in low dimensions.
//!
//! The crate computes, at desk scale, the standard invariants of the
//! varieties obtained by projecting points, lines, and planes of `P^N`
//! (`N ≤ 3`) through `n` generic cameras: rational parametrizations,
//! rank-condition membership tests, multidegrees, and Euclidean distance
//! degrees (EDDs), together with the linear-isomorphism and dominance checks
//! that relate the 33 catalogued families to 14 representatives.
//!
//! Modules are layered bottom-up:
//!
//! * [`projective`] — exterior algebra: Plücker embeddings, wedge powers of
//!   matrices, cross products, and the degree-2 ruling of the quadric through
//!   three pairwise disjoint lines;
//! * [`camera`] — cameras, centers, back-projections, Cayley/Stiefel
//!   sampling, and dual cameras;
//! * [`catalogue`] — the 33 families, their Schubert anchors, dimensions,
//!   membership tests, and ED-class representatives;
//! * [`polysys`] — multivariate polynomials, rational parametrizations in
//!   affine patches, ED-critical and slice systems;
//! * [`solver`] — total-degree homotopy continuation plus two independent
//!   root-counting oracles (companion matrix, bivariate resultant);
//! * [`metrics`] — multidegrees, EDDs, ED-equivalence and dominance
//!   verification, singular-point detection;
//! * [`resectioning`] — dual-camera arrangements, determinantal generators,
//!   the `R^{1,1}` singular locus, and the Möbius alignment EDD;
//! * [`claims`] — the registry of closed-form degree claims the CLI and the
//!   acceptance suite verify against.

pub mod camera;
pub mod catalogue;
pub mod claims;
pub mod linalg;
pub mod metrics;
pub mod polysys;
pub mod projective;
pub mod resectioning;
pub mod solver;

/// Complex scalar used throughout; real inputs are promoted.
pub type C64 = num_complex::Complex<f64>;

/// Relative threshold for numerical rank decisions: singular values at or
/// below `REL_RANK_TOL × σ_max` count as zero.
pub const REL_RANK_TOL: f64 = 1e-8;

/// Relative tolerance for projective equality after normalizing by the
/// largest-modulus coordinate.
pub const PROJ_CMP_TOL: f64 = 1e-8;
