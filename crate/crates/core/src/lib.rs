//! Representations of finite-rank Coxeter groups spanned by reflection
//! eigenvectors.
//!
//! The crate builds such representations from a small combinatorial datum
//! (one dihedral parameter per pair of generators, one nonzero scalar per
//! ordered pair), classifies them by a graph together with a character on
//! the first homology of that graph, and analyses their structure:
//! irreducibility, invariant forms, duals, and factorisations through
//! quotient Coxeter groups.
//!
//! Module map:
//! * [`linalg`] — small dense complex matrices, tolerance-aware elimination;
//! * [`coxeter`] — Coxeter matrices and their labelled graphs;
//! * [`homology`] — spanning forests, circuit bases, edge characters;
//! * [`dihedral`] — the catalogue of rank-two building blocks;
//! * [`ggr`] — construction and classification of the representations;
//! * [`analysis`] — fixed spaces, invariant forms, duals, direction order;
//! * [`factor`] — admissible partitions and reflection factorisations;
//! * [`random`] — seeded generators for randomized suites.

pub mod analysis;
pub mod coxeter;
pub mod dihedral;
pub mod factor;
pub mod ggr;
pub mod homology;
pub mod linalg;
pub mod random;

/// Default numeric tolerance for rank decisions and comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default search bound on the order `m` when recognising `4cos^2(k pi/m)`.
pub const DEFAULT_ANGLE_MAX_M: u32 = 60;

/// Numeric policy shared by the higher-level operations.
#[derive(Clone, Copy, Debug)]
pub struct Settings {
    /// Comparison / pivot tolerance.
    pub tol: f64,
    /// Largest order tried by the rational-angle search on infinite bonds.
    pub angle_max_m: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { tol: DEFAULT_TOL, angle_max_m: DEFAULT_ANGLE_MAX_M }
    }
}

impl Settings {
    pub fn with_tol(tol: f64) -> Self {
        Settings { tol, ..Settings::default() }
    }
}
