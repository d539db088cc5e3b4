//! The catalogue of two-dimensional reflection representations of dihedral
//! groups — the rank-two building blocks everything else is glued from.
//!
//! For the finite dihedral group of order `2m` with generators `r`, `t` the
//! representation `rho_k` (`1 <= k <= m/2`) acts in the basis `(b_r, b_t)` by
//!
//! ```text
//! r = [ -1  2cos(k pi/m) ]      t = [       1        0 ]
//!     [  0       1       ]          [ 2cos(k pi/m)  -1 ]
//! ```
//!
//! For the infinite dihedral group, `varrho(x, y)` acts by the same shape
//! with couplings `x` (on `r`) and `y` (on `t`); up to isomorphism only the
//! product `x*y` matters, and `varrho_z` denotes the symmetric choice
//! `x = y = u` with `u^2 = z` (principal square root, positive on positive
//! reals).  The two directed degenerations `x=1,y=0` and `x=0,y=1` each have
//! a one-dimensional subrepresentation spanned by one basis vector.

use crate::linalg::{approx_eq_c, re64, CMat, C_ONE, C_ZERO};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DihedralError {
    #[error("k = {k} out of range for order m = {m} (need 1 <= k <= m/2)")]
    KOutOfRange { m: u32, k: u32 },
    #[error("arguments of the product test must be nonzero")]
    ZeroArgument,
    #[error("no invariant form for this parameter: {0}")]
    NotApplicable(String),
}

/// Which endpoint of an ordered pair `(first, second)` a directed parameter
/// distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSide {
    First,
    Second,
}

impl PairSide {
    pub fn other(self) -> PairSide {
        match self {
            PairSide::First => PairSide::Second,
            PairSide::Second => PairSide::First,
        }
    }
}

/// A rank-two representation parameter relative to an ordered generator pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DihedralParam {
    /// `rho_k` of the finite dihedral group of order `2m`.
    RhoK { m: u32, k: u32 },
    /// `varrho_z` of the infinite dihedral group, couplings `u = sqrt(z)`.
    VarrhoZ { z: Complex64 },
    /// Directed degeneration: the basis vector on `sub` spans an invariant
    /// line (couplings `1` towards `sub`, `0` away from it).
    VarrhoDir { sub: PairSide },
}

/// `cos(k pi / m)`, exactly zero when `2k = m`.
pub fn cos_k_pi_m(k: u32, m: u32) -> f64 {
    if 2 * k == m {
        0.0
    } else {
        (k as f64 * PI / m as f64).cos()
    }
}

/// Principal square root of `z`; positive on the positive real axis.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    z.sqrt()
}

impl DihedralParam {
    pub fn rho(m: u32, k: u32) -> Result<Self, DihedralError> {
        if m < 2 || k < 1 || 2 * k > m {
            return Err(DihedralError::KOutOfRange { m, k });
        }
        Ok(DihedralParam::RhoK { m, k })
    }

    pub fn varrho_z(z: Complex64) -> Self {
        DihedralParam::VarrhoZ { z }
    }

    /// Coupling coefficient `c` in `g . b_other = b_other + c * b_target`,
    /// where `g` is the generator sitting on `actor`.
    pub fn coupling_of_actor(&self, actor: PairSide) -> Complex64 {
        match self {
            DihedralParam::RhoK { m, k } => re64(2.0 * cos_k_pi_m(*k, *m)),
            DihedralParam::VarrhoZ { z } => principal_sqrt(*z),
            DihedralParam::VarrhoDir { sub } => {
                if actor == *sub {
                    C_ONE
                } else {
                    C_ZERO
                }
            }
        }
    }
}

/// The pair of generator matrices in the basis `(b_first, b_second)`.
#[derive(Clone, Debug)]
pub struct PairMatrices {
    pub first: CMat,
    pub second: CMat,
}

/// Matrices of `varrho(x, y)`.
pub fn varrho_matrices(x: Complex64, y: Complex64) -> PairMatrices {
    let first = CMat::from_rows(&[vec![-C_ONE, x], vec![C_ZERO, C_ONE]]);
    let second = CMat::from_rows(&[vec![C_ONE, C_ZERO], vec![y, -C_ONE]]);
    PairMatrices { first, second }
}

/// Matrices of `rho_k` for the finite dihedral group of order `2m`.
pub fn rho_k_matrices(m: u32, k: u32) -> Result<PairMatrices, DihedralError> {
    if m < 2 || k < 1 || 2 * k > m {
        return Err(DihedralError::KOutOfRange { m, k });
    }
    let c = re64(2.0 * cos_k_pi_m(k, m));
    Ok(varrho_matrices(c, c))
}

/// Matrices of an arbitrary catalogue parameter.
pub fn param_matrices(p: &DihedralParam) -> PairMatrices {
    match p {
        DihedralParam::RhoK { m, k } => {
            rho_k_matrices(*m, *k).expect("validated at construction")
        }
        DihedralParam::VarrhoZ { z } => {
            let u = principal_sqrt(*z);
            varrho_matrices(u, u)
        }
        DihedralParam::VarrhoDir { sub: PairSide::First } => varrho_matrices(C_ONE, C_ZERO),
        DihedralParam::VarrhoDir { sub: PairSide::Second } => varrho_matrices(C_ZERO, C_ONE),
    }
}

/// Irreducibility of a catalogue parameter:
/// `rho_k` is irreducible iff `k < m/2`; `varrho_z` iff `z` avoids 0 and 4;
/// the directed degenerations never are.
pub fn is_irreducible_dihedral(p: &DihedralParam, tol: f64) -> bool {
    match p {
        DihedralParam::RhoK { m, k } => 2 * k < *m,
        DihedralParam::VarrhoZ { z } => {
            !approx_eq_c(*z, C_ZERO, tol) && !approx_eq_c(*z, re64(4.0), tol)
        }
        DihedralParam::VarrhoDir { .. } => false,
    }
}

/// `varrho(x, y)` and `varrho(x', y')` with all couplings nonzero are
/// isomorphic exactly when the products `x*y` and `x'*y'` agree.
pub fn iso_varrho(
    x: Complex64,
    y: Complex64,
    x2: Complex64,
    y2: Complex64,
    tol: f64,
) -> Result<bool, DihedralError> {
    if [x, y, x2, y2].iter().any(|v| v.norm() <= tol) {
        return Err(DihedralError::ZeroArgument);
    }
    Ok(approx_eq_c(x * y, x2 * y2, tol))
}

/// The invariant bilinear form of a catalogue parameter in the basis
/// `(b_first, b_second)`, normalised so the first nonzero diagonal entry
/// is 1.  Unique up to scalar for the irreducible parameters.
pub fn invariant_form_dihedral(p: &DihedralParam) -> Result<CMat, DihedralError> {
    match p {
        DihedralParam::RhoK { m, k } => {
            if 2 * k == *m {
                return Err(DihedralError::NotApplicable(
                    "parameter splits into two lines carrying distinct signs".into(),
                ));
            }
            let c = re64(cos_k_pi_m(*k, *m));
            Ok(CMat::from_rows(&[vec![C_ONE, -c], vec![-c, C_ONE]]))
        }
        DihedralParam::VarrhoZ { z } => {
            if z.norm() == 0.0 {
                return Err(DihedralError::NotApplicable(
                    "parameter splits into two lines carrying distinct signs".into(),
                ));
            }
            let half_u = principal_sqrt(*z) * re64(0.5);
            Ok(CMat::from_rows(&[vec![C_ONE, -half_u], vec![-half_u, C_ONE]]))
        }
        DihedralParam::VarrhoDir { sub } => {
            // The invariant line is the radical's complement: the form is
            // supported on the basis vector *not* spanning the subrepresentation.
            let b = match sub {
                PairSide::First => {
                    CMat::from_rows(&[vec![C_ZERO, C_ZERO], vec![C_ZERO, C_ONE]])
                }
                PairSide::Second => {
                    CMat::from_rows(&[vec![C_ONE, C_ZERO], vec![C_ZERO, C_ZERO]])
                }
            };
            Ok(b)
        }
    }
}
