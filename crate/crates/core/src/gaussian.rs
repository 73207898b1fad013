//! Gaussian-state linear algebra: covariance matrices, the symplectic form,
//! beam-splitter transforms and single-mode reductions.
//!
//! Conventions: quadratures are ordered mode by mode as `(x_0, p_0, x_1, p_1,
//! ...)`, and `σ_ij = <{r_i, r_j}>/2` with ħ = 1, so the vacuum has
//! `σ = I/2`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalue tolerance for the uncertainty relation `σ + iΩ/2 ≥ 0`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Entrywise tolerance for `S Ω Sᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// Relative tolerance used when accepting a matrix as symmetric.
const SYMMETRY_TOL: f64 = 1e-12;

/// What a mode slot in the 6×6 system represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeRole {
    Mechanical,
    Cavity1,
    Cavity2,
    /// Beam-splitter output occupying the cavity-1 slot, quadratures
    /// `((X1+X2)/√2, (Y1+Y2)/√2)` at a 50:50 splitting.
    EprPlus,
    /// Beam-splitter output occupying the cavity-2 slot, quadratures
    /// `((X2-X1)/√2, (Y2-Y1)/√2)` at a 50:50 splitting.
    EprMinus,
}

impl ModeRole {
    pub fn is_optical(self) -> bool {
        !matches!(self, ModeRole::Mechanical)
    }
}

/// Zero-based mode number plus what it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub index: usize,
    pub role: ModeRole,
}

impl ModeIndex {
    pub const MECHANICAL: ModeIndex = ModeIndex::new(0, ModeRole::Mechanical);
    pub const CAVITY1: ModeIndex = ModeIndex::new(1, ModeRole::Cavity1);
    pub const CAVITY2: ModeIndex = ModeIndex::new(2, ModeRole::Cavity2);
    pub const EPR_PLUS: ModeIndex = ModeIndex::new(1, ModeRole::EprPlus);
    pub const EPR_MINUS: ModeIndex = ModeIndex::new(2, ModeRole::EprMinus);

    pub const fn new(index: usize, role: ModeRole) -> Self {
        ModeIndex { index, role }
    }

    fn check(self, dim: usize) -> Result<()> {
        if 2 * self.index + 1 < dim {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange {
                index: self.index,
                dim,
            })
        }
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_even_square(m: &DMatrix<f64>) -> Result<usize> {
    let (r, c) = m.shape();
    if r != c || r == 0 || r % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: "non-empty square matrix of even dimension".into(),
            found: format!("{r}x{c}"),
        });
    }
    Ok(r)
}

/// Real symmetric matrix of quadrature second moments.
#[derive(Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Accepts `m` if it is square, even-dimensional and symmetric up to
    /// rounding; the stored matrix is exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_even_square(&m)?;
        let scale = m.amax().max(1.0);
        let asymmetry = max_asymmetry(&m);
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(CovarianceMatrix(symmetrize(m)))
    }

    /// Vacuum of `modes` modes, `I/2`.
    pub fn vacuum(modes: usize) -> Self {
        CovarianceMatrix(DMatrix::identity(2 * modes, 2 * modes) * 0.5)
    }

    /// Thermal state with `n` mean excitations in every mode.
    pub fn thermal(modes: usize, n: f64) -> Self {
        CovarianceMatrix(DMatrix::identity(2 * modes, 2 * modes) * (n + 0.5))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        CovarianceMatrix::new(DMatrix::from_fn(
            n,
            n,
            |i, j| if i == j { diag[i] } else { 0.0 },
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_physical(&self) -> bool {
        min_uncertainty_eigenvalue(&self.0) >= -PHYSICALITY_TOL
    }
}

impl fmt::Debug for CovarianceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CovarianceMatrix{}", self.0)
    }
}

pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}

/// The block-diagonal symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm(DMatrix<f64>);

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        let dim = 2 * modes;
        let mut omega = DMatrix::zeros(dim, dim);
        for k in 0..modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        SymplecticForm(omega)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// A real matrix `S` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform(DMatrix<f64>);

impl SymplecticTransform {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_even_square(&m)?;
        let deviation = symplectic_deviation(&m);
        if deviation > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic { deviation });
        }
        Ok(SymplecticTransform(m))
    }

    pub fn identity(modes: usize) -> Self {
        SymplecticTransform(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Max entrywise deviation of `S Ω Sᵀ` from `Ω`.
    pub fn deviation(&self) -> f64 {
        symplectic_deviation(&self.0)
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &SymplecticTransform) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.dim(), self.dim()),
                found: format!("{}x{}", other.dim(), other.dim()),
            });
        }
        SymplecticTransform::new(&self.0 * &other.0)
    }
}

fn symplectic_deviation(s: &DMatrix<f64>) -> f64 {
    let omega = SymplecticForm::new(s.nrows() / 2);
    (s * omega.matrix() * s.transpose() - omega.matrix()).amax()
}

/// Beam splitter mixing two optical modes with mixing angle `angle`:
/// `a' = cos(angle) a + sin(angle) b`, `b' = -sin(angle) a + cos(angle) b`,
/// identity on every other mode. At `angle = π/4` the outputs carry the sum
/// and difference quadratures `(X_a ± X_b)/√2`, `(Y_a ± Y_b)/√2`.
pub fn beam_splitter_transform(
    angle: f64,
    total_modes: usize,
    mode_a: ModeIndex,
    mode_b: ModeIndex,
) -> Result<SymplecticTransform> {
    if !angle.is_finite() {
        return Err(Error::invalid(
            "angle",
            format!("must be finite, got {angle}"),
        ));
    }
    let dim = 2 * total_modes;
    mode_a.check(dim)?;
    mode_b.check(dim)?;
    if mode_a.index == mode_b.index {
        return Err(Error::invalid(
            "mode_b",
            "beam splitter needs two distinct modes",
        ));
    }
    if !mode_a.role.is_optical() || !mode_b.role.is_optical() {
        return Err(Error::invalid(
            "mode_a",
            "beam splitter acts on optical modes only",
        ));
    }
    let (sin, cos) = angle.sin_cos();
    let mut s = DMatrix::identity(dim, dim);
    for q in 0..2 {
        let a = 2 * mode_a.index + q;
        let b = 2 * mode_b.index + q;
        s[(a, a)] = cos;
        s[(a, b)] = sin;
        s[(b, a)] = -sin;
        s[(b, b)] = cos;
    }
    Ok(SymplecticTransform(s))
}

/// `S σ Sᵀ`.
pub fn apply_symplectic(
    s: &SymplecticTransform,
    sigma: &CovarianceMatrix,
) -> Result<CovarianceMatrix> {
    let m = congruence(s, sigma.matrix())?;
    Ok(CovarianceMatrix(symmetrize(m)))
}

/// `S M Sᵀ` for an arbitrary (e.g. sensitivity) matrix of matching size.
pub fn congruence(s: &SymplecticTransform, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s.dim() != m.nrows() || m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", s.dim(), s.dim()),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(s.matrix() * m * s.matrix().transpose())
}

/// The 2×2 diagonal block of `mode`: the reduced state of that mode.
pub fn extract_mode(sigma: &CovarianceMatrix, mode: ModeIndex) -> Result<CovarianceMatrix> {
    let block = extract_block(sigma.matrix(), mode)?;
    Ok(CovarianceMatrix(block))
}

/// Same as [`extract_mode`] for a plain matrix.
pub fn extract_block(m: &DMatrix<f64>, mode: ModeIndex) -> Result<DMatrix<f64>> {
    mode.check(m.nrows())?;
    let k = 2 * mode.index;
    Ok(m.view((k, k), (2, 2)).into_owned())
}

/// Smallest eigenvalue of the Hermitian matrix `σ + iΩ/2`.
pub fn min_uncertainty_eigenvalue(sigma: &DMatrix<f64>) -> f64 {
    let omega = SymplecticForm::new(sigma.nrows() / 2);
    let h = DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| {
        Complex64::new(sigma[(i, j)], 0.5 * omega.matrix()[(i, j)])
    });
    h.symmetric_eigenvalues().min()
}

/// Uncertainty-relation check: `σ + iΩ/2 ≥ -1e-9`.
pub fn check_physicality(sigma: &DMatrix<f64>) -> Result<bool> {
    check_even_square(sigma)?;
    let asymmetry = max_asymmetry(sigma);
    if asymmetry > SYMMETRY_TOL * sigma.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(min_uncertainty_eigenvalue(sigma) >= -PHYSICALITY_TOL)
}
