//! Independent QFI estimate from density matrices in a truncated Fock basis.
//!
//! The Gaussian state is rebuilt as `ρ = U(φ) S(r) ρ_th S(r)† U(φ)†` from
//! the Williamson form of its covariance matrix, and the QFI is read off the
//! Bures distance between the states at `σ ± hσ'`:
//!
//! ```text
//! QFI ≈ 8 (1 - √F(ρ₋, ρ₊)) / (2h)²
//! ```
//!
//! with a Richardson step at `h/2`. This is slow and only meant as a check on
//! the closed-form [`quantum_fisher`](super::quantum_fisher).

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

/// Settings for [`qfi_oracle_fock_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockOracleOptions {
    /// Fock-space dimension to start from.
    pub cutoff: usize,
    /// Cutoff increment while checking convergence.
    pub cutoff_step: usize,
    /// Give up above this cutoff.
    pub max_cutoff: usize,
    /// Finite-difference step relative to `‖σ‖ / ‖σ'‖`.
    pub rel_step: f64,
    /// Relative change between successive cutoffs accepted as converged.
    pub convergence: f64,
    /// Largest population allowed outside the truncated space.
    pub max_leakage: f64,
}

impl Default for FockOracleOptions {
    fn default() -> Self {
        FockOracleOptions {
            cutoff: 60,
            cutoff_step: 20,
            max_cutoff: 200,
            rel_step: 1e-3,
            convergence: 1e-4,
            max_leakage: 1e-8,
        }
    }
}

/// Smallest cutoff the oracle accepts.
pub const MIN_CUTOFF: usize = 40;

/// QFI of a single-mode Gaussian state from Fock-space fidelities, starting
/// at `cutoff` and increasing it until the estimate settles.
pub fn qfi_oracle_fock(
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    cutoff: usize,
) -> Result<f64> {
    qfi_oracle_fock_with(
        sigma,
        sens,
        &FockOracleOptions {
            cutoff,
            ..Default::default()
        },
    )
}

pub fn qfi_oracle_fock_with(
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    opts: &FockOracleOptions,
) -> Result<f64> {
    if opts.cutoff < MIN_CUTOFF {
        return Err(Error::invalid(
            "cutoff",
            format!("must be >= {MIN_CUTOFF}, got {}", opts.cutoff),
        ));
    }
    if sigma.dim() != 2 || sens.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: "2x2 state and sensitivity".into(),
            found: format!(
                "{}x{} and {}x{}",
                sigma.dim(),
                sigma.dim(),
                sens.nrows(),
                sens.ncols()
            ),
        });
    }
    let s = Matrix2::new(
        sigma.matrix()[(0, 0)],
        sigma.matrix()[(0, 1)],
        sigma.matrix()[(1, 0)],
        sigma.matrix()[(1, 1)],
    );
    let sp = Matrix2::new(
        sens[(0, 0)],
        0.5 * (sens[(0, 1)] + sens[(1, 0)]),
        0.5 * (sens[(0, 1)] + sens[(1, 0)]),
        sens[(1, 1)],
    );
    if sp.amax() == 0.0 {
        return Ok(0.0);
    }
    if s.determinant() <= 0.25 * (1.0 + 1e-9) {
        return Err(Error::PureStateSingularity {
            denominator: 2.0 * s.determinant().powi(2) - 0.125,
        });
    }

    let mut h = opts.rel_step * s.amax() / sp.amax();
    while !(is_physical_2x2(&(s + sp * h)) && is_physical_2x2(&(s - sp * h))) {
        h *= 0.5;
        if h < 1e-12 * s.amax() / sp.amax() {
            return Err(Error::PureStateSingularity {
                denominator: 2.0 * s.determinant().powi(2) - 0.125,
            });
        }
    }

    let mut cutoff = opts.cutoff;
    loop {
        let leakage = gaussian_density(&s, cutoff)?.1;
        if leakage <= opts.max_leakage {
            break;
        }
        if cutoff + opts.cutoff_step > opts.max_cutoff {
            return Err(Error::FockTruncation { cutoff, leakage });
        }
        cutoff += opts.cutoff_step;
    }

    let mut previous = richardson_qfi(&s, &sp, h, cutoff)?;
    loop {
        let next_cutoff = cutoff + opts.cutoff_step;
        if next_cutoff > opts.max_cutoff {
            let leakage = gaussian_density(&s, cutoff)?.1;
            return Err(Error::FockTruncation { cutoff, leakage });
        }
        let current = richardson_qfi(&s, &sp, h, next_cutoff)?;
        if (current - previous).abs() <= opts.convergence * current.abs().max(f64::MIN_POSITIVE) {
            return Ok(current.max(0.0));
        }
        previous = current;
        cutoff = next_cutoff;
    }
}

fn is_physical_2x2(s: &Matrix2<f64>) -> bool {
    s[(0, 0)] > 0.0 && s.determinant() > 0.25
}

/// `(4 Q(h/2) - Q(h)) / 3`, cancelling the `O(h²)` bias of the symmetric
/// difference.
fn richardson_qfi(s: &Matrix2<f64>, sp: &Matrix2<f64>, h: f64, cutoff: usize) -> Result<f64> {
    let coarse = bures_qfi(s, sp, h, cutoff)?;
    let fine = bures_qfi(s, sp, 0.5 * h, cutoff)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn bures_qfi(s: &Matrix2<f64>, sp: &Matrix2<f64>, h: f64, cutoff: usize) -> Result<f64> {
    let (minus, _) = gaussian_density(&(s - sp * h), cutoff)?;
    let (plus, _) = gaussian_density(&(s + sp * h), cutoff)?;
    let root_f = root_fidelity(&minus, &plus);
    Ok(8.0 * (1.0 - root_f) / (2.0 * h).powi(2))
}

/// `√F(ρ, τ) = ‖√ρ √τ‖₁`.
pub(crate) fn root_fidelity(rho: &DMatrix<Complex64>, tau: &DMatrix<Complex64>) -> f64 {
    let product = psd_sqrt(rho) * psd_sqrt(tau);
    product.singular_values().sum()
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let roots = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0)),
    );
    v * roots * v.adjoint()
}

/// Annihilation operator on `dim` Fock states.
fn annihilation(dim: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = (k as f64).sqrt();
    }
    a
}

/// Normalized density matrix of the zero-mean Gaussian state with
/// covariance `s`, truncated to `cutoff` Fock states, together with the
/// population that fell outside the truncation.
pub(crate) fn gaussian_density(
    s: &Matrix2<f64>,
    cutoff: usize,
) -> Result<(DMatrix<Complex64>, f64)> {
    let det = s.determinant();
    if !(s[(0, 0)] > 0.0 && det >= 0.25 * (1.0 - 1e-12)) {
        return Err(Error::NonPhysical {
            time: None,
            min_eigenvalue: det.max(0.0).sqrt() - 0.5,
        });
    }
    let nu = det.sqrt();
    let n_th = (nu - 0.5).max(0.0);

    // σ = ν R(φ) diag(e^{-2r}, e^{2r}) R(φ)ᵀ, (cos φ, sin φ) the narrow axis.
    let eig = s.symmetric_eigen();
    let (i_min, i_max) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let r = 0.25 * (eig.eigenvalues[i_max] / eig.eigenvalues[i_min]).ln();
    let axis = eig.eigenvectors.column(i_min);
    let phi = axis[1].atan2(axis[0]);

    // Squeeze in a doubled space so the truncated block is accurate.
    let big = 2 * cutoff;
    let a = annihilation(big);
    let a2 = &a * &a;
    let generator = (&a2 - a2.transpose()) * (0.5 * r);
    let squeeze = generator.exp();
    let q = n_th / (n_th + 1.0);
    let thermal = DMatrix::from_fn(big, big, |i, j| {
        if i == j {
            (1.0 - q) * q.powi(i as i32)
        } else {
            0.0
        }
    });
    let rho_big = &squeeze * thermal * squeeze.transpose();

    let kept: f64 = (0..cutoff).map(|k| rho_big[(k, k)]).sum();
    let leakage = (1.0 - kept).max(0.0);
    let rho = DMatrix::from_fn(cutoff, cutoff, |j, k| {
        let phase = Complex64::from_polar(1.0, phi * (j as f64 - k as f64));
        phase * rho_big[(j, k)] / kept
    });
    Ok((rho, leakage))
}
