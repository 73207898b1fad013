//! Fisher information for Λ carried by a single Gaussian mode.
//!
//! The classical Fisher information (CFI) is that of a general-dyne Gaussian
//! POVM with covariance `σ_m = R(θ) diag(l/2, 1/(2l)) R(θ)ᵀ`; the quantum
//! Fisher information (QFI) is the closed form for single-mode mixed
//! Gaussian states. Both are per shot, for Λ in 1/s, so they carry units of
//! s².

pub mod fock;

use nalgebra::{DMatrix, Matrix2};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::gaussian::{
    beam_splitter_transform, congruence, extract_block, CovarianceMatrix, ModeIndex,
};

pub use fock::{qfi_oracle_fock, qfi_oracle_fock_with, FockOracleOptions};

/// Smallest POVM squeezing parameter; `l → 0` is homodyne of `x_θ`.
pub const L_MIN: f64 = 1e-8;
/// Largest POVM squeezing parameter; `l → ∞` is homodyne of `p_θ`.
pub const L_MAX: f64 = 1e8;

/// Below this `|2 det(σ)² - 1/8|` the state counts as pure.
pub const PURITY_GUARD: f64 = 1e-12;

/// Which optical mode is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Cavity 1 alone.
    Local,
    /// One output of a beam splitter mixing cavities 1 and 2.
    Epr,
}

/// Which beam-splitter output is measured in the EPR scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EprOutput {
    /// `((X1+X2)/√2, (Y1+Y2)/√2)` at a 50:50 splitting.
    Plus,
    /// `((X2-X1)/√2, (Y2-Y1)/√2)` at a 50:50 splitting.
    Minus,
    /// Whichever of the two gives the larger CFI, per point.
    Best,
}

impl EprOutput {
    pub fn as_str(self) -> &'static str {
        match self {
            EprOutput::Plus => "plus",
            EprOutput::Minus => "minus",
            EprOutput::Best => "best",
        }
    }

    fn mode(self) -> ModeIndex {
        match self {
            EprOutput::Minus => ModeIndex::EPR_MINUS,
            _ => ModeIndex::EPR_PLUS,
        }
    }
}

impl std::str::FromStr for EprOutput {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plus" => Ok(EprOutput::Plus),
            "minus" => Ok(EprOutput::Minus),
            "best" => Ok(EprOutput::Best),
            other => Err(format!(
                "unknown EPR output `{other}` (expected plus, minus or best)"
            )),
        }
    }
}

/// A Gaussian POVM on one optical mode, possibly after a beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSpec {
    pub scheme: Scheme,
    /// POVM squeezing; 1 is heterodyne.
    pub l: f64,
    /// POVM rotation angle, radians.
    pub theta: f64,
    /// Beam-splitter angle, radians (EPR only).
    pub phi_bs: f64,
    /// Measured beam-splitter output (EPR only).
    pub epr_output: EprOutput,
}

impl MeasurementSpec {
    pub fn local(l: f64, theta: f64) -> Self {
        MeasurementSpec {
            scheme: Scheme::Local,
            l,
            theta,
            phi_bs: 0.0,
            epr_output: EprOutput::Plus,
        }
    }

    pub fn epr(l: f64, theta: f64, phi_bs: f64, epr_output: EprOutput) -> Self {
        MeasurementSpec {
            scheme: Scheme::Epr,
            l,
            theta,
            phi_bs,
            epr_output,
        }
    }

    /// The same POVM applied to cavity 1 directly.
    pub fn as_local(&self) -> Self {
        MeasurementSpec::local(self.l, self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        check_l(self.l)?;
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        if !self.phi_bs.is_finite() {
            return Err(Error::invalid("phi_bs", "must be finite"));
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self.scheme {
            Scheme::Local => "local",
            Scheme::Epr => "epr",
        }
    }
}

fn check_l(l: f64) -> Result<()> {
    if (L_MIN..=L_MAX).contains(&l) {
        Ok(())
    } else {
        Err(Error::invalid(
            "l",
            format!("must lie in [{L_MIN:e}, {L_MAX:e}], got {l}"),
        ))
    }
}

/// Maps `l` into `[L_MIN, L_MAX]`, so that `0` and `∞` select the two
/// homodyne limits.
pub fn clamp_l(l: f64) -> f64 {
    if l.is_nan() {
        l
    } else {
        l.clamp(L_MIN, L_MAX)
    }
}

/// `R(θ) diag(l/2, 1/(2l)) R(θ)ᵀ` with `R(θ) = [[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn measurement_covariance(l: f64, theta: f64) -> Result<CovarianceMatrix> {
    check_l(l)?;
    if !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite"));
    }
    let (s, c) = theta.sin_cos();
    let r = Matrix2::new(c, -s, s, c);
    let m = r * Matrix2::new(0.5 * l, 0.0, 0.0, 0.5 / l) * r.transpose();
    CovarianceMatrix::new(DMatrix::from_column_slice(2, 2, m.as_slice()))
}

fn as_matrix2(m: &DMatrix<f64>, what: &'static str) -> Result<Matrix2<f64>> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: format!("2x2 {what}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
}

/// `½ tr[(σ_p⁻¹ σ')²]` with `σ_p = σ + σ_m`, for an explicit POVM covariance.
pub fn classical_fisher_with(
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    sigma_m: &DMatrix<f64>,
) -> Result<f64> {
    let s = as_matrix2(sigma.matrix(), "state covariance")?;
    let sp = as_matrix2(sens, "sensitivity")?;
    let sm = as_matrix2(sigma_m, "measurement covariance")?;
    let total = s + sm;
    let det = total.determinant();
    if det.partial_cmp(&(f64::EPSILON * total.amax().powi(2))) != Some(std::cmp::Ordering::Greater)
    {
        return Err(Error::Singular {
            context: "sigma + sigma_m in classical Fisher information",
        });
    }
    let x = total.try_inverse().ok_or(Error::Singular {
        context: "sigma + sigma_m in classical Fisher information",
    })? * sp;
    Ok((0.5 * (x * x).trace()).max(0.0))
}

/// Classical Fisher information of the POVM described by `spec` (only `l`
/// and `theta` are used) on a 2×2 state with sensitivity `sens = ∂σ/∂Λ`.
pub fn classical_fisher(
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    spec: &MeasurementSpec,
) -> Result<f64> {
    let sm = measurement_covariance(spec.l, spec.theta)?;
    classical_fisher_with(sigma, sens, sm.matrix())
}

/// Quantum Fisher information of a mixed single-mode Gaussian state,
///
/// ```text
/// [tr((adj(σ') σ)²) + ½ det σ'] / [2 det(σ)² - 1/8]
/// ```
///
/// where `adj(σ')` is the adjugate, which equals `det(σ') σ'⁻¹` when `σ'` is
/// invertible and keeps the expression regular when it is not.
pub fn quantum_fisher(sigma: &CovarianceMatrix, sens: &DMatrix<f64>) -> Result<f64> {
    let s = as_matrix2(sigma.matrix(), "state covariance")?;
    let sp = as_matrix2(sens, "sensitivity")?;
    if !sigma.is_physical() {
        return Err(Error::NonPhysical {
            time: None,
            min_eigenvalue: crate::gaussian::min_uncertainty_eigenvalue(sigma.matrix()),
        });
    }
    let det = s.determinant();
    let denominator = 2.0 * det * det - 0.125;
    if denominator.abs() <= PURITY_GUARD {
        return Err(Error::PureStateSingularity { denominator });
    }
    let adj = Matrix2::new(sp[(1, 1)], -sp[(0, 1)], -sp[(1, 0)], sp[(0, 0)]);
    let m = adj * s;
    let numerator = (m * m).trace() + 0.5 * sp.determinant();
    Ok((numerator / denominator).max(0.0))
}

/// Fisher information of one strategy at one time (or in the steady state).
#[derive(Debug, Clone, PartialEq)]
pub struct FisherResult {
    /// Seconds; `None` for a steady-state evaluation.
    pub time: Option<f64>,
    pub cfi: f64,
    /// `None` when the measured mode is numerically pure.
    pub qfi: Option<f64>,
    pub scheme: Scheme,
    /// Beam-splitter output actually measured (EPR only).
    pub epr_output: Option<EprOutput>,
    /// Label of the input noise the state was driven by.
    pub noise: &'static str,
}

impl FisherResult {
    pub fn pure_state(&self) -> bool {
        self.qfi.is_none()
    }
}

/// The measured 2×2 state and sensitivity selected by `spec` from the full
/// 6×6 moments.
pub fn measured_mode(
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    spec: &MeasurementSpec,
    output: EprOutput,
) -> Result<(CovarianceMatrix, DMatrix<f64>)> {
    if sigma.dim() != sens.nrows() || sens.nrows() != sens.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} sensitivity", sigma.dim()),
            found: format!("{}x{}", sens.nrows(), sens.ncols()),
        });
    }
    match spec.scheme {
        Scheme::Local => Ok((
            CovarianceMatrix::new(extract_block(sigma.matrix(), ModeIndex::CAVITY1)?)?,
            extract_block(sens, ModeIndex::CAVITY1)?,
        )),
        Scheme::Epr => {
            let modes = sigma.modes();
            let bs = beam_splitter_transform(
                spec.phi_bs,
                modes,
                ModeIndex::CAVITY1,
                ModeIndex::CAVITY2,
            )?;
            let mode = output.mode();
            let out = congruence(&bs, sigma.matrix())?;
            let out_sens = congruence(&bs, sens)?;
            Ok((
                CovarianceMatrix::new(extract_block(&out, mode)?)?,
                extract_block(&out_sens, mode)?,
            ))
        }
    }
}

fn evaluate_output(
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    spec: &MeasurementSpec,
    output: EprOutput,
) -> Result<(f64, Option<f64>)> {
    let (s, sp) = measured_mode(sigma, sens, spec, output)?;
    if !s.is_physical() {
        return Err(Error::NonPhysical {
            time: None,
            min_eigenvalue: crate::gaussian::min_uncertainty_eigenvalue(s.matrix()),
        });
    }
    let cfi = classical_fisher(&s, &sp, spec)?;
    let qfi = match quantum_fisher(&s, &sp) {
        Ok(q) => Some(q),
        Err(Error::PureStateSingularity { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((cfi, qfi))
}

/// CFI and QFI of one strategy for full 6×6 moments.
pub fn point_fisher(
    time: Option<f64>,
    sigma: &CovarianceMatrix,
    sens: &DMatrix<f64>,
    spec: &MeasurementSpec,
    noise: &'static str,
) -> Result<FisherResult> {
    spec.validate()?;
    let (cfi, qfi, epr_output) = match (spec.scheme, spec.epr_output) {
        (Scheme::Local, _) => {
            let (c, q) = evaluate_output(sigma, sens, spec, EprOutput::Plus)?;
            (c, q, None)
        }
        (Scheme::Epr, EprOutput::Best) => {
            let (cp, qp) = evaluate_output(sigma, sens, spec, EprOutput::Plus)?;
            let (cm, qm) = evaluate_output(sigma, sens, spec, EprOutput::Minus)?;
            if cm > cp {
                (cm, qm, Some(EprOutput::Minus))
            } else {
                (cp, qp, Some(EprOutput::Plus))
            }
        }
        (Scheme::Epr, out) => {
            let (c, q) = evaluate_output(sigma, sens, spec, out)?;
            (c, q, Some(out))
        }
    };
    Ok(FisherResult {
        time,
        cfi,
        qfi,
        scheme: spec.scheme,
        epr_output,
        noise,
    })
}

/// Per-time CFI and QFI of one strategy along a trajectory. A pure measured
/// mode leaves that point's QFI empty instead of failing the run.
pub fn strategy_fisher(
    trajectory: &Trajectory,
    noise: &'static str,
    spec: &MeasurementSpec,
) -> Result<Vec<FisherResult>> {
    use rayon::prelude::*;
    (0..trajectory.len())
        .into_par_iter()
        .map(|i| {
            point_fisher(
                Some(trajectory.times[i]),
                &trajectory.sigmas[i],
                &trajectory.sensitivities[i],
                spec,
                noise,
            )
            .map_err(|e| match e {
                Error::NonPhysical { min_eigenvalue, .. } => Error::NonPhysical {
                    time: Some(trajectory.times[i]),
                    min_eigenvalue,
                },
                other => other,
            })
        })
        .collect()
}

/// Exact CFI of a homodyne measurement of the `x` quadrature.
#[cfg(test)]
pub(crate) fn homodyne_x_fisher(sigma: &DMatrix<f64>, sens: &DMatrix<f64>) -> f64 {
    let v = sigma[(0, 0)];
    let dv = sens[(0, 0)];
    dv * dv / (2.0 * v * v)
}
