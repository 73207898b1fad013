//! Linearized two-cavity optomechanics: drift and diffusion matrices, the
//! Lyapunov evolution of the covariance matrix and of its Λ-derivative, and
//! the algebraic steady state.
//!
//! Quadrature ordering is `(Q, P, X1, Y1, X2, Y2)`. Only cavity 1 couples to
//! the mechanics; cavity 2 is an ancilla that only sees its own input noise.
//! Rates are SI (1/s, rad/s) and times are seconds.

use nalgebra::{DMatrix, Matrix6};

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::gaussian::{min_uncertainty_eigenvalue, symmetrize, CovarianceMatrix, PHYSICALITY_TOL};

/// Number of quadratures in the full system.
pub const DIM: usize = 6;

/// Index of the mechanical momentum `P`, where Λ enters the diffusion.
pub const P_INDEX: usize = 1;

/// Tolerance on the rate-normalized Lyapunov residual
/// `‖Aσ + σAᵀ + D‖_max / ‖A‖_max`.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

/// Physical rates and couplings of the optomechanical system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Mechanical angular frequency, rad/s.
    pub omega_m: f64,
    /// Mechanical damping rate, 1/s.
    pub gamma_m: f64,
    /// Cavity decay rate (both cavities), 1/s.
    pub kappa: f64,
    /// Detuning of cavity 1, rad/s.
    pub delta1: f64,
    /// Detuning of cavity 2, rad/s.
    pub delta2: f64,
    /// Linearized optomechanical coupling, rad/s.
    pub g: f64,
    /// Temperature of the mechanical bath, K.
    pub temperature: f64,
    /// CSL diffusion rate Λ, 1/s.
    pub lambda_csl: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("kappa", self.kappa),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("g", self.g),
            ("temperature", self.temperature),
            ("lambda_csl", self.lambda_csl),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.omega_m <= 0.0 {
            return Err(Error::invalid("omega_m", "must be > 0"));
        }
        if self.kappa <= 0.0 {
            return Err(Error::invalid("kappa", "must be > 0"));
        }
        for (name, v) in [
            ("gamma_m", self.gamma_m),
            ("temperature", self.temperature),
            ("lambda_csl", self.lambda_csl),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Brownian momentum diffusion `2 γ_m k_B T / (ħ ω_m)`, 1/s.
    pub fn brownian_diffusion(&self) -> f64 {
        2.0 * self.gamma_m * K_B * self.temperature / (HBAR * self.omega_m)
    }
}

/// Noise driving the two cavities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputNoise {
    /// Independent thermal inputs with mean photon numbers `n1`, `n2`.
    Thermal { n1: f64, n2: f64 },
    /// Two-mode squeezed input with amplitude `r` and angle `psi_s`.
    TwoModeSqueezed { r: f64, psi_s: f64 },
}

impl InputNoise {
    pub const VACUUM: InputNoise = InputNoise::Thermal { n1: 0.0, n2: 0.0 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            InputNoise::Thermal { n1, n2 } => {
                for (name, v) in [("n1", n1), ("n2", n2)] {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::invalid(
                            name,
                            format!("must be finite and >= 0, got {v}"),
                        ));
                    }
                }
            }
            InputNoise::TwoModeSqueezed { r, psi_s } => {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::invalid(
                        "r",
                        format!("must be finite and >= 0, got {r}"),
                    ));
                }
                if !psi_s.is_finite() {
                    return Err(Error::invalid("psi_s", "must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            InputNoise::Thermal { .. } => "thermal",
            InputNoise::TwoModeSqueezed { .. } => "tms",
        }
    }

    /// Covariance of the two input modes in units where the vacuum is `I/2`.
    /// Multiplying by `2κ` gives the optical block of the diffusion matrix.
    pub fn input_covariance(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(4, 4);
        match *self {
            InputNoise::Thermal { n1, n2 } => {
                for i in 0..2 {
                    c[(i, i)] = n1 + 0.5;
                    c[(i + 2, i + 2)] = n2 + 0.5;
                }
            }
            InputNoise::TwoModeSqueezed { r, psi_s } => {
                let ch = 0.5 * (2.0 * r).cosh();
                let sh = 0.5 * (2.0 * r).sinh();
                let (s, co) = psi_s.sin_cos();
                let rot = [[co, s], [s, -co]];
                for i in 0..2 {
                    c[(i, i)] = ch;
                    c[(i + 2, i + 2)] = ch;
                    for j in 0..2 {
                        c[(i, j + 2)] = sh * rot[i][j];
                        c[(j + 2, i)] = sh * rot[i][j];
                    }
                }
            }
        }
        c
    }
}

/// Drift matrix `A` with its stability recorded at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    matrix: DMatrix<f64>,
    max_real_part: f64,
    spectral_radius: f64,
}

impl DriftMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch {
                expected: "square drift matrix".into(),
                found: format!("{r}x{c}"),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("drift", "entries must be finite"));
        }
        let eig = matrix.complex_eigenvalues();
        let max_real_part = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let spectral_radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(DriftMatrix {
            matrix,
            max_real_part,
            spectral_radius,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_real_part < 0.0
    }

    /// Largest real part among the eigenvalues.
    pub fn max_real_part(&self) -> f64 {
        self.max_real_part
    }

    /// Fastest rate in the drift: the larger of the spectral radius and the
    /// largest entry (the latter matters for strongly non-normal couplings).
    pub fn max_rate(&self) -> f64 {
        self.spectral_radius.max(self.matrix.amax())
    }

    /// Leading principal `k×k` block.
    pub fn leading_block(&self, k: usize) -> Result<DriftMatrix> {
        if k == 0 || k > self.dim() {
            return Err(Error::invalid("k", format!("block size {k} out of range")));
        }
        DriftMatrix::new(self.matrix.view((0, 0), (k, k)).into_owned())
    }
}

/// Diffusion matrix `D`: symmetric, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix(DMatrix<f64>);

impl DiffusionMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch {
                expected: "square diffusion matrix".into(),
                found: format!("{r}x{c}"),
            });
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let matrix = symmetrize(matrix);
        let min_eig = matrix.symmetric_eigenvalues().min();
        if min_eig < -1e-12 * scale {
            return Err(Error::invalid(
                "diffusion",
                format!("not positive semidefinite (min eigenvalue {min_eig:e})"),
            ));
        }
        Ok(DiffusionMatrix(matrix))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn leading_block(&self, k: usize) -> Result<DiffusionMatrix> {
        if k == 0 || k > self.0.nrows() {
            return Err(Error::invalid("k", format!("block size {k} out of range")));
        }
        DiffusionMatrix::new(self.0.view((0, 0), (k, k)).into_owned())
    }
}

/// `∂D/∂Λ`: a single 1 on the `(P, P)` entry.
pub fn lambda_source(dim: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(dim, dim);
    e[(P_INDEX, P_INDEX)] = 1.0;
    e
}

/// A covariance matrix together with its derivative with respect to Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub sigma: CovarianceMatrix,
    pub sensitivity: DMatrix<f64>,
}

/// Covariance matrices and Λ-sensitivities sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub sigmas: Vec<CovarianceMatrix>,
    pub sensitivities: Vec<DMatrix<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn moments(&self, i: usize) -> Moments {
        Moments {
            sigma: self.sigmas[i].clone(),
            sensitivity: self.sensitivities[i].clone(),
        }
    }
}

/// Linearized drift:
///
/// ```text
/// dQ  =  ω_m P
/// dP  = -ω_m Q - γ_m P + g X1
/// dX1 = -κ X1 + Δ1 Y1
/// dY1 = -Δ1 X1 - κ Y1 + g Q
/// dX2 = -κ X2 + Δ2 Y2
/// dY2 = -Δ2 X2 - κ Y2
/// ```
pub fn build_drift(params: &SystemParams) -> Result<DriftMatrix> {
    params.validate()?;
    let p = params;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(DIM, DIM, &[
        0.0,         p.omega_m,   0.0,       0.0,       0.0,       0.0,
        -p.omega_m, -p.gamma_m,   p.g,       0.0,       0.0,       0.0,
        0.0,         0.0,        -p.kappa,   p.delta1,  0.0,       0.0,
        p.g,         0.0,        -p.delta1, -p.kappa,   0.0,       0.0,
        0.0,         0.0,         0.0,       0.0,      -p.kappa,   p.delta2,
        0.0,         0.0,         0.0,       0.0,      -p.delta2, -p.kappa,
    ]);
    DriftMatrix::new(a)
}

/// Diffusion matrix: zero on `Q`, Brownian plus CSL on `P`, and `2κ` times
/// the input-mode covariance on the optical block.
pub fn build_diffusion(params: &SystemParams, noise: &InputNoise) -> Result<DiffusionMatrix> {
    params.validate()?;
    noise.validate()?;
    let mut d = DMatrix::zeros(DIM, DIM);
    d[(P_INDEX, P_INDEX)] = params.brownian_diffusion() + params.lambda_csl;
    let optical = noise.input_covariance() * (2.0 * params.kappa);
    d.view_mut((2, 2), (4, 4)).copy_from(&optical);
    DiffusionMatrix::new(d)
}

/// Integrator settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Largest RK4 step as a fraction of `1 / max_rate(A)`.
    pub step_fraction: f64,
    /// Check `σ + iΩ/2 ≥ 0` at every output time.
    pub check_physicality: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            step_fraction: 5e-3,
            check_physicality: true,
        }
    }
}

type M6 = Matrix6<f64>;

fn to_m6(m: &DMatrix<f64>, what: &'static str) -> Result<M6> {
    if m.shape() != (DIM, DIM) {
        return Err(Error::DimensionMismatch {
            expected: format!("{DIM}x{DIM} {what}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(M6::from_fn(|i, j| m[(i, j)]))
}

fn to_dmatrix(m: &M6) -> DMatrix<f64> {
    DMatrix::from_fn(DIM, DIM, |i, j| m[(i, j)])
}

#[inline]
fn lyapunov_rhs(a: &M6, at: &M6, s: &M6, d: &M6) -> M6 {
    a * s + s * at + d
}

/// One classical RK4 step of `Ṡ = A S + S Aᵀ + D`, symmetrized.
#[inline]
fn rk4_step(a: &M6, at: &M6, d: &M6, s: &M6, h: f64) -> M6 {
    let k1 = lyapunov_rhs(a, at, s, d);
    let k2 = lyapunov_rhs(a, at, &(s + k1 * (0.5 * h)), d);
    let k3 = lyapunov_rhs(a, at, &(s + k2 * (0.5 * h)), d);
    let k4 = lyapunov_rhs(a, at, &(s + k3 * h), d);
    let next = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    (next + next.transpose()) * 0.5
}

/// Integrates `σ̇ = Aσ + σAᵀ + D` and the sensitivity equation
/// `σ̇' = Aσ' + σ'Aᵀ + ∂D/∂Λ` from `t = 0`, sampling at `grid`.
///
/// `grid` must be strictly increasing and non-negative; a first entry of 0
/// reproduces the initial moments.
pub fn evolve(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
    initial: &Moments,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let am = to_m6(a.matrix(), "drift")?;
    let dm = to_m6(d.matrix(), "diffusion")?;
    let mut s = to_m6(initial.sigma.matrix(), "covariance")?;
    let mut sp = to_m6(&initial.sensitivity, "sensitivity")?;
    let source = to_m6(&lambda_source(DIM), "source")?;
    let at = am.transpose();

    if !(opts.step_fraction > 0.0 && opts.step_fraction.is_finite()) {
        return Err(Error::invalid("step_fraction", "must be finite and > 0"));
    }
    if !initial.sigma.is_physical() {
        return Err(Error::NonPhysical {
            time: Some(0.0),
            min_eigenvalue: min_uncertainty_eigenvalue(initial.sigma.matrix()),
        });
    }
    if let Some(&t0) = grid.first() {
        if !(t0.is_finite() && t0 >= 0.0) {
            return Err(Error::invalid("grid", "times must be finite and >= 0"));
        }
    }
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite())
    {
        return Err(Error::invalid("grid", "times must be strictly increasing"));
    }

    let rate = a.max_rate();
    let h_max = if rate > 0.0 {
        opts.step_fraction / rate
    } else {
        f64::INFINITY
    };

    let mut traj = Trajectory {
        times: Vec::with_capacity(grid.len()),
        sigmas: Vec::with_capacity(grid.len()),
        sensitivities: Vec::with_capacity(grid.len()),
    };
    let mut t = 0.0;
    for &target in grid {
        let span = target - t;
        if span > 0.0 {
            let steps = if h_max.is_finite() {
                (span / h_max).ceil().max(1.0) as u64
            } else {
                1
            };
            let h = span / steps as f64;
            for _ in 0..steps {
                s = rk4_step(&am, &at, &dm, &s, h);
                sp = rk4_step(&am, &at, &source, &sp, h);
            }
        }
        t = target;

        let sigma = to_dmatrix(&s);
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonPhysical {
                time: Some(t),
                min_eigenvalue: f64::NAN,
            });
        }
        if opts.check_physicality {
            let min_eig = min_uncertainty_eigenvalue(&sigma);
            if min_eig < -PHYSICALITY_TOL {
                return Err(Error::NonPhysical {
                    time: Some(t),
                    min_eigenvalue: min_eig,
                });
            }
        }
        traj.times.push(t);
        traj.sigmas.push(CovarianceMatrix::new(sigma)?);
        traj.sensitivities.push(to_dmatrix(&sp));
    }
    Ok(traj)
}

/// `‖Aσ + σAᵀ + D‖_max / ‖A‖_max`: the Lyapunov residual in units of σ with
/// time measured in units of the fastest drift entry.
pub fn lyapunov_residual(a: &DMatrix<f64>, sigma: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let r = a * sigma + sigma * a.transpose() + d;
    let scale = a.amax();
    if scale > 0.0 {
        r.amax() / scale
    } else {
        r.amax()
    }
}

/// Solves `A X + X Aᵀ = -Q` by vectorization,
/// `(I ⊗ A + A ⊗ I) vec(X) = -vec(Q)`, with dense LU and a few rounds of
/// iterative refinement.
pub fn solve_lyapunov(a: &DriftMatrix, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.dim();
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", q.nrows(), q.ncols()),
        });
    }
    if !a.is_hurwitz() {
        return Err(Error::NotHurwitz {
            max_real_part: a.max_real_part(),
        });
    }
    let am = a.matrix();
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(am) + am.kronecker(&id);
    let lu = op.lu();
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let b = nalgebra::DVector::from_iterator(n * n, rhs.iter().map(|v| -v));
        let x = lu.solve(&b).ok_or(Error::Singular {
            context: "vectorized Lyapunov operator",
        })?;
        Ok(symmetrize(DMatrix::from_column_slice(n, n, x.as_slice())))
    };

    let mut x = solve(q)?;
    let mut residual = lyapunov_residual(am, &x, q);
    for _ in 0..3 {
        if residual < 0.01 * STEADY_RESIDUAL_TOL {
            break;
        }
        let r = am * &x + &x * am.transpose() + q;
        let candidate = &x + solve(&r)?;
        let res = lyapunov_residual(am, &candidate, q);
        if res >= residual {
            break;
        }
        x = candidate;
        residual = res;
    }
    if residual >= STEADY_RESIDUAL_TOL {
        return Err(Error::IllConditioned {
            residual,
            tolerance: STEADY_RESIDUAL_TOL,
        });
    }
    Ok(x)
}

/// Steady state `Aσ_ss + σ_ssAᵀ = -D` and its sensitivity
/// `Aσ'_ss + σ'_ssAᵀ = -∂D/∂Λ`.
pub fn steady_state(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<Moments> {
    let n = a.dim();
    if d.matrix().nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n} diffusion"),
            found: format!("{}x{}", d.matrix().nrows(), d.matrix().ncols()),
        });
    }
    let sigma = solve_lyapunov(a, d.matrix())?;
    let sensitivity = solve_lyapunov(a, &lambda_source(n))?;
    Ok(Moments {
        sigma: CovarianceMatrix::new(sigma)?,
        sensitivity,
    })
}

/// Initial state: the optomechanical block `(Q, P, X1, Y1)` is the steady
/// state under vacuum optical input with Brownian and CSL noise on the
/// mechanics; cavity 2 is in its ground state and uncorrelated.
pub fn initial_state(params: &SystemParams) -> Result<Moments> {
    let a = build_drift(params)?.leading_block(4)?;
    let d = build_diffusion(params, &InputNoise::VACUUM)?.leading_block(4)?;
    let reduced = steady_state(&a, &d)?;

    let mut sigma = DMatrix::identity(DIM, DIM) * 0.5;
    sigma
        .view_mut((0, 0), (4, 4))
        .copy_from(reduced.sigma.matrix());
    let mut sensitivity = DMatrix::zeros(DIM, DIM);
    sensitivity
        .view_mut((0, 0), (4, 4))
        .copy_from(&reduced.sensitivity);
    let min_eigenvalue = min_uncertainty_eigenvalue(&sigma);
    if min_eigenvalue < -PHYSICALITY_TOL {
        return Err(Error::NonPhysical {
            time: Some(0.0),
            min_eigenvalue,
        });
    }
    Ok(Moments {
        sigma: CovarianceMatrix::new(sigma)?,
        sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    pub(crate) fn sample_params() -> SystemParams {
        SystemParams {
            omega_m: 2.0 * std::f64::consts::PI * 2.0e5,
            gamma_m: 5.0e5,
            kappa: 4.0e6,
            delta1: 0.0,
            delta2: 0.0,
            g: 5.0e7,
            temperature: 1e-3,
            lambda_csl: 1e6,
        }
    }

    fn isotropic(kappa: f64, d: f64) -> (DriftMatrix, DiffusionMatrix) {
        (
            DriftMatrix::new(DMatrix::identity(DIM, DIM) * -kappa).unwrap(),
            DiffusionMatrix::new(DMatrix::identity(DIM, DIM) * d).unwrap(),
        )
    }

    #[test]
    fn uncoupled_drift_is_block_diagonal() {
        let p = SystemParams {
            g: 0.0,
            ..sample_params()
        };
        let a = build_drift(&p).unwrap();
        let m = a.matrix();
        for i in 0..2 {
            for j in 2..DIM {
                assert_eq!(m[(i, j)], 0.0);
                assert_eq!(m[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn resonant_uncoupled_eigenvalues() {
        // Characteristic polynomial of [[0, ω], [-ω, -γ]]: λ² + γλ + ω² = 0.
        let p = SystemParams {
            g: 0.0,
            omega_m: 3.0,
            gamma_m: 0.4,
            kappa: 1.5,
            ..sample_params()
        };
        let a = build_drift(&p).unwrap();
        let mut eig: Vec<_> = a.matrix().complex_eigenvalues().iter().copied().collect();
        eig.sort_by(|x, y| {
            x.re.partial_cmp(&y.re)
                .unwrap()
                .then(x.im.partial_cmp(&y.im).unwrap())
        });
        for z in &eig[..4] {
            assert_relative_eq!(z.re, -1.5, epsilon = 1e-12);
            assert!(z.im.abs() < 1e-12);
        }
        let im = (9.0f64 - 0.04).sqrt();
        assert_relative_eq!(eig[4].re, -0.2, epsilon = 1e-12);
        assert_relative_eq!(eig[4].im.abs(), im, epsilon = 1e-12);
        assert_relative_eq!(eig[5].im.abs(), im, epsilon = 1e-12);
    }

    #[test]
    fn sample_drift_is_hurwitz() {
        assert!(build_drift(&sample_params()).unwrap().is_hurwitz());
    }

    #[test]
    fn vacuum_inputs_give_kappa_identity() {
        let p = sample_params();
        for noise in [
            InputNoise::VACUUM,
            InputNoise::TwoModeSqueezed { r: 0.0, psi_s: 1.3 },
        ] {
            let d = build_diffusion(&p, &noise).unwrap();
            let block = d.matrix().view((2, 2), (4, 4)).into_owned();
            assert!((block - DMatrix::identity(4, 4) * p.kappa).amax() < 1e-6);
        }
    }

    #[test]
    fn tms_diffusion_block() {
        let p = sample_params();
        let (r, psi) = (0.7f64, 0.4f64);
        let d = build_diffusion(&p, &InputNoise::TwoModeSqueezed { r, psi_s: psi }).unwrap();
        let m = d.matrix();
        let k = p.kappa;
        assert_relative_eq!(m[(2, 2)], k * (2.0 * r).cosh(), max_relative = 1e-14);
        assert_relative_eq!(
            m[(2, 4)],
            k * (2.0 * r).sinh() * psi.cos(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            m[(2, 5)],
            k * (2.0 * r).sinh() * psi.sin(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            m[(3, 5)],
            -k * (2.0 * r).sinh() * psi.cos(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn csl_only_momentum_diffusion() {
        let p = SystemParams {
            temperature: 0.0,
            ..sample_params()
        };
        let d = build_diffusion(&p, &InputNoise::VACUUM).unwrap();
        assert_eq!(d.matrix()[(P_INDEX, P_INDEX)], 1e6);
        assert_eq!(d.matrix()[(0, 0)], 0.0);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let bad = [
            SystemParams {
                omega_m: 0.0,
                ..sample_params()
            },
            SystemParams {
                kappa: -1.0,
                ..sample_params()
            },
            SystemParams {
                temperature: -1.0,
                ..sample_params()
            },
            SystemParams {
                lambda_csl: -1.0,
                ..sample_params()
            },
            SystemParams {
                gamma_m: f64::NAN,
                ..sample_params()
            },
        ];
        for p in bad {
            assert!(build_drift(&p).is_err(), "{p:?}");
        }
        assert!(build_diffusion(
            &sample_params(),
            &InputNoise::TwoModeSqueezed {
                r: -0.1,
                psi_s: 0.0
            }
        )
        .is_err());
        assert!(
            build_diffusion(&sample_params(), &InputNoise::Thermal { n1: -0.1, n2: 0.0 }).is_err()
        );
    }

    #[test]
    fn isotropic_evolution_matches_closed_form() {
        let (kappa, d, s0) = (2.0, 3.0, 0.9);
        let (a, dm) = isotropic(kappa, d);
        let init = Moments {
            sigma: CovarianceMatrix::thermal(3, s0 - 0.5),
            sensitivity: DMatrix::zeros(DIM, DIM),
        };
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let traj = evolve(&a, &dm, &init, &grid, &EvolveOptions::default()).unwrap();
        for (t, sigma) in traj.times.iter().zip(&traj.sigmas) {
            let e = (-2.0 * kappa * t).exp();
            let exact = e * s0 + (1.0 - e) * d / (2.0 * kappa);
            let expected = DMatrix::identity(DIM, DIM) * exact;
            assert!((sigma.matrix() - expected).amax() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn homogeneous_decay_is_monotone() {
        let a = build_drift(&sample_params()).unwrap();
        let d = DiffusionMatrix::new(DMatrix::zeros(DIM, DIM)).unwrap();
        let init = Moments {
            sigma: CovarianceMatrix::thermal(3, 2.0),
            sensitivity: DMatrix::zeros(DIM, DIM),
        };
        let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 2e-6).collect();
        let opts = EvolveOptions {
            check_physicality: false,
            ..Default::default()
        };
        let traj = evolve(&a, &d, &init, &grid, &opts).unwrap();
        // The Frobenius norm is not monotone for a non-normal drift. The
        // Lyapunov energy tr(Pσ) with AᵀP + PA = -I is: it decays at rate tr σ.
        let at = DriftMatrix::new(a.matrix().transpose()).unwrap();
        let p = solve_lyapunov(&at, &DMatrix::identity(DIM, DIM)).unwrap();
        let energy: Vec<f64> = traj
            .sigmas
            .iter()
            .map(|s| (&p * s.matrix()).trace())
            .collect();
        assert!(energy.windows(2).all(|w| w[1] < w[0]), "{energy:?}");
        assert!(traj.sigmas.last().unwrap().matrix().amax() < 1e-10 * init.sigma.matrix().amax());
    }

    #[test]
    fn evolve_rejects_bad_grid_and_state() {
        let (a, d) = isotropic(1.0, 1.0);
        let init = Moments {
            sigma: CovarianceMatrix::vacuum(3),
            sensitivity: DMatrix::zeros(DIM, DIM),
        };
        let opts = EvolveOptions::default();
        assert!(evolve(&a, &d, &init, &[0.0, 1.0, 1.0], &opts).is_err());
        assert!(evolve(&a, &d, &init, &[-1.0, 1.0], &opts).is_err());
        let bad = Moments {
            sigma: CovarianceMatrix::thermal(3, -0.3),
            sensitivity: DMatrix::zeros(DIM, DIM),
        };
        assert!(matches!(
            evolve(&a, &d, &bad, &[1.0], &opts),
            Err(Error::NonPhysical { time: Some(t), .. }) if t == 0.0
        ));
    }

    #[test]
    fn unstable_drift_aborts_with_time() {
        // Damping with zero diffusion shrinks the state below vacuum.
        let a = DriftMatrix::new(DMatrix::identity(DIM, DIM) * -1.0).unwrap();
        let d = DiffusionMatrix::new(DMatrix::zeros(DIM, DIM)).unwrap();
        let init = Moments {
            sigma: CovarianceMatrix::vacuum(3),
            sensitivity: DMatrix::zeros(DIM, DIM),
        };
        let err = evolve(&a, &d, &init, &[0.5, 1.0], &EvolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonPhysical { time: Some(t), .. } if t == 0.5));
    }

    #[test]
    fn isotropic_steady_state() {
        let (a, d) = isotropic(2.0, 3.0);
        let ss = steady_state(&a, &d).unwrap();
        assert!((ss.sigma.matrix() - DMatrix::identity(DIM, DIM) * 0.75).amax() < 1e-14);
    }

    #[test]
    fn non_hurwitz_has_no_steady_state() {
        let mut m = DMatrix::identity(DIM, DIM) * -1.0;
        m[(0, 0)] = 0.1;
        let a = DriftMatrix::new(m).unwrap();
        let d = DiffusionMatrix::new(DMatrix::identity(DIM, DIM)).unwrap();
        assert!(matches!(
            steady_state(&a, &d),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn steady_sensitivity_does_not_depend_on_lambda() {
        let p = sample_params();
        let a = build_drift(&p).unwrap();
        let s1 = steady_state(&a, &build_diffusion(&p, &InputNoise::VACUUM).unwrap()).unwrap();
        let p2 = SystemParams {
            lambda_csl: 2.0 * p.lambda_csl,
            ..p
        };
        let s2 = steady_state(&a, &build_diffusion(&p2, &InputNoise::VACUUM).unwrap()).unwrap();
        assert_eq!(s1.sensitivity, s2.sensitivity);
        let residual = lyapunov_residual(
            a.matrix(),
            s1.sigma.matrix(),
            build_diffusion(&p, &InputNoise::VACUUM).unwrap().matrix(),
        );
        assert!(residual < STEADY_RESIDUAL_TOL);
    }

    #[test]
    fn uncoupled_initial_state() {
        // Without coupling the mechanics thermalizes to k_B T/(ħ ω_m) per
        // quadrature and both cavities sit in vacuum.
        let p = SystemParams {
            g: 0.0,
            lambda_csl: 0.0,
            temperature: 0.5,
            ..sample_params()
        };
        let init = initial_state(&p).unwrap();
        let n = K_B * p.temperature / (HBAR * p.omega_m);
        let mut expected = DMatrix::identity(DIM, DIM) * 0.5;
        expected[(0, 0)] = n;
        expected[(1, 1)] = n;
        assert!((init.sigma.matrix() - expected).amax() < 1e-9 * n);
    }

    #[test]
    fn noiseless_mechanics_is_not_physical() {
        // With T = 0 and Λ = 0 nothing feeds the mechanical mode, whose
        // steady variance then collapses to zero.
        let p = SystemParams {
            g: 0.0,
            temperature: 0.0,
            lambda_csl: 0.0,
            ..sample_params()
        };
        assert!(matches!(initial_state(&p), Err(Error::NonPhysical { .. })));
    }

    #[test]
    fn initial_state_structure() {
        let p = sample_params();
        let init = initial_state(&p).unwrap();
        let s = init.sigma.matrix();
        assert!(init.sigma.is_physical());
        assert_eq!(
            s.view((4, 4), (2, 2)).into_owned(),
            DMatrix::identity(2, 2) * 0.5
        );
        assert!(s.view((0, 4), (4, 2)).iter().all(|&v| v == 0.0));
        assert!(init
            .sensitivity
            .view((4, 0), (2, 6))
            .iter()
            .all(|&v| v == 0.0));

        // σ0 is affine in Λ, so a central difference is exact up to rounding.
        let h = 1e-3 * p.lambda_csl;
        let up = initial_state(&SystemParams {
            lambda_csl: p.lambda_csl + h,
            ..p
        })
        .unwrap();
        let dn = initial_state(&SystemParams {
            lambda_csl: p.lambda_csl - h,
            ..p
        })
        .unwrap();
        let fd = (up.sigma.matrix() - dn.sigma.matrix()) / (2.0 * h);
        let rel = (&fd - &init.sensitivity).amax() / init.sensitivity.amax();
        assert!(rel < 1e-6, "relative error {rel:e}");
        assert!(init.sensitivity[(0, 0)] > 0.0);
    }

    #[test]
    fn leading_blocks() {
        let a = build_drift(&sample_params()).unwrap();
        assert_eq!(a.leading_block(4).unwrap().dim(), 4);
        assert!(a.leading_block(7).is_err());
    }
}
