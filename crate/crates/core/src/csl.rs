//! CSL diffusion rate `Λ = λ ħ α / (ω_m m r_c²)` and the geometric
//! mass-scaling factor
//!
//! ```text
//! α = r_c⁵ / (π^{3/2} m₀²) ∫ d³k k_x² exp(-r_c² k²) |ρ̃(k)|²
//! ```
//!
//! where `ρ̃` is the Fourier transform of the mass density and `m₀` is one
//! atomic mass unit. Everything here is SI.

use crate::constants::{AMU, HBAR};
use crate::error::{Error, Result};

/// Relative accuracy requested from the α quadrature.
pub const ALPHA_REL_TOL: f64 = 1e-10;

/// Relative accuracy below which a quadrature result is accepted.
pub const ALPHA_ACCEPT_TOL: f64 = 1e-6;

/// Upper limit of the dimensionless radial integrals; the Gaussian factor
/// `exp(-u²)` is below `1e-62` beyond it.
const U_MAX: f64 = 12.0;

const MAX_INTERVALS: usize = 4000;

/// Collapse parameters plus the mechanical frequency they are quoted at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslParams {
    /// Collapse rate λ, 1/s.
    pub lambda_rate: f64,
    /// Correlation length r_c, m.
    pub r_c: f64,
    /// Total mass, kg.
    pub mass: f64,
    /// Mechanical angular frequency, rad/s.
    pub omega_m: f64,
}

impl CslParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_c", self.r_c),
            ("mass", self.mass),
            ("omega_m", self.omega_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if !(self.lambda_rate.is_finite() && self.lambda_rate >= 0.0) {
            return Err(Error::invalid(
                "lambda_rate",
                format!("must be finite and >= 0, got {}", self.lambda_rate),
            ));
        }
        Ok(())
    }
}

/// Geometry of a homogeneous test mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    Cube { side: f64 },
}

impl Shape {
    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
            Shape::Cube { side } => side.powi(3),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Cube { .. } => "cube",
        }
    }

    /// Radius or side length, m.
    pub fn size(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Cube { side } => side,
        }
    }
}

/// A homogeneous mass distribution of given total mass and shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassDensity {
    pub mass: f64,
    pub shape: Shape,
}

impl MassDensity {
    pub fn new(mass: f64, shape: Shape) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(
                "mass",
                format!("must be finite and > 0, got {mass}"),
            ));
        }
        let size = shape.size();
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::invalid(
                "size",
                format!("must be finite and > 0, got {size}"),
            ));
        }
        Ok(MassDensity { mass, shape })
    }

    /// Mass density, kg/m³.
    pub fn density(&self) -> f64 {
        self.mass / self.shape.volume()
    }
}

/// `3 (sin x - x cos x) / x³`, the normalized form factor of a ball.
fn ball_form_factor(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 10.0 + x2 * x2 / 280.0
    } else {
        3.0 * (x.sin() - x * x.cos()) / (x * x * x)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Dimensionless mass-scaling factor α (the integral divided by `m₀²`).
pub fn alpha_factor(density: &MassDensity, r_c: f64) -> Result<f64> {
    if !(r_c.is_finite() && r_c > 0.0) {
        return Err(Error::invalid(
            "r_c",
            format!("must be finite and > 0, got {r_c}"),
        ));
    }
    let density = MassDensity::new(density.mass, density.shape)?;
    let scale = (density.mass / AMU).powi(2);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    match density.shape {
        Shape::Sphere { radius } => {
            // Angular integration leaves (4π/3) ∫ k⁴ ...; with u = r_c k:
            // α = (m/m₀)² 4/(3√π) ∫₀^∞ u⁴ e^{-u²} F(u R / r_c)² du.
            let b = radius / r_c;
            let i = integrate(
                |u| {
                    let f = ball_form_factor(u * b);
                    u.powi(4) * (-u * u).exp() * f * f
                },
                0.0,
                U_MAX,
            )?;
            Ok(scale * 4.0 / (3.0 * sqrt_pi) * i)
        }
        Shape::Cube { side } => {
            // ρ̃ factorizes into sinc(k_i a / 2), so α = (m/m₀)² π^{-3/2} J₂ J₀²
            // with J_n = ∫ u^n e^{-u²} sinc²(u a / 2r_c) du over the real line.
            let b = 0.5 * side / r_c;
            let j = |n: i32| {
                integrate(
                    |u| {
                        let s = sinc(u * b);
                        u.powi(n) * (-u * u).exp() * s * s
                    },
                    0.0,
                    U_MAX,
                )
                .map(|v| 2.0 * v)
            };
            let j0 = j(0)?;
            let j2 = j(2)?;
            Ok(scale * j2 * j0 * j0 / sqrt_pi.powi(3))
        }
    }
}

/// `α` of a point mass, `m² / (2 m₀²)`.
pub fn point_mass_alpha(mass: f64) -> f64 {
    0.5 * (mass / AMU).powi(2)
}

/// `Λ = λ ħ α / (ω_m m r_c²)`, in 1/s.
pub fn csl_diffusion_rate(p: &CslParams, density: &MassDensity) -> Result<f64> {
    p.validate()?;
    if (density.mass - p.mass).abs() > 1e-12 * p.mass {
        return Err(Error::invalid(
            "mass",
            format!(
                "density mass {} differs from CSL mass {}",
                density.mass, p.mass
            ),
        ));
    }
    let alpha = alpha_factor(density, p.r_c)?;
    Ok(lambda_from_alpha(p, alpha))
}

/// `Λ` for a precomputed α.
pub fn lambda_from_alpha(p: &CslParams, alpha: f64) -> f64 {
    p.lambda_rate * HBAR * alpha / (p.omega_m * p.mass * p.r_c * p.r_c)
}

// Gauss–Kronrod 7/15 nodes on [-1, 1] (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7/K15 panel: Kronrod estimate and `|K - G|`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive G7/K15 quadrature: the panel with the largest error
/// estimate is bisected until the total estimate meets [`ALPHA_REL_TOL`].
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut error = e;
    while error > ALPHA_REL_TOL * total.abs() {
        if panels.len() >= MAX_INTERVALS {
            let achieved = error / total.abs();
            if achieved <= ALPHA_ACCEPT_TOL {
                return Ok(total);
            }
            return Err(Error::Quadrature {
                achieved,
                requested: ALPHA_ACCEPT_TOL,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let (pa, pb, pv, pe) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let left = gk15(&f, pa, mid);
        let right = gk15(&f, mid, pb);
        total += left.0 + right.0 - pv;
        error += left.1 + right.1 - pe;
        panels.push((pa, mid, left.0, left.1));
        panels.push((mid, pb, right.0, right.1));
    }
    // Re-sum to drop the drift of the running updates.
    Ok(panels.iter().map(|p| p.2).sum())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    const R_C: f64 = 1e-7;

    #[test]
    fn quadrature_of_gaussian_moments() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(
            integrate(|u| (-u * u).exp(), 0.0, U_MAX).unwrap(),
            0.5 * sqrt_pi,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            integrate(|u| u.powi(4) * (-u * u).exp(), 0.0, U_MAX).unwrap(),
            3.0 * sqrt_pi / 8.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn small_sphere_is_point_mass() {
        let m = 1e-15;
        let d = MassDensity::new(
            m,
            Shape::Sphere {
                radius: R_C / 100.0,
            },
        )
        .unwrap();
        assert_relative_eq!(
            alpha_factor(&d, R_C).unwrap(),
            point_mass_alpha(m),
            max_relative = 1e-4
        );
    }

    #[test]
    fn small_cube_is_point_mass() {
        let m = 1e-15;
        let d = MassDensity::new(m, Shape::Cube { side: R_C / 100.0 }).unwrap();
        assert_relative_eq!(
            alpha_factor(&d, R_C).unwrap(),
            point_mass_alpha(m),
            max_relative = 1e-4
        );
    }

    #[test]
    fn bigger_sphere_of_same_mass_has_smaller_alpha() {
        let m = 1e-15;
        let a5 = alpha_factor(
            &MassDensity::new(m, Shape::Sphere { radius: 5.0 * R_C }).unwrap(),
            R_C,
        )
        .unwrap();
        let a10 = alpha_factor(
            &MassDensity::new(m, Shape::Sphere { radius: 10.0 * R_C }).unwrap(),
            R_C,
        )
        .unwrap();
        assert!(a10 < a5, "{a10} vs {a5}");
    }

    #[test]
    fn large_sphere_scaling() {
        // For R ≫ r_c, α ≈ 3 (m/m₀)² (r_c/R)⁴, from |F|² ≈ 9/(2 x⁴) on average.
        let m = 1e-15;
        let r = 50.0 * R_C;
        let a = alpha_factor(
            &MassDensity::new(m, Shape::Sphere { radius: r }).unwrap(),
            R_C,
        )
        .unwrap();
        let approx = 3.0 * (m / AMU).powi(2) * (R_C / r).powi(4);
        assert_relative_eq!(a, approx, max_relative = 0.05);
    }

    #[test]
    fn rate_formula() {
        let p = CslParams {
            lambda_rate: 1e-9,
            r_c: R_C,
            mass: 1e-15,
            omega_m: 1e5,
        };
        let d = MassDensity::new(p.mass, Shape::Sphere { radius: 1e-6 }).unwrap();
        let base = csl_diffusion_rate(&p, &d).unwrap();
        let alpha = alpha_factor(&d, R_C).unwrap();
        assert_relative_eq!(
            base,
            1e-9 * HBAR * alpha / (1e5 * 1e-15 * R_C * R_C),
            max_relative = 1e-15
        );
        let zero = csl_diffusion_rate(
            &CslParams {
                lambda_rate: 0.0,
                ..p
            },
            &d,
        )
        .unwrap();
        assert_eq!(zero, 0.0);
        let doubled = csl_diffusion_rate(
            &CslParams {
                lambda_rate: 2e-9,
                ..p
            },
            &d,
        )
        .unwrap();
        assert_relative_eq!(doubled, 2.0 * base, max_relative = 1e-15);
        assert_relative_eq!(
            lambda_from_alpha(
                &CslParams {
                    r_c: 2.0 * R_C,
                    ..p
                },
                alpha
            ),
            base / 4.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn mismatched_mass_is_rejected() {
        let p = CslParams {
            lambda_rate: 1e-9,
            r_c: R_C,
            mass: 1e-15,
            omega_m: 1e5,
        };
        let d = MassDensity::new(2e-15, Shape::Cube { side: 1e-6 }).unwrap();
        assert!(csl_diffusion_rate(&p, &d).is_err());
        assert!(MassDensity::new(-1.0, Shape::Cube { side: 1e-6 }).is_err());
        assert!(MassDensity::new(1.0, Shape::Sphere { radius: 0.0 }).is_err());
    }

    proptest! {
        #[test]
        fn alpha_scales_as_mass_squared(log_size in -9.0f64..-5.5, k in 0.1f64..10.0, cube in any::<bool>()) {
            let size = 10f64.powf(log_size);
            let shape = if cube { Shape::Cube { side: size } } else { Shape::Sphere { radius: size } };
            let a1 = alpha_factor(&MassDensity::new(1e-15, shape).unwrap(), R_C).unwrap();
            let a2 = alpha_factor(&MassDensity::new(k * 1e-15, shape).unwrap(), R_C).unwrap();
            prop_assert!(a1 > 0.0);
            prop_assert!((a2 / a1 - k * k).abs() <= 1e-9 * k * k);
        }
    }
}
