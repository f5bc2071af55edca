//! Dipolar excluded volume and the interaction-induced decay rate.
//!
//! Units: lengths in µm, times in µs, angular frequencies in rad/µs. The
//! pair potential is `V(r, ϑ)/ħ = (C₃/ħ r³)(3 cos 2ϑ + 1)/4` with ϑ measured
//! from the z axis.
//!
//! The excluded volume `A(t) = ∫[1 − exp(−i t V(x)/ħ)] d³x` has a real part
//! that grows linearly, `Re A(t) = Q t` with `Q = (4π²/9√3) C₃/ħ`, and the
//! phase-matched read-out of one mode decays at `γ = 2Q/𝒱` per excitation in
//! the other mode, where `𝒱 = 1/∫p²` is the effective cloud volume.

mod readout;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gk15, integrate};
use crate::units;

pub use readout::{readout_expectation_mc, InnerIntegral, McEstimate, MIN_MC_SAMPLES};

/// `C₃/h` of the d–p pair used in the experiment, GHz·µm³.
pub const C3_GHZ_UM3: f64 = 3.709;

/// Angle where the angular factor changes sign, `cos²ϑ = 1/3`.
pub fn magic_angle() -> f64 {
    (1.0 / 3f64.sqrt()).acos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudKind {
    /// Uniform density in a rectangular box with the given edge lengths.
    Box,
    /// Product Gaussian density with the given standard deviations.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudGeometry {
    kind: CloudKind,
    dimensions: [f64; 3],
}

impl CloudGeometry {
    /// `dimensions` in µm: edge lengths for a box, standard deviations for a
    /// Gaussian.
    pub fn new(kind: CloudKind, dimensions: [f64; 3]) -> Result<Self> {
        if let Some(&bad) = dimensions.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "cloud dimension {bad} must be positive"
            )));
        }
        Ok(Self { kind, dimensions })
    }

    pub fn kind(&self) -> CloudKind {
        self.kind
    }

    pub fn dimensions(&self) -> [f64; 3] {
        self.dimensions
    }

    /// `𝒱 = 1/∫p² d³x` in µm³. A box gives its volume; a Gaussian gives
    /// `(4π)^{3/2} σ_x σ_y σ_z`.
    pub fn effective_volume(&self) -> f64 {
        let product: f64 = self.dimensions.iter().product();
        match self.kind {
            CloudKind::Box => product,
            CloudKind::Gaussian => (4.0 * PI).powf(1.5) * product,
        }
    }
}

/// How a tabulated `C₃/h` in GHz·µm³ becomes an angular `C₃/ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C3Convention {
    /// `C₃/ħ = 2π × (C₃/h)`.
    Angular,
    /// `C₃/ħ` taken numerically equal to the tabulated value.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipolarParams {
    /// `C₃/ħ` in rad/µs·µm³.
    pub c3_over_hbar: f64,
    pub cloud: CloudGeometry,
}

impl DipolarParams {
    pub fn new(c3_over_hbar: f64, cloud: CloudGeometry) -> Result<Self> {
        if !(c3_over_hbar > 0.0 && c3_over_hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "C3/hbar = {c3_over_hbar} must be positive"
            )));
        }
        Ok(Self { c3_over_hbar, cloud })
    }

    /// From a tabulated `C₃/h` in GHz·µm³.
    pub fn from_c3_ghz(c3_ghz_um3: f64, convention: C3Convention, cloud: CloudGeometry) -> Result<Self> {
        // 1 GHz = 1e3 / µs
        let per_us = c3_ghz_um3 * 1e3;
        let c3 = match convention {
            C3Convention::Angular => 2.0 * PI * per_us,
            C3Convention::Plain => per_us,
        };
        Self::new(c3, cloud)
    }

    /// Tabulated experimental pair and the 80 × 80 × 4000 µm³ box.
    pub fn experimental(convention: C3Convention) -> Self {
        let cloud = CloudGeometry::new(CloudKind::Box, [80.0, 80.0, 4000.0]).expect("valid box");
        Self::from_c3_ghz(C3_GHZ_UM3, convention, cloud).expect("valid C3")
    }
}

/// `(3 cos 2ϑ + 1)/4`.
pub fn angular_factor(vartheta: f64) -> f64 {
    0.25 * (3.0 * (2.0 * vartheta).cos() + 1.0)
}

/// `V/ħ` in rad/µs for separation `r` µm at polar angle `vartheta`.
pub fn pair_potential(r: f64, vartheta: f64, params: &DipolarParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("separation r = {r} must be positive")));
    }
    Ok(params.c3_over_hbar / r.powi(3) * angular_factor(vartheta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Panels of the 15-point rule over ϑ ∈ [0, π].
    pub angular_panels: usize,
    /// Absolute tolerance of the scale-free radial integral.
    pub radial_abs_tol: f64,
    /// Oscillation periods integrated numerically before the asymptotic tail.
    pub radial_periods: usize,
    pub max_segments: usize,
    /// Relative accuracy demanded of `Re A`.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            angular_panels: 256,
            radial_abs_tol: 1e-8,
            radial_periods: 64,
            max_segments: 20_000,
            rel_tol: 5e-3,
        }
    }
}

/// Panel edges over [0, π] with the two sign changes of the angular factor
/// as breakpoints.
fn angular_panels(count: usize) -> Vec<f64> {
    let zero = magic_angle();
    let sections = [(0.0, zero), (zero, PI - zero), (PI - zero, PI)];
    let count = count.max(3);
    let mut edges = vec![0.0];
    let mut assigned = 0;
    for (k, &(a, b)) in sections.iter().enumerate() {
        let n = if k == 2 {
            count - assigned
        } else {
            (((b - a) / PI * count as f64).round() as usize).max(1)
        };
        assigned += n;
        for i in 1..=n {
            edges.push(a + (b - a) * i as f64 / n as f64);
        }
    }
    *edges.last_mut().expect("non-empty") = PI;
    edges
}

/// `∫|f(ϑ)| dΩ` of the angular factor, `8π/(3√3)` exactly.
pub fn angular_abs_integral(spec: &QuadratureSpec) -> f64 {
    let edges = angular_panels(spec.angular_panels);
    edges
        .windows(2)
        .map(|w| gk15(&mut |th: f64| angular_factor(th).abs() * th.sin(), w[0], w[1]).0)
        .sum::<f64>()
        * 2.0
        * PI
}

/// `∫₀^∞ (1 − cos v)/v² dv` (= π/2), integrated over `radial_periods` periods
/// with the remainder from its asymptotic expansion `1/V − 2/V³ + 24/V⁵`.
///
/// With `u = 1/r³` the radial part of `A(t)` at fixed angle becomes
/// `(1/3)∫(1 − e^{−iκu})/u² du`, `κ = t C₃ f(ϑ)/ħ`; rescaling `v = |κ|u` leaves
/// this κ-independent profile.
fn radial_profile(spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let periods = spec.radial_periods.max(4);
    let breaks: Vec<f64> = (0..=periods).map(|k| 2.0 * PI * k as f64).collect();
    let body = integrate(
        |v: f64| {
            if v < 1e-4 {
                0.5 - v * v / 24.0
            } else {
                let s = (0.5 * v).sin();
                2.0 * s * s / (v * v)
            }
        },
        &breaks,
        spec.radial_abs_tol,
        spec.max_segments,
    )?;
    let big_v = *breaks.last().expect("non-empty");
    let tail = 1.0 / big_v - 2.0 / big_v.powi(3) + 24.0 / big_v.powi(5);
    Ok((body.value + tail, body.error + 720.0 / big_v.powi(7)))
}

/// Excluded volume with an error estimate on its real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcludedVolume {
    /// µm³.
    pub value: Complex64,
    pub real_error: f64,
}

/// `A(t)` for `t` in µs.
///
/// The real part carries the accuracy contract. The imaginary part is the
/// principal value over angles: its radial integral diverges logarithmically
/// at large r, but the divergent piece is proportional to `∫f dΩ = 0`, which
/// leaves `Im A = −(1/3)∫κ ln|κ| dΩ`.
pub fn excluded_volume_integral(
    t: f64,
    params: &DipolarParams,
    spec: &QuadratureSpec,
) -> Result<ExcludedVolume> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time t = {t} must be positive")));
    }
    let (profile, profile_err) = radial_profile(spec)?;
    let scale = t * params.c3_over_hbar;
    let edges = angular_panels(spec.angular_panels);
    let mut re = 0.0;
    let mut re_err = 0.0;
    let mut im = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk15(
            &mut |th: f64| (scale * angular_factor(th)).abs() * th.sin(),
            w[0],
            w[1],
        );
        re += v;
        re_err += e;
        im += gk15(
            &mut |th: f64| {
                let kappa = scale * angular_factor(th);
                if kappa == 0.0 {
                    0.0
                } else {
                    kappa * kappa.abs().ln() * th.sin()
                }
            },
            w[0],
            w[1],
        )
        .0;
    }
    let two_pi_third = 2.0 * PI / 3.0;
    let real = two_pi_third * re * profile;
    let real_error = two_pi_third * (re_err * profile + re * profile_err);
    if real_error > spec.rel_tol * real.abs() {
        return Err(Error::Convergence {
            estimate: real_error / real.abs(),
            tolerance: spec.rel_tol,
        });
    }
    Ok(ExcludedVolume {
        value: Complex64::new(real, -two_pi_third * im),
        real_error,
    })
}

/// `Q = (4π²/9√3) C₃/ħ` in µm³/µs.
pub fn volumetric_rate_q(params: &DipolarParams) -> f64 {
    4.0 * PI * PI / (9.0 * 3f64.sqrt()) * params.c3_over_hbar
}

/// `γ = 2Q/𝒱` in 1/µs.
pub fn decay_rate_gamma(params: &DipolarParams) -> f64 {
    2.0 * volumetric_rate_q(params) / params.cloud.effective_volume()
}

/// `γ` in 1/s.
pub fn decay_rate_gamma_si(params: &DipolarParams) -> f64 {
    units::per_us_to_per_s(decay_rate_gamma(params))
}

/// Least-squares slope through the origin and the worst relative residual of
/// `Re A(t)` against `t`.
pub fn fit_linear_rate(times: &[f64], re_a: &[f64]) -> (f64, f64) {
    let num: f64 = times.iter().zip(re_a).map(|(t, a)| t * a).sum();
    let den: f64 = times.iter().map(|t| t * t).sum();
    let slope = num / den;
    let worst = times
        .iter()
        .zip(re_a)
        .map(|(t, a)| ((a - slope * t) / (slope * t)).abs())
        .fold(0.0, f64::max);
    (slope, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> DipolarParams {
        let cloud = CloudGeometry::new(CloudKind::Box, [10.0, 10.0, 10.0]).unwrap();
        DipolarParams::new(1.0, cloud).unwrap()
    }

    #[test]
    fn potential_examples() {
        let p = unit_params();
        assert!((pair_potential(1.0, 0.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((pair_potential(1.0, PI / 2.0, &p).unwrap() + 0.5).abs() < 1e-15);
        let ratio = pair_potential(2.0, 0.3, &p).unwrap() / pair_potential(1.0, 0.3, &p).unwrap();
        assert!((ratio - 0.125).abs() < 1e-15);
        assert!(pair_potential(0.0, 0.3, &p).is_err());
        assert!(angular_factor(magic_angle()).abs() < 1e-15);
    }

    #[test]
    fn q_closed_form() {
        let p = unit_params();
        assert!((volumetric_rate_q(&p) - 2.532_541_670_117).abs() < 1e-11);
        let exp = DipolarParams::experimental(C3Convention::Angular);
        let q_si = units::um3_per_us_to_m3_per_s(volumetric_rate_q(&exp)) * units::UM3_PER_M3;
        assert!((q_si / 5.90e10 - 1.0).abs() < 2e-3, "{q_si}");
    }

    #[test]
    fn gamma_scales_inversely_with_volume() {
        let small = CloudGeometry::new(CloudKind::Box, [10.0, 10.0, 10.0]).unwrap();
        let big = CloudGeometry::new(CloudKind::Box, [20.0, 10.0, 10.0]).unwrap();
        let a = DipolarParams::new(5.0, small).unwrap();
        let b = DipolarParams::new(5.0, big).unwrap();
        assert!((decay_rate_gamma(&a) / decay_rate_gamma(&b) - 2.0).abs() < 1e-14);
        assert_eq!(
            decay_rate_gamma(&a) * small.effective_volume(),
            2.0 * volumetric_rate_q(&a)
        );
    }

    #[test]
    fn gaussian_effective_volume() {
        let g = CloudGeometry::new(CloudKind::Gaussian, [1.0, 2.0, 3.0]).unwrap();
        assert!((g.effective_volume() - (4.0 * PI).powf(1.5) * 6.0).abs() < 1e-12);
        assert!(CloudGeometry::new(CloudKind::Box, [1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn radial_profile_is_half_pi() {
        let (v, e) = radial_profile(&QuadratureSpec::default()).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-8, "{v}");
        assert!(e < 1e-7);
    }

    #[test]
    fn angular_identity() {
        let v = angular_abs_integral(&QuadratureSpec::default());
        assert!((v - 8.0 * PI / (3.0 * 3f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn panels_cover_the_interval() {
        let e = angular_panels(256);
        assert_eq!(e.len(), 257);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), PI);
        assert!(e.iter().any(|&x| (x - magic_angle()).abs() < 1e-15));
    }

    #[test]
    fn excluded_volume_rejects_nonpositive_time() {
        assert!(excluded_volume_integral(0.0, &unit_params(), &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn excluded_volume_small_time() {
        let p = unit_params();
        let a = excluded_volume_integral(1e-9, &p, &QuadratureSpec::default()).unwrap();
        assert!(a.value.norm() < 1e-7);
    }
}
