//! Monte-Carlo evaluation of the phase-matched read-out
//! `⟨d†d⟩ = ∫p(x) |∫p(y) e^{−itV(x−y)/ħ} d³y|^{2 n_p} d³x`
//! for a Gaussian cloud with `n_p` independent control excitations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{angular_factor, excluded_volume_integral, CloudKind, DipolarParams, QuadratureSpec};
use crate::error::{Error, Result};

pub const MIN_MC_SAMPLES: usize = 10_000;
const SHARD: usize = 4096;

/// How the inner (control-position) integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerIntegral {
    /// `1 − p(x) A(t)`: the density is taken constant over the excluded
    /// volume.
    LocalDensity,
    /// Sample control positions from the cloud and average the phase factor.
    /// The finite inner sample biases `|·|²` upwards by about `Var/inner`.
    DirectSampling { inner_samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

struct Gaussian3 {
    sigma: [f64; 3],
    norm: f64,
}

impl Gaussian3 {
    fn new(sigma: [f64; 3]) -> Self {
        let norm = 1.0 / ((2.0 * PI).powf(1.5) * sigma.iter().product::<f64>());
        Self { sigma, norm }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (xi, s) in x.iter_mut().zip(self.sigma) {
            let z: f64 = rng.sample(StandardNormal);
            *xi = s * z;
        }
        x
    }

    fn density(&self, x: &[f64; 3]) -> f64 {
        let q: f64 = x
            .iter()
            .zip(self.sigma)
            .map(|(xi, s)| (xi / s).powi(2))
            .sum();
        self.norm * (-0.5 * q).exp()
    }
}

/// Estimate of `⟨d†d⟩` per d excitation after `t` µs with `n_p` controls.
///
/// Samples are drawn in shards of 4096, shard `k` from the ChaCha stream `k`
/// of `seed`, so the result does not depend on thread scheduling.
pub fn readout_expectation_mc(
    t: f64,
    n_p: u32,
    params: &DipolarParams,
    samples: usize,
    seed: u64,
    inner: InnerIntegral,
    spec: &QuadratureSpec,
) -> Result<McEstimate> {
    if params.cloud.kind() != CloudKind::Gaussian {
        return Err(Error::InvalidArgument(
            "Monte-Carlo read-out needs a Gaussian cloud".into(),
        ));
    }
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "{samples} samples requested, at least {MIN_MC_SAMPLES} needed"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time t = {t} must be non-negative")));
    }
    if t == 0.0 || n_p == 0 {
        return Ok(McEstimate {
            mean: 1.0,
            std_error: 0.0,
            samples,
        });
    }
    let cloud = Gaussian3::new(params.cloud.dimensions());
    let exponent = 2 * n_p as i32;
    let excluded = match inner {
        InnerIntegral::LocalDensity => Some(excluded_volume_integral(t, params, spec)?.value),
        InnerIntegral::DirectSampling { inner_samples } => {
            if inner_samples == 0 {
                return Err(Error::InvalidArgument("inner_samples must be positive".into()));
            }
            None
        }
    };

    let shards = samples.div_ceil(SHARD);
    let partial: Vec<(f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let n = SHARD.min(samples - shard * SHARD);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let x = cloud.sample(&mut rng);
                let amplitude = match (inner, excluded) {
                    (InnerIntegral::LocalDensity, Some(a)) => {
                        Complex64::new(1.0, 0.0) - a * cloud.density(&x)
                    }
                    (InnerIntegral::DirectSampling { inner_samples }, _) => {
                        direct_amplitude(&x, t, params, &cloud, inner_samples, &mut rng)
                    }
                    _ => unreachable!("excluded volume computed for local density"),
                };
                let g = amplitude.norm_sqr().powi(exponent / 2);
                sum += g;
                sum_sq += g * g;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

fn direct_amplitude<R: Rng>(
    x: &[f64; 3],
    t: f64,
    params: &DipolarParams,
    cloud: &Gaussian3,
    inner_samples: usize,
    rng: &mut R,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..inner_samples {
        let y = cloud.sample(rng);
        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if r2 == 0.0 {
            continue;
        }
        let r = r2.sqrt();
        let vartheta = (d[2] / r).clamp(-1.0, 1.0).acos();
        let phase = -t * params.c3_over_hbar / (r2 * r) * angular_factor(vartheta);
        acc += Complex64::from_polar(1.0, phase);
    }
    acc / inner_samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipolar::{CloudGeometry, CloudKind};

    fn params() -> DipolarParams {
        let cloud = CloudGeometry::new(CloudKind::Gaussian, [20.0, 20.0, 40.0]).unwrap();
        DipolarParams::from_c3_ghz(3.709, crate::dipolar::C3Convention::Angular, cloud).unwrap()
    }

    #[test]
    fn zero_time_is_exactly_one() {
        let spec = QuadratureSpec::default();
        let r = readout_expectation_mc(0.0, 3, &params(), 10_000, 1, InnerIntegral::LocalDensity, &spec)
            .unwrap();
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn rejects_small_samples_and_box_clouds() {
        let spec = QuadratureSpec::default();
        assert!(readout_expectation_mc(1.0, 1, &params(), 100, 1, InnerIntegral::LocalDensity, &spec)
            .is_err());
        let boxed = DipolarParams::experimental(crate::dipolar::C3Convention::Angular);
        assert!(readout_expectation_mc(1.0, 1, &boxed, 10_000, 1, InnerIntegral::LocalDensity, &spec)
            .is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = QuadratureSpec::default();
        let a = readout_expectation_mc(0.5, 2, &params(), 20_000, 9, InnerIntegral::LocalDensity, &spec)
            .unwrap();
        let b = readout_expectation_mc(0.5, 2, &params(), 20_000, 9, InnerIntegral::LocalDensity, &spec)
            .unwrap();
        assert_eq!(a, b);
    }
}
