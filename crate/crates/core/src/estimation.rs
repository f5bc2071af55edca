//! Synthetic shot data, maximum-likelihood angle estimation and conversion of
//! angle precision to microwave-field precision.
//!
//! Random streams: a run seeded with `seed` draws realization `r` from ChaCha
//! stream `r` and bootstrap resample `b` from stream `2⁴⁰ + b`, so results do
//! not depend on how rayon schedules the work.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiparticle::{count_distribution, fisher_information, ProtocolParams};
use crate::units::HBAR;

pub const DEFAULT_GRID_POINTS: usize = 2000;
pub const DEFAULT_BOOTSTRAP: usize = 200;
/// Fewer realizations than this make the variance unreliable.
pub const MIN_REALIZATIONS: usize = 10;
const BOOTSTRAP_STREAM: u64 = 1 << 40;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotBatch {
    pub counts: Vec<u32>,
    pub theta_true: f64,
    pub params: ProtocolParams,
    pub seed: u64,
}

fn cumulative(params: &ProtocolParams, theta: f64) -> Vec<f64> {
    let mut acc = 0.0;
    count_distribution(params, theta)
        .probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn draw<R: Rng>(cdf: &[f64], rng: &mut R, n: usize) -> Vec<u32> {
    let last = cdf.len() - 1;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c <= u).min(last) as u32
        })
        .collect()
}

/// `n_shots` detected counts by inverse-CDF sampling.
pub fn sample_shots(params: &ProtocolParams, theta: f64, n_shots: usize, seed: u64) -> Result<ShotBatch> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("n_shots must be at least 1".into()));
    }
    let cdf = cumulative(params, theta);
    Ok(ShotBatch {
        counts: draw(&cdf, &mut rng_for(seed, 0), n_shots),
        theta_true: theta,
        params: *params,
        seed,
    })
}

/// Candidate angles `θ_i = (i+1) h`, `h = range/(points+1)`, so both ends of
/// the range are excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    thetas: Vec<f64>,
    step: f64,
}

impl ThetaGrid {
    pub fn new(points: usize, range: f64) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidArgument(format!(
                "theta grid needs at least 3 points, got {points}"
            )));
        }
        if !(range > 0.0 && range <= 2.0 * PI) {
            return Err(Error::InvalidArgument(format!("theta range {range} outside (0, 2π]")));
        }
        let step = range / (points + 1) as f64;
        Ok(Self {
            thetas: (1..=points).map(|i| i as f64 * step).collect(),
            step,
        })
    }

    /// `(0, π)`, one Rabi half-period.
    pub fn half_period(points: usize) -> Result<Self> {
        Self::new(points, PI)
    }

    /// `(0, 2π)`. The count statistics are symmetric under `θ → 2π − θ`,
    /// so estimates on this grid are only identified up to that reflection.
    pub fn full_period(points: usize) -> Result<Self> {
        Self::new(points, 2.0 * PI)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self::half_period(DEFAULT_GRID_POINTS).expect("valid default grid")
    }
}

/// Argmax of `values` with ties going to the lower index, refined by the
/// vertex of the parabola through the neighbouring points.
fn refined_argmax(grid: &ThetaGrid, values: &[f64]) -> Option<f64> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    let i = best?;
    let theta = grid.thetas[i];
    if i == 0 || i + 1 == values.len() {
        return Some(theta);
    }
    let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
    let curvature = l - 2.0 * c + r;
    if !(l.is_finite() && r.is_finite()) || curvature >= 0.0 {
        return Some(theta);
    }
    let offset = (0.5 * (l - r) / curvature).clamp(-0.5, 0.5);
    Some(theta + offset * grid.step)
}

/// `ln P_θ(n)` for every grid angle and count up to the truncation.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    params: ProtocolParams,
    grid: ThetaGrid,
    // ln_p[n][i]
    ln_p: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    pub fn new(params: &ProtocolParams, grid: ThetaGrid) -> Self {
        let columns: Vec<Vec<f64>> = grid
            .thetas
            .par_iter()
            .map(|&t| count_distribution(params, t).probabilities)
            .collect();
        let counts = params.n_trunc + 1;
        let ln_p = (0..counts)
            .map(|n| columns.iter().map(|col| col[n].ln()).collect())
            .collect();
        Self {
            params: *params,
            grid,
            ln_p,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    /// `Σ_shots ln P_θ(n)` on the grid.
    pub fn log_likelihood(&self, counts: &[u32]) -> Result<Vec<f64>> {
        let mut histogram = vec![0u64; self.ln_p.len()];
        for &c in counts {
            *histogram
                .get_mut(c as usize)
                .ok_or(Error::ImpossibleCounts)? += 1;
        }
        let mut ll = vec![0.0; self.grid.thetas.len()];
        for (row, &h) in self.ln_p.iter().zip(&histogram) {
            if h == 0 {
                continue;
            }
            let h = h as f64;
            for (acc, lp) in ll.iter_mut().zip(row) {
                *acc += h * lp;
            }
        }
        Ok(ll)
    }

    /// Maximum-likelihood angle.
    pub fn estimate(&self, counts: &[u32]) -> Result<f64> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("no shots to estimate from".into()));
        }
        let ll = self.log_likelihood(counts)?;
        refined_argmax(&self.grid, &ll).ok_or(Error::ImpossibleCounts)
    }
}

/// Maximum-likelihood angle of `counts` on `grid`.
pub fn ml_estimate(counts: &[u32], params: &ProtocolParams, grid: &ThetaGrid) -> Result<f64> {
    LikelihoodTable::new(params, grid.clone()).estimate(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta_true: f64,
    pub theta_hat_mean: f64,
    pub variance: f64,
    pub fi_per_shot: f64,
    pub fi_error: f64,
    pub bias: f64,
    pub shots_per_realization: usize,
    pub realizations: usize,
    /// Set when there are fewer than [`MIN_REALIZATIONS`] realizations.
    pub few_realizations: bool,
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn partition_fi(table: &LikelihoodTable, shots: &[u32], per: usize) -> Result<(f64, f64)> {
    let estimates: Vec<f64> = shots
        .chunks(per)
        .map(|chunk| table.estimate(chunk))
        .collect::<Result<_>>()?;
    let (mean, var) = mean_and_variance(&estimates);
    if var <= 0.0 {
        return Err(Error::Degenerate(
            "all realizations gave the same estimate".into(),
        ));
    }
    Ok((mean, var))
}

/// Simulates `total_shots` shots at `theta_true`, splits them into
/// realizations of `per_realization` shots, and estimates the per-shot Fisher
/// information from the spread of the ML estimates. `bootstrap` random
/// re-partitions of the same shots give its standard error.
pub fn run_estimation(
    table: &LikelihoodTable,
    theta_true: f64,
    total_shots: usize,
    per_realization: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<EstimationResult> {
    if per_realization == 0 || total_shots == 0 || total_shots % per_realization != 0 {
        return Err(Error::InvalidArgument(format!(
            "{per_realization} shots per realization must divide {total_shots}"
        )));
    }
    let k = total_shots / per_realization;
    if k < 2 {
        return Err(Error::InvalidArgument("need at least two realizations".into()));
    }
    if bootstrap < 2 {
        return Err(Error::InvalidArgument("need at least two bootstrap resamples".into()));
    }
    let cdf = cumulative(&table.params, theta_true);
    let shots: Vec<u32> = (0..k)
        .into_par_iter()
        .map(|r| draw(&cdf, &mut rng_for(seed, r as u64), per_realization))
        .collect::<Vec<_>>()
        .concat();

    let (theta_hat_mean, variance) = partition_fi(table, &shots, per_realization)?;
    let per = per_realization as f64;
    let resampled: Vec<f64> = (0..bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut permuted = shots.clone();
            permuted.shuffle(&mut rng_for(seed, BOOTSTRAP_STREAM + b as u64));
            partition_fi(table, &permuted, per_realization).map(|(_, v)| 1.0 / (per * v))
        })
        .collect::<Result<_>>()?;
    let (_, boot_var) = mean_and_variance(&resampled);

    Ok(EstimationResult {
        theta_true,
        theta_hat_mean,
        variance,
        fi_per_shot: 1.0 / (per * variance),
        fi_error: boot_var.sqrt(),
        bias: theta_hat_mean - theta_true,
        shots_per_realization: per_realization,
        realizations: k,
        few_realizations: k < MIN_REALIZATIONS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Per-shot angle uncertainty, rad.
    pub delta_theta: f64,
    /// s.
    pub pulse_time_t: f64,
    /// V/cm.
    pub delta_e: f64,
    /// V cm⁻¹ Hz^{-1/2}.
    pub sensitivity_s: f64,
    /// C m.
    pub dipole_moment: f64,
    /// rad/s, when the pulse time came from an angle and a Rabi frequency.
    pub rabi_frequency: Option<f64>,
    /// rad.
    pub theta_star: Option<f64>,
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {value} must be positive")))
    }
}

/// `ΔE = √(Δ²θ)/T · ħ/d` and `S = ΔE √T`.
pub fn field_precision(delta2_theta: f64, pulse_time: f64, dipole_moment: f64) -> Result<SensitivityReport> {
    check_positive("delta2_theta", delta2_theta)?;
    check_positive("pulse_time", pulse_time)?;
    check_positive("dipole_moment", dipole_moment)?;
    let delta_theta = delta2_theta.sqrt();
    // V/m to V/cm
    let delta_e = delta_theta / pulse_time * HBAR / dipole_moment / 100.0;
    Ok(SensitivityReport {
        delta_theta,
        pulse_time_t: pulse_time,
        delta_e,
        sensitivity_s: delta_e * pulse_time.sqrt(),
        dipole_moment,
        rabi_frequency: None,
        theta_star: None,
    })
}

/// `Ω = d E/ħ` in rad/s for a field in V/m.
pub fn rabi_frequency(field: f64, dipole_moment: f64) -> f64 {
    dipole_moment * field / HBAR
}

/// Field in V/m driving Rabi frequency `omega`.
pub fn field_from_rabi_frequency(omega: f64, dipole_moment: f64) -> f64 {
    omega * HBAR / dipole_moment
}

/// Angle of largest analytic per-shot Fisher information on `grid`, with
/// that information.
pub fn optimal_angle(params: &ProtocolParams, grid: &ThetaGrid) -> Result<(f64, f64)> {
    let fi: Vec<f64> = grid
        .thetas
        .par_iter()
        .map(|&t| fisher_information(params, t))
        .collect::<Result<_>>()?;
    let theta = refined_argmax(grid, &fi)
        .ok_or_else(|| Error::Degenerate("Fisher information is not finite".into()))?;
    Ok((theta, fisher_information(params, theta)?))
}

/// Field precision at the FI-optimal angle: `T = θ*/Ω`. The per-shot
/// information defaults to the analytic value at `θ*`.
pub fn sensitivity_pipeline(
    params: &ProtocolParams,
    grid: &ThetaGrid,
    omega: f64,
    dipole_moment: f64,
    fi_per_shot: Option<f64>,
) -> Result<SensitivityReport> {
    check_positive("rabi_frequency", omega)?;
    let (theta_star, analytic) = optimal_angle(params, grid)?;
    let fi = fi_per_shot.unwrap_or(analytic);
    check_positive("fi_per_shot", fi)?;
    let pulse_time = theta_star / omega;
    let mut report = field_precision(1.0 / fi, pulse_time, dipole_moment)?;
    report.rabi_frequency = Some(omega);
    report.theta_star = Some(theta_star);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiparticle::LossOrder;
    use crate::units::ATOMIC_DIPOLE;

    fn params(gt: f64) -> ProtocolParams {
        ProtocolParams::new(55.0, 0.02, gt, LossOrder::AfterInteraction).unwrap()
    }

    #[test]
    fn grid_excludes_endpoints() {
        let g = ThetaGrid::default();
        assert_eq!(g.thetas().len(), 2000);
        assert!((g.thetas()[0] - PI / 2001.0).abs() < 1e-15);
        assert!(*g.thetas().last().unwrap() < PI);
        assert!(ThetaGrid::half_period(2).is_err());
    }

    #[test]
    fn ties_go_to_smaller_angle() {
        let g = ThetaGrid::half_period(5).unwrap();
        let v = [0.0, 1.0, 0.0, 1.0, 0.0];
        let t = refined_argmax(&g, &v).unwrap();
        assert_eq!(t, g.thetas()[1]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = params(0.03);
        let a = sample_shots(&p, 1.0, 500, 4).unwrap();
        let b = sample_shots(&p, 1.0, 500, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, sample_shots(&p, 1.0, 500, 5).unwrap().counts);
        assert!(sample_shots(&p, 1.0, 0, 4).is_err());
    }

    #[test]
    fn replicated_batch_same_estimate() {
        let p = params(0.03);
        let table = LikelihoodTable::new(&p, ThetaGrid::half_period(400).unwrap());
        let batch = sample_shots(&p, 1.2, 300, 1).unwrap();
        let twice: Vec<u32> = batch.counts.iter().chain(&batch.counts).copied().collect();
        assert_eq!(table.estimate(&batch.counts).unwrap(), table.estimate(&twice).unwrap());
    }

    #[test]
    fn impossible_counts_rejected() {
        let p = params(0.03);
        let table = LikelihoodTable::new(&p, ThetaGrid::half_period(50).unwrap());
        assert_eq!(table.estimate(&[10_000]), Err(Error::ImpossibleCounts));
    }

    #[test]
    fn divisibility_checked() {
        let p = params(0.03);
        let table = LikelihoodTable::new(&p, ThetaGrid::half_period(50).unwrap());
        assert!(run_estimation(&table, 1.0, 1000, 30, 20, 1).is_err());
    }

    #[test]
    fn field_precision_scaling() {
        let d = 1950.0 * ATOMIC_DIPOLE;
        let a = field_precision(0.3, 1e-6, d).unwrap();
        let b = field_precision(0.3, 2e-6, d).unwrap();
        assert!((a.delta_e / b.delta_e - 2.0).abs() < 1e-12);
        assert!((a.sensitivity_s / b.sensitivity_s - 2f64.sqrt()).abs() < 1e-12);
        assert!((a.sensitivity_s - a.delta_e * 1e-3).abs() < 1e-20);
        assert!(field_precision(0.3, 0.0, d).is_err());
        assert!(field_precision(0.3, 1e-6, -d).is_err());
    }

    #[test]
    fn field_round_trip() {
        let d = 1950.0 * ATOMIC_DIPOLE;
        let e = 0.0123;
        let omega = rabi_frequency(e, d);
        let t = 0.7e-6;
        let theta = omega * t;
        let back = field_from_rabi_frequency(theta / t, d);
        assert!((back / e - 1.0).abs() < 1e-12);
    }
}
