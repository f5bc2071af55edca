//! Photon-count statistics of bi-coherent states under mutual
//! interaction-induced decay.
//!
//! With mean `B` excitations in the control mode and `D` detected excitations
//! expected in the read-out mode without decay, the detected count follows
//! the Poisson mixture
//!
//! `P(n) = Σ_m Pois(m; B) Pois(n; D e^{−γτ m})`.
//!
//! For losses after the interaction the decay is driven by the intrinsic
//! population (`B = n₀ sin²(θ/2)`), for losses before it by the thinned one
//! (`B = η n₀ sin²(θ/2)`). In both cases `D = η n₀ cos²(θ/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::fockspace::{
    binomial, classical_fi, FisherEstimate, FockBasis, KrausChannel, CMatrix, DEFAULT_STEP,
};
use num_complex::Complex64;

pub const DEFAULT_TAIL: f64 = 1e-12;
pub const MAX_TAIL: f64 = 1e-10;
pub const MAX_TRUNCATION: usize = 200;
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossOrder {
    AfterInteraction,
    BeforeInteraction,
}

impl LossOrder {
    pub fn name(self) -> &'static str {
        match self {
            LossOrder::AfterInteraction => "after",
            LossOrder::BeforeInteraction => "before",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n0: f64,
    pub eta: f64,
    pub gamma_tau: f64,
    pub loss_order: LossOrder,
    pub n_trunc: usize,
}

impl ProtocolParams {
    /// Validates the inputs and picks the smallest cutoff whose Poisson tail
    /// is below 1e-12 (at most 200).
    pub fn new(n0: f64, eta: f64, gamma_tau: f64, loss_order: LossOrder) -> Result<Self> {
        if !(n0 >= 0.0 && n0.is_finite()) {
            return Err(Error::InvalidArgument(format!("n0 = {n0} must be non-negative")));
        }
        check_probability("eta", eta)?;
        if !(gamma_tau >= 0.0 && gamma_tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma_tau = {gamma_tau} must be non-negative"
            )));
        }
        let mut params = Self {
            n0,
            eta,
            gamma_tau,
            loss_order,
            n_trunc: 0,
        };
        let mean = params.max_mean();
        let mut n = 0;
        while n < MAX_TRUNCATION && poisson_tail(mean, n) >= DEFAULT_TAIL {
            n += 1;
        }
        params.n_trunc = n;
        params.check_truncation()?;
        Ok(params)
    }

    /// Explicit cutoff; rejected if the neglected mass exceeds 1e-10.
    pub fn with_truncation(mut self, n_trunc: usize) -> Result<Self> {
        self.n_trunc = n_trunc;
        self.check_truncation()?;
        Ok(self)
    }

    /// Largest Poisson mean that appears in the mixture for any θ.
    fn max_mean(&self) -> f64 {
        match self.loss_order {
            LossOrder::AfterInteraction => self.n0,
            LossOrder::BeforeInteraction => self.eta * self.n0,
        }
    }

    pub fn neglected_mass(&self) -> f64 {
        poisson_tail(self.max_mean(), self.n_trunc)
    }

    fn check_truncation(&self) -> Result<()> {
        let tail = self.neglected_mass();
        if tail > MAX_TAIL {
            Err(Error::Truncation(tail))
        } else {
            Ok(())
        }
    }

    /// Mean detected photons per shot, `η n₀`.
    pub fn mean_detected(&self) -> f64 {
        self.eta * self.n0
    }

    /// `(B, D)` for the read-out of mode d.
    fn mixture_means(&self, theta: f64) -> (f64, f64) {
        let (s, c) = (0.5 * theta).sin_cos();
        let detected = self.eta * self.n0;
        let control = match self.loss_order {
            LossOrder::AfterInteraction => self.n0,
            LossOrder::BeforeInteraction => detected,
        };
        (control * s * s, detected * c * c)
    }
}

/// `P(X > n)` for `X ~ Pois(mean)`.
fn poisson_tail(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    let mut cdf = term;
    for k in 1..=n {
        term *= mean / k as f64;
        cdf += term;
    }
    // Upper sum directly once the cdf saturates.
    if cdf > 0.5 {
        let mut tail = 0.0;
        let mut t = term;
        let mut k = n + 1;
        loop {
            t *= mean / k as f64;
            tail += t;
            if t < tail * 1e-17 || t == 0.0 {
                break;
            }
            k += 1;
        }
        tail
    } else {
        1.0 - cdf
    }
}

fn ln_poisson(n: usize, mean: f64, ln_fact: &[f64]) -> f64 {
    if mean == 0.0 {
        if n == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        n as f64 * mean.ln() - mean - ln_fact[n]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub theta: f64,
    /// Index is the detected count.
    pub probabilities: Vec<f64>,
    /// Mass dropped by the truncation before renormalization.
    pub tail_mass: f64,
}

impl CountDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        let len = self.probabilities.len().max(other.len());
        0.5 * (0..len)
            .map(|i| {
                let a = self.probabilities.get(i).copied().unwrap_or(0.0);
                let b = other.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .sum::<f64>()
    }
}

fn mixture(theta: f64, control: f64, readout: f64, gamma_tau: f64, n_trunc: usize) -> CountDistribution {
    let ln_fact = crate::fockspace::ln_factorials(n_trunc);
    let weights: Vec<f64> = (0..=n_trunc)
        .map(|m| ln_poisson(m, control, &ln_fact).exp())
        .collect();
    let mut probabilities = vec![0.0; n_trunc + 1];
    for (m, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let mean = readout * (-gamma_tau * m as f64).exp();
        for (n, p) in probabilities.iter_mut().enumerate() {
            *p += w * ln_poisson(n, mean, &ln_fact).exp();
        }
    }
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= total);
    CountDistribution {
        theta,
        probabilities,
        tail_mass: (1.0 - total).max(0.0),
    }
}

/// Distribution of photons detected from mode d.
pub fn count_distribution(params: &ProtocolParams, theta: f64) -> CountDistribution {
    count_distribution_with_extra_loss(params, theta, 1.0)
}

/// As [`count_distribution`] with a further θ-independent detection factor
/// `extra` applied to the read-out.
pub fn count_distribution_with_extra_loss(
    params: &ProtocolParams,
    theta: f64,
    extra: f64,
) -> CountDistribution {
    let (control, readout) = params.mixture_means(theta);
    mixture(theta, control, extra * readout, params.gamma_tau, params.n_trunc)
}

/// Distribution of photons detected from mode p, the mirror image of mode d
/// under `θ → π − θ`.
pub fn count_distribution_p(params: &ProtocolParams, theta: f64) -> CountDistribution {
    let (control, readout) = params.mixture_means(std::f64::consts::PI - theta);
    mixture(theta, control, readout, params.gamma_tau, params.n_trunc)
}

/// Detected means `(⟨n_d⟩, ⟨n_p⟩)`.
pub fn super_rabi_means(params: &ProtocolParams, theta: f64) -> (f64, f64) {
    let survival = 1.0 - (-params.gamma_tau).exp();
    let mean = |angle: f64| {
        let (control, readout) = params.mixture_means(angle);
        readout * (-control * survival).exp()
    };
    (mean(theta), mean(std::f64::consts::PI - theta))
}

/// First-order form `η n₀ cos²(θ/2) exp(−B γτ)`, for comparison only.
pub fn super_rabi_means_approx(params: &ProtocolParams, theta: f64) -> (f64, f64) {
    let mean = |angle: f64| {
        let (control, readout) = params.mixture_means(angle);
        readout * (-control * params.gamma_tau).exp()
    };
    (mean(theta), mean(std::f64::consts::PI - theta))
}

/// Mutual decay channel on the truncated two-mode space.
///
/// The symmetric variant has operators `K_{k,m}` that remove `m` excitations
/// from d and `k` from p, each surviving with probability `e^{−γτ n}` given
/// the other mode's occupation `n`. The asymmetric variant `K_l` damps only
/// mode d. Both only lower occupations, so nothing leaks out of the space.
pub fn interaction_channel_kraus(
    basis: &FockBasis,
    gamma_tau: f64,
    symmetric: bool,
) -> Result<KrausChannel> {
    if !(gamma_tau >= 0.0 && gamma_tau.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma_tau = {gamma_tau} must be non-negative"
        )));
    }
    let n_max = basis.n_max();
    let dim = basis.dim();
    let lost = |n: usize, removed: usize, other: usize| -> f64 {
        let decay = 1.0 - (-gamma_tau * other as f64).exp();
        let keep = (-gamma_tau * other as f64).exp();
        binomial(n, removed) * decay.powi(removed as i32) * keep.powi((n - removed) as i32)
    };
    let mut operators = Vec::new();
    let removals: Vec<(usize, usize)> = if symmetric {
        (0..=n_max)
            .flat_map(|k| (0..=n_max - k).map(move |m| (k, m)))
            .collect()
    } else {
        (0..=n_max).map(|l| (0, l)).collect()
    };
    for (k, m) in removals {
        let mut op = CMatrix::zeros(dim, dim);
        let mut any = false;
        for (col, &(nd, np)) in basis.pairs().iter().enumerate() {
            if m > nd || k > np {
                continue;
            }
            let weight = lost(nd, m, np) * if symmetric { lost(np, k, nd) } else { 1.0 };
            if weight == 0.0 {
                continue;
            }
            let row = basis.index(nd - m, np - k).expect("lowered state in basis");
            op[(row, col)] = Complex64::new(weight.sqrt(), 0.0);
            any = true;
        }
        if any {
            operators.push(op);
        }
    }
    KrausChannel::with_tolerance(basis.clone(), operators, true, NORMALIZATION_TOL)
}

/// Per-shot Fisher information of the detected d-mode count.
///
/// Counts whose probability vanishes at `theta` enter through their limit
/// `4(∂√P)²`, which keeps the value continuous at θ = π.
pub fn fisher_information(params: &ProtocolParams, theta: f64) -> Result<f64> {
    fisher_information_with_extra_loss(params, theta, 1.0)
}

pub fn fisher_information_with_extra_loss(
    params: &ProtocolParams,
    theta: f64,
    extra: f64,
) -> Result<f64> {
    check_probability("extra", extra)?;
    let FisherEstimate {
        value,
        skipped_bound,
        ..
    } = classical_fi(
        |t| Ok(count_distribution_with_extra_loss(params, t, extra).probabilities),
        theta,
        DEFAULT_STEP,
    )?;
    Ok(value + skipped_bound)
}

/// Fisher information per mean detected photon, `F/(η n₀)`.
pub fn normalized_fi(params: &ProtocolParams, theta: f64) -> Result<f64> {
    let mean = params.mean_detected();
    if mean <= 0.0 {
        return Err(Error::InvalidArgument(
            "normalized FI needs a positive mean photon number".into(),
        ));
    }
    Ok(fisher_information(params, theta)? / mean)
}

/// Least-squares fit of `y = A e^{−k τ}` on a log scale; returns `(A, k)`.
pub fn fit_decay_rate(taus: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if taus.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: taus.len(),
            found: values.len(),
        });
    }
    if taus.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points to fit".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidArgument(format!("cannot fit non-positive value {v}")));
    }
    let n = taus.len() as f64;
    let mean_t = taus.iter().sum::<f64>() / n;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mean_l = logs.iter().sum::<f64>() / n;
    let sxx: f64 = taus.iter().map(|t| (t - mean_t).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit needs distinct times".into()));
    }
    let sxy: f64 = taus.iter().zip(&logs).map(|(t, l)| (t - mean_t) * (l - mean_l)).sum();
    let slope = sxy / sxx;
    Ok(((mean_l - slope * mean_t).exp(), -slope))
}
