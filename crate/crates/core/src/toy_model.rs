//! Two-excitation error-prevention protocol.
//!
//! `|2,0⟩` is rotated by `U(θ)`, optionally passed through the channel Λ that
//! sends `|1,1⟩ → |0,0⟩`, and then counted in both modes with efficiency η.
//! Without Λ the Fisher information is `2η` at every angle; with Λ it peaks at
//! `2η(2−η)` for `θ = π/2 + kπ`, which saturates the bound `η(2−η)·F_Q`.
//!
//! All Fisher informations here are brute force: outcome probabilities from
//! [`fockspace::measure`] and derivatives from [`fockspace::classical_fi`].
//!
//! The expression `2 sin²θ [1 + (1−η)²] / (η sin²θ + (1−η)²/(1−η/2))` is not
//! the protected FI: at θ = π/2 it disagrees with `2η(2−η)` for intermediate
//! η (3.0 instead of 1.5 at η = 0.5). The brute-force value is authoritative;
//! the closed form it matches is [`fi_with_prevention_closed_form`].

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::fockspace::{
    self, apply_channel, classical_fi, detection_loss_channel, measure, qfi, rabi_rotation,
    thinned_number_povm, DensityOperator, FockBasis, KrausChannel, Mode, PovmSet,
    TwoModeFockState, DEFAULT_STEP,
};

/// The six two-excitation outcome labels, in the order they are reported.
pub const OUTCOMES: [(usize, usize); 6] = [(2, 0), (0, 2), (1, 1), (0, 0), (1, 0), (0, 1)];

/// `|sin θ|` below this is treated as a multiple of π.
const SINGULAR_SIN: f64 = 1e-6;

pub fn toy_basis() -> FockBasis {
    FockBasis::new(2)
}

/// `U(θ)|2,0⟩`.
pub fn rotated_state(theta: f64) -> Result<TwoModeFockState> {
    let basis = toy_basis();
    TwoModeFockState::fock(&basis, 2, 0)?.apply(&rabi_rotation(&basis, theta)?)
}

/// Lossy photon counting on the `n_max = 2` space.
///
/// Built as binomial thinning followed by exact counting, restricted to the
/// six outcomes that can occur. On span(|2,0⟩, |1,1⟩, |0,2⟩) this gives
/// `M(2,0) = η²|2,0⟩⟨2,0|`, `M(1,0) = 2η(1−η)|2,0⟩⟨2,0| + η(1−η)|1,1⟩⟨1,1|`,
/// `M(0,0) = (1−η)²·1` and so on; vacuum and single-excitation states are
/// assigned by the same thinning rule, so `M(0,0)` also carries `|0,0⟩⟨0,0|`.
pub fn lossy_povm(eta: f64) -> Result<PovmSet> {
    let basis = toy_basis();
    let full = thinned_number_povm(&basis, eta)?;
    let elements = OUTCOMES
        .iter()
        .map(|&label| {
            let m = full
                .element(label)
                .cloned()
                .expect("all six labels exist for n_max = 2");
            (label, m)
        })
        .collect();
    PovmSet::new(basis, elements)
}

/// Λ with Kraus operators `K₀ = |0,0⟩⟨1,1|` and `K₁ = 1 − |1,1⟩⟨1,1|`.
pub fn error_prevention_channel() -> KrausChannel {
    let basis = toy_basis();
    let k0 = basis.ket_bra((0, 0), (1, 1));
    let k1 = basis.identity() - basis.projector(1, 1);
    KrausChannel::new(basis, vec![k0, k1], true).expect("Λ is trace preserving")
}

fn rotated_density(theta: f64) -> Result<DensityOperator> {
    Ok(rotated_state(theta)?.density())
}

fn protected_density(theta: f64) -> Result<DensityOperator> {
    apply_channel(&rotated_density(theta)?, &error_prevention_channel())
}

/// Outcome probabilities in [`OUTCOMES`] order.
pub fn outcome_probabilities(eta: f64, theta: f64, prevention: bool) -> Result<Vec<f64>> {
    let povm = lossy_povm(eta)?;
    let rho = if prevention {
        protected_density(theta)?
    } else {
        rotated_density(theta)?
    };
    Ok(measure(&rho, &povm)?.probabilities)
}

/// A toy-model Fisher information. `limit` marks values returned as the
/// analytic limit at a singular angle instead of by finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToyFi {
    pub value: f64,
    pub limit: bool,
}

fn check_eta_positive(eta: f64) -> Result<()> {
    check_probability("eta", eta)?;
    if eta == 0.0 {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            min: f64::MIN_POSITIVE,
            max: 1.0,
        });
    }
    Ok(())
}

/// Fisher information of lossy counting on `U(θ)|2,0⟩` (no Λ). Equals `2η`
/// wherever it is defined; at `θ = kπ` some outcome probabilities vanish
/// quadratically and the limit `2η` is returned with `limit = true`.
pub fn fi_without_prevention(eta: f64, theta: f64) -> Result<ToyFi> {
    check_eta_positive(eta)?;
    if theta.sin().abs() < SINGULAR_SIN {
        return Ok(ToyFi {
            value: 2.0 * eta,
            limit: true,
        });
    }
    let fi = classical_fi(|t| outcome_probabilities(eta, t, false), theta, DEFAULT_STEP)?;
    Ok(ToyFi {
        value: fi.value,
        limit: false,
    })
}

/// Fisher information of lossy counting after Λ.
pub fn fi_with_prevention(eta: f64, theta: f64) -> Result<f64> {
    check_eta_positive(eta)?;
    Ok(classical_fi(|t| outcome_probabilities(eta, t, true), theta, DEFAULT_STEP)?.value)
}

/// Λ applied after the losses instead of before: the wrong order.
pub fn fi_with_prevention_after_loss(eta: f64, theta: f64) -> Result<f64> {
    check_eta_positive(eta)?;
    let basis = toy_basis();
    let loss = detection_loss_channel(&basis, eta)?;
    let counting = thinned_number_povm(&basis, 1.0)?;
    let lambda = error_prevention_channel();
    let family = |t: f64| -> Result<Vec<f64>> {
        let lossy = apply_channel(&rotated_density(t)?, &loss)?;
        let processed = apply_channel(&lossy, &lambda)?;
        Ok(measure(&processed, &counting)?.probabilities)
    };
    Ok(classical_fi(family, theta, DEFAULT_STEP)?.value)
}

/// Exact closed form of the protected Fisher information, derived from the
/// same outcome probabilities the brute force uses. With `g = η(2−η)` and
/// `x = sin²θ`: `F̃ = 2g x + g² x(1−x) / ((1−g) + g x / 2)`.
pub fn fi_with_prevention_closed_form(eta: f64, theta: f64) -> f64 {
    let g = eta * (2.0 - eta);
    let x = theta.sin().powi(2);
    2.0 * g * x + g * g * x * (1.0 - x) / ((1.0 - g) + 0.5 * g * x)
}

/// Bound `η(2−η)·F_Q` on any pre-measurement processing.
pub fn optimality_bound(eta: f64) -> Result<f64> {
    Ok(eta * (2.0 - eta) * pure_state_qfi(FRAC_PI_2)?)
}

/// QFI of the noiseless family `U(θ)|2,0⟩` (equal to 2).
pub fn pure_state_qfi(theta: f64) -> Result<f64> {
    qfi(rotated_density, theta, DEFAULT_STEP)
}

/// Ratio of the peak protected FI to the unprotected FI; `2 − η`.
pub fn peak_enhancement_ratio(eta: f64) -> Result<f64> {
    let with = fi_with_prevention(eta, FRAC_PI_2)?;
    let without = fi_without_prevention(eta, FRAC_PI_2)?;
    Ok(with / without.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub eta: f64,
    pub theta_grid: Vec<f64>,
}

impl ToyConfig {
    pub fn new(eta: f64, theta_grid: Vec<f64>) -> Result<Self> {
        check_eta_positive(eta)?;
        if theta_grid.is_empty() {
            return Err(Error::InvalidArgument("empty theta grid".into()));
        }
        if theta_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "theta grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { eta, theta_grid })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToyFiCurve {
    pub theta: f64,
    pub fi_without: f64,
    pub fi_with: f64,
    pub qfi_bound: f64,
}

pub fn enhancement_curve(config: &ToyConfig) -> Result<Vec<ToyFiCurve>> {
    let bound = optimality_bound(config.eta)?;
    config
        .theta_grid
        .iter()
        .map(|&theta| {
            Ok(ToyFiCurve {
                theta,
                fi_without: fi_without_prevention(config.eta, theta)?.value,
                fi_with: fi_with_prevention(config.eta, theta)?,
                qfi_bound: bound,
            })
        })
        .collect()
}

/// Expected detected excitation numbers with and without Λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationPoint {
    pub theta: f64,
    pub nd_with: f64,
    pub np_with: f64,
    pub nd_without: f64,
    pub np_without: f64,
}

/// Closed forms: with Λ, `⟨n_d⟩ = 2η cos⁴(θ/2)`, `⟨n_p⟩ = 2η sin⁴(θ/2)`;
/// without, `2η cos²(θ/2)` and `2η sin²(θ/2)`.
pub fn expectation_curves(eta: f64, theta_grid: &[f64]) -> Result<Vec<ExpectationPoint>> {
    check_probability("eta", eta)?;
    Ok(theta_grid
        .iter()
        .map(|&theta| {
            let c2 = (0.5 * theta).cos().powi(2);
            let s2 = (0.5 * theta).sin().powi(2);
            ExpectationPoint {
                theta,
                nd_with: 2.0 * eta * c2 * c2,
                np_with: 2.0 * eta * s2 * s2,
                nd_without: 2.0 * eta * c2,
                np_without: 2.0 * eta * s2,
            }
        })
        .collect())
}

/// Same quantities from density matrices after the loss channel.
pub fn expectation_curves_oracle(eta: f64, theta_grid: &[f64]) -> Result<Vec<ExpectationPoint>> {
    let basis = toy_basis();
    let loss = detection_loss_channel(&basis, eta)?;
    theta_grid
        .iter()
        .map(|&theta| {
            let with = apply_channel(&protected_density(theta)?, &loss)?;
            let without = apply_channel(&rotated_density(theta)?, &loss)?;
            Ok(ExpectationPoint {
                theta,
                nd_with: with.mean_number(Mode::D),
                np_with: with.mean_number(Mode::P),
                nd_without: without.mean_number(Mode::D),
                np_without: without.mean_number(Mode::P),
            })
        })
        .collect()
}

/// Sum of the six outcome probabilities; nothing is post-selected.
pub fn total_probability(eta: f64, theta: f64, prevention: bool) -> Result<f64> {
    Ok(outcome_probabilities(eta, theta, prevention)?.iter().sum())
}

/// Lossy counting statistics of `U(θ)|2,0⟩`, labelled.
pub fn lossy_outcome_distribution(
    eta: f64,
    theta: f64,
) -> Result<fockspace::OutcomeDistribution> {
    measure(&rotated_density(theta)?, &lossy_povm(eta)?)
}
