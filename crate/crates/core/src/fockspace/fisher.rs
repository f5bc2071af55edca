//! Classical and quantum Fisher information by central finite differences.

use super::state::{hermitian_deviation, DensityOperator, HERMITIAN_TOL};
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const MIN_STEP: f64 = 1e-6;
pub const MAX_STEP: f64 = 1e-3;

/// Outcomes below this probability are left out of the `(∂P)²/P` sum.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// Eigenvalue-pair cutoff `λ_i + λ_j > tol` in the SLD formula.
pub const QFI_EIGEN_TOL: f64 = 1e-12;

/// Classical Fisher information with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherEstimate {
    /// `Σ (∂P)²/P` over outcomes above [`PROBABILITY_FLOOR`].
    pub value: f64,
    /// Number of outcomes skipped for vanishing probability.
    pub skipped: usize,
    /// Upper estimate of what the skipped outcomes would have contributed,
    /// `4 max(∂√P)²` from one-sided differences.
    pub skipped_bound: f64,
    /// Relative change of `value` when the step is halved.
    pub step_change: f64,
}

fn check_step(step: f64) -> Result<()> {
    if (MIN_STEP..=MAX_STEP).contains(&step) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "step",
            value: step,
            min: MIN_STEP,
            max: MAX_STEP,
        })
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    match p.iter().position(|&v| v < 0.0 || v.is_nan()) {
        Some(index) => Err(Error::NegativeProbability {
            index,
            value: p[index],
        }),
        None => Ok(()),
    }
}

fn value_at(p: &[f64], i: usize) -> f64 {
    p.get(i).copied().unwrap_or(0.0)
}

fn fi_from_samples(center: &[f64], plus: &[f64], minus: &[f64], step: f64) -> (f64, usize, f64) {
    let len = center.len().max(plus.len()).max(minus.len());
    let mut value = 0.0;
    let mut skipped = 0;
    let mut bound: f64 = 0.0;
    for i in 0..len {
        let (p0, pp, pm) = (value_at(center, i), value_at(plus, i), value_at(minus, i));
        if p0 < PROBABILITY_FLOOR {
            skipped += 1;
            let up = (pp.sqrt() - p0.sqrt()) / step;
            let down = (p0.sqrt() - pm.sqrt()) / step;
            bound += 4.0 * up.powi(2).max(down.powi(2));
            continue;
        }
        let dp = (pp - pm) / (2.0 * step);
        value += dp * dp / p0;
    }
    (value, skipped, bound)
}

/// Fisher information `Σ_n (∂_θ P_θ(n))² / P_θ(n)` of a distribution family.
///
/// The family may return vectors of different lengths; missing entries count
/// as zero probability.
pub fn classical_fi<F>(family: F, theta: f64, step: f64) -> Result<FisherEstimate>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    check_step(step)?;
    let center = family(theta)?;
    let plus = family(theta + step)?;
    let minus = family(theta - step)?;
    let half_plus = family(theta + 0.5 * step)?;
    let half_minus = family(theta - 0.5 * step)?;
    for p in [&center, &plus, &minus, &half_plus, &half_minus] {
        check_distribution(p)?;
    }
    let (value, skipped, skipped_bound) = fi_from_samples(&center, &plus, &minus, step);
    let (half, _, _) = fi_from_samples(&center, &half_plus, &half_minus, 0.5 * step);
    let step_change = if value.abs() > 1e-300 {
        (half - value).abs() / value.abs()
    } else {
        (half - value).abs()
    };
    Ok(FisherEstimate {
        value,
        skipped,
        skipped_bound,
        step_change,
    })
}

/// Quantum Fisher information from the eigendecomposition of `ρ(θ)`:
/// `F_Q = Σ_{λ_i+λ_j>tol} 2 |⟨i|∂ρ|j⟩|² / (λ_i + λ_j)`.
pub fn qfi<F>(family: F, theta: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<DensityOperator>,
{
    qfi_with_tolerance(family, theta, step, QFI_EIGEN_TOL)
}

pub fn qfi_with_tolerance<F>(family: F, theta: f64, step: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<DensityOperator>,
{
    check_step(step)?;
    let rho = family(theta)?;
    let plus = family(theta + step)?;
    let minus = family(theta - step)?;
    for r in [&rho, &plus, &minus] {
        let dev = hermitian_deviation(r.matrix());
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        if r.basis() != rho.basis() {
            return Err(Error::DimensionMismatch {
                expected: rho.basis().dim(),
                found: r.basis().dim(),
            });
        }
    }
    let derivative = (plus.matrix() - minus.matrix()).unscale(2.0 * step);
    let eig = rho.matrix().clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let rotated = v.adjoint() * derivative * v;
    let lambdas = &eig.eigenvalues;
    let mut total = 0.0;
    for i in 0..lambdas.len() {
        for j in 0..lambdas.len() {
            let s = lambdas[i] + lambdas[j];
            if s > tol {
                total += 2.0 * rotated[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(total)
}
