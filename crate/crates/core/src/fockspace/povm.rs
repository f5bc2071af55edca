use num_complex::Complex64;

use super::basis::FockBasis;
use super::channel::thinning_weight;
use super::state::{hermitian_deviation, DensityOperator};
use super::{max_abs, CMatrix};
use crate::error::{check_probability, Error, Result};

pub const POVM_TOL: f64 = 1e-10;

/// Measurement outcome `(i, j)`: excitations detected in modes d and p.
pub type Outcome = (usize, usize);

/// Generalised measurement with labelled elements.
#[derive(Debug, Clone)]
pub struct PovmSet {
    basis: FockBasis,
    elements: Vec<(Outcome, CMatrix)>,
}

impl PovmSet {
    /// Checks positivity of each element and completeness within [`POVM_TOL`].
    pub fn new(basis: FockBasis, elements: Vec<(Outcome, CMatrix)>) -> Result<Self> {
        let dim = basis.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for (label, m) in &elements {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows().max(m.ncols()),
                });
            }
            if hermitian_deviation(m) > POVM_TOL {
                return Err(Error::InvalidOperatorSet(format!(
                    "element {label:?} is not Hermitian"
                )));
            }
            let diagonal = (0..dim).all(|c| (0..dim).all(|r| r == c || m[(r, c)].norm() == 0.0));
            let min = if diagonal {
                (0..dim).map(|i| m[(i, i)].re).fold(f64::INFINITY, f64::min)
            } else {
                m.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            };
            if min < -POVM_TOL {
                return Err(Error::InvalidOperatorSet(format!(
                    "element {label:?} has eigenvalue {min:e}"
                )));
            }
            sum += m;
        }
        let dev = max_abs(&(sum - basis.identity()));
        if dev > POVM_TOL {
            return Err(Error::InvalidOperatorSet(format!(
                "elements sum to identity only within {dev:e}"
            )));
        }
        Ok(Self { basis, elements })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn elements(&self) -> &[(Outcome, CMatrix)] {
        &self.elements
    }

    pub fn element(&self, label: Outcome) -> Option<&CMatrix> {
        self.elements
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, m)| m)
    }

    pub fn labels(&self) -> Vec<Outcome> {
        self.elements.iter().map(|(l, _)| *l).collect()
    }
}

/// Projective measurement of both occupation numbers.
pub fn number_povm(basis: &FockBasis) -> PovmSet {
    thinned_number_povm(basis, 1.0).expect("eta = 1 is valid")
}

/// Photon counting with efficiency `eta` in both modes: the number
/// measurement preceded by binomial thinning. Outcome `(i, j)` collects
/// `Π Bin(i | n_d, η) Bin(j | n_p, η) |n_d, n_p⟩⟨n_d, n_p|`.
pub fn thinned_number_povm(basis: &FockBasis, eta: f64) -> Result<PovmSet> {
    check_probability("eta", eta)?;
    let dim = basis.dim();
    let elements = basis
        .pairs()
        .iter()
        .map(|&(i, j)| {
            let mut m = CMatrix::zeros(dim, dim);
            for (k, &(nd, np)) in basis.pairs().iter().enumerate() {
                if nd < i || np < j {
                    continue;
                }
                let w = thinning_weight(nd, nd - i, eta) * thinning_weight(np, np - j, eta);
                m[(k, k)] = Complex64::new(w, 0.0);
            }
            ((i, j), m)
        })
        .collect();
    PovmSet::new(basis.clone(), elements)
}

/// Probabilities of labelled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub outcomes: Vec<Outcome>,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn get(&self, label: Outcome) -> f64 {
        self.outcomes
            .iter()
            .position(|&l| l == label)
            .map(|i| self.probabilities[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Marginal over the d-mode count, indexed by `i`.
    pub fn marginal_d(&self) -> Vec<f64> {
        let len = self.outcomes.iter().map(|&(i, _)| i + 1).max().unwrap_or(0);
        let mut out = vec![0.0; len];
        for (&(i, _), &p) in self.outcomes.iter().zip(&self.probabilities) {
            out[i] += p;
        }
        out
    }
}

/// `p_(i,j) = tr(ρ M_(i,j))`. Round-off negatives are clipped to zero.
pub fn measure(rho: &DensityOperator, povm: &PovmSet) -> Result<OutcomeDistribution> {
    if rho.basis() != povm.basis() {
        return Err(Error::DimensionMismatch {
            expected: povm.basis().dim(),
            found: rho.basis().dim(),
        });
    }
    let probabilities = povm
        .elements()
        .iter()
        .map(|(_, m)| rho.expectation(m).max(0.0))
        .collect();
    Ok(OutcomeDistribution {
        outcomes: povm.labels(),
        probabilities,
    })
}
