use num_complex::Complex64;

use super::basis::{mode_operator, FockBasis, Mode, OperatorKind};
use super::state::{hermitian_deviation, DensityOperator};
use super::{max_abs, CMatrix};
use crate::error::{check_probability, Error, Result};

/// Tolerance on `Σ K†K = 1` (or `≤ 1`).
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Completely positive map given by Kraus operators on one basis.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    basis: FockBasis,
    operators: Vec<CMatrix>,
    // non-zero entries of each operator, or None when it is dense
    sparse: Vec<Option<Vec<Entry>>>,
    trace_preserving: bool,
}

type Entry = (usize, usize, Complex64);

fn sparse_entries(k: &CMatrix) -> Option<Vec<Entry>> {
    let limit = 2 * k.nrows();
    let mut entries = Vec::new();
    for c in 0..k.ncols() {
        for r in 0..k.nrows() {
            let v = k[(r, c)];
            if v != Complex64::new(0.0, 0.0) {
                if entries.len() == limit {
                    return None;
                }
                entries.push((r, c, v));
            }
        }
    }
    Some(entries)
}

impl KrausChannel {
    fn from_parts(basis: FockBasis, operators: Vec<CMatrix>, trace_preserving: bool) -> Self {
        let sparse = operators.iter().map(sparse_entries).collect();
        Self {
            basis,
            operators,
            sparse,
            trace_preserving,
        }
    }
}

impl KrausChannel {
    /// Checks `Σ K†K = 1` if `trace_preserving`, otherwise `Σ K†K ≤ 1`.
    pub fn new(basis: FockBasis, operators: Vec<CMatrix>, trace_preserving: bool) -> Result<Self> {
        Self::with_tolerance(basis, operators, trace_preserving, COMPLETENESS_TOL)
    }

    pub fn with_tolerance(
        basis: FockBasis,
        operators: Vec<CMatrix>,
        trace_preserving: bool,
        tol: f64,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(bad) = operators
            .iter()
            .find(|k| k.nrows() != dim || k.ncols() != dim)
        {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.nrows().max(bad.ncols()),
            });
        }
        let channel = Self::from_parts(basis, operators, trace_preserving);
        let sum = channel.completeness();
        if trace_preserving {
            let dev = max_abs(&(sum - channel.basis.identity()));
            if dev > tol {
                return Err(Error::InvalidOperatorSet(format!(
                    "Σ K†K deviates from identity by {dev:e}"
                )));
            }
        } else {
            let largest = sum
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if largest > 1.0 + tol {
                return Err(Error::InvalidOperatorSet(format!(
                    "Σ K†K has eigenvalue {largest} > 1"
                )));
            }
        }
        Ok(channel)
    }

    pub fn identity(basis: &FockBasis) -> Self {
        Self::from_parts(basis.clone(), vec![basis.identity()], true)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> CMatrix {
        let dim = self.basis.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for (k, sparse) in self.operators.iter().zip(&self.sparse) {
            match sparse {
                Some(entries) => {
                    for &(r1, c1, v1) in entries {
                        for &(r2, c2, v2) in entries {
                            if r1 == r2 {
                                sum[(c1, c2)] += v1.conj() * v2;
                            }
                        }
                    }
                }
                None => sum += k.adjoint() * k,
            }
        }
        sum
    }

    /// Largest deviation of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        max_abs(&(self.completeness() - self.basis.identity()))
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &KrausChannel) -> Result<Self> {
        if first.basis != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: first.basis.dim(),
            });
        }
        let operators = self
            .operators
            .iter()
            .flat_map(|a| first.operators.iter().map(move |b| a * b))
            .filter(|k| max_abs(k) > 0.0)
            .collect();
        Ok(Self::from_parts(
            self.basis.clone(),
            operators,
            self.trace_preserving && first.trace_preserving,
        ))
    }

    /// Action on every matrix unit `|i⟩⟨j|`, stacked as the Choi matrix.
    pub fn choi(&self) -> CMatrix {
        let dim = self.basis.dim();
        let mut choi = CMatrix::zeros(dim * dim, dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut unit = CMatrix::zeros(dim, dim);
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                let out = self.apply_matrix(&unit);
                for r in 0..dim {
                    for c in 0..dim {
                        choi[(i * dim + r, j * dim + c)] = out[(r, c)];
                    }
                }
            }
        }
        choi
    }

    fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let dim = self.basis.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for (k, sparse) in self.operators.iter().zip(&self.sparse) {
            match sparse {
                Some(entries) => {
                    for &(r1, c1, v1) in entries {
                        for &(r2, c2, v2) in entries {
                            out[(r1, r2)] += v1 * m[(c1, c2)] * v2.conj();
                        }
                    }
                }
                None => out += k * m * k.adjoint(),
            }
        }
        out
    }
}

/// `ρ ↦ Σ K ρ K†`.
pub fn apply_channel(rho: &DensityOperator, channel: &KrausChannel) -> Result<DensityOperator> {
    if rho.basis() != channel.basis() {
        return Err(Error::DimensionMismatch {
            expected: channel.basis().dim(),
            found: rho.basis().dim(),
        });
    }
    let mut out = channel.apply_matrix(rho.matrix());
    // symmetrise away round-off so downstream Hermitian checks stay tight
    if hermitian_deviation(&out) > 0.0 {
        out = (&out + out.adjoint()).unscale(2.0);
    }
    Ok(DensityOperator::from_parts_unchecked(rho.basis().clone(), out))
}

/// Independent binomial thinning of both modes with survival probability
/// `eta` per excitation (beam splitter with a vacuum ancilla).
///
/// Kraus operator `E_{k,l}` removes `k` excitations from mode d and `l` from
/// mode p.
pub fn detection_loss_channel(basis: &FockBasis, eta: f64) -> Result<KrausChannel> {
    check_probability("eta", eta)?;
    let n_max = basis.n_max();
    let mut operators = Vec::new();
    for k in 0..=n_max {
        for l in 0..=n_max - k {
            let mut op = CMatrix::zeros(basis.dim(), basis.dim());
            let mut nonzero = false;
            for (col, &(nd, np)) in basis.pairs().iter().enumerate() {
                if nd < k || np < l {
                    continue;
                }
                let amp = (thinning_weight(nd, k, eta) * thinning_weight(np, l, eta)).sqrt();
                if amp == 0.0 {
                    continue;
                }
                let row = basis.index(nd - k, np - l).expect("lowering stays in basis");
                op[(row, col)] = Complex64::new(amp, 0.0);
                nonzero = true;
            }
            if nonzero {
                operators.push(op);
            }
        }
    }
    KrausChannel::new(basis.clone(), operators, true)
}

/// Probability that exactly `lost` of `n` excitations are lost when each
/// survives with probability `eta`.
pub(crate) fn thinning_weight(n: usize, lost: usize, eta: f64) -> f64 {
    binomial(n, lost) * (1.0 - eta).powi(lost as i32) * eta.powi((n - lost) as i32)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Unitary Rabi rotation by `theta` between the two modes.
///
/// Single excitations rotate as `|1,0⟩ → cos(θ/2)|1,0⟩ + i sin(θ/2)|0,1⟩`, so
/// that `U(θ)|2,0⟩ = cos²(θ/2)|2,0⟩ + (i/√2) sin θ |1,1⟩ − sin²(θ/2)|0,2⟩`.
/// Realised as `exp(iθ/2 (d†p + p†d))`, which conserves the total excitation
/// number and is therefore exactly unitary on the truncated space.
pub fn rabi_rotation(basis: &FockBasis, theta: f64) -> Result<CMatrix> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("theta = {theta} is not finite")));
    }
    let d = mode_operator(basis, Mode::D, OperatorKind::Annihilate);
    let p = mode_operator(basis, Mode::P, OperatorKind::Annihilate);
    let generator = d.adjoint() * &p + p.adjoint() * &d;
    let eig = generator.symmetric_eigen();
    let phases = eig
        .eigenvalues
        .map(|lambda| Complex64::from_polar(1.0, 0.5 * theta * lambda));
    let v = &eig.eigenvectors;
    Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
}
