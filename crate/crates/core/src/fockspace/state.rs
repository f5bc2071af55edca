use num_complex::Complex64;

use super::basis::{mode_operator, FockBasis, Mode, OperatorKind};
use super::{max_abs, CMatrix, CVector};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = 1e-10;

/// Largest tail mass accepted when a coherent state is cut at `n_max`.
pub const MAX_COHERENT_TAIL: f64 = 1e-8;

/// Pure state on a truncated two-mode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    basis: FockBasis,
    amplitudes: CVector,
}

impl TwoModeFockState {
    pub fn new(basis: FockBasis, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn fock(basis: &FockBasis, nd: usize, np: usize) -> Result<Self> {
        let i = basis.index(nd, np).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "|{nd},{np}⟩ exceeds n_max = {}",
                basis.n_max()
            ))
        })?;
        let mut amplitudes = CVector::zeros(basis.dim());
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(Self {
            basis: basis.clone(),
            amplitudes,
        })
    }

    /// Product coherent state `|α_d, α_p⟩`, renormalised after truncation.
    ///
    /// Fails with [`Error::Truncation`] if the discarded tail mass exceeds
    /// [`MAX_COHERENT_TAIL`].
    pub fn coherent(basis: &FockBasis, alpha_d: Complex64, alpha_p: Complex64) -> Result<Self> {
        let mean = alpha_d.norm_sqr() + alpha_p.norm_sqr();
        let ln_fact = ln_factorials(basis.n_max());
        let mut amplitudes = CVector::zeros(basis.dim());
        for (i, &(nd, np)) in basis.pairs().iter().enumerate() {
            let mag = (-0.5 * mean - 0.5 * (ln_fact[nd] + ln_fact[np])).exp();
            amplitudes[i] = alpha_d.powu(nd as u32) * alpha_p.powu(np as u32) * mag;
        }
        let kept = amplitudes.norm_squared();
        let tail = (1.0 - kept).max(0.0);
        if tail > MAX_COHERENT_TAIL {
            return Err(Error::Truncation(tail));
        }
        amplitudes.unscale_mut(kept.sqrt());
        Ok(Self {
            basis: basis.clone(),
            amplitudes,
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, nd: usize, np: usize) -> Complex64 {
        self.basis
            .index(nd, np)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn apply(&self, op: &CMatrix) -> Result<Self> {
        if op.ncols() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: op.ncols(),
            });
        }
        Ok(Self {
            basis: self.basis.clone(),
            amplitudes: op * &self.amplitudes,
        })
    }

    /// Applies the creation operator of `mode`; returns the (unnormalised)
    /// truncated result and the squared norm that was pushed above `n_max`.
    pub fn create(&self, mode: Mode) -> (Self, f64) {
        let op = mode_operator(&self.basis, mode, OperatorKind::Create);
        let out = &op * &self.amplitudes;
        let total: f64 = self
            .basis
            .pairs()
            .iter()
            .zip(self.amplitudes.iter())
            .map(|(&(nd, np), a)| {
                let n = match mode {
                    Mode::D => nd,
                    Mode::P => np,
                };
                (n + 1) as f64 * a.norm_sqr()
            })
            .sum();
        let leaked = (total - out.norm_squared()).max(0.0);
        (
            Self {
                basis: self.basis.clone(),
                amplitudes: out,
            },
            leaked,
        )
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            basis: self.basis.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density operator on a truncated two-mode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    basis: FockBasis,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Wraps `matrix`, checking only that it is square, sized to the basis
    /// and Hermitian. Use [`DensityOperator::validate`] for the full check.
    pub fn new(basis: FockBasis, matrix: CMatrix) -> Result<Self> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL * matrix.norm().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { basis, matrix })
    }

    pub(crate) fn from_parts_unchecked(basis: FockBasis, matrix: CMatrix) -> Self {
        Self { basis, matrix }
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, nd: usize, np: usize) -> f64 {
        self.basis
            .index(nd, np)
            .map(|i| self.matrix[(i, i)].re)
            .unwrap_or(0.0)
    }

    /// `tr(ρ O)`, real part.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        // tr(ρA) = Σ ρ_ij A_ji without forming the product
        let n = self.matrix.nrows();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += (self.matrix[(i, j)] * op[(j, i)]).re;
            }
        }
        sum
    }

    pub fn mean_number(&self, mode: Mode) -> f64 {
        self.basis
            .pairs()
            .iter()
            .enumerate()
            .map(|(i, &(nd, np))| {
                let n = match mode {
                    Mode::D => nd,
                    Mode::P => np,
                };
                n as f64 * self.matrix[(i, i)].re
            })
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.matrix.clone().symmetric_eigen();
        eig.eigenvalues.iter().copied().collect()
    }

    /// Hermiticity, unit trace and positivity at the module tolerances.
    pub fn validate(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL {
            return Err(Error::InvalidArgument(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Conjugation `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.ncols() != self.basis.dim() || u.nrows() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: u.nrows(),
            });
        }
        Ok(Self {
            basis: self.basis.clone(),
            matrix: u * &self.matrix * u.adjoint(),
        })
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}
