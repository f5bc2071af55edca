use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CMatrix;

/// One of the two bosonic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    D,
    P,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::D => Mode::P,
            Mode::P => Mode::D,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilate,
    Create,
    Number,
}

/// Occupation-number basis `|n_d, n_p⟩` with `n_d + n_p ≤ n_max`.
///
/// Basis states are ordered by `n_d` first, then `n_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_max: usize,
    pairs: Vec<(usize, usize)>,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Self {
        let pairs = (0..=n_max)
            .flat_map(|nd| (0..=n_max - nd).map(move |np| (nd, np)))
            .collect();
        Self { n_max, pairs }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Occupations `(n_d, n_p)` of basis state `index`.
    pub fn pair(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn index(&self, nd: usize, np: usize) -> Option<usize> {
        if nd + np > self.n_max {
            return None;
        }
        // states with n_d' < n_d come first, (n_max - k + 1) of them per k
        Some(nd * (self.n_max + 1) - nd * nd.saturating_sub(1) / 2 + np)
    }

    pub fn occupation(&self, index: usize, mode: Mode) -> usize {
        let (nd, np) = self.pairs[index];
        match mode {
            Mode::D => nd,
            Mode::P => np,
        }
    }

    pub fn identity(&self) -> CMatrix {
        DMatrix::identity(self.dim(), self.dim())
    }

    /// Projector `|n_d, n_p⟩⟨n_d, n_p|`. Panics if the state lies outside the basis.
    pub fn projector(&self, nd: usize, np: usize) -> CMatrix {
        let i = self.index(nd, np).expect("state outside truncated basis");
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        m[(i, i)] = Complex64::new(1.0, 0.0);
        m
    }

    /// `|to⟩⟨from|`.
    pub fn ket_bra(&self, to: (usize, usize), from: (usize, usize)) -> CMatrix {
        let i = self.index(to.0, to.1).expect("state outside truncated basis");
        let j = self.index(from.0, from.1).expect("state outside truncated basis");
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        m[(i, j)] = Complex64::new(1.0, 0.0);
        m
    }
}

/// Ladder and number operators of `mode`.
///
/// Creation truncates: components pushed above `n_max` are dropped. Use
/// [`super::TwoModeFockState::create`] when the leaked norm matters.
pub fn mode_operator(basis: &FockBasis, mode: Mode, kind: OperatorKind) -> CMatrix {
    let dim = basis.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (col, &(nd, np)) in basis.pairs().iter().enumerate() {
        let n = match mode {
            Mode::D => nd,
            Mode::P => np,
        };
        match kind {
            OperatorKind::Number => m[(col, col)] = Complex64::new(n as f64, 0.0),
            OperatorKind::Annihilate => {
                if n == 0 {
                    continue;
                }
                let target = match mode {
                    Mode::D => basis.index(nd - 1, np),
                    Mode::P => basis.index(nd, np - 1),
                };
                if let Some(row) = target {
                    m[(row, col)] = Complex64::new((n as f64).sqrt(), 0.0);
                }
            }
            OperatorKind::Create => {
                let target = match mode {
                    Mode::D => basis.index(nd + 1, np),
                    Mode::P => basis.index(nd, np + 1),
                };
                if let Some(row) = target {
                    m[(row, col)] = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
                }
            }
        }
    }
    m
}
