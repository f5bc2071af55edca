//! Exact dense linear algebra for two bosonic modes truncated at a total
//! excitation number `n_max`.
//!
//! This is the brute-force reference every analytic formula in the crate is
//! checked against. Dimensions stay small (`(n_max+1)(n_max+2)/2`, under ~120
//! for `n_max ≤ 14`), so everything is a dense complex matrix.

mod basis;
mod channel;
mod fisher;
mod povm;
mod state;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use basis::{mode_operator, FockBasis, Mode, OperatorKind};
pub use channel::{
    apply_channel, detection_loss_channel, rabi_rotation, KrausChannel, COMPLETENESS_TOL,
};
pub use fisher::{
    classical_fi, qfi, qfi_with_tolerance, FisherEstimate, DEFAULT_STEP, MAX_STEP, MIN_STEP,
    PROBABILITY_FLOOR, QFI_EIGEN_TOL,
};
pub use povm::{measure, number_povm, thinned_number_povm, Outcome, OutcomeDistribution, PovmSet};
pub use state::{DensityOperator, TwoModeFockState, MAX_COHERENT_TAIL};

pub(crate) use channel::binomial;
pub(crate) use state::ln_factorials;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
