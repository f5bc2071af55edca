//! Library results against independently written references.

use std::f64::consts::PI;

use num_complex::Complex64;
use rymet::dipolar::{
    angular_abs_integral, decay_rate_gamma, excluded_volume_integral, volumetric_rate_q,
    C3Convention, CloudGeometry, CloudKind, DipolarParams, QuadratureSpec,
};
use rymet::fockspace::{
    apply_channel, detection_loss_channel, measure, number_povm, FockBasis, TwoModeFockState,
};
use rymet::multiparticle::{
    count_distribution, fisher_information, interaction_channel_kraus, LossOrder, ProtocolParams,
};
use rymet::toy_model::{fi_with_prevention, fi_without_prevention, outcome_probabilities, OUTCOMES};

/// Detected d-mode counts from the dense two-mode simulation.
pub fn fock_pipeline(n0: f64, eta: f64, gamma_tau: f64, theta: f64, order: LossOrder) -> Vec<f64> {
    let basis = FockBasis::new(14);
    let (s, c) = (0.5 * theta).sin_cos();
    let psi = TwoModeFockState::coherent(
        &basis,
        Complex64::new(n0.sqrt() * c, 0.0),
        Complex64::new(0.0, n0.sqrt() * s),
    )
    .unwrap();
    let interaction = interaction_channel_kraus(&basis, gamma_tau, true).unwrap();
    let loss = detection_loss_channel(&basis, eta).unwrap();
    let rho = psi.density();
    let out = match order {
        LossOrder::AfterInteraction => {
            apply_channel(&apply_channel(&rho, &interaction).unwrap(), &loss).unwrap()
        }
        LossOrder::BeforeInteraction => {
            apply_channel(&apply_channel(&rho, &loss).unwrap(), &interaction).unwrap()
        }
    };
    measure(&out, &number_povm(&basis)).unwrap().marginal_d()
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    0.5 * (0..len)
        .map(|i| (a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

#[test]
fn count_distribution_matches_fock_simulation() {
    for order in [LossOrder::AfterInteraction, LossOrder::BeforeInteraction] {
        for n0 in [0.5, 1.0, 2.0] {
            for gt in [0.0, 0.5, 2.0] {
                for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
                    let params = ProtocolParams::new(n0, 0.3, gt, order).unwrap();
                    let analytic = count_distribution(&params, theta);
                    let brute = fock_pipeline(n0, 0.3, gt, theta, order);
                    let tv = total_variation(&analytic.probabilities, &brute);
                    assert!(tv < 1e-6, "{order:?} n0={n0} gt={gt} theta={theta}: {tv:e}");
                }
            }
        }
    }
}

/// Populations after rotating `|2,0⟩` by `θ`, with `Λ` moving `|1,1⟩` to
/// `|0,0⟩` when `prevent` is set, then each excitation detected with
/// probability `η`. Returned in the crate's outcome order together with
/// their θ-derivatives.
fn toy_reference(eta: f64, theta: f64, prevent: bool) -> ([f64; 6], [f64; 6]) {
    let c2 = 0.5 * (1.0 + theta.cos());
    let s2 = 0.5 * (1.0 - theta.cos());
    let x = theta.sin().powi(2);
    let (p20, p02, p11) = (c2 * c2, s2 * s2, 0.5 * x);
    let (d20, d02, d11) = (-c2 * theta.sin(), s2 * theta.sin(), theta.sin() * theta.cos());
    let (k2, k1, k0) = (eta * eta, 2.0 * eta * (1.0 - eta), (1.0 - eta).powi(2));
    let mut p = [0.0; 6];
    let mut d = [0.0; 6];
    let kept11 = if prevent { 0.0 } else { 1.0 };
    // (2,0), (0,2), (1,1), (0,0), (1,0), (0,1)
    p[0] = k2 * p20;
    d[0] = k2 * d20;
    p[1] = k2 * p02;
    d[1] = k2 * d02;
    p[2] = kept11 * eta * eta * p11;
    d[2] = kept11 * eta * eta * d11;
    p[3] = k0 * (p20 + p02) + (kept11 * k0 + (1.0 - kept11)) * p11;
    d[3] = k0 * (d20 + d02) + (kept11 * k0 + (1.0 - kept11)) * d11;
    p[4] = k1 * p20 + kept11 * eta * (1.0 - eta) * p11;
    d[4] = k1 * d20 + kept11 * eta * (1.0 - eta) * d11;
    p[5] = k1 * p02 + kept11 * eta * (1.0 - eta) * p11;
    d[5] = k1 * d02 + kept11 * eta * (1.0 - eta) * d11;
    (p, d)
}

fn reference_fi(eta: f64, theta: f64, prevent: bool) -> f64 {
    let (p, d) = toy_reference(eta, theta, prevent);
    p.iter()
        .zip(&d)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, d)| d * d / p)
        .sum()
}

#[test]
fn toy_outcomes_match_hand_calculation() {
    assert_eq!(OUTCOMES[3], (0, 0));
    for eta in [0.02, 0.4, 1.0] {
        for theta in [0.3, 1.0, PI / 2.0, 2.8] {
            for prevent in [false, true] {
                let lib = outcome_probabilities(eta, theta, prevent).unwrap();
                let (reference, _) = toy_reference(eta, theta, prevent);
                for (a, b) in lib.iter().zip(&reference) {
                    assert!((a - b).abs() < 1e-12, "eta={eta} theta={theta} {a} {b}");
                }
            }
        }
    }
}

#[test]
fn toy_fisher_information_matches_hand_calculation() {
    for eta in [0.01, 0.3, 0.9] {
        for theta in [0.2, 0.9, PI / 2.0, 2.5] {
            let with = fi_with_prevention(eta, theta).unwrap();
            let without = fi_without_prevention(eta, theta).unwrap().value;
            assert!((with - reference_fi(eta, theta, true)).abs() < 1e-7);
            assert!((without - reference_fi(eta, theta, false)).abs() < 1e-7);
        }
    }
}

#[test]
fn poisson_fisher_information_without_decay() {
    let params = ProtocolParams::new(55.0, 0.02, 0.0, LossOrder::AfterInteraction).unwrap();
    for theta in [0.4f64, 1.3, 2.9] {
        let expected = 1.1 * (0.5 * theta).sin().powi(2);
        assert!((fisher_information(&params, theta).unwrap() - expected).abs() < 1e-6);
    }
}

#[test]
fn excluded_volume_against_closed_forms() {
    let spec = QuadratureSpec::default();
    let abs_integral = 8.0 * PI / (3.0 * 3f64.sqrt());
    assert!((angular_abs_integral(&spec) - abs_integral).abs() < 1e-10);
    let cloud = CloudGeometry::new(CloudKind::Box, [80.0, 80.0, 4000.0]).unwrap();
    let c3 = 2.0 * PI * 3709.0;
    let params = DipolarParams::new(c3, cloud).unwrap();
    let q = (PI / 6.0) * abs_integral * c3;
    assert!((volumetric_rate_q(&params) / q - 1.0).abs() < 1e-12);
    for t in [0.05, 0.5, 5.0] {
        let a = excluded_volume_integral(t, &params, &spec).unwrap();
        assert!((a.value.re / (q * t) - 1.0).abs() < 1e-6);
    }
    assert!((decay_rate_gamma(&params) - 2.0 * q / (80.0 * 80.0 * 4000.0)).abs() < 1e-15);
    let plain = DipolarParams::experimental(C3Convention::Plain);
    assert!((decay_rate_gamma(&params) / decay_rate_gamma(&plain) - 2.0 * PI).abs() < 1e-10);
}

/// The imaginary part follows from the Frullani-type integral
/// `∫₀^∞ (sin v − v 1[v<1])/v² dv = 1 − γ_E` summed over angles with
/// `∫f dΩ = 0`, leaving `−(tC/3)∫f ln|f| dΩ`.
#[test]
fn imaginary_part_by_midpoint_rule() {
    let cloud = CloudGeometry::new(CloudKind::Box, [10.0, 10.0, 10.0]).unwrap();
    let params = DipolarParams::new(2.0, cloud).unwrap();
    let t = 0.7;
    let n = 200_000;
    let h = PI / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let th = (i as f64 + 0.5) * h;
        let f = 0.25 * (3.0 * (2.0 * th).cos() + 1.0);
        let k = t * 2.0 * f;
        if k != 0.0 {
            sum += k * k.abs().ln() * th.sin() * h;
        }
    }
    let expected = -2.0 * PI / 3.0 * sum;
    let a = excluded_volume_integral(t, &params, &QuadratureSpec::default()).unwrap();
    assert!((a.value.im - expected).abs() < 1e-6 * expected.abs().max(1.0), "{} {expected}", a.value.im);
}
