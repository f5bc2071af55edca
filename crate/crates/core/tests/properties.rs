use std::f64::consts::PI;

use proptest::prelude::*;
use rymet::estimation::{field_from_rabi_frequency, field_precision, rabi_frequency};
use rymet::fockspace::{
    apply_channel, detection_loss_channel, mode_operator, rabi_rotation, DensityOperator,
    FockBasis, Mode, OperatorKind, TwoModeFockState,
};
use rymet::multiparticle::{
    count_distribution, count_distribution_p, fisher_information,
    fisher_information_with_extra_loss, interaction_channel_kraus, super_rabi_means, LossOrder,
    ProtocolParams,
};
use rymet::toy_model::{fi_with_prevention, fi_without_prevention, optimality_bound};

fn loss_order() -> impl Strategy<Value = LossOrder> {
    prop_oneof![
        Just(LossOrder::AfterInteraction),
        Just(LossOrder::BeforeInteraction)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interaction_channel_preserves_trace(n_max in 1usize..6, gt in 0.0f64..5.0, symmetric: bool) {
        let basis = FockBasis::new(n_max);
        let ch = interaction_channel_kraus(&basis, gt, symmetric).unwrap();
        prop_assert!(ch.completeness_deviation() < 1e-12);
    }

    #[test]
    fn loss_channel_preserves_trace(n_max in 1usize..6, eta in 0.0f64..=1.0) {
        let basis = FockBasis::new(n_max);
        let ch = detection_loss_channel(&basis, eta).unwrap();
        prop_assert!(ch.completeness_deviation() < 1e-12);
    }

    #[test]
    fn rotation_conserves_total_number(n_max in 1usize..6, theta in -7.0f64..7.0) {
        let basis = FockBasis::new(n_max);
        let u = rabi_rotation(&basis, theta).unwrap();
        let n = mode_operator(&basis, Mode::D, OperatorKind::Number)
            + mode_operator(&basis, Mode::P, OperatorKind::Number);
        prop_assert!((&u * &n - &n * &u).norm() < 1e-10);
        let id = basis.identity();
        prop_assert!((u.adjoint() * &u - id).norm() < 1e-10);
    }

    #[test]
    fn channels_keep_states_physical(nd in 0usize..3, np in 0usize..3, gt in 0.0f64..3.0, eta in 0.0f64..=1.0) {
        let basis = FockBasis::new(4);
        let rho = TwoModeFockState::fock(&basis, nd, np).unwrap().density();
        let rho = rho.conjugate(&rabi_rotation(&basis, 0.8).unwrap()).unwrap();
        let out = apply_channel(&rho, &interaction_channel_kraus(&basis, gt, true).unwrap()).unwrap();
        let out: DensityOperator = apply_channel(&out, &detection_loss_channel(&basis, eta).unwrap()).unwrap();
        prop_assert!(out.validate().is_ok());
        prop_assert!((out.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn toy_fisher_below_bound(eta in 0.01f64..=1.0, theta in 0.05f64..3.09) {
        let bound = optimality_bound(eta).unwrap();
        let with = fi_with_prevention(eta, theta).unwrap();
        prop_assert!(with <= bound + 1e-8);
        prop_assert!(with <= 2.0 + 1e-8);
        prop_assert!((fi_without_prevention(eta, theta).unwrap().value - 2.0 * eta).abs() < 1e-7);
    }

    #[test]
    fn distribution_normalized_with_consistent_mean(
        n0 in 0.0f64..60.0, eta in 0.0f64..=1.0, gt in 0.0f64..1.0,
        theta in 0.0f64..PI, order in loss_order(),
    ) {
        let params = ProtocolParams::new(n0, eta, gt, order).unwrap();
        let d = count_distribution(&params, theta);
        prop_assert!(d.probabilities.iter().all(|p| *p >= 0.0));
        prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((d.mean() - super_rabi_means(&params, theta).0).abs() < 1e-8);
    }

    #[test]
    fn mode_roles_mirror(n0 in 0.0f64..20.0, eta in 0.0f64..=1.0, gt in 0.0f64..1.0,
                         theta in 0.0f64..PI, order in loss_order()) {
        let params = ProtocolParams::new(n0, eta, gt, order).unwrap();
        let d = count_distribution(&params, theta);
        let p = count_distribution_p(&params, PI - theta);
        prop_assert!(d.total_variation(&p.probabilities) < 1e-12);
    }

    #[test]
    fn extra_loss_never_helps(n0 in 1.0f64..60.0, gt in 0.0f64..0.3, theta in 0.1f64..3.0,
                              order in loss_order()) {
        let params = ProtocolParams::new(n0, 0.05, gt, order).unwrap();
        let mut previous = fisher_information(&params, theta).unwrap();
        for extra in [0.8, 0.5, 0.2] {
            let fi = fisher_information_with_extra_loss(&params, theta, extra).unwrap();
            prop_assert!(fi <= previous * (1.0 + 1e-6) + 1e-12);
            previous = fi;
        }
    }

    #[test]
    fn losses_before_never_beat_poisson(n0 in 0.5f64..60.0, gt in 0.0f64..2.0, theta in 0.05f64..3.1) {
        let params = ProtocolParams::new(n0, 0.02, gt, LossOrder::BeforeInteraction).unwrap();
        let fi = fisher_information(&params, theta).unwrap();
        prop_assert!(fi <= params.mean_detected() * (1.0 + 1e-6));
    }

    #[test]
    fn field_round_trip(field in 1e-6f64..1.0, t in 1e-8f64..1e-4, d in 1e-30f64..1e-26) {
        let theta = rabi_frequency(field, d) * t;
        let back = field_from_rabi_frequency(theta / t, d);
        prop_assert!((back / field - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_is_precision_times_root_time(v in 1e-4f64..10.0, t in 1e-8f64..1e-3, d in 1e-30f64..1e-26) {
        let r = field_precision(v, t, d).unwrap();
        prop_assert!((r.sensitivity_s / (r.delta_e * t.sqrt()) - 1.0).abs() < 1e-14);
    }
}
