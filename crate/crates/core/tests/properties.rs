mod common;

use proptest::prelude::*;
use qudit_tele::estimation::{
    estimation_fidelity_bound, estimation_fidelity_exact, EstimationStrategy,
};
use qudit_tele::fidelity::{
    conditional_fidelity, fidelity_bound, mean_fidelity_exact, mean_fidelity_from_moments,
    optimal_fidelity_given_measurement,
};
use qudit_tele::haar::sample_haar_state;
use qudit_tele::protocol::{
    check_optimality, optimal_bob_corrections, outcome_distribution, standard_measurement,
    validate_completeness,
};
use qudit_tele::qcore::schmidt_decompose;
use qudit_tele::search::random_povm;
use qudit_tele::{
    AliceMeasurement, BipartiteVector, BobCorrections, Operator, Protocol, SchmidtDecomposition,
    SeededRng,
};

fn lambdas_strategy() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=5, any::<u64>())
        .prop_map(|(d, seed)| common::random_lambdas(d, &mut SeededRng::new(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standard_protocol_sits_on_the_bound(lambdas in lambdas_strategy()) {
        let bound = fidelity_bound(&lambdas).unwrap();
        let d = lambdas.len() as f64;
        prop_assert!(bound >= 2.0 / (d + 1.0) - 1e-12 && bound <= 1.0 + 1e-12);
        let f = mean_fidelity_exact(&Protocol::standard(lambdas).unwrap());
        prop_assert!((f - bound).abs() < 1e-10);
    }

    #[test]
    fn estimation_never_beats_teleportation(lambdas in lambdas_strategy()) {
        prop_assert!(estimation_fidelity_bound(&lambdas).unwrap() <= fidelity_bound(&lambdas).unwrap() + 1e-12);
    }

    #[test]
    fn random_povms_are_complete_and_bounded(d in 2usize..=3, extra in 0usize..=4, seed: u64) {
        let mut rng = SeededRng::new(seed);
        let lambdas = common::random_lambdas(d, &mut rng);
        let meas = random_povm(d, d * d + extra, &mut rng).unwrap();
        prop_assert!(validate_completeness(&meas, 1e-10).pass);
        let opt = optimal_fidelity_given_measurement(&meas, &lambdas).unwrap();
        prop_assert!(opt <= fidelity_bound(&lambdas).unwrap() + 1e-10);

        let schmidt = SchmidtDecomposition::from_lambdas(lambdas.clone()).unwrap();
        let corrections = optimal_bob_corrections(&meas, &schmidt).unwrap();
        let proto = Protocol::new(schmidt, meas, corrections).unwrap();
        prop_assert!((mean_fidelity_exact(&proto) - opt).abs() < 1e-10);
        prop_assert!((mean_fidelity_from_moments(&proto) - opt).abs() < 1e-10);
    }

    #[test]
    fn multi_kraus_corrections_never_beat_the_polar_choice(seed: u64) {
        let mut rng = SeededRng::new(seed);
        let d = 2;
        let lambdas = common::random_lambdas(d, &mut rng);
        let meas = random_povm(d, d * d, &mut rng).unwrap();
        let kraus = (0..d * d).map(|_| common::random_kraus(d, 3, &mut rng)).collect();
        let proto = Protocol::new(
            SchmidtDecomposition::from_lambdas(lambdas.clone()).unwrap(),
            meas,
            BobCorrections::new(d, kraus).unwrap(),
        )
        .unwrap();
        let opt = optimal_fidelity_given_measurement(proto.measurement(), &lambdas).unwrap();
        prop_assert!(mean_fidelity_exact(&proto) <= opt + 1e-12);
    }

    #[test]
    fn outcome_probabilities_form_a_distribution(lambdas in lambdas_strategy(), seed: u64) {
        let d = lambdas.len();
        let mut rng = SeededRng::new(seed);
        let proto = Protocol::standard(lambdas).unwrap();
        let psi = sample_haar_state(d, &mut rng).unwrap();
        let p = outcome_distribution(&proto, &psi).unwrap();
        prop_assert!(p.iter().all(|&x| x >= -1e-15));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let f = conditional_fidelity(&proto, &psi).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn schmidt_coefficients_survive_local_unitaries(d in 2usize..=5, seed: u64) {
        let mut rng = SeededRng::new(seed);
        let lambdas = common::random_lambdas(d, &mut rng);
        let base = SchmidtDecomposition::from_lambdas(lambdas.clone()).unwrap().reconstruct();
        let u = common::random_unitary(d, &mut rng);
        let v = common::random_unitary(d, &mut rng);
        let rotated = BipartiteVector::state(&u * base.coeffs() * v.transpose()).unwrap();
        let found = schmidt_decompose(&rotated).unwrap();
        for (a, b) in found.lambdas().iter().zip(&lambdas) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let back = found.reconstruct();
        let diff = (back.coeffs() - rotated.coeffs()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn arbitrary_guesses_stay_below_the_estimation_bound(d in 2usize..=4, seed: u64) {
        let mut rng = SeededRng::new(seed);
        let lambdas = common::random_lambdas(d, &mut rng);
        // the bound presumes an optimal measurement: rotate the standard one on particle 1
        let u = common::random_unitary(d, &mut rng);
        let blocks = standard_measurement(d)
            .unwrap()
            .into_blocks()
            .into_iter()
            .map(|outcome| outcome.into_iter().map(|phi| &u * phi).collect())
            .collect();
        let meas = AliceMeasurement::new(d, blocks).unwrap();
        let schmidt = SchmidtDecomposition::from_lambdas(lambdas.clone()).unwrap();
        prop_assert!(check_optimality(&meas, &schmidt, 1e-10).unwrap().pass);
        let guesses = (0..meas.n_outcomes()).map(|_| sample_haar_state(d, &mut rng).unwrap()).collect();
        let f = estimation_fidelity_exact(&meas, &lambdas, &EstimationStrategy::new(guesses)).unwrap();
        prop_assert!(f <= estimation_fidelity_bound(&lambdas).unwrap() + 1e-12);
    }
}

#[test]
fn optimal_corrections_make_standard_measurement_optimal() {
    let mut rng = SeededRng::new(7);
    for d in 2..=6 {
        let lambdas = common::random_lambdas(d, &mut rng);
        let proto = Protocol::standard(lambdas).unwrap();
        assert!(
            check_optimality(proto.measurement(), proto.schmidt(), 1e-10)
                .unwrap()
                .pass
        );
        assert!(proto.corrections().is_unitary());
        for r in 0..proto.measurement().n_outcomes() {
            let b: &Operator = &proto.corrections().kraus(r)[0];
            assert!(b.is_unitary(1e-12));
        }
    }
}
