//! Property tests for the structural invariants.

use mixlin_core::metrics::estimation_error;
use mixlin_core::model::{make_delta_spaced_params, sample_dataset};
use mixlin_core::moments::{compute_second_moments, t_map};
use mixlin_core::nalgebra::{DMatrix, DVector};
use mixlin_core::tensor_power::{power_decompose, PowerConfig};
use mixlin_core::Tensor3;
use proptest::prelude::*;

fn vector_strategy(len: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-3.0f64..3.0, len).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_map_is_symmetric(u in vector_strategy(5)) {
        let t = t_map(&u);
        prop_assert!(t.symmetry_error() <= 1e-10);
    }

    #[test]
    fn t_map_matches_definition(u in vector_strategy(4)) {
        let t = t_map(&u);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let mut want = 0.0;
                    if b == c { want += u[a]; }
                    if a == c { want += u[b]; }
                    if a == b { want += u[c]; }
                    prop_assert_eq!(t.get(a, b, c), want);
                }
            }
        }
    }

    #[test]
    fn dataset_generation_is_deterministic(seed in 0u64..1_000, n in 1usize..40) {
        let params = make_delta_spaced_params(4, 2, 1.0, 3).unwrap();
        let a = sample_dataset(&params, n, seed).unwrap();
        let b = sample_dataset(&params, n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for i in 0..n {
            let z = a.eval_labels()[i];
            prop_assert_eq!(a.ys()[i], a.covariate(i).dot(&params.betas()[z]));
        }
    }

    #[test]
    fn estimation_error_is_permutation_invariant(
        seed in 0u64..500,
        swap_a in 0usize..3,
        swap_b in 0usize..3,
    ) {
        let mut rng = mixlin_core::rng::rng_for(seed, &[]);
        let est: Vec<DVector<f64>> = (0..3)
            .map(|_| mixlin_core::rng::unit_sphere_vector(4, &mut rng))
            .collect();
        let truth: Vec<DVector<f64>> = (0..3)
            .map(|_| mixlin_core::rng::unit_sphere_vector(4, &mut rng))
            .collect();
        let base = estimation_error(&est, &truth).unwrap().error;

        let mut shuffled = est.clone();
        shuffled.swap(swap_a, swap_b);
        let shuffled_err = estimation_error(&shuffled, &truth).unwrap().error;
        prop_assert!((base - shuffled_err).abs() < 1e-12);

        let sym = estimation_error(&truth, &est).unwrap().error;
        prop_assert!((base - sym).abs() < 1e-12);
    }

    #[test]
    fn second_moment_merge_is_order_insensitive(split in 1usize..59) {
        let params = make_delta_spaced_params(4, 2, 1.2, 11).unwrap();
        let data = sample_dataset(&params, 60, 13).unwrap();
        let whole = compute_second_moments(data.ys(), data.xs()).unwrap();

        let xs_a = data.xs().rows(0, split).into_owned();
        let xs_b = data.xs().rows(split, 60 - split).into_owned();
        let a = compute_second_moments(&data.ys()[..split], &xs_a).unwrap();
        let b = compute_second_moments(&data.ys()[split..], &xs_b).unwrap();

        for merged in [a.merge(&b).unwrap(), b.merge(&a).unwrap()] {
            let gap = (&merged.matrix - &whole.matrix).norm()
                / whole.matrix.norm().max(1e-300);
            prop_assert!(gap < 1e-10, "merge gap {}", gap);
            prop_assert!((merged.mean_square - whole.mean_square).abs() < 1e-12);
        }
    }
}

#[test]
fn spacing_construction_hits_requested_geometry() {
    for (p, k, delta, seed) in [
        (4usize, 2usize, 0.5f64, 1u64),
        (6, 3, 1.0, 2),
        (8, 4, 1.2, 3),
        (10, 5, 1.4, 4),
        (5, 5, 1.5, 5),
    ] {
        let params = make_delta_spaced_params(p, k, delta, seed).unwrap();
        for i in 0..k {
            let norm = params.betas()[i].norm();
            assert!((norm - 1.0).abs() <= 1e-10, "norm {norm} at (p={p},k={k})");
            for j in (i + 1)..k {
                let dist = (&params.betas()[i] - &params.betas()[j]).norm();
                assert!(
                    (dist - delta).abs() <= 1e-10,
                    "distance {dist} vs {delta} at (p={p},k={k})"
                );
            }
        }
    }
}

#[test]
fn power_decompose_is_deterministic_across_runs() {
    let mut t = Tensor3::zeros(4);
    let q = {
        let mut rng = mixlin_core::rng::rng_for(21, &[]);
        DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5).qr().q()
    };
    for j in 0..4 {
        t.add_scaled_cube(1.0 + 0.3 * j as f64, &q.column(j).clone_owned());
    }
    let cfg = PowerConfig::with_defaults(4, 99);
    let a = power_decompose(&t, 4, &cfg).unwrap();
    let b = power_decompose(&t, 4, &cfg).unwrap();
    assert_eq!(a, b);
}
