//! Randomized invariant checks shared by the property and acceptance suites.
//!
//! Each check takes a case count and returns `Err` with the failing input's
//! description. Runs use a fixed proptest RNG so failures reproduce.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::Rng;
use vitlca::decoders::{decode_max_activation, decode_max_sum, DecodeError, MaxMode};
use vitlca::lca::{
    excitatory_input, inhibition, lca_step, soft_threshold, Dictionary, EncodeOptions, Encoder,
    Gramian, LcaParams, NeuronState,
};

use super::{gaussian_vec, rng, unit_vec};

pub const SCALAR_CASES: u32 = 1000;
pub const MATRIX_CASES: u32 = 100;

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Random unit-atom dictionary with labels in `0..classes`.
pub fn random_instance(seed: u64, m: usize, n: usize, classes: usize) -> (Dictionary, Gramian) {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| unit_vec(&mut r, n)).collect();
    let labels = (0..m).map(|_| r.random_range(0..classes as u32)).collect();
    let dict = Dictionary::from_rows(&rows, labels, n, classes).unwrap();
    let gram = Gramian::compute(&dict).unwrap();
    (dict, gram)
}

fn instance_strategy() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..=12, 2usize..=10)
}

pub fn soft_threshold_shrinkage(cases: u32) -> Result<(), String> {
    run(cases, (-1e3f64..1e3, 0f64..50.0), |(u, lambda)| {
        let t = soft_threshold(u, lambda);
        prop_assert!(t.abs() <= u.abs());
        prop_assert!(t == 0.0 || t.signum() == u.signum());
        Ok(())
    })
}

pub fn soft_threshold_odd_and_magnitude(cases: u32) -> Result<(), String> {
    run(cases, (-1e3f64..1e3, 0f64..50.0), |(u, lambda)| {
        let t = soft_threshold(u, lambda);
        prop_assert_eq!(soft_threshold(-u, lambda), -t);
        prop_assert!((t.abs() - (u.abs() - lambda).max(0.0)).abs() <= 1e-12 * u.abs().max(1.0));
        Ok(())
    })
}

pub fn threshold_consistency(cases: u32) -> Result<(), String> {
    run(
        cases,
        (instance_strategy(), 0.01f64..1.0, 1usize..30),
        |((seed, m, n), lambda, steps)| {
            let (dict, gram) = random_instance(seed, m, n, 3);
            let mut r = rng(seed ^ 0xabc);
            let x = gaussian_vec(&mut r, n);
            let b = excitatory_input(&x, &dict).unwrap();
            let params = LcaParams::new(lambda, 10.0, steps, 1.0).unwrap();
            let mut s = NeuronState::zeros(m);
            for _ in 0..steps {
                lca_step(&mut s, &b, &gram, &params).unwrap();
                for (a, u) in s.activations().iter().zip(s.potentials()) {
                    prop_assert_eq!(*a, soft_threshold(*u, lambda));
                    prop_assert!(a.is_finite() && u.is_finite());
                }
                let expected: Vec<usize> = (0..m).filter(|&i| s.activations()[i] != 0.0).collect();
                prop_assert_eq!(s.active(), &expected[..]);
            }
            Ok(())
        },
    )
}

pub fn gramian_invariants(cases: u32) -> Result<(), String> {
    run(cases, instance_strategy(), |(seed, m, n)| {
        let (_, g) = random_instance(seed, m, n, 2);
        g.check_invariants().map_err(|e| TestCaseError::fail(e.to_string()))?;
        for i in 0..m {
            prop_assert!((g.get(i, i) - 1.0).abs() <= 1e-6);
            for j in 0..m {
                prop_assert!((g.get(i, j) - g.get(j, i)).abs() <= 1e-9);
            }
        }
        let mat = nalgebra::DMatrix::from_row_slice(m, m, g.as_slice());
        let eig = nalgebra::SymmetricEigen::new(mat);
        let floor = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(floor >= -1e-6, "min eigenvalue {}", floor);
        Ok(())
    })
}

pub fn inhibition_exclusion(cases: u32) -> Result<(), String> {
    run(cases, (instance_strategy(), 0f64..1.0), |((seed, m, n), density)| {
        let (_, g) = random_instance(seed, m, n, 2);
        let mut r = rng(seed ^ 0x55);
        let a: Vec<f64> = (0..m)
            .map(|_| {
                if r.random::<f64>() < density {
                    r.random_range(-2.0..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let fast = inhibition(&a, &g).unwrap();
        for i in 0..m {
            // (G - I) a, row i
            let mut dense = 0.0;
            for k in 0..m {
                let coeff = g.get(i, k) - if i == k { 1.0 } else { 0.0 };
                dense += coeff * a[k];
            }
            let mut explicit = 0.0;
            for k in 0..m {
                if k != i {
                    explicit += g.get(i, k) * a[k];
                }
            }
            prop_assert!((fast[i] - explicit).abs() <= 1e-12);
            prop_assert!((dense - explicit).abs() <= 1e-12);
        }
        Ok(())
    })
}

pub fn fixed_point_certificate(cases: u32) -> Result<(), String> {
    run(cases, (instance_strategy(), 0.05f64..0.5), |((seed, m, n), lambda)| {
        let (dict, gram) = random_instance(seed, m, n, 2);
        let mut r = rng(seed ^ 0x77);
        let x = gaussian_vec(&mut r, n);
        let params = LcaParams::new(lambda, 100.0, 400_000, 1.0).unwrap();
        let opts = EncodeOptions {
            early_stop: Some(1e-10),
            ..Default::default()
        };
        let res = Encoder::new(&dict, &gram, params)
            .unwrap()
            .encode_with(&x, opts)
            .unwrap();
        prop_assume!(res.last_change < 1e-10);
        prop_assert!(
            res.fixed_point_residual < 1e-6,
            "residual {} after {} steps",
            res.fixed_point_residual,
            res.steps_run
        );
        Ok(())
    })
}

pub fn monotone_descent(cases: u32) -> Result<(), String> {
    run(cases, (instance_strategy(), 0.05f64..1.0, 1usize..400), |((seed, m, n), lambda, steps)| {
        let (dict, gram) = random_instance(seed, m, n, 2);
        let mut r = rng(seed ^ 0x99);
        let x = gaussian_vec(&mut r, n);
        let params = LcaParams::new(lambda, 100.0, steps, 1.0).unwrap();
        let opts = EncodeOptions {
            record_objective: true,
            ..Default::default()
        };
        let res = Encoder::new(&dict, &gram, params)
            .unwrap()
            .encode_with(&x, opts)
            .unwrap();
        let traj = res.objective_trajectory.unwrap();
        prop_assert_eq!(traj.len(), steps);
        for w in traj.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8, "objective rose from {} to {}", w[0], w[1]);
        }
        Ok(())
    })
}

pub fn permutation_equivariance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (instance_strategy(), 0.05f64..0.8, Just(())).prop_flat_map(|((seed, m, n), l, _)| {
            (
                Just((seed, m, n, l)),
                Just((0..m).collect::<Vec<usize>>()).prop_shuffle(),
            )
        }),
        |((seed, m, n, lambda), order)| {
            let (dict, gram) = random_instance(seed, m, n, 3);
            let pdict = dict.permuted(&order).unwrap();
            let pgram = Gramian::compute(&pdict).unwrap();
            for i in 0..m {
                for j in 0..m {
                    prop_assert_eq!(pgram.get(i, j), gram.get(order[i], order[j]));
                }
            }
            let mut r = rng(seed ^ 0x11);
            let x = gaussian_vec(&mut r, n);
            let b = excitatory_input(&x, &dict).unwrap();
            let pb = excitatory_input(&x, &pdict).unwrap();
            for k in 0..m {
                prop_assert_eq!(pb[k], b[order[k]]);
            }
            let params = LcaParams::new(lambda, 100.0, 150, 1.0).unwrap();
            let res = Encoder::new(&dict, &gram, params).unwrap().encode(&x).unwrap();
            let pres = Encoder::new(&pdict, &pgram, params).unwrap().encode(&x).unwrap();
            prop_assert_eq!(res.active_count, pres.active_count);
            for k in 0..m {
                prop_assert!((pres.activations[k] - res.activations[order[k]]).abs() <= 1e-9);
            }
            prop_assert!((res.fixed_point_residual - pres.fixed_point_residual).abs() <= 1e-9);
            Ok(())
        },
    )
}

/// Mean active count over 100 inputs is no larger at threshold 2 than at 1.
pub fn sparsity_monotone_in_threshold(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 4usize..=16, 4usize..=16), |(seed, m, n)| {
        let (dict, gram) = random_instance(seed, m, n, 2);
        let mut r = rng(seed ^ 0x33);
        let inputs: Vec<Vec<f64>> = (0..100).map(|_| gaussian_vec(&mut r, n)).collect();
        let count = |lambda: f64| -> usize {
            let params = LcaParams::new(lambda, 100.0, 100, 1.0).unwrap();
            let enc = Encoder::new(&dict, &gram, params).unwrap();
            inputs.iter().map(|x| enc.encode(x).unwrap().active_count).sum()
        };
        let (loose, tight) = (count(1.0), count(2.0));
        prop_assert!(tight <= loose, "lambda=2 total {} > lambda=1 total {}", tight, loose);
        Ok(())
    })
}

fn code_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<u32>, usize)> {
    (1usize..=6, 1usize..=40).prop_flat_map(|(c, m)| {
        (
            prop::collection::vec(
                prop_oneof![3 => Just(0.0), 2 => -5.0f64..5.0],
                m,
            ),
            prop::collection::vec(0..c as u32, m),
            Just(c),
        )
    })
}

fn prediction(
    r: Result<vitlca::decoders::Prediction, DecodeError>,
) -> Result<Option<(u32, Vec<f64>)>, TestCaseError> {
    match r {
        Ok(p) => Ok(Some((p.predicted_class, p.per_class_scores))),
        Err(DecodeError::NoEvidence) => Ok(None),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

pub fn decoder_scaling_invariance(cases: u32) -> Result<(), String> {
    run(cases, (code_strategy(), 1e-3f64..1e3), |((a, labels, c), s)| {
        let scaled: Vec<f64> = a.iter().map(|v| v * s).collect();
        let p = prediction(decode_max_sum(&a, &labels, c))?;
        let q = prediction(decode_max_sum(&scaled, &labels, c))?;
        prop_assert_eq!(p.map(|x| x.0), q.map(|x| x.0));
        let p = prediction(decode_max_activation(&a, &labels, c, MaxMode::Absolute))?;
        let q = prediction(decode_max_activation(&scaled, &labels, c, MaxMode::Absolute))?;
        prop_assert_eq!(p.map(|x| x.0), q.map(|x| x.0));
        Ok(())
    })
}

pub fn decoder_one_sparse_agreement(cases: u32) -> Result<(), String> {
    run(
        cases,
        (1usize..=6, 1usize..=40).prop_flat_map(|(c, m)| {
            (
                prop::collection::vec(0..c as u32, m),
                0..m,
                prop_oneof![-5.0f64..-1e-9, 1e-9f64..5.0],
                Just(c),
            )
        }),
        |(labels, j, v, c)| {
            let mut a = vec![0.0; labels.len()];
            a[j] = v;
            let p = prediction(decode_max_sum(&a, &labels, c))?.unwrap();
            let q = prediction(decode_max_activation(&a, &labels, c, MaxMode::Absolute))?.unwrap();
            prop_assert_eq!(p.0, labels[j]);
            prop_assert_eq!(q.0, labels[j]);
            Ok(())
        },
    )
}

pub fn decoder_label_permutation(cases: u32) -> Result<(), String> {
    run(
        cases,
        code_strategy().prop_flat_map(|(a, l, c)| {
            (Just((a, l, c)), Just((0..c as u32).collect::<Vec<u32>>()).prop_shuffle())
        }),
        |((a, labels, c), perm)| {
            let relabeled: Vec<u32> = labels.iter().map(|&l| perm[l as usize]).collect();
            for mode in [None, Some(MaxMode::Absolute)] {
                let decode = |l: &[u32]| match mode {
                    None => decode_max_sum(&a, l, c),
                    Some(m) => decode_max_activation(&a, l, c, m),
                };
                let p = prediction(decode(&labels))?;
                let q = prediction(decode(&relabeled))?;
                match (p, q) {
                    (None, None) => {}
                    (Some((pc, ps)), Some((qc, qs))) => {
                        prop_assert_eq!(qc, perm[pc as usize]);
                        for k in 0..c {
                            prop_assert_eq!(qs[perm[k] as usize], ps[k]);
                        }
                    }
                    other => prop_assert!(false, "evidence mismatch {:?}", other),
                }
            }
            Ok(())
        },
    )
}

pub fn decoder_score_conservation(cases: u32) -> Result<(), String> {
    // Dyadic activations keep every partial sum exact, so any summation order
    // must agree bit for bit.
    let dyadic = (1usize..=6, 1usize..=40).prop_flat_map(|(c, m)| {
        (
            prop::collection::vec(-4096i32..4096, m),
            prop::collection::vec(0..c as u32, m),
            Just(c),
        )
    });
    run(cases, dyadic, |(ints, labels, c)| {
        let a: Vec<f64> = ints.iter().map(|&k| k as f64 / 1024.0).collect();
        let l1: f64 = a.iter().map(|v| v.abs()).sum();
        match prediction(decode_max_sum(&a, &labels, c))? {
            Some((_, scores)) => {
                prop_assert_eq!(scores.iter().sum::<f64>(), l1);
                prop_assert!(scores.iter().all(|&s| s >= 0.0));
            }
            None => prop_assert_eq!(l1, 0.0),
        }
        Ok(())
    })?;
    run(cases, code_strategy(), |(a, labels, c)| {
        let l1: f64 = a.iter().map(|v| v.abs()).sum();
        if let Some((_, scores)) = prediction(decode_max_sum(&a, &labels, c))? {
            let total: f64 = scores.iter().sum();
            prop_assert!((total - l1).abs() <= 1e-12 * l1.max(1.0));
        }
        Ok(())
    })
}

pub fn decoder_argmax_and_nonnegativity(cases: u32) -> Result<(), String> {
    run(cases, code_strategy(), |(a, labels, c)| {
        for r in [
            decode_max_sum(&a, &labels, c),
            decode_max_activation(&a, &labels, c, MaxMode::Absolute),
        ] {
            if let Some((pred, scores)) = prediction(r)? {
                prop_assert!(scores.iter().all(|&s| s >= 0.0));
                let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let first = scores.iter().position(|&s| s == best).unwrap();
                prop_assert_eq!(pred as usize, first);
            }
        }
        Ok(())
    })
}

pub type Check = fn(u32) -> Result<(), String>;

/// Every check, labelled, with its case count.
pub fn all_checks() -> Vec<(&'static str, u32, Check)> {
    vec![
        ("soft threshold shrinkage", SCALAR_CASES, soft_threshold_shrinkage),
        ("soft threshold odd / magnitude", SCALAR_CASES, soft_threshold_odd_and_magnitude),
        ("threshold consistency after each step", MATRIX_CASES, threshold_consistency),
        ("gramian symmetry / unit diagonal / PSD", MATRIX_CASES, gramian_invariants),
        ("inhibition excludes self term", MATRIX_CASES, inhibition_exclusion),
        ("fixed-point certificate", MATRIX_CASES, fixed_point_certificate),
        ("monotone objective descent", MATRIX_CASES, monotone_descent),
        ("dictionary permutation equivariance", MATRIX_CASES, permutation_equivariance),
        ("sparsity monotone in threshold", MATRIX_CASES, sparsity_monotone_in_threshold),
        ("decoder positive-scaling invariance", SCALAR_CASES, decoder_scaling_invariance),
        ("decoder 1-sparse agreement", SCALAR_CASES, decoder_one_sparse_agreement),
        ("decoder label-permutation equivariance", SCALAR_CASES, decoder_label_permutation),
        ("max-sum score conservation", SCALAR_CASES, decoder_score_conservation),
        ("decoder argmax / nonnegative scores", SCALAR_CASES, decoder_argmax_and_nonnegativity),
    ]
}
