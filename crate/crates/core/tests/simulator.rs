use std::collections::HashMap;

use gld_core::simulator::*;
use gld_core::{Channel, DecoderMetric, Distribution, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform2() -> Distribution {
    Distribution::uniform(2).unwrap()
}

fn config(n: usize, rate: f64, w: &Channel, metric: DecoderMetric, trials: u64, engine: Engine) -> SimConfig {
    SimConfig {
        n,
        rate,
        channel: w.clone(),
        composition: uniform2(),
        metric,
        trials,
        seed: 0x5eed,
        engine,
    }
}

/// Rate whose codebook size rounds to `m` at length `n`.
fn rate_for(n: usize, m: usize) -> f64 {
    (m as f64).ln() / n as f64
}

#[test]
fn codewords_have_the_exact_composition() {
    let q = Distribution::new(vec![0.25, 0.5, 0.25]).unwrap();
    let cb = sample_codebook(&q, 8, 50, 3).unwrap();
    assert_eq!(cb.len(), 50);
    for m in 0..cb.len() {
        let mut c = [0; 3];
        cb.codeword(m).iter().for_each(|&x| c[x] += 1);
        assert_eq!(c, [2, 4, 2]);
    }
    let single = sample_codebook(&q, 4, 1, 3).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(sample_codebook(&q, 8, 50, 3).unwrap(), cb);
    assert_ne!(sample_codebook(&q, 8, 50, 4).unwrap(), cb);
}

#[test]
fn rejects_non_integral_types() {
    let q = Distribution::new(vec![0.3, 0.7]).unwrap();
    assert!(matches!(sample_codebook(&q, 4, 2, 0), Err(Error::NonIntegralType { .. })));
    assert_eq!(type_counts(&q, 10).unwrap(), vec![3, 7]);
}

#[test]
fn length_two_type_class_is_split_evenly() {
    let cb = sample_codebook(&uniform2(), 2, 10_000, 11).unwrap();
    let ones = (0..cb.len()).filter(|&m| cb.codeword(m) == [0, 1]).count();
    assert!((0..cb.len()).all(|m| cb.codeword(m) == [0, 1] || cb.codeword(m) == [1, 0]));
    // Binomial(10⁴, 1/2): 3σ = 150.
    assert!((ones as i64 - 5000).abs() < 150, "{ones}");
}

#[test]
fn codewords_are_uniform_over_the_type_class() {
    // n = 8, four ones: 70 sequences. χ²(69) upper 1% point is 99.2275.
    let cb = sample_codebook(&uniform2(), 8, 10_000, 2024).unwrap();
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for m in 0..cb.len() {
        *counts.entry(cb.codeword(m).to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 70);
    let expected = 10_000.0 / 70.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 99.2275, "chi2 = {chi2}");
}

#[test]
fn single_codeword_always_decodes_to_zero() {
    let w = Channel::bsc(0.3).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    let cb = sample_codebook(&uniform2(), 6, 1, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let y: Vec<usize> = (0..6).map(|_| rng.random_range(0..2)).collect();
        assert_eq!(gld_decode(&cb, &y, 2, &metric, &mut rng).unwrap().index, 0);
    }
}

#[test]
fn equal_joint_types_split_evenly() {
    // Both words agree with y in one zero and one one position.
    let cb = Codebook::from_words(uniform2(), vec![vec![0, 1, 1, 0], vec![1, 0, 0, 1]]).unwrap();
    let y = [0, 0, 1, 1];
    let w = Channel::bsc(0.2).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    let post = gld_posterior(&cb, &y, 2, &metric).unwrap();
    assert_eq!(post.probs, vec![0.5, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let zeros = (0..10_000)
        .filter(|_| gld_decode(&cb, &y, 2, &metric, &mut rng).unwrap().index == 0)
        .count();
    assert!((zeros as i64 - 5000).abs() < 150, "{zeros}");
}

#[test]
fn large_beta_agrees_with_argmax() {
    let w = Channel::new(&[vec![0.8, 0.15, 0.05], vec![0.1, 0.3, 0.6]]).unwrap();
    let metric = DecoderMetric::matched(&w, 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut agree = 0;
    for t in 0..10_000u64 {
        let cb = sample_codebook(&uniform2(), 12, 8, t).unwrap();
        let y: Vec<usize> = (0..12).map(|_| rng.random_range(0..3)).collect();
        // Argmax oracle: explicit log-likelihood sums per codeword.
        let ll: Vec<f64> = (0..cb.len())
            .map(|m| cb.codeword(m).iter().zip(&y).map(|(&x, &b)| w.prob(x, b).ln()).sum())
            .collect();
        let best = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let d = gld_decode(&cb, &y, 3, &metric, &mut rng).unwrap().index;
        if ll[d] >= best - 1e-9 {
            agree += 1;
        }
    }
    assert!(agree >= 9_900, "{agree}");
}

#[test]
fn posterior_sums_to_one_and_ignores_joint_permutations() {
    let w = Channel::new(&[vec![0.7, 0.2, 0.1], vec![0.2, 0.2, 0.6]]).unwrap();
    let metric = DecoderMetric::matched(&w, 1.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..200 {
        let cb = sample_codebook(&uniform2(), 6, 5, t).unwrap();
        let y: Vec<usize> = (0..6).map(|_| rng.random_range(0..3)).collect();
        let post = gld_posterior(&cb, &y, 3, &metric).unwrap();
        assert!((post.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Permute positions of every codeword and y jointly.
        let perm = [3, 5, 0, 1, 4, 2];
        let words: Vec<Vec<usize>> = (0..cb.len())
            .map(|m| perm.iter().map(|&i| cb.codeword(m)[i]).collect())
            .collect();
        let yp: Vec<usize> = perm.iter().map(|&i| y[i]).collect();
        let cbp = Codebook::from_words(uniform2(), words).unwrap();
        assert_eq!(gld_posterior(&cbp, &yp, 3, &metric).unwrap(), post);
    }
}

#[test]
fn all_infinite_scores_fall_back_to_uniform() {
    let w = Channel::identity(2).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    let cb = Codebook::from_words(uniform2(), vec![vec![0, 1], vec![0, 1]]).unwrap();
    let post = gld_posterior(&cb, &[1, 0], 2, &metric).unwrap();
    assert!(post.fallback);
    assert_eq!(post.probs, vec![0.5, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(gld_decode(&cb, &[1, 0], 2, &metric, &mut rng).unwrap().fallback);
    assert!(gld_decode(&cb, &[1, 0, 0], 2, &metric, &mut rng).is_err());
}

#[test]
fn identical_seed_gives_identical_results_for_any_thread_count() {
    let w = Channel::bsc(0.15).unwrap();
    for engine in [Engine::TypeDomain, Engine::Explicit] {
        let cfg = config(12, 0.2, &w, DecoderMetric::matched(&w, 1.0).unwrap(), 20_000, engine);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_monte_carlo(&cfg).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, run_monte_carlo(&cfg).unwrap());
        assert!(a.errors > 0);
        let se = (a.error_estimate * (1.0 - a.error_estimate) / a.trials as f64).sqrt();
        assert_eq!(a.stderr, se);
        assert_eq!(a.codebook_size, 11);
    }
}

#[test]
fn oracle_trivial_cases() {
    let w = Channel::bsc(0.2).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    assert_eq!(exact_ensemble_error(&uniform2(), 4, 1, &w, &metric).unwrap(), 0.0);
    let flat = Channel::new(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
    for metric in [DecoderMetric::mmi(2.0).unwrap(), DecoderMetric::matched(&w, 1.0).unwrap()] {
        let p = exact_ensemble_error(&uniform2(), 4, 2, &flat, &metric).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "{p}");
    }
    assert!(matches!(
        exact_ensemble_error(&uniform2(), 8, 2, &w, &metric),
        Err(Error::InstanceTooLarge(_))
    ));
    assert!(exact_ensemble_error(&uniform2(), 4, 5, &w, &metric).is_err());
}

#[test]
fn oracle_agrees_with_explicit_probability_sum() {
    // n = 2, M = 2 by hand: codewords in {01, 10}.
    let w = Channel::bsc(0.2).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    let words = [[0usize, 1], [1, 0]];
    let mut total = 0.0;
    for a in &words {
        for b in &words {
            for y0 in 0..2 {
                for y1 in 0..2 {
                    let y = [y0, y1];
                    let lik = |x: &[usize; 2]| w.prob(x[0], y[0]) * w.prob(x[1], y[1]);
                    let (la, lb) = (lik(a), lik(b));
                    total += 0.25 * la * lb / (la + lb);
                }
            }
        }
    }
    let exact = exact_ensemble_error(&uniform2(), 2, 2, &w, &metric).unwrap();
    assert!((exact - total).abs() < 1e-15, "{exact} vs {total}");
}

#[test]
fn monte_carlo_matches_the_exact_oracle() {
    let w = Channel::bsc(0.2).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    let exact = exact_ensemble_error(&uniform2(), 4, 2, &w, &metric).unwrap();
    for (engine, trials) in [(Engine::TypeDomain, 1_000_000), (Engine::Explicit, 200_000)] {
        let r = run_monte_carlo(&config(4, rate_for(4, 2), &w, metric.clone(), trials, engine)).unwrap();
        assert_eq!(r.codebook_size, 2);
        assert!((r.error_estimate - exact).abs() <= 3.0 * r.stderr, "{engine:?}: {} vs {exact}", r.error_estimate);
    }
}

#[test]
fn engines_agree_on_a_ternary_instance() {
    let w = Channel::new(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6], vec![0.3, 0.3, 0.4]]).unwrap();
    let metric = DecoderMetric::mismatched(&Channel::new(&[vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6], vec![0.3, 0.4, 0.3]]).unwrap(), 1.3).unwrap();
    let mut cfg = config(6, 0.3, &w, metric, 200_000, Engine::TypeDomain);
    cfg.composition = Distribution::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
    let a = run_monte_carlo(&cfg).unwrap();
    cfg.engine = Engine::Explicit;
    let b = run_monte_carlo(&cfg).unwrap();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.error_estimate - b.error_estimate).abs() <= 4.0 * se, "{a:?} {b:?}");
}

#[test]
fn noiseless_channel_errs_only_on_collisions() {
    // n = 8, balanced: 70 sequences; M = 4. Error needs a copy of x₀.
    let w = Channel::identity(2).unwrap();
    let r = run_monte_carlo(&config(8, rate_for(8, 4), &w, DecoderMetric::matched(&w, 1.0).unwrap(), 100_000, Engine::TypeDomain)).unwrap();
    assert_eq!(r.codebook_size, 4);
    let bound = 3.0 / 70.0;
    assert!(r.error_estimate <= bound + 3.0 * r.stderr, "{}", r.error_estimate);
    assert!(r.error_estimate > 0.0);
}

#[test]
fn above_capacity_fails() {
    let w = Channel::bsc(0.1).unwrap();
    let r = run_monte_carlo(&config(64, 0.65, &w, DecoderMetric::matched(&w, 1.0).unwrap(), 10_000, Engine::TypeDomain)).unwrap();
    assert!(r.error_estimate > 0.5, "{}", r.error_estimate);
    assert!(matches!(
        run_monte_carlo(&config(64, 0.65, &w, DecoderMetric::matched(&w, 1.0).unwrap(), 10, Engine::Explicit)),
        Err(Error::InstanceTooLarge(_))
    ));
}

#[test]
fn rejects_bad_configurations() {
    let w = Channel::bsc(0.1).unwrap();
    let metric = DecoderMetric::matched(&w, 1.0).unwrap();
    assert!(run_monte_carlo(&config(5, 0.1, &w, metric.clone(), 10, Engine::TypeDomain)).is_err());
    assert!(run_monte_carlo(&config(4, 0.1, &w, metric.clone(), 0, Engine::TypeDomain)).is_err());
    assert!(run_monte_carlo(&config(4, -0.1, &w, metric, 10, Engine::TypeDomain)).is_err());
    assert_eq!(codebook_size(64, 0.1).unwrap(), 602);
}
