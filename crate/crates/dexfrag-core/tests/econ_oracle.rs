//! Checks the closed-form win probabilities and profits against a direct
//! simulation of the underlying race: N local clocks at rate lambda against
//! N long-distance clocks at rate pi * lambda, first to ring wins.

use dexfrag_core::econ::EconParams;
use dexfrag_core::stream::StreamKey;
use dexfrag_core::topology::Cluster;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Samples exponential(rate) by inverse transform.
fn exp_sample(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
    -rng.random::<f64>().max(1e-300).ln() / rate
}

struct RaceCounts {
    local_wins: usize,
    long_wins: usize,
    trials: usize,
}

/// Races 2N exponential clocks and counts wins of miner 0 in each group.
fn race(n: u32, pi: f64, lambda: f64, trials: usize, seed: u64) -> RaceCounts {
    let mut rng = StreamKey::root(seed).child("race").rng();
    let n = n as usize;
    let mut local_wins = 0;
    let mut long_wins = 0;
    for _ in 0..trials {
        let mut best = f64::INFINITY;
        let mut winner = 0usize;
        for i in 0..2 * n {
            let rate = if i < n { lambda } else { pi * lambda };
            let t = exp_sample(rate, &mut rng);
            if t < best {
                best = t;
                winner = i;
            }
        }
        if winner == 0 {
            local_wins += 1;
        }
        if winner == n {
            long_wins += 1;
        }
    }
    RaceCounts {
        local_wins,
        long_wins,
        trials,
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn win_probabilities_match_the_race() {
    let trials = 100_000;
    for (i, &n) in [2u32, 4, 8].iter().enumerate() {
        for (j, &pi) in [0.1f64, 0.5, 1.0].iter().enumerate() {
            let params = EconParams {
                n_miners: n,
                pi,
                ..EconParams::default()
            };
            let counts = race(n, pi, 1.0, trials, (i * 3 + j) as u64);

            let p_local = params.win_prob_local().unwrap();
            let observed_local = counts.local_wins as f64 / trials as f64;
            let se = binomial_se(p_local, trials);
            assert!(
                (observed_local - p_local).abs() <= 3.0 * se,
                "local: n={n} pi={pi}: closed form {p_local}, race {observed_local}, se {se}"
            );

            let p_long = params.win_prob_long_distance().unwrap();
            let observed_long = counts.long_wins as f64 / trials as f64;
            let se = binomial_se(p_long.max(1e-12), trials);
            assert!(
                (observed_long - p_long).abs() <= 3.0 * se,
                "long: n={n} pi={pi}: closed form {p_long}, race {observed_long}, se {se}"
            );
        }
    }
}

#[test]
fn race_rate_invariance() {
    // the win probability depends only on the rate ratio, not on lambda
    let trials = 100_000;
    let slow = race(4, 0.5, 1.0, trials, 100);
    let fast = race(4, 0.5, 7.0, trials, 101);
    let p_slow = slow.local_wins as f64 / trials as f64;
    let p_fast = fast.local_wins as f64 / trials as f64;
    let se = binomial_se(1.0 / 6.0, trials);
    assert!((p_slow - p_fast).abs() < 4.0 * se);
}

#[test]
fn profits_match_the_race_oracle() {
    // expected profit = (share of local trades won) * beta * f + ...,
    // assembled from the same race counts
    let trials = 200_000;
    let params = EconParams {
        beta: 0.75,
        n_miners: 4,
        fee: 1.0,
        pi: 0.5,
        ..EconParams::default()
    };
    let counts = race(4, 0.5, 1.0, trials, 55);
    let p_local = counts.local_wins as f64 / trials as f64;
    let p_long = counts.long_wins as f64 / trials as f64;

    // from an A miner's standpoint: local trades arrive with mass beta
    let oracle_profit_a = (0.75 * p_local + 0.25 * p_long) * params.fee;
    let closed = params.expected_profit_single(Cluster::A).unwrap();
    let se = 0.75 * binomial_se(1.0 / 6.0, trials) + 0.25 * binomial_se(1.0 / 12.0, trials);
    assert!(
        (oracle_profit_a - closed).abs() < 3.0 * se,
        "profit oracle {oracle_profit_a} vs closed {closed}"
    );

    // the profit gap is the difference of the two oracle-backed profits
    let oracle_profit_b = (0.25 * p_local + 0.75 * p_long) * params.fee;
    let gap = params.profit_gap_single().unwrap();
    assert!(
        (oracle_profit_a - oracle_profit_b - gap).abs() < 6.0 * se,
        "gap oracle {} vs closed {gap}",
        oracle_profit_a - oracle_profit_b
    );
}

#[test]
fn adoption_threshold_agrees_with_root_finding() {
    // solve the adoption equality pi (2 beta - 1) / (N (1 + pi)) = delta by
    // bisection and compare with the closed form
    let params = EconParams {
        beta: 0.75,
        n_miners: 4,
        delta: 0.05,
        ..EconParams::default()
    };
    let lhs = |pi: f64| pi * (2.0 * params.beta - 1.0) / (4.0 * (1.0 + pi));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) < params.delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = params.adoption_threshold().unwrap();
    assert!(
        (threshold.pi_bar() - 0.5 * (lo + hi)).abs() < 1e-9,
        "bisection {} vs closed {}",
        0.5 * (lo + hi),
        threshold.pi_bar()
    );
}

#[test]
fn latency_mapping_agrees_with_numeric_solve() {
    // solve 1/lambda + theta = 1/(pi lambda) for pi numerically
    for (theta, lambda) in [(1.0, 1.0), (0.25, 4.0), (3.0, 0.5)] {
        let (mut lo, mut hi) = (1e-12f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 1.0 / (mid * lambda) > 1.0 / lambda + theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let closed = dexfrag_core::econ::pi_from_latency(theta, lambda).unwrap();
        assert!((closed - 0.5 * (lo + hi)).abs() < 1e-9);
    }
}
