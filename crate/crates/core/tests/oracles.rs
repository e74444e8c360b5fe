//! Independent-oracle checks: every closed-form quantity is recomputed by a
//! separately coded reference expression, and the full mechanism is matched
//! against an exhaustive-scan re-implementation on small markets.

use rand::Rng;
use syncmarket_core::market::{
    sample_scenario, validate_scenario, Counts, DtTask, MarKind, MarProfile, ScenarioConfig,
};
use syncmarket_core::mechanism::{
    run_mechanism, MechanismKind, PreparedMarket,
};
use syncmarket_core::synchronization::{
    ar_compute_delay, ar_transmission_delay, match_quality, recommendation_count,
};
use syncmarket_core::{link, seed, simulator};

const REL_TOL: f64 = 1e-12;

fn assert_close(a: f64, b: f64, what: &str) {
    let scale = a.abs().max(b.abs()).max(1e-300);
    assert!(
        (a - b).abs() / scale < REL_TOL || (a - b).abs() < 1e-300,
        "{what}: {a} vs {b}"
    );
}

fn test_rng(tag: u64) -> rand_chacha::ChaCha12Rng {
    seed::rng(seed::sub_seed(0xfeed, 0x0c0de, tag, 0))
}

#[test]
fn shannon_rates_match_reference_evaluation() {
    let mut rng = test_rng(1);
    for _ in 0..100_000 {
        let bw: f64 = rng.random_range(1e5..5e7);
        let gain: f64 = rng.random_range(0.0..1.0);
        let power: f64 = rng.random_range(0.0..5.0);
        let noise: f64 = rng.random_range(1e-6..3.0);
        let got = link::shannon_rate(bw, gain, power, noise).unwrap();
        // Reference path: natural log and explicit change of base.
        let reference = bw * (1.0 + gain * power / noise).ln() / std::f64::consts::LN_2;
        assert_close(got, reference, "shannon rate");
    }
}

fn random_task(rng: &mut impl Rng) -> DtTask {
    DtTask {
        size_bits: rng.random_range(1.0..8e6),
        cycles_per_bit: rng.random_range(0.0..125.0),
        deadline_s: rng.random_range(0.2..2.0),
    }
}

fn random_mar(rng: &mut impl Rng, id: usize) -> MarProfile {
    MarProfile {
        id,
        kind: if id == 0 { MarKind::Functional } else { MarKind::Infotainment },
        ar_size_bits: rng.random_range(100.0..2e6),
        ar_cycles_per_bit: rng.random_range(0.0..125.0),
        hits: vec![],
        bid: 0.0,
    }
}

#[test]
fn match_quality_and_ar_delays_match_reference_evaluation() {
    let mut rng = test_rng(2);
    for _ in 0..100_000 {
        let task = random_task(&mut rng);
        let mar = random_mar(&mut rng, 1);
        let downlink: f64 = rng.random_range(1e5..1e8);
        let hits: u64 = rng.random_range(1..6);
        let g: f64 = rng.random_range(0.0..1.0);
        let beta: f64 = rng.random_range(1.0..3.0);
        let t_dt: f64 = rng.random_range(0.0..1.0);
        let l_dt: f64 = rng.random_range(0.0..1.0);
        let gpu: f64 = rng.random_range(1e9..4e10);

        let slack = (task.deadline_s - t_dt - l_dt).max(0.0);
        let h = hits as f64;

        // Recommendation count: slack * R / s_ar.
        let count = recommendation_count(&task, downlink, &mar, t_dt, l_dt);
        assert_close(count, slack * downlink / mar.ar_size_bits, "recommendation count");

        // Match quality: theta(G * slack * R / (s_ar * h)) * h.
        let m = match_quality(&task, downlink, &mar, hits, g, beta, t_dt, l_dt);
        let inner = g * slack * downlink / (mar.ar_size_bits * h);
        assert_close(m, inner.powf(beta) * h, "match quality");

        // AR transmission delay: (inner + 1) * s_ar / R.
        let t_ar = ar_transmission_delay(&task, downlink, &mar, hits, g, t_dt, l_dt).unwrap();
        assert_close(t_ar, (inner + 1.0) * mar.ar_size_bits / downlink, "ar transmission");

        // AR compute delay: (inner + 1) * s_ar * e_ar / f_gpu.
        let rsu = syncmarket_core::RsuProfile {
            id: 0,
            uplink_bw_hz: 2e7,
            downlink_bw_hz: 2e7,
            cpu_freq_hz: 3.6e9,
            gpu_freq_hz: gpu,
            tx_power_mw: 1.0,
            noise_mw: 1.0,
        };
        let l_ar = ar_compute_delay(&task, downlink, &mar, &rsu, hits, g, t_dt, l_dt).unwrap();
        assert_close(
            l_ar,
            (inner + 1.0) * mar.ar_size_bits * mar.ar_cycles_per_bit / gpu,
            "ar compute",
        );

        // Total delay: allocation-weighted sum.
        let eval = syncmarket_core::synchronization::total_delay(
            &task, t_dt, l_dt, t_ar, l_ar, m, true, true,
        );
        assert_close(eval.total_delay, t_dt + l_dt + t_ar + l_ar, "total delay");
        assert_eq!(eval.feasible, eval.total_delay <= task.deadline_s);
    }
}

#[test]
fn dt_delays_match_reference_evaluation() {
    let mut rng = test_rng(3);
    for _ in 0..100_000 {
        let task = random_task(&mut rng);
        let rate: f64 = rng.random_range(1.0..1e8);
        let cpu: f64 = rng.random_range(1e8..1e10);
        let rsu = syncmarket_core::RsuProfile {
            id: 0,
            uplink_bw_hz: 2e7,
            downlink_bw_hz: 2e7,
            cpu_freq_hz: cpu,
            gpu_freq_hz: 1.9e10,
            tx_power_mw: 1.0,
            noise_mw: 1.0,
        };
        assert_close(
            link::dt_upload_delay(&task, rate).unwrap(),
            task.size_bits / rate,
            "upload delay",
        );
        assert_close(
            link::dt_compute_delay(&task, &rsu).unwrap(),
            task.size_bits * task.cycles_per_bit / cpu,
            "compute delay",
        );
    }
}

#[test]
fn pricing_cases_match_reference_evaluation() {
    use syncmarket_core::mechanism::{price_physical, price_virtual};
    let mut rng = test_rng(4);
    for _ in 0..100_000 {
        // Physical second-score payment.
        let n = rng.random_range(2..8);
        let scores: Vec<Option<f64>> =
            (0..n).map(|_| Some(rng.random_range(0.0..10.0))).collect();
        let winner = rng.random_range(0..n);
        let value_term: f64 = rng.random_range(0.0..5.0);
        let got = price_physical(&scores, winner, value_term);
        let mut runner = f64::NEG_INFINITY;
        for (i, s) in scores.iter().enumerate() {
            if i != winner {
                runner = runner.max(s.unwrap());
            }
        }
        let reference = (runner - value_term).max(0.0);
        assert_close(got, reference, "physical price");

        // Virtual pricing cases.
        let k = rng.random_range(1..6usize);
        let roster: Vec<usize> = (0..=k).collect();
        let bids: Vec<f64> = (0..=k).map(|_| rng.random_range(0.0..5.0)).collect();
        let alpha: f64 = rng.random_range(1.0..3.0);
        let display: f64 = rng.random_range(0.0..5.0);
        // Functional case: own bid rate over the display duration.
        assert_close(
            price_virtual(&roster, &bids, alpha, 0, display),
            display * bids[0],
            "virtual price, functional",
        );
        // Infotainment case: alpha-scaled best competing bid.
        let winner_k = rng.random_range(1..=k);
        let mut best_other = 0.0f64;
        for (j, b) in bids.iter().enumerate() {
            if j != winner_k {
                best_other = best_other.max(*b);
            }
        }
        assert_close(
            price_virtual(&roster, &bids, alpha, winner_k, display),
            display * alpha * best_other,
            "virtual price, infotainment",
        );
    }
}

#[test]
fn price_scaling_factor_matches_reference_cases() {
    let mut rng = test_rng(5);
    for _ in 0..100_000 {
        let gamma: f64 = rng.random_range(0.0..3.0);
        let e_u0: f64 = rng.random_range(0.0..5.0);
        let e_u2: f64 = rng.random_range(1e-6..5.0);
        let got = syncmarket_core::mechanism::price_scaling_from_expectations(gamma, e_u0, e_u2);
        let reference = if gamma * e_u0 / e_u2 > 1.0 { gamma * e_u0 / e_u2 } else { 1.0 };
        assert_close(got, reference, "price scaling factor");
        assert!(got >= 1.0);
    }
}

// ---------------------------------------------------------------------------
// Exhaustive-scan equivalence on small markets
// ---------------------------------------------------------------------------

/// A from-scratch clearing pass written as plain nested scans over the
/// definitional rules, sharing only the estimator outputs with the
/// implementation under test.
fn exhaustive_clear(
    prepared: &PreparedMarket<'_>,
    prices: &[f64],
) -> (Option<usize>, f64, Option<usize>, f64) {
    let scenario = prepared.scenario;
    let n_av = scenario.avs.len();
    let n_mar = scenario.mars.len();

    // Scores by definition: offered price plus the estimated virtual term.
    let mut scores = vec![None; n_av];
    for i in 0..n_av {
        if prepared.tables.dt_feasible[i] {
            let v = prepared.estimates[i].as_ref().map_or(0.0, |e| e.virtual_surplus);
            scores[i] = Some(prices[i] + v);
        }
    }

    // Winner: the candidate whose score is >= every other score, taking the
    // lowest index among ties.
    let mut winner_av = None;
    'outer: for i in 0..n_av {
        let Some(si) = scores[i] else { continue };
        for j in 0..n_av {
            if let Some(sj) = scores[j] {
                if sj > si || (sj == si && j < i) {
                    continue 'outer;
                }
            }
        }
        winner_av = Some(i);
        break;
    }
    let Some(w) = winner_av else {
        return (None, 0.0, None, 0.0);
    };

    // Payment: the lowest offer that still attains the runner-up's score.
    let mut runner = None;
    for (j, s) in scores.iter().enumerate() {
        if j != w {
            if let Some(s) = s {
                runner = Some(runner.map_or(*s, |r: f64| r.max(*s)));
            }
        }
    }
    let value_term = prepared.estimates[w].as_ref().map_or(0.0, |e| e.virtual_surplus);
    let pay_av = runner.map_or(0.0, |r| (r - value_term).max(0.0));

    // Virtual side: scaled strict-dominance rule over the feasible roster.
    let alpha = prepared.estimates[w].as_ref().map_or(1.0, |e| e.alpha);
    let bids = prepared.truthful_mar_bids(w);
    let feasible: Vec<bool> = (0..n_mar).map(|k| prepared.tables.pairs[w][k].feasible).collect();

    let mut winner_mar = None;
    let mut clears = 0;
    for k in 1..n_mar {
        if !feasible[k] {
            continue;
        }
        let mut max_other = 0.0f64;
        for j in 0..n_mar {
            if j != k && feasible[j] {
                max_other = max_other.max(bids[j]);
            }
        }
        if bids[k] > alpha * max_other {
            clears += 1;
            if winner_mar.is_none() {
                winner_mar = Some(k);
            }
        }
    }
    assert!(clears <= 1, "at most one infotainment bid can clear the scaled bar");
    if winner_mar.is_none() && feasible[0] {
        winner_mar = Some(0);
    }

    let pay_mar = match winner_mar {
        None => 0.0,
        Some(k) => {
            let display: f64 =
                prepared.tables.winning_delays(scenario, w, Some(k)).iter().sum();
            if k == 0 {
                display * bids[0]
            } else {
                let mut max_other = 0.0f64;
                for j in 0..n_mar {
                    if j != k && feasible[j] {
                        max_other = max_other.max(bids[j]);
                    }
                }
                display * alpha * max_other
            }
        }
    };

    (winner_av, pay_av, winner_mar, pay_mar)
}

#[test]
fn mechanism_matches_exhaustive_scan_on_small_markets() {
    let mut rng = test_rng(6);
    for case in 0..500 {
        let mut cfg = ScenarioConfig::default();
        cfg.counts = Counts {
            avs: rng.random_range(1..=5),
            mars: rng.random_range(1..=6),
            rsus: 1,
            tasks_per_av: rng.random_range(1..=3),
        };
        cfg.estimator_samples = 8;
        let scenario_seed = rng.random::<u64>();
        let scenario = sample_scenario(&cfg, scenario_seed).unwrap();
        let prepared =
            PreparedMarket::new(MechanismKind::Mtepvisa, &scenario, None).unwrap();
        let prices = prepared.truthful_prices();

        let (out, _) = prepared.clear(&prices, None, None);
        let (w, pay_av, k, pay_mar) = exhaustive_clear(&prepared, &prices);

        assert_eq!(out.winner_av, w, "case {case}: physical winner");
        assert_eq!(out.winner_mar, k, "case {case}: virtual winner");
        assert_close(out.pay_av, pay_av, "physical payment");
        assert_close(out.pay_mar, pay_mar, "virtual payment");
    }
}

#[test]
fn sampler_produces_valid_scenarios_over_many_seeds() {
    let cfg = ScenarioConfig::default();
    for seed in 0..10_000u64 {
        let s = sample_scenario(&cfg, seed).unwrap();
        let violations = validate_scenario(&s);
        assert!(violations.is_empty(), "seed {seed}: {violations:?}");
    }
}

#[test]
fn sampled_values_stay_in_their_supports() {
    let cfg = ScenarioConfig::default();
    for seed in 0..200u64 {
        let s = sample_scenario(&cfg, seed).unwrap();
        for av in &s.avs {
            assert!((0.1..=1.0).contains(&av.value));
            assert!((0.0..=1.0).contains(&av.tx_power_mw));
            for t in &av.tasks {
                assert!(t.size_bits >= 0.0 && t.size_bits <= 8e6);
                assert!(t.cycles_per_bit >= 0.0 && t.cycles_per_bit <= 125.0);
                assert!((0.9..=1.1).contains(&t.deadline_s));
            }
        }
        for row in &s.channel.gain {
            assert!(row.iter().all(|g| (0.0..=1.0).contains(g)));
        }
        for n in &s.channel.noise_mw {
            assert!(*n >= 1e-6);
        }
        for mar in &s.mars {
            assert!(mar.ar_size_bits >= 0.0 && mar.ar_size_bits <= 0.25 * 8e6);
            assert!(mar.ar_cycles_per_bit >= 0.0 && mar.ar_cycles_per_bit <= 125.0);
            for (i, h) in mar.hits.iter().enumerate() {
                assert!(*h <= s.avs[i].cache_size);
            }
        }
    }
}

#[test]
fn scaling_all_values_preserves_the_physical_winner() {
    // Truthful bids scaled by a common factor rescale the value rates and
    // hence the virtual estimates, so the argmax of the scores is invariant.
    let cfg = ScenarioConfig::default();
    for seed in [3u64, 17, 91] {
        let base = sample_scenario(&cfg, seed).unwrap();
        let mut scaled = base.clone();
        for av in &mut scaled.avs {
            av.value *= 3.0;
        }
        let out_a =
            run_mechanism(MechanismKind::Mtepvisa, &base, &simulator::truthful_av_bids(&base))
                .unwrap()
                .0;
        let out_b = run_mechanism(
            MechanismKind::Mtepvisa,
            &scaled,
            &simulator::truthful_av_bids(&scaled),
        )
        .unwrap()
        .0;
        assert_eq!(out_a.winner_av, out_b.winner_av, "seed {seed}");
    }
}
