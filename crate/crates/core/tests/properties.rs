use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use edgeinfer::oracle::random_radio_input;
use edgeinfer::physics::{
    floor_count, local_freq_from_rate, patterns_tx, power_from_rate, rate_from_power,
};
use edgeinfer::queueing::{LocalQueue, PatternRecord, RemoteQueue, VirtualQueue};
use edgeinfer::solver::{
    radio_objective, rate_range, schedule_cpu, solve_radio, solve_rate_for_level,
    stationarity_residual, CpuDemand,
};
use edgeinfer::Scenario;

fn log_range(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rate_power_round_trip(
        p in log_range(1e-4, 1.0),
        h in log_range(1e-14, 1e-6),
        b in log_range(1e5, 1e8),
        n0 in log_range(1e-21, 1e-19),
    ) {
        let r = rate_from_power(p, h, b, n0).unwrap();
        let back = power_from_rate(r, h, b, n0).unwrap();
        prop_assert!((back - p).abs() <= 1e-9 * p);
    }

    #[test]
    fn encoded_equals_transmitted_patterns(
        r in log_range(1e4, 1e9),
        n in 1_000u64..1_000_000,
        whole in 0u64..40,
        exact in any::<bool>(),
    ) {
        let sc = Scenario::reference();
        let (sys, dev) = (&sc.system, &sc.devices[0]);
        let tau_u = sys.uplink_time();
        let n = n as f64;
        // Half the cases sit exactly on a whole number of patterns.
        let r = if exact { whole as f64 * n / tau_u } else { r };
        let f = local_freq_from_rate(r, n, sys, dev).unwrap();
        let encoded = floor_count(sys.encode_time() * f / dev.encode_cycles);
        prop_assert_eq!(encoded, patterns_tx(r, n, tau_u));
        if exact {
            prop_assert_eq!(patterns_tx(r, n, tau_u), whole);
        }
    }

    #[test]
    fn residual_is_strictly_increasing(seed in any::<u64>(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let sc = Scenario::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_radio_input(&sc, &mut rng);
        let level = &input.profile.levels()[(seed % 9) as usize];
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assume!(hi - lo > 1e-6);
        let top = 2.0 * input.bandwidth * 40.0;
        let (r1, r2) = (lo * top, hi * top);
        prop_assert!(
            stationarity_residual(r1, level, &input) < stationarity_residual(r2, level, &input)
        );
    }

    #[test]
    fn objective_is_convex_in_rate(seed in any::<u64>(), t in 0.05..0.95f64) {
        let sc = Scenario::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_radio_input(&sc, &mut rng);
        let level = &input.profile.levels()[(seed % 9) as usize];
        let bounds = rate_range(level, &input);
        prop_assume!(bounds.feasible() && bounds.max > bounds.min);
        let r = bounds.min + t * (bounds.max - bounds.min);
        let d = 1e-3 * (bounds.max - bounds.min);
        let o = |x| radio_objective(level, x, &input);
        let second = o(r + d) - 2.0 * o(r) + o(r - d);
        let scale = o(r + d).abs() + 2.0 * o(r).abs() + o(r - d).abs();
        prop_assert!(second >= -1e-12 * scale, "second difference {second:e}");
    }

    #[test]
    fn rate_stays_within_bounds(seed in any::<u64>()) {
        let sc = Scenario::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_radio_input(&sc, &mut rng);
        for level in input.profile.levels() {
            let b = rate_range(level, &input);
            match solve_rate_for_level(level, &input) {
                Some(r) => prop_assert!(b.min <= r && r <= b.max),
                None => prop_assert!(!b.feasible()),
            }
        }
        let sol = solve_radio(&input);
        match sol.choice {
            None => prop_assert_eq!(sol.objective, 0.0),
            Some(_) => prop_assert!(sol.objective < 0.0),
        }
    }

    #[test]
    fn larger_v_never_raises_energy(seed in any::<u64>()) {
        let sc = Scenario::reference();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_radio_input(&sc, &mut rng);
        let mut heavier = input;
        heavier.penalty_weight *= 10.0;
        let energy = |s: edgeinfer::solver::RadioSolution| s.choice.map_or(0.0, |c| c.energy);
        let (e1, e10) = (energy(solve_radio(&input)), energy(solve_radio(&heavier)));
        prop_assert!(e10 <= e1 * (1.0 + 1e-9), "{e10:e} > {e1:e}");
    }

    #[test]
    fn cpu_allocation_is_feasible(
        backlogs in prop::collection::vec(0u64..300, 1..8),
        jc in log_range(1e6, 1e8),
        budget in log_range(1e8, 1e11),
    ) {
        let tau = 0.025;
        let demands: Vec<CpuDemand> = backlogs
            .iter()
            .map(|&backlog| CpuDemand { backlog, classify_cycles: jc })
            .collect();
        let f = schedule_cpu(&demands, budget, tau);
        prop_assert!(f.iter().sum::<f64>() <= budget * (1.0 + 1e-12));
        for (fk, d) in f.iter().zip(&demands) {
            prop_assert!(*fk >= 0.0 && *fk <= d.drain_freq(tau));
        }
    }

    #[test]
    fn queues_conserve_and_keep_fifo_order(
        steps in prop::collection::vec((0u64..6, 0u64..6, 0u64..6), 1..200),
    ) {
        let (mut local, mut remote) = (LocalQueue::default(), RemoteQueue::default());
        let (mut arrived, mut done) = (0u64, 0u64);
        let mut last_out = 0u64;
        for (t, &(a, sent, served)) in steps.iter().enumerate() {
            let start_local = local.backlog();
            let mut departed = local.update(sent, a, t as u64);
            prop_assert_eq!(departed.len() as u64, sent.min(start_local));
            for r in &mut departed {
                r.level = Some(0);
            }
            let start_remote = remote.backlog();
            let out = remote.update(served, departed);
            prop_assert_eq!(out.len() as u64, served.min(start_remote));
            for PatternRecord { arrival_slot, .. } in &out {
                prop_assert!(*arrival_slot >= last_out);
                last_out = *arrival_slot;
            }
            arrived += a;
            done += out.len() as u64;
            prop_assert_eq!(arrived, local.backlog() + remote.backlog() + done);
        }
    }

    #[test]
    fn virtual_queue_stays_non_negative(
        entropies in prop::collection::vec(prop::collection::vec(0.0..2.3f64, 0..5), 1..100),
        threshold in 0.0..1.0f64,
        step in 0.1..10.0f64,
    ) {
        let mut z = VirtualQueue::default();
        for batch in entropies {
            let before = z.value();
            let empty = batch.is_empty();
            z.update(batch, threshold, step);
            prop_assert!(z.value() >= 0.0);
            if empty {
                prop_assert_eq!(z.value(), before);
            }
        }
    }
}
