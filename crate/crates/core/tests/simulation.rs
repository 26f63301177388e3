use std::sync::Arc;

use edgeinfer::config::Scenario;
use edgeinfer::sim::{self, DeviceObservation, Simulator};
use edgeinfer::{EncodingLevel, EncodingProfile};

/// One device, one encoding level of 1e5 bits, 10 MHz of bandwidth, V = 1e3.
fn single_device() -> Scenario {
    let mut sc = Scenario::reference();
    sc.devices.truncate(1);
    sc.system.penalty_weight = 1e3;
    sc.system.horizon = 3;
    sc.system.warmup_slots = 0;
    let d = &mut sc.devices[0];
    d.profile = Arc::new(
        EncodingProfile::new(
            vec![EncodingLevel {
                level_id: 1,
                bits_per_pattern: 100_000,
                entropy: 0.5,
                accuracy: 0.7,
            }],
            10,
        )
        .unwrap(),
    );
    d.entropy_threshold = 0.6;
    d.bandwidth = 1e7;
    sc
}

#[test]
fn three_slot_hand_trace() {
    let sc = single_device();
    let obs = [DeviceObservation {
        gain: 1e-9,
        arrivals: 1,
    }];
    let mut sim = Simulator::new(sc.clone()).unwrap();

    // Slot 0: nothing queued, so nothing is sent; the arrival lands locally.
    let m0 = sim.step_with(&obs);
    let d0 = &m0.devices[0];
    assert_eq!((d0.local_backlog, d0.remote_backlog, d0.level), (0, 0, None));
    assert_eq!(d0.encode_energy + d0.tx_energy, 0.0);
    assert_eq!((sim.local_backlog(0), sim.remote_backlog(0)), (1, 0));

    // Slot 1: one pattern queued. The backlog cap pins the rate to exactly
    // one pattern, R = n / τ_u = 1e5 / 0.0125 = 8e6 bit/s, so
    //   f^l = τ_u R J^e / (τ_e n) = 5e5 / 0.0125 = 4e7 Hz
    //   E^e = τ_e κ f^3 = 0.0125 · 1e-27 · 6.4e22 = 8e-7 J
    //   p   = (N0 B / h)(2^{R/B} − 1) = 1.2589254117941673e-4 · (2^0.8 − 1) W
    //   E^u = τ_u p
    // with N0 = −174 dBm/Hz + 5 dB. The edge queue was empty, so no CPU.
    let m1 = sim.step_with(&obs);
    let d1 = &m1.devices[0];
    assert_eq!((d1.local_backlog, d1.remote_backlog, d1.level), (1, 0, Some(1)));
    assert!((d1.rate - 8e6).abs() < 1e-6);
    assert_eq!(d1.tx_patterns, 1);
    assert!((d1.local_freq - 4e7).abs() < 1e-6);
    assert!((d1.encode_energy - 8e-7).abs() < 1e-20);
    let p = 1.2589254117941673e-4 * (2f64.powf(0.8) - 1.0);
    assert!((d1.tx_power - p).abs() <= 1e-12 * p);
    assert!((d1.tx_energy - 0.0125 * p).abs() <= 1e-12 * 0.0125 * p);
    assert_eq!((d1.remote_freq, d1.classified), (0.0, 0));
    assert_eq!((sim.local_backlog(0), sim.remote_backlog(0)), (1, 1));

    // Slot 2: Q^u = Q^r, so sending only costs energy and the device idles.
    // The edge drains its single pattern: f^r = Q^r J^c / τ = 4e8 Hz.
    let m2 = sim.step_with(&obs);
    let d2 = &m2.devices[0];
    assert_eq!(m2.lyapunov, 1.0);
    assert_eq!((d2.local_backlog, d2.remote_backlog, d2.level), (1, 1, None));
    assert!((d2.remote_freq - 4e8).abs() < 1e-6);
    assert_eq!((d2.classify_capacity, d2.classified), (1, 1));
    assert_eq!(d2.classified_entropy_mean, Some(0.5));
    assert_eq!((sim.local_backlog(0), sim.remote_backlog(0)), (2, 0));
    // 0.5 < 0.6 keeps the virtual queue at zero.
    assert_eq!(sim.virtual_queue(0), 0.0);

    let s = &sim.summaries()[0];
    assert_eq!(s.classified, 1);
    // Arrived in slot 0, classified in slot 2.
    assert!((s.empirical_delay.unwrap() - 2.0 * 0.025).abs() < 1e-15);
    assert!((s.mean_energy - (8e-7 + 0.0125 * p) / 3.0).abs() < 1e-18);
}

#[test]
fn idle_slot_changes_nothing() {
    let mut sim = Simulator::new(Scenario::reference()).unwrap();
    let obs = vec![
        DeviceObservation {
            gain: 1e-9,
            arrivals: 0
        };
        6
    ];
    let m = sim.step_with(&obs);
    for d in &m.devices {
        assert_eq!(d.level, None);
        assert_eq!(d.encode_energy + d.tx_energy + d.remote_freq, 0.0);
    }
    for k in 0..6 {
        assert_eq!(
            (sim.local_backlog(k), sim.remote_backlog(k), sim.virtual_queue(k)),
            (0, 0, 0.0)
        );
    }
}

#[test]
fn patterns_are_conserved_every_slot() {
    let mut sc = Scenario::reference();
    for d in &mut sc.devices {
        d.arrival_rate = 4.0;
    }
    sc.set_seed(99);
    let mut sim = Simulator::new(sc).unwrap();
    for _ in 0..1000 {
        sim.step();
        for k in 0..6 {
            assert_eq!(
                sim.arrived_total(k),
                sim.local_backlog(k) + sim.remote_backlog(k) + sim.classified_total(k)
            );
        }
    }
}

#[test]
fn per_slot_constraints_hold() {
    let sc = Scenario::reference();
    let mut sim = Simulator::new(sc.clone()).unwrap();
    let tau_u = sc.system.uplink_time();
    for _ in 0..2000 {
        let m = sim.step();
        let total_cpu: f64 = m.devices.iter().map(|d| d.remote_freq).sum();
        assert!(total_cpu <= sc.system.mec_max_freq * (1.0 + 1e-12));
        for (d, cfg) in m.devices.iter().zip(&sc.devices) {
            assert!(d.remote_freq >= 0.0);
            match d.level {
                None => assert_eq!(d.rate, 0.0),
                Some(id) => {
                    let lvl = cfg.profile.levels().iter().find(|l| l.level_id == id).unwrap();
                    assert!(d.rate >= lvl.bits() / tau_u * (1.0 - 1e-12));
                    assert!(d.tx_power <= cfg.max_tx_power * (1.0 + 1e-9));
                    assert!(d.local_freq <= cfg.max_local_freq * (1.0 + 1e-9));
                    assert!(d.tx_patterns >= 1);
                }
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let mut sc = Scenario::reference();
    sc.system.horizon = 1500;
    sc.system.warmup_slots = 150;
    let (a, b) = (sim::run(&sc).unwrap(), sim::run(&sc).unwrap());
    assert_eq!(a.trace.len(), 1500);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.summaries, b.summaries);
    sc.set_seed(2);
    assert_ne!(sim::run(&sc).unwrap().trace, a.trace);
}

#[test]
fn overload_is_flagged() {
    let mut sc = Scenario::reference();
    for d in &mut sc.devices {
        d.arrival_rate *= 50.0;
    }
    let res = sim::run_summary(&sc).unwrap();
    for s in &res.summaries {
        assert!(s.local_stability.unwrap().is_drifting(), "device {}", s.device);
    }
}

#[test]
fn sweep_of_one_point_is_one_run() {
    let mut sc = Scenario::reference();
    sc.system.horizon = 1000;
    sc.system.warmup_slots = 100;
    let sw = sim::sweep(&sc, &[sc.system.penalty_weight]).unwrap();
    assert_eq!(sw.points.len(), 1);
    assert_eq!(sw.points[0].summaries, sim::run_summary(&sc).unwrap().summaries);
}

#[test]
fn sweep_is_order_and_thread_independent() {
    let mut sc = Scenario::reference();
    sc.system.horizon = 1000;
    sc.system.warmup_slots = 100;
    let grid = sim::log_grid(1e3, 1e6, 4);
    sc.sweep.parallel = true;
    let par = sim::sweep(&sc, &grid).unwrap();
    sc.sweep.parallel = false;
    let seq = sim::sweep(&sc, &grid).unwrap();
    assert_eq!(par, seq);
    assert!(par.points.iter().all(|p| p.seed == sc.system.rng_seed));

    sc.sweep.common_random_numbers = false;
    let indep = sim::sweep(&sc, &grid).unwrap();
    let seeds: std::collections::HashSet<_> = indep.points.iter().map(|p| p.seed).collect();
    assert_eq!(seeds.len(), grid.len());
}

#[test]
fn auto_grid_brackets_the_reference_scale() {
    let sc = Scenario::reference();
    let grid = sim::auto_v_grid(&sc).unwrap();
    assert_eq!(grid.len(), 12);
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
    assert!((grid[11] / grid[0] - 1e3).abs() < 1e-9);
    assert_eq!(grid, sim::auto_v_grid(&sc).unwrap());
}
