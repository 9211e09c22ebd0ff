use rackdm::addrmap::PagePolicy;
use rackdm::dram::{DramConfig, DramDevice};
use rackdm::engine::{run, SimConfig};
use rackdm::fabric::{path_latency_zero_load, FabricConfig, PacketKind};
use rackdm::gmm::PoolPolicy;
use rackdm::metrics::{epoch_of, histogram_bucket, Location};
use rackdm::trace::{generate_synthetic, merge_streams, wl_mix_presets, AccessKind, LlcMissRecord};
use rackdm::Ps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

fn single_bank() -> DramDevice {
    let cfg = DramConfig {
        channels: 1,
        banks: 1,
        queue_capacity: 1 << 20,
        ..DramConfig::local_default()
    };
    DramDevice::new(cfg, 1 << 30)
}

/// Poisson arrivals at utilisation 0.5 on one bank. Returns (arrival, start, done).
fn poisson_run(n: usize, seed: u64) -> Vec<(Ps, Ps, Ps)> {
    let mut dev = single_bank();
    let t = 46_000.0;
    let exp = Exp::new(0.5 / t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut now = 0.0f64;
    (0..n)
        .map(|_| {
            now += exp.sample(&mut rng);
            let at = Ps(now.round() as u64);
            let addr = rng.random_range(0..1u64 << 20) & !63;
            let s = dev.submit(addr, AccessKind::Read, at).unwrap();
            (at, s.start, s.done)
        })
        .collect()
}

#[test]
fn littles_law_on_single_bank() {
    let jobs = poisson_run(50_000, 11);
    let horizon = jobs.last().unwrap().2;
    let lambda = jobs.len() as f64 / horizon.0 as f64;
    let w = jobs.iter().map(|j| (j.2 - j.0).0 as f64).sum::<f64>() / jobs.len() as f64;

    // time-average number in system from an event sweep
    let mut events: Vec<(u64, i64)> = jobs.iter().flat_map(|j| [(j.0 .0, 1), (j.2 .0, -1)]).collect();
    events.sort();
    let (mut area, mut level, mut last) = (0f64, 0i64, 0u64);
    for (t, d) in events {
        area += level as f64 * (t - last) as f64;
        level += d;
        last = t;
    }
    let l = area / horizon.0 as f64;
    let rel = (l - lambda * w).abs() / l;
    assert!(rel < 0.10, "L={l:.4} lambda*W={:.4}", lambda * w);

    // M/D/1 mean sojourn: D + rho*D / (2(1-rho)) = 69ns
    let w_ns = w / 1000.0;
    assert!((w_ns - 69.0).abs() / 69.0 < 0.10, "W={w_ns:.2}ns");
}

#[test]
fn same_bank_completions_are_spaced() {
    let jobs = poisson_run(5_000, 3);
    for pair in jobs.windows(2) {
        assert!(pair[1].2 - pair[0].2 >= Ps::from_ns(46));
        assert!(pair[1].1 >= pair[1].0);
    }
}

fn remote_only_cfg() -> SimConfig {
    SimConfig {
        nodes: 1,
        pools: 1,
        local_bytes: 0,
        pool_bytes: 1 << 30,
        labels: vec!["x".into()],
        node_benchmark: vec![0],
        ..SimConfig::default()
    }
}

#[test]
fn zero_load_remote_latency_is_path_sum() {
    let cfg = remote_only_cfg();
    let trace = vec![LlcMissRecord {
        timestamp: 0,
        node_id: 0,
        thread_id: 0,
        vaddr: 0x1000,
        kind: AccessKind::Read,
    }];
    let report = run(&cfg, &trace).unwrap();
    let agg = report.overall();
    let f = FabricConfig::default();
    let expect = path_latency_zero_load(&f, PacketKind::Request)
        + Ps::from_ns(46)
        + path_latency_zero_load(&f, PacketKind::Response);
    assert_eq!(expect, Ps(216_720));
    assert_eq!(agg.remote_latency_sum_ps, expect.0 as u128);
}

fn desk_like(policy: PoolPolicy, seed: u64) -> (SimConfig, Vec<LlcMissRecord>) {
    let presets = wl_mix_presets();
    let streams = (0..4u32)
        .map(|n| generate_synthetic(&presets[n as usize], 2e-4, n, seed).unwrap())
        .collect();
    let trace = merge_streams(streams).unwrap();
    let cfg = SimConfig {
        nodes: 4,
        pools: 3,
        local_bytes: 4 << 20,
        pool_bytes: 1 << 30,
        chunk_bytes: 64 << 10,
        pool_policy: policy,
        seed,
        labels: presets.iter().map(|p| p.label.clone()).collect(),
        node_benchmark: vec![0, 1, 2, 3],
        keep_completions: true,
        epoch_cycles: 20_000,
        ..SimConfig::default()
    };
    (cfg, trace)
}

#[test]
fn cumulative_average_matches_brute_force() {
    let (cfg, trace) = desk_like(PoolPolicy::SmartIdle, 4);
    let report = run(&cfg, &trace).unwrap();
    let comps = report.completions.as_ref().unwrap();
    let epoch = Ps::from_cycles(cfg.epoch_cycles);
    for b in 0..report.labels.len() {
        let series = report.cumulative_series(b);
        for (k, got) in series.iter().enumerate() {
            let edge = Ps(epoch.0 * (k as u64 + 1));
            let mine: Vec<_> = comps
                .iter()
                .filter(|c| c.benchmark == b as u32 && c.completed_at <= edge)
                .collect();
            let want = (!mine.is_empty())
                .then(|| mine.iter().map(|c| c.latency.0 as u128).sum::<u128>() as f64 / mine.len() as f64 / 1000.0);
            match (got, want) {
                (Some(g), Some(w)) => assert!((g - w).abs() < 1e-9, "bench {b} epoch {k}: {g} vs {w}"),
                (None, None) => {}
                other => panic!("bench {b} epoch {k}: {other:?}"),
            }
        }
    }
    let ends: Vec<usize> = comps.iter().map(|c| epoch_of(c.completed_at, epoch)).collect();
    assert_eq!(report.variation.len(), ends.iter().max().unwrap() + 1);
}

#[test]
fn completions_add_up_and_histogram_partitions() {
    for policy in PoolPolicy::ALL {
        let (cfg, trace) = desk_like(policy, 9);
        let report = run(&cfg, &trace).unwrap();
        let comps = report.completions.as_ref().unwrap();
        assert_eq!(
            report.totals.injected,
            report.totals.completed + report.totals.oom_drops
        );
        assert_eq!(comps.len() as u64, report.totals.completed);
        let mut hist = [0u64; 5];
        for c in comps {
            assert_eq!(c.components.total(), c.latency);
            if c.location == Location::Remote {
                hist[histogram_bucket(c.latency.0 / 1000)] += 1;
            } else {
                assert_eq!(
                    c.components.remote_queue + c.components.remote_service + c.components.network,
                    Ps::ZERO
                );
            }
        }
        let agg = report.overall();
        assert_eq!(agg.histogram, hist);
        assert_eq!(hist.iter().sum::<u64>(), agg.remote_count);
    }
}

#[test]
fn identical_inputs_give_identical_reports() {
    for policy in PoolPolicy::ALL {
        let (cfg, trace) = desk_like(policy, 21);
        let a = run(&cfg, &trace).unwrap().summary_json();
        let b = run(&cfg, &trace).unwrap().summary_json();
        assert_eq!(a, b);
    }
}

#[test]
fn local_first_then_spill() {
    let presets = wl_mix_presets();
    let trace = generate_synthetic(&presets[2], 1e-4, 0, 1).unwrap();
    let pages: std::collections::BTreeSet<u64> = trace.iter().map(|r| r.page()).collect();
    let cfg = SimConfig {
        nodes: 1,
        pools: 2,
        local_bytes: 16 * 4096,
        pool_bytes: 1 << 30,
        chunk_bytes: 64 << 10,
        page_policy: PagePolicy::LocalFirst,
        labels: vec!["fft".into()],
        node_benchmark: vec![0],
        ..SimConfig::default()
    };
    let report = run(&cfg, &trace).unwrap();
    let remote_pages = pages.len() as u64 - 16;
    assert_eq!(report.totals.chunk_grants, remote_pages.div_ceil(16));
    assert!(report.totals.remote > 0 && report.totals.local > 0);
}
