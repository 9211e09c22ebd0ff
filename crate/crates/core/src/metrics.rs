//! Per-access completion aggregation and export. Sums are kept as exact
//! integer picoseconds; division happens only when a report is rendered.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Ps;

pub const SCHEMA_VERSION: u32 = 1;

/// Remote latency histogram edges in nanoseconds; the last bucket is open.
pub const BUCKET_EDGES_NS: [u64; 4] = [200, 500, 1000, 2000];
pub const BUCKETS: usize = BUCKET_EDGES_NS.len() + 1;

pub fn histogram_bucket(latency_ns: u64) -> usize {
    BUCKET_EDGES_NS.iter().take_while(|&&edge| latency_ns >= edge).count()
}

fn bucket_index_of(latency: Ps) -> usize {
    // Compare in picoseconds so that 999.9ns stays below the 1000ns edge.
    BUCKET_EDGES_NS
        .iter()
        .take_while(|&&edge| latency >= Ps::from_ns(edge))
        .count()
}

pub fn pool_access_variation(counts: &[u64]) -> u64 {
    match (counts.iter().max(), counts.iter().min()) {
        (Some(max), Some(min)) => max - min,
        _ => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Local,
    Remote,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub local: Ps,
    /// Wait for the chunk grant that maps the page.
    pub grant: Ps,
    pub network: Ps,
    pub remote_queue: Ps,
    pub remote_service: Ps,
}

impl Components {
    pub fn total(&self) -> Ps {
        self.local + self.grant + self.network + self.remote_queue + self.remote_service
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub node_id: u32,
    pub benchmark: u32,
    pub location: Location,
    pub latency: Ps,
    pub components: Components,
    pub completed_at: Ps,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkAgg {
    pub count: u64,
    pub latency_sum_ps: u128,
    pub remote_count: u64,
    pub remote_latency_sum_ps: u128,
    /// Time spent at the pool: queueing plus service.
    pub remote_memory_sum_ps: u128,
    pub local_sum_ps: u128,
    pub grant_sum_ps: u128,
    pub network_sum_ps: u128,
    pub remote_queue_sum_ps: u128,
    pub remote_service_sum_ps: u128,
    pub histogram: [u64; BUCKETS],
    /// Per-epoch (count, latency sum, remote count, remote latency sum, remote memory sum); not cumulative.
    pub epochs: Vec<[u128; 5]>,
}

fn avg_ns(sum_ps: u128, count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum_ps as f64 / count as f64 / 1_000.0
    }
}

fn fraction(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

impl BenchmarkAgg {
    /// Fraction of remote accesses with latency at or above `edge_ns` (a histogram edge).
    pub fn tail_fraction(&self, edge_ns: u64) -> f64 {
        let first = BUCKET_EDGES_NS
            .iter()
            .position(|&e| e == edge_ns)
            .expect("tail threshold must be a histogram edge")
            + 1;
        fraction(self.histogram[first..].iter().sum(), self.remote_count)
    }

    fn merge(&mut self, other: &BenchmarkAgg) {
        self.count += other.count;
        self.latency_sum_ps += other.latency_sum_ps;
        self.remote_count += other.remote_count;
        self.remote_latency_sum_ps += other.remote_latency_sum_ps;
        self.remote_memory_sum_ps += other.remote_memory_sum_ps;
        self.local_sum_ps += other.local_sum_ps;
        self.grant_sum_ps += other.grant_sum_ps;
        self.network_sum_ps += other.network_sum_ps;
        self.remote_queue_sum_ps += other.remote_queue_sum_ps;
        self.remote_service_sum_ps += other.remote_service_sum_ps;
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
    }
}

/// Streaming collector owned by the engine during a run.
#[derive(Clone, Debug)]
pub struct MetricsCollector {
    epoch: Ps,
    labels: Vec<String>,
    benches: Vec<BenchmarkAgg>,
    pool_epochs: Vec<Vec<u64>>,
    pools: usize,
    completions: Option<Vec<CompletionRecord>>,
}

/// Epoch `k` covers `(k*E, (k+1)*E]`, with time zero in epoch 0.
pub fn epoch_of(t: Ps, epoch: Ps) -> usize {
    (t.0.saturating_sub(1) / epoch.0) as usize
}

impl MetricsCollector {
    pub fn new(labels: Vec<String>, pools: usize, epoch: Ps) -> Self {
        assert!(epoch > Ps::ZERO, "epoch length must be positive");
        Self {
            epoch,
            benches: vec![BenchmarkAgg::default(); labels.len()],
            labels,
            pool_epochs: Vec::new(),
            pools,
            completions: None,
        }
    }

    pub fn keep_completions(&mut self) {
        self.completions = Some(Vec::new());
    }

    pub fn record_completion(&mut self, rec: CompletionRecord) {
        let c = rec.components;
        assert_eq!(
            c.total(),
            rec.latency,
            "latency breakdown {c:?} does not add up to {}",
            rec.latency
        );
        if rec.location == Location::Local {
            assert!(
                c.grant == Ps::ZERO
                    && c.network == Ps::ZERO
                    && c.remote_queue == Ps::ZERO
                    && c.remote_service == Ps::ZERO,
                "local access with remote components"
            );
        }
        let b = &mut self.benches[rec.benchmark as usize];
        b.count += 1;
        b.latency_sum_ps += rec.latency.0 as u128;
        b.local_sum_ps += c.local.0 as u128;
        b.grant_sum_ps += c.grant.0 as u128;
        b.network_sum_ps += c.network.0 as u128;
        b.remote_queue_sum_ps += c.remote_queue.0 as u128;
        b.remote_service_sum_ps += c.remote_service.0 as u128;
        let e = epoch_of(rec.completed_at, self.epoch);
        if b.epochs.len() <= e {
            b.epochs.resize(e + 1, [0; 5]);
        }
        b.epochs[e][0] += 1;
        b.epochs[e][1] += rec.latency.0 as u128;
        if rec.location == Location::Remote {
            let memory = (c.remote_queue + c.remote_service).0 as u128;
            b.remote_count += 1;
            b.remote_latency_sum_ps += rec.latency.0 as u128;
            b.remote_memory_sum_ps += memory;
            b.histogram[bucket_index_of(rec.latency)] += 1;
            b.epochs[e][2] += 1;
            b.epochs[e][3] += rec.latency.0 as u128;
            b.epochs[e][4] += memory;
        }
        if let Some(log) = &mut self.completions {
            log.push(rec);
        }
    }

    /// Counts a request arriving at a pool, for the per-epoch variation series.
    pub fn record_pool_arrival(&mut self, pool: u32, at: Ps) {
        let e = epoch_of(at, self.epoch);
        if self.pool_epochs.len() <= e {
            self.pool_epochs.resize(e + 1, vec![0; self.pools]);
        }
        self.pool_epochs[e][pool as usize] += 1;
    }

    pub fn finish(mut self, sim_end: Ps) -> MetricsReport {
        let epochs = sim_end.0.div_ceil(self.epoch.0) as usize;
        for b in &mut self.benches {
            b.epochs.resize(epochs, [0; 5]);
        }
        self.pool_epochs.resize(epochs, vec![0; self.pools]);
        let variation = self.pool_epochs.iter().map(|c| pool_access_variation(c)).collect();
        MetricsReport {
            meta: RunMeta::default(),
            epoch: self.epoch,
            sim_end,
            labels: self.labels,
            benchmarks: self.benches,
            pool_epoch_accesses: self.pool_epochs,
            variation,
            totals: Totals::default(),
            pools: Vec::new(),
            grants: Vec::new(),
            completions: self.completions,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub page_policy: String,
    pub pool_policy: String,
    pub seed: u64,
    pub config_hash: String,
    /// Effective configuration as ordered key/value pairs.
    pub config: Vec<(String, String)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub injected: u64,
    pub completed: u64,
    pub oom_drops: u64,
    pub local: u64,
    pub remote: u64,
    pub page_faults: u64,
    pub chunk_grants: u64,
    pub events: u64,
    pub packets: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub pool: u32,
    pub allocated_bytes: u64,
    pub grants: u64,
    pub lifetime_accesses: u64,
    pub dram_served: u64,
    pub dram_max_queue_depth: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantRow {
    pub grant_index: u64,
    pub policy: String,
    pub pool: u32,
    pub node: u32,
    pub sim_time: Ps,
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub meta: RunMeta,
    pub epoch: Ps,
    pub sim_end: Ps,
    pub labels: Vec<String>,
    pub benchmarks: Vec<BenchmarkAgg>,
    pub pool_epoch_accesses: Vec<Vec<u64>>,
    pub variation: Vec<u64>,
    pub totals: Totals,
    pub pools: Vec<PoolSummary>,
    pub grants: Vec<GrantRow>,
    pub completions: Option<Vec<CompletionRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub local_ns: f64,
    pub grant_ns: f64,
    pub network_ns: f64,
    pub remote_queue_ns: f64,
    pub remote_service_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub accesses: u64,
    pub remote_accesses: u64,
    pub avg_latency_ns: f64,
    pub remote_avg_latency_ns: f64,
    pub remote_memory_avg_ns: f64,
    pub breakdown: Breakdown,
    pub histogram: [u64; BUCKETS],
    pub tail_fraction_500ns: f64,
    pub tail_fraction_1000ns: f64,
    pub tail_fraction_2000ns: f64,
}

impl LatencySummary {
    fn from_agg(b: &BenchmarkAgg) -> Self {
        Self {
            accesses: b.count,
            remote_accesses: b.remote_count,
            avg_latency_ns: avg_ns(b.latency_sum_ps, b.count),
            remote_avg_latency_ns: avg_ns(b.remote_latency_sum_ps, b.remote_count),
            remote_memory_avg_ns: avg_ns(b.remote_memory_sum_ps, b.remote_count),
            breakdown: Breakdown {
                local_ns: avg_ns(b.local_sum_ps, b.count),
                grant_ns: avg_ns(b.grant_sum_ps, b.count),
                network_ns: avg_ns(b.network_sum_ps, b.count),
                remote_queue_ns: avg_ns(b.remote_queue_sum_ps, b.count),
                remote_service_ns: avg_ns(b.remote_service_sum_ps, b.count),
            },
            histogram: b.histogram,
            tail_fraction_500ns: b.tail_fraction(500),
            tail_fraction_1000ns: b.tail_fraction(1000),
            tail_fraction_2000ns: b.tail_fraction(2000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub label: String,
    #[serde(flatten)]
    pub latency: LatencySummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub meta: RunMeta,
    pub sim_time_ns: f64,
    pub epoch_ns: f64,
    pub epochs: usize,
    pub totals: Totals,
    pub overall: LatencySummary,
    pub mean_pool_variation: f64,
    pub max_pool_variation: u64,
    pub benchmarks: Vec<BenchmarkSummary>,
    pub pools: Vec<PoolSummary>,
}

impl MetricsReport {
    pub fn overall(&self) -> BenchmarkAgg {
        let mut all = BenchmarkAgg::default();
        for b in &self.benchmarks {
            all.merge(b);
        }
        all
    }

    pub fn mean_variation(&self) -> f64 {
        if self.variation.is_empty() {
            0.0
        } else {
            self.variation.iter().sum::<u64>() as f64 / self.variation.len() as f64
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            schema_version: SCHEMA_VERSION,
            meta: self.meta.clone(),
            sim_time_ns: self.sim_end.as_ns_f64(),
            epoch_ns: self.epoch.as_ns_f64(),
            epochs: self.variation.len(),
            totals: self.totals.clone(),
            overall: LatencySummary::from_agg(&self.overall()),
            mean_pool_variation: self.mean_variation(),
            max_pool_variation: self.variation.iter().copied().max().unwrap_or(0),
            benchmarks: self
                .labels
                .iter()
                .zip(&self.benchmarks)
                .map(|(label, b)| BenchmarkSummary {
                    label: label.clone(),
                    latency: LatencySummary::from_agg(b),
                })
                .collect(),
            pools: self.pools.clone(),
        }
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Cumulative average latency at the end of each epoch, per benchmark.
    /// `None` until the benchmark has completed an access.
    pub fn cumulative_series(&self, bench: usize) -> Vec<Option<f64>> {
        let mut count = 0u128;
        let mut sum = 0u128;
        self.benchmarks[bench]
            .epochs
            .iter()
            .map(|e| {
                count += e[0];
                sum += e[1];
                (count > 0).then(|| sum as f64 / count as f64 / 1_000.0)
            })
            .collect()
    }

    fn epoch_end_ns(&self, k: usize) -> f64 {
        Ps(self.epoch.0 * (k as u64 + 1)).as_ns_f64()
    }

    /// Writes the JSON summary and one CSV per series into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        write("summary.json", self.summary_json())?;

        let mut s = String::from("epoch_index,sim_time_ns,benchmark,cumulative_avg_ns\n");
        for (bi, label) in self.labels.iter().enumerate() {
            for (k, avg) in self.cumulative_series(bi).into_iter().enumerate() {
                if let Some(avg) = avg {
                    s += &format!("{k},{:.3},{label},{avg:.3}\n", self.epoch_end_ns(k));
                }
            }
        }
        write("epoch_series.csv", s)?;

        let mut s = String::from(
            "epoch_index,sim_time_ns,benchmark,cumulative_remote_avg_ns,cumulative_remote_memory_avg_ns\n",
        );
        for (label, b) in self.labels.iter().zip(&self.benchmarks) {
            let (mut n, mut lat, mut mem) = (0u128, 0u128, 0u128);
            for (k, e) in b.epochs.iter().enumerate() {
                n += e[2];
                lat += e[3];
                mem += e[4];
                if n > 0 {
                    let nf = n as f64 * 1_000.0;
                    s += &format!(
                        "{k},{:.3},{label},{:.3},{:.3}\n",
                        self.epoch_end_ns(k),
                        lat as f64 / nf,
                        mem as f64 / nf
                    );
                }
            }
        }
        write("remote_epoch_series.csv", s)?;

        let mut s = String::from("benchmark,bucket_lo_ns,bucket_hi_ns,count\n");
        for (label, b) in self.labels.iter().zip(&self.benchmarks) {
            for (i, count) in b.histogram.iter().enumerate() {
                let lo = if i == 0 { 0 } else { BUCKET_EDGES_NS[i - 1] };
                let hi = BUCKET_EDGES_NS
                    .get(i)
                    .map(|e| e.to_string())
                    .unwrap_or_else(|| "inf".into());
                s += &format!("{label},{lo},{hi},{count}\n");
            }
        }
        write("histogram.csv", s)?;

        let mut s = String::from(
            "benchmark,accesses,avg_latency_ns,local_ns,grant_ns,network_ns,remote_queue_ns,remote_service_ns\n",
        );
        for (label, b) in self.labels.iter().zip(&self.benchmarks) {
            let l = LatencySummary::from_agg(b);
            s += &format!(
                "{label},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}\n",
                b.count,
                l.avg_latency_ns,
                l.breakdown.local_ns,
                l.breakdown.grant_ns,
                l.breakdown.network_ns,
                l.breakdown.remote_queue_ns,
                l.breakdown.remote_service_ns
            );
        }
        write("breakdown.csv", s)?;

        let mut s = String::from("epoch_index,sim_time_ns,variation\n");
        for (k, v) in self.variation.iter().enumerate() {
            s += &format!("{k},{:.3},{v}\n", self.epoch_end_ns(k));
        }
        write("variation.csv", s)?;

        let mut s = String::from("epoch_index,pool,accesses\n");
        for (k, counts) in self.pool_epoch_accesses.iter().enumerate() {
            for (p, c) in counts.iter().enumerate() {
                s += &format!("{k},{p},{c}\n");
            }
        }
        write("pool_accesses.csv", s)?;

        let mut s = String::from("grant_index,policy,pool,node,sim_time\n");
        for g in &self.grants {
            s += &format!(
                "{},{},{},{},{:.3}\n",
                g.grant_index,
                g.policy,
                g.pool,
                g.node,
                g.sim_time.as_ns_f64()
            );
        }
        write("grants.csv", s)?;

        let mut s = String::from("pool,allocated_bytes,grants,lifetime_accesses,dram_served,dram_max_queue_depth\n");
        for p in &self.pools {
            s += &format!(
                "{},{},{},{},{},{}\n",
                p.pool, p.allocated_bytes, p.grants, p.lifetime_accesses, p.dram_served, p.dram_max_queue_depth
            );
        }
        write("pools.csv", s)?;

        if let Some(log) = &self.completions {
            let path = dir.join("completions.csv");
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = std::io::BufWriter::new(file);
            let mut dump = || -> std::io::Result<()> {
                writeln!(w, "node,benchmark,location,latency_ps,local_ps,grant_ps,network_ps,remote_queue_ps,remote_service_ps,completed_at_ps")?;
                for r in log {
                    let c = r.components;
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{},{},{}",
                        r.node_id,
                        self.labels[r.benchmark as usize],
                        if r.location == Location::Local {
                            "local"
                        } else {
                            "remote"
                        },
                        r.latency.0,
                        c.local.0,
                        c.grant.0,
                        c.network.0,
                        c.remote_queue.0,
                        c.remote_service.0,
                        r.completed_at.0
                    )?;
                }
                w.flush()
            };
            dump().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn remote(latency_ns: u64, at_ns: u64) -> CompletionRecord {
        let latency = Ps::from_ns(latency_ns);
        CompletionRecord {
            node_id: 0,
            benchmark: 0,
            location: Location::Remote,
            latency,
            components: Components {
                network: latency - Ps::from_ns(46),
                remote_service: Ps::from_ns(46),
                ..Components::default()
            },
            completed_at: Ps::from_ns(at_ns),
        }
    }

    fn local(latency_ns: u64, at_ns: u64) -> CompletionRecord {
        let latency = Ps::from_ns(latency_ns);
        CompletionRecord {
            node_id: 0,
            benchmark: 0,
            location: Location::Local,
            latency,
            components: Components {
                local: latency,
                ..Components::default()
            },
            completed_at: Ps::from_ns(at_ns),
        }
    }

    fn collector() -> MetricsCollector {
        MetricsCollector::new(vec!["lbm".into()], 3, Ps::from_ns(1000))
    }

    #[test]
    fn buckets() {
        assert_eq!(histogram_bucket(999), 2);
        assert_eq!(histogram_bucket(1000), 3);
        assert_eq!(histogram_bucket(0), 0);
        assert_eq!(histogram_bucket(10_000), BUCKETS - 1);
        assert_eq!(bucket_index_of(Ps(999_999)), 2);
    }

    #[test]
    fn variation_is_max_minus_min() {
        assert_eq!(pool_access_variation(&[100, 250, 180]), 150);
        assert_eq!(pool_access_variation(&[7, 7, 7]), 0);
        assert_eq!(pool_access_variation(&[0, 500]), 500);
        assert_eq!(pool_access_variation(&[]), 0);
    }

    #[test]
    fn averages() {
        let mut m = collector();
        m.record_completion(local(100, 10));
        let r = m.clone().finish(Ps::from_ns(10));
        assert_eq!(r.cumulative_series(0), vec![Some(100.0)]);
        m.record_completion(local(300, 20));
        let r = m.finish(Ps::from_ns(20));
        assert_eq!(r.summary().overall.avg_latency_ns, 200.0);
        assert_eq!(r.benchmarks[0].histogram, [0; BUCKETS]);
    }

    #[test]
    fn histogram_partitions_remote_accesses() {
        let mut m = collector();
        for (lat, at) in [(216, 1), (999, 2), (1000, 3), (5000, 2500)] {
            m.record_completion(remote(lat, at));
        }
        m.record_completion(local(46, 4));
        let r = m.finish(Ps::from_ns(2500));
        let b = &r.benchmarks[0];
        assert_eq!(b.histogram.iter().sum::<u64>(), b.remote_count);
        assert_eq!(b.tail_fraction(1000), 0.5);
        assert_eq!(r.variation.len(), 3);
    }

    #[test]
    fn epoch_boundaries_are_inclusive() {
        assert_eq!(epoch_of(Ps::ZERO, Ps(10)), 0);
        assert_eq!(epoch_of(Ps(10), Ps(10)), 0);
        assert_eq!(epoch_of(Ps(11), Ps(10)), 1);
    }

    #[test]
    #[should_panic(expected = "does not add up")]
    fn inconsistent_breakdown_aborts() {
        let mut rec = remote(300, 1);
        rec.components.network = Ps::ZERO;
        collector().record_completion(rec);
    }

    #[test]
    fn empty_export_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = collector().finish(Ps::ZERO);
        r.export(dir.path()).unwrap();
        let series = fs::read_to_string(dir.path().join("epoch_series.csv")).unwrap();
        assert_eq!(series, "epoch_index,sim_time_ns,benchmark,cumulative_avg_ns\n");
        let var = fs::read_to_string(dir.path().join("variation.csv")).unwrap();
        assert_eq!(var.lines().count(), 1);
    }

    #[test]
    fn export_schemas_and_reexport() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut m = collector();
        m.record_completion(remote(300, 500));
        m.record_pool_arrival(1, Ps::from_ns(400));
        let r = m.finish(Ps::from_ns(1500));
        r.export(a.path()).unwrap();
        r.export(b.path()).unwrap();
        let series = fs::read_to_string(a.path().join("epoch_series.csv")).unwrap();
        assert_eq!(series.lines().nth(1), Some("0,1000.000,lbm,300.000"));
        let hist = fs::read_to_string(a.path().join("histogram.csv")).unwrap();
        assert_eq!(hist.lines().count(), 1 + BUCKETS);
        for f in ["summary.json", "epoch_series.csv", "histogram.csv", "variation.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
        assert_eq!(r.variation, vec![1, 0]);
    }
}
