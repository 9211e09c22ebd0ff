//! Experiment orchestration: trace construction, single runs and policy sweeps.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::addrmap::{PagePolicy, PAGE_TABLE_HEADER};
use crate::config::RunConfig;
use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::gmm::PoolPolicy;
use crate::metrics::{MetricsReport, RunMeta};
use crate::trace::{find_preset, generate_synthetic, merge_streams, read_trace, LlcMissRecord};

/// Loads the configured trace, or generates one stream per node from the
/// presets (in parallel) and merges them.
pub fn build_trace(cfg: &RunConfig) -> Result<Vec<LlcMissRecord>> {
    cfg.validate()?;
    if let Some(path) = &cfg.trace {
        if !path.exists() {
            return Err(Error::Invalid(format!("trace file {} does not exist", path.display())));
        }
        return read_trace(path);
    }
    let sim = cfg.sim_config()?;
    let presets: Vec<_> = sim
        .labels
        .iter()
        .map(|l| find_preset(&cfg.presets, l).expect("validated workload label"))
        .collect();
    let streams = sim
        .node_benchmark
        .par_iter()
        .enumerate()
        .map(|(node, &b)| generate_synthetic(presets[b as usize], cfg.scale, node as u32, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    merge_streams(streams)
}

/// Outcome of one (page policy, pool policy) cell.
#[derive(Debug)]
pub struct CellResult {
    pub page_policy: PagePolicy,
    pub pool_policy: PoolPolicy,
    pub dir: PathBuf,
    pub report: MetricsReport,
}

/// Runs one simulation and writes its report, config echo and optional logs to `dir`.
pub fn run_cell(cfg: &RunConfig, trace: &[LlcMissRecord], dir: &Path) -> Result<MetricsReport> {
    let sim_cfg = cfg.sim_config()?;
    let mut sim = Simulation::new(&sim_cfg, trace)?;
    while sim.step().is_some() {}

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write_file = |name: &str, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))
    };
    if cfg.log_packets {
        write_file("packets.csv", &|w| sim.write_packet_log(w))?;
        write_file("page_table.csv", &|w| {
            writeln!(w, "{PAGE_TABLE_HEADER}")?;
            sim.mmus().iter().try_for_each(|m| m.dump_csv(w))
        })?;
    }
    let mut report = sim.finish();
    report.meta = RunMeta {
        config_hash: cfg.hash(),
        config: cfg.entries(),
        ..report.meta
    };
    report.export(dir)?;
    write_file("config.txt", &|w| w.write_all(cfg.echo().as_bytes()))?;
    Ok(report)
}

/// Runs every (page policy, pool policy) combination on the same trace,
/// one subdirectory `<page>_<pool>` per cell. Cells run in parallel and are
/// returned in input order.
pub fn sweep(
    cfg: &RunConfig,
    trace: &[LlcMissRecord],
    page_policies: &[PagePolicy],
    pool_policies: &[PoolPolicy],
) -> Result<Vec<CellResult>> {
    let cells: Vec<(PagePolicy, PoolPolicy)> = page_policies
        .iter()
        .flat_map(|&p| pool_policies.iter().map(move |&q| (p, q)))
        .collect();
    cells
        .par_iter()
        .map(|&(page_policy, pool_policy)| {
            let cell_cfg = RunConfig {
                page_policy,
                pool_policy,
                ..cfg.clone()
            };
            let dir = cfg
                .out_dir
                .join(format!("{}_{}", page_policy.name(), pool_policy.name()));
            let report = run_cell(&cell_cfg, trace, &dir)?;
            Ok(CellResult {
                page_policy,
                pool_policy,
                dir,
                report,
            })
        })
        .collect()
}

/// Fixed-width table with one row per cell.
pub fn comparison_table(cells: &[CellResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<12} {:>10} {:>10} {:>10} {:>12}",
        "page", "pool", "avg_ns", "remote_ns", "tail>=1us", "variation"
    );
    for c in cells {
        let o = c.report.overall();
        let sum = c.report.summary();
        let _ = writeln!(
            s,
            "{:<12} {:<12} {:>10.1} {:>10.1} {:>9.3}% {:>12.1}",
            c.page_policy.name(),
            c.pool_policy.name(),
            sum.overall.avg_latency_ns,
            sum.overall.remote_avg_latency_ns,
            o.tail_fraction(1000) * 100.0,
            c.report.mean_variation()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut cfg = crate::config::desk_profile();
        cfg.nodes = 4;
        cfg.pools = 2;
        cfg.workloads = vec![("fft".into(), 2), ("fmm".into(), 2)];
        cfg.scale = 1e-4;
        cfg
    }

    #[test]
    fn generated_trace_is_merged_and_deterministic() {
        let cfg = tiny();
        let a = build_trace(&cfg).unwrap();
        let b = build_trace(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let nodes: std::collections::BTreeSet<u32> = a.iter().map(|r| r.node_id).collect();
        assert_eq!(nodes.len(), 4);
    }

    #[test]
    fn missing_trace_fails_early() {
        let mut cfg = tiny();
        cfg.trace = Some(PathBuf::from("/nonexistent/trace.csv"));
        assert!(build_trace(&cfg).is_err());
    }

    #[test]
    fn sweep_writes_one_dir_per_cell() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = tiny();
        cfg.out_dir = tmp.path().to_path_buf();
        let trace = build_trace(&cfg).unwrap();
        let cells = sweep(
            &cfg,
            &trace,
            &PagePolicy::ALL,
            &[PoolPolicy::RoundRobin, PoolPolicy::SmartIdle],
        )
        .unwrap();
        assert_eq!(cells.len(), 4);
        for c in &cells {
            assert!(c.dir.join("summary.json").exists());
            assert!(c.dir.join("config.txt").exists());
        }
        let table = comparison_table(&cells);
        assert_eq!(table.lines().count(), 5);

        // a cell run on its own matches the same cell inside the sweep
        let alone_dir = tmp.path().join("alone");
        let cell_cfg = RunConfig {
            page_policy: cells[1].page_policy,
            pool_policy: cells[1].pool_policy,
            ..cfg.clone()
        };
        let alone = run_cell(&cell_cfg, &trace, &alone_dir).unwrap();
        assert_eq!(alone.summary_json(), cells[1].report.summary_json());
    }
}
