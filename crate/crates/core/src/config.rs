//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Unset keys keep their
//! defaults, which describe the full-size rack. Sizes accept `B`, `KB`, `MB`,
//! `GB` and `TB` suffixes (powers of 1024); durations accept `ps`, `ns` and
//! `us` (bare numbers are nanoseconds).
//!
//! Workload presets are edited with `preset.<label>.<field>`; naming a new
//! label creates a preset that must then be filled in. Nodes are assigned to
//! benchmarks with `workloads = lbm:2, fft:6` (consecutive node blocks) or
//! `workloads = lbm, fft` (equal split).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::addrmap::PagePolicy;
use crate::dram::DramConfig;
use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::fabric::FabricConfig;
use crate::frontend::{CacheConfig, LevelConfig, TlbConfig};
use crate::gmm::PoolPolicy;
use crate::time::Ps;
use crate::trace::{wl_mix_presets, LocalityProfile, WorkloadPreset};

const KB: u64 = 1 << 10;
const MB: u64 = 1 << 20;
const GB: u64 = 1 << 30;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub nodes: u32,
    pub pools: u32,
    pub local_bytes: u64,
    pub pool_bytes: u64,
    pub chunk_bytes: u64,
    pub page_policy: PagePolicy,
    pub pool_policy: PoolPolicy,
    pub seed: u64,
    pub epoch_cycles: u64,
    pub max_outstanding: Option<u32>,
    pub grant_latency: Ps,
    pub fabric: FabricConfig,
    pub local_dram: DramConfig,
    pub pool_dram: DramConfig,
    pub cache: CacheConfig,
    pub presets: Vec<WorkloadPreset>,
    /// `(benchmark label, node count)` in node order.
    pub workloads: Vec<(String, u32)>,
    /// Replay this trace instead of generating one from the presets.
    pub trace: Option<PathBuf>,
    /// Fraction of each preset's access count and footprint to generate.
    pub scale: f64,
    pub out_dir: PathBuf,
    pub dump_completions: bool,
    pub log_packets: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let presets = wl_mix_presets();
        let per = sim.nodes / presets.len() as u32;
        Self {
            nodes: sim.nodes,
            pools: sim.pools,
            local_bytes: sim.local_bytes,
            pool_bytes: sim.pool_bytes,
            chunk_bytes: sim.chunk_bytes,
            page_policy: sim.page_policy,
            pool_policy: sim.pool_policy,
            seed: sim.seed,
            epoch_cycles: sim.epoch_cycles,
            max_outstanding: sim.max_outstanding,
            grant_latency: sim.grant_latency,
            fabric: sim.fabric,
            local_dram: sim.local_dram,
            pool_dram: sim.pool_dram,
            cache: CacheConfig::default(),
            workloads: presets.iter().map(|p| (p.label.clone(), per)).collect(),
            presets,
            trace: None,
            scale: 1e-3,
            out_dir: PathBuf::from("results"),
            dump_completions: false,
            log_packets: false,
        }
    }
}

/// Desk-scale profile: 8 nodes and 4 pools running WL-Mix at 1/1000 scale.
///
/// Chunks are 256KB instead of 4MB so that the scaled footprints (a few MB per
/// node) still span many grants. Miss gaps are shortened so the four pools
/// run close to their link bandwidth.
pub fn desk_profile() -> RunConfig {
    let mut cfg = RunConfig {
        nodes: 8,
        pools: 4,
        local_bytes: 16 * MB,
        pool_bytes: 2 * GB,
        chunk_bytes: 256 * KB,
        workloads: wl_mix_presets().iter().map(|p| (p.label.clone(), 2)).collect(),
        out_dir: PathBuf::from("results/desk"),
        ..RunConfig::default()
    };
    // denser, uniformly spread traffic so eight nodes load four pools
    for p in &mut cfg.presets {
        p.mean_gap_cycles = (p.mean_gap_cycles * 37.6).round() / 100.0;
        p.locality.sequential_fraction = 0.0;
        p.locality.hot_set_fraction = 1.0;
    }
    cfg
}

fn parse_size(v: &str) -> Result<u64, String> {
    let t = v.trim();
    let split = t.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let mult = match unit.trim().to_ascii_uppercase().as_str() {
        "" | "B" => 1,
        "K" | "KB" | "KIB" => KB,
        "M" | "MB" | "MIB" => MB,
        "G" | "GB" | "GIB" => GB,
        "T" | "TB" | "TIB" => GB * KB,
        other => return Err(format!("unknown size unit `{other}`")),
    };
    let num = num.trim();
    if let Ok(n) = num.parse::<u64>() {
        return n.checked_mul(mult).ok_or_else(|| "size overflows".to_string());
    }
    let f: f64 = num.parse().map_err(|_| format!("`{t}` is not a size"))?;
    if f.is_nan() || f < 0.0 {
        return Err(format!("`{t}` is not a size"));
    }
    Ok((f * mult as f64).round() as u64)
}

fn fmt_size(b: u64) -> String {
    for (unit, m) in [("GB", GB), ("MB", MB), ("KB", KB)] {
        if b >= m && b.is_multiple_of(m) {
            return format!("{}{unit}", b / m);
        }
    }
    format!("{b}B")
}

fn parse_duration(v: &str) -> Result<Ps, String> {
    let t = v.trim();
    let (num, mult) = if let Some(n) = t.strip_suffix("ps") {
        (n, 1.0)
    } else if let Some(n) = t.strip_suffix("ns") {
        (n, 1e3)
    } else if let Some(n) = t.strip_suffix("us") {
        (n, 1e6)
    } else {
        (t, 1e3)
    };
    let f: f64 = num.trim().parse().map_err(|_| format!("`{t}` is not a duration"))?;
    if f.is_nan() || f < 0.0 {
        return Err(format!("`{t}` is not a duration"));
    }
    Ok(Ps((f * mult).round() as u64))
}

fn fmt_duration(p: Ps) -> String {
    if p.0.is_multiple_of(1000) {
        format!("{}ns", p.0 / 1000)
    } else {
        format!("{}ps", p.0)
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a valid number", v.trim()))
}

fn parse_ratio(v: &str) -> Result<f64, String> {
    let f: f64 = parse_num(v)?;
    if !(0.0..=1.0).contains(&f) {
        return Err(format!("{f} is outside [0, 1]"));
    }
    Ok(f)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_workloads(v: &str) -> Result<Vec<(String, u32)>, String> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once(':') {
            Some((label, n)) => out.push((label.trim().to_string(), parse_num(n)?)),
            // count 0 marks "share the remaining nodes equally"
            None => out.push((item.to_string(), 0)),
        }
    }
    if out.is_empty() {
        return Err("empty workload list".into());
    }
    Ok(out)
}

fn new_preset(label: &str) -> WorkloadPreset {
    WorkloadPreset {
        label: label.to_string(),
        footprint_bytes: 0,
        total_accesses: 0,
        write_fraction: 0.3,
        locality: LocalityProfile {
            sequential_fraction: 0.5,
            hot_set_fraction: 0.2,
            burstiness: 0.0,
        },
        mean_gap_cycles: 50.0,
        burst_len: 1,
        threads: 1,
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value;
        if let Some(rest) = key.strip_prefix("preset.") {
            let (label, field) = rest
                .rsplit_once('.')
                .ok_or_else(|| "expected preset.<label>.<field>".to_string())?;
            if label.is_empty() {
                return Err("empty preset label".into());
            }
            let idx = match self.presets.iter().position(|p| p.label == label) {
                Some(i) => i,
                None => {
                    self.presets.push(new_preset(label));
                    self.presets.len() - 1
                }
            };
            let p = &mut self.presets[idx];
            match field {
                "footprint" => p.footprint_bytes = parse_size(v)?,
                "accesses" => p.total_accesses = parse_num(v)?,
                "write_fraction" => p.write_fraction = parse_ratio(v)?,
                "sequential_fraction" => p.locality.sequential_fraction = parse_ratio(v)?,
                "hot_set_fraction" => p.locality.hot_set_fraction = parse_ratio(v)?,
                "burstiness" => p.locality.burstiness = parse_ratio(v)?,
                "mean_gap_cycles" => p.mean_gap_cycles = parse_num(v)?,
                "burst_len" => p.burst_len = parse_num(v)?,
                "threads" => p.threads = parse_num(v)?,
                _ => return Err("unknown preset field".into()),
            }
            return Ok(());
        }
        if let Some(rest) = key.strip_prefix("cache.") {
            return self.set_cache(rest, v);
        }
        if let Some((dev, field)) = key.split_once('.') {
            if dev == "local_dram" || dev == "pool_dram" {
                let d = if dev == "local_dram" {
                    &mut self.local_dram
                } else {
                    &mut self.pool_dram
                };
                match field {
                    "channels" => d.channels = parse_num(v)?,
                    "banks" => d.banks = parse_num(v)?,
                    "t_access" => d.t_access = parse_duration(v)?,
                    "queue_capacity" => d.queue_capacity = parse_num(v)?,
                    "channel_interleave" => d.channel_interleave = parse_size(v)?,
                    "bank_interleave" => d.bank_interleave = parse_size(v)?,
                    _ => return Err("unknown key".into()),
                }
                return Ok(());
            }
        }
        let f = &mut self.fabric;
        match key {
            "nodes" => self.nodes = parse_num(v)?,
            "pools" => self.pools = parse_num(v)?,
            "local_memory" => self.local_bytes = parse_size(v)?,
            "pool_memory" => self.pool_bytes = parse_size(v)?,
            "chunk_size" => self.chunk_bytes = parse_size(v)?,
            "page_policy" => self.page_policy = v.parse()?,
            "pool_policy" => self.pool_policy = v.parse()?,
            "seed" => self.seed = parse_num(v)?,
            "epoch_cycles" => self.epoch_cycles = parse_num(v)?,
            "max_outstanding" => {
                self.max_outstanding = match v.trim() {
                    "none" | "off" => None,
                    n => Some(parse_num(n)?),
                }
            }
            "grant_latency" => self.grant_latency = parse_duration(v)?,
            "workloads" => self.workloads = parse_workloads(v)?,
            "trace" => {
                self.trace = match v.trim() {
                    "" | "none" => None,
                    p => Some(PathBuf::from(p)),
                }
            }
            "scale" => self.scale = parse_num(v)?,
            "out" => self.out_dir = PathBuf::from(v.trim()),
            "dump_completions" => self.dump_completions = parse_bool(v)?,
            "log_packets" => self.log_packets = parse_bool(v)?,
            "fabric.link_gbps" => {
                let g: f64 = parse_num(v)?;
                f.link_rate_bps = (g * 1e9).round() as u64;
            }
            "fabric.nic_delay" => f.nic_delay = parse_duration(v)?,
            "fabric.switch_delay" => f.switch_delay = parse_duration(v)?,
            "fabric.packet_prep" => f.packet_prep = parse_duration(v)?,
            "fabric.propagation" => f.propagation = parse_duration(v)?,
            "fabric.switch_buffer_bits" => f.switch_buffer_bits = parse_num(v)?,
            "fabric.nic_queue" => f.nic_queue_bytes = parse_size(v)?,
            "fabric.request_bytes" => f.request_bytes = parse_num(v)?,
            "fabric.response_bytes" => f.response_bytes = parse_num(v)?,
            "fabric.response_prep" => f.response_prep = parse_bool(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn set_cache(&mut self, key: &str, v: &str) -> Result<(), String> {
        let (unit, field) = key.split_once('.').ok_or_else(|| "unknown key".to_string())?;
        let level = match unit {
            "l1" => Some(0),
            "l2" => Some(1),
            "l3" => Some(2),
            _ => None,
        };
        if let Some(i) = level {
            while self.cache.levels.len() <= i {
                self.cache.levels.push(LevelConfig {
                    size_bytes: 0,
                    ways: 1,
                    latency: 0,
                });
            }
            let l = &mut self.cache.levels[i];
            match field {
                "size" => l.size_bytes = parse_size(v)?,
                "ways" => l.ways = parse_num(v)?,
                "latency" => l.latency = parse_num(v)?,
                _ => return Err("unknown key".into()),
            }
            return Ok(());
        }
        let tlb = match unit {
            "dtlb" => &mut self.cache.dtlb,
            "itlb" => &mut self.cache.itlb,
            _ => return Err("unknown key".into()),
        };
        if field == "enabled" {
            if !parse_bool(v)? {
                *tlb = None;
            } else if tlb.is_none() {
                *tlb = Some(TlbConfig {
                    entries: 64,
                    ways: 4,
                    miss_penalty: 60,
                });
            }
            return Ok(());
        }
        let t = tlb.get_or_insert(TlbConfig {
            entries: 64,
            ways: 4,
            miss_penalty: 60,
        });
        match field {
            "entries" => t.entries = parse_num(v)?,
            "ways" => t.ways = parse_num(v)?,
            "miss_penalty" => t.miss_penalty = parse_num(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Resolves equal-split entries and returns `(label, count)` per block.
    pub fn resolved_workloads(&self) -> Result<Vec<(String, u32)>, String> {
        let fixed: u32 = self.workloads.iter().map(|w| w.1).sum();
        let shares = self.workloads.iter().filter(|w| w.1 == 0).count() as u32;
        if fixed > self.nodes {
            return Err(format!("workloads assign {fixed} nodes but only {} exist", self.nodes));
        }
        let rest = self.nodes - fixed;
        if shares == 0 {
            if rest != 0 {
                return Err(format!("workloads assign {fixed} of {} nodes", self.nodes));
            }
            return Ok(self.workloads.clone());
        }
        if !rest.is_multiple_of(shares) {
            return Err(format!(
                "{rest} nodes cannot be split equally across {shares} workloads"
            ));
        }
        Ok(self
            .workloads
            .iter()
            .map(|(l, n)| (l.clone(), if *n == 0 { rest / shares } else { *n }))
            .collect())
    }

    /// Checks invariants; on failure returns the offending key and a message.
    pub fn check(&self) -> Result<(), (String, String)> {
        let fail = |k: &str, m: String| Err((k.to_string(), m));
        if self.nodes == 0 {
            return fail("nodes", "must be >= 1".into());
        }
        if self.pools == 0 {
            return fail("pools", "must be >= 1".into());
        }
        if self.chunk_bytes < 4096 || !self.chunk_bytes.is_multiple_of(4096) {
            return fail("chunk_size", "must be a positive multiple of 4KB".into());
        }
        if !self.local_bytes.is_multiple_of(4096) {
            return fail("local_memory", "must be a multiple of 4KB".into());
        }
        if self.pool_bytes < self.chunk_bytes {
            return fail("pool_memory", "smaller than one chunk".into());
        }
        if self.epoch_cycles == 0 {
            return fail("epoch_cycles", "must be >= 1".into());
        }
        if self.max_outstanding == Some(0) {
            return fail("max_outstanding", "must be >= 1 or `none`".into());
        }
        if self.scale.is_nan() || self.scale <= 0.0 {
            return fail("scale", "must be > 0".into());
        }
        let resolved = self.resolved_workloads().map_err(|m| ("workloads".to_string(), m))?;
        if resolved.iter().any(|w| w.1 == 0) {
            return fail("workloads", "every listed workload needs at least one node".into());
        }
        if self.trace.is_none() {
            for (label, _) in &resolved {
                if !self.presets.iter().any(|p| &p.label == label) {
                    return fail("workloads", format!("no preset named `{label}`"));
                }
            }
            for p in &self.presets {
                if let Err(e) = p.validate() {
                    return fail(&format!("preset.{}", p.label), e.to_string());
                }
            }
        }
        for (name, d) in [("local_dram", &self.local_dram), ("pool_dram", &self.pool_dram)] {
            d.validate().or_else(|m| fail(name, m))?;
        }
        self.fabric
            .validate((self.nodes + self.pools) as usize)
            .or_else(|m| fail("fabric", m))?;
        self.cache.validate().or_else(|e| fail("cache", e.to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(key, msg)| Error::Config { line: 0, key, msg })
    }

    /// Parses configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_onto(Self::default(), text)
    }

    /// Parses configuration text on top of `base`.
    pub fn parse_onto(mut cfg: RunConfig, text: &str) -> Result<Self> {
        let mut lines: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: line_no,
                    key: line.to_string(),
                    msg: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            cfg.set(key, value.trim()).map_err(|msg| Error::Config {
                line: line_no,
                key: key.to_string(),
                msg,
            })?;
            lines.insert(key.to_string(), line_no);
        }
        cfg.check().map_err(|(key, msg)| {
            // attribute to the line that set the key, or its prefix group
            let line = lines
                .get(&key)
                .copied()
                .or_else(|| {
                    lines
                        .iter()
                        .filter(|(k, _)| k.starts_with(&format!("{key}.")))
                        .map(|(_, &l)| l)
                        .max()
                })
                .unwrap_or(0);
            Error::Config { line, key, msg }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every effective setting as ordered `(key, value)` pairs. Parsing the
    /// rendered pairs reproduces this configuration exactly.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| e.push((k.to_string(), v));
        put("nodes", self.nodes.to_string());
        put("pools", self.pools.to_string());
        put("local_memory", fmt_size(self.local_bytes));
        put("pool_memory", fmt_size(self.pool_bytes));
        put("chunk_size", fmt_size(self.chunk_bytes));
        put("page_policy", self.page_policy.name().into());
        put("pool_policy", self.pool_policy.name().into());
        put("seed", self.seed.to_string());
        put("epoch_cycles", self.epoch_cycles.to_string());
        put(
            "max_outstanding",
            self.max_outstanding.map_or("none".into(), |n| n.to_string()),
        );
        put("grant_latency", fmt_duration(self.grant_latency));
        put(
            "workloads",
            self.workloads
                .iter()
                .map(|(l, n)| if *n == 0 { l.clone() } else { format!("{l}:{n}") })
                .collect::<Vec<_>>()
                .join(", "),
        );
        put(
            "trace",
            self.trace.as_ref().map_or("none".into(), |p| p.display().to_string()),
        );
        put("scale", self.scale.to_string());
        put("out", self.out_dir.display().to_string());
        put("dump_completions", self.dump_completions.to_string());
        put("log_packets", self.log_packets.to_string());

        let f = &self.fabric;
        put("fabric.link_gbps", (f.link_rate_bps as f64 / 1e9).to_string());
        put("fabric.nic_delay", fmt_duration(f.nic_delay));
        put("fabric.switch_delay", fmt_duration(f.switch_delay));
        put("fabric.packet_prep", fmt_duration(f.packet_prep));
        put("fabric.propagation", fmt_duration(f.propagation));
        put("fabric.switch_buffer_bits", f.switch_buffer_bits.to_string());
        put("fabric.nic_queue", fmt_size(f.nic_queue_bytes));
        put("fabric.request_bytes", f.request_bytes.to_string());
        put("fabric.response_bytes", f.response_bytes.to_string());
        put("fabric.response_prep", f.response_prep.to_string());

        for (name, d) in [("local_dram", &self.local_dram), ("pool_dram", &self.pool_dram)] {
            put(&format!("{name}.channels"), d.channels.to_string());
            put(&format!("{name}.banks"), d.banks.to_string());
            put(&format!("{name}.t_access"), fmt_duration(d.t_access));
            put(&format!("{name}.queue_capacity"), d.queue_capacity.to_string());
            put(&format!("{name}.channel_interleave"), fmt_size(d.channel_interleave));
            put(&format!("{name}.bank_interleave"), fmt_size(d.bank_interleave));
        }

        for (i, l) in self.cache.levels.iter().enumerate() {
            put(&format!("cache.l{}.size", i + 1), fmt_size(l.size_bytes));
            put(&format!("cache.l{}.ways", i + 1), l.ways.to_string());
            put(&format!("cache.l{}.latency", i + 1), l.latency.to_string());
        }
        for (name, t) in [("dtlb", &self.cache.dtlb), ("itlb", &self.cache.itlb)] {
            match t {
                None => put(&format!("cache.{name}.enabled"), "false".into()),
                Some(t) => {
                    put(&format!("cache.{name}.entries"), t.entries.to_string());
                    put(&format!("cache.{name}.ways"), t.ways.to_string());
                    put(&format!("cache.{name}.miss_penalty"), t.miss_penalty.to_string());
                }
            }
        }

        for p in &self.presets {
            let k = |f: &str| format!("preset.{}.{f}", p.label);
            put(&k("footprint"), p.footprint_bytes.to_string());
            put(&k("accesses"), p.total_accesses.to_string());
            put(&k("write_fraction"), p.write_fraction.to_string());
            put(&k("sequential_fraction"), p.locality.sequential_fraction.to_string());
            put(&k("hot_set_fraction"), p.locality.hot_set_fraction.to_string());
            put(&k("burstiness"), p.locality.burstiness.to_string());
            put(&k("mean_gap_cycles"), p.mean_gap_cycles.to_string());
            put(&k("burst_len"), p.burst_len.to_string());
            put(&k("threads"), p.threads.to_string());
        }
        e
    }

    /// The effective configuration in loadable form.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of the echo, excluding the output directory, as lowercase hex.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if k != "out" {
                h.update(k.as_bytes());
                h.update(b"=");
                h.update(v.as_bytes());
                h.update(b"\n");
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Engine configuration; `labels` and `node_benchmark` follow the workload blocks.
    pub fn sim_config(&self) -> Result<SimConfig> {
        self.validate()?;
        let blocks = self.resolved_workloads().map_err(Error::Invalid)?;
        let labels: Vec<String> = blocks.iter().map(|b| b.0.clone()).collect();
        let node_benchmark = blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| std::iter::repeat_n(i as u32, b.1 as usize))
            .collect();
        Ok(SimConfig {
            nodes: self.nodes,
            pools: self.pools,
            local_bytes: self.local_bytes,
            pool_bytes: self.pool_bytes,
            chunk_bytes: self.chunk_bytes,
            page_policy: self.page_policy,
            pool_policy: self.pool_policy,
            fabric: self.fabric.clone(),
            local_dram: self.local_dram.clone(),
            pool_dram: self.pool_dram.clone(),
            seed: self.seed,
            epoch_cycles: self.epoch_cycles,
            max_outstanding: self.max_outstanding,
            grant_latency: self.grant_latency,
            labels,
            node_benchmark,
            keep_completions: self.dump_completions,
            log_packets: self.log_packets,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.nodes, 64);
        assert_eq!(cfg.pools, 6);
        assert_eq!(cfg.local_bytes, 256 * MB);
        assert_eq!(cfg.chunk_bytes, 4 * MB);
        assert_eq!(cfg.pool_policy, PoolPolicy::SmartIdle);
    }

    #[test]
    fn override_one_key() {
        let cfg = RunConfig::parse("# comment\npools = 4\n").unwrap();
        assert_eq!(cfg.pools, 4);
        assert_eq!(cfg.nodes, 64);
    }

    #[test]
    fn zero_pools_names_key_and_line() {
        let err = RunConfig::parse("seed = 3\n\npools = 0\n").unwrap_err();
        match err {
            Error::Config { line, key, .. } => assert_eq!((line, key.as_str()), (3, "pools")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::parse("nodes = 8\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn type_mismatch_rejected() {
        let err = RunConfig::parse("nodes = eight").unwrap_err();
        assert!(err.to_string().contains("nodes"), "{err}");
    }

    #[test]
    fn sizes_and_durations() {
        assert_eq!(parse_size("256MB"), Ok(256 * MB));
        assert_eq!(parse_size("4 KB"), Ok(4096));
        assert_eq!(parse_size("1.5GB"), Ok(3 * GB / 2));
        assert_eq!(parse_size("123"), Ok(123));
        assert!(parse_size("12 parsecs").is_err());
        assert_eq!(parse_duration("2.5ns"), Ok(Ps(2500)));
        assert_eq!(parse_duration("46"), Ok(Ps::from_ns(46)));
        assert_eq!(parse_duration("833ps"), Ok(Ps(833)));
        assert_eq!(fmt_size(64 * KB), "64KB");
        assert_eq!(fmt_size(1000), "1000B");
        assert_eq!(fmt_duration(Ps(2500)), "2500ps");
    }

    #[test]
    fn workloads_split_and_validate() {
        let cfg = RunConfig::parse("nodes = 6\nworkloads = lbm:2, fft\n").unwrap();
        assert_eq!(
            cfg.resolved_workloads().unwrap(),
            vec![("lbm".to_string(), 2), ("fft".to_string(), 4)]
        );
        let sim = cfg.sim_config().unwrap();
        assert_eq!(sim.node_benchmark, vec![0, 0, 1, 1, 1, 1]);
        assert!(RunConfig::parse("nodes = 5\nworkloads = lbm, fft\n").is_err());
        assert!(RunConfig::parse("nodes = 2\nworkloads = nope:2\n").is_err());
    }

    #[test]
    fn new_preset_must_be_completed() {
        let err = RunConfig::parse("nodes = 1\nworkloads = mine\npreset.mine.accesses = 10\n").unwrap_err();
        assert!(err.to_string().contains("preset.mine"), "{err}");
        let cfg =
            RunConfig::parse("nodes = 1\nworkloads = mine\npreset.mine.accesses = 10\npreset.mine.footprint = 8KB\n")
                .unwrap();
        assert_eq!(cfg.presets.last().unwrap().footprint_bytes, 8192);
    }

    #[test]
    fn echo_round_trips() {
        for cfg in [RunConfig::default(), desk_profile()] {
            let again = RunConfig::parse(&cfg.echo()).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.hash(), cfg.hash());
        }
        let mut odd = desk_profile();
        odd.cache.dtlb = None;
        odd.max_outstanding = Some(16);
        odd.grant_latency = Ps::from_ns(500);
        odd.trace = Some(PathBuf::from("t.csv"));
        odd.fabric.propagation = Ps(2501);
        assert_eq!(RunConfig::parse(&odd.echo()).unwrap(), odd);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = desk_profile();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
