//! Functional TLB and cache hierarchy that turns raw memory references into
//! LLC-miss records with approximate per-thread timestamps.
//!
//! Levels are non-inclusive and looked up in order; a hit at one level stops
//! the walk. Every level is write-back/write-allocate with a per-set
//! round-robin fill cursor. Dirty victims are written into the next level,
//! and dirty victims of the last level become write-back records.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{
    merge_streams, open_maybe_gz, parse_hex, parse_kind, AccessKind, LlcMissRecord, LINE_BYTES, PAGE_BYTES,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelConfig {
    pub size_bytes: u64,
    pub ways: u32,
    /// Cycles charged for a hit at this level (see [`CacheHierarchy::access`]).
    pub latency: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlbConfig {
    pub entries: u32,
    pub ways: u32,
    pub miss_penalty: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    /// Nearest level first.
    pub levels: Vec<LevelConfig>,
    pub dtlb: Option<TlbConfig>,
    /// Accepted for completeness; only data references are filtered.
    pub itlb: Option<TlbConfig>,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            levels: vec![
                LevelConfig {
                    size_bytes: 32 << 10,
                    ways: 8,
                    latency: 4,
                },
                LevelConfig {
                    size_bytes: 256 << 10,
                    ways: 4,
                    latency: 12,
                },
                LevelConfig {
                    size_bytes: 16 << 20,
                    ways: 16,
                    latency: 41,
                },
            ],
            dtlb: Some(TlbConfig {
                entries: 64,
                ways: 4,
                miss_penalty: 60,
            }),
            itlb: Some(TlbConfig {
                entries: 128,
                ways: 8,
                miss_penalty: 60,
            }),
        }
    }
}

impl CacheConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Invalid("at least one cache level required".into()));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.ways == 0 || l.size_bytes == 0 || l.size_bytes % (l.ways as u64 * LINE_BYTES) != 0 {
                return Err(Error::Invalid(format!(
                    "cache level {}: size must be a non-zero multiple of ways x {LINE_BYTES}B",
                    i + 1
                )));
            }
        }
        for (name, tlb) in [("dtlb", &self.dtlb), ("itlb", &self.itlb)] {
            if let Some(t) = tlb {
                if t.ways == 0 || t.entries == 0 || t.entries % t.ways != 0 {
                    return Err(Error::Invalid(format!(
                        "{name}: entries must be a non-zero multiple of ways"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Line {
    key: u64,
    dirty: bool,
}

/// Set-associative array with round-robin replacement.
#[derive(Clone, Debug)]
struct SetAssoc {
    sets: u64,
    ways: usize,
    slots: Vec<Option<Line>>,
    cursor: Vec<usize>,
}

impl SetAssoc {
    fn new(sets: u64, ways: usize) -> Self {
        Self {
            sets,
            ways,
            slots: vec![None; sets as usize * ways],
            cursor: vec![0; sets as usize],
        }
    }

    fn set_range(&self, key: u64) -> (usize, std::ops::Range<usize>) {
        let set = (key % self.sets) as usize;
        (set, set * self.ways..(set + 1) * self.ways)
    }

    fn find(&mut self, key: u64) -> Option<&mut Line> {
        let (_, range) = self.set_range(key);
        self.slots[range].iter_mut().flatten().find(|l| l.key == key)
    }

    /// Installs `key` in the way under the set's cursor and returns the victim.
    fn fill(&mut self, key: u64, dirty: bool) -> Option<Line> {
        let (set, range) = self.set_range(key);
        let way = self.cursor[set];
        self.cursor[set] = (way + 1) % self.ways;
        self.slots[range.start + way].replace(Line { key, dirty })
    }
}

/// Result of one reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessOutcome {
    /// Index of the level that hit, `None` for an LLC miss.
    pub hit_level: Option<usize>,
    pub tlb_miss: bool,
    /// Cycles added to the thread's clock.
    pub latency: u64,
    /// Line addresses of dirty lines evicted from the last level.
    pub writebacks: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct CacheHierarchy {
    cfg: CacheConfig,
    levels: Vec<SetAssoc>,
    dtlb: Option<SetAssoc>,
    lookups: Vec<u64>,
}

impl CacheHierarchy {
    pub fn new(cfg: CacheConfig) -> Result<Self> {
        cfg.validate()?;
        let levels = cfg
            .levels
            .iter()
            .map(|l| SetAssoc::new(l.size_bytes / (l.ways as u64 * LINE_BYTES), l.ways as usize))
            .collect();
        let dtlb = cfg
            .dtlb
            .as_ref()
            .map(|t| SetAssoc::new((t.entries / t.ways) as u64, t.ways as usize));
        let lookups = vec![0; cfg.levels.len()];
        Ok(Self {
            cfg,
            levels,
            dtlb,
            lookups,
        })
    }

    /// Lookups performed at each level so far.
    pub fn lookups(&self) -> &[u64] {
        &self.lookups
    }

    /// Cycles for a hit at `level`: the first two levels add up (L1, then
    /// L1+L2); from the third level on the configured value is the full
    /// load-to-use latency.
    fn hit_latency(&self, level: usize) -> u64 {
        match level {
            0 => self.cfg.levels[0].latency,
            1 => self.cfg.levels[0].latency + self.cfg.levels[1].latency,
            k => self.cfg.levels[k].latency,
        }
    }

    /// Writes a dirty victim of `level` into the levels below it.
    fn write_back(&mut self, from: usize, line: Line, out: &mut Vec<u64>) {
        let next = from + 1;
        if next == self.levels.len() {
            out.push(line.key);
            return;
        }
        if let Some(l) = self.levels[next].find(line.key) {
            l.dirty = true;
            return;
        }
        if let Some(victim) = self.levels[next].fill(line.key, true) {
            if victim.dirty {
                self.write_back(next, victim, out);
            }
        }
    }

    pub fn access(&mut self, vaddr: u64, kind: AccessKind) -> AccessOutcome {
        let key = vaddr / LINE_BYTES;
        let write = kind == AccessKind::Write;
        let mut latency = 0;
        let mut tlb_miss = false;
        if let Some(tlb) = &mut self.dtlb {
            let vpage = vaddr / PAGE_BYTES;
            if tlb.find(vpage).is_none() {
                tlb.fill(vpage, false);
                tlb_miss = true;
                latency += self.cfg.dtlb.as_ref().unwrap().miss_penalty;
            }
        }

        let mut hit_level = None;
        for (k, level) in self.levels.iter_mut().enumerate() {
            self.lookups[k] += 1;
            if let Some(line) = level.find(key) {
                if write && k == 0 {
                    line.dirty = true;
                }
                hit_level = Some(k);
                break;
            }
        }
        let last = self.levels.len() - 1;
        latency += self.hit_latency(hit_level.unwrap_or(last));

        // Allocate in every level that missed, farthest first.
        let missed = hit_level.unwrap_or(self.levels.len());
        let mut writebacks = Vec::new();
        for k in (0..missed).rev() {
            let dirty = write && k == 0;
            if let Some(victim) = self.levels[k].fill(key, dirty) {
                if victim.dirty {
                    self.write_back(k, victim, &mut writebacks);
                }
            }
        }
        AccessOutcome {
            hit_level,
            tlb_miss,
            latency,
            writebacks,
        }
    }
}

/// One raw memory reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemRef {
    pub thread: u32,
    pub vaddr: u64,
    pub kind: AccessKind,
}

/// Filters raw references through the hierarchy. Each thread keeps its own
/// clock, advanced by the latency of each of its references; misses and
/// write-backs carry the clock value after the reference that caused them.
pub fn cache_filter(refs: &[MemRef], cfg: &CacheConfig, node_id: u32) -> Result<Vec<LlcMissRecord>> {
    let mut caches = CacheHierarchy::new(cfg.clone())?;
    let mut clocks: BTreeMap<u32, u64> = BTreeMap::new();
    let mut per_thread: BTreeMap<u32, Vec<LlcMissRecord>> = BTreeMap::new();
    for r in refs {
        let out = caches.access(r.vaddr, r.kind);
        let clock = clocks.entry(r.thread).or_insert(0);
        *clock += out.latency;
        let ts = *clock;
        let stream = per_thread.entry(r.thread).or_default();
        if out.hit_level.is_none() {
            stream.push(LlcMissRecord {
                timestamp: ts,
                node_id,
                thread_id: r.thread,
                vaddr: r.vaddr & !(LINE_BYTES - 1),
                kind: r.kind,
            });
        }
        for line in out.writebacks {
            stream.push(LlcMissRecord {
                timestamp: ts,
                node_id,
                thread_id: r.thread,
                vaddr: line * LINE_BYTES,
                kind: AccessKind::Write,
            });
        }
    }
    merge_streams(per_thread.into_values().collect())
}

/// Reads a raw-reference CSV `thread,vaddr_hex,kind` (header optional).
pub fn read_refs(path: &Path) -> Result<Vec<MemRef>> {
    let reader = open_maybe_gz(path)?;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || (idx == 0 && t.starts_with("thread")) {
            continue;
        }
        let f: Vec<&str> = t.split(',').collect();
        let err = |msg: String| Error::TraceParse { line: line_no, msg };
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", f.len())));
        }
        let thread = f[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("thread `{}` is not an integer", f[0].trim())))?;
        let vaddr = parse_hex(f[1]).ok_or_else(|| err(format!("vaddr `{}` is not hex", f[1].trim())))?;
        let kind = parse_kind(f[2]).ok_or_else(|| err(format!("kind `{}` is not R or W", f[2].trim())))?;
        out.push(MemRef { thread, vaddr, kind });
    }
    Ok(out)
}
