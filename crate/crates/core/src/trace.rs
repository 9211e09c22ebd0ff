//! LLC-miss trace records: the CSV file format, the synthetic workload
//! generator and the k-way merge that turns per-node streams into the single
//! time-ordered stream consumed by the engine.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LINE_BYTES: u64 = 64;
pub const PAGE_BYTES: u64 = 4096;
pub const LINES_PER_PAGE: u64 = PAGE_BYTES / LINE_BYTES;

pub const TRACE_HEADER: &str = "timestamp,node,thread,vaddr,kind";

/// Base of the synthetic virtual address range. Each node has its own address space.
const SYNTHETIC_VA_BASE: u64 = 0x10_0000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    Read,
    Write,
}

impl AccessKind {
    pub fn as_char(self) -> char {
        match self {
            AccessKind::Read => 'R',
            AccessKind::Write => 'W',
        }
    }
}

/// One last-level-cache miss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LlcMissRecord {
    /// CPU cycles.
    pub timestamp: u64,
    pub node_id: u32,
    pub thread_id: u32,
    /// Line-aligned virtual address.
    pub vaddr: u64,
    pub kind: AccessKind,
}

impl LlcMissRecord {
    pub fn page(&self) -> u64 {
        self.vaddr / PAGE_BYTES
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:#x},{}",
            self.timestamp,
            self.node_id,
            self.thread_id,
            self.vaddr,
            self.kind.as_char()
        )
    }
}

fn parse_u64(field: &str, what: &str, line: usize) -> Result<u64> {
    field.trim().parse::<u64>().map_err(|_| Error::TraceParse {
        line,
        msg: format!("{what} `{}` is not a non-negative integer", field.trim()),
    })
}

fn parse_u32(field: &str, what: &str, line: usize) -> Result<u32> {
    field.trim().parse::<u32>().map_err(|_| Error::TraceParse {
        line,
        msg: format!("{what} `{}` is not a non-negative integer", field.trim()),
    })
}

pub(crate) fn parse_hex(field: &str) -> Option<u64> {
    let f = field.trim();
    let digits = f.strip_prefix("0x").or_else(|| f.strip_prefix("0X")).unwrap_or(f);
    if digits.is_empty() {
        return None;
    }
    u64::from_str_radix(digits, 16).ok()
}

pub(crate) fn parse_kind(field: &str) -> Option<AccessKind> {
    match field.trim() {
        "R" | "r" => Some(AccessKind::Read),
        "W" | "w" => Some(AccessKind::Write),
        _ => None,
    }
}

/// Parses `timestamp,node,thread,vaddr_hex,kind`. `line_no` is only used in errors.
pub fn parse_trace_line(line: &str, line_no: usize) -> Result<LlcMissRecord> {
    let fields: Vec<&str> = line.trim().split(',').collect();
    if fields.len() != 5 {
        let msg = if fields.len() == 4 {
            "missing kind field (expected 5 fields)".to_string()
        } else {
            format!("expected 5 fields, found {}", fields.len())
        };
        return Err(Error::TraceParse { line: line_no, msg });
    }
    let timestamp = parse_u64(fields[0], "timestamp", line_no)?;
    let node_id = parse_u32(fields[1], "node", line_no)?;
    let thread_id = parse_u32(fields[2], "thread", line_no)?;
    let vaddr = parse_hex(fields[3]).ok_or_else(|| Error::TraceParse {
        line: line_no,
        msg: format!("vaddr `{}` is not a hex address", fields[3].trim()),
    })?;
    let kind = parse_kind(fields[4]).ok_or_else(|| Error::TraceParse {
        line: line_no,
        msg: format!("kind `{}` is not R or W", fields[4].trim()),
    })?;
    Ok(LlcMissRecord {
        timestamp,
        node_id,
        thread_id,
        vaddr: vaddr & !(LINE_BYTES - 1),
        kind,
    })
}

pub(crate) fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

pub(crate) fn create_maybe_gz(path: &Path) -> Result<Box<dyn Write>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufWriter::new(GzEncoder::new(file, Compression::default()))))
    } else {
        Ok(Box::new(BufWriter::new(file)))
    }
}

/// Reads a trace CSV (optionally gzip-compressed when the path ends in `.gz`).
/// The first line must be the header; blank lines and `#` comments are skipped.
pub fn read_trace(path: &Path) -> Result<Vec<LlcMissRecord>> {
    let reader = open_maybe_gz(path)?;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if idx == 0 && trimmed.starts_with("timestamp") {
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_trace_line(trimmed, line_no)?);
    }
    Ok(out)
}

pub fn write_trace(path: &Path, records: &[LlcMissRecord]) -> Result<()> {
    let mut w = create_maybe_gz(path)?;
    let mut write_all = || -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in records {
            writeln!(w, "{}", r.to_csv_line())?;
        }
        w.flush()
    };
    write_all().map_err(|e| Error::io(path, e))
}

/// Locality knobs of a synthetic workload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityProfile {
    /// Probability that a non-first-touch access continues the sequential line stream.
    pub sequential_fraction: f64,
    /// Size of the working set as a fraction of the footprint; non-sequential
    /// accesses land uniformly in the most recently touched pages.
    pub hot_set_fraction: f64,
    /// Probability that an access starts a burst of back-to-back misses.
    pub burstiness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadPreset {
    pub label: String,
    pub footprint_bytes: u64,
    pub total_accesses: u64,
    pub write_fraction: f64,
    pub locality: LocalityProfile,
    /// Mean gap between misses outside bursts, in CPU cycles.
    pub mean_gap_cycles: f64,
    /// Misses per burst episode.
    pub burst_len: u32,
    pub threads: u32,
}

impl WorkloadPreset {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::Preset {
                label: self.label.clone(),
                msg: msg.to_string(),
            })
        };
        if self.footprint_bytes == 0 {
            return bad("footprint must be > 0");
        }
        if self.total_accesses == 0 {
            return bad("access count must be > 0");
        }
        let ratios = [
            self.write_fraction,
            self.locality.sequential_fraction,
            self.locality.hot_set_fraction,
            self.locality.burstiness,
        ];
        if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("ratios must lie in [0, 1]");
        }
        if self.mean_gap_cycles.is_nan() || self.mean_gap_cycles < 1.0 {
            return bad("mean gap must be >= 1 cycle");
        }
        if self.threads == 0 {
            return bad("thread count must be >= 1");
        }
        Ok(())
    }

    /// Record count and footprint pages after scaling.
    pub fn scaled(&self, scale: f64) -> (u64, u64) {
        let records = (self.total_accesses as f64 * scale).round() as u64;
        let pages = ((self.footprint_bytes as f64 * scale) / PAGE_BYTES as f64).ceil() as u64;
        (records, pages.max(1))
    }
}

/// The four benchmarks of the WL-Mix workload (full-size access counts and footprints).
pub fn wl_mix_presets() -> Vec<WorkloadPreset> {
    let mk =
        |label: &str, accesses_m: f64, footprint_gb: f64, write: f64, seq: f64, hot: f64, gap: f64| WorkloadPreset {
            label: label.to_string(),
            footprint_bytes: (footprint_gb * 1e9).round() as u64,
            total_accesses: (accesses_m * 1e6).round() as u64,
            write_fraction: write,
            locality: LocalityProfile {
                sequential_fraction: seq,
                hot_set_fraction: hot,
                burstiness: 0.002,
            },
            mean_gap_cycles: gap,
            burst_len: 32,
            threads: 8,
        };
    vec![
        mk("lbm", 45.47, 2.7, 0.45, 0.90, 0.10, 24.0),
        mk("fotonik3d", 11.92, 0.57, 0.30, 0.85, 0.15, 90.0),
        mk("fft", 15.81, 1.06, 0.35, 0.60, 0.30, 70.0),
        mk("fmm", 12.5, 3.20, 0.20, 0.40, 0.50, 85.0),
    ]
}

pub fn find_preset<'a>(presets: &'a [WorkloadPreset], label: &str) -> Option<&'a WorkloadPreset> {
    presets.iter().find(|p| p.label == label)
}

/// splitmix64 finalizer, used to derive independent per-node seeds.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates the scaled LLC-miss stream of one node running `preset`.
///
/// Pages are first touched in order along a frontier that advances linearly
/// with the record index, so every footprint page is touched exactly once for
/// the first time and allocation order follows program order. Other accesses
/// either continue a sequential line cursor over the touched region or hit a
/// uniformly chosen line of the hot set, the most recently touched pages
/// (a working set that drifts with the frontier).
pub fn generate_synthetic(preset: &WorkloadPreset, scale: f64, node_id: u32, seed: u64) -> Result<Vec<LlcMissRecord>> {
    preset.validate()?;
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::Preset {
            label: preset.label.clone(),
            msg: "scale must be > 0".into(),
        });
    }
    let (n, footprint_pages) = preset.scaled(scale);
    if n == 0 {
        return Err(Error::Preset {
            label: preset.label.clone(),
            msg: "scaled access count is zero".into(),
        });
    }
    let pages = footprint_pages.min(n);
    let hot_pages = ((preset.locality.hot_set_fraction * pages as f64).ceil() as u64).clamp(1, pages);

    let label_hash = preset.label.bytes().fold(0u64, |h, b| mix64(h ^ b as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(node_id as u64 ^ label_hash)));
    let gap_dist = Geometric::new(1.0 / preset.mean_gap_cycles).expect("mean gap validated");

    let va_base = SYNTHETIC_VA_BASE;
    let mut out = Vec::with_capacity(n as usize);
    let mut touched = 0u64;
    let mut cursor_line = 0u64;
    let mut now = 0u64;
    let mut burst_left = 0u32;

    for i in 0..n {
        // Time model: geometric gaps, occasionally interrupted by bursts of back-to-back misses.
        if i > 0 {
            if burst_left > 0 {
                burst_left -= 1;
                now += 1;
            } else {
                now += 1 + gap_dist.sample(&mut rng);
                if preset.locality.burstiness > 0.0 && rng.random_bool(preset.locality.burstiness) {
                    burst_left = preset.burst_len.saturating_sub(1);
                }
            }
        }

        let frontier = (i as u128 * pages as u128 / n as u128) as u64;
        let line = if frontier >= touched {
            let l = touched * LINES_PER_PAGE;
            touched += 1;
            cursor_line = l;
            l
        } else if rng.random_bool(preset.locality.sequential_fraction) {
            cursor_line = (cursor_line + 1) % (touched * LINES_PER_PAGE);
            cursor_line
        } else {
            let hot = hot_pages.min(touched);
            rng.random_range((touched - hot) * LINES_PER_PAGE..touched * LINES_PER_PAGE)
        };

        let kind = if rng.random_bool(preset.write_fraction) {
            AccessKind::Write
        } else {
            AccessKind::Read
        };
        out.push(LlcMissRecord {
            timestamp: now,
            node_id,
            thread_id: rng.random_range(0..preset.threads),
            vaddr: va_base + line * LINE_BYTES,
            kind,
        });
    }
    Ok(out)
}

/// Merges individually time-ordered streams into one stream ordered by
/// `(timestamp, node_id, thread_id, stream index, position)`.
pub fn merge_streams(streams: Vec<Vec<LlcMissRecord>>) -> Result<Vec<LlcMissRecord>> {
    for (s, stream) in streams.iter().enumerate() {
        if let Some(pos) = stream.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::UnsortedStream {
                stream: s,
                position: pos + 1,
            });
        }
    }
    if streams.len() == 1 {
        return Ok(streams.into_iter().next().unwrap());
    }

    let total = streams.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    let mut heap = BinaryHeap::new();
    for (s, stream) in streams.iter().enumerate() {
        if let Some(r) = stream.first() {
            heap.push(Reverse((r.timestamp, r.node_id, r.thread_id, s, 0usize)));
        }
    }
    while let Some(Reverse((_, _, _, s, pos))) = heap.pop() {
        out.push(streams[s][pos]);
        if let Some(r) = streams[s].get(pos + 1) {
            heap.push(Reverse((r.timestamp, r.node_id, r.thread_id, s, pos + 1)));
        }
    }
    Ok(out)
}
