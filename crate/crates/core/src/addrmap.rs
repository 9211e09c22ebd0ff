//! Per-node memory management unit: page placement (local-first or
//! alternate local/remote), chunk consumption and address translation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gmm::{ChunkGrant, Gmm, OutOfMemory};
use crate::time::Ps;
use crate::trace::PAGE_BYTES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PagePolicy {
    LocalFirst,
    Alternate,
}

impl PagePolicy {
    pub const ALL: [PagePolicy; 2] = [PagePolicy::LocalFirst, PagePolicy::Alternate];

    pub fn name(self) -> &'static str {
        match self {
            PagePolicy::LocalFirst => "local_first",
            PagePolicy::Alternate => "alternate",
        }
    }
}

impl fmt::Display for PagePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PagePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().replace('-', "_").as_str() {
            "local_first" => Ok(PagePolicy::LocalFirst),
            "alternate" | "alternate_local_remote" => Ok(PagePolicy::Alternate),
            other => Err(format!("unknown page policy `{other}` (local_first, alternate)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    Local { frame: u64 },
    Remote { pool: u32, chunk: u32, offset: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhysicalTarget {
    LocalDram(u64),
    RemoteDram { pool: u32, addr: u64 },
}

/// Anything that can hand out remote chunks; the global memory manager in a run.
pub trait ChunkSource {
    fn request_chunk(&mut self, node_id: u32, now: Ps) -> Result<ChunkGrant, OutOfMemory>;
}

impl ChunkSource for Gmm {
    fn request_chunk(&mut self, node_id: u32, now: Ps) -> Result<ChunkGrant, OutOfMemory> {
        self.allocate_chunk(node_id, now)
    }
}

#[derive(Clone, Debug)]
pub struct NodeMmu {
    node_id: u32,
    policy: PagePolicy,
    local_frames: u64,
    next_frame: u64,
    chunks: Vec<ChunkGrant>,
    /// Next free byte offset inside the last chunk.
    chunk_cursor: u64,
    fault_counter: u64,
    oom_faults: u64,
    table: HashMap<u64, Placement>,
}

impl NodeMmu {
    pub fn new(node_id: u32, policy: PagePolicy, local_bytes: u64) -> Self {
        Self {
            node_id,
            policy,
            local_frames: local_bytes / PAGE_BYTES,
            next_frame: 0,
            chunks: Vec::new(),
            chunk_cursor: 0,
            fault_counter: 0,
            oom_faults: 0,
            table: HashMap::new(),
        }
    }

    pub fn node_id(&self) -> u32 {
        self.node_id
    }

    pub fn free_local_frames(&self) -> u64 {
        self.local_frames - self.next_frame
    }

    pub fn fault_count(&self) -> u64 {
        self.fault_counter
    }

    pub fn oom_faults(&self) -> u64 {
        self.oom_faults
    }

    pub fn chunks(&self) -> &[ChunkGrant] {
        &self.chunks
    }

    pub fn mapped_pages(&self) -> usize {
        self.table.len()
    }

    pub fn lookup(&self, vpage: u64) -> Option<Placement> {
        self.table.get(&vpage).copied()
    }

    fn wants_local(&self) -> bool {
        if self.free_local_frames() == 0 {
            return false;
        }
        match self.policy {
            PagePolicy::LocalFirst => true,
            PagePolicy::Alternate => self.fault_counter.is_multiple_of(2),
        }
    }

    /// Maps an unmapped page. Remote placements fill the current chunk
    /// sequentially and ask `source` for a new chunk once it is exhausted.
    pub fn handle_page_fault(
        &mut self,
        vpage: u64,
        source: &mut impl ChunkSource,
        now: Ps,
    ) -> Result<Placement, OutOfMemory> {
        debug_assert!(!self.table.contains_key(&vpage), "fault on mapped page {vpage:#x}");
        let placement = if self.wants_local() {
            let frame = self.next_frame;
            self.next_frame += 1;
            Placement::Local { frame }
        } else {
            let needs_chunk = self
                .chunks
                .last()
                .is_none_or(|c| self.chunk_cursor + PAGE_BYTES > c.size);
            if needs_chunk {
                match source.request_chunk(self.node_id, now) {
                    Ok(grant) => {
                        self.chunks.push(grant);
                        self.chunk_cursor = 0;
                    }
                    Err(oom) => {
                        self.oom_faults += 1;
                        return Err(oom);
                    }
                }
            }
            let chunk = self.chunks.len() - 1;
            let offset = self.chunk_cursor;
            self.chunk_cursor += PAGE_BYTES;
            Placement::Remote {
                pool: self.chunks[chunk].pool_id,
                chunk: chunk as u32,
                offset,
            }
        };
        self.fault_counter += 1;
        self.table.insert(vpage, placement);
        Ok(placement)
    }

    /// Pure lookup. Panics on an unmapped page: the engine always faults first.
    pub fn translate(&self, vaddr: u64) -> PhysicalTarget {
        let vpage = vaddr / PAGE_BYTES;
        let page_offset = vaddr % PAGE_BYTES;
        match self.table.get(&vpage) {
            Some(Placement::Local { frame }) => PhysicalTarget::LocalDram(frame * PAGE_BYTES + page_offset),
            Some(Placement::Remote { pool, chunk, offset }) => {
                let base = self.chunks[*chunk as usize].base_offset;
                PhysicalTarget::RemoteDram {
                    pool: *pool,
                    addr: base + offset + page_offset,
                }
            }
            None => panic!(
                "node {}: translation of unmapped address {vaddr:#x} (fault-before-access violated)",
                self.node_id
            ),
        }
    }

    /// Bytes of chunks this node holds in `pool`.
    pub fn chunk_bytes_in(&self, pool: u32) -> u64 {
        self.chunks.iter().filter(|c| c.pool_id == pool).map(|c| c.size).sum()
    }

    /// Page-table dump, sorted by virtual page.
    pub fn dump_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut pages: Vec<_> = self.table.iter().collect();
        pages.sort_by_key(|(p, _)| **p);
        for (vpage, placement) in pages {
            match placement {
                Placement::Local { frame } => writeln!(w, "{},{:#x},local,{},,", self.node_id, vpage, frame)?,
                Placement::Remote { pool, chunk, offset } => {
                    writeln!(w, "{},{:#x},remote,{},{},{}", self.node_id, vpage, pool, chunk, offset)?
                }
            }
        }
        Ok(())
    }
}

pub const PAGE_TABLE_HEADER: &str = "node,vpage,placement,frame_or_pool,chunk,offset";

/// Checks that no two mapped pages share a physical page: local frames per
/// node, remote pool pages across all nodes.
pub fn audit_injective(mmus: &[NodeMmu]) -> Result<(), String> {
    let mut remote = HashSet::new();
    for mmu in mmus {
        let mut local = HashSet::new();
        for (&vpage, placement) in &mmu.table {
            match mmu.translate(vpage * PAGE_BYTES) {
                PhysicalTarget::LocalDram(addr) => {
                    if addr / PAGE_BYTES >= mmu.local_frames || !local.insert(addr / PAGE_BYTES) {
                        return Err(format!("node {}: bad local frame for {placement:?}", mmu.node_id));
                    }
                }
                PhysicalTarget::RemoteDram { pool, addr } => {
                    if let Placement::Remote { chunk, offset, .. } = placement {
                        if offset + PAGE_BYTES > mmu.chunks[*chunk as usize].size {
                            return Err(format!("node {}: offset outside chunk", mmu.node_id));
                        }
                    }
                    if !remote.insert((pool, addr / PAGE_BYTES)) {
                        return Err(format!(
                            "node {}: pool {pool} page {:#x} mapped twice",
                            mmu.node_id,
                            addr / PAGE_BYTES
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::PoolPolicy;

    const MB: u64 = 1 << 20;
    const GB: u64 = 1 << 30;

    /// Hands out 4MB chunks from pool 0 and counts requests.
    struct CountingSource {
        requests: u32,
        fail: bool,
    }

    impl ChunkSource for CountingSource {
        fn request_chunk(&mut self, _node: u32, _now: Ps) -> Result<ChunkGrant, OutOfMemory> {
            if self.fail {
                return Err(OutOfMemory { chunk_bytes: 4 * MB });
            }
            self.requests += 1;
            Ok(ChunkGrant {
                pool_id: 0,
                base_offset: (self.requests as u64 - 1) * 4 * MB,
                size: 4 * MB,
            })
        }
    }

    fn src() -> CountingSource {
        CountingSource {
            requests: 0,
            fail: false,
        }
    }

    #[test]
    fn local_first_exhausts_local_then_goes_remote() {
        let mut mmu = NodeMmu::new(0, PagePolicy::LocalFirst, 256 * MB);
        assert_eq!(mmu.free_local_frames(), 65_536);
        let mut s = src();
        assert_eq!(
            mmu.handle_page_fault(0, &mut s, Ps::ZERO).unwrap(),
            Placement::Local { frame: 0 }
        );
        for p in 1..65_536 {
            assert!(matches!(
                mmu.handle_page_fault(p, &mut s, Ps::ZERO).unwrap(),
                Placement::Local { .. }
            ));
        }
        assert_eq!(s.requests, 0);
        assert!(matches!(
            mmu.handle_page_fault(65_536, &mut s, Ps::ZERO).unwrap(),
            Placement::Remote { .. }
        ));
    }

    #[test]
    fn alternate_interleaves() {
        let mut mmu = NodeMmu::new(0, PagePolicy::Alternate, 256 * MB);
        let mut s = src();
        let kinds: Vec<bool> = (0..4)
            .map(|p| {
                matches!(
                    mmu.handle_page_fault(p, &mut s, Ps::ZERO).unwrap(),
                    Placement::Local { .. }
                )
            })
            .collect();
        assert_eq!(kinds, vec![true, false, true, false]);
    }

    #[test]
    fn alternate_reuses_chunk_for_1024_pages() {
        let mut mmu = NodeMmu::new(0, PagePolicy::Alternate, 256 * MB);
        let mut s = src();
        // fault 1 is the first remote one and requests the first chunk
        mmu.handle_page_fault(0, &mut s, Ps::ZERO).unwrap();
        mmu.handle_page_fault(1, &mut s, Ps::ZERO).unwrap();
        assert_eq!(s.requests, 1);
        let mut page = 2;
        let mut remote = 1;
        while remote < 1024 {
            if let Placement::Remote { .. } = mmu.handle_page_fault(page, &mut s, Ps::ZERO).unwrap() {
                remote += 1;
            }
            page += 1;
        }
        assert_eq!(s.requests, 1);
        // next remote fault needs a new chunk
        mmu.handle_page_fault(page, &mut s, Ps::ZERO).unwrap();
        mmu.handle_page_fault(page + 1, &mut s, Ps::ZERO).unwrap();
        assert_eq!(s.requests, 2);
    }

    #[test]
    fn alternate_degrades_to_remote() {
        let mut mmu = NodeMmu::new(0, PagePolicy::Alternate, 2 * PAGE_BYTES);
        let mut s = src();
        let local: Vec<bool> = (0..8)
            .map(|p| {
                matches!(
                    mmu.handle_page_fault(p, &mut s, Ps::ZERO).unwrap(),
                    Placement::Local { .. }
                )
            })
            .collect();
        assert_eq!(local, vec![true, false, true, false, false, false, false, false]);
    }

    #[test]
    fn oom_is_recorded_and_page_left_unmapped() {
        let mut mmu = NodeMmu::new(0, PagePolicy::LocalFirst, 0);
        let mut s = CountingSource {
            requests: 0,
            fail: true,
        };
        assert!(mmu.handle_page_fault(3, &mut s, Ps::ZERO).is_err());
        assert_eq!(mmu.oom_faults(), 1);
        assert_eq!(mmu.lookup(3), None);
    }

    #[test]
    fn translate_local_and_remote() {
        let mut mmu = NodeMmu::new(0, PagePolicy::LocalFirst, 6 * PAGE_BYTES);
        let mut s = src();
        for p in 0..6 {
            mmu.handle_page_fault(p, &mut s, Ps::ZERO).unwrap();
        }
        assert_eq!(
            mmu.translate(5 * PAGE_BYTES + 0x40),
            PhysicalTarget::LocalDram(5 * 4096 + 0x40)
        );

        // Remote page at offset 4KB of a chunk based at 8MB in pool 2.
        let mut mmu = NodeMmu::new(1, PagePolicy::LocalFirst, 0);
        struct At8Mb;
        impl ChunkSource for At8Mb {
            fn request_chunk(&mut self, _: u32, _: Ps) -> Result<ChunkGrant, OutOfMemory> {
                Ok(ChunkGrant {
                    pool_id: 2,
                    base_offset: 8 * MB,
                    size: 4 * MB,
                })
            }
        }
        mmu.handle_page_fault(10, &mut At8Mb, Ps::ZERO).unwrap();
        mmu.handle_page_fault(11, &mut At8Mb, Ps::ZERO).unwrap();
        assert_eq!(
            mmu.translate(11 * PAGE_BYTES),
            PhysicalTarget::RemoteDram {
                pool: 2,
                addr: 8 * MB + 4096
            }
        );
    }

    #[test]
    #[should_panic(expected = "unmapped")]
    fn translate_unmapped_aborts() {
        NodeMmu::new(0, PagePolicy::LocalFirst, MB).translate(0x1000);
    }

    #[test]
    fn chunk_bytes_match_gmm_accounting() {
        let mut gmm = Gmm::new(3, GB, 4 * MB, PoolPolicy::RoundRobin, 0);
        let mut mmus: Vec<NodeMmu> = (0..4).map(|n| NodeMmu::new(n, PagePolicy::Alternate, 8 * MB)).collect();
        for page in 0..5000u64 {
            let node = (page % 4) as usize;
            mmus[node].handle_page_fault(page, &mut gmm, Ps::ZERO).unwrap();
        }
        for pool in 0..3 {
            let charged: u64 = mmus.iter().map(|m| m.chunk_bytes_in(pool)).sum();
            assert_eq!(charged, gmm.pools()[pool as usize].allocated_bytes);
        }
        audit_injective(&mmus).unwrap();
    }
}
