//! Discrete-event core. Each trace record walks
//! MMU -> (local DRAM | request packet -> pool DRAM -> response packet) and
//! ends as one completion record with its latency breakdown.

pub mod queue;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::addrmap::{NodeMmu, PagePolicy, PhysicalTarget, Placement};
use crate::dram::{DramConfig, DramDevice, Service};
use crate::error::{Error, Result};
use crate::fabric::{Endpoint, Fabric, FabricConfig, FabricEvent, Packet, PacketKind};
use crate::gmm::{Gmm, PoolPolicy};
use crate::metrics::{
    CompletionRecord, Components, GrantRow, Location, MetricsCollector, MetricsReport, PoolSummary, RunMeta, Totals,
};
use crate::time::Ps;
use crate::trace::{AccessKind, LlcMissRecord, PAGE_BYTES};

pub use queue::EventQueue;

/// Everything one simulation run needs besides the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nodes: u32,
    pub pools: u32,
    pub local_bytes: u64,
    pub pool_bytes: u64,
    pub chunk_bytes: u64,
    pub page_policy: PagePolicy,
    pub pool_policy: PoolPolicy,
    pub fabric: FabricConfig,
    pub local_dram: DramConfig,
    pub pool_dram: DramConfig,
    pub seed: u64,
    pub epoch_cycles: u64,
    /// Per-node limit on outstanding misses; `None` replays the trace open-loop.
    pub max_outstanding: Option<u32>,
    /// Time from a chunk request to the grant. Accesses to pages in a chunk
    /// wait until it has been granted.
    pub grant_latency: Ps,
    pub labels: Vec<String>,
    /// Benchmark index (into `labels`) of every node.
    pub node_benchmark: Vec<u32>,
    pub keep_completions: bool,
    pub log_packets: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nodes: 64,
            pools: 6,
            local_bytes: 256 << 20,
            pool_bytes: 32 << 30,
            chunk_bytes: 4 << 20,
            page_policy: PagePolicy::Alternate,
            pool_policy: PoolPolicy::SmartIdle,
            fabric: FabricConfig::default(),
            local_dram: DramConfig::local_default(),
            pool_dram: DramConfig::pool_default(),
            seed: 1,
            epoch_cycles: 1_500_000,
            max_outstanding: None,
            grant_latency: Ps::ZERO,
            labels: vec!["all".into()],
            node_benchmark: vec![0; 64],
            keep_completions: false,
            log_packets: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.nodes == 0 || self.pools == 0 {
            return bad("node and pool counts must be >= 1".into());
        }
        if self.chunk_bytes < PAGE_BYTES || !self.chunk_bytes.is_multiple_of(PAGE_BYTES) {
            return bad(format!("chunk size must be a positive multiple of {PAGE_BYTES} bytes"));
        }
        if self.pool_bytes < self.chunk_bytes {
            return bad("pool capacity is smaller than one chunk".into());
        }
        if self.epoch_cycles == 0 {
            return bad("epoch length must be > 0".into());
        }
        if self.node_benchmark.len() != self.nodes as usize {
            return bad(format!(
                "{} nodes but {} workload assignments",
                self.nodes,
                self.node_benchmark.len()
            ));
        }
        if self.node_benchmark.iter().any(|&b| b as usize >= self.labels.len()) {
            return bad("workload assignment refers to an unknown benchmark".into());
        }
        if self.max_outstanding == Some(0) {
            return bad("outstanding-miss cap must be >= 1".into());
        }
        self.local_dram.validate().map_err(Error::Invalid)?;
        self.pool_dram.validate().map_err(Error::Invalid)?;
        self.fabric
            .validate((self.nodes + self.pools) as usize)
            .map_err(Error::Invalid)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    /// Inject the next trace record.
    Inject,
    Fabric(FabricEvent),
    LocalRetry {
        node: u32,
    },
    LocalDone {
        slot: usize,
    },
    PoolRetry {
        pool: u32,
    },
    PoolDone {
        slot: usize,
    },
    /// A remote access whose chunk grant has now completed.
    Dispatch {
        slot: usize,
    },
}

impl From<FabricEvent> for Event {
    fn from(ev: FabricEvent) -> Self {
        Event::Fabric(ev)
    }
}

#[derive(Clone, Copy, Debug)]
struct InFlight {
    node: u32,
    kind: AccessKind,
    issued: Ps,
    /// When the access left the node; later than `issued` only while a chunk grant is pending.
    dispatched: Ps,
    target: PhysicalTarget,
    pool_ready: Ps,
    service: Option<Service>,
}

struct LocalMem {
    dram: DramDevice,
    waiting: VecDeque<usize>,
    retry_scheduled: bool,
}

struct PoolMem {
    dram: DramDevice,
    /// Delivered requests not yet accepted by the controller (slot, packet bytes).
    ingress: VecDeque<(usize, u32)>,
    retry_scheduled: bool,
}

pub struct Simulation<'a> {
    cfg: &'a SimConfig,
    trace: &'a [LlcMissRecord],
    cursor: usize,
    q: EventQueue<Event>,
    mmus: Vec<NodeMmu>,
    gmm: Gmm,
    fabric: Fabric,
    local: Vec<LocalMem>,
    pools: Vec<PoolMem>,
    slots: Vec<Option<InFlight>>,
    free_slots: Vec<usize>,
    outstanding: Vec<u32>,
    deferred: Vec<VecDeque<usize>>,
    /// Per node, the time each of its chunks becomes usable.
    chunk_ready: Vec<Vec<Ps>>,
    metrics: MetricsCollector,
    totals: Totals,
}

impl<'a> Simulation<'a> {
    /// Checks the config and the trace; the trace must be time-ordered and
    /// only name configured nodes.
    pub fn new(cfg: &'a SimConfig, trace: &'a [LlcMissRecord]) -> Result<Self> {
        cfg.validate()?;
        if let Some(pos) = trace.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::UnsortedStream {
                stream: 0,
                position: pos + 1,
            });
        }
        if let Some(r) = trace.iter().find(|r| r.node_id >= cfg.nodes) {
            return Err(Error::Invalid(format!(
                "trace names node {} but only {} nodes are configured",
                r.node_id, cfg.nodes
            )));
        }
        let nodes = cfg.nodes as usize;
        let pools = cfg.pools as usize;
        let mut fabric = Fabric::new(cfg.fabric.clone(), nodes, pools);
        if cfg.log_packets {
            fabric.enable_log();
        }
        let mut metrics = MetricsCollector::new(cfg.labels.clone(), pools, Ps::from_cycles(cfg.epoch_cycles));
        if cfg.keep_completions {
            metrics.keep_completions();
        }
        let mut q = EventQueue::new();
        if let Some(first) = trace.first() {
            q.schedule(Ps::from_cycles(first.timestamp), Event::Inject);
        }
        Ok(Self {
            cfg,
            trace,
            cursor: 0,
            q,
            mmus: (0..cfg.nodes)
                .map(|n| NodeMmu::new(n, cfg.page_policy, cfg.local_bytes))
                .collect(),
            gmm: Gmm::new(pools, cfg.pool_bytes, cfg.chunk_bytes, cfg.pool_policy, cfg.seed),
            fabric,
            local: (0..nodes)
                .map(|_| LocalMem {
                    dram: DramDevice::new(cfg.local_dram.clone(), cfg.local_bytes.max(PAGE_BYTES)),
                    waiting: VecDeque::new(),
                    retry_scheduled: false,
                })
                .collect(),
            pools: (0..pools)
                .map(|_| PoolMem {
                    dram: DramDevice::new(cfg.pool_dram.clone(), cfg.pool_bytes),
                    ingress: VecDeque::new(),
                    retry_scheduled: false,
                })
                .collect(),
            slots: Vec::new(),
            free_slots: Vec::new(),
            outstanding: vec![0; nodes],
            deferred: vec![VecDeque::new(); nodes],
            chunk_ready: vec![Vec::new(); nodes],
            metrics,
            totals: Totals::default(),
        })
    }

    pub fn now(&self) -> Ps {
        self.q.now()
    }

    pub fn mmus(&self) -> &[NodeMmu] {
        &self.mmus
    }

    pub fn gmm(&self) -> &Gmm {
        &self.gmm
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    /// Processes the earliest pending event; returns its time, or `None` once drained.
    pub fn step(&mut self) -> Option<Ps> {
        let (now, ev) = self.q.pop()?;
        match ev {
            Event::Inject => self.on_inject(),
            Event::Fabric(fev) => {
                if let Some(pkt) = self.fabric.handle(fev, &mut self.q) {
                    self.on_delivery(pkt);
                }
            }
            Event::LocalRetry { node } => {
                self.local[node as usize].retry_scheduled = false;
                self.drain_local(node);
            }
            Event::LocalDone { slot } => self.complete(slot),
            Event::PoolRetry { pool } => {
                self.pools[pool as usize].retry_scheduled = false;
                self.drain_pool(pool);
            }
            Event::Dispatch { slot } => self.dispatch(slot),
            Event::PoolDone { slot } => {
                let f = self.slots[slot].expect("pool completion for empty slot");
                let PhysicalTarget::RemoteDram { pool, .. } = f.target else {
                    unreachable!("pool completion for a local access")
                };
                self.fabric.inject(
                    PacketKind::Response,
                    Endpoint::Pool(pool),
                    Endpoint::Node(f.node),
                    slot as u64,
                    &mut self.q,
                );
            }
        }
        Some(now)
    }

    fn on_inject(&mut self) {
        let idx = self.cursor;
        self.cursor += 1;
        if let Some(next) = self.trace.get(self.cursor) {
            self.q.schedule(Ps::from_cycles(next.timestamp), Event::Inject);
        }
        let node = self.trace[idx].node_id as usize;
        if let Some(cap) = self.cfg.max_outstanding {
            if self.outstanding[node] >= cap || !self.deferred[node].is_empty() {
                self.deferred[node].push_back(idx);
                return;
            }
        }
        self.issue(idx);
    }

    fn issue(&mut self, idx: usize) {
        let rec = self.trace[idx];
        let now = self.q.now();
        let node = rec.node_id;
        self.totals.injected += 1;
        let mmu = &mut self.mmus[node as usize];
        let vpage = rec.vaddr / PAGE_BYTES;
        let placement = match mmu.lookup(vpage) {
            Some(p) => p,
            None => {
                let Ok(p) = mmu.handle_page_fault(vpage, &mut self.gmm, now) else {
                    self.totals.oom_drops += 1;
                    return;
                };
                self.totals.page_faults += 1;
                let ready = &mut self.chunk_ready[node as usize];
                while ready.len() < mmu.chunks().len() {
                    ready.push(now + self.cfg.grant_latency);
                }
                p
            }
        };
        let target = mmu.translate(rec.vaddr);
        let slot = self.alloc_slot(InFlight {
            node,
            kind: rec.kind,
            issued: now,
            dispatched: now,
            target,
            pool_ready: Ps::ZERO,
            service: None,
        });
        self.outstanding[node as usize] += 1;
        match placement {
            Placement::Local { .. } => {
                self.local[node as usize].waiting.push_back(slot);
                self.drain_local(node);
            }
            Placement::Remote { chunk, .. } => {
                let ready = self.chunk_ready[node as usize][chunk as usize];
                if ready > now {
                    self.q.schedule(ready, Event::Dispatch { slot });
                } else {
                    self.dispatch(slot);
                }
            }
        }
    }

    /// Sends a remote access's request packet.
    fn dispatch(&mut self, slot: usize) {
        let now = self.q.now();
        let f = self.slots[slot].as_mut().expect("dispatch of empty slot");
        let PhysicalTarget::RemoteDram { pool, .. } = f.target else {
            unreachable!("dispatch of a local access")
        };
        f.dispatched = now;
        let node = f.node;
        self.fabric.inject(
            PacketKind::Request,
            Endpoint::Node(node),
            Endpoint::Pool(pool),
            slot as u64,
            &mut self.q,
        );
    }

    fn alloc_slot(&mut self, f: InFlight) -> usize {
        match self.free_slots.pop() {
            Some(s) => {
                self.slots[s] = Some(f);
                s
            }
            None => {
                self.slots.push(Some(f));
                self.slots.len() - 1
            }
        }
    }

    fn drain_local(&mut self, node: u32) {
        let now = self.q.now();
        let mem = &mut self.local[node as usize];
        while let Some(&slot) = mem.waiting.front() {
            let f = self.slots[slot].as_mut().unwrap();
            let PhysicalTarget::LocalDram(addr) = f.target else {
                unreachable!()
            };
            match mem.dram.submit(addr, f.kind, now) {
                Ok(svc) => {
                    mem.waiting.pop_front();
                    f.service = Some(svc);
                    self.q.schedule(svc.done, Event::LocalDone { slot });
                }
                Err(full) => {
                    if !mem.retry_scheduled {
                        mem.retry_scheduled = true;
                        self.q.schedule(full.retry_at, Event::LocalRetry { node });
                    }
                    break;
                }
            }
        }
    }

    fn drain_pool(&mut self, pool: u32) {
        let now = self.q.now();
        let mem = &mut self.pools[pool as usize];
        while let Some(&(slot, bytes)) = mem.ingress.front() {
            let f = self.slots[slot].as_mut().unwrap();
            let PhysicalTarget::RemoteDram { addr, .. } = f.target else {
                unreachable!()
            };
            match mem.dram.submit(addr, f.kind, now) {
                Ok(svc) => {
                    mem.ingress.pop_front();
                    f.service = Some(svc);
                    self.q.schedule(svc.done, Event::PoolDone { slot });
                    self.fabric.release_ingress(Endpoint::Pool(pool), bytes, &mut self.q);
                }
                Err(full) => {
                    if !mem.retry_scheduled {
                        mem.retry_scheduled = true;
                        self.q.schedule(full.retry_at, Event::PoolRetry { pool });
                    }
                    break;
                }
            }
        }
    }

    fn on_delivery(&mut self, pkt: Packet) {
        let now = self.q.now();
        let slot = pkt.access as usize;
        match (pkt.kind, pkt.dst) {
            (PacketKind::Request, Endpoint::Pool(pool)) => {
                self.gmm.record_pool_access(pool);
                self.metrics.record_pool_arrival(pool, now);
                self.slots[slot].as_mut().expect("request for empty slot").pool_ready = now;
                self.pools[pool as usize].ingress.push_back((slot, pkt.bytes));
                self.drain_pool(pool);
            }
            (PacketKind::Response, Endpoint::Node(node)) => {
                self.fabric
                    .release_ingress(Endpoint::Node(node), pkt.bytes, &mut self.q);
                self.complete(slot);
            }
            (kind, dst) => panic!("{kind:?} packet delivered to {dst:?}"),
        }
    }

    fn complete(&mut self, slot: usize) {
        let now = self.q.now();
        let f = self.slots[slot].take().expect("completion for empty slot");
        self.free_slots.push(slot);
        let svc = f.service.expect("completed access was never served");
        let latency = now - f.issued;
        let (location, components) = match f.target {
            PhysicalTarget::LocalDram(_) => {
                self.totals.local += 1;
                (
                    Location::Local,
                    Components {
                        local: latency,
                        ..Components::default()
                    },
                )
            }
            PhysicalTarget::RemoteDram { .. } => {
                self.totals.remote += 1;
                (
                    Location::Remote,
                    Components {
                        local: Ps::ZERO,
                        grant: f.dispatched - f.issued,
                        network: (f.pool_ready - f.dispatched) + (now - svc.done),
                        remote_queue: svc.start - f.pool_ready,
                        remote_service: svc.done - svc.start,
                    },
                )
            }
        };
        self.totals.completed += 1;
        self.metrics.record_completion(CompletionRecord {
            node_id: f.node,
            benchmark: self.cfg.node_benchmark[f.node as usize],
            location,
            latency,
            components,
            completed_at: now,
        });

        let node = f.node as usize;
        self.outstanding[node] -= 1;
        if let Some(cap) = self.cfg.max_outstanding {
            while self.outstanding[node] < cap {
                let Some(idx) = self.deferred[node].pop_front() else {
                    break;
                };
                self.issue(idx);
            }
        }
    }

    /// Runs until the event queue drains and assembles the report.
    pub fn run_to_end(mut self) -> MetricsReport {
        while self.step().is_some() {}
        self.finish()
    }

    /// Assembles the report once `step` has returned `None`.
    pub fn finish(self) -> MetricsReport {
        assert!(self.q.is_empty(), "finish called with pending events");
        let mut totals = self.totals;
        assert_eq!(
            totals.injected,
            totals.completed + totals.oom_drops,
            "access conservation violated"
        );
        assert!(self.fabric.is_idle(), "packets left in the fabric");
        totals.chunk_grants = self.gmm.grant_log().len() as u64;
        totals.events = self.q.processed();
        totals.packets = self.fabric.stats().injected;

        let mut report = self.metrics.finish(self.q.now());
        report.totals = totals;
        report.meta = RunMeta {
            page_policy: self.cfg.page_policy.name().into(),
            pool_policy: self.cfg.pool_policy.name().into(),
            seed: self.cfg.seed,
            ..RunMeta::default()
        };
        report.pools = self
            .gmm
            .pools()
            .iter()
            .zip(&self.pools)
            .map(|(p, mem)| PoolSummary {
                pool: p.pool_id,
                allocated_bytes: p.allocated_bytes,
                grants: self.gmm.grant_log().iter().filter(|g| g.pool == p.pool_id).count() as u64,
                lifetime_accesses: p.lifetime_access_count,
                dram_served: mem.dram.served(),
                dram_max_queue_depth: mem.dram.max_queue_depth() as u64,
            })
            .collect();
        report.grants = self
            .gmm
            .grant_log()
            .iter()
            .map(|g| GrantRow {
                grant_index: g.grant_index,
                policy: g.policy.name().into(),
                pool: g.pool,
                node: g.node,
                sim_time: g.sim_time,
            })
            .collect();
        report
    }

    /// Per-stage packet log, if enabled in the config.
    pub fn write_packet_log(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        self.fabric.write_stage_log(w)
    }
}

/// Runs `trace` to completion under `cfg`.
pub fn run(cfg: &SimConfig, trace: &[LlcMissRecord]) -> Result<MetricsReport> {
    Ok(Simulation::new(cfg, trace)?.run_to_end())
}
