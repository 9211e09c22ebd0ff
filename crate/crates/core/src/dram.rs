//! Queued DRAM timing model: per-channel in-order controller queues feeding
//! banks with a fixed closed-page service time.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::time::Ps;
use crate::trace::AccessKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DramConfig {
    pub channels: u32,
    pub banks: u32,
    pub t_access: Ps,
    /// Requests a channel controller holds, waiting or in service.
    pub queue_capacity: u32,
    pub channel_interleave: u64,
    pub bank_interleave: u64,
}

impl DramConfig {
    pub fn local_default() -> Self {
        Self {
            channels: 1,
            banks: 8,
            t_access: Ps::from_ns(46),
            queue_capacity: 64,
            channel_interleave: 4096,
            bank_interleave: 64,
        }
    }

    pub fn pool_default() -> Self {
        Self {
            channels: 2,
            ..Self::local_default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.channels == 0 || self.banks == 0 || self.queue_capacity == 0 {
            return Err("dram channels, banks and queue capacity must be >= 1".into());
        }
        if self.t_access == Ps::ZERO {
            return Err("dram access time must be > 0".into());
        }
        if self.channel_interleave == 0 || self.bank_interleave == 0 {
            return Err("dram interleave granularity must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Service {
    pub start: Ps,
    pub done: Ps,
}

/// The channel queue is full; a slot frees at `retry_at`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueueFull {
    pub channel: u32,
    pub retry_at: Ps,
}

#[derive(Clone, Debug, Default)]
struct Channel {
    /// Completion times of accepted requests, oldest first (non-decreasing).
    outstanding: VecDeque<Ps>,
    last_start: Ps,
}

impl Channel {
    fn retire(&mut self, now: Ps) {
        while self.outstanding.front().is_some_and(|&t| t <= now) {
            self.outstanding.pop_front();
        }
    }
}

#[derive(Clone, Debug)]
pub struct DramDevice {
    cfg: DramConfig,
    capacity_bytes: u64,
    channels: Vec<Channel>,
    bank_busy_until: Vec<Ps>,
    served: u64,
    max_depth: usize,
}

impl DramDevice {
    pub fn new(cfg: DramConfig, capacity_bytes: u64) -> Self {
        cfg.validate().expect("invalid dram config");
        Self {
            channels: vec![Channel::default(); cfg.channels as usize],
            bank_busy_until: vec![Ps::ZERO; (cfg.channels * cfg.banks) as usize],
            cfg,
            capacity_bytes,
            served: 0,
            max_depth: 0,
        }
    }

    pub fn config(&self) -> &DramConfig {
        &self.cfg
    }

    pub fn channel_of(&self, addr: u64) -> u32 {
        ((addr / self.cfg.channel_interleave) % self.cfg.channels as u64) as u32
    }

    pub fn bank_of(&self, addr: u64) -> u32 {
        ((addr / self.cfg.bank_interleave) % self.cfg.banks as u64) as u32
    }

    /// Accepts a request at `now` and returns when its bank starts and
    /// finishes serving it. Requests issue in order per channel. Reads and
    /// writes cost the same.
    pub fn submit(&mut self, addr: u64, _kind: AccessKind, now: Ps) -> Result<Service, QueueFull> {
        assert!(
            addr < self.capacity_bytes,
            "dram address {addr:#x} outside device capacity {:#x}",
            self.capacity_bytes
        );
        let ch_idx = self.channel_of(addr);
        let bank_idx = (ch_idx * self.cfg.banks + self.bank_of(addr)) as usize;
        let t_access = self.cfg.t_access;
        let capacity = self.cfg.queue_capacity as usize;

        let ch = &mut self.channels[ch_idx as usize];
        ch.retire(now);
        if ch.outstanding.len() >= capacity {
            return Err(QueueFull {
                channel: ch_idx,
                retry_at: ch.outstanding[ch.outstanding.len() - capacity],
            });
        }
        let start = now.max(ch.last_start).max(self.bank_busy_until[bank_idx]);
        let done = start + t_access;
        ch.last_start = start;
        // start times never decrease within a channel, so neither do completions
        ch.outstanding.push_back(done);
        self.bank_busy_until[bank_idx] = done;
        self.served += 1;
        self.max_depth = self.max_depth.max(ch.outstanding.len());
        Ok(Service { start, done })
    }

    /// Requests accepted by `channel` and not yet complete at `now`.
    pub fn queue_depth(&self, channel: u32, now: Ps) -> usize {
        let ch = self
            .channels
            .get(channel as usize)
            .unwrap_or_else(|| panic!("no dram channel {channel}"));
        ch.outstanding.iter().filter(|&&t| t > now).count()
    }

    pub fn served(&self) -> u64 {
        self.served
    }

    pub fn max_queue_depth(&self) -> usize {
        self.max_depth
    }
}
