//! Global memory manager: per-pool allocation state, windowed access counters
//! and the random, round-robin and smart-idle pool selection policies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::time::Ps;

/// Number of windows kept per pool: the current one plus three older ones.
pub const WINDOWS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolPolicy {
    Random,
    RoundRobin,
    SmartIdle,
}

impl PoolPolicy {
    pub const ALL: [PoolPolicy; 3] = [PoolPolicy::Random, PoolPolicy::RoundRobin, PoolPolicy::SmartIdle];

    pub fn name(self) -> &'static str {
        match self {
            PoolPolicy::Random => "random",
            PoolPolicy::RoundRobin => "round_robin",
            PoolPolicy::SmartIdle => "smart_idle",
        }
    }
}

impl fmt::Display for PoolPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().replace('-', "_").as_str() {
            "random" => Ok(PoolPolicy::Random),
            "round_robin" | "rr" => Ok(PoolPolicy::RoundRobin),
            "smart_idle" => Ok(PoolPolicy::SmartIdle),
            other => Err(format!(
                "unknown pool policy `{other}` (random, round_robin, smart_idle)"
            )),
        }
    }
}

/// Windowed access counters of one pool. `ring[0]` is the window in progress,
/// `ring[1..4]` the three windows before it, newest first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRing(pub [u64; WINDOWS]);

impl WindowRing {
    pub fn current(&self) -> u64 {
        self.0[0]
    }

    /// Closes the current window: the oldest count is dropped and a fresh one opened.
    pub fn rotate(&mut self) {
        self.0.rotate_right(1);
        self.0[0] = 0;
    }

    /// Access factor at a window boundary: the window that is closing counts
    /// fully, the three before it with weight one third.
    pub fn access_factor(&self) -> f64 {
        let [new, o1, o2, o3] = self.0;
        new as f64 + (o1 + o2 + o3) as f64 / 3.0
    }

    /// Three times the access factor, exact.
    pub fn access_factor_x3(&self) -> u128 {
        let [new, o1, o2, o3] = self.0.map(u128::from);
        3 * new + o1 + o2 + o3
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    pub pool_id: u32,
    pub capacity_bytes: u64,
    pub allocated_bytes: u64,
    pub window_ring: WindowRing,
    pub lifetime_access_count: u64,
}

impl PoolState {
    pub fn new(pool_id: u32, capacity_bytes: u64) -> Self {
        Self {
            pool_id,
            capacity_bytes,
            allocated_bytes: 0,
            window_ring: WindowRing::default(),
            lifetime_access_count: 0,
        }
    }

    pub fn free_bytes(&self) -> u64 {
        self.capacity_bytes - self.allocated_bytes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkGrant {
    pub pool_id: u32,
    pub base_offset: u64,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantLogEntry {
    pub grant_index: u64,
    pub policy: PoolPolicy,
    pub pool: u32,
    pub node: u32,
    pub sim_time: Ps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no pool has {chunk_bytes} free bytes")]
pub struct OutOfMemory {
    pub chunk_bytes: u64,
}

/// m = ceil(log2 n), clamped to [1, n].
pub fn subset_size(n: usize) -> usize {
    assert!(n >= 1, "at least one pool required");
    let m = if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    };
    m.clamp(1, n)
}

/// Pool selection over a read-only view of pool state. `eligible` lists the
/// pools that can hold another chunk, in ascending id order.
pub fn smart_idle_choice(pools: &[PoolState], eligible: &[usize]) -> Option<usize> {
    if eligible.is_empty() {
        return None;
    }
    // Step 1: the m eligible pools with the least recent traffic.
    let m = subset_size(pools.len()).min(eligible.len());
    // Ranked on 3 x Af in integers: equal factors must tie exactly so the id breaks them.
    let mut by_af: Vec<(u128, usize)> = eligible
        .iter()
        .map(|&i| (pools[i].window_ring.access_factor_x3(), i))
        .collect();
    by_af.sort_unstable();
    // Step 2: least allocated within the subset.
    by_af[..m]
        .iter()
        .map(|&(_, i)| i)
        .min_by_key(|&i| (pools[i].allocated_bytes, i))
}

#[derive(Clone, Debug)]
pub struct Gmm {
    pools: Vec<PoolState>,
    policy: PoolPolicy,
    chunk_bytes: u64,
    rr_cursor: usize,
    rng: ChaCha8Rng,
    grants: Vec<GrantLogEntry>,
    denials: u64,
}

impl Gmm {
    pub fn new(pools: usize, capacity_bytes: u64, chunk_bytes: u64, policy: PoolPolicy, seed: u64) -> Self {
        assert!(pools >= 1, "at least one pool required");
        assert!(chunk_bytes > 0);
        Self {
            pools: (0..pools as u32).map(|i| PoolState::new(i, capacity_bytes)).collect(),
            policy,
            chunk_bytes,
            rr_cursor: pools - 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
            grants: Vec::new(),
            denials: 0,
        }
    }

    pub fn pools(&self) -> &[PoolState] {
        &self.pools
    }

    pub fn pools_mut(&mut self) -> &mut [PoolState] {
        &mut self.pools
    }

    pub fn policy(&self) -> PoolPolicy {
        self.policy
    }

    pub fn chunk_bytes(&self) -> u64 {
        self.chunk_bytes
    }

    pub fn rr_cursor(&self) -> usize {
        self.rr_cursor
    }

    pub fn set_rr_cursor(&mut self, cursor: usize) {
        assert!(cursor < self.pools.len());
        self.rr_cursor = cursor;
    }

    pub fn grant_log(&self) -> &[GrantLogEntry] {
        &self.grants
    }

    pub fn denials(&self) -> u64 {
        self.denials
    }

    pub fn record_pool_access(&mut self, pool_id: u32) {
        let pool = self
            .pools
            .get_mut(pool_id as usize)
            .unwrap_or_else(|| panic!("access to nonexistent pool {pool_id}"));
        pool.window_ring.0[0] += 1;
        pool.lifetime_access_count += 1;
    }

    pub fn rotate_windows(&mut self) {
        for p in &mut self.pools {
            p.window_ring.rotate();
        }
    }

    fn eligible(&self) -> Vec<usize> {
        self.pools
            .iter()
            .enumerate()
            .filter(|(_, p)| p.free_bytes() >= self.chunk_bytes)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn select_pool_random(&mut self) -> Option<usize> {
        let eligible = self.eligible();
        if eligible.is_empty() {
            return None;
        }
        Some(eligible[self.rng.random_range(0..eligible.len())])
    }

    pub fn select_pool_round_robin(&mut self) -> Option<usize> {
        let n = self.pools.len();
        let next = (1..=n)
            .map(|k| (self.rr_cursor + k) % n)
            .find(|&i| self.pools[i].free_bytes() >= self.chunk_bytes)?;
        self.rr_cursor = next;
        Some(next)
    }

    pub fn select_pool_smart_idle(&self) -> Option<usize> {
        smart_idle_choice(&self.pools, &self.eligible())
    }

    pub fn select_pool(&mut self) -> Option<usize> {
        match self.policy {
            PoolPolicy::Random => self.select_pool_random(),
            PoolPolicy::RoundRobin => self.select_pool_round_robin(),
            PoolPolicy::SmartIdle => self.select_pool_smart_idle(),
        }
    }

    /// Grants one chunk to `node_id`. Every grant closes the current access
    /// window in all pools; denials leave the windows untouched.
    pub fn allocate_chunk(&mut self, node_id: u32, now: Ps) -> Result<ChunkGrant, OutOfMemory> {
        let Some(pool) = self.select_pool() else {
            self.denials += 1;
            return Err(OutOfMemory {
                chunk_bytes: self.chunk_bytes,
            });
        };
        let state = &mut self.pools[pool];
        let grant = ChunkGrant {
            pool_id: state.pool_id,
            base_offset: state.allocated_bytes,
            size: self.chunk_bytes,
        };
        state.allocated_bytes += self.chunk_bytes;
        self.rotate_windows();
        self.grants.push(GrantLogEntry {
            grant_index: self.grants.len() as u64,
            policy: self.policy,
            pool: grant.pool_id,
            node: node_id,
            sim_time: now,
        });
        Ok(grant)
    }
}
