//! Coordinate-addressed randomness.
//!
//! Every draw is a pure function of `(master_seed, domain, coordinates)`, so
//! two simulations that touch the same site or vertex see the same clock or
//! coin regardless of evaluation order, window size or initial condition.
//! That is what makes the basic coupling and color merging hold pathwise.

use crate::error::{domain, invalid, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamDomain {
    AsepClock,
    S6vCoin,
    Replica,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::AsepClock => 0x6173_6570_636c_6b31,
            StreamDomain::S6vCoin => 0x7336_7663_6f69_6e32,
            StreamDomain::Replica => 0x7265_706c_6963_6133,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_domain: StreamDomain,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_domain: StreamDomain) -> Self {
        Self { master_seed, stream_domain }
    }

    pub fn asep(master_seed: u64) -> Self {
        Self::new(master_seed, StreamDomain::AsepClock)
    }

    pub fn s6v(master_seed: u64) -> Self {
        Self::new(master_seed, StreamDomain::S6vCoin)
    }

    /// Key with the domain folded in; all per-coordinate hashing starts here.
    #[inline]
    pub fn key(&self) -> u64 {
        mix64(self.master_seed ^ self.stream_domain.tag())
    }
}

/// SplitMix64 finalizer (Steele, Lea, Flood). A bijection on u64 with full
/// avalanche, which is all a counter-based generator needs.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[inline]
pub fn hash2(key: u64, a: u64) -> u64 {
    mix64(key ^ mix64(a))
}

#[inline]
pub fn hash_coords(key: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(key, |h, &c| hash2(h, c))
}

/// Uniform on the open interval (0,1), 53 bits.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Seed for replica `index` of a batch driven by `master`.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    hash2(SeedSpec::new(master, StreamDomain::Replica).key(), index)
}

/// Accepts decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        t.parse::<u64>()
    };
    parsed.or_else(|_| invalid(format!("seed `{s}` is not a 64-bit decimal or hex integer")))
}

/// Sequential generator over a counter; used where a stream (not a coordinate)
/// is the natural unit, e.g. drawing exact samples from an enumerated law.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: SeedSpec::new(seed, StreamDomain::Replica).key(), counter: 0 }
    }

    pub fn uniform(&mut self) -> f64 {
        unit_open(self.next())
    }

    fn next(&mut self) -> u64 {
        let v = hash2(self.key, self.counter);
        self.counter += 1;
        v
    }
}

impl rand::RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

// ---------------------------------------------------------------------------
// Poisson clocks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockEvent {
    pub site: i64,
    pub direction: Direction,
    pub time: f64,
}

/// Cursor over the Poisson sequence of one (site, direction).
///
/// Time is cut into unit bins; inside bin `m` events are produced by
/// exponential gaps indexed `(site, dir, m, n)` starting from `m`. By
/// memorylessness this is exactly a Poisson process, every prefix is fixed
/// once drawn, and the sequence can be entered at any bin without replaying
/// the past.
#[derive(Debug, Clone)]
pub struct ClockCursor {
    key: u64,
    inv_rate: f64,
    bin: i64,
    n: u64,
    t: f64,
}

impl ClockCursor {
    pub fn new(seed: SeedSpec, site: i64, direction: Direction, rate: f64) -> Self {
        let dir = match direction {
            Direction::Left => 0u64,
            Direction::Right => 1u64,
        };
        let key = hash_coords(seed.key(), &[site as u64, dir]);
        let inv_rate = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
        Self { key, inv_rate, bin: 0, n: 0, t: 0.0 }
    }

    pub fn is_silent(&self) -> bool {
        self.inv_rate.is_infinite()
    }

    /// Next event strictly after the current cursor position.
    #[inline]
    pub fn next_event(&mut self) -> f64 {
        if self.is_silent() {
            return f64::INFINITY;
        }
        loop {
            let u = unit_open(hash2(hash2(self.key, self.bin as u64), self.n));
            self.n += 1;
            let t = self.t - u.ln() * self.inv_rate;
            if t < (self.bin + 1) as f64 {
                self.t = t;
                return t;
            }
            self.bin += 1;
            self.n = 0;
            self.t = self.bin as f64;
        }
    }

    /// First event strictly after `tau`, reusing the cursor if it is already
    /// positioned in the right place.
    pub fn next_after(&mut self, tau: f64) -> f64 {
        if self.is_silent() {
            return f64::INFINITY;
        }
        let b = tau.floor() as i64;
        if b > self.bin {
            self.bin = b;
            self.n = 0;
            self.t = b as f64;
        }
        loop {
            let t = self.next_event();
            if t > tau {
                return t;
            }
        }
    }
}

/// All events at `site` with time ≤ `horizon`, left at rate `q` and right at
/// rate 1, sorted by time.
pub fn clock_events(seed: SeedSpec, q: f64, site: i64, horizon: f64) -> Result<Vec<ClockEvent>> {
    if !(horizon > 0.0) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    let mut out = Vec::new();
    for (direction, rate) in [(Direction::Right, 1.0), (Direction::Left, q)] {
        let mut c = ClockCursor::new(seed, site, direction, rate);
        loop {
            let t = c.next_event();
            if t > horizon {
                break;
            }
            out.push(ClockEvent { site, direction, time: t });
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.direction.cmp(&b.direction)));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Vertex coins

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexCoins {
    pub x: i64,
    pub y: i64,
    pub up_coin: bool,
    pub right_coin: bool,
}

/// `b↑ = q(1−z)/(1−qz)` and `b→ = (1−z)/(1−qz)`.
pub fn coin_probabilities(q: f64, z: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    if !(z > 0.0 && z < 1.0) {
        return domain(format!("z must lie in (0,1), got {z}"));
    }
    let d = 1.0 - q * z;
    Ok((q * (1.0 - z) / d, (1.0 - z) / d))
}

/// Pre-keyed coin source for a sweep; avoids re-deriving the key per vertex.
#[derive(Debug, Clone, Copy)]
pub struct CoinSource {
    key: u64,
    pub b_up: f64,
    pub b_right: f64,
}

impl CoinSource {
    pub fn new(seed: SeedSpec, q: f64, z: f64) -> Result<Self> {
        let (b_up, b_right) = coin_probabilities(q, z)?;
        Ok(Self { key: seed.key(), b_up, b_right })
    }

    /// Raw probabilities, for callers that parameterize by (b↑, b→) directly.
    pub fn with_probabilities(seed: SeedSpec, b_up: f64, b_right: f64) -> Self {
        Self { key: seed.key(), b_up, b_right }
    }

    #[inline]
    fn uniform(&self, x: i64, y: i64, which: u64) -> f64 {
        unit_open(hash2(hash2(hash2(self.key, x as u64), y as u64), which))
    }

    #[inline]
    pub fn up(&self, x: i64, y: i64) -> bool {
        self.uniform(x, y, 0) < self.b_up
    }

    #[inline]
    pub fn right(&self, x: i64, y: i64) -> bool {
        self.uniform(x, y, 1) < self.b_right
    }
}

pub fn vertex_coins(seed: SeedSpec, q: f64, z: f64, x: i64, y: i64) -> Result<VertexCoins> {
    if x < 1 {
        return domain(format!("column index must be ≥ 1, got {x}"));
    }
    let src = CoinSource::new(seed, q, z)?;
    Ok(VertexCoins { x, y, up_coin: src.up(x, y), right_coin: src.right(x, y) })
}
