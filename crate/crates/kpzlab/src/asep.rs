//! Colored ASEP via the graphical construction.
//!
//! Each site carries a rate-1 right clock and a rate-q left clock. When the
//! right clock at `x` rings, the colors at `x, x+1` swap iff `color(x) >
//! color(x+1)`; the left clock does the same toward `x−1`. Clocks only matter
//! while their swap condition holds, so the event loop schedules a clock only
//! while it is *active* and re-enters its Poisson stream when it reactivates.
//! Skipped rings are exactly the no-op rings, so the trajectory is identical to
//! replaying every ring of every site.

use crate::error::{domain, invalid, Error, Result};
use crate::randomness::{ClockCursor, CounterRng, Direction, SeedSpec};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Finite window; sites beyond it are frozen and never swap.
    PaddedWindow,
    Ring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredConfiguration {
    /// Site label of `colors[0]`. Ring sites are labelled `lo..lo+n`.
    pub lo: i64,
    pub colors: Vec<i32>,
    pub mode: BoundaryMode,
}

impl ColoredConfiguration {
    /// Color `−k` at site `k` for `k ∈ ⟦−L, L⟧`.
    pub fn packed(half_width: i64) -> Self {
        let colors = (-half_width..=half_width).map(|k| -k as i32).collect();
        Self { lo: -half_width, colors, mode: BoundaryMode::PaddedWindow }
    }

    pub fn window(lo: i64, colors: Vec<i32>) -> Self {
        Self { lo, colors, mode: BoundaryMode::PaddedWindow }
    }

    pub fn ring(colors: Vec<i32>) -> Self {
        Self { lo: 0, colors, mode: BoundaryMode::Ring }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.colors.len() as i64 - 1
    }

    /// Largest `L` with `⟦−L, L⟧` inside the window.
    pub fn half_width(&self) -> i64 {
        (-self.lo).min(self.hi())
    }

    pub fn color_at(&self, site: i64) -> Option<i32> {
        let i = site - self.lo;
        (0..self.colors.len() as i64).contains(&i).then(|| self.colors[i as usize])
    }

    /// Sorted color multiset, for conservation checks.
    pub fn multiset(&self) -> Vec<i32> {
        let mut c = self.colors.clone();
        c.sort_unstable();
        c
    }
}

/// Half-width certified for observations within `radius` of the origin up to
/// time `t`: `⌈4t⌉ + radius + 8`.
pub fn safe_half_width(t: f64, radius: i64) -> i64 {
    (4.0 * t).ceil() as i64 + radius + 8
}

fn check_window(cfg: &ColoredConfiguration, t: f64, radius: i64) -> Result<()> {
    if cfg.mode == BoundaryMode::Ring {
        return Ok(());
    }
    let needed = safe_half_width(t, radius);
    if cfg.half_width() < needed {
        return Err(Error::WindowTooSmall { needed, have: cfg.half_width() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    pos: u32,
    dir: u8,
}

impl Eq for Pending {}

impl Ord for Pending {
    // Reversed so the std max-heap pops the earliest event; ties by site then
    // direction.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.pos.cmp(&self.pos))
            .then(other.dir.cmp(&self.dir))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const RIGHT: u8 = 0;
const LEFT: u8 = 1;

/// A trajectory in progress. Time only moves forward.
pub struct AsepSim {
    cfg: ColoredConfiguration,
    q: f64,
    time: f64,
    clocks: [Vec<ClockCursor>; 2],
    scheduled: [Vec<bool>; 2],
    heap: BinaryHeap<Pending>,
    /// Net count of higher-color moves across bond (i, i+1), rightward positive.
    current: Vec<i64>,
    swaps: u64,
}

impl AsepSim {
    /// Start `cfg` at time `start`; only rings after `start` are used.
    pub fn new(cfg: ColoredConfiguration, seed: SeedSpec, q: f64, start: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return domain(format!("q must lie in [0,1), got {q}"));
        }
        if start < 0.0 {
            return domain(format!("start time must be ≥ 0, got {start}"));
        }
        let n = cfg.len();
        if cfg.mode == BoundaryMode::Ring && n < 2 {
            return invalid("a ring needs at least two sites");
        }
        let mk = |dir: Direction, rate: f64| -> Vec<ClockCursor> {
            (0..n).map(|i| ClockCursor::new(seed, cfg.lo + i as i64, dir, rate)).collect()
        };
        let clocks = [mk(Direction::Right, 1.0), mk(Direction::Left, q)];
        let mut sim = Self {
            q,
            time: start,
            clocks,
            scheduled: [vec![false; n], vec![false; n]],
            heap: BinaryHeap::new(),
            current: vec![0; n],
            swaps: 0,
            cfg,
        };
        for i in 0..n {
            sim.wake(i, RIGHT);
            sim.wake(i, LEFT);
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn config(&self) -> &ColoredConfiguration {
        &self.cfg
    }

    pub fn into_config(self) -> ColoredConfiguration {
        self.cfg
    }

    pub fn swaps(&self) -> u64 {
        self.swaps
    }

    #[inline]
    fn target(&self, i: usize, dir: u8) -> Option<usize> {
        let n = self.cfg.colors.len();
        match (self.cfg.mode, dir) {
            (BoundaryMode::PaddedWindow, RIGHT) => (i + 1 < n).then_some(i + 1),
            (BoundaryMode::PaddedWindow, _) => i.checked_sub(1),
            (BoundaryMode::Ring, RIGHT) => Some((i + 1) % n),
            (BoundaryMode::Ring, _) => Some((i + n - 1) % n),
        }
    }

    #[inline]
    fn active(&self, i: usize, dir: u8) -> bool {
        match self.target(i, dir) {
            Some(j) => self.cfg.colors[i] > self.cfg.colors[j],
            None => false,
        }
    }

    #[inline]
    fn wake(&mut self, i: usize, dir: u8) {
        let d = dir as usize;
        if self.scheduled[d][i] || !self.active(i, dir) {
            return;
        }
        let t = self.clocks[d][i].next_after(self.time);
        if t.is_finite() {
            self.scheduled[d][i] = true;
            self.heap.push(Pending { time: t, pos: i as u32, dir });
        }
    }

    /// Run every ring with time ≤ `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return domain(format!("cannot run backwards from {} to {t}", self.time));
        }
        #[cfg(debug_assertions)]
        let before = self.cfg.multiset();
        let n = self.cfg.colors.len();
        while let Some(&ev) = self.heap.peek() {
            if ev.time > t {
                break;
            }
            self.heap.pop();
            let i = ev.pos as usize;
            self.scheduled[ev.dir as usize][i] = false;
            self.time = ev.time;
            if !self.active(i, ev.dir) {
                continue;
            }
            let j = self.target(i, ev.dir).expect("active clock has a target");
            self.cfg.colors.swap(i, j);
            self.swaps += 1;
            // Bond index and orientation of the higher color's move.
            let (bond, delta) = if ev.dir == RIGHT { (i, 1) } else { (j, -1) };
            self.current[bond] += delta;
            // The swap at bond (b, b+1) can change rights at b−1..=b+1 and
            // lefts at b..=b+2.
            let b = bond;
            let mode = self.cfg.mode;
            let around = move |k: isize| -> Option<usize> {
                let v = b as isize + k;
                match mode {
                    BoundaryMode::Ring => Some(v.rem_euclid(n as isize) as usize),
                    BoundaryMode::PaddedWindow => (0..n as isize).contains(&v).then_some(v as usize),
                }
            };
            for k in -1..=1 {
                if let Some(p) = around(k) {
                    self.wake(p, RIGHT);
                }
            }
            for k in 0..=2 {
                if let Some(p) = around(k) {
                    self.wake(p, LEFT);
                }
            }
        }
        self.time = t;
        #[cfg(debug_assertions)]
        debug_assert_eq!(before, self.cfg.multiset(), "color multiset changed");
        Ok(())
    }

    /// Net number of higher-over-lower exchanges across bond `(y, y+1)` since
    /// the start. For a 0/1 configuration this is the particle current.
    pub fn current_across(&self, y: i64) -> i64 {
        let i = y - self.cfg.lo;
        if i < 0 || i >= self.current.len() as i64 {
            0
        } else {
            self.current[i as usize]
        }
    }
}

/// State at time `t` started from `cfg` at time 0.
pub fn evolve(cfg: &ColoredConfiguration, seed: SeedSpec, q: f64, t: f64) -> Result<ColoredConfiguration> {
    evolve_from(cfg, seed, q, 0.0, t)
}

pub fn evolve_from(cfg: &ColoredConfiguration, seed: SeedSpec, q: f64, s: f64, t: f64) -> Result<ColoredConfiguration> {
    if t < s {
        return domain(format!("end time {t} precedes start {s}"));
    }
    let mut sim = AsepSim::new(cfg.clone(), seed, q, s)?;
    sim.advance_to(t)?;
    Ok(sim.into_config())
}

/// `#{z > y : color(z) ≥ −x}` within the window, with the certified-region
/// check for a configuration observed at time `t`.
pub fn colored_height(cfg: &ColoredConfiguration, x: i64, y: i64, t: f64) -> Result<i64> {
    let radius = x.abs().max(y.abs());
    check_window(cfg, t, radius).map_err(|e| match e {
        Error::WindowTooSmall { .. } => Error::OutOfRegion { x, y },
        e => e,
    })?;
    Ok(count_at_least(cfg, -(x as i32), y))
}

/// Same count without the window check.
pub fn count_at_least(cfg: &ColoredConfiguration, threshold: i32, y: i64) -> i64 {
    let start = (y + 1 - cfg.lo).max(0) as usize;
    cfg.colors.iter().skip(start).filter(|&&c| c >= threshold).count() as i64
}

// ---------------------------------------------------------------------------
// General initial profiles

/// Integer path on `⟦start, start + len − 1⟧` with increments in {0, −1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BernoulliPath {
    pub start: i64,
    pub values: Vec<i64>,
}

impl BernoulliPath {
    pub fn new(start: i64, values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("empty path");
        }
        if let Some(w) = values.windows(2).find(|w| !(w[1] - w[0] == 0 || w[1] - w[0] == -1)) {
            return invalid(format!("increment {} is not in {{0, -1}}", w[1] - w[0]));
        }
        Ok(Self { start, values })
    }

    /// `(x − z)·1{z ≤ x}` on `⟦lo, hi⟧`.
    pub fn step(x: i64, lo: i64, hi: i64) -> Self {
        Self { start: lo, values: (lo..=hi).map(|z| (x - z).max(0)).collect() }
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn at(&self, y: i64) -> Option<i64> {
        let i = y - self.start;
        (0..self.values.len() as i64).contains(&i).then(|| self.values[i as usize])
    }

    /// Occupation `h0(y−1) − h0(y)` for `y ∈ ⟦start+1, end⟧`.
    pub fn occupations(&self) -> Vec<i32> {
        self.values.windows(2).map(|w| (w[0] - w[1]) as i32).collect()
    }
}

/// Heights `y ↦ h(y)` on `⟦lo − 1, hi⟧` for one initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub start: i64,
    pub time: f64,
    pub values: Vec<i64>,
}

impl HeightProfile {
    pub fn at(&self, y: i64) -> Option<i64> {
        let i = y - self.start;
        (0..self.values.len() as i64).contains(&i).then(|| self.values[i as usize])
    }
}

/// Driver for a profile-started trajectory: occupations from `h0`, height
/// maintained as `h0(y) + net current across (y, y+1)`.
pub struct ProfileSim {
    h0: BernoulliPath,
    sim: AsepSim,
}

impl ProfileSim {
    pub fn new(h0: &BernoulliPath, s: f64, seed: SeedSpec, q: f64) -> Result<Self> {
        if h0.values.len() < 3 {
            return invalid("profile must cover at least two sites");
        }
        let cfg = ColoredConfiguration::window(h0.start + 1, h0.occupations());
        Ok(Self { h0: h0.clone(), sim: AsepSim::new(cfg, seed, q, s)? })
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        self.sim.advance_to(t)
    }

    pub fn height(&self, y: i64) -> Result<i64> {
        let base = self.h0.at(y).ok_or(Error::OutOfRegion { x: 0, y })?;
        Ok(base + self.sim.current_across(y))
    }

    pub fn profile(&self) -> HeightProfile {
        let values = (self.h0.start..=self.h0.end()).map(|y| self.height(y).unwrap()).collect();
        HeightProfile { start: self.h0.start, time: self.sim.time(), values }
    }

    pub fn config(&self) -> &ColoredConfiguration {
        self.sim.config()
    }
}

pub fn height_from_profile(h0: &BernoulliPath, s: f64, seed: SeedSpec, q: f64, y: i64, t: f64) -> Result<i64> {
    if t < s {
        return domain(format!("end time {t} precedes start {s}"));
    }
    let mut p = ProfileSim::new(h0, s, seed, q)?;
    p.advance_to(t)?;
    p.height(y)
}

/// Evolve several profiles (each with its own start time) under one set of
/// clocks and return their height profiles at time `t`.
pub fn basic_couple(inits: &[(BernoulliPath, f64)], seed: SeedSpec, q: f64, t: f64) -> Result<Vec<HeightProfile>> {
    if let Some((first, _)) = inits.first() {
        if inits.iter().any(|(h, _)| h.start != first.start || h.end() != first.end()) {
            return invalid("all initial profiles must share one window");
        }
    }
    inits
        .iter()
        .map(|(h0, s)| {
            if t < *s {
                return domain(format!("end time {t} precedes start {s}"));
            }
            let mut p = ProfileSim::new(h0, *s, seed, q)?;
            p.advance_to(t)?;
            Ok(p.profile())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Color merging

/// Apply `tau` sitewise after checking it is weakly monotone on the colors
/// present.
pub fn merge_colors(cfg: &ColoredConfiguration, tau: impl Fn(i32) -> i32) -> Result<ColoredConfiguration> {
    let mut present = cfg.multiset();
    present.dedup();
    if present.windows(2).any(|w| tau(w[0]) > tau(w[1])) {
        return invalid("color map is not weakly monotone");
    }
    Ok(ColoredConfiguration {
        lo: cfg.lo,
        colors: cfg.colors.iter().map(|&c| tau(c)).collect(),
        mode: cfg.mode,
    })
}

// ---------------------------------------------------------------------------
// Fast uncolored step sampler

/// Sites currently able to jump in one direction, with O(1) insert/remove.
struct ActiveSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl ActiveSet {
    const NONE: u32 = u32::MAX;

    fn new(n: usize) -> Self {
        Self { items: Vec::new(), pos: vec![Self::NONE; n] }
    }

    fn set(&mut self, i: usize, on: bool) {
        let p = self.pos[i];
        if on && p == Self::NONE {
            self.pos[i] = self.items.len() as u32;
            self.items.push(i as u32);
        } else if !on && p != Self::NONE {
            let last = self.items.pop().unwrap();
            if last as usize != i {
                self.items[p as usize] = last;
                self.pos[last as usize] = p;
            }
            self.pos[i] = Self::NONE;
        }
    }
}

/// `y ↦ h(0, 0; y, t)` on `⟦−radius, radius⟧` for the uncolored step at 0,
/// sampled by a Gillespie walk over the active bonds only.
///
/// Equal in law to the step projection of the clock-driven simulation but not
/// pathwise coupled to it; meant for one-point statistics where replicas are
/// independent and only the law matters.
pub fn step_height_sample(q: f64, t: f64, radius: i64, seed: u64) -> Result<HeightProfile> {
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    if !(t >= 0.0) || radius < 0 {
        return domain("need t ≥ 0 and radius ≥ 0");
    }
    // A tagged particle (hole) moves right (left) at most Poisson(t) steps.
    let w = (t + 8.0 * t.sqrt()).ceil() as i64 + radius + 16;
    let n = (2 * w + 1) as usize;
    let lo = -w;
    let mut occ: Vec<bool> = (lo..=w).map(|z| z <= 0).collect();
    let mut right = ActiveSet::new(n);
    let mut left = ActiveSet::new(n);
    let refresh = |occ: &[bool], right: &mut ActiveSet, left: &mut ActiveSet, i: usize| {
        right.set(i, i + 1 < n && occ[i] && !occ[i + 1]);
        left.set(i, i > 0 && occ[i] && !occ[i - 1]);
    };
    for i in 0..n {
        refresh(&occ, &mut right, &mut left, i);
    }
    let mut rng = CounterRng::new(seed);
    let mut time = 0.0;
    loop {
        let (r, l) = (right.items.len() as f64, q * left.items.len() as f64);
        let total = r + l;
        if total == 0.0 {
            break;
        }
        time -= rng.uniform().ln() / total;
        if time > t {
            break;
        }
        let u = rng.uniform() * total;
        let (from, to) = if u < r {
            let i = right.items[(u as usize).min(right.items.len() - 1)] as usize;
            (i, i + 1)
        } else {
            let k = (((u - r) / q) as usize).min(left.items.len() - 1);
            let i = left.items[k] as usize;
            (i, i - 1)
        };
        occ.swap(from, to);
        for i in from.min(to).saturating_sub(1)..=(from.max(to) + 1).min(n - 1) {
            refresh(&occ, &mut right, &mut left, i);
        }
    }
    // h(y) = particles strictly right of y; suffix sums from the right edge.
    let mut above = 0i64;
    let mut values = vec![0i64; (2 * radius + 1) as usize];
    for z in (lo..=w).rev() {
        if z <= radius && z >= -radius {
            values[(z + radius) as usize] = above;
        }
        above += occ[(z - lo) as usize] as i64;
    }
    Ok(HeightProfile { start: -radius, time: t, values })
}

// ---------------------------------------------------------------------------
// Ring proxy for stationary states

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingStart {
    /// Highest colors first, then lower ones, holes last.
    Blocked,
    /// Uniformly shuffled arrangement: already stationary for every one-color
    /// projection, so only the joint law needs burn-in.
    Shuffled,
}

/// `counts[c−1]` particles of color `c`; remaining sites hold color 0.
pub fn ring_start(counts: &[usize], ring_size: usize, start: RingStart, seed: u64) -> Result<ColoredConfiguration> {
    let total: usize = counts.iter().sum();
    if total > ring_size {
        return invalid(format!("{total} particles do not fit on a ring of {ring_size}"));
    }
    let mut colors = Vec::with_capacity(ring_size);
    for (c, &n) in counts.iter().enumerate().rev() {
        colors.extend(std::iter::repeat((c + 1) as i32).take(n));
    }
    colors.resize(ring_size, 0);
    if start == RingStart::Shuffled {
        use rand::seq::SliceRandom;
        colors.shuffle(&mut CounterRng::new(seed));
    }
    Ok(ColoredConfiguration::ring(colors))
}

/// Blocked start evolved for `burn_in`.
pub fn ring_stationary_sample(counts: &[usize], ring_size: usize, burn_in: f64, q: f64, seed: u64) -> Result<ColoredConfiguration> {
    if burn_in < 0.0 {
        return domain("burn-in must be ≥ 0");
    }
    let cfg = ring_start(counts, ring_size, RingStart::Blocked, seed)?;
    evolve(&cfg, SeedSpec::asep(seed), q, burn_in)
}

pub fn default_burn_in(ring_size: usize) -> f64 {
    20.0 * ring_size as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_identity() {
        let c = ColoredConfiguration::packed(20);
        assert_eq!(evolve(&c, SeedSpec::asep(1), 0.3, 0.0).unwrap(), c);
    }

    #[test]
    fn packed_heights_at_time_zero() {
        let c = ColoredConfiguration::packed(30);
        assert_eq!(colored_height(&c, 3, 1, 0.0).unwrap(), 2);
        for x in -5..=5 {
            for y in -5..=5 {
                assert_eq!(colored_height(&c, x, y, 0.0).unwrap(), (x - y).max(0));
            }
        }
    }

    #[test]
    fn packed_evolution_conserves_colors() {
        let c = ColoredConfiguration::packed(60);
        let e = evolve(&c, SeedSpec::asep(5), 0.4, 10.0).unwrap();
        assert_eq!(c.multiset(), e.multiset());
        assert_ne!(c, e);
    }

    #[test]
    fn frozen_single_color_never_changes() {
        let c = ColoredConfiguration::window(-10, vec![4; 21]);
        assert_eq!(evolve(&c, SeedSpec::asep(2), 0.5, 30.0).unwrap(), c);
    }

    #[test]
    fn out_of_window_queries_fail() {
        let c = ColoredConfiguration::packed(20);
        assert!(matches!(colored_height(&c, 0, 0, 5.0), Err(Error::OutOfRegion { .. })));
    }

    #[test]
    fn profile_at_start_returns_h0() {
        let h0 = BernoulliPath::step(2, -30, 30);
        for y in -30..=30 {
            assert_eq!(height_from_profile(&h0, 1.5, SeedSpec::asep(4), 0.2, y, 1.5).unwrap(), h0.at(y).unwrap());
        }
    }

    #[test]
    fn non_bernoulli_profile_rejected() {
        assert!(BernoulliPath::new(0, vec![3, 2, 2, 3]).is_err());
        assert!(BernoulliPath::new(0, vec![3, 1]).is_err());
    }

    #[test]
    fn non_monotone_merge_rejected() {
        let c = ColoredConfiguration::packed(3);
        assert!(merge_colors(&c, |x| -x).is_err());
        assert_eq!(merge_colors(&c, |x| x).unwrap(), c);
    }

    #[test]
    fn overfull_ring_rejected() {
        assert!(ring_start(&[5, 6], 10, RingStart::Blocked, 0).is_err());
    }

    #[test]
    fn ring_conserves_counts() {
        let c = ring_stationary_sample(&[7, 3], 30, 50.0, 0.3, 8).unwrap();
        let count = |k| c.colors.iter().filter(|&&x| x == k).count();
        assert_eq!((count(2), count(1), count(0)), (3, 7, 20));
    }
}
