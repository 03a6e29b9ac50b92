//! Colored stochastic six-vertex model on `ℤ≥1 × ⟦bottom, ∞)`.
//!
//! Vertices are resolved column by column, bottom to top. Each vertex owns two
//! coins (`up`, `right`) from [`CoinSource`]; given the incoming colors
//! `(i, a)` (horizontal, vertical) the outgoing pair is
//!
//! * `i == a`: both pass straight through;
//! * otherwise the *higher* color keeps its direction iff its coin (`up` if it
//!   came in vertically, `right` if horizontally) is heads, else the two cross.
//!
//! A missing arrow is the color `−∞`, so the lone-arrow rule is the same rule
//! and merging colors commutes with sampling pathwise.

use crate::asep::BernoulliPath;
use crate::error::{domain, invalid, Error, Result};
use crate::randomness::{CoinSource, SeedSpec};
use serde::{Deserialize, Serialize};

/// Color of an empty edge.
pub const NO_ARROW: i32 = i32::MIN;

/// Outgoing `(horizontal, vertical)` colors at one vertex.
#[inline]
pub fn resolve_vertex(coins: &CoinSource, x: i64, y: i64, i: i32, a: i32) -> (i32, i32) {
    if i == a {
        return (i, a);
    }
    let keep = if a > i { coins.up(x, y) } else { coins.right(x, y) };
    if keep {
        (i, a)
    } else {
        (a, i)
    }
}

/// Rows that can be reached with probability above `1e−9`.
///
/// Per column the top arrow climbs one row plus a geometric excess with ratio
/// `b↑`, so the total excess over `T` columns is negative binomial:
/// `P(excess ≥ m) ≤ C(m+T−1, m)·b↑^m·(1−b↑)^T / (1 − ρ)` once the term ratio
/// `ρ` drops below one. The cap is `max_entry_row + T + m` for the first `m`
/// with `n` times that tail below `1e−9`.
pub fn row_cap(max_entry_row: i64, columns: i64, arrows: i64, b_up: f64) -> i64 {
    let t = columns.max(1);
    if b_up <= 0.0 {
        return max_entry_row + t + 1;
    }
    let target = (1e-9 / arrows.max(1) as f64).ln();
    let mut log_term = t as f64 * (-b_up).ln_1p();
    let mut m = 0i64;
    loop {
        let ratio = (t + m) as f64 / (m + 1) as f64 * b_up;
        if ratio < 1.0 && log_term - (1.0 - ratio).ln() <= target {
            break;
        }
        log_term += ratio.ln();
        m += 1;
    }
    max_entry_row + t + m.max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    /// Lowest row of the domain.
    pub bottom: i64,
    /// `(row, color)` for every entering arrow.
    pub sigma: Vec<(i64, i32)>,
    /// The arrows are the exits of this column and enter column `entry_time + 1`.
    pub entry_time: i64,
}

impl BoundaryCondition {
    /// `σ(k) = k` on `⟦−n, n⟧`.
    pub fn packed(n: i64) -> Self {
        Self { bottom: -n, sigma: (-n..=n).map(|k| (k, k as i32)).collect(), entry_time: 0 }
    }

    pub fn new(bottom: i64, sigma: Vec<(i64, i32)>, entry_time: i64) -> Result<Self> {
        let mut rows: Vec<i64> = sigma.iter().map(|p| p.0).collect();
        rows.sort_unstable();
        if rows.windows(2).any(|w| w[0] == w[1]) {
            return invalid("two arrows enter the same row");
        }
        if rows.first().is_some_and(|&r| r < bottom) {
            return invalid("an arrow enters below the domain");
        }
        if sigma.iter().any(|p| p.1 == NO_ARROW) {
            return invalid("entering arrows need a finite color");
        }
        if entry_time < 0 {
            return domain("entry time must be ≥ 0");
        }
        Ok(Self { bottom, sigma, entry_time })
    }

    pub fn max_row(&self) -> i64 {
        self.sigma.iter().map(|p| p.0).max().unwrap_or(self.bottom)
    }

    /// Parse `row color` pairs, one per line; `#` starts a comment.
    pub fn parse(text: &str, bottom: Option<i64>) -> Result<Self> {
        let mut sigma = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<i64> {
                s.ok_or(Error::Parse { line: n + 1, msg: "expected `row color`".into() })?
                    .parse()
                    .map_err(|e| Error::Parse { line: n + 1, msg: format!("{e}") })
            };
            let row = parse(it.next())?;
            let color = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse { line: n + 1, msg: "trailing tokens".into() });
            }
            sigma.push((row, color as i32));
        }
        let lo = sigma.iter().map(|p| p.0).min().unwrap_or(0);
        Self::new(bottom.unwrap_or(lo), sigma, 0)
    }
}

/// Colored field: horizontal exits of every column from `start` to `start + T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrowField {
    pub q: f64,
    pub z: f64,
    pub seed: u64,
    pub bottom: i64,
    pub cap: i64,
    pub start: i64,
    /// `columns[c][r − bottom]` is `j_(start + c, r)`; `columns[0]` is the boundary.
    pub columns: Vec<Vec<i32>>,
}

/// Sample columns `entry_time + 1 ..= entry_time + t_max`.
pub fn sample(boundary: &BoundaryCondition, q: f64, z: f64, t_max: i64, cap: Option<i64>, seed: u64) -> Result<ArrowField> {
    let coins = CoinSource::new(SeedSpec::s6v(seed), q, z)?;
    if t_max < 0 {
        return domain("t_max must be ≥ 0");
    }
    let cap = cap.unwrap_or_else(|| row_cap(boundary.max_row(), t_max, boundary.sigma.len() as i64, coins.b_up));
    if cap < boundary.max_row() {
        return invalid("row cap below the highest entering arrow");
    }
    let height = (cap - boundary.bottom + 1) as usize;
    let mut col0 = vec![NO_ARROW; height];
    for &(r, c) in &boundary.sigma {
        col0[(r - boundary.bottom) as usize] = c;
    }
    let mut columns = Vec::with_capacity(t_max as usize + 1);
    columns.push(col0);
    for c in 1..=t_max {
        let x = boundary.entry_time + c;
        let next = sweep_column(&coins, x, boundary.bottom, cap, columns.last().unwrap())?;
        columns.push(next);
    }
    Ok(ArrowField { q, z, seed, bottom: boundary.bottom, cap, start: boundary.entry_time, columns })
}

fn sweep_column(coins: &CoinSource, x: i64, bottom: i64, cap: i64, prev: &[i32]) -> Result<Vec<i32>> {
    let top = prev.iter().rposition(|&c| c != NO_ARROW);
    let mut out = vec![NO_ARROW; prev.len()];
    let Some(top) = top else { return Ok(out) };
    let mut carry = NO_ARROW;
    let mut r = 0usize;
    while r <= top || carry != NO_ARROW {
        if r >= prev.len() {
            return Err(Error::CapExceeded { cap, column: x });
        }
        let (j, b) = resolve_vertex(coins, x, bottom + r as i64, prev[r], carry);
        debug_assert!({
            let (mut inn, mut outp) = ([prev[r], carry], [j, b]);
            inn.sort_unstable();
            outp.sort_unstable();
            inn == outp
        });
        out[r] = j;
        carry = b;
        r += 1;
    }
    Ok(out)
}

impl ArrowField {
    pub fn end(&self) -> i64 {
        self.start + self.columns.len() as i64 - 1
    }

    fn column(&self, t: i64) -> Result<&[i32]> {
        if t < self.start || t > self.end() {
            return domain(format!("column {t} was not sampled ({}..={})", self.start, self.end()));
        }
        Ok(&self.columns[(t - self.start) as usize])
    }

    /// `j_(t, y)`; rows above the cap are empty.
    pub fn exit(&self, t: i64, y: i64) -> Result<i32> {
        let col = self.column(t)?;
        if y < self.bottom {
            return Err(Error::OutOfRegion { x: t, y });
        }
        Ok(col.get((y - self.bottom) as usize).copied().unwrap_or(NO_ARROW))
    }

    /// `#{k > y : j_(t,k) ≥ x}`.
    pub fn colored_height(&self, x: i64, y: i64, t: i64) -> Result<i64> {
        let col = self.column(t)?;
        let from = (y + 1 - self.bottom).max(0) as usize;
        let x = x.clamp(i32::MIN as i64 + 1, i32::MAX as i64) as i32;
        Ok(col.iter().skip(from).filter(|&&c| c != NO_ARROW && c >= x).count() as i64)
    }

    /// Vertical exits `b_(t, ·)` of column `t ≥ start + 1`, recovered from
    /// conservation.
    pub fn vertical_column(&self, t: i64) -> Result<Vec<i32>> {
        if t <= self.start {
            return domain("the boundary column has no vertices");
        }
        let prev = self.column(t - 1)?;
        let cur = self.column(t)?;
        let mut carry = NO_ARROW;
        let mut out = Vec::with_capacity(cur.len());
        for (&i, &j) in prev.iter().zip(cur) {
            let b = if j == i { carry } else { i };
            debug_assert!(j == i || j == carry);
            out.push(b);
            carry = b;
        }
        Ok(out)
    }

    /// Apply a weakly monotone map to every arrow (`−∞` stays `−∞`).
    pub fn merge_colors(&self, tau: impl Fn(i32) -> i32) -> Result<ArrowField> {
        let mut present: Vec<i32> = self.columns[0].iter().copied().filter(|&c| c != NO_ARROW).collect();
        present.sort_unstable();
        present.dedup();
        if present.windows(2).any(|w| tau(w[0]) > tau(w[1])) {
            return invalid("color map is not weakly monotone");
        }
        let map = |c: i32| if c == NO_ARROW { c } else { tau(c) };
        Ok(ArrowField {
            columns: self.columns.iter().map(|col| col.iter().map(|&c| map(c)).collect()).collect(),
            ..self.clone()
        })
    }

    /// Arrows of color `≥ threshold`, as an uncolored field.
    pub fn uncolored(&self, threshold: i32) -> UncoloredField {
        let columns = self
            .columns
            .iter()
            .map(|col| {
                let rows = col
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c != NO_ARROW && c >= threshold)
                    .map(|(r, _)| self.bottom + r as i64);
                Blocks::from_rows(rows)
            })
            .collect();
        UncoloredField { q: self.q, z: self.z, seed: self.seed, bottom: self.bottom, cap: self.cap, start: self.start, columns }
    }
}

/// Merge boundary colors with `tau` before sampling.
pub fn merge_boundary(b: &BoundaryCondition, tau: impl Fn(i32) -> i32) -> BoundaryCondition {
    BoundaryCondition {
        sigma: b.sigma.iter().filter(|p| tau(p.1) != NO_ARROW).map(|&(r, c)| (r, tau(c))).collect(),
        ..b.clone()
    }
}

// ---------------------------------------------------------------------------
// Uncolored (two-color) fields, stored as occupied-row intervals.

/// Sorted disjoint non-adjacent intervals `[lo, hi]` of occupied rows.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Blocks(pub Vec<(i64, i64)>);

impl Blocks {
    pub fn from_rows(rows: impl IntoIterator<Item = i64>) -> Self {
        let mut b = Blocks::default();
        for r in rows {
            b.push_row(r);
        }
        b
    }

    /// Append a row above everything stored so far.
    #[inline]
    pub fn push_row(&mut self, r: i64) {
        self.push(r, r);
    }

    #[inline]
    fn push(&mut self, lo: i64, hi: i64) {
        if lo > hi {
            return;
        }
        match self.0.last_mut() {
            Some(last) if last.1 + 1 >= lo => last.1 = last.1.max(hi),
            _ => self.0.push((lo, hi)),
        }
    }

    pub fn count(&self) -> i64 {
        self.0.iter().map(|(a, b)| b - a + 1).sum()
    }

    /// Occupied rows strictly above `y`.
    pub fn count_above(&self, y: i64) -> i64 {
        self.0.iter().map(|&(a, b)| (b - a.max(y + 1) + 1).max(0)).sum()
    }

    pub fn contains(&self, r: i64) -> bool {
        self.0.iter().any(|&(a, b)| a <= r && r <= b)
    }

    pub fn top(&self) -> Option<i64> {
        self.0.last().map(|p| p.1)
    }

    pub fn rows(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().flat_map(|&(a, b)| a..=b)
    }
}

/// One column of the uncolored model in `O(#blocks)` expected work: with no
/// arrow coming from below, the bottom arrows of a block keep going right
/// until one turns up; that arrow then rides through the rest of the block
/// (pass-through vertices) and climbs the gap above until its `up` coin fails.
pub fn block_column(coins: &CoinSource, x: i64, cap: i64, input: &Blocks) -> Result<Blocks> {
    let mut out = Blocks(Vec::with_capacity(input.0.len() + 1));
    let mut carry = false;
    let mut cur = i64::MIN;
    for &(a, b) in &input.0 {
        if carry {
            let mut r = cur;
            while r < a {
                if !coins.up(x, r) {
                    out.push_row(r);
                    carry = false;
                    break;
                }
                r += 1;
            }
        }
        if carry {
            out.push(a, b);
        } else {
            let mut r = a;
            while r <= b && coins.right(x, r) {
                r += 1;
            }
            out.push(a, r - 1);
            if r <= b {
                carry = true;
                out.push(r + 1, b);
            }
        }
        cur = b + 1;
    }
    if carry {
        let mut r = cur;
        loop {
            if r > cap {
                return Err(Error::CapExceeded { cap, column: x });
            }
            if !coins.up(x, r) {
                out.push_row(r);
                break;
            }
            r += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncoloredField {
    pub q: f64,
    pub z: f64,
    pub seed: u64,
    pub bottom: i64,
    pub cap: i64,
    pub start: i64,
    pub columns: Vec<Blocks>,
}

impl UncoloredField {
    /// Evolve `initial` (exits of column `start`) for `t_max` columns.
    pub fn sample(initial: Blocks, bottom: i64, start: i64, q: f64, z: f64, t_max: i64, cap: Option<i64>, seed: u64) -> Result<Self> {
        let coins = CoinSource::new(SeedSpec::s6v(seed), q, z)?;
        Self::sample_with(&coins, initial, bottom, start, t_max, cap, seed, q, z)
    }

    #[allow(clippy::too_many_arguments)]
    fn sample_with(coins: &CoinSource, initial: Blocks, bottom: i64, start: i64, t_max: i64, cap: Option<i64>, seed: u64, q: f64, z: f64) -> Result<Self> {
        if initial.0.first().is_some_and(|p| p.0 < bottom) {
            return invalid("an arrow lies below the domain");
        }
        if t_max < 0 {
            return domain("t_max must be ≥ 0");
        }
        let top = initial.top().unwrap_or(bottom);
        let cap = cap.unwrap_or_else(|| row_cap(top, t_max, initial.count(), coins.b_up));
        let mut columns = Vec::with_capacity(t_max as usize + 1);
        columns.push(initial);
        for c in 1..=t_max {
            let next = block_column(coins, start + c, cap, columns.last().unwrap())?;
            columns.push(next);
        }
        Ok(Self { q, z, seed, bottom, cap, start, columns })
    }

    pub fn end(&self) -> i64 {
        self.start + self.columns.len() as i64 - 1
    }

    pub fn column(&self, t: i64) -> Result<&Blocks> {
        if t < self.start || t > self.end() {
            return domain(format!("column {t} was not sampled ({}..={})", self.start, self.end()));
        }
        Ok(&self.columns[(t - self.start) as usize])
    }

    /// `#{k > y : j_(t,k) = 1}`.
    pub fn height(&self, y: i64, t: i64) -> Result<i64> {
        Ok(self.column(t)?.count_above(y))
    }

    /// Dense 0/1 horizontal exits of column `t` over `⟦bottom, top⟧`.
    pub fn dense(&self, t: i64, top: i64) -> Result<Vec<bool>> {
        let mut v = vec![false; (top - self.bottom + 1).max(0) as usize];
        for r in self.column(t)?.rows() {
            if r <= top {
                v[(r - self.bottom) as usize] = true;
            }
        }
        Ok(v)
    }
}

/// Arrows for a height profile: one at `k` wherever `h0(k−1) − h0(k) = 1`.
pub fn profile_arrows(h0: &BernoulliPath) -> Result<Blocks> {
    if *h0.values.last().unwrap() != 0 {
        return invalid("initial profile must end at 0 (eventually zero)");
    }
    Ok(Blocks::from_rows(
        h0.values.windows(2).enumerate().filter(|(_, w)| w[0] - w[1] == 1).map(|(k, _)| h0.start + 1 + k as i64),
    ))
}

/// Profile whose arrows fill `⟦x, n⟧` on the domain `⟦−n, ∞)`: the
/// uncolored view of the packed field at threshold `x`.
pub fn packed_step(x: i64, n: i64) -> BernoulliPath {
    BernoulliPath { start: -n - 1, values: (-n - 1..=n).map(|z| (n - z.max(x - 1)).max(0)).collect() }
}

/// `(x − z)·1{−n−1 ≤ z ≤ x}`: arrows on `⟦−n, x⟧`.
pub fn lower_step(x: i64, n: i64) -> BernoulliPath {
    let hi = x.max(-n - 1) + 1;
    BernoulliPath { start: -n - 1, values: (-n - 1..=hi).map(|z| (x - z).max(0)).collect() }
}

/// Field for the profile `h0` started at column `s`, under the coins of `seed`.
pub fn field_from_profile(h0: &BernoulliPath, s: i64, q: f64, z: f64, t: i64, seed: u64) -> Result<UncoloredField> {
    if t < s {
        return domain(format!("end column {t} precedes start {s}"));
    }
    UncoloredField::sample(profile_arrows(h0)?, h0.start + 1, s, q, z, t - s, None, seed)
}

pub fn height_general(h0: &BernoulliPath, s: i64, q: f64, z: f64, seed: u64, y: i64, t: i64) -> Result<i64> {
    field_from_profile(h0, s, q, z, t, seed)?.height(y, t)
}

// ---------------------------------------------------------------------------
// Pairing of two coupled fields

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPairing {
    pub column: i64,
    /// Horizontal exits present in both fields.
    pub coupled: i64,
    /// Exits present only in the first / only in the second field.
    pub only_first: i64,
    pub only_second: i64,
    /// Vertices where one field goes straight through horizontally and the
    /// other straight through vertically.
    pub overtakes: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub columns: Vec<ColumnPairing>,
    /// Rows where the horizontal exits differ, per column.
    pub discrepancies: Vec<(i64, i64)>,
}

impl Pairing {
    pub fn uncoupled(&self) -> i64 {
        self.columns.iter().map(|c| c.only_first + c.only_second).sum()
    }

    pub fn overtakes(&self) -> i64 {
        self.columns.iter().map(|c| c.overtakes).sum()
    }

    /// Discrepancies inside `⟦x0, x1⟧ × ⟦y0, y1⟧`.
    pub fn discrepancies_in(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> usize {
        self.discrepancies.iter().filter(|&&(x, y)| (x0..=x1).contains(&x) && (y0..=y1).contains(&y)).count()
    }
}

/// Edge-level comparison of two fields sampled under the same coins.
pub fn pair_trajectories(f1: &UncoloredField, f2: &UncoloredField) -> Result<Pairing> {
    if f1.seed != f2.seed || f1.q != f2.q || f1.z != f2.z {
        return invalid("fields were not sampled under the same coins");
    }
    let bottom = f1.bottom.min(f2.bottom);
    let top = f1.cap.max(f2.cap);
    let lo = f1.start.max(f2.start);
    let hi = f1.end().min(f2.end());
    let dense = |f: &UncoloredField, t: i64| -> Result<Vec<bool>> {
        let mut v = vec![false; (top - bottom + 1) as usize];
        for r in f.column(t)?.rows() {
            v[(r - bottom) as usize] = true;
        }
        Ok(v)
    };
    let mut out = Pairing::default();
    let mut prev = if lo <= hi { Some((dense(f1, lo)?, dense(f2, lo)?)) } else { None };
    for t in lo..=hi {
        let cur = (dense(f1, t)?, dense(f2, t)?);
        let mut cp = ColumnPairing { column: t, ..Default::default() };
        let (mut c1, mut c2) = (false, false);
        for r in 0..cur.0.len() {
            let (j1, j2) = (cur.0[r], cur.1[r]);
            match (j1, j2) {
                (true, true) => cp.coupled += 1,
                (true, false) => cp.only_first += 1,
                (false, true) => cp.only_second += 1,
                _ => {}
            }
            if j1 != j2 {
                out.discrepancies.push((t, bottom + r as i64));
            }
            if t > lo {
                let p = prev.as_ref().unwrap();
                let (i1, i2) = (p.0[r], p.1[r]);
                let b1 = c1 as i32 + i1 as i32 - j1 as i32 == 1;
                let b2 = c2 as i32 + i2 as i32 - j2 as i32 == 1;
                let horiz = |a: bool, i: bool, b: bool, j: bool| !a && i && !b && j;
                let vert = |a: bool, i: bool, b: bool, j: bool| a && !i && b && !j;
                if (horiz(c1, i1, b1, j1) && vert(c2, i2, b2, j2)) || (vert(c1, i1, b1, j1) && horiz(c2, i2, b2, j2)) {
                    cp.overtakes += 1;
                }
                c1 = b1;
                c2 = b2;
            }
        }
        out.columns.push(cp);
        prev = Some(cur);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// ASEP degeneration

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerationParams {
    pub t: f64,
    pub delta: f64,
    pub q: f64,
}

impl DegenerationParams {
    pub fn new(t: f64, delta: f64, q: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("δ must lie in (0,1), got {delta}"));
        }
        if !(0.0..1.0).contains(&q) {
            return domain(format!("q must lie in [0,1), got {q}"));
        }
        if !(t > 0.0) {
            return domain("t must be positive");
        }
        Ok(Self { t, delta, q })
    }

    /// `z = (1−δ)/(1−δq)`, so that `b→ = δ` and `b↑ = qδ`.
    pub fn z(&self) -> f64 {
        (1.0 - self.delta) / (1.0 - self.delta * self.q)
    }

    /// `N = M = ⌊t/δ⌋`.
    pub fn n(&self) -> i64 {
        (self.t / self.delta).floor() as i64
    }
}

/// `N + x + 1 − h(−x, 0; N − y − 1, N)`: the ASEP height read off the
/// six-vertex field.
pub fn asep_degeneration(p: &DegenerationParams, seed: u64, x: i64, y: i64) -> Result<i64> {
    asep_degeneration_at(p, seed, x, y, p.n())
}

/// Same proxy read at column `c` (row `c − y − 1`) with `N` fixed; column 0
/// is the packed initial data.
pub fn asep_degeneration_at(p: &DegenerationParams, seed: u64, x: i64, y: i64, c: i64) -> Result<i64> {
    let lim = (2.0 * p.t).floor() as i64;
    if x.abs() > lim || y.abs() > lim {
        return Err(Error::OutOfRegion { x, y });
    }
    let n = p.n();
    if c < 0 || c > n {
        return domain(format!("column {c} outside ⟦0, {n}⟧"));
    }
    // Colors ≥ −x sit on rows ⟦−x, N⟧; the rest merge into holes.
    let init = Blocks(vec![(-x, n)]);
    let f = UncoloredField::sample(init, -n, 0, p.q, p.z(), c, None, seed)?;
    Ok(n + x + 1 - f.height(c - y - 1, c)?)
}
