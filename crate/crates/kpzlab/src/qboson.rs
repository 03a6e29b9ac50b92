//! Colored q-Boson model on `ℤ≤0 × ⟦1, N+M⟧`.
//!
//! Arrow `σ(r)` enters row `r ∈ ⟦1,N⟧` from `−∞`; every arrow leaves through the
//! top of column 0. Rows `1..=N` carry spectral parameter `u = 1`, rows
//! `N+1..=N+M` carry `u = z`.
//!
//! A configuration is stored as its sequence of *cuts*: the horizontal colors
//! crossing between two neighbouring columns (one entry per row). Every arrow
//! crosses every cut, vertical stacks are recovered by conservation, and all
//! cuts far to the left equal the frozen word `f = (σ(1..N), 0^M)`. Column
//! weights then form a transfer matrix on cut words; arrows only move up, so
//! the matrix is triangular in the potential `Σ rows` and partition functions
//! are solved by substitution.

use crate::error::{domain, invalid, Error, Result};
use crate::randomness::CounterRng;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

/// Field used for weights: `f64` for sampling, [`BigRational`] for identities.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_ratio(n: i64, d: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_ratio(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Parse `0.37`, `-1.5`, `37/100` or an integer into an exact rational.
pub fn parse_exact(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, den);
    Ok(if neg { -r } else { r })
}

/// Best rational with denominator ≤ 10^9 for a float input (exact for decimals
/// with ≤ 9 digits).
pub fn exact_from_f64(x: f64) -> BigRational {
    let den = 1_000_000_000i64;
    BigRational::new(BigInt::from((x * den as f64).round() as i64), BigInt::from(den))
}

fn powi<S: Scalar>(x: &S, e: i64) -> S {
    let mut out = S::one();
    for _ in 0..e {
        out = out * x.clone();
    }
    out
}

// ---------------------------------------------------------------------------
// Vertex weights

/// `L_u(A, i; B, j)`; colors `1..=n`, `0` is no arrow, `a[c−1]` counts color
/// `c`. Non-conserving inputs have weight 0.
pub fn weight_l<S: Scalar>(u: &S, q: &S, a: &[i64], i: usize, b: &[i64], j: usize) -> Result<S> {
    if a.iter().chain(b).any(|&c| c < 0) {
        return domain("arrow counts must be nonnegative");
    }
    if a.len() != b.len() || i > a.len() || j > a.len() {
        return invalid("color index outside ⟦0, N⟧");
    }
    for c in 1..=a.len() {
        if a[c - 1] + (i == c) as i64 != b[c - 1] + (j == c) as i64 {
            return Ok(S::zero());
        }
    }
    Ok(weight_l_unchecked(u, q, a, i, j))
}

/// Weight assuming conservation; `a` is the incoming stack.
fn weight_l_unchecked<S: Scalar>(u: &S, q: &S, a: &[i64], i: usize, j: usize) -> S {
    let above = |c: usize| a[c..].iter().sum::<i64>();
    match (i, j) {
        (_, 0) => S::one(),
        (i, j) if j > i => u.clone() * (S::one() - powi(q, a[j - 1])) * powi(q, above(j)),
        (i, j) if j == i => u.clone() * powi(q, above(i)),
        _ => S::zero(),
    }
}

/// Stochastic six-vertex weight `R_z(a, i; b, j)`; `a`/`b` vertical in/out,
/// `i`/`j` horizontal in/out, `0` the lowest color.
pub fn weight_r<S: Scalar>(q: &S, z: &S, a: usize, i: usize, b: usize, j: usize) -> S {
    let conserved = (a == b && i == j) || (a == j && i == b);
    if !conserved {
        return S::zero();
    }
    if a == i {
        return S::one();
    }
    let one = S::one();
    let den = one.clone() - q.clone() * z.clone();
    match (a > i, b == a) {
        (true, true) => q.clone() * (one - z.clone()) / den,
        (true, false) => (one - q.clone()) / den,
        (false, true) => (one - z.clone()) / den,
        (false, false) => z.clone() * (one - q.clone()) / den,
    }
}

fn shifted(a: &[i64], add: usize, sub: usize) -> Option<Vec<i64>> {
    let mut k = a.to_vec();
    if add > 0 {
        k[add - 1] += 1;
    }
    if sub > 0 {
        k[sub - 1] -= 1;
    }
    k.iter().all(|&c| c >= 0).then_some(k)
}

/// Boundary data of the three-vertex Yang–Baxter identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YbBoundary {
    pub a1: usize,
    pub i1: usize,
    pub b2: usize,
    pub j2: usize,
    pub big_i: Vec<i64>,
    pub big_j: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YbResult<S> {
    pub lhs: S,
    pub rhs: S,
    /// False when the boundary violates total conservation (both sides 0).
    pub compatible: bool,
}

impl<S: Scalar> YbResult<S> {
    pub fn residual(&self) -> f64 {
        (self.lhs.to_f64() - self.rhs.to_f64()).abs()
    }
}

/// Both sides of
/// `Σ R_{y/x}(a1,i1;b1,j1) L_x(I,j1;K,j2) L_y(K,b1;J,b2)
///  = Σ L_y(I,a1;K,b1) L_x(K,i1;J,j1) R_{y/x}(b1,j1;b2,j2)`,
/// summed over the internal edges `(b1, j1, K)`.
pub fn yang_baxter_check<S: Scalar>(q: &S, x: &S, y: &S, bd: &YbBoundary) -> Result<YbResult<S>> {
    let n = bd.big_i.len();
    if bd.big_j.len() != n || [bd.a1, bd.i1, bd.b2, bd.j2].iter().any(|&c| c > n) {
        return invalid("boundary colors outside ⟦0, N⟧");
    }
    if bd.big_i.iter().chain(&bd.big_j).any(|&c| c < 0) {
        return domain("arrow counts must be nonnegative");
    }
    let total = |v: &[i64], e: &[usize]| {
        let mut t = v.to_vec();
        for &c in e {
            if c > 0 {
                t[c - 1] += 1;
            }
        }
        t
    };
    if total(&bd.big_i, &[bd.a1, bd.i1]) != total(&bd.big_j, &[bd.b2, bd.j2]) {
        return Ok(YbResult { lhs: S::zero(), rhs: S::zero(), compatible: false });
    }
    let z = y.clone() / x.clone();
    let mut lhs = S::zero();
    let mut rhs = S::zero();
    for b1 in 0..=n {
        for j1 in 0..=n {
            if let Some(k) = shifted(&bd.big_i, j1, bd.j2) {
                let r = weight_r(q, &z, bd.a1, bd.i1, b1, j1);
                if !r.is_zero() {
                    let w = r * weight_l(x, q, &bd.big_i, j1, &k, bd.j2)? * weight_l(y, q, &k, b1, &bd.big_j, bd.b2)?;
                    lhs = lhs + w;
                }
            }
            if let Some(k) = shifted(&bd.big_i, bd.a1, b1) {
                let r = weight_r(q, &z, b1, j1, bd.b2, bd.j2);
                if !r.is_zero() {
                    let w = weight_l(y, q, &bd.big_i, bd.a1, &k, b1)? * weight_l(x, q, &k, bd.i1, &bd.big_j, j1)? * r;
                    rhs = rhs + w;
                }
            }
        }
    }
    Ok(YbResult { lhs, rhs, compatible: true })
}

/// Random conserving boundary with `n` colors and `|I| ≤ max_arrows`.
pub fn random_yb_boundary(rng: &mut CounterRng, n: usize, max_arrows: i64) -> YbBoundary {
    let pick = |rng: &mut CounterRng, k: usize| ((rng.uniform() * k as f64) as usize).min(k - 1);
    loop {
        let total = pick(rng, max_arrows as usize + 1) as i64;
        let mut big_i = vec![0i64; n];
        for _ in 0..total {
            big_i[pick(rng, n)] += 1;
        }
        let a1 = pick(rng, n + 1);
        let i1 = pick(rng, n + 1);
        let b2 = pick(rng, n + 1);
        let j2 = pick(rng, n + 1);
        let mut big_j = big_i.clone();
        for (c, d) in [(a1, 1), (i1, 1), (b2, -1), (j2, -1)] {
            if c > 0 {
                big_j[c - 1] += d;
            }
        }
        if big_j.iter().all(|&c| c >= 0) {
            return YbBoundary { a1, i1, b2, j2, big_i, big_j };
        }
    }
}

/// `ρ_τ(A)`: counts after merging colors through `tau` (`tau[0] = 0`).
pub fn merge_counts(a: &[i64], tau: &[usize]) -> Vec<i64> {
    let m = tau.iter().copied().max().unwrap_or(0);
    let mut out = vec![0i64; m];
    for (c, &k) in a.iter().enumerate() {
        let t = tau[c + 1];
        if t > 0 {
            out[t - 1] += k;
        }
    }
    out
}

fn check_tau(tau: &[usize], n: usize) -> Result<()> {
    if tau.len() != n + 1 || tau[0] != 0 {
        return invalid("tau must map ⟦0,N⟧ with tau(0) = 0");
    }
    if tau[1..].iter().any(|&t| t == 0) || tau.windows(2).any(|w| w[0] > w[1]) {
        return invalid("tau must be nondecreasing with tau⁻¹(0) = {0}");
    }
    Ok(())
}

/// `|Σ_{(B,j): τ(j)=λ, ρ_τ(B)=B̃} L_u(A,i;B,j) − L_u(ρ_τ(A), τ(i); B̃, λ)|`,
/// returned as the pair of sides.
pub fn color_merge_sides<S: Scalar>(
    q: &S,
    u: &S,
    a: &[i64],
    i: usize,
    merged_b: &[i64],
    lambda: usize,
    tau: &[usize],
) -> Result<(S, S)> {
    check_tau(tau, a.len())?;
    if i > a.len() {
        return invalid("incoming color outside ⟦0, N⟧");
    }
    let mut lhs = S::zero();
    for j in 0..=a.len() {
        if tau[j] != lambda {
            continue;
        }
        if let Some(b) = shifted(a, i, j) {
            if merge_counts(&b, tau) == merged_b {
                lhs = lhs + weight_l(u, q, a, i, &b, j)?;
            }
        }
    }
    let rhs = weight_l(u, q, &merge_counts(a, tau), tau[i], merged_b, lambda)?;
    Ok((lhs, rhs))
}

pub fn color_merge_weight_check<S: Scalar>(
    q: &S,
    u: &S,
    a: &[i64],
    i: usize,
    merged_b: &[i64],
    lambda: usize,
    tau: &[usize],
) -> Result<f64> {
    let (l, r) = color_merge_sides(q, u, a, i, merged_b, lambda, tau)?;
    Ok((l.to_f64() - r.to_f64()).abs())
}

// ---------------------------------------------------------------------------
// Model and transfer matrix

/// One cut: `word[r−1]` is the color crossing row `r` (0 = none).
pub type Word = Vec<u8>;

#[derive(Debug, Clone)]
pub struct QBoson<S> {
    pub n: usize,
    pub m: usize,
    pub sigma: Vec<u8>,
    pub q: S,
    pub z: S,
    colors: usize,
}

impl<S: Scalar> QBoson<S> {
    /// `sigma[r−1]` is the color entering row `r`; colors must lie in `⟦1, N⟧`.
    pub fn new(n: usize, m: usize, sigma: Vec<u8>, q: S, z: S) -> Result<Self> {
        if n == 0 || m == 0 {
            return domain("N and M must be ≥ 1");
        }
        if sigma.len() != n || sigma.iter().any(|&c| c == 0 || c as usize > n) {
            return invalid("sigma must map ⟦1,N⟧ into ⟦1,N⟧");
        }
        let (qf, zf) = (q.to_f64(), z.to_f64());
        if !(0.0..1.0).contains(&qf) {
            return domain("q must lie in [0, 1)");
        }
        if !(zf > 0.0 && zf < 1.0) {
            return domain("z must lie in (0, 1)");
        }
        let colors = *sigma.iter().max().unwrap() as usize;
        Ok(Self { n, m, sigma, q, z, colors })
    }

    /// `σ(r) = r`.
    pub fn packed(n: usize, m: usize, q: S, z: S) -> Result<Self> {
        Self::new(n, m, (1..=n as u8).collect(), q, z)
    }

    pub fn rows(&self) -> usize {
        self.n + self.m
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    /// Spectral parameter of row `r` (1-based).
    pub fn u(&self, r: usize) -> S {
        if r <= self.n {
            S::one()
        } else {
            self.z.clone()
        }
    }

    pub fn frozen(&self) -> Word {
        let mut f = self.sigma.clone();
        f.resize(self.rows(), 0);
        f
    }

    /// `((1 − qz)/(1 − z))^{NM}`.
    pub fn closed_form(&self) -> S {
        let base = (S::one() - self.q.clone() * self.z.clone()) / (S::one() - self.z.clone());
        powi(&base, (self.n * self.m) as i64)
    }

    /// Vertex records `(A, i, B, j)` of a column with horizontal input `input`
    /// and output `output`, stack empty at the bottom; `None` if the stack
    /// would go negative.
    pub fn column_records(&self, input: &[u8], output: &[u8]) -> Option<Vec<VertexRecord>> {
        let mut stack = vec![0i64; self.colors];
        let mut out = Vec::with_capacity(input.len());
        for (&i, &j) in input.iter().zip(output) {
            let a = stack.clone();
            if i > 0 {
                stack[i as usize - 1] += 1;
            }
            if j > 0 {
                stack[j as usize - 1] -= 1;
                if stack[j as usize - 1] < 0 {
                    return None;
                }
            }
            out.push(VertexRecord { a, i, b: stack.clone(), j });
        }
        Some(out)
    }

    /// Product of the vertex weights of one column whose top must be empty
    /// (every column left of 0). Zero for inconsistent pairs.
    pub fn column_weight(&self, input: &[u8], output: &[u8]) -> S {
        let Some(recs) = self.column_records(input, output) else { return S::zero() };
        if recs.last().is_some_and(|r| r.b.iter().any(|&c| c != 0)) {
            return S::zero();
        }
        let mut w = S::one();
        for (r, rec) in recs.iter().enumerate() {
            w = w * weight_l_unchecked(&self.u(r + 1), &self.q, &rec.a, rec.i as usize, rec.j as usize);
            if w.is_zero() {
                break;
            }
        }
        w
    }

    /// All outputs of a column with empty top, with nonzero weights.
    pub fn column_transitions(&self, input: &[u8]) -> Vec<(Word, S)> {
        let mut out = Vec::new();
        let mut word = vec![0u8; input.len()];
        let mut stack = vec![0i64; self.colors];
        self.dfs_column(input, 0, &mut stack, &mut word, S::one(), &mut out);
        out
    }

    fn dfs_column(&self, input: &[u8], r: usize, stack: &mut Vec<i64>, word: &mut Word, w: S, out: &mut Vec<(Word, S)>) {
        let rows = input.len();
        let held: i64 = stack.iter().sum();
        if r == rows {
            if held == 0 {
                out.push((word.clone(), w));
            }
            return;
        }
        if held > (rows - r) as i64 {
            return;
        }
        let i = input[r] as usize;
        let u = self.u(r + 1);
        for j in 0..=self.colors {
            if j > 0 && j != i && stack[j - 1] == 0 {
                continue;
            }
            let v = weight_l_unchecked(&u, &self.q, stack, i, j);
            if v.is_zero() {
                continue;
            }
            if i > 0 {
                stack[i - 1] += 1;
            }
            if j > 0 {
                stack[j - 1] -= 1;
            }
            word[r] = j as u8;
            self.dfs_column(input, r + 1, stack, word, w.clone() * v, out);
            if j > 0 {
                stack[j - 1] += 1;
            }
            if i > 0 {
                stack[i - 1] -= 1;
            }
        }
        word[r] = 0;
    }

    pub fn transfer_matrix(&self) -> Result<TransferMatrix<S>> {
        TransferMatrix::build(self)
    }

    /// The same model with weights converted to `f64`.
    pub fn to_f64_model(&self) -> QBoson<f64> {
        QBoson {
            n: self.n,
            m: self.m,
            sigma: self.sigma.clone(),
            q: self.q.to_f64(),
            z: self.z.to_f64(),
            colors: self.colors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub a: Vec<i64>,
    pub i: u8,
    pub b: Vec<i64>,
    pub j: u8,
}

/// Upper bound on the number of cut words the transfer matrix may hold.
pub const MAX_STATES: usize = 50_000;

/// Sparse column transfer matrix on the cut words reachable from `f`.
#[derive(Debug, Clone)]
pub struct TransferMatrix<S> {
    pub states: Vec<Word>,
    pub index: HashMap<Word, usize>,
    /// `next[s]` lists `(s', T(s, s'))` with nonzero weight.
    pub next: Vec<Vec<(usize, S)>>,
    /// Index of the frozen word.
    pub frozen: usize,
    /// States sorted by `Σ rows of arrows` (transitions never decrease it).
    pub order: Vec<usize>,
}

fn potential(w: &[u8]) -> usize {
    w.iter().enumerate().filter(|p| *p.1 > 0).map(|p| p.0).sum()
}

impl<S: Scalar> TransferMatrix<S> {
    fn build(model: &QBoson<S>) -> Result<Self> {
        let f = model.frozen();
        let mut states = vec![f.clone()];
        let mut index = HashMap::from([(f, 0usize)]);
        let mut next = Vec::new();
        let mut k = 0;
        while k < states.len() {
            let mut row = Vec::new();
            for (w, v) in model.column_transitions(&states[k]) {
                let id = match index.get(&w) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= MAX_STATES {
                            return Err(Error::Resource(format!("more than {MAX_STATES} cut words")));
                        }
                        states.push(w.clone());
                        index.insert(w, states.len() - 1);
                        states.len() - 1
                    }
                };
                row.push((id, v));
            }
            next.push(row);
            k += 1;
        }
        let mut order: Vec<usize> = (0..states.len()).collect();
        order.sort_by_key(|&s| (potential(&states[s]), s));
        for (s, row) in next.iter().enumerate() {
            for (t, _) in row {
                if *t != s && potential(&states[*t]) <= potential(&states[s]) {
                    return invalid("transfer matrix is not triangular in the row potential");
                }
            }
        }
        Ok(Self { states, index, next, frozen: 0, order })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `v ↦ vT`.
    pub fn step(&self, v: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); v.len()];
        for (s, row) in self.next.iter().enumerate() {
            if v[s].is_zero() {
                continue;
            }
            for (t, w) in row {
                out[*t] = out[*t].clone() + v[s].clone() * w.clone();
            }
        }
        out
    }

    /// `e_f T^k` for `k = 0..=k_max`.
    pub fn forward(&self, k_max: usize) -> Vec<Vec<S>> {
        let mut v = vec![S::zero(); self.len()];
        v[self.frozen] = S::one();
        let mut out = vec![v];
        for _ in 0..k_max {
            let nv = self.step(out.last().unwrap());
            out.push(nv);
        }
        out
    }

    /// Weight of all configurations whose activity lies in `⟦−K, 0⟧`.
    pub fn partition_truncated(&self, k: usize) -> S {
        let mut v = vec![S::zero(); self.len()];
        v[self.frozen] = S::one();
        for _ in 0..k {
            v = self.step(&v);
        }
        v.into_iter().fold(S::zero(), |a, b| a + b)
    }

    /// Weight of all configurations with a given cut entering column 0
    /// (`v(f) = 1`; other states by forward substitution along `order`).
    pub fn cut_weights(&self) -> Result<Vec<S>> {
        let mut v = vec![S::zero(); self.len()];
        v[self.frozen] = S::one();
        let mut incoming: Vec<Vec<(usize, S)>> = vec![Vec::new(); self.len()];
        for (s, row) in self.next.iter().enumerate() {
            for (t, w) in row {
                incoming[*t].push((s, w.clone()));
            }
        }
        for &t in &self.order {
            if t == self.frozen {
                continue;
            }
            let mut acc = S::zero();
            let mut stay = S::zero();
            for (s, w) in &incoming[t] {
                if *s == t {
                    stay = w.clone();
                } else {
                    acc = acc + v[*s].clone() * w.clone();
                }
            }
            let den = S::one() - stay;
            if den.to_f64() <= 0.0 {
                return domain("self-loop weight ≥ 1 off the frozen word: the measure is not normalizable");
            }
            v[t] = acc / den;
        }
        Ok(v)
    }

    pub fn partition_exact(&self) -> Result<S> {
        Ok(self.cut_weights()?.into_iter().fold(S::zero(), |a, b| a + b))
    }

    /// Law of the cut entering column 0.
    pub fn exit_law(&self) -> Result<Vec<(Word, S)>> {
        let v = self.cut_weights()?;
        let z = v.iter().cloned().fold(S::zero(), |a, b| a + b);
        Ok(self.states.iter().cloned().zip(v.into_iter().map(|w| w / z.clone())).collect())
    }

    /// Joint law of the cuts `(c_{−k}, …, c_{−1})` as state-index tuples
    /// (`k ≥ 1`), exact; support limited to `MAX_STATES` tuples.
    pub fn cut_law(&self, k: usize) -> Result<Vec<(Vec<usize>, S)>> {
        if k == 0 {
            return domain("need at least one cut");
        }
        let v = self.cut_weights()?;
        let z = v.iter().cloned().fold(S::zero(), |a, b| a + b);
        let mut paths: Vec<(Vec<usize>, S)> =
            v.iter().enumerate().filter(|p| !p.1.is_zero()).map(|(s, w)| (vec![s], w.clone())).collect();
        for _ in 1..k {
            let mut nxt = Vec::new();
            for (p, w) in &paths {
                for (t, x) in &self.next[*p.last().unwrap()] {
                    let mut q = p.clone();
                    q.push(*t);
                    nxt.push((q, w.clone() * x.clone()));
                }
            }
            if nxt.len() > MAX_STATES * 20 {
                return Err(Error::Resource("joint cut law too large".into()));
            }
            paths = nxt;
        }
        Ok(paths.into_iter().map(|(p, w)| (p, w / z.clone())).collect())
    }

    /// Smallest `K` with `Z − Z_K ≤ tol` (searched up to `k_max`).
    pub fn cutoff_for(&self, tol: f64, k_max: usize) -> Result<usize> {
        let z = self.partition_exact()?.to_f64();
        let mut v = vec![0.0f64; self.len()];
        v[self.frozen] = 1.0;
        let tf = self.to_f64();
        for k in 0..=k_max {
            if z - v.iter().sum::<f64>() <= tol {
                return Ok(k);
            }
            v = tf.step(&v);
        }
        Err(Error::Resource(format!("truncation tail above {tol:e} at K = {k_max}")))
    }

    pub fn to_f64(&self) -> TransferMatrix<f64> {
        TransferMatrix {
            states: self.states.clone(),
            index: self.index.clone(),
            next: self.next.iter().map(|r| r.iter().map(|(t, w)| (*t, w.to_f64())).collect()).collect(),
            frozen: self.frozen,
            order: self.order.clone(),
        }
    }

    /// Number of configurations with activity in `⟦−K, 0⟧` (saturating).
    pub fn count_truncated(&self, k: usize) -> u128 {
        let mut v = vec![0u128; self.len()];
        v[self.frozen] = 1;
        for _ in 0..k {
            let mut nv = vec![0u128; self.len()];
            for (s, row) in self.next.iter().enumerate() {
                for (t, _) in row {
                    nv[*t] = nv[*t].saturating_add(v[s]);
                }
            }
            v = nv;
        }
        v.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }
}

// ---------------------------------------------------------------------------
// Configurations

/// A configuration with activity in `⟦−K, 0⟧`: `exits[i−1] = j_(−i, ·)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QBosonConfig {
    pub n: usize,
    pub m: usize,
    pub sigma: Vec<u8>,
    pub exits: Vec<Word>,
}

impl QBosonConfig {
    pub fn cutoff(&self) -> usize {
        self.exits.len()
    }

    pub fn frozen(&self) -> Word {
        let mut f = self.sigma.clone();
        f.resize(self.n + self.m, 0);
        f
    }

    /// `j_(−i, ·)` for `i ≥ 1`; the frozen word left of the cutoff.
    pub fn exit(&self, i: usize) -> Word {
        assert!(i >= 1, "column 0 has no horizontal exits");
        self.exits.get(i - 1).cloned().unwrap_or_else(|| self.frozen())
    }

    /// Vertex records of column `−i` (`i = 0` is the final column).
    pub fn vertex_records(&self, i: usize) -> Vec<VertexRecord> {
        let colors = *self.sigma.iter().max().unwrap_or(&1) as usize;
        let input = self.exit(i + 1);
        let output = if i == 0 { vec![0; input.len()] } else { self.exit(i) };
        let mut stack = vec![0i64; colors];
        let mut out = Vec::new();
        for (&a, &b) in input.iter().zip(&output) {
            let before = stack.clone();
            if a > 0 {
                stack[a as usize - 1] += 1;
            }
            if b > 0 {
                stack[b as usize - 1] -= 1;
            }
            out.push(VertexRecord { a: before, i: a, b: stack.clone(), j: b });
        }
        out
    }

    /// Product of all vertex weights (columns left of `−K` contribute 1).
    pub fn weight<S: Scalar>(&self, model: &QBoson<S>) -> S {
        let mut w = S::one();
        for i in 1..=self.cutoff() {
            w = w * model.column_weight(&self.exit(i + 1), &self.exit(i));
        }
        w
    }

    /// `L^{(k)}_i(y) = #{y' > y : j_(−i,y') ≥ k}` for `i = 1..=curves`.
    pub fn line_ensemble(&self, k: u8, curves: usize) -> LineEnsemble {
        let curves = (1..=curves).map(|i| heights(&self.exit(i), k)).collect();
        LineEnsemble { color: k, curves }
    }
}

/// `y ↦ #{y' > y : w_{y'} ≥ k}` on `⟦0, U⟧`.
pub fn heights(w: &[u8], k: u8) -> Vec<i64> {
    let mut out = vec![0i64; w.len() + 1];
    for y in (0..w.len()).rev() {
        out[y] = out[y + 1] + (w[y] >= k && w[y] > 0) as i64;
    }
    out
}

/// `(L^{(k)}_i(y))`: `curves[i−1][y]` for `y ∈ ⟦0, N+M⟧`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineEnsemble {
    pub color: u8,
    pub curves: Vec<Vec<i64>>,
}

impl LineEnsemble {
    pub fn curve(&self, i: usize) -> &[i64] {
        &self.curves[i - 1]
    }
}

/// The three basic properties: colors ordered, curves ordered, Bernoulli
/// increments in `{0, −1}`. Returns the first violation.
pub fn check_ensemble_properties(ensembles: &[LineEnsemble]) -> std::result::Result<(), String> {
    for e in ensembles {
        for (i, c) in e.curves.iter().enumerate() {
            if c.windows(2).any(|w| w[1] - w[0] != 0 && w[1] - w[0] != -1) {
                return Err(format!("color {} curve {} is not Bernoulli", e.color, i + 1));
            }
            if *c.last().unwrap() != 0 {
                return Err(format!("color {} curve {} nonzero at the top", e.color, i + 1));
            }
        }
        for (i, w) in e.curves.windows(2).enumerate() {
            if w[0].iter().zip(&w[1]).any(|(a, b)| a < b) {
                return Err(format!("color {} curves {} < {}", e.color, i + 1, i + 2));
            }
        }
    }
    for w in ensembles.windows(2) {
        for (c0, c1) in w[0].curves.iter().zip(&w[1].curves) {
            if c0.iter().zip(c1).any(|(a, b)| a < b) {
                return Err(format!("color {} below color {}", w[0].color, w[1].color));
            }
        }
    }
    Ok(())
}

/// Every configuration with activity in `⟦−K, 0⟧`, with its exact weight, in
/// lexicographic order of the cut sequence (read from column −1 leftwards).
pub fn enumerate<S: Scalar>(model: &QBoson<S>, k: usize, max_configs: u128) -> Result<Vec<(QBosonConfig, S)>> {
    if k == 0 {
        return domain("K must be ≥ 1");
    }
    let tm = model.transfer_matrix()?;
    let count = tm.count_truncated(k);
    if count > max_configs {
        return Err(Error::Resource(format!("{count} configurations exceed the limit {max_configs}")));
    }
    let mut prev: Vec<Vec<(usize, S)>> = vec![Vec::new(); tm.len()];
    for (s, row) in tm.next.iter().enumerate() {
        for (t, w) in row {
            prev[*t].push((s, w.clone()));
        }
    }
    // reachable-in-exactly-j-steps sets prune the backward search
    let mut reach = vec![vec![false; tm.len()]; k + 1];
    reach[0][tm.frozen] = true;
    for j in 0..k {
        for (s, row) in tm.next.iter().enumerate() {
            if reach[j][s] {
                for (t, _) in row {
                    reach[j + 1][*t] = true;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut path = Vec::with_capacity(k);
    let mut lasts: Vec<usize> = (0..tm.len()).filter(|&s| reach[k][s]).collect();
    lasts.sort_by(|a, b| tm.states[*a].cmp(&tm.states[*b]));
    for s in lasts {
        path.push(s);
        backtrack(&tm, &prev, &reach, k, S::one(), &mut path, &mut out, model);
        path.pop();
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn backtrack<S: Scalar>(
    tm: &TransferMatrix<S>,
    prev: &[Vec<(usize, S)>],
    reach: &[Vec<bool>],
    k: usize,
    w: S,
    path: &mut Vec<usize>,
    out: &mut Vec<(QBosonConfig, S)>,
    model: &QBoson<S>,
) {
    let depth = path.len();
    if depth == k {
        let first = *path.last().unwrap();
        let Some((_, t)) = tm.next[tm.frozen].iter().find(|p| p.0 == first) else { return };
        let exits = path.iter().map(|&s| tm.states[s].clone()).collect();
        out.push((QBosonConfig { n: model.n, m: model.m, sigma: model.sigma.clone(), exits }, w * t.clone()));
        return;
    }
    let cur = *path.last().unwrap();
    let mut opts: Vec<&(usize, S)> = prev[cur].iter().filter(|(s, _)| reach[k - depth][*s]).collect();
    opts.sort_by(|a, b| tm.states[a.0].cmp(&tm.states[b.0]));
    for (s, x) in opts {
        path.push(*s);
        backtrack(tm, prev, reach, k, w.clone() * x.clone(), path, out, model);
        path.pop();
    }
}

fn choose(weights: impl Iterator<Item = f64> + Clone, u: f64) -> usize {
    let total: f64 = weights.clone().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (idx, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = idx;
        if acc > target {
            return idx;
        }
    }
    last
}

/// Exact weight-proportional sampler on configurations with activity in
/// `⟦−K, 0⟧`, by backward sampling of the cut chain.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    pub n: usize,
    pub m: usize,
    pub sigma: Vec<u8>,
    pub k: usize,
    tm: TransferMatrix<f64>,
    prev: Vec<Vec<(usize, f64)>>,
    forward: Vec<Vec<f64>>,
}

impl ExactSampler {
    pub fn new<S: Scalar>(model: &QBoson<S>, k: usize) -> Result<Self> {
        if k == 0 {
            return domain("K must be ≥ 1");
        }
        let tm = model.transfer_matrix()?.to_f64();
        let mut prev = vec![Vec::new(); tm.len()];
        for (s, row) in tm.next.iter().enumerate() {
            for (t, w) in row {
                prev[*t].push((s, *w));
            }
        }
        let forward = tm.forward(k);
        Ok(Self { n: model.n, m: model.m, sigma: model.sigma.clone(), k, tm, prev, forward })
    }

    pub fn partition(&self) -> f64 {
        self.forward[self.k].iter().sum()
    }

    pub fn transfer(&self) -> &TransferMatrix<f64> {
        &self.tm
    }

    pub fn sample(&self, rng: &mut CounterRng) -> QBosonConfig {
        let mut exits = Vec::with_capacity(self.k);
        let mut s = choose(self.forward[self.k].iter().copied(), rng.uniform());
        exits.push(self.tm.states[s].clone());
        for i in 1..self.k {
            let a = &self.forward[self.k - i];
            let opts = &self.prev[s];
            let pick = choose(opts.iter().map(|(p, w)| a[*p] * w), rng.uniform());
            s = opts[pick].0;
            exits.push(self.tm.states[s].clone());
        }
        QBosonConfig { n: self.n, m: self.m, sigma: self.sigma.clone(), exits }
    }
}

/// One weight-proportional draw.
pub fn exact_sample<S: Scalar>(model: &QBoson<S>, k: usize, seed: u64) -> Result<QBosonConfig> {
    Ok(ExactSampler::new(model, k)?.sample(&mut CounterRng::new(seed)))
}

// ---------------------------------------------------------------------------
// Hall–Littlewood Gibbs kernels

/// `W(γ, f, g)` on a common interval; `f = None` is `+∞`, `g = None` is `−∞`.
/// Zero when ordering fails anywhere.
pub fn weight_factor<S: Scalar>(gamma: &[Vec<i64>], f: Option<&[i64]>, g: Option<&[i64]>, q: &S) -> S {
    let mut chain: Vec<&[i64]> = Vec::with_capacity(gamma.len() + 2);
    if let Some(f) = f {
        chain.push(f);
    }
    chain.extend(gamma.iter().map(|c| c.as_slice()));
    if let Some(g) = g {
        chain.push(g);
    }
    let mut w = S::one();
    for pair in chain.windows(2) {
        let delta: Vec<i64> = pair[0].iter().zip(pair[1]).map(|(a, b)| a - b).collect();
        if delta.iter().any(|&d| d < 0) {
            return S::zero();
        }
        for x in 1..delta.len() {
            if delta[x] == delta[x - 1] - 1 {
                w = w * (S::one() - powi(q, delta[x - 1]));
            }
        }
    }
    w
}

/// Bernoulli paths (increments in `{0, −1}`) of `len` steps from `from` to `to`.
pub fn bridges(from: i64, to: i64, len: usize) -> Vec<Vec<i64>> {
    let downs = from - to;
    if downs < 0 || downs > len as i64 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = vec![from];
    fn rec(cur: &mut Vec<i64>, left: usize, downs: i64, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        let h = *cur.last().unwrap();
        if (left as i64) > downs {
            cur.push(h);
            rec(cur, left - 1, downs, out);
            cur.pop();
        }
        if downs > 0 {
            cur.push(h - 1);
            rec(cur, left - 1, downs - 1, out);
            cur.pop();
        }
    }
    rec(&mut cur, len, downs, &mut out);
    out
}

/// Limit on the number of bridge tuples a Gibbs kernel enumerates.
pub const MAX_BRIDGE_TUPLES: usize = 2_000_000;

/// Exact conditional law of the top curves on `⟦a, b⟧` given their endpoints,
/// the curve above (`f`) and below (`g`): bridges reweighted by `W`.
pub fn hl_gibbs_law<S: Scalar>(
    top: &[Vec<i64>],
    f: Option<&[i64]>,
    g: Option<&[i64]>,
    q: &S,
) -> Result<Vec<(Vec<Vec<i64>>, S)>> {
    let len = top.first().map(|c| c.len()).unwrap_or(0);
    if len < 2 || top.iter().any(|c| c.len() != len) || f.is_some_and(|f| f.len() != len) || g.is_some_and(|g| g.len() != len)
    {
        return invalid("curves must share an interval of at least two points");
    }
    let options: Vec<Vec<Vec<i64>>> = top.iter().map(|c| bridges(c[0], c[len - 1], len - 1)).collect();
    let total: usize = options.iter().map(|o| o.len().max(1)).product();
    if total > MAX_BRIDGE_TUPLES {
        return Err(Error::Resource(format!("{total} bridge tuples")));
    }
    let mut law = Vec::new();
    let mut idx = vec![0usize; options.len()];
    if options.iter().any(|o| o.is_empty()) {
        return invalid("no Bernoulli bridge matches the endpoints");
    }
    loop {
        let tuple: Vec<Vec<i64>> = idx.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
        let w = weight_factor(&tuple, f, g, q);
        if !w.is_zero() {
            law.push((tuple, w));
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                let z = law.iter().fold(S::zero(), |a, p| a + p.1.clone());
                if law.is_empty() {
                    return invalid("no admissible bridge tuple");
                }
                return Ok(law.into_iter().map(|(t, w)| (t, w / z.clone())).collect());
            }
            idx[d] += 1;
            if idx[d] < options[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

pub fn hl_gibbs_resample(
    top: &[Vec<i64>],
    f: Option<&[i64]>,
    g: Option<&[i64]>,
    q: f64,
    rng: &mut CounterRng,
) -> Result<Vec<Vec<i64>>> {
    let law = hl_gibbs_law(top, f, g, &q)?;
    let i = choose(law.iter().map(|p| p.1), rng.uniform());
    Ok(law[i].0.clone())
}

/// Two-color cut word from the all-color and color-2 height curves on `⟦0, U⟧`.
pub fn word_from_heights(l1: &[i64], l2: &[i64]) -> Result<Word> {
    if l1.len() != l2.len() || l1.is_empty() {
        return invalid("curves must share ⟦0, U⟧");
    }
    let mut w = Vec::with_capacity(l1.len() - 1);
    for y in 1..l1.len() {
        let d1 = l1[y - 1] - l1[y];
        let d2 = l2[y - 1] - l2[y];
        w.push(match (d1, d2) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => return invalid(format!("inconsistent increments at row {y}")),
        });
    }
    Ok(w)
}

/// Exact conditional law of `L^{(2)}_k` given all of `L^{(1)}` and
/// `L^{(2)}_{≥k+1}`: admissible paths weighted by the column `−k` L-weights.
/// Two colors only.
pub fn colored_gibbs_law<S: Scalar>(
    model: &QBoson<S>,
    l1_k: &[i64],
    l1_k1: &[i64],
    l2_k1: &[i64],
) -> Result<Vec<(Vec<i64>, S)>> {
    if model.colors() > 2 {
        return invalid("the colored Gibbs kernel is implemented for two colors");
    }
    let u = model.rows();
    if [l1_k, l1_k1, l2_k1].iter().any(|c| c.len() != u + 1) {
        return invalid("curves must live on ⟦0, N+M⟧");
    }
    let input = word_from_heights(l1_k1, l2_k1)?;
    let mut law = Vec::new();
    for cand in bridges(l2_k1[0], 0, u) {
        let gap_ok = (1..=u).all(|y| {
            let d = (l1_k[y - 1] - cand[y - 1]) - (l1_k[y] - cand[y]);
            d == 0 || d == 1
        });
        if !gap_ok || cand.iter().zip(l2_k1).any(|(a, b)| a < b) {
            continue;
        }
        let Ok(output) = word_from_heights(l1_k, &cand) else { continue };
        let w = model.column_weight(&input, &output);
        if !w.is_zero() {
            law.push((cand, w));
        }
    }
    if law.is_empty() {
        return invalid("empty colored Gibbs support");
    }
    let z = law.iter().fold(S::zero(), |a, p| a + p.1.clone());
    Ok(law.into_iter().map(|(c, w)| (c, w / z.clone())).collect())
}

pub fn colored_gibbs_resample(
    model: &QBoson<f64>,
    l1_k: &[i64],
    l1_k1: &[i64],
    l2_k1: &[i64],
    rng: &mut CounterRng,
) -> Result<Vec<i64>> {
    let law = colored_gibbs_law(model, l1_k, l1_k1, l2_k1)?;
    let i = choose(law.iter().map(|p| p.1), rng.uniform());
    Ok(law[i].0.clone())
}

// ---------------------------------------------------------------------------
// Greedy (q = 0) release and Pitman error

/// `Ht_j(w, y) = #{y' > y : w_{y'} = j}` for `y ∈ ⟦0, U⟧`.
pub fn ht(w: &[u8], j: u8, y: usize) -> i64 {
    w.iter().skip(y).filter(|&&c| c == j).count() as i64
}

fn check_compatible(v: &[u8], x: &[u8]) -> Result<()> {
    if v.len() != x.len() {
        return invalid("incoming and outgoing words differ in length");
    }
    if x.iter().any(|&b| b > 1) {
        return invalid("outgoing indicators must be 0/1");
    }
    let (mut inn, mut out) = (0i64, 0i64);
    for (&a, &b) in v.iter().zip(x) {
        inn += (a > 0) as i64;
        out += b as i64;
        if out > inn {
            return invalid("incompatible pair: more arrows leave than have entered");
        }
    }
    if inn != out {
        return invalid("incompatible pair: arrow totals differ");
    }
    Ok(())
}

/// `w*`: every exit slot releases the highest color available (for two colors,
/// a 2-arrow whenever one is waiting).
pub fn q0_assign_colors(v: &[u8], x: &[u8]) -> Result<Word> {
    check_compatible(v, x)?;
    let colors = v.iter().copied().max().unwrap_or(0) as usize;
    let mut stack = vec![0i64; colors + 1];
    let mut w = Vec::with_capacity(v.len());
    for (&a, &b) in v.iter().zip(x) {
        if a > 0 {
            stack[a as usize] += 1;
        }
        if b == 1 {
            let c = (1..=colors).rev().find(|&c| stack[c] > 0).expect("compatibility guarantees an arrow");
            stack[c] -= 1;
            w.push(c as u8);
        } else {
            w.push(0);
        }
    }
    Ok(w)
}

/// `PE(w) = max_y (Ht_2(w, y) − Ht_2(w*, y))`.
pub fn pitman_error(w: &[u8], wstar: &[u8]) -> Result<i64> {
    if w.len() != wstar.len() {
        return invalid("words differ in length");
    }
    Ok((0..=w.len()).map(|y| ht(w, 2, y) - ht(wstar, 2, y)).max().unwrap_or(0))
}

/// `Val(v, x)` for colors in `{0, 1, 2}`.
pub fn valid_words(v: &[u8], x: &[u8]) -> Result<Vec<Word>> {
    check_compatible(v, x)?;
    if v.iter().any(|&c| c > 2) {
        return invalid("Val is defined for two colors");
    }
    let slots: Vec<usize> = (0..x.len()).filter(|&y| x[y] == 1).collect();
    let n2 = v.iter().filter(|&&c| c == 2).count();
    if slots.len() > 24 {
        return Err(Error::Resource("too many exit slots".into()));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << slots.len()) {
        if mask.count_ones() as usize != n2 {
            continue;
        }
        let mut w = vec![0u8; x.len()];
        for (b, &y) in slots.iter().enumerate() {
            w[y] = if mask >> b & 1 == 1 { 2 } else { 1 };
        }
        let ok = (0..x.len()).all(|y| (1..=2).all(|j| ht(&w, j, y) >= ht(v, j, y)));
        if ok {
            out.push(w);
        }
    }
    Ok(out)
}

/// Parse a sigma like `1,2,2` or `packed`.
pub fn parse_sigma(s: &str, n: usize) -> Result<Vec<u8>> {
    if s.trim() == "packed" {
        return Ok((1..=n as u8).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u8>().map_err(|e| Error::Invalid(format!("sigma entry {t:?}: {e}"))))
        .collect()
}

/// Absolute value as `f64` of an exact difference (helper for reports).
pub fn abs_diff<S: Scalar>(a: &S, b: &S) -> f64 {
    (a.clone() - b.clone()).to_f64().abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn l_weight_examples() {
        let (u, q) = (r(1, 1), r(1, 2));
        assert_eq!(weight_l(&u, &q, &[0, 0], 0, &[0, 0], 0).unwrap(), r(1, 1));
        assert_eq!(weight_l(&u, &q, &[2, 1], 0, &[1, 1], 1).unwrap(), r(3, 8));
        assert_eq!(weight_l(&u, &q, &[1, 0], 2, &[0, 1], 1).unwrap(), r(0, 1));
        assert!(weight_l(&u, &q, &[-1, 0], 0, &[-1, 0], 0).is_err());
    }

    #[test]
    fn yang_baxter_empty_and_single() {
        let q = r(0, 1);
        let bd = YbBoundary { a1: 0, i1: 0, b2: 0, j2: 0, big_i: vec![0], big_j: vec![0] };
        let res = yang_baxter_check(&r(1, 3), &r(1, 2), &r(1, 5), &bd).unwrap();
        assert_eq!(res.lhs, r(1, 1));
        assert_eq!(res.lhs, res.rhs);
        let bd = YbBoundary { a1: 1, i1: 0, b2: 0, j2: 1, big_i: vec![0], big_j: vec![0] };
        let res = yang_baxter_check(&q, &r(1, 2), &r(1, 5), &bd).unwrap();
        assert_eq!(res.lhs, res.rhs);
    }

    #[test]
    fn yang_baxter_random_exact() {
        let mut rng = CounterRng::new(3);
        for t in 0..60 {
            let n = 1 + t % 2;
            let bd = random_yb_boundary(&mut rng, n, 3);
            let q = r((rng.uniform() * 999.0) as i64 + 1, 1000);
            let x = r((rng.uniform() * 999.0) as i64 + 1, 1000);
            let y = r((rng.uniform() * 999.0) as i64 + 1, 1000);
            let res = yang_baxter_check(&q, &x, &y, &bd).unwrap();
            assert!(res.compatible);
            assert_eq!(res.lhs, res.rhs, "boundary {bd:?}");
        }
    }

    #[test]
    fn merge_identity_small() {
        let q = r(37, 100);
        let u = r(4, 5);
        let tau = [0, 1, 1, 2];
        for a in [[1i64, 1, 0], [0, 2, 1], [1, 0, 1]] {
            for i in 0..=3 {
                for lambda in 0..=2 {
                    for b0 in 0..=4 {
                        for b1 in 0..=4 {
                            let (l, rr) = color_merge_sides(&q, &u, &a, i, &[b0, b1], lambda, &tau).unwrap();
                            assert_eq!(l, rr, "A={a:?} i={i} B̃=({b0},{b1}) λ={lambda}");
                        }
                    }
                }
            }
        }
        assert!(color_merge_sides(&q, &u, &[0, 0], 0, &[0, 0], 0, &[0, 2, 1]).is_err());
    }

    #[test]
    fn single_arrow_partition() {
        let model = QBoson::packed(1, 1, r(1, 2), r(1, 2)).unwrap();
        let tm = model.transfer_matrix().unwrap();
        assert_eq!(tm.partition_exact().unwrap(), r(3, 2));
        let z40 = Scalar::to_f64(&tm.partition_truncated(40));
        assert!((z40 - 1.5).abs() < 1e-8);
        let configs = enumerate(&model, 3, 100).unwrap();
        assert_eq!(configs.len(), 4);
        let frozen = configs.iter().find(|c| c.0.exits.iter().all(|w| *w == vec![1, 0])).unwrap();
        assert_eq!(frozen.1, r(1, 1));
        for (c, w) in &configs {
            assert_eq!(c.weight(&model), *w);
        }
    }

    #[test]
    fn exact_partition_matches_closed_form() {
        for (n, m) in [(1, 2), (2, 1), (2, 2)] {
            let model = QBoson::packed(n, m, r(3, 10), r(1, 5)).unwrap();
            let tm = model.transfer_matrix().unwrap();
            assert_eq!(tm.partition_exact().unwrap(), model.closed_form(), "N={n} M={m}");
        }
        let model = QBoson::new(2, 2, vec![2, 1], r(7, 10), r(1, 2)).unwrap();
        assert_eq!(model.transfer_matrix().unwrap().partition_exact().unwrap(), model.closed_form());
    }

    #[test]
    fn ensemble_properties_on_enumeration() {
        let model = QBoson::packed(2, 2, 0.5f64, 0.4).unwrap();
        let configs = enumerate(&model, 4, 1_000_000).unwrap();
        for (c, _) in &configs {
            let ens: Vec<_> = (1..=2).map(|k| c.line_ensemble(k, 5)).collect();
            check_ensemble_properties(&ens).unwrap();
            assert_eq!(ens[0].curve(1)[4], 0);
            assert_eq!(ens[1].curve(1)[0], 1);
        }
    }

    #[test]
    fn weight_factor_figure() {
        let q = r(1, 3);
        let f = [0, 0, -1, -1, -1, -2];
        let gamma = vec![vec![0, -1, -2, -2, -3, -3]];
        let g = [-1, -2, -2, -3, -3, -3];
        let w = weight_factor(&gamma, Some(&f), Some(&g), &q);
        let one = r(1, 1);
        assert_eq!(w, (one.clone() - q.clone() * q.clone()) * (one.clone() - q.clone()) * (one - q));
        let crossing = vec![vec![0, -1, -2, -3, -4, -4]];
        assert!(weight_factor(&crossing, Some(&f), Some(&g), &r(1, 2)).is_zero());
    }

    #[test]
    fn stochastic_monotonicity_instance() {
        for k in 1..4i64 {
            let q = r(1, 2);
            let top = vec![vec![0, 0, -1]];
            let g = [-k, -k - 1, -k - 1];
            let law = hl_gibbs_law(&top, None, Some(&g), &q).unwrap();
            let hi = law.iter().find(|p| p.0[0] == vec![0, 0, -1]).unwrap().1.clone();
            let qk = powi(&q, k + 1);
            let one = r(1, 1);
            assert_eq!(hi, (one.clone() - qk.clone()) / (r(2, 1) - qk));
        }
    }

    #[test]
    fn greedy_and_pitman_error() {
        let w = q0_assign_colors(&[1, 0, 2, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(w, vec![0, 0, 2, 1]);
        assert_eq!(pitman_error(&[0, 0, 1, 2], &w).unwrap(), 1);
        assert!(q0_assign_colors(&[0, 1], &[1, 0]).is_err());
        let val = valid_words(&[1, 0, 2, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(val.len(), 2);
    }

    #[test]
    fn parse_exact_decimals() {
        assert_eq!(parse_exact("0.37").unwrap(), r(37, 100));
        assert_eq!(parse_exact("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_exact("-2").unwrap(), r(-2, 1));
        assert!(parse_exact("x").is_err());
    }
}
