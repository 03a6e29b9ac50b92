//! Verification harness: empirical distributions, KS/TV statistics, the exact
//! identity suites, the matching test, Gibbs invariance, deterministic
//! inequality sweeps, and the statistical trend checks.
//!
//! Every test returns a [`TestReport`] with the statistic, its threshold,
//! the sample size and (for Monte Carlo statistics) a standard error.

use crate::asep::{self, AsepSim, BernoulliPath, ColoredConfiguration};
use crate::error::{domain, invalid, Error, Result};
use crate::lpp::{self, Environment};
use crate::qboson::{self, ExactSampler, QBoson, Scalar, TransferMatrix, Word};
use crate::randomness::{coin_probabilities, replica_seed, CounterRng, SeedSpec};
use crate::s6v::{self, row_cap, Blocks, BoundaryCondition, UncoloredField};
use crate::scaling::{self, ScalingParams, Variant};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};

// ---------------------------------------------------------------------------
// Distributions

/// Weighted point masses on the real line, support sorted and distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
    pub samples: u64,
    pub provenance: Option<String>,
}

impl EmpiricalDistribution {
    pub fn from_samples(xs: &[f64]) -> Self {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let mut support: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for x in v {
            if support.last() == Some(&x) {
                *weights.last_mut().unwrap() += 1.0;
            } else {
                support.push(x);
                weights.push(1.0);
            }
        }
        Self { support, weights, samples: xs.len() as u64, provenance: None }
    }

    pub fn from_weights(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut map: BTreeMap<OrdF64, f64> = BTreeMap::new();
        for (x, w) in pairs {
            if !(w >= 0.0) || !x.is_finite() {
                return invalid("weights must be nonnegative and values finite");
            }
            *map.entry(OrdF64(x)).or_default() += w;
        }
        let (support, weights) = map.into_iter().map(|(k, w)| (k.0, w)).unzip();
        Ok(Self { support, weights, samples: 0, provenance: None })
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = Some(p.into());
        self
    }

    /// Sum of weights; merging is addition, hence associative.
    pub fn merge(&self, other: &Self) -> Self {
        let pairs = self.support.iter().copied().zip(self.weights.iter().copied());
        let pairs = pairs.chain(other.support.iter().copied().zip(other.weights.iter().copied()));
        let mut out = Self::from_weights(pairs).expect("inputs were valid");
        out.samples = self.samples + other.samples;
        out.provenance = self.provenance.clone().or_else(|| other.provenance.clone());
        out
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty() || self.total() <= 0.0
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() / self.total()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support.iter().zip(&self.weights).map(|(x, w)| (x - m).powi(2) * w).sum::<f64>() / self.total()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.support.partition_point(|&s| s <= x);
        self.weights[..k].iter().sum::<f64>() / self.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

fn nonempty(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> Result<()> {
    if d1.is_empty() || d2.is_empty() {
        return invalid("empty distribution");
    }
    Ok(())
}

/// `sup_x |F1(x) − F2(x)|`.
pub fn ks_distance(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> Result<f64> {
    nonempty(d1, d2)?;
    let (t1, t2) = (d1.total(), d2.total());
    let (mut i, mut j) = (0, 0);
    let (mut f1, mut f2, mut best) = (0.0f64, 0.0f64, 0.0f64);
    while i < d1.support.len() || j < d2.support.len() {
        let x = match (d1.support.get(i), d2.support.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            _ => unreachable!(),
        };
        while i < d1.support.len() && d1.support[i] == x {
            f1 += d1.weights[i] / t1;
            i += 1;
        }
        while j < d2.support.len() && d2.support[j] == x {
            f2 += d2.weights[j] / t2;
            j += 1;
        }
        best = best.max((f1 - f2).abs());
    }
    Ok(best.min(1.0))
}

/// `½ Σ |p1 − p2|` over the union of supports.
pub fn tv_distance(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> Result<f64> {
    nonempty(d1, d2)?;
    let mut m: BTreeMap<OrdF64, (f64, f64)> = BTreeMap::new();
    for (x, w) in d1.support.iter().zip(&d1.weights) {
        m.entry(OrdF64(*x)).or_default().0 += w / d1.total();
    }
    for (x, w) in d2.support.iter().zip(&d2.weights) {
        m.entry(OrdF64(*x)).or_default().1 += w / d2.total();
    }
    Ok((0.5 * m.values().map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0))
}

/// TV between two (not necessarily normalized) laws on any ordered support.
pub fn tv_laws<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let (ta, tb) = (a.values().sum::<f64>(), b.values().sum::<f64>());
    let mut diff = 0.0;
    for (k, p) in a {
        diff += (p / ta - b.get(k).copied().unwrap_or(0.0) / tb).abs();
    }
    for (k, p) in b {
        if !a.contains_key(k) {
            diff += p / tb;
        }
    }
    0.5 * diff
}

/// Two-sample KS critical value at level `alpha`:
/// `sqrt(−½ ln(α/2)) · sqrt((n1 + n2)/(n1 n2))`.
pub fn ks_critical(n1: u64, n2: u64, alpha: f64) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    (-0.5 * (alpha / 2.0).ln()).sqrt() * ((a + b) / (a * b)).sqrt()
}

/// Two-column `value cdf` table, nondecreasing in both columns; `#` starts a
/// comment.
pub fn parse_cdf_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: n + 1, msg: msg.into() };
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| bad(&e.to_string())))
            .collect::<Result<_>>()?;
        let [x, f] = v[..] else { return Err(bad("expected two columns: value cdf")) };
        if !(0.0..=1.0).contains(&f) {
            return Err(bad("cdf outside [0, 1]"));
        }
        if rows.last().is_some_and(|&(px, pf)| x <= px || f < pf) {
            return Err(bad("rows must increase in value with a nondecreasing cdf"));
        }
        rows.push((x, f));
    }
    if rows.len() < 2 {
        return invalid("reference cdf needs at least two rows");
    }
    Ok(rows)
}

fn interp_cdf(table: &[(f64, f64)], x: f64) -> f64 {
    let k = table.partition_point(|p| p.0 <= x);
    if k == 0 {
        return 0.0;
    }
    if k == table.len() {
        return if x > table[k - 1].0 { 1.0 } else { table[k - 1].1 };
    }
    let ((x0, f0), (x1, f1)) = (table[k - 1], table[k]);
    f0 + (f1 - f0) * (x - x0) / (x1 - x0)
}

/// KS distance from an empirical law to a tabulated continuous CDF (read
/// linearly between rows, 0 below and 1 above the table).
pub fn ks_against_reference(d: &EmpiricalDistribution, table: &[(f64, f64)]) -> Result<f64> {
    if d.is_empty() || table.is_empty() {
        return invalid("empty distribution or reference");
    }
    let total = d.total();
    let mut below = 0.0;
    let mut best = 0.0f64;
    for (x, w) in d.support.iter().zip(&d.weights) {
        let f = interp_cdf(table, *x);
        best = best.max((f - below / total).abs());
        below += w;
        best = best.max((below / total - f).abs());
    }
    Ok(best)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, (v / n).sqrt())
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub parameters: Value,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: u64,
    pub std_error: Option<f64>,
    pub details: Value,
}

impl TestReport {
    /// Pass iff `statistic ≤ threshold`.
    pub fn at_most(name: &str, parameters: Value, statistic: f64, threshold: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            parameters,
            statistic,
            threshold,
            pass: statistic <= threshold,
            samples,
            std_error: None,
            details: Value::Null,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    pub fn with_details(mut self, d: Value) -> Self {
        self.details = d;
        self
    }

    /// Force failure on an extra condition (trend checks).
    pub fn require(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }

    pub fn line(&self) -> String {
        let se = self.std_error.map(|s| format!(" ± {s:.2e}")).unwrap_or_default();
        format!(
            "{} {}: statistic {:.4e}{se} vs threshold {:.4e} (n = {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold,
            self.samples
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tests: Vec<TestReport>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }
}

fn par_replicas<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

// ---------------------------------------------------------------------------
// Exact identity suites

/// Random boundaries with `N ≤ 2` colors and at most 3 arrows in `I`, random
/// `q, x, y ∈ (0,1)`.
pub fn yang_baxter_suite(trials: usize, seed: u64) -> Result<TestReport> {
    let mut rng = CounterRng::new(seed);
    let mut worst = 0.0f64;
    let mut rows = Vec::with_capacity(trials);
    for t in 0..trials {
        let n = 1 + t % 2;
        let (q, x, y) = (rng.uniform(), rng.uniform(), rng.uniform());
        let bd = qboson::random_yb_boundary(&mut rng, n, 3);
        let r = qboson::yang_baxter_check(&q, &x, &y, &bd)?;
        worst = worst.max(r.residual());
        rows.push(json!({"n": n, "q": q, "x": x, "y": y, "boundary": bd, "lhs": r.lhs, "rhs": r.rhs, "residual": r.residual()}));
    }
    Ok(TestReport::at_most("yang-baxter", json!({"trials": trials, "seed": seed}), worst, 1e-10, trials as u64)
        .with_details(Value::Array(rows)))
}

/// `|Z_K − ((1−qz)/(1−z))^{NM}|` over `(N, M) ∈ {1,2}²`, the given `q` and `z`.
pub fn partition_suite(qs: &[f64], zs: &[f64], k: usize, tol: f64) -> Result<TestReport> {
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for n in 1..=2 {
        for m in 1..=2 {
            for &q in qs {
                for &z in zs {
                    let model = QBoson::packed(n, m, q, z)?;
                    let tm = model.transfer_matrix()?;
                    let zk = tm.partition_truncated(k);
                    let err = (zk - model.closed_form()).abs();
                    worst = worst.max(err);
                    rows.push(json!({"n": n, "m": m, "q": q, "z": z, "z_k": zk, "closed_form": model.closed_form(), "error": err}));
                }
            }
        }
    }
    Ok(TestReport::at_most("partition", json!({"k": k, "qs": qs, "zs": zs}), worst, tol, rows.len() as u64)
        .with_details(Value::Array(rows)))
}

fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Nondecreasing maps `⟦1, n⟧ → ⟦1, m⟧` onto, as `tau` with `tau[0] = 0`.
fn merge_maps(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    // A map is fixed by which of the n−1 gaps start a new merged color.
    for mask in 0u32..(1 << (n - 1)) {
        let mut tau = vec![0usize, 1];
        for g in 0..n - 1 {
            let last = *tau.last().unwrap();
            tau.push(if mask >> g & 1 == 1 { last + 1 } else { last });
        }
        out.push(tau);
    }
    out
}

/// Exhaustive color-merging identity for `N` colors, `|A| ≤ max_arrows`.
pub fn merge_identity_suite(n: usize, max_arrows: i64, points: &[(f64, f64)]) -> Result<TestReport> {
    let mut worst = 0.0f64;
    let mut cases = 0u64;
    for &(q, u) in points {
        for tau in merge_maps(n) {
            let m = *tau.iter().max().unwrap();
            for size in 0..=max_arrows {
                for a in compositions(size, n) {
                    for i in 0..=n {
                        for lambda in 0..=m {
                            let out_total = size + (i > 0) as i64 - (lambda > 0) as i64;
                            if out_total < 0 {
                                continue;
                            }
                            for mb in compositions(out_total, m) {
                                worst = worst.max(qboson::color_merge_weight_check(&q, &u, &a, i, &mb, lambda, &tau)?);
                                cases += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(TestReport::at_most("color-merge", json!({"n": n, "max_arrows": max_arrows, "points": points}), worst, 1e-12, cases))
}

// ---------------------------------------------------------------------------
// Gibbs invariance

type Law<K> = BTreeMap<K, f64>;

/// Exact TV between the law of `(L_1, L_2)` of color `k` and its image under
/// the Hall–Littlewood resampling of `L_1` on `⟦a, b⟧`.
pub fn gibbs_invariance_uncolored(model: &QBoson<f64>, color: u8, a: usize, b: usize) -> Result<f64> {
    if a >= b || b > model.rows() {
        return invalid(format!("need 0 ≤ a < b ≤ {}", model.rows()));
    }
    let tm = model.transfer_matrix()?;
    let mut law: Law<(Vec<i64>, Vec<i64>)> = BTreeMap::new();
    for (path, p) in tm.cut_law(2)? {
        let l1 = qboson::heights(&tm.states[path[1]], color);
        let l2 = qboson::heights(&tm.states[path[0]], color);
        *law.entry((l1, l2)).or_default() += p;
    }
    let mut image: Law<(Vec<i64>, Vec<i64>)> = BTreeMap::new();
    let mut kernels: HashMap<(Vec<i64>, Vec<i64>), Vec<(Vec<Vec<i64>>, f64)>> = HashMap::new();
    for ((l1, l2), p) in &law {
        let key = (l1[a..=b].to_vec(), l2[a..=b].to_vec());
        if !kernels.contains_key(&key) {
            let k = qboson::hl_gibbs_law(&[key.0.clone()], None, Some(&key.1), &model.q)?;
            kernels.insert(key.clone(), k);
        }
        for (tuple, w) in &kernels[&key] {
            let mut new = l1.clone();
            new[a..=b].copy_from_slice(&tuple[0]);
            *image.entry((new, l2.clone())).or_default() += p * w;
        }
    }
    Ok(tv_laws(&law, &image))
}

/// Exact TV between the joint cut law `(c_{−k−1}, …, c_{−1})` and its image
/// under the colored resampling of `L^{(2)}_k`. Two colors.
pub fn gibbs_invariance_colored(model: &QBoson<f64>, k: usize) -> Result<f64> {
    if k == 0 {
        return domain("k must be ≥ 1");
    }
    let tm: TransferMatrix<f64> = model.transfer_matrix()?;
    // The kernel conditions on L^{(2)} below row k only: cuts above −k enter
    // through their merged (uncolored) words.
    let mut law: Law<Vec<Word>> = BTreeMap::new();
    for (path, p) in tm.cut_law(k + 1)? {
        let key = path
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let w = &tm.states[s];
                if i < 2 { w.clone() } else { w.iter().map(|&c| c.min(1)).collect() }
            })
            .collect();
        *law.entry(key).or_default() += p;
    }
    let mut image: Law<Vec<Word>> = BTreeMap::new();
    // cuts[0] = c_{−k−1}, cuts[1] = c_{−k}.
    for (cuts, p) in &law {
        let l1_k = qboson::heights(&cuts[1], 1);
        let l1_k1 = qboson::heights(&cuts[0], 1);
        let l2_k1 = qboson::heights(&cuts[0], 2);
        for (cand, w) in qboson::colored_gibbs_law(model, &l1_k, &l1_k1, &l2_k1)? {
            let mut new = cuts.clone();
            new[1] = qboson::word_from_heights(&l1_k, &cand)?;
            *image.entry(new).or_default() += p * w;
        }
    }
    Ok(tv_laws(&law, &image))
}

/// Probability of the higher of the two bridges in the two-step example with
/// lower curve `(−k, −k−1, −k−1)`; equals `(1−q^{k+1})/(2−q^{k+1})`.
pub fn gibbs_figure_probability(q: &BigRational, k: i64) -> Result<BigRational> {
    let g = vec![-k, -k - 1, -k - 1];
    let law = qboson::hl_gibbs_law(&[vec![0, 0, -1]], None, Some(&g), q)?;
    law.into_iter()
        .find(|(t, _)| t[0] == [0, 0, -1])
        .map(|p| p.1)
        .ok_or_else(|| Error::Invalid("higher path missing from the support".into()))
}

// ---------------------------------------------------------------------------
// Pitman statistics on exact samples

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitmanSummary {
    pub q: f64,
    pub samples: usize,
    pub max_deviation: i64,
    pub lower_violations: usize,
    /// `deviation_hist[m]` = samples whose worst deviation over `k` is `m`.
    pub deviation_hist: Vec<usize>,
    /// Samples where the top cut differs from the greedy release `w*`.
    pub greedy_mismatches: usize,
}

/// Deviation from the LPP formula and the one-sided bound, for
/// `k ∈ ⟦1, k_max⟧`, on exact two-color samples.
pub fn pitman_suite(n: usize, m: usize, sigma: Vec<u8>, q: f64, z: f64, cutoff: usize, k_max: usize, samples: usize, seed: u64) -> Result<PitmanSummary> {
    if sigma.iter().any(|&c| c > 2) {
        return invalid("Pitman statistics use two colors");
    }
    if k_max + 1 > cutoff {
        return invalid("need k_max + 1 ≤ cutoff");
    }
    let model = QBoson::new(n, m, sigma, q, z)?;
    let sampler = ExactSampler::new(&model, cutoff)?;
    let stats = par_replicas(samples, |i| -> Result<(i64, usize, bool)> {
        let cfg = sampler.sample(&mut CounterRng::new(replica_seed(seed, i as u64)));
        let l1 = cfg.line_ensemble(1, k_max + 1);
        let l2 = cfg.line_ensemble(2, k_max + 1);
        let mut dev = 0;
        let mut low = 0;
        for k in 1..=k_max {
            dev = dev.max(lpp::pitman_deviation(&l1, &l2, k)?);
            low += (lpp::pitman_lower_excess(&l1, &l2, k)? > 0) as usize;
        }
        // Greedy release of column −1 from its input c_{−2}.
        let x: Vec<u8> = cfg.exit(1).iter().map(|&c| (c > 0) as u8).collect();
        let wstar = qboson::q0_assign_colors(&cfg.exit(2), &x)?;
        Ok((dev, low, wstar != cfg.exit(1)))
    })?;
    let max_deviation = stats.iter().map(|s| s.0).max().unwrap_or(0);
    let mut deviation_hist = vec![0usize; max_deviation as usize + 1];
    for s in &stats {
        deviation_hist[s.0 as usize] += 1;
    }
    Ok(PitmanSummary {
        q,
        samples,
        max_deviation,
        lower_violations: stats.iter().map(|s| s.1).sum(),
        deviation_hist,
        greedy_mismatches: stats.iter().filter(|s| s.2).count(),
    })
}

// ---------------------------------------------------------------------------
// Matching test

/// TV between the exact law of `(L^{cHL,(k)}_1(y))` and the Monte Carlo law of
/// `(h^{S6V}(k, 0; y, M))` over `k ∈ ⟦1,N⟧`, `y ∈ ⟦1,N−1⟧`.
pub fn matching_test(n: usize, m: usize, sigma: Vec<u8>, q: f64, z: f64, samples: usize, seed: u64) -> Result<TestReport> {
    let params = json!({"n": n, "m": m, "sigma": sigma, "q": q, "z": z, "samples": samples, "seed": seed});
    if n == 1 {
        return Ok(TestReport::at_most("matching", params, 0.0, 0.01, 0).with_details(json!("vacuous: y-range empty")));
    }
    let model = QBoson::new(n, m, sigma.clone(), q, z)?;
    let tm = model.transfer_matrix()?;
    let key = |h: &dyn Fn(u8, i64) -> Result<i64>| -> Result<Vec<i64>> {
        let mut v = Vec::with_capacity(n * (n - 1));
        for k in 1..=n as u8 {
            for y in 1..n as i64 {
                v.push(h(k, y)?);
            }
        }
        Ok(v)
    };
    let mut exact: Law<Vec<i64>> = BTreeMap::new();
    for (w, p) in tm.exit_law()? {
        let k = key(&|c, y| Ok(qboson::heights(&w, c)[y as usize]))?;
        *exact.entry(k).or_default() += p;
    }
    let boundary = BoundaryCondition::new(1, sigma.iter().enumerate().map(|(r, &c)| (r as i64 + 1, c as i32)).collect(), 0)?;
    let keys = par_replicas(samples, |i| {
        let f = s6v::sample(&boundary, q, z, m as i64, None, replica_seed(seed, i as u64))?;
        key(&|c, y| f.colored_height(c as i64, y, m as i64))
    })?;
    let mut mc: Law<Vec<i64>> = BTreeMap::new();
    for k in keys {
        *mc.entry(k).or_default() += 1.0;
    }
    let tv = tv_laws(&exact, &mc);
    let se = 0.5 * exact.values().map(|p| (p * (1.0 - p) / samples as f64).sqrt()).sum::<f64>();
    Ok(TestReport::at_most("matching", params, tv, 0.01, samples as u64)
        .with_se(se)
        .with_details(json!({"support_exact": exact.len(), "support_mc": mc.len()})))
}

// ---------------------------------------------------------------------------
// Deterministic inequalities and pathwise merging

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCounts {
    pub replicas: usize,
    pub checks: u64,
    pub asep_monotonicity: u64,
    pub quadrangle: u64,
    pub height_ordering: u64,
    pub conservation: u64,
    pub crossing: u64,
    pub modified_monotone: u64,
}

impl InequalityCounts {
    pub fn violations(&self) -> u64 {
        self.asep_monotonicity + self.quadrangle + self.height_ordering + self.conservation + self.crossing + self.modified_monotone
    }

    fn add(&mut self, o: &Self) {
        self.replicas += o.replicas;
        self.checks += o.checks;
        self.asep_monotonicity += o.asep_monotonicity;
        self.quadrangle += o.quadrangle;
        self.height_ordering += o.height_ordering;
        self.conservation += o.conservation;
        self.crossing += o.crossing;
        self.modified_monotone += o.modified_monotone;
    }
}

/// Uniform random Bernoulli path on `⟦−w, w⟧` ending at 0.
pub fn random_path(w: i64, density: f64, rng: &mut CounterRng) -> BernoulliPath {
    let n = (2 * w + 1) as usize;
    let mut values = vec![0i64; n];
    for i in (0..n - 1).rev() {
        values[i] = values[i + 1] + (rng.uniform() < density) as i64;
    }
    BernoulliPath { start: -w, values }
}

/// Quadrangle and ordering checks on `h(x, y)` over a square grid, for a
/// height non-increasing in both `x` and `y`; returns
/// (checks, quadrangle violations, ordering violations).
fn grid_checks(h: &dyn Fn(i64, i64) -> i64, r: i64) -> (u64, u64, u64) {
    let mut grid = vec![vec![0i64; (2 * r + 1) as usize]; (2 * r + 1) as usize];
    for x in -r..=r {
        for y in -r..=r {
            grid[(x + r) as usize][(y + r) as usize] = h(x, y);
        }
    }
    let (mut checks, mut quad, mut ord) = (0, 0, 0);
    let s = (2 * r) as usize;
    for i in 0..=s {
        for j in 0..=s {
            if i < s && j < s {
                // Adjacent Monge inequality; summing gives every x1≤x2, y1≤y2.
                checks += 1;
                quad += (grid[i][j] + grid[i + 1][j + 1] < grid[i][j + 1] + grid[i + 1][j]) as u64;
            }
            if i < s {
                checks += 1;
                ord += (grid[i][j] < grid[i + 1][j]) as u64;
            }
            if j < s {
                checks += 1;
                ord += (grid[i][j] < grid[i][j + 1]) as u64;
            }
        }
    }
    (checks, quad, ord)
}

/// One seed of the deterministic sweep: ASEP height monotonicity for two
/// random profiles, quadrangle/ordering/conservation for packed ASEP and S6V,
/// crossing and modified monotonicity on an exact q-Boson ensemble.
pub fn inequality_replica(seed: u64, half_width: i64, t: f64, sampler: &ExactSampler) -> Result<InequalityCounts> {
    let mut rng = CounterRng::new(seed);
    let mut c = InequalityCounts { replicas: 1, ..Default::default() };
    let q = 0.1 + 0.8 * rng.uniform();

    let h1 = random_path(half_width, 0.5, &mut rng);
    let h2 = random_path(half_width, 0.5, &mut rng);
    let big_h = h2.values.iter().zip(&h1.values).map(|(b, a)| b - a).max().unwrap();
    let out = asep::basic_couple(&[(h1, 0.0), (h2, 0.0)], SeedSpec::asep(seed), q, t)?;
    for (a, b) in out[0].values.iter().zip(&out[1].values) {
        c.checks += 1;
        c.asep_monotonicity += (a + big_h < *b) as u64;
    }

    let r = 40;
    let packed = ColoredConfiguration::packed(half_width);
    let cfg = asep::evolve(&packed, SeedSpec::asep(seed), q, t)?;
    c.checks += 1;
    c.conservation += (cfg.multiset() != packed.multiset()) as u64;
    // The ASEP height increases in x; the inequalities hold for h(−x, y).
    let (k, qd, od) = grid_checks(&|x, y| asep::count_at_least(&cfg, x as i32, y), r);
    c.checks += k;
    c.quadrangle += qd;
    c.height_ordering += od;

    let z = 0.2 + 0.6 * rng.uniform();
    let cols = t.round() as i64;
    let field = s6v::sample(&BoundaryCondition::packed(half_width), q, z, cols, None, seed)?;
    let mut first: Vec<i32> = field.columns[0].iter().copied().filter(|&c| c != s6v::NO_ARROW).collect();
    let mut last: Vec<i32> = field.columns[cols as usize].iter().copied().filter(|&c| c != s6v::NO_ARROW).collect();
    first.sort_unstable();
    last.sort_unstable();
    c.checks += 1;
    c.conservation += (first != last) as u64;
    let (k, qd, od) = grid_checks(&|x, y| field.colored_height(x, y, cols).unwrap(), r);
    c.checks += k;
    c.quadrangle += qd;
    c.height_ordering += od;

    let cfg = sampler.sample(&mut rng);
    let kk = 3.min(sampler.k);
    let ens = cfg.line_ensemble(1, kk);
    let env = Environment::new(0, ens.curves.clone())?;
    for kc in 1..=kk {
        for y1 in 0..env.end() {
            for y2 in y1 + 1..=env.end() {
                c.checks += 1;
                c.crossing += !lpp::crossing_check(&env, kc, y1, y2)? as u64;
            }
            c.checks += 1;
            c.modified_monotone += !lpp::modified_monotone_check(&env, kc, y1)? as u64;
        }
    }
    Ok(c)
}

pub fn inequality_suite(seeds: usize, seed: u64, half_width: i64, t: f64) -> Result<TestReport> {
    let model = QBoson::packed(3, 3, 0.5, 0.5)?;
    let sampler = ExactSampler::new(&model, 12)?;
    let parts = par_replicas(seeds, |i| inequality_replica(replica_seed(seed, i as u64), half_width, t, &sampler))?;
    let mut total = InequalityCounts::default();
    for p in &parts {
        total.add(p);
    }
    Ok(TestReport::at_most(
        "deterministic-inequalities",
        json!({"seeds": seeds, "seed": seed, "half_width": half_width, "t": t}),
        total.violations() as f64,
        0.0,
        seeds as u64,
    )
    .with_details(serde_json::to_value(&total)?))
}

/// Random weakly monotone color map collapsing `⟦lo, hi⟧` into `parts` blocks.
fn random_monotone_map(lo: i32, hi: i32, parts: usize, rng: &mut CounterRng) -> Vec<i32> {
    let mut cuts: Vec<i32> = (0..parts.saturating_sub(1)).map(|_| lo + (rng.uniform() * (hi - lo + 1) as f64) as i32).collect();
    cuts.sort_unstable();
    (lo..=hi).map(|c| cuts.iter().filter(|&&k| k <= c).count() as i32).collect()
}

/// merge∘evolve = evolve∘merge, exactly, for ASEP and S6V.
pub fn merge_commutation_suite(seeds: usize, seed: u64) -> Result<TestReport> {
    let mismatches = par_replicas(seeds, |i| -> Result<u64> {
        let s = replica_seed(seed, i as u64);
        let mut rng = CounterRng::new(s);
        let q = 0.8 * rng.uniform();
        let w = 40;
        let map = random_monotone_map(-w as i32, w as i32, 1 + (rng.uniform() * 6.0) as usize, &mut rng);
        let tau = |c: i32| map[(c + w as i32) as usize];
        let packed = ColoredConfiguration::packed(w);
        let a = asep::merge_colors(&asep::evolve(&packed, SeedSpec::asep(s), q, 8.0)?, tau)?;
        let b = asep::evolve(&asep::merge_colors(&packed, tau)?, SeedSpec::asep(s), q, 8.0)?;
        let z = 0.1 + 0.8 * rng.uniform();
        let bd = BoundaryCondition::packed(w);
        let cap = Some(4 * w);
        let f1 = s6v::sample(&bd, q, z, 20, cap, s)?.merge_colors(tau)?;
        let f2 = s6v::sample(&s6v::merge_boundary(&bd, tau), q, z, 20, cap, s)?;
        Ok((a != b) as u64 + (f1.columns != f2.columns) as u64)
    })?;
    let bad: u64 = mismatches.iter().sum();
    Ok(TestReport::at_most("merge-commutation", json!({"seeds": seeds, "seed": seed}), bad as f64, 0.0, 2 * seeds as u64))
}

// ---------------------------------------------------------------------------
// One-point sheet samples and q-invariance

/// Independent replicas of the rescaled one-point value `S^ε(x; y)`.
/// Needs `βxε^{−2/3}` to be an integer (one start position per replica).
pub fn one_point_samples(p: &ScalingParams, x: f64, y: f64, n: i64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    let bx = p.x_arg(x);
    if (bx - bx.round()).abs() > 1e-9 {
        return invalid("one-point sampling needs an integer start position βxε^{−2/3}");
    }
    let bx = bx.round() as i64;
    let (ys, _) = (p.y_arg(y, 0.0, 1.0), ());
    let corners = [ys.floor() as i64, ys.ceil() as i64];
    if p.variant == Variant::S6v {
        // Window checks happen in `sheet`; refuse early for a clear message.
        let probe = scaling::HeightTable::new();
        if let Err(e @ Error::Domain(_)) = p.sheet(x, y, n, &probe) {
            return Err(e);
        }
    }
    par_replicas(replicas, |i| {
        let s = replica_seed(seed, i as u64);
        let mut table = scaling::HeightTable::new();
        match p.variant {
            Variant::Asep => {
                // h(X, 0; Y, t) has the law of h(0, 0; Y − X, t).
                let radius = corners.iter().map(|c| (c - bx).abs()).max().unwrap();
                let prof = asep::step_height_sample(p.q, p.model_time(1.0), radius, s)?;
                for &c in &corners {
                    table.insert(bx, c, prof.at(c - bx).expect("inside radius"));
                }
            }
            Variant::S6v => {
                let cols = p.model_time(1.0) as i64;
                let f = UncoloredField::sample(Blocks(vec![(bx, n)]), -n, 0, p.q, p.z.unwrap(), cols, None, s)?;
                for &c in &corners {
                    table.insert(bx, c, f.height(c, cols)?);
                }
            }
        }
        p.sheet(x, y, n, &table)
    })
}

/// Pairwise KS between the one-point laws at each `q`, with a same-`q` null
/// pilot at matched sample size.
pub fn q_invariance_test(
    variant: Variant,
    alpha: f64,
    z: Option<f64>,
    epsilon: f64,
    qs: &[f64],
    replicas: usize,
    seed: u64,
    threshold: f64,
) -> Result<TestReport> {
    if qs.len() < 2 {
        return invalid("need at least two values of q");
    }
    if replicas < 1000 {
        return invalid("q-invariance needs at least 10^3 replicas");
    }
    let mut dists = Vec::new();
    let mut moments = Vec::new();
    for (j, &q) in qs.iter().enumerate() {
        let p = scaling::constants(variant, alpha, q, z, epsilon)?;
        let xs = one_point_samples(&p, 0.0, 0.0, p.default_n(), replicas, replica_seed(seed, 1000 + j as u64))?;
        let d = EmpiricalDistribution::from_samples(&xs).with_provenance(format!("q-invariance q={q} seed={seed}"));
        moments.push(json!({"q": q, "mean": d.mean(), "variance": d.variance()}));
        dists.push(d);
    }
    let p0 = scaling::constants(variant, alpha, qs[0], z, epsilon)?;
    let null = EmpiricalDistribution::from_samples(&one_point_samples(&p0, 0.0, 0.0, p0.default_n(), replicas, replica_seed(seed, 999))?);
    let null_ks = ks_distance(&dists[0], &null)?;
    let mut worst = 0.0f64;
    let mut pairs = Vec::new();
    for i in 0..qs.len() {
        for j in i + 1..qs.len() {
            let ks = ks_distance(&dists[i], &dists[j])?;
            worst = worst.max(ks);
            pairs.push(json!({"q1": qs[i], "q2": qs[j], "ks": ks}));
        }
    }
    Ok(TestReport::at_most(
        "q-invariance",
        json!({"variant": variant, "alpha": alpha, "z": z, "eps_inv": 1.0 / epsilon, "qs": qs, "replicas": replicas, "seed": seed}),
        worst,
        threshold,
        replicas as u64,
    )
    .with_se(ks_critical(replicas as u64, replicas as u64, 0.32))
    .with_details(json!({"pairs": pairs, "null_pilot_ks": null_ks, "moments": moments})))
}

/// The q-invariance test at each `ε^{-1}` in increasing order; passes iff
/// the last KS is within `threshold` and the sequence is non-increasing.
#[allow(clippy::too_many_arguments)]
pub fn q_invariance_trend(
    variant: Variant,
    alpha: f64,
    z: Option<f64>,
    eps_inv: &[f64],
    qs: &[f64],
    replicas: usize,
    seed: u64,
    threshold: f64,
) -> Result<TestReport> {
    let mut runs = Vec::new();
    for &e in eps_inv {
        runs.push(q_invariance_test(variant, alpha, z, 1.0 / e, qs, replicas, seed, threshold)?);
    }
    let ks: Vec<f64> = runs.iter().map(|r| r.statistic).collect();
    let trend = ks.windows(2).all(|w| w[1] <= w[0]);
    let last = runs.pop().ok_or_else(|| Error::Invalid("need at least one ε".into()))?;
    Ok(TestReport {
        name: "q-invariance-trend".into(),
        parameters: json!({"variant": variant, "alpha": alpha, "z": z, "eps_inv": eps_inv, "qs": qs, "replicas": replicas, "seed": seed}),
        details: json!({"ks": ks, "non_increasing": trend, "last": last.details}),
        ..last
    }
    .require(trend))
}

// ---------------------------------------------------------------------------
// S6V stationarity and symmetry in law

/// Raw S6V identities at one tuple under the packed boundary of size `n`:
/// `h(x;y) =d h(x+k; y+k) + k` and `h(x;y) =d h(−y; −x) − x − y`.
/// Returns the two KS distances.
pub fn s6v_stationarity_test(n: i64, q: f64, z: f64, t: i64, x: i64, y: i64, k: i64, samples: usize, seed: u64) -> Result<TestReport> {
    for v in [x, y, x + k, y + k, -x, -y] {
        if v.abs() > n {
            return domain(format!("argument {v} outside ⟦−{n}, {n}⟧"));
        }
    }
    let bd = BoundaryCondition::packed(n);
    let draw = |stream: u64, f: &(dyn Fn(&s6v::ArrowField) -> Result<i64> + Sync)| -> Result<EmpiricalDistribution> {
        let v = par_replicas(samples, |i| {
            let field = s6v::sample(&bd, q, z, t, None, replica_seed(seed ^ (stream << 48), i as u64))?;
            f(&field).map(|h| h as f64)
        })?;
        Ok(EmpiricalDistribution::from_samples(&v))
    };
    let base = draw(1, &|f| f.colored_height(x, y, t))?;
    let shifted = draw(2, &|f| Ok(f.colored_height(x + k, y + k, t)? + k))?;
    let mirrored = draw(3, &|f| Ok(f.colored_height(-y, -x, t)? - x - y))?;
    let ks_shift = ks_distance(&base, &shifted)?;
    let ks_sym = ks_distance(&base, &mirrored)?;
    Ok(TestReport::at_most(
        "s6v-stationarity-symmetry",
        json!({"n": n, "q": q, "z": z, "t": t, "x": x, "y": y, "k": k, "samples": samples, "seed": seed}),
        ks_shift.max(ks_sym),
        0.03,
        samples as u64,
    )
    .with_se(ks_critical(samples as u64, samples as u64, 0.32))
    .with_details(json!({"ks_shift": ks_shift, "ks_symmetry": ks_sym, "mean": base.mean()})))
}

// ---------------------------------------------------------------------------
// ASEP degeneration

/// KS between the S6V proxy and direct ASEP heights `h(x, 0; y, t)` for each
/// `δ`; passes if the sequence is non-increasing and the last one is small.
pub fn degeneration_test(t: f64, q: f64, deltas: &[f64], x: i64, y: i64, replicas: usize, seed: u64, threshold: f64) -> Result<TestReport> {
    let radius = (y - x).abs();
    let direct = par_replicas(replicas, |i| {
        let prof = asep::step_height_sample(q, t, radius, replica_seed(seed, i as u64))?;
        Ok(prof.at(y - x).unwrap() as f64)
    })?;
    let direct = EmpiricalDistribution::from_samples(&direct);
    let mut ks = Vec::new();
    for (j, &delta) in deltas.iter().enumerate() {
        let p = s6v::DegenerationParams::new(t, delta, q)?;
        let proxy = par_replicas(replicas, |i| {
            s6v::asep_degeneration(&p, replica_seed(seed ^ ((j as u64 + 1) << 40), i as u64), x, y).map(|h| h as f64)
        })?;
        ks.push(ks_distance(&direct, &EmpiricalDistribution::from_samples(&proxy))?);
    }
    let trend = ks.windows(2).all(|w| w[1] <= w[0]);
    let last = *ks.last().ok_or_else(|| Error::Invalid("need at least one δ".into()))?;
    Ok(TestReport::at_most(
        "asep-s6v-degeneration",
        json!({"t": t, "q": q, "deltas": deltas, "x": x, "y": y, "replicas": replicas, "seed": seed}),
        last,
        threshold,
        replicas as u64,
    )
    .require(trend)
    .with_se(ks_critical(replicas as u64, replicas as u64, 0.32))
    .with_details(json!({"ks": ks, "non_increasing": trend, "direct_mean": direct.mean()})))
}

// ---------------------------------------------------------------------------
// Scaling relations

pub fn scaling_relations_test(draws: usize, seed: u64) -> Result<TestReport> {
    let mut rng = CounterRng::new(seed);
    let mut worst = 0.0f64;
    for i in 0..draws {
        let q = 0.99 * rng.uniform();
        let p = if i % 2 == 0 {
            scaling::constants(Variant::Asep, -0.98 + 1.96 * rng.uniform(), q, None, 0.01)?
        } else {
            let z = 0.02 + 0.96 * rng.uniform();
            let (lo, hi) = (z.ln(), -z.ln());
            let alpha = (lo + (hi - lo) * (0.01 + 0.98 * rng.uniform())).exp();
            scaling::constants(Variant::S6v, alpha, q, Some(z), 0.01)?
        };
        let (a, b) = p.residuals();
        worst = worst.max(a.abs()).max(b.abs());
    }
    Ok(TestReport::at_most("scaling-relations", json!({"draws": draws, "seed": seed}), worst, 1e-12, draws as u64))
}

// ---------------------------------------------------------------------------
// Decoupling diagnostics

/// Two S6V systems under the basic coupling whose boundaries agree on
/// `⟦−N1, N1⟧`; counts discrepancies in `⟦1,T⟧ × ⟦−⌊N1/2⌋, ⌊N1/2⌋⌋` with
/// `T = ⌊(1−b→)N1/4⌋`.
pub fn finite_speed_test(n1: i64, n2: i64, q: f64, z: f64, seeds: usize, seed: u64) -> Result<TestReport> {
    if n2 < n1 {
        return invalid("need N1 ≤ N2");
    }
    let (b_up, b_right) = coin_probabilities(q, z)?;
    if b_up > b_right {
        return domain("need b↑ ≤ b→");
    }
    let t = ((1.0 - b_right) * n1 as f64 / 4.0).floor() as i64;
    let counts = par_replicas(seeds, |i| -> Result<usize> {
        let s = replica_seed(seed, i as u64);
        let mut rng = CounterRng::new(s ^ 0x5eed);
        let shared: Vec<i64> = (-n1..=n1).filter(|_| rng.uniform() < 0.5).collect();
        let extra: Vec<i64> = (-n2..-n1).filter(|_| rng.uniform() < 0.5).collect();
        let cap = Some(row_cap(n1, t, 2 * n2 + 1, b_up));
        let f1 = UncoloredField::sample(Blocks::from_rows(shared.clone()), -n1, 0, q, z, t, cap, s)?;
        let f2 = UncoloredField::sample(Blocks::from_rows(extra.into_iter().chain(shared)), -n2, 0, q, z, t, cap, s)?;
        Ok(s6v::pair_trajectories(&f1, &f2)?.discrepancies_in(1, t, -(n1 / 2), n1 / 2))
    })?;
    let total: usize = counts.iter().sum();
    Ok(TestReport::at_most(
        "finite-speed",
        json!({"n1": n1, "n2": n2, "q": q, "z": z, "seeds": seeds, "seed": seed, "t": t}),
        total as f64,
        0.0,
        seeds as u64,
    ))
}

/// `V = max_x (h(h0²; x, t) − h(h0¹; x, t) − H)` for ordered random boundaries
/// `h0¹ + H ≥ h0²`; returns the tail frequencies `P(V ≥ M)`.
pub fn monotonicity_tails(n: i64, q: f64, z: f64, t: i64, ms: &[i64], seeds: usize, seed: u64) -> Result<TestReport> {
    let vs = par_replicas(seeds, |i| -> Result<i64> {
        let s = replica_seed(seed, i as u64);
        let mut rng = CounterRng::new(s ^ 0xabc);
        let h1 = random_path(n, 0.5, &mut rng);
        let h2 = random_path(n, 0.5, &mut rng);
        let big_h = h2.values.iter().zip(&h1.values).map(|(b, a)| b - a).max().unwrap();
        let f1 = s6v::field_from_profile(&h1, 0, q, z, t, s)?;
        let f2 = s6v::field_from_profile(&h2, 0, q, z, t, s)?;
        let top = f1.cap.max(f2.cap);
        let mut v = i64::MIN;
        for y in -n - 1..=top {
            v = v.max(f2.height(y, t)? - f1.height(y, t)? - big_h);
        }
        Ok(v)
    })?;
    let tails: Vec<f64> = ms.iter().map(|&m| vs.iter().filter(|&&v| v >= m).count() as f64 / seeds as f64).collect();
    let decreasing = tails.windows(2).all(|w| w[1] <= w[0]);
    Ok(TestReport::at_most(
        "approximate-monotonicity",
        json!({"n": n, "q": q, "z": z, "t": t, "ms": ms, "seeds": seeds, "seed": seed}),
        *tails.last().unwrap_or(&0.0),
        1.0,
        seeds as u64,
    )
    .require(decreasing)
    .with_details(json!({"tails": tails, "max_violation": vs.iter().max()})))
}

// ---------------------------------------------------------------------------
// Two-point function

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointEstimate {
    pub beta: f64,
    pub epsilon: f64,
    pub q: f64,
    /// Model time `2γ^{−1}ε^{−1}t`.
    pub time: f64,
    pub ring_size: usize,
    pub burn_in: f64,
    pub replicas: usize,
    pub offsets: Vec<i64>,
    /// `entries[k−1][ℓ−1][i]` estimates `S_{kℓ}(time, offsets[i])`.
    pub entries: [[Vec<f64>; 2]; 2],
    pub std_errors: [[Vec<f64>; 2]; 2],
    /// `Σ_i S_{kℓ}(time, offsets[i])` with its standard error. Centered by
    /// each replica's own (conserved) densities plus the exact mean of the
    /// difference, `W·Cov(ρ̂_k, ρ̂_ℓ) = W (min(ρ_k, ρ_ℓ) − ρ_kρ_ℓ)/L` under the
    /// i.i.d. start: same mean as known-density centering, without the
    /// `W·(ρ̂ − ρ)` noise that dominates a sum over many offsets.
    pub window_sums: [[(f64, f64); 2]; 2],
}

/// Ring proxy of the stationary two-color ASEP with densities
/// `ρ(≥1) = ½ + ½βε^{1/3}`, `ρ(2) = ½`: sites drawn i.i.d. (so each one-color
/// projection is exactly stationary), then burned in.
#[allow(clippy::too_many_arguments)]
pub fn twopoint(
    beta: f64,
    epsilon: f64,
    q: f64,
    t: f64,
    ring_size: usize,
    burn_in: f64,
    offsets: &[i64],
    replicas: usize,
    seed: u64,
) -> Result<TwoPointEstimate> {
    if replicas < 2 {
        return invalid("need at least two replicas for a standard error");
    }
    let rho1 = 0.5 + 0.5 * beta * epsilon.cbrt();
    if !(rho1 <= 1.0) || beta < 0.0 {
        return domain(format!("density ½ + ½βε^{{1/3}} = {rho1} must lie in [½, 1]"));
    }
    if !(0.0..1.0).contains(&q) || t < 0.0 || burn_in < 0.0 {
        return domain("need q ∈ [0,1), t ≥ 0, burn-in ≥ 0");
    }
    let time = 2.0 * t / ((1.0 - q) * epsilon);
    let rho = [rho1, 0.5];
    let l = ring_size;
    let no = offsets.len();
    // Per replica: [k][ℓ][offset] spatial averages of η^k_0(i) η^ℓ_t(i+x).
    let per = par_replicas(replicas, |r| -> Result<Vec<f64>> {
        let s = replica_seed(seed, r as u64);
        let mut rng = CounterRng::new(s);
        let colors: Vec<i32> = (0..l)
            .map(|_| {
                let u = rng.uniform();
                if u < 0.5 {
                    2
                } else if u < rho1 {
                    1
                } else {
                    0
                }
            })
            .collect();
        let mut sim = AsepSim::new(ColoredConfiguration::ring(colors), SeedSpec::asep(s), q, 0.0)?;
        sim.advance_to(burn_in)?;
        let c0 = sim.config().colors.clone();
        sim.advance_to(burn_in + time)?;
        let ct = &sim.config().colors;
        let mut out = vec![0.0; 4 * no + 2];
        for k in 0..2 {
            out[4 * no + k] = c0.iter().filter(|&&c| c > k as i32).count() as f64 / l as f64;
        }
        for k in 0..2 {
            for m in 0..2 {
                for (oi, &x) in offsets.iter().enumerate() {
                    let mut acc = 0usize;
                    for i in 0..l {
                        let j = (i as i64 + x).rem_euclid(l as i64) as usize;
                        acc += (c0[i] > k as i32 && ct[j] > m as i32) as usize;
                    }
                    out[(k * 2 + m) * no + oi] = acc as f64 / l as f64;
                }
            }
        }
        Ok(out)
    })?;
    let mut entries: [[Vec<f64>; 2]; 2] = Default::default();
    let mut std_errors: [[Vec<f64>; 2]; 2] = Default::default();
    let mut window_sums = [[(0.0, 0.0); 2]; 2];
    for k in 0..2 {
        for m in 0..2 {
            let base = (k * 2 + m) * no;
            for oi in 0..no {
                let col: Vec<f64> = per.iter().map(|v| v[base + oi]).collect();
                let (mean, se) = mean_se(&col);
                entries[k][m].push(mean - rho[k] * rho[m]);
                std_errors[k][m].push(se);
            }
            let sums: Vec<f64> = per
                .iter()
                .map(|v| v[base..base + no].iter().sum::<f64>() - no as f64 * v[4 * no + k] * v[4 * no + m])
                .collect();
            let (mean, se) = mean_se(&sums);
            let shift = no as f64 * (rho[k].min(rho[m]) - rho[k] * rho[m]) / l as f64;
            window_sums[k][m] = (mean + shift, se);
        }
    }
    Ok(TwoPointEstimate {
        beta,
        epsilon,
        q,
        time,
        ring_size,
        burn_in,
        replicas,
        offsets: offsets.to_vec(),
        entries,
        std_errors,
        window_sums,
    })
}

// ---------------------------------------------------------------------------
// Named suites

/// Suite sizes: `Full` matches the acceptance gate, `Quick` is a smoke run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

pub const SUITES: &[&str] = &[
    "yang-baxter",
    "partition",
    "color-merge",
    "matching",
    "pitman",
    "gibbs",
    "inequalities",
    "merge-commutation",
    "q-invariance",
    "stationarity",
    "degeneration",
    "scaling",
    "finite-speed",
    "monotonicity",
    "twopoint",
];

/// Exactness at `q = 0` over several `N, M ≤ 4` two-color boundaries.
pub fn pitman_exact_report(samples: usize, seed: u64) -> Result<TestReport> {
    let cases: [(usize, usize, Vec<u8>, f64); 3] =
        [(4, 4, vec![1, 2, 1, 2], 0.5), (3, 4, vec![2, 1, 2], 0.3), (4, 2, vec![1, 1, 2, 2], 0.6)];
    let mut worst = 0;
    let mut details = Vec::new();
    for (i, (n, m, sigma, z)) in cases.into_iter().enumerate() {
        let r = pitman_suite(n, m, sigma.clone(), 0.0, z, 30, 4, samples, replica_seed(seed, i as u64))?;
        worst = worst.max(r.max_deviation);
        details.push(json!({"n": n, "m": m, "sigma": sigma, "z": z, "summary": r}));
    }
    Ok(TestReport::at_most("pitman-exact-q0", json!({"samples": samples, "seed": seed}), worst as f64, 0.0, 3 * samples as u64)
        .with_details(Value::Array(details)))
}

/// One-sided bound at each `q`; also reports the deviation histograms.
pub fn pitman_bound_report(qs: &[f64], samples: usize, seed: u64) -> Result<TestReport> {
    let mut violations = 0;
    let mut details = Vec::new();
    for (i, &q) in qs.iter().enumerate() {
        let r = pitman_suite(4, 4, vec![1, 2, 1, 2], q, 0.5, 30, 4, samples, replica_seed(seed, i as u64))?;
        violations += r.lower_violations;
        details.push(serde_json::to_value(&r)?);
    }
    Ok(TestReport::at_most("pitman-lower-bound", json!({"qs": qs, "samples": samples, "seed": seed}), violations as f64, 0.0, (qs.len() * samples) as u64)
        .with_details(Value::Array(details)))
}

/// Uncolored invariance on intervals inside each row block, colored
/// invariance at `k = 1, 2`, and the figure's closed form.
pub fn gibbs_report() -> Result<TestReport> {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (q, z) in [(0.5, 0.4), (0.0, 0.5), (0.8, 0.3)] {
        let unc = QBoson::new(2, 2, vec![1, 1], q, z)?;
        let col = QBoson::new(2, 2, vec![1, 2], q, z)?;
        let vals = [
            gibbs_invariance_uncolored(&unc, 1, 0, 2)?,
            gibbs_invariance_uncolored(&unc, 1, 2, 4)?,
            gibbs_invariance_colored(&col, 1)?,
            gibbs_invariance_colored(&col, 2)?,
        ];
        worst = vals.iter().fold(worst, |a, &b| a.max(b));
        details.push(json!({"q": q, "z": z, "uncolored_0_2": vals[0], "uncolored_2_4": vals[1], "colored_k1": vals[2], "colored_k2": vals[3]}));
    }
    let half = BigRational::from_ratio(1, 2);
    let p = gibbs_figure_probability(&half, 2)?;
    let exact = p == BigRational::from_ratio(7, 15);
    Ok(TestReport::at_most("gibbs-invariance", json!({"n": 2, "m": 2}), worst, 1e-10, details.len() as u64)
        .require(exact)
        .with_details(json!({"instances": details, "figure_probability": p.to_string()})))
}

/// Time-zero sanity of the estimator at half density, then the decay of
/// the off-diagonal window sum `Σ_{|x| ≤ ε^{−2/3}} S_{12}` in `β`.
pub fn twopoint_reports(replicas: usize, seed: u64) -> Result<Vec<TestReport>> {
    let eps = 1.0 / 512.0;
    let offs: Vec<i64> = (-64..=64).collect();
    let e0 = twopoint(1.0, eps, 0.0, 0.0, 384, 0.0, &offs, replicas, seed)?;
    let s22 = &e0.entries[1][1];
    let se = &e0.std_errors[1][1];
    let c = 64usize;
    let z_diag = (s22[c] - 0.25).abs() / se[c];
    let z_off = (0..offs.len()).filter(|&i| i != c).map(|i| s22[i].abs() / se[i]).fold(0.0f64, f64::max);
    let mut out = vec![TestReport::at_most("twopoint-s22-diagonal", json!({"replicas": replicas, "seed": seed}), z_diag, 3.0, replicas as u64)
        .with_details(json!({"s22_0_0": s22[c], "se": se[c]}))];
    // 128 offsets at once: the max z-score is compared against the
    // Bonferroni-free 3σ per offset, as stated; report the count too.
    let beyond = (0..offs.len()).filter(|&i| i != c && s22[i].abs() > 3.0 * se[i]).count();
    out.push(
        TestReport::at_most("twopoint-s22-off-site", json!({"replicas": replicas, "seed": seed}), z_off, 3.0, replicas as u64)
            .with_details(json!({"offsets_beyond_3se": beyond, "offsets": offs.len() - 1})),
    );
    let mut mags = Vec::new();
    let mut details = Vec::new();
    for (i, beta) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        let e = twopoint(beta, eps, 0.0, 0.25, 384, 384.0, &offs, replicas, replica_seed(seed, 10 + i as u64))?;
        mags.push(e.window_sums[0][1].0.abs());
        details.push(json!({"beta": beta, "time": e.time, "window_sums": e.window_sums}));
    }
    let decreasing = mags.windows(2).all(|w| w[1] < w[0]);
    out.push(
        TestReport::at_most("twopoint-offdiagonal-decay", json!({"betas": [1, 2, 4], "eps_inv": 512, "t": 0.25, "replicas": replicas}), mags[2], mags[0], replicas as u64)
            .require(decreasing)
            .with_details(json!({"abs_s12_window": mags, "runs": details})),
    );
    Ok(out)
}

/// Run one named suite.
pub fn run_suite(name: &str, scale: Scale, seed: u64) -> Result<VerificationReport> {
    let tests = match name {
        "yang-baxter" => vec![yang_baxter_suite(100, seed)?],
        "partition" => vec![partition_suite(&[0.0, 0.3, 0.7], &[0.2, 0.5], 40, 1e-8)?],
        "color-merge" => vec![merge_identity_suite(3, 3, &[(0.37, 0.8), (0.0, 1.0)])?],
        "matching" => vec![matching_test(2, 2, vec![1, 2], 0.5, 0.4, scale.pick(1_000_000, 50_000), seed)?],
        "pitman" => vec![
            pitman_exact_report(scale.pick(1000, 100), seed)?,
            pitman_bound_report(&[0.3, 0.6, 0.9], scale.pick(1000, 100), seed)?,
        ],
        "gibbs" => vec![gibbs_report()?],
        "inequalities" => vec![inequality_suite(scale.pick(100, 5), seed, 200, 50.0)?],
        "merge-commutation" => vec![merge_commutation_suite(scale.pick(100, 10), seed)?],
        "q-invariance" => vec![q_invariance_trend(
            Variant::S6v,
            1.0,
            Some(0.25),
            &scale.pick(vec![125.0, 500.0], vec![64.0, 125.0]),
            &[0.0, 0.5],
            scale.pick(10_000, 1000),
            seed,
            0.05,
        )?],
        "stationarity" => vec![s6v_stationarity_test(30, 0.5, 0.4, 15, -2, 3, 2, scale.pick(100_000, 10_000), seed)?],
        "degeneration" => vec![degeneration_test(20.0, 0.3, &[0.1, 0.05, 0.02], 0, 0, scale.pick(10_000, 2000), seed, 0.05)?],
        "scaling" => vec![scaling_relations_test(100, seed)?],
        "finite-speed" => vec![finite_speed_test(40, 80, 0.2, 0.8, 50, seed)?],
        "monotonicity" => vec![monotonicity_tails(60, 0.5, 0.4, 30, &[4, 8, 16], scale.pick(500, 50), seed)?],
        "twopoint" => twopoint_reports(scale.pick(1000, 200), seed)?,
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(run_suite(s, scale, seed)?.tests);
            }
            all
        }
        other => return invalid(format!("unknown suite `{other}`; expected one of {} or all", SUITES.join(", "))),
    };
    Ok(VerificationReport { tests })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_and_tv_basics() {
        let a = EmpiricalDistribution::from_samples(&[0.0, 1.0, 1.0]);
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let p0 = EmpiricalDistribution::from_samples(&[0.0]);
        let p1 = EmpiricalDistribution::from_samples(&[1.0]);
        assert_eq!(ks_distance(&p0, &p1).unwrap(), 1.0);
        assert_eq!(tv_distance(&p0, &p1).unwrap(), 1.0);
        let empty = EmpiricalDistribution::from_samples(&[]);
        assert!(ks_distance(&empty, &p0).is_err());
        assert!(EmpiricalDistribution::from_weights([(0.0, -1.0)]).is_err());
    }

    #[test]
    fn fair_coins_are_close() {
        let mut r1 = CounterRng::new(1);
        let mut r2 = CounterRng::new(2);
        let a: Vec<f64> = (0..100_000).map(|_| (r1.uniform() < 0.5) as u8 as f64).collect();
        let b: Vec<f64> = (0..100_000).map(|_| (r2.uniform() < 0.5) as u8 as f64).collect();
        let ks = ks_distance(&EmpiricalDistribution::from_samples(&a), &EmpiricalDistribution::from_samples(&b)).unwrap();
        assert!(ks <= 0.01, "{ks}");
    }

    #[test]
    fn reference_cdf() {
        let table = parse_cdf_table("# uniform\n0 0\n1 1\n").unwrap();
        let mut r = CounterRng::new(4);
        let xs: Vec<f64> = (0..20_000).map(|_| r.uniform()).collect();
        let ks = ks_against_reference(&EmpiricalDistribution::from_samples(&xs), &table).unwrap();
        assert!(ks < 0.015, "{ks}");
        assert!(matches!(parse_cdf_table("0 0\n1 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_cdf_table("0 0.5\n1 0.2\n").is_err());
    }

    #[test]
    fn merge_is_associative() {
        let a = EmpiricalDistribution::from_samples(&[1.0, 2.0]);
        let b = EmpiricalDistribution::from_samples(&[2.0, 3.0]);
        let c = EmpiricalDistribution::from_samples(&[3.0]);
        assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
        assert_eq!(a.merge(&b).merge(&c).samples, 5);
    }

    #[test]
    fn figure_probability_is_exact() {
        let q = BigRational::from_ratio(1, 2);
        assert_eq!(gibbs_figure_probability(&q, 2).unwrap(), BigRational::from_ratio(7, 15));
    }

    #[test]
    fn trivial_gibbs_interval() {
        let model = QBoson::packed(1, 1, 0.5, 0.4).unwrap();
        assert!(gibbs_invariance_uncolored(&model, 1, 0, 1).unwrap() < 1e-15);
    }

    #[test]
    fn matching_is_vacuous_at_one_color() {
        let r = matching_test(1, 2, vec![1], 0.5, 0.4, 10, 1).unwrap();
        assert!(r.pass && r.samples == 0);
    }

    #[test]
    fn twopoint_at_time_zero() {
        let est = twopoint(1.0, 1.0 / 512.0, 0.0, 0.0, 64, 0.0, &[0, 1, 2], 200, 3).unwrap();
        // Same-site, same-time: ρ − ρ² = ¼ up to sampling error.
        assert!((est.entries[1][1][0] - 0.25).abs() < 4.0 * est.std_errors[1][1][0]);
        assert!(est.entries[1][1][1].abs() < 4.0 * est.std_errors[1][1][1] + 1e-9);
    }

    #[test]
    fn q_invariance_refuses_few_replicas() {
        assert!(q_invariance_test(Variant::Asep, 0.0, None, 0.01, &[0.0, 0.5], 10, 1, 0.05).is_err());
        assert!(q_invariance_test(Variant::Asep, 0.0, None, 0.01, &[0.0], 2000, 1, 0.05).is_err());
    }
}
