//! Last passage percolation across a finite family of curves, the Pitman
//! transform and its iterates.
//!
//! Curves are integer valued on a common grid `⟦start, start + len − 1⟧` and
//! read as piecewise linear in between; the objective is then piecewise linear
//! in every jump time, so optimizing over grid points is exact. Jump times are
//! weakly ordered on the grid (`t_k ≤ … ≤ t_{j−1}`), which is the discrete form
//! of the strict continuum ordering: both give the same supremum.

use crate::error::{invalid, Error, Result};
use crate::qboson::LineEnsemble;
use serde::{Deserialize, Serialize};

/// `curves[i−1]` is `f_i`; curve 1 is the top one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub start: i64,
    pub curves: Vec<Vec<i64>>,
}

impl Environment {
    pub fn new(start: i64, curves: Vec<Vec<i64>>) -> Result<Self> {
        let len = curves.first().map(|c| c.len()).unwrap_or(0);
        if len == 0 || curves.iter().any(|c| c.len() != len) {
            return invalid("curves must be nonempty and share a domain");
        }
        Ok(Self { start, curves })
    }

    /// One curve per line, space-separated integers; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut curves = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let c: std::result::Result<Vec<i64>, _> = line.split_whitespace().map(str::parse).collect();
            curves.push(c.map_err(|e| Error::Parse { line: n + 1, msg: format!("{e}") })?);
        }
        Self::new(0, curves)
    }

    pub fn len(&self) -> usize {
        self.curves[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn end(&self) -> i64 {
        self.start + self.len() as i64 - 1
    }

    fn idx(&self, t: i64) -> Result<usize> {
        if t < self.start || t > self.end() {
            return invalid(format!("time {t} outside ⟦{}, {}⟧", self.start, self.end()));
        }
        Ok((t - self.start) as usize)
    }

    /// Best values from `(u, k)` to `(t, i)` for all `t ≥ u`, for `i = k` down
    /// to `j`; `table[k − i][t − start]` (`None` before `u`).
    fn table(&self, u: i64, k: usize, j: usize) -> Result<Vec<Vec<Option<i64>>>> {
        if j == 0 || j > k || k > self.curves.len() {
            return invalid(format!("need 1 ≤ j ≤ k ≤ {}", self.curves.len()));
        }
        let u0 = self.idx(u)?;
        let len = self.len();
        let fk = &self.curves[k - 1];
        let mut rows = Vec::with_capacity(k - j + 1);
        rows.push((0..len).map(|t| (t >= u0).then(|| fk[t] - fk[u0])).collect::<Vec<_>>());
        for i in (j..k).rev() {
            let f = &self.curves[i - 1];
            let prev = rows.last().unwrap();
            let mut best: Option<i64> = None;
            let mut row = vec![None; len];
            for t in u0..len {
                let cand = prev[t].map(|p| p - f[t]);
                best = match (best, cand) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                row[t] = best.map(|b| b + f[t]);
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// `f[(u,k) → (v,j)] = sup Σ_{i=j}^k (f_i(t_{i−1}) − f_i(t_i))` with
/// `t_k = u`, `t_{j−1} = v`.
pub fn lpp_value(env: &Environment, u: i64, k: usize, v: i64, j: usize) -> Result<i64> {
    if u > v {
        return invalid("need u ≤ v");
    }
    let rows = env.table(u, k, j)?;
    Ok(rows.last().unwrap()[env.idx(v)?].expect("v ≥ u is reachable"))
}

/// `y ↦ max_{z ≤ y} (g(z) + f[(z,k) → (y,1)])` over the environment's first
/// `k` curves, with the largest maximizing `z`.
pub fn variational(env: &Environment, k: usize, g: &[i64]) -> Result<Vec<(i64, i64)>> {
    if g.len() != env.len() {
        return invalid("g must share the environment's domain");
    }
    let mut out = Vec::with_capacity(env.len());
    let tables: Vec<Vec<Option<i64>>> = (0..env.len())
        .map(|z| env.table(env.start + z as i64, k, 1).map(|t| t.last().unwrap().clone()))
        .collect::<Result<_>>()?;
    for y in 0..env.len() {
        let mut best = (i64::MIN, env.start);
        for z in 0..=y {
            let val = g[z] + tables[z][y].expect("reachable");
            if val >= best.0 {
                best = (val, env.start + z as i64);
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// `PT(f, g)(y) = f(y) + max_{0 ≤ y' ≤ y} (g(y') − f(y'))`.
pub fn pitman(f: &[i64], g: &[i64]) -> Vec<i64> {
    let mut best = i64::MIN;
    f.iter()
        .zip(g)
        .map(|(&a, &b)| {
            best = best.max(b - a);
            a + best
        })
        .collect()
}

/// `PT^{(k)}(f_1..f_k, g) = PT^{(k−1)}(f_1..f_{k−1}, PT(f_k, g))`.
pub fn pitman_iter(fs: &[Vec<i64>], g: &[i64]) -> Vec<i64> {
    fs.iter().rev().fold(g.to_vec(), |acc, f| pitman(f, &acc))
}

/// `sup_y |L^{(2)}_1(y) − max_{z≤y}(L^{(2)}_{k+1}(z) + L^{(1)}[(z,k)→(y,1)])|`.
pub fn pitman_deviation(l1: &LineEnsemble, l2: &LineEnsemble, k: usize) -> Result<i64> {
    if l1.curves.len() < k || l2.curves.len() < k + 1 || k == 0 {
        return invalid("need k curves of color 1 and k + 1 of color 2");
    }
    let len = l1.curves[0].len();
    if l1.curves.iter().chain(&l2.curves).any(|c| c.len() != len) {
        return invalid("mismatched domains");
    }
    let env = Environment::new(0, l1.curves[..k].to_vec())?;
    let var = variational(&env, k, l2.curve(k + 1))?;
    Ok(l2.curve(1).iter().zip(&var).map(|(a, b)| (a - b.0).abs()).max().unwrap_or(0))
}

/// `max_y (PT(L^{(1)}_k, L^{(2)}_{k+1}) − L^{(2)}_k)(y)`; positive means the
/// deterministic lower bound failed.
pub fn pitman_lower_excess(l1: &LineEnsemble, l2: &LineEnsemble, k: usize) -> Result<i64> {
    if l1.curves.len() < k || l2.curves.len() < k + 1 || k == 0 {
        return invalid("need k curves of color 1 and k + 1 of color 2");
    }
    let pt = pitman(l1.curve(k), l2.curve(k + 1));
    Ok(pt.iter().zip(l2.curve(k)).map(|(a, b)| a - b).max().unwrap_or(0))
}

/// `z ↦ f[(z,k)→(y1,1)] − f[(z,k)→(y2,1)]` is non-increasing on `z ≤ y1`.
pub fn crossing_check(env: &Environment, k: usize, y1: i64, y2: i64) -> Result<bool> {
    if y1 >= y2 {
        return invalid("need y1 < y2");
    }
    let mut prev: Option<i64> = None;
    for z in env.start..=y1 {
        let d = lpp_value(env, z, k, y1, 1)? - lpp_value(env, z, k, y2, 1)?;
        if prev.is_some_and(|p| d > p) {
            return Ok(false);
        }
        prev = Some(d);
    }
    Ok(true)
}

/// `z ↦ f[(z,k)→(x,1)] + f_k(z)` is non-increasing on `z ≤ x`.
pub fn modified_monotone_check(env: &Environment, k: usize, x: i64) -> Result<bool> {
    let mut prev: Option<i64> = None;
    for z in env.start..=x {
        let d = lpp_value(env, z, k, x, 1)? + env.curves[k - 1][env.idx(z)?];
        if prev.is_some_and(|p| d > p) {
            return Ok(false);
        }
        prev = Some(d);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_curve_example() {
        let env = Environment::new(0, vec![vec![5, 5, 4], vec![0, -1, -1]]).unwrap();
        assert_eq!(lpp_value(&env, 0, 2, 2, 1).unwrap(), -1);
        assert_eq!(lpp_value(&env, 0, 1, 2, 1).unwrap(), -1);
        assert!(lpp_value(&env, 0, 3, 2, 1).is_err());
    }

    #[test]
    fn pitman_example() {
        assert_eq!(pitman(&[3, 3, 2, 1], &[0, -1, -1, -2]), vec![0, 0, -1, -2]);
        let f = vec![4, 3, 3, 1];
        assert_eq!(pitman(&f, &f), f);
    }

    #[test]
    fn variational_matches_iterate() {
        let env = Environment::new(0, vec![vec![3, 3, 2, 2, 1], vec![2, 1, 1, 0, 0], vec![1, 1, 0, 0, -1]]).unwrap();
        let g = [0, -1, -1, -2, -3];
        let var: Vec<i64> = variational(&env, 3, &g).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(var, pitman_iter(&env.curves, &g));
    }

    #[test]
    fn parse_env() {
        let env = Environment::parse("# top\n1 2 3\n0 0 0\n").unwrap();
        assert_eq!(env.curves.len(), 2);
        assert!(matches!(Environment::parse("1 2\n3 x"), Err(Error::Parse { line: 2, .. })));
        assert!(Environment::parse("1 2\n3").is_err());
    }
}
