//! KPZ rescaling of height functions: scaling constants, sheet and landscape
//! transforms, and the initial-profile map.
//!
//! Rounding convention (the only place it is decided): the real arguments
//! `X = βxε^{−2/3}` and `Y = τα(t−s)ε^{−1} + βyε^{−2/3}` are evaluated at the
//! integer corners `⌊·⌋`, `⌈·⌉` and the rescaled value is interpolated
//! bilinearly between them. Arguments within `1e−9` of an integer snap to it.
//! Six-vertex times are `⌊sε^{−1}⌋`; ASEP times are real. `τ` is the time
//! convention factor: 2 for ASEP (times `2γ^{−1}ε^{−1}t`), 1 for S6V.

use crate::asep::{safe_half_width, BernoulliPath, ProfileSim};
use crate::error::{domain, invalid, Error, Result};
use crate::randomness::SeedSpec;
use crate::s6v::{self, BoundaryCondition, UncoloredField};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Asep,
    S6v,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asep" => Ok(Variant::Asep),
            "s6v" => Ok(Variant::S6v),
            _ => invalid(format!("unknown variant `{s}` (asep | s6v)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub variant: Variant,
    pub alpha: f64,
    pub q: f64,
    pub z: Option<f64>,
    pub epsilon: f64,
    pub mu: f64,
    pub mu_prime: f64,
    pub mu_second: f64,
    pub sigma: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub fn constants(variant: Variant, alpha: f64, q: f64, z: Option<f64>, epsilon: f64) -> Result<ScalingParams> {
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    if !(epsilon > 0.0) {
        return domain("ε must be positive");
    }
    let (mu, mu_prime, mu_second, sigma) = match variant {
        Variant::Asep => {
            if !(alpha > -1.0 && alpha < 1.0) {
                return domain(format!("α = {alpha} outside the fan (−1, 1)"));
            }
            let a2 = 1.0 - alpha * alpha;
            (0.25 * (1.0 - alpha).powi(2), -0.5 * (1.0 - alpha), 0.5, 0.5 * a2.powf(2.0 / 3.0))
        }
        Variant::S6v => {
            let z = z.ok_or_else(|| Error::Domain("the six-vertex variant needs z".into()))?;
            if !(z > 0.0 && z < 1.0) {
                return domain(format!("z must lie in (0,1), got {z}"));
            }
            if !(alpha > z && alpha < 1.0 / z) {
                return domain(format!("α = {alpha} outside the fan ({z}, {})", 1.0 / z));
            }
            let (sa, sz) = (alpha.sqrt(), z.sqrt());
            let mu = -(sa - sz).powi(2) / (1.0 - z);
            let mu1 = -(1.0 - (z / alpha).sqrt()) / (1.0 - z);
            let mu2 = -(0.5 * sz) * alpha.powf(-1.5) / (1.0 - z);
            let sigma = alpha.powf(-1.0 / 6.0) * z.powf(1.0 / 6.0) * (1.0 - (z * alpha).sqrt()).powf(2.0 / 3.0) * (sa - sz).powf(2.0 / 3.0)
                / (1.0 - z);
            (mu, mu1, mu2, sigma)
        }
    };
    let p = mu_prime.abs();
    let beta = 2.0 * sigma * sigma / (p * (1.0 - p));
    Ok(ScalingParams { variant, alpha, q, z, epsilon, mu, mu_prime, mu_second, sigma, beta, gamma: 1.0 - q })
}

fn near_int(v: f64) -> Option<i64> {
    let r = v.round();
    ((v - r).abs() < 1e-9).then_some(r as i64)
}

/// Integer corners of a real argument with the weight on the upper one.
fn corners(v: f64) -> [(i64, f64); 2] {
    if let Some(i) = near_int(v) {
        return [(i, 1.0), (i, 0.0)];
    }
    let lo = v.floor();
    [(lo as i64, 1.0 - (v - lo)), (lo as i64 + 1, v - lo)]
}

impl ScalingParams {
    pub fn time_factor(&self) -> f64 {
        match self.variant {
            Variant::Asep => 2.0,
            Variant::S6v => 1.0,
        }
    }

    /// `λ = ½|µ″|/τ`: the curvature of the centering in rescaled time.
    pub fn lambda(&self) -> f64 {
        0.5 * self.mu_second.abs() / self.time_factor()
    }

    /// `(σ^{−2}β|µ′|(1−|µ′|) − 2, σ^{−1}β²λ − 1)`.
    pub fn residuals(&self) -> (f64, f64) {
        let p = self.mu_prime.abs();
        (
            self.beta * p * (1.0 - p) / (self.sigma * self.sigma) - 2.0,
            self.beta * self.beta * self.lambda() / self.sigma - 1.0,
        )
    }

    pub fn spatial(&self, x: f64) -> f64 {
        self.beta * x * self.epsilon.powf(-2.0 / 3.0)
    }

    /// Real position argument `X = βxε^{−2/3}`.
    pub fn x_arg(&self, x: f64) -> f64 {
        self.spatial(x)
    }

    /// Real position argument `Y = τα(t−s)ε^{−1} + βyε^{−2/3}`.
    pub fn y_arg(&self, y: f64, s: f64, t: f64) -> f64 {
        self.time_factor() * self.alpha * (t - s) / self.epsilon + self.spatial(y)
    }

    /// Model time for rescaled time `s`: `2γ^{−1}ε^{−1}s` for ASEP,
    /// `⌊sε^{−1}⌋` for S6V.
    pub fn model_time(&self, s: f64) -> f64 {
        match self.variant {
            Variant::Asep => 2.0 * s / (self.gamma * self.epsilon),
            Variant::S6v => (s / self.epsilon + 1e-9).floor(),
        }
    }

    /// `µτ(t−s)ε^{−1}`; additive over consecutive intervals.
    pub fn time_centering(&self, s: f64, t: f64) -> f64 {
        self.mu * self.time_factor() * (t - s) / self.epsilon
    }

    /// Rescaled value at integer arguments `(X, Y)` given `h(X, s; Y, t)`;
    /// `n` is the six-vertex packing size.
    pub fn rescale(&self, h: i64, big_x: i64, s: f64, big_y: i64, t: f64, n: i64) -> f64 {
        let drift = self.time_factor() * self.alpha * (t - s) / self.epsilon;
        // µ′β(y−x)ε^{−2/3} in integer coordinates.
        let slope = self.mu_prime * (big_y as f64 - drift - big_x as f64);
        let pre = self.epsilon.powf(1.0 / 3.0) / self.sigma;
        match self.variant {
            Variant::Asep => pre * (self.time_centering(s, t) + slope - h as f64),
            Variant::S6v => pre * (h as f64 + big_x as f64 - n as f64 - self.time_centering(s, t) - slope),
        }
    }

    fn check_window(&self, x: f64, y: f64, s: f64, t: f64, n: i64) -> Result<()> {
        if !(s < t) {
            return domain(format!("need s < t, got s = {s}, t = {t}"));
        }
        if s < 0.0 {
            return domain("need s ≥ 0");
        }
        if self.variant == Variant::S6v {
            let lim = self.epsilon.powf(-1.0 / 6.0);
            if x.abs() > lim || y.abs() > lim {
                return domain(format!("(x, y) = ({x}, {y}) outside the certified square |·| ≤ {lim:.4}"));
            }
            if (n as f64) < 2.0 * self.alpha / self.epsilon {
                return domain(format!("N = {n} is below 2αε^{{−1}} = {}", 2.0 * self.alpha / self.epsilon));
            }
        }
        Ok(())
    }

    /// `L^ε(x, s; y, t)` from a table of heights, interpolated bilinearly.
    pub fn landscape(&self, x: f64, s: f64, y: f64, t: f64, n: i64, heights: &HeightTable) -> Result<f64> {
        self.check_window(x, y, s, t, n)?;
        let mut acc = 0.0;
        for (bx, wx) in corners(self.x_arg(x)) {
            for (by, wy) in corners(self.y_arg(y, s, t)) {
                let w = wx * wy;
                if w == 0.0 {
                    continue;
                }
                acc += w * self.rescale(heights.get(bx, by)?, bx, s, by, t, n);
            }
        }
        Ok(acc)
    }

    /// `S^ε(x; y) = L^ε(x, 0; y, 1)`.
    pub fn sheet(&self, x: f64, y: f64, n: i64, heights: &HeightTable) -> Result<f64> {
        self.landscape(x, 0.0, y, 1.0, n, heights)
    }

    /// Smallest packing size allowed for the six-vertex sheet.
    pub fn default_n(&self) -> i64 {
        (2.0 * self.alpha.max(0.0) / self.epsilon).ceil() as i64 + 1
    }
}

/// Heights `h(X, s; Y, t)` of one replica at fixed `(s, t)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeightTable {
    map: HashMap<(i64, i64), i64>,
}

impl HeightTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: i64, y: i64, h: i64) {
        self.map.insert((x, y), h);
    }

    pub fn get(&self, x: i64, y: i64) -> Result<i64> {
        self.map.get(&(x, y)).copied().ok_or_else(|| Error::Invalid(format!("missing height sample at ({x}, {y})")))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Integer arguments needed to interpolate at the given real grid.
pub fn needed_args(p: &ScalingParams, xs: &[f64], ys: &[f64], s: f64, t: f64) -> (Vec<i64>, Vec<i64>) {
    let collect = |vals: Vec<f64>| -> Vec<i64> {
        let set: BTreeSet<i64> = vals.into_iter().flat_map(|v| corners(v).map(|c| c.0)).collect();
        set.into_iter().collect()
    };
    (collect(xs.iter().map(|&x| p.x_arg(x)).collect()), collect(ys.iter().map(|&y| p.y_arg(y, s, t)).collect()))
}

/// One replica of `h(X, s; Y, t)` for all requested integer arguments, under
/// the basic coupling of `seed` (shared clocks for ASEP, shared coins for S6V).
pub fn sample_heights(p: &ScalingParams, s: f64, t: f64, big_xs: &[i64], big_ys: &[i64], n: i64, seed: u64) -> Result<HeightTable> {
    if !(s < t) {
        return domain(format!("need s < t, got s = {s}, t = {t}"));
    }
    let mut table = HeightTable::new();
    match p.variant {
        Variant::Asep => {
            let (ts, tt) = (p.model_time(s), p.model_time(t));
            let radius = big_xs.iter().chain(big_ys).map(|v| v.abs()).max().unwrap_or(0);
            let w = safe_half_width(tt, radius);
            for &bx in big_xs {
                let h0 = BernoulliPath::step(bx, -w, w);
                let mut sim = ProfileSim::new(&h0, ts, SeedSpec::asep(seed), p.q)?;
                sim.advance_to(tt)?;
                for &by in big_ys {
                    table.insert(bx, by, sim.height(by)?);
                }
            }
        }
        Variant::S6v => {
            let z = p.z.expect("checked in constants");
            let (cs, ct) = (p.model_time(s) as i64, p.model_time(t) as i64);
            if big_xs.iter().any(|x| x.abs() > n) {
                return domain(format!("start positions must lie in ⟦−{n}, {n}⟧"));
            }
            if cs == 0 {
                // One colored field carries every start position at once.
                let f = s6v::sample(&BoundaryCondition::packed(n), p.q, z, ct, None, seed)?;
                for &bx in big_xs {
                    for &by in big_ys {
                        table.insert(bx, by, f.colored_height(bx, by, ct)?);
                    }
                }
            } else {
                for &bx in big_xs {
                    let h0 = s6v::packed_step(bx, n);
                    let f = UncoloredField::sample(s6v::profile_arrows(&h0)?, -n, cs, p.q, z, ct - cs, None, seed)?;
                    for &by in big_ys {
                        table.insert(bx, by, f.height(by, ct)?);
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Rescaled values on an `xs × ys` grid for one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[i][j]` at `(xs[i], ys[j])`.
    pub values: Vec<Vec<f64>>,
}

impl SheetGrid {
    /// Header `x,<y…>`, then one row per `x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for y in &self.ys {
            out.push_str(&format!(",{y}"));
        }
        out.push('\n');
        for (x, row) in self.xs.iter().zip(&self.values) {
            out.push_str(&format!("{x}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Landscape values `L^ε(x, s; y, t)` over a grid for one replica.
pub fn landscape_grid(p: &ScalingParams, xs: &[f64], s: f64, ys: &[f64], t: f64, n: i64, seed: u64) -> Result<SheetGrid> {
    for &x in xs {
        for &y in ys {
            p.check_window(x, y, s, t, n)?;
        }
    }
    let (bx, by) = needed_args(p, xs, ys, s, t);
    let table = sample_heights(p, s, t, &bx, &by, n, seed)?;
    let values = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| p.landscape(x, s, y, t, n, &table)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(SheetGrid { xs: xs.to_vec(), ys: ys.to_vec(), values })
}

pub fn sheet_grid(p: &ScalingParams, xs: &[f64], ys: &[f64], n: i64, seed: u64) -> Result<SheetGrid> {
    landscape_grid(p, xs, 0.0, ys, 1.0, n, seed)
}

/// Parse `lo:hi:step` into the grid `lo, lo+step, …, ≤ hi`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: std::result::Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    match nums.as_deref() {
        Ok([v]) => Ok(vec![*v]),
        Ok([lo, hi, step]) if *step > 0.0 && hi >= lo => {
            let k = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=k).map(|i| lo + i as f64 * step).collect())
        }
        _ => invalid(format!("grid `{s}` is not `lo:hi:step` with step > 0")),
    }
}

/// `x ↦ −2ε^{1/3}(h0(2xε^{−2/3}) + xε^{−2/3})`, with `h0` read linearly
/// between integers.
pub fn init_rescale(h0: &BernoulliPath, epsilon: f64, xs: &[f64]) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return domain("ε must be positive");
    }
    let e23 = epsilon.powf(-2.0 / 3.0);
    xs.iter()
        .map(|&x| {
            let arg = 2.0 * x * e23;
            let mut v = 0.0;
            for (k, w) in corners(arg) {
                if w == 0.0 {
                    continue;
                }
                v += w * h0.at(k).ok_or(Error::OutOfRegion { x: k, y: k })? as f64;
            }
            Ok(-2.0 * epsilon.powf(1.0 / 3.0) * (v + x * e23))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asep_alpha_zero() {
        let p = constants(Variant::Asep, 0.0, 0.3, None, 0.01).unwrap();
        assert!((p.mu - 0.25).abs() < 1e-15 && (p.sigma - 0.5).abs() < 1e-15 && (p.beta - 2.0).abs() < 1e-15);
        let (a, b) = p.residuals();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        assert!(constants(Variant::Asep, 1.0, 0.0, None, 0.01).is_err());
    }

    #[test]
    fn s6v_quarter() {
        let p = constants(Variant::S6v, 1.0, 0.0, Some(0.25), 0.01).unwrap();
        assert!((p.mu + 1.0 / 3.0).abs() < 1e-12);
        // σ³ = 2/27 and β = 9σ² = 2^{2/3} ≈ 1.5874 at this point.
        assert!((p.sigma - (2.0f64 / 27.0).cbrt()).abs() < 1e-12 && (p.sigma - 0.4200).abs() < 5e-5);
        assert!((p.beta - 2f64.powf(2.0 / 3.0)).abs() < 1e-12 && (p.beta - 1.588).abs() < 1e-3);
        let (a, b) = p.residuals();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        let at_z = constants(Variant::S6v, 0.25 + 1e-12, 0.0, Some(0.25), 0.01).unwrap();
        assert!(at_z.mu.abs() < 1e-10);
        assert!(constants(Variant::S6v, 0.2, 0.0, Some(0.25), 0.01).is_err());
    }

    #[test]
    fn constant_shift_moves_sheet_linearly() {
        let p = constants(Variant::Asep, 0.0, 0.0, None, 1.0 / 64.0).unwrap();
        let mut a = HeightTable::new();
        let mut b = HeightTable::new();
        for x in -10..=10 {
            for y in -10..=10 {
                a.insert(x, y, 100 + x - y);
                b.insert(x, y, 107 + x - y);
            }
        }
        let d = p.sheet(0.3, -0.2, 0, &b).unwrap() - p.sheet(0.3, -0.2, 0, &a).unwrap();
        assert!((d + 7.0 * p.epsilon.powf(1.0 / 3.0) / p.sigma).abs() < 1e-12);
        assert!(p.sheet(5.0, 0.0, 0, &a).is_err());
    }

    #[test]
    fn s6v_refuses_outside_square() {
        let p = constants(Variant::S6v, 0.5, 0.0, Some(0.25), 1.0 / 64.0).unwrap();
        let t = HeightTable::new();
        assert!(p.sheet(2.5, 0.0, 100, &t).is_err());
        assert!(p.sheet(0.0, 0.0, 10, &t).is_err());
        assert!(p.landscape(0.0, 1.0, 0.0, 1.0, 100, &t).is_err());
    }

    #[test]
    fn centering_is_additive() {
        let p = constants(Variant::S6v, 0.7, 0.2, Some(0.4), 0.003).unwrap();
        let (r, s, t) = (0.2, 0.9, 1.7);
        assert!((p.time_centering(r, t) - p.time_centering(r, s) - p.time_centering(s, t)).abs() < 1e-9);
    }

    #[test]
    fn init_rescale_step_and_flat() {
        let eps = 1.0 / 512.0;
        let step = BernoulliPath::step(0, -2000, 2000);
        let xs = [0.0, 0.5, 1.0];
        let v = init_rescale(&step, eps, &xs).unwrap();
        for (x, v) in xs.iter().zip(v) {
            assert!((v + 2.0 * x * eps.powf(-1.0 / 3.0)).abs() < 1e-9);
        }
        let flat = BernoulliPath::new(-2000, (-2000..=2000i64).map(|z| -(z as f64 / 2.0).ceil() as i64).collect()).unwrap();
        let grid = parse_grid("-3:3:0.125").unwrap();
        for v in init_rescale(&flat, eps, &grid).unwrap() {
            assert!(v.abs() <= 2.0 * eps.powf(1.0 / 3.0) + 1e-12);
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("-2:2:0.25").unwrap().len(), 17);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert!(parse_grid("1:0:0.1").is_err());
    }

    #[test]
    fn sheet_grid_shape_and_determinism() {
        let p = constants(Variant::Asep, 0.0, 0.0, None, 1.0 / 27.0).unwrap();
        let xs = parse_grid("-1:1:0.5").unwrap();
        let g = sheet_grid(&p, &xs, &xs, 0, 9).unwrap();
        assert_eq!(g.values.len(), 5);
        assert_eq!(g.to_csv(), sheet_grid(&p, &xs, &xs, 0, 9).unwrap().to_csv());
        let s = constants(Variant::S6v, 0.5, 0.3, Some(0.25), 1.0 / 27.0).unwrap();
        let g = sheet_grid(&s, &[0.0, 0.5], &[0.0], s.default_n(), 4).unwrap();
        assert!(g.values.iter().flatten().all(|v| v.is_finite()));
    }
}
