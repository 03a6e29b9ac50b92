//! Worked examples with frozen reference values.

use kpzlab::asep::{self, AsepSim, BernoulliPath, ColoredConfiguration, ProfileSim};
use kpzlab::lpp::{self, Environment};
use kpzlab::qboson::{self, ExactSampler, QBoson};
use kpzlab::randomness::{replica_seed, CounterRng, SeedSpec};
use kpzlab::s6v::{self, BoundaryCondition};
use kpzlab::scaling::{self, Variant};
use kpzlab::verify::{self, EmpiricalDistribution};
use num_rational::BigRational;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

// ---------------------------------------------------------------------------
// ASEP

/// `E h(0,0;0,100)` for TASEP from the step, from 10^5 replicas of the
/// exponential last-passage representation (particle k has crossed the
/// origin iff G(k,k) ≤ t): 27.8348 ± 0.0054. The naive hydrodynamic value
/// t/4 = 25 misses the t^{1/3} fluctuation shift.
const TASEP_MEAN_T100: (f64, f64) = (27.8348, 0.0054);

#[test]
fn tasep_step_mean_height() {
    let hs: Vec<f64> =
        (0..10_000).map(|i| asep::step_height_sample(0.0, 100.0, 0, replica_seed(11, i)).unwrap().at(0).unwrap() as f64).collect();
    let (m, se) = mean_se(&hs);
    let tol = 3.0 * (se * se + TASEP_MEAN_T100.1 * TASEP_MEAN_T100.1).sqrt();
    assert!((m - TASEP_MEAN_T100.0).abs() <= tol, "mean {m} ± {se}");
    assert!(m > 25.0 + 10.0 * se, "the finite-time shift is visible");
}

#[test]
fn step_profiles_match_colored_heights() {
    let w = 60;
    for seed in 0..100 {
        let spec = SeedSpec::asep(seed);
        let q = 0.1 + 0.8 * (seed as f64 / 100.0);
        let mut packed = AsepSim::new(ColoredConfiguration::packed(w), spec, q, 0.0).unwrap();
        packed.advance_to(5.0).unwrap();
        for x in [-3, 0, 4] {
            let mut p = ProfileSim::new(&BernoulliPath::step(x, -w, w), 0.0, spec, q).unwrap();
            p.advance_to(5.0).unwrap();
            for y in -8..=8 {
                assert_eq!(p.height(y).unwrap(), asep::colored_height(packed.config(), x, y, 5.0).unwrap(), "seed {seed} x {x} y {y}");
            }
        }
    }
}

#[test]
fn nested_steps_and_triangle_inequality() {
    let w = 60;
    for seed in 0..50 {
        let spec = SeedSpec::asep(seed);
        let q = 0.4;
        let (x1, x2) = (3, -2);
        let out = asep::basic_couple(&[(BernoulliPath::step(x1, -w, w), 0.0), (BernoulliPath::step(x2, -w, w), 0.0)], spec, q, 6.0).unwrap();
        for y in -10..=10 {
            let (h1, h2) = (out[0].at(y).unwrap(), out[1].at(y).unwrap());
            assert!(h2 <= h1 && h1 <= h2 + (x1 - x2), "seed {seed} y {y}");
        }
        // h(x,0;z,s) + h(z,s;y,t) ≥ h(x,0;y,t)
        let (s, t) = (3.0, 6.0);
        let mut from0 = ProfileSim::new(&BernoulliPath::step(0, -w, w), 0.0, spec, q).unwrap();
        from0.advance_to(s).unwrap();
        let mid: Vec<i64> = (-6..=6).map(|z| from0.height(z).unwrap()).collect();
        from0.advance_to(t).unwrap();
        for (i, z) in (-6..=6).enumerate() {
            let mut p = ProfileSim::new(&BernoulliPath::step(z, -w, w), s, spec, q).unwrap();
            p.advance_to(t).unwrap();
            for y in -6..=6 {
                assert!(mid[i] + p.height(y).unwrap() >= from0.height(y).unwrap(), "seed {seed} z {z} y {y}");
            }
        }
    }
}

#[test]
fn single_particle_on_a_ring_is_uniform() {
    let l = 10;
    let n = 10_000;
    let mut counts = vec![0usize; l];
    for i in 0..n {
        let mut colors = vec![0; l];
        colors[0] = 1;
        let mut sim = AsepSim::new(ColoredConfiguration::ring(colors), SeedSpec::asep(replica_seed(5, i)), 0.0, 0.0).unwrap();
        sim.advance_to(200.0).unwrap();
        counts[sim.config().colors.iter().position(|&c| c == 1).unwrap()] += 1;
    }
    let p = 1.0 / l as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    for c in counts {
        assert!((c as f64 / n as f64 - p).abs() <= 4.0 * se, "{c}");
    }
}

#[test]
fn ring_occupation_has_mean_half() {
    let n = 10_000;
    let occ: Vec<f64> = (0..n)
        .map(|i| {
            let cfg = asep::ring_stationary_sample(&[30], 60, 1000.0, 0.3, replica_seed(9, i)).unwrap();
            (cfg.colors[17] == 1) as u8 as f64
        })
        .collect();
    let (m, se) = mean_se(&occ);
    assert!((m - 0.5).abs() <= 3.0 * se, "{m} ± {se}");
}

#[test]
fn distinguished_particle_on_a_ring_is_uniform() {
    let (l, n) = (8, 10_000);
    let mut counts = vec![0usize; l];
    for i in 0..n {
        let cfg = asep::ring_stationary_sample(&[3, 1], l, 200.0, 0.0, replica_seed(13, i)).unwrap();
        counts[cfg.colors.iter().position(|&c| c == 2).unwrap()] += 1;
    }
    let p = 1.0 / l as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    for c in counts {
        assert!((c as f64 / n as f64 - p).abs() <= 4.0 * se, "{c}");
    }
}

// ---------------------------------------------------------------------------
// Stochastic six-vertex

#[test]
fn single_arrow_turns_up_with_closed_form_probability() {
    let bd = BoundaryCondition::new(1, vec![(1, 1)], 0).unwrap();
    let n = 100_000;
    let (q, z) = (0.0, 0.4);
    let up = (0..n).filter(|&i| s6v::sample(&bd, q, z, 1, None, replica_seed(3, i)).unwrap().exit(1, 1).unwrap() != 1).count();
    let p = z * (1.0 - q) / (1.0 - q * z);
    assert_eq!(p, 0.4);
    let f = up as f64 / n as f64;
    assert!((f - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "{f}");
}

#[test]
fn packed_boundary_counts_every_arrow() {
    let n = 5;
    let f = s6v::sample(&BoundaryCondition::packed(n), 0.5, 0.4, 3, None, 1).unwrap();
    for t in 0..=3 {
        assert_eq!(f.colored_height(-n, -n - 1, t).unwrap(), 2 * n + 1);
    }
}

#[test]
fn finite_speed_box() {
    let r = verify::finite_speed_test(40, 80, 0.2, 0.8, 50, 17).unwrap();
    assert!(r.pass, "{}", r.line());
}

// ---------------------------------------------------------------------------
// q-Boson

#[test]
fn partition_examples() {
    let m = QBoson::new(1, 1, vec![1], rat(1, 2), rat(1, 2)).unwrap();
    assert_eq!(m.closed_form(), rat(3, 2));
    let tm = m.to_f64_model().transfer_matrix().unwrap();
    assert!((tm.partition_truncated(40) - 1.5).abs() <= 1e-8);
    let m2 = QBoson::new(2, 1, vec![1, 2], 0.0, 0.3).unwrap();
    let tm2 = m2.transfer_matrix().unwrap();
    assert!((tm2.partition_truncated(40) - 1.0 / (0.7f64 * 0.7)).abs() <= 1e-8);
}

#[test]
fn straight_configuration_weight_and_frequency() {
    let m = QBoson::new(1, 1, vec![1], rat(1, 2), rat(1, 2)).unwrap();
    let k = 6;
    let configs = qboson::enumerate(&m, k, 1_000_000).unwrap();
    let straight = configs.iter().find(|(c, _)| c.exits.iter().all(|w| *w == c.frozen())).unwrap();
    assert_eq!(straight.1, rat(1, 1));

    let mf = m.to_f64_model();
    let sampler = ExactSampler::new(&mf, 40).unwrap();
    let n = 100_000;
    let hits = (0..n)
        .filter(|&i| {
            let c = sampler.sample(&mut CounterRng::new(replica_seed(21, i)));
            c.exits.iter().all(|w| *w == c.frozen())
        })
        .count();
    let (f, p) = (hits as f64 / n as f64, 2.0 / 3.0);
    assert!((f - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "{f}");
}

#[test]
fn sampler_matches_enumeration() {
    let m = QBoson::new(2, 2, vec![1, 2], 0.5, 0.4).unwrap();
    let k = 14;
    let exact = qboson::enumerate(&m, k, 5_000_000).unwrap();
    let z: f64 = exact.iter().map(|p| p.1).sum();
    let mut law = std::collections::BTreeMap::new();
    for (c, w) in &exact {
        *law.entry(format!("{:?}", c.exits)).or_insert(0.0) += w / z;
    }
    // 5545 configurations: at 10^5 draws the pure-noise TV is already ≈ 0.017,
    // so the bound is checked at 10^6.
    let sampler = ExactSampler::new(&m, k).unwrap();
    let n = 1_000_000;
    let mut emp = std::collections::BTreeMap::new();
    for i in 0..n {
        let c = sampler.sample(&mut CounterRng::new(replica_seed(4, i)));
        *emp.entry(format!("{:?}", c.exits)).or_insert(0.0) += 1.0 / n as f64;
    }
    let tv = verify::tv_laws(&law, &emp);
    assert!(tv <= 0.01, "{tv}");
}

#[test]
fn ensemble_boundary_values() {
    let m = QBoson::new(3, 2, vec![1, 2, 2], 0.5, 0.4).unwrap();
    for seed in 0..50 {
        let c = qboson::exact_sample(&m, 12, seed).unwrap();
        for k in 1..=2u8 {
            let e = c.line_ensemble(k, 3);
            for curve in &e.curves {
                assert_eq!(*curve.last().unwrap(), 0);
            }
            let expect = c.sigma.iter().filter(|&&s| s >= k).count() as i64;
            assert_eq!(e.curve(1)[0], expect);
        }
    }
}

#[test]
fn pitman_error_nonnegative_exhaustively() {
    for len in 1..=6u32 {
        for code in 0..3usize.pow(len) {
            let v: Vec<u8> = (0..len).map(|i| (code / 3usize.pow(i) % 3) as u8).collect();
            for mask in 0..(1usize << len) {
                let x: Vec<u8> = (0..len).map(|i| (mask >> i & 1) as u8).collect();
                let Ok(words) = qboson::valid_words(&v, &x) else { continue };
                let Ok(wstar) = qboson::q0_assign_colors(&v, &x) else { continue };
                for w in words {
                    assert!(qboson::pitman_error(&w, &wstar).unwrap() >= 0, "v {v:?} x {x:?} w {w:?}");
                }
            }
        }
    }
}

#[test]
fn pitman_tail_is_monotone_at_q_06() {
    let s = verify::pitman_suite(3, 3, vec![1, 2, 2], 0.6, 0.5, 20, 2, 1000, 8).unwrap();
    let tail: Vec<usize> = (1..=3).map(|m| s.deviation_hist.iter().skip(m).sum()).collect();
    assert!(tail.windows(2).all(|w| w[0] >= w[1]), "{tail:?}");
    assert_eq!(s.lower_violations, 0);
}

// ---------------------------------------------------------------------------
// Last passage

#[test]
fn lpp_composition_identity() {
    let mut rng = CounterRng::new(77);
    for _ in 0..50 {
        let curves: Vec<Vec<i64>> = (0..4).map(|_| (0..9).map(|_| (rng.uniform() * 7.0) as i64 - 3).collect()).collect();
        let env = Environment::new(0, curves).unwrap();
        for m in 1..=4 {
            let direct = lpp::lpp_value(&env, 0, 4, 8, 1).unwrap();
            let split = (0..=8).map(|z| lpp::lpp_value(&env, 0, 4, z, m).unwrap() + lpp::lpp_value(&env, z, m, 8, 1).unwrap()).max().unwrap();
            assert_eq!(direct, split, "m {m}");
        }
    }
}

#[test]
fn pitman_perturbation_bound() {
    let mut rng = CounterRng::new(78);
    for _ in 0..200 {
        let mut draw = |a: f64| -> Vec<i64> { (0..12).map(|_| (rng.uniform() * a) as i64).collect() };
        let f = draw(10.0);
        let g = draw(10.0);
        let h = draw(5.0);
        let eps = *h.iter().max().unwrap();
        let gh: Vec<i64> = g.iter().zip(&h).map(|(a, b)| a + b).collect();
        let (p0, p1) = (lpp::pitman(&f, &g), lpp::pitman(&f, &gh));
        assert!(p0.iter().zip(&p1).all(|(a, b)| (a - b).abs() <= 2 * eps));
    }
}

// ---------------------------------------------------------------------------
// Scaling

#[test]
fn s6v_one_point_sanity_band() {
    let p = scaling::constants(Variant::S6v, 1.0, 0.0, Some(0.25), 1.0 / 500.0).unwrap();
    let xs = verify::one_point_samples(&p, 0.0, 0.0, p.default_n(), 10_000, 3).unwrap();
    let d = EmpiricalDistribution::from_samples(&xs);
    assert!(d.mean() < 0.0, "mean {}", d.mean());
    assert!((0.3..=2.0).contains(&d.variance()), "variance {}", d.variance());
}

#[test]
fn exact_figure_value() {
    assert_eq!(verify::gibbs_figure_probability(&rat(1, 2), 2).unwrap(), rat(7, 15));
    // Closed form (1 − q^{k+1}) / (2 − q^{k+1}) at other rational points.
    for (q, k) in [(rat(1, 3), 1), (rat(2, 5), 3), (rat(0, 1), 2)] {
        let qk = (0..=k).fold(rat(1, 1), |a, _| a * q.clone());
        let expect = (rat(1, 1) - qk.clone()) / (rat(2, 1) - qk);
        assert_eq!(verify::gibbs_figure_probability(&q, k).unwrap(), expect);
    }
}

#[test]
fn gibbs_interval_across_row_blocks_is_not_invariant() {
    // ⟦1,3⟧ straddles row N = 2, where the spectral parameter changes
    // from 1 to z; the single-parameter kernel then moves the law.
    let m = QBoson::new(2, 2, vec![1, 1], 0.5, 0.4).unwrap();
    let inside = verify::gibbs_invariance_uncolored(&m, 1, 0, 2).unwrap();
    let across = verify::gibbs_invariance_uncolored(&m, 1, 1, 3).unwrap();
    assert!(inside <= 1e-10, "{inside}");
    assert!(across > 0.05, "{across}");
}

