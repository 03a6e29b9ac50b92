use kpzlab::asep::{self, ColoredConfiguration};
use kpzlab::lpp::{self, Environment};
use kpzlab::qboson::{self, ExactSampler, QBoson};
use kpzlab::randomness::{self, CounterRng, SeedSpec};
use kpzlab::s6v::{self, BoundaryCondition};
use kpzlab::scaling::{self, Variant};
use kpzlab::verify::{self, EmpiricalDistribution};
use num_rational::BigRational;
use proptest::prelude::*;

fn q_strategy() -> impl Strategy<Value = f64> {
    (0u32..95).prop_map(|k| k as f64 / 100.0)
}

/// Weakly monotone map given by sorted cut points: `τ(c) = #{cuts ≤ c}`.
fn tau(cuts: &[i32]) -> impl Fn(i32) -> i32 + '_ {
    move |c| cuts.iter().filter(|&&k| k <= c).count() as i32
}

/// Exhaustive LPP over weakly ordered jump tuples.
fn lpp_brute(env: &Environment, u: i64, k: usize, v: i64, j: usize) -> i64 {
    fn rec(env: &Environment, i: usize, j: usize, lo: i64, v: i64, acc: i64) -> i64 {
        let f = |i: usize, t: i64| env.curves[i - 1][(t - env.start) as usize];
        if i == j {
            return acc + f(j, v) - f(j, lo);
        }
        (lo..=v).map(|t| rec(env, i - 1, j, t, v, acc + f(i, t) - f(i, lo))).max().unwrap()
    }
    rec(env, k, j, u, v, 0)
}

fn env_strategy() -> impl Strategy<Value = Environment> {
    (1usize..=3, 2usize..=8).prop_flat_map(|(n, len)| {
        prop::collection::vec(prop::collection::vec(-3i64..=3, len), n).prop_map(|curves| Environment::new(0, curves).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clocks_are_deterministic_and_prefix_stable(seed in any::<u64>(), site in -50i64..50, q in q_strategy(), h in 1.0f64..20.0) {
        let spec = SeedSpec::asep(seed);
        let short = randomness::clock_events(spec, q, site, h).unwrap();
        let again = randomness::clock_events(spec, q, site, h).unwrap();
        let long = randomness::clock_events(spec, q, site, 2.0 * h).unwrap();
        prop_assert_eq!(&short, &again);
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn vertex_coins_are_deterministic(seed in any::<u64>(), x in 1i64..200, y in -100i64..100, q in q_strategy()) {
        let a = randomness::vertex_coins(SeedSpec::s6v(seed), q, 0.4, x, y).unwrap();
        let b = randomness::vertex_coins(SeedSpec::s6v(seed), q, 0.4, x, y).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn asep_conserves_colors(seed in any::<u64>(), q in q_strategy(), t in 0.0f64..15.0) {
        let cfg = ColoredConfiguration::packed(30);
        let out = asep::evolve(&cfg, SeedSpec::asep(seed), q, t).unwrap();
        prop_assert_eq!(out.multiset(), cfg.multiset());
    }

    #[test]
    fn asep_height_monotonicity(seed in any::<u64>(), q in q_strategy(), d1 in 0.1f64..0.9, d2 in 0.1f64..0.9) {
        let mut rng = CounterRng::new(seed);
        let h1 = verify::random_path(40, d1, &mut rng);
        let h2 = verify::random_path(40, d2, &mut rng);
        let big_h = h2.values.iter().zip(&h1.values).map(|(b, a)| b - a).max().unwrap();
        let out = asep::basic_couple(&[(h1, 0.0), (h2, 0.0)], SeedSpec::asep(seed), q, 6.0).unwrap();
        for y in -10..=10 {
            prop_assert!(out[1].at(y).unwrap() <= out[0].at(y).unwrap() + big_h);
        }
    }

    #[test]
    fn asep_merge_commutes(seed in any::<u64>(), q in q_strategy(), cuts in prop::collection::btree_set(-20i32..20, 0..4)) {
        let cuts: Vec<i32> = cuts.into_iter().collect();
        let cfg = ColoredConfiguration::packed(20);
        let spec = SeedSpec::asep(seed);
        let a = asep::merge_colors(&asep::evolve(&cfg, spec, q, 5.0).unwrap(), tau(&cuts)).unwrap();
        let b = asep::evolve(&asep::merge_colors(&cfg, tau(&cuts)).unwrap(), spec, q, 5.0).unwrap();
        prop_assert_eq!(a.colors, b.colors);
    }

    #[test]
    fn s6v_merge_commutes(seed in any::<u64>(), q in q_strategy(), cuts in prop::collection::btree_set(-6i32..6, 0..3)) {
        let cuts: Vec<i32> = cuts.into_iter().collect();
        let bd = BoundaryCondition::packed(6);
        let f = s6v::sample(&bd, q, 0.4, 8, None, seed).unwrap();
        let merged = f.merge_colors(tau(&cuts)).unwrap();
        let direct = s6v::sample(&s6v::merge_boundary(&bd, tau(&cuts)), q, 0.4, 8, Some(f.cap), seed).unwrap();
        for t in 0..=8 {
            for y in -6..=12 {
                for x in 0..=cuts.len() as i64 {
                    prop_assert_eq!(merged.colored_height(x, y, t).unwrap(), direct.colored_height(x, y, t).unwrap());
                }
            }
        }
    }

    #[test]
    fn deterministic_inequalities(seed in any::<u64>()) {
        let model = QBoson::packed(2, 2, 0.5, 0.5).unwrap();
        let sampler = ExactSampler::new(&model, 8).unwrap();
        let c = verify::inequality_replica(seed, 24, 4.0, &sampler).unwrap();
        prop_assert!(c.checks > 0);
        prop_assert_eq!(c.violations(), 0, "{:?}", c);
    }

    #[test]
    fn r_weights_are_stochastic(qn in 0i64..10, zn in 0i64..10, a in 0usize..4, i in 0usize..4) {
        let q = BigRational::new(qn.into(), 10.into());
        let z = BigRational::new(zn.into(), 10.into());
        let mut total = BigRational::from_integer(0.into());
        for b in 0..4 {
            for j in 0..4 {
                total += qboson::weight_r(&q, &z, a, i, b, j);
            }
        }
        prop_assert_eq!(total, BigRational::from_integer(1.into()));
    }

    #[test]
    fn lpp_matches_brute_force(env in env_strategy(), picks in any::<(u16, u16, u16, u16)>()) {
        let n = env.curves.len();
        let len = env.len() as i64;
        let k = 1 + picks.0 as usize % n;
        let j = 1 + picks.1 as usize % k;
        let u = picks.2 as i64 % len;
        let v = u + picks.3 as i64 % (len - u);
        prop_assert_eq!(lpp::lpp_value(&env, u, k, v, j).unwrap(), lpp_brute(&env, u, k, v, j));
    }

    #[test]
    fn pitman_iterate_is_variational(env in env_strategy(), g0 in -3i64..3) {
        let g: Vec<i64> = (0..env.len() as i64).map(|t| g0 - t / 2).collect();
        let var: Vec<i64> = lpp::variational(&env, env.curves.len(), &g).unwrap().into_iter().map(|p| p.0).collect();
        prop_assert_eq!(var, lpp::pitman_iter(&env.curves, &g));
    }

    #[test]
    fn crossing_monotonicity(env in env_strategy(), a in any::<u16>(), b in any::<u16>()) {
        let len = env.len() as i64;
        let y1 = a as i64 % (len - 1);
        let y2 = y1 + 1 + b as i64 % (len - 1 - y1);
        for k in 1..=env.curves.len() {
            prop_assert!(lpp::crossing_check(&env, k, y1, y2).unwrap());
        }
    }

    #[test]
    fn exact_samples_satisfy_ensemble_properties(seed in any::<u64>(), q in q_strategy()) {
        let model = QBoson::new(3, 2, vec![1, 2, 2], q, 0.5).unwrap();
        let cfg = qboson::exact_sample(&model, 10, seed).unwrap();
        let ens: Vec<_> = (1..=2).map(|c| cfg.line_ensemble(c, 4)).collect();
        prop_assert_eq!(qboson::check_ensemble_properties(&ens), Ok(()));
        prop_assert!(lpp::pitman_lower_excess(&ens[0], &ens[1], 1).unwrap() <= 0);
    }

    #[test]
    fn scaling_relations(asep in any::<bool>(), a in 0.01f64..0.99, q in q_strategy(), z in 0.05f64..0.95) {
        let p = if asep {
            scaling::constants(Variant::Asep, 2.0 * a - 1.0, q, None, 0.01).unwrap()
        } else {
            let (lo, hi) = (z, 1.0 / z);
            scaling::constants(Variant::S6v, lo + a * (hi - lo), q, Some(z), 0.01).unwrap()
        };
        let (r1, r2) = p.residuals();
        prop_assert!(r1.abs() <= 1e-12 && r2.abs() <= 1e-12, "{:?}", p);
    }

    #[test]
    fn ks_is_a_metric_on_samples(xs in prop::collection::vec(-20i32..20, 1..60), ys in prop::collection::vec(-20i32..20, 1..60)) {
        let f = |v: &[i32]| EmpiricalDistribution::from_samples(&v.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let (a, b) = (f(&xs), f(&ys));
        let d = verify::ks_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, verify::ks_distance(&b, &a).unwrap());
        prop_assert_eq!(verify::ks_distance(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn site_draws_are_uncorrelated() {
    // Neighbouring vertices share a seed; their up-coins must be independent.
    let n = 100_000u64;
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for s in 0..n {
        let a = randomness::vertex_coins(SeedSpec::s6v(s), 0.5, 0.4, 3, 7).unwrap();
        let b = randomness::vertex_coins(SeedSpec::s6v(s), 0.5, 0.4, 4, 7).unwrap();
        let (x, y) = (a.up_coin as u8 as f64, b.up_coin as u8 as f64);
        sx += x;
        sy += y;
        sxy += x * y;
    }
    let n = n as f64;
    let cov = sxy / n - (sx / n) * (sy / n);
    let px = sx / n;
    let py = sy / n;
    let se = (px * (1.0 - px) * py * (1.0 - py) / n).sqrt();
    assert!(cov.abs() <= 4.0 * se, "cov {cov} vs se {se}");
}
