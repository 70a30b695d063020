use loctime::excursions::{decompose, Sign};
use loctime::localtime::{bridge_local_time_increment, local_time_curve, occupation_local_time};
use loctime::paths::{sample_brownian, TimeGrid};
use loctime::reflaws::{catalog_names, law_catalog};
use loctime::rng::{mix, replicate};
use loctime::skorokhod::{hardy_littlewood, TargetMeasure};
use loctime::Path;
use proptest::prelude::*;

fn brownian(seed: u64, steps: usize) -> Path {
    sample_brownian(TimeGrid::new(1.0 / steps as f64, steps).unwrap(), 0.0, seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn excursions_tile_without_overlap(seed in any::<u64>(), steps in 200usize..3000) {
        let p = brownian(seed, steps);
        let d = decompose(&p);
        let mut last = d.start;
        for e in &d.excursions {
            prop_assert!(e.start >= last - 1e-12, "overlap at {}", e.start);
            prop_assert!(e.end > e.start);
            prop_assert!(e.complete);
            for &v in &e.values {
                prop_assert!(v.abs() <= e.height + 1e-12);
                let right_sign = match e.sign { Sign::Positive => v >= 0.0, Sign::Negative => v <= 0.0 };
                prop_assert!(right_sign);
            }
            last = e.end;
        }
        if let Some(b) = &d.boundary {
            prop_assert!(b.start >= last - 1e-12 && !b.complete);
        }
        prop_assert!(d.covered_time() <= d.end - d.start + 1e-9);
    }

    #[test]
    fn negated_path_flips_signs_only(seed in any::<u64>()) {
        let p = brownian(seed, 1000);
        let mut q = p.clone();
        q.values.iter_mut().for_each(|v| *v = -*v);
        let (a, b) = (decompose(&p), decompose(&q));
        prop_assert_eq!(a.excursions.len(), b.excursions.len());
        for (x, y) in a.excursions.iter().zip(&b.excursions) {
            prop_assert_eq!((x.start, x.end, x.height), (y.start, y.end, y.height));
            prop_assert_ne!(x.sign, y.sign);
        }
    }

    #[test]
    fn occupation_formula_holds_for_curve(seed in any::<u64>()) {
        let p = brownian(seed, 2000);
        let levels: Vec<f64> = (0..=800).map(|k| -4.0 + k as f64 * 0.01).collect();
        let curve = local_time_curve(&p, &levels, 1.0, 0.01).unwrap();
        prop_assert!((curve.integral() - 1.0).abs() < 0.02, "integral {}", curve.integral());
        prop_assert!(curve.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn window_local_time_is_nonnegative_and_grows(seed in any::<u64>(), x in -0.5f64..0.5) {
        let p = brownian(seed, 1000);
        let half = occupation_local_time(&p, x, 0.5, 0.05).unwrap();
        let full = occupation_local_time(&p, x, 1.0, 0.05).unwrap();
        prop_assert!(half >= 0.0 && full >= half);
    }

    #[test]
    fn bridge_increment_decreases_in_u(x0 in -0.2f64..0.2, x1 in -0.2f64..0.2, u in 0.001f64..0.999, dt in 1e-4f64..1e-2) {
        let lo = bridge_local_time_increment(x0, x1, dt, 0.0, u);
        let hi = bridge_local_time_increment(x0, x1, dt, 0.0, (u + 0.3).min(1.0));
        prop_assert!(lo >= hi && hi >= 0.0);
        if x0 * x1 < 0.0 {
            prop_assert!(lo > 0.0);
        }
    }

    #[test]
    fn hardy_littlewood_dominates_identity(a in 0.1f64..3.0, b in 0.1f64..3.0, x in 0.0f64..1.0) {
        let mu = TargetMeasure::two_point(a, b).unwrap();
        let y = -a + x * (a + b);
        let psi = hardy_littlewood(&mu, y).unwrap();
        prop_assert!(psi >= y - 1e-12);
        prop_assert!(mu.barrier(psi) >= y - 1e-9 || psi >= b - 1e-12);
        let uni = TargetMeasure::uniform(-a, a).unwrap();
        let z = -a + x * 2.0 * a * 0.999;
        let p1 = hardy_littlewood(&uni, z).unwrap();
        let p2 = hardy_littlewood(&uni, z + 0.001 * a).unwrap();
        prop_assert!(p1 >= z - 1e-9 && p2 >= p1 - 1e-9);
    }

    #[test]
    fn catalog_cdfs_are_monotone(p in 0.5f64..3.0) {
        for (name, arity) in catalog_names() {
            let params = match *name {
                "uniform" | "normal" => vec![0.0, p],
                _ => vec![p; *arity],
            };
            let Ok(law) = law_catalog(name, &params) else { continue };
            let (lo, hi) = law.support();
            let (lo, hi) = (lo.max(-10.0 * p), hi.min(10.0 * p + 10.0));
            let mut prev = 0.0;
            for k in 0..=200 {
                let c = law.cdf(lo + (hi - lo) * k as f64 / 200.0);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c), "{} cdf {}", name, c);
                prop_assert!(c >= prev - 1e-9, "{} not monotone", name);
                prev = c;
            }
        }
    }

    #[test]
    fn replicate_is_ordered_by_index(seed in any::<u64>(), n in 1usize..200) {
        let out = replicate(n, seed, |i, s| (i, s));
        for (k, (i, s)) in out.into_iter().enumerate() {
            prop_assert_eq!(i, k);
            prop_assert_eq!(s, mix(seed, k as u64));
        }
    }
}
