use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsobolev::calculus::{Grid, GridDomain, GridFunction};
use wsobolev::filtration::FiltrationSpec;
use wsobolev::weights::{ap_constant, ap_functional, mixed_norm, ApFamily, MixedNormSpec, Weight};

fn half_line(len: f64) -> ApFamily {
    let n_min = -(len.log2().round() as i32);
    ApFamily::new(FiltrationSpec::half(1, n_min, 5, vec![[0.0, len]]), 4).unwrap()
}

fn line(len: f64) -> ApFamily {
    let n_min = -(len.log2().round() as i32);
    ApFamily::new(FiltrationSpec::full(1, n_min, 5, vec![[-len, len]]), 4).unwrap()
}

fn tabulated(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| 10f64.powf(rng.gen_range(-1.5..1.5))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ap_constant_is_at_least_one(seed in any::<u64>(), p in 1.2f64..6.0, t in 0.05f64..0.95) {
        let fam = ApFamily::new(FiltrationSpec::full(2, -1, 3, vec![[0.0, 2.0]; 2]), 2).unwrap();
        let w = Weight::tabulated(tabulated(256, seed)).unwrap();
        prop_assert!(ap_constant(&w, p, &fam).unwrap().value >= 1.0 - 1e-12);
        let q = -1.0 + t * p;
        let v = ap_constant(&Weight::power_x1(q), p, &half_line(8.0)).unwrap().value;
        prop_assert!(v >= 1.0 - 1e-12 && v.is_finite(), "q = {q}: {v}");
    }

    #[test]
    fn constant_weights_have_constant_one(c in 0.01f64..100.0, p in 1.1f64..8.0) {
        let fam = ApFamily::new(FiltrationSpec::full(2, -1, 2, vec![[0.0, 2.0]; 2]), 2).unwrap();
        let v = ap_constant(&Weight::tabulated(vec![c; 64]).unwrap(), p, &fam).unwrap().value;
        prop_assert!((v - 1.0).abs() <= 1e-12, "{v}");
    }

    #[test]
    fn dilation_leaves_the_constant_unchanged(s in 0.1f64..10.0, p in 1.5f64..5.0, t in 0.05f64..0.95, seed in any::<u64>(), k in -2i32..3) {
        let q = -1.0 + t * p;
        let fam = half_line(8.0);
        let w = Weight::power_x1(q);
        let a = ap_constant(&w, p, &fam).unwrap().value;
        let b = ap_constant(&w.dilated(s).unwrap(), p, &fam).unwrap().value;
        prop_assert!((a - b).abs() <= 0.05 * a, "{a} vs {b}");

        // tabulated weights move with the filtration
        let spec = FiltrationSpec::full(2, -1, 3, vec![[0.0, 2.0]; 2]);
        let w = Weight::tabulated(tabulated(256, seed)).unwrap();
        let a = ap_constant(&w, p, &ApFamily::new(spec.clone(), 2).unwrap()).unwrap().value;
        let b = ap_constant(&w, p, &ApFamily::new(spec.dilated(k), 2).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() <= 0.05 * a, "{a} vs {b}");
    }

    #[test]
    fn even_reflection_costs_at_most_four(p in 1.5f64..5.0, t in 0.05f64..0.95, seed in any::<u64>()) {
        let q = -1.0 + t * p;
        let w = Weight::power_x1(q);
        let half = ap_constant(&w, p, &half_line(8.0)).unwrap().value;
        let full = ap_constant(&w, p, &line(8.0)).unwrap().value;
        prop_assert!(full <= 4.0 * half, "q = {q}: {full} > 4 x {half}");

        let vals = tabulated(256, seed);
        let mut mirrored: Vec<f64> = vals.iter().rev().copied().collect();
        mirrored.extend_from_slice(&vals);
        let half = ap_constant(&Weight::tabulated(vals).unwrap(), p, &half_line(8.0)).unwrap().value;
        let full = ap_constant(&Weight::tabulated(mirrored).unwrap(), p, &line(8.0)).unwrap().value;
        prop_assert!(full <= 4.0 * half, "tabulated: {full} > 4 x {half}");
    }

    #[test]
    fn hatted_power_is_stable_inside_and_grows_outside(p in 1.5f64..5.0, t in 0.05f64..0.95) {
        let q = -1.0 + t * p;
        let w = Weight::hatted_power_x1(q);
        let vals: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&l| ap_constant(&w, p, &half_line(l)).unwrap().value)
            .collect();
        let max = vals.iter().copied().fold(0.0, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(max.is_finite() && max / min < 1.05, "q = {q}: {vals:?}");

        for q in [-1.0 - 0.5 * t, p - 1.0 + 0.5 + t] {
            let w = Weight::hatted_power_x1(q);
            let s: Vec<f64> = (1..=7)
                .map(|j| ap_functional(&w, p, &[2f64.powi(-j)], &[1.0], 0).unwrap())
                .collect();
            prop_assert!(s.windows(2).all(|v| v[1] > v[0]), "q = {q}: {s:?}");
        }
    }

    #[test]
    fn mixed_norm_is_a_norm(a in any::<u64>(), b in any::<u64>(), c in -5.0f64..5.0, p1 in 1.0f64..6.0, p2 in 1.0f64..6.0) {
        let g = Arc::new(Grid::over_box(GridDomain::Space, &[[0.0, 1.0], [0.0, 2.0]], &[0.1, 0.2]).unwrap());
        let rand_fn = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = (0..g.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            GridFunction::new(Arc::clone(&g), v).unwrap()
        };
        let (u, v) = (rand_fn(a), rand_fn(b));
        let spec = MixedNormSpec::per_axis(vec![p1.max(1.0 + 1e-6), p2.max(1.0 + 1e-6)], vec![0, 1])
            .unwrap()
            .with_weight(0, Weight::power_x1(0.5));
        let n = |f: &GridFunction| mixed_norm(f, &spec).unwrap();
        let sum = u.zip_with(&v, |x, y| x + y).unwrap();
        prop_assert!(n(&sum) <= (n(&u) + n(&v)) * (1.0 + 1e-12));
        let scaled = n(&u.map(|x| c * x));
        prop_assert!((scaled - c.abs() * n(&u)).abs() <= 1e-12 * (1.0 + scaled));
    }
}
