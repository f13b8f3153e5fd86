use latorbit_core::counting::sandwich_check;
use latorbit_core::ergodic::{dyadic_cover, DyadicSums};
use latorbit_core::geometry::{project_to_sphere, quasi_norm, weighted_flow, DirectionSet, Region, VolumeMethod, WeightPair};
use latorbit_core::lattice::{apply_flow, enumerate_points, unipotent_lattice, Backend, LatticeBasis, ThetaMatrix};
use latorbit_core::rng;
use latorbit_core::siegel::{count_nonzero, siegel_transform, RiemannFunction};
use proptest::prelude::*;

fn weights(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..1.0, k).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let head: f64 = w[..w.len() - 1].iter().sum();
        *w.last_mut().unwrap() = 1.0 - head;
        w
    })
}

fn weight_pair() -> impl Strategy<Value = WeightPair> {
    (1usize..=2, 1usize..=2)
        .prop_filter("d <= 3", |(m, n)| m + n <= 3)
        .prop_flat_map(|(m, n)| (weights(m), weights(n)))
        .prop_map(|(a, b)| WeightPair::new(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quasi_norm_scales_along_flow(w in weights(3), x in prop::collection::vec(-5.0f64..5.0, 3), t in -3.0f64..3.0) {
        let base = quasi_norm(&x, &w).unwrap();
        let moved = quasi_norm(&weighted_flow(&x, &w, t).unwrap(), &w).unwrap();
        prop_assert!((moved - t.exp() * base).abs() <= 1e-9 * (1.0 + moved));
    }

    #[test]
    fn projection_lands_on_unit_sphere(w in weights(2), x in prop::collection::vec(-50.0f64..50.0, 2)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        let p = project_to_sphere(&x, &w).unwrap();
        let norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        // same orbit: one flow time explains every nonzero coordinate
        let times: Vec<f64> = x.iter().zip(&p).zip(&w).filter(|((xi, _), _)| **xi != 0.0).map(|((xi, pi), wi)| {
            assert_eq!(xi.signum(), pi.signum());
            (pi / xi).ln() / wi
        }).collect();
        prop_assert!(times.iter().all(|t| (t - times[0]).abs() < 1e-9));
    }

    #[test]
    fn shell_volume_is_linear_in_t_and_c(wp in weight_pair(), t in 0.1f64..20.0, c in 0.1f64..5.0) {
        let v = Region::y_shell_full(wp.clone(), t, c).unwrap().volume(VolumeMethod::ClosedForm).unwrap().value;
        let expected = f64::from(1u32 << wp.d()) * c * t;
        prop_assert!((v - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn backends_agree_and_points_come_in_pairs(wp in weight_pair(), seed in 0u64..1000, t in 0.0f64..3.0, radius in 0.5f64..3.0) {
        let theta = ThetaMatrix::random(wp.clone(), &mut rng::stream(seed, 0));
        let basis = apply_flow(&unipotent_lattice(&theta), &wp, t).unwrap();
        let ball = Region::ball(wp.clone(), radius).unwrap();
        let s = enumerate_points(&basis, &ball, Backend::Structured, false).unwrap();
        let g = enumerate_points(&basis, &ball, Backend::Generic, false).unwrap();
        prop_assert_eq!(s.len(), g.len());
        prop_assert_eq!(s.len() % 2, 0);
        for p in &s {
            let neg: Vec<i64> = p.coords.iter().map(|c| -c).collect();
            prop_assert!(s.iter().any(|q| q.coords == neg));
        }
    }

    #[test]
    fn siegel_transform_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, r in 0.5f64..2.5, t in 0.5f64..4.0) {
        let wp = WeightPair::equal(1, 1).unwrap();
        let basis = unipotent_lattice(&ThetaMatrix::random(wp.clone(), &mut rng::stream(seed, 1)));
        let f = RiemannFunction::indicator(Region::ball(wp.clone(), r).unwrap());
        let g = RiemannFunction::indicator(Region::y_shell_full(wp.clone(), t, 1.0).unwrap());
        let combined = siegel_transform(&f.combine(a, &g, b).unwrap(), &basis).unwrap();
        let separate = a * siegel_transform(&f, &basis).unwrap() + b * siegel_transform(&g, &basis).unwrap();
        prop_assert!((combined - separate).abs() <= 1e-9 * (1.0 + separate.abs()));
    }

    #[test]
    fn annulus_points_lie_in_the_ball(seed in 0u64..1000, outer in 2.5f64..5.0, t in 0.0f64..3.0) {
        let wp = WeightPair::equal(1, 1).unwrap();
        let basis = apply_flow(&unipotent_lattice(&ThetaMatrix::random(wp.clone(), &mut rng::stream(seed, 2))), &wp, t).unwrap();
        let ann = count_nonzero(&basis, &Region::annulus(wp.clone(), outer).unwrap()).unwrap();
        let ball = count_nonzero(&basis, &Region::ball(wp.clone(), outer).unwrap()).unwrap();
        let inner = count_nonzero(&basis, &Region::ball(wp.clone(), 2.0).unwrap()).unwrap();
        prop_assert!(ann <= ball);
        prop_assert!(ball - ann >= inner);
    }

    #[test]
    fn dyadic_cover_is_binary_expansion(s in 1u32..40, raw in any::<u64>()) {
        let k = 1 + raw % ((1u64 << s) - 1);
        let cover = dyadic_cover(k, s).unwrap();
        prop_assert_eq!(cover.len(), k.count_ones() as usize);
        let mut end = 0;
        for iv in &cover {
            prop_assert_eq!(iv.start(), end);
            prop_assert!(iv.i < s);
            end = iv.end();
        }
        prop_assert_eq!(end, k);
    }

    #[test]
    fn dyadic_prefix_sums(units in prop::collection::vec(-2.0f64..2.0, 64), k in 1u64..64) {
        let sums = DyadicSums::new(6, &units).unwrap();
        let direct: f64 = units[..k as usize].iter().sum();
        let via = sums.integral_to(k).unwrap();
        prop_assert!((via - direct).abs() < 1e-9);
        prop_assert!(via * via <= 6.0 * sums.sum_of_squares() + 1e-9);
    }

    #[test]
    fn sandwich_holds(wp in weight_pair(), seed in 0u64..1000, c in 0.3f64..2.0, r in 0.5f64..2.0, extra in 0.1f64..2.5) {
        let theta = ThetaMatrix::random(wp.clone(), &mut rng::stream(seed, 3));
        let basis = unipotent_lattice(&theta);
        let s = sandwich_check(&basis, &wp, &DirectionSet::full(wp.m()), &DirectionSet::full(wp.n()), r, c, r + extra).unwrap();
        prop_assert!(s.holds, "{:?}", s);
    }

    #[test]
    fn flow_preserves_covolume(d in 2usize..=4, seed in 0u64..1000, t in -3.0f64..3.0) {
        let basis = LatticeBasis::random(d, &mut rng::stream(seed, 4));
        prop_assert!((basis.determinant() - 1.0).abs() < 1e-9);
        let wp = WeightPair::equal(1, d - 1).unwrap();
        let moved = apply_flow(&basis, &wp, t).unwrap();
        prop_assert!((moved.determinant().abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ball_count_bounded_by_wide_annulus(d in 2usize..=3, seed in 0u64..10_000, r in 0.3f64..2.0) {
        let basis = LatticeBasis::random(d, &mut rng::stream(seed, 5));
        let wp = WeightPair::equal(1, d - 1).unwrap();
        let ball = count_nonzero(&basis, &Region::ball(wp.clone(), r).unwrap()).unwrap();
        let outer = 2.0 * d as f64 + 2.0 * r;
        let ann = count_nonzero(&basis, &Region::annulus(wp.clone(), outer).unwrap()).unwrap();
        prop_assert!(ball <= ann, "ball {} annulus {}", ball, ann);
        // width-d annuli always meet a unimodular lattice
        let narrow = count_nonzero(&basis, &Region::annulus(wp, 2.0 * d as f64).unwrap()).unwrap();
        prop_assert!(narrow > 0);
    }

    #[test]
    fn majorized_transforms_are_dominated(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0, r in 1.0f64..3.0, t in 0.0f64..3.0) {
        let wp = WeightPair::equal(1, 1).unwrap();
        let basis = apply_flow(&unipotent_lattice(&ThetaMatrix::random(wp.clone(), &mut rng::stream(seed, 6))), &wp, t).unwrap();
        let ball = RiemannFunction::indicator(Region::ball(wp.clone(), r).unwrap());
        let cube = RiemannFunction::indicator(Region::cube(wp.clone(), vec![0.5 * r, 0.5 * r]).unwrap());
        let f = ball.combine(a, &cube, b).unwrap();
        let bound = (a.abs() + b.abs()) * siegel_transform(&ball, &basis).unwrap();
        prop_assert!(siegel_transform(&f, &basis).unwrap().abs() <= bound + 1e-9);
    }
}

#[test]
fn ball_annulus_bound_on_200_lattices() {
    for d in 2..=3usize {
        let wp = WeightPair::equal(1, d - 1).unwrap();
        for k in 0..200 {
            let basis = LatticeBasis::random(d, &mut rng::stream(77, k));
            for r in [0.5, 1.0, 1.5] {
                let ball = count_nonzero(&basis, &Region::ball(wp.clone(), r).unwrap()).unwrap();
                let outer = 2.0 * d as f64 + 2.0 * r;
                let ann = count_nonzero(&basis, &Region::annulus(wp.clone(), outer).unwrap()).unwrap();
                assert!(ball <= ann, "d={d} lattice {k} r={r}: {ball} > {ann}");
            }
        }
    }
}
