use proptest::prelude::*;

use colloid_expansion::convergence;
use colloid_expansion::geometry::{self, BallSpec, Point};
use colloid_expansion::graphs::{self, LabeledGraph};
use colloid_expansion::interactions::{self, Configuration, MixtureParams};
use colloid_expansion::mc;

fn point(scale: f64) -> impl Strategy<Value = Point> {
    prop::array::uniform3(-scale..scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lens_decreasing_and_bounded(radius in 0.1f64..3.0, d1 in 0.0f64..7.0, d2 in 0.0f64..7.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let a = geometry::lens_volume(radius, lo).unwrap();
        let b = geometry::lens_volume(radius, hi).unwrap();
        let full = geometry::ball_volume(radius, 3).unwrap();
        prop_assert!(b <= a + 1e-12 * full);
        prop_assert!(a <= full * (1.0 + 1e-12) && b >= 0.0);
        if hi >= 2.0 * radius {
            prop_assert_eq!(b, 0.0);
        }
    }

    #[test]
    fn periodic_distance_symmetric(x in point(10.0), y in point(10.0), side in 0.5f64..8.0) {
        let d = geometry::periodic_distance(&x, &y, side).unwrap();
        let e = geometry::periodic_distance(&y, &x, side).unwrap();
        prop_assert!((d - e).abs() <= 1e-12 * side);
        prop_assert!(d <= side * 3f64.sqrt() / 2.0 + 1e-12);
        prop_assert!(d <= geometry::norm(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]]) + 1e-12);
    }

    #[test]
    fn kruskal_tree_spans(n in 2usize..7, bits in any::<u64>()) {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let mut edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| bits >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        // a path keeps the graph connected
        edges.extend((1..n).map(|i| (i - 1, i)));
        edges.sort_unstable();
        edges.dedup();
        let g = LabeledGraph::from_edges(n, &edges).unwrap();
        let t = graphs::kruskal_tree_of(&g).unwrap();
        prop_assert!(t.is_tree());
        prop_assert_eq!(t.num_edges(), n - 1);
        for e in t.edges() {
            prop_assert!(g.has_edge(e.i, e.j));
        }
        prop_assert_eq!(graphs::kruskal_tree_of(&t).unwrap(), t);
    }

    #[test]
    fn phi_star_below_majorant(
        stars in prop::collection::vec(point(1.6), 1..4),
        clouds in prop::collection::vec(prop::collection::vec(point(1.8), 1..3), 0..3),
    ) {
        let p = MixtureParams::penetrable(1.0, 0.3, 0.0, 0.0).unwrap();
        let c = Configuration { large: stars, clouds };
        let phi = interactions::phi_star_t(&c, &p).unwrap();
        let maj = interactions::tree_majorant(&c, &p).unwrap();
        prop_assert!(phi.abs() <= maj + 1e-9, "{} > {}", phi.abs(), maj);
    }

    #[test]
    fn improvement_ratio_at_least_one(big in 0.5f64..2.0, frac in 0.01f64..0.3, z1 in 0.0f64..0.5, z2 in 0.0f64..0.5) {
        let (lo, hi) = if z1 < z2 { (z1, z2) } else { (z2, z1) };
        let r = |z: f64| {
            let p = MixtureParams::penetrable(big, frac * big, 0.0, z / (big * frac).powi(3)).unwrap();
            convergence::improvement_ratio(&p)
        };
        prop_assert!(r(lo) >= 1.0);
        prop_assert!(r(hi) >= r(lo));
    }

    #[test]
    fn kp_witness_respects_volume_scaling(
        frac in 0.02f64..0.5,
        zs in 0.0f64..0.1,
        zb in 0.0f64..0.05,
        a in 0.0f64..3.0,
        big_a in 0.0f64..3.0,
    ) {
        let p = MixtureParams::penetrable(1.0, frac, zb, zs).unwrap();
        let w = convergence::check_kp(&p, a, big_a).unwrap();
        if w.satisfied {
            prop_assert!(zb <= convergence::max_z_big_kp(&p) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn seeds_reproduce(seed in any::<u64>(), h in 0.0f64..1.5) {
        let balls = [
            BallSpec::new([0.0; 3], 1.0).unwrap(),
            BallSpec::new([h, 0.0, 0.0], 1.0).unwrap(),
            BallSpec::new([0.0, h, 0.0], 1.0).unwrap(),
        ];
        let a = geometry::k_intersection_volume(&balls, 500, seed).unwrap();
        let b = geometry::k_intersection_volume(&balls, 500, seed).unwrap();
        prop_assert_eq!(a, b);
        let f = |rng: &mut rand_chacha::ChaCha8Rng| rand::Rng::gen::<f64>(rng);
        prop_assert_eq!(mc::sample_mean(300, seed, f), mc::sample_mean(300, seed, f));
    }
}
