//! Brute-force oracle against partition functions that can be written down
//! by hand for at most two large spheres.

use std::f64::consts::PI;

use colloid_expansion::effective::{self, ActivityMode, SeriesTruncation};
use colloid_expansion::geometry::BoxSpec;
use colloid_expansion::interactions::MixtureParams;
use colloid_expansion::mc::stream_rng;
use colloid_expansion::oracle::{self, OracleConfig};

fn ball(r: f64) -> f64 {
    4.0 / 3.0 * PI * r.powi(3)
}

fn cfg(n1_max: usize, samples: u64) -> OracleConfig {
    OracleConfig {
        n1_max,
        samples,
        ..OracleConfig::desk()
    }
}

#[test]
fn hard_spheres_up_to_two() {
    // Ξ = 1 + zV + z²V(V - |B(2R)|)/2 when only two spheres are allowed
    let vol = 216.0;
    let z = 0.004;
    let p = MixtureParams::penetrable(1.0, 0.1, z, 0.0).unwrap();
    let exact = (1.0 + z * vol + z * z * vol * (vol - ball(2.0)) / 2.0).ln();
    let (est, _) = oracle::log_xi(&p, &cfg(2, 100_000)).unwrap();
    assert!((est.value - exact).abs() < 3.0 * est.stderr, "{est:?} vs {exact}");
    assert!(est.stderr > 0.0 && est.stderr < 1e-3);
}

#[test]
fn penetrable_single_sphere() {
    // Ξ = e^{z_r V} + z_R V e^{z_r (V - |B(R + r)|)} with at most one large sphere
    let vol = 216.0;
    let (zb, zs) = (0.003, 0.05);
    let p = MixtureParams::penetrable(1.0, 0.1, zb, zs).unwrap();
    let exact = zs * vol + (1.0 + zb * vol * (-zs * ball(1.1)).exp()).ln();
    let (est, w) = oracle::log_xi(&p, &cfg(1, 50_000)).unwrap();
    assert!((est.value - exact).abs() < 3.0 * est.stderr.max(1e-12), "{est:?} vs {exact}");
    // truncation at one large sphere is far from negligible here
    assert!(!w.is_empty());
}

#[test]
fn densities_of_trivial_mixtures() {
    let c = cfg(6, 5_000);
    let ideal = oracle::observables(&MixtureParams::penetrable(1.0, 0.1, 0.0, 0.07).unwrap(), &c).unwrap();
    // only the Poisson tail beyond n2_max is missing
    assert!((ideal.rho_small.value - 0.07).abs() < 1e-6, "{:?}", ideal.rho_small);
    assert!((ideal.v_free_mean.value - 216.0).abs() < 1e-9);
    let dry = oracle::observables(&MixtureParams::penetrable(1.0, 0.1, 0.002, 0.0).unwrap(), &c).unwrap();
    assert_eq!(dry.rho_small.value, 0.0);
}

#[test]
fn free_volume_two_ways() {
    let bx = BoxSpec::periodic(6.0).unwrap();
    let p = MixtureParams::penetrable(1.0, 0.1, 0.0, 0.05)
        .unwrap()
        .with_box(bx)
        .unwrap();
    let mut rng = stream_rng(5, 0);
    for m in 1..=4 {
        for t in 0..3 {
            let xs = oracle::random_configuration(&mut rng, &bx, m);
            let ie = oracle::free_volume_inclusion_exclusion(&xs, &p).unwrap();
            let hit = oracle::free_volume_hit_test(&xs, &p, 200_000, 10 * m as u64 + t).unwrap();
            assert!((hit.value - ie).abs() < 3.5 * hit.stderr, "m={m}: {hit:?} vs {ie}");
        }
    }
}

#[test]
fn pinned_spheres_match_effective_potentials() {
    let p = MixtureParams::penetrable(1.0, 0.1, 0.0, 0.05).unwrap();
    let c = OracleConfig {
        samples: 100_000,
        ..OracleConfig::desk()
    };
    for xs in [
        vec![[3.0, 3.0, 3.0], [5.1, 3.0, 3.0]],
        vec![[3.0, 3.0, 3.0], [5.05, 3.0, 3.0], [4.0, 4.8, 3.0]],
    ] {
        let r = oracle::mixed_ratio_check(&p, &c, &xs).unwrap();
        assert!(
            r.direct.agrees_with(&r.effective, 3.0),
            "{:?} vs {:?}",
            r.direct,
            r.effective
        );
    }
}

#[test]
fn finite_volume_activity_matches_closed_form() {
    let p = MixtureParams::penetrable(1.0, 0.1, 0.003, 0.05)
        .unwrap()
        .with_box(BoxSpec::periodic(6.0).unwrap())
        .unwrap();
    let trunc = SeriesTruncation {
        samples: 100_000,
        ..Default::default()
    };
    let (fv, _) = effective::zhat(&p, ActivityMode::FiniteVolumeRatio, &trunc).unwrap();
    let exact = 0.003 * (-0.05 * ball(1.1)).exp();
    assert!((fv.value - exact).abs() < 3.0 * fv.stderr, "{fv:?} vs {exact}");
}
