//! The twelve acceptance criteria, each run at its stated tolerance, with
//! independent reference computations written out here.

use std::f64::consts::{E, PI};

use colloid_expansion::convergence;
use colloid_expansion::expansion;
use colloid_expansion::geometry::{self, BallSpec, Point};
use colloid_expansion::graphs;
use colloid_expansion::interactions::{self, Configuration, MixtureParams};
use colloid_expansion::mc::stream_rng;
use colloid_expansion::validation::{self, CriterionReport, ValidationConfig};
use rand::Rng;

fn ball(r: f64) -> f64 {
    4.0 / 3.0 * PI * r.powi(3)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Two equal balls of radius `a` at distance `d`, from two spherical caps.
fn lens(a: f64, d: f64) -> f64 {
    if d >= 2.0 * a {
        0.0
    } else {
        PI * (4.0 * a + d) * (2.0 * a - d).powi(2) / 12.0
    }
}

/// Midpoint-rule volume of a ball intersection on an `n³` grid.
fn grid_intersection(balls: &[BallSpec], n: usize) -> f64 {
    let lo: [f64; 3] = std::array::from_fn(|c| {
        balls.iter().map(|b| b.center[c] - b.radius).fold(f64::MIN, f64::max)
    });
    let hi: [f64; 3] = std::array::from_fn(|c| {
        balls.iter().map(|b| b.center[c] + b.radius).fold(f64::MAX, f64::min)
    });
    if (0..3).any(|c| hi[c] <= lo[c]) {
        return 0.0;
    }
    let h: [f64; 3] = std::array::from_fn(|c| (hi[c] - lo[c]) / n as f64);
    let mut count = 0u64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = [
                    lo[0] + (i as f64 + 0.5) * h[0],
                    lo[1] + (j as f64 + 0.5) * h[1],
                    lo[2] + (k as f64 + 0.5) * h[2],
                ];
                if balls.iter().all(|b| b.contains(&p)) {
                    count += 1;
                }
            }
        }
    }
    count as f64 * h[0] * h[1] * h[2]
}

/// Connected labeled graphs on `n` vertices by union-find over all edge subsets.
fn brute_connected(n: usize) -> usize {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << edges.len())
        .filter(|mask| {
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                if p[x] != x {
                    let r = find(p, p[x]);
                    p[x] = r;
                }
                p[x]
            }
            for (e, &(i, j)) in edges.iter().enumerate() {
                if mask & (1 << e) != 0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
            let root = find(&mut parent, 0);
            (1..n).all(|v| find(&mut parent, v) == root)
        })
        .count()
}

/// `φ*^T` by direct summation over star/cloud graphs with every cloud of
/// degree at least two; `-1` weights from hard-core and cloud overlaps.
fn brute_phi_star(c: &Configuration, p: &MixtureParams) -> f64 {
    let (m, r) = (c.large.len(), c.clouds.len());
    let n = m + r;
    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j.min(m) {
            let w = if j < m {
                -f64::from(u8::from(p.distance(&c.large[i], &c.large[j]) < 2.0 * p.big_radius))
            } else {
                let hit = c.clouds[j - m]
                    .iter()
                    .any(|y| p.distance(&c.large[i], y) < p.exclusion_radius());
                -f64::from(u8::from(hit))
            };
            edges.push((i, j, w));
        }
    }
    let mut total = 0.0;
    for mask in 0u64..1 << edges.len() {
        let chosen: Vec<_> = edges
            .iter()
            .enumerate()
            .filter(|(e, _)| mask & (1 << e) != 0)
            .map(|(_, e)| *e)
            .collect();
        if (m..n).any(|k| chosen.iter().filter(|e| e.1 == k).count() < 2) {
            continue;
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for &(i, j, _) in &chosen {
                if seen[i] != seen[j] {
                    seen[i] = true;
                    seen[j] = true;
                    changed = true;
                }
            }
        }
        if seen.iter().all(|s| *s) {
            total += chosen.iter().map(|e| e.2).product::<f64>();
        }
    }
    total
}

/// Penetrable `b_2` from its radial integral: the hard core plus the corona
/// shell where the overlap volume lowers the solvent exclusion.
fn b2_radial(big: f64, small: f64, zr: f64) -> f64 {
    let rho = big + small;
    let shell = simpson(
        |s| ((zr * lens(rho, s)).exp() - 1.0) * 4.0 * PI * s * s,
        2.0 * big,
        2.0 * rho,
        4000,
    );
    0.5 * (-ball(2.0 * big) + shell)
}

fn line(r: &CriterionReport) {
    println!(
        "criterion {:>2} {}: {} ({})",
        r.id,
        r.title,
        if r.passed { "PASS" } else { "FAIL" },
        r.detail
    );
}

fn extra(id: u32, ok: bool, detail: String) -> Option<String> {
    println!("    reference check {id}: {} ({detail})", if ok { "ok" } else { "MISMATCH" });
    (!ok).then(|| format!("criterion {id} reference: {detail}"))
}

fn references(id: u32) -> Option<String> {
    let mut rng = stream_rng(2024, u64::from(id));
    match id {
        1 => {
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let big: f64 = rng.gen_range(0.5..3.0);
                let small = big * rng.gen_range(0.01..0.9);
                let lib = geometry::lens_volume(big + small, 2.0 * big).unwrap();
                worst = worst.max((lib / lens(big + small, 2.0 * big) - 1.0).abs());
            }
            let mut grid_worst = 0.0f64;
            for _ in 0..3 {
                let balls: Vec<BallSpec> = (0..3)
                    .map(|_| {
                        let c: Point = std::array::from_fn(|_| rng.gen_range(-0.4..0.4));
                        BallSpec::new(c, rng.gen_range(0.8..1.2)).unwrap()
                    })
                    .collect();
                let q = geometry::intersection_volume_quadrature(&balls).unwrap();
                let g = grid_intersection(&balls, 160);
                grid_worst = grid_worst.max((q - g).abs() / g.max(1e-9));
            }
            extra(
                1,
                worst < 1e-12 && grid_worst < 5e-3,
                format!("cap-formula lens error {worst:.1e}; grid vs slice quadrature {grid_worst:.1e}"),
            )
        }
        2 => {
            let counts: Vec<(usize, usize)> = (3..=5)
                .map(|n| (brute_connected(n), graphs::enumerate_connected(n, 7).unwrap().len()))
                .collect();
            extra(
                2,
                counts.iter().all(|(a, b)| a == b) && counts.iter().map(|c| c.0).eq([4, 38, 728]),
                format!("union-find counts vs enumeration {counts:?}"),
            )
        }
        4 => {
            let p = MixtureParams::penetrable(1.0, 0.1, 0.0, 0.05).unwrap();
            let mut bad = 0;
            let mut nonzero = 0;
            for (m, r) in [(2, 1), (3, 1), (2, 2)] {
                for _ in 0..300 {
                    // stars near contact along x, clouds near the gaps
                    let large: Vec<Point> = (0..m)
                        .map(|i| {
                            let x = i as f64 * rng.gen_range(1.95..2.2);
                            [x, rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]
                        })
                        .collect();
                    let clouds = (0..r)
                        .map(|_| {
                            let x = large[rng.gen_range(0..m - 1)][0] + 1.0 + rng.gen_range(-0.2..0.2);
                            vec![[x, rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)]]
                        })
                        .collect();
                    let c = Configuration { large, clouds };
                    let b = brute_phi_star(&c, &p);
                    if b != 0.0 {
                        nonzero += 1;
                    }
                    if (b - interactions::phi_star_t(&c, &p).unwrap()).abs() > 1e-12 {
                        bad += 1;
                    }
                }
            }
            extra(
                4,
                bad == 0 && nonzero > 0,
                format!("direct graph sums: {bad} mismatches, {nonzero} nonzero"),
            )
        }
        7 => {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let big: f64 = rng.gen_range(0.8..1.5);
                let small = big * rng.gen_range(0.05..0.3);
                let zr = rng.gen_range(0.0..0.5);
                let p = MixtureParams::penetrable(big, small, 0.0, zr).unwrap();
                let lib = expansion::b2_penetrable_quadrature(&p).unwrap();
                worst = worst.max((lib / b2_radial(big, small, zr) - 1.0).abs());
            }
            let b0 = expansion::b2_penetrable_quadrature(&MixtureParams::penetrable(1.0, 0.1, 0.0, 0.0).unwrap())
                .unwrap();
            extra(
                7,
                worst < 1e-8 && (b0 + 16.0 * PI / 3.0).abs() < 1e-9,
                format!("radial Simpson vs library {worst:.1e}; b_2(0) = {b0:.9}"),
            )
        }
        9 => {
            // closed forms at R = 1, r = 0.1, z_r = 0.1
            let (big, small, zr) = (1.0f64, 0.1f64, 0.1f64);
            let h = small / big;
            let a = ((1.0 + h).powi(3) - (1.0 - h).powi(3)) / 8.0;
            let shell = ball(big + small) - ball(big - small);
            let zhat = (-zr * shell * a.exp()).exp() / (E * ball(2.0 * big));
            let zr_easy = zhat * (zr * ball(big + small)).exp();
            let zr_kp = (-zr * ball(big + small)).exp() / (E * ball(2.0 * big));
            let p = MixtureParams::penetrable(big, small, 0.0, zr).unwrap();
            let lib = convergence::max_zhat_easy(&p);
            let rel = |x: f64, y: f64| (x / y - 1.0).abs();
            let worst = [
                rel(lib.zhat, zhat),
                rel(lib.z_big, zr_easy),
                rel(convergence::max_z_big_kp(&p), zr_kp),
                rel(convergence::improvement_ratio(&p), zr_easy / zr_kp),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            extra(
                9,
                worst < 1e-12,
                format!(
                    "recomputed zhat {zhat:.10}, zR_easy {zr_easy:.10}, zR_kp {zr_kp:.10}, ratio {:.7}; library error {worst:.1e}",
                    zr_easy / zr_kp
                ),
            )
        }
        12 => {
            let mut worst = 0.0f64;
            let hh = 1e-4;
            for &(big, small, zr) in &[(1.0, 0.1, 0.0), (1.2, 0.15, 0.2), (0.9, 0.1, 0.4)] {
                let fd = (b2_radial(big, small, zr + hh) - b2_radial(big, small, zr - hh)) / (2.0 * hh);
                let lib = expansion::db2_dzr_quadrature(&MixtureParams::penetrable(big, small, 0.0, zr).unwrap())
                    .unwrap();
                worst = worst.max((lib / fd - 1.0).abs());
            }
            extra(12, worst < 1e-6, format!("radial finite difference vs library {worst:.1e}"))
        }
        _ => None,
    }
}

#[test]
fn acceptance_criteria() {
    let cfg = ValidationConfig::default();
    let mut failures = Vec::new();
    for id in 1..=12 {
        let (r, _) = validation::run_criterion(id, &cfg);
        line(&r);
        if !r.passed {
            failures.push(format!("criterion {id}: {}", r.detail));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn reference_computations() {
    let failures: Vec<String> = (1..=12).filter_map(references).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}
