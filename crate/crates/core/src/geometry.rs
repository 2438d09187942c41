//! Ball volumes, pairwise lens volumes, Monte Carlo k-fold intersections,
//! the depletion corona, and minimum-image distances.
//!
//! Sphere models live in three dimensions, so points are `[f64; 3]`.
//! [`ball_volume`] and [`periodic_distance`] accept any dimension.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{non_negative, Error, Result};
use crate::mc::{self, MCEstimate};

pub type Point = [f64; 3];

/// A closed-form ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(BallSpec { center, radius })
    }

    /// Open-ball membership.
    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        dist2(&self.center, p) < self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius.powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Free,
}

/// The cube `[0, side]^dim` with its boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub side: f64,
    pub boundary: Boundary,
    pub dim: usize,
}

impl BoxSpec {
    pub fn new(side: f64, boundary: Boundary) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box side must be positive, got {side}"
            )));
        }
        Ok(BoxSpec {
            side,
            boundary,
            dim: 3,
        })
    }

    pub fn periodic(side: f64) -> Result<Self> {
        Self::new(side, Boundary::Periodic)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Distance between two points respecting the boundary condition.
    #[inline]
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        self.displacement(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// `b - a`, wrapped to the minimum image for periodic boxes.
    #[inline]
    pub fn displacement(&self, a: &Point, b: &Point) -> Point {
        let mut d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        if self.boundary == Boundary::Periodic {
            for c in &mut d {
                *c = min_image(*c, self.side);
            }
        }
        d
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        [
            rng.gen::<f64>() * self.side,
            rng.gen::<f64>() * self.side,
            rng.gen::<f64>() * self.side,
        ]
    }
}

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
pub fn min_image(d: f64, side: f64) -> f64 {
    d - side * (d / side).round()
}

/// Volume of the unit ball in `d` dimensions.
fn unit_ball_volume(d: usize) -> f64 {
    // omega_d = 2 pi / d * omega_{d-2}, omega_0 = 1, omega_1 = 2
    let mut omega = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    omega
}

/// `|B(0, radius)|` in `d` dimensions.
pub fn ball_volume(radius: f64, d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::UnsupportedDimension(d));
    }
    non_negative("radius", radius)?;
    Ok(unit_ball_volume(d) * radius.powi(d as i32))
}

/// Volume of `B(x, radius) ∩ B(y, radius)` with `|x - y| = dist` in three dimensions.
pub fn lens_volume(radius: f64, dist: f64) -> Result<f64> {
    non_negative("radius", radius)?;
    non_negative("dist", dist)?;
    Ok(two_ball_intersection(radius, radius, dist))
}

/// Volume of the intersection of two balls with radii `r1`, `r2` at center distance `d`.
pub fn two_ball_intersection(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return 4.0 / 3.0 * PI * small.powi(3);
    }
    if r1 == r2 {
        // (pi/12)(4 rho + s)(2 rho - s)^2
        return PI / 12.0 * (4.0 * r1 + d) * (2.0 * r1 - d).powi(2);
    }
    let s = r1 + r2 - d;
    PI * s * s * (d * d + 2.0 * d * (r1 + r2) - 3.0 * (r1 - r2).powi(2)) / (12.0 * d)
}

/// `|B(0, R + r) \ B(0, R - r)|`, the shell through which the solvent mediates
/// the effective interaction.
pub fn corona_volume(big: f64, small: f64, d: usize) -> Result<f64> {
    if !(big > small && small > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "corona needs R > r > 0, got R = {big}, r = {small}"
        )));
    }
    Ok(ball_volume(big + small, d)? - ball_volume(big - small, d)?)
}

/// `ε(h) = ((1+h)^3 - (1-h)^3) / 8`, the corona volume in units of `|B(0, 2R)|`.
pub fn corona_fraction(h: f64) -> f64 {
    (3.0 * h + h.powi(3)) / 4.0
}

/// Minimum over integer shifts `k` of `|x - y - L k|`.
pub fn periodic_distance(x: &[f64], y: &[f64], side: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if !(side > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "box side must be positive, got {side}"
        )));
    }
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| min_image(a - b, side).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Uniform point in `B(center, radius)` by rejection from the enclosing cube.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &Point, radius: f64) -> Point {
    loop {
        let u = [
            2.0 * rng.gen::<f64>() - 1.0,
            2.0 * rng.gen::<f64>() - 1.0,
            2.0 * rng.gen::<f64>() - 1.0,
        ];
        if u[0] * u[0] + u[1] * u[1] + u[2] * u[2] < 1.0 {
            return [
                center[0] + radius * u[0],
                center[1] + radius * u[1],
                center[2] + radius * u[2],
            ];
        }
    }
}

/// Smallest ball containing all `points`, as `(center, radius)`.
///
/// Brute force over supporting subsets of size at most four, which is exact
/// and fast for the handful of points used here.
pub fn minimal_enclosing_ball(points: &[Point]) -> Option<(Point, f64)> {
    let n = points.len();
    if n == 0 {
        return None;
    }
    let scale = points
        .iter()
        .map(|p| norm(p))
        .fold(1.0f64, f64::max);
    let tol = 1e-12 * scale;
    let mut best: Option<(Point, f64)> = None;
    let mut consider = |c: Point, rad: f64| {
        if best.map_or(true, |(_, b)| rad < b)
            && points.iter().all(|p| dist2(&c, p).sqrt() <= rad + tol)
        {
            best = Some((c, rad));
        }
    };
    for i in 0..n {
        consider(points[i], 0.0);
        for j in i + 1..n {
            let c = midpoint(&points[i], &points[j]);
            consider(c, dist2(&c, &points[i]).sqrt());
            for k in j + 1..n {
                if let Some(c) = circumcenter3(&points[i], &points[j], &points[k]) {
                    consider(c, dist2(&c, &points[i]).sqrt());
                }
                for l in k + 1..n {
                    if let Some(c) = circumcenter4(&points[i], &points[j], &points[k], &points[l]) {
                        consider(c, dist2(&c, &points[i]).sqrt());
                    }
                }
            }
        }
    }
    best
}

fn midpoint(a: &Point, b: &Point) -> Point {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Center of the circle through three points.
fn circumcenter3(p0: &Point, p1: &Point, p2: &Point) -> Option<Point> {
    let a = sub(p1, p0);
    let b = sub(p2, p0);
    let axb = cross(&a, &b);
    let denom = 2.0 * dot(&axb, &axb);
    if denom < 1e-24 {
        return None;
    }
    let aa = dot(&a, &a);
    let bb = dot(&b, &b);
    let t = [
        aa * b[0] - bb * a[0],
        aa * b[1] - bb * a[1],
        aa * b[2] - bb * a[2],
    ];
    let off = cross(&t, &axb);
    Some([
        p0[0] + off[0] / denom,
        p0[1] + off[1] / denom,
        p0[2] + off[2] / denom,
    ])
}

/// Center of the sphere through four points.
fn circumcenter4(p0: &Point, p1: &Point, p2: &Point, p3: &Point) -> Option<Point> {
    let a = sub(p1, p0);
    let b = sub(p2, p0);
    let c = sub(p3, p0);
    let det = dot(&a, &cross(&b, &c));
    if det.abs() < 1e-18 {
        return None;
    }
    let (aa, bb, cc) = (dot(&a, &a), dot(&b, &b), dot(&c, &c));
    let bxc = cross(&b, &c);
    let cxa = cross(&c, &a);
    let axb = cross(&a, &b);
    let f = 0.5 / det;
    Some([
        p0[0] + f * (aa * bxc[0] + bb * cxa[0] + cc * axb[0]),
        p0[1] + f * (aa * bxc[1] + bb * cxa[1] + cc * axb[1]),
        p0[2] + f * (aa * bxc[2] + bb * cxa[2] + cc * axb[2]),
    ])
}

/// Exact emptiness decision for `∩ balls`, when one is available.
///
/// `Some(true)`: certainly empty; `Some(false)`: certainly non-empty;
/// `None`: undecided (unequal radii without an easy certificate).
pub fn intersection_is_empty(balls: &[BallSpec]) -> Option<bool> {
    for (i, a) in balls.iter().enumerate() {
        for b in &balls[i + 1..] {
            if dist2(&a.center, &b.center).sqrt() >= a.radius + b.radius {
                return Some(true);
            }
        }
    }
    let rho = balls[0].radius;
    if balls.iter().all(|b| b.radius == rho) {
        let centers: Vec<Point> = balls.iter().map(|b| b.center).collect();
        let (_, enclosing) = minimal_enclosing_ball(&centers)?;
        // open balls share a point iff the centers fit strictly inside a ball of radius rho
        return Some(enclosing >= rho);
    }
    let smallest = smallest_ball(balls);
    if balls.iter().all(|b| b.contains(&smallest.center)) {
        return Some(false);
    }
    None
}

fn smallest_ball(balls: &[BallSpec]) -> BallSpec {
    *balls
        .iter()
        .min_by(|a, b| a.radius.total_cmp(&b.radius))
        .expect("non-empty ball list")
}

/// Closed-form value for the cases that need no sampling.
fn intersection_short_circuit(balls: &[BallSpec]) -> Option<f64> {
    match balls {
        [] => None,
        [b] => Some(b.volume()),
        [a, b] => Some(two_ball_intersection(
            a.radius,
            b.radius,
            dist2(&a.center, &b.center).sqrt(),
        )),
        _ => {
            let s = smallest_ball(balls);
            if balls
                .iter()
                .all(|b| dist2(&b.center, &s.center).sqrt() + s.radius <= b.radius)
            {
                return Some(s.volume());
            }
            if intersection_is_empty(balls) == Some(true) {
                return Some(0.0);
            }
            None
        }
    }
}

/// Binomial standard error of a hit fraction, regularized at 0 and `n` hits.
fn binomial_stderr(hits: u64, n: u64) -> f64 {
    let nf = n as f64;
    let p = if hits == 0 || hits == n {
        (hits as f64 + 0.5) / (nf + 1.0)
    } else {
        hits as f64 / nf
    };
    (p * (1.0 - p) / nf).sqrt()
}

/// Monte Carlo estimate of `|∩ balls|` drawing from a caller-provided RNG.
///
/// Used inside other samplers where nesting seeded streams would be wasteful.
pub fn k_intersection_volume_with<R: Rng + ?Sized>(
    balls: &[BallSpec],
    samples: u64,
    rng: &mut R,
) -> Result<MCEstimate> {
    if balls.is_empty() {
        return Err(Error::EmptyBallList);
    }
    if let Some(v) = intersection_short_circuit(balls) {
        return Ok(MCEstimate::exact(v));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let s = smallest_ball(balls);
    let mut hits = 0u64;
    for _ in 0..samples {
        let p = sample_in_ball(rng, &s.center, s.radius);
        if balls.iter().all(|b| b.contains(&p)) {
            hits += 1;
        }
    }
    let vol = s.volume();
    Ok(MCEstimate {
        value: vol * hits as f64 / samples as f64,
        stderr: vol * binomial_stderr(hits, samples),
        samples,
        seed: 0,
    })
}

/// Unbiased Monte Carlo estimate of the k-fold intersection volume.
///
/// Samples uniformly inside the smallest ball and tests membership in the
/// others. One and two balls, nested balls, and certifiably empty
/// intersections are returned exactly with zero error.
pub fn k_intersection_volume(balls: &[BallSpec], samples: u64, seed: u64) -> Result<MCEstimate> {
    if balls.is_empty() {
        return Err(Error::EmptyBallList);
    }
    if let Some(v) = intersection_short_circuit(balls) {
        return Ok(MCEstimate::exact(v));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let s = smallest_ball(balls);
    let m = mc::sample_moments::<1, _>(samples, seed, |rng| {
        let p = sample_in_ball(rng, &s.center, s.radius);
        [if balls.iter().all(|b| b.contains(&p)) { 1.0 } else { 0.0 }]
    });
    let hits = (m.mean[0] * samples as f64).round() as u64;
    let vol = s.volume();
    Ok(MCEstimate {
        value: vol * m.mean[0],
        stderr: vol * binomial_stderr(hits, samples),
        samples,
        seed,
    })
}

/// Area of the intersection of disks `(cx, cy, radius)` in the plane.
///
/// The boundary of an intersection of disks is a union of circular arcs, each
/// lying on one circle and inside every other disk; Green's theorem turns the
/// area into a sum over those arcs.
pub fn disk_intersection_area(disks: &[(f64, f64, f64)]) -> f64 {
    let mut uniq: Vec<(f64, f64, f64)> = Vec::with_capacity(disks.len());
    for &d in disks {
        if !(d.2 > 0.0) {
            return 0.0;
        }
        if !uniq.contains(&d) {
            uniq.push(d);
        }
    }
    let mut twice_area = 0.0;
    for (i, &(cx, cy, ri)) in uniq.iter().enumerate() {
        // angular intervals of circle i lying inside every other disk
        let mut arcs: Vec<(f64, f64)> = vec![(0.0, 2.0 * PI)];
        for (j, &(dx, dy, rj)) in uniq.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = ((dx - cx).powi(2) + (dy - cy).powi(2)).sqrt();
            if d >= ri + rj {
                return 0.0;
            }
            if d + ri <= rj {
                continue;
            }
            if d + rj <= ri {
                arcs.clear();
                break;
            }
            let cos_a = ((ri * ri + d * d - rj * rj) / (2.0 * ri * d)).clamp(-1.0, 1.0);
            let alpha = cos_a.acos();
            let phi = (dy - cy).atan2(dx - cx);
            arcs = intersect_arcs(&arcs, phi - alpha, phi + alpha);
            if arcs.is_empty() {
                break;
            }
        }
        for (t1, t2) in arcs {
            twice_area += ri * ri * (t2 - t1)
                + ri * (cx * (t2.sin() - t1.sin()) - cy * (t2.cos() - t1.cos()));
        }
    }
    0.5 * twice_area.max(0.0)
}

/// Intersects a set of disjoint arcs within `[0, 2π)` with the arc `[lo, hi]`.
fn intersect_arcs(arcs: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let tau = 2.0 * PI;
    let width = (hi - lo).clamp(0.0, tau);
    let lo = lo.rem_euclid(tau);
    let hi = lo + width;
    let pieces: Vec<(f64, f64)> = if hi <= tau {
        vec![(lo, hi)]
    } else {
        vec![(lo, tau), (0.0, hi - tau)]
    };
    let mut out = Vec::new();
    for &(a1, a2) in arcs {
        for &(b1, b2) in &pieces {
            let (s, e) = (a1.max(b1), a2.min(b2));
            if e > s {
                out.push((s, e));
            }
        }
    }
    out
}

/// Deterministic `|∩ balls|` by adaptive integration of slice areas along z.
///
/// Each z-slice is an intersection of disks whose area is exact, so the only
/// error is the one-dimensional quadrature, controlled to about `1e-11`
/// relative to the smallest ball.
pub fn intersection_volume_quadrature(balls: &[BallSpec]) -> Result<f64> {
    if balls.is_empty() {
        return Err(Error::EmptyBallList);
    }
    if let Some(v) = intersection_short_circuit(balls) {
        return Ok(v);
    }
    let lo = balls
        .iter()
        .map(|b| b.center[2] - b.radius)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = balls
        .iter()
        .map(|b| b.center[2] + b.radius)
        .fold(f64::INFINITY, f64::min);
    if hi <= lo {
        return Ok(0.0);
    }
    let slice = |z: f64| {
        let disks: Vec<(f64, f64, f64)> = balls
            .iter()
            .map(|b| {
                let h2 = b.radius * b.radius - (z - b.center[2]).powi(2);
                (b.center[0], b.center[1], h2.max(0.0).sqrt())
            })
            .collect();
        disk_intersection_area(&disks)
    };
    let tol = 1e-11 * smallest_ball(balls).volume();
    Ok(adaptive_simpson(&slice, lo, hi, tol, 40))
}

/// Adaptive Simpson quadrature with Richardson correction.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // refine at least a few levels so kinks between samples are not missed
    if depth == 0 || (depth < 36 && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
