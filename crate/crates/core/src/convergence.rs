//! Sufficient convergence conditions and admissible activities.
//!
//! `|∂_r B|` is the corona `|B(0, R + r) \ B(0, R - r)|`. Penetrable bounds are
//! stated for the effective activity `ẑ` and converted to `z_R` with
//! `ẑ = z_R exp(-z_r |B(0, R + r)|)`.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, adaptive_simpson};
use crate::interactions::{ball3, MixtureParams, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Two-constant penetrable criterion in `(a, A)`.
    ThmCol1,
    /// The one-line penetrable criterion with the constructed witness.
    Easy,
    /// Volume-scaling conditions on the original mixture.
    Kp,
    /// The bound on `z_R` forced by any `Kp` witness.
    KpBound,
    /// Colloid conditions, periodic form (non-strict).
    Hsper,
    /// Colloid conditions, infinite-volume form (strict).
    Hs,
    /// Colloid conditions via the constructive witness search.
    SuffHs,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::ThmCol1 => "thm_col1",
            Criterion::Easy => "easy",
            Criterion::Kp => "kp",
            Criterion::KpBound => "kp_bound",
            Criterion::Hsper => "hsper",
            Criterion::Hs => "hs",
            Criterion::SuffHs => "suff_hs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "thm_col1" => Criterion::ThmCol1,
            "easy" => Criterion::Easy,
            "kp" => Criterion::Kp,
            "kp_bound" => Criterion::KpBound,
            "hsper" => Criterion::Hsper,
            "hs" => Criterion::Hs,
            "suff_hs" => Criterion::SuffHs,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown criterion '{other}'"
                )))
            }
        })
    }
}

/// Constants certifying (or failing to certify) a criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceWitness {
    pub criterion: Criterion,
    pub constants: BTreeMap<String, f64>,
    pub satisfied: bool,
    /// Largest `ẑ` for which these constants work.
    pub admissible_zhat: Option<f64>,
    /// The same bound expressed for `z_R`, where the conversion is closed-form.
    #[serde(rename = "admissible_zR")]
    pub admissible_z_big: Option<f64>,
}

fn constants(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn non_negative_constants(pairs: &[(&'static str, f64)]) -> Result<()> {
    for (k, v) in pairs {
        if !(*v >= 0.0) {
            return Err(Error::Negative {
                name: k,
                value: *v,
            });
        }
    }
    Ok(())
}

/// `ε(h) = ((1 + h)³ - (1 - h)³) / 8`.
pub fn epsilon(h: f64) -> f64 {
    geometry::corona_fraction(h)
}

/// `|B(0, R + r) \ B(0, R - r)|`.
pub fn boundary_volume(params: &MixtureParams) -> f64 {
    params.corona_volume()
}

fn zhat_to_z_big(params: &MixtureParams, zhat: f64) -> f64 {
    zhat * (params.z_small * params.exclusion_volume()).exp()
}

/// Checks `|B(0,2R)| e^A ẑ + |∂_r B| e^a z_r ≤ A` and `|∂_r B| e^A ẑ ≤ a`.
pub fn check_col1(params: &MixtureParams, zhat: f64, a: f64, big_a: f64) -> Result<ConvergenceWitness> {
    non_negative_constants(&[("a", a), ("A", big_a)])?;
    let b2r = ball3(2.0 * params.big_radius);
    let db = boundary_volume(params);
    let zs = params.z_small.abs();
    let zh = zhat.abs();
    let satisfied = b2r * big_a.exp() * zh + db * a.exp() * zs <= big_a && db * big_a.exp() * zh <= a;
    let bound = ((big_a - db * a.exp() * zs) / (b2r * big_a.exp()))
        .min(a / (db * big_a.exp()))
        .max(0.0);
    Ok(ConvergenceWitness {
        criterion: Criterion::ThmCol1,
        constants: constants(&[("a", a), ("A", big_a)]),
        satisfied,
        admissible_zhat: Some(bound),
        admissible_z_big: Some(zhat_to_z_big(params, bound)),
    })
}

/// The constructed witness `a = ε(r/R)`, `A = 1 + z_r |∂_r B| e^a`.
pub fn easy_constants(params: &MixtureParams) -> (f64, f64) {
    let a = epsilon(params.small_radius / params.big_radius);
    (a, 1.0 + params.z_small.abs() * boundary_volume(params) * a.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityBound {
    pub zhat: f64,
    #[serde(rename = "zR")]
    pub z_big: f64,
}

/// Largest `ẑ` allowed by the one-line criterion, and the implied `z_R`.
pub fn max_zhat_easy(params: &MixtureParams) -> ActivityBound {
    let (a, _) = easy_constants(params);
    let zhat = (-params.z_small.abs() * boundary_volume(params) * a.exp()).exp()
        / (E * ball3(2.0 * params.big_radius));
    ActivityBound {
        zhat,
        z_big: zhat_to_z_big(params, zhat),
    }
}

/// The one-line criterion at `ẑ`, certified by [`easy_constants`].
pub fn check_easy(params: &MixtureParams, zhat: f64) -> Result<ConvergenceWitness> {
    let (a, big_a) = easy_constants(params);
    let bound = max_zhat_easy(params);
    let mut w = check_col1(params, zhat, a, big_a)?;
    w.criterion = Criterion::Easy;
    w.satisfied = zhat.abs() <= bound.zhat;
    w.admissible_zhat = Some(bound.zhat);
    w.admissible_z_big = Some(bound.z_big);
    Ok(w)
}

/// `(1/e) exp(-z_r |B(0, R + r)|) / |B(0, 2R)|`.
pub fn max_z_big_kp(params: &MixtureParams) -> f64 {
    (-params.z_small.abs() * params.exclusion_volume()).exp() / (E * ball3(2.0 * params.big_radius))
}

/// The necessary bound on `params.z_big` from the volume-scaling conditions.
pub fn check_kp_bound(params: &MixtureParams) -> ConvergenceWitness {
    let z = max_z_big_kp(params);
    let zhat = z * (-params.z_small * params.exclusion_volume()).exp();
    ConvergenceWitness {
        criterion: Criterion::KpBound,
        constants: BTreeMap::new(),
        satisfied: params.z_big.abs() <= z,
        admissible_zhat: Some(zhat),
        admissible_z_big: Some(z),
    }
}

/// `|B(0,2R)| e^A z_R + |B(0,R+r)| e^a z_r ≤ A` and `|B(0,R+r)| e^A z_R ≤ a`
/// at `params.z_big`.
pub fn check_kp(params: &MixtureParams, a: f64, big_a: f64) -> Result<ConvergenceWitness> {
    non_negative_constants(&[("a", a), ("A", big_a)])?;
    let b2r = ball3(2.0 * params.big_radius);
    let bx = params.exclusion_volume();
    let (zb, zs) = (params.z_big.abs(), params.z_small.abs());
    let satisfied = b2r * big_a.exp() * zb + bx * a.exp() * zs <= big_a && bx * big_a.exp() * zb <= a;
    let bound = ((big_a - bx * a.exp() * zs) / (b2r * big_a.exp()))
        .min(a / (bx * big_a.exp()))
        .max(0.0);
    Ok(ConvergenceWitness {
        criterion: Criterion::Kp,
        constants: constants(&[("a", a), ("A", big_a)]),
        satisfied,
        admissible_zhat: Some(bound * (-params.z_small * bx).exp()),
        admissible_z_big: Some(bound),
    })
}

/// `z_R` bound of the one-line criterion over the volume-scaling bound.
pub fn improvement_ratio(params: &MixtureParams) -> f64 {
    let (a, _) = easy_constants(params);
    let zs = params.z_small.abs();
    (zs * (2.0 * params.exclusion_volume() - boundary_volume(params) * a.exp())).exp()
}

/// Both penetrable conditions evaluated in their abstract integral form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstractConditions {
    pub suff1_lhs: f64,
    pub suff1_rhs: f64,
    pub suff2_lhs: f64,
    pub suff2_rhs: f64,
    pub satisfied: bool,
}

/// Integral conditions with constant weights `A` on large spheres and `a`
/// on small spheres; the shell and hard-core integrals are done by radial
/// quadrature of the indicator functions.
pub fn abstract_conditions_penetrable(
    params: &MixtureParams,
    zhat: f64,
    a: f64,
    big_a: f64,
) -> Result<AbstractConditions> {
    params.require(Model::Penetrable)?;
    non_negative_constants(&[("a", a), ("A", big_a)])?;
    let (big, small) = (params.big_radius, params.small_radius);
    let shell = |s: f64| {
        if s >= big - small && s <= big + small {
            4.0 * std::f64::consts::PI * s * s
        } else {
            0.0
        }
    };
    let core = |s: f64| {
        if s <= 2.0 * big {
            4.0 * std::f64::consts::PI * s * s
        } else {
            0.0
        }
    };
    let tol = 1e-12;
    let shell_int = adaptive_simpson(&shell, big - small, big + small, tol, 40);
    let core_int = adaptive_simpson(&core, 0.0, 2.0 * big, tol, 40);
    let (zs, zh) = (params.z_small.abs(), zhat.abs());
    let suff1_lhs = shell_int * a.exp() * zs + core_int * big_a.exp() * zh;
    let suff2_lhs = shell_int * big_a.exp() * zh;
    Ok(AbstractConditions {
        suff1_lhs,
        suff1_rhs: big_a,
        suff2_lhs,
        suff2_rhs: a,
        satisfied: suff1_lhs <= big_a && suff2_lhs <= a,
    })
}

/// Colloid conditions in `(a, b, c)`; `strict` makes the last two strict.
pub fn check_hs(
    params: &MixtureParams,
    zhat: f64,
    a: f64,
    b: f64,
    c: f64,
    strict: bool,
) -> Result<ConvergenceWitness> {
    params.require(Model::Colloid)?;
    non_negative_constants(&[("a", a), ("b", b), ("c", c)])?;
    let (b2r, b2big, db) = (
        ball3(2.0 * params.small_radius),
        ball3(2.0 * params.big_radius),
        boundary_volume(params),
    );
    let zs = params.z_small.abs();
    let zh = zhat.abs();
    let leq = |l: f64, r: f64| if strict { l < r } else { l <= r };
    let c0 = b2r * zs * (b + c).exp() <= c;
    let c1 = leq(db * zs * (b + c).exp() + a.exp() * b2big * zh, a);
    let c2 = leq(a.exp() * db * zh, b);
    let bound = if c0 {
        Some(
            ((a - db * zs * (b + c).exp()) / (a.exp() * b2big))
                .min(b / (a.exp() * db))
                .max(0.0),
        )
    } else {
        Some(0.0)
    };
    Ok(ConvergenceWitness {
        criterion: if strict { Criterion::Hs } else { Criterion::Hsper },
        constants: constants(&[("a", a), ("b", b), ("c", c)]),
        satisfied: c0 && c1 && c2,
        admissible_zhat: bound,
        admissible_z_big: None,
    })
}

/// Smallest `c ≥ 0` with `c e^{-c} = y`, for `0 ≤ y ≤ 1/e`.
pub fn lower_lambert(y: f64) -> Option<f64> {
    if !(0.0..=1.0 / E).contains(&y) {
        return None;
    }
    if y == 0.0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (-mid).exp() < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// `c` for given `b`: the lower root of `c = q e^{b + c}`, moved up by a few
/// ulps if rounding leaves `q e^{b + c} > c`.
fn solvent_constant(q: f64, b: f64) -> Option<f64> {
    let mut c = lower_lambert(q * b.exp())?;
    for _ in 0..64 {
        if q * (b + c).exp() <= c {
            return Some(c);
        }
        c = c.next_up();
    }
    None
}

/// Default constants of the constructive witness: `b`, then `c`, then
/// `α = 2 e^{b + c}`.
pub fn default_hs_constants(params: &MixtureParams) -> Result<(f64, f64, f64)> {
    let q = ball3(2.0 * params.small_radius) * params.z_small.abs();
    if q * E >= 1.0 {
        return Err(Error::Precondition(format!(
            "|B(0,2r)||z_r| = {q} must be below 1/e"
        )));
    }
    let b = if q == 0.0 {
        1.0
    } else {
        (0.5 * (1.0 / (E * q)).ln()).min(1.0)
    };
    let c = solvent_constant(q, b).ok_or_else(|| {
        Error::Precondition(format!("no solvent constant for |B(0,2r)||z_r| = {q}"))
    })?;
    Ok((b, c, 2.0 * (b + c).exp()))
}

/// Threshold on `|ẑ|` below which `a = α |∂_r B| |z_r|` satisfies the strict
/// colloid conditions together with `b, c`.
pub fn finalsuff_bound(params: &MixtureParams, b: f64, c: f64, alpha: f64) -> f64 {
    let db = boundary_volume(params);
    let zs = params.z_small.abs();
    let a = alpha * db * zs;
    let first = (alpha - (b + c).exp()) * db * zs / ball3(2.0 * params.big_radius);
    (-a).exp() * first.min(b / db).max(0.0)
}

/// Constructive search for colloid constants that satisfy the strict
/// conditions at `zhat`.
pub fn witness_search_hs(params: &MixtureParams, zhat: f64) -> Result<ConvergenceWitness> {
    params.require(Model::Colloid)?;
    let (b0, c0, alpha0) = default_hs_constants(params)?;
    let q = ball3(2.0 * params.small_radius) * params.z_small.abs();
    let db = boundary_volume(params);
    let zs = params.z_small.abs();
    let b_max = if q == 0.0 { 1.0 } else { (1.0 / (E * q)).ln().min(1.0) };
    let mut bs = vec![b0];
    bs.extend((0..20).map(|i| 0.01 * 100f64.powf(i as f64 / 19.0)).filter(|b| *b <= b_max));
    let alphas = [1.01, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0];
    let finish = |mut w: ConvergenceWitness, alpha: f64| {
        w.criterion = Criterion::SuffHs;
        if alpha.is_finite() {
            w.constants.insert("alpha".into(), alpha);
        }
        w
    };
    for &b in &bs {
        let c = if b == b0 {
            c0
        } else {
            match solvent_constant(q, b) {
                Some(c) => c,
                None => continue,
            }
        };
        let base = (b + c).exp();
        let mut candidates: Vec<(f64, f64)> = Vec::new();
        if b == b0 {
            candidates.push((alpha0, alpha0 * db * zs));
        }
        candidates.extend(alphas.iter().map(|k| (k * base, k * base * db * zs)));
        // shifts above the smallest admissible a, independent of z_r
        let a_min = db * zs * base;
        candidates.extend((0..20).map(|i| {
            let t = 1e-3 * 1000f64.powf(i as f64 / 19.0);
            let a = a_min + t;
            (if zs > 0.0 { a / (db * zs) } else { f64::INFINITY }, a)
        }));
        for (alpha, a) in candidates {
            let w = check_hs(params, zhat, a, b, c, true)?;
            if w.satisfied {
                return Ok(finish(w, alpha));
            }
        }
    }
    let w = check_hs(params, zhat, alpha0 * db * zs, b0, c0, true)?;
    Ok(finish(w, alpha0))
}

/// The pair-potential criterion `ẑ e^{2B} ∫|e^{-W_2} - 1| ≤ 1/e` for the
/// penetrable model, with stability constant `B = 6 z_r V_ov`.
///
/// Only a heuristic: it ignores the multi-body potentials present for
/// `r/R ≥ 2/√3 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCriterion {
    pub zhat_bound: f64,
    pub stability: f64,
    pub mayer_integral: f64,
    pub rigorous: bool,
}

pub fn pair_criterion(params: &MixtureParams) -> Result<PairCriterion> {
    params.require(Model::Penetrable)?;
    let big = params.big_radius;
    let rho = params.exclusion_radius();
    let zs = params.z_small;
    let v_ov = geometry::lens_volume(rho, 2.0 * big)?;
    let stability = 6.0 * zs.abs() * v_ov;
    let f = |s: f64| {
        let v = geometry::lens_volume(rho, s).unwrap_or(0.0);
        (zs * v).exp_m1().abs() * 4.0 * std::f64::consts::PI * s * s
    };
    let tail = adaptive_simpson(&f, 2.0 * big, 2.0 * rho, 1e-12, 40);
    let integral = ball3(2.0 * big) + tail;
    Ok(PairCriterion {
        zhat_bound: (-2.0 * stability).exp() / (E * integral),
        stability,
        mayer_integral: integral,
        rigorous: params.small_radius / big < 2.0 / 3f64.sqrt() - 1.0,
    })
}

/// One row of a region sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub zr: f64,
    #[serde(rename = "R")]
    pub big_radius: f64,
    pub r: f64,
    pub zhat_easy: f64,
    #[serde(rename = "zR_easy")]
    pub z_big_easy: f64,
    #[serde(rename = "zR_kp")]
    pub z_big_kp: f64,
    pub ratio: f64,
    /// Heuristic pair-criterion bound on `ẑ`, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zhat_pair: Option<f64>,
}

pub const SWEEP_HEADER: &str = "zr,R,r,zhat_easy,zR_easy,zR_kp,ratio";

impl SweepRow {
    pub fn csv(&self) -> String {
        let mut s = format!(
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.10}",
            self.zr, self.big_radius, self.r, self.zhat_easy, self.z_big_easy, self.z_big_kp, self.ratio
        );
        if let Some(p) = self.zhat_pair {
            s.push_str(&format!(",{p:.10e}"));
        }
        s
    }
}

/// Tabulates the penetrable bounds over `z_r` values and radius pairs.
pub fn region_sweep(zrs: &[f64], radii: &[(f64, f64)], with_pair: bool) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(zrs.len() * radii.len());
    for &(big, small) in radii {
        for &zr in zrs {
            let p = MixtureParams::penetrable(big, small, 0.0, zr)?;
            let easy = max_zhat_easy(&p);
            rows.push(SweepRow {
                zr,
                big_radius: big,
                r: small,
                zhat_easy: easy.zhat,
                z_big_easy: easy.z_big,
                z_big_kp: max_z_big_kp(&p),
                ratio: improvement_ratio(&p),
                zhat_pair: if with_pair {
                    Some(pair_criterion(&p)?.zhat_bound)
                } else {
                    None
                },
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pen(zr: f64) -> MixtureParams {
        MixtureParams::penetrable(1.0, 0.1, 0.0, zr).unwrap()
    }

    #[test]
    fn closed_forms() {
        let p = pen(0.1);
        let b = max_zhat_easy(&p);
        assert!((b.zhat / 0.0083647712 - 1.0).abs() < 1e-8);
        assert!((b.z_big / 0.0146078193 - 1.0).abs() < 1e-8);
        assert!((max_z_big_kp(&p) / 0.0062863072 - 1.0).abs() < 1e-8);
        assert!((improvement_ratio(&p) / 2.3237521 - 1.0).abs() < 1e-7);
        assert!((improvement_ratio(&p) - b.z_big / max_z_big_kp(&p)).abs() < 1e-10);
        let z0 = pen(0.0);
        let hs = 1.0 / (E * ball3(2.0));
        assert!((max_zhat_easy(&z0).zhat - hs).abs() < 1e-15);
        assert!((max_z_big_kp(&z0) - hs).abs() < 1e-15);
    }

    #[test]
    fn col1_examples() {
        let p = pen(0.0);
        assert!(check_col1(&p, 0.0, 0.5, 0.5).unwrap().satisfied);
        assert!(!check_col1(&pen(0.1), 1e-3, 0.0, 0.0).unwrap().satisfied);
        let p = pen(0.1);
        let (a, big_a) = easy_constants(&p);
        let zmax = max_zhat_easy(&p).zhat;
        assert!(check_col1(&p, zmax * 0.999, a, big_a).unwrap().satisfied);
        assert!(!check_col1(&p, zmax * 1.001, a, big_a).unwrap().satisfied);
    }

    #[test]
    fn abstract_form_matches() {
        let p = pen(0.1);
        for (zh, a, big_a) in [(0.001, 0.1, 1.3), (0.008, 0.075, 1.27), (0.02, 0.5, 2.0)] {
            let abs = abstract_conditions_penetrable(&p, zh, a, big_a).unwrap();
            assert_eq!(abs.satisfied, check_col1(&p, zh, a, big_a).unwrap().satisfied);
        }
    }

    #[test]
    fn hs_examples() {
        let c = MixtureParams::colloid(1.0, 0.1, 0.0, 0.0).unwrap();
        assert!(check_hs(&c, 0.0, 0.0, 0.0, 0.0, false).unwrap().satisfied);
        assert_eq!(lower_lambert(1.0 / E).map(|c| (c - 1.0).abs() < 1e-6), Some(true));
        let d = MixtureParams::colloid(1.0, 0.1, 0.001, 0.05).unwrap();
        let w = witness_search_hs(&d, 0.001).unwrap();
        assert!(w.satisfied, "{w:?}");
        let k = &w.constants;
        assert!(check_hs(&d, 0.001, k["a"], k["b"], k["c"], true).unwrap().satisfied);
        let bad = MixtureParams::colloid(1.0, 0.1, 0.0, 12.0).unwrap();
        assert!(matches!(witness_search_hs(&bad, 0.0), Err(Error::Precondition(_))));
        let z0 = MixtureParams::colloid(1.0, 0.1, 0.0, 0.0).unwrap();
        assert!(witness_search_hs(&z0, 1e-3).unwrap().satisfied);
        assert!(witness_search_hs(&d, 0.0).unwrap().satisfied);
    }

    #[test]
    fn sweep_and_pair() {
        let zrs: Vec<f64> = (0..41).map(|i| 0.005 * i as f64).collect();
        let rows = region_sweep(&zrs, &[(1.0, 0.1)], true).unwrap();
        assert_eq!(rows.len(), 41);
        assert!(rows.windows(2).all(|w| w[1].ratio >= w[0].ratio && w[0].ratio >= 1.0));
        assert_eq!(rows[0].ratio, 1.0);
        let pc = pair_criterion(&pen(0.1)).unwrap();
        assert!(pc.rigorous && pc.zhat_bound > 0.0);
    }
}
