//! Cluster coefficients `b_m(z_r)`, the pressure and density series in the
//! effective activity, and `db_m/dz_r`.
//!
//! `b_m = (1/m!) ∫ ψ^T(0, x_2, .., x_m) dx_2 .. dx_m`, so that
//! `log Ξ / |Λ| → Σ_{m≥1} b_m ẑ^m` (plus `z_r` for the penetrable solvent).

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convergence::{self, ConvergenceWitness};
use crate::effective::{self, ActivityMode, PenetrableW, SeriesTruncation};
use crate::error::{Error, Result, Warning};
use crate::geometry::{self, adaptive_simpson, Point};
use crate::interactions::{
    self, ball3, hyperedge_weights, CloudSampler, CloudTruncation, HyperTable, MixtureParams,
    Model, WProvider,
};
use crate::mc::{self, MCEstimate};

/// Largest order accepted by the coefficient routines.
pub const M_MAX: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCoefficient {
    pub m: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Cloud truncation, for coefficients that sample clouds.
    pub truncation: Option<CloudTruncation>,
}

impl ClusterCoefficient {
    fn one() -> Self {
        ClusterCoefficient {
            m: 1,
            estimate: 1.0,
            stderr: 0.0,
            samples: 0,
            seed: 0,
            truncation: None,
        }
    }

    pub fn as_estimate(&self) -> MCEstimate {
        MCEstimate {
            value: self.estimate,
            stderr: self.stderr,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

/// Sampling budget for coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientOptions {
    pub samples: u64,
    pub seed: u64,
    /// Used for the colloid model only.
    pub cloud: CloudTruncation,
}

impl Default for CoefficientOptions {
    fn default() -> Self {
        CoefficientOptions {
            samples: 200_000,
            seed: 1,
            cloud: CloudTruncation::default(),
        }
    }
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 || m > M_MAX {
        return Err(Error::EnumerationBound { size: m, bound: M_MAX });
    }
    Ok(())
}

fn infinite_volume(params: &MixtureParams) -> MixtureParams {
    MixtureParams {
        space: None,
        ..*params
    }
}

/// Largest distance over which two large spheres can be directly linked.
fn reach(params: &MixtureParams, cloud: &CloudTruncation) -> f64 {
    let base = 2.0 * params.exclusion_radius();
    match params.model {
        Model::Penetrable => base,
        Model::Colloid => base + 2.0 * params.small_radius * (cloud.n_max as f64 - 1.0),
    }
}

/// Grows `m` points from the origin, each uniformly within `reach` of a
/// random earlier point. Returns the points and `1 / (N q)` with `q` the
/// proposal density and `N` the number of orderings it could have used.
fn grow<R: Rng + ?Sized>(rng: &mut R, m: usize, reach: f64) -> (Vec<Point>, f64) {
    let mut xs = Vec::with_capacity(m);
    xs.push([0.0; 3]);
    for j in 1..m {
        let parent = xs[rng.gen_range(0..j)];
        xs.push(geometry::sample_in_ball(rng, &parent, reach));
    }
    let r2 = reach * reach;
    let near = |i: usize, j: usize| geometry::dist2(&xs[i], &xs[j]) < r2;
    let mut q = 1.0;
    for j in 1..m {
        let k = (0..j).filter(|&i| near(i, j)).count() as f64;
        q *= k / j as f64 / ball3(reach);
    }
    // orderings of the non-root points in which every point is near an earlier one
    let k = m - 1;
    let mut count = vec![0.0; 1 << k];
    count[0] = 1.0;
    for s in 1usize..1 << k {
        let mut c = 0.0;
        for v in 0..k {
            if s & (1 << v) == 0 {
                continue;
            }
            let prev = s ^ (1 << v);
            let linked = near(0, v + 1) || (0..k).any(|u| prev & (1 << u) != 0 && near(u + 1, v + 1));
            if linked {
                c += count[prev];
            }
        }
        count[s] = c;
    }
    (xs, 1.0 / (count[(1 << k) - 1] * q))
}

/// `b_m(z_r)` by Monte Carlo.
///
/// Penetrable: exact hypergraph sum for `ψ^T` at each sampled configuration.
/// Colloid: one joint draw of clouds per configuration.
pub fn b_m(m: usize, params: &MixtureParams, opts: &CoefficientOptions) -> Result<ClusterCoefficient> {
    memo('b', m, params, opts, || sample_b_m(m, params, opts))
}

/// Results are deterministic in `(m, params, opts)`, so repeated requests
/// (the pressure and density series share coefficients) are served from memory.
fn memo(
    kind: char,
    m: usize,
    params: &MixtureParams,
    opts: &CoefficientOptions,
    compute: impl FnOnce() -> Result<ClusterCoefficient>,
) -> Result<ClusterCoefficient> {
    type Cache = Mutex<HashMap<String, ClusterCoefficient>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    // z_R does not enter the coefficients
    let p = MixtureParams {
        z_big: 0.0,
        ..infinite_volume(params)
    };
    let key = format!("{kind}{m}{p:?}{opts:?}");
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("cache lock").get(&key) {
        return Ok(c.clone());
    }
    let c = compute()?;
    cache.lock().expect("cache lock").insert(key, c.clone());
    Ok(c)
}

fn sample_b_m(m: usize, params: &MixtureParams, opts: &CoefficientOptions) -> Result<ClusterCoefficient> {
    check_order(m)?;
    if m == 1 {
        return Ok(ClusterCoefficient::one());
    }
    let p = infinite_volume(params);
    let reach = reach(&p, &opts.cloud);
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    let seed = mc::derive_seed(opts.seed, m as u64);
    let est = match p.model {
        Model::Penetrable => {
            let w = PenetrableW::new(&p)?;
            let table = HyperTable::get(m)?;
            mc::sample_moments::<1, _>(opts.samples, seed, |rng| {
                let (xs, iw) = grow(rng, m, reach);
                let weights = hyperedge_weights(&xs, &p, &w, &table.candidates).unwrap_or_default();
                if weights.is_empty() {
                    return [f64::NAN];
                }
                [table.sum(&weights) * iw * factorial(m - 1) / fact]
            })
        }
        Model::Colloid => {
            let sampler = CloudSampler::new(&p, opts.cloud.n_max)?;
            mc::sample_moments::<1, _>(opts.samples, seed, |rng| {
                let (xs, iw) = grow(rng, m, reach);
                match interactions::psi_t_cloud_draw(&xs, &p, &sampler, opts.cloud.r_max, rng) {
                    Ok(v) => [v * iw * factorial(m - 1) / fact],
                    Err(_) => [f64::NAN],
                }
            })
        }
    };
    if est.mean[0].is_nan() {
        return Err(Error::Oracle("ψ^T evaluation failed during sampling".into()));
    }
    Ok(ClusterCoefficient {
        m,
        estimate: est.mean[0],
        stderr: est.stderr(0),
        samples: opts.samples,
        seed,
        truncation: (p.model == Model::Colloid).then_some(opts.cloud),
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `db_m/dz_r` for the penetrable model via hyperedge-rooted hypergraphs.
pub fn db_m_dzr(m: usize, params: &MixtureParams, opts: &CoefficientOptions) -> Result<ClusterCoefficient> {
    memo('d', m, params, opts, || sample_db_m(m, params, opts))
}

fn sample_db_m(m: usize, params: &MixtureParams, opts: &CoefficientOptions) -> Result<ClusterCoefficient> {
    check_order(m)?;
    params.require(Model::Penetrable)?;
    if m == 1 {
        return Ok(ClusterCoefficient {
            estimate: 0.0,
            ..ClusterCoefficient::one()
        });
    }
    let p = infinite_volume(params);
    let reach = reach(&p, &opts.cloud);
    let w = PenetrableW::new(&p)?;
    let table = HyperTable::get(m)?;
    let norm = factorial(m - 1) / factorial(m);
    let seed = mc::derive_seed(opts.seed, 100 + m as u64);
    let est = mc::sample_moments::<1, _>(opts.samples, seed, |rng| {
        let (xs, iw) = grow(rng, m, reach);
        match rooted_weights(&xs, &p, &w, &table.candidates) {
            Ok((wt, dw)) => [table.rooted_sum(&wt, &dw) * iw * norm],
            Err(_) => [f64::NAN],
        }
    });
    if est.mean[0].is_nan() {
        return Err(Error::Oracle("rooted weight evaluation failed".into()));
    }
    Ok(ClusterCoefficient {
        m,
        estimate: est.mean[0],
        stderr: est.stderr(0),
        samples: opts.samples,
        seed,
        truncation: None,
    })
}

/// `(b_m(z_r + h) - b_m(z_r - h)) / 2h` with both sides evaluated on the same
/// sampled configurations (penetrable model).
pub fn db_m_dzr_finite_difference(
    m: usize,
    params: &MixtureParams,
    h: f64,
    opts: &CoefficientOptions,
) -> Result<ClusterCoefficient> {
    check_order(m)?;
    params.require(Model::Penetrable)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("step h must be positive".into()));
    }
    if m == 1 {
        return db_m_dzr(1, params, opts);
    }
    let p = infinite_volume(params);
    let (plus, minus) = (
        MixtureParams { z_small: p.z_small + h, ..p },
        MixtureParams { z_small: p.z_small - h, ..p },
    );
    let (wp, wm) = (PenetrableW { params: plus }, PenetrableW { params: minus });
    let reach = reach(&p, &opts.cloud);
    let table = HyperTable::get(m)?;
    let norm = factorial(m - 1) / factorial(m) / (2.0 * h);
    let seed = mc::derive_seed(opts.seed, 200 + m as u64);
    let est = mc::sample_moments::<1, _>(opts.samples, seed, |rng| {
        let (xs, iw) = grow(rng, m, reach);
        let a = hyperedge_weights(&xs, &plus, &wp, &table.candidates);
        let b = hyperedge_weights(&xs, &minus, &wm, &table.candidates);
        match (a, b) {
            (Ok(a), Ok(b)) => [(table.sum(&a) - table.sum(&b)) * iw * norm],
            _ => [f64::NAN],
        }
    });
    if est.mean[0].is_nan() {
        return Err(Error::Oracle("ψ^T evaluation failed during sampling".into()));
    }
    Ok(ClusterCoefficient {
        m,
        estimate: est.mean[0],
        stderr: est.stderr(0),
        samples: opts.samples,
        seed,
        truncation: None,
    })
}

/// Hyperedge weights and their `z_r` derivatives `-(dW/dz_r) e^{-W}`.
fn rooted_weights(
    xs: &[Point],
    p: &MixtureParams,
    w: &dyn WProvider,
    candidates: &[u32],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let weights = hyperedge_weights(xs, p, w, candidates)?;
    let mut dweights = Vec::with_capacity(candidates.len());
    for (&s, &wt) in candidates.iter().zip(&weights) {
        let sub: Vec<Point> = crate::graphs::iter_bits(s as u64).map(|i| xs[i]).collect();
        let hard = sub.len() == 2 && geometry::dist2(&sub[0], &sub[1]) < (2.0 * p.big_radius).powi(2);
        dweights.push(if hard {
            0.0
        } else {
            -w.dw_dzr(&sub)? * (wt + 1.0)
        });
    }
    Ok((weights, dweights))
}

fn lens(params: &MixtureParams, s: f64) -> f64 {
    geometry::lens_volume(params.exclusion_radius(), s).unwrap_or(0.0)
}

/// Penetrable `b_2` by one-dimensional radial quadrature.
pub fn b2_penetrable_quadrature(params: &MixtureParams) -> Result<f64> {
    params.require(Model::Penetrable)?;
    let (d, rho) = (2.0 * params.big_radius, params.exclusion_radius());
    let zs = params.z_small;
    let f = |s: f64| (zs * lens(params, s)).exp_m1() * 4.0 * std::f64::consts::PI * s * s;
    Ok(0.5 * (-ball3(d) + adaptive_simpson(&f, d, 2.0 * rho, 1e-13, 40)))
}

/// Penetrable `db_2/dz_r` by radial quadrature.
pub fn db2_dzr_quadrature(params: &MixtureParams) -> Result<f64> {
    params.require(Model::Penetrable)?;
    let (d, rho) = (2.0 * params.big_radius, params.exclusion_radius());
    let zs = params.z_small;
    let f = |s: f64| {
        let v = lens(params, s);
        v * (zs * v).exp() * 4.0 * std::f64::consts::PI * s * s
    };
    Ok(0.5 * adaptive_simpson(&f, d, 2.0 * rho, 1e-13, 40))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
}

/// A bound that the partial sums must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, lhs_stderr: f64, bound: f64) -> Self {
        BoundCheck {
            lhs,
            lhs_stderr,
            bound,
            holds: lhs <= bound + 3.0 * lhs_stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub quantity: String,
    pub terms: Vec<SeriesTerm>,
    pub total: f64,
    pub total_stderr: f64,
    pub truncation_order: usize,
    pub zhat: MCEstimate,
    pub coefficients: Vec<ClusterCoefficient>,
    /// `Σ m |b_m| ẑ^m ≤ e^A ẑ` with `A` from the convergence witness.
    pub majorant: Option<BoundCheck>,
    /// `Σ |db_m/dz_r| ẑ^m ≤ e^a - 1` (small-sphere density only).
    pub derivative_bound: Option<BoundCheck>,
    pub witness: Option<ConvergenceWitness>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Highest order `M`.
    pub order: usize,
    pub coefficients: CoefficientOptions,
    /// Turn a failed convergence check into an error.
    pub strict: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            order: 3,
            coefficients: CoefficientOptions::default(),
            strict: false,
        }
    }
}

/// The effective activity used by the series.
pub fn series_zhat(params: &MixtureParams, opts: &SeriesOptions) -> Result<(MCEstimate, Vec<Warning>)> {
    let p = infinite_volume(params);
    let (mode, trunc) = match p.model {
        Model::Penetrable => (ActivityMode::PenetrableExact, SeriesTruncation::default()),
        Model::Colloid => (
            ActivityMode::ColloidSeries,
            SeriesTruncation {
                n_max: opts.coefficients.cloud.n_max,
                samples: opts.coefficients.samples,
                seed: mc::derive_seed(opts.coefficients.seed, 999),
            },
        ),
    };
    let (z, warnings) = effective::zhat(&p, mode, &trunc)?;
    Ok((
        MCEstimate {
            value: z.value,
            stderr: z.stderr,
            samples: if z.stderr > 0.0 { trunc.samples } else { 0 },
            seed: trunc.seed,
        },
        warnings,
    ))
}

/// Checks the model's criterion at `ẑ`; returns the witness and the constant
/// `A` entering the majorant.
fn gate(
    params: &MixtureParams,
    zhat: f64,
    strict: bool,
    warnings: &mut Vec<Warning>,
) -> Result<(ConvergenceWitness, f64)> {
    let (w, big_a) = match params.model {
        Model::Penetrable => {
            let w = convergence::check_easy(params, zhat)?;
            let a = w.constants["A"];
            (w, a)
        }
        Model::Colloid => {
            let w = convergence::witness_search_hs(params, zhat)?;
            let a = w.constants["a"];
            (w, a)
        }
    };
    if !w.satisfied {
        let detail = format!(
            "ẑ = {zhat:e} exceeds the admissible {:e} for the {} model",
            w.admissible_zhat.unwrap_or(0.0),
            params.model_name()
        );
        if strict {
            return Err(Error::Precondition(detail));
        }
        warnings.push(Warning::CriterionViolated {
            criterion: w.criterion.name().into(),
            detail,
        });
    }
    Ok((w, big_a))
}

/// `b_1, .., b_M`.
pub fn coefficients(params: &MixtureParams, order: usize, opts: &CoefficientOptions) -> Result<Vec<ClusterCoefficient>> {
    check_order(order)?;
    (1..=order).map(|m| b_m(m, params, opts)).collect()
}

struct Prepared {
    zhat: MCEstimate,
    coeffs: Vec<ClusterCoefficient>,
    witness: ConvergenceWitness,
    big_a: f64,
    warnings: Vec<Warning>,
}

fn prepare(params: &MixtureParams, opts: &SeriesOptions) -> Result<Prepared> {
    let (zhat, mut warnings) = series_zhat(params, opts)?;
    let (witness, big_a) = gate(params, zhat.value, opts.strict, &mut warnings)?;
    let coeffs = coefficients(params, opts.order, &opts.coefficients)?;
    Ok(Prepared {
        zhat,
        coeffs,
        witness,
        big_a,
        warnings,
    })
}

/// Terms `c_m b_m ẑ^m` with errors from `b_m` and from `ẑ`.
fn power_terms(pre: &Prepared, weight: impl Fn(usize) -> f64) -> (Vec<SeriesTerm>, f64) {
    let z = pre.zhat.value;
    let mut dz = 0.0;
    let terms = pre
        .coeffs
        .iter()
        .map(|c| {
            let k = weight(c.m);
            let zm = z.powi(c.m as i32);
            dz += k * c.m as f64 * c.estimate * z.powi(c.m as i32 - 1);
            SeriesTerm {
                order: c.m,
                value: k * c.estimate * zm,
                stderr: (k * c.stderr * zm).abs(),
            }
        })
        .collect();
    (terms, (dz * pre.zhat.stderr).abs())
}

fn finish(
    quantity: &str,
    mut terms: Vec<SeriesTerm>,
    zhat_err: f64,
    pre: Prepared,
    derivative_bound: Option<BoundCheck>,
    order: usize,
) -> SeriesResult {
    terms.sort_by_key(|t| t.order);
    let total = terms.iter().map(|t| t.value).sum();
    let var: f64 = terms.iter().map(|t| t.stderr * t.stderr).sum::<f64>() + zhat_err * zhat_err;
    let z = pre.zhat.value;
    let lhs: f64 = pre
        .coeffs
        .iter()
        .map(|c| c.m as f64 * c.estimate.abs() * z.powi(c.m as i32))
        .sum();
    let lhs_err = pre
        .coeffs
        .iter()
        .map(|c| (c.m as f64 * c.stderr * z.powi(c.m as i32)).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut warnings = pre.warnings;
    if let Some(last) = terms.last() {
        if terms.len() > 1 && last.value.abs() > 2.0 * last.stderr {
            warnings.extend(Warning::tail_check(quantity, last.value, total, 0.1));
        }
    }
    SeriesResult {
        quantity: quantity.into(),
        terms,
        total,
        total_stderr: var.sqrt(),
        truncation_order: order,
        zhat: pre.zhat,
        coefficients: pre.coeffs,
        majorant: Some(BoundCheck::new(lhs, lhs_err, pre.big_a.exp() * z)),
        derivative_bound,
        witness: Some(pre.witness),
        warnings,
    }
}

/// The pressure `Σ_{m≥1} b_m ẑ^m`, plus `z_r` for the penetrable model.
pub fn pressure_series(params: &MixtureParams, opts: &SeriesOptions) -> Result<SeriesResult> {
    let pre = prepare(params, opts)?;
    let (mut terms, zerr) = power_terms(&pre, |_| 1.0);
    if params.model == Model::Penetrable {
        terms.push(SeriesTerm {
            order: 0,
            value: params.z_small,
            stderr: 0.0,
        });
    }
    Ok(finish("pressure", terms, zerr, pre, None, opts.order))
}

/// `ρ_R = Σ_{m≥1} m b_m ẑ^m`.
pub fn rho_big(params: &MixtureParams, opts: &SeriesOptions) -> Result<SeriesResult> {
    let pre = prepare(params, opts)?;
    let (terms, zerr) = power_terms(&pre, |m| m as f64);
    Ok(finish("rho_R", terms, zerr, pre, None, opts.order))
}

/// `ρ_r = z_r (1 - |B(0, R + r)| ρ_R + Σ_{m≥2} (db_m/dz_r) ẑ^m)`, penetrable only.
pub fn rho_small(params: &MixtureParams, opts: &SeriesOptions) -> Result<SeriesResult> {
    params.require(Model::Penetrable)?;
    let pre = prepare(params, opts)?;
    let zs = params.z_small;
    let bx = params.exclusion_volume();
    let z = pre.zhat.value;
    let mut terms = vec![SeriesTerm {
        order: 0,
        value: zs,
        stderr: 0.0,
    }];
    let mut dsum = 0.0;
    let mut dsum_var = 0.0;
    for c in &pre.coeffs {
        let zm = z.powi(c.m as i32);
        let d = db_m_dzr(c.m, params, &opts.coefficients)?;
        dsum += d.estimate.abs() * zm;
        dsum_var += (d.stderr * zm).powi(2);
        // b_m and db_m use independent streams
        let value = zs * (-bx * c.m as f64 * c.estimate * zm + d.estimate * zm);
        let stderr = zs.abs() * ((bx * c.m as f64 * c.stderr * zm).powi(2) + (d.stderr * zm).powi(2)).sqrt();
        terms.push(SeriesTerm {
            order: c.m,
            value,
            stderr,
        });
    }
    let a = convergence::epsilon(params.small_radius / params.big_radius);
    let bound = BoundCheck::new(dsum, dsum_var.sqrt(), a.exp_m1());
    Ok(finish("rho_r", terms, 0.0, pre, Some(bound), opts.order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pen(zr: f64) -> MixtureParams {
        MixtureParams::penetrable(1.0, 0.1, 0.0, zr).unwrap()
    }

    fn quick() -> CoefficientOptions {
        CoefficientOptions {
            samples: 40_000,
            ..Default::default()
        }
    }

    #[test]
    fn b2_quadrature_examples() {
        assert!((b2_penetrable_quadrature(&pen(0.0)).unwrap() + 16.755160819145562).abs() < 1e-9);
        assert!((b2_penetrable_quadrature(&pen(0.1)).unwrap() + 16.7432401).abs() < 1e-6);
        assert!((db2_dzr_quadrature(&pen(0.0)).unwrap() - 0.1189704).abs() < 1e-6);
    }

    #[test]
    fn b_m_basics() {
        assert_eq!(b_m(1, &pen(0.1), &quick()).unwrap().estimate, 1.0);
        assert!(matches!(b_m(5, &pen(0.1), &quick()), Err(Error::EnumerationBound { .. })));
        let mc = b_m(2, &pen(0.1), &quick()).unwrap();
        let q = b2_penetrable_quadrature(&pen(0.1)).unwrap();
        assert!((mc.estimate - q).abs() < 3.0 * mc.stderr, "{mc:?} vs {q}");
        let c = MixtureParams::colloid(1.0, 0.1, 0.0, 0.0).unwrap();
        let bc = b_m(2, &c, &quick()).unwrap();
        let bp = b_m(2, &pen(0.0), &quick()).unwrap();
        assert!((bc.estimate - bp.estimate).abs() < 3.0 * (bc.stderr.powi(2) + bp.stderr.powi(2)).sqrt());
    }

    #[test]
    fn hard_sphere_third_coefficient() {
        // b_3 for hard spheres of diameter 2: (4 B_2² - B_3) / 2 with B_3 = 5/8 B_2²
        let b2 = ball3(2.0) / 2.0;
        let exact = (4.0 - 0.625) * b2 * b2 / 2.0;
        let mc = b_m(3, &pen(0.0), &quick()).unwrap();
        assert!((mc.estimate - exact).abs() < 3.0 * mc.stderr, "{mc:?} vs {exact}");
    }

    #[test]
    fn derivative_matches_quadrature() {
        let d = db_m_dzr(2, &pen(0.0), &quick()).unwrap();
        let q = db2_dzr_quadrature(&pen(0.0)).unwrap();
        assert!(d.estimate > 0.0);
        assert!((d.estimate - q).abs() < 3.0 * d.stderr, "{d:?} vs {q}");
        let fd = db_m_dzr_finite_difference(2, &pen(0.1), 1e-3, &quick()).unwrap();
        let d = db_m_dzr(2, &pen(0.1), &quick()).unwrap();
        let z = (fd.estimate - d.estimate) / (fd.stderr.hypot(d.stderr));
        assert!(z.abs() < 3.0, "{fd:?} vs {d:?}");
    }

    #[test]
    fn series_trivial_cases() {
        let opts = SeriesOptions {
            order: 2,
            coefficients: quick(),
            strict: false,
        };
        let p = pen(0.05);
        let s = pressure_series(&p, &opts).unwrap();
        assert_eq!(s.total, 0.05);
        let r = rho_big(&p, &opts).unwrap();
        assert_eq!(r.total, 0.0);
        let rs = rho_small(&p, &opts).unwrap();
        assert_eq!(rs.total, 0.05);
        let z0 = MixtureParams::penetrable(1.0, 0.1, 0.003, 0.0).unwrap();
        assert_eq!(rho_small(&z0, &opts).unwrap().total, 0.0);
    }

    #[test]
    fn series_identities_and_gate() {
        let opts = SeriesOptions {
            order: 2,
            coefficients: quick(),
            strict: false,
        };
        let p = MixtureParams::penetrable(1.0, 0.1, 0.003, 0.05).unwrap();
        let s = pressure_series(&p, &opts).unwrap();
        let r = rho_big(&p, &opts).unwrap();
        assert!(s.warnings.is_empty());
        assert!(s.majorant.unwrap().holds);
        for (a, b) in s.terms.iter().filter(|t| t.order > 0).zip(&r.terms) {
            assert_eq!(a.value * a.order as f64, b.value);
        }
        assert!((s.total - s.terms.iter().map(|t| t.value).sum::<f64>()).abs() < 1e-18);
        let rs = rho_small(&p, &opts).unwrap();
        assert!(rs.derivative_bound.unwrap().holds);
        let hot = MixtureParams::penetrable(1.0, 0.1, 0.05, 0.05).unwrap();
        let s = pressure_series(&hot, &opts).unwrap();
        assert!(matches!(s.warnings[0], Warning::CriterionViolated { .. }));
        let strict = SeriesOptions { strict: true, ..opts };
        assert!(pressure_series(&hot, &strict).is_err());
    }

    #[test]
    fn chain_rule_on_closed_form() {
        let zhat = |zb: f64| zb * (-0.05 * pen(0.0).exclusion_volume()).exp();
        let zb = 0.003;
        let h = 1e-7;
        let deriv = (zhat(zb + h) - zhat(zb - h)) / (2.0 * h);
        assert!((zb * deriv - zhat(zb)).abs() < 1e-12);
    }
}
