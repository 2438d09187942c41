//! Effective activities of the large spheres and the solvent-mediated
//! multi-body potentials `W_{#J}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::geometry::{self, BallSpec, Point};
use crate::interactions::{self, CloudSampler, MixtureParams, Model, WProvider};
use crate::mc::{self, MCEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityMode {
    /// `z_R exp(-z_r |B(0, R + r)|)`, exact for the penetrable model.
    PenetrableExact,
    /// `z_R exp(A)` with `A` truncated at clouds of `n_max` small spheres.
    ColloidSeries,
    /// `z_R Ξ_{Λ \ B(x, R + r)} / Ξ_Λ` for the solvent alone, by brute force.
    FiniteVolumeRatio,
}

/// `ẑ_R = z_R e^A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveActivity {
    pub value: f64,
    /// The exponent `A`.
    pub exponent: f64,
    pub mode: ActivityMode,
    /// Standard error of `value` (zero for closed forms).
    pub stderr: f64,
    /// Per-cloud-size contributions to `A`, with errors.
    pub exponent_terms: Vec<MCEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivePotentialValue {
    pub j_size: usize,
    pub value: f64,
    pub stderr: f64,
}

/// How k-fold intersection volumes are obtained for `k ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum IntersectionMethod {
    /// Slice-wise exact disk areas integrated along one axis.
    Quadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Brings periodic images of `xs` next to `xs[0]`.
pub(crate) fn unwrap_images(xs: &[Point], params: &MixtureParams) -> Vec<Point> {
    match &params.space {
        Some(bx) if bx.boundary == geometry::Boundary::Periodic => {
            let o = xs[0];
            xs.iter()
                .map(|x| {
                    let d = bx.displacement(&o, x);
                    [o[0] + d[0], o[1] + d[1], o[2] + d[2]]
                })
                .collect()
        }
        _ => xs.to_vec(),
    }
}

/// `|∩_j B(x_j, R + r)|` with its error.
pub fn exclusion_intersection(
    xs: &[Point],
    params: &MixtureParams,
    method: IntersectionMethod,
) -> Result<MCEstimate> {
    let pts = unwrap_images(xs, params);
    let rho = params.exclusion_radius();
    if pts.len() == 2 {
        return Ok(MCEstimate::exact(geometry::lens_volume(
            rho,
            geometry::dist2(&pts[0], &pts[1]).sqrt(),
        )?));
    }
    let balls: Vec<BallSpec> = pts
        .iter()
        .map(|c| BallSpec::new(*c, rho))
        .collect::<Result<_>>()?;
    match method {
        IntersectionMethod::Quadrature => Ok(MCEstimate::exact(
            geometry::intersection_volume_quadrature(&balls)?,
        )),
        IntersectionMethod::MonteCarlo { samples, seed } => {
            geometry::k_intersection_volume(&balls, samples, seed)
        }
    }
}

/// `W_k = z_r (-1)^{k-1} |∩_j B(x_j, R + r)|` for the penetrable model.
pub fn w_j_penetrable(
    xs: &[Point],
    params: &MixtureParams,
    method: IntersectionMethod,
) -> Result<EffectivePotentialValue> {
    params.require(Model::Penetrable)?;
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("W_J needs #J >= 2".into()));
    }
    let v = exclusion_intersection(xs, params, method)?;
    let sign = if xs.len() % 2 == 0 { -1.0 } else { 1.0 };
    Ok(EffectivePotentialValue {
        j_size: xs.len(),
        value: sign * params.z_small * v.value,
        stderr: params.z_small.abs() * v.stderr,
    })
}

/// Exact penetrable potentials, usable wherever `W` is needed.
#[derive(Debug, Clone, Copy)]
pub struct PenetrableW {
    pub params: MixtureParams,
}

impl PenetrableW {
    pub fn new(params: &MixtureParams) -> Result<Self> {
        params.require(Model::Penetrable)?;
        Ok(PenetrableW { params: *params })
    }
}

impl WProvider for PenetrableW {
    fn w(&self, xs: &[Point]) -> Result<f64> {
        Ok(w_j_penetrable(xs, &self.params, IntersectionMethod::Quadrature)?.value)
    }

    fn dw_dzr(&self, xs: &[Point]) -> Result<f64> {
        let v = exclusion_intersection(xs, &self.params, IntersectionMethod::Quadrature)?.value;
        Ok(if xs.len() % 2 == 0 { -v } else { v })
    }
}

/// Truncation for cloud-series estimates of `W` and `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    /// Largest cloud size.
    pub n_max: usize,
    /// Samples per cloud size.
    pub samples: u64,
    pub seed: u64,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        SeriesTruncation {
            n_max: 2,
            samples: 200_000,
            seed: 1,
        }
    }
}

/// `∫ Π_{j} ζ(x_j, Y) dν(Y)` split by cloud size `1..=n_max`.
pub fn nu_integral_by_size(
    xs: &[Point],
    params: &MixtureParams,
    trunc: &SeriesTruncation,
) -> Result<Vec<MCEstimate>> {
    let sampler = CloudSampler::new(params, trunc.n_max)?;
    let mut out = Vec::with_capacity(sampler.n_max());
    for k in 1..=sampler.n_max() {
        if params.z_small == 0.0 {
            out.push(MCEstimate::exact(0.0));
            continue;
        }
        let seed = mc::derive_seed(trunc.seed, k as u64);
        out.push(mc::sample_mean(trunc.samples, seed, |rng| {
            let (ys, w) = sampler.sample_sized(rng, xs, k);
            if w == 0.0 {
                return 0.0;
            }
            let prod: f64 = xs
                .iter()
                .map(|x| interactions::zeta(x, &ys, params))
                .product();
            prod * w
        }));
    }
    Ok(out)
}

fn tail_warning(context: &str, terms: &[MCEstimate], total: f64) -> Option<Warning> {
    let last = terms.last()?;
    if terms.len() < 2 || last.value.abs() <= 2.0 * last.stderr {
        return None;
    }
    Warning::tail_check(context, last.value, total, 0.1)
}

/// `W_{#J} = -∫ Π ζ dν` by cloud sampling.
pub fn w_j_cloud_series(
    xs: &[Point],
    params: &MixtureParams,
    trunc: &SeriesTruncation,
) -> Result<(EffectivePotentialValue, Vec<Warning>)> {
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("W_J needs #J >= 2".into()));
    }
    let terms = nu_integral_by_size(xs, params, trunc)?;
    let total: f64 = terms.iter().map(|t| t.value).sum();
    let stderr = terms.iter().map(|t| t.stderr.powi(2)).sum::<f64>().sqrt();
    let warnings = tail_warning("W_J cloud series", &terms, total)
        .into_iter()
        .collect();
    Ok((
        EffectivePotentialValue {
            j_size: xs.len(),
            value: -total,
            stderr,
        },
        warnings,
    ))
}

/// Cloud-series potentials with a fixed sampling budget per call.
#[derive(Debug, Clone, Copy)]
pub struct CloudSeriesW {
    pub params: MixtureParams,
    pub trunc: SeriesTruncation,
}

impl WProvider for CloudSeriesW {
    fn w(&self, xs: &[Point]) -> Result<f64> {
        // exact one-point clouds plus sampled larger clouds
        let pts = unwrap_images(xs, &self.params);
        let k1 = exclusion_intersection(&pts, &self.params, IntersectionMethod::Quadrature)?.value;
        let sign = if xs.len() % 2 == 0 { -1.0 } else { 1.0 };
        let mut w = sign * self.params.z_small * k1;
        let p = &self.params;
        let span = 2.0 * p.exclusion_radius() + 2.0 * p.small_radius * (self.trunc.n_max as f64 - 1.0);
        let linked = (0..pts.len()).all(|i| (i + 1..pts.len()).all(|j| p.distance(&pts[i], &pts[j]) < span));
        if p.model == Model::Colloid && self.trunc.n_max >= 2 && linked {
            let terms = nu_integral_by_size(xs, &self.params, &self.trunc)?;
            w -= terms[1..].iter().map(|t| t.value).sum::<f64>();
        }
        Ok(w)
    }
}

/// The effective activity `ẑ_R` of the large spheres.
///
/// `FiniteVolumeRatio` evaluates at the center of the parameter box and needs
/// a box; see [`crate::oracle::zhat_finite_volume`] for arbitrary positions.
pub fn zhat(
    params: &MixtureParams,
    mode: ActivityMode,
    trunc: &SeriesTruncation,
) -> Result<(EffectiveActivity, Vec<Warning>)> {
    match mode {
        ActivityMode::PenetrableExact => {
            params.require(Model::Penetrable)?;
            let a = -params.z_small * params.exclusion_volume();
            Ok((
                EffectiveActivity {
                    value: params.z_big * a.exp(),
                    exponent: a,
                    mode,
                    stderr: 0.0,
                    exponent_terms: vec![MCEstimate::exact(a)],
                },
                vec![],
            ))
        }
        ActivityMode::ColloidSeries => {
            let terms = nu_integral_by_size(&[[0.0; 3]], params, trunc)?;
            // the one-point term is exact
            let mut terms = terms;
            terms[0] = MCEstimate::exact(-params.z_small * params.exclusion_volume());
            let a: f64 = terms.iter().map(|t| t.value).sum();
            let a_err = terms.iter().map(|t| t.stderr.powi(2)).sum::<f64>().sqrt();
            let value = params.z_big * a.exp();
            let warnings = tail_warning("effective activity cloud series", &terms, a)
                .into_iter()
                .collect();
            Ok((
                EffectiveActivity {
                    value,
                    exponent: a,
                    mode,
                    stderr: value.abs() * a_err,
                    exponent_terms: terms,
                },
                warnings,
            ))
        }
        ActivityMode::FiniteVolumeRatio => {
            let bx = params.space.ok_or_else(|| {
                Error::Precondition("the finite-volume activity needs a box".into())
            })?;
            let c = bx.side / 2.0;
            let cfg = crate::oracle::OracleConfig {
                samples: trunc.samples,
                seed: trunc.seed,
                ..crate::oracle::OracleConfig::for_box(bx)
            };
            crate::oracle::zhat_finite_volume(params, &[c, c, c], &cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pen(zr: f64) -> MixtureParams {
        MixtureParams::penetrable(1.0, 0.1, 1.0, zr).unwrap()
    }

    #[test]
    fn w2_examples() {
        let p = pen(0.1);
        let q = IntersectionMethod::Quadrature;
        let w = w_j_penetrable(&[[0.0; 3], [2.0, 0.0, 0.0]], &p, q).unwrap();
        assert!((w.value + 0.00670206).abs() < 1e-8);
        let w = w_j_penetrable(&[[0.0; 3], [2.2, 0.0, 0.0]], &p, q).unwrap();
        assert_eq!(w.value, 0.0);
        let tri = [[0.0; 3], [2.0, 0.0, 0.0], [1.0, 3f64.sqrt(), 0.0]];
        let w = w_j_penetrable(&tri, &p, q).unwrap();
        assert_eq!(w.value, 0.0);
        let c = MixtureParams::colloid(1.0, 0.1, 1.0, 0.1).unwrap();
        assert!(matches!(
            w_j_penetrable(&tri, &c, q),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn w2_cloud_series_matches_lens() {
        let p = pen(0.1);
        let xs = [[0.0; 3], [2.0, 0.0, 0.0]];
        let (mc, _) = w_j_cloud_series(&xs, &p, &SeriesTruncation::default()).unwrap();
        let exact = w_j_penetrable(&xs, &p, IntersectionMethod::Quadrature).unwrap();
        assert!((mc.value - exact.value).abs() < 3.0 * mc.stderr, "{mc:?}");
        let xs = [[0.0; 3], [0.0; 3]];
        let (mc, _) = w_j_cloud_series(&xs, &p, &SeriesTruncation::default()).unwrap();
        assert!(mc.value <= 0.0);
        let c = MixtureParams::colloid(1.0, 0.1, 1.0, 0.0).unwrap();
        let (mc, _) = w_j_cloud_series(&[[0.0; 3], [2.0, 0.0, 0.0]], &c, &SeriesTruncation::default()).unwrap();
        assert_eq!((mc.value, mc.stderr), (0.0, 0.0));
    }

    #[test]
    fn zhat_examples() {
        let p = pen(0.1);
        let t = SeriesTruncation::default();
        let (z, _) = zhat(&p, ActivityMode::PenetrableExact, &t).unwrap();
        assert!((z.value - 0.5726229).abs() < 1e-7);
        let (z0, _) = zhat(&pen(0.0), ActivityMode::PenetrableExact, &t).unwrap();
        assert_eq!(z0.value, 1.0);
        let one = SeriesTruncation { n_max: 1, ..t };
        let (zs, _) = zhat(&p, ActivityMode::ColloidSeries, &one).unwrap();
        assert_eq!(zs.value, z.value);
        let c = MixtureParams::colloid(1.0, 0.1, 1.0, 0.1).unwrap();
        let (zc, _) = zhat(&c, ActivityMode::ColloidSeries, &one).unwrap();
        assert_eq!(zc.value, z.value);
        // penetrable solvent: the size-2 cloud term vanishes identically
        let (zp2, _) = zhat(&p, ActivityMode::ColloidSeries, &t).unwrap();
        assert_eq!(zp2.value, z.value);
    }

    #[test]
    fn colloid_second_order_raises_activity() {
        let c = MixtureParams::colloid(1.0, 0.2, 1.0, 0.5).unwrap();
        let (z, _) = zhat(&c, ActivityMode::ColloidSeries, &SeriesTruncation::default()).unwrap();
        let first = (-0.5 * c.exclusion_volume()).exp();
        assert!(z.exponent_terms[1].value > 5.0 * z.exponent_terms[1].stderr);
        assert!(z.value > first);
    }

    #[test]
    fn w2_monotone() {
        let p = pen(0.3);
        let q = IntersectionMethod::Quadrature;
        let mut prev = f64::INFINITY;
        for i in 0..=30 {
            let d = 2.0 + 0.01 * i as f64;
            let w = w_j_penetrable(&[[0.0; 3], [d, 0.0, 0.0]], &p, q).unwrap().value;
            assert!(w <= 0.0 && w.abs() <= prev);
            prev = w.abs();
        }
    }
}
