//! Brute-force grand-canonical reference values in a small box.
//!
//! Every `(n_1, n_2)` term of the partition function is an integral of a
//! product of hard-core indicators over uniform positions. For each number
//! `n_1` of large spheres we sample their positions, then run independent
//! solvent sequences `y_1, y_2, ...` and record how long the sequence stays
//! admissible. A prefix of length `T` contributes to every `n_2 ≤ T` at once.
//! Activity weights are Poisson-normalized so that all sums stay `O(1)`;
//! the normalization is added back in the logarithm.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::effective::{self, ActivityMode, EffectiveActivity, IntersectionMethod};
use crate::error::{Error, Result, Warning};
use crate::geometry::{Boundary, BoxSpec, Point};
use crate::interactions::{ball3, MixtureParams, Model};
use crate::mc::{self, MCEstimate, Moments};

/// Truncation threshold for the tail terms relative to the running sum.
pub const TAIL_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    #[serde(rename = "box")]
    pub space: BoxSpec,
    pub n1_max: usize,
    pub n2_max: usize,
    /// Large-sphere configurations sampled per value of `n_1`.
    pub samples: u64,
    /// Solvent sequences drawn per large-sphere configuration.
    pub solvent_streams: usize,
    pub seed: u64,
}

impl OracleConfig {
    pub fn for_box(space: BoxSpec) -> Self {
        OracleConfig {
            space,
            n1_max: 6,
            n2_max: 40,
            samples: 200_000,
            solvent_streams: 4,
            seed: 42,
        }
    }

    /// The periodic desk box of side 6.
    pub fn desk() -> Self {
        Self::for_box(BoxSpec {
            side: 6.0,
            boundary: Boundary::Periodic,
            dim: 3,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.solvent_streams == 0 {
            return Err(Error::InvalidParameter(
                "oracle needs at least one sample and one solvent stream".into(),
            ));
        }
        Ok(())
    }
}

/// `e^{-a} a^n / n!` for `n = 0..=n_max`.
fn poisson_weights(a: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut w = (-a).exp();
    for n in 0..=n_max {
        if n > 0 {
            w *= a / n as f64;
        }
        out.push(w);
    }
    out
}

fn boxed(params: &MixtureParams, cfg: &OracleConfig) -> Result<MixtureParams> {
    cfg.validate()?;
    if params.z_big < 0.0 || params.z_small < 0.0 {
        return Err(Error::InvalidParameter(
            "the oracle samples non-negative activities only".into(),
        ));
    }
    params.with_box(cfg.space)
}

fn large_admissible(xs: &[Point], p: &MixtureParams) -> bool {
    let d = 2.0 * p.big_radius;
    (0..xs.len()).all(|i| (i + 1..xs.len()).all(|j| p.distance(&xs[i], &xs[j]) >= d))
}

/// Length of the admissible prefix of one solvent sequence.
fn solvent_prefix(
    rng: &mut ChaCha8Rng,
    xs: &[Point],
    p: &MixtureParams,
    n_max: usize,
    ys: &mut Vec<Point>,
) -> usize {
    let bx = p.space.expect("boxed parameters");
    let rho = p.exclusion_radius();
    let dss = 2.0 * p.small_radius;
    ys.clear();
    for n in 0..n_max {
        let y = bx.sample_point(rng);
        if xs.iter().any(|x| p.distance(x, &y) < rho) {
            return n;
        }
        if p.model == Model::Colloid {
            if ys.iter().any(|o| p.distance(o, &y) < dss) {
                return n;
            }
            ys.push(y);
        }
    }
    n_max
}

/// Per-stratum moments of `[H·S_0, H·S_N, H·V·S_0]`.
fn stratum(
    p: &MixtureParams,
    cfg: &OracleConfig,
    n1: usize,
    pmf2: &[f64],
    with_volume: bool,
) -> Result<Moments<3>> {
    let bx = cfg.space;
    let vol = bx.volume();
    let n2_max = cfg.n2_max;
    if n1 == 0 && p.model == Model::Penetrable {
        // every indicator is one
        let s0: f64 = pmf2.iter().sum();
        let sn: f64 = pmf2.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        let mut m = Moments::default();
        m.push([s0, sn, vol * s0]);
        return Ok(m);
    }
    let use_ie = with_volume && inclusion_exclusion_applies(p);
    let seed = mc::derive_seed(cfg.seed, n1 as u64);
    let m = mc::sample_moments::<3, _>(cfg.samples, seed, |rng| {
        let xs: Vec<Point> = (0..n1).map(|_| bx.sample_point(rng)).collect();
        if !large_admissible(&xs, p) {
            return [0.0; 3];
        }
        let mut ys = Vec::with_capacity(if p.model == Model::Colloid { n2_max } else { 0 });
        let (mut s0, mut sn) = (0.0, 0.0);
        for _ in 0..cfg.solvent_streams {
            let t = solvent_prefix(rng, &xs, p, n2_max, &mut ys);
            for (n, w) in pmf2.iter().enumerate().take(t + 1) {
                s0 += w;
                sn += n as f64 * w;
            }
        }
        let k = cfg.solvent_streams as f64;
        let (s0, sn) = (s0 / k, sn / k);
        let v = if !with_volume {
            0.0
        } else if use_ie {
            free_volume_inclusion_exclusion(&xs, p).unwrap_or(f64::NAN)
        } else {
            free_volume_hits(rng, &xs, p, 64)
        };
        [s0, sn, v * s0]
    });
    if m.mean.iter().any(|v| v.is_nan()) {
        return Err(Error::Oracle("free volume evaluation failed".into()));
    }
    Ok(m)
}

struct Ensemble {
    /// Poisson-normalized large-sphere weights.
    pmf1: Vec<f64>,
    strata: Vec<Option<Moments<3>>>,
    /// `z_R|Λ| + z_r|Λ|`, removed by the normalization.
    log_norm: f64,
    xi: f64,
    warnings: Vec<Warning>,
}

impl Ensemble {
    fn run(params: &MixtureParams, cfg: &OracleConfig, with_volume: bool) -> Result<Self> {
        let p = boxed(params, cfg)?;
        let vol = cfg.space.volume();
        let (a1, a2) = (p.z_big * vol, p.z_small * vol);
        let pmf1 = poisson_weights(a1, cfg.n1_max);
        let pmf2 = poisson_weights(a2, cfg.n2_max);
        let mut strata = Vec::with_capacity(cfg.n1_max + 1);
        for (n1, w) in pmf1.iter().enumerate() {
            strata.push(if *w == 0.0 {
                None
            } else {
                Some(stratum(&p, cfg, n1, &pmf2, with_volume)?)
            });
        }
        let xi: f64 = strata
            .iter()
            .zip(&pmf1)
            .filter_map(|(m, w)| m.as_ref().map(|m| w * m.mean[0]))
            .sum();
        if !(xi > 0.0) {
            return Err(Error::Oracle(
                "every sampled term vanished; the partition-function estimate is zero".into(),
            ));
        }
        let mut warnings = Vec::new();
        if let Some(Some(top)) = strata.last() {
            let last = pmf1[cfg.n1_max] * top.mean[0];
            warnings.extend(Warning::tail_check("oracle n1 truncation", last, xi, TAIL_THRESHOLD));
        }
        let s2: f64 = pmf2.iter().sum();
        if s2 > 0.0 {
            warnings.extend(Warning::tail_check(
                "oracle n2 truncation",
                pmf2[cfg.n2_max],
                s2,
                TAIL_THRESHOLD,
            ));
        }
        Ok(Ensemble {
            pmf1,
            strata,
            log_norm: a1 + a2,
            xi,
            warnings,
        })
    }

    /// `Σ_n w_n c(n)·μ(n) / Σ_n w_n μ_0(n)` with its delta-method error.
    fn ratio(&self, coeff: impl Fn(usize) -> [f64; 3]) -> (f64, f64) {
        let num: f64 = self
            .strata
            .iter()
            .enumerate()
            .filter_map(|(n, m)| {
                let m = m.as_ref()?;
                let c = coeff(n);
                Some(self.pmf1[n] * (0..3).map(|k| c[k] * m.mean[k]).sum::<f64>())
            })
            .sum();
        let value = num / self.xi;
        let mut var = 0.0;
        for (n, m) in self.strata.iter().enumerate() {
            let Some(m) = m else { continue };
            let w = self.pmf1[n];
            let mut g = coeff(n);
            g[0] -= value;
            for v in g.iter_mut() {
                *v *= w / self.xi;
            }
            for i in 0..3 {
                for j in 0..3 {
                    var += g[i] * g[j] * m.mean_covariance(i, j);
                }
            }
        }
        (value, var.max(0.0).sqrt())
    }

    fn samples(&self) -> u64 {
        self.strata.iter().flatten().map(|m| m.n).sum()
    }

    fn log_xi(&self, seed: u64) -> MCEstimate {
        let var: f64 = self
            .strata
            .iter()
            .zip(&self.pmf1)
            .filter_map(|(m, w)| m.as_ref().map(|m| w * w * m.mean_covariance(0, 0)))
            .sum();
        MCEstimate {
            value: self.log_norm + self.xi.ln(),
            stderr: var.max(0.0).sqrt() / self.xi,
            samples: self.samples(),
            seed,
        }
    }
}

/// `log Ξ_Λ(z_R, z_r)` by direct term-by-term sampling.
pub fn log_xi(params: &MixtureParams, cfg: &OracleConfig) -> Result<(MCEstimate, Vec<Warning>)> {
    let e = Ensemble::run(params, cfg, false)?;
    Ok((e.log_xi(cfg.seed), e.warnings))
}

/// `log Ξ` on a grid of `(z_R, z_r)` with shared random numbers, so that the
/// estimates inherit the monotonicity of the exact function.
pub fn log_xi_grid(
    params: &MixtureParams,
    cfg: &OracleConfig,
    activities: &[(f64, f64)],
) -> Result<Vec<MCEstimate>> {
    activities
        .iter()
        .map(|&(zb, zs)| Ok(log_xi(&params.with_activities(zb, zs)?, cfg)?.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub log_xi: MCEstimate,
    #[serde(rename = "rho_R")]
    pub rho_big: MCEstimate,
    #[serde(rename = "rho_r")]
    pub rho_small: MCEstimate,
    #[serde(rename = "V_free_mean")]
    pub v_free_mean: MCEstimate,
    /// `ρ_r|Λ| - z_r⟨V_free⟩`; zero for the penetrable model.
    pub free_volume_residual: MCEstimate,
    pub warnings: Vec<Warning>,
}

/// Densities and the mean free volume of the truncated ensemble.
pub fn observables(params: &MixtureParams, cfg: &OracleConfig) -> Result<Observables> {
    let e = Ensemble::run(params, cfg, true)?;
    let vol = cfg.space.volume();
    let zs = params.z_small;
    let est = |(v, s): (f64, f64)| MCEstimate {
        value: v,
        stderr: s,
        samples: e.samples(),
        seed: cfg.seed,
    };
    let n1 = e.ratio(|n| [n as f64, 0.0, 0.0]);
    let n2 = e.ratio(|_| [0.0, 1.0, 0.0]);
    let v = e.ratio(|_| [0.0, 0.0, 1.0]);
    let d = e.ratio(|_| [0.0, 1.0, -zs]);
    Ok(Observables {
        log_xi: e.log_xi(cfg.seed),
        rho_big: est((n1.0 / vol, n1.1 / vol)),
        rho_small: est((n2.0 / vol, n2.1 / vol)),
        v_free_mean: est(v),
        free_volume_residual: est(d),
        warnings: e.warnings,
    })
}

fn inclusion_exclusion_applies(p: &MixtureParams) -> bool {
    matches!(p.space, Some(b) if b.boundary == Boundary::Periodic
        && b.side > 4.0 * p.exclusion_radius())
}

/// `|Λ \ ∪_i B(x_i, R + r)|` by inclusion-exclusion over overlapping groups.
///
/// Needs a periodic box with side above `4(R + r)` so that every group of
/// mutually overlapping balls has a unique unwrapped picture.
pub fn free_volume_inclusion_exclusion(xs: &[Point], params: &MixtureParams) -> Result<f64> {
    if !inclusion_exclusion_applies(params) {
        return Err(Error::Precondition(
            "inclusion-exclusion needs a periodic box with side > 4(R + r)".into(),
        ));
    }
    let bx = params.space.expect("checked above");
    let rho = params.exclusion_radius();
    let n = xs.len();
    let adj: Vec<u64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && params.distance(&xs[i], &xs[j]) < 2.0 * rho)
                .fold(0u64, |m, j| m | 1 << j)
        })
        .collect();
    // extend cliques with higher-indexed vertices only
    fn walk(
        clique: &mut Vec<usize>,
        cand: u64,
        xs: &[Point],
        adj: &[u64],
        params: &MixtureParams,
        acc: &mut f64,
    ) -> Result<()> {
        let mut rest = cand;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            clique.push(j);
            let pts: Vec<Point> = clique.iter().map(|&i| xs[i]).collect();
            let v = if pts.len() == 1 {
                ball3(params.exclusion_radius())
            } else {
                effective::exclusion_intersection(&pts, params, IntersectionMethod::Quadrature)?
                    .value
            };
            if v > 0.0 {
                *acc += if pts.len() % 2 == 1 { v } else { -v };
                walk(clique, cand & adj[j] & !((2u64 << j) - 1), xs, adj, params, acc)?;
            }
            clique.pop();
        }
        Ok(())
    }
    let mut union = 0.0;
    let all = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    walk(&mut Vec::new(), all, xs, &adj, params, &mut union)?;
    Ok(bx.volume() - union)
}

fn free_volume_hits(rng: &mut ChaCha8Rng, xs: &[Point], p: &MixtureParams, samples: u64) -> f64 {
    let bx = p.space.expect("boxed parameters");
    let rho = p.exclusion_radius();
    let free = (0..samples)
        .filter(|_| {
            let y = bx.sample_point(rng);
            xs.iter().all(|x| p.distance(x, &y) >= rho)
        })
        .count();
    bx.volume() * free as f64 / samples as f64
}

/// Free volume by hit-testing uniform points in the box.
pub fn free_volume_hit_test(
    xs: &[Point],
    params: &MixtureParams,
    samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    let bx = params
        .space
        .ok_or_else(|| Error::Precondition("free volume needs a box".into()))?;
    let rho = params.exclusion_radius();
    let est = mc::sample_mean(samples, seed, |rng| {
        let y = bx.sample_point(rng);
        if xs.iter().all(|x| params.distance(x, &y) >= rho) {
            1.0
        } else {
            0.0
        }
    });
    Ok(est.scaled(bx.volume()))
}

/// `Σ_n pmf(n) P_n / Σ_n pmf(n) Q_n` where `Q_n` flags an admissible solvent
/// prefix and `P_n` additionally keeps it outside the given balls.
fn solvent_ratio(
    p: &MixtureParams,
    cfg: &OracleConfig,
    pins: &[Point],
    tag: u64,
) -> Result<MCEstimate> {
    let bx = cfg.space;
    let pmf2 = poisson_weights(p.z_small * bx.volume(), cfg.n2_max);
    let rho = p.exclusion_radius();
    let seed = mc::derive_seed(cfg.seed, tag);
    let samples = cfg.samples * cfg.solvent_streams as u64;
    let m = mc::sample_moments::<2, _>(samples, seed, |rng| {
        let mut ys: Vec<Point> = Vec::with_capacity(cfg.n2_max);
        let (mut q, mut pp) = (0.0, 0.0);
        let mut outside = true;
        for (n, w) in pmf2.iter().enumerate() {
            q += w;
            if outside {
                pp += w;
            }
            if n == cfg.n2_max {
                break;
            }
            let y = bx.sample_point(rng);
            if p.model == Model::Colloid && ys.iter().any(|o| p.distance(o, &y) < 2.0 * p.small_radius) {
                break;
            }
            ys.push(y);
            if outside && pins.iter().any(|x| p.distance(x, &y) < rho) {
                outside = false;
            }
        }
        [pp, q]
    });
    let (num, den) = (m.mean[0], m.mean[1]);
    if !(den > 0.0) {
        return Err(Error::Oracle("solvent partition-function estimate is zero".into()));
    }
    let r = num / den;
    let var = (m.mean_covariance(0, 0) - 2.0 * r * m.mean_covariance(0, 1)
        + r * r * m.mean_covariance(1, 1))
        / (den * den);
    Ok(MCEstimate {
        value: r,
        stderr: var.max(0.0).sqrt(),
        samples,
        seed,
    })
}

fn solvent_tail(p: &MixtureParams, cfg: &OracleConfig) -> Option<Warning> {
    let pmf2 = poisson_weights(p.z_small * cfg.space.volume(), cfg.n2_max);
    Warning::tail_check(
        "oracle n2 truncation",
        pmf2[cfg.n2_max],
        pmf2.iter().sum(),
        TAIL_THRESHOLD,
    )
}

/// `z_R Ξ_{Λ \ B(x, R + r)} / Ξ_Λ` for the solvent alone.
pub fn zhat_finite_volume(
    params: &MixtureParams,
    x: &Point,
    cfg: &OracleConfig,
) -> Result<(EffectiveActivity, Vec<Warning>)> {
    let p = boxed(params, cfg)?;
    let ratio = solvent_ratio(&p, cfg, &[*x], u64::MAX)?;
    if !(ratio.value > 0.0) {
        return Err(Error::Oracle("no admissible solvent sample avoided the test sphere".into()));
    }
    let exponent = ratio.value.ln();
    let term = MCEstimate {
        value: exponent,
        stderr: ratio.stderr / ratio.value,
        ..ratio
    };
    Ok((
        EffectiveActivity {
            value: p.z_big * ratio.value,
            exponent,
            mode: ActivityMode::FiniteVolumeRatio,
            stderr: p.z_big.abs() * ratio.stderr,
            exponent_terms: vec![term],
        },
        solvent_tail(&p, cfg).into_iter().collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedRatio {
    /// Sampled with the large spheres pinned.
    pub direct: MCEstimate,
    /// `exp(Σ_j ∫ζ dν - Σ_J W_J)` from the effective potentials.
    pub effective: MCEstimate,
    pub warnings: Vec<Warning>,
}

/// Largest number of pinned spheres accepted by [`mixed_ratio_check`].
pub const MIXED_RATIO_MAX: usize = 4;

/// The solvent partition function with pinned large spheres, relative to the
/// empty box, computed directly and through the effective potentials.
pub fn mixed_ratio_check(
    params: &MixtureParams,
    cfg: &OracleConfig,
    positions: &[Point],
) -> Result<MixedRatio> {
    params.require(Model::Penetrable)?;
    if positions.len() > MIXED_RATIO_MAX {
        return Err(Error::Precondition(format!(
            "at most {MIXED_RATIO_MAX} pinned spheres"
        )));
    }
    let p = boxed(params, cfg)?;
    if positions.is_empty() {
        let one = MCEstimate::exact(1.0);
        return Ok(MixedRatio {
            direct: one,
            effective: one,
            warnings: vec![],
        });
    }
    let direct = solvent_ratio(&p, cfg, positions, positions.len() as u64 + 1000)?;
    let mut exponent = -p.z_small * p.exclusion_volume() * positions.len() as f64;
    let m = positions.len();
    for mask in 1u32..(1 << m) {
        if mask.count_ones() < 2 {
            continue;
        }
        let pts: Vec<Point> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| positions[i]).collect();
        exponent -= effective::w_j_penetrable(&pts, &p, IntersectionMethod::Quadrature)?.value;
    }
    Ok(MixedRatio {
        direct,
        effective: MCEstimate::exact(exponent.exp()),
        warnings: solvent_tail(&p, cfg).into_iter().collect(),
    })
}

/// A uniform large-sphere configuration of `m` points in the box.
pub fn random_configuration<R: Rng + ?Sized>(rng: &mut R, space: &BoxSpec, m: usize) -> Vec<Point> {
    (0..m).map(|_| space.sample_point(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    fn quick() -> OracleConfig {
        OracleConfig {
            samples: 20_000,
            ..OracleConfig::desk()
        }
    }

    fn desk(zb: f64, zs: f64) -> MixtureParams {
        MixtureParams::penetrable(1.0, 0.1, zb, zs).unwrap()
    }

    #[test]
    fn trivial_partition_functions() {
        let (l, _) = log_xi(&desk(0.0, 0.0), &quick()).unwrap();
        assert_eq!(l.value, 0.0);
        let (l, w) = log_xi(&desk(0.0, 0.05), &quick()).unwrap();
        assert!((l.value - 0.05 * 216.0).abs() < 1e-9);
        assert_eq!(l.stderr, 0.0);
        assert!(w.is_empty());
        let o = observables(&desk(0.0, 0.05), &quick()).unwrap();
        assert!((o.rho_small.value - 0.05).abs() < 1e-9);
        assert!((o.v_free_mean.value - 216.0).abs() < 1e-9);
        let o = observables(&desk(0.003, 0.0), &quick()).unwrap();
        assert_eq!(o.rho_small.value, 0.0);
    }

    #[test]
    fn free_volume_identity_and_two_methods() {
        let o = observables(&desk(0.003, 0.05), &quick()).unwrap();
        let r = o.free_volume_residual;
        assert!(r.value.abs() < 3.0 * r.stderr + 1e-9, "{r:?}");
        let p = desk(0.0, 0.05).with_box(OracleConfig::desk().space).unwrap();
        let xs = [[1.0, 1.0, 1.0], [3.1, 1.0, 1.0], [2.0, 2.8, 1.0], [5.9, 1.0, 1.0]];
        let ie = free_volume_inclusion_exclusion(&xs, &p).unwrap();
        let hit = free_volume_hit_test(&xs, &p, 400_000, 3).unwrap();
        assert!((ie - hit.value).abs() < 3.0 * hit.stderr, "{ie} {hit:?}");
    }

    #[test]
    fn mixed_ratio_examples() {
        let p = desk(0.0, 0.05);
        let cfg = quick();
        let r = mixed_ratio_check(&p, &cfg, &[]).unwrap();
        assert_eq!((r.direct.value, r.effective.value), (1.0, 1.0));
        let r = mixed_ratio_check(&p, &cfg, &[[3.0; 3]]).unwrap();
        assert!((r.effective.value - (-0.05 * p.exclusion_volume()).exp()).abs() < 1e-12);
        assert!(r.direct.agrees_with(&r.effective, 3.0), "{r:?}");
        let r = mixed_ratio_check(&p, &cfg, &[[2.0, 3.0, 3.0], [4.0, 3.0, 3.0]]).unwrap();
        assert!(r.direct.agrees_with(&r.effective, 3.0), "{r:?}");
    }

    #[test]
    fn finite_volume_activity() {
        let p = desk(1.0, 0.05);
        let (z, _) = zhat_finite_volume(&p, &[3.0; 3], &quick()).unwrap();
        let exact = (-0.05 * p.exclusion_volume()).exp();
        assert!((z.value - exact).abs() < 3.0 * z.stderr, "{z:?}");
        let c = MixtureParams::colloid(1.0, 0.1, 1.0, 0.05).unwrap();
        let (zc, _) = zhat_finite_volume(&c, &[3.0; 3], &quick()).unwrap();
        assert!(zc.value > 0.0 && zc.stderr > 0.0);
    }

    #[test]
    fn monotone_on_shared_grid() {
        let cfg = OracleConfig {
            samples: 4000,
            ..OracleConfig::desk()
        };
        let grid: Vec<(f64, f64)> = (0..5).map(|i| (0.001 * i as f64, 0.05)).collect();
        let v = log_xi_grid(&desk(0.0, 0.05), &cfg, &grid).unwrap();
        assert!(v.windows(2).all(|w| w[1].value >= w[0].value));
        let grid: Vec<(f64, f64)> = (0..5).map(|i| (0.003, 0.02 * i as f64)).collect();
        let v = log_xi_grid(&desk(0.0, 0.05), &cfg, &grid).unwrap();
        assert!(v.windows(2).all(|w| w[1].value >= w[0].value));
    }

    #[test]
    fn random_configuration_in_box() {
        let mut rng = stream_rng(1, 0);
        let b = OracleConfig::desk().space;
        let xs = random_configuration(&mut rng, &b, 5);
        assert!(xs.iter().flatten().all(|c| (0.0..6.0).contains(c)));
    }
}
