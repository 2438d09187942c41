use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use colloid_expansion::convergence::{self, Criterion};
use colloid_expansion::effective::{self, ActivityMode, IntersectionMethod, SeriesTruncation};
use colloid_expansion::expansion::{self, CoefficientOptions, SeriesOptions, SeriesResult};
use colloid_expansion::geometry::{self, BallSpec, BoxSpec, Point};
use colloid_expansion::graphs;
use colloid_expansion::interactions::{CloudTruncation, MixtureParams, Model};
use colloid_expansion::mc::derive_seed;
use colloid_expansion::oracle::OracleConfig;
use colloid_expansion::validation::{self, ValidationConfig};

use crate::config::Config;
use crate::output::{Format, Report};
use crate::{
    Cli, CoeffCmd, Command, ConvergenceCmd, EffectiveCmd, GeometryCmd, GraphClass, GraphsCmd, ModeArg,
    ModelArg, ModelArgs, SeriesArgs, SpeciesArg, ValidateCmd,
};

const DEFAULT_SAMPLES: u64 = 200_000;

struct Ctx {
    cfg: Config,
    seed: Option<u64>,
    samples: Option<u64>,
}

impl Ctx {
    fn seed(&self, default: u64) -> Result<u64> {
        self.cfg.pick(self.seed, "seed", default)
    }

    fn samples(&self, default: u64) -> Result<u64> {
        let s = self.cfg.pick(self.samples, "samples", default)?;
        if s == 0 {
            bail!("--samples must be positive");
        }
        Ok(s)
    }

    fn params(&self, a: &ModelArgs, defaults: MixtureParams) -> Result<MixtureParams> {
        let c = &self.cfg;
        let model = match c.pick_opt(a.model, "model")? {
            Some(ModelArg::Penetrable) => Model::Penetrable,
            Some(ModelArg::Colloid) => Model::Colloid,
            None => defaults.model,
        };
        let p = MixtureParams::new(
            c.pick(a.big, "R", defaults.big_radius)?,
            c.pick(a.small, "r", defaults.small_radius)?,
            c.pick(a.z_big, "zR", defaults.z_big)?,
            c.pick(a.z_small, "zr", defaults.z_small)?,
            model,
        )?;
        Ok(match c.pick_opt(a.side, "L")? {
            Some(l) => p.with_box(BoxSpec::periodic(l)?)?,
            None => MixtureParams {
                space: defaults.space,
                ..p
            },
        })
    }

    fn default_params(&self, a: &ModelArgs) -> Result<MixtureParams> {
        self.params(a, MixtureParams::penetrable(1.0, 0.1, 0.0, 0.0)?)
    }
}

/// Runs the parsed command; `Ok(true)` when a criterion was violated.
pub fn run(cli: Cli) -> Result<bool> {
    let g = cli.global;
    let cfg = Config::load(g.config.as_deref())?;
    if let Some(n) = cfg.pick_opt(g.threads, "threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out: Option<PathBuf> = cfg.pick_opt(g.out, "out")?;
    let format = match cfg.pick_opt(g.format, "format")? {
        Some(f) => f,
        None if out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) => Format::Csv,
        None => Format::Json,
    };
    let ctx = Ctx {
        cfg,
        seed: g.seed,
        samples: g.samples,
    };
    let mut report = match cli.command {
        Command::Geometry(c) => geometry_cmd(&ctx, c)?,
        Command::Graphs(c) => graphs_cmd(c)?,
        Command::Effective(c) => effective_cmd(&ctx, c)?,
        Command::Coeff(c) => coeff_cmd(&ctx, c)?,
        Command::Pressure(a) => {
            let (p, opts) = series_setup(&ctx, &a)?;
            series_report("pressure", &p, &expansion::pressure_series(&p, &opts)?)?
        }
        Command::Density(a) => {
            let (p, opts) = series_setup(&ctx, &a.series)?;
            match a.species {
                SpeciesArg::Large => series_report("density", &p, &expansion::rho_big(&p, &opts)?)?,
                SpeciesArg::Small => series_report("density", &p, &expansion::rho_small(&p, &opts)?)?,
            }
        }
        Command::Convergence(c) => convergence_cmd(&ctx, c)?,
        Command::Validate(c) => validate_cmd(&ctx, c)?,
    };
    if !report.json.contains_key("seed") {
        report.set("seed", ctx.seed(1)?)?;
    }
    report.emit(format, out.as_deref())?;
    Ok(report.violated)
}

fn geometry_cmd(ctx: &Ctx, c: GeometryCmd) -> Result<Report> {
    match c {
        GeometryCmd::Lens { radius, dist } => {
            let mut r = Report::new("geometry lens");
            r.set("radius", radius)?
                .set("dist", dist)?
                .set("volume", geometry::lens_volume(radius, dist)?)?;
            Ok(r)
        }
        GeometryCmd::Corona(a) => {
            let p = ctx.default_params(&a)?;
            let mut r = Report::new("geometry corona");
            r.set("R", p.big_radius)?
                .set("r", p.small_radius)?
                .set("exclusion_volume", p.exclusion_volume())?
                .set("corona_volume", p.corona_volume())?
                .set(
                    "overlap_volume",
                    geometry::lens_volume(p.exclusion_radius(), 2.0 * p.big_radius)?,
                )?
                .set(
                    "corona_fraction",
                    geometry::corona_fraction(p.small_radius / p.big_radius),
                )?;
            Ok(r)
        }
        GeometryCmd::Intersection { balls } => {
            let balls = parse_balls(&balls)?;
            let samples = ctx.samples(DEFAULT_SAMPLES)?;
            let seed = ctx.seed(1)?;
            let mut r = Report::new("geometry intersection");
            r.set("seed", seed)?
                .set("balls", &balls)?
                .set("quadrature", geometry::intersection_volume_quadrature(&balls)?)?
                .set("monte_carlo", geometry::k_intersection_volume(&balls, samples, seed)?)?;
            Ok(r)
        }
    }
}

fn parse_balls(s: &str) -> Result<Vec<BallSpec>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v: Vec<f64> = t
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("ball `{t}`"))?;
            if v.len() != 4 {
                bail!("ball `{t}`: expected x,y,z,radius");
            }
            Ok(BallSpec::new([v[0], v[1], v[2]], v[3])?)
        })
        .collect()
}

fn graphs_cmd(c: GraphsCmd) -> Result<Report> {
    let bound = graphs::DEFAULT_N_MAX;
    match c {
        GraphsCmd::Count { n, class, m, r } => {
            let mut rep = Report::new("graphs count");
            let count = match class {
                GraphClass::Connected | GraphClass::Trees => {
                    let n = n.ok_or_else(|| anyhow!("--n is required for this class"))?;
                    rep.set("n", n)?;
                    if class == GraphClass::Connected {
                        graphs::enumerate_connected(n, bound)?.len()
                    } else {
                        graphs::enumerate_trees(n, bound)?.len()
                    }
                }
                GraphClass::StarConnected | GraphClass::StarTrees => {
                    let (m, r) = (
                        m.ok_or_else(|| anyhow!("--m is required for star classes"))?,
                        r.ok_or_else(|| anyhow!("--r is required for star classes"))?,
                    );
                    rep.set("m", m)?.set("r", r)?;
                    graphs::enumerate_bipartite_star(m, r, true, class == GraphClass::StarTrees, bound)?.len()
                }
            };
            let name = match class {
                GraphClass::Connected => "connected",
                GraphClass::Trees => "trees",
                GraphClass::StarConnected => "star-connected",
                GraphClass::StarTrees => "star-trees",
            };
            rep.set("class", name)?.set("count", count)?;
            rep.table("class,count", [format!("{name},{count}")]);
            Ok(rep)
        }
        GraphsCmd::PartitionCheck { n } => {
            let pr = graphs::partition_check(n, bound)?;
            let mut rep = Report::new("graphs partition-check");
            rep.table(
                "n,trees,connected,interval_tally,coverage_failures,kruskal_failures,passed",
                [format!(
                    "{},{},{},{},{},{},{}",
                    pr.n,
                    pr.trees,
                    pr.connected,
                    pr.interval_tally,
                    pr.coverage_failures,
                    pr.kruskal_failures,
                    pr.passed
                )],
            );
            rep.set("report", &pr)?;
            if !pr.passed {
                bail!("partition scheme check failed for n = {n}");
            }
            Ok(rep)
        }
    }
}

/// `k` centers with all mutual distances equal to `d`.
fn regular_simplex(k: usize, d: f64) -> Result<Vec<Point>> {
    let all: [Point; 4] = [
        [0.0; 3],
        [d, 0.0, 0.0],
        [d / 2.0, d * 3f64.sqrt() / 2.0, 0.0],
        [d / 2.0, d * 3f64.sqrt() / 6.0, d * (2.0f64 / 3.0).sqrt()],
    ];
    if !(2..=4).contains(&k) {
        bail!("--k must be between 2 and 4");
    }
    Ok(all[..k].to_vec())
}

fn effective_cmd(ctx: &Ctx, c: EffectiveCmd) -> Result<Report> {
    match c {
        EffectiveCmd::Zhat { model, mode, nmax } => {
            let p = ctx.default_params(&model)?;
            let mode = match mode {
                Some(ModeArg::PenetrableExact) => ActivityMode::PenetrableExact,
                Some(ModeArg::ColloidSeries) => ActivityMode::ColloidSeries,
                Some(ModeArg::FiniteVolumeRatio) => ActivityMode::FiniteVolumeRatio,
                None if p.model == Model::Penetrable => ActivityMode::PenetrableExact,
                None => ActivityMode::ColloidSeries,
            };
            let trunc = SeriesTruncation {
                n_max: ctx.cfg.pick(nmax, "nmax", 2)?,
                samples: ctx.samples(DEFAULT_SAMPLES)?,
                seed: ctx.seed(1)?,
            };
            let (z, w) = effective::zhat(&p, mode, &trunc)?;
            let mut r = Report::new("effective zhat");
            r.set("params", p)?
                .set("seed", trunc.seed)?
                .set("samples", trunc.samples)?
                .set("zhat", z)?
                .warnings(&w)?;
            Ok(r)
        }
        EffectiveCmd::W { model, k, dist, nmax } => {
            let p = ctx.default_params(&model)?;
            let xs = regular_simplex(k, dist)?;
            let seed = ctx.seed(1)?;
            let mut r = Report::new("effective w");
            r.set("params", p)?.set("seed", seed)?.set("k", k)?.set("dist", dist)?;
            match p.model {
                Model::Penetrable => {
                    r.set("w", effective::w_j_penetrable(&xs, &p, IntersectionMethod::Quadrature)?)?;
                }
                Model::Colloid => {
                    let trunc = SeriesTruncation {
                        n_max: ctx.cfg.pick(nmax, "nmax", 2)?,
                        samples: ctx.samples(DEFAULT_SAMPLES)?,
                        seed,
                    };
                    let (v, w) = effective::w_j_cloud_series(&xs, &p, &trunc)?;
                    r.set("samples", trunc.samples)?.set("w", v)?.warnings(&w)?;
                }
            }
            Ok(r)
        }
    }
}

fn coefficient_options(ctx: &Ctx, nmax: Option<usize>, rmax: Option<usize>) -> Result<CoefficientOptions> {
    let d = CloudTruncation::default();
    let samples = ctx.samples(DEFAULT_SAMPLES)?;
    let seed = ctx.seed(1)?;
    Ok(CoefficientOptions {
        samples,
        seed,
        cloud: CloudTruncation {
            n_max: ctx.cfg.pick(nmax, "nmax", d.n_max)?,
            r_max: ctx.cfg.pick(rmax, "rmax", d.r_max)?,
            samples,
            seed,
        },
    })
}

fn coeff_cmd(ctx: &Ctx, c: CoeffCmd) -> Result<Report> {
    let CoeffCmd::Bm {
        model,
        m,
        derivative,
        nmax,
        rmax,
    } = c;
    let p = ctx.default_params(&model)?;
    let opts = coefficient_options(ctx, nmax, rmax)?;
    let coeff = if derivative {
        expansion::db_m_dzr(m, &p, &opts)?
    } else {
        expansion::b_m(m, &p, &opts)?
    };
    let mut r = Report::new(if derivative { "coeff dbm" } else { "coeff bm" });
    r.set("params", p)?
        .set("m", coeff.m)?
        .set("estimate", coeff.estimate)?
        .set("stderr", coeff.stderr)?
        .set("samples", coeff.samples)?
        .set("seed", coeff.seed)?
        .set("truncation", coeff.truncation)?;
    r.table(
        "m,estimate,stderr,samples,seed",
        [format!(
            "{},{:e},{:e},{},{}",
            coeff.m, coeff.estimate, coeff.stderr, coeff.samples, coeff.seed
        )],
    );
    Ok(r)
}

fn series_setup(ctx: &Ctx, a: &SeriesArgs) -> Result<(MixtureParams, SeriesOptions)> {
    let p = ctx.default_params(&a.model)?;
    let strict = a.strict || ctx.cfg.pick(None, "strict", false)?;
    Ok((
        p,
        SeriesOptions {
            order: ctx.cfg.pick(a.order, "order", 3)?,
            coefficients: coefficient_options(ctx, a.nmax, a.rmax)?,
            strict,
        },
    ))
}

fn series_report(command: &str, p: &MixtureParams, s: &SeriesResult) -> Result<Report> {
    let mut r = Report::new(command);
    r.set("params", p)?
        .set("seed", s.zhat.seed)?
        .set("quantity", &s.quantity)?
        .set("total", s.total)?
        .set("total_stderr", s.total_stderr)?
        .set("truncation_order", s.truncation_order)?
        .set("zhat", s.zhat)?
        .set("terms", &s.terms)?
        .set("coefficients", &s.coefficients)?
        .set("majorant", s.majorant)?
        .set("derivative_bound", s.derivative_bound)?
        .set("witness", &s.witness)?
        .warnings(&s.warnings)?;
    r.table(
        "order,value,stderr",
        s.terms
            .iter()
            .map(|t| format!("{},{:e},{:e}", t.order, t.value, t.stderr)),
    );
    Ok(r)
}

/// `start:stop:count`, inclusive of both ends.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || anyhow!("range `{s}`: expected start:stop:count");
    match parts.as_slice() {
        [one] => Ok(vec![one.trim().parse().map_err(|_| bad())?]),
        [a, b, n] => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => Err(bad()),
                1 => Ok(vec![a]),
                _ => {
                    let step = (b - a) / (n - 1) as f64;
                    Ok((0..n).map(|i| if i + 1 == n { b } else { a + i as f64 * step }).collect())
                }
            }
        }
        _ => Err(bad()),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| anyhow!("cannot parse `{t}` in `{s}`")))
        .collect()
}

fn convergence_cmd(ctx: &Ctx, c: ConvergenceCmd) -> Result<Report> {
    match c {
        ConvergenceCmd::Check {
            model,
            criterion,
            zhat,
            a,
            big_a,
            b,
            c,
        } => {
            let p = ctx.default_params(&model)?;
            let crit = Criterion::parse(&criterion)?;
            let zhat = match zhat {
                Some(z) => z,
                None => {
                    let opts = SeriesOptions {
                        coefficients: coefficient_options(ctx, None, None)?,
                        ..Default::default()
                    };
                    expansion::series_zhat(&p, &opts)?.0.value
                }
            };
            let (ea, e_big_a) = convergence::easy_constants(&p);
            let hs_defaults = || -> Result<(f64, f64, f64)> {
                let (b0, c0, alpha) = convergence::default_hs_constants(&p)?;
                Ok((alpha * convergence::boundary_volume(&p) * p.z_small.abs(), b0, c0))
            };
            let w = match crit {
                Criterion::ThmCol1 => convergence::check_col1(&p, zhat, a.unwrap_or(ea), big_a.unwrap_or(e_big_a))?,
                Criterion::Easy => convergence::check_easy(&p, zhat)?,
                Criterion::Kp => convergence::check_kp(&p, a.unwrap_or(ea), big_a.unwrap_or(e_big_a))?,
                Criterion::KpBound => convergence::check_kp_bound(&p),
                Criterion::Hsper | Criterion::Hs => {
                    let (a, b, c) = match (a, b, c) {
                        (Some(a), Some(b), Some(c)) => (a, b, c),
                        _ => {
                            let (a0, b0, c0) = hs_defaults()?;
                            (a.unwrap_or(a0), b.unwrap_or(b0), c.unwrap_or(c0))
                        }
                    };
                    convergence::check_hs(&p, zhat, a, b, c, crit == Criterion::Hs)?
                }
                Criterion::SuffHs => convergence::witness_search_hs(&p, zhat)?,
            };
            let mut r = Report::new("convergence check");
            r.set("params", p)?.set("zhat", zhat)?.set("witness", &w)?;
            r.violated = !w.satisfied;
            Ok(r)
        }
        ConvergenceCmd::Sweep {
            zr,
            big,
            small,
            criteria,
        } => {
            let zrs = parse_range(&zr)?;
            let bigs = parse_list(&big)?;
            let smalls = parse_list(&small)?;
            let radii: Vec<(f64, f64)> = bigs
                .iter()
                .flat_map(|&b| smalls.iter().map(move |&s| (b, s)))
                .collect();
            let mut with_pair = false;
            for c in criteria.split(',').map(str::trim) {
                match c {
                    "easy" | "kp" => {}
                    "pair" => with_pair = true,
                    other => bail!("unknown sweep criterion `{other}` (easy, kp, pair)"),
                }
            }
            let rows = convergence::region_sweep(&zrs, &radii, with_pair)?;
            let header = if with_pair {
                format!("{},zhat_pair", convergence::SWEEP_HEADER)
            } else {
                convergence::SWEEP_HEADER.to_string()
            };
            let mut r = Report::new("convergence sweep");
            r.set("rows", &rows)?;
            r.table(&header, rows.iter().map(|row| row.csv()));
            Ok(r)
        }
    }
}

fn validate_cmd(ctx: &Ctx, c: ValidateCmd) -> Result<Report> {
    match c {
        ValidateCmd::All { quick, only, model } => {
            let mut vc = if quick {
                ValidationConfig::quick()
            } else {
                ValidationConfig::default()
            };
            vc.desk = ctx.params(&model, vc.desk)?;
            vc.seed = ctx.seed(vc.seed)?;
            vc.samples = ctx.samples(vc.samples)?;
            if let Some(l) = ctx.cfg.pick_opt(model.side, "L")? {
                vc.oracle.space = BoxSpec::periodic(l)?;
                vc.desk.space = None;
            }
            let ids: Vec<u32> = match only {
                Some(s) => s
                    .split(',')
                    .map(|t| t.trim().parse::<u32>().map_err(|_| anyhow!("bad criterion `{t}`")))
                    .collect::<Result<_>>()?,
                None => (1..=12).collect(),
            };
            let mut criteria = Vec::new();
            let mut warnings = Vec::new();
            for id in ids {
                let (rep, w) = validation::run_criterion(id, &vc);
                eprintln!("criterion {id:>2} {}: {}", rep.title, if rep.passed { "PASS" } else { "FAIL" });
                criteria.push(rep);
                warnings.extend(w);
            }
            let all_passed = criteria.iter().all(|c| c.passed);
            let mut r = Report::new("validate all");
            r.set("seed", vc.seed)?
                .set("config", vc)?
                .set("all_passed", all_passed)?
                .set("criteria", &criteria)?
                .warnings(&warnings)?;
            r.violated |= !all_passed;
            r.table(
                "id,title,passed",
                criteria.iter().map(|c| format!("{},{},{}", c.id, c.title, c.passed)),
            );
            Ok(r)
        }
        ValidateCmd::Oracle {
            model,
            n1max,
            n2max,
            streams,
            order,
            density_order,
            coeff_samples,
        } => {
            let desk = ValidationConfig::default();
            let mut p = ctx.params(&model, desk.desk)?;
            if p.model != Model::Penetrable {
                bail!("the oracle comparison covers the penetrable model");
            }
            let side = ctx.cfg.pick(model.side, "L", desk.oracle.space.side)?;
            p.space = None;
            let seed = ctx.seed(desk.seed)?;
            let ocfg = OracleConfig {
                n1_max: ctx.cfg.pick(n1max, "n1max", desk.oracle.n1_max)?,
                n2_max: ctx.cfg.pick(n2max, "n2max", desk.oracle.n2_max)?,
                samples: ctx.samples(desk.oracle.samples)?,
                solvent_streams: ctx.cfg.pick(streams, "streams", desk.oracle.solvent_streams)?,
                seed,
                ..OracleConfig::for_box(BoxSpec::periodic(side)?)
            };
            let sopts = SeriesOptions {
                order: ctx.cfg.pick(order, "order", desk.series_order)?,
                coefficients: CoefficientOptions {
                    samples: ctx.cfg.pick(coeff_samples, "coeff_samples", desk.series_samples)?,
                    seed: derive_seed(seed, 800),
                    cloud: CloudTruncation::default(),
                },
                strict: false,
            };
            let dorder = ctx.cfg.pick(density_order, "density_order", desk.density_order)?;
            let v = validation::validate_oracle(&p, &ocfg, &sopts, dorder)?;
            let mut r = Report::new("validate oracle");
            r.set("seed", seed)?
                .set("params", v.params)?
                .set("oracle", v.oracle)?
                .set("checks", &v.checks)?
                .set("passed", v.passed)?
                .warnings(&v.warnings)?;
            r.violated |= !v.passed;
            r.table(
                "name,oracle,oracle_stderr,series,series_stderr,z_score,passed",
                v.checks.iter().map(|c| {
                    format!(
                        "\"{}\",{:e},{:e},{:e},{:e},{:.4},{}",
                        c.name, c.oracle.value, c.oracle.stderr, c.series.value, c.series.stderr, c.z_score, c.passed
                    )
                }),
            );
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:0.1:11").unwrap().len(), 11);
        assert_eq!(parse_range("0.5").unwrap(), vec![0.5]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        let r = parse_range("0:1:3").unwrap();
        assert_eq!(r, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn simplex_is_regular() {
        let xs = regular_simplex(4, 2.1).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!((geometry::dist2(&xs[i], &xs[j]).sqrt() - 2.1).abs() < 1e-12);
            }
        }
        assert!(regular_simplex(5, 1.0).is_err());
    }

    #[test]
    fn balls_parse() {
        let b = parse_balls("0,0,0,1; 1,0,0,1").unwrap();
        assert_eq!(b.len(), 2);
        assert!(parse_balls("0,0,1").is_err());
    }
}
