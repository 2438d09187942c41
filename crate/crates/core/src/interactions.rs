//! Mayer functions, cloud interactions, Ursell functions and the effective
//! Boltzmann weights `ψ`, `ψ^T` for the two sphere mixtures.
//!
//! Both models are hard-core, so every Mayer function and every `ζ` is an
//! indicator with values in `{-1, 0}`; `e^{-∞}` is an exact zero.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result, Warning};
use crate::geometry::{self, BoxSpec, Boundary, Point};
use crate::graphs::{self, iter_bits, LabeledGraph, DEFAULT_M_MAX, DEFAULT_N_MAX};
use crate::mc::{self, MCEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Small spheres ideal among themselves, hard toward large spheres.
    Penetrable,
    /// Both species mutually hard.
    Colloid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Large,
    Small,
}

/// Radii, activities, model and (optionally) a finite box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    #[serde(rename = "R")]
    pub big_radius: f64,
    #[serde(rename = "r")]
    pub small_radius: f64,
    #[serde(rename = "zR")]
    pub z_big: f64,
    #[serde(rename = "zr")]
    pub z_small: f64,
    pub model: Model,
    /// `None` is all of space.
    #[serde(rename = "box")]
    pub space: Option<BoxSpec>,
}

impl MixtureParams {
    pub fn new(big: f64, small: f64, z_big: f64, z_small: f64, model: Model) -> Result<Self> {
        let p = MixtureParams {
            big_radius: big,
            small_radius: small,
            z_big,
            z_small,
            model,
            space: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn penetrable(big: f64, small: f64, z_big: f64, z_small: f64) -> Result<Self> {
        Self::new(big, small, z_big, z_small, Model::Penetrable)
    }

    pub fn colloid(big: f64, small: f64, z_big: f64, z_small: f64) -> Result<Self> {
        Self::new(big, small, z_big, z_small, Model::Colloid)
    }

    pub fn with_box(mut self, space: BoxSpec) -> Result<Self> {
        self.space = Some(space);
        self.validate()?;
        Ok(self)
    }

    pub fn with_activities(mut self, z_big: f64, z_small: f64) -> Result<Self> {
        self.z_big = z_big;
        self.z_small = z_small;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (big, small) = (self.big_radius, self.small_radius);
        if !(big > small && small > 0.0 && big.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radii must satisfy R > r > 0, got R = {big}, r = {small}"
            )));
        }
        if !self.z_big.is_finite() || !self.z_small.is_finite() {
            return Err(Error::InvalidParameter("activities must be finite".into()));
        }
        if let Some(b) = self.space {
            if b.boundary == Boundary::Periodic && b.side <= 2.0 * (big + small) {
                return Err(Error::InvalidParameter(format!(
                    "periodic box side {} must exceed 2(R + r) = {}",
                    b.side,
                    2.0 * (big + small)
                )));
            }
        }
        Ok(())
    }

    /// Distance respecting periodic boundaries when a periodic box is set.
    #[inline]
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match &self.space {
            Some(bx) => bx.distance(a, b),
            None => geometry::dist2(a, b).sqrt(),
        }
    }

    /// `R + r`, the large/small exclusion distance.
    pub fn exclusion_radius(&self) -> f64 {
        self.big_radius + self.small_radius
    }

    /// `|B(0, R + r)|`.
    pub fn exclusion_volume(&self) -> f64 {
        ball3(self.exclusion_radius())
    }

    /// `|B(0, R + r) \ B(0, R - r)|`.
    pub fn corona_volume(&self) -> f64 {
        ball3(self.big_radius + self.small_radius) - ball3(self.big_radius - self.small_radius)
    }

    /// Hard-core contact distance for a pair of species, or `None` if they do not interact.
    pub fn contact(&self, a: Species, b: Species) -> Option<f64> {
        match (a, b) {
            (Species::Large, Species::Large) => Some(2.0 * self.big_radius),
            (Species::Small, Species::Small) => match self.model {
                Model::Penetrable => None,
                Model::Colloid => Some(2.0 * self.small_radius),
            },
            _ => Some(self.exclusion_radius()),
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            Model::Penetrable => "penetrable",
            Model::Colloid => "colloid",
        }
    }

    pub(crate) fn require(&self, model: Model) -> Result<()> {
        if self.model == model {
            Ok(())
        } else {
            Err(Error::ModelMismatch {
                expected: match model {
                    Model::Penetrable => "penetrable",
                    Model::Colloid => "colloid",
                },
            })
        }
    }
}

#[inline]
pub(crate) fn ball3(radius: f64) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * radius.powi(3)
}

/// A cloud `(y_1, ..., y_k)` of small-sphere centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cloud {
    pub points: Vec<Point>,
}

impl Cloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("a cloud needs at least one point".into()));
        }
        Ok(Cloud { points })
    }

    /// True when the overlap graph at distance `2r` is connected.
    pub fn is_overlap_connected(&self, params: &MixtureParams) -> bool {
        let n = self.points.len();
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !reached[j]
                    && params.distance(&self.points[i], &self.points[j]) < 2.0 * params.small_radius
                {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        reached.into_iter().all(|b| b)
    }
}

/// Large-sphere centers together with clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub large: Vec<Point>,
    pub clouds: Vec<Vec<Point>>,
}

/// `f = e^{-v} - 1`: `-1` on hard-core overlap, else `0`.
pub fn mayer_f(p1: (&Point, Species), p2: (&Point, Species), params: &MixtureParams) -> f64 {
    match params.contact(p1.1, p2.1) {
        Some(c) if params.distance(p1.0, p2.0) < c => -1.0,
        _ => 0.0,
    }
}

#[inline]
fn f_large(a: &Point, b: &Point, params: &MixtureParams) -> f64 {
    if params.distance(a, b) < 2.0 * params.big_radius {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn f_small(a: &Point, b: &Point, params: &MixtureParams) -> f64 {
    match params.model {
        Model::Penetrable => 0.0,
        Model::Colloid => {
            if params.distance(a, b) < 2.0 * params.small_radius {
                -1.0
            } else {
                0.0
            }
        }
    }
}

/// `ζ(x, Y) = Π_j (1 + f(x, y_j)) - 1`: `-1` iff some `y_j` lies within `R + r` of `x`.
pub fn zeta(x: &Point, cloud: &[Point], params: &MixtureParams) -> f64 {
    let reach = params.exclusion_radius();
    if cloud.iter().any(|y| params.distance(x, y) < reach) {
        -1.0
    } else {
        0.0
    }
}

/// Corona indicator `ζ̃(x, Y)`: `-1` iff some `y_j` has `R - r < |x - y_j| < R + r`.
pub fn zeta_tilde(x: &Point, cloud: &[Point], params: &MixtureParams) -> f64 {
    let (lo, hi) = (
        params.big_radius - params.small_radius,
        params.exclusion_radius(),
    );
    if cloud.iter().any(|y| {
        let d = params.distance(x, y);
        d > lo && d < hi
    }) {
        -1.0
    } else {
        0.0
    }
}

/// Connected part of `Π_{i<j ∈ S} (1 + f_ij)` by subset recursion.
///
/// `Ψ(S) = Σ_{T ∋ min S} C(T) Ψ(S \ T)` over the blocks `T` containing the
/// smallest vertex, solved for `C(S)`. Cost is `O(3^n)` for arbitrary weights.
pub fn ursell_from_weights(n: usize, f: &dyn Fn(usize, usize) -> f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("Ursell function needs n >= 1".into()));
    }
    if n > DEFAULT_N_MAX {
        return Err(Error::EnumerationBound {
            size: n,
            bound: DEFAULT_N_MAX,
        });
    }
    let full = (1usize << n) - 1;
    let mut psi = vec![1.0; 1 << n];
    for s in 1..=full {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        let mut v = psi[rest];
        for j in iter_bits(rest as u64) {
            v *= 1.0 + f(low, j);
        }
        psi[s] = v;
    }
    let mut conn = vec![0.0; 1 << n];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        // proper sub-blocks T = low ∪ U with U ⊊ rest
        let mut c = psi[s];
        let mut u = rest;
        while u != 0 {
            u = (u - 1) & rest;
            let t = low | u;
            c -= conn[t] * psi[s ^ t];
        }
        conn[s] = c;
    }
    Ok(conn[full])
}

/// Direct sum over connected graphs; the reference for [`ursell_from_weights`].
pub fn ursell_by_enumeration(n: usize, f: &dyn Fn(usize, usize) -> f64) -> Result<f64> {
    Ok(graphs::enumerate_connected(n, DEFAULT_N_MAX)?
        .iter()
        .map(|g| g.edges().iter().map(|e| f(e.i, e.j)).product::<f64>())
        .sum())
}

/// `φ^T(y_1, ..., y_n)` for small-sphere points.
pub fn ursell_phi_t(points: &[Point], params: &MixtureParams) -> Result<f64> {
    if params.model == Model::Penetrable {
        // f_ss vanishes identically
        return match points.len() {
            0 => Err(Error::InvalidParameter("Ursell function needs n >= 1".into())),
            1 => Ok(1.0),
            n if n > DEFAULT_N_MAX => Err(Error::EnumerationBound {
                size: n,
                bound: DEFAULT_N_MAX,
            }),
            _ => Ok(0.0),
        };
    }
    ursell_from_weights(points.len(), &|i, j| f_small(&points[i], &points[j], params))
}

/// Precomputed sums over the star/cloud graph class `𝒞*_{m,r}`.
///
/// Slot `A` of `table` holds `Σ (-1)^{#E(γ)}` over graphs whose edge set lies
/// in the allowed-edge subset `A`, which is `φ*^T` when every weight is an
/// indicator in `{-1, 0}`.
pub struct StarTable {
    pub m: usize,
    pub r: usize,
    /// Edge indices (on `m + r` vertices) of the allowed edges, in bit order.
    pub slots: Vec<usize>,
    pub graphs: Vec<LabeledGraph>,
    table: Vec<f64>,
}

impl StarTable {
    fn build(m: usize, r: usize) -> Result<StarTable> {
        let graphs = graphs::enumerate_bipartite_star(m, r, true, false, DEFAULT_N_MAX)?;
        let mut slots = Vec::new();
        for j in 1..m + r {
            for i in 0..j.min(m) {
                slots.push(graphs::edge_index(i, j));
            }
        }
        let bits = slots.len();
        let mut table = vec![0.0; 1 << bits];
        for g in &graphs {
            let mut local = 0usize;
            for (b, &idx) in slots.iter().enumerate() {
                if g.graph.mask & (1 << idx) != 0 {
                    local |= 1 << b;
                }
            }
            table[local] = if g.graph.num_edges() % 2 == 0 { 1.0 } else { -1.0 };
        }
        for b in 0..bits {
            for s in 0..table.len() {
                if s & (1 << b) != 0 {
                    table[s] += table[s ^ (1 << b)];
                }
            }
        }
        Ok(StarTable {
            m,
            r,
            slots,
            graphs: graphs.into_iter().map(|g| g.graph).collect(),
            table,
        })
    }

    /// Shared table for `(m, r)`, built on first use.
    pub fn get(m: usize, r: usize) -> Result<Arc<StarTable>> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<StarTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("cache lock").get(&(m, r)) {
            return Ok(t.clone());
        }
        let t = Arc::new(StarTable::build(m, r)?);
        cache
            .lock()
            .expect("cache lock")
            .insert((m, r), t.clone());
        Ok(t)
    }

    /// `φ*^T` from indicator weights: `active(i, j)` is true when the weight is `-1`.
    pub fn eval_indicator(&self, active: &dyn Fn(usize, usize) -> bool) -> f64 {
        let mut a = 0usize;
        for (b, &idx) in self.slots.iter().enumerate() {
            let e = graphs::Edge::from_index(idx);
            if active(e.i, e.j) {
                a |= 1 << b;
            }
        }
        self.table[a]
    }

    /// `φ*^T` for arbitrary edge weights by direct summation.
    pub fn eval_weights(&self, w: &dyn Fn(usize, usize) -> f64) -> f64 {
        self.graphs
            .iter()
            .map(|g| g.edges().iter().map(|e| w(e.i, e.j)).product::<f64>())
            .sum()
    }
}

/// `φ*^T(x_1..x_m; Y_1..Y_r)`: star–star weights `f`, star–cloud weights `ζ`.
pub fn phi_star_t(config: &Configuration, params: &MixtureParams) -> Result<f64> {
    let m = config.large.len();
    let r = config.clouds.len();
    if m == 0 {
        return Err(Error::InvalidParameter("φ*^T needs at least one star".into()));
    }
    let table = StarTable::get(m, r)?;
    Ok(table.eval_indicator(&|i, j| star_weight(config, params, i, j) != 0.0))
}

/// Edge weight between vertex `i < j` of the star/cloud graph.
fn star_weight(config: &Configuration, params: &MixtureParams, i: usize, j: usize) -> f64 {
    let m = config.large.len();
    if j < m {
        f_large(&config.large[i], &config.large[j], params)
    } else {
        zeta(&config.large[i], &config.clouds[j - m], params)
    }
}

/// Right side of the tree-graph inequality: `Σ_τ Π|f| Π|ζ̃|` over trees
/// without cloud–cloud edges.
pub fn tree_majorant(config: &Configuration, params: &MixtureParams) -> Result<f64> {
    let m = config.large.len();
    let r = config.clouds.len();
    let trees = tree_class(m, r)?;
    Ok(trees
        .iter()
        .map(|t| {
            t.edges()
                .iter()
                .map(|e| {
                    if e.j < m {
                        f_large(&config.large[e.i], &config.large[e.j], params).abs()
                    } else {
                        zeta_tilde(&config.large[e.i], &config.clouds[e.j - m], params).abs()
                    }
                })
                .product::<f64>()
        })
        .sum())
}

fn tree_class(m: usize, r: usize) -> Result<Arc<Vec<LabeledGraph>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<LabeledGraph>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("cache lock").get(&(m, r)) {
        return Ok(t.clone());
    }
    let t = Arc::new(graphs::majorant_trees(m, r, DEFAULT_N_MAX)?);
    cache.lock().expect("cache lock").insert((m, r), t.clone());
    Ok(t)
}

/// Whether the two corona-substitution inequalities hold for stars `xs` and one cloud.
///
/// Returns `(first, second)`; the second takes `xs[0]` as the distinguished star.
pub fn tilde_zeta_conditions(xs: &[Point], cloud: &[Point], params: &MixtureParams) -> (bool, bool) {
    let k = xs.len();
    let mut hard = 1.0;
    for i in 0..k {
        for j in i + 1..k {
            hard *= 1.0 + f_large(&xs[i], &xs[j], params);
        }
    }
    let z: Vec<f64> = xs.iter().map(|x| zeta(x, cloud, params).abs()).collect();
    let zt: Vec<f64> = xs.iter().map(|x| zeta_tilde(x, cloud, params).abs()).collect();
    let first = hard * z.iter().product::<f64>() <= hard * zt.iter().product::<f64>();
    let others: f64 = xs[1..]
        .iter()
        .map(|x| 1.0 + zeta(x, cloud, params))
        .product();
    let second = z[0] * hard * (others - 1.0).abs() <= zt[0] * hard;
    (first, second)
}

/// Supplies the effective multi-body potentials `W_{#J}`.
pub trait WProvider: Sync {
    /// `W_{#J}(x_J)` for `#J ≥ 2`.
    fn w(&self, xs: &[Point]) -> Result<f64>;

    /// `d W_{#J} / d z_r`, when available.
    fn dw_dzr(&self, _xs: &[Point]) -> Result<f64> {
        Err(Error::Precondition(
            "this potential provider has no activity derivative".into(),
        ))
    }
}

/// `ψ(x_1..x_m) = Π(1 + f) exp(-Σ_J W_{#J})`.
pub fn psi(points: &[Point], params: &MixtureParams, w: &dyn WProvider) -> Result<f64> {
    let m = points.len();
    if m == 0 {
        return Err(Error::InvalidParameter("ψ needs at least one point".into()));
    }
    for i in 0..m {
        for j in i + 1..m {
            if f_large(&points[i], &points[j], params) != 0.0 {
                return Ok(0.0);
            }
        }
    }
    let mut total_w = 0.0;
    for s in graphs::hyperedge_candidates(m) {
        let xs: Vec<Point> = iter_bits(s as u64).map(|i| points[i]).collect();
        total_w += w.w(&xs)?;
    }
    Ok((-total_w).exp())
}

/// Evaluation route for `ψ^T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PsiTMode {
    /// Exact sum over connected hypergraphs.
    Hypergraph,
    /// Sum over cloud counts of `ν`-integrals of `φ*^T`, by Monte Carlo.
    CloudSeries(CloudTruncation),
}

/// Truncation of cloud expansions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudTruncation {
    /// Largest number of clouds `r`.
    pub r_max: usize,
    /// Largest number of small spheres in a single cloud.
    pub n_max: usize,
    pub samples: u64,
    pub seed: u64,
}

impl Default for CloudTruncation {
    fn default() -> Self {
        CloudTruncation {
            r_max: 3,
            n_max: 2,
            samples: 200_000,
            seed: 1,
        }
    }
}

/// Connected hypergraphs on `m` vertices as selections of hyperedge candidates.
pub(crate) struct HyperTable {
    pub candidates: Vec<u32>,
    pub selections: Vec<u64>,
}

impl HyperTable {
    pub fn get(m: usize) -> Result<Arc<HyperTable>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HyperTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("cache lock").get(&m) {
            return Ok(t.clone());
        }
        let candidates = graphs::hyperedge_candidates(m);
        let selections = graphs::enumerate_connected_hypergraphs(m, DEFAULT_M_MAX)?
            .iter()
            .map(|h| {
                h.hyperedges.iter().fold(0u64, |acc, (e, _)| {
                    acc | 1 << candidates.iter().position(|c| c == e).expect("candidate")
                })
            })
            .collect();
        let t = Arc::new(HyperTable {
            candidates,
            selections,
        });
        cache.lock().expect("cache lock").insert(m, t.clone());
        Ok(t)
    }

    pub fn sum(&self, weights: &[f64]) -> f64 {
        self.selections
            .iter()
            .map(|&sel| iter_bits(sel).map(|b| weights[b]).product::<f64>())
            .sum()
    }

    /// `Σ_h Σ_{root ∈ h} dweight(root) Π_{other} weight`.
    pub fn rooted_sum(&self, weights: &[f64], dweights: &[f64]) -> f64 {
        self.selections
            .iter()
            .map(|&sel| {
                iter_bits(sel)
                    .map(|root| {
                        iter_bits(sel)
                            .map(|b| if b == root { dweights[b] } else { weights[b] })
                            .product::<f64>()
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Hyperedge weights `e^{-v-W_2} - 1` (pairs) and `e^{-W_J} - 1` (larger sets).
pub(crate) fn hyperedge_weights(
    points: &[Point],
    params: &MixtureParams,
    w: &dyn WProvider,
    candidates: &[u32],
) -> Result<Vec<f64>> {
    candidates
        .iter()
        .map(|&s| {
            let xs: Vec<Point> = iter_bits(s as u64).map(|i| points[i]).collect();
            if xs.len() == 2 && f_large(&xs[0], &xs[1], params) != 0.0 {
                return Ok(-1.0);
            }
            Ok((-w.w(&xs)?).exp_m1())
        })
        .collect()
}

/// `ψ^T` as an exact sum over connected hypergraphs.
pub fn psi_t_hypergraph(points: &[Point], params: &MixtureParams, w: &dyn WProvider) -> Result<f64> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidParameter("ψ^T needs m >= 2".into()));
    }
    let table = HyperTable::get(m)?;
    let weights = hyperedge_weights(points, params, w, &table.candidates)?;
    Ok(table.sum(&weights))
}

/// `ψ^T` by inverting the set-partition identity with `ψ` on every subset.
pub fn psi_t_by_partitions(points: &[Point], params: &MixtureParams, w: &dyn WProvider) -> Result<f64> {
    let m = points.len();
    if m == 0 || m > DEFAULT_N_MAX {
        return Err(Error::EnumerationBound {
            size: m,
            bound: DEFAULT_N_MAX,
        });
    }
    let full = (1usize << m) - 1;
    let mut psi_sub = vec![1.0; 1 << m];
    for s in 1..=full {
        let xs: Vec<Point> = iter_bits(s as u64).map(|i| points[i]).collect();
        psi_sub[s] = psi(&xs, params, w)?;
    }
    let mut conn = vec![0.0; 1 << m];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut c = psi_sub[s];
        let mut u = rest;
        while u != 0 {
            u = (u - 1) & rest;
            let t = low | u;
            c -= conn[t] * psi_sub[s ^ t];
        }
        conn[s] = c;
    }
    Ok(conn[full])
}

/// Weighted sampler for the cloud measure `ν`.
///
/// Clouds are grown around anchor points: a size `k` is drawn with
/// probability `p_k`, the first point uniformly in a ball of radius
/// `R + r + 2r(k-1)` around a random anchor, and every further point uniformly
/// within `2r` of a random earlier point. The returned weight makes
/// `E[h(Y) · weight] = ∫ h dν` for every `h` that vanishes unless the cloud
/// comes within `R + r` of some anchor.
#[derive(Debug, Clone)]
pub struct CloudSampler {
    params: MixtureParams,
    probs: Vec<f64>,
}

impl CloudSampler {
    pub fn new(params: &MixtureParams, n_max: usize) -> Result<Self> {
        if n_max == 0 || n_max > DEFAULT_N_MAX {
            return Err(Error::InvalidParameter(format!(
                "cloud size bound must be in 1..={DEFAULT_N_MAX}, got {n_max}"
            )));
        }
        let n_max = match params.model {
            Model::Penetrable => 1,
            Model::Colloid => n_max,
        };
        let q = (params.z_small.abs() * ball3(2.0 * params.small_radius)).max(0.1);
        let raw: Vec<f64> = (0..n_max).map(|k| q.powi(k as i32)).collect();
        let total: f64 = raw.iter().sum();
        Ok(CloudSampler {
            params: *params,
            probs: raw.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.probs.len()
    }

    fn first_reach(&self, k: usize) -> f64 {
        self.params.exclusion_radius() + 2.0 * self.params.small_radius * (k as f64 - 1.0)
    }

    /// A cloud of exactly `k` points with weight `z_r^k φ^T(Y) / (N(Y) q_k(Y))`.
    pub fn sample_sized<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        anchors: &[Point],
        k: usize,
    ) -> (Vec<Point>, f64) {
        let p = &self.params;
        let reach = self.first_reach(k);
        let link = 2.0 * p.small_radius;
        let a = anchors[rng.gen_range(0..anchors.len())];
        let mut ys = Vec::with_capacity(k);
        ys.push(geometry::sample_in_ball(rng, &a, reach));
        for j in 1..k {
            let parent = ys[rng.gen_range(0..j)];
            ys.push(geometry::sample_in_ball(rng, &parent, link));
        }
        let phi = match ursell_phi_t(&ys, p) {
            Ok(v) => v,
            Err(_) => 0.0,
        };
        if phi == 0.0 || p.z_small == 0.0 {
            return (ys, 0.0);
        }
        // proposal density of this ordered tuple
        let first = anchors
            .iter()
            .filter(|x| p.distance(x, &ys[0]) < reach)
            .count() as f64
            / anchors.len() as f64
            / ball3(reach);
        let mut q = first;
        for j in 1..k {
            let near = (0..j).filter(|&i| p.distance(&ys[i], &ys[j]) < link).count() as f64;
            q *= near / j as f64 / ball3(link);
        }
        let n_orders = self.growable_orderings(&ys, anchors, reach);
        let weight = p.z_small.powi(k as i32) * phi / (n_orders * q);
        (ys, weight)
    }

    /// Orderings of `ys` the proposal can produce.
    fn growable_orderings(&self, ys: &[Point], anchors: &[Point], reach: f64) -> f64 {
        let k = ys.len();
        if k == 1 {
            return 1.0;
        }
        let p = &self.params;
        let link = 2.0 * p.small_radius;
        let mut adj = vec![0usize; k];
        for i in 0..k {
            for j in 0..k {
                if i != j && p.distance(&ys[i], &ys[j]) < link {
                    adj[i] |= 1 << j;
                }
            }
        }
        let mut count = vec![0.0; 1 << k];
        for (i, y) in ys.iter().enumerate() {
            if anchors.iter().any(|x| p.distance(x, y) < reach) {
                count[1 << i] = 1.0;
            }
        }
        for s in 1usize..1 << k {
            if s.count_ones() < 2 {
                continue;
            }
            let mut c = 0.0;
            for v in iter_bits(s as u64) {
                let prev = s ^ (1 << v);
                if adj[v] & prev != 0 {
                    c += count[prev];
                }
            }
            count[s] = c;
        }
        count[(1 << k) - 1]
    }

    /// A cloud of random size with its `ν` weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, anchors: &[Point]) -> (Vec<Point>, f64) {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut k = self.probs.len();
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                k = i + 1;
                break;
            }
        }
        let (ys, w) = self.sample_sized(rng, anchors, k);
        (ys, w / self.probs[k - 1])
    }
}

/// `ψ^T` as `Σ_{r ≤ r_max} (1/r!) ∫ φ*^T dν^r`, each `r ≥ 1` term by Monte Carlo.
pub fn psi_t_cloud_series(
    points: &[Point],
    params: &MixtureParams,
    trunc: &CloudTruncation,
) -> Result<(MCEstimate, Vec<MCEstimate>, Vec<Warning>)> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidParameter("ψ^T needs m >= 2".into()));
    }
    let sampler = CloudSampler::new(params, trunc.n_max)?;
    let base = Configuration {
        large: points.to_vec(),
        clouds: vec![],
    };
    let mut terms = vec![MCEstimate::exact(phi_star_t(&base, params)?)];
    for r in 1..=trunc.r_max {
        let table = StarTable::get(m, r)?;
        let fact: f64 = (1..=r).map(|i| i as f64).product();
        let seed = mc::derive_seed(trunc.seed, r as u64);
        let est = mc::sample_mean(trunc.samples, seed, |rng| {
            let mut weight = 1.0;
            let mut clouds = Vec::with_capacity(r);
            for _ in 0..r {
                let (ys, w) = sampler.sample(rng, points);
                if w == 0.0 {
                    return 0.0;
                }
                weight *= w;
                clouds.push(ys);
            }
            let cfg = Configuration {
                large: points.to_vec(),
                clouds,
            };
            let phi = table.eval_indicator(&|i, j| star_weight(&cfg, params, i, j) != 0.0);
            weight * phi / fact
        });
        terms.push(est);
    }
    let value: f64 = terms.iter().map(|t| t.value).sum();
    let stderr = terms.iter().map(|t| t.stderr.powi(2)).sum::<f64>().sqrt();
    let mut warnings = Vec::new();
    if trunc.r_max >= 1 {
        let last = terms[trunc.r_max].value;
        if last.abs() > 2.0 * terms[trunc.r_max].stderr {
            warnings.extend(Warning::tail_check("psi_t cloud series", last, value, 0.1));
        }
    }
    Ok((
        MCEstimate {
            value,
            stderr,
            samples: trunc.samples,
            seed: trunc.seed,
        },
        terms,
        warnings,
    ))
}

/// One unbiased draw of the cloud series for `ψ^T`, one cloud tuple per order.
pub(crate) fn psi_t_cloud_draw<R: Rng + ?Sized>(
    points: &[Point],
    params: &MixtureParams,
    sampler: &CloudSampler,
    r_max: usize,
    rng: &mut R,
) -> Result<f64> {
    let m = points.len();
    let base = Configuration {
        large: points.to_vec(),
        clouds: vec![],
    };
    let mut total = phi_star_t(&base, params)?;
    let mut fact = 1.0;
    for r in 1..=r_max {
        fact *= r as f64;
        let mut weight = 1.0;
        let mut clouds = Vec::with_capacity(r);
        for _ in 0..r {
            let (ys, w) = sampler.sample(rng, points);
            weight *= w;
            clouds.push(ys);
        }
        if weight == 0.0 {
            continue;
        }
        let table = StarTable::get(m, r)?;
        let cfg = Configuration {
            large: points.to_vec(),
            clouds,
        };
        total += weight * table.eval_indicator(&|i, j| star_weight(&cfg, params, i, j) != 0.0) / fact;
    }
    Ok(total)
}

/// `ψ^T` in either mode, reported as an estimate (exact modes carry zero error).
pub fn psi_t(
    points: &[Point],
    params: &MixtureParams,
    w: &dyn WProvider,
    mode: PsiTMode,
) -> Result<(MCEstimate, Vec<Warning>)> {
    match mode {
        PsiTMode::Hypergraph => Ok((
            MCEstimate::exact(psi_t_hypergraph(points, params, w)?),
            vec![],
        )),
        PsiTMode::CloudSeries(t) => {
            let (est, _, warn) = psi_t_cloud_series(points, params, &t)?;
            Ok((est, warn))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pen() -> MixtureParams {
        MixtureParams::penetrable(1.0, 0.1, 1.0, 0.1).unwrap()
    }

    struct Lens(MixtureParams);
    impl WProvider for Lens {
        fn w(&self, xs: &[Point]) -> Result<f64> {
            let p = &self.0;
            let balls: Vec<_> = xs
                .iter()
                .map(|c| geometry::BallSpec::new(*c, p.exclusion_radius()).unwrap())
                .collect();
            let v = geometry::intersection_volume_quadrature(&balls)?;
            let sign = if xs.len() % 2 == 0 { -1.0 } else { 1.0 };
            Ok(sign * p.z_small * v)
        }
    }

    #[test]
    fn mayer_examples() {
        let p = pen();
        let o = [0.0; 3];
        assert_eq!(mayer_f((&o, Species::Large), (&[1.5, 0.0, 0.0], Species::Large), &p), -1.0);
        assert_eq!(mayer_f((&o, Species::Small), (&[0.01, 0.0, 0.0], Species::Small), &p), 0.0);
        assert_eq!(mayer_f((&o, Species::Large), (&[1.1, 0.0, 0.0], Species::Small), &p), 0.0);
        let c = MixtureParams::colloid(1.0, 0.1, 1.0, 0.1).unwrap();
        assert_eq!(mayer_f((&o, Species::Small), (&[0.15, 0.0, 0.0], Species::Small), &c), -1.0);
    }

    #[test]
    fn zeta_examples() {
        let p = pen();
        let o = [0.0; 3];
        assert_eq!(zeta(&o, &[[1.0, 0.0, 0.0]], &p), -1.0);
        let far = [[1.2, 0.0, 0.0], [0.0, 1.3, 0.0], [0.0, 0.0, -1.1]];
        assert_eq!(zeta(&o, &far, &p), 0.0);
        assert_eq!(zeta_tilde(&o, &[[1.0, 0.0, 0.0]], &p), -1.0);
        assert_eq!(zeta_tilde(&o, &[[0.8, 0.0, 0.0]], &p), 0.0);
        assert_eq!(zeta(&o, &[[0.8, 0.0, 0.0]], &p), -1.0);
    }

    #[test]
    fn ursell_examples() {
        let c = MixtureParams::colloid(1.0, 0.1, 1.0, 0.1).unwrap();
        assert_eq!(ursell_phi_t(&[[0.0; 3]], &c).unwrap(), 1.0);
        let two = [[0.0; 3], [0.1, 0.0, 0.0]];
        assert_eq!(ursell_phi_t(&two, &c).unwrap(), -1.0);
        let three = [[0.0; 3], [0.1, 0.0, 0.0], [0.05, 0.05, 0.0]];
        assert_eq!(ursell_phi_t(&three, &c).unwrap(), 2.0);
        let f = |i: usize, j: usize| -0.1 * (i + 2 * j) as f64;
        for n in 1..=5 {
            let a = ursell_from_weights(n, &f).unwrap();
            let b = ursell_by_enumeration(n, &f).unwrap();
            assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn phi_star_examples() {
        let p = pen();
        let overlap = Configuration {
            large: vec![[0.0; 3], [1.0, 0.0, 0.0]],
            clouds: vec![],
        };
        assert_eq!(phi_star_t(&overlap, &p).unwrap(), -1.0);
        let shared = Configuration {
            large: vec![[0.0; 3], [2.0, 0.0, 0.0]],
            clouds: vec![vec![[1.0, 0.0, 0.0]]],
        };
        assert_eq!(phi_star_t(&shared, &p).unwrap(), 1.0);
        let lonely = Configuration {
            large: vec![[0.0; 3]],
            clouds: vec![vec![[1.0, 0.0, 0.0]]],
        };
        assert_eq!(phi_star_t(&lonely, &p).unwrap(), 0.0);
    }

    #[test]
    fn table_matches_direct_sum() {
        let t = StarTable::get(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let act: Vec<bool> = (0..21).map(|_| rng.gen_bool(0.5)).collect();
            let a = |i: usize, j: usize| act[graphs::edge_index(i, j)];
            let w = |i: usize, j: usize| if a(i, j) { -1.0 } else { 0.0 };
            assert_eq!(t.eval_indicator(&a), t.eval_weights(&w));
        }
    }

    #[test]
    fn psi_examples() {
        let p = pen();
        let w = Lens(p);
        assert_eq!(psi(&[[0.0; 3]], &p, &w).unwrap(), 1.0);
        assert_eq!(psi(&[[0.0; 3], [1.0, 0.0, 0.0]], &p, &w).unwrap(), 0.0);
        assert_eq!(psi(&[[0.0; 3], [2.3, 0.0, 0.0]], &p, &w).unwrap(), 1.0);
    }

    #[test]
    fn psi_t_examples() {
        let p = pen();
        let w = Lens(p);
        let v = psi_t_hypergraph(&[[0.0; 3], [1.5, 0.0, 0.0]], &p, &w).unwrap();
        assert_eq!(v, -1.0);
        let v = psi_t_hypergraph(&[[0.0; 3], [2.0, 0.0, 0.0]], &p, &w).unwrap();
        assert!((v - 0.0067245734).abs() < 1e-9, "{v}");
        let v = psi_t_hypergraph(&[[0.0; 3], [2.25, 0.0, 0.0]], &p, &w).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn partition_inversion_matches_hypergraphs() {
        let p = MixtureParams::penetrable(1.0, 0.3, 1.0, 0.8).unwrap();
        let w = Lens(p);
        let pts = [[0.0; 3], [2.1, 0.0, 0.0], [1.0, 1.9, 0.2]];
        let a = psi_t_hypergraph(&pts, &p, &w).unwrap();
        let b = psi_t_by_partitions(&pts, &p, &w).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        assert!(a != 0.0);
    }

    #[test]
    fn cloud_series_contact_pair() {
        let p = pen();
        let w = Lens(p);
        let pts = [[0.0; 3], [2.0, 0.0, 0.0]];
        let exact = psi_t_hypergraph(&pts, &p, &w).unwrap();
        let t = CloudTruncation {
            samples: 400_000,
            ..Default::default()
        };
        let (est, terms, _) = psi_t_cloud_series(&pts, &p, &t).unwrap();
        assert_eq!(terms.len(), 4);
        assert!((est.value - exact).abs() < 3.5 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn colloid_cloud_weights_reproduce_pair_integral() {
        // ∫ over size-2 clouds hitting x of φ^T z^2 / 2 = -(z^2/2) |{(y1,y2): |y1-y2|<2r, hit}|
        let c = MixtureParams::colloid(1.0, 0.2, 1.0, 0.5).unwrap();
        let s = CloudSampler::new(&c, 2).unwrap();
        let x = [0.0; 3];
        let est = mc::sample_mean(400_000, 5, |rng| {
            let (ys, w) = s.sample_sized(rng, &[x], 2);
            -zeta(&x, &ys, &c) * w
        });
        // independent estimate: y1 uniform in B(x, R+3r), y2 uniform in B(y1, 2r)
        let (big, link) = (1.0 + 3.0 * 0.2, 0.4);
        let vol = ball3(big) * ball3(link);
        let oracle = mc::sample_mean(400_000, 6, |rng| {
            let y1 = geometry::sample_in_ball(rng, &x, big);
            let y2 = geometry::sample_in_ball(rng, &y1, link);
            let hit = geometry::norm(&y1) < 1.2 || geometry::norm(&y2) < 1.2;
            if hit {
                -0.25 / 2.0 * vol
            } else {
                0.0
            }
        });
        assert!(est.agrees_with(&oracle, 4.0), "{est:?} vs {oracle:?}");
    }
}
