//! Scenario generators and the matched-budget comparison harness.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{run_bound, run_mcs, Method};
use crate::error::{input, Error, Result};
use crate::network::{Network, DETOUR_CAPACITY};
use crate::risk::{
    exact_risk_case1, exact_risk_case2, exact_risk_enumerate, gray_swan_consequences,
    most_reliable, rank_consequences, AssetRegistry, ConsequenceCache, ConsequenceModel,
    MAX_ENUMERATED_ASSETS,
};
use crate::tmcmc::{run_tmcmc_cached, TmcmcConfig};

fn uniform_betas(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..3.0)).collect()
}

/// Additive scenario: `n` assets with `β ~ U[0,3]` sorted ascending and
/// consequence equal to rank.
pub fn gen_case1(n: usize, seed: u64) -> Result<(AssetRegistry<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config("case1 needs at least one asset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut betas = uniform_betas(n, &mut rng);
    betas.sort_by(f64::total_cmp);
    let registry = AssetRegistry::from_betas(betas)?;
    let c = rank_consequences(&registry);
    Ok((registry, c))
}

/// Gray-swan scenario: the `n_relevant` most reliable of `n` assets carry
/// multiplicative consequences. Returns `(registry, relevant, c)`.
pub fn gen_case2(
    n: usize,
    n_relevant: usize,
    seed: u64,
) -> Result<(AssetRegistry<f64>, Vec<usize>, Vec<f64>)> {
    if n_relevant == 0 || n_relevant > n {
        return Err(Error::Config(format!(
            "need 1 <= relevant <= n, got {n_relevant} of {n}"
        )));
    }
    let (registry, _) = gen_case1(n, seed)?;
    let relevant = most_reliable(&registry, n_relevant);
    let c = gray_swan_consequences(&registry, &relevant);
    Ok((registry, relevant, c))
}

/// Directed `rows × cols` grid with links both ways between neighbours.
///
/// Capacities are `U[1,4]`; each link carries an asset with probability
/// `asset_fraction` (`β ~ U[0,3]`, detour capacity on failure). OD pairs
/// join opposite corners and opposite edge midpoints when they are at
/// least half the grid diameter apart.
pub fn gen_grid_network(
    rows: usize,
    cols: usize,
    asset_fraction: f64,
    seed: u64,
) -> Result<(Network<f64>, AssetRegistry<f64>)> {
    if !(0.0..=1.0).contains(&asset_fraction) {
        return Err(Error::Config(format!(
            "asset fraction must lie in [0, 1], got {asset_fraction}"
        )));
    }
    grid(rows, cols, seed, |rng, _| rng.random_bool(asset_fraction))
}

/// As [`gen_grid_network`] but with exactly `n_assets` asset links, chosen
/// uniformly. Small instances serve as enumeration test cases.
pub fn gen_random_network(
    rows: usize,
    cols: usize,
    n_assets: usize,
    seed: u64,
) -> Result<(Network<f64>, AssetRegistry<f64>)> {
    let links = 2 * (rows * cols.saturating_sub(1) + cols * rows.saturating_sub(1));
    if n_assets > links {
        return Err(Error::Config(format!(
            "{n_assets} assets requested but the grid has {links} links"
        )));
    }
    let mut chosen: Option<Vec<bool>> = None;
    grid(rows, cols, seed, |rng, k| {
        let flags = chosen.get_or_insert_with(|| {
            let mut idx: Vec<usize> = (0..links).collect();
            for i in 0..n_assets {
                let j = rng.random_range(i..links);
                idx.swap(i, j);
            }
            let mut f = vec![false; links];
            for &i in &idx[..n_assets] {
                f[i] = true;
            }
            f
        });
        flags[k]
    })
}

fn grid(
    rows: usize,
    cols: usize,
    seed: u64,
    mut is_asset: impl FnMut(&mut ChaCha8Rng, usize) -> bool,
) -> Result<(Network<f64>, AssetRegistry<f64>)> {
    if rows < 2 || cols < 2 {
        return Err(Error::Config(format!(
            "grid must be at least 2x2, got {rows}x{cols}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = |r: usize, c: usize| format!("{r}_{c}");
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push(((r, c), (r, c + 1)));
                edges.push(((r, c + 1), (r, c)));
            }
            if r + 1 < rows {
                edges.push(((r, c), (r + 1, c)));
                edges.push(((r + 1, c), (r, c)));
            }
        }
    }
    let mut links = Vec::with_capacity(edges.len());
    let mut betas = Vec::new();
    for (k, &(a, b)) in edges.iter().enumerate() {
        let cap = rng.random_range(1.0..4.0);
        let asset = if is_asset(&mut rng, k) {
            betas.push(rng.random_range(0.0..3.0));
            Some(betas.len() - 1)
        } else {
            None
        };
        links.push((a, b, cap, asset));
    }
    let registry = AssetRegistry::new(
        (0..betas.len()).map(|i| format!("L{i}")).collect(),
        betas,
        None,
    )?;

    let mut builder = Network::builder(registry.len());
    for r in 0..rows {
        for c in 0..cols {
            builder.node(&name(r, c));
        }
    }
    for ((ar, ac), (br, bc), cap, asset) in links {
        let failed = asset.map(|_| DETOUR_CAPACITY.min(cap));
        builder.link(&name(ar, ac), &name(br, bc), cap, asset, failed)?;
    }
    let (mr, mc) = ((rows - 1) / 2, (cols - 1) / 2);
    let candidates = [
        ((0, 0), (rows - 1, cols - 1)),
        ((0, cols - 1), (rows - 1, 0)),
        ((0, mc), (rows - 1, mc)),
        ((mr, 0), (mr, cols - 1)),
    ];
    let diameter = rows - 1 + cols - 1;
    let mut pairs: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for (o, d) in candidates {
        let dist = o.0.abs_diff(d.0) + o.1.abs_diff(d.1);
        if 2 * dist >= diameter && o != d && !pairs.contains(&(o, d)) {
            pairs.push((o, d));
        }
    }
    for (o, d) in pairs {
        builder.od_pair(&name(o.0, o.1), &name(d.0, d.1))?;
    }
    let (network, _) = builder.build()?;
    Ok((network, registry))
}

/// How the oracle column is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleMode {
    /// Closed form where one exists.
    #[default]
    Analytic,
    /// Full `2^n` enumeration.
    Enumerate,
    None,
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "enumerate" => Ok(Self::Enumerate),
            "none" => Ok(Self::None),
            other => Err(input(format!("unknown oracle mode '{other}'"))),
        }
    }
}

/// A reproducible scenario descriptor such as `case1:n=5:seed=42`,
/// `case2:n=50:rel=5:seed=7` or `grid:40x40:0.18:seed=3`.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Case1 {
        n: usize,
        seed: u64,
    },
    Case2 {
        n: usize,
        relevant: usize,
        seed: u64,
    },
    Grid {
        rows: usize,
        cols: usize,
        asset_fraction: f64,
        seed: u64,
    },
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Case1 { n, seed } => write!(f, "case1:n={n}:seed={seed}"),
            Self::Case2 { n, relevant, seed } => {
                write!(f, "case2:n={n}:rel={relevant}:seed={seed}")
            }
            Self::Grid {
                rows,
                cols,
                asset_fraction,
                seed,
            } => write!(f, "grid:{rows}x{cols}:{asset_fraction}:seed={seed}"),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| input(format!("scenario '{s}': {m}"));
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let num = |v: &str, what: &str| -> Result<u64> {
            v.parse().map_err(|_| bad(&format!("bad {what} '{v}'")))
        };
        match kind {
            "case1" | "case2" => {
                let (mut n, mut rel, mut seed) = (None, None, 0);
                for kv in rest {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| bad("expected key=value"))?;
                    match k {
                        "n" => n = Some(num(v, "n")? as usize),
                        "rel" if kind == "case2" => rel = Some(num(v, "rel")? as usize),
                        "seed" => seed = num(v, "seed")?,
                        _ => return Err(bad(&format!("unknown key '{k}'"))),
                    }
                }
                let n = n.ok_or_else(|| bad("missing n"))?;
                if kind == "case1" {
                    Ok(Self::Case1 { n, seed })
                } else {
                    let relevant = rel.ok_or_else(|| bad("missing rel"))?;
                    Ok(Self::Case2 { n, relevant, seed })
                }
            }
            "grid" => {
                let [size, frac, seed] = rest[..] else {
                    return Err(bad("expected grid:ROWSxCOLS:FRACTION:SEED"));
                };
                let (r, c) = size.split_once('x').ok_or_else(|| bad("bad grid size"))?;
                let asset_fraction: f64 = frac.parse().map_err(|_| bad("bad asset fraction"))?;
                let seed = num(seed.strip_prefix("seed=").unwrap_or(seed), "seed")?;
                Ok(Self::Grid {
                    rows: num(r, "rows")? as usize,
                    cols: num(c, "cols")? as usize,
                    asset_fraction,
                    seed,
                })
            }
            _ => Err(bad("unknown scenario kind")),
        }
    }
}

/// A materialized scenario.
pub struct ScenarioInstance {
    pub registry: AssetRegistry<f64>,
    pub model: ConsequenceModel<f64>,
    pub network: Option<Arc<Network<f64>>>,
}

impl Scenario {
    pub fn build(&self) -> Result<ScenarioInstance> {
        match *self {
            Self::Case1 { n, seed } => {
                let (registry, c) = gen_case1(n, seed)?;
                Ok(ScenarioInstance {
                    registry,
                    model: ConsequenceModel::additive(c)?,
                    network: None,
                })
            }
            Self::Case2 { n, relevant, seed } => {
                let (registry, rel, c) = gen_case2(n, relevant, seed)?;
                Ok(ScenarioInstance {
                    registry,
                    model: ConsequenceModel::gray_swan(rel, c)?,
                    network: None,
                })
            }
            Self::Grid {
                rows,
                cols,
                asset_fraction,
                seed,
            } => {
                let (network, registry) = gen_grid_network(rows, cols, asset_fraction, seed)?;
                let network = Arc::new(network);
                Ok(ScenarioInstance {
                    registry,
                    model: ConsequenceModel::capacity_drop(network.clone(), true),
                    network: Some(network),
                })
            }
        }
    }
}

impl ScenarioInstance {
    /// Exact risk, or `None` when no oracle is available.
    pub fn oracle(&self, mode: OracleMode) -> Result<Option<f64>> {
        match (mode, &self.model) {
            (OracleMode::None, _) => Ok(None),
            (OracleMode::Enumerate, m) => {
                if self.registry.len() > MAX_ENUMERATED_ASSETS {
                    return Err(Error::Config(format!(
                        "{} assets are too many to enumerate",
                        self.registry.len()
                    )));
                }
                exact_risk_enumerate(m, &self.registry).map(Some)
            }
            (OracleMode::Analytic, ConsequenceModel::Additive { consequences }) => {
                exact_risk_case1(&self.registry, consequences).map(Some)
            }
            (
                OracleMode::Analytic,
                ConsequenceModel::GraySwan {
                    relevant,
                    consequences,
                },
            ) => exact_risk_case2(&self.registry, relevant, consequences).map(Some),
            (OracleMode::Analytic, m) if self.registry.len() <= 16 => {
                exact_risk_enumerate(m, &self.registry).map(Some)
            }
            (OracleMode::Analytic, _) => Ok(None),
        }
    }
}

/// Settings for [`run_comparison`].
#[derive(Debug, Clone)]
pub struct ComparisonSpec {
    pub methods: Vec<Method>,
    pub n_repeats: usize,
    /// Repeat `r` uses seed `base_seed + r`.
    pub base_seed: u64,
    pub tmcmc: TmcmcConfig,
    /// Baseline budget when TMCMC is not among the methods.
    pub fallback_budget: Option<u64>,
    pub oracle: OracleMode,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            n_repeats: 10,
            base_seed: 0,
            tmcmc: TmcmcConfig::default(),
            fallback_budget: None,
            oracle: OracleMode::Analytic,
        }
    }
}

/// One estimate from one repeat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRun {
    pub scenario: String,
    pub method: Method,
    pub repeat: usize,
    pub estimate: f64,
    pub evals: u64,
    pub unique_states: u64,
}

/// Per-method summary over repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub min: f64,
    pub oracle: Option<f64>,
    /// Mean evaluation count per repeat.
    pub evals: f64,
    pub unique_states: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<SummaryRow>,
    pub raw: Vec<RawRun>,
}

/// Runs every method `n_repeats` times. Within a repeat TMCMC runs first
/// and fixes the budgets: MCS gets its evaluation count and the bound its
/// unique-state count.
pub fn run_comparison(scenario: &Scenario, spec: &ComparisonSpec) -> Result<Comparison> {
    if spec.methods.is_empty() || spec.n_repeats == 0 {
        return Err(Error::Config(
            "need at least one method and one repeat".into(),
        ));
    }
    let has_tmcmc = spec.methods.contains(&Method::Tmcmc);
    if !has_tmcmc && spec.fallback_budget.is_none() {
        return Err(Error::Config(
            "a budget is required when TMCMC is not run".into(),
        ));
    }
    spec.tmcmc.validate()?;
    let inst = scenario.build()?;
    let oracle = inst.oracle(spec.oracle)?;
    let name = scenario.to_string();

    let per_repeat: Vec<Vec<RawRun>> = (0..spec.n_repeats)
        .into_par_iter()
        .map(|r| -> Result<Vec<RawRun>> {
            let seed = spec.base_seed.wrapping_add(r as u64);
            let mut runs = Vec::new();
            let fallback = spec.fallback_budget.unwrap_or(0);
            let (mut evals, mut unique) = (fallback, fallback);
            if has_tmcmc {
                let cache = ConsequenceCache::new(&inst.model);
                let cfg = spec.tmcmc.clone().with_seed(seed);
                let rep = run_tmcmc_cached(&cache, &inst.registry, &cfg)?;
                evals = rep.total_evaluations;
                unique = rep.unique_states;
                runs.push(RawRun {
                    scenario: name.clone(),
                    method: Method::Tmcmc,
                    repeat: r,
                    estimate: rep.estimated_risk,
                    evals,
                    unique_states: unique,
                });
            }
            for &m in &spec.methods {
                let rep = match m {
                    Method::Tmcmc => continue,
                    Method::Mcs => run_mcs(&inst.model, &inst.registry, evals, seed)?,
                    Method::Bound => run_bound(&inst.model, &inst.registry, unique)?,
                };
                runs.push(RawRun {
                    scenario: name.clone(),
                    method: m,
                    repeat: r,
                    estimate: rep.estimated_risk,
                    evals: rep.total_evaluations,
                    unique_states: rep.unique_states,
                });
            }
            Ok(runs)
        })
        .collect::<Result<_>>()?;
    let raw: Vec<RawRun> = per_repeat.into_iter().flatten().collect();

    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();
    let rows = methods
        .into_iter()
        .map(|m| {
            let runs: Vec<&RawRun> = raw.iter().filter(|x| x.method == m).collect();
            let est: Vec<f64> = runs.iter().map(|x| x.estimate).collect();
            let k = est.len() as f64;
            let mean = est.iter().sum::<f64>() / k;
            let std = if est.len() > 1 {
                (est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                scenario: name.clone(),
                method: m,
                mean,
                std,
                max: est.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                min: est.iter().copied().fold(f64::INFINITY, f64::min),
                oracle,
                evals: runs.iter().map(|x| x.evals as f64).sum::<f64>() / k,
                unique_states: runs.iter().map(|x| x.unique_states as f64).sum::<f64>() / k,
            }
        })
        .collect();
    Ok(Comparison { rows, raw })
}

/// `scenario,method,mean,std,max,min,oracle,evals,unique_states`; a
/// missing oracle is written as `n/a`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record([
        "scenario",
        "method",
        "mean",
        "std",
        "max",
        "min",
        "oracle",
        "evals",
        "unique_states",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.method.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.max.to_string(),
            r.min.to_string(),
            r.oracle
                .map_or_else(|| "n/a".to_string(), |o| o.to_string()),
            r.evals.to_string(),
            r.unique_states.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// `scenario,method,repeat,estimate`.
pub fn write_raw_csv<W: Write>(runs: &[RawRun], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["scenario", "method", "repeat", "estimate"])
        .map_err(io)?;
    for r in runs {
        w.write_record([
            r.scenario.clone(),
            r.method.to_string(),
            r.repeat.to_string(),
            r.estimate.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
