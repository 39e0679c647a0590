//! Crude Monte Carlo and the most-probable-states lower bound.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::risk::{AssetRegistry, Consequence, ConsequenceCache, SystemState};
use crate::scalar::Real;
use crate::tmcmc::RiskReport;

/// States drawn per MCS batch; each batch owns one RNG stream.
pub const MCS_BATCH: u64 = 1024;

/// Which TMCMC count a baseline is matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    MatchEvaluations,
    MatchUniqueStates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub mode: BudgetMode,
    pub budget: u64,
}

impl BudgetSpec {
    pub fn new(mode: BudgetMode, budget: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        Ok(Self { mode, budget })
    }
}

/// Estimation method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tmcmc,
    Mcs,
    Bound,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tmcmc, Method::Mcs, Method::Bound];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tmcmc => "tmcmc",
            Method::Mcs => "mcs",
            Method::Bound => "bound",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tmcmc" => Ok(Method::Tmcmc),
            "mcs" => Ok(Method::Mcs),
            "bound" => Ok(Method::Bound),
            other => Err(input(format!("unknown method '{other}'"))),
        }
    }
}

fn check_dims<T: Real, M: Consequence<T>>(model: &M, registry: &AssetRegistry<T>) -> Result<()> {
    if model.asset_count() != registry.len() {
        return Err(input(format!(
            "model has {} assets, registry {}",
            model.asset_count(),
            registry.len()
        )));
    }
    Ok(())
}

/// Mean consequence over `budget` independent prior draws.
pub fn run_mcs<T, M>(
    model: &M,
    registry: &AssetRegistry<T>,
    budget: u64,
    seed: u64,
) -> Result<RiskReport<T>>
where
    T: Real,
    M: Consequence<T>,
{
    check_dims(model, registry)?;
    if budget == 0 {
        return Err(Error::Config("MCS budget must be positive".into()));
    }
    let n = registry.len();
    let probs = registry.failure_probabilities();
    let cache = ConsequenceCache::new(model);
    let batches = budget.div_ceil(MCS_BATCH);
    let partials: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b + 1);
            let count = MCS_BATCH.min(budget - b * MCS_BATCH);
            let mut sum = 0.0;
            let mut s = SystemState::zeros(n);
            for _ in 0..count {
                for (i, &p) in probs.iter().enumerate() {
                    s.set(i, rng.random::<f64>() < p);
                }
                sum += cache.evaluate(&s).as_f64();
            }
            sum
        })
        .collect();
    let total: f64 = partials.into_iter().sum();
    let stats = cache.stats();
    Ok(RiskReport {
        method: Method::Mcs.as_str().into(),
        estimated_risk: T::lit(total / budget as f64),
        importance: Vec::new(),
        stages_used: 0,
        unique_states: stats.unique_states,
        total_evaluations: stats.evaluations,
        per_stage: Vec::new(),
    })
}

/// Heap entry: a flip set identified by its cost and members.
#[derive(Debug, Clone, PartialEq)]
struct FlipSet {
    cost: f64,
    /// Positions in the cost-sorted order, ascending.
    members: Vec<usize>,
}

impl Eq for FlipSet {}

impl Ord for FlipSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl PartialOrd for FlipSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `k` most probable states in descending probability, with their
/// probabilities.
///
/// Each asset has a likelier value and a flip cost
/// `ln(max(p, 1-p) / min(p, 1-p))`; a state's probability is that of the
/// mode times `exp(-Σ cost)` over flipped assets, so states come out of a
/// subset-sum heap in order.
pub fn most_probable_states<T: Real>(
    registry: &AssetRegistry<T>,
    k: usize,
) -> Vec<(SystemState, f64)> {
    let n = registry.len();
    let probs = registry.failure_probabilities();
    let mut mode = SystemState::zeros(n);
    let mut ln_mode = 0.0;
    let mut costs: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, &p) in probs.iter().enumerate() {
        let (hi, lo) = if p > 0.5 { (p, 1.0 - p) } else { (1.0 - p, p) };
        mode.set(i, p > 0.5);
        ln_mode += hi.ln();
        if lo > 0.0 {
            costs.push(((hi / lo).ln(), i));
        }
    }
    costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::with_capacity(k.min(1 << n.min(20)));
    if k == 0 {
        return out;
    }
    out.push((mode.clone(), ln_mode.exp()));
    let mut heap = BinaryHeap::new();
    if let Some(&(c, _)) = costs.first() {
        heap.push(Reverse(FlipSet {
            cost: c,
            members: vec![0],
        }));
    }
    while out.len() < k {
        let Some(Reverse(set)) = heap.pop() else {
            break;
        };
        let mut s = mode.clone();
        for &j in &set.members {
            let i = costs[j].1;
            s.set(i, !s.get(i));
        }
        out.push((s, (ln_mode - set.cost).exp()));
        let last = *set.members.last().unwrap();
        if last + 1 < costs.len() {
            let mut add = set.members.clone();
            add.push(last + 1);
            heap.push(Reverse(FlipSet {
                cost: set.cost + costs[last + 1].0,
                members: add,
            }));
            let mut swap = set.members;
            *swap.last_mut().unwrap() = last + 1;
            heap.push(Reverse(FlipSet {
                cost: set.cost - costs[last].0 + costs[last + 1].0,
                members: swap,
            }));
        }
    }
    out
}

/// Lower bound `Σ p(s) L(s)` over the `n_states` most probable states.
pub fn run_bound<T, M>(
    model: &M,
    registry: &AssetRegistry<T>,
    n_states: u64,
) -> Result<RiskReport<T>>
where
    T: Real,
    M: Consequence<T>,
{
    check_dims(model, registry)?;
    let k = usize::try_from(n_states).map_err(|_| input("n_states too large"))?;
    let states = most_probable_states(registry, k);
    let values: Vec<f64> = states
        .par_iter()
        .map(|(s, _)| model.consequence(s).as_f64())
        .collect();
    let bound: f64 = states.iter().zip(&values).map(|((_, p), l)| p * l).sum();
    Ok(RiskReport {
        method: Method::Bound.as_str().into(),
        estimated_risk: T::lit(bound),
        importance: Vec::new(),
        stages_used: 0,
        unique_states: states.len() as u64,
        total_evaluations: states.len() as u64,
        per_stage: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{exact_risk_enumerate, ConsequenceModel};

    fn registry() -> AssetRegistry<f64> {
        AssetRegistry::from_betas(vec![1.2, 0.3, 2.0, -0.4, 0.9]).unwrap()
    }

    #[test]
    fn states_come_out_in_probability_order_and_cover_the_lattice() {
        let reg = registry();
        let all = most_probable_states(&reg, 100);
        assert_eq!(all.len(), 32);
        for w in all.windows(2) {
            assert!(w[0].1 >= w[1].1 * (1.0 - 1e-12));
        }
        for (s, p) in &all {
            assert!((reg.state_probability(s) - p).abs() < 1e-12);
        }
        let unique: std::collections::BTreeSet<_> = all.iter().map(|(s, _)| s.clone()).collect();
        assert_eq!(unique.len(), 32);
        let total: f64 = all.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_sorted_brute_force_prefix() {
        let reg = registry();
        let mut brute: Vec<f64> = (0..32u64)
            .map(|m| reg.state_probability(&SystemState::from_mask(5, m)))
            .collect();
        brute.sort_by(|a, b| b.total_cmp(a));
        let got = most_probable_states(&reg, 10);
        for (g, b) in got.iter().zip(&brute) {
            assert!((g.1 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_is_monotone_and_below_exact() {
        let reg = registry();
        let model = ConsequenceModel::additive(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let exact = exact_risk_enumerate(&model, &reg).unwrap();
        let mut last = 0.0;
        for k in 0..=32 {
            let b = run_bound(&model, &reg, k).unwrap().estimated_risk;
            assert!(b >= last - 1e-15 && b <= exact + 1e-12);
            last = b;
        }
        assert!((last - exact).abs() < 1e-12);
    }

    #[test]
    fn mcs_counts_and_determinism() {
        let reg = registry();
        let model = ConsequenceModel::additive(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let a = run_mcs(&model, &reg, 5000, 3).unwrap();
        let b = run_mcs(&model, &reg, 5000, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_evaluations, 5000);
        assert!(a.unique_states <= 32);
        assert!(a.importance.is_empty());
        assert!(run_mcs(&model, &reg, 0, 3).is_err());
    }

    #[test]
    fn method_parse() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("mc".parse::<Method>().is_err());
    }
}
