//! Built-in self-checks: the four-link bridge example, conjugate Gaussian
//! evidence and a small enumeration comparison.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::bench::gen_random_network;
use crate::error::{Error, Result};
use crate::network::{read_network, LoadOptions, Network};
use crate::risk::{exact_risk_enumerate, AssetRegistry, ConsequenceModel, SystemState};
use crate::scalar::ordered_par_sum;
use crate::tmcmc::{run_sampler, run_tmcmc, GaussianLikelihood, TmcmcConfig};

pub const FIG1_EDGES: &str = include_str!("../fixtures/fig1/edges.csv");
pub const FIG1_OD: &str = include_str!("../fixtures/fig1/od.csv");
pub const FIG1_ASSETS: &str = include_str!("../fixtures/fig1/assets.csv");

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Fig1,
    GaussianEvidence,
    EnumN10,
    All,
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "gaussian-evidence" => Ok(Self::GaussianEvidence),
            "enum-n10" => Ok(Self::EnumN10),
            "all" => Ok(Self::All),
            _ => Err(Error::Config(format!(
                "unknown fixture '{s}' (expected fig1, gaussian-evidence, enum-n10 or all)"
            ))),
        }
    }
}

/// The bridge example: O→B, O→A, A→B, B→D with bridges on three links.
pub fn fig1() -> Result<(Network<f64>, AssetRegistry<f64>)> {
    let registry = AssetRegistry::read_csv(FIG1_ASSETS.as_bytes(), "fig1/assets.csv")?;
    let (network, _) = read_network(
        FIG1_EDGES.as_bytes(),
        "fig1/edges.csv",
        FIG1_OD.as_bytes(),
        "fig1/od.csv",
        &registry,
        LoadOptions::default(),
    )?;
    Ok((network, registry))
}

/// `Σ p(s) L(s)` over states with `bit` surviving, divided by its survival
/// probability.
pub fn conditional_risk_given_survival(
    model: &ConsequenceModel<f64>,
    registry: &AssetRegistry<f64>,
    bit: usize,
) -> Result<f64> {
    let n = registry.len();
    let probs = registry.failure_probabilities();
    let total = ordered_par_sum(0u64..(1u64 << n), |mask| {
        if mask >> bit & 1 == 1 {
            return 0.0;
        }
        let s = SystemState::from_mask(n, mask);
        let p: f64 = (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    probs[i]
                } else {
                    1.0 - probs[i]
                }
            })
            .product();
        p * model.evaluate(&s).unwrap_or(f64::NAN)
    });
    if total.is_nan() {
        return Err(Error::State("consequence evaluation failed".into()));
    }
    Ok(total / (1.0 - probs[bit]))
}

pub fn validate_fig1() -> Result<Vec<Check>> {
    let (network, registry) = fig1()?;
    let network = Arc::new(network);
    let mut checks = Vec::new();

    let flow = network.max_flow_between("O", "D")?.value;
    checks.push(Check::new(
        "fig1 max flow",
        flow == 5.0,
        format!("{flow} (expected 5)"),
    ));

    let model = ConsequenceModel::capacity_drop(network.clone(), true);
    let risk = exact_risk_enumerate(&model, &registry)?;
    checks.push(Check::new(
        "fig1 normalized risk",
        (risk - 0.0402).abs() <= 0.0005,
        format!("{:.4}% (expected 4.02% ± 0.05 pp)", 100.0 * risk),
    ));

    let b3 = registry.index_of("B3").expect("fixture asset");
    let cond = conditional_risk_given_survival(&model, &registry, b3)?;
    checks.push(Check::new(
        "fig1 risk given bridge 3 survives",
        (cond - 0.0305).abs() <= 0.0005,
        format!("{:.4}% (expected 3.05% ± 0.05 pp)", 100.0 * cond),
    ));

    let b1 = registry.index_of("B1").expect("fixture asset");
    let both = SystemState::with_failures(3, &[b1, b3]);
    let link_sum: f64 = network
        .links()
        .iter()
        .filter(|l| l.asset.is_some_and(|a| both.get(a)))
        .map(|l| l.capacity)
        .sum();
    checks.push(Check::new(
        "fig1 failed link capacity sum",
        link_sum == 8.0,
        format!("{link_sum} (expected 8)"),
    ));

    let raw = ConsequenceModel::capacity_drop(network.clone(), false);
    let per_asset: f64 = [b1, b3]
        .iter()
        .map(|&i| raw.evaluate(&SystemState::with_failures(3, &[i])))
        .sum::<Result<f64>>()?;
    checks.push(Check::new(
        "fig1 per-asset capacity drops",
        per_asset == 7.0,
        format!("{per_asset} (expected 7)"),
    ));

    // Three assets leave most prior samples at zero consequence, so single
    // runs scatter by several percent. Compare the mean against its own
    // standard error instead of a fixed band.
    let estimates: Vec<f64> = (0..40)
        .map(|seed| {
            run_tmcmc(&model, &registry, &TmcmcConfig::default().with_seed(seed))
                .map(|r| r.estimated_risk)
        })
        .collect::<Result<_>>()?;
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let sd = (estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let z = (mean - risk).abs() / (sd / k.sqrt());
    checks.push(Check::new(
        "fig1 tmcmc vs enumeration",
        z <= 3.0,
        format!("mean of 40 runs {mean:.5} vs {risk:.5} ({z:.2} standard errors, limit 3)"),
    ));
    Ok(checks)
}

/// Mean TMCMC evidence over `seeds` against the closed form.
pub fn gaussian_evidence_ratio(dim: usize, seeds: u64) -> Result<f64> {
    let lik = GaussianLikelihood {
        center: vec![1.5; dim],
        sigma: 0.5,
    };
    let mut sum = 0.0;
    for seed in 0..seeds {
        let out = run_sampler(&lik, &TmcmcConfig::default().with_seed(seed))?;
        sum += out.evidence();
    }
    Ok(sum / seeds as f64 / lik.evidence())
}

pub fn validate_gaussian() -> Result<Vec<Check>> {
    [1, 5]
        .into_iter()
        .map(|dim| {
            let ratio = gaussian_evidence_ratio(dim, 10)?;
            Ok(Check::new(
                format!("gaussian evidence {dim}-D"),
                (ratio - 1.0).abs() <= 0.05,
                format!("estimate / closed form = {ratio:.4} (limit ±5%)"),
            ))
        })
        .collect()
}

/// TMCMC mean over ten seeds on a 3×3 grid with ten bridge links.
pub fn validate_enum_n10() -> Result<Vec<Check>> {
    let (network, registry) = gen_random_network(3, 3, 10, 11)?;
    let model = ConsequenceModel::capacity_drop(Arc::new(network), true);
    let exact = exact_risk_enumerate(&model, &registry)?;
    let estimates: Vec<f64> = (0..10)
        .map(|seed| {
            run_tmcmc(&model, &registry, &TmcmcConfig::default().with_seed(seed))
                .map(|r| r.estimated_risk)
        })
        .collect::<Result<_>>()?;
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let rel = (mean - exact).abs() / exact;
    Ok(vec![Check::new(
        "enum-n10 tmcmc vs enumeration",
        rel <= 0.03,
        format!(
            "mean {mean:.5} vs {exact:.5} ({:.2}% off, limit 3%)",
            100.0 * rel
        ),
    )])
}

pub fn validate_fixture(fixture: Fixture) -> Result<Vec<Check>> {
    match fixture {
        Fixture::Fig1 => validate_fig1(),
        Fixture::GaussianEvidence => validate_gaussian(),
        Fixture::EnumN10 => validate_enum_n10(),
        Fixture::All => {
            let mut all = validate_fig1()?;
            all.extend(validate_gaussian()?);
            all.extend(validate_enum_n10()?);
            Ok(all)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_parses() {
        let (net, reg) = fig1().unwrap();
        assert_eq!(reg.len(), 3);
        assert_eq!(net.links().len(), 4);
        assert_eq!(net.baseline_capacity(), 5.0);
        assert!("nope".parse::<Fixture>().is_err());
    }

    #[test]
    fn conditional_risk_closed_form() {
        let (net, reg) = fig1().unwrap();
        let model = ConsequenceModel::capacity_drop(Arc::new(net), true);
        let p = reg.failure_probabilities();
        // B3 up: B1 alone drops 2, B2 alone drops 2, both drop 5.
        let expected =
            (2.0 * p[0] * (1.0 - p[1]) + 2.0 * p[1] * (1.0 - p[0]) + 5.0 * p[0] * p[1]) / 5.0;
        let got = conditional_risk_given_survival(&model, &reg, 2).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }
}
