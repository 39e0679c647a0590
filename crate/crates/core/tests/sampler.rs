mod common;

use std::sync::Arc;

use common::*;
use netrisk::tmcmc::{run_sampler, LogLikelihood};
use netrisk::{
    run_bound, run_mcs, run_tmcmc, AssetRegistry, Consequence, ConsequenceModel, Error, Network,
    RiskReport, SystemState, TmcmcConfig,
};
use proptest::prelude::*;

struct Constant(usize, f64);

impl Consequence<f64> for Constant {
    fn asset_count(&self) -> usize {
        self.0
    }
    fn consequence(&self, _: &SystemState) -> f64 {
        self.1
    }
}

/// Unnormalized 1-D target `exp(-(x-m)²/2s²)`.
struct Bump {
    m: f64,
    s: f64,
}

impl LogLikelihood<f64> for Bump {
    fn dim(&self) -> usize {
        1
    }
    fn ln_likelihood(&self, x: &[f64]) -> f64 {
        -0.5 * ((x[0] - self.m) / self.s).powi(2)
    }
}

#[test]
fn single_asset_recovers_its_failure_probability() {
    let registry = AssetRegistry::from_betas(vec![1.0]).unwrap();
    let model = ConsequenceModel::additive(vec![1.0]).unwrap();
    let est: Vec<f64> = (0..10)
        .map(|s| {
            run_tmcmc(&model, &registry, &TmcmcConfig::default().with_seed(s))
                .unwrap()
                .estimated_risk
        })
        .collect();
    let (mean, _) = mean_sd(&est);
    let p = tail(1.0);
    assert!((mean - p).abs() / p < 0.05, "{mean} vs {p}");
}

#[test]
fn constant_consequence_finishes_in_one_stage() {
    let registry = AssetRegistry::from_betas(vec![0.3, 1.1, 2.0]).unwrap();
    let r = run_tmcmc(&Constant(3, 2.5), &registry, &TmcmcConfig::default()).unwrap();
    assert_eq!(r.stages_used, 1);
    assert_eq!(r.per_stage[0].exponent, 1.0);
    assert!((r.estimated_risk - 2.5).abs() < 1e-12);
}

#[test]
fn chain_population_matches_quadrature() {
    // Posterior under a standard normal prior is N(m/(1+s²), s²/(1+s²)).
    let (m, s) = (1.0, 0.8);
    let out = run_sampler(&Bump { m, s }, &TmcmcConfig::default()).unwrap();
    let z = simpson(
        |x| normal_pdf(x) * (-0.5 * ((x - m) / s).powi(2)).exp(),
        -10.0,
        10.0,
        2000,
    );
    let mean_q = simpson(
        |x| x * normal_pdf(x) * (-0.5 * ((x - m) / s).powi(2)).exp(),
        -10.0,
        10.0,
        2000,
    ) / z;
    let (mean, sd) = mean_sd(&out.final_samples);
    let var_q = s * s / (1.0 + s * s);
    assert!((mean_q - m / (1.0 + s * s)).abs() < 1e-9);
    assert!((mean - mean_q).abs() < 0.05, "{mean} vs {mean_q}");
    assert!(
        (sd * sd - var_q).abs() / var_q < 0.1,
        "{} vs {var_q}",
        sd * sd
    );
    assert!((out.evidence() - z).abs() / z < 0.05);
}

#[test]
fn report_json_round_trip_is_byte_identical() {
    let registry = AssetRegistry::from_betas(vec![0.4, 1.3, 2.2]).unwrap();
    let model = ConsequenceModel::additive(vec![1.0, 2.0, 3.0]).unwrap();
    for r in [
        run_tmcmc(&model, &registry, &TmcmcConfig::default()).unwrap(),
        run_mcs(&model, &registry, 1000, 3).unwrap(),
        run_bound(&model, &registry, 8).unwrap(),
    ] {
        let text = r.to_json().unwrap();
        let back = RiskReport::<f64>::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), text);
    }
}

#[test]
fn all_zero_consequences_give_zero_risk() {
    let registry = AssetRegistry::from_betas(vec![3.0, 3.5]).unwrap();
    let r = run_tmcmc(&Constant(2, 0.0), &registry, &TmcmcConfig::default()).unwrap();
    assert_eq!(r.estimated_risk, 0.0);
    assert_eq!(r.importance, vec![0.0, 0.0]);
}

#[test]
fn unreached_rare_failure_aborts() {
    // One failure in ~3.5 million; 100 prior samples will not see it.
    let registry = AssetRegistry::from_betas(vec![5.0]).unwrap();
    let model = ConsequenceModel::additive(vec![1.0]).unwrap();
    let cfg = TmcmcConfig {
        samples_per_stage: 100,
        n_chains: 2,
        burn_in: 5,
        ..TmcmcConfig::default()
    };
    match run_tmcmc(&model, &registry, &cfg) {
        Err(Error::ZeroLikelihoodPrior { samples }) => assert_eq!(samples, 100),
        other => panic!("expected zero-likelihood prior, got {other:?}"),
    }
}

#[test]
fn empty_asset_file_gives_zero_risk() {
    let registry = AssetRegistry::<f64>::read_csv(&b""[..], "empty.csv").unwrap();
    assert!(registry.is_empty());
    let mut b = Network::builder(0);
    b.link("O", "D", 3.0, None, None).unwrap();
    b.od_pair("O", "D").unwrap();
    let model = ConsequenceModel::capacity_drop(Arc::new(b.build().unwrap().0), true);
    let r = run_tmcmc(&model, &registry, &TmcmcConfig::default()).unwrap();
    assert_eq!(r.estimated_risk, 0.0);
    assert!(r.importance.is_empty());
}

#[test]
fn importance_of_additive_pair_matches_closed_form() {
    let betas = [0.8, 1.2];
    let c = [3.0, 1.0];
    let registry = AssetRegistry::from_betas(betas.to_vec()).unwrap();
    let model = ConsequenceModel::additive(c.to_vec()).unwrap();
    let risk = brute_force(&betas, additive_loss(&c));
    let a0 = brute_force(&betas, |s| if s[0] { additive_loss(&c)(s) } else { 0.0 }) / risk;
    let est: Vec<f64> = (0..10)
        .map(|s| {
            run_tmcmc(&model, &registry, &TmcmcConfig::default().with_seed(s))
                .unwrap()
                .importance[0]
        })
        .collect();
    let (mean, _) = mean_sd(&est);
    assert!((mean - a0).abs() < 0.02, "{mean} vs {a0}");
}

fn small_config() -> TmcmcConfig {
    TmcmcConfig {
        samples_per_stage: 300,
        n_chains: 3,
        burn_in: 20,
        thinning: 2,
        ..TmcmcConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_invariants(
        betas in prop::collection::vec(0.0f64..2.0, 1..6),
        scale in 0.5f64..5.0,
        seed in 0u64..1000,
    ) {
        let n = betas.len();
        let c: Vec<f64> = (1..=n).map(|r| scale * r as f64).collect();
        let registry = AssetRegistry::from_betas(betas).unwrap();
        let model = ConsequenceModel::additive(c).unwrap();
        let r = run_tmcmc(&model, &registry, &small_config().with_seed(seed)).unwrap();

        let q: Vec<f64> = r.per_stage.iter().map(|s| s.exponent).collect();
        prop_assert!(q.windows(2).all(|w| w[0] < w[1]), "{q:?}");
        prop_assert_eq!(*q.last().unwrap(), 1.0);
        let log_z: f64 = r.per_stage.iter().map(|s| s.log_mean_weight).sum();
        prop_assert!((log_z.exp() - r.estimated_risk).abs() <= 1e-9 * r.estimated_risk);
        prop_assert!(r.importance.iter().all(|a| (0.0..=1.0).contains(a)));
        prop_assert!(r.estimated_risk > 0.0);
    }
}
