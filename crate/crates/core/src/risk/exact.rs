//! Closed-form and enumeration risk oracles.

use super::{AssetRegistry, Consequence, SystemState};
use crate::error::{input, Error, Result};
use crate::scalar::{ordered_par_sum, Real};

/// Largest relevant set [`exact_risk_case2`] will enumerate.
pub const MAX_RELEVANT: usize = 20;

/// Largest registry [`exact_risk_enumerate`] will enumerate.
pub const MAX_ENUMERATED_ASSETS: usize = 24;

/// Additive-consequence risk, `Σ Φ(-β_i) c_i`.
pub fn exact_risk_case1<T: Real>(registry: &AssetRegistry<T>, consequences: &[T]) -> Result<T> {
    if consequences.len() != registry.len() {
        return Err(input(format!(
            "{} consequences for {} assets",
            consequences.len(),
            registry.len()
        )));
    }
    let risk: f64 = consequences
        .iter()
        .enumerate()
        .map(|(i, c)| registry.failure_probability(i) * c.as_f64())
        .sum();
    Ok(T::lit(risk))
}

/// Gray-swan risk by enumerating the `2^|U| - 1` failure patterns of the
/// relevant set; the other assets marginalize out.
pub fn exact_risk_case2<T: Real>(
    registry: &AssetRegistry<T>,
    relevant: &[usize],
    consequences: &[T],
) -> Result<T> {
    if relevant.is_empty() {
        return Err(Error::Config("relevant asset set is empty".into()));
    }
    if relevant.len() > MAX_RELEVANT {
        return Err(Error::Config(format!(
            "{} relevant assets exceed the enumeration limit of {MAX_RELEVANT}",
            relevant.len()
        )));
    }
    if consequences.len() != registry.len() || relevant.iter().any(|&i| i >= registry.len()) {
        return Err(input(
            "relevant set or consequences do not match the registry",
        ));
    }
    let probs: Vec<f64> = relevant
        .iter()
        .map(|&i| registry.failure_probability(i))
        .collect();
    let cons: Vec<f64> = relevant.iter().map(|&i| consequences[i].as_f64()).collect();
    let k = relevant.len();
    let risk = ordered_par_sum(1u64..(1u64 << k), |mask| {
        let mut p = 1.0;
        let mut c = 1.0;
        for j in 0..k {
            if mask >> j & 1 == 1 {
                p *= probs[j];
                c *= cons[j];
            } else {
                p *= 1.0 - probs[j];
            }
        }
        p * c
    });
    Ok(T::lit(risk))
}

/// Brute-force `Σ_s p(s) L(s)` over all `2^n` states.
pub fn exact_risk_enumerate<T: Real, M: Consequence<T>>(
    model: &M,
    registry: &AssetRegistry<T>,
) -> Result<T> {
    let n = registry.len();
    if model.asset_count() != n {
        return Err(input(format!(
            "model has {} assets, registry {n}",
            model.asset_count()
        )));
    }
    if n > MAX_ENUMERATED_ASSETS {
        return Err(Error::Config(format!(
            "{n} assets exceed the enumeration limit of {MAX_ENUMERATED_ASSETS}"
        )));
    }
    let probs = registry.failure_probabilities();
    let risk = ordered_par_sum(0u64..(1u64 << n), |mask| {
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
        p * model.consequence(&s).as_f64()
    });
    Ok(T::lit(risk))
}
