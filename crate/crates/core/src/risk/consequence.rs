//! Consequence models `L(s) ≥ 0` over system states.

use std::sync::Arc;

use super::{AssetRegistry, SystemState};
use crate::error::{input, Error, Result};
use crate::network::Network;
use crate::scalar::Real;

/// A non-negative loss function over system states.
///
/// Implementations must return a finite value `≥ 0` for every state of
/// length [`Consequence::asset_count`].
pub trait Consequence<T>: Send + Sync {
    fn asset_count(&self) -> usize;

    /// Loss for `state`. Callers guarantee `state.len() == asset_count()`.
    fn consequence(&self, state: &SystemState) -> T;
}

impl<T, C: Consequence<T> + ?Sized> Consequence<T> for &C {
    fn asset_count(&self) -> usize {
        (**self).asset_count()
    }

    fn consequence(&self, state: &SystemState) -> T {
        (**self).consequence(state)
    }
}

impl<T, C: Consequence<T> + ?Sized> Consequence<T> for Arc<C> {
    fn asset_count(&self) -> usize {
        (**self).asset_count()
    }

    fn consequence(&self, state: &SystemState) -> T {
        (**self).consequence(state)
    }
}

/// The three built-in consequence models.
#[derive(Debug, Clone)]
pub enum ConsequenceModel<T> {
    /// Drop in network capacity against the intact baseline, optionally
    /// divided by the baseline.
    CapacityDrop {
        network: Arc<Network<T>>,
        normalized: bool,
    },
    /// Sum of per-asset consequences over failed assets.
    Additive { consequences: Vec<T> },
    /// Product of consequences over failed relevant assets; zero when no
    /// relevant asset fails.
    GraySwan {
        relevant: Vec<usize>,
        consequences: Vec<T>,
    },
}

impl<T: Real> ConsequenceModel<T> {
    pub fn capacity_drop(network: Arc<Network<T>>, normalized: bool) -> Self {
        Self::CapacityDrop {
            network,
            normalized,
        }
    }

    pub fn additive(consequences: Vec<T>) -> Result<Self> {
        if let Some(c) = consequences
            .iter()
            .find(|c| !(**c >= T::zero()) || !c.is_finite())
        {
            return Err(Error::Config(format!(
                "additive consequences must be finite and non-negative, got {c}"
            )));
        }
        Ok(Self::Additive { consequences })
    }

    pub fn gray_swan(relevant: Vec<usize>, consequences: Vec<T>) -> Result<Self> {
        if relevant.is_empty() {
            return Err(Error::Config("relevant asset set is empty".into()));
        }
        let n = consequences.len();
        let mut relevant = relevant;
        relevant.sort_unstable();
        relevant.dedup();
        if let Some(&i) = relevant.iter().find(|&&i| i >= n) {
            return Err(Error::Config(format!(
                "relevant asset {i} out of range ({n} assets)"
            )));
        }
        if let Some(c) = relevant
            .iter()
            .map(|&i| consequences[i])
            .find(|c| !(*c >= T::zero()) || !c.is_finite())
        {
            return Err(Error::Config(format!(
                "relevant consequences must be finite and non-negative, got {c}"
            )));
        }
        Ok(Self::GraySwan {
            relevant,
            consequences,
        })
    }

    /// Dimension-checked evaluation.
    pub fn evaluate(&self, state: &SystemState) -> Result<T> {
        if state.len() != self.asset_count() {
            return Err(input(format!(
                "state has {} assets, model expects {}",
                state.len(),
                self.asset_count()
            )));
        }
        Ok(self.consequence(state))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CapacityDrop { .. } => "capacity-drop",
            Self::Additive { .. } => "case-I-additive",
            Self::GraySwan { .. } => "case-II-grayswan",
        }
    }
}

impl<T: Real> Consequence<T> for ConsequenceModel<T> {
    fn asset_count(&self) -> usize {
        match self {
            Self::CapacityDrop { network, .. } => network.asset_count(),
            Self::Additive { consequences } => consequences.len(),
            Self::GraySwan { consequences, .. } => consequences.len(),
        }
    }

    fn consequence(&self, state: &SystemState) -> T {
        match self {
            Self::CapacityDrop {
                network,
                normalized,
            } => capacity_drop(network, state, *normalized),
            Self::Additive { consequences } => additive(consequences, state),
            Self::GraySwan {
                relevant,
                consequences,
            } => gray_swan(relevant, consequences, state),
        }
    }
}

fn capacity_drop<T: Real>(network: &Network<T>, state: &SystemState, normalized: bool) -> T {
    let base = network.baseline_capacity();
    if state.is_intact() || base <= T::zero() {
        return T::zero();
    }
    let caps = network.effective_capacities(state);
    // Clamp float noise from the flow solver; capacity is monotone.
    let drop = (base - network.capacity_with(&caps)).max(T::zero());
    if normalized {
        drop / base
    } else {
        drop
    }
}

fn additive<T: Real>(consequences: &[T], state: &SystemState) -> T {
    state.failed().map(|i| consequences[i]).sum()
}

fn gray_swan<T: Real>(relevant: &[usize], consequences: &[T], state: &SystemState) -> T {
    let mut any = false;
    let mut product = T::one();
    for &i in relevant {
        if state.get(i) {
            any = true;
            product *= consequences[i];
        }
    }
    if any {
        product
    } else {
        T::zero()
    }
}

/// Capacity-drop consequence, `C_0 - C(s)`, with dimension checks.
pub fn consequence_capacity_drop<T: Real>(
    state: &SystemState,
    network: &Network<T>,
    normalized: bool,
) -> Result<T> {
    if state.len() != network.asset_count() {
        return Err(input(format!(
            "state has {} assets, network expects {}",
            state.len(),
            network.asset_count()
        )));
    }
    Ok(capacity_drop(network, state, normalized))
}

/// `Σ c_i s_i`.
pub fn consequence_case1<T: Real>(state: &SystemState, consequences: &[T]) -> Result<T> {
    if state.len() != consequences.len() {
        return Err(input(format!(
            "state has {} assets, {} consequences given",
            state.len(),
            consequences.len()
        )));
    }
    Ok(additive(consequences, state))
}

/// Product of `c_i` over failed relevant assets, zero if none failed.
pub fn consequence_case2<T: Real>(
    state: &SystemState,
    relevant: &[usize],
    consequences: &[T],
) -> Result<T> {
    if relevant.is_empty() {
        return Err(Error::Config("relevant asset set is empty".into()));
    }
    if state.len() != consequences.len() || relevant.iter().any(|&i| i >= state.len()) {
        return Err(input(format!(
            "state has {} assets, {} consequences given",
            state.len(),
            consequences.len()
        )));
    }
    Ok(gray_swan(relevant, consequences, state))
}

/// Case I consequences: each asset's 1-based rank by ascending β.
pub fn rank_consequences<T: Real>(registry: &AssetRegistry<T>) -> Vec<T> {
    registry
        .ranks()
        .into_iter()
        .map(|r| T::from_usize(r).unwrap())
        .collect()
}

/// Case II consequences: `10^((r-1) β_i / (n-1))` for relevant assets with
/// rank `r` by ascending β, zero elsewhere. With a single asset the exponent
/// is taken as zero.
pub fn gray_swan_consequences<T: Real>(registry: &AssetRegistry<T>, relevant: &[usize]) -> Vec<T> {
    let n = registry.len();
    let ranks = registry.ranks();
    let mut c = vec![T::zero(); n];
    for &i in relevant {
        let exponent = if n > 1 {
            (ranks[i] - 1) as f64 * registry.beta(i).as_f64() / (n - 1) as f64
        } else {
            0.0
        };
        c[i] = T::lit(10f64.powf(exponent));
    }
    c
}

/// Indices of the `k` highest-β assets, ascending.
pub fn most_reliable<T: Real>(registry: &AssetRegistry<T>, k: usize) -> Vec<usize> {
    let order = registry.rank_order();
    let mut top: Vec<usize> = order[order.len().saturating_sub(k)..].to_vec();
    top.sort_unstable();
    top
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_examples() {
        let s = SystemState::from_bits(&[true, false, true]);
        assert_eq!(consequence_case1(&s, &[1.0, 2.0, 3.0]).unwrap(), 4.0);
        assert_eq!(
            consequence_case1(&SystemState::zeros(3), &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert!(consequence_case1(&s, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn gray_swan_examples() {
        let c = vec![0.0, 0.0, 10.0, 0.0];
        let mut s = SystemState::with_failures(4, &[2, 0, 3]);
        assert_eq!(consequence_case2(&s, &[2], &c).unwrap(), 10.0);
        s.set(2, false);
        assert_eq!(consequence_case2(&s, &[2], &c).unwrap(), 0.0);
        assert_eq!(
            consequence_case2(&SystemState::zeros(4), &[2], &c).unwrap(),
            0.0
        );
        assert!(matches!(
            consequence_case2(&s, &[], &c),
            Err(Error::Config(_))
        ));

        let c = vec![2.0, 3.0, 5.0];
        let s = SystemState::from_bits(&[true, false, true]);
        assert_eq!(consequence_case2(&s, &[0, 1, 2], &c).unwrap(), 10.0);
    }

    #[test]
    fn rank_and_swan_consequences() {
        let reg = AssetRegistry::from_betas(vec![2.0, 0.5, 3.0, 1.0]).unwrap();
        assert_eq!(rank_consequences(&reg), vec![3.0, 1.0, 4.0, 2.0]);
        let rel = most_reliable(&reg, 2);
        assert_eq!(rel, vec![0, 2]);
        let c = gray_swan_consequences(&reg, &rel);
        // rank 3: 10^(2·2/3); rank 4: 10^(3·3/3)
        assert!((c[0] - 10f64.powf(4.0 / 3.0)).abs() < 1e-12);
        assert!((c[2] - 1000.0).abs() < 1e-9);
        assert_eq!(c[1], 0.0);
        let single = AssetRegistry::from_betas(vec![1.3]).unwrap();
        assert_eq!(gray_swan_consequences(&single, &[0]), vec![1.0]);
    }

    #[test]
    fn model_validation() {
        assert!(ConsequenceModel::additive(vec![1.0, -2.0]).is_err());
        assert!(ConsequenceModel::<f64>::gray_swan(vec![], vec![1.0]).is_err());
        assert!(ConsequenceModel::gray_swan(vec![3], vec![1.0]).is_err());
        let m = ConsequenceModel::additive(vec![1.0f32, 2.0]).unwrap();
        assert!(m.evaluate(&SystemState::zeros(3)).is_err());
        assert_eq!(
            m.evaluate(&SystemState::from_bits(&[true, true])).unwrap(),
            3.0
        );
    }
}
