use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;

use super::{Consequence, SystemState};
use crate::scalar::Real;

/// Memoizing wrapper around a [`Consequence`] that counts every call.
///
/// Entries are never evicted during a run, so [`Self::unique_states`] is
/// the exact number of distinct states evaluated. Two threads racing on
/// the same new state may both compute it; the stored value is identical
/// either way since models are pure.
pub struct ConsequenceCache<T, M> {
    model: M,
    values: DashMap<SystemState, T>,
    evaluations: AtomicU64,
    hits: AtomicU64,
}

/// Snapshot of cache counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheStats {
    pub evaluations: u64,
    pub hits: u64,
    pub unique_states: u64,
}

impl<T: Real, M: Consequence<T>> ConsequenceCache<T, M> {
    pub fn new(model: M) -> Self {
        Self {
            model,
            values: DashMap::new(),
            evaluations: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn evaluate(&self, state: &SystemState) -> T {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        if let Some(v) = self.values.get(state) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return *v;
        }
        let v = self.model.consequence(state);
        self.values.entry(state.clone()).or_insert(v);
        v
    }

    /// Looks up a state without counting an evaluation.
    pub fn peek(&self, state: &SystemState) -> Option<T> {
        self.values.get(state).map(|v| *v)
    }

    pub fn unique_states(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            evaluations: self.evaluations.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            unique_states: self.unique_states(),
        }
    }

    /// All distinct states seen so far, in unspecified order.
    pub fn states(&self) -> Vec<SystemState> {
        self.values.iter().map(|e| e.key().clone()).collect()
    }
}

impl<T: Real, M: Consequence<T>> Consequence<T> for ConsequenceCache<T, M> {
    fn asset_count(&self) -> usize {
        self.model.asset_count()
    }

    fn consequence(&self, state: &SystemState) -> T {
        self.evaluate(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::ConsequenceModel;
    use rayon::prelude::*;

    #[test]
    fn counters_and_values() {
        let model = ConsequenceModel::additive(vec![1.0, 2.0, 4.0]).unwrap();
        let cache = ConsequenceCache::new(&model);
        for mask in [1u64, 2, 1, 7, 7, 7] {
            let s = SystemState::from_mask(3, mask);
            assert_eq!(cache.evaluate(&s), model.consequence(&s));
        }
        let st = cache.stats();
        assert_eq!(st.evaluations, 6);
        assert_eq!(st.unique_states, 3);
        assert_eq!(st.hits, 3);
        assert!(st.unique_states <= st.evaluations);
    }

    #[test]
    fn concurrent_use_is_consistent() {
        let model = ConsequenceModel::additive((0..10).map(|i| i as f64).collect()).unwrap();
        let cache = ConsequenceCache::new(&model);
        (0..20_000u64).into_par_iter().for_each(|k| {
            let s = SystemState::from_mask(10, k % 300);
            assert_eq!(cache.evaluate(&s), model.consequence(&s));
        });
        let st = cache.stats();
        assert_eq!(st.evaluations, 20_000);
        assert_eq!(st.unique_states, 300);
    }
}
