use std::collections::HashMap;
use std::io::Read;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SystemState;
use crate::error::{input, Error, Result};
use crate::scalar::{failure_probability, Real};

/// Vulnerable assets and their reliability indices `β_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetRegistry<T> {
    ids: Vec<String>,
    betas: Vec<T>,
    labels: Vec<Option<String>>,
    index: HashMap<String, usize>,
}

impl<T: Real> AssetRegistry<T> {
    /// Registry with ids `"0"`, `"1"`, ...
    pub fn from_betas(betas: Vec<T>) -> Result<Self> {
        let ids = (0..betas.len()).map(|i| i.to_string()).collect();
        Self::new(ids, betas, None)
    }

    pub fn new(
        ids: Vec<String>,
        betas: Vec<T>,
        labels: Option<Vec<Option<String>>>,
    ) -> Result<Self> {
        if ids.len() != betas.len() {
            return Err(input(format!(
                "{} asset ids but {} reliability indices",
                ids.len(),
                betas.len()
            )));
        }
        let labels = labels.unwrap_or_else(|| vec![None; ids.len()]);
        if labels.len() != ids.len() {
            return Err(input("label count does not match asset count"));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, (id, &b)) in ids.iter().zip(&betas).enumerate() {
            if !b.is_finite() {
                return Err(input(format!(
                    "asset '{id}': reliability index {b} is not finite"
                )));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(input(format!("duplicate asset id '{id}'")));
            }
        }
        Ok(Self {
            ids,
            betas,
            labels,
            index,
        })
    }

    /// Builds a registry from failure probabilities, `β = -Φ⁻¹(p)`.
    pub fn from_failure_probabilities(probs: &[f64]) -> Result<Self> {
        let mut betas = Vec::with_capacity(probs.len());
        for &p in probs {
            if !(p > 0.0 && p < 1.0) {
                return Err(input(format!("failure probability {p} outside (0, 1)")));
            }
            betas.push(T::lit(crate::scalar::reliability_index(p)));
        }
        Self::from_betas(betas)
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels[i].as_deref()
    }

    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    pub fn beta(&self, i: usize) -> T {
        self.betas[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// `Φ(-β_i)`, evaluated in double precision.
    pub fn failure_probability(&self, i: usize) -> f64 {
        failure_probability(self.betas[i].as_f64())
    }

    pub fn failure_probabilities(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.failure_probability(i))
            .collect()
    }

    /// Prior probability of a full system state under independent failures.
    pub fn state_probability(&self, state: &SystemState) -> f64 {
        self.state_ln_probability(state).exp()
    }

    pub fn state_ln_probability(&self, state: &SystemState) -> f64 {
        (0..self.len())
            .map(|i| {
                let p = self.failure_probability(i);
                if state.get(i) {
                    p.ln()
                } else {
                    (-p).ln_1p()
                }
            })
            .sum()
    }

    /// Asset indices sorted ascending by β, ties by index.
    pub fn rank_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.betas[a]
                .partial_cmp(&self.betas[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        order
    }

    /// 1-based rank of each asset in [`Self::rank_order`].
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.len()];
        for (r, i) in self.rank_order().into_iter().enumerate() {
            ranks[i] = r + 1;
        }
        ranks
    }

    /// Reads `asset_id,beta[,label]` CSV with a header row.
    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_owned(),
            line,
            message,
        };
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if headers.is_empty() {
            // A zero-byte file is an empty registry.
            return Self::new(Vec::new(), Vec::new(), None);
        }
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(id_col), Some(beta_col)) = (col("asset_id"), col("beta")) else {
            return Err(parse_err(1, "expected header asset_id,beta[,label]".into()));
        };
        let label_col = col("label");

        let (mut ids, mut betas, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let line = row + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            let id = rec
                .get(id_col)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| parse_err(line, "missing asset_id".into()))?;
            let beta: f64 = rec
                .get(beta_col)
                .ok_or_else(|| parse_err(line, "missing beta".into()))?
                .parse()
                .map_err(|e| parse_err(line, format!("bad beta: {e}")))?;
            if !beta.is_finite() {
                return Err(parse_err(line, format!("beta {beta} is not finite")));
            }
            if ids.iter().any(|x: &String| x == id) {
                return Err(parse_err(line, format!("duplicate asset id '{id}'")));
            }
            ids.push(id.to_owned());
            betas.push(T::lit(beta));
            labels.push(
                label_col
                    .and_then(|c| rec.get(c))
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned),
            );
        }
        Self::new(ids, betas, Some(labels))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path)?;
        Self::read_csv(f, &path.display().to_string())
    }
}

/// Latent standard-normal coordinates `ξ`, one per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector<T>(pub Vec<T>);

impl<T> Deref for LatentVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Maps latent coordinates to asset states: asset `i` fails iff
/// `ξ_i < -β_i`.
pub fn transform<T: Real>(xi: &[T], registry: &AssetRegistry<T>) -> Result<SystemState> {
    if xi.len() != registry.len() {
        return Err(input(format!(
            "latent vector has {} entries, registry has {} assets",
            xi.len(),
            registry.len()
        )));
    }
    Ok(transform_unchecked(xi, registry.betas()))
}

#[inline]
pub(crate) fn transform_unchecked<T: Real>(xi: &[T], betas: &[T]) -> SystemState {
    let mut s = SystemState::zeros(betas.len());
    for (i, (&x, &b)) in xi.iter().zip(betas).enumerate() {
        if x < -b {
            s.set(i, true);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn threshold_examples() {
        let reg = AssetRegistry::from_betas(vec![1.0, 1.0]).unwrap();
        let s = transform(&[-1.5, 0.0], &reg).unwrap();
        assert_eq!(s.to_bits(), vec![true, false]);

        let reg = AssetRegistry::from_betas(vec![0.0f64]).unwrap();
        assert_eq!(transform(&[0.0], &reg).unwrap().to_bits(), vec![false]);
        assert!(transform(&[0.0, 1.0], &reg).is_err());
    }

    #[test]
    fn empirical_failure_rate_matches_cdf() {
        let betas = vec![0.0, 0.7, 1.5, 2.5];
        let reg = AssetRegistry::from_betas(betas).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let draws = 1_000_000;
        let mut hits = [0usize; 4];
        let mut xi = [0.0f64; 4];
        for _ in 0..draws {
            for x in xi.iter_mut() {
                *x = f64::sample_standard_normal(&mut rng);
            }
            let s = transform(&xi, &reg).unwrap();
            for (i, h) in hits.iter_mut().enumerate() {
                *h += s.get(i) as usize;
            }
        }
        for i in 0..4 {
            let p = reg.failure_probability(i);
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            let freq = hits[i] as f64 / draws as f64;
            assert!((freq - p).abs() < 3.0 * sigma, "asset {i}: {freq} vs {p}");
        }
    }

    #[test]
    fn ranks_are_stable_on_ties() {
        let reg = AssetRegistry::from_betas(vec![2.0, 0.5, 2.0, 1.0]).unwrap();
        assert_eq!(reg.rank_order(), vec![1, 3, 0, 2]);
        assert_eq!(reg.ranks(), vec![3, 1, 4, 2]);
    }

    #[test]
    fn csv_round() {
        let text = "asset_id,beta,label\nb1,1.2,north\nb2,0.4,\n";
        let reg = AssetRegistry::<f64>::read_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.index_of("b2"), Some(1));
        assert_eq!(reg.label(0), Some("north"));
        assert_eq!(reg.label(1), None);

        let bad = "asset_id,beta\nb1,1.2\nb2,abc\n";
        match AssetRegistry::<f64>::read_csv(bad.as_bytes(), "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let dup = "asset_id,beta\nb1,1.2\nb1,2\n";
        assert!(AssetRegistry::<f64>::read_csv(dup.as_bytes(), "mem").is_err());
        let empty = "asset_id,beta\n";
        assert!(AssetRegistry::<f64>::read_csv(empty.as_bytes(), "mem")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn probabilities_from_reliability() {
        let reg = AssetRegistry::<f64>::from_failure_probabilities(&[0.01, 0.5]).unwrap();
        assert!((reg.failure_probability(0) - 0.01).abs() < 1e-15);
        assert!(reg.beta(1).abs() < 1e-15);
        let s = SystemState::from_bits(&[true, false]);
        assert!((reg.state_probability(&s) - 0.005).abs() < 1e-15);
        assert!(AssetRegistry::<f64>::from_failure_probabilities(&[1.0]).is_err());
    }
}
