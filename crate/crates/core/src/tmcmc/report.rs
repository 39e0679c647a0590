use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StageDiagnostics;
use crate::error::Result;
use crate::risk::AssetRegistry;
use crate::scalar::Real;

/// Outcome of one risk assessment, for any of the three methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RiskReport<T> {
    /// `tmcmc`, `mcs` or `bound`.
    pub method: String,
    pub estimated_risk: T,
    /// Per-asset importance `α_i`; empty for methods that do not produce it.
    pub importance: Vec<T>,
    pub stages_used: usize,
    pub unique_states: u64,
    pub total_evaluations: u64,
    pub per_stage: Vec<StageDiagnostics>,
}

impl<T: Real> RiskReport<T> {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes `asset_id,beta,importance` rows.
    pub fn write_importance_csv<W: Write>(
        &self,
        registry: &AssetRegistry<T>,
        out: W,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["asset_id", "beta", "importance"])
            .map_err(std::io::Error::from)?;
        for (i, alpha) in self.importance.iter().enumerate() {
            w.write_record([
                registry.ids()[i].clone(),
                registry.beta(i).to_string(),
                alpha.to_string(),
            ])
            .map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }
}
