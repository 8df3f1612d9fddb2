//! Pole memory: named snapshots of every agent's poles, stored as JSON.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnn::PoleParams;

pub const FORMAT_VERSION: u32 = 1;

/// Label of the all-zeros entry every meta store starts with.
pub const META_LABEL: &str = "meta";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleMemoryEntry {
    pub label: String,
    /// One pole vector per agent, radians.
    pub agent_poles: Vec<Vec<f64>>,
    pub variant: String,
    pub epoch: u64,
    pub alpha_degrees: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleMemoryStore {
    pub format_version: u32,
    pub entries: Vec<PoleMemoryEntry>,
}

impl Default for PoleMemoryStore {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            entries: Vec::new(),
        }
    }
}

impl PoleMemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store holding the origin poles under [`META_LABEL`].
    pub fn with_meta(
        num_agents: usize,
        num_qubits: usize,
        variant: &str,
        epoch: u64,
        alpha_degrees: f64,
    ) -> Self {
        let mut store = Self::new();
        store
            .save(
                META_LABEL,
                &vec![PoleParams::zeros(num_qubits); num_agents],
                variant,
                epoch,
                alpha_degrees,
            )
            .expect("meta label is nonempty");
        store
    }

    /// Inserts or replaces the entry for `label`.
    pub fn save(
        &mut self,
        label: &str,
        poles: &[PoleParams],
        variant: &str,
        epoch: u64,
        alpha_degrees: f64,
    ) -> Result<()> {
        if label.is_empty() {
            return Err(Error::Argument("pole memory label must be nonempty".into()));
        }
        let entry = PoleMemoryEntry {
            label: label.to_string(),
            agent_poles: poles.iter().map(|p| p.as_slice().to_vec()).collect(),
            variant: variant.to_string(),
            epoch,
            alpha_degrees,
        };
        match self.entries.iter_mut().find(|e| e.label == label) {
            Some(existing) => *existing = entry,
            None => self.entries.push(entry),
        }
        Ok(())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.iter().any(|e| e.label == label)
    }

    pub fn entry(&self, label: &str) -> Result<&PoleMemoryEntry> {
        if label.is_empty() {
            return Err(Error::Argument("pole memory label must be nonempty".into()));
        }
        self.entries
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::Lookup(format!("no pole memory entry labelled '{label}'")))
    }

    pub fn load(&self, label: &str) -> Result<Vec<PoleParams>> {
        self.entry(label)?
            .agent_poles
            .iter()
            .map(|v| PoleParams::new(v.clone()))
            .collect()
    }

    /// Count of stored real numbers.
    pub fn number_count(&self) -> usize {
        self.entries
            .iter()
            .flat_map(|e| &e.agent_poles)
            .map(Vec::len)
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let store: Self =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("pole memory: {e}")))?;
        if store.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported pole memory format_version {}",
                store.format_version
            )));
        }
        Ok(store)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
