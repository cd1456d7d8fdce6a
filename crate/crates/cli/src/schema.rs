//! On-disk file formats. Every file carries `schema_version`; reals are
//! written in shortest round-trip form so parsing restores them bit for bit.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use spahm_core::fusion::{FusionConfig, GaussianHyper, LocalGroup, TraceEntry};
use spahm_core::simbench::{SimInstance, SimSpec};

use crate::InputError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub id: String,
    pub atoms: Vec<Vec<f64>>,
}

/// Local model parameters: one atom list per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalParamsFile {
    pub schema_version: u32,
    pub groups: Vec<GroupEntry>,
    /// Per group, the true global index of each local atom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_assignments: Option<Vec<Vec<usize>>>,
}

impl LocalParamsFile {
    pub fn validate(&self) -> Result<(), InputError> {
        check_version(self.schema_version)?;
        let first = self.groups.first().ok_or_else(|| InputError::new("file has no groups"))?;
        let d = first.atoms.first().map(Vec::len).unwrap_or(0);
        for g in &self.groups {
            if g.atoms.is_empty() {
                return Err(InputError::new(format!("group \"{}\" has no atoms", g.id)));
            }
            for (l, a) in g.atoms.iter().enumerate() {
                if a.len() != d || d == 0 {
                    return Err(InputError::new(format!(
                        "group \"{}\" atom {l} has dimension {}, expected {d}",
                        g.id,
                        a.len()
                    )));
                }
                if a.iter().any(|x| !x.is_finite()) {
                    return Err(InputError::new(format!("group \"{}\" atom {l} is not finite", g.id)));
                }
            }
        }
        if let Some(truth) = &self.true_assignments {
            if truth.len() != self.groups.len() {
                return Err(InputError::new(format!(
                    "true_assignments has {} entries for {} groups",
                    truth.len(),
                    self.groups.len()
                )));
            }
            for (g, t) in self.groups.iter().zip(truth) {
                if t.len() != g.atoms.len() {
                    return Err(InputError::new(format!(
                        "true_assignments for group \"{}\" has {} entries for {} atoms",
                        g.id,
                        t.len(),
                        g.atoms.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.groups[0].atoms[0].len()
    }

    pub fn local_groups(&self) -> Result<Vec<LocalGroup>, InputError> {
        self.groups
            .iter()
            .enumerate()
            .map(|(j, g)| {
                LocalGroup::new(j, g.atoms.clone()).map_err(|e| InputError::new(format!("group \"{}\": {e}", g.id)))
            })
            .collect()
    }

    pub fn from_instance(inst: &SimInstance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            groups: inst
                .groups
                .iter()
                .enumerate()
                .map(|(j, g)| GroupEntry {
                    id: format!("group-{j}"),
                    atoms: g.atoms.clone(),
                })
                .collect(),
            true_assignments: Some(inst.true_assignments()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub mu0: Vec<f64>,
    pub sigma0_sq: f64,
    pub sigma_sq: f64,
    pub alpha: f64,
    pub gamma0: f64,
}

impl From<&GaussianHyper> for Hyperparameters {
    fn from(h: &GaussianHyper) -> Self {
        Self {
            mu0: h.mu0.clone(),
            sigma0_sq: h.sigma0_sq,
            sigma_sq: h.sigma_sq,
            alpha: h.alpha,
            gamma0: h.gamma0,
        }
    }
}

/// Settings a fusion run was started with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub fusion: FusionConfig,
    pub alpha: f64,
    pub gamma0: f64,
    pub mu0: Option<Vec<f64>>,
    pub sigma0_sq: Option<f64>,
    pub sigma_sq: Option<f64>,
    pub initial_hyperparameters: Hyperparameters,
}

/// Output of `fuse`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalResultFile {
    pub schema_version: u32,
    pub global_atoms: Vec<Vec<f64>>,
    /// Per group, position `l` holds the global index of local atom `l`.
    pub assignments: Vec<Vec<usize>>,
    pub group_ids: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub trace: Vec<TraceEntry>,
    pub config: RunConfig,
    pub seed: u64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub warnings: Vec<String>,
}

impl GlobalResultFile {
    pub fn validate(&self) -> Result<(), InputError> {
        check_version(self.schema_version)?;
        let k = self.global_atoms.len();
        if k == 0 {
            return Err(InputError::new("result has no global atoms"));
        }
        let d = self.global_atoms[0].len();
        if self.global_atoms.iter().any(|a| a.len() != d) {
            return Err(InputError::new("global atoms differ in dimension"));
        }
        for (j, a) in self.assignments.iter().enumerate() {
            if let Some(&i) = a.iter().find(|&&i| i >= k) {
                return Err(InputError::new(format!("group {j} is assigned to global atom {i} of {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGroup {
    pub id: String,
    pub points: Vec<Vec<f64>>,
    /// Index of the local atom each point was drawn around.
    pub labels: Vec<usize>,
}

/// Raw observations behind each simulated local model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDataFile {
    pub schema_version: u32,
    pub groups: Vec<RawGroup>,
}

impl RawDataFile {
    pub fn from_instance(inst: &SimInstance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            groups: inst
                .groups
                .iter()
                .enumerate()
                .map(|(j, g)| RawGroup {
                    id: format!("group-{j}"),
                    points: g.points.clone(),
                    labels: g.labels.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueHyperparameters {
    pub mu0: Vec<f64>,
    pub sigma0_sq: f64,
    pub sigma_sq: f64,
}

/// Ground truth of a simulated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub schema_version: u32,
    pub global_atoms: Vec<Vec<f64>>,
    pub assignments: Vec<Vec<usize>>,
    pub hyperparameters: TrueHyperparameters,
    pub spec: SimSpec,
}

impl TruthFile {
    pub fn from_instance(inst: &SimInstance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            global_atoms: inst.true_global.clone(),
            assignments: inst.true_assignments(),
            hyperparameters: TrueHyperparameters {
                mu0: inst.spec.mu0_vec(),
                sigma0_sq: inst.spec.sigma0_sq,
                sigma_sq: inst.spec.sigma_sq,
            },
            spec: inst.spec.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), InputError> {
        check_version(self.schema_version)?;
        let k = self.global_atoms.len();
        if k == 0 {
            return Err(InputError::new("truth has no global atoms"));
        }
        for (j, a) in self.assignments.iter().enumerate() {
            if let Some(&i) = a.iter().find(|&&i| i >= k) {
                return Err(InputError::new(format!("true assignment of group {j} names global atom {i} of {k}")));
            }
        }
        Ok(())
    }
}

fn check_version(v: u32) -> Result<(), InputError> {
    if v != SCHEMA_VERSION {
        return Err(InputError::new(format!(
            "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

/// Read and parse a JSON file; any failure is an input error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError::new(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_str(&text)
        .map_err(|e| InputError::new(format!("cannot parse {}: {e}", path.display())))?;
    Ok(value)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).context("serializing output")?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LocalParamsFile {
        LocalParamsFile {
            schema_version: 1,
            groups: vec![
                GroupEntry {
                    id: "a".into(),
                    atoms: vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-300, 123_456_789.123_456_79]],
                },
                GroupEntry {
                    id: "b".into(),
                    atoms: vec![vec![std::f64::consts::PI, -0.0]],
                },
            ],
            true_assignments: Some(vec![vec![0, 1], vec![1]]),
        }
    }

    #[test]
    fn local_file_round_trips_bit_for_bit() {
        let f = sample();
        let back: LocalParamsFile = serde_json::from_str(&to_json(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        for (a, b) in f.groups.iter().zip(&back.groups) {
            for (x, y) in a.atoms.iter().flatten().zip(b.atoms.iter().flatten()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn validation_names_the_offending_group() {
        let mut f = sample();
        f.groups[1].atoms[0].push(1.0);
        let msg = f.validate().unwrap_err().to_string();
        assert!(msg.contains("\"b\""), "{msg}");

        let mut f = sample();
        f.groups[0].atoms[1][0] = f64::NAN;
        assert!(f.validate().unwrap_err().to_string().contains("\"a\""));

        let mut f = sample();
        f.schema_version = 2;
        assert!(f.validate().is_err());

        let mut f = sample();
        f.groups.clear();
        assert!(f.validate().is_err());

        let mut f = sample();
        f.true_assignments = Some(vec![vec![0]]);
        assert!(f.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"schema_version":1,"groups":[],"extra":3}"#;
        assert!(serde_json::from_str::<LocalParamsFile>(text).is_err());
    }
}
