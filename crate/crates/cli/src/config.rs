//! Experiment configuration, schema `qfames-experiment/1`.

use std::path::{Path, PathBuf};

use qfames::acquisition::observable::Pairing;
use qfames::models::builders::Boundary;
use qfames::QfamesConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const SCHEMA: &str = "qfames-experiment/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub model: ModelSpec,
    pub states: StateSpec,
    pub qfames: QfamesConfig,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    /// Guesses used for the parameter report when no oracle is available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<Assumptions>,
    /// Entry fed to the single-entry baseline in sweeps.
    #[serde(default)]
    pub qmegs_entry: [usize; 2],
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Illustrative,
    Tfim {
        #[serde(rename = "L")]
        l: usize,
        g: f64,
    },
    Toric {
        rows: usize,
        cols: usize,
        boundary: Boundary,
    },
    /// A Hamiltonian document (Pauli terms or a dense matrix), resolved
    /// relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// Rows of `Φ` (and optionally `Ψ`) in the eigenbasis, entries `[re, im]`.
    OverlapMatrix {
        phi: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        psi: Option<Vec<Vec<[f64; 2]>>>,
    },
    /// Haar states boosted by `e^{-βH}`, fresh per seed.
    HaarBoost { beta: f64, count: usize },
    /// Random orthonormal mixtures of the lowest `k` levels, fresh per seed.
    LowestK { k: usize, count: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    Exact,
    Shots {
        #[serde(default = "one")]
        shots_per_entry: usize,
    },
    /// Ancilla-free reconstruction on `[-σT, σT]`, then shots.
    Reconstructed {
        h: f64,
        dt: f64,
        #[serde(default = "one")]
        shots_per_entry: usize,
    },
}

fn one() -> usize {
    1
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Shots { shots_per_entry: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub operator: OperatorSpec,
    #[serde(default = "product_grid")]
    pub pairing: Pairing,
    /// Shot data needs a unitary operator.
    #[serde(default)]
    pub shots: bool,
}

fn product_grid() -> Pairing {
    Pairing::ProductGrid
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `(1/2L) Σ Z_i`.
    Magnetization,
    Pauli { string: String },
    PauliSum { terms: Vec<(f64, String)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Lowest levels to compute; omitted means full diagonalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default = "default_c_p")]
    pub c_p: f64,
    /// Single-linkage threshold for grouping dominant eigenvalues.
    pub gap: f64,
    /// Largest admissible cluster width.
    pub width: f64,
}

fn default_c_p() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumptions {
    pub gap: f64,
    pub p_tail: f64,
    pub k: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))?;
        if let ModelSpec::File { path: p } = &mut cfg.model {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without building the model.
    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::validation(m));
        if self.schema != SCHEMA {
            return bad(format!("schema must be \"{SCHEMA}\", got \"{}\"", self.schema));
        }
        self.qfames
            .validate()
            .map_err(|e| Failure::validation(format!("qfames: {e}")))?;
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed is required".into());
        }
        match &self.model {
            ModelSpec::Tfim { l, g } => {
                if *l == 0 || !g.is_finite() {
                    return bad(format!("model.tfim: need L >= 1 and finite g, got L={l}, g={g}"));
                }
            }
            ModelSpec::Toric { rows, cols, .. } => {
                if *rows == 0 || *cols == 0 {
                    return bad("model.toric: rows and cols must be positive".into());
                }
            }
            ModelSpec::File { path } => {
                if !path.is_file() {
                    return bad(format!("model.file: {} is not a readable file", path.display()));
                }
            }
            ModelSpec::Illustrative => {}
        }
        match &self.states {
            StateSpec::OverlapMatrix { phi, psi } => {
                for (name, m) in [("phi", Some(phi)), ("psi", psi.as_ref())] {
                    let Some(m) = m else { continue };
                    if m.is_empty() || m.iter().any(|row| row.len() != m[0].len() || row.is_empty()) {
                        return bad(format!("states.{name}: rows must be non-empty and of equal length"));
                    }
                }
            }
            StateSpec::HaarBoost { beta, count } => {
                if !(*beta >= 0.0 && beta.is_finite()) || *count == 0 {
                    return bad(format!("states.haar-boost: need beta >= 0 and count >= 1, got {beta}, {count}"));
                }
            }
            StateSpec::LowestK { k, count } => {
                if *k == 0 || *count == 0 {
                    return bad("states.lowest-k: k and count must be positive".into());
                }
            }
        }
        match self.data {
            DataSpec::Shots { shots_per_entry } | DataSpec::Reconstructed { shots_per_entry, .. }
                if shots_per_entry == 0 =>
            {
                return bad("data.shots_per_entry must be at least 1".into());
            }
            DataSpec::Reconstructed { h, dt, .. } if !(h > 0.0 && dt > 0.0 && h.is_finite() && dt.is_finite()) => {
                return bad(format!("data.reconstructed: h and dt must be positive, got {h}, {dt}"));
            }
            _ => {}
        }
        if let Some(o) = &self.oracle {
            if !(o.c_p > 0.0 && o.gap > 0.0 && o.width >= 0.0) || o.levels == Some(0) {
                return bad("oracle: need c_p > 0, gap > 0, width >= 0 and levels >= 1".into());
            }
        }
        if let Some(a) = &self.assumptions {
            if !(a.gap > 0.0 && a.p_tail >= 0.0) || a.k == 0 {
                return bad("assumptions: need gap > 0, p_tail >= 0 and k >= 1".into());
            }
        }
        if let Some(o) = &self.observable {
            if let Pairing::ProductGrid = o.pairing {
                let k = (self.qfames.n as f64).sqrt().round() as usize;
                if k * k != self.qfames.n {
                    return bad(format!("observable.pairing product-grid needs a square N, got {}", self.qfames.n));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "schema": SCHEMA,
            "model": {"kind": "tfim", "L": 4, "g": 1.0},
            "states": {"kind": "lowest-k", "k": 2, "count": 2},
            "qfames": {"N": 100, "T": 20.0, "sigma": 2.0, "i_tilde": 2, "tau": 0.2, "q": 0.01, "alpha": 3.0},
            "seeds": [1],
            "output_dir": "out"
        })
    }

    fn parse(v: serde_json::Value) -> Result<ExperimentConfig, String> {
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|f| f.message)?;
        Ok(cfg)
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse(base()).unwrap();
        assert_eq!(cfg.data, DataSpec::Shots { shots_per_entry: 1 });
        assert_eq!(cfg.qmegs_entry, [0, 0]);
        assert!(cfg.oracle.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = base();
        v["model"]["gg"] = 1.0.into();
        assert!(parse(v).unwrap_err().contains("gg"));
        let mut v = base();
        v["extra"] = 1.into();
        assert!(parse(v).is_err());
    }

    #[test]
    fn validation_messages() {
        let mut v = base();
        v["seeds"] = serde_json::json!([]);
        assert!(parse(v).unwrap_err().contains("seed"));
        let mut v = base();
        v["data"] = serde_json::json!({"mode": "reconstructed", "h": 0.0, "dt": 0.01});
        assert!(parse(v).unwrap_err().contains("h and dt"));
        let mut v = base();
        v["observable"] = serde_json::json!({"operator": {"kind": "magnetization"}});
        v["qfames"]["N"] = 99.into();
        assert!(parse(v).unwrap_err().contains("square N"));
    }

    #[test]
    fn round_trips() {
        let cfg = parse(base()).unwrap();
        let again = parse(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(serde_json::to_value(&cfg).unwrap(), serde_json::to_value(&again).unwrap());
    }
}
