use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ann::AnnParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Oblivcheck,
    Attack,
    Dynbench,
    Lemmas,
    Expansion,
    Resolve,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Oblivcheck => "oblivcheck",
            ExperimentKind::Attack => "attack",
            ExperimentKind::Dynbench => "dynbench",
            ExperimentKind::Lemmas => "lemmas",
            ExperimentKind::Expansion => "expansion",
            ExperimentKind::Resolve => "resolve",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
    #[error("config file {path}: {message}")]
    File { path: String, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    /// Cell count; `None` sizes the machine to the structure.
    pub cells: Option<u64>,
    pub word_bits: u32,
    pub client_bits: u64,
    /// Seed of the random tape.
    pub tape_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnConfig {
    pub d: u32,
    pub r: u32,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubcubeConfig {
    pub d_prime: u32,
    pub k: usize,
    pub max_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochConfig {
    pub n_total: u64,
    pub floor_override: Option<u64>,
    pub beta_override: Option<u64>,
    /// Worst-case update probes fed to the default growth factor.
    pub update_probes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub pinsker_instances: u64,
    pub pinsker_max_side: usize,
    pub grid_max_population: u64,
    pub grid_max_probes: u64,
    pub mc_draws: u64,
    pub mc_population: u64,
    pub mc_sample: u64,
    pub mc_probes: u64,
    pub dis_trials: u64,
    pub dis_points: usize,
    pub dis_dim: u32,
    pub dis_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub d: u32,
    pub max_set_size: u32,
    pub radii: Vec<u32>,
    pub epsilon: f64,
}

/// One experiment run. Fields that a kind does not read are still echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: u64,
    pub machine: MachineConfig,
    pub ann: AnnConfig,
    pub subcubes: SubcubeConfig,
    pub epochs: EpochConfig,
    /// Operations per session (oblivcheck, dynbench).
    pub ops: u64,
    /// Chance that a random operation is an insert.
    pub insert_fraction: f64,
    /// Distinguisher threshold; `None` calibrates it.
    pub threshold: Option<u64>,
    pub calibration_trials: u64,
    pub probe_cap: Option<usize>,
    /// Sample sizes swept by `resolve`, as fractions of `|C_i|`.
    pub sample_fractions: Vec<f64>,
    pub lemmas: LemmaConfig,
    pub expansion: ExpansionConfig,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind, seed: u64) -> Self {
        let mut c = ExperimentConfig {
            kind,
            seed,
            trials: 100,
            machine: MachineConfig {
                cells: None,
                word_bits: 32,
                client_bits: 0,
                tape_seed: 0,
            },
            ann: AnnConfig {
                d: 16,
                r: 1,
                c: 2.0,
            },
            subcubes: SubcubeConfig {
                d_prime: 4,
                k: 3,
                max_attempts: 1000,
            },
            epochs: EpochConfig {
                n_total: 56,
                floor_override: Some(8),
                beta_override: Some(2),
                update_probes: 1,
            },
            ops: 256,
            insert_fraction: 0.5,
            threshold: None,
            calibration_trials: 100,
            probe_cap: None,
            sample_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            lemmas: LemmaConfig {
                pinsker_instances: 10_000,
                pinsker_max_side: 8,
                grid_max_population: 200,
                grid_max_probes: 5,
                mc_draws: 100_000,
                mc_population: 100,
                mc_sample: 10,
                mc_probes: 1,
                dis_trials: 200,
                dis_points: 256,
                dis_dim: 1024,
                dis_ratio: 0.4,
            },
            expansion: ExpansionConfig {
                d: 4,
                max_set_size: 4,
                radii: vec![1, 2],
                epsilon: 0.25,
            },
            timing: false,
        };
        match kind {
            ExperimentKind::Attack => c.trials = 1000,
            ExperimentKind::Dynbench => {
                c.trials = 1;
                c.ops = 1024;
            }
            ExperimentKind::Lemmas => c.trials = 1,
            ExperimentKind::Expansion => c.trials = 1000,
            ExperimentKind::Resolve => {
                c.trials = 4;
                c.machine.word_bits = 64;
                c.ann = AnnConfig {
                    d: 32,
                    r: 1,
                    c: 2.0,
                };
                c.subcubes.d_prime = 8;
                c.epochs = EpochConfig {
                    n_total: 63,
                    floor_override: Some(9),
                    beta_override: Some(2),
                    update_probes: 1,
                };
            }
            ExperimentKind::Oblivcheck => {}
        }
        c
    }

    /// Defaults for `kind` overlaid with whatever the JSON file sets.
    pub fn load(path: &Path, kind: ExperimentKind, seed: u64) -> Result<Self, ConfigError> {
        let file_err = |message: String| ConfigError::File {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        Self::from_json(&text, kind, seed).map_err(|e| match e {
            ConfigError::File { message, .. } => file_err(message),
            other => other,
        })
    }

    pub fn from_json(text: &str, kind: ExperimentKind, seed: u64) -> Result<Self, ConfigError> {
        let file_err = |message: String| ConfigError::File {
            path: "<inline>".into(),
            message,
        };
        let overlay: serde_json::Value =
            serde_json::from_str(text).map_err(|e| file_err(e.to_string()))?;
        if !overlay.is_object() {
            return Err(file_err("top level must be an object".into()));
        }
        if let Some(k) = overlay.get("kind") {
            let k: ExperimentKind =
                serde_json::from_value(k.clone()).map_err(|e| field("kind", e.to_string()))?;
            if k != kind {
                return Err(field(
                    "kind",
                    format!("config is for {k}, subcommand is {kind}"),
                ));
            }
        }
        let mut base = serde_json::to_value(Self::defaults(kind, seed)).expect("config serializes");
        merge(&mut base, overlay);
        base["seed"] = seed.into();
        serde_json::from_value(base).map_err(|e| file_err(e.to_string()))
    }

    pub fn ann_params(&self) -> AnnParams {
        AnnParams {
            d: self.ann.d,
            r: self.ann.r,
            c: self.ann.c,
        }
    }

    /// Checks every precondition the chosen kind relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(field("trials", "must be at least 1"));
        }
        if !(1..=64).contains(&self.machine.word_bits) {
            return Err(field("machine.word_bits", "must be in 1..=64"));
        }
        if !(0.0..=1.0).contains(&self.insert_fraction) {
            return Err(field("insert_fraction", "must be in [0, 1]"));
        }
        let needs_ann = !matches!(
            self.kind,
            ExperimentKind::Lemmas | ExperimentKind::Expansion
        );
        if needs_ann {
            self.ann_params()
                .validate()
                .map_err(|e| field("ann", e.to_string()))?;
            if self.ann.d + 1 > self.machine.word_bits {
                return Err(field(
                    "ann.d",
                    format!(
                        "needs d + 1 <= machine.word_bits ({})",
                        self.machine.word_bits
                    ),
                ));
            }
        }
        match self.kind {
            ExperimentKind::Oblivcheck | ExperimentKind::Dynbench => {
                if self.ops == 0 {
                    return Err(field("ops", "must be at least 1"));
                }
            }
            ExperimentKind::Attack | ExperimentKind::Resolve => {
                let s = &self.subcubes;
                if s.d_prime == 0 {
                    return Err(field("subcubes.d_prime", "must be at least 1"));
                }
                if self.ann.d < 4 * s.d_prime {
                    return Err(field(
                        "subcubes.d_prime",
                        format!("needs d >= 4 d' (d = {})", self.ann.d),
                    ));
                }
                if s.k == 0 {
                    return Err(field("subcubes.k", "must be at least 1"));
                }
                if self.kind == ExperimentKind::Resolve
                    && s.d_prime > crate::analysis::MAX_RESOLVE_DIM
                {
                    return Err(field("subcubes.d_prime", "too large to enumerate"));
                }
                if self.kind == ExperimentKind::Attack
                    && self.calibration_trials == 0
                    && self.threshold.is_none()
                {
                    return Err(field(
                        "calibration_trials",
                        "must be positive when no threshold is given",
                    ));
                }
                if self
                    .sample_fractions
                    .iter()
                    .any(|f| !(0.0..=1.0).contains(f))
                {
                    return Err(field("sample_fractions", "entries must be in [0, 1]"));
                }
                if self.epochs.n_total == 0 {
                    return Err(field("epochs.n_total", "must be at least 1"));
                }
            }
            ExperimentKind::Lemmas => {
                let l = &self.lemmas;
                if l.pinsker_max_side == 0 {
                    return Err(field("lemmas.pinsker_max_side", "must be at least 1"));
                }
                if 2 * l.mc_probes > l.mc_sample || l.mc_sample > l.mc_population {
                    return Err(field("lemmas.mc_sample", "needs 2 t <= s <= population"));
                }
                if l.dis_points < 2 || l.dis_dim == 0 {
                    return Err(field(
                        "lemmas.dis_points",
                        "needs at least two points of positive dimension",
                    ));
                }
            }
            ExperimentKind::Expansion => {
                let e = &self.expansion;
                if e.d == 0 || e.d > crate::ann::MAX_EXHAUSTIVE_DIM {
                    return Err(field(
                        "expansion.d",
                        format!("must be in 1..={}", crate::ann::MAX_EXHAUSTIVE_DIM),
                    ));
                }
                if e.max_set_size == 0 || e.max_set_size > 1 << e.d {
                    return Err(field("expansion.max_set_size", "must be in 1..=2^d"));
                }
                if !(e.epsilon > 0.0 && e.epsilon < 1.0) {
                    return Err(field("expansion.epsilon", "must be in (0, 1)"));
                }
            }
        }
        Ok(())
    }
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
