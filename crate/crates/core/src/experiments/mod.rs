//! Experiment runners behind the `cellprobe` binary.
//!
//! Every runner takes an [`ExperimentConfig`], fans its trials out over a
//! thread pool, and collects them in trial order, so a record depends only on
//! the config and its seed.

mod attack;
mod config;
mod dynbench;
mod expansion;
mod lemmas;
mod oblivcheck;
mod resolve;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use attack::{run_attack, AttackReport, AttackTrial, StructureAttack, TrialViews};
pub use config::{
    AnnConfig, ConfigError, EpochConfig, ExpansionConfig, ExperimentConfig, ExperimentKind,
    LemmaConfig, MachineConfig, SubcubeConfig,
};
pub use dynbench::{run_dynbench, DynbenchReport, DynbenchTrial};
pub use expansion::{run_expansion, ExpansionCase, ExpansionReport};
pub use lemmas::{
    dis_violation_expectation, run_lemmas, DisReport, LemmasReport, MonteCarloReport,
    PinskerReport, ResolutionGridReport,
};
pub use oblivcheck::{random_ops, run_oblivcheck, run_session, OblivcheckReport, PairResult};
pub use resolve::{run_resolve, ResolveEpoch, ResolveReport, ResolveTrial, SweepPoint};

use crate::machine::SessionTrace;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Machine(#[from] crate::machine::MachineError),
    #[error(transparent)]
    Structure(#[from] crate::structures::StructureError),
    #[error(transparent)]
    HardDist(#[from] crate::hard_dist::HardDistError),
    #[error(transparent)]
    Adversary(#[from] crate::adversary::AdversaryError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error(transparent)]
    Ann(#[from] crate::ann::AnnError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Everything a run produced, ready to serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

/// Output of one run: the record, optional CSV side files and an optional
/// session trace to dump.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub csv: Vec<(String, String)>,
    pub trace: Option<SessionTrace>,
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let start = Instant::now();
    let mut csv = Vec::new();
    let mut trace = None;
    let result = match config.kind {
        ExperimentKind::Oblivcheck => {
            let (report, session) = run_oblivcheck(config)?;
            trace = session;
            serde_json::to_value(report)?
        }
        ExperimentKind::Attack => {
            let report = run_attack(config)?;
            for s in [&report.bucketed, &report.oblivious] {
                let mut buf = Vec::new();
                crate::adversary::write_epoch_csv(&s.rows, &mut buf).expect("writing to memory");
                csv.push((
                    s.name.clone(),
                    String::from_utf8(buf).expect("csv is ascii"),
                ));
            }
            serde_json::to_value(report)?
        }
        ExperimentKind::Dynbench => {
            let (report, session) = run_dynbench(config)?;
            trace = session;
            serde_json::to_value(report)?
        }
        ExperimentKind::Lemmas => serde_json::to_value(run_lemmas(config)?)?,
        ExperimentKind::Expansion => serde_json::to_value(run_expansion(config)?)?,
        ExperimentKind::Resolve => serde_json::to_value(run_resolve(config)?)?,
    };
    let wall_clock_ms = config.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok(RunOutput {
        record: ResultRecord {
            experiment: config.kind,
            config: config.clone(),
            result,
            wall_clock_ms,
        },
        csv,
        trace,
    })
}

/// `<dir>/<stem>.<suffix>` next to `out`.
pub fn side_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "result".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes the record (pretty JSON plus newline), any CSV side files, and the
/// trace dump when a path for it is configured.
pub fn write_outputs(
    output: &RunOutput,
    out: Option<&Path>,
    trace_out: Option<&Path>,
) -> Result<String, ExperimentError> {
    let json = serde_json::to_string_pretty(&output.record)? + "\n";
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
        move |source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
    if let Some(out) = out {
        std::fs::write(out, &json).map_err(io(out))?;
        for (name, body) in &output.csv {
            let path = side_path(out, &format!("{name}.csv"));
            std::fs::write(&path, body).map_err(io(&path))?;
        }
    }
    if let Some(path) = trace_out {
        let dump = output
            .trace
            .as_ref()
            .map(SessionTrace::to_dump)
            .unwrap_or_else(|| SessionTrace::default().to_dump());
        std::fs::write(path, dump).map_err(io(path))?;
    }
    Ok(json)
}
