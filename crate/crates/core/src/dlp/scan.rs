use std::fs;
use std::path::PathBuf;

use chrono::{SubsecRound, Utc};
use thiserror::Error;

use super::{decide, Action, AuditLog, DataState, PolicyError, PolicyTable, ReceiverZone, TransferContext, Verdict};
use crate::classifiers::Model;
use crate::corpus::{tokenize, StopList};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("cannot append to audit log {path}: {source}")]
    Audit {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Transfer context shared by every file of a scan; format, size and time
/// are filled in per file.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTemplate {
    pub sender: String,
    pub receiver: String,
    pub data_state: DataState,
    pub receiver_zone: ReceiverZone,
}

impl Default for ContextTemplate {
    fn default() -> Self {
        Self {
            sender: "unknown".into(),
            receiver: "unknown".into(),
            data_state: DataState::InTransit,
            receiver_zone: ReceiverZone::External,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    pub verdicts: Vec<Verdict>,
}

impl ScanReport {
    /// True when any verdict blocks or quarantines its document.
    pub fn has_blocking(&self) -> bool {
        self.verdicts.iter().any(|v| v.action.is_blocking())
    }

    pub fn count(&self, action: Action) -> usize {
        self.verdicts.iter().filter(|v| v.action == action).count()
    }
}

/// Classifies each file and decides its action, appending one audit record
/// per file in input order. Unreadable files become error verdicts and the
/// scan continues; a policy that does not cover the model's categories
/// aborts before anything is logged.
pub fn scan(
    paths: &[PathBuf],
    model: &Model,
    policy: &PolicyTable,
    stoplist: &StopList,
    template: &ContextTemplate,
    audit: &AuditLog,
) -> Result<ScanReport, ScanError> {
    policy.check_categories(model.categories())?;
    let mut report = ScanReport::default();
    for path in paths {
        let id = path.display().to_string();
        // Audit timestamps carry millisecond precision.
        let now = Utc::now().trunc_subsecs(3);
        let verdict = match fs::read(path).map(String::from_utf8) {
            Ok(Ok(text)) => {
                let context = TransferContext {
                    sender: template.sender.clone(),
                    receiver: template.receiver.clone(),
                    format: path
                        .extension()
                        .map(|e| e.to_string_lossy().to_lowercase())
                        .unwrap_or_default(),
                    timestamp: now,
                    size_bytes: text.len() as u64,
                    data_state: template.data_state,
                    receiver_zone: template.receiver_zone,
                };
                let prediction = model.predict_tokens(&tokenize(&text, stoplist));
                decide(&id, &prediction, &context, policy, now)?
            }
            Ok(Err(_)) => Verdict::failure(&id, "file is not valid UTF-8 text", policy, now),
            Err(e) => Verdict::failure(&id, format!("cannot read file: {e}"), policy, now),
        };
        audit.append(&verdict).map_err(|source| ScanError::Audit {
            path: audit.path().to_path_buf(),
            source,
        })?;
        report.verdicts.push(verdict);
    }
    Ok(report)
}
